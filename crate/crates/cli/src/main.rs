fn main() {
    std::process::exit(gestigo_cli::run(std::env::args_os()));
}
