use gestigo_core::synth::{generate_dataset, SynthOptions};

use crate::args::SynthArgs;
use crate::cmd::common::usize_list;
use crate::error::CliResult;

pub fn run(a: SynthArgs) -> CliResult<()> {
    let opts = SynthOptions {
        seed: a.seed,
        dhg_gestures: a.gestures.as_deref().map(|g| usize_list("gestures", g)).transpose()?,
    };
    let n = generate_dataset(a.dataset, &a.out, &opts)?;
    println!("wrote {n} sequences to {}", a.out.display());
    Ok(())
}
