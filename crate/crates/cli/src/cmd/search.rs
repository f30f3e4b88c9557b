use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::Path;

use gestigo_core::{Split, VoName};
use gestigo_eval::{vo_search, VoSearchState};
use gestigo_net::{train, Model};

use crate::args::VoSearchArgs;
use crate::cmd::common::{create_dir, load_manifest, model_config, names, sources, train_config, vo_list, write};
use crate::error::{io, CliError, CliResult};

pub const STATE_FILE: &str = "search.tsv";
pub const CHOSEN_FILE: &str = "chosen.txt";

/// The saved state, if any, after checking it was made with this seed.
fn resume(path: &Path, seed: u64) -> CliResult<VoSearchState> {
    if !path.is_file() {
        return Ok(VoSearchState::default());
    }
    let text = io(fs::read_to_string(path), path)?;
    let stated = text.lines().find_map(|l| l.strip_prefix("# seed ")).map(str::trim);
    if stated != Some(seed.to_string().as_str()) {
        return Err(CliError::data(format!(
            "{} was written with seed {}, not {seed}; use another --out to start over",
            path.display(),
            stated.unwrap_or("(none)")
        )));
    }
    let state = VoSearchState::parse(&text)?;
    log::info!("resuming with {} trainings done", state.budget.total());
    Ok(state)
}

fn kind(vos: &[VoName]) -> &'static str {
    match vos.len() {
        1 => "single",
        2 => "pair",
        _ => "triple",
    }
}

pub fn run(a: VoSearchArgs) -> CliResult<()> {
    let m = load_manifest(&a.data)?;
    let candidates = vo_list("candidates", &a.candidates)?;
    let tc = train_config(&a.model, None)?;
    // Validate the shared settings once, before any training.
    let template = model_config(&m, candidates[..1].to_vec(), &a.model, a.model.master_px)?;
    Model::<f32>::new(template.clone(), a.model.seed)?;
    let keep_px = template.stage_sizes.iter().copied().max().unwrap_or(a.model.master_px);
    create_dir(&a.out)?;
    let state_path = a.out.join(STATE_FILE);
    let mut state = resume(&state_path, a.model.seed)?;
    if state.budget.total() == 0 {
        write(&state_path, &format!("# seed {}\n", a.model.seed))?;
    }

    let trainer = |vos: &[VoName]| -> CliResult<f64> {
        let cfg = model_config(&m, vos.to_vec(), &a.model, a.model.master_px)?;
        let data = sources(&m, vos, None, a.model.master_px, keep_px, &[Split::Train, Split::Val])?;
        let out = train(Model::new(cfg, a.model.seed)?, data[0].as_ref(), data[1].as_ref(), &tc)?;
        let acc = out.report.best.map_or(0.0, |b| b.val_accuracy);
        // Append as we go so an interrupted search can resume.
        let mut f = io(OpenOptions::new().append(true).open(&state_path), &state_path)?;
        io(writeln!(f, "{}\t{}\t{acc}", kind(vos), names(vos)), &state_path)?;
        Ok(acc)
    };
    let best = vo_search(&candidates, a.top_k_singles, a.top_k_pairs, &mut state, trainer)?;
    write(&state_path, &format!("# seed {}\n{}", a.model.seed, state.to_text()))?;
    write(&a.out.join(CHOSEN_FILE), &format!("{}\n", names(&best)))?;
    println!(
        "best triple {} ({:.4}) after {} trainings",
        names(&best),
        state.get(&best).unwrap_or(0.0),
        state.budget.total()
    );
    Ok(())
}
