use std::sync::Arc;
use std::time::Duration;

use gestigo_core::dataset::read_sequence_file;
use gestigo_core::{load_sequence, parse_dataset, JointSchema};
use gestigo_service::replay;

use crate::args::ReplayArgs;
use crate::cmd::common::runtime;
use crate::error::{CliError, CliResult};

pub fn run(a: ReplayArgs, threads: Option<usize>) -> CliResult<()> {
    let seq = match (&a.sequence, a.dataset) {
        (Some(path), _) => {
            let schema = JointSchema::by_name(&a.schema)
                .ok_or_else(|| CliError::data(format!("unknown joint schema `{}`", a.schema)))?;
            read_sequence_file(path, Arc::new(schema), a.leading_index)?
        }
        (None, Some(dataset)) => {
            let root = a.root.as_ref().expect("clap requires --root with --dataset");
            let m = parse_dataset(dataset, root)?;
            let entry = a.entry.expect("clap requires --entry with --dataset");
            if entry >= m.len() {
                return Err(CliError::data(format!("--entry {entry} but the dataset has {} gestures", m.len())));
            }
            load_sequence(&m, entry)?
        }
        (None, None) => return Err(CliError::data("give --sequence FILE or --dataset with --root and --entry")),
    };
    let msg = runtime(threads)?.block_on(replay(&a.endpoint, &seq, a.fps, Duration::from_secs(a.timeout)))?;
    println!("{}", serde_json::to_string(&msg).expect("prediction messages serialize"));
    Ok(())
}
