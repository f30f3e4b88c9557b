use gestigo_core::Split;
use gestigo_net::{train, Model};

use crate::args::TrainArgs;
use crate::cmd::common::{check_encoded, create_dir, load_manifest, model_config, sources, stream_vos, train_config};
use crate::error::CliResult;

pub const CHECKPOINT_FILE: &str = "model.ckpt";

pub fn run(a: TrainArgs) -> CliResult<()> {
    let m = load_manifest(&a.data)?;
    let vos = stream_vos(&a.model)?;
    let master_px = match &a.encoded {
        Some(dir) => check_encoded(dir, &m)?,
        None => a.model.master_px,
    };
    let cfg = model_config(&m, vos.clone(), &a.model, master_px)?;
    let keep_px = cfg.stage_sizes.iter().copied().max().unwrap_or(master_px);
    create_dir(&a.out)?;
    let ckpt = a.out.join(CHECKPOINT_FILE);
    let tc = train_config(&a.model, Some(ckpt.clone()))?;
    let data = sources(&m, &vos, a.encoded.as_deref(), master_px, keep_px, &[Split::Train, Split::Val])?;
    let model = Model::new(cfg, a.model.seed)?;
    let mut tasks: Vec<String> = vos.iter().map(|v| v.as_str().to_string()).collect();
    tasks.push("tuner".into());
    match train(model, data[0].as_ref(), data[1].as_ref(), &tc) {
        Ok(out) => {
            out.report.write(&a.out, &tasks)?;
            out.model.save(&ckpt)?;
            if let Some(b) = &out.report.best {
                println!(
                    "best val accuracy {:.4} at stage {} epoch {} ({} px); checkpoint {}",
                    b.val_accuracy,
                    b.stage,
                    b.epoch,
                    b.size,
                    ckpt.display()
                );
            }
            Ok(())
        }
        Err(failure) => {
            failure.report.write(&a.out, &tasks)?;
            Err(failure.into())
        }
    }
}
