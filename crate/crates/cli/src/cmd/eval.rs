use gestigo_core::{RasterImage, Split};
use gestigo_eval::evaluate;
use gestigo_net::{ImageSource, Model};

use crate::args::EvalArgs;
use crate::cmd::common::{check_encoded, load_manifest, names, sources, vo_list};
use crate::error::{CliError, CliResult};

/// Relabels a source into the model's class order.
struct Relabelled {
    inner: Box<dyn ImageSource>,
    map: Vec<usize>,
}

impl ImageSource for Relabelled {
    fn len(&self) -> usize {
        self.inner.len()
    }

    fn label(&self, i: usize) -> usize {
        self.map[self.inner.label(i)]
    }

    fn images(&self, i: usize) -> gestigo_net::Result<Vec<RasterImage>> {
        self.inner.images(i)
    }
}

pub fn run(a: EvalArgs) -> CliResult<()> {
    let model = Model::load(&a.model)?;
    let cfg = model.config().clone();
    let vos = match &a.vos {
        Some(v) => vo_list("vos", v)?,
        None => cfg.vos.clone(),
    };
    let m = load_manifest(&a.data)?;
    if m.dataset_id != cfg.dataset {
        return Err(CliError::data(format!("the model was trained on {}, not {}", cfg.dataset, m.dataset_id)));
    }
    // Classes are matched by name so a filtered selection lines up.
    let map = m
        .class_names
        .iter()
        .map(|n| {
            cfg.class_names
                .iter()
                .position(|c| c == n)
                .ok_or_else(|| CliError::data(format!("class `{n}` is not one the model knows")))
        })
        .collect::<CliResult<Vec<_>>>()?;
    if vos != cfg.vos {
        return Err(CliError::data(format!(
            "views {} do not match the model's {}",
            names(&vos),
            names(&cfg.vos)
        )));
    }
    if let Some(dir) = &a.encoded {
        check_encoded(dir, &m)?;
    }
    let inner = sources(&m, &cfg.vos, a.encoded.as_deref(), cfg.master_px, cfg.eval_px, &[Split::Val])?.remove(0);
    let report = evaluate(&model, &Relabelled { inner, map }, &vos, a.seed, 32)?;
    report.write(&a.out)?;
    let text = report.to_text();
    if let Some(line) = text.lines().find(|l| l.starts_with("accuracy\t")) {
        println!("{line}");
    }
    Ok(())
}
