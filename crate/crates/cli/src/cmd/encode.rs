use gestigo_core::{load_sequence, RenderConfig};
use gestigo_net::data::render_views;
use rayon::prelude::*;

use crate::args::EncodeArgs;
use crate::cmd::common::{encoded_dir, image_path, load_manifest, names, vo_list, write, write_png, ENCODE_INFO_FILE, MANIFEST_FILE};
use crate::error::CliResult;

/// Renders every entry from every requested view. Output depends only on
/// the inputs, so running twice rewrites identical files.
pub fn run(a: EncodeArgs) -> CliResult<()> {
    let m = load_manifest(&a.data)?;
    let vos = vo_list("vos", &a.vos)?;
    let cfg = RenderConfig::with_size(a.size);
    cfg.validate()?;
    (0..m.len()).into_par_iter().try_for_each(|i| -> CliResult<()> {
        let seq = load_sequence(&m, i)?;
        let images = render_views(&seq, m.dataset_id, &vos, &cfg)?;
        for (vo, img) in vos.iter().zip(&images) {
            write_png(img, &image_path(&a.out, &m, *vo, i))?;
        }
        Ok(())
    })?;
    let dir = encoded_dir(&a.out, &m);
    write(&dir.join(MANIFEST_FILE), &m.to_index())?;
    write(&dir.join(ENCODE_INFO_FILE), &format!("size\t{}\nvos\t{}\n", a.size, names(&vos)))?;
    println!("encoded {} gestures x {} views into {}", m.len(), vos.len(), dir.display());
    Ok(())
}
