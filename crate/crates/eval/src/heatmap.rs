use gestigo_core::RasterImage;

/// Pixels per matrix cell.
pub const CELL_PX: usize = 16;

/// Row-normalized heat map: white for 0, dark blue for a whole row in one
/// cell. A one-pixel grid separates cells.
pub fn render_heatmap(confusion: &[Vec<u64>]) -> RasterImage {
    let n = confusion.len();
    let side = n * CELL_PX + 1;
    let mut img = RasterImage::new(side, side, [128, 128, 128]);
    for (i, row) in confusion.iter().enumerate() {
        let total: u64 = row.iter().sum();
        for (j, &count) in row.iter().enumerate() {
            let f = if total == 0 { 0.0 } else { count as f64 / total as f64 };
            let shade = |full: f64| (255.0 - f * (255.0 - full)).round() as u8;
            let color = [shade(8.0), shade(48.0), shade(107.0)];
            for y in i * CELL_PX + 1..(i + 1) * CELL_PX {
                for x in j * CELL_PX + 1..(j + 1) * CELL_PX {
                    img.put(x, y, color);
                }
            }
        }
    }
    img
}
