//! Grayscale heatmap rendering of graphon grids: value 0 maps to white and
//! 1 to black, rasterized as a PNG and embedded in an SVG wrapper via a
//! base64 data URI, so outputs are single self-contained files with no
//! plotting dependency.

use crate::error::{Error, Result};
use crate::graphon::GraphonGrid;
use base64::engine::general_purpose::STANDARD as BASE64;
use base64::Engine as _;
use image::{GrayImage, ImageFormat, Luma};
use std::io::Cursor;
use std::path::Path;

/// Renders the grid as PNG bytes: pixel (x=j, y=i) is the cell (i, j),
/// intensity (1 − value)·255 rounded.
pub fn grid_to_png(grid: &GraphonGrid) -> Result<Vec<u8>> {
    let r = grid.resolution;
    if r == 0 {
        return Err(Error::invalid("cannot render an empty grid"));
    }
    let mut img = GrayImage::new(r as u32, r as u32);
    for i in 0..r {
        for j in 0..r {
            let v = grid.values[[i, j]].clamp(0.0, 1.0);
            let shade = ((1.0 - v) * 255.0).round() as u8;
            img.put_pixel(j as u32, i as u32, Luma([shade]));
        }
    }
    let mut bytes = Cursor::new(Vec::new());
    img.write_to(&mut bytes, ImageFormat::Png)
        .map_err(|e| Error::invalid(format!("PNG encoding failed: {e}")))?;
    Ok(bytes.into_inner())
}

/// Wraps the PNG raster in a minimal SVG document.
pub fn grid_to_svg(grid: &GraphonGrid) -> Result<String> {
    let png = grid_to_png(grid)?;
    let r = grid.resolution;
    Ok(format!(
        concat!(
            "<svg xmlns=\"http://www.w3.org/2000/svg\" ",
            "xmlns:xlink=\"http://www.w3.org/1999/xlink\" ",
            "width=\"{r}\" height=\"{r}\" viewBox=\"0 0 {r} {r}\">",
            "<image width=\"{r}\" height=\"{r}\" ",
            "image-rendering=\"pixelated\" ",
            "xlink:href=\"data:image/png;base64,{data}\"/></svg>\n"
        ),
        r = r,
        data = BASE64.encode(&png)
    ))
}

/// Writes the SVG heatmap to disk.
pub fn save_heatmap(grid: &GraphonGrid, path: &Path) -> Result<()> {
    std::fs::write(path, grid_to_svg(grid)?)?;
    Ok(())
}
