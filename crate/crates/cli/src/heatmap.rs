//! PNG heatmaps of time-scale fields.
//!
//! Rows are scales (already evenly spaced in log2), drawn top to bottom
//! from the smallest scale, so the scale axis increases downward. Each grid
//! cell becomes a block of pixels; no interpolation is done.

use std::io::{self, Write};

use wavelet_comove::{Matrix, ScaleGrid};

/// Pixel colour.
pub type Rgb = [u8; 3];

pub const WHITE: Rgb = [255, 255, 255];
pub const BLACK: Rgb = [0, 0, 0];
/// Colour of undefined (NaN) cells.
pub const GREY: Rgb = [128, 128, 128];

const RAMP: [Rgb; 3] = [[0, 0, 255], [255, 255, 0], [255, 0, 0]];

// target image size; cells are whole pixels so the result may be larger
const TARGET_WIDTH: usize = 800;
const TARGET_HEIGHT: usize = 400;

/// Blue → yellow → red ramp over `[0, 1]`; values outside are clamped.
pub fn ramp(v: f64) -> Rgb {
    if v.is_nan() {
        return GREY;
    }
    let v = v.clamp(0.0, 1.0);
    let (lo, hi, t) = if v <= 0.5 {
        (RAMP[0], RAMP[1], v * 2.0)
    } else {
        (RAMP[1], RAMP[2], (v - 0.5) * 2.0)
    };
    let mut out = [0; 3];
    for k in 0..3 {
        out[k] = (f64::from(lo[k]) + t * (f64::from(hi[k]) - f64::from(lo[k]))).round() as u8;
    }
    out
}

/// Rasterised heatmap before encoding.
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub cell_width: usize,
    pub cell_height: usize,
    pub pixels: Vec<Rgb>,
}

impl Raster {
    pub fn pixel(&self, x: usize, y: usize) -> Rgb {
        self.pixels[y * self.width + x]
    }

    fn set(&mut self, x: usize, y: usize, c: Rgb) {
        if x < self.width && y < self.height {
            self.pixels[y * self.width + x] = c;
        }
    }
}

/// Builds the raster: coloured cells, black outlines around masked
/// regions, then the white cone-of-influence curve.
///
/// # Panics
///
/// Panics if the field, grid, coi and mask shapes disagree.
pub fn rasterize(field: &Matrix<f64>, grid: &ScaleGrid, coi: &[f64], mask: Option<&Matrix<bool>>) -> Raster {
    let (rows, cols) = field.shape();
    assert_eq!(rows, grid.num_scales(), "field rows must match the grid");
    assert_eq!(cols, coi.len(), "coi length must match the field");
    if let Some(m) = mask {
        assert_eq!(m.shape(), field.shape(), "mask shape must match the field");
    }
    let cell_width = TARGET_WIDTH.div_ceil(cols.max(1)).max(1);
    let cell_height = TARGET_HEIGHT.div_ceil(rows.max(1)).max(1);
    let width = cols * cell_width;
    let height = rows * cell_height;
    let mut raster = Raster {
        width,
        height,
        cell_width,
        cell_height,
        pixels: vec![GREY; width * height],
    };

    for r in 0..rows {
        for c in 0..cols {
            let color = ramp(field[(r, c)]);
            for y in r * cell_height..(r + 1) * cell_height {
                for x in c * cell_width..(c + 1) * cell_width {
                    raster.set(x, y, color);
                }
            }
        }
    }

    if let Some(m) = mask {
        let inside = |r: isize, c: isize| {
            r >= 0 && c >= 0 && (r as usize) < rows && (c as usize) < cols && m[(r as usize, c as usize)]
        };
        for r in 0..rows {
            for c in 0..cols {
                if !m[(r, c)] {
                    continue;
                }
                let (ri, ci) = (r as isize, c as isize);
                let (x0, x1) = (c * cell_width, (c + 1) * cell_width - 1);
                let (y0, y1) = (r * cell_height, (r + 1) * cell_height - 1);
                if !inside(ri - 1, ci) {
                    (x0..=x1).for_each(|x| raster.set(x, y0, BLACK));
                }
                if !inside(ri + 1, ci) {
                    (x0..=x1).for_each(|x| raster.set(x, y1, BLACK));
                }
                if !inside(ri, ci - 1) {
                    (y0..=y1).for_each(|y| raster.set(x0, y, BLACK));
                }
                if !inside(ri, ci + 1) {
                    (y0..=y1).for_each(|y| raster.set(x1, y, BLACK));
                }
            }
        }
    }

    // cone of influence: pixel row of the scale equal to the boundary
    let coi_y: Vec<Option<isize>> = coi
        .iter()
        .map(|&b| {
            if !(b > 0.0) {
                return Some(-1);
            }
            let row = (b / grid.s0()).log2() / grid.dj();
            let y = (row + 0.5) * cell_height as f64;
            (y < height as f64).then_some(y.floor() as isize)
        })
        .collect();
    for (c, y) in coi_y.iter().enumerate() {
        let Some(y) = *y else { continue };
        let next = coi_y.get(c + 1).copied().flatten().unwrap_or(y);
        for x in c * cell_width..(c + 1) * cell_width {
            if y >= 0 {
                raster.set(x, y as usize, WHITE);
            }
        }
        // vertical joins keep the curve connected between columns
        let (lo, hi) = (y.min(next).max(0), y.max(next));
        for yy in lo..=hi {
            raster.set((c + 1) * cell_width - 1, yy as usize, WHITE);
        }
    }
    raster
}

/// Renders a field in `[0, 1]` as an RGB PNG.
pub fn render_heatmap<W: Write>(
    field: &Matrix<f64>,
    grid: &ScaleGrid,
    coi: &[f64],
    mask: Option<&Matrix<bool>>,
    sink: W,
) -> io::Result<()> {
    let raster = rasterize(field, grid, coi, mask);
    let mut encoder = png::Encoder::new(sink, raster.width as u32, raster.height as u32);
    encoder.set_color(png::ColorType::Rgb);
    encoder.set_depth(png::BitDepth::Eight);
    let mut writer = encoder.write_header().map_err(io::Error::other)?;
    let data: Vec<u8> = raster.pixels.iter().flatten().copied().collect();
    writer.write_image_data(&data).map_err(io::Error::other)?;
    writer.finish().map_err(io::Error::other)
}
