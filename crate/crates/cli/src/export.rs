use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use domex_core::exchange::{ExchangeCloud, Piece};
use domex_core::verify::TorusCover;
use domex_core::Substitution;
use image::{Rgb, RgbImage};
use serde::Serialize;

type Result<T> = std::result::Result<T, Box<dyn std::error::Error>>;

/// Points drawn in the SVG figure.
const SVG_POINTS: usize = 40_000;
const SVG_SIZE: f64 = 800.0;
/// Width of the PNG strip for one-dimensional exchanges.
const STRIP_WIDTH: usize = 2048;
const STRIP_HEIGHT: u32 = 64;

pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text)?;
    Ok(())
}

/// Rows `j, a, k, F(j)…` for the first `rows` positions (all when 0).
pub fn write_cloud_csv(path: &Path, cloud: &ExchangeCloud, xi: &Substitution, rows: usize) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["j".to_string(), "a".to_string(), "k".to_string()];
    header.extend((1..=cloud.dim).map(|r| format!("x{r}")));
    w.write_record(&header)?;
    let n = if rows == 0 { cloud.len() } else { rows.min(cloud.len()) };
    let alphabet = xi.alphabet();
    for j in 0..n {
        let piece = &cloud.pieces[cloud.labels[j] as usize];
        let mut rec = vec![j.to_string(), alphabet.symbol(piece.letter).to_string(), piece.floor.to_string()];
        rec.extend(cloud.point(j).iter().map(|x| format!("{x:.15e}")));
        w.write_record(&rec)?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Serialize)]
pub struct PieceSummary<'a> {
    pub level: usize,
    pub depth: usize,
    pub dim: usize,
    pub points: usize,
    pub alpha: &'a [f64],
    pub merged_piece_count: usize,
    pub pieces: &'a [Piece],
}

impl<'a> PieceSummary<'a> {
    pub fn new(cloud: &'a ExchangeCloud) -> Self {
        Self {
            level: cloud.level,
            depth: cloud.depth,
            dim: cloud.dim,
            points: cloud.len(),
            alpha: &cloud.alpha,
            merged_piece_count: cloud.merged_piece_count(),
            pieces: &cloud.pieces,
        }
    }
}

fn fnv1a(text: &str) -> u64 {
    text.bytes()
        .fold(0xcbf2_9ce4_8422_2325, |h, b| (h ^ u64::from(b)).wrapping_mul(0x0100_0000_01b3))
}

/// Color of a piece label: hue from a hash of the label.
pub fn label_color(label: &str) -> [u8; 3] {
    let h = (fnv1a(label) % 360) as f64;
    let (s, l) = (0.65, 0.5);
    let c = (1.0 - (2.0 * l - 1.0f64).abs()) * s;
    let x = c * (1.0 - ((h / 60.0) % 2.0 - 1.0).abs());
    let m = l - c / 2.0;
    let (r, g, b) = match (h / 60.0) as u32 {
        0 => (c, x, 0.0),
        1 => (x, c, 0.0),
        2 => (0.0, c, x),
        3 => (0.0, x, c),
        4 => (x, 0.0, c),
        _ => (c, 0.0, x),
    };
    [r, g, b].map(|v| ((v + m) * 255.0).round() as u8)
}

/// One group of points per piece. One-dimensional exchanges draw each piece
/// on its own row; higher dimensions use the first two coordinates.
pub fn render_svg(cloud: &ExchangeCloud) -> String {
    let n = cloud.len();
    let stride = n.div_ceil(SVG_POINTS).max(1);
    let two_d = cloud.dim >= 2;
    let (mut lo, mut hi) = ([f64::INFINITY; 2], [f64::NEG_INFINITY; 2]);
    for j in 0..n {
        let p = cloud.point(j);
        for r in 0..cloud.dim.min(2) {
            lo[r] = lo[r].min(p[r]);
            hi[r] = hi[r].max(p[r]);
        }
    }
    let rows = cloud.pieces.len().max(1) as f64;
    let scale_x = SVG_SIZE / (hi[0] - lo[0]).max(1e-12);
    let scale_y = if two_d { SVG_SIZE / (hi[1] - lo[1]).max(1e-12) } else { 1.0 };
    let height = if two_d { SVG_SIZE } else { 12.0 * rows };

    let mut groups: Vec<String> = vec![String::new(); cloud.pieces.len()];
    for j in (0..n).step_by(stride) {
        let l = cloud.labels[j] as usize;
        let p = cloud.point(j);
        let x = (p[0] - lo[0]) * scale_x;
        let y = if two_d { SVG_SIZE - (p[1] - lo[1]) * scale_y } else { 12.0 * l as f64 + 6.0 };
        let _ = write!(groups[l], "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"0.9\"/>");
    }

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{SVG_SIZE}\" height=\"{height}\" viewBox=\"0 0 {SVG_SIZE} {height}\">"
    );
    let _ = writeln!(svg, "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>");
    for (piece, body) in cloud.pieces.iter().zip(&groups) {
        let [r, g, b] = label_color(&piece.label);
        let _ = writeln!(
            svg,
            "<g data-piece=\"{}\" fill=\"#{r:02x}{g:02x}{b:02x}\">{body}</g>",
            piece.label
        );
    }
    svg.push_str("</svg>\n");
    svg
}

fn multiplicity_color(m: u16) -> Rgb<u8> {
    Rgb(match m {
        0 => [0, 0, 0],
        1 => [68, 119, 170],
        2 => [238, 102, 119],
        3 => [34, 136, 51],
        4 => [204, 187, 68],
        _ => [255, 255, 255],
    })
}

/// Heatmap of the torus multiplicity grid: the full grid in two dimensions,
/// a strip of bins in one. Returns `None` above two dimensions.
pub fn torus_png(cover: &TorusCover, dim: usize) -> Option<RgbImage> {
    match dim {
        1 => {
            let width = cover.res.min(STRIP_WIDTH);
            let per = cover.res / width;
            let img = RgbImage::from_fn(width as u32, STRIP_HEIGHT, |x, _| {
                let start = x as usize * per;
                let m = cover.multiplicity[start..start + per].iter().copied().max().unwrap_or(0);
                multiplicity_color(m)
            });
            Some(img)
        }
        2 => {
            let res = cover.res as u32;
            Some(RgbImage::from_fn(res, res, |x, y| {
                let row = (res - 1 - y) as usize;
                multiplicity_color(cover.multiplicity[row * cover.res + x as usize])
            }))
        }
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn colors_are_stable() {
        assert_eq!(label_color("(1,1):0"), label_color("(1,1):0"));
        assert_ne!(label_color("(1,1):0"), label_color("(2,1):0"));
    }
}
