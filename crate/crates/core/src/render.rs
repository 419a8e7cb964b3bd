//! Pictures of explanations: 8-bit PGM and SVG heat grids for saliency,
//! node-link SVG for soft trees, and SVG reliability plots for studies.
//!
//! All output is a pure function of the input, with fixed-precision number
//! formatting, so renders are byte-identical across runs.

use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::eval::CalibrationBin;
use crate::explainers::{Normalization, SaliencyVector, SoftTree};

/// Square grid when `d` is a perfect square, otherwise one row.
pub fn grid_shape(d: usize) -> (usize, usize) {
    let side = (d as f64).sqrt().round() as usize;
    if side * side == d {
        (side, side)
    } else {
        (d, 1)
    }
}

fn shape_for(s: &SaliencyVector, shape: Option<(usize, usize)>) -> Result<(usize, usize)> {
    let (w, h) = shape.unwrap_or_else(|| grid_shape(s.len()));
    if w * h != s.len() || s.is_empty() {
        return Err(Error::InvalidArgument(format!(
            "a {w}x{h} grid cannot hold {} values",
            s.len()
        )));
    }
    Ok((w, h))
}

/// Binary greyscale image, row-major, max-one normalized; negative values
/// render black.
pub fn saliency_pgm(s: &SaliencyVector, shape: Option<(usize, usize)>) -> Result<Vec<u8>> {
    let (w, h) = shape_for(s, shape)?;
    let norm = s.normalized(Normalization::MaxOne);
    let mut out = format!("P5\n{w} {h}\n255\n").into_bytes();
    out.extend(
        norm.values
            .iter()
            .map(|v| (v.clamp(0.0, 1.0) * 255.0).round() as u8),
    );
    Ok(out)
}

/// Red for positive, blue for negative, white at zero.
fn diverging(v: f64) -> String {
    let v = v.clamp(-1.0, 1.0);
    let fade = |t: f64| (255.0 * (1.0 - t.abs())).round() as u8;
    if v >= 0.0 {
        format!("#ff{0:02x}{0:02x}", fade(v))
    } else {
        format!("#{0:02x}{0:02x}ff", fade(v))
    }
}

const CELL: usize = 24;

pub fn saliency_svg(s: &SaliencyVector, shape: Option<(usize, usize)>) -> Result<String> {
    let (w, h) = shape_for(s, shape)?;
    let norm = s.normalized(Normalization::MaxOne);
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{}" height="{}">"#,
        w * CELL,
        h * CELL
    );
    for (i, v) in norm.values.iter().enumerate() {
        let _ = writeln!(
            svg,
            r#"<rect x="{}" y="{}" width="{CELL}" height="{CELL}" fill="{}"><title>feature {i}: {:.6}</title></rect>"#,
            (i % w) * CELL,
            (i / w) * CELL,
            diverging(*v),
            s.values[i]
        );
    }
    svg.push_str("</svg>\n");
    Ok(svg)
}

/// Node-link diagram. Each inner node shows its gate weights as a strip of
/// coloured cells; each leaf shows its class distribution as bars.
pub fn tree_svg(tree: &SoftTree) -> String {
    let leaves = tree.leaves.len();
    let strip = tree.dim().max(1);
    let cell = 8usize;
    let node_w = (strip * cell).max(tree.class_count() * cell) + 8;
    let col_w = node_w + 16;
    let row_h = 70usize;
    let width = leaves * col_w;
    let height = (tree.depth + 1) * row_h + 20;
    // x centre of node (level, position)
    let centre = |level: usize, pos: usize| -> f64 {
        let span = (leaves >> level) as f64 * col_w as f64;
        span * (pos as f64 + 0.5)
    };
    let y = |level: usize| 10 + level * row_h;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{width}" height="{height}" font-family="monospace" font-size="9">"#
    );
    let level_of = |i: usize| (usize::BITS - 1 - (i + 1).leading_zeros()) as usize;
    for i in 0..tree.inner.len() {
        let (l, p) = (level_of(i), i + 1 - (1 << level_of(i)));
        for child in [2 * p, 2 * p + 1] {
            let _ = writeln!(
                svg,
                r##"<line x1="{:.1}" y1="{}" x2="{:.1}" y2="{}" stroke="#888"/>"##,
                centre(l, p),
                y(l) + 20,
                centre(l + 1, child),
                y(l + 1)
            );
        }
    }
    for (i, node) in tree.inner.iter().enumerate() {
        let (l, p) = (level_of(i), i + 1 - (1 << level_of(i)));
        let x0 = centre(l, p) - (strip * cell) as f64 / 2.0;
        let peak = node.weights.iter().fold(0.0f64, |m, w| m.max(w.abs()));
        let peak = if peak > 0.0 { peak } else { 1.0 };
        for (j, wv) in node.weights.iter().enumerate() {
            let _ = writeln!(
                svg,
                r##"<rect x="{:.1}" y="{}" width="{cell}" height="12" fill="{}" stroke="#444" stroke-width="0.3"><title>node {i} w{j} = {:.6}</title></rect>"##,
                x0 + (j * cell) as f64,
                y(l),
                diverging(wv / peak),
                wv
            );
        }
        let _ = writeln!(
            svg,
            r#"<text x="{:.1}" y="{}" text-anchor="middle">b={:.3}</text>"#,
            centre(l, p),
            y(l) + 22,
            node.bias
        );
    }
    for (p, leaf) in tree.leaves.iter().enumerate() {
        let l = tree.depth;
        let x0 = centre(l, p) - (leaf.len() * cell) as f64 / 2.0;
        for (c, prob) in leaf.iter().enumerate() {
            let bar = 30.0 * prob;
            let _ = writeln!(
                svg,
                r##"<rect x="{:.1}" y="{:.2}" width="{}" height="{bar:.2}" fill="#4a7"><title>leaf {p} class {c}: {prob:.6}</title></rect>"##,
                x0 + (c * cell) as f64,
                y(l) as f64 + 30.0 - bar,
                cell - 1
            );
        }
        let _ = writeln!(
            svg,
            r##"<line x1="{:.1}" y1="{}" x2="{:.1}" y2="{}" stroke="#444"/>"##,
            x0,
            y(l) + 30,
            x0 + (leaf.len() * cell) as f64,
            y(l) + 30
        );
    }
    svg.push_str("</svg>\n");
    svg
}

/// Reliability diagram: realized accuracy against mean confidence per bin,
/// with the diagonal for reference.
pub fn calibration_svg(bins: &[CalibrationBin]) -> String {
    let size = 300.0;
    let pad = 30.0;
    let px = |v: f64| pad + v * size;
    let py = |v: f64| pad + (1.0 - v) * size;
    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{0}" height="{0}" font-family="monospace" font-size="10">"#,
        size + 2.0 * pad
    );
    let _ = writeln!(
        svg,
        r##"<rect x="{pad}" y="{pad}" width="{size}" height="{size}" fill="none" stroke="#444"/>"##
    );
    let _ = writeln!(
        svg,
        r##"<line x1="{:.1}" y1="{:.1}" x2="{:.1}" y2="{:.1}" stroke="#bbb" stroke-dasharray="4 3"/>"##,
        px(0.0),
        py(0.0),
        px(1.0),
        py(1.0)
    );
    for b in bins {
        if let Some(acc) = b.accuracy {
            let _ = writeln!(
                svg,
                r##"<rect x="{:.1}" y="{:.1}" width="{:.1}" height="{:.1}" fill="#7ab" fill-opacity="0.6"><title>[{:.1}, {:.1}): accuracy {acc:.6}, weight {:.3}</title></rect>"##,
                px(b.lower),
                py(acc),
                (b.upper - b.lower) * size,
                acc * size,
                b.lower,
                b.upper,
                b.weight
            );
        }
        if let (Some(c), Some(acc)) = (b.mean_confidence, b.accuracy) {
            let _ = writeln!(
                svg,
                r##"<circle cx="{:.1}" cy="{:.1}" r="3" fill="#c33"/>"##,
                px(c),
                py(acc)
            );
        }
    }
    let _ = writeln!(
        svg,
        r#"<text x="{:.1}" y="{:.1}" text-anchor="middle">confidence</text>"#,
        pad + size / 2.0,
        size + 2.0 * pad - 8.0
    );
    svg.push_str("</svg>\n");
    svg
}
