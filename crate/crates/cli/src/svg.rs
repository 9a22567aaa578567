//! Deterministic SVG rendering of planar bodies.

use mwlab::{ConvexBody, Error, Result};

const TILE: f64 = 160.0;
/// Points used for ellipse outlines.
pub const ELLIPSE_POINTS: usize = 256;

/// One labelled polygon per body, laid out on a square grid of tiles that
/// share a common scale.
pub fn emit_svg(bodies: &[(String, ConvexBody)]) -> Result<String> {
    let mut outlines = Vec::with_capacity(bodies.len());
    for (_, b) in bodies {
        if b.dim() != 2 {
            return Err(Error::DimensionMismatch { expected: 2, got: b.dim() });
        }
        outlines.push(b.outline(ELLIPSE_POINTS)?);
    }
    let r = outlines.iter().flatten().map(|v| v[0].abs().max(v[1].abs())).fold(0.0, f64::max);
    let scale = if r > 0.0 { 0.4 * TILE / r } else { 1.0 };
    let cols = (bodies.len() as f64).sqrt().ceil().max(1.0) as usize;
    let rows = bodies.len().div_ceil(cols).max(1);
    let (w, h) = (cols as f64 * TILE, rows as f64 * TILE);
    let mut out = format!("<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{w}\" height=\"{h}\" viewBox=\"0 0 {w} {h}\">\n");
    for (k, ((id, _), verts)) in bodies.iter().zip(&outlines).enumerate() {
        let cx = (k % cols) as f64 * TILE + 0.5 * TILE;
        let cy = (k / cols) as f64 * TILE + 0.5 * TILE;
        let pts: Vec<String> = verts.iter().map(|v| format!("{:.6},{:.6}", cx + scale * v[0], cy - scale * v[1])).collect();
        out.push_str(&format!("  <polygon id=\"{id}\" points=\"{}\" fill=\"none\" stroke=\"black\" stroke-width=\"1\"/>\n", pts.join(" ")));
        out.push_str(&format!("  <text x=\"{:.1}\" y=\"{:.1}\" font-size=\"10\" font-family=\"monospace\">{id}</text>\n", cx - 0.45 * TILE, cy - 0.4 * TILE));
    }
    out.push_str("</svg>\n");
    Ok(out)
}
