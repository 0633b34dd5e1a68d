//! SVG drawing of a structure, optionally styled by a self-stress state.

use std::fmt::Write;

use serde::{Deserialize, Serialize};
use tensegrid_core::geom::Point;
use tensegrid_core::model::Structure;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RenderStyle {
    pub tension_width: f64,
    pub compression_width: f64,
    pub tension_dash: String,
    /// Draw compression dashed and tension solid instead.
    pub swap_dashes: bool,
    /// Scale each stroke by `|w| / max|w|`, floored at a quarter width.
    pub width_scale: bool,
    pub node_radius: f64,
    /// Drawing width in pixels; the height follows the aspect ratio.
    pub width: f64,
}

impl Default for RenderStyle {
    fn default() -> Self {
        Self {
            tension_width: 1.5,
            compression_width: 4.0,
            tension_dash: "6 4".into(),
            swap_dashes: false,
            width_scale: false,
            node_radius: 3.5,
            width: 640.0,
        }
    }
}

/// Relative magnitude under which a density is drawn as zero.
const ZERO_TOL: f64 = 1e-12;

/// One `line` per active member and one `circle` per node. `state` is
/// ordered like the active members; positive entries are tension.
pub fn render_svg(structure: &Structure, state: Option<&[f64]>, style: &RenderStyle) -> String {
    let points: Vec<Point> = structure.nodes().iter().map(|n| n.point).collect();
    let (lo, hi) = points.iter().fold(
        (Point { x: f64::MAX, y: f64::MAX }, Point { x: f64::MIN, y: f64::MIN }),
        |(lo, hi), p| (Point { x: lo.x.min(p.x), y: lo.y.min(p.y) }, Point { x: hi.x.max(p.x), y: hi.y.max(p.y) }),
    );
    let (span_x, span_y) = if points.is_empty() { (1.0, 1.0) } else { ((hi.x - lo.x).max(1e-9), (hi.y - lo.y).max(1e-9)) };
    let margin = 20.0;
    let scale = (style.width - 2.0 * margin) / span_x.max(span_y);
    let height = (span_y * scale + 2.0 * margin).ceil();
    let map = |p: Point| (margin + (p.x - lo.x) * scale, height - margin - (p.y - lo.y) * scale);

    let mut svg = String::new();
    let _ = writeln!(
        svg,
        r#"<svg xmlns="http://www.w3.org/2000/svg" version="1.1" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = style.width,
        h = height
    );
    let wmax = state.map(|s| s.iter().fold(0.0f64, |m, v| m.max(v.abs()))).unwrap_or(0.0);
    let _ = writeln!(svg, r#"<g class="members">"#);
    for (row, m) in structure.active_members().enumerate() {
        let (x1, y1) = map(points[m.ends.0.index()]);
        let (x2, y2) = map(points[m.ends.1.index()]);
        let w = state.and_then(|s| s.get(row).copied());
        let (class, width, dashed) = match w {
            Some(v) if wmax > 0.0 && v.abs() > ZERO_TOL * wmax => {
                let ratio = if style.width_scale { (v.abs() / wmax).max(0.25) } else { 1.0 };
                if v > 0.0 {
                    ("tension", style.tension_width * ratio, !style.swap_dashes)
                } else {
                    ("compression", style.compression_width * ratio, style.swap_dashes)
                }
            }
            Some(_) => ("zero", style.tension_width * 0.5, false),
            None => ("member", style.tension_width, false),
        };
        let dash = if dashed { format!(r#" stroke-dasharray="{}""#, style.tension_dash) } else { String::new() };
        let _ = writeln!(
            svg,
            r##"<line class="{class}" data-member="{id}" x1="{x1:.3}" y1="{y1:.3}" x2="{x2:.3}" y2="{y2:.3}" stroke="#222" stroke-width="{width:.3}"{dash}/>"##,
            id = m.id.0
        );
    }
    let _ = writeln!(svg, "</g>");
    let _ = writeln!(svg, r#"<g class="nodes">"#);
    for n in structure.nodes() {
        let (cx, cy) = map(n.point);
        let _ = writeln!(
            svg,
            r##"<circle data-node="{id}" cx="{cx:.3}" cy="{cy:.3}" r="{r}" fill="#c33"/>"##,
            id = n.id.0,
            r = style.node_radius
        );
    }
    let _ = writeln!(svg, "</g>");
    svg.push_str("</svg>\n");
    svg
}
