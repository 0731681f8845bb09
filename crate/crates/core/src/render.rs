//! SVG drawings of tails and regularized families.

use std::fmt::Write;

use crate::dyadic::DyadicSquare;
use crate::regularize::RegularizedFamily;
use crate::tail::TailFamily;

#[derive(Debug, Clone, PartialEq)]
pub struct Style {
    /// Width and height of the canvas in pixels.
    pub size: f64,
    pub stroke_width: f64,
    pub fill_opacity: f64,
}

impl Default for Style {
    fn default() -> Self {
        Self {
            size: 800.0,
            stroke_width: 0.5,
            fill_opacity: 0.55,
        }
    }
}

const PALETTE: [&str; 10] = [
    "#4e79a7", "#f28e2b", "#e15759", "#76b7b2", "#59a14f", "#edc948", "#b07aa1", "#ff9da7", "#9c755f", "#bab0ac",
];

fn color(i: usize) -> String {
    if i < PALETTE.len() {
        PALETTE[i].to_string()
    } else {
        // golden-angle hues past the palette
        let h = (i as f64 * 137.507_764) % 360.0;
        format!("hsl({h:.1},55%,55%)")
    }
}

/// Cells tagged with a color class, drawn with `y` pointing up.
fn draw(cells: &[(DyadicSquare, usize)], classes: usize, prefix: &str, style: &Style) -> String {
    let bounds = cells.iter().fold(None, |acc: Option<(f64, f64, f64, f64)>, (c, _)| {
        let (x0, y0) = (c.col as f64 * c.side_f64(), c.row as f64 * c.side_f64());
        let (x1, y1) = (x0 + c.side_f64(), y0 + c.side_f64());
        Some(match acc {
            None => (x0, y0, x1, y1),
            Some(b) => (b.0.min(x0), b.1.min(y0), b.2.max(x1), b.3.max(y1)),
        })
    });
    let (bx0, by0, bx1, by1) = bounds.unwrap_or((0.0, 0.0, 1.0, 1.0));
    let extent = (bx1 - bx0).max(by1 - by0);
    let scale = style.size / extent;

    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{0:.0}" height="{0:.0}" viewBox="0 0 {0:.4} {0:.4}">"#,
        style.size
    );
    s.push_str("<style>\n");
    let _ = writeln!(
        s,
        "rect {{ stroke: #222; stroke-width: {:.3}; fill-opacity: {:.3}; }}",
        style.stroke_width, style.fill_opacity
    );
    for i in 0..classes {
        let _ = writeln!(s, ".{prefix}-{i} {{ fill: {}; }}", color(i));
    }
    s.push_str("</style>\n");
    for (c, class) in cells {
        let side = c.side_f64();
        let x = (c.col as f64 * side - bx0) * scale;
        let y = (by1 - (c.row as f64 + 1.0) * side) * scale;
        let w = side * scale;
        let _ = writeln!(
            s,
            r#"<rect class="{prefix}-{class}" x="{x:.4}" y="{y:.4}" width="{w:.4}" height="{w:.4}"/>"#
        );
    }
    s.push_str("</svg>\n");
    s
}

/// One rectangle per tail cell, colored by layer.
pub fn render_tail(t: &TailFamily, style: &Style) -> String {
    let cells: Vec<_> = t.cells().map(|(p, c)| (*c, p as usize)).collect();
    draw(&cells, t.layers.len(), "layer", style)
}

/// One rectangle per cell of `τ`, colored by the seed whose tail produced it.
pub fn render_family(f: &RegularizedFamily, style: &Style) -> String {
    let cells: Vec<_> = f.tau.iter().zip(&f.provenance).map(|(c, p)| (*c, p.seed)).collect();
    draw(&cells, f.seeds.len(), "seed", style)
}

/// Number of `<rect` elements in an SVG produced here.
pub fn rect_count(svg: &str) -> usize {
    svg.matches("<rect ").count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::regularize::{regularize, RegularizeOptions};
    use crate::tail::{tail, TailParameters};

    #[test]
    fn tail_drawing_has_one_rect_per_cell() {
        let params = TailParameters::default_ratio();
        let t = tail(&DyadicSquare::new(0, 0, 0), 1, &params);
        let svg = render_tail(&t, &Style::default());
        assert_eq!(rect_count(&svg), 33);
        assert_eq!(svg, render_tail(&t, &Style::default()));
        assert!(svg.contains(".layer-1"));
    }

    #[test]
    fn family_classes_match_seeds() {
        let params = TailParameters::default_ratio();
        let seeds = [DyadicSquare::new(3, 1, 1), DyadicSquare::new(4, 11, 9)];
        let root = DyadicSquare::new(0, 0, 0);
        let f = regularize(&seeds, &root, &params, RegularizeOptions::default()).unwrap();
        let svg = render_family(&f, &Style::default());
        assert_eq!(rect_count(&svg), f.tau.len());
        assert_eq!(svg.matches("{ fill:").count(), seeds.len());
    }

    #[test]
    fn empty_family_is_a_valid_canvas() {
        let params = TailParameters::default_ratio();
        let root = DyadicSquare::new(0, 0, 0);
        let f = regularize(&[], &root, &params, RegularizeOptions::default()).unwrap();
        let svg = render_family(&f, &Style::default());
        assert_eq!(rect_count(&svg), 0);
        assert!(svg.starts_with("<svg") && svg.ends_with("</svg>\n"));
    }
}
