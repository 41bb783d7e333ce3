// SPDX-License-Identifier: Apache-2.0

//! SVG drawings of layer floorplans.
//!
//! One drawing per layer: cells with component labels, routers colored by
//! kind, hatched KOZ squares, vertical-link markers and, on the upper layer
//! of each link, a dashed tether from the router to the projected position
//! of its lower partner (the redistribution wire).

use std::fmt::Write;

use crate::model::{Instance, LayerFloorplan, RouterKind, Solution};

const SCALE: f64 = 24.0;
const MARGIN: f64 = 20.0;

fn router_color(k: RouterKind) -> &'static str {
    match k {
        RouterKind::TwoD => "#777777",
        RouterKind::Up => "#1f6fd1",
        RouterKind::Down => "#d1461f",
        RouterKind::Both => "#8a2be2",
    }
}

fn esc(s: &str) -> String {
    s.replace('&', "&amp;").replace('<', "&lt;").replace('>', "&gt;")
}

struct Frame {
    height: f64,
}

impl Frame {
    fn x(&self, mm: f64) -> f64 {
        MARGIN + mm * SCALE
    }

    /// Rows count from the bottom; SVG y grows downwards.
    fn y(&self, mm: f64) -> f64 {
        MARGIN + (self.height - mm) * SCALE
    }
}

fn router_pos(fp: &LayerFloorplan, cell: usize) -> (f64, f64) {
    fp.corner_center(cell)
}

/// Renders layer `layer` of `sol` as a standalone SVG document.
pub fn render_layer(inst: &Instance, sol: &Solution, layer: usize) -> String {
    let fp = &sol.floorplans[layer];
    let f = Frame { height: fp.height() };
    let w = fp.width() * SCALE + 2.0 * MARGIN;
    let h = fp.height() * SCALE + 2.0 * MARGIN + 18.0;
    let mut s = String::new();
    let _ = writeln!(
        s,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.1}" height="{h:.1}" viewBox="0 0 {w:.1} {h:.1}" font-family="sans-serif">"#
    );
    s.push_str(
        r##"<defs><pattern id="hatch" width="4" height="4" patternUnits="userSpaceOnUse" patternTransform="rotate(45)"><line x1="0" y1="0" x2="0" y2="4" stroke="#000" stroke-width="1.2"/></pattern></defs>"##,
    );
    s.push('\n');
    let _ = writeln!(
        s,
        r#"<text x="{MARGIN}" y="{:.1}" font-size="11">layer {layer} ({}) area {:.3} mm2</text>"#,
        h - 6.0,
        esc(&inst.tech.layers[layer].node),
        fp.area()
    );

    let koz_side = inst.tech.koz_area.sqrt();
    let mut y0 = 0.0;
    for r in 0..fp.rows {
        let mut x0 = 0.0;
        for c in 0..fp.cols {
            let cell = r * fp.cols + c;
            let (cw, rh) = (fp.col_widths[c], fp.row_heights[r]);
            let fill = if fp.cells[cell].is_some() { "#eef3f8" } else { "#ffffff" };
            let _ = writeln!(
                s,
                r##"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" fill="{fill}" stroke="#333" stroke-width="1"/>"##,
                f.x(x0),
                f.y(y0 + rh),
                cw * SCALE,
                rh * SCALE
            );
            if let Some(comp) = fp.cells[cell] {
                let _ = writeln!(
                    s,
                    r#"<text x="{:.2}" y="{:.2}" font-size="10">{}</text>"#,
                    f.x(x0) + 3.0,
                    f.y(y0 + rh) + 12.0,
                    esc(inst.component_id(comp))
                );
                let (cx, cy) = router_pos(fp, cell);
                let _ = writeln!(
                    s,
                    r#"<rect x="{:.2}" y="{:.2}" width="8" height="8" fill="{}"/>"#,
                    f.x(cx) - 4.0,
                    f.y(cy) - 4.0,
                    router_color(fp.router_kinds[cell])
                );
            }
            for k in 0..fp.koz[cell] {
                let side = (koz_side * SCALE).min(cw * SCALE / 2.0).max(4.0);
                let _ = writeln!(
                    s,
                    r##"<rect x="{:.2}" y="{:.2}" width="{side:.2}" height="{side:.2}" fill="url(#hatch)" stroke="#000" stroke-width="0.8"/>"##,
                    f.x(x0 + cw) - side - 2.0 - k as f64 * (side + 2.0),
                    f.y(y0) - side - 2.0
                );
            }
            x0 += cw;
        }
        y0 += fp.row_heights[r];
    }

    for v in &sol.vlinks {
        if v.boundary == layer {
            let (x, y) = router_pos(fp, v.lower_cell);
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="6" fill="none" stroke="{}" stroke-width="2"/>"#,
                f.x(x),
                f.y(y),
                router_color(RouterKind::Up)
            );
        }
        if v.boundary + 1 == layer {
            let lower = &sol.floorplans[v.boundary];
            let (ux, uy) = router_pos(fp, v.upper_cell);
            let (lx, ly) = lower.center(v.lower_cell);
            let (lx, ly) = (lx + fp.width() / 2.0, ly + fp.height() / 2.0);
            let _ = writeln!(
                s,
                r#"<polyline points="{:.2},{:.2} {:.2},{:.2} {:.2},{:.2}" fill="none" stroke="{}" stroke-width="1.5" stroke-dasharray="4,3"/>"#,
                f.x(ux),
                f.y(uy),
                f.x(lx),
                f.y(uy),
                f.x(lx),
                f.y(ly),
                router_color(RouterKind::Down)
            );
            let _ = writeln!(
                s,
                r#"<circle cx="{:.2}" cy="{:.2}" r="4" fill="{}"/>"#,
                f.x(lx),
                f.y(ly),
                router_color(RouterKind::Down)
            );
        }
    }
    s.push_str("</svg>\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{LayerAssignment, VerticalLink};

    #[test]
    fn draws_cells_and_links() {
        let inst = crate::model::tests::two_cpu_instance();
        let mut lo = LayerFloorplan::new(0, 1, 1, vec![Some(0)]);
        lo.col_widths = vec![6.0];
        lo.row_heights = vec![6.0];
        lo.router_kinds = vec![RouterKind::Up];
        let mut up = LayerFloorplan::new(1, 1, 1, vec![Some(1)]);
        up.col_widths = vec![6.5];
        up.row_heights = vec![6.5];
        up.router_kinds = vec![RouterKind::Down];
        up.koz = vec![1];
        let sol = Solution {
            assignment: LayerAssignment { layer_of: vec![0, 1] },
            floorplans: vec![lo, up],
            vlinks: vec![VerticalLink {
                boundary: 0,
                lower_cell: 0,
                upper_cell: 0,
                rd_length: 0.5,
            }],
        };
        let a = render_layer(&inst, &sol, 1);
        assert!(a.starts_with("<svg"));
        assert!(a.contains("url(#hatch)"));
        assert!(a.contains("polyline"));
        assert_eq!(a, render_layer(&inst, &sol, 1));
        assert!(render_layer(&inst, &sol, 0).contains("circle"));
    }
}
