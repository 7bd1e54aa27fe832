//! SVG overlay of the sketched footprints: boundary ellipses, selected
//! tangents, tangency points, inner triangles and edge quadrangles.

use std::fmt::Write as _;

use nalgebra::{Matrix2, Vector2};

use crate::error::Result;
use crate::math;
use crate::model::{Camera, Scene};
use crate::splat::{boundary_radius, prepare, PreparedSplat, Sketch};

fn ellipse(out: &mut String, center: &Vector2<f64>, cov: &Matrix2<f64>, r: f64) {
    let (a, b, c) = (cov[(0, 0)], cov[(0, 1)], cov[(1, 1)]);
    let mid = 0.5 * (a + c);
    let rad = (0.25 * (a - c) * (a - c) + b * b).sqrt();
    let (l1, l2) = (mid + rad, (mid - rad).max(0.0));
    let angle = 0.5 * math::atan2(2.0 * b, a - c).to_degrees();
    writeln!(
        out,
        r#"    <ellipse class="boundary" cx="{:.4}" cy="{:.4}" rx="{:.4}" ry="{:.4}" transform="rotate({:.4} {:.4} {:.4})"/>"#,
        center.x,
        center.y,
        r * l1.sqrt(),
        r * l2.sqrt(),
        angle,
        center.x,
        center.y
    )
    .unwrap();
}

fn polygon(out: &mut String, class: &str, pts: &[Vector2<f64>]) {
    let list: Vec<String> = pts.iter().map(|p| format!("{:.4},{:.4}", p.x, p.y)).collect();
    writeln!(out, r#"    <polygon class="{class}" points="{}"/>"#, list.join(" ")).unwrap();
}

fn splat_group(out: &mut String, ps: &PreparedSplat, r: f64) {
    let sp = &ps.splat;
    writeln!(out, r#"  <g data-index="{}" data-kind="{}">"#, sp.index, sp.kind.as_str()).unwrap();
    match &ps.sketch {
        Sketch::Ellipse => ellipse(out, &sp.vertices[0], &sp.cov, r),
        Sketch::Merged => {
            for v in &sp.vertices {
                ellipse(out, v, &sp.cov, r);
            }
        }
        Sketch::Boundary(b) => {
            for &i in &b.active {
                ellipse(out, &sp.vertices[i], &sp.cov, r);
            }
            if b.inner {
                let tri: Vec<Vector2<f64>> = b.active.iter().map(|&i| sp.vertices[i]).collect();
                polygon(out, "inner", &tri);
            }
            for e in &b.edges {
                polygon(out, "quad", &e.corners(&sp.vertices));
            }
            for e in &b.edges {
                writeln!(
                    out,
                    r#"    <line class="tangent" x1="{:.4}" y1="{:.4}" x2="{:.4}" y2="{:.4}"/>"#,
                    e.ti.x, e.ti.y, e.tj.x, e.tj.y
                )
                .unwrap();
            }
            for e in &b.edges {
                for t in [e.ti, e.tj] {
                    writeln!(out, r#"    <circle class="tangency" cx="{:.4}" cy="{:.4}" r="0.75"/>"#, t.x, t.y).unwrap();
                }
            }
        }
    }
    out.push_str("  </g>\n");
}

/// SVG document in pixel coordinates of `cam`, one group per visible splat
/// in blending order.
pub fn debug_sketch_svg(scene: &Scene, cam: &Camera, cutoff: f64) -> Result<String> {
    scene.validate()?;
    let prepared = prepare(scene, cam, cutoff)?;
    let r = boundary_radius(cutoff);
    let mut out = String::new();
    writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w}" height="{h}" viewBox="0 0 {w} {h}">"#,
        w = cam.width,
        h = cam.height
    )
    .unwrap();
    out.push_str(concat!(
        "  <style>\n",
        "    .boundary { fill: none; stroke: #1f77b4; stroke-width: 0.5 }\n",
        "    .inner { fill: #2ca02c; fill-opacity: 0.3; stroke: none }\n",
        "    .quad { fill: #ff7f0e; fill-opacity: 0.25; stroke: none }\n",
        "    .tangent { stroke: #d62728; stroke-width: 0.5 }\n",
        "    .tangency { fill: #d62728 }\n",
        "  </style>\n",
    ));
    writeln!(out, r#"  <rect width="{}" height="{}" fill="white"/>"#, cam.width, cam.height).unwrap();
    for ps in &prepared {
        splat_group(&mut out, ps, r);
    }
    out.push_str("</svg>\n");
    Ok(out)
}
