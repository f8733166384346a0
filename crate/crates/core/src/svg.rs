//! SVG rendering of a belief and a planned trajectory.

use std::fmt::Write as _;

use crate::ltl::AtomicProp;
use crate::map::{MapBelief, MapError, Vec2};
use crate::planner::{Plan, WorldBounds};

const PX_PER_M: f64 = 20.0;
const MARGIN: f64 = 20.0;
/// Smallest drawn ellipse radius, px.
const MIN_RADIUS: f64 = 3.0;

struct Frame {
    b: WorldBounds,
}

impl Frame {
    fn x(&self, x: f64) -> f64 {
        MARGIN + (x - self.b.xmin) * PX_PER_M
    }

    fn y(&self, y: f64) -> f64 {
        MARGIN + (self.b.ymax - y) * PX_PER_M
    }

    fn pt(&self, p: &Vec2) -> (f64, f64) {
        (self.x(p.x), self.y(p.y))
    }
}

fn glyph(out: &mut String, class: &str, cx: f64, cy: f64) {
    let s = 6.0;
    let poly = |pts: &[(f64, f64)]| {
        pts.iter().map(|(x, y)| format!("{:.2},{:.2}", cx + x, cy + y)).collect::<Vec<_>>().join(" ")
    };
    let _ = match class {
        "Sq" => writeln!(out, r#"<rect x="{:.2}" y="{:.2}" width="{:.2}" height="{:.2}" class="lm"/>"#, cx - s, cy - s, 2.0 * s, 2.0 * s),
        "Cir" => writeln!(out, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{s:.2}" class="lm"/>"#),
        "Tri" => writeln!(out, r#"<polygon points="{}" class="lm"/>"#, poly(&[(0.0, -s), (s, s), (-s, s)])),
        "Dia" => writeln!(out, r#"<polygon points="{}" class="lm"/>"#, poly(&[(0.0, -s), (s, 0.0), (0.0, s), (-s, 0.0)])),
        "Hex" => {
            let pts: Vec<(f64, f64)> = (0..6)
                .map(|k| {
                    let a = std::f64::consts::PI / 3.0 * k as f64;
                    (s * a.cos(), s * a.sin())
                })
                .collect();
            writeln!(out, r#"<polygon points="{}" class="lm"/>"#, poly(&pts))
        }
        _ => writeln!(
            out,
            r#"<path d="M{:.2},{:.2} L{:.2},{:.2} M{:.2},{:.2} L{:.2},{:.2}" class="lm"/>"#,
            cx - s,
            cy - s,
            cx + s,
            cy + s,
            cx - s,
            cy + s,
            cx + s,
            cy - s
        ),
    };
}

/// Draws confidence ellipses, landmark glyphs, the balls of distance atoms,
/// and the trajectory when a plan is given. Output depends only on the
/// inputs.
pub fn render(
    belief: &MapBelief,
    delta: f64,
    bounds: WorldBounds,
    atoms: &[AtomicProp],
    plan: Option<&Plan>,
) -> Result<String, MapError> {
    let f = Frame { b: bounds };
    let w = 2.0 * MARGIN + (bounds.xmax - bounds.xmin) * PX_PER_M;
    let h = 2.0 * MARGIN + (bounds.ymax - bounds.ymin) * PX_PER_M;
    let mut out = String::new();
    let _ = writeln!(
        out,
        r#"<svg xmlns="http://www.w3.org/2000/svg" width="{w:.0}" height="{h:.0}" viewBox="0 0 {w:.0} {h:.0}">"#
    );
    out.push_str(
        "<style>.lm{fill:#36c;stroke:none}.ell{fill:none;stroke:#d22;stroke-width:1.5}\
.ball{fill:none;stroke:#888;stroke-dasharray:4 3}.traj{fill:none;stroke:#2a2;stroke-width:2}\
.pose{fill:#2a2}.start{fill:#f90}</style>\n",
    );
    let _ = writeln!(
        out,
        r#"<rect x="{MARGIN:.2}" y="{MARGIN:.2}" width="{:.2}" height="{:.2}" fill="none" stroke="black"/>"#,
        w - 2.0 * MARGIN,
        h - 2.0 * MARGIN
    );

    let mut balls: Vec<(usize, f64)> = atoms
        .iter()
        .filter_map(|a| match a {
            AtomicProp::Near { landmark, radius } => Some((*landmark, *radius)),
            AtomicProp::ClassIs { .. } => None,
        })
        .collect();
    balls.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)));
    balls.dedup();
    for (i, r) in balls {
        if let Ok(l) = belief.landmark(i) {
            let (cx, cy) = f.pt(&l.mean);
            let _ = writeln!(out, r#"<circle cx="{cx:.2}" cy="{cy:.2}" r="{:.2}" class="ball"/>"#, r * PX_PER_M);
        }
    }

    for (i, l) in belief.landmarks().iter().enumerate() {
        let e = belief.ellipse(i, delta)?;
        let (cx, cy) = f.pt(&e.center);
        let rx = (e.semi_axes.0 * PX_PER_M).max(MIN_RADIUS);
        let ry = (e.semi_axes.1 * PX_PER_M).max(MIN_RADIUS);
        // Screen y points down, so the rotation flips sign.
        let angle = 0.0 - e.major_dir.y.atan2(e.major_dir.x).to_degrees();
        let _ = writeln!(
            out,
            r#"<ellipse cx="{cx:.2}" cy="{cy:.2}" rx="{rx:.2}" ry="{ry:.2}" transform="rotate({angle:.3} {cx:.2} {cy:.2})" class="ell"/>"#
        );
        glyph(&mut out, &l.class, cx, cy);
        let _ = writeln!(out, r#"<text x="{:.2}" y="{:.2}" font-size="10">l{}</text>"#, cx + 8.0, cy - 8.0, i + 1);
    }

    if let Some(p) = plan {
        let pts: Vec<String> = p
            .trajectory
            .iter()
            .map(|t| {
                let (x, y) = f.pt(&t.pose.position());
                format!("{x:.2},{y:.2}")
            })
            .collect();
        if pts.len() > 1 {
            let _ = writeln!(out, r#"<polyline points="{}" class="traj"/>"#, pts.join(" "));
        }
        for t in p.trajectory.iter().skip(1) {
            let (x, y) = f.pt(&t.pose.position());
            let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="2" class="pose"/>"#);
        }
        if let Some(s) = p.trajectory.first() {
            let (x, y) = f.pt(&s.pose.position());
            let _ = writeln!(out, r#"<circle cx="{x:.2}" cy="{y:.2}" r="5" class="start"/>"#);
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}
