//! Schematic SVG of a pair on the unit-square fundamental domain.

use std::collections::BTreeSet;
use std::fmt::Write;

use crate::injectivity::{decide_pi_injectivity, sample_sphere_points, Witness};
use crate::lattice::{q, Rat, Vec2Q};
use crate::qote::{QoteError, QotePair};
use crate::torus::TorusPoint;

const SIZE: i64 = 400;
const MARGIN: i64 = 20;

fn px(x: &Rat) -> String {
    (Rat::from_int(MARGIN) + x.mul_int(SIZE)).to_fixed(2)
}

fn py(y: &Rat) -> String {
    (Rat::from_int(MARGIN + SIZE) - y.mul_int(SIZE)).to_fixed(2)
}

fn xy(p: &Vec2Q) -> (String, String) {
    (px(&p.x), py(&p.y))
}

fn arc(a: &TorusPoint, b: &TorusPoint, class: &str) -> String {
    let (a, b) = (a.coords(), b.coords());
    let mid = Vec2Q::new((&a.x + &b.x) * q(1, 2), (&a.y + &b.y) * q(1, 2));
    let bend = q(3, 20);
    let ctrl = Vec2Q::new(&mid.x - &(&b.y - &a.y) * &bend, &mid.y + &(&b.x - &a.x) * &bend);
    let ((x0, y0), (cx, cy), (x1, y1)) = (xy(a), xy(&ctrl), xy(b));
    format!("  <path class=\"{class}\" d=\"M {x0} {y0} Q {cx} {cy} {x1} {y1}\" fill=\"none\"/>\n")
}

/// SVG with `S_pi` as squares, lifts of `S_f` as open circles, lifts of
/// `P_f` as filled dots, one sample fiber joined by arcs and, for
/// non-injective pairs, one witness pair.
pub fn render_svg(pair: &QotePair, seed: u64) -> Result<String, QoteError> {
    let mut out = String::new();
    let total = SIZE + 2 * MARGIN;
    writeln!(
        out,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{total}\" height=\"{total}\" viewBox=\"0 0 {total} {total}\">"
    )
    .unwrap();
    writeln!(
        out,
        "  <rect class=\"domain\" x=\"{MARGIN}\" y=\"{MARGIN}\" width=\"{SIZE}\" height=\"{SIZE}\" fill=\"none\" stroke=\"black\"/>"
    )
    .unwrap();

    for s in pair.projection_critical_set() {
        let (x, y) = xy(s.coords());
        writeln!(
            out,
            "  <rect class=\"s-pi\" x=\"{x}\" y=\"{y}\" width=\"10\" height=\"10\" transform=\"translate(-5,-5)\" fill=\"none\" stroke=\"blue\"/>"
        )
        .unwrap();
    }

    let crit_lifts: BTreeSet<TorusPoint> =
        pair.critical_set_f()?.iter().flat_map(|(c, _)| pair.pi_fiber(c)).collect();
    for c in &crit_lifts {
        let (x, y) = xy(c.coords());
        writeln!(out, "  <circle class=\"s-f\" cx=\"{x}\" cy=\"{y}\" r=\"5\" fill=\"none\" stroke=\"red\"/>").unwrap();
    }

    let post_lifts: BTreeSet<TorusPoint> =
        pair.postcritical_set().iter().flat_map(|p| pair.pi_fiber(p)).collect();
    for p in &post_lifts {
        let (x, y) = xy(p.coords());
        writeln!(out, "  <circle class=\"p-f\" cx=\"{x}\" cy=\"{y}\" r=\"3\" fill=\"black\"/>").unwrap();
    }

    let marked = pair.marked_sets(1).levels.swap_remove(1);
    if let Some(y) = sample_sphere_points(pair, seed, 1, &marked).first() {
        let fiber = pair.pi_fiber(y);
        for w in fiber.windows(2) {
            out.push_str(&arc(&w[0], &w[1], "fiber"));
        }
    }

    if let Ok(verdict) = decide_pi_injectivity(pair) {
        if let Some(Witness { u, v, .. }) = verdict.witnesses.first() {
            out.push_str(&arc(u, v, "witness"));
            for p in [u, v] {
                let (x, y) = xy(p.coords());
                writeln!(out, "  <circle class=\"witness\" cx=\"{x}\" cy=\"{y}\" r=\"4\" fill=\"green\"/>").unwrap();
            }
        }
    }
    out.push_str("</svg>\n");
    Ok(out)
}
