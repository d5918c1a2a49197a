//! pi-injectivity, transversality, and the quotient of a pair by the deck
//! translations `H` that preserve the projection.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::lattice::{
    solve_congruence, superlattice_basis, CosetComponent, IntMatrix, Mat2Q, Mat2Z, Rat, Vec2Q,
};
use crate::qote::{QoteError, QotePair};
use crate::torus::{AffineEndo, SpherePoint, TorusPoint};

/// Seed used for the quotient agreement samples when none is given.
pub const DEFAULT_SEED: u64 = 0x5eed;
pub const QUOTIENT_SAMPLES: usize = 50;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum InjectivityError {
    #[error(transparent)]
    Qote(#[from] QoteError),
    #[error("H-path says injective={fast} but the congruence path says injective={full}")]
    PathDisagreement { fast: bool, full: bool },
    #[error("H is trivial, the pair is already pi-injective")]
    TrivialH,
    #[error("no generic witness found on a positive-dimensional component")]
    WitnessSearchFailed,
    #[error("witness {0} failed re-verification")]
    InvalidWitness(String),
    #[error("quotient step broke an invariant: {0}")]
    QuotientInvariant(String),
}

/// Two points of one fiber `pi^-1(y)`, `y` in `Y`, with the same image under `F`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize)]
pub struct Witness {
    pub u: TorusPoint,
    pub v: TorusPoint,
    pub y: SpherePoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct InjectivityVerdict {
    pub injective: bool,
    pub witnesses: Vec<Witness>,
    pub positive_dimensional: bool,
    pub h_order: usize,
}

/// `H = {v : A v in Z^2, C v in Z^2}`.
pub fn compute_h(pair: &QotePair) -> Vec<TorusPoint> {
    let a = pair.endomorphism().matrix().to_int_matrix();
    let c = pair.precompose().matrix().to_int_matrix();
    solve_congruence(&IntMatrix::stack(&a, &c), &[Rat::zero(), Rat::zero(), Rat::zero(), Rat::zero()])
        .expect("homogeneous system is solvable")
        .points()
        .into_iter()
        .map(|v| TorusPoint::new(v[0].clone(), v[1].clone()))
        .collect()
}

fn primes() -> impl Iterator<Item = i64> {
    (101i64..).filter(|&n| (2..).take_while(|d| d * d <= n).all(|d| n % d != 0))
}

fn split(x: &[Rat]) -> (TorusPoint, TorusPoint) {
    (
        TorusPoint::new(x[0].clone(), x[1].clone()),
        TorusPoint::new(x[2].clone(), x[3].clone()),
    )
}

fn verify_witness(pair: &QotePair, excluded: &BTreeSet<SpherePoint>, w: &Witness) -> bool {
    let f = pair.endomorphism();
    w.u != w.v
        && f.apply(&w.u) == f.apply(&w.v)
        && pair.project(&w.u) == w.y
        && pair.project(&w.v) == w.y
        && !excluded.contains(&w.y)
}

fn component_witness(
    pair: &QotePair,
    excluded: &BTreeSet<SpherePoint>,
    comp: &CosetComponent,
) -> Result<Option<Witness>, InjectivityError> {
    let make = |x: &[Rat]| {
        let (v, w) = split(x);
        let u = v.add(&w);
        let y = pair.project(&v);
        Witness { u, v, y }
    };
    if comp.is_point() {
        let w = make(&comp.offset);
        return Ok((!excluded.contains(&w.y)).then_some(w));
    }
    let mut ps = primes();
    for _ in 0..64 {
        let t: Vec<Rat> = (0..comp.dimension()).map(|_| Rat::new(1, ps.next().expect("infinite"))).collect();
        let w = make(&comp.point_at(&t));
        if !excluded.contains(&w.y) {
            return Ok(Some(w));
        }
    }
    Err(InjectivityError::WitnessSearchFailed)
}

/// Decides whether `F` is injective on every fiber `pi^-1(y)` with `y` outside
/// `f^-1(P_f)`, by two independent methods that must agree.
pub fn decide_pi_injectivity(pair: &QotePair) -> Result<InjectivityVerdict, InjectivityError> {
    let h_order = compute_h(pair).len();
    let fast = h_order == 1;
    let excluded = pair.marked_sets(1).levels.swap_remove(1);

    let a = *pair.endomorphism().matrix();
    let c = *pair.precompose().matrix();
    let shift = pair.precompose().translation().coords().clone();
    let group = pair.group();
    let mut witnesses = Vec::new();
    let mut positive_dimensional = false;
    for k in 0..group.order() {
        let twist = Mat2Z::IDENTITY - group.rotation(k);
        let m = IntMatrix::from_blocks(&Mat2Z::ZERO, &a, &(twist * c), &c);
        let rhs = -&twist.apply(&shift);
        let family = match solve_congruence(&m, &[Rat::zero(), Rat::zero(), rhs.x, rhs.y]) {
            Ok(f) => f,
            Err(_) => continue,
        };
        for comp in &family.components {
            debug_assert!(comp.generators.iter().all(|g| g[2].is_zero() && g[3].is_zero()));
            if comp.offset[2].is_zero() && comp.offset[3].is_zero() {
                continue;
            }
            if let Some(w) = component_witness(pair, &excluded, comp)? {
                if !comp.is_point() {
                    positive_dimensional = true;
                }
                witnesses.push(w);
            }
        }
    }
    witnesses.sort();
    witnesses.dedup();
    if let Some(bad) = witnesses.iter().find(|w| !verify_witness(pair, &excluded, w)) {
        return Err(InjectivityError::InvalidWitness(format!("{} {} over {}", bad.u, bad.v, bad.y)));
    }
    let full = witnesses.is_empty();
    if fast != full {
        return Err(InjectivityError::PathDisagreement { fast, full });
    }
    Ok(InjectivityVerdict { injective: full, witnesses, positive_dimensional, h_order })
}

/// Verdicts for `F, F^2, ..., F^m` with the same projection.
pub fn iterate_injectivity(
    pair: &QotePair,
    m: u32,
) -> Result<Vec<InjectivityVerdict>, InjectivityError> {
    (1..=m).map(|j| decide_pi_injectivity(&pair.power(j)?)).collect()
}

/// Random sphere points with coordinates of denominator at most 1000, avoiding
/// `exclude`.
pub fn sample_sphere_points(
    pair: &QotePair,
    seed: u64,
    count: usize,
    exclude: &BTreeSet<SpherePoint>,
) -> Vec<SpherePoint> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut coord = move || {
        let den: i64 = rng.random_range(1..=1000);
        Rat::new(rng.random_range(0..den), den)
    };
    let mut out = BTreeSet::new();
    while out.len() < count {
        let p = pair.sphere_point(&Vec2Q::new(coord(), coord()));
        if !exclude.contains(&p) {
            out.insert(p);
        }
    }
    out.into_iter().collect()
}

/// A lift `x_lift` of `x` and a preimage `y` of `x` such that no lift of `y`
/// maps to `x_lift`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransversalityFailure {
    pub x: SpherePoint,
    pub y: SpherePoint,
    pub x_lift: TorusPoint,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TransversalityCertificate {
    pub holds: bool,
    pub points_checked: usize,
    pub failure: Option<TransversalityFailure>,
}

/// Checks transversality of `pi` and `F` at every point of `f^-1(P_f)` and at
/// `extra`.
pub fn check_transversality(pair: &QotePair, extra: &[SpherePoint]) -> TransversalityCertificate {
    let mut xs = pair.marked_sets(1).levels.swap_remove(1);
    xs.extend(extra.iter().cloned());
    for x in &xs {
        let reached: Vec<(TorusPoint, BTreeSet<SpherePoint>)> = pair
            .pi_fiber(x)
            .into_iter()
            .map(|lift| {
                let r = pair.endomorphism_preimages(&lift).iter().map(|y| pair.project(y)).collect();
                (lift, r)
            })
            .collect();
        let preimages: BTreeSet<&SpherePoint> = reached.iter().flat_map(|(_, r)| r).collect();
        for (lift, r) in &reached {
            if let Some(y) = preimages.iter().find(|y| !r.contains(**y)) {
                return TransversalityCertificate {
                    holds: false,
                    points_checked: xs.len(),
                    failure: Some(TransversalityFailure {
                        x: x.clone(),
                        y: (*y).clone(),
                        x_lift: lift.clone(),
                    }),
                };
            }
        }
    }
    TransversalityCertificate { holds: true, points_checked: xs.len(), failure: None }
}

/// One quotient of the covering torus by `H`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct QuotientStep {
    pub h: Vec<TorusPoint>,
    pub basis_change: Mat2Q,
    pub new_pair: QotePair,
    pub deg_pi_old: u64,
    pub deg_pi_new: u64,
    pub agreement_points: usize,
}

/// Quotient by `H`, checking the semiconjugacy on `f^-1(P_f)` and on
/// `samples` seeded random sphere points.
pub fn quotient_step_with(
    pair: &QotePair,
    seed: u64,
    samples: usize,
) -> Result<QuotientStep, InjectivityError> {
    let h = compute_h(pair);
    if h.len() < 2 {
        return Err(InjectivityError::TrivialH);
    }
    let gens: Vec<Vec2Q> = h.iter().map(|p| p.coords().clone()).collect();
    let b = superlattice_basis(&gens);
    let b_inv = b.inverse().expect("Hermite basis is nonsingular");
    let fail = |what: &str| InjectivityError::QuotientInvariant(what.to_string());

    let a = pair.endomorphism().matrix().to_rational();
    let new_a = b_inv.mul(&a).mul(&b).to_integer().ok_or_else(|| fail("B^-1 A B is not integral"))?;
    let new_b = b_inv.apply(pair.endomorphism().translation().coords());
    let c = pair.precompose().matrix().to_rational();
    let new_c = c.mul(&b).to_integer().ok_or_else(|| fail("C B is not integral"))?;
    let top = AffineEndo::new(new_a, new_b).map_err(|_| fail("new F is singular"))?;
    let q = AffineEndo::new(new_c, pair.precompose().translation().coords().clone())
        .map_err(|_| fail("new Q is singular"))?;
    let new_pair = QotePair::with_base(*pair.group(), top, q, pair.base().clone())?;

    if new_a.det() != pair.endomorphism().det() {
        return Err(fail("det of F changed"));
    }
    if new_pair.deg_pi() * h.len() as u64 != pair.deg_pi() {
        return Err(fail("deg(pi_old) != deg(pi_new) |H|"));
    }
    let marked = pair.marked_sets(1).levels.swap_remove(1);
    let mut points: Vec<SpherePoint> = marked.iter().cloned().collect();
    points.extend(sample_sphere_points(pair, seed, samples, &marked));
    for p in &points {
        if pair.eval_f(p)? != new_pair.eval_f(p)? {
            return Err(fail(&format!("induced maps differ at {p}")));
        }
    }
    Ok(QuotientStep {
        h,
        basis_change: b,
        deg_pi_old: pair.deg_pi(),
        deg_pi_new: new_pair.deg_pi(),
        new_pair,
        agreement_points: points.len(),
    })
}

pub fn quotient_step(pair: &QotePair) -> Result<QuotientStep, InjectivityError> {
    quotient_step_with(pair, DEFAULT_SEED, QUOTIENT_SAMPLES)
}

/// Repeats [`quotient_step`] until `H` is trivial.
pub fn make_injective(pair: &QotePair) -> Result<(QotePair, Vec<QuotientStep>), InjectivityError> {
    make_injective_with(pair, DEFAULT_SEED, QUOTIENT_SAMPLES)
}

pub fn make_injective_with(
    pair: &QotePair,
    seed: u64,
    samples: usize,
) -> Result<(QotePair, Vec<QuotientStep>), InjectivityError> {
    let mut current = pair.clone();
    let mut steps: Vec<QuotientStep> = Vec::new();
    loop {
        match quotient_step_with(&current, seed, samples) {
            Ok(step) => {
                if step.deg_pi_new >= step.deg_pi_old {
                    return Err(InjectivityError::QuotientInvariant("degree did not decrease".into()));
                }
                current = step.new_pair.clone();
                steps.push(step);
            }
            Err(InjectivityError::TrivialH) => return Ok((current, steps)),
            Err(e) => return Err(e),
        }
    }
}

/// Local degrees of `pi` over each point of `P_f`.
pub fn fiber_degree_profile(pair: &QotePair) -> Vec<(SpherePoint, Vec<u32>)> {
    pair.postcritical_set()
        .iter()
        .map(|p| (p.clone(), pair.pi_fiber(p).iter().map(|x| pair.local_degree_pi(x)).collect()))
        .collect()
}

pub fn fiber_degrees_constant(degrees: &[u32]) -> bool {
    degrees.windows(2).all(|w| w[0] == w[1])
}

/// Whether `deg(pi, .)` is constant on every fiber over `P_f`; off `P_f` all
/// local degrees are 1.
pub fn check_fiber_degree_constancy(pair: &QotePair) -> bool {
    fiber_degree_profile(pair).iter().all(|(_, d)| fiber_degrees_constant(d))
}
