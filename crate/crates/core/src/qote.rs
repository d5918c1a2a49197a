//! QOTE pairs: an affine torus endomorphism `F` together with a projection
//! `pi = pi0 o Q` such that `pi F = f pi` for an induced sphere map `f`.

use std::collections::BTreeSet;
use std::fmt;

use serde::{Serialize, Serializer};

use crate::lattice::Vec2Q;
use crate::torus::{AffineEndo, FiberSolver, RotationGroup, SpherePoint, TorusPoint};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum MapRole {
    #[serde(rename = "F")]
    Endomorphism,
    #[serde(rename = "Q")]
    Precompose,
}

impl fmt::Display for MapRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            MapRole::Endomorphism => f.write_str("F"),
            MapRole::Precompose => f.write_str("Q"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum QoteError {
    #[error("{0} is not equivariant under the rotation group")]
    NotEquivariant(MapRole),
    #[error("Q o F does not factor as a deck element of pi0 composed with F o Q")]
    NotCompatible,
    #[error("|det F| = {0} but a QOTE needs degree at least 2")]
    DegreeTooSmall(u64),
    #[error("local degree ratio is not constant over the fiber of {0}")]
    InconsistentFiber(Box<SpherePoint>),
    #[error("Riemann-Hurwitz fails: critical total {found}, expected {expected}")]
    RiemannHurwitz { expected: u64, found: u64 },
    #[error("f is not well defined over {0}")]
    IllDefined(Box<SpherePoint>),
}

/// A validated QOTE in the affine model.
///
/// `top` acts on the covering torus and `precompose` maps it to the torus of
/// `pi0`, where the induced map is covered by `base`. For user input
/// `top == base`; the two differ after a quotient step.
#[derive(Clone)]
pub struct QotePair {
    group: RotationGroup,
    top: AffineEndo,
    precompose: AffineEndo,
    base: AffineEndo,
    twist: u32,
    top_fibers: FiberSolver,
    q_fibers: FiberSolver,
    precompose_is_identity: bool,
    s_pi: Vec<TorusPoint>,
    postcritical: Vec<SpherePoint>,
}

impl fmt::Debug for QotePair {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("QotePair")
            .field("group", &self.group)
            .field("F", &self.top)
            .field("Q", &self.precompose)
            .field("base", &self.base)
            .field("twist", &self.twist)
            .finish()
    }
}

impl PartialEq for QotePair {
    fn eq(&self, other: &Self) -> bool {
        self.group == other.group
            && self.top == other.top
            && self.precompose == other.precompose
            && self.base == other.base
    }
}

impl Eq for QotePair {}

impl Serialize for QotePair {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        #[derive(Serialize)]
        struct Out<'a> {
            group: &'a RotationGroup,
            endomorphism: &'a AffineEndo,
            precompose: &'a AffineEndo,
            base: &'a AffineEndo,
            twist: u32,
            deg_f: u64,
            deg_pi: u64,
        }
        Out {
            group: &self.group,
            endomorphism: &self.top,
            precompose: &self.precompose,
            base: &self.base,
            twist: self.twist,
            deg_f: self.deg_f(),
            deg_pi: self.deg_pi(),
        }
        .serialize(s)
    }
}

/// The `k` with `Q F = (R^k, lambda) F0 Q` for some integral `lambda`.
fn find_twist(
    group: &RotationGroup,
    top: &AffineEndo,
    q: &AffineEndo,
    base: &AffineEndo,
) -> Option<u32> {
    let c = *q.matrix();
    let lhs_lin = c * *top.matrix();
    let lhs_tr = &c.apply(top.translation().coords()) + q.translation().coords();
    let inner = base.apply(q.translation());
    (0..group.order()).find(|&k| {
        let rk = group.rotation(k);
        lhs_lin == rk * *base.matrix() * c
            && (&lhs_tr - &rk.apply(inner.coords())).is_integral()
    })
}

impl QotePair {
    /// Accepts `(group, F, Q)` when both maps are equivariant and `Q F` equals
    /// `F Q` up to a deck transformation of `pi0`.
    pub fn validate(
        group: RotationGroup,
        f: AffineEndo,
        q: AffineEndo,
    ) -> Result<QotePair, QoteError> {
        if group.check_equivariance(&f).is_none() {
            return Err(QoteError::NotEquivariant(MapRole::Endomorphism));
        }
        if group.check_equivariance(&q).is_none() {
            return Err(QoteError::NotEquivariant(MapRole::Precompose));
        }
        Self::with_base(group, f.clone(), q, f)
    }

    /// Pair whose induced map is covered by `base` on the torus of `pi0`.
    pub fn with_base(
        group: RotationGroup,
        top: AffineEndo,
        precompose: AffineEndo,
        base: AffineEndo,
    ) -> Result<QotePair, QoteError> {
        if group.check_equivariance(&base).is_none() {
            return Err(QoteError::NotEquivariant(MapRole::Endomorphism));
        }
        if top.degree() < 2 {
            return Err(QoteError::DegreeTooSmall(top.degree()));
        }
        let twist =
            find_twist(&group, &top, &precompose, &base).ok_or(QoteError::NotCompatible)?;
        let q_fibers = precompose.fiber_solver();
        let precompose_is_identity = precompose == AffineEndo::identity();
        let mut s_pi: Vec<TorusPoint> = group
            .projection_critical_points()
            .iter()
            .flat_map(|(s, _)| q_fibers.preimages(s))
            .collect();
        s_pi.sort();
        let postcritical: BTreeSet<SpherePoint> = group
            .projection_critical_points()
            .iter()
            .map(|(s, _)| group.sphere_canonical(s))
            .collect();
        let pair = QotePair {
            group,
            top_fibers: top.fiber_solver(),
            top,
            precompose,
            base,
            twist,
            q_fibers,
            precompose_is_identity,
            s_pi,
            postcritical: postcritical.into_iter().collect(),
        };
        debug_assert!(pair.s_pi.iter().all(|x| pair.local_degree_pi(x) > 1));
        for p in &pair.postcritical {
            if !pair.postcritical.contains(&pair.eval_f(p)?) {
                return Err(QoteError::IllDefined(Box::new(p.clone())));
            }
        }
        Ok(pair)
    }

    /// `(group, F, identity)`.
    pub fn standard(group: RotationGroup, f: AffineEndo) -> Result<QotePair, QoteError> {
        Self::validate(group, f, AffineEndo::identity())
    }

    pub fn group(&self) -> &RotationGroup {
        &self.group
    }

    pub fn endomorphism(&self) -> &AffineEndo {
        &self.top
    }

    pub fn precompose(&self) -> &AffineEndo {
        &self.precompose
    }

    pub fn base(&self) -> &AffineEndo {
        &self.base
    }

    pub fn twist(&self) -> u32 {
        self.twist
    }

    pub fn deg_f(&self) -> u64 {
        self.top.degree()
    }

    pub fn deg_pi(&self) -> u64 {
        self.group.order() as u64 * self.precompose.degree()
    }

    /// The pair for `F^m` with the same projection.
    pub fn power(&self, m: u32) -> Result<QotePair, QoteError> {
        Self::with_base(
            self.group,
            self.top.pow(m),
            self.precompose.clone(),
            self.base.pow(m),
        )
    }

    /// `pi(x) = pi0(Q x)`.
    pub fn project(&self, x: &TorusPoint) -> SpherePoint {
        if self.precompose_is_identity {
            self.group.sphere_canonical(x)
        } else {
            self.group.sphere_canonical(&self.precompose.apply(x))
        }
    }

    /// Lifts a rational point of the base torus to a sphere point.
    pub fn sphere_point(&self, x: &Vec2Q) -> SpherePoint {
        self.group.sphere_canonical(&TorusPoint::from(x.clone()))
    }

    pub fn pi_fiber(&self, p: &SpherePoint) -> Vec<TorusPoint> {
        let mut out: Vec<TorusPoint> = self
            .group
            .orbit(p.representative())
            .iter()
            .flat_map(|z| self.q_fibers.preimages(z))
            .collect();
        out.sort();
        out
    }

    pub fn local_degree_pi(&self, x: &TorusPoint) -> u32 {
        self.group.stabilizer_order(&self.precompose.apply(x))
    }

    /// `S_pi`, the critical points of the projection.
    pub fn projection_critical_set(&self) -> &[TorusPoint] {
        &self.s_pi
    }

    pub fn eval_f(&self, p: &SpherePoint) -> Result<SpherePoint, QoteError> {
        let fiber = self.pi_fiber(p);
        let image = self.project(&self.top.apply(&fiber[0]));
        if fiber[1..].iter().any(|x| self.project(&self.top.apply(x)) != image) {
            return Err(QoteError::IllDefined(Box::new(p.clone())));
        }
        Ok(image)
    }

    pub fn local_degree_f(&self, p: &SpherePoint) -> Result<u32, QoteError> {
        let mut value = None;
        for x in self.pi_fiber(p) {
            let down = self.local_degree_pi(&x);
            let up = self.local_degree_pi(&self.top.apply(&x));
            if !up.is_multiple_of(down) {
                return Err(QoteError::InconsistentFiber(Box::new(p.clone())));
            }
            match value {
                None => value = Some(up / down),
                Some(v) if v != up / down => return Err(QoteError::InconsistentFiber(Box::new(p.clone()))),
                _ => {}
            }
        }
        Ok(value.expect("fibers are nonempty"))
    }

    /// `P_f = pi(S_pi)`.
    pub fn postcritical_set(&self) -> &[SpherePoint] {
        &self.postcritical
    }

    /// Critical points of `f` with local degree, sorted. Checks the
    /// Riemann-Hurwitz count.
    pub fn critical_set_f(&self) -> Result<Vec<(SpherePoint, u32)>, QoteError> {
        let candidates: BTreeSet<SpherePoint> = self
            .s_pi
            .iter()
            .flat_map(|x| self.top_fibers.preimages(x))
            .map(|y| self.project(&y))
            .collect();
        let mut out = Vec::new();
        for p in candidates {
            let d = self.local_degree_f(&p)?;
            if d > 1 {
                out.push((p, d));
            }
        }
        let found: u64 = out.iter().map(|(_, d)| u64::from(*d) - 1).sum();
        let expected = 2 * self.deg_f() - 2;
        if found != expected {
            return Err(QoteError::RiemannHurwitz { expected, found });
        }
        Ok(out)
    }

    /// `f^-1(p)` with local degrees; multiplicities sum to `deg f`.
    pub fn sphere_preimages(&self, p: &SpherePoint) -> Result<Vec<(SpherePoint, u32)>, QoteError> {
        let points: BTreeSet<SpherePoint> = self
            .pi_fiber(p)
            .iter()
            .flat_map(|x| self.top_fibers.preimages(x))
            .map(|y| self.project(&y))
            .collect();
        let mut out = Vec::with_capacity(points.len());
        let mut total = 0u64;
        for y in points {
            let d = self.local_degree_f(&y)?;
            total += u64::from(d);
            out.push((y, d));
        }
        if total != self.deg_f() {
            return Err(QoteError::IllDefined(Box::new(p.clone())));
        }
        Ok(out)
    }

    pub fn sphere_preimage_points(&self, p: &SpherePoint) -> BTreeSet<SpherePoint> {
        self.pi_fiber(p)
            .iter()
            .flat_map(|x| self.top_fibers.preimages(x))
            .map(|y| self.project(&y))
            .collect()
    }

    /// `F^-1(x)` on the covering torus.
    pub fn endomorphism_preimages(&self, x: &TorusPoint) -> Vec<TorusPoint> {
        self.top_fibers.preimages(x)
    }

    /// The tower `f^-m(P_f)` for `m = 0..=depth`.
    pub fn marked_sets(&self, depth: usize) -> MarkedSets {
        let mut levels: Vec<BTreeSet<SpherePoint>> =
            vec![self.postcritical.iter().cloned().collect()];
        let mut fresh = levels[0].clone();
        for _ in 0..depth {
            let mut next = levels.last().expect("level 0 exists").clone();
            let mut added = BTreeSet::new();
            for p in &fresh {
                for y in self.sphere_preimage_points(p) {
                    if next.insert(y.clone()) {
                        added.insert(y);
                    }
                }
            }
            levels.push(next);
            fresh = added;
        }
        MarkedSets { levels }
    }

    /// Degree check `deg(pi, F x) = deg(f, pi x) deg(pi, x)` at `x`.
    pub fn chain_rule_holds(&self, x: &TorusPoint) -> Result<bool, QoteError> {
        let lhs = self.local_degree_pi(&self.top.apply(x));
        let rhs = self.local_degree_f(&self.project(x))? * self.local_degree_pi(x);
        Ok(lhs == rhs)
    }
}

/// Nested finite sets `levels[m] = f^-m(P_f)`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct MarkedSets {
    pub levels: Vec<BTreeSet<SpherePoint>>,
}

impl MarkedSets {
    pub fn depth(&self) -> usize {
        self.levels.len() - 1
    }

    pub fn level(&self, m: usize) -> &BTreeSet<SpherePoint> {
        &self.levels[m]
    }

    pub fn sizes(&self) -> Vec<usize> {
        self.levels.iter().map(BTreeSet::len).collect()
    }

    pub fn is_nested(&self) -> bool {
        self.levels.windows(2).all(|w| w[0].is_subset(&w[1]))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{q, Mat2Z, Rat};
    use proptest::prelude::*;

    fn pt(a: i64, b: i64, c: i64, d: i64) -> TorusPoint {
        TorusPoint::new(q(a, b), q(c, d))
    }

    fn g(n: u32) -> RotationGroup {
        RotationGroup::new(n).unwrap()
    }

    fn doubling() -> AffineEndo {
        AffineEndo::linear(Mat2Z::scalar(2)).unwrap()
    }

    fn base_pair() -> QotePair {
        QotePair::standard(g(2), doubling()).unwrap()
    }

    fn hat_pair() -> QotePair {
        QotePair::validate(g(2), doubling(), doubling()).unwrap()
    }

    fn half_points() -> Vec<TorusPoint> {
        vec![pt(0, 1, 0, 1), pt(0, 1, 1, 2), pt(1, 2, 0, 1), pt(1, 2, 1, 2)]
    }

    #[test]
    fn validate_examples() {
        assert_eq!(base_pair().twist(), 0);
        assert_eq!(hat_pair().twist(), 0);
        assert_eq!(hat_pair().deg_pi(), 8);
        let bad = AffineEndo::linear(Mat2Z::new(1, 0, 0, 2)).unwrap();
        assert_eq!(
            QotePair::standard(g(4), bad).unwrap_err(),
            QoteError::NotEquivariant(MapRole::Endomorphism)
        );
        let shear = AffineEndo::linear(Mat2Z::new(1, 1, 0, 1)).unwrap();
        assert_eq!(
            QotePair::standard(g(2), shear).unwrap_err(),
            QoteError::DegreeTooSmall(1)
        );
        let q = AffineEndo::linear(Mat2Z::new(1, 0, 0, 2)).unwrap();
        assert_eq!(
            QotePair::validate(g(4), AffineEndo::linear(Mat2Z::scalar(2)).unwrap(), q).unwrap_err(),
            QoteError::NotEquivariant(MapRole::Precompose)
        );
    }

    #[test]
    fn validate_rejects_noncommuting_precompose() {
        let f = AffineEndo::linear(Mat2Z::new(1, 1, -1, 1)).unwrap();
        let q = AffineEndo::linear(Mat2Z::new(1, 1, 0, 1)).unwrap();
        assert_eq!(QotePair::validate(g(2), f, q).unwrap_err(), QoteError::NotCompatible);
    }

    #[test]
    fn pi_fiber_examples() {
        let p = base_pair();
        assert_eq!(p.pi_fiber(&p.project(&pt(1, 4, 0, 1))), vec![pt(1, 4, 0, 1), pt(3, 4, 0, 1)]);
        assert_eq!(p.pi_fiber(&p.project(&TorusPoint::origin())), vec![TorusPoint::origin()]);
        let h = hat_pair();
        assert_eq!(h.pi_fiber(&h.sphere_point(&Vec2Q::zero())), half_points());
    }

    #[test]
    fn local_degree_pi_examples() {
        assert_eq!(base_pair().local_degree_pi(&pt(1, 2, 0, 1)), 2);
        assert_eq!(base_pair().local_degree_pi(&pt(1, 3, 1, 7)), 1);
        assert_eq!(hat_pair().local_degree_pi(&pt(1, 4, 0, 1)), 2);
    }

    #[test]
    fn eval_f_examples() {
        let p = base_pair();
        assert_eq!(p.eval_f(&p.project(&pt(1, 4, 0, 1))).unwrap(), p.project(&pt(1, 2, 0, 1)));
        let o = p.project(&TorusPoint::origin());
        assert_eq!(p.eval_f(&o).unwrap(), o);

        let p3 = QotePair::standard(g(3), doubling()).unwrap();
        for (s, _) in g(3).projection_critical_points() {
            let img = p3.eval_f(&p3.project(&s)).unwrap();
            for lift in g(3).orbit(&s) {
                assert_eq!(p3.project(&doubling().apply(&lift)), img);
            }
        }
    }

    #[test]
    fn local_degree_f_examples() {
        let p = base_pair();
        assert_eq!(p.local_degree_f(&p.project(&pt(1, 4, 0, 1))).unwrap(), 2);
        assert_eq!(p.local_degree_f(&p.project(&TorusPoint::origin())).unwrap(), 1);
        assert_eq!(p.local_degree_f(&p.project(&pt(1, 3, 2, 7))).unwrap(), 1);
    }

    #[test]
    fn postcritical_examples() {
        let p = base_pair();
        let expected: Vec<SpherePoint> = half_points().iter().map(|x| p.project(x)).collect();
        assert_eq!(p.postcritical_set(), expected.as_slice());
        assert_eq!(p.projection_critical_set(), half_points().as_slice());
        assert_eq!(hat_pair().postcritical_set(), p.postcritical_set());
        assert_eq!(hat_pair().projection_critical_set().len(), 16);
        let p3 = QotePair::standard(g(3), doubling()).unwrap();
        assert_eq!(p3.postcritical_set().len(), 3);
    }

    #[test]
    fn critical_set_examples() {
        let p = base_pair();
        let crit = p.critical_set_f().unwrap();
        let lifts =
            [pt(0, 1, 1, 4), pt(1, 4, 0, 1), pt(1, 4, 1, 4), pt(1, 2, 1, 4), pt(1, 4, 1, 2), pt(1, 4, 3, 4)];
        let expected: BTreeSet<SpherePoint> = lifts.iter().map(|x| p.project(x)).collect();
        assert_eq!(crit.len(), 6);
        assert!(crit.iter().all(|(_, d)| *d == 2));
        assert_eq!(crit.iter().map(|(c, _)| c.clone()).collect::<BTreeSet<_>>(), expected);

        let pf: BTreeSet<SpherePoint> = p.postcritical_set().iter().cloned().collect();
        let level1 = p.marked_sets(1).levels[1].clone();
        let s_f: BTreeSet<SpherePoint> = level1.difference(&pf).cloned().collect();
        assert_eq!(s_f, expected);

        let p3 = QotePair::standard(g(3), doubling()).unwrap();
        let total: u32 = p3.critical_set_f().unwrap().iter().map(|(_, d)| d - 1).sum();
        assert_eq!(total, 6);
    }

    #[test]
    fn sphere_preimage_examples() {
        let p = base_pair();
        let o = p.project(&TorusPoint::origin());
        let pre = p.sphere_preimages(&o).unwrap();
        let expected: Vec<(SpherePoint, u32)> =
            half_points().iter().map(|x| (p.project(x), 1)).collect();
        assert_eq!(pre, expected);

        let pre = p.sphere_preimages(&p.project(&pt(1, 2, 0, 1))).unwrap();
        assert_eq!(pre, vec![(p.project(&pt(1, 4, 0, 1)), 2), (p.project(&pt(1, 4, 1, 2)), 2)]);

        let pre = p.sphere_preimages(&p.project(&pt(1, 5, 2, 7))).unwrap();
        assert_eq!(pre.len(), 4);
        assert!(pre.iter().all(|(_, d)| *d == 1));
    }

    #[test]
    fn marked_set_examples() {
        let p = base_pair();
        assert_eq!(p.marked_sets(0).sizes(), vec![4]);
        let m = p.marked_sets(3);
        assert_eq!(m.sizes()[1], 10);
        assert!(m.is_nested());
        for j in 0..m.depth() {
            for x in m.level(j + 1) {
                assert!(m.level(j).contains(&p.eval_f(x).unwrap()));
            }
        }
        for (a, b) in [(1, 5), (1, 8), (3, 8), (1, 16), (5, 16)] {
            let x = p.project(&pt(a, b, 0, 1));
            let fx = p.eval_f(&x).unwrap();
            for j in 0..m.depth() {
                assert_eq!(m.level(j + 1).contains(&x), m.level(j).contains(&fx));
            }
        }
    }

    #[test]
    fn hat_pair_induces_base_map() {
        let (p, h) = (base_pair(), hat_pair());
        let m = p.marked_sets(2);
        for x in m.level(2) {
            assert_eq!(p.eval_f(x).unwrap(), h.eval_f(x).unwrap());
            assert_eq!(p.local_degree_f(x).unwrap(), h.local_degree_f(x).unwrap());
        }
        assert_eq!(h.critical_set_f().unwrap(), p.critical_set_f().unwrap());
        assert_eq!(h.marked_sets(2), m);
    }

    #[test]
    fn power_pairs() {
        let p2 = base_pair().power(2).unwrap();
        assert_eq!(p2.deg_f(), 16);
        assert_eq!(p2.critical_set_f().unwrap().iter().map(|(_, d)| d - 1).sum::<u32>(), 30);
        let h3 = hat_pair().power(3).unwrap();
        assert_eq!(h3.deg_f(), 64);
    }

    fn equivariant_pairs() -> Vec<QotePair> {
        let mut out = Vec::new();
        for n in RotationGroup::ORDERS {
            let group = g(n);
            let shifts: Vec<Vec2Q> = (0..n as i64)
                .flat_map(|i| (0..n as i64).map(move |j| Vec2Q::new(q(i, n as i64), q(j, n as i64))))
                .collect();
            for e in 0..(5i64.pow(4)) {
                let m = Mat2Z::new(e % 5 - 2, e / 5 % 5 - 2, e / 25 % 5 - 2, e / 125 % 5 - 2);
                if m.det().abs() < 2 {
                    continue;
                }
                for b in &shifts {
                    let f = AffineEndo::new(m, b.clone()).unwrap();
                    if let Ok(p) = QotePair::standard(group, f.clone()) {
                        out.push(p);
                        out.push(QotePair::validate(group, f.clone(), f).unwrap());
                    }
                }
            }
        }
        out
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]
        #[test]
        fn pair_invariants(idx in 0usize..10_000, xs in 0i64..60, ys in 0i64..60) {
            thread_local! {
                static PAIRS: Vec<QotePair> = equivariant_pairs();
            }
            let p = PAIRS.with(|v| v[idx % v.len()].clone());
            let crit = p.critical_set_f().unwrap();
            let total: u64 = crit.iter().map(|(_, d)| u64::from(*d) - 1).sum();
            prop_assert_eq!(total, 2 * p.deg_f() - 2);

            let x = TorusPoint::new(Rat::new(xs, 60), Rat::new(ys, 60));
            prop_assert!(p.chain_rule_holds(&x).unwrap());
            for s in p.projection_critical_set() {
                prop_assert!(p.chain_rule_holds(s).unwrap());
            }

            let y = p.project(&x);
            let fiber_sum: u64 = p.pi_fiber(&y).iter().map(|z| u64::from(p.local_degree_pi(z))).sum();
            prop_assert_eq!(fiber_sum, p.deg_pi());

            let pre_sum: u64 = p.sphere_preimages(&y).unwrap().iter().map(|(_, d)| u64::from(*d)).sum();
            prop_assert_eq!(pre_sum, p.deg_f());

            for c in p.postcritical_set() {
                prop_assert!(p.postcritical_set().contains(&p.eval_f(c).unwrap()));
            }
            prop_assert!(p.marked_sets(1).is_nested());
        }
    }
}
