//! Points of the torus `R^2 / Z^2`, affine torus endomorphisms, and the cyclic
//! rotation groups whose quotient map `pi0: T^2 -> S^2` is the projection of the
//! Lattes-type model.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::lattice::{solve_congruence, Mat2Q, Mat2Z, Rat, Vec2Q};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TorusError {
    #[error("linear part {0} is singular")]
    Singular(Mat2Z),
    #[error("unsupported rotation order {0} (expected 2, 3, 4 or 6)")]
    UnsupportedOrder(u32),
}

/// A point of `R^2 / Z^2`, stored with coordinates in `[0, 1)`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(from = "Vec2Q", into = "Vec2Q")]
pub struct TorusPoint(Vec2Q);

impl TorusPoint {
    pub fn new(x: Rat, y: Rat) -> Self {
        TorusPoint(Vec2Q::new(x.fract(), y.fract()))
    }

    pub fn origin() -> Self {
        TorusPoint(Vec2Q::zero())
    }

    pub fn x(&self) -> &Rat {
        &self.0.x
    }

    pub fn y(&self) -> &Rat {
        &self.0.y
    }

    pub fn coords(&self) -> &Vec2Q {
        &self.0
    }

    pub fn is_origin(&self) -> bool {
        self.0.x.is_zero() && self.0.y.is_zero()
    }

    pub fn add(&self, other: &TorusPoint) -> TorusPoint {
        TorusPoint::from(&self.0 + &other.0)
    }

    pub fn sub(&self, other: &TorusPoint) -> TorusPoint {
        TorusPoint::from(&self.0 - &other.0)
    }

    /// `M x mod Z^2`.
    pub fn transform(&self, m: &Mat2Z) -> TorusPoint {
        TorusPoint::from(m.apply(&self.0))
    }
}

impl From<Vec2Q> for TorusPoint {
    fn from(v: Vec2Q) -> Self {
        TorusPoint::new(v.x, v.y)
    }
}

impl From<TorusPoint> for Vec2Q {
    fn from(p: TorusPoint) -> Self {
        p.0
    }
}

impl fmt::Debug for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl fmt::Display for TorusPoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Torus endomorphism `x -> A x + b`, translation kept in `[0,1)^2`.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawEndo", into = "RawEndo")]
pub struct AffineEndo {
    a: Mat2Z,
    b: TorusPoint,
}

#[derive(Serialize, Deserialize)]
struct RawEndo {
    #[serde(rename = "A")]
    a: Mat2Z,
    #[serde(default)]
    b: Vec2Q,
}

impl TryFrom<RawEndo> for AffineEndo {
    type Error = TorusError;
    fn try_from(raw: RawEndo) -> Result<Self, TorusError> {
        AffineEndo::new(raw.a, raw.b)
    }
}

impl From<AffineEndo> for RawEndo {
    fn from(e: AffineEndo) -> Self {
        RawEndo { a: e.a, b: e.b.into() }
    }
}

impl AffineEndo {
    pub fn new(a: Mat2Z, b: Vec2Q) -> Result<Self, TorusError> {
        if a.det() == 0 {
            return Err(TorusError::Singular(a));
        }
        Ok(AffineEndo { a, b: TorusPoint::from(b) })
    }

    pub fn linear(a: Mat2Z) -> Result<Self, TorusError> {
        Self::new(a, Vec2Q::zero())
    }

    pub fn identity() -> Self {
        AffineEndo { a: Mat2Z::IDENTITY, b: TorusPoint::origin() }
    }

    pub fn matrix(&self) -> &Mat2Z {
        &self.a
    }

    pub fn translation(&self) -> &TorusPoint {
        &self.b
    }

    pub fn det(&self) -> i64 {
        self.a.det()
    }

    /// Topological degree `|det A|`.
    pub fn degree(&self) -> u64 {
        self.a.det().unsigned_abs()
    }

    pub fn apply(&self, p: &TorusPoint) -> TorusPoint {
        TorusPoint::from(&self.a.apply(p.coords()) + self.b.coords())
    }

    /// `self o other`.
    pub fn compose(&self, other: &AffineEndo) -> AffineEndo {
        let b = &self.a.apply(other.b.coords()) + self.b.coords();
        AffineEndo { a: self.a * other.a, b: TorusPoint::from(b) }
    }

    pub fn pow(&self, k: u32) -> AffineEndo {
        (0..k).fold(AffineEndo::identity(), |acc, _| self.compose(&acc))
    }

    /// All `x` with `A x + b = p`, via the congruence solver.
    pub fn preimages(&self, p: &TorusPoint) -> Vec<TorusPoint> {
        let rhs = p.sub(&self.b);
        solve_congruence(&self.a.to_int_matrix(), &rhs.coords().to_vec())
            .expect("nonsingular congruence always has solutions")
            .points()
            .into_iter()
            .map(|v| TorusPoint::new(v[0].clone(), v[1].clone()))
            .collect()
    }

    /// Precomputed data for repeated preimage queries.
    pub fn fiber_solver(&self) -> FiberSolver {
        FiberSolver {
            inverse: self.a.to_rational().inverse().expect("nonsingular"),
            translation: self.b.clone(),
            kernel: deck_group(self),
        }
    }
}

impl fmt::Debug for AffineEndo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({:?}, {})", self.a, self.b)
    }
}

impl fmt::Display for AffineEndo {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "x -> {} x + {}", self.a, self.b)
    }
}

/// Preimages of an affine endomorphism as `A^-1 (p - b) + ker`.
#[derive(Debug, Clone)]
pub struct FiberSolver {
    inverse: Mat2Q,
    translation: TorusPoint,
    kernel: Vec<TorusPoint>,
}

impl FiberSolver {
    pub fn kernel(&self) -> &[TorusPoint] {
        &self.kernel
    }

    pub fn preimages(&self, p: &TorusPoint) -> Vec<TorusPoint> {
        let base = TorusPoint::from(self.inverse.apply(p.sub(&self.translation).coords()));
        self.kernel.iter().map(|k| base.add(k)).collect()
    }
}

/// Deck transformations of `E`: the translations `v` with `A v` integral.
pub fn deck_group(e: &AffineEndo) -> Vec<TorusPoint> {
    solve_congruence(&e.a.to_int_matrix(), &[Rat::zero(), Rat::zero()])
        .expect("homogeneous system is solvable")
        .points()
        .into_iter()
        .map(|v| TorusPoint::new(v[0].clone(), v[1].clone()))
        .collect()
}

/// Cyclic rotation group of order 2, 3, 4 or 6 acting on the torus in lattice
/// coordinates.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "RawGroup", into = "RawGroup")]
pub struct RotationGroup {
    order: u32,
}

#[derive(Serialize, Deserialize)]
struct RawGroup {
    rotation_order: u32,
}

impl TryFrom<RawGroup> for RotationGroup {
    type Error = TorusError;
    fn try_from(raw: RawGroup) -> Result<Self, TorusError> {
        RotationGroup::new(raw.rotation_order)
    }
}

impl From<RotationGroup> for RawGroup {
    fn from(g: RotationGroup) -> Self {
        RawGroup { rotation_order: g.order }
    }
}

impl fmt::Debug for RotationGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "C{}", self.order)
    }
}

impl RotationGroup {
    pub const ORDERS: [u32; 4] = [2, 3, 4, 6];

    pub fn new(order: u32) -> Result<Self, TorusError> {
        if Self::ORDERS.contains(&order) {
            Ok(RotationGroup { order })
        } else {
            Err(TorusError::UnsupportedOrder(order))
        }
    }

    pub fn order(&self) -> u32 {
        self.order
    }

    pub fn generator(&self) -> Mat2Z {
        match self.order {
            2 => Mat2Z::new(-1, 0, 0, -1),
            3 => Mat2Z::new(0, -1, 1, -1),
            4 => Mat2Z::new(0, -1, 1, 0),
            6 => Mat2Z::new(1, -1, 1, 0),
            _ => unreachable!("order checked at construction"),
        }
    }

    /// `R^k`, exponent taken mod the order.
    pub fn rotation(&self, k: u32) -> Mat2Z {
        self.generator().pow(k % self.order)
    }

    pub fn stabilizer_order(&self, x: &TorusPoint) -> u32 {
        let r = self.generator();
        let mut y = x.clone();
        let mut count = 1;
        for _ in 1..self.order {
            y = y.transform(&r);
            if y == *x {
                count += 1;
            }
        }
        count
    }

    /// The distinct points `R^k x`.
    pub fn orbit(&self, x: &TorusPoint) -> Vec<TorusPoint> {
        let r = self.generator();
        let mut out = vec![x.clone()];
        let mut y = x.clone();
        for _ in 1..self.order {
            y = y.transform(&r);
            if !out.contains(&y) {
                out.push(y.clone());
            }
        }
        out
    }

    pub fn sphere_canonical(&self, x: &TorusPoint) -> SpherePoint {
        let r = self.generator();
        let mut best = x.clone();
        let mut y = x.clone();
        for _ in 1..self.order {
            y = y.transform(&r);
            if y < best {
                best = y.clone();
            }
        }
        SpherePoint { rep: best, order: self.order }
    }

    /// Points with nontrivial stabilizer, with their local degree under `pi0`.
    pub fn projection_critical_points(&self) -> Vec<(TorusPoint, u32)> {
        let mut pts: Vec<TorusPoint> = Vec::new();
        for k in 1..self.order {
            let m = self.rotation(k) - Mat2Z::IDENTITY;
            let fam = solve_congruence(&m.to_int_matrix(), &[Rat::zero(), Rat::zero()])
                .expect("homogeneous system is solvable");
            for v in fam.points() {
                let p = TorusPoint::new(v[0].clone(), v[1].clone());
                if !pts.contains(&p) {
                    pts.push(p);
                }
            }
        }
        pts.sort();
        pts.into_iter()
            .map(|p| {
                let d = self.stabilizer_order(&p);
                (p, d)
            })
            .collect()
    }

    /// The `j` with `A R = R^j A` and `(I - R^j) b` integral, if any.
    pub fn check_equivariance(&self, e: &AffineEndo) -> Option<u32> {
        let r = self.generator();
        let ar = *e.matrix() * r;
        (0..self.order).find(|&j| {
            let rj = self.rotation(j);
            ar == rj * *e.matrix()
                && (Mat2Z::IDENTITY - rj).apply(e.translation().coords()).is_integral()
        })
    }
}

/// A point of the sphere `T^2 / <R>`, stored as the lexicographically smallest
/// point of its orbit.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct SpherePoint {
    rep: TorusPoint,
    order: u32,
}

impl SpherePoint {
    pub fn representative(&self) -> &TorusPoint {
        &self.rep
    }

    pub fn group_order(&self) -> u32 {
        self.order
    }
}

impl Serialize for SpherePoint {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.rep.serialize(s)
    }
}

impl fmt::Debug for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}]", self.rep)
    }
}

impl fmt::Display for SpherePoint {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.rep)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::q;
    use proptest::prelude::*;

    fn pt(a: i64, b: i64, c: i64, d: i64) -> TorusPoint {
        TorusPoint::new(q(a, b), q(c, d))
    }

    fn doubling() -> AffineEndo {
        AffineEndo::linear(Mat2Z::scalar(2)).unwrap()
    }

    fn half_points() -> Vec<TorusPoint> {
        vec![pt(0, 1, 0, 1), pt(0, 1, 1, 2), pt(1, 2, 0, 1), pt(1, 2, 1, 2)]
    }

    #[test]
    fn apply_examples() {
        assert_eq!(doubling().apply(&pt(1, 4, 0, 1)), pt(1, 2, 0, 1));
        assert_eq!(doubling().apply(&pt(1, 2, 1, 2)), TorusPoint::origin());
        let shear = AffineEndo::linear(Mat2Z::new(1, 1, 0, 1)).unwrap();
        assert_eq!(shear.apply(&pt(1, 3, 2, 3)), pt(0, 1, 2, 3));
    }

    #[test]
    fn preimage_examples() {
        assert_eq!(doubling().preimages(&TorusPoint::origin()), half_points());
        assert_eq!(
            doubling().preimages(&pt(1, 2, 0, 1)),
            vec![pt(1, 4, 0, 1), pt(1, 4, 1, 2), pt(3, 4, 0, 1), pt(3, 4, 1, 2)]
        );
        let e = AffineEndo::linear(Mat2Z::new(2, 1, 0, 2)).unwrap();
        let pre = e.preimages(&TorusPoint::origin());
        assert_eq!(pre.len(), 4);
        assert!(pre.iter().all(|x| e.apply(x).is_origin()));
    }

    #[test]
    fn deck_group_examples() {
        assert_eq!(deck_group(&doubling()), half_points());
        let g = deck_group(&AffineEndo::linear(Mat2Z::new(1, 1, -1, 1)).unwrap());
        assert_eq!(g, vec![TorusPoint::origin(), pt(1, 2, 1, 2)]);
        let g = deck_group(&AffineEndo::linear(Mat2Z::new(3, 0, 0, 1)).unwrap());
        assert_eq!(g, vec![TorusPoint::origin(), pt(1, 3, 0, 1), pt(2, 3, 0, 1)]);
    }

    #[test]
    fn generators_have_exact_order() {
        for n in RotationGroup::ORDERS {
            let g = RotationGroup::new(n).unwrap();
            let r = g.generator();
            assert_eq!(r.det(), 1);
            assert_eq!(r.pow(n), Mat2Z::IDENTITY);
            for k in 1..n {
                assert_ne!(r.pow(k), Mat2Z::IDENTITY);
            }
        }
        assert_eq!(RotationGroup::new(5), Err(TorusError::UnsupportedOrder(5)));
    }

    #[test]
    fn stabilizer_examples() {
        let g2 = RotationGroup::new(2).unwrap();
        assert_eq!(g2.stabilizer_order(&pt(1, 2, 0, 1)), 2);
        assert_eq!(g2.stabilizer_order(&pt(1, 3, 0, 1)), 1);
        let g4 = RotationGroup::new(4).unwrap();
        assert_eq!(g4.stabilizer_order(&pt(1, 2, 1, 2)), 4);
    }

    #[test]
    fn critical_points_of_projection() {
        let g2 = RotationGroup::new(2).unwrap();
        let crit = g2.projection_critical_points();
        assert_eq!(crit.iter().map(|(p, _)| p.clone()).collect::<Vec<_>>(), half_points());
        assert!(crit.iter().all(|(_, d)| *d == 2));

        let g3 = RotationGroup::new(3).unwrap();
        let crit = g3.projection_critical_points();
        assert_eq!(crit.len(), 3);
        assert!(crit.iter().all(|(_, d)| *d == 3));

        let g4 = RotationGroup::new(4).unwrap();
        let crit = g4.projection_critical_points();
        assert_eq!(
            crit,
            vec![
                (TorusPoint::origin(), 4),
                (pt(0, 1, 1, 2), 2),
                (pt(1, 2, 0, 1), 2),
                (pt(1, 2, 1, 2), 4)
            ]
        );
        assert_eq!(g4.sphere_canonical(&pt(1, 2, 0, 1)), g4.sphere_canonical(&pt(0, 1, 1, 2)));

        let g6 = RotationGroup::new(6).unwrap();
        let degrees: Vec<u32> = g6.projection_critical_points().iter().map(|(_, d)| *d).collect();
        // origin (6), two order-3 points, three order-2 points
        assert_eq!(degrees.iter().filter(|&&d| d == 6).count(), 1);
        assert_eq!(degrees.iter().filter(|&&d| d == 3).count(), 2);
        assert_eq!(degrees.iter().filter(|&&d| d == 2).count(), 3);
    }

    #[test]
    fn sphere_canonical_examples() {
        let g2 = RotationGroup::new(2).unwrap();
        let s = g2.sphere_canonical(&pt(3, 4, 0, 1));
        assert_eq!(s.representative(), &pt(1, 4, 0, 1));
        assert_eq!(g2.orbit(&pt(3, 4, 0, 1)).len(), 2);
        assert_eq!(g2.sphere_canonical(&pt(1, 2, 0, 1)).representative(), &pt(1, 2, 0, 1));
        assert_eq!(g2.orbit(&pt(1, 2, 0, 1)).len(), 1);
        let g4 = RotationGroup::new(4).unwrap();
        let orbit = g4.orbit(&pt(1, 4, 0, 1));
        assert_eq!(orbit.len(), 4);
        assert_eq!(g4.sphere_canonical(&pt(1, 4, 0, 1)).representative(), &pt(0, 1, 1, 4));
    }

    #[test]
    fn equivariance_examples() {
        let g2 = RotationGroup::new(2).unwrap();
        let shear = AffineEndo::linear(Mat2Z::new(2, 1, 1, 1)).unwrap();
        assert_eq!(g2.check_equivariance(&shear), Some(1));
        let shifted = AffineEndo::new(Mat2Z::scalar(2), Vec2Q::new(q(1, 2), Rat::zero())).unwrap();
        assert_eq!(g2.check_equivariance(&shifted), Some(1));
        let bad = AffineEndo::new(Mat2Z::scalar(2), Vec2Q::new(q(1, 3), Rat::zero())).unwrap();
        assert_eq!(g2.check_equivariance(&bad), None);
        let g4 = RotationGroup::new(4).unwrap();
        let e = AffineEndo::linear(Mat2Z::new(1, 0, 0, 2)).unwrap();
        assert_eq!(g4.check_equivariance(&e), None);
    }

    #[test]
    fn sphere_canonical_separates_orbits_exhaustively() {
        for n in RotationGroup::ORDERS {
            let g = RotationGroup::new(n).unwrap();
            let den = 6;
            let pts: Vec<TorusPoint> = (0..den)
                .flat_map(|a| (0..den).map(move |b| pt(a, den, b, den)))
                .collect();
            for x in &pts {
                let orbit = g.orbit(x);
                assert_eq!(n % orbit.len() as u32, 0);
                assert_eq!(orbit.len() as u32 * g.stabilizer_order(x), n);
                for y in &pts {
                    let same = orbit.contains(y);
                    assert_eq!(g.sphere_canonical(x) == g.sphere_canonical(y), same);
                }
            }
            let crit: Vec<TorusPoint> =
                g.projection_critical_points().into_iter().map(|(p, _)| p).collect();
            for x in &pts {
                assert_eq!(g.stabilizer_order(x) > 1, crit.contains(x));
            }
        }
    }

    proptest! {
        #[test]
        fn preimages_contain_argument(a in -3i64..=3, b in -3i64..=3, c in -3i64..=3, d in -3i64..=3,
                                      x in 0i64..12, y in 0i64..12, bx in 0i64..4, by in 0i64..4) {
            let m = Mat2Z::new(a, b, c, d);
            prop_assume!(m.det() != 0);
            let e = AffineEndo::new(m, Vec2Q::new(q(bx, 4), q(by, 4))).unwrap();
            let p = pt(x, 12, y, 12);
            let img = e.apply(&p);
            let pre = e.preimages(&img);
            prop_assert_eq!(pre.len() as u64, e.degree());
            prop_assert!(pre.contains(&p));
            prop_assert!(pre.iter().all(|z| e.apply(z) == img));
            let mut fast = e.fiber_solver().preimages(&img);
            fast.sort();
            prop_assert_eq!(fast, pre);
        }

        #[test]
        fn deck_group_is_a_group(a in -3i64..=3, b in -3i64..=3, c in -3i64..=3, d in -3i64..=3) {
            let m = Mat2Z::new(a, b, c, d);
            prop_assume!(m.det() != 0);
            let g = deck_group(&AffineEndo::linear(m).unwrap());
            prop_assert_eq!(g.len() as u64, m.det().unsigned_abs());
            prop_assert!(g.contains(&TorusPoint::origin()));
            for u in &g {
                for v in &g {
                    prop_assert!(g.contains(&u.add(v)));
                }
            }
        }
    }
}
