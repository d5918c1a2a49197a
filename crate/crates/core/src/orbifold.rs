//! Ramification functions, signatures and Euler characteristics of Thurston
//! map orbifolds, for abstract branch portraits and for QOTE pairs.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_integer::Integer;
use rand::Rng;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::lattice::Rat;
use crate::qote::{QoteError, QotePair};
use crate::torus::SpherePoint;

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OrbifoldError {
    #[error("portrait degree must be at least 2, got {0}")]
    DegreeTooSmall(u64),
    #[error("vertex {0} listed twice")]
    DuplicateVertex(String),
    #[error("unknown vertex {0}")]
    UnknownVertex(String),
    #[error("vertex {0} has no image")]
    MissingImage(String),
    #[error("vertex {0} has local degree 0")]
    ZeroLocalDegree(String),
    #[error("postcritical vertex {0} is not marked complete")]
    IncompletePortrait(String),
    #[error("ramification iteration did not stabilize")]
    NoConvergence,
    #[error("accumulated degree overflowed")]
    OracleOverflow,
}

/// A value of the ramification function: a positive integer or infinity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Nu {
    Finite(u64),
    Infinite,
}

impl Nu {
    pub fn lcm(self, other: Nu) -> Nu {
        match (self, other) {
            (Nu::Finite(a), Nu::Finite(b)) => Nu::Finite(a.lcm(&b)),
            _ => Nu::Infinite,
        }
    }

    pub fn times(self, k: u64) -> Nu {
        match self {
            Nu::Finite(a) => Nu::Finite(a * k),
            Nu::Infinite => Nu::Infinite,
        }
    }

    /// `1 / nu`, with `1 / inf = 0`.
    pub fn recip(self) -> Rat {
        match self {
            Nu::Finite(a) => Rat::new(1, a as i64),
            Nu::Infinite => Rat::zero(),
        }
    }

    /// Whether `self` is a multiple of `other`.
    pub fn is_multiple_of(self, other: Nu) -> bool {
        match (self, other) {
            (Nu::Infinite, _) => true,
            (Nu::Finite(_), Nu::Infinite) => false,
            (Nu::Finite(a), Nu::Finite(b)) => a % b == 0,
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Nu::Finite(_))
    }
}

impl fmt::Display for Nu {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Nu::Finite(a) => write!(f, "{a}"),
            Nu::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Nu {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Nu::Finite(a) => s.serialize_u64(*a),
            Nu::Infinite => s.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Nu {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Int(u64),
            Str(String),
        }
        match Raw::deserialize(d)? {
            Raw::Int(0) => Err(serde::de::Error::custom("ramification values are positive")),
            Raw::Int(a) => Ok(Nu::Finite(a)),
            Raw::Str(s) if s == "inf" => Ok(Nu::Infinite),
            Raw::Str(s) => Err(serde::de::Error::custom(format!("expected integer or \"inf\", got {s:?}"))),
        }
    }
}

/// Finite branch data of a Thurston map.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RamifiedPortrait {
    degree: u64,
    names: Vec<String>,
    sigma: Vec<usize>,
    delta: Vec<u64>,
    complete: Vec<bool>,
}

#[derive(Serialize, Deserialize)]
struct RawPortrait {
    degree: u64,
    vertices: Vec<String>,
    map: BTreeMap<String, String>,
    #[serde(default)]
    local_degrees: BTreeMap<String, u64>,
    #[serde(default)]
    complete: Vec<String>,
}

impl Serialize for RamifiedPortrait {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        let n = &self.names;
        RawPortrait {
            degree: self.degree,
            vertices: n.clone(),
            map: (0..n.len()).map(|v| (n[v].clone(), n[self.sigma[v]].clone())).collect(),
            local_degrees: (0..n.len()).map(|v| (n[v].clone(), self.delta[v])).collect(),
            complete: (0..n.len()).filter(|&v| self.complete[v]).map(|v| n[v].clone()).collect(),
        }
        .serialize(s)
    }
}

impl<'de> Deserialize<'de> for RamifiedPortrait {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let raw = RawPortrait::deserialize(d)?;
        RamifiedPortrait::from_raw(raw).map_err(serde::de::Error::custom)
    }
}

impl RamifiedPortrait {
    fn from_raw(raw: RawPortrait) -> Result<Self, OrbifoldError> {
        let index: BTreeMap<&str, usize> =
            raw.vertices.iter().enumerate().map(|(i, v)| (v.as_str(), i)).collect();
        if index.len() != raw.vertices.len() {
            let mut seen = BTreeSet::new();
            let dup = raw.vertices.iter().find(|v| !seen.insert(v.as_str())).expect("duplicate exists");
            return Err(OrbifoldError::DuplicateVertex(dup.clone()));
        }
        let lookup = |name: &String| {
            index.get(name.as_str()).copied().ok_or_else(|| OrbifoldError::UnknownVertex(name.clone()))
        };
        for name in raw.map.keys().chain(raw.local_degrees.keys()).chain(&raw.complete) {
            lookup(name)?;
        }
        let mut edges = Vec::with_capacity(raw.vertices.len());
        for v in &raw.vertices {
            let target = raw.map.get(v).ok_or_else(|| OrbifoldError::MissingImage(v.clone()))?;
            edges.push((v.clone(), lookup(target)?, raw.local_degrees.get(v).copied().unwrap_or(1)));
        }
        let mut complete = vec![false; raw.vertices.len()];
        for v in &raw.complete {
            complete[lookup(v)?] = true;
        }
        Self::new(raw.degree, edges, complete)
    }

    /// Builds a portrait from `(name, image index, local degree)` triples.
    pub fn new(
        degree: u64,
        vertices: Vec<(String, usize, u64)>,
        complete: Vec<bool>,
    ) -> Result<Self, OrbifoldError> {
        if degree < 2 {
            return Err(OrbifoldError::DegreeTooSmall(degree));
        }
        let n = vertices.len();
        assert_eq!(complete.len(), n);
        let mut names = Vec::with_capacity(n);
        let mut sigma = Vec::with_capacity(n);
        let mut delta = Vec::with_capacity(n);
        for (name, target, d) in vertices {
            if d == 0 {
                return Err(OrbifoldError::ZeroLocalDegree(name));
            }
            if target >= n {
                return Err(OrbifoldError::UnknownVertex(format!("#{target}")));
            }
            names.push(name);
            sigma.push(target);
            delta.push(d);
        }
        Ok(RamifiedPortrait { degree, names, sigma, delta, complete })
    }

    pub fn degree(&self) -> u64 {
        self.degree
    }

    pub fn len(&self) -> usize {
        self.names.len()
    }

    pub fn is_empty(&self) -> bool {
        self.names.is_empty()
    }

    pub fn name(&self, v: usize) -> &str {
        &self.names[v]
    }

    pub fn image(&self, v: usize) -> usize {
        self.sigma[v]
    }

    pub fn local_degree(&self, v: usize) -> u64 {
        self.delta[v]
    }

    pub fn is_complete(&self, v: usize) -> bool {
        self.complete[v]
    }

    pub fn preimages(&self, w: usize) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(move |&v| self.sigma[v] == w)
    }

    pub fn critical(&self) -> Vec<usize> {
        (0..self.len()).filter(|&v| self.delta[v] > 1).collect()
    }

    /// `P = union over k >= 1 of sigma^k(critical)`, sorted by index.
    pub fn postcritical(&self) -> Vec<usize> {
        let mut seen = vec![false; self.len()];
        let mut stack: Vec<usize> = self.critical().iter().map(|&c| self.sigma[c]).collect();
        while let Some(v) = stack.pop() {
            if !seen[v] {
                seen[v] = true;
                stack.push(self.sigma[v]);
            }
        }
        (0..self.len()).filter(|&v| seen[v]).collect()
    }

    /// Critical vertices lying on a cycle of `sigma`.
    pub fn periodic_critical(&self) -> Vec<usize> {
        self.critical().into_iter().filter(|&c| self.is_periodic(c)).collect()
    }

    fn is_periodic(&self, v: usize) -> bool {
        let mut w = self.sigma[v];
        for _ in 0..self.len() {
            if w == v {
                return true;
            }
            w = self.sigma[w];
        }
        false
    }

    /// Complete vertices whose preimage degrees do not sum to `d`, with the sum found.
    pub fn degree_defects(&self) -> Vec<(String, u64)> {
        (0..self.len())
            .filter(|&w| self.complete[w])
            .map(|w| (w, self.preimages(w).map(|v| self.delta[v]).sum::<u64>()))
            .filter(|&(_, s)| s != self.degree)
            .map(|(w, s)| (self.names[w].clone(), s))
            .collect()
    }

    /// `sum (delta - 1)` over listed vertices.
    pub fn critical_total(&self) -> u64 {
        self.delta.iter().map(|d| d - 1).sum()
    }

    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.names.iter().position(|n| n == name)
    }
}

/// Ramification data on the postcritical set.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct OrbifoldData {
    pub nu: BTreeMap<String, Nu>,
    pub signature: Vec<Nu>,
    pub chi: Rat,
}

impl OrbifoldData {
    pub fn from_nu(nu: BTreeMap<String, Nu>) -> Self {
        let mut signature: Vec<Nu> =
            nu.values().copied().filter(|v| *v != Nu::Finite(1)).collect();
        signature.sort();
        let chi = chi_of(&signature);
        OrbifoldData { nu, signature, chi }
    }

    pub fn from_signature(signature: &[Nu]) -> Self {
        let nu = signature.iter().enumerate().map(|(i, v)| (format!("p{i}"), *v)).collect();
        Self::from_nu(nu)
    }

    pub fn has_infinity(&self) -> bool {
        self.signature.contains(&Nu::Infinite)
    }

    pub fn signature_string(&self) -> String {
        let parts: Vec<String> = self.signature.iter().map(Nu::to_string).collect();
        format!("({})", parts.join(","))
    }
}

fn chi_of(signature: &[Nu]) -> Rat {
    let sum: Rat = signature.iter().map(|v| Rat::one() - v.recip()).sum();
    Rat::from_int(2) - sum
}

/// `nu` on the postcritical vertices: least fixed point of
/// `nu(x) = lcm nu(y) delta(y)` over `sigma(y) = x`.
pub fn ramification(portrait: &RamifiedPortrait) -> Result<OrbifoldData, OrbifoldError> {
    let post = portrait.postcritical();
    if let Some(&v) = post.iter().find(|&&v| !portrait.is_complete(v)) {
        return Err(OrbifoldError::IncompletePortrait(portrait.name(v).to_string()));
    }
    let mut in_post = vec![false; portrait.len()];
    for &v in &post {
        in_post[v] = true;
    }
    let mut nu = vec![Nu::Finite(1); portrait.len()];
    for c in portrait.periodic_critical() {
        let mut w = c;
        loop {
            nu[w] = Nu::Infinite;
            w = portrait.image(w);
            if w == c {
                break;
            }
        }
    }
    let mut stable = false;
    for _ in 0..post.len() + 2 {
        let mut changed = false;
        for &x in &post {
            if !nu[x].is_finite() {
                continue;
            }
            let target = portrait
                .preimages(x)
                .map(|y| nu[y].times(portrait.local_degree(y)))
                .fold(nu[x], Nu::lcm);
            if target != nu[x] {
                nu[x] = target;
                changed = true;
            }
        }
        if !changed {
            stable = true;
            break;
        }
    }
    if !stable {
        return Err(OrbifoldError::NoConvergence);
    }
    Ok(OrbifoldData::from_nu(
        post.iter().map(|&v| (portrait.name(v).to_string(), nu[v])).collect(),
    ))
}

/// Whether `nu` (on postcritical vertices, 1 elsewhere) satisfies the
/// multiple condition at every postcritical vertex.
pub fn satisfies_multiple_condition(portrait: &RamifiedPortrait, nu: &BTreeMap<String, Nu>) -> bool {
    let value = |v: usize| nu.get(portrait.name(v)).copied().unwrap_or(Nu::Finite(1));
    portrait.postcritical().into_iter().all(|x| {
        portrait.preimages(x).all(|y| value(x).is_multiple_of(value(y).times(portrait.local_degree(y))))
    })
}

/// Checks that lowering any single finite value to a proper divisor breaks
/// the multiple condition.
pub fn is_divisibility_minimal(portrait: &RamifiedPortrait, nu: &BTreeMap<String, Nu>) -> bool {
    if !satisfies_multiple_condition(portrait, nu) {
        return false;
    }
    nu.iter().all(|(name, v)| match v {
        Nu::Infinite => true,
        Nu::Finite(a) => (1..*a).filter(|d| a % d == 0).all(|d| {
            let mut lowered = nu.clone();
            lowered.insert(name.clone(), Nu::Finite(d));
            !satisfies_multiple_condition(portrait, &lowered)
        }),
    })
}

/// `lcm { deg(sigma^m, y) : m <= depth, sigma^m(y) = p }` for each postcritical
/// `p`, by expanding backward trees from complete vertices.
pub fn ramification_oracle(
    portrait: &RamifiedPortrait,
    depth: usize,
) -> Result<BTreeMap<String, u64>, OrbifoldError> {
    let mut out = BTreeMap::new();
    for p in portrait.postcritical() {
        let mut frontier: BTreeSet<(usize, u64)> = BTreeSet::from([(p, 1)]);
        let mut acc = 1u64;
        for _ in 0..depth {
            let mut next = BTreeSet::new();
            for &(v, a) in &frontier {
                if !portrait.is_complete(v) {
                    continue;
                }
                for y in portrait.preimages(v) {
                    let b = a.checked_mul(portrait.local_degree(y)).ok_or(OrbifoldError::OracleOverflow)?;
                    acc = acc.lcm(&b);
                    next.insert((y, b));
                }
            }
            frontier = next;
        }
        out.insert(portrait.name(p).to_string(), acc);
    }
    Ok(out)
}

/// The oracle evaluated directly on a pair through exact sphere preimages.
pub fn ramification_oracle_pair(
    pair: &QotePair,
    depth: usize,
) -> Result<BTreeMap<SpherePoint, u64>, QoteError> {
    let post: BTreeSet<SpherePoint> = pair.postcritical_set().iter().cloned().collect();
    let mut preimages: BTreeMap<SpherePoint, Vec<(SpherePoint, u32)>> = BTreeMap::new();
    for p in &post {
        preimages.insert(p.clone(), pair.sphere_preimages(p)?);
    }
    let mut out = BTreeMap::new();
    for p in &post {
        let mut frontier: BTreeSet<(SpherePoint, u64)> = BTreeSet::from([(p.clone(), 1)]);
        let mut acc = 1u64;
        for _ in 0..depth {
            let mut next = BTreeSet::new();
            for (v, a) in &frontier {
                let Some(pre) = preimages.get(v) else { continue };
                for (y, d) in pre {
                    let b = a * u64::from(*d);
                    acc = acc.lcm(&b);
                    next.insert((y.clone(), b));
                }
            }
            frontier = next;
        }
        out.insert(p.clone(), acc);
    }
    Ok(out)
}

/// Portrait of `f` on `P_f` together with `f^-1(P_f)`; labels are the
/// canonical orbit representatives. Returns the sphere points in vertex order.
pub fn portrait_from_qote(
    pair: &QotePair,
) -> Result<(RamifiedPortrait, Vec<SpherePoint>), QoteError> {
    let marked = pair.marked_sets(1);
    let points: Vec<SpherePoint> = marked.level(1).iter().cloned().collect();
    let index: BTreeMap<&SpherePoint, usize> =
        points.iter().enumerate().map(|(i, p)| (p, i)).collect();
    let mut vertices = Vec::with_capacity(points.len());
    for p in &points {
        let image = pair.eval_f(p)?;
        let target = *index.get(&image).expect("f maps f^-1(P_f) into P_f");
        vertices.push((p.to_string(), target, u64::from(pair.local_degree_f(p)?)));
    }
    let complete = points.iter().map(|p| marked.level(0).contains(p)).collect();
    let portrait = RamifiedPortrait::new(pair.deg_f(), vertices, complete)
        .expect("pairs have degree at least 2 and positive local degrees");
    Ok((portrait, points))
}

pub fn euler_characteristic(data: &OrbifoldData) -> Rat {
    chi_of(&data.signature)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Classification {
    Parabolic,
    Hyperbolic,
    NotRealizable,
}

impl fmt::Display for Classification {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Classification::Parabolic => "parabolic",
            Classification::Hyperbolic => "hyperbolic",
            Classification::NotRealizable => "not_realizable",
        })
    }
}

pub fn classify(data: &OrbifoldData) -> Classification {
    let chi = euler_characteristic(data);
    if chi.is_zero() {
        Classification::Parabolic
    } else if chi.is_negative() {
        Classification::Hyperbolic
    } else {
        Classification::NotRealizable
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Taxonomy {
    /// Lattes-type, no periodic critical points.
    LattesType,
    /// Parabolic with periodic critical points.
    PeriodicCritical,
}

impl fmt::Display for Taxonomy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Taxonomy::LattesType => "Lattes-type (no periodic critical points)",
            Taxonomy::PeriodicCritical => "parabolic with periodic critical points",
        })
    }
}

pub fn signature_taxonomy(data: &OrbifoldData) -> Option<Taxonomy> {
    use Nu::{Finite as F, Infinite as I};
    const LATTES: [&[Nu]; 4] =
        [&[F(2), F(2), F(2), F(2)], &[F(2), F(4), F(4)], &[F(3), F(3), F(3)], &[F(2), F(3), F(6)]];
    const PERIODIC: [&[Nu]; 2] = [&[I, I], &[F(2), F(2), I]];
    let sig = data.signature.as_slice();
    if LATTES.contains(&sig) {
        Some(Taxonomy::LattesType)
    } else if PERIODIC.contains(&sig) {
        Some(Taxonomy::PeriodicCritical)
    } else {
        None
    }
}

/// Random consistent portrait with finite `nu` and at most `max_vertices`
/// vertices: every postcritical vertex is complete with preimage degrees
/// summing to the degree.
pub fn random_portrait<R: Rng>(rng: &mut R, max_vertices: usize) -> RamifiedPortrait {
    assert!(max_vertices >= 3);
    loop {
        let core = rng.random_range(2..=max_vertices.min(6));
        let sigma: Vec<usize> = (0..core).map(|_| rng.random_range(0..core)).collect();
        let delta: Vec<u64> = (0..core).map(|_| [1, 1, 2, 2, 3][rng.random_range(0..5)]).collect();
        let draft = RamifiedPortrait::new(
            2,
            (0..core).map(|v| (format!("v{v}"), sigma[v], delta[v])).collect(),
            vec![false; core],
        )
        .expect("draft portrait is well formed");
        if draft.critical().is_empty() || !draft.periodic_critical().is_empty() {
            continue;
        }
        let post = draft.postcritical();
        let sums: Vec<u64> =
            post.iter().map(|&w| draft.preimages(w).map(|v| delta[v]).sum()).collect();
        let degree = sums.iter().copied().max().unwrap_or(2).max(2);
        let fillers: u64 = sums.iter().map(|s| degree - s).sum();
        if core + fillers as usize > max_vertices {
            continue;
        }
        let mut vertices: Vec<(String, usize, u64)> =
            (0..core).map(|v| (format!("v{v}"), sigma[v], delta[v])).collect();
        for (&w, s) in post.iter().zip(&sums) {
            for _ in *s..degree {
                vertices.push((format!("v{}", vertices.len()), w, 1));
            }
        }
        let mut complete = vec![false; vertices.len()];
        for &w in &post {
            complete[w] = true;
        }
        return RamifiedPortrait::new(degree, vertices, complete).expect("portrait is well formed");
    }
}
