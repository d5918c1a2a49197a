//! Solution sets of linear congruences `M x = c (mod Z^m)` on the torus `R^n / Z^n`.

use serde::Serialize;

use super::matrix::IntMatrix;
use super::normal_form::{smith, unimodular_inverse, SuperLattice};
use super::rat::Rat;
use super::LatticeError;

/// One connected component `offset + span(generators)` of a closed subset of
/// the torus.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub struct CosetComponent {
    pub offset: Vec<Rat>,
    pub generators: Vec<Vec<Rat>>,
}

impl CosetComponent {
    pub fn is_point(&self) -> bool {
        self.generators.is_empty()
    }

    pub fn dimension(&self) -> usize {
        self.generators.len()
    }

    /// Point of the component at parameters `t` (one per generator), reduced to `[0,1)^d`.
    pub fn point_at(&self, t: &[Rat]) -> Vec<Rat> {
        assert_eq!(t.len(), self.generators.len());
        let mut x = self.offset.clone();
        for (ti, g) in t.iter().zip(&self.generators) {
            for (xi, gi) in x.iter_mut().zip(g) {
                *xi += &(ti * gi);
            }
        }
        x.iter().map(Rat::fract).collect()
    }
}

/// A finite union of pairwise disjoint cosets of one closed subgroup of
/// `R^d / Z^d`, in canonical form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct CosetFamily {
    pub dim: usize,
    pub components: Vec<CosetComponent>,
}

/// Reduced row echelon basis of a rational subspace (leading entries 1).
fn rref(vectors: &[Vec<Rat>], dim: usize) -> (Vec<Vec<Rat>>, Vec<usize>) {
    let mut rows: Vec<Vec<Rat>> = vectors.to_vec();
    let mut pivots = Vec::new();
    let mut r = 0;
    for col in 0..dim {
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][col].is_zero()) else { continue };
        rows.swap(r, p);
        let inv = rows[r][col].recip();
        for x in rows[r].iter_mut() {
            *x *= &inv;
        }
        for i in 0..rows.len() {
            if i != r && !rows[i][col].is_zero() {
                let f = rows[i][col].clone();
                for c in 0..dim {
                    let delta = &f * &rows[r][c];
                    rows[i][c] -= &delta;
                }
            }
        }
        pivots.push(col);
        r += 1;
    }
    rows.truncate(r);
    (rows, pivots)
}

/// Canonicalizer for cosets of `W + Z^d` where `W` is a rational subspace.
struct CosetCanon {
    dim: usize,
    basis: Vec<Vec<Rat>>,
    pivots: Vec<usize>,
    free: Vec<usize>,
    lattice: SuperLattice,
}

impl CosetCanon {
    fn new(dim: usize, span: &[Vec<Rat>]) -> Self {
        let (basis, pivots) = rref(span, dim);
        let free: Vec<usize> = (0..dim).filter(|c| !pivots.contains(c)).collect();
        // Image of Z^d after sliding along W to kill pivot coordinates.
        let gens: Vec<Vec<Rat>> = pivots
            .iter()
            .zip(&basis)
            .map(|(_, b)| free.iter().map(|&c| -&b[c]).collect())
            .collect();
        let lattice = SuperLattice::generated_by(free.len(), &gens);
        CosetCanon { dim, basis, pivots, free, lattice }
    }

    fn canonical_offset(&self, x: &[Rat]) -> Vec<Rat> {
        let mut y = x.to_vec();
        for (&p, b) in self.pivots.iter().zip(&self.basis) {
            let t = y[p].clone();
            if !t.is_zero() {
                for c in 0..self.dim {
                    let delta = &t * &b[c];
                    y[c] -= &delta;
                }
            }
        }
        let rest: Vec<Rat> = self.free.iter().map(|&c| y[c].clone()).collect();
        let reduced = self.lattice.reduce(&rest);
        let mut out = vec![Rat::zero(); self.dim];
        for (&c, v) in self.free.iter().zip(reduced) {
            out[c] = v;
        }
        out
    }
}

impl CosetFamily {
    /// Builds the canonical family for the union of `offset_i + span`.
    pub fn from_cosets(dim: usize, offsets: &[Vec<Rat>], span: &[Vec<Rat>]) -> Self {
        let canon = CosetCanon::new(dim, span);
        let mut components: Vec<CosetComponent> = offsets
            .iter()
            .map(|o| CosetComponent {
                offset: canon.canonical_offset(o),
                generators: canon.basis.clone(),
            })
            .collect();
        components.sort();
        components.dedup();
        CosetFamily { dim, components }
    }

    pub fn is_finite(&self) -> bool {
        self.components.iter().all(CosetComponent::is_point)
    }

    pub fn len(&self) -> usize {
        self.components.len()
    }

    pub fn is_empty(&self) -> bool {
        self.components.is_empty()
    }

    /// The points of a finite family. Panics if a component is positive-dimensional.
    pub fn points(&self) -> Vec<Vec<Rat>> {
        assert!(self.is_finite(), "family has positive-dimensional components");
        self.components.iter().map(|c| c.offset.clone()).collect()
    }

    pub fn contains(&self, x: &[Rat]) -> bool {
        let Some(first) = self.components.first() else { return false };
        let canon = CosetCanon::new(self.dim, &first.generators);
        let off = canon.canonical_offset(x);
        self.components.iter().any(|c| c.offset == off)
    }
}

/// Solves `M x = c (mod Z^rows)` for `x` in `R^cols / Z^cols`.
pub fn solve_congruence(m: &IntMatrix, c: &[Rat]) -> Result<CosetFamily, LatticeError> {
    assert_eq!(c.len(), m.rows(), "right-hand side has the wrong length");
    let n = m.cols();
    let s = smith(m);
    // U D V x = c  <=>  D y = U^-1 c with y = V x.
    let rhs = unimodular_inverse(&s.u).apply(c);
    let diag = s.diagonal();
    let mut choices: Vec<Vec<Rat>> = Vec::with_capacity(n);
    let mut free = Vec::new();
    for (i, r) in rhs.iter().enumerate() {
        let di = diag.get(i).copied().unwrap_or(0);
        if di == 0 && !r.is_integer() {
            return Err(LatticeError::EmptySolution);
        }
        if i < n {
            if di == 0 {
                free.push(i);
                choices.push(vec![Rat::zero()]);
            } else {
                let base = r.fract();
                choices.push(
                    (0..di).map(|t| (&base + &Rat::from_int(t)) / Rat::from_int(di)).collect(),
                );
            }
        }
    }
    for i in rhs.len()..n {
        free.push(i);
        choices.push(vec![Rat::zero()]);
    }
    let v_inv = unimodular_inverse(&s.v);
    let span: Vec<Vec<Rat>> = free
        .iter()
        .map(|&i| (0..n).map(|r| Rat::from_int(v_inv[(r, i)])).collect())
        .collect();
    let mut offsets = Vec::new();
    let mut idx = vec![0usize; n];
    loop {
        let y: Vec<Rat> = (0..n).map(|i| choices[i][idx[i]].clone()).collect();
        offsets.push(v_inv.apply(&y));
        let mut k = 0;
        while k < n {
            idx[k] += 1;
            if idx[k] < choices[k].len() {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
        if k == n {
            break;
        }
    }
    Ok(CosetFamily::from_cosets(n, &offsets, &span))
}
