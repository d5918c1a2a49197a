//! Smith and Hermite normal forms over the integers.

use num_integer::Integer;

use super::matrix::{IntMatrix, Mat2Q, Mat2Z, Vec2Q};
use super::rat::Rat;

fn floor_div(a: i64, b: i64) -> i64 {
    Integer::div_floor(&a, &b)
}

/// `M = U * D * V` with `U`, `V` unimodular and `D` diagonal, `d1 | d2 | ...`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Smith {
    pub u: IntMatrix,
    pub d: IntMatrix,
    pub v: IntMatrix,
}

impl Smith {
    pub fn diagonal(&self) -> Vec<i64> {
        (0..self.d.rows().min(self.d.cols())).map(|i| self.d[(i, i)]).collect()
    }

    pub fn rank(&self) -> usize {
        self.diagonal().iter().take_while(|&&x| x != 0).count()
    }
}

// Row/column operations on `d`, with the inverse applied to `u` / `v` so that
// `u * d * v` stays equal to the input throughout.
struct SmithCalc {
    u: IntMatrix,
    d: IntMatrix,
    v: IntMatrix,
}

impl SmithCalc {
    fn swap_rows(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for c in 0..self.d.cols() {
            let t = self.d[(i, c)];
            self.d[(i, c)] = self.d[(j, c)];
            self.d[(j, c)] = t;
        }
        for r in 0..self.u.rows() {
            let t = self.u[(r, i)];
            self.u[(r, i)] = self.u[(r, j)];
            self.u[(r, j)] = t;
        }
    }

    fn swap_cols(&mut self, i: usize, j: usize) {
        if i == j {
            return;
        }
        for r in 0..self.d.rows() {
            let t = self.d[(r, i)];
            self.d[(r, i)] = self.d[(r, j)];
            self.d[(r, j)] = t;
        }
        for c in 0..self.v.cols() {
            let t = self.v[(i, c)];
            self.v[(i, c)] = self.v[(j, c)];
            self.v[(j, c)] = t;
        }
    }

    // row_i += k * row_j
    fn add_row(&mut self, i: usize, j: usize, k: i64) {
        if k == 0 {
            return;
        }
        for c in 0..self.d.cols() {
            self.d[(i, c)] += k * self.d[(j, c)];
        }
        for r in 0..self.u.rows() {
            self.u[(r, j)] -= k * self.u[(r, i)];
        }
    }

    // col_i += k * col_j
    fn add_col(&mut self, i: usize, j: usize, k: i64) {
        if k == 0 {
            return;
        }
        for r in 0..self.d.rows() {
            self.d[(r, i)] += k * self.d[(r, j)];
        }
        for c in 0..self.v.cols() {
            self.v[(j, c)] -= k * self.v[(i, c)];
        }
    }

    fn negate_row(&mut self, i: usize) {
        for c in 0..self.d.cols() {
            self.d[(i, c)] = -self.d[(i, c)];
        }
        for r in 0..self.u.rows() {
            self.u[(r, i)] = -self.u[(r, i)];
        }
    }

    fn min_nonzero(&self, t: usize) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for i in t..self.d.rows() {
            for j in t..self.d.cols() {
                let x = self.d[(i, j)].abs();
                if x != 0 && best.is_none_or(|(bi, bj)| x < self.d[(bi, bj)].abs()) {
                    best = Some((i, j));
                }
            }
        }
        best
    }

    fn process(&mut self) {
        let n = self.d.rows().min(self.d.cols());
        for t in 0..n {
            let Some((pi, pj)) = self.min_nonzero(t) else { break };
            self.swap_rows(t, pi);
            self.swap_cols(t, pj);
            loop {
                let p = self.d[(t, t)];
                let mut dirty = false;
                for i in t + 1..self.d.rows() {
                    let k = floor_div(self.d[(i, t)], p);
                    self.add_row(i, t, -k);
                    dirty |= self.d[(i, t)] != 0;
                }
                for j in t + 1..self.d.cols() {
                    let k = floor_div(self.d[(t, j)], p);
                    self.add_col(j, t, -k);
                    dirty |= self.d[(t, j)] != 0;
                }
                if !dirty {
                    // Pivot must divide the remaining block.
                    let bad = (t + 1..self.d.rows()).find(|&i| {
                        (t + 1..self.d.cols()).any(|j| self.d[(i, j)] % p != 0)
                    });
                    match bad {
                        Some(i) => self.add_row(t, i, 1),
                        None => break,
                    }
                    continue;
                }
                let (mi, mj) = self.min_nonzero_in_cross(t);
                self.swap_rows(t, mi);
                self.swap_cols(t, mj);
            }
            if self.d[(t, t)] < 0 {
                self.negate_row(t);
            }
        }
    }

    // smallest nonzero entry among the pivot row and column
    fn min_nonzero_in_cross(&self, t: usize) -> (usize, usize) {
        let mut best = (t, t);
        let mut best_val = self.d[(t, t)].abs();
        for i in t + 1..self.d.rows() {
            let x = self.d[(i, t)].abs();
            if x != 0 && x < best_val {
                best = (i, t);
                best_val = x;
            }
        }
        for j in t + 1..self.d.cols() {
            let x = self.d[(t, j)].abs();
            if x != 0 && x < best_val {
                best = (t, j);
                best_val = x;
            }
        }
        best
    }
}

/// Smith normal form of an arbitrary-shape integer matrix.
pub fn smith(m: &IntMatrix) -> Smith {
    let mut calc = SmithCalc {
        u: IntMatrix::identity(m.rows()),
        d: m.clone(),
        v: IntMatrix::identity(m.cols()),
    };
    calc.process();
    Smith { u: calc.u, d: calc.d, v: calc.v }
}

/// Smith normal form of a 2x2 matrix as `(U, D, V)` with `M = U D V`.
pub fn smith_normal_form(m: &Mat2Z) -> (Mat2Z, Mat2Z, Mat2Z) {
    let s = smith(&m.to_int_matrix());
    let to2 = |x: &IntMatrix| Mat2Z([[x[(0, 0)], x[(0, 1)]], [x[(1, 0)], x[(1, 1)]]]);
    (to2(&s.u), to2(&s.d), to2(&s.v))
}

/// Inverse of a unimodular integer matrix.
pub fn unimodular_inverse(m: &IntMatrix) -> IntMatrix {
    let n = m.rows();
    assert_eq!(n, m.cols());
    // Gauss-Jordan over the rationals; the result is integral when det = +-1.
    let mut a: Vec<Vec<Rat>> = (0..n)
        .map(|i| {
            let mut row: Vec<Rat> = m.row(i).iter().map(|&x| Rat::from_int(x)).collect();
            row.extend((0..n).map(|j| if i == j { Rat::one() } else { Rat::zero() }));
            row
        })
        .collect();
    for col in 0..n {
        let piv = (col..n).find(|&r| !a[r][col].is_zero()).expect("singular matrix");
        a.swap(col, piv);
        let inv = a[col][col].recip();
        for x in a[col].iter_mut() {
            *x *= &inv;
        }
        for r in 0..n {
            if r != col && !a[r][col].is_zero() {
                let f = a[r][col].clone();
                for c in 0..2 * n {
                    let delta = &f * &a[col][c];
                    a[r][c] -= &delta;
                }
            }
        }
    }
    let rows: Vec<Vec<i64>> = a
        .iter()
        .map(|row| {
            row[n..].iter().map(|x| x.to_i64().expect("matrix is not unimodular")).collect()
        })
        .collect();
    IntMatrix::from_rows(&rows)
}

/// Lower-triangular column Hermite basis of the integer lattice spanned by the
/// columns of `gens` (which must have full row rank).
///
/// Result `h` is square, `h[i][j] = 0` for `j > i`, `h[i][i] > 0` and
/// `0 <= h[i][j] < h[i][i]` for `j < i`.
pub fn column_hermite(gens: &IntMatrix) -> IntMatrix {
    let k = gens.rows();
    let mut cols: Vec<Vec<i64>> =
        (0..gens.cols()).map(|j| (0..k).map(|i| gens[(i, j)]).collect()).collect();
    let mut basis: Vec<Vec<i64>> = Vec::with_capacity(k);
    for row in 0..k {
        // Euclid across the remaining columns on this row.
        loop {
            cols.retain(|c| c.iter().any(|&x| x != 0));
            let nonzero: Vec<usize> = (0..cols.len()).filter(|&j| cols[j][row] != 0).collect();
            if nonzero.len() <= 1 {
                break;
            }
            let piv = *nonzero.iter().min_by_key(|&&j| cols[j][row].abs()).unwrap();
            let p = cols[piv][row];
            let pivot_col = cols[piv].clone();
            for &j in &nonzero {
                if j != piv {
                    let f = floor_div(cols[j][row], p);
                    for (x, y) in cols[j].iter_mut().zip(&pivot_col) {
                        *x -= f * y;
                    }
                }
            }
        }
        let idx = cols
            .iter()
            .position(|c| c[row] != 0)
            .expect("generators do not span a full-rank lattice");
        let mut b = cols.swap_remove(idx);
        if b[row] < 0 {
            b.iter_mut().for_each(|x| *x = -*x);
        }
        basis.push(b);
    }
    // Reduce the entries left of the diagonal.
    for i in 0..k {
        for j in 0..i {
            let f = floor_div(basis[j][i], basis[i][i]);
            if f != 0 {
                let bi = basis[i].clone();
                for (x, y) in basis[j].iter_mut().zip(&bi) {
                    *x -= f * y;
                }
            }
        }
    }
    let mut h = IntMatrix::zeros(k, k);
    for (j, b) in basis.iter().enumerate() {
        for i in 0..k {
            h[(i, j)] = b[i];
        }
    }
    h
}

/// A rational lattice `L` containing `Z^k`, kept as a lower-triangular Hermite
/// basis (columns).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SuperLattice {
    basis: Vec<Vec<Rat>>, // basis[j] = column j
}

impl SuperLattice {
    /// The lattice generated by `Z^k` and `generators`.
    pub fn generated_by(dim: usize, generators: &[Vec<Rat>]) -> Self {
        let mut denom = 1i64;
        for g in generators {
            assert_eq!(g.len(), dim);
            for x in g {
                denom = denom.lcm(&x.denom_i64().expect("denominator out of range"));
            }
        }
        let mut m = IntMatrix::zeros(dim, dim + generators.len());
        for i in 0..dim {
            m[(i, i)] = denom;
        }
        for (j, g) in generators.iter().enumerate() {
            for i in 0..dim {
                m[(i, dim + j)] = g[i].mul_int(denom).to_i64().expect("scaled entry not integral");
            }
        }
        let h = column_hermite(&m);
        let basis = (0..dim)
            .map(|j| (0..dim).map(|i| Rat::new(h[(i, j)], denom)).collect())
            .collect();
        SuperLattice { basis }
    }

    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    pub fn column(&self, j: usize) -> &[Rat] {
        &self.basis[j]
    }

    /// `[L : Z^k] = 1 / det(basis)`.
    pub fn index(&self) -> i64 {
        let det: Rat = (0..self.dim()).map(|i| self.basis[i][i].clone()).product();
        det.recip().to_i64().expect("index must be a positive integer")
    }

    /// Canonical representative of `x` modulo the lattice: coordinate `i` of the
    /// result lies in `[0, h_ii)`.
    pub fn reduce(&self, x: &[Rat]) -> Vec<Rat> {
        let mut out = x.to_vec();
        for i in 0..self.dim() {
            let t = (&out[i] / &self.basis[i][i]).floor();
            if !t.is_zero() {
                for r in i..self.dim() {
                    let delta = &t * &self.basis[i][r];
                    out[r] -= &delta;
                }
            }
        }
        out
    }

    /// Whether `x` lies in the lattice.
    pub fn contains(&self, x: &[Rat]) -> bool {
        self.reduce(x).iter().all(Rat::is_zero)
    }
}

/// Hermite basis `B` (columns, lower triangular) of the lattice generated by
/// `Z^2` and `generators`.
pub fn superlattice_basis(generators: &[Vec2Q]) -> Mat2Q {
    let gens: Vec<Vec<Rat>> = generators.iter().map(Vec2Q::to_vec).collect();
    let lat = SuperLattice::generated_by(2, &gens);
    Mat2Q::from_columns(
        &Vec2Q::new(lat.column(0)[0].clone(), lat.column(0)[1].clone()),
        &Vec2Q::new(lat.column(1)[0].clone(), lat.column(1)[1].clone()),
    )
}
