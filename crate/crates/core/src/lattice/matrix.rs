use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};

use super::rat::Rat;

/// A point of the plane with exact rational coordinates.
#[derive(Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default, Serialize, Deserialize)]
#[serde(from = "[Rat; 2]", into = "[Rat; 2]")]
pub struct Vec2Q {
    pub x: Rat,
    pub y: Rat,
}

impl Vec2Q {
    pub fn new(x: Rat, y: Rat) -> Self {
        Vec2Q { x, y }
    }

    pub fn zero() -> Self {
        Vec2Q::default()
    }

    pub fn is_integral(&self) -> bool {
        self.x.is_integer() && self.y.is_integer()
    }

    pub fn scale(&self, k: &Rat) -> Vec2Q {
        Vec2Q::new(&self.x * k, &self.y * k)
    }

    pub fn to_vec(&self) -> Vec<Rat> {
        vec![self.x.clone(), self.y.clone()]
    }
}

impl From<[Rat; 2]> for Vec2Q {
    fn from([x, y]: [Rat; 2]) -> Self {
        Vec2Q { x, y }
    }
}

impl From<Vec2Q> for [Rat; 2] {
    fn from(v: Vec2Q) -> Self {
        [v.x, v.y]
    }
}

impl fmt::Debug for Vec2Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl fmt::Display for Vec2Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add for &Vec2Q {
    type Output = Vec2Q;
    fn add(self, rhs: &Vec2Q) -> Vec2Q {
        Vec2Q::new(&self.x + &rhs.x, &self.y + &rhs.y)
    }
}

impl Sub for &Vec2Q {
    type Output = Vec2Q;
    fn sub(self, rhs: &Vec2Q) -> Vec2Q {
        Vec2Q::new(&self.x - &rhs.x, &self.y - &rhs.y)
    }
}

impl Neg for &Vec2Q {
    type Output = Vec2Q;
    fn neg(self) -> Vec2Q {
        Vec2Q::new(-&self.x, -&self.y)
    }
}

/// 2x2 integer matrix, row-major.
#[derive(Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mat2Z(pub [[i64; 2]; 2]);

impl Mat2Z {
    pub const IDENTITY: Mat2Z = Mat2Z([[1, 0], [0, 1]]);
    pub const ZERO: Mat2Z = Mat2Z([[0, 0], [0, 0]]);

    pub const fn new(a: i64, b: i64, c: i64, d: i64) -> Self {
        Mat2Z([[a, b], [c, d]])
    }

    pub fn scalar(k: i64) -> Self {
        Mat2Z([[k, 0], [0, k]])
    }

    pub fn det(&self) -> i64 {
        let [[a, b], [c, d]] = self.0;
        a * d - b * c
    }

    pub fn entry(&self, i: usize, j: usize) -> i64 {
        self.0[i][j]
    }

    pub fn pow(&self, k: u32) -> Mat2Z {
        (0..k).fold(Mat2Z::IDENTITY, |acc, _| acc * *self)
    }

    pub fn apply(&self, v: &Vec2Q) -> Vec2Q {
        let [[a, b], [c, d]] = self.0;
        Vec2Q::new(
            &v.x.mul_int(a) + &v.y.mul_int(b),
            &v.x.mul_int(c) + &v.y.mul_int(d),
        )
    }

    pub fn to_rational(&self) -> Mat2Q {
        let [[a, b], [c, d]] = self.0;
        Mat2Q([
            [Rat::from_int(a), Rat::from_int(b)],
            [Rat::from_int(c), Rat::from_int(d)],
        ])
    }

    pub fn to_int_matrix(&self) -> IntMatrix {
        IntMatrix::from_rows(&[self.0[0].to_vec(), self.0[1].to_vec()])
    }
}

impl fmt::Debug for Mat2Z {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl fmt::Display for Mat2Z {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

impl Mul for Mat2Z {
    type Output = Mat2Z;
    fn mul(self, rhs: Mat2Z) -> Mat2Z {
        let (a, b) = (self.0, rhs.0);
        let mut out = [[0i64; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = a[i][0] * b[0][j] + a[i][1] * b[1][j];
            }
        }
        Mat2Z(out)
    }
}

impl Add for Mat2Z {
    type Output = Mat2Z;
    fn add(self, rhs: Mat2Z) -> Mat2Z {
        let (a, b) = (self.0, rhs.0);
        Mat2Z([
            [a[0][0] + b[0][0], a[0][1] + b[0][1]],
            [a[1][0] + b[1][0], a[1][1] + b[1][1]],
        ])
    }
}

impl Sub for Mat2Z {
    type Output = Mat2Z;
    fn sub(self, rhs: Mat2Z) -> Mat2Z {
        let (a, b) = (self.0, rhs.0);
        Mat2Z([
            [a[0][0] - b[0][0], a[0][1] - b[0][1]],
            [a[1][0] - b[1][0], a[1][1] - b[1][1]],
        ])
    }
}

impl Neg for Mat2Z {
    type Output = Mat2Z;
    fn neg(self) -> Mat2Z {
        Mat2Z::ZERO - self
    }
}

/// 2x2 rational matrix, row-major.
#[derive(Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Mat2Q(pub [[Rat; 2]; 2]);

impl Mat2Q {
    pub fn identity() -> Self {
        Mat2Z::IDENTITY.to_rational()
    }

    pub fn from_columns(c0: &Vec2Q, c1: &Vec2Q) -> Self {
        Mat2Q([[c0.x.clone(), c1.x.clone()], [c0.y.clone(), c1.y.clone()]])
    }

    pub fn column(&self, j: usize) -> Vec2Q {
        Vec2Q::new(self.0[0][j].clone(), self.0[1][j].clone())
    }

    pub fn det(&self) -> Rat {
        let [[a, b], [c, d]] = &self.0;
        a * d - b * c
    }

    pub fn inverse(&self) -> Option<Mat2Q> {
        let det = self.det();
        if det.is_zero() {
            return None;
        }
        let [[a, b], [c, d]] = &self.0;
        Some(Mat2Q([[d / &det, -b / &det], [-c / &det, a / &det]]))
    }

    pub fn apply(&self, v: &Vec2Q) -> Vec2Q {
        let [[a, b], [c, d]] = &self.0;
        Vec2Q::new(a * &v.x + b * &v.y, c * &v.x + d * &v.y)
    }

    pub fn mul(&self, rhs: &Mat2Q) -> Mat2Q {
        let (a, b) = (&self.0, &rhs.0);
        let cell = |i: usize, j: usize| &a[i][0] * &b[0][j] + &a[i][1] * &b[1][j];
        Mat2Q([[cell(0, 0), cell(0, 1)], [cell(1, 0), cell(1, 1)]])
    }

    /// The matrix as an integer matrix, if every entry is an integer.
    pub fn to_integer(&self) -> Option<Mat2Z> {
        let mut out = [[0i64; 2]; 2];
        for i in 0..2 {
            for j in 0..2 {
                out[i][j] = self.0[i][j].to_i64()?;
            }
        }
        Some(Mat2Z(out))
    }
}

impl fmt::Debug for Mat2Q {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.0)
    }
}

/// Dense integer matrix of arbitrary shape, row-major.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct IntMatrix {
    rows: usize,
    cols: usize,
    data: Vec<i64>,
}

impl IntMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        IntMatrix { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<i64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        assert!(rows.iter().all(|row| row.len() == c), "ragged matrix");
        IntMatrix { rows: r, cols: c, data: rows.concat() }
    }

    /// `[[tl, tr], [bl, br]]` from four 2x2 blocks.
    pub fn from_blocks(tl: &Mat2Z, tr: &Mat2Z, bl: &Mat2Z, br: &Mat2Z) -> Self {
        let mut m = Self::zeros(4, 4);
        for i in 0..2 {
            for j in 0..2 {
                m[(i, j)] = tl.0[i][j];
                m[(i, j + 2)] = tr.0[i][j];
                m[(i + 2, j)] = bl.0[i][j];
                m[(i + 2, j + 2)] = br.0[i][j];
            }
        }
        m
    }

    /// Stacks `top` over `bottom` (same column count).
    pub fn stack(top: &IntMatrix, bottom: &IntMatrix) -> Self {
        assert_eq!(top.cols, bottom.cols);
        let mut data = top.data.clone();
        data.extend_from_slice(&bottom.data);
        IntMatrix { rows: top.rows + bottom.rows, cols: top.cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[i64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn mul(&self, rhs: &IntMatrix) -> IntMatrix {
        assert_eq!(self.cols, rhs.rows, "shape mismatch");
        let mut out = IntMatrix::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn apply(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(v.len(), self.cols);
        (0..self.rows)
            .map(|i| {
                self.row(i)
                    .iter()
                    .zip(v)
                    .filter(|(a, _)| **a != 0)
                    .map(|(a, x)| x.mul_int(*a))
                    .sum()
            })
            .collect()
    }

    pub fn is_diagonal(&self) -> bool {
        (0..self.rows).all(|i| (0..self.cols).all(|j| i == j || self[(i, j)] == 0))
    }

    /// Determinant by fraction-free elimination (square matrices only).
    pub fn det(&self) -> i64 {
        assert_eq!(self.rows, self.cols, "determinant of a non-square matrix");
        let n = self.rows;
        let mut m: Vec<Vec<i128>> =
            (0..n).map(|i| self.row(i).iter().map(|&x| x as i128).collect()).collect();
        let mut sign = 1i128;
        let mut prev = 1i128;
        for k in 0..n {
            if m[k][k] == 0 {
                match (k + 1..n).find(|&r| m[r][k] != 0) {
                    Some(r) => {
                        m.swap(k, r);
                        sign = -sign;
                    }
                    None => return 0,
                }
            }
            for i in k + 1..n {
                for j in k + 1..n {
                    m[i][j] = (m[i][j] * m[k][k] - m[i][k] * m[k][j]) / prev;
                }
            }
            prev = m[k][k];
        }
        let det = if n == 0 { 1 } else { sign * m[n - 1][n - 1] };
        i64::try_from(det).expect("determinant overflow")
    }
}

impl std::ops::Index<(usize, usize)> for IntMatrix {
    type Output = i64;
    fn index(&self, (i, j): (usize, usize)) -> &i64 {
        &self.data[i * self.cols + j]
    }
}

impl std::ops::IndexMut<(usize, usize)> for IntMatrix {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut i64 {
        &mut self.data[i * self.cols + j]
    }
}

impl fmt::Debug for IntMatrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let rows: Vec<&[i64]> = (0..self.rows).map(|i| self.row(i)).collect();
        write!(f, "{rows:?}")
    }
}
