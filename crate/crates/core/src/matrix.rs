//! Dense row-major matrices over any [`Scalar`] backend.

use std::fmt;
use std::ops::{Add, Index, IndexMut, Mul, Neg, Sub};

use crate::error::{Error, Result};
use crate::scalar::{
    complex_rational_to_c64, rational_to_f64, ComplexRational, FloatScalar, Rational, Scalar, C64,
};

#[derive(Clone, PartialEq)]
pub struct Mat<T> {
    rows: usize,
    cols: usize,
    data: Vec<T>,
}

/// Result of [`Mat::gauss_ldu`]: `a = l * d * u`.
#[derive(Debug, Clone, PartialEq)]
pub struct Ldu<T> {
    pub l: Mat<T>,
    pub d: Mat<T>,
    pub u: Mat<T>,
}

impl<T: Scalar> Mat<T> {
    pub fn new(rows: usize, cols: usize, data: Vec<T>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                op: "Mat::new",
                left: (rows, cols),
                right: (data.len(), 1),
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> T) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn from_rows(rows: Vec<Vec<T>>) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        if let Some(bad) = rows.iter().find(|row| row.len() != c) {
            return Err(Error::DimensionMismatch {
                op: "Mat::from_rows",
                left: (r, c),
                right: (1, bad.len()),
            });
        }
        Ok(Self {
            rows: r,
            cols: c,
            data: rows.into_iter().flatten().collect(),
        })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self::from_fn(rows, cols, |_, _| T::zero())
    }

    pub fn identity(n: usize) -> Self {
        Self::from_fn(n, n, |i, j| if i == j { T::one() } else { T::zero() })
    }

    pub fn diag(entries: &[T]) -> Self {
        let n = entries.len();
        Self::from_fn(n, n, |i, j| {
            if i == j {
                entries[i].clone()
            } else {
                T::zero()
            }
        })
    }

    /// `[[a, b], [c, d]]` assembled from four equally sized square blocks.
    pub fn block2(a: &Self, b: &Self, c: &Self, d: &Self) -> Result<Self> {
        let n = a.rows;
        for m in [a, b, c, d] {
            if m.rows != n || m.cols != n {
                return Err(Error::DimensionMismatch {
                    op: "Mat::block2",
                    left: (n, n),
                    right: m.shape(),
                });
            }
        }
        Ok(Self::from_fn(2 * n, 2 * n, |i, j| {
            let src = match (i < n, j < n) {
                (true, true) => a,
                (true, false) => b,
                (false, true) => c,
                (false, false) => d,
            };
            src[(i % n, j % n)].clone()
        }))
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn data(&self) -> &[T] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[T] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn map<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Mat<U> {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(f).collect(),
        }
    }

    pub fn mat_mul(&self, other: &Self) -> Result<Self> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                op: "mat_mul",
                left: self.shape(),
                right: other.shape(),
            });
        }
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = &self.data[i * self.cols + k];
                if a.is_zero() {
                    continue;
                }
                for j in 0..other.cols {
                    let idx = i * other.cols + j;
                    let prod = a.clone() * other.data[k * other.cols + j].clone();
                    out.data[idx] = out.data[idx].clone() + prod;
                }
            }
        }
        Ok(out)
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "add", |a, b| a.clone() + b.clone())
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, "sub", |a, b| a.clone() - b.clone())
    }

    fn zip_with(&self, other: &Self, op: &'static str, f: impl Fn(&T, &T) -> T) -> Result<Self> {
        if self.shape() != other.shape() {
            return Err(Error::DimensionMismatch {
                op,
                left: self.shape(),
                right: other.shape(),
            });
        }
        Ok(Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| f(a, b))
                .collect(),
        })
    }

    pub fn scale(&self, s: &T) -> Self {
        self.map(|a| a.clone() * s.clone())
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].clone())
    }

    pub fn conj(&self) -> Self {
        self.map(Scalar::conj)
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self[(j, i)].conj())
    }

    pub fn trace(&self) -> Result<T> {
        self.require_square("trace")?;
        Ok((0..self.rows).fold(T::zero(), |acc, i| acc + self[(i, i)].clone()))
    }

    pub fn submatrix(&self, rows: &[usize], cols: &[usize]) -> Result<Self> {
        if let Some(&r) = rows.iter().find(|&&r| r >= self.rows) {
            return Err(Error::IndexOutOfRange(format!("row {r} of {}", self.rows)));
        }
        if let Some(&c) = cols.iter().find(|&&c| c >= self.cols) {
            return Err(Error::IndexOutOfRange(format!(
                "column {c} of {}",
                self.cols
            )));
        }
        Ok(Self::from_fn(rows.len(), cols.len(), |i, j| {
            self[(rows[i], cols[j])].clone()
        }))
    }

    /// Top-left `k x k` block.
    pub fn leading_block(&self, k: usize) -> Result<Self> {
        let idx: Vec<usize> = (0..k).collect();
        self.submatrix(&idx, &idx)
    }

    fn require_square(&self, op: &'static str) -> Result<()> {
        if self.is_square() {
            Ok(())
        } else {
            Err(Error::NotSquare {
                op,
                rows: self.rows,
                cols: self.cols,
            })
        }
    }

    /// Determinant by Gaussian elimination with partial pivoting on magnitude.
    pub fn det(&self) -> Result<T> {
        self.require_square("det")?;
        let n = self.rows;
        let mut a = self.data.clone();
        let mut det = T::one();
        for col in 0..n {
            let pivot = (col..n)
                .filter(|&r| !a[r * n + col].is_zero())
                .max_by(|&r, &s| {
                    a[r * n + col]
                        .magnitude()
                        .total_cmp(&a[s * n + col].magnitude())
                });
            let Some(p) = pivot else {
                return Ok(T::zero());
            };
            if p != col {
                for j in 0..n {
                    a.swap(p * n + j, col * n + j);
                }
                det = -det;
            }
            let piv = a[col * n + col].clone();
            det = det * piv.clone();
            for r in col + 1..n {
                let factor = a[r * n + col].clone() / piv.clone();
                if factor.is_zero() {
                    continue;
                }
                for j in col..n {
                    let v = a[r * n + j].clone() - factor.clone() * a[col * n + j].clone();
                    a[r * n + j] = v;
                }
            }
        }
        Ok(det)
    }

    /// `m_k = det` of the top-left `k x k` block, for `k = 1..=n`.
    pub fn leading_principal_minors(&self) -> Result<Vec<T>> {
        self.require_square("leading_principal_minors")?;
        (1..=self.rows)
            .map(|k| self.leading_block(k)?.det())
            .collect()
    }

    /// Unpivoted Gauss factorization `a = L D U` with unit-triangular `L`, `U`.
    ///
    /// Fails with [`Error::NotInBigCell`] when a pivot (equivalently a leading
    /// principal minor) is exactly zero.
    pub fn gauss_ldu(&self) -> Result<Ldu<T>> {
        self.require_square("gauss_ldu")?;
        let n = self.rows;
        let mut a = self.clone();
        let mut l = Self::identity(n);
        let mut d = Self::zeros(n, n);
        for k in 0..n {
            let piv = a[(k, k)].clone();
            if piv.is_zero() {
                return Err(Error::NotInBigCell { index: k + 1 });
            }
            d[(k, k)] = piv.clone();
            for i in k + 1..n {
                let factor = a[(i, k)].clone() / piv.clone();
                l[(i, k)] = factor.clone();
                for j in k..n {
                    let v = a[(i, j)].clone() - factor.clone() * a[(k, j)].clone();
                    a[(i, j)] = v;
                }
            }
        }
        let u = Self::from_fn(n, n, |i, j| match i.cmp(&j) {
            std::cmp::Ordering::Equal => T::one(),
            std::cmp::Ordering::Less => a[(i, j)].clone() / d[(i, i)].clone(),
            std::cmp::Ordering::Greater => T::zero(),
        });
        Ok(Ldu { l, d, u })
    }

    /// Gauss-Jordan inverse with partial pivoting.
    pub fn inverse(&self) -> Result<Self> {
        self.require_square("inverse")?;
        let n = self.rows;
        let mut a = self.clone();
        let mut inv = Self::identity(n);
        for col in 0..n {
            let p = (col..n)
                .filter(|&r| !a[(r, col)].is_zero())
                .max_by(|&r, &s| a[(r, col)].magnitude().total_cmp(&a[(s, col)].magnitude()))
                .ok_or(Error::Singular)?;
            if p != col {
                for j in 0..n {
                    a.data.swap(p * n + j, col * n + j);
                    inv.data.swap(p * n + j, col * n + j);
                }
            }
            let piv = a[(col, col)].clone();
            for j in 0..n {
                a[(col, j)] = a[(col, j)].clone() / piv.clone();
                inv[(col, j)] = inv[(col, j)].clone() / piv.clone();
            }
            for r in 0..n {
                if r == col || a[(r, col)].is_zero() {
                    continue;
                }
                let f = a[(r, col)].clone();
                for j in 0..n {
                    a[(r, j)] = a[(r, j)].clone() - f.clone() * a[(col, j)].clone();
                    inv[(r, j)] = inv[(r, j)].clone() - f.clone() * inv[(col, j)].clone();
                }
            }
        }
        Ok(inv)
    }
}

impl<T: FloatScalar> Mat<T> {
    pub fn frobenius_norm(&self) -> f64 {
        self.data
            .iter()
            .map(|z| {
                let a = z.abs();
                a * a
            })
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.abs()).fold(0.0, f64::max)
    }

    pub fn to_complex(&self) -> Mat<C64> {
        self.map(|z| z.to_c64())
    }

    pub fn scale_real(&self, s: f64) -> Self {
        self.map(|z| z.scale(s))
    }

    /// Frobenius distance `||self - other||`; infinite on shape mismatch.
    pub fn distance(&self, other: &Self) -> f64 {
        self.try_sub(other)
            .map(|d| d.frobenius_norm())
            .unwrap_or(f64::INFINITY)
    }

    /// `||a||_F ||a^-1||_F`, infinite for singular input.
    pub fn condition_estimate(&self) -> f64 {
        match self.inverse() {
            Ok(inv) => self.frobenius_norm() * inv.frobenius_norm(),
            Err(_) => f64::INFINITY,
        }
    }

    /// Matrix exponential by scaling and squaring around a Taylor core.
    pub fn exp(&self) -> Result<Self> {
        self.require_square("mat_exp")?;
        let n = self.rows;
        let norm = self.frobenius_norm();
        let mut squarings = 0u32;
        if norm > 0.25 {
            squarings = (norm / 0.25).log2().ceil() as u32;
        }
        let scaled = self.scale_real(0.5f64.powi(squarings as i32));
        // ||scaled|| <= 1/4, so 18 terms leave a remainder below 1e-30.
        let mut term = Self::identity(n);
        let mut sum = Self::identity(n);
        for k in 1..=18 {
            term = (&term * &scaled).scale_real(1.0 / k as f64);
            sum = &sum + &term;
        }
        for _ in 0..squarings {
            sum = &sum * &sum;
        }
        Ok(sum)
    }
}

impl Mat<f64> {
    pub fn to_c64(&self) -> Mat<C64> {
        self.to_complex()
    }
}

impl Mat<Rational> {
    pub fn to_f64(&self) -> Mat<f64> {
        self.map(rational_to_f64)
    }
}

impl Mat<ComplexRational> {
    pub fn to_c64(&self) -> Mat<C64> {
        self.map(complex_rational_to_c64)
    }
}

impl<T> Index<(usize, usize)> for Mat<T> {
    type Output = T;

    fn index(&self, (i, j): (usize, usize)) -> &T {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of bounds"
        );
        &self.data[i * self.cols + j]
    }
}

impl<T> IndexMut<(usize, usize)> for Mat<T> {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut T {
        assert!(
            i < self.rows && j < self.cols,
            "index ({i},{j}) out of bounds"
        );
        &mut self.data[i * self.cols + j]
    }
}

// Operator forms panic on shape mismatch; use `mat_mul`/`try_add` for fallible code paths.

impl<T: Scalar> Mul for &Mat<T> {
    type Output = Mat<T>;

    fn mul(self, rhs: &Mat<T>) -> Mat<T> {
        self.mat_mul(rhs).expect("matrix product shape mismatch")
    }
}

impl<T: Scalar> Add for &Mat<T> {
    type Output = Mat<T>;

    fn add(self, rhs: &Mat<T>) -> Mat<T> {
        self.try_add(rhs).expect("matrix sum shape mismatch")
    }
}

impl<T: Scalar> Sub for &Mat<T> {
    type Output = Mat<T>;

    fn sub(self, rhs: &Mat<T>) -> Mat<T> {
        self.try_sub(rhs).expect("matrix difference shape mismatch")
    }
}

impl<T: Scalar> Neg for &Mat<T> {
    type Output = Mat<T>;

    fn neg(self) -> Mat<T> {
        self.map(|a| -a.clone())
    }
}

impl<T: fmt::Debug> fmt::Debug for Mat<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "Mat {}x{} [", self.rows, self.cols)?;
        for i in 0..self.rows {
            writeln!(f, "  {:?}", &self.data[i * self.cols..(i + 1) * self.cols])?;
        }
        write!(f, "]")
    }
}

/// Standalone form of [`Mat::mat_mul`].
pub fn mat_mul<T: Scalar>(a: &Mat<T>, b: &Mat<T>) -> Result<Mat<T>> {
    a.mat_mul(b)
}

/// Standalone form of [`Mat::exp`]; only float backends implement it.
pub fn mat_exp<T: FloatScalar>(a: &Mat<T>) -> Result<Mat<T>> {
    a.exp()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rat;

    fn m(rows: &[&[f64]]) -> Mat<f64> {
        Mat::from_rows(rows.iter().map(|r| r.to_vec()).collect()).unwrap()
    }

    fn q(rows: &[&[i64]]) -> Mat<Rational> {
        Mat::from_rows(
            rows.iter()
                .map(|r| r.iter().map(|&v| rat(v, 1)).collect())
                .collect(),
        )
        .unwrap()
    }

    #[test]
    fn products() {
        let i2 = Mat::<f64>::identity(2);
        assert_eq!(&i2 * &i2, i2);
        let nil = m(&[&[0.0, 1.0], &[0.0, 0.0]]);
        assert_eq!(&nil * &nil, Mat::zeros(2, 2));
        let a = q(&[&[1, 2], &[3, 4]]);
        let b = q(&[&[5, 6], &[7, 8]]);
        assert_eq!(a.mat_mul(&b).unwrap(), q(&[&[19, 22], &[43, 50]]));
    }

    #[test]
    fn product_dimension_mismatch() {
        let a = Mat::<f64>::zeros(2, 3);
        let err = a.mat_mul(&Mat::zeros(2, 3)).unwrap_err();
        assert!(matches!(err, Error::DimensionMismatch { .. }));
    }

    #[test]
    fn exponential_examples() {
        let z = Mat::<f64>::zeros(2, 2).exp().unwrap();
        assert!(z.distance(&Mat::identity(2)) < 1e-15);

        let d = m(&[&[1.0, 0.0], &[0.0, -1.0]]).exp().unwrap();
        let e = std::f64::consts::E;
        assert!((d[(0, 0)] - e).abs() / e < 1e-13);
        assert!((d[(1, 1)] - 1.0 / e).abs() * e < 1e-13);
        assert!(d[(0, 1)].abs() < 1e-16 && d[(1, 0)].abs() < 1e-16);

        let n = m(&[&[0.0, 1.0], &[0.0, 0.0]]).exp().unwrap();
        assert!(n.distance(&m(&[&[1.0, 1.0], &[0.0, 1.0]])) < 1e-15);

        assert!(matches!(
            Mat::<f64>::zeros(2, 3).exp(),
            Err(Error::NotSquare { .. })
        ));
    }

    #[test]
    fn exponential_of_rotation_generator() {
        let t = 2.5f64;
        let a = m(&[&[0.0, -t], &[t, 0.0]]).exp().unwrap();
        let expect = m(&[&[t.cos(), -t.sin()], &[t.sin(), t.cos()]]);
        assert!(a.distance(&expect) < 1e-13);
    }

    #[test]
    fn minors_examples() {
        let ones = Mat::<Rational>::identity(3)
            .leading_principal_minors()
            .unwrap();
        assert_eq!(ones, vec![rat(1, 1); 3]);
        let two = q(&[&[2, 1], &[1, 2]]).leading_principal_minors().unwrap();
        assert_eq!(two, vec![rat(2, 1), rat(3, 1)]);
        let zero = Mat::diag(&[rat(3, 1), rat(0, 1), rat(5, 1)])
            .leading_principal_minors()
            .unwrap();
        assert_eq!(zero, vec![rat(3, 1), rat(0, 1), rat(0, 1)]);
        assert!(Mat::<f64>::zeros(2, 3).leading_principal_minors().is_err());
    }

    #[test]
    fn ldu_examples() {
        let id = Mat::<Rational>::identity(2).gauss_ldu().unwrap();
        assert_eq!(id.l, Mat::identity(2));
        assert_eq!(id.d, Mat::identity(2));
        assert_eq!(id.u, Mat::identity(2));

        let f = q(&[&[2, 1], &[1, 2]]).gauss_ldu().unwrap();
        let half = rat(1, 2);
        assert_eq!(
            f.l,
            Mat::from_rows(vec![
                vec![rat(1, 1), rat(0, 1)],
                vec![half.clone(), rat(1, 1)]
            ])
            .unwrap()
        );
        assert_eq!(f.d, Mat::diag(&[rat(2, 1), rat(3, 2)]));
        assert_eq!(
            f.u,
            Mat::from_rows(vec![vec![rat(1, 1), half], vec![rat(0, 1), rat(1, 1)]]).unwrap()
        );

        let err = q(&[&[0, 1], &[1, 0]]).gauss_ldu().unwrap_err();
        assert_eq!(err, Error::NotInBigCell { index: 1 });
    }

    #[test]
    fn determinant_and_inverse() {
        let a = q(&[&[0, 2, 1], &[1, 1, 0], &[3, 0, 1]]);
        assert_eq!(a.det().unwrap(), rat(-5, 1));
        let inv = a.inverse().unwrap();
        assert_eq!(&a * &inv, Mat::identity(3));
        assert_eq!(
            q(&[&[1, 2], &[2, 4]]).inverse().unwrap_err(),
            Error::Singular
        );
    }

    #[test]
    fn block_assembly() {
        let i = Mat::<f64>::identity(1);
        let z = Mat::<f64>::zeros(1, 1);
        let j = Mat::block2(&z, &i, &(-&i), &z).unwrap();
        assert_eq!(j, m(&[&[0.0, 1.0], &[-1.0, 0.0]]));
    }
}
