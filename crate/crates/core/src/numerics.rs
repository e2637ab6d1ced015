//! Dense complex linear algebra for the small systems that appear here:
//! the 5x5 atomic regression matrices, the 4x4 moment system, and the
//! fixed-step propagation of constant-coefficient linear ODEs.

use crate::{Error, Result};
use num_complex::Complex64;

/// Relative pivot threshold below which an LU factorization is rejected.
const SINGULAR_TOL: f64 = 1e-14;
/// Divergence guard for linear propagation.
const DIVERGENCE_LIMIT: f64 = 1e12;

/// Dense complex matrix, row-major.
#[derive(Clone, Debug, PartialEq)]
pub struct ComplexMatrix {
    rows: usize,
    cols: usize,
    data: Vec<Complex64>,
}

impl ComplexMatrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![Complex64::ZERO; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.set(i, i, Complex64::ONE);
        }
        m
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> Complex64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Build from nested rows; all rows must share one length.
    pub fn from_rows(rows: &[Vec<Complex64>]) -> Self {
        let r = rows.len();
        let c = rows.first().map_or(0, Vec::len);
        assert!(rows.iter().all(|row| row.len() == c), "ragged rows");
        Self {
            rows: r,
            cols: c,
            data: rows.concat(),
        }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> Complex64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: Complex64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[Complex64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn data(&self) -> &[Complex64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    pub fn is_square(&self) -> bool {
        self.rows == self.cols
    }

    pub fn is_finite(&self) -> bool {
        self.data
            .iter()
            .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Maximum absolute row sum.
    pub fn inf_norm(&self) -> f64 {
        (0..self.rows)
            .map(|i| self.row(i).iter().map(|z| z.norm()).sum::<f64>())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().map(|z| z.norm()).fold(0.0, f64::max)
    }

    pub fn scale(&self, s: Complex64) -> Self {
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|z| z * s).collect(),
        }
    }

    pub fn add(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a + b)
                .collect(),
        }
    }

    pub fn sub(&self, other: &Self) -> Self {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        Self {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn mul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "dimension mismatch");
        let mut out = Self::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == Complex64::ZERO {
                    continue;
                }
                for j in 0..other.cols {
                    out.data[i * other.cols + j] += a * other.get(k, j);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, x: &[Complex64]) -> Vec<Complex64> {
        assert_eq!(self.cols, x.len(), "dimension mismatch");
        (0..self.rows)
            .map(|i| self.row(i).iter().zip(x).map(|(a, b)| a * b).sum())
            .collect()
    }

    /// Conjugate transpose.
    pub fn adjoint(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i).conj())
    }
}

/// LU factorization with partial pivoting.
struct LuFactors {
    lu: ComplexMatrix,
    perm: Vec<usize>,
}

impl LuFactors {
    fn new(a: &ComplexMatrix) -> Result<Self> {
        if !a.is_square() {
            return Err(Error::Domain(format!(
                "LU of a {}x{} matrix",
                a.rows(),
                a.cols()
            )));
        }
        if !a.is_finite() {
            return Err(Error::NonFinite("matrix entries".into()));
        }
        let n = a.rows();
        let scale = a.inf_norm();
        let mut lu = a.clone();
        let mut perm: Vec<usize> = (0..n).collect();
        for k in 0..n {
            let (mut pivot_row, mut pivot_mag) = (k, lu.get(k, k).norm());
            for r in k + 1..n {
                let mag = lu.get(r, k).norm();
                if mag > pivot_mag {
                    pivot_row = r;
                    pivot_mag = mag;
                }
            }
            if pivot_mag < SINGULAR_TOL * scale.max(f64::MIN_POSITIVE) {
                return Err(Error::Singular(format!(
                    "pivot {:.3e} below {:.1e} * ||A|| at column {}",
                    pivot_mag, SINGULAR_TOL, k
                )));
            }
            if pivot_row != k {
                perm.swap(k, pivot_row);
                for j in 0..n {
                    let (x, y) = (lu.get(k, j), lu.get(pivot_row, j));
                    lu.set(k, j, y);
                    lu.set(pivot_row, j, x);
                }
            }
            let inv_pivot = Complex64::ONE / lu.get(k, k);
            for r in k + 1..n {
                let factor = lu.get(r, k) * inv_pivot;
                lu.set(r, k, factor);
                for j in k + 1..n {
                    let v = lu.get(r, j) - factor * lu.get(k, j);
                    lu.set(r, j, v);
                }
            }
        }
        Ok(Self { lu, perm })
    }

    fn solve(&self, b: &[Complex64]) -> Vec<Complex64> {
        let n = self.lu.rows();
        let mut x: Vec<Complex64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 1..n {
            for j in 0..i {
                let f = self.lu.get(i, j) * x[j];
                x[i] -= f;
            }
        }
        for i in (0..n).rev() {
            for j in i + 1..n {
                let f = self.lu.get(i, j) * x[j];
                x[i] -= f;
            }
            x[i] /= self.lu.get(i, i);
        }
        x
    }
}

/// Solve A x = b by LU with partial pivoting.
pub fn lu_solve(a: &ComplexMatrix, b: &[Complex64]) -> Result<Vec<Complex64>> {
    if a.rows() != b.len() {
        return Err(Error::Domain("right-hand side length mismatch".into()));
    }
    if !b.iter().all(|z| z.re.is_finite() && z.im.is_finite()) {
        return Err(Error::NonFinite("right-hand side".into()));
    }
    Ok(LuFactors::new(a)?.solve(b))
}

/// Matrix inverse via one factorization and n unit-vector solves.
pub fn mat_inverse(a: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = a.rows();
    let factors = LuFactors::new(a)?;
    let mut out = ComplexMatrix::zeros(n, n);
    let mut e = vec![Complex64::ZERO; n];
    for j in 0..n {
        e[j] = Complex64::ONE;
        let col = factors.solve(&e);
        e[j] = Complex64::ZERO;
        for (i, v) in col.into_iter().enumerate() {
            out.set(i, j, v);
        }
    }
    Ok(out)
}

/// Propagate x' = M x + b from x(0) = x0 to time t with fixed-step RK4.
///
/// The step obeys h <= 1e-2 / max(1, ||M||_inf); the integration errors out
/// once ||x||_inf exceeds 1e12, which stability cross-checks rely on.
pub fn propagate_linear(
    m: &ComplexMatrix,
    b: &[Complex64],
    x0: &[Complex64],
    t: f64,
) -> Result<Vec<Complex64>> {
    if !m.is_square() || m.rows() != b.len() || m.rows() != x0.len() {
        return Err(Error::Domain("propagate_linear dimension mismatch".into()));
    }
    if t < 0.0 {
        return Err(Error::Domain("negative propagation time".into()));
    }
    if !m.is_finite() {
        return Err(Error::NonFinite("generator entries".into()));
    }
    let n = x0.len();
    let mut x = x0.to_vec();
    if t == 0.0 {
        return Ok(x);
    }
    let h_max = 1e-2 / m.inf_norm().max(1.0);
    let steps = (t / h_max).ceil() as usize;
    let h = t / steps as f64;

    let deriv = |x: &[Complex64]| -> Vec<Complex64> {
        let mut d = m.mul_vec(x);
        for (di, bi) in d.iter_mut().zip(b) {
            *di += bi;
        }
        d
    };
    let mut scratch = vec![Complex64::ZERO; n];
    for step in 0..steps {
        let k1 = deriv(&x);
        for i in 0..n {
            scratch[i] = x[i] + 0.5 * h * k1[i];
        }
        let k2 = deriv(&scratch);
        for i in 0..n {
            scratch[i] = x[i] + 0.5 * h * k2[i];
        }
        let k3 = deriv(&scratch);
        for i in 0..n {
            scratch[i] = x[i] + h * k3[i];
        }
        let k4 = deriv(&scratch);
        for i in 0..n {
            x[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        }
        let norm = x.iter().map(|z| z.norm()).fold(0.0, f64::max);
        if norm > DIVERGENCE_LIMIT {
            return Err(Error::Diverged {
                t: (step + 1) as f64 * h,
            });
        }
    }
    Ok(x)
}

/// Principal complex square root: w^2 = z with Re(w) >= 0, and Im(w) >= 0
/// on the branch cut Re(w) = 0.
pub fn principal_sqrt(z: Complex64) -> Complex64 {
    let w = z.sqrt();
    if w.re < 0.0 || (w.re == 0.0 && w.im < 0.0) {
        -w
    } else {
        w
    }
}
