//! Brute-force validator: the bare-basis master equation integrated on a
//! truncated three-level (x) two-mode Fock space.
//!
//! The Liouvillian is applied in the drift-plus-jumps form
//!
//!   drho/dt = K rho + rho K^dag + sum_k L_k rho R_k
//!
//! where K collects -i(H_c + H_a + V) together with the anticommutator
//! halves -kappa1 a1^dag a1 - kappa2 a2^dag a2 - gamma1 A11 - gamma2 A22
//! and -eta (A12 + A21). The jump pairs (L_k, R_k) are: 2 kappa_j a_j with
//! a_j^dag, 2 gamma1 A31 with A13, 2 gamma2 A32 with A23, 2 eta A31 with
//! A23, and 2 eta A32 with A13. For Hermitian rho the adjoint drift term
//! equals (K rho)^dag, so one sparse product per application suffices.
//!
//! Basis ordering: |atom, n1, n2> with atom in {|1>, |2>, |3>} and
//! index (ia * (N1+1) + i1) * (N2+1) + i2.

use crate::atom::SystemParams;
use crate::coeffs;
use crate::duan::duan_report;
use crate::moments::{self, MomentState};
use crate::numerics::ComplexMatrix;
use crate::{atom, Error, Result};
use num_complex::Complex64;
use std::collections::BTreeMap;

/// Hilbert-space guard: 3 (N1+1)(N2+1) must stay desk-scale.
const MAX_DIM: usize = 400;
/// Resolution guard: dt * (Omega_0 + |Delta_0| + |delta_1| + |delta_2|) <= 0.1.
const RESOLUTION_GUARD: f64 = 0.1;
/// Top-Fock-level population above which a run counts as under-truncated.
const OVERFLOW_TOL: f64 = 1e-3;

/// Truncation and integration controls of an oracle run.
#[derive(Clone, Copy, Debug)]
pub struct FockConfig {
    /// Fock truncation of mode 1 (photon numbers 0..=n1).
    pub n1: usize,
    /// Fock truncation of mode 2.
    pub n2: usize,
    /// Integrator step, units of 1/gamma1.
    pub dt: f64,
    /// Integration horizon.
    pub t_max: f64,
    /// Convergence threshold on the Frobenius norm of drho/dt.
    pub tol: f64,
}

impl FockConfig {
    pub fn dim(&self) -> usize {
        3 * (self.n1 + 1) * (self.n2 + 1)
    }

    pub fn validate(&self, params: &SystemParams) -> Result<()> {
        if self.n1 < 2 || self.n2 < 2 {
            return Err(Error::Config("Fock truncations must be at least 2".into()));
        }
        if self.dim() > MAX_DIM {
            return Err(Error::Config(format!(
                "Hilbert dimension {} exceeds the desk-scale guard {MAX_DIM}",
                self.dim()
            )));
        }
        if !(self.dt > 0.0 && self.t_max > 0.0 && self.tol > 0.0) {
            return Err(Error::Config("dt, t_max and tol must be positive".into()));
        }
        let omega0 = (params.delta_l * params.delta_l + 4.0 * params.omega * params.omega).sqrt();
        let freq_scale = omega0 + params.delta0.abs() + params.delta1.abs() + params.delta2.abs();
        if self.dt * freq_scale > RESOLUTION_GUARD * (1.0 + 1e-9) {
            return Err(Error::Config(format!(
                "dt * frequency scale = {:.3e} violates the resolution guard {RESOLUTION_GUARD}",
                self.dt * freq_scale
            )));
        }
        Ok(())
    }
}

/// Density operator on the truncated product space.
#[derive(Clone, Debug)]
pub struct DensityOperator {
    pub matrix: ComplexMatrix,
}

impl DensityOperator {
    pub fn dim(&self) -> usize {
        self.matrix.rows()
    }

    pub fn trace(&self) -> Complex64 {
        (0..self.dim()).map(|i| self.matrix.get(i, i)).sum()
    }

    pub fn hermiticity_defect(&self) -> f64 {
        let n = self.dim();
        let mut worst: f64 = 0.0;
        for i in 0..n {
            for j in i..n {
                worst = worst.max((self.matrix.get(i, j) - self.matrix.get(j, i).conj()).norm());
            }
        }
        worst
    }

    /// Lower bound on the smallest eigenvalue, certified by bisection on
    /// Cholesky factorizability of rho + shift * I.
    pub fn min_eigenvalue_bound(&self) -> f64 {
        let mut lo = -1.0; // rho + 1 I is positive for any state
        let mut hi = 1.0;
        for _ in 0..40 {
            let mid = 0.5 * (lo + hi);
            if self.cholesky_succeeds(mid) {
                hi = mid; // rho + mid I >= 0, so lambda_min >= -mid
            } else {
                lo = mid;
            }
        }
        -hi
    }

    fn cholesky_succeeds(&self, shift: f64) -> bool {
        let n = self.dim();
        let mut a = self.matrix.clone();
        for i in 0..n {
            let v = a.get(i, i) + shift;
            a.set(i, i, v);
        }
        // in-place complex Cholesky; fails on a non-positive pivot
        for k in 0..n {
            let mut pivot = a.get(k, k).re;
            for j in 0..k {
                pivot -= a.get(k, j).norm_sqr();
            }
            if pivot <= 0.0 || !pivot.is_finite() {
                return false;
            }
            let root = pivot.sqrt();
            a.set(k, k, Complex64::new(root, 0.0));
            for i in k + 1..n {
                let mut v = a.get(i, k);
                for j in 0..k {
                    v -= a.get(i, j) * a.get(k, j).conj();
                }
                a.set(i, k, v / root);
            }
        }
        true
    }
}

/// Sparse operator in coordinate form, rows ascending.
#[derive(Clone, Debug)]
pub struct SparseOp {
    dim: usize,
    entries: Vec<(usize, usize, Complex64)>,
}

impl SparseOp {
    fn from_map(dim: usize, map: BTreeMap<(usize, usize), Complex64>) -> Self {
        let entries = map
            .into_iter()
            .filter(|(_, v)| v.norm() > 0.0)
            .map(|((i, j), v)| (i, j, v))
            .collect();
        Self { dim, entries }
    }

    fn adjoint(&self) -> Self {
        let mut map = BTreeMap::new();
        for &(i, j, v) in &self.entries {
            map.insert((j, i), v.conj());
        }
        Self::from_map(self.dim, map)
    }

    fn mul(&self, other: &Self) -> Self {
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        let mut by_row: BTreeMap<usize, Vec<(usize, Complex64)>> = BTreeMap::new();
        for &(i, j, v) in &other.entries {
            by_row.entry(i).or_default().push((j, v));
        }
        for &(i, k, a) in &self.entries {
            if let Some(row) = by_row.get(&k) {
                for &(j, b) in row {
                    *map.entry((i, j)).or_insert(Complex64::ZERO) += a * b;
                }
            }
        }
        Self::from_map(self.dim, map)
    }

    fn scale(&self, s: Complex64) -> Self {
        Self {
            dim: self.dim,
            entries: self
                .entries
                .iter()
                .map(|&(i, j, v)| (i, j, v * s))
                .collect(),
        }
    }

    fn add(&self, other: &Self) -> Self {
        let mut map: BTreeMap<(usize, usize), Complex64> = BTreeMap::new();
        for &(i, j, v) in self.entries.iter().chain(&other.entries) {
            *map.entry((i, j)).or_insert(Complex64::ZERO) += v;
        }
        Self::from_map(self.dim, map)
    }

    /// Trace of (self * rho).
    fn trace_with(&self, rho: &ComplexMatrix) -> Complex64 {
        self.entries
            .iter()
            .map(|&(i, k, v)| v * rho.get(k, i))
            .sum()
    }
}

/// The bare-frame Liouvillian in drift-plus-jumps form, with the
/// measurement operators needed for moments and truncation checks.
pub struct BareLiouvillian {
    dim: usize,
    drift: SparseOp,
    jumps: Vec<(SparseOp, SparseOp)>,
    n1_diag: Vec<f64>,
    n2_diag: Vec<f64>,
    pair: SparseOp,
    top1: Vec<usize>,
    top2: Vec<usize>,
    ground_index: usize,
}

impl BareLiouvillian {
    pub fn new(params: &SystemParams, fock: &FockConfig) -> Result<Self> {
        params.validate()?;
        fock.validate(params)?;
        let (d1, d2) = (fock.n1 + 1, fock.n2 + 1);
        let dim = 3 * d1 * d2;
        let idx = |ia: usize, i1: usize, i2: usize| (ia * d1 + i1) * d2 + i2;

        let atomic = |p: usize, q: usize| -> SparseOp {
            let mut map = BTreeMap::new();
            for i1 in 0..d1 {
                for i2 in 0..d2 {
                    map.insert((idx(p - 1, i1, i2), idx(q - 1, i1, i2)), Complex64::ONE);
                }
            }
            SparseOp::from_map(dim, map)
        };
        let lower1 = {
            let mut map = BTreeMap::new();
            for ia in 0..3 {
                for i1 in 1..d1 {
                    for i2 in 0..d2 {
                        map.insert(
                            (idx(ia, i1 - 1, i2), idx(ia, i1, i2)),
                            Complex64::new((i1 as f64).sqrt(), 0.0),
                        );
                    }
                }
            }
            SparseOp::from_map(dim, map)
        };
        let lower2 = {
            let mut map = BTreeMap::new();
            for ia in 0..3 {
                for i1 in 0..d1 {
                    for i2 in 1..d2 {
                        map.insert(
                            (idx(ia, i1, i2 - 1), idx(ia, i1, i2)),
                            Complex64::new((i2 as f64).sqrt(), 0.0),
                        );
                    }
                }
            }
            SparseOp::from_map(dim, map)
        };

        let r = |v: f64| Complex64::new(v, 0.0);
        let a13 = atomic(1, 3);
        let a23 = atomic(2, 3);
        let a31 = atomic(3, 1);
        let a32 = atomic(3, 2);

        // H = H_c + H_a + V
        let num1 = lower1.adjoint().mul(&lower1);
        let num2 = lower2.adjoint().mul(&lower2);
        let mut h = num1
            .scale(r(-params.delta1))
            .add(&num2.scale(r(params.delta2)));
        h = h.add(&atomic(1, 1).scale(r(params.delta_l + params.delta0)));
        h = h.add(&atomic(2, 2).scale(r(params.delta_l)));
        h = h.add(
            &a23.scale(r(-params.omega))
                .add(&a32.scale(r(-params.omega))),
        );
        let v_int = lower1
            .scale(r(params.g1))
            .add(&lower2.scale(r(params.g2)))
            .mul(&a23)
            .add(
                &lower1
                    .scale(r(params.g3))
                    .add(&lower2.scale(r(params.g4)))
                    .mul(&a13),
            );
        h = h.add(&v_int).add(&v_int.adjoint());

        // K = -iH - kappa_j n_j - gamma1 A11 - gamma2 A22 - eta (A12 + A21)
        let eta = params.eta();
        let mut drift = h.scale(Complex64::new(0.0, -1.0));
        drift = drift.add(&num1.scale(r(-params.kappa1)));
        drift = drift.add(&num2.scale(r(-params.kappa2)));
        drift = drift.add(&atomic(1, 1).scale(r(-params.gamma1)));
        drift = drift.add(&atomic(2, 2).scale(r(-params.gamma2)));
        drift = drift.add(&atomic(1, 2).add(&atomic(2, 1)).scale(r(-eta)));

        let jumps = vec![
            (lower1.scale(r(2.0 * params.kappa1)), lower1.adjoint()),
            (lower2.scale(r(2.0 * params.kappa2)), lower2.adjoint()),
            (a31.scale(r(2.0 * params.gamma1)), a13.clone()),
            (a32.scale(r(2.0 * params.gamma2)), a23.clone()),
            (a31.scale(r(2.0 * eta)), a23),
            (a32.scale(r(2.0 * eta)), a13),
        ];

        let mut n1_diag = vec![0.0; dim];
        let mut n2_diag = vec![0.0; dim];
        let mut top1 = Vec::new();
        let mut top2 = Vec::new();
        for ia in 0..3 {
            for i1 in 0..d1 {
                for i2 in 0..d2 {
                    let k = idx(ia, i1, i2);
                    n1_diag[k] = i1 as f64;
                    n2_diag[k] = i2 as f64;
                    if i1 == d1 - 1 {
                        top1.push(k);
                    }
                    if i2 == d2 - 1 {
                        top2.push(k);
                    }
                }
            }
        }

        Ok(Self {
            dim,
            drift,
            jumps,
            n1_diag,
            n2_diag,
            pair: lower1.mul(&lower2),
            top1,
            top2,
            ground_index: idx(2, 0, 0),
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Ground initial state |3> (x) vacuum (x) vacuum.
    pub fn ground_state(&self) -> DensityOperator {
        let mut m = ComplexMatrix::zeros(self.dim, self.dim);
        m.set(self.ground_index, self.ground_index, Complex64::ONE);
        DensityOperator { matrix: m }
    }

    /// drho/dt for a Hermitian density matrix.
    pub fn apply(&self, rho: &ComplexMatrix, out: &mut ComplexMatrix) {
        let n = self.dim;
        let src = rho.data();
        let dst = out.data_mut();
        dst.fill(Complex64::ZERO);
        // X = K rho via row AXPYs
        for &(i, k, v) in &self.drift.entries {
            let (row_i, row_k) = (i * n, k * n);
            for j in 0..n {
                dst[row_i + j] += v * src[row_k + j];
            }
        }
        // X + X^dag in place
        for i in 0..n {
            for j in i..n {
                let a = dst[i * n + j];
                let b = dst[j * n + i];
                let s = a + b.conj();
                dst[i * n + j] = s;
                dst[j * n + i] = s.conj();
            }
        }
        // jump sandwiches L rho R
        for (l, rr) in &self.jumps {
            for &(i, k, lv) in &l.entries {
                let row_k = k * n;
                let row_i = i * n;
                for &(kk, j, rv) in &rr.entries {
                    dst[row_i + j] += lv * src[row_k + kk] * rv;
                }
            }
        }
    }

    pub fn moments(&self, rho: &DensityOperator) -> MomentState {
        let n = self.dim;
        let mut n1 = 0.0;
        let mut n2 = 0.0;
        for i in 0..n {
            let p = rho.matrix.get(i, i).re;
            n1 += self.n1_diag[i] * p;
            n2 += self.n2_diag[i] * p;
        }
        MomentState {
            n1,
            n2,
            m12: self.pair.trace_with(&rho.matrix),
        }
    }

    /// Populations of the top Fock level of each mode.
    pub fn top_fock_population(&self, rho: &DensityOperator) -> (f64, f64) {
        let p1 = self.top1.iter().map(|&i| rho.matrix.get(i, i).re).sum();
        let p2 = self.top2.iter().map(|&i| rho.matrix.get(i, i).re).sum();
        (p1, p2)
    }

    /// Expectation of an atomic projection |v><v| (x) I, with `v` a bare-basis
    /// amplitude triple.
    pub fn atomic_projection(&self, rho: &DensityOperator, v: [Complex64; 3]) -> f64 {
        let block = self.dim / 3;
        let mut acc = Complex64::ZERO;
        for p in 0..3 {
            for q in 0..3 {
                let w = v[p].conj() * v[q];
                if w.norm() == 0.0 {
                    continue;
                }
                for k in 0..block {
                    acc += w * rho.matrix.get(q * block + k, p * block + k);
                }
            }
        }
        acc.re
    }
}

/// Convergence record of an oracle integration.
#[derive(Clone, Debug)]
pub struct OracleRun {
    pub rho: DensityOperator,
    pub converged: bool,
    /// Frobenius norm of drho/dt at the final step.
    pub residual: f64,
    pub t_end: f64,
    pub steps: usize,
    /// Largest pre-renormalization trace deviation per unit time.
    pub trace_drift_rate: f64,
    pub hermiticity_defect: f64,
    pub top_fock: (f64, f64),
}

/// Free-function form of the Liouvillian application.
pub fn liouvillian_apply(
    params: &SystemParams,
    rho: &DensityOperator,
    fock: &FockConfig,
) -> Result<DensityOperator> {
    let liouv = BareLiouvillian::new(params, fock)?;
    let mut out = ComplexMatrix::zeros(liouv.dim(), liouv.dim());
    liouv.apply(&rho.matrix, &mut out);
    Ok(DensityOperator { matrix: out })
}

/// Integrate from the ground state until the residual drops below tol or
/// t_max is reached. Never errors on non-convergence; the flag is recorded.
pub fn integrate_to_steady_state(params: &SystemParams, fock: &FockConfig) -> Result<OracleRun> {
    let liouv = BareLiouvillian::new(params, fock)?;
    let rho0 = liouv.ground_state();
    integrate_from(&liouv, rho0, fock)
}

fn integrate_from(
    liouv: &BareLiouvillian,
    mut rho: DensityOperator,
    fock: &FockConfig,
) -> Result<OracleRun> {
    let n = liouv.dim();
    let len = n * n;
    let dt = fock.dt;
    let steps_max = (fock.t_max / dt).ceil() as usize;
    let mut k1 = ComplexMatrix::zeros(n, n);
    let mut k2 = ComplexMatrix::zeros(n, n);
    let mut k3 = ComplexMatrix::zeros(n, n);
    let mut k4 = ComplexMatrix::zeros(n, n);
    let mut stage = ComplexMatrix::zeros(n, n);

    let mut residual = f64::INFINITY;
    let mut converged = false;
    let mut trace_drift_rate: f64 = 0.0;
    let mut steps = 0;
    while steps < steps_max {
        liouv.apply(&rho.matrix, &mut k1);
        // residual check on the true derivative at the step head
        residual = k1.data().iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt();
        if residual < fock.tol {
            converged = true;
            break;
        }
        for i in 0..len {
            stage.data_mut()[i] = rho.matrix.data()[i] + 0.5 * dt * k1.data()[i];
        }
        liouv.apply(&stage, &mut k2);
        for i in 0..len {
            stage.data_mut()[i] = rho.matrix.data()[i] + 0.5 * dt * k2.data()[i];
        }
        liouv.apply(&stage, &mut k3);
        for i in 0..len {
            stage.data_mut()[i] = rho.matrix.data()[i] + dt * k3.data()[i];
        }
        liouv.apply(&stage, &mut k4);
        let sixth = dt / 6.0;
        for i in 0..len {
            let incr = k1.data()[i] + 2.0 * k2.data()[i] + 2.0 * k3.data()[i] + k4.data()[i];
            rho.matrix.data_mut()[i] += sixth * incr;
        }
        steps += 1;
        // trace renormalization; record the pre-normalization drift rate
        let tr = rho.trace();
        trace_drift_rate = trace_drift_rate.max((tr.re - 1.0).abs() / dt);
        let scale = Complex64::new(1.0 / tr.re, 0.0);
        for z in rho.matrix.data_mut() {
            *z *= scale;
        }
    }

    let top_fock = liouv.top_fock_population(&rho);
    Ok(OracleRun {
        hermiticity_defect: rho.hermiticity_defect(),
        top_fock,
        rho,
        converged,
        residual,
        t_end: steps as f64 * dt,
        steps,
        trace_drift_rate,
    })
}

/// Steady state of the bare master equation with the strict convergence
/// contract: errors on non-convergence or truncation overflow.
pub fn oracle_steady_state(params: &SystemParams, fock: &FockConfig) -> Result<OracleRun> {
    let run = integrate_to_steady_state(params, fock)?;
    let worst_top = run.top_fock.0.max(run.top_fock.1);
    if worst_top > OVERFLOW_TOL {
        return Err(Error::TruncationOverflow {
            population: worst_top,
        });
    }
    if !run.converged {
        return Err(Error::NonConvergence {
            residual: run.residual,
            t: run.t_end,
        });
    }
    Ok(run)
}

/// Cavity moments of a converged oracle state.
pub fn oracle_moments(
    params: &SystemParams,
    rho: &DensityOperator,
    fock: &FockConfig,
) -> Result<MomentState> {
    let liouv = BareLiouvillian::new(params, fock)?;
    if rho.dim() != liouv.dim() {
        return Err(Error::Domain("density operator dimension mismatch".into()));
    }
    Ok(liouv.moments(rho))
}

/// Side-by-side comparison of the secular pipeline against the oracle.
#[derive(Clone, Debug)]
pub struct AuditReport {
    pub secular: MomentState,
    pub oracle: MomentState,
    pub rel_err_n1: f64,
    pub rel_err_n2: f64,
    pub rel_err_c: f64,
    pub upsilon_secular: f64,
    pub upsilon_oracle: f64,
    pub converged: bool,
    pub residual: f64,
    pub t_end: f64,
    pub trace_drift_rate: f64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub top_fock: (f64, f64),
}

fn rel_err(secular: f64, oracle: f64) -> f64 {
    let denom = oracle.abs();
    if denom < 1e-30 {
        if secular.abs() < 1e-30 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (secular - oracle).abs() / denom
    }
}

/// Run both pipelines at identical parameters and report relative moment
/// errors and the two entanglement measures.
///
/// Requires the secular-regime guard Omega_0 >= 25 max(gamma_i, g_i).
pub fn secular_audit(params: &SystemParams, fock: &FockConfig) -> Result<AuditReport> {
    params.validate()?;
    let omega0 = (params.delta_l * params.delta_l + 4.0 * params.omega * params.omega).sqrt();
    let rate_scale = [
        params.gamma1,
        params.gamma2,
        params.g1,
        params.g2,
        params.g3,
        params.g4,
    ]
    .into_iter()
    .fold(0.0, f64::max);
    if omega0 < 25.0 * rate_scale {
        return Err(Error::Domain(format!(
            "audit outside the secular regime: Omega_0 = {omega0} < 25 * {rate_scale}"
        )));
    }

    // secular side
    let ss = atom::atom_steady_state(params)?;
    let co = if params.g3 == 0.0 && params.g4 == 0.0 {
        coeffs::coeffs_config_a(params, &ss)?
    } else if params.g2 == 0.0 && params.g3 == 0.0 {
        coeffs::coeffs_config_b(params, &ss)?
    } else {
        return Err(Error::Configuration(
            "audit requires coupling pattern A (g3 = g4 = 0) or B (g2 = g3 = 0)".into(),
        ));
    };
    let stab = moments::stability(&co);
    let secular = moments::steady_moments(&co)?;
    let upsilon_secular = duan_report(&secular, stab.stable)?.upsilon;

    // oracle side
    let run = integrate_to_steady_state(params, fock)?;
    let oracle = oracle_moments(params, &run.rho, fock)?;
    let upsilon_oracle = duan_report(&oracle, true)?.upsilon;

    Ok(AuditReport {
        rel_err_n1: rel_err(secular.n1, oracle.n1),
        rel_err_n2: rel_err(secular.n2, oracle.n2),
        rel_err_c: rel_err(secular.m12.norm(), oracle.m12.norm()),
        secular,
        oracle,
        upsilon_secular,
        upsilon_oracle,
        converged: run.converged,
        residual: run.residual,
        t_end: run.t_end,
        trace_drift_rate: run.trace_drift_rate,
        hermiticity_defect: run.hermiticity_defect,
        min_eigenvalue: run.rho.min_eigenvalue_bound(),
        top_fock: run.top_fock,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::atom::{atom_steady_state, dressed_basis, Eta0Convention};
    use approx::assert_abs_diff_eq;

    fn quiet_params() -> SystemParams {
        SystemParams {
            gamma1: 1.0,
            gamma2: 0.3,
            p: 0.0,
            omega: 20.0,
            delta_l: 0.0,
            delta0: 20.0,
            delta1: 15.0,
            delta2: 15.0,
            kappa1: 0.63,
            kappa2: 0.63,
            g1: 0.0,
            g2: 0.0,
            g3: 0.0,
            g4: 0.0,
            eta0_convention: Eta0Convention::SinPhi,
        }
    }

    fn small_fock(t_max: f64, tol: f64) -> FockConfig {
        FockConfig {
            n1: 2,
            n2: 2,
            dt: 4e-4,
            t_max,
            tol,
        }
    }

    #[test]
    fn dark_state_is_stationary() {
        // no couplings, no drive: |3> (x) vacuum is exactly dark
        let params = SystemParams {
            omega: 0.0,
            delta_l: 5.0,
            ..quiet_params()
        };
        let fock = small_fock(1.0, 1e-9);
        let liouv = BareLiouvillian::new(&params, &fock).unwrap();
        let rho = liouv.ground_state();
        let drho = liouvillian_apply(&params, &rho, &fock).unwrap();
        assert!(drho.matrix.max_abs() < 1e-14);
    }

    #[test]
    fn derivative_is_traceless_and_hermitian() {
        let params = SystemParams {
            p: 0.7,
            g1: 1.0,
            g2: 0.5,
            g3: 0.3,
            g4: 0.8,
            ..quiet_params()
        };
        let fock = small_fock(1.0, 1e-9);
        let liouv = BareLiouvillian::new(&params, &fock).unwrap();
        // random-ish Hermitian unit-trace state
        let n = liouv.dim();
        let mut m = ComplexMatrix::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = Complex64::new(
                    ((i * 7 + j * 3) % 11) as f64 / 50.0,
                    ((i * 5 + j * 13) % 7) as f64 / 70.0,
                );
                m.set(i, j, v);
            }
        }
        let herm = m.add(&m.adjoint()).scale(Complex64::new(0.5, 0.0));
        let mut rho = DensityOperator { matrix: herm };
        let tr = rho.trace();
        let inv = Complex64::new(1.0 / tr.re, 0.0);
        for z in rho.matrix.data_mut() {
            *z *= inv;
        }
        let drho = liouvillian_apply(&params, &rho, &fock).unwrap();
        assert!(
            drho.trace().norm() < 1e-10,
            "trace of drho = {}",
            drho.trace()
        );
        assert!(
            DensityOperator {
                matrix: drho.matrix.clone()
            }
            .hermiticity_defect()
                < 1e-12
        );
    }

    #[test]
    fn empty_cavity_decays_at_2kappa() {
        let params = SystemParams {
            omega: 10.0,
            ..quiet_params()
        };
        let fock = small_fock(1.0, 1e-12);
        let liouv = BareLiouvillian::new(&params, &fock).unwrap();
        // one photon in mode 1, atom in |3>
        let n = liouv.dim();
        let mut m = ComplexMatrix::zeros(n, n);
        let d2 = fock.n2 + 1;
        let one_photon = (2 * (fock.n1 + 1) + 1) * d2; // ia=2, i1=1, i2=0
        m.set(one_photon, one_photon, Complex64::ONE);
        let rho = DensityOperator { matrix: m };
        let run = integrate_from(&liouv, rho, &small_fock(1.0, 1e-30)).unwrap();
        let mom = liouv.moments(&run.rho);
        let expect = (-2.0 * params.kappa1 * run.t_end).exp();
        assert!((mom.n1 - expect).abs() < 1e-6, "{} vs {expect}", mom.n1);
        assert!(mom.n2.abs() < 1e-12);
    }

    #[test]
    fn moments_of_simple_states() {
        let params = quiet_params();
        let fock = small_fock(1.0, 1e-9);
        let liouv = BareLiouvillian::new(&params, &fock).unwrap();
        let vac = liouv.ground_state();
        let mom = liouv.moments(&vac);
        assert_eq!(mom.n1, 0.0);
        assert_eq!(mom.n2, 0.0);
        assert_eq!(mom.m12, Complex64::ZERO);

        // weakly two-mode-squeezed pure state |psi> ~ |00> + r |11>
        let r = 0.2;
        let norm = 1.0 / (1.0 + r * r);
        let n = liouv.dim();
        let d1 = fock.n1 + 1;
        let d2 = fock.n2 + 1;
        let i00 = (2 * d1) * d2;
        let i11 = (2 * d1 + 1) * d2 + 1;
        let mut m = ComplexMatrix::zeros(n, n);
        m.set(i00, i00, Complex64::new(norm, 0.0));
        m.set(i00, i11, Complex64::new(norm * r, 0.0));
        m.set(i11, i00, Complex64::new(norm * r, 0.0));
        m.set(i11, i11, Complex64::new(norm * r * r, 0.0));
        let mom = liouv.moments(&DensityOperator { matrix: m });
        assert_abs_diff_eq!(mom.n1, r * r * norm, epsilon = 1e-12);
        assert_abs_diff_eq!(mom.n2, r * r * norm, epsilon = 1e-12);
        assert_abs_diff_eq!(mom.m12.re, r * norm, epsilon = 1e-12);
    }

    #[test]
    fn driven_atom_reaches_two_level_steady_state() {
        // g = 0, p = 0: the bare rho_22 must match the optical Bloch value
        // Omega^2 / (Delta_L^2 + gamma2^2 + 2 Omega^2), modes stay in vacuum
        let params = SystemParams {
            gamma2: 1.0,
            omega: 20.0,
            delta_l: 8.0,
            delta0: 30.0,
            ..quiet_params()
        };
        let fock = small_fock(40.0, 1e-8);
        let liouv = BareLiouvillian::new(&params, &fock).unwrap();
        let run = integrate_from(&liouv, liouv.ground_state(), &fock).unwrap();
        let ee =
            liouv.atomic_projection(&run.rho, [Complex64::ZERO, Complex64::ONE, Complex64::ZERO]);
        let expect = params.omega * params.omega
            / (params.delta_l * params.delta_l
                + params.gamma2 * params.gamma2
                + 2.0 * params.omega * params.omega);
        assert!((ee - expect).abs() < 1e-5, "{ee} vs {expect}");
        let mom = liouv.moments(&run.rho);
        assert!(mom.n1 < 1e-10);
        assert!(run.converged);
    }

    #[test]
    fn atom_only_oracle_matches_dressed_bloch_at_crossing() {
        // level crossing at Delta_L = 0: the secular dressed Bloch equations
        // are exact up to O(gamma/Omega_0); project the bare steady state
        // onto the dressed superpositions and compare populations
        let mut params = SystemParams {
            p: 0.8,
            gamma2: 0.3,
            omega: 20.0,
            ..quiet_params()
        };
        let basis = dressed_basis(&params).unwrap();
        params.delta0 = 0.5 * basis.omega0;
        let fock = small_fock(120.0, 1e-7);
        let liouv = BareLiouvillian::new(&params, &fock).unwrap();
        let run = integrate_from(&liouv, liouv.ground_state(), &fock).unwrap();
        let (s, c) = (basis.sin_phi, basis.cos_phi);
        let one = [Complex64::ONE, Complex64::ZERO, Complex64::ZERO];
        let two = [
            Complex64::ZERO,
            Complex64::new(s, 0.0),
            Complex64::new(-c, 0.0),
        ];
        let three = [
            Complex64::ZERO,
            Complex64::new(c, 0.0),
            Complex64::new(s, 0.0),
        ];
        let ss = atom_steady_state(&params).unwrap();
        let p1 = liouv.atomic_projection(&run.rho, one);
        let p2 = liouv.atomic_projection(&run.rho, two);
        let p3 = liouv.atomic_projection(&run.rho, three);
        assert!((p1 - ss.rho11).abs() < 1.5e-2, "rho11 {p1} vs {}", ss.rho11);
        assert!((p2 - ss.rho22).abs() < 1.5e-2, "rho22 {p2} vs {}", ss.rho22);
        assert!((p3 - ss.rho33).abs() < 1.5e-2, "rho33 {p3} vs {}", ss.rho33);
    }

    #[test]
    fn audit_with_zero_couplings_reports_zero_errors() {
        let params = SystemParams {
            omega: 50.0,
            delta0: 50.0,
            delta1: 50.0,
            delta2: 50.0,
            ..quiet_params()
        };
        let fock = small_fock(30.0, 1e-6);
        let report = secular_audit(&params, &fock).unwrap();
        assert_eq!(report.rel_err_n1, 0.0);
        assert_eq!(report.rel_err_n2, 0.0);
        assert_eq!(report.rel_err_c, 0.0);
        assert_abs_diff_eq!(report.upsilon_secular, 0.0, epsilon = 1e-12);
        assert_abs_diff_eq!(report.upsilon_oracle, 0.0, epsilon = 1e-9);
    }

    #[test]
    fn audit_guards_the_secular_regime() {
        let params = SystemParams {
            omega: 1.0,
            g1: 2.0,
            g2: 2.0,
            ..quiet_params()
        };
        let fock = small_fock(10.0, 1e-6);
        assert!(matches!(
            secular_audit(&params, &fock),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn fock_config_guards() {
        let params = quiet_params();
        let bad = FockConfig {
            n1: 1,
            n2: 2,
            dt: 4e-4,
            t_max: 10.0,
            tol: 1e-6,
        };
        assert!(bad.validate(&params).is_err());
        let big = FockConfig {
            n1: 20,
            n2: 20,
            dt: 4e-4,
            t_max: 10.0,
            tol: 1e-6,
        };
        assert!(big.validate(&params).is_err());
        let coarse = FockConfig {
            n1: 2,
            n2: 2,
            dt: 0.05,
            t_max: 10.0,
            tol: 1e-6,
        };
        assert!(coarse.validate(&params).is_err());
    }

    #[test]
    fn min_eigenvalue_certificate() {
        let mut m = ComplexMatrix::zeros(3, 3);
        m.set(0, 0, Complex64::new(0.7, 0.0));
        m.set(1, 1, Complex64::new(0.3, 0.0));
        m.set(2, 2, Complex64::new(-1e-4, 0.0));
        let rho = DensityOperator { matrix: m };
        let bound = rho.min_eigenvalue_bound();
        assert!((bound + 1e-4).abs() < 1e-8, "bound {bound}");
    }
}
