//! Dressed states of the driven transition, the dressed-basis Bloch equations,
//! the atomic steady state, the 5x5 regression matrix U(delta) with its
//! inverse elements, and the trapping-state analysis at the level crossing.
//!
//! The dressed basis mixes |2> and |3> of the V-type atom by the angle phi,
//! cos^2(phi) = 1/2 + Delta_L/(2 Omega_0), with Omega_0 = sqrt(Delta_L^2 + 4 Omega^2)
//! the generalized Rabi frequency. The Bloch vector is ordered
//! (rho11, rho22, rho33, rho12, rho21) throughout, matching the row/column
//! layout of U(delta).

use crate::numerics::{self, ComplexMatrix};
use crate::{Error, Result};
use num_complex::Complex64;

/// Tolerance on the level-crossing condition Delta_0 = (Omega_0 - Delta_L)/2
/// accepted by the trapping-state analysis.
const CROSSING_TOL: f64 = 1e-6;

/// Convention for the SGC rate eta_0 entering the dressed-frame equations.
///
/// The bare-frame rate is eta = p sqrt(gamma1 gamma2). In the dressed frame
/// the cross-damping acquires a mixing-angle factor; `SinPhi` is the
/// convention under which the trapping superpositions are exactly stationary
/// at the level crossing, and it is the default. The alternatives are kept
/// selectable so the oracle audit can discriminate them empirically.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Eta0Convention {
    #[default]
    SinPhi,
    Bare,
    CosPhi,
}

impl Eta0Convention {
    pub fn label(self) -> &'static str {
        match self {
            Eta0Convention::SinPhi => "sin-phi",
            Eta0Convention::Bare => "bare",
            Eta0Convention::CosPhi => "cos-phi",
        }
    }
}

/// Physical inputs, all rates and frequencies in units of gamma1.
///
/// Detuning conventions: `delta_l` = omega_23 - omega_L, `delta1` = omega_L - omega_1,
/// `delta2` = omega_2 - omega_L, `delta0` = omega_13 - omega_23 > 0.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SystemParams {
    pub gamma1: f64,
    pub gamma2: f64,
    /// Dipole alignment p = cos(theta), in [-1, 1].
    pub p: f64,
    /// Half-Rabi amplitude of the drive.
    pub omega: f64,
    pub delta_l: f64,
    pub delta0: f64,
    pub delta1: f64,
    pub delta2: f64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub g1: f64,
    pub g2: f64,
    pub g3: f64,
    pub g4: f64,
    pub eta0_convention: Eta0Convention,
}

impl SystemParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            self.gamma1,
            self.gamma2,
            self.p,
            self.omega,
            self.delta_l,
            self.delta0,
            self.delta1,
            self.delta2,
            self.kappa1,
            self.kappa2,
            self.g1,
            self.g2,
            self.g3,
            self.g4,
        ];
        if fields.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("system parameters".into()));
        }
        if self.gamma1 <= 0.0 {
            return Err(Error::Config("gamma1 must be positive".into()));
        }
        if self.gamma2 < 0.0 {
            return Err(Error::Config("gamma2 must be non-negative".into()));
        }
        if self.kappa1 <= 0.0 || self.kappa2 <= 0.0 {
            return Err(Error::Config("cavity decay rates must be positive".into()));
        }
        if self.p.abs() > 1.0 {
            return Err(Error::Config(format!("|p| = {} exceeds 1", self.p.abs())));
        }
        if self.delta0 <= 0.0 {
            return Err(Error::Config("delta0 must be positive".into()));
        }
        Ok(())
    }

    /// Bare-frame SGC rate eta = p sqrt(gamma1 gamma2).
    pub fn eta(&self) -> f64 {
        self.p * (self.gamma1 * self.gamma2).sqrt()
    }

    /// Dressed-frame SGC rate under the selected convention.
    pub fn eta0(&self, basis: &DressedBasis) -> f64 {
        let factor = match self.eta0_convention {
            Eta0Convention::SinPhi => basis.sin_phi,
            Eta0Convention::Bare => 1.0,
            Eta0Convention::CosPhi => basis.cos_phi,
        };
        self.eta() * factor
    }

    /// delta_12 = (delta2 - delta1)/2.
    pub fn delta12(&self) -> f64 {
        0.5 * (self.delta2 - self.delta1)
    }

    /// Mean cavity detuning (delta1 + delta2)/2.
    pub fn mean_delta(&self) -> f64 {
        0.5 * (self.delta1 + self.delta2)
    }

    /// Offset both cavity detunings so that delta12 becomes `d12` while the
    /// mean detuning is preserved.
    pub fn with_delta12(mut self, d12: f64) -> Self {
        let mean = self.mean_delta();
        self.delta1 = mean - d12;
        self.delta2 = mean + d12;
        self
    }
}

/// Dressed-basis data of the driven transition.
#[derive(Clone, Copy, Debug)]
pub struct DressedBasis {
    /// Generalized Rabi frequency sqrt(Delta_L^2 + 4 Omega^2).
    pub omega0: f64,
    /// Mixing angle in [0, pi/2].
    pub phi: f64,
    pub cos_phi: f64,
    pub sin_phi: f64,
}

impl DressedBasis {
    pub fn cos2_phi(&self) -> f64 {
        self.cos_phi * self.cos_phi
    }

    pub fn sin2_phi(&self) -> f64 {
        self.sin_phi * self.sin_phi
    }

    /// cos(2 phi) = Delta_L / Omega_0.
    pub fn cos_2phi(&self) -> f64 {
        self.cos2_phi() - self.sin2_phi()
    }

    /// sin(2 phi) = 2 Omega / Omega_0.
    pub fn sin_2phi(&self) -> f64 {
        2.0 * self.sin_phi * self.cos_phi
    }
}

/// Construct the dressed basis; fails when Omega = 0 and Delta_L = 0.
pub fn dressed_basis(params: &SystemParams) -> Result<DressedBasis> {
    if params.omega == 0.0 && params.delta_l == 0.0 {
        return Err(Error::DegenerateDrive);
    }
    let omega0 = (params.delta_l * params.delta_l + 4.0 * params.omega * params.omega).sqrt();
    let cos2 = (0.5 + params.delta_l / (2.0 * omega0)).clamp(0.0, 1.0);
    let cos_phi = cos2.sqrt();
    let sin_phi = (1.0 - cos2).max(0.0).sqrt();
    Ok(DressedBasis {
        omega0,
        phi: cos_phi.acos(),
        cos_phi,
        sin_phi,
    })
}

/// Stationary dressed-basis density-matrix elements.
#[derive(Clone, Copy, Debug)]
pub struct AtomSteadyState {
    pub rho11: f64,
    pub rho22: f64,
    pub rho33: f64,
    pub rho12: Complex64,
}

impl AtomSteadyState {
    pub fn rho21(&self) -> Complex64 {
        self.rho12.conj()
    }

    pub fn inversion(&self) -> f64 {
        self.rho22 - self.rho33
    }

    pub fn as_vector(&self) -> [Complex64; 5] {
        [
            Complex64::new(self.rho11, 0.0),
            Complex64::new(self.rho22, 0.0),
            Complex64::new(self.rho33, 0.0),
            self.rho12,
            self.rho12.conj(),
        ]
    }

    /// Eigenvalues of the reconstructed 3x3 dressed density matrix
    /// (the 2x2 coherent block plus the isolated rho33).
    pub fn eigenvalues(&self) -> [f64; 3] {
        let half_tr = 0.5 * (self.rho11 + self.rho22);
        let det = self.rho11 * self.rho22 - self.rho12.norm_sqr();
        let disc = (half_tr * half_tr - det).max(0.0).sqrt();
        [half_tr - disc, half_tr + disc, self.rho33]
    }
}

/// Generator G of the dressed Bloch equations on (rho11, rho22, rho33, rho12, rho21).
///
/// Row structure, with e = eta0, b = gamma1 + gamma2 sin^2(phi)
/// + i (Delta_0 - (Omega_0 - Delta_L)/2):
///
/// d/dt rho11 = -2 g1 rho11 - e (rho12 + rho21)
/// d/dt rho22 =  2 g1 c^2 rho11 + 2 g2 (c^4 rho33 - s^4 rho22) + e cos(2phi) (rho12 + rho21)
/// d/dt rho33 =  2 g1 s^2 rho11 - 2 g2 (c^4 rho33 - s^4 rho22) + 2 e s^2 (rho12 + rho21)
/// d/dt rho12 = -b rho12 - e (rho11 + rho22),   rho21 row by conjugation
pub fn bloch_generator(params: &SystemParams) -> Result<ComplexMatrix> {
    params.validate()?;
    let basis = dressed_basis(params)?;
    let (g1, g2) = (params.gamma1, params.gamma2);
    let (s2, c2) = (basis.sin2_phi(), basis.cos2_phi());
    let (s4, c4) = (s2 * s2, c2 * c2);
    let cos2phi = basis.cos_2phi();
    let e = params.eta0(&basis);
    let b = Complex64::new(
        g1 + g2 * s2,
        params.delta0 - 0.5 * (basis.omega0 - params.delta_l),
    );

    let r = |v: f64| Complex64::new(v, 0.0);
    Ok(ComplexMatrix::from_rows(&[
        vec![r(-2.0 * g1), r(0.0), r(0.0), r(-e), r(-e)],
        vec![
            r(2.0 * g1 * c2),
            r(-2.0 * g2 * s4),
            r(2.0 * g2 * c4),
            r(e * cos2phi),
            r(e * cos2phi),
        ],
        vec![
            r(2.0 * g1 * s2),
            r(2.0 * g2 * s4),
            r(-2.0 * g2 * c4),
            r(2.0 * e * s2),
            r(2.0 * e * s2),
        ],
        vec![r(-e), r(-e), r(0.0), -b, r(0.0)],
        vec![r(-e), r(-e), r(0.0), r(0.0), -b.conj()],
    ]))
}

/// The 5x5 regression matrix U(delta), built entry-by-entry in closed
/// form including the i*delta diagonal shifts; U(delta) = i*delta*I - G.
pub fn regression_matrix(params: &SystemParams, delta: f64) -> Result<ComplexMatrix> {
    params.validate()?;
    let basis = dressed_basis(params)?;
    let (g1, g2) = (params.gamma1, params.gamma2);
    let (s2, c2) = (basis.sin2_phi(), basis.cos2_phi());
    let (s4, c4) = (s2 * s2, c2 * c2);
    let cos2phi = basis.cos_2phi();
    let e = params.eta0(&basis);
    let id = Complex64::new(0.0, delta);
    let b = Complex64::new(
        g1 + g2 * s2,
        params.delta0 - 0.5 * (basis.omega0 - params.delta_l),
    );
    let r = |v: f64| Complex64::new(v, 0.0);
    Ok(ComplexMatrix::from_rows(&[
        vec![r(2.0 * g1) + id, r(0.0), r(0.0), r(e), r(e)],
        vec![
            r(-2.0 * g1 * c2),
            r(2.0 * g2 * s4) + id,
            r(-2.0 * g2 * c4),
            r(-e * cos2phi),
            r(-e * cos2phi),
        ],
        vec![
            r(-2.0 * g1 * s2),
            r(-2.0 * g2 * s4),
            r(2.0 * g2 * c4) + id,
            r(-2.0 * e * s2),
            r(-2.0 * e * s2),
        ],
        vec![r(e), r(e), r(0.0), b + id, r(0.0)],
        vec![r(e), r(e), r(0.0), r(0.0), b.conj() + id],
    ]))
}

/// Elements M_mn(delta) of the inverse of U(delta); indices follow the
/// row/column order of U.
pub fn inverse_elements(params: &SystemParams, delta: f64) -> Result<ComplexMatrix> {
    numerics::mat_inverse(&regression_matrix(params, delta)?)
}

/// Steady state of the dressed Bloch equations: G x = 0 with unit trace,
/// solved by replacing the rho33 row with the trace constraint.
pub fn atom_steady_state(params: &SystemParams) -> Result<AtomSteadyState> {
    let g = bloch_generator(params)?;
    let mut a = g.clone();
    for j in 0..5 {
        a.set(2, j, Complex64::new(if j < 3 { 1.0 } else { 0.0 }, 0.0));
    }
    let rhs = [
        Complex64::ZERO,
        Complex64::ZERO,
        Complex64::ONE,
        Complex64::ZERO,
        Complex64::ZERO,
    ];
    let x = numerics::lu_solve(&a, &rhs).map_err(|e| match e {
        Error::Singular(msg) => Error::NonUniqueSteadyState(msg),
        other => other,
    })?;

    let tol = 1e-9;
    let pops = [x[0], x[1], x[2]];
    for (i, pv) in pops.iter().enumerate() {
        if pv.im.abs() > tol || pv.re < -tol || pv.re > 1.0 + tol {
            return Err(Error::Physicality(format!(
                "population {} = {} outside [0, 1]",
                i + 1,
                pv
            )));
        }
    }
    if (x[3] - x[4].conj()).norm() > tol {
        return Err(Error::Physicality(
            "rho12 and rho21 are not conjugate".into(),
        ));
    }
    let ss = AtomSteadyState {
        rho11: x[0].re.clamp(0.0, 1.0),
        rho22: x[1].re.clamp(0.0, 1.0),
        rho33: x[2].re.clamp(0.0, 1.0),
        rho12: x[3],
    };
    if (ss.rho11 + ss.rho22 + ss.rho33 - 1.0).abs() > tol {
        return Err(Error::Physicality("trace deviates from 1".into()));
    }
    if ss.rho12.norm_sqr() > ss.rho11 * ss.rho22 + tol {
        return Err(Error::Physicality("|rho12|^2 exceeds rho11 rho22".into()));
    }
    Ok(ss)
}

/// Closed-form dressed population difference at p = 0:
/// (cos^4 - sin^4)/(cos^4 + sin^4).
pub fn population_inversion_closed_form(params: &SystemParams) -> Result<f64> {
    if params.p != 0.0 {
        return Err(Error::Domain(
            "closed-form inversion is valid only at p = 0".into(),
        ));
    }
    let basis = dressed_basis(params)?;
    let (c4, s4) = (basis.cos2_phi().powi(2), basis.sin2_phi().powi(2));
    Ok((c4 - s4) / (c4 + s4))
}

/// Trapping superposition amplitudes and stationary populations at the
/// level crossing for |p| = 1.
#[derive(Clone, Copy, Debug)]
pub struct TrappingStates {
    /// |s> = alpha |2~> + beta |1~>, |a> = beta |2~> - alpha |1~>.
    pub alpha: f64,
    pub beta: f64,
    pub rho_ss: f64,
    pub rho_aa: f64,
}

/// Residual of the level-crossing condition Delta_0 = (Omega_0 - Delta_L)/2.
pub fn level_crossing_residual(params: &SystemParams) -> Result<f64> {
    let basis = dressed_basis(params)?;
    Ok(params.delta0 - 0.5 * (basis.omega0 - params.delta_l))
}

/// Stationary populations of the symmetric/antisymmetric superpositions at
/// the level crossing: rho_aa = 1 for p = +1; for p = -1 the populations
/// redistribute to ((alpha^2-beta^2)^2, 4 alpha^2 beta^2).
pub fn trapping_states(params: &SystemParams) -> Result<TrappingStates> {
    if params.p.abs() != 1.0 {
        return Err(Error::Domain(format!(
            "trapping analysis requires p = +1 or -1, got {}",
            params.p
        )));
    }
    let residual = level_crossing_residual(params)?;
    if residual.abs() > CROSSING_TOL * params.gamma1.max(1.0) {
        return Err(Error::Domain(format!(
            "level-crossing condition violated: Delta_0 - (Omega_0 - Delta_L)/2 = {residual:.3e}"
        )));
    }
    let basis = dressed_basis(params)?;
    let s2 = basis.sin2_phi();
    let denom = params.gamma1 + params.gamma2 * s2;
    let alpha = (params.gamma2 * s2 / denom).sqrt();
    let beta = (params.gamma1 / denom).sqrt();
    let (rho_aa, rho_ss) = if params.p > 0.0 {
        (1.0, 0.0)
    } else {
        let (a2, b2) = (alpha * alpha, beta * beta);
        ((a2 - b2).powi(2), 4.0 * a2 * b2)
    };
    Ok(TrappingStates {
        alpha,
        beta,
        rho_ss,
        rho_aa,
    })
}

/// Project a Bloch vector onto the trapping superpositions. Returns
/// (rho_ss, rho_aa) for the given alpha, beta amplitudes.
pub fn superposition_populations(state: &AtomSteadyState, alpha: f64, beta: f64) -> (f64, f64) {
    let cross = 2.0 * state.rho12.re;
    let rho_ss = beta * beta * state.rho11 + alpha * alpha * state.rho22 + alpha * beta * cross;
    let rho_aa = alpha * alpha * state.rho11 + beta * beta * state.rho22 - alpha * beta * cross;
    (rho_ss, rho_aa)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numerics::propagate_linear;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub(crate) fn base_params() -> SystemParams {
        SystemParams {
            gamma1: 1.0,
            gamma2: 0.02,
            p: 0.0,
            omega: 50.0,
            delta_l: 0.0,
            delta0: 50.0,
            delta1: 50.0,
            delta2: 50.0,
            kappa1: 0.63,
            kappa2: 0.63,
            g1: 10.0,
            g2: 10.0,
            g3: 0.0,
            g4: 0.0,
            eta0_convention: Eta0Convention::SinPhi,
        }
    }

    #[test]
    fn dressed_basis_resonant() {
        let p = SystemParams {
            delta_l: 0.0,
            omega: 50.0,
            ..base_params()
        };
        let b = dressed_basis(&p).unwrap();
        assert_abs_diff_eq!(b.omega0, 100.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.cos2_phi(), 0.5, epsilon = 1e-12);
    }

    #[test]
    fn dressed_basis_detuned() {
        let p = SystemParams {
            delta_l: 30.0,
            omega: 20.0,
            ..base_params()
        };
        let b = dressed_basis(&p).unwrap();
        assert_abs_diff_eq!(b.omega0, 50.0, epsilon = 1e-12);
        assert_abs_diff_eq!(b.cos2_phi(), 0.8, epsilon = 1e-12);
        assert_abs_diff_eq!(b.sin2_phi() + b.cos2_phi(), 1.0, epsilon = 1e-15);
    }

    #[test]
    fn dressed_basis_far_detuned_limit() {
        let p = SystemParams {
            delta_l: 1e9,
            omega: 50.0,
            ..base_params()
        };
        let b = dressed_basis(&p).unwrap();
        assert!(b.cos2_phi() > 1.0 - 1e-8);
    }

    #[test]
    fn dressed_basis_degenerate_drive() {
        let p = SystemParams {
            delta_l: 0.0,
            omega: 0.0,
            ..base_params()
        };
        assert!(matches!(dressed_basis(&p), Err(Error::DegenerateDrive)));
    }

    #[test]
    fn generator_conserves_trace() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..20 {
            let p = SystemParams {
                p: rng.gen_range(-1.0..1.0),
                gamma2: rng.gen_range(0.01..3.0),
                delta_l: rng.gen_range(-40.0..40.0),
                omega: rng.gen_range(10.0..80.0),
                delta0: rng.gen_range(1.0..100.0),
                ..base_params()
            };
            let g = bloch_generator(&p).unwrap();
            for j in 0..5 {
                let col_sum: Complex64 = (0..3).map(|i| g.get(i, j)).sum();
                assert!(col_sum.norm() < 1e-12, "column {j} sums to {col_sum}");
            }
        }
    }

    #[test]
    fn generator_decouples_at_p_zero() {
        let g = bloch_generator(&base_params()).unwrap();
        for i in 0..3 {
            for j in 3..5 {
                assert_eq!(g.get(i, j), Complex64::ZERO);
                assert_eq!(g.get(j, i), Complex64::ZERO);
            }
        }
    }

    #[test]
    fn coherence_decay_is_real_at_crossing() {
        // Delta_0 = Omega_0/2 at Delta_L = 0 removes the oscillation frequency
        // Delta_0 - (Omega_0 - Delta_L)/2 of rho12
        let p = SystemParams {
            p: 0.5,
            delta0: 50.0,
            ..base_params()
        };
        let g = bloch_generator(&p).unwrap();
        assert_abs_diff_eq!(g.get(3, 3).im, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn regression_matrix_first_entry_and_route_agreement() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..10 {
            let p = SystemParams {
                p: rng.gen_range(-1.0..1.0),
                gamma2: rng.gen_range(0.01..3.0),
                delta_l: rng.gen_range(-40.0..40.0),
                delta0: rng.gen_range(1.0..80.0),
                ..base_params()
            };
            let delta = rng.gen_range(-60.0..60.0);
            let u = regression_matrix(&p, delta).unwrap();
            assert_abs_diff_eq!(u.get(0, 0).re, 2.0 * p.gamma1, epsilon = 1e-12);
            assert_abs_diff_eq!(u.get(0, 0).im, delta, epsilon = 1e-12);
            // independent route: U(delta) = i delta I - G
            let g = bloch_generator(&p).unwrap();
            let alt = ComplexMatrix::identity(5)
                .scale(Complex64::new(0.0, delta))
                .sub(&g);
            assert!(u.sub(&alt).max_abs() < 1e-12);
        }
    }

    #[test]
    fn regression_matrix_block_diagonal_at_p_zero() {
        let u = regression_matrix(&base_params(), 0.0).unwrap();
        for i in 0..3 {
            for j in 3..5 {
                assert_eq!(u.get(i, j), Complex64::ZERO);
                assert_eq!(u.get(j, i), Complex64::ZERO);
            }
        }
    }

    #[test]
    fn inverse_elements_product_check() {
        // fig. 3 parameter set, delta = 50
        let p = SystemParams {
            p: 0.98,
            delta1: 50.61,
            delta2: 49.39,
            ..base_params()
        };
        let u = regression_matrix(&p, 50.0).unwrap();
        let m = inverse_elements(&p, 50.0).unwrap();
        let prod = u.mul(&m);
        assert!(prod.sub(&ComplexMatrix::identity(5)).inf_norm() < 1e-9);
    }

    #[test]
    fn inverse_elements_decoupled_coherence_block() {
        let m = inverse_elements(&base_params(), 25.0).unwrap();
        assert!(m.get(3, 0).norm() < 1e-14);
        assert!(m.get(3, 1).norm() < 1e-14);
    }

    #[test]
    fn inverse_elements_singular_at_zero_delta() {
        // U(0) = -G is singular on the trace-free subspace
        assert!(matches!(
            inverse_elements(&base_params(), 0.0),
            Err(Error::Singular(_))
        ));
    }

    #[test]
    fn steady_state_matches_closed_form_at_p_zero() {
        for k in 0..=200 {
            let dl = -100.0 + k as f64;
            let p = SystemParams {
                delta_l: dl,
                ..base_params()
            };
            let ss = atom_steady_state(&p).unwrap();
            let closed = population_inversion_closed_form(&p).unwrap();
            assert!(
                (ss.inversion() - closed).abs() < 1e-10,
                "Delta_L = {dl}: {} vs {closed}",
                ss.inversion()
            );
            assert!(ss.rho11 < 1e-12);
        }
    }

    #[test]
    fn closed_form_rejects_nonzero_p() {
        let p = SystemParams {
            p: 0.5,
            ..base_params()
        };
        assert!(matches!(
            population_inversion_closed_form(&p),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn closed_form_examples() {
        let p0 = SystemParams {
            delta_l: 0.0,
            ..base_params()
        };
        assert_abs_diff_eq!(
            population_inversion_closed_form(&p0).unwrap(),
            0.0,
            epsilon = 1e-15
        );
        let p1 = SystemParams {
            delta_l: 30.0,
            omega: 20.0,
            ..base_params()
        };
        assert_abs_diff_eq!(
            population_inversion_closed_form(&p1).unwrap(),
            15.0 / 17.0,
            epsilon = 1e-12
        );
    }

    #[test]
    fn steady_state_is_generator_kernel() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        for _ in 0..100 {
            let p = SystemParams {
                p: rng.gen_range(-1.0..1.0),
                gamma2: rng.gen_range(0.01..5.0),
                delta_l: rng.gen_range(-50.0..50.0),
                omega: rng.gen_range(10.0..100.0),
                delta0: rng.gen_range(5.0..120.0),
                ..base_params()
            };
            let g = bloch_generator(&p).unwrap();
            let ss = atom_steady_state(&p).unwrap();
            let resid = g.mul_vec(&ss.as_vector());
            let max = resid.iter().map(|z| z.norm()).fold(0.0, f64::max);
            assert!(max < 1e-9, "||G x_ss|| = {max}");
        }
    }

    #[test]
    fn steady_state_positivity() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        for _ in 0..50 {
            let p = SystemParams {
                p: rng.gen_range(-1.0..1.0),
                gamma2: rng.gen_range(0.01..5.0),
                delta_l: rng.gen_range(-50.0..50.0),
                delta0: rng.gen_range(5.0..120.0),
                ..base_params()
            };
            let ss = atom_steady_state(&p).unwrap();
            for ev in ss.eigenvalues() {
                assert!(ev >= -1e-10, "eigenvalue {ev}");
            }
        }
    }

    #[test]
    fn steady_state_agrees_with_long_time_integration() {
        // moderate rates so the integration horizon stays short
        let p = SystemParams {
            p: 0.6,
            gamma2: 0.8,
            delta_l: 10.0,
            omega: 20.0,
            delta0: 18.0,
            ..base_params()
        };
        let g = bloch_generator(&p).unwrap();
        let ss = atom_steady_state(&p).unwrap();
        let x0 = [
            Complex64::ZERO,
            Complex64::ZERO,
            Complex64::ONE,
            Complex64::ZERO,
            Complex64::ZERO,
        ];
        let x = propagate_linear(&g, &[Complex64::ZERO; 5], &x0, 60.0).unwrap();
        let target = ss.as_vector();
        for i in 0..5 {
            assert!((x[i] - target[i]).norm() < 1e-6, "component {i}");
        }
    }

    #[test]
    fn trapping_antisymmetric_state_at_p_plus_one() {
        for &dl in &[0.0, 10.0, -20.0] {
            for &g2 in &[0.02, 0.5, 1.0, 2.0, 3.0] {
                let mut p = SystemParams {
                    p: 1.0,
                    gamma2: g2,
                    delta_l: dl,
                    ..base_params()
                };
                let b = dressed_basis(&p).unwrap();
                p.delta0 = 0.5 * (b.omega0 - dl);
                let t = trapping_states(&p).unwrap();
                assert_eq!(t.rho_aa, 1.0);
                let ss = atom_steady_state(&p).unwrap();
                let (_, rho_aa) = superposition_populations(&ss, t.alpha, t.beta);
                assert!(
                    (rho_aa - 1.0).abs() < 1e-6,
                    "dl={dl} g2={g2}: rho_aa={rho_aa}"
                );
            }
        }
    }

    #[test]
    fn trapping_anti_parallel_populations() {
        for &g2 in &[0.02, 0.5, 1.0, 2.0, 3.0] {
            let mut p = SystemParams {
                p: -1.0,
                gamma2: g2,
                ..base_params()
            };
            let b = dressed_basis(&p).unwrap();
            p.delta0 = 0.5 * b.omega0;
            let t = trapping_states(&p).unwrap();
            let ss = atom_steady_state(&p).unwrap();
            let (rho_ss, rho_aa) = superposition_populations(&ss, t.alpha, t.beta);
            assert!((rho_aa - t.rho_aa).abs() < 1e-8);
            assert!((rho_ss - t.rho_ss).abs() < 1e-8);
            assert!(ss.rho33.abs() < 1e-8);
        }
    }

    #[test]
    fn trapping_symmetric_state_when_rates_match() {
        // gamma1 = gamma2 sin^2(phi) puts everything into |s> at p = -1
        let mut p = SystemParams {
            p: -1.0,
            gamma2: 2.0,
            delta_l: 0.0,
            ..base_params()
        };
        let b = dressed_basis(&p).unwrap();
        p.delta0 = 0.5 * b.omega0;
        let t = trapping_states(&p).unwrap();
        assert_abs_diff_eq!(t.rho_ss, 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(t.rho_aa, 0.0, epsilon = 1e-12);
    }

    #[test]
    fn trapping_normalization() {
        let mut p = SystemParams {
            p: 1.0,
            gamma2: 1.7,
            delta_l: 5.0,
            ..base_params()
        };
        let b = dressed_basis(&p).unwrap();
        p.delta0 = 0.5 * (b.omega0 - p.delta_l);
        let t = trapping_states(&p).unwrap();
        assert_abs_diff_eq!(t.alpha * t.alpha + t.beta * t.beta, 1.0, epsilon = 1e-12);
    }

    #[test]
    fn trapping_rejects_off_crossing() {
        let p = SystemParams {
            p: 1.0,
            delta0: 40.0,
            ..base_params()
        };
        assert!(matches!(trapping_states(&p), Err(Error::Domain(_))));
        let p = SystemParams {
            p: 0.5,
            ..base_params()
        };
        assert!(matches!(trapping_states(&p), Err(Error::Domain(_))));
    }

    #[test]
    fn validate_rejects_out_of_range() {
        let p = SystemParams {
            p: 1.5,
            ..base_params()
        };
        assert!(p.validate().is_err());
        let p = SystemParams {
            delta0: -1.0,
            ..base_params()
        };
        assert!(p.validate().is_err());
        let p = SystemParams {
            kappa1: 0.0,
            ..base_params()
        };
        assert!(p.validate().is_err());
    }
}
