//! Second-moment dynamics of the two cavity modes, the parametric stability
//! condition, and steady-state moment extraction.
//!
//! The moment vector is x = (n1, n2, m, m*) with n_j = <a_j^dag a_j> and
//! m = <a1 a2>; the fourth row is the conjugate of the third so the drift
//! matrix stays a genuine complex matrix with one equation per row:
//!
//! dn_j/dt = -(Gamma_j + Gamma_j*) n_j + chi_j m* + chi_j* m + 2 Re(A_j)
//! dm/dt   = -(Gamma_1 + Gamma_2) m + chi_2 n1 + chi_1 n2 + (C1 + C2)
//!
//! with Gamma_j = kappa_j + i delta12 - (A_j - B_j) and chi_j = C_j - D_j.

use crate::coeffs::ModeCoefficients;
use crate::numerics::{self, principal_sqrt, ComplexMatrix};
use crate::{Error, Result};
use num_complex::Complex64;

/// Clamp window for slightly negative photon numbers out of the linear solve.
const NEGATIVE_CLAMP: f64 = 1e-10;

/// Stationary second moments of the cavity modes.
#[derive(Clone, Copy, Debug)]
pub struct MomentState {
    pub n1: f64,
    pub n2: f64,
    pub m12: Complex64,
}

impl MomentState {
    pub fn vacuum() -> Self {
        Self {
            n1: 0.0,
            n2: 0.0,
            m12: Complex64::ZERO,
        }
    }

    /// Gaussian physicality of (n1, n2, m12): the 4x4 quadrature covariance
    /// matrix sigma + i Omega/2 is positive semidefinite iff
    /// nu1 nu2 - |m|^2 >= 1/4 with nu_j = n_j + 1/2 (and nu_j >= 1/2).
    pub fn is_physical(&self, tol: f64) -> bool {
        let nu1 = self.n1 + 0.5;
        let nu2 = self.n2 + 0.5;
        self.n1 >= -tol && self.n2 >= -tol && nu1 * nu2 - self.m12.norm_sqr() >= 0.25 - tol
    }
}

/// Moment drift matrix and drive: d/dt x = M x + b.
#[derive(Clone, Debug)]
pub struct MomentSystem {
    pub matrix: ComplexMatrix,
    pub drive: Vec<Complex64>,
}

pub fn moment_system(coeffs: &ModeCoefficients) -> MomentSystem {
    let g1 = coeffs.big_gamma(1);
    let g2 = coeffs.big_gamma(2);
    let x1 = coeffs.chi(1);
    let x2 = coeffs.chi(2);
    let z = Complex64::ZERO;
    let matrix = ComplexMatrix::from_rows(&[
        vec![-(g1 + g1.conj()), z, x1.conj(), x1],
        vec![z, -(g2 + g2.conj()), x2.conj(), x2],
        vec![x2, x1, -(g1 + g2), z],
        vec![x2.conj(), x1.conj(), z, -(g1 + g2).conj()],
    ]);
    let pair = coeffs.c1 + coeffs.c2;
    let drive = vec![
        Complex64::new(2.0 * coeffs.a1.re, 0.0),
        Complex64::new(2.0 * coeffs.a2.re, 0.0),
        pair,
        pair.conj(),
    ];
    MomentSystem { matrix, drive }
}

/// Stability verdict of the moment dynamics.
#[derive(Clone, Copy, Debug)]
pub struct Stability {
    pub stable: bool,
    /// Re[Gamma1 + Gamma2 - sqrt((Gamma1 - Gamma2*)^2 + 4 chi1 chi2*)];
    /// positive margin means every moment eigenvalue decays.
    pub margin: f64,
}

pub fn stability(coeffs: &ModeCoefficients) -> Stability {
    let g1 = coeffs.big_gamma(1);
    let g2 = coeffs.big_gamma(2);
    let disc = (g1 - g2.conj()) * (g1 - g2.conj()) + 4.0 * coeffs.chi(1) * coeffs.chi(2).conj();
    let margin = (g1 + g2 - principal_sqrt(disc)).re;
    Stability {
        stable: margin > 0.0,
        margin,
    }
}

/// Steady-state moments x = -M^{-1} b; requires a positive stability margin.
pub fn steady_moments(coeffs: &ModeCoefficients) -> Result<MomentState> {
    if !coeffs.is_finite() {
        return Err(Error::NonFinite("mode coefficients".into()));
    }
    let st = stability(coeffs);
    if !st.stable {
        return Err(Error::Unstable { margin: st.margin });
    }
    let sys = moment_system(coeffs);
    let neg_b: Vec<Complex64> = sys.drive.iter().map(|z| -z).collect();
    let x = numerics::lu_solve(&sys.matrix, &neg_b)?;

    let scale = x.iter().map(|z| z.norm()).fold(1.0, f64::max);
    if (x[3] - x[2].conj()).norm() > 1e-10 * scale {
        return Err(Error::Physicality(
            "conjugate pair of <a1 a2> tracks separated".into(),
        ));
    }
    let mut n = [x[0], x[1]];
    for v in &mut n {
        if v.im.abs() > 1e-10 * scale {
            return Err(Error::Physicality(format!("complex photon number {v}")));
        }
        if v.re < -NEGATIVE_CLAMP * scale.max(1.0) {
            return Err(Error::Physicality(format!(
                "negative photon number {}",
                v.re
            )));
        }
        v.re = v.re.max(0.0);
    }
    Ok(MomentState {
        n1: n[0].re,
        n2: n[1].re,
        m12: x[2],
    })
}
