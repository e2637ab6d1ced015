//! Duan inseparability measure for the two-mode Gaussian state.
//!
//! With n = <a1^dag a1> + 1/2, m = <a2^dag a2> + 1/2, c = |<a1 a2>| and the
//! squeezing weight a^2 = sqrt((2m-1)/(2n-1)), the variance sum of the
//! EPR-like quadrature pair is Sigma = 2 n a^2 + 2 m / a^2 - 4 c, and the
//! modes are entangled iff Upsilon = Sigma - a^2 - 1/a^2 < 0.

use crate::moments::MomentState;
use crate::{Error, Result};

/// Symmetric-limit window for |n1 - n2| below which a^2 = 1 is taken
/// directly (covers the vacuum 0/0 case).
const SYMMETRIC_TOL: f64 = 1e-12;
/// Occupation below which a mode counts as empty for the degenerate-weight
/// handling.
const VACUUM_TOL: f64 = 1e-14;

/// Entanglement verdict and the quantities entering it.
#[derive(Clone, Copy, Debug)]
pub struct EntanglementReport {
    /// n = <a1^dag a1> + 1/2.
    pub n: f64,
    /// m = <a2^dag a2> + 1/2.
    pub m: f64,
    /// c = |<a1 a2>|.
    pub c: f64,
    /// Squeezing weight a^2.
    pub a_sq: f64,
    /// Variance sum of the EPR pair.
    pub sigma: f64,
    /// Entanglement measure; negative means entangled.
    pub upsilon: f64,
    pub entangled: bool,
    pub stable: bool,
}

/// Evaluate the Duan measure for stationary moments. `stable` is the
/// stability verdict of the moment dynamics; an unstable operating point has
/// no stationary report.
pub fn duan_report(moments: &MomentState, stable: bool) -> Result<EntanglementReport> {
    if !stable {
        return Err(Error::Domain(
            "no stationary entanglement report at an unstable operating point".into(),
        ));
    }
    if moments.n1 < 0.0 || moments.n2 < 0.0 {
        return Err(Error::Physicality(format!(
            "negative occupations ({}, {})",
            moments.n1, moments.n2
        )));
    }
    let n = moments.n1 + 0.5;
    let m = moments.n2 + 0.5;
    let c = moments.m12.norm();

    let spread = (moments.n1 - moments.n2).abs();
    let a_sq = if spread <= SYMMETRIC_TOL * moments.n1.abs().max(moments.n2.abs()).max(1.0) {
        1.0
    } else if moments.n1.min(moments.n2) <= VACUUM_TOL {
        // one empty mode: any cross-correlation would be unphysical, and the
        // separable product limit pins a^2 = 1
        if c > 1e-9 {
            return Err(Error::VacuumDegenerate(format!(
                "mode occupations ({}, {}) cannot support |<a1 a2>| = {c}",
                moments.n1, moments.n2
            )));
        }
        1.0
    } else {
        ((2.0 * m - 1.0) / (2.0 * n - 1.0)).sqrt()
    };

    let sigma = 2.0 * n * a_sq + 2.0 * m / a_sq - 4.0 * c;
    let upsilon = sigma - a_sq - 1.0 / a_sq;
    Ok(EntanglementReport {
        n,
        m,
        c,
        a_sq,
        sigma,
        upsilon,
        entangled: upsilon < 0.0,
        stable,
    })
}
