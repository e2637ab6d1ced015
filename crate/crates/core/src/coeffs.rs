//! Coefficients A_j, B_j, C_j, D_j of the reduced two-mode master equation,
//! for both coupling configurations, together with their large-detuning
//! simplifications and the combined-coupling interference formula.
//!
//! Configuration A couples both modes to the driven transition (g3 = g4 = 0);
//! configuration B couples mode 1 to the driven and mode 2 to the undriven
//! transition (g2 = g3 = 0). The mode-2 coefficients of configuration A
//! follow from the exchange rule delta1 <-> -delta2, g1 <-> g2; they are
//! never re-derived independently.
//!
//! Real parts of A_j/B_j are absorption and gain rates, imaginary parts are
//! radiative shifts; C_j, D_j generate the cross-mode correlations.

use crate::atom::{dressed_basis, AtomSteadyState, DressedBasis, SystemParams};
use crate::{atom, Error, Result};
use num_complex::Complex64;

/// Relative tolerance for pole detection in the simplified coefficient forms.
const POLE_TOL: f64 = 1e-9;

/// Complex coefficient set of the reduced master equation, with the cavity
/// rates needed to form the moment-equation drift terms.
#[derive(Clone, Copy, Debug)]
pub struct ModeCoefficients {
    pub a1: Complex64,
    pub a2: Complex64,
    pub b1: Complex64,
    pub b2: Complex64,
    pub c1: Complex64,
    pub c2: Complex64,
    pub d1: Complex64,
    pub d2: Complex64,
    pub kappa1: f64,
    pub kappa2: f64,
    pub delta12: f64,
}

impl ModeCoefficients {
    /// All-zero coefficients (bare cavity).
    pub fn bare(kappa1: f64, kappa2: f64, delta12: f64) -> Self {
        Self {
            a1: Complex64::ZERO,
            a2: Complex64::ZERO,
            b1: Complex64::ZERO,
            b2: Complex64::ZERO,
            c1: Complex64::ZERO,
            c2: Complex64::ZERO,
            d1: Complex64::ZERO,
            d2: Complex64::ZERO,
            kappa1,
            kappa2,
            delta12,
        }
    }

    /// Ideal parametric-amplifier coefficients: the only process is a pair
    /// coupling of strength dbar, split as C_j = -i dbar/2, D_j = +i dbar/2
    /// so that chi_j = -i dbar and the pair drive C1 + C2 = -i dbar.
    pub fn ideal_parametric(dbar: f64, kappa1: f64, kappa2: f64, delta12: f64) -> Self {
        let half = Complex64::new(0.0, 0.5 * dbar);
        Self {
            c1: -half,
            c2: -half,
            d1: half,
            d2: half,
            ..Self::bare(kappa1, kappa2, delta12)
        }
    }

    /// Gamma_j = kappa_j + i delta12 - (A_j - B_j).
    pub fn big_gamma(&self, mode: usize) -> Complex64 {
        match mode {
            1 => Complex64::new(self.kappa1, self.delta12) - (self.a1 - self.b1),
            2 => Complex64::new(self.kappa2, self.delta12) - (self.a2 - self.b2),
            _ => panic!("mode index must be 1 or 2"),
        }
    }

    /// chi_j = C_j - D_j.
    pub fn chi(&self, mode: usize) -> Complex64 {
        match mode {
            1 => self.c1 - self.d1,
            2 => self.c2 - self.d2,
            _ => panic!("mode index must be 1 or 2"),
        }
    }

    /// Mean radiative shift, (Im A1 + Im B1 + Im A2 + Im B2)/4; approximates
    /// the common shift Abar of the simplified model.
    pub fn abar_mean(&self) -> f64 {
        0.25 * (self.a1.im + self.b1.im + self.a2.im + self.b2.im)
    }

    /// Effective pair-coupling strength Im(chi1 + chi2)/2; approximates the
    /// simplified Dbar.
    pub fn dbar_eff(&self) -> f64 {
        0.5 * (self.chi(1).im + self.chi(2).im)
    }

    pub fn is_finite(&self) -> bool {
        [
            self.a1, self.a2, self.b1, self.b2, self.c1, self.c2, self.d1, self.d2,
        ]
        .iter()
        .all(|z| z.re.is_finite() && z.im.is_finite())
    }

    /// Multiply every coefficient by a real factor (coupling rescaling).
    pub fn scaled(&self, s: f64) -> Self {
        Self {
            a1: self.a1 * s,
            a2: self.a2 * s,
            b1: self.b1 * s,
            b2: self.b2 * s,
            c1: self.c1 * s,
            c2: self.c2 * s,
            d1: self.d1 * s,
            d2: self.d2 * s,
            ..*self
        }
    }
}

/// The pair of response denominators f1, f2 and their product f12, evaluated
/// at a signed detuning argument:
///
/// f1(d) = gamma1 + gamma2 cos^2(phi) + i (Delta_0 + (Delta_L + Omega_0)/2 + d)
/// f2(d) = gamma2 (1 + sin^2(2 phi)/2) + i (Omega_0 + d)
#[derive(Clone, Copy, Debug)]
pub struct FValues {
    pub f1: Complex64,
    pub f2: Complex64,
    pub f12: Complex64,
}

/// Evaluate f1, f2, f12 at the signed argument `delta` (pass -delta for the
/// mirrored branch).
pub fn f_functions(params: &SystemParams, delta: f64) -> Result<FValues> {
    let basis = dressed_basis(params)?;
    Ok(f_values(params, &basis, delta))
}

fn f_values(params: &SystemParams, basis: &DressedBasis, delta: f64) -> FValues {
    let s2phi = basis.sin_2phi();
    let f1 = Complex64::new(
        params.gamma1 + params.gamma2 * basis.cos2_phi(),
        params.delta0 + 0.5 * (params.delta_l + basis.omega0) + delta,
    );
    let f2 = Complex64::new(
        params.gamma2 * (1.0 + 0.5 * s2phi * s2phi),
        basis.omega0 + delta,
    );
    FValues {
        f1,
        f2,
        f12: f1 * f2,
    }
}

/// F1, F2 combinations of the inverse regression-matrix elements (the
/// 1-indexed M_mn of the regression matrix; zero-indexed here).
fn capital_f12(
    params: &SystemParams,
    ss: &AtomSteadyState,
    delta: f64,
) -> Result<(Complex64, Complex64)> {
    let m = atom::inverse_elements(params, delta)?;
    let r22 = Complex64::new(ss.rho22, 0.0);
    let r33 = Complex64::new(ss.rho33, 0.0);
    let common = (m.get(2, 1) - m.get(1, 1)) * r22 - (m.get(2, 2) - m.get(1, 2)) * r33;
    let f1 = common + (m.get(2, 3) - m.get(1, 3)) * ss.rho12;
    let f2 = common + (m.get(2, 4) - m.get(1, 4)) * ss.rho21();
    Ok((f1, f2))
}

/// F3, F4 combinations for configuration B.
fn capital_f34(
    params: &SystemParams,
    ss: &AtomSteadyState,
    delta: f64,
) -> Result<(Complex64, Complex64)> {
    let m = atom::inverse_elements(params, delta)?;
    let r11 = Complex64::new(ss.rho11, 0.0);
    let r22 = Complex64::new(ss.rho22, 0.0);
    let f3 = (m.get(2, 1) - m.get(1, 1)) * ss.rho12 + (m.get(2, 4) - m.get(1, 4)) * r11;
    let f4 = (m.get(2, 0) - m.get(1, 0)) * ss.rho12 + (m.get(2, 4) - m.get(1, 4)) * r22;
    Ok((f3, f4))
}

/// One mode's coefficient quadruple (A, B, C, D) for configuration A with
/// explicit detunings and couplings, so the exchange rule is a call-site
/// substitution.
fn config_a_quadruple(
    params: &SystemParams,
    basis: &DressedBasis,
    ss: &AtomSteadyState,
    d_own: f64,
    d_other: f64,
    g_own: f64,
    g_other: f64,
) -> Result<(Complex64, Complex64, Complex64, Complex64)> {
    let e = params.eta0(basis);
    let e2 = Complex64::new(e * e, 0.0);
    let s2phi = basis.sin_2phi();
    let (s4, c4) = (basis.sin2_phi().powi(2), basis.cos2_phi().powi(2));
    let r22 = Complex64::new(ss.rho22, 0.0);
    let r33 = Complex64::new(ss.rho33, 0.0);
    let (cf1_own, cf2_own) = capital_f12(params, ss, d_own)?;
    let (cf1_other, cf2_other) = capital_f12(params, ss, d_other)?;
    let f_pos_own = f_values(params, basis, d_own);
    let f_neg_own = f_values(params, basis, -d_own);
    let f_pos_other = f_values(params, basis, d_other);
    let f_neg_other = f_values(params, basis, -d_other);

    let a = g_own
        * g_own
        * (-0.25 * cf1_own * s2phi
            + f_neg_own.f1.conj() * r33 / (f_neg_own.f12.conj() - e2) * c4
            + (f_pos_own.f1 * r22 - e * ss.rho12) / (f_pos_own.f12 - e2) * s4);
    let b = g_own
        * g_own
        * (-0.25 * cf2_own * s2phi
            + f_pos_own.f1 * r33 / (f_pos_own.f12 - e2) * s4
            + (f_neg_own.f1.conj() * r22 - e * ss.rho21()) / (f_neg_own.f12.conj() - e2) * c4);
    let c = 0.25
        * g_own
        * g_other
        * s2phi
        * (cf2_other
            + f_pos_other.f1 * r33 / (f_pos_other.f12 - e2)
            + (f_neg_other.f1.conj() * r22 - e * ss.rho21()) / (f_neg_other.f12.conj() - e2));
    let d = 0.25
        * g_own
        * g_other
        * s2phi
        * (cf1_other
            + f_neg_other.f1.conj() * r33 / (f_neg_other.f12.conj() - e2)
            + (f_pos_other.f1 * r22 - e * ss.rho12) / (f_pos_other.f12 - e2));
    Ok((a, b, c, d))
}

/// Full coefficients for configuration A (both modes on the driven
/// transition). Mode 2 follows from the exchange rule.
pub fn coeffs_config_a(params: &SystemParams, ss: &AtomSteadyState) -> Result<ModeCoefficients> {
    if params.g3 != 0.0 || params.g4 != 0.0 {
        return Err(Error::Configuration(
            "configuration A requires g3 = g4 = 0".into(),
        ));
    }
    let basis = dressed_basis(params)?;
    let (a1, b1, c1, d1) = config_a_quadruple(
        params,
        &basis,
        ss,
        params.delta1,
        params.delta2,
        params.g1,
        params.g2,
    )?;
    // exchange rule: delta1 <-> -delta2 (hence delta2 -> -delta1), g1 <-> g2
    let (a2, b2, c2, d2) = config_a_quadruple(
        params,
        &basis,
        ss,
        -params.delta2,
        -params.delta1,
        params.g2,
        params.g1,
    )?;
    Ok(ModeCoefficients {
        a1,
        a2,
        b1,
        b2,
        c1,
        c2,
        d1,
        d2,
        kappa1: params.kappa1,
        kappa2: params.kappa2,
        delta12: params.delta12(),
    })
}

/// Full coefficients for configuration B (mode 1 on the driven, mode 2 on the
/// undriven transition), including the h1..h4 combinations of the inverse
/// matrix at mirrored detunings.
pub fn coeffs_config_b(params: &SystemParams, ss: &AtomSteadyState) -> Result<ModeCoefficients> {
    if params.g2 != 0.0 || params.g3 != 0.0 {
        return Err(Error::Configuration(
            "configuration B requires g2 = g3 = 0".into(),
        ));
    }
    let basis = dressed_basis(params)?;
    let e = params.eta0(&basis);
    let e2 = Complex64::new(e * e, 0.0);
    let s2phi = basis.sin_2phi();
    let (s2, c2) = (basis.sin2_phi(), basis.cos2_phi());
    let (s4, c4) = (s2 * s2, c2 * c2);
    let (d1p, d2p) = (params.delta1, params.delta2);
    let (g1, g4) = (params.g1, params.g4);
    let r11 = Complex64::new(ss.rho11, 0.0);
    let r22 = Complex64::new(ss.rho22, 0.0);
    let r33 = Complex64::new(ss.rho33, 0.0);

    let (cf1, cf2) = capital_f12(params, ss, d1p)?;
    let (cf3, cf4) = capital_f34(params, ss, d2p)?;
    let f_pos1 = f_values(params, &basis, d1p);
    let f_neg1 = f_values(params, &basis, -d1p);
    let f_neg2 = f_values(params, &basis, -d2p);

    let a1 = g1
        * g1
        * (-0.25 * cf1 * s2phi
            + r33 * c4 / (f_neg1.f2.conj() - e2)
            + r22 * s4 / (f_pos1.f2.conj() - e2)
            - e * ss.rho12 * s4 / (f_pos1.f12 - e2));
    let b1 = g1
        * g1
        * (-0.25 * cf2 * s2phi
            + r33 * s4 / (f_pos1.f2 - e2)
            + (f_neg1.f1.conj() * r22 - e * ss.rho21()) / (f_neg1.f12.conj() - e2) * c4);
    let coupling = g1 * g4 * basis.sin_phi * c2;
    let c1 = coupling * (cf3 + (f_neg2.f1.conj() * ss.rho12 - e * r11) / (f_neg2.f12.conj() - e2));
    let d1 = coupling * (cf4 - e * r33 / (f_neg2.f12.conj() - e2));

    let m_neg2 = atom::inverse_elements(params, -d2p)?;
    let m_neg1 = atom::inverse_elements(params, -d1p)?;
    let h1 = (m_neg2.get(3, 1) * ss.rho21() + m_neg2.get(3, 3) * r11) * c2;
    let h2 = (m_neg2.get(3, 0) * ss.rho21() + m_neg2.get(3, 3) * r22) * c2;
    let h3 = m_neg1.get(3, 2) * r33 - m_neg1.get(3, 1) * r22 - m_neg1.get(3, 4) * r11;
    let h4 = m_neg1.get(3, 2) * r33 - m_neg1.get(3, 1) * r22 - m_neg1.get(3, 3) * ss.rho12;

    let a2 = g4 * g4 * (h1 + (f_neg2.f2 * r11 - e * ss.rho21()) / (f_neg2.f12 - e2) * s2);
    let b2 = g4 * g4 * (h2 + f_neg2.f2 * r33 * s2 / (f_neg2.f12 - e2));
    let c2m = coupling * (h3 - e * r33 / (f_neg1.f12 - e2));
    let d2m = coupling * (h4 + f_neg1.f2 * ss.rho12 / (f_neg1.f12 - e2));

    Ok(ModeCoefficients {
        a1,
        a2,
        b1,
        b2,
        c1,
        c2: c2m,
        d1,
        d2: d2m,
        kappa1: params.kappa1,
        kappa2: params.kappa2,
        delta12: params.delta12(),
    })
}

/// Large-detuning shift and pair coupling for configuration A at equal
/// couplings:
///
/// Abar = g^2 Omega_0 (1 + cos^2 2phi) (rho22 - rho33) / (4 (Omega_0^2 - delta^2))
/// Dbar = g^2 Omega_0 sin^2(2phi) (rho22 - rho33) / (2 (Omega_0^2 - delta^2))
#[derive(Clone, Copy, Debug)]
pub struct SimplifiedA {
    pub abar: f64,
    pub dbar: f64,
}

pub fn simplified_config_a(params: &SystemParams, ss: &AtomSteadyState) -> Result<SimplifiedA> {
    if params.g1 != params.g2 {
        return Err(Error::Configuration(
            "simplified configuration A assumes g1 = g2".into(),
        ));
    }
    let basis = dressed_basis(params)?;
    let delta = params.mean_delta();
    check_pole(delta, basis.omega0, "Omega_0^2 - delta^2 denominator")?;
    let g2 = params.g1 * params.g1;
    let cos2phi = basis.cos_2phi();
    let s2phi2 = basis.sin_2phi().powi(2);
    let inv = ss.inversion();
    let denom = basis.omega0 * basis.omega0 - delta * delta;
    Ok(SimplifiedA {
        abar: g2 * basis.omega0 * (1.0 + cos2phi * cos2phi) * inv / (4.0 * denom),
        dbar: g2 * basis.omega0 * s2phi2 * inv / (2.0 * denom),
    })
}

/// Large-detuning shift and pair coupling for configuration B:
///
/// Abar = g^2/4 [ (s^4/(Omega_0+delta) + c^4/(Omega_0-delta)) (rho22-rho33)
///              + s^2 (rho11-rho33)/(Omega_0-delta) + c^2 (rho22-rho11)/delta ]
/// Dbar = Omega_0 g^2 sin(phi) cos^2(phi) rho12 / ((Omega_0-delta) delta)
#[derive(Clone, Copy, Debug)]
pub struct SimplifiedB {
    pub abar: f64,
    pub dbar: Complex64,
}

pub fn simplified_config_b(params: &SystemParams, ss: &AtomSteadyState) -> Result<SimplifiedB> {
    if params.g1 != params.g4 {
        return Err(Error::Configuration(
            "simplified configuration B assumes g1 = g4".into(),
        ));
    }
    let basis = dressed_basis(params)?;
    let delta = params.mean_delta();
    check_pole(delta, basis.omega0, "Omega_0 - delta denominator")?;
    if delta.abs() < POLE_TOL * basis.omega0.max(1.0) {
        return Err(Error::Pole {
            delta,
            context: "delta = 0 denominator".into(),
        });
    }
    let g2 = params.g1 * params.g1;
    let (s2, c2) = (basis.sin2_phi(), basis.cos2_phi());
    let (s4, c4) = (s2 * s2, c2 * c2);
    let abar = 0.25
        * g2
        * ((s4 / (basis.omega0 + delta) + c4 / (basis.omega0 - delta)) * ss.inversion()
            + s2 * (ss.rho11 - ss.rho33) / (basis.omega0 - delta)
            + c2 * (ss.rho22 - ss.rho11) / delta);
    let dbar = basis.omega0 * g2 * basis.sin_phi * c2 * ss.rho12 / ((basis.omega0 - delta) * delta);
    Ok(SimplifiedB { abar, dbar })
}

/// Trapped-state pair coupling of configuration A (p = +1 at the level
/// crossing): Dbar = g^2 Omega_0 sin^2(2phi) gamma1
/// / (2 (Omega_0^2 - delta^2) (gamma1 + gamma2 sin^2 phi)).
pub fn trapped_dbar_config_a(params: &SystemParams) -> Result<f64> {
    let basis = dressed_basis(params)?;
    let delta = params.mean_delta();
    check_pole(delta, basis.omega0, "Omega_0^2 - delta^2 denominator")?;
    let g2 = params.g1 * params.g1;
    let s2phi2 = basis.sin_2phi().powi(2);
    let denom = basis.omega0 * basis.omega0 - delta * delta;
    Ok(g2 * basis.omega0 * s2phi2 * params.gamma1
        / (2.0 * denom * (params.gamma1 + params.gamma2 * basis.sin2_phi())))
}

/// Trapped-state pair coupling of configuration B (p = +1 at the level
/// crossing, rho12 = -alpha beta): Dbar = -Omega_0 g^2 sin^2(2phi)
/// sqrt(gamma1 gamma2) / (4 (Omega_0-delta) delta (gamma1 + gamma2 sin^2 phi)).
pub fn trapped_dbar_config_b(params: &SystemParams) -> Result<f64> {
    let basis = dressed_basis(params)?;
    let delta = params.mean_delta();
    check_pole(delta, basis.omega0, "Omega_0 - delta denominator")?;
    if delta.abs() < POLE_TOL * basis.omega0.max(1.0) {
        return Err(Error::Pole {
            delta,
            context: "delta = 0 denominator".into(),
        });
    }
    let g2 = params.g1 * params.g1;
    let s2phi2 = basis.sin_2phi().powi(2);
    Ok(
        -basis.omega0 * g2 * s2phi2 * (params.gamma1 * params.gamma2).sqrt()
            / (4.0
                * (basis.omega0 - delta)
                * delta
                * (params.gamma1 + params.gamma2 * basis.sin2_phi())),
    )
}

/// Combined-coupling interference pair coefficient for all four couplings
/// equal and |p| = 1 at the level crossing:
///
/// Dbar = g^2 Omega_0 sin^2(2phi) sqrt(gamma1)(sqrt(gamma1) -/+ sqrt(gamma2))
///        / (2 (Omega_0^2 - delta^2)(gamma1 + gamma2 sin^2 phi))
///
/// with the upper sign for p = +1 (destructive interference).
pub fn combined_coupling_dbar(params: &SystemParams) -> Result<f64> {
    if params.p.abs() != 1.0 {
        return Err(Error::Domain(format!(
            "combined-coupling formula requires p = +1 or -1, got {}",
            params.p
        )));
    }
    let g = params.g1;
    if params.g2 != g || params.g3 != g || params.g4 != g {
        return Err(Error::Configuration(
            "combined-coupling formula assumes four equal couplings".into(),
        ));
    }
    let residual = atom::level_crossing_residual(params)?;
    if residual.abs() > 1e-6 * params.gamma1.max(1.0) {
        return Err(Error::Domain(format!(
            "combined-coupling formula holds at the level crossing; residual {residual:.3e}"
        )));
    }
    let basis = dressed_basis(params)?;
    let delta = params.mean_delta();
    check_pole(delta, basis.omega0, "Omega_0^2 - delta^2 denominator")?;
    let root1 = params.gamma1.sqrt();
    let root2 = params.gamma2.sqrt();
    let sign = if params.p > 0.0 { -1.0 } else { 1.0 };
    let s2phi2 = basis.sin_2phi().powi(2);
    let denom = basis.omega0 * basis.omega0 - delta * delta;
    Ok(
        g * g * basis.omega0 * s2phi2 * root1 * (root1 + sign * root2)
            / (2.0 * denom * (params.gamma1 + params.gamma2 * basis.sin2_phi())),
    )
}

/// Stark-shift cancelling detuning split: delta12 = -2 Abar.
pub fn stark_cancel_delta12(abar: f64) -> f64 {
    -2.0 * abar
}

fn check_pole(delta: f64, omega0: f64, context: &str) -> Result<()> {
    if (delta.abs() - omega0).abs() < POLE_TOL * omega0.max(1.0) {
        return Err(Error::Pole {
            delta,
            context: context.into(),
        });
    }
    Ok(())
}
