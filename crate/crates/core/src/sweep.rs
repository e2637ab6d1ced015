//! Parameter sweeps over the secular pipeline, the oracle audit driver, and
//! CSV emission. Cells are evaluated in parallel but always assembled in
//! grid order, and all numeric output is written in full double precision so
//! repeated runs are byte-identical.

use crate::atom::{self, Eta0Convention, SystemParams};
use crate::coeffs::{self, ModeCoefficients};
use crate::config::{CouplingConfig, LabeledSweep, SweepAxis, SweepSpec};
use crate::duan::{duan_report, EntanglementReport};
use crate::moments::{self, MomentState, Stability};
use crate::oracle::{self, FockConfig};
use crate::{Error, Result};
use rayon::prelude::*;
use std::fmt::Write as _;

/// Relative window for the pole nudge on swept values.
const POLE_WINDOW: f64 = 1e-9;
/// Nudge applied to a swept value that lands on a pole.
const POLE_NUDGE: f64 = 1e-6;

/// One grid cell of a sweep.
#[derive(Clone, Debug)]
pub struct SweepRow {
    pub value: f64,
    pub abar: Option<f64>,
    pub dbar: Option<f64>,
    pub margin: Option<f64>,
    pub n1: Option<f64>,
    pub n2: Option<f64>,
    pub c: Option<f64>,
    pub upsilon: Option<f64>,
    pub flags: String,
}

/// Full secular evaluation at one parameter point.
pub struct PipelineResult {
    pub coeffs: ModeCoefficients,
    pub stability: Stability,
    pub moments: MomentState,
    pub report: EntanglementReport,
}

/// atom -> coefficients -> moments -> Duan measure for one coupling pattern.
pub fn secular_pipeline(params: &SystemParams, config: CouplingConfig) -> Result<PipelineResult> {
    let co = match config {
        CouplingConfig::A | CouplingConfig::B => {
            let ss = atom::atom_steady_state(params)?;
            match config {
                CouplingConfig::A => coeffs::coeffs_config_a(params, &ss)?,
                _ => coeffs::coeffs_config_b(params, &ss)?,
            }
        }
        CouplingConfig::Combined => {
            let dbar = coeffs::combined_coupling_dbar(params)?;
            ModeCoefficients::ideal_parametric(dbar, params.kappa1, params.kappa2, params.delta12())
        }
    };
    let stability = moments::stability(&co);
    let mom = moments::steady_moments(&co)?;
    let report = duan_report(&mom, stability.stable)?;
    Ok(PipelineResult {
        coeffs: co,
        stability,
        moments: mom,
        report,
    })
}

fn apply_axis(base: &SystemParams, axis: SweepAxis, value: f64) -> SystemParams {
    let mut p = *base;
    match axis {
        SweepAxis::DeltaL => p.delta_l = value,
        SweepAxis::Delta0 => p.delta0 = value,
        SweepAxis::P => p.p = value,
        SweepAxis::Gamma2 => p.gamma2 = value,
        SweepAxis::Omega => p.omega = value,
        SweepAxis::Delta12 => p = p.with_delta12(value),
        SweepAxis::G => {
            // rescale every coupling that participates in the base pattern
            if p.g1 != 0.0 {
                p.g1 = value;
            }
            if p.g2 != 0.0 {
                p.g2 = value;
            }
            if p.g3 != 0.0 {
                p.g3 = value;
            }
            if p.g4 != 0.0 {
                p.g4 = value;
            }
        }
    }
    p
}

/// True when either cavity detuning sits on a pole of the adiabatic
/// elimination: |delta_j| = Omega_0 or delta_j = 0.
fn on_pole(params: &SystemParams) -> bool {
    let omega0 = (params.delta_l * params.delta_l + 4.0 * params.omega * params.omega).sqrt();
    let window = POLE_WINDOW * omega0.max(1.0);
    [params.delta1, params.delta2]
        .iter()
        .any(|d| (d.abs() - omega0).abs() < window || d.abs() < window)
}

fn error_flag(e: &Error) -> String {
    match e {
        Error::Unstable { .. } => "unstable".into(),
        Error::Pole { .. } => "pole".into(),
        Error::Singular(_) | Error::NonUniqueSteadyState(_) => "singular".into(),
        Error::VacuumDegenerate(_) => "vacuum-degenerate".into(),
        Error::Physicality(_) => "physicality".into(),
        Error::Configuration(_) | Error::Config(_) => "config".into(),
        Error::Domain(_) => "domain".into(),
        other => format!("error:{other}"),
    }
}

fn evaluate_cell(spec: &SweepSpec, raw_value: f64) -> SweepRow {
    let mut value = raw_value;
    let mut flags: Vec<String> = Vec::new();
    let mut params = apply_axis(&spec.base, spec.axis, value);
    if on_pole(&params) {
        value += POLE_NUDGE;
        params = apply_axis(&spec.base, spec.axis, value);
        flags.push("nudged".into());
    }

    let mut row = SweepRow {
        value,
        abar: None,
        dbar: None,
        margin: None,
        n1: None,
        n2: None,
        c: None,
        upsilon: None,
        flags: String::new(),
    };

    match secular_pipeline(&params, spec.config) {
        Ok(res) => {
            row.abar = Some(res.coeffs.abar_mean());
            row.dbar = Some(res.coeffs.dbar_eff());
            row.margin = Some(res.stability.margin);
            row.n1 = Some(res.moments.n1);
            row.n2 = Some(res.moments.n2);
            row.c = Some(res.report.c);
            row.upsilon = Some(res.report.upsilon);
        }
        Err(e) => {
            // keep the stability margin visible for unstable cells
            if let Error::Unstable { margin } = e {
                row.margin = Some(margin);
                if let Ok(ss) = atom::atom_steady_state(&params) {
                    let co = match spec.config {
                        CouplingConfig::A => coeffs::coeffs_config_a(&params, &ss).ok(),
                        CouplingConfig::B => coeffs::coeffs_config_b(&params, &ss).ok(),
                        CouplingConfig::Combined => None,
                    };
                    if let Some(co) = co {
                        row.abar = Some(co.abar_mean());
                        row.dbar = Some(co.dbar_eff());
                    }
                }
            }
            flags.push(error_flag(&e));
        }
    }
    row.flags = flags.join(";");
    row
}

/// Evaluate a sweep. Per-cell failures are recorded in the flags column and
/// never abort the run; row order follows the grid.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    spec.validate()?;
    let grid = spec.grid();
    Ok(grid.par_iter().map(|&v| evaluate_cell(spec, v)).collect())
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map(|x| format!("{x:.17e}")).unwrap_or_default()
}

fn echo_params(out: &mut String, params: &SystemParams) {
    let _ = writeln!(out, "# gamma1 = {:.17e}", params.gamma1);
    let _ = writeln!(out, "# gamma2 = {:.17e}", params.gamma2);
    let _ = writeln!(out, "# p = {:.17e}", params.p);
    let _ = writeln!(out, "# omega = {:.17e}", params.omega);
    let _ = writeln!(out, "# delta_l = {:.17e}", params.delta_l);
    let _ = writeln!(out, "# delta0 = {:.17e}", params.delta0);
    let _ = writeln!(out, "# delta1 = {:.17e}", params.delta1);
    let _ = writeln!(out, "# delta2 = {:.17e}", params.delta2);
    let _ = writeln!(out, "# delta12 = {:.17e}", params.delta12());
    let _ = writeln!(out, "# kappa1 = {:.17e}", params.kappa1);
    let _ = writeln!(out, "# kappa2 = {:.17e}", params.kappa2);
    let _ = writeln!(out, "# g1 = {:.17e}", params.g1);
    let _ = writeln!(out, "# g2 = {:.17e}", params.g2);
    let _ = writeln!(out, "# g3 = {:.17e}", params.g3);
    let _ = writeln!(out, "# g4 = {:.17e}", params.g4);
    let _ = writeln!(
        out,
        "# eta0_convention = {}",
        params.eta0_convention.label()
    );
}

/// Render labeled sweeps as CSV. Header comments echo every parameter; one
/// block per curve; all floats in full precision.
pub fn sweep_csv(runs: &[(LabeledSweep, Vec<SweepRow>)]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# sgc-cavity sweep csv v1");
    let _ = writeln!(
        out,
        "# columns: axis value; Abar = mean Im(A_j,B_j); Dbar = Im(chi1+chi2)/2; stability margin; n1; n2; c = |<a1 a2>|; Upsilon; flags"
    );
    let _ = writeln!(out, "axis_value,abar,dbar,margin,n1,n2,c,upsilon,flags");
    for (sweep, rows) in runs {
        let _ = writeln!(out, "# curve = {}", sweep.label);
        let _ = writeln!(out, "# axis = {}", sweep.spec.axis.label());
        let _ = writeln!(out, "# config = {}", sweep.spec.config.label());
        echo_params(&mut out, &sweep.spec.base);
        for r in rows {
            let _ = writeln!(
                out,
                "{:.17e},{},{},{},{},{},{},{},{}",
                r.value,
                fmt_opt(r.abar),
                fmt_opt(r.dbar),
                fmt_opt(r.margin),
                fmt_opt(r.n1),
                fmt_opt(r.n2),
                fmt_opt(r.c),
                fmt_opt(r.upsilon),
                r.flags
            );
        }
    }
    out
}

/// One audit row: a secular/oracle comparison under one eta0 convention.
#[derive(Clone, Debug)]
pub struct AuditRow {
    pub convention: Eta0Convention,
    pub secular: Option<(MomentState, f64)>,
    pub oracle: (MomentState, f64),
    pub rel_err: Option<[f64; 3]>,
    pub converged: bool,
    pub residual: f64,
    pub t_end: f64,
    pub trace_drift_rate: f64,
    pub hermiticity_defect: f64,
    pub min_eigenvalue: f64,
    pub top_fock: (f64, f64),
    pub flags: String,
}

/// Run the oracle once and compare the secular pipeline against it under all
/// three eta0 conventions. With `check_truncation`, a second oracle run at
/// truncation N+1 flags moment shifts above 2%.
pub fn run_audit(
    params: &SystemParams,
    fock: &FockConfig,
    check_truncation: bool,
) -> Result<Vec<AuditRow>> {
    params.validate()?;
    let coupling = crate::config::infer_coupling(params);
    if coupling == CouplingConfig::Combined {
        return Err(Error::Configuration(
            "audit requires coupling pattern A (g3 = g4 = 0) or B (g2 = g3 = 0)".into(),
        ));
    }

    let run = oracle::integrate_to_steady_state(params, fock)?;
    let orc_moments = oracle::oracle_moments(params, &run.rho, fock)?;
    let orc_upsilon = duan_report(&orc_moments, true)?.upsilon;
    let min_eigenvalue = run.rho.min_eigenvalue_bound();

    let mut base_flags: Vec<String> = Vec::new();
    if !run.converged {
        base_flags.push("non-converged".into());
    }
    if run.top_fock.0.max(run.top_fock.1) > 1e-3 {
        base_flags.push("truncation".into());
    }
    if check_truncation {
        let bigger = FockConfig {
            n1: fock.n1 + 1,
            n2: fock.n2 + 1,
            ..*fock
        };
        let run2 = oracle::integrate_to_steady_state(params, &bigger)?;
        let m2 = oracle::oracle_moments(params, &run2.rho, &bigger)?;
        let shift = [
            rel_shift(orc_moments.n1, m2.n1),
            rel_shift(orc_moments.n2, m2.n2),
            rel_shift(orc_moments.m12.norm(), m2.m12.norm()),
        ]
        .into_iter()
        .fold(0.0, f64::max);
        if shift > 0.02 {
            base_flags.push("truncation".into());
        }
    }

    let mut rows = Vec::new();
    for convention in [
        Eta0Convention::SinPhi,
        Eta0Convention::Bare,
        Eta0Convention::CosPhi,
    ] {
        let p = SystemParams {
            eta0_convention: convention,
            ..*params
        };
        let mut flags = base_flags.clone();
        let secular = match secular_pipeline(&p, coupling) {
            Ok(res) => Some((res.moments, res.report.upsilon)),
            Err(e) => {
                flags.push(error_flag(&e));
                None
            }
        };
        let rel_err = secular.map(|(m, _)| {
            [
                rel_shift(m.n1, orc_moments.n1),
                rel_shift(m.n2, orc_moments.n2),
                rel_shift(m.m12.norm(), orc_moments.m12.norm()),
            ]
        });
        rows.push(AuditRow {
            convention,
            secular,
            oracle: (orc_moments, orc_upsilon),
            rel_err,
            converged: run.converged,
            residual: run.residual,
            t_end: run.t_end,
            trace_drift_rate: run.trace_drift_rate,
            hermiticity_defect: run.hermiticity_defect,
            min_eigenvalue,
            top_fock: run.top_fock,
            flags: flags.join(";"),
        });
    }
    Ok(rows)
}

fn rel_shift(a: f64, b: f64) -> f64 {
    if b.abs() < 1e-30 {
        if a.abs() < 1e-30 {
            0.0
        } else {
            f64::INFINITY
        }
    } else {
        (a - b).abs() / b.abs()
    }
}

/// Render audit rows as CSV with the same conventions as the sweep output.
pub fn audit_csv(params: &SystemParams, fock: &FockConfig, rows: &[AuditRow]) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# sgc-cavity audit csv v1");
    echo_params(&mut out, params);
    let _ = writeln!(out, "# fock: n1 = {}, n2 = {}", fock.n1, fock.n2);
    let _ = writeln!(out, "# dt = {:.17e}", fock.dt);
    let _ = writeln!(out, "# t_max = {:.17e}", fock.t_max);
    let _ = writeln!(out, "# tol = {:.17e}", fock.tol);
    let _ = writeln!(
        out,
        "eta0_convention,n1_secular,n2_secular,c_secular,upsilon_secular,\
n1_oracle,n2_oracle,c_oracle,upsilon_oracle,rel_err_n1,rel_err_n2,rel_err_c,\
converged,residual,t_end,trace_drift_rate,hermiticity_defect,min_eigenvalue,\
top_fock_1,top_fock_2,flags"
    );
    for r in rows {
        let (sec_n1, sec_n2, sec_c, sec_u) = match r.secular {
            Some((m, u)) => (
                fmt_opt(Some(m.n1)),
                fmt_opt(Some(m.n2)),
                fmt_opt(Some(m.m12.norm())),
                fmt_opt(Some(u)),
            ),
            None => (String::new(), String::new(), String::new(), String::new()),
        };
        let errs = match r.rel_err {
            Some(e) => (
                fmt_opt(Some(e[0])),
                fmt_opt(Some(e[1])),
                fmt_opt(Some(e[2])),
            ),
            None => (String::new(), String::new(), String::new()),
        };
        let _ = writeln!(
            out,
            "{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{},{}",
            r.convention.label(),
            sec_n1,
            sec_n2,
            sec_c,
            sec_u,
            fmt_opt(Some(r.oracle.0.n1)),
            fmt_opt(Some(r.oracle.0.n2)),
            fmt_opt(Some(r.oracle.0.m12.norm())),
            fmt_opt(Some(r.oracle.1)),
            errs.0,
            errs.1,
            errs.2,
            r.converged,
            fmt_opt(Some(r.residual)),
            fmt_opt(Some(r.t_end)),
            fmt_opt(Some(r.trace_drift_rate)),
            fmt_opt(Some(r.hermiticity_defect)),
            fmt_opt(Some(r.min_eigenvalue)),
            fmt_opt(Some(r.top_fock.0)),
            fmt_opt(Some(r.top_fock.1)),
            r.flags
        );
    }
    out
}
