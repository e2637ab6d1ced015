//! Configuration ingestion: flat TOML files with `[system]`, optional
//! `[sweep]` and optional `[fock]` sections, plus the figure presets.
//!
//! Every physical parameter must be stated explicitly; the only default is
//! the eta0 convention. All frequencies are in units of gamma1.

use crate::atom::{Eta0Convention, SystemParams};
use crate::oracle::FockConfig;
use crate::{Error, Result};
use serde::Deserialize;
use std::path::Path;

/// Coupling pattern of the modes to the atomic transitions.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum CouplingConfig {
    /// Both modes on the driven transition (g3 = g4 = 0).
    A,
    /// Mode 1 driven, mode 2 undriven (g2 = g3 = 0).
    B,
    /// All four couplings equal; idealized interference model.
    Combined,
}

impl CouplingConfig {
    pub fn label(self) -> &'static str {
        match self {
            CouplingConfig::A => "A",
            CouplingConfig::B => "B",
            CouplingConfig::Combined => "combined",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "A" | "a" => Ok(Self::A),
            "B" | "b" => Ok(Self::B),
            "combined" => Ok(Self::Combined),
            other => Err(Error::Config(format!(
                "unknown coupling configuration `{other}`"
            ))),
        }
    }
}

/// Swept parameter.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum SweepAxis {
    DeltaL,
    Delta0,
    P,
    Gamma2,
    Omega,
    Delta12,
    G,
}

impl SweepAxis {
    pub fn label(self) -> &'static str {
        match self {
            SweepAxis::DeltaL => "delta_l",
            SweepAxis::Delta0 => "delta0",
            SweepAxis::P => "p",
            SweepAxis::Gamma2 => "gamma2",
            SweepAxis::Omega => "omega",
            SweepAxis::Delta12 => "delta12",
            SweepAxis::G => "g",
        }
    }

    fn parse(s: &str) -> Result<Self> {
        match s {
            "delta_l" => Ok(Self::DeltaL),
            "delta0" => Ok(Self::Delta0),
            "p" => Ok(Self::P),
            "gamma2" => Ok(Self::Gamma2),
            "omega" => Ok(Self::Omega),
            "delta12" => Ok(Self::Delta12),
            "g" => Ok(Self::G),
            other => Err(Error::Config(format!(
                "unknown sweep axis `{other}` (expected one of delta_l, delta0, p, gamma2, omega, delta12, g)"
            ))),
        }
    }
}

/// A one-axis parameter sweep over a base parameter set.
#[derive(Clone, Debug)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    pub start: f64,
    pub stop: f64,
    pub steps: usize,
    pub base: SystemParams,
    pub config: CouplingConfig,
}

impl SweepSpec {
    pub fn validate(&self) -> Result<()> {
        self.base.validate()?;
        if self.steps < 2 {
            return Err(Error::Config("a sweep needs at least 2 steps".into()));
        }
        if self.start == self.stop {
            return Err(Error::Config("sweep start and stop coincide".into()));
        }
        Ok(())
    }

    pub fn grid(&self) -> Vec<f64> {
        let h = (self.stop - self.start) / (self.steps - 1) as f64;
        (0..self.steps).map(|k| self.start + h * k as f64).collect()
    }
}

/// A sweep with a curve label, as emitted by the presets (one block per
/// figure curve).
#[derive(Clone, Debug)]
pub struct LabeledSweep {
    pub label: String,
    pub spec: SweepSpec,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    gamma1: f64,
    gamma2: f64,
    p: f64,
    omega: f64,
    delta_l: f64,
    delta0: f64,
    delta1: f64,
    delta2: f64,
    kappa1: f64,
    kappa2: f64,
    g1: f64,
    g2: f64,
    g3: f64,
    g4: f64,
    eta0_convention: Option<String>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepSection {
    axis: String,
    start: f64,
    stop: f64,
    steps: usize,
    config: String,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct FockSection {
    n1: usize,
    n2: usize,
    dt: f64,
    t_max: f64,
    tol: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    system: SystemSection,
    sweep: Option<SweepSection>,
    fock: Option<FockSection>,
}

/// Parsed run configuration.
#[derive(Clone, Debug)]
pub struct RunConfig {
    pub params: SystemParams,
    pub sweep: Option<SweepSpec>,
    pub fock: Option<FockConfig>,
    /// Coupling configuration even when no sweep is present (for `point`).
    pub coupling: CouplingConfig,
}

fn eta0_from(label: Option<&str>) -> Result<Eta0Convention> {
    match label {
        None | Some("sin-phi") => Ok(Eta0Convention::SinPhi),
        Some("bare") => Ok(Eta0Convention::Bare),
        Some("cos-phi") => Ok(Eta0Convention::CosPhi),
        Some(other) => Err(Error::Config(format!(
            "unknown eta0 convention `{other}` (expected sin-phi, bare or cos-phi)"
        ))),
    }
}

/// Load a TOML configuration file.
pub fn load_config(path: &Path) -> Result<RunConfig> {
    let text = std::fs::read_to_string(path)?;
    parse_config(&text)
}

pub fn parse_config(text: &str) -> Result<RunConfig> {
    let raw: RawConfig =
        toml::from_str(text).map_err(|e| Error::Config(format!("parse error: {e}")))?;
    let s = raw.system;
    let params = SystemParams {
        gamma1: s.gamma1,
        gamma2: s.gamma2,
        p: s.p,
        omega: s.omega,
        delta_l: s.delta_l,
        delta0: s.delta0,
        delta1: s.delta1,
        delta2: s.delta2,
        kappa1: s.kappa1,
        kappa2: s.kappa2,
        g1: s.g1,
        g2: s.g2,
        g3: s.g3,
        g4: s.g4,
        eta0_convention: eta0_from(s.eta0_convention.as_deref())?,
    };
    params.validate()?;
    let mut coupling = infer_coupling(&params);
    let sweep = match raw.sweep {
        None => None,
        Some(sw) => {
            let spec = SweepSpec {
                axis: SweepAxis::parse(&sw.axis)?,
                start: sw.start,
                stop: sw.stop,
                steps: sw.steps,
                base: params,
                config: CouplingConfig::parse(&sw.config)?,
            };
            spec.validate()?;
            coupling = spec.config;
            Some(spec)
        }
    };
    let fock = raw.fock.map(|f| FockConfig {
        n1: f.n1,
        n2: f.n2,
        dt: f.dt,
        t_max: f.t_max,
        tol: f.tol,
    });
    Ok(RunConfig {
        params,
        sweep,
        fock,
        coupling,
    })
}

/// Deduce the coupling pattern from which g's vanish.
pub fn infer_coupling(params: &SystemParams) -> CouplingConfig {
    if params.g3 == 0.0 && params.g4 == 0.0 {
        CouplingConfig::A
    } else if params.g2 == 0.0 && params.g3 == 0.0 {
        CouplingConfig::B
    } else {
        CouplingConfig::Combined
    }
}

fn fig_base() -> SystemParams {
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

/// Two-level scenario: Upsilon vs Delta_L at p = 0, one curve per detuning
/// split delta12 in {0, -0.61}.
pub fn preset_fig2() -> Vec<LabeledSweep> {
    [0.0, -0.61]
        .into_iter()
        .map(|d12| LabeledSweep {
            label: format!("delta12={d12}"),
            spec: SweepSpec {
                axis: SweepAxis::DeltaL,
                start: -60.0,
                stop: 60.0,
                steps: 241,
                base: fig_base().with_delta12(d12),
                config: CouplingConfig::A,
            },
        })
        .collect()
}

/// SGC scenario on the driven transition: Upsilon vs Delta_0 at Delta_L = 0,
/// one curve per dipole alignment p.
pub fn preset_fig3() -> Vec<LabeledSweep> {
    [0.98, 0.7, 0.4, 0.0]
        .into_iter()
        .map(|p| LabeledSweep {
            label: format!("p={p}"),
            spec: SweepSpec {
                axis: SweepAxis::Delta0,
                start: 10.0,
                stop: 100.0,
                steps: 181,
                base: SystemParams {
                    p,
                    ..fig_base().with_delta12(-0.61)
                },
                config: CouplingConfig::A,
            },
        })
        .collect()
}

/// Modes on different transitions: Upsilon vs Delta_0, gamma2 = 2, one curve
/// per p.
pub fn preset_fig5() -> Vec<LabeledSweep> {
    [0.98, 0.7, 0.4, 0.0]
        .into_iter()
        .map(|p| LabeledSweep {
            label: format!("p={p}"),
            spec: SweepSpec {
                axis: SweepAxis::Delta0,
                start: 10.0,
                stop: 100.0,
                steps: 181,
                base: SystemParams {
                    p,
                    gamma2: 2.0,
                    kappa1: 0.67,
                    kappa2: 0.67,
                    g2: 0.0,
                    g4: 10.0,
                    ..fig_base().with_delta12(-0.38)
                },
                config: CouplingConfig::B,
            },
        })
        .collect()
}

/// Anti-parallel dipoles (p = -1) on different transitions: Upsilon vs
/// Delta_0, one curve per gamma2/gamma1. This preset has no fixed detuning
/// split; each curve uses the Stark-cancelling delta12 computed at the
/// sweep midpoint and echoes it in the label.
pub fn preset_fig6() -> Result<Vec<LabeledSweep>> {
    let mut out = Vec::new();
    for gamma2 in [0.5, 1.0, 2.0, 3.0] {
        let base = SystemParams {
            p: -1.0,
            gamma2,
            kappa1: 0.72,
            kappa2: 0.72,
            g2: 0.0,
            g4: 10.0,
            ..fig_base()
        };
        let (start, stop, steps) = (10.0, 100.0, 181);
        let midpoint = SystemParams {
            delta0: 0.5 * (start + stop),
            ..base
        };
        let ss = crate::atom::atom_steady_state(&midpoint)?;
        let simp = crate::coeffs::simplified_config_b(&midpoint, &ss)?;
        let d12 = crate::coeffs::stark_cancel_delta12(simp.abar);
        out.push(LabeledSweep {
            label: format!("gamma2={gamma2} delta12={d12:.4}"),
            spec: SweepSpec {
                axis: SweepAxis::Delta0,
                start,
                stop,
                steps,
                base: base.with_delta12(d12),
                config: CouplingConfig::B,
            },
        });
    }
    Ok(out)
}

/// Look a preset up by name.
pub fn preset(name: &str) -> Result<Vec<LabeledSweep>> {
    match name {
        "fig2" => Ok(preset_fig2()),
        "fig3" => Ok(preset_fig3()),
        "fig5" => Ok(preset_fig5()),
        "fig6" => preset_fig6(),
        other => Err(Error::Config(format!(
            "unknown preset `{other}` (expected fig2, fig3, fig5 or fig6)"
        ))),
    }
}
