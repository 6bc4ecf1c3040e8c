//! Coulomb-corrected ionization amplitude: bound phase, closed-form kinetic
//! action and the Coulomb action integrated along a navigated contour.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::contour::{navigate, validate_contour, ContourPath, ContourReport, DEFAULT_KINETIC_SLACK};
use crate::error::{Result, SlalomError};
use crate::field::{ComplexTime, FieldParams, Momentum};
use crate::orbit::{kinetic_action, Orbit};
use crate::quad::integrate_segment;

/// Default detection time, in laser periods after `t0`.
pub const DEFAULT_HORIZON_PERIODS: f64 = 2.75;
/// Shortest detection time accepted, in laser periods after `t0`.
pub const MIN_HORIZON_PERIODS: f64 = 2.0;
/// Vertices closer than this to the core (a.u.) are treated as collisions.
pub const COLLISION_RADIUS: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct QuadratureSettings {
    /// Absolute tolerance per contour segment.
    pub abs_tol: f64,
    pub max_intervals: usize,
    /// Samples of the cut-crossing check run before integrating.
    pub check_samples: usize,
}

impl Default for QuadratureSettings {
    fn default() -> Self {
        Self {
            abs_tol: 1e-9,
            max_intervals: 20_000,
            check_samples: 2_000,
        }
    }
}

/// `∫ U(r(t)) dt` along the polyline `nodes`.
///
/// Fails with [`SlalomError::CutCrossing`] when a segment crosses a branch
/// cut, and with a quadrature error when a segment does not converge.
pub fn coulomb_action(nodes: &[ComplexTime], orbit: &Orbit, settings: &QuadratureSettings) -> Result<Complex64> {
    if orbit.fp.charge() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let report = validate_contour(nodes, orbit, settings.check_samples)?;
    reject_crossings(&report)?;
    integrate_path(nodes, orbit, settings)
}

fn reject_crossings(report: &ContourReport) -> Result<()> {
    match report.crossings.first() {
        Some(&(segment, _)) => Err(SlalomError::CutCrossing { segment }),
        None => Ok(()),
    }
}

fn integrate_path(nodes: &[ComplexTime], orbit: &Orbit, settings: &QuadratureSettings) -> Result<Complex64> {
    if orbit.fp.charge() == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let mut total = Complex64::new(0.0, 0.0);
    for (k, seg) in nodes.windows(2).enumerate() {
        let q = integrate_segment(
            |t| orbit.coulomb_potential(t),
            seg[0],
            seg[1],
            settings.abs_tol,
            0.0,
            settings.max_intervals,
        )
        .map_err(|e| match e {
            SlalomError::QuadratureNotConverged { estimate, .. } => {
                SlalomError::QuadratureNotConverged { segment: k, estimate }
            }
            other => other,
        })?;
        total += q.value;
    }
    Ok(total)
}

/// Contour used for the Coulomb action.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "nodes")]
pub enum Navigator {
    /// `ts → t0 → T`.
    Standard,
    /// Gates chosen by the selection rules.
    Auto,
    /// User nodes starting at `ts` and ending on the real axis.
    Custom(Vec<ComplexTime>),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeBreakdown {
    pub p: Momentum,
    pub ts: ComplexTime,
    pub t_kappa: ComplexTime,
    pub horizon: f64,
    /// `i·Ip·ts`.
    pub bound_phase: Complex64,
    /// `∫_{ts}^{T} ½(p + A)² dt`.
    pub kinetic_action: Complex64,
    /// `∫_{tκ}^{T} U dt` along the contour.
    pub coulomb_action: Complex64,
    /// `Re[i·Ip·ts - i·S_kin - i·S_C]`.
    pub log_amplitude: f64,
    /// `|a|²` with unit shape factor.
    #[serde(rename = "yield")]
    pub yield_: f64,
    pub sfa_log_amplitude: f64,
    pub sfa_yield: f64,
    pub contour: ContourPath,
    pub report: ContourReport,
}

impl AmplitudeBreakdown {
    /// `ARM / SFA` yield ratio.
    pub fn enhancement(&self) -> f64 {
        (2.0 * (self.log_amplitude - self.sfa_log_amplitude)).exp()
    }
}

/// Detection time `t0 + 2.75` periods.
pub fn default_horizon(orbit: &Orbit) -> f64 {
    orbit.saddle.t0() + DEFAULT_HORIZON_PERIODS * orbit.fp.period()
}

/// Bare-SFA exponent `i·Ip·ts - i·∫_{ts}^{T} ½(p + A)² dt`.
pub fn sfa_exponent(orbit: &Orbit, horizon: f64) -> Complex64 {
    let i = Complex64::new(0.0, 1.0);
    let ts = orbit.ts();
    i * orbit.fp.ip() * ts - i * kinetic_action(ts, Complex64::new(horizon, 0.0), orbit.p, &orbit.fp)
}

/// Full amplitude at momentum `p`; `horizon` defaults to `t0 + 2.75` periods.
pub fn amplitude(
    p: Momentum,
    fp: &FieldParams,
    horizon: Option<f64>,
    navigator: &Navigator,
    settings: &QuadratureSettings,
) -> Result<AmplitudeBreakdown> {
    let orbit = Orbit::new(p, fp)?;
    let horizon = match navigator {
        Navigator::Custom(nodes) => nodes.last().map(|t| t.re).unwrap_or(f64::NAN),
        _ => horizon.unwrap_or_else(|| default_horizon(&orbit)),
    };
    let min = orbit.saddle.t0() + MIN_HORIZON_PERIODS * fp.period();
    if !(horizon >= min) {
        return Err(SlalomError::InvalidArgument(format!(
            "detection time {horizon} is earlier than t0 + {MIN_HORIZON_PERIODS} periods = {min}"
        )));
    }
    let contour = match navigator {
        Navigator::Standard => ContourPath::standard(&orbit, horizon),
        Navigator::Auto => navigate(&orbit, horizon, DEFAULT_KINETIC_SLACK)?,
        Navigator::Custom(nodes) => custom_path(nodes, &orbit)?,
    };
    let nodes = contour.coulomb_nodes(&orbit);
    // On axis the cut pairs collapse onto poles of U, which gates can land on.
    if let Some(t) = nodes.iter().find(|&&t| orbit.r_squared(t).norm().sqrt() < COLLISION_RADIUS) {
        return Err(SlalomError::CollisionPoint { re: t.re, im: t.im });
    }
    let report = validate_contour(&nodes, &orbit, settings.check_samples)?;
    reject_crossings(&report)?;
    let coulomb = integrate_path(&nodes, &orbit, settings)?;

    let i = Complex64::new(0.0, 1.0);
    let ts = orbit.ts();
    let bound_phase = i * fp.ip() * ts;
    let kinetic = kinetic_action(ts, Complex64::new(horizon, 0.0), p, fp);
    let sfa = bound_phase - i * kinetic;
    let full = sfa - i * coulomb;
    Ok(AmplitudeBreakdown {
        p,
        ts,
        t_kappa: orbit.saddle.t_kappa,
        horizon,
        bound_phase,
        kinetic_action: kinetic,
        coulomb_action: coulomb,
        log_amplitude: full.re,
        yield_: (2.0 * full.re).exp(),
        sfa_log_amplitude: sfa.re,
        sfa_yield: (2.0 * sfa.re).exp(),
        contour,
        report,
    })
}

fn custom_path(nodes: &[ComplexTime], orbit: &Orbit) -> Result<ContourPath> {
    let ts = orbit.ts();
    let (Some(first), Some(last)) = (nodes.first(), nodes.last()) else {
        return Err(SlalomError::InvalidArgument("empty contour".into()));
    };
    if nodes.len() < 2 || (first - ts).norm() > 1e-6 * ts.norm().max(1.0) {
        return Err(SlalomError::InvalidArgument(format!("contour must start at ts = {ts}")));
    }
    if last.im != 0.0 {
        return Err(SlalomError::InvalidArgument("contour must end on the real axis".into()));
    }
    Ok(ContourPath {
        nodes: nodes.to_vec(),
        selected_ca: Vec::new(),
    })
}
