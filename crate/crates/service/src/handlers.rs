use std::sync::Arc;

use axum::extract::rejection::JsonRejection;
use axum::extract::State;
use axum::Json;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use slalom_core::amplitude::{self as amp, AmplitudeBreakdown, Navigator, QuadratureSettings, MIN_HORIZON_PERIODS};
use slalom_core::branchcut::{classify_topology, distance_field, DistanceField, TopologyReport};
use slalom_core::contour::{
    gate_rules, navigate, validate_contour, ContourPath, ContourReport, GateRules, DEFAULT_KINETIC_SLACK,
    VALIDATION_SAMPLES,
};
use slalom_core::spectrum::MAX_MOMENTUM_SCALED;
use slalom_core::tca::{search_ca_roots, CAPoint, RootSearch, TimeWindow};
use slalom_core::units::LabParams;
use slalom_core::{ComplexTime, FieldParams, Momentum, Orbit};

use crate::{ApiError, SessionConfig, GAMMA_RANGE};

type Shared = State<Arc<SessionConfig>>;
type Body<T> = Result<Json<T>, JsonRejection>;
type Reply<T> = Result<Json<T>, ApiError>;

/// Largest number of samples any route evaluates along a contour.
pub const MAX_SAMPLES: usize = 1200 * 800;
const DEFAULT_GRID: (usize, usize) = (300, 200);
const DEFAULT_TRAJECTORY_SAMPLES: usize = 64;

/// Request-supplied field, in laboratory or atomic units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FieldSpec {
    Lab(LabParams),
    Au(FieldParams),
}

/// Momentum and optional field shared by every request.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Setup {
    pub p: Momentum,
    #[serde(default)]
    pub field: Option<FieldSpec>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HorizonRequest {
    #[serde(flatten)]
    pub setup: Setup,
    /// Detection time after `t0` in laser periods.
    #[serde(default)]
    pub horizon_periods: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WindowRequest {
    #[serde(flatten)]
    pub setup: Setup,
    #[serde(default)]
    pub horizon_periods: Option<f64>,
    /// Complex-time region in atomic units; the full search window when absent.
    #[serde(default)]
    pub window: Option<TimeWindow>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchmapRequest {
    #[serde(flatten)]
    pub setup: Setup,
    #[serde(default)]
    pub horizon_periods: Option<f64>,
    #[serde(default)]
    pub window: Option<TimeWindow>,
    #[serde(default)]
    pub nx: Option<usize>,
    #[serde(default)]
    pub ny: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodesRequest {
    #[serde(flatten)]
    pub setup: Setup,
    pub nodes: Vec<ComplexTime>,
    /// Validation samples, or samples per segment for `/trajectory`.
    #[serde(default)]
    pub samples: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AmplitudeRequest {
    #[serde(flatten)]
    pub setup: Setup,
    #[serde(default)]
    pub horizon_periods: Option<f64>,
    #[serde(default = "auto")]
    pub navigator: Navigator,
}

fn auto() -> Navigator {
    Navigator::Auto
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SaddleResponse {
    pub field: FieldParams,
    pub p: Momentum,
    pub ts: ComplexTime,
    pub t_kappa: ComplexTime,
    pub t0: f64,
    pub tau: f64,
    pub z_exit: f64,
    /// `|½(p + A(ts))² + Ip|`.
    pub residual: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaEntry {
    #[serde(flatten)]
    pub point: CAPoint,
    pub rules: GateRules,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TcaResponse {
    pub window: TimeWindow,
    pub roots: Vec<CaEntry>,
    /// Argument-principle count, when the audit succeeded.
    pub expected: Option<usize>,
    pub complete: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchmapResponse {
    pub window: TimeWindow,
    pub distance: DistanceField,
    /// Traced cuts with the open/closed verdict of each gate.
    pub topology: TopologyReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourResponse {
    pub horizon: f64,
    pub contour: ContourPath,
    /// Path actually integrated: the first node is moved to `t_κ`.
    pub coulomb_nodes: Vec<ComplexTime>,
    pub report: ContourReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidateResponse {
    pub coulomb_nodes: Vec<ComplexTime>,
    pub report: ContourReport,
    /// `∫ U dt` from `t_κ`, present when the contour is continuous and the quadrature converged.
    pub coulomb_action: Option<Complex64>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectorySample {
    pub segment: usize,
    pub t: ComplexTime,
    pub x: Complex64,
    pub z: Complex64,
    /// `sqrt(r²)` on the principal branch.
    pub r: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrajectoryResponse {
    pub samples: Vec<TrajectorySample>,
}

/// Runs `f` on the blocking pool under the session timeout.
///
/// A timed-out computation is abandoned, not interrupted; its thread
/// finishes in the background and the result is dropped.
async fn compute<T, F>(cfg: Arc<SessionConfig>, f: F) -> Reply<T>
where
    T: Send + 'static,
    F: FnOnce(&SessionConfig) -> Result<T, ApiError> + Send + 'static,
{
    let limit = cfg.timeout();
    let task = tokio::task::spawn_blocking(move || f(&cfg));
    match tokio::time::timeout(limit, task).await {
        Err(_) => Err(ApiError::timeout(limit)),
        Ok(Err(join)) => Err(ApiError::new(
            axum::http::StatusCode::INTERNAL_SERVER_ERROR,
            format!("computation aborted: {join}"),
        )),
        Ok(Ok(r)) => r.map(Json),
    }
}

fn resolve_field(cfg: &SessionConfig, spec: Option<FieldSpec>) -> Result<FieldParams, ApiError> {
    let fp = match spec {
        None => return Ok(cfg.field),
        Some(FieldSpec::Lab(lab)) => lab.to_field()?,
        Some(FieldSpec::Au(fp)) => fp,
    };
    let g = fp.gamma();
    if !(g >= GAMMA_RANGE.0 && g <= GAMMA_RANGE.1) {
        return Err(ApiError::domain(format!(
            "Keldysh parameter {g:.4} outside the supported range [{}, {}]",
            GAMMA_RANGE.0, GAMMA_RANGE.1
        )));
    }
    Ok(fp)
}

fn orbit(cfg: &SessionConfig, setup: &Setup) -> Result<Orbit, ApiError> {
    let fp = resolve_field(cfg, setup.field)?;
    let bound = MAX_MOMENTUM_SCALED * fp.momentum_scale();
    if !(setup.p.norm() < bound) {
        return Err(ApiError::domain(format!("|p| = {} must stay below {MAX_MOMENTUM_SCALED} F/ω = {bound}", setup.p.norm())));
    }
    Ok(Orbit::new(setup.p, &fp)?)
}

fn horizon(cfg: &SessionConfig, o: &Orbit, periods: Option<f64>) -> Result<f64, ApiError> {
    let periods = periods.unwrap_or(cfg.horizon_periods);
    if !(periods >= MIN_HORIZON_PERIODS && periods <= 100.0) {
        return Err(ApiError::domain(format!("horizon_periods = {periods} must lie in [{MIN_HORIZON_PERIODS}, 100]")));
    }
    Ok(o.saddle.t0() + periods * o.fp.period())
}

fn check_window(w: TimeWindow) -> Result<TimeWindow, ApiError> {
    Ok(TimeWindow::new(w.re_min, w.re_max, w.im_min, w.im_max)?)
}

fn check_samples(n: usize, what: &str) -> Result<usize, ApiError> {
    if n < 2 || n > MAX_SAMPLES {
        return Err(ApiError::domain(format!("{what} = {n} must lie in [2, {MAX_SAMPLES}]")));
    }
    Ok(n)
}

pub async fn config(State(cfg): Shared) -> Json<SessionConfig> {
    Json((*cfg).clone())
}

pub async fn saddle(State(cfg): Shared, body: Body<Setup>) -> Reply<SaddleResponse> {
    let Json(req) = body?;
    compute(cfg, move |cfg| {
        let o = orbit(cfg, &req)?;
        Ok(SaddleResponse {
            field: o.fp,
            p: o.p,
            ts: o.ts(),
            t_kappa: o.saddle.t_kappa,
            t0: o.saddle.t0(),
            tau: o.saddle.tau(),
            z_exit: o.saddle.z_exit,
            residual: slalom_core::orbit::saddle_residual(o.ts(), o.p, &o.fp).norm(),
        })
    })
    .await
}

pub async fn tca(State(cfg): Shared, body: Body<WindowRequest>) -> Reply<TcaResponse> {
    let Json(req) = body?;
    compute(cfg, move |cfg| {
        let o = orbit(cfg, &req.setup)?;
        let window = match req.window {
            Some(w) => check_window(w)?,
            None => TimeWindow::default_for(&o, horizon(cfg, &o, req.horizon_periods)?),
        };
        let search = search_ca_roots(&o, &window, &RootSearch::default());
        let roots = search
            .roots
            .into_iter()
            .map(|point| CaEntry { rules: gate_rules(&point, &o, DEFAULT_KINETIC_SLACK), point })
            .collect();
        Ok(TcaResponse { window, roots, expected: search.expected, complete: search.complete })
    })
    .await
}

pub async fn branchmap(State(cfg): Shared, body: Body<BranchmapRequest>) -> Reply<BranchmapResponse> {
    let Json(req) = body?;
    let (nx, ny) = (req.nx.unwrap_or(DEFAULT_GRID.0), req.ny.unwrap_or(DEFAULT_GRID.1));
    if nx > cfg.max_grid.0 || ny > cfg.max_grid.1 {
        return Err(ApiError::domain(format!(
            "grid {nx}x{ny} exceeds the resolution cap {}x{}",
            cfg.max_grid.0, cfg.max_grid.1
        )));
    }
    compute(cfg, move |cfg| {
        let o = orbit(cfg, &req.setup)?;
        let window = match req.window {
            Some(w) => check_window(w)?,
            None => TimeWindow::default_for(&o, horizon(cfg, &o, req.horizon_periods)?),
        };
        let distance = distance_field(&o, &window, nx, ny)?;
        let topology = classify_topology(&o, &window, true)?;
        Ok(BranchmapResponse { window, distance, topology })
    })
    .await
}

pub async fn contour_auto(State(cfg): Shared, body: Body<HorizonRequest>) -> Reply<ContourResponse> {
    let Json(req) = body?;
    compute(cfg, move |cfg| {
        let o = orbit(cfg, &req.setup)?;
        let h = horizon(cfg, &o, req.horizon_periods)?;
        let contour = navigate(&o, h, DEFAULT_KINETIC_SLACK)?;
        let coulomb_nodes = contour.coulomb_nodes(&o);
        let report = validate_contour(&coulomb_nodes, &o, VALIDATION_SAMPLES)?;
        Ok(ContourResponse { horizon: h, contour, coulomb_nodes, report })
    })
    .await
}

pub async fn contour_validate(State(cfg): Shared, body: Body<NodesRequest>) -> Reply<ValidateResponse> {
    let Json(req) = body?;
    compute(cfg, move |cfg| {
        let o = orbit(cfg, &req.setup)?;
        let samples = check_samples(req.samples.unwrap_or(VALIDATION_SAMPLES), "samples")?;
        let ts = o.ts();
        match req.nodes.first() {
            Some(first) if req.nodes.len() >= 2 && (first - ts).norm() <= 1e-6 * ts.norm().max(1.0) => {}
            _ => return Err(ApiError::domain(format!("nodes must start at ts = {ts} and hold at least two points"))),
        }
        let coulomb_nodes = ContourPath { nodes: req.nodes, selected_ca: Vec::new() }.coulomb_nodes(&o);
        let report = validate_contour(&coulomb_nodes, &o, samples)?;
        let (coulomb_action, error) = if report.continuous {
            match amp::coulomb_action(&coulomb_nodes, &o, &QuadratureSettings::default()) {
                Ok(c) => (Some(c), None),
                Err(e) => (None, Some(e.to_string())),
            }
        } else {
            (None, Some(format!("contour crosses a branch cut {} time(s)", report.crossings.len())))
        };
        Ok(ValidateResponse { coulomb_nodes, report, coulomb_action, error })
    })
    .await
}

pub async fn trajectory(State(cfg): Shared, body: Body<NodesRequest>) -> Reply<TrajectoryResponse> {
    let Json(req) = body?;
    compute(cfg, move |cfg| {
        let o = orbit(cfg, &req.setup)?;
        let per = req.samples.unwrap_or(DEFAULT_TRAJECTORY_SAMPLES);
        if req.nodes.len() < 2 || req.nodes.iter().any(|t| !t.is_finite()) {
            return Err(ApiError::domain("a trajectory needs at least two finite nodes"));
        }
        check_samples(per.saturating_mul(req.nodes.len() - 1), "total samples")?;
        let mut samples = Vec::new();
        for (segment, w) in req.nodes.windows(2).enumerate() {
            let first = if segment == 0 { 0 } else { 1 };
            for k in first..=per {
                let t = w[0] + (w[1] - w[0]) * (k as f64 / per as f64);
                let pos = o.position(t);
                samples.push(TrajectorySample { segment, t, x: pos.x, z: pos.z, r: o.r_squared(t).sqrt() });
            }
        }
        Ok(TrajectoryResponse { samples })
    })
    .await
}

pub async fn amplitude(State(cfg): Shared, body: Body<AmplitudeRequest>) -> Reply<AmplitudeBreakdown> {
    let Json(req) = body?;
    compute(cfg, move |cfg| {
        let o = orbit(cfg, &req.setup)?;
        let h = horizon(cfg, &o, req.horizon_periods)?;
        Ok(amp::amplitude(o.p, &o.fp, Some(h), &req.navigator, &QuadratureSettings::default())?)
    })
    .await
}
