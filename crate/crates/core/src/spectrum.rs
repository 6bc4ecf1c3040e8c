//! Photoelectron momentum maps and wavelength scans.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::amplitude::{amplitude, Navigator, QuadratureSettings, DEFAULT_HORIZON_PERIODS};
use crate::classical::{solve_soft_recollision, Family};
use crate::contour::DEFAULT_KINETIC_SLACK;
use crate::error::{Result, SlalomError};
use crate::field::{FieldParams, Momentum};
use crate::orbit::Orbit;
use crate::units::{self, LabParams};

/// Largest `|p|` accepted by the scans, in units of `F/ω`.
pub const MAX_MOMENTUM_SCALED: f64 = 3.0;
/// Default transverse offset at the first soft recollision, in units of `1/κ`.
pub const DEFAULT_PX_MULTIPLIER: f64 = 0.05;

/// `n` equally spaced values from `min` to `max` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisSpec {
    pub min: f64,
    pub max: f64,
    pub n: usize,
}

impl AxisSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        if self.n < 2 || !(self.max > self.min) || !self.min.is_finite() || !self.max.is_finite() {
            return Err(SlalomError::InvalidArgument(format!(
                "axis needs n >= 2 and min < max, got {self:?}"
            )));
        }
        // Convex combination: a range symmetric about zero gives exactly mirrored values.
        let m = (self.n - 1) as f64;
        Ok((0..self.n)
            .map(|i| (self.min * (m - i as f64) + self.max * i as f64) / m)
            .collect())
    }

    pub fn step(&self) -> f64 {
        (self.max - self.min) / (self.n.max(2) - 1) as f64
    }
}

/// Solver settings recorded with every scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScanSettings {
    /// Detection time after `t0`, in laser periods.
    pub horizon_periods: f64,
    pub quadrature: QuadratureSettings,
    pub kinetic_slack: f64,
}

impl Default for ScanSettings {
    fn default() -> Self {
        Self {
            horizon_periods: DEFAULT_HORIZON_PERIODS,
            quadrature: QuadratureSettings::default(),
            kinetic_slack: DEFAULT_KINETIC_SLACK,
        }
    }
}

/// A momentum whose amplitude could not be evaluated.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NodeFailure {
    pub px: f64,
    pub pz: f64,
    pub error: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumMeta {
    pub field: FieldParams,
    pub lab: LabParams,
    pub settings: ScanSettings,
    pub masked: usize,
    pub nodes: usize,
}

/// Yields on a `(p_x, p_z)` grid; `p_z` is the slow index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumGrid {
    pub px_axis: Vec<f64>,
    pub pz_axis: Vec<f64>,
    /// `log10` of `½(|a(p_x, p_z)|² + |a(p_x, -p_z)|²)`, `None` where masked.
    pub log10_yield: Vec<Option<f64>>,
    pub failures: Vec<NodeFailure>,
    pub meta: SpectrumMeta,
}

impl SpectrumGrid {
    pub fn get(&self, ix: usize, iz: usize) -> Option<f64> {
        self.log10_yield[iz * self.px_axis.len() + ix]
    }

    pub fn masked_fraction(&self) -> f64 {
        self.meta.masked as f64 / self.meta.nodes.max(1) as f64
    }
}

/// `|a(p)|²` through the navigated contour.
pub fn single_yield(p: Momentum, fp: &FieldParams, settings: &ScanSettings) -> Result<f64> {
    let orbit = Orbit::new(p, fp)?;
    let horizon = orbit.saddle.t0() + settings.horizon_periods * fp.period();
    Ok(amplitude(p, fp, Some(horizon), &Navigator::Auto, &settings.quadrature)?.yield_)
}

fn check_momentum_bounds(axis: &[f64], fp: &FieldParams, name: &str) -> Result<()> {
    let bound = MAX_MOMENTUM_SCALED * fp.momentum_scale();
    match axis.iter().find(|v| v.abs() >= bound) {
        Some(v) => Err(SlalomError::InvalidArgument(format!(
            "{name} = {v} exceeds {MAX_MOMENTUM_SCALED} F/ω = {bound}"
        ))),
        None => Ok(()),
    }
}

type NodeResult = std::result::Result<f64, String>;

/// Log yields in node order, masking failures and non-positive values.
fn collect_yields<I: Iterator<Item = (f64, f64)>>(
    momenta: I,
    results: Vec<NodeResult>,
) -> (Vec<Option<f64>>, Vec<NodeFailure>) {
    let mut log10_yield = Vec::with_capacity(results.len());
    let mut failures = Vec::new();
    for ((px, pz), r) in momenta.zip(results) {
        let error = match r {
            Ok(y) if y.is_finite() && y > 0.0 => {
                log10_yield.push(Some(y.log10()));
                continue;
            }
            Ok(y) => format!("non-finite yield {y}"),
            Err(e) => e,
        };
        log10_yield.push(None);
        failures.push(NodeFailure { px, pz, error });
    }
    (log10_yield, failures)
}

/// Incoherent two-half-cycle yield on a grid, evaluated in parallel.
pub fn momentum_map(fp: &FieldParams, px: &AxisSpec, pz: &AxisSpec, settings: &ScanSettings) -> Result<SpectrumGrid> {
    let px_axis = px.values()?;
    let pz_axis = pz.values()?;
    check_momentum_bounds(&px_axis, fp, "p_x")?;
    check_momentum_bounds(&pz_axis, fp, "p_z")?;
    let nodes: Vec<(f64, f64)> = pz_axis.iter().flat_map(|&z| px_axis.iter().map(move |&x| (x, z))).collect();
    let results: Vec<NodeResult> = nodes
        .par_iter()
        .map(|&(x, z)| {
            let up = single_yield(Momentum::new(x, z), fp, settings).map_err(|e| e.to_string())?;
            let down = single_yield(Momentum::new(x, -z), fp, settings).map_err(|e| e.to_string())?;
            Ok(0.5 * (up + down))
        })
        .collect();
    let (log10_yield, failures) = collect_yields(nodes.iter().copied(), results);
    Ok(SpectrumGrid {
        meta: SpectrumMeta {
            field: *fp,
            lab: LabParams::from_field(fp),
            settings: *settings,
            masked: failures.len(),
            nodes: nodes.len(),
        },
        px_axis,
        pz_axis,
        log10_yield,
        failures,
    })
}

/// Classical soft-recollision momentum of order `n` along a wavelength scan.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassicalLocus {
    pub n: u32,
    pub family: Family,
    /// One entry per wavelength, `None` where the solver failed.
    pub pz_sr: Vec<Option<f64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WavelengthScan {
    pub lambda_um: Vec<f64>,
    pub gamma: Vec<f64>,
    /// Transverse momentum used at each wavelength.
    pub px: Vec<f64>,
    pub pz_axis: Vec<f64>,
    /// `log10 |a(p_x, p_z)|²`, wavelength-major.
    pub log10_yield: Vec<Option<f64>>,
    pub failures: Vec<NodeFailure>,
    pub loci: Vec<ClassicalLocus>,
    pub ip_ev: f64,
    pub intensity_w_cm2: f64,
    pub px_multiplier: f64,
    pub settings: ScanSettings,
}

impl WavelengthScan {
    pub fn row(&self, i: usize) -> &[Option<f64>] {
        let n = self.pz_axis.len();
        &self.log10_yield[i * n..(i + 1) * n]
    }
}

/// `p_x` placing the trajectory `multiplier/κ` off axis at the first soft recollision.
pub fn scan_px(fp: &FieldParams, multiplier: f64) -> Result<f64> {
    let sr = solve_soft_recollision(1, fp)?;
    Ok(multiplier / (fp.kappa() * (sr.tr - sr.t0)))
}

/// On-axis-like yield over `(λ, p_z)` at fixed intensity and binding.
pub fn wavelength_scan(
    ip_ev: f64,
    intensity_w_cm2: f64,
    lambda: &AxisSpec,
    pz: &AxisSpec,
    px_multiplier: f64,
    orders: &[u32],
    settings: &ScanSettings,
) -> Result<WavelengthScan> {
    let lambda_um = lambda.values()?;
    let pz_axis = pz.values()?;
    let mut fields = Vec::with_capacity(lambda_um.len());
    for &l in &lambda_um {
        let fp = LabParams { ip_ev, intensity_w_cm2, lambda_um: l }.to_field()?;
        let g = fp.gamma();
        if !(g > 0.1 && g < 1.2) {
            return Err(SlalomError::InvalidArgument(format!(
                "λ = {l} µm gives γ = {g:.3}, outside (0.1, 1.2)"
            )));
        }
        check_momentum_bounds(&pz_axis, &fp, "p_z")?;
        fields.push(fp);
    }
    let px: Vec<f64> = fields.iter().map(|fp| scan_px(fp, px_multiplier)).collect::<Result<_>>()?;
    let nodes: Vec<(usize, f64)> = (0..fields.len()).flat_map(|i| pz_axis.iter().map(move |&z| (i, z))).collect();
    let results: Vec<NodeResult> = nodes
        .par_iter()
        .map(|&(i, z)| single_yield(Momentum::new(px[i], z), &fields[i], settings).map_err(|e| e.to_string()))
        .collect();
    let (log10_yield, failures) = collect_yields(nodes.iter().map(|&(i, z)| (px[i], z)), results);
    let loci = orders
        .iter()
        .map(|&n| ClassicalLocus {
            n,
            family: Family::of(n),
            pz_sr: fields.iter().map(|fp| solve_soft_recollision(n, fp).ok().map(|s| s.pz_sr)).collect(),
        })
        .collect();
    Ok(WavelengthScan {
        gamma: fields.iter().map(|f| f.gamma()).collect(),
        lambda_um,
        px,
        pz_axis,
        log10_yield,
        failures,
        loci,
        ip_ev,
        intensity_w_cm2,
        px_multiplier,
        settings: *settings,
    })
}

/// Positions along `axis` where `log10` yield falls by at least `min_drop`
/// decades between neighbouring cells, at local maxima of the drop.
///
/// A single masked cell is bridged: the drop is taken between its valid
/// neighbours and reported at their midpoint. Longer gaps break the row.
pub fn drop_loci(row: &[Option<f64>], axis: &[f64], min_drop: f64) -> Vec<f64> {
    let valid: Vec<(usize, f64)> = row.iter().enumerate().filter_map(|(i, v)| v.map(|v| (i, v))).collect();
    let drops: Vec<Option<(f64, f64)>> = valid
        .windows(2)
        .map(|w| (w[1].0 - w[0].0 <= 2).then(|| (w[0].1 - w[1].1, 0.5 * (axis[w[0].0] + axis[w[1].0]))))
        .collect();
    let mut out = Vec::new();
    for k in 0..drops.len() {
        let Some((d, at)) = drops[k] else { continue };
        let left = k.checked_sub(1).and_then(|j| drops[j]).map_or(f64::NEG_INFINITY, |x| x.0);
        let right = drops.get(k + 1).copied().flatten().map_or(f64::NEG_INFINITY, |x| x.0);
        if d >= min_drop && d >= left && d > right {
            out.push(at);
        }
    }
    out
}

fn write_lab_header<W: Write>(out: &mut W, fp: &FieldParams, settings: &ScanSettings) -> std::io::Result<()> {
    let lab = LabParams::from_field(fp);
    writeln!(out, "# F_au: {:.12e}", fp.field())?;
    writeln!(out, "# omega_au: {:.12e}", fp.omega())?;
    writeln!(out, "# ip_au: {:.12e}", fp.ip())?;
    writeln!(out, "# charge: {}", fp.charge())?;
    writeln!(out, "# gamma: {:.6}", fp.gamma())?;
    writeln!(out, "# intensity_w_cm2: {:.6e}", lab.intensity_w_cm2)?;
    writeln!(out, "# lambda_um: {:.6}", lab.lambda_um)?;
    writeln!(out, "# ip_ev: {:.6}", lab.ip_ev)?;
    writeln!(out, "# hartree_ev: {}", units::HARTREE_EV)?;
    write_settings(out, settings)
}

fn write_settings<W: Write>(out: &mut W, settings: &ScanSettings) -> std::io::Result<()> {
    writeln!(out, "# horizon_periods: {}", settings.horizon_periods)?;
    writeln!(out, "# quadrature_abs_tol: {:e}", settings.quadrature.abs_tol)?;
    writeln!(out, "# quadrature_max_intervals: {}", settings.quadrature.max_intervals)?;
    writeln!(out, "# cut_check_samples: {}", settings.quadrature.check_samples)?;
    writeln!(out, "# kinetic_slack_au: {:e}", settings.kinetic_slack)?;
    writeln!(out, "# shape_factor: omitted")
}

fn fmt_yield(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |y| format!("{y:.10}"))
}

/// Comment header with the run parameters, then `px,pz,log10_yield` rows.
pub fn write_spectrum_csv<W: Write>(grid: &SpectrumGrid, mut out: W) -> std::io::Result<()> {
    write_lab_header(&mut out, &grid.meta.field, &grid.meta.settings)?;
    writeln!(out, "# masked: {}/{}", grid.meta.masked, grid.meta.nodes)?;
    writeln!(out, "px,pz,log10_yield")?;
    for (iz, z) in grid.pz_axis.iter().enumerate() {
        for (ix, x) in grid.px_axis.iter().enumerate() {
            writeln!(out, "{x:.10},{z:.10},{}", fmt_yield(grid.get(ix, iz)))?;
        }
    }
    Ok(())
}

/// Comment header, then `lambda_um,gamma,px,pz,log10_yield` rows.
pub fn write_scan_csv<W: Write>(scan: &WavelengthScan, mut out: W) -> std::io::Result<()> {
    writeln!(out, "# ip_ev: {}", scan.ip_ev)?;
    writeln!(out, "# intensity_w_cm2: {:e}", scan.intensity_w_cm2)?;
    writeln!(out, "# px_multiplier_over_kappa: {}", scan.px_multiplier)?;
    write_settings(&mut out, &scan.settings)?;
    writeln!(out, "# masked: {}/{}", scan.failures.len(), scan.log10_yield.len())?;
    writeln!(out, "lambda_um,gamma,px,pz,log10_yield")?;
    for (i, l) in scan.lambda_um.iter().enumerate() {
        for (z, y) in scan.pz_axis.iter().zip(scan.row(i)) {
            writeln!(out, "{l:.6},{:.6},{:.10e},{z:.10},{}", scan.gamma[i], scan.px[i], fmt_yield(*y))?;
        }
    }
    Ok(())
}

/// `n,family,lambda_um,pz_sr` rows of the classical loci.
pub fn write_loci_csv<W: Write>(scan: &WavelengthScan, mut out: W) -> std::io::Result<()> {
    writeln!(out, "n,family,lambda_um,pz_sr")?;
    for locus in &scan.loci {
        let family = match locus.family {
            Family::Odd => "odd",
            Family::Even => "even",
        };
        for (l, p) in scan.lambda_um.iter().zip(&locus.pz_sr) {
            writeln!(out, "{},{family},{l:.6},{}", locus.n, fmt_yield(*p))?;
        }
    }
    Ok(())
}
