//! Gate selection among closest-approach times and piecewise-linear
//! integration contours from the ionization saddle to the detection time.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::branchcut::crosses_cut;
use crate::error::{Result, SlalomError};
use crate::field::ComplexTime;
use crate::orbit::Orbit;
use crate::tca::{find_ca_roots, CAPoint, RootSearch, TimeWindow};

/// Default kinetic-energy slack `u` of the gate rules, in atomic units.
pub const DEFAULT_KINETIC_SLACK: f64 = 1e-8;
/// Samples used by [`validate_contour`].
pub const VALIDATION_SAMPLES: usize = 10_000;
/// Paths closer than this to the core (a.u.) carry a warning.
pub const NEAR_SINGULARITY: f64 = 0.5;

/// Which of the selection rules admitted a closest-approach time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct GateRules {
    /// After ionization, bounded imaginary part, non-negative kinetic energy.
    pub kinetic: bool,
    /// First inward turning point, `|Re ωt| < π/2`.
    pub inward_turn: bool,
    /// First return, `π/2 < Re ωt < 3π/2` in the upper half plane.
    pub first_return: bool,
}

impl GateRules {
    pub fn any(&self) -> bool {
        self.kinetic || self.inward_turn || self.first_return
    }
}

/// Rule evaluation for one closest-approach time of `orbit`.
pub fn gate_rules(point: &CAPoint, orbit: &Orbit, u: f64) -> GateRules {
    let w = orbit.fp.omega();
    let tau = orbit.saddle.tau();
    let phase = point.t.re * w;
    let im = point.t.im;
    if point.saddle || point.conjugate {
        return GateRules::default();
    }
    GateRules {
        kinetic: phase > orbit.saddle.t0() * w + PI / 5.0
            && im > -tau / 3.0
            && im <= orbit.saddle.t_kappa.im
            && point.re_v2 > -u,
        inward_turn: phase > -FRAC_PI_2 && phase < FRAC_PI_2 && im >= 0.0 && im < tau,
        first_return: phase > FRAC_PI_2 && phase < 1.5 * PI && im > 0.0,
    }
}

/// The closest-approach times admitted by any rule, sorted by real part.
pub fn select_gates(roots: &[CAPoint], orbit: &Orbit, u: f64) -> Vec<CAPoint> {
    let mut out: Vec<CAPoint> = roots.iter().filter(|r| gate_rules(r, orbit, u).any()).copied().collect();
    out.sort_by(|a, b| a.t.re.total_cmp(&b.t.re));
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourPath {
    /// Vertices from `ts` to the real detection time.
    pub nodes: Vec<ComplexTime>,
    pub selected_ca: Vec<CAPoint>,
}

impl ContourPath {
    /// Standard contour `ts → t0 → T`.
    pub fn standard(orbit: &Orbit, horizon: f64) -> Self {
        let t0 = Complex64::new(orbit.saddle.t0(), 0.0);
        Self {
            nodes: vec![orbit.ts(), t0, Complex64::new(horizon, 0.0)],
            selected_ca: Vec::new(),
        }
    }

    /// Vertices of the Coulomb integration path: the first vertex moves to `t_κ`.
    pub fn coulomb_nodes(&self, orbit: &Orbit) -> Vec<ComplexTime> {
        let mut nodes = self.nodes.clone();
        if let Some(first) = nodes.first_mut() {
            *first = orbit.saddle.t_kappa;
        }
        nodes
    }

    pub fn end(&self) -> f64 {
        self.nodes.last().map_or(f64::NAN, |t| t.re)
    }
}

/// Path `ts → [t0] → gates → T`.
///
/// The descent goes through `t0` when every gate passes the kinetic rule;
/// otherwise it heads straight for the first gate.
pub fn build_contour(gates: &[CAPoint], orbit: &Orbit, horizon: f64, u: f64) -> Result<ContourPath> {
    if !(horizon > orbit.saddle.t0()) {
        return Err(SlalomError::InvalidArgument(format!(
            "detection time {horizon} precedes the ionization time {}",
            orbit.saddle.t0()
        )));
    }
    let mut gates: Vec<CAPoint> = gates.iter().filter(|g| g.t.re < horizon).copied().collect();
    gates.sort_by(|a, b| a.t.re.total_cmp(&b.t.re));
    let mut nodes = vec![orbit.ts()];
    if gates.iter().all(|g| gate_rules(g, orbit, u).kinetic) {
        nodes.push(Complex64::new(orbit.saddle.t0(), 0.0));
    }
    nodes.extend(gates.iter().map(|g| g.t));
    nodes.push(Complex64::new(horizon, 0.0));
    Ok(ContourPath { nodes, selected_ca: gates })
}

/// Rule-selected contour for `orbit`, searching closest-approach times up to `horizon`.
pub fn navigate(orbit: &Orbit, horizon: f64, u: f64) -> Result<ContourPath> {
    let window = TimeWindow::default_for(orbit, horizon);
    let roots = find_ca_roots(orbit, &window, &RootSearch::default());
    build_contour(&select_gates(&roots, orbit, u), orbit, horizon, u)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ContourReport {
    /// No sample pair straddles a branch cut.
    pub continuous: bool,
    /// Segment index and time of each detected cut crossing.
    pub crossings: Vec<(usize, ComplexTime)>,
    /// Largest relative change of `U` between adjacent samples.
    pub max_jump: f64,
    /// Smallest `|r|` along the path.
    pub nearest_singularity_distance: f64,
    pub near_singularity: bool,
    pub samples: usize,
}

/// Samples `U` along the polyline and reports cut crossings and jumps.
///
/// A first pass of `samples` points spread by length estimates the
/// variation of `ln U`; the `samples` audit points are then placed at equal
/// steps of that variation (blended with a tenth of arc length), so the
/// largest smooth jump is close to the total variation over `samples`.
pub fn validate_contour(nodes: &[ComplexTime], orbit: &Orbit, samples: usize) -> Result<ContourReport> {
    if nodes.len() < 2 {
        return Err(SlalomError::InvalidArgument("a contour needs at least two nodes".into()));
    }
    if nodes.iter().any(|t| !t.is_finite()) {
        return Err(SlalomError::InvalidArgument("contour nodes must be finite".into()));
    }
    let samples = samples.max(2);
    let coarse = length_samples(nodes, samples);
    let r2: Vec<Complex64> = coarse.iter().map(|&(_, t)| orbit.r_squared(t)).collect();
    let total_len: f64 = coarse.windows(2).map(|w| (w[1].1 - w[0].1).norm()).sum();
    let var: Vec<f64> = r2.windows(2).map(|w| 0.5 * (w[1] / w[0]).ln().norm()).collect();
    let total_var: f64 = var.iter().filter(|v| v.is_finite()).sum();
    let weights: Vec<f64> = coarse
        .windows(2)
        .zip(&var)
        .map(|(w, v)| {
            let len = if total_len > 0.0 { (w[1].1 - w[0].1).norm() / total_len } else { 0.0 };
            let v = if v.is_finite() && total_var > 0.0 { v / total_var } else { 0.0 };
            0.9 * v + 0.1 * len
        })
        .collect();
    let total_w: f64 = weights.iter().sum();

    let mut crossings = Vec::new();
    let mut max_jump: f64 = 0.0;
    let mut min_r = f64::INFINITY;
    let mut prev: Option<Complex64> = None;
    let mut interval = 0;
    let mut acc = 0.0;
    for k in 0..=samples {
        let target = total_w * k as f64 / samples as f64;
        while interval + 1 < weights.len() && acc + weights[interval] < target {
            acc += weights[interval];
            interval += 1;
        }
        let frac = if weights[interval] > 0.0 {
            ((target - acc) / weights[interval]).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let a = coarse[interval].1;
        let (seg, b) = coarse[interval + 1];
        let t = a + (b - a) * frac;
        let cur = orbit.r_squared(t);
        min_r = min_r.min(cur.norm().sqrt());
        if let Some(p) = prev {
            if crosses_cut(p, cur) {
                crossings.push((seg, t));
            }
            let (u0, u1) = (p.sqrt().inv(), cur.sqrt().inv());
            let scale = u0.norm().max(u1.norm());
            if scale > 0.0 && scale.is_finite() {
                max_jump = max_jump.max((u1 - u0).norm() / scale);
            }
        }
        prev = Some(cur);
    }
    // Vertices can be skipped by the resampling; check them directly.
    for &(_, t) in &coarse {
        min_r = min_r.min(orbit.r_squared(t).norm().sqrt());
    }
    Ok(ContourReport {
        continuous: crossings.is_empty(),
        crossings,
        max_jump,
        nearest_singularity_distance: min_r,
        near_singularity: min_r < NEAR_SINGULARITY,
        samples: samples + 1,
    })
}

/// About `n` points along the polyline, spread by length, each tagged with its segment.
/// Every vertex is included, so consecutive points never straddle a vertex.
fn length_samples(nodes: &[ComplexTime], n: usize) -> Vec<(usize, ComplexTime)> {
    let lengths: Vec<f64> = nodes.windows(2).map(|s| (s[1] - s[0]).norm()).collect();
    let total: f64 = lengths.iter().sum();
    let mut out = Vec::with_capacity(n + nodes.len());
    for (k, seg) in nodes.windows(2).enumerate() {
        let m = if total > 0.0 {
            ((n as f64 * lengths[k] / total).ceil() as usize).max(1)
        } else {
            1
        };
        let first = usize::from(k > 0);
        for i in first..=m {
            out.push((k, seg[0] + (seg[1] - seg[0]) * (i as f64 / m as f64)));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Momentum;
    use crate::units::argon_near_ir;

    fn orbit(px: f64, pz: f64) -> Orbit {
        Orbit::new(Momentum::new(px, pz), &argon_near_ir()).unwrap()
    }

    fn horizon(o: &Orbit) -> f64 {
        o.saddle.t0() + 2.75 * o.fp.period()
    }

    #[test]
    fn no_gates_gives_standard_contour() {
        let o = orbit(0.1, 0.2);
        let h = horizon(&o);
        assert_eq!(build_contour(&[], &o, h, DEFAULT_KINETIC_SLACK).unwrap(), ContourPath::standard(&o, h));
    }

    #[test]
    fn coulomb_path_starts_at_t_kappa() {
        let o = orbit(0.1, 0.2);
        let c = ContourPath::standard(&o, horizon(&o)).coulomb_nodes(&o);
        assert_eq!(c[0], o.saddle.t_kappa);
        assert_eq!(c.len(), 3);
    }

    #[test]
    fn saddle_and_conjugate_are_never_gates() {
        let o = orbit(0.1, 0.2);
        let h = horizon(&o);
        let roots = find_ca_roots(&o, &TimeWindow::default_for(&o, h), &RootSearch::default());
        assert!(roots.iter().any(|r| r.saddle));
        for g in select_gates(&roots, &o, DEFAULT_KINETIC_SLACK) {
            assert!(!g.saddle && !g.conjugate);
        }
    }

    #[test]
    fn gates_are_sorted_and_real_parts_increase_after_descent() {
        for (px, pz) in [(0.1, 0.2), (0.02, 0.8), (0.05, 1.1)] {
            let o = orbit(px, pz);
            let path = navigate(&o, horizon(&o), DEFAULT_KINETIC_SLACK).unwrap();
            let start = path.nodes.len() - path.selected_ca.len() - 1;
            for w in path.nodes[start..].windows(2) {
                assert!(w[1].re >= w[0].re, "{:?}", path.nodes);
            }
            assert_eq!(path.nodes.last().unwrap().im, 0.0);
        }
    }

    #[test]
    fn standard_contour_is_flagged_at_crossing_momentum() {
        let o = orbit(0.02, 0.8);
        let h = horizon(&o);
        let rep = validate_contour(&ContourPath::standard(&o, h).nodes, &o, VALIDATION_SAMPLES).unwrap();
        assert!(!rep.continuous);
        assert_eq!(rep.crossings.len(), 1);
        assert_eq!(rep.crossings[0].0, 1);
        let nav = navigate(&o, h, DEFAULT_KINETIC_SLACK).unwrap();
        let rep = validate_contour(&nav.nodes, &o, VALIDATION_SAMPLES).unwrap();
        assert!(rep.continuous, "{:?} {rep:?}", nav.nodes);
    }

    #[test]
    fn smooth_contours_have_small_jumps() {
        for (px, pz) in [(0.1, 0.2), (0.3, 0.5), (0.1, -0.3)] {
            let o = orbit(px, pz);
            let nav = navigate(&o, horizon(&o), DEFAULT_KINETIC_SLACK).unwrap();
            let rep = validate_contour(&nav.coulomb_nodes(&o), &o, VALIDATION_SAMPLES).unwrap();
            assert!(rep.continuous);
            assert!(rep.max_jump < 1e-3, "p=({px},{pz}): {}", rep.max_jump);
        }
    }

    #[test]
    fn crossing_is_an_order_one_jump() {
        let o = orbit(0.02, 0.8);
        let rep = validate_contour(&ContourPath::standard(&o, horizon(&o)).nodes, &o, VALIDATION_SAMPLES).unwrap();
        assert!(rep.max_jump > 1.0);
    }

    #[test]
    fn rejects_degenerate_input() {
        let o = orbit(0.1, 0.2);
        assert!(validate_contour(&[o.ts()], &o, 10).is_err());
        assert!(build_contour(&[], &o, o.saddle.t0() - 1.0, DEFAULT_KINETIC_SLACK).is_err());
    }
}
