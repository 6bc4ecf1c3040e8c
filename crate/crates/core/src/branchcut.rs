//! Branch structure of the complex distance `sqrt(r(t)²)`. Branch points are
//! simple zeros of `r²`; cuts follow `r² ∈ (-∞, 0)` and decide whether a
//! recollision gate is open or closed.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SlalomError};
use crate::field::ComplexTime;
use crate::orbit::Orbit;
use crate::tca::{find_ca_roots, CAPoint, RootSearch, TimeWindow, DEDUP_PHASE};

/// Relative bound on `|Im r²|` for accepted cut nodes.
pub const CUT_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CutFamily {
    /// Zero of `z - i·p_⊥(t - ts)`.
    Plus,
    /// Zero of `z + i·p_⊥(t - ts)`.
    Minus,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub t: ComplexTime,
    pub family: CutFamily,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CutEnd {
    LeftWindow,
    ImaginaryLimit,
    NodeLimit,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CutCurve {
    pub branch_point: BranchPoint,
    pub points: Vec<ComplexTime>,
    pub crosses_real_axis: bool,
    pub end: CutEnd,
}

/// Complex distance sampled on a rectangular grid, row-major with the
/// imaginary axis as the slow index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceField {
    pub re_axis: Vec<f64>,
    pub im_axis: Vec<f64>,
    pub sqrt_re: Vec<f64>,
    pub sqrt_im: Vec<f64>,
    /// Node flagged when the principal root jumps between it and its right or upper neighbour.
    pub flags: Vec<bool>,
}

impl DistanceField {
    pub fn nx(&self) -> usize {
        self.re_axis.len()
    }

    pub fn ny(&self) -> usize {
        self.im_axis.len()
    }

    pub fn value(&self, i: usize, j: usize) -> Complex64 {
        let k = j * self.nx() + i;
        Complex64::new(self.sqrt_re[k], self.sqrt_im[k])
    }

    /// Connected groups (8-neighbour) of flagged nodes.
    pub fn flag_clusters(&self) -> Vec<Vec<(usize, usize)>> {
        let (nx, ny) = (self.nx(), self.ny());
        let mut seen = vec![false; nx * ny];
        let mut out = Vec::new();
        for start in 0..nx * ny {
            if !self.flags[start] || seen[start] {
                continue;
            }
            let mut cluster = Vec::new();
            let mut stack = vec![start];
            seen[start] = true;
            while let Some(k) = stack.pop() {
                let (i, j) = (k % nx, k / nx);
                cluster.push((i, j));
                for dj in -1i64..=1 {
                    for di in -1i64..=1 {
                        let (a, b) = (i as i64 + di, j as i64 + dj);
                        if a < 0 || b < 0 || a >= nx as i64 || b >= ny as i64 {
                            continue;
                        }
                        let n = b as usize * nx + a as usize;
                        if self.flags[n] && !seen[n] {
                            seen[n] = true;
                            stack.push(n);
                        }
                    }
                }
            }
            out.push(cluster);
        }
        out
    }
}

/// Whether the principal square root is discontinuous between two samples of `r²`.
pub fn crosses_cut(a: Complex64, b: Complex64) -> bool {
    a.re < 0.0 && b.re < 0.0 && (a.im < 0.0) != (b.im < 0.0)
}

/// `sqrt(r²)` on a `nx × ny` grid over `region`, with cut flags.
pub fn distance_field(orbit: &Orbit, region: &TimeWindow, nx: usize, ny: usize) -> Result<DistanceField> {
    if nx < 2 || ny < 2 {
        return Err(SlalomError::InvalidArgument(format!("resolution must be at least 2x2, got {nx}x{ny}")));
    }
    let re_axis: Vec<f64> = (0..nx)
        .map(|i| region.re_min + region.width() * i as f64 / (nx - 1) as f64)
        .collect();
    let im_axis: Vec<f64> = (0..ny)
        .map(|j| region.im_min + region.height() * j as f64 / (ny - 1) as f64)
        .collect();
    let r2: Vec<Complex64> = im_axis
        .par_iter()
        .flat_map_iter(|&im| re_axis.iter().map(move |&re| orbit.r_squared(Complex64::new(re, im))))
        .collect();
    let mut flags = vec![false; nx * ny];
    for j in 0..ny {
        for i in 0..nx {
            let k = j * nx + i;
            let right = i + 1 < nx && crosses_cut(r2[k], r2[k + 1]);
            let up = j + 1 < ny && crosses_cut(r2[k], r2[k + nx]);
            flags[k] = right || up;
        }
    }
    let roots: Vec<Complex64> = r2.iter().map(|v| v.sqrt()).collect();
    Ok(DistanceField {
        re_axis,
        im_axis,
        sqrt_re: roots.iter().map(|v| v.re).collect(),
        sqrt_im: roots.iter().map(|v| v.im).collect(),
        flags,
    })
}

/// `h(t) = z ∓ i·p_⊥(t - ts)` and its derivative.
fn factor(orbit: &Orbit, family: CutFamily, t: ComplexTime) -> (Complex64, Complex64) {
    let st = orbit.state(t);
    let ip = Complex64::new(0.0, orbit.p.perp());
    let sign = match family {
        CutFamily::Plus => -1.0,
        CutFamily::Minus => 1.0,
    };
    (st.z + ip * (t - orbit.ts()) * sign, st.vz + ip * sign)
}

fn newton_factor(orbit: &Orbit, family: CutFamily, seed: ComplexTime) -> Option<ComplexTime> {
    let mut t = seed;
    let limit = 2.0 / orbit.fp.omega();
    for _ in 0..60 {
        let (h, dh) = factor(orbit, family, t);
        let mut step = h / dh;
        if !step.is_finite() {
            return None;
        }
        let n = step.norm();
        if n > limit {
            step *= limit / n;
        }
        t -= step;
        if n <= 1e-14 * t.norm().max(1.0) {
            return Some(t);
        }
    }
    None
}

/// Simple zeros of `r²` inside `window` (the double zero at `ts` is excluded).
pub fn find_branch_points(orbit: &Orbit, window: &TimeWindow, opts: &RootSearch) -> Result<Vec<BranchPoint>> {
    if orbit.p.perp() == 0.0 {
        return Err(SlalomError::InvalidArgument(
            "branch points need p_perp > 0; on axis the cuts collapse onto zeros of z".into(),
        ));
    }
    let w = orbit.fp.omega();
    let tol = DEDUP_PHASE / w;
    let mut out: Vec<BranchPoint> = Vec::new();
    for family in [CutFamily::Plus, CutFamily::Minus] {
        for i in 0..opts.n_re {
            let re = window.re_min + window.width() * (i as f64 + 0.5) / opts.n_re as f64;
            for j in 0..opts.n_im {
                let im = window.im_min + window.height() * (j as f64 + 0.5) / opts.n_im as f64;
                let Some(t) = newton_factor(orbit, family, Complex64::new(re, im)) else {
                    continue;
                };
                if !window.contains(t) || (t - orbit.ts()).norm() < tol * 10.0 {
                    continue;
                }
                if out.iter().any(|b| b.family == family && (b.t - t).norm() < tol) {
                    continue;
                }
                out.push(BranchPoint { t, family });
            }
        }
    }
    out.sort_by(|a, b| a.t.re.total_cmp(&b.t.re));
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TraceOptions {
    /// First step in units of `1/ω`.
    pub initial_step: f64,
    /// Largest step in units of `1/ω`.
    pub max_step: f64,
    /// Tracing stops beyond `|Im t| = im_limit · τ_T`.
    pub im_limit: f64,
    pub max_nodes: usize,
}

impl Default for TraceOptions {
    fn default() -> Self {
        Self {
            initial_step: 1e-3,
            max_step: 0.02,
            im_limit: 3.0,
            max_nodes: 50_000,
        }
    }
}

/// Pulls `t` back onto `Im r² = 0` along the direction that keeps `Re r²` fixed.
fn correct(orbit: &Orbit, mut t: ComplexTime) -> Option<(ComplexTime, Complex64, Complex64)> {
    for _ in 0..8 {
        let (g, dg) = orbit.r_squared_with_derivative(t);
        if g.im.abs() < 0.1 * CUT_TOL * g.norm() {
            return (g.re < 0.0).then_some((t, g, dg));
        }
        let dt = Complex64::new(0.0, -g.im) / dg;
        if !dt.is_finite() {
            return None;
        }
        t += dt;
    }
    let (g, dg) = orbit.r_squared_with_derivative(t);
    (g.im.abs() < CUT_TOL * g.norm() && g.re < 0.0).then_some((t, g, dg))
}

/// Follows the cut leaving `bp` until it exits `window` or `|Im t| > im_limit·τ_T`.
pub fn trace_cut(bp: &BranchPoint, orbit: &Orbit, window: &TimeWindow, opts: &TraceOptions) -> Result<CutCurve> {
    let w = orbit.fp.omega();
    let tau = orbit.saddle.tau();
    let h_min = 1e-12 / w;
    let h_max = opts.max_step / w;
    let mut h = opts.initial_step / w;
    let mut points = vec![bp.t];

    // At a simple zero r² ≈ c (t - tb), so the cut leaves along -1/c.
    let (_, c0) = orbit.r_squared_with_derivative(bp.t);
    let mut dir = -c0.inv() / c0.inv().norm();
    let mut t = bp.t;
    let end = loop {
        if points.len() >= opts.max_nodes {
            break CutEnd::NodeLimit;
        }
        let trial = correct(orbit, t + dir * h);
        let accepted = trial.filter(|(tn, _, dg)| {
            let nd = -dg.inv() / dg.inv().norm();
            // Reject steps that jump across a turn of the curve.
            (nd * dir.conj()).re > 0.5 && (tn - t).norm() < 2.0 * h
        });
        match accepted {
            Some((tn, g, dg)) => {
                let nd = -dg.inv() / dg.inv().norm();
                t = tn;
                dir = nd;
                points.push(t);
                let scale = 0.05 * (g / dg).norm();
                h = (h * 1.5).min(h_max).min(scale.max(opts.initial_step / w));
                if t.re < window.re_min || t.re > window.re_max {
                    break CutEnd::LeftWindow;
                }
                if t.im.abs() > opts.im_limit * tau {
                    break CutEnd::ImaginaryLimit;
                }
            }
            None => {
                h *= 0.5;
                if h < h_min {
                    return Err(SlalomError::StepUnderflow { re: t.re, im: t.im });
                }
            }
        }
    };
    let crosses_real_axis = points.windows(2).any(|p| (p[0].im < 0.0) != (p[1].im < 0.0));
    Ok(CutCurve {
        branch_point: *bp,
        points,
        crosses_real_axis,
        end,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Topology {
    Open,
    Closed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopologyReport {
    /// From the sign of `Re v²` at the outer gate saddles.
    pub by_velocity: Topology,
    /// From whether any traced cut crosses the real axis.
    pub by_cuts: Option<Topology>,
    pub consistent: bool,
    pub gates: Vec<CAPoint>,
    pub cuts: Vec<CutCurve>,
    /// Tracing failures, reported rather than resolved.
    pub trace_errors: Vec<String>,
}

impl TopologyReport {
    pub fn topology(&self) -> Topology {
        self.by_velocity
    }
}

/// Open/closed topology of the recollision inside `window`, by both criteria.
///
/// The gate triple is the three closest-approach roots nearest to the real
/// axis inside the window; its outer members decide the velocity criterion.
pub fn classify_topology(orbit: &Orbit, window: &TimeWindow, trace_cuts: bool) -> Result<TopologyReport> {
    let roots = find_ca_roots(orbit, window, &RootSearch::default());
    let mut near: Vec<CAPoint> = roots.into_iter().filter(|r| !r.saddle && !r.conjugate).collect();
    near.sort_by(|a, b| a.t.im.abs().total_cmp(&b.t.im.abs()));
    near.truncate(3);
    near.sort_by(|a, b| a.t.re.total_cmp(&b.t.re));
    let by_velocity = if near.len() == 3 && near[0].re_v2 > 0.0 && near[2].re_v2 > 0.0 {
        Topology::Closed
    } else {
        Topology::Open
    };

    let mut cuts = Vec::new();
    let mut trace_errors = Vec::new();
    let by_cuts = if trace_cuts && orbit.p.perp() > 0.0 {
        let bps = find_branch_points(orbit, window, &RootSearch::default())?;
        let opts = TraceOptions::default();
        for bp in &bps {
            match trace_cut(bp, orbit, window, &opts) {
                Ok(c) => cuts.push(c),
                Err(e) => trace_errors.push(e.to_string()),
            }
        }
        if cuts.iter().any(|c| c.crosses_real_axis) {
            Some(Topology::Closed)
        } else if trace_errors.is_empty() {
            Some(Topology::Open)
        } else {
            None
        }
    } else {
        None
    };
    let consistent = by_cuts.map_or(true, |c| c == by_velocity);
    Ok(TopologyReport {
        by_velocity,
        by_cuts,
        consistent,
        gates: near,
        cuts,
        trace_errors,
    })
}

/// Window of half a laser period centred on real time `center`, `|Im t| ≤ im_half`.
pub fn recollision_window(orbit: &Orbit, center: f64, im_half: f64) -> TimeWindow {
    let half = 0.25 * orbit.fp.period();
    TimeWindow {
        re_min: center - half,
        re_max: center + half,
        im_min: -im_half,
        im_max: im_half,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::field::Momentum;
    use crate::units::argon_near_ir;
    use std::f64::consts::PI;

    fn orbit(px: f64, pz: f64) -> Orbit {
        Orbit::new(Momentum::new(px, pz), &argon_near_ir()).unwrap()
    }

    #[test]
    fn field_vanishes_at_saddle() {
        let o = orbit(0.1, 0.3);
        let ts = o.ts();
        let region = TimeWindow::new(ts.re - 1.0, ts.re + 1.0, ts.im - 1.0, ts.im).unwrap();
        let f = distance_field(&o, &region, 3, 2).unwrap();
        assert!(f.value(1, 1).norm() < 1e-6);
    }

    #[test]
    fn asymptotically_real_distance() {
        let o = orbit(0.1, 0.3);
        let w = o.fp.omega();
        let t = 40.0 * PI / w;
        let region = TimeWindow::new(t - 1.0, t + 1.0, -1.0, 1.0).unwrap();
        let f = distance_field(&o, &region, 3, 3).unwrap();
        let v = f.value(1, 1);
        let expect = o.p.norm() * (t - o.ts().re);
        assert!((v.re - expect).abs() < 0.05 * expect, "{v} vs {expect}");
        assert!(v.im.abs() < 0.05 * v.re);
    }

    #[test]
    fn rejects_tiny_resolution() {
        let o = orbit(0.1, 0.3);
        let region = TimeWindow::new(0.0, 1.0, -1.0, 1.0).unwrap();
        assert!(distance_field(&o, &region, 1, 5).is_err());
    }

    #[test]
    fn branch_points_are_zeros_of_r_squared() {
        let o = orbit(0.02, 0.8);
        let h = o.ts().re + 2.75 * o.fp.period();
        let bps = find_branch_points(&o, &TimeWindow::default_for(&o, h), &RootSearch::default()).unwrap();
        assert!(!bps.is_empty());
        let zq = o.fp.quiver_radius();
        for b in &bps {
            assert!(o.r_squared(b.t).norm() < 1e-16 * zq * zq, "{b:?}: {}", o.r_squared(b.t).norm());
        }
    }

    #[test]
    fn on_axis_has_no_branch_points() {
        let o = orbit(0.0, 0.8);
        let w = TimeWindow::default_for(&o, 300.0);
        assert!(find_branch_points(&o, &w, &RootSearch::default()).is_err());
    }

    #[test]
    fn traced_nodes_lie_on_negative_axis() {
        let o = orbit(0.02, 0.8);
        let h = o.ts().re + 2.75 * o.fp.period();
        let win = TimeWindow::default_for(&o, h);
        let bps = find_branch_points(&o, &win, &RootSearch::default()).unwrap();
        for b in &bps {
            let cut = trace_cut(b, &o, &win, &TraceOptions::default()).unwrap();
            for t in &cut.points[1..] {
                let g = o.r_squared(*t);
                assert!(g.re < 0.0 && g.im.abs() < CUT_TOL * g.norm());
            }
        }
    }

    #[test]
    fn cut_crossing_detector() {
        assert!(crosses_cut(Complex64::new(-1.0, 1e-3), Complex64::new(-1.0, -1e-3)));
        assert!(!crosses_cut(Complex64::new(1.0, 1e-3), Complex64::new(1.0, -1e-3)));
    }

    fn crossing_window(o: &Orbit) -> TimeWindow {
        let w = o.fp.omega();
        TimeWindow::new(0.9 * PI / w, 1.4 * PI / w, -0.5 / w, 0.5 / w).unwrap()
    }

    #[test]
    fn standard_contour_crosses_a_cut_after_first_return() {
        let o = orbit(0.02, 0.8);
        let w = o.fp.omega();
        let n = 20_000;
        let (a, b) = (o.ts().re, o.ts().re + 2.75 * o.fp.period());
        let mut crossings = Vec::new();
        let mut prev = o.r_squared(Complex64::new(a, 0.0));
        for i in 1..=n {
            let t = a + (b - a) * i as f64 / n as f64;
            let cur = o.r_squared(Complex64::new(t, 0.0));
            if crosses_cut(prev, cur) {
                crossings.push(t * w / PI);
            }
            prev = cur;
        }
        assert_eq!(crossings.len(), 1, "{crossings:?}");
        assert!((crossings[0] - 1.13).abs() < 0.05, "{crossings:?}");

        let bps = find_branch_points(&o, &crossing_window(&o), &RootSearch::default()).unwrap();
        let crossing: Vec<_> = bps
            .iter()
            .map(|b| trace_cut(b, &o, &TimeWindow::default_for(&o, b_end(&o)), &TraceOptions::default()).unwrap())
            .filter(|c| c.crosses_real_axis)
            .collect();
        assert_eq!(crossing.len(), 1);
    }

    fn b_end(o: &Orbit) -> f64 {
        o.ts().re + 2.75 * o.fp.period()
    }

    #[test]
    fn flag_clusters_match_branch_points() {
        for px in [0.01, 0.02, 0.1] {
            let o = orbit(px, 0.8);
            let win = crossing_window(&o);
            let bps = find_branch_points(&o, &win, &RootSearch::default()).unwrap();
            let field = distance_field(&o, &win, 600, 400).unwrap();
            assert_eq!(field.flag_clusters().len(), bps.len(), "px={px}");
            assert_eq!(bps.len(), 2);
        }
    }

    #[test]
    fn window_spans_half_a_period() {
        let o = orbit(0.1, 0.3);
        let w = recollision_window(&o, 10.0, 1.0);
        assert!((w.width() - 0.5 * o.fp.period()).abs() < 1e-12);
    }

    fn topology_at(pz_scaled: f64) -> TopologyReport {
        let fp = argon_near_ir();
        let o = orbit(0.001, pz_scaled * fp.momentum_scale());
        let win = recollision_window(&o, 2.0 * PI / fp.omega(), 3.0 * o.saddle.tau());
        classify_topology(&o, &win, true).unwrap()
    }

    #[test]
    fn topology_changes_across_soft_recollision() {
        let open = topology_at(0.063);
        let closed = topology_at(0.0635);
        assert_eq!(open.by_velocity, Topology::Open);
        assert_eq!(open.by_cuts, Some(Topology::Open));
        assert_eq!(closed.by_velocity, Topology::Closed);
        assert_eq!(closed.by_cuts, Some(Topology::Closed));
        assert!(open.consistent && closed.consistent);
    }

    #[test]
    fn branch_points_flank_gates() {
        let r = topology_at(0.0635);
        assert_eq!(r.gates.len(), 3);
        let bps: Vec<f64> = r.cuts.iter().map(|c| c.branch_point.t.re).collect();
        // Every gap between consecutive gates holds at least one branch point.
        for g in r.gates.windows(2) {
            assert!(bps.iter().any(|&b| b > g[0].t.re && b < g[1].t.re), "{bps:?} {:?}", r.gates);
        }
    }
}
