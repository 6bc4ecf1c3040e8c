//! Complex closest-approach times: roots of `f(t) = r(t)·v(t)` in a
//! rectangle of the complex time plane, with an argument-principle audit
//! of completeness and a continuous root tracker for monodromy loops.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::classical::solve_soft_recollision;
use crate::error::{Result, SlalomError};
use crate::field::{ComplexTime, FieldParams, Momentum};
use crate::orbit::Orbit;
use crate::quad::integrate_segment;

/// Residual bound every returned root satisfies.
pub const CA_RESIDUAL_TOL: f64 = 1e-10;
/// Roots closer than this (in units of `1/ω`) are merged.
pub const DEDUP_PHASE: f64 = 1e-6;

/// Closed rectangle of complex time; the real range excludes its lower edge.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeWindow {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
}

impl TimeWindow {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64) -> Result<Self> {
        let ok = [re_min, re_max, im_min, im_max].iter().all(|v| v.is_finite()) && re_max > re_min && im_max > im_min;
        if !ok {
            return Err(SlalomError::InvalidArgument(format!(
                "degenerate time window re=({re_min}, {re_max}] im=[{im_min}, {im_max}]"
            )));
        }
        Ok(Self { re_min, re_max, im_min, im_max })
    }

    /// Window given by real phases `ωt` and imaginary times.
    pub fn from_phase(phase_min: f64, phase_max: f64, im_min: f64, im_max: f64, omega: f64) -> Result<Self> {
        Self::new(phase_min / omega, phase_max / omega, im_min, im_max)
    }

    /// `Re(ωt) ∈ (Re(ωts) - π/2, ωT]`, `Im t ∈ [-2τ_T, 2τ_T]`.
    pub fn default_for(orbit: &Orbit, horizon: f64) -> Self {
        let w = orbit.fp.omega();
        let tau = orbit.saddle.tau();
        Self {
            re_min: orbit.ts().re - FRAC_PI_2 / w,
            re_max: horizon,
            im_min: -2.0 * tau,
            im_max: 2.0 * tau,
        }
    }

    pub fn contains(&self, t: ComplexTime) -> bool {
        t.re > self.re_min && t.re <= self.re_max && t.im >= self.im_min && t.im <= self.im_max
    }

    pub fn width(&self) -> f64 {
        self.re_max - self.re_min
    }

    pub fn height(&self) -> f64 {
        self.im_max - self.im_min
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RootSearch {
    /// Seeds along the real direction.
    pub n_re: usize,
    /// Seeds along the imaginary direction.
    pub n_im: usize,
    /// Completeness audit: strip width in units of laser phase.
    pub strip_phase: f64,
    /// Reseeding rounds for strips whose audit finds missing roots.
    pub refine_levels: usize,
    pub audit: bool,
}

impl Default for RootSearch {
    fn default() -> Self {
        Self {
            n_re: 60,
            n_im: 40,
            strip_phase: FRAC_PI_2,
            refine_levels: 3,
            audit: true,
        }
    }
}

/// A complex closest-approach time.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CAPoint {
    pub t: ComplexTime,
    /// `Re[v(t)²]`.
    pub re_v2: f64,
    /// Sign of `Im t` (0 on the real axis).
    pub im_sign: i8,
    /// `|r(t)·v(t)|`.
    pub residual: f64,
    /// `Re f'(t) > 0`: the complex distance has a minimum-like saddle here.
    pub minimum: bool,
    /// The ionization saddle itself (`r(ts) = 0`).
    pub saddle: bool,
    /// The negative-imaginary partner of the ionization saddle, kept but excluded from contours.
    pub conjugate: bool,
}

impl CAPoint {
    fn new(orbit: &Orbit, t: ComplexTime, f: Complex64, df: Complex64) -> Self {
        let w = orbit.fp.omega();
        let ts = orbit.ts();
        let im_sign = if t.im > 0.0 {
            1
        } else if t.im < 0.0 {
            -1
        } else {
            0
        };
        Self {
            t,
            re_v2: orbit.velocity_squared(t).re,
            im_sign,
            residual: f.norm(),
            minimum: df.re > 0.0,
            saddle: (t - ts).norm() * w < DEDUP_PHASE * 10.0,
            conjugate: false,
        }
    }
}

/// Outcome of a search, including the completeness audit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaSearch {
    pub roots: Vec<CAPoint>,
    /// Roots counted by the argument principle, when the audit succeeded everywhere.
    pub expected: Option<usize>,
    /// Every audited strip holds as many roots as the argument principle predicts.
    pub complete: bool,
}

/// Newton iteration on `r·v = 0`.
pub fn newton_ca(orbit: &Orbit, seed: ComplexTime, max_iter: usize) -> Option<ComplexTime> {
    let mut t = seed;
    let limit = 2.0 / orbit.fp.omega();
    for _ in 0..max_iter {
        let (f, df) = orbit.closest_approach(t);
        let mut step = f / df;
        if !step.is_finite() {
            return None;
        }
        let n = step.norm();
        if n > limit {
            step *= limit / n;
        }
        t -= step;
        if n <= 1e-13 * t.norm().max(1.0) {
            let (f, _) = orbit.closest_approach(t);
            return (f.norm() < CA_RESIDUAL_TOL).then_some(t);
        }
    }
    None
}

fn insert_root(roots: &mut Vec<CAPoint>, orbit: &Orbit, t: ComplexTime, window: &TimeWindow) -> bool {
    if !window.contains(t) {
        return false;
    }
    let tol = DEDUP_PHASE / orbit.fp.omega();
    if roots.iter().any(|r| (r.t - t).norm() < tol) {
        return false;
    }
    let (f, df) = orbit.closest_approach(t);
    roots.push(CAPoint::new(orbit, t, f, df));
    true
}

fn seed_rect(orbit: &Orbit, rect: &TimeWindow, nre: usize, nim: usize, window: &TimeWindow, roots: &mut Vec<CAPoint>) {
    for i in 0..nre {
        let re = rect.re_min + rect.width() * (i as f64 + 0.5) / nre as f64;
        for j in 0..nim {
            let im = rect.im_min + rect.height() * (j as f64 + 0.5) / nim as f64;
            if let Some(t) = newton_ca(orbit, Complex64::new(re, im), 60) {
                insert_root(roots, orbit, t, window);
            }
        }
    }
}

/// `(1/2πi) ∮ f'/f` along a straight edge, as a complex number.
fn log_derivative_edge(orbit: &Orbit, a: ComplexTime, b: ComplexTime) -> Option<Complex64> {
    let q = integrate_segment(
        |t| {
            let (f, df) = orbit.closest_approach(t);
            df / f
        },
        a,
        b,
        1e-6,
        0.0,
        400,
    )
    .ok()?;
    Some(q.value / Complex64::new(0.0, 2.0 * PI))
}

/// Root count in each vertical strip of `window` from the argument principle.
///
/// Interior strip boundaries are nudged off nearby roots; `None` marks strips
/// whose outer edges pass too close to a root to integrate reliably.
fn strip_counts(orbit: &Orbit, window: &TimeWindow, strips: usize) -> Vec<(TimeWindow, Option<usize>)> {
    let lo = window.im_min;
    let hi = window.im_max;
    let width = window.width() / strips as f64;
    let mut xs = vec![window.re_min];
    for k in 1..strips {
        xs.push(window.re_min + k as f64 * width);
    }
    xs.push(window.re_max);

    // Vertical edges, upward orientation; interior ones may move sideways.
    let mut verticals = Vec::with_capacity(xs.len());
    for (k, x) in xs.iter_mut().enumerate() {
        let movable = k > 0 && k < strips;
        let mut value = None;
        for attempt in 0..4 {
            let xk = if movable { *x + width * 0.013 * attempt as f64 } else { *x };
            if let Some(v) = log_derivative_edge(orbit, Complex64::new(xk, lo), Complex64::new(xk, hi)) {
                *x = xk;
                value = Some(v);
                break;
            }
            if !movable {
                break;
            }
        }
        verticals.push(value);
    }

    (0..strips)
        .map(|k| {
            let rect = TimeWindow {
                re_min: xs[k],
                re_max: xs[k + 1],
                im_min: lo,
                im_max: hi,
            };
            let count = (|| {
                let bottom = log_derivative_edge(orbit, Complex64::new(xs[k], lo), Complex64::new(xs[k + 1], lo))?;
                let top = log_derivative_edge(orbit, Complex64::new(xs[k + 1], hi), Complex64::new(xs[k], hi))?;
                let total = bottom + verticals[k + 1]? + top - verticals[k]?;
                let n = total.re.round();
                ((total.re - n).abs() < 0.05 && total.im.abs() < 0.05 && n >= 0.0).then_some(n as usize)
            })();
            (rect, count)
        })
        .collect()
}

/// Number of closest-approach roots inside `window` from the argument principle.
pub fn argument_principle_count(orbit: &Orbit, window: &TimeWindow) -> Option<usize> {
    strip_counts(orbit, window, 1)[0].1
}

/// Newton roots from a uniform seed grid, audited strip by strip with the
/// argument principle and reseeded where the counts disagree.
pub fn search_ca_roots(orbit: &Orbit, window: &TimeWindow, opts: &RootSearch) -> CaSearch {
    let mut roots = Vec::new();
    seed_rect(orbit, window, opts.n_re.max(1), opts.n_im.max(1), window, &mut roots);
    let mut expected = None;
    let mut complete = true;

    if opts.audit {
        let w = orbit.fp.omega();
        let strips = ((window.width() * w / opts.strip_phase).ceil() as usize).max(1);
        let counts = strip_counts(orbit, window, strips);
        let per_strip_re = (opts.n_re / strips).max(2);
        let mut total = Some(0usize);
        for (rect, count) in counts {
            let inside = |roots: &[CAPoint]| roots.iter().filter(|r| rect.contains(r.t)).count();
            match count {
                Some(n) => {
                    total = total.map(|s| s + n);
                    let mut level = 0;
                    while inside(&roots) < n && level < opts.refine_levels {
                        level += 1;
                        let scale = 1 << level;
                        seed_rect(orbit, &rect, per_strip_re * 2 * scale, opts.n_im * scale, window, &mut roots);
                    }
                    if inside(&roots) != n {
                        complete = false;
                    }
                }
                None => {
                    total = None;
                    complete = false;
                }
            }
        }
        expected = total;
    }

    roots.sort_by(|a, b| a.t.re.total_cmp(&b.t.re));
    flag_conjugate(orbit, &mut roots);
    CaSearch { roots, expected, complete }
}

/// Closest-approach roots of one orbit inside `window`.
pub fn find_ca_roots(orbit: &Orbit, window: &TimeWindow, opts: &RootSearch) -> Vec<CAPoint> {
    search_ca_roots(orbit, window, opts).roots
}

/// Marks the root nearest to `conj(ts)` when it lies in the lower half plane
/// within the ionization half cycle.
fn flag_conjugate(orbit: &Orbit, roots: &mut [CAPoint]) {
    let ts = orbit.ts();
    let target = ts.conj();
    let w = orbit.fp.omega();
    let candidate = roots
        .iter_mut()
        .filter(|r| r.t.im < 0.0 && (w * (r.t.re - ts.re)).abs() < FRAC_PI_2)
        .min_by(|a, b| (a.t - target).norm().total_cmp(&(b.t - target).norm()));
    if let Some(r) = candidate {
        if (r.t - target).norm() < 0.5 * ts.im {
            r.conjugate = true;
        }
    }
}

/// Permutation of tracked roots: entry `i` is the starting index that root `i` ends on.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Permutation(pub Vec<usize>);

impl Permutation {
    pub fn identity(n: usize) -> Self {
        Self((0..n).collect())
    }

    /// Apply `self` after `first`.
    pub fn after(&self, first: &Permutation) -> Permutation {
        Permutation(first.0.iter().map(|&j| self.0[j]).collect())
    }

    pub fn is_identity(&self) -> bool {
        self.0.iter().enumerate().all(|(i, &j)| i == j)
    }

    /// Lengths of the disjoint cycles, sorted descending.
    pub fn cycle_type(&self) -> Vec<usize> {
        let mut seen = vec![false; self.0.len()];
        let mut out = Vec::new();
        for s in 0..self.0.len() {
            if seen[s] {
                continue;
            }
            let mut len = 0;
            let mut i = s;
            while !seen[i] {
                seen[i] = true;
                i = self.0[i];
                len += 1;
            }
            out.push(len);
        }
        out.sort_unstable_by(|a, b| b.cmp(a));
        out
    }

    pub fn is_full_cycle(&self) -> bool {
        self.cycle_type() == vec![self.0.len()]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Monodromy {
    pub permutation: Permutation,
    pub start: Vec<ComplexTime>,
    pub end: Vec<ComplexTime>,
    /// Momentum points actually visited after adaptive refinement.
    pub substeps: usize,
    /// Largest mismatch between an end root and the start root it was matched to.
    pub closure_error: f64,
}

/// Closed momentum loop used by the tracker: a semicircle with `p_x ≥ p_x,c`
/// from the top of the circle to its bottom, closed along the diameter.
pub fn semicircle_loop(center: Momentum, radius: f64, steps: usize) -> Vec<Momentum> {
    let steps = steps.max(2);
    let mut pts = Vec::with_capacity(2 * steps);
    for k in 0..steps {
        let th = PI * k as f64 / (steps - 1) as f64;
        pts.push(Momentum::new(center.px + radius * th.sin(), center.pz + radius * th.cos()));
    }
    for k in 1..steps {
        let s = -1.0 + 2.0 * k as f64 / (steps - 1) as f64;
        pts.push(Momentum::new(center.px, center.pz + radius * s));
    }
    pts
}

fn min_spacing(ts: &[ComplexTime]) -> f64 {
    let mut m = f64::INFINITY;
    for i in 0..ts.len() {
        for j in i + 1..ts.len() {
            m = m.min((ts[i] - ts[j]).norm());
        }
    }
    m
}

/// Follows `start` roots continuously along the momentum path.
pub fn track_roots(path: &[Momentum], start: &[ComplexTime], fp: &FieldParams) -> Result<(Vec<ComplexTime>, usize)> {
    let mut cur = start.to_vec();
    let mut pts: Vec<Momentum> = path.to_vec();
    let mut i = 0;
    let mut visited = 1;
    while i + 1 < pts.len() {
        let b = pts[i + 1];
        let orbit = Orbit::new(b, fp)?;
        let spacing = min_spacing(&cur);
        let next: Option<Vec<_>> = cur.iter().map(|&t| newton_ca(&orbit, t, 60)).collect();
        let ok = next.as_ref().is_some_and(|n| {
            n.iter().zip(&cur).all(|(a, b)| (a - b).norm() < 0.25 * spacing) && min_spacing(n) > 1e-8 / fp.omega()
        });
        if ok {
            cur = next.unwrap_or_default();
            i += 1;
            visited += 1;
        } else {
            let a = pts[i];
            if pts.len() > 200_000 || ((a.px - b.px).abs() + (a.pz - b.pz).abs()) < 1e-14 {
                return Err(SlalomError::TrackingFailed { step: i });
            }
            pts.insert(i + 1, Momentum::new(0.5 * (a.px + b.px), 0.5 * (a.pz + b.pz)));
        }
    }
    Ok((cur, visited))
}

/// The `count` closest-approach roots nearest to real time `reference`.
pub fn roots_near(orbit: &Orbit, reference: f64, count: usize, horizon: f64) -> Vec<ComplexTime> {
    let window = TimeWindow::default_for(orbit, horizon);
    let mut roots: Vec<_> = find_ca_roots(orbit, &window, &RootSearch::default())
        .into_iter()
        .filter(|r| !r.saddle)
        .map(|r| r.t)
        .collect();
    let target = Complex64::new(reference, 0.0);
    roots.sort_by(|a, b| (a - target).norm().total_cmp(&(b - target).norm()));
    roots.truncate(count);
    roots
}

/// Tracks the gate triple of the soft recollision nearest to `center` around
/// the semicircular loop `turns` times and returns the induced permutation.
pub fn monodromy_test(center: Momentum, radius: f64, steps: usize, fp: &FieldParams) -> Result<Monodromy> {
    monodromy_turns(center, radius, steps, 1, fp)
}

pub fn monodromy_turns(center: Momentum, radius: f64, steps: usize, turns: usize, fp: &FieldParams) -> Result<Monodromy> {
    if !(radius >= 0.0 && radius.is_finite()) {
        return Err(SlalomError::InvalidArgument(format!("loop radius must be non-negative, got {radius}")));
    }
    let reference = nearest_recollision_time(center.pz, fp)?;
    let mut path = Vec::new();
    let single = semicircle_loop(center, radius, steps);
    for k in 0..turns.max(1) {
        path.extend_from_slice(if k == 0 { &single[..] } else { &single[1..] });
    }
    let start_orbit = Orbit::new(path[0], fp)?;
    let horizon = start_orbit.ts().re + 2.75 * fp.period();
    let start = roots_near(&start_orbit, reference, 3, horizon);
    if start.len() < 3 {
        return Err(SlalomError::TrackingFailed { step: 0 });
    }
    let (end, substeps) = track_roots(&path, &start, fp)?;
    let mut perm = Vec::with_capacity(end.len());
    let mut closure_error: f64 = 0.0;
    for e in &end {
        let (j, d) = start
            .iter()
            .enumerate()
            .map(|(j, s)| (j, (e - s).norm()))
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .unwrap_or((0, f64::INFINITY));
        perm.push(j);
        closure_error = closure_error.max(d);
    }
    Ok(Monodromy {
        permutation: Permutation(perm),
        start,
        end,
        substeps,
        closure_error,
    })
}

/// Time of the exact soft recollision whose momentum is closest to `pz`.
fn nearest_recollision_time(pz: f64, fp: &FieldParams) -> Result<f64> {
    let mut best: Option<(f64, f64)> = None;
    for n in 1..=8 {
        if let Ok(sr) = solve_soft_recollision(n, fp) {
            let d = (sr.pz_sr - pz).abs();
            if best.map_or(true, |(bd, _)| d < bd) {
                best = Some((d, sr.tr));
            }
        }
    }
    best.map(|(_, t)| t).ok_or(SlalomError::RecollisionNotConverged { n: 1, iterations: 0 })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::classical::classical_ca_scan;
    use crate::units::argon_near_ir;
    use proptest::prelude::*;

    fn orbit(px: f64, pz: f64) -> Orbit {
        Orbit::new(Momentum::new(px, pz), &argon_near_ir()).unwrap()
    }

    fn horizon(o: &Orbit) -> f64 {
        o.ts().re + 2.75 * o.fp.period()
    }

    /// Winding number of `f` around the window boundary from densely sampled phases.
    fn dense_winding(o: &Orbit, w: &TimeWindow, per_edge: usize) -> i64 {
        let corners = [
            Complex64::new(w.re_min, w.im_min),
            Complex64::new(w.re_max, w.im_min),
            Complex64::new(w.re_max, w.im_max),
            Complex64::new(w.re_min, w.im_max),
        ];
        let mut total = 0.0;
        let mut prev = o.closest_approach(corners[0]).0;
        for k in 0..4 {
            let (a, b) = (corners[k], corners[(k + 1) % 4]);
            for i in 1..=per_edge {
                let cur = o.closest_approach(a + (b - a) * (i as f64 / per_edge as f64)).0;
                total += (cur / prev).arg();
                prev = cur;
            }
        }
        (total / (2.0 * PI)).round() as i64
    }

    #[test]
    fn saddle_is_a_root() {
        let o = orbit(0.1, 0.2);
        let roots = find_ca_roots(&o, &TimeWindow::default_for(&o, horizon(&o)), &RootSearch::default());
        let s: Vec<_> = roots.iter().filter(|r| r.saddle).collect();
        assert_eq!(s.len(), 1);
        assert!((s[0].t - o.ts()).norm() < 1e-9);
    }

    #[test]
    fn residual_invariant() {
        for (px, pz) in [(0.1, 0.2), (0.02, 0.8), (0.05, 1.1), (0.3, -0.4)] {
            let o = orbit(px, pz);
            let roots = find_ca_roots(&o, &TimeWindow::default_for(&o, horizon(&o)), &RootSearch::default());
            assert!(!roots.is_empty());
            for r in &roots {
                assert!(r.residual < CA_RESIDUAL_TOL);
                assert_close!(r.re_v2, o.velocity_squared(r.t).re, 1e-14);
            }
        }
    }

    #[test]
    fn soft_recollision_gate_triple() {
        let fp = argon_near_ir();
        let o = Orbit::new(Momentum::new(0.001, 0.0635 * fp.momentum_scale()), &fp).unwrap();
        let w = fp.omega();
        let roots = find_ca_roots(&o, &TimeWindow::default_for(&o, horizon(&o)), &RootSearch::default());
        let triple: Vec<_> = roots
            .iter()
            .filter(|r| r.t.re * w > 1.5 * PI && r.t.re * w < 2.5 * PI && (r.t.im * w).abs() < 0.2)
            .collect();
        assert_eq!(triple.len(), 3, "{roots:#?}");
    }

    #[test]
    fn library_count_matches_dense_winding() {
        let o = orbit(0.02, 0.8);
        let w = TimeWindow::default_for(&o, horizon(&o));
        let search = search_ca_roots(&o, &w, &RootSearch::default());
        assert!(search.complete);
        let dense = dense_winding(&o, &w, 20_000);
        assert_eq!(search.expected, Some(dense as usize));
        assert_eq!(search.roots.len() as i64, dense);
    }

    #[test]
    fn conjugate_partner_is_flagged_once() {
        for (px, pz) in [(0.0, 0.0), (0.1, 0.2), (0.3, -0.4)] {
            let o = orbit(px, pz);
            let roots = find_ca_roots(&o, &TimeWindow::default_for(&o, horizon(&o)), &RootSearch::default());
            let conj: Vec<_> = roots.iter().filter(|r| r.conjugate).collect();
            assert_eq!(conj.len(), 1, "p=({px},{pz}) {roots:#?}");
            assert!(conj[0].t.im < 0.0);
        }
    }

    #[test]
    fn newton_converges_quadratically() {
        let o = orbit(0.1, 0.2);
        let roots = find_ca_roots(&o, &TimeWindow::default_for(&o, horizon(&o)), &RootSearch::default());
        for r in roots.iter().filter(|r| !r.saddle) {
            let mut t = r.t + Complex64::new(1e-3, 5e-4) / o.fp.omega();
            let mut errs = Vec::new();
            for _ in 0..3 {
                let (f, df) = o.closest_approach(t);
                t -= f / df;
                errs.push((t - r.t).norm() * o.fp.omega());
            }
            // e_{k+1} ≤ C e_k² with a generous constant.
            assert!(errs[1] <= 1e3 * errs[0] * errs[0] + 1e-12, "{errs:?}");
        }
    }

    #[test]
    fn near_real_roots_follow_classical_roots() {
        for (px, pz) in [(0.1, 0.2), (0.02, 0.8), (0.3, -0.4), (0.05, 0.5)] {
            let o = orbit(px, pz);
            let fp = o.fp;
            let w = fp.omega();
            let h = horizon(&o);
            let classical = classical_ca_scan(o.p, (o.ts().re, h), &fp).unwrap();
            let roots = find_ca_roots(&o, &TimeWindow::default_for(&o, h), &RootSearch::default());
            for r in roots.iter().filter(|r| (r.t.im * w).abs() < 0.05 && r.t.re > o.ts().re) {
                let d = classical.iter().map(|c| (c.t - r.t.re).abs()).fold(f64::INFINITY, f64::min);
                assert!(d * w < 0.02, "p=({px},{pz}) root {} off by {}", r.t, d * w);
            }
        }
    }

    #[test]
    fn permutation_algebra() {
        let c = Permutation(vec![2, 0, 1]);
        assert!(c.is_full_cycle());
        let c2 = c.after(&c);
        assert!(c2.is_full_cycle());
        assert!(c2.after(&c).is_identity());
        assert_eq!(Permutation(vec![1, 0, 2]).cycle_type(), vec![2, 1]);
    }

    #[test]
    fn tiny_loop_is_identity() {
        let fp = argon_near_ir();
        let sr = solve_soft_recollision(1, &fp).unwrap();
        let m = monodromy_test(Momentum::new(0.0, sr.pz_sr), 1e-5, 40, &fp).unwrap();
        assert!(m.permutation.is_identity(), "{m:?}");
        assert!(m.closure_error * fp.omega() < 1e-9);
    }

    #[test]
    fn loop_around_soft_recollision_is_a_three_cycle() {
        let fp = argon_near_ir();
        let sr = solve_soft_recollision(1, &fp).unwrap();
        let center = Momentum::new(0.0, sr.pz_sr);
        let once = monodromy_test(center, 0.1, 400, &fp).unwrap();
        assert!(once.permutation.is_full_cycle(), "{once:?}");
        assert_eq!(once.permutation.cycle_type(), vec![3]);
        assert!(once.closure_error * fp.omega() < 1e-9);

        let twice = monodromy_turns(center, 0.1, 400, 2, &fp).unwrap();
        assert_eq!(twice.permutation, once.permutation.after(&once.permutation));
        let thrice = monodromy_turns(center, 0.1, 400, 3, &fp).unwrap();
        assert!(thrice.permutation.is_identity(), "{thrice:?}");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(12))]
        #[test]
        fn random_windows_match_dense_winding(
            px in -0.4f64..0.4, pz in -1.0f64..1.2,
            a in 0.0f64..1.0, b in 0.0f64..1.0, c in 0.0f64..1.0, d in 0.0f64..1.0,
        ) {
            let o = orbit(px, pz);
            let full = TimeWindow::default_for(&o, horizon(&o));
            let (x0, x1) = (a.min(b), a.max(b).max(a.min(b) + 0.05));
            let (y0, y1) = (c.min(d), c.max(d).max(c.min(d) + 0.05));
            let w = TimeWindow::new(
                full.re_min + full.width() * x0,
                full.re_min + full.width() * x1.min(1.0),
                full.im_min + full.height() * y0,
                full.im_min + full.height() * y1.min(1.0),
            ).unwrap();
            let roots = find_ca_roots(&o, &w, &RootSearch::default());
            prop_assert_eq!(roots.len() as i64, dense_winding(&o, &w, 20_000));
        }
    }
}
