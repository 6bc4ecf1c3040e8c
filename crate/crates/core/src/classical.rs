//! Classical soft recollisions (simultaneous zero of the real position and
//! the velocity) and the real-time closest-approach scan of an orbit.

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SlalomError};
use crate::field::{FieldParams, Momentum};
use crate::orbit::Orbit;

const SR_MAX_ITER: usize = 200;
const SR_TOL: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    Odd,
    Even,
}

impl Family {
    pub fn of(n: u32) -> Self {
        if n % 2 == 1 {
            Family::Odd
        } else {
            Family::Even
        }
    }

    /// Lowest recollision index of the family.
    pub fn first(self) -> u32 {
        match self {
            Family::Odd => 1,
            Family::Even => 2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftRecollision {
    pub n: u32,
    pub pz_sr: f64,
    /// Real recollision time.
    pub tr: f64,
    /// Real part of the ionization time of the recolliding orbit.
    pub t0: f64,
    pub family: Family,
    /// Largest absolute residual of the two defining equations.
    pub residual: f64,
}

/// Momentum and time of the `n`-th soft recollision to first order in `p_z`.
pub fn linearized_soft_recollision(n: u32, fp: &FieldParams) -> (f64, f64) {
    let g = fp.gamma();
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let reduced = ((1.0 + g * g).sqrt() + sign) / ((n + 1) as f64 * PI);
    let wtr = (n + 1) as f64 * PI - sign * reduced;
    (reduced * fp.momentum_scale(), wtr / fp.omega())
}

/// Residuals `(Re z(t_r), v_z(t_r))` and their Jacobian in `(p_z, t_r)`.
fn sr_system(pz: f64, tr: f64, fp: &FieldParams) -> Result<([f64; 2], [[f64; 2]; 2])> {
    let orbit = Orbit::new(Momentum::new(0.0, pz), fp)?;
    let ts = orbit.ts();
    let st = orbit.state(Complex64::new(tr, 0.0));
    let w = fp.omega();
    // v_z(ts) = -iκ on this branch and dts/dpz = 1/(F cos ωts).
    let dz_dpz = Complex64::new(tr, 0.0) - ts + Complex64::new(0.0, fp.kappa()) / ((ts * w).cos() * fp.field());
    let res = [st.z.re, st.vz.re];
    let jac = [[dz_dpz.re, st.vz.re], [1.0, -fp.field() * (w * tr).cos()]];
    Ok((res, jac))
}

/// Exact soft recollision of index `n ≥ 1`, by Newton iteration in `(p_z, t_r)`.
pub fn solve_soft_recollision(n: u32, fp: &FieldParams) -> Result<SoftRecollision> {
    if n == 0 {
        return Err(SlalomError::InvalidArgument("recollision index starts at 1".into()));
    }
    let (mut pz, mut tr) = linearized_soft_recollision(n, fp);
    let scale_z = fp.quiver_radius().max(1.0);
    let scale_v = fp.momentum_scale();
    let norm = |r: [f64; 2]| (r[0] / scale_z).abs().max((r[1] / scale_v).abs());
    let (mut res, mut jac) = sr_system(pz, tr, fp)?;
    for _ in 0..SR_MAX_ITER {
        let det = jac[0][0] * jac[1][1] - jac[0][1] * jac[1][0];
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dp = (res[0] * jac[1][1] - res[1] * jac[0][1]) / det;
        let dt = (jac[0][0] * res[1] - jac[1][0] * res[0]) / det;
        let mut lambda = 1.0;
        let current = norm(res);
        loop {
            let trial = sr_system(pz - lambda * dp, tr - lambda * dt, fp);
            match trial {
                Ok((r, j)) if norm(r) < current || lambda < 1e-6 => {
                    pz -= lambda * dp;
                    tr -= lambda * dt;
                    res = r;
                    jac = j;
                    break;
                }
                _ => lambda *= 0.5,
            }
            if lambda < 1e-6 {
                return Err(SlalomError::RecollisionNotConverged { n, iterations: SR_MAX_ITER });
            }
        }
        let small_step = (lambda * dp).abs() <= 1e-14 * pz.abs().max(1e-3) && (lambda * dt).abs() <= 1e-13 * tr.abs();
        if norm(res) < SR_TOL || small_step {
            let residual = res[0].abs().max(res[1].abs());
            if residual > 1e-10 {
                break;
            }
            let t0 = Orbit::new(Momentum::new(0.0, pz), fp)?.ts().re;
            return Ok(SoftRecollision {
                n,
                pz_sr: pz,
                tr,
                t0,
                family: Family::of(n),
                residual,
            });
        }
    }
    Err(SlalomError::RecollisionNotConverged { n, iterations: SR_MAX_ITER })
}

/// Ratios `p(n+2)/p(n)` of consecutive exact soft-recollision momenta in one family.
pub fn universal_ratios(family: Family, count: usize, fp: &FieldParams) -> Result<Vec<f64>> {
    let mut momenta = Vec::with_capacity(count + 1);
    for k in 0..=count {
        let n = family.first() + 2 * k as u32;
        momenta.push(solve_soft_recollision(n, fp)?.pz_sr);
    }
    Ok(momenta.windows(2).map(|w| w[1] / w[0]).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassicalKind {
    TurningMin,
    TurningMax,
    Collision,
}

impl ClassicalKind {
    /// Whether the real distance has a local minimum here.
    pub fn is_minimum(self) -> bool {
        !matches!(self, ClassicalKind::TurningMax)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassicalCAPoint {
    pub t: f64,
    pub kind: ClassicalKind,
    pub p: Momentum,
}

/// `g = Re r · v` on the real axis with its first two derivatives.
struct RealCa<'a> {
    orbit: &'a Orbit,
    t0: f64,
}

impl RealCa<'_> {
    fn eval(&self, t: f64) -> (f64, f64, f64) {
        let fp = &self.orbit.fp;
        let p = self.orbit.p;
        let st = self.orbit.state(Complex64::new(t, 0.0));
        let (z, vz, c) = (st.z.re, st.vz.re, st.cos_wt.re);
        let s = (fp.omega() * t).sin();
        let g = p.perp_sq() * (t - self.t0) + z * vz;
        let dg = p.perp_sq() + vz * vz - z * fp.field() * c;
        let ddg = -3.0 * fp.field() * vz * c + fp.field() * fp.omega() * z * s;
        (g, dg, ddg)
    }
}

/// Safeguarded Newton on a bracketed sign change of `h`.
fn bracketed_root(h: impl Fn(f64) -> (f64, f64), mut a: f64, mut b: f64) -> f64 {
    let (fa, _) = h(a);
    let mut t = 0.5 * (a + b);
    for _ in 0..200 {
        let (ft, dt) = h(t);
        if ft == 0.0 {
            return t;
        }
        if (ft < 0.0) == (fa < 0.0) {
            a = t;
        } else {
            b = t;
        }
        let step = ft / dt;
        if dt != 0.0 && step.abs() <= 1e-15 * t.abs().max(1.0) {
            return t;
        }
        let newton = t - step;
        t = if dt != 0.0 && newton > a && newton < b { newton } else { 0.5 * (a + b) };
        if (b - a).abs() <= 4.0 * f64::EPSILON * t.abs().max(1.0) {
            break;
        }
    }
    t
}

/// All real closest-approach roots of `Re r(t) · v(t)` in `[t_start, t_end]`.
///
/// Extrema of `g` are bracketed on a fine grid of `g'`, so each monotone
/// piece holds at most one root; tangential (double) roots are returned twice.
pub fn classical_ca_scan(p: Momentum, window: (f64, f64), fp: &FieldParams) -> Result<Vec<ClassicalCAPoint>> {
    let (t_start, t_end) = window;
    if !(t_end > t_start) {
        return Err(SlalomError::InvalidArgument(format!("empty time window {window:?}")));
    }
    let orbit = Orbit::new(p, fp)?;
    let ca = RealCa { orbit: &orbit, t0: orbit.ts().re };
    let n = ((t_end - t_start) / fp.period() * 2000.0).ceil().max(64.0) as usize;
    let h = (t_end - t_start) / n as f64;

    let mut breaks = vec![t_start];
    let mut prev = ca.eval(t_start).1;
    for i in 1..=n {
        let t = if i == n { t_end } else { t_start + i as f64 * h };
        let cur = ca.eval(t).1;
        if prev != 0.0 && (cur < 0.0) != (prev < 0.0) && cur != 0.0 {
            let e = bracketed_root(|u| { let (_, d, dd) = ca.eval(u); (d, dd) }, t - h, t);
            breaks.push(e);
        }
        prev = cur;
    }
    breaks.push(t_end);

    let scale = (fp.quiver_radius() * fp.momentum_scale()).max(1.0);
    let mut roots = Vec::new();
    let mut crossed = vec![false; breaks.len() - 1];
    for (k, w) in breaks.windows(2).enumerate() {
        let (ga, gb) = (ca.eval(w[0]).0, ca.eval(w[1]).0);
        if ga == 0.0 {
            roots.push(w[0]);
            crossed[k] = true;
        } else if (ga < 0.0) != (gb < 0.0) && gb != 0.0 {
            roots.push(bracketed_root(|u| { let (g, d, _) = ca.eval(u); (g, d) }, w[0], w[1]));
            crossed[k] = true;
        }
    }
    // Tangential roots: interior extrema where g touches zero without crossing.
    for k in 1..breaks.len() - 1 {
        let g = ca.eval(breaks[k]).0;
        if !crossed[k - 1] && !crossed[k] && g != 0.0 && g.abs() < 1e-13 * scale {
            roots.push(breaks[k]);
            roots.push(breaks[k]);
        }
    }
    roots.sort_by(f64::total_cmp);

    let on_axis = p.px == 0.0;
    Ok(roots
        .into_iter()
        .map(|t| {
            let (_, dg, _) = ca.eval(t);
            let st = orbit.state(Complex64::new(t, 0.0));
            let collision = on_axis
                && (st.z.re / fp.quiver_radius()).abs() < (st.vz.re / fp.momentum_scale()).abs();
            let kind = if collision {
                ClassicalKind::Collision
            } else if dg > 0.0 {
                ClassicalKind::TurningMin
            } else {
                ClassicalKind::TurningMax
            };
            ClassicalCAPoint { t, kind, p }
        })
        .collect())
}
