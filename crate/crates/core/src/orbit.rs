//! Saddle-point ionization times and the complex quantum orbit launched
//! from them, with its closed-form kinetic action.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SlalomError};
use crate::field::{ComplexTime, FieldParams, Momentum};

/// Residual tolerance of the saddle-point equation.
pub const SADDLE_TOL: f64 = 1e-12;
const SADDLE_MAX_ITER: usize = 100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleSolution {
    pub ts: ComplexTime,
    pub t_kappa: ComplexTime,
    pub z_exit: f64,
}

impl SaddleSolution {
    /// Real part of the ionization time.
    pub fn t0(&self) -> f64 {
        self.ts.re
    }

    /// Imaginary part of the ionization time (tunnelling time).
    pub fn tau(&self) -> f64 {
        self.ts.im
    }
}

/// Complex 3-vector; `y` stays zero for the in-plane momenta used here.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ComplexVec3 {
    pub x: Complex64,
    pub y: Complex64,
    pub z: Complex64,
}

impl ComplexVec3 {
    /// Analytic square `x² + y² + z²` (no conjugation).
    pub fn square(&self) -> Complex64 {
        self.x * self.x + self.y * self.y + self.z * self.z
    }

    pub fn dot(&self, other: &ComplexVec3) -> Complex64 {
        self.x * other.x + self.y * other.y + self.z * other.z
    }
}

/// Closed-form saddle time `(1/ω) asin((ω/F)(p_z + iκ_⊥))` on the principal branch.
pub fn saddle_closed_form(p: Momentum, fp: &FieldParams) -> ComplexTime {
    let kperp = (fp.kappa() * fp.kappa() + p.perp_sq()).sqrt();
    let arg = Complex64::new(p.pz, kperp) / fp.momentum_scale();
    arg.asin() / fp.omega()
}

/// `½(p + A(t))² + Ip`, the time derivative of the Volkov phase.
pub fn saddle_residual(t: ComplexTime, p: Momentum, fp: &FieldParams) -> Complex64 {
    let vz = fp.vector_potential(t) + p.pz;
    (vz * vz + p.perp_sq()) * 0.5 + fp.ip()
}

/// Newton iteration on the saddle equation from an arbitrary seed.
pub fn saddle_newton(p: Momentum, fp: &FieldParams, seed: ComplexTime) -> Result<ComplexTime> {
    let mut t = seed;
    let mut residual = saddle_residual(t, p, fp).norm();
    for _ in 0..SADDLE_MAX_ITER {
        let vz = fp.vector_potential(t) + p.pz;
        let g = (vz * vz + p.perp_sq()) * 0.5 + fp.ip();
        let dg = -vz * fp.electric_field(t);
        let step = g / dg;
        if !step.is_finite() {
            break;
        }
        t -= step;
        residual = saddle_residual(t, p, fp).norm();
        if residual < SADDLE_TOL && step.norm() < 1e-10 * (1.0 + t.norm()) {
            return Ok(t);
        }
    }
    Err(SlalomError::SaddleNotConverged {
        iterations: SADDLE_MAX_ITER,
        residual,
        tol: SADDLE_TOL,
    })
}

/// Ionization saddle in the first quarter cycle with `Im(ts) > 0`.
pub fn solve_saddle(p: Momentum, fp: &FieldParams) -> Result<SaddleSolution> {
    if !(p.px.is_finite() && p.pz.is_finite()) {
        return Err(SlalomError::InvalidArgument(format!("non-finite momentum {p:?}")));
    }
    let ts = saddle_newton(p, fp, saddle_closed_form(p, fp))?;
    if ts.im <= 0.0 {
        return Err(SlalomError::SaddleNotConverged {
            iterations: SADDLE_MAX_ITER,
            residual: saddle_residual(ts, p, fp).norm(),
            tol: SADDLE_TOL,
        });
    }
    let w = fp.omega();
    let z_exit = fp.quiver_radius() * ((w * ts.re).cos() - (ts * w).cos().re);
    Ok(SaddleSolution {
        ts,
        t_kappa: ts - Complex64::new(0.0, 1.0 / (fp.kappa() * fp.kappa())),
        z_exit,
    })
}

pub fn trajectory(t: ComplexTime, p: Momentum, s: &SaddleSolution, fp: &FieldParams) -> ComplexVec3 {
    Orbit::from_saddle(p, *s, *fp).position(t)
}

pub fn velocity(t: ComplexTime, p: Momentum, fp: &FieldParams) -> ComplexVec3 {
    ComplexVec3 {
        x: Complex64::new(p.px, 0.0),
        y: Complex64::new(0.0, 0.0),
        z: fp.vector_potential(t) + p.pz,
    }
}

/// Antiderivative `W(t)` of `½(p + A(t))²`.
pub fn kinetic_antiderivative(t: ComplexTime, p: Momentum, fp: &FieldParams) -> Complex64 {
    let w = fp.omega();
    let f = fp.field();
    t * (0.5 * (p.norm_sq() + f * f / (2.0 * w * w))) + (t * w).cos() * (p.pz * f / (w * w))
        - (t * (2.0 * w)).sin() * (f * f / (8.0 * w * w * w))
}

/// `∫_{t1}^{t2} ½(p + A(τ))² dτ`, path independent.
pub fn kinetic_action(t1: ComplexTime, t2: ComplexTime, p: Momentum, fp: &FieldParams) -> Complex64 {
    if t1 == t2 {
        return Complex64::new(0.0, 0.0);
    }
    kinetic_antiderivative(t2, p, fp) - kinetic_antiderivative(t1, p, fp)
}

/// Point evaluation of the orbit, sharing one `sin`/`cos` pair.
#[derive(Debug, Clone, Copy)]
pub struct OrbitState {
    pub x: Complex64,
    pub z: Complex64,
    pub vz: Complex64,
    pub cos_wt: Complex64,
}

/// Quantum orbit for one final momentum, anchored at its ionization saddle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Orbit {
    pub fp: FieldParams,
    pub p: Momentum,
    pub saddle: SaddleSolution,
    cos_ts: Complex64,
}

impl Orbit {
    pub fn new(p: Momentum, fp: &FieldParams) -> Result<Self> {
        Ok(Self::from_saddle(p, solve_saddle(p, fp)?, *fp))
    }

    pub fn from_saddle(p: Momentum, saddle: SaddleSolution, fp: FieldParams) -> Self {
        Self {
            fp,
            p,
            saddle,
            cos_ts: (saddle.ts * fp.omega()).cos(),
        }
    }

    pub fn ts(&self) -> ComplexTime {
        self.saddle.ts
    }

    pub fn state(&self, t: ComplexTime) -> OrbitState {
        let w = self.fp.omega();
        let (s, c) = sin_cos(t * w);
        let dt = t - self.saddle.ts;
        OrbitState {
            x: dt * self.p.px,
            z: dt * self.p.pz + (c - self.cos_ts) * self.fp.quiver_radius(),
            vz: -s * self.fp.momentum_scale() + self.p.pz,
            cos_wt: c,
        }
    }

    pub fn position(&self, t: ComplexTime) -> ComplexVec3 {
        let st = self.state(t);
        ComplexVec3 {
            x: st.x,
            y: Complex64::new(0.0, 0.0),
            z: st.z,
        }
    }

    pub fn velocity(&self, t: ComplexTime) -> ComplexVec3 {
        velocity(t, self.p, &self.fp)
    }

    /// Analytic `r²`, with `x²` written through `p_⊥²`.
    pub fn r_squared(&self, t: ComplexTime) -> Complex64 {
        let st = self.state(t);
        let dt = t - self.saddle.ts;
        dt * dt * self.p.perp_sq() + st.z * st.z
    }

    /// `r²` and its time derivative `2 r·v`.
    pub fn r_squared_with_derivative(&self, t: ComplexTime) -> (Complex64, Complex64) {
        let st = self.state(t);
        let dt = t - self.saddle.ts;
        let p2 = self.p.perp_sq();
        (dt * dt * p2 + st.z * st.z, (dt * p2 + st.z * st.vz) * 2.0)
    }

    /// Closest-approach function `f = r·v` and `f' = v² - r·F(t)`.
    pub fn closest_approach(&self, t: ComplexTime) -> (Complex64, Complex64) {
        let st = self.state(t);
        let dt = t - self.saddle.ts;
        let p2 = self.p.perp_sq();
        let f = dt * p2 + st.z * st.vz;
        let df = st.vz * st.vz + p2 - st.z * st.cos_wt * self.fp.field();
        (f, df)
    }

    /// `v(t)²`.
    pub fn velocity_squared(&self, t: ComplexTime) -> Complex64 {
        let vz = self.fp.vector_potential(t) + self.p.pz;
        vz * vz + self.p.perp_sq()
    }

    /// `U(r(t)) = -Z / sqrt(r²)` on the principal branch.
    pub fn coulomb_potential(&self, t: ComplexTime) -> Complex64 {
        -self.fp.charge() / self.r_squared(t).sqrt()
    }
}

fn sin_cos(z: Complex64) -> (Complex64, Complex64) {
    let (s, c) = z.re.sin_cos();
    let (sh, ch) = (z.im.sinh(), z.im.cosh());
    (Complex64::new(s * ch, c * sh), Complex64::new(c * ch, -s * sh))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad::integrate_segment;
    use crate::units::argon_near_ir;
    use proptest::prelude::*;

    fn fp() -> FieldParams {
        argon_near_ir()
    }

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn zero_momentum_saddle_is_imaginary() {
        let fp = fp();
        let s = solve_saddle(Momentum::new(0.0, 0.0), &fp).unwrap();
        assert_close!(s.ts.re, 0.0, 1e-14);
        assert_rel!(s.ts.im, fp.gamma().asinh() / fp.omega(), 1e-13);
        assert!(saddle_residual(s.ts, Momentum::new(0.0, 0.0), &fp).norm() < SADDLE_TOL);
    }

    #[test]
    fn tau_for_spec_parameters() {
        let fp = FieldParams::new(0.050641, 0.04612, 0.579169).unwrap();
        let s = solve_saddle(Momentum::new(0.0, 0.0), &fp).unwrap();
        assert_close!(s.tau() * fp.omega(), fp.gamma().asinh(), 1e-13);
        assert_close!(s.tau(), 18.80, 0.01);
    }

    #[test]
    fn t_kappa_offset_is_exact() {
        let fp = fp();
        let s = solve_saddle(Momentum::new(0.2, -0.4), &fp).unwrap();
        assert_eq!(s.t_kappa, s.ts - c(0.0, 1.0 / (fp.kappa() * fp.kappa())));
    }

    #[test]
    fn small_pz_matches_linearized_ionization_time() {
        let fp = fp();
        let g = fp.gamma();
        for pz in [0.01, 0.02, 0.05, 0.1] {
            let s = solve_saddle(Momentum::new(0.0, pz), &fp).unwrap();
            let lin = (pz / fp.field()) / (1.0 + g * g).sqrt();
            let err = (s.t0() - lin).abs();
            // Odd in p_z, so the first correction is cubic.
            assert!(err < 25.0 * lin * (pz * fp.omega() / fp.field()).powi(2), "{pz}: {err}");
        }
    }

    #[test]
    fn newton_from_poor_seed_matches_closed_form() {
        let fp = fp();
        let p = Momentum::new(0.3, 0.5);
        let closed = saddle_closed_form(p, &fp);
        let newton = saddle_newton(p, &fp, closed * 0.7 + c(1.0, 2.0)).unwrap();
        assert!((closed - newton).norm() < 1e-10);
    }

    #[test]
    fn exit_point_for_zero_momentum() {
        let fp = FieldParams::new(0.050641, 0.04612, 0.579169).unwrap();
        let s = solve_saddle(Momentum::new(0.0, 0.0), &fp).unwrap();
        assert_close!(s.z_exit, -9.53, 5e-3);
        let g = fp.gamma();
        let lin = -fp.quiver_radius() * ((1.0 + g * g).sqrt() - 1.0);
        assert_rel!(s.z_exit, lin, 1e-12);
        let z = trajectory(c(s.t0(), 0.0), Momentum::new(0.0, 0.0), &s, &fp).z;
        assert_close!(z.re, s.z_exit, 1e-12);
    }

    #[test]
    fn tunnelling_limit_exit_point() {
        let fp = FieldParams::from_gamma(0.05, 0.1, 0.579169).unwrap();
        let s = solve_saddle(Momentum::new(0.0, 0.0), &fp).unwrap();
        assert_rel!(s.z_exit, -fp.ip() / fp.field(), 0.01);
    }

    #[test]
    fn trajectory_vanishes_at_saddle() {
        let fp = fp();
        let p = Momentum::new(0.1, 0.2);
        let orbit = Orbit::new(p, &fp).unwrap();
        let r = orbit.position(orbit.ts());
        assert!(r.x.norm() == 0.0 && r.z.norm() < 1e-13);
    }

    #[test]
    fn velocity_squared_at_saddle() {
        let fp = fp();
        let p = Momentum::new(0.1, 0.2);
        let orbit = Orbit::new(p, &fp).unwrap();
        let v2 = orbit.velocity(orbit.ts()).square();
        assert!((v2 + 2.0 * fp.ip()).norm() < 1e-12);
    }

    #[test]
    fn turning_point_on_real_axis() {
        let fp = fp();
        let t = 0.7 / fp.omega();
        let pz = fp.momentum_scale() * (fp.omega() * t).sin();
        let v = velocity(c(t, 0.0), Momentum::new(0.0, pz), &fp);
        assert_close!(v.z.norm(), 0.0, 1e-15);
    }

    #[test]
    fn kinetic_action_of_empty_interval() {
        let fp = fp();
        let t = c(3.0, 2.0);
        assert_eq!(kinetic_action(t, t, Momentum::new(0.1, 0.3), &fp), c(0.0, 0.0));
    }

    #[test]
    fn kinetic_action_matches_segment_quadrature() {
        let fp = fp();
        let p = Momentum::new(0.15, -0.35);
        let nodes = [c(2.0, 18.0), c(10.0, 3.0), c(60.0, -4.0), c(140.0, 0.0)];
        let mut total = c(0.0, 0.0);
        for w in nodes.windows(2) {
            let q = integrate_segment(
                |t| {
                    let vz = fp.vector_potential(t) + p.pz;
                    (vz * vz + p.perp_sq()) * 0.5
                },
                w[0],
                w[1],
                1e-13,
                1e-14,
                4000,
            )
            .unwrap();
            total += q.value;
        }
        let exact = kinetic_action(nodes[0], nodes[3], p, &fp);
        assert!((total - exact).norm() < 1e-10 * exact.norm().max(1.0), "{total} vs {exact}");
    }

    #[test]
    fn imaginary_position_constant_on_real_segment() {
        let fp = fp();
        let orbit = Orbit::new(Momentum::new(0.1, 0.3), &fp).unwrap();
        let a = orbit.position(c(10.0, 0.0));
        let b = orbit.position(c(250.0, 0.0));
        assert_close!(a.x.im, b.x.im, 1e-12);
        assert_close!(a.z.im, b.z.im, 1e-11);
    }

    #[test]
    fn closest_approach_matches_vector_form() {
        let fp = fp();
        let p = Momentum::new(-0.2, 0.4);
        let orbit = Orbit::new(p, &fp).unwrap();
        let t = c(70.0, -5.0);
        let (f, _) = orbit.closest_approach(t);
        let direct = orbit.position(t).dot(&orbit.velocity(t));
        assert!((f - direct).norm() < 1e-12 * direct.norm());
        assert!((orbit.r_squared(t) - orbit.position(t).square()).norm() < 1e-12 * orbit.r_squared(t).norm());
    }

    /// Five-point central difference.
    fn derivative5(f: impl Fn(Complex64) -> Complex64, t: Complex64, h: f64) -> Complex64 {
        (f(t - 2.0 * h) - f(t + 2.0 * h) + (f(t + h) - f(t - h)) * 8.0) / (12.0 * h)
    }

    fn complex_time() -> impl Strategy<Value = Complex64> {
        (-50.0f64..300.0, -40.0f64..40.0).prop_map(|(a, b)| c(a, b))
    }

    fn momentum() -> impl Strategy<Value = Momentum> {
        (-1.5f64..1.5, -1.5f64..1.5).prop_map(|(x, z)| Momentum::new(x, z))
    }

    proptest! {
        #[test]
        fn saddle_residual_and_sign(p in momentum()) {
            let fp = fp();
            let s = solve_saddle(p, &fp).unwrap();
            prop_assert!(s.ts.im > 0.0);
            prop_assert!(saddle_residual(s.ts, p, &fp).norm() < SADDLE_TOL);
        }

        #[test]
        fn position_derivative_is_velocity(p in momentum(), t in complex_time()) {
            let fp = fp();
            let orbit = Orbit::new(p, &fp).unwrap();
            let h = 1e-3;
            let fd = (orbit.position(t + h).z - orbit.position(t - h).z) / (2.0 * h);
            let v = orbit.velocity(t).z;
            prop_assert!((fd - v).norm() <= 1e-8 * v.norm().max(1.0));
        }

        #[test]
        fn closest_approach_derivative(p in momentum(), t in complex_time()) {
            let fp = fp();
            let orbit = Orbit::new(p, &fp).unwrap();
            let h = 1e-3;
            let fd = (orbit.closest_approach(t + h).0 - orbit.closest_approach(t - h).0) / (2.0 * h);
            let d = orbit.closest_approach(t).1;
            prop_assert!((fd - d).norm() <= 1e-7 * d.norm().max(1.0));
        }

        #[test]
        fn antiderivative_differentiates_to_kinetic_energy(p in momentum(), t in complex_time()) {
            let fp = fp();
            let fd = derivative5(|u| kinetic_antiderivative(u, p, &fp), t, 1e-2);
            let exact = saddle_residual(t, p, &fp) - fp.ip();
            prop_assert!((fd - exact).norm() <= 1e-10 * exact.norm().max(1.0) + 1e-9);
        }

        #[test]
        fn trajectory_is_path_independent(p in momentum(), a in complex_time(), b in complex_time()) {
            // Integrate the velocity along ts -> a -> b and ts -> conj-side detour -> b.
            let fp = fp();
            let orbit = Orbit::new(p, &fp).unwrap();
            let vz = |t: Complex64| fp.vector_potential(t) + p.pz;
            let leg = |u: Complex64, w: Complex64| integrate_segment(vz, u, w, 1e-13, 1e-14, 4000).unwrap().value;
            let detour = c(b.re, -a.im);
            let via_a = leg(orbit.ts(), a) + leg(a, b);
            let via_d = leg(orbit.ts(), detour) + leg(detour, b);
            let exact = orbit.position(b).z;
            let scale = exact.norm().max(1.0);
            prop_assert!((via_a - exact).norm() <= 1e-12 * scale * 10.0);
            prop_assert!((via_d - via_a).norm() <= 1e-12 * scale * 10.0);
        }
    }
}
