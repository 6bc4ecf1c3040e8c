//! Monochromatic, linearly polarized laser field and the closed-form
//! quantities derived from it. Atomic units throughout.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Result, SlalomError};

/// Complex time in atomic units.
pub type ComplexTime = Complex64;

/// Laser field together with the binding of the ionizing system.
///
/// The electric field is `F cos(ωt) ẑ`, so `A(t) = -(F/ω) sin(ωt)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawFieldParams")]
pub struct FieldParams {
    field: f64,
    omega: f64,
    ip: f64,
    kappa: f64,
    charge: f64,
}

/// Wire form of [`FieldParams`]; `kappa` is recomputed on the way in.
#[derive(Deserialize)]
struct RawFieldParams {
    field: f64,
    omega: f64,
    ip: f64,
    #[serde(default = "unit_charge")]
    charge: f64,
}

fn unit_charge() -> f64 {
    1.0
}

impl TryFrom<RawFieldParams> for FieldParams {
    type Error = SlalomError;

    fn try_from(raw: RawFieldParams) -> Result<Self> {
        Self::new(raw.field, raw.omega, raw.ip)?.with_charge(raw.charge)
    }
}

impl FieldParams {
    pub fn new(field: f64, omega: f64, ip: f64) -> Result<Self> {
        for (name, v) in [("F", field), ("omega", omega), ("Ip", ip)] {
            if !(v.is_finite() && v > 0.0) {
                return Err(SlalomError::InvalidField(format!(
                    "{name} must be positive and finite, got {v}"
                )));
            }
        }
        Ok(Self {
            field,
            omega,
            ip,
            kappa: (2.0 * ip).sqrt(),
            charge: 1.0,
        })
    }

    /// Parameters for a given Keldysh parameter at fixed `F` and `Ip`.
    pub fn from_gamma(field: f64, gamma: f64, ip: f64) -> Result<Self> {
        let kappa = (2.0 * ip).sqrt();
        Self::new(field, gamma * field / kappa, ip)
    }

    /// Replaces the effective ion charge (default 1).
    pub fn with_charge(mut self, charge: f64) -> Result<Self> {
        if !charge.is_finite() || charge < 0.0 {
            return Err(SlalomError::InvalidField(format!(
                "charge must be finite and non-negative, got {charge}"
            )));
        }
        self.charge = charge;
        Ok(self)
    }

    pub fn field(&self) -> f64 {
        self.field
    }
    pub fn omega(&self) -> f64 {
        self.omega
    }
    pub fn ip(&self) -> f64 {
        self.ip
    }
    pub fn kappa(&self) -> f64 {
        self.kappa
    }
    pub fn charge(&self) -> f64 {
        self.charge
    }

    pub fn gamma(&self) -> f64 {
        self.omega * self.kappa / self.field
    }

    pub fn ponderomotive(&self) -> f64 {
        self.field * self.field / (4.0 * self.omega * self.omega)
    }

    pub fn quiver_radius(&self) -> f64 {
        self.field / (self.omega * self.omega)
    }

    /// Peak vector-potential magnitude `F/ω`, the natural momentum scale.
    pub fn momentum_scale(&self) -> f64 {
        self.field / self.omega
    }

    pub fn period(&self) -> f64 {
        2.0 * std::f64::consts::PI / self.omega
    }

    pub fn derived(&self) -> DerivedParams {
        DerivedParams {
            gamma: self.gamma(),
            up: self.ponderomotive(),
            z_quiv: self.quiver_radius(),
        }
    }

    /// `A_z(t) = -(F/ω) sin(ωt)`.
    pub fn vector_potential(&self, t: ComplexTime) -> Complex64 {
        -(t * self.omega).sin() * (self.field / self.omega)
    }

    /// `F_z(t) = F cos(ωt)`.
    pub fn electric_field(&self, t: ComplexTime) -> Complex64 {
        (t * self.omega).cos() * self.field
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub gamma: f64,
    pub up: f64,
    pub z_quiv: f64,
}

/// Final drift momentum in the polarization plane (`p_y = 0`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Momentum {
    pub px: f64,
    pub pz: f64,
}

impl Momentum {
    pub fn new(px: f64, pz: f64) -> Self {
        Self { px, pz }
    }

    pub fn perp(&self) -> f64 {
        self.px.abs()
    }

    /// `p_⊥²`; everything downstream depends on `p_x` only through this.
    pub fn perp_sq(&self) -> f64 {
        self.px * self.px
    }

    pub fn norm_sq(&self) -> f64 {
        self.px * self.px + self.pz * self.pz
    }

    pub fn norm(&self) -> f64 {
        self.norm_sq().sqrt()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn argon_like() -> FieldParams {
        FieldParams::new(0.05065, 0.04612, 1.0763f64.powi(2) / 2.0).unwrap()
    }

    #[test]
    fn json_round_trip_revalidates() {
        let fp = argon_like().with_charge(2.0).unwrap();
        let back: FieldParams = serde_json::from_str(&serde_json::to_string(&fp).unwrap()).unwrap();
        assert_eq!(back, fp);
        let bad = r#"{"field": -1.0, "omega": 0.05, "ip": 0.5}"#;
        assert!(serde_json::from_str::<FieldParams>(bad).is_err());
        let stale = r#"{"field": 0.05, "omega": 0.05, "ip": 0.5, "kappa": 7.0}"#;
        let fp: FieldParams = serde_json::from_str(stale).unwrap();
        assert_eq!(fp.kappa(), 1.0);
        assert_eq!(fp.charge(), 1.0);
    }

    #[test]
    fn rejects_non_positive_inputs() {
        assert!(FieldParams::new(0.0, 1.0, 1.0).is_err());
        assert!(FieldParams::new(1.0, -1.0, 1.0).is_err());
        assert!(FieldParams::new(1.0, 1.0, f64::NAN).is_err());
        assert!(FieldParams::new(1.0, 1.0, 1.0).unwrap().with_charge(-1.0).is_err());
    }

    #[test]
    fn kappa_squared_is_twice_ip() {
        let fp = argon_like();
        assert_close!(fp.kappa() * fp.kappa(), 2.0 * fp.ip(), 1e-15);
    }

    #[test]
    fn unit_parameters() {
        let d = FieldParams::new(1.0, 1.0, 0.5).unwrap().derived();
        assert_eq!(d.gamma, 1.0);
        assert_eq!(d.up, 0.25);
        assert_eq!(d.z_quiv, 1.0);
    }

    #[test]
    fn argon_near_infrared_gamma() {
        let g = argon_like().gamma();
        assert_close!(g, 0.98, 5e-3);
    }

    #[test]
    fn vector_potential_landmarks() {
        let fp = argon_like();
        assert_eq!(fp.vector_potential(Complex64::new(0.0, 0.0)), Complex64::new(0.0, 0.0));
        let quarter = Complex64::new(std::f64::consts::FRAC_PI_2 / fp.omega(), 0.0);
        assert_close!(fp.vector_potential(quarter).re, -fp.momentum_scale(), 1e-15);
        let tau = Complex64::new(0.0, fp.gamma().asinh() / fp.omega());
        let a = fp.vector_potential(tau);
        assert_close!(a.re, 0.0, 1e-15);
        assert_close!(a.im, -fp.kappa(), 1e-13);
    }

    #[test]
    fn from_gamma_roundtrip() {
        let fp = FieldParams::from_gamma(0.05, 0.31, 0.5).unwrap();
        assert_close!(fp.gamma(), 0.31, 1e-15);
    }

    #[test]
    fn field_is_minus_derivative_of_potential() {
        let fp = argon_like();
        let h = 1e-4;
        for &(re, im) in &[(0.3, 0.1), (-12.0, 7.5), (80.0, -20.0), (3.0, 30.0)] {
            let t = Complex64::new(re, im);
            let fd = -(fp.vector_potential(t + h) - fp.vector_potential(t - h)) / (2.0 * h);
            let exact = fp.electric_field(t);
            assert!((fd - exact).norm() <= 1e-8 * exact.norm(), "{t}: {fd} vs {exact}");
        }
    }

    proptest::proptest! {
        #[test]
        fn potential_real_and_bounded_on_real_axis(t in -1e4f64..1e4) {
            let fp = argon_like();
            let a = fp.vector_potential(Complex64::new(t, 0.0));
            proptest::prop_assert_eq!(a.im, 0.0);
            proptest::prop_assert!(a.re.abs() <= fp.momentum_scale() * (1.0 + 1e-15));
        }
    }
}
