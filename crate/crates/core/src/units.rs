//! Conversions between laboratory units and atomic units, plus the
//! reference argon configurations. Only front ends should need these.

use serde::{Deserialize, Serialize};

use crate::error::{Result, SlalomError};
use crate::field::FieldParams;

/// Hartree energy in eV.
pub const HARTREE_EV: f64 = 27.211_386_245_988;
/// Intensity (W/cm²) of a field of one atomic unit, cycle-averaged for linear polarization.
pub const ATOMIC_INTENSITY_W_CM2: f64 = 3.509_447_58e16;
/// `ω[a.u.] · λ[nm]` for a photon of wavelength λ.
pub const OMEGA_TIMES_NM: f64 = 45.563_352_529;
/// Ionization potential of argon in eV.
pub const ARGON_IP_EV: f64 = 15.76;
/// Intensity of the reference argon configurations in W/cm².
pub const REFERENCE_INTENSITY_W_CM2: f64 = 9e13;
/// Wavelength (µm) of the near-infrared reference configuration.
pub const NEAR_IR_LAMBDA_UM: f64 = 0.992;
/// Keldysh parameter of the mid-infrared reference configuration.
pub const MID_IR_GAMMA: f64 = 0.31;

pub fn ev_to_hartree(ev: f64) -> f64 {
    ev / HARTREE_EV
}

pub fn hartree_to_ev(h: f64) -> f64 {
    h * HARTREE_EV
}

pub fn intensity_to_field(w_cm2: f64) -> f64 {
    (w_cm2 / ATOMIC_INTENSITY_W_CM2).sqrt()
}

pub fn field_to_intensity(f: f64) -> f64 {
    f * f * ATOMIC_INTENSITY_W_CM2
}

pub fn wavelength_um_to_omega(lambda_um: f64) -> f64 {
    OMEGA_TIMES_NM / (lambda_um * 1e3)
}

pub fn omega_to_wavelength_um(omega: f64) -> f64 {
    OMEGA_TIMES_NM / omega / 1e3
}

/// Laboratory description of a configuration.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabParams {
    pub ip_ev: f64,
    pub intensity_w_cm2: f64,
    pub lambda_um: f64,
}

impl LabParams {
    pub fn to_field(&self) -> Result<FieldParams> {
        if !(self.intensity_w_cm2 > 0.0 && self.lambda_um > 0.0 && self.ip_ev > 0.0) {
            return Err(SlalomError::InvalidField(format!(
                "laboratory parameters must be positive: {self:?}"
            )));
        }
        FieldParams::new(
            intensity_to_field(self.intensity_w_cm2),
            wavelength_um_to_omega(self.lambda_um),
            ev_to_hartree(self.ip_ev),
        )
    }

    /// Wavelength that yields Keldysh parameter `gamma` at this intensity and binding.
    pub fn with_gamma(ip_ev: f64, intensity_w_cm2: f64, gamma: f64) -> Result<Self> {
        if !(gamma > 0.0 && gamma.is_finite()) {
            return Err(SlalomError::InvalidField(format!("gamma must be positive, got {gamma}")));
        }
        let kappa = (2.0 * ev_to_hartree(ip_ev)).sqrt();
        let omega = gamma * intensity_to_field(intensity_w_cm2) / kappa;
        Ok(Self {
            ip_ev,
            intensity_w_cm2,
            lambda_um: omega_to_wavelength_um(omega),
        })
    }

    pub fn from_field(fp: &FieldParams) -> Self {
        Self {
            ip_ev: hartree_to_ev(fp.ip()),
            intensity_w_cm2: field_to_intensity(fp.field()),
            lambda_um: omega_to_wavelength_um(fp.omega()),
        }
    }
}

/// Argon at the reference intensity and the near-infrared wavelength (γ ≈ 0.98).
pub fn argon_near_ir() -> FieldParams {
    argon_at_wavelength(NEAR_IR_LAMBDA_UM)
}

/// Argon at the reference intensity with γ = 0.31.
pub fn argon_mid_ir() -> FieldParams {
    LabParams::with_gamma(ARGON_IP_EV, REFERENCE_INTENSITY_W_CM2, MID_IR_GAMMA)
        .and_then(|l| l.to_field())
        .expect("reference configuration is valid")
}

pub fn argon_at_wavelength(lambda_um: f64) -> FieldParams {
    LabParams {
        ip_ev: ARGON_IP_EV,
        intensity_w_cm2: REFERENCE_INTENSITY_W_CM2,
        lambda_um,
    }
    .to_field()
    .expect("reference configuration is valid")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn argon_reference_values() {
        let fp = argon_near_ir();
        assert_close!(fp.kappa(), 1.0763, 5e-5);
        assert_close!(fp.field(), 0.05064, 5e-5);
        assert_close!(fp.gamma(), 0.98, 5e-3);
    }

    #[test]
    fn mid_ir_gamma_and_wavelength() {
        let fp = argon_mid_ir();
        assert_close!(fp.gamma(), 0.31, 1e-12);
        let lambda = omega_to_wavelength_um(fp.omega());
        assert!(lambda > 3.0 && lambda < 3.2, "{lambda}");
    }

    #[test]
    fn conversions_roundtrip() {
        let lab = LabParams {
            ip_ev: 13.6,
            intensity_w_cm2: 1e14,
            lambda_um: 0.8,
        };
        let back = LabParams::from_field(&lab.to_field().unwrap());
        assert_rel!(back.ip_ev, lab.ip_ev, 1e-14);
        assert_rel!(back.intensity_w_cm2, lab.intensity_w_cm2, 1e-14);
        assert_rel!(back.lambda_um, lab.lambda_um, 1e-14);
    }

    #[test]
    fn gamma_times_wavelength_is_fixed_at_fixed_intensity() {
        let a = argon_at_wavelength(1.0).gamma();
        let b = argon_at_wavelength(2.0).gamma();
        assert_rel!(a, 2.0 * b, 1e-14);
    }
}
