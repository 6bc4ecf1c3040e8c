//! Globally adaptive Gauss-Kronrod (7/15) quadrature of complex-valued
//! integrands along straight segments of the complex plane.

use num_complex::Complex64;

use crate::error::{Result, SlalomError};

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadResult {
    pub value: Complex64,
    pub error: f64,
    pub evaluations: usize,
    pub intervals: usize,
}

struct Panel {
    lo: f64,
    hi: f64,
    value: Complex64,
    error: f64,
}

/// One 15-point Kronrod panel over `s ∈ [lo, hi]` of the map `s ↦ a + s·(b-a)`.
fn gk15<F: FnMut(Complex64) -> Complex64>(f: &mut F, a: Complex64, d: Complex64, lo: f64, hi: f64) -> Panel {
    let half = 0.5 * (hi - lo);
    let mid = 0.5 * (hi + lo);
    let fc = f(a + d * mid);
    let mut kron = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let off = half * XGK[j];
        let s = f(a + d * (mid - off)) + f(a + d * (mid + off));
        kron += s * WGK[j];
        if j % 2 == 1 {
            gauss += s * WG[j / 2];
        }
    }
    let scale = d * half;
    Panel {
        lo,
        hi,
        value: kron * scale,
        error: ((kron - gauss) * scale).norm(),
    }
}

/// `∫_a^b f(t) dt` along the straight segment, refined until the summed error
/// estimate is below `max(abs_tol, rel_tol·|I|)`.
pub fn integrate_segment<F: FnMut(Complex64) -> Complex64>(
    mut f: F,
    a: Complex64,
    b: Complex64,
    abs_tol: f64,
    rel_tol: f64,
    max_intervals: usize,
) -> Result<QuadResult> {
    let d = b - a;
    if d.norm() == 0.0 {
        return Ok(QuadResult {
            value: Complex64::new(0.0, 0.0),
            error: 0.0,
            evaluations: 0,
            intervals: 0,
        });
    }
    let mut panels = vec![gk15(&mut f, a, d, 0.0, 1.0)];
    let mut evaluations = 15;
    loop {
        let value: Complex64 = panels.iter().map(|p| p.value).sum();
        let error: f64 = panels.iter().map(|p| p.error).sum();
        if !value.is_finite() || !error.is_finite() {
            return Err(SlalomError::QuadratureNotConverged {
                segment: 0,
                estimate: f64::INFINITY,
            });
        }
        if error <= abs_tol.max(rel_tol * value.norm()) {
            return Ok(QuadResult {
                value,
                error,
                evaluations,
                intervals: panels.len(),
            });
        }
        if panels.len() >= max_intervals {
            return Err(SlalomError::QuadratureNotConverged {
                segment: 0,
                estimate: error,
            });
        }
        let worst = panels
            .iter()
            .enumerate()
            .max_by(|x, y| x.1.error.total_cmp(&y.1.error))
            .map(|(i, _)| i)
            .unwrap_or(0);
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.lo + p.hi);
        if mid <= p.lo || mid >= p.hi {
            return Err(SlalomError::QuadratureNotConverged {
                segment: 0,
                estimate: error,
            });
        }
        panels.push(gk15(&mut f, a, d, p.lo, mid));
        panels.push(gk15(&mut f, a, d, mid, p.hi));
        evaluations += 30;
    }
}
