//! Additive quantization noise model (AQNM).
//!
//! A `b`-bit ADC is replaced by `y_q = α y + n_q` where `n_q` is Gaussian,
//! uncorrelated with `y` and independent across antennas, with per-antenna
//! variance `α(1-α)(P_u ‖H_{m,:}‖² + σ²)`.

use nalgebra::DVector;
use rand::Rng;
use statrs::distribution::{Continuous, ContinuousCDF, Normal};

use crate::channel::complex_gaussian;
use crate::linalg::{CMatrix, CVector, C64};
use crate::{Error, Result};

/// Distortion of the MSE-optimal (Lloyd-Max) quantizer for a unit Gaussian,
/// indexed by `bits - 1`.
pub const LLOYD_MAX_DISTORTION: [f64; 5] = [0.3634, 0.1175, 0.034538, 0.0094874, 0.0024977];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AdcModel {
    /// Resolution, `None` for models built directly from `α`.
    pub bits: Option<u32>,
    /// Inverse SQNR `ε`.
    pub epsilon: f64,
    /// AQNM gain `α = 1 - ε`.
    pub alpha: f64,
}

impl AdcModel {
    pub fn from_bits(bits: u32) -> Result<Self> {
        alpha_for_bits(bits)
    }

    /// Model with a prescribed gain; `α = 1` is an ideal converter.
    pub fn from_alpha(alpha: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha <= 1.0) {
            return Err(Error::Config(format!("AQNM gain must lie in (0, 1], got {alpha}")));
        }
        Ok(Self {
            bits: None,
            epsilon: 1.0 - alpha,
            alpha,
        })
    }

    pub fn ideal() -> Self {
        Self {
            bits: None,
            epsilon: 0.0,
            alpha: 1.0,
        }
    }

    /// `α(1-α)`, never above 1/4.
    pub fn distortion_factor(&self) -> f64 {
        self.alpha * (1.0 - self.alpha)
    }
}

/// AQNM parameters for a `bits`-resolution ADC. Tabulated Lloyd-Max values
/// for 1 to 5 bits, `ε = (π√3/2) 2^{-2b}` above.
pub fn alpha_for_bits(bits: u32) -> Result<AdcModel> {
    if bits == 0 {
        return Err(Error::Config("ADC resolution must be at least 1 bit".into()));
    }
    let epsilon = if bits as usize <= LLOYD_MAX_DISTORTION.len() {
        LLOYD_MAX_DISTORTION[bits as usize - 1]
    } else {
        std::f64::consts::PI * 3f64.sqrt() / 2.0 * 2f64.powi(-2 * bits as i32)
    };
    Ok(AdcModel {
        bits: Some(bits),
        epsilon,
        alpha: 1.0 - epsilon,
    })
}

fn check_powers(p_u: f64, sigma2: f64) -> Result<()> {
    if !(sigma2 > 0.0) {
        return Err(Error::Domain(format!("noise power must be positive, got {sigma2}")));
    }
    if !(p_u >= 0.0) {
        return Err(Error::Domain(format!("transmit power must be non-negative, got {p_u}")));
    }
    Ok(())
}

/// Diagonal of `R_{n_q} = α(1-α) diag(P_u H Hᴴ + σ² I)`.
pub fn quantization_noise_cov(h: &CMatrix, adc: &AdcModel, p_u: f64, sigma2: f64) -> Result<DVector<f64>> {
    check_powers(p_u, sigma2)?;
    let f = adc.distortion_factor();
    Ok(DVector::from_iterator(
        h.nrows(),
        h.row_iter().map(|row| f * (p_u * row.norm_squared() + sigma2)),
    ))
}

/// `α y + n_q` with `n_q` drawn from the conditional AQNM covariance of `h`.
pub fn aqnm_quantize<R: Rng + ?Sized>(
    y: &CVector,
    h: &CMatrix,
    adc: &AdcModel,
    p_u: f64,
    sigma2: f64,
    rng: &mut R,
) -> Result<CVector> {
    if y.len() != h.nrows() {
        return Err(Error::Shape(format!(
            "received vector has {} entries but the channel has {} rows",
            y.len(),
            h.nrows()
        )));
    }
    let cov = quantization_noise_cov(h, adc, p_u, sigma2)?;
    Ok(CVector::from_iterator(
        y.len(),
        y.iter()
            .zip(cov.iter())
            .map(|(x, v)| x * C64::from(adc.alpha) + complex_gaussian(rng, *v)),
    ))
}

/// Mid-rise uniform quantizer applied to the real and imaginary parts
/// separately; levels `(i + 1/2) step` for `i = -2^{b-1} .. 2^{b-1}-1`.
pub fn uniform_quantize(y: &CVector, bits: u32, step: f64) -> CVector {
    assert!(bits >= 1, "uniform quantizer needs at least one bit");
    assert!(step > 0.0, "quantizer step must be positive");
    y.map(|x| C64::new(quantize_real(x.re, bits, step), quantize_real(x.im, bits, step)))
}

fn quantize_real(x: f64, bits: u32, step: f64) -> f64 {
    let half_levels = 2f64.powi(bits as i32 - 1);
    let idx = (x / step).floor().clamp(-half_levels, half_levels - 1.0);
    (idx + 0.5) * step
}

/// Mean-squared error of the mid-rise quantizer on a unit-variance Gaussian.
pub fn uniform_quantizer_mse(bits: u32, step: f64) -> f64 {
    let normal = Normal::standard();
    let levels = 1usize << bits;
    let half = (levels / 2) as f64;
    (0..levels)
        .map(|i| {
            let q = (i as f64 - half + 0.5) * step;
            let lo = if i == 0 {
                f64::NEG_INFINITY
            } else {
                (i as f64 - half) * step
            };
            let hi = if i == levels - 1 {
                f64::INFINITY
            } else {
                (i as f64 - half + 1.0) * step
            };
            cell_mse(&normal, lo, hi, q)
        })
        .sum()
}

/// `∫_lo^hi (x - q)² φ(x) dx`.
fn cell_mse(normal: &Normal, lo: f64, hi: f64, q: f64) -> f64 {
    let (pdf_lo, xpdf_lo) = if lo.is_finite() {
        (normal.pdf(lo), lo * normal.pdf(lo))
    } else {
        (0.0, 0.0)
    };
    let (pdf_hi, xpdf_hi) = if hi.is_finite() {
        (normal.pdf(hi), hi * normal.pdf(hi))
    } else {
        (0.0, 0.0)
    };
    let mass = normal.cdf(hi) - normal.cdf(lo);
    (1.0 + q * q) * mass + xpdf_lo - xpdf_hi - 2.0 * q * (pdf_lo - pdf_hi)
}

/// Step minimizing [`uniform_quantizer_mse`], by golden-section search.
pub fn mse_optimal_step(bits: u32) -> f64 {
    let (mut a, mut b) = (1e-3, 4.0);
    let g = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = b - g * (b - a);
    let mut d = a + g * (b - a);
    while (b - a).abs() > 1e-10 {
        if uniform_quantizer_mse(bits, c) < uniform_quantizer_mse(bits, d) {
            b = d;
        } else {
            a = c;
        }
        c = b - g * (b - a);
        d = a + g * (b - a);
    }
    0.5 * (a + b)
}
