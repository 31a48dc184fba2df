//! Large-system closed forms: ZF and MRC SINR approximations, moments of the
//! estimated Rician channel, power-scaling limits and strong-LoS limits.

use serde::{Deserialize, Serialize};

use crate::channel::{los_gram, los_inner_lambda, RicianProfile};
use crate::estimation::{estimation_quality, EstimationStats};
use crate::linalg::{hermitian_inverse, CMatrix, C64};
use crate::quantization::AdcModel;
use crate::receivers::Receiver;
use crate::{Error, Result};

/// Deterministic equivalent of `HᴴH / M` (or `ĤᴴĤ / M`), normalized by the
/// large-scale gains.
#[derive(Debug, Clone, PartialEq)]
pub struct SigmaMatrix {
    mat: CMatrix,
}

impl SigmaMatrix {
    pub fn mat(&self) -> &CMatrix {
        &self.mat
    }

    pub fn into_inner(self) -> CMatrix {
        self.mat
    }

    /// Diagonal of the inverse, `[Σ⁻¹]_kk`.
    pub fn inverse_diag(&self) -> Result<Vec<f64>> {
        let inv = hermitian_inverse(&self.mat)?;
        Ok((0..inv.nrows()).map(|k| inv[(k, k)].re).collect())
    }
}

fn sigma_with_diag(profile: &RicianProfile, m_antennas: usize, diag: impl Fn(usize) -> f64) -> SigmaMatrix {
    let k = profile.users();
    let gram = los_gram(profile.aoa(), m_antennas);
    let w: Vec<f64> = (0..k).map(|u| profile.los_weight(u)).collect();
    let m = m_antennas as f64;
    let mat = CMatrix::from_fn(k, k, |i, j| {
        let los = gram[(i, j)] * C64::from(w[i] * w[j] / m);
        if i == j {
            los + C64::from(diag(i))
        } else {
            los
        }
    });
    SigmaMatrix { mat }
}

/// `(Ω+I)⁻¹ + (1/M) [Ω(Ω+I)⁻¹]^½ H̄ᴴH̄ [Ω(Ω+I)⁻¹]^½`.
pub fn sigma_perfect(profile: &RicianProfile, m_antennas: usize) -> SigmaMatrix {
    sigma_with_diag(profile, m_antennas, |u| 1.0 / (profile.kfactor()[u] + 1.0))
}

/// As [`sigma_perfect`] with `(Ω+I)⁻¹` replaced by `Ξ(Ω+I)⁻¹`.
pub fn sigma_imperfect(profile: &RicianProfile, stats: &EstimationStats, m_antennas: usize) -> Result<SigmaMatrix> {
    check_stats(profile, stats)?;
    Ok(sigma_with_diag(profile, m_antennas, |u| {
        stats.xi[u] / (profile.kfactor()[u] + 1.0)
    }))
}

fn check_stats(profile: &RicianProfile, stats: &EstimationStats) -> Result<()> {
    if stats.users() != profile.users() {
        return Err(Error::Shape(format!(
            "statistics for {} users, profile has {}",
            stats.users(),
            profile.users()
        )));
    }
    Ok(())
}

/// Channel knowledge assumed by an approximation.
#[derive(Debug, Clone, Copy)]
pub enum CsiKnowledge<'a> {
    Perfect,
    Estimated(&'a EstimationStats),
}

/// Per-user ZF SINR approximations.
pub fn zf_sinr_approx(
    profile: &RicianProfile,
    adc: &AdcModel,
    p_u: f64,
    sigma2: f64,
    m_antennas: usize,
    csi: CsiKnowledge<'_>,
) -> Result<Vec<f64>> {
    let k = profile.users();
    if m_antennas <= k {
        return Err(Error::Precondition(format!(
            "ZF approximation needs M > K, got M={m_antennas} K={k}"
        )));
    }
    let alpha = adc.alpha;
    let dof = (m_antennas - k) as f64;
    let beta_sum = profile.beta_sum();
    match csi {
        CsiKnowledge::Perfect => {
            let inv = sigma_perfect(profile, m_antennas).inverse_diag()?;
            let noise = sigma2 / alpha + (1.0 / alpha - 1.0) * p_u * beta_sum;
            Ok((0..k)
                .map(|u| p_u * profile.beta()[u] * dof / (noise * inv[u]))
                .collect())
        }
        CsiKnowledge::Estimated(stats) => {
            let inv = sigma_imperfect(profile, stats, m_antennas)?.inverse_diag()?;
            let noise =
                alpha * sigma2 + alpha * (1.0 - alpha) * p_u * beta_sum + alpha * alpha * p_u * stats.err_var_sum();
            Ok((0..k)
                .map(|u| {
                    let theta = noise * inv[u] / (profile.beta()[u] * dof);
                    alpha * alpha * p_u / theta
                })
                .collect())
        }
    }
}

/// `E‖ĥ_k‖² = Mβ_k(𝒦_k+ξ_k)/(𝒦_k+1)`.
pub fn moment_h2(profile: &RicianProfile, stats: &EstimationStats, k: usize, m_antennas: usize) -> f64 {
    let kf = profile.kfactor()[k];
    m_antennas as f64 * profile.beta()[k] * (kf + stats.xi[k]) / (kf + 1.0)
}

/// `E‖ĥ_k‖⁴`.
pub fn moment_h4(profile: &RicianProfile, stats: &EstimationStats, k: usize, m_antennas: usize) -> f64 {
    let m = m_antennas as f64;
    let kf = profile.kfactor()[k];
    let xi = stats.xi[k];
    let beta = profile.beta()[k];
    m * beta * beta * (2.0 * kf * xi + 2.0 * m * kf * xi + m * kf * kf + (m + 1.0) * xi * xi)
        / ((kf + 1.0) * (kf + 1.0))
}

fn cross_term(profile: &RicianProfile, stats: &EstimationStats, k: usize, n: usize, m: f64, lambda: f64) -> f64 {
    let (kk, kn) = (profile.kfactor()[k], profile.kfactor()[n]);
    let (xk, xn) = (stats.xi[k], stats.xi[n]);
    profile.beta()[k] * profile.beta()[n] * (kk * kn * lambda * lambda + m * kk * xn + m * kn * xk + m * xk * xn)
        / ((kk + 1.0) * (kn + 1.0))
}

/// `E|ĥ_kᴴ ĥ_n|²` for `k ≠ n`.
pub fn moment_cross(
    profile: &RicianProfile,
    stats: &EstimationStats,
    k: usize,
    n: usize,
    m_antennas: usize,
) -> Result<f64> {
    if k == n {
        return Err(Error::Precondition("cross moment needs two distinct users".into()));
    }
    let lambda = los_inner_lambda(profile.aoa()[k], profile.aoa()[n], m_antennas);
    Ok(cross_term(profile, stats, k, n, m_antennas as f64, lambda))
}

/// Per-user MRC SINR approximations with estimated CSI.
pub fn mrc_sinr_approx(
    profile: &RicianProfile,
    stats: &EstimationStats,
    adc: &AdcModel,
    p_u: f64,
    sigma2: f64,
    m_antennas: usize,
) -> Result<Vec<f64>> {
    check_stats(profile, stats)?;
    if m_antennas == 0 {
        return Err(Error::Precondition("antenna count must be at least 1".into()));
    }
    let k = profile.users();
    let m = m_antennas as f64;
    let alpha = adc.alpha;
    let a2p = alpha * alpha * p_u;
    let noise = alpha * sigma2 + alpha * (1.0 - alpha) * p_u * profile.beta_sum() + a2p * stats.err_var_sum();
    Ok((0..k)
        .map(|u| {
            let interference: f64 = (0..k)
                .filter(|&n| n != u)
                .map(|n| {
                    let lambda = los_inner_lambda(profile.aoa()[u], profile.aoa()[n], m_antennas);
                    cross_term(profile, stats, u, n, m, lambda)
                })
                .sum();
            let theta = moment_h2(profile, stats, u, m_antennas) * noise + a2p * interference;
            a2p * moment_h4(profile, stats, u, m_antennas) / theta
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Fading {
    Rayleigh,
    Rician,
}

/// Transmit power scaled as `P_u = E_u / M^ν`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingScenario {
    pub e_u: f64,
    pub nu: f64,
    pub fading: Fading,
}

impl ScalingScenario {
    pub fn new(e_u: f64, nu: f64, fading: Fading) -> Result<Self> {
        if !(nu > 0.0 && nu.is_finite()) {
            return Err(Error::Config(format!("scaling exponent must be positive, got {nu}")));
        }
        if !(e_u > 0.0 && e_u.is_finite()) {
            return Err(Error::Config(format!("scaled energy must be positive, got {e_u}")));
        }
        Ok(Self { e_u, nu, fading })
    }

    /// The exponent at which the SINR of this fading type tends to a
    /// non-trivial constant.
    pub fn natural(e_u: f64, fading: Fading) -> Result<Self> {
        let nu = match fading {
            Fading::Rayleigh => 0.5,
            Fading::Rician => 1.0,
        };
        Self::new(e_u, nu, fading)
    }

    pub fn power_at(&self, m_antennas: usize) -> f64 {
        self.e_u / (m_antennas as f64).powf(self.nu)
    }
}

/// Limit of `c · M^e` as `M → ∞`.
fn scaled_limit(c: f64, exponent: f64) -> f64 {
    if c == 0.0 || exponent < 0.0 {
        0.0
    } else if exponent > 0.0 {
        f64::INFINITY
    } else {
        c
    }
}

/// Limiting SINR of user `k` as `M → ∞` with `P_u = E_u/M^ν`.
///
/// The MRC and ZF limits coincide, so `receiver` does not change the result.
/// A Rayleigh scenario requires `𝒦_k = 0` and a Rician one `𝒦_k > 0`.
pub fn power_scaling_limit(
    profile: &RicianProfile,
    k: usize,
    adc: &AdcModel,
    scenario: &ScalingScenario,
    sigma2: f64,
    pilot_len: usize,
    receiver: Receiver,
) -> Result<f64> {
    if k >= profile.users() {
        return Err(Error::Precondition(format!("user index {k} out of range")));
    }
    let kf = profile.kfactor()[k];
    match scenario.fading {
        Fading::Rayleigh if kf != 0.0 => {
            return Err(Error::Config(format!("Rayleigh scenario with K-factor {kf}")));
        }
        Fading::Rician if kf <= 0.0 => {
            return Err(Error::Config("Rician scenario with zero K-factor".into()));
        }
        _ => {}
    }
    let alpha = adc.alpha;
    let beta = profile.beta()[k];
    let e = scenario.e_u;
    let nu = scenario.nu;
    let los = alpha * kf * beta * e / (sigma2 * (kf + 1.0));
    let training = alpha * alpha * e * e * beta * beta * pilot_len as f64 / ((kf + 1.0) * sigma2 * sigma2);
    let limit = scaled_limit(los, 1.0 - nu) + scaled_limit(training, 1.0 - 2.0 * nu);
    match receiver {
        Receiver::Mrc | Receiver::Zf => Ok(limit),
    }
}

/// Per-user SINR limits as every K-factor tends to infinity.
pub fn strong_los_limit(
    profile: &RicianProfile,
    adc: &AdcModel,
    p_u: f64,
    sigma2: f64,
    m_antennas: usize,
    receiver: Receiver,
) -> Result<Vec<f64>> {
    let k = profile.users();
    let m = m_antennas as f64;
    let alpha = adc.alpha;
    let noise = sigma2 / alpha + (1.0 - alpha) / alpha * p_u * profile.beta_sum();
    match receiver {
        Receiver::Mrc => Ok((0..k)
            .map(|u| {
                let interference: f64 = (0..k)
                    .filter(|&n| n != u)
                    .map(|n| {
                        let l = los_inner_lambda(profile.aoa()[u], profile.aoa()[n], m_antennas);
                        profile.beta()[n] * l * l
                    })
                    .sum();
                p_u * m * m * profile.beta()[u] / (m * noise + p_u * interference)
            })
            .collect()),
        Receiver::Zf => {
            if m_antennas <= k {
                return Err(Error::Precondition(format!(
                    "ZF limit needs M > K, got M={m_antennas} K={k}"
                )));
            }
            let gram = los_gram(profile.aoa(), m_antennas) / C64::from(m);
            let inv = hermitian_inverse(&gram)?;
            let dof = (m_antennas - k) as f64;
            Ok((0..k)
                .map(|u| profile.beta()[u] * p_u * dof / (noise * inv[(u, u)].re))
                .collect())
        }
    }
}

/// Convenience wrapper: LMMSE statistics followed by the imperfect-CSI
/// approximation of `receiver`.
pub fn imperfect_sinr_approx(
    profile: &RicianProfile,
    adc: &AdcModel,
    p_u: f64,
    sigma2: f64,
    pilot_len: usize,
    m_antennas: usize,
    receiver: Receiver,
) -> Result<Vec<f64>> {
    let stats = estimation_quality(profile, adc, p_u, sigma2, pilot_len)?;
    match receiver {
        Receiver::Mrc => mrc_sinr_approx(profile, &stats, adc, p_u, sigma2, m_antennas),
        Receiver::Zf => zf_sinr_approx(profile, adc, p_u, sigma2, m_antennas, CsiKnowledge::Estimated(&stats)),
    }
}
