//! LMMSE channel estimation from pilots that pass through the same
//! low-resolution ADCs as the data.
//!
//! The line-of-sight part, the K-factors and the large-scale gains are known
//! at the base station, so only the scattered component is estimated. Two
//! routes are provided: [`estimate_channel_explicit`] runs the pilot phase
//! symbol by symbol, [`sample_estimated_channel`] draws the estimate and its
//! error directly from their closed-form distributions.

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::channel::{complex_gaussian, los_matrix, ChannelRealization, RicianProfile};
use crate::linalg::{CMatrix, C64};
use crate::quantization::AdcModel;
use crate::{Error, Result};

/// Orthogonal pilot sequences, one row per user: `Φ Φᴴ = L I_K`.
#[derive(Debug, Clone, PartialEq)]
pub struct PilotConfig {
    matrix: CMatrix,
}

impl PilotConfig {
    pub fn new(matrix: CMatrix) -> Result<Self> {
        let (k, l) = matrix.shape();
        if k == 0 || l < k {
            return Err(Error::Config(format!(
                "pilot matrix must be K x L with L >= K >= 1, got {k}x{l}"
            )));
        }
        let target = l as f64;
        let outer = &matrix * matrix.adjoint();
        let worst = (0..k)
            .flat_map(|i| (0..k).map(move |j| (i, j)))
            .map(|(i, j)| {
                let expect = if i == j { target } else { 0.0 };
                (outer[(i, j)] - C64::from(expect)).norm()
            })
            .fold(0.0, f64::max);
        if worst > 1e-12 * target {
            return Err(Error::Config(format!(
                "pilot rows are not orthogonal with energy L (deviation {worst:.3e})"
            )));
        }
        Ok(Self { matrix })
    }

    /// First `users` rows of the `length`-point DFT matrix.
    pub fn dft(users: usize, length: usize) -> Result<Self> {
        if users == 0 || length < users {
            return Err(Error::Config(format!(
                "pilot length {length} cannot carry {users} orthogonal sequences"
            )));
        }
        let l = length as f64;
        let matrix = CMatrix::from_fn(users, length, |k, n| {
            // (k·n) mod L keeps the phase argument small for long pilots.
            let idx = (k * n) % length;
            C64::from_polar(1.0, -2.0 * std::f64::consts::PI * idx as f64 / l)
        });
        Self::new(matrix)
    }

    pub fn users(&self) -> usize {
        self.matrix.nrows()
    }

    pub fn length(&self) -> usize {
        self.matrix.ncols()
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }
}

/// Per-user LMMSE quality.
#[derive(Debug, Clone, PartialEq)]
pub struct EstimationStats {
    /// Fraction `ξ_k` of the scattered power captured by the estimate.
    pub xi: Vec<f64>,
    /// Entry variance `σ²_{e,k} = β_k (1-ξ_k)/(𝒦_k+1)` of the estimation error.
    pub err_var: Vec<f64>,
    /// Entry variance `β_k ξ_k/(𝒦_k+1)` of the estimated scattered component.
    pub est_var: Vec<f64>,
    /// Correlator weight `ψ_k`; zero for [`EstimationStats::perfect`].
    pub psi: Vec<f64>,
}

impl EstimationStats {
    /// Error-free knowledge of the channel (`ξ_k = 1`).
    pub fn perfect(profile: &RicianProfile) -> Self {
        let k = profile.users();
        Self {
            xi: vec![1.0; k],
            err_var: vec![0.0; k],
            est_var: (0..k).map(|u| profile.nlos_variance(u)).collect(),
            psi: vec![0.0; k],
        }
    }

    pub fn users(&self) -> usize {
        self.xi.len()
    }

    pub fn err_var_sum(&self) -> f64 {
        self.err_var.iter().sum()
    }
}

/// `σ²/α + (1/α - 1) P_u Σ_n β_n`, the effective training noise per unit of
/// pilot energy.
fn effective_noise(profile: &RicianProfile, adc: &AdcModel, p_u: f64, sigma2: f64) -> f64 {
    sigma2 / adc.alpha + (1.0 / adc.alpha - 1.0) * p_u * profile.beta_sum()
}

/// Closed-form LMMSE statistics; they do not depend on the antenna count.
pub fn estimation_quality(
    profile: &RicianProfile,
    adc: &AdcModel,
    p_u: f64,
    sigma2: f64,
    pilot_len: usize,
) -> Result<EstimationStats> {
    if pilot_len == 0 {
        return Err(Error::Config("pilot length must be at least 1".into()));
    }
    if !(p_u > 0.0) {
        return Err(Error::Config(format!("pilot power must be positive, got {p_u}")));
    }
    if !(sigma2 > 0.0) {
        return Err(Error::Domain(format!("noise power must be positive, got {sigma2}")));
    }
    let l = pilot_len as f64;
    let noise = effective_noise(profile, adc, p_u, sigma2);
    let beta_sum = profile.beta_sum();
    let k = profile.users();
    let mut stats = EstimationStats {
        xi: Vec::with_capacity(k),
        err_var: Vec::with_capacity(k),
        est_var: Vec::with_capacity(k),
        psi: Vec::with_capacity(k),
    };
    for u in 0..k {
        let beta = profile.beta()[u];
        let kp1 = profile.kfactor()[u] + 1.0;
        let energy = p_u * l * beta;
        let xi = energy / (energy + kp1 * noise);
        stats.xi.push(xi);
        stats.err_var.push(beta * (1.0 - xi) / kp1);
        stats.est_var.push(beta * xi / kp1);
        stats
            .psi
            .push(beta / kp1.sqrt() / (adc.alpha * l * beta * p_u / kp1 + sigma2 + (1.0 - adc.alpha) * p_u * beta_sum));
    }
    Ok(stats)
}

/// How the ADC distortion of the pilot phase is drawn.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TrainingNoise {
    /// Per-entry variance `α(1-α)(σ² + P_u Σ_n β_n)`, the channel-averaged
    /// covariance.
    #[default]
    Isotropic,
    /// Per-entry variance `α(1-α)(P_u |[HΦ]_{ml}|² + σ²)`, conditioned on the
    /// realized channel and pilot symbol.
    Conditional,
}

/// Output of [`estimate_channel_explicit`].
#[derive(Debug, Clone)]
pub struct ExplicitEstimate {
    /// Channel estimate `Ĥ` (known LoS part plus estimated scattered part).
    pub h_hat: CMatrix,
    /// Estimates of the unnormalized scattered columns `√β_k h_{w,k}`.
    pub scattered_hat: CMatrix,
    pub stats: EstimationStats,
}

/// Runs the quantized pilot phase on a channel realization and returns the
/// LMMSE estimate.
#[allow(clippy::too_many_arguments)]
pub fn estimate_channel_explicit<R: Rng + ?Sized>(
    real: &ChannelRealization,
    profile: &RicianProfile,
    pilots: &PilotConfig,
    adc: &AdcModel,
    p_u: f64,
    sigma2: f64,
    noise: TrainingNoise,
    rng: &mut R,
) -> Result<ExplicitEstimate> {
    let (m, k) = real.h.shape();
    if pilots.users() != k || profile.users() != k {
        return Err(Error::Shape(format!(
            "channel has {k} users, pilots {} and profile {}",
            pilots.users(),
            profile.users()
        )));
    }
    let stats = estimation_quality(profile, adc, p_u, sigma2, pilots.length())?;
    let l = pilots.length();
    let phi = pilots.matrix();
    let sqrt_p = p_u.sqrt();
    let alpha = adc.alpha;
    let dist = adc.distortion_factor();

    let clean = &real.h * phi * C64::from(sqrt_p);
    let iso_var = dist * (sigma2 + p_u * profile.beta_sum());
    let received = CMatrix::from_fn(m, l, |i, j| {
        let nq_var = match noise {
            TrainingNoise::Isotropic => iso_var,
            TrainingNoise::Conditional => dist * (clean[(i, j)].norm_sqr() + sigma2),
        };
        clean[(i, j)] * C64::from(alpha)
            + complex_gaussian(rng, sigma2) * C64::from(alpha)
            + complex_gaussian(rng, nq_var)
    });

    let mut los = los_matrix(profile.aoa(), m);
    for u in 0..k {
        let amp = profile.los_amplitude(u);
        los.column_mut(u).scale_mut(amp);
    }
    let residual = received - &los * phi * C64::from(alpha * sqrt_p);

    // ỹ_k = Y x_kᴴ with x_k = √P_u φ_k.
    let correlated = residual * phi.adjoint() * C64::from(sqrt_p);
    let mut scattered_hat = CMatrix::zeros(m, k);
    let mut h_hat = los;
    for u in 0..k {
        let est = correlated.column(u) * C64::from(stats.psi[u]);
        let scaled = &est * C64::from(profile.nlos_weight(u));
        let mut col = h_hat.column_mut(u);
        col += scaled;
        scattered_hat.set_column(u, &est);
    }
    Ok(ExplicitEstimate {
        h_hat,
        scattered_hat,
        stats,
    })
}

/// Estimated channel, true channel and estimation error `h_true = ĥ + e`.
#[derive(Debug, Clone)]
pub struct EstimatedChannel {
    pub h_hat: CMatrix,
    pub h_true: CMatrix,
    pub err: CMatrix,
}

/// Draws `ĥ_mk = √(𝒦β/(𝒦+1)) ρ_mk + δ_mk/√(𝒦+1)` with `δ_mk ~ CN(0, β ξ)` and an
/// independent error with entry variance `σ²_{e,k}`.
pub fn sample_estimated_channel<R: Rng + ?Sized>(
    profile: &RicianProfile,
    stats: &EstimationStats,
    m_antennas: usize,
    rng: &mut R,
) -> Result<EstimatedChannel> {
    let k = profile.users();
    if stats.users() != k {
        return Err(Error::Shape(format!(
            "statistics for {} users, profile has {k}",
            stats.users()
        )));
    }
    if m_antennas == 0 {
        return Err(Error::Config("antenna count must be at least 1".into()));
    }
    let los = los_matrix(profile.aoa(), m_antennas);
    let mut h_hat = CMatrix::zeros(m_antennas, k);
    let mut err = CMatrix::zeros(m_antennas, k);
    for u in 0..k {
        let amp = profile.los_amplitude(u);
        for i in 0..m_antennas {
            h_hat[(i, u)] = los[(i, u)] * C64::from(amp) + complex_gaussian(rng, stats.est_var[u]);
        }
        for i in 0..m_antennas {
            err[(i, u)] = complex_gaussian(rng, stats.err_var[u]);
        }
    }
    let h_true = &h_hat + &err;
    Ok(EstimatedChannel { h_hat, h_true, err })
}
