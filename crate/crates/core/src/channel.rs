//! Rician fading channels seen by a half-wavelength uniform linear array.
//!
//! Column `k` of the channel matrix is
//! `√β_k (√(𝒦_k/(𝒦_k+1)) a(θ_k) + √(1/(𝒦_k+1)) w_k)` where `a(θ)` is the
//! array steering vector and `w_k` has i.i.d. `CN(0, 1)` entries.

use std::f64::consts::{FRAC_PI_2, PI};

use rand::Rng;
use rand_distr::{Distribution, StandardNormal, Uniform};
use serde::{Deserialize, Serialize};

use crate::linalg::{CMatrix, CVector, C64};
use crate::{Error, Result};

/// Path-loss exponent of the default large-scale fading profile.
pub const DEFAULT_PATHLOSS_EXPONENT: f64 = 3.8;

/// Per-user large-scale gains, Rician K-factors (linear) and angles of arrival.
#[derive(Debug, Clone, PartialEq)]
pub struct RicianProfile {
    beta: Vec<f64>,
    kfactor: Vec<f64>,
    aoa: Vec<f64>,
}

impl RicianProfile {
    pub fn new(beta: Vec<f64>, kfactor: Vec<f64>, aoa: Vec<f64>) -> Result<Self> {
        if beta.is_empty() {
            return Err(Error::Config("profile must contain at least one user".into()));
        }
        if beta.len() != kfactor.len() || beta.len() != aoa.len() {
            return Err(Error::Config(format!(
                "profile lengths differ: beta {}, kfactor {}, aoa {}",
                beta.len(),
                kfactor.len(),
                aoa.len()
            )));
        }
        if let Some(b) = beta.iter().find(|b| !(b.is_finite() && **b > 0.0)) {
            return Err(Error::Config(format!("large-scale gain must be positive, got {b}")));
        }
        if let Some(k) = kfactor.iter().find(|k| !(**k >= 0.0) || k.is_nan()) {
            return Err(Error::Config(format!("K-factor must be non-negative, got {k}")));
        }
        if let Some(t) = aoa.iter().find(|t| !(t.abs() <= FRAC_PI_2)) {
            return Err(Error::Config(format!("angle of arrival {t} outside [-pi/2, pi/2]")));
        }
        Ok(Self { beta, kfactor, aoa })
    }

    /// Same gains and angles for every user with a broadcast K-factor.
    pub fn uniform(beta: Vec<f64>, kfactor: f64, aoa: Vec<f64>) -> Result<Self> {
        let k = beta.len();
        Self::new(beta, vec![kfactor; k], aoa)
    }

    pub fn users(&self) -> usize {
        self.beta.len()
    }

    pub fn beta(&self) -> &[f64] {
        &self.beta
    }

    pub fn kfactor(&self) -> &[f64] {
        &self.kfactor
    }

    pub fn aoa(&self) -> &[f64] {
        &self.aoa
    }

    pub fn beta_sum(&self) -> f64 {
        self.beta.iter().sum()
    }

    /// Copy of the profile with new angles of arrival.
    pub fn with_aoa(&self, aoa: Vec<f64>) -> Result<Self> {
        Self::new(self.beta.clone(), self.kfactor.clone(), aoa)
    }

    /// Copy of the profile with a new K-factor for every user.
    pub fn with_kfactor(&self, kfactor: f64) -> Result<Self> {
        Self::new(self.beta.clone(), vec![kfactor; self.users()], self.aoa.clone())
    }

    /// `√(𝒦_k/(𝒦_k+1))`.
    pub fn los_weight(&self, k: usize) -> f64 {
        let kf = self.kfactor[k];
        if kf.is_infinite() {
            1.0
        } else {
            (kf / (kf + 1.0)).sqrt()
        }
    }

    /// `√(1/(𝒦_k+1))`.
    pub fn nlos_weight(&self, k: usize) -> f64 {
        (1.0 / (self.kfactor[k] + 1.0)).sqrt()
    }

    /// Entry mean magnitude `√(𝒦_k β_k/(𝒦_k+1))` of column `k`.
    pub fn los_amplitude(&self, k: usize) -> f64 {
        self.los_weight(k) * self.beta[k].sqrt()
    }

    /// Entry variance `β_k/(𝒦_k+1)` of column `k`.
    pub fn nlos_variance(&self, k: usize) -> f64 {
        self.beta[k] / (self.kfactor[k] + 1.0)
    }

    /// Deterministic distance-based gains: users on radii
    /// `d_k = d_max (0.1 + 0.9 k/(K-1))` with `β_k = (d_k/d_max)^-3.8`.
    pub fn default_betas(users: usize) -> Vec<f64> {
        if users == 1 {
            return vec![1.0];
        }
        (0..users)
            .map(|k| {
                let rel = 0.1 + 0.9 * k as f64 / (users - 1) as f64;
                rel.powf(-DEFAULT_PATHLOSS_EXPONENT)
            })
            .collect()
    }

    /// Angles drawn uniformly on `[-π/2, π/2]`.
    pub fn random_aoa<R: Rng + ?Sized>(users: usize, rng: &mut R) -> Vec<f64> {
        let dist = Uniform::new_inclusive(-FRAC_PI_2, FRAC_PI_2).expect("finite bounds");
        (0..users).map(|_| dist.sample(rng)).collect()
    }
}

/// JSON form of a profile: `{"beta": [...], "kfactor_db": [...], "aoa_rad": [...]}`.
///
/// Every field is optional so that the harness can override part of a
/// generated profile.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileJson {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub beta: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kfactor_db: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aoa_rad: Option<Vec<f64>>,
}

impl ProfileJson {
    /// Full profile; all three fields must be present.
    pub fn to_profile(&self) -> Result<RicianProfile> {
        match (&self.beta, &self.kfactor_db, &self.aoa_rad) {
            (Some(b), Some(kdb), Some(a)) => {
                RicianProfile::new(b.clone(), kdb.iter().map(|d| db_to_linear(*d)).collect(), a.clone())
            }
            _ => Err(Error::Config("profile JSON needs beta, kfactor_db and aoa_rad".into())),
        }
    }

    pub fn from_profile(p: &RicianProfile) -> Self {
        Self {
            beta: Some(p.beta.clone()),
            kfactor_db: Some(p.kfactor.iter().map(|k| 10.0 * k.log10()).collect()),
            aoa_rad: Some(p.aoa.clone()),
        }
    }
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// One draw of the channel together with its LoS and NLoS parts.
#[derive(Debug, Clone)]
pub struct ChannelRealization {
    /// Full channel `H`, `M×K`.
    pub h: CMatrix,
    /// Unit-modulus LoS matrix `H̄`.
    pub h_los: CMatrix,
    /// Standard complex Gaussian NLoS matrix `H_w`.
    pub h_nlos: CMatrix,
}

/// ULA response, entry `m` is `exp(-j m π sin θ)` for `m = 0..M`.
pub fn steering_vector(theta: f64, m_antennas: usize) -> CVector {
    let phase = -PI * theta.sin();
    CVector::from_iterator(
        m_antennas,
        (0..m_antennas).map(|m| C64::from_polar(1.0, phase * m as f64)),
    )
}

/// `M×K` matrix whose columns are the users' steering vectors.
pub fn los_matrix(aoa: &[f64], m_antennas: usize) -> CMatrix {
    let mut out = CMatrix::zeros(m_antennas, aoa.len());
    for (k, &theta) in aoa.iter().enumerate() {
        out.set_column(k, &steering_vector(theta, m_antennas));
    }
    out
}

/// Dirichlet-kernel magnitude `sin(Mπ/2 Δ) / sin(π/2 Δ)` with
/// `Δ = sin θ_k - sin θ_n`; its square equals `|a(θ_k)ᴴ a(θ_n)|²`.
pub fn los_inner_lambda(theta_k: f64, theta_n: f64, m_antennas: usize) -> f64 {
    dirichlet(PI * (theta_k.sin() - theta_n.sin()), m_antennas)
}

/// `Σ_{m<M} cos((m - (M-1)/2) x)`, i.e. `sin(Mx/2)/sin(x/2)` continued
/// through its removable singularities.
fn dirichlet(x: f64, m_antennas: usize) -> f64 {
    let m = m_antennas as f64;
    let half = 0.5 * x;
    if half.sin().abs() > 1e-6 {
        (m * half).sin() / half.sin()
    } else {
        let centre = 0.5 * (m - 1.0);
        (0..m_antennas).map(|i| ((i as f64 - centre) * x).cos()).sum()
    }
}

/// `H̄ᴴH̄` for the given angles in closed form, independent of `M` in cost.
pub fn los_gram(aoa: &[f64], m_antennas: usize) -> CMatrix {
    let k = aoa.len();
    let m = m_antennas as f64;
    CMatrix::from_fn(k, k, |i, j| {
        if i == j {
            return C64::new(m, 0.0);
        }
        let x = PI * (aoa[i].sin() - aoa[j].sin());
        C64::from_polar(1.0, 0.5 * (m - 1.0) * x) * dirichlet(x, m_antennas)
    })
}

/// `√β_k (√(𝒦/(𝒦+1)) H̄_k + √(1/(𝒦+1)) H_w,k)` column by column.
pub fn compose_channel(profile: &RicianProfile, h_los: &CMatrix, h_nlos: &CMatrix) -> Result<CMatrix> {
    let k = profile.users();
    if h_los.ncols() != k || h_nlos.ncols() != k || h_los.nrows() != h_nlos.nrows() {
        return Err(Error::Shape(format!(
            "LoS {}x{} and NLoS {}x{} parts do not match a {k}-user profile",
            h_los.nrows(),
            h_los.ncols(),
            h_nlos.nrows(),
            h_nlos.ncols()
        )));
    }
    let mut h = CMatrix::zeros(h_los.nrows(), k);
    for u in 0..k {
        let sb = profile.beta[u].sqrt();
        let a = profile.los_weight(u) * sb;
        let b = profile.nlos_weight(u) * sb;
        let col = h_los.column(u) * C64::from(a) + h_nlos.column(u) * C64::from(b);
        h.set_column(u, &col);
    }
    Ok(h)
}

/// `CN(0, variance)` sample.
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> C64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = StandardNormal.sample(rng);
    let im: f64 = StandardNormal.sample(rng);
    C64::new(s * re, s * im)
}

/// `rows×cols` matrix of i.i.d. `CN(0, 1)` entries, filled column by column.
pub fn standard_gaussian_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng, 1.0))
}

pub fn sample_channel<R: Rng + ?Sized>(
    profile: &RicianProfile,
    m_antennas: usize,
    rng: &mut R,
) -> Result<ChannelRealization> {
    if m_antennas == 0 {
        return Err(Error::Config("antenna count must be at least 1".into()));
    }
    let h_los = los_matrix(&profile.aoa, m_antennas);
    let h_nlos = standard_gaussian_matrix(m_antennas, profile.users(), rng);
    let h = compose_channel(profile, &h_los, &h_nlos)?;
    Ok(ChannelRealization { h, h_los, h_nlos })
}
