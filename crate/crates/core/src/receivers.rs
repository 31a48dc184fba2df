//! Linear combining (MRC, ZF) and per-realization SINR evaluation.

use std::fmt;
use std::str::FromStr;

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use crate::estimation::EstimationStats;
use crate::linalg::{diag_quadratic_form, gram, hermitian_inverse, CMatrix, CVector};
use crate::quantization::AdcModel;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Receiver {
    Mrc,
    Zf,
}

impl Receiver {
    pub const ALL: [Receiver; 2] = [Receiver::Mrc, Receiver::Zf];

    pub fn name(self) -> &'static str {
        match self {
            Receiver::Mrc => "mrc",
            Receiver::Zf => "zf",
        }
    }
}

impl fmt::Display for Receiver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Receiver {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "mrc" => Ok(Receiver::Mrc),
            "zf" => Ok(Receiver::Zf),
            _ => Err(Error::Unknown {
                kind: "receiver",
                name: s.to_string(),
            }),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum LogBase {
    /// bits/s/Hz
    #[default]
    #[serde(rename = "2")]
    Two,
    /// nats/s/Hz
    #[serde(rename = "e")]
    E,
}

/// Link-level scalars shared by every SINR evaluation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Link {
    pub adc: AdcModel,
    /// Per-user transmit power `P_u` (linear).
    pub p_u: f64,
    /// Noise power `σ²`.
    pub sigma2: f64,
    pub log_base: LogBase,
}

impl Link {
    pub fn new(adc: AdcModel, p_u: f64, sigma2: f64) -> Self {
        Self {
            adc,
            p_u,
            sigma2,
            log_base: LogBase::Two,
        }
    }
}

/// SINR of one user split into its power terms.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SinrBreakdown {
    pub signal: f64,
    pub noise: f64,
    pub quant: f64,
    pub interference: f64,
    pub est_error: f64,
    pub sinr: f64,
    pub se: f64,
}

impl SinrBreakdown {
    fn assemble(signal: f64, noise: f64, quant: f64, interference: f64, est_error: f64, base: LogBase) -> Self {
        let sinr = signal / (noise + quant + interference + est_error);
        Self {
            signal,
            noise,
            quant,
            interference,
            est_error,
            sinr,
            se: log_of(1.0 + sinr, base),
        }
    }

    pub fn distortion(&self) -> f64 {
        self.noise + self.quant + self.interference + self.est_error
    }
}

fn log_of(x: f64, base: LogBase) -> f64 {
    match base {
        LogBase::Two => x.log2(),
        LogBase::E => x.ln(),
    }
}

/// `log(1 + sinr)` in the requested base.
pub fn se_from_sinr(sinr: f64, base: LogBase) -> Result<f64> {
    if !(sinr >= 0.0) {
        return Err(Error::Domain(format!("SINR must be non-negative, got {sinr}")));
    }
    Ok(log_of(1.0 + sinr, base))
}

fn check_user(h: &CMatrix, k: usize) -> Result<()> {
    if k >= h.ncols() {
        return Err(Error::Precondition(format!(
            "user index {k} out of range for {} users",
            h.ncols()
        )));
    }
    Ok(())
}

/// MRC filter: column `k` of the channel.
pub fn mrc_filter(h: &CMatrix, k: usize) -> Result<CVector> {
    check_user(h, k)?;
    Ok(h.column(k).into_owned())
}

/// All ZF filters at once, `H (HᴴH)⁻¹`.
pub fn zf_filters(h: &CMatrix) -> Result<CMatrix> {
    if h.nrows() < h.ncols() {
        return Err(Error::Precondition(format!(
            "ZF needs at least as many antennas as users, got M={} K={}",
            h.nrows(),
            h.ncols()
        )));
    }
    let inv = hermitian_inverse(&gram(h))?;
    Ok(h * inv)
}

/// ZF filter for user `k`, column `k` of `H (HᴴH)⁻¹`.
pub fn zf_filter(h: &CMatrix, k: usize) -> Result<CVector> {
    check_user(h, k)?;
    Ok(zf_filters(h)?.column(k).into_owned())
}

/// Per-user SINRs of every user for one realization.
///
/// With `stats == None` the channel is known perfectly; otherwise `h` is the
/// estimate `Ĥ` and the estimation-error term uses `stats.err_var`. In both
/// cases `r_nq` must come from the true channel.
pub fn sinr_all(
    h: &CMatrix,
    stats: Option<&EstimationStats>,
    r_nq: &DVector<f64>,
    receiver: Receiver,
    link: &Link,
) -> Result<Vec<SinrBreakdown>> {
    let (m, k) = h.shape();
    if r_nq.len() != m {
        return Err(Error::Shape(format!(
            "quantization covariance has {} entries, channel has {m} rows",
            r_nq.len()
        )));
    }
    if let Some(s) = stats {
        if s.users() != k {
            return Err(Error::Shape(format!(
                "statistics for {} users, channel has {k}",
                s.users()
            )));
        }
    }
    let a2 = link.adc.alpha * link.adc.alpha;
    let p = link.p_u;
    let err_sum = stats.map_or(0.0, EstimationStats::err_var_sum);
    match receiver {
        Receiver::Mrc => {
            let g = gram(h);
            Ok((0..k)
                .map(|u| {
                    let norm2 = g[(u, u)].re;
                    let interference: f64 = (0..k).filter(|&n| n != u).map(|n| g[(u, n)].norm_sqr()).sum();
                    SinrBreakdown::assemble(
                        a2 * p * norm2 * norm2,
                        a2 * norm2 * link.sigma2,
                        diag_quadratic_form(&h.column(u).into_owned(), r_nq),
                        a2 * p * interference,
                        a2 * p * norm2 * err_sum,
                        link.log_base,
                    )
                })
                .collect())
        }
        Receiver::Zf => {
            let filters = zf_filters(h)?;
            Ok((0..k)
                .map(|u| {
                    let gk = filters.column(u).into_owned();
                    let norm2 = gk.norm_squared();
                    SinrBreakdown::assemble(
                        a2 * p,
                        a2 * norm2 * link.sigma2,
                        diag_quadratic_form(&gk, r_nq),
                        0.0,
                        a2 * p * norm2 * err_sum,
                        link.log_base,
                    )
                })
                .collect())
        }
    }
}

/// SINR of user `k` with perfect channel knowledge.
pub fn sinr_perfect(h: &CMatrix, k: usize, receiver: Receiver, link: &Link) -> Result<SinrBreakdown> {
    check_user(h, k)?;
    let r_nq = crate::quantization::quantization_noise_cov(h, &link.adc, link.p_u, link.sigma2)?;
    Ok(sinr_all(h, None, &r_nq, receiver, link)?[k])
}

/// SINR of user `k` when combining with the estimate `h_hat`; `r_nq_diag` is
/// the quantization covariance of the true channel.
pub fn sinr_imperfect(
    h_hat: &CMatrix,
    stats: &EstimationStats,
    r_nq_diag: &DVector<f64>,
    k: usize,
    receiver: Receiver,
    link: &Link,
) -> Result<SinrBreakdown> {
    check_user(h_hat, k)?;
    Ok(sinr_all(h_hat, Some(stats), r_nq_diag, receiver, link)?[k])
}
