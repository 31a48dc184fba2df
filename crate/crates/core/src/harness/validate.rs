use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::run::trial_rng;
use crate::asymptotics::{
    imperfect_sinr_approx, moment_cross, moment_h2, moment_h4, power_scaling_limit, strong_los_limit, Fading,
    ScalingScenario,
};
use crate::channel::{sample_channel, standard_gaussian_matrix, RicianProfile};
use crate::estimation::{
    estimate_channel_explicit, estimation_quality, sample_estimated_channel, EstimationStats, PilotConfig,
    TrainingNoise,
};
use crate::linalg::{pairwise_sum, CVector, C64};
use crate::quantization::{
    alpha_for_bits, aqnm_quantize, mse_optimal_step, quantization_noise_cov, uniform_quantize, AdcModel,
};
use crate::receivers::{zf_filters, Receiver};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Suite {
    Moments,
    Limits,
    Lmmse,
    ZfNull,
    Aqnm,
}

impl Suite {
    pub const ALL: [Suite; 5] = [Suite::Moments, Suite::Limits, Suite::Lmmse, Suite::ZfNull, Suite::Aqnm];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Moments => "moments",
            Suite::Limits => "limits",
            Suite::Lmmse => "lmmse",
            Suite::ZfNull => "zf_null",
            Suite::Aqnm => "aqnm",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "validation suite",
                name: s.to_string(),
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ValidationReport {
    pub suite: Suite,
    pub seed: u64,
    pub checks: Vec<Check>,
}

impl ValidationReport {
    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for c in &self.checks {
            let tag = if c.passed { "PASS" } else { "FAIL" };
            writeln!(f, "{tag} {}/{}: {}", self.suite, c.name, c.detail)?;
        }
        let n = self.checks.iter().filter(|c| c.passed).count();
        write!(
            f,
            "{}: {n}/{} checks passed (seed {})",
            self.suite,
            self.checks.len(),
            self.seed
        )
    }
}

fn check(name: &str, passed: bool, detail: String) -> Check {
    Check {
        name: name.to_string(),
        passed,
        detail,
    }
}

/// Sample mean and standard error.
fn summary(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    (mean, (pairwise_sum(&dev) / (n - 1.0) / n).sqrt())
}

fn rel(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs()
}

/// Runs one suite deterministically under `seed`.
pub fn validate(suite: Suite, seed: u64) -> Result<ValidationReport> {
    let checks = match suite {
        Suite::Moments => moments(seed)?,
        Suite::Limits => limits(seed)?,
        Suite::Lmmse => lmmse(seed)?,
        Suite::ZfNull => zf_null(seed)?,
        Suite::Aqnm => aqnm(seed)?,
    };
    Ok(ValidationReport { suite, seed, checks })
}

const MOMENT_SAMPLES: usize = 200_000;
const CHUNKS: usize = 64;

fn moments(seed: u64) -> Result<Vec<Check>> {
    let m = 32;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let kf: Vec<f64> = (0..2).map(|_| rng.random_range(0.2..5.0)).collect();
    let aoa = RicianProfile::random_aoa(2, &mut rng);
    let profile = RicianProfile::new(vec![1.0, 0.5], kf, aoa)?;
    let xi: Vec<f64> = (0..2).map(|_| rng.random_range(0.1..0.95)).collect();
    let stats = EstimationStats {
        err_var: (0..2)
            .map(|u| profile.beta()[u] * (1.0 - xi[u]) / (profile.kfactor()[u] + 1.0))
            .collect(),
        est_var: (0..2)
            .map(|u| profile.beta()[u] * xi[u] / (profile.kfactor()[u] + 1.0))
            .collect(),
        psi: vec![0.0; 2],
        xi,
    };

    let per_chunk = MOMENT_SAMPLES / CHUNKS;
    let chunks: Vec<Vec<[f64; 3]>> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut r = trial_rng(seed, 1, c as u64);
            (0..per_chunk)
                .map(|_| {
                    let e = sample_estimated_channel(&profile, &stats, m, &mut r)?;
                    let h0 = e.h_hat.column(0);
                    let n2 = h0.norm_squared();
                    Ok([n2, n2 * n2, h0.dotc(&e.h_hat.column(1)).norm_sqr()])
                })
                .collect::<Result<Vec<_>>>()
        })
        .collect::<Result<_>>()?;
    let samples: Vec<[f64; 3]> = chunks.into_iter().flatten().collect();
    let column = |i: usize| samples.iter().map(|s| s[i]).collect::<Vec<f64>>();

    let targets = [
        ("norm2", moment_h2(&profile, &stats, 0, m), 0.0),
        ("norm4", moment_h4(&profile, &stats, 0, m), 2.0 / m as f64),
        ("cross", moment_cross(&profile, &stats, 0, 1, m)?, 0.0),
    ];
    Ok(targets
        .iter()
        .enumerate()
        .map(|(i, (name, target, rel_tol))| {
            let (mean, se) = summary(&column(i));
            let tol = (3.0 * se).max(rel_tol * target);
            check(
                name,
                (mean - target).abs() <= tol,
                format!("sample {mean:.6} closed form {target:.6} tolerance {tol:.3e}"),
            )
        })
        .collect())
}

fn limits(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    let k = 10;
    let pilot_len = 10;
    let m = 100_000;
    let adc = alpha_for_bits(3)?;

    let aoa = RicianProfile::random_aoa(k, &mut rng);
    let rician = RicianProfile::uniform(vec![1.0; k], 10.0, aoa.clone())?;
    let rayleigh = RicianProfile::uniform(vec![1.0; k], 0.0, aoa.clone())?;
    for (label, profile, scenario) in [
        (
            "rician_scaling",
            &rician,
            ScalingScenario::natural(10.0, Fading::Rician)?,
        ),
        (
            "rayleigh_scaling",
            &rayleigh,
            ScalingScenario::natural(0.1, Fading::Rayleigh)?,
        ),
    ] {
        let p_u = scenario.power_at(m);
        let mut worst: f64 = 0.0;
        let mut equal = true;
        for rx in Receiver::ALL {
            let approx = imperfect_sinr_approx(profile, &adc, p_u, 1.0, pilot_len, m, rx)?;
            for (u, g) in approx.iter().enumerate() {
                let lim = power_scaling_limit(profile, u, &adc, &scenario, 1.0, pilot_len, rx)?;
                let other = power_scaling_limit(profile, u, &adc, &scenario, 1.0, pilot_len, Receiver::Mrc)?;
                equal &= (lim - other).abs() <= 1e-12 * lim.abs();
                worst = worst.max(rel(*g, lim));
            }
        }
        out.push(check(
            label,
            worst <= 0.02 && equal,
            format!("max relative gap {worst:.3e} at M={m}, receivers agree: {equal}"),
        ));
    }

    let strong = RicianProfile::uniform(vec![1.0; k], 1e6, aoa)?;
    let m = 200;
    let mut worst: f64 = 0.0;
    for rx in Receiver::ALL {
        let approx = imperfect_sinr_approx(&strong, &adc, 100.0, 1.0, pilot_len, m, rx)?;
        let lim = strong_los_limit(&strong, &adc, 100.0, 1.0, m, rx)?;
        for u in 0..k {
            worst = worst.max(rel(approx[u], lim[u]));
        }
    }
    out.push(check(
        "strong_los",
        worst <= 0.01,
        format!("max relative gap {worst:.3e} at K-factor 1e6"),
    ));
    Ok(out)
}

fn lmmse(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let k = 4;
    let m = 500;
    let trials = 200;
    let aoa = RicianProfile::random_aoa(k, &mut rng);
    let profile = RicianProfile::new(vec![1.0, 0.5, 2.0, 0.8], vec![0.5, 1.0, 2.0, 4.0], aoa)?;
    let adc = alpha_for_bits(3)?;
    let pilots = PilotConfig::dft(k, k)?;
    let (p_u, sigma2) = (10.0, 1.0);

    let mut est = (0..k)
        .map(|_| Vec::with_capacity(m * trials))
        .collect::<Vec<Vec<f64>>>();
    let mut err = (0..k)
        .map(|_| Vec::with_capacity(m * trials))
        .collect::<Vec<Vec<f64>>>();
    let mut stats = None;
    for t in 0..trials {
        let mut r = trial_rng(seed, 2, t as u64);
        let real = sample_channel(&profile, m, &mut r)?;
        let e = estimate_channel_explicit(
            &real,
            &profile,
            &pilots,
            &adc,
            p_u,
            sigma2,
            TrainingNoise::Isotropic,
            &mut r,
        )?;
        for u in 0..k {
            for i in 0..m {
                est[u].push(e.scattered_hat[(i, u)].norm_sqr());
                err[u].push((real.h[(i, u)] - e.h_hat[(i, u)]).norm_sqr());
            }
        }
        stats = Some(e.stats);
    }
    let stats = stats.expect("at least one trial");
    let mut worst_est: f64 = 0.0;
    let mut worst_err: f64 = 0.0;
    for u in 0..k {
        let (v_est, _) = summary(&est[u]);
        let (v_err, _) = summary(&err[u]);
        worst_est = worst_est.max(rel(v_est, stats.xi[u] * profile.beta()[u]));
        worst_err = worst_err.max(rel(v_err, stats.err_var[u]));
    }
    let mut out = vec![
        check(
            "estimate_variance",
            worst_est <= 0.03,
            format!(
                "max relative deviation {worst_est:.3e} over {} entries per user",
                m * trials
            ),
        ),
        check(
            "error_variance",
            worst_err <= 0.03,
            format!(
                "max relative deviation {worst_err:.3e} over {} entries per user",
                m * trials
            ),
        ),
    ];

    let mut r = trial_rng(seed, 3, 0);
    let real = sample_channel(&profile, 64, &mut r)?;
    let e = estimate_channel_explicit(
        &real,
        &profile,
        &pilots,
        &AdcModel::ideal(),
        p_u,
        1e-12,
        TrainingNoise::Isotropic,
        &mut r,
    )?;
    let mut worst: f64 = 0.0;
    for u in 0..k {
        let truth = real.h_nlos.column(u) * C64::from(profile.beta()[u].sqrt());
        let gap = (&truth - e.scattered_hat.column(u)).norm() / truth.norm();
        worst = worst.max(gap);
    }
    out.push(check(
        "noiseless_recovery",
        worst < 1e-5,
        format!("max relative error {worst:.3e}"),
    ));
    let q = estimation_quality(&profile, &adc, p_u, sigma2, k)?;
    let bookkeeping = (0..k).all(|u| {
        let total = profile.beta()[u] / (profile.kfactor()[u] + 1.0);
        (q.est_var[u] + q.err_var[u] - total).abs() <= 1e-12 * total
    });
    out.push(check(
        "variance_bookkeeping",
        bookkeeping,
        "estimate plus error variance".into(),
    ));
    Ok(out)
}

fn zf_null(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let k = rng.random_range(1..=10usize);
        let m = rng.random_range(k..=64);
        let h = standard_gaussian_matrix(m, k, &mut rng);
        let g = zf_filters(&h)?;
        let r = g.adjoint() * &h;
        for i in 0..k {
            for j in 0..k {
                let target = if i == j { 1.0 } else { 0.0 };
                worst = worst.max((r[(i, j)] - C64::from(target)).norm());
            }
        }
    }
    Ok(vec![check(
        "residual",
        worst < 1e-9,
        format!("max |g_k^H h_n - delta_kn| = {worst:.3e} over 100 channels"),
    )])
}

fn aqnm(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let m = 4;
    let draws = 100_000;
    let adc = alpha_for_bits(2)?;
    let h = standard_gaussian_matrix(m, 3, &mut rng);
    let (p_u, sigma2) = (2.0, 0.5);
    let y = CVector::from_fn(m, |_, _| crate::channel::complex_gaussian(&mut rng, 1.0));
    let r = quantization_noise_cov(&h, &adc, p_u, sigma2)?;
    let mut power = (0..m).map(|_| Vec::with_capacity(draws)).collect::<Vec<Vec<f64>>>();
    let mut re = (0..m).map(|_| Vec::with_capacity(draws)).collect::<Vec<Vec<f64>>>();
    for _ in 0..draws {
        let out = aqnm_quantize(&y, &h, &adc, p_u, sigma2, &mut rng)?;
        for i in 0..m {
            let d = out[i] - y[i] * C64::from(adc.alpha);
            power[i].push(d.norm_sqr());
            re[i].push(out[i].re);
        }
    }
    let mut worst_cov: f64 = 0.0;
    let mut mean_ok = true;
    for i in 0..m {
        let (v, _) = summary(&power[i]);
        worst_cov = worst_cov.max(rel(v, r[i]));
        let (mu, se) = summary(&re[i]);
        mean_ok &= (mu - adc.alpha * y[i].re).abs() <= 4.0 * se;
    }

    let step = mse_optimal_step(3);
    let n = 200_000;
    let x = CVector::from_fn(n, |_, _| crate::channel::complex_gaussian(&mut rng, 2.0));
    let q = uniform_quantize(&x, 3, step);
    let d: Vec<f64> = (0..n).map(|i| (q[i].re - x[i].re).powi(2)).collect();
    let distortion = pairwise_sum(&d) / n as f64;
    let eps = alpha_for_bits(3)?.epsilon;

    Ok(vec![
        check(
            "noise_covariance",
            worst_cov <= 0.03,
            format!("max relative deviation {worst_cov:.3e} over {draws} draws"),
        ),
        check("mean", mean_ok, "output mean equals alpha times input".into()),
        check(
            "uniform_quantizer",
            rel(distortion, eps) <= 0.1,
            format!("3-bit distortion {distortion:.5} vs {eps:.5}"),
        ),
    ])
}
