use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use sha2::{Digest, Sha256};

use super::config::{CsiMode, EstimatorPath, ExperimentSpec, SweepAxis, SystemConfig};
use super::table::{ResultRow, ResultTable, TableMeta};
use crate::asymptotics::{mrc_sinr_approx, zf_sinr_approx, CsiKnowledge};
use crate::channel::{db_to_linear, sample_channel, RicianProfile};
use crate::energy::{effective_rate, energy_efficiency, total_power};
use crate::estimation::{
    estimate_channel_explicit, estimation_quality, sample_estimated_channel, EstimationStats, PilotConfig,
};
use crate::linalg::pairwise_sum;
use crate::quantization::{alpha_for_bits, quantization_noise_cov, AdcModel};
use crate::receivers::{se_from_sinr, sinr_all, Link, LogBase, Receiver};
use crate::{Error, Result};

/// Random stream of one trial, keyed by `(seed, point, trial)`.
pub fn trial_rng(seed: u64, point: u64, trial: u64) -> ChaCha8Rng {
    let mut key = [0u8; 32];
    key[..8].copy_from_slice(&seed.to_le_bytes());
    key[8..16].copy_from_slice(&point.to_le_bytes());
    key[16..24].copy_from_slice(&trial.to_le_bytes());
    ChaCha8Rng::from_seed(key)
}

/// Stream used for run-wide draws such as frozen angles.
fn run_rng(seed: u64) -> ChaCha8Rng {
    trial_rng(seed, u64::MAX, u64::MAX)
}

/// SHA-256 of the canonical JSON encoding of the spec.
pub fn config_hash(spec: &ExperimentSpec) -> Result<String> {
    let bytes = serde_json::to_vec(spec)?;
    Ok(Sha256::digest(&bytes).iter().map(|b| format!("{b:02x}")).collect())
}

/// Everything a trial needs at one sweep point.
struct Point {
    cfg: SystemConfig,
    value: f64,
    adc: AdcModel,
    p_u: f64,
    pilot_len: usize,
    beta: Vec<f64>,
    kfactor: Vec<f64>,
    aoa: Option<Vec<f64>>,
    trials: usize,
    stats: Option<EstimationStats>,
    pilots: Option<PilotConfig>,
}

impl Point {
    fn profile(&self, aoa: Vec<f64>) -> Result<RicianProfile> {
        RicianProfile::new(self.beta.clone(), self.kfactor.clone(), aoa)
    }

    fn link(&self) -> Link {
        Link {
            adc: self.adc,
            p_u: self.p_u,
            sigma2: self.cfg.sigma2,
            log_base: self.cfg.log_base,
        }
    }
}

fn resolve_point(spec: &ExperimentSpec, index: usize, frozen: &Option<Vec<f64>>) -> Result<Point> {
    let cfg = spec.config_at(index)?;
    let value = spec.values[index];
    let k = cfg.users;
    let adc = alpha_for_bits(cfg.bits)?;
    let p_u = match spec.axis {
        SweepAxis::ScalingM => db_to_linear(cfg.scaling_e_u_db) / (cfg.antennas as f64).powf(cfg.scaling_nu),
        _ => db_to_linear(cfg.power_db),
    };
    let beta = spec
        .profile
        .beta
        .clone()
        .unwrap_or_else(|| RicianProfile::default_betas(k));
    let kfactor = match (&spec.profile.kfactor_db, spec.axis) {
        (Some(kdb), a) if a != SweepAxis::KfactorDb => kdb.iter().map(|d| db_to_linear(*d)).collect(),
        _ => vec![db_to_linear(cfg.kfactor_db); k],
    };
    let trials = if cfg.antennas > cfg.large_m_threshold {
        cfg.trials.min(cfg.large_m_trials)
    } else {
        cfg.trials
    };
    let pilot_len = cfg.pilot_len();
    let mut point = Point {
        value,
        adc,
        p_u,
        pilot_len,
        beta,
        kfactor,
        aoa: spec.profile.aoa_rad.clone().or_else(|| frozen.clone()),
        trials,
        stats: None,
        pilots: None,
        cfg,
    };
    // The statistics do not depend on the angles.
    let probe = point.profile(vec![0.0; k])?;
    if point.cfg.csi.contains(&CsiMode::Imperfect) {
        point.stats = Some(estimation_quality(&probe, &adc, p_u, point.cfg.sigma2, pilot_len)?);
        if point.cfg.estimator == EstimatorPath::Explicit {
            point.pilots = Some(PilotConfig::dft(k, pilot_len)?);
        }
    }
    Ok(point)
}

fn pairs(cfg: &SystemConfig) -> Vec<(Receiver, CsiMode)> {
    let mut rx = cfg.receivers.clone();
    rx.sort();
    rx.dedup();
    let mut csi = cfg.csi.clone();
    csi.sort();
    csi.dedup();
    rx.iter().flat_map(|r| csi.iter().map(move |c| (*r, *c))).collect()
}

fn sum_se(sinrs: impl IntoIterator<Item = f64>, base: LogBase) -> Result<f64> {
    let mut total = 0.0;
    for s in sinrs {
        total += se_from_sinr(s, base)?;
    }
    Ok(total)
}

struct TrialOutcome {
    sim: Vec<f64>,
    approx: Vec<Option<f64>>,
}

fn run_trial(point: &Point, pairs: &[(Receiver, CsiMode)], rng: &mut ChaCha8Rng) -> Result<TrialOutcome> {
    let k = point.cfg.users;
    let m = point.cfg.antennas;
    let link = point.link();
    let base = point.cfg.log_base;
    let aoa = match &point.aoa {
        Some(a) => a.clone(),
        None => RicianProfile::random_aoa(k, rng),
    };
    let profile = point.profile(aoa)?;

    let mut sim = Vec::with_capacity(pairs.len());
    let mut approx = Vec::with_capacity(pairs.len());

    if pairs.iter().any(|(_, c)| *c == CsiMode::Perfect) {
        let ch = sample_channel(&profile, m, rng)?;
        let r_nq = quantization_noise_cov(&ch.h, &point.adc, point.p_u, point.cfg.sigma2)?;
        for (rx, csi) in pairs {
            if *csi != CsiMode::Perfect {
                continue;
            }
            let s = sinr_all(&ch.h, None, &r_nq, *rx, &link)?;
            sim.push((*rx, *csi, sum_se(s.iter().map(|b| b.sinr), base)?));
        }
    }
    if let Some(stats) = &point.stats {
        let (h_hat, h_true) = match &point.pilots {
            None => {
                let e = sample_estimated_channel(&profile, stats, m, rng)?;
                (e.h_hat, e.h_true)
            }
            Some(pilots) => {
                let real = sample_channel(&profile, m, rng)?;
                let est = estimate_channel_explicit(
                    &real,
                    &profile,
                    pilots,
                    &point.adc,
                    point.p_u,
                    point.cfg.sigma2,
                    point.cfg.training_noise,
                    rng,
                )?;
                (est.h_hat, real.h)
            }
        };
        let r_nq = quantization_noise_cov(&h_true, &point.adc, point.p_u, point.cfg.sigma2)?;
        for (rx, csi) in pairs {
            if *csi != CsiMode::Imperfect {
                continue;
            }
            let s = sinr_all(&h_hat, Some(stats), &r_nq, *rx, &link)?;
            sim.push((*rx, *csi, sum_se(s.iter().map(|b| b.sinr), base)?));
        }
    }
    sim.sort_by_key(|(rx, csi, _)| (*rx, *csi));

    for (rx, csi) in pairs {
        let gamma = match (rx, csi) {
            (Receiver::Mrc, CsiMode::Perfect) => None,
            (Receiver::Zf, _) if m <= k => None,
            (Receiver::Zf, CsiMode::Perfect) => Some(zf_sinr_approx(
                &profile,
                &point.adc,
                point.p_u,
                point.cfg.sigma2,
                m,
                CsiKnowledge::Perfect,
            )?),
            (Receiver::Zf, CsiMode::Imperfect) => Some(zf_sinr_approx(
                &profile,
                &point.adc,
                point.p_u,
                point.cfg.sigma2,
                m,
                CsiKnowledge::Estimated(point.stats.as_ref().expect("stats for imperfect CSI")),
            )?),
            (Receiver::Mrc, CsiMode::Imperfect) => Some(mrc_sinr_approx(
                &profile,
                point.stats.as_ref().expect("stats for imperfect CSI"),
                &point.adc,
                point.p_u,
                point.cfg.sigma2,
                m,
            )?),
        };
        approx.push(match gamma {
            Some(g) => Some(sum_se(g, base)?),
            None => None,
        });
    }
    Ok(TrialOutcome {
        sim: sim.into_iter().map(|(_, _, v)| v).collect(),
        approx,
    })
}

fn mean_and_stderr(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let mean = pairwise_sum(xs) / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let dev: Vec<f64> = xs.iter().map(|x| (x - mean) * (x - mean)).collect();
    let var = pairwise_sum(&dev) / (n - 1.0);
    (mean, (var / n).sqrt())
}

fn run_point(spec: &ExperimentSpec, index: usize, frozen: &Option<Vec<f64>>) -> Result<Vec<ResultRow>> {
    let point = resolve_point(spec, index, frozen)?;
    let pairs = pairs(&point.cfg);
    let stream = if point.cfg.common_random_numbers {
        0
    } else {
        index as u64
    };
    let seed = point.cfg.seed;
    let outcomes: Vec<TrialOutcome> = (0..point.trials)
        .into_par_iter()
        .map(|t| run_trial(&point, &pairs, &mut trial_rng(seed, stream, t as u64)))
        .collect::<Result<_>>()?;

    let mut rows = Vec::with_capacity(pairs.len());
    for (j, (rx, csi)) in pairs.iter().enumerate() {
        let sims: Vec<f64> = outcomes.iter().map(|o| o.sim[j]).collect();
        let (mean, stderr) = mean_and_stderr(&sims);
        let approx = outcomes
            .iter()
            .map(|o| o.approx[j])
            .collect::<Option<Vec<f64>>>()
            .map(|a| pairwise_sum(&a) / a.len() as f64);
        let rel_dev = approx.map(|a| (mean - a).abs() / a.abs());
        let ee = match &spec.power_model {
            None => None,
            Some(pm) => {
                let rate = effective_rate(mean, point.pilot_len, pm)?;
                let power = total_power(
                    point.cfg.antennas,
                    point.cfg.users,
                    point.pilot_len,
                    point.cfg.bits,
                    *rx,
                    pm,
                )?;
                Some(energy_efficiency(&[rate], power)?)
            }
        };
        rows.push(ResultRow {
            sweep_value: point.value,
            receiver: *rx,
            csi: *csi,
            se_sim_mean: mean,
            se_sim_stderr: stderr,
            se_approx: approx,
            rel_dev,
            ee,
            trials: point.trials,
        });
    }
    Ok(rows)
}

/// Runs the sweep on the global thread pool.
pub fn run_monte_carlo(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let frozen = if spec.base.freeze_aoa && spec.profile.aoa_rad.is_none() {
        Some(RicianProfile::random_aoa(spec.base.users, &mut run_rng(spec.base.seed)))
    } else {
        None
    };
    let mut rows = Vec::new();
    for index in 0..spec.values.len() {
        let point_rows = run_point(spec, index, &frozen).map_err(|e| match e {
            Error::AtSweepValue { .. } => e,
            other => Error::AtSweepValue {
                value: spec.values[index],
                source: Box::new(other),
            },
        })?;
        rows.extend(point_rows);
    }
    let tolerance = spec.base.tolerance;
    let flagged = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.rel_dev.is_some_and(|d| d > tolerance))
        .map(|(i, _)| i)
        .collect();
    Ok(ResultTable {
        meta: TableMeta {
            seed: spec.base.seed,
            trials: spec.base.trials,
            config_hash: config_hash(spec)?,
            axis: spec.axis,
            log_base: spec.base.log_base,
            tolerance,
            flagged,
            limit_sum_se: None,
        },
        rows,
    })
}

/// Runs the sweep on a dedicated pool of `workers` threads.
pub fn run_monte_carlo_with(spec: &ExperimentSpec, workers: usize) -> Result<ResultTable> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;
    pool.install(|| run_monte_carlo(spec))
}
