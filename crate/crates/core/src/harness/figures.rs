use std::path::{Path, PathBuf};

use super::config::{CsiMode, ExperimentSpec, RunOverrides, SweepAxis, SystemConfig};
use super::run::{run_monte_carlo, run_monte_carlo_with};
use super::table::ResultTable;
use crate::asymptotics::{power_scaling_limit, Fading, ScalingScenario};
use crate::channel::{db_to_linear, RicianProfile};
use crate::energy::PowerModel;
use crate::quantization::alpha_for_bits;
use crate::receivers::{se_from_sinr, Receiver};
use crate::{Error, Result};

pub const FIGURES: [&str; 7] = [
    "fig_power",
    "fig_antennas",
    "fig_pilot",
    "fig_resolution_kfactor",
    "fig_scaling",
    "fig_ee_m",
    "fig_ee_bits",
];

/// One table of a figure; two-parameter figures have one job per series.
#[derive(Debug, Clone)]
pub struct FigureJob {
    /// File stem of the CSV.
    pub name: String,
    pub spec: ExperimentSpec,
}

struct Preset {
    axis: SweepAxis,
    values: Vec<f64>,
    base: SystemConfig,
    series_kfactor_db: Vec<f64>,
    energy: bool,
}

fn preset(name: &str) -> Result<Preset> {
    let d = SystemConfig::default;
    let imperfect = || SystemConfig {
        csi: vec![CsiMode::Imperfect],
        ..d()
    };
    let grid = |lo: i32, hi: i32, step: i32| (lo..=hi).step_by(step as usize).map(f64::from).collect::<Vec<_>>();
    let p = match name {
        "fig_power" => Preset {
            axis: SweepAxis::PowerDb,
            values: grid(-10, 30, 5),
            base: d(),
            series_kfactor_db: vec![],
            energy: false,
        },
        "fig_antennas" => Preset {
            axis: SweepAxis::Antennas,
            values: vec![20.0, 50.0, 100.0, 150.0, 200.0, 300.0, 400.0, 500.0],
            base: d(),
            series_kfactor_db: vec![],
            energy: false,
        },
        "fig_pilot" => Preset {
            axis: SweepAxis::PilotLen,
            values: grid(10, 100, 10),
            base: imperfect(),
            series_kfactor_db: vec![],
            energy: false,
        },
        "fig_resolution_kfactor" => Preset {
            axis: SweepAxis::Bits,
            values: grid(1, 12, 1),
            base: imperfect(),
            series_kfactor_db: vec![-10.0, 0.0, 10.0],
            energy: false,
        },
        "fig_scaling" => Preset {
            axis: SweepAxis::ScalingM,
            values: vec![50.0, 100.0, 200.0, 500.0, 1000.0, 2000.0, 5000.0, 10000.0],
            base: imperfect(),
            series_kfactor_db: vec![],
            energy: false,
        },
        "fig_ee_m" => Preset {
            axis: SweepAxis::Antennas,
            values: vec![20.0, 40.0, 60.0, 80.0, 100.0, 150.0, 200.0, 250.0, 300.0],
            base: imperfect(),
            series_kfactor_db: vec![],
            energy: true,
        },
        "fig_ee_bits" => Preset {
            axis: SweepAxis::Bits,
            values: grid(1, 12, 1),
            base: SystemConfig {
                antennas: 100,
                ..imperfect()
            },
            series_kfactor_db: vec![-10.0, 0.0],
            energy: true,
        },
        _ => {
            return Err(Error::Unknown {
                kind: "figure",
                name: name.to_string(),
            })
        }
    };
    Ok(p)
}

fn series_name(name: &str, kdb: f64) -> String {
    format!("{name}__kfactor_db={kdb}")
}

/// Experiment specs behind figure `name` with `overrides` applied on top of
/// the preset.
pub fn figure_jobs(name: &str, overrides: &RunOverrides) -> Result<Vec<FigureJob>> {
    let p = preset(name)?;
    if let Some(axis) = overrides.axis {
        if axis != p.axis {
            return Err(Error::Config(format!(
                "{name} sweeps {}, cannot change its axis to {axis}",
                p.axis
            )));
        }
    }
    let base = p.base.with_overrides(&overrides.system)?;
    let values = overrides.values.clone().unwrap_or(p.values);
    let power_model = match (overrides.power_model, p.energy) {
        (Some(pm), _) => Some(pm),
        (None, true) => Some(PowerModel::default()),
        (None, false) => None,
    };
    let make = |base: SystemConfig| ExperimentSpec {
        axis: p.axis,
        values: values.clone(),
        base,
        profile: overrides.profile.clone(),
        power_model,
    };
    if p.series_kfactor_db.is_empty() {
        return Ok(vec![FigureJob {
            name: name.to_string(),
            spec: make(base),
        }]);
    }
    Ok(p.series_kfactor_db
        .iter()
        .map(|&kdb| {
            let mut spec = make(SystemConfig {
                kfactor_db: kdb,
                ..base.clone()
            });
            spec.profile.kfactor_db = None;
            FigureJob {
                name: series_name(name, kdb),
                spec,
            }
        })
        .collect())
}

/// Limiting sum-SE of a `scaling_m` sweep, when the profile is purely
/// Rician or purely Rayleigh.
fn scaling_limit(spec: &ExperimentSpec) -> Result<Option<f64>> {
    let cfg = &spec.base;
    let k = cfg.users;
    let beta = spec
        .profile
        .beta
        .clone()
        .unwrap_or_else(|| RicianProfile::default_betas(k));
    let kf: Vec<f64> = match &spec.profile.kfactor_db {
        Some(v) => v.iter().map(|d| db_to_linear(*d)).collect(),
        None => vec![db_to_linear(cfg.kfactor_db); k],
    };
    let fading = if kf.iter().all(|&x| x > 0.0) {
        Fading::Rician
    } else if kf.iter().all(|&x| x == 0.0) {
        Fading::Rayleigh
    } else {
        return Ok(None);
    };
    let profile = RicianProfile::new(beta, kf, vec![0.0; k])?;
    let scenario = ScalingScenario::new(db_to_linear(cfg.scaling_e_u_db), cfg.scaling_nu, fading)?;
    let adc = alpha_for_bits(cfg.bits)?;
    let mut total = 0.0;
    for u in 0..k {
        let g = power_scaling_limit(&profile, u, &adc, &scenario, cfg.sigma2, cfg.pilot_len(), Receiver::Zf)?;
        total += se_from_sinr(g, cfg.log_base)?;
    }
    Ok(Some(total))
}

/// Runs one job; `workers = None` uses the global pool.
pub fn run_job(job: &FigureJob, workers: Option<usize>) -> Result<ResultTable> {
    let mut table = match workers {
        Some(w) => run_monte_carlo_with(&job.spec, w)?,
        None => run_monte_carlo(&job.spec)?,
    };
    if job.spec.axis == SweepAxis::ScalingM {
        table.meta.limit_sum_se = scaling_limit(&job.spec)?;
    }
    Ok(table)
}

/// Runs every table of figure `name` and writes `<out_dir>/<job>.csv`.
pub fn reproduce_figure(
    name: &str,
    overrides: &RunOverrides,
    out_dir: &Path,
    workers: Option<usize>,
) -> Result<Vec<(PathBuf, ResultTable)>> {
    let jobs = figure_jobs(name, overrides)?;
    let mut out = Vec::with_capacity(jobs.len());
    for job in &jobs {
        let table = run_job(job, workers)?;
        let path = out_dir.join(format!("{}.csv", job.name));
        table.write_csv(&path)?;
        out.push((path, table));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn every_preset_resolves() {
        for name in FIGURES {
            let jobs = figure_jobs(name, &RunOverrides::default()).unwrap();
            assert!(!jobs.is_empty());
            for j in &jobs {
                j.spec.validate().unwrap();
                for i in 0..j.spec.values.len() {
                    j.spec.config_at(i).unwrap();
                }
            }
        }
        assert!(matches!(
            figure_jobs("fig_nope", &RunOverrides::default()),
            Err(Error::Unknown { .. })
        ));
    }

    #[test]
    fn series_and_overrides() {
        let mut o = RunOverrides::default();
        o.set("antennas", 50);
        o.set("trials", 3);
        let jobs = figure_jobs("fig_resolution_kfactor", &o).unwrap();
        assert_eq!(jobs.len(), 3);
        assert_eq!(jobs[2].name, "fig_resolution_kfactor__kfactor_db=10");
        assert!(jobs
            .iter()
            .all(|j| j.spec.base.antennas == 50 && j.spec.base.trials == 3));
        let ee = figure_jobs("fig_ee_bits", &RunOverrides::default()).unwrap();
        assert_eq!(ee[0].spec.base.antennas, 100);
        assert!(ee[0].spec.power_model.is_some());
        o.axis = Some(SweepAxis::PowerDb);
        assert!(figure_jobs("fig_pilot", &o).is_err());
    }

    #[test]
    fn writes_csv_files() {
        let dir = tempfile::tempdir().unwrap();
        let mut o = RunOverrides::default();
        o.set("trials", 2);
        o.set("antennas", 16);
        o.set("users", 2);
        o.values = Some(vec![2.0, 3.0]);
        let out = reproduce_figure("fig_ee_bits", &o, dir.path(), Some(2)).unwrap();
        assert_eq!(out.len(), 2);
        for (path, table) in out {
            let text = std::fs::read_to_string(&path).unwrap();
            assert_eq!(text, table.to_csv().unwrap());
        }
    }

    #[test]
    fn scaling_figure_reports_limit() {
        let mut o = RunOverrides::default();
        o.set("trials", 2);
        o.set("users", 2);
        o.values = Some(vec![20.0]);
        let job = &figure_jobs("fig_scaling", &o).unwrap()[0];
        let t = run_job(job, None).unwrap();
        assert!(t.meta.limit_sum_se.is_some_and(|v| v > 0.0));
    }
}
