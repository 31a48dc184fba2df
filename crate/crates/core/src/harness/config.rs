use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};

use crate::channel::ProfileJson;
use crate::energy::PowerModel;
use crate::estimation::TrainingNoise;
use crate::receivers::{LogBase, Receiver};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CsiMode {
    Perfect,
    Imperfect,
}

impl CsiMode {
    pub const ALL: [CsiMode; 2] = [CsiMode::Perfect, CsiMode::Imperfect];

    pub fn name(self) -> &'static str {
        match self {
            CsiMode::Perfect => "perfect",
            CsiMode::Imperfect => "imperfect",
        }
    }
}

impl fmt::Display for CsiMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CsiMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "perfect" => Ok(CsiMode::Perfect),
            "imperfect" => Ok(CsiMode::Imperfect),
            _ => Err(Error::Unknown {
                kind: "CSI mode",
                name: s.to_string(),
            }),
        }
    }
}

/// How estimated channels are produced in imperfect-CSI trials.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EstimatorPath {
    /// Draw the estimate and its error from their closed-form distributions.
    #[default]
    Shortcut,
    /// Run the quantized pilot phase on a sampled channel.
    Explicit,
}

/// Scenario scalars shared by every point of a sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SystemConfig {
    pub antennas: usize,
    pub users: usize,
    /// Per-user transmit power `P_u / σ²` reference in dB (linear power is
    /// `10^(power_db/10)`).
    pub power_db: f64,
    pub sigma2: f64,
    pub bits: u32,
    /// Pilot length; `None` means one symbol per user.
    pub pilot_len: Option<usize>,
    pub kfactor_db: f64,
    pub log_base: LogBase,
    pub receivers: Vec<Receiver>,
    pub csi: Vec<CsiMode>,
    pub trials: usize,
    /// Trial count for points with more than `large_m_threshold` antennas.
    pub large_m_trials: usize,
    pub large_m_threshold: usize,
    pub seed: u64,
    pub estimator: EstimatorPath,
    pub training_noise: TrainingNoise,
    /// Draw the angles once per run instead of once per trial.
    pub freeze_aoa: bool,
    /// Reuse the same random stream at every sweep point.
    pub common_random_numbers: bool,
    /// `E_u` in dB for the `scaling_m` axis.
    pub scaling_e_u_db: f64,
    /// `ν` for the `scaling_m` axis.
    pub scaling_nu: f64,
    /// Relative deviation above which a row is flagged.
    pub tolerance: f64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            antennas: 200,
            users: 10,
            power_db: 20.0,
            sigma2: 1.0,
            bits: 3,
            pilot_len: None,
            kfactor_db: 0.0,
            log_base: LogBase::Two,
            receivers: Receiver::ALL.to_vec(),
            csi: CsiMode::ALL.to_vec(),
            trials: 2000,
            large_m_trials: 200,
            large_m_threshold: 1000,
            seed: 1,
            estimator: EstimatorPath::Shortcut,
            training_noise: TrainingNoise::Isotropic,
            freeze_aoa: false,
            common_random_numbers: true,
            scaling_e_u_db: 40.0,
            scaling_nu: 1.0,
            tolerance: 0.05,
        }
    }
}

impl SystemConfig {
    pub fn pilot_len(&self) -> usize {
        self.pilot_len.unwrap_or(self.users)
    }

    pub fn validate(&self) -> Result<()> {
        if self.antennas == 0 {
            return Err(Error::Config("antenna count must be at least 1".into()));
        }
        if self.users == 0 {
            return Err(Error::Config("user count must be at least 1".into()));
        }
        if self.trials == 0 || self.large_m_trials == 0 {
            return Err(Error::Config("trial counts must be at least 1".into()));
        }
        if self.bits == 0 {
            return Err(Error::Config("ADC resolution must be at least 1 bit".into()));
        }
        if !(self.sigma2 > 0.0 && self.sigma2.is_finite()) {
            return Err(Error::Config(format!(
                "noise power must be positive, got {}",
                self.sigma2
            )));
        }
        if !self.power_db.is_finite() || !self.kfactor_db.is_finite() || !self.scaling_e_u_db.is_finite() {
            return Err(Error::Config("powers and K-factors in dB must be finite".into()));
        }
        if !(self.scaling_nu > 0.0 && self.scaling_nu.is_finite()) {
            return Err(Error::Config(format!(
                "scaling exponent must be positive, got {}",
                self.scaling_nu
            )));
        }
        if !(self.tolerance > 0.0) {
            return Err(Error::Config(format!(
                "tolerance must be positive, got {}",
                self.tolerance
            )));
        }
        if self.pilot_len() < self.users {
            return Err(Error::Config(format!(
                "pilot length {} is shorter than the user count {}",
                self.pilot_len(),
                self.users
            )));
        }
        if self.receivers.is_empty() || self.csi.is_empty() {
            return Err(Error::Config(
                "at least one receiver and one CSI mode are required".into(),
            ));
        }
        if self.receivers.contains(&Receiver::Zf) && self.antennas < self.users {
            return Err(Error::Precondition(format!(
                "ZF needs at least as many antennas as users, got M={} K={}",
                self.antennas, self.users
            )));
        }
        Ok(())
    }

    /// Applies a partial JSON object on top of this configuration.
    pub fn with_overrides(&self, overrides: &Map<String, Value>) -> Result<Self> {
        let mut value = serde_json::to_value(self)?;
        let obj = value.as_object_mut().expect("config serializes to an object");
        for (k, v) in overrides {
            obj.insert(k.clone(), v.clone());
        }
        Ok(serde_json::from_value(value)?)
    }
}

/// Swept parameter of an experiment.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SweepAxis {
    PowerDb,
    Antennas,
    PilotLen,
    Bits,
    KfactorDb,
    /// Antenna count with `P_u = E_u / M^ν`.
    ScalingM,
}

impl SweepAxis {
    pub const ALL: [SweepAxis; 6] = [
        SweepAxis::PowerDb,
        SweepAxis::Antennas,
        SweepAxis::PilotLen,
        SweepAxis::Bits,
        SweepAxis::KfactorDb,
        SweepAxis::ScalingM,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SweepAxis::PowerDb => "power_db",
            SweepAxis::Antennas => "antennas",
            SweepAxis::PilotLen => "pilot_len",
            SweepAxis::Bits => "bits",
            SweepAxis::KfactorDb => "kfactor_db",
            SweepAxis::ScalingM => "scaling_m",
        }
    }

    fn is_integer(self) -> bool {
        matches!(
            self,
            SweepAxis::Antennas | SweepAxis::PilotLen | SweepAxis::Bits | SweepAxis::ScalingM
        )
    }

    /// Writes `value` into the matching field of `cfg`.
    pub fn apply(self, cfg: &mut SystemConfig, value: f64) -> Result<()> {
        if !value.is_finite() {
            return Err(Error::Config(format!("sweep value must be finite, got {value}")));
        }
        if self.is_integer() && (value.fract() != 0.0 || value < 1.0 || value > u32::MAX as f64) {
            return Err(Error::Config(format!(
                "{} takes positive integer values, got {value}",
                self.name()
            )));
        }
        match self {
            SweepAxis::PowerDb => cfg.power_db = value,
            SweepAxis::Antennas | SweepAxis::ScalingM => cfg.antennas = value as usize,
            SweepAxis::PilotLen => cfg.pilot_len = Some(value as usize),
            SweepAxis::Bits => cfg.bits = value as u32,
            SweepAxis::KfactorDb => cfg.kfactor_db = value,
        }
        Ok(())
    }
}

impl fmt::Display for SweepAxis {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SweepAxis {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        SweepAxis::ALL
            .into_iter()
            .find(|a| a.name() == s)
            .ok_or_else(|| Error::Unknown {
                kind: "sweep axis",
                name: s.to_string(),
            })
    }
}

/// A complete sweep: axis, grid, base configuration and optional overrides of
/// the generated user profile and of the power model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub axis: SweepAxis,
    pub values: Vec<f64>,
    #[serde(default)]
    pub base: SystemConfig,
    #[serde(default)]
    pub profile: ProfileJson,
    /// When present, rows carry energy efficiency.
    #[serde(default)]
    pub power_model: Option<PowerModel>,
}

impl ExperimentSpec {
    pub fn new(axis: SweepAxis, values: Vec<f64>, base: SystemConfig) -> Self {
        Self {
            axis,
            values,
            base,
            profile: ProfileJson::default(),
            power_model: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        self.base.validate()?;
        if let Some(pm) = &self.power_model {
            pm.validate()?;
        }
        let k = self.base.users;
        for (name, v) in [
            ("beta", &self.profile.beta),
            ("kfactor_db", &self.profile.kfactor_db),
            ("aoa_rad", &self.profile.aoa_rad),
        ] {
            if let Some(v) = v {
                if v.len() != k {
                    return Err(Error::Config(format!(
                        "profile {name} has {} entries for {k} users",
                        v.len()
                    )));
                }
            }
        }
        Ok(())
    }

    /// Configuration at sweep point `index`.
    pub fn config_at(&self, index: usize) -> Result<SystemConfig> {
        let value = self.values[index];
        let mut cfg = self.base.clone();
        self.axis
            .apply(&mut cfg, value)
            .and_then(|_| cfg.validate())
            .map_err(|e| Error::AtSweepValue {
                value,
                source: Box::new(e),
            })?;
        Ok(cfg)
    }
}

/// Optional settings read from a JSON file: a partial [`SystemConfig`] under
/// `system`, plus profile, power model and sweep grid.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunOverrides {
    #[serde(default)]
    pub system: Map<String, Value>,
    #[serde(default)]
    pub profile: ProfileJson,
    #[serde(default)]
    pub power_model: Option<PowerModel>,
    #[serde(default)]
    pub axis: Option<SweepAxis>,
    #[serde(default)]
    pub values: Option<Vec<f64>>,
}

impl RunOverrides {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn set(&mut self, key: &str, value: impl Into<Value>) {
        self.system.insert(key.to_string(), value.into());
    }
}
