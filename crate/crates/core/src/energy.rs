//! Base-station power budget and energy efficiency.

use serde::{Deserialize, Serialize};

use crate::receivers::Receiver;
use crate::{Error, Result};

/// Circuit, ADC and signal-processing constants of the power budget.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PowerModel {
    /// RF chain power per antenna (W).
    pub p_bs: f64,
    /// Circuit power per user device (W).
    pub p_ue: f64,
    /// Local oscillator (W).
    pub p_syn: f64,
    /// Backhaul, cooling and the like (W).
    pub p_other: f64,
    /// Channel coding and decoding (W).
    pub p_cd: f64,
    /// ADC energy per conversion step (J).
    pub fom: f64,
    /// Sampling rate (samples/s).
    pub f_s: f64,
    /// Computational efficiency (flops/J).
    pub l_bs: f64,
    /// Bandwidth (Hz).
    pub bandwidth: f64,
    /// Symbols per coherence block.
    pub frame_u: f64,
    /// Uplink fraction of each block.
    pub ul_ratio: f64,
}

impl Default for PowerModel {
    fn default() -> Self {
        Self {
            p_bs: 1.0,
            p_ue: 0.3,
            p_syn: 2.0,
            p_other: 18.0,
            p_cd: 0.1,
            fom: 15e-15,
            f_s: 20e6,
            l_bs: 12.8e9,
            bandwidth: 20e6,
            frame_u: 1800.0,
            ul_ratio: 0.4,
        }
    }
}

impl PowerModel {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("p_bs", self.p_bs),
            ("p_ue", self.p_ue),
            ("p_syn", self.p_syn),
            ("p_other", self.p_other),
            ("p_cd", self.p_cd),
            ("fom", self.fom),
            ("f_s", self.f_s),
            ("l_bs", self.l_bs),
            ("bandwidth", self.bandwidth),
            ("frame_u", self.frame_u),
            ("ul_ratio", self.ul_ratio),
        ];
        for (name, v) in fields {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Config(format!(
                    "power model field {name} must be positive, got {v}"
                )));
            }
        }
        if self.ul_ratio >= 1.0 {
            return Err(Error::Config(format!(
                "uplink ratio must be below 1, got {}",
                self.ul_ratio
            )));
        }
        Ok(())
    }

    /// Uplink symbols per coherence block, `U ζ`.
    pub fn uplink_symbols(&self) -> f64 {
        self.frame_u * self.ul_ratio
    }

    fn overhead_factor(&self, pilot_len: usize) -> Result<f64> {
        let budget = self.uplink_symbols();
        if pilot_len as f64 >= budget {
            return Err(Error::Config(format!(
                "pilot length {pilot_len} exceeds the uplink budget of {budget} symbols"
            )));
        }
        Ok(1.0 - pilot_len as f64 / budget)
    }
}

/// Power of one ADC, `FOM f_s 2^b`.
pub fn adc_power(bits: u32, model: &PowerModel) -> f64 {
    model.fom * model.f_s * 2f64.powi(bits as i32)
}

/// Net rate in bits/s after the training overhead.
pub fn effective_rate(gross_se: f64, pilot_len: usize, model: &PowerModel) -> Result<f64> {
    Ok(model.ul_ratio * model.overhead_factor(pilot_len)? * model.bandwidth * gross_se)
}

/// Flops to estimate all channels, `2LKM + 2K² + MK`.
pub fn estimation_flops(m_antennas: usize, k_users: usize, pilot_len: usize) -> f64 {
    let (m, k, l) = (m_antennas as f64, k_users as f64, pilot_len as f64);
    2.0 * l * k * m + 2.0 * k * k + m * k
}

/// Flops to detect one symbol vector, `2KM - K`.
pub fn symbol_flops(m_antennas: usize, k_users: usize) -> f64 {
    let (m, k) = (m_antennas as f64, k_users as f64);
    2.0 * k * m - k
}

/// Flops to compute the combining filters once per block.
pub fn filter_flops(m_antennas: usize, k_users: usize, receiver: Receiver) -> f64 {
    let (m, k) = (m_antennas as f64, k_users as f64);
    match receiver {
        Receiver::Mrc => 0.0,
        Receiver::Zf => k * k * k / 3.0 + 3.0 * k * k * m + k * m - k / 3.0,
    }
}

/// Average power consumption of the uplink in W.
pub fn total_power(
    m_antennas: usize,
    k_users: usize,
    pilot_len: usize,
    bits: u32,
    receiver: Receiver,
    model: &PowerModel,
) -> Result<f64> {
    if m_antennas == 0 || k_users == 0 || pilot_len == 0 || bits == 0 {
        return Err(Error::Config(
            "antennas, users, pilot length and bits must be positive".into(),
        ));
    }
    let m = m_antennas as f64;
    let k = k_users as f64;
    let blocks_per_second = model.bandwidth / model.frame_u;
    let p_ce = blocks_per_second * estimation_flops(m_antennas, k_users, pilot_len) / model.l_bs;
    let p_bl = blocks_per_second * filter_flops(m_antennas, k_users, receiver) / model.l_bs;
    let p_sd = model.bandwidth * model.ul_ratio * model.overhead_factor(pilot_len)? * symbol_flops(m_antennas, k_users)
        / model.l_bs
        + p_bl;
    Ok(m * (model.p_bs + 2.0 * adc_power(bits, model))
        + k * model.p_ue
        + model.p_syn
        + model.p_other
        + model.p_cd
        + p_ce
        + p_sd)
}

/// Bits per Joule, `Σ_k R_k / P`.
pub fn energy_efficiency(rates: &[f64], total_power: f64) -> Result<f64> {
    if !(total_power > 0.0) {
        return Err(Error::Domain(format!(
            "total power must be positive, got {total_power}"
        )));
    }
    Ok(rates.iter().sum::<f64>() / total_power)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn adc_power_values() {
        let m = PowerModel::default();
        assert!((adc_power(5, &m) - 9.6e-6).abs() < 1e-18);
        assert_eq!(adc_power(1, &m), 2.0 * m.fom * m.f_s);
        for b in 1..16 {
            assert_eq!(adc_power(b + 1, &m), 2.0 * adc_power(b, &m));
        }
    }

    #[test]
    fn effective_rate_values() {
        let m = PowerModel::default();
        let r = effective_rate(5.0, 10, &m).unwrap();
        let expect = 0.4 * (1.0 - 10.0 / 720.0) * 2e7 * 5.0;
        assert!((r - expect).abs() < 1e-6);
        assert!((r - 3.944e7).abs() < 1e4);
        assert!((effective_rate(5.0, 0, &m).unwrap() - 0.4 * 2e7 * 5.0).abs() < 1e-6);
        let near = effective_rate(5.0, 719, &m).unwrap();
        assert!(near < 0.002 * 0.4 * 2e7 * 5.0);
        assert!(matches!(effective_rate(5.0, 720, &m), Err(Error::Config(_))));
    }

    #[test]
    fn flop_counts() {
        assert_eq!(estimation_flops(200, 10, 10), 42_200.0);
        assert_eq!(symbol_flops(200, 10), 3990.0);
        assert_eq!(filter_flops(200, 10, Receiver::Mrc), 0.0);
        let zf = filter_flops(200, 10, Receiver::Zf);
        assert!((zf - (1000.0 / 3.0 + 60_000.0 + 2000.0 - 10.0 / 3.0)).abs() < 1e-9);
    }

    #[test]
    fn receivers_differ_only_by_filter_power() {
        let m = PowerModel::default();
        let mrc = total_power(100, 10, 10, 4, Receiver::Mrc, &m).unwrap();
        let zf = total_power(100, 10, 10, 4, Receiver::Zf, &m).unwrap();
        let p_bl = m.bandwidth * filter_flops(100, 10, Receiver::Zf) / (m.frame_u * m.l_bs);
        assert!((zf - mrc - p_bl).abs() < 1e-12);
    }

    #[test]
    fn total_power_by_hand() {
        let m = PowerModel::default();
        let p = total_power(200, 10, 10, 3, Receiver::Mrc, &m).unwrap();
        let p_adc = 15e-15 * 2e7 * 8.0;
        let p_ce = 2e7 / 1800.0 * 42_200.0 / 12.8e9;
        let p_sd = 2e7 * 0.4 * (1.0 - 10.0 / 720.0) * 3990.0 / 12.8e9;
        let expect = 200.0 * (1.0 + 2.0 * p_adc) + 3.0 + 2.0 + 18.0 + 0.1 + p_ce + p_sd;
        assert!((p - expect).abs() < 1e-9);
    }

    #[test]
    fn energy_efficiency_basics() {
        assert_eq!(energy_efficiency(&[0.0; 4], 10.0).unwrap(), 0.0);
        let a = energy_efficiency(&[1.0, 2.0, 3.0], 4.0).unwrap();
        let b = energy_efficiency(&[2.0, 4.0, 6.0], 4.0).unwrap();
        assert_eq!(b, 2.0 * a);
        assert!(matches!(energy_efficiency(&[1.0], 0.0), Err(Error::Domain(_))));
    }

    #[test]
    fn model_validation() {
        assert!(PowerModel::default().validate().is_ok());
        let bad = PowerModel {
            ul_ratio: 1.0,
            ..PowerModel::default()
        };
        assert!(bad.validate().is_err());
        let bad = PowerModel {
            fom: 0.0,
            ..PowerModel::default()
        };
        assert!(bad.validate().is_err());
        let parsed: PowerModel = serde_json::from_str(r#"{"p_other": 5.0}"#).unwrap();
        assert_eq!(parsed.p_other, 5.0);
        assert_eq!(parsed.p_bs, 1.0);
        assert!(serde_json::from_str::<PowerModel>(r#"{"nope": 1}"#).is_err());
    }

    proptest! {
        #[test]
        fn total_power_monotone(m in 1usize..500, k in 1usize..20, b in 1u32..15) {
            let model = PowerModel::default();
            for rx in Receiver::ALL {
                let base = total_power(m, k, k, b, rx, &model).unwrap();
                prop_assert!(total_power(m + 1, k, k, b, rx, &model).unwrap() > base);
                prop_assert!(total_power(m, k, k, b + 1, rx, &model).unwrap() > base);
            }
        }
    }
}
