//! Deadline budget and per-patient data rates for a given server patient cap.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ScenarioParams {
    /// Most patients a single processing server may serve.
    pub pat_max: u32,
    /// End-to-end deadline in seconds.
    pub t_total: f64,
    /// Processing time per patient, seconds.
    pub unit_proc_time: f64,
    /// Analysis time as a fraction of processing time.
    pub analysis_factor: f64,
    /// Resolution the per-patient processing-and-analysis time is quoted at
    /// (0.1 ms, giving 105.9 ms); zero keeps the raw product.
    pub pa_time_resolution: f64,
    /// Raw ECG recording size in bits.
    pub ecg_bits: f64,
    /// Analysed ECG size in bits.
    pub processed_bits: f64,
    pub n_patients: u32,
}

impl Default for ScenarioParams {
    fn default() -> Self {
        ScenarioParams {
            pat_max: 50,
            t_total: 240.0,
            unit_proc_time: 0.0963,
            analysis_factor: 0.10,
            pa_time_resolution: 1e-4,
            ecg_bits: 1_920_000.0,
            processed_bits: 126_720.0,
            n_patients: 200,
        }
    }
}

impl ScenarioParams {
    pub fn with_pat_max(pat_max: u32) -> Self {
        ScenarioParams {
            pat_max,
            ..Self::default()
        }
    }

    /// Processing plus analysis time for one patient.
    pub fn unit_pa_time(&self) -> f64 {
        let raw = self.unit_proc_time * (1.0 + self.analysis_factor);
        if self.pa_time_resolution > 0.0 {
            (raw / self.pa_time_resolution).round() * self.pa_time_resolution
        } else {
            raw
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        let bad = |msg: &str| Err(ScenarioError::InvalidParams(msg.to_string()));
        if self.pat_max < 1 {
            return bad("pat_max must be at least 1");
        }
        if !(self.t_total > 0.0) {
            return bad("t_total must be positive");
        }
        if !(self.unit_proc_time > 0.0) {
            return bad("unit_proc_time must be positive");
        }
        if !(self.analysis_factor >= 0.0) {
            return bad("analysis_factor must be non-negative");
        }
        if !(self.pa_time_resolution >= 0.0) {
            return bad("pa_time_resolution must be non-negative");
        }
        if !(self.ecg_bits > 0.0) {
            return bad("ecg_bits must be positive");
        }
        if !(self.processed_bits >= 0.0) {
            return bad("processed_bits must be non-negative");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TimingPlan {
    /// Processing-and-analysis budget for a fully loaded server.
    pub t_pa: f64,
    /// Time left to upload the raw recording.
    pub t_t: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RatePlan {
    /// Raw ECG upload rate per patient, bps.
    pub r_ps: f64,
    /// Analysed upload rate per patient, bps.
    pub r_cloud: f64,
    /// Analysed upload time, seconds.
    pub t_cloud: f64,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum ScenarioError {
    #[error("invalid scenario: {0}")]
    InvalidParams(String),
    #[error("processing budget {t_pa} s leaves no transmission time within {t_total} s")]
    InfeasibleDeadline { t_pa: f64, t_total: f64 },
}

pub fn derive_timing(params: &ScenarioParams) -> Result<TimingPlan, ScenarioError> {
    params.validate()?;
    let t_pa = f64::from(params.pat_max) * params.unit_pa_time();
    if t_pa >= params.t_total {
        return Err(ScenarioError::InfeasibleDeadline {
            t_pa,
            t_total: params.t_total,
        });
    }
    Ok(TimingPlan {
        t_pa,
        t_t: params.t_total - t_pa,
    })
}

pub fn derive_rates(
    params: &ScenarioParams,
    timing: &TimingPlan,
    hc_uplink_share: f64,
) -> Result<RatePlan, ScenarioError> {
    if !(hc_uplink_share > 0.0) {
        return Err(ScenarioError::InvalidParams(
            "healthcare uplink share must be positive".into(),
        ));
    }
    if !(timing.t_t > 0.0) {
        return Err(ScenarioError::InvalidParams(
            "transmission time must be positive".into(),
        ));
    }
    let r_ps = params.ecg_bits / timing.t_t;
    let r_cloud = hc_uplink_share / f64::from(params.pat_max);
    Ok(RatePlan {
        r_ps,
        r_cloud,
        t_cloud: params.processed_bits / r_cloud,
    })
}

/// Parameters together with everything derived from them.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Scenario {
    pub params: ScenarioParams,
    pub timing: TimingPlan,
    pub rates: RatePlan,
}

impl Scenario {
    pub fn derive(params: ScenarioParams, hc_uplink_share: f64) -> Result<Self, ScenarioError> {
        let timing = derive_timing(&params)?;
        let rates = derive_rates(&params, &timing, hc_uplink_share)?;
        Ok(Scenario {
            params,
            timing,
            rates,
        })
    }

    pub fn pat_max(&self) -> u32 {
        self.params.pat_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScenarioRow {
    pub pat_max: u32,
    pub t_pa: f64,
    pub t_t: f64,
    pub r_ps: f64,
    pub r_cloud: f64,
    pub t_cloud: f64,
}

/// A row rounded the way the published table prints it.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DisplayRow {
    pub t_pa_s: f64,
    pub t_t_s: f64,
    pub r_ps_kbps: f64,
    pub r_cloud_kbps: f64,
    pub t_cloud_s: f64,
}

/// Printed decimals of each display column.
pub const DISPLAY_DECIMALS: [u32; 5] = [1, 1, 3, 3, 2];

/// Rounds half away from zero.
pub fn round_to(x: f64, decimals: u32) -> f64 {
    let scale = 10f64.powi(decimals as i32);
    (x * scale).round() / scale
}

impl ScenarioRow {
    pub fn display(&self) -> DisplayRow {
        let [a, b, c, d, e] = DISPLAY_DECIMALS;
        DisplayRow {
            t_pa_s: round_to(self.t_pa, a),
            t_t_s: round_to(self.t_t, b),
            r_ps_kbps: round_to(self.r_ps / 1e3, c),
            r_cloud_kbps: round_to(self.r_cloud / 1e3, d),
            t_cloud_s: round_to(self.t_cloud, e),
        }
    }
}

pub fn scenario_table(
    params: &[ScenarioParams],
    hc_uplink_share: f64,
) -> Result<Vec<ScenarioRow>, ScenarioError> {
    params
        .iter()
        .map(|p| {
            let s = Scenario::derive(p.clone(), hc_uplink_share)?;
            Ok(ScenarioRow {
                pat_max: p.pat_max,
                t_pa: s.timing.t_pa,
                t_t: s.timing.t_t,
                r_ps: s.rates.r_ps,
                r_cloud: s.rates.r_cloud,
                t_cloud: s.rates.t_cloud,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    const SHARE: f64 = 234_375.0;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn unit_time_is_quoted_value() {
        let p = ScenarioParams::default();
        assert!(close(p.unit_pa_time(), 0.1059, 1e-15));
        let raw = ScenarioParams {
            pa_time_resolution: 0.0,
            ..p
        };
        assert!(close(raw.unit_pa_time(), 0.10593, 1e-15));
    }

    #[test]
    fn timing_examples() {
        let t = derive_timing(&ScenarioParams::with_pat_max(50)).unwrap();
        assert!(close(t.t_pa, 5.295, 1e-12));
        assert!(close(t.t_t, 234.705, 1e-12));
        let t = derive_timing(&ScenarioParams::with_pat_max(200)).unwrap();
        assert!(close(t.t_pa, 21.18, 1e-12));
        assert!(close(t.t_t, 218.82, 1e-12));
    }

    #[test]
    fn deadline_exhausted() {
        // 240 / 0.1059 = 2266.3
        assert!(derive_timing(&ScenarioParams::with_pat_max(2266)).is_ok());
        assert!(matches!(
            derive_timing(&ScenarioParams::with_pat_max(2267)),
            Err(ScenarioError::InfeasibleDeadline { .. })
        ));
    }

    #[test]
    fn rate_examples() {
        let s = Scenario::derive(ScenarioParams::with_pat_max(50), SHARE).unwrap();
        assert!(close(s.rates.r_ps, 1_920_000.0 / 234.705, 1e-9));
        assert!(close(s.rates.r_ps, 8180.48, 0.01));
        assert_eq!(s.rates.r_cloud, 4687.5);
        assert!(close(s.rates.t_cloud, 27.03360, 1e-5));

        let s = Scenario::derive(ScenarioParams::with_pat_max(150), SHARE).unwrap();
        assert!(close(s.rates.r_ps, 8567.03, 0.01));
        assert_eq!(s.rates.r_cloud, 1562.5);
        assert!(close(s.rates.t_cloud, 81.1008, 1e-9));

        let s = Scenario::derive(ScenarioParams::with_pat_max(1), SHARE).unwrap();
        assert_eq!(s.rates.r_cloud, 234_375.0);
        assert!(close(s.rates.t_cloud, 126_720.0 / 234_375.0, 1e-15));
    }

    #[test]
    fn table_rounding() {
        assert!(scenario_table(&[], SHARE).unwrap().is_empty());
        let rows = scenario_table(&[ScenarioParams::with_pat_max(100)], SHARE).unwrap();
        let d = rows[0].display();
        assert_eq!(d.r_ps_kbps, 8.369);
        assert_eq!(round_to(1.5625, 3), 1.563);
    }

    #[test]
    fn invalid_params() {
        let p = ScenarioParams {
            pat_max: 0,
            ..ScenarioParams::default()
        };
        assert!(matches!(derive_timing(&p), Err(ScenarioError::InvalidParams(_))));
        let t = derive_timing(&ScenarioParams::default()).unwrap();
        assert!(derive_rates(&ScenarioParams::default(), &t, 0.0).is_err());
    }
}
