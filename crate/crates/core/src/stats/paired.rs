//! Paired t-test with Cohen's d and a significance/effect-size decision.

use std::fmt;

use serde::{Deserialize, Serialize};

use super::tdist::t_two_sided_p;
use super::mean_std;
use crate::error::{Error, Result};

/// Which Cohen's d feeds the decision rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EffectSizeVariant {
    /// `(mean(a) − mean(b)) / sqrt((var(a) + var(b)) / 2)`
    #[default]
    Pooled,
    /// `mean(d) / sd(d)` over the paired differences.
    Paired,
}

impl std::str::FromStr for EffectSizeVariant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_lowercase().as_str() {
            "pooled" => Ok(EffectSizeVariant::Pooled),
            "paired" => Ok(EffectSizeVariant::Paired),
            other => Err(Error::Param(format!("unknown effect-size variant '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TestConfig {
    pub alpha: f64,
    pub d_threshold: f64,
    pub d_variant: EffectSizeVariant,
}

impl Default for TestConfig {
    fn default() -> Self {
        TestConfig {
            alpha: 0.05,
            d_threshold: 0.5,
            d_variant: EffectSizeVariant::Pooled,
        }
    }
}

impl TestConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::Param(format!("alpha must be in (0, 1), got {}", self.alpha)));
        }
        if !(self.d_threshold > 0.0 && self.d_threshold.is_finite()) {
            return Err(Error::Param(format!(
                "d_threshold must be positive, got {}",
                self.d_threshold
            )));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Decision {
    /// Significant and at least the effect-size threshold.
    RejectH0Practical,
    /// Significant, effect below threshold.
    RejectH0Only,
    /// Not significant, effect at or above threshold.
    PracticalOnly,
    NoDifference,
}

impl Decision {
    pub fn as_str(self) -> &'static str {
        match self {
            Decision::RejectH0Practical => "reject_h0_practical",
            Decision::RejectH0Only => "reject_h0_only",
            Decision::PracticalOnly => "practical_only",
            Decision::NoDifference => "no_difference",
        }
    }
}

impl fmt::Display for Decision {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairedTestResult {
    pub n: usize,
    pub t_stat: f64,
    /// Two-sided.
    pub p_value: f64,
    pub df: u32,
    pub mean_diff: f64,
    pub cohens_d_paired: f64,
    pub cohens_d_pooled: f64,
    pub decision: Decision,
}

fn decide(p: f64, d: f64, config: &TestConfig) -> Decision {
    match (p < config.alpha, d.abs() >= config.d_threshold) {
        (true, true) => Decision::RejectH0Practical,
        (true, false) => Decision::RejectH0Only,
        (false, true) => Decision::PracticalOnly,
        (false, false) => Decision::NoDifference,
    }
}

/// Two-sided paired t-test of `a` against `b`.
///
/// All-identical differences of zero give `t = 0, p = 1`; identical non-zero
/// differences have no defined t and return [`Error::ZeroVariance`].
pub fn paired_t_test(a: &[f64], b: &[f64], config: &TestConfig) -> Result<PairedTestResult> {
    config.validate()?;
    if a.len() != b.len() {
        return Err(Error::Param(format!(
            "paired samples differ in length ({} vs {})",
            a.len(),
            b.len()
        )));
    }
    let n = a.len();
    if n < 2 {
        return Err(Error::Param(format!("paired t-test needs at least 2 pairs, got {n}")));
    }
    let diffs: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    let (mean_diff, sd_diff) = mean_std(&diffs);
    let (mean_a, sd_a) = mean_std(a);
    let (mean_b, sd_b) = mean_std(b);
    let pooled_sd = ((sd_a * sd_a + sd_b * sd_b) / 2.0).sqrt();
    let df = (n - 1) as u32;

    if sd_diff == 0.0 {
        if mean_diff != 0.0 {
            return Err(Error::ZeroVariance { mean_diff });
        }
        let d_pooled = if pooled_sd == 0.0 {
            0.0
        } else {
            (mean_a - mean_b) / pooled_sd
        };
        let d = match config.d_variant {
            EffectSizeVariant::Pooled => d_pooled,
            EffectSizeVariant::Paired => 0.0,
        };
        return Ok(PairedTestResult {
            n,
            t_stat: 0.0,
            p_value: 1.0,
            df,
            mean_diff,
            cohens_d_paired: 0.0,
            cohens_d_pooled: d_pooled,
            decision: decide(1.0, d, config),
        });
    }

    let t_stat = mean_diff / (sd_diff / (n as f64).sqrt());
    let p_value = t_two_sided_p(t_stat, df);
    let cohens_d_paired = mean_diff / sd_diff;
    let cohens_d_pooled = (mean_a - mean_b) / pooled_sd;
    let d = match config.d_variant {
        EffectSizeVariant::Pooled => cohens_d_pooled,
        EffectSizeVariant::Paired => cohens_d_paired,
    };
    Ok(PairedTestResult {
        n,
        t_stat,
        p_value,
        df,
        mean_diff,
        cohens_d_paired,
        cohens_d_pooled,
        decision: decide(p_value, d, config),
    })
}
