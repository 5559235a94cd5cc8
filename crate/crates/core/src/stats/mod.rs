//! Paired t-test, Student-t CDF and descriptive statistics.

mod descriptive;
mod paired;
mod tdist;

pub use descriptive::{descriptive, mean_std, quantile_sorted, Descriptive};
pub use paired::{paired_t_test, Decision, EffectSizeVariant, PairedTestResult, TestConfig};
pub use tdist::{inc_beta, ln_beta, ln_gamma, t_cdf, t_two_sided_p};
