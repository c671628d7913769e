//! Paired classifier comparison: McNemar's test and baseline-relative
//! accuracy deltas.

use serde::{Deserialize, Serialize};
use statrs::function::factorial::ln_binomial;

use crate::error::{Error, Result};

/// Counts over items scored by two models: `n01` = A wrong and B right,
/// `n10` = A right and B wrong.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct PairedOutcomes {
    pub n00: u64,
    pub n01: u64,
    pub n10: u64,
    pub n11: u64,
}

impl PairedOutcomes {
    pub fn from_discordant(b: u64, c: u64) -> Self {
        Self {
            n01: b,
            n10: c,
            ..Default::default()
        }
    }

    pub fn b(&self) -> u64 {
        self.n01
    }

    pub fn c(&self) -> u64 {
        self.n10
    }

    pub fn total(&self) -> u64 {
        self.n00 + self.n01 + self.n10 + self.n11
    }

    pub fn accuracy_a(&self) -> f64 {
        (self.n10 + self.n11) as f64 / self.total() as f64
    }

    pub fn accuracy_b(&self) -> f64 {
        (self.n01 + self.n11) as f64 / self.total() as f64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum McNemarMethod {
    /// Chi-square with continuity correction, one degree of freedom.
    #[default]
    #[serde(rename = "chi2_cc")]
    ChiSquareCorrected,
    /// Two-sided exact binomial test on the discordant pairs.
    #[serde(rename = "exact")]
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    pub b: u64,
    pub c: u64,
    pub statistic: f64,
    pub p_value: f64,
    pub method: McNemarMethod,
}

/// McNemar's test on the discordant counts of `po`.
///
/// The chi-square statistic is `max(|b−c|−1, 0)² / (b+c)` with `p = erfc(√(χ²/2))`.
/// The exact variant reports `min(b, c)` as its statistic and
/// `p = min(1, 2·P[X ≤ min(b, c)])` for `X ~ Binomial(b+c, ½)`.
pub fn mcnemar(po: &PairedOutcomes, method: McNemarMethod) -> Result<McNemarResult> {
    let (b, c) = (po.b(), po.c());
    let n = b + c;
    if n == 0 {
        return Err(Error::Degenerate("no discordant pairs (b + c = 0)".into()));
    }
    let (statistic, p_value) = match method {
        McNemarMethod::ChiSquareCorrected => {
            let diff = (b.abs_diff(c) as f64 - 1.0).max(0.0);
            let chi2 = diff * diff / n as f64;
            (chi2, libm::erfc((chi2 / 2.0).sqrt()).clamp(0.0, 1.0))
        }
        McNemarMethod::Exact => {
            let k = b.min(c);
            (k as f64, (2.0 * binomial_half_cdf(k, n)).min(1.0))
        }
    };
    Ok(McNemarResult {
        b,
        c,
        statistic,
        p_value,
        method,
    })
}

/// `P[X ≤ k]` for `X ~ Binomial(n, ½)`, summed in log space.
fn binomial_half_cdf(k: u64, n: u64) -> f64 {
    let ln_half_n = n as f64 * std::f64::consts::LN_2;
    (0..=k)
        .map(|i| (ln_binomial(n, i) - ln_half_n).exp())
        .sum::<f64>()
        .min(1.0)
}

fn check_binary(values: &[u8], what: &str) -> Result<()> {
    match values.iter().position(|&v| v > 1) {
        Some(i) => Err(Error::arg(format!(
            "{what}[{i}] = {} is not 0/1",
            values[i]
        ))),
        None => Ok(()),
    }
}

pub fn paired_outcomes(labels: &[u8], preds_a: &[u8], preds_b: &[u8]) -> Result<PairedOutcomes> {
    if labels.is_empty() {
        return Err(Error::arg("no items to compare"));
    }
    if preds_a.len() != labels.len() || preds_b.len() != labels.len() {
        return Err(Error::arg(format!(
            "length mismatch: {} labels, {} and {} predictions",
            labels.len(),
            preds_a.len(),
            preds_b.len()
        )));
    }
    check_binary(labels, "labels")?;
    check_binary(preds_a, "predsA")?;
    check_binary(preds_b, "predsB")?;

    let mut po = PairedOutcomes::default();
    for ((&y, &a), &b) in labels.iter().zip(preds_a).zip(preds_b) {
        match (a == y, b == y) {
            (false, false) => po.n00 += 1,
            (false, true) => po.n01 += 1,
            (true, false) => po.n10 += 1,
            (true, true) => po.n11 += 1,
        }
    }
    Ok(po)
}

/// Accuracies shifted so the baseline sits at zero.
pub fn zero_normalized_deltas(baseline_acc: f64, accs: &[f64]) -> Result<Vec<f64>> {
    let in_range = |v: f64| (0.0..=1.0).contains(&v);
    if !in_range(baseline_acc) {
        return Err(Error::arg(format!(
            "baseline accuracy {baseline_acc} is outside [0, 1]"
        )));
    }
    if let Some(bad) = accs.iter().find(|&&a| !in_range(a)) {
        return Err(Error::arg(format!("accuracy {bad} is outside [0, 1]")));
    }
    Ok(accs.iter().map(|a| a - baseline_acc).collect())
}
