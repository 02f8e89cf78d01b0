//! Pixel-level completeness, correctness and quality of an extracted mask.
//!
//! With `Pm` matched pixels, `Pe` extracted pixels, `Pg` ground-truth pixels
//! and `Pum = Pg - Pm`:
//!
//! * completeness = `Pm / Pg`
//! * correctness  = `Pm / Pe`
//! * quality      = `Pm / (Pe + Pum)`
//!
//! Dice (`2 Pm / (Pe + Pg)`) is reported alongside for testing. A ratio whose
//! denominator is zero is `None`.

use serde::{Deserialize, Serialize};

use crate::grid::{BinaryMask, GridError};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionCounts {
    pub p_m: u64,
    pub p_e: u64,
    pub p_g: u64,
    pub p_um: u64,
}

pub fn confusion_counts(extracted: &BinaryMask, truth: &BinaryMask) -> Result<ConfusionCounts, GridError> {
    if extracted.dims() != truth.dims() {
        let (a, b) = extracted.dims();
        let (c, d) = truth.dims();
        return Err(GridError::DimensionMismatch(a, b, c, d));
    }
    let mut c = ConfusionCounts { p_m: 0, p_e: 0, p_g: 0, p_um: 0 };
    for (&e, &t) in extracted.bits().iter().zip(truth.bits()) {
        c.p_e += e as u64;
        c.p_g += t as u64;
        c.p_m += (e && t) as u64;
    }
    c.p_um = c.p_g - c.p_m;
    Ok(c)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    #[serde(flatten)]
    pub counts: ConfusionCounts,
    pub completeness: Option<f64>,
    pub correctness: Option<f64>,
    pub quality: Option<f64>,
    pub dice: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub iterations: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_time: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn quality_metrics(counts: ConfusionCounts) -> MetricsReport {
    let ConfusionCounts { p_m, p_e, p_g, p_um } = counts;
    MetricsReport {
        counts,
        completeness: ratio(p_m, p_g),
        correctness: ratio(p_m, p_e),
        quality: ratio(p_m, p_e + p_um),
        dice: ratio(2 * p_m, p_e + p_g),
        iterations: None,
        wall_time: None,
    }
}

/// Counts and ratios in one call.
pub fn evaluate(extracted: &BinaryMask, truth: &BinaryMask) -> Result<MetricsReport, GridError> {
    Ok(quality_metrics(confusion_counts(extracted, truth)?))
}

/// Dice coefficient, 0 when exactly one mask is empty and `None` when both are.
pub fn dice(a: &BinaryMask, b: &BinaryMask) -> Result<Option<f64>, GridError> {
    Ok(evaluate(a, b)?.dice)
}
