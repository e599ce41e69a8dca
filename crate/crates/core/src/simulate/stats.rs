//! Histograms, ensemble statistics and the Bhattacharyya distance.

use std::collections::BTreeMap;

use serde::Serialize;

use super::SimError;

/// Bin `i` covers `[origin + i * width, origin + (i + 1) * width)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Histogram {
    pub origin: f64,
    pub width: f64,
    pub counts: BTreeMap<i64, u64>,
}

impl Histogram {
    pub fn with_bins(samples: &[f64], origin: f64, width: f64) -> Histogram {
        let mut counts = BTreeMap::new();
        for &v in samples {
            *counts.entry(((v - origin) / width).floor() as i64).or_default() += 1;
        }
        Histogram { origin, width, counts }
    }

    /// One bin per integer value.
    pub fn integer(samples: &[f64]) -> Histogram {
        Self::with_bins(samples, 0.0, 1.0)
    }

    /// Freedman-Diaconis bins starting at the sample minimum.
    pub fn freedman_diaconis(samples: &[f64], min_width: f64) -> Histogram {
        let origin = samples.iter().copied().fold(f64::INFINITY, f64::min);
        Self::with_bins(samples, if origin.is_finite() { origin } else { 0.0 }, fd_width(samples, min_width))
    }

    /// Both samples binned on a shared support: integer bins for integral
    /// data, otherwise Freedman-Diaconis bins of the pooled sample.
    pub fn pair(a: &[f64], b: &[f64], integral: bool, min_width: f64) -> (Histogram, Histogram) {
        if integral {
            return (Self::integer(a), Self::integer(b));
        }
        let pooled: Vec<f64> = a.iter().chain(b).copied().collect();
        let h = Self::freedman_diaconis(&pooled, min_width);
        (Self::with_bins(a, h.origin, h.width), Self::with_bins(b, h.origin, h.width))
    }

    pub fn total(&self) -> u64 {
        self.counts.values().sum()
    }
}

fn quantile(sorted: &[f64], q: f64) -> f64 {
    let pos = q * (sorted.len() - 1) as f64;
    let (lo, hi) = (pos.floor() as usize, pos.ceil() as usize);
    sorted[lo] + (sorted[hi] - sorted[lo]) * (pos - lo as f64)
}

/// `2 IQR n^(-1/3)`, at least `min_width`; `1` for a sample without spread.
pub(crate) fn fd_width(samples: &[f64], min_width: f64) -> f64 {
    if samples.is_empty() {
        return min_width.max(1.0);
    }
    let mut s = samples.to_vec();
    s.sort_by(f64::total_cmp);
    let iqr = quantile(&s, 0.75) - quantile(&s, 0.25);
    let h = 2.0 * iqr / (s.len() as f64).cbrt();
    if h > min_width {
        h
    } else if min_width > 0.0 {
        min_width
    } else {
        1.0
    }
}

/// `-ln sum sqrt(p q)` over the union of bins; `inf` for disjoint supports.
pub fn bhattacharyya(p: &Histogram, q: &Histogram) -> Result<f64, SimError> {
    if p.origin != q.origin || p.width != q.width {
        return Err(SimError::BinMismatch);
    }
    let (np, nq) = (p.total() as f64, q.total() as f64);
    if np == 0.0 || nq == 0.0 {
        return Err(SimError::EmptyHistogram);
    }
    let bc: f64 = p
        .counts
        .iter()
        .filter_map(|(k, &a)| q.counts.get(k).map(|&b| (a as f64 / np * b as f64 / nq).sqrt()))
        .sum();
    if bc <= 0.0 {
        return Ok(f64::INFINITY);
    }
    Ok((-bc.ln()).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ObservableSummary {
    pub name: String,
    pub mean: Vec<f64>,
    /// Population standard deviation over runs.
    pub std: Vec<f64>,
    pub histograms: Vec<Histogram>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnsembleSummary {
    pub grid: Vec<f64>,
    pub runs: u64,
    pub observables: Vec<ObservableSummary>,
}

pub(crate) fn mean_std(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt())
}
