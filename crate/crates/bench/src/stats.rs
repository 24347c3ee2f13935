//! Percentiles with linear interpolation between order statistics.

/// `q`-quantile (`q ∈ [0, 1]`) of `values`; NaN for an empty slice.
///
/// Position `q (n − 1)` in the sorted values, interpolated linearly.
pub fn percentile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    percentile_sorted(&v, q)
}

pub fn percentile_sorted(sorted: &[f64], q: f64) -> f64 {
    if sorted.is_empty() {
        return f64::NAN;
    }
    let h = q.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Quartiles and median.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Band {
    pub p25: f64,
    pub median: f64,
    pub p75: f64,
}

impl Band {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            p25: percentile_sorted(&v, 0.25),
            median: percentile_sorted(&v, 0.5),
            p75: percentile_sorted(&v, 0.75),
        }
    }
}
