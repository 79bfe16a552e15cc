//! Goodness-of-fit helpers: pooled chi-square and Kolmogorov–Smirnov distance.

use serde::Serialize;
use statrs::function::gamma::gamma_ur;

/// Pearson chi-square with low-expectation cells pooled.
#[derive(Debug, Clone, Serialize, PartialEq)]
pub struct ChiSquare {
    pub statistic: f64,
    pub dof: usize,
    pub p_value: f64,
    /// Cells kept separately.
    pub cells: usize,
    /// Cells merged into the pooled remainder, which also holds out-of-range mass.
    pub pooled_cells: usize,
    pub pooled_expected: f64,
}

/// Upper tail of the chi-square distribution.
pub fn chi_square_sf(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    gamma_ur(0.5 * dof as f64, 0.5 * x)
}

/// Chi-square test of `observed` counts against cell probabilities `probs`.
///
/// Samples outside every cell (`outside` of them) and the probability mass
/// `1 - sum(probs)` form one extra cell, together with every cell whose
/// expected count is below `min_expected`. Returns `None` when that pooled
/// cell is non-empty but still expects fewer than `min_expected` counts, or
/// when fewer than two cells remain.
pub fn chi_square_pooled(observed: &[u64], probs: &[f64], outside: u64, min_expected: f64) -> Option<ChiSquare> {
    assert_eq!(observed.len(), probs.len());
    let n = (observed.iter().sum::<u64>() + outside) as f64;
    let mut stat = 0.0;
    let mut cells = 0usize;
    let mut pooled_cells = 0usize;
    let mut pooled_obs = outside as f64;
    // residual mass at rounding level is not a cell
    let residual = 1.0 - probs.iter().sum::<f64>();
    let mut pooled_p = if residual > 1e-12 { residual } else { 0.0 };
    for (&o, &p) in observed.iter().zip(probs) {
        let e = n * p;
        if e < min_expected {
            pooled_cells += 1;
            pooled_obs += o as f64;
            pooled_p += p;
        } else {
            cells += 1;
            stat += (o as f64 - e).powi(2) / e;
        }
    }
    let pooled_e = n * pooled_p;
    let mut k = cells;
    if pooled_obs > 0.0 || pooled_e > 0.0 {
        if pooled_e < min_expected {
            return None;
        }
        stat += (pooled_obs - pooled_e).powi(2) / pooled_e;
        k += 1;
    }
    if k < 2 {
        return None;
    }
    let dof = k - 1;
    Some(ChiSquare {
        statistic: stat,
        dof,
        p_value: chi_square_sf(stat, dof),
        cells,
        pooled_cells,
        pooled_expected: pooled_e,
    })
}

/// Kolmogorov–Smirnov distance between the empirical law of `samples` and `cdf`.
pub fn ks_distance<F: Fn(f64) -> f64>(samples: &[f64], cdf: F) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// 95% critical value `1.63 / sqrt(n)` used for the KS checks.
pub fn ks_band(n: usize) -> f64 {
    1.63 / (n as f64).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn chi_square_tail_values() {
        // 2 dof: sf(x) = exp(-x/2)
        assert!((chi_square_sf(3.0, 2) - (-1.5f64).exp()).abs() < 1e-14);
        assert!((chi_square_sf(3.841458820694124, 1) - 0.05).abs() < 1e-10);
    }

    #[test]
    fn perfect_fit_has_unit_p() {
        let r = chi_square_pooled(&[25, 25, 25, 25], &[0.25; 4], 0, 5.0).unwrap();
        assert_eq!(r.statistic, 0.0);
        assert_eq!(r.dof, 3);
        assert_eq!(r.p_value, 1.0);
    }

    #[test]
    fn pooling_small_cells() {
        let r = chi_square_pooled(&[45, 45, 3, 3, 4], &[0.45, 0.45, 0.03, 0.03, 0.04], 0, 5.0).unwrap();
        assert_eq!(r.pooled_cells, 3);
        assert_eq!(r.dof, 2);
        assert!(chi_square_pooled(&[50, 49, 1], &[0.5, 0.49, 0.01], 0, 5.0).is_none());
    }

    #[test]
    fn ks_of_uniform_grid() {
        let xs: Vec<f64> = (0..100).map(|i| (i as f64 + 0.5) / 100.0).collect();
        assert!((ks_distance(&xs, |x| x) - 0.005).abs() < 1e-12);
    }
}
