use serde::{Deserialize, Serialize};

use super::stats::{linear_fit, LinearFit};
use crate::error::{Error, Result};

/// Replicates below this count make variance curves unreliable.
pub const MIN_REPLICATES: usize = 20;

/// Across-replicate variance of one estimator over time.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VarianceSeries {
    pub k: usize,
    pub replicates: usize,
    pub t: Vec<usize>,
    pub variance: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct KGrowth {
    pub k: usize,
    pub t: Vec<usize>,
    pub var_over_t: Vec<f64>,
    pub var_over_t2: Vec<f64>,
    /// Fit of `var(t)/t` against `t`; a flat line means linear growth.
    pub var_over_t_fit: LinearFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RatioSeries {
    pub t: Vec<usize>,
    pub ratio: Vec<f64>,
    pub fit: LinearFit,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GrowthDiagnostics {
    pub per_k: Vec<KGrowth>,
    /// `var_{K=1}(t) / var_{K=2}(t)` when both are present.
    pub ratio_k1_k2: Option<RatioSeries>,
    pub insufficient_replicates: bool,
}

/// Normalized variance curves per `K` and the `K = 1` over `K = 2` ratio.
///
/// Points with `t = 0` are dropped. Only the `t` common to both series
/// enter the ratio.
pub fn compare_variance_growth(series: &[VarianceSeries]) -> Result<GrowthDiagnostics> {
    if series.is_empty() {
        return Err(Error::Report("no variance series to compare".into()));
    }
    let per_k = series
        .iter()
        .map(|s| {
            let (t, v): (Vec<usize>, Vec<f64>) = s
                .t
                .iter()
                .zip(&s.variance)
                .filter(|(t, _)| **t > 0)
                .map(|(t, v)| (*t, *v))
                .unzip();
            let var_over_t: Vec<f64> = t.iter().zip(&v).map(|(t, v)| v / *t as f64).collect();
            let var_over_t2: Vec<f64> = t.iter().zip(&v).map(|(t, v)| v / (*t as f64).powi(2)).collect();
            let tf: Vec<f64> = t.iter().map(|&t| t as f64).collect();
            KGrowth {
                k: s.k,
                var_over_t_fit: linear_fit(&tf, &var_over_t),
                t,
                var_over_t,
                var_over_t2,
            }
        })
        .collect();

    let find = |k| series.iter().find(|s| s.k == k);
    let ratio_k1_k2 = match (find(1), find(2)) {
        (Some(one), Some(two)) => {
            let (t, ratio): (Vec<usize>, Vec<f64>) = one
                .t
                .iter()
                .zip(&one.variance)
                .filter(|(t, _)| **t > 0)
                .filter_map(|(t, v1)| {
                    let pos = two.t.iter().position(|t2| t2 == t)?;
                    let v2 = two.variance[pos];
                    (v2 > 0.0).then(|| (*t, v1 / v2))
                })
                .unzip();
            let tf: Vec<f64> = t.iter().map(|&t| t as f64).collect();
            let fit = linear_fit(&tf, &ratio);
            Some(RatioSeries { t, ratio, fit })
        }
        _ => None,
    };

    Ok(GrowthDiagnostics {
        per_k,
        ratio_k1_k2,
        insufficient_replicates: series.iter().any(|s| s.replicates < MIN_REPLICATES),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn series(k: usize, f: impl Fn(f64) -> f64) -> VarianceSeries {
        let t: Vec<usize> = (0..=200).collect();
        let variance = t.iter().map(|&t| f(t as f64)).collect();
        VarianceSeries { k, replicates: 100, t, variance }
    }

    #[test]
    fn linear_variance_has_flat_normalized_curve() {
        let d = compare_variance_growth(&[series(2, |t| 0.3 * t)]).unwrap();
        let g = &d.per_k[0];
        assert!(g.var_over_t.iter().all(|v| (v - 0.3).abs() < 1e-12));
        assert!(g.var_over_t_fit.slope.abs() < 1e-12);
        assert!(d.ratio_k1_k2.is_none());
    }

    #[test]
    fn quadratic_over_linear_ratio_grows_linearly() {
        let d = compare_variance_growth(&[series(1, |t| 0.01 * t * t), series(2, |t| 0.3 * t)]).unwrap();
        let r = d.ratio_k1_k2.unwrap();
        assert!(r.fit.slope > 0.0);
        assert!(r.fit.r_squared > 0.9);
        assert_eq!(r.t.len(), 200);
        assert!(!d.insufficient_replicates);
    }

    #[test]
    fn few_replicates_are_flagged() {
        let mut s = series(2, |t| t);
        s.replicates = 10;
        assert!(compare_variance_growth(&[s]).unwrap().insufficient_replicates);
        assert!(compare_variance_growth(&[]).is_err());
    }
}
