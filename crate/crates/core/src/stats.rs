//! One-way ANOVA and pooled-variance pairwise comparisons.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, FisherSnedecor, StudentsT};

use crate::{Error, Result};

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}

/// Sample standard deviation (n - 1 denominator). `None` for fewer than two
/// samples.
pub fn sample_std(xs: &[f64]) -> Option<f64> {
    if xs.len() < 2 {
        return None;
    }
    let m = mean(xs);
    let ss: f64 = xs.iter().map(|x| (x - m).powi(2)).sum();
    Some((ss / (xs.len() - 1) as f64).sqrt())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnovaResult {
    /// `+inf` when the within-group variance is zero.
    pub f: f64,
    pub df_between: usize,
    pub df_within: usize,
    pub p_value: f64,
    pub ss_between: f64,
    pub ss_within: f64,
    pub ss_total: f64,
    pub ms_within: f64,
    /// Set when every group is internally constant (`MSW = 0`).
    pub within_degenerate: bool,
}

fn check_groups(groups: &[Vec<f64>]) -> Result<()> {
    if groups.len() < 2 {
        return Err(Error::Stats(format!("need at least 2 groups, got {}", groups.len())));
    }
    if let Some(g) = groups.iter().find(|g| g.len() < 2) {
        return Err(Error::Stats(format!(
            "every group needs at least 2 samples, found one with {}",
            g.len()
        )));
    }
    if groups.iter().flatten().any(|x| !x.is_finite()) {
        return Err(Error::Stats("non-finite sample".into()));
    }
    Ok(())
}

pub fn anova_f(groups: &[Vec<f64>]) -> Result<AnovaResult> {
    check_groups(groups)?;
    let n_total: usize = groups.iter().map(Vec::len).sum();
    let grand = groups.iter().flatten().sum::<f64>() / n_total as f64;
    let mut ss_between = 0.0;
    let mut ss_within = 0.0;
    for g in groups {
        let m = mean(g);
        ss_between += g.len() as f64 * (m - grand).powi(2);
        ss_within += g.iter().map(|y| (y - m).powi(2)).sum::<f64>();
    }
    let ss_total: f64 = groups.iter().flatten().map(|y| (y - grand).powi(2)).sum();
    let df_between = groups.len() - 1;
    let df_within = n_total - groups.len();
    let ms_between = ss_between / df_between as f64;
    let ms_within = ss_within / df_within as f64;

    if ms_within == 0.0 {
        if ms_between == 0.0 {
            return Err(Error::Stats("all samples identical".into()));
        }
        return Ok(AnovaResult {
            f: f64::INFINITY,
            df_between,
            df_within,
            p_value: 0.0,
            ss_between,
            ss_within,
            ss_total,
            ms_within,
            within_degenerate: true,
        });
    }
    let f = ms_between / ms_within;
    let dist = FisherSnedecor::new(df_between as f64, df_within as f64)
        .map_err(|e| Error::Stats(e.to_string()))?;
    Ok(AnovaResult {
        f,
        df_between,
        df_within,
        p_value: dist.sf(f),
        ss_between,
        ss_within,
        ss_total,
        ms_within,
        within_degenerate: false,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "outcome", rename_all = "snake_case")]
pub enum PairOutcome {
    Significant { t: f64, p_value: f64 },
    NotSignificant { t: f64, p_value: f64 },
    /// Pooled variance is zero; no test was performed.
    Degenerate,
}

impl PairOutcome {
    pub fn is_significant(&self) -> bool {
        matches!(self, PairOutcome::Significant { .. })
    }
}

/// Symmetric matrix of pairwise outcomes with an empty diagonal.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairwiseMatrix {
    pub alpha_per_test: f64,
    pub entries: Vec<Vec<Option<PairOutcome>>>,
}

impl PairwiseMatrix {
    pub fn get(&self, i: usize, j: usize) -> Option<PairOutcome> {
        self.entries[i][j]
    }
}

pub const DEFAULT_ALPHA_PER_TEST: f64 = 0.025;

/// Two-sided pooled-variance t test for every pair of groups, using the
/// ANOVA within-group mean square and its degrees of freedom.
pub fn bonferroni_pairwise(groups: &[Vec<f64>], alpha_per_test: f64) -> Result<PairwiseMatrix> {
    check_groups(groups)?;
    let g = groups.len();
    let n_total: usize = groups.iter().map(Vec::len).sum();
    let df_within = n_total - g;
    let means: Vec<f64> = groups.iter().map(|x| mean(x)).collect();
    let ss_within: f64 = groups
        .iter()
        .zip(&means)
        .map(|(x, m)| x.iter().map(|y| (y - m).powi(2)).sum::<f64>())
        .sum();
    let ms_within = ss_within / df_within as f64;
    let dist = StudentsT::new(0.0, 1.0, df_within as f64).map_err(|e| Error::Stats(e.to_string()))?;

    let mut entries = vec![vec![None; g]; g];
    for i in 0..g {
        for j in i + 1..g {
            let outcome = if ms_within == 0.0 {
                PairOutcome::Degenerate
            } else {
                let se = (ms_within * (1.0 / groups[i].len() as f64 + 1.0 / groups[j].len() as f64)).sqrt();
                let t = (means[i] - means[j]) / se;
                let p_value = 2.0 * dist.sf(t.abs());
                if p_value < alpha_per_test {
                    PairOutcome::Significant { t, p_value }
                } else {
                    PairOutcome::NotSignificant { t, p_value }
                }
            };
            entries[i][j] = Some(outcome);
            entries[j][i] = Some(match outcome {
                PairOutcome::Significant { t, p_value } => PairOutcome::Significant { t: -t, p_value },
                PairOutcome::NotSignificant { t, p_value } => PairOutcome::NotSignificant { t: -t, p_value },
                PairOutcome::Degenerate => PairOutcome::Degenerate,
            });
        }
    }
    Ok(PairwiseMatrix {
        alpha_per_test,
        entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn std_examples() {
        assert_abs_diff_eq!(sample_std(&[90.0, 92.0, 94.0]).unwrap(), 2.0, epsilon = 1e-12);
        assert_eq!(mean(&[90.0, 92.0, 94.0]), 92.0);
        assert_eq!(sample_std(&[5.0, 5.0, 5.0]), Some(0.0));
        assert_eq!(sample_std(&[1.0]), None);
    }

    #[test]
    fn f_examples() {
        let r = anova_f(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]]).unwrap();
        assert_eq!(r.f, 0.0);
        assert_abs_diff_eq!(r.p_value, 1.0, epsilon = 1e-12);

        let r = anova_f(&[vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0]]).unwrap();
        assert_eq!(r.f, 1.5);
        assert_eq!(r.ss_between, 1.5);
        assert_eq!(r.ss_within, 4.0);
        assert_eq!((r.df_between, r.df_within), (1, 4));
        // scipy.stats.f.sf(1.5, 1, 4)
        assert_abs_diff_eq!(r.p_value, 0.2878641347266907, epsilon = 1e-8);

        let r = anova_f(&[vec![0.0; 3], vec![1.0; 3]]).unwrap();
        assert!(r.within_degenerate);
        assert!(r.f.is_infinite());
    }

    #[test]
    fn f_rejections() {
        assert!(anova_f(&[vec![1.0, 2.0]]).is_err());
        assert!(anova_f(&[vec![1.0, 2.0], vec![3.0]]).is_err());
        assert!(anova_f(&[vec![2.0, 2.0], vec![2.0, 2.0]]).is_err());
    }

    #[test]
    fn three_group_p_value() {
        // scipy.stats.f_oneway([2,3,4,5,6],[5,6,7,8,9],[8,9,10,11,12])
        let r = anova_f(&[
            vec![2.0, 3.0, 4.0, 5.0, 6.0],
            vec![5.0, 6.0, 7.0, 8.0, 9.0],
            vec![8.0, 9.0, 10.0, 11.0, 12.0],
        ])
        .unwrap();
        assert_abs_diff_eq!(r.f, 18.0, epsilon = 1e-12);
        assert_abs_diff_eq!(r.p_value, 0.00024414062499999995, epsilon = 1e-8);
    }

    #[test]
    fn pairwise_examples() {
        let same = bonferroni_pairwise(&[vec![1.0, 2.0, 3.0], vec![1.0, 2.0, 3.0]], 0.025).unwrap();
        assert!(!same.get(0, 1).unwrap().is_significant());
        assert_eq!(same.get(0, 0), None);

        let apart = bonferroni_pairwise(
            &[vec![0.0, 0.0, 0.0, 0.0001], vec![10.0, 10.0, 10.0, 10.0001]],
            0.025,
        )
        .unwrap();
        assert!(apart.get(0, 1).unwrap().is_significant());
        assert!(apart.get(1, 0).unwrap().is_significant());

        let flat = bonferroni_pairwise(&[vec![0.0; 3], vec![1.0; 3]], 0.025).unwrap();
        assert_eq!(flat.get(0, 1), Some(PairOutcome::Degenerate));
    }

    #[test]
    fn pairwise_p_value_matches_reference() {
        // pooled t for {1,2,3} vs {2,3,4}: t = -sqrt(1.5), df = 4
        // scipy.stats.ttest_ind([1,2,3],[2,3,4]).pvalue
        let m = bonferroni_pairwise(&[vec![1.0, 2.0, 3.0], vec![2.0, 3.0, 4.0]], 0.025).unwrap();
        match m.get(0, 1).unwrap() {
            PairOutcome::NotSignificant { t, p_value } => {
                assert_abs_diff_eq!(t, -(1.5f64).sqrt(), epsilon = 1e-12);
                assert_abs_diff_eq!(p_value, 0.2878641347266907, epsilon = 1e-8);
            }
            other => panic!("{other:?}"),
        }
    }
}
