use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use crate::dataset::EmotionLabel;
use crate::error::{Error, Result};

fn check_aligned(preds: &[EmotionLabel], labels: &[EmotionLabel]) -> Result<()> {
    if preds.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: preds.len(),
        });
    }
    if labels.is_empty() {
        return Err(Error::Empty("no predictions to score"));
    }
    Ok(())
}

/// Unweighted average recall: the mean, over the classes present in
/// `labels`, of each class's recall.
pub fn unweighted_accuracy(preds: &[EmotionLabel], labels: &[EmotionLabel]) -> Result<f64> {
    check_aligned(preds, labels)?;
    let mut hits = [0usize; 4];
    let mut totals = [0usize; 4];
    for (&p, &l) in preds.iter().zip(labels) {
        totals[l.index()] += 1;
        if p == l {
            hits[l.index()] += 1;
        }
    }
    let recalls: Vec<f64> = (0..4)
        .filter(|&c| totals[c] > 0)
        .map(|c| hits[c] as f64 / totals[c] as f64)
        .collect();
    Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
}

/// Fraction of samples predicted correctly.
pub fn accuracy(preds: &[EmotionLabel], labels: &[EmotionLabel]) -> Result<f64> {
    check_aligned(preds, labels)?;
    let hits = preds.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

/// Rows are true classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<EmotionLabel>,
    pub counts: Vec<Vec<u64>>,
    /// Counts divided by their row sums; all-zero rows stay zero.
    pub normalized: Vec<Vec<f64>>,
}

impl ConfusionMatrix {
    pub fn empty(classes: &[EmotionLabel]) -> Self {
        let n = classes.len();
        ConfusionMatrix {
            classes: classes.to_vec(),
            counts: vec![vec![0; n]; n],
            normalized: vec![vec![0.0; n]; n],
        }
    }

    /// Builds a matrix from raw counts and derives the normalized rows.
    pub fn from_counts(classes: &[EmotionLabel], counts: Vec<Vec<u64>>) -> Result<Self> {
        let n = classes.len();
        if counts.len() != n || counts.iter().any(|r| r.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: counts.len(),
            });
        }
        let mut m = ConfusionMatrix {
            classes: classes.to_vec(),
            counts,
            normalized: Vec::new(),
        };
        m.renormalize();
        Ok(m)
    }

    fn renormalize(&mut self) {
        self.normalized = self
            .counts
            .iter()
            .map(|row| {
                let total: u64 = row.iter().sum();
                row.iter()
                    .map(|&c| {
                        if total == 0 {
                            0.0
                        } else {
                            c as f64 / total as f64
                        }
                    })
                    .collect()
            })
            .collect();
    }

    /// Adds the counts of `other`, which must share the class order.
    pub fn merge(&mut self, other: &ConfusionMatrix) -> Result<()> {
        if other.classes != self.classes {
            return Err(Error::InvalidArgument(
                "cannot merge confusion matrices over different classes".into(),
            ));
        }
        for (row, orow) in self.counts.iter_mut().zip(&other.counts) {
            for (c, o) in row.iter_mut().zip(orow) {
                *c += o;
            }
        }
        self.renormalize();
        Ok(())
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Mean of the normalized diagonal over classes with at least one true
    /// sample; equals [`unweighted_accuracy`] on the same predictions.
    pub fn mean_recall(&self) -> Option<f64> {
        let diag: Vec<f64> = (0..self.classes.len())
            .filter(|&i| self.counts[i].iter().sum::<u64>() > 0)
            .map(|i| self.normalized[i][i])
            .collect();
        (!diag.is_empty()).then(|| diag.iter().sum::<f64>() / diag.len() as f64)
    }
}

pub fn confusion_matrix(
    preds: &[EmotionLabel],
    labels: &[EmotionLabel],
    classes: &[EmotionLabel],
) -> Result<ConfusionMatrix> {
    if preds.len() != labels.len() {
        return Err(Error::DimensionMismatch {
            expected: labels.len(),
            actual: preds.len(),
        });
    }
    let pos = |l: EmotionLabel| {
        classes.iter().position(|&c| c == l).ok_or_else(|| {
            Error::InvalidArgument(format!(
                "label {l} is not among the confusion-matrix classes"
            ))
        })
    };
    let mut counts = vec![vec![0u64; classes.len()]; classes.len()];
    for (&p, &l) in preds.iter().zip(labels) {
        counts[pos(l)?][pos(p)?] += 1;
    }
    ConfusionMatrix::from_counts(classes, counts)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval {
    pub mean: f64,
    pub low: f64,
    pub high: f64,
}

/// Two-sided Student-t interval for the mean of `values`.
///
/// A single value, or values with zero spread, give a degenerate interval at
/// the mean.
pub fn t_confidence_interval(values: &[f64], level: f64) -> Result<ConfidenceInterval> {
    if values.is_empty() {
        return Err(Error::Empty("no values for a confidence interval"));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "confidence level must lie in (0, 1), got {level}"
        )));
    }
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() == 1 {
        return Ok(ConfidenceInterval {
            mean,
            low: mean,
            high: mean,
        });
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    let t = StudentsT::new(0.0, 1.0, n - 1.0)
        .map_err(|e| Error::InvalidArgument(e.to_string()))?
        .inverse_cdf(0.5 + level / 2.0);
    let half = t * (var / n).sqrt();
    Ok(ConfidenceInterval {
        mean,
        low: mean - half,
        high: mean + half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use EmotionLabel::*;

    fn labels_from(codes: &[usize]) -> Vec<EmotionLabel> {
        codes.iter().map(|&c| EmotionLabel::ALL[c]).collect()
    }

    #[test]
    fn perfect_predictions_score_one() {
        let l = vec![Neutral, Sad, Happy, Angry, Angry];
        assert_eq!(unweighted_accuracy(&l, &l).unwrap(), 1.0);
        let cm = confusion_matrix(&l, &l, &EmotionLabel::ALL).unwrap();
        for i in 0..4 {
            for j in 0..4 {
                assert_eq!(cm.normalized[i][j], if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn unweighted_ignores_class_sizes() {
        let labels = [vec![Neutral; 9], vec![Sad]].concat();
        let preds = vec![Neutral; 10];
        assert_eq!(unweighted_accuracy(&preds, &labels).unwrap(), 0.5);
        assert_eq!(accuracy(&preds, &labels).unwrap(), 0.9);
    }

    #[test]
    fn constant_predictions_fill_one_column() {
        let labels = vec![Neutral, Sad, Happy, Angry];
        let preds = vec![Angry; 4];
        let cm = confusion_matrix(&preds, &labels, &EmotionLabel::ALL).unwrap();
        for row in &cm.normalized {
            assert_eq!(row, &vec![0.0, 0.0, 0.0, 1.0]);
        }
    }

    #[test]
    fn misaligned_and_foreign_labels_are_errors() {
        assert!(unweighted_accuracy(&[Neutral], &[Neutral, Sad]).is_err());
        assert!(unweighted_accuracy(&[], &[]).is_err());
        assert!(confusion_matrix(&[Angry], &[Neutral], &[Neutral, Sad]).is_err());
    }

    #[test]
    fn merge_pools_counts() {
        let mut a =
            confusion_matrix(&[Neutral, Sad], &[Neutral, Neutral], &[Neutral, Sad]).unwrap();
        let b = confusion_matrix(&[Sad], &[Sad], &[Neutral, Sad]).unwrap();
        a.merge(&b).unwrap();
        assert_eq!(a.counts, vec![vec![1, 1], vec![0, 1]]);
        assert_eq!(a.normalized[0], vec![0.5, 0.5]);
        assert_eq!(a.total(), 3);
    }

    #[test]
    fn t_interval_matches_tabulated_quantile() {
        // t_{0.975, 9} = 2.262157...
        let v: Vec<f64> = (0..10).map(|i| i as f64).collect();
        let ci = t_confidence_interval(&v, 0.95).unwrap();
        let sd = (v.iter().map(|x| (x - 4.5f64).powi(2)).sum::<f64>() / 9.0).sqrt();
        let half = 2.262_157_162_8 * sd / 10f64.sqrt();
        assert!((ci.high - 4.5 - half).abs() < 1e-8);
        assert!((ci.mean - ci.low - half).abs() < 1e-8);
        let flat = t_confidence_interval(&[0.7; 10], 0.95).unwrap();
        assert!(flat.high - flat.low < 1e-15);
    }

    proptest! {
        #[test]
        fn uar_equals_mean_normalized_diagonal(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..200)) {
            let preds = labels_from(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
            let labels = labels_from(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
            let uar = unweighted_accuracy(&preds, &labels).unwrap();
            let cm = confusion_matrix(&preds, &labels, &EmotionLabel::ALL).unwrap();
            prop_assert!((uar - cm.mean_recall().unwrap()).abs() < 1e-12);
            prop_assert_eq!(cm.total() as usize, pairs.len());
            for (i, row) in cm.normalized.iter().enumerate() {
                if cm.counts[i].iter().sum::<u64>() > 0 {
                    prop_assert!((row.iter().sum::<f64>() - 1.0).abs() < 1e-12);
                }
            }
        }

        #[test]
        fn uar_is_invariant_under_relabeling(pairs in prop::collection::vec((0usize..4, 0usize..4), 1..100), perm in Just([0usize, 1, 2, 3]).prop_shuffle()) {
            let preds = labels_from(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
            let labels = labels_from(&pairs.iter().map(|p| p.1).collect::<Vec<_>>());
            let remap = |v: &[EmotionLabel]| v.iter().map(|l| EmotionLabel::ALL[perm[l.index()]]).collect::<Vec<_>>();
            let a = unweighted_accuracy(&preds, &labels).unwrap();
            let b = unweighted_accuracy(&remap(&preds), &remap(&labels)).unwrap();
            prop_assert!((a - b).abs() < 1e-12);
        }

        #[test]
        fn mean_lies_inside_the_interval(values in prop::collection::vec(0.0f64..1.0, 2..20)) {
            let ci = t_confidence_interval(&values, 0.95).unwrap();
            prop_assert!(ci.low <= ci.mean && ci.mean <= ci.high);
        }
    }
}
