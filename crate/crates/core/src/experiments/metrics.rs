use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::ExperimentError;
use crate::{ClassLabel, SubjectId};

/// Binary confusion counts with insomnia as the positive class.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
}

impl Confusion {
    pub fn total(&self) -> usize {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WindowMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: Confusion,
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

impl WindowMetrics {
    pub fn from_confusion(c: Confusion) -> Self {
        let precision = ratio(c.tp, c.tp + c.fp);
        let recall = ratio(c.tp, c.tp + c.fn_);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        Self {
            accuracy: ratio(c.tp + c.tn, c.total()),
            precision,
            recall,
            f1,
            confusion: c,
        }
    }
}

pub fn window_metrics(predictions: &[ClassLabel], labels: &[ClassLabel]) -> Result<WindowMetrics, ExperimentError> {
    if predictions.len() != labels.len() {
        return Err(ExperimentError::LengthMismatch(predictions.len(), labels.len()));
    }
    if predictions.is_empty() {
        return Err(ExperimentError::EmptyInput);
    }
    let mut c = Confusion::default();
    for (p, l) in predictions.iter().zip(labels) {
        match (p, l) {
            (ClassLabel::Insomnia, ClassLabel::Insomnia) => c.tp += 1,
            (ClassLabel::Insomnia, ClassLabel::Control) => c.fp += 1,
            (ClassLabel::Control, ClassLabel::Insomnia) => c.fn_ += 1,
            (ClassLabel::Control, ClassLabel::Control) => c.tn += 1,
        }
    }
    Ok(WindowMetrics::from_confusion(c))
}

/// Fraction of correctly classified windows for each subject.
pub fn per_subject_accuracy(outcomes: &[(SubjectId, bool)]) -> BTreeMap<SubjectId, f64> {
    let mut counts: BTreeMap<SubjectId, (usize, usize)> = BTreeMap::new();
    for (s, correct) in outcomes {
        let e = counts.entry(s.clone()).or_default();
        e.0 += usize::from(*correct);
        e.1 += 1;
    }
    counts.into_iter().map(|(s, (c, n))| (s, c as f64 / n as f64)).collect()
}

/// Unweighted mean over subjects of each subject's window accuracy.
pub fn subject_accuracy(outcomes: &[(SubjectId, bool)]) -> Result<f64, ExperimentError> {
    if outcomes.is_empty() {
        return Err(ExperimentError::EmptyInput);
    }
    let per = per_subject_accuracy(outcomes);
    Ok(per.values().sum::<f64>() / per.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use ClassLabel::{Control as C, Insomnia as I};

    #[test]
    fn hand_computed_confusion() {
        // TP=3, FP=1, FN=1, TN=5
        let preds = [I, I, I, I, C, C, C, C, C, C];
        let labels = [I, I, I, C, I, C, C, C, C, C];
        let m = window_metrics(&preds, &labels).unwrap();
        assert_eq!(m.confusion, Confusion { tp: 3, fp: 1, fn_: 1, tn: 5 });
        assert!((m.accuracy - 0.8).abs() < 1e-15);
        assert!((m.precision - 0.75).abs() < 1e-15);
        assert!((m.recall - 0.75).abs() < 1e-15);
        assert!((m.f1 - 0.75).abs() < 1e-15);
    }

    #[test]
    fn perfect_predictions() {
        let labels = [I, C, I, C, C];
        let m = window_metrics(&labels, &labels).unwrap();
        assert_eq!((m.accuracy, m.precision, m.recall, m.f1), (1.0, 1.0, 1.0, 1.0));
    }

    #[test]
    fn no_positive_predictions() {
        let m = window_metrics(&[C, C, C], &[I, C, I]).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn input_errors() {
        assert!(matches!(window_metrics(&[], &[]), Err(ExperimentError::EmptyInput)));
        assert!(matches!(window_metrics(&[C], &[C, I]), Err(ExperimentError::LengthMismatch(1, 2))));
        assert!(matches!(subject_accuracy(&[]), Err(ExperimentError::EmptyInput)));
    }

    fn outcomes(spec: &[(&str, usize, usize)]) -> Vec<(SubjectId, bool)> {
        spec.iter()
            .flat_map(|&(s, correct, total)| (0..total).map(move |i| (SubjectId::from(s), i < correct)))
            .collect()
    }

    #[test]
    fn subject_accuracy_is_unweighted() {
        assert!((subject_accuracy(&outcomes(&[("a", 60, 100), ("b", 80, 100)])).unwrap() - 0.7).abs() < 1e-15);
        assert_eq!(subject_accuracy(&outcomes(&[("a", 5, 5)])).unwrap(), 1.0);
        assert!((subject_accuracy(&outcomes(&[("a", 9, 10), ("b", 0, 1000)])).unwrap() - 0.45).abs() < 1e-15);
    }
}
