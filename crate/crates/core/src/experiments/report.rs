use serde::Serialize;

use super::{ExperimentError, ExperimentReport, MeanMetrics};

/// `config,fold,iteration,accuracy,precision,recall,f1`, one row per run.
pub fn runs_csv(reports: &[ExperimentReport]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["config", "fold", "iteration", "accuracy", "precision", "recall", "f1"])?;
    for r in reports {
        for run in &r.runs {
            let m = run.metrics;
            w.write_record([
                r.descriptor.label.clone(),
                run.fold.to_string(),
                run.iteration.to_string(),
                m.accuracy.to_string(),
                m.precision.to_string(),
                m.recall.to_string(),
                m.f1.to_string(),
            ])?;
        }
    }
    finish(w)
}

/// `config,window_accuracy,subject_accuracy`, one row per configuration.
pub fn plot_csv(reports: &[ExperimentReport]) -> Result<String, ExperimentError> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(["config", "window_accuracy", "subject_accuracy"])?;
    for r in reports {
        w.write_record([
            r.descriptor.label.clone(),
            r.mean.accuracy.to_string(),
            r.subject_accuracy.to_string(),
        ])?;
    }
    finish(w)
}

fn finish(w: csv::Writer<Vec<u8>>) -> Result<String, ExperimentError> {
    let bytes = w.into_inner().map_err(|e| ExperimentError::Report(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| ExperimentError::Report(e.to_string()))
}

#[derive(Debug, Serialize)]
pub struct SummaryEntry<'a> {
    pub config: &'a str,
    pub window_seconds: f64,
    pub use_distance_term: bool,
    pub omitted_channel: Option<&'a str>,
    pub n_runs: usize,
    pub mean: MeanMetrics,
    pub subject_accuracy: f64,
}

pub fn summary(reports: &[ExperimentReport]) -> Vec<SummaryEntry<'_>> {
    reports
        .iter()
        .map(|r| SummaryEntry {
            config: &r.descriptor.label,
            window_seconds: r.descriptor.window_seconds,
            use_distance_term: r.descriptor.use_distance_term,
            omitted_channel: r.descriptor.omitted_channel.as_deref(),
            n_runs: r.runs.len(),
            mean: r.mean,
            subject_accuracy: r.subject_accuracy,
        })
        .collect()
}

/// Fixed-width table for terminal output.
pub fn summary_table(reports: &[ExperimentReport]) -> String {
    let mut s = format!(
        "{:<22} {:>8} {:>9} {:>7} {:>7} {:>8}\n",
        "config", "accuracy", "precision", "recall", "f1", "subject"
    );
    for r in reports {
        s.push_str(&format!(
            "{:<22} {:>8.3} {:>9.3} {:>7.3} {:>7.3} {:>8.3}\n",
            r.descriptor.label, r.mean.accuracy, r.mean.precision, r.mean.recall, r.mean.f1, r.subject_accuracy
        ));
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::experiments::{ConfigDescriptor, Confusion, RunLog, WindowMetrics};

    fn report() -> ExperimentReport {
        let metrics = WindowMetrics::from_confusion(Confusion { tp: 3, fp: 1, fn_: 1, tn: 5 });
        let runs = (0..2)
            .map(|fold| RunLog {
                iteration: 0,
                fold,
                seed: 1,
                train_subjects: vec![],
                test_subjects: vec![],
                n_train_windows: 0,
                n_test_windows: 10,
                metrics,
                subject_accuracies: [("a".into(), 0.5)].into_iter().collect(),
                loss_history: vec![],
                feature_scaler: crate::experiments::FeatureScaler { mean: vec![], std: vec![] },
            })
            .collect();
        ExperimentReport::from_runs(
            ConfigDescriptor {
                label: "50s combined".into(),
                window_seconds: 50.0,
                use_distance_term: true,
                omitted_channel: None,
            },
            runs,
        )
        .unwrap()
    }

    #[test]
    fn csv_layouts() {
        let r = [report()];
        let runs = runs_csv(&r).unwrap();
        let mut lines = runs.lines();
        assert_eq!(lines.next(), Some("config,fold,iteration,accuracy,precision,recall,f1"));
        assert_eq!(lines.next(), Some("50s combined,0,0,0.8,0.75,0.75,0.75"));
        assert_eq!(runs.lines().count(), 3);
        let plot = plot_csv(&r).unwrap();
        assert_eq!(plot.lines().nth(1), Some("50s combined,0.8,0.5"));
    }

    #[test]
    fn summary_serializes() {
        let r = [report()];
        let json = serde_json::to_value(summary(&r)).unwrap();
        assert_eq!(json[0]["n_runs"], 2);
        assert_eq!(json[0]["subject_accuracy"], 0.5);
        assert!(summary_table(&r).contains("50s combined"));
    }
}
