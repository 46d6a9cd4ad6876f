//! Expected results on the full 16-subject clinical cohort. These can only be
//! checked when the recordings are supplied; they are not reachable on the
//! synthetic cohort.

use serde::Serialize;

use super::ExperimentReport;

/// Allowed absolute deviation from a reference value.
pub const REFERENCE_TOLERANCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReferenceTarget {
    pub study: &'static str,
    pub window_seconds: f64,
    pub use_distance_term: bool,
    pub omitted_channel: Option<&'static str>,
    pub window_accuracy: f64,
    pub subject_accuracy: f64,
}

pub const FULL_DATA_REFERENCES: &[ReferenceTarget] = &[
    ReferenceTarget {
        study: "sweep",
        window_seconds: 10.0,
        use_distance_term: true,
        omitted_channel: None,
        window_accuracy: 0.605,
        subject_accuracy: 0.656,
    },
    ReferenceTarget {
        study: "sweep",
        window_seconds: 50.0,
        use_distance_term: true,
        omitted_channel: None,
        window_accuracy: 0.701,
        subject_accuracy: 0.677,
    },
    ReferenceTarget {
        study: "connectivity",
        window_seconds: 50.0,
        use_distance_term: false,
        omitted_channel: None,
        window_accuracy: 0.642,
        subject_accuracy: 0.621,
    },
    ReferenceTarget {
        study: "channels",
        window_seconds: 50.0,
        use_distance_term: true,
        omitted_channel: Some("C4-P4"),
        window_accuracy: 0.639,
        subject_accuracy: 0.635,
    },
    ReferenceTarget {
        study: "channels",
        window_seconds: 50.0,
        use_distance_term: true,
        omitted_channel: Some("Fp2-F4"),
        window_accuracy: 0.685,
        subject_accuracy: 0.667,
    },
];

impl ReferenceTarget {
    pub fn matches_config(&self, report: &ExperimentReport) -> bool {
        let d = &report.descriptor;
        d.window_seconds == self.window_seconds
            && d.use_distance_term == self.use_distance_term
            && d.omitted_channel.as_deref() == self.omitted_channel
    }

    /// Both accuracies within [`REFERENCE_TOLERANCE`].
    pub fn is_met_by(&self, report: &ExperimentReport) -> bool {
        (report.mean.accuracy - self.window_accuracy).abs() <= REFERENCE_TOLERANCE
            && (report.subject_accuracy - self.subject_accuracy).abs() <= REFERENCE_TOLERANCE
    }
}
