//! 10-20 electrode geometry on an idealized unit-sphere scalp.
//!
//! Positions use spherical angles `(θ, φ)` in degrees, where the sign of θ
//! selects the hemisphere (negative = left) and
//! `x = sin θ cos φ` (right), `y = sin θ sin φ` (anterior), `z = cos θ` (up).

use std::collections::HashMap;
use std::path::Path;
use std::sync::LazyLock;

use serde::{Deserialize, Serialize};

use crate::edf::normalize_label;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MontageError {
    #[error("unknown electrode {0:?}")]
    UnknownElectrode(String),
    #[error("channel label {0:?} is not of the form <electrode>-<electrode>")]
    BadChannelLabel(String),
    #[error("electrodes of {0:?} are antipodal; midpoint undefined")]
    DegenerateMidpoint(String),
    #[error("no channels given")]
    Empty,
    #[error("coordinate file: {0}")]
    BadCoordinates(String),
}

pub type Vec3 = [f64; 3];

fn dot(a: &Vec3, b: &Vec3) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

fn norm(a: &Vec3) -> f64 {
    dot(a, a).sqrt()
}

/// Great-circle angle between two unit vectors, in radians.
pub fn geodesic(a: &Vec3, b: &Vec3) -> f64 {
    dot(a, b).clamp(-1.0, 1.0).acos()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ElectrodePosition {
    pub label: String,
    pub unit_vector: Vec3,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChannelNode {
    pub channel_label: String,
    pub position: Vec3,
}

/// Pairwise geodesic distances between channel nodes, scaled so the largest
/// off-diagonal entry is 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistanceMatrix {
    pub labels: Vec<String>,
    pub d: Vec<Vec<f64>>,
}

impl DistanceMatrix {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i][j]
    }
}

/// `(label, θ°, φ°)`; T3/T4/T5/T6 are the older names of T7/T8/P7/P8.
const STANDARD_1020: &[(&str, f64, f64)] = &[
    ("Fp1", -92.0, -72.0),
    ("Fpz", 92.0, 90.0),
    ("Fp2", 92.0, 72.0),
    ("F7", -92.0, -36.0),
    ("F3", -60.0, -51.0),
    ("Fz", 46.0, 90.0),
    ("F4", 60.0, 51.0),
    ("F8", 92.0, 36.0),
    ("T7", -92.0, 0.0),
    ("T3", -92.0, 0.0),
    ("C3", -46.0, 0.0),
    ("Cz", 0.0, 0.0),
    ("C4", 46.0, 0.0),
    ("T8", 92.0, 0.0),
    ("T4", 92.0, 0.0),
    ("P7", -92.0, 36.0),
    ("T5", -92.0, 36.0),
    ("P3", -60.0, 51.0),
    ("Pz", 46.0, -90.0),
    ("P4", 60.0, -51.0),
    ("P8", 92.0, -36.0),
    ("T6", 92.0, -36.0),
    ("O1", -92.0, 72.0),
    ("Oz", 92.0, -90.0),
    ("O2", 92.0, -72.0),
    ("A1", -120.0, 0.0),
    ("A2", 120.0, 0.0),
];

fn spherical(theta_deg: f64, phi_deg: f64) -> Vec3 {
    let (t, p) = (theta_deg.to_radians(), phi_deg.to_radians());
    let v = [t.sin() * p.cos(), t.sin() * p.sin(), t.cos()];
    let n = norm(&v);
    [v[0] / n, v[1] / n, v[2] / n]
}

/// Electrode coordinate table keyed by normalized label.
#[derive(Debug, Clone, PartialEq)]
pub struct Montage {
    positions: HashMap<String, ElectrodePosition>,
}

static STANDARD: LazyLock<Montage> = LazyLock::new(|| Montage {
    positions: STANDARD_1020
        .iter()
        .map(|&(label, theta, phi)| {
            (
                normalize_label(label),
                ElectrodePosition {
                    label: label.to_owned(),
                    unit_vector: if theta == 0.0 { [0.0, 0.0, 1.0] } else { spherical(theta, phi) },
                },
            )
        })
        .collect(),
});

impl Montage {
    pub fn standard() -> &'static Montage {
        &STANDARD
    }

    /// Built-in table with entries replaced or added from a `label,x,y,z`
    /// CSV (header row required). Vectors are normalized on load.
    pub fn with_overrides(path: &Path) -> Result<Montage, MontageError> {
        let text = std::fs::read_to_string(path).map_err(|e| MontageError::BadCoordinates(format!("{}: {e}", path.display())))?;
        Self::standard().clone().apply_overrides(&text)
    }

    pub fn apply_overrides(mut self, csv_text: &str) -> Result<Montage, MontageError> {
        #[derive(Deserialize)]
        struct Row {
            label: String,
            x: f64,
            y: f64,
            z: f64,
        }
        let mut reader = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(csv_text.as_bytes());
        for row in reader.deserialize::<Row>() {
            let row = row.map_err(|e| MontageError::BadCoordinates(e.to_string()))?;
            let v = [row.x, row.y, row.z];
            let n = norm(&v);
            if !(n > 0.0) || !n.is_finite() {
                return Err(MontageError::BadCoordinates(format!("zero or non-finite vector for {}", row.label)));
            }
            self.positions.insert(
                normalize_label(&row.label),
                ElectrodePosition {
                    label: row.label,
                    unit_vector: [v[0] / n, v[1] / n, v[2] / n],
                },
            );
        }
        Ok(self)
    }

    pub fn electrode(&self, label: &str) -> Result<&ElectrodePosition, MontageError> {
        self.positions
            .get(&normalize_label(label))
            .ok_or_else(|| MontageError::UnknownElectrode(label.to_owned()))
    }

    /// Node at the spherical midpoint of a `<e1>-<e2>` channel's electrodes.
    pub fn channel_node(&self, channel_label: &str) -> Result<ChannelNode, MontageError> {
        let (a, b) = channel_label
            .split_once('-')
            .ok_or_else(|| MontageError::BadChannelLabel(channel_label.to_owned()))?;
        let va = self.electrode(a.trim())?.unit_vector;
        let vb = self.electrode(b.trim())?.unit_vector;
        let sum = [va[0] + vb[0], va[1] + vb[1], va[2] + vb[2]];
        let n = norm(&sum);
        if n < 1e-9 {
            return Err(MontageError::DegenerateMidpoint(channel_label.to_owned()));
        }
        Ok(ChannelNode {
            channel_label: channel_label.to_owned(),
            position: [sum[0] / n, sum[1] / n, sum[2] / n],
        })
    }

    /// Raw geodesic distances (radians) between channel nodes.
    pub fn raw_distances(&self, channel_labels: &[&str]) -> Result<Vec<Vec<f64>>, MontageError> {
        let nodes = channel_labels
            .iter()
            .map(|l| self.channel_node(l))
            .collect::<Result<Vec<_>, _>>()?;
        Ok(nodes
            .iter()
            .map(|a| nodes.iter().map(|b| geodesic(&a.position, &b.position)).collect())
            .collect())
    }

    pub fn distance_matrix(&self, channel_labels: &[&str]) -> Result<DistanceMatrix, MontageError> {
        if channel_labels.is_empty() {
            return Err(MontageError::Empty);
        }
        let mut d = self.raw_distances(channel_labels)?;
        let n = d.len();
        let max = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| d[i][j])
            .fold(0.0f64, f64::max);
        for (i, row) in d.iter_mut().enumerate() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = if i == j || max == 0.0 { 0.0 } else { *v / max };
            }
        }
        Ok(DistanceMatrix {
            labels: channel_labels.iter().map(|s| (*s).to_owned()).collect(),
            d,
        })
    }
}

pub fn electrode_position(label: &str) -> Result<ElectrodePosition, MontageError> {
    Montage::standard().electrode(label).cloned()
}

pub fn channel_node(channel_label: &str) -> Result<ChannelNode, MontageError> {
    Montage::standard().channel_node(channel_label)
}

pub fn distance_matrix(channel_labels: &[&str]) -> Result<DistanceMatrix, MontageError> {
    Montage::standard().distance_matrix(channel_labels)
}
