use std::f64::consts::PI;

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::*;
use crate::edf::Channel;
use crate::montage::distance_matrix;
use crate::STANDARD_CHANNELS;

const FS: f64 = 250.0;

fn noise(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| StandardNormal.sample(&mut *rng)).collect()
}

/// Channels mixing a common source with private noise at different ratios,
/// so pairwise coherence varies.
fn mixed_channels(seed: u64, n_channels: usize, n: usize) -> Vec<Vec<f64>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let common = noise(&mut rng, n);
    (0..n_channels)
        .map(|c| {
            let weight = 0.2 + 0.7 * c as f64 / n_channels as f64;
            let private = noise(&mut rng, n);
            common.iter().zip(&private).map(|(a, b)| weight * a + (1.0 - weight) * b).collect()
        })
        .collect()
}

fn window(labels: &[&str], channels: Vec<Vec<f64>>) -> EpochWindow {
    EpochWindow {
        subject_id: "s01".into(),
        class_label: ClassLabel::Control,
        window_index: 0,
        duration_seconds: channels[0].len() as f64 / FS,
        sample_rate: FS,
        channel_labels: labels.iter().map(|s| (*s).to_owned()).collect(),
        channels,
    }
}

fn recording(labels: &[&str], channels: Vec<Vec<f64>>) -> Recording {
    Recording {
        subject_id: "s01".into(),
        class_label: ClassLabel::Insomnia,
        channels: labels
            .iter()
            .zip(channels)
            .map(|(l, samples)| Channel {
                label: (*l).to_owned(),
                sample_rate: FS,
                samples,
            })
            .collect(),
        age: None,
        sex: None,
    }
}

fn assert_valid_connectivity(m: &DenseMatrix) {
    for i in 0..m.rows {
        assert_eq!(m.get(i, i), 0.0);
        for j in 0..m.cols {
            let v = m.get(i, j);
            assert!((0.0..=1.0).contains(&v), "entry {v}");
            assert_eq!(v, m.get(j, i));
        }
    }
}

#[test]
fn random_coherence_values() {
    assert_eq!(random_coherence(1.0, 5.0), 1.0);
    assert_eq!(random_coherence(0.0, 2.0), 1.0);
    assert!((random_coherence_raw(0.0, 2.0) - 1.648_721_270_700_128).abs() < 1e-12);
    assert!(random_coherence_raw(0.5, 2.0) > random_coherence_raw(0.9, 2.0));
    assert!(random_coherence(0.5, 2.0) >= random_coherence(0.9, 2.0));
}

#[test]
fn reduced_coherence_values() {
    assert_eq!(reduced_coherence(0.4, 0.4), 0.0);
    assert_eq!(reduced_coherence(1.0, 0.0), 1.0);
    assert!((reduced_coherence(0.3, 0.8) + 0.5).abs() < 1e-15);
}

#[test]
fn coincident_identical_pair_is_degenerate() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let x = noise(&mut rng, 2500);
    let w = window(&["C4-P4", "P4-C4"], vec![x.clone(), x]);
    let d = DistanceMatrix {
        labels: w.channel_labels.clone(),
        d: vec![vec![0.0, 0.0], vec![0.0, 0.0]],
    };
    let config = ConnectivityConfig {
        k: 2.0,
        ..ConnectivityConfig::default()
    };
    let m = combined_connectivity(&w, &d, &config).unwrap();
    assert_eq!(m.data, vec![0.0, DEGENERATE_FILL, DEGENERATE_FILL, 0.0]);
}

#[test]
fn five_channel_connectivity_spans_unit_range() {
    let w = window(&STANDARD_CHANNELS, mixed_channels(2, 5, 7500));
    let d = distance_matrix(&STANDARD_CHANNELS).unwrap();
    let m = combined_connectivity(&w, &d, &ConnectivityConfig::default()).unwrap();
    assert_valid_connectivity(&m);
    let off: Vec<f64> = (0..5)
        .flat_map(|i| (0..5).filter(move |&j| j != i).map(move |j| (i, j)))
        .map(|(i, j)| m.get(i, j))
        .collect();
    assert_eq!(off.iter().copied().fold(f64::INFINITY, f64::min), 0.0);
    assert_eq!(off.iter().copied().fold(f64::NEG_INFINITY, f64::max), 1.0);
}

#[test]
fn distance_term_changes_matrix() {
    let w = window(&STANDARD_CHANNELS, mixed_channels(3, 5, 7500));
    let d = distance_matrix(&STANDARD_CHANNELS).unwrap();
    let with = combined_connectivity(&w, &d, &ConnectivityConfig::default()).unwrap();
    let without = combined_connectivity(
        &w,
        &d,
        &ConnectivityConfig {
            use_distance_term: false,
            ..ConnectivityConfig::default()
        },
    )
    .unwrap();
    assert_valid_connectivity(&without);
    let diff = with.data.iter().zip(&without.data).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    assert!(diff > 1e-3, "max difference {diff}");
}

#[test]
fn identical_signals_reproduce_normalized_distances() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let x = noise(&mut rng, 5000);
    let w = window(&STANDARD_CHANNELS, vec![x; 5]);
    let d = distance_matrix(&STANDARD_CHANNELS).unwrap();
    let m = combined_connectivity(&w, &d, &ConnectivityConfig::default()).unwrap();
    let mut expected = DenseMatrix::from_rows(&d.d);
    normalize_off_diagonal(&mut expected);
    for (a, b) in m.data.iter().zip(&expected.data) {
        assert!((a - b).abs() < 1e-9, "{a} vs {b}");
    }
}

#[test]
fn alpha_tone_dominates_its_feature_row() {
    let n = 2500;
    let tone: Vec<f64> = (0..n).map(|i| (2.0 * PI * 10.0 * i as f64 / FS).sin()).collect();
    let w = window(&["C4-P4", "F4-C4"], vec![tone, vec![0.0; n]]);
    let f = node_feature_matrix(&w, &WelchParams::default()).unwrap();
    assert_eq!((f.rows, f.cols), (2, 6));
    let alpha = Band::ALL.iter().position(|b| *b == Band::Alpha).unwrap();
    for b in 0..6 {
        if b != alpha {
            assert!(f.get(0, alpha) > f.get(0, b));
        }
    }
    assert!(f.row(1).iter().all(|&v| v == -12.0));
}

#[test]
fn five_channels_give_five_by_six_features() {
    let w = window(&STANDARD_CHANNELS, mixed_channels(5, 5, 2500));
    let f = node_feature_matrix(&w, &WelchParams::default()).unwrap();
    assert_eq!((f.rows, f.cols), (5, 6));
    assert!(f.is_finite());
}

#[test]
fn omitting_a_channel_leaves_four_nodes() {
    let rec = recording(&STANDARD_CHANNELS, mixed_channels(6, 5, 50 * 250 * 2));
    let graphs = build_graphs(&rec, 50.0, &ConnectivityConfig::default(), Some("C4-P4")).unwrap();
    assert_eq!(graphs.len(), 2);
    for g in &graphs {
        assert_eq!(g.channel_labels, vec!["Fp2-F4", "F4-C4", "P4-O2", "C4-A1"]);
        assert_eq!((g.connectivity.rows, g.node_features.rows), (4, 4));
        assert_valid_connectivity(&g.connectivity);
    }
    let full = build_graphs(&rec, 50.0, &ConnectivityConfig::default(), None).unwrap();
    assert!(full.iter().all(|g| g.n_nodes() == 5 && g.connectivity.rows == 5));
    assert_eq!(full[1].window_index, 1);
    assert_eq!(full[0].class_label, ClassLabel::Insomnia);
}

#[test]
fn omitting_an_absent_channel_fails() {
    let rec = recording(&STANDARD_CHANNELS[..4], mixed_channels(7, 4, 2500));
    assert!(matches!(
        build_graphs(&rec, 10.0, &ConnectivityConfig::default(), Some("C4-A1")),
        Err(GraphError::MissingChannel(_))
    ));
    assert!(matches!(
        build_graphs(&rec, 20.0, &ConnectivityConfig::default(), None),
        Err(GraphError::Dsp(DspError::WindowTooLong { .. }))
    ));
}

#[test]
fn thirteen_hours_of_fifty_second_windows() {
    let n = 13 * 3600 * 250;
    let x: Vec<f64> = (0..n).map(|i| ((i % 997) as f64 * 0.37).sin()).collect();
    let rec = recording(&["C4-P4"], vec![x]);
    let graphs = build_graphs(&rec, 50.0, &ConnectivityConfig::default(), None).unwrap();
    assert_eq!(graphs.len(), 936);
}

#[test]
fn window_and_recording_paths_agree() {
    let channels = mixed_channels(8, 5, 2500);
    let rec = recording(&STANDARD_CHANNELS, channels.clone());
    let g = &build_graphs(&rec, 10.0, &ConnectivityConfig::default(), None).unwrap()[0];
    let w = window(&STANDARD_CHANNELS, channels);
    let d = distance_matrix(&STANDARD_CHANNELS).unwrap();
    assert_eq!(g.connectivity, combined_connectivity(&w, &d, &ConnectivityConfig::default()).unwrap());
    assert_eq!(g.node_features, node_feature_matrix(&w, &WelchParams::default()).unwrap());
}

#[test]
fn invalid_config_is_rejected() {
    let w = window(&STANDARD_CHANNELS, mixed_channels(9, 5, 2500));
    let d = distance_matrix(&STANDARD_CHANNELS).unwrap();
    for config in [
        ConnectivityConfig {
            k: 0.0,
            ..ConnectivityConfig::default()
        },
        ConnectivityConfig {
            coherence_band: (1.0, 200.0),
            ..ConnectivityConfig::default()
        },
    ] {
        assert!(matches!(combined_connectivity(&w, &d, &config), Err(GraphError::InvalidConfig(_))));
    }
    let d4 = distance_matrix(&STANDARD_CHANNELS[..4]).unwrap();
    assert!(matches!(
        combined_connectivity(&w, &d4, &ConnectivityConfig::default()),
        Err(GraphError::ChannelCountMismatch { .. })
    ));
}

#[test]
fn cache_round_trip() {
    let rec = recording(&STANDARD_CHANNELS, mixed_channels(10, 5, 5000));
    let graphs = build_graphs(&rec, 10.0, &ConnectivityConfig::default(), Some("F4-C4")).unwrap();
    let bytes = write_graph_cache(&graphs);
    assert_eq!(&bytes[..4], GRAPH_CACHE_MAGIC);
    assert_eq!(read_graph_cache(&bytes).unwrap(), graphs);
    assert!(read_graph_cache(&bytes[..bytes.len() - 3]).is_err());
    let json = serde_json::to_string(&graphs).unwrap();
    let back: Vec<BrainGraph> = serde_json::from_str(&json).unwrap();
    assert_eq!(back.len(), graphs.len());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn channel_order_is_equivariant(seed in 0u64..10_000, perm_seed in 0u64..1000) {
        use rand::seq::SliceRandom;
        let channels = mixed_channels(seed, 5, 2500);
        let mut perm: Vec<usize> = (0..5).collect();
        perm.shuffle(&mut ChaCha8Rng::seed_from_u64(perm_seed));
        let labels: Vec<&str> = perm.iter().map(|&i| STANDARD_CHANNELS[i]).collect();
        let permuted: Vec<Vec<f64>> = perm.iter().map(|&i| channels[i].clone()).collect();
        let config = ConnectivityConfig::default();
        let a = &build_graphs(&recording(&STANDARD_CHANNELS, channels), 10.0, &config, None).unwrap()[0];
        let b = &build_graphs(&recording(&labels, permuted), 10.0, &config, None).unwrap()[0];
        let ca = a.connectivity.permute_symmetric(&perm);
        let fa = a.node_features.permute_rows(&perm);
        for (x, y) in ca.data.iter().zip(&b.connectivity.data) {
            prop_assert!((x - y).abs() < 1e-9);
        }
        for (x, y) in fa.data.iter().zip(&b.node_features.data) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn connectivity_ignores_common_gain(seed in 0u64..10_000, gain in 1e-3f64..1e3) {
        let channels = mixed_channels(seed, 5, 2500);
        let scaled: Vec<Vec<f64>> = channels.iter().map(|c| c.iter().map(|v| v * gain).collect()).collect();
        let d = distance_matrix(&STANDARD_CHANNELS).unwrap();
        let config = ConnectivityConfig::default();
        let a = combined_connectivity(&window(&STANDARD_CHANNELS, channels), &d, &config).unwrap();
        let b = combined_connectivity(&window(&STANDARD_CHANNELS, scaled), &d, &config).unwrap();
        for (x, y) in a.data.iter().zip(&b.data) {
            prop_assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn emitted_graphs_are_well_formed(seed in 0u64..10_000, distance in any::<bool>()) {
        let config = ConnectivityConfig { use_distance_term: distance, ..ConnectivityConfig::default() };
        let rec = recording(&STANDARD_CHANNELS, mixed_channels(seed, 5, 5000));
        for g in build_graphs(&rec, 10.0, &config, None).unwrap() {
            assert_valid_connectivity(&g.connectivity);
            prop_assert!(g.node_features.is_finite());
        }
    }
}
