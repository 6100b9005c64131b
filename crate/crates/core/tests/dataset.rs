//! Dataset invariants checked against independent oracles.

use emolatent::dataset::{
    filter_classes, fit_standardizer, generate_synthetic, kfold_split, parse_corpus,
    parse_corpus_from, remove_outliers, write_corpus, ColumnSchema, Corpus, EmotionLabel,
    FeatureVector, LabeledSample, SyntheticConfig,
};
use proptest::prelude::*;

fn sample(i: usize, label: EmotionLabel, values: Vec<f64>) -> LabeledSample {
    LabeledSample {
        sample_id: format!("s{i:04}"),
        speaker_id: format!("spk{}", i % 3),
        features: FeatureVector::new(values).unwrap(),
        label,
        valence: None,
        activation: None,
    }
}

fn corpus_from(rows: &[(usize, Vec<f64>)]) -> Corpus {
    let samples = rows
        .iter()
        .enumerate()
        .map(|(i, (l, v))| sample(i, EmotionLabel::ALL[*l], v.clone()))
        .collect();
    Corpus::new("prop", "en", samples).unwrap()
}

fn row_strategy() -> impl Strategy<Value = (usize, Vec<f64>)> {
    (0..4usize, prop::collection::vec(-50.0..50.0f64, 88))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn outlier_removal_matches_a_two_pass_scan(
        rows in prop::collection::vec(row_strategy(), 3..40),
        threshold in 0.5..3.0f64,
    ) {
        let corpus = corpus_from(&rows);
        let stats = fit_standardizer(&corpus).unwrap();
        let n = rows.len() as f64;
        let mut expected = Vec::new();
        for (i, (_, v)) in rows.iter().enumerate() {
            let keep = (0..88).all(|j| {
                let mean = rows.iter().map(|r| r.1[j]).sum::<f64>() / n;
                let sd = (rows.iter().map(|r| (r.1[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
                ((v[j] - mean) / sd).abs() <= threshold
            });
            if keep {
                expected.push(format!("s{i:04}"));
            }
        }
        match remove_outliers(&corpus, &stats, threshold) {
            Ok(kept) => {
                let ids: Vec<String> = kept.samples().iter().map(|s| s.sample_id.clone()).collect();
                prop_assert_eq!(ids, expected);
            }
            Err(_) => prop_assert!(expected.is_empty()),
        }
    }

    #[test]
    fn standardizer_matches_two_pass_moments(rows in prop::collection::vec(row_strategy(), 2..30)) {
        let corpus = corpus_from(&rows);
        let stats = fit_standardizer(&corpus).unwrap();
        let n = rows.len() as f64;
        for j in 0..88 {
            let mean = rows.iter().map(|r| r.1[j]).sum::<f64>() / n;
            let sd = (rows.iter().map(|r| (r.1[j] - mean).powi(2)).sum::<f64>() / n).sqrt();
            prop_assert!((stats.means[j] - mean).abs() <= 1e-9 * (1.0 + mean.abs()));
            prop_assert!((stats.stddevs[j] - sd).abs() <= 1e-9 * (1.0 + sd));
        }
    }

    #[test]
    fn filtering_keeps_exactly_the_requested_labels(
        labels in prop::collection::vec(0..4usize, 1..60),
        keep_mask in prop::collection::vec(any::<bool>(), 4),
    ) {
        let rows: Vec<(usize, Vec<f64>)> = labels.iter().map(|&l| (l, vec![l as f64; 88])).collect();
        let corpus = corpus_from(&rows);
        let keep: Vec<EmotionLabel> = EmotionLabel::ALL
            .iter()
            .zip(&keep_mask)
            .filter_map(|(l, &k)| k.then_some(*l))
            .collect();
        let filtered = filter_classes(&corpus, &keep);
        let counts = corpus.class_counts();
        let expected: usize = keep.iter().map(|l| counts[l.index()]).sum();
        prop_assert_eq!(filtered.len(), expected);
        prop_assert!(filtered.samples().iter().all(|s| keep.contains(&s.label)));
        for l in EmotionLabel::ALL {
            let want = if keep.contains(&l) { counts[l.index()] } else { 0 };
            prop_assert_eq!(filtered.class_counts()[l.index()], want);
        }
    }

    #[test]
    fn folds_partition_the_corpus(
        labels in prop::collection::vec(0..4usize, 10..120),
        k in 2..10usize,
        seed in any::<u64>(),
        stratify in any::<bool>(),
    ) {
        prop_assume!(labels.len() >= k);
        let rows: Vec<(usize, Vec<f64>)> = labels.iter().map(|&l| (l, vec![0.0; 88])).collect();
        let corpus = corpus_from(&rows);
        let split = kfold_split(&corpus, k, seed, stratify).unwrap();
        let mut seen = vec![0usize; corpus.len()];
        for f in 0..k {
            let held = split.held_out(f);
            let training = split.training(f);
            prop_assert_eq!(held.len() + training.len(), corpus.len());
            for i in held {
                seen[i] += 1;
                prop_assert!(!training.contains(&i));
            }
        }
        prop_assert!(seen.iter().all(|&c| c == 1));
        let sizes = split.sizes();
        let (lo, hi) = (sizes.iter().min().unwrap(), sizes.iter().max().unwrap());
        if !stratify {
            prop_assert!(hi - lo <= 1);
        }
    }
}

#[test]
fn unstratified_folds_of_103_samples() {
    let rows: Vec<(usize, Vec<f64>)> = (0..103).map(|i| (i % 4, vec![0.0; 88])).collect();
    let split = kfold_split(&corpus_from(&rows), 10, 1, false).unwrap();
    let mut sizes = split.sizes();
    sizes.sort_unstable();
    assert_eq!(sizes, [10, 10, 10, 10, 10, 10, 10, 11, 11, 11]);
}

#[test]
fn stratified_folds_balance_every_class() {
    let rows: Vec<(usize, Vec<f64>)> = (0..137).map(|i| ((i * 7) % 4, vec![0.0; 88])).collect();
    let corpus = corpus_from(&rows);
    let split = kfold_split(&corpus, 10, 3, true).unwrap();
    for label in EmotionLabel::ALL {
        let per_fold: Vec<usize> = (0..10)
            .map(|f| {
                split
                    .held_out(f)
                    .iter()
                    .filter(|&&i| corpus.samples()[i].label == label)
                    .count()
            })
            .collect();
        let (lo, hi) = (
            per_fold.iter().min().unwrap(),
            per_fold.iter().max().unwrap(),
        );
        assert!(hi - lo <= 1, "{label:?}: {per_fold:?}");
    }
}

#[test]
fn synthetic_latent_means_match_the_configuration() {
    for cfg in [
        SyntheticConfig::separable(400),
        SyntheticConfig::happy_overlap(400).with_rotation(35.0),
    ] {
        let corpus = generate_synthetic(&cfg, 17).unwrap();
        for class in &cfg.classes {
            let members: Vec<&LabeledSample> = corpus
                .samples()
                .iter()
                .filter(|s| s.label == class.label)
                .collect();
            assert_eq!(members.len(), class.count);
            let n = members.len() as f64;
            let coords = [
                members
                    .iter()
                    .map(|s| s.activation.unwrap())
                    .collect::<Vec<_>>(),
                members
                    .iter()
                    .map(|s| s.valence.unwrap())
                    .collect::<Vec<_>>(),
            ];
            for (d, values) in coords.iter().enumerate() {
                let mean = values.iter().sum::<f64>() / n;
                let se = (class.covariance[d][d] / n).sqrt();
                assert!(
                    (mean - class.mean[d]).abs() < 3.0 * se,
                    "{:?} dim {d}: mean {mean} vs {} (3 SE = {})",
                    class.label,
                    class.mean[d],
                    3.0 * se
                );
            }
        }
    }
}

#[test]
fn corpus_csv_round_trip_is_lossless() {
    let corpus = generate_synthetic(&SyntheticConfig::happy_overlap(20), 8).unwrap();
    let mut buf = Vec::new();
    write_corpus(&corpus, &mut buf).unwrap();
    let back = parse_corpus_from(buf.as_slice(), &corpus.name, &ColumnSchema::default()).unwrap();
    assert_eq!(back.samples(), corpus.samples());
}

#[test]
fn committed_fixtures_match_the_generator() {
    let dir = std::path::Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fixtures");
    for (file, cfg) in [
        ("synthetic_separable.csv", SyntheticConfig::separable(250)),
        ("synthetic_overlap.csv", SyntheticConfig::happy_overlap(250)),
    ] {
        let parsed = parse_corpus(&dir.join(file), &ColumnSchema::default()).unwrap();
        let generated = generate_synthetic(&cfg, 42).unwrap();
        assert_eq!(parsed.len(), 1000);
        assert_eq!(parsed.samples(), generated.samples(), "{file}");
    }
}
