mod common;

use std::sync::Arc;

use affectlens::labels::{LabelVector, Taxonomy};
use affectlens::metrics::{evaluate, f1_micro, hamming_loss, jaccard_accuracy, lrap, lrap_sample, weak_accuracy, EvalPair};
use common::*;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Triple = (Vec<bool>, Vec<bool>, Vec<f64>);

fn triples(labels: usize, max_n: usize) -> impl Strategy<Value = Vec<Triple>> {
    // Scores on a coarse grid so ties are common.
    let one = (
        prop::collection::vec(any::<bool>(), labels),
        prop::collection::vec(any::<bool>(), labels),
        prop::collection::vec((0u8..8).prop_map(|s| f64::from(s) / 8.0), labels),
    );
    prop::collection::vec(one, 1..max_n)
}

fn pairs_over(t: &[Triple], taxonomy: &Arc<Taxonomy>) -> Vec<EvalPair> {
    to_pairs(t, taxonomy)
}

fn permute_labels(t: &[Triple], perm: &[usize]) -> Vec<Triple> {
    let pick = |v: &Vec<bool>| perm.iter().map(|&i| v[i]).collect::<Vec<_>>();
    t.iter()
        .map(|(g, p, s)| (pick(g), pick(p), perm.iter().map(|&i| s[i]).collect()))
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn weak_plus_hamming_is_exactly_one(t in triples(11, 40)) {
        let pairs = pairs_over(&t, &synthetic_taxonomy(11));
        prop_assert_eq!(weak_accuracy(&pairs).unwrap() + hamming_loss(&pairs).unwrap(), 1.0);
    }

    #[test]
    fn every_metric_matches_the_oracle(t in triples(7, 40)) {
        let report = evaluate(&pairs_over(&t, &synthetic_taxonomy(7))).unwrap();
        for ((name, got), (_, want)) in report.rows().iter().zip(oracle(&t).fields()) {
            prop_assert!((got - want).abs() <= 1e-9, "{}: {} vs {}", name, got, want);
        }
    }

    #[test]
    fn metrics_lie_in_unit_interval(t in triples(5, 30)) {
        let report = evaluate(&pairs_over(&t, &synthetic_taxonomy(5))).unwrap();
        for (name, v) in report.rows() {
            if name != "lrap" {
                prop_assert!((0.0..=1.0).contains(&v), "{} = {}", name, v);
            }
        }
    }

    #[test]
    fn lrap_stays_in_unit_interval_without_true_label_ties(gold in prop::collection::vec(any::<bool>(), 1..12), seed in any::<u64>()) {
        // Distinct scores; shared-rank ties among true labels are covered separately.
        let mut scores: Vec<f64> = (0..gold.len()).map(|i| i as f64).collect();
        rand::seq::SliceRandom::shuffle(&mut scores[..], &mut ChaCha8Rng::seed_from_u64(seed));
        let v = lrap_sample(&gold, &scores);
        prop_assert!(v > 0.0 && v <= 1.0, "lrap = {}", v);
    }

    #[test]
    fn sample_order_is_irrelevant(t in triples(6, 30), seed in any::<u64>()) {
        let taxonomy = synthetic_taxonomy(6);
        let mut shuffled = t.clone();
        rand::seq::SliceRandom::shuffle(&mut shuffled[..], &mut ChaCha8Rng::seed_from_u64(seed));
        let a = evaluate(&pairs_over(&t, &taxonomy)).unwrap();
        let b = evaluate(&pairs_over(&shuffled, &taxonomy)).unwrap();
        for ((name, x), (_, y)) in a.rows().iter().zip(b.rows()) {
            prop_assert!((x - y).abs() <= 1e-12, "{}: {} vs {}", name, x, y);
        }
    }

    #[test]
    fn label_order_is_irrelevant(t in triples(6, 30), seed in any::<u64>()) {
        let taxonomy = synthetic_taxonomy(6);
        let mut perm: Vec<usize> = (0..6).collect();
        rand::seq::SliceRandom::shuffle(&mut perm[..], &mut ChaCha8Rng::seed_from_u64(seed));
        let a = evaluate(&pairs_over(&t, &taxonomy)).unwrap();
        let b = evaluate(&pairs_over(&permute_labels(&t, &perm), &taxonomy)).unwrap();
        for ((name, x), (_, y)) in a.rows().iter().zip(b.rows()) {
            prop_assert!((x - y).abs() <= 1e-12, "{}: {} vs {}", name, x, y);
        }
    }

    #[test]
    fn duplicating_the_dataset_changes_nothing(t in triples(6, 30)) {
        let taxonomy = synthetic_taxonomy(6);
        let doubled: Vec<Triple> = t.iter().chain(&t).cloned().collect();
        let a = evaluate(&pairs_over(&t, &taxonomy)).unwrap();
        let b = evaluate(&pairs_over(&doubled, &taxonomy)).unwrap();
        for ((name, x), (_, y)) in a.rows().iter().zip(b.rows()) {
            prop_assert!((x - y).abs() <= 1e-12, "{}: {} vs {}", name, x, y);
        }
    }

    #[test]
    fn lrap_is_one_when_true_labels_outrank_false_ones(
        gold in prop::collection::vec(any::<bool>(), 1..12),
        seed in any::<u64>(),
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let scores: Vec<f64> = gold
            .iter()
            .map(|&g| if g { 1.0 + rand::Rng::gen::<f64>(&mut rng) } else { rand::Rng::gen::<f64>(&mut rng) })
            .collect();
        prop_assert_eq!(lrap_sample(&gold, &scores), 1.0);
    }

    #[test]
    fn perfect_predictions_score_perfectly(gold in prop::collection::vec(prop::collection::vec(any::<bool>(), 4), 1..20)) {
        let t: Vec<Triple> = gold
            .iter()
            .map(|g| {
                let scores = g.iter().enumerate().map(|(i, &b)| f64::from(u8::from(b)) + i as f64 / 8.0).collect();
                (g.clone(), g.clone(), scores)
            })
            .collect();
        let pairs = pairs_over(&t, &synthetic_taxonomy(4));
        prop_assert_eq!(jaccard_accuracy(&pairs).unwrap(), 1.0);
        prop_assert_eq!(hamming_loss(&pairs).unwrap(), 0.0);
        prop_assert_eq!(lrap(&pairs).unwrap(), 1.0);
    }
}

fn pair(taxonomy: &Arc<Taxonomy>, gold: &[bool], pred: &[bool], scores: Option<Vec<f64>>) -> EvalPair {
    EvalPair::new(
        LabelVector::new(taxonomy.clone(), gold.to_vec()).unwrap(),
        LabelVector::new(taxonomy.clone(), pred.to_vec()).unwrap(),
        scores,
    )
    .unwrap()
}

#[test]
fn worked_examples() {
    let t3 = synthetic_taxonomy(3);
    let p = [pair(&t3, &[true, false, true], &[true, true, false], None)];
    assert_eq!(f1_micro(&p).unwrap(), 0.5);
    assert!((hamming_loss(&p).unwrap() - 2.0 / 3.0).abs() < 1e-15);
    assert!((weak_accuracy(&p).unwrap() - 1.0 / 3.0).abs() < 1e-15);

    let t2 = synthetic_taxonomy(2);
    assert_eq!(jaccard_accuracy(&[pair(&t2, &[true, true], &[true, false], None)]).unwrap(), 0.5);
    assert_eq!(jaccard_accuracy(&[pair(&t2, &[false, false], &[false, false], None)]).unwrap(), 1.0);

    assert_eq!(lrap_sample(&[true, false, true], &[0.9, 0.1, 0.8]), 1.0);
    assert!((lrap_sample(&[true, false, false], &[0.1, 0.9, 0.5]) - 1.0 / 3.0).abs() < 1e-15);
    assert_eq!(lrap_sample(&[false, false, false], &[0.3, 0.2, 0.1]), 1.0);
}

#[test]
fn ties_share_the_best_rank() {
    // rank = 1 + #strictly greater, and every true label at or above counts.
    assert!((lrap_sample(&[false, true, false], &[0.9, 0.4, 0.4]) - 0.5).abs() < 1e-15);
    assert_eq!(lrap_sample(&[true, false, false], &[0.5, 0.5, 0.5]), 1.0);
    // Tied true labels all sit at rank 1 and each sees both: 2/1 per label.
    assert_eq!(lrap_sample(&[true, true, false], &[0.5, 0.5, 0.5]), 2.0);
}

#[test]
fn empty_input_and_missing_scores_are_errors() {
    assert!(jaccard_accuracy(&[]).is_err());
    let t2 = synthetic_taxonomy(2);
    assert!(lrap(&[pair(&t2, &[true, false], &[true, false], None)]).is_err());
}

#[test]
fn csv_schema() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = random_triples(&mut rng, 20, 5);
    let csv = evaluate(&to_pairs(&t, &synthetic_taxonomy(5))).unwrap().to_csv();
    let names: Vec<&str> = csv.lines().skip(1).map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(csv.lines().next().unwrap(), "metric,value");
    assert_eq!(names, ["jaccard", "f1_macro", "f1_micro", "lrap", "hamming_loss", "weak_accuracy"]);
}
