//! Scores of fixed-seed CNN and LSTM fixtures against stored reference
//! values. Set `AFFECTLENS_REGENERATE_GOLDEN=1` to rewrite the file after an
//! intentional change to the forward pass.

use std::path::PathBuf;

use affectlens::models::{CnnModel, CnnShape, Input, LstmModel, LstmShape, Network};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

const TOLERANCE: f64 = 1e-12;

fn golden_path() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/forward_golden.json")
}

fn inputs(rng: &mut ChaCha8Rng, embed: usize, lexicon: usize) -> Vec<Input> {
    // Lengths straddle the padding boundary of six tokens.
    [1usize, 5, 6, 20]
        .iter()
        .map(|&len| Input::Sequence {
            embedded: (0..len * embed).map(|_| rng.gen_range(-1.0..1.0)).collect(),
            len,
            features: (0..lexicon).map(|_| rng.gen_range(0.0..0.5)).collect(),
        })
        .collect()
}

fn current() -> Value {
    let mut rng = ChaCha8Rng::seed_from_u64(2020);
    let cnn = CnnModel::init(
        CnnShape {
            embed_dim: 50,
            filters: 8,
            hidden: 16,
            lexicon_dim: 10,
            labels: 11,
        },
        &mut rng,
    );
    let cnn_scores: Vec<Vec<f64>> = inputs(&mut rng, 50, 10).iter().map(|x| cnn.scores(x).unwrap()).collect();
    let lstm = LstmModel::init(
        LstmShape {
            embed_dim: 50,
            hidden: 12,
            dense: 16,
            lexicon_dim: 10,
            labels: 11,
        },
        &mut rng,
    );
    let lstm_scores: Vec<Vec<f64>> = inputs(&mut rng, 50, 10).iter().map(|x| lstm.scores(x).unwrap()).collect();
    json!({ "cnn": cnn_scores, "lstm": lstm_scores })
}

#[test]
fn forward_scores_match_reference() {
    let now = current();
    if std::env::var_os("AFFECTLENS_REGENERATE_GOLDEN").is_some() {
        std::fs::write(golden_path(), serde_json::to_string_pretty(&now).unwrap() + "\n").unwrap();
    }
    let stored: Value = serde_json::from_str(&std::fs::read_to_string(golden_path()).unwrap()).unwrap();
    for model in ["cnn", "lstm"] {
        let (want, got) = (stored[model].as_array().unwrap(), now[model].as_array().unwrap());
        assert_eq!(want.len(), got.len());
        for (w, g) in want.iter().zip(got) {
            for (a, b) in w.as_array().unwrap().iter().zip(g.as_array().unwrap()) {
                let (a, b) = (a.as_f64().unwrap(), b.as_f64().unwrap());
                assert!((a - b).abs() <= TOLERANCE, "{model}: {a} vs {b}");
            }
        }
    }
}
