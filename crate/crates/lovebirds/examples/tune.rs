//! Scratch harness for sizing the reference synthetic run.

use std::time::Instant;

use lovebirds::corpus::dataset::{build_dataset, BuildConfig};
use lovebirds::corpus::pairs::Split;
use lovebirds::corpus::synth::{generate_synthetic, SynthSpec};
use lovebirds::evalkit::{evaluate_split, EvalConfig};
use lovebirds::trainer::{train, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let n: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(32);
    let model = args.get(2).cloned().unwrap_or_else(|| "couplenet".into());
    let epochs: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(10);
    let k: usize = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(20);
    let corpus_k: usize = args.get(5).and_then(|s| s.parse().ok()).unwrap_or(k.max(20));

    let t0 = Instant::now();
    let corpus = generate_synthetic(&SynthSpec {
        users: 400,
        topics: 8,
        tweets_per_user: corpus_k,
        tweet_len: 10,
        signal: 0.9,
        seed: 7,
    })
    .unwrap();
    let (dataset, _) = build_dataset(
        &corpus.tweets,
        Some(&corpus.pairs),
        None,
        &BuildConfig {
            k: corpus_k,
            l: 10,
            min_count: 5,
            seed: 7,
            ..BuildConfig::default()
        },
    )
    .unwrap();
    println!(
        "corpus: {} users, {} pairs, vocab {} ({:.1?})",
        dataset.profiles.len(),
        dataset.pairs.len(),
        dataset.vocab.len(),
        t0.elapsed()
    );

    let config = TrainConfig {
        model: model.clone(),
        epochs,
        batch_size: 16,
        k,
        l: 10,
        n,
        d: n,
        seed: 7,
        tfidf_k: 5000,
        ..TrainConfig::default()
    };
    let t1 = Instant::now();
    let out = train(&config, &dataset).unwrap();
    let train_time = t1.elapsed();
    for e in &out.log.epochs {
        println!(
            "epoch {:2}  loss {:.4}  dev hr10 {:.3}  mrr {:.3}",
            e.epoch, e.mean_loss, e.dev.hr_at[&10], e.dev.mrr
        );
    }
    let (test_metrics, _) = evaluate_split(
        out.model.as_ref(),
        &dataset,
        k,
        &EvalConfig {
            split: Split::Test,
            negatives: 100,
            seed: 7,
        },
    )
    .unwrap();
    println!(
        "model={model} n={n} k={k}: best epoch {}, TEST hr10 {:.3} acc {:.3} mrr {:.3} mean_rank {:.1}  train {:.1?} total {:.1?}",
        out.log.best_epoch,
        test_metrics.hr_at[&10],
        test_metrics.accuracy,
        test_metrics.mrr,
        test_metrics.mean_rank,
        train_time,
        t0.elapsed()
    );
}
