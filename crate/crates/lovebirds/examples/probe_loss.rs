//! Scratch probe: loss trajectory on a strength-1.0 corpus.

use lovebirds::corpus::dataset::{build_dataset, BuildConfig};
use lovebirds::corpus::synth::{generate_synthetic, SynthSpec};
use lovebirds::trainer::{train, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let users: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(80);
    let n: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(24);
    let seed: u64 = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(7);

    let corpus = generate_synthetic(&SynthSpec {
        users,
        topics: 4,
        tweets_per_user: 10,
        tweet_len: 10,
        signal: 1.0,
        seed,
    })
    .unwrap();
    let (dataset, _) = build_dataset(
        &corpus.tweets,
        Some(&corpus.pairs),
        None,
        &BuildConfig {
            k: 10,
            l: 10,
            min_count: 2,
            seed,
            ..BuildConfig::default()
        },
    )
    .unwrap();
    let config = TrainConfig {
        model: "couplenet".into(),
        epochs: 5,
        batch_size: 16,
        k: 10,
        l: 10,
        n,
        d: n,
        seed,
        dev_negatives: 50,
        ..TrainConfig::default()
    };
    let out = train(&config, &dataset).unwrap();
    let losses: Vec<f64> = out.log.epochs.iter().map(|e| e.train_loss_eval).collect();
    println!("users={users} n={n} seed={seed} losses={losses:?}");
    println!(
        "strictly decreasing first 3: {}",
        losses[0] > losses[1] && losses[1] > losses[2]
    );
}
