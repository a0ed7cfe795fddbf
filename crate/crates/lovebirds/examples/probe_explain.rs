//! Scratch probe: does coupled attention surface planted topic tweets?

use lovebirds::corpus::dataset::{build_dataset, BuildConfig};
use lovebirds::corpus::synth::{generate_synthetic, SynthSpec};
use lovebirds::evalkit::explain;
use lovebirds::trainer::{train, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let users: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(160);
    let n: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(24);
    let epochs: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(10);
    let seed: u64 = args.get(4).and_then(|s| s.parse().ok()).unwrap_or(7);

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
        epochs,
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

    let mut shared_hits = 0;
    let mut any_topic_hits = 0;
    let mut total = 0;
    let is_topic_word =
        |t: &String| corpus.truth.topic_words.iter().any(|ws| ws.contains(t));
    for pair in &corpus.pairs {
        if !dataset.profiles.contains_key(&pair.0) {
            continue;
        }
        let record = explain(out.model.as_ref(), &dataset, 10, &pair.0, &pair.1, 1).unwrap();
        let topic = corpus.truth.user_topics[&pair.0].0;
        let topic_words = &corpus.truth.topic_words[topic];
        let shared_side = |side: usize| {
            record.users[side].top[0]
                .tokens
                .iter()
                .any(|t| topic_words.contains(t))
        };
        let topical_side = |side: usize| record.users[side].top[0].tokens.iter().any(is_topic_word);
        total += 1;
        if shared_side(0) && shared_side(1) {
            shared_hits += 1;
        }
        if topical_side(0) && topical_side(1) {
            any_topic_hits += 1;
        }
    }
    println!(
        "users={users} n={n} epochs={epochs} seed={seed}: shared {shared_hits}/{total} = {:.2}  any-topic {any_topic_hits}/{total} = {:.2}",
        shared_hits as f64 / total as f64,
        any_topic_hits as f64 / total as f64
    );
}
