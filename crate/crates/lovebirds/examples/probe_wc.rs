//! Scratch probe: does the grid weight separate topical from noise tweets?

use lovebirds::corpus::dataset::{build_dataset, BuildConfig};
use lovebirds::corpus::synth::{generate_synthetic, SynthSpec};
use lovebirds::model::UserEncoding;
use lovebirds::numkit::dense::dot_slices;
use lovebirds::trainer::{train, TrainConfig};

fn main() {
    let args: Vec<String> = std::env::args().collect();
    let users: usize = args.get(1).and_then(|s| s.parse().ok()).unwrap_or(160);
    let n: usize = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(24);
    let epochs: usize = args.get(3).and_then(|s| s.parse().ok()).unwrap_or(10);

    let corpus = generate_synthetic(&SynthSpec {
        users,
        topics: 4,
        tweets_per_user: 10,
        tweet_len: 10,
        signal: 1.0,
        seed: 7,
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
            seed: 7,
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
        seed: 7,
        dev_negatives: 50,
        ..TrainConfig::default()
    };
    let out = train(&config, &dataset).unwrap();

    let wc = out.model.store().value("couple.W_c").clone();
    let is_topic_word = |t: &str| corpus.truth.topic_words.iter().any(|ws| ws.iter().any(|w| w == t));

    let mut topical_logits = Vec::new();
    let mut noise_logits = Vec::new();
    for (user, profile) in &dataset.profiles {
        let enc = out.model.encode_user(profile).unwrap();
        let UserEncoding::TweetMatrix { matrix, slots, .. } = enc else {
            unreachable!()
        };
        for (row, &slot) in slots.iter().enumerate() {
            let tweet = &profile.tweets[slot];
            let topical = tweet.token_ids[..tweet.valid_len]
                .iter()
                .any(|&id| is_topic_word(dataset.vocab.decode(id)));
            let logit = dot_slices(matrix.row(row), &wc.data);
            if topical {
                topical_logits.push(logit);
            } else {
                noise_logits.push(logit);
            }
        }
        let _ = user;
    }
    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let sd = |v: &[f64], m: f64| (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / v.len() as f64).sqrt();
    let (mt, mn) = (mean(&topical_logits), mean(&noise_logits));
    println!(
        "users={users} n={n} epochs={epochs}: topical logit {:.4}±{:.4} ({}), noise logit {:.4}±{:.4} ({})",
        mt,
        sd(&topical_logits, mt),
        topical_logits.len(),
        mn,
        sd(&noise_logits, mn),
        noise_logits.len()
    );
}
