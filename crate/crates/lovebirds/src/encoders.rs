//! Token-to-tweet encoders shared across models: embedding lookup, GRU
//! recurrence, tweet-level attentional pooling, and the convolutional
//! encoder used by the DeepCoNN-style baseline.
//!
//! Encoders are graph builders over [`Tape`]; the same code path serves
//! training (gradients on) and evaluation (gradients off), so the two can
//! never drift apart.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use crate::corpus::profile::TokenizedTweet;
use crate::corpus::vocab::{Vocabulary, PAD_ID};
use crate::error::{Error, Result};
use crate::numkit::dense::DenseArray;
use crate::numkit::params::ParamStore;
use crate::numkit::rng::RngState;
use crate::numkit::tape::{Tape, Var};

/// Word embedding matrix. Static for the RankSVM/MLP baselines, registered
/// as a trainable parameter for the neural models.
#[derive(Debug, Clone)]
pub struct EmbeddingTable {
    pub matrix: DenseArray,
    pub dim: usize,
    pub trainable: bool,
}

impl EmbeddingTable {
    /// Gaussian init with the PAD row frozen at zero.
    pub fn gaussian(vocab_size: usize, dim: usize, std: f64, rng: &mut RngState) -> Self {
        let mut matrix = DenseArray::zeros(&[vocab_size, dim]);
        for (i, x) in matrix.data.iter_mut().enumerate() {
            if i >= dim {
                *x = rng.gaussian(0.0, std);
            }
        }
        EmbeddingTable {
            matrix,
            dim,
            trainable: false,
        }
    }

    /// Loads pretrained vectors in the text format `token v1 ... vd`, one
    /// token per line. File tokens absent from the vocabulary are skipped;
    /// vocabulary tokens absent from the file keep their Gaussian init. The
    /// PAD row is forced to zero.
    pub fn from_pretrained(
        path: &Path,
        vocab: &Vocabulary,
        std: f64,
        rng: &mut RngState,
    ) -> Result<Self> {
        let reader = BufReader::new(File::open(path)?);
        let mut dim: Option<usize> = None;
        let mut rows: Vec<(u32, Vec<f64>)> = Vec::new();
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let mut parts = line.split_whitespace();
            let token = parts
                .next()
                .ok_or_else(|| Error::Malformed(format!("embedding line {}", lineno + 1)))?;
            let values: Vec<f64> = parts
                .map(|p| {
                    p.parse::<f64>()
                        .map_err(|e| Error::Malformed(format!("embedding line {}: {e}", lineno + 1)))
                })
                .collect::<Result<_>>()?;
            match dim {
                None => dim = Some(values.len()),
                Some(d) if d != values.len() => {
                    return Err(Error::Malformed(format!(
                        "embedding line {}: width {} != {}",
                        lineno + 1,
                        values.len(),
                        d
                    )))
                }
                _ => {}
            }
            let id = vocab.lookup(token);
            if id != crate::corpus::vocab::UNK_ID && id != PAD_ID {
                rows.push((id, values));
            }
        }
        let dim = dim.ok_or_else(|| Error::Malformed("empty embedding file".into()))?;
        let mut table = Self::gaussian(vocab.len(), dim, std, rng);
        for (id, values) in rows {
            let start = id as usize * dim;
            table.matrix.data[start..start + dim].copy_from_slice(&values);
        }
        Ok(table)
    }

    /// Plain lookup for code paths that bypass the tape (static features).
    pub fn embed_rows(&self, ids: &[u32]) -> Result<DenseArray> {
        let mut data = Vec::with_capacity(ids.len() * self.dim);
        for &id in ids {
            if id as usize >= self.matrix.shape[0] {
                return Err(Error::TokenOutOfRange {
                    id: id as usize,
                    vocab_size: self.matrix.shape[0],
                });
            }
            data.extend_from_slice(self.matrix.row(id as usize));
        }
        Ok(DenseArray::from_vec(&[ids.len(), self.dim], data))
    }
}

// ---------------------------------------------------------------------------
// GRU
// ---------------------------------------------------------------------------

/// Canonical parameter names under a prefix such as `gru.`:
/// `W_z W_r W_h` (d x n), `U_z U_r U_h` (n x n), `b_z b_r b_h` (n).
pub fn register_gru_params(
    store: &mut ParamStore,
    prefix: &str,
    d: usize,
    n: usize,
    std: f64,
    rng: &mut RngState,
) {
    for gate in ["z", "r", "h"] {
        store.insert_gaussian(&format!("{prefix}W_{gate}"), &[d, n], std, rng);
        store.insert_gaussian(&format!("{prefix}U_{gate}"), &[n, n], std, rng);
        store.insert_gaussian(&format!("{prefix}b_{gate}"), &[n], std, rng);
    }
}

pub struct GruVars {
    pub w_z: Var,
    pub w_r: Var,
    pub w_h: Var,
    pub u_z: Var,
    pub u_r: Var,
    pub u_h: Var,
    pub b_z: Var,
    pub b_r: Var,
    pub b_h: Var,
    pub n: usize,
}

impl GruVars {
    pub fn bind(tape: &mut Tape, store: &ParamStore, prefix: &str) -> Self {
        let n = store.value(&format!("{prefix}b_z")).len();
        GruVars {
            w_z: tape.param(&format!("{prefix}W_z"), store),
            w_r: tape.param(&format!("{prefix}W_r"), store),
            w_h: tape.param(&format!("{prefix}W_h"), store),
            u_z: tape.param(&format!("{prefix}U_z"), store),
            u_r: tape.param(&format!("{prefix}U_r"), store),
            u_h: tape.param(&format!("{prefix}U_h"), store),
            b_z: tape.param(&format!("{prefix}b_z"), store),
            b_r: tape.param(&format!("{prefix}b_r"), store),
            b_h: tape.param(&format!("{prefix}b_h"), store),
            n,
        }
    }
}

/// Runs the gated recurrence over the first `valid_len` rows of `x` (L x d),
/// starting from h_0 = 0:
///
/// ```text
/// z_t = sigmoid(x_t W_z + h_{t-1} U_z + b_z)
/// r_t = sigmoid(x_t W_r + h_{t-1} U_r + b_r)
/// hhat = tanh(x_t W_h + (r_t * h_{t-1}) U_h + b_h)
/// h_t  = z_t * h_{t-1} + (1 - z_t) * hhat
/// ```
///
/// Returns L hidden states; steps at or beyond `valid_len` repeat
/// h_{valid_len}, so padding content can never leak into the output.
pub fn gru_encode(
    tape: &mut Tape,
    x: Var,
    valid_len: usize,
    p: &GruVars,
) -> Result<Vec<Var>> {
    let l = tape.value(x).rows();
    if valid_len > l {
        return Err(Error::Parameter(format!(
            "valid_len {valid_len} exceeds sequence length {l}"
        )));
    }
    let ones = tape.constant(DenseArray::from_vec(&[p.n], vec![1.0; p.n]));
    let mut h = tape.constant(DenseArray::zeros(&[p.n]));
    let mut states = Vec::with_capacity(l);
    for t in 0..valid_len {
        let x_t = tape.row(x, t);
        let z_pre = {
            let a = tape.vecmat(x_t, p.w_z)?;
            let b = tape.vecmat(h, p.u_z)?;
            let s = tape.add(a, b)?;
            tape.add(s, p.b_z)?
        };
        let z = tape.sigmoid(z_pre);
        let r_pre = {
            let a = tape.vecmat(x_t, p.w_r)?;
            let b = tape.vecmat(h, p.u_r)?;
            let s = tape.add(a, b)?;
            tape.add(s, p.b_r)?
        };
        let r = tape.sigmoid(r_pre);
        let hhat_pre = {
            let a = tape.vecmat(x_t, p.w_h)?;
            let gated = tape.mul(r, h)?;
            let b = tape.vecmat(gated, p.u_h)?;
            let s = tape.add(a, b)?;
            tape.add(s, p.b_h)?
        };
        let hhat = tape.tanh(hhat_pre);
        let keep = tape.mul(z, h)?;
        let gate_new = tape.sub(ones, z)?;
        let fresh = tape.mul(gate_new, hhat)?;
        h = tape.add(keep, fresh)?;
        states.push(h);
    }
    while states.len() < l {
        states.push(h);
    }
    Ok(states)
}

// ---------------------------------------------------------------------------
// Tweet-level attention
// ---------------------------------------------------------------------------

/// Canonical names: `att.W_y` (n x n) and `att.w` (n).
pub fn register_attention_params(
    store: &mut ParamStore,
    prefix: &str,
    n: usize,
    std: f64,
    rng: &mut RngState,
) {
    store.insert_gaussian(&format!("{prefix}W_y"), &[n, n], std, rng);
    store.insert_gaussian(&format!("{prefix}w"), &[n], std, rng);
}

pub struct AttentionVars {
    pub w_y: Var,
    pub w: Var,
}

impl AttentionVars {
    pub fn bind(tape: &mut Tape, store: &ParamStore, prefix: &str) -> Self {
        AttentionVars {
            w_y: tape.param(&format!("{prefix}W_y"), store),
            w: tape.param(&format!("{prefix}w"), store),
        }
    }
}

/// Attentional pooling of hidden states into one tweet vector:
/// logits_t = w . tanh(h_t W_y), weights = softmax over the valid prefix,
/// r = sum_t a_t h_t.
///
/// `weights` is None when no position is valid; the vector is then zero
/// (the empty-slot case).
pub struct PooledTweet {
    pub vector: Var,
    pub weights: Option<Var>,
}

pub fn tweet_attention(
    tape: &mut Tape,
    states: &[Var],
    valid_len: usize,
    p: &AttentionVars,
) -> Result<PooledTweet> {
    let n = tape.value(p.w).len();
    if valid_len == 0 {
        return Ok(PooledTweet {
            vector: tape.constant(DenseArray::zeros(&[n])),
            weights: None,
        });
    }
    let h = tape.stack_rows(&states[..valid_len]);
    let proj = {
        let hw = {
            // per-position h_t W_y, batched as H (T x n) times W_y (n x n)
            let mut rows = Vec::with_capacity(valid_len);
            for t in 0..valid_len {
                let ht = tape.row(h, t);
                rows.push(tape.vecmat(ht, p.w_y)?);
            }
            tape.stack_rows(&rows)
        };
        tape.tanh(hw)
    };
    let logits = tape.matvec(proj, p.w)?;
    let mask = vec![true; valid_len];
    let weights = tape.softmax_masked(logits, &mask)?;
    let vector = tape.weighted_sum_rows(h, weights)?;
    Ok(PooledTweet {
        vector,
        weights: Some(weights),
    })
}

/// Embed one tweet and encode it with GRU plus attention pooling.
pub fn encode_tweet(
    tape: &mut Tape,
    table: Var,
    tweet: &TokenizedTweet,
    gru: &GruVars,
    att: &AttentionVars,
) -> Result<PooledTweet> {
    if tweet.valid_len == 0 {
        return Ok(PooledTweet {
            vector: tape.constant(DenseArray::zeros(&[gru.n])),
            weights: None,
        });
    }
    let x = tape.embed(table, &tweet.token_ids)?;
    let states = gru_encode(tape, x, tweet.valid_len, gru)?;
    tweet_attention(tape, &states, tweet.valid_len, att)
}

// ---------------------------------------------------------------------------
// Convolutional encoder
// ---------------------------------------------------------------------------

/// Canonical names: `conv.W` (3d x n) and `conv.b` (n).
pub fn register_conv_params(
    store: &mut ParamStore,
    prefix: &str,
    d: usize,
    n: usize,
    std: f64,
    rng: &mut RngState,
) {
    store.insert_gaussian(&format!("{prefix}W"), &[3 * d, n], std, rng);
    store.insert_gaussian(&format!("{prefix}b"), &[n], std, rng);
}

pub struct ConvVars {
    pub w: Var,
    pub b: Var,
}

impl ConvVars {
    pub fn bind(tape: &mut Tape, store: &ParamStore, prefix: &str) -> Self {
        ConvVars {
            w: tape.param(&format!("{prefix}W"), store),
            b: tape.param(&format!("{prefix}b"), store),
        }
    }
}

/// Width-3 convolution over the sequence (zero padding keeps the length),
/// ReLU, then max-over-time pooling down to one n-vector.
pub fn cnn_encode(tape: &mut Tape, x: Var, p: &ConvVars) -> Result<Var> {
    let conv = tape.conv1d_w3(x, p.w, p.b)?;
    let act = tape.relu(conv);
    Ok(tape.max_over_rows(act))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numkit::dense;
    use crate::numkit::gradcheck::grad_check;

    fn zero_gru_store(d: usize, n: usize) -> ParamStore {
        let mut store = ParamStore::new();
        for gate in ["z", "r", "h"] {
            store.insert_value(&format!("gru.W_{gate}"), DenseArray::zeros(&[d, n]));
            store.insert_value(&format!("gru.U_{gate}"), DenseArray::zeros(&[n, n]));
            store.insert_value(&format!("gru.b_{gate}"), DenseArray::zeros(&[n]));
        }
        store
    }

    fn random_gru_store(d: usize, n: usize, seed: u64) -> ParamStore {
        let mut store = ParamStore::new();
        let mut rng = RngState::new(seed);
        register_gru_params(&mut store, "gru.", d, n, 0.4, &mut rng);
        store
    }

    #[test]
    fn zero_parameters_give_zero_states() {
        // sigma(0) = 0.5 and tanh(0) = 0 force h_t = 0.5 h_{t-1} = 0.
        let store = zero_gru_store(3, 4);
        let mut tape = Tape::eval();
        let x = tape.constant(DenseArray::from_vec(
            &[2, 3],
            vec![1.0, -2.0, 0.5, 0.3, 0.9, -1.1],
        ));
        let gru = GruVars::bind(&mut tape, &store, "gru.");
        let states = gru_encode(&mut tape, x, 2, &gru).unwrap();
        for s in states {
            assert!(tape.value(s).data.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn zero_valid_len_gives_zero_matrix() {
        let store = random_gru_store(3, 4, 1);
        let mut tape = Tape::eval();
        let x = tape.constant(DenseArray::from_vec(&[2, 3], vec![5.0; 6]));
        let gru = GruVars::bind(&mut tape, &store, "gru.");
        let states = gru_encode(&mut tape, x, 0, &gru).unwrap();
        assert_eq!(states.len(), 2);
        for s in states {
            assert!(tape.value(s).data.iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn single_step_matches_direct_formula() {
        let d = 3;
        let n = 4;
        let store = random_gru_store(d, n, 2);
        let mut rng = RngState::new(3);
        let x_data: Vec<f64> = (0..d).map(|_| rng.next_gaussian()).collect();

        let mut tape = Tape::eval();
        let x = tape.constant(DenseArray::from_vec(&[1, d], x_data.clone()));
        let gru = GruVars::bind(&mut tape, &store, "gru.");
        let states = gru_encode(&mut tape, x, 1, &gru).unwrap();
        let got = tape.value(states[0]).clone();

        // Direct evaluation with h_0 = 0: h_1 = (1 - z) * tanh(x W_h + b_h).
        let xv = DenseArray::from_vec(&[d], x_data);
        let z = dense::sigmoid(
            &dense::add(&dense::vecmat(&xv, store.value("gru.W_z")).unwrap(), store.value("gru.b_z"))
                .unwrap(),
        );
        let hhat = dense::tanh(
            &dense::add(&dense::vecmat(&xv, store.value("gru.W_h")).unwrap(), store.value("gru.b_h"))
                .unwrap(),
        );
        for j in 0..n {
            let expect = (1.0 - z.data[j]) * hhat.data[j];
            assert!((got.data[j] - expect).abs() < 1e-12, "coord {j}");
        }
    }

    #[test]
    fn padding_positions_do_not_change_states() {
        let store = random_gru_store(3, 4, 4);
        let run = |pad_value: f64| {
            let mut tape = Tape::eval();
            let x = tape.constant(DenseArray::from_vec(
                &[3, 3],
                vec![0.1, 0.2, 0.3, -0.4, 0.5, 0.6, pad_value, pad_value, pad_value],
            ));
            let gru = GruVars::bind(&mut tape, &store, "gru.");
            let states = gru_encode(&mut tape, x, 2, &gru).unwrap();
            tape.value(states[2]).clone()
        };
        assert_eq!(run(0.0).data, run(123.0).data);
    }

    #[test]
    fn attention_single_position_takes_it_all() {
        let n = 4;
        let mut store = ParamStore::new();
        let mut rng = RngState::new(5);
        register_attention_params(&mut store, "att.", n, 0.3, &mut rng);
        let mut tape = Tape::eval();
        let h1 = tape.constant(DenseArray::from_vec(&[n], vec![0.5, -1.0, 2.0, 0.1]));
        let att = AttentionVars::bind(&mut tape, &store, "att.");
        let pooled = tweet_attention(&mut tape, &[h1], 1, &att).unwrap();
        assert_eq!(tape.value(pooled.weights.unwrap()).data, vec![1.0]);
        assert_eq!(tape.value(pooled.vector).data, tape.value(h1).data.clone());
    }

    #[test]
    fn attention_zero_w_is_uniform_mean() {
        let n = 3;
        let mut store = ParamStore::new();
        let mut rng = RngState::new(6);
        store.insert_gaussian("att.W_y", &[n, n], 0.3, &mut rng);
        store.insert_value("att.w", DenseArray::zeros(&[n]));
        let mut tape = Tape::eval();
        let rows = [
            tape.constant(DenseArray::from_vec(&[n], vec![1.0, 2.0, 3.0])),
            tape.constant(DenseArray::from_vec(&[n], vec![-1.0, 0.0, 1.0])),
        ];
        let att = AttentionVars::bind(&mut tape, &store, "att.");
        let pooled = tweet_attention(&mut tape, &rows, 2, &att).unwrap();
        let w = tape.value(pooled.weights.unwrap()).clone();
        assert!((w.data[0] - 0.5).abs() < 1e-12 && (w.data[1] - 0.5).abs() < 1e-12);
        let v = tape.value(pooled.vector);
        assert!((v.data[0] - 0.0).abs() < 1e-12);
        assert!((v.data[1] - 1.0).abs() < 1e-12);
        assert!((v.data[2] - 2.0).abs() < 1e-12);
    }

    #[test]
    fn attention_matches_weighted_sum_oracle() {
        let n = 5;
        let mut store = ParamStore::new();
        let mut rng = RngState::new(7);
        register_attention_params(&mut store, "att.", n, 0.5, &mut rng);
        let mut tape = Tape::eval();
        let rows: Vec<Var> = (0..4)
            .map(|_| {
                let data: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();
                tape.constant(DenseArray::from_vec(&[n], data))
            })
            .collect();
        let att = AttentionVars::bind(&mut tape, &store, "att.");
        let pooled = tweet_attention(&mut tape, &rows, 4, &att).unwrap();
        let weights = tape.value(pooled.weights.unwrap()).clone();
        assert!((weights.data.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        let mut oracle = vec![0.0; n];
        for (t, &row) in rows.iter().enumerate() {
            for (j, o) in oracle.iter_mut().enumerate() {
                *o += weights.data[t] * tape.value(row).data[j];
            }
        }
        for (got, want) in tape.value(pooled.vector).data.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn cnn_constant_input_and_single_window() {
        let d = 2;
        let n = 3;
        let mut store = ParamStore::new();
        let mut rng = RngState::new(8);
        register_conv_params(&mut store, "conv.", d, n, 0.3, &mut rng);
        store.get_mut("conv.b").value = DenseArray::zeros(&[n]);

        // single nonzero window: max pool must select it when positive
        let mut tape = Tape::eval();
        let x = tape.constant(DenseArray::from_vec(
            &[5, d],
            vec![0.0, 0.0, 0.0, 0.0, 1.0, 2.0, 0.0, 0.0, 0.0, 0.0],
        ));
        let conv = ConvVars::bind(&mut tape, &store, "conv.");
        let pooled = cnn_encode(&mut tape, x, &conv).unwrap();
        // oracle: best response across the three taps that can see the window
        let w = store.value("conv.W");
        for j in 0..n {
            let mut best: f64 = 0.0;
            for tap in 0..3 {
                let resp = 1.0 * w.at(tap * d, j) + 2.0 * w.at(tap * d + 1, j);
                best = best.max(resp);
            }
            let got = tape.value(pooled).data[j];
            assert!((got - best.max(0.0)).abs() < 1e-12, "filter {j}");
        }
    }

    #[test]
    fn cnn_matches_sliding_window_oracle() {
        let d = 3;
        let n = 4;
        let l = 6;
        let mut store = ParamStore::new();
        let mut rng = RngState::new(9);
        register_conv_params(&mut store, "conv.", d, n, 0.4, &mut rng);
        let x_data: Vec<f64> = (0..l * d).map(|_| rng.next_gaussian()).collect();

        let mut tape = Tape::eval();
        let x = tape.constant(DenseArray::from_vec(&[l, d], x_data.clone()));
        let conv = ConvVars::bind(&mut tape, &store, "conv.");
        let pooled = cnn_encode(&mut tape, x, &conv).unwrap();

        let w = store.value("conv.W");
        let b = store.value("conv.b");
        for j in 0..n {
            let mut best = f64::NEG_INFINITY;
            for t in 0..l {
                let mut acc = b.data[j];
                for tap in 0..3i64 {
                    let src = t as i64 + tap - 1;
                    if src < 0 || src >= l as i64 {
                        continue;
                    }
                    for i in 0..d {
                        acc += x_data[src as usize * d + i] * w.at(tap as usize * d + i, j);
                    }
                }
                best = best.max(acc.max(0.0));
            }
            assert!((tape.value(pooled).data[j] - best).abs() < 1e-12);
        }
    }

    #[test]
    fn gru_gradients_pass_grad_check() {
        let d = 3;
        let n = 4;
        let mut store = random_gru_store(d, n, 10);
        let mut rng = RngState::new(11);
        let x_data: Vec<f64> = (0..2 * d).map(|_| rng.next_gaussian()).collect();

        let build = |s: &ParamStore| -> crate::error::Result<(Tape, Var)> {
            let mut tape = Tape::train();
            let x = tape.constant(DenseArray::from_vec(&[2, d], x_data.clone()));
            let gru = GruVars::bind(&mut tape, s, "gru.");
            let states = gru_encode(&mut tape, x, 2, &gru)?;
            let h = tape.stack_rows(&states);
            let loss = tape.sum_all(h);
            Ok((tape, loss))
        };
        let (mut tape, loss) = build(&store).unwrap();
        tape.backward(loss, 1.0, &mut store).unwrap();
        let err = grad_check(
            &mut store,
            |s| build(s).map(|(t, l)| t.value(l).item()),
            1e-5,
            500,
            &mut rng,
        )
        .unwrap();
        assert!(err < 1e-6, "gru gradient relative error {err}");
    }

    #[test]
    fn attention_gradients_pass_grad_check() {
        let n = 4;
        let mut store = ParamStore::new();
        let mut rng = RngState::new(12);
        register_attention_params(&mut store, "att.", n, 0.4, &mut rng);
        let h_data: Vec<f64> = (0..3 * n).map(|_| rng.next_gaussian()).collect();
        let probe: Vec<f64> = (0..n).map(|_| rng.next_gaussian()).collect();

        let build = |s: &ParamStore| -> crate::error::Result<f64> {
            let mut tape = Tape::train();
            let rows: Vec<Var> = (0..3)
                .map(|t| tape.constant(DenseArray::from_vec(&[n], h_data[t * n..(t + 1) * n].to_vec())))
                .collect();
            let att = AttentionVars::bind(&mut tape, s, "att.");
            let pooled = tweet_attention(&mut tape, &rows, 3, &att)?;
            let pv = tape.constant(DenseArray::from_vec(&[n], probe.clone()));
            let loss = tape.dot(pooled.vector, pv)?;
            Ok(tape.value(loss).item())
        };
        {
            let mut tape = Tape::train();
            let rows: Vec<Var> = (0..3)
                .map(|t| tape.constant(DenseArray::from_vec(&[n], h_data[t * n..(t + 1) * n].to_vec())))
                .collect();
            let att = AttentionVars::bind(&mut tape, &store, "att.");
            let pooled = tweet_attention(&mut tape, &rows, 3, &att).unwrap();
            let pv = tape.constant(DenseArray::from_vec(&[n], probe.clone()));
            let loss = tape.dot(pooled.vector, pv).unwrap();
            tape.backward(loss, 1.0, &mut store).unwrap();
        }
        let err = grad_check(&mut store, build, 1e-5, 500, &mut rng).unwrap();
        assert!(err < 1e-7, "attention gradient relative error {err}");
    }

    #[test]
    fn conv_gradients_pass_grad_check() {
        let d = 2;
        let n = 3;
        let mut store = ParamStore::new();
        let mut rng = RngState::new(13);
        register_conv_params(&mut store, "conv.", d, n, 0.4, &mut rng);
        let x_data: Vec<f64> = (0..4 * d).map(|_| rng.next_gaussian()).collect();

        let build = |s: &ParamStore| -> crate::error::Result<f64> {
            let mut tape = Tape::train();
            let x = tape.constant(DenseArray::from_vec(&[4, d], x_data.clone()));
            let conv = ConvVars::bind(&mut tape, s, "conv.");
            let pooled = cnn_encode(&mut tape, x, &conv)?;
            let loss = tape.sum_all(pooled);
            Ok(tape.value(loss).item())
        };
        {
            let mut tape = Tape::train();
            let x = tape.constant(DenseArray::from_vec(&[4, d], x_data.clone()));
            let conv = ConvVars::bind(&mut tape, &store, "conv.");
            let pooled = cnn_encode(&mut tape, x, &conv).unwrap();
            let loss = tape.sum_all(pooled);
            tape.backward(loss, 1.0, &mut store).unwrap();
        }
        let err = grad_check(&mut store, build, 1e-5, 500, &mut rng).unwrap();
        assert!(err < 1e-6, "conv gradient relative error {err}");
    }

    #[test]
    fn embedding_pad_row_is_zero_and_lookup_returns_rows() {
        let mut rng = RngState::new(14);
        let table = EmbeddingTable::gaussian(10, 4, 0.1, &mut rng);
        assert!(table.matrix.row(0).iter().all(|&x| x == 0.0));
        let rows = table.embed_rows(&[3, 0, 7]).unwrap();
        assert_eq!(rows.row(0), table.matrix.row(3));
        assert!(rows.row(1).iter().all(|&x| x == 0.0));
        assert_eq!(rows.row(2), table.matrix.row(7));
    }

    #[test]
    fn pretrained_loader_matches_file_rows() {
        use std::io::Write;
        let docs: Vec<Vec<String>> = ["alpha", "beta"]
            .iter()
            .flat_map(|t| (0..9).map(move |_| vec![t.to_string()]))
            .collect();
        let refs: Vec<&[String]> = docs.iter().map(|d| d.as_slice()).collect();
        let vocab = Vocabulary::build(refs, 5).unwrap();

        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("vectors.txt");
        let mut f = File::create(&path).unwrap();
        writeln!(f, "alpha 0.25 -0.5 1.0").unwrap();
        writeln!(f, "missingtoken 9.0 9.0 9.0").unwrap();
        drop(f);

        let mut rng = RngState::new(15);
        let table = EmbeddingTable::from_pretrained(&path, &vocab, 0.1, &mut rng).unwrap();
        let alpha_id = vocab.lookup("alpha") as usize;
        assert_eq!(table.matrix.row(alpha_id), &[0.25, -0.5, 1.0]);
        // beta absent from the file keeps a nonzero gaussian row
        let beta_id = vocab.lookup("beta") as usize;
        assert!(table.matrix.row(beta_id).iter().any(|&x| x != 0.0));
        assert!(table.matrix.row(0).iter().all(|&x| x == 0.0));
    }
}
