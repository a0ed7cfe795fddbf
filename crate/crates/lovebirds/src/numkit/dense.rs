//! Row-major dense arrays and the scalar kernels behind every model op.
//!
//! All arithmetic is 64-bit. Kernels are plain functions so that the
//! training tape and the evaluation path share one implementation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Dense row-major array of `f64` with an explicit shape.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseArray {
    pub shape: Vec<usize>,
    pub data: Vec<f64>,
}

impl DenseArray {
    pub fn zeros(shape: &[usize]) -> Self {
        let len = shape.iter().product();
        DenseArray {
            shape: shape.to_vec(),
            data: vec![0.0; len],
        }
    }

    pub fn from_vec(shape: &[usize], data: Vec<f64>) -> Self {
        assert_eq!(
            shape.iter().product::<usize>(),
            data.len(),
            "shape {:?} does not match data length {}",
            shape,
            data.len()
        );
        DenseArray {
            shape: shape.to_vec(),
            data,
        }
    }

    pub fn scalar(x: f64) -> Self {
        DenseArray {
            shape: vec![1],
            data: vec![x],
        }
    }

    pub fn len(&self) -> usize {
        self.data.len()
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    /// Number of rows for a 2-D array (or 1 for a vector).
    pub fn rows(&self) -> usize {
        if self.shape.len() == 2 {
            self.shape[0]
        } else {
            1
        }
    }

    /// Number of columns for a 2-D array (or the length for a vector).
    pub fn cols(&self) -> usize {
        *self.shape.last().unwrap_or(&0)
    }

    pub fn at(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.cols() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let c = self.cols();
        &self.data[i * c..(i + 1) * c]
    }

    pub fn item(&self) -> f64 {
        debug_assert_eq!(self.len(), 1);
        self.data[0]
    }

    pub fn validate_finite(&self, context: &str) -> Result<()> {
        if self.data.iter().all(|x| x.is_finite()) {
            Ok(())
        } else {
            Err(Error::NonFinite {
                context: context.to_string(),
            })
        }
    }
}

fn dim_error(op: &'static str, left: &DenseArray, right: &DenseArray) -> Error {
    Error::DimensionMismatch {
        op,
        left: left.shape.clone(),
        right: right.shape.clone(),
    }
}

/// x (m-vector) times W (m x n), returning an n-vector.
pub fn vecmat(x: &DenseArray, w: &DenseArray) -> Result<DenseArray> {
    let m = x.len();
    if w.shape.len() != 2 || w.shape[0] != m {
        return Err(dim_error("vecmat", x, w));
    }
    let n = w.shape[1];
    let mut out = vec![0.0; n];
    for (xi, wrow) in x.data.iter().zip(w.data.chunks_exact(n)) {
        if *xi == 0.0 {
            continue;
        }
        for (o, wij) in out.iter_mut().zip(wrow) {
            *o += xi * wij;
        }
    }
    Ok(DenseArray::from_vec(&[n], out))
}

/// A (m x n) times x (n-vector), returning an m-vector.
pub fn matvec(a: &DenseArray, x: &DenseArray) -> Result<DenseArray> {
    if a.shape.len() != 2 || a.shape[1] != x.len() {
        return Err(dim_error("matvec", a, x));
    }
    let n = a.shape[1];
    let out: Vec<f64> = a
        .data
        .chunks_exact(n)
        .map(|row| dot_slices(row, &x.data))
        .collect();
    Ok(DenseArray::from_vec(&[a.shape[0]], out))
}

/// A (m x k) times B (k x n).
pub fn matmul(a: &DenseArray, b: &DenseArray) -> Result<DenseArray> {
    if a.shape.len() != 2 || b.shape.len() != 2 || a.shape[1] != b.shape[0] {
        return Err(dim_error("matmul", a, b));
    }
    let (m, k, n) = (a.shape[0], a.shape[1], b.shape[1]);
    let mut out = vec![0.0; m * n];
    for i in 0..m {
        let arow = a.row(i);
        let orow = &mut out[i * n..(i + 1) * n];
        for (aik, brow) in arow.iter().zip(b.data.chunks_exact(n)) {
            if *aik == 0.0 {
                continue;
            }
            for (o, bkj) in orow.iter_mut().zip(brow) {
                *o += aik * bkj;
            }
        }
        let _ = k;
    }
    Ok(DenseArray::from_vec(&[m, n], out))
}

pub fn dot_slices(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn add(a: &DenseArray, b: &DenseArray) -> Result<DenseArray> {
    if a.shape != b.shape {
        return Err(dim_error("add", a, b));
    }
    let data = a.data.iter().zip(&b.data).map(|(x, y)| x + y).collect();
    Ok(DenseArray::from_vec(&a.shape, data))
}

pub fn sub(a: &DenseArray, b: &DenseArray) -> Result<DenseArray> {
    if a.shape != b.shape {
        return Err(dim_error("sub", a, b));
    }
    let data = a.data.iter().zip(&b.data).map(|(x, y)| x - y).collect();
    Ok(DenseArray::from_vec(&a.shape, data))
}

pub fn mul(a: &DenseArray, b: &DenseArray) -> Result<DenseArray> {
    if a.shape != b.shape {
        return Err(dim_error("mul", a, b));
    }
    let data = a.data.iter().zip(&b.data).map(|(x, y)| x * y).collect();
    Ok(DenseArray::from_vec(&a.shape, data))
}

pub fn scale(a: &DenseArray, c: f64) -> DenseArray {
    DenseArray::from_vec(&a.shape, a.data.iter().map(|x| x * c).collect())
}

/// Adds an n-vector bias to every row of an m x n array.
pub fn add_bias_rows(a: &DenseArray, b: &DenseArray) -> Result<DenseArray> {
    if a.shape.len() != 2 || a.shape[1] != b.len() {
        return Err(dim_error("add_bias_rows", a, b));
    }
    let n = b.len();
    let mut data = a.data.clone();
    for row in data.chunks_exact_mut(n) {
        for (x, bj) in row.iter_mut().zip(&b.data) {
            *x += bj;
        }
    }
    Ok(DenseArray::from_vec(&a.shape, data))
}

pub fn sigmoid(a: &DenseArray) -> DenseArray {
    DenseArray::from_vec(
        &a.shape,
        a.data.iter().map(|x| 1.0 / (1.0 + (-x).exp())).collect(),
    )
}

pub fn tanh(a: &DenseArray) -> DenseArray {
    DenseArray::from_vec(&a.shape, a.data.iter().map(|x| x.tanh()).collect())
}

pub fn relu(a: &DenseArray) -> DenseArray {
    DenseArray::from_vec(&a.shape, a.data.iter().map(|x| x.max(0.0)).collect())
}

/// Numerically stable softmax over the unmasked positions of a vector.
///
/// Masked positions come out exactly zero. Errors if no position is valid.
pub fn masked_softmax(v: &DenseArray, mask: &[bool]) -> Result<DenseArray> {
    assert_eq!(v.len(), mask.len(), "mask length must match input");
    let mut max = f64::NEG_INFINITY;
    for (x, &m) in v.data.iter().zip(mask) {
        if m && *x > max {
            max = *x;
        }
    }
    if max == f64::NEG_INFINITY {
        return Err(Error::EmptySupport);
    }
    let mut out = vec![0.0; v.len()];
    let mut denom = 0.0;
    for ((o, x), &m) in out.iter_mut().zip(&v.data).zip(mask) {
        if m {
            *o = (x - max).exp();
            denom += *o;
        }
    }
    for o in out.iter_mut() {
        *o /= denom;
    }
    Ok(DenseArray::from_vec(&v.shape, out))
}

/// Weighted sum of the rows of H (m x n) by the m-vector a, i.e. `Σ_t a[t] · H[t]`.
pub fn weighted_sum_rows(h: &DenseArray, a: &DenseArray) -> Result<DenseArray> {
    if h.shape.len() != 2 || h.shape[0] != a.len() {
        return Err(dim_error("weighted_sum_rows", h, a));
    }
    let n = h.shape[1];
    let mut out = vec![0.0; n];
    for (at, hrow) in a.data.iter().zip(h.data.chunks_exact(n)) {
        if *at == 0.0 {
            continue;
        }
        for (o, ht) in out.iter_mut().zip(hrow) {
            *o += at * ht;
        }
    }
    Ok(DenseArray::from_vec(&[n], out))
}

/// Grid G[i][j] = a[i] + b[j].
pub fn outer_sum(a: &DenseArray, b: &DenseArray) -> DenseArray {
    let (m, n) = (a.len(), b.len());
    let mut out = Vec::with_capacity(m * n);
    for ai in &a.data {
        for bj in &b.data {
            out.push(ai + bj);
        }
    }
    DenseArray::from_vec(&[m, n], out)
}

/// Per-row maximum of a grid over its valid columns, restricted to valid rows.
///
/// Returns the max vector (invalid rows hold 0.0 and must be masked downstream)
/// and the argmax column per row (first maximum wins).
pub fn masked_row_max(
    s: &DenseArray,
    valid_rows: &[bool],
    valid_cols: &[bool],
) -> Result<(DenseArray, Vec<usize>)> {
    let (m, n) = (s.shape[0], s.shape[1]);
    if !valid_cols.iter().any(|&c| c) || !valid_rows.iter().any(|&r| r) {
        return Err(Error::EmptySupport);
    }
    let mut out = vec![0.0; m];
    let mut arg = vec![0usize; m];
    for i in 0..m {
        if !valid_rows[i] {
            continue;
        }
        let row = s.row(i);
        let mut best = f64::NEG_INFINITY;
        let mut bj = 0;
        for (j, (x, &vc)) in row.iter().zip(valid_cols).enumerate() {
            if vc && *x > best {
                best = *x;
                bj = j;
            }
        }
        out[i] = best;
        arg[i] = bj;
    }
    let _ = n;
    Ok((DenseArray::from_vec(&[m], out), arg))
}

/// Per-column maximum of a grid over its valid rows; see [`masked_row_max`].
pub fn masked_col_max(
    s: &DenseArray,
    valid_rows: &[bool],
    valid_cols: &[bool],
) -> Result<(DenseArray, Vec<usize>)> {
    let (m, n) = (s.shape[0], s.shape[1]);
    if !valid_cols.iter().any(|&c| c) || !valid_rows.iter().any(|&r| r) {
        return Err(Error::EmptySupport);
    }
    let mut out = vec![0.0; n];
    let mut arg = vec![0usize; n];
    for j in 0..n {
        if !valid_cols[j] {
            continue;
        }
        let mut best = f64::NEG_INFINITY;
        let mut bi = 0;
        for i in 0..m {
            if valid_rows[i] {
                let x = s.at(i, j);
                if x > best {
                    best = x;
                    bi = i;
                }
            }
        }
        out[j] = best;
        arg[j] = bi;
    }
    Ok((DenseArray::from_vec(&[n], out), arg))
}

/// Column-wise max over the rows of H (max-over-time pooling).
/// Returns the pooled n-vector and the argmax row per column.
pub fn max_over_rows(h: &DenseArray) -> (DenseArray, Vec<usize>) {
    let (m, n) = (h.shape[0], h.shape[1]);
    let mut out = vec![f64::NEG_INFINITY; n];
    let mut arg = vec![0usize; n];
    for i in 0..m {
        for (j, x) in h.row(i).iter().enumerate() {
            if *x > out[j] {
                out[j] = *x;
                arg[j] = i;
            }
        }
    }
    let _ = m;
    (DenseArray::from_vec(&[n], out), arg)
}

/// 1-D convolution of width 3 with zero padding at both ends ("same" size).
///
/// `x` is L x d, `w` is 3d x n (the three taps stacked), `b` is n.
/// Output row t sees rows t-1, t, t+1 of the input.
pub fn conv1d_w3(x: &DenseArray, w: &DenseArray, b: &DenseArray) -> Result<DenseArray> {
    let (l, d) = (x.shape[0], x.shape[1]);
    if w.shape.len() != 2 || w.shape[0] != 3 * d || w.shape[1] != b.len() {
        return Err(dim_error("conv1d_w3", x, w));
    }
    let n = w.shape[1];
    let mut out = vec![0.0; l * n];
    for t in 0..l {
        let orow = &mut out[t * n..(t + 1) * n];
        orow.copy_from_slice(&b.data);
        for tap in 0..3usize {
            let src = t as isize + tap as isize - 1;
            if src < 0 || src >= l as isize {
                continue;
            }
            let xrow = x.row(src as usize);
            let wtap = &w.data[tap * d * n..(tap + 1) * d * n];
            for (xi, wrow) in xrow.iter().zip(wtap.chunks_exact(n)) {
                if *xi == 0.0 {
                    continue;
                }
                for (o, wij) in orow.iter_mut().zip(wrow) {
                    *o += xi * wij;
                }
            }
        }
    }
    Ok(DenseArray::from_vec(&[l, n], out))
}

pub fn l2_norm(v: &[f64]) -> f64 {
    dot_slices(v, v).sqrt()
}

/// Cosine similarity clamped to [-1, 1]. A zero-norm side yields (0.0, true):
/// the score is neutral and flagged degenerate.
pub fn cosine(u: &DenseArray, v: &DenseArray) -> Result<(f64, bool)> {
    if u.shape != v.shape {
        return Err(dim_error("cosine", u, v));
    }
    let nu = l2_norm(&u.data);
    let nv = l2_norm(&v.data);
    if nu == 0.0 || nv == 0.0 {
        return Ok((0.0, true));
    }
    let c = dot_slices(&u.data, &v.data) / (nu * nv);
    Ok((c.clamp(-1.0, 1.0), false))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vecmat_basis_vector() {
        let x = DenseArray::from_vec(&[2], vec![1.0, 0.0]);
        let w = DenseArray::from_vec(&[2, 2], vec![2.0, 0.0, 0.0, 3.0]);
        let y = vecmat(&x, &w).unwrap();
        assert_eq!(y.data, vec![2.0, 0.0]);
    }

    #[test]
    fn vecmat_shape_mismatch_names_shapes() {
        let x = DenseArray::from_vec(&[3], vec![1.0; 3]);
        let w = DenseArray::from_vec(&[2, 2], vec![0.0; 4]);
        let err = vecmat(&x, &w).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("[3]") && msg.contains("[2, 2]"), "{msg}");
    }

    #[test]
    fn softmax_uniform_on_equal_logits() {
        let v = DenseArray::from_vec(&[3], vec![0.0, 0.0, 0.0]);
        let s = masked_softmax(&v, &[true, true, true]).unwrap();
        for x in &s.data {
            assert!((x - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn softmax_respects_mask() {
        let v = DenseArray::from_vec(&[3], vec![10.0, 10.0, -1e9]);
        let s = masked_softmax(&v, &[true, true, false]).unwrap();
        assert!((s.data[0] - 0.5).abs() < 1e-15);
        assert!((s.data[1] - 0.5).abs() < 1e-15);
        assert_eq!(s.data[2], 0.0);
    }

    #[test]
    fn softmax_matches_direct_exponentials() {
        // Oracle: direct exp/sum without max subtraction, safe at this scale.
        let v = DenseArray::from_vec(&[3], vec![1.0, 2.0, 3.0]);
        let s = masked_softmax(&v, &[true, true, true]).unwrap();
        let denom: f64 = v.data.iter().map(|x| x.exp()).sum();
        for (got, x) in s.data.iter().zip(&v.data) {
            assert!((got - x.exp() / denom).abs() < 1e-12);
        }
    }

    #[test]
    fn softmax_all_masked_is_error() {
        let v = DenseArray::from_vec(&[2], vec![1.0, 2.0]);
        assert!(matches!(
            masked_softmax(&v, &[false, false]),
            Err(Error::EmptySupport)
        ));
    }

    #[test]
    fn cosine_degenerate_zero_norm() {
        let u = DenseArray::zeros(&[3]);
        let v = DenseArray::from_vec(&[3], vec![1.0, 2.0, 3.0]);
        assert_eq!(cosine(&u, &v).unwrap(), (0.0, true));
    }

    #[test]
    fn conv_same_padding_single_row() {
        // Sequence shorter than the filter width: ends are zero-padded.
        let x = DenseArray::from_vec(&[1, 2], vec![1.0, 2.0]);
        let w = DenseArray::from_vec(&[6, 1], vec![0.1, 0.2, 0.3, 0.4, 0.5, 0.6]);
        let b = DenseArray::from_vec(&[1], vec![0.05]);
        let y = conv1d_w3(&x, &w, &b).unwrap();
        // Only the center tap sees data: 1*0.3 + 2*0.4 + 0.05.
        assert!((y.data[0] - 1.15).abs() < 1e-12);
    }
}
