//! Reverse-mode gradient tape for the fixed op vocabulary of the models in
//! this crate. Ops execute eagerly through the kernels in [`dense`] and
//! record enough state to run one backward sweep in reverse creation order.
//!
//! This is deliberately not a general autodiff system: the op set is exactly
//! what the scoring graphs need, which keeps every backward rule small and
//! auditable.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::numkit::dense::{self, DenseArray};
use crate::numkit::params::ParamStore;
use crate::numkit::rng::RngState;

/// Handle to a node on the tape.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Var(usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

enum Op {
    Leaf,
    Param { name: String },
    Embed { table: Var, ids: Vec<u32> },
    VecMat { x: Var, w: Var },
    MatVec { a: Var, x: Var },
    Add { a: Var, b: Var },
    AddBiasRows { a: Var, b: Var },
    Sub { a: Var, b: Var },
    Mul { a: Var, b: Var },
    Scale { a: Var, c: f64 },
    AddScalar { a: Var, s: Var },
    Sigmoid { a: Var },
    Tanh { a: Var },
    Relu { a: Var },
    SoftmaxMasked { a: Var, mask: Vec<bool> },
    Dropout { a: Var, mask: Vec<f64> },
    Row { a: Var, i: usize },
    Slice { a: Var, start: usize },
    StackRows { rows: Vec<Var> },
    WeightedSumRows { h: Var, a: Var },
    OuterSum { a: Var, b: Var },
    MaskedRowMax { s: Var, argmax: Vec<usize>, valid_rows: Vec<bool> },
    MaskedColMax { s: Var, argmax: Vec<usize>, valid_cols: Vec<bool> },
    MaxOverRows { h: Var, argmax: Vec<usize> },
    Conv1dW3 { x: Var, w: Var, b: Var },
    Dot { a: Var, b: Var },
    Cosine { a: Var, b: Var, degenerate: bool },
    SumAll { a: Var },
}

struct Node {
    value: DenseArray,
    op: Op,
}

pub struct Tape {
    nodes: Vec<Node>,
    params: HashMap<String, Var>,
    mode: Mode,
}

impl Tape {
    pub fn new(mode: Mode) -> Self {
        Tape {
            nodes: Vec::new(),
            params: HashMap::new(),
            mode,
        }
    }

    pub fn train() -> Self {
        Self::new(Mode::Train)
    }

    pub fn eval() -> Self {
        Self::new(Mode::Eval)
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn value(&self, v: Var) -> &DenseArray {
        &self.nodes[v.0].value
    }

    fn push(&mut self, value: DenseArray, op: Op) -> Var {
        self.nodes.push(Node { value, op });
        Var(self.nodes.len() - 1)
    }

    pub fn constant(&mut self, value: DenseArray) -> Var {
        self.push(value, Op::Leaf)
    }

    pub fn scalar(&mut self, x: f64) -> Var {
        self.constant(DenseArray::scalar(x))
    }

    /// Leaf bound to a named parameter; repeated calls return the same node.
    pub fn param(&mut self, name: &str, store: &ParamStore) -> Var {
        if let Some(v) = self.params.get(name) {
            return *v;
        }
        let value = store.value(name).clone();
        let v = self.push(
            value,
            Op::Param {
                name: name.to_string(),
            },
        );
        self.params.insert(name.to_string(), v);
        v
    }

    /// Embedding row gather. Rows for the PAD id (0) receive no gradient,
    /// which keeps the PAD row frozen at zero.
    pub fn embed(&mut self, table: Var, ids: &[u32]) -> Result<Var> {
        let t = self.value(table);
        let (vocab, d) = (t.shape[0], t.shape[1]);
        let mut data = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            let id = id as usize;
            if id >= vocab {
                return Err(Error::TokenOutOfRange {
                    id,
                    vocab_size: vocab,
                });
            }
            data.extend_from_slice(t.row(id));
        }
        let value = DenseArray::from_vec(&[ids.len(), d], data);
        Ok(self.push(
            value,
            Op::Embed {
                table,
                ids: ids.to_vec(),
            },
        ))
    }

    pub fn vecmat(&mut self, x: Var, w: Var) -> Result<Var> {
        let value = dense::vecmat(self.value(x), self.value(w))?;
        Ok(self.push(value, Op::VecMat { x, w }))
    }

    pub fn matvec(&mut self, a: Var, x: Var) -> Result<Var> {
        let value = dense::matvec(self.value(a), self.value(x))?;
        Ok(self.push(value, Op::MatVec { a, x }))
    }

    pub fn add(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = dense::add(self.value(a), self.value(b))?;
        Ok(self.push(value, Op::Add { a, b }))
    }

    pub fn add_bias_rows(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = dense::add_bias_rows(self.value(a), self.value(b))?;
        Ok(self.push(value, Op::AddBiasRows { a, b }))
    }

    pub fn sub(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = dense::sub(self.value(a), self.value(b))?;
        Ok(self.push(value, Op::Sub { a, b }))
    }

    pub fn mul(&mut self, a: Var, b: Var) -> Result<Var> {
        let value = dense::mul(self.value(a), self.value(b))?;
        Ok(self.push(value, Op::Mul { a, b }))
    }

    pub fn scale(&mut self, a: Var, c: f64) -> Var {
        let value = dense::scale(self.value(a), c);
        self.push(value, Op::Scale { a, c })
    }

    /// Broadcast-adds a scalar node to every element of `a`.
    pub fn add_scalar(&mut self, a: Var, s: Var) -> Var {
        let sv = self.value(s).item();
        let value = DenseArray::from_vec(
            &self.value(a).shape,
            self.value(a).data.iter().map(|x| x + sv).collect(),
        );
        self.push(value, Op::AddScalar { a, s })
    }

    pub fn sigmoid(&mut self, a: Var) -> Var {
        let value = dense::sigmoid(self.value(a));
        self.push(value, Op::Sigmoid { a })
    }

    pub fn tanh(&mut self, a: Var) -> Var {
        let value = dense::tanh(self.value(a));
        self.push(value, Op::Tanh { a })
    }

    pub fn relu(&mut self, a: Var) -> Var {
        let value = dense::relu(self.value(a));
        self.push(value, Op::Relu { a })
    }

    /// `x W + b` for a row vector x.
    pub fn affine(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let xw = self.vecmat(x, w)?;
        self.add(xw, b)
    }

    pub fn softmax_masked(&mut self, a: Var, mask: &[bool]) -> Result<Var> {
        let value = dense::masked_softmax(self.value(a), mask)?;
        Ok(self.push(
            value,
            Op::SoftmaxMasked {
                a,
                mask: mask.to_vec(),
            },
        ))
    }

    /// Inverted dropout: in train mode each element is zeroed with
    /// probability `rate` and survivors are scaled by 1/(1-rate), so eval is
    /// the identity. Consumes RNG only in train mode.
    pub fn dropout(&mut self, a: Var, rate: f64, rng: &mut RngState) -> Result<Var> {
        if !(0.0..1.0).contains(&rate) {
            return Err(Error::Parameter(format!(
                "dropout rate must be in [0, 1), got {rate}"
            )));
        }
        if self.mode == Mode::Eval || rate == 0.0 {
            return Ok(a);
        }
        let keep_scale = 1.0 / (1.0 - rate);
        let mask: Vec<f64> = (0..self.value(a).len())
            .map(|_| if rng.next_f64() >= rate { keep_scale } else { 0.0 })
            .collect();
        let value = DenseArray::from_vec(
            &self.value(a).shape,
            self.value(a)
                .data
                .iter()
                .zip(&mask)
                .map(|(x, m)| x * m)
                .collect(),
        );
        Ok(self.push(value, Op::Dropout { a, mask }))
    }

    pub fn row(&mut self, a: Var, i: usize) -> Var {
        let value = DenseArray::from_vec(&[self.value(a).cols()], self.value(a).row(i).to_vec());
        self.push(value, Op::Row { a, i })
    }

    pub fn slice(&mut self, a: Var, start: usize, len: usize) -> Var {
        let value = DenseArray::from_vec(&[len], self.value(a).data[start..start + len].to_vec());
        self.push(value, Op::Slice { a, start })
    }

    pub fn stack_rows(&mut self, rows: &[Var]) -> Var {
        assert!(!rows.is_empty());
        let n = self.value(rows[0]).len();
        let mut data = Vec::with_capacity(rows.len() * n);
        for &r in rows {
            data.extend_from_slice(&self.value(r).data);
        }
        let value = DenseArray::from_vec(&[rows.len(), n], data);
        self.push(
            value,
            Op::StackRows {
                rows: rows.to_vec(),
            },
        )
    }

    pub fn weighted_sum_rows(&mut self, h: Var, a: Var) -> Result<Var> {
        let value = dense::weighted_sum_rows(self.value(h), self.value(a))?;
        Ok(self.push(value, Op::WeightedSumRows { h, a }))
    }

    pub fn outer_sum(&mut self, a: Var, b: Var) -> Var {
        let value = dense::outer_sum(self.value(a), self.value(b));
        self.push(value, Op::OuterSum { a, b })
    }

    pub fn masked_row_max(&mut self, s: Var, valid_rows: &[bool], valid_cols: &[bool]) -> Result<Var> {
        let (value, argmax) = dense::masked_row_max(self.value(s), valid_rows, valid_cols)?;
        Ok(self.push(
            value,
            Op::MaskedRowMax {
                s,
                argmax,
                valid_rows: valid_rows.to_vec(),
            },
        ))
    }

    pub fn masked_col_max(&mut self, s: Var, valid_rows: &[bool], valid_cols: &[bool]) -> Result<Var> {
        let (value, argmax) = dense::masked_col_max(self.value(s), valid_rows, valid_cols)?;
        Ok(self.push(
            value,
            Op::MaskedColMax {
                s,
                argmax,
                valid_cols: valid_cols.to_vec(),
            },
        ))
    }

    pub fn max_over_rows(&mut self, h: Var) -> Var {
        let (value, argmax) = dense::max_over_rows(self.value(h));
        self.push(value, Op::MaxOverRows { h, argmax })
    }

    pub fn conv1d_w3(&mut self, x: Var, w: Var, b: Var) -> Result<Var> {
        let value = dense::conv1d_w3(self.value(x), self.value(w), self.value(b))?;
        Ok(self.push(value, Op::Conv1dW3 { x, w, b }))
    }

    pub fn dot(&mut self, a: Var, b: Var) -> Result<Var> {
        if self.value(a).shape != self.value(b).shape {
            return Err(Error::DimensionMismatch {
                op: "dot",
                left: self.value(a).shape.clone(),
                right: self.value(b).shape.clone(),
            });
        }
        let value = DenseArray::scalar(dense::dot_slices(
            &self.value(a).data,
            &self.value(b).data,
        ));
        Ok(self.push(value, Op::Dot { a, b }))
    }

    /// Cosine similarity of two vectors, clamped to [-1, 1]. A zero-norm side
    /// yields score 0 with zero gradient (degenerate pair).
    pub fn cosine(&mut self, a: Var, b: Var) -> Result<Var> {
        let (c, degenerate) = dense::cosine(self.value(a), self.value(b))?;
        Ok(self.push(DenseArray::scalar(c), Op::Cosine { a, b, degenerate }))
    }

    pub fn sum_all(&mut self, a: Var) -> Var {
        let value = DenseArray::scalar(self.value(a).data.iter().sum());
        self.push(value, Op::SumAll { a })
    }

    /// Pairwise hinge `max(0, margin - pos + neg)` on scalar nodes.
    pub fn hinge(&mut self, pos: Var, neg: Var, margin: f64) -> Result<Var> {
        let m = self.scalar(margin);
        let gap = self.sub(m, pos)?;
        let raw = self.add(gap, neg)?;
        Ok(self.relu(raw))
    }

    /// Reverse sweep from a scalar `loss`, seeding with `seed` (1.0 for a
    /// plain gradient, 1/batch for an averaged batch). Parameter gradients
    /// accumulate into `store`.
    pub fn backward(&mut self, loss: Var, seed: f64, store: &mut ParamStore) -> Result<()> {
        assert_eq!(self.mode, Mode::Train, "backward on an eval tape");
        if self.value(loss).len() != 1 {
            return Err(Error::Parameter("backward target must be scalar".into()));
        }
        let nodes = &self.nodes;
        let mut grads: Vec<Option<DenseArray>> = (0..nodes.len()).map(|_| None).collect();
        grads[loss.0] = Some(DenseArray::scalar(seed));

        for idx in (0..=loss.0).rev() {
            let Some(g) = grads[idx].take() else { continue };
            match &nodes[idx].op {
                Op::Leaf => {}
                Op::Param { name } => store.accumulate_grad(name, &g),
                Op::Embed { table, ids } => {
                    let d = nodes[idx].value.cols();
                    let slot = slot(&mut grads, nodes, *table);
                    for (t, &id) in ids.iter().enumerate() {
                        if id == 0 {
                            continue; // PAD row stays frozen
                        }
                        let dst = &mut slot.data[id as usize * d..(id as usize + 1) * d];
                        for (o, gi) in dst.iter_mut().zip(g.row(t)) {
                            *o += gi;
                        }
                    }
                }
                Op::VecMat { x, w } => {
                    let xv = &nodes[x.0].value;
                    let wv = &nodes[w.0].value;
                    let n = wv.shape[1];
                    {
                        let gx = slot(&mut grads, nodes, *x);
                        for (i, gxi) in gx.data.iter_mut().enumerate() {
                            *gxi += dense::dot_slices(wv.row(i), &g.data);
                        }
                    }
                    {
                        let gw = slot(&mut grads, nodes, *w);
                        for (i, xi) in xv.data.iter().enumerate() {
                            if *xi == 0.0 {
                                continue;
                            }
                            let row = &mut gw.data[i * n..(i + 1) * n];
                            for (o, gj) in row.iter_mut().zip(&g.data) {
                                *o += xi * gj;
                            }
                        }
                    }
                }
                Op::MatVec { a, x } => {
                    let av = &nodes[a.0].value;
                    let xv = &nodes[x.0].value;
                    let n = av.shape[1];
                    {
                        let ga = slot(&mut grads, nodes, *a);
                        for (i, gi) in g.data.iter().enumerate() {
                            if *gi == 0.0 {
                                continue;
                            }
                            let row = &mut ga.data[i * n..(i + 1) * n];
                            for (o, xj) in row.iter_mut().zip(&xv.data) {
                                *o += gi * xj;
                            }
                        }
                    }
                    {
                        let gx = slot(&mut grads, nodes, *x);
                        for (i, gi) in g.data.iter().enumerate() {
                            if *gi == 0.0 {
                                continue;
                            }
                            for (o, aij) in gx.data.iter_mut().zip(av.row(i)) {
                                *o += gi * aij;
                            }
                        }
                    }
                }
                Op::Add { a, b } => {
                    add_into(slot(&mut grads, nodes, *a), &g.data);
                    add_into(slot(&mut grads, nodes, *b), &g.data);
                }
                Op::AddBiasRows { a, b } => {
                    add_into(slot(&mut grads, nodes, *a), &g.data);
                    let n = nodes[b.0].value.len();
                    let gb = slot(&mut grads, nodes, *b);
                    for row in g.data.chunks_exact(n) {
                        for (o, gi) in gb.data.iter_mut().zip(row) {
                            *o += gi;
                        }
                    }
                }
                Op::Sub { a, b } => {
                    add_into(slot(&mut grads, nodes, *a), &g.data);
                    let gb = slot(&mut grads, nodes, *b);
                    for (o, gi) in gb.data.iter_mut().zip(&g.data) {
                        *o -= gi;
                    }
                }
                Op::Mul { a, b } => {
                    let bv = nodes[b.0].value.data.clone();
                    let av = nodes[a.0].value.data.clone();
                    {
                        let ga = slot(&mut grads, nodes, *a);
                        for ((o, gi), bi) in ga.data.iter_mut().zip(&g.data).zip(&bv) {
                            *o += gi * bi;
                        }
                    }
                    {
                        let gb = slot(&mut grads, nodes, *b);
                        for ((o, gi), ai) in gb.data.iter_mut().zip(&g.data).zip(&av) {
                            *o += gi * ai;
                        }
                    }
                }
                Op::Scale { a, c } => {
                    let ga = slot(&mut grads, nodes, *a);
                    for (o, gi) in ga.data.iter_mut().zip(&g.data) {
                        *o += gi * c;
                    }
                }
                Op::AddScalar { a, s } => {
                    add_into(slot(&mut grads, nodes, *a), &g.data);
                    let total: f64 = g.data.iter().sum();
                    slot(&mut grads, nodes, *s).data[0] += total;
                }
                Op::Sigmoid { a } => {
                    let y = &nodes[idx].value;
                    let ga = slot(&mut grads, nodes, *a);
                    for ((o, gi), yi) in ga.data.iter_mut().zip(&g.data).zip(&y.data) {
                        *o += gi * yi * (1.0 - yi);
                    }
                }
                Op::Tanh { a } => {
                    let y = &nodes[idx].value;
                    let ga = slot(&mut grads, nodes, *a);
                    for ((o, gi), yi) in ga.data.iter_mut().zip(&g.data).zip(&y.data) {
                        *o += gi * (1.0 - yi * yi);
                    }
                }
                Op::Relu { a } => {
                    let x = &nodes[a.0].value;
                    let ga = slot(&mut grads, nodes, *a);
                    for ((o, gi), xi) in ga.data.iter_mut().zip(&g.data).zip(&x.data) {
                        if *xi > 0.0 {
                            *o += gi;
                        }
                    }
                }
                Op::SoftmaxMasked { a, mask } => {
                    let y = &nodes[idx].value;
                    let inner = dense::dot_slices(&g.data, &y.data);
                    let ga = slot(&mut grads, nodes, *a);
                    for i in 0..y.len() {
                        if mask[i] {
                            ga.data[i] += y.data[i] * (g.data[i] - inner);
                        }
                    }
                }
                Op::Dropout { a, mask } => {
                    let ga = slot(&mut grads, nodes, *a);
                    for ((o, gi), mi) in ga.data.iter_mut().zip(&g.data).zip(mask) {
                        *o += gi * mi;
                    }
                }
                Op::Row { a, i } => {
                    let c = nodes[a.0].value.cols();
                    let ga = slot(&mut grads, nodes, *a);
                    let dst = &mut ga.data[i * c..(i + 1) * c];
                    for (o, gi) in dst.iter_mut().zip(&g.data) {
                        *o += gi;
                    }
                }
                Op::Slice { a, start } => {
                    let ga = slot(&mut grads, nodes, *a);
                    for (o, gi) in ga.data[*start..*start + g.len()].iter_mut().zip(&g.data) {
                        *o += gi;
                    }
                }
                Op::StackRows { rows } => {
                    let n = nodes[idx].value.cols();
                    for (k, r) in rows.iter().enumerate() {
                        let gr = slot(&mut grads, nodes, *r);
                        for (o, gi) in gr.data.iter_mut().zip(&g.data[k * n..(k + 1) * n]) {
                            *o += gi;
                        }
                    }
                }
                Op::WeightedSumRows { h, a } => {
                    let hv = &nodes[h.0].value;
                    let av = &nodes[a.0].value;
                    let n = hv.shape[1];
                    {
                        let gh = slot(&mut grads, nodes, *h);
                        for (t, at) in av.data.iter().enumerate() {
                            if *at == 0.0 {
                                continue;
                            }
                            let row = &mut gh.data[t * n..(t + 1) * n];
                            for (o, gj) in row.iter_mut().zip(&g.data) {
                                *o += at * gj;
                            }
                        }
                    }
                    {
                        let ga = slot(&mut grads, nodes, *a);
                        for (t, o) in ga.data.iter_mut().enumerate() {
                            *o += dense::dot_slices(hv.row(t), &g.data);
                        }
                    }
                }
                Op::OuterSum { a, b } => {
                    let n = nodes[b.0].value.len();
                    {
                        let ga = slot(&mut grads, nodes, *a);
                        for (i, o) in ga.data.iter_mut().enumerate() {
                            *o += g.data[i * n..(i + 1) * n].iter().sum::<f64>();
                        }
                    }
                    {
                        let gb = slot(&mut grads, nodes, *b);
                        for row in g.data.chunks_exact(n) {
                            for (o, gi) in gb.data.iter_mut().zip(row) {
                                *o += gi;
                            }
                        }
                    }
                }
                Op::MaskedRowMax { s, argmax, valid_rows } => {
                    let n = nodes[s.0].value.shape[1];
                    let gs = slot(&mut grads, nodes, *s);
                    for (i, gi) in g.data.iter().enumerate() {
                        if valid_rows[i] {
                            gs.data[i * n + argmax[i]] += gi;
                        }
                    }
                }
                Op::MaskedColMax { s, argmax, valid_cols } => {
                    let n = nodes[s.0].value.shape[1];
                    let gs = slot(&mut grads, nodes, *s);
                    for (j, gj) in g.data.iter().enumerate() {
                        if valid_cols[j] {
                            gs.data[argmax[j] * n + j] += gj;
                        }
                    }
                }
                Op::MaxOverRows { h, argmax } => {
                    let n = nodes[h.0].value.shape[1];
                    let gh = slot(&mut grads, nodes, *h);
                    for (j, gj) in g.data.iter().enumerate() {
                        gh.data[argmax[j] * n + j] += gj;
                    }
                }
                Op::Conv1dW3 { x, w, b } => {
                    let xv = &nodes[x.0].value;
                    let wv = &nodes[w.0].value;
                    let (l, d) = (xv.shape[0], xv.shape[1]);
                    let n = wv.shape[1];
                    {
                        let gx = slot(&mut grads, nodes, *x);
                        for t in 0..l {
                            let grow = &g.data[t * n..(t + 1) * n];
                            for tap in 0..3usize {
                                let src = t as isize + tap as isize - 1;
                                if src < 0 || src >= l as isize {
                                    continue;
                                }
                                let dst =
                                    &mut gx.data[src as usize * d..(src as usize + 1) * d];
                                for (i, o) in dst.iter_mut().enumerate() {
                                    *o += dense::dot_slices(
                                        &wv.data[(tap * d + i) * n..(tap * d + i + 1) * n],
                                        grow,
                                    );
                                }
                            }
                        }
                    }
                    {
                        let gw = slot(&mut grads, nodes, *w);
                        for t in 0..l {
                            let grow = &g.data[t * n..(t + 1) * n];
                            for tap in 0..3usize {
                                let src = t as isize + tap as isize - 1;
                                if src < 0 || src >= l as isize {
                                    continue;
                                }
                                let xrow = xv.row(src as usize);
                                for (i, xi) in xrow.iter().enumerate() {
                                    if *xi == 0.0 {
                                        continue;
                                    }
                                    let wrow =
                                        &mut gw.data[(tap * d + i) * n..(tap * d + i + 1) * n];
                                    for (o, gj) in wrow.iter_mut().zip(grow) {
                                        *o += xi * gj;
                                    }
                                }
                            }
                        }
                    }
                    {
                        let gb = slot(&mut grads, nodes, *b);
                        for row in g.data.chunks_exact(n) {
                            for (o, gi) in gb.data.iter_mut().zip(row) {
                                *o += gi;
                            }
                        }
                    }
                }
                Op::Dot { a, b } => {
                    let gs = g.item();
                    let bv = nodes[b.0].value.data.clone();
                    let av = nodes[a.0].value.data.clone();
                    {
                        let ga = slot(&mut grads, nodes, *a);
                        for (o, bi) in ga.data.iter_mut().zip(&bv) {
                            *o += gs * bi;
                        }
                    }
                    {
                        let gb = slot(&mut grads, nodes, *b);
                        for (o, ai) in gb.data.iter_mut().zip(&av) {
                            *o += gs * ai;
                        }
                    }
                }
                Op::Cosine { a, b, degenerate } => {
                    if *degenerate {
                        continue;
                    }
                    let gs = g.item();
                    let av = &nodes[a.0].value;
                    let bv = &nodes[b.0].value;
                    let na = dense::l2_norm(&av.data);
                    let nb = dense::l2_norm(&bv.data);
                    let c = nodes[idx].value.item();
                    let av_data = av.data.clone();
                    let bv_data = bv.data.clone();
                    {
                        let ga = slot(&mut grads, nodes, *a);
                        for ((o, bi), ai) in ga.data.iter_mut().zip(&bv_data).zip(&av_data) {
                            *o += gs * (bi / (na * nb) - c * ai / (na * na));
                        }
                    }
                    {
                        let gb = slot(&mut grads, nodes, *b);
                        for ((o, ai), bi) in gb.data.iter_mut().zip(&av_data).zip(&bv_data) {
                            *o += gs * (ai / (na * nb) - c * bi / (nb * nb));
                        }
                    }
                }
                Op::SumAll { a } => {
                    let gs = g.item();
                    let ga = slot(&mut grads, nodes, *a);
                    for o in ga.data.iter_mut() {
                        *o += gs;
                    }
                }
            }
        }
        Ok(())
    }
}

fn slot<'a>(
    grads: &'a mut [Option<DenseArray>],
    nodes: &[Node],
    v: Var,
) -> &'a mut DenseArray {
    let entry = &mut grads[v.0];
    if entry.is_none() {
        *entry = Some(DenseArray::zeros(&nodes[v.0].value.shape));
    }
    entry.as_mut().unwrap()
}

fn add_into(dst: &mut DenseArray, src: &[f64]) {
    for (o, s) in dst.data.iter_mut().zip(src) {
        *o += s;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn affine_basis_and_zero_input() {
        let mut store = ParamStore::new();
        store.insert_value("w", DenseArray::from_vec(&[2, 2], vec![2.0, 0.0, 0.0, 3.0]));
        store.insert_value("b", DenseArray::from_vec(&[2], vec![0.0, 0.0]));
        let mut tape = Tape::eval();
        let x = tape.constant(DenseArray::from_vec(&[2], vec![1.0, 0.0]));
        let w = tape.param("w", &store);
        let b = tape.param("b", &store);
        let y = tape.affine(x, w, b).unwrap();
        assert_eq!(tape.value(y).data, vec![2.0, 0.0]);

        let mut store2 = ParamStore::new();
        store2.insert_value("w", DenseArray::from_vec(&[2, 2], vec![9.0, 8.0, 7.0, 6.0]));
        store2.insert_value("b", DenseArray::from_vec(&[2], vec![5.0, 7.0]));
        let mut tape2 = Tape::eval();
        let x0 = tape2.constant(DenseArray::from_vec(&[2], vec![0.0, 0.0]));
        let w2 = tape2.param("w", &store2);
        let b2 = tape2.param("b", &store2);
        let y2 = tape2.affine(x0, w2, b2).unwrap();
        assert_eq!(tape2.value(y2).data, vec![5.0, 7.0]);
    }

    #[test]
    fn affine_matches_triple_loop_oracle() {
        let mut rng = RngState::new(5);
        let x = DenseArray::from_vec(&[3], (0..3).map(|_| rng.next_gaussian()).collect());
        let w = DenseArray::from_vec(&[3, 4], (0..12).map(|_| rng.next_gaussian()).collect());
        let wb = DenseArray::from_vec(&[4, 2], (0..8).map(|_| rng.next_gaussian()).collect());
        // stage twice to cover a 3x4 times 4x2 chain
        let mid = dense::vecmat(&x, &w).unwrap();
        let out = dense::vecmat(&mid, &wb).unwrap();
        // naive triple loop over the composed product
        let mut oracle = vec![0.0; 2];
        for j in 0..2 {
            for k in 0..4 {
                let mut mk = 0.0;
                for i in 0..3 {
                    mk += x.data[i] * w.at(i, k);
                }
                oracle[j] += mk * wb.at(k, j);
            }
        }
        for (got, want) in out.data.iter().zip(&oracle) {
            assert!((got - want).abs() < 1e-12);
        }
    }

    #[test]
    fn dropout_identity_cases() {
        let mut rng = RngState::new(1);
        let x_data = DenseArray::from_vec(&[4], vec![1.0, -2.0, 3.0, 4.0]);

        let mut eval_tape = Tape::eval();
        let x = eval_tape.constant(x_data.clone());
        let y = eval_tape.dropout(x, 0.5, &mut rng).unwrap();
        assert_eq!(eval_tape.value(y).data, x_data.data);

        let mut train_tape = Tape::train();
        let x = train_tape.constant(x_data.clone());
        let y = train_tape.dropout(x, 0.0, &mut rng).unwrap();
        assert_eq!(train_tape.value(y).data, x_data.data);
    }

    #[test]
    fn dropout_rate_one_rejected() {
        let mut rng = RngState::new(1);
        let mut tape = Tape::train();
        let x = tape.constant(DenseArray::scalar(1.0));
        assert!(tape.dropout(x, 1.0, &mut rng).is_err());
    }

    #[test]
    fn dropout_mean_is_preserved() {
        // Inverted dropout at rate 0.5 over 1e5 ones: mean within 3 sigma of 1.
        let mut rng = RngState::new(77);
        let n = 100_000;
        let mut tape = Tape::train();
        let x = tape.constant(DenseArray::from_vec(&[n], vec![1.0; n]));
        let y = tape.dropout(x, 0.5, &mut rng).unwrap();
        let mean = tape.value(y).data.iter().sum::<f64>() / n as f64;
        // Var of one scaled element is 1, so sigma of the mean is 1/sqrt(n).
        let sigma = 1.0 / (n as f64).sqrt();
        assert!((mean - 1.0).abs() < 3.0 * sigma, "mean {mean}");
    }

    #[test]
    fn backward_through_dot_is_exact() {
        let mut store = ParamStore::new();
        store.insert_value("w", DenseArray::from_vec(&[3], vec![1.0, 2.0, 3.0]));
        let mut tape = Tape::train();
        let w = tape.param("w", &store);
        let x = tape.constant(DenseArray::from_vec(&[3], vec![4.0, 5.0, 6.0]));
        let y = tape.dot(w, x).unwrap();
        tape.backward(y, 1.0, &mut store).unwrap();
        assert_eq!(store.get("w").grad.data, vec![4.0, 5.0, 6.0]);
    }

    #[test]
    fn hinge_values() {
        let mut tape = Tape::eval();
        let pos = tape.scalar(0.9);
        let neg = tape.scalar(0.1);
        let j = tape.hinge(pos, neg, 0.2).unwrap();
        assert_eq!(tape.value(j).item(), 0.0);

        let pos = tape.scalar(0.3);
        let neg = tape.scalar(0.4);
        let j = tape.hinge(pos, neg, 0.2).unwrap();
        assert!((tape.value(j).item() - 0.3).abs() < 1e-15);

        let pos = tape.scalar(0.5);
        let neg = tape.scalar(0.5);
        let j = tape.hinge(pos, neg, 0.2).unwrap();
        assert!((tape.value(j).item() - 0.2).abs() < 1e-15);
    }
}
