use rand::Rng;

use super::{numel, split_axis, Result, Tensor, TensorError};

const SQRT_2_OVER_PI: f64 = 0.797_884_560_802_865_4;
const GELU_C: f64 = 0.044_715;

pub(super) enum Op {
    Leaf,
    MatMul(Tensor, Tensor),
    Add(Tensor, Tensor),
    Sub(Tensor, Tensor),
    Mul(Tensor, Tensor),
    AddBias(Tensor, Tensor),
    MulRow(Tensor, Tensor),
    Scale(Tensor, f64),
    Tanh(Tensor),
    Sigmoid(Tensor),
    Gelu(Tensor),
    Softmax { input: Tensor, axis: usize },
    LayerNorm { input: Tensor, eps: f64 },
    Concat { inputs: Vec<Tensor>, axis: usize },
    Narrow { input: Tensor, axis: usize, start: usize },
    Gather { table: Tensor, ids: Vec<usize>, skip: Option<usize> },
    Transpose(Tensor),
    Reshape(Tensor),
    Sum(Tensor),
    Mean(Tensor),
    MeanAxis { input: Tensor, axis: usize },
    Dropout { input: Tensor, mask: Vec<f64> },
    CrossEntropy { probs: Tensor, target: usize },
    Mse { pred: Tensor, gold: f64 },
    Cosine { a: Tensor, b: Tensor },
}

impl Op {
    pub(super) fn parents(&self) -> Vec<&Tensor> {
        match self {
            Op::Leaf => vec![],
            Op::MatMul(a, b)
            | Op::Add(a, b)
            | Op::Sub(a, b)
            | Op::Mul(a, b)
            | Op::AddBias(a, b)
            | Op::MulRow(a, b)
            | Op::Cosine { a, b } => vec![a, b],
            Op::Scale(a, _) | Op::Tanh(a) | Op::Sigmoid(a) | Op::Gelu(a) | Op::Transpose(a) | Op::Reshape(a) | Op::Sum(a) | Op::Mean(a) => {
                vec![a]
            }
            Op::Softmax { input, .. }
            | Op::LayerNorm { input, .. }
            | Op::Narrow { input, .. }
            | Op::MeanAxis { input, .. }
            | Op::Dropout { input, .. } => vec![input],
            Op::Gather { table, .. } => vec![table],
            Op::CrossEntropy { probs, .. } => vec![probs],
            Op::Mse { pred, .. } => vec![pred],
            Op::Concat { inputs, .. } => inputs.iter().collect(),
        }
    }

    /// Pushes `g` (the gradient of `out`) into the parents of `out`.
    pub(super) fn backprop(&self, out: &Tensor, g: &[f64]) {
        match self {
            Op::Leaf => {}
            Op::MatMul(a, b) => {
                let (m, k) = (a.shape()[0], a.shape()[1]);
                let n = b.shape()[1];
                if a.requires_grad() {
                    let bd = b.data();
                    let mut da = vec![0.0; m * k];
                    for i in 0..m {
                        for p in 0..k {
                            let mut acc = 0.0;
                            for j in 0..n {
                                acc += g[i * n + j] * bd[p * n + j];
                            }
                            da[i * k + p] = acc;
                        }
                    }
                    drop(bd);
                    a.accumulate_grad(&da);
                }
                if b.requires_grad() {
                    let ad = a.data();
                    let mut db = vec![0.0; k * n];
                    for i in 0..m {
                        for p in 0..k {
                            let av = ad[i * k + p];
                            if av == 0.0 {
                                continue;
                            }
                            for j in 0..n {
                                db[p * n + j] += av * g[i * n + j];
                            }
                        }
                    }
                    drop(ad);
                    b.accumulate_grad(&db);
                }
            }
            Op::Add(a, b) => {
                a.accumulate_grad(g);
                b.accumulate_grad(g);
            }
            Op::Sub(a, b) => {
                a.accumulate_grad(g);
                if b.requires_grad() {
                    let neg: Vec<f64> = g.iter().map(|v| -v).collect();
                    b.accumulate_grad(&neg);
                }
            }
            Op::Mul(a, b) => {
                if a.requires_grad() {
                    let da: Vec<f64> = g.iter().zip(b.data().iter()).map(|(g, b)| g * b).collect();
                    a.accumulate_grad(&da);
                }
                if b.requires_grad() {
                    let db: Vec<f64> = g.iter().zip(a.data().iter()).map(|(g, a)| g * a).collect();
                    b.accumulate_grad(&db);
                }
            }
            Op::AddBias(x, bias) => {
                x.accumulate_grad(g);
                if bias.requires_grad() {
                    let n = bias.len();
                    let mut db = vec![0.0; n];
                    for (i, v) in g.iter().enumerate() {
                        db[i % n] += v;
                    }
                    bias.accumulate_grad(&db);
                }
            }
            Op::MulRow(x, row) => {
                let n = row.len();
                if x.requires_grad() {
                    let rd = row.data();
                    let dx: Vec<f64> = g.iter().enumerate().map(|(i, v)| v * rd[i % n]).collect();
                    drop(rd);
                    x.accumulate_grad(&dx);
                }
                if row.requires_grad() {
                    let xd = x.data();
                    let mut dr = vec![0.0; n];
                    for (i, v) in g.iter().enumerate() {
                        dr[i % n] += v * xd[i];
                    }
                    drop(xd);
                    row.accumulate_grad(&dr);
                }
            }
            Op::Scale(x, c) => {
                let dx: Vec<f64> = g.iter().map(|v| v * c).collect();
                x.accumulate_grad(&dx);
            }
            Op::Tanh(x) => {
                let y = out.data();
                let dx: Vec<f64> = g.iter().zip(y.iter()).map(|(g, y)| g * (1.0 - y * y)).collect();
                drop(y);
                x.accumulate_grad(&dx);
            }
            Op::Sigmoid(x) => {
                let y = out.data();
                let dx: Vec<f64> = g.iter().zip(y.iter()).map(|(g, y)| g * y * (1.0 - y)).collect();
                drop(y);
                x.accumulate_grad(&dx);
            }
            Op::Gelu(x) => {
                let xd = x.data();
                let dx: Vec<f64> = g.iter().zip(xd.iter()).map(|(g, &x)| g * gelu_grad(x)).collect();
                drop(xd);
                x.accumulate_grad(&dx);
            }
            Op::Softmax { input, axis } => {
                let y = out.data();
                let (outer, n, inner) = split_axis(out.shape(), *axis);
                let mut dx = vec![0.0; y.len()];
                for o in 0..outer {
                    for i in 0..inner {
                        let idx = |j: usize| (o * n + j) * inner + i;
                        let dot: f64 = (0..n).map(|j| g[idx(j)] * y[idx(j)]).sum();
                        for j in 0..n {
                            dx[idx(j)] = y[idx(j)] * (g[idx(j)] - dot);
                        }
                    }
                }
                drop(y);
                input.accumulate_grad(&dx);
            }
            Op::LayerNorm { input, eps } => {
                let xd = input.data();
                let n = *input.shape().last().unwrap();
                let mut dx = vec![0.0; xd.len()];
                for (r, (xrow, grow)) in xd.chunks(n).zip(g.chunks(n)).enumerate() {
                    let (mean, inv_std) = row_stats(xrow, *eps);
                    let yhat: Vec<f64> = xrow.iter().map(|v| (v - mean) * inv_std).collect();
                    let g_mean = grow.iter().sum::<f64>() / n as f64;
                    let gy_mean = grow.iter().zip(&yhat).map(|(g, y)| g * y).sum::<f64>() / n as f64;
                    for j in 0..n {
                        dx[r * n + j] = inv_std * (grow[j] - g_mean - yhat[j] * gy_mean);
                    }
                }
                drop(xd);
                input.accumulate_grad(&dx);
            }
            Op::Concat { inputs, axis } => {
                let (outer, total, inner) = split_axis(out.shape(), *axis);
                let mut offset = 0;
                for t in inputs {
                    let n = t.shape()[*axis];
                    if t.requires_grad() {
                        let mut dt = Vec::with_capacity(t.len());
                        for o in 0..outer {
                            let base = (o * total + offset) * inner;
                            dt.extend_from_slice(&g[base..base + n * inner]);
                        }
                        t.accumulate_grad(&dt);
                    }
                    offset += n;
                }
            }
            Op::Narrow { input, axis, start } => {
                let (outer, total, inner) = split_axis(input.shape(), *axis);
                let n = out.shape()[*axis];
                let mut dx = vec![0.0; input.len()];
                for o in 0..outer {
                    let src = o * n * inner;
                    let dst = (o * total + start) * inner;
                    dx[dst..dst + n * inner].copy_from_slice(&g[src..src + n * inner]);
                }
                input.accumulate_grad(&dx);
            }
            Op::Gather { table, ids, skip } => {
                let d = table.shape()[1];
                let mut dt = vec![0.0; table.len()];
                for (r, &id) in ids.iter().enumerate() {
                    if Some(id) == *skip {
                        continue;
                    }
                    for j in 0..d {
                        dt[id * d + j] += g[r * d + j];
                    }
                }
                table.accumulate_grad(&dt);
            }
            Op::Transpose(x) => {
                let (m, n) = (x.shape()[0], x.shape()[1]);
                let mut dx = vec![0.0; m * n];
                for i in 0..m {
                    for j in 0..n {
                        dx[i * n + j] = g[j * m + i];
                    }
                }
                x.accumulate_grad(&dx);
            }
            Op::Reshape(x) => x.accumulate_grad(g),
            Op::Sum(x) => x.accumulate_grad(&vec![g[0]; x.len()]),
            Op::Mean(x) => x.accumulate_grad(&vec![g[0] / x.len() as f64; x.len()]),
            Op::MeanAxis { input, axis } => {
                let (outer, n, inner) = split_axis(input.shape(), *axis);
                let mut dx = vec![0.0; input.len()];
                for o in 0..outer {
                    for j in 0..n {
                        for i in 0..inner {
                            dx[(o * n + j) * inner + i] = g[o * inner + i] / n as f64;
                        }
                    }
                }
                input.accumulate_grad(&dx);
            }
            Op::Dropout { input, mask } => {
                let dx: Vec<f64> = g.iter().zip(mask).map(|(g, m)| g * m).collect();
                input.accumulate_grad(&dx);
            }
            Op::CrossEntropy { probs, target } => {
                let mut dp = vec![0.0; probs.len()];
                dp[*target] = -g[0] / probs.get(*target);
                probs.accumulate_grad(&dp);
            }
            Op::Mse { pred, gold } => {
                pred.accumulate_grad(&[2.0 * (pred.item() - gold) * g[0]]);
            }
            Op::Cosine { a, b } => {
                let ad = a.to_vec();
                let bd = b.to_vec();
                let dot: f64 = ad.iter().zip(&bd).map(|(x, y)| x * y).sum();
                let na = ad.iter().map(|x| x * x).sum::<f64>().sqrt();
                let nb = bd.iter().map(|x| x * x).sum::<f64>().sqrt();
                let c = dot / (na * nb);
                if a.requires_grad() {
                    let da: Vec<f64> = ad.iter().zip(&bd).map(|(x, y)| g[0] * (y / (na * nb) - c * x / (na * na))).collect();
                    a.accumulate_grad(&da);
                }
                if b.requires_grad() {
                    let db: Vec<f64> = ad.iter().zip(&bd).map(|(x, y)| g[0] * (x / (na * nb) - c * y / (nb * nb))).collect();
                    b.accumulate_grad(&db);
                }
            }
        }
    }
}

fn gelu(x: f64) -> f64 {
    0.5 * x * (1.0 + (SQRT_2_OVER_PI * (x + GELU_C * x * x * x)).tanh())
}

fn gelu_grad(x: f64) -> f64 {
    let inner = SQRT_2_OVER_PI * (x + GELU_C * x * x * x);
    let t = inner.tanh();
    0.5 * (1.0 + t) + 0.5 * x * (1.0 - t * t) * SQRT_2_OVER_PI * (1.0 + 3.0 * GELU_C * x * x)
}

fn row_stats(row: &[f64], eps: f64) -> (f64, f64) {
    let n = row.len() as f64;
    let mean = row.iter().sum::<f64>() / n;
    let var = row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    (mean, 1.0 / (var + eps).sqrt())
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

impl Tensor {
    fn same_shape(&self, other: &Tensor, op: &'static str) -> Result<()> {
        if self.shape() != other.shape() {
            return Err(TensorError::ShapeMismatch { op, left: self.shape().to_vec(), right: other.shape().to_vec() });
        }
        Ok(())
    }

    fn zip_map(&self, other: &Tensor, f: impl Fn(f64, f64) -> f64) -> Vec<f64> {
        let a = self.data();
        let b = other.data();
        a.iter().zip(b.iter()).map(|(&x, &y)| f(x, y)).collect()
    }

    fn map(&self, f: impl Fn(f64) -> f64) -> Vec<f64> {
        self.data().iter().map(|&x| f(x)).collect()
    }

    /// Matrix product of two 2-D tensors.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        if self.rank() != 2 || other.rank() != 2 || self.shape()[1] != other.shape()[0] {
            return Err(TensorError::ShapeMismatch { op: "matmul", left: self.shape().to_vec(), right: other.shape().to_vec() });
        }
        let (m, k) = (self.shape()[0], self.shape()[1]);
        let n = other.shape()[1];
        let a = self.data();
        let b = other.data();
        let mut c = vec![0.0; m * n];
        for i in 0..m {
            for p in 0..k {
                let av = a[i * k + p];
                if av == 0.0 {
                    continue;
                }
                let brow = &b[p * n..(p + 1) * n];
                let crow = &mut c[i * n..(i + 1) * n];
                for (cv, bv) in crow.iter_mut().zip(brow) {
                    *cv += av * bv;
                }
            }
        }
        drop((a, b));
        Ok(Tensor::from_op(c, vec![m, n], Op::MatMul(self.clone(), other.clone())))
    }

    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        self.same_shape(other, "add")?;
        let d = self.zip_map(other, |a, b| a + b);
        Ok(Tensor::from_op(d, self.shape().to_vec(), Op::Add(self.clone(), other.clone())))
    }

    pub fn sub(&self, other: &Tensor) -> Result<Tensor> {
        self.same_shape(other, "sub")?;
        let d = self.zip_map(other, |a, b| a - b);
        Ok(Tensor::from_op(d, self.shape().to_vec(), Op::Sub(self.clone(), other.clone())))
    }

    /// Elementwise (Hadamard) product.
    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        self.same_shape(other, "mul")?;
        let d = self.zip_map(other, |a, b| a * b);
        Ok(Tensor::from_op(d, self.shape().to_vec(), Op::Mul(self.clone(), other.clone())))
    }

    /// Adds a length-`n` bias to every row of an `m × n` tensor.
    pub fn add_bias(&self, bias: &Tensor) -> Result<Tensor> {
        let n = *self.shape().last().unwrap_or(&0);
        if bias.rank() != 1 || bias.len() != n {
            return Err(TensorError::ShapeMismatch { op: "add_bias", left: self.shape().to_vec(), right: bias.shape().to_vec() });
        }
        let b = bias.data();
        let d: Vec<f64> = self.data().iter().enumerate().map(|(i, x)| x + b[i % n]).collect();
        drop(b);
        Ok(Tensor::from_op(d, self.shape().to_vec(), Op::AddBias(self.clone(), bias.clone())))
    }

    /// Multiplies every row of an `m × n` tensor elementwise by a length-`n` vector.
    pub fn mul_row(&self, row: &Tensor) -> Result<Tensor> {
        let n = *self.shape().last().unwrap_or(&0);
        if row.rank() != 1 || row.len() != n {
            return Err(TensorError::ShapeMismatch { op: "mul_row", left: self.shape().to_vec(), right: row.shape().to_vec() });
        }
        let r = row.data();
        let d: Vec<f64> = self.data().iter().enumerate().map(|(i, x)| x * r[i % n]).collect();
        drop(r);
        Ok(Tensor::from_op(d, self.shape().to_vec(), Op::MulRow(self.clone(), row.clone())))
    }

    pub fn scale(&self, c: f64) -> Tensor {
        Tensor::from_op(self.map(|x| x * c), self.shape().to_vec(), Op::Scale(self.clone(), c))
    }

    pub fn tanh(&self) -> Tensor {
        Tensor::from_op(self.map(f64::tanh), self.shape().to_vec(), Op::Tanh(self.clone()))
    }

    pub fn sigmoid(&self) -> Tensor {
        Tensor::from_op(self.map(sigmoid), self.shape().to_vec(), Op::Sigmoid(self.clone()))
    }

    /// Tanh-approximated GELU.
    pub fn gelu(&self) -> Tensor {
        Tensor::from_op(self.map(gelu), self.shape().to_vec(), Op::Gelu(self.clone()))
    }

    /// Max-shifted softmax over `axis`.
    pub fn softmax(&self, axis: usize) -> Result<Tensor> {
        if axis >= self.rank() {
            return Err(TensorError::InvalidAxis { op: "softmax", axis, shape: self.shape().to_vec() });
        }
        let (outer, n, inner) = split_axis(self.shape(), axis);
        let x = self.data();
        let mut y = vec![0.0; x.len()];
        for o in 0..outer {
            for i in 0..inner {
                let idx = |j: usize| (o * n + j) * inner + i;
                let max = (0..n).map(|j| x[idx(j)]).fold(f64::NEG_INFINITY, f64::max);
                let mut total = 0.0;
                for j in 0..n {
                    let e = (x[idx(j)] - max).exp();
                    y[idx(j)] = e;
                    total += e;
                }
                for j in 0..n {
                    y[idx(j)] /= total;
                }
            }
        }
        drop(x);
        Ok(Tensor::from_op(y, self.shape().to_vec(), Op::Softmax { input: self.clone(), axis }))
    }

    /// Standardizes each row (last axis) to zero mean and unit variance.
    pub fn layer_norm(&self, eps: f64) -> Tensor {
        let n = *self.shape().last().unwrap_or(&1);
        let x = self.data();
        let mut y = Vec::with_capacity(x.len());
        for row in x.chunks(n) {
            let (mean, inv_std) = row_stats(row, eps);
            y.extend(row.iter().map(|v| (v - mean) * inv_std));
        }
        drop(x);
        Tensor::from_op(y, self.shape().to_vec(), Op::LayerNorm { input: self.clone(), eps })
    }

    /// Joins tensors along `axis`; every other extent must agree.
    pub fn concat(inputs: &[Tensor], axis: usize) -> Result<Tensor> {
        let first = inputs.first().ok_or_else(|| TensorError::Config("concat of zero tensors".into()))?;
        if axis >= first.rank() {
            return Err(TensorError::InvalidAxis { op: "concat", axis, shape: first.shape().to_vec() });
        }
        for t in &inputs[1..] {
            let compatible =
                t.rank() == first.rank() && t.shape().iter().zip(first.shape()).enumerate().all(|(d, (a, b))| d == axis || a == b);
            if !compatible {
                return Err(TensorError::ShapeMismatch { op: "concat", left: first.shape().to_vec(), right: t.shape().to_vec() });
            }
        }
        let mut shape = first.shape().to_vec();
        shape[axis] = inputs.iter().map(|t| t.shape()[axis]).sum();
        let (outer, _, inner) = split_axis(first.shape(), axis);
        let mut data = Vec::with_capacity(numel(&shape));
        for o in 0..outer {
            for t in inputs {
                let n = t.shape()[axis];
                let d = t.data();
                data.extend_from_slice(&d[o * n * inner..(o + 1) * n * inner]);
            }
        }
        Ok(Tensor::from_op(data, shape, Op::Concat { inputs: inputs.to_vec(), axis }))
    }

    /// The sub-range `start..start + len` of `axis`.
    pub fn narrow(&self, axis: usize, start: usize, len: usize) -> Result<Tensor> {
        if axis >= self.rank() {
            return Err(TensorError::InvalidAxis { op: "narrow", axis, shape: self.shape().to_vec() });
        }
        let (outer, total, inner) = split_axis(self.shape(), axis);
        if start + len > total {
            return Err(TensorError::IndexOutOfRange { index: start + len, size: total });
        }
        let x = self.data();
        let mut data = Vec::with_capacity(outer * len * inner);
        for o in 0..outer {
            let base = (o * total + start) * inner;
            data.extend_from_slice(&x[base..base + len * inner]);
        }
        drop(x);
        let mut shape = self.shape().to_vec();
        shape[axis] = len;
        Ok(Tensor::from_op(data, shape, Op::Narrow { input: self.clone(), axis, start }))
    }

    /// Row `i` of a 2-D tensor as a `1 × n` tensor.
    pub fn row(&self, i: usize) -> Result<Tensor> {
        self.narrow(0, i, 1)
    }

    /// Looks up rows of a `V × D` table. Rows whose id equals `skip`
    /// receive no gradient.
    pub fn gather_rows(&self, ids: &[usize], skip: Option<usize>) -> Result<Tensor> {
        if self.rank() != 2 {
            return Err(TensorError::ShapeMismatch { op: "gather_rows", left: self.shape().to_vec(), right: vec![ids.len()] });
        }
        let (v, d) = (self.shape()[0], self.shape()[1]);
        let x = self.data();
        let mut data = Vec::with_capacity(ids.len() * d);
        for &id in ids {
            if id >= v {
                return Err(TensorError::IndexOutOfRange { index: id, size: v });
            }
            data.extend_from_slice(&x[id * d..(id + 1) * d]);
        }
        drop(x);
        Ok(Tensor::from_op(data, vec![ids.len(), d], Op::Gather { table: self.clone(), ids: ids.to_vec(), skip }))
    }

    pub fn transpose(&self) -> Result<Tensor> {
        if self.rank() != 2 {
            return Err(TensorError::InvalidAxis { op: "transpose", axis: 1, shape: self.shape().to_vec() });
        }
        let (m, n) = (self.shape()[0], self.shape()[1]);
        let x = self.data();
        let mut data = vec![0.0; m * n];
        for i in 0..m {
            for j in 0..n {
                data[j * m + i] = x[i * n + j];
            }
        }
        drop(x);
        Ok(Tensor::from_op(data, vec![n, m], Op::Transpose(self.clone())))
    }

    pub fn reshape(&self, shape: &[usize]) -> Result<Tensor> {
        if numel(shape) != self.len() {
            return Err(TensorError::ShapeMismatch { op: "reshape", left: self.shape().to_vec(), right: shape.to_vec() });
        }
        Ok(Tensor::from_op(self.to_vec(), shape.to_vec(), Op::Reshape(self.clone())))
    }

    /// Flattens to a 1-D vector.
    pub fn flatten(&self) -> Tensor {
        self.reshape(&[self.len()]).expect("flatten preserves length")
    }

    pub fn sum(&self) -> Tensor {
        let s = self.data().iter().sum();
        Tensor::from_op(vec![s], Vec::new(), Op::Sum(self.clone()))
    }

    pub fn mean(&self) -> Tensor {
        let s: f64 = self.data().iter().sum();
        Tensor::from_op(vec![s / self.len() as f64], Vec::new(), Op::Mean(self.clone()))
    }

    /// Averages out `axis`, dropping it from the shape.
    pub fn mean_axis(&self, axis: usize) -> Result<Tensor> {
        if axis >= self.rank() {
            return Err(TensorError::InvalidAxis { op: "mean_axis", axis, shape: self.shape().to_vec() });
        }
        let (outer, n, inner) = split_axis(self.shape(), axis);
        let x = self.data();
        let mut data = vec![0.0; outer * inner];
        for o in 0..outer {
            for j in 0..n {
                for i in 0..inner {
                    data[o * inner + i] += x[(o * n + j) * inner + i] / n as f64;
                }
            }
        }
        drop(x);
        let mut shape = self.shape().to_vec();
        shape.remove(axis);
        Ok(Tensor::from_op(data, shape, Op::MeanAxis { input: self.clone(), axis }))
    }

    /// Inverted dropout. In eval mode, or with `rate == 0`, returns `self`
    /// unchanged.
    pub fn dropout(&self, rate: f64, training: bool, rng: &mut impl Rng) -> Result<Tensor> {
        if !(0.0..1.0).contains(&rate) {
            return Err(TensorError::Config(format!("dropout rate {rate} outside [0, 1)")));
        }
        if !training || rate == 0.0 {
            return Ok(self.clone());
        }
        let keep = 1.0 / (1.0 - rate);
        let mask: Vec<f64> = (0..self.len()).map(|_| if rng.gen::<f64>() < rate { 0.0 } else { keep }).collect();
        let d = self.data().iter().zip(&mask).map(|(x, m)| x * m).collect();
        Ok(Tensor::from_op(d, self.shape().to_vec(), Op::Dropout { input: self.clone(), mask }))
    }

    /// `-ln p[target]` for a probability vector.
    pub fn cross_entropy(&self, target: usize) -> Result<Tensor> {
        let classes = self.len();
        if target >= classes {
            return Err(TensorError::InvalidClass { index: target, classes });
        }
        let loss = -self.get(target).ln();
        Ok(Tensor::from_op(vec![loss], Vec::new(), Op::CrossEntropy { probs: self.clone(), target }))
    }

    /// Squared error of a scalar prediction against a constant.
    pub fn mse(&self, gold: f64) -> Result<Tensor> {
        if self.len() != 1 {
            return Err(TensorError::NotScalar(self.shape().to_vec()));
        }
        let d = self.item() - gold;
        Ok(Tensor::from_op(vec![d * d], Vec::new(), Op::Mse { pred: self.clone(), gold }))
    }

    /// Cosine of the angle between two equally long tensors, clamped to `[-1, 1]`.
    pub fn cosine_similarity(&self, other: &Tensor) -> Result<Tensor> {
        if self.len() != other.len() {
            return Err(TensorError::ShapeMismatch { op: "cosine_similarity", left: self.shape().to_vec(), right: other.shape().to_vec() });
        }
        let a = self.data();
        let b = other.data();
        let dot: f64 = a.iter().zip(b.iter()).map(|(x, y)| x * y).sum();
        let na = a.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nb = b.iter().map(|x| x * x).sum::<f64>().sqrt();
        drop((a, b));
        if na == 0.0 || nb == 0.0 {
            return Err(TensorError::DegenerateVector);
        }
        let c = (dot / (na * nb)).clamp(-1.0, 1.0);
        Ok(Tensor::from_op(vec![c], Vec::new(), Op::Cosine { a: self.clone(), b: other.clone() }))
    }
}
