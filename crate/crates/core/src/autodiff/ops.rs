//! Forward and adjoint rules for the tensor operations the model uses.

use std::rc::Rc;

use crate::error::{Error, Result};

use super::{make_result, Adjoints, Tensor};

/// `c[m,n] (+)= op(a) * op(b)` on row-major buffers; `ta`/`tb` select the
/// transpose of the stored matrix, `beta` scales the existing `c` contents.
#[allow(clippy::too_many_arguments)]
fn gemm(
    m: usize,
    k: usize,
    n: usize,
    a: &[f64],
    ta: bool,
    b: &[f64],
    tb: bool,
    beta: f64,
    c: &mut [f64],
) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(b.len(), k * n);
    debug_assert_eq!(c.len(), m * n);
    let (rsa, csa) = if ta {
        (1isize, m as isize)
    } else {
        (k as isize, 1)
    };
    let (rsb, csb) = if tb {
        (1isize, k as isize)
    } else {
        (n as isize, 1)
    };
    unsafe {
        matrixmultiply::dgemm(
            m,
            k,
            n,
            1.0,
            a.as_ptr(),
            rsa,
            csa,
            b.as_ptr(),
            rsb,
            csb,
            beta,
            c.as_mut_ptr(),
            n as isize,
            1,
        );
    }
}

/// Broadcasting patterns supported by `add` and `mul`.
enum Bcast {
    /// identical shapes
    Same,
    /// rhs shape is a strict suffix of lhs (bias add); field = rhs length
    Suffix(usize),
    /// shapes equal except rhs last dim is 1; field = lhs last dim
    LastOne(usize),
}

fn bcast_pattern(sa: &[usize], sb: &[usize]) -> Result<Bcast> {
    if sa == sb {
        return Ok(Bcast::Same);
    }
    if sb.len() < sa.len() && sa.ends_with(sb) {
        return Ok(Bcast::Suffix(sb.iter().product()));
    }
    if !sa.is_empty()
        && sa.len() == sb.len()
        && sa[..sa.len() - 1] == sb[..sb.len() - 1]
        && sb[sb.len() - 1] == 1
        && sa[sa.len() - 1] > 1
    {
        return Ok(Bcast::LastOne(sa[sa.len() - 1]));
    }
    Err(Error::Shape(format!(
        "cannot broadcast {sb:?} against {sa:?}"
    )))
}

fn bcast_index(pattern: &Bcast, i: usize) -> usize {
    match pattern {
        Bcast::Same => i,
        Bcast::Suffix(blen) => i % blen,
        Bcast::LastOne(n) => i / n,
    }
}

impl Tensor {
    /// 2-D matrix product.
    pub fn matmul(&self, other: &Tensor) -> Result<Tensor> {
        let (sa, sb) = (self.shape(), other.shape());
        if sa.len() != 2 || sb.len() != 2 || sa[1] != sb[0] {
            return Err(Error::Shape(format!(
                "matmul needs [m,k] x [k,n], got {sa:?} x {sb:?}"
            )));
        }
        let (m, k, n) = (sa[0], sa[1], sb[1]);
        let mut out = vec![0.0; m * n];
        gemm(m, k, n, self.data(), false, other.data(), false, 0.0, &mut out);
        let (av, bv) = (self.data_rc(), other.data_rc());
        make_result(&[self, other], vec![m, n], out, "matmul", move |ids| {
            Box::new(move |g: &[f64], adj: &mut Adjoints| {
                if let Some(ia) = ids[0] {
                    // dA += g . B^T
                    gemm(m, n, k, g, false, &bv, true, 1.0, adj.buf_mut(ia));
                }
                if let Some(ib) = ids[1] {
                    // dB += A^T . g
                    gemm(k, m, n, &av, true, g, false, 1.0, adj.buf_mut(ib));
                }
            })
        })
    }

    /// Elementwise sum; `other` may broadcast (suffix or trailing-1 shapes).
    pub fn add(&self, other: &Tensor) -> Result<Tensor> {
        let pattern = bcast_pattern(self.shape(), other.shape())?;
        let b = other.data();
        let out: Vec<f64> = self
            .data()
            .iter()
            .enumerate()
            .map(|(i, &a)| a + b[bcast_index(&pattern, i)])
            .collect();
        make_result(&[self, other], self.shape.clone(), out, "add", move |ids| {
            Box::new(move |g: &[f64], adj: &mut Adjoints| {
                adj.accumulate(ids[0], g);
                if let Some(ib) = ids[1] {
                    let buf = adj.buf_mut(ib);
                    for (i, &gi) in g.iter().enumerate() {
                        buf[bcast_index(&pattern, i)] += gi;
                    }
                }
            })
        })
    }

    /// Elementwise product; `other` may broadcast like in `add`.
    pub fn mul(&self, other: &Tensor) -> Result<Tensor> {
        let pattern = bcast_pattern(self.shape(), other.shape())?;
        let b = other.data();
        let out: Vec<f64> = self
            .data()
            .iter()
            .enumerate()
            .map(|(i, &a)| a * b[bcast_index(&pattern, i)])
            .collect();
        let (av, bv) = (self.data_rc(), other.data_rc());
        make_result(&[self, other], self.shape.clone(), out, "mul", move |ids| {
            Box::new(move |g: &[f64], adj: &mut Adjoints| {
                if let Some(ia) = ids[0] {
                    let buf = adj.buf_mut(ia);
                    for (i, &gi) in g.iter().enumerate() {
                        buf[i] += gi * bv[bcast_index(&pattern, i)];
                    }
                }
                if let Some(ib) = ids[1] {
                    let buf = adj.buf_mut(ib);
                    for (i, &gi) in g.iter().enumerate() {
                        buf[bcast_index(&pattern, i)] += gi * av[i];
                    }
                }
            })
        })
    }

    pub fn scale(&self, c: f64) -> Result<Tensor> {
        let out: Vec<f64> = self.data().iter().map(|&v| v * c).collect();
        make_result(&[self], self.shape.clone(), out, "scale", move |ids| {
            Box::new(move |g: &[f64], adj: &mut Adjoints| {
                if let Some(ia) = ids[0] {
                    let buf = adj.buf_mut(ia);
                    for (b, &gi) in buf.iter_mut().zip(g) {
                        *b += gi * c;
                    }
                }
            })
        })
    }

    pub fn sigmoid(&self) -> Result<Tensor> {
        let out: Vec<f64> = self
            .data()
            .iter()
            .map(|&v| 1.0 / (1.0 + (-v).exp()))
            .collect();
        let saved = Rc::new(out.clone());
        make_result(&[self], self.shape.clone(), out, "sigmoid", move |ids| {
            Box::new(move |g: &[f64], adj: &mut Adjoints| {
                if let Some(ia) = ids[0] {
                    let buf = adj.buf_mut(ia);
                    for i in 0..g.len() {
                        buf[i] += g[i] * saved[i] * (1.0 - saved[i]);
                    }
                }
            })
        })
    }

    pub fn tanh_act(&self) -> Result<Tensor> {
        let out: Vec<f64> = self.data().iter().map(|&v| v.tanh()).collect();
        let saved = Rc::new(out.clone());
        make_result(&[self], self.shape.clone(), out, "tanh", move |ids| {
            Box::new(move |g: &[f64], adj: &mut Adjoints| {
                if let Some(ia) = ids[0] {
                    let buf = adj.buf_mut(ia);
                    for i in 0..g.len() {
                        buf[i] += g[i] * (1.0 - saved[i] * saved[i]);
                    }
                }
            })
        })
    }

    pub fn relu(&self) -> Result<Tensor> {
        let out: Vec<f64> = self.data().iter().map(|&v| v.max(0.0)).collect();
        let saved = Rc::new(out.clone());
        make_result(&[self], self.shape.clone(), out, "relu", move |ids| {
            Box::new(move |g: &[f64], adj: &mut Adjoints| {
                if let Some(ia) = ids[0] {
                    let buf = adj.buf_mut(ia);
                    for i in 0..g.len() {
                        if saved[i] > 0.0 {
                            buf[i] += g[i];
                        }
                    }
                }
            })
        })
    }

    fn last_dim(&self) -> Result<usize> {
        self.shape.last().copied().ok_or_else(|| {
            Error::Shape("operation needs at least one dimension".into())
        })
    }

    /// Numerically stable softmax along the last dimension.
    pub fn softmax_lastdim(&self) -> Result<Tensor> {
        let n = self.last_dim()?;
        let mut out = vec![0.0; self.len()];
        for (row_in, row_out) in self.data().chunks(n).zip(out.chunks_mut(n)) {
            let m = row_in.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let mut sum = 0.0;
            for (o, &v) in row_out.iter_mut().zip(row_in) {
                *o = (v - m).exp();
                sum += *o;
            }
            for o in row_out.iter_mut() {
                *o /= sum;
            }
        }
        let saved = Rc::new(out.clone());
        make_result(&[self], self.shape.clone(), out, "softmax", move |ids| {
            Box::new(move |g: &[f64], adj: &mut Adjoints| {
                if let Some(ia) = ids[0] {
                    let buf = adj.buf_mut(ia);
                    for r in 0..g.len() / n {
                        let (gs, ys) = (&g[r * n..(r + 1) * n], &saved[r * n..(r + 1) * n]);
                        let dot: f64 = gs.iter().zip(ys).map(|(gi, yi)| gi * yi).sum();
                        for i in 0..n {
                            buf[r * n + i] += ys[i] * (gs[i] - dot);
                        }
                    }
                }
            })
        })
    }

    /// log(softmax) along the last dimension.
    pub fn log_softmax_lastdim(&self) -> Result<Tensor> {
        let n = self.last_dim()?;
        let mut out = vec![0.0; self.len()];
        for (row_in, row_out) in self.data().chunks(n).zip(out.chunks_mut(n)) {
            let m = row_in.iter().fold(f64::NEG_INFINITY, |a, &b| a.max(b));
            let lse = m + row_in.iter().map(|&v| (v - m).exp()).sum::<f64>().ln();
            for (o, &v) in row_out.iter_mut().zip(row_in) {
                *o = v - lse;
            }
        }
        let saved = Rc::new(out.clone());
        make_result(&[self], self.shape.clone(), out, "log_softmax", move |ids| {
            Box::new(move |g: &[f64], adj: &mut Adjoints| {
                if let Some(ia) = ids[0] {
                    let buf = adj.buf_mut(ia);
                    for r in 0..g.len() / n {
                        let (gs, ys) = (&g[r * n..(r + 1) * n], &saved[r * n..(r + 1) * n]);
                        let gsum: f64 = gs.iter().sum();
                        for i in 0..n {
                            buf[r * n + i] += gs[i] - ys[i].exp() * gsum;
                        }
                    }
                }
            })
        })
    }

    /// Negative log-likelihood summed over rows: `-sum_b logprobs[b, t_b]`.
    pub fn nll_sum(&self, targets: &[usize]) -> Result<Tensor> {
        let n = self.last_dim()?;
        let rows = self.len() / n;
        if targets.len() != rows {
            return Err(Error::Shape(format!(
                "nll needs one target per row: {} rows vs {} targets",
                rows,
                targets.len()
            )));
        }
        if let Some(&t) = targets.iter().find(|&&t| t >= n) {
            return Err(Error::Shape(format!(
                "target class {t} out of range for {n} classes"
            )));
        }
        let mut total = 0.0;
        for (r, &t) in targets.iter().enumerate() {
            total -= self.data()[r * n + t];
        }
        let targets = targets.to_vec();
        make_result(&[self], Vec::new(), vec![total], "nll_sum", move |ids| {
            Box::new(move |g: &[f64], adj: &mut Adjoints| {
                if let Some(ia) = ids[0] {
                    let buf = adj.buf_mut(ia);
                    for (r, &t) in targets.iter().enumerate() {
                        buf[r * n + t] -= g[0];
                    }
                }
            })
        })
    }

    /// Mean softmax cross-entropy of logits rows against integer targets.
    pub fn cross_entropy_mean(&self, targets: &[usize]) -> Result<Tensor> {
        let rows = self.len() / self.last_dim()?;
        self.log_softmax_lastdim()?
            .nll_sum(targets)?
            .scale(1.0 / rows as f64)
    }

    /// Concatenate along the last dimension; all other dims must match.
    pub fn concat_lastdim(parts: &[Tensor]) -> Result<Tensor> {
        if parts.is_empty() {
            return Err(Error::Shape("concat of zero tensors".into()));
        }
        let prefix = &parts[0].shape[..parts[0].shape.len().saturating_sub(1)];
        let mut widths = Vec::with_capacity(parts.len());
        for p in parts {
            if p.shape.is_empty() || &p.shape[..p.shape.len() - 1] != prefix {
                return Err(Error::Shape(format!(
                    "concat prefix mismatch: {:?} vs {:?}",
                    parts[0].shape, p.shape
                )));
            }
            widths.push(p.shape[p.shape.len() - 1]);
        }
        let total: usize = widths.iter().sum();
        let rows: usize = prefix.iter().product();
        let mut out = vec![0.0; rows * total];
        let mut off = 0;
        for (p, &w) in parts.iter().zip(&widths) {
            for r in 0..rows {
                out[r * total + off..r * total + off + w]
                    .copy_from_slice(&p.data()[r * w..(r + 1) * w]);
            }
            off += w;
        }
        let mut shape = prefix.to_vec();
        shape.push(total);
        let deps: Vec<&Tensor> = parts.iter().collect();
        let widths2 = widths.clone();
        make_result(&deps, shape, out, "concat", move |ids| {
            Box::new(move |g: &[f64], adj: &mut Adjoints| {
                let mut off = 0;
                for (pi, &w) in widths2.iter().enumerate() {
                    if let Some(id) = ids[pi] {
                        let buf = adj.buf_mut(id);
                        for r in 0..rows {
                            for c in 0..w {
                                buf[r * w + c] += g[r * total + off + c];
                            }
                        }
                    }
                    off += w;
                }
            })
        })
    }

    /// Stack equal-shaped tensors along a new leading axis.
    pub fn stack0(parts: &[Tensor]) -> Result<Tensor> {
        if parts.is_empty() {
            return Err(Error::Shape("stack of zero tensors".into()));
        }
        let inner = parts[0].shape.clone();
        let step = parts[0].len();
        let mut out = Vec::with_capacity(step * parts.len());
        for p in parts {
            if p.shape != inner {
                return Err(Error::Shape(format!(
                    "stack shape mismatch: {:?} vs {:?}",
                    inner, p.shape
                )));
            }
            out.extend_from_slice(p.data());
        }
        let mut shape = vec![parts.len()];
        shape.extend_from_slice(&inner);
        let deps: Vec<&Tensor> = parts.iter().collect();
        make_result(&deps, shape, out, "stack0", move |ids| {
            Box::new(move |g: &[f64], adj: &mut Adjoints| {
                for (pi, id) in ids.iter().enumerate() {
                    adj.accumulate(*id, &g[pi * step..(pi + 1) * step]);
                }
            })
        })
    }

    /// Select index `i` along the leading axis, dropping that axis.
    pub fn index_axis0(&self, i: usize) -> Result<Tensor> {
        if self.shape.is_empty() || i >= self.shape[0] {
            return Err(Error::Shape(format!(
                "index {i} out of range for shape {:?}",
                self.shape
            )));
        }
        let step: usize = self.shape[1..].iter().product();
        let out = self.data()[i * step..(i + 1) * step].to_vec();
        make_result(
            &[self],
            self.shape[1..].to_vec(),
            out,
            "index_axis0",
            move |ids| {
                Box::new(move |g: &[f64], adj: &mut Adjoints| {
                    if let Some(ia) = ids[0] {
                        let buf = adj.buf_mut(ia);
                        for (c, &gi) in g.iter().enumerate() {
                            buf[i * step + c] += gi;
                        }
                    }
                })
            },
        )
    }

    /// Take columns `[start, start+len)` of the last dimension.
    pub fn slice_lastdim(&self, start: usize, len: usize) -> Result<Tensor> {
        let n = self.last_dim()?;
        if start + len > n || len == 0 {
            return Err(Error::Shape(format!(
                "slice [{start}, {}) out of range for last dim {n}",
                start + len
            )));
        }
        let rows = self.len() / n;
        let mut out = vec![0.0; rows * len];
        for r in 0..rows {
            out[r * len..(r + 1) * len]
                .copy_from_slice(&self.data()[r * n + start..r * n + start + len]);
        }
        let mut shape = self.shape.clone();
        *shape.last_mut().unwrap() = len;
        make_result(&[self], shape, out, "slice_lastdim", move |ids| {
            Box::new(move |g: &[f64], adj: &mut Adjoints| {
                if let Some(ia) = ids[0] {
                    let buf = adj.buf_mut(ia);
                    for r in 0..rows {
                        for c in 0..len {
                            buf[r * n + start + c] += g[r * len + c];
                        }
                    }
                }
            })
        })
    }

    /// Sum over the leading axis.
    pub fn sum_axis0(&self) -> Result<Tensor> {
        if self.shape.is_empty() {
            return Err(Error::Shape("sum_axis0 needs at least rank 1".into()));
        }
        let n = self.shape[0];
        let step: usize = self.shape[1..].iter().product();
        let mut out = vec![0.0; step];
        for r in 0..n {
            for (c, o) in out.iter_mut().enumerate() {
                *o += self.data()[r * step + c];
            }
        }
        make_result(&[self], self.shape[1..].to_vec(), out, "sum_axis0", move |ids| {
            Box::new(move |g: &[f64], adj: &mut Adjoints| {
                if let Some(ia) = ids[0] {
                    let buf = adj.buf_mut(ia);
                    for r in 0..n {
                        for (c, &gi) in g.iter().enumerate() {
                            buf[r * step + c] += gi;
                        }
                    }
                }
            })
        })
    }

    /// Mean over the leading axis.
    pub fn mean_axis0(&self) -> Result<Tensor> {
        let n = self
            .shape
            .first()
            .copied()
            .ok_or_else(|| Error::Shape("mean_axis0 needs at least rank 1".into()))?;
        self.sum_axis0()?.scale(1.0 / n as f64)
    }

    /// Sum of all elements, as a scalar.
    pub fn sum_all(&self) -> Result<Tensor> {
        self.reshape(&[self.len()])?.sum_axis0()
    }

    /// Swap the first two axes (copying).
    pub fn swap01(&self) -> Result<Tensor> {
        if self.shape.len() < 2 {
            return Err(Error::Shape(format!(
                "swap01 needs rank >= 2, shape is {:?}",
                self.shape
            )));
        }
        let (a, b) = (self.shape[0], self.shape[1]);
        let rest: usize = self.shape[2..].iter().product();
        let mut out = vec![0.0; self.len()];
        for i in 0..a {
            for j in 0..b {
                let src = (i * b + j) * rest;
                let dst = (j * a + i) * rest;
                out[dst..dst + rest].copy_from_slice(&self.data()[src..src + rest]);
            }
        }
        let mut shape = self.shape.clone();
        shape.swap(0, 1);
        make_result(&[self], shape, out, "swap01", move |ids| {
            Box::new(move |g: &[f64], adj: &mut Adjoints| {
                if let Some(ia) = ids[0] {
                    let buf = adj.buf_mut(ia);
                    for i in 0..a {
                        for j in 0..b {
                            let src = (j * a + i) * rest;
                            let dst = (i * b + j) * rest;
                            for q in 0..rest {
                                buf[dst + q] += g[src + q];
                            }
                        }
                    }
                }
            })
        })
    }

    /// Like `scale` forward, but the recorded adjoint uses `adjoint_c`
    /// instead of `c`. Negative-control fixture for gradient checking; with
    /// `adjoint_c != c` the analytic gradient is wrong by construction.
    pub fn scale_with_adjoint(&self, c: f64, adjoint_c: f64) -> Result<Tensor> {
        let out: Vec<f64> = self.data().iter().map(|&v| v * c).collect();
        make_result(&[self], self.shape.clone(), out, "scale_bad", move |ids| {
            Box::new(move |g: &[f64], adj: &mut Adjoints| {
                if let Some(ia) = ids[0] {
                    let buf = adj.buf_mut(ia);
                    for (b, &gi) in buf.iter_mut().zip(g) {
                        *b += gi * adjoint_c;
                    }
                }
            })
        })
    }

    /// Reinterpret the shape without copying values.
    pub fn reshape(&self, new_shape: &[usize]) -> Result<Tensor> {
        let want: usize = new_shape.iter().product();
        if want != self.len() || new_shape.contains(&0) {
            return Err(Error::Shape(format!(
                "cannot reshape {:?} ({} values) to {new_shape:?}",
                self.shape,
                self.len()
            )));
        }
        match common_tape_one(self) {
            None => Ok(Tensor {
                shape: new_shape.to_vec(),
                data: self.data_rc(),
                node: None,
            }),
            Some(()) => make_result(
                &[self],
                new_shape.to_vec(),
                self.data().to_vec(),
                "reshape",
                move |ids| {
                    Box::new(move |g: &[f64], adj: &mut Adjoints| {
                        adj.accumulate(ids[0], g);
                    })
                },
            ),
        }
    }
}

fn common_tape_one(t: &Tensor) -> Option<()> {
    t.tracked().then_some(())
}
