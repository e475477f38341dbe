//! Fixed actor-critic network with exact reverse-mode gradients.
//!
//! ```text
//! obs [B,C,H,W] ──► conv3x3(C→c1)+ReLU ──► conv3x3(c1→c2)+ReLU ──► flatten (h,w,c order)
//!                                                                     │
//!                          inventory [B,K] ─────────────── concat ◄───┘
//!                                                             │
//!                                          dense(→hidden)+ReLU
//!                                             │            │
//!                                    policy (→A)      value (→1)
//! ```
//!
//! Convolutions are stride 1 with zero padding 1, computed as im2col + GEMM
//! over an NHWC activation layout. Conv weights are stored `[out, ky, kx, in]`
//! and dense weights `[out, in]`. The dense layer's input vector is the conv
//! output flattened in `(y, x, channel)` order followed by the inventory.

use serde::{Deserialize, Serialize};

use super::rng::RngStream;
use super::tensor::{Scalar, Tensor};
use crate::{Error, Result};

/// Layer sizes of the network family.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Arch {
    pub channels: usize,
    pub height: usize,
    pub width: usize,
    pub inventory: usize,
    pub conv1: usize,
    pub conv2: usize,
    pub hidden: usize,
    pub actions: usize,
}

impl Arch {
    /// Desk-scale trunk: 16 and 32 conv channels, 256 hidden units.
    pub fn standard(channels: usize, height: usize, width: usize, inventory: usize, actions: usize) -> Self {
        Self {
            channels,
            height,
            width,
            inventory,
            conv1: 16,
            conv2: 32,
            hidden: 256,
            actions,
        }
    }

    pub fn cells(&self) -> usize {
        self.height * self.width
    }

    pub fn flat(&self) -> usize {
        self.cells() * self.conv2
    }

    pub fn fc_in(&self) -> usize {
        self.flat() + self.inventory
    }

    pub fn obs_len(&self) -> usize {
        self.channels * self.cells()
    }

    pub fn param_shapes(&self) -> Vec<(&'static str, Vec<usize>)> {
        vec![
            ("conv1.weight", vec![self.conv1, 3, 3, self.channels]),
            ("conv1.bias", vec![self.conv1]),
            ("conv2.weight", vec![self.conv2, 3, 3, self.conv1]),
            ("conv2.bias", vec![self.conv2]),
            ("fc.weight", vec![self.hidden, self.fc_in()]),
            ("fc.bias", vec![self.hidden]),
            ("policy.weight", vec![self.actions, self.hidden]),
            ("policy.bias", vec![self.actions]),
            ("value.weight", vec![1, self.hidden]),
            ("value.bias", vec![1]),
        ]
    }

    pub fn validate(&self) -> Result<()> {
        let dims = [
            self.channels,
            self.height,
            self.width,
            self.conv1,
            self.conv2,
            self.hidden,
            self.actions,
        ];
        if dims.iter().any(|&d| d == 0) {
            return Err(Error::Shape(format!("zero-sized layer in {self:?}")));
        }
        Ok(())
    }
}

const CONV1_W: usize = 0;
const CONV1_B: usize = 1;
const CONV2_W: usize = 2;
const CONV2_B: usize = 3;
const FC_W: usize = 4;
const FC_B: usize = 5;
const PI_W: usize = 6;
const PI_B: usize = 7;
const V_W: usize = 8;
const V_B: usize = 9;

/// Named parameter tensors in a fixed order, plus the architecture they fit.
#[derive(Clone, Debug, PartialEq)]
pub struct ParamSet<T> {
    arch: Arch,
    names: Vec<String>,
    tensors: Vec<Tensor<T>>,
}

impl<T: Scalar> ParamSet<T> {
    pub fn zeros(arch: Arch) -> Self {
        let (names, tensors) = arch
            .param_shapes()
            .into_iter()
            .map(|(n, s)| (n.to_string(), Tensor::zeros(&s)))
            .unzip();
        Self {
            arch,
            names,
            tensors,
        }
    }

    /// Orthogonal init with ReLU gain for the trunk, zero for both heads
    /// and all biases.
    pub fn init(arch: Arch, rng: &mut RngStream) -> Self {
        let mut p = Self::zeros(arch);
        let gain = std::f64::consts::SQRT_2;
        for idx in [CONV1_W, CONV2_W, FC_W] {
            let shape = p.tensors[idx].shape().to_vec();
            let rows = shape[0];
            let cols: usize = shape[1..].iter().product();
            let w = orthogonal(rows, cols, gain, rng);
            p.tensors[idx] = Tensor::from_vec(&shape, w.into_iter().map(T::from_f64).collect())
                .expect("orthogonal shape");
        }
        p
    }

    /// Assemble from named tensors; names and shapes must match `arch`.
    pub fn from_named(arch: Arch, named: Vec<(String, Tensor<T>)>) -> Result<Self> {
        arch.validate()?;
        let want = arch.param_shapes();
        if named.len() != want.len() {
            return Err(Error::Shape(format!(
                "expected {} tensors, got {}",
                want.len(),
                named.len()
            )));
        }
        let mut names = Vec::new();
        let mut tensors = Vec::new();
        for ((name, t), (wname, wshape)) in named.into_iter().zip(want) {
            if name != wname || t.shape() != wshape.as_slice() {
                return Err(Error::Shape(format!(
                    "tensor `{name}` {:?} does not match `{wname}` {:?}",
                    t.shape(),
                    wshape
                )));
            }
            names.push(name);
            tensors.push(t);
        }
        Ok(Self {
            arch,
            names,
            tensors,
        })
    }

    pub fn arch(&self) -> &Arch {
        &self.arch
    }

    pub fn len(&self) -> usize {
        self.tensors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tensors.is_empty()
    }

    pub fn names(&self) -> &[String] {
        &self.names
    }

    pub fn tensors(&self) -> &[Tensor<T>] {
        &self.tensors
    }

    pub fn tensors_mut(&mut self) -> &mut [Tensor<T>] {
        &mut self.tensors
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &Tensor<T>)> {
        self.names.iter().map(|s| s.as_str()).zip(&self.tensors)
    }

    pub fn get(&self, name: &str) -> Option<&Tensor<T>> {
        self.names.iter().position(|n| n == name).map(|i| &self.tensors[i])
    }

    pub fn get_mut(&mut self, name: &str) -> Option<&mut Tensor<T>> {
        let i = self.names.iter().position(|n| n == name)?;
        Some(&mut self.tensors[i])
    }

    pub fn num_params(&self) -> usize {
        self.tensors.iter().map(|t| t.len()).sum()
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.arch)
    }

    pub fn scale(&mut self, s: T) {
        self.tensors.iter_mut().for_each(|t| t.scale(s));
    }

    pub fn check_matches(&self, other: &ParamSet<T>) -> Result<()> {
        if self.arch != other.arch {
            return Err(Error::Shape(format!(
                "architecture {:?} vs {:?}",
                self.arch, other.arch
            )));
        }
        Ok(())
    }

    pub fn cast<U: Scalar>(&self) -> ParamSet<U> {
        ParamSet {
            arch: self.arch,
            names: self.names.clone(),
            tensors: self.tensors.iter().map(|t| t.cast()).collect(),
        }
    }

    /// First non-finite tensor, if any.
    pub fn first_non_finite(&self) -> Option<&str> {
        self.iter().find(|(_, t)| !t.all_finite()).map(|(n, _)| n)
    }
}

/// Rows are orthonormal (or columns, when rows > cols), times `gain`.
fn orthogonal(rows: usize, cols: usize, gain: f64, rng: &mut RngStream) -> Vec<f64> {
    let (r, c, transpose) = if rows <= cols {
        (rows, cols, false)
    } else {
        (cols, rows, true)
    };
    let mut m: Vec<f64> = (0..r * c).map(|_| rng.normal()).collect();
    for i in 0..r {
        for j in 0..i {
            let dot: f64 = (0..c).map(|k| m[i * c + k] * m[j * c + k]).sum();
            for k in 0..c {
                m[i * c + k] -= dot * m[j * c + k];
            }
        }
        let norm = (0..c).map(|k| m[i * c + k] * m[i * c + k]).sum::<f64>().sqrt();
        for k in 0..c {
            m[i * c + k] /= norm.max(1e-12);
        }
    }
    if !transpose {
        m.iter().map(|v| v * gain).collect()
    } else {
        let mut out = vec![0.0; rows * cols];
        for i in 0..r {
            for k in 0..c {
                out[k * cols + i] = m[i * c + k] * gain;
            }
        }
        out
    }
}

/// Network input in NHWC layout.
#[derive(Clone, Debug, PartialEq)]
pub struct Input<T> {
    pub batch: usize,
    pub nhwc: Vec<T>,
    pub inventory: Vec<T>,
}

impl<T: Scalar> Input<T> {
    /// From `[B,C,H,W]` observation and `[B,K]` inventory tensors.
    pub fn from_tensors(arch: &Arch, obs: &Tensor<T>, inventory: &Tensor<T>) -> Result<Self> {
        let s = obs.shape();
        if s.len() != 4 || s[1] != arch.channels || s[2] != arch.height || s[3] != arch.width {
            return Err(Error::Shape(format!(
                "obs batch {:?} does not match [B,{},{},{}]",
                s, arch.channels, arch.height, arch.width
            )));
        }
        let b = s[0];
        let is = inventory.shape();
        if is.len() != 2 || is[0] != b || is[1] != arch.inventory {
            return Err(Error::Shape(format!(
                "inventory {:?} does not match [{},{}]",
                is, b, arch.inventory
            )));
        }
        let mut input = Self::with_capacity(arch, b);
        for i in 0..b {
            let chw = &obs.data()[i * arch.obs_len()..(i + 1) * arch.obs_len()];
            input.push_chw(arch, chw.iter().copied(), &inventory.data()[i * arch.inventory..(i + 1) * arch.inventory]);
        }
        Ok(input)
    }

    pub fn with_capacity(arch: &Arch, batch: usize) -> Self {
        Self {
            batch: 0,
            nhwc: Vec::with_capacity(batch * arch.obs_len()),
            inventory: Vec::with_capacity(batch * arch.inventory),
        }
    }

    /// Append one sample given in CHW order.
    pub fn push_chw<I>(&mut self, arch: &Arch, chw: I, inventory: &[T])
    where
        I: IntoIterator<Item = T>,
    {
        let cells = arch.cells();
        let c = arch.channels;
        let start = self.nhwc.len();
        self.nhwc.resize(start + arch.obs_len(), T::ZERO);
        let dst = &mut self.nhwc[start..];
        for (i, v) in chw.into_iter().enumerate() {
            let ch = i / cells;
            let cell = i % cells;
            dst[cell * c + ch] = v;
        }
        self.inventory.extend_from_slice(inventory);
        self.batch += 1;
    }

    fn check(&self, arch: &Arch) -> Result<()> {
        if self.nhwc.len() != self.batch * arch.obs_len() || self.inventory.len() != self.batch * arch.inventory {
            return Err(Error::Shape(format!(
                "input of batch {} has {} obs and {} inventory values",
                self.batch,
                self.nhwc.len(),
                self.inventory.len()
            )));
        }
        Ok(())
    }
}

/// Activations kept for the backward pass.
pub struct Cache<T> {
    batch: usize,
    col1: Vec<T>,
    a1: Vec<T>,
    col2: Vec<T>,
    a2: Vec<T>,
    inventory: Vec<T>,
    h: Vec<T>,
}

/// `c (m×n, row stride ldc) = a·b + beta·c` with explicit operand strides.
#[allow(clippy::too_many_arguments)]
fn gemm<T: Scalar>(
    m: usize,
    k: usize,
    n: usize,
    a: &[T],
    (rsa, csa): (usize, usize),
    b: &[T],
    (rsb, csb): (usize, usize),
    beta: T,
    c: &mut [T],
    ldc: usize,
) {
    if m == 0 || n == 0 {
        return;
    }
    if k == 0 {
        for i in 0..m {
            for v in &mut c[i * ldc..i * ldc + n] {
                *v = beta * *v;
            }
        }
        return;
    }
    assert!((m - 1) * rsa + (k - 1) * csa < a.len(), "gemm: a out of bounds");
    assert!((k - 1) * rsb + (n - 1) * csb < b.len(), "gemm: b out of bounds");
    assert!((m - 1) * ldc + n <= c.len(), "gemm: c out of bounds");
    // SAFETY: all three views were bounds-checked above.
    unsafe {
        T::gemm(
            m,
            k,
            n,
            T::ONE,
            a.as_ptr(),
            rsa as isize,
            csa as isize,
            b.as_ptr(),
            rsb as isize,
            csb as isize,
            beta,
            c.as_mut_ptr(),
            ldc as isize,
            1,
        );
    }
}

fn im2col<T: Scalar>(x: &[T], batch: usize, h: usize, w: usize, c: usize) -> Vec<T> {
    let k = 9 * c;
    let mut col = vec![T::ZERO; batch * h * w * k];
    for b in 0..batch {
        for y in 0..h {
            for xx in 0..w {
                let row = ((b * h + y) * w + xx) * k;
                for ky in 0..3 {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    for kx in 0..3 {
                        let sx = xx as isize + kx as isize - 1;
                        if sx < 0 || sx >= w as isize {
                            continue;
                        }
                        let src = ((b * h + sy as usize) * w + sx as usize) * c;
                        let dst = row + (ky * 3 + kx) * c;
                        col[dst..dst + c].copy_from_slice(&x[src..src + c]);
                    }
                }
            }
        }
    }
    col
}

fn col2im<T: Scalar>(col: &[T], batch: usize, h: usize, w: usize, c: usize) -> Vec<T> {
    let k = 9 * c;
    let mut x = vec![T::ZERO; batch * h * w * c];
    for b in 0..batch {
        for y in 0..h {
            for xx in 0..w {
                let row = ((b * h + y) * w + xx) * k;
                for ky in 0..3 {
                    let sy = y as isize + ky as isize - 1;
                    if sy < 0 || sy >= h as isize {
                        continue;
                    }
                    for kx in 0..3 {
                        let sx = xx as isize + kx as isize - 1;
                        if sx < 0 || sx >= w as isize {
                            continue;
                        }
                        let dst = ((b * h + sy as usize) * w + sx as usize) * c;
                        let src = row + (ky * 3 + kx) * c;
                        for i in 0..c {
                            x[dst + i] += col[src + i];
                        }
                    }
                }
            }
        }
    }
    x
}

fn add_bias_relu<T: Scalar>(z: &mut [T], bias: &[T]) {
    let n = bias.len();
    for row in z.chunks_mut(n) {
        for (v, b) in row.iter_mut().zip(bias) {
            let s = *v + *b;
            *v = if s > T::ZERO { s } else { T::ZERO };
        }
    }
}

/// Pure forward pass; returns `(logits [B·A], values [B])` and the cache.
pub fn forward_cached<T: Scalar>(params: &ParamSet<T>, input: &Input<T>) -> Result<(Vec<T>, Vec<T>, Cache<T>)> {
    let arch = params.arch;
    input.check(&arch)?;
    let b = input.batch;
    let (h, w) = (arch.height, arch.width);
    let rows = b * h * w;
    let t = &params.tensors;

    let col1 = im2col(&input.nhwc, b, h, w, arch.channels);
    let k1 = 9 * arch.channels;
    let mut a1 = vec![T::ZERO; rows * arch.conv1];
    gemm(rows, k1, arch.conv1, &col1, (k1, 1), t[CONV1_W].data(), (1, k1), T::ZERO, &mut a1, arch.conv1);
    add_bias_relu(&mut a1, t[CONV1_B].data());

    let col2 = im2col(&a1, b, h, w, arch.conv1);
    let k2 = 9 * arch.conv1;
    let mut a2 = vec![T::ZERO; rows * arch.conv2];
    gemm(rows, k2, arch.conv2, &col2, (k2, 1), t[CONV2_W].data(), (1, k2), T::ZERO, &mut a2, arch.conv2);
    add_bias_relu(&mut a2, t[CONV2_B].data());

    let flat = arch.flat();
    let fc_in = arch.fc_in();
    let fcw = t[FC_W].data();
    let mut hid = vec![T::ZERO; b * arch.hidden];
    gemm(b, flat, arch.hidden, &a2, (flat, 1), fcw, (1, fc_in), T::ZERO, &mut hid, arch.hidden);
    if arch.inventory > 0 {
        gemm(
            b,
            arch.inventory,
            arch.hidden,
            &input.inventory,
            (arch.inventory, 1),
            &fcw[flat..],
            (1, fc_in),
            T::ONE,
            &mut hid,
            arch.hidden,
        );
    }
    add_bias_relu(&mut hid, t[FC_B].data());

    let a = arch.actions;
    let mut logits = vec![T::ZERO; b * a];
    gemm(b, arch.hidden, a, &hid, (arch.hidden, 1), t[PI_W].data(), (1, arch.hidden), T::ZERO, &mut logits, a);
    let pb = t[PI_B].data();
    for row in logits.chunks_mut(a) {
        for (v, bb) in row.iter_mut().zip(pb) {
            *v += *bb;
        }
    }
    let mut values = vec![T::ZERO; b];
    gemm(b, arch.hidden, 1, &hid, (arch.hidden, 1), t[V_W].data(), (1, 1), T::ZERO, &mut values, 1);
    let vb = t[V_B].data()[0];
    values.iter_mut().for_each(|v| *v += vb);

    if !logits.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("logits".into()));
    }
    if !values.iter().all(|v| v.is_finite()) {
        return Err(Error::NonFinite("values".into()));
    }
    let cache = Cache {
        batch: b,
        col1,
        a1,
        col2,
        a2,
        inventory: input.inventory.clone(),
        h: hid,
    };
    Ok((logits, values, cache))
}

/// Forward pass on `[B,C,H,W]` observations and `[B,K]` inventory.
pub fn forward<T: Scalar>(params: &ParamSet<T>, obs: &Tensor<T>, inventory: &Tensor<T>) -> Result<(Tensor<T>, Tensor<T>)> {
    let input = Input::from_tensors(&params.arch, obs, inventory)?;
    let b = input.batch;
    let (logits, values, _) = forward_cached(params, &input)?;
    Ok((
        Tensor::from_vec(&[b, params.arch.actions], logits)?,
        Tensor::from_vec(&[b], values)?,
    ))
}

fn relu_mask<T: Scalar>(grad: &mut [T], act: &[T]) {
    for (g, a) in grad.iter_mut().zip(act) {
        if !(*a > T::ZERO) {
            *g = T::ZERO;
        }
    }
}

fn col_sum_into<T: Scalar>(dst: &mut [T], src: &[T]) {
    let n = dst.len();
    for row in src.chunks(n) {
        for (d, s) in dst.iter_mut().zip(row) {
            *d += *s;
        }
    }
}

/// Backpropagate head gradients `dlogits [B·A]` and `dvalues [B]` through the
/// network, *adding* into `grads`.
pub fn backward_from_heads<T: Scalar>(
    params: &ParamSet<T>,
    cache: &Cache<T>,
    dlogits: &[T],
    dvalues: &[T],
    grads: &mut ParamSet<T>,
) -> Result<()> {
    params.check_matches(grads)?;
    let arch = params.arch;
    let b = cache.batch;
    if dlogits.len() != b * arch.actions || dvalues.len() != b {
        return Err(Error::Shape(format!(
            "head gradients {}/{} for batch {}",
            dlogits.len(),
            dvalues.len(),
            b
        )));
    }
    let t = &params.tensors;
    let g = &mut grads.tensors;
    let (a, hd) = (arch.actions, arch.hidden);
    let rows = b * arch.cells();

    // heads
    gemm(a, b, hd, dlogits, (1, a), &cache.h, (hd, 1), T::ONE, g[PI_W].data_mut(), hd);
    col_sum_into(g[PI_B].data_mut(), dlogits);
    gemm(1, b, hd, dvalues, (1, 1), &cache.h, (hd, 1), T::ONE, g[V_W].data_mut(), hd);
    g[V_B].data_mut()[0] += dvalues.iter().fold(T::ZERO, |s, v| s + *v);

    let mut dh = vec![T::ZERO; b * hd];
    gemm(b, a, hd, dlogits, (a, 1), t[PI_W].data(), (hd, 1), T::ZERO, &mut dh, hd);
    let vw = t[V_W].data();
    for (row, dv) in dh.chunks_mut(hd).zip(dvalues) {
        for (d, w) in row.iter_mut().zip(vw) {
            *d += *dv * *w;
        }
    }
    relu_mask(&mut dh, &cache.h);

    // dense
    let flat = arch.flat();
    let fc_in = arch.fc_in();
    gemm(hd, b, flat, &dh, (1, hd), &cache.a2, (flat, 1), T::ONE, g[FC_W].data_mut(), fc_in);
    if arch.inventory > 0 {
        gemm(
            hd,
            b,
            arch.inventory,
            &dh,
            (1, hd),
            &cache.inventory,
            (arch.inventory, 1),
            T::ONE,
            &mut g[FC_W].data_mut()[flat..],
            fc_in,
        );
    }
    col_sum_into(g[FC_B].data_mut(), &dh);
    let mut da2 = vec![T::ZERO; b * flat];
    gemm(b, hd, flat, &dh, (hd, 1), t[FC_W].data(), (fc_in, 1), T::ZERO, &mut da2, flat);
    relu_mask(&mut da2, &cache.a2);

    // conv2
    let (c1, c2) = (arch.conv1, arch.conv2);
    let k2 = 9 * c1;
    gemm(c2, rows, k2, &da2, (1, c2), &cache.col2, (k2, 1), T::ONE, g[CONV2_W].data_mut(), k2);
    col_sum_into(g[CONV2_B].data_mut(), &da2);
    let mut dcol2 = vec![T::ZERO; rows * k2];
    gemm(rows, c2, k2, &da2, (c2, 1), t[CONV2_W].data(), (k2, 1), T::ZERO, &mut dcol2, k2);
    let mut da1 = col2im(&dcol2, b, arch.height, arch.width, c1);
    relu_mask(&mut da1, &cache.a1);

    // conv1
    let k1 = 9 * arch.channels;
    gemm(c1, rows, k1, &da1, (1, c1), &cache.col1, (k1, 1), T::ONE, g[CONV1_W].data_mut(), k1);
    col_sum_into(g[CONV1_B].data_mut(), &da1);

    if let Some(name) = grads.first_non_finite() {
        return Err(Error::NonFinite(format!("grad of {name}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tiny() -> Arch {
        Arch {
            channels: 3,
            height: 4,
            width: 5,
            inventory: 2,
            conv1: 4,
            conv2: 3,
            hidden: 6,
            actions: 4,
        }
    }

    fn random_input(arch: &Arch, b: usize, rng: &mut RngStream) -> (Tensor<f64>, Tensor<f64>) {
        let obs: Vec<f64> = (0..b * arch.obs_len()).map(|_| rng.next_f64()).collect();
        let inv: Vec<f64> = (0..b * arch.inventory).map(|_| rng.next_f64()).collect();
        (
            Tensor::from_vec(&[b, arch.channels, arch.height, arch.width], obs).unwrap(),
            Tensor::from_vec(&[b, arch.inventory], inv).unwrap(),
        )
    }

    #[test]
    fn zero_params_give_zero_outputs() {
        let arch = tiny();
        let p = ParamSet::<f64>::zeros(arch);
        let mut rng = RngStream::new(1, 0);
        let (obs, inv) = random_input(&arch, 3, &mut rng);
        let (l, v) = forward(&p, &obs, &inv).unwrap();
        assert!(l.data().iter().all(|&x| x == 0.0));
        assert!(v.data().iter().all(|&x| x == 0.0));
    }

    #[test]
    fn init_zeroes_heads_so_outputs_are_zero() {
        let arch = tiny();
        let p = ParamSet::<f64>::init(arch, &mut RngStream::new(3, 0));
        assert!(p.get("conv1.weight").unwrap().data().iter().any(|&x| x != 0.0));
        let (obs, inv) = random_input(&arch, 2, &mut RngStream::new(4, 0));
        let (l, v) = forward(&p, &obs, &inv).unwrap();
        assert!(l.data().iter().chain(v.data()).all(|&x| x == 0.0));
    }

    #[test]
    fn orthogonal_rows_are_orthonormal() {
        let mut rng = RngStream::new(5, 0);
        let m = orthogonal(4, 9, 1.0, &mut rng);
        for i in 0..4 {
            for j in 0..4 {
                let d: f64 = (0..9).map(|k| m[i * 9 + k] * m[j * 9 + k]).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((d - want).abs() < 1e-12);
            }
        }
        let tall = orthogonal(9, 4, 1.0, &mut rng);
        for i in 0..4 {
            let d: f64 = (0..9).map(|k| tall[k * 4 + i] * tall[k * 4 + i]).sum();
            assert!((d - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_rows_give_identical_outputs() {
        let arch = tiny();
        let mut rng = RngStream::new(8, 0);
        let mut p = ParamSet::<f64>::init(arch, &mut rng);
        for t in p.tensors_mut() {
            t.data_mut().iter_mut().for_each(|v| *v += rng.normal() * 0.1);
        }
        let (obs1, inv1) = random_input(&arch, 1, &mut rng);
        let obs = Tensor::from_vec(&[2, 3, 4, 5], [obs1.data(), obs1.data()].concat()).unwrap();
        let inv = Tensor::from_vec(&[2, 2], [inv1.data(), inv1.data()].concat()).unwrap();
        let (l, v) = forward(&p, &obs, &inv).unwrap();
        assert_eq!(l.data()[..4], l.data()[4..]);
        assert_eq!(v.data()[0], v.data()[1]);
        let (l2, v2) = forward(&p, &obs, &inv).unwrap();
        assert_eq!(l, l2);
        assert_eq!(v, v2);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let arch = tiny();
        let p = ParamSet::<f64>::zeros(arch);
        let obs = Tensor::<f64>::zeros(&[1, 3, 4, 4]);
        let inv = Tensor::<f64>::zeros(&[1, 2]);
        let err = forward(&p, &obs, &inv).unwrap_err();
        assert!(err.to_string().contains("shape"), "{err}");
        let obs = Tensor::<f64>::zeros(&[1, 3, 4, 5]);
        let inv = Tensor::<f64>::zeros(&[2, 2]);
        assert!(forward(&p, &obs, &inv).is_err());
    }

    #[test]
    fn from_named_checks_names_and_shapes() {
        let arch = tiny();
        let p = ParamSet::<f32>::zeros(arch);
        let named: Vec<_> = p.iter().map(|(n, t)| (n.to_string(), t.clone())).collect();
        assert!(ParamSet::from_named(arch, named.clone()).is_ok());
        let mut bad = named;
        bad[0].0 = "conv9.weight".into();
        assert!(ParamSet::from_named(arch, bad).is_err());
    }

    #[test]
    fn im2col_col2im_are_adjoint() {
        let mut rng = RngStream::new(2, 0);
        let (b, h, w, c) = (2, 3, 4, 2);
        let x: Vec<f64> = (0..b * h * w * c).map(|_| rng.normal()).collect();
        let y: Vec<f64> = (0..b * h * w * 9 * c).map(|_| rng.normal()).collect();
        let lhs: f64 = im2col(&x, b, h, w, c).iter().zip(&y).map(|(a, b)| a * b).sum();
        let rhs: f64 = col2im(&y, b, h, w, c).iter().zip(&x).map(|(a, b)| a * b).sum();
        assert!((lhs - rhs).abs() < 1e-10);
    }
}
