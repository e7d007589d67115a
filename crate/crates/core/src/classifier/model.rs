//! Two-layer convolutional network with global average pooling.
//!
//! ```text
//! input [H x W] -> conv3x3 (1 -> c1, same) -> ReLU -> avgpool 2x2
//!               -> conv3x3 (c1 -> c2, same) -> ReLU -> global avg pool
//!               -> dense (c2 -> classes) -> softmax
//! ```
//!
//! Pooling uses ceil mode and averages only the cells that exist, so inputs as
//! small as 1 x 1 are accepted. Global pooling makes the parameter count
//! independent of the spectrogram shape.

use rand::distr::{Distribution, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::extractor::Spectrogram;
use crate::scalar::Scalar;

const K: usize = 3;
const TAPS: usize = K * K;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Architecture {
    pub conv1_channels: usize,
    pub conv2_channels: usize,
    pub n_classes: usize,
}

impl Default for Architecture {
    fn default() -> Self {
        Self {
            conv1_channels: 16,
            conv2_channels: 32,
            n_classes: crate::dataset::N_CLASSES,
        }
    }
}

/// Network parameters. The same layout doubles as a gradient container.
#[derive(Debug, Clone, PartialEq)]
pub struct SmallNet<T> {
    pub arch: Architecture,
    /// `[c1][3][3]`
    pub conv1_w: Vec<T>,
    pub conv1_b: Vec<T>,
    /// `[c2][c1][3][3]`
    pub conv2_w: Vec<T>,
    pub conv2_b: Vec<T>,
    /// `[classes][c2]`
    pub fc_w: Vec<T>,
    pub fc_b: Vec<T>,
}

pub type Gradients<T> = SmallNet<T>;

/// Names of the parameter tensors in storage order.
pub const TENSOR_NAMES: [&str; 6] = ["conv1.weight", "conv1.bias", "conv2.weight", "conv2.bias", "fc.weight", "fc.bias"];

/// Which tensors are weights (L2-penalized) rather than biases.
pub const IS_WEIGHT: [bool; 6] = [true, false, true, false, true, false];

impl<T: Scalar> SmallNet<T> {
    pub fn zeros(arch: Architecture) -> Self {
        let Architecture {
            conv1_channels: c1,
            conv2_channels: c2,
            n_classes: k,
        } = arch;
        Self {
            arch,
            conv1_w: vec![T::zero(); c1 * TAPS],
            conv1_b: vec![T::zero(); c1],
            conv2_w: vec![T::zero(); c2 * c1 * TAPS],
            conv2_b: vec![T::zero(); c2],
            fc_w: vec![T::zero(); k * c2],
            fc_b: vec![T::zero(); k],
        }
    }

    pub fn tensors(&self) -> [&[T]; 6] {
        [&self.conv1_w, &self.conv1_b, &self.conv2_w, &self.conv2_b, &self.fc_w, &self.fc_b]
    }

    pub fn tensors_mut(&mut self) -> [&mut Vec<T>; 6] {
        [
            &mut self.conv1_w,
            &mut self.conv1_b,
            &mut self.conv2_w,
            &mut self.conv2_b,
            &mut self.fc_w,
            &mut self.fc_b,
        ]
    }

    pub fn n_parameters(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    /// Sum of squared weights (biases excluded).
    pub fn weight_sq_norm(&self) -> T {
        self.tensors()
            .iter()
            .zip(IS_WEIGHT)
            .filter(|(_, w)| *w)
            .map(|(t, _)| t.iter().map(|&v| v * v).sum::<T>())
            .sum()
    }

    pub fn cast<U: Scalar>(&self) -> SmallNet<U> {
        let c = |v: &[T]| v.iter().map(|x| U::lit(x.to_f64_lossy())).collect();
        SmallNet {
            arch: self.arch,
            conv1_w: c(&self.conv1_w),
            conv1_b: c(&self.conv1_b),
            conv2_w: c(&self.conv2_w),
            conv2_b: c(&self.conv2_b),
            fc_w: c(&self.fc_w),
            fc_b: c(&self.fc_b),
        }
    }

    pub(crate) fn add_assign(&mut self, other: &Self) {
        for (dst, src) in self.tensors_mut().into_iter().zip(other.tensors()) {
            for (d, s) in dst.iter_mut().zip(src) {
                *d += *s;
            }
        }
    }
}

/// Fan-in scaled uniform initialization with zero biases: He-uniform bounds
/// `sqrt(6 / fan_in)` for the ReLU convolutions, `sqrt(1 / fan_in)` for the
/// output layer.
pub fn init_model<T: Scalar>(seed: u64, arch: Architecture) -> SmallNet<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut net = SmallNet::zeros(arch);
    let mut fill = |v: &mut Vec<T>, bound: f64| {
        let dist = Uniform::new(-bound, bound).expect("positive bound");
        v.iter_mut().for_each(|w| *w = T::lit(dist.sample(&mut rng)));
    };
    fill(&mut net.conv1_w, (6.0 / TAPS as f64).sqrt());
    fill(&mut net.conv2_w, (6.0 / (arch.conv1_channels * TAPS) as f64).sqrt());
    fill(&mut net.fc_w, (1.0 / arch.conv2_channels as f64).sqrt());
    net
}

/// Numerically stable softmax.
pub fn softmax<T: Scalar>(logits: &[T]) -> Vec<T> {
    let max = logits.iter().copied().fold(T::neg_infinity(), T::max);
    let exps: Vec<T> = logits.iter().map(|&l| (l - max).exp()).collect();
    let total: T = exps.iter().copied().sum();
    exps.into_iter().map(|e| e / total).collect()
}

// Feature planes are stored zero-padded by one cell on each side, as
// `(h + 2) x (w + 2)` arrays, and convolution outputs use "wide" rows of
// `w + 2` cells whose last two cells are scratch. Each 3x3 tap is then a single
// contiguous slice operation over the whole plane.

/// Number of wide output cells a tap touches.
fn span(h: usize, w: usize) -> usize {
    h * (w + 2) - 2
}

fn tap_offset(tap: usize, stride: usize) -> usize {
    (tap / K) * stride + tap % K
}

#[inline]
fn axpy<T: Scalar>(a: T, x: &[T], y: &mut [T]) {
    for (y, x) in y.iter_mut().zip(x) {
        *y += a * *x;
    }
}

/// Dot product with sixteen interleaved partial sums, combined in a fixed order.
#[inline]
fn dot<T: Scalar>(a: &[T], b: &[T]) -> T {
    const LANES: usize = 16;
    let n = a.len().min(b.len());
    let (a, b) = (&a[..n], &b[..n]);
    let mut acc = [T::zero(); LANES];
    let (ca, cb) = (a.chunks_exact(LANES), b.chunks_exact(LANES));
    let tail: T = ca.remainder().iter().zip(cb.remainder()).map(|(x, y)| *x * *y).sum();
    for (x, y) in ca.zip(cb) {
        for l in 0..LANES {
            acc[l] += x[l] * y[l];
        }
    }
    let mut width = LANES;
    while width > 1 {
        width /= 2;
        for l in 0..width {
            acc[l] += acc[l + width];
        }
    }
    acc[0] + tail
}

fn pad<T: Scalar>(x: &[T], h: usize, w: usize) -> Vec<T> {
    let s = w + 2;
    let mut out = vec![T::zero(); (h + 2) * s];
    for y in 0..h {
        out[(y + 1) * s + 1..(y + 1) * s + 1 + w].copy_from_slice(&x[y * w..(y + 1) * w]);
    }
    out
}

/// `out += conv(input, kernel)` with zero "same" padding; `padded` is a padded
/// plane and `out` a wide one.
fn conv3x3_wide<T: Scalar>(padded: &[T], h: usize, w: usize, kernel: &[T], out: &mut [T]) {
    let n = span(h, w);
    for (tap, &k) in kernel.iter().enumerate() {
        let off = tap_offset(tap, w + 2);
        axpy(k, &padded[off..off + n], &mut out[..n]);
    }
}

/// Kernel gradient and, if requested, padded-input gradient of [`conv3x3_wide`].
/// `dout` must hold zeros in its scratch cells.
fn conv3x3_wide_backward<T: Scalar>(
    padded: &[T],
    h: usize,
    w: usize,
    kernel: &[T],
    dout: &[T],
    dkernel: &mut [T],
    mut dpadded: Option<&mut [T]>,
) {
    let n = span(h, w);
    for (tap, &k) in kernel.iter().enumerate() {
        let off = tap_offset(tap, w + 2);
        dkernel[tap] += dot(&dout[..n], &padded[off..off + n]);
        if let Some(dp) = dpadded.as_deref_mut() {
            axpy(k, &dout[..n], &mut dp[off..off + n]);
        }
    }
}

fn pooled_dim(n: usize) -> usize {
    n.div_ceil(2)
}

/// 2x2 average pooling from a wide plane into the interior of a padded plane.
fn avg_pool2<T: Scalar>(inp: &[T], h: usize, w: usize, out: &mut [T]) {
    let (h2, w2) = (pooled_dim(h), pooled_dim(w));
    let (si, so) = (w + 2, w2 + 2);
    for y2 in 0..h2 {
        for x2 in 0..w2 {
            let mut s = T::zero();
            let mut n = 0usize;
            for y in 2 * y2..(2 * y2 + 2).min(h) {
                for x in 2 * x2..(2 * x2 + 2).min(w) {
                    s += inp[y * si + x];
                    n += 1;
                }
            }
            out[(y2 + 1) * so + x2 + 1] = s / T::lit(n as f64);
        }
    }
}

/// Spreads the interior of a padded gradient plane back over a wide plane; scratch cells become zero.
fn avg_pool2_backward<T: Scalar>(dout: &[T], h: usize, w: usize, dinp: &mut [T]) {
    let (si, so) = (w + 2, pooled_dim(w) + 2);
    for y in 0..h {
        let ny = if (y | 1) < h { 2 } else { 1 };
        for x in 0..w {
            let nx = if (x | 1) < w { 2 } else { 1 };
            dinp[y * si + x] = dout[(y / 2 + 1) * so + x / 2 + 1] / T::lit((ny * nx) as f64);
        }
        dinp[y * si + w] = T::zero();
        dinp[y * si + w + 1] = T::zero();
    }
}

/// Intermediate values of one forward pass, kept for backpropagation.
struct Trace<T> {
    h: usize,
    w: usize,
    h2: usize,
    w2: usize,
    xp: Vec<T>,
    /// Wide pre-activation planes of the first convolution.
    z1: Vec<T>,
    /// Padded pooled planes.
    p1: Vec<T>,
    /// Wide pre-activation planes of the second convolution.
    z2: Vec<T>,
    pooled: Vec<T>,
    logits: Vec<T>,
}

impl<T: Scalar> SmallNet<T> {
    fn trace(&self, x: &[T], h: usize, w: usize) -> Trace<T> {
        assert_eq!(x.len(), h * w, "input buffer does not match its shape");
        assert!(h >= 1 && w >= 1, "empty input");
        let Architecture {
            conv1_channels: c1,
            conv2_channels: c2,
            n_classes: k,
        } = self.arch;
        let (h2, w2) = (pooled_dim(h), pooled_dim(w));
        let wide1 = h * (w + 2);
        let pad2 = (h2 + 2) * (w2 + 2);
        let wide2 = h2 * (w2 + 2);
        let xp = pad(x, h, w);

        let mut z1 = vec![T::zero(); c1 * wide1];
        let mut p1 = vec![T::zero(); c1 * pad2];
        let mut relu = vec![T::zero(); wide1];
        for c in 0..c1 {
            let plane = &mut z1[c * wide1..(c + 1) * wide1];
            plane.iter_mut().for_each(|v| *v = self.conv1_b[c]);
            conv3x3_wide(&xp, h, w, &self.conv1_w[c * TAPS..(c + 1) * TAPS], plane);
            for (r, z) in relu.iter_mut().zip(plane.iter()) {
                *r = z.max(T::zero());
            }
            avg_pool2(&relu, h, w, &mut p1[c * pad2..(c + 1) * pad2]);
        }

        let mut z2 = vec![T::zero(); c2 * wide2];
        let mut pooled = vec![T::zero(); c2];
        let inv = T::one() / T::lit((h2 * w2) as f64);
        for o in 0..c2 {
            let plane = &mut z2[o * wide2..(o + 1) * wide2];
            plane.iter_mut().for_each(|v| *v = self.conv2_b[o]);
            for i in 0..c1 {
                let kern = &self.conv2_w[(o * c1 + i) * TAPS..(o * c1 + i + 1) * TAPS];
                conv3x3_wide(&p1[i * pad2..(i + 1) * pad2], h2, w2, kern, plane);
            }
            let total: T = plane
                .chunks_exact(w2 + 2)
                .map(|row| row[..w2].iter().map(|v| v.max(T::zero())).sum::<T>())
                .sum();
            pooled[o] = total * inv;
        }

        let logits = (0..k)
            .map(|j| {
                self.fc_b[j]
                    + self.fc_w[j * c2..(j + 1) * c2]
                        .iter()
                        .zip(&pooled)
                        .map(|(a, b)| *a * *b)
                        .sum::<T>()
            })
            .collect();
        Trace {
            h,
            w,
            h2,
            w2,
            xp,
            z1,
            p1,
            z2,
            pooled,
            logits,
        }
    }

    /// Class logits for a `[h x w]` row-major input.
    pub fn logits(&self, x: &[T], h: usize, w: usize) -> Vec<T> {
        self.trace(x, h, w).logits
    }

    /// Accumulates into `grads` the gradient of `-ln p[label]` scaled by `scale`;
    /// returns the unscaled loss and the logits.
    fn backprop(&self, x: &[T], h: usize, w: usize, label: usize, scale: T, grads: &mut Gradients<T>) -> (T, Vec<T>) {
        let Architecture {
            conv1_channels: c1,
            conv2_channels: c2,
            n_classes: k,
        } = self.arch;
        let t = self.trace(x, h, w);
        let probs = softmax(&t.logits);
        let loss = -probs[label].max(T::min_positive_value()).ln();
        let (h2, w2) = (t.h2, t.w2);
        let wide1 = t.h * (t.w + 2);
        let pad2 = (h2 + 2) * (w2 + 2);
        let wide2 = h2 * (w2 + 2);

        // Dense layer.
        let mut dpooled = vec![T::zero(); c2];
        for j in 0..k {
            let d = (probs[j] - if j == label { T::one() } else { T::zero() }) * scale;
            grads.fc_b[j] += d;
            let row = &self.fc_w[j * c2..(j + 1) * c2];
            let grow = &mut grads.fc_w[j * c2..(j + 1) * c2];
            for c in 0..c2 {
                grow[c] += d * t.pooled[c];
                dpooled[c] += d * row[c];
            }
        }

        // Global pooling + ReLU + second convolution.
        let inv = T::one() / T::lit((h2 * w2) as f64);
        let mut dp1 = vec![T::zero(); c1 * pad2];
        let mut dz = vec![T::zero(); wide2];
        for o in 0..c2 {
            let g = dpooled[o] * inv;
            let z = &t.z2[o * wide2..(o + 1) * wide2];
            let mut any = false;
            for (drow, zrow) in dz.chunks_exact_mut(w2 + 2).zip(z.chunks_exact(w2 + 2)) {
                for (d, zv) in drow[..w2].iter_mut().zip(zrow) {
                    *d = if *zv > T::zero() {
                        any = true;
                        g
                    } else {
                        T::zero()
                    };
                }
            }
            if !any {
                continue;
            }
            grads.conv2_b[o] += dz.iter().copied().sum::<T>();
            for i in 0..c1 {
                let off = (o * c1 + i) * TAPS;
                conv3x3_wide_backward(
                    &t.p1[i * pad2..(i + 1) * pad2],
                    h2,
                    w2,
                    &self.conv2_w[off..off + TAPS],
                    &dz,
                    &mut grads.conv2_w[off..off + TAPS],
                    Some(&mut dp1[i * pad2..(i + 1) * pad2]),
                );
            }
        }

        // Pooling + ReLU + first convolution.
        let mut da = vec![T::zero(); wide1];
        for c in 0..c1 {
            avg_pool2_backward(&dp1[c * pad2..(c + 1) * pad2], t.h, t.w, &mut da);
            let z = &t.z1[c * wide1..(c + 1) * wide1];
            for (d, zv) in da.iter_mut().zip(z) {
                if *zv <= T::zero() {
                    *d = T::zero();
                }
            }
            grads.conv1_b[c] += da.iter().copied().sum::<T>();
            conv3x3_wide_backward(
                &t.xp,
                t.h,
                t.w,
                &self.conv1_w[c * TAPS..(c + 1) * TAPS],
                &da,
                &mut grads.conv1_w[c * TAPS..(c + 1) * TAPS],
                None,
            );
        }
        (loss, t.logits)
    }
}

/// A normalized spectrogram with its class label.
#[derive(Debug, Clone, PartialEq)]
pub struct Example<T> {
    pub features: Spectrogram<T>,
    pub label: usize,
}

/// Softmax class probabilities for one spectrogram.
pub fn forward<T: Scalar>(model: &SmallNet<T>, s: &Spectrogram<T>) -> Vec<T> {
    softmax(&model.logits(&s.values, s.n_channels, s.n_frames))
}

/// Index of the largest value; ties go to the lowest index.
pub fn argmax<T: Scalar>(v: &[T]) -> usize {
    let mut best = 0;
    for (i, x) in v.iter().enumerate().skip(1) {
        if *x > v[best] {
            best = i;
        }
    }
    best
}

pub(crate) struct BatchStats<T> {
    /// Mean cross-entropy plus the L2 penalty.
    pub loss: T,
    pub grads: Gradients<T>,
    pub correct: usize,
}

/// Loss and full gradient over a batch. Per-example gradients are computed in
/// parallel and summed in batch order, so the result does not depend on the
/// thread count.
pub(crate) fn batch_stats<T: Scalar>(model: &SmallNet<T>, batch: &[&Example<T>], l2: T) -> BatchStats<T> {
    assert!(!batch.is_empty(), "empty batch");
    let scale = T::one() / T::lit(batch.len() as f64);
    let per_example: Vec<(T, Gradients<T>, bool)> = batch
        .par_iter()
        .map(|ex| {
            let mut g = SmallNet::zeros(model.arch);
            let s = &ex.features;
            let (loss, logits) = model.backprop(&s.values, s.n_channels, s.n_frames, ex.label, scale, &mut g);
            (loss, g, argmax(&logits) == ex.label)
        })
        .collect();

    let mut grads = SmallNet::zeros(model.arch);
    let mut data_loss = T::zero();
    let mut correct = 0;
    for (loss, g, hit) in &per_example {
        grads.add_assign(g);
        data_loss += *loss;
        correct += usize::from(*hit);
    }
    let mut loss = data_loss * scale;
    if l2 > T::zero() {
        loss += l2 * T::lit(0.5) * model.weight_sq_norm();
        for ((gt, wt), is_w) in grads.tensors_mut().into_iter().zip(model.tensors()).zip(IS_WEIGHT) {
            if is_w {
                for (g, w) in gt.iter_mut().zip(wt) {
                    *g += l2 * *w;
                }
            }
        }
    }
    BatchStats { loss, grads, correct }
}

/// Mean cross-entropy plus `(l2 / 2) * sum(w^2)` over weights, with gradients
/// for every parameter.
pub fn loss_and_gradients<T: Scalar>(model: &SmallNet<T>, batch: &[&Example<T>], l2: T) -> (T, Gradients<T>) {
    let s = batch_stats(model, batch, l2);
    (s.loss, s.grads)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn arch_small() -> Architecture {
        Architecture {
            conv1_channels: 3,
            conv2_channels: 4,
            n_classes: 5,
        }
    }

    #[test]
    fn conv_matches_naive_definition() {
        for (h, w) in [(4, 5), (1, 1), (3, 40)] {
            let x: Vec<f64> = (0..h * w).map(|i| (i as f64 * 0.37).sin()).collect();
            let k: Vec<f64> = (0..9).map(|i| i as f64 - 4.0).collect();
            let mut out = vec![0.0; h * (w + 2)];
            conv3x3_wide(&pad(&x, h, w), h, w, &k, &mut out);
            for y in 0..h as isize {
                for xx in 0..w as isize {
                    let mut s = 0.0;
                    for ky in 0..3isize {
                        for kx in 0..3isize {
                            let (iy, ix) = (y + ky - 1, xx + kx - 1);
                            if iy >= 0 && iy < h as isize && ix >= 0 && ix < w as isize {
                                s += k[(ky * 3 + kx) as usize] * x[(iy * w as isize + ix) as usize];
                            }
                        }
                    }
                    assert!((out[y as usize * (w + 2) + xx as usize] - s).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn dot_matches_sequential_sum() {
        let a: Vec<f64> = (0..37).map(|i| i as f64 * 0.5).collect();
        let b: Vec<f64> = (0..37).map(|i| 1.0 - i as f64 * 0.25).collect();
        let want: f64 = a.iter().zip(&b).map(|(x, y)| x * y).sum();
        assert!((dot(&a, &b) - want).abs() < 1e-9);
    }

    #[test]
    fn ceil_mode_pooling_averages_existing_cells() {
        // 2 x 3 input in wide layout (stride 5).
        let x = [1.0, 2.0, 3.0, 9.0, 9.0, 4.0, 5.0, 6.0, 9.0, 9.0];
        let mut out = [0.0; 3 * 4];
        avg_pool2(&x, 2, 3, &mut out);
        assert_eq!(out[5..7], [(1.0 + 2.0 + 4.0 + 5.0) / 4.0, (3.0 + 6.0) / 2.0]);
        assert!(out.iter().enumerate().all(|(i, v)| (5..7).contains(&i) || *v == 0.0));
        let mut grad = [7.0; 3 * 4];
        grad[5] = 4.0;
        grad[6] = 2.0;
        let mut back = [9.0; 10];
        avg_pool2_backward(&grad, 2, 3, &mut back);
        assert_eq!(back, [1.0, 1.0, 1.0, 0.0, 0.0, 1.0, 1.0, 1.0, 0.0, 0.0]);
    }

    #[test]
    fn accepts_degenerate_shapes() {
        let net: SmallNet<f64> = init_model(1, arch_small());
        for (h, w) in [(1, 1), (1, 99), (2, 2), (3, 7)] {
            let p = softmax(&net.logits(&vec![0.5; h * w], h, w));
            assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn argmax_prefers_lowest_index_on_ties() {
        assert_eq!(argmax(&[0.2, 0.5, 0.5, 0.1]), 1);
        assert_eq!(argmax(&[1.0f32, 1.0]), 0);
    }

    #[test]
    fn softmax_is_shift_invariant() {
        let l = [0.3, -1.2, 2.5, 0.0];
        let shifted: Vec<f64> = l.iter().map(|v| v + 123.4).collect();
        for (a, b) in softmax(&l).iter().zip(softmax(&shifted)) {
            assert!((a - b).abs() < 1e-9);
        }
    }
}
