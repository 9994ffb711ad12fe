//! Forward pass, head and hand-written backpropagation.
//!
//! Max-pooling is applied to the convolution pre-activations and the ReLU
//! after it; `relu(max(z)) == max(relu(z))`, so this is the same function as
//! ReLU-then-pool, and the backward pass only has to visit pool winners.

use super::{PairExample, ParamSet, Tensor, EMBEDDING_DIM, FLAT_DIM, INPUT_COEFFS, INPUT_FRAMES};

const IN_H: usize = INPUT_COEFFS;
const IN_W: usize = INPUT_FRAMES;

const C1: usize = 8;
const K1H: usize = 3;
const K1W: usize = 7;
const H1: usize = IN_H - K1H + 1; // 11
const W1: usize = IN_W - K1W + 1; // 194
const P1H: usize = H1 / 2; // 5
const P1W: usize = W1 / 2; // 97

const C2: usize = 16;
const K2H: usize = 3;
const K2W: usize = 5;
const H2: usize = P1H - K2H + 1; // 3
const W2: usize = P1W - K2W + 1; // 93
const P2H: usize = H2 / 2; // 1
const P2W: usize = W2 / 2; // 46

const _: () = assert!(C2 * P2H * P2W == FLAT_DIM);

/// Sigmoid, kept strictly inside (0, 1): where the exact value rounds to 0
/// or 1 in `f64` it saturates at the nearest representable value instead.
pub fn sigmoid(x: f64) -> f64 {
    let y = if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    };
    y.clamp(f64::MIN_POSITIVE, 1.0 - f64::EPSILON / 2.0)
}

const BCE_CLAMP: f64 = 1e-12;

/// Binary cross-entropy `-(y ln p + (1 - y) ln(1 - p))` with `p` clamped to
/// `[1e-12, 1 - 1e-12]`.
pub fn bce_loss(p: f64, y: f64) -> f64 {
    let p = p.clamp(BCE_CLAMP, 1.0 - BCE_CLAMP);
    -(y * p.ln() + (1.0 - y) * (1.0 - p).ln())
}

/// Everything the backward pass needs from one embedding.
pub(crate) struct Forward {
    image: Vec<f64>,
    z1: Vec<f64>,
    p1: Vec<f64>,
    arg1: Vec<usize>,
    z2: Vec<f64>,
    p2: Vec<f64>,
    arg2: Vec<usize>,
    pub embedding: Vec<f64>,
}

#[inline]
fn axpy(y: &mut [f64], a: f64, x: &[f64]) {
    for (yi, xi) in y.iter_mut().zip(x) {
        *yi += a * xi;
    }
}

/// Max-pools `planes` planes of `h x w` over 2x2 windows (floor on odd
/// sizes), returning `(relu(max), argmax index into z)`.
fn pool(z: &[f64], planes: usize, h: usize, w: usize) -> (Vec<f64>, Vec<usize>) {
    let (ph, pw) = (h / 2, w / 2);
    let mut out = Vec::with_capacity(planes * ph * pw);
    let mut arg = Vec::with_capacity(planes * ph * pw);
    for c in 0..planes {
        let base = c * h * w;
        for i in 0..ph {
            for j in 0..pw {
                let mut best = base + 2 * i * w + 2 * j;
                for idx in [best + 1, best + w, best + w + 1] {
                    if z[idx] > z[best] {
                        best = idx;
                    }
                }
                out.push(z[best].max(0.0));
                arg.push(best);
            }
        }
    }
    (out, arg)
}

pub(crate) fn forward(params: &ParamSet, frames_by_coeffs: &[f64]) -> Forward {
    // frames x coeffs (row-major) -> coeffs x frames image
    let mut image = vec![0.0; IN_H * IN_W];
    for t in 0..IN_W {
        for c in 0..IN_H {
            image[c * IN_W + t] = frames_by_coeffs[t * IN_H + c];
        }
    }

    let w1 = params.get(Tensor::Conv1Weight);
    let b1 = params.get(Tensor::Conv1Bias);
    let mut z1 = vec![0.0; C1 * H1 * W1];
    for f in 0..C1 {
        let plane = &mut z1[f * H1 * W1..(f + 1) * H1 * W1];
        plane.fill(b1[f]);
        for u in 0..K1H {
            for v in 0..K1W {
                let w = w1[(f * K1H + u) * K1W + v];
                for i in 0..H1 {
                    let src = (i + u) * IN_W + v;
                    axpy(&mut plane[i * W1..(i + 1) * W1], w, &image[src..src + W1]);
                }
            }
        }
    }
    let (p1, arg1) = pool(&z1, C1, H1, W1);

    let w2 = params.get(Tensor::Conv2Weight);
    let b2 = params.get(Tensor::Conv2Bias);
    let mut z2 = vec![0.0; C2 * H2 * W2];
    for g in 0..C2 {
        let plane = &mut z2[g * H2 * W2..(g + 1) * H2 * W2];
        plane.fill(b2[g]);
        for f in 0..C1 {
            let input = &p1[f * P1H * P1W..(f + 1) * P1H * P1W];
            for u in 0..K2H {
                for v in 0..K2W {
                    let w = w2[((g * C1 + f) * K2H + u) * K2W + v];
                    for i in 0..H2 {
                        let src = (i + u) * P1W + v;
                        axpy(&mut plane[i * W2..(i + 1) * W2], w, &input[src..src + W2]);
                    }
                }
            }
        }
    }
    let (p2, arg2) = pool(&z2, C2, H2, W2);

    let fw = params.get(Tensor::FcWeight);
    let mut pre = params.get(Tensor::FcBias).to_vec();
    for (m, &h) in p2.iter().enumerate() {
        if h != 0.0 {
            axpy(&mut pre, h, &fw[m * EMBEDDING_DIM..(m + 1) * EMBEDDING_DIM]);
        }
    }
    let embedding = pre.into_iter().map(sigmoid).collect();

    Forward {
        image,
        z1,
        p1,
        arg1,
        z2,
        p2,
        arg2,
        embedding,
    }
}

/// `(s, sigmoid(s))` with `s = sum_j alpha_j |ea_j - eb_j| + b`.
pub(crate) fn head(params: &ParamSet, ea: &[f64], eb: &[f64]) -> (f64, f64) {
    let alpha = params.get(Tensor::HeadAlpha);
    let mut s = params.get(Tensor::HeadBias)[0];
    for j in 0..EMBEDDING_DIM {
        s += alpha[j] * (ea[j] - eb[j]).abs();
    }
    (s, sigmoid(s))
}

/// Accumulates into `grads` the gradient flowing back from `grad_embedding`
/// through one twin.
fn backward_embedding(params: &ParamSet, fwd: &Forward, grad_embedding: &[f64], grads: &mut ParamSet) {
    let grad_pre: Vec<f64> = grad_embedding
        .iter()
        .zip(&fwd.embedding)
        .map(|(g, e)| g * e * (1.0 - e))
        .collect();
    if grad_pre.iter().all(|&g| g == 0.0) {
        return;
    }

    // dense layer
    for (gb, g) in grads.get_mut(Tensor::FcBias).iter_mut().zip(&grad_pre) {
        *gb += g;
    }
    {
        let gw = grads.get_mut(Tensor::FcWeight);
        for (m, &h) in fwd.p2.iter().enumerate() {
            if h != 0.0 {
                axpy(&mut gw[m * EMBEDDING_DIM..(m + 1) * EMBEDDING_DIM], h, &grad_pre);
            }
        }
    }
    let fw = params.get(Tensor::FcWeight);
    let grad_flat: Vec<f64> = (0..FLAT_DIM)
        .map(|m| {
            fw[m * EMBEDDING_DIM..(m + 1) * EMBEDDING_DIM]
                .iter()
                .zip(&grad_pre)
                .map(|(w, g)| w * g)
                .sum()
        })
        .collect();

    // pool 2 + ReLU -> conv 2; only pool winners with positive input carry gradient
    let w2 = params.get(Tensor::Conv2Weight);
    let mut grad_p1 = vec![0.0; C1 * P1H * P1W];
    for (m, &g) in grad_flat.iter().enumerate() {
        let at = fwd.arg2[m];
        if g == 0.0 || fwd.z2[at] <= 0.0 {
            continue;
        }
        let (c, rem) = (at / (H2 * W2), at % (H2 * W2));
        let (i, j) = (rem / W2, rem % W2);
        grads.get_mut(Tensor::Conv2Bias)[c] += g;
        let gw2 = grads.get_mut(Tensor::Conv2Weight);
        for f in 0..C1 {
            for u in 0..K2H {
                let row = f * P1H * P1W + (i + u) * P1W + j;
                let k = ((c * C1 + f) * K2H + u) * K2W;
                for v in 0..K2W {
                    gw2[k + v] += g * fwd.p1[row + v];
                    grad_p1[row + v] += g * w2[k + v];
                }
            }
        }
    }

    // pool 1 + ReLU -> conv 1
    let gw1_len = C1 * K1H * K1W;
    let mut gw1 = vec![0.0; gw1_len];
    let mut gb1 = [0.0; C1];
    for (q, &g) in grad_p1.iter().enumerate() {
        let at = fwd.arg1[q];
        if g == 0.0 || fwd.z1[at] <= 0.0 {
            continue;
        }
        let (f, rem) = (at / (H1 * W1), at % (H1 * W1));
        let (i, j) = (rem / W1, rem % W1);
        gb1[f] += g;
        for u in 0..K1H {
            let row = (i + u) * IN_W + j;
            let k = (f * K1H + u) * K1W;
            for v in 0..K1W {
                gw1[k + v] += g * fwd.image[row + v];
            }
        }
    }
    for (dst, src) in grads.get_mut(Tensor::Conv1Weight).iter_mut().zip(&gw1) {
        *dst += src;
    }
    for (dst, src) in grads.get_mut(Tensor::Conv1Bias).iter_mut().zip(&gb1) {
        *dst += src;
    }
}

/// Mean BCE over `batch` and its gradient. Both twins' gradients land in the
/// one shared parameter set.
pub(crate) fn batch_gradients(params: &ParamSet, batch: &[PairExample]) -> (f64, ParamSet) {
    let mut grads = ParamSet::zeros();
    let scale = 1.0 / batch.len() as f64;
    let mut total = 0.0;
    let alpha = params.get(Tensor::HeadAlpha);
    for pair in batch {
        let fa = forward(params, pair.a.values());
        let fb = forward(params, pair.b.values());
        let (_, p) = head(params, &fa.embedding, &fb.embedding);
        let y = pair.label();
        total += bce_loss(p, y);

        // d(bce)/ds for a sigmoid output
        let gs = (p - y) * scale;
        grads.get_mut(Tensor::HeadBias)[0] += gs;
        let mut grad_a = vec![0.0; EMBEDDING_DIM];
        {
            let galpha = grads.get_mut(Tensor::HeadAlpha);
            for j in 0..EMBEDDING_DIM {
                let d = fa.embedding[j] - fb.embedding[j];
                galpha[j] += gs * d.abs();
                grad_a[j] = gs * alpha[j] * sign(d);
            }
        }
        let grad_b: Vec<f64> = grad_a.iter().map(|g| -g).collect();
        backward_embedding(params, &fa, &grad_a, &mut grads);
        backward_embedding(params, &fb, &grad_b, &mut grads);
    }
    (total * scale, grads)
}

fn sign(x: f64) -> f64 {
    if x > 0.0 {
        1.0
    } else if x < 0.0 {
        -1.0
    } else {
        0.0
    }
}

/// Piecewise-linear choices made by a forward pass over a pair: every ReLU
/// sign, every max-pool winner and the sign of each embedding difference.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct ActivationSignature(Vec<u64>);

pub(crate) fn signature(params: &ParamSet, pair: &PairExample) -> ActivationSignature {
    let fa = forward(params, pair.a.values());
    let fb = forward(params, pair.b.values());
    let mut words = Vec::new();
    for fwd in [&fa, &fb] {
        push_bits(&mut words, fwd.z1.iter().map(|&z| z > 0.0));
        push_bits(&mut words, fwd.z2.iter().map(|&z| z > 0.0));
        words.extend(fwd.arg1.iter().chain(&fwd.arg2).map(|&a| a as u64));
    }
    words.extend(
        fa.embedding
            .iter()
            .zip(&fb.embedding)
            .map(|(a, b)| (sign(a - b) + 1.0) as u64),
    );
    ActivationSignature(words)
}

fn push_bits(words: &mut Vec<u64>, bits: impl Iterator<Item = bool>) {
    let mut word = 0u64;
    let mut n = 0;
    for bit in bits {
        word |= (bit as u64) << n;
        n += 1;
        if n == 64 {
            words.push(word);
            word = 0;
            n = 0;
        }
    }
    words.push(word);
}
