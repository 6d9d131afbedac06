//! Oracles and fixtures shared by the integration and acceptance tests.
#![allow(dead_code)]

use ndarray::{Array1, Array2};
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use spikebench::network::{forward, ForwardTrace, Network};
use spikebench::neuron::{encode, LifParams, SpikeRaster};
use spikebench::rng::rng_from_seed;
use spikebench::BinarySequence;

/// Quadratic exhaustive-history parser: each phrase is extended while it
/// still occurs as a substring of everything before its last symbol.
pub fn brute_lz76(s: &[u8]) -> usize {
    let n = s.len();
    let occurs = |hay: &[u8], needle: &[u8]| hay.windows(needle.len()).any(|w| w == needle);
    let (mut c, mut i) = (0, 0);
    while i < n {
        let mut k = 1;
        while i + k <= n && occurs(&s[..i + k - 1], &s[i..i + k]) {
            k += 1;
        }
        c += 1;
        i += k;
    }
    c
}

/// Low `len` bits of `x`, most significant first.
pub fn bits_of(x: u64, len: usize) -> Vec<u8> {
    (0..len).rev().map(|k| ((x >> k) & 1) as u8).collect()
}

pub fn random_bits(rng: &mut ChaCha8Rng, len: usize, p: f64) -> Vec<u8> {
    (0..len).map(|_| u8::from(rng.random_bool(p))).collect()
}

pub fn random_raster(rng: &mut ChaCha8Rng, n: usize, steps: usize, p: f64) -> Array2<u8> {
    Array2::from_shape_fn((n, steps), |_| u8::from(rng.random_bool(p)))
}

/// Trace built from arbitrary spike matrices; potentials mirror the spikes.
pub fn trace_from_spikes(x: Array2<u8>, h: Array2<u8>, o: Array2<u8>, params: LifParams) -> ForwardTrace {
    let dim = x.dim();
    ForwardTrace {
        input: SpikeRaster::from_spikes(x, params.dt),
        hidden: SpikeRaster::from_spikes(h, params.dt),
        output: SpikeRaster::from_spikes(o, params.dt),
        z_hidden: Array2::zeros(dim),
        z_output: Array2::zeros(dim),
        params,
    }
}

/// Network of any width with uniform weights in `[lo, hi]`.
pub fn random_network(rng: &mut ChaCha8Rng, n: usize, lo: f64, hi: f64, params: LifParams) -> Network {
    let mut w = || Array2::from_shape_fn((n, n), |_| rng.random_range(lo..=hi));
    let (w_ih, w_ho) = (w(), w());
    Network::from_parts(w_ih, w_ho, Array1::zeros(n), Array1::zeros(n), params).unwrap()
}

/// Simulated trace of `net` on `steps` random frames with firing
/// probability `p`.
pub fn simulated_trace(rng: &mut ChaCha8Rng, net: &Network, steps: usize, p: f64) -> ForwardTrace {
    let bits = random_bits(rng, net.n * steps, p);
    let seq = BinarySequence::new(bits).unwrap();
    forward(net, &encode(&seq, net.n).unwrap()).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    rng_from_seed(seed)
}

/// `||a - b|| / max(||b||, floor)` over flattened matrices.
pub fn relative_error(a: &[f64], b: &[f64], floor: f64) -> f64 {
    let diff: f64 = a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt();
    let norm: f64 = b.iter().map(|y| y * y).sum::<f64>().sqrt();
    diff / norm.max(floor)
}

/// Central finite differences of `loss` with respect to every entry of
/// `w_ih` followed by every entry of `w_ho`.
pub fn fd_gradient(net: &Network, h: f64, loss: impl Fn(&Network) -> f64) -> Vec<f64> {
    let mut out = Vec::with_capacity(2 * net.n * net.n);
    for layer in 0..2 {
        for idx in 0..net.n * net.n {
            let (i, j) = (idx / net.n, idx % net.n);
            let at = |delta: f64| {
                let mut p = net.clone();
                let w = if layer == 0 { &mut p.w_ih } else { &mut p.w_ho };
                w[[i, j]] += delta;
                loss(&p)
            };
            out.push((at(h) - at(-h)) / (2.0 * h));
        }
    }
    out
}
