#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use wavelet_comove::dwt::WaveletFilter;

pub fn gaussian(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| rng.sample::<f64, _>(StandardNormal))
        .collect()
}

pub fn circular_convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    for (i, x) in a.iter().enumerate() {
        for (j, y) in b.iter().enumerate() {
            out[i + j] += x * y;
        }
    }
    out
}

fn upsample(f: &[f64], factor: usize) -> Vec<f64> {
    let mut out = vec![0.0; (f.len() - 1) * factor + 1];
    for (i, v) in f.iter().enumerate() {
        out[i * factor] = *v;
    }
    out
}

/// Level-`j` equivalent wavelet and scaling filters,
/// `g * g^(2) * ... * g^(2^(j-2)) * h^(2^(j-1))` and the same with `g` last.
pub fn equivalent_filters(filter: &WaveletFilter, level: usize) -> (Vec<f64>, Vec<f64>) {
    let mut low = vec![1.0];
    for k in 0..level - 1 {
        low = circular_convolve(&low, &upsample(filter.g(), 1 << k));
    }
    let top = 1 << (level - 1);
    (
        circular_convolve(&low, &upsample(filter.h(), top)),
        circular_convolve(&low, &upsample(filter.g(), top)),
    )
}

/// Rows of the N x N DWT matrix: `W_1; ...; W_J; V_J`, each row of level `j`
/// being the periodised equivalent filter shifted by `2^j`.
pub fn dwt_matrix(filter: &WaveletFilter, n: usize, levels: usize) -> Vec<Vec<f64>> {
    let mut rows = Vec::with_capacity(n);
    let band = |taps: &[f64], level: usize, rows: &mut Vec<Vec<f64>>| {
        let step = 1usize << level;
        for t in 0..n / step {
            let mut row = vec![0.0; n];
            for (l, c) in taps.iter().enumerate() {
                let idx = (step * (t + 1)) as isize - 1 - l as isize;
                row[idx.rem_euclid(n as isize) as usize] += c;
            }
            rows.push(row);
        }
    };
    for j in 1..=levels {
        let (h, _) = equivalent_filters(filter, j);
        band(&h, j, &mut rows);
    }
    let (_, g) = equivalent_filters(filter, levels);
    band(&g, levels, &mut rows);
    rows
}
