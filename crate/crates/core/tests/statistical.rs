//! Monte Carlo oracles for the coherence and entropy estimators.

mod common;

use std::f64::consts::PI;

use common::gaussian;
use wavelet_comove::cwt::build_grid;
use wavelet_comove::dwt::{dwt_forward, make_filter};
use wavelet_comove::entropy::{cweem, energy_distribution, weem, ExpBase, WhiteNoiseReference};
use wavelet_comove::significance::{surrogate, Ar1Model};
use wavelet_comove::{coherence, partial_coherence, CoherenceResult, PartialForm, TimeSeries};

fn ts(v: Vec<f64>) -> TimeSeries {
    TimeSeries::from_values(v, 1.0).unwrap()
}

fn median(mut v: Vec<f64>) -> f64 {
    v.sort_by(f64::total_cmp);
    let m = v.len() / 2;
    if v.len() % 2 == 0 {
        0.5 * (v[m - 1] + v[m])
    } else {
        v[m]
    }
}

fn reliable_values(r: &CoherenceResult, rows: impl Iterator<Item = usize>) -> Vec<f64> {
    let mut out = Vec::new();
    for row in rows {
        for c in 0..r.len() {
            let v = r.magnitude[(row, c)];
            if r.reliable(row, c) && !v.is_nan() {
                out.push(v);
            }
        }
    }
    out
}

#[test]
fn independent_white_noise_has_low_coherence() {
    let n = 1024;
    let g = build_grid(n, 1.0, 2.0, 1.0 / 12.0, 6.0).unwrap();
    let mut means = Vec::new();
    let mut high = Vec::new();
    for rep in 0..100 {
        let r = coherence(&ts(gaussian(n, 2 * rep)), &ts(gaussian(n, 2 * rep + 1)), &g).unwrap();
        let v = reliable_values(&r, 0..g.num_scales());
        means.push(v.iter().sum::<f64>() / v.len() as f64);
        high.push(v.iter().filter(|&&m| m > 0.9).count() as f64 / v.len() as f64);
    }
    let mean = means.iter().sum::<f64>() / means.len() as f64;
    let frac = high.iter().sum::<f64>() / high.len() as f64;
    // the smoothing leaves only a few degrees of freedom, so the floor is near one half
    assert!(mean < 0.52, "mean coherence {mean}");
    assert!(frac < 0.05, "fraction above 0.9: {frac}");
}

#[test]
fn partial_coherence_with_unrelated_control_matches_plain() {
    let n = 1024;
    let g = build_grid(n, 1.0, 2.0, 1.0 / 12.0, 6.0).unwrap();
    let z = gaussian(n, 900);
    let shared = gaussian(n, 901);
    let x: Vec<f64> = shared
        .iter()
        .zip(gaussian(n, 902))
        .map(|(s, e)| s + 0.5 * e)
        .collect();
    let y: Vec<f64> = shared
        .iter()
        .zip(gaussian(n, 903))
        .map(|(s, e)| s + 0.5 * e)
        .collect();
    let (x, y, z) = (ts(x), ts(y), ts(z));
    let plain = coherence(&x, &y, &g).unwrap();
    let partial = partial_coherence(&x, &y, &z, &g, PartialForm::Standard).unwrap();
    let deviations: Vec<f64> = plain
        .magnitude
        .as_slice()
        .iter()
        .zip(partial.magnitude.as_slice())
        .filter(|(_, q)| !q.is_nan())
        .map(|(p, q)| (p - q).abs())
        .collect();
    let mad = median(deviations);
    assert!(mad < 0.1, "median absolute deviation {mad}");
}

#[test]
fn partial_coherence_removes_common_driver() {
    let n = 1024;
    let g = build_grid(n, 1.0, 2.0, 1.0 / 12.0, 6.0).unwrap();
    let ar = Ar1Model::new(0.5, 0.3, 0.0).unwrap();
    let red = surrogate(&ar, n, 1.0, 17).unwrap();
    let z: Vec<f64> = (0..n)
        .map(|t| (2.0 * PI * t as f64 / 32.0).sin() + red.values()[t])
        .collect();
    let x: Vec<f64> = z
        .iter()
        .zip(gaussian(n, 18))
        .map(|(a, e)| a + 0.2 * e)
        .collect();
    let y: Vec<f64> = z
        .iter()
        .zip(gaussian(n, 19))
        .map(|(a, e)| a + 0.2 * e)
        .collect();
    let (x, y, z) = (ts(x), ts(y), ts(z));
    let row = g.nearest_period_index(32.0);
    let plain = coherence(&x, &y, &g).unwrap();
    let partial = partial_coherence(&x, &y, &z, &g, PartialForm::Standard).unwrap();
    let p = median(reliable_values(&plain, row..=row));
    let q = median(reliable_values(&partial, row..=row));
    println!("plain {p} partial {q}");
    assert!(p > 0.8, "plain {p}");
    // the residuals are independent noise, so the partial value falls to the noise floor
    assert!(p - q > 0.25, "plain {p} partial {q}");
}

#[test]
fn white_noise_energy_follows_dyadic_shares() {
    let f = make_filter("haar").unwrap();
    let levels = 6;
    let x = gaussian(4096, 4242);
    let e = energy_distribution(&dwt_forward(&x, levels, &f).unwrap()).unwrap();
    let norm = 1.0 - 0.5f64.powi(levels as i32);
    for (j, &share) in e.as_slice().iter().enumerate() {
        let expected = 0.5f64.powi(j as i32 + 1) / norm;
        assert!(
            (share - expected).abs() < 0.15,
            "level {}: {share} vs {expected}",
            j + 1
        );
    }
}

#[test]
fn cweem_of_perturbed_noise_is_below_self_ceiling() {
    let n = 4096;
    let f = make_filter("la8").unwrap();
    let x = gaussian(n, 31);
    let y: Vec<f64> = x
        .iter()
        .enumerate()
        .map(|(t, v)| v + 0.3 * (2.0 * PI * t as f64 / 32.0).sin())
        .collect();
    let ceiling = cweem(&x, &x, 6, &f, ExpBase::Two, WhiteNoiseReference::Analytic).unwrap();
    let r = cweem(&x, &y, 6, &f, ExpBase::Two, WhiteNoiseReference::Analytic).unwrap();
    assert!(r.measure > 0.0 && r.measure < 1.0, "{}", r.measure);
    assert!(r.measure < ceiling.measure);
}

#[test]
fn cweem_depends_only_on_distributions() {
    // a series and its negation share every level energy
    let f = make_filter("d4").unwrap();
    let x = gaussian(512, 8);
    let neg: Vec<f64> = x.iter().map(|v| -v).collect();
    let a = cweem(&x, &x, 4, &f, ExpBase::Two, WhiteNoiseReference::Analytic).unwrap();
    let b = cweem(&x, &neg, 4, &f, ExpBase::Two, WhiteNoiseReference::Analytic).unwrap();
    assert_eq!(a.measure, b.measure);
}

#[test]
fn weem_grows_with_depth_for_long_memory() {
    let f = make_filter("la8").unwrap();
    let model = Ar1Model::new(0.9, 1.0, 0.0).unwrap();
    let mut satisfied = 0;
    for seed in 0..50 {
        let x = surrogate(&model, 4096, 1.0, 1000 + seed).unwrap();
        let scan: Vec<f64> = (2..=6)
            .map(|j| {
                weem(
                    x.values(),
                    j,
                    &f,
                    ExpBase::Natural,
                    WhiteNoiseReference::Analytic,
                )
                .unwrap()
                .measure
            })
            .collect();
        let inversions = scan.windows(2).filter(|w| w[1] < w[0]).count();
        if inversions <= 1 {
            satisfied += 1;
        }
    }
    assert!(satisfied > 25, "{satisfied}/50 seeds non-decreasing");
}

#[test]
fn monte_carlo_reference_is_at_most_ln_j() {
    let f = make_filter("la8").unwrap();
    let x = gaussian(1024, 3);
    let r = weem(
        &x,
        5,
        &f,
        ExpBase::Natural,
        WhiteNoiseReference::MonteCarlo { runs: 50, seed: 1 },
    )
    .unwrap();
    assert!(r.we_wn <= (5f64).ln());
    // white noise against a white-noise reference sits near zero
    assert!(r.measure.abs() < 0.2, "{}", r.measure);
}

/// Smoothing by direct summation: Gaussian over time, renormalised by the
/// in-range weight, then an 11-row boxcar over scale clipped at the edges.
fn naive_smooth(
    f: &[Vec<num_complex::Complex64>],
    scales: &[f64],
) -> Vec<Vec<num_complex::Complex64>> {
    let n = f[0].len();
    let timed: Vec<Vec<num_complex::Complex64>> = f
        .iter()
        .zip(scales)
        .map(|(row, &s)| {
            let h = (4.0 * s).floor() as isize;
            (0..n as isize)
                .map(|i| {
                    let mut acc = num_complex::Complex64::new(0.0, 0.0);
                    let mut mass = 0.0;
                    for k in -h..=h {
                        let t = i + k;
                        if t >= 0 && t < n as isize {
                            let w = (-(k * k) as f64 / (2.0 * s * s)).exp();
                            acc += row[t as usize] * w;
                            mass += w;
                        }
                    }
                    acc / mass
                })
                .collect()
        })
        .collect();
    let m = timed.len();
    (0..m)
        .map(|j| {
            let lo = j.saturating_sub(5);
            let hi = (j + 6).min(m);
            (0..n)
                .map(|c| {
                    (lo..hi)
                        .map(|r| timed[r][c])
                        .sum::<num_complex::Complex64>()
                        / (hi - lo) as f64
                })
                .collect()
        })
        .collect()
}

#[test]
fn coherence_matches_direct_summation() {
    let n = 200;
    let g = build_grid(n, 1.0, 2.0, 1.0 / 12.0, 6.0).unwrap();
    let (x, y) = (ts(gaussian(n, 71)), ts(gaussian(n, 72)));
    let wx = wavelet_comove::cwt(&x, &g).unwrap();
    let wy = wavelet_comove::cwt(&y, &g).unwrap();
    let rows =
        |f: &dyn Fn(usize, usize) -> num_complex::Complex64| -> Vec<Vec<num_complex::Complex64>> {
            (0..g.num_scales())
                .map(|r| (0..n).map(|c| f(r, c)).collect())
                .collect()
        };
    let (a, b) = (wx.coefficients(), wy.coefficients());
    let sxy = naive_smooth(&rows(&|r, c| a[(r, c)] * b[(r, c)].conj()), g.scales());
    let sxx = naive_smooth(&rows(&|r, c| a[(r, c)].norm_sqr().into()), g.scales());
    let syy = naive_smooth(&rows(&|r, c| b[(r, c)].norm_sqr().into()), g.scales());
    let r = coherence(&x, &y, &g).unwrap();
    for row in 0..g.num_scales() {
        for c in 0..n {
            let expected = sxy[row][c].norm() / (sxx[row][c].re * syy[row][c].re).sqrt();
            let got = r.magnitude[(row, c)];
            assert!(
                (got - expected).abs() < 1e-9,
                "({row},{c}): {got} vs {expected}"
            );
        }
    }
}
