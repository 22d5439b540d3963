//! Relative wavelet energy, wavelet entropy and the predictability measures
//! built on them.
//!
//! Entropies are always in nats. The measures are `1 - B^(WE - WE_wn)` where
//! the exponent base `B` is chosen explicitly: `e` by default for WEEM and 2
//! for CWEEM.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use crate::dwt::{dwt_forward, DwtDecomposition, WaveletFilter};
use crate::error::{Error, Result};

/// Additive smoothing used when the reference distribution has an empty
/// level that the other distribution occupies.
pub const KL_SMOOTHING: f64 = 1e-12;

/// Share of wavelet-coefficient energy per level `j = 1..J`.
#[derive(Clone, Debug)]
pub struct EnergyDistribution {
    e: Vec<f64>,
    // level energies as given; the entropy is computed from these so that
    // equal or single-level energies give exact results
    raw: Vec<f64>,
}

impl PartialEq for EnergyDistribution {
    fn eq(&self, other: &Self) -> bool {
        self.e == other.e
    }
}

impl EnergyDistribution {
    /// Normalises nonnegative level energies.
    pub fn from_energies(energies: &[f64]) -> Result<Self> {
        if energies.iter().any(|e| !(*e >= 0.0) || !e.is_finite()) {
            return Err(Error::InvalidParameter(
                "energies must be finite and nonnegative".to_owned(),
            ));
        }
        let total: f64 = energies.iter().sum();
        if total <= 0.0 {
            return Err(Error::ZeroEnergy);
        }
        Ok(Self {
            e: energies.iter().map(|v| v / total).collect(),
            raw: energies.to_vec(),
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.e
    }

    pub fn levels(&self) -> usize {
        self.e.len()
    }
}

/// Wavelet energy at or below this fraction of the total signal energy is
/// treated as rounding residue (constant input).
pub const ZERO_ENERGY_RATIO: f64 = 1e-20;

/// `E_j = ||W_j||^2 / sum_k ||W_k||^2`; the scaling coefficients are excluded.
pub fn energy_distribution(d: &DwtDecomposition) -> Result<EnergyDistribution> {
    let energies = d.level_energies();
    let wavelet: f64 = energies.iter().sum();
    if wavelet <= ZERO_ENERGY_RATIO * (wavelet + d.scaling_energy()) {
        return Err(Error::ZeroEnergy);
    }
    EnergyDistribution::from_energies(&energies)
}

/// Shannon entropy `-sum E_j ln E_j` (nats), with `0 ln 0 = 0`.
pub fn wavelet_entropy(e: &EnergyDistribution) -> f64 {
    // -sum p ln p with p = r / R, rewritten as ln R - sum (r / R) ln r
    let total: f64 = e.raw.iter().sum();
    let we = total.ln()
        - e.raw
            .iter()
            .filter(|&&r| r > 0.0)
            .map(|&r| r / total * r.ln())
            .sum::<f64>();
    we.clamp(0.0, (e.levels() as f64).ln())
}

fn kl_terms(ey: &[f64], ex: &[f64]) -> f64 {
    ey.iter()
        .zip(ex)
        .filter(|(&p, _)| p > 0.0)
        .map(|(&p, &q)| p * (p / q).ln())
        .sum()
}

fn smoothed(e: &[f64]) -> Vec<f64> {
    let total: f64 = e.iter().map(|v| v + KL_SMOOTHING).sum();
    e.iter().map(|v| (v + KL_SMOOTHING) / total).collect()
}

/// Kullback-Leibler entropy and whether smoothing was needed.
fn kl_entropy_detailed(ey: &EnergyDistribution, ex: &EnergyDistribution) -> Result<(f64, bool)> {
    if ey.levels() != ex.levels() {
        return Err(Error::IncompatibleLevels(ey.levels(), ex.levels()));
    }
    let continuous = ey.e.iter().zip(&ex.e).all(|(&p, &q)| p == 0.0 || q > 0.0);
    let (value, smoothed_used) = if continuous {
        (kl_terms(&ey.e, &ex.e), false)
    } else {
        (kl_terms(&smoothed(&ey.e), &smoothed(&ex.e)), true)
    };
    Ok((value.max(0.0), smoothed_used))
}

/// `sum_j E_j^(y) ln(E_j^(y) / E_j^(x))`, the divergence of `ey` from the
/// reference `ex`.
///
/// If `ex` has an empty level where `ey` does not, both distributions are
/// smoothed by [`KL_SMOOTHING`] and renormalised first.
pub fn kl_entropy(ey: &EnergyDistribution, ex: &EnergyDistribution) -> Result<f64> {
    kl_entropy_detailed(ey, ex).map(|(v, _)| v)
}

/// Exponent base of the predictability measures.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ExpBase {
    Natural,
    Two,
}

impl ExpBase {
    pub fn pow(self, exponent: f64) -> f64 {
        match self {
            ExpBase::Natural => exponent.exp(),
            ExpBase::Two => exponent.exp2(),
        }
    }
}

impl fmt::Display for ExpBase {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ExpBase::Natural => "e",
            ExpBase::Two => "2",
        })
    }
}

/// Reference entropy of white noise.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum WhiteNoiseReference {
    /// `ln J`, the largest possible entropy over `J` levels.
    Analytic,
    /// Largest entropy over `runs` Gaussian white-noise series of the same
    /// length with the series' mean and unit standard deviation.
    MonteCarlo { runs: usize, seed: u64 },
}

impl fmt::Display for WhiteNoiseReference {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WhiteNoiseReference::Analytic => f.write_str("analytic"),
            WhiteNoiseReference::MonteCarlo { runs, seed } => {
                write!(f, "montecarlo(K={runs}, seed={seed})")
            }
        }
    }
}

/// Outcome of [`weem`] or [`cweem`].
#[derive(Clone, Debug, PartialEq)]
pub struct EntropyReport {
    /// Wavelet entropy (WEEM) or Kullback-Leibler entropy (CWEEM), nats.
    pub we: f64,
    pub we_wn: f64,
    pub measure: f64,
    pub base: ExpBase,
    pub reference: WhiteNoiseReference,
    pub levels: usize,
    /// The KL entropy needed additive smoothing.
    pub smoothed: bool,
}

impl EntropyReport {
    /// Negative measure: less predictable than the white-noise reference.
    pub fn below_white_noise(&self) -> bool {
        self.measure < 0.0
    }
}

fn reference_entropy(
    reference: WhiteNoiseReference,
    n: usize,
    mean: f64,
    levels: usize,
    filter: &WaveletFilter,
) -> Result<f64> {
    match reference {
        WhiteNoiseReference::Analytic => Ok((levels as f64).ln()),
        WhiteNoiseReference::MonteCarlo { runs, seed } => {
            if runs == 0 {
                return Err(Error::InvalidParameter(
                    "Monte Carlo reference needs at least one run".to_owned(),
                ));
            }
            let normal = Normal::new(mean, 1.0)
                .map_err(|e| Error::InvalidParameter(format!("white-noise mean {mean}: {e}")))?;
            let entropies = (0..runs as u64)
                .into_par_iter()
                .map(|run| {
                    let mut rng = ChaCha20Rng::seed_from_u64(seed);
                    rng.set_stream(run);
                    let wn: Vec<f64> = (0..n).map(|_| normal.sample(&mut rng)).collect();
                    let d = dwt_forward(&wn, levels, filter)?;
                    Ok(wavelet_entropy(&energy_distribution(&d)?))
                })
                .collect::<Result<Vec<f64>>>()?;
            Ok(entropies.into_iter().fold(0.0, f64::max))
        }
    }
}

fn series_distribution(
    x: &[f64],
    levels: usize,
    filter: &WaveletFilter,
) -> Result<EnergyDistribution> {
    energy_distribution(&dwt_forward(x, levels, filter)?)
}

/// Wavelet Energy Entropy Measure `1 - B^(WE_x - WE_wn)`.
pub fn weem(
    x: &[f64],
    levels: usize,
    filter: &WaveletFilter,
    base: ExpBase,
    reference: WhiteNoiseReference,
) -> Result<EntropyReport> {
    let we = wavelet_entropy(&series_distribution(x, levels, filter)?);
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let we_wn = reference_entropy(reference, x.len(), mean, levels, filter)?;
    let measure = match (base, reference) {
        // e^(WE - ln J) = e^WE / J, and WE <= ln J
        (ExpBase::Natural, WhiteNoiseReference::Analytic) => {
            (1.0 - we.exp() / levels as f64).max(0.0)
        }
        _ => 1.0 - base.pow(we - we_wn),
    };
    Ok(EntropyReport {
        we,
        we_wn,
        measure,
        base,
        reference,
        levels,
        smoothed: false,
    })
}

/// Cross Wavelet Energy Entropy Measure of `y` given `x`,
/// `1 - B^(WE_(y|x) - WE_wn)`. May be negative.
pub fn cweem(
    x: &[f64],
    y: &[f64],
    levels: usize,
    filter: &WaveletFilter,
    base: ExpBase,
    reference: WhiteNoiseReference,
) -> Result<EntropyReport> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let ex = series_distribution(x, levels, filter)?;
    let ey = series_distribution(y, levels, filter)?;
    let (we, smoothed) = kl_entropy_detailed(&ey, &ex)?;
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let we_wn = reference_entropy(reference, x.len(), mean, levels, filter)?;
    Ok(EntropyReport {
        we,
        we_wn,
        measure: 1.0 - base.pow(we - we_wn),
        base,
        reference,
        levels,
        smoothed,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dwt::{make_filter, FilterKind};
    use std::f64::consts::LN_2;

    fn dist(v: &[f64]) -> EnergyDistribution {
        EnergyDistribution::from_energies(v).unwrap()
    }

    #[test]
    fn one_hot_distribution() {
        let f = make_filter("haar").unwrap();
        let d = DwtDecomposition {
            wavelet: vec![vec![0.0; 8], vec![0.0; 4], vec![3.0, 0.0], vec![0.0]],
            scaling: vec![5.0],
            filter: f,
            original_len: 16,
            padding: crate::dwt::Padding::None,
        };
        assert_eq!(
            energy_distribution(&d).unwrap().as_slice(),
            &[0.0, 0.0, 1.0, 0.0]
        );
    }

    #[test]
    fn constant_series_has_no_energy() {
        let f = make_filter("la8").unwrap();
        let d = dwt_forward(&[4.0; 64], 3, &f).unwrap();
        assert!(matches!(energy_distribution(&d), Err(Error::ZeroEnergy)));
    }

    #[test]
    fn entropy_fixed_points() {
        assert_eq!(wavelet_entropy(&dist(&[1.0, 0.0, 0.0])), 0.0);
        let j = 5;
        let uniform = wavelet_entropy(&dist(&vec![1.0; j]));
        assert_eq!(uniform, (j as f64).ln());
        assert!((wavelet_entropy(&dist(&[0.5, 0.5, 0.0, 0.0])) - LN_2).abs() < 1e-15);
    }

    #[test]
    fn kl_examples() {
        let e = dist(&[0.2, 0.3, 0.5]);
        assert_eq!(kl_entropy(&e, &e).unwrap(), 0.0);
        assert!((kl_entropy(&dist(&[1.0, 0.0]), &dist(&[0.5, 0.5])).unwrap() - LN_2).abs() < 1e-15);
        let v = kl_entropy(&dist(&[0.5, 0.5]), &dist(&[0.75, 0.25])).unwrap();
        let oracle = 0.5 * (0.5f64 / 0.75).ln() + 0.5 * (0.5f64 / 0.25).ln();
        assert!((v - oracle).abs() < 1e-15);
        assert!((v - 0.143_841_036).abs() < 1e-9);
        assert!(matches!(
            kl_entropy(&dist(&[0.5, 0.5]), &dist(&[0.2, 0.3, 0.5])),
            Err(Error::IncompatibleLevels(2, 3))
        ));
    }

    #[test]
    fn kl_smooths_missing_support() {
        let (v, smoothed) = kl_entropy_detailed(&dist(&[0.5, 0.5]), &dist(&[1.0, 0.0])).unwrap();
        assert!(smoothed);
        assert!(v.is_finite() && v > 10.0);
    }

    #[test]
    fn weem_closed_forms() {
        // one-hot: 1 - e^(-ln J) = 1 - 1/J
        let f = make_filter("haar").unwrap();
        let mut x = vec![0.0; 16];
        x[0] = 1.0;
        x[1] = -1.0;
        let r = weem(&x, 4, &f, ExpBase::Natural, WhiteNoiseReference::Analytic).unwrap();
        assert_eq!(r.we, 0.0);
        assert!((r.measure - 0.75).abs() < 1e-15);
    }

    #[test]
    fn weem_scale_invariant() {
        let f = WaveletFilter::new(FilterKind::D4);
        let x: Vec<f64> = (0..128)
            .map(|i| ((i * 37) % 17) as f64 + (i as f64 * 0.2).sin())
            .collect();
        let scaled: Vec<f64> = x.iter().map(|v| v * 7.5).collect();
        let a = weem(&x, 5, &f, ExpBase::Natural, WhiteNoiseReference::Analytic).unwrap();
        let b = weem(
            &scaled,
            5,
            &f,
            ExpBase::Natural,
            WhiteNoiseReference::Analytic,
        )
        .unwrap();
        assert!((a.measure - b.measure).abs() < 1e-10);
    }

    #[test]
    fn cweem_of_self_is_ceiling() {
        let f = make_filter("la8").unwrap();
        let x: Vec<f64> = (0..256)
            .map(|i| (i as f64 * 0.37).sin() + ((i * 13) % 7) as f64)
            .collect();
        let r = cweem(&x, &x, 4, &f, ExpBase::Two, WhiteNoiseReference::Analytic).unwrap();
        assert_eq!(r.we, 0.0);
        assert!((r.measure - (1.0 - (-(4f64).ln()).exp2())).abs() < 1e-15);
        assert!((r.measure - 0.617).abs() < 1e-3);
    }

    #[test]
    fn monte_carlo_reference_is_deterministic_and_bounded() {
        let f = make_filter("haar").unwrap();
        let x: Vec<f64> = (0..256).map(|i| (i as f64 * 0.1).cos()).collect();
        let mode = WhiteNoiseReference::MonteCarlo { runs: 20, seed: 3 };
        let a = weem(&x, 5, &f, ExpBase::Natural, mode).unwrap();
        let b = weem(&x, 5, &f, ExpBase::Natural, mode).unwrap();
        assert_eq!(a, b);
        assert!(a.we_wn > 0.0 && a.we_wn <= (5f64).ln() + 1e-12);
    }
}
