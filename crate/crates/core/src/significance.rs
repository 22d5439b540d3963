//! Monte Carlo significance of coherence against AR(1) red-noise surrogates.
//!
//! Surrogates are drawn from ChaCha20 streams: the run index selects the
//! stream of a generator keyed by the user seed, so every run is
//! reproducible on its own and runs may be evaluated in any order.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha20Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;

use num_complex::Complex64;

use crate::coherence::{
    coherence_from_fields, coherence_magnitude_into, partial_coherence_from_fields,
    CoherenceResult, CoherenceWorkspace, PartialForm, Smoother,
};
use crate::cwt::{CwtPlan, ScaleGrid};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::series::{autocorrelation, mean, TimeSeries};

pub const DEFAULT_RUNS: usize = 300;
pub const MIN_RUNS: usize = 100;
pub const BURN_IN: usize = 100;
const MAX_PHI: f64 = 0.999;

/// Stationary AR(1) process `u_t = phi u_{t-1} + e_t`, `e_t ~ N(0, sigma^2)`,
/// observed as `mean + u_t`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Ar1Model {
    phi: f64,
    sigma: f64,
    mean: f64,
}

impl Ar1Model {
    pub fn new(phi: f64, sigma: f64, mean: f64) -> Result<Self> {
        if !(phi.abs() < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "|phi| must be below 1, got {phi}"
            )));
        }
        if !(sigma > 0.0 && sigma.is_finite()) || !mean.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "sigma must be positive and mean finite (sigma={sigma}, mean={mean})"
            )));
        }
        Ok(Self { phi, sigma, mean })
    }

    pub fn phi(&self) -> f64 {
        self.phi
    }

    pub fn sigma(&self) -> f64 {
        self.sigma
    }

    pub fn mean(&self) -> f64 {
        self.mean
    }

    /// Stationary variance `sigma^2 / (1 - phi^2)`.
    pub fn variance(&self) -> f64 {
        self.sigma * self.sigma / (1.0 - self.phi * self.phi)
    }

    fn sample_into<R: Rng>(&self, out: &mut [f64], rng: &mut R) {
        let normal = Normal::new(0.0, self.sigma).expect("sigma validated");
        let mut u = 0.0;
        for _ in 0..BURN_IN {
            u = self.phi * u + normal.sample(rng);
        }
        for o in out.iter_mut() {
            u = self.phi * u + normal.sample(rng);
            *o = self.mean + u;
        }
    }
}

/// Fits an AR(1) model by the lag-1 sample autocorrelation, clamped to
/// `[0, 0.999]`.
pub fn fit_ar1(x: &TimeSeries) -> Result<Ar1Model> {
    let v = x.values();
    let m = mean(v);
    let var = v.iter().map(|a| (a - m) * (a - m)).sum::<f64>() / v.len() as f64;
    if var == 0.0 {
        return Err(Error::DegenerateSeries);
    }
    let phi = autocorrelation(v, 1).clamp(0.0, MAX_PHI);
    let sigma = (var * (1.0 - phi * phi)).sqrt();
    Ar1Model::new(phi, sigma, m)
}

fn run_rng(seed: u64, stream: u64) -> ChaCha20Rng {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// One AR(1) realisation of length `n`, deterministic in `seed`.
pub fn surrogate(model: &Ar1Model, n: usize, dt: f64, seed: u64) -> Result<TimeSeries> {
    let mut rng = ChaCha20Rng::seed_from_u64(seed);
    let mut values = vec![0.0; n];
    model.sample_into(&mut values, &mut rng);
    TimeSeries::from_values(values, dt)
}

/// Per-scale Monte Carlo critical values and the resulting mask.
#[derive(Clone, Debug, PartialEq)]
pub struct SignificanceField {
    /// Critical coherence per scale row.
    pub row_thresholds: Vec<f64>,
    /// Row thresholds broadcast over time.
    pub threshold: Matrix<f64>,
    /// Observed magnitude strictly above the threshold.
    pub mask: Matrix<bool>,
    pub alpha: f64,
    pub runs: usize,
    pub seed: u64,
}

impl SignificanceField {
    /// Fraction of reliable (outside the cone of influence) points that are
    /// significant.
    pub fn reliable_fraction(&self, grid: &ScaleGrid, coi: &[f64]) -> f64 {
        let mut total = 0usize;
        let mut hits = 0usize;
        for (r, &s) in grid.scales().iter().enumerate() {
            for (c, &edge) in coi.iter().enumerate() {
                if s <= edge {
                    total += 1;
                    hits += usize::from(self.mask[(r, c)]);
                }
            }
        }
        if total == 0 {
            0.0
        } else {
            hits as f64 / total as f64
        }
    }
}

fn validate(alpha: f64, runs: usize) -> Result<()> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "alpha must lie in (0, 1), got {alpha}"
        )));
    }
    if runs < MIN_RUNS {
        return Err(Error::InvalidParameter(format!(
            "at least {MIN_RUNS} Monte Carlo runs are required, got {runs}"
        )));
    }
    Ok(())
}

/// Per-thread buffers for the surrogate loop.
struct SurrogateWorkspace {
    sx: Vec<f64>,
    sy: Vec<f64>,
    wx: Matrix<Complex64>,
    wy: Matrix<Complex64>,
    fft: Vec<Complex64>,
    coherence: CoherenceWorkspace,
}

impl SurrogateWorkspace {
    fn new(rows: usize, n: usize) -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            sx: vec![0.0; n],
            sy: vec![0.0; n],
            wx: Matrix::filled(rows, n, zero),
            wy: Matrix::filled(rows, n, zero),
            fft: Vec::new(),
            coherence: CoherenceWorkspace::new(rows, n),
        }
    }
}

/// Values of each scale row that lie outside the cone of influence; rows
/// with no such point contribute all of their values.
fn pooled_rows(field: &Matrix<f64>, grid: &ScaleGrid, coi: &[f64]) -> Vec<Vec<f64>> {
    grid.scales()
        .iter()
        .enumerate()
        .map(|(r, &s)| {
            let row = field.row(r);
            let reliable: Vec<f64> = row
                .iter()
                .zip(coi)
                .filter(|&(v, &edge)| s <= edge && !v.is_nan())
                .map(|(v, _)| *v)
                .collect();
            if reliable.is_empty() {
                row.iter().copied().filter(|v| !v.is_nan()).collect()
            } else {
                reliable
            }
        })
        .collect()
}

/// Empirical `1 - alpha` quantile (inverse of the empirical CDF). Reorders
/// `values` in place.
fn upper_quantile(values: &mut [f64], alpha: f64) -> f64 {
    if values.is_empty() {
        return 1.0;
    }
    let rank = ((1.0 - alpha) * values.len() as f64).ceil() as usize;
    let (_, v, _) = values.select_nth_unstable_by(rank.clamp(1, values.len()) - 1, f64::total_cmp);
    *v
}

fn assemble(
    per_run: Vec<Vec<Vec<f64>>>,
    observed: &CoherenceResult,
    alpha: f64,
    runs: usize,
    seed: u64,
) -> SignificanceField {
    let nrows = observed.magnitude.rows();
    let ncols = observed.magnitude.cols();
    let mut pools: Vec<Vec<f64>> = vec![Vec::new(); nrows];
    for run in per_run {
        for (pool, values) in pools.iter_mut().zip(run) {
            pool.extend(values);
        }
    }
    let row_thresholds: Vec<f64> = pools
        .iter_mut()
        .map(|pool| upper_quantile(pool, alpha).clamp(0.0, 1.0))
        .collect();
    let mut threshold = Matrix::filled(nrows, ncols, 0.0);
    let mut mask = Matrix::filled(nrows, ncols, false);
    for r in 0..nrows {
        for c in 0..ncols {
            threshold[(r, c)] = row_thresholds[r];
            mask[(r, c)] = observed.magnitude[(r, c)] > row_thresholds[r];
        }
    }
    SignificanceField {
        row_thresholds,
        threshold,
        mask,
        alpha,
        runs,
        seed,
    }
}

/// Monte Carlo significance of `coherence(x, y)` at level `alpha`.
///
/// AR(1) models are fitted to both series; each run draws an independent
/// surrogate pair, and per scale row the surrogate magnitudes outside the
/// cone of influence are pooled. The row threshold is their empirical
/// `1 - alpha` quantile.
pub fn coherence_significance(
    x: &TimeSeries,
    y: &TimeSeries,
    grid: &ScaleGrid,
    alpha: f64,
    runs: usize,
    seed: u64,
) -> Result<(CoherenceResult, SignificanceField)> {
    validate(alpha, runs)?;
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let mx = fit_ar1(x)?;
    let my = fit_ar1(y)?;
    let n = x.len();
    let plan = CwtPlan::new(n, x.dt(), grid)?;
    let wx = plan.transform(x.values())?;
    let wy = plan.transform(y.values())?;
    let smoother = Smoother::for_field(&wx);
    let observed = coherence_from_fields(&wx, &wy, &smoother)?;

    let per_run = (0..runs as u64)
        .into_par_iter()
        .map_init(
            || SurrogateWorkspace::new(grid.num_scales(), n),
            |ws, run| -> Result<Vec<Vec<f64>>> {
                let mut rng = run_rng(seed, run);
                mx.sample_into(&mut ws.sx, &mut rng);
                my.sample_into(&mut ws.sy, &mut rng);
                plan.transform_into(&ws.sx, &mut ws.wx, &mut ws.fft)?;
                plan.transform_into(&ws.sy, &mut ws.wy, &mut ws.fft)?;
                coherence_magnitude_into(&ws.wx, &ws.wy, &smoother, &mut ws.coherence)?;
                Ok(pooled_rows(&ws.coherence.magnitude, grid, &observed.coi))
            },
        )
        .collect::<Result<Vec<_>>>()?;

    let field = assemble(per_run, &observed, alpha, runs, seed);
    let observed = observed.with_significance(field.mask.clone());
    Ok((observed, field))
}

/// Experimental: significance of partial coherence using independent AR(1)
/// surrogate triples.
#[allow(clippy::too_many_arguments)]
pub fn partial_coherence_significance(
    x: &TimeSeries,
    y: &TimeSeries,
    z: &TimeSeries,
    grid: &ScaleGrid,
    form: PartialForm,
    alpha: f64,
    runs: usize,
    seed: u64,
) -> Result<(CoherenceResult, SignificanceField)> {
    validate(alpha, runs)?;
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() != z.len() {
        return Err(Error::LengthMismatch(x.len(), z.len()));
    }
    let models = [fit_ar1(x)?, fit_ar1(y)?, fit_ar1(z)?];
    let n = x.len();
    let plan = CwtPlan::new(n, x.dt(), grid)?;
    let smoother = Smoother::new(grid, n, x.dt());
    let observed = partial_coherence_from_fields(
        &plan.transform(x.values())?,
        &plan.transform(y.values())?,
        &plan.transform(z.values())?,
        &smoother,
        form,
    )?;

    let per_run = (0..runs as u64)
        .into_par_iter()
        .map(|run| -> Result<Vec<Vec<f64>>> {
            let mut rng = run_rng(seed, run);
            let mut fields = Vec::with_capacity(3);
            for model in &models {
                let mut s = vec![0.0; n];
                model.sample_into(&mut s, &mut rng);
                fields.push(plan.transform(&s)?);
            }
            let r =
                partial_coherence_from_fields(&fields[0], &fields[1], &fields[2], &smoother, form)?;
            Ok(pooled_rows(&r.magnitude, grid, &observed.coi))
        })
        .collect::<Result<Vec<_>>>()?;

    let field = assemble(per_run, &observed, alpha, runs, seed);
    let mut observed = observed.with_significance(field.mask.clone());
    if let (Some(mask), Some(undefined)) = (
        observed.significance_mask.as_mut(),
        observed.undefined.as_ref(),
    ) {
        for (m, &u) in mask.as_mut_slice().iter_mut().zip(undefined.as_slice()) {
            *m &= !u;
        }
    }
    Ok((observed, field))
}
