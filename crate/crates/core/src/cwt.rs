//! Morlet continuous wavelet transform.
//!
//! Coefficients are computed by multiplying the FFT of the de-meaned,
//! zero-padded series with Fourier-domain daughter wavelets, one inverse FFT
//! per scale.

use std::f64::consts::{PI, SQRT_2};
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::series::TimeSeries;

pub const DEFAULT_OMEGA0: f64 = 6.0;
pub const DEFAULT_DJ: f64 = 1.0 / 12.0;

/// Geometric scale grid `s_j = s0 * 2^(j * dj)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleGrid {
    s0: f64,
    dj: f64,
    omega0: f64,
    scales: Vec<f64>,
}

impl ScaleGrid {
    pub fn new(s0: f64, dj: f64, num_scales: usize, omega0: f64) -> Result<Self> {
        if !(s0 > 0.0 && s0.is_finite()) {
            return Err(Error::InvalidGrid(format!("s0 must be positive, got {s0}")));
        }
        if !(dj > 0.0 && dj.is_finite()) {
            return Err(Error::InvalidGrid(format!("dj must be positive, got {dj}")));
        }
        if !(omega0 >= 5.0 && omega0.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "omega0 must be at least 5, got {omega0}"
            )));
        }
        if num_scales == 0 {
            return Err(Error::InvalidGrid("empty scale grid".to_owned()));
        }
        let scales = (0..num_scales)
            .map(|j| s0 * (j as f64 * dj).exp2())
            .collect();
        Ok(Self {
            s0,
            dj,
            omega0,
            scales,
        })
    }

    pub fn s0(&self) -> f64 {
        self.s0
    }

    pub fn dj(&self) -> f64 {
        self.dj
    }

    pub fn omega0(&self) -> f64 {
        self.omega0
    }

    pub fn scales(&self) -> &[f64] {
        &self.scales
    }

    pub fn num_scales(&self) -> usize {
        self.scales.len()
    }

    /// Fourier period of every scale.
    pub fn periods(&self) -> Vec<f64> {
        self.scales
            .iter()
            .map(|&s| scale_to_fourier_period(s, self.omega0))
            .collect()
    }

    /// Index of the scale whose Fourier period is closest to `period`
    /// (in log distance).
    pub fn nearest_period_index(&self, period: f64) -> usize {
        let target = period.ln();
        self.periods()
            .iter()
            .enumerate()
            .min_by(|a, b| {
                (a.1.ln() - target)
                    .abs()
                    .total_cmp(&(b.1.ln() - target).abs())
            })
            .map(|(i, _)| i)
            .unwrap_or(0)
    }
}

/// Grid covering `s0 .. n*dt` with `dj` octave spacing.
pub fn build_grid(n: usize, dt: f64, s0: f64, dj: f64, omega0: f64) -> Result<ScaleGrid> {
    if n < crate::series::MIN_LEN {
        return Err(Error::SeriesTooShort {
            len: n,
            min: crate::series::MIN_LEN,
        });
    }
    if !(s0 > 0.0) || !(dj > 0.0) || !(dt > 0.0) {
        return Err(Error::InvalidGrid(format!(
            "s0, dj and dt must be positive (s0={s0}, dj={dj}, dt={dt})"
        )));
    }
    let octaves = (n as f64 * dt / s0).log2();
    if octaves < 0.0 {
        return Err(Error::InvalidGrid(format!(
            "s0={s0} exceeds the series span {}",
            n as f64 * dt
        )));
    }
    // small slack so exact powers of two are not lost to rounding
    let num_scales = (octaves / dj + 1e-9).floor() as usize + 1;
    ScaleGrid::new(s0, dj, num_scales, omega0)
}

/// Default grid for a series: `s0 = 2 dt`, `dj = 1/12`, `omega0 = 6`.
pub fn default_grid(x: &TimeSeries) -> Result<ScaleGrid> {
    build_grid(x.len(), x.dt(), 2.0 * x.dt(), DEFAULT_DJ, DEFAULT_OMEGA0)
}

/// Time-domain Morlet mother wavelet.
pub fn morlet_time(t: f64, omega0: f64) -> Complex64 {
    let envelope = PI.powf(-0.25) * (-0.5 * t * t).exp();
    Complex64::from_polar(envelope, omega0 * t)
}

/// Fourier period equivalent to Morlet scale `s`.
pub fn scale_to_fourier_period(s: f64, omega0: f64) -> f64 {
    4.0 * PI * s / (omega0 + (2.0 + omega0 * omega0).sqrt())
}

/// Cone-of-influence boundary scale per time index.
///
/// Index `i` is edge-affected at every scale above `coi[i]`, the scale whose
/// e-folding time `sqrt(2) s` equals the distance to the nearer end.
pub fn coi(n: usize, dt: f64) -> Vec<f64> {
    (0..n)
        .map(|i| dt * i.min(n.saturating_sub(1) - i) as f64 / SQRT_2)
        .collect()
}

/// Complex wavelet coefficients on a scale grid.
#[derive(Clone, Debug)]
pub struct CwtField {
    coefficients: Matrix<Complex64>,
    grid: ScaleGrid,
    dt: f64,
    coi: Vec<f64>,
}

impl CwtField {
    pub fn new(coefficients: Matrix<Complex64>, grid: ScaleGrid, dt: f64) -> Result<Self> {
        if coefficients.rows() != grid.num_scales() {
            return Err(Error::GridMismatch);
        }
        let coi = coi(coefficients.cols(), dt);
        Ok(Self {
            coefficients,
            grid,
            dt,
            coi,
        })
    }

    pub fn coefficients(&self) -> &Matrix<Complex64> {
        &self.coefficients
    }

    pub fn into_coefficients(self) -> Matrix<Complex64> {
        self.coefficients
    }

    pub fn grid(&self) -> &ScaleGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn coi(&self) -> &[f64] {
        &self.coi
    }

    pub fn len(&self) -> usize {
        self.coefficients.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.coefficients.cols() == 0
    }

    /// Same grid, length and sampling interval.
    pub fn is_compatible(&self, other: &CwtField) -> bool {
        self.grid == other.grid && self.len() == other.len() && self.dt == other.dt
    }
}

/// `|W|^2` elementwise.
pub fn power(w: &CwtField) -> Matrix<f64> {
    w.coefficients.map(|c| c.norm_sqr())
}

/// Reusable transform for many series of the same length, sampling
/// interval and grid (e.g. Monte Carlo surrogates).
pub struct CwtPlan {
    n: usize,
    dt: f64,
    grid: ScaleGrid,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    /// Fourier-domain daughter wavelets, one per scale, already divided by
    /// the padded length so the inverse FFT needs no extra scaling.
    daughters: Vec<Vec<f64>>,
}

impl CwtPlan {
    pub fn new(n: usize, dt: f64, grid: &ScaleGrid) -> Result<Self> {
        if n < crate::series::MIN_LEN {
            return Err(Error::SeriesTooShort {
                len: n,
                min: crate::series::MIN_LEN,
            });
        }
        let npad = n.next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(npad);
        let inverse = planner.plan_fft_inverse(npad);

        let omega: Vec<f64> = (0..npad)
            .map(|k| {
                let k = if k <= npad / 2 {
                    k as f64
                } else {
                    k as f64 - npad as f64
                };
                2.0 * PI * k / (npad as f64 * dt)
            })
            .collect();
        let norm_pi = PI.powf(-0.25);
        let daughters = grid
            .scales()
            .iter()
            .map(|&s| {
                let amp = (2.0 * PI * s / dt).sqrt() * norm_pi / npad as f64;
                omega
                    .iter()
                    .map(|&w| {
                        if w > 0.0 {
                            let d = s * w - grid.omega0();
                            amp * (-0.5 * d * d).exp()
                        } else {
                            0.0
                        }
                    })
                    .collect()
            })
            .collect();

        Ok(Self {
            n,
            dt,
            grid: grid.clone(),
            forward,
            inverse,
            daughters,
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn grid(&self) -> &ScaleGrid {
        &self.grid
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Transforms raw values (de-meaned internally).
    pub fn transform(&self, values: &[f64]) -> Result<CwtField> {
        let mut coefficients =
            Matrix::filled(self.grid.num_scales(), self.n, Complex64::new(0.0, 0.0));
        let mut buf = Vec::new();
        self.transform_into(values, &mut coefficients, &mut buf)?;
        CwtField::new(coefficients, self.grid.clone(), self.dt)
    }

    /// Writes the coefficients into `out` (scales by time), reusing `buf`
    /// as FFT workspace.
    pub(crate) fn transform_into(
        &self,
        values: &[f64],
        out: &mut Matrix<Complex64>,
        buf: &mut Vec<Complex64>,
    ) -> Result<()> {
        if values.len() != self.n {
            return Err(Error::LengthMismatch(values.len(), self.n));
        }
        if out.shape() != (self.grid.num_scales(), self.n) {
            return Err(Error::GridMismatch);
        }
        let zero = Complex64::new(0.0, 0.0);
        let npad = self.daughters.first().map_or(0, Vec::len);
        let scratch_len = self
            .forward
            .get_inplace_scratch_len()
            .max(self.inverse.get_inplace_scratch_len());
        buf.clear();
        buf.resize(2 * npad + scratch_len, zero);
        let (spectrum, rest) = buf.split_at_mut(npad);
        let (work, scratch) = rest.split_at_mut(npad);

        let mean = values.iter().sum::<f64>() / self.n as f64;
        for (s, &v) in spectrum.iter_mut().zip(values) {
            *s = Complex64::new(v - mean, 0.0);
        }
        self.forward.process_with_scratch(
            spectrum,
            &mut scratch[..self.forward.get_inplace_scratch_len()],
        );

        for (row, daughter) in self.daughters.iter().enumerate() {
            for ((b, &x), &d) in work.iter_mut().zip(spectrum.iter()).zip(daughter) {
                *b = x * d;
            }
            self.inverse
                .process_with_scratch(work, &mut scratch[..self.inverse.get_inplace_scratch_len()]);
            out.row_mut(row).copy_from_slice(&work[..self.n]);
        }
        Ok(())
    }
}

/// Morlet CWT of `x` on `grid`.
pub fn cwt(x: &TimeSeries, grid: &ScaleGrid) -> Result<CwtField> {
    CwtPlan::new(x.len(), x.dt(), grid)?.transform(x.values())
}
