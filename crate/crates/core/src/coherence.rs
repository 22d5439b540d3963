//! Cross-wavelet transform, time/scale smoothing, wavelet coherence, phase
//! difference and partial coherence.

use std::f64::consts::{FRAC_PI_2, PI};
use std::fmt;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::cwt::{CwtField, CwtPlan, ScaleGrid};
use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::series::TimeSeries;

/// Width of the scale boxcar in octaves.
pub const SCALE_SMOOTHING_WIDTH: f64 = 0.6;
/// The Gaussian time kernel is cut at this many scales either side.
pub const GAUSSIAN_TRUNCATION: f64 = 4.0;
/// Excess over one tolerated (and clamped) in a coherence magnitude.
pub const CLAMP_TOLERANCE: f64 = 1e-6;
/// Control coherence at or above `1 - DEGENERATE_EPS` makes partial coherence undefined.
pub const DEGENERATE_EPS: f64 = 1e-9;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
// kernels longer than this are applied by FFT
const DIRECT_KERNEL_MAX: usize = 48;

/// Smallest `2^a 3^b 5^c` not below `min`.
fn fast_fft_len(min: usize) -> usize {
    let mut best = min.next_power_of_two();
    let mut p5 = 1;
    while p5 < best {
        let mut p35 = p5;
        while p35 < best {
            let mut len = p35;
            while len < min {
                len *= 2;
            }
            best = best.min(len);
            p35 *= 3;
        }
        p5 *= 5;
    }
    best
}

/// `W_x * conj(W_y)` elementwise.
pub fn xwt(wx: &CwtField, wy: &CwtField) -> Result<CwtField> {
    if !wx.is_compatible(wy) {
        return Err(Error::GridMismatch);
    }
    let product = wx
        .coefficients()
        .zip_map(wy.coefficients(), |a, b| a * b.conj());
    CwtField::new(product, wx.grid().clone(), wx.dt())
}

enum TimeKernel {
    Direct(Vec<f64>),
    Spectral {
        fft_len: usize,
        forward: Arc<dyn Fft<f64>>,
        inverse: Arc<dyn Fft<f64>>,
        /// Kernel spectrum divided by `fft_len`.
        response: Vec<f64>,
    },
}

struct ScaleRow {
    half_width: usize,
    kernel: TimeKernel,
    /// Kernel mass falling inside the series at each time index.
    edge_mass: Vec<f64>,
}

/// Reusable buffers for [`Smoother::apply_into`].
#[derive(Default)]
pub(crate) struct SmoothWorkspace {
    timed: Option<Matrix<Complex64>>,
    buf: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

/// Time-then-scale smoothing operator for a fixed grid and series length.
///
/// Time smoothing convolves each scale row with `exp(-t^2 / (2 s^2))`
/// truncated at `±4 s`. Scale smoothing is a boxcar of
/// `0.6 / (dj ln 2)` rows rounded to the nearest odd count. Both kernels
/// have unit mass; near the series ends and grid edges the weights are
/// renormalised over the part of the kernel that overlaps the data.
pub struct Smoother {
    n: usize,
    rows: Vec<ScaleRow>,
    boxcar_rows: usize,
}

impl Smoother {
    pub fn new(grid: &ScaleGrid, n: usize, dt: f64) -> Self {
        let mut planner = FftPlanner::new();
        let rows = grid
            .scales()
            .iter()
            .map(|&s| {
                let half_width =
                    ((GAUSSIAN_TRUNCATION * s / dt).floor() as usize).min(n.saturating_sub(1));
                let weights: Vec<f64> = (0..=2 * half_width)
                    .map(|k| {
                        let t = (k as f64 - half_width as f64) * dt;
                        (-t * t / (2.0 * s * s)).exp()
                    })
                    .collect();
                let total: f64 = weights.iter().sum();
                let weights: Vec<f64> = weights.iter().map(|w| w / total).collect();

                let mut prefix = Vec::with_capacity(weights.len() + 1);
                prefix.push(0.0);
                for w in &weights {
                    prefix.push(prefix.last().unwrap() + w);
                }
                let h = half_width as isize;
                let edge_mass = (0..n as isize)
                    .map(|i| {
                        // kernel offsets k in [-h, h] with 0 <= i + k < n
                        let lo = (-h).max(-i);
                        let hi = h.min(n as isize - 1 - i);
                        prefix[(hi + h + 1) as usize] - prefix[(lo + h) as usize]
                    })
                    .collect();

                let kernel = if weights.len() <= DIRECT_KERNEL_MAX {
                    TimeKernel::Direct(weights)
                } else {
                    let fft_len = fast_fft_len(n + half_width);
                    let forward = planner.plan_fft_forward(fft_len);
                    let inverse = planner.plan_fft_inverse(fft_len);
                    let mut buf = vec![ZERO; fft_len];
                    for (k, w) in weights.iter().enumerate() {
                        let offset = k as isize - h;
                        buf[offset.rem_euclid(fft_len as isize) as usize] = Complex64::new(*w, 0.0);
                    }
                    forward.process(&mut buf);
                    let response = buf.iter().map(|c| c.re / fft_len as f64).collect();
                    TimeKernel::Spectral {
                        fft_len,
                        forward,
                        inverse,
                        response,
                    }
                };
                ScaleRow {
                    half_width,
                    kernel,
                    edge_mass,
                }
            })
            .collect();

        let ideal = SCALE_SMOOTHING_WIDTH / (grid.dj() * std::f64::consts::LN_2);
        let boxcar_rows = (2.0 * ((ideal - 1.0) / 2.0).round() + 1.0).max(1.0) as usize;
        Self {
            n,
            rows,
            boxcar_rows,
        }
    }

    pub fn for_field(field: &CwtField) -> Self {
        Self::new(field.grid(), field.len(), field.dt())
    }

    /// Number of scale rows averaged by the boxcar.
    pub fn boxcar_rows(&self) -> usize {
        self.boxcar_rows
    }

    /// Gaussian half-width, in samples, of every scale row.
    pub fn time_half_widths(&self) -> Vec<usize> {
        self.rows.iter().map(|r| r.half_width).collect()
    }

    fn smooth_time_row(
        &self,
        row: &ScaleRow,
        input: &[Complex64],
        out: &mut [Complex64],
        buf: &mut Vec<Complex64>,
        scratch: &mut Vec<Complex64>,
    ) {
        let n = self.n;
        match &row.kernel {
            TimeKernel::Direct(weights) => {
                let h = row.half_width as isize;
                for (i, o) in out.iter_mut().enumerate() {
                    let i = i as isize;
                    let lo = (-h).max(-i);
                    let hi = h.min(n as isize - 1 - i);
                    let taps = &weights[(lo + h) as usize..=(hi + h) as usize];
                    let window = &input[(i + lo) as usize..=(i + hi) as usize];
                    let mut acc = ZERO;
                    for (x, w) in window.iter().zip(taps) {
                        acc += *x * *w;
                    }
                    *o = acc;
                }
            }
            TimeKernel::Spectral {
                fft_len,
                forward,
                inverse,
                response,
            } => {
                buf.clear();
                buf.extend_from_slice(input);
                buf.resize(*fft_len, ZERO);
                let scratch_len = forward
                    .get_inplace_scratch_len()
                    .max(inverse.get_inplace_scratch_len());
                if scratch.len() < scratch_len {
                    scratch.resize(scratch_len, ZERO);
                }
                forward
                    .process_with_scratch(buf, &mut scratch[..forward.get_inplace_scratch_len()]);
                for (b, r) in buf.iter_mut().zip(response) {
                    *b *= *r;
                }
                inverse
                    .process_with_scratch(buf, &mut scratch[..inverse.get_inplace_scratch_len()]);
                out.copy_from_slice(&buf[..n]);
            }
        }
        for (o, m) in out.iter_mut().zip(&row.edge_mass) {
            *o /= *m;
        }
    }

    /// Applies time then scale smoothing.
    pub fn apply(&self, field: &Matrix<Complex64>) -> Result<Matrix<Complex64>> {
        let mut out = Matrix::filled(field.rows(), self.n, ZERO);
        let mut workspace = SmoothWorkspace::default();
        self.apply_into(field, &mut out, &mut workspace)?;
        Ok(out)
    }

    /// Smooths `field` into `out`, reusing the buffers in `workspace`.
    pub(crate) fn apply_into(
        &self,
        field: &Matrix<Complex64>,
        out: &mut Matrix<Complex64>,
        workspace: &mut SmoothWorkspace,
    ) -> Result<()> {
        let shape = (self.rows.len(), self.n);
        if field.shape() != shape || out.shape() != shape {
            return Err(Error::GridMismatch);
        }
        let SmoothWorkspace {
            timed,
            buf,
            scratch,
        } = workspace;
        let timed = match timed {
            Some(t) if t.shape() == shape => t,
            _ => timed.insert(Matrix::filled(shape.0, shape.1, ZERO)),
        };
        for (r, row) in self.rows.iter().enumerate() {
            self.smooth_time_row(row, field.row(r), timed.row_mut(r), buf, scratch);
        }

        let nrows = shape.0;
        let half = self.boxcar_rows / 2;
        for r in 0..nrows {
            let lo = r.saturating_sub(half);
            let hi = (r + half).min(nrows - 1);
            let scale = 1.0 / (hi - lo + 1) as f64;
            let dst = out.row_mut(r);
            dst.copy_from_slice(timed.row(lo));
            for src_row in lo + 1..=hi {
                for (d, s) in dst.iter_mut().zip(timed.row(src_row)) {
                    *d += *s;
                }
            }
            for d in dst.iter_mut() {
                *d *= scale;
            }
        }
        Ok(())
    }

    /// Smooths a real field.
    pub fn apply_real(&self, field: &Matrix<f64>) -> Result<Matrix<f64>> {
        let c = field.map(|&v| Complex64::new(v, 0.0));
        Ok(self.apply(&c)?.map(|c| c.re))
    }
}

/// Smoothing operator applied to a complex field on `grid`.
pub fn smooth(field: &Matrix<Complex64>, grid: &ScaleGrid, dt: f64) -> Result<Matrix<Complex64>> {
    Smoother::new(grid, field.cols(), dt).apply(field)
}

/// Wavelet coherence, coherency and phase difference on a scale grid.
#[derive(Clone, Debug)]
pub struct CoherenceResult {
    /// Coherence magnitude in `[0, 1]`; `NaN` where `undefined` is set.
    pub magnitude: Matrix<f64>,
    /// Smoothed cross spectrum normalised by the smoothed auto spectra.
    pub coherency: Matrix<Complex64>,
    /// Phase difference in `[-pi, pi]`; `NaN` where `undefined` is set.
    pub phase: Matrix<f64>,
    pub grid: ScaleGrid,
    pub coi: Vec<f64>,
    pub significance_mask: Option<Matrix<bool>>,
    /// Points where the quantity is not defined (partial coherence with a
    /// degenerate control).
    pub undefined: Option<Matrix<bool>>,
}

impl CoherenceResult {
    pub fn len(&self) -> usize {
        self.magnitude.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.magnitude.cols() == 0
    }

    /// `true` where the point lies below the cone-of-influence boundary,
    /// i.e. free of edge effects.
    pub fn reliable(&self, row: usize, col: usize) -> bool {
        self.grid.scales()[row] <= self.coi[col]
    }

    pub fn squared(&self) -> Matrix<f64> {
        self.magnitude.map(|m| m * m)
    }

    pub fn with_significance(mut self, mask: Matrix<bool>) -> Self {
        self.significance_mask = Some(mask);
        self
    }
}

/// Smoothed cross spectrum and smoothed auto spectra packed as
/// `re = S|Wx|^2`, `im = S|Wy|^2`.
fn smoothed_spectra(
    wx: &CwtField,
    wy: &CwtField,
    smoother: &Smoother,
) -> Result<(Matrix<Complex64>, Matrix<Complex64>)> {
    if !wx.is_compatible(wy) {
        return Err(Error::GridMismatch);
    }
    let cross = wx
        .coefficients()
        .zip_map(wy.coefficients(), |a, b| a * b.conj());
    // both auto spectra smoothed in one pass
    let autos = wx.coefficients().zip_map(wy.coefficients(), |a, b| {
        Complex64::new(a.norm_sqr(), b.norm_sqr())
    });
    Ok((smoother.apply(&cross)?, smoother.apply(&autos)?))
}

/// Coherence magnitude at one point, with the clamp and error rules.
fn checked_magnitude(sxy: Complex64, autos: Complex64, row: usize, col: usize) -> Result<f64> {
    let power = autos.re * autos.im;
    if !(power > 0.0) {
        return Err(Error::ZeroPower { row, col });
    }
    let mag = (sxy.norm_sqr() / power).sqrt();
    if mag > 1.0 + CLAMP_TOLERANCE {
        return Err(Error::NumericalBlowup {
            value: mag,
            row,
            col,
        });
    }
    Ok(mag)
}

/// Buffers reused across repeated magnitude-only coherence evaluations.
pub(crate) struct CoherenceWorkspace {
    cross: Matrix<Complex64>,
    autos: Matrix<Complex64>,
    s_cross: Matrix<Complex64>,
    s_autos: Matrix<Complex64>,
    smooth: SmoothWorkspace,
    pub(crate) magnitude: Matrix<f64>,
}

impl CoherenceWorkspace {
    pub(crate) fn new(rows: usize, cols: usize) -> Self {
        Self {
            cross: Matrix::filled(rows, cols, ZERO),
            autos: Matrix::filled(rows, cols, ZERO),
            s_cross: Matrix::filled(rows, cols, ZERO),
            s_autos: Matrix::filled(rows, cols, ZERO),
            smooth: SmoothWorkspace::default(),
            magnitude: Matrix::filled(rows, cols, 0.0),
        }
    }
}

/// Coherence magnitude of two coefficient matrices, written into
/// `ws.magnitude`; skips the phase and coherency fields.
pub(crate) fn coherence_magnitude_into(
    wx: &Matrix<Complex64>,
    wy: &Matrix<Complex64>,
    smoother: &Smoother,
    ws: &mut CoherenceWorkspace,
) -> Result<()> {
    if wx.shape() != wy.shape() || wx.shape() != ws.cross.shape() {
        return Err(Error::GridMismatch);
    }
    for (((c, a), &x), &y) in ws
        .cross
        .as_mut_slice()
        .iter_mut()
        .zip(ws.autos.as_mut_slice())
        .zip(wx.as_slice())
        .zip(wy.as_slice())
    {
        *c = x * y.conj();
        *a = Complex64::new(x.norm_sqr(), y.norm_sqr());
    }
    smoother.apply_into(&ws.cross, &mut ws.s_cross, &mut ws.smooth)?;
    smoother.apply_into(&ws.autos, &mut ws.s_autos, &mut ws.smooth)?;
    let cols = ws.cross.cols();
    for (i, ((m, &sxy), &a)) in ws
        .magnitude
        .as_mut_slice()
        .iter_mut()
        .zip(ws.s_cross.as_slice())
        .zip(ws.s_autos.as_slice())
        .enumerate()
    {
        *m = checked_magnitude(sxy, a, i / cols, i % cols)?.min(1.0);
    }
    Ok(())
}

/// Coherence of two precomputed wavelet fields.
pub fn coherence_from_fields(
    wx: &CwtField,
    wy: &CwtField,
    smoother: &Smoother,
) -> Result<CoherenceResult> {
    let (s_cross, s_autos) = smoothed_spectra(wx, wy, smoother)?;
    let (rows, cols) = s_cross.shape();
    let mut magnitude = Matrix::filled(rows, cols, 0.0);
    let mut coherency = Matrix::filled(rows, cols, ZERO);
    let mut phase = Matrix::filled(rows, cols, 0.0);
    for r in 0..rows {
        for c in 0..cols {
            let sxy = s_cross[(r, c)];
            let a = s_autos[(r, c)];
            let mag = checked_magnitude(sxy, a, r, c)?;
            let coh = sxy / (a.re * a.im).sqrt();
            if mag > 1.0 {
                magnitude[(r, c)] = 1.0;
                coherency[(r, c)] = coh / mag;
            } else {
                magnitude[(r, c)] = mag;
                coherency[(r, c)] = coh;
            }
            phase[(r, c)] = sxy.im.atan2(sxy.re);
        }
    }
    Ok(CoherenceResult {
        magnitude,
        coherency,
        phase,
        grid: wx.grid().clone(),
        coi: wx.coi().to_vec(),
        significance_mask: None,
        undefined: None,
    })
}

/// Wavelet coherence of two aligned series.
pub fn coherence(x: &TimeSeries, y: &TimeSeries, grid: &ScaleGrid) -> Result<CoherenceResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    let plan = CwtPlan::new(x.len(), x.dt(), grid)?;
    let wx = plan.transform(x.values())?;
    let wy = plan.transform(y.values())?;
    let smoother = Smoother::for_field(&wx);
    coherence_from_fields(&wx, &wy, &smoother)
}

/// Lead/lag reading of a phase difference.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum PhaseClass {
    /// θ = 0, arrow →.
    InPhaseNoLead,
    /// θ ∈ (0, π/2), arrow ↗.
    InPhaseXLeads,
    /// θ ∈ [π/2, π], arrow ↖.
    OutOfPhaseYLeads,
    /// θ ∈ [-π/2, 0), arrow ↘.
    InPhaseYLeads,
    /// θ ∈ [-π, -π/2), arrow ↙.
    OutOfPhaseXLeads,
}

impl PhaseClass {
    pub fn arrow(self) -> char {
        match self {
            PhaseClass::InPhaseNoLead => '→',
            PhaseClass::InPhaseXLeads => '↗',
            PhaseClass::OutOfPhaseYLeads => '↖',
            PhaseClass::InPhaseYLeads => '↘',
            PhaseClass::OutOfPhaseXLeads => '↙',
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PhaseClass::InPhaseNoLead => "in_phase_no_lead",
            PhaseClass::InPhaseXLeads => "in_phase_x_leads",
            PhaseClass::OutOfPhaseYLeads => "out_of_phase_y_leads",
            PhaseClass::InPhaseYLeads => "in_phase_y_leads",
            PhaseClass::OutOfPhaseXLeads => "out_of_phase_x_leads",
        }
    }
}

impl fmt::Display for PhaseClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Classifies a phase difference into the five co-movement cases.
///
/// The open intervals are closed on the left at ±π/2: `π/2` is out of phase
/// with y leading and `-π/2` in phase with y leading. `π` maps to
/// `OutOfPhaseYLeads` and `-π` to `OutOfPhaseXLeads`.
pub fn classify_phase(theta: f64) -> Result<PhaseClass> {
    if !(-PI..=PI).contains(&theta) {
        return Err(Error::OutOfRange(theta));
    }
    Ok(if theta == 0.0 {
        PhaseClass::InPhaseNoLead
    } else if theta > 0.0 && theta < FRAC_PI_2 {
        PhaseClass::InPhaseXLeads
    } else if theta >= FRAC_PI_2 {
        PhaseClass::OutOfPhaseYLeads
    } else if theta >= -FRAC_PI_2 {
        PhaseClass::InPhaseYLeads
    } else {
        PhaseClass::OutOfPhaseXLeads
    })
}

/// Denominator convention for partial coherence.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum PartialForm {
    /// `(C_xy - C_xz conj(C_yz)) / sqrt((1 - |C_xz|^2)(1 - |C_yz|^2))`.
    #[default]
    Standard,
    /// `|R_xy - R_xz R_yz| / sqrt((1 - R_xy^2)(1 - R_yz^2))` on real
    /// magnitudes; may exceed one. The phase is taken from the standard
    /// complex form.
    Printed,
}

/// Partial coherence from three precomputed fields.
pub fn partial_coherence_from_fields(
    wx: &CwtField,
    wy: &CwtField,
    wz: &CwtField,
    smoother: &Smoother,
    form: PartialForm,
) -> Result<CoherenceResult> {
    let cxy = coherence_from_fields(wx, wy, smoother)?;
    let cxz = coherence_from_fields(wx, wz, smoother)?;
    let cyz = coherence_from_fields(wy, wz, smoother)?;

    let (rows, cols) = cxy.magnitude.shape();
    let mut magnitude = Matrix::filled(rows, cols, f64::NAN);
    let mut coherency = Matrix::filled(rows, cols, Complex64::new(f64::NAN, f64::NAN));
    let mut phase = Matrix::filled(rows, cols, f64::NAN);
    let mut undefined = Matrix::filled(rows, cols, false);
    let limit = 1.0 - DEGENERATE_EPS;
    for r in 0..rows {
        for c in 0..cols {
            let (a, b, d) = (
                cxy.coherency[(r, c)],
                cxz.coherency[(r, c)],
                cyz.coherency[(r, c)],
            );
            let standard_degenerate = b.norm() >= limit || d.norm() >= limit;
            let degenerate = match form {
                PartialForm::Standard => standard_degenerate,
                PartialForm::Printed => standard_degenerate || a.norm() >= limit,
            };
            if degenerate {
                undefined[(r, c)] = true;
                continue;
            }
            let numer = a - b * d.conj();
            let partial = numer / ((1.0 - b.norm_sqr()) * (1.0 - d.norm_sqr())).sqrt();
            let mag = match form {
                PartialForm::Standard => partial.norm(),
                PartialForm::Printed => {
                    let (rxy, rxz, ryz) = (a.norm(), b.norm(), d.norm());
                    (rxy - rxz * ryz).abs() / ((1.0 - rxy * rxy) * (1.0 - ryz * ryz)).sqrt()
                }
            };
            if form == PartialForm::Standard && mag > 1.0 + CLAMP_TOLERANCE {
                // ill-conditioned near a degenerate control
                undefined[(r, c)] = true;
                continue;
            }
            let (mag, coh) = if form == PartialForm::Standard && mag > 1.0 {
                (1.0, partial / partial.norm())
            } else {
                (mag, partial)
            };
            magnitude[(r, c)] = mag;
            coherency[(r, c)] = coh;
            phase[(r, c)] = partial.im.atan2(partial.re);
        }
    }
    Ok(CoherenceResult {
        magnitude,
        coherency,
        phase,
        grid: cxy.grid,
        coi: cxy.coi,
        significance_mask: None,
        undefined: Some(undefined),
    })
}

/// Partial wavelet coherence of `x` and `y` controlling for `z`.
///
/// Points where the control is perfectly coherent with `x` or `y` are
/// flagged in `undefined` and carry `NaN`.
pub fn partial_coherence(
    x: &TimeSeries,
    y: &TimeSeries,
    z: &TimeSeries,
    grid: &ScaleGrid,
    form: PartialForm,
) -> Result<CoherenceResult> {
    if x.len() != y.len() {
        return Err(Error::LengthMismatch(x.len(), y.len()));
    }
    if x.len() != z.len() {
        return Err(Error::LengthMismatch(x.len(), z.len()));
    }
    let plan = CwtPlan::new(x.len(), x.dt(), grid)?;
    let wx = plan.transform(x.values())?;
    let wy = plan.transform(y.values())?;
    let wz = plan.transform(z.values())?;
    let smoother = Smoother::for_field(&wx);
    partial_coherence_from_fields(&wx, &wy, &wz, &smoother, form)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cwt::{build_grid, cwt};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn noise(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n).map(|_| rng.random::<f64>() - 0.5).collect()
    }

    fn ts(v: Vec<f64>) -> TimeSeries {
        TimeSeries::from_values(v, 1.0).unwrap()
    }

    fn grid(n: usize) -> ScaleGrid {
        build_grid(n, 1.0, 2.0, 1.0 / 12.0, 6.0).unwrap()
    }

    #[test]
    fn fast_lengths() {
        assert_eq!(fast_fft_len(512), 512);
        assert_eq!(fast_fft_len(537), 540);
        assert_eq!(fast_fft_len(1023), 1024);
        assert_eq!(fast_fft_len(7), 8);
    }

    #[test]
    fn xwt_of_self_is_power() {
        let x = ts(noise(64, 1));
        let g = grid(64);
        let w = cwt(&x, &g).unwrap();
        let p = xwt(&w, &w).unwrap();
        for (c, orig) in p
            .coefficients()
            .as_slice()
            .iter()
            .zip(w.coefficients().as_slice())
        {
            assert_eq!(c.im, 0.0);
            assert!((c.re - orig.norm_sqr()).abs() <= 1e-15 * c.re.max(1.0));
        }
    }

    #[test]
    fn xwt_phase_is_difference() {
        let g = grid(64);
        let wx = cwt(&ts(noise(64, 2)), &g).unwrap();
        let wy = cwt(&ts(noise(64, 3)), &g).unwrap();
        let p = xwt(&wx, &wy).unwrap();
        for ((c, a), b) in p
            .coefficients()
            .as_slice()
            .iter()
            .zip(wx.coefficients().as_slice())
            .zip(wy.coefficients().as_slice())
        {
            let expected = Complex64::from_polar(1.0, a.arg() - b.arg());
            assert!((c / c.norm() - expected).norm() < 1e-9);
        }
    }

    #[test]
    fn xwt_rejects_mismatched_grids() {
        let wx = cwt(&ts(noise(64, 2)), &grid(64)).unwrap();
        let wy = cwt(
            &ts(noise(64, 3)),
            &build_grid(64, 1.0, 2.0, 0.25, 6.0).unwrap(),
        )
        .unwrap();
        assert!(matches!(xwt(&wx, &wy), Err(Error::GridMismatch)));
    }

    #[test]
    fn boxcar_width_for_default_grid() {
        // 0.6 / (ln 2 / 12) = 10.39 -> 11 rows
        let s = Smoother::new(&grid(256), 256, 1.0);
        assert_eq!(s.boxcar_rows(), 11);
        let coarse = Smoother::new(&build_grid(256, 1.0, 2.0, 1.0, 6.0).unwrap(), 256, 1.0);
        assert_eq!(coarse.boxcar_rows(), 1);
    }

    #[test]
    fn smoothing_preserves_constants() {
        let g = grid(200);
        let f = Matrix::filled(g.num_scales(), 200, Complex64::new(2.5, -1.0));
        let out = smooth(&f, &g, 1.0).unwrap();
        for v in out.as_slice() {
            assert!((v - Complex64::new(2.5, -1.0)).norm() < 1e-12);
        }
    }

    #[test]
    fn smoothing_is_linear() {
        let g = grid(128);
        let rows = g.num_scales();
        let f = Matrix::from_vec(
            rows,
            128,
            noise(rows * 128 * 2, 7)
                .chunks(2)
                .map(|c| Complex64::new(c[0], c[1]))
                .collect(),
        );
        let h = Matrix::from_vec(
            rows,
            128,
            noise(rows * 128 * 2, 8)
                .chunks(2)
                .map(|c| Complex64::new(c[0], c[1]))
                .collect(),
        );
        let (a, b) = (1.7, -0.3);
        let combo = f.zip_map(&h, |p, q| p * a + q * b);
        let s = Smoother::new(&g, 128, 1.0);
        let lhs = s.apply(&combo).unwrap();
        let sf = s.apply(&f).unwrap();
        let sh = s.apply(&h).unwrap();
        for ((l, p), q) in lhs.as_slice().iter().zip(sf.as_slice()).zip(sh.as_slice()) {
            assert!((l - (p * a + q * b)).norm() < 1e-10);
        }
    }

    #[test]
    fn impulse_response_has_unit_mass() {
        // direct-summation oracle: away from every edge the response to a
        // unit impulse is the product of the two unit-mass kernels
        let n = 512;
        let g = grid(n);
        let s = Smoother::new(&g, n, 1.0);
        for &row in &[10usize, 30, 45] {
            let col = n / 2;
            let mut f = Matrix::filled(g.num_scales(), n, Complex64::new(0.0, 0.0));
            f[(row, col)] = Complex64::new(1.0, 0.0);
            let out = s.apply(&f).unwrap();
            let mass: f64 = out.as_slice().iter().map(|c| c.re).sum();
            assert!((mass - 1.0).abs() < 1e-9, "row {row}: {mass}");
            // support limited to the boxcar rows around `row`
            let half = s.boxcar_rows() / 2;
            for r in 0..g.num_scales() {
                let row_mass: f64 = out.row(r).iter().map(|c| c.re.abs()).sum();
                if r + half < row || r > row + half {
                    assert!(row_mass < 1e-12);
                }
            }
        }
    }

    #[test]
    fn self_coherence_is_one() {
        let x = ts(noise(256, 11));
        let r = coherence(&x, &x, &grid(256)).unwrap();
        assert!(r
            .magnitude
            .as_slice()
            .iter()
            .all(|&m| m >= 1.0 - 1e-6 && m <= 1.0));
    }

    #[test]
    fn coherence_is_symmetric() {
        let x = ts(noise(256, 12));
        let y = ts(noise(256, 13));
        let g = grid(256);
        let a = coherence(&x, &y, &g).unwrap();
        let b = coherence(&y, &x, &g).unwrap();
        for i in 0..a.magnitude.as_slice().len() {
            assert!((a.magnitude.as_slice()[i] - b.magnitude.as_slice()[i]).abs() < 1e-9);
            let dphi = a.phase.as_slice()[i] + b.phase.as_slice()[i];
            let wrapped = (dphi + PI).rem_euclid(2.0 * PI) - PI;
            assert!(wrapped.abs() < 1e-9);
        }
    }

    #[test]
    fn coherence_length_mismatch() {
        let x = ts(noise(64, 1));
        let y = ts(noise(65, 2));
        assert!(matches!(
            coherence(&x, &y, &grid(64)),
            Err(Error::LengthMismatch(64, 65))
        ));
    }

    #[test]
    fn quarter_cycle_phase() {
        let n = 512;
        let x = ts((0..n).map(|t| (2.0 * PI * t as f64 / 32.0).cos()).collect());
        let y = ts((0..n).map(|t| (2.0 * PI * t as f64 / 32.0).sin()).collect());
        let g = grid(n);
        let r = coherence(&x, &y, &g).unwrap();
        let row = g.nearest_period_index(32.0);
        for c in 0..n {
            if r.reliable(row, c) {
                assert!(r.magnitude[(row, c)] > 0.95);
                assert!((r.phase[(row, c)] - FRAC_PI_2).abs() < 0.15);
            }
        }
    }

    #[test]
    fn phase_classes() {
        use PhaseClass::*;
        assert_eq!(classify_phase(0.0).unwrap(), InPhaseNoLead);
        assert_eq!(classify_phase(PI / 4.0).unwrap(), InPhaseXLeads);
        assert_eq!(classify_phase(-3.0 * PI / 4.0).unwrap(), OutOfPhaseXLeads);
        assert_eq!(classify_phase(3.0 * PI / 4.0).unwrap(), OutOfPhaseYLeads);
        assert_eq!(classify_phase(-PI / 4.0).unwrap(), InPhaseYLeads);
        assert_eq!(classify_phase(FRAC_PI_2).unwrap(), OutOfPhaseYLeads);
        assert_eq!(classify_phase(-FRAC_PI_2).unwrap(), InPhaseYLeads);
        assert_eq!(classify_phase(PI).unwrap(), OutOfPhaseYLeads);
        assert_eq!(classify_phase(-PI).unwrap(), OutOfPhaseXLeads);
        assert_eq!(classify_phase(-0.0).unwrap(), InPhaseNoLead);
        assert!(matches!(classify_phase(3.2), Err(Error::OutOfRange(_))));
        assert!(classify_phase(f64::NAN).is_err());
        assert_eq!(InPhaseXLeads.arrow(), '↗');
    }

    #[test]
    fn partial_with_control_equal_to_x_is_undefined_everywhere() {
        let x = ts(noise(128, 21));
        let y = ts(noise(128, 22));
        let r = partial_coherence(&x, &y, &x, &grid(128), PartialForm::Standard).unwrap();
        let undefined = r.undefined.as_ref().unwrap();
        assert!(undefined.as_slice().iter().all(|&u| u));
        assert!(r.magnitude.as_slice().iter().all(|m| m.is_nan()));
    }

    #[test]
    fn partial_magnitude_bounded() {
        let n = 256;
        let z = noise(n, 31);
        let x: Vec<f64> = z
            .iter()
            .zip(noise(n, 32))
            .map(|(a, b)| a + 0.5 * b)
            .collect();
        let y: Vec<f64> = z
            .iter()
            .zip(noise(n, 33))
            .map(|(a, b)| a - 0.5 * b)
            .collect();
        let r = partial_coherence(&ts(x), &ts(y), &ts(z), &grid(n), PartialForm::Standard).unwrap();
        for (m, u) in r
            .magnitude
            .as_slice()
            .iter()
            .zip(r.undefined.unwrap().as_slice())
        {
            if !u {
                assert!((0.0..=1.0).contains(m));
            }
        }
    }
}
