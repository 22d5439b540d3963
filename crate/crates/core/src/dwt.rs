//! Orthonormal discrete wavelet transform by the pyramid algorithm.
//!
//! Stages filter with circular indexing. Series whose length is not a
//! multiple of `2^J` are first extended by symmetric reflection.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

const SQRT_HALF: f64 = std::f64::consts::FRAC_1_SQRT_2;

/// Least-asymmetric width-8 scaling filter (Daubechies LA(8)).
const LA8_SCALING: [f64; 8] = [
    -0.075_765_714_789_340_7,
    -0.029_635_527_645_954_1,
    0.497_618_667_632_457_8,
    0.803_738_751_805_216_3,
    0.297_857_795_605_542_2,
    -0.099_219_543_576_935_4,
    -0.012_603_967_262_261_2,
    0.032_223_100_604_071_3,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum FilterKind {
    Haar,
    D4,
    La8,
}

impl FilterKind {
    pub fn name(self) -> &'static str {
        match self {
            FilterKind::Haar => "haar",
            FilterKind::D4 => "d4",
            FilterKind::La8 => "la8",
        }
    }

    pub const ALL: [FilterKind; 3] = [FilterKind::Haar, FilterKind::D4, FilterKind::La8];
}

impl fmt::Display for FilterKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FilterKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "haar" => Ok(FilterKind::Haar),
            "d4" => Ok(FilterKind::D4),
            "la8" => Ok(FilterKind::La8),
            _ => Err(Error::UnknownFilter(s.to_owned())),
        }
    }
}

/// Wavelet filter `h` and its quadrature-mirror scaling filter
/// `g_l = (-1)^(l+1) h_(L-1-l)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WaveletFilter {
    kind: FilterKind,
    h: Vec<f64>,
    g: Vec<f64>,
}

impl WaveletFilter {
    pub fn new(kind: FilterKind) -> Self {
        let scaling: Vec<f64> = match kind {
            FilterKind::Haar => vec![SQRT_HALF, SQRT_HALF],
            FilterKind::D4 => {
                let r3 = 3f64.sqrt();
                let d = 4.0 * std::f64::consts::SQRT_2;
                vec![
                    (1.0 + r3) / d,
                    (3.0 + r3) / d,
                    (3.0 - r3) / d,
                    (1.0 - r3) / d,
                ]
            }
            FilterKind::La8 => LA8_SCALING.to_vec(),
        };
        let h = wavelet_from_scaling(&scaling);
        let g = scaling_from_wavelet(&h);
        Self { kind, h, g }
    }

    pub fn kind(&self) -> FilterKind {
        self.kind
    }

    pub fn name(&self) -> &'static str {
        self.kind.name()
    }

    /// Wavelet (high-pass) filter.
    pub fn h(&self) -> &[f64] {
        &self.h
    }

    /// Scaling (low-pass) filter.
    pub fn g(&self) -> &[f64] {
        &self.g
    }

    pub fn width(&self) -> usize {
        self.h.len()
    }
}

/// `g_l = (-1)^(l+1) h_(L-1-l)`.
pub fn scaling_from_wavelet(h: &[f64]) -> Vec<f64> {
    let len = h.len();
    (0..len)
        .map(|l| {
            if l % 2 == 0 {
                -h[len - 1 - l]
            } else {
                h[len - 1 - l]
            }
        })
        .collect()
}

/// `h_l = (-1)^l g_(L-1-l)`.
pub fn wavelet_from_scaling(g: &[f64]) -> Vec<f64> {
    let len = g.len();
    (0..len)
        .map(|l| {
            if l % 2 == 0 {
                g[len - 1 - l]
            } else {
                -g[len - 1 - l]
            }
        })
        .collect()
}

/// Looks up a filter by name (`haar`, `d4`, `la8`).
pub fn make_filter(name: &str) -> Result<WaveletFilter> {
    Ok(WaveletFilter::new(name.parse()?))
}

/// Largest level `floor(log2((n - 1) / (L - 1) + 1))` at which some wavelet
/// coefficients are free of the circular boundary.
pub fn max_level(n: usize, width: usize) -> Result<usize> {
    if width < 2 || n < width {
        return Err(Error::SeriesShorterThanFilter { len: n, width });
    }
    let ratio = (n - 1) as f64 / (width - 1) as f64 + 1.0;
    Ok(ratio.log2().floor() as usize)
}

/// How the input was extended before the transform.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Padding {
    None,
    /// Half-sample symmetric reflection appended at the end.
    SymmetricReflection {
        count: usize,
    },
}

impl Padding {
    pub fn count(self) -> usize {
        match self {
            Padding::None => 0,
            Padding::SymmetricReflection { count } => count,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct DwtDecomposition {
    /// `W_1 .. W_J`, with `|W_j| = N / 2^j` for the padded length `N`.
    pub wavelet: Vec<Vec<f64>>,
    /// `V_J`.
    pub scaling: Vec<f64>,
    pub filter: WaveletFilter,
    pub original_len: usize,
    pub padding: Padding,
}

impl DwtDecomposition {
    pub fn levels(&self) -> usize {
        self.wavelet.len()
    }

    pub fn padded_len(&self) -> usize {
        self.original_len + self.padding.count()
    }

    /// `||W_j||^2` for each level.
    pub fn level_energies(&self) -> Vec<f64> {
        self.wavelet
            .iter()
            .map(|w| w.iter().map(|v| v * v).sum())
            .collect()
    }

    pub fn scaling_energy(&self) -> f64 {
        self.scaling.iter().map(|v| v * v).sum()
    }

    /// Coefficients stacked as `[W_1, .., W_J, V_J]`.
    pub fn flatten(&self) -> Vec<f64> {
        self.wavelet
            .iter()
            .flatten()
            .chain(&self.scaling)
            .copied()
            .collect()
    }
}

/// Symmetric extension of `x` to `len` samples (period `2 n`).
fn reflect_pad(x: &[f64], len: usize) -> Vec<f64> {
    let n = x.len();
    (0..len)
        .map(|m| {
            let k = m % (2 * n);
            if k < n {
                x[k]
            } else {
                x[2 * n - 1 - k]
            }
        })
        .collect()
}

/// One pyramid stage: splits `v` (even length `M`) into wavelet and scaling
/// coefficients of length `M / 2`.
fn analysis_stage(v: &[f64], h: &[f64], g: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = v.len();
    let half = m / 2;
    let mut w = vec![0.0; half];
    let mut s = vec![0.0; half];
    for t in 0..half {
        let mut u = 2 * t + 1;
        let mut wt = h[0] * v[u];
        let mut st = g[0] * v[u];
        for l in 1..h.len() {
            u = if u == 0 { m - 1 } else { u - 1 };
            wt += h[l] * v[u];
            st += g[l] * v[u];
        }
        w[t] = wt;
        s[t] = st;
    }
    (w, s)
}

/// Adjoint of [`analysis_stage`].
fn synthesis_stage(w: &[f64], s: &[f64], h: &[f64], g: &[f64]) -> Vec<f64> {
    let m = 2 * w.len();
    let mut v = vec![0.0; m];
    for t in 0..w.len() {
        let mut u = 2 * t + 1;
        v[u] += h[0] * w[t] + g[0] * s[t];
        for l in 1..h.len() {
            u = if u == 0 { m - 1 } else { u - 1 };
            v[u] += h[l] * w[t] + g[l] * s[t];
        }
    }
    v
}

/// `J`-level DWT of `x`.
///
/// `x` is reflected up to the next multiple of `2^J`. Depths with
/// `2^J > x.len()` are rejected.
pub fn dwt_forward(x: &[f64], levels: usize, filter: &WaveletFilter) -> Result<DwtDecomposition> {
    let n = x.len();
    if levels == 0 || levels >= usize::BITS as usize || (1usize << levels) > n {
        return Err(Error::LevelTooDeep { levels, len: n });
    }
    let block = 1usize << levels;
    let padded_len = n.div_ceil(block) * block;
    let padding = if padded_len == n {
        Padding::None
    } else {
        Padding::SymmetricReflection {
            count: padded_len - n,
        }
    };
    let mut v = reflect_pad(x, padded_len);
    let mut wavelet = Vec::with_capacity(levels);
    for _ in 0..levels {
        let (w, s) = analysis_stage(&v, filter.h(), filter.g());
        wavelet.push(w);
        v = s;
    }
    Ok(DwtDecomposition {
        wavelet,
        scaling: v,
        filter: filter.clone(),
        original_len: n,
        padding,
    })
}

/// Inverts [`dwt_forward`] and strips the padding.
pub fn dwt_inverse(d: &DwtDecomposition) -> Vec<f64> {
    let mut v = d.scaling.clone();
    for w in d.wavelet.iter().rev() {
        v = synthesis_stage(w, &v, d.filter.h(), d.filter.g());
    }
    v.truncate(d.original_len);
    v
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn haar_coefficients() {
        let f = make_filter("haar").unwrap();
        assert_eq!(f.h(), &[0.7071067811865476, -0.7071067811865476]);
        assert_eq!(f.g(), &[0.7071067811865476, 0.7071067811865476]);
    }

    #[test]
    fn filters_satisfy_basic_properties() {
        for kind in FilterKind::ALL {
            let f = WaveletFilter::new(kind);
            let h = f.h();
            assert!(h.iter().sum::<f64>().abs() < 1e-12, "{kind} sum");
            assert!(
                (h.iter().map(|v| v * v).sum::<f64>() - 1.0).abs() < 1e-12,
                "{kind} norm"
            );
            for shift in 1..h.len() / 2 {
                let dot: f64 = (0..h.len() - 2 * shift)
                    .map(|l| h[l] * h[l + 2 * shift])
                    .sum();
                assert!(dot.abs() < 1e-12, "{kind} shift {shift}");
            }
            assert!((f.g().iter().sum::<f64>() - std::f64::consts::SQRT_2).abs() < 1e-12);
        }
    }

    #[test]
    fn qmf_roundtrip_is_exact() {
        for kind in FilterKind::ALL {
            let f = WaveletFilter::new(kind);
            assert_eq!(wavelet_from_scaling(f.g()), f.h());
        }
    }

    #[test]
    fn unknown_filter() {
        assert!(matches!(make_filter("db99"), Err(Error::UnknownFilter(_))));
    }

    #[test]
    fn level_bounds() {
        assert_eq!(max_level(237, 2).unwrap(), 7);
        assert_eq!(max_level(237, 8).unwrap(), 5);
        assert!(matches!(
            max_level(4, 8),
            Err(Error::SeriesShorterThanFilter { .. })
        ));
    }

    #[test]
    fn constant_input_haar() {
        let f = make_filter("haar").unwrap();
        let d = dwt_forward(&[1.0; 4], 2, &f).unwrap();
        assert_eq!(d.wavelet[0].len(), 2);
        assert_eq!(d.wavelet[1].len(), 1);
        for w in &d.wavelet {
            assert!(w.iter().all(|v| v.abs() < 1e-15));
        }
        assert!((d.scaling[0] - 2.0).abs() < 1e-15);
        assert!((d.scaling_energy() - 4.0).abs() < 1e-14);
    }

    #[test]
    fn impulse_energy() {
        let f = make_filter("haar").unwrap();
        let mut x = vec![0.0; 8];
        x[0] = 1.0;
        let d = dwt_forward(&x, 3, &f).unwrap();
        let total: f64 = d.level_energies().iter().sum::<f64>() + d.scaling_energy();
        assert!((total - 1.0).abs() < 1e-15);
    }

    #[test]
    fn padding_is_recorded() {
        let f = make_filter("la8").unwrap();
        let x: Vec<f64> = (0..237).map(|i| (i as f64 * 0.3).sin()).collect();
        let d = dwt_forward(&x, 7, &f).unwrap();
        assert_eq!(d.padded_len(), 256);
        assert_eq!(d.padding, Padding::SymmetricReflection { count: 19 });
        assert_eq!(d.scaling.len(), 2);
        let back = dwt_inverse(&d);
        assert_eq!(back.len(), 237);
        for (a, b) in back.iter().zip(&x) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn reflection_handles_long_padding() {
        assert_eq!(
            reflect_pad(&[1.0, 2.0, 3.0], 8),
            vec![1.0, 2.0, 3.0, 3.0, 2.0, 1.0, 1.0, 2.0]
        );
    }

    #[test]
    fn rejects_too_deep() {
        let f = make_filter("haar").unwrap();
        assert!(matches!(
            dwt_forward(&[1.0; 8], 4, &f),
            Err(Error::LevelTooDeep { .. })
        ));
        assert!(matches!(
            dwt_forward(&[1.0; 8], 0, &f),
            Err(Error::LevelTooDeep { .. })
        ));
    }

    #[test]
    fn coarse_approximation_energy() {
        let f = make_filter("d4").unwrap();
        let x: Vec<f64> = (0..64).map(|i| ((i * 7919) % 31) as f64 - 15.0).collect();
        let mut d = dwt_forward(&x, 3, &f).unwrap();
        for w in d.wavelet.iter_mut() {
            w.iter_mut().for_each(|v| *v = 0.0);
        }
        let approx = dwt_inverse(&d);
        let e: f64 = approx.iter().map(|v| v * v).sum();
        assert!((e - d.scaling_energy()).abs() < 1e-9 * e.max(1.0));
    }

    #[test]
    fn zero_decomposition_inverts_to_zero() {
        let f = make_filter("la8").unwrap();
        let mut d = dwt_forward(&[1.0; 16], 2, &f).unwrap();
        d.wavelet.iter_mut().flatten().for_each(|v| *v = 0.0);
        d.scaling.iter_mut().for_each(|v| *v = 0.0);
        assert!(dwt_inverse(&d).iter().all(|&v| v == 0.0));
    }
}
