//! Time-frequency co-movement and wavelet-entropy predictability for paired
//! time series.
//!
//! The crate is organised along the analysis pipeline:
//!
//! * [`series`] loads, aligns and summarises uniformly sampled series.
//! * [`cwt`] computes the Morlet continuous wavelet transform, its power and
//!   the cone of influence.
//! * [`coherence`] builds cross-wavelet fields, smoothed wavelet coherence,
//!   phase differences and partial coherence.
//! * [`significance`] estimates coherence critical values from AR(1)
//!   red-noise surrogates.
//! * [`dwt`] is the orthonormal pyramid DWT used by the entropy measures.
//! * [`entropy`] derives relative wavelet energies, wavelet entropy, WEEM and
//!   the Kullback-Leibler based CWEEM.

pub mod coherence;
pub mod cwt;
pub mod dwt;
pub mod entropy;
mod error;
pub mod matrix;
pub mod series;
pub mod significance;

pub use coherence::{
    classify_phase, coherence, partial_coherence, smooth, xwt, CoherenceResult, PartialForm,
    PhaseClass, Smoother,
};
pub use cwt::{
    build_grid, coi, cwt, morlet_time, power, scale_to_fourier_period, CwtField, CwtPlan, ScaleGrid,
};
pub use dwt::{
    dwt_forward, dwt_inverse, make_filter, max_level, DwtDecomposition, FilterKind, WaveletFilter,
};
pub use entropy::{
    cweem, energy_distribution, kl_entropy, wavelet_entropy, weem, EnergyDistribution,
    EntropyReport, ExpBase, WhiteNoiseReference,
};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use series::{align, describe, load_csv, CsvOptions, ShapeStats, SummaryStats, TimeSeries};
pub use significance::{
    coherence_significance, fit_ar1, partial_coherence_significance, surrogate, Ar1Model,
    SignificanceField,
};
