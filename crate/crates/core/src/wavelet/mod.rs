//! Orthogonal Daubechies DWT, threshold compression and the PRD metric.
//!
//! The transform is critically sampled with periodic extension. Frames whose
//! length is not a power of two are zero-padded for the transform; PRD is
//! always measured on the original (unpadded) samples.

mod filters;

use std::fmt;
use std::str::FromStr;

pub use filters::{daubechies_lowpass, quadrature_mirror, MAX_ORDER};

use crate::error::{Error, Result};

/// A finite sampled signal with its acquisition parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct SignalFrame {
    samples: Vec<f64>,
    fs: f64,
    n_bits: u32,
}

impl SignalFrame {
    pub fn new(samples: Vec<f64>, fs: f64, n_bits: u32) -> Result<Self> {
        if samples.is_empty() {
            return Err(Error::config("signal frame has no samples"));
        }
        if let Some(i) = samples.iter().position(|s| !s.is_finite()) {
            return Err(Error::config(format!("sample {i} is not finite")));
        }
        if !(fs.is_finite() && fs > 0.0) {
            return Err(Error::config(format!(
                "sampling rate must be > 0, got {fs}"
            )));
        }
        if n_bits == 0 {
            return Err(Error::config("bits per sample must be >= 1"));
        }
        Ok(Self {
            samples,
            fs,
            n_bits,
        })
    }

    pub fn samples(&self) -> &[f64] {
        &self.samples
    }

    pub fn fs(&self) -> f64 {
        self.fs
    }

    pub fn n_bits(&self) -> u32 {
        self.n_bits
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    pub fn norm(&self) -> f64 {
        l2_norm(&self.samples)
    }
}

/// Signal extension used at the frame edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Boundary {
    /// Periodic wrap-around; keeps the transform orthogonal and critically sampled.
    #[default]
    Periodic,
}

impl fmt::Display for Boundary {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Boundary::Periodic => f.write_str("periodic"),
        }
    }
}

impl FromStr for Boundary {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "periodic" | "periodization" | "per" => Ok(Boundary::Periodic),
            other => Err(Error::config(format!(
                "unsupported boundary mode `{other}` (only `periodic` keeps the transform critically sampled)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct WaveletConfig {
    pub family_order: usize,
    pub levels: usize,
    pub boundary: Boundary,
}

impl Default for WaveletConfig {
    fn default() -> Self {
        Self {
            family_order: 4,
            levels: 5,
            boundary: Boundary::Periodic,
        }
    }
}

impl WaveletConfig {
    /// Deepest decomposition supported for a frame of `len` samples.
    pub fn max_levels(family_order: usize, len: usize) -> usize {
        let padded = padded_len(len);
        let support = 2 * family_order - 1;
        if padded < support {
            return 0;
        }
        (padded / support).ilog2() as usize
    }

    pub fn validate(&self) -> Result<()> {
        if !(1..=MAX_ORDER).contains(&self.family_order) {
            return Err(Error::config(format!(
                "wavelet order {} outside 1..={MAX_ORDER}",
                self.family_order
            )));
        }
        if self.levels == 0 {
            return Err(Error::config("decomposition levels must be >= 1"));
        }
        Ok(())
    }

    pub fn validate_for(&self, len: usize) -> Result<()> {
        self.validate()?;
        let max = Self::max_levels(self.family_order, len);
        if self.levels > max {
            return Err(Error::config(format!(
                "frame of {len} samples supports at most {max} levels of db{}, requested {}",
                self.family_order, self.levels
            )));
        }
        Ok(())
    }
}

/// Wavelet-domain coefficients laid out as `[a_J, d_J, d_{J-1}, ..., d_1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct CoefficientVector {
    pub coeffs: Vec<f64>,
    /// Length of each band, in storage order.
    pub layout: Vec<usize>,
    /// Number of samples in the frame before zero padding.
    pub original_len: usize,
    pub fs: f64,
    pub n_bits: u32,
}

impl CoefficientVector {
    pub fn len(&self) -> usize {
        self.coeffs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.coeffs.is_empty()
    }

    pub fn energy(&self) -> f64 {
        self.coeffs.iter().map(|c| c * c).sum()
    }

    /// Band `i` in storage order (0 is the coarsest approximation).
    pub fn band(&self, i: usize) -> &[f64] {
        let start: usize = self.layout[..i].iter().sum();
        &self.coeffs[start..start + self.layout[i]]
    }

    pub fn count_zeros(&self) -> usize {
        self.coeffs.iter().filter(|c| **c == 0.0).count()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompressionResult {
    pub kept: CoefficientVector,
    /// Realized fraction of zeroed coefficients.
    pub kappa: f64,
    pub delta: f64,
    pub zeroed: usize,
}

impl CompressionResult {
    pub fn reconstruct(&self, cfg: &WaveletConfig) -> Result<SignalFrame> {
        dwt_inverse(&self.kept, cfg)
    }
}

pub fn padded_len(len: usize) -> usize {
    len.max(1).next_power_of_two()
}

fn l2_norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn analysis_step(x: &[f64], lo: &[f64], hi: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let n = x.len();
    let half = n / 2;
    let mut approx = vec![0.0; half];
    let mut detail = vec![0.0; half];
    for k in 0..half {
        let (mut a, mut d) = (0.0, 0.0);
        for (j, (&l, &h)) in lo.iter().zip(hi).enumerate() {
            let v = x[(2 * k + j) % n];
            a += l * v;
            d += h * v;
        }
        approx[k] = a;
        detail[k] = d;
    }
    (approx, detail)
}

fn synthesis_step(approx: &[f64], detail: &[f64], lo: &[f64], hi: &[f64]) -> Vec<f64> {
    let n = approx.len() * 2;
    let mut x = vec![0.0; n];
    for k in 0..approx.len() {
        for (j, (&l, &h)) in lo.iter().zip(hi).enumerate() {
            x[(2 * k + j) % n] += l * approx[k] + h * detail[k];
        }
    }
    x
}

/// Multi-level forward DWT.
pub fn dwt_forward(frame: &SignalFrame, cfg: &WaveletConfig) -> Result<CoefficientVector> {
    cfg.validate_for(frame.len())?;
    let lo = daubechies_lowpass(cfg.family_order);
    let hi = quadrature_mirror(lo);

    let mut approx = frame.samples.clone();
    approx.resize(padded_len(frame.len()), 0.0);

    let mut details: Vec<Vec<f64>> = Vec::with_capacity(cfg.levels);
    for _ in 0..cfg.levels {
        let (a, d) = analysis_step(&approx, lo, &hi);
        approx = a;
        details.push(d);
    }

    let mut layout = Vec::with_capacity(cfg.levels + 1);
    layout.push(approx.len());
    let mut coeffs = approx;
    for d in details.into_iter().rev() {
        layout.push(d.len());
        coeffs.extend(d);
    }
    Ok(CoefficientVector {
        coeffs,
        layout,
        original_len: frame.len(),
        fs: frame.fs,
        n_bits: frame.n_bits,
    })
}

/// Inverse of [`dwt_forward`]; the padding is stripped from the result.
pub fn dwt_inverse(coeffs: &CoefficientVector, cfg: &WaveletConfig) -> Result<SignalFrame> {
    cfg.validate()?;
    let total = padded_len(coeffs.original_len);
    if coeffs.coeffs.len() != total {
        return Err(Error::shape(format!(
            "expected {total} coefficients for a {}-sample frame, got {}",
            coeffs.original_len,
            coeffs.coeffs.len()
        )));
    }
    if coeffs.layout.len() != cfg.levels + 1 {
        return Err(Error::shape(format!(
            "layout has {} bands, configuration expects {}",
            coeffs.layout.len(),
            cfg.levels + 1
        )));
    }
    let expected: Vec<usize> = std::iter::once(total >> cfg.levels)
        .chain((1..=cfg.levels).rev().map(|l| total >> l))
        .collect();
    if coeffs.layout != expected {
        return Err(Error::shape(format!(
            "band layout {:?} does not match {:?}",
            coeffs.layout, expected
        )));
    }

    let lo = daubechies_lowpass(cfg.family_order);
    let hi = quadrature_mirror(lo);
    let mut offset = coeffs.layout[0];
    let mut approx = coeffs.coeffs[..offset].to_vec();
    for &band in &coeffs.layout[1..] {
        let detail = &coeffs.coeffs[offset..offset + band];
        approx = synthesis_step(&approx, detail, lo, &hi);
        offset += band;
    }
    approx.truncate(coeffs.original_len);
    SignalFrame::new(approx, coeffs.fs, coeffs.n_bits)
}

/// Number of coefficients to zero so the realized fraction is the smallest
/// one not below `kappa`.
pub fn zero_count(kappa: f64, len: usize) -> usize {
    let raw = kappa * len as f64;
    // Absorb representation error such as 0.3 * 10 = 3.0000000000000004.
    let k = (raw - 1e-9 * len as f64).ceil();
    (k.max(0.0) as usize).min(len)
}

fn check_ratio(kappa: f64) -> Result<()> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::config(format!(
            "compression ratio must be in [0, 1], got {kappa}"
        )));
    }
    Ok(())
}

/// Coefficient indices ordered by magnitude, ties by position.
fn magnitude_order(coeffs: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..coeffs.len()).collect();
    idx.sort_by(|&a, &b| coeffs[a].abs().total_cmp(&coeffs[b].abs()));
    idx
}

/// Smallest magnitude threshold `delta` such that zeroing every `|c| < delta`
/// removes at least a `kappa_target` fraction of the coefficients.
pub fn threshold_for_ratio(coeffs: &CoefficientVector, kappa_target: f64) -> Result<f64> {
    check_ratio(kappa_target)?;
    let k = zero_count(kappa_target, coeffs.len());
    if k == 0 {
        return Ok(0.0);
    }
    let mut mags: Vec<f64> = coeffs.coeffs.iter().map(|c| c.abs()).collect();
    mags.sort_by(f64::total_cmp);
    Ok(mags[k - 1].next_up())
}

/// Forward transform followed by zeroing the `ceil(kappa * len)` smallest
/// coefficients.
pub fn compress(frame: &SignalFrame, cfg: &WaveletConfig, kappa: f64) -> Result<CompressionResult> {
    check_ratio(kappa)?;
    let mut kept = dwt_forward(frame, cfg)?;
    let len = kept.len();
    let k = zero_count(kappa, len);
    let order = magnitude_order(&kept.coeffs);
    let delta = if k == 0 {
        0.0
    } else {
        kept.coeffs[order[k - 1]].abs().next_up()
    };
    for &i in &order[..k] {
        kept.coeffs[i] = 0.0;
    }
    Ok(CompressionResult {
        kept,
        kappa: k as f64 / len as f64,
        delta,
        zeroed: k,
    })
}

/// Percentage root-mean-square difference, `100 * |x - x_hat| / |x|`.
pub fn prd(original: &SignalFrame, reconstructed: &SignalFrame) -> Result<f64> {
    prd_slices(original.samples(), reconstructed.samples())
}

pub fn prd_slices(original: &[f64], reconstructed: &[f64]) -> Result<f64> {
    if original.len() != reconstructed.len() {
        return Err(Error::shape(format!(
            "PRD needs equal lengths, got {} and {}",
            original.len(),
            reconstructed.len()
        )));
    }
    let norm = l2_norm(original);
    if norm == 0.0 {
        return Err(Error::UndefinedMetric(
            "PRD is undefined for a zero-norm original signal".into(),
        ));
    }
    let err = original
        .iter()
        .zip(reconstructed)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt();
    Ok(100.0 * err / norm)
}

/// PRD after compressing `frame` to ratio `kappa` and reconstructing it.
pub fn compression_prd(frame: &SignalFrame, cfg: &WaveletConfig, kappa: f64) -> Result<f64> {
    let result = compress(frame, cfg, kappa)?;
    prd(frame, &result.reconstruct(cfg)?)
}
