//! Rate-distortion sampling of the codec and the exponential model
//! `D = a * exp(b * Rs)` fitted by least squares on `ln D`.

use crate::error::{Error, Result};
use crate::wavelet::{compress, prd, SignalFrame, WaveletConfig};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RateDistortionSample {
    /// Generated data rate in bit/s.
    pub rs: f64,
    /// PRD in percent.
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpDistortionModel {
    /// Distortion at zero rate, percent.
    pub a: f64,
    /// Decay rate per bit/s; negative for a useful codec.
    pub b: f64,
    /// Coefficient of determination of the fit in the log domain.
    pub r_squared: f64,
    /// Coefficient of determination of `a * exp(b * rs)` against the raw
    /// distortions; reported for reference only.
    pub r_squared_linear: f64,
}

impl ExpDistortionModel {
    /// Model parameters without goodness-of-fit information.
    pub fn new(a: f64, b: f64) -> Result<Self> {
        if !(a.is_finite() && a > 0.0) {
            return Err(Error::config(format!(
                "distortion model needs a > 0, got {a}"
            )));
        }
        if !b.is_finite() {
            return Err(Error::config("distortion model slope b must be finite"));
        }
        Ok(Self {
            a,
            b,
            r_squared: 1.0,
            r_squared_linear: 1.0,
        })
    }

    pub fn eval(&self, rs: f64) -> f64 {
        eval_distortion(self, rs)
    }

    /// `ln D(rs)` evaluated without forming `D`, so it stays exact when
    /// `exp(b * rs)` would underflow.
    pub fn ln_eval(&self, rs: f64) -> f64 {
        self.a.ln() + self.b * rs
    }
}

/// `Rs = n * fs * (1 - kappa)`.
pub fn generated_rate(fs: f64, n_bits: u32, kappa: f64) -> f64 {
    n_bits as f64 * fs * (1.0 - kappa)
}

/// Compression ratio that produces generated rate `rs`; inverse of
/// [`generated_rate`].
pub fn kappa_for_rate(fs: f64, n_bits: u32, rs: f64) -> f64 {
    1.0 - rs / (n_bits as f64 * fs)
}

pub fn eval_distortion(model: &ExpDistortionModel, rs: f64) -> f64 {
    model.a * (model.b * rs).exp()
}

/// Compress `frame` at every ratio in `kappa_grid` and record `(Rs, PRD)`.
///
/// When no coefficient is zeroed the distortion is recorded as exactly 0;
/// the reconstruction differs from the input only by rounding.
pub fn sweep_rate_distortion(
    frame: &SignalFrame,
    cfg: &WaveletConfig,
    kappa_grid: &[f64],
) -> Result<Vec<RateDistortionSample>> {
    if kappa_grid.is_empty() {
        return Err(Error::config("compression-ratio grid is empty"));
    }
    kappa_grid
        .iter()
        .map(|&kappa| {
            let result = compress(frame, cfg, kappa)?;
            let d = if result.zeroed == 0 {
                0.0
            } else {
                prd(frame, &result.reconstruct(cfg)?)?
            };
            Ok(RateDistortionSample {
                rs: generated_rate(frame.fs(), frame.n_bits(), kappa),
                d,
            })
        })
        .collect()
}

/// Ordinary least squares of `ln d` on `rs`; samples with `d = 0` are skipped.
pub fn fit_exponential(samples: &[RateDistortionSample]) -> Result<ExpDistortionModel> {
    let pts: Vec<(f64, f64)> = samples
        .iter()
        .filter(|s| s.d > 0.0)
        .map(|s| (s.rs, s.d.ln()))
        .collect();
    if pts.len() < 2 {
        return Err(Error::DegenerateFit(format!(
            "need at least 2 samples with positive distortion, got {}",
            pts.len()
        )));
    }
    let n = pts.len() as f64;
    let mean_x = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let mean_y = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mean_x).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mean_x) * (p.1 - mean_y)).sum();
    if sxx <= f64::EPSILON * mean_x.abs().max(1.0) * n {
        return Err(Error::DegenerateFit(
            "all positive-distortion samples share the same rate".into(),
        ));
    }
    let b = sxy / sxx;
    let ln_a = mean_y - b * mean_x;

    let ss_tot: f64 = pts.iter().map(|p| (p.1 - mean_y).powi(2)).sum();
    let ss_res: f64 = pts.iter().map(|p| (p.1 - (ln_a + b * p.0)).powi(2)).sum();
    let r_squared = coefficient_of_determination(ss_res, ss_tot);

    let a = ln_a.exp();
    let positive: Vec<&RateDistortionSample> = samples.iter().filter(|s| s.d > 0.0).collect();
    let mean_d = positive.iter().map(|s| s.d).sum::<f64>() / n;
    let ss_tot_lin: f64 = positive.iter().map(|s| (s.d - mean_d).powi(2)).sum();
    let ss_res_lin: f64 = positive
        .iter()
        .map(|s| (s.d - a * (b * s.rs).exp()).powi(2))
        .sum();

    Ok(ExpDistortionModel {
        a,
        b,
        r_squared,
        r_squared_linear: coefficient_of_determination(ss_res_lin, ss_tot_lin),
    })
}

fn coefficient_of_determination(ss_res: f64, ss_tot: f64) -> f64 {
    if ss_tot <= 0.0 {
        // Constant response fitted exactly.
        return 1.0;
    }
    (1.0 - ss_res / ss_tot).clamp(0.0, 1.0)
}
