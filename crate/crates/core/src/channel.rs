//! Full-duplex link arithmetic under residual self-interference, the
//! half-duplex baseline, and Rayleigh fading traces.
//!
//! Residual SI is modelled as `mu * P`, so the SINR at transmit power `P` is
//! `h P / (sigma^2 + mu P)`. The achievable rate therefore saturates at
//! `B log2(1 + h / mu)` however much power is spent.

use std::f64::consts::{LN_2, PI};
use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// How the configured noise figure `N0` becomes a noise power.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum NoiseMode {
    /// `N0` is a spectral density (dBm/Hz); noise power is `N0 * B`.
    #[default]
    Density,
    /// `N0` is already the in-band noise power (dBm).
    Power,
}

impl fmt::Display for NoiseMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            NoiseMode::Density => "density",
            NoiseMode::Power => "power",
        })
    }
}

impl FromStr for NoiseMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "density" => Ok(NoiseMode::Density),
            "power" => Ok(NoiseMode::Power),
            other => Err(Error::config(format!(
                "noise_mode must be `density` or `power`, got `{other}`"
            ))),
        }
    }
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LinkParams {
    /// Hz.
    pub bandwidth_b: f64,
    /// dBm/Hz in [`NoiseMode::Density`], dBm in [`NoiseMode::Power`].
    pub noise_density_n0_dbm: f64,
    pub noise_mode: NoiseMode,
    pub si_quality_mu: f64,
    /// Watts.
    pub p_max: f64,
    /// Fraction of `B` the half-duplex baseline gets in each direction.
    pub hd_split: f64,
}

impl Default for LinkParams {
    fn default() -> Self {
        Self {
            bandwidth_b: 30e3,
            noise_density_n0_dbm: -174.0,
            noise_mode: NoiseMode::Density,
            si_quality_mu: 0.001,
            p_max: 1.0,
            hd_split: 0.5,
        }
    }
}

impl LinkParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth_b.is_finite() && self.bandwidth_b > 0.0) {
            return Err(Error::config(format!(
                "bandwidth must be > 0 Hz, got {}",
                self.bandwidth_b
            )));
        }
        if !self.noise_density_n0_dbm.is_finite() {
            return Err(Error::config("noise level N0 must be finite"));
        }
        if !(self.si_quality_mu.is_finite() && self.si_quality_mu >= 0.0) {
            return Err(Error::config(format!(
                "SI quality mu must be >= 0, got {}",
                self.si_quality_mu
            )));
        }
        if !(self.p_max.is_finite() && self.p_max > 0.0) {
            return Err(Error::config(format!(
                "p_max must be > 0 W, got {}",
                self.p_max
            )));
        }
        if !(self.hd_split > 0.0 && self.hd_split <= 1.0) {
            return Err(Error::config(format!(
                "half-duplex bandwidth split must be in (0, 1], got {}",
                self.hd_split
            )));
        }
        Ok(())
    }

    /// Linear value of `N0` (W/Hz or W depending on the mode).
    pub fn n0_linear(&self) -> f64 {
        dbm_to_watts(self.noise_density_n0_dbm)
    }

    /// Noise power seen by a receiver occupying `bandwidth` Hz.
    pub fn noise_power_in(&self, bandwidth: f64) -> f64 {
        match self.noise_mode {
            NoiseMode::Density => self.n0_linear() * bandwidth,
            NoiseMode::Power => self.n0_linear(),
        }
    }

    /// Full-duplex noise power `sigma^2` in watts.
    pub fn noise_power(&self) -> f64 {
        self.noise_power_in(self.bandwidth_b)
    }
}

/// `B log2(1 + h P / (sigma^2 + mu P))`.
pub fn achievable_rate(p: f64, h: f64, link: &LinkParams) -> f64 {
    if p == 0.0 {
        return 0.0;
    }
    if p.is_infinite() {
        return capacity_limit(h, link);
    }
    let sinr = h * p / (link.noise_power() + link.si_quality_mu * p);
    link.bandwidth_b * sinr.ln_1p() / LN_2
}

/// `B log2(1 + h / mu)`, the rate no transmit power can exceed;
/// `f64::INFINITY` when there is no residual SI.
pub fn capacity_limit(h: f64, link: &LinkParams) -> f64 {
    if link.si_quality_mu == 0.0 {
        return f64::INFINITY;
    }
    link.bandwidth_b * (h / link.si_quality_mu).ln_1p() / LN_2
}

/// Transmit power needed to sustain rate `r`:
/// `sigma^2 (2^{r/B} - 1) / (h - mu (2^{r/B} - 1))`.
///
/// Fails with [`Error::InfeasibleRate`] exactly when `r >= capacity_limit`.
pub fn required_power(r: f64, h: f64, link: &LinkParams) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::config(format!("rate must be >= 0, got {r}")));
    }
    if h.is_nan() || h <= 0.0 {
        return Err(Error::config(format!("channel gain must be > 0, got {h}")));
    }
    let limit = capacity_limit(h, link);
    if r >= limit {
        return Err(Error::InfeasibleRate { rate: r, limit });
    }
    let x = (r * LN_2 / link.bandwidth_b).exp_m1();
    Ok(link.noise_power() * x / si_margin(r, h, link))
}

/// `h - mu (2^{r/B} - 1)`, the SINR headroom left at rate `r`; positive
/// exactly on the feasible domain.
///
/// It is computed from the distance to the capacity limit, so it keeps full
/// relative precision as `r` approaches the limit.
pub fn si_margin(r: f64, h: f64, link: &LinkParams) -> f64 {
    if link.si_quality_mu == 0.0 {
        return h;
    }
    let b = link.bandwidth_b;
    let limit = capacity_limit(h, link);
    link.si_quality_mu * (r * LN_2 / b).exp() * ((limit - r) * LN_2 / b).exp_m1()
}

/// Half-duplex baseline: each direction gets `hd_split * B` and there is
/// no self-interference.
pub fn hd_required_power(r: f64, h: f64, link: &LinkParams) -> Result<f64> {
    if r.is_nan() || r < 0.0 {
        return Err(Error::config(format!("rate must be >= 0, got {r}")));
    }
    if h.is_nan() || h <= 0.0 {
        return Err(Error::config(format!("channel gain must be > 0, got {h}")));
    }
    let b_hd = link.hd_split * link.bandwidth_b;
    let x = (r * LN_2 / b_hd).exp_m1();
    Ok(link.noise_power_in(b_hd) * x / h)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FadingConfig {
    /// Maximum Doppler frequency, Hz.
    pub doppler_fd: f64,
    /// Seconds between trace samples.
    pub sample_time: f64,
    /// Mean channel power gain.
    pub mean_gain: f64,
    pub seed: u64,
    pub length: usize,
}

impl Default for FadingConfig {
    fn default() -> Self {
        Self {
            doppler_fd: 0.1,
            sample_time: 0.1,
            mean_gain: 1.0,
            seed: 1,
            length: 1000,
        }
    }
}

impl FadingConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.doppler_fd.is_finite() && self.doppler_fd >= 0.0) {
            return Err(Error::config(format!(
                "Doppler frequency must be >= 0, got {}",
                self.doppler_fd
            )));
        }
        if !(self.sample_time.is_finite() && self.sample_time > 0.0) {
            return Err(Error::config(format!(
                "sample time must be > 0, got {}",
                self.sample_time
            )));
        }
        if !(self.mean_gain.is_finite() && self.mean_gain > 0.0) {
            return Err(Error::config(format!(
                "mean gain must be > 0, got {}",
                self.mean_gain
            )));
        }
        if self.length == 0 {
            return Err(Error::config("fading trace length must be >= 1"));
        }
        Ok(())
    }
}

/// Channel power gains `h`, all positive and finite.
#[derive(Debug, Clone, PartialEq)]
pub struct ChannelTrace {
    gains: Vec<f64>,
}

impl ChannelTrace {
    pub fn new(gains: Vec<f64>) -> Result<Self> {
        if gains.is_empty() {
            return Err(Error::config("channel trace is empty"));
        }
        if let Some(i) = gains.iter().position(|g| !(g.is_finite() && *g > 0.0)) {
            return Err(Error::config(format!(
                "channel gain {i} is not positive and finite: {}",
                gains[i]
            )));
        }
        Ok(Self { gains })
    }

    pub fn gains(&self) -> &[f64] {
        &self.gains
    }

    pub fn len(&self) -> usize {
        self.gains.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gains.is_empty()
    }

    pub fn mean(&self) -> f64 {
        self.gains.iter().sum::<f64>() / self.gains.len() as f64
    }
}

/// Sinusoids in the in-phase branch; the quadrature branch uses one more so
/// the two branches share no frequency.
const SINUSOIDS_I: usize = 20;

/// Doppler frequencies by the method of exact Doppler spread:
/// `f_n = fd sin(pi (n - 1/2) / (2N))`, each with power `1/N`.
fn exact_doppler_spread(fd: f64, count: usize) -> Vec<f64> {
    (1..=count)
        .map(|n| fd * (PI * (n as f64 - 0.5) / (2.0 * count as f64)).sin())
        .collect()
}

/// Unit-power complex Gaussian process with Clarke/Jakes autocorrelation
/// `J0(2 pi fd tau)`, built as a deterministic sum of sinusoids whose phases
/// are drawn from `cfg.seed`.
pub fn generate_fading_process(cfg: &FadingConfig) -> Result<Vec<Complex64>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let branch = |count: usize, rng: &mut ChaCha8Rng| -> (Vec<f64>, Vec<f64>, f64) {
        let freqs = exact_doppler_spread(cfg.doppler_fd, count);
        let phases = (0..count)
            .map(|_| rng.random_range(0.0..2.0 * PI))
            .collect();
        (freqs, phases, (1.0 / count as f64).sqrt())
    };
    let (fi, pi_, ci) = branch(SINUSOIDS_I, &mut rng);
    let (fq, pq, cq) = branch(SINUSOIDS_I + 1, &mut rng);

    let sum = |freqs: &[f64], phases: &[f64], t: f64| -> f64 {
        freqs
            .iter()
            .zip(phases)
            .map(|(f, p)| (2.0 * PI * f * t + p).cos())
            .sum()
    };
    Ok((0..cfg.length)
        .map(|k| {
            let t = k as f64 * cfg.sample_time;
            Complex64::new(ci * sum(&fi, &pi_, t), cq * sum(&fq, &pq, t))
        })
        .collect())
}

/// Rayleigh power-gain trace `h_t = mean_gain * |g_t|^2`.
pub fn generate_fading_trace(cfg: &FadingConfig) -> Result<ChannelTrace> {
    let g = generate_fading_process(cfg)?;
    let gains = g
        .iter()
        .map(|z| (cfg.mean_gain * z.norm_sqr()).max(f64::MIN_POSITIVE))
        .collect();
    ChannelTrace::new(gains)
}

/// Bessel function of the first kind, order zero, from
/// `J0(x) = (1/pi) * integral_0^pi cos(x sin t) dt` (trapezoid rule, which
/// converges geometrically for this periodic integrand).
pub fn bessel_j0(x: f64) -> f64 {
    let nodes = 64 + (x.abs() as usize) * 2;
    let h = PI / nodes as f64;
    let inner: f64 = (1..nodes).map(|k| (x * (k as f64 * h).sin()).cos()).sum();
    (1.0 + inner) / nodes as f64
}

/// Normalized autocorrelation `Re E[g_t conj(g_{t+lag})] / E|g|^2`.
pub fn normalized_autocorrelation(g: &[Complex64], lag: usize) -> f64 {
    let power = g.iter().map(|z| z.norm_sqr()).sum::<f64>() / g.len() as f64;
    let n = g.len() - lag;
    let acc: Complex64 = (0..n).map(|t| g[t + lag] * g[t].conj()).sum();
    acc.re / n as f64 / power
}

/// Kolmogorov-Smirnov distance between the empirical distribution of
/// `samples` and an exponential distribution with the given mean.
pub fn ks_distance_exponential(samples: &[f64], mean: f64) -> f64 {
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let n = sorted.len() as f64;
    sorted
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let cdf = 1.0 - (-x / mean).exp();
            let above = (i + 1) as f64 / n - cdf;
            let below = cdf - i as f64 / n;
            above.max(below)
        })
        .fold(0.0, f64::max)
}
