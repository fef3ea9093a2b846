//! Test signals: a synthetic EEG generator and single-column CSV ingestion.

use std::f64::consts::PI;
use std::fs;
use std::io::Write;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::wavelet::SignalFrame;

/// Classical EEG rhythm bands: (low Hz, high Hz, relative amplitude).
const BANDS: [(f64, f64, f64); 4] = [
    (0.5, 4.0, 1.0),   // delta
    (4.0, 8.0, 0.6),   // theta
    (8.0, 13.0, 0.9),  // alpha
    (13.0, 30.0, 0.3), // beta
];
const TONES_PER_BAND: usize = 6;
/// Share of the total power carried by the 1/f background.
const BACKGROUND_POWER: f64 = 0.85;
/// Anti-aliasing corner as a fraction of the sampling rate.
const ANTI_ALIAS_CORNER: f64 = 0.125;
const ADC_BITS: u32 = 12;

/// Deterministic synthetic EEG: band-limited rhythms from delta to beta plus
/// a pink (1/f) background, passed through a second-order anti-aliasing
/// low-pass and a 12-bit ADC, then scaled to zero mean and unit RMS.
pub fn synth_eeg(fs: f64, duration: f64, seed: u64) -> Result<SignalFrame> {
    if !(fs.is_finite() && fs > 0.0) {
        return Err(Error::config(format!(
            "sampling rate must be > 0, got {fs}"
        )));
    }
    if !(duration.is_finite() && duration > 0.0) {
        return Err(Error::config(format!(
            "duration must be > 0, got {duration}"
        )));
    }
    let len = (fs * duration).round().max(1.0) as usize;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let mut rhythm = vec![0.0; len];
    for &(lo, hi, amp) in &BANDS {
        let hi = hi.min(0.45 * fs);
        if hi <= lo {
            continue;
        }
        for _ in 0..TONES_PER_BAND {
            let f = rng.random_range(lo..hi);
            let phase = rng.random_range(0.0..2.0 * PI);
            let a = amp * rng.random_range(0.5..1.0);
            // Slow amplitude modulation gives the waxing/waning of real rhythms.
            let mod_f = rng.random_range(0.1..0.5);
            let mod_phase = rng.random_range(0.0..2.0 * PI);
            for (i, v) in rhythm.iter_mut().enumerate() {
                let t = i as f64 / fs;
                let envelope = 0.75 + 0.25 * (2.0 * PI * mod_f * t + mod_phase).sin();
                *v += a * envelope * (2.0 * PI * f * t + phase).sin();
            }
        }
    }

    let background = pink_noise(len, &mut rng);
    let rhythm_rms = rms(&rhythm);
    let background_rms = rms(&background);
    let wr = if rhythm_rms > 0.0 {
        (1.0 - BACKGROUND_POWER).sqrt() / rhythm_rms
    } else {
        0.0
    };
    let wb = if background_rms > 0.0 {
        BACKGROUND_POWER.sqrt() / background_rms
    } else {
        0.0
    };
    let mixed: Vec<f64> = rhythm
        .iter()
        .zip(&background)
        .map(|(r, b)| wr * r + wb * b)
        .collect();
    let mut samples = quantize(&butterworth_lowpass(&mixed, ANTI_ALIAS_CORNER), ADC_BITS);
    let mean = samples.iter().sum::<f64>() / len as f64;
    samples.iter_mut().for_each(|v| *v -= mean);
    let scale = rms(&samples);
    if scale > 0.0 {
        samples.iter_mut().for_each(|v| *v /= scale);
    }
    SignalFrame::new(samples, fs, ADC_BITS)
}

/// Second-order Butterworth low-pass (bilinear transform), `corner` in
/// cycles per sample.
fn butterworth_lowpass(x: &[f64], corner: f64) -> Vec<f64> {
    let w0 = 2.0 * PI * corner;
    let alpha = w0.sin() / std::f64::consts::SQRT_2;
    let cos_w0 = w0.cos();
    let a0 = 1.0 + alpha;
    let b0 = (1.0 - cos_w0) / 2.0 / a0;
    let b1 = (1.0 - cos_w0) / a0;
    let a1 = -2.0 * cos_w0 / a0;
    let a2 = (1.0 - alpha) / a0;
    let (mut x1, mut x2, mut y1, mut y2) = (0.0, 0.0, 0.0, 0.0);
    x.iter()
        .map(|&v| {
            let y = b0 * v + b1 * x1 + b0 * x2 - a1 * y1 - a2 * y2;
            x2 = x1;
            x1 = v;
            y2 = y1;
            y1 = y;
            y
        })
        .collect()
}

/// Mid-tread uniform quantizer spanning the frame's peak amplitude.
fn quantize(x: &[f64], bits: u32) -> Vec<f64> {
    let peak = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if peak == 0.0 {
        return x.to_vec();
    }
    let step = 2.0 * peak / f64::from(1u32 << bits);
    x.iter().map(|v| (v / step).round() * step).collect()
}

/// White Gaussian noise shaped by a three-pole 1/f approximation (Kellet).
fn pink_noise(len: usize, rng: &mut ChaCha8Rng) -> Vec<f64> {
    let (mut b0, mut b1, mut b2) = (0.0, 0.0, 0.0);
    (0..len)
        .map(|_| {
            let white: f64 = rng.sample(StandardNormal);
            b0 = 0.99765 * b0 + white * 0.099_046_0;
            b1 = 0.96300 * b1 + white * 0.296_516_4;
            b2 = 0.57000 * b2 + white * 1.052_691_3;
            b0 + b1 + b2 + white * 0.1848
        })
        .collect()
}

pub fn rms(v: &[f64]) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    (v.iter().map(|x| x * x).sum::<f64>() / v.len() as f64).sqrt()
}

/// Read a single-column numeric CSV; an optional non-numeric header line
/// (normally `amplitude`) is skipped.
pub fn load_signal_csv(path: &Path, fs: f64, n_bits: u32) -> Result<SignalFrame> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut samples = Vec::new();
    for (idx, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let field = line.split(',').next().unwrap_or("").trim();
        match field.parse::<f64>() {
            Ok(v) if v.is_finite() => samples.push(v),
            Ok(_) => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: format!("non-finite sample `{field}`"),
                })
            }
            Err(_) if samples.is_empty() && idx == first_content_line(&text) => {
                // header row
            }
            Err(_) => {
                return Err(Error::Parse {
                    path: path.to_path_buf(),
                    line: idx + 1,
                    message: format!("non-numeric sample `{field}`"),
                })
            }
        }
    }
    if samples.is_empty() {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 0,
            message: "file contains no samples".into(),
        });
    }
    if samples.iter().all(|v| *v == 0.0) {
        return Err(Error::UndefinedMetric(format!(
            "{}: all samples are zero, so PRD would be undefined",
            path.display()
        )));
    }
    SignalFrame::new(samples, fs, n_bits)
}

fn first_content_line(text: &str) -> usize {
    text.lines()
        .position(|l| {
            let l = l.trim();
            !l.is_empty() && !l.starts_with('#')
        })
        .unwrap_or(0)
}

/// Write samples under an `amplitude` header with round-trip precision.
pub fn write_signal_csv(path: &Path, frame: &SignalFrame) -> Result<()> {
    let io_err = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = fs::File::create(path).map_err(io_err)?;
    let mut body = String::with_capacity(frame.len() * 24 + 10);
    body.push_str("amplitude\n");
    for v in frame.samples() {
        body.push_str(&format!("{v:?}\n"));
    }
    out.write_all(body.as_bytes()).map_err(io_err)
}
