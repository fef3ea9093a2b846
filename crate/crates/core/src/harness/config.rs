//! Scenario configuration: a flat INI-style file with one section per module.
//!
//! ```text
//! [channel]
//! mu = 0.001
//! noise_mode = density
//!
//! [objective]
//! lambda = 0.5
//! ```
//!
//! Every key is optional; missing keys take the defaults in [`KEYS`]. Lines
//! starting with `#` or `;` are comments.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};

use crate::channel::{FadingConfig, LinkParams, NoiseMode};
use crate::distortion::ExpDistortionModel;
use crate::error::{Error, Result};
use crate::optimizer::ObjectiveParams;
use crate::wavelet::{Boundary, WaveletConfig};

/// Where a resolved value came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Provenance {
    /// Published simulation parameter.
    Paper,
    /// Default chosen by this tool where the source is silent.
    Artifact,
    ConfigFile,
    CommandLine,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Paper => "paper",
            Provenance::Artifact => "artifact-default",
            Provenance::ConfigFile => "config-file",
            Provenance::CommandLine => "command-line",
        })
    }
}

/// `(section.key, default, provenance of the default)`.
pub const KEYS: &[(&str, &str, Provenance)] = &[
    ("signal.source", "synthetic", Provenance::Artifact),
    ("signal.fs", "2000", Provenance::Paper),
    ("signal.n_bits", "12", Provenance::Paper),
    ("signal.duration", "2.048", Provenance::Artifact),
    ("codec.family_order", "4", Provenance::Artifact),
    ("codec.levels", "5", Provenance::Artifact),
    ("codec.boundary", "periodic", Provenance::Artifact),
    ("distortion.a", "88.63", Provenance::Paper),
    ("distortion.b", "-0.0001767", Provenance::Paper),
    ("channel.bandwidth", "30000", Provenance::Paper),
    ("channel.n0_dbm", "-174", Provenance::Paper),
    ("channel.noise_mode", "density", Provenance::Artifact),
    ("channel.mu", "0.001", Provenance::Paper),
    ("channel.p_max", "1", Provenance::Artifact),
    ("channel.hd_split", "0.5", Provenance::Artifact),
    ("fading.doppler_fd", "0.1", Provenance::Paper),
    ("fading.sample_time", "0.1", Provenance::Paper),
    ("fading.mean_gain", "1", Provenance::Artifact),
    ("fading.length", "1000", Provenance::Artifact),
    ("objective.lambda", "0.5", Provenance::Paper),
    ("objective.beta", "ln(a)", Provenance::Artifact),
    ("objective.sweep", "gain", Provenance::Artifact),
    ("harness.kappa_grid_step", "0.001", Provenance::Artifact),
    ("harness.fit_points", "20", Provenance::Artifact),
    ("harness.seed", "1", Provenance::Artifact),
    ("harness.output_dir", "out", Provenance::Artifact),
    ("harness.per_sample", "false", Provenance::Artifact),
];

#[derive(Debug, Clone, PartialEq)]
pub enum SignalSource {
    Synthetic,
    Csv(PathBuf),
}

impl fmt::Display for SignalSource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SignalSource::Synthetic => f.write_str("synthetic"),
            SignalSource::Csv(p) => write!(f, "{}", p.display()),
        }
    }
}

/// Independent variable of the optimality scenario.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepVariable {
    /// One point per fading-trace sample.
    Gain,
    /// `lambda = 0.1, 0.2, ..., 0.9` at the trace-mean gain.
    Lambda,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConfigEntry {
    pub key: &'static str,
    pub value: String,
    pub source: Provenance,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub link: LinkParams,
    pub fading: FadingConfig,
    pub lambda_weight: f64,
    /// `None` means `ln(a)`.
    pub beta: Option<f64>,
    pub model: ExpDistortionModel,
    pub fs: f64,
    pub n_bits: u32,
    pub codec: WaveletConfig,
    pub signal_source: SignalSource,
    /// Seconds of synthetic EEG.
    pub signal_duration: f64,
    pub kappa_grid_step: f64,
    pub fit_points: usize,
    pub sweep: SweepVariable,
    pub output_dir: PathBuf,
    pub seed: u64,
    pub per_sample: bool,
    entries: Vec<ConfigEntry>,
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        resolve(&BTreeMap::new(), Path::new("<defaults>")).expect("built-in defaults are valid")
    }
}

impl ScenarioConfig {
    pub fn objective_params(&self) -> Result<ObjectiveParams> {
        let p = ObjectiveParams {
            lambda_weight: self.lambda_weight,
            beta: self.beta.unwrap_or_else(|| self.model.a.ln()),
            link: self.link,
            model: self.model,
            fs: self.fs,
            n_bits: self.n_bits,
        };
        p.validate()?;
        Ok(p)
    }

    /// Resolved key/value pairs with their provenance, in [`KEYS`] order.
    pub fn entries(&self) -> &[ConfigEntry] {
        &self.entries
    }

    pub fn set_seed(&mut self, seed: u64) {
        self.seed = seed;
        self.fading.seed = seed;
        self.record("harness.seed", seed.to_string());
    }

    pub fn set_output_dir(&mut self, dir: PathBuf) {
        self.record("harness.output_dir", dir.display().to_string());
        self.output_dir = dir;
    }

    pub fn set_per_sample(&mut self, per_sample: bool) {
        self.per_sample = per_sample;
        self.record("harness.per_sample", per_sample.to_string());
    }

    pub fn set_kappa_grid_step(&mut self, step: f64) -> Result<()> {
        if !(step > 0.0 && step < 1.0) {
            return Err(Error::config(format!(
                "harness.kappa_grid_step must be in (0, 1), got {step}"
            )));
        }
        self.kappa_grid_step = step;
        self.record("harness.kappa_grid_step", step.to_string());
        Ok(())
    }

    fn record(&mut self, key: &str, value: String) {
        if let Some(e) = self.entries.iter_mut().find(|e| e.key == key) {
            e.value = value;
            e.source = Provenance::CommandLine;
        }
    }

    /// One line per resolved value, e.g. `channel.mu = 0.001 [paper]`,
    /// followed by the noise interpretation in force.
    pub fn banner(&self) -> Vec<String> {
        let mut lines: Vec<String> = self
            .entries
            .iter()
            .map(|e| format!("{} = {} [{}]", e.key, e.value, e.source))
            .collect();
        let sigma2 = self.link.noise_power();
        lines.push(match self.link.noise_mode {
            NoiseMode::Density => {
                format!("noise interpretation: density, sigma^2 = N0 * B = {sigma2:.6e} W")
            }
            NoiseMode::Power => {
                format!("noise interpretation: power, sigma^2 = N0 = {sigma2:.6e} W")
            }
        });
        lines
    }
}

/// Read and validate a configuration file.
pub fn load_config(path: &Path) -> Result<ScenarioConfig> {
    let text = fs::read_to_string(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_config(&text, path)
}

/// Parse configuration text; `origin` is used in error messages only.
pub fn parse_config(text: &str, origin: &Path) -> Result<ScenarioConfig> {
    let mut values: BTreeMap<String, (String, usize)> = BTreeMap::new();
    let mut section: Option<String> = None;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') || line.starts_with(';') {
            continue;
        }
        if let Some(rest) = line.strip_prefix('[') {
            let name = rest
                .strip_suffix(']')
                .ok_or_else(|| parse_err(line_no, format!("unterminated section header `{line}`")))?
                .trim();
            if !KEYS
                .iter()
                .any(|(k, _, _)| k.split('.').next() == Some(name))
            {
                return Err(parse_err(line_no, format!("unknown section [{name}]")));
            }
            section = Some(name.to_string());
            continue;
        }
        let (key, value) = line
            .split_once('=')
            .ok_or_else(|| parse_err(line_no, format!("expected `key = value`, got `{line}`")))?;
        let sec = section
            .as_ref()
            .ok_or_else(|| parse_err(line_no, "key outside of any [section]".into()))?;
        let full = format!("{sec}.{}", key.trim());
        if !KEYS.iter().any(|(k, _, _)| *k == full) {
            return Err(parse_err(line_no, format!("unknown key `{full}`")));
        }
        if values.contains_key(&full) {
            return Err(parse_err(line_no, format!("duplicate key `{full}`")));
        }
        values.insert(full, (value.trim().to_string(), line_no));
    }
    resolve(&values, origin)
}

struct Resolver<'a> {
    values: &'a BTreeMap<String, (String, usize)>,
    origin: &'a Path,
    entries: Vec<ConfigEntry>,
}

impl Resolver<'_> {
    fn raw(&mut self, key: &'static str) -> (String, Option<usize>) {
        let (_, default, prov) = KEYS
            .iter()
            .find(|(k, _, _)| *k == key)
            .expect("key is declared in KEYS");
        let (value, line, source) = match self.values.get(key) {
            Some((v, line)) => (v.clone(), Some(*line), Provenance::ConfigFile),
            None => (default.to_string(), None, *prov),
        };
        self.entries.push(ConfigEntry {
            key,
            value: value.clone(),
            source,
        });
        (value, line)
    }

    fn parse<T: std::str::FromStr>(&mut self, key: &'static str, what: &str) -> Result<T> {
        let (value, line) = self.raw(key);
        value
            .parse::<T>()
            .map_err(|_| self.error(key, line, format!("expected {what}, got `{value}`")))
    }

    fn error(&self, key: &str, line: Option<usize>, message: String) -> Error {
        match line {
            Some(line) => Error::Parse {
                path: self.origin.to_path_buf(),
                line,
                message: format!("{key}: {message}"),
            },
            None => Error::config(format!("{key}: {message}")),
        }
    }
}

fn field<T>(key: &str, r: Result<T>) -> Result<T> {
    r.map_err(|e| match e {
        Error::Config(msg) => Error::Config(format!("{key}: {msg}")),
        other => other,
    })
}

fn check(key: &str, ok: bool, msg: impl fmt::Display) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(Error::config(format!("{key}: {msg}")))
    }
}

fn resolve(values: &BTreeMap<String, (String, usize)>, origin: &Path) -> Result<ScenarioConfig> {
    let mut r = Resolver {
        values,
        origin,
        entries: Vec::new(),
    };

    let (source, _) = r.raw("signal.source");
    let signal_source = if source.eq_ignore_ascii_case("synthetic") {
        SignalSource::Synthetic
    } else {
        SignalSource::Csv(PathBuf::from(source))
    };
    let fs: f64 = r.parse("signal.fs", "a number")?;
    check("signal.fs", fs.is_finite() && fs > 0.0, "must be > 0")?;
    let n_bits: u32 = r.parse("signal.n_bits", "a positive integer")?;
    check("signal.n_bits", n_bits >= 1, "must be >= 1")?;
    let signal_duration: f64 = r.parse("signal.duration", "a number of seconds")?;
    check(
        "signal.duration",
        signal_duration.is_finite() && signal_duration > 0.0,
        "must be > 0",
    )?;

    let family_order: usize = r.parse("codec.family_order", "an integer")?;
    let levels: usize = r.parse("codec.levels", "an integer")?;
    let (boundary, _) = r.raw("codec.boundary");
    let codec = WaveletConfig {
        family_order,
        levels,
        boundary: field("codec.boundary", boundary.parse::<Boundary>())?,
    };
    field("codec", codec.validate())?;

    let a: f64 = r.parse("distortion.a", "a number")?;
    let b: f64 = r.parse("distortion.b", "a number")?;
    let model = field("distortion", ExpDistortionModel::new(a, b))?;

    let link = LinkParams {
        bandwidth_b: r.parse("channel.bandwidth", "a number of Hz")?,
        noise_density_n0_dbm: r.parse("channel.n0_dbm", "a number of dBm")?,
        noise_mode: {
            let (v, _) = r.raw("channel.noise_mode");
            field("channel.noise_mode", v.parse::<NoiseMode>())?
        },
        si_quality_mu: r.parse("channel.mu", "a number")?,
        p_max: r.parse("channel.p_max", "a number of watts")?,
        hd_split: r.parse("channel.hd_split", "a fraction")?,
    };
    field("channel", link.validate())?;

    let mut fading = FadingConfig {
        doppler_fd: r.parse("fading.doppler_fd", "a number of Hz")?,
        sample_time: r.parse("fading.sample_time", "a number of seconds")?,
        mean_gain: r.parse("fading.mean_gain", "a number")?,
        seed: 0,
        length: r.parse("fading.length", "a positive integer")?,
    };
    field("fading", fading.validate())?;

    let lambda_weight: f64 = r.parse("objective.lambda", "a number")?;
    check(
        "objective.lambda",
        (0.0..=1.0).contains(&lambda_weight),
        format_args!("{lambda_weight} violates constraint (9): 0 <= lambda <= 1"),
    )?;
    let (beta_raw, beta_line) = r.raw("objective.beta");
    let beta = if beta_raw.eq_ignore_ascii_case("ln(a)") {
        None
    } else {
        let v: f64 = beta_raw.parse().map_err(|_| {
            r.error(
                "objective.beta",
                beta_line,
                format!("expected a number or `ln(a)`, got `{beta_raw}`"),
            )
        })?;
        Some(v)
    };
    let beta_value = beta.unwrap_or_else(|| a.ln());
    check(
        "objective.beta",
        beta_value.is_finite() && beta_value > 0.0,
        format_args!("must be > 0, got {beta_value} (ln(a) needs a > 1)"),
    )?;
    let (sweep_raw, sweep_line) = r.raw("objective.sweep");
    let sweep = match sweep_raw.to_ascii_lowercase().as_str() {
        "gain" | "h" => SweepVariable::Gain,
        "lambda" => SweepVariable::Lambda,
        _ => {
            return Err(r.error(
                "objective.sweep",
                sweep_line,
                format!("expected `gain` or `lambda`, got `{sweep_raw}`"),
            ))
        }
    };

    let kappa_grid_step: f64 = r.parse("harness.kappa_grid_step", "a number")?;
    check(
        "harness.kappa_grid_step",
        kappa_grid_step > 0.0 && kappa_grid_step < 1.0,
        "must be in (0, 1)",
    )?;
    let fit_points: usize = r.parse("harness.fit_points", "an integer")?;
    check("harness.fit_points", fit_points >= 3, "must be >= 3")?;
    let seed: u64 = r.parse("harness.seed", "a non-negative integer")?;
    fading.seed = seed;
    let (out, _) = r.raw("harness.output_dir");
    let per_sample: bool = r.parse("harness.per_sample", "`true` or `false`")?;

    Ok(ScenarioConfig {
        link,
        fading,
        lambda_weight,
        beta,
        model,
        fs,
        n_bits,
        codec,
        signal_source,
        signal_duration,
        kappa_grid_step,
        fit_points,
        sweep,
        output_dir: PathBuf::from(out),
        seed,
        per_sample,
        entries: r.entries,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<ScenarioConfig> {
        parse_config(text, Path::new("test.ini"))
    }

    #[test]
    fn empty_file_gives_defaults() {
        let cfg = parse("").unwrap();
        assert_eq!(cfg.fs, 2000.0);
        assert_eq!(cfg.n_bits, 12);
        assert_eq!(cfg.link.bandwidth_b, 30e3);
        assert_eq!(cfg.link.noise_density_n0_dbm, -174.0);
        assert_eq!(cfg.link.si_quality_mu, 0.001);
        assert_eq!(cfg.lambda_weight, 0.5);
        assert_eq!(cfg.model.a, 88.63);
        assert_eq!(cfg.model.b, -0.0001767);
        assert_eq!(cfg.fading.doppler_fd, 0.1);
        assert_eq!(cfg.fading.sample_time, 0.1);
        assert_eq!(cfg.link.noise_mode, NoiseMode::Density);
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.entries().len(), KEYS.len());
        let p = cfg.objective_params().unwrap();
        assert!((p.beta - 88.63f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn banner_reports_provenance() {
        let cfg = parse("[channel]\nmu = 0.01\n").unwrap();
        let banner = cfg.banner();
        assert!(banner.contains(&"channel.mu = 0.01 [config-file]".to_string()));
        assert!(banner.contains(&"signal.fs = 2000 [paper]".to_string()));
        assert!(banner.contains(&"channel.p_max = 1 [artifact-default]".to_string()));
        assert!(banner
            .last()
            .unwrap()
            .starts_with("noise interpretation: density"));
    }

    #[test]
    fn lambda_above_one_names_the_constraint() {
        let err = parse("[objective]\nlambda = 1.5\n").unwrap_err();
        let msg = err.to_string();
        assert!(matches!(err, Error::Config(_)));
        assert!(
            msg.contains("objective.lambda") && msg.contains("constraint (9)"),
            "{msg}"
        );
    }

    #[test]
    fn zero_mu_is_unbounded() {
        let cfg = parse("[channel]\nmu = 0\n").unwrap();
        assert_eq!(
            crate::channel::capacity_limit(1.0, &cfg.link),
            f64::INFINITY
        );
    }

    #[test]
    fn overrides_and_comments() {
        let text = "# comment\n[objective]\n; another\nlambda = 0.25\nbeta = 2\nsweep = lambda\n\
                    [channel]\nnoise_mode = power\n[harness]\nseed = 9\nper_sample = true\n";
        let cfg = parse(text).unwrap();
        assert_eq!(cfg.lambda_weight, 0.25);
        assert_eq!(cfg.beta, Some(2.0));
        assert_eq!(cfg.sweep, SweepVariable::Lambda);
        assert_eq!(cfg.link.noise_mode, NoiseMode::Power);
        assert_eq!((cfg.seed, cfg.fading.seed), (9, 9));
        assert!(cfg.per_sample);
    }

    #[test]
    fn cli_overrides_are_recorded() {
        let mut cfg = parse("").unwrap();
        cfg.set_seed(77);
        cfg.set_output_dir(PathBuf::from("/tmp/x"));
        assert_eq!(cfg.fading.seed, 77);
        assert!(cfg
            .banner()
            .contains(&"harness.seed = 77 [command-line]".to_string()));
        assert!(cfg.set_kappa_grid_step(0.0).is_err());
    }

    #[test]
    fn parse_errors_carry_line_numbers() {
        for (text, line) in [
            ("[channel]\nmu = abc\n", 2),
            ("[nope]\n", 1),
            ("[channel]\nwat = 1\n", 2),
            ("mu = 1\n", 1),
            ("[channel]\nmu = 1\nmu = 2\n", 3),
            ("[channel]\njunk\n", 2),
            ("[channel\n", 1),
        ] {
            match parse(text) {
                Err(Error::Parse { line: l, .. }) => assert_eq!(l, line, "{text}"),
                other => panic!("{text}: {other:?}"),
            }
        }
    }

    #[test]
    fn invariant_violations_name_fields() {
        for (text, key) in [
            ("[channel]\nbandwidth = -1\n", "channel"),
            ("[channel]\nmu = -0.1\n", "channel"),
            ("[channel]\nnoise_mode = loud\n", "channel.noise_mode"),
            ("[fading]\nsample_time = 0\n", "fading"),
            ("[codec]\nboundary = symmetric\n", "codec.boundary"),
            (
                "[harness]\nkappa_grid_step = 1\n",
                "harness.kappa_grid_step",
            ),
            ("[distortion]\na = 1\n", "objective.beta"),
            ("[signal]\nfs = 0\n", "signal.fs"),
        ] {
            let msg = parse(text).unwrap_err().to_string();
            assert!(msg.contains(key), "{text}: {msg}");
        }
    }

    #[test]
    fn missing_file() {
        assert!(matches!(
            load_config(Path::new("/definitely/not/here.ini")),
            Err(Error::Io { .. })
        ));
    }
}
