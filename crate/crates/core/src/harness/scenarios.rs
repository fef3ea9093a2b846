//! Scenario runners. Each returns a typed report; [`run_scenario`] writes
//! the report's CSV tables and then applies the scenario's quality gate.

use std::fmt;
use std::fs;
use std::path::PathBuf;
use std::str::FromStr;

use rayon::prelude::*;

use super::config::{ScenarioConfig, SignalSource, SweepVariable};
use super::signal::{load_signal_csv, synth_eeg};
use super::table::{Cell, CsvTable};
use crate::channel::{capacity_limit, generate_fading_trace, required_power, ChannelTrace};
use crate::distortion::{
    fit_exponential, sweep_rate_distortion, ExpDistortionModel, RateDistortionSample,
};
use crate::error::{Error, Result};
use crate::optimizer::{
    compare_fd_hd, exhaustive_search, objective_u, solve_closed_form, Clamp, FdHdComparison,
    ObjectiveParams, SearchGrid, Solution,
};
use crate::wavelet::SignalFrame;

/// Minimum log-domain R^2 accepted by the fit scenario.
pub const FIT_R2_GATE: f64 = 0.95;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scenario {
    Tradeoff,
    Optimality,
    FdHd,
    Fit,
}

impl Scenario {
    pub const ALL: [Scenario; 4] = [
        Scenario::Tradeoff,
        Scenario::Optimality,
        Scenario::FdHd,
        Scenario::Fit,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Scenario::Tradeoff => "tradeoff",
            Scenario::Optimality => "optimality",
            Scenario::FdHd => "fd-hd",
            Scenario::Fit => "fit",
        }
    }
}

impl fmt::Display for Scenario {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scenario {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scenario::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| {
                Error::config(format!(
                    "unknown scenario `{s}`; expected tradeoff, optimality, fd-hd or fit"
                ))
            })
    }
}

/// Gain(s) a sweep is evaluated at: the trace mean, or every sample.
fn sweep_gains(cfg: &ScenarioConfig, trace: &ChannelTrace) -> Vec<(String, f64)> {
    if cfg.per_sample {
        trace
            .gains()
            .iter()
            .enumerate()
            .map(|(i, h)| (i.to_string(), *h))
            .collect()
    } else {
        vec![("mean".to_string(), trace.mean())]
    }
}

fn metadata(cfg: &ScenarioConfig, scenario: Scenario) -> Vec<String> {
    let mut m = vec![
        format!("fdlink {}", env!("CARGO_PKG_VERSION")),
        format!("scenario: {scenario}"),
    ];
    m.extend(cfg.banner());
    m
}

/// Count of steps against the expected direction, and the longest run of
/// consecutive equal values (in steps).
pub fn monotonicity(values: &[f64], increasing: bool) -> (usize, usize) {
    let mut reversals = 0;
    let (mut run, mut longest) = (0, 0);
    for w in values.windows(2) {
        let step = if increasing { w[1] - w[0] } else { w[0] - w[1] };
        if step < 0.0 {
            reversals += 1;
        }
        if step == 0.0 {
            run += 1;
            longest = longest.max(run);
        } else {
            run = 0;
        }
    }
    (reversals, longest)
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffRow {
    pub h_source: String,
    pub h: f64,
    pub kappa: f64,
    pub rate: f64,
    pub power: f64,
    pub p_norm: f64,
    pub distortion: f64,
    pub d_norm: f64,
    pub objective: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TradeoffReport {
    pub rows: Vec<TradeoffRow>,
    /// Per-sample grid points dropped because their rate exceeds the
    /// capacity limit (deep fades). The mean-gain sweep fails instead.
    pub skipped_infeasible: usize,
}

impl TradeoffReport {
    /// Rows belonging to one gain, in increasing `kappa`.
    pub fn curves(&self) -> Vec<&[TradeoffRow]> {
        self.rows
            .chunk_by(|a, b| a.h_source == b.h_source)
            .collect()
    }

    fn gate(&self) -> Result<()> {
        for curve in self.curves() {
            let p: Vec<f64> = curve.iter().map(|r| r.p_norm).collect();
            let d: Vec<f64> = curve.iter().map(|r| r.d_norm).collect();
            if monotonicity(&p, false).0 > 0 || monotonicity(&d, true).0 > 0 {
                return Err(Error::CheckFailed(format!(
                    "trade-off at h = {} is not monotone in kappa",
                    curve[0].h
                )));
            }
        }
        Ok(())
    }

    pub fn tables(&self, cfg: &ScenarioConfig) -> Vec<(String, CsvTable)> {
        let mut t = CsvTable::new(vec![
            "scenario",
            "h_source",
            "h",
            "kappa",
            "rate",
            "power",
            "p_norm",
            "distortion",
            "d_norm",
            "objective",
            "solver",
            "clamp",
        ]);
        t.metadata = metadata(cfg, Scenario::Tradeoff);
        t.metadata.push(format!(
            "infeasible grid points skipped: {}",
            self.skipped_infeasible
        ));
        for r in &self.rows {
            t.push(vec![
                "tradeoff".into(),
                r.h_source.clone().into(),
                r.h.into(),
                r.kappa.into(),
                r.rate.into(),
                r.power.into(),
                r.p_norm.into(),
                r.distortion.into(),
                r.d_norm.into(),
                r.objective.into(),
                "grid".into(),
                "none".into(),
            ]);
        }
        vec![("tradeoff.csv".into(), t)]
    }
}

pub fn run_tradeoff_sweep(cfg: &ScenarioConfig) -> Result<TradeoffReport> {
    let params = cfg.objective_params()?;
    let trace = generate_fading_trace(&cfg.fading)?;
    let grid = SearchGrid::uniform(cfg.kappa_grid_step)?;
    let mut rows = Vec::new();
    let mut skipped = 0;
    for (source, h) in sweep_gains(cfg, &trace) {
        let limit = capacity_limit(h, &params.link);
        for &kappa in grid.values() {
            let rate = params.rate_for(kappa);
            if rate >= limit {
                if !cfg.per_sample {
                    return Err(Error::Infeasible(format!(
                        "kappa = {kappa} needs {rate} bit/s but the capacity limit at h = {h} is {limit} bit/s"
                    )));
                }
                skipped += 1;
                continue;
            }
            let power = required_power(rate, h, &params.link)?;
            rows.push(TradeoffRow {
                h_source: source.clone(),
                h,
                kappa,
                rate,
                power,
                p_norm: power / params.link.p_max,
                distortion: params.model.eval(rate),
                d_norm: params.model.ln_eval(rate) / params.beta,
                objective: objective_u(rate, h, &params)?,
            });
        }
    }
    if rows.is_empty() {
        return Err(Error::Infeasible(
            "no grid ratio is feasible at the swept gain(s)".into(),
        ));
    }
    Ok(TradeoffReport {
        rows,
        skipped_infeasible: skipped,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityRow {
    pub index: usize,
    pub h: f64,
    pub lambda: f64,
    pub closed: Solution,
    pub oracle: Solution,
}

impl OptimalityRow {
    pub fn gap(&self) -> f64 {
        (self.closed.objective - self.oracle.objective).abs()
    }

    pub fn kappa_gap(&self) -> f64 {
        (self.closed.kappa_star - self.oracle.kappa_star).abs()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalityReport {
    pub rows: Vec<OptimalityRow>,
    pub grid_step: f64,
}

impl OptimalityReport {
    pub fn max_gap(&self) -> f64 {
        self.rows.iter().map(OptimalityRow::gap).fold(0.0, f64::max)
    }

    pub fn unclamped(&self) -> usize {
        self.rows
            .iter()
            .filter(|r| r.closed.clamped == Clamp::None)
            .count()
    }

    /// Largest `|kappa_closed - kappa_oracle|` over unclamped rows.
    pub fn max_kappa_gap_unclamped(&self) -> f64 {
        self.rows
            .iter()
            .filter(|r| r.closed.clamped == Clamp::None)
            .map(OptimalityRow::kappa_gap)
            .fold(0.0, f64::max)
    }

    pub fn tables(&self, cfg: &ScenarioConfig) -> Vec<(String, CsvTable)> {
        let mut t = CsvTable::new(vec![
            "scenario",
            "index",
            "h",
            "lambda",
            "kappa_closed",
            "kappa_oracle",
            "u_closed",
            "u_oracle",
            "gap",
            "rate",
            "power",
            "distortion",
            "solver",
            "clamp",
        ]);
        t.metadata = metadata(cfg, Scenario::Optimality);
        t.metadata
            .push(format!("oracle grid step: {}", self.grid_step));
        for r in &self.rows {
            t.push(vec![
                "optimality".into(),
                r.index.into(),
                r.h.into(),
                r.lambda.into(),
                r.closed.kappa_star.into(),
                r.oracle.kappa_star.into(),
                r.closed.objective.into(),
                r.oracle.objective.into(),
                r.gap().into(),
                r.closed.r_star.into(),
                r.closed.power.into(),
                r.closed.distortion.into(),
                r.closed.solver.to_string().into(),
                r.closed.clamped.to_string().into(),
            ]);
        }
        let mut s = CsvTable::new(vec![
            "scenario",
            "points",
            "unclamped",
            "grid_step",
            "max_gap",
            "max_kappa_gap_unclamped",
        ]);
        s.metadata = metadata(cfg, Scenario::Optimality);
        s.push(vec![
            "optimality".into(),
            self.rows.len().into(),
            self.unclamped().into(),
            self.grid_step.into(),
            self.max_gap().into(),
            self.max_kappa_gap_unclamped().into(),
        ]);
        vec![
            ("optimality.csv".into(), t),
            ("optimality_summary.csv".into(), s),
        ]
    }
}

pub fn run_optimality_check(cfg: &ScenarioConfig) -> Result<OptimalityReport> {
    let params = cfg.objective_params()?;
    let trace = generate_fading_trace(&cfg.fading)?;
    let grid = SearchGrid::uniform(cfg.kappa_grid_step)?;
    let points: Vec<(usize, f64, ObjectiveParams)> = match cfg.sweep {
        SweepVariable::Gain => trace
            .gains()
            .iter()
            .enumerate()
            .map(|(i, h)| (i, *h, params))
            .collect(),
        SweepVariable::Lambda => {
            let h = trace.mean();
            (1..=9)
                .map(|i| {
                    let p = ObjectiveParams {
                        lambda_weight: i as f64 / 10.0,
                        ..params
                    };
                    (i - 1, h, p)
                })
                .collect()
        }
    };
    let rows = points
        .par_iter()
        .map(|(index, h, p)| {
            Ok(OptimalityRow {
                index: *index,
                h: *h,
                lambda: p.lambda_weight,
                closed: solve_closed_form(*h, p)?,
                oracle: exhaustive_search(*h, p, &grid)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(OptimalityReport {
        rows,
        grid_step: cfg.kappa_grid_step,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdHdReport {
    /// `(h_source, h, comparison)`.
    pub comparisons: Vec<(String, f64, FdHdComparison)>,
}

impl FdHdReport {
    pub fn all_fd_win(&self) -> bool {
        self.comparisons.iter().all(|(_, _, c)| c.fd_wins())
    }

    pub fn tables(
        &self,
        cfg: &ScenarioConfig,
        params: &ObjectiveParams,
    ) -> Vec<(String, CsvTable)> {
        let mut t = CsvTable::new(vec![
            "scenario",
            "h_source",
            "h",
            "kappa",
            "rate",
            "hd_objective",
            "fd_kappa_star",
            "fd_objective",
        ]);
        t.metadata = metadata(cfg, Scenario::FdHd);
        t.metadata.push(format!(
            "half-duplex baseline: bandwidth split {}, no self-interference",
            params.link.hd_split
        ));
        let mut s = CsvTable::new(vec![
            "scenario",
            "h_source",
            "h",
            "fd_kappa_star",
            "fd_objective",
            "fd_clamp",
            "hd_min_kappa",
            "hd_min_objective",
            "margin",
            "fd_wins",
        ]);
        s.metadata = metadata(cfg, Scenario::FdHd);
        for (source, h, c) in &self.comparisons {
            for &(kappa, u) in &c.hd_curve {
                t.push(vec![
                    "fd-hd".into(),
                    source.clone().into(),
                    (*h).into(),
                    kappa.into(),
                    params.rate_for(kappa).into(),
                    u.into(),
                    c.fd.kappa_star.into(),
                    c.fd.objective.into(),
                ]);
            }
            s.push(vec![
                "fd-hd".into(),
                source.clone().into(),
                (*h).into(),
                c.fd.kappa_star.into(),
                c.fd.objective.into(),
                c.fd.clamped.to_string().into(),
                c.hd_min_kappa.into(),
                c.hd_min.into(),
                c.margin().into(),
                Cell::from(c.fd_wins()),
            ]);
        }
        vec![("fd_hd.csv".into(), t), ("fd_hd_summary.csv".into(), s)]
    }
}

pub fn run_fd_hd_comparison(cfg: &ScenarioConfig) -> Result<FdHdReport> {
    let params = cfg.objective_params()?;
    let trace = generate_fading_trace(&cfg.fading)?;
    let grid = SearchGrid::uniform(cfg.kappa_grid_step)?;
    let comparisons = sweep_gains(cfg, &trace)
        .into_par_iter()
        .map(|(source, h)| Ok((source, h, compare_fd_hd(h, &params, &grid)?)))
        .collect::<Result<Vec<_>>>()?;
    Ok(FdHdReport { comparisons })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FitReport {
    pub kappas: Vec<f64>,
    pub samples: Vec<RateDistortionSample>,
    pub model: ExpDistortionModel,
    pub signal: String,
}

impl FitReport {
    fn gate(&self) -> Result<()> {
        if self.model.r_squared < FIT_R2_GATE {
            return Err(Error::CheckFailed(format!(
                "exponential fit R^2 = {:.4} is below {FIT_R2_GATE}",
                self.model.r_squared
            )));
        }
        Ok(())
    }

    pub fn tables(&self, cfg: &ScenarioConfig) -> Vec<(String, CsvTable)> {
        let mut t = CsvTable::new(vec![
            "scenario",
            "kappa",
            "rate",
            "prd",
            "model_prd",
            "log_residual",
            "in_fit",
        ]);
        t.metadata = metadata(cfg, Scenario::Fit);
        t.metadata.push(format!("signal: {}", self.signal));
        for (kappa, s) in self.kappas.iter().zip(&self.samples) {
            let model = self.model.eval(s.rs);
            let in_fit = s.d > 0.0;
            let residual = if in_fit {
                s.d.ln() - self.model.ln_eval(s.rs)
            } else {
                0.0
            };
            t.push(vec![
                "fit".into(),
                (*kappa).into(),
                s.rs.into(),
                s.d.into(),
                model.into(),
                residual.into(),
                Cell::from(in_fit),
            ]);
        }
        let mut s = CsvTable::new(vec![
            "scenario",
            "a",
            "b",
            "r_squared",
            "r_squared_linear",
            "points_in_fit",
            "gate",
        ]);
        s.metadata = metadata(cfg, Scenario::Fit);
        s.push(vec![
            "fit".into(),
            self.model.a.into(),
            self.model.b.into(),
            self.model.r_squared.into(),
            self.model.r_squared_linear.into(),
            self.samples.iter().filter(|s| s.d > 0.0).count().into(),
            if self.model.r_squared >= FIT_R2_GATE {
                "pass"
            } else {
                "fail"
            }
            .into(),
        ]);
        vec![("fit.csv".into(), t), ("fit_summary.csv".into(), s)]
    }
}

pub fn load_signal(cfg: &ScenarioConfig) -> Result<SignalFrame> {
    match &cfg.signal_source {
        SignalSource::Synthetic => synth_eeg(cfg.fs, cfg.signal_duration, cfg.seed),
        SignalSource::Csv(path) => load_signal_csv(path, cfg.fs, cfg.n_bits),
    }
}

pub fn run_distortion_fit(cfg: &ScenarioConfig) -> Result<FitReport> {
    let frame = load_signal(cfg)?;
    cfg.codec.validate_for(frame.len())?;
    let last = (cfg.fit_points - 1) as f64;
    let kappas: Vec<f64> = (0..cfg.fit_points).map(|i| i as f64 / last).collect();
    let samples = sweep_rate_distortion(&frame, &cfg.codec, &kappas)?;
    let model = fit_exponential(&samples)?;
    Ok(FitReport {
        kappas,
        samples,
        model,
        signal: format!("{} ({} samples)", cfg.signal_source, frame.len()),
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioOutcome {
    pub files: Vec<PathBuf>,
    pub summary: Vec<String>,
}

/// Run `scenario`, write its CSVs under `cfg.output_dir`, then apply the
/// scenario's gate. Files are written even when the gate fails.
pub fn run_scenario(scenario: Scenario, cfg: &ScenarioConfig) -> Result<ScenarioOutcome> {
    let (tables, summary, gate) = match scenario {
        Scenario::Tradeoff => {
            let r = run_tradeoff_sweep(cfg)?;
            let summary = vec![format!(
                "{} rows over {} gain(s); {} infeasible grid points skipped",
                r.rows.len(),
                r.curves().len(),
                r.skipped_infeasible
            )];
            (r.tables(cfg), summary, r.gate())
        }
        Scenario::Optimality => {
            let r = run_optimality_check(cfg)?;
            let summary = vec![format!(
                "{} points, {} unclamped; max |U_closed - U_oracle| = {:.3e}; max kappa gap (unclamped) = {:.3e}",
                r.rows.len(),
                r.unclamped(),
                r.max_gap(),
                r.max_kappa_gap_unclamped()
            )];
            (r.tables(cfg), summary, Ok(()))
        }
        Scenario::FdHd => {
            let params = cfg.objective_params()?;
            let r = run_fd_hd_comparison(cfg)?;
            let summary = r
                .comparisons
                .iter()
                .take(5)
                .map(|(src, h, c)| {
                    format!(
                        "h[{src}] = {h:.6}: U_FD* = {:.9} at kappa {:.4}, min U_HD = {:.9} at kappa {:.4}, FD {}",
                        c.fd.objective,
                        c.fd.kappa_star,
                        c.hd_min,
                        c.hd_min_kappa,
                        if c.fd_wins() { "wins" } else { "loses" }
                    )
                })
                .collect();
            (r.tables(cfg, &params), summary, Ok(()))
        }
        Scenario::Fit => {
            let r = run_distortion_fit(cfg)?;
            let summary = vec![format!(
                "a = {:.6}, b = {:.6e}, R^2 (log) = {:.4}, R^2 (linear) = {:.4}",
                r.model.a, r.model.b, r.model.r_squared, r.model.r_squared_linear
            )];
            (r.tables(cfg), summary, r.gate())
        }
    };
    fs::create_dir_all(&cfg.output_dir).map_err(|source| Error::Io {
        path: cfg.output_dir.clone(),
        source,
    })?;
    let mut files = Vec::new();
    for (name, table) in tables {
        let path = cfg.output_dir.join(name);
        table.write(&path)?;
        files.push(path);
    }
    if scenario == Scenario::Optimality {
        let trace = generate_fading_trace(&cfg.fading)?;
        let mut t = CsvTable::new(vec!["h"]);
        for h in trace.gains() {
            t.push(vec![(*h).into()]);
        }
        let path = cfg.output_dir.join("trace.csv");
        t.write(&path)?;
        files.push(path);
    }
    gate?;
    Ok(ScenarioOutcome { files, summary })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_cfg() -> ScenarioConfig {
        let mut cfg = ScenarioConfig::default();
        cfg.fading.length = 50;
        cfg.set_kappa_grid_step(0.01).unwrap();
        cfg
    }

    #[test]
    fn scenario_names_roundtrip() {
        for s in Scenario::ALL {
            assert_eq!(s.name().parse::<Scenario>().unwrap(), s);
        }
        assert!("fig9".parse::<Scenario>().is_err());
    }

    #[test]
    fn monotonicity_counts() {
        assert_eq!(monotonicity(&[1.0, 2.0, 2.0, 3.0], true), (0, 1));
        assert_eq!(monotonicity(&[3.0, 1.0, 2.0], false), (1, 0));
        assert_eq!(monotonicity(&[1.0, 1.0, 1.0], true), (0, 2));
    }

    #[test]
    fn tradeoff_is_monotone() {
        let r = run_tradeoff_sweep(&small_cfg()).unwrap();
        assert_eq!(r.rows.len(), 101);
        assert!(r.gate().is_ok());
        let p: Vec<f64> = r.rows.iter().map(|x| x.p_norm).collect();
        assert_eq!(monotonicity(&p, false).0, 0);
    }

    #[test]
    fn per_sample_tradeoff_has_one_curve_per_gain() {
        let mut cfg = small_cfg();
        cfg.set_per_sample(true);
        cfg.fading.length = 3;
        let r = run_tradeoff_sweep(&cfg).unwrap();
        assert_eq!(r.curves().len(), 3);
    }

    #[test]
    fn mean_gain_sweep_needs_the_full_range() {
        let mut cfg = small_cfg();
        cfg.link.si_quality_mu = 10.0;
        assert!(run_tradeoff_sweep(&cfg).unwrap_err().is_infeasibility());
        cfg.set_per_sample(true);
        let r = run_tradeoff_sweep(&cfg).unwrap();
        assert!(r.skipped_infeasible > 0);
    }

    #[test]
    fn optimality_over_lambda() {
        let mut cfg = small_cfg();
        cfg.sweep = SweepVariable::Lambda;
        let r = run_optimality_check(&cfg).unwrap();
        assert_eq!(r.rows.len(), 9);
        assert!(r.max_gap() <= 1e-4);
    }

    #[test]
    fn outputs_are_deterministic() {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = small_cfg();
        cfg.set_output_dir(dir.path().to_path_buf());
        for s in [Scenario::Tradeoff, Scenario::Optimality, Scenario::FdHd] {
            let first = run_scenario(s, &cfg).unwrap();
            let bytes: Vec<Vec<u8>> = first.files.iter().map(|f| fs::read(f).unwrap()).collect();
            let second = run_scenario(s, &cfg).unwrap();
            for (f, b) in second.files.iter().zip(&bytes) {
                assert_eq!(&fs::read(f).unwrap(), b, "{}", f.display());
            }
        }
        let text = fs::read_to_string(dir.path().join("trace.csv")).unwrap();
        assert!(text.lines().any(|l| l == "h"));
        assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 51);
    }

    #[test]
    fn csv_header_block() {
        let cfg = small_cfg();
        let r = run_fd_hd_comparison(&cfg).unwrap();
        let params = cfg.objective_params().unwrap();
        let tables = r.tables(&cfg, &params);
        let text = tables[0].1.render();
        assert!(text.starts_with("# fdlink "));
        assert!(text.contains("# channel.mu = 0.001 [paper]"));
        assert!(text.contains("# noise interpretation: density"));
        assert!(r.all_fd_win());
    }
}
