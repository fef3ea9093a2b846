//! Weighted power-distortion objective, its closed-form minimizer, a
//! grid-search oracle and the half-duplex comparison.
//!
//! The objective at rate `R` (with `R = Rs = n fs (1 - kappa)`) is
//!
//! ```text
//! U(R) = lambda * P(R) / P_max + (1 - lambda) * ln D(R) / beta
//! ```
//!
//! Substituting `chi = 2^{R/B}`, the stationarity condition `dU/dR = 0`
//! becomes the quadratic
//! `b~ B mu^2 chi^2 + (2 b~ B mu c2 + c1) chi + b~ B c2^2 = 0` with
//! `c1 = ln2 h N~`, `c2 = -h - mu`, `N~ = sigma^2 lambda / P_max` and
//! `b~ = b (1 - lambda) / beta`.

use std::f64::consts::LN_2;
use std::fmt;

use crate::channel::{capacity_limit, hd_required_power, required_power, si_margin, LinkParams};
use crate::distortion::{generated_rate, kappa_for_rate, ExpDistortionModel};
use crate::error::{Error, Result};

/// Fraction below the capacity limit used when a solution has to be pulled
/// back inside the feasible region.
pub const CAPACITY_BACKOFF: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectiveParams {
    pub lambda_weight: f64,
    /// Normalization of the log-distortion term.
    pub beta: f64,
    pub link: LinkParams,
    pub model: ExpDistortionModel,
    pub fs: f64,
    pub n_bits: u32,
}

impl ObjectiveParams {
    /// Parameters with `beta = ln(a)`, which maps `ln D` onto `(0, 1]` for
    /// rates where `D >= 1`.
    pub fn with_default_beta(
        lambda_weight: f64,
        link: LinkParams,
        model: ExpDistortionModel,
        fs: f64,
        n_bits: u32,
    ) -> Result<Self> {
        let p = Self {
            lambda_weight,
            beta: model.a.ln(),
            link,
            model,
            fs,
            n_bits,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.lambda_weight) {
            return Err(Error::config(format!(
                "lambda = {} violates constraint (9): 0 <= lambda <= 1",
                self.lambda_weight
            )));
        }
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::config(format!(
                "normalization beta must be > 0, got {} (the default ln(a) needs a > 1)",
                self.beta
            )));
        }
        if !(self.fs.is_finite() && self.fs > 0.0) {
            return Err(Error::config(format!(
                "sampling rate must be > 0, got {}",
                self.fs
            )));
        }
        if self.n_bits == 0 {
            return Err(Error::config("bits per sample must be >= 1"));
        }
        self.link.validate()
    }

    /// Uncompressed generated rate `n fs`.
    pub fn max_rate(&self) -> f64 {
        generated_rate(self.fs, self.n_bits, 0.0)
    }

    pub fn rate_for(&self, kappa: f64) -> f64 {
        generated_rate(self.fs, self.n_bits, kappa)
    }

    pub fn kappa_for(&self, r: f64) -> f64 {
        kappa_for_rate(self.fs, self.n_bits, r).clamp(0.0, 1.0)
    }

    /// `N~ = sigma^2 lambda / P_max`.
    pub fn n_tilde(&self) -> f64 {
        self.link.noise_power() * self.lambda_weight / self.link.p_max
    }

    /// `b~ = b (1 - lambda) / beta`, the constant slope of the distortion term.
    pub fn b_tilde(&self) -> f64 {
        self.model.b * (1.0 - self.lambda_weight) / self.beta
    }

    fn distortion_term(&self, r: f64) -> f64 {
        (1.0 - self.lambda_weight) * self.model.ln_eval(r) / self.beta
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Clamp {
    None,
    AtZeroCompression,
    AtFullCompression,
    AtCapacity,
}

impl fmt::Display for Clamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Clamp::None => "none",
            Clamp::AtZeroCompression => "at_zero_compression",
            Clamp::AtFullCompression => "at_full_compression",
            Clamp::AtCapacity => "at_capacity",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SolverKind {
    ClosedForm,
    /// Degenerate weight (`lambda` of 0 or 1) solved at the boundary.
    Boundary,
    Exhaustive,
}

impl fmt::Display for SolverKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            SolverKind::ClosedForm => "closed_form",
            SolverKind::Boundary => "boundary",
            SolverKind::Exhaustive => "exhaustive",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Solution {
    pub r_star: f64,
    pub kappa_star: f64,
    /// `2^{R*/B}`.
    pub chi: f64,
    pub power: f64,
    /// PRD in percent.
    pub distortion: f64,
    pub objective: f64,
    pub clamped: Clamp,
    pub solver: SolverKind,
    /// Stationary rate before clamping, when the quadratic produced one.
    pub r_stationary: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SearchGrid {
    kappa_values: Vec<f64>,
}

impl SearchGrid {
    pub fn new(kappa_values: Vec<f64>) -> Result<Self> {
        if kappa_values.is_empty() {
            return Err(Error::config("search grid is empty"));
        }
        if kappa_values.iter().any(|k| !(0.0..=1.0).contains(k)) {
            return Err(Error::config("search grid values must lie in [0, 1]"));
        }
        if kappa_values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::config("search grid must be strictly increasing"));
        }
        Ok(Self { kappa_values })
    }

    /// `0, step, 2 step, ..., 1`; the last point is exactly 1.
    pub fn uniform(step: f64) -> Result<Self> {
        if !(step > 0.0 && step < 1.0) {
            return Err(Error::config(format!(
                "grid step must be in (0, 1), got {step}"
            )));
        }
        let n = (1.0 / step).round() as usize;
        if ((n as f64) * step - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!("grid step {step} does not divide 1")));
        }
        Self::new((0..=n).map(|i| i as f64 / n as f64).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.kappa_values
    }

    pub fn len(&self) -> usize {
        self.kappa_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.kappa_values.is_empty()
    }
}

/// `U(r)`; fails when `r` is not strictly below the capacity limit.
pub fn objective_u(r: f64, h: f64, params: &ObjectiveParams) -> Result<f64> {
    let p = required_power(r, h, &params.link)?;
    Ok(params.lambda_weight * p / params.link.p_max + params.distortion_term(r))
}

/// Analytic `dU/dR = ln2 h N~ chi / (B (mu chi - h - mu)^2) + b~`.
pub fn derivative_du_dr(r: f64, h: f64, params: &ObjectiveParams) -> Result<f64> {
    let link = &params.link;
    let limit = capacity_limit(h, link);
    if r.is_nan() || r < 0.0 || h.is_nan() || h <= 0.0 {
        return Err(Error::config(format!(
            "need r >= 0 and h > 0, got r = {r}, h = {h}"
        )));
    }
    if r >= limit {
        return Err(Error::InfeasibleRate { rate: r, limit });
    }
    let b = link.bandwidth_b;
    let chi = (r * LN_2 / b).exp();
    // mu chi - h - mu = -(h - mu (chi - 1))
    let m = si_margin(r, h, link);
    Ok(LN_2 * h * params.n_tilde() * chi / (b * m * m) + params.b_tilde())
}

/// Coefficients `[A, B, C]` of the stationarity quadratic `A chi^2 + B chi + C`.
pub fn quadratic_coefficients(h: f64, params: &ObjectiveParams) -> [f64; 3] {
    let b = params.link.bandwidth_b;
    let mu = params.link.si_quality_mu;
    let bt = params.b_tilde();
    let c1 = LN_2 * h * params.n_tilde();
    let c2 = -h - mu;
    [
        bt * b * mu * mu,
        2.0 * bt * b * mu * c2 + c1,
        bt * b * c2 * c2,
    ]
}

/// `|A chi^2 + B chi + C|` relative to the largest coefficient magnitude.
pub fn quadratic_residual(chi: f64, h: f64, params: &ObjectiveParams) -> f64 {
    let [a, b, c] = quadratic_coefficients(h, params);
    let scale = a.abs().max(b.abs()).max(c.abs());
    ((a * chi + b) * chi + c).abs() / scale
}

/// Real roots of the stationarity quadratic, smallest first.
fn stationary_roots(h: f64, params: &ObjectiveParams) -> Vec<f64> {
    let [a, b, c] = quadratic_coefficients(h, params);
    if a == 0.0 {
        return if b != 0.0 { vec![-c / b] } else { Vec::new() };
    }
    let bt = params.b_tilde();
    let bw = params.link.bandwidth_b;
    let mu = params.link.si_quality_mu;
    let c1 = LN_2 * h * params.n_tilde();
    let c2 = -h - mu;
    // b^2 - 4ac collapses to c1 (c1 + 4 b~ B mu c2), free of cancellation.
    let disc = c1 * (c1 + 4.0 * bt * bw * mu * c2);
    if disc < 0.0 {
        return Vec::new();
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let mut roots = if q == 0.0 {
        vec![0.0]
    } else {
        vec![q / a, c / q]
    };
    roots.sort_by(f64::total_cmp);
    roots
}

/// Sign test of `d2U/dR2` at `chi`: the slope of `c1 chi / (mu chi + c2)^2`.
fn is_local_minimum(chi: f64, h: f64, params: &ObjectiveParams) -> bool {
    let mu = params.link.si_quality_mu;
    let c1 = LN_2 * h * params.n_tilde();
    let c2 = -h - mu;
    let s = mu * chi + c2;
    c1 * (c2 - mu * chi) / (s * s * s) > 0.0
}

/// Assemble a [`Solution`] at feasible rate `r`.
fn solution_at(
    r: f64,
    h: f64,
    params: &ObjectiveParams,
    clamped: Clamp,
    solver: SolverKind,
    r_stationary: Option<f64>,
) -> Result<Solution> {
    Ok(Solution {
        r_star: r,
        kappa_star: params.kappa_for(r),
        chi: (r * LN_2 / params.link.bandwidth_b).exp(),
        power: required_power(r, h, &params.link)?,
        distortion: params.model.eval(r),
        objective: objective_u(r, h, params)?,
        clamped,
        solver,
        r_stationary,
    })
}

/// Highest admissible rate: `n fs`, or just under the capacity limit when
/// that is lower.
fn top_rate(h: f64, params: &ObjectiveParams) -> (f64, Clamp) {
    let limit = capacity_limit(h, &params.link);
    let max = params.max_rate();
    if max < limit {
        (max, Clamp::AtZeroCompression)
    } else {
        (limit * (1.0 - CAPACITY_BACKOFF), Clamp::AtCapacity)
    }
}

/// Closed-form minimizer of `U`.
///
/// The admissible stationary root is clamped onto `[0, n fs]`. When the
/// quadratic yields no admissible root the problem is solved by
/// [`exhaustive_search`] on a `1e-4` grid and the solution is marked
/// [`SolverKind::Exhaustive`].
pub fn solve_closed_form(h: f64, params: &ObjectiveParams) -> Result<Solution> {
    params.validate()?;
    if !(h.is_finite() && h > 0.0) {
        return Err(Error::config(format!("channel gain must be > 0, got {h}")));
    }
    let lambda = params.lambda_weight;
    if lambda == 0.0 {
        let (r, clamp) = top_rate(h, params);
        return solution_at(r, h, params, clamp, SolverKind::Boundary, None);
    }
    if lambda == 1.0 {
        return solution_at(
            0.0,
            h,
            params,
            Clamp::AtFullCompression,
            SolverKind::Boundary,
            None,
        );
    }

    let limit = capacity_limit(h, &params.link);
    let pole = 1.0 + h / params.link.si_quality_mu;
    let chi = stationary_roots(h, params)
        .into_iter()
        .find(|&chi| chi > 0.0 && chi < pole && is_local_minimum(chi, h, params));
    let Some(chi) = chi else {
        let grid = SearchGrid::uniform(1e-4)?;
        return exhaustive_search(h, params, &grid);
    };

    let r_stat = params.link.bandwidth_b * chi.log2();
    if r_stat <= 0.0 {
        return solution_at(
            0.0,
            h,
            params,
            Clamp::AtFullCompression,
            SolverKind::ClosedForm,
            Some(r_stat),
        );
    }
    if r_stat >= limit {
        let (top, clamp) = top_rate(h, params);
        return solution_at(top, h, params, clamp, SolverKind::ClosedForm, Some(r_stat));
    }
    if r_stat > params.max_rate() {
        let r = params.max_rate();
        return solution_at(
            r,
            h,
            params,
            Clamp::AtZeroCompression,
            SolverKind::ClosedForm,
            Some(r_stat),
        );
    }
    solution_at(
        r_stat,
        h,
        params,
        Clamp::None,
        SolverKind::ClosedForm,
        Some(r_stat),
    )
}

/// Grid oracle: evaluate `U` at every feasible grid ratio and keep the
/// smallest, preferring the larger ratio on ties.
pub fn exhaustive_search(h: f64, params: &ObjectiveParams, grid: &SearchGrid) -> Result<Solution> {
    params.validate()?;
    let limit = capacity_limit(h, &params.link);
    let mut best: Option<(f64, f64, f64)> = None;
    for &kappa in grid.values() {
        let r = params.rate_for(kappa);
        if r >= limit {
            continue;
        }
        let u = objective_u(r, h, params)?;
        if best.is_none_or(|(_, _, bu)| u <= bu) {
            best = Some((kappa, r, u));
        }
    }
    let Some((kappa, r, _)) = best else {
        return Err(Error::Infeasible(format!(
            "no grid ratio gives a rate below the capacity limit {limit} bit/s"
        )));
    };
    let mut s = solution_at(r, h, params, Clamp::None, SolverKind::Exhaustive, None)?;
    s.kappa_star = kappa;
    Ok(s)
}

/// `U` with the half-duplex power in place of the full-duplex one.
pub fn hd_objective(kappa: f64, h: f64, params: &ObjectiveParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&kappa) {
        return Err(Error::config(format!(
            "compression ratio must be in [0, 1], got {kappa}"
        )));
    }
    let r = params.rate_for(kappa);
    let p = hd_required_power(r, h, &params.link)?;
    Ok(params.lambda_weight * p / params.link.p_max + params.distortion_term(r))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FdHdComparison {
    pub fd: Solution,
    /// `(kappa, U_HD(kappa))` for every grid ratio.
    pub hd_curve: Vec<(f64, f64)>,
    pub hd_min_kappa: f64,
    pub hd_min: f64,
}

impl FdHdComparison {
    /// `min U_HD - U_FD`; non-negative when full duplex is at least as good.
    pub fn margin(&self) -> f64 {
        self.hd_min - self.fd.objective
    }

    pub fn fd_wins(&self) -> bool {
        self.fd.objective <= self.hd_min
    }
}

pub fn compare_fd_hd(
    h: f64,
    params: &ObjectiveParams,
    grid: &SearchGrid,
) -> Result<FdHdComparison> {
    let fd = solve_closed_form(h, params)?;
    let hd_curve = grid
        .values()
        .iter()
        .map(|&k| Ok((k, hd_objective(k, h, params)?)))
        .collect::<Result<Vec<_>>>()?;
    let (hd_min_kappa, hd_min) =
        hd_curve
            .iter()
            .copied()
            .fold((f64::NAN, f64::INFINITY), |best, (k, u)| {
                if u <= best.1 {
                    (k, u)
                } else {
                    best
                }
            });
    Ok(FdHdComparison {
        fd,
        hd_curve,
        hd_min_kappa,
        hd_min,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::NoiseMode;
    use proptest::prelude::*;

    fn reference_params() -> ObjectiveParams {
        ObjectiveParams::with_default_beta(
            0.5,
            LinkParams::default(),
            ExpDistortionModel::new(88.63, -0.0001767).unwrap(),
            2000.0,
            12,
        )
        .unwrap()
    }

    /// A noisier link where the optimum sits inside `(0, n fs)` for `h`
    /// around 1.
    fn interior_params(lambda: f64) -> ObjectiveParams {
        let link = LinkParams {
            noise_density_n0_dbm: 30.8,
            noise_mode: NoiseMode::Power,
            ..LinkParams::default()
        };
        ObjectiveParams {
            lambda_weight: lambda,
            ..reference_params()
        }
        .with_link(link)
    }

    impl ObjectiveParams {
        fn with_link(self, link: LinkParams) -> Self {
            Self { link, ..self }
        }
    }

    #[test]
    fn objective_hand_evaluation() {
        let p = reference_params();
        let sigma2 = 10f64.powf(-20.4) * 30e3;
        let x = 2f64.powf(12000.0 / 30e3) - 1.0;
        let power = sigma2 * x / (1.0 - 0.001 * x);
        let ln_d = 88.63f64.ln() - 0.0001767 * 12000.0;
        let expected = 0.5 * power + 0.5 * ln_d / 88.63f64.ln();
        let u = objective_u(12000.0, 1.0, &p).unwrap();
        assert!((u - expected).abs() < 1e-14, "{u} vs {expected}");
        assert!((u - 0.263_584_124).abs() < 1e-6);
    }

    #[test]
    fn weight_degeneracies() {
        let p1 = ObjectiveParams {
            lambda_weight: 1.0,
            ..reference_params()
        };
        let s = solve_closed_form(1.0, &p1).unwrap();
        assert_eq!(
            (s.r_star, s.kappa_star, s.clamped),
            (0.0, 1.0, Clamp::AtFullCompression)
        );
        assert_eq!(objective_u(0.0, 1.0, &p1).unwrap(), 0.0);

        let p0 = ObjectiveParams {
            lambda_weight: 0.0,
            ..reference_params()
        };
        let s = solve_closed_form(1.0, &p0).unwrap();
        assert_eq!((s.r_star, s.kappa_star), (24000.0, 0.0));
        let slope = p0.model.b / p0.beta;
        for r in [0.0, 5e3, 2e4] {
            assert!((derivative_du_dr(r, 1.0, &p0).unwrap() - slope).abs() < 1e-18);
        }
        // Rate ceiling below n fs: the boundary backs off the capacity limit.
        let s = solve_closed_form(2e-4, &p0).unwrap();
        assert_eq!(s.clamped, Clamp::AtCapacity);
        assert!(s.r_star < capacity_limit(2e-4, &p0.link));
    }

    #[test]
    fn lambda_out_of_range_names_constraint() {
        let p = ObjectiveParams {
            lambda_weight: 1.5,
            ..reference_params()
        };
        let msg = p.validate().unwrap_err().to_string();
        assert!(msg.contains("(9)"), "{msg}");
        assert!(ObjectiveParams {
            beta: 0.0,
            ..reference_params()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn reference_unit_gain_uses_full_rate() {
        let s = solve_closed_form(1.0, &reference_params()).unwrap();
        assert_eq!(s.clamped, Clamp::AtZeroCompression);
        assert_eq!(s.kappa_star, 0.0);
        let stat = s.r_stationary.unwrap();
        assert!(stat > 24000.0 && stat < capacity_limit(1.0, &reference_params().link));
    }

    #[test]
    fn interior_solution_is_stationary() {
        let p = interior_params(0.5);
        let s = solve_closed_form(1.0, &p).unwrap();
        assert_eq!(s.clamped, Clamp::None, "{s:?}");
        assert!(s.kappa_star > 0.0 && s.kappa_star < 1.0);
        assert!(derivative_du_dr(s.r_star, 1.0, &p).unwrap().abs() <= 1e-8);
        assert!(quadratic_residual(s.chi, 1.0, &p) <= 1e-6);
        // sign flip across the optimum
        assert!(derivative_du_dr(0.99 * s.r_star, 1.0, &p).unwrap() < 0.0);
        assert!(derivative_du_dr(1.01 * s.r_star, 1.0, &p).unwrap() > 0.0);
    }

    #[test]
    fn small_gain_reference_case_is_interior() {
        let p = reference_params();
        let h = 5e-4;
        let s = solve_closed_form(h, &p).unwrap();
        assert_eq!(s.clamped, Clamp::None);
        assert!(s.r_star < capacity_limit(h, &p.link));
        assert!(derivative_du_dr(s.r_star, h, &p).unwrap().abs() <= 1e-8);
        let oracle = exhaustive_search(h, &p, &SearchGrid::uniform(1e-4).unwrap()).unwrap();
        assert!((s.objective - oracle.objective).abs() <= 1e-4);
        assert!((s.kappa_star - oracle.kappa_star).abs() <= 2e-4);
    }

    #[test]
    fn singleton_grid_reproduces_closed_form() {
        let p = interior_params(0.4);
        let s = solve_closed_form(0.8, &p).unwrap();
        let grid = SearchGrid::new(vec![s.kappa_star]).unwrap();
        let o = exhaustive_search(0.8, &p, &grid).unwrap();
        assert!((o.objective - s.objective).abs() <= 1e-15 * s.objective.abs().max(1.0));
    }

    #[test]
    fn refined_grid_never_worse() {
        let p = interior_params(0.6);
        let coarse = exhaustive_search(1.3, &p, &SearchGrid::uniform(1e-2).unwrap()).unwrap();
        let fine = exhaustive_search(1.3, &p, &SearchGrid::uniform(1e-3).unwrap()).unwrap();
        assert!(fine.objective <= coarse.objective);
    }

    #[test]
    fn ties_prefer_more_compression() {
        // lambda = 0 with b = 0 makes every point tie.
        let p = ObjectiveParams {
            lambda_weight: 0.0,
            model: ExpDistortionModel::new(10.0, 0.0).unwrap(),
            beta: 1.0,
            ..reference_params()
        };
        let o = exhaustive_search(1.0, &p, &SearchGrid::uniform(0.1).unwrap()).unwrap();
        assert_eq!(o.kappa_star, 1.0);
    }

    #[test]
    fn oracle_reports_infeasibility() {
        let p = reference_params();
        let grid = SearchGrid::new(vec![0.0]).unwrap();
        let err = exhaustive_search(1e-4, &p, &grid).unwrap_err();
        assert!(err.is_infeasibility());
    }

    #[test]
    fn grid_validation() {
        assert!(SearchGrid::new(vec![]).is_err());
        assert!(SearchGrid::new(vec![0.2, 0.1]).is_err());
        assert!(SearchGrid::new(vec![0.1, 0.1]).is_err());
        assert!(SearchGrid::new(vec![-0.1]).is_err());
        assert!(SearchGrid::uniform(0.3).is_err());
        let g = SearchGrid::uniform(1e-4).unwrap();
        assert_eq!(g.len(), 10_001);
        assert_eq!(*g.values().last().unwrap(), 1.0);
    }

    #[test]
    fn increasing_distortion_falls_back_to_search() {
        let p = ObjectiveParams {
            model: ExpDistortionModel::new(88.63, 1e-4).unwrap(),
            ..interior_params(0.5)
        };
        let s = solve_closed_form(1.0, &p).unwrap();
        assert_eq!(s.solver, SolverKind::Exhaustive);
        assert_eq!(s.kappa_star, 1.0);
    }

    #[test]
    fn zero_si_has_linear_stationarity() {
        let link = LinkParams {
            si_quality_mu: 0.0,
            ..interior_params(0.5).link
        };
        let p = interior_params(0.5).with_link(link);
        let s = solve_closed_form(1.0, &p).unwrap();
        assert_eq!(s.clamped, Clamp::None);
        assert!(derivative_du_dr(s.r_star, 1.0, &p).unwrap().abs() <= 1e-8);
    }

    #[test]
    fn hd_objective_endpoints() {
        let p = reference_params();
        assert!((hd_objective(1.0, 1.0, &p).unwrap() - 0.5).abs() < 1e-15);
        let fd = required_power(24000.0, 1.0, &p.link).unwrap();
        let hd = hd_required_power(24000.0, 1.0, &p.link).unwrap();
        assert!(hd > fd);
        assert!(hd_objective(1.5, 1.0, &p).is_err());
    }

    #[test]
    fn fd_beats_hd_with_reference_parameters() {
        let p = reference_params();
        let grid = SearchGrid::uniform(1e-3).unwrap();
        let cmp = compare_fd_hd(1.0, &p, &grid).unwrap();
        assert!(cmp.fd_wins(), "margin {}", cmp.margin());
        assert_eq!(cmp.hd_curve.len(), grid.len());
    }

    #[test]
    fn distortion_only_fd_and_hd_coincide() {
        let p = ObjectiveParams {
            lambda_weight: 0.0,
            ..reference_params()
        };
        let cmp = compare_fd_hd(1.0, &p, &SearchGrid::uniform(1e-2).unwrap()).unwrap();
        assert_eq!(cmp.fd.objective, cmp.hd_min);
    }

    #[test]
    fn poor_cancellation_erodes_fd_advantage() {
        let grid = SearchGrid::uniform(1e-3).unwrap();
        let good = compare_fd_hd(1.0, &interior_params(0.5), &grid).unwrap();
        let link = LinkParams {
            si_quality_mu: 5.0,
            ..interior_params(0.5).link
        };
        let bad = compare_fd_hd(1.0, &interior_params(0.5).with_link(link), &grid).unwrap();
        assert!(bad.margin() < good.margin());
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(64))]

        #[test]
        fn closed_form_matches_oracle(
            h in 0.2f64..3.0,
            lambda in 0.05f64..0.95,
            mu_exp in -4.0f64..-1.0,
            b_khz in 10.0f64..60.0,
            n0 in 20.0f64..40.0,
        ) {
            let link = LinkParams {
                bandwidth_b: b_khz * 1e3,
                si_quality_mu: 10f64.powf(mu_exp),
                noise_density_n0_dbm: n0,
                noise_mode: NoiseMode::Power,
                ..LinkParams::default()
            };
            let p = interior_params(lambda).with_link(link);
            let s = solve_closed_form(h, &p).unwrap();
            let oracle = exhaustive_search(h, &p, &SearchGrid::uniform(1e-4).unwrap()).unwrap();
            prop_assert!(s.r_star < capacity_limit(h, &p.link));
            prop_assert!((0.0..=1.0).contains(&s.kappa_star));
            prop_assert!(s.objective <= oracle.objective + 1e-12);
            prop_assert!((s.objective - oracle.objective).abs() <= 1e-4);
            if s.clamped == Clamp::None {
                prop_assert!((s.kappa_star - oracle.kappa_star).abs() <= 2e-4);
                prop_assert!(derivative_du_dr(s.r_star, h, &p).unwrap().abs() <= 1e-8);
                prop_assert!(quadratic_residual(s.chi, h, &p) <= 1e-6);
            }
        }

        #[test]
        fn weight_moves_toward_compression(h in 0.3f64..3.0, n0 in 25.0f64..35.0) {
            let link = LinkParams {
                noise_density_n0_dbm: n0,
                noise_mode: NoiseMode::Power,
                ..LinkParams::default()
            };
            let mut last: Option<Solution> = None;
            for i in 1..=9 {
                let p = interior_params(i as f64 / 10.0).with_link(link);
                let s = solve_closed_form(h, &p).unwrap();
                if let Some(prev) = last {
                    prop_assert!(s.kappa_star >= prev.kappa_star);
                    prop_assert!(s.power <= prev.power);
                }
                last = Some(s);
            }
        }
    }
}
