//! Alternating driver: enumerate per-user compression ratios at fixed
//! resources, re-solve the resource allocation at fixed ratios, repeat until
//! the surrogate objective converges. The three reference baselines (fixed
//! compression, fixed resources, max-sum-rate) run under the same interface
//! so their solutions are directly comparable.

use crate::compression::{optimize_compression, CompressionGrid};
use crate::error::{Error, Result};
use crate::models::{
    effective_accuracy, AccuracyModel, CompressionRatio, UserLink,
};
use crate::resource::{
    resource_objective, solve_resource_allocation, Allocation, Budgets, ScaConfig, WarmStart,
};

/// Which solver produced a [`Solution`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Method {
    Crra,
    Fcr,
    Fra,
    Msr,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Crra, Method::Fcr, Method::Fra, Method::Msr];

    pub fn label(&self) -> &'static str {
        match self {
            Method::Crra => "CRRA",
            Method::Fcr => "FCR",
            Method::Fra => "FRA",
            Method::Msr => "MSR",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s.to_ascii_uppercase().as_str() {
            "CRRA" => Ok(Method::Crra),
            "FCR" => Ok(Method::Fcr),
            "FRA" => Ok(Method::Fra),
            "MSR" => Ok(Method::Msr),
            other => Err(Error::Config(format!("unknown method `{other}`"))),
        }
    }
}

impl std::fmt::Display for Method {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// A complete joint solution: the allocation, the per-user ratios, and both
/// objective readings (the surrogate the optimizer maximizes and the exact
/// effective accuracy it bounds).
#[derive(Debug, Clone)]
pub struct Solution {
    pub method: Method,
    pub allocation: Allocation,
    pub ratios: Vec<f64>,
    pub surrogate_objective: f64,
    pub exact_objective: f64,
    pub iterations: usize,
    pub converged: bool,
    /// Surrogate objective after each accepted outer alternation.
    pub alternation_history: Vec<f64>,
}

/// Settings shared by the solver and the baselines.
#[derive(Debug, Clone)]
pub struct SolveConfig {
    /// Relative objective-change threshold for the outer alternation.
    pub tol: f64,
    pub max_alternations: usize,
    pub sca: ScaConfig,
    /// Projected-gradient stationarity threshold for the sum-rate program.
    pub msr_stationarity_tol: f64,
    pub msr_max_iters: usize,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_alternations: 30,
            sca: ScaConfig::default(),
            msr_stationarity_tol: 1e-8,
            msr_max_iters: 50_000,
        }
    }
}

fn broadcast<'a>(models: &'a [AccuracyModel], users: usize) -> Result<Vec<&'a AccuracyModel>> {
    match models.len() {
        1 => Ok(vec![&models[0]; users]),
        n if n == users => Ok(models.iter().collect()),
        n => Err(Error::LengthMismatch(format!(
            "{n} accuracy models for {users} users (need 1 or {users})"
        ))),
    }
}

fn equal_split(budgets: &Budgets, users: usize) -> (Vec<f64>, Vec<f64>) {
    let u = users as f64;
    (
        vec![budgets.b_max_hz / u; users],
        vec![budgets.p_min_w.max(budgets.p_max_w / u); users],
    )
}

fn links_at(links: &[UserLink], bw: &[f64], pw: &[f64]) -> Result<Vec<UserLink>> {
    links
        .iter()
        .zip(bw.iter().zip(pw.iter()))
        .map(|(l, (&b, &p))| l.with_allocation(b, p))
        .collect()
}

fn exact_total(
    links: &[UserLink],
    ratios: &[f64],
    models: &[&AccuracyModel],
) -> Result<f64> {
    let mut total = 0.0;
    for i in 0..links.len() {
        let o = CompressionRatio::new(ratios[i])?;
        total += effective_accuracy(&links[i], o, models[i]);
    }
    Ok(total)
}

fn alphas_for(ratios: &[f64], models: &[&AccuracyModel]) -> Result<Vec<f64>> {
    ratios
        .iter()
        .zip(models.iter())
        .map(|(&o, m)| m.evaluate(o))
        .collect()
}

/// One compression pass: the enumerated optimum for every user at the
/// current allocation.
fn compression_pass(
    links: &[UserLink],
    bw: &[f64],
    pw: &[f64],
    models: &[&AccuracyModel],
    grid: &CompressionGrid,
) -> Result<Vec<f64>> {
    let current = links_at(links, bw, pw)?;
    Ok(current
        .iter()
        .zip(models.iter())
        .map(|(l, m)| optimize_compression(l, m, grid).ratio)
        .collect())
}

fn build_solution(
    method: Method,
    links: &[UserLink],
    bw: Vec<f64>,
    pw: Vec<f64>,
    ratios: Vec<f64>,
    models: &[&AccuracyModel],
    iterations: usize,
    converged: bool,
    history: Vec<f64>,
) -> Result<Solution> {
    let placed = links_at(links, &bw, &pw)?;
    let alphas = alphas_for(&ratios, models)?;
    let surrogate = resource_objective(&placed, &ratios, &alphas)?;
    let exact = exact_total(&placed, &ratios, models)?;
    Ok(Solution {
        method,
        allocation: Allocation {
            bandwidth_hz: bw,
            power_w: pw,
            objective: surrogate,
        },
        ratios,
        surrogate_objective: surrogate,
        exact_objective: exact,
        iterations,
        converged,
        alternation_history: history,
    })
}

/// One run of the alternating loop from a given initial allocation. Each
/// alternation enumerates the per-user ratios at the current allocation and
/// re-solves the allocation at the new ratios (warm-started at the current
/// point, which keeps the surrogate objective nondecreasing).
struct Alternation {
    bw: Vec<f64>,
    pw: Vec<f64>,
    ratios: Vec<f64>,
    alternations: usize,
    converged: bool,
    history: Vec<f64>,
}

fn alternate(
    links: &[UserLink],
    models: &[&AccuracyModel],
    budgets: &Budgets,
    grid: &CompressionGrid,
    config: &SolveConfig,
    mut bw: Vec<f64>,
    mut pw: Vec<f64>,
) -> Result<Alternation> {
    let mut ratios = compression_pass(links, &bw, &pw, models, grid)?;
    let mut alphas = alphas_for(&ratios, models)?;
    let mut history: Vec<f64> = Vec::new();
    let mut converged = false;
    let mut alternations = 0;

    for _ in 0..config.max_alternations {
        alternations += 1;

        // Resource step at the current ratios, warm-started at the current
        // allocation so the alternation can only improve.
        let sca = ScaConfig {
            warm_start: Some(WarmStart {
                bandwidth_hz: bw.clone(),
                power_w: pw.clone(),
            }),
            ..config.sca.clone()
        };
        let outcome = solve_resource_allocation(&ratios, &alphas, budgets, links, &sca)?;
        bw = outcome.allocation.bandwidth_hz;
        pw = outcome.allocation.power_w;

        // Compression step at the new allocation.
        let new_ratios = compression_pass(links, &bw, &pw, models, grid)?;
        let new_alphas = alphas_for(&new_ratios, models)?;
        let placed = links_at(links, &bw, &pw)?;
        let objective = resource_objective(&placed, &new_ratios, &new_alphas)?;

        let improved = history
            .last()
            .map(|&prev| objective > prev)
            .unwrap_or(true);
        if improved {
            ratios = new_ratios;
            alphas = new_alphas;
            history.push(objective);
        }
        if let Some(window) = history.len().checked_sub(2) {
            let prev = history[window];
            let last = *history.last().expect("nonempty");
            if (last - prev).abs() < config.tol * prev.abs().max(1.0) {
                converged = true;
                break;
            }
        }
        if !improved {
            converged = true;
            break;
        }
    }

    Ok(Alternation {
        bw,
        pw,
        ratios,
        alternations,
        converged,
        history,
    })
}

/// Bandwidth and power shares proportional to each user's payload rate
/// demand `d0 / t0`, floored at the per-user minimums. Starving deadlines
/// directly drive this demand, so the alternation started here escapes the
/// equal-split fixed point where over-compressed users never attract
/// resources.
fn demand_split(links: &[UserLink], budgets: &Budgets) -> (Vec<f64>, Vec<f64>) {
    let u = links.len();
    let weights: Vec<f64> = links
        .iter()
        .map(|l| l.data_bits() / l.deadline_s())
        .collect();
    let total: f64 = weights.iter().sum();
    let b_room = budgets.b_max_hz - u as f64 * budgets.b_min_hz;
    let p_room = budgets.p_max_w - u as f64 * budgets.p_min_w;
    let bw = weights
        .iter()
        .map(|w| budgets.b_min_hz + b_room * w / total)
        .collect();
    let pw = weights
        .iter()
        .map(|w| budgets.p_min_w + p_room * w / total)
        .collect();
    (bw, pw)
}

/// The joint alternating solver. The alternation runs from an equal split
/// and from a demand-proportional split; the better surrogate objective wins
/// (ties toward the equal split).
pub fn crra_solve(
    links: &[UserLink],
    models: &[AccuracyModel],
    budgets: &Budgets,
    grid: &CompressionGrid,
    config: &SolveConfig,
) -> Result<Solution> {
    let u = links.len();
    if u == 0 {
        return Err(Error::Domain("need at least one user".into()));
    }
    budgets.feasible_for(u)?;
    let models = broadcast(models, u)?;

    let (eq_b, eq_p) = equal_split(budgets, u);
    let mut best = alternate(links, &models, budgets, grid, config, eq_b, eq_p)?;
    let (dm_b, dm_p) = demand_split(links, budgets);
    let challenger = alternate(links, &models, budgets, grid, config, dm_b, dm_p)?;
    let best_obj = best.history.last().copied().unwrap_or(f64::NEG_INFINITY);
    let challenger_obj = challenger
        .history
        .last()
        .copied()
        .unwrap_or(f64::NEG_INFINITY);
    if challenger_obj > best_obj {
        best = challenger;
    }

    build_solution(
        Method::Crra,
        links,
        best.bw,
        best.pw,
        best.ratios,
        &models,
        best.alternations,
        best.converged,
        best.history,
    )
}

/// Baseline: resource allocation at a fixed compression ratio for every
/// user; no compression update.
pub fn fcr_solve(
    links: &[UserLink],
    models: &[AccuracyModel],
    budgets: &Budgets,
    fixed_o: f64,
    config: &SolveConfig,
) -> Result<Solution> {
    let u = links.len();
    if u == 0 {
        return Err(Error::Domain("need at least one user".into()));
    }
    if !fixed_o.is_finite() || fixed_o <= 0.0 || fixed_o >= 1.0 {
        return Err(Error::Domain(format!(
            "fixed compression ratio must lie in (0, 1), got {fixed_o}"
        )));
    }
    budgets.feasible_for(u)?;
    let models = broadcast(models, u)?;
    let ratios = vec![fixed_o; u];
    let alphas = alphas_for(&ratios, &models)?;
    let outcome = solve_resource_allocation(&ratios, &alphas, budgets, links, &config.sca)?;
    build_solution(
        Method::Fcr,
        links,
        outcome.allocation.bandwidth_hz,
        outcome.allocation.power_w,
        ratios,
        &models,
        outcome.iterations,
        outcome.converged,
        outcome.objective_history,
    )
}

/// Baseline: equal-split resources, per-user compression optimization only.
pub fn fra_solve(
    links: &[UserLink],
    models: &[AccuracyModel],
    budgets: &Budgets,
    grid: &CompressionGrid,
) -> Result<Solution> {
    let u = links.len();
    if u == 0 {
        return Err(Error::Domain("need at least one user".into()));
    }
    budgets.feasible_for(u)?;
    let models = broadcast(models, u)?;
    let (bw, pw) = equal_split(budgets, u);
    let ratios = compression_pass(links, &bw, &pw, &models, grid)?;
    build_solution(Method::Fra, links, bw, pw, ratios, &models, 1, true, Vec::new())
}

/// Baseline: conventional max-sum-rate allocation (deterministic channel
/// surrogate `E|h| = delta * sqrt(2/pi)`), then per-user compression
/// optimization at that allocation.
pub fn msr_solve(
    links: &[UserLink],
    models: &[AccuracyModel],
    budgets: &Budgets,
    grid: &CompressionGrid,
    config: &SolveConfig,
) -> Result<Solution> {
    let u = links.len();
    if u == 0 {
        return Err(Error::Domain("need at least one user".into()));
    }
    budgets.feasible_for(u)?;
    let models = broadcast(models, u)?;

    let (bw, pw, iterations, converged) = maximize_sum_rate(links, budgets, config)?;
    let ratios = compression_pass(links, &bw, &pw, &models, grid)?;
    build_solution(
        Method::Msr,
        links,
        bw,
        pw,
        ratios,
        &models,
        iterations,
        converged,
        Vec::new(),
    )
}

/// Sum rate at a candidate allocation with the folded-normal mean gain.
pub(crate) fn sum_rate(links: &[UserLink], bw: &[f64], pw: &[f64]) -> f64 {
    let coef = (2.0 / std::f64::consts::PI).sqrt();
    links
        .iter()
        .enumerate()
        .map(|(i, l)| {
            let gain = l.delta() * coef;
            bw[i] * (1.0 + gain * pw[i] / (l.noise_density() * bw[i])).log2()
        })
        .sum()
}

/// Projected gradient ascent of the sum rate over the two budget simplices.
/// Returns the allocation, iteration count, and whether the projected step
/// fell below the stationarity threshold.
fn maximize_sum_rate(
    links: &[UserLink],
    budgets: &Budgets,
    config: &SolveConfig,
) -> Result<(Vec<f64>, Vec<f64>, usize, bool)> {
    let u = links.len();
    let coef = (2.0 / std::f64::consts::PI).sqrt();
    let s_b = budgets.b_max_hz / u as f64;
    let s_p = budgets.p_max_w / u as f64;
    let lo_b = budgets.b_min_hz / s_b;
    let lo_p = budgets.p_min_w / s_p;
    let total = u as f64;

    // Scaled variables near unity; rate in bits/s.
    let mut beta = vec![1.0; u];
    let mut pi = vec![1.0; u];

    let rate_of = |beta: &[f64], pi: &[f64]| -> f64 {
        let bw: Vec<f64> = beta.iter().map(|b| b * s_b).collect();
        let pw: Vec<f64> = pi.iter().map(|p| p * s_p).collect();
        sum_rate(links, &bw, &pw)
    };

    // Gradient in scaled variables.
    let grad = |beta: &[f64], pi: &[f64]| -> (Vec<f64>, Vec<f64>) {
        let ln2 = std::f64::consts::LN_2;
        let mut gb = vec![0.0; u];
        let mut gp = vec![0.0; u];
        for i in 0..u {
            let l = &links[i];
            let gain = l.delta() * coef;
            let b = beta[i] * s_b;
            let p = pi[i] * s_p;
            let v = gain * p / (l.noise_density() * b);
            gb[i] = ((1.0 + v).log2() - v / ((1.0 + v) * ln2)) * s_b;
            gp[i] = gain / (l.noise_density() * (1.0 + v) * ln2) * s_p / 1.0;
        }
        (gb, gp)
    };

    let rate_scale = rate_of(&beta, &pi).abs().max(1.0);
    let mut step = 1.0;
    let mut current = rate_of(&beta, &pi);
    let mut converged = false;
    let mut iterations = 0;

    for _ in 0..config.msr_max_iters {
        iterations += 1;
        let (gb, gp) = grad(&beta, &pi);
        // Normalize so a unit step moves scaled variables by order one.
        let gmax = gb
            .iter()
            .chain(gp.iter())
            .fold(0.0f64, |m, v| m.max(v.abs()))
            .max(1e-300);
        let dir_b: Vec<f64> = gb.iter().map(|g| g / gmax).collect();
        let dir_p: Vec<f64> = gp.iter().map(|g| g / gmax).collect();

        // Stationarity probe with a unit step.
        let probe_b = project_simplex(&add(&beta, &dir_b, 1.0), lo_b, total);
        let probe_p = project_simplex(&add(&pi, &dir_p, 1.0), lo_p, total);
        let move_inf = inf_dist(&beta, &probe_b).max(inf_dist(&pi, &probe_p));
        if move_inf < config.msr_stationarity_tol {
            converged = true;
            break;
        }

        let mut accepted = false;
        while step > 1e-14 {
            let cand_b = project_simplex(&add(&beta, &dir_b, step), lo_b, total);
            let cand_p = project_simplex(&add(&pi, &dir_p, step), lo_p, total);
            let cand_rate = rate_of(&cand_b, &cand_p);
            if cand_rate > current + 1e-15 * rate_scale {
                beta = cand_b;
                pi = cand_p;
                current = cand_rate;
                accepted = true;
                step = (step * 2.0).min(10.0);
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            converged = true;
            break;
        }
    }

    let bw: Vec<f64> = beta.iter().map(|b| b * s_b).collect();
    let pw: Vec<f64> = pi.iter().map(|p| p * s_p).collect();
    Ok((bw, pw, iterations, converged))
}

fn add(base: &[f64], dir: &[f64], step: f64) -> Vec<f64> {
    base.iter()
        .zip(dir.iter())
        .map(|(&b, &d)| b + step * d)
        .collect()
}

fn inf_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b.iter())
        .fold(0.0f64, |m, (&x, &y)| m.max((x - y).abs()))
}

/// Euclidean projection onto `{v : v_i >= lo, sum v = total}` by bisection
/// on the shift multiplier. The sum-rate objective is increasing in every
/// coordinate, so the equality face is where its optimum lives.
fn project_simplex(v: &[f64], lo: f64, total: f64) -> Vec<f64> {
    let n = v.len() as f64;
    debug_assert!(total >= n * lo - 1e-9);
    // Find tau such that sum max(lo, v_i - tau) = total.
    let sum_at = |tau: f64| -> f64 { v.iter().map(|&x| (x - tau).max(lo)).sum() };
    let mut lo_tau = v
        .iter()
        .fold(f64::INFINITY, |m, &x| m.min(x))
        .min(lo)
        - total;
    let mut hi_tau = v.iter().fold(f64::NEG_INFINITY, |m, &x| m.max(x)) - lo + total;
    // sum_at is nonincreasing in tau; bracket then bisect.
    for _ in 0..200 {
        let mid = 0.5 * (lo_tau + hi_tau);
        if sum_at(mid) > total {
            lo_tau = mid;
        } else {
            hi_tau = mid;
        }
    }
    let tau = 0.5 * (lo_tau + hi_tau);
    v.iter().map(|&x| (x - tau).max(lo)).collect()
}
