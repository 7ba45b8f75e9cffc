//! Sweep execution: run every method at every swept budget value and record
//! the exact average effective accuracy (the quantity the reference figures
//! plot), the surrogate, and the full allocation.

use super::scenario::{generate_users, resolve_accuracy_model, ScenarioConfig};
use crate::compression::CompressionGrid;
use crate::crra::{crra_solve, fcr_solve, fra_solve, msr_solve, Method, Solution, SolveConfig};
use crate::error::{Error, Result};
use crate::resource::Budgets;
use std::time::Instant;

/// Which budget axis a sweep varies.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SweepParam {
    Bandwidth,
    Power,
}

impl SweepParam {
    pub fn label(&self) -> &'static str {
        match self {
            SweepParam::Bandwidth => "bandwidth",
            SweepParam::Power => "power",
        }
    }

    pub fn from_label(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "bandwidth" => Ok(SweepParam::Bandwidth),
            "power" => Ok(SweepParam::Power),
            other => Err(Error::Config(format!("unknown sweep parameter `{other}`"))),
        }
    }
}

impl std::fmt::Display for SweepParam {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

/// One sweep request: the axis, its values, the methods to run, and the
/// fixed ratio used by the FCR baseline.
#[derive(Debug, Clone)]
pub struct SweepSpec {
    pub param: SweepParam,
    pub values: Vec<f64>,
    pub methods: Vec<Method>,
    pub fixed_o: f64,
}

impl SweepSpec {
    pub fn new(param: SweepParam, values: Vec<f64>, methods: Vec<Method>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Config("sweep needs at least one value".into()));
        }
        if values.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::Config(
                "sweep values must be strictly increasing".into(),
            ));
        }
        if methods.is_empty() {
            return Err(Error::Config("sweep needs at least one method".into()));
        }
        Ok(Self {
            param,
            values,
            methods,
            fixed_o: 0.5,
        })
    }

    pub fn with_fixed_o(mut self, fixed_o: f64) -> Self {
        self.fixed_o = fixed_o;
        self
    }
}

/// One (value, method) record.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub param: SweepParam,
    pub value: f64,
    pub method: Method,
    /// Exact average effective accuracy (success probability times accuracy,
    /// averaged over users).
    pub avg_effective_accuracy: f64,
    /// Average surrogate objective.
    pub avg_surrogate: f64,
    pub iterations: usize,
    pub converged: bool,
    pub wall_ms: f64,
    pub bandwidth_hz: Vec<f64>,
    pub power_w: Vec<f64>,
    pub ratios: Vec<f64>,
    /// Set when the solver failed at this point; metrics are NaN then.
    pub error: Option<String>,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub users: usize,
    pub rows: Vec<SweepRow>,
}

/// Stable per-point seed derivation (splitmix64 over the pair), so parallel
/// or reordered execution cannot change stochastic sub-runs.
pub fn derive_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Run the sweep. Rows come back ordered by (value, method) position. A
/// failing point is recorded in its row and the sweep continues.
pub fn run_sweep(cfg: &ScenarioConfig, spec: &SweepSpec) -> Result<SweepResult> {
    cfg.validate()?;
    let links = generate_users(cfg)?;
    let model = [resolve_accuracy_model(cfg)?];
    let grid = CompressionGrid::new(cfg.n_features)?;
    let solve_cfg = SolveConfig::default();
    let u = cfg.users;

    let mut rows = Vec::with_capacity(spec.values.len() * spec.methods.len());
    for &value in &spec.values {
        let budgets = match spec.param {
            SweepParam::Bandwidth => Budgets::new(
                cfg.budgets.b_min_hz,
                value,
                cfg.budgets.p_min_w,
                cfg.budgets.p_max_w,
            )?,
            SweepParam::Power => Budgets::new(
                cfg.budgets.b_min_hz,
                cfg.budgets.b_max_hz,
                cfg.budgets.p_min_w,
                value,
            )?,
        };
        for &method in &spec.methods {
            let started = Instant::now();
            let outcome: Result<Solution> = match method {
                Method::Crra => crra_solve(&links, &model, &budgets, &grid, &solve_cfg),
                Method::Fcr => fcr_solve(&links, &model, &budgets, spec.fixed_o, &solve_cfg),
                Method::Fra => fra_solve(&links, &model, &budgets, &grid),
                Method::Msr => msr_solve(&links, &model, &budgets, &grid, &solve_cfg),
            };
            let wall_ms = started.elapsed().as_secs_f64() * 1e3;
            let row = match outcome {
                Ok(sol) => SweepRow {
                    param: spec.param,
                    value,
                    method,
                    avg_effective_accuracy: sol.exact_objective / u as f64,
                    avg_surrogate: sol.surrogate_objective / u as f64,
                    iterations: sol.iterations,
                    converged: sol.converged,
                    wall_ms,
                    bandwidth_hz: sol.allocation.bandwidth_hz,
                    power_w: sol.allocation.power_w,
                    ratios: sol.ratios,
                    error: None,
                },
                Err(e) => SweepRow {
                    param: spec.param,
                    value,
                    method,
                    avg_effective_accuracy: f64::NAN,
                    avg_surrogate: f64::NAN,
                    iterations: 0,
                    converged: false,
                    wall_ms,
                    bandwidth_hz: vec![f64::NAN; u],
                    power_w: vec![f64::NAN; u],
                    ratios: vec![f64::NAN; u],
                    error: Some(e.to_string()),
                },
            };
            rows.push(row);
        }
    }
    Ok(SweepResult { users: u, rows })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn tiny_scenario() -> ScenarioConfig {
        ScenarioConfig {
            users: 2,
            ..ScenarioConfig::default()
        }
    }

    #[test]
    fn seeds_are_stable_and_spread() {
        assert_eq!(derive_seed(42, 0), derive_seed(42, 0));
        assert_ne!(derive_seed(42, 0), derive_seed(42, 1));
        assert_ne!(derive_seed(42, 0), derive_seed(43, 0));
    }

    #[test]
    fn single_point_matches_direct_solve() {
        let cfg = tiny_scenario();
        let spec = SweepSpec::new(
            SweepParam::Bandwidth,
            vec![cfg.budgets.b_max_hz],
            vec![Method::Crra],
        )
        .unwrap();
        let result = run_sweep(&cfg, &spec).unwrap();
        assert_eq!(result.rows.len(), 1);

        let links = generate_users(&cfg).unwrap();
        let model = [resolve_accuracy_model(&cfg).unwrap()];
        let grid = CompressionGrid::new(cfg.n_features).unwrap();
        let direct = crra_solve(
            &links,
            &model,
            &cfg.budgets,
            &grid,
            &SolveConfig::default(),
        )
        .unwrap();
        let row = &result.rows[0];
        assert_relative_eq!(
            row.avg_effective_accuracy,
            direct.exact_objective / 2.0,
            max_relative = 1e-12
        );
        assert_eq!(row.bandwidth_hz, direct.allocation.bandwidth_hz);
        assert!(row.error.is_none());
    }

    #[test]
    fn failed_points_are_recorded_not_fatal() {
        // A sweep value below the per-user minimums cannot be built into a
        // budget; SweepSpec validation happens upstream, so emulate a solver
        // failure by sweeping power down to the exact minimum sum, which is
        // feasible, then check rows exist for every (value, method) pair.
        let cfg = tiny_scenario();
        let spec = SweepSpec::new(
            SweepParam::Power,
            vec![2.0 * cfg.budgets.p_min_w, 1e-2],
            vec![Method::Crra, Method::Fra],
        )
        .unwrap();
        let result = run_sweep(&cfg, &spec).unwrap();
        assert_eq!(result.rows.len(), 4);
        for row in &result.rows {
            assert!(
                row.error.is_none(),
                "unexpected failure at {} {}: {:?}",
                row.value,
                row.method,
                row.error
            );
        }
    }

    #[test]
    fn rows_are_ordered_by_value_then_method() {
        let cfg = tiny_scenario();
        let spec = SweepSpec::new(
            SweepParam::Bandwidth,
            vec![1e6, 2e6],
            vec![Method::Crra, Method::Msr],
        )
        .unwrap();
        let result = run_sweep(&cfg, &spec).unwrap();
        let tags: Vec<(f64, Method)> = result.rows.iter().map(|r| (r.value, r.method)).collect();
        assert_eq!(
            tags,
            vec![
                (1e6, Method::Crra),
                (1e6, Method::Msr),
                (2e6, Method::Crra),
                (2e6, Method::Msr)
            ]
        );
    }
}
