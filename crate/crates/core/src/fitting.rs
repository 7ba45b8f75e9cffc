//! Gradient-descent fitting of the double-exponential accuracy curve to
//! measured (compression ratio, accuracy) point sets.

use crate::error::{Error, Result};
use crate::models::{eval_exponential, AccuracyModel, ACCURACY_GRID_STEP};
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::io::BufRead;
use std::path::Path;

/// One measured point: task accuracy at a compression ratio.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AccuracySample {
    o: f64,
    acc: f64,
}

impl AccuracySample {
    pub fn new(o: f64, acc: f64) -> Result<Self> {
        if !o.is_finite() || !(0.0..=1.0).contains(&o) {
            return Err(Error::Domain(format!("sample ratio {o} outside [0, 1]")));
        }
        if !acc.is_finite() || !(0.0..=1.0).contains(&acc) {
            return Err(Error::Domain(format!("sample accuracy {acc} outside [0, 1]")));
        }
        Ok(Self { o, acc })
    }

    pub fn ratio(&self) -> f64 {
        self.o
    }
    pub fn accuracy(&self) -> f64 {
        self.acc
    }
}

/// Backtracking line-search parameters for the descent loop.
#[derive(Debug, Clone, Copy)]
pub struct StepRule {
    pub initial: f64,
    pub shrink: f64,
    pub grow: f64,
    pub armijo: f64,
    pub min_step: f64,
    pub max_step: f64,
}

impl Default for StepRule {
    fn default() -> Self {
        Self {
            initial: 1.0,
            shrink: 0.5,
            grow: 2.0,
            armijo: 1e-4,
            min_step: 1e-18,
            max_step: 1e8,
        }
    }
}

/// Optional multi-start: perturb the initial point and keep the best fit.
/// Ties break toward the lower restart index.
#[derive(Debug, Clone, Copy)]
pub struct MultiStart {
    pub restarts: usize,
    pub spread: f64,
    pub seed: u64,
}

impl Default for MultiStart {
    fn default() -> Self {
        Self {
            restarts: 8,
            spread: 0.5,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct FitConfig {
    pub max_iters: usize,
    /// Stop when the gradient infinity norm falls below this.
    pub grad_tol: f64,
    /// Stop when the relative objective decrease falls below this.
    pub obj_rel_tol: f64,
    pub step: StepRule,
    pub multi_start: Option<MultiStart>,
}

impl Default for FitConfig {
    fn default() -> Self {
        Self {
            max_iters: 5_000_000,
            grad_tol: 1e-8,
            obj_rel_tol: 1e-10,
            step: StepRule::default(),
            multi_start: None,
        }
    }
}

/// Outcome of a fit. `converged` means the final gradient infinity norm is
/// below tolerance. `range_ok` records whether the fitted curve stays in
/// [0, 1] on the validation grid; a violating fit is reported as-is rather
/// than clipped.
#[derive(Debug, Clone)]
pub struct FitReport {
    pub betas: [f64; 4],
    pub rmse: f64,
    pub iterations: usize,
    pub converged: bool,
    pub range_ok: bool,
    /// Mean-squared residual at the initial point and after every accepted
    /// step; nonincreasing by construction.
    pub objective_history: Vec<f64>,
}

impl FitReport {
    /// Validated model, if the fitted curve passes the range check.
    pub fn model(&self) -> Result<AccuracyModel> {
        AccuracyModel::new(self.betas)
    }
}

fn check_samples(samples: &[AccuracySample]) -> Result<()> {
    if samples.is_empty() {
        return Err(Error::EmptySamples);
    }
    Ok(())
}

fn distinct_ratios(samples: &[AccuracySample]) -> usize {
    let mut seen: Vec<f64> = Vec::new();
    for s in samples {
        if !seen.iter().any(|&o| (o - s.o).abs() < 1e-12) {
            seen.push(s.o);
        }
    }
    seen.len()
}

/// Mean squared residual of the curve against the samples.
fn objective(betas: &[f64; 4], samples: &[AccuracySample]) -> f64 {
    let mut sum = 0.0;
    for s in samples {
        let r = eval_exponential(betas, s.o) - s.acc;
        sum += r * r;
    }
    sum / samples.len() as f64
}

/// Root-mean-square residual of a validated model against the samples.
pub fn rmse(model: &AccuracyModel, samples: &[AccuracySample]) -> Result<f64> {
    check_samples(samples)?;
    Ok(objective(&model.betas(), samples).sqrt())
}

/// Analytic gradient of the mean squared residual with respect to
/// (b1, b2, b3, b4).
pub fn fit_gradient(betas: &[f64; 4], samples: &[AccuracySample]) -> Result<[f64; 4]> {
    check_samples(samples)?;
    let mut g = [0.0; 4];
    for s in samples {
        let e1 = (betas[1] * s.o).exp();
        let e2 = (betas[3] * s.o).exp();
        let r = betas[0] * e1 + betas[2] * e2 - s.acc;
        g[0] += r * e1;
        g[1] += r * betas[0] * s.o * e1;
        g[2] += r * e2;
        g[3] += r * betas[2] * s.o * e2;
    }
    let scale = 2.0 / samples.len() as f64;
    for gi in &mut g {
        *gi *= scale;
    }
    Ok(g)
}

/// Default initial parameters: one fast- and one slow-decaying term
/// bracketing the observed accuracy range.
pub fn default_init(samples: &[AccuracySample]) -> Result<[f64; 4]> {
    check_samples(samples)?;
    let max = samples.iter().map(|s| s.acc).fold(f64::MIN, f64::max);
    let min = samples.iter().map(|s| s.acc).fold(f64::MAX, f64::min);
    Ok([max - min, -1.0, min, -0.01])
}

fn grad_inf_norm(g: &[f64; 4]) -> f64 {
    g.iter().fold(0.0f64, |m, v| m.max(v.abs()))
}

fn descend(
    samples: &[AccuracySample],
    init: [f64; 4],
    config: &FitConfig,
) -> ([f64; 4], f64, usize, bool, Vec<f64>) {
    let mut betas = init;
    let mut obj = objective(&betas, samples);
    let mut history = vec![obj];
    let mut step = config.step.initial;
    let mut converged = false;
    let mut iterations = 0;
    // Per-iteration progress is noisy under backtracking, so the
    // objective-change stop requires a streak of negligible drops.
    let mut plateau = 0usize;

    for iter in 0..config.max_iters {
        iterations = iter;
        let g = fit_gradient(&betas, samples).expect("samples checked nonempty");
        let gnorm = grad_inf_norm(&g);
        if gnorm < config.grad_tol {
            converged = true;
            break;
        }
        let g_sq: f64 = g.iter().map(|v| v * v).sum();

        // Backtracking line search along the negative gradient, starting no
        // lower than the configured initial step so a collapsed step from a
        // previous iteration cannot wedge the search.
        step = step.max(config.step.initial);
        let mut accepted = None;
        while step >= config.step.min_step {
            let cand = [
                betas[0] - step * g[0],
                betas[1] - step * g[1],
                betas[2] - step * g[2],
                betas[3] - step * g[3],
            ];
            let cand_obj = objective(&cand, samples);
            if cand_obj.is_finite() && cand_obj <= obj - config.step.armijo * step * g_sq {
                accepted = Some((cand, cand_obj));
                break;
            }
            step *= config.step.shrink;
        }

        let Some((cand, cand_obj)) = accepted else {
            // Objective cannot be decreased even at the minimum step:
            // report non-convergence at the best point reached.
            break;
        };
        let rel_drop = (obj - cand_obj) / obj.max(f64::MIN_POSITIVE);
        betas = cand;
        obj = cand_obj;
        history.push(obj);
        iterations = iter + 1;
        step = (step * config.step.grow).min(config.step.max_step);
        if rel_drop < config.obj_rel_tol {
            plateau += 1;
            if plateau >= 5 {
                break;
            }
        } else {
            plateau = 0;
        }
    }

    if !converged {
        let g = fit_gradient(&betas, samples).expect("samples checked nonempty");
        converged = grad_inf_norm(&g) < config.grad_tol;
    }
    (betas, obj, iterations, converged, history)
}

fn range_check(betas: &[f64; 4]) -> bool {
    let n = (1.0 / ACCURACY_GRID_STEP).round() as usize;
    (0..=n).all(|k| {
        let v = eval_exponential(betas, k as f64 * ACCURACY_GRID_STEP);
        v.is_finite() && (0.0..=1.0).contains(&v)
    })
}

/// Fit the four-parameter curve by gradient descent with backtracking line
/// search, minimizing the mean squared residual. Deterministic given `init`
/// and `config`.
pub fn fit_accuracy_model(
    samples: &[AccuracySample],
    init: [f64; 4],
    config: &FitConfig,
) -> Result<FitReport> {
    check_samples(samples)?;
    let distinct = distinct_ratios(samples);
    if samples.len() < 4 || distinct < 4 {
        return Err(Error::UnderdeterminedFit {
            distinct,
            total: samples.len(),
        });
    }

    let start = match config.multi_start {
        None => init,
        Some(ms) => {
            // Explore every perturbed start on a fraction of the budget and
            // keep the lowest objective (ties toward the lower restart
            // index); only the winner is polished to full convergence below.
            let mut rng = ChaCha8Rng::seed_from_u64(ms.seed);
            let mut starts = vec![init];
            for _ in 1..ms.restarts.max(1) {
                let mut p = init;
                for v in &mut p {
                    let z: f64 = rng.sample(StandardNormal);
                    *v += ms.spread * v.abs().max(0.1) * z;
                }
                starts.push(p);
            }
            let explore = FitConfig {
                max_iters: (config.max_iters / ms.restarts.max(1)).max(10_000),
                multi_start: None,
                ..*config
            };
            let mut best: Option<(f64, [f64; 4])> = None;
            for s in starts {
                let (betas, obj, _, _, _) = descend(samples, s, &explore);
                if best.map(|(b, _)| obj < b).unwrap_or(true) {
                    best = Some((obj, betas));
                }
            }
            best.expect("at least one start").1
        }
    };

    let (betas, obj, iterations, converged, history) = descend(samples, start, config);
    Ok(FitReport {
        betas,
        rmse: obj.sqrt(),
        iterations,
        converged,
        range_ok: range_check(&betas),
        objective_history: history,
    })
}

/// Read (ratio, accuracy) pairs from a two-column delimited text file.
/// Columns split on whitespace or commas; `#` starts a comment.
pub fn read_samples(path: &Path) -> Result<Vec<AccuracySample>> {
    let file = std::fs::File::open(path)?;
    let reader = std::io::BufReader::new(file);
    let display = path.display().to_string();
    let mut samples = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let fields: Vec<&str> = content
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|f| !f.is_empty())
            .collect();
        if fields.len() != 2 {
            return Err(Error::Parse {
                path: display,
                line: idx + 1,
                msg: format!("expected 2 columns, found {}", fields.len()),
            });
        }
        let parse = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::Parse {
                path: display.clone(),
                line: idx + 1,
                msg: format!("bad number `{s}`: {e}"),
            })
        };
        let sample = AccuracySample::new(parse(fields[0])?, parse(fields[1])?).map_err(|e| {
            Error::Parse {
                path: display.clone(),
                line: idx + 1,
                msg: e.to_string(),
            }
        })?;
        samples.push(sample);
    }
    Ok(samples)
}
