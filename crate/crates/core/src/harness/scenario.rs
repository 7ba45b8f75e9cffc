//! Scenario configuration: defaults, TOML loading, and seeded user
//! generation.

use crate::error::{Error, Result};
use crate::fitting::{default_init, fit_accuracy_model, read_samples, FitConfig};
use crate::models::{AccuracyModel, UserLink};
use crate::resource::Budgets;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::path::{Path, PathBuf};

/// Payload size when reproducing the verbatim headline figure: 24.5 MB
/// expressed in bits. With millisecond deadlines this drives every success
/// probability to zero for all interior ratios; the default scenario uses
/// 24.5 kilobits instead (see the reproduction notes in the README).
pub const PAPER_DATA_BITS: f64 = 24.5e6 * 8.0;

/// Noise power spectral density of -174 dBm/Hz in W/Hz.
pub const DEFAULT_NOISE_W_PER_HZ: f64 = 3.9810717055349695e-21;

/// Per-user channel-spread specification.
#[derive(Debug, Clone, PartialEq)]
pub enum DeltaSpec {
    Constant(f64),
    PerUser(Vec<f64>),
    /// `delta_i = scale * d_i^(-exponent/2)` with `d_i` the distance to the
    /// server in meters (clamped to at least 1 m).
    DistanceRule { scale: f64, exponent: f64 },
}

/// Per-user delay-budget specification.
#[derive(Debug, Clone, PartialEq)]
pub enum DeadlineSpec {
    Constant(f64),
    /// Seeded uniform draw per user.
    Uniform { min_s: f64, max_s: f64 },
    PerUser(Vec<f64>),
}

/// Where the accuracy curve comes from.
#[derive(Debug, Clone, PartialEq)]
pub enum AccuracySource {
    Betas([f64; 4]),
    SampleFile(PathBuf),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScenarioConfig {
    pub users: usize,
    pub area_side_m: f64,
    pub seed: u64,
    pub data_bits: f64,
    pub deadline: DeadlineSpec,
    pub noise_density: f64,
    pub budgets: Budgets,
    pub delta: DeltaSpec,
    pub accuracy: AccuracySource,
    pub n_features: usize,
    /// Swept values for the bandwidth experiment (Hz).
    pub bandwidth_sweep_hz: Vec<f64>,
    /// Swept values for the power experiment (W).
    pub power_sweep_w: Vec<f64>,
}

fn log_spaced(lo: f64, hi: f64, n: usize) -> Vec<f64> {
    let (llo, lhi) = (lo.ln(), hi.ln());
    (0..n)
        .map(|k| (llo + (lhi - llo) * k as f64 / (n - 1) as f64).exp())
        .collect()
}

impl Default for ScenarioConfig {
    fn default() -> Self {
        Self {
            users: 10,
            area_side_m: 50.0,
            seed: 42,
            data_bits: 24_500.0,
            deadline: DeadlineSpec::Uniform {
                min_s: 1e-3,
                max_s: 10e-3,
            },
            noise_density: DEFAULT_NOISE_W_PER_HZ,
            budgets: Budgets::new(0.01e6, 1.0e6, 1e-5, 0.1).expect("defaults are valid"),
            delta: DeltaSpec::DistanceRule {
                scale: 2e-5,
                exponent: 2.0,
            },
            accuracy: AccuracySource::Betas([0.8, -0.5, 0.1, -10.0]),
            n_features: 64,
            bandwidth_sweep_hz: log_spaced(1e6, 30e6, 10),
            power_sweep_w: log_spaced(1e-3, 1.0, 10),
        }
    }
}

impl ScenarioConfig {
    pub fn validate(&self) -> Result<()> {
        if self.users == 0 {
            return Err(Error::InvalidScenario {
                field: "users".into(),
                msg: "need at least one user".into(),
            });
        }
        for (field, v) in [
            ("area_side_m", self.area_side_m),
            ("data_bits", self.data_bits),
            ("noise_density", self.noise_density),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::InvalidScenario {
                    field: field.into(),
                    msg: format!("must be positive and finite, got {v}"),
                });
            }
        }
        match &self.deadline {
            DeadlineSpec::Constant(t) => {
                if !t.is_finite() || *t <= 0.0 {
                    return Err(Error::InvalidScenario {
                        field: "deadline".into(),
                        msg: format!("must be positive, got {t}"),
                    });
                }
            }
            DeadlineSpec::Uniform { min_s, max_s } => {
                if !(min_s.is_finite() && max_s.is_finite() && *min_s > 0.0 && max_s >= min_s) {
                    return Err(Error::InvalidScenario {
                        field: "deadline".into(),
                        msg: format!("bad uniform range [{min_s}, {max_s}]"),
                    });
                }
            }
            DeadlineSpec::PerUser(ts) => {
                if ts.len() != self.users {
                    return Err(Error::InvalidScenario {
                        field: "deadline".into(),
                        msg: format!("{} values for {} users", ts.len(), self.users),
                    });
                }
                if ts.iter().any(|t| !t.is_finite() || *t <= 0.0) {
                    return Err(Error::InvalidScenario {
                        field: "deadline".into(),
                        msg: "all deadlines must be positive".into(),
                    });
                }
            }
        }
        match &self.delta {
            DeltaSpec::Constant(d) => {
                if !d.is_finite() || *d <= 0.0 {
                    return Err(Error::InvalidScenario {
                        field: "delta".into(),
                        msg: format!("must be positive, got {d}"),
                    });
                }
            }
            DeltaSpec::PerUser(ds) => {
                if ds.len() != self.users {
                    return Err(Error::InvalidScenario {
                        field: "delta".into(),
                        msg: format!("{} values for {} users", ds.len(), self.users),
                    });
                }
                if ds.iter().any(|d| !d.is_finite() || *d <= 0.0) {
                    return Err(Error::InvalidScenario {
                        field: "delta".into(),
                        msg: "all spreads must be positive".into(),
                    });
                }
            }
            DeltaSpec::DistanceRule { scale, exponent } => {
                if !scale.is_finite() || *scale <= 0.0 || !exponent.is_finite() || *exponent < 0.0
                {
                    return Err(Error::InvalidScenario {
                        field: "delta".into(),
                        msg: format!("bad distance rule (scale {scale}, exponent {exponent})"),
                    });
                }
            }
        }
        if self.n_features < 2 {
            return Err(Error::InvalidScenario {
                field: "n_features".into(),
                msg: "need at least 2 feature maps".into(),
            });
        }
        for (field, vs) in [
            ("sweep.bandwidth_hz", &self.bandwidth_sweep_hz),
            ("sweep.power_w", &self.power_sweep_w),
        ] {
            if vs.is_empty() {
                return Err(Error::InvalidScenario {
                    field: field.into(),
                    msg: "sweep needs at least one value".into(),
                });
            }
            if vs.windows(2).any(|w| w[1] <= w[0]) {
                return Err(Error::InvalidScenario {
                    field: field.into(),
                    msg: "sweep values must be strictly increasing".into(),
                });
            }
        }
        for &v in &self.bandwidth_sweep_hz {
            if v < self.users as f64 * self.budgets.b_min_hz {
                return Err(Error::InvalidScenario {
                    field: "sweep.bandwidth_hz".into(),
                    msg: format!("total {v} Hz cannot cover the per-user minimums"),
                });
            }
        }
        for &v in &self.power_sweep_w {
            if v < self.users as f64 * self.budgets.p_min_w {
                return Err(Error::InvalidScenario {
                    field: "sweep.power_w".into(),
                    msg: format!("total {v} W cannot cover the per-user minimums"),
                });
            }
        }
        self.budgets.feasible_for(self.users)?;
        Ok(())
    }

    /// Swap the payload size for the verbatim headline value.
    pub fn with_paper_data_size(mut self) -> Self {
        self.data_bits = PAPER_DATA_BITS;
        self
    }
}

// --- TOML mapping -----------------------------------------------------------

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFile {
    scenario: Option<RawScenario>,
    budgets: Option<RawBudgets>,
    delta: Option<RawDelta>,
    deadline: Option<RawDeadline>,
    accuracy: Option<RawAccuracy>,
    sweep: Option<RawSweep>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawScenario {
    users: Option<usize>,
    area_side_m: Option<f64>,
    seed: Option<u64>,
    data_bits: Option<f64>,
    noise_w_per_hz: Option<f64>,
    noise_dbm_per_hz: Option<f64>,
    n_features: Option<usize>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBudgets {
    b_min_hz: Option<f64>,
    b_max_hz: Option<f64>,
    p_min_w: Option<f64>,
    p_max_w: Option<f64>,
    p_min_dbm: Option<f64>,
    p_max_dbm: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDelta {
    kind: Option<String>,
    value: Option<f64>,
    values: Option<Vec<f64>>,
    scale: Option<f64>,
    exponent: Option<f64>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawDeadline {
    constant_s: Option<f64>,
    min_s: Option<f64>,
    max_s: Option<f64>,
    values_s: Option<Vec<f64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawAccuracy {
    betas: Option<[f64; 4]>,
    samples: Option<String>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSweep {
    bandwidth_hz: Option<Vec<f64>>,
    power_w: Option<Vec<f64>>,
}

fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf(dbm / 10.0) * 1e-3
}

/// Load a scenario file. Missing sections and fields fall back to the
/// defaults; an empty file yields the default scenario. Power-like
/// quantities may be given in dBm (`p_min_dbm`, `noise_dbm_per_hz`).
pub fn load_scenario(path: &Path) -> Result<ScenarioConfig> {
    let text = std::fs::read_to_string(path)?;
    let raw: RawFile = toml::from_str(&text)
        .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
    let mut cfg = ScenarioConfig::default();

    if let Some(s) = raw.scenario {
        if let Some(u) = s.users {
            cfg.users = u;
        }
        if let Some(v) = s.area_side_m {
            cfg.area_side_m = v;
        }
        if let Some(v) = s.seed {
            cfg.seed = v;
        }
        if let Some(v) = s.data_bits {
            cfg.data_bits = v;
        }
        match (s.noise_w_per_hz, s.noise_dbm_per_hz) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidScenario {
                    field: "noise".into(),
                    msg: "give noise_w_per_hz or noise_dbm_per_hz, not both".into(),
                })
            }
            (Some(w), None) => cfg.noise_density = w,
            (None, Some(dbm)) => cfg.noise_density = dbm_to_watts(dbm),
            (None, None) => {}
        }
        if let Some(v) = s.n_features {
            cfg.n_features = v;
        }
    }

    if let Some(b) = raw.budgets {
        let p_min = match (b.p_min_w, b.p_min_dbm) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidScenario {
                    field: "budgets.p_min".into(),
                    msg: "give p_min_w or p_min_dbm, not both".into(),
                })
            }
            (Some(w), None) => w,
            (None, Some(dbm)) => dbm_to_watts(dbm),
            (None, None) => cfg.budgets.p_min_w,
        };
        let p_max = match (b.p_max_w, b.p_max_dbm) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidScenario {
                    field: "budgets.p_max".into(),
                    msg: "give p_max_w or p_max_dbm, not both".into(),
                })
            }
            (Some(w), None) => w,
            (None, Some(dbm)) => dbm_to_watts(dbm),
            (None, None) => cfg.budgets.p_max_w,
        };
        cfg.budgets = Budgets::new(
            b.b_min_hz.unwrap_or(cfg.budgets.b_min_hz),
            b.b_max_hz.unwrap_or(cfg.budgets.b_max_hz),
            p_min,
            p_max,
        )?;
    }

    if let Some(d) = raw.delta {
        cfg.delta = match d.kind.as_deref() {
            None => cfg.delta,
            Some("constant") => DeltaSpec::Constant(d.value.ok_or(Error::InvalidScenario {
                field: "delta.value".into(),
                msg: "constant spread needs `value`".into(),
            })?),
            Some("list") => DeltaSpec::PerUser(d.values.ok_or(Error::InvalidScenario {
                field: "delta.values".into(),
                msg: "list spread needs `values`".into(),
            })?),
            Some("distance_rule") => DeltaSpec::DistanceRule {
                scale: d.scale.ok_or(Error::InvalidScenario {
                    field: "delta.scale".into(),
                    msg: "distance rule needs `scale`".into(),
                })?,
                exponent: d.exponent.ok_or(Error::InvalidScenario {
                    field: "delta.exponent".into(),
                    msg: "distance rule needs `exponent`".into(),
                })?,
            },
            Some(other) => {
                return Err(Error::InvalidScenario {
                    field: "delta.kind".into(),
                    msg: format!("unknown kind `{other}`"),
                })
            }
        };
    }

    if let Some(t) = raw.deadline {
        cfg.deadline = match (t.constant_s, t.min_s, t.max_s, t.values_s) {
            (Some(c), None, None, None) => DeadlineSpec::Constant(c),
            (None, Some(lo), Some(hi), None) => DeadlineSpec::Uniform {
                min_s: lo,
                max_s: hi,
            },
            (None, None, None, Some(vs)) => DeadlineSpec::PerUser(vs),
            (None, None, None, None) => cfg.deadline,
            _ => {
                return Err(Error::InvalidScenario {
                    field: "deadline".into(),
                    msg: "give exactly one of constant_s, (min_s, max_s), values_s".into(),
                })
            }
        };
    }

    if let Some(a) = raw.accuracy {
        cfg.accuracy = match (a.betas, a.samples) {
            (Some(_), Some(_)) => {
                return Err(Error::InvalidScenario {
                    field: "accuracy".into(),
                    msg: "give betas or a samples file, not both".into(),
                })
            }
            (Some(b), None) => AccuracySource::Betas(b),
            (None, Some(p)) => {
                let base = path.parent().unwrap_or(Path::new("."));
                AccuracySource::SampleFile(base.join(p))
            }
            (None, None) => cfg.accuracy,
        };
    }

    if let Some(s) = raw.sweep {
        if let Some(v) = s.bandwidth_hz {
            cfg.bandwidth_sweep_hz = v;
        }
        if let Some(v) = s.power_w {
            cfg.power_sweep_w = v;
        }
    }

    cfg.validate()?;
    Ok(cfg)
}

/// Seeded user generation: uniform placement in the square (server at the
/// center), then per-user deadlines, then spreads. Links start at the
/// equal-split allocation. Deterministic given the seed.
pub fn generate_users(cfg: &ScenarioConfig) -> Result<Vec<UserLink>> {
    cfg.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let half = cfg.area_side_m / 2.0;
    let distances: Vec<f64> = (0..cfg.users)
        .map(|_| {
            let x: f64 = rng.random_range(-half..half);
            let y: f64 = rng.random_range(-half..half);
            // Near-field exclusion: at least 1 m from the server.
            x.hypot(y).max(1.0)
        })
        .collect();

    let deadlines: Vec<f64> = match &cfg.deadline {
        DeadlineSpec::Constant(t) => vec![*t; cfg.users],
        DeadlineSpec::Uniform { min_s, max_s } => (0..cfg.users)
            .map(|_| rng.random_range(*min_s..=*max_s))
            .collect(),
        DeadlineSpec::PerUser(ts) => ts.clone(),
    };

    let deltas: Vec<f64> = match &cfg.delta {
        DeltaSpec::Constant(d) => vec![*d; cfg.users],
        DeltaSpec::PerUser(ds) => ds.clone(),
        DeltaSpec::DistanceRule { scale, exponent } => distances
            .iter()
            .map(|d| scale * d.powf(-exponent / 2.0))
            .collect(),
    };

    let b0 = cfg.budgets.b_max_hz / cfg.users as f64;
    let p0 = cfg.budgets.p_max_w / cfg.users as f64;
    (0..cfg.users)
        .map(|i| {
            UserLink::new(
                cfg.data_bits,
                deadlines[i],
                deltas[i],
                cfg.noise_density,
                b0,
                p0,
            )
        })
        .collect()
}

/// Accuracy model per the scenario source: a literal parameter vector or a
/// gradient-descent fit of a sample file.
pub fn resolve_accuracy_model(cfg: &ScenarioConfig) -> Result<AccuracyModel> {
    match &cfg.accuracy {
        AccuracySource::Betas(b) => AccuracyModel::new(*b),
        AccuracySource::SampleFile(path) => {
            let samples = read_samples(path)?;
            let init = default_init(&samples)?;
            let fit_cfg = FitConfig {
                multi_start: Some(crate::fitting::MultiStart::default()),
                ..FitConfig::default()
            };
            let report = fit_accuracy_model(&samples, init, &fit_cfg)?;
            report.model()
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn empty_file_yields_defaults() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("empty.toml");
        std::fs::write(&path, "").unwrap();
        let cfg = load_scenario(&path).unwrap();
        assert_eq!(cfg, ScenarioConfig::default());
        assert_eq!(cfg.users, 10);
        assert_relative_eq!(cfg.noise_density, 3.9810717055349695e-21, max_relative = 1e-12);
        assert_relative_eq!(cfg.budgets.b_min_hz, 1e4);
        assert_relative_eq!(cfg.budgets.p_min_w, 1e-5);
    }

    #[test]
    fn zero_users_is_rejected_with_field_name() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("bad.toml");
        std::fs::write(&path, "[scenario]\nusers = 0\n").unwrap();
        match load_scenario(&path) {
            Err(Error::InvalidScenario { field, .. }) => assert_eq!(field, "users"),
            other => panic!("expected invalid-scenario error, got {other:?}"),
        }
    }

    #[test]
    fn dbm_inputs_are_converted() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("dbm.toml");
        std::fs::write(
            &path,
            "[scenario]\nnoise_dbm_per_hz = -174.0\n[budgets]\np_min_dbm = -20.0\n",
        )
        .unwrap();
        let cfg = load_scenario(&path).unwrap();
        // -174 dBm/Hz -> 10^(-17.4) mW/Hz -> 10^(-20.4) W/Hz.
        assert_relative_eq!(cfg.noise_density, 10f64.powf(-20.4), max_relative = 1e-12);
        // Inverse conversion closes the loop.
        let back = 10.0 * (cfg.noise_density * 1e3).log10();
        assert_relative_eq!(back, -174.0, max_relative = 1e-12);
        assert_relative_eq!(cfg.budgets.p_min_w, 1e-5, max_relative = 1e-12);
    }

    #[test]
    fn parse_errors_carry_location() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("syntax.toml");
        std::fs::write(&path, "[scenario\nusers = 3\n").unwrap();
        match load_scenario(&path) {
            Err(Error::Config(msg)) => assert!(msg.contains("line"), "no location in: {msg}"),
            other => panic!("expected config error, got {other:?}"),
        }
    }

    #[test]
    fn generation_is_deterministic() {
        let cfg = ScenarioConfig::default();
        let a = generate_users(&cfg).unwrap();
        let b = generate_users(&cfg).unwrap();
        assert_eq!(a, b);
        let different = ScenarioConfig {
            seed: 43,
            ..ScenarioConfig::default()
        };
        assert_ne!(a, generate_users(&different).unwrap());
    }

    #[test]
    fn constant_delta_ignores_placement() {
        let cfg = ScenarioConfig {
            delta: DeltaSpec::Constant(3e-6),
            ..ScenarioConfig::default()
        };
        for link in generate_users(&cfg).unwrap() {
            assert_eq!(link.delta(), 3e-6);
        }
    }

    #[test]
    fn degenerate_distance_exponent_is_constant() {
        let cfg = ScenarioConfig {
            delta: DeltaSpec::DistanceRule {
                scale: 7e-7,
                exponent: 0.0,
            },
            ..ScenarioConfig::default()
        };
        for link in generate_users(&cfg).unwrap() {
            assert_relative_eq!(link.delta(), 7e-7, max_relative = 1e-15);
        }
    }

    #[test]
    fn accuracy_model_from_sample_file() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("curve.txt");
        let betas = [0.8, -0.5, 0.1, -10.0];
        let mut text = String::from("# o acc\n");
        for k in 0..=10 {
            let o = k as f64 / 10.0;
            let acc = betas[0] * (betas[1] * o).exp() + betas[2] * (betas[3] * o).exp();
            text.push_str(&format!("{o} {acc}\n"));
        }
        std::fs::write(&path, text).unwrap();
        let cfg = ScenarioConfig {
            accuracy: AccuracySource::SampleFile(path),
            ..ScenarioConfig::default()
        };
        let model = resolve_accuracy_model(&cfg).unwrap();
        let truth = AccuracyModel::new(betas).unwrap();
        for k in 0..=20 {
            let o = k as f64 / 20.0;
            assert!(
                (model.evaluate(o).unwrap() - truth.evaluate(o).unwrap()).abs() < 5e-3,
                "fitted curve deviates at o = {o}"
            );
        }
    }
}
