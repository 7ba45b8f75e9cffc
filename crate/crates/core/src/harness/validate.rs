//! Monte-Carlo validation of the closed-form success probability on a grid
//! of (ratio, bandwidth, power) points.

use super::scenario::{generate_users, ScenarioConfig};
use super::sweep::derive_seed;
use crate::error::{Error, Result};
use crate::models::{success_probability, success_probability_mc, CompressionRatio, UserLink};

/// One grid comparison.
#[derive(Debug, Clone)]
pub struct ValidationRow {
    pub label: String,
    pub ratio: f64,
    pub bandwidth_hz: f64,
    pub power_w: f64,
    pub delta: f64,
    pub closed_form: f64,
    pub monte_carlo: f64,
    /// Binomial standard error at the closed-form probability.
    pub sigma: f64,
    pub gap: f64,
    pub pass: bool,
}

#[derive(Debug, Clone)]
pub struct ValidationReport {
    pub samples: u64,
    pub rows: Vec<ValidationRow>,
    pub max_gap: f64,
    pub all_pass: bool,
}

fn compare(
    label: String,
    link: &UserLink,
    o: f64,
    samples: u64,
    seed: u64,
) -> Result<ValidationRow> {
    let ratio = CompressionRatio::new(o)?;
    let closed = success_probability(link, ratio);
    let mc = success_probability_mc(link, ratio, samples, seed)?;
    let sigma = (closed * (1.0 - closed) / samples as f64).sqrt();
    let gap = (closed - mc).abs();
    // Degenerate probabilities have zero binomial spread; allow float noise.
    let pass = gap <= (4.0 * sigma).max(1e-9);
    Ok(ValidationRow {
        label,
        ratio: o,
        bandwidth_hz: link.bandwidth_hz(),
        power_w: link.power_w(),
        delta: link.delta(),
        closed_form: closed,
        monte_carlo: mc,
        sigma,
        gap,
        pass,
    })
}

/// Compare the closed form against the Monte-Carlo oracle on canonical rows
/// plus a grid over the scenario's own users. Deterministic given the seed.
pub fn validate_lemma1(
    cfg: &ScenarioConfig,
    samples: u64,
    seed: u64,
) -> Result<ValidationReport> {
    if samples < 10_000 {
        return Err(Error::Domain(format!(
            "validation needs at least 1e4 samples, got {samples}"
        )));
    }
    let mut rows = Vec::new();
    let mut row_idx = 0u64;
    let mut push = |label: String, link: &UserLink, o: f64, rows: &mut Vec<ValidationRow>| {
        let seed_i = derive_seed(seed, row_idx);
        row_idx += 1;
        compare(label, link, o, samples, seed_i).map(|r| rows.push(r))
    };

    // Canonical unit link: spectral load 1, SNR scale 1, unit spread.
    let unit = UserLink::new(1e6, 1.0, 1.0, 1e-6, 1e6, 1.0)?;
    push("unit/zero-payload".into(), &unit, 1.0 - 1e-12, &mut rows)?;
    push("unit/half".into(), &unit, 0.5, &mut rows)?;

    let links = generate_users(cfg)?;
    for (i, link) in links.iter().take(3).enumerate() {
        for o in [0.25, 0.5, 0.75] {
            push(format!("user{i}/o={o}"), link, o, &mut rows)?;
        }
    }

    let max_gap = rows.iter().map(|r| r.gap).fold(0.0f64, f64::max);
    let all_pass = rows.iter().all(|r| r.pass);
    Ok(ValidationReport {
        samples,
        rows,
        max_gap,
        all_pass,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_payload_row_is_exact() {
        let cfg = ScenarioConfig {
            users: 1,
            ..ScenarioConfig::default()
        };
        let report = validate_lemma1(&cfg, 10_000, 7).unwrap();
        let row = &report.rows[0];
        assert!((row.closed_form - 1.0).abs() < 1e-9);
        assert!((row.monte_carlo - 1.0).abs() < 1e-9);
        assert!(row.pass);
    }

    #[test]
    fn canonical_row_passes_at_scale() {
        let cfg = ScenarioConfig {
            users: 2,
            ..ScenarioConfig::default()
        };
        let report = validate_lemma1(&cfg, 200_000, 11).unwrap();
        assert!(report.all_pass, "rows: {:#?}", report.rows);
        // The canonical half-ratio row sits near 2Q(2^0.5 - 1) ~ 0.6787.
        let row = &report.rows[1];
        assert!((row.closed_form - 0.6787177101893781).abs() < 1e-12);
        assert!(row.gap <= 4.0 * row.sigma);
    }

    #[test]
    fn report_is_deterministic() {
        let cfg = ScenarioConfig::default();
        let a = validate_lemma1(&cfg, 10_000, 3).unwrap();
        let b = validate_lemma1(&cfg, 10_000, 3).unwrap();
        for (ra, rb) in a.rows.iter().zip(b.rows.iter()) {
            assert_eq!(ra.monte_carlo, rb.monte_carlo);
        }
        assert!(validate_lemma1(&cfg, 9_999, 3).is_err());
    }
}
