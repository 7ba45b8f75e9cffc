//! Result emission: the sweep CSV (exact header layout, lossless float
//! round-trip) and a self-contained SVG plot with one curve per method.

use super::sweep::{SweepParam, SweepResult, SweepRow};
use crate::crra::Method;
use crate::error::{Error, Result};
use std::fmt::Write as _;
use std::path::Path;

/// The serialized view of a sweep row: exactly the columns of the CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvRow {
    pub swept_param: String,
    pub value: f64,
    pub method: String,
    pub avg_effective_accuracy: f64,
    pub surrogate: f64,
    pub iterations: usize,
    pub wall_ms: f64,
    pub bandwidth_hz: Vec<f64>,
    pub power_w: Vec<f64>,
    pub ratios: Vec<f64>,
}

/// Project the in-memory result onto its CSV columns.
pub fn csv_rows(result: &SweepResult) -> Vec<CsvRow> {
    result
        .rows
        .iter()
        .map(|r| CsvRow {
            swept_param: r.param.label().to_string(),
            value: r.value,
            method: r.method.label().to_string(),
            avg_effective_accuracy: r.avg_effective_accuracy,
            surrogate: r.avg_surrogate,
            iterations: r.iterations,
            wall_ms: r.wall_ms,
            bandwidth_hz: r.bandwidth_hz.clone(),
            power_w: r.power_w.clone(),
            ratios: r.ratios.clone(),
        })
        .collect()
}

fn header(users: usize) -> String {
    let mut h = String::from(
        "swept_param,value,method,avg_effective_accuracy,surrogate,iterations,wall_ms",
    );
    for i in 1..=users {
        write!(h, ",B_{i}").unwrap();
    }
    for i in 1..=users {
        write!(h, ",P_{i}").unwrap();
    }
    for i in 1..=users {
        write!(h, ",o_{i}").unwrap();
    }
    h
}

/// Write the sweep CSV. Floats print in shortest round-trip form, so parsing
/// the file recovers them bit-exactly. Refuses to create a file for an empty
/// result.
pub fn emit_csv(result: &SweepResult, path: &Path) -> Result<()> {
    if result.rows.is_empty() {
        return Err(Error::EmptyResult);
    }
    let mut text = header(result.users);
    text.push('\n');
    for row in csv_rows(result) {
        write!(
            text,
            "{},{},{},{},{},{},{}",
            row.swept_param,
            row.value,
            row.method,
            row.avg_effective_accuracy,
            row.surrogate,
            row.iterations,
            row.wall_ms
        )
        .unwrap();
        for v in row
            .bandwidth_hz
            .iter()
            .chain(row.power_w.iter())
            .chain(row.ratios.iter())
        {
            write!(text, ",{v}").unwrap();
        }
        text.push('\n');
    }
    std::fs::write(path, text)?;
    Ok(())
}

/// Read a sweep CSV back into its serialized rows.
pub fn parse_csv(path: &Path) -> Result<Vec<CsvRow>> {
    let text = std::fs::read_to_string(path)?;
    let display = path.display().to_string();
    let mut lines = text.lines().enumerate();
    let (_, head) = lines.next().ok_or_else(|| Error::Parse {
        path: display.clone(),
        line: 1,
        msg: "missing header".into(),
    })?;
    let cols: Vec<&str> = head.split(',').collect();
    if cols.len() < 7 || (cols.len() - 7) % 3 != 0 {
        return Err(Error::Parse {
            path: display.clone(),
            line: 1,
            msg: format!("unexpected column count {}", cols.len()),
        });
    }
    let users = (cols.len() - 7) / 3;

    let mut rows = Vec::new();
    for (idx, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != cols.len() {
            return Err(Error::Parse {
                path: display.clone(),
                line: idx + 1,
                msg: format!("expected {} fields, found {}", cols.len(), fields.len()),
            });
        }
        let f = |s: &str| -> Result<f64> {
            s.parse::<f64>().map_err(|e| Error::Parse {
                path: display.clone(),
                line: idx + 1,
                msg: format!("bad number `{s}`: {e}"),
            })
        };
        let take = |lo: usize| -> Result<Vec<f64>> {
            (lo..lo + users).map(|k| f(fields[k])).collect()
        };
        rows.push(CsvRow {
            swept_param: fields[0].to_string(),
            value: f(fields[1])?,
            method: fields[2].to_string(),
            avg_effective_accuracy: f(fields[3])?,
            surrogate: f(fields[4])?,
            iterations: fields[5].parse().map_err(|e| Error::Parse {
                path: display.clone(),
                line: idx + 1,
                msg: format!("bad count `{}`: {e}", fields[5]),
            })?,
            wall_ms: f(fields[6])?,
            bandwidth_hz: take(7)?,
            power_w: take(7 + users)?,
            ratios: take(7 + 2 * users)?,
        });
    }
    Ok(rows)
}

const PLOT_W: f64 = 760.0;
const PLOT_H: f64 = 520.0;
const MARGIN_L: f64 = 70.0;
const MARGIN_R: f64 = 130.0;
const MARGIN_T: f64 = 40.0;
const MARGIN_B: f64 = 60.0;

fn method_color(method: Method) -> &'static str {
    match method {
        Method::Crra => "#d62728",
        Method::Fcr => "#1f77b4",
        Method::Fra => "#2ca02c",
        Method::Msr => "#9467bd",
    }
}

/// Emit an SVG with the exact average effective accuracy versus the swept
/// budget, one polyline per method, log-scaled x axis.
pub fn emit_plot(result: &SweepResult, path: &Path) -> Result<()> {
    if result.rows.is_empty() {
        return Err(Error::EmptyResult);
    }
    let param = result.rows[0].param;
    let (x_label, x_unit) = match param {
        SweepParam::Bandwidth => ("Maximum bandwidth", 1e6),
        SweepParam::Power => ("Maximum transmit power", 1.0),
    };
    let x_title = match param {
        SweepParam::Bandwidth => format!("{x_label} (MHz)"),
        SweepParam::Power => format!("{x_label} (W)"),
    };

    let finite_rows: Vec<&SweepRow> = result
        .rows
        .iter()
        .filter(|r| r.avg_effective_accuracy.is_finite())
        .collect();
    if finite_rows.is_empty() {
        return Err(Error::EmptyResult);
    }
    let x_min = finite_rows.iter().map(|r| r.value).fold(f64::MAX, f64::min) / x_unit;
    let x_max = finite_rows.iter().map(|r| r.value).fold(f64::MIN, f64::max) / x_unit;
    let y_max = finite_rows
        .iter()
        .map(|r| r.avg_effective_accuracy)
        .fold(0.0f64, f64::max)
        .max(1e-9)
        * 1.05;

    let x_of = |v: f64| {
        let t = ((v / x_unit).ln() - x_min.ln()) / (x_max.ln() - x_min.ln()).max(1e-12);
        MARGIN_L + t * (PLOT_W - MARGIN_L - MARGIN_R)
    };
    let y_of = |a: f64| PLOT_H - MARGIN_B - (a / y_max) * (PLOT_H - MARGIN_T - MARGIN_B);

    let mut svg = String::new();
    write!(
        svg,
        "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{PLOT_W}\" height=\"{PLOT_H}\" viewBox=\"0 0 {PLOT_W} {PLOT_H}\">\n\
         <rect width=\"{PLOT_W}\" height=\"{PLOT_H}\" fill=\"white\"/>\n"
    )
    .unwrap();

    // Axes.
    write!(
        svg,
        "<line x1=\"{MARGIN_L}\" y1=\"{0}\" x2=\"{1}\" y2=\"{0}\" stroke=\"black\"/>\n\
         <line x1=\"{MARGIN_L}\" y1=\"{MARGIN_T}\" x2=\"{MARGIN_L}\" y2=\"{0}\" stroke=\"black\"/>\n",
        PLOT_H - MARGIN_B,
        PLOT_W - MARGIN_R
    )
    .unwrap();

    // Y ticks at 0, 0.2, ..., and x ticks at each swept value.
    let mut tick = 0.0;
    while tick <= y_max {
        let y = y_of(tick);
        write!(
            svg,
            "<line x1=\"{0}\" y1=\"{y}\" x2=\"{MARGIN_L}\" y2=\"{y}\" stroke=\"black\"/>\n\
             <text x=\"{1}\" y=\"{2}\" font-size=\"12\" text-anchor=\"end\">{tick:.1}</text>\n",
            MARGIN_L - 5.0,
            MARGIN_L - 9.0,
            y + 4.0
        )
        .unwrap();
        tick += 0.2;
    }
    let mut seen = Vec::new();
    for row in &finite_rows {
        if seen.iter().any(|&v: &f64| (v - row.value).abs() < 1e-9) {
            continue;
        }
        seen.push(row.value);
        let x = x_of(row.value);
        write!(
            svg,
            "<line x1=\"{x}\" y1=\"{0}\" x2=\"{x}\" y2=\"{1}\" stroke=\"black\"/>\n\
             <text x=\"{x}\" y=\"{2}\" font-size=\"11\" text-anchor=\"middle\">{3:.2}</text>\n",
            PLOT_H - MARGIN_B,
            PLOT_H - MARGIN_B + 5.0,
            PLOT_H - MARGIN_B + 18.0,
            row.value / x_unit
        )
        .unwrap();
    }

    // One polyline per method, in a fixed legend order.
    let mut legend_y = MARGIN_T + 10.0;
    for method in Method::ALL {
        let pts: Vec<(f64, f64)> = finite_rows
            .iter()
            .filter(|r| r.method == method)
            .map(|r| (x_of(r.value), y_of(r.avg_effective_accuracy)))
            .collect();
        if pts.is_empty() {
            continue;
        }
        let path_d: Vec<String> = pts.iter().map(|(x, y)| format!("{x:.2},{y:.2}")).collect();
        let color = method_color(method);
        write!(
            svg,
            "<polyline fill=\"none\" stroke=\"{color}\" stroke-width=\"2\" points=\"{}\"/>\n",
            path_d.join(" ")
        )
        .unwrap();
        for (x, y) in &pts {
            write!(svg, "<circle cx=\"{x:.2}\" cy=\"{y:.2}\" r=\"3\" fill=\"{color}\"/>\n")
                .unwrap();
        }
        write!(
            svg,
            "<line x1=\"{0}\" y1=\"{legend_y}\" x2=\"{1}\" y2=\"{legend_y}\" stroke=\"{color}\" stroke-width=\"2\"/>\n\
             <text x=\"{2}\" y=\"{3}\" font-size=\"12\">{4}</text>\n",
            PLOT_W - MARGIN_R + 10.0,
            PLOT_W - MARGIN_R + 40.0,
            PLOT_W - MARGIN_R + 46.0,
            legend_y + 4.0,
            method.label()
        )
        .unwrap();
        legend_y += 20.0;
    }

    // Axis titles.
    write!(
        svg,
        "<text x=\"{0}\" y=\"{1}\" font-size=\"13\" text-anchor=\"middle\">{x_title}</text>\n\
         <text x=\"18\" y=\"{2}\" font-size=\"13\" text-anchor=\"middle\" transform=\"rotate(-90 18 {2})\">Average effective accuracy</text>\n\
         </svg>\n",
        (MARGIN_L + PLOT_W - MARGIN_R) / 2.0,
        PLOT_H - 18.0,
        (MARGIN_T + PLOT_H - MARGIN_B) / 2.0
    )
    .unwrap();

    std::fs::write(path, svg)?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::harness::scenario::ScenarioConfig;
    use crate::harness::sweep::{run_sweep, SweepSpec};

    fn small_result() -> SweepResult {
        let cfg = ScenarioConfig {
            users: 2,
            ..ScenarioConfig::default()
        };
        let spec = SweepSpec::new(
            SweepParam::Bandwidth,
            vec![1e6, 3e6],
            vec![Method::Crra, Method::Fra],
        )
        .unwrap();
        run_sweep(&cfg, &spec).unwrap()
    }

    #[test]
    fn csv_round_trips_losslessly() {
        let result = small_result();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.csv");
        emit_csv(&result, &path).unwrap();
        let parsed = parse_csv(&path).unwrap();
        assert_eq!(parsed, csv_rows(&result));

        // Emit -> parse -> emit is byte-stable.
        let text_a = std::fs::read_to_string(&path).unwrap();
        let again = path.with_extension("again.csv");
        emit_csv(&result, &again).unwrap();
        let text_b = std::fs::read_to_string(&again).unwrap();
        assert_eq!(text_a, text_b);
    }

    #[test]
    fn csv_is_byte_stable_across_runs_modulo_wall_time() {
        let a = small_result();
        let b = small_result();
        let dir = tempfile::tempdir().unwrap();
        let pa = dir.path().join("a.csv");
        let pb = dir.path().join("b.csv");
        emit_csv(&a, &pa).unwrap();
        emit_csv(&b, &pb).unwrap();
        let strip = |p: &Path| -> Vec<String> {
            std::fs::read_to_string(p)
                .unwrap()
                .lines()
                .map(|l| {
                    // Drop the wall_ms column (index 6): timing is the one
                    // nondeterministic field.
                    let fields: Vec<&str> = l.split(',').collect();
                    fields
                        .iter()
                        .enumerate()
                        .filter(|(i, _)| *i != 6)
                        .map(|(_, s)| *s)
                        .collect::<Vec<_>>()
                        .join(",")
                })
                .collect()
        };
        assert_eq!(strip(&pa), strip(&pb));
    }

    #[test]
    fn empty_result_emits_nothing() {
        let empty = SweepResult {
            users: 2,
            rows: vec![],
        };
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("none.csv");
        assert!(matches!(emit_csv(&empty, &path), Err(Error::EmptyResult)));
        assert!(!path.exists());
        assert!(matches!(emit_plot(&empty, &path), Err(Error::EmptyResult)));
        assert!(!path.exists());
    }

    #[test]
    fn plot_contains_a_curve_per_method() {
        let result = small_result();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("sweep.svg");
        emit_plot(&result, &path).unwrap();
        let svg = std::fs::read_to_string(&path).unwrap();
        assert!(svg.starts_with("<svg"));
        assert_eq!(svg.matches("<polyline").count(), 2);
        assert!(svg.contains("CRRA"));
        assert!(svg.contains("FRA"));
        assert!(svg.contains("Average effective accuracy"));
    }
}
