//! Per-user compression-ratio subproblem, solved by one-dimensional
//! enumeration over the feature-map grid at fixed bandwidth and power.

use crate::error::{Error, Result};
use crate::models::{effective_accuracy_bound, AccuracyModel, CompressionRatio, UserLink};

/// Admissible compression ratios when the compression unit is a feature map:
/// `k / n_features` for `k = 1 .. n_features - 1`, strictly inside (0, 1).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CompressionGrid {
    n_features: usize,
}

impl CompressionGrid {
    pub fn new(n_features: usize) -> Result<Self> {
        if n_features < 2 {
            return Err(Error::Domain(format!(
                "compression grid needs at least 2 feature maps, got {n_features}"
            )));
        }
        Ok(Self { n_features })
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    /// Candidate ratios in strictly increasing order.
    pub fn candidates(&self) -> impl Iterator<Item = f64> + '_ {
        let n = self.n_features as f64;
        (1..self.n_features).map(move |k| k as f64 / n)
    }

    /// Smallest grid spacing, used by oracle comparisons.
    pub fn cell_width(&self) -> f64 {
        1.0 / self.n_features as f64
    }
}

/// Surrogate objective of the per-user subproblem at fixed (B, P); identical
/// to [`effective_accuracy_bound`], re-exported under the subproblem's name.
pub fn subproblem_objective(link: &UserLink, o: f64, model: &AccuracyModel) -> Result<f64> {
    let ratio = CompressionRatio::new(o)?;
    Ok(effective_accuracy_bound(link, ratio, model))
}

/// The enumerated optimum: ratio and surrogate objective value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CompressionChoice {
    pub ratio: f64,
    pub value: f64,
}

/// Enumerate the grid and return the maximizing ratio. Ties break toward the
/// smaller ratio (transmit more).
pub fn optimize_compression(
    link: &UserLink,
    model: &AccuracyModel,
    grid: &CompressionGrid,
) -> CompressionChoice {
    let mut best = CompressionChoice {
        ratio: f64::NAN,
        value: f64::NEG_INFINITY,
    };
    for o in grid.candidates() {
        let ratio = CompressionRatio::new(o).expect("grid candidates lie in (0,1)");
        let value = effective_accuracy_bound(link, ratio, model);
        if value > best.value {
            best = CompressionChoice { ratio: o, value };
        }
    }
    best
}

/// Continuous golden-section refinement around a bracket, for sensitivity
/// studies only; the solver itself enumerates the discrete grid.
pub fn refine_compression_golden(
    link: &UserLink,
    model: &AccuracyModel,
    mut lo: f64,
    mut hi: f64,
    tol: f64,
) -> Result<CompressionChoice> {
    if !(0.0 < lo && lo < hi && hi < 1.0) {
        return Err(Error::Domain(format!(
            "golden-section bracket [{lo}, {hi}] must lie strictly inside (0, 1)"
        )));
    }
    let inv_phi = 0.5 * (5.0f64.sqrt() - 1.0);
    let eval = |o: f64| {
        effective_accuracy_bound(
            link,
            CompressionRatio::new(o).expect("bracket inside (0,1)"),
            model,
        )
    };
    let mut a = hi - inv_phi * (hi - lo);
    let mut b = lo + inv_phi * (hi - lo);
    let mut fa = eval(a);
    let mut fb = eval(b);
    while hi - lo > tol {
        if fa >= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - inv_phi * (hi - lo);
            fa = eval(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + inv_phi * (hi - lo);
            fb = eval(b);
        }
    }
    let mid = 0.5 * (lo + hi);
    Ok(CompressionChoice {
        ratio: mid,
        value: eval(mid),
    })
}
