//! Bandwidth/power allocation subproblem for fixed compression ratios.
//!
//! The nonconvex allocation problem is rewritten with slack variables and a
//! chain of tangent surrogates (an inner approximation), the resulting convex
//! program is solved by a logarithmic-barrier interior method, and the
//! anchors are re-centered until the surrogate objective converges. A
//! brute-force grid oracle over small instances validates the whole stack.

mod barrier;

use crate::error::{Error, Result};
use crate::models::UserLink;
use barrier::{Anchor, BarrierProblem};

/// Global and per-user resource bounds.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Budgets {
    pub b_min_hz: f64,
    pub b_max_hz: f64,
    pub p_min_w: f64,
    pub p_max_w: f64,
}

impl Budgets {
    pub fn new(b_min_hz: f64, b_max_hz: f64, p_min_w: f64, p_max_w: f64) -> Result<Self> {
        for (name, v) in [
            ("b_min_hz", b_min_hz),
            ("b_max_hz", b_max_hz),
            ("p_min_w", p_min_w),
            ("p_max_w", p_max_w),
        ] {
            if !v.is_finite() || v <= 0.0 {
                return Err(Error::Domain(format!(
                    "budget field {name} must be positive and finite, got {v}"
                )));
            }
        }
        if b_min_hz > b_max_hz || p_min_w > p_max_w {
            return Err(Error::Domain(
                "budget minimums cannot exceed their totals".into(),
            ));
        }
        Ok(Self {
            b_min_hz,
            b_max_hz,
            p_min_w,
            p_max_w,
        })
    }

    /// Feasibility for `users` links: the per-user minimums must fit inside
    /// the totals.
    pub fn feasible_for(&self, users: usize) -> Result<()> {
        let u = users as f64;
        if u * self.b_min_hz > self.b_max_hz * (1.0 + 1e-12) {
            return Err(Error::Infeasible(format!(
                "{users} users need {} Hz of minimum bandwidth but only {} Hz is available",
                u * self.b_min_hz,
                self.b_max_hz
            )));
        }
        if u * self.p_min_w > self.p_max_w * (1.0 + 1e-12) {
            return Err(Error::Infeasible(format!(
                "{users} users need {} W of minimum power but only {} W is available",
                u * self.p_min_w,
                self.p_max_w
            )));
        }
        Ok(())
    }

}

/// Per-user slack variables of the reformulated allocation problem. At a
/// feasible point: `f <= e^y`, `y <= -x^2/2`, `m >= 2^q - 1`,
/// `q >= d0(1-o)/(B t0)`, `z >= B m`, `x P >= N0 z / delta`.
#[derive(Debug, Clone, PartialEq)]
pub struct SlackState {
    pub f: Vec<f64>,
    pub y: Vec<f64>,
    pub x: Vec<f64>,
    pub m: Vec<f64>,
    pub q: Vec<f64>,
    pub z: Vec<f64>,
}

impl SlackState {
    /// Active slacks for the given links and ratios: every inequality of the
    /// chain holds with equality. Values may overflow to infinity for
    /// hopeless payloads; callers treat those users as contributing zero.
    pub fn active(links: &[UserLink], o: &[f64]) -> Self {
        let u = links.len();
        let mut s = SlackState {
            f: vec![0.0; u],
            y: vec![0.0; u],
            x: vec![0.0; u],
            m: vec![0.0; u],
            q: vec![0.0; u],
            z: vec![0.0; u],
        };
        for i in 0..u {
            let link = &links[i];
            let q = link.spectral_load() * (1.0 - o[i]);
            let m = libm::exp2(q) - 1.0;
            let z = link.bandwidth_hz() * m;
            let x = link.noise_density() * z / (link.delta() * link.power_w());
            let y = -0.5 * x * x;
            s.q[i] = q;
            s.m[i] = m;
            s.z[i] = z;
            s.x[i] = x;
            s.y[i] = y;
            s.f[i] = y.exp();
        }
        s
    }

    pub fn len(&self) -> usize {
        self.f.len()
    }

    pub fn is_empty(&self) -> bool {
        self.f.is_empty()
    }
}

/// A resource allocation and the surrogate objective it achieves.
#[derive(Debug, Clone, PartialEq)]
pub struct Allocation {
    pub bandwidth_hz: Vec<f64>,
    pub power_w: Vec<f64>,
    pub objective: f64,
}

impl Allocation {
    /// Check constraints (minimums and totals) to a relative tolerance.
    pub fn check_budgets(&self, budgets: &Budgets, rel_tol: f64) -> Result<()> {
        let b_sum: f64 = self.bandwidth_hz.iter().sum();
        let p_sum: f64 = self.power_w.iter().sum();
        if b_sum > budgets.b_max_hz * (1.0 + rel_tol) {
            return Err(Error::Infeasible(format!(
                "allocated bandwidth {b_sum} exceeds total {}",
                budgets.b_max_hz
            )));
        }
        if p_sum > budgets.p_max_w * (1.0 + rel_tol) {
            return Err(Error::Infeasible(format!(
                "allocated power {p_sum} exceeds total {}",
                budgets.p_max_w
            )));
        }
        for &b in &self.bandwidth_hz {
            if b < budgets.b_min_hz * (1.0 - rel_tol) {
                return Err(Error::Infeasible(format!(
                    "bandwidth {b} below per-user minimum {}",
                    budgets.b_min_hz
                )));
            }
        }
        for &p in &self.power_w {
            if p < budgets.p_min_w * (1.0 - rel_tol) {
                return Err(Error::Infeasible(format!(
                    "power {p} below per-user minimum {}",
                    budgets.p_min_w
                )));
            }
        }
        Ok(())
    }
}

/// Surrogate term of one user: `exp(-arg^2/2)` with
/// `arg = N0 B (2^(d0(1-o)/(B t0)) - 1) / (delta P)`.
pub(crate) fn surrogate_term(link: &UserLink, o: f64) -> f64 {
    let arg = link.q_argument(o);
    if arg.is_infinite() {
        return 0.0;
    }
    (-0.5 * arg * arg).exp()
}

/// Total surrogate objective `sum_i alpha_i exp(-arg_i^2/2)` evaluated at the
/// links' stored allocation (maximization form).
pub fn resource_objective(links: &[UserLink], o: &[f64], alphas: &[f64]) -> Result<f64> {
    if links.len() != o.len() || links.len() != alphas.len() {
        return Err(Error::LengthMismatch(format!(
            "links {}, ratios {}, alphas {}",
            links.len(),
            o.len(),
            alphas.len()
        )));
    }
    Ok(links
        .iter()
        .zip(o.iter().zip(alphas.iter()))
        .map(|(link, (&oi, &ai))| ai * surrogate_term(link, oi))
        .sum())
}

/// First-order Taylor expansion of `e^y` at `y_anchor`: a supporting
/// hyperplane, equal to `e^y_anchor` at the anchor and below `e^y` everywhere.
pub fn linearize_exp(y: f64, y_anchor: f64) -> f64 {
    let e = y_anchor.exp();
    e + (y - y_anchor) * e
}

/// Convex majorant of the product `B*m` obtained by expanding `(B-m)^2`
/// around the anchor inside `B*m = ((B+m)^2 - (B-m)^2)/4`. Equals
/// `B_anchor*m_anchor` at the anchor and dominates `B*m` everywhere, so
/// requiring `z >= linearize_bilinear_z(...)` keeps `z >= B*m`.
pub fn linearize_bilinear_z(b: f64, m: f64, b_anchor: f64, m_anchor: f64) -> f64 {
    let d = b_anchor - m_anchor;
    0.25 * ((b + m) * (b + m) - 2.0 * (b - m) * d + d * d)
}

/// Concave minorant of `4*x*P` used on the power side: the convex term
/// `(x+P)^2` is replaced by its tangent while `-(x-P)^2` is kept, preserving
/// tangency at the anchor and the global bound `<= 4*x*P`.
pub fn linearize_bilinear_xp(x: f64, p: f64, x_anchor: f64, p_anchor: f64) -> f64 {
    let s = x_anchor + p_anchor;
    2.0 * (x + p) * s - s * s - (x - p) * (x - p)
}

/// Fully linearized variant carrying the sign defect of the source
/// derivation: both squares replaced by tangents with a `+ (x_a + P_a)^2`
/// final term. At the anchor it evaluates to `8 x_a P_a` (twice the product),
/// so it is neither tangent nor a minorant. Kept behind a debug option for
/// comparison runs only.
pub fn linearize_bilinear_xp_uncorrected(x: f64, p: f64, x_anchor: f64, p_anchor: f64) -> f64 {
    let s = x_anchor + p_anchor;
    let d = x_anchor - p_anchor;
    2.0 * (x + p) * s - s * s - 2.0 * (x - p) * d + s * s
}

/// Which expansion of the `x*P` product constraint the solver uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum XpLinearization {
    #[default]
    Corrected,
    /// Debug-only: diverges because the expansion is not a minorant.
    Uncorrected,
}

/// Interior-point settings for one convex subproblem.
#[derive(Debug, Clone, Copy)]
pub struct BarrierConfig {
    pub t_init: f64,
    /// Multiplicative barrier schedule per stage.
    pub mu: f64,
    /// Stop when (number of constraints) / t falls below this.
    pub duality_tol: f64,
    /// Newton decrement threshold per centering step.
    pub newton_tol: f64,
    pub max_newton: usize,
    pub max_stages: usize,
}

impl Default for BarrierConfig {
    fn default() -> Self {
        Self {
            t_init: 1.0,
            mu: 10.0,
            duality_tol: 1e-8,
            newton_tol: 1e-11,
            max_newton: 80,
            max_stages: 40,
        }
    }
}

/// Warm-start allocation for the outer loop.
#[derive(Debug, Clone)]
pub struct WarmStart {
    pub bandwidth_hz: Vec<f64>,
    pub power_w: Vec<f64>,
}

/// Outer-loop settings.
#[derive(Debug, Clone)]
pub struct ScaConfig {
    pub max_sca_iters: usize,
    /// Relative objective-change threshold for convergence.
    pub sca_tol: f64,
    pub barrier: BarrierConfig,
    pub xp_linearization: XpLinearization,
    pub warm_start: Option<WarmStart>,
}

impl Default for ScaConfig {
    fn default() -> Self {
        Self {
            max_sca_iters: 50,
            sca_tol: 1e-6,
            barrier: BarrierConfig::default(),
            xp_linearization: XpLinearization::default(),
            warm_start: None,
        }
    }
}

/// Result of the iterated allocation solve.
#[derive(Debug, Clone)]
pub struct ResourceOutcome {
    pub allocation: Allocation,
    pub slack: SlackState,
    pub iterations: usize,
    pub converged: bool,
    /// Surrogate objective at the initial point and after every accepted
    /// re-anchoring; nondecreasing by construction.
    pub objective_history: Vec<f64>,
}

fn validate_inputs(o: &[f64], alphas: &[f64], links: &[UserLink]) -> Result<()> {
    if links.is_empty() {
        return Err(Error::Domain("need at least one user".into()));
    }
    if links.len() != o.len() || links.len() != alphas.len() {
        return Err(Error::LengthMismatch(format!(
            "links {}, ratios {}, alphas {}",
            links.len(),
            o.len(),
            alphas.len()
        )));
    }
    for (i, &oi) in o.iter().enumerate() {
        if !oi.is_finite() || oi <= 0.0 || oi >= 1.0 {
            return Err(Error::Domain(format!(
                "compression ratio of user {i} must lie in (0, 1), got {oi}"
            )));
        }
    }
    for (i, &ai) in alphas.iter().enumerate() {
        if !ai.is_finite() || ai < 0.0 {
            return Err(Error::Domain(format!(
                "alpha of user {i} must be finite and >= 0, got {ai}"
            )));
        }
    }
    Ok(())
}

/// Payload below this fraction of a bit per deadline-second at minimum
/// bandwidth is treated as zero: the user's term is the constant alpha and
/// its resources stay at the minimums.
const ZERO_PAYLOAD_FRACTION: f64 = 1e-12;

/// Tail arguments beyond this make the surrogate term underflow to zero, so
/// the user cannot be helped by any allocation within the budgets.
const HOPELESS_ARGUMENT: f64 = 40.0;

/// Anchor safety caps: beyond these the linearized constraints are
/// numerically meaningless (the term has underflowed), so the user is pinned
/// to the minimums for this solve.
const ANCHOR_X_CAP: f64 = 50.0;
const ANCHOR_Q_CAP: f64 = 250.0;

/// Decide which users take part in the barrier solve. Pinned users sit at
/// (b_min, p_min); their surrogate terms are evaluated directly.
fn pin_users(o: &[f64], budgets: &Budgets, links: &[UserLink]) -> Vec<bool> {
    let u = links.len();
    let mut pinned = vec![false; u];
    for i in 0..u {
        let payload = links[i].data_bits() * (1.0 - o[i]);
        if payload <= ZERO_PAYLOAD_FRACTION * links[i].data_bits() {
            pinned[i] = true;
            continue;
        }
        // Most generous allocation this user could ever receive.
        let b_best = budgets.b_max_hz - (u as f64 - 1.0) * budgets.b_min_hz;
        let p_best = budgets.p_max_w - (u as f64 - 1.0) * budgets.p_min_w;
        if let Ok(best) = links[i].with_allocation(b_best.max(budgets.b_min_hz), p_best.max(budgets.p_min_w)) {
            let q = best.spectral_load() * (1.0 - o[i]);
            let arg = (libm::exp2(q) - 1.0) * best.noise_density() * best.bandwidth_hz()
                / (best.delta() * best.power_w());
            if !arg.is_finite() || arg >= HOPELESS_ARGUMENT {
                pinned[i] = true;
            }
        }
    }
    pinned
}

struct Partition {
    free: Vec<usize>,
    b_avail: f64,
    p_avail: f64,
}

fn partition(pinned: &[bool], budgets: &Budgets) -> Partition {
    let free: Vec<usize> = (0..pinned.len()).filter(|&i| !pinned[i]).collect();
    let n_pinned = (pinned.len() - free.len()) as f64;
    Partition {
        free,
        b_avail: budgets.b_max_hz - n_pinned * budgets.b_min_hz,
        p_avail: budgets.p_max_w - n_pinned * budgets.p_min_w,
    }
}

/// Solve the convex inner approximation anchored at the given allocation and
/// slack state. The anchors must admit a strictly feasible start, otherwise
/// an anchor error is returned and the caller must repair them. The returned
/// point is feasible for the original (nonconvex) constraint chain.
pub fn solve_convex_subproblem(
    anchor_alloc: &Allocation,
    anchor_slack: &SlackState,
    o: &[f64],
    alphas: &[f64],
    budgets: &Budgets,
    links: &[UserLink],
    config: &ScaConfig,
) -> Result<(SlackState, Allocation)> {
    validate_inputs(o, alphas, links)?;
    let u = links.len();
    budgets.feasible_for(u)?;
    if anchor_alloc.bandwidth_hz.len() != u
        || anchor_alloc.power_w.len() != u
        || anchor_slack.len() != u
    {
        return Err(Error::LengthMismatch(
            "anchor dimensions disagree with the user count".into(),
        ));
    }

    let all: Vec<usize> = (0..u).collect();
    let problem = BarrierProblem::build(
        &all,
        o,
        alphas,
        budgets,
        links,
        budgets.b_max_hz,
        budgets.p_max_w,
        config.xp_linearization,
    )?;
    let anchor = Anchor::from_state(
        &anchor_alloc.bandwidth_hz,
        &anchor_alloc.power_w,
        &anchor_slack.y,
        &anchor_slack.m,
        &anchor_slack.x,
    )?;
    let point = problem.solve(&anchor, &config.barrier)?;
    let (bandwidth, power, slack) = problem.extract(&point);
    let objective = resource_objective(&relink(links, &bandwidth, &power)?, o, alphas)?;
    Ok((
        slack,
        Allocation {
            bandwidth_hz: bandwidth,
            power_w: power,
            objective,
        },
    ))
}

fn relink(links: &[UserLink], bandwidth: &[f64], power: &[f64]) -> Result<Vec<UserLink>> {
    links
        .iter()
        .zip(bandwidth.iter().zip(power.iter()))
        .map(|(link, (&b, &p))| link.with_allocation(b, p))
        .collect()
}

/// Outer loop: initialize anchors (equal split unless warm-started), solve
/// the convex subproblem, re-anchor at the solution, and repeat until the
/// surrogate objective stops improving. The accepted-iterate objective
/// sequence is nondecreasing; the best iterate is returned.
pub fn solve_resource_allocation(
    o: &[f64],
    alphas: &[f64],
    budgets: &Budgets,
    links: &[UserLink],
    config: &ScaConfig,
) -> Result<ResourceOutcome> {
    validate_inputs(o, alphas, links)?;
    let u = links.len();
    budgets.feasible_for(u)?;

    if let Some(w) = &config.warm_start {
        if w.bandwidth_hz.len() != u || w.power_w.len() != u {
            return Err(Error::LengthMismatch(
                "warm start dimensions disagree with the user count".into(),
            ));
        }
    }

    // Anchor state at the current allocation; infinite when the slack chain
    // overflows.
    let anchor_health = |link: &UserLink, oi: f64| -> (f64, f64) {
        let q = link.spectral_load() * (1.0 - oi);
        let m = libm::exp2(q) - 1.0;
        let x = link.noise_density() * link.bandwidth_hz() * m / (link.delta() * link.power_w());
        (q, x)
    };

    // Pin zero-payload and hopeless users, then keep pinning anyone whose
    // anchor state would overflow the linearized program, re-splitting the
    // remaining budget each time. Terminates: every pass pins at least one
    // more user or exits.
    let mut pinned = pin_users(o, budgets, links);
    let mut bandwidth = vec![budgets.b_min_hz; u];
    let mut power = vec![budgets.p_min_w; u];
    let mut part = partition(&pinned, budgets);
    loop {
        if part.free.is_empty() {
            break;
        }
        let (warm_b, warm_p) = match &config.warm_start {
            Some(w) => (Some(&w.bandwidth_hz), Some(&w.power_w)),
            None => (None, None),
        };
        distribute(&part, budgets, warm_b, warm_p, &mut bandwidth, &mut power);
        let mut newly_pinned = false;
        for &i in &part.free {
            let link = links[i].with_allocation(bandwidth[i], power[i])?;
            let (q, x) = anchor_health(&link, o[i]);
            if q > ANCHOR_Q_CAP || !x.is_finite() || x > ANCHOR_X_CAP {
                pinned[i] = true;
                bandwidth[i] = budgets.b_min_hz;
                power[i] = budgets.p_min_w;
                newly_pinned = true;
            }
        }
        if !newly_pinned {
            break;
        }
        part = partition(&pinned, budgets);
    }

    let objective_at = |bw: &[f64], pw: &[f64]| -> Result<f64> {
        resource_objective(&relink(links, bw, pw)?, o, alphas)
    };

    let mut history = vec![objective_at(&bandwidth, &power)?];
    let mut converged = part.free.is_empty();
    let mut iterations = 0;

    while iterations < config.max_sca_iters && !part.free.is_empty() {
        // A user whose term underflowed mid-run cannot be re-anchored; stop
        // at the best iterate rather than disturb the monotone sequence.
        let unsafe_anchor = part.free.iter().any(|&i| {
            let link = links[i]
                .with_allocation(bandwidth[i], power[i])
                .expect("allocation stays positive");
            let (q, x) = anchor_health(&link, o[i]);
            q > ANCHOR_Q_CAP || !x.is_finite() || x > ANCHOR_X_CAP
        });
        if unsafe_anchor {
            converged = false;
            break;
        }

        let problem = BarrierProblem::build(
            &part.free,
            o,
            alphas,
            budgets,
            links,
            part.b_avail,
            part.p_avail,
            config.xp_linearization,
        )?;
        let free_b: Vec<f64> = part.free.iter().map(|&i| bandwidth[i]).collect();
        let free_p: Vec<f64> = part.free.iter().map(|&i| power[i]).collect();
        let anchor = Anchor::from_allocation(&problem, &free_b, &free_p)?;
        iterations += 1;
        let point = problem.solve(&anchor, &config.barrier)?;
        let (new_b, new_p, _) = problem.extract(&point);

        let mut cand_b = bandwidth.clone();
        let mut cand_p = power.clone();
        for (slot, &i) in part.free.iter().enumerate() {
            cand_b[i] = new_b[slot];
            cand_p[i] = new_p[slot];
        }
        let cand_obj = objective_at(&cand_b, &cand_p)?;
        let current = *history.last().expect("history nonempty");
        let improvement = cand_obj - current;
        if improvement > 0.0 {
            bandwidth = cand_b;
            power = cand_p;
            history.push(cand_obj);
        }
        if improvement.abs() < config.sca_tol * current.abs().max(1.0) || improvement <= 0.0 {
            converged = true;
            break;
        }
    }
    if iterations == config.max_sca_iters && !converged {
        // Ran out of outer iterations; best iterate is still returned.
        converged = false;
    }

    let objective = *history.last().expect("history nonempty");
    let final_links = relink(links, &bandwidth, &power)?;
    Ok(ResourceOutcome {
        allocation: Allocation {
            bandwidth_hz: bandwidth,
            power_w: power,
            objective,
        },
        slack: SlackState::active(&final_links, o),
        iterations,
        converged,
        objective_history: history,
    })
}

/// Spread the available budget over the free users: clip a warm start into
/// the feasible box and rescale toward the minimums if the totals overflow,
/// or fall back to an equal split.
fn distribute(
    part: &Partition,
    budgets: &Budgets,
    warm_b: Option<&Vec<f64>>,
    warm_p: Option<&Vec<f64>>,
    bandwidth: &mut [f64],
    power: &mut [f64],
) {
    let n = part.free.len() as f64;
    let fit = |values: Option<&Vec<f64>>, min: f64, avail: f64, out: &mut [f64], free: &[usize]| {
        match values {
            Some(v) => {
                let mut picked: Vec<f64> = free.iter().map(|&i| v[i].max(min)).collect();
                let sum: f64 = picked.iter().sum();
                if sum > avail {
                    let excess = sum - free.len() as f64 * min;
                    let room = avail - free.len() as f64 * min;
                    let scale = if excess > 0.0 { room / excess } else { 0.0 };
                    for p in &mut picked {
                        *p = min + (*p - min) * scale;
                    }
                }
                for (slot, &i) in free.iter().enumerate() {
                    out[i] = picked[slot];
                }
            }
            None => {
                for &i in free {
                    out[i] = avail / n;
                }
            }
        }
    };
    fit(warm_b, budgets.b_min_hz, part.b_avail, bandwidth, &part.free);
    fit(warm_p, budgets.p_min_w, part.p_avail, power, &part.free);
}

/// Exhaustive scan of the budget simplices at the given resolution. The
/// surrogate objective never decreases when a user receives more bandwidth
/// or power, so the search runs on the equality faces `sum B = B_max`,
/// `sum P = P_max`. Guarded to at most 3 users.
pub fn brute_force_allocation(
    o: &[f64],
    alphas: &[f64],
    budgets: &Budgets,
    links: &[UserLink],
    grid_resolution: usize,
) -> Result<Allocation> {
    validate_inputs(o, alphas, links)?;
    let u = links.len();
    if u > 3 {
        return Err(Error::OracleScale(u));
    }
    budgets.feasible_for(u)?;
    if grid_resolution < 2 {
        return Err(Error::Domain("grid resolution must be at least 2".into()));
    }

    let eval = |bw: &[f64], pw: &[f64]| -> Result<f64> {
        resource_objective(&relink(links, bw, pw)?, o, alphas)
    };

    match u {
        1 => {
            let bw = vec![budgets.b_max_hz];
            let pw = vec![budgets.p_max_w];
            let objective = eval(&bw, &pw)?;
            Ok(Allocation {
                bandwidth_hz: bw,
                power_w: pw,
                objective,
            })
        }
        2 => {
            let bs = simplex_axis(budgets.b_min_hz, budgets.b_max_hz, grid_resolution);
            let ps = simplex_axis(budgets.p_min_w, budgets.p_max_w, grid_resolution);
            let mut best = (f64::NEG_INFINITY, vec![0.0; 2], vec![0.0; 2]);
            for &b1 in &bs {
                for &p1 in &ps {
                    let bw = [b1, budgets.b_max_hz - b1];
                    let pw = [p1, budgets.p_max_w - p1];
                    let v = eval(&bw, &pw)?;
                    if v > best.0 {
                        best = (v, bw.to_vec(), pw.to_vec());
                    }
                }
            }
            Ok(Allocation {
                bandwidth_hz: best.1,
                power_w: best.2,
                objective: best.0,
            })
        }
        _ => {
            let bs = simplex_axis(budgets.b_min_hz, budgets.b_max_hz, grid_resolution);
            let ps = simplex_axis(budgets.p_min_w, budgets.p_max_w, grid_resolution);
            let mut best = (f64::NEG_INFINITY, vec![0.0; 3], vec![0.0; 3]);
            for &b1 in &bs {
                for &b2 in &bs {
                    let b3 = budgets.b_max_hz - b1 - b2;
                    if b3 < budgets.b_min_hz {
                        continue;
                    }
                    for &p1 in &ps {
                        for &p2 in &ps {
                            let p3 = budgets.p_max_w - p1 - p2;
                            if p3 < budgets.p_min_w {
                                continue;
                            }
                            let bw = [b1, b2, b3];
                            let pw = [p1, p2, p3];
                            let v = eval(&bw, &pw)?;
                            if v > best.0 {
                                best = (v, bw.to_vec(), pw.to_vec());
                            }
                        }
                    }
                }
            }
            Ok(Allocation {
                bandwidth_hz: best.1,
                power_w: best.2,
                objective: best.0,
            })
        }
    }
}

/// Grid over one user's share when the remaining users must keep at least
/// the minimum: `[min, max - (u-1)*min]` — here specialized to 2 or 3 users
/// by the callers, who subtract the other shares themselves.
fn simplex_axis(min: f64, max: f64, resolution: usize) -> Vec<f64> {
    let hi = max - min; // leave one minimum for the other user(s)
    let lo = min;
    if hi <= lo {
        return vec![lo];
    }
    (0..=resolution)
        .map(|k| lo + (hi - lo) * k as f64 / resolution as f64)
        .collect()
}
