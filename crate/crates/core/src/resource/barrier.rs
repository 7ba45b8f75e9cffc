//! Logarithmic-barrier interior method for the convex allocation subproblem.
//!
//! Variables stay in their physical units — the quarter-square expansions
//! are taken in exactly the coordinates they are defined in, which is what
//! makes them tight along the (B - m) and (x + P) directions. Per-user
//! variables are `(B, P, f, y, x, m, q, z)` subject to
//!
//! ```text
//!   f <= E (1 + y - y^j)                            (tangent of e^y)
//!   y <= -x^2 / 2
//!   m >= 2^q - 1
//!   q >= kappa / B                 kappa = d0 (1 - o) / t0
//!   z >= quarter-square majorant of B*m             (anchor j)
//!   4 (N0/delta) z <= concave minorant of 4 x P     (anchor j)
//!   B >= B_min,  sum B <= B_avail
//!   P >= P_min,  sum P <= P_avail
//! ```
//!
//! maximizing `sum alpha_i f_i`. The huge dynamic range across variables
//! (Hz against W against dimensionless slacks) is absorbed by a diagonal
//! preconditioner built from the start point. Damped Newton steps center
//! each stage; the barrier parameter grows by `mu` until the duality
//! measure `(#constraints)/t` passes the tolerance.

use super::{
    linearize_bilinear_xp, linearize_bilinear_xp_uncorrected, linearize_bilinear_z, BarrierConfig,
    Budgets, SlackState, XpLinearization,
};
use crate::error::{Error, Result};
use crate::models::UserLink;
use nalgebra::{Cholesky, DMatrix, DVector};
use std::f64::consts::LN_2;

pub(crate) struct BarrierProblem {
    alphas: Vec<f64>,
    /// Payload rate demand per user: d0 (1 - o) / t0, in bit/s.
    kappas: Vec<f64>,
    /// Noise-to-spread ratio per user: N0 / delta.
    cs: Vec<f64>,
    b_min: f64,
    p_min: f64,
    b_avail: f64,
    p_avail: f64,
    b_free: bool,
    p_free: bool,
    xp: XpLinearization,
    // variable block offsets
    off_b: usize,
    off_p: usize,
    off_f: usize,
    off_y: usize,
    off_x: usize,
    off_m: usize,
    off_q: usize,
    off_z: usize,
    n_vars: usize,
}

/// Linearization anchors (superscript j): the allocation plus the slack
/// coordinates the tangents are taken at.
pub(crate) struct Anchor {
    pub b: Vec<f64>,
    pub p: Vec<f64>,
    pub y: Vec<f64>,
    pub e: Vec<f64>,
    pub m: Vec<f64>,
    pub x: Vec<f64>,
    /// B^j - m^j per user.
    pub dz: Vec<f64>,
    /// x^j + P^j per user.
    pub sx: Vec<f64>,
    /// x^j - P^j per user.
    pub dx: Vec<f64>,
}

impl Anchor {
    fn from_parts(
        b: Vec<f64>,
        p: Vec<f64>,
        y: Vec<f64>,
        m: Vec<f64>,
        x: Vec<f64>,
    ) -> Result<Self> {
        let u = b.len();
        let mut dz = vec![0.0; u];
        let mut sx = vec![0.0; u];
        let mut dx = vec![0.0; u];
        let mut e = vec![0.0; u];
        for i in 0..u {
            dz[i] = b[i] - m[i];
            sx[i] = x[i] + p[i];
            dx[i] = x[i] - p[i];
            e[i] = y[i].exp();
            for (name, v) in [("B", b[i]), ("P", p[i]), ("m", m[i]), ("x", x[i])] {
                if !v.is_finite() || v < 0.0 {
                    return Err(Error::AnchorInfeasible(format!(
                        "anchor {name} of user {i} is {v}"
                    )));
                }
            }
            if !y[i].is_finite() || !e[i].is_finite() {
                return Err(Error::AnchorInfeasible(format!(
                    "anchor y of user {i} is {}",
                    y[i]
                )));
            }
        }
        Ok(Self {
            b,
            p,
            y,
            e,
            m,
            x,
            dz,
            sx,
            dx,
        })
    }

    /// Anchor from an explicit state (the public subproblem entry point).
    pub(crate) fn from_state(
        bandwidth: &[f64],
        power: &[f64],
        y: &[f64],
        m: &[f64],
        x: &[f64],
    ) -> Result<Self> {
        Self::from_parts(
            bandwidth.to_vec(),
            power.to_vec(),
            y.to_vec(),
            m.to_vec(),
            x.to_vec(),
        )
    }

    /// Anchor with every slack inequality active at the given allocation
    /// (one entry per participating user, in slot order).
    pub(crate) fn from_allocation(
        problem: &BarrierProblem,
        bandwidth: &[f64],
        power: &[f64],
    ) -> Result<Self> {
        let u = problem.n_users();
        let mut y = vec![0.0; u];
        let mut m = vec![0.0; u];
        let mut x = vec![0.0; u];
        for i in 0..u {
            let q = problem.kappas[i] / bandwidth[i];
            m[i] = libm::exp2(q) - 1.0;
            x[i] = problem.cs[i] * bandwidth[i] * m[i] / power[i];
            y[i] = -0.5 * x[i] * x[i];
        }
        Self::from_parts(bandwidth.to_vec(), power.to_vec(), y, m, x)
    }
}

impl BarrierProblem {
    /// `free` lists the original user indices taking part; `b_avail` and
    /// `p_avail` are the budget totals left for them.
    #[allow(clippy::too_many_arguments)]
    pub(crate) fn build(
        free: &[usize],
        o: &[f64],
        alphas: &[f64],
        budgets: &Budgets,
        links: &[UserLink],
        b_avail: f64,
        p_avail: f64,
        xp: XpLinearization,
    ) -> Result<Self> {
        let u = free.len();
        assert!(u > 0, "barrier problem needs at least one free user");
        let b_free = !(u as f64 * budgets.b_min_hz >= b_avail * (1.0 - 1e-12));
        let p_free = !(u as f64 * budgets.p_min_w >= p_avail * (1.0 - 1e-12));

        let mut kappas = Vec::with_capacity(u);
        let mut cs = Vec::with_capacity(u);
        let mut al = Vec::with_capacity(u);
        for &i in free {
            let link = &links[i];
            kappas.push(link.data_bits() * (1.0 - o[i]) / link.deadline_s());
            cs.push(link.noise_density() / link.delta());
            al.push(alphas[i]);
        }

        let nb = if b_free { u } else { 0 };
        let np = if p_free { u } else { 0 };
        let off_b = 0;
        let off_p = nb;
        let off_f = nb + np;
        let off_y = off_f + u;
        let off_x = off_y + u;
        let off_m = off_x + u;
        let off_q = off_m + u;
        let off_z = off_q + u;

        Ok(Self {
            alphas: al,
            kappas,
            cs,
            b_min: budgets.b_min_hz,
            p_min: budgets.p_min_w,
            b_avail,
            p_avail,
            b_free,
            p_free,
            xp,
            off_b,
            off_p,
            off_f,
            off_y,
            off_x,
            off_m,
            off_q,
            off_z,
            n_vars: off_z + u,
        })
    }

    fn n_users(&self) -> usize {
        self.alphas.len()
    }

    fn n_cons(&self) -> usize {
        let u = self.n_users();
        u * 6
            + if self.b_free { u + 1 } else { 0 }
            + if self.p_free { u + 1 } else { 0 }
    }

    fn b_of(&self, v: &DVector<f64>, i: usize) -> f64 {
        if self.b_free {
            v[self.off_b + i]
        } else {
            self.b_min
        }
    }

    fn p_of(&self, v: &DVector<f64>, i: usize) -> f64 {
        if self.p_free {
            v[self.off_p + i]
        } else {
            self.p_min
        }
    }

    fn xp_value(&self, x: f64, p: f64, anchor: &Anchor, i: usize) -> f64 {
        match self.xp {
            XpLinearization::Corrected => linearize_bilinear_xp(x, p, anchor.x[i], anchor.p[i]),
            XpLinearization::Uncorrected => {
                linearize_bilinear_xp_uncorrected(x, p, anchor.x[i], anchor.p[i])
            }
        }
    }

    /// All constraint values g <= 0 at `v`.
    fn constraint_values(&self, anchor: &Anchor, v: &DVector<f64>, out: &mut Vec<f64>) {
        out.clear();
        let u = self.n_users();
        for i in 0..u {
            let b = self.b_of(v, i);
            let p = self.p_of(v, i);
            let f = v[self.off_f + i];
            let y = v[self.off_y + i];
            let x = v[self.off_x + i];
            let m = v[self.off_m + i];
            let q = v[self.off_q + i];
            let z = v[self.off_z + i];

            out.push(f - anchor.e[i] * (1.0 + y - anchor.y[i]));
            out.push(y + 0.5 * x * x);
            out.push(libm::exp2(q) - 1.0 - m);
            out.push(self.kappas[i] / b - q);
            out.push(linearize_bilinear_z(b, m, anchor.b[i], anchor.m[i]) - z);
            out.push(4.0 * self.cs[i] * z - self.xp_value(x, p, anchor, i));
        }
        if self.b_free {
            let mut sum = 0.0;
            for i in 0..u {
                out.push(self.b_min - v[self.off_b + i]);
                sum += v[self.off_b + i];
            }
            out.push(sum - self.b_avail);
        }
        if self.p_free {
            let mut sum = 0.0;
            for i in 0..u {
                out.push(self.p_min - v[self.off_p + i]);
                sum += v[self.off_p + i];
            }
            out.push(sum - self.p_avail);
        }
    }

    fn objective(&self, v: &DVector<f64>) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n_users() {
            s -= self.alphas[i] * v[self.off_f + i];
        }
        s
    }

    /// Barrier function t*f0 + sum -ln(-g); None when infeasible.
    fn psi(
        &self,
        anchor: &Anchor,
        v: &DVector<f64>,
        t: f64,
        g_buf: &mut Vec<f64>,
    ) -> Option<f64> {
        self.constraint_values(anchor, v, g_buf);
        let mut total = t * self.objective(v);
        for &g in g_buf.iter() {
            if !(g < 0.0) || !g.is_finite() {
                return None;
            }
            total -= (-g).ln();
        }
        total.is_finite().then_some(total)
    }

    /// Gradient and Hessian of the barrier function; requires strict
    /// feasibility.
    fn assemble(
        &self,
        anchor: &Anchor,
        v: &DVector<f64>,
        t: f64,
    ) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let n = self.n_vars;
        let u = self.n_users();
        let mut grad = DVector::zeros(n);
        let mut hess = DMatrix::zeros(n, n);
        for i in 0..u {
            grad[self.off_f + i] = -t * self.alphas[i];
        }

        // Accumulate one constraint: gradient entries and Hessian-of-g
        // entries (upper triangle, mirrored below).
        let add = |g: f64,
                   grad_entries: &[(usize, f64)],
                   hess_entries: &[(usize, usize, f64)],
                   grad: &mut DVector<f64>,
                   hess: &mut DMatrix<f64>|
         -> bool {
            let s = -g;
            if !(s > 0.0) || !s.is_finite() {
                return false;
            }
            let w1 = 1.0 / s;
            let w2 = w1 * w1;
            for &(a, va) in grad_entries {
                grad[a] += w1 * va;
                for &(b, vb) in grad_entries {
                    hess[(a, b)] += w2 * va * vb;
                }
            }
            for &(a, b, h) in hess_entries {
                hess[(a, b)] += w1 * h;
                if a != b {
                    hess[(b, a)] += w1 * h;
                }
            }
            true
        };

        for i in 0..u {
            let b = self.b_of(v, i);
            let p = self.p_of(v, i);
            let y = v[self.off_y + i];
            let x = v[self.off_x + i];
            let m = v[self.off_m + i];
            let q = v[self.off_q + i];
            let z = v[self.off_z + i];
            let f = v[self.off_f + i];
            let if_ = self.off_f + i;
            let iy = self.off_y + i;
            let ix = self.off_x + i;
            let im = self.off_m + i;
            let iq = self.off_q + i;
            let iz = self.off_z + i;

            // f - E (1 + y - y^j) <= 0
            let g = f - anchor.e[i] * (1.0 + y - anchor.y[i]);
            if !add(g, &[(if_, 1.0), (iy, -anchor.e[i])], &[], &mut grad, &mut hess) {
                return None;
            }

            // y + x^2/2 <= 0
            let g = y + 0.5 * x * x;
            if !add(g, &[(iy, 1.0), (ix, x)], &[(ix, ix, 1.0)], &mut grad, &mut hess) {
                return None;
            }

            // 2^q - 1 - m <= 0
            let eq = libm::exp2(q);
            let g = eq - 1.0 - m;
            if !add(
                g,
                &[(iq, LN_2 * eq), (im, -1.0)],
                &[(iq, iq, LN_2 * LN_2 * eq)],
                &mut grad,
                &mut hess,
            ) {
                return None;
            }

            // kappa/B - q <= 0
            let g = self.kappas[i] / b - q;
            if self.b_free {
                let ib = self.off_b + i;
                if !add(
                    g,
                    &[(ib, -self.kappas[i] / (b * b)), (iq, -1.0)],
                    &[(ib, ib, 2.0 * self.kappas[i] / (b * b * b))],
                    &mut grad,
                    &mut hess,
                ) {
                    return None;
                }
            } else if !add(g, &[(iq, -1.0)], &[], &mut grad, &mut hess) {
                return None;
            }

            // quarter-square majorant of B*m minus z <= 0
            let g = linearize_bilinear_z(b, m, anchor.b[i], anchor.m[i]) - z;
            let dm = 0.5 * (b + m) + 0.5 * anchor.dz[i];
            if self.b_free {
                let ib = self.off_b + i;
                let db = 0.5 * (b + m) - 0.5 * anchor.dz[i];
                if !add(
                    g,
                    &[(ib, db), (im, dm), (iz, -1.0)],
                    &[(ib, ib, 0.5), (im, im, 0.5), (ib, im, 0.5)],
                    &mut grad,
                    &mut hess,
                ) {
                    return None;
                }
            } else if !add(
                g,
                &[(im, dm), (iz, -1.0)],
                &[(im, im, 0.5)],
                &mut grad,
                &mut hess,
            ) {
                return None;
            }

            // 4 (N0/delta) z - minorant of 4 x P <= 0
            let g = 4.0 * self.cs[i] * z - self.xp_value(x, p, anchor, i);
            match self.xp {
                XpLinearization::Corrected => {
                    let gx = 2.0 * (x - p) - 2.0 * anchor.sx[i];
                    if self.p_free {
                        let ip = self.off_p + i;
                        let gp = -2.0 * (x - p) - 2.0 * anchor.sx[i];
                        if !add(
                            g,
                            &[(ix, gx), (ip, gp), (iz, 4.0 * self.cs[i])],
                            &[(ix, ix, 2.0), (ip, ip, 2.0), (ix, ip, -2.0)],
                            &mut grad,
                            &mut hess,
                        ) {
                            return None;
                        }
                    } else if !add(
                        g,
                        &[(ix, gx), (iz, 4.0 * self.cs[i])],
                        &[(ix, ix, 2.0)],
                        &mut grad,
                        &mut hess,
                    ) {
                        return None;
                    }
                }
                XpLinearization::Uncorrected => {
                    let gx = -2.0 * anchor.sx[i] + 2.0 * anchor.dx[i];
                    if self.p_free {
                        let ip = self.off_p + i;
                        let gp = -2.0 * anchor.sx[i] - 2.0 * anchor.dx[i];
                        if !add(
                            g,
                            &[(ix, gx), (ip, gp), (iz, 4.0 * self.cs[i])],
                            &[],
                            &mut grad,
                            &mut hess,
                        ) {
                            return None;
                        }
                    } else if !add(
                        g,
                        &[(ix, gx), (iz, 4.0 * self.cs[i])],
                        &[],
                        &mut grad,
                        &mut hess,
                    ) {
                        return None;
                    }
                }
            }
        }

        if self.b_free {
            for i in 0..u {
                let ib = self.off_b + i;
                let g = self.b_min - v[ib];
                if !add(g, &[(ib, -1.0)], &[], &mut grad, &mut hess) {
                    return None;
                }
            }
            let sum: f64 = (0..u).map(|i| v[self.off_b + i]).sum();
            let g = sum - self.b_avail;
            let entries: Vec<(usize, f64)> = (0..u).map(|i| (self.off_b + i, 1.0)).collect();
            if !add(g, &entries, &[], &mut grad, &mut hess) {
                return None;
            }
        }
        if self.p_free {
            for i in 0..u {
                let ip = self.off_p + i;
                let g = self.p_min - v[ip];
                if !add(g, &[(ip, -1.0)], &[], &mut grad, &mut hess) {
                    return None;
                }
            }
            let sum: f64 = (0..u).map(|i| v[self.off_p + i]).sum();
            let g = sum - self.p_avail;
            let entries: Vec<(usize, f64)> = (0..u).map(|i| (self.off_p + i, 1.0)).collect();
            if !add(g, &entries, &[], &mut grad, &mut hess) {
                return None;
            }
        }

        Some((grad, hess))
    }

    /// Pull the anchor allocation strictly inside the budget box.
    fn interior_shares(&self, anchored: &[f64], min: f64, total: f64) -> Vec<f64> {
        let n = anchored.len() as f64;
        let headroom = total - n * min;
        let lo = min + 1e-9 * headroom / n;
        let mut v: Vec<f64> = anchored.iter().map(|&a| a.max(lo)).collect();
        let target = total - 1e-9 * headroom;
        let sum: f64 = v.iter().sum();
        if sum > target {
            let scale = (target - n * min) / (sum - n * min);
            for vi in &mut v {
                *vi = min + (*vi - min) * scale;
            }
        }
        v
    }

    /// Strictly feasible start for the linearized constraint set.
    fn start_point(&self, anchor: &Anchor) -> Result<DVector<f64>> {
        let u = self.n_users();
        let mut v = DVector::zeros(self.n_vars);
        let b0 = if self.b_free {
            let shares = self.interior_shares(&anchor.b, self.b_min, self.b_avail);
            for (i, &b) in shares.iter().enumerate() {
                v[self.off_b + i] = b;
            }
            shares
        } else {
            vec![self.b_min; u]
        };
        let p0 = if self.p_free {
            let shares = self.interior_shares(&anchor.p, self.p_min, self.p_avail);
            for (i, &p) in shares.iter().enumerate() {
                v[self.off_p + i] = p;
            }
            shares
        } else {
            vec![self.p_min; u]
        };

        for i in 0..u {
            let q0 = self.kappas[i] / b0[i] * (1.0 + 1e-6) + 1e-12;
            let m0 = (libm::exp2(q0) - 1.0) * (1.0 + 1e-6) + 1e-12;
            let z0 = linearize_bilinear_z(b0[i], m0, anchor.b[i], anchor.m[i]) * (1.0 + 1e-6)
                + 1e-12;
            if !m0.is_finite() || !z0.is_finite() {
                return Err(Error::AnchorInfeasible(format!(
                    "slack chain overflows for user {i} (q = {q0})"
                )));
            }
            let x0 = match self.xp {
                XpLinearization::Corrected => {
                    let disc = 4.0 * p0[i] * anchor.sx[i] - 4.0 * self.cs[i] * z0;
                    if disc <= 0.0 {
                        return Err(Error::AnchorInfeasible(format!(
                            "no strictly feasible tail argument for user {i}"
                        )));
                    }
                    let r = disc.sqrt();
                    (p0[i] + anchor.sx[i]) - r + 0.02 * r
                }
                XpLinearization::Uncorrected => {
                    let denom = 2.0 * (anchor.sx[i] - anchor.dx[i]);
                    if denom <= 0.0 {
                        return Err(Error::AnchorInfeasible(format!(
                            "degenerate anchor for user {i}"
                        )));
                    }
                    let x_min = (4.0 * self.cs[i] * z0
                        - 2.0 * p0[i] * (anchor.sx[i] + anchor.dx[i]))
                        / denom;
                    x_min.max(0.0) + x_min.abs().max(1.0) * 1e-6
                }
            };
            let y0 = -0.5 * x0 * x0 - (0.5 * x0 * x0 * 1e-9).max(1e-12);
            let bound = anchor.e[i] * (1.0 + y0 - anchor.y[i]);
            let f0 = bound - bound.abs().max(1.0) * 1e-9;

            v[self.off_q + i] = q0;
            v[self.off_m + i] = m0;
            v[self.off_z + i] = z0;
            v[self.off_x + i] = x0;
            v[self.off_y + i] = y0;
            v[self.off_f + i] = f0;
        }

        let mut g = Vec::new();
        self.constraint_values(anchor, &v, &mut g);
        if let Some((k, &bad)) = g
            .iter()
            .enumerate()
            .find(|(_, &gv)| !(gv < 0.0) || !gv.is_finite())
        {
            return Err(Error::AnchorInfeasible(format!(
                "constructed start violates linearized constraint {k} (g = {bad})"
            )));
        }
        Ok(v)
    }

    /// Diagonal preconditioner built from the start point: every variable is
    /// rescaled to unit order before the Newton solve.
    fn scales(&self, start: &DVector<f64>) -> DVector<f64> {
        let mut s = DVector::from_element(self.n_vars, 1.0);
        for a in 0..self.n_vars {
            s[a] = start[a].abs().max(1e-6);
        }
        // f sits in [~0, 1]; keep it at unit scale even when it starts tiny.
        for i in 0..self.n_users() {
            s[self.off_f + i] = 1.0;
        }
        s
    }

    fn newton_center(
        &self,
        anchor: &Anchor,
        v: &mut DVector<f64>,
        t: f64,
        scales: &DVector<f64>,
        cfg: &BarrierConfig,
        g_buf: &mut Vec<f64>,
    ) {
        for _ in 0..cfg.max_newton {
            let Some((grad, hess)) = self.assemble(anchor, v, t) else {
                return;
            };
            // Precondition: solve (S H S) d' = -(S g), step = S d'.
            let n = self.n_vars;
            let mut h = hess;
            let mut sg = DVector::zeros(n);
            for a in 0..n {
                sg[a] = scales[a] * grad[a];
                for b in 0..n {
                    h[(a, b)] *= scales[a] * scales[b];
                }
            }
            let base = h.diagonal().amax().max(1e-300);
            let mut solved = None;
            let mut ridge = 0.0;
            for _ in 0..8 {
                let mut trial = h.clone();
                if ridge > 0.0 {
                    for a in 0..n {
                        trial[(a, a)] += ridge;
                    }
                }
                if let Some(chol) = Cholesky::new(trial) {
                    solved = Some(chol.solve(&(-&sg)));
                    break;
                }
                ridge = if ridge == 0.0 { base * 1e-14 } else { ridge * 100.0 };
            }
            let Some(dp) = solved else {
                return;
            };
            let mut delta = DVector::zeros(n);
            for a in 0..n {
                delta[a] = scales[a] * dp[a];
            }
            let lambda_sq = -grad.dot(&delta);
            if !lambda_sq.is_finite() || lambda_sq <= 0.0 {
                return;
            }
            if 0.5 * lambda_sq < cfg.newton_tol {
                return;
            }
            let Some(psi0) = self.psi(anchor, v, t, g_buf) else {
                return;
            };
            let slope = grad.dot(&delta);
            let mut sigma = 1.0;
            let mut stepped = false;
            while sigma >= 1e-16 {
                let cand = &*v + sigma * &delta;
                if let Some(p) = self.psi(anchor, &cand, t, g_buf) {
                    if p <= psi0 + 0.25 * sigma * slope {
                        *v = cand;
                        stepped = true;
                        break;
                    }
                }
                sigma *= 0.5;
            }
            if !stepped {
                return;
            }
        }
    }

    /// Run the barrier schedule from a start built out of the anchors.
    pub(crate) fn solve(&self, anchor: &Anchor, cfg: &BarrierConfig) -> Result<DVector<f64>> {
        let mut v = self.start_point(anchor)?;
        let scales = self.scales(&v);
        let m_cons = self.n_cons() as f64;
        let mut g_buf = Vec::with_capacity(self.n_cons());
        let mut t = cfg.t_init.max(1e-6);
        for _ in 0..cfg.max_stages {
            self.newton_center(anchor, &mut v, t, &scales, cfg, &mut g_buf);
            if m_cons / t < cfg.duality_tol {
                break;
            }
            t *= cfg.mu;
        }
        Ok(v)
    }

    /// Split the solution into per-user bandwidth, power, and slack state.
    pub(crate) fn extract(&self, v: &DVector<f64>) -> (Vec<f64>, Vec<f64>, SlackState) {
        let u = self.n_users();
        let mut bandwidth = Vec::with_capacity(u);
        let mut power = Vec::with_capacity(u);
        let mut slack = SlackState {
            f: vec![0.0; u],
            y: vec![0.0; u],
            x: vec![0.0; u],
            m: vec![0.0; u],
            q: vec![0.0; u],
            z: vec![0.0; u],
        };
        for i in 0..u {
            bandwidth.push(self.b_of(v, i));
            power.push(self.p_of(v, i));
            slack.f[i] = v[self.off_f + i];
            slack.y[i] = v[self.off_y + i];
            slack.x[i] = v[self.off_x + i];
            slack.m[i] = v[self.off_m + i];
            slack.q[i] = v[self.off_q + i];
            slack.z[i] = v[self.off_z + i];
        }
        (bandwidth, power, slack)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::UserLink;

    fn two_user_setup() -> (Vec<UserLink>, Vec<f64>, Vec<f64>, Budgets) {
        // Tail arguments near unity at the equal split: the allocation
        // meaningfully moves the objective.
        let budgets = Budgets::new(1e4, 1e6, 1e-5, 1e-2).unwrap();
        let links = vec![
            UserLink::new(1e5, 5e-3, 1e-6, 3.981e-21, 5e5, 5e-3).unwrap(),
            UserLink::new(1e5, 7e-3, 6e-7, 3.981e-21, 5e5, 5e-3).unwrap(),
        ];
        let o = vec![0.55, 0.6];
        let alphas = vec![0.6, 0.55];
        (links, o, alphas, budgets)
    }

    fn build_problem(
        links: &[UserLink],
        o: &[f64],
        alphas: &[f64],
        budgets: &Budgets,
    ) -> (BarrierProblem, Anchor) {
        let free: Vec<usize> = (0..links.len()).collect();
        let problem = BarrierProblem::build(
            &free,
            o,
            alphas,
            budgets,
            links,
            budgets.b_max_hz,
            budgets.p_max_w,
            XpLinearization::Corrected,
        )
        .unwrap();
        let bw: Vec<f64> = links.iter().map(|l| l.bandwidth_hz()).collect();
        let pw: Vec<f64> = links.iter().map(|l| l.power_w()).collect();
        let anchor = Anchor::from_allocation(&problem, &bw, &pw).unwrap();
        (problem, anchor)
    }

    #[test]
    fn start_point_is_strictly_feasible() {
        let (links, o, alphas, budgets) = two_user_setup();
        let (problem, anchor) = build_problem(&links, &o, &alphas, &budgets);
        let v = problem.start_point(&anchor).unwrap();
        let mut g = Vec::new();
        problem.constraint_values(&anchor, &v, &mut g);
        assert_eq!(g.len(), problem.n_cons());
        for (k, gv) in g.iter().enumerate() {
            assert!(*gv < 0.0, "constraint {k} not strict: {gv}");
        }
    }

    /// A point inside the linearized feasible set with slack margins much
    /// wider than the finite-difference probes. The set is a narrow tube
    /// around the anchor in the (m, z) directions, so margins are small and
    /// multiplicative.
    fn deep_interior_point(problem: &BarrierProblem, anchor: &Anchor) -> DVector<f64> {
        let u = problem.n_users();
        let mut v = DVector::zeros(problem.n_vars);
        for i in 0..u {
            let b = anchor.b[i] * (1.0 - 1e-4);
            let p = anchor.p[i] * (1.0 - 1e-4);
            if problem.b_free {
                v[problem.off_b + i] = b;
            }
            if problem.p_free {
                v[problem.off_p + i] = p;
            }
            let q = problem.kappas[i] / b * (1.0 + 1e-4);
            let m = (libm::exp2(q) - 1.0) * (1.0 + 1e-4);
            let z = linearize_bilinear_z(b, m, anchor.b[i], anchor.m[i]) * (1.0 + 1e-4);
            let disc = 4.0 * p * anchor.sx[i] - 4.0 * problem.cs[i] * z;
            assert!(disc > 0.0, "interior test point needs headroom");
            let r = disc.sqrt();
            let x = (p + anchor.sx[i]) - 0.7 * r;
            let y = -0.5 * x * x - 0.5;
            let f = anchor.e[i] * (1.0 + y - anchor.y[i]) - 0.2 * (anchor.e[i].abs() + 1.0);
            v[problem.off_q + i] = q;
            v[problem.off_m + i] = m;
            v[problem.off_z + i] = z;
            v[problem.off_x + i] = x;
            v[problem.off_y + i] = y;
            v[problem.off_f + i] = f;
        }
        let mut g = Vec::new();
        problem.constraint_values(anchor, &v, &mut g);
        for (k, gv) in g.iter().enumerate() {
            assert!(*gv < 0.0, "interior point violates constraint {k}: {gv}");
        }
        v
    }

    #[test]
    fn assembled_gradient_matches_finite_differences() {
        let (links, o, alphas, budgets) = two_user_setup();
        let (problem, anchor) = build_problem(&links, &o, &alphas, &budgets);
        let v = deep_interior_point(&problem, &anchor);
        let t = 3.0;
        let (grad, hess) = problem.assemble(&anchor, &v, t).unwrap();
        let mut g_buf = Vec::new();

        let psi_at = |v: &DVector<f64>, buf: &mut Vec<f64>| problem.psi(&anchor, v, t, buf).unwrap();
        for a in 0..problem.n_vars {
            let h = 1e-7 * v[a].abs().max(1e-3);
            let mut up = v.clone();
            let mut dn = v.clone();
            up[a] += h;
            dn[a] -= h;
            let fd = (psi_at(&up, &mut g_buf) - psi_at(&dn, &mut g_buf)) / (2.0 * h);
            let denom = grad[a].abs().max(fd.abs()).max(1e-3);
            assert!(
                (grad[a] - fd).abs() / denom < 2e-3,
                "gradient entry {a}: analytic {} vs fd {fd}",
                grad[a]
            );
        }

        // Hessian spot-check via second differences of the gradient.
        for a in 0..problem.n_vars {
            let h = 1e-7 * v[a].abs().max(1e-3);
            let mut up = v.clone();
            let mut dn = v.clone();
            up[a] += h;
            dn[a] -= h;
            let gu = problem.assemble(&anchor, &up, t).unwrap().0;
            let gd = problem.assemble(&anchor, &dn, t).unwrap().0;
            for b in 0..problem.n_vars {
                let fd = (gu[b] - gd[b]) / (2.0 * h);
                let denom = hess[(a, b)].abs().max(fd.abs()).max(1.0);
                assert!(
                    (hess[(a, b)] - fd).abs() / denom < 5e-3,
                    "hessian entry ({a},{b}): analytic {} vs fd {fd}",
                    hess[(a, b)]
                );
            }
        }
    }

    #[test]
    fn single_user_pushes_to_budget_boundary() {
        // Active regime: the tail argument at the full budget is ~2, so the
        // objective strictly prefers the boundary.
        let budgets = Budgets::new(1e4, 1e6, 1e-5, 1e-2).unwrap();
        let link = UserLink::new(2e5, 5e-3, 2e-7, 3.981e-21, 1e6, 1e-2).unwrap();
        let links = vec![link];
        let o = vec![0.5];
        let alphas = vec![0.62];
        let (problem, anchor) = build_problem(&links, &o, &alphas, &budgets);
        let v = problem.solve(&anchor, &BarrierConfig::default()).unwrap();
        let (bw, pw, _) = problem.extract(&v);
        assert!(
            bw[0] > 0.999 * budgets.b_max_hz,
            "bandwidth {} should approach the total {}",
            bw[0],
            budgets.b_max_hz
        );
        assert!(
            pw[0] > 0.999 * budgets.p_max_w,
            "power {} should approach the total {}",
            pw[0],
            budgets.p_max_w
        );
    }
}
