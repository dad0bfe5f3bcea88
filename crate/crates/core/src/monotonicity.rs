//! The game reduced to two variables `x = cos θ_A`, `y = cos θ_B` (both
//! radii at 1), its pseudo-gradient, and probes for monotonicity.
//!
//! With `C1 = cos ρ_A`, `C2 = cos ρ_B` and `M(t) = K t + L sqrt(1 - t^2)`
//! where `K = cos(ρ_A + ρ_B)`, `L = sin(ρ_A + ρ_B)`:
//!
//! ```text
//! p_A = 1/2 + |Q|/8 (C1 x + S1 sqrt(1-x^2) - C2 y - S2 sqrt(1-y^2))
//! f(x, y) = |Q_A| (p_A x + (1 - p_A) M(y))
//! g(x, y) = |Q_B| ((1 - p_A) y + p_A M(x))
//! ```
//!
//! The pseudo-gradient is `F = (df/dx, dg/dy)`. For this ascent game the
//! map would be monotone if `(F(u) - F(v))^T (u - v) <= 0` for all pairs.

use rand::Rng;
use serde::Serialize;

use crate::error::{GameError, Result};
use crate::linalg::norm;
use crate::model::GameInstance;

/// Negative `1 - t^2` larger than this in magnitude is an error.
const ROOT_SLACK: f64 = 1e-12;

fn root(t: f64) -> Result<f64> {
    let v = 1.0 - t * t;
    if v < -ROOT_SLACK {
        return Err(GameError::OutsideDomain(format!("1 - {t}^2 < 0")));
    }
    Ok(v.max(0.0).sqrt())
}

fn check_unit(name: &'static str, t: f64) -> Result<()> {
    if !(-ROOT_SLACK..=1.0 + ROOT_SLACK).contains(&t) {
        return Err(GameError::param(name, format!("{t} outside [0, 1]")));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReducedParams {
    pub norm_qa: f64,
    pub norm_qb: f64,
    pub norm_q: f64,
    pub c1: f64,
    pub c2: f64,
    pub k: f64,
    pub l: f64,
    pub d0: f64,
}

impl ReducedParams {
    pub fn new(norm_qa: f64, norm_qb: f64, norm_q: f64, c1: f64, c2: f64) -> Result<Self> {
        for (name, v) in [
            ("norm_qa", norm_qa),
            ("norm_qb", norm_qb),
            ("norm_q", norm_q),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(GameError::param(
                    name,
                    format!("{v} must be a finite non-negative norm"),
                ));
            }
        }
        for (name, c) in [("c1", c1), ("c2", c2)] {
            if !(-1.0..=1.0).contains(&c) {
                return Err(GameError::param(name, format!("{c} outside [-1, 1]")));
            }
        }
        let (s1, s2) = (root(c1)?, root(c2)?);
        Ok(Self {
            norm_qa,
            norm_qb,
            norm_q,
            c1,
            c2,
            k: c1 * c2 - s1 * s2,
            l: s1 * c2 + c1 * s2,
            d0: norm_q / 8.0,
        })
    }

    pub fn from_instance(inst: &GameInstance) -> Result<Self> {
        Self::new(
            norm(inst.q_a()),
            norm(inst.q_b()),
            norm(inst.q()),
            inst.rho_a().cos(),
            inst.rho_b().cos(),
        )
    }

    /// Norms 1, 1, 1.2 and `C1 = C2 = 0.6`.
    pub fn counterexample_params() -> Self {
        Self::new(1.0, 1.0, 1.2, 0.6, 0.6).expect("valid constants")
    }

    fn s1(&self) -> f64 {
        (1.0 - self.c1 * self.c1).max(0.0).sqrt()
    }

    fn s2(&self) -> f64 {
        (1.0 - self.c2 * self.c2).max(0.0).sqrt()
    }

    /// `cos(ρ_A + ρ_B - θ)` for `t = cos θ`.
    pub fn m(&self, t: f64) -> Result<f64> {
        Ok(self.k * t + self.l * root(t)?)
    }

    pub fn win_prob(&self, x: f64, y: f64) -> Result<f64> {
        Ok(0.5
            + self.d0 * (self.c1 * x + self.s1() * root(x)? - self.c2 * y - self.s2() * root(y)?))
    }

    /// `dp_A/dx`; infinite at `x = 1` unless `C1 = ±1`.
    pub fn dp_dx(&self, x: f64) -> Result<f64> {
        Ok(self.d0 * (self.c1 - self.s1() * x / root(x)?))
    }

    /// `dp_A/dy`; infinite at `y = 1` unless `C2 = ±1`.
    pub fn dp_dy(&self, y: f64) -> Result<f64> {
        Ok(self.d0 * (-self.c2 + self.s2() * y / root(y)?))
    }

    /// `dp_A/dθ_A` at `θ_A = arccos x`; bounded by `|Q|/4`.
    pub fn dp_dtheta_a(&self, x: f64) -> Result<f64> {
        Ok(-self.d0 * (self.c1 * root(x)? - self.s1() * x))
    }

    /// `(f, g)`, the payoffs of A and B at `(x, y)`.
    pub fn payoffs(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        let p = self.win_prob(x, y)?;
        let f = self.norm_qa * (p * x + (1.0 - p) * self.m(y)?);
        let g = self.norm_qb * ((1.0 - p) * y + p * self.m(x)?);
        Ok((f, g))
    }

    pub fn pseudo_gradient(&self, x: f64, y: f64) -> Result<(f64, f64)> {
        check_unit("x", x)?;
        check_unit("y", y)?;
        let p = self.win_prob(x, y)?;
        let f1 = self.norm_qa * (p + (x - self.m(y)?) * self.dp_dx(x)?);
        let f2 = self.norm_qb * ((1.0 - p) + (self.m(x)? - y) * self.dp_dy(y)?);
        Ok((f1, f2))
    }

    /// `(df/dθ_A, dg/dθ_B)`, i.e. `(-F1 sin θ_A, -F2 sin θ_B)`. Evaluated
    /// with the sine folded into the partials, so it stays finite at 0.
    pub fn theta_space_pseudo_gradient(&self, theta_a: f64, theta_b: f64) -> Result<(f64, f64)> {
        let range = 0.0..=std::f64::consts::FRAC_PI_2 + ROOT_SLACK;
        for (name, t) in [("theta_a", theta_a), ("theta_b", theta_b)] {
            if !range.contains(&t) {
                return Err(GameError::param(name, format!("{t} outside [0, pi/2]")));
            }
        }
        let (x, y) = (theta_a.cos(), theta_b.cos());
        let (sx, sy) = (theta_a.sin(), theta_b.sin());
        let p = self.win_prob(x, y)?;
        // sin θ * dp/dx and sin θ * dp/dy.
        let sdx = self.d0 * (self.c1 * sx - self.s1() * x);
        let sdy = self.d0 * (-self.c2 * sy + self.s2() * y);
        let g1 = -self.norm_qa * (p * sx + (x - self.m(y)?) * sdx);
        let g2 = -self.norm_qb * ((1.0 - p) * sy + (self.m(x)? - y) * sdy);
        Ok((g1, g2))
    }
}

/// `(F(u) - F(v))^T (u - v)`.
pub fn monotonicity_gap(fu: (f64, f64), fv: (f64, f64), u: (f64, f64), v: (f64, f64)) -> f64 {
    (fu.0 - fv.0) * (u.0 - v.0) + (fu.1 - fv.1) * (u.1 - v.1)
}

/// Coordinates the probe samples in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ProbeSpace {
    /// `(x, y)` in `[0, 1)^2`.
    Cosine,
    /// `(θ_A, θ_B)` in `[0, π/2)^2`.
    Angle,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeReport {
    pub space: ProbeSpace,
    pub pairs: usize,
    pub violations: usize,
    pub violation_fraction: f64,
    pub witness_u: (f64, f64),
    pub witness_v: (f64, f64),
    /// Largest gap seen (the witness pair's).
    pub s: f64,
}

fn eval_in(p: &ReducedParams, space: ProbeSpace, z: (f64, f64)) -> Result<(f64, f64)> {
    match space {
        ProbeSpace::Cosine => p.pseudo_gradient(z.0, z.1),
        ProbeSpace::Angle => p.theta_space_pseudo_gradient(z.0, z.1),
    }
}

/// Samples `pairs` random pairs and counts those with a positive gap.
pub fn monotonicity_probe<R: Rng + ?Sized>(
    p: &ReducedParams,
    pairs: usize,
    space: ProbeSpace,
    rng: &mut R,
) -> Result<ProbeReport> {
    if pairs == 0 {
        return Err(GameError::param("pairs", "must be at least 1"));
    }
    let scale = match space {
        ProbeSpace::Cosine => 1.0,
        ProbeSpace::Angle => std::f64::consts::FRAC_PI_2,
    };
    let mut draw = || (scale * rng.random::<f64>(), scale * rng.random::<f64>());
    let mut report = ProbeReport {
        space,
        pairs,
        violations: 0,
        violation_fraction: 0.0,
        witness_u: (0.0, 0.0),
        witness_v: (0.0, 0.0),
        s: f64::NEG_INFINITY,
    };
    for _ in 0..pairs {
        let (u, v) = (draw(), draw());
        let s = monotonicity_gap(eval_in(p, space, u)?, eval_in(p, space, v)?, u, v);
        if s > 0.0 {
            report.violations += 1;
        }
        if s > report.s {
            report.s = s;
            report.witness_u = u;
            report.witness_v = v;
        }
    }
    report.violation_fraction = report.violations as f64 / pairs as f64;
    Ok(report)
}

pub const COUNTEREXAMPLE_Z1: (f64, f64) = (0.49, 0.1);
pub const COUNTEREXAMPLE_Z2: (f64, f64) = (0.1, 0.94);
/// Components printed alongside the counterexample. The displayed formulas
/// do not reproduce them; kept only for comparison in reports.
pub const REPORTED_F_Z1: (f64, f64) = (0.998, -0.111);
pub const REPORTED_F_Z2: (f64, f64) = (0.675, 0.324);

/// Formula and finite-difference pseudo-gradients at a pair of points, with
/// the gap in both coordinate systems.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairCheck {
    pub z1: (f64, f64),
    pub z2: (f64, f64),
    pub f_z1: (f64, f64),
    pub f_z2: (f64, f64),
    pub fd_z1: (f64, f64),
    pub fd_z2: (f64, f64),
    /// Largest relative formula-vs-difference error over the four components.
    pub max_rel_error: f64,
    pub s: f64,
    pub s_theta: f64,
}

/// Central differences of the reduced payoffs `f` in `x` and `g` in `y`.
pub fn finite_difference_gradient(
    p: &ReducedParams,
    x: f64,
    y: f64,
    step: f64,
) -> Result<(f64, f64)> {
    let df = (p.payoffs(x + step, y)?.0 - p.payoffs(x - step, y)?.0) / (2.0 * step);
    let dg = (p.payoffs(x, y + step)?.1 - p.payoffs(x, y - step)?.1) / (2.0 * step);
    Ok((df, dg))
}

fn rel_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(1e-12)
}

pub fn check_pair(p: &ReducedParams, z1: (f64, f64), z2: (f64, f64)) -> Result<PairCheck> {
    let f_z1 = p.pseudo_gradient(z1.0, z1.1)?;
    let f_z2 = p.pseudo_gradient(z2.0, z2.1)?;
    let fd_z1 = finite_difference_gradient(p, z1.0, z1.1, 1e-6)?;
    let fd_z2 = finite_difference_gradient(p, z2.0, z2.1, 1e-6)?;
    let max_rel_error = [
        rel_error(f_z1.0, fd_z1.0),
        rel_error(f_z1.1, fd_z1.1),
        rel_error(f_z2.0, fd_z2.0),
        rel_error(f_z2.1, fd_z2.1),
    ]
    .into_iter()
    .fold(0.0, f64::max);
    let t1 = (z1.0.acos(), z1.1.acos());
    let t2 = (z2.0.acos(), z2.1.acos());
    let s_theta = monotonicity_gap(
        p.theta_space_pseudo_gradient(t1.0, t1.1)?,
        p.theta_space_pseudo_gradient(t2.0, t2.1)?,
        t1,
        t2,
    );
    Ok(PairCheck {
        z1,
        z2,
        f_z1,
        f_z2,
        fd_z1,
        fd_z2,
        max_rel_error,
        s: monotonicity_gap(f_z1, f_z2, z1, z2),
        s_theta,
    })
}
