//! Polar reduction onto the plane `span{Q_A, Q_B}`.
//!
//! For party `X` the plane gets the orthonormal basis `b1 = Q_X / |Q_X|`,
//! `b2` = unit component of `Q` orthogonal to `b1`, oriented so that
//! `Q^T b2 >= 0`. A policy at radius `r` and angle `theta` is then
//! `r (cos(theta) b1 + sin(theta) b2)`; positive angles rotate toward `Q`
//! and the canonical range is `[0, rho_X]`.

use serde::Serialize;

use super::{GameInstance, Party, Policy};
use crate::error::{GameError, Result};
use crate::linalg::{combine, dot, norm, scale};
use crate::tol;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PlaneBasis {
    pub b1: Vec<f64>,
    pub b2: Vec<f64>,
    /// `Q` is (anti)parallel to `Q_X` or zero, so `b2` is a fixed fallback
    /// direction rather than the direction toward `Q`.
    pub degenerate: bool,
}

impl PlaneBasis {
    pub fn rotate(&self, r: f64, theta: f64) -> Vec<f64> {
        combine(r * theta.cos(), &self.b1, r * theta.sin(), &self.b2)
    }

    /// In-plane coordinates `(z^T b1, z^T b2)`.
    pub fn coords(&self, z: &[f64]) -> (f64, f64) {
        (dot(z, &self.b1), dot(z, &self.b2))
    }
}

/// Gram-Schmidt basis of the party's plane, anchored at `Q_anchor`.
pub fn plane_basis(inst: &GameInstance, anchor: Party) -> Result<PlaneBasis> {
    let k = inst.k();
    if k < 2 {
        return Err(GameError::DimensionTooSmall { min: 2, found: k });
    }
    if inst.is_degenerate_party(anchor) {
        return Err(GameError::DegenerateParty(anchor));
    }
    let qx = inst.aggregate_of(anchor);
    let b1 = scale(qx, 1.0 / norm(qx));
    let q = inst.q();
    let along = dot(q, &b1);
    let perp = combine(1.0, q, -along, &b1);
    let perp_norm = norm(&perp);
    let q_norm = norm(q);
    if q_norm > 0.0 && perp_norm / q_norm >= tol::GEOMETRY {
        let b2 = scale(&perp, 1.0 / perp_norm);
        return Ok(PlaneBasis {
            b1,
            b2,
            degenerate: false,
        });
    }
    // Lowest coordinate axis with |b1[j]| <= 1/sqrt(2); one always exists
    // for a unit vector when k >= 2, and it keeps the projection well
    // conditioned.
    let j = b1
        .iter()
        .position(|c| c.abs() <= std::f64::consts::FRAC_1_SQRT_2)
        .expect("unit vector in k >= 2 has a small coordinate");
    let mut axis = vec![0.0; k];
    axis[j] = 1.0;
    let perp = combine(1.0, &axis, -b1[j], &b1);
    let b2 = scale(&perp, 1.0 / norm(&perp));
    Ok(PlaneBasis {
        b1,
        b2,
        degenerate: true,
    })
}

/// Radius and signed angle of a policy in a party's plane.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarPolicy {
    pub party: Party,
    pub r: f64,
    pub theta: f64,
}

impl PolarPolicy {
    pub fn new(party: Party, r: f64, theta: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&r) {
            return Err(GameError::param("r", format!("radius {r} outside [0, 1]")));
        }
        if !theta.is_finite() {
            return Err(GameError::param("theta", "non-finite angle"));
        }
        Ok(Self { party, r, theta })
    }

    /// Whether `theta` lies in the sufficient range `[0, rho_X]`.
    pub fn is_canonical(&self, inst: &GameInstance) -> bool {
        self.theta >= -tol::ANGLE && self.theta <= inst.rho(self.party) + tol::ANGLE
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PolarDecomposition {
    pub polar: PolarPolicy,
    /// Norm of the component orthogonal to the plane; it never affects payoffs.
    pub residual: f64,
    /// The in-plane component vanished, so the angle is arbitrary (set to 0).
    pub zero: bool,
}

pub fn from_polar(pp: &PolarPolicy, inst: &GameInstance) -> Result<Policy> {
    if !(0.0..=1.0).contains(&pp.r) {
        return Err(GameError::param(
            "r",
            format!("radius {} outside [0, 1]", pp.r),
        ));
    }
    let basis = plane_basis(inst, pp.party)?;
    Policy::new_clamped(basis.rotate(pp.r, pp.theta))
}

pub fn to_polar(z: &Policy, inst: &GameInstance, party: Party) -> Result<PolarDecomposition> {
    let basis = plane_basis(inst, party)?;
    let (c1, c2) = basis.coords(z.as_slice());
    let r = c1.hypot(c2);
    let in_plane = combine(c1, &basis.b1, c2, &basis.b2);
    let residual = norm(&combine(1.0, z.as_slice(), -1.0, &in_plane));
    let zero = r == 0.0;
    let theta = if zero { 0.0 } else { c2.atan2(c1) };
    Ok(PolarDecomposition {
        polar: PolarPolicy {
            party,
            r: r.min(1.0),
            theta,
        },
        residual,
        zero,
    })
}

/// `(R_A, R_B)` from polar coordinates of both policies.
pub fn payoff_polar(
    r_a: f64,
    theta_a: f64,
    r_b: f64,
    theta_b: f64,
    inst: &GameInstance,
) -> Result<(f64, f64)> {
    for party in Party::BOTH {
        if inst.is_degenerate_party(party) {
            return Err(GameError::DegenerateParty(party));
        }
    }
    if inst.degenerate_flags().zero_q {
        return Err(GameError::ZeroConsensus);
    }
    let (rho_a, rho_b) = (inst.rho_a(), inst.rho_b());
    let nq = norm(inst.q());
    let na = norm(inst.q_a());
    let nb = norm(inst.q_b());
    let p_a =
        0.5 + 0.125 * (r_a * nq * (rho_a - theta_a).cos() - r_b * nq * (rho_b - theta_b).cos());
    let spread = rho_a + rho_b;
    let r_a_pay =
        p_a * (r_a * na * theta_a.cos()) + (1.0 - p_a) * (r_b * na * (spread - theta_b).cos());
    let r_b_pay =
        (1.0 - p_a) * (r_b * nb * theta_b.cos()) + p_a * (r_a * nb * (spread - theta_a).cos());
    Ok((r_a_pay, r_b_pay))
}
