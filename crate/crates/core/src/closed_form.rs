//! Exact pure equilibrium for one-dimensional policies.
//!
//! With `k = 1`, `R_A = (z_A + z_B) Q_A / 2 + Q Q_A (z_A - z_B)^2 / 8`, so
//! `R_A` is convex in `z_A` when `Q Q_A >= 0` (optimum on the boundary
//! `sgn Q`) and concave otherwise (optimum at the stationary point
//! `1 - 2/Q`, clipped to `[-1, 1]`).

use serde::Serialize;

use crate::error::{GameError, Result};
use crate::tol;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ScalarInstance {
    q_a: f64,
    q_b: f64,
    relaxed: bool,
}

impl ScalarInstance {
    /// Strict instances need `|Q_X| <= 1`. Relaxed instances may exceed that
    /// but still need `|Q| <= 2`, which keeps the winning probability in
    /// `[0, 1]`.
    pub fn new(q_a: f64, q_b: f64, relaxed: bool) -> Result<Self> {
        if !q_a.is_finite() || !q_b.is_finite() {
            return Err(GameError::param("q", "non-finite aggregate"));
        }
        if !relaxed {
            for (name, v) in [("qa", q_a), ("qb", q_b)] {
                if v.abs() > 1.0 + tol::GEOMETRY {
                    return Err(GameError::param(
                        name,
                        format!("|{v}| > 1 violates the normalization (use the relaxed flag)"),
                    ));
                }
            }
        }
        if (q_a + q_b).abs() > 2.0 + tol::GEOMETRY {
            return Err(GameError::param(
                "q",
                format!("|Q_A + Q_B| = {} exceeds 2", (q_a + q_b).abs()),
            ));
        }
        Ok(Self { q_a, q_b, relaxed })
    }

    pub fn q_a(&self) -> f64 {
        self.q_a
    }

    pub fn q_b(&self) -> f64 {
        self.q_b
    }

    pub fn q(&self) -> f64 {
        self.q_a + self.q_b
    }

    pub fn relaxed(&self) -> bool {
        self.relaxed
    }

    /// `(R_A, R_B)` at scalar policies.
    pub fn payoffs(&self, z_a: f64, z_b: f64) -> (f64, f64) {
        let q = self.q();
        let gap2 = (z_a - z_b) * (z_a - z_b);
        let r_a = 0.5 * (z_a + z_b) * self.q_a + 0.125 * q * self.q_a * gap2;
        let r_b = 0.5 * (z_a + z_b) * self.q_b + 0.125 * q * self.q_b * gap2;
        (r_a, r_b)
    }
}

/// Where the minority party's stationary point landed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// Clipped to the boundary (`|Q| < 1`).
    Boundary,
    /// Interior optimum `±1 - 2/Q`.
    Interior,
}

/// Which case of the closed form produced the profile.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Case1d {
    /// `Q Q_X >= 0` for both parties: both sit at `sgn Q`.
    Aligned,
    /// `Q = 0`: each party takes `sgn Q_X`.
    Balanced,
    /// `Q Q_A < 0`: B is at `sgn Q`, A optimizes a concave payoff.
    MinorityA(Branch),
    /// `Q Q_B < 0`: A is at `sgn Q`, B optimizes a concave payoff.
    MinorityB(Branch),
}

impl Case1d {
    pub fn tag(&self) -> &'static str {
        match self {
            Case1d::Aligned => "aligned",
            Case1d::Balanced => "balanced",
            Case1d::MinorityA(Branch::Boundary) => "minority_a_boundary",
            Case1d::MinorityA(Branch::Interior) => "minority_a_interior",
            Case1d::MinorityB(Branch::Boundary) => "minority_b_boundary",
            Case1d::MinorityB(Branch::Interior) => "minority_b_interior",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Solution1d {
    pub z_a: f64,
    pub z_b: f64,
    pub case: Case1d,
}

fn sign_or_plus(v: f64) -> f64 {
    if v < 0.0 {
        -1.0
    } else {
        1.0
    }
}

/// Best policy of a party whose aggregate has the opposite sign to `Q`.
fn minority_response(q: f64) -> (f64, Branch) {
    if q > 0.0 {
        if q < 1.0 {
            (-1.0, Branch::Boundary)
        } else {
            (1.0 - 2.0 / q, Branch::Interior)
        }
    } else if q >= -1.0 {
        (1.0, Branch::Boundary)
    } else {
        (-1.0 - 2.0 / q, Branch::Interior)
    }
}

pub fn solve_1d(inst: &ScalarInstance) -> Solution1d {
    let (q_a, q_b, q) = (inst.q_a(), inst.q_b(), inst.q());
    if q == 0.0 {
        // Winning probability is constant, payoff reduces to (z_A + z_B) Q_X / 2.
        return Solution1d {
            z_a: sign_or_plus(q_a),
            z_b: sign_or_plus(q_b),
            case: Case1d::Balanced,
        };
    }
    let boundary = q.signum();
    if q * q_a < 0.0 {
        let (z_a, branch) = minority_response(q);
        Solution1d {
            z_a,
            z_b: boundary,
            case: Case1d::MinorityA(branch),
        }
    } else if q * q_b < 0.0 {
        let (z_b, branch) = minority_response(q);
        Solution1d {
            z_a: boundary,
            z_b,
            case: Case1d::MinorityB(branch),
        }
    } else {
        Solution1d {
            z_a: boundary,
            z_b: boundary,
            case: Case1d::Aligned,
        }
    }
}

/// Largest payoff improvement either party can get by moving to a point of
/// a uniform grid on `[-1, 1]`. Not deviating counts, so the result is `>= 0`.
pub fn verify_1d(z_a: f64, z_b: f64, inst: &ScalarInstance, grid_points: usize) -> Result<f64> {
    if grid_points < 3 {
        return Err(GameError::param(
            "grid_points",
            "need at least 3 grid points",
        ));
    }
    let (cur_a, cur_b) = inst.payoffs(z_a, z_b);
    let step = 2.0 / (grid_points - 1) as f64;
    let mut gain = 0.0_f64;
    for i in 0..grid_points {
        let s = if i == grid_points - 1 {
            1.0
        } else {
            -1.0 + i as f64 * step
        };
        gain = gain.max(inst.payoffs(s, z_b).0 - cur_a);
        gain = gain.max(inst.payoffs(z_a, s).1 - cur_b);
    }
    Ok(gain)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(q_a: f64, q_b: f64, relaxed: bool) -> Solution1d {
        solve_1d(&ScalarInstance::new(q_a, q_b, relaxed).unwrap())
    }

    #[test]
    fn aligned_positive() {
        let s = solve(0.4, 0.5, false);
        assert_eq!((s.z_a, s.z_b, s.case), (1.0, 1.0, Case1d::Aligned));
    }

    #[test]
    fn aligned_negative() {
        let s = solve(-0.4, -0.5, false);
        assert_eq!((s.z_a, s.z_b, s.case), (-1.0, -1.0, Case1d::Aligned));
    }

    #[test]
    fn minority_interior_relaxed() {
        let s = solve(-0.5, 2.0, true);
        assert_eq!(s.z_b, 1.0);
        assert!((s.z_a + 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(s.case, Case1d::MinorityA(Branch::Interior));
    }

    #[test]
    fn minority_boundary() {
        let s = solve(-0.2, 0.9, false);
        assert_eq!((s.z_a, s.z_b), (-1.0, 1.0));
        assert_eq!(s.case, Case1d::MinorityA(Branch::Boundary));

        let s = solve(0.9, -0.2, false);
        assert_eq!((s.z_a, s.z_b), (1.0, -1.0));
        assert_eq!(s.case, Case1d::MinorityB(Branch::Boundary));
    }

    #[test]
    fn mirrored_interior_branch() {
        // Q = -1.5 < -1, Q_A > 0: z_A = -1 - 2/Q = 1/3.
        let s = solve(0.5, -2.0, true);
        assert_eq!(s.z_b, -1.0);
        assert!((s.z_a - 1.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn zero_aggregates() {
        let s = solve(0.0, 0.5, false);
        assert_eq!((s.z_a, s.z_b, s.case), (1.0, 1.0, Case1d::Aligned));
        let s = solve(0.0, -0.5, false);
        assert_eq!((s.z_a, s.z_b), (-1.0, -1.0));
        let s = solve(0.3, -0.3, false);
        assert_eq!((s.z_a, s.z_b, s.case), (1.0, -1.0, Case1d::Balanced));
        let s = solve(0.0, 0.0, false);
        assert_eq!((s.z_a, s.z_b), (1.0, 1.0));
    }

    #[test]
    fn validation() {
        assert!(ScalarInstance::new(2.0, 0.0, false).is_err());
        assert!(ScalarInstance::new(2.0, 0.0, true).is_ok());
        assert!(ScalarInstance::new(1.5, 1.0, true).is_err());
        assert!(ScalarInstance::new(f64::NAN, 0.0, true).is_err());
    }

    #[test]
    fn verify_examples() {
        let inst = ScalarInstance::new(0.4, 0.5, false).unwrap();
        let s = solve_1d(&inst);
        assert!(verify_1d(s.z_a, s.z_b, &inst, 2001).unwrap() <= 2e-3);

        // From (0, 0) each party gains by moving to +1 on its own.
        let (r_a, r_b) = inst.payoffs(0.0, 0.0);
        let gain_a = inst.payoffs(1.0, 0.0).0 - r_a;
        let gain_b = inst.payoffs(0.0, 1.0).1 - r_b;
        assert!(gain_a > 0.0 && gain_b > 0.0);
        assert!((verify_1d(0.0, 0.0, &inst, 2001).unwrap() - gain_a.max(gain_b)).abs() < 1e-15);

        let flat = ScalarInstance::new(0.0, 0.0, false).unwrap();
        assert_eq!(verify_1d(0.3, -0.7, &flat, 11).unwrap(), 0.0);
        assert!(verify_1d(0.0, 0.0, &flat, 2).is_err());
    }
}
