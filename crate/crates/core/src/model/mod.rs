//! Game data model: preference aggregates, policies, winning probability,
//! payoffs with their derivatives, and the two rationality predicates.
//!
//! A policy is a point of `S = { z in [-1,1]^k : |z| <= 1 }`. Party `X`
//! wins with probability `p_A = 1/2 + (z_A - z_B)^T Q / 8` (and
//! `p_B = 1 - p_A`), and its payoff is the expected utility its own
//! supporters receive from whichever policy wins.

mod polar;

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{GameError, Result};
use crate::linalg::{add, angle_between, dot, norm, scale};
use crate::tol;

pub use polar::{
    from_polar, payoff_polar, plane_basis, to_polar, PlaneBasis, PolarDecomposition, PolarPolicy,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Party {
    A,
    B,
}

impl Party {
    pub const BOTH: [Party; 2] = [Party::A, Party::B];

    pub fn other(self) -> Party {
        match self {
            Party::A => Party::B,
            Party::B => Party::A,
        }
    }
}

impl fmt::Display for Party {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Party::A => f.write_str("A"),
            Party::B => f.write_str("B"),
        }
    }
}

/// Checks `z in S` with a slack of [`tol::GEOMETRY`].
pub fn in_domain(z: &[f64]) -> bool {
    z.iter()
        .all(|c| c.is_finite() && c.abs() <= 1.0 + tol::GEOMETRY)
        && norm(z) <= 1.0 + tol::GEOMETRY
}

/// The preference vectors of one party's supporters.
#[derive(Debug, Clone, PartialEq)]
pub struct PreferenceSet {
    party: Party,
    dim: usize,
    voters: Vec<Vec<f64>>,
}

impl PreferenceSet {
    pub fn new(party: Party, dim: usize, voters: Vec<Vec<f64>>) -> Result<Self> {
        if dim == 0 {
            return Err(GameError::DimensionTooSmall { min: 1, found: 0 });
        }
        for (i, q) in voters.iter().enumerate() {
            if q.len() != dim {
                return Err(GameError::DimensionMismatch {
                    expected: dim,
                    found: q.len(),
                });
            }
            if !in_domain(q) {
                return Err(GameError::OutsideDomain(format!(
                    "voter {i} of party {party} has norm {}",
                    norm(q)
                )));
            }
        }
        Ok(Self { party, dim, voters })
    }

    pub fn party(&self) -> Party {
        self.party
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn voters(&self) -> &[Vec<f64>] {
        &self.voters
    }

    pub fn len(&self) -> usize {
        self.voters.len()
    }

    pub fn is_empty(&self) -> bool {
        self.voters.is_empty()
    }

    /// Coordinatewise sum of the preference vectors.
    pub fn total(&self) -> Vec<f64> {
        let mut sum = vec![0.0; self.dim];
        for q in &self.voters {
            for (s, c) in sum.iter_mut().zip(q) {
                *s += c;
            }
        }
        sum
    }
}

/// Which aggregates vanish. A zero aggregate leaves the corresponding angle
/// undefined; it is reported as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegenerateFlags {
    pub zero_q_a: bool,
    pub zero_q_b: bool,
    pub zero_q: bool,
}

impl DegenerateFlags {
    pub fn any(&self) -> bool {
        self.zero_q_a || self.zero_q_b || self.zero_q
    }
}

/// Aggregated preferences `Q_A`, `Q_B`, their sum `Q`, and the angles
/// `rho_X = angle(Q_X, Q)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GameInstance {
    k: usize,
    q_a: Vec<f64>,
    q_b: Vec<f64>,
    q: Vec<f64>,
    rho_a: f64,
    rho_b: f64,
    degenerate_flags: DegenerateFlags,
}

impl GameInstance {
    /// Builds an instance from aggregate vectors, rejecting `|Q_X| > 1`.
    pub fn new(q_a: Vec<f64>, q_b: Vec<f64>) -> Result<Self> {
        Self::from_aggregates(q_a, q_b, false)
    }

    /// Builds an instance from aggregate vectors. With `rescale`, aggregates
    /// exceeding unit norm are both divided by `max(|Q_A|, |Q_B|)`.
    pub fn from_aggregates(mut q_a: Vec<f64>, mut q_b: Vec<f64>, rescale: bool) -> Result<Self> {
        let k = q_a.len();
        if k == 0 {
            return Err(GameError::DimensionTooSmall { min: 1, found: 0 });
        }
        if q_b.len() != k {
            return Err(GameError::DimensionMismatch {
                expected: k,
                found: q_b.len(),
            });
        }
        if q_a.iter().chain(&q_b).any(|c| !c.is_finite()) {
            return Err(GameError::param("aggregate", "non-finite coordinate"));
        }
        let (na, nb) = (norm(&q_a), norm(&q_b));
        let largest = na.max(nb);
        if largest > 1.0 + tol::GEOMETRY {
            if rescale {
                q_a = scale(&q_a, 1.0 / largest);
                q_b = scale(&q_b, 1.0 / largest);
            } else {
                let (party, norm) = if na >= nb {
                    (Party::A, na)
                } else {
                    (Party::B, nb)
                };
                return Err(GameError::NormalizationViolated { party, norm });
            }
        }
        let q = add(&q_a, &q_b);
        let degenerate_flags = DegenerateFlags {
            zero_q_a: norm(&q_a) == 0.0,
            zero_q_b: norm(&q_b) == 0.0,
            zero_q: norm(&q) == 0.0,
        };
        let rho_a = angle_between(&q_a, &q);
        let rho_b = angle_between(&q_b, &q);
        Ok(Self {
            k,
            q_a,
            q_b,
            q,
            rho_a,
            rho_b,
            degenerate_flags,
        })
    }

    /// Sums each party's voter preferences into an instance.
    pub fn aggregate(
        prefs_a: &PreferenceSet,
        prefs_b: &PreferenceSet,
        rescale: bool,
    ) -> Result<Self> {
        if prefs_a.dim() != prefs_b.dim() {
            return Err(GameError::DimensionMismatch {
                expected: prefs_a.dim(),
                found: prefs_b.dim(),
            });
        }
        Self::from_aggregates(prefs_a.total(), prefs_b.total(), rescale)
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn q_a(&self) -> &[f64] {
        &self.q_a
    }

    pub fn q_b(&self) -> &[f64] {
        &self.q_b
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn rho_a(&self) -> f64 {
        self.rho_a
    }

    pub fn rho_b(&self) -> f64 {
        self.rho_b
    }

    pub fn degenerate_flags(&self) -> DegenerateFlags {
        self.degenerate_flags
    }

    pub fn aggregate_of(&self, party: Party) -> &[f64] {
        match party {
            Party::A => &self.q_a,
            Party::B => &self.q_b,
        }
    }

    pub fn rho(&self, party: Party) -> f64 {
        match party {
            Party::A => self.rho_a,
            Party::B => self.rho_b,
        }
    }

    pub fn is_degenerate_party(&self, party: Party) -> bool {
        match party {
            Party::A => self.degenerate_flags.zero_q_a,
            Party::B => self.degenerate_flags.zero_q_b,
        }
    }

    pub fn is_consensus_reachable(&self) -> bool {
        is_consensus_reachable(self)
    }
}

/// A point of the policy domain `S`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Policy(Vec<f64>);

impl Policy {
    pub fn new(z: Vec<f64>) -> Result<Self> {
        if z.is_empty() {
            return Err(GameError::DimensionTooSmall { min: 1, found: 0 });
        }
        if !in_domain(&z) {
            return Err(GameError::OutsideDomain(format!(
                "policy has norm {} and max coordinate {}",
                norm(&z),
                z.iter().fold(0.0_f64, |m, c| m.max(c.abs()))
            )));
        }
        Ok(Self(z))
    }

    /// Like [`Policy::new`] but first removes floating-point slop: coordinates
    /// beyond the box by at most [`tol::GEOMETRY`] are clamped, and a norm in
    /// `(1, 1 + tol]` is scaled back to 1.
    pub(crate) fn new_clamped(mut z: Vec<f64>) -> Result<Self> {
        for c in z.iter_mut() {
            if c.abs() > 1.0 && c.abs() <= 1.0 + tol::GEOMETRY {
                *c = c.signum();
            }
        }
        let n = norm(&z);
        if n > 1.0 && n <= 1.0 + tol::GEOMETRY {
            z.iter_mut().for_each(|c| *c /= n);
        }
        Self::new(z)
    }

    pub fn zeros(k: usize) -> Self {
        Self(vec![0.0; k])
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn norm(&self) -> f64 {
        norm(&self.0)
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl AsRef<[f64]> for Policy {
    fn as_ref(&self) -> &[f64] {
        &self.0
    }
}

impl TryFrom<Vec<f64>> for Policy {
    type Error = GameError;

    fn try_from(z: Vec<f64>) -> Result<Self> {
        Policy::new(z)
    }
}

impl From<Policy> for Vec<f64> {
    fn from(p: Policy) -> Self {
        p.0
    }
}

/// A joint state `(z_A, z_B)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Profile {
    pub a: Policy,
    pub b: Policy,
}

impl Profile {
    pub fn new(a: Policy, b: Policy) -> Result<Self> {
        if a.dim() != b.dim() {
            return Err(GameError::DimensionMismatch {
                expected: a.dim(),
                found: b.dim(),
            });
        }
        Ok(Self { a, b })
    }

    pub fn get(&self, party: Party) -> &Policy {
        match party {
            Party::A => &self.a,
            Party::B => &self.b,
        }
    }

    /// Replaces one party's policy, keeping the opponent's.
    pub fn with(&self, party: Party, policy: Policy) -> Profile {
        match party {
            Party::A => Profile {
                a: policy,
                b: self.b.clone(),
            },
            Party::B => Profile {
                a: self.a.clone(),
                b: policy,
            },
        }
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

fn check_dims(profile: &Profile, inst: &GameInstance) {
    assert_eq!(
        profile.dim(),
        inst.k(),
        "profile dimension does not match the instance"
    );
}

/// `(p_A, p_B)` under the linear link with normalization factor 1/8.
pub fn win_prob(profile: &Profile, inst: &GameInstance) -> (f64, f64) {
    check_dims(profile, inst);
    let p_a = win_prob_from_dots(
        dot(profile.a.as_slice(), inst.q()),
        dot(profile.b.as_slice(), inst.q()),
    );
    (p_a, 1.0 - p_a)
}

pub(crate) fn win_prob_from_dots(za_q: f64, zb_q: f64) -> f64 {
    0.5 + 0.125 * (za_q - zb_q)
}

/// `R_X = p_X * own^T Q_X + (1 - p_X) * other^T Q_X` evaluated from the
/// four inner products that determine it.
#[inline]
pub(crate) fn payoff_from_dots(own_q: f64, other_q: f64, own_qx: f64, other_qx: f64) -> f64 {
    let p = win_prob_from_dots(own_q, other_q);
    p * own_qx + (1.0 - p) * other_qx
}

/// Expected utility party `party`'s supporters receive.
pub fn payoff(profile: &Profile, inst: &GameInstance, party: Party) -> f64 {
    check_dims(profile, inst);
    let own = profile.get(party).as_slice();
    let other = profile.get(party.other()).as_slice();
    let qx = inst.aggregate_of(party);
    let (p_a, p_b) = win_prob(profile, inst);
    let p_own = match party {
        Party::A => p_a,
        Party::B => p_b,
    };
    p_own * dot(own, qx) + (1.0 - p_own) * dot(other, qx)
}

/// Gradient of `R_X` with respect to the party's own policy:
/// `Q_X / 2 + (own - other)^T Q * Q_X / 8 + (own - other)^T Q_X * Q / 8`.
pub fn grad_payoff(profile: &Profile, inst: &GameInstance, party: Party) -> Vec<f64> {
    check_dims(profile, inst);
    let own = profile.get(party).as_slice();
    let other = profile.get(party.other()).as_slice();
    let qx = inst.aggregate_of(party);
    let q = inst.q();
    let total_gap = dot(own, q) - dot(other, q);
    let own_gap = dot(own, qx) - dot(other, qx);
    qx.iter()
        .zip(q)
        .map(|(&x, &t)| 0.5 * x + 0.125 * total_gap * x + 0.125 * own_gap * t)
        .collect()
}

/// Entry `[i, j]` of the (profile-independent) Hessian of `R_X` in the
/// party's own policy.
pub fn hessian_entry(inst: &GameInstance, party: Party, i: usize, j: usize) -> Result<f64> {
    let k = inst.k();
    if i >= k || j >= k {
        return Err(GameError::IndexOutOfRange { i, j, k });
    }
    let qx = inst.aggregate_of(party);
    let q = inst.q();
    Ok(0.125 * (q[i] * qx[j] + q[j] * qx[i]))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EgoisticCheck {
    pub holds: bool,
    /// `z_A^T Q_A - z_B^T Q_A`
    pub slack_a: f64,
    /// `z_B^T Q_B - z_A^T Q_B`
    pub slack_b: f64,
}

/// Each party's policy gives its own supporters no less utility than the
/// opponent's policy does.
pub fn is_egoistic(profile: &Profile, inst: &GameInstance) -> EgoisticCheck {
    check_dims(profile, inst);
    let (za, zb) = (profile.a.as_slice(), profile.b.as_slice());
    let slack_a = dot(za, inst.q_a()) - dot(zb, inst.q_a());
    let slack_b = dot(zb, inst.q_b()) - dot(za, inst.q_b());
    EgoisticCheck {
        holds: slack_a >= -tol::GEOMETRY && slack_b >= -tol::GEOMETRY,
        slack_a,
        slack_b,
    }
}

/// `Q_A^T Q >= 0` and `Q_B^T Q >= 0`.
pub fn is_consensus_reachable(inst: &GameInstance) -> bool {
    dot(inst.q_a(), inst.q()) >= 0.0 && dot(inst.q_b(), inst.q()) >= 0.0
}
