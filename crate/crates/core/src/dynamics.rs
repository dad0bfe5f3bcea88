//! Decentralized projected gradient ascent.
//!
//! Both parties step simultaneously along their own payoff gradient with
//! step `1/t^a`, then project back onto `S` intersected with their wedge
//! (the sector between `Q_X` and `Q` in `span{Q_A, Q_B}`). A run stops when
//! the current profile comes within `delta` of one of the last `W` iterates,
//! or after `max_iterations`. The end profile is checked against unilateral
//! deviations to a Cartesian grid in the plane.

use std::collections::VecDeque;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{GameError, Result};
use crate::linalg::{combine, dot, norm, scale};
use crate::model::{
    grad_payoff, is_consensus_reachable, payoff, payoff_from_dots, plane_basis, GameInstance,
    Party, PolarPolicy, Policy, Profile,
};
use crate::tol;

/// Wraps an angle into `(-pi, pi]`.
fn wrap(angle: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut a = angle % TAU;
    if a <= -PI {
        a += TAU;
    } else if a > PI {
        a -= TAU;
    }
    a
}

/// Maps an in-plane angle in `(-pi, pi]` outside `[0, rho]` back into the
/// wedge: negative angles reflect across the `Q_X` ray, angles above `rho`
/// across the `Q` ray. A reflection that overshoots the far ray (the angle
/// was more than one wedge width outside) falls back to the nearer ray.
fn reflect_into_wedge(phi: f64, rho: f64) -> f64 {
    let reflected = if phi < 0.0 { -phi } else { 2.0 * rho - phi };
    if (0.0..=rho).contains(&reflected) {
        reflected
    } else if phi.abs() <= wrap(phi - rho).abs() {
        0.0
    } else {
        rho
    }
}

/// Projects a raw update onto the party's feasible wedge: rescale to unit
/// norm if needed, drop the out-of-plane part, and reflect the in-plane
/// angle into `[0, rho_X]`.
pub fn project(z: &[f64], inst: &GameInstance, party: Party) -> Result<Policy> {
    if z.len() != inst.k() {
        return Err(GameError::DimensionMismatch {
            expected: inst.k(),
            found: z.len(),
        });
    }
    let basis = plane_basis(inst, party)?;
    let n = norm(z);
    let z = if n > 1.0 {
        scale(z, 1.0 / n)
    } else {
        z.to_vec()
    };
    let (c1, c2) = basis.coords(&z);
    let r = c1.hypot(c2);
    if r == 0.0 {
        return Ok(Policy::zeros(inst.k()));
    }
    let phi = c2.atan2(c1);
    let rho = inst.rho(party);
    let out = if (0.0..=rho).contains(&phi) {
        combine(c1, &basis.b1, c2, &basis.b2)
    } else {
        basis.rotate(r, reflect_into_wedge(phi, rho))
    };
    // Rounding in the basis round trip can push the norm past r.
    let target = r.min(1.0);
    let on = norm(&out);
    let out = if on > target {
        scale(&out, target / on)
    } else {
        out
    };
    Policy::new_clamped(out)
}

/// Uniform sample from the unit ball of `R^k`.
fn sample_ball<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Vec<f64> {
    loop {
        let dir: Vec<f64> = (0..k).map(|_| rng.sample(StandardNormal)).collect();
        let n = norm(&dir);
        if n > 0.0 {
            let radius = rng.random::<f64>().powf(1.0 / k as f64);
            return scale(&dir, radius / n);
        }
    }
}

/// Random instance with `Q_A`, `Q_B` independently uniform in the unit ball.
pub fn sample_instance<R: Rng + ?Sized>(k: usize, rng: &mut R) -> Result<GameInstance> {
    if k < 2 {
        return Err(GameError::DimensionTooSmall { min: 2, found: k });
    }
    let q_a = sample_ball(k, rng);
    let q_b = sample_ball(k, rng);
    GameInstance::new(q_a, q_b)
}

/// `count` instances drawn from a stream derived from `seed`, separate from
/// the per-run streams `seed + run`.
pub fn sample_instances(count: usize, k: usize, seed: u64) -> Result<Vec<GameInstance>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(1);
    (0..count).map(|_| sample_instance(k, &mut rng)).collect()
}

/// Initial profile uniform over each party's wedge sector of the unit disc.
pub fn sample_init<R: Rng + ?Sized>(inst: &GameInstance, rng: &mut R) -> Result<Profile> {
    let mut draw = |party: Party| -> Result<Policy> {
        let r = rng.random::<f64>().sqrt();
        let theta = inst.rho(party) * rng.random::<f64>();
        crate::model::from_polar(&PolarPolicy::new(party, r, theta)?, inst)
    };
    let a = draw(Party::A)?;
    let b = draw(Party::B)?;
    Profile::new(a, b)
}

/// Which sector deviations are drawn from when certifying.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum DeviationWedge {
    /// Party X deviates within its own wedge `[0, rho_X]`.
    #[default]
    Own,
    /// Party X deviates anywhere between `Q_X` and the opponent's aggregate.
    FullSpan,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainReport {
    pub gain_a: f64,
    pub gain_b: f64,
    pub max_gain: f64,
}

fn party_gain(
    profile: &Profile,
    inst: &GameInstance,
    party: Party,
    spacing: f64,
    wedge: DeviationWedge,
) -> Result<f64> {
    if inst.is_degenerate_party(party) {
        return Ok(0.0);
    }
    let basis = plane_basis(inst, party)?;
    let qx = inst.aggregate_of(party);
    let q = inst.q();
    let (b1_q, b2_q) = (dot(&basis.b1, q), dot(&basis.b2, q));
    let (b1_qx, b2_qx) = (dot(&basis.b1, qx), dot(&basis.b2, qx));
    let other = profile.get(party.other()).as_slice();
    let (other_q, other_qx) = (dot(other, q), dot(other, qx));
    let current = payoff(profile, inst, party);

    let upper = match wedge {
        DeviationWedge::Own => inst.rho(party),
        DeviationWedge::FullSpan => (inst.rho_a() + inst.rho_b()).min(std::f64::consts::PI),
    };
    let (cos_u, sin_u) = (upper.cos(), upper.sin());
    let steps = (2.0 / spacing + 1e-9).floor() as usize;
    let coord = |i: usize| (-1.0 + i as f64 * spacing).min(1.0);

    let mut best = f64::NEG_INFINITY;
    for i in 0..=steps {
        let g1 = coord(i);
        for j in 0..=steps {
            let g2 = coord(j);
            if g1 * g1 + g2 * g2 > 1.0 + tol::GEOMETRY {
                continue;
            }
            // In the sector [0, upper]: upper half-plane and clockwise of the
            // upper ray (upper <= pi).
            if g2 < -tol::GEOMETRY || cos_u * g2 - sin_u * g1 > tol::GEOMETRY {
                continue;
            }
            let value = payoff_from_dots(
                g1 * b1_q + g2 * b2_q,
                other_q,
                g1 * b1_qx + g2 * b2_qx,
                other_qx,
            );
            best = best.max(value);
        }
    }
    Ok((best - current).max(0.0))
}

/// Maximum payoff gain from a unilateral deviation to a grid policy in the
/// plane (Cartesian grid with the given spacing, restricted to the unit disc
/// and the deviating party's wedge).
pub fn certify(
    profile: &Profile,
    inst: &GameInstance,
    spacing: f64,
    wedge: DeviationWedge,
) -> Result<GainReport> {
    if !(spacing > 0.0 && spacing.is_finite()) {
        return Err(GameError::param("spacing", "must be positive"));
    }
    if profile.dim() != inst.k() {
        return Err(GameError::DimensionMismatch {
            expected: inst.k(),
            found: profile.dim(),
        });
    }
    let gain_a = party_gain(profile, inst, Party::A, spacing, wedge)?;
    let gain_b = party_gain(profile, inst, Party::B, spacing, wedge)?;
    Ok(GainReport {
        gain_a,
        gain_b,
        max_gain: gain_a.max(gain_b),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    Vanilla,
    Extragradient,
}

impl std::str::FromStr for Method {
    type Err = GameError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(Method::Vanilla),
            "extragradient" => Ok(Method::Extragradient),
            other => Err(GameError::param(
                "method",
                format!("unknown method `{other}`"),
            )),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AscentConfig {
    /// Step size is `1 / t^step_exponent`.
    pub step_exponent: f64,
    pub max_iterations: usize,
    /// Convergence radius `delta`.
    pub tolerance: f64,
    /// Number of past iterates scanned for a repeat (catches cycles up to
    /// this period).
    pub window: usize,
    pub method: Method,
    pub seed: u64,
    /// Grid spacing for the end-of-run certification.
    pub certify_spacing: f64,
    pub certify_wedge: DeviationWedge,
    /// A run counts as an approximate equilibrium when its certified gain is
    /// at most this.
    pub approx_epsilon: f64,
}

impl Default for AscentConfig {
    fn default() -> Self {
        Self {
            step_exponent: 0.75,
            max_iterations: 10_000,
            tolerance: 1e-4,
            window: 50,
            method: Method::Vanilla,
            seed: crate::DEFAULT_SEED,
            certify_spacing: 0.1,
            certify_wedge: DeviationWedge::Own,
            approx_epsilon: 0.05,
        }
    }
}

impl AscentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.5..=1.0).contains(&self.step_exponent) {
            return Err(GameError::param(
                "step_exponent",
                format!("{} outside [0.5, 1]", self.step_exponent),
            ));
        }
        if self.tolerance.is_nan() || self.tolerance <= 0.0 {
            return Err(GameError::param("delta", "must be positive"));
        }
        if self.window == 0 {
            return Err(GameError::param("window", "must be at least 1"));
        }
        if self.max_iterations == 0 {
            return Err(GameError::param("max_iterations", "must be at least 1"));
        }
        if self.certify_spacing.is_nan() || self.certify_spacing <= 0.0 {
            return Err(GameError::param("certify_spacing", "must be positive"));
        }
        if self.approx_epsilon.is_nan() || self.approx_epsilon < 0.0 {
            return Err(GameError::param("approx_epsilon", "must be non-negative"));
        }
        Ok(())
    }

    /// `sum eta_t = inf` and `sum eta_t^2 < inf`; fails at exponent 0.5.
    pub fn robbins_monro(&self) -> bool {
        self.step_exponent > 0.5 && self.step_exponent <= 1.0
    }

    pub fn step(&self, t: usize) -> f64 {
        (t as f64).powf(-self.step_exponent)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum ConvergenceKind {
    /// Consecutive iterates within `delta`.
    Point,
    /// An earlier iterate in the window is within `delta`.
    Cycle,
    MaxIterations,
}

impl ConvergenceKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ConvergenceKind::Point => "point",
            ConvergenceKind::Cycle => "cycle",
            ConvergenceKind::MaxIterations => "max_iterations",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub final_profile: Profile,
    pub iterations: usize,
    pub kind: ConvergenceKind,
    pub gains: GainReport,
    pub certified_gain: f64,
    pub is_approx_psne: bool,
    pub seconds: f64,
}

/// Every recorded iterate, starting with the initial profile.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Trajectory {
    pub iterates: Vec<Profile>,
}

fn gradient_step(base: &Profile, at: &Profile, inst: &GameInstance, eta: f64) -> Result<Profile> {
    let mut next = Vec::with_capacity(2);
    for party in Party::BOTH {
        let g = grad_payoff(at, inst, party);
        let raw = combine(1.0, base.get(party).as_slice(), eta, &g);
        next.push(project(&raw, inst, party)?);
    }
    let b = next.pop().expect("two parties");
    let a = next.pop().expect("two parties");
    Ok(Profile { a, b })
}

fn distance(x: &Profile, y: &Profile) -> f64 {
    let da = norm(&combine(1.0, x.a.as_slice(), -1.0, y.a.as_slice()));
    let db = norm(&combine(1.0, x.b.as_slice(), -1.0, y.b.as_slice()));
    da.max(db)
}

pub fn ascend(
    inst: &GameInstance,
    init: &Profile,
    cfg: &AscentConfig,
) -> Result<(RunReport, Trajectory)> {
    cfg.validate()?;
    if init.dim() != inst.k() {
        return Err(GameError::DimensionMismatch {
            expected: inst.k(),
            found: init.dim(),
        });
    }
    let started = Instant::now();
    let mut trajectory = Trajectory {
        iterates: vec![init.clone()],
    };
    let mut window: VecDeque<Profile> = VecDeque::with_capacity(cfg.window);
    window.push_back(init.clone());
    let mut current = init.clone();
    let mut kind = ConvergenceKind::MaxIterations;
    let mut iterations = cfg.max_iterations;

    for t in 1..=cfg.max_iterations {
        let eta = cfg.step(t);
        let next = match cfg.method {
            Method::Vanilla => gradient_step(&current, &current, inst, eta)?,
            Method::Extragradient => {
                let mid = gradient_step(&current, &current, inst, eta)?;
                gradient_step(&current, &mid, inst, eta)?
            }
        };
        // Most recent first, so a repeat of the previous iterate is a point.
        let hit = window
            .iter()
            .rev()
            .position(|past| distance(&next, past) <= cfg.tolerance);
        trajectory.iterates.push(next.clone());
        current = next;
        if let Some(lag) = hit {
            kind = if lag == 0 {
                ConvergenceKind::Point
            } else {
                ConvergenceKind::Cycle
            };
            iterations = t;
            break;
        }
        if window.len() == cfg.window {
            window.pop_front();
        }
        window.push_back(current.clone());
    }

    let gains = certify(&current, inst, cfg.certify_spacing, cfg.certify_wedge)?;
    let report = RunReport {
        final_profile: current,
        iterations,
        kind,
        certified_gain: gains.max_gain,
        is_approx_psne: gains.max_gain <= cfg.approx_epsilon,
        gains,
        seconds: started.elapsed().as_secs_f64(),
    };
    Ok((report, trajectory))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BatchRun {
    pub instance_id: usize,
    pub run_id: usize,
    pub consensus_reachable: bool,
    pub report: RunReport,
}

/// Runs `inits_per_instance` ascents per instance. Run `j` of instance `i`
/// has global index `i * inits_per_instance + j` and draws its initial
/// profile from seed `cfg.seed + index`, so results do not depend on
/// scheduling.
pub fn run_batch(
    instances: &[GameInstance],
    inits_per_instance: usize,
    cfg: &AscentConfig,
) -> Result<Vec<BatchRun>> {
    cfg.validate()?;
    let jobs: Vec<(usize, usize)> = (0..instances.len())
        .flat_map(|i| (0..inits_per_instance).map(move |j| (i, j)))
        .collect();
    jobs.par_iter()
        .map(|&(i, j)| {
            let inst = &instances[i];
            let index = (i * inits_per_instance + j) as u64;
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(index));
            let init = sample_init(inst, &mut rng)?;
            let (report, _) = ascend(inst, &init, cfg)?;
            Ok(BatchRun {
                instance_id: i,
                run_id: j,
                consensus_reachable: is_consensus_reachable(inst),
                report,
            })
        })
        .collect()
}
