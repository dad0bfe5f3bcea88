//! Grid search for an ε-equilibrium.
//!
//! Each party's candidate policies are unit vectors rotated from `Q_X`
//! toward `Q` in steps of `h`. Payoffs are Lipschitz in the angles with
//! constant `2(|Q_A| + |Q_B|)`, so an `ε̂ = ε - ℒh` equilibrium on the grid
//! is an ε-equilibrium on the continuum. Best responses along a grid are
//! unimodal, which lets a ternary search replace the linear scan.

use serde::Serialize;

use crate::error::{GameError, Result};
use crate::linalg::{dot, norm};
use crate::model::{payoff_from_dots, plane_basis, GameInstance, Party, Policy, Profile};

/// Default ceiling on the grid size.
pub const DEFAULT_N_CAP: usize = 10_000_000;

/// `2(|Q_A| + |Q_B|)`, a Lipschitz constant of the payoffs in the angles.
pub fn lipschitz_bound(inst: &GameInstance) -> f64 {
    2.0 * (norm(inst.q_a()) + norm(inst.q_b()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub n: usize,
    pub h: f64,
    pub epsilon: f64,
    pub epsilon_hat: f64,
    pub lipschitz: f64,
}

impl GridSpec {
    /// Smallest admissible grid size for `epsilon`.
    pub fn min_size(inst: &GameInstance, epsilon: f64) -> Result<f64> {
        if !(epsilon > 0.0 && epsilon.is_finite()) {
            return Err(GameError::param("epsilon", "must be positive and finite"));
        }
        let max_rho = inst.rho_a().max(inst.rho_b());
        let lip = lipschitz_bound(inst);
        Ok((2.0 * max_rho * lip / epsilon).ceil() + 1.0)
    }

    /// Builds the grid for `epsilon`. `n_override` may only enlarge the grid.
    pub fn new(
        inst: &GameInstance,
        epsilon: f64,
        n_override: Option<usize>,
        n_cap: usize,
    ) -> Result<Self> {
        let required = Self::min_size(inst, epsilon)?;
        if required > n_cap as f64 {
            return Err(GameError::GridTooLarge {
                required: if required >= usize::MAX as f64 {
                    usize::MAX
                } else {
                    required as usize
                },
                cap: n_cap,
            });
        }
        let required = required as usize;
        let n = match n_override {
            Some(n) if n < required => {
                return Err(GameError::param(
                    "n",
                    format!("{n} is below the required grid size {required}"),
                ))
            }
            Some(n) if n > n_cap => {
                return Err(GameError::GridTooLarge {
                    required: n,
                    cap: n_cap,
                })
            }
            Some(n) => n,
            None => required,
        };
        let max_rho = inst.rho_a().max(inst.rho_b());
        let h = if n > 1 { max_rho / (n - 1) as f64 } else { 0.0 };
        let lipschitz = lipschitz_bound(inst);
        Ok(Self {
            n,
            h,
            epsilon,
            epsilon_hat: epsilon - lipschitz * h,
            lipschitz,
        })
    }
}

/// Unit policies at angles `min(i h, rho_X)` from `Q_X` toward `Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleGrid {
    pub party: Party,
    pub angles: Vec<f64>,
    pub points: Vec<Policy>,
    /// Number of leading points with distinct angles; the rest repeat
    /// `rho_X`.
    pub distinct: usize,
}

impl AngleGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

fn build_grid(inst: &GameInstance, spec: &GridSpec, party: Party) -> Result<AngleGrid> {
    let basis = plane_basis(inst, party)?;
    let rho = inst.rho(party);
    let mut angles = Vec::with_capacity(spec.n);
    let mut distinct = spec.n;
    for i in 0..spec.n {
        let raw = i as f64 * spec.h;
        let angle = if i + 1 == spec.n || raw >= rho {
            if distinct == spec.n {
                distinct = i + 1;
            }
            rho
        } else {
            raw
        };
        angles.push(angle);
    }
    let points = angles
        .iter()
        .map(|&t| Policy::new_clamped(basis.rotate(1.0, t)))
        .collect::<Result<Vec<_>>>()?;
    Ok(AngleGrid {
        party,
        angles,
        points,
        distinct,
    })
}

pub fn build_grids(inst: &GameInstance, spec: &GridSpec) -> Result<(AngleGrid, AngleGrid)> {
    check_instance(inst)?;
    Ok((
        build_grid(inst, spec, Party::A)?,
        build_grid(inst, spec, Party::B)?,
    ))
}

fn check_instance(inst: &GameInstance) -> Result<()> {
    for party in Party::BOTH {
        if inst.is_degenerate_party(party) {
            return Err(GameError::DegenerateParty(party));
        }
    }
    if inst.degenerate_flags().zero_q {
        return Err(GameError::ZeroConsensus);
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TbrResult {
    pub index: usize,
    pub value: f64,
    pub evals: usize,
}

/// Ternary search for the maximum of a unimodal sequence on `[lo, hi]`.
/// Ties move the left end, so a plateau is only safe at the peak.
pub fn tbr<F: FnMut(usize) -> f64>(mut f: F, lo: usize, hi: usize) -> Result<TbrResult> {
    if lo > hi {
        return Err(GameError::param("tbr", format!("empty range [{lo}, {hi}]")));
    }
    let (mut l, mut r) = (lo, hi);
    let mut evals = 0;
    while r - l > 2 {
        let third = (r - l) / 3;
        let (m1, m2) = (l + third, r - third);
        let (f1, f2) = (f(m1), f(m2));
        evals += 2;
        if f1 <= f2 {
            l = m1;
        } else {
            r = m2;
        }
    }
    let mut best = TbrResult {
        index: l,
        value: f(l),
        evals: evals + 1,
    };
    for i in l + 1..=r {
        let v = f(i);
        best.evals += 1;
        if v > best.value {
            best.index = i;
            best.value = v;
        }
    }
    Ok(best)
}

/// Plain argmax over `[lo, hi]` (first index on ties).
pub fn linear_scan<F: FnMut(usize) -> f64>(mut f: F, lo: usize, hi: usize) -> Result<TbrResult> {
    if lo > hi {
        return Err(GameError::param(
            "scan",
            format!("empty range [{lo}, {hi}]"),
        ));
    }
    let mut best = TbrResult {
        index: lo,
        value: f(lo),
        evals: 1,
    };
    for i in lo + 1..=hi {
        let v = f(i);
        best.evals += 1;
        if v > best.value {
            best.index = i;
            best.value = v;
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GbaOptions {
    pub n_override: Option<usize>,
    /// Use linear scans instead of ternary search for best responses.
    pub exhaustive: bool,
    pub n_cap: usize,
}

impl Default for GbaOptions {
    fn default() -> Self {
        Self {
            n_override: None,
            exhaustive: false,
            n_cap: DEFAULT_N_CAP,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GbaResult {
    pub profile: Profile,
    pub spec: GridSpec,
    /// Both grid gains are at most `epsilon_hat`.
    pub certified: bool,
    pub gain_a: f64,
    pub gain_b: f64,
    pub max_gain: f64,
    pub payoff_evals: usize,
    /// Outer-loop candidates examined before returning.
    pub candidates: usize,
}

/// Inner products of each grid point with `Q`, `Q_A` and `Q_B`.
struct Dots {
    q: Vec<f64>,
    qa: Vec<f64>,
    qb: Vec<f64>,
}

impl Dots {
    fn new(grid: &AngleGrid, inst: &GameInstance) -> Self {
        let of = |v: &[f64]| grid.points.iter().map(|p| dot(p.as_slice(), v)).collect();
        Self {
            q: of(inst.q()),
            qa: of(inst.q_a()),
            qb: of(inst.q_b()),
        }
    }
}

/// Candidate search over the outer grid.
pub fn gba_psne(inst: &GameInstance, epsilon: f64, opts: &GbaOptions) -> Result<GbaResult> {
    check_instance(inst)?;
    let spec = GridSpec::new(inst, epsilon, opts.n_override, opts.n_cap)?;
    let (grid_a, grid_b) = build_grids(inst, &spec)?;
    let (da, db) = (Dots::new(&grid_a, inst), Dots::new(&grid_b, inst));
    let (top_a, top_b) = (grid_a.distinct - 1, grid_b.distinct - 1);

    let mut evals = 0usize;
    let search = |f: &mut dyn FnMut(usize) -> f64, hi: usize| {
        if opts.exhaustive {
            linear_scan(f, 0, hi)
        } else {
            tbr(f, 0, hi)
        }
    };
    let r_a = |i: usize, j: usize| payoff_from_dots(da.q[i], db.q[j], da.qa[i], db.qa[j]);
    let r_b = |i: usize, j: usize| payoff_from_dots(db.q[j], da.q[i], db.qb[j], da.qb[i]);

    let mut best: Option<(f64, usize, usize, f64, f64)> = None;
    let mut candidates = 0;
    for y in 0..grid_b.distinct {
        candidates += 1;
        let x_hat = search(&mut |i| r_a(i, y), top_a)?;
        let y_hat = search(&mut |j| r_b(x_hat.index, j), top_b)?;
        let (xi, yj) = (x_hat.index, y_hat.index);
        let dev_a = search(&mut |i| r_a(i, yj), top_a)?;
        let gain_a = (dev_a.value - r_a(xi, yj)).max(0.0);
        let gain_b = (y_hat.value - r_b(xi, yj)).max(0.0);
        evals += x_hat.evals + y_hat.evals + dev_a.evals + 2;
        let max_gain = gain_a.max(gain_b);
        if best.is_none_or(|b| max_gain < b.0) {
            best = Some((max_gain, xi, yj, gain_a, gain_b));
        }
        if gain_a <= spec.epsilon_hat && gain_b <= spec.epsilon_hat {
            break;
        }
    }
    let (max_gain, xi, yj, gain_a, gain_b) = best.expect("grid is non-empty");
    Ok(GbaResult {
        profile: Profile::new(grid_a.points[xi].clone(), grid_b.points[yj].clone())?,
        spec,
        certified: gain_a <= spec.epsilon_hat && gain_b <= spec.epsilon_hat,
        gain_a,
        gain_b,
        max_gain,
        payoff_evals: evals,
        candidates,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::angle_between;

    fn inst() -> GameInstance {
        GameInstance::new(vec![0.9, 0.2, 0.1], vec![-0.1, 0.8, 0.3]).unwrap()
    }

    #[test]
    fn lipschitz_examples() {
        let unit = GameInstance::new(vec![1.0, 0.0], vec![0.0, 1.0]).unwrap();
        assert_eq!(lipschitz_bound(&unit), 4.0);
        let half = GameInstance::new(vec![0.5, 0.0], vec![0.0, 0.5]).unwrap();
        assert_eq!(lipschitz_bound(&half), 2.0);
    }

    #[test]
    fn grid_size_formula() {
        // Orthogonal unit aggregates: rho = pi/4 each, so use a wider pair
        // to get rho = pi/2 for one party.
        let q_a = vec![1.0, 0.0];
        let q_b = vec![-0.5, 3f64.sqrt() / 2.0];
        let inst = GameInstance::new(q_a, q_b).unwrap();
        let max_rho = inst.rho_a().max(inst.rho_b());
        let spec = GridSpec::new(&inst, 0.2, None, DEFAULT_N_CAP).unwrap();
        assert_eq!(spec.n, (2.0 * max_rho * 4.0 / 0.2_f64).ceil() as usize + 1);
        assert!(spec.h <= spec.epsilon / (2.0 * spec.lipschitz) + 1e-15);
        assert!(spec.epsilon_hat > 0.0);
        assert!(GridSpec::new(&inst, 0.2, Some(spec.n - 1), DEFAULT_N_CAP).is_err());
        assert!(GridSpec::new(&inst, 0.2, Some(spec.n + 10), DEFAULT_N_CAP).is_ok());
        assert!(matches!(
            GridSpec::new(&inst, 1e-9, None, DEFAULT_N_CAP),
            Err(GameError::GridTooLarge { .. })
        ));
        assert!(GridSpec::new(&inst, 0.0, None, DEFAULT_N_CAP).is_err());
    }

    #[test]
    fn pi_over_two_example() {
        // rho = pi/2 with unit norms gives N = ceil(2 (pi/2) 4 / 0.2) + 1 = 64.
        let n = (2.0 * std::f64::consts::FRAC_PI_2 * 4.0 / 0.2_f64).ceil() + 1.0;
        assert_eq!(n, 64.0);
    }

    #[test]
    fn grids_are_unit_in_wedge_and_sorted() {
        let inst = inst();
        let spec = GridSpec::new(&inst, 0.1, None, DEFAULT_N_CAP).unwrap();
        let (ga, gb) = build_grids(&inst, &spec).unwrap();
        for grid in [&ga, &gb] {
            let party = grid.party;
            let qx = inst.aggregate_of(party);
            let rho = inst.rho(party);
            assert_eq!(grid.len(), spec.n);
            assert_eq!(*grid.angles.last().unwrap(), rho);
            let first = crate::linalg::scale(qx, 1.0 / norm(qx));
            assert!(angle_between(grid.points[0].as_slice(), &first) < 1e-12);
            let mut prev = 0.0;
            for (i, p) in grid.points.iter().enumerate() {
                assert!((p.norm() - 1.0).abs() < 1e-9);
                let to_qx = angle_between(p.as_slice(), qx);
                let to_q = angle_between(p.as_slice(), inst.q());
                assert!((to_qx + to_q - rho).abs() < 1e-9);
                assert!(grid.angles[i] >= prev);
                if i > 0 {
                    assert!(to_qx - prev <= spec.h + 1e-12);
                }
                prev = to_qx.max(grid.angles[i]);
            }
        }
    }

    #[test]
    fn tbr_basic() {
        let r = tbr(|i| -((i as f64 - 7.0).powi(2)), 0, 20).unwrap();
        assert_eq!(r.index, 7);
        let r = tbr(|_| 3.0, 0, 50).unwrap();
        assert_eq!(r.value, 3.0);
        let r = tbr(|i| i as f64, 4, 4).unwrap();
        assert_eq!((r.index, r.evals), (4, 1));
        assert!(tbr(|_| 0.0, 5, 4).is_err());
        assert!(linear_scan(|_| 0.0, 5, 4).is_err());
    }

    #[test]
    fn identical_aggregates_single_point() {
        let inst = GameInstance::new(vec![0.3, 0.4], vec![0.3, 0.4]).unwrap();
        let res = gba_psne(&inst, 0.1, &GbaOptions::default()).unwrap();
        assert_eq!(res.spec.n, 1);
        assert!(res.certified);
        let unit = [0.6, 0.8];
        for p in [&res.profile.a, &res.profile.b] {
            assert!(p
                .as_slice()
                .iter()
                .zip(unit)
                .all(|(x, y)| (x - y).abs() < 1e-12));
        }
    }

    #[test]
    fn gba_certifies_and_modes_agree() {
        let inst = inst();
        let fast = gba_psne(&inst, 0.1, &GbaOptions::default()).unwrap();
        let slow = gba_psne(
            &inst,
            0.1,
            &GbaOptions {
                exhaustive: true,
                ..Default::default()
            },
        )
        .unwrap();
        assert!(fast.certified && slow.certified);
        assert!((fast.max_gain - slow.max_gain).abs() <= 1e-9);
        assert!(fast.payoff_evals < slow.payoff_evals);
    }

    #[test]
    fn degenerate_refused() {
        let inst = GameInstance::new(vec![0.0, 0.0], vec![0.3, 0.4]).unwrap();
        assert!(gba_psne(&inst, 0.1, &GbaOptions::default()).is_err());
        let inst = GameInstance::new(vec![0.3, 0.4], vec![-0.3, -0.4]).unwrap();
        assert_eq!(
            gba_psne(&inst, 0.1, &GbaOptions::default()),
            Err(GameError::ZeroConsensus)
        );
    }
}
