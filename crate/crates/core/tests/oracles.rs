//! Checks against independent computations: Monte-Carlo, finite
//! differences, dense grids and brute force.

use polcomp_core::dynamics::{
    ascend, certify, project, run_batch, sample_init, sample_instance, sample_instances,
    AscentConfig, ConvergenceKind, DeviationWedge, Method,
};
use polcomp_core::electorate::{
    isotonicity_report, run_trials, vote_prob, Criterion, PolicySampler, SimConfig, TrialRecord,
    VoterDistribution,
};
use polcomp_core::grid::{gba_psne, lipschitz_bound, GbaOptions};
use polcomp_core::linalg::{dot, norm};
use polcomp_core::model::{from_polar, payoff_polar, to_polar, PolarPolicy};
use polcomp_core::monotonicity::ReducedParams;
use polcomp_core::{
    is_consensus_reachable, payoff, win_prob, GameInstance, Party, Policy, Profile,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

#[test]
fn payoff_matches_monte_carlo() {
    let inst = GameInstance::new(vec![0.5, -0.2, 0.3], vec![0.1, 0.6, -0.4]).unwrap();
    let prof = Profile::new(
        Policy::new(vec![0.7, 0.1, 0.2]).unwrap(),
        Policy::new(vec![-0.3, 0.6, 0.1]).unwrap(),
    )
    .unwrap();
    let (p_a, _) = win_prob(&prof, &inst);
    let mut r = rng(1);
    let n = 1_000_000;
    for party in Party::BOTH {
        let qx = inst.aggregate_of(party);
        let (u_a, u_b) = (dot(prof.a.as_slice(), qx), dot(prof.b.as_slice(), qx));
        let (mut sum, mut sq) = (0.0, 0.0);
        for _ in 0..n {
            let v = if r.random::<f64>() < p_a { u_a } else { u_b };
            sum += v;
            sq += v * v;
        }
        let mean = sum / n as f64;
        let se = ((sq / n as f64 - mean * mean) / n as f64).sqrt();
        assert!((mean - payoff(&prof, &inst, party)).abs() <= 3.0 * se);
    }
}

#[test]
fn instance_sampling_statistics() {
    let mut r = rng(2);
    let n = 100_000;
    let k = 3;
    let mut mean = vec![0.0; k];
    let mut sq = vec![0.0; k];
    let mut reachable = 0;
    for _ in 0..n {
        let inst = sample_instance(k, &mut r).unwrap();
        assert!(norm(inst.q_a()) <= 1.0 && norm(inst.q_b()) <= 1.0);
        for i in 0..k {
            mean[i] += inst.q_a()[i];
            sq[i] += inst.q_a()[i] * inst.q_a()[i];
        }
        if is_consensus_reachable(&inst) {
            reachable += 1;
        }
    }
    for i in 0..k {
        let m = mean[i] / n as f64;
        let sd = (sq[i] / n as f64 - m * m).sqrt();
        assert!(
            m.abs() <= 3.0 * sd / (n as f64).sqrt(),
            "coordinate {i} mean {m}"
        );
    }
    assert!(reachable > 0 && reachable < n);
}

#[test]
fn sampled_inits_are_feasible() {
    let mut r = rng(3);
    for _ in 0..2000 {
        let inst = sample_instance(4, &mut r).unwrap();
        let init = sample_init(&inst, &mut r).unwrap();
        for party in Party::BOTH {
            let z = init.get(party);
            assert!(z.norm() <= 1.0 + 1e-12);
            let d = to_polar(z, &inst, party).unwrap();
            assert!(d.polar.theta >= -1e-9 && d.polar.theta <= inst.rho(party) + 1e-9);
            assert!(d.residual < 1e-12);
        }
    }
}

#[test]
fn angular_slope_is_within_lipschitz_bound() {
    let mut r = rng(4);
    let h = 1e-6;
    let mut worst = 0.0f64;
    for _ in 0..10_000 {
        let inst = sample_instance(3, &mut r).unwrap();
        let lip = lipschitz_bound(&inst);
        let (ta, tb) = (
            r.random::<f64>() * inst.rho_a(),
            r.random::<f64>() * inst.rho_b(),
        );
        let f = |t: f64| payoff_polar(1.0, t, 1.0, tb, &inst).unwrap().0;
        let slope = ((f(ta + h) - f(ta - h)) / (2.0 * h)).abs();
        worst = worst.max(slope / lip);
        assert!(slope <= lip, "slope {slope} > {lip}");
    }
    assert!(worst > 0.0);
}

/// Two-dimensional instance with the given norms and wedge angles.
fn planar(na: f64, nb: f64, rho_a: f64, rho_b: f64) -> GameInstance {
    let spread = rho_a + rho_b;
    GameInstance::new(vec![na, 0.0], vec![nb * spread.cos(), nb * spread.sin()]).unwrap()
}

#[test]
fn reduced_gradients_match_polar_payoff() {
    let mut r = rng(5);
    for _ in 0..500 {
        let rho_a = r.random_range(0.1..1.2);
        let rho_b = r.random_range(0.1..1.2);
        let (na, nb) = (r.random_range(0.2..1.0), r.random_range(0.2..1.0));
        let inst = planar(na, nb, rho_a, rho_b);
        // The planar construction only puts Q at angle rho_a from Q_A when
        // the norms balance; use the instance's own angles.
        let p = ReducedParams::from_instance(&inst).unwrap();
        let (ta, tb) = (
            r.random_range(0.05..0.95) * inst.rho_a(),
            r.random_range(0.05..0.95) * inst.rho_b(),
        );
        let pol = |a: f64, b: f64| payoff_polar(1.0, a, 1.0, b, &inst).unwrap();
        let fd_a = stencil(|t| pol(t, tb).0, ta, 1e-4);
        let fd_b = stencil(|t| pol(ta, t).1, tb, 1e-4);
        let (g1, g2) = p.theta_space_pseudo_gradient(ta, tb).unwrap();
        assert!(
            (g1 - fd_a).abs() <= 1e-6 * fd_a.abs().max(1e-3),
            "{g1} vs {fd_a}"
        );
        assert!(
            (g2 - fd_b).abs() <= 1e-6 * fd_b.abs().max(1e-3),
            "{g2} vs {fd_b}"
        );

        // x-space: differentiate the polar payoff along x = cos θ.
        let (x, y) = (ta.cos(), tb.cos());
        // acos is singular at 1, so keep the stencil well inside.
        let fd_x = stencil(|x| pol(x.acos(), tb).0, x, 1e-4f64.min((1.0 - x) / 100.0));
        let fd_y = stencil(|y| pol(ta, y.acos()).1, y, 1e-4f64.min((1.0 - y) / 100.0));
        let (f1, f2) = p.pseudo_gradient(x, y).unwrap();
        assert!(
            (f1 - fd_x).abs() <= 1e-6 * fd_x.abs().max(1e-3),
            "{f1} vs {fd_x}"
        );
        assert!(
            (f2 - fd_y).abs() <= 1e-6 * fd_y.abs().max(1e-3),
            "{f2} vs {fd_y}"
        );
    }
}

/// Five-point central difference.
fn stencil(f: impl Fn(f64) -> f64, x: f64, h: f64) -> f64 {
    (f(x - 2.0 * h) - 8.0 * f(x - h) + 8.0 * f(x + h) - f(x + 2.0 * h)) / (12.0 * h)
}

#[test]
fn ascent_from_an_equilibrium_stays_put() {
    let mut r = rng(6);
    let mut checked = 0;
    while checked < 10 {
        let inst = sample_instance(3, &mut r).unwrap();
        if !is_consensus_reachable(&inst) {
            continue;
        }
        let eq = gba_psne(&inst, 0.05, &GbaOptions::default()).unwrap();
        assert!(eq.certified);
        let (report, _) = ascend(&inst, &eq.profile, &AscentConfig::default()).unwrap();
        assert_eq!(report.kind, ConvergenceKind::Point);
        assert!(report.iterations <= 20, "{} iterations", report.iterations);
        checked += 1;
    }
}

#[test]
fn symmetric_instance_gives_mirrored_trajectories() {
    let inst = GameInstance::new(vec![0.3, 0.5, -0.2], vec![0.3, 0.5, -0.2]).unwrap();
    let a = Policy::new(vec![0.2, 0.1, 0.4]).unwrap();
    let b = Policy::new(vec![-0.5, 0.3, 0.0]).unwrap();
    let cfg = AscentConfig {
        max_iterations: 300,
        ..Default::default()
    };
    let (_, fwd) = ascend(&inst, &Profile::new(a.clone(), b.clone()).unwrap(), &cfg).unwrap();
    let (_, rev) = ascend(&inst, &Profile::new(b, a).unwrap(), &cfg).unwrap();
    assert_eq!(fwd.iterates.len(), rev.iterates.len());
    for (x, y) in fwd.iterates.iter().zip(&rev.iterates) {
        assert_eq!(x.a, y.b);
        assert_eq!(x.b, y.a);
    }
}

#[test]
fn perturbed_equilibrium_has_positive_gain() {
    let mut r = rng(7);
    for _ in 0..20 {
        let inst = sample_instance(2, &mut r).unwrap();
        let eq = gba_psne(&inst, 0.05, &GbaOptions::default()).unwrap();
        let fine = certify(&eq.profile, &inst, 0.05, DeviationWedge::Own).unwrap();
        assert!(fine.max_gain <= 0.05);
        // Pull A 0.5 toward the origin.
        let za = eq.profile.a.as_slice().iter().map(|x| 0.5 * x).collect();
        let moved = eq.profile.with(Party::A, Policy::new(za).unwrap());
        let report = certify(&moved, &inst, 0.1, DeviationWedge::Own).unwrap();
        assert!(report.gain_a > 0.0);
        let wide = certify(&moved, &inst, 0.1, DeviationWedge::FullSpan).unwrap();
        assert!(wide.gain_a >= report.gain_a);
    }
}

#[test]
fn ascent_is_reproducible() {
    let insts = sample_instances(3, 3, 11).unwrap();
    for method in [Method::Vanilla, Method::Extragradient] {
        let cfg = AscentConfig {
            method,
            seed: 11,
            ..Default::default()
        };
        let a = run_batch(&insts, 4, &cfg).unwrap();
        let b = run_batch(&insts, 4, &cfg).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.report.final_profile, y.report.final_profile);
            assert_eq!(x.report.iterations, y.report.iterations);
        }
        let mut r1 = rng(5);
        let mut r2 = rng(5);
        let i1 = sample_init(&insts[0], &mut r1).unwrap();
        let i2 = sample_init(&insts[0], &mut r2).unwrap();
        let (_, t1) = ascend(&insts[0], &i1, &cfg).unwrap();
        let (_, t2) = ascend(&insts[0], &i2, &cfg).unwrap();
        assert_eq!(t1.iterates, t2.iterates);
    }
}

#[test]
fn extragradient_runs_converge() {
    let insts = sample_instances(5, 2, 13).unwrap();
    let cfg = AscentConfig {
        method: Method::Extragradient,
        ..Default::default()
    };
    for run in run_batch(&insts, 5, &cfg).unwrap() {
        assert_ne!(run.report.kind, ConvergenceKind::MaxIterations);
        assert!(run.report.certified_gain >= 0.0);
    }
}

#[test]
fn projected_updates_stay_feasible_along_trajectories() {
    let insts = sample_instances(5, 4, 17).unwrap();
    for inst in &insts {
        let init = sample_init(inst, &mut rng(17)).unwrap();
        let (_, traj) = ascend(inst, &init, &AscentConfig::default()).unwrap();
        for prof in &traj.iterates {
            for party in Party::BOTH {
                let z = prof.get(party);
                let again = project(z.as_slice(), inst, party).unwrap();
                let diff: f64 = z
                    .as_slice()
                    .iter()
                    .zip(again.as_slice())
                    .map(|(a, b)| (a - b).abs())
                    .sum();
                assert!(diff < 1e-12);
            }
        }
    }
}

#[test]
fn gba_guarantee_transfers_to_dense_grid() {
    let insts = sample_instances(100, 3, 19).unwrap();
    for inst in &insts {
        let res = gba_psne(inst, 0.1, &GbaOptions::default()).unwrap();
        assert!(res.certified);
        let dense = certify(&res.profile, inst, res.spec.h / 2.0, DeviationWedge::Own).unwrap();
        assert!(dense.max_gain <= 0.1, "dense gain {}", dense.max_gain);
    }
}

#[test]
fn halving_epsilon_does_not_increase_gain() {
    let insts = sample_instances(20, 3, 23).unwrap();
    for inst in &insts {
        let coarse = gba_psne(inst, 0.2, &GbaOptions::default()).unwrap();
        let fine = gba_psne(inst, 0.1, &GbaOptions::default()).unwrap();
        let spacing = fine.spec.h / 2.0;
        let g_coarse = certify(&coarse.profile, inst, spacing, DeviationWedge::Own).unwrap();
        let g_fine = certify(&fine.profile, inst, spacing, DeviationWedge::Own).unwrap();
        assert!(fine.max_gain <= fine.spec.epsilon_hat);
        assert!(
            g_fine.max_gain <= g_coarse.max_gain.max(fine.spec.epsilon_hat) + 1e-12,
            "{} > {}",
            g_fine.max_gain,
            g_coarse.max_gain
        );
    }
}

#[test]
fn ternary_search_saves_evaluations_as_grids_grow() {
    let inst = GameInstance::new(vec![0.9, 0.1, 0.2], vec![-0.2, 0.7, 0.4]).unwrap();
    let mut ratios = Vec::new();
    for n in [200, 2_000, 20_000] {
        let opts = GbaOptions {
            n_override: Some(n),
            ..Default::default()
        };
        let fast = gba_psne(&inst, 0.1, &opts).unwrap();
        let slow = gba_psne(
            &inst,
            0.1,
            &GbaOptions {
                exhaustive: true,
                ..opts
            },
        )
        .unwrap();
        assert!((fast.max_gain - slow.max_gain).abs() <= 1e-9);
        ratios.push(fast.payoff_evals as f64 / slow.payoff_evals as f64);
    }
    assert!(ratios.windows(2).all(|w| w[1] < w[0]), "{ratios:?}");
}

#[test]
fn polar_examples() {
    let inst = GameInstance::new(vec![0.6, 0.1, 0.0], vec![0.0, 0.5, 0.3]).unwrap();
    for party in Party::BOTH {
        let z = from_polar(
            &PolarPolicy::new(party, 1.0, inst.rho(party)).unwrap(),
            &inst,
        )
        .unwrap();
        let q = inst.q();
        let unit: Vec<f64> = q.iter().map(|x| x / norm(q)).collect();
        assert!(z
            .as_slice()
            .iter()
            .zip(&unit)
            .all(|(a, b)| (a - b).abs() < 1e-12));
    }
}

#[test]
fn identical_policies_split_the_vote() {
    let cfg = SimConfig {
        trials: 4000,
        dim: 2,
        policies: PolicySampler::Fixed {
            z_a: vec![0.3, -0.4],
            z_b: vec![0.3, -0.4],
        },
        ..Default::default()
    };
    let recs = run_trials(&cfg).unwrap();
    let wins = recs.iter().filter(|r| r.winner == Party::A).count() as f64;
    let n = recs.len() as f64;
    assert!((wins / n - 0.5).abs() <= 3.0 * (0.25 / n).sqrt());
}

#[test]
fn independent_winners_score_near_zero() {
    let mut r = rng(29);
    let recs: Vec<TrialRecord> = (0..10_000)
        .map(|trial| TrialRecord {
            trial,
            mu: 0.0,
            delta: r.random::<f64>() - 0.5,
            votes_a: 0,
            votes_b: 0,
            winner: if r.random::<bool>() {
                Party::A
            } else {
                Party::B
            },
        })
        .collect();
    let rep = isotonicity_report(&recs, 20).unwrap();
    assert!(rep.score.abs() < 0.5, "score {}", rep.score);
}

#[test]
fn vote_rules_flatten_for_large_xi() {
    let mut r = rng(31);
    for _ in 0..1000 {
        let (ua, ub) = (r.random_range(-1.0..1.0), r.random_range(-1.0..1.0));
        for c in [Criterion::Linear, Criterion::Softmax] {
            assert!((vote_prob(ua, ub, c, 1e6) - 0.5).abs() <= 1e-4);
        }
    }
}

#[test]
fn small_simulation_is_isotone() {
    for distribution in [VoterDistribution::Uniform, VoterDistribution::Gaussian] {
        let cfg = SimConfig {
            trials: 2000,
            distribution,
            ..Default::default()
        };
        let rep = isotonicity_report(&run_trials(&cfg).unwrap(), 10).unwrap();
        assert!(rep.score >= 0.9, "{distribution:?}: {}", rep.score);
    }
}
