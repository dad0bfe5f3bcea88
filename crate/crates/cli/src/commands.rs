use std::path::Path;
use std::time::Instant;

use polcomp_core::closed_form::{solve_1d, verify_1d, ScalarInstance};
use polcomp_core::dynamics::{
    certify, run_batch, sample_instances, AscentConfig, DeviationWedge, Method,
};
use polcomp_core::electorate::{
    isotonicity_report, run_trials, Criterion, PolicySampler, SimConfig, VoterDistribution,
};
use polcomp_core::grid::{gba_psne, GbaOptions};
use polcomp_core::io::{load_instances, load_preference_csvs};
use polcomp_core::monotonicity::{
    check_pair, monotonicity_probe, ProbeReport, ProbeSpace, ReducedParams, COUNTEREXAMPLE_Z1,
    COUNTEREXAMPLE_Z2, REPORTED_F_Z1, REPORTED_F_Z2,
};
use polcomp_core::{GameInstance, Policy, Profile};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::args::{
    AscendArgs, CertifyArgs, CriterionArg, DistributionArg, GbaArgs, InstanceSource, MethodArg,
    MonotonicityArgs, Solve1dArgs, VoteArgs,
};
use crate::output::{fmt_f64, to_csv, to_json, SCHEMA_VERSION};
use crate::CliError;

/// Bytes to emit and a one-line summary.
pub struct Outcome {
    pub bytes: Vec<u8>,
    pub summary: String,
}

/// Settings shared by every subcommand.
pub struct Globals {
    pub seed: u64,
    pub timing: bool,
}

impl Globals {
    fn seconds(&self, started: Instant) -> f64 {
        if self.timing {
            started.elapsed().as_secs_f64()
        } else {
            0.0
        }
    }
}

fn json_outcome(value: &impl Serialize, summary: String) -> Result<Outcome, CliError> {
    let bytes = to_json(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(Outcome { bytes, summary })
}

fn csv_outcome(
    header: &[&str],
    rows: &[Vec<String>],
    summary: String,
) -> Result<Outcome, CliError> {
    let bytes = to_csv(header, rows).map_err(|e| CliError::Runtime(e.to_string()))?;
    Ok(Outcome { bytes, summary })
}

fn parse_vector(name: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|s| {
            s.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Validation(format!("--{name}: `{s}` is not a number ({e})")))
        })
        .collect()
}

fn load_instance(src: &InstanceSource, seed: u64) -> Result<GameInstance, CliError> {
    match (&src.instance, &src.voters_a, &src.voters_b) {
        (Some(_), Some(_), _) | (Some(_), _, Some(_)) => Err(CliError::Validation(
            "give either --instance or --voters-a/--voters-b, not both".into(),
        )),
        (None, Some(a), Some(b)) => Ok(load_preference_csvs(a, b, src.rescale)?),
        (Some(spec), None, None) if spec == "random" => {
            Ok(sample_instances(1, src.k, seed)?.remove(0))
        }
        (Some(path), None, None) => {
            let mut all = load_instances(Path::new(path), src.rescale)?;
            if src.index >= all.len() {
                return Err(CliError::Validation(format!(
                    "--index {} out of range: {path} holds {} instance(s)",
                    src.index,
                    all.len()
                )));
            }
            Ok(all.swap_remove(src.index))
        }
        _ => Err(CliError::Validation(
            "an instance source is required: --instance <file|random> or --voters-a/--voters-b"
                .into(),
        )),
    }
}

pub fn solve_1d_cmd(args: &Solve1dArgs) -> Result<Outcome, CliError> {
    let inst = ScalarInstance::new(args.qa, args.qb, args.relaxed)?;
    let sol = solve_1d(&inst);
    let gain = verify_1d(sol.z_a, sol.z_b, &inst, args.grid_points)?;
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "qa": args.qa,
        "qb": args.qb,
        "relaxed": args.relaxed,
        "z_a": sol.z_a,
        "z_b": sol.z_b,
        "case": sol.case.tag(),
        "verified_gain": gain,
        "grid_points": args.grid_points,
    });
    let summary = format!(
        "solve-1d: z_a={} z_b={} case={} gain={}",
        sol.z_a,
        sol.z_b,
        sol.case.tag(),
        fmt_f64(gain)
    );
    json_outcome(&doc, summary)
}

pub fn gba_cmd(args: &GbaArgs, g: &Globals) -> Result<Outcome, CliError> {
    let inst = load_instance(&args.source, g.seed)?;
    let opts = GbaOptions {
        n_override: args.n,
        exhaustive: args.exhaustive,
        n_cap: args.n_cap,
    };
    let started = Instant::now();
    let res = gba_psne(&inst, args.epsilon, &opts)?;
    let seconds = g.seconds(started);
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "z_a": res.profile.a,
        "z_b": res.profile.b,
        "epsilon": res.spec.epsilon,
        "epsilon_hat": res.spec.epsilon_hat,
        "n": res.spec.n,
        "h": res.spec.h,
        "lipschitz": res.spec.lipschitz,
        "certified": res.certified,
        "max_gain": res.max_gain,
        "gain_a": res.gain_a,
        "gain_b": res.gain_b,
        "payoff_evals": res.payoff_evals,
        "candidates": res.candidates,
        "mode": if args.exhaustive { "exhaustive" } else { "ternary" },
        "seconds": seconds,
        "instance": inst,
    });
    let summary = format!(
        "gba: certified={} max_gain={} n={} evals={}",
        res.certified,
        fmt_f64(res.max_gain),
        res.spec.n,
        res.payoff_evals
    );
    json_outcome(&doc, summary)
}

fn load_batch(
    spec: &str,
    k: usize,
    seed: u64,
    rescale: bool,
) -> Result<Vec<GameInstance>, CliError> {
    if let Some(count) = spec.strip_prefix("random:") {
        let n: usize = count
            .parse()
            .map_err(|_| CliError::Validation(format!("--instances: `{count}` is not a count")))?;
        if n == 0 {
            return Err(CliError::Validation(
                "--instances: need at least one instance".into(),
            ));
        }
        Ok(sample_instances(n, k, seed)?)
    } else {
        Ok(load_instances(Path::new(spec), rescale)?)
    }
}

pub fn ascend_cmd(args: &AscendArgs, g: &Globals) -> Result<Outcome, CliError> {
    if args.inits_per_instance == 0 {
        return Err(CliError::Validation(
            "--inits-per-instance must be at least 1".into(),
        ));
    }
    let instances = load_batch(&args.instances, args.k, g.seed, args.rescale)?;
    let cfg = AscentConfig {
        step_exponent: args.step_exponent,
        max_iterations: args.max_iter,
        tolerance: args.delta,
        window: args.window,
        method: match args.method {
            MethodArg::Vanilla => Method::Vanilla,
            MethodArg::Extragradient => Method::Extragradient,
        },
        seed: g.seed,
        certify_spacing: args.certify_spacing,
        certify_wedge: if args.full_span {
            DeviationWedge::FullSpan
        } else {
            DeviationWedge::Own
        },
        approx_epsilon: args.approx_epsilon,
    };
    let runs = run_batch(&instances, args.inits_per_instance, &cfg)?;
    let rows: Vec<Vec<String>> = runs
        .iter()
        .map(|r| {
            vec![
                SCHEMA_VERSION.to_string(),
                r.instance_id.to_string(),
                r.run_id.to_string(),
                r.consensus_reachable.to_string(),
                r.report.iterations.to_string(),
                r.report.kind.tag().to_string(),
                fmt_f64(r.report.certified_gain),
                r.report.is_approx_psne.to_string(),
                fmt_f64(if g.timing { r.report.seconds } else { 0.0 }),
            ]
        })
        .collect();
    let converged = runs
        .iter()
        .filter(|r| r.report.kind != polcomp_core::dynamics::ConvergenceKind::MaxIterations)
        .count();
    let approx = runs.iter().filter(|r| r.report.is_approx_psne).count();
    let summary = format!(
        "ascend: {} runs, {converged} converged, {approx} within gain {}",
        runs.len(),
        args.approx_epsilon
    );
    csv_outcome(
        &[
            "schema_version",
            "instance_id",
            "run_id",
            "consensus_reachable",
            "iterations",
            "kind",
            "certified_gain",
            "is_approx_psne",
            "seconds",
        ],
        &rows,
        summary,
    )
}

#[derive(Serialize)]
struct ProbeSummary {
    violation_fraction: f64,
    violations: usize,
    witness_u: (f64, f64),
    witness_v: (f64, f64),
    s: f64,
}

impl From<&ProbeReport> for ProbeSummary {
    fn from(r: &ProbeReport) -> Self {
        Self {
            violation_fraction: r.violation_fraction,
            violations: r.violations,
            witness_u: r.witness_u,
            witness_v: r.witness_v,
            s: r.s,
        }
    }
}

pub fn monotonicity_cmd(args: &MonotonicityArgs, g: &Globals) -> Result<Outcome, CliError> {
    let p = ReducedParams::new(args.norm_qa, args.norm_qb, args.norm_q, args.c1, args.c2)?;
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    let cosine = monotonicity_probe(&p, args.pairs, ProbeSpace::Cosine, &mut rng)?;
    let mut rng = ChaCha8Rng::seed_from_u64(g.seed);
    rng.set_stream(1);
    let angle = monotonicity_probe(&p, args.pairs, ProbeSpace::Angle, &mut rng)?;
    let pair = check_pair(&p, COUNTEREXAMPLE_Z1, COUNTEREXAMPLE_Z2)?;
    let close =
        |a: (f64, f64), b: (f64, f64)| (a.0 - b.0).abs() <= 5e-3 && (a.1 - b.1).abs() <= 5e-3;
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "params": p,
        "pairs": args.pairs,
        "violation_fraction": cosine.violation_fraction,
        "violations": cosine.violations,
        "witness_u": cosine.witness_u,
        "witness_v": cosine.witness_v,
        "s": cosine.s,
        "paper_counterexample_s": pair.s,
        "theta_probe": ProbeSummary::from(&angle),
        "paper_counterexample": {
            "z1": pair.z1,
            "z2": pair.z2,
            "f_z1": pair.f_z1,
            "f_z2": pair.f_z2,
            "fd_z1": pair.fd_z1,
            "fd_z2": pair.fd_z2,
            "max_rel_error": pair.max_rel_error,
            "s": pair.s,
            "s_theta": pair.s_theta,
            "printed_f_z1": REPORTED_F_Z1,
            "printed_f_z2": REPORTED_F_Z2,
            "printed_components_match": close(pair.f_z1, REPORTED_F_Z1) && close(pair.f_z2, REPORTED_F_Z2),
        },
    });
    let summary = format!(
        "monotonicity: violation_fraction={} theta_violation_fraction={} counterexample s={} s_theta={}",
        fmt_f64(cosine.violation_fraction),
        fmt_f64(angle.violation_fraction),
        fmt_f64(pair.s),
        fmt_f64(pair.s_theta)
    );
    json_outcome(&doc, summary)
}

pub fn simulate_vote_cmd(args: &VoteArgs, g: &Globals) -> Result<Outcome, CliError> {
    let policies = match (&args.z_a, &args.z_b) {
        (Some(a), Some(b)) => PolicySampler::Fixed {
            z_a: parse_vector("z-a", a)?,
            z_b: parse_vector("z-b", b)?,
        },
        _ => PolicySampler::UnitBall,
    };
    let cfg = SimConfig {
        voters: args.voters,
        dim: args.k,
        trials: args.trials,
        criterion: match args.criterion {
            CriterionArg::Hardmax => Criterion::Hardmax,
            CriterionArg::Linear => Criterion::Linear,
            CriterionArg::Softmax => Criterion::Softmax,
        },
        distribution: match args.distribution {
            DistributionArg::Uniform => VoterDistribution::Uniform,
            DistributionArg::Gaussian => VoterDistribution::Gaussian,
        },
        xi: args.xi,
        mu_range: (args.mu_lo, args.mu_hi),
        spread: args.spread,
        policies,
        seed: g.seed,
    };
    let records = run_trials(&cfg)?;
    let report = isotonicity_report(&records, args.bins)?;
    let rows: Vec<Vec<String>> = report
        .bins
        .iter()
        .map(|b| {
            vec![
                SCHEMA_VERSION.to_string(),
                b.index.to_string(),
                fmt_f64(b.delta_lo),
                fmt_f64(b.delta_hi),
                fmt_f64(b.win_freq),
                b.count.to_string(),
            ]
        })
        .collect();
    let summary = format!(
        "simulate-vote: {} trials, monotonicity score {} (spearman {})",
        records.len(),
        fmt_f64(report.score),
        fmt_f64(report.spearman)
    );
    csv_outcome(
        &[
            "schema_version",
            "bin_index",
            "delta_lo",
            "delta_hi",
            "win_freq",
            "count",
        ],
        &rows,
        summary,
    )
}

#[derive(Deserialize)]
struct ProfileFile {
    z_a: Vec<f64>,
    z_b: Vec<f64>,
}

pub fn certify_cmd(args: &CertifyArgs, g: &Globals) -> Result<Outcome, CliError> {
    let inst = load_instance(&args.source, g.seed)?;
    let (z_a, z_b) = match (&args.profile, &args.z_a, &args.z_b) {
        (Some(path), _, _) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            let pf: ProfileFile = serde_json::from_str(&text)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            (pf.z_a, pf.z_b)
        }
        (None, Some(a), Some(b)) => (parse_vector("z-a", a)?, parse_vector("z-b", b)?),
        _ => {
            return Err(CliError::Validation(
                "a profile is required: --profile <file> or --z-a/--z-b".into(),
            ))
        }
    };
    let profile = Profile::new(Policy::new(z_a)?, Policy::new(z_b)?)?;
    let wedge = if args.full_span {
        DeviationWedge::FullSpan
    } else {
        DeviationWedge::Own
    };
    let report = certify(&profile, &inst, args.spacing, wedge)?;
    let doc = json!({
        "schema_version": SCHEMA_VERSION,
        "z_a": profile.a,
        "z_b": profile.b,
        "spacing": args.spacing,
        "wedge": wedge,
        "gain_a": report.gain_a,
        "gain_b": report.gain_b,
        "max_gain": report.max_gain,
    });
    let summary = format!(
        "certify: gain_a={} gain_b={}",
        fmt_f64(report.gain_a),
        fmt_f64(report.gain_b)
    );
    json_outcome(&doc, summary)
}
