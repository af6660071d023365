//! End-to-end acceptance checks. Each test prints one PASS/FAIL line.
//!
//! Timed criteria hold a shared lock so that their wall-clock budgets are
//! not eaten by other tests running in parallel.

use std::sync::{Mutex, MutexGuard, OnceLock};
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use coopbf::dual::{beta_map, build_c, solve_dual};
use coopbf::harness::sweep::to_csv;
use coopbf::harness::{brute_force_oracle, gen_instance, run_sweep, OracleError, RunStatus, SweepConfig};
use coopbf::linalg::eigenvalues;
use coopbf::model::{self, fronthaul_rate, sinr};
use coopbf::primal::{beam_directions, power_map};
use coopbf::{certify, solve, CertifyTolerances, ProblemInstance, Solution, SolverConfig, SolverError};

fn serial() -> MutexGuard<'static, ()> {
    static LOCK: Mutex<()> = Mutex::new(());
    LOCK.lock().unwrap_or_else(|e| e.into_inner())
}

fn report(id: u32, name: &str, pass: bool, detail: String) {
    println!("criterion {id} ({name}): {} | {detail}", if pass { "PASS" } else { "FAIL" });
    assert!(pass, "criterion {id} ({name}) failed: {detail}");
}

fn unit(x: f64) -> Vec<Complex64> {
    vec![Complex64::new(x, 0.0)]
}

#[test]
fn criterion_1_analytic_instance() {
    let _guard = serial();
    let inst = ProblemInstance::new(1.0, vec![unit(1.0)], vec![1.0], vec![2.0]).unwrap();
    let start = Instant::now();
    let sol = solve(&inst, &SolverConfig::default()).unwrap();
    let elapsed = start.elapsed();

    let tol = 1e-8;
    let primal_obj = model::objective(&sol.primal);
    let dual_obj = sol.dual.objective(&inst);
    let errors = [
        ("beta", sol.dual.beta[0] - 2.0),
        ("p", sol.primal.powers[0] - 1.5),
        ("Q", sol.primal.q.diag(0) - 0.5),
        ("primal objective", primal_obj - 2.0),
        ("dual objective", dual_obj - 2.0),
        ("sinr slack", sinr(&inst, &sol.primal, 0).unwrap() - 1.0),
        ("fronthaul slack", fronthaul_rate(&inst, &sol.primal, 0).unwrap() - 2.0),
    ];
    let worst = errors.iter().map(|(_, e)| e.abs()).fold(0.0, f64::max);
    let bracket = brute_force_oracle(&inst).unwrap();
    let pass = worst <= tol && bracket.contains_rel(primal_obj, 1e-4) && elapsed < Duration::from_millis(10);
    report(
        1,
        "analytic closed loop",
        pass,
        format!("max error {worst:.2e} (tol {tol:e}), oracle [{:.10}, {:.10}], {elapsed:?} (limit 10ms)", bracket.lower, bracket.upper),
    );
}

#[test]
fn criterion_2_infeasibility() {
    let _guard = serial();
    let inst = ProblemInstance::new(1.0, vec![unit(1.0)], vec![1.0], vec![1.0]).unwrap();
    let start = Instant::now();
    let result = solve(&inst, &SolverConfig::default());
    let elapsed = start.elapsed();
    let pass = matches!(result, Err(SolverError::Infeasible { .. })) && elapsed < Duration::from_millis(100);
    report(2, "infeasibility detection", pass, format!("{:?}, {elapsed:?} (limit 100ms)", result.err()));
}

#[test]
fn criterion_3_oracle_equivalence() {
    let _guard = serial();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let instances: Vec<ProblemInstance> = (0..50)
        .map(|_| {
            let m = rng.random_range(1..=2);
            let k = rng.random_range(1..=2);
            let capacity = rng.random_range(1.5..=4.0);
            let mut inst = gen_instance(m, k, capacity, 1.0, 1.0, &mut rng).unwrap();
            let rates: Vec<f64> = (0..k).map(|_| rng.random_range(0.2..=1.0)).collect();
            inst.sinr_targets = rates.iter().map(|&r| model::sinr_from_rate(r)).collect();
            inst
        })
        .collect();

    let start = Instant::now();
    let rel = 5e-4;
    let mut feasible = 0;
    let mut failures = Vec::new();
    for (i, inst) in instances.iter().enumerate() {
        let ours = solve(inst, &SolverConfig::default());
        let oracle = brute_force_oracle(inst);
        match (&ours, &oracle) {
            (Ok(sol), Ok(b)) => {
                feasible += 1;
                let obj = model::objective(&sol.primal);
                if !b.contains_rel(obj, rel) {
                    failures.push(format!("#{i}: {obj} outside [{}, {}]", b.lower, b.upper));
                }
            }
            (Err(SolverError::Infeasible { .. }), Err(OracleError::InfeasibleOnGrid)) => {}
            _ => failures.push(format!("#{i}: solver {:?} vs oracle {:?}", ours.as_ref().err(), oracle)),
        }
    }
    let elapsed = start.elapsed();
    let pass = failures.is_empty() && elapsed < Duration::from_secs(60);
    report(
        3,
        "oracle equivalence",
        pass,
        format!(
            "{feasible}/50 feasible, {} mismatches (rel tol {rel:e}), {elapsed:?} (limit 60s) {failures:?}",
            failures.len()
        ),
    );
}

const SWEEP_RATES: [f64; 6] = [0.2, 0.4, 0.6, 0.8, 1.0, 1.2];

struct ScaleRun {
    inst: ProblemInstance,
    result: Result<Solution, SolverError>,
}

fn reference_scale_instances() -> &'static (Vec<ScaleRun>, Duration) {
    static RUNS: OnceLock<(Vec<ScaleRun>, Duration)> = OnceLock::new();
    RUNS.get_or_init(|| {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let instances: Vec<ProblemInstance> = (0..200)
            .map(|_| {
                let rate = SWEEP_RATES[rng.random_range(0..SWEEP_RATES.len())];
                gen_instance(8, 10, 3.0, 1.0, rate, &mut rng).unwrap()
            })
            .collect();
        let start = Instant::now();
        let runs = instances
            .into_par_iter()
            .map(|inst| {
                let result = solve(&inst, &SolverConfig::default());
                ScaleRun { inst, result }
            })
            .collect();
        (runs, start.elapsed())
    })
}

#[test]
fn criterion_4_certificates() {
    let _guard = serial();
    let (runs, solve_time) = reference_scale_instances();
    let start = Instant::now();
    let tol = CertifyTolerances::default();
    let mut solved = 0;
    let mut infeasible = 0;
    let mut failures = Vec::new();
    let mut worst_gap: f64 = 0.0;
    for (i, run) in runs.iter().enumerate() {
        match &run.result {
            Ok(sol) => {
                solved += 1;
                let cert = certify(&run.inst, &sol.primal, &sol.dual, &tol).unwrap();
                worst_gap = worst_gap.max(cert.duality_gap.abs());
                if !cert.pass || cert.duality_gap.abs() > 1e-6 {
                    failures.push(format!("#{i}: {:?} gap {:e}", cert.failed_conditions(), cert.duality_gap));
                }
            }
            Err(e) if e.is_infeasible() => infeasible += 1,
            Err(e) => failures.push(format!("#{i}: solver error {e}")),
        }
    }
    let elapsed = *solve_time + start.elapsed();
    let pass = solved > 0 && failures.is_empty() && elapsed < Duration::from_secs(120);
    report(
        4,
        "KKT certificate",
        pass,
        format!(
            "{solved} solved, {infeasible} infeasible, {} failures, worst relative gap {worst_gap:.2e} (tol 1e-6), {elapsed:?} (limit 120s) {failures:?}",
            failures.len()
        ),
    );
}

#[test]
fn criterion_5_rank_deficiency() {
    let _guard = serial();
    let (runs, _) = reference_scale_instances();
    let band = 1e-7;
    let mut checked = 0;
    let mut failures = Vec::new();
    for (i, run) in runs.iter().enumerate() {
        let Ok(sol) = &run.result else { continue };
        for k in 0..run.inst.users() {
            let c = build_c(&run.inst, &sol.dual.beta, &sol.dual.lambdas, k);
            let m = c.add_scaled(-sol.dual.beta[k], &run.inst.channel_gram(k));
            let eig = eigenvalues(&m);
            let near = eig.iter().filter(|e| e.abs() <= band).count();
            let above = eig.iter().filter(|&&e| e > band).count();
            checked += 1;
            if near != 1 || above != eig.len() - 1 {
                failures.push(format!("#{i} user {k}: {eig:?}"));
            }
        }
    }
    let pass = checked > 0 && failures.is_empty();
    report(
        5,
        "rank-one witness",
        pass,
        format!("{checked} dual matrices, {} without exactly one eigenvalue in [-{band:e}, {band:e}] {failures:?}", failures.len()),
    );
}

fn random_instance(rng: &mut ChaCha8Rng) -> ProblemInstance {
    let m = rng.random_range(1..=4);
    let k = rng.random_range(1..=4);
    let capacity = rng.random_range(1.0..=4.0);
    let rate = rng.random_range(0.2..=1.2);
    gen_instance(m, k, capacity, 1.0, rate, rng).unwrap()
}

fn random_positive(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| 10f64.powf(rng.random_range(-2.0..=2.0))).collect()
}

/// Checks positivity, monotonicity and scalability of `map` at one point.
fn standard_at(
    rng: &mut ChaCha8Rng,
    x: &[f64],
    map: &dyn Fn(&[f64]) -> Vec<f64>,
) -> Result<(), String> {
    let fx = map(x);
    if fx.iter().any(|v| !(*v > 0.0)) {
        return Err(format!("not positive: {fx:?} at {x:?}"));
    }
    let bumped: Vec<f64> = x.iter().map(|v| v + rng.random_range(0.0..=1.0) * v).collect();
    let fb = map(&bumped);
    if fb.iter().zip(&fx).any(|(b, a)| *b < *a * (1.0 - 1e-12)) {
        return Err(format!("not monotone: {fx:?} -> {fb:?}"));
    }
    let alpha = rng.random_range(1.01..=3.0);
    let scaled: Vec<f64> = x.iter().map(|v| alpha * v).collect();
    let fs = map(&scaled);
    if fs.iter().zip(&fx).any(|(s, a)| !(alpha * a > *s)) {
        return Err(format!("not scalable at alpha {alpha}: {fx:?} vs {fs:?}"));
    }
    Ok(())
}

#[test]
fn criterion_6_standard_interference_functions() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let trials = 1000;
    let mut failures = Vec::new();

    for _ in 0..trials {
        let inst = random_instance(&mut rng);
        let beta = random_positive(&mut rng, inst.users());
        if let Err(e) = standard_at(&mut rng, &beta, &|b| beta_map(&inst, b).unwrap()) {
            failures.push(format!("dual map: {e}"));
        }
    }

    let mut primal_trials = 0;
    while primal_trials < trials {
        let inst = random_instance(&mut rng);
        let Ok(dual) = solve_dual(&inst, &SolverConfig::default()) else { continue };
        let dirs = beam_directions(&inst, &dual.solution).unwrap();
        for _ in 0..10 {
            let p = random_positive(&mut rng, inst.users());
            if let Err(e) = standard_at(&mut rng, &p, &|p| power_map(&inst, &dual.solution, &dirs, p).unwrap()) {
                failures.push(format!("primal map: {e}"));
            }
            primal_trials += 1;
        }
    }
    let pass = failures.is_empty();
    report(
        6,
        "standard interference functions",
        pass,
        format!("{trials} dual and {primal_trials} primal triples, {} violations {:?}", failures.len(), failures.first()),
    );
}

fn full_sweep() -> SweepConfig {
    SweepConfig {
        relays: 8,
        users: 10,
        capacity: 3.0,
        sigma2: 1.0,
        rate_targets: SWEEP_RATES.to_vec(),
        runs: 200,
        seed: 2014,
        threads: None,
        record_timing: false,
        tol: None,
        max_iters: None,
    }
}

struct SweepOutcome {
    csv: String,
    pass: bool,
    detail: String,
}

/// The first full sweep, shared by the trend and determinism checks.
fn first_sweep() -> &'static SweepOutcome {
    static OUTCOME: OnceLock<SweepOutcome> = OnceLock::new();
    OUTCOME.get_or_init(|| {
        let start = Instant::now();
        let report = run_sweep(&full_sweep()).unwrap();
        let elapsed = start.elapsed();
        let means: Vec<Option<f64>> = report.summary.iter().map(|s| s.mean_objective).collect();
        let increasing = means.windows(2).all(|w| matches!((w[0], w[1]), (Some(a), Some(b)) if a < b));
        let uncertified = report
            .runs
            .iter()
            .filter(|r| r.status == RunStatus::Solved && r.certified != Some(true))
            .count();
        let failed = report.runs.iter().filter(|r| r.status == RunStatus::Failed).count();
        let table: Vec<String> = report
            .summary
            .iter()
            .map(|s| format!("r={} mean={:?} solved={} infeasible={}", s.rate_target, s.mean_objective, s.solved, s.infeasible))
            .collect();
        SweepOutcome {
            csv: to_csv(&report.runs),
            pass: increasing && uncertified == 0 && failed == 0 && elapsed < Duration::from_secs(300),
            detail: format!(
                "means strictly increasing: {increasing}; {uncertified} solved runs uncertified, {failed} failed; {elapsed:?} (limit 300s); {table:?}"
            ),
        }
    })
}

#[test]
fn criterion_7_rate_sweep_trend() {
    let _guard = serial();
    let outcome = first_sweep();
    report(7, "sweep trend", outcome.pass, outcome.detail.clone());
}

#[test]
fn criterion_8_determinism() {
    let _guard = serial();
    let first = &first_sweep().csv;
    let second = to_csv(&run_sweep(&full_sweep()).unwrap().runs);
    let rows = second.lines().count() - 1;
    report(8, "determinism", *first == second, format!("{rows} rows, identical: {}", *first == second));
}
