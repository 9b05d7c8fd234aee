//! Acceptance criteria. Prints one PASS/FAIL/SKIPPED line per criterion and
//! exits nonzero if any criterion fails.
//!
//! The real-data criteria read CSV files (last column `label`) from
//! `DA_DATA_DIR`: `COIL_1.csv`, `COIL_2.csv`, `USPS.csv`, `MNIST.csv`. They are
//! skipped when the files are absent, unless `DA_REQUIRE_DATA=1`.

use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uda_bench::{parse_suite, run_suite, Report};
use uda_core::data::{make_synthetic_pair, SyntheticSpec};
use uda_core::engine::run_adaptation;
use uda_core::graph::{build_affinity, laplacian_energy, propagate, LabelStage};
use uda_core::mmd::{self, CompositeMode, MmdMatrix};
use uda_core::subspace::{projection_pencil, solve_symmetric_pencil};
use uda_core::{AdaptationConfig, AdaptationResult, AffinityGraph, LabelMatrix, Method, SigmaRule, SubdomainIndex};
use uda_oracle as oracle;

const TRACE_REL_TOL: f64 = 1e-10;
const SYMMETRY_TOL: f64 = 1e-12;
const ROW_SUM_TOL: f64 = 1e-12;
const PSD_TOL: f64 = -1e-10;
const PENCIL_RESIDUAL_TOL: f64 = 1e-8;
const PENCIL_CONSTRAINT_TOL: f64 = 1e-8;
const PENCIL_ORACLE_TOL: f64 = 1e-8;
const INVERSE_TOL: f64 = 1e-10;
const SMALL_ALPHA_TOL: f64 = 1e-9;
const ENERGY_TOL: f64 = 1e-10;
const ORDERING_SLACK: f64 = 0.01;
const CONVERGENCE_ITERATIONS: usize = 5;
const CONVERGENCE_SHARE: f64 = 0.9;

const COIL_DGADA_MIN: f64 = 0.98;
const COIL_CDDA_TARGET: f64 = 0.9271;
const DIGITS_DGADA_TARGET: f64 = 0.7654;
const DIGITS_CDDA_TARGET: f64 = 0.6914;
const REPRODUCTION_BAND: f64 = 0.03;

enum Outcome {
    Pass(String),
    Fail(String),
    Skipped(String),
}

fn verdict(ok: bool, detail: String) -> Outcome {
    if ok {
        Outcome::Pass(detail)
    } else {
        Outcome::Fail(detail)
    }
}

fn within_budget(elapsed: Duration, budget: Duration) -> (bool, String) {
    (elapsed <= budget, format!("{:.2}s of {:.0}s", elapsed.as_secs_f64(), budget.as_secs_f64()))
}

struct Instance {
    x: DMatrix<f64>,
    a: DMatrix<f64>,
    source: Vec<usize>,
    target: Vec<usize>,
    classes: usize,
}

fn instances(count: usize) -> Vec<Instance> {
    let mut rng = ChaCha8Rng::seed_from_u64(0xacce);
    (0..count)
        .map(|_| {
            let m = rng.random_range(1..=10);
            let classes = rng.random_range(1..=4);
            let ns = rng.random_range(1..=20);
            let nt = rng.random_range(1..=20);
            let k = rng.random_range(1..=m);
            Instance {
                x: DMatrix::from_fn(m, ns + nt, |_, _| rng.random_range(-3.0..3.0)),
                a: DMatrix::from_fn(m, k, |_, _| rng.random_range(-1.0..1.0)),
                source: (0..ns).map(|_| rng.random_range(0..classes)).collect(),
                target: (0..nt).map(|_| rng.random_range(0..classes)).collect(),
                classes,
            }
        })
        .collect()
}

fn rel_err(got: f64, want: f64) -> f64 {
    let scale = got.abs().max(want.abs());
    if scale < 1e-14 {
        (got - want).abs()
    } else {
        (got - want).abs() / scale
    }
}

fn criterion_trace_identity(set: &[Instance]) -> Outcome {
    let started = Instant::now();
    let mut worst = 0.0f64;
    for inst in set {
        let (ns, nt) = (inst.source.len(), inst.target.len());
        let z = oracle::matmul(&oracle::transpose(&oracle::from_na(&inst.a)), &oracle::from_na(&inst.x));
        let idx = SubdomainIndex::new(&inst.source, &inst.target, inst.classes).unwrap();
        let m0 = mmd::build_marginal::<f64>(ns, nt).unwrap();
        worst = worst.max(rel_err(m0.embedded_discrepancy(&inst.x, &inst.a), oracle::marginal_distance(&z, ns, nt)));
        for c in 0..inst.classes {
            let mc = mmd::build_conditional::<f64>(&idx, c).unwrap();
            let direct = oracle::conditional_distance(&z, &inst.source, &inst.target, c);
            worst = worst.max(rel_err(mc.embedded_discrepancy(&inst.x, &inst.a), direct));
        }
        let rep = mmd::build_repulsive::<f64>(&idx).unwrap();
        let direct = oracle::repulsive_s2t_distance(&z, &inst.source, &inst.target, inst.classes)
            + oracle::repulsive_t2s_distance(&z, &inst.source, &inst.target, inst.classes);
        worst = worst.max(rel_err(rep.embedded_discrepancy(&inst.x, &inst.a), direct));
    }
    let (fast, time) = within_budget(started.elapsed(), Duration::from_secs(5));
    verdict(
        worst <= TRACE_REL_TOL && fast,
        format!("{} instances, max relative error {worst:.2e} (tol {TRACE_REL_TOL:.0e}), {time}", set.len()),
    )
}

fn criterion_matrix_properties(set: &[Instance]) -> Outcome {
    let (mut asym, mut row_sum, mut min_eig) = (0.0f64, 0.0f64, f64::INFINITY);
    let mut checked = 0;
    for inst in set {
        let idx = SubdomainIndex::new(&inst.source, &inst.target, inst.classes).unwrap();
        let mut all: Vec<MmdMatrix<f64>> = vec![mmd::build_marginal(inst.source.len(), inst.target.len()).unwrap()];
        all.extend(mmd::build_conditionals(&idx));
        all.push(mmd::build_repulsive_source_to_target(&idx));
        all.push(mmd::build_repulsive_target_to_source(&idx));
        for m in &all {
            let c = oracle::from_na(m.coefficients());
            let n = c.len();
            for i in 0..n {
                row_sum = row_sum.max(c[i].iter().sum::<f64>().abs());
                for j in 0..n {
                    asym = asym.max((c[i][j] - c[j][i]).abs());
                }
            }
            min_eig = min_eig.min(oracle::jacobi_eigen(&c).0[0]);
            checked += 1;
        }
    }
    verdict(
        asym <= SYMMETRY_TOL && row_sum <= ROW_SUM_TOL && min_eig >= PSD_TOL,
        format!("{checked} matrices: max asymmetry {asym:.1e}, max |row sum| {row_sum:.1e}, min eigenvalue {min_eig:.1e}"),
    )
}

fn criterion_eigensolver() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0xe16e);
    let (mut residual, mut constraint, mut oracle_gap) = (0.0f64, 0.0f64, 0.0f64);
    let mut oracle_cases = 0;
    for case in 0..50 {
        let n = if case < 20 { rng.random_range(1..=8) } else { rng.random_range(9..=60) };
        let (s1, s2) = if case % 2 == 0 {
            let g = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.0f64..1.0));
            let h = DMatrix::from_fn(n, n + 3, |_, _| rng.random_range(-1.0f64..1.0));
            (&g + g.transpose(), &h * h.transpose() + DMatrix::identity(n, n) * 0.05)
        } else {
            // as built by the solver, with more samples than features
            let ns = rng.random_range(n / 2 + 2..=n / 2 + 30);
            projection_case(&mut rng, n, ns, ns)
        };
        let k = rng.random_range(1..=n);
        let sol = solve_symmetric_pencil(&s1, &s2, k).unwrap();
        let a = &sol.eigenvectors;
        let phi = DMatrix::from_diagonal(&DVector::from_vec(sol.eigenvalues.clone()));
        let lhs = &s1 * a;
        residual = residual.max((&lhs - &s2 * a * phi).norm() / lhs.norm().max(f64::MIN_POSITIVE));
        constraint = constraint.max((a.transpose() * &s2 * a - DMatrix::identity(k, k)).norm());
        if n <= 8 {
            let expected = oracle::pencil_eigenvalues(&oracle::from_na(&s1), &oracle::from_na(&s2));
            let full = solve_symmetric_pencil(&s1, &s2, n).unwrap();
            for (g, w) in full.eigenvalues.iter().zip(&expected) {
                oracle_gap = oracle_gap.max((g - w).abs());
            }
            oracle_cases += 1;
        }
    }
    // Informational: with fewer samples than features the constraint matrix is
    // singular up to its ridge and the reduction loses about cond(S₂)·ε.
    let mut deficient = 0.0f64;
    for _ in 0..10 {
        let n = rng.random_range(20..=60);
        let (s1, s2) = projection_case(&mut rng, n, n / 4, n / 4);
        let sol = solve_symmetric_pencil(&s1, &s2, n / 2).unwrap();
        let a = &sol.eigenvectors;
        let phi = DMatrix::from_diagonal(&DVector::from_vec(sol.eigenvalues.clone()));
        let lhs = &s1 * a;
        deficient = deficient.max((&lhs - &s2 * a * phi).norm() / lhs.norm());
    }
    verdict(
        residual < PENCIL_RESIDUAL_TOL && constraint < PENCIL_CONSTRAINT_TOL && oracle_gap < PENCIL_ORACLE_TOL,
        format!(
            "50 pencils: residual {residual:.1e}, constraint {constraint:.1e}, dense-oracle gap {oracle_gap:.1e} over {oracle_cases} small pencils (rank-deficient data, not gated: residual {deficient:.1e})"
        ),
    )
}

/// Projection pencil for random `n`-feature data with a CDDA composite.
fn projection_case(rng: &mut ChaCha8Rng, n: usize, ns: usize, nt: usize) -> (DMatrix<f64>, DMatrix<f64>) {
    let x = DMatrix::from_fn(n, ns + nt, |_, _| rng.random_range(-1.0f64..1.0));
    let source: Vec<usize> = (0..ns).map(|_| rng.random_range(0..3)).collect();
    let target: Vec<usize> = (0..nt).map(|_| rng.random_range(0..3)).collect();
    let idx = SubdomainIndex::new(&source, &target, 3).unwrap();
    let m = mmd::assemble_composite(
        &mmd::build_marginal(ns, nt).unwrap(),
        &mmd::build_conditionals(&idx),
        Some(&mmd::build_repulsive(&idx).unwrap()),
        CompositeMode::Cdda,
        false,
    )
    .unwrap();
    projection_pencil(&x, m.coefficients(), 0.1).unwrap()
}

fn criterion_propagation() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(0x9a9);
    let (mut inverse_gap, mut limit_gap, mut energy_gap) = (0.0f64, 0.0f64, 0.0f64);
    for case in 0..60 {
        let n = rng.random_range(2..=10);
        let graph = if case % 2 == 0 {
            let z = DMatrix::from_fn(2, n, |_, _| rng.random_range(-2.0f64..2.0));
            build_affinity(&z, SigmaRule::Median, None).unwrap()
        } else {
            let mut w = DMatrix::zeros(n, n);
            for i in 0..n {
                for j in (i + 1)..n {
                    let v = rng.random_range(0.01..1.0);
                    w[(i, j)] = v;
                    w[(j, i)] = v;
                }
            }
            AffinityGraph::from_weights(w, 1.0).unwrap()
        };
        let y = DMatrix::from_fn(n, 3, |_, _| if rng.random_bool(0.4) { 1.0 } else { 0.0 });
        let y0 = LabelMatrix::from_values(y.clone(), LabelStage::Initial);
        let alpha = rng.random_range(0.05..0.99);

        let mut system = oracle::from_na(&(graph.weights() * -alpha));
        for i in 0..n {
            system[i][i] = graph.degrees()[i];
        }
        let expected = oracle::matmul(&oracle::invert(&system), &oracle::from_na(&y));
        let got = propagate(&graph, &y0, alpha).unwrap();
        inverse_gap = inverse_gap.max(oracle::max_abs_diff(&oracle::from_na(got.values()), &expected));

        let tiny = propagate(&graph, &y0, 1e-13).unwrap();
        for i in 0..n {
            for c in 0..3 {
                limit_gap = limit_gap.max((tiny.values()[(i, c)] - y[(i, c)] / graph.degrees()[i]).abs());
            }
        }

        let energy = laplacian_energy(&got, &graph).unwrap();
        let direct = oracle::laplacian_double_sum(&oracle::from_na(graph.weights()), &oracle::from_na(got.values()));
        energy_gap = energy_gap.max((energy - direct).abs() / direct.abs().max(1.0));
    }
    verdict(
        inverse_gap < INVERSE_TOL && limit_gap < SMALL_ALPHA_TOL && energy_gap < ENERGY_TOL,
        format!("60 graphs: inverse gap {inverse_gap:.1e}, small-alpha gap {limit_gap:.1e}, energy gap {energy_gap:.1e}"),
    )
}

struct SyntheticRuns {
    /// `accuracy[method][seed]`
    accuracy: Vec<Vec<f64>>,
    converged_fast: Vec<Vec<bool>>,
    elapsed: Duration,
}

fn synthetic_runs() -> SyntheticRuns {
    let spec = SyntheticSpec::four_class();
    let started = Instant::now();
    let mut accuracy = vec![Vec::new(); Method::ALL.len()];
    let mut converged_fast = vec![Vec::new(); Method::ALL.len()];
    for seed in 0..20 {
        let (s, t) = make_synthetic_pair::<f64>(&spec, seed).unwrap();
        for (i, &method) in Method::ALL.iter().enumerate() {
            let cfg = AdaptationConfig::preset("synthetic", method).unwrap();
            let result = run_adaptation(&s, &t, &cfg).unwrap();
            accuracy[i].push(result.final_accuracy.unwrap());
            converged_fast[i].push(fast_convergence(&result));
        }
    }
    SyntheticRuns {
        accuracy,
        converged_fast,
        elapsed: started.elapsed(),
    }
}

fn fast_convergence(result: &AdaptationResult<f64>) -> bool {
    result.iterations_to_converge().is_some_and(|t| t <= CONVERGENCE_ITERATIONS)
}

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn criterion_synthetic_ordering(runs: &SyntheticRuns) -> Outcome {
    let m: Vec<f64> = runs.accuracy.iter().map(|a| mean(a)).collect();
    let at = |method: Method| m[Method::ALL.iter().position(|&x| x == method).unwrap()];
    let pairs = [
        (Method::Dgada, Method::Cdda),
        (Method::Dgada, Method::Gada),
        (Method::Gada, Method::Jda),
        (Method::Jda, Method::Tca),
    ];
    let worst_gap = pairs.iter().map(|&(hi, lo)| at(hi) - at(lo)).fold(f64::INFINITY, f64::min);
    let (fast, time) = within_budget(runs.elapsed, Duration::from_secs(120));
    let means = Method::ALL
        .iter()
        .zip(&m)
        .map(|(method, acc)| format!("{method} {:.2}", 100.0 * acc))
        .collect::<Vec<_>>()
        .join(", ");
    verdict(
        worst_gap >= -ORDERING_SLACK && fast,
        format!("20 seeds: {means}; smallest ordered gap {:+.2} points (slack {:.0}), {time}", 100.0 * worst_gap, 100.0 * ORDERING_SLACK),
    )
}

fn data_dir() -> Option<PathBuf> {
    std::env::var_os("DA_DATA_DIR").map(PathBuf::from)
}

fn require_data() -> bool {
    std::env::var("DA_REQUIRE_DATA").is_ok_and(|v| v == "1")
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

/// Runs a shipped real-data suite restricted to `methods`, or explains why not.
fn real_suite(config: &str, files: &[&str], methods: &[Method]) -> Result<(Report, Duration), String> {
    let dir = data_dir().ok_or("DA_DATA_DIR not set")?;
    let missing: Vec<&str> = files.iter().copied().filter(|f| !dir.join(f).is_file()).collect();
    if !missing.is_empty() {
        return Err(format!("missing {} in {}", missing.join(", "), dir.display()));
    }
    let text = std::fs::read_to_string(configs_dir().join(config)).map_err(|e| e.to_string())?;
    let mut suite = parse_suite(&text, &configs_dir(), Some(&dir)).map_err(|e| e.to_string())?;
    for task in &mut suite.tasks {
        task.methods = methods.to_vec();
    }
    let started = Instant::now();
    let report = run_suite(&suite, 1).map_err(|e| e.to_string())?;
    Ok((report, started.elapsed()))
}

fn method_mean(report: &Report, method: Method) -> f64 {
    let v: Vec<f64> = report
        .rows
        .iter()
        .filter(|r| r.method == method)
        .map(|r| r.final_accuracy.unwrap_or(0.0))
        .collect();
    mean(&v)
}

fn unavailable(reason: String) -> Outcome {
    if require_data() {
        Outcome::Fail(format!("data required but {reason}"))
    } else {
        Outcome::Skipped(format!("data unavailable: {reason}"))
    }
}

fn criterion_coil(coil: &Result<(Report, Duration), String>) -> Outcome {
    match coil {
        Err(reason) => unavailable(reason.clone()),
        Ok((report, elapsed)) => {
            let dgada = method_mean(report, Method::Dgada);
            let cdda = method_mean(report, Method::Cdda);
            let (fast, time) = within_budget(*elapsed, Duration::from_secs(600));
            verdict(
                !report.failed() && dgada >= COIL_DGADA_MIN && (cdda - COIL_CDDA_TARGET).abs() <= REPRODUCTION_BAND && fast,
                format!(
                    "DGA-DA {:.2}% (need ≥ {:.0}%), CDDA {:.2}% (reference {:.2}% ± 3), {time}",
                    100.0 * dgada,
                    100.0 * COIL_DGADA_MIN,
                    100.0 * cdda,
                    100.0 * COIL_CDDA_TARGET
                ),
            )
        }
    }
}

fn criterion_digits() -> Outcome {
    match real_suite("digits.toml", &["USPS.csv", "MNIST.csv"], &[Method::Cdda, Method::Dgada]) {
        Err(reason) => unavailable(reason),
        Ok((report, elapsed)) => {
            let dgada = method_mean(&report, Method::Dgada);
            let cdda = method_mean(&report, Method::Cdda);
            let (fast, time) = within_budget(elapsed, Duration::from_secs(900));
            verdict(
                !report.failed()
                    && (dgada - DIGITS_DGADA_TARGET).abs() <= REPRODUCTION_BAND
                    && (cdda - DIGITS_CDDA_TARGET).abs() <= REPRODUCTION_BAND
                    && fast,
                format!(
                    "DGA-DA {:.2}% (reference {:.2}% ± 3), CDDA {:.2}% (reference {:.2}% ± 3), {time}",
                    100.0 * dgada,
                    100.0 * DIGITS_DGADA_TARGET,
                    100.0 * cdda,
                    100.0 * DIGITS_CDDA_TARGET
                ),
            )
        }
    }
}

fn criterion_convergence(runs: &SyntheticRuns, coil: &Result<(Report, Duration), String>) -> Outcome {
    let mut flags: Vec<bool> = runs.converged_fast.iter().flatten().copied().collect();
    let synthetic = flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64;
    let mut detail = format!("synthetic {:.0}% of {} runs", 100.0 * synthetic, flags.len());
    match coil {
        Ok((report, _)) => {
            let coil_flags: Vec<bool> = report
                .rows
                .iter()
                .map(|r| r.converged_at.is_some_and(|t| t <= CONVERGENCE_ITERATIONS))
                .collect();
            let share = coil_flags.iter().filter(|&&f| f).count() as f64 / coil_flags.len() as f64;
            detail.push_str(&format!(", COIL {:.0}% of {} runs", 100.0 * share, coil_flags.len()));
            flags.extend(coil_flags);
        }
        Err(reason) => detail.push_str(&format!(", COIL not run ({reason})")),
    }
    let share = flags.iter().filter(|&&f| f).count() as f64 / flags.len() as f64;
    verdict(
        share >= CONVERGENCE_SHARE,
        format!("{detail}; zero changes within {CONVERGENCE_ITERATIONS} iterations in {:.0}% overall (need ≥ 90%)", 100.0 * share),
    )
}

fn criterion_determinism() -> Outcome {
    let text = std::fs::read_to_string(configs_dir().join("synthetic.toml")).unwrap();
    let suite = parse_suite(&text, &configs_dir(), None).unwrap();
    let first = run_suite(&suite, 1).unwrap();
    let second = run_suite(&suite, 1).unwrap();
    let same_predictions = first.rows.iter().zip(&second.rows).all(|(a, b)| a.predictions == b.predictions);
    let same_payload = first.payload_json() == second.payload_json();
    verdict(
        same_predictions && same_payload && !first.failed(),
        format!("{} rows; predictions identical: {same_predictions}, payload identical: {same_payload}", first.rows.len()),
    )
}

fn main() {
    // `cargo test -- --list` and filters should not run the whole suite
    let args: Vec<String> = std::env::args().collect();
    if args.iter().any(|a| a == "--list") {
        println!("acceptance: test");
        return;
    }

    let set = instances(100);
    let runs = synthetic_runs();
    let coil = real_suite("coil.toml", &["COIL_1.csv", "COIL_2.csv"], &[Method::Cdda, Method::Dgada]);
    let results = [
        ("1 MMD trace identity", criterion_trace_identity(&set)),
        ("2 MMD matrix properties", criterion_matrix_properties(&set)),
        ("3 eigensolver contract", criterion_eigensolver()),
        ("4 propagation oracle", criterion_propagation()),
        ("5 synthetic ordering", criterion_synthetic_ordering(&runs)),
        ("6 COIL20 reproduction", criterion_coil(&coil)),
        ("7 USPS+MNIST reproduction", criterion_digits()),
        ("8 convergence", criterion_convergence(&runs, &coil)),
        ("9 determinism", criterion_determinism()),
    ];
    let mut failed = 0;
    for (name, outcome) in &results {
        let (tag, detail) = match outcome {
            Outcome::Pass(d) => ("PASS", d),
            Outcome::Fail(d) => {
                failed += 1;
                ("FAIL", d)
            }
            Outcome::Skipped(d) => ("SKIPPED", d),
        };
        println!("[{tag}] {name}: {detail}");
    }
    if failed > 0 {
        println!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}
