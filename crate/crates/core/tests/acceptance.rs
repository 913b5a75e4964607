//! Acceptance gate: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

#![allow(clippy::needless_range_loop)]

use std::process::ExitCode;
use std::time::Instant;

use eigenseries::evolution::{confluent_divided_difference, evolution_coefficient, evolution_series, EvolveConfig};
use eigenseries::hamiltonian::{generate_model, split, HermitianMatrix, ModelSpec, SplitHamiltonian};
use eigenseries::kernel::{kernel_resolvent, kernel_series, KernelConfig};
use eigenseries::linalg::{dotc, norm2, CMatrix, C64};
use eigenseries::oracle::{dense_eig, expm_minus_iht};
use eigenseries::solver::{
    build_q, eigenvalue_operator_residual, eigenvalue_series_eq19, rs_perturbation, solve_level, solve_spectrum,
    QForm, SolveConfig, Spectrum,
};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngAlgorithm, TestRng, TestRunner};

struct Verdict {
    pass: bool,
    detail: String,
}

fn verdict(pass: bool, detail: String) -> Verdict {
    Verdict { pass, detail }
}

fn spectrum_grid() -> Vec<(String, HermitianMatrix)> {
    let mut out = Vec::new();
    for dim in [4, 8, 12] {
        for lam in [0.1, 0.2, 0.3] {
            let spec = ModelSpec::chain(dim, 1.0, lam);
            out.push((format!("chain({dim},{lam})"), generate_model(&spec).unwrap()));
        }
    }
    for seed in [7, 42, 99] {
        let spec = ModelSpec::banded_random(8, 0.2, seed);
        out.push((format!("banded_random(8,0.2,{seed})"), generate_model(&spec).unwrap()));
    }
    out
}

struct GridRun {
    name: String,
    h: HermitianMatrix,
    s: SplitHamiltonian,
    spectrum: Spectrum,
}

fn solve_grid() -> (Vec<GridRun>, f64) {
    let start = Instant::now();
    let runs = spectrum_grid()
        .into_iter()
        .map(|(name, h)| {
            let s = split(&h);
            let spectrum = solve_spectrum(&s, &SolveConfig::default()).unwrap();
            GridRun { name, h, s, spectrum }
        })
        .collect();
    (runs, start.elapsed().as_secs_f64())
}

/// Roots of x(x − Δ) = λ², lower root from the product to avoid cancellation.
fn quadratic_roots(delta: f64, lambda: f64) -> [f64; 2] {
    let hi = (delta + (delta * delta + 4.0 * lambda * lambda).sqrt()) / 2.0;
    [-lambda * lambda / hi, hi]
}

fn criterion_1() -> Verdict {
    let cfg = SolveConfig::default();
    let mut worst_err: f64 = 0.0;
    let mut worst_ms: f64 = 0.0;
    for lam in [0.3, 1.0] {
        let s = split(&generate_model(&ModelSpec::two_level(1.0, lam)).unwrap());
        let roots = quadratic_roots(1.0, lam);
        let _ = solve_level(&s, 0, &cfg);
        for gamma in 0..2 {
            let t = Instant::now();
            let p = solve_level(&s, gamma, &cfg).unwrap();
            worst_ms = worst_ms.max(t.elapsed().as_secs_f64() * 1e3);
            worst_err = worst_err.max((p.energy - roots[gamma]).abs());
        }
    }
    verdict(
        worst_err <= 1e-12 && worst_ms < 10.0,
        format!("max |error| = {worst_err:.2e} (tol 1e-12), slowest level {worst_ms:.3} ms (limit 10 ms)"),
    )
}

fn sorted_energies(sp: &Spectrum) -> Option<Vec<(f64, usize)>> {
    let mut e: Vec<(f64, usize)> = sp.energies()?.into_iter().zip(0..).collect();
    e.sort_by(|a, b| a.0.total_cmp(&b.0));
    Some(e)
}

fn criterion_2(runs: &[GridRun], seconds: f64) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut worst_res: f64 = 0.0;
    let mut failed = Vec::new();
    let start = Instant::now();
    for r in runs {
        let oracle = dense_eig(&r.h).unwrap();
        match sorted_energies(&r.spectrum) {
            Some(e) => {
                for ((x, _), y) in e.iter().zip(&oracle.values) {
                    worst = worst.max((x - y).abs());
                }
                for p in r.spectrum.pairs() {
                    worst_res = worst_res.max(p.residual);
                }
            }
            None => failed.push(r.name.clone()),
        }
    }
    let total = seconds + start.elapsed().as_secs_f64();
    verdict(
        failed.is_empty() && worst <= 1e-10 && worst_res <= 1e-10 && total < 5.0,
        format!(
            "max |Ẽ − oracle| = {worst:.2e}, max residual = {worst_res:.2e} (tol 1e-10), runtime {total:.3} s (limit 5 s){}",
            if failed.is_empty() { String::new() } else { format!(", unsolved: {failed:?}") }
        ),
    )
}

fn criterion_3(runs: &[GridRun]) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut complete = true;
    for r in runs {
        let oracle = dense_eig(&r.h).unwrap();
        let Some(order) = sorted_energies(&r.spectrum) else {
            complete = false;
            continue;
        };
        let pairs: Vec<_> = r.spectrum.pairs().collect();
        for (k, &(_, gamma)) in order.iter().enumerate() {
            let v = pairs[gamma].normalized_amplitudes();
            let o = oracle.vector(k);
            let overlap = dotc(&o, &v);
            let phase = overlap.conj() / overlap.norm();
            let diff: Vec<C64> = v.iter().zip(&o).map(|(a, b)| a * phase - b).collect();
            worst = worst.max(norm2(&diff));
        }
    }
    verdict(
        complete && worst <= 1e-8,
        format!("max phase-aligned ‖v − v_oracle‖₂ = {worst:.2e} (tol 1e-8)"),
    )
}

fn criterion_4(runs: &[GridRun]) -> Verdict {
    let mut worst: f64 = 0.0;
    let mut errors = 0;
    let mut count = 0;
    for r in runs {
        for p in r.spectrum.pairs() {
            count += 1;
            match eigenvalue_operator_residual(&r.s, p.gamma, p.energy) {
                Ok(v) => worst = worst.max(v),
                Err(_) => errors += 1,
            }
        }
    }
    verdict(
        errors == 0 && worst <= 1e-10,
        format!("{count} roots, max operator residual = {worst:.2e} (tol 1e-10), singular evaluations: {errors}"),
    )
}

fn criterion_5() -> Verdict {
    let cfg = SolveConfig {
        eq19_max_m: 8,
        ..SolveConfig::default()
    };
    let mut converged = 0;
    let mut flagged = 0;
    let mut silent_wrong = 0;
    let mut worst: f64 = 0.0;
    for lam in [0.01, 0.05, 0.1] {
        for spec in [ModelSpec::two_level(1.0, lam), ModelSpec::chain(4, 1.0, lam)] {
            let s = split(&generate_model(&spec).unwrap());
            for gamma in 0..s.dim() {
                let exact = solve_level(&s, gamma, &cfg).unwrap().energy;
                let r = eigenvalue_series_eq19(&s, gamma, &cfg).unwrap();
                let err = (r.value - exact).abs();
                if r.converged {
                    converged += 1;
                    worst = worst.max(err);
                    if err > 1e-8 {
                        silent_wrong += 1;
                    }
                } else {
                    flagged += 1;
                }
            }
        }
    }
    verdict(
        silent_wrong == 0 && converged > 0,
        format!(
            "{converged} converged (max |error| = {worst:.2e}, tol 1e-8), {flagged} flagged non-converged, {silent_wrong} silently wrong"
        ),
    )
}

fn log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let lx: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ly: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = lx.iter().sum::<f64>() / n;
    let my = ly.iter().sum::<f64>() / n;
    let sxy: f64 = lx.iter().zip(&ly).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = lx.iter().map(|x| (x - mx).powi(2)).sum();
    sxy / sxx
}

fn criterion_6() -> Verdict {
    let lambdas = [0.01, 0.02, 0.04, 0.08];
    let mut slopes = Vec::new();
    for gamma in 0..4 {
        let points: Vec<(f64, f64)> = lambdas
            .iter()
            .map(|&lam| {
                let s = split(&generate_model(&ModelSpec::chain(4, 1.0, lam)).unwrap());
                let e = solve_level(&s, gamma, &SolveConfig::default()).unwrap().energy;
                (lam, (e - rs_perturbation(&s, gamma, 2).unwrap()).abs())
            })
            .collect();
        slopes.push(log_log_slope(&points));
    }
    let min = slopes.iter().copied().fold(f64::INFINITY, f64::min);
    verdict(
        min >= 2.7,
        format!("slopes per γ = {:?}, min {min:.3} (need ≥ 2.7)", slopes.iter().map(|s| (s * 1e3).round() / 1e3).collect::<Vec<_>>()),
    )
}

fn criterion_7() -> Verdict {
    let start = Instant::now();
    // (model, t) with λ·t ≤ 1 and dim ≤ 6
    let cases = [
        (ModelSpec::two_level(1.0, 1.0), 1.0),
        (ModelSpec::two_level(1.0, 0.5), 2.0),
        (ModelSpec::chain(4, 1.0, 0.5), 0.5),
        (ModelSpec::chain(4, 1.0, 0.5), 2.0),
        (ModelSpec::chain(6, 1.0, 0.25), 4.0),
        (ModelSpec::banded_random(6, 0.5, 7), 1.0),
        (ModelSpec::banded_random(5, 0.2, 3), 5.0),
        (ModelSpec::banded_random(6, 1.0, 11), -1.0),
    ];
    let cfg = EvolveConfig::default();
    let mut worst_oracle: f64 = 0.0;
    let mut worst_unitarity: f64 = 0.0;
    for (spec, t) in &cases {
        let h = generate_model(spec).unwrap();
        let e = evolution_series(&split(&h), *t, &cfg).unwrap();
        let u = expm_minus_iht(&h, *t).unwrap();
        worst_oracle = worst_oracle.max(e.assembled.sub(&u).frobenius_norm());
        worst_unitarity = worst_unitarity.max(e.unitarity_deviation);
    }

    // first-order coefficient at small t
    let t = 1e-6;
    let a1_deviation = |s: &SplitHamiltonian| -> (f64, f64) {
        let a1 = evolution_coefficient(s, 1, t).unwrap();
        let g = s.coupling();
        let want = g.scale(C64::new(0.0, -t));
        let gmax = g.max_abs();
        let mut dev: f64 = 0.0;
        let mut bound: f64 = 0.0;
        for i in 0..s.dim() {
            for j in 0..s.dim() {
                dev = dev.max((a1[(i, j)] - want[(i, j)]).norm() / gmax);
                let lead = t * t / 2.0 * (s.levels()[i] + s.levels()[j]).abs() * g[(i, j)].norm() / gmax;
                bound = bound.max((a1[(i, j)] - want[(i, j)]).norm() / gmax - lead);
            }
        }
        (dev, bound)
    };
    let (two_level_dev, _) = a1_deviation(&split(&generate_model(&ModelSpec::two_level(1.0, 1.0)).unwrap()));
    let mut beyond_leading: f64 = 0.0;
    let mut grid_dev: f64 = 0.0;
    for (spec, _) in &cases {
        let (dev, excess) = a1_deviation(&split(&generate_model(spec).unwrap()));
        grid_dev = grid_dev.max(dev);
        beyond_leading = beyond_leading.max(excess);
    }

    // confluent continuity on 3-node sets
    let mut continuity: f64 = 0.0;
    for &a in &[-2.0, -0.3, 0.0, 0.7, 1.5] {
        for &b in &[-1.0, 0.2, 0.70001, 3.0] {
            for &tt in &[0.1, 1.0, 3.0, -2.0] {
                let base = confluent_divided_difference(&[a, a, b], tt).unwrap();
                let moved = confluent_divided_difference(&[a + 1e-7, a, b], tt).unwrap();
                continuity = continuity.max((base - moved).norm() / (1.0 + f64::abs(tt)));
            }
        }
    }
    let secs = start.elapsed().as_secs_f64();
    verdict(
        worst_oracle <= 1e-8
            && worst_unitarity <= 1e-8
            && two_level_dev <= 1e-12
            && beyond_leading <= 1e-12
            && continuity <= 1e-6
            && secs < 10.0,
        format!(
            "max ‖ΣA_l − expm‖_F = {worst_oracle:.2e}, unitarity {worst_unitarity:.2e} (tol 1e-8); \
             A_1(1e-6) vs −itg relative to |g|: two-level {two_level_dev:.2e} (tol 1e-12), grid {grid_dev:.2e} \
             with {beyond_leading:.2e} beyond the t²(E+E')/2 term; continuity {continuity:.2e} (tol 1e-6); runtime {secs:.3} s (limit 10 s)"
        ),
    )
}

fn criterion_8(runs: &[GridRun]) -> Verdict {
    let mut partition: f64 = 0.0;
    let mut trace: f64 = 0.0;
    let mut missing = 0;
    for r in runs {
        let d = &r.spectrum.diagnostics;
        match (d.partition_error, d.trace_error) {
            (Some(p), Some(t)) => {
                partition = partition.max(p);
                trace = trace.max(t);
            }
            _ => missing += 1,
        }
        assert_eq!(d.partition_times, vec![0.1, 0.5, 1.0]);
    }
    verdict(
        missing == 0 && partition <= 1e-8 && trace <= 1e-10,
        format!("max partition error = {partition:.2e} (tol 1e-8), max trace error = {trace:.2e} (tol 1e-10)"),
    )
}

fn random_hermitian() -> impl Strategy<Value = HermitianMatrix> {
    (1usize..9, any::<u64>(), 0.0f64..2.0, prop::collection::vec(-5.0f64..5.0, 8)).prop_map(|(n, seed, lam, diag)| {
        let mut m = if n >= 2 {
            generate_model(&ModelSpec::banded_random(n, lam, seed)).unwrap().into_matrix()
        } else {
            CMatrix::zeros(1, 1)
        };
        for k in 0..n {
            m[(k, k)] = C64::new(diag[k], 0.0);
        }
        HermitianMatrix::new(m).unwrap()
    })
}

fn weak_coupling() -> impl Strategy<Value = (SplitHamiltonian, usize)> {
    (2usize..9, any::<u64>(), 0.01f64..0.15, any::<usize>()).prop_map(|(n, seed, lam, g)| {
        (split(&generate_model(&ModelSpec::banded_random(n, lam, seed)).unwrap()), g % n)
    })
}

fn run_property<S: Strategy>(
    cases: u32,
    strategy: S,
    test: impl Fn(S::Value) -> Result<(), TestCaseError>,
) -> (u32, Option<String>) {
    let config = Config {
        cases,
        failure_persistence: None,
        ..Config::default()
    };
    let mut runner = TestRunner::new_with_rng(config, TestRng::deterministic_rng(RngAlgorithm::ChaCha));
    match runner.run(&strategy, test) {
        Ok(()) => (cases, None),
        Err(e) => (cases, Some(e.to_string())),
    }
}

fn criterion_9() -> Verdict {
    const CASES: u32 = 256;
    let mut results = Vec::new();

    results.push((
        "split round-trip",
        run_property(CASES, random_hermitian(), |h| {
            prop_assert_eq!(split(&h).reconstruct(), h);
            Ok(())
        }),
    ));
    results.push((
        "coupling diagonal zero",
        run_property(CASES, random_hermitian(), |h| {
            let s = split(&h);
            for k in 0..s.dim() {
                prop_assert_eq!(s.coupling()[(k, k)], C64::new(0.0, 0.0));
            }
            Ok(())
        }),
    ));
    results.push((
        "kernel series = resolvent",
        run_property(CASES, (weak_coupling(), -0.3f64..0.3), |((s, gamma), z)| {
            let cfg = KernelConfig {
                max_path_order: 120,
                ..KernelConfig::default()
            };
            let z = C64::new(z, 0.0);
            let a = kernel_series(&s, gamma, z, &cfg).unwrap().value;
            let b = kernel_resolvent(&s, gamma, z).unwrap().value;
            prop_assert!((a - b).norm() <= 1e-10, "{} vs {}", a, b);
            Ok(())
        }),
    ));
    results.push((
        "Q closed = series",
        run_property(CASES, weak_coupling(), |(s, gamma)| {
            let cfg = SolveConfig::default();
            let e = solve_level(&s, gamma, &cfg).unwrap().energy;
            let closed = build_q(&s, gamma, e, &cfg).unwrap();
            let series = build_q(
                &s,
                gamma,
                e,
                &SolveConfig {
                    q_form: QForm::Series,
                    ..cfg
                },
            )
            .unwrap();
            for (a, b) in closed.iter().zip(&series) {
                prop_assert!((a - b).norm() <= 1e-10);
            }
            Ok(())
        }),
    ));
    results.push((
        "A_l coupling homogeneity",
        run_property(
            CASES,
            (2usize..7, any::<u64>(), 0.05f64..1.0, 0usize..8, -2.0f64..2.0),
            |(n, seed, lam, l, t)| {
                let s = split(&generate_model(&ModelSpec::banded_random(n, lam, seed)).unwrap());
                let a = evolution_coefficient(&s, l, t).unwrap();
                let b = evolution_coefficient(&s.with_coupling_scale(2.0), l, t).unwrap();
                let want = a.scale(C64::new(2f64.powi(l as i32), 0.0));
                prop_assert!(b.sub(&want).frobenius_norm() <= 1e-12 * want.frobenius_norm().max(1.0));
                Ok(())
            },
        ),
    ));

    let failures: Vec<String> = results
        .iter()
        .filter_map(|(name, (_, f))| f.as_ref().map(|f| format!("{name}: {f}")))
        .collect();
    let summary: Vec<String> = results.iter().map(|(name, (n, _))| format!("{name} ×{n}")).collect();
    verdict(
        failures.is_empty(),
        if failures.is_empty() {
            format!("{} properties, 0 failures [{}]", results.len(), summary.join(", "))
        } else {
            format!("failures: {}", failures.join("; "))
        },
    )
}

fn main() -> ExitCode {
    let (runs, grid_seconds) = solve_grid();
    let verdicts = [
        ("1 two-level exactness", criterion_1()),
        ("2 oracle spectrum equivalence", criterion_2(&runs, grid_seconds)),
        ("3 eigenvector equivalence", criterion_3(&runs)),
        ("4 operator-form cross-check", criterion_4(&runs)),
        ("5 power-series agreement", criterion_5()),
        ("6 perturbative consistency", criterion_6()),
        ("7 evolution agreement", criterion_7()),
        ("8 partition/trace identity", criterion_8(&runs)),
        ("9 structural invariants", criterion_9()),
    ];
    let mut all = true;
    for (name, v) in &verdicts {
        all &= v.pass;
        println!("criterion {name}: {} | {}", if v.pass { "PASS" } else { "FAIL" }, v.detail);
    }
    println!(
        "acceptance: {}/{} criteria passed",
        verdicts.iter().filter(|(_, v)| v.pass).count(),
        verdicts.len()
    );
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
