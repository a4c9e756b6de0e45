//! Acceptance gate. Runs without the libtest harness so every criterion prints
//! its `PASS`/`FAIL` line with timing and measured quantities; exits nonzero if
//! any criterion fails.

use std::time::{Duration, Instant};

use dyadic_core::domination::{dominate_bilinear, dominate_paraproduct, DominationResult};
use dyadic_core::norms::{operator_norm_p2, verify_bloom_sparse_bound, CellOperator, LinearMap};
use dyadic_core::paraproducts::ParaproductKind;
use dyadic_core::sparse::{random_collection, sparse_bmo_function};
use dyadic_core::weights::{Weight, WeightSpec};
use dyadic_core::{DyadicModel, Exact, HaarSpectrum, StepFunction};
use dyadic_lab::suites::{bounds_report, identities_report, sharpness_summary};
use dyadic_lab::ExperimentConfig;
use nalgebra::DMatrix;
use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 20240917;

fn verdict(id: u32, title: &str, ok: bool, elapsed: Duration, detail: &str) {
    let tag = if ok { "PASS" } else { "FAIL" };
    println!(
        "[{tag}] criterion {id}: {title} ({:.1}s) {detail}",
        elapsed.as_secs_f64()
    );
}

fn random_weight(m: DyadicModel, rng: &mut ChaCha8Rng) -> Weight<f64> {
    let spec = if rng.gen_bool(0.5) {
        WeightSpec::Random {
            seed: rng.gen(),
            log_amplitude: rng.gen_range(0.2..1.5),
        }
    } else {
        WeightSpec::Power {
            alpha: rng.gen_range(-0.9..0.9),
        }
    };
    spec.build_f64(m).unwrap()
}

fn criterion_1_exact_identities() -> bool {
    let start = Instant::now();
    let mut checks = 0;
    let mut failures = Vec::new();
    for (n, depth) in [(1, 4), (2, 4)] {
        let m = DyadicModel::new(n, depth).unwrap();
        let report = identities_report::<Exact>(m, 50, SEED).unwrap();
        checks += report.checks.len();
        failures.extend(report.failures().map(|c| format!("n={n}: {}", c.name)));
    }
    let elapsed = start.elapsed();
    let ok = failures.is_empty() && elapsed < Duration::from_secs(60);
    verdict(
        1,
        "exact identities, rational mode",
        ok,
        elapsed,
        &format!("checks={checks} failures={failures:?}"),
    );
    ok
}

fn criterion_2_explicit_constant_bounds() -> bool {
    let start = Instant::now();
    let cfg = ExperimentConfig::from_json(&format!(
        r#"{{"model": {{"n": 1, "depth": 10}}, "seed": {SEED}, "bounds": {{"draws": 200}}}}"#
    ))
    .unwrap();
    let report = bounds_report(&cfg).unwrap();
    let elapsed = start.elapsed();
    let families = report.checks.iter().filter(|c| c.bound.is_some()).count();
    let failures: Vec<_> = report.failures().map(|c| c.name.clone()).collect();
    let ok = failures.is_empty() && families >= 7 && elapsed < Duration::from_secs(300);
    verdict(
        2,
        "explicit-constant bounds, n=1 D=10, 200 draws",
        ok,
        elapsed,
        &format!("families={families} violations={failures:?}"),
    );
    for c in &report.checks {
        println!(
            "    {:<64} worst={:.6e} slack={:?}",
            c.name, c.measured, c.slack
        );
    }
    ok
}

fn criterion_3_bloom_sparse_p2() -> bool {
    let start = Instant::now();
    let m = DyadicModel::new(1, 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 3);
    let mut slacks = Vec::new();
    let mut violations = 0;
    for draw in 0..50 {
        let coll = random_collection(m, rng.gen_range(1.1..4.0), m.depth(), &mut rng).unwrap();
        let (mu, lambda) = if draw % 2 == 0 {
            let w = WeightSpec::Power {
                alpha: rng.gen_range(-0.9..0.9),
            }
            .build_f64(m)
            .unwrap();
            let inv = w.power(-1.0);
            (w, inv)
        } else {
            (random_weight(m, &mut rng), random_weight(m, &mut rng))
        };
        let report = verify_bloom_sparse_bound(&coll, &mu, &lambda, 2.0, 1).unwrap();
        let c = &report.checks[0];
        if !c.passed() {
            violations += 1;
        }
        slacks.push(1.0 - c.measured / c.bound.unwrap());
    }
    let elapsed = start.elapsed();
    slacks.sort_by(f64::total_cmp);
    let ok = violations == 0;
    verdict(
        3,
        "sparse operator Bloom bound at p=2, D=10, 50 draws",
        ok,
        elapsed,
        &format!(
            "violations={violations} slack min={:.4} median={:.4} max={:.4}",
            slacks[0],
            slacks[slacks.len() / 2],
            slacks[slacks.len() - 1]
        ),
    );
    ok
}

struct Coarse {
    w: StepFunction<f64>,
    a: StepFunction<f64>,
    b: StepFunction<f64>,
    f: StepFunction<f64>,
    g: StepFunction<f64>,
}

impl Coarse {
    fn draw(m: DyadicModel, rng: &mut ChaCha8Rng) -> Self {
        let w = random_weight(m, rng);
        let s = random_collection(m, 2.0, m.depth(), rng).unwrap();
        let noise = StepFunction::from_fn(m, |_| rng.gen_range(-0.1..0.1));
        let b = &sparse_bmo_function(&s, Some(&w)) + &noise;
        let mut signal = || StepFunction::from_fn(m, |_| rng.gen_range(-1.0..1.0));
        let (a, f, g) = (signal(), signal(), signal());
        Coarse {
            w: w.density().clone(),
            a,
            b,
            f,
            g,
        }
    }

    fn at(&self, depth: usize) -> Coarse {
        let r = |s: &StepFunction<f64>| s.refine(depth).unwrap();
        Coarse {
            w: r(&self.w),
            a: r(&self.a),
            b: r(&self.b),
            f: r(&self.f),
            g: r(&self.g),
        }
    }

    fn pointwise(&self) -> DominationResult {
        let w = Weight::new(self.w.clone()).unwrap();
        dominate_paraproduct(&self.b, &w, &self.f, &self.b.model().root(), 2.0).unwrap()
    }

    fn bilinear(&self) -> DominationResult {
        let w = Weight::new(self.w.clone()).unwrap();
        let root = self.b.model().root();
        dominate_bilinear(&self.a, &self.b, &w, &self.f, &self.g, &root, 2.0).unwrap()
    }
}

fn domination_ok(r: &DominationResult) -> bool {
    r.measured_carleson <= 2.0 + 1e-12
        && r.nodes
            .iter()
            .all(|d| d.child_measure <= r.epsilon * (1.0 + 1e-12))
        && r.empirical_constant.is_finite()
        && r.passed()
}

fn criterion_4_domination() -> bool {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 4);
    let m8 = DyadicModel::new(1, 8).unwrap();
    let mut failed_runs = 0;
    let mut worst = [0.0f64; 2];
    for _ in 0..30 {
        let data = Coarse::draw(m8, &mut rng);
        for (i, r) in [data.pointwise(), data.bilinear()].iter().enumerate() {
            if !domination_ok(r) {
                failed_runs += 1;
            }
            worst[i] = worst[i].max(r.empirical_constant);
        }
    }

    let m6 = DyadicModel::new(1, 6).unwrap();
    let mut spread = [1.0f64; 2];
    for _ in 0..10 {
        let coarse = Coarse::draw(m6, &mut rng);
        let levels: Vec<Coarse> = [6, 8, 10].iter().map(|&d| coarse.at(d)).collect();
        for (i, run) in [
            Coarse::pointwise as fn(&Coarse) -> DominationResult,
            Coarse::bilinear,
        ]
        .iter()
        .enumerate()
        {
            let cs: Vec<f64> = levels
                .iter()
                .map(|l| {
                    let r = run(l);
                    if !domination_ok(&r) {
                        failed_runs += 1;
                    }
                    r.empirical_constant
                })
                .collect();
            let hi = cs.iter().copied().fold(0.0, f64::max);
            let lo = cs.iter().copied().fold(f64::INFINITY, f64::min);
            if lo > 0.0 {
                spread[i] = spread[i].max(hi / lo);
            } else if hi > 0.0 {
                spread[i] = f64::INFINITY;
            }
        }
    }
    let elapsed = start.elapsed();
    let ok =
        failed_runs == 0 && spread.iter().all(|s| *s <= 2.0) && elapsed < Duration::from_secs(600);
    verdict(
        4,
        "domination D=8 lambda=2, 30 pointwise + 30 bilinear runs",
        ok,
        elapsed,
        &format!(
            "failed_runs={failed_runs} worst_c_emp(pointwise,bilinear)={worst:?} depth_spread={spread:?}"
        ),
    );
    ok
}

fn criterion_5_sharpness_sweep() -> bool {
    let start = Instant::now();
    let alphas = [-0.9, -0.8, -0.6, -0.3, 0.3, 0.6, 0.8, 0.9];
    let summary = sharpness_summary(&alphas, DyadicModel::new(1, 12).unwrap()).unwrap();
    let elapsed = start.elapsed();
    let rows_ok = summary.rows.iter().all(|r| r.bounds_ok);
    let span_ok = summary.ap_char_span >= 10.0;
    let fit = summary.fit.as_ref().expect("fit");
    let slope_ok = fit.slope > 1.0;
    let ok = rows_ok && span_ok && slope_ok && elapsed < Duration::from_secs(900);
    verdict(
        5,
        "sharpness sweep D=12",
        ok,
        elapsed,
        &format!(
            "rows_ok={rows_ok} span={:.3} (need >= 10) slope={:.4}±{:.4} rms_residual={:.4}",
            summary.ap_char_span, fit.slope, fit.slope_stderr, fit.rms_residual
        ),
    );
    for r in &summary.rows {
        println!("    {}", r.csv_line());
    }
    ok
}

fn svd_norm(op: &dyn LinearMap, mu: &Weight<f64>, lambda: &Weight<f64>) -> f64 {
    let size = op.size();
    let mut a = DMatrix::<f64>::zeros(size, size);
    for j in 0..size {
        let mut e = vec![0.0; size];
        e[j] = 1.0;
        for (i, v) in op.apply(&e).into_iter().enumerate() {
            a[(i, j)] = v * (lambda.density().value(i) / mu.density().value(j)).sqrt();
        }
    }
    a.singular_values().max()
}

fn exact_value(rng: &mut ChaCha8Rng) -> Exact {
    let q = |rng: &mut ChaCha8Rng| {
        BigRational::new(
            BigInt::from(rng.gen_range(-20..=20)),
            BigInt::from(rng.gen_range(1..=9)),
        )
    };
    Exact::new(q(rng), q(rng))
}

fn criterion_6_oracle_agreement() -> bool {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(SEED ^ 6);
    let mut worst_rel = 0.0f64;
    for (n, depth) in [(1, 3), (1, 5), (2, 2)] {
        let m = DyadicModel::new(n, depth).unwrap();
        for _ in 0..8 {
            let (mu, lambda) = (random_weight(m, &mut rng), random_weight(m, &mut rng));
            let b = StepFunction::from_fn(m, |_| rng.gen_range(-1.0..1.0));
            let s = random_collection(m, 2.0, depth, &mut rng).unwrap();
            let ops = [
                CellOperator::paraproduct(ParaproductKind::Pi, &b, m.root()).unwrap(),
                CellOperator::paraproduct(ParaproductKind::PiStar, &b, m.root()).unwrap(),
                CellOperator::sparse(&s, Some(&mu)),
                CellOperator::square_function_multiplier(&mu),
            ];
            for op in &ops {
                let est = operator_norm_p2(op, &mu, &lambda).unwrap().value;
                let svd = svd_norm(op, &mu, &lambda);
                worst_rel = worst_rel.max((est - svd).abs() / svd.max(f64::MIN_POSITIVE));
            }
        }
    }
    let mut round_trips = 0;
    let mut round_trip_failures = 0;
    for (n, depth) in [(1, 4), (2, 3), (3, 2)] {
        let m = DyadicModel::new(n, depth).unwrap();
        for _ in 0..20 {
            let f = StepFunction::from_fn(m, |_| exact_value(&mut rng));
            round_trips += 1;
            if HaarSpectrum::analyze(&f).synthesize() != f {
                round_trip_failures += 1;
            }
        }
    }
    let elapsed = start.elapsed();
    let ok = worst_rel <= 1e-8 && round_trip_failures == 0;
    verdict(
        6,
        "p=2 norms vs full SVD, exact Haar round trips",
        ok,
        elapsed,
        &format!("worst_relative={worst_rel:.3e} round_trips={round_trips} failures={round_trip_failures}"),
    );
    ok
}

fn main() {
    let criteria: [fn() -> bool; 6] = [
        criterion_1_exact_identities,
        criterion_2_explicit_constant_bounds,
        criterion_3_bloom_sparse_p2,
        criterion_4_domination,
        criterion_5_sharpness_sweep,
        criterion_6_oracle_agreement,
    ];
    let failed: Vec<usize> = criteria
        .iter()
        .enumerate()
        .filter(|(_, run)| !run())
        .map(|(i, _)| i + 1)
        .collect();
    println!(
        "acceptance: {} of {} criteria pass",
        criteria.len() - failed.len(),
        criteria.len()
    );
    if !failed.is_empty() {
        println!("failed criteria: {failed:?}");
        std::process::exit(1);
    }
}
