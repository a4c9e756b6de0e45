use dyadic_core::domination::{dominate_bilinear, dominate_paraproduct, oscillation_domination};
use dyadic_core::sparse::{random_collection, sparse_bmo_function};
use dyadic_core::weights::{Weight, WeightSpec};
use dyadic_core::{haar_function, DyadicModel, Signature, StepFunction};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn bmo_symbol(m: DyadicModel, w: &Weight<f64>, rng: &mut ChaCha8Rng) -> StepFunction<f64> {
    let s = random_collection(m, 2.0, m.depth(), rng).unwrap();
    let noise = StepFunction::from_fn(m, |_| rng.gen_range(-0.2..0.2));
    &sparse_bmo_function(&s, Some(w)) + &noise
}

#[test]
fn power_weight_symbol_at_depth_eight() {
    let m = DyadicModel::new(1, 8).unwrap();
    let w = WeightSpec::Power { alpha: 0.5 }.build_f64(m).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..5 {
        let b = bmo_symbol(m, &w, &mut rng);
        let f = StepFunction::from_fn(m, |_| rng.gen_range(-1.0..1.0));
        let r = dominate_paraproduct(&b, &w, &f, &m.root(), 2.0).unwrap();
        assert!(r.measured_carleson <= 2.0 + 1e-12);
        assert!(r.empirical_constant.is_finite() && r.empirical_constant > 0.0);
        assert!(r.passed(), "{:?}", r.report.failures().collect::<Vec<_>>());
        // the cellwise comparison reproduces the reported constant
        let pw = r.pointwise.as_ref().unwrap();
        let worst = pw
            .lhs
            .iter()
            .zip(&pw.rhs)
            .filter(|(_, r)| **r > 0.0)
            .map(|(l, r)| l / r)
            .fold(0.0, f64::max);
        assert_eq!(worst, r.empirical_constant);
    }
}

#[test]
fn every_node_respects_the_packing_budget() {
    let m = DyadicModel::new(2, 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let w = WeightSpec::Random {
        seed: 9,
        log_amplitude: 1.0,
    }
    .build_f64(m)
    .unwrap();
    let b = bmo_symbol(m, &w, &mut rng);
    let f = StepFunction::from_fn(m, |_| rng.gen_range(-1.0..1.0));
    for lambda in [1.5, 2.0, 3.0] {
        let r = dominate_paraproduct(&b, &w, &f, &m.root(), lambda).unwrap();
        assert!(r.nodes.iter().all(|d| d.child_measure <= r.epsilon + 1e-12));
        assert!(r.nodes.iter().all(|d| d.depth <= m.depth()));
        let cells: usize = r
            .nodes
            .iter()
            .filter_map(|d| d.cases)
            .map(|c| c.total())
            .sum();
        assert!(cells >= m.cell_count());
    }
}

#[test]
fn bilinear_root_haar_pair() {
    let m = DyadicModel::new(1, 3).unwrap();
    let h: StepFunction<f64> =
        haar_function(&m, &m.root(), &Signature::new(0, 1).unwrap()).unwrap();
    let one = StepFunction::constant(m, 1.0);
    let r = dominate_bilinear(&h, &h, &Weight::unit(m), &one, &one, &m.root(), 2.0).unwrap();
    let bl = r.bilinear.unwrap();
    assert_eq!(r.collection.len(), 1);
    assert!((bl.lhs - 1.0).abs() < 1e-14 && (bl.sparse_form - 1.0).abs() < 1e-14);
}

#[test]
fn bilinear_random_depth_eight() {
    let m = DyadicModel::new(1, 8).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for _ in 0..5 {
        let w = WeightSpec::Random {
            seed: rng.gen(),
            log_amplitude: 1.0,
        }
        .build_f64(m)
        .unwrap();
        let a = StepFunction::from_fn(m, |_| rng.gen_range(-1.0..1.0));
        let b = bmo_symbol(m, &w, &mut rng);
        let f = StepFunction::from_fn(m, |_| rng.gen_range(-1.0..1.0));
        let g = StepFunction::from_fn(m, |_| rng.gen_range(-1.0..1.0));
        let r = dominate_bilinear(&a, &b, &w, &f, &g, &m.root(), 2.0).unwrap();
        assert!(r.measured_carleson <= 2.0 + 1e-12);
        assert!(r.empirical_constant.is_finite());
        assert!(r.passed(), "{:?}", r.report.failures().collect::<Vec<_>>());
    }
}

#[test]
fn oscillation_examples() {
    let m = DyadicModel::new(1, 7).unwrap();
    let unit = Weight::unit(m);
    let c = oscillation_domination(&StepFunction::constant(m, 3.0), &unit, &m.root(), 2.0).unwrap();
    assert!(c.pointwise.unwrap().lhs.iter().all(|v| *v == 0.0));
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let s = random_collection(m, 2.0, 7, &mut rng).unwrap();
    let r = oscillation_domination(&sparse_bmo_function::<f64>(&s, None), &unit, &m.root(), 2.0)
        .unwrap();
    assert!(r.passed() && r.empirical_constant.is_finite());
    let w = WeightSpec::Power { alpha: 0.5 }.build_f64(m).unwrap();
    let r = oscillation_domination(w.density(), &w, &m.root(), 2.0).unwrap();
    assert!(r.passed() && r.empirical_constant.is_finite());
}

#[test]
fn subcube_base() {
    let m = DyadicModel::new(1, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let w = WeightSpec::Random {
        seed: 1,
        log_amplitude: 1.0,
    }
    .build_f64(m)
    .unwrap();
    let b = bmo_symbol(m, &w, &mut rng);
    let f = StepFunction::from_fn(m, |_| rng.gen_range(-1.0..1.0));
    let q0 = m.cube(2, 1);
    let r = dominate_paraproduct(&b, &w, &f, &q0, 2.0).unwrap();
    assert!(r.collection.cubes().iter().all(|q| q0.contains(q)));
    let pw = r.pointwise.unwrap();
    for c in 0..m.cell_count() {
        if !q0.contains(&m.cell_cube(c)) {
            assert_eq!(pw.lhs[c], 0.0);
        }
    }
}
