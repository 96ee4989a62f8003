//! Property tests for equivariance, gradient structure, planar reduction and flow.

use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use skbreak::dynamics::{flow, orbit_distance, FlowSettings};
use skbreak::equivariants::{cubic_c, quad_q};
use skbreak::family::FamilySpec;
use skbreak::rep::{act, Dim, HPoint, Permutation};
use skbreak::symbreak::PlanarSystem;

fn d(k: usize) -> Dim {
    Dim::new(k).unwrap()
}

fn point(k: usize, raw: &[f64]) -> HPoint {
    HPoint::from_slice_projected(&raw[..k])
}

fn odd_k() -> impl Strategy<Value = usize> {
    prop::sample::select(vec![3usize, 5, 7, 9])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn quadratic_family_is_sk_equivariant(k in 3usize..=9, raw in prop::collection::vec(-1.0f64..1.0, 9), lambda in -1.0f64..1.0, seed in any::<u64>()) {
        let spec = FamilySpec::odd_quadratic(d(k));
        let x = point(k, &raw);
        let s = Permutation::random(k, &mut ChaCha8Rng::seed_from_u64(seed));
        let lhs = spec.eval(&act(&s, &x), lambda);
        let rhs = act(&s, &spec.eval(&x, lambda));
        prop_assert!(lhs.distance(&rhs) < 1e-12);
    }

    #[test]
    fn perturbed_family_is_sk1_equivariant(k in odd_k(), raw in prop::collection::vec(-1.0f64..1.0, 9), lambda in -1.0f64..1.0, seed in any::<u64>()) {
        let spec = FamilySpec::perturbed_odd(d(k), 1e-2).unwrap();
        let x = point(k, &raw);
        let s = Permutation::random_fixing_first(k, &mut ChaCha8Rng::seed_from_u64(seed));
        let lhs = spec.eval(&act(&s, &x), lambda);
        let rhs = act(&s, &spec.eval(&x, lambda));
        prop_assert!(lhs.distance(&rhs) < 1e-12);
    }

    #[test]
    fn q_is_gradient_of_c(k in 3usize..=9, raw in prop::collection::vec(-1.0f64..1.0, 9), dir in prop::collection::vec(-1.0f64..1.0, 9)) {
        let x = point(k, &raw);
        let h = point(k, &dir);
        let t = 1e-5;
        let fd = (cubic_c(&HPoint::project(x.vector() + h.vector() * t)) - cubic_c(&HPoint::project(x.vector() - h.vector() * t))) / (2.0 * t);
        prop_assert!((fd - quad_q(&x).dot(&h)).abs() < 1e-8);
    }

    #[test]
    fn orbit_distance_is_sk1_invariant(k in 3usize..=9, a in prop::collection::vec(-1.0f64..1.0, 9), b in prop::collection::vec(-1.0f64..1.0, 9), seed in any::<u64>()) {
        let (x, y) = (point(k, &a), point(k, &b));
        let s = Permutation::random_fixing_first(k, &mut ChaCha8Rng::seed_from_u64(seed));
        prop_assert!(orbit_distance(&x, &act(&s, &x)) < 1e-12);
        prop_assert!((orbit_distance(&act(&s, &x), &y) - orbit_distance(&x, &y)).abs() < 1e-12);
        prop_assert!(orbit_distance(&x, &y) <= x.distance(&y) + 1e-12);
    }

    #[test]
    fn planar_system_matches_ambient_field(k in odd_k(), pi in 0usize..4, u in -1.0f64..1.0, v in -1.0f64..1.0, lambda in -1.0f64..1.0) {
        let dim = d(k);
        let p = 2 + pi % (dim.plane_limit() - 1).max(1);
        prop_assume!(p <= dim.plane_limit());
        let eta = 1e-2;
        let sys = PlanarSystem::new(dim, p, eta, None).unwrap();
        let spec = FamilySpec::perturbed_odd(dim, eta).unwrap();
        let chart = sys.chart();
        let x = chart.map(u, v);
        let f = spec.eval(&x, lambda);
        let (a, b) = chart.pull(&f);
        let (ru, rv) = sys.rhs(u, v, lambda);
        prop_assert!((a - ru).abs() < 1e-8 && (b - rv).abs() < 1e-8);
        // The plane is invariant: the field has no normal component.
        prop_assert!(f.distance(&chart.map(a, b)) < 1e-8);
    }
}

#[test]
fn potential_decreases_along_random_trajectories() {
    use rand::Rng;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let spec = FamilySpec::perturbed_odd(d(5), 1e-2).unwrap();
    let settings = FlowSettings { horizon: 50.0, ..FlowSettings::default() };
    for _ in 0..50 {
        let raw: Vec<f64> = (0..5).map(|_| rng.gen_range(-0.3..0.3)).collect();
        let lambda = rng.gen_range(-0.5..-0.05);
        let r = flow(&spec, &HPoint::from_slice_projected(&raw), lambda, &settings).unwrap();
        assert_eq!(r.potential_monotone, Some(true), "potential increased from {raw:?} at lambda {lambda}");
    }
}

#[test]
fn flow_is_deterministic() {
    let spec = FamilySpec::perturbed_odd(d(5), 1e-2).unwrap();
    let x0 = HPoint::from_slice_projected(&[0.1, -0.2, 0.05, 0.3, -0.25]);
    let a = flow(&spec, &x0, -0.3, &FlowSettings::default()).unwrap();
    let b = flow(&spec, &x0, -0.3, &FlowSettings::default()).unwrap();
    assert_eq!(a.trajectory.states, b.trajectory.states);
    assert_eq!(a.trajectory.times, b.trajectory.times);
}
