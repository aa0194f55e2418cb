use gibbsflow::analysis::{fit_rate, select_regime, verify_lemma21, random_instance};
use gibbsflow::model::{commuting_lipschitz, rotating_holder, Generator};
use gibbsflow::operator::{GeneralOperator, HermitianOperator, SchattenP};
use gibbsflow::propagator::{product_approximant, Scheme};
use nalgebra::DMatrix;
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn square(max_dim: usize) -> impl Strategy<Value = DMatrix<f64>> {
    (1..=max_dim).prop_flat_map(|d| {
        prop::collection::vec(-3.0..3.0f64, d * d).prop_map(move |v| DMatrix::from_vec(d, d, v))
    })
}

fn pair(max_dim: usize) -> impl Strategy<Value = (DMatrix<f64>, DMatrix<f64>)> {
    (1..=max_dim).prop_flat_map(|d| {
        (
            prop::collection::vec(-3.0..3.0f64, d * d),
            prop::collection::vec(-3.0..3.0f64, d * d),
        )
            .prop_map(move |(a, b)| (DMatrix::from_vec(d, d, a), DMatrix::from_vec(d, d, b)))
    })
}

fn spectrum(max_dim: usize) -> impl Strategy<Value = Vec<f64>> {
    prop::collection::vec(1.0..30.0f64, 1..=max_dim)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn schatten_norms_are_ordered(m in square(8)) {
        let x = GeneralOperator::new(m).unwrap();
        let inf = x.schatten_norm(SchattenP::Inf).unwrap();
        let two = x.schatten_norm(SchattenP::Two).unwrap();
        let one = x.schatten_norm(SchattenP::One).unwrap();
        let scale = 1e-12 * (1.0 + one);
        prop_assert!(inf <= two + scale);
        prop_assert!(two <= one + scale);
        // Hilbert–Schmidt equals the Frobenius norm
        prop_assert!((two - x.matrix().norm()).abs() <= scale);
    }

    #[test]
    fn trace_norm_is_submultiplicative((a, b) in pair(7)) {
        let (x, y) = (GeneralOperator::new(a).unwrap(), GeneralOperator::new(b).unwrap());
        let xy = (&x * &y).trace_norm().unwrap();
        let bound = x.op_norm().unwrap() * y.trace_norm().unwrap();
        prop_assert!(xy <= bound * (1.0 + 1e-12) + 1e-12);
        let bound = x.trace_norm().unwrap() * y.op_norm().unwrap();
        prop_assert!(xy <= bound * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn heat_semigroup_law(lambdas in spectrum(10), s in 0.0..2.0f64, t in 0.0..2.0f64) {
        let g = Generator::from_eigenvalues(&lambdas).unwrap();
        let lhs = &g.heat_kernel(s).unwrap().to_general() * &g.heat_kernel(t).unwrap().to_general();
        let rhs = g.heat_kernel(s + t).unwrap().to_general();
        prop_assert!(lhs.max_abs_diff(&rhs) <= 1e-14);
    }

    #[test]
    fn rotated_semigroup_law(m in square(6), s in 0.01..1.0f64, t in 0.01..1.0f64) {
        // A = QΛQᵀ + I with Q orthogonal
        let q = m.clone().qr().q();
        let d = m.nrows();
        let lam = DMatrix::from_diagonal(&nalgebra::DVector::from_fn(d, |i, _| 1.0 + i as f64));
        let a = HermitianOperator::new(&q * lam * q.transpose()).unwrap();
        let lhs = &a.exp_neg(s).unwrap().to_general() * &a.exp_neg(t).unwrap().to_general();
        prop_assert!(lhs.max_abs_diff(&a.exp_neg(s + t).unwrap().to_general()) <= 1e-13);
    }

    #[test]
    fn product_approximants_contract(
        n in 1usize..40,
        s in 0.0..0.5f64,
        len in 0.05..0.5f64,
        which in 0usize..3,
    ) {
        let m = rotating_holder(5).unwrap();
        let scheme = Scheme::ALL[which];
        let u = product_approximant(scheme, &m, s, s + len, n).unwrap();
        prop_assert!(u.is_contraction().unwrap());
        // every factor contracts at least by e^{-τ}, so the product does by e^{-(t-s)}
        prop_assert!(u.u.op_norm().unwrap() <= (-len).exp() + 1e-12);
    }

    #[test]
    fn lemma21_random_instances(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (g, v, t) = random_instance(&mut rng, 16, 8).unwrap();
        let c = verify_lemma21(&g, &v, &t).unwrap();
        prop_assert!(c.holds, "{:?}", c);
    }

    #[test]
    fn power_law_slope_is_recovered(c in 0.01..100.0f64, p in 0.1..2.0f64) {
        let ns: Vec<usize> = (2..=10).map(|k| 1usize << k).collect();
        let errs: Vec<f64> = ns.iter().map(|&n| c * (n as f64).powf(-p)).collect();
        let f = fit_rate(&ns, &errs).unwrap();
        prop_assert!((f.slope + p).abs() <= 1e-10);
        prop_assert!((f.intercept - c.ln()).abs() <= 1e-9);
    }

    #[test]
    fn selected_rate_vanishes(alpha in 0.0..0.99f64, beta in 0.01..1.0f64) {
        if let Ok(r) = select_regime(alpha, beta) {
            let big = r.epsilon(1 << 40).unwrap();
            prop_assert!(big < r.epsilon(16).unwrap());
            prop_assert!(r.epsilon(64).unwrap() < r.epsilon(32).unwrap());
        } else {
            prop_assert!(beta <= alpha && !(2.0 * alpha - 1.0 > 0.0 && beta > 2.0 * alpha - 1.0));
        }
    }
}

#[test]
fn commuting_products_refine_monotonically() {
    let m = commuting_lipschitz(8).unwrap();
    let exact = m.exact(0.0, 1.0).unwrap().unwrap();
    for scheme in Scheme::ALL {
        let errs: Vec<f64> = (0..8)
            .map(|k| {
                let u = product_approximant(scheme, &m, 0.0, 1.0, 4 << k).unwrap().u;
                (&u - &exact).trace_norm().unwrap()
            })
            .collect();
        assert!(errs.windows(2).all(|w| w[1] <= w[0] + 1e-12), "{scheme}: {errs:?}");
    }
}
