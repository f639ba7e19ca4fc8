use glab_core::coercivity::{coercive_form, coercivity_constants};
use glab_core::dynamics::{basis_projector, time_grid, trace_distance, Evolver};
use glab_core::filters::{gaussian, kms_residual, metropolis, metropolis_regularized};
use glab_core::lindblad::SigmaE;
use glab_core::linalg::c;
use glab_core::model::{FilterSpec, HamiltonianModel, SamplerSetup};
use glab_core::quadrature::gauss_hermite;
use glab_core::spectral::{dirichlet_form, kms_symmetrize, spectral_gap};
use glab_core::{CMatrix, C64};
use nalgebra::DVector;
use proptest::prelude::*;

fn model() -> impl Strategy<Value = HamiltonianModel> {
    prop_oneof![
        (0.3f64..2.0).prop_map(|gamma| HamiltonianModel::Linear { gamma }),
        Just(HamiltonianModel::Quadratic),
        (0.0f64..0.6, -0.6f64..0.6).prop_map(|(re, im)| HamiltonianModel::MeanFieldBoseHubbard { psi: C64::new(re, im) }),
    ]
}

fn filter() -> impl Strategy<Value = FilterSpec> {
    prop_oneof![
        (0.5f64..3.0).prop_map(|sigma_gamma| FilterSpec::Gaussian { sigma_gamma }),
        Just(FilterSpec::Metropolis),
        (0.01f64..0.2, 0.05f64..0.45).prop_map(|(delta, theta)| FilterSpec::MetropolisRegularized { delta, theta }),
    ]
}

fn sigma() -> impl Strategy<Value = SigmaE> {
    prop_oneof![Just(SigmaE::Davies), (0.2f64..5.0).prop_map(SigmaE::Finite), Just(SigmaE::Infinite)]
}

fn setup() -> impl Strategy<Value = SamplerSetup> {
    (model(), 0.3f64..3.0, filter(), 3usize..8).prop_map(|(m, b, f, cut)| SamplerSetup::new(m, b, f, cut))
}

fn random_matrix(d: usize, seed: &[f64]) -> CMatrix {
    CMatrix::from_fn(d, d, |i, j| c(seed[(2 * (i * d + j)) % seed.len()], seed[(2 * (i * d + j) + 1) % seed.len()]))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn filters_satisfy_kms(beta in 0.1f64..5.0, sg in 0.2f64..5.0, delta in 0.001f64..0.5, theta in 0.01f64..0.49, nu in -20.0f64..20.0) {
        for f in [metropolis(beta).unwrap(), gaussian(beta, sg).unwrap(), metropolis_regularized(beta, delta, theta).unwrap()] {
            let scale = 1.0 + f.eval(-nu).norm() * (-beta * nu / 2.0).exp();
            prop_assert!(kms_residual(&f, &[nu / beta]).unwrap() <= 1e-13 * scale);
        }
    }

    #[test]
    fn generators_preserve_trace_and_gibbs(s in setup(), sig in sigma()) {
        let b = s.build(sig).unwrap();
        let scale = b.superop.norm_estimate();
        prop_assert!(b.superop.trace_residual() <= 1e-10 * scale);
        let fixed = b.superop.apply(&b.gibbs.eigen_matrix());
        prop_assert!(fixed.norm() <= 1e-10 * scale);
    }

    #[test]
    fn symmetrized_generator_is_negative(s in setup(), sig in sigma(), seed in prop::collection::vec(-1.0f64..1.0, 16)) {
        let b = s.build(sig).unwrap();
        let sym = kms_symmetrize(&b.superop, &b.gibbs).unwrap();
        let g = spectral_gap(&sym, None).unwrap();
        prop_assert!(g.max_eigenvalue <= 1e-10 * g.spectral_radius);
        prop_assert!(g.kernel_overlap >= 1.0 - 1e-8);
        let d = b.gibbs.log_weights.len();
        let x = DVector::from_iterator(d * d, random_matrix(d, &seed).iter().copied());
        let e = dirichlet_form(&sym, &x).unwrap();
        prop_assert!(e >= -1e-10 * x.norm_squared() * g.spectral_radius);
    }

    #[test]
    fn gap_grows_as_sigma_shrinks(beta in 0.5f64..2.0, cut in 4usize..8, a in 0.2f64..4.0, b in 0.2f64..4.0) {
        let (lo, hi) = if a < b { (a, b) } else { (b, a) };
        let s = SamplerSetup::new(HamiltonianModel::Quadratic, beta, FilterSpec::Metropolis, cut);
        let gap = |sig| spectral_gap(&{ let x = s.build(sig).unwrap(); kms_symmetrize(&x.superop, &x.gibbs).unwrap() }, None).unwrap().gap;
        let g = [gap(SigmaE::Davies), gap(SigmaE::Finite(lo)), gap(SigmaE::Finite(hi)), gap(SigmaE::Infinite)];
        for w in g.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-8);
        }
    }

    #[test]
    fn gauss_hermite_is_symmetric_and_exact(n in 1usize..40) {
        let q = gauss_hermite(n).unwrap();
        let sqrt_pi = std::f64::consts::PI.sqrt();
        prop_assert!((q.weights.iter().sum::<f64>() - sqrt_pi).abs() <= 1e-12);
        for i in 0..n {
            prop_assert!((q.nodes[i] + q.nodes[n - 1 - i]).abs() <= 1e-12 * (1.0 + q.nodes[i].abs()));
            prop_assert!((q.weights[i] - q.weights[n - 1 - i]).abs() <= 1e-14);
        }
        // ∫x²e^{−x²} = √π/2, exact for n ≥ 2
        if n >= 2 {
            let m2: f64 = q.nodes.iter().zip(&q.weights).map(|(x, w)| w * x * x).sum();
            prop_assert!((m2 - sqrt_pi / 2.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn coercive_form_dominates(beta in 4.0f64..20.0, sep in 1.0f64..3.0, k in 2usize..10, seed in prop::collection::vec(-1.0f64..1.0, 40)) {
        let bohr: Vec<f64> = (0..k).map(|i| i as f64 * sep).collect();
        let r = coercivity_constants(&bohr, beta, sep).unwrap();
        prop_assume!(r.m_beta < 0.5);
        let x: Vec<DVector<C64>> = (0..k).map(|i| DVector::from_fn(2, |j, _| c(seed[(4 * i + 2 * j) % 40], seed[(4 * i + 2 * j + 1) % 40]))).collect();
        let n2: f64 = x.iter().map(|v| v.norm_squared()).sum();
        prop_assert!(coercive_form(&bohr, beta, &x) >= (0.5 - r.m_beta) * n2 - 1e-12 * n2);
        prop_assert!(r.c_beta <= 0.5 - r.m_beta + 1e-12);
    }

    #[test]
    fn evolution_contracts(beta in 0.5f64..2.0, level in 0usize..4, t in 0.1f64..5.0) {
        let s = SamplerSetup::new(HamiltonianModel::Quadratic, beta, FilterSpec::Metropolis, 6);
        let b = s.build(SigmaE::Infinite).unwrap();
        let ev = Evolver::new(&b.superop, &b.gibbs).unwrap();
        let times = time_grid(t, 10);
        let r = ev.evolve(&basis_projector(7, level), &times, None, true).unwrap();
        let sigma = b.gibbs.eigen_matrix();
        for w in r.trace_distances.windows(2) {
            prop_assert!(w[1] <= w[0] + 1e-10);
        }
        prop_assert!(r.trace_errors.iter().all(|e| *e <= 1e-10));
        prop_assert!(r.min_eigenvalues.iter().all(|e| *e >= -1e-10));
        let states = r.states.unwrap();
        prop_assert!((trace_distance(&states[0], &sigma) - r.trace_distances[0]).abs() <= 1e-12);
    }
}
