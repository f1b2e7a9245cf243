use num_complex::Complex64;
use proptest::prelude::*;

use jacobi_weyl::debranges::DeBrangesDescriptor;
use jacobi_weyl::inverse::{borg_marchenko_rate, reconstruct_from_measure, shift_equivalence, EntirePart, Verdict};
use jacobi_weyl::krein::{krein_fit, InterlacedSpectra};
use jacobi_weyl::lattice::{
    phi_at_eigenvalue, phi_fundamental, theta_fundamental, wronskian, CoefficientModel, LatticeWindow, ModelSpec,
};
use jacobi_weyl::spectra::{eigen_tridiagonal_with_vectors, restriction_spectra, spectral_measure, SpectralMeasure};
use jacobi_weyl::weyl::{gauge_apply, m_half_line, singular_m, GaugeTransform, HalfLine, WeylFunction};

/// Table model on `[left, left + sites + 1]` with `a ∈ [0.5, 2]`, `b ∈ [−1, 1]`.
fn operator(max_sites: usize) -> impl Strategy<Value = (CoefficientModel, LatticeWindow)> {
    (-5i64..5, 1..=max_sites).prop_flat_map(|(left, sites)| {
        (
            Just(left),
            prop::collection::vec(0.5f64..2.0, sites + 1),
            prop::collection::vec(-1.0f64..1.0, sites),
        )
            .prop_map(|(left, a, b)| {
                let right = left + b.len() as i64 + 1;
                (
                    CoefficientModel::table(left, a, left + 1, b).unwrap(),
                    LatticeWindow::new(left, right).unwrap(),
                )
            })
    })
}

fn off_axis() -> impl Strategy<Value = Complex64> {
    (-3.0f64..3.0, 0.2f64..3.0, any::<bool>())
        .prop_map(|(x, y, up)| Complex64::new(x, if up { y } else { -y }))
}

fn rel(a: Complex64, b: Complex64) -> f64 {
    (a - b).norm() / b.norm().max(1.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn wronskian_of_fundamental_pair_is_one((model, window) in operator(12), z in off_axis()) {
        let phi = phi_fundamental(&model, &window, z).unwrap();
        let theta = theta_fundamental(&model, &window, z).unwrap();
        let p = |n: i64| phi.true_value(n).unwrap();
        let t = |n: i64| theta.true_value(n).unwrap();
        for n in window.left..window.right {
            let w = wronskian(&model, &p, &t, n).unwrap();
            let size = model.a(n).unwrap()
                * (p(n).norm() * t(n + 1).norm() + p(n + 1).norm() * t(n).norm());
            prop_assert!((w - 1.0).norm() <= 1e-12 * size.max(1.0), "n = {n}: W = {w}");
        }
    }

    #[test]
    fn measure_round_trips_bitwise((model, window) in operator(15)) {
        let rho = spectral_measure(&model, &window).unwrap();
        let json = SpectralMeasure::from_json(&rho.to_json().unwrap()).unwrap();
        prop_assert_eq!(&json, &rho);
        let mut buf = Vec::new();
        rho.write_csv(&mut buf).unwrap();
        let csv = SpectralMeasure::read_csv(buf.as_slice(), rho.normalization()).unwrap();
        prop_assert_eq!(&csv, &rho);
    }

    #[test]
    fn measure_mass_is_one((model, window) in operator(20)) {
        let rho = spectral_measure(&model, &window).unwrap();
        prop_assert_eq!(rho.len(), window.sites());
        prop_assert!((rho.total_mass() - 1.0).abs() < 1e-12);
        prop_assert!(rho.weights().iter().all(|&w| w > 0.0));
    }

    #[test]
    fn reconstruction_recovers_coefficients((model, window) in operator(25)) {
        let rho = spectral_measure(&model, &window).unwrap();
        let r = reconstruct_from_measure(&rho, window.sites()).unwrap();
        for (k, n) in window.interior().enumerate() {
            let b = model.b(n).unwrap();
            prop_assert!((r.b[k] - b).abs() <= 1e-8 * b.abs().max(1.0), "b({n}): {} vs {b}", r.b[k]);
            if n + 1 < window.right {
                let a = model.a(n).unwrap();
                prop_assert!((r.a[k] - a).abs() <= 1e-8 * a, "a({n}): {} vs {a}", r.a[k]);
            }
        }
    }

    #[test]
    fn phi_at_eigenvalue_is_the_eigenvector((model, window) in operator(30)) {
        let spec = eigen_tridiagonal_with_vectors(&model, &window).unwrap();
        let vectors = spec.vectors.unwrap();
        for (lam, v) in spec.eigenvalues.iter().zip(&vectors) {
            let phi = phi_at_eigenvalue(&model, &window, *lam).unwrap();
            let inner = &phi[1..phi.len() - 1];
            let norm = inner.iter().map(|x| x * x).sum::<f64>().sqrt();
            let vnorm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            let cos = inner.iter().zip(v).map(|(x, y)| x * y).sum::<f64>() / (norm * vnorm);
            prop_assert!((cos.abs() - 1.0).abs() < 1e-10, "λ = {lam}: |cos| = {}", cos.abs());
        }
    }

    #[test]
    fn de_branges_kernel_identity((model, window) in operator(12), zeta in off_axis(), z in off_axis()) {
        for n in window.left + 1..window.right {
            let d = DeBrangesDescriptor::new(&model, &window, n).unwrap();
            let k = d.kernel(zeta, z);
            prop_assert!(rel(d.kernel_from_e(zeta, z), k) < 1e-10, "n = {n}");
            // K(z, z) is the squared norm of the kernel section
            prop_assert!(d.kernel(z, z).re > 0.0);
        }
    }

    #[test]
    fn gauge_covariance(
        (model, window) in operator(10),
        z in off_axis(),
        g in -1.0f64..1.0,
        f in -2.0f64..2.0,
    ) {
        let theta = theta_fundamental(&model, &window, z).unwrap();
        let phi = phi_fundamental(&model, &window, z).unwrap();
        let m = WeylFunction::sampler(&model, &window);
        let rho = spectral_measure(&model, &window).unwrap();
        let tr = GaugeTransform::constant(g, f);
        let out = gauge_apply(&tr, &theta, &phi, &m, &rho).unwrap();
        let want = (-2.0 * g).exp() * singular_m(&model, &window, z).unwrap() + (-g).exp() * f;
        prop_assert!(rel(out.m.eval(z).unwrap(), want) < 1e-12);
        for (a, b) in out.rho.atoms().iter().zip(rho.atoms()) {
            prop_assert_eq!(a.lambda, b.lambda);
            prop_assert!((a.weight - (-2.0 * g).exp() * b.weight).abs() <= 1e-14 * a.weight.max(1.0));
        }
        let p = |n: i64| out.phi.true_value(n).unwrap();
        let t = |n: i64| out.theta.true_value(n).unwrap();
        let w = wronskian(&model, &p, &t, window.left).unwrap();
        prop_assert!((w - 1.0).norm() < 1e-12, "W = {w}");
    }

    #[test]
    fn krein_product_is_exact_for_finite_windows((model, window) in operator(15), zs in prop::collection::vec(off_axis(), 6)) {
        prop_assume!(window.sites() >= 2);
        let n = (window.left + window.right) / 2;
        let rs = restriction_spectra(&model, &window, n).unwrap();
        prop_assert!(rs.interlaced);
        let sp = InterlacedSpectra::new(rs.mu, rs.nu, n + 1, true).unwrap();
        let samples: Vec<_> = zs
            .iter()
            .map(|&z| (z, m_half_line(&model, &window, z, HalfLine::Left, n + 1).unwrap()))
            .collect();
        let rep = krein_fit(&sp, &samples[..1], 0, f64::INFINITY).unwrap();
        for &(z, m) in &samples[1..] {
            prop_assert!((rep.eval(z) - m).norm() <= 1e-11 * m.norm(), "z = {z}");
        }
    }

    #[test]
    fn shift_is_detected(
        a in prop::collection::vec(0.5f64..2.0, 20),
        b in prop::collection::vec(-1.0f64..1.0, 20),
        k in -3i64..=3,
    ) {
        let base = CoefficientModel::table(-5, a, -5, b).unwrap();
        let window = LatticeWindow::new(0, 8).unwrap();
        let moved = base.shifted(k);
        prop_assert_eq!(shift_equivalence(&base, &moved, &window, 3, 1e-12).unwrap(), Some(k));
    }

    #[test]
    fn model_spec_serde_round_trip((model, _) in operator(10), offset in -4i64..4) {
        let spec = model.shifted(offset).spec().clone();
        let text = serde_json::to_string(&spec).unwrap();
        let back: ModelSpec = serde_json::from_str(&text).unwrap();
        prop_assert_eq!(back, spec);
    }
}

/// Both operators share `b` left of `ñ + 1`; the rate must be consistent,
/// and a change at `ñ` must break it.
#[test]
fn borg_marchenko_sweep() {
    let mut runner = proptest::test_runner::TestRunner::new(ProptestConfig::with_cases(4));
    let strategy = (
        prop::collection::vec(0.5f64..2.0, 11),
        prop::collection::vec(-1.0f64..1.0, 10),
        0.2f64..1.0,
    );
    runner
        .run(&strategy, |(a, b, delta)| {
            let window = LatticeWindow::new(0, 11).unwrap();
            let h0 = CoefficientModel::table(0, a, 1, b).unwrap();
            for n_tilde in 1..=6i64 {
                let h1 = h0.with_b(n_tilde + 1, h0.b(n_tilde + 1).unwrap() + delta).unwrap();
                let rep = borg_marchenko_rate(&h0, &h1, &window, n_tilde, &[std::f64::consts::FRAC_PI_2], &EntirePart::Fitted)
                    .unwrap();
                prop_assert_eq!(rep.verdict, Verdict::Consistent, "ñ = {}", n_tilde);
                prop_assert_eq!(rep.predicted, -(2.0 * n_tilde as f64 + 1.0));
                let slope = rep.rays[0].slope.unwrap();
                prop_assert!((slope + 2.0 * (n_tilde + 1) as f64).abs() < 0.1, "ñ = {}: slope {}", n_tilde, slope);

                let early = h0.with_b(n_tilde, h0.b(n_tilde).unwrap() + delta).unwrap();
                let rep = borg_marchenko_rate(&h0, &early, &window, n_tilde, &[std::f64::consts::FRAC_PI_2], &EntirePart::Fitted)
                    .unwrap();
                prop_assert_eq!(rep.verdict, Verdict::Violated, "ñ = {}", n_tilde);
            }
            Ok(())
        })
        .unwrap();
}
