use std::f64::consts::PI;

use approx::assert_relative_eq;
use proptest::prelude::*;
use quenchspec::bath::{effective_temperature, Cutoff, NoiseModel, Spectral, SpectralModel};
use quenchspec::control::{build_nv_plan, filter_freq, filter_time, PulseSequence};
use quenchspec::dynamics::{dephasing, n_meas, qps_static, time_grid};
use quenchspec::estimation::comb_weights;
use quenchspec::exactbath::{exact_coherence, quench_decompose, thermal_state, zeta_phi, CMatrix, DecomposeOptions, FiniteBath};
use quenchspec::quad::QuadOptions;
use quenchspec::Complex64;

fn fractions() -> impl Strategy<Value = Vec<f64>> {
    prop::collection::btree_set(1u32..999, 0..6).prop_map(|s| s.into_iter().map(|k| k as f64 / 1000.0).collect())
}

fn hermitian(n: usize, vals: &[f64]) -> CMatrix {
    let a = CMatrix::from_fn(n, n, |r, k| {
        let i = 2 * (r * n + k);
        Complex64::new(vals[i % vals.len()], vals[(i + 1) % vals.len()])
    });
    (&a + a.adjoint()) * Complex64::new(0.5, 0.0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn filter_spectrum_is_conjugate_symmetric(fr in fractions(), t in 0.1f64..100.0, w in -20.0f64..20.0) {
        let seq = PulseSequence::new(fr, t).unwrap();
        let a = filter_freq(&seq, w);
        let b = filter_freq(&seq, -w).conj();
        prop_assert!((a - b).norm() <= 1e-12 * (1.0 + a.norm()));
    }

    #[test]
    fn filter_at_zero_is_time_integral(fr in fractions(), t in 0.1f64..100.0) {
        let seq = PulseSequence::new(fr, t).unwrap();
        let n = 20_000;
        let riemann: f64 = (0..n).map(|k| filter_time(&seq, (k as f64 + 0.5) * t / n as f64)).sum::<f64>() * t / n as f64;
        prop_assert!((filter_freq(&seq, 0.0).re - seq.f0()).abs() < 1e-12 * t);
        prop_assert!((seq.f0() - riemann).abs() < 1e-3 * t);
    }

    #[test]
    fn comb_weights_follow_closed_form(m in 1usize..40, t in 0.05f64..50.0) {
        let plan = build_nv_plan(m, t).unwrap();
        let ls: Vec<u32> = (1..=15).collect();
        for (l, a) in ls.iter().zip(comb_weights(&plan, &ls).unwrap()) {
            let l = *l as f64;
            prop_assert!((a - 4.0 * (l * PI / 2.0).sin() / (l * l)).abs() < 1e-12);
        }
    }

    #[test]
    fn fdt_inversion_recovers_temperature(x in 1e-3f64..5.0, w in 1e-3f64..3.0, s in 0.3f64..2.5) {
        let kt = w / (2.0 * x);
        let m = SpectralModel::new(s, 0.1, 1.0, Cutoff::Exponential).unwrap();
        let nsd = NoiseModel::thermal(m, kt).unwrap().eval(w);
        let t = effective_temperature(nsd, m.j(w), w).unwrap();
        prop_assert!((t / kt - 1.0).abs() < 1e-9, "{t} vs {kt}");
    }

    #[test]
    fn nmeas_identity(z in 0.0f64..5.0, p in 0.01f64..3.1) {
        let n = n_meas(z, p).unwrap();
        prop_assert!((n * (-2.0 * z).exp() * p.sin().powi(2) - 1.0).abs() < 1e-13);
    }

    #[test]
    fn grids_hit_endpoints(a in 0.01f64..10.0, span in 1.0f64..1e4, n in 2usize..200, log in any::<bool>()) {
        let g = time_grid(a, a * span, n, log).unwrap();
        prop_assert_eq!(g.len(), n);
        prop_assert!((g[0] - a).abs() <= 1e-12 * a);
        prop_assert!((g[n - 1] - a * span).abs() <= 1e-9 * a * span);
        prop_assert!(g.windows(2).all(|p| p[1] > p[0]));
    }

    #[test]
    fn decomposition_identities(n in 1usize..9, vals in prop::collection::vec(-1.0f64..1.0, 16..64), kt in 0.1f64..5.0) {
        let h0 = hermitian(n, &vals);
        let rho = thermal_state(&h0, kt).unwrap();
        let h = hermitian(n, &vals[3..]);
        let d = quench_decompose(&rho, &h, &DecomposeOptions::default()).unwrap();
        // eigenvalues of ρ closer than the default tolerance 1e-8·‖ρ‖ share a group
        let merge = 1e-8 * rho.norm() * 2.0 * h.norm();
        prop_assert!((&rho * &d.h_prime - &d.h_prime * &rho).norm() < 1e-10 + merge);
        prop_assert!((&d.h_prime + &d.v_prime - &h).norm() < 1e-12);
        for g in 0..d.eigen_groups.len() {
            let p = d.projector(g);
            prop_assert!((&p * &d.v_prime * &p).norm() < 1e-10);
        }
    }

    #[test]
    fn exact_coherence_is_contractive(n in 1usize..7, vals in prop::collection::vec(-1.0f64..1.0, 16..64), fr in fractions(), t in 0.1f64..20.0) {
        let hd = hermitian(n, &vals);
        let hu = hermitian(n, &vals[5..]);
        let b = FiniteBath::qubit(hd.clone(), hu, thermal_state(&hd, 0.7).unwrap()).unwrap();
        let (z, _) = zeta_phi(exact_coherence(&b, &PulseSequence::new(fr, t).unwrap(), None).unwrap());
        prop_assert!(z >= -1e-12);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn white_noise_dephasing_is_parseval(fr in fractions(), t in 1.0f64..20.0) {
        // flat S̄ up to a step cutoff far above 1/t_f: ζ → S0·t_f/2 up to O(1/(ω_c t_f))
        let seq = PulseSequence::new(fr.clone(), t).unwrap();
        let wc = 2000.0;
        let noise = NoiseModel::freeform(0.0, 1.0, wc, Cutoff::Step);
        let z = dephasing(&seq, &noise, &QuadOptions::default()).unwrap();
        let bound = 2.0 * (fr.len() + 2) as f64 / (PI * wc * t) * 4.0;
        prop_assert!((z / (t / 2.0) - 1.0).abs() < bound, "{z} vs {}", t / 2.0);
    }

    #[test]
    fn qps_is_linear_in_coupling_and_beta(alpha in 0.01f64..1.0, beta in -1.0f64..1.0, t in 1.0f64..200.0) {
        let opts = QuadOptions::default();
        let seq = PulseSequence::hahn(t).unwrap();
        let m = SpectralModel::ohmic(alpha, 1.0, Cutoff::Lorentzian);
        let base = qps_static(&seq, &m, 0.5, &opts).unwrap();
        assert_relative_eq!(qps_static(&seq, &m.with_alpha(2.0 * alpha), 0.5, &opts).unwrap(), 2.0 * base, max_relative = 1e-9);
        assert_relative_eq!(qps_static(&seq, &m, beta, &opts).unwrap(), 2.0 * beta * base, max_relative = 1e-9, epsilon = 1e-15);
    }
}
