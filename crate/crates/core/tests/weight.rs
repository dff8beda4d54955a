use bergman_core::series::{HbarSymbol, Jet};
use bergman_core::weight::{
    coercivity_check, fbi_phase_to_weight, heat_toeplitz_to_weyl, heat_weyl_to_toeplitz, polarize,
    quadratic_exact_density, quadratic_exact_kernel, QuadraticModel, Weight, WeightData,
};
use bergman_core::Error;
use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn m1(v: Complex64) -> DMatrix<Complex64> {
    DMatrix::from_element(1, 1, v)
}

#[test]
fn bargmann_weight_basics() {
    let w = Weight::bargmann(1);
    assert_eq!(w.dim(), 1);
    assert!((w.levi_m() - 0.5).abs() < 1e-14);
    let z = [c(0.3, -0.4)];
    assert!((w.phi_at(&z) - 0.125).abs() < 1e-14);
    let g = w.dbar_phi_at(&z);
    assert!((g[0] - c(0.15, -0.2)).norm() < 1e-14);
    assert!(w.is_quadratic());
}

#[test]
fn hermitian_validation_names_the_offending_pair() {
    // coeff(z^2) = 1/8 but coeff(zbar^2) = -1/8 breaks conjugate symmetry.
    let phi = Jet::from_entries(
        2,
        2,
        vec![Complex64::ZERO; 2],
        &[
            (vec![1, 1], c(0.5, 0.0)),
            (vec![2, 0], c(0.125, 0.0)),
            (vec![0, 2], c(-0.125, 0.0)),
        ],
    )
    .unwrap();
    match Weight::new(1, vec![Complex64::ZERO], phi) {
        Err(Error::NonHermitian { a, b, .. }) => {
            assert_eq!((a[0] + b[0]) as usize, 2);
            assert_ne!(a[0], b[0]);
        }
        other => panic!("expected Hermitian violation, got {other:?}"),
    }
}

#[test]
fn negative_levi_is_rejected() {
    let phi = Jet::from_entries(
        2,
        2,
        vec![Complex64::ZERO; 2],
        &[(vec![1, 1], c(-0.5, 0.0))],
    )
    .unwrap();
    match Weight::new(1, vec![Complex64::ZERO], phi) {
        Err(Error::LeviNotPositive { min_eig }) => assert!(min_eig < 0.0),
        other => panic!("expected Levi rejection, got {other:?}"),
    }
}

#[test]
fn polarization_restricts_to_the_weight_and_is_symmetric() {
    // Phi = |z|^2/2 + Re(z^2)/4 polarizes to xw/2 + x^2/8 + w^2/8.
    let phi = Jet::from_entries(
        2,
        2,
        vec![Complex64::ZERO; 2],
        &[
            (vec![1, 1], c(0.5, 0.0)),
            (vec![2, 0], c(0.125, 0.0)),
            (vec![0, 2], c(0.125, 0.0)),
        ],
    )
    .unwrap();
    let w = Weight::new(1, vec![Complex64::ZERO], phi).unwrap();
    let p = polarize(&w);
    assert!((p.psi().coeff(&[1, 1]) - c(0.5, 0.0)).norm() < 1e-15);
    assert!((p.psi().coeff(&[2, 0]) - c(0.125, 0.0)).norm() < 1e-15);
    assert!((p.psi().coeff(&[0, 2]) - c(0.125, 0.0)).norm() < 1e-15);
    assert_eq!(p.symmetry_defect(), 0.0);
    for k in 0..10 {
        let z = [c(0.1 * k as f64 - 0.4, 0.07 * k as f64 - 0.3)];
        let zb = [z[0].conj()];
        let restricted = p.psi_at(&z, &zb);
        assert!(restricted.im.abs() < 1e-14);
        assert!((restricted.re - w.phi_at(&z)).abs() < 1e-13);
    }
}

#[test]
fn coercivity_is_exactly_one_half_for_bargmann() {
    let w = Weight::bargmann(1);
    let p = polarize(&w);
    let rep = coercivity_check(&p, &w, 0.5, 200).unwrap();
    assert!((rep.c_lo - 0.5).abs() < 1e-12);
    assert!((rep.c_hi - 0.5).abs() < 1e-12);
    assert!(rep.samples > 150);
}

#[test]
fn coercivity_stays_positive_for_small_cubic_perturbation() {
    let w = Weight::cubic_perturbed(0.1).unwrap();
    let p = polarize(&w);
    let rep = coercivity_check(&p, &w, 0.2, 200).unwrap();
    assert!(rep.c_lo > 0.3, "c_lo = {}", rep.c_lo);
    assert!(rep.c_hi < 0.7, "c_hi = {}", rep.c_hi);
}

#[test]
fn coercivity_violation_is_reported() {
    // Phi = |z|^2/2 - |z|^4 gives Q = |x-y|^2 (1/2 - |x+y|^2), negative
    // once the pair drifts outward in a common direction.
    let phi = Jet::from_entries(
        2,
        4,
        vec![Complex64::ZERO; 2],
        &[(vec![1, 1], c(0.5, 0.0)), (vec![2, 2], c(-1.0, 0.0))],
    )
    .unwrap();
    let w = Weight::new(1, vec![Complex64::ZERO], phi).unwrap();
    let p = polarize(&w);
    let r = w.eval_radius();
    assert!(r >= 0.5 - 1e-12);
    match coercivity_check(&p, &w, r, 400) {
        Err(Error::InvalidConfig(msg)) => assert!(msg.contains("coercivity")),
        other => panic!("expected coercivity violation, got {other:?}"),
    }
}

#[test]
fn levi_range_brackets_the_perturbed_levi_form() {
    // Levi(z) = 1/2 + 2 eps Re z for the cubic perturbation.
    let w = Weight::cubic_perturbed(0.1).unwrap();
    let (lo, hi) = w.levi_range_over_ball(0.2, 200);
    assert!(lo > 0.45 && lo < 0.5);
    assert!(hi > 0.5 && hi < 0.55);
}

#[test]
fn gaussian_fbi_phase_gives_imaginary_part_weight() {
    // phase(z, x) = i (z - x)^2 / 2, so the weight is (Im z)^2 / 2.
    let q = QuadraticModel::new(m1(c(0.0, 1.0)), m1(c(0.0, -1.0)), m1(c(0.0, 1.0))).unwrap();
    let (w, c_phi) = fbi_phase_to_weight(&q).unwrap();
    for k in 0..8 {
        let z = [c(0.3 * k as f64 - 1.0, 0.2 * k as f64 - 0.7)];
        assert!((w.phi_at(&z) - 0.5 * z[0].im * z[0].im).abs() < 1e-13);
    }
    let expected = 1.0 / (2.0f64.sqrt() * std::f64::consts::PI.powf(0.75));
    assert!((c_phi - expected).abs() < 1e-14);

    let kappa = q.kappa();
    assert!((kappa[(0, 0)] - c(1.0, 0.0)).norm() < 1e-14);
    assert!((kappa[(0, 1)] - c(0.0, -1.0)).norm() < 1e-14);
    assert!((kappa[(1, 0)] - c(0.0, 0.0)).norm() < 1e-14);
    assert!((kappa[(1, 1)] - c(1.0, 0.0)).norm() < 1e-14);
}

#[test]
fn fbi_weight_matches_direct_maximization() {
    let p = DMatrix::from_row_slice(
        2,
        2,
        &[c(0.2, 1.3), c(-0.1, 0.4), c(-0.1, 0.4), c(0.5, 1.1)],
    );
    let q = DMatrix::from_row_slice(
        2,
        2,
        &[c(1.0, -0.3), c(0.2, 0.1), c(-0.4, 0.6), c(0.9, 0.2)],
    );
    let r = DMatrix::from_row_slice(
        2,
        2,
        &[c(0.3, 0.2), c(0.1, -0.2), c(0.1, -0.2), c(-0.4, 0.6)],
    );
    let model = QuadraticModel::new(p, q, r).unwrap();
    let (w, _) = fbi_phase_to_weight(&model).unwrap();
    for k in 0..6 {
        let z = DVector::from_vec(vec![
            c(0.21 * k as f64 - 0.6, -0.13 * k as f64 + 0.3),
            c(-0.17 * k as f64 + 0.4, 0.11 * k as f64 - 0.2),
        ]);
        // Locate the real critical point of Im phase numerically by
        // coordinate descent on a fine grid around the analytic optimum.
        let zs = [z[0], z[1]];
        let analytic = w.phi_at(&zs);
        let mut best = f64::NEG_INFINITY;
        let steps = 60;
        let span = 3.0;
        let mut x = DVector::from_vec(vec![Complex64::ZERO, Complex64::ZERO]);
        for _sweep in 0..40 {
            for i in 0..2 {
                let mut best_xi = x[i].re;
                let mut best_val = f64::NEG_INFINITY;
                for s in -steps..=steps {
                    let mut xt = x.clone();
                    xt[i] = c(x[i].re + span * s as f64 / steps as f64, 0.0);
                    let v = -model.phase(&z, &xt).im;
                    if v > best_val {
                        best_val = v;
                        best_xi = xt[i].re;
                    }
                }
                x[i] = c(best_xi, 0.0);
                best = best_val;
            }
        }
        assert!(
            (best - analytic).abs() < 1e-3,
            "max -Im phase = {best}, weight = {analytic}"
        );
        assert!(best <= analytic + 1e-10);
    }
}

#[test]
fn quadratic_kernel_matches_closed_form() {
    let w = Weight::bargmann(1);
    let k00 = quadratic_exact_kernel(&w, 1.0, &[Complex64::ZERO], &[Complex64::ZERO]).unwrap();
    assert!((k00 - c(1.0 / std::f64::consts::PI, 0.0)).norm() < 1e-15);

    let hbar = 0.05;
    let x = [c(0.2, -0.1)];
    let y = [c(-0.15, 0.25)];
    let k = quadratic_exact_kernel(&w, hbar, &x, &y).unwrap();
    // For Phi = |z|^2/2: (1/(pi hbar)) exp((x ybar - |y|^2)/hbar).
    let manual = c(1.0 / (std::f64::consts::PI * hbar), 0.0)
        * (((x[0] * y[0].conj()) - c(y[0].norm_sqr(), 0.0)) / hbar).exp();
    assert!((k - manual).norm() < 1e-12 * manual.norm());

    let d = quadratic_exact_density(&w, hbar, &x, &y).unwrap();
    let gauge = c((-2.0 * w.phi_at(&y) / hbar).exp(), 0.0);
    assert!((d * gauge - k).norm() < 1e-12 * k.norm());

    let cubic = Weight::cubic_perturbed(0.1).unwrap();
    match quadratic_exact_kernel(&cubic, hbar, &x, &y) {
        Err(Error::NotQuadratic { degree }) => assert_eq!(degree, 3),
        other => panic!("expected quadratic-only refusal, got {other:?}"),
    }
}

fn symbol_from(entries: &[(Vec<u32>, Complex64)], cap: usize, order: usize) -> HbarSymbol {
    let jet = Jet::from_entries(2, cap, vec![Complex64::ZERO; 2], entries).unwrap();
    HbarSymbol::new(vec![jet]).unwrap().with_order(order)
}

#[test]
fn heat_flow_on_monomials() {
    let w = Weight::bargmann(1);
    // z zbar picks up hbar/2.
    let f = symbol_from(&[(vec![1, 1], Complex64::ONE)], 4, 2);
    let b = heat_toeplitz_to_weyl(&w, &f).unwrap();
    assert!((b.term(0).coeff(&[1, 1]) - Complex64::ONE).norm() < 1e-15);
    assert!((b.term(1).coeff(&[0, 0]) - c(0.5, 0.0)).norm() < 1e-15);
    assert_eq!(b.term(2).max_abs(), 0.0);

    // z^2 zbar^2 picks up 2 hbar z zbar + hbar^2 / 2.
    let f = symbol_from(&[(vec![2, 2], Complex64::ONE)], 4, 2);
    let b = heat_toeplitz_to_weyl(&w, &f).unwrap();
    assert!((b.term(1).coeff(&[1, 1]) - c(2.0, 0.0)).norm() < 1e-15);
    assert!((b.term(2).coeff(&[0, 0]) - c(0.5, 0.0)).norm() < 1e-15);

    let back = heat_weyl_to_toeplitz(&w, &b).unwrap();
    for j in 0..=2 {
        let d = back.term(j).sub(f.term(j)).unwrap();
        assert!(d.max_abs() < 1e-15, "round trip failed at order {j}");
    }
}

#[test]
fn heat_flow_respects_general_levi_inverse() {
    // Phi = |z|^2 has Levi 1, so the flow uses A = 1 instead of 2.
    let phi = Jet::from_entries(
        2,
        2,
        vec![Complex64::ZERO; 2],
        &[(vec![1, 1], Complex64::ONE)],
    )
    .unwrap();
    let w = Weight::new(1, vec![Complex64::ZERO], phi).unwrap();
    let f = symbol_from(&[(vec![1, 1], Complex64::ONE)], 4, 1);
    let b = heat_toeplitz_to_weyl(&w, &f).unwrap();
    assert!((b.term(1).coeff(&[0, 0]) - c(0.25, 0.0)).norm() < 1e-15);
}

#[test]
fn weight_json_round_trip_is_exact() {
    let w = Weight::cubic_perturbed(0.1).unwrap();
    let data = WeightData::from_weight(&w);
    let text = serde_json::to_string_pretty(&data).unwrap();
    let parsed: WeightData = serde_json::from_str(&text).unwrap();
    let back = parsed.to_weight().unwrap();
    assert_eq!(back.dim(), w.dim());
    let d = back.phi().sub(w.phi()).unwrap();
    assert_eq!(d.max_abs(), 0.0);
}

#[test]
fn weight_json_rejects_non_hermitian_tables() {
    let text = r#"{
        "n": 1,
        "base": [[0.0, 0.0]],
        "cap": 2,
        "phi": [
            {"a": [1], "b": [1], "re": 0.5, "im": 0.0},
            {"a": [2], "b": [0], "re": 0.125, "im": 0.0}
        ]
    }"#;
    let parsed: WeightData = serde_json::from_str(text).unwrap();
    match parsed.to_weight() {
        Err(Error::NonHermitian { a, b, .. }) => {
            assert_eq!((a[0], b[0]), (2, 0));
        }
        other => panic!("expected Hermitian rejection, got {other:?}"),
    }
}
