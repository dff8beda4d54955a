use bergman_core::bergman::{
    bergman_symbol, bergman_symbol_with_budget, kernel_density, kernel_eval, kernel_extract,
    peak_state, projection_matrix, truncate_a_c, weighted_inner, ChiSpec, Grid, TruncationRule,
};
use bergman_core::weight::{quadratic_exact_kernel, Weight};
use bergman_core::Error;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

#[test]
fn bargmann_symbol_is_identically_one() {
    let w = Weight::bargmann(1);
    let s = bergman_symbol(&w, 6).unwrap();
    assert!(s.leading_defect() < 1e-12);
    for j in 1..=6 {
        assert!(
            s.symbol().term(j).max_abs() < 1e-11,
            "order {j} has size {}",
            s.symbol().term(j).max_abs()
        );
    }
}

#[test]
fn cubic_symbol_satisfies_structural_invariants() {
    let w = Weight::cubic_perturbed(0.1).unwrap();
    let s = bergman_symbol(&w, 3).unwrap();
    assert!(s.leading_defect() < 1e-12);
    assert!(s.hermitian_defect() < 1e-10, "defect {}", s.hermitian_defect());
    assert!(s.symbol().term(1).max_abs() > 1e-4, "correction should be visible");
}

#[test]
fn truncation_uses_floor_arithmetic() {
    let w = Weight::cubic_perturbed(0.1).unwrap();
    let s = bergman_symbol(&w, 6).unwrap();

    // 1/(2 C hbar) < 1 keeps only the leading term.
    let t = truncate_a_c(&s, 1.0, 1.0, TruncationRule::Half).unwrap();
    assert_eq!(t.terms_used, 1);
    assert!(!t.saturated);
    assert!((t.a_c.coeff(&[0, 0]) - Complex64::ONE).norm() < 1e-12);

    // C = 1, hbar = 1/8 includes j <= 4.
    let t4 = truncate_a_c(&s, 0.125, 1.0, TruncationRule::Half).unwrap();
    assert_eq!(t4.terms_used, 5);
    assert!(!t4.saturated);

    // Tiny hbar wants more terms than stored and is flagged.
    let tf = truncate_a_c(&s, 1e-3, 1.0, TruncationRule::Half).unwrap();
    assert_eq!(t.terms_used + tf.terms_used, 1 + 7);
    assert!(tf.saturated);

    // Successive truncations differ by exactly the next stored term.
    let hbar = 0.125;
    let t3 = {
        // C chosen so the cutoff lands at j = 3 for the same hbar.
        truncate_a_c(&s, hbar, 4.0 / 3.2, TruncationRule::Half).unwrap()
    };
    assert_eq!(t3.terms_used, 4);
    let diff = t4.a_c.sub(&t3.a_c).unwrap();
    let expect = s.symbol().term(4).scale(c(hbar.powi(4), 0.0));
    assert!(diff.sub(&expect).unwrap().max_abs() < 1e-15);

    // The alternative cutoff admits fewer terms at equal C, hbar.
    let te = truncate_a_c(&s, 0.125, 1.0, TruncationRule::OverE).unwrap();
    assert!(te.terms_used < t4.terms_used);
}

#[test]
fn bargmann_kernel_matches_the_exact_projection() {
    let w = Weight::bargmann(1);
    let s = bergman_symbol(&w, 6).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for _ in 0..100 {
        let hbar = rng.random_range(0.02..1.0);
        let x = [c(rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7))];
        let y = [c(rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7))];
        let k = kernel_eval(&s, hbar, &x, &y).unwrap();
        let exact = quadratic_exact_kernel(&w, hbar, &x, &y).unwrap();
        assert!(
            (k - exact).norm() <= 1e-12 * exact.norm(),
            "hbar={hbar}: {k} vs {exact}"
        );
    }
}

#[test]
fn diagonal_density_recovers_the_symbol() {
    // |k(x,x)| e^{-2 Phi/hbar} (pi hbar/2)^n / det = a_C(x, xbar) = 1 + O(hbar).
    let w = Weight::cubic_perturbed(0.1).unwrap();
    let s = bergman_symbol(&w, 3).unwrap();
    let x = [c(0.1, -0.05)];
    for hbar in [0.1, 0.05, 0.025] {
        // On the diagonal the phase equals the weight, so the gauge cancels.
        let k = kernel_eval(&s, hbar, &x, &x).unwrap();
        let pt = [x[0], x[0].conj()];
        let det = w.phi().derive(0).derive(1).eval(&pt);
        let a_diag = k * std::f64::consts::PI * hbar / (2.0 * det);
        assert!(
            (a_diag - Complex64::ONE).norm() < 2.0 * hbar,
            "hbar={hbar}: a_diag={a_diag}"
        );
    }
}

#[test]
fn kernel_refuses_points_outside_the_radius() {
    let w = Weight::cubic_perturbed(0.1).unwrap();
    let s = bergman_symbol(&w, 2).unwrap();
    let far = [c(5.0, 0.0)];
    match kernel_density(&s, 0.1, &far, &[Complex64::ZERO]) {
        Err(Error::OutOfRadius { .. }) => {}
        other => panic!("expected radius refusal, got {other:?}"),
    }
}

#[test]
fn projection_is_hermitian_and_localized() {
    let w = Weight::bargmann(1);
    let s = bergman_symbol(&w, 3).unwrap();
    let grid = Grid::new(Complex64::ZERO, 0.8, 0.2).unwrap();
    let chi = ChiSpec::Bump { radius: 0.4 };
    let pm = projection_matrix(&s, &grid, 0.2, chi).unwrap();
    assert!(pm.hermitian_defect() < 1e-6, "defect {}", pm.hermitian_defect());

    // Kernel support: entries vanish beyond the cutoff radius.
    let mut worst = 0.0f64;
    for a in (0..grid.len()).step_by(97) {
        for b in (0..grid.len()).step_by(89) {
            if (grid.points[a] - grid.points[b]).norm() >= 0.4 {
                worst = worst.max(pm.p[(a, b)].norm());
            }
        }
    }
    assert_eq!(worst, 0.0);

    match projection_matrix(&s, &grid, 0.2, ChiSpec::Bump { radius: 0.9 }) {
        Err(Error::InvalidConfig(_)) => {}
        other => panic!("expected chi radius refusal, got {other:?}"),
    }
}

#[test]
fn reproducing_defect_shrinks_with_hbar_and_grid() {
    let w = Weight::bargmann(1);
    let s = bergman_symbol(&w, 3).unwrap();
    let mut defects = Vec::new();
    for hbar in [0.2, 0.1, 0.05] {
        let grid = Grid::new(Complex64::ZERO, 1.2, hbar).unwrap();
        let pm = projection_matrix(&s, &grid, hbar, ChiSpec::One).unwrap();
        let d = pm.reproducing_defect(|z| z * z * z, 0.55);
        defects.push(d);
    }
    assert!(
        defects[0] > defects[1] && defects[1] > defects[2],
        "defects {defects:?}"
    );

    // Refining the grid at fixed hbar does not degrade the defect.
    let coarse = Grid::with_nodes(Complex64::ZERO, 1.2, 30);
    let fine = Grid::with_nodes(Complex64::ZERO, 1.2, 60);
    let pc = projection_matrix(&s, &coarse, 0.1, ChiSpec::One).unwrap();
    let pf = projection_matrix(&s, &fine, 0.1, ChiSpec::One).unwrap();
    let dc = pc.reproducing_defect(|z| z * z, 0.55);
    let df = pf.reproducing_defect(|z| z * z, 0.55);
    assert!(df <= dc * 1.5, "coarse {dc}, fine {df}");
}

#[test]
fn projection_is_nearly_idempotent_on_holomorphic_samples() {
    let w = Weight::bargmann(1);
    let s = bergman_symbol(&w, 3).unwrap();
    let hbar = 0.07;
    let grid = Grid::new(Complex64::ZERO, 1.4, hbar).unwrap();
    let pm = projection_matrix(&s, &grid, hbar, ChiSpec::One).unwrap();
    let interior = grid.interior(0.5);
    for j in 0..=3 {
        let v: Vec<Complex64> = grid.points.iter().map(|z| z.powu(j)).collect();
        let pv = pm.apply(&v);
        let ppv = pm.apply(&pv);
        let mut num = 0.0;
        let mut den = 0.0;
        for &a in &interior {
            num += (ppv[a] - pv[a]).norm_sqr() * pm.q[a];
            den += pv[a].norm_sqr() * pm.q[a];
        }
        let defect = (num / den.max(1e-300)).sqrt();
        assert!(defect < 1e-3, "monomial {j}: idempotency defect {defect}");
    }
}

#[test]
fn peak_states_have_hbar_scaled_norms() {
    let w = Weight::bargmann(1);
    for hbar in [0.2, 0.1, 0.05] {
        let grid = Grid::new(Complex64::ZERO, 1.2, hbar).unwrap();
        let e = peak_state(&w, &grid, c(0.1, 0.2), hbar).unwrap();
        let norm2 = weighted_inner(&grid, &w, hbar, &e, &e).re;
        let ratio = norm2 * hbar;
        assert!(
            (0.5..2.0).contains(&ratio),
            "hbar={hbar}: |e|^2 * hbar = {ratio}"
        );
    }
}

#[test]
fn peak_state_detects_clipped_support() {
    let w = Weight::bargmann(1);
    let grid = Grid::new(Complex64::ZERO, 1.2, 0.1).unwrap();
    match peak_state(&w, &grid, c(1.15, 0.0), 0.1) {
        Err(Error::SupportClipped { mass, .. }) => assert!(mass < 0.99),
        other => panic!("expected clipped support, got {other:?}"),
    }
}

#[test]
fn peak_extraction_recovers_the_kernel_density() {
    let w = Weight::bargmann(1);
    let s = bergman_symbol(&w, 3).unwrap();
    let hbar = 0.1;
    let grid = Grid::new(Complex64::ZERO, 1.2, hbar).unwrap();
    let pm = projection_matrix(&s, &grid, hbar, ChiSpec::One).unwrap();

    let mut rng = ChaCha8Rng::seed_from_u64(9);
    for _ in 0..10 {
        let x0 = c(rng.random_range(-0.3..0.3), rng.random_range(-0.3..0.3));
        let y0 = x0 + c(rng.random_range(-0.1..0.1), rng.random_range(-0.1..0.1));
        let got = kernel_extract(|v| pm.apply(v), &w, &grid, x0, y0, hbar).unwrap();
        let want = kernel_density(&s, hbar, &[x0], &[y0]).unwrap();
        // The peak states have width sqrt(hbar), so smearing costs O(hbar).
        let rel = (got - want).norm() / want.norm();
        assert!(rel < 2e-2, "extraction at ({x0}, {y0}): rel error {rel}");
    }

    // Diagonal Bargmann value 1/(pi hbar).
    let diag = kernel_extract(|v| pm.apply(v), &w, &grid, Complex64::ZERO, Complex64::ZERO, hbar)
        .unwrap();
    let expect = 1.0 / (std::f64::consts::PI * hbar);
    assert!(
        (diag.re - expect).abs() < 2e-2 * expect,
        "diag {diag}, expect {expect}"
    );
    assert!(diag.im.abs() < 2e-2 * expect);
}

#[test]
fn gauge_weighted_kernel_decays_at_the_levi_rate() {
    let w = Weight::bargmann(1);
    let s = bergman_symbol(&w, 3).unwrap();
    let hbar = 0.1;
    let x = [c(0.3, 0.1)];
    let y = [c(-0.2, -0.25)];
    let k = kernel_eval(&s, hbar, &x, &y).unwrap();
    let gauge = ((-w.phi_at(&x) + w.phi_at(&y)) / hbar).exp();
    let weighted = k.norm() * gauge;
    let dist2 = (x[0] - y[0]).norm_sqr();
    let expect = (1.0 / (std::f64::consts::PI * hbar)) * (-dist2 / (2.0 * hbar)).exp();
    assert!((weighted - expect).abs() < 1e-10 * expect);
}

#[test]
fn budgeted_symbol_reports_its_caps() {
    let w = Weight::cubic_perturbed(0.1).unwrap();
    let s = bergman_symbol_with_budget(&w, 2, 6).unwrap();
    assert_eq!(s.order(), 2);
    assert_eq!(s.degree_budget(), 6);
    assert_eq!(s.cap_used(), 10);
}
