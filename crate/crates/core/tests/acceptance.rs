//! End-to-end acceptance suite: one test per contract-level property, each
//! printing a single pass line with its runtime.

use bergman_core::bergman::{
    bergman_symbol, kernel_eval, projection_matrix, ChiSpec, Grid,
};
use bergman_core::oracle::{
    compare_report, decay_fit, domain_radius, gram_auto, gram_matrix, sphere_density,
    sphere_density_fit, sphere_gauge_weighted, sphere_gram, QuadSpec,
};
use bergman_core::quantize::{symbol_forward, symbol_invert, u_apply, u_half_apply, KuranishiData};
use bergman_core::series::{growth_fit, HbarSymbol, Jet};
use bergman_core::util::{linear_fit, spectral_norm};
use bergman_core::weight::{coercivity_check, polarize, quadratic_exact_kernel, Weight};
use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::time::Instant;

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn pass(name: &str, t0: Instant) {
    println!("ACCEPTANCE {name}: PASS ({:.2?})", t0.elapsed());
}

#[test]
fn gaussian_weight_is_exact() {
    let t0 = Instant::now();
    let w = Weight::bargmann(1);
    let s = bergman_symbol(&w, 6).unwrap();
    assert!(s.leading_defect() < 1e-12);
    for j in 1..=6 {
        assert!(s.symbol().term(j).max_abs() < 1e-11, "order {j}");
    }
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    for _ in 0..100 {
        let hbar = rng.random_range(0.02..1.0);
        let x = [c(rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7))];
        let y = [c(rng.random_range(-0.7..0.7), rng.random_range(-0.7..0.7))];
        let k = kernel_eval(&s, hbar, &x, &y).unwrap();
        let exact = quadratic_exact_kernel(&w, hbar, &x, &y).unwrap();
        assert!((k - exact).norm() <= 1e-12 * exact.norm());
    }
    pass("gaussian weight exactness", t0);
}

fn random_jet(rng: &mut ChaCha8Rng, arity: usize, cap: usize, theta_cap: u32) -> Jet {
    let mut j = Jet::zero(arity, cap, vec![Complex64::ZERO; arity]);
    let mut idx = vec![0u32; arity];
    fill(rng, &mut j, &mut idx, 0, cap, theta_cap);
    j
}

fn fill(rng: &mut ChaCha8Rng, j: &mut Jet, idx: &mut Vec<u32>, var: usize, left: usize, tc: u32) {
    if var == idx.len() {
        if idx[idx.len() - 1] <= tc {
            *j.coeff_mut(idx) = c(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
        }
        return;
    }
    for e in 0..=left {
        idx[var] = e as u32;
        fill(rng, j, idx, var + 1, left - e, tc);
    }
    idx[var] = 0;
}

#[test]
fn amplitude_maps_invert_each_other() {
    let t0 = Instant::now();
    let w = Weight::cubic_perturbed(0.1).unwrap();
    let data = KuranishiData::build(&polarize(&w), 10).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..5 {
        let mut terms: Vec<Jet> = (0..5).map(|_| random_jet(&mut rng, 2, 6, u32::MAX)).collect();
        *terms[0].coeff_mut(&[0, 0]) += c(2.0, 0.0);
        let a = HbarSymbol::new(terms).unwrap();
        let b = symbol_forward(&data, &a).unwrap();
        let back = symbol_invert(&data, &b).unwrap();
        for j in 0..=a.order() {
            let d = back
                .term(j)
                .sub(&a.term(j).extend_cap(back.term(j).cap()))
                .unwrap();
            assert!(d.max_abs() < 1e-9, "trial {trial} order {j}: {}", d.max_abs());
        }
    }
    pass("amplitude round trip", t0);
}

#[test]
fn asymptotic_kernel_converges_to_the_exact_projection() {
    let t0 = Instant::now();
    let w = Weight::cubic_perturbed(0.1).unwrap();
    let s = bergman_symbol(&w, 3).unwrap();
    let hbars = [1.0 / 20.0, 1.0 / 40.0, 1.0 / 80.0];
    let report = compare_report(&s, &hbars, QuadSpec::default()).unwrap();
    assert!(report.e[0] > report.e[1] && report.e[1] > report.e[2], "E = {:?}", report.e);
    assert_eq!(report.fit.flag, "fit");
    assert!(report.fit.slope > 0.0, "slope {}", report.fit.slope);
    assert!(report.fit.r2 > 0.9, "r2 {}", report.fit.r2);
    assert!(report.e[2] < 1e-3, "E(1/80) = {}", report.e[2]);
    pass("near-diagonal oracle agreement", t0);
}

#[test]
fn phase_coercivity_and_kernel_decay_hold() {
    let t0 = Instant::now();
    let weights = [Weight::bargmann(1), Weight::cubic_perturbed(0.1).unwrap()];
    for w in &weights {
        let rep = coercivity_check(&polarize(w), w, 0.2, 400).unwrap();
        assert!(rep.c_lo > 0.0, "c_lo = {}", rep.c_lo);
    }

    // Gaussian weight: the gauge-weighted kernel decays at exactly half
    // the squared distance rate.
    let w = &weights[0];
    let hbar = 0.25;
    let o = gram_matrix(w, hbar, 25, domain_radius(w, hbar), QuadSpec::default()).unwrap();
    let pts = [
        (c(0.3, 0.0), c(-0.3, 0.1)),
        (c(0.5, 0.2), c(0.1, -0.4)),
        (c(-0.6, 0.1), c(0.2, 0.3)),
        (c(0.0, 0.7), c(0.1, 0.0)),
        (c(0.4, -0.4), c(-0.2, 0.2)),
    ];
    let samples: Vec<_> = pts
        .iter()
        .map(|(x, y)| (*x, *y, o.gauge_weighted(w, *x, *y)))
        .collect();
    let fit = decay_fit(&samples, hbar).unwrap();
    assert!((fit.slope - 0.5).abs() < 1e-4, "slope {}", fit.slope);
    let (m_lo, m_hi) = w.levi_range_over_ball(0.7, 200);
    assert!(fit.slope > m_lo - 0.2 && fit.slope < m_hi + 0.2);

    // Perturbed weight: the rate stays inside the Levi bracket.
    let w = &weights[1];
    let hbar = 0.1;
    let o = gram_auto(w, hbar, QuadSpec::default()).unwrap();
    let samples: Vec<_> = pts
        .iter()
        .map(|(x, y)| {
            let (x, y) = (x * 0.6, y * 0.6);
            (x, y, o.gauge_weighted(w, x, y))
        })
        .collect();
    let fit = decay_fit(&samples, hbar).unwrap();
    let (m_lo, m_hi) = w.levi_range_over_ball(0.5, 200);
    assert!(
        fit.slope > m_lo - 0.2 && fit.slope < m_hi + 0.2,
        "slope {} outside [{}, {}]",
        fit.slope,
        m_lo - 0.2,
        m_hi + 0.2
    );
    pass("coercivity and decay rates", t0);
}

#[test]
fn discretized_projection_behaves() {
    let t0 = Instant::now();

    // Hermitian symmetry on a symmetric grid.
    let w = Weight::bargmann(1);
    let s = bergman_symbol(&w, 3).unwrap();
    let grid = Grid::new(Complex64::ZERO, 0.8, 0.2).unwrap();
    let pm = projection_matrix(&s, &grid, 0.2, ChiSpec::Bump { radius: 0.4 }).unwrap();
    assert!(pm.hermitian_defect() < 1e-6, "defect {}", pm.hermitian_defect());

    // Reproducing defect on monomials decays in 1/hbar.
    let hbars = [0.2, 0.1, 0.05];
    let mut defects = vec![Vec::new(); 7];
    for &hbar in &hbars {
        let grid = Grid::new(Complex64::ZERO, 1.2, hbar).unwrap();
        let pm = projection_matrix(&s, &grid, hbar, ChiSpec::One).unwrap();
        for (j, d) in defects.iter_mut().enumerate() {
            d.push(pm.reproducing_defect(|z| z.powu(j as u32), 0.55));
        }
    }
    let inv: Vec<f64> = hbars.iter().map(|h| 1.0 / h).collect();
    for (j, d) in defects.iter().enumerate() {
        assert!(d[0] > d[1] && d[1] > d[2], "monomial {j}: defects {d:?}");
        let logs: Vec<f64> = d.iter().map(|v| v.max(1e-300).ln()).collect();
        let fit = linear_fit(&inv, &logs).unwrap();
        assert!(fit.slope < 0.0, "monomial {j}: log-slope {}", fit.slope);
    }

    // Distance to the exact Gram projection shrinks in 1/hbar.
    let w = Weight::cubic_perturbed(0.1).unwrap();
    let s = bergman_symbol(&w, 3).unwrap();
    let mut dists = Vec::new();
    for &hbar in &hbars {
        let grid = Grid::new(Complex64::ZERO, 0.5, hbar).unwrap();
        let pm = projection_matrix(&s, &grid, hbar, ChiSpec::One).unwrap();
        let all: Vec<usize> = (0..grid.len()).collect();
        let frame = pm.weighted_frame(&all);
        let o = gram_auto(&w, hbar, QuadSpec::default()).unwrap();
        let p_orc = o.projection_on_grid(&w, &grid);
        let mut frame_orc = DMatrix::zeros(grid.len(), grid.len());
        for a in 0..grid.len() {
            for b in 0..grid.len() {
                let r = (pm.q[a] / pm.q[b]).sqrt();
                frame_orc[(a, b)] = p_orc[(a, b)] * Complex64::new(r, 0.0);
            }
        }
        dists.push(spectral_norm(&(frame - frame_orc), 40));
    }
    assert!(
        dists[0] > dists[1] && dists[1] > dists[2],
        "projection distances {dists:?}"
    );
    pass("discretized projection properties", t0);
}

#[test]
fn sphere_sections_follow_the_line_bundle_model() {
    let t0 = Instant::now();
    for k in 1..=20u32 {
        let o = sphere_gram(k).unwrap();
        assert_eq!(o.basis_len(), (k + 1) as usize);
    }
    let o = sphere_gram(12).unwrap();
    let expect = 13.0 / std::f64::consts::PI;
    for z in [c(0.0, 0.0), c(1.2, -0.4), c(0.0, 2.0), c(-1.4, 1.4)] {
        let d = sphere_density(&o, z).unwrap();
        assert!((d - expect).abs() < 1e-10 * expect);
    }
    let ks: Vec<u32> = (8..=20).collect();
    let (_, _, residual) = sphere_density_fit(&ks).unwrap();
    assert!(residual < 0.01, "residual {residual}");

    let x = c(1.0, 0.0);
    let y = c(-0.8, 0.1);
    let mut kk = Vec::new();
    let mut logs = Vec::new();
    for k in 8..=16u32 {
        let o = sphere_gram(k).unwrap();
        let v = sphere_gauge_weighted(&o, x, y).unwrap();
        kk.push(k as f64);
        logs.push(v.ln());
    }
    let fit = linear_fit(&kk, &logs).unwrap();
    let c_fitted = -1.0 / fit.slope;
    assert!(c_fitted.is_finite() && c_fitted > 0.0, "C = {c_fitted}");
    let v12 = sphere_gauge_weighted(&sphere_gram(12).unwrap(), x, y).unwrap();
    assert!(v12 < (-12.0 / c_fitted).exp() * 2.0);
    println!("  antipodal decay constant C = {c_fitted:.3}");
    pass("sphere line-bundle model", t0);
}

#[test]
fn symbol_coefficients_grow_factorially_at_most() {
    let t0 = Instant::now();
    let w = Weight::cubic_perturbed(0.1).unwrap();
    let s = bergman_symbol(&w, 6).unwrap();
    let fit = growth_fit(s.symbol(), 0.3).unwrap();
    let p = fit.exponent_p.expect("nonvanishing tail expected");
    assert!(p <= 1.3, "growth exponent {p}");
    pass("coefficient growth", t0);
}

#[test]
fn midpoint_flow_composes_and_terminates() {
    let t0 = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    // Polynomial symbols of theta-degree <= 3 on the triple space.
    let terms: Vec<Jet> = (0..4).map(|_| random_jet(&mut rng, 3, 6, 3)).collect();
    let sym = HbarSymbol::new(terms).unwrap();
    let fwd = u_apply(&sym, 0.5, 1).unwrap();
    let back = u_apply(&fwd, -0.5, 1).unwrap();
    for j in 0..=sym.order() {
        let d = back.term(j).sub(sym.term(j)).unwrap();
        assert!(d.max_abs() < 1e-13, "group law defect {} at {j}", d.max_abs());
    }

    let single = HbarSymbol::new(vec![random_jet(&mut rng, 3, 6, 3)])
        .unwrap()
        .with_order(6);
    let b = u_half_apply(&single, 1).unwrap();
    for j in 4..=6 {
        assert_eq!(b.term(j).max_abs(), 0.0, "order {j} should terminate");
    }
    pass("midpoint flow group law and termination", t0);
}
