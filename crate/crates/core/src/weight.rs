//! Strictly plurisubharmonic weights, their holomorphic polarizations,
//! phase coercivity checks, and the exactly solvable quadratic model
//! (FBI phases, closed-form projection kernel, heat-operator symbol maps).
//!
//! A weight is a polynomial Taylor table in the paired variables
//! (z_1..z_n, zbar_1..zbar_n) about (x0, conj x0). Reality of the weight is
//! the Hermitian coefficient symmetry coeff(a,b) = conj(coeff(b,a));
//! strict plurisubharmonicity is positivity of the Levi matrix at x0.

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::series::{HbarSymbol, Jet};
use crate::util::halton;

const HERM_TOL: f64 = 1e-12;

fn paired(z: &[Complex64]) -> Vec<Complex64> {
    z.iter().cloned().chain(z.iter().map(|c| c.conj())).collect()
}

#[derive(Clone, Debug)]
pub struct Weight {
    n: usize,
    x0: Vec<Complex64>,
    phi: Jet,
    levi_m: f64,
    eval_radius: f64,
}

impl Weight {
    /// Validate Hermitian symmetry and strict plurisubharmonicity, then
    /// cache the Levi modulus and a conservative evaluation radius.
    pub fn new(n: usize, x0: Vec<Complex64>, phi: Jet) -> Result<Weight> {
        if n == 0 || x0.len() != n || phi.arity() != 2 * n {
            return Err(Error::ShapeMismatch(format!(
                "weight needs a jet in {} variables about a {}-dim point",
                2 * n,
                n
            )));
        }
        for i in 0..n {
            let b = phi.base();
            if (b[i] - x0[i]).norm() > 1e-12 || (b[n + i] - x0[i].conj()).norm() > 1e-12 {
                return Err(Error::ShapeMismatch(
                    "weight jet must be based at (x0, conj x0)".into(),
                ));
            }
        }
        check_hermitian(&phi, n)?;
        let levi = levi_matrix(&phi, n);
        let min_eig = levi
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |a, e| a.min(*e));
        if min_eig <= 0.0 {
            return Err(Error::LeviNotPositive { min_eig });
        }
        let eval_radius = radius_estimate(&phi);
        Ok(Weight {
            n,
            x0,
            phi,
            levi_m: min_eig,
            eval_radius,
        })
    }

    /// The Bargmann weight |z|^2 / 2.
    pub fn bargmann(n: usize) -> Weight {
        let base = vec![Complex64::ZERO; 2 * n];
        let mut entries = Vec::new();
        for i in 0..n {
            let mut idx = vec![0u32; 2 * n];
            idx[i] = 1;
            idx[n + i] = 1;
            entries.push((idx, Complex64::new(0.5, 0.0)));
        }
        let phi = Jet::from_entries(2 * n, 2, base, &entries).unwrap();
        Weight::new(n, vec![Complex64::ZERO; n], phi).unwrap()
    }

    /// One-dimensional cubic perturbation |z|^2/2 + eps (z^2 zbar + z zbar^2)/2
    /// of the Bargmann weight. Strictly plurisubharmonic near 0 for small eps.
    pub fn cubic_perturbed(eps: f64) -> Result<Weight> {
        let base = vec![Complex64::ZERO; 2];
        let h = Complex64::new(0.5, 0.0);
        let e = Complex64::new(eps / 2.0, 0.0);
        let phi = Jet::from_entries(
            2,
            3,
            base,
            &[(vec![1, 1], h), (vec![2, 1], e), (vec![1, 2], e)],
        )?;
        Weight::new(1, vec![Complex64::ZERO], phi)
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn x0(&self) -> &[Complex64] {
        &self.x0
    }

    pub fn phi(&self) -> &Jet {
        &self.phi
    }

    /// Smallest Levi eigenvalue at x0.
    pub fn levi_m(&self) -> f64 {
        self.levi_m
    }

    pub fn eval_radius(&self) -> f64 {
        self.eval_radius
    }

    pub fn levi_matrix(&self) -> DMatrix<Complex64> {
        levi_matrix(&self.phi, self.n)
    }

    /// Levi matrix at an arbitrary point z inside the evaluation ball.
    pub fn levi_matrix_at(&self, z: &[Complex64]) -> DMatrix<Complex64> {
        let pt = paired(z);
        let n = self.n;
        DMatrix::from_fn(n, n, |i, j| self.phi.derive(i).derive(n + j).eval(&pt))
    }

    /// Smallest and largest Levi eigenvalues over sampled points in
    /// B(x0, r), bracketing the expected kernel decay rates.
    pub fn levi_range_over_ball(&self, r: f64, samples: usize) -> (f64, f64) {
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for s in 0..=samples {
            let z = if s == 0 {
                self.x0.clone()
            } else {
                sample_ball_point(&self.x0, r, s as u64, 0)
            };
            for e in self.levi_matrix_at(&z).symmetric_eigenvalues().iter() {
                lo = lo.min(*e);
                hi = hi.max(*e);
            }
        }
        (lo, hi)
    }

    /// Weight value at z; real by Hermitian symmetry.
    pub fn phi_at(&self, z: &[Complex64]) -> f64 {
        self.phi.eval(&paired(z)).re
    }

    /// Antiholomorphic gradient at z, needed by peak states.
    pub fn dbar_phi_at(&self, z: &[Complex64]) -> Vec<Complex64> {
        let pt = paired(z);
        (0..self.n)
            .map(|i| self.phi.derive(self.n + i).eval(&pt))
            .collect()
    }

    pub fn is_quadratic(&self) -> bool {
        self.phi.degree() <= 2
    }

    pub fn require_quadratic(&self) -> Result<()> {
        if !self.is_quadratic() {
            return Err(Error::NotQuadratic {
                degree: self.phi.degree(),
            });
        }
        Ok(())
    }
}

fn check_hermitian(phi: &Jet, n: usize) -> Result<()> {
    let table = phi.table().clone();
    let scale = phi.max_abs().max(1.0);
    let mut swapped = vec![0u32; 2 * n];
    for (i, c) in phi.coeffs().iter().enumerate() {
        let m = table.multi(i);
        for v in 0..n {
            swapped[v] = m[n + v];
            swapped[n + v] = m[v];
        }
        let d = phi.coeff(&swapped);
        if (c - d.conj()).norm() > HERM_TOL * scale {
            return Err(Error::NonHermitian {
                a: m[..n].to_vec(),
                b: m[n..].to_vec(),
                lhs: *c,
                rhs: d,
            });
        }
    }
    Ok(())
}

fn levi_matrix(phi: &Jet, n: usize) -> DMatrix<Complex64> {
    DMatrix::from_fn(n, n, |i, j| {
        let mut idx = vec![0u32; 2 * n];
        idx[i] += 1;
        idx[n + j] += 1;
        phi.coeff(&idx)
    })
}

/// Root-test estimate 0.5 min_d (max_{|a|=d} |c_a|)^{-1/d}, clamped to
/// [0.1, 2]. Polynomial weights are entire, so this is a comfort zone for
/// the asymptotic formulas, not a convergence radius. Quadratic weights
/// get the full clamp range: their kernel formulas are globally exact.
fn radius_estimate(phi: &Jet) -> f64 {
    if phi.degree() <= 2 {
        return 2.0;
    }
    let table = phi.table().clone();
    let mut per_degree = vec![0.0f64; phi.cap() + 1];
    for (i, c) in phi.coeffs().iter().enumerate() {
        let d = table.degree(i);
        per_degree[d] = per_degree[d].max(c.norm());
    }
    let mut r: f64 = 4.0;
    for (d, &m) in per_degree.iter().enumerate().skip(1) {
        if m > 0.0 {
            r = r.min(m.powf(-1.0 / d as f64));
        }
    }
    (0.5 * r).clamp(0.1, 2.0)
}

/// Holomorphic polarization psi(x, w): the weight's Taylor table with the
/// antiholomorphic slots read as independent variables w, so that
/// psi(x, conj x) equals the weight.
#[derive(Clone, Debug)]
pub struct Polarization {
    n: usize,
    psi: Jet,
}

pub fn polarize(w: &Weight) -> Polarization {
    Polarization {
        n: w.dim(),
        psi: w.phi().clone(),
    }
}

impl Polarization {
    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn psi(&self) -> &Jet {
        &self.psi
    }

    /// psi(x, w) at a general point of the polarized domain.
    pub fn psi_at(&self, x: &[Complex64], w: &[Complex64]) -> Complex64 {
        let pt: Vec<Complex64> = x.iter().chain(w.iter()).cloned().collect();
        self.psi.eval(&pt)
    }

    /// Coefficient-level symmetry psi(x,w) = conj(psi(wbar,xbar)); exactly
    /// zero for the polarization of any valid weight.
    pub fn symmetry_defect(&self) -> f64 {
        match self.psi.sub(&self.psi.conj_dual()) {
            Ok(d) => d.max_abs(),
            Err(_) => f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug)]
pub struct CoercivityReport {
    pub c_lo: f64,
    pub c_hi: f64,
    pub samples: usize,
}

/// Sample Q(x,y) = phi(x) + phi(y) - 2 Re psi(x, ybar) over deterministic
/// low-discrepancy pairs in B(x0,r)^2 and return the extremal ratios
/// Q / |x-y|^2. Errors when the lower ratio is not strictly positive,
/// reporting the violating pair.
pub fn coercivity_check(
    p: &Polarization,
    w: &Weight,
    r: f64,
    samples: usize,
) -> Result<CoercivityReport> {
    if r > w.eval_radius() {
        return Err(Error::OutOfRadius {
            distance: r,
            radius: w.eval_radius(),
        });
    }
    let mut c_lo = f64::INFINITY;
    let mut c_hi = f64::NEG_INFINITY;
    let mut worst: Option<(Vec<Complex64>, Vec<Complex64>)> = None;
    let mut used = 0;
    for s in 0..samples {
        let x = sample_ball_point(w.x0(), r, s as u64 + 1, 0);
        let y = sample_ball_point(w.x0(), r, s as u64 + 1, 2 * w.dim());
        let dist2: f64 = x.iter().zip(&y).map(|(a, b)| (a - b).norm_sqr()).sum();
        if dist2 < 1e-16 {
            continue;
        }
        let y_conj: Vec<Complex64> = y.iter().map(|c| c.conj()).collect();
        let q = w.phi_at(&x) + w.phi_at(&y) - 2.0 * p.psi_at(&x, &y_conj).re;
        let ratio = q / dist2;
        if ratio < c_lo {
            c_lo = ratio;
            worst = Some((x.clone(), y.clone()));
        }
        c_hi = c_hi.max(ratio);
        used += 1;
    }
    if used == 0 {
        return Err(Error::DegenerateFit("no usable coercivity pairs".into()));
    }
    if c_lo <= 0.0 {
        let (x, y) = worst.unwrap();
        return Err(Error::InvalidConfig(format!(
            "coercivity violated: Q/|x-y|^2 = {c_lo:.3e} at x = {x:?}, y = {y:?}"
        )));
    }
    Ok(CoercivityReport {
        c_lo,
        c_hi,
        samples: used,
    })
}

/// Deterministic Halton point in the product of discs of radius r around x0.
fn sample_ball_point(x0: &[Complex64], r: f64, i: u64, dim_offset: usize) -> Vec<Complex64> {
    const PRIMES: [u64; 8] = [2, 3, 5, 7, 11, 13, 17, 19];
    x0.iter()
        .enumerate()
        .map(|(k, &c)| {
            let u = halton(i, PRIMES[(dim_offset + 2 * k) % 8]);
            let v = halton(i, PRIMES[(dim_offset + 2 * k + 1) % 8]);
            c + Complex64::from_polar(r * u.sqrt(), 2.0 * std::f64::consts::PI * v)
        })
        .collect()
}

/// Holomorphic quadratic FBI phase
/// `phi(z,x) = x'Px/2 + x'Qz + z'Rz/2` with symmetric P, R, invertible Q
/// and Im P positive definite.
#[derive(Clone, Debug)]
pub struct QuadraticModel {
    n: usize,
    phi_xx: DMatrix<Complex64>,
    phi_xz: DMatrix<Complex64>,
    phi_zz: DMatrix<Complex64>,
}

impl QuadraticModel {
    pub fn new(
        phi_xx: DMatrix<Complex64>,
        phi_xz: DMatrix<Complex64>,
        phi_zz: DMatrix<Complex64>,
    ) -> Result<QuadraticModel> {
        let n = phi_xx.nrows();
        if phi_xx.ncols() != n
            || phi_xz.nrows() != n
            || phi_xz.ncols() != n
            || phi_zz.nrows() != n
            || phi_zz.ncols() != n
        {
            return Err(Error::ShapeMismatch("FBI phase matrices must be n x n".into()));
        }
        for m in [&phi_xx, &phi_zz] {
            if (m - m.transpose()).norm() > 1e-12 * m.norm().max(1.0) {
                return Err(Error::ShapeMismatch(
                    "second-derivative blocks must be symmetric".into(),
                ));
            }
        }
        let min_eig = phi_xx
            .map(|c| Complex64::new(c.im, 0.0))
            .symmetric_eigenvalues()
            .iter()
            .fold(f64::INFINITY, |a, e| a.min(*e));
        if min_eig <= 0.0 {
            return Err(Error::LeviNotPositive { min_eig });
        }
        if phi_xz.clone().lu().determinant().norm() < 1e-12 {
            return Err(Error::SingularJacobian { cond: f64::INFINITY });
        }
        Ok(QuadraticModel {
            n,
            phi_xx,
            phi_xz,
            phi_zz,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn phase(&self, z: &DVector<Complex64>, x: &DVector<Complex64>) -> Complex64 {
        let half = Complex64::new(0.5, 0.0);
        (x.transpose() * &self.phi_xx * x)[(0, 0)] * half
            + (x.transpose() * &self.phi_xz * z)[(0, 0)]
            + (z.transpose() * &self.phi_zz * z)[(0, 0)] * half
    }

    /// FBI normalization constant
    /// `|det Q| / (2^{n/2} pi^{3n/4} det(Im P)^{1/4})`.
    pub fn c_phi(&self) -> f64 {
        let n = self.n as f64;
        let det_q = self.phi_xz.clone().lu().determinant().norm();
        let det_im_p = self
            .phi_xx
            .map(|c| Complex64::new(c.im, 0.0))
            .lu()
            .determinant()
            .re;
        det_q
            / (2.0f64.powf(n / 2.0)
                * std::f64::consts::PI.powf(3.0 * n / 4.0)
                * det_im_p.powf(0.25))
    }

    /// Complex canonical transformation (x, xi) -> (z, zeta) determined by
    /// xi = -d_x phase, zeta = d_z phase, as a 2n x 2n block matrix.
    pub fn kappa(&self) -> DMatrix<Complex64> {
        let n = self.n;
        let q_inv = self.phi_xz.clone().lu().try_inverse().unwrap();
        let z_x = -&q_inv * &self.phi_xx;
        let z_xi = -q_inv;
        let zeta_x = self.phi_xz.transpose() + &self.phi_zz * &z_x;
        let zeta_xi = &self.phi_zz * &z_xi;
        let mut k = DMatrix::<Complex64>::zeros(2 * n, 2 * n);
        k.view_mut((0, 0), (n, n)).copy_from(&z_x);
        k.view_mut((0, n), (n, n)).copy_from(&z_xi);
        k.view_mut((n, 0), (n, n)).copy_from(&zeta_x);
        k.view_mut((n, n), (n, n)).copy_from(&zeta_xi);
        k
    }
}

/// Solve `Phi(z) = max_{x real} -Im phase(z, x)` in closed form (the
/// maximizer is linear in Re z, Im z) and return the induced quadratic
/// weight together with the normalization constant.
pub fn fbi_phase_to_weight(q: &QuadraticModel) -> Result<(Weight, f64)> {
    let n = q.n;
    let cap = 2;
    let base = vec![Complex64::ZERO; 2 * n];

    // Critical point x*(z) = -(Im P)^{-1} (Im Q u + Re Q v) for z = u + iv.
    let im_p = q.phi_xx.map(|c| c.im);
    let im_p_inv = im_p
        .lu()
        .try_inverse()
        .ok_or(Error::SingularJacobian { cond: f64::INFINITY })?;
    let s = -&im_p_inv * q.phi_xz.map(|c| c.im);
    let t = -&im_p_inv * q.phi_xz.map(|c| c.re);

    let half = Complex64::new(0.5, 0.0);
    let half_over_i = Complex64::new(0.0, -0.5);
    let mut u_jets = Vec::with_capacity(n);
    let mut v_jets = Vec::with_capacity(n);
    let mut z_jets = Vec::with_capacity(n);
    for j in 0..n {
        let zeta = Jet::coordinate(2 * n, cap, base.clone(), j);
        let zeta_bar = Jet::coordinate(2 * n, cap, base.clone(), n + j);
        u_jets.push(zeta.add(&zeta_bar)?.scale(half));
        v_jets.push(zeta.sub(&zeta_bar)?.scale(half_over_i));
        z_jets.push(zeta);
    }
    let mut x_star = Vec::with_capacity(n);
    for i in 0..n {
        let mut acc = Jet::zero(2 * n, cap, base.clone());
        for j in 0..n {
            acc = acc.add(&u_jets[j].scale(Complex64::new(s[(i, j)], 0.0)))?;
            acc = acc.add(&v_jets[j].scale(Complex64::new(t[(i, j)], 0.0)))?;
        }
        x_star.push(acc);
    }

    let mut phase = Jet::zero(2 * n, cap, base.clone());
    for i in 0..n {
        for j in 0..n {
            phase = phase.add(&x_star[i].mul(&x_star[j])?.scale(q.phi_xx[(i, j)] * half))?;
            phase = phase.add(&x_star[i].mul(&z_jets[j])?.scale(q.phi_xz[(i, j)]))?;
            phase = phase.add(&z_jets[i].mul(&z_jets[j])?.scale(q.phi_zz[(i, j)] * half))?;
        }
    }
    // -Im f = (conj f - f) / 2i, with function-level conjugation given by
    // the coefficient conjugate-swap.
    let phi = phase.conj_dual().sub(&phase)?.scale(half_over_i);
    let weight = Weight::new(n, vec![Complex64::ZERO; n], phi)?;
    Ok((weight, q.c_phi()))
}

/// Closed-form projection kernel of a quadratic weight:
/// `(2^n det L / (pi hbar)^n) exp(2 (psi(x, ybar) - Phi(y)) / hbar)`
/// with L the (constant) Levi matrix.
pub fn quadratic_exact_kernel(
    w: &Weight,
    hbar: f64,
    x: &[Complex64],
    y: &[Complex64],
) -> Result<Complex64> {
    let d = quadratic_exact_density(w, hbar, x, y)?;
    Ok(d * Complex64::new((-2.0 * w.phi_at(y) / hbar).exp(), 0.0))
}

/// The same kernel with the gauge factor exp(-2 Phi(y)/hbar) removed.
pub fn quadratic_exact_density(
    w: &Weight,
    hbar: f64,
    x: &[Complex64],
    y: &[Complex64],
) -> Result<Complex64> {
    w.require_quadratic()?;
    if hbar <= 0.0 {
        return Err(Error::InvalidConfig("hbar must be positive".into()));
    }
    let n = w.dim() as f64;
    let det_l = w.levi_matrix().lu().determinant().re;
    let p = polarize(w);
    let y_conj: Vec<Complex64> = y.iter().map(|c| c.conj()).collect();
    let psi = p.psi_at(x, &y_conj);
    let amp = 2.0f64.powf(n) * det_l / (std::f64::consts::PI * hbar).powf(n);
    Ok(Complex64::new(amp, 0.0) * (psi * Complex64::new(2.0 / hbar, 0.0)).exp())
}

/// Toeplitz-to-Weyl heat map for quadratic weights:
/// `b = exp((hbar/4) <L^{-1} d_z, d_zbar>) f`, term by term in hbar.
pub fn heat_toeplitz_to_weyl(w: &Weight, f: &HbarSymbol) -> Result<HbarSymbol> {
    heat_flow(w, f, 1.0)
}

/// Inverse of the Toeplitz-to-Weyl map (same flow, negative time).
pub fn heat_weyl_to_toeplitz(w: &Weight, f: &HbarSymbol) -> Result<HbarSymbol> {
    heat_flow(w, f, -1.0)
}

fn heat_flow(w: &Weight, f: &HbarSymbol, sign: f64) -> Result<HbarSymbol> {
    w.require_quadratic()?;
    let n = w.dim();
    if f.term(0).arity() != 2 * n {
        return Err(Error::ShapeMismatch(
            "symbol must live in the weight's paired variables".into(),
        ));
    }
    let a = w
        .levi_matrix()
        .lu()
        .try_inverse()
        .ok_or(Error::SingularJacobian { cond: f64::INFINITY })?;
    let order = f.order();
    let shape = f.term(0);
    let zero = Jet::zero(shape.arity(), shape.cap(), shape.base().to_vec());
    let mut out = vec![zero; order + 1];
    for (i, term) in f.terms().iter().enumerate() {
        let mut powed = term.clone();
        let mut fact = 1.0;
        for m in 0..=(order - i) {
            if m > 0 {
                fact *= m as f64;
                powed = laplace_like(&powed, &a, n)?;
                if powed.max_abs() == 0.0 {
                    break;
                }
            }
            let c = Complex64::new((sign / 4.0).powi(m as i32) / fact, 0.0);
            out[i + m] = out[i + m].add(&powed.scale(c))?;
        }
    }
    let mut sym = HbarSymbol::new(out)?;
    sym.order_m = f.order_m;
    Ok(sym)
}

/// `<A d_z, d_zbar> g = sum_{k,j} A_{kj} d_{z_j} d_{zbar_k} g`.
fn laplace_like(g: &Jet, a: &DMatrix<Complex64>, n: usize) -> Result<Jet> {
    let mut acc = Jet::zero(g.arity(), g.cap(), g.base().to_vec());
    for k in 0..n {
        for j in 0..n {
            if a[(k, j)].norm() == 0.0 {
                continue;
            }
            acc = acc.add(&g.derive(j).derive(n + k).scale(a[(k, j)]))?;
        }
    }
    Ok(acc)
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PhiEntry {
    pub a: Vec<u32>,
    pub b: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

/// On-disk form of a weight: dimension, base point, cap, and the sparse
/// list of Taylor coefficients indexed by (holomorphic, antiholomorphic)
/// exponent pairs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct WeightData {
    pub n: usize,
    pub base: Vec<[f64; 2]>,
    pub cap: usize,
    pub phi: Vec<PhiEntry>,
}

impl WeightData {
    pub fn from_weight(w: &Weight) -> WeightData {
        let phi = w.phi();
        let table = phi.table().clone();
        let n = w.dim();
        let mut entries = Vec::new();
        for (i, c) in phi.coeffs().iter().enumerate() {
            if c.norm() > 0.0 {
                let m = table.multi(i);
                entries.push(PhiEntry {
                    a: m[..n].to_vec(),
                    b: m[n..].to_vec(),
                    re: c.re,
                    im: c.im,
                });
            }
        }
        WeightData {
            n,
            base: w.x0().iter().map(|c| [c.re, c.im]).collect(),
            cap: phi.cap(),
            phi: entries,
        }
    }

    pub fn to_weight(&self) -> Result<Weight> {
        let x0: Vec<Complex64> = self
            .base
            .iter()
            .map(|[r, i]| Complex64::new(*r, *i))
            .collect();
        if x0.len() != self.n {
            return Err(Error::ShapeMismatch(
                "base point length must equal the dimension".into(),
            ));
        }
        let jet_base = paired(&x0);
        let mut entries = Vec::with_capacity(self.phi.len());
        for e in &self.phi {
            if e.a.len() != self.n || e.b.len() != self.n {
                return Err(Error::ShapeMismatch(format!(
                    "exponent pair a={:?}, b={:?} does not match dimension {}",
                    e.a, e.b, self.n
                )));
            }
            let mut idx = e.a.clone();
            idx.extend_from_slice(&e.b);
            entries.push((idx, Complex64::new(e.re, e.im)));
        }
        let phi = Jet::from_entries(2 * self.n, self.cap, jet_base, &entries)?;
        Weight::new(self.n, x0, phi)
    }
}
