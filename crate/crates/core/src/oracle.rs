//! Independent ground truth for the asymptotic kernels: weighted Gram
//! matrices of monomials give the exact orthogonal projection onto their
//! span, with no semiclassical input at all. The comparison reports measure
//! how fast the symbolic kernel converges to this exact projection.

use crate::bergman::{kernel_density_with, truncate_a_c, BergmanSymbol, Grid, TruncationRule};
use crate::error::{Error, Result};
use crate::util::{fnv1a, linear_fit, LinearFit};
use crate::weight::{Weight, WeightData};
use nalgebra::{Cholesky, DMatrix, DVector, Dyn};
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

/// Kernel and gauge conventions used by every report, spelled out once so
/// downstream consumers can reconcile normalizations.
pub const KERNEL_CONVENTION: &str = "k(x,y) = 2^n/(pi*hbar)^n exp(2(psi(x,conj y)-Phi(y))/hbar) \
     a_C(x,conj y) det(d_w d_x psi); gauge = exp(-(Phi(x)+Phi(y))/hbar); \
     report E is gauge-weighted and rescaled by (pi*hbar)^n/2^n";

#[derive(Clone, Debug, PartialEq)]
pub enum Domain {
    /// Disc of the given radius about the weight's base point.
    Disc { radius: f64 },
    /// Degree-k sections over the round sphere in its standard chart.
    Sphere { k: u32 },
}

/// Polar product quadrature: Gauss-Legendre radially, uniform (trapezoid)
/// in angle. The angular rule is exact on trigonometric polynomials below
/// the node count, which is what monomial Gram entries need.
#[derive(Clone, Copy, Debug)]
pub struct QuadSpec {
    pub radial: usize,
    pub angular: usize,
}

impl Default for QuadSpec {
    fn default() -> Self {
        QuadSpec {
            radial: 120,
            angular: 128,
        }
    }
}

/// Exact projection onto the span of monomials, represented through the
/// Gram matrix of a rescaled monomial basis. The rescaling keeps the
/// matrix near the identity so high degrees stay well conditioned.
pub struct GramOracle {
    basis: Vec<u32>,
    scale: Vec<f64>,
    g: DMatrix<Complex64>,
    chol: Cholesky<Complex64, Dyn>,
    domain: Domain,
    hbar: f64,
    cond: f64,
    nodes: Vec<Complex64>,
    weights: Vec<f64>,
}

const COND_LIMIT: f64 = 1e12;

fn hermitian_cond(g: &DMatrix<Complex64>) -> f64 {
    let eigs = g.clone().symmetric_eigenvalues();
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for e in eigs.iter() {
        lo = lo.min(*e);
        hi = hi.max(*e);
    }
    if lo <= 0.0 {
        f64::INFINITY
    } else {
        hi / lo
    }
}

fn finish_gram(
    mut g: DMatrix<Complex64>,
    basis: Vec<u32>,
    scale: Vec<f64>,
    domain: Domain,
    hbar: f64,
    nodes: Vec<Complex64>,
    weights: Vec<f64>,
) -> Result<GramOracle> {
    let gt = g.adjoint();
    g = (g + gt).scale(0.5);
    let cond = hermitian_cond(&g);
    if !cond.is_finite() || cond > COND_LIMIT {
        // Recommend the largest leading block that is still usable.
        let mut m = basis.len();
        while m > 1 {
            m -= 1;
            let sub = g.view((0, 0), (m, m)).into_owned();
            let c = hermitian_cond(&sub);
            if c.is_finite() && c <= COND_LIMIT {
                break;
            }
        }
        return Err(Error::IllConditioned {
            cond,
            suggested_basis: m,
        });
    }
    let chol = Cholesky::new(g.clone())
        .ok_or_else(|| Error::Factorization("gram matrix is not positive definite".into()))?;
    Ok(GramOracle {
        basis,
        scale,
        g,
        chol,
        domain,
        hbar,
        cond,
        nodes,
        weights,
    })
}

/// Gram matrix of z^0..z^N on a disc about the base point, under the
/// weighted area measure e^{-2 Phi/hbar} dA.
pub fn gram_matrix(
    w: &Weight,
    hbar: f64,
    n_basis: usize,
    radius: f64,
    quad: QuadSpec,
) -> Result<GramOracle> {
    if w.dim() != 1 {
        return Err(Error::InvalidConfig(
            "gram oracles are implemented for one complex variable".into(),
        ));
    }
    if hbar <= 0.0 || radius <= 0.0 {
        return Err(Error::InvalidConfig(
            "gram oracle needs positive hbar and radius".into(),
        ));
    }
    let dim = n_basis + 1;
    let basis: Vec<u32> = (0..=n_basis as u32).collect();
    // Gaussian normalization of each monomial keeps the scaled Gram near
    // the identity; m is the smallest Levi eigenvalue at the base point.
    let m = w.levi_m();
    let t = hbar / (2.0 * m);
    let mut scale = Vec::with_capacity(dim);
    let mut fact = 1.0f64;
    for j in 0..dim {
        if j > 0 {
            fact *= j as f64;
        }
        scale.push((PI * fact * t.powi(j as i32 + 1)).sqrt());
    }

    let (rs, rw) = crate::util::gauss_legendre_on(quad.radial, 0.0, radius);
    let na = quad.angular.max(4);
    let x0 = w.x0()[0];
    let mut g = DMatrix::<Complex64>::zeros(dim, dim);
    let mut nodes = Vec::with_capacity(quad.radial * na);
    let mut weights = Vec::with_capacity(quad.radial * na);
    let mut pow = vec![Complex64::ZERO; dim];
    for (r, wr) in rs.iter().zip(rw.iter()) {
        for q in 0..na {
            let th = 2.0 * PI * q as f64 / na as f64;
            let z = Complex64::from_polar(*r, th);
            let wt = wr * r * 2.0 * PI / na as f64;
            let dens = (-2.0 * w.phi_at(&[x0 + z]) / hbar).exp() * wt;
            nodes.push(x0 + z);
            weights.push(wt);
            let mut p = Complex64::ONE;
            for (j, slot) in pow.iter_mut().enumerate() {
                *slot = p / scale[j];
                p *= z;
            }
            for j in 0..dim {
                for k in 0..dim {
                    g[(j, k)] += pow[j] * pow[k].conj() * dens;
                }
            }
        }
    }
    finish_gram(
        g,
        basis,
        scale,
        Domain::Disc { radius },
        hbar,
        nodes,
        weights,
    )
}

/// Exact diagonal Gram for degree-k polynomial sections over the sphere,
/// from integer-factorial Beta integrals. The chart volume normalization
/// is dA/(1+|z|^2)^2, pinned by <1,1> = pi/2 at k = 1.
pub fn sphere_gram(k: u32) -> Result<GramOracle> {
    if k < 1 {
        return Err(Error::InvalidConfig("sphere sections need k >= 1".into()));
    }
    let dim = (k + 1) as usize;
    let basis: Vec<u32> = (0..=k).collect();
    let mut diag = Vec::with_capacity(dim);
    for i in 0..=k {
        // pi * B(i+1, k+1-i) = pi * i! (k-i)! / (k+1)!
        let mut v = PI;
        for p in 1..=i {
            v *= p as f64;
        }
        for p in 1..=(k - i) {
            v *= p as f64;
        }
        for p in 1..=(k + 1) {
            v /= p as f64;
        }
        diag.push(v);
    }
    let scale: Vec<f64> = diag.iter().map(|v| v.sqrt()).collect();
    let g = DMatrix::<Complex64>::identity(dim, dim);
    finish_gram(g, basis, scale, Domain::Sphere { k }, 1.0 / k as f64, vec![], vec![])
}

impl GramOracle {
    pub fn basis_len(&self) -> usize {
        self.basis.len()
    }

    pub fn gram(&self) -> &DMatrix<Complex64> {
        &self.g
    }

    pub fn cond(&self) -> f64 {
        self.cond
    }

    pub fn domain(&self) -> &Domain {
        &self.domain
    }

    pub fn hbar(&self) -> f64 {
        self.hbar
    }

    pub fn quadrature(&self) -> (&[Complex64], &[f64]) {
        (&self.nodes, &self.weights)
    }

    /// Raw Gram entry in the plain monomial basis z^j, z^k.
    pub fn entry(&self, j: usize, k: usize) -> Complex64 {
        self.g[(j, k)] * Complex64::new(self.scale[j] * self.scale[k], 0.0)
    }

    fn feature(&self, z: Complex64) -> DVector<Complex64> {
        let mut v = DVector::zeros(self.basis.len());
        let mut p = Complex64::ONE;
        for j in 0..self.basis.len() {
            v[j] = p / self.scale[j];
            p *= z;
        }
        v
    }

    /// Reproducing kernel of the monomial span, K(x, conj y), evaluated
    /// through the Hermitian factorization of the Gram matrix.
    pub fn exact_kernel(&self, x: Complex64, y: Complex64) -> Complex64 {
        let vx = self.feature(x);
        let u = self.chol.solve(&self.feature(y));
        let mut k = Complex64::ZERO;
        for j in 0..vx.len() {
            k += vx[j] * u[j].conj();
        }
        k
    }

    /// Density K(x, conj y) weighted by exp(-(Phi(x)+Phi(y))/hbar); for a
    /// distance-decay fit this is the right symmetric gauge.
    pub fn gauge_weighted(&self, w: &Weight, x: Complex64, y: Complex64) -> f64 {
        let k = self.exact_kernel(x, y);
        k.norm() * ((-w.phi_at(&[x]) - w.phi_at(&[y])) / self.hbar).exp()
    }

    /// Projection matrix induced on this oracle's own quadrature samples,
    /// symmetrized by the sample weights. Idempotent up to quadrature error.
    pub fn sample_projection(&self, w: &Weight) -> DMatrix<Complex64> {
        let n = self.nodes.len();
        let q: Vec<f64> = self
            .nodes
            .iter()
            .zip(&self.weights)
            .map(|(z, wt)| wt * (-2.0 * w.phi_at(&[*z]) / self.hbar).exp())
            .collect();
        let mut p = DMatrix::zeros(n, n);
        for a in 0..n {
            for b in 0..n {
                let k = self.exact_kernel(self.nodes[a], self.nodes[b]);
                p[(a, b)] = k * Complex64::new((q[a] * q[b]).sqrt(), 0.0);
            }
        }
        p
    }

    /// Worst-case reproducing error of z^alpha over sample evaluation
    /// points inside the given radius.
    pub fn reproducing_error(&self, w: &Weight, alpha: u32, probe_radius: f64) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..8 {
            let th = 2.0 * PI * i as f64 / 8.0;
            let x = Complex64::from_polar(probe_radius, th);
            let mut acc = Complex64::ZERO;
            for (z, wt) in self.nodes.iter().zip(&self.weights) {
                let dens = wt * (-2.0 * w.phi_at(&[*z]) / self.hbar).exp();
                acc += self.exact_kernel(x, *z) * z.powu(alpha) * dens;
            }
            worst = worst.max((acc - x.powu(alpha)).norm());
        }
        worst
    }

    /// Exact projection matrix on an external grid, for operator-norm
    /// comparison against the asymptotic projection.
    pub fn projection_on_grid(&self, w: &Weight, grid: &Grid) -> DMatrix<Complex64> {
        let n = grid.len();
        let dim = self.basis.len();
        let mut feats = DMatrix::zeros(dim, n);
        for a in 0..n {
            let v = self.feature(grid.points[a]);
            for j in 0..dim {
                feats[(j, a)] = v[j];
            }
        }
        // K(x_a, conj z_b) = sum_j feats[j,a] conj((G^-1 feats[:,b])[j]).
        let solved = self.chol.solve(&feats);
        let mut p = feats.transpose() * solved.conjugate();
        for b in 0..n {
            let q = grid.weights[b] * (-2.0 * w.phi_at(&[grid.points[b]]) / self.hbar).exp();
            p.column_mut(b).scale_mut(q);
        }
        p
    }
}

/// Extracted on-diagonal density for sphere sections; constant in the
/// chart by rotation invariance.
pub fn sphere_density(o: &GramOracle, z: Complex64) -> Result<f64> {
    let k = match o.domain {
        Domain::Sphere { k } => k,
        _ => return Err(Error::InvalidConfig("sphere density needs a sphere oracle".into())),
    };
    let kk = o.exact_kernel(z, z).re;
    Ok(kk * (1.0 + z.norm_sqr()).powi(-(k as i32)))
}

/// Gauge-weighted off-diagonal kernel magnitude for sphere sections.
pub fn sphere_gauge_weighted(o: &GramOracle, x: Complex64, y: Complex64) -> Result<f64> {
    let k = match o.domain {
        Domain::Sphere { k } => k,
        _ => return Err(Error::InvalidConfig("sphere gauge needs a sphere oracle".into())),
    };
    let kk = o.exact_kernel(x, y).norm();
    Ok(kk
        * (1.0 + x.norm_sqr()).powf(-(k as f64) / 2.0)
        * (1.0 + y.norm_sqr()).powf(-(k as f64) / 2.0))
}

/// Linear density growth in k: fits density(k) = c0 k + c1 and reports
/// the worst relative residual.
pub fn sphere_density_fit(ks: &[u32]) -> Result<(f64, f64, f64)> {
    let mut xs = Vec::with_capacity(ks.len());
    let mut ys = Vec::with_capacity(ks.len());
    for &k in ks {
        let o = sphere_gram(k)?;
        xs.push(k as f64);
        ys.push(sphere_density(&o, Complex64::new(0.3, -0.4))?);
    }
    let fit = linear_fit(&xs, &ys)?;
    let mut worst = 0.0f64;
    for (x, y) in xs.iter().zip(&ys) {
        worst = worst.max((fit.slope * x + fit.intercept - y).abs() / y.abs());
    }
    Ok((fit.slope, fit.intercept, worst))
}

/// Domain radius from the tail rule: beyond it the Gaussian minorant of
/// the weight leaves less than 1e-12 relative mass.
pub fn domain_radius(w: &Weight, hbar: f64) -> f64 {
    let m = w.levi_m();
    (hbar * 12.0 * std::f64::consts::LN_10 / m).sqrt()
}

/// Default basis size for the tail-rule domain, capped where monomial
/// Gram matrices stay numerically sane.
pub fn default_basis(w: &Weight, hbar: f64, r_dom: f64) -> usize {
    let m = w.levi_m();
    ((3.0 * r_dom * r_dom * m / hbar).ceil() as usize).min(40)
}

/// Tail-rule oracle with automatic basis sizing: starts from the default
/// rule and falls back to the conditioning recommendation if the refusal
/// fires.
pub fn gram_auto(w: &Weight, hbar: f64, quad: QuadSpec) -> Result<GramOracle> {
    let r_dom = domain_radius(w, hbar);
    let n = default_basis(w, hbar, r_dom);
    match gram_matrix(w, hbar, n, r_dom, quad) {
        Err(Error::IllConditioned { suggested_basis, .. }) if suggested_basis > 1 => {
            gram_matrix(w, hbar, suggested_basis - 1, r_dom, quad)
        }
        other => other,
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct FitSummary {
    pub slope: f64,
    pub intercept: f64,
    pub r2: f64,
    pub flag: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct QuadInfo {
    pub radial: usize,
    pub angular: usize,
    pub r_dom: Vec<f64>,
    pub basis: Vec<usize>,
    pub convention: String,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct PairRecord {
    pub hbar: f64,
    pub x_re: f64,
    pub x_im: f64,
    pub y_re: f64,
    pub y_im: f64,
    pub err: f64,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct Report {
    pub weight_id: String,
    pub hbar_list: Vec<f64>,
    #[serde(rename = "E")]
    pub e: Vec<f64>,
    pub fit: FitSummary,
    #[serde(rename = "C2_hat")]
    pub c2_hat: Option<f64>,
    pub quadrature: QuadInfo,
    pub flags: Vec<String>,
    pub pairs: Vec<PairRecord>,
}

pub fn weight_id(w: &Weight) -> String {
    let data = WeightData::from_weight(w);
    let bytes = serde_json::to_vec(&data).unwrap_or_default();
    format!("w{:016x}", fnv1a(&bytes))
}

const QUADRATURE_FLOOR: f64 = 1e-8;

/// Near-diagonal comparison of the asymptotic kernel against the exact
/// Gram projection over a list of hbar values, with an exponential-rate
/// fit of the error.
pub fn compare_report(s: &BergmanSymbol, hbar_list: &[f64], quad: QuadSpec) -> Result<Report> {
    let w = s.weight();
    if w.dim() != 1 {
        return Err(Error::InvalidConfig(
            "comparison reports are implemented for one complex variable".into(),
        ));
    }
    if hbar_list.is_empty() {
        return Err(Error::InvalidConfig("empty hbar list".into()));
    }
    let x0 = w.x0()[0];
    // Small cloud of evaluation points about the base; all ordered pairs
    // within a short separation count as near-diagonal.
    let mut pts = Vec::new();
    for a in -1..=1 {
        for b in -1..=1 {
            pts.push(x0 + Complex64::new(0.15 * a as f64, 0.15 * b as f64));
        }
    }

    let mut e_list = Vec::with_capacity(hbar_list.len());
    let mut r_doms = Vec::new();
    let mut sizes = Vec::new();
    let mut pairs = Vec::new();
    for &hbar in hbar_list {
        let o = gram_auto(w, hbar, quad)?;
        r_doms.push(domain_radius(w, hbar));
        sizes.push(o.basis_len() - 1);
        let trunc = truncate_a_c(s, hbar, s.c_hat(), TruncationRule::Half)?;
        let rescale = PI * hbar / 2.0;
        let mut e = 0.0f64;
        for &x in &pts {
            for &y in &pts {
                if (x - y).norm() > 0.25 {
                    continue;
                }
                let exact = o.exact_kernel(x, y);
                let approx = kernel_density_with(s, &trunc.a_c, hbar, &[x], &[y]);
                let gauge = ((-w.phi_at(&[x]) - w.phi_at(&[y])) / hbar).exp();
                let err = (exact - approx).norm() * gauge * rescale;
                pairs.push(PairRecord {
                    hbar,
                    x_re: x.re,
                    x_im: x.im,
                    y_re: y.re,
                    y_im: y.im,
                    err,
                });
                e = e.max(err);
            }
        }
        e_list.push(e);
    }

    let mut flags = Vec::new();
    for i in 1..e_list.len() {
        if e_list[i] >= e_list[i - 1] {
            flags.push(format!(
                "non-monotone E between hbar {} and {}",
                hbar_list[i - 1],
                hbar_list[i]
            ));
            break;
        }
    }

    let at_floor = e_list.iter().all(|e| *e < QUADRATURE_FLOOR);
    let (fit, c2_hat) = if at_floor || e_list.len() < 2 {
        (
            FitSummary {
                slope: 0.0,
                intercept: 0.0,
                r2: 0.0,
                flag: "exact".into(),
            },
            None,
        )
    } else {
        let xs: Vec<f64> = hbar_list.iter().map(|h| 1.0 / h).collect();
        let ys: Vec<f64> = e_list.iter().map(|e| -e.max(1e-300).ln()).collect();
        let f = linear_fit(&xs, &ys)?;
        let c2 = if f.slope > 0.0 { Some(1.0 / f.slope) } else { None };
        (
            FitSummary {
                slope: f.slope,
                intercept: f.intercept,
                r2: f.r2,
                flag: "fit".into(),
            },
            c2,
        )
    };

    Ok(Report {
        weight_id: weight_id(w),
        hbar_list: hbar_list.to_vec(),
        e: e_list,
        fit,
        c2_hat,
        quadrature: QuadInfo {
            radial: quad.radial,
            angular: quad.angular,
            r_dom: r_doms,
            basis: sizes,
            convention: KERNEL_CONVENTION.into(),
        },
        flags,
        pairs,
    })
}

/// Fits -hbar log(gauge-weighted |K|) against squared separation; the
/// slope estimates the Gaussian decay rate of the kernel.
pub fn decay_fit(pairs: &[(Complex64, Complex64, f64)], hbar: f64) -> Result<LinearFit> {
    let mut xs = Vec::with_capacity(pairs.len());
    let mut ys = Vec::with_capacity(pairs.len());
    for (x, y, val) in pairs {
        let d2 = (x - y).norm_sqr();
        if d2 < 1e-10 {
            return Err(Error::InvalidConfig(
                "decay fit rejects diagonal pairs".into(),
            ));
        }
        if *val <= 0.0 {
            return Err(Error::DegenerateFit("non-positive kernel magnitude".into()));
        }
        xs.push(d2);
        ys.push(-hbar * val.ln());
    }
    linear_fit(&xs, &ys)
}
