//! The headline pipeline: the Bergman symbol of a weight, its
//! semiclassical truncation, kernel evaluation, the discretized cutoff
//! projection, and peak-state kernel extraction.

use nalgebra::DMatrix;
use num_complex::Complex64;
use once_cell::sync::Lazy;

use crate::error::{Error, Result};
use crate::quantize::{jet_det, symbol_invert, KuranishiData};
use crate::series::{growth_fit, HbarSymbol, Jet};
use crate::util::gauss_legendre_on;
use crate::weight::{polarize, Weight};

const PI: f64 = std::f64::consts::PI;

/// The classical analytic symbol a(x, w; hbar) of a weight's approximate
/// projection, together with the phase data needed to evaluate its kernel.
#[derive(Clone, Debug)]
pub struct BergmanSymbol {
    weight: Weight,
    a: HbarSymbol,
    order: usize,
    cap_used: usize,
    degree_budget: usize,
    /// Growth constant for the default truncation rule; 1 when the tail
    /// vanishes or is too short to fit.
    c_hat: f64,
    /// det(d_w d_x psi) as a jet in (x, w), without the 2/i factors.
    psi_det: Jet,
}

/// Degree budget used when none is requested: enough jet degrees to see
/// the cubic test weights' coefficient tables.
const DEFAULT_DEGREE: usize = 4;

pub fn bergman_symbol(w: &Weight, order: usize) -> Result<BergmanSymbol> {
    bergman_symbol_with_budget(w, order, DEFAULT_DEGREE)
}

/// Compute the symbol at the given hbar order with `degree` reliable jet
/// degrees per coefficient. The working cap is degree + 2*order: each hbar
/// order of the conjugation flow spends two jet degrees.
pub fn bergman_symbol_with_budget(
    w: &Weight,
    order: usize,
    degree: usize,
) -> Result<BergmanSymbol> {
    let n = w.dim();
    let p = polarize(w);
    let cap = degree + 2 * order;
    let data = KuranishiData::build(&p, cap)?;
    let one = HbarSymbol::one(2 * n, data.cap(), data.base_diag(), order);
    let a_raw = symbol_invert(&data, &one)?;

    // Keep only the degrees each term is reliable for, in a common table.
    let a = a_raw.try_map_terms(|t| {
        let keep = t.reliable_degree().clamp(0, degree as i64) as usize;
        Ok(t.truncate_degree(keep).extend_cap(degree))
    })?;

    let psi = data.psi();
    let det_matrix: Vec<Vec<Jet>> = (0..n)
        .map(|m| (0..n).map(|k| psi.derive(m).derive(n + k)).collect())
        .collect();
    let psi_det = jet_det(&det_matrix)?;

    let c_hat = if a.order() >= 4 {
        match growth_fit(&a, 0.25 * w.eval_radius()) {
            Ok(fit) => fit.c_hat.max(1e-6),
            Err(_) => 1.0,
        }
    } else {
        1.0
    };

    Ok(BergmanSymbol {
        weight: w.clone(),
        a,
        order,
        cap_used: data.cap(),
        degree_budget: degree,
        c_hat,
        psi_det,
    })
}

impl BergmanSymbol {
    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn symbol(&self) -> &HbarSymbol {
        &self.a
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn cap_used(&self) -> usize {
        self.cap_used
    }

    pub fn degree_budget(&self) -> usize {
        self.degree_budget
    }

    pub fn c_hat(&self) -> f64 {
        self.c_hat
    }

    /// Worst coefficient-level deviation from a_j(x,w) = conj(a_j(wbar,xbar)).
    pub fn hermitian_defect(&self) -> f64 {
        self.a
            .terms()
            .iter()
            .map(|t| match t.sub(&t.conj_dual()) {
                Ok(d) => d.max_abs(),
                Err(_) => f64::INFINITY,
            })
            .fold(0.0, f64::max)
    }

    /// Worst deviation of the leading term from the constant 1.
    pub fn leading_defect(&self) -> f64 {
        let one = Jet::constant(
            self.a.term(0).arity(),
            self.a.term(0).cap(),
            self.a.term(0).base().to_vec(),
            Complex64::ONE,
        );
        match self.a.term(0).sub(&one) {
            Ok(d) => d.max_abs(),
            Err(_) => f64::INFINITY,
        }
    }
}

/// Which partial-sum length the truncation uses as a function of hbar.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum TruncationRule {
    /// j <= 1 / (2 C hbar), the default.
    Half,
    /// j <= 1 / (e C hbar), the alternative cutoff matched to C^j j^j tails.
    OverE,
}

#[derive(Clone, Debug)]
pub struct TruncatedSymbol {
    /// The partial sum sum_{j <= j_star} a_j hbar^j as a single jet in (x, w).
    pub a_c: Jet,
    /// Number of terms actually summed (j_star + 1 capped at the stored order).
    pub terms_used: usize,
    /// True when the rule asked for at least as many terms as are stored,
    /// so the full expansion was used.
    pub saturated: bool,
}

pub fn truncate_a_c(
    s: &BergmanSymbol,
    hbar: f64,
    c: f64,
    rule: TruncationRule,
) -> Result<TruncatedSymbol> {
    if hbar <= 0.0 || c <= 0.0 {
        return Err(Error::InvalidConfig(
            "truncation needs positive hbar and C".into(),
        ));
    }
    let denom = match rule {
        TruncationRule::Half => 2.0 * c * hbar,
        TruncationRule::OverE => std::f64::consts::E * c * hbar,
    };
    let j_star = (1.0 / denom).floor().max(0.0) as usize;
    let saturated = j_star >= s.order;
    let last = j_star.min(s.order);
    let shape = s.a.term(0);
    let mut a_c = Jet::zero(shape.arity(), shape.cap(), shape.base().to_vec());
    let mut hp = 1.0;
    for j in 0..=last {
        a_c = a_c.add(&s.a.term(j).scale(Complex64::new(hp, 0.0)))?;
        hp *= hbar;
    }
    Ok(TruncatedSymbol {
        a_c,
        terms_used: last + 1,
        saturated,
    })
}

fn pairing(x: &[Complex64], y: &[Complex64]) -> Vec<Complex64> {
    x.iter().cloned().chain(y.iter().map(|c| c.conj())).collect()
}

fn radius_check(w: &Weight, z: &[Complex64]) -> Result<()> {
    let d: f64 = z
        .iter()
        .zip(w.x0())
        .map(|(a, b)| (a - b).norm_sqr())
        .sum::<f64>()
        .sqrt();
    if d > w.eval_radius() {
        return Err(Error::OutOfRadius {
            distance: d,
            radius: w.eval_radius(),
        });
    }
    Ok(())
}

/// k_hbar(x, y) = (2^n/(pi hbar)^n) e^{2(psi(x,ybar) - Phi(y))/hbar}
///                a_C(x, ybar) det(d_w d_x psi)(x, ybar).
pub fn kernel_eval(
    s: &BergmanSymbol,
    hbar: f64,
    x: &[Complex64],
    y: &[Complex64],
) -> Result<Complex64> {
    let d = kernel_density(s, hbar, x, y)?;
    Ok(d * Complex64::new((-2.0 * s.weight.phi_at(y) / hbar).exp(), 0.0))
}

/// The kernel without the gauge factor e^{-2 Phi(y)/hbar}; this is the
/// quantity the Gram oracles reproduce directly.
pub fn kernel_density(
    s: &BergmanSymbol,
    hbar: f64,
    x: &[Complex64],
    y: &[Complex64],
) -> Result<Complex64> {
    radius_check(&s.weight, x)?;
    radius_check(&s.weight, y)?;
    let trunc = truncate_a_c(s, hbar, s.c_hat, TruncationRule::Half)?;
    Ok(kernel_density_with(s, &trunc.a_c, hbar, x, y))
}

/// Same, with a pre-truncated symbol jet (used by the matrix assembly to
/// avoid re-truncating per pair).
pub fn kernel_density_with(
    s: &BergmanSymbol,
    a_c: &Jet,
    hbar: f64,
    x: &[Complex64],
    y: &[Complex64],
) -> Complex64 {
    let n = s.weight.dim() as f64;
    let pt = pairing(x, y);
    let psi = polarize(&s.weight).psi().eval(&pt);
    let amp = 2.0f64.powf(n) / (PI * hbar).powf(n);
    let det = s.psi_det.eval(&pt);
    Complex64::new(amp, 0.0) * (psi * Complex64::new(2.0 / hbar, 0.0)).exp() * a_c.eval(&pt) * det
}

/// Tensor Gauss-Legendre grid on the square [-R, R]^2 about a center, in
/// grid-major order (outer index = real axis node).
#[derive(Clone, Debug)]
pub struct Grid {
    pub center: Complex64,
    pub half_width: f64,
    pub nodes_per_axis: usize,
    pub points: Vec<Complex64>,
    pub weights: Vec<f64>,
}

impl Grid {
    /// Node count per axis resolves the sqrt(hbar) length scale:
    /// max(40, ceil(8 R / sqrt(hbar))).
    pub fn new(center: Complex64, half_width: f64, hbar: f64) -> Result<Grid> {
        if half_width <= 0.0 || hbar <= 0.0 {
            return Err(Error::InvalidConfig(
                "grid needs positive half-width and hbar".into(),
            ));
        }
        let nodes = ((8.0 * half_width / hbar.sqrt()).ceil() as usize).max(40);
        Ok(Grid::with_nodes(center, half_width, nodes))
    }

    pub fn with_nodes(center: Complex64, half_width: f64, nodes: usize) -> Grid {
        let (xs, ws) = gauss_legendre_on(nodes, -half_width, half_width);
        let mut points = Vec::with_capacity(nodes * nodes);
        let mut weights = Vec::with_capacity(nodes * nodes);
        for (u, wu) in xs.iter().zip(&ws) {
            for (v, wv) in xs.iter().zip(&ws) {
                points.push(center + Complex64::new(*u, *v));
                weights.push(wu * wv);
            }
        }
        Grid {
            center,
            half_width,
            nodes_per_axis: nodes,
            points,
            weights,
        }
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    /// Indices whose points stay at least `margin` away from the square's
    /// boundary (in each axis).
    pub fn interior(&self, margin: f64) -> Vec<usize> {
        let lim = self.half_width - margin;
        self.points
            .iter()
            .enumerate()
            .filter(|(_, z)| {
                let d = *z - self.center;
                d.re.abs() <= lim && d.im.abs() <= lim
            })
            .map(|(i, _)| i)
            .collect()
    }
}

/// Cutoff factor chi(x - y) in the projection integral.
#[derive(Clone, Copy, Debug)]
pub enum ChiSpec {
    /// Smooth even bump exp(1 - 1/(1 - |t|^2/rho^2)) supported in |t| < rho.
    Bump { radius: f64 },
    /// No cutoff (useful against oracles on bounded grids).
    One,
}

impl ChiSpec {
    pub fn eval(&self, t: Complex64) -> f64 {
        match self {
            ChiSpec::One => 1.0,
            ChiSpec::Bump { radius } => {
                let r2 = t.norm_sqr() / (radius * radius);
                if r2 >= 1.0 {
                    0.0
                } else {
                    (1.0 - 1.0 / (1.0 - r2)).exp()
                }
            }
        }
    }

    pub fn radius(&self) -> Option<f64> {
        match self {
            ChiSpec::Bump { radius } => Some(*radius),
            ChiSpec::One => None,
        }
    }
}

/// Discretized cutoff projection: P_ab = k(z_a, z_b) chi(z_a - z_b) q_b
/// with q_b the quadrature weight including the e^{-2 Phi/hbar} gauge.
#[derive(Clone, Debug)]
pub struct ProjectionMatrix {
    pub grid: Grid,
    pub p: DMatrix<Complex64>,
    pub hbar: f64,
    pub chi: ChiSpec,
    /// Gauge-weighted quadrature weights q_b.
    pub q: Vec<f64>,
}

pub fn projection_matrix(
    s: &BergmanSymbol,
    grid: &Grid,
    hbar: f64,
    chi: ChiSpec,
) -> Result<ProjectionMatrix> {
    if s.weight.dim() != 1 {
        return Err(Error::InvalidConfig(
            "discretized projections are one-dimensional".into(),
        ));
    }
    if grid.is_empty() {
        return Err(Error::InvalidConfig("empty grid".into()));
    }
    if let Some(rho) = chi.radius() {
        if rho >= grid.half_width {
            return Err(Error::InvalidConfig(format!(
                "chi radius {rho} must be smaller than the grid half-width {}",
                grid.half_width
            )));
        }
    }
    let m = grid.len();
    let trunc = truncate_a_c(s, hbar, s.c_hat, TruncationRule::Half)?;
    let q: Vec<f64> = grid
        .points
        .iter()
        .zip(&grid.weights)
        .map(|(z, w)| w * (-2.0 * s.weight.phi_at(&[*z]) / hbar).exp())
        .collect();
    // Kernel density columns share the y-dependent pieces; evaluate the
    // full density per pair (jets are cheap) but skip outside the cutoff.
    let mut p = DMatrix::<Complex64>::zeros(m, m);
    for a in 0..m {
        let za = grid.points[a];
        for b in 0..m {
            let zb = grid.points[b];
            let cut = chi.eval(za - zb);
            if cut == 0.0 {
                continue;
            }
            let dens = kernel_density_with(s, &trunc.a_c, hbar, &[za], &[zb]);
            let gauge = (-2.0 * s.weight.phi_at(&[zb]) / hbar).exp();
            p[(a, b)] = dens * gauge * cut * grid.weights[b];
        }
    }
    Ok(ProjectionMatrix {
        grid: grid.clone(),
        p,
        hbar,
        chi,
        q,
    })
}

impl ProjectionMatrix {
    /// Apply to samples of a function on the grid.
    pub fn apply(&self, v: &[Complex64]) -> Vec<Complex64> {
        let m = self.grid.len();
        let mut out = vec![Complex64::ZERO; m];
        for a in 0..m {
            let mut acc = Complex64::ZERO;
            for b in 0..m {
                acc += self.p[(a, b)] * v[b];
            }
            out[a] = acc;
        }
        out
    }

    /// The operator in the weighted orthonormal frame sqrt(q)_a delta_a,
    /// restricted to the given grid indices. Self-adjointness on L^2_Phi
    /// is Hermitian symmetry of this matrix.
    pub fn weighted_frame(&self, indices: &[usize]) -> DMatrix<Complex64> {
        DMatrix::from_fn(indices.len(), indices.len(), |i, j| {
            let a = indices[i];
            let b = indices[j];
            self.p[(a, b)] * (self.q[a].max(0.0).sqrt() / self.q[b].max(1e-300).sqrt())
        })
    }

    /// Relative Hermitian defect in the weighted frame over the full grid.
    pub fn hermitian_defect(&self) -> f64 {
        let all: Vec<usize> = (0..self.grid.len()).collect();
        let m = self.weighted_frame(&all);
        let diff = &m - m.adjoint();
        diff.norm() / m.norm().max(1e-300)
    }

    /// Weighted relative L^2 defect ||P f - f|| / ||f|| over interior
    /// points (full-norm denominator), for grid samples of f.
    pub fn reproducing_defect(&self, f: impl Fn(Complex64) -> Complex64, margin: f64) -> f64 {
        let v: Vec<Complex64> = self.grid.points.iter().map(|z| f(*z)).collect();
        let pv = self.apply(&v);
        let interior = self.grid.interior(margin);
        let mut num = 0.0;
        for &a in &interior {
            num += (pv[a] - v[a]).norm_sqr() * self.q[a];
        }
        let mut den = 0.0;
        for a in 0..self.grid.len() {
            den += v[a].norm_sqr() * self.q[a];
        }
        (num / den.max(1e-300)).sqrt()
    }
}

/// Normalization of the unit-integral radial bump f(t) = N exp(1 - 1/(1-|t|^2))
/// on the unit disc, computed once by radial quadrature.
static BUMP_NORM: Lazy<f64> = Lazy::new(|| {
    let (rs, ws) = gauss_legendre_on(200, 0.0, 1.0);
    let integral: f64 = rs
        .iter()
        .zip(&ws)
        .map(|(r, w)| (1.0 - 1.0 / (1.0 - r * r)).exp() * 2.0 * PI * r * w)
        .sum();
    1.0 / integral
});

/// The fixed radial bump of unit integral used by peak states.
pub fn bump_f(t: Complex64) -> f64 {
    let r2 = t.norm_sqr();
    if r2 >= 1.0 {
        0.0
    } else {
        *BUMP_NORM * (1.0 - 1.0 / (1.0 - r2)).exp()
    }
}

/// Peak state concentrated at x0p on the sqrt(hbar) scale:
/// e(x) = hbar^{-n} f((x-x0p)/sqrt(hbar))
///        e^{(2 Phi(x) - Phi(x0p) - 2 dbar Phi(x0p).(xbar - x0p bar))/hbar}.
/// Errors when the bump's quadrature mass on the grid strays from 1.
pub fn peak_state(
    w: &Weight,
    grid: &Grid,
    x0p: Complex64,
    hbar: f64,
) -> Result<Vec<Complex64>> {
    let n = w.dim();
    if n != 1 {
        return Err(Error::InvalidConfig("peak states are one-dimensional".into()));
    }
    let scale = hbar.sqrt();
    let mut mass = 0.0;
    let mut out = Vec::with_capacity(grid.len());
    let phi0 = w.phi_at(&[x0p]);
    let dbar = w.dbar_phi_at(&[x0p])[0];
    for (z, wq) in grid.points.iter().zip(&grid.weights) {
        let f = bump_f((z - x0p) / scale) / hbar;
        mass += f * wq;
        let exponent = (Complex64::new(2.0 * w.phi_at(&[*z]) - phi0, 0.0)
            - dbar * 2.0 * (z.conj() - x0p.conj()))
            / hbar;
        out.push(Complex64::new(f, 0.0) * exponent.exp());
    }
    let tolerance = 5e-2;
    if (mass - 1.0).abs() > tolerance {
        return Err(Error::SupportClipped { mass, tolerance });
    }
    Ok(out)
}

/// Weighted pairing <u, v>_Phi = sum_a u_a conj(v_a) q_a on grid samples.
pub fn weighted_inner(grid: &Grid, w: &Weight, hbar: f64, u: &[Complex64], v: &[Complex64]) -> Complex64 {
    let mut acc = Complex64::ZERO;
    for ((z, wq), (a, b)) in grid.points.iter().zip(&grid.weights).zip(u.iter().zip(v)) {
        let q = wq * (-2.0 * w.phi_at(&[*z]) / hbar).exp();
        acc += a * b.conj() * q;
    }
    acc
}

/// Extract the kernel density at (x0p, y0p) from any grid-level projection:
/// <Pi e_{y0p}, e_{x0p}>_Phi e^{(Phi(x0p) + Phi(y0p))/hbar}.
pub fn kernel_extract(
    apply: impl Fn(&[Complex64]) -> Vec<Complex64>,
    w: &Weight,
    grid: &Grid,
    x0p: Complex64,
    y0p: Complex64,
    hbar: f64,
) -> Result<Complex64> {
    let ex = peak_state(w, grid, x0p, hbar)?;
    let ey = peak_state(w, grid, y0p, hbar)?;
    let pey = apply(&ey);
    let pairing = weighted_inner(grid, w, hbar, &pey, &ex);
    let gauge = ((w.phi_at(&[x0p]) + w.phi_at(&[y0p])) / hbar).exp();
    Ok(pairing * gauge)
}
