//! Kuranishi change of phase variables and the conjugation flow that carries
//! symbols between the polarized picture a(x, w) and the phase-space picture
//! b(x, theta).
//!
//! Variable layouts used throughout:
//!   polarized space: (x_1..x_n, w_1..w_n), base (x0, conj x0)
//!   triple space:    (x_1..x_n, y_1..y_n, w_1..w_n) or (x, y, theta)
//!   diagonal space:  (x_1..x_n, theta_1..theta_n)

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::series::{jet_invert_map, HbarSymbol, Jet, Reliability};
use crate::weight::Polarization;

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

fn binomial(n: u32, k: u32) -> f64 {
    factorial(n as usize) / (factorial(k as usize) * factorial((n - k) as usize))
}

fn coords(arity: usize, cap: usize, base: &[Complex64], range: std::ops::Range<usize>) -> Vec<Jet> {
    range
        .map(|v| Jet::coordinate(arity, cap, base.to_vec(), v))
        .collect()
}

/// Determinant of a small matrix of jets by the Leibniz permutation sum.
pub fn jet_det(m: &[Vec<Jet>]) -> Result<Jet> {
    let k = m.len();
    let shape = &m[0][0];
    let mut acc = Jet::zero(shape.arity(), shape.cap(), shape.base().to_vec());
    let mut perm: Vec<usize> = (0..k).collect();
    loop {
        let mut sign = 1.0;
        {
            let mut seen = vec![false; k];
            for start in 0..k {
                if seen[start] {
                    continue;
                }
                let mut len = 0;
                let mut j = start;
                while !seen[j] {
                    seen[j] = true;
                    j = perm[j];
                    len += 1;
                }
                if len % 2 == 0 {
                    sign = -sign;
                }
            }
        }
        let mut prod = Jet::constant(
            shape.arity(),
            shape.cap(),
            shape.base().to_vec(),
            Complex64::new(sign, 0.0),
        );
        for (row, &col) in perm.iter().enumerate() {
            prod = prod.mul(&m[row][col])?;
        }
        acc = acc.add(&prod)?;
        // next permutation in lexicographic order
        let mut i = k.wrapping_sub(2);
        while i != usize::MAX && perm[i] >= perm[i + 1] {
            i = i.wrapping_sub(1);
        }
        if i == usize::MAX {
            break;
        }
        let mut j = k - 1;
        while perm[j] <= perm[i] {
            j -= 1;
        }
        perm.swap(i, j);
        perm[i + 1..].reverse();
    }
    Ok(acc)
}

/// Precomputed phase geometry of a polarization: the Kuranishi phase vector
/// theta(x, y, w), its inverse w(x, y, theta), and the reduced Jacobian
/// amplitude used by the symbol transport maps.
#[derive(Clone, Debug)]
pub struct KuranishiData {
    n: usize,
    cap: usize,
    psi: Jet,
    x0: Vec<Complex64>,
    w0: Vec<Complex64>,
    theta0: Vec<Complex64>,
    theta: Vec<Jet>,
    theta_diag: Vec<Jet>,
    w_of: Vec<Jet>,
    jac: Jet,
    jtilde: Jet,
}

impl KuranishiData {
    /// Build all phase data at working cap `cap` (raised to the polarization
    /// degree if needed so no phase coefficient is dropped).
    pub fn build(p: &Polarization, cap: usize) -> Result<KuranishiData> {
        let n = p.dim();
        let psi_in = p.psi();
        let work = cap.max(psi_in.degree());
        let psi = if psi_in.cap() >= work {
            psi_in.clone()
        } else {
            psi_in.extend_cap(work)
        };
        let x0: Vec<Complex64> = psi.base()[..n].to_vec();
        let w0: Vec<Complex64> = psi.base()[n..].to_vec();
        let base_xyw: Vec<Complex64> = x0
            .iter()
            .chain(x0.iter())
            .chain(w0.iter())
            .cloned()
            .collect();

        let theta = kuranishi_theta(&psi, n, work, &base_xyw)?;

        // Diagonal restriction theta(x, x, w) = (2/i) d_x psi(x, w), exact.
        let two_over_i = Complex64::new(0.0, -2.0);
        let theta_diag: Vec<Jet> = (0..n).map(|m| psi.derive(m).scale(two_over_i)).collect();
        let theta0: Vec<Complex64> = theta_diag.iter().map(|t| t.coeff(&vec![0; 2 * n])).collect();

        // Invert (x, y, w) -> (x, y, theta) and keep the w components.
        let mut full_map = coords(3 * n, work, &base_xyw, 0..2 * n);
        full_map.extend(theta.iter().cloned());
        let inverse = jet_invert_map(&full_map)?;
        let w_of: Vec<Jet> = inverse[2 * n..].to_vec();
        let base_xyt: Vec<Complex64> = x0
            .iter()
            .chain(x0.iter())
            .chain(theta0.iter())
            .cloned()
            .collect();

        // J(x, w) = det((2/i) d_w d_x psi).
        let jac_matrix: Vec<Vec<Jet>> = (0..n)
            .map(|m| {
                (0..n)
                    .map(|k| psi.derive(m).derive(n + k).scale(two_over_i))
                    .collect()
            })
            .collect();
        let jac = jet_det(&jac_matrix)?;

        // Jtilde(x, y, theta) = J(x, w(x,y,theta)) / det(d_w theta) at the
        // same point; identically 1 on the diagonal y = x.
        let mut jac_args = coords(3 * n, work, &base_xyt, 0..n);
        jac_args.extend(w_of.iter().cloned());
        let jac_lift = jac.compose(&jac_args)?;
        let dtheta_dw: Vec<Vec<Jet>> = (0..n)
            .map(|m| (0..n).map(|k| theta[m].derive(2 * n + k)).collect())
            .collect();
        let det_dtheta = jet_det(&dtheta_dw)?;
        let mut det_args = coords(3 * n, work, &base_xyt, 0..2 * n);
        det_args.extend(w_of.iter().cloned());
        let det_lift = det_dtheta.compose(&det_args)?;
        let jtilde = jac_lift.mul(&det_lift.recip()?)?;

        Ok(KuranishiData {
            n,
            cap: work,
            psi,
            x0,
            w0,
            theta0,
            theta,
            theta_diag,
            w_of,
            jac,
            jtilde,
        })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn cap(&self) -> usize {
        self.cap
    }

    pub fn psi(&self) -> &Jet {
        &self.psi
    }

    /// theta components as jets in (x, y, w).
    pub fn theta(&self) -> &[Jet] {
        &self.theta
    }

    /// theta(x, x, w) as jets in (x, w).
    pub fn theta_diag(&self) -> &[Jet] {
        &self.theta_diag
    }

    /// Base value theta(x0, x0, w0).
    pub fn theta0(&self) -> &[Complex64] {
        &self.theta0
    }

    /// w components of the inverse map, as jets in (x, y, theta).
    pub fn w_of(&self) -> &[Jet] {
        &self.w_of
    }

    /// det((2/i) d_w d_x psi) as a jet in (x, w).
    pub fn jacobian(&self) -> &Jet {
        &self.jac
    }

    /// Reduced Jacobian amplitude in (x, y, theta).
    pub fn jtilde(&self) -> &Jet {
        &self.jtilde
    }

    pub fn base_polarized(&self) -> Vec<Complex64> {
        self.x0.iter().chain(self.w0.iter()).cloned().collect()
    }

    pub fn base_triple_theta(&self) -> Vec<Complex64> {
        self.x0
            .iter()
            .chain(self.x0.iter())
            .chain(self.theta0.iter())
            .cloned()
            .collect()
    }

    pub fn base_diag(&self) -> Vec<Complex64> {
        self.x0.iter().chain(self.theta0.iter()).cloned().collect()
    }
}

/// theta_m(x, y, w) = int_0^1 (2/i) d_{x_m} psi((1-t) y + t x, w) dt,
/// computed exactly: each segment monomial integrates to a Beta value
/// B(|g|+1, |a|-|g|+1) = |g|! (|a|-|g|)! / (|a|+1)!.
fn kuranishi_theta(psi: &Jet, n: usize, cap: usize, base_xyw: &[Complex64]) -> Result<Vec<Jet>> {
    let two_over_i = Complex64::new(0.0, -2.0);
    let table = psi.table().clone();
    let mut theta = vec![Jet::zero(3 * n, cap, base_xyw.to_vec()); n];
    let mut idx3 = vec![0u32; 3 * n];
    for (i, c) in psi.coeffs().iter().enumerate() {
        if c.norm() == 0.0 {
            continue;
        }
        let multi = table.multi(i).to_vec();
        let (a, b) = multi.split_at(n);
        for m in 0..n {
            if a[m] == 0 {
                continue;
            }
            let mut ap = a.to_vec();
            ap[m] -= 1;
            let tot: u32 = ap.iter().sum();
            let factor = c * a[m] as f64 * two_over_i;
            // Odometer over all gamma <= ap (componentwise).
            let mut gamma = vec![0u32; n];
            loop {
                let g: u32 = gamma.iter().sum();
                let mut weight =
                    factorial(g as usize) * factorial((tot - g) as usize) / factorial(tot as usize + 1);
                for v in 0..n {
                    weight *= binomial(ap[v], gamma[v]);
                }
                idx3.iter_mut().for_each(|e| *e = 0);
                for v in 0..n {
                    idx3[v] = gamma[v];
                    idx3[n + v] = ap[v] - gamma[v];
                    idx3[2 * n + v] = b[v];
                }
                *theta[m].coeff_mut(&idx3) += factor * weight;
                // advance gamma
                let mut v = 0;
                loop {
                    if v == n {
                        break;
                    }
                    if gamma[v] < ap[v] {
                        gamma[v] += 1;
                        break;
                    }
                    gamma[v] = 0;
                    v += 1;
                }
                if v == n {
                    break;
                }
            }
        }
    }
    Ok(theta)
}

/// Conjugation flow `U_t = exp(i t hbar d_theta . (d_x - d_y))` acting on
/// hbar-symbols in the triple space (x, y, theta). Each application of the
/// generator trades one hbar order for two jet degrees, so truncated inputs
/// are refused when their reliability budget cannot cover the flow.
pub fn u_apply(sym: &HbarSymbol, t: f64, n: usize) -> Result<HbarSymbol> {
    let order = sym.order();
    let shape = sym.term(0);
    if shape.arity() != 3 * n {
        return Err(Error::ShapeMismatch(format!(
            "flow expects symbols in {} variables, got {}",
            3 * n,
            shape.arity()
        )));
    }
    for (i, term) in sym.terms().iter().enumerate() {
        if let Reliability::UpTo(d) = term.reliability() {
            let needed = 2 * (order - i);
            if d < needed as i64 {
                return Err(Error::InsufficientCap {
                    needed,
                    available: d.max(0) as usize,
                });
            }
        }
    }
    let zero = Jet::zero(shape.arity(), shape.cap(), shape.base().to_vec());
    let mut out = vec![zero; order + 1];
    let it = Complex64::new(0.0, t);
    for (i, term) in sym.terms().iter().enumerate() {
        let mut powed = term.clone();
        let mut scalar = Complex64::ONE;
        let mut fact = 1.0;
        for p in 0..=(order - i) {
            if p > 0 {
                fact *= p as f64;
                scalar *= it;
                powed = generator_apply(&powed, n)?;
                if powed.max_abs() == 0.0 {
                    break;
                }
            }
            out[i + p] = out[i + p].add(&powed.scale(scalar / fact))?;
        }
    }
    let mut result = HbarSymbol::new(out)?;
    result.order_m = sym.order_m;
    Ok(result)
}

/// Half-time flow used by the symbol transport maps.
pub fn u_half_apply(sym: &HbarSymbol, n: usize) -> Result<HbarSymbol> {
    u_apply(sym, 0.5, n)
}

/// One application of the generator `d_theta . (d_x - d_y)`.
fn generator_apply(g: &Jet, n: usize) -> Result<Jet> {
    let mut acc = Jet::zero(g.arity(), g.cap(), g.base().to_vec());
    for k in 0..n {
        let dtheta = g.derive(2 * n + k);
        acc = acc.add(&dtheta.derive(k).sub(&dtheta.derive(n + k))?)?;
    }
    Ok(acc)
}

/// Affine canonical shear on phase-space points
/// (x, y, theta; x*, y*, theta*) in C^{6n}:
/// x += t theta*, y -= t theta*, theta += t (x* - y*), duals fixed.
pub fn kappa_t_apply(n: usize, t: f64, pt: &[Complex64]) -> Result<Vec<Complex64>> {
    if pt.len() != 6 * n {
        return Err(Error::ShapeMismatch(format!(
            "phase point needs {} components, got {}",
            6 * n,
            pt.len()
        )));
    }
    let mut out = pt.to_vec();
    let tc = Complex64::new(t, 0.0);
    for k in 0..n {
        let x_star = pt[3 * n + k];
        let y_star = pt[4 * n + k];
        let theta_star = pt[5 * n + k];
        out[k] += tc * theta_star;
        out[n + k] -= tc * theta_star;
        out[2 * n + k] += tc * (x_star - y_star);
    }
    Ok(out)
}

/// Transport a polarized symbol a(x, w) to the phase-space picture:
/// restrict to the diagonal after flowing the Jacobian-weighted lift
/// a(x, w(x,y,theta)) Jtilde(x,y,theta) by the half-time conjugation flow.
pub fn symbol_forward(data: &KuranishiData, a: &HbarSymbol) -> Result<HbarSymbol> {
    let n = data.n;
    let shape = a.term(0);
    if shape.arity() != 2 * n {
        return Err(Error::ShapeMismatch(format!(
            "polarized symbol needs {} variables, got {}",
            2 * n,
            shape.arity()
        )));
    }
    let base_xyt = data.base_triple_theta();
    let cap = data.cap;
    let mut lift_args = coords(3 * n, cap, &base_xyt, 0..n);
    lift_args.extend(data.w_of.iter().cloned());
    let lifted = a.try_map_terms(|term| {
        let t = if term.cap() < cap { term.extend_cap(cap) } else { term.clone() };
        t.compose(&lift_args)?.mul(&data.jtilde)
    })?;
    let flowed = u_half_apply(&lifted, n)?;

    // Diagonal restriction y = x into the (x, theta) space.
    let base_diag = data.base_diag();
    let x_diag = coords(2 * n, cap, &base_diag, 0..n);
    let theta_diag_coords = coords(2 * n, cap, &base_diag, n..2 * n);
    let mut gamma_args = x_diag.clone();
    gamma_args.extend(x_diag);
    gamma_args.extend(theta_diag_coords);
    flowed.try_map_terms(|term| term.compose(&gamma_args))
}

/// Invert the forward transport order by order. The phase-space symbol must
/// be elliptic (non-vanishing leading part at the base point).
pub fn symbol_invert(data: &KuranishiData, b: &HbarSymbol) -> Result<HbarSymbol> {
    let n = data.n;
    let shape = b.term(0);
    if shape.arity() != 2 * n {
        return Err(Error::ShapeMismatch(format!(
            "phase-space symbol needs {} variables, got {}",
            2 * n,
            shape.arity()
        )));
    }
    let lead = b.term(0).coeff(&vec![0; 2 * n]).norm();
    if lead < 1e-12 * b.term(0).max_abs().max(1.0) {
        return Err(Error::VanishingLeadingSymbol { magnitude: lead });
    }
    let cap = data.cap;
    let base_pol = data.base_polarized();
    let mut v_args = coords(2 * n, cap, &base_pol, 0..n);
    v_args.extend(data.theta_diag.iter().cloned());

    let order = b.order();
    let to_cap = |term: &Jet| {
        if term.cap() < cap {
            term.extend_cap(cap)
        } else {
            term.clone()
        }
    };
    let mut a_terms = vec![to_cap(b.term(0)).compose(&v_args)?];
    for j in 1..=order {
        let partial = HbarSymbol::new(a_terms.clone())?.with_order(j);
        let fwd = symbol_forward(data, &partial)?;
        let defect = to_cap(b.term(j)).sub(&to_cap(fwd.term(j)))?;
        a_terms.push(defect.compose(&v_args)?);
    }
    let mut out = HbarSymbol::new(a_terms)?;
    out.order_m = b.order_m;
    Ok(out)
}
