//! Truncated multivariate power series ("jets") over complex coefficients.
//!
//! A `Jet` stores the Taylor coefficients of a function about a base point
//! `b` in C^arity, densely over all multi-indices of total degree <= cap:
//! `f(z) = sum_alpha c_alpha (z - b)^alpha`.
//!
//! Besides the cap, every jet tracks up to which total degree its
//! coefficients are trustworthy. A jet built from explicit polynomial data
//! is `Exact`; differentiating a truncated series loses one degree, so the
//! quantization pipeline can refuse operations whose cap budget has run out
//! instead of silently returning garbage top-degree coefficients.

use std::sync::Arc;

use num_complex::Complex64;

use super::index::{self, IndexTable};
use crate::error::{Error, Result};

const BASE_TOL: f64 = 1e-9;

/// Degree up to which a jet's coefficients are trustworthy.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Reliability {
    /// The jet *is* the function (a polynomial of degree <= cap).
    Exact,
    /// Coefficients of total degree <= d are correct; beyond that the
    /// function may have terms the jet cannot represent. Negative values
    /// mean nothing is trustworthy.
    UpTo(i64),
}

impl Reliability {
    pub fn min(self, other: Reliability) -> Reliability {
        match (self, other) {
            (Reliability::Exact, r) | (r, Reliability::Exact) => r,
            (Reliability::UpTo(a), Reliability::UpTo(b)) => Reliability::UpTo(a.min(b)),
        }
    }

    fn after_derive(self) -> Reliability {
        match self {
            Reliability::Exact => Reliability::Exact,
            Reliability::UpTo(d) => Reliability::UpTo(d - 1),
        }
    }

    /// Trustworthy degree given a storage cap.
    pub fn degree(self, cap: usize) -> i64 {
        match self {
            Reliability::Exact => cap as i64,
            Reliability::UpTo(d) => d.min(cap as i64),
        }
    }
}

#[derive(Clone)]
pub struct Jet {
    table: Arc<IndexTable>,
    base: Vec<Complex64>,
    coeffs: Vec<Complex64>,
    reliable: Reliability,
}

impl std::fmt::Debug for Jet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Jet(arity={}, cap={}, [", self.arity(), self.cap())?;
        let mut first = true;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            if !first {
                write!(f, ", ")?;
            }
            first = false;
            write!(f, "{:?}: {:.6}{:+.6}i", self.table.multi(i), c.re, c.im)?;
        }
        write!(f, "])")
    }
}

impl Jet {
    pub fn zero(arity: usize, cap: usize, base: Vec<Complex64>) -> Jet {
        let table = index::table(arity, cap);
        assert_eq!(base.len(), arity);
        let n = table.len();
        Jet {
            table,
            base,
            coeffs: vec![Complex64::ZERO; n],
            reliable: Reliability::Exact,
        }
    }

    pub fn constant(arity: usize, cap: usize, base: Vec<Complex64>, c: Complex64) -> Jet {
        let mut j = Jet::zero(arity, cap, base);
        j.coeffs[0] = c;
        j
    }

    /// The coordinate function `z_var` as a jet about `base` (constant term
    /// `base[var]`, unit linear term).
    pub fn coordinate(arity: usize, cap: usize, base: Vec<Complex64>, var: usize) -> Jet {
        assert!(var < arity);
        let mut j = Jet::constant(arity, cap, base.clone(), base[var]);
        if cap >= 1 {
            let mut e = vec![0u32; arity];
            e[var] = 1;
            let p = j.table.position(&e).unwrap();
            j.coeffs[p] = Complex64::ONE;
        }
        j
    }

    pub fn from_entries(
        arity: usize,
        cap: usize,
        base: Vec<Complex64>,
        entries: &[(Vec<u32>, Complex64)],
    ) -> Result<Jet> {
        let mut j = Jet::zero(arity, cap, base);
        for (idx, c) in entries {
            if idx.len() != arity {
                return Err(Error::ShapeMismatch(format!(
                    "multi-index {:?} has length {} for arity {}",
                    idx,
                    idx.len(),
                    arity
                )));
            }
            let p = j.table.position(idx).ok_or_else(|| {
                Error::ShapeMismatch(format!("multi-index {:?} exceeds cap {}", idx, cap))
            })?;
            j.coeffs[p] += c;
        }
        Ok(j)
    }

    pub fn arity(&self) -> usize {
        self.table.arity()
    }

    pub fn cap(&self) -> usize {
        self.table.cap()
    }

    pub fn base(&self) -> &[Complex64] {
        &self.base
    }

    pub fn table(&self) -> &Arc<IndexTable> {
        &self.table
    }

    pub fn reliability(&self) -> Reliability {
        self.reliable
    }

    pub fn reliable_degree(&self) -> i64 {
        self.reliable.degree(self.cap())
    }

    pub(crate) fn with_reliability(mut self, r: Reliability) -> Jet {
        self.reliable = r;
        self
    }

    pub fn coeffs(&self) -> &[Complex64] {
        &self.coeffs
    }

    pub fn coeff(&self, idx: &[u32]) -> Complex64 {
        self.table
            .position(idx)
            .map(|p| self.coeffs[p])
            .unwrap_or(Complex64::ZERO)
    }

    pub fn coeff_mut(&mut self, idx: &[u32]) -> &mut Complex64 {
        let p = self
            .table
            .position(idx)
            .expect("multi-index outside the jet's table");
        // Hand-edited coefficients make the jet plain polynomial data again.
        self.reliable = Reliability::Exact;
        &mut self.coeffs[p]
    }

    /// Highest total degree carrying a nonzero coefficient.
    pub fn degree(&self) -> usize {
        let mut d = 0;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm() != 0.0 {
                d = d.max(self.table.degree(i));
            }
        }
        d
    }

    pub fn max_abs(&self) -> f64 {
        self.coeffs.iter().map(|c| c.norm()).fold(0.0, f64::max)
    }

    fn same_shape(&self, other: &Jet) -> Result<()> {
        if !Arc::ptr_eq(&self.table, &other.table) {
            return Err(Error::ShapeMismatch(format!(
                "arity/cap ({},{}) vs ({},{})",
                self.arity(),
                self.cap(),
                other.arity(),
                other.cap()
            )));
        }
        for (a, b) in self.base.iter().zip(&other.base) {
            if (a - b).norm() > BASE_TOL {
                return Err(Error::ShapeMismatch(format!(
                    "base points differ: {:?} vs {:?}",
                    self.base, other.base
                )));
            }
        }
        Ok(())
    }

    pub fn add(&self, other: &Jet) -> Result<Jet> {
        self.same_shape(other)?;
        let mut out = self.clone();
        for (c, d) in out.coeffs.iter_mut().zip(&other.coeffs) {
            *c += d;
        }
        out.reliable = self.reliable.min(other.reliable);
        Ok(out)
    }

    pub fn sub(&self, other: &Jet) -> Result<Jet> {
        self.add(&other.neg())
    }

    pub fn neg(&self) -> Jet {
        self.scale(-Complex64::ONE)
    }

    pub fn scale(&self, s: Complex64) -> Jet {
        let mut out = self.clone();
        for c in out.coeffs.iter_mut() {
            *c *= s;
        }
        out
    }

    pub fn add_scalar(&self, s: Complex64) -> Jet {
        let mut out = self.clone();
        out.coeffs[0] += s;
        out
    }

    /// Cauchy product truncated at the cap.
    pub fn mul(&self, other: &Jet) -> Result<Jet> {
        self.same_shape(other)?;
        let mut out = Jet::zero(self.arity(), self.cap(), self.base.clone());
        let cap = self.cap() as u32;
        let nz_a: Vec<(usize, u32)> = nonzero(self);
        let nz_b: Vec<(usize, u32)> = nonzero(other);
        let (outer, inner) = if nz_a.len() <= nz_b.len() {
            (&nz_a, &nz_b)
        } else {
            (&nz_b, &nz_a)
        };
        let (oc, ic) = if nz_a.len() <= nz_b.len() {
            (&self.coeffs, &other.coeffs)
        } else {
            (&other.coeffs, &self.coeffs)
        };
        for &(i, di) in outer {
            let ci = oc[i];
            for &(j, dj) in inner {
                if di + dj > cap {
                    continue;
                }
                // In-cap sums always exist in the table.
                let p = self.table.sum_position(i, j).unwrap();
                out.coeffs[p] += ci * ic[j];
            }
        }
        out.reliable = match (self.reliable, other.reliable) {
            (Reliability::Exact, Reliability::Exact)
                if self.degree() + other.degree() <= self.cap() =>
            {
                Reliability::Exact
            }
            (a, b) => Reliability::UpTo(a.degree(self.cap()).min(b.degree(self.cap()))),
        };
        Ok(out)
    }

    /// Formal partial derivative with respect to variable `var`.
    ///
    /// The cap is kept, so for truncated inputs the top stored degree of the
    /// result is no longer trustworthy; the reliability field records this.
    pub fn derive(&self, var: usize) -> Jet {
        assert!(var < self.arity());
        let mut out = Jet::zero(self.arity(), self.cap(), self.base.clone());
        let mut idx = vec![0u32; self.arity()];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let m = self.table.multi(i);
            if m[var] == 0 {
                continue;
            }
            idx.copy_from_slice(m);
            idx[var] -= 1;
            let p = self.table.position(&idx).unwrap();
            out.coeffs[p] += c * m[var] as f64;
        }
        out.reliable = self.reliable.after_derive();
        out
    }

    /// Evaluate at an absolute point `z` (length = arity).
    pub fn eval(&self, z: &[Complex64]) -> Complex64 {
        assert_eq!(z.len(), self.arity());
        let cap = self.cap();
        let mut pows: Vec<Vec<Complex64>> = Vec::with_capacity(self.arity());
        for (zi, bi) in z.iter().zip(&self.base) {
            let u = zi - bi;
            let mut p = Vec::with_capacity(cap + 1);
            p.push(Complex64::ONE);
            for k in 1..=cap {
                let prev = p[k - 1];
                p.push(prev * u);
            }
            pows.push(p);
        }
        let mut acc = Complex64::ZERO;
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let mut term = *c;
            for (v, &e) in self.table.multi(i).iter().enumerate() {
                term *= pows[v][e as usize];
            }
            acc += term;
        }
        acc
    }

    /// Estimate sup |f| on the polydisc boundary `|z_i - base_i| = radius`
    /// by sampling `n_angles` points per variable.
    pub fn sup_on_polydisc(&self, radius: f64, n_angles: usize) -> f64 {
        let k = self.arity();
        let mut z = vec![Complex64::ZERO; k];
        let mut sup = 0.0f64;
        let total = n_angles.pow(k as u32);
        for mut t in 0..total {
            for v in 0..k {
                let a = (t % n_angles) as f64 / n_angles as f64;
                t /= n_angles;
                let phi = 2.0 * std::f64::consts::PI * (a + 0.5 / n_angles as f64);
                z[v] = self.base[v] + Complex64::from_polar(radius, phi);
            }
            sup = sup.max(self.eval(&z).norm());
        }
        sup
    }

    /// Taylor expansion of `self` composed with the map `g` (one inner jet
    /// per variable of `self`). Each `g_i` must take the value `base[i]` at
    /// the shared inner base point.
    pub fn compose(&self, g: &[Jet]) -> Result<Jet> {
        if g.len() != self.arity() {
            return Err(Error::ShapeMismatch(format!(
                "composition needs {} inner jets, got {}",
                self.arity(),
                g.len()
            )));
        }
        let inner = &g[0];
        for gi in g {
            gi.same_shape(inner)?;
        }
        let cap = self.cap().min(inner.cap());
        // Offsets u_i = g_i - (outer base)_i must vanish at the inner base.
        let mut offsets = Vec::with_capacity(g.len());
        for (i, gi) in g.iter().enumerate() {
            let u = gi.add_scalar(-self.base[i]);
            let v = u.coeffs[0];
            if v.norm() > BASE_TOL {
                return Err(Error::BaseMismatch {
                    component: i,
                    found: gi.coeffs[0],
                    expected: self.base[i],
                });
            }
            let mut u = u;
            u.coeffs[0] = Complex64::ZERO;
            offsets.push(u);
        }
        // Power cache per variable, up to the largest exponent actually used.
        let mut max_exp = vec![0u32; self.arity()];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            for (v, &e) in self.table.multi(i).iter().enumerate() {
                max_exp[v] = max_exp[v].max(e);
            }
        }
        let one = Jet::constant(
            inner.arity(),
            inner.cap(),
            inner.base.clone(),
            Complex64::ONE,
        );
        let mut pows: Vec<Vec<Jet>> = Vec::with_capacity(self.arity());
        for (v, u) in offsets.iter().enumerate() {
            let mut p = vec![one.clone()];
            for e in 1..=max_exp[v] as usize {
                let next = p[e - 1].mul(u)?;
                p.push(next);
            }
            pows.push(p);
        }
        let mut out = Jet::zero(inner.arity(), inner.cap(), inner.base.clone());
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm() == 0.0 || self.table.degree(i) > cap {
                continue;
            }
            let m = self.table.multi(i);
            let mut prod: Option<Jet> = None;
            for (v, &e) in m.iter().enumerate() {
                if e == 0 {
                    continue;
                }
                prod = Some(match prod {
                    None => pows[v][e as usize].clone(),
                    Some(p) => p.mul(&pows[v][e as usize])?,
                });
            }
            match prod {
                None => out.coeffs[0] += c,
                Some(p) => {
                    for (o, pc) in out.coeffs.iter_mut().zip(&p.coeffs) {
                        *o += c * pc;
                    }
                }
            }
        }
        let exact = self.reliable == Reliability::Exact
            && offsets.iter().all(|u| u.reliable == Reliability::Exact)
            && self.degree() * offsets.iter().map(|u| u.degree()).max().unwrap_or(0)
                <= inner.cap();
        out.reliable = if exact {
            Reliability::Exact
        } else {
            let rf = self.reliable.degree(self.cap());
            let rg = offsets
                .iter()
                .map(|u| u.reliable.degree(u.cap()))
                .min()
                .unwrap_or(cap as i64);
            Reliability::UpTo(rf.min(rg))
        };
        Ok(out)
    }

    /// Multiplicative inverse (constant term must not vanish), by Newton
    /// iteration `r <- r(2 - a r)` which doubles the correct degree each step.
    pub fn recip(&self) -> Result<Jet> {
        let a0 = self.coeffs[0];
        if a0.norm() < 1e-300 {
            return Err(Error::Factorization(
                "reciprocal of a jet with vanishing constant term".into(),
            ));
        }
        let mut r = Jet::constant(self.arity(), self.cap(), self.base.clone(), a0.inv());
        let steps = (usize::BITS - self.cap().leading_zeros()) as usize + 1;
        for _ in 0..steps {
            let ar = self.mul(&r)?;
            let two_minus = ar.neg().add_scalar(Complex64::new(2.0, 0.0));
            r = r.mul(&two_minus)?;
        }
        r.reliable = self.reliable.min(Reliability::UpTo(self.cap() as i64));
        Ok(r)
    }

    /// For a jet in paired variables `(x, w)` (arity 2n), the Hermitian dual
    /// `f*(x, w) := conj(f(w̄, x̄))`: swaps the two variable blocks and
    /// conjugates coefficients and base. Fixed points of this map are the
    /// "real" objects of the theory (weights, polarizations).
    pub fn conj_dual(&self) -> Jet {
        let k = self.arity();
        assert!(k % 2 == 0, "conj_dual needs paired variables");
        let n = k / 2;
        let mut base = vec![Complex64::ZERO; k];
        for i in 0..n {
            base[i] = self.base[n + i].conj();
            base[n + i] = self.base[i].conj();
        }
        let mut out = Jet::zero(k, self.cap(), base);
        let mut idx = vec![0u32; k];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let m = self.table.multi(i);
            for v in 0..n {
                idx[v] = m[n + v];
                idx[n + v] = m[v];
            }
            let p = self.table.position(&idx).unwrap();
            out.coeffs[p] = c.conj();
        }
        out.reliable = self.reliable;
        out
    }

    /// Copy into a table with a larger cap (new top degrees are zero).
    pub fn extend_cap(&self, new_cap: usize) -> Jet {
        assert!(new_cap >= self.cap());
        let mut out = Jet::zero(self.arity(), new_cap, self.base.clone());
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm() == 0.0 {
                continue;
            }
            let p = out.table.position(self.table.multi(i)).unwrap();
            out.coeffs[p] = *c;
        }
        out.reliable = match self.reliable {
            Reliability::Exact => Reliability::Exact,
            Reliability::UpTo(d) => Reliability::UpTo(d.min(self.cap() as i64)),
        };
        out
    }

    /// Drop coefficients above total degree `d` into a cap-`d` table.
    pub fn truncate_degree(&self, d: usize) -> Jet {
        let mut out = Jet::zero(self.arity(), d, self.base.clone());
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm() == 0.0 || self.table.degree(i) > d {
                continue;
            }
            let p = out.table.position(self.table.multi(i)).unwrap();
            out.coeffs[p] = *c;
        }
        out.reliable = match self.reliable {
            Reliability::Exact if self.degree() <= d => Reliability::Exact,
            r => Reliability::UpTo(r.degree(self.cap()).min(d as i64)),
        };
        out
    }

    /// Re-express the jet in a larger variable space: variable `i` of `self`
    /// becomes variable `var_map[i]`. The new base must restrict to the old
    /// one along `var_map`.
    pub fn inject(&self, new_arity: usize, cap: usize, var_map: &[usize], new_base: Vec<Complex64>) -> Jet {
        assert_eq!(var_map.len(), self.arity());
        assert_eq!(new_base.len(), new_arity);
        for (i, &v) in var_map.iter().enumerate() {
            assert!((new_base[v] - self.base[i]).norm() <= BASE_TOL);
        }
        let mut out = Jet::zero(new_arity, cap, new_base);
        let mut idx = vec![0u32; new_arity];
        for (i, c) in self.coeffs.iter().enumerate() {
            if c.norm() == 0.0 || self.table.degree(i) > cap {
                continue;
            }
            idx.iter_mut().for_each(|e| *e = 0);
            for (v, &e) in self.table.multi(i).iter().enumerate() {
                idx[var_map[v]] = e;
            }
            let p = out.table.position(&idx).unwrap();
            out.coeffs[p] = *c;
        }
        out.reliable = self.reliable;
        out
    }
}

fn nonzero(j: &Jet) -> Vec<(usize, u32)> {
    j.coeffs
        .iter()
        .enumerate()
        .filter(|(_, c)| c.norm() != 0.0)
        .map(|(i, _)| (i, j.table.degree(i) as u32))
        .collect()
}

/// Inverse of a formal map `G: C^k -> C^k` (one jet per component, shared
/// base `b`, values `c = G(b)`): returns `H` about `c` with `G(H(y)) = y`
/// and `H(G(x)) = x` up to the cap.
///
/// Solved by the fixed-point form of the implicit function theorem:
/// with `G(b+u) = c + A u + N(u)` (N of valuation >= 2),
/// `h = A^{-1}((y - c) - N(h))` gains one correct degree per pass.
pub fn jet_invert_map(g: &[Jet]) -> Result<Vec<Jet>> {
    let k = g.len();
    assert!(k >= 1);
    let inner = &g[0];
    if inner.arity() != k {
        return Err(Error::ShapeMismatch(format!(
            "inverting {} components of arity {}",
            k,
            inner.arity()
        )));
    }
    for gi in g {
        gi.same_shape(inner)?;
    }
    let cap = inner.cap();
    let b = inner.base.clone();
    let c: Vec<Complex64> = g.iter().map(|gi| gi.coeffs[0]).collect();

    // Linear part A and its numeric inverse.
    let mut a = nalgebra::DMatrix::<Complex64>::zeros(k, k);
    let mut e = vec![0u32; k];
    for (i, gi) in g.iter().enumerate() {
        for j in 0..k {
            e.iter_mut().for_each(|x| *x = 0);
            e[j] = 1;
            a[(i, j)] = gi.coeff(&e);
        }
    }
    let a_norm = a.norm();
    let lu = a.clone().lu();
    let a_inv = lu.try_inverse().ok_or(Error::SingularJacobian { cond: f64::INFINITY })?;
    let cond = a_norm * a_inv.norm();
    if cond > 1e12 {
        return Err(Error::SingularJacobian { cond });
    }

    // Nonlinear parts N_i (valuation >= 2) about b.
    let nl: Vec<Jet> = g
        .iter()
        .map(|gi| {
            let mut n = gi.clone();
            for (p, coeff) in n.coeffs.iter_mut().enumerate() {
                if n.table.degree(p) <= 1 {
                    *coeff = Complex64::ZERO;
                }
            }
            n
        })
        .collect();
    let trivial = nl.iter().all(|n| n.max_abs() == 0.0);

    // v_j - c_j in the target space (valuation-1 coordinates about c).
    let lin: Vec<Jet> = (0..k)
        .map(|j| Jet::coordinate(k, cap, c.clone(), j).add_scalar(-c[j]))
        .collect();

    // h_i about c, valuation >= 1; H_i = b_i + h_i.
    let mut h: Vec<Jet> = (0..k)
        .map(|i| {
            let mut acc = Jet::zero(k, cap, c.clone());
            for j in 0..k {
                acc = acc.add(&lin[j].scale(a_inv[(i, j)])).unwrap();
            }
            acc
        })
        .collect();
    if !trivial {
        for _pass in 0..cap {
            // Full-map jets H_i = b_i + h_i for substitution into N.
            let full: Vec<Jet> = h
                .iter()
                .zip(&b)
                .map(|(hi, bi)| hi.add_scalar(*bi))
                .collect();
            let n_of_h: Vec<Jet> = nl
                .iter()
                .map(|ni| ni.compose(&full))
                .collect::<Result<_>>()?;
            let mut next: Vec<Jet> = Vec::with_capacity(k);
            let mut delta = 0.0f64;
            for i in 0..k {
                let mut acc = Jet::zero(k, cap, c.clone());
                for j in 0..k {
                    let rhs = lin[j].sub(&n_of_h[j]).unwrap();
                    acc = acc.add(&rhs.scale(a_inv[(i, j)])).unwrap();
                }
                delta = delta.max(acc.sub(&h[i]).unwrap().max_abs());
                next.push(acc);
            }
            h = next;
            if delta == 0.0 {
                break;
            }
        }
    }
    let reliable = if trivial {
        Reliability::Exact
    } else {
        Reliability::UpTo(cap as i64)
    };
    Ok(h
        .into_iter()
        .zip(&b)
        .map(|(hi, bi)| hi.add_scalar(*bi).with_reliability(reliable))
        .collect())
}
