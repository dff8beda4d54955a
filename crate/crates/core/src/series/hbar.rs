//! Finite hbar-expansions `a_0 + a_1*hbar + ... + a_J*hbar^J` with jet
//! coefficients: the working form of classical analytic symbols.

use num_complex::Complex64;

use super::jet::Jet;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct HbarSymbol {
    terms: Vec<Jet>,
    /// Finite order exponent m: the symbol is regarded as O(hbar^{-m}).
    /// Purely metadata at desk scale; defaults to 0.
    pub order_m: f64,
}

impl HbarSymbol {
    pub fn new(terms: Vec<Jet>) -> Result<HbarSymbol> {
        if terms.is_empty() {
            return Err(Error::ShapeMismatch("symbol needs at least one term".into()));
        }
        let first = &terms[0];
        for t in &terms[1..] {
            if t.arity() != first.arity() || t.cap() != first.cap() {
                return Err(Error::ShapeMismatch(
                    "hbar-terms must share arity and cap".into(),
                ));
            }
        }
        Ok(HbarSymbol { terms, order_m: 0.0 })
    }

    /// The constant symbol 1 at order J, in the given jet shape.
    pub fn one(arity: usize, cap: usize, base: Vec<Complex64>, order: usize) -> HbarSymbol {
        let mut terms = vec![Jet::constant(arity, cap, base.clone(), Complex64::ONE)];
        for _ in 0..order {
            terms.push(Jet::zero(arity, cap, base.clone()));
        }
        HbarSymbol { terms, order_m: 0.0 }
    }

    pub fn order(&self) -> usize {
        self.terms.len() - 1
    }

    pub fn term(&self, j: usize) -> &Jet {
        &self.terms[j]
    }

    pub fn terms(&self) -> &[Jet] {
        &self.terms
    }

    pub fn into_terms(self) -> Vec<Jet> {
        self.terms
    }

    pub fn map_terms(&self, f: impl FnMut(&Jet) -> Jet) -> HbarSymbol {
        HbarSymbol {
            terms: self.terms.iter().map(f).collect(),
            order_m: self.order_m,
        }
    }

    pub fn try_map_terms(&self, f: impl FnMut(&Jet) -> Result<Jet>) -> Result<HbarSymbol> {
        Ok(HbarSymbol {
            terms: self.terms.iter().map(f).collect::<Result<_>>()?,
            order_m: self.order_m,
        })
    }

    /// Truncate or zero-pad to order `j`.
    pub fn with_order(&self, j: usize) -> HbarSymbol {
        let mut terms = self.terms.clone();
        let zero = Jet::zero(
            self.terms[0].arity(),
            self.terms[0].cap(),
            self.terms[0].base().to_vec(),
        );
        terms.resize(j + 1, zero);
        HbarSymbol {
            terms,
            order_m: self.order_m,
        }
    }

    pub fn add(&self, other: &HbarSymbol) -> Result<HbarSymbol> {
        if self.order() != other.order() {
            return Err(Error::ShapeMismatch("hbar-orders differ".into()));
        }
        Ok(HbarSymbol {
            terms: self
                .terms
                .iter()
                .zip(&other.terms)
                .map(|(a, b)| a.add(b))
                .collect::<Result<_>>()?,
            order_m: self.order_m.max(other.order_m),
        })
    }

    /// hbar-Cauchy product truncated at the smaller order.
    pub fn mul(&self, other: &HbarSymbol) -> Result<HbarSymbol> {
        let order = self.order().min(other.order());
        let shape = &self.terms[0];
        let mut terms =
            vec![Jet::zero(shape.arity(), shape.cap(), shape.base().to_vec()); order + 1];
        for (i, a) in self.terms.iter().enumerate().take(order + 1) {
            for (j, b) in other.terms.iter().enumerate() {
                if i + j > order {
                    break;
                }
                terms[i + j] = terms[i + j].add(&a.mul(b)?)?;
            }
        }
        Ok(HbarSymbol {
            terms,
            order_m: self.order_m + other.order_m,
        })
    }

    pub fn scale(&self, s: Complex64) -> HbarSymbol {
        self.map_terms(|t| t.scale(s))
    }

    /// Evaluate `sum_j a_j(z) hbar^j`.
    pub fn eval(&self, z: &[Complex64], hbar: f64) -> Complex64 {
        let mut acc = Complex64::ZERO;
        let mut hp = 1.0;
        for t in &self.terms {
            acc += t.eval(z) * hp;
            hp *= hbar;
        }
        acc
    }
}
