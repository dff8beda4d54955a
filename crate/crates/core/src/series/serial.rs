//! JSON serialization of jets and hbar-symbols.
//!
//! The on-disk schema stores complex numbers as `[re, im]` pairs (base) or
//! `re`/`im` fields (coefficients), and only nonzero coefficients, ordered
//! by table position so that reruns are byte-identical.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::hbar::HbarSymbol;
use super::jet::Jet;
use crate::error::{Error, Result};

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct CoeffEntry {
    pub idx: Vec<u32>,
    pub re: f64,
    pub im: f64,
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct JetData {
    pub arity: usize,
    pub base: Vec<[f64; 2]>,
    pub cap: usize,
    pub coeffs: Vec<CoeffEntry>,
}

impl JetData {
    pub fn from_jet(j: &Jet) -> JetData {
        let table = j.table();
        let coeffs = j
            .coeffs()
            .iter()
            .enumerate()
            .filter(|(_, c)| c.norm() != 0.0)
            .map(|(i, c)| CoeffEntry {
                idx: table.multi(i).to_vec(),
                re: c.re,
                im: c.im,
            })
            .collect();
        JetData {
            arity: j.arity(),
            base: j.base().iter().map(|b| [b.re, b.im]).collect(),
            cap: j.cap(),
            coeffs,
        }
    }

    pub fn to_jet(&self) -> Result<Jet> {
        if self.base.len() != self.arity {
            return Err(Error::ShapeMismatch(format!(
                "base has {} entries for arity {}",
                self.base.len(),
                self.arity
            )));
        }
        let base: Vec<Complex64> = self
            .base
            .iter()
            .map(|&[re, im]| Complex64::new(re, im))
            .collect();
        let entries: Vec<(Vec<u32>, Complex64)> = self
            .coeffs
            .iter()
            .map(|e| (e.idx.clone(), Complex64::new(e.re, e.im)))
            .collect();
        Jet::from_entries(self.arity, self.cap, base, &entries)
    }
}

#[derive(Serialize, Deserialize, Clone, Debug)]
pub struct HbarSymbolData {
    pub order: usize,
    pub order_m: f64,
    pub terms: Vec<JetData>,
}

impl HbarSymbolData {
    pub fn from_symbol(s: &HbarSymbol) -> HbarSymbolData {
        HbarSymbolData {
            order: s.order(),
            order_m: s.order_m,
            terms: s.terms().iter().map(JetData::from_jet).collect(),
        }
    }

    pub fn to_symbol(&self) -> Result<HbarSymbol> {
        let terms: Vec<Jet> = self
            .terms
            .iter()
            .map(|t| t.to_jet())
            .collect::<Result<_>>()?;
        let mut s = HbarSymbol::new(terms)?;
        s.order_m = self.order_m;
        Ok(s)
    }
}
