//! Coefficient-growth diagnostics for hbar-symbols.
//!
//! Classical analytic symbols satisfy `sup_K |a_j| <= C^{j+1} j^j`. Fitting
//! `log sup_K |a_j|` against the two regressors `j log j` and `j+1` recovers
//! the growth exponent p (p = 1 for j^j ~ j!-type growth, p = 2 for (j!)^2)
//! and the constant C.

use super::hbar::HbarSymbol;
use crate::error::{Error, Result};

#[derive(Clone, Debug)]
pub struct GrowthFit {
    /// Fitted exponent of the `j log j` regressor; `None` when every term
    /// beyond a_0 vanishes and the growth rate is undefined.
    pub exponent_p: Option<f64>,
    pub c_hat: f64,
    /// sup_K |a_j| per order, for reporting.
    pub sups: Vec<f64>,
}

const ANGLES_PER_VAR: usize = 12;

/// Least-squares fit of `log sup_K|a_j| = p (j log j) + (j+1) log C` over
/// the orders j >= 2 with nonvanishing sup.
pub fn growth_fit(a: &HbarSymbol, radius: f64) -> Result<GrowthFit> {
    if a.order() < 4 {
        return Err(Error::InvalidConfig(format!(
            "growth_fit needs order >= 4, got {}",
            a.order()
        )));
    }
    let sups: Vec<f64> = a
        .terms()
        .iter()
        .map(|t| t.sup_on_polydisc(radius, ANGLES_PER_VAR))
        .collect();
    if sups.iter().skip(1).all(|&s| s == 0.0) {
        return Ok(GrowthFit {
            exponent_p: None,
            c_hat: 0.0,
            sups,
        });
    }
    let pts: Vec<(f64, f64, f64)> = sups
        .iter()
        .enumerate()
        .skip(2)
        .filter(|(_, &s)| s > 0.0)
        .map(|(j, &s)| {
            let jf = j as f64;
            (jf * jf.ln(), jf + 1.0, s.ln())
        })
        .collect();
    if pts.len() < 2 {
        return Err(Error::DegenerateFit(
            "fewer than two usable orders for the growth fit".into(),
        ));
    }
    // 2x2 normal equations for (p, log C).
    let (mut s_uu, mut s_uv, mut s_vv, mut s_uy, mut s_vy) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(u, v, y) in &pts {
        s_uu += u * u;
        s_uv += u * v;
        s_vv += v * v;
        s_uy += u * y;
        s_vy += v * y;
    }
    let det = s_uu * s_vv - s_uv * s_uv;
    if det.abs() < 1e-12 * s_uu.max(s_vv).max(1.0) {
        return Err(Error::DegenerateFit("collinear growth regressors".into()));
    }
    let p = (s_uy * s_vv - s_vy * s_uv) / det;
    let log_c = (s_vy * s_uu - s_uy * s_uv) / det;
    Ok(GrowthFit {
        exponent_p: Some(p),
        c_hat: log_c.exp(),
        sups,
    })
}
