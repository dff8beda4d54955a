//! Error type shared by every module of the crate.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),

    #[error("base-point mismatch in composition: component {component} evaluates to {found} but the outer jet expects {expected}")]
    BaseMismatch {
        component: usize,
        found: num_complex::Complex64,
        expected: num_complex::Complex64,
    },

    #[error("singular or ill-conditioned Jacobian (condition estimate {cond:.3e})")]
    SingularJacobian { cond: f64 },

    #[error("insufficient cap: operation needs reliable degree {needed} but input only guarantees {available}")]
    InsufficientCap { needed: usize, available: usize },

    #[error("Hermitian symmetry violated at index pair a={a:?}, b={b:?}: {lhs} vs conj {rhs}")]
    NonHermitian {
        a: Vec<u32>,
        b: Vec<u32>,
        lhs: num_complex::Complex64,
        rhs: num_complex::Complex64,
    },

    #[error("Levi form not strictly positive: smallest eigenvalue {min_eig:.3e}")]
    LeviNotPositive { min_eig: f64 },

    #[error("weight is not quadratic: nonzero coefficient at degree {degree}")]
    NotQuadratic { degree: usize },

    #[error("leading symbol vanishes at the base point (|b_0| = {magnitude:.3e}); inversion needs ellipticity")]
    VanishingLeadingSymbol { magnitude: f64 },

    #[error("evaluation point outside reliable radius: |offset| = {distance:.3} > {radius:.3}")]
    OutOfRadius { distance: f64, radius: f64 },

    #[error("Gram matrix too ill-conditioned (estimate {cond:.3e}); retry with basis size <= {suggested_basis}")]
    IllConditioned { cond: f64, suggested_basis: usize },

    #[error("factorization failure: {0}")]
    Factorization(String),

    #[error("peak-state support clipped by the grid: bump mass {mass:.4} (expected 1 within {tolerance})")]
    SupportClipped { mass: f64, tolerance: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("degenerate fit: {0}")]
    DegenerateFit(String),
}

pub type Result<T> = std::result::Result<T, Error>;
