//! Integration, classification and verification of warped-product gradient
//! Yamabe solitons through their warp-function ODE.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod classifier;
pub mod error;
pub mod geometry;
pub mod integrator;
pub mod ode;
pub mod separatrix;
pub mod suites;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/warp-equation.md")]
    mod warp_equation {}
    #[doc = include_str!("../../../book/src/integrating.md")]
    mod integrating {}
    #[doc = include_str!("../../../book/src/separatrices.md")]
    mod separatrices {}
    #[doc = include_str!("../../../book/src/classification.md")]
    mod classification {}
    #[doc = include_str!("../../../book/src/geometry.md")]
    mod geometry {}
    #[doc = include_str!("../../../book/src/verification.md")]
    mod verification {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}

#[cfg(doctest)]
#[doc = include_str!("../../../README.md")]
mod readme {}
