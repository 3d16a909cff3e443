//! Spectral workbench for perturbed monotone shear flows U(y) + mγ²Γ̃(y/γ) on
//! the channel [-1, 1]: Rayleigh solutions, Wronskians, the threshold
//! amplitude m_*, the unstable branch, steady bifurcations and linear evolution.

#![allow(clippy::needless_range_loop)]

pub mod bifurcation;
pub mod error;
pub mod evolution;
pub mod modes;
pub mod ode;
pub mod profiles;
pub mod quad;
pub mod rayleigh;
pub mod threshold;
pub mod tridiag;
pub mod wronskian;


pub use error::{Error, Result};
pub use profiles::{BaseProfile, PerturbationProfile, PerturbedFlow};
