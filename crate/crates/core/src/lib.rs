//! Direct sampling reconstruction of acoustic scatterers from time-dependent
//! scattered-field data.
//!
//! The crate is organised around the data flow of an imaging experiment:
//!
//! * [`signal`]: the causal source pulse and the shared time grid,
//! * [`geometry`]: scatterer boundaries, sensor layouts and sampling grids,
//! * [`greenfn`]: time-convolved Green's functions and the probe kernels,
//! * [`forward`]: synthesis of scattered data (point model and a 2D
//!   boundary integral solver driven by frequency synthesis),
//! * [`indicator`]: the convolution-based indicator functions and grid sweeps,
//! * [`fieldio`]: `.tdis` tensors and `.csv` indicator fields,
//! * [`config`] / [`cli`]: declarative experiment runs.

pub mod bessel;
pub mod cli;
pub mod config;
pub mod error;
pub mod fieldio;
pub mod forward;
pub mod geometry;
pub mod greenfn;
pub mod indicator;
pub mod quadrature;
pub mod signal;
pub mod spectral;

pub use error::{Error, Result};

/// Cartesian point. Planar layouts keep the third coordinate at zero.
pub type Point = [f64; 3];

pub fn distance(a: &Point, b: &Point) -> f64 {
    let dx = a[0] - b[0];
    let dy = a[1] - b[1];
    let dz = a[2] - b[2];
    (dx * dx + dy * dy + dz * dz).sqrt()
}

/// Spatial dimension of the wave propagation model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, serde::Serialize, serde::Deserialize)]
pub enum Dimension {
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "3")]
    Three,
}

impl Dimension {
    pub fn as_u32(self) -> u32 {
        match self {
            Dimension::Two => 2,
            Dimension::Three => 3,
        }
    }

    pub fn from_u32(d: u32) -> Option<Self> {
        match d {
            2 => Some(Dimension::Two),
            3 => Some(Dimension::Three),
            _ => None,
        }
    }
}
