//! Time-convolved Green's functions of `c⁻²∂tt − Δ` and the probe kernels
//! built from them.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::quadrature::gl16;
use crate::signal::Pulse;
use crate::{distance, Dimension, Error, Point, Result};

/// Homogeneous background medium.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Medium {
    /// Sound speed `c`.
    pub c: f64,
}

impl Default for Medium {
    fn default() -> Self {
        Medium { c: 1.0 }
    }
}

impl Medium {
    pub fn new(c: f64) -> Result<Self> {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::InvalidArgument(format!("sound speed must be positive, got {c}")));
        }
        Ok(Medium { c })
    }
}

/// Distances below this are treated as coincident points.
const COINCIDENT: f64 = 1e-12;

fn separated(a: &Point, b: &Point, what: &str) -> Result<f64> {
    let r = distance(a, b);
    if r <= COINCIDENT {
        return Err(Error::Coincident(format!(
            "{what} at ({}, {}, {})",
            a[0], a[1], a[2]
        )));
    }
    Ok(r)
}

/// `λ(t − |x−y|/c) / (4π|x−y|)`.
pub fn greens3d_conv<P: Pulse + ?Sized>(x: &Point, y: &Point, t: f64, pulse: &P, medium: Medium) -> Result<f64> {
    let r = separated(x, y, "source and receiver coincide")?;
    Ok(pulse.eval(t - r / medium.c) / (4.0 * PI * r))
}

/// Panelled Gauss–Legendre rule for the 2D retarded convolution
///
/// ```text
/// (G₂ ∗ λ)(t) = ∫_{-∞}^{t - r/c} λ(τ) / (2π √((t-τ)² - r²/c²)) dτ
/// ```
///
/// With `a = r/c` and `τ = (t - a) - u²` the integrand becomes
/// `λ(t - a - u²) / (π √(2a + u²))`, which is smooth in `u`. The range of
/// `τ` is clipped to the pulse support and split into panels no wider
/// than `panel_fraction · time_scale`; each panel is mapped to `u` and
/// integrated with 16 points.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Quadrature2d {
    pub panel_fraction: f64,
}

impl Default for Quadrature2d {
    fn default() -> Self {
        Quadrature2d { panel_fraction: 0.5 }
    }
}

impl Quadrature2d {
    pub fn conv<P: Pulse + ?Sized>(&self, r: f64, t: f64, pulse: &P, c: f64) -> f64 {
        let a = r / c;
        let top = t - a;
        let (lo, hi) = pulse.support();
        if top <= lo || hi <= lo {
            return 0.0;
        }
        let tau_hi = hi.min(top);
        let width = self.panel_fraction * pulse.time_scale();
        let panels = ((tau_hi - lo) / width).ceil().max(1.0) as usize;
        let (nodes, weights) = gl16();
        let mut total = 0.0;
        for p in 0..panels {
            // τ runs from tau_hi down to lo; u = √(top − τ) increases.
            let t_a = tau_hi - (tau_hi - lo) * p as f64 / panels as f64;
            let t_b = tau_hi - (tau_hi - lo) * (p + 1) as f64 / panels as f64;
            let u_a = (top - t_a).max(0.0).sqrt();
            let u_b = (top - t_b).max(0.0).sqrt();
            let half = 0.5 * (u_b - u_a);
            let mid = 0.5 * (u_b + u_a);
            let mut s = 0.0;
            for (x, w) in nodes.iter().zip(weights) {
                let u = mid + half * x;
                let u2 = u * u;
                s += w * pulse.eval(top - u2) / (2.0 * a + u2).sqrt();
            }
            total += s * half;
        }
        total / PI
    }
}

/// `∫ λ(τ) / (2π √((t−τ)² − |x−y|²/c²)) dτ` over `τ < t − |x−y|/c`.
pub fn greens2d_conv<P: Pulse + ?Sized>(x: &Point, y: &Point, t: f64, pulse: &P, medium: Medium) -> Result<f64> {
    let r = separated(x, y, "source and receiver coincide")?;
    Ok(Quadrature2d::default().conv(r, t, pulse, medium.c))
}

/// Point-scatterer response with the scatterer at the probe `z`:
/// `−λ(t − |x−z|/c − |y−z|/c) / (4π |x−z| |y−z|)`.
pub fn eval_uz<P: Pulse + ?Sized>(
    x: &Point,
    t: f64,
    y: &Point,
    z: &Point,
    pulse: &P,
    medium: Medium,
) -> Result<f64> {
    let rx = separated(x, z, "probe coincides with receiver")?;
    let ry = separated(y, z, "probe coincides with source")?;
    Ok(-pulse.eval(t - (rx + ry) / medium.c) / (4.0 * PI * (rx * ry)))
}

/// Incident field radiated from the probe, `G_z(x, t) = (G ∗ λ)(x, t; z)`.
pub fn eval_gz<P: Pulse + ?Sized>(
    x: &Point,
    t: f64,
    z: &Point,
    pulse: &P,
    medium: Medium,
    dimension: Dimension,
) -> Result<f64> {
    match dimension {
        Dimension::Three => greens3d_conv(x, z, t, pulse, medium),
        Dimension::Two => greens2d_conv(x, z, t, pulse, medium),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::signal::SignalSpec;

    fn pulse() -> SignalSpec {
        SignalSpec::default()
    }

    #[test]
    fn three_d_closed_form() {
        let m = Medium::default();
        let v = greens3d_conv(&[2.0, 0.0, 0.0], &[0.0; 3], 5.0, &pulse(), m).unwrap();
        let expect = 12f64.sin() / (8.0 * PI);
        assert!((v - expect).abs() < 1e-16);
        assert!((v - (-0.021_349_56)).abs() < 1e-8);
        assert_eq!(greens3d_conv(&[2.0, 0.0, 0.0], &[0.0; 3], 2.0, &pulse(), m).unwrap(), 0.0);
        assert_eq!(greens3d_conv(&[2.0, 0.0, 0.0], &[0.0; 3], 1.0, &pulse(), m).unwrap(), 0.0);
        assert!(greens3d_conv(&[1.0; 3], &[1.0; 3], 1.0, &pulse(), m).is_err());
    }

    #[test]
    fn reciprocity() {
        let m = Medium::default();
        let x = [0.3, -1.2, 0.0];
        let y = [2.0, 0.7, 0.0];
        for k in 0..40 {
            let t = 0.5 * k as f64;
            assert_eq!(
                greens3d_conv(&x, &y, t, &pulse(), m).unwrap(),
                greens3d_conv(&y, &x, t, &pulse(), m).unwrap()
            );
            assert_eq!(
                greens2d_conv(&x, &y, t, &pulse(), m).unwrap(),
                greens2d_conv(&y, &x, t, &pulse(), m).unwrap()
            );
        }
    }

    #[test]
    fn decay_of_three_d_peak() {
        let m = Medium::new(1.3).unwrap();
        let p = pulse();
        for r in [0.5, 1.0, 3.7] {
            for k in 0..30 {
                let t = r / m.c + 0.2 * k as f64;
                let near = greens3d_conv(&[r, 0.0, 0.0], &[0.0; 3], t, &p, m).unwrap();
                let far =
                    greens3d_conv(&[2.0 * r, 0.0, 0.0], &[0.0; 3], t + r / m.c, &p, m).unwrap();
                if near != 0.0 {
                    assert!((far / near - 0.5).abs() < 1e-12);
                }
            }
        }
    }

    #[test]
    fn two_d_vanishes_before_arrival() {
        let m = Medium::default();
        for t in [0.0, 0.5, 1.0] {
            assert_eq!(greens2d_conv(&[1.0, 0.0, 0.0], &[0.0; 3], t, &pulse(), m).unwrap(), 0.0);
        }
        assert!(greens2d_conv(&[0.0; 3], &[0.0; 3], 3.0, &pulse(), m).is_err());
    }

    #[test]
    fn uz_examples() {
        let m = Medium::default();
        let p = pulse();
        let x = [4.0, 0.0, 0.0];
        let y = [0.0, 4.0, 0.0];
        let z = [0.0; 3];
        let v = eval_uz(&x, 11.0, &y, &z, &p, m).unwrap();
        assert!((v - (-(12f64.sin()) / (64.0 * PI))).abs() < 1e-17);
        assert!((v - 0.002_668_695).abs() < 1e-9);
        assert_eq!(eval_uz(&x, 8.0, &y, &z, &p, m).unwrap(), 0.0);
        for k in 0..50 {
            let t = 0.3 * k as f64;
            let a = [1.0, 2.5, 0.0];
            let b = [-3.0, 0.2, 0.0];
            let zz = [0.4, -0.1, 0.0];
            assert_eq!(
                eval_uz(&a, t, &b, &zz, &p, m).unwrap(),
                eval_uz(&b, t, &a, &zz, &p, m).unwrap()
            );
        }
        assert!(eval_uz(&x, 1.0, &y, &x, &p, m).is_err());
    }

    #[test]
    fn uz_from_gz_identity() {
        let m = Medium::new(0.8).unwrap();
        let p = pulse();
        let x = [3.1, -1.0, 0.5];
        let y = [-2.0, 2.0, -0.3];
        let z = [0.2, 0.3, 0.1];
        let ry = distance(&y, &z);
        for k in 0..80 {
            let t = 0.25 * k as f64;
            let uz = eval_uz(&x, t, &y, &z, &p, m).unwrap();
            let gz = eval_gz(&x, t - ry / m.c, &z, &p, m, Dimension::Three).unwrap();
            assert!((uz + gz / ry).abs() < 1e-15);
        }
        let g3 = eval_gz(&[2.0, 0.0, 0.0], 5.0, &[0.0; 3], &p, Medium::default(), Dimension::Three).unwrap();
        assert_eq!(g3, greens3d_conv(&[2.0, 0.0, 0.0], &[0.0; 3], 5.0, &p, Medium::default()).unwrap());
        assert_eq!(
            eval_gz(&[2.0, 0.0, 0.0], 1.5, &[0.0; 3], &p, Medium::default(), Dimension::Two).unwrap(),
            0.0
        );
    }
}
