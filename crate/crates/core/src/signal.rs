//! Causal source pulses and uniform time grids.

use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Envelope exponent beyond which the Gaussian factor is treated as zero
/// (`exp(-40) ≈ 4e-18`).
const ENVELOPE_CUTOFF: f64 = 40.0;

/// A real source waveform with (numerically) bounded support.
pub trait Pulse: Sync {
    fn eval(&self, t: f64) -> f64;

    /// Interval outside of which the pulse is negligible (below ~1e-17 of
    /// its peak). Integrators never sample outside of it.
    fn support(&self) -> (f64, f64);

    /// Length over which the pulse changes appreciably; used to size
    /// quadrature panels.
    fn time_scale(&self) -> f64;
}

/// Gaussian-modulated sinusoid `sin(ω t) exp(-σ (t - t0)²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SignalSpec {
    /// Center frequency ω (radians per unit time).
    pub omega: f64,
    /// Bandwidth parameter σ (inverse time squared).
    pub sigma: f64,
    /// Time shift t0.
    pub t0: f64,
    /// Force λ(t) = 0 for t < 0.
    #[serde(default = "default_causal")]
    pub causal: bool,
}

fn default_causal() -> bool {
    true
}

impl Default for SignalSpec {
    fn default() -> Self {
        SignalSpec {
            omega: 4.0,
            sigma: 1.6,
            t0: 3.0,
            causal: true,
        }
    }
}

impl SignalSpec {
    pub fn new(omega: f64, sigma: f64, t0: f64) -> Result<Self> {
        let spec = SignalSpec {
            omega,
            sigma,
            t0,
            causal: true,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn with_causal(mut self, causal: bool) -> Self {
        self.causal = causal;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.omega > 0.0 && self.omega.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "center frequency must be positive, got {}",
                self.omega
            )));
        }
        if !(self.sigma > 0.0 && self.sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "bandwidth must be positive, got {}",
                self.sigma
            )));
        }
        if !self.t0.is_finite() {
            return Err(Error::InvalidArgument("time shift must be finite".into()));
        }
        Ok(())
    }

    pub fn envelope(&self, t: f64) -> f64 {
        let d = t - self.t0;
        (-self.sigma * d * d).exp()
    }

    pub fn eval(&self, t: f64) -> f64 {
        if self.causal && t < 0.0 {
            return 0.0;
        }
        (self.omega * t).sin() * self.envelope(t)
    }

    /// Values at every node of `grid`; element `k` is exactly `eval(k Δt)`.
    pub fn sample(&self, grid: &TimeGrid) -> Vec<f64> {
        (0..grid.len()).map(|k| self.eval(grid.node(k))).collect()
    }

    /// Center wavelength `2π c / ω` for sound speed `c`.
    pub fn center_wavelength(&self, c: f64) -> f64 {
        2.0 * std::f64::consts::PI * c / self.omega
    }
}

impl Pulse for SignalSpec {
    fn eval(&self, t: f64) -> f64 {
        SignalSpec::eval(self, t)
    }

    fn support(&self) -> (f64, f64) {
        let half = (ENVELOPE_CUTOFF / self.sigma).sqrt();
        let hi = self.t0 + half;
        let lo = self.t0 - half;
        if self.causal {
            if hi <= 0.0 {
                (0.0, 0.0)
            } else {
                (lo.max(0.0), hi)
            }
        } else {
            (lo, hi)
        }
    }

    fn time_scale(&self) -> f64 {
        let period = 2.0 * std::f64::consts::PI / self.omega;
        period.min(1.0 / self.sigma.sqrt())
    }
}

/// Closed uniform grid `t_k = k Δt`, `k = 0..=steps`, `Δt = terminal / steps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TimeGrid {
    pub terminal: f64,
    pub steps: usize,
}

impl TimeGrid {
    pub fn new(terminal: f64, steps: usize) -> Result<Self> {
        if !(terminal > 0.0 && terminal.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "terminal time must be positive, got {terminal}"
            )));
        }
        if steps == 0 {
            return Err(Error::InvalidArgument("time step count must be positive".into()));
        }
        Ok(TimeGrid { terminal, steps })
    }

    /// Grid with spacing `dt` and `steps` intervals.
    pub fn from_step(dt: f64, steps: usize) -> Result<Self> {
        Self::new(dt * steps as f64, steps)
    }

    pub fn dt(&self) -> f64 {
        self.terminal / self.steps as f64
    }

    /// Number of nodes, `steps + 1`.
    pub fn len(&self) -> usize {
        self.steps + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn node(&self, k: usize) -> f64 {
        k as f64 * self.dt()
    }

    pub fn nodes(&self) -> Vec<f64> {
        (0..self.len()).map(|k| self.node(k)).collect()
    }
}
