//! Frequency synthesis of causal time-domain responses.
//!
//! A causal response `u` with transfer function `H` is synthesized through
//! its damped version `v(t) = exp(−αt) u(t)`, whose transform is
//! `û(ω + iα)`:
//!
//! ```text
//! v(t_k) = (2/M) Re Σ_q Λ_q H(ω_q + iα) exp(−i ω_q t_k),   ω_q = (q + ½) Δω,
//! u(t_k) = exp(α t_k) v(t_k),
//! ```
//!
//! where `Λ_q = Σ_n λ(t_n) exp(−α t_n) exp(i ω_q t_n)` is the transform of the
//! damped pulse sampled on the data step over a window padded to
//! `M ≥ padding · N_t` samples, and `Δω = 2π / (M Δt)`. The discrete
//! synthesis is anti-periodic with period `P = M Δt`, so responses leak
//! back into `[0, T]` through their values near `t + P`; the damping
//! `α = damping / P` suppresses that leakage by `exp(−damping)`, which
//! matters for the slowly decaying tails of 2D problems. The half-bin
//! offset keeps the grid away from `ω = 0`. Only frequencies with
//! `|Λ_q| ≥ threshold · max |Λ|` are retained.
//!
//! With the Fourier convention `û(ω) = ∫ u(t) exp(iωt) dt`, the operator
//! `c⁻²∂tt − Δ` becomes `−(Δ + k²)` with `k = ω/c`, and the outgoing
//! fundamental solution in 2D is `(i/4) H₀⁽¹⁾(k r)`; with `Im k > 0` it
//! decays away from the source.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::signal::{Pulse, TimeGrid};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpectralParams {
    /// Padded window length as a multiple of `T`.
    pub padding_factor: f64,
    /// Relative spectral magnitude below which frequencies are dropped.
    pub freq_threshold: f64,
    /// Decay `α P` of the damping factor over one padded window.
    #[serde(default = "default_damping")]
    pub damping: f64,
}

fn default_damping() -> f64 {
    12.0
}

impl Default for SpectralParams {
    fn default() -> Self {
        SpectralParams {
            padding_factor: 4.0,
            freq_threshold: 1e-6,
            damping: default_damping(),
        }
    }
}

impl SpectralParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.padding_factor >= 2.0 && self.padding_factor.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "padding factor must be at least 2, got {}",
                self.padding_factor
            )));
        }
        if !(self.freq_threshold > 0.0 && self.freq_threshold < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "frequency threshold must lie in (0, 1), got {}",
                self.freq_threshold
            )));
        }
        if !(self.damping >= 0.0 && self.damping <= 40.0) {
            return Err(Error::InvalidArgument(format!(
                "damping must lie in [0, 40], got {}",
                self.damping
            )));
        }
        Ok(())
    }
}

pub struct FrequencyPlan {
    steps: usize,
    dt: f64,
    /// Padded length `M`.
    padded: usize,
    /// Damping rate `α`.
    alpha: f64,
    /// Retained bin indices `q`.
    bins: Vec<usize>,
    /// `ω_q + iα` for retained bins.
    frequencies: Vec<Complex64>,
    /// `(2/M) Λ_q` for retained bins.
    weights: Vec<Complex64>,
    fft: Arc<dyn Fft<f64>>,
}

impl std::fmt::Debug for FrequencyPlan {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FrequencyPlan")
            .field("steps", &self.steps)
            .field("dt", &self.dt)
            .field("padded", &self.padded)
            .field("alpha", &self.alpha)
            .field("retained", &self.bins.len())
            .finish()
    }
}

impl FrequencyPlan {
    pub fn new<P: Pulse + ?Sized>(pulse: &P, grid: &TimeGrid, params: SpectralParams) -> Result<Self> {
        params.validate()?;
        let dt = grid.dt();
        let mut padded = (params.padding_factor * grid.steps as f64).ceil() as usize;
        padded = padded.max(2 * grid.steps);
        padded += padded % 2;
        let period = padded as f64 * dt;
        let alpha = params.damping / period;
        let dw = 2.0 * std::f64::consts::PI / period;
        let samples: Vec<f64> = (0..padded)
            .map(|n| {
                let t = n as f64 * dt;
                pulse.eval(t) * (-alpha * t).exp()
            })
            .collect();
        let half = padded / 2;
        let spectrum: Vec<Complex64> = (0..half)
            .map(|q| {
                let w = (q as f64 + 0.5) * dw;
                samples
                    .iter()
                    .enumerate()
                    .filter(|(_, s)| **s != 0.0)
                    .map(|(n, s)| Complex64::from_polar(*s, w * n as f64 * dt))
                    .sum()
            })
            .collect();
        let peak = spectrum.iter().map(|c| c.norm()).fold(0.0, f64::max);
        if peak == 0.0 {
            return Err(Error::Degenerate("pulse has no energy on the time window".into()));
        }
        let scale = 2.0 / padded as f64;
        let mut bins = Vec::new();
        let mut frequencies = Vec::new();
        let mut weights = Vec::new();
        for (q, s) in spectrum.iter().enumerate() {
            if s.norm() >= params.freq_threshold * peak {
                bins.push(q);
                frequencies.push(Complex64::new((q as f64 + 0.5) * dw, alpha));
                weights.push(s * scale);
            }
        }
        let fft = FftPlanner::new().plan_fft_forward(padded);
        Ok(FrequencyPlan {
            steps: grid.steps,
            dt,
            padded,
            alpha,
            bins,
            frequencies,
            weights,
            fft,
        })
    }

    /// Complex angular frequencies `ω_q + iα` of the retained bins.
    pub fn frequencies(&self) -> &[Complex64] {
        &self.frequencies
    }

    pub fn damping_rate(&self) -> f64 {
        self.alpha
    }

    pub fn len(&self) -> usize {
        self.frequencies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frequencies.is_empty()
    }

    pub fn padded_len(&self) -> usize {
        self.padded
    }

    /// Time-domain samples at `t_0..=t_{N_t}` of the response whose
    /// transfer function takes the value `transfer[q]` at `frequencies()[q]`.
    pub fn synthesize(&self, transfer: &[Complex64]) -> Vec<f64> {
        let mut buf = vec![Complex64::new(0.0, 0.0); self.padded];
        self.synthesize_into(transfer, &mut buf)
    }

    /// As [`synthesize`](Self::synthesize) with a caller-provided scratch
    /// buffer of length `padded_len()`.
    pub fn synthesize_into(&self, transfer: &[Complex64], buf: &mut [Complex64]) -> Vec<f64> {
        assert_eq!(transfer.len(), self.bins.len());
        buf.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
        for ((&q, w), h) in self.bins.iter().zip(&self.weights).zip(transfer) {
            buf[q] = w * h;
        }
        self.fft.process(buf);
        let dw = 2.0 * std::f64::consts::PI / (self.padded as f64 * self.dt);
        (0..=self.steps)
            .map(|k| {
                let t = k as f64 * self.dt;
                let phase = Complex64::from_polar(1.0, -0.5 * dw * t);
                (phase * buf[k]).re * (self.alpha * t).exp()
            })
            .collect()
    }
}
