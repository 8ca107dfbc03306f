//! Convolution-based indicator functions.
//!
//! For a probe `z` and a kernel `K(x, t; y)` the building block is
//!
//! ```text
//! w_j[k] = Σ_i Δs_i Σ_{l=0..k} u(x_i, t_{k−l}; y_j) K(x_i, t_l; y_j) Δt
//! N_{u,K} = (Σ_j Σ_k |w_j[k]|² Δt Δs_j)^{1/2}
//! ```
//!
//! and the indicators are
//! `I1 = N²_{u,U_z} / (N_{u,u} N_{U_z,U_z})`,
//! `I2 = N²_{u,G_z} / (N_{u,u} N_{U_z,U_z})` and `I3 = N_{u,G_z}`.
//!
//! The pairing of `u` with the kernel is selected by [`Pairing`]. The
//! truncated convolution above is [`Pairing::Convolution`]. The default,
//! [`Pairing::Correlation`], replaces it by the cross-correlation over all
//! lags,
//!
//! ```text
//! w_j[m] = Σ_i Δs_i Σ_l u(x_i, t_{l+m}; y_j) K(x_i, t_l; y_j) Δt,   |m| ≤ N_t
//! ```
//!
//! whose spectrum is `Σ_i Δs_i F[u] conj(F[K])`. With this pairing
//! `N_{u,u}` is built from `|F[u]|²`, Cauchy–Schwarz gives `I1 ≤ 1`, and
//! the coherent sum over receivers peaks at the scatterer. The truncated
//! convolution instead focuses where `|x−y0| + |x−z|` is constant over the
//! receivers, which for a centred circle of receivers is the mirror point
//! `z = −y0`.
//!
//! Both pairings are evaluated with zero-padded real FFTs, which reproduce
//! the direct sums to round-off; [`indicator_direct`] keeps the literal
//! loops as a reference.

mod field;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use num_complex::Complex64;
use rayon::prelude::*;
use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use serde::{Deserialize, Serialize};

pub use field::IndicatorField;

use crate::forward::{green2d_spectrum, point_response_2d, ScatteredDataSet};
use crate::geometry::SamplingGrid;
use crate::greenfn::{eval_gz, eval_uz, Quadrature2d};
use crate::spectral::FrequencyPlan;
use crate::{distance, Dimension, Error, Point, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum IndicatorKind {
    #[serde(rename = "i1")]
    I1,
    #[serde(rename = "i2")]
    I2,
    #[serde(rename = "i3")]
    I3,
    #[serde(rename = "i1prime")]
    I1Prime,
}

impl IndicatorKind {
    pub const ALL: [IndicatorKind; 4] = [
        IndicatorKind::I1,
        IndicatorKind::I2,
        IndicatorKind::I3,
        IndicatorKind::I1Prime,
    ];

    pub fn name(self) -> &'static str {
        match self {
            IndicatorKind::I1 => "i1",
            IndicatorKind::I2 => "i2",
            IndicatorKind::I3 => "i3",
            IndicatorKind::I1Prime => "i1prime",
        }
    }
}

impl fmt::Display for IndicatorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for IndicatorKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        IndicatorKind::ALL
            .into_iter()
            .find(|k| k.name().eq_ignore_ascii_case(s))
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown indicator `{s}`; expected one of {{i1, i2, i3, i1prime}}"
                ))
            })
    }
}

/// How the data are paired with a probe kernel.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Pairing {
    /// Cross-correlation over all lags.
    #[default]
    Correlation,
    /// Convolution truncated to the recording window.
    Convolution,
}

impl Pairing {
    pub fn name(self) -> &'static str {
        match self {
            Pairing::Correlation => "correlation",
            Pairing::Convolution => "convolution",
        }
    }
}

impl fmt::Display for Pairing {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Pairing {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "correlation" => Ok(Pairing::Correlation),
            "convolution" => Ok(Pairing::Convolution),
            other => Err(Error::InvalidArgument(format!(
                "unknown pairing {other:?}; expected correlation or convolution"
            ))),
        }
    }
}

/// Truncated linear convolution `out[k] = Σ_{l≤k} f[k−l] g[l] Δt`.
pub fn discrete_conv(f: &[f64], g: &[f64], dt: f64) -> Result<Vec<f64>> {
    if f.len() != g.len() {
        return Err(Error::InvalidArgument(format!(
            "convolution operands differ in length: {} and {}",
            f.len(),
            g.len()
        )));
    }
    Ok((0..f.len())
        .map(|k| (0..=k).map(|l| f[k - l] * g[l]).sum::<f64>() * dt)
        .collect())
}

/// Cross-correlation over all lags: `out[m + n − 1] = Σ_l f[l+m] g[l] Δt`
/// for `|m| < n`.
pub fn discrete_xcorr(f: &[f64], g: &[f64], dt: f64) -> Result<Vec<f64>> {
    if f.len() != g.len() {
        return Err(Error::InvalidArgument(format!(
            "correlation operands differ in length: {} and {}",
            f.len(),
            g.len()
        )));
    }
    let n = f.len() as isize;
    Ok((1 - n..n)
        .map(|m| {
            let lo = (-m).max(0);
            let hi = (n - m).min(n);
            (lo..hi).map(|l| f[(l + m) as usize] * g[l as usize]).sum::<f64>() * dt
        })
        .collect())
}

/// `(Σ_j Σ_k |values[j][k]|² Δt Δs_j)^{1/2}`.
pub fn norm_r_gamma(values: &[Vec<f64>], dt: f64, weights: &[f64]) -> Result<f64> {
    if values.len() != weights.len() {
        return Err(Error::InvalidArgument(format!(
            "{} series but {} weights",
            values.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w > 0.0)) {
        return Err(Error::InvalidArgument("source weights must be positive".into()));
    }
    let s: f64 = values
        .iter()
        .zip(weights)
        .map(|(v, w)| v.iter().map(|x| x * x).sum::<f64>() * dt * w)
        .sum();
    Ok(s.sqrt())
}

/// Zero-padded real FFTs for truncated convolutions of length-`n` series.
#[derive(Clone)]
pub struct ConvEngine {
    n: usize,
    len: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
}

impl fmt::Debug for ConvEngine {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvEngine").field("n", &self.n).field("len", &self.len).finish()
    }
}

impl ConvEngine {
    pub fn new(n: usize) -> Self {
        let len = (2 * n.max(1) - 1).next_power_of_two().max(2);
        let mut planner = RealFftPlanner::<f64>::new();
        ConvEngine {
            n,
            len,
            r2c: planner.plan_fft_forward(len),
            c2r: planner.plan_fft_inverse(len),
        }
    }

    pub fn spectrum_len(&self) -> usize {
        self.len / 2 + 1
    }

    pub fn spectrum(&self, x: &[f64]) -> Vec<Complex64> {
        debug_assert_eq!(x.len(), self.n);
        let mut input = vec![0.0; self.len];
        input[..self.n].copy_from_slice(x);
        let mut out = self.r2c.make_output_vec();
        self.r2c
            .process(&mut input, &mut out)
            .expect("buffer sizes come from the plan");
        out
    }

    /// First `n` samples of the inverse transform, times `dt`. The input
    /// is used as scratch.
    pub fn inverse(&self, spec: &mut [Complex64], dt: f64) -> Vec<f64> {
        spec[0].im = 0.0;
        let last = spec.len() - 1;
        spec[last].im = 0.0;
        let mut out = vec![0.0; self.len];
        self.c2r
            .process(spec, &mut out)
            .expect("buffer sizes come from the plan");
        let scale = dt / self.len as f64;
        out.truncate(self.n);
        out.iter_mut().for_each(|v| *v *= scale);
        out
    }
}

impl ConvEngine {
    /// `Σ |w|² dt` of the full circular inverse of `spec` scaled by `dt`,
    /// computed in the frequency domain.
    pub fn energy(&self, spec: &[Complex64], dt: f64) -> f64 {
        let last = spec.len() - 1;
        let interior: f64 = spec[1..last].iter().map(|c| c.norm_sqr()).sum();
        let total = spec[0].re * spec[0].re + spec[last].re * spec[last].re + 2.0 * interior;
        total * dt * dt * dt / self.len as f64
    }
}

/// [`discrete_conv`] through the FFT.
pub fn fft_conv(f: &[f64], g: &[f64], dt: f64) -> Result<Vec<f64>> {
    if f.len() != g.len() {
        return Err(Error::InvalidArgument(format!(
            "convolution operands differ in length: {} and {}",
            f.len(),
            g.len()
        )));
    }
    if f.is_empty() {
        return Ok(Vec::new());
    }
    let e = ConvEngine::new(f.len());
    let a = e.spectrum(f);
    let b = e.spectrum(g);
    let mut p: Vec<Complex64> = a.iter().zip(&b).map(|(x, y)| x * y).collect();
    Ok(e.inverse(&mut p, dt))
}

/// Norms of one probe evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct ProbeNorms {
    pub n_u_uz: f64,
    pub n_uz_uz: f64,
    pub n_u_gz: f64,
}

struct ProbeKernels {
    gz: Option<Vec<Vec<Complex64>>>,
    uz: Option<Vec<Vec<Complex64>>>,
    n_uz_uz: f64,
}

/// Data spectra and the probe-independent norm `N_{u,u}` of one data set.
pub struct ConvNormCache {
    data: ScatteredDataSet,
    pairing: Pairing,
    engine: ConvEngine,
    spectra: Vec<Vec<Complex64>>,
    n_uu: f64,
    plan: Option<FrequencyPlan>,
    quadrature: Quadrature2d,
}

impl fmt::Debug for ConvNormCache {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ConvNormCache")
            .field("shape", &self.data.shape())
            .field("pairing", &self.pairing)
            .field("n_uu", &self.n_uu)
            .finish()
    }
}

const COINCIDENT: f64 = 1e-12;

impl ConvNormCache {
    pub fn new(data: &ScatteredDataSet) -> Result<Self> {
        Self::with_pairing(data, Pairing::default())
    }

    pub fn with_pairing(data: &ScatteredDataSet, pairing: Pairing) -> Result<Self> {
        let (nm, nt, ni) = data.shape();
        if nm == 0 || ni == 0 || nt == 0 {
            return Err(Error::InvalidArgument("empty data set".into()));
        }
        let engine = ConvEngine::new(nt);
        let mut spectra = Vec::with_capacity(nm * ni);
        for i in 0..nm {
            for j in 0..ni {
                spectra.push(engine.spectrum(&data.trace(i, j)));
            }
        }
        let plan = match data.dimension {
            Dimension::Two => Some(FrequencyPlan::new(&data.signal, &data.time, data.spectral_params())?),
            Dimension::Three => None,
        };
        let mut cache = ConvNormCache {
            data: data.clone(),
            pairing,
            engine,
            spectra,
            n_uu: 0.0,
            plan,
            quadrature: Quadrature2d::default(),
        };
        let n_uu = cache.norm_with(|i, j| &cache.spectra[i * ni + j]);
        cache.n_uu = n_uu;
        Ok(cache)
    }

    pub fn data(&self) -> &ScatteredDataSet {
        &self.data
    }

    pub fn n_uu(&self) -> f64 {
        self.n_uu
    }

    pub fn pairing(&self) -> Pairing {
        self.pairing
    }

    /// `Σ |w|² Δt` of the pairing whose spectrum is accumulated in `acc`.
    fn pair_energy(&self, acc: &mut [Complex64], dt: f64) -> f64 {
        match self.pairing {
            Pairing::Correlation => self.engine.energy(acc, dt),
            Pairing::Convolution => self.engine.inverse(acc, dt).iter().map(|v| v * v).sum::<f64>() * dt,
        }
    }

    /// `N_{u,K}` where `kernel(i, j)` returns the spectrum of `K(x_i, ·; y_j)`.
    fn norm_with<'a>(&self, kernel: impl Fn(usize, usize) -> &'a [Complex64]) -> f64 {
        let (nm, _, ni) = self.data.shape();
        let dt = self.data.time.dt();
        let mut acc = vec![Complex64::new(0.0, 0.0); self.engine.spectrum_len()];
        let mut total = 0.0;
        for j in 0..ni {
            acc.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for i in 0..nm {
                let ds = self.data.sensors.weights[i];
                let k = kernel(i, j);
                let pairs = acc.iter_mut().zip(&self.spectra[i * ni + j]).zip(k);
                match self.pairing {
                    Pairing::Correlation => pairs.for_each(|((a, s), kk)| *a += ds * s * kk.conj()),
                    Pairing::Convolution => pairs.for_each(|((a, s), kk)| *a += ds * s * kk),
                }
            }
            total += self.pair_energy(&mut acc, dt) * self.data.sources.weights[j];
        }
        total.sqrt()
    }

    fn check_probe(&self, z: &Point, with_sources: bool) -> Result<()> {
        let sensors = self.data.sensors.points.iter();
        let sources = self.data.sources.points.iter().filter(|_| with_sources);
        for p in sensors.chain(sources) {
            if distance(p, z) <= COINCIDENT {
                return Err(Error::Coincident(format!(
                    "probe ({}, {}, {}) coincides with a sensor or source",
                    z[0], z[1], z[2]
                )));
            }
        }
        Ok(())
    }

    /// Samples of `G_z(x_i, t_k)` for every sensor, as spectra.
    fn gz_spectra(&self, z: &Point) -> Result<Vec<Vec<Complex64>>> {
        let d = &self.data;
        d.sensors
            .points
            .iter()
            .map(|x| {
                let series: Vec<f64> = match d.dimension {
                    Dimension::Three => (0..d.time.len())
                        .map(|k| eval_gz(x, d.time.node(k), z, &d.signal, d.medium, Dimension::Three))
                        .collect::<Result<_>>()?,
                    Dimension::Two => {
                        let r = distance(x, z);
                        (0..d.time.len())
                            .map(|k| self.quadrature.conv(r, d.time.node(k), &d.signal, d.medium.c))
                            .collect()
                    }
                };
                Ok(self.engine.spectrum(&series))
            })
            .collect()
    }

    /// Spectra of `U_z(x_i, ·; y_j)`, indexed `i * N_i + j`.
    fn uz_spectra(&self, z: &Point) -> Result<Vec<Vec<Complex64>>> {
        let d = &self.data;
        let (nm, nt, ni) = d.shape();
        let mut out = Vec::with_capacity(nm * ni);
        match (d.dimension, &self.plan) {
            (Dimension::Two, Some(plan)) => {
                let legs_x: Vec<_> = d
                    .sensors
                    .points
                    .iter()
                    .map(|x| green2d_spectrum(plan, distance(x, z), d.medium))
                    .collect();
                let legs_y: Vec<_> = d
                    .sources
                    .points
                    .iter()
                    .map(|y| green2d_spectrum(plan, distance(y, z), d.medium))
                    .collect();
                let mut scratch = vec![Complex64::new(0.0, 0.0); plan.padded_len()];
                for lx in &legs_x {
                    for ly in &legs_y {
                        let series = point_response_2d(plan, lx, ly, 1.0, &mut scratch);
                        out.push(self.engine.spectrum(&series));
                    }
                }
            }
            _ => {
                let mut series = vec![0.0; nt];
                for x in &d.sensors.points {
                    for y in &d.sources.points {
                        for (k, s) in series.iter_mut().enumerate() {
                            *s = eval_uz(x, d.time.node(k), y, z, &d.signal, d.medium)?;
                        }
                        out.push(self.engine.spectrum(&series));
                    }
                }
            }
        }
        Ok(out)
    }

    /// Probe kernels needed for `kinds` at `z`.
    fn kernels(&self, z: &Point, kinds: &[IndicatorKind]) -> Result<ProbeKernels> {
        if kinds.contains(&IndicatorKind::I1Prime) {
            return Err(Error::InvalidArgument(
                "i1prime needs a forward synthesizer; use indicator_i1prime".into(),
            ));
        }
        let need_uz = kinds.iter().any(|k| matches!(k, IndicatorKind::I1 | IndicatorKind::I2));
        let need_gz = kinds.iter().any(|k| matches!(k, IndicatorKind::I2 | IndicatorKind::I3));
        self.check_probe(z, need_uz)?;
        let gz = if need_gz { Some(self.gz_spectra(z)?) } else { None };
        let (uz, n_uz_uz) = if need_uz {
            let uz = self.uz_spectra(z)?;
            let n = self.self_norm(&uz);
            (Some(uz), n)
        } else {
            (None, 0.0)
        };
        Ok(ProbeKernels { gz, uz, n_uz_uz })
    }

    fn norms_from(&self, k: &ProbeKernels) -> ProbeNorms {
        let ni = self.data.sources.len();
        ProbeNorms {
            n_u_gz: k.gz.as_ref().map_or(0.0, |g| self.norm_with(|i, _| &g[i])),
            n_u_uz: k.uz.as_ref().map_or(0.0, |uz| self.norm_with(|i, j| &uz[i * ni + j])),
            n_uz_uz: k.n_uz_uz,
        }
    }

    /// Norms needed for `kinds` at probe `z`.
    pub fn probe_norms(&self, z: &Point, kinds: &[IndicatorKind]) -> Result<ProbeNorms> {
        Ok(self.norms_from(&self.kernels(z, kinds)?))
    }

    fn same_acquisition(&self, other: &ConvNormCache) -> bool {
        let (a, b) = (&self.data, &other.data);
        self.pairing == other.pairing
            && a.shape() == b.shape()
            && a.dimension == b.dimension
            && a.time == b.time
            && a.signal == b.signal
            && a.medium == b.medium
            && a.sensors.points == b.sensors.points
            && a.sources.points == b.sources.points
            && a.spectral_params() == b.spectral_params()
    }

    /// `N_{K,K}` for a kernel given by its spectra.
    fn self_norm(&self, spectra: &[Vec<Complex64>]) -> f64 {
        let (nm, _, ni) = self.data.shape();
        let dt = self.data.time.dt();
        let mut acc = vec![Complex64::new(0.0, 0.0); self.engine.spectrum_len()];
        let mut total = 0.0;
        for j in 0..ni {
            acc.iter_mut().for_each(|c| *c = Complex64::new(0.0, 0.0));
            for i in 0..nm {
                let ds = self.data.sensors.weights[i];
                let pairs = acc.iter_mut().zip(&spectra[i * ni + j]);
                match self.pairing {
                    Pairing::Correlation => pairs.for_each(|(a, s)| a.re += ds * s.norm_sqr()),
                    Pairing::Convolution => pairs.for_each(|(a, s)| *a += ds * s * s),
                }
            }
            total += self.pair_energy(&mut acc, dt) * self.data.sources.weights[j];
        }
        total.sqrt()
    }

    fn ratio(&self, num: f64, den_kernel: f64) -> Result<f64> {
        if self.n_uu == 0.0 {
            return Err(Error::Degenerate("data norm N_uu vanishes".into()));
        }
        if den_kernel == 0.0 {
            return Ok(0.0);
        }
        Ok(num * num / (self.n_uu * den_kernel))
    }

    /// Values of `kinds` at probe `z`, in the order given.
    pub fn evaluate(&self, z: &Point, kinds: &[IndicatorKind]) -> Result<Vec<f64>> {
        self.values(&self.probe_norms(z, kinds)?, kinds)
    }

    fn values(&self, n: &ProbeNorms, kinds: &[IndicatorKind]) -> Result<Vec<f64>> {
        kinds
            .iter()
            .map(|k| match k {
                IndicatorKind::I1 => self.ratio(n.n_u_uz, n.n_uz_uz),
                IndicatorKind::I2 => self.ratio(n.n_u_gz, n.n_uz_uz),
                IndicatorKind::I3 => Ok(n.n_u_gz),
                IndicatorKind::I1Prime => unreachable!("rejected in kernels"),
            })
            .collect()
    }

    /// `N²_{u,v} / (N_{u,u} N_{v,v})` for a second data set `v` on the
    /// same acquisition geometry.
    pub fn cross_ratio(&self, other: &ScatteredDataSet) -> Result<f64> {
        if other.shape() != self.data.shape() {
            return Err(Error::InvalidArgument(format!(
                "data shapes differ: {:?} and {:?}",
                self.data.shape(),
                other.shape()
            )));
        }
        let ni = other.sources.len();
        let spectra: Vec<Vec<Complex64>> = (0..other.sensors.len())
            .flat_map(|i| (0..ni).map(move |j| (i, j)))
            .map(|(i, j)| self.engine.spectrum(&other.trace(i, j)))
            .collect();
        let cross = self.norm_with(|i, j| &spectra[i * ni + j]);
        let own = self.self_norm(&spectra);
        self.ratio(cross, own)
    }
}

pub fn indicator_i1(data: &ScatteredDataSet, z: &Point) -> Result<f64> {
    Ok(ConvNormCache::new(data)?.evaluate(z, &[IndicatorKind::I1])?[0])
}

pub fn indicator_i2(data: &ScatteredDataSet, z: &Point) -> Result<f64> {
    Ok(ConvNormCache::new(data)?.evaluate(z, &[IndicatorKind::I2])?[0])
}

pub fn indicator_i3(data: &ScatteredDataSet, z: &Point) -> Result<f64> {
    Ok(ConvNormCache::new(data)?.evaluate(z, &[IndicatorKind::I3])?[0])
}

/// `I1′(z)`, with `u_z` produced by `synth(z)` (the scatterer translated so
/// that its reference point sits at `z`).
pub fn indicator_i1prime<F>(data: &ScatteredDataSet, z: &Point, synth: F) -> Result<f64>
where
    F: Fn(&Point) -> Result<ScatteredDataSet>,
{
    let cache = ConvNormCache::new(data)?;
    cache.cross_ratio(&synth(z)?)
}

/// Literal evaluation of an indicator with direct convolution sums; the
/// reference for the accelerated path.
pub fn indicator_direct(data: &ScatteredDataSet, z: &Point, kind: IndicatorKind, pairing: Pairing) -> Result<f64> {
    let (nm, nt, ni) = data.shape();
    let dt = data.time.dt();
    let q = Quadrature2d::default();
    let plan = match data.dimension {
        Dimension::Two => Some(FrequencyPlan::new(&data.signal, &data.time, data.spectral_params())?),
        Dimension::Three => None,
    };
    let uz = |i: usize, j: usize| -> Result<Vec<f64>> {
        let (x, y) = (&data.sensors.points[i], &data.sources.points[j]);
        match &plan {
            Some(p) => {
                let lx = green2d_spectrum(p, distance(x, z), data.medium);
                let ly = green2d_spectrum(p, distance(y, z), data.medium);
                let mut scratch = vec![Complex64::new(0.0, 0.0); p.padded_len()];
                Ok(point_response_2d(p, &lx, &ly, 1.0, &mut scratch))
            }
            None => (0..nt)
                .map(|k| eval_uz(x, data.time.node(k), y, z, &data.signal, data.medium))
                .collect(),
        }
    };
    let gz = |i: usize| -> Result<Vec<f64>> {
        let x = &data.sensors.points[i];
        match data.dimension {
            Dimension::Three => (0..nt)
                .map(|k| eval_gz(x, data.time.node(k), z, &data.signal, data.medium, Dimension::Three))
                .collect(),
            Dimension::Two => {
                let r = distance(x, z);
                if r <= COINCIDENT {
                    return Err(Error::Coincident("probe coincides with a sensor".into()));
                }
                Ok((0..nt).map(|k| q.conv(r, data.time.node(k), &data.signal, data.medium.c)).collect())
            }
        }
    };
    let norm = |first: &dyn Fn(usize, usize) -> Result<Vec<f64>>,
                second: &dyn Fn(usize, usize) -> Result<Vec<f64>>|
     -> Result<f64> {
        let pair = |f: &[f64], g: &[f64]| match pairing {
            Pairing::Correlation => discrete_xcorr(f, g, dt),
            Pairing::Convolution => discrete_conv(f, g, dt),
        };
        let lags = match pairing {
            Pairing::Correlation => 2 * nt - 1,
            Pairing::Convolution => nt,
        };
        let mut per_source = Vec::with_capacity(ni);
        for j in 0..ni {
            let mut w = vec![0.0; lags];
            for i in 0..nm {
                let c = pair(&first(i, j)?, &second(i, j)?)?;
                for (a, b) in w.iter_mut().zip(c) {
                    *a += data.sensors.weights[i] * b;
                }
            }
            per_source.push(w);
        }
        norm_r_gamma(&per_source, dt, &data.sources.weights)
    };
    let u = |i: usize, j: usize| Ok(data.trace(i, j));
    let n_uu = norm(&u, &u)?;
    let ratio = |num: f64, den: f64| -> Result<f64> {
        if n_uu == 0.0 {
            return Err(Error::Degenerate("data norm N_uu vanishes".into()));
        }
        Ok(if den == 0.0 { 0.0 } else { num * num / (n_uu * den) })
    };
    match kind {
        IndicatorKind::I1 => ratio(norm(&u, &uz)?, norm(&uz, &uz)?),
        IndicatorKind::I2 => ratio(norm(&u, &|i, _| gz(i))?, norm(&uz, &uz)?),
        IndicatorKind::I3 => norm(&u, &|i, _| gz(i)),
        IndicatorKind::I1Prime => Err(Error::InvalidArgument(
            "i1prime needs a forward synthesizer".into(),
        )),
    }
}

/// Evaluates every indicator in `kinds` on every probe of `grid`, sharing
/// kernel evaluations between indicators. Probes coinciding with a sensor
/// or source are set to zero and flagged.
pub fn sweep_batch(
    data: &ScatteredDataSet,
    grid: &SamplingGrid,
    kinds: &[IndicatorKind],
) -> Result<Vec<IndicatorField>> {
    let cache = ConvNormCache::new(data)?;
    sweep_cached(&cache, grid, kinds)
}

pub fn sweep(data: &ScatteredDataSet, grid: &SamplingGrid, kind: IndicatorKind) -> Result<IndicatorField> {
    Ok(sweep_batch(data, grid, &[kind])?.remove(0))
}

fn probe_error(index: usize, z: &Point, e: Error) -> Error {
    Error::Probe {
        index,
        x: z[0],
        y: z[1],
        z: z[2],
        source: Box::new(e),
    }
}

/// As [`sweep_batch`] with a prepared cache.
pub fn sweep_cached(
    cache: &ConvNormCache,
    grid: &SamplingGrid,
    kinds: &[IndicatorKind],
) -> Result<Vec<IndicatorField>> {
    if kinds.is_empty() {
        return Ok(Vec::new());
    }
    let rows: Vec<Option<Vec<f64>>> = grid
        .points
        .par_iter()
        .enumerate()
        .map(|(idx, z)| match cache.evaluate(z, kinds) {
            Ok(v) => Ok(Some(v)),
            Err(Error::Coincident(_)) => Ok(None),
            Err(e) => Err(probe_error(idx, z, e)),
        })
        .collect::<Result<_>>()?;
    let flagged: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_none())
        .map(|(i, _)| i)
        .collect();
    Ok(kinds
        .iter()
        .enumerate()
        .map(|(col, kind)| {
            let values = rows
                .iter()
                .map(|r| r.as_ref().map_or(0.0, |v| v[col]))
                .collect();
            IndicatorField::new(grid.clone(), values, *kind, flagged.clone())
        })
        .collect())
}

/// Sweeps several data sets recorded on one acquisition (for example noise
/// realizations of the same experiment), computing each probe kernel once.
/// The result holds one set of fields per cache, in the order of `kinds`.
pub fn sweep_shared(
    caches: &[ConvNormCache],
    grid: &SamplingGrid,
    kinds: &[IndicatorKind],
) -> Result<Vec<Vec<IndicatorField>>> {
    let Some(first) = caches.first() else {
        return Ok(Vec::new());
    };
    if let Some(pos) = caches.iter().position(|c| !first.same_acquisition(c)) {
        return Err(Error::InvalidArgument(format!(
            "data set {pos} was recorded on a different acquisition"
        )));
    }
    if kinds.is_empty() {
        return Ok(vec![Vec::new(); caches.len()]);
    }
    let rows: Vec<Option<Vec<Vec<f64>>>> = grid
        .points
        .par_iter()
        .enumerate()
        .map(|(idx, z)| {
            let values = first.kernels(z, kinds).and_then(|k| {
                caches
                    .iter()
                    .map(|c| c.values(&c.norms_from(&k), kinds))
                    .collect::<Result<Vec<_>>>()
            });
            match values {
                Ok(v) => Ok(Some(v)),
                Err(Error::Coincident(_)) => Ok(None),
                Err(e) => Err(probe_error(idx, z, e)),
            }
        })
        .collect::<Result<_>>()?;
    let flagged: Vec<usize> = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_none())
        .map(|(i, _)| i)
        .collect();
    Ok((0..caches.len())
        .map(|d| {
            kinds
                .iter()
                .enumerate()
                .map(|(col, kind)| {
                    let values = rows
                        .iter()
                        .map(|r| r.as_ref().map_or(0.0, |v| v[d][col]))
                        .collect();
                    IndicatorField::new(grid.clone(), values, *kind, flagged.clone())
                })
                .collect()
        })
        .collect())
}

/// Sweep of `I1′`, synthesizing `u_z` at every probe.
pub fn sweep_i1prime<F>(
    data: &ScatteredDataSet,
    grid: &SamplingGrid,
    pairing: Pairing,
    synth: F,
) -> Result<IndicatorField>
where
    F: Fn(&Point) -> Result<ScatteredDataSet> + Sync,
{
    let cache = ConvNormCache::with_pairing(data, pairing)?;
    let rows: Vec<Option<f64>> = grid
        .points
        .par_iter()
        .enumerate()
        .map(|(idx, z)| match synth(z).and_then(|uz| cache.cross_ratio(&uz)) {
            Ok(v) => Ok(Some(v)),
            Err(Error::Coincident(_)) => Ok(None),
            Err(e) => Err(probe_error(idx, z, e)),
        })
        .collect::<Result<_>>()?;
    let flagged = rows
        .iter()
        .enumerate()
        .filter(|(_, r)| r.is_none())
        .map(|(i, _)| i)
        .collect();
    let values = rows.iter().map(|r| r.unwrap_or(0.0)).collect();
    Ok(IndicatorField::new(grid.clone(), values, IndicatorKind::I1Prime, flagged))
}
