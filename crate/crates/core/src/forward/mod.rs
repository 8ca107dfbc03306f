//! Synthesis of scattered-field data sets.

pub mod bie;

use std::collections::BTreeMap;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bessel::hankel0_complex;
use crate::geometry::{BoundaryCurve, SurfaceGeometry};
use crate::greenfn::{eval_uz, Medium};
use crate::signal::{SignalSpec, TimeGrid};
use crate::spectral::{FrequencyPlan, SpectralParams};
use crate::{distance, Dimension, Error, Point, Result};

pub use bie::{synth_bie_2d, BieParams};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ForwardModel {
    PointModel,
    #[serde(rename = "bie_2d")]
    Bie2d,
}

impl ForwardModel {
    pub fn name(self) -> &'static str {
        match self {
            ForwardModel::PointModel => "point_model",
            ForwardModel::Bie2d => "bie_2d",
        }
    }
}

/// Point-like scatterer: center, scattering strength (the constant `C`)
/// and physical diameter.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PointScatterer {
    pub center: Point,
    pub strength: f64,
    pub diameter: f64,
}

impl PointScatterer {
    pub fn new(center: Point) -> Self {
        PointScatterer {
            center,
            strength: 1.0,
            diameter: 2.0 * crate::geometry::POINT_RADIUS,
        }
    }

    pub fn with_strength(mut self, strength: f64) -> Self {
        self.strength = strength;
        self
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ScattererConfig {
    pub model: ForwardModel,
    pub boundaries: Vec<BoundaryCurve>,
    pub points: Vec<PointScatterer>,
}

impl ScattererConfig {
    /// Checks the point-like regime; returns warnings for scatterers whose
    /// diameter is not small against the center wavelength.
    pub fn validate(&self, signal: &SignalSpec, medium: Medium) -> Result<Vec<String>> {
        let mut warnings = Vec::new();
        match self.model {
            ForwardModel::PointModel => {
                let limit = 0.1 * signal.center_wavelength(medium.c);
                for p in &self.points {
                    if !p.strength.is_finite() {
                        return Err(Error::InvalidArgument("scatterer strength must be finite".into()));
                    }
                    if p.diameter >= limit {
                        warnings.push(format!(
                            "scatterer at ({}, {}, {}) has diameter {:.4} >= {:.4}; point model is not accurate",
                            p.center[0], p.center[1], p.center[2], p.diameter, limit
                        ));
                    }
                }
            }
            ForwardModel::Bie2d => {
                for (a, ca) in self.boundaries.iter().enumerate() {
                    for cb in &self.boundaries[a + 1..] {
                        if ca.nodes.iter().any(|n| cb.contains(*n))
                            || cb.nodes.iter().any(|n| ca.contains(*n))
                        {
                            return Err(Error::InvalidArgument(format!(
                                "{} and {} boundaries intersect",
                                ca.shape, cb.shape
                            )));
                        }
                    }
                }
            }
        }
        Ok(warnings)
    }
}

/// `u(x_i, t_k; y_j)` for all sensors `i`, time nodes `k` and sources `j`,
/// stored with `i` slowest and `j` fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct ScatteredDataSet {
    pub dimension: Dimension,
    pub sensors: SurfaceGeometry,
    pub sources: SurfaceGeometry,
    pub time: TimeGrid,
    pub signal: SignalSpec,
    pub medium: Medium,
    pub values: Vec<f64>,
    pub metadata: BTreeMap<String, String>,
}

impl ScatteredDataSet {
    pub fn zeros(
        dimension: Dimension,
        sensors: SurfaceGeometry,
        sources: SurfaceGeometry,
        time: TimeGrid,
        signal: SignalSpec,
        medium: Medium,
    ) -> Self {
        let n = sensors.len() * time.len() * sources.len();
        let mut data = ScatteredDataSet {
            dimension,
            sensors,
            sources,
            time,
            signal,
            medium,
            values: vec![0.0; n],
            metadata: BTreeMap::new(),
        };
        data.record_physics();
        data
    }

    fn record_physics(&mut self) {
        let m = &mut self.metadata;
        m.insert("omega".into(), format!("{:?}", self.signal.omega));
        m.insert("sigma".into(), format!("{:?}", self.signal.sigma));
        m.insert("t0".into(), format!("{:?}", self.signal.t0));
        m.insert("causal".into(), self.signal.causal.to_string());
        m.insert("c".into(), format!("{:?}", self.medium.c));
    }

    /// `(N_m, N_t + 1, N_i)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.sensors.len(), self.time.len(), self.sources.len())
    }

    #[inline]
    pub fn index(&self, i: usize, k: usize, j: usize) -> usize {
        (i * self.time.len() + k) * self.sources.len() + j
    }

    pub fn get(&self, i: usize, k: usize, j: usize) -> f64 {
        self.values[self.index(i, k, j)]
    }

    /// Time trace for sensor `i` and source `j`.
    pub fn trace(&self, i: usize, j: usize) -> Vec<f64> {
        (0..self.time.len()).map(|k| self.get(i, k, j)).collect()
    }

    pub fn set_trace(&mut self, i: usize, j: usize, trace: &[f64]) {
        for (k, v) in trace.iter().enumerate() {
            let idx = self.index(i, k, j);
            self.values[idx] = *v;
        }
    }

    pub fn max_abs(&self) -> f64 {
        self.values.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Frequency synthesis parameters recorded with the data, or defaults.
    pub fn spectral_params(&self) -> SpectralParams {
        let d = SpectralParams::default();
        let get = |key: &str, fallback: f64| {
            self.metadata
                .get(key)
                .and_then(|v| v.parse::<f64>().ok())
                .unwrap_or(fallback)
        };
        SpectralParams {
            padding_factor: get("spectral.padding_factor", d.padding_factor),
            freq_threshold: get("spectral.freq_threshold", d.freq_threshold),
            damping: get("spectral.damping", d.damping),
        }
    }

    pub fn set_spectral_params(&mut self, p: SpectralParams) {
        self.metadata
            .insert("spectral.padding_factor".into(), format!("{:?}", p.padding_factor));
        self.metadata
            .insert("spectral.freq_threshold".into(), format!("{:?}", p.freq_threshold));
        self.metadata
            .insert("spectral.damping".into(), format!("{:?}", p.damping));
    }

    /// Scales every value by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Self {
        let mut out = self.clone();
        out.values.iter_mut().for_each(|v| *v *= alpha);
        out
    }

    /// Delays every trace by `shift` time steps, zero-filling the start and
    /// dropping samples past `T`.
    pub fn shifted(&self, shift: usize) -> Self {
        let mut out = self.clone();
        let nt = self.time.len();
        for i in 0..self.sensors.len() {
            for j in 0..self.sources.len() {
                for k in 0..nt {
                    let v = if k >= shift { self.get(i, k - shift, j) } else { 0.0 };
                    let idx = out.index(i, k, j);
                    out.values[idx] = v;
                }
            }
        }
        out
    }
}

/// `(i/4) H₀⁽¹⁾(ω r / c)` at every retained (complex) frequency of `plan`.
pub fn green2d_spectrum(plan: &FrequencyPlan, r: f64, medium: Medium) -> Vec<Complex64> {
    let quarter_i = Complex64::new(0.0, 0.25);
    plan.frequencies()
        .iter()
        .map(|w| quarter_i * hankel0_complex(w * (r / medium.c)))
        .collect()
}

/// 2D point-scatterer response `−C (G₂(x,·;z) ∗ G₂(z,·;y) ∗ λ)(t)` from the
/// two single-leg spectra `(i/4)H₀(k|x−z|)` and `(i/4)H₀(k|y−z|)`.
pub fn point_response_2d(
    plan: &FrequencyPlan,
    leg_x: &[Complex64],
    leg_y: &[Complex64],
    strength: f64,
    scratch: &mut [Complex64],
) -> Vec<f64> {
    let transfer: Vec<Complex64> = leg_x
        .iter()
        .zip(leg_y)
        .map(|(a, b)| -strength * a * b)
        .collect();
    let mut trace = plan.synthesize_into(&transfer, scratch);
    trace[0] = 0.0;
    trace
}

/// Data generated by point-like scatterers under single scattering: the
/// superposition of `C_m U_{y_m}` over all scatterers (3D), or of the 2D
/// double-travel analogue built from [`point_response_2d`].
#[allow(clippy::too_many_arguments)]
pub fn synth_point_model(
    points: &[PointScatterer],
    sensors: &SurfaceGeometry,
    sources: &SurfaceGeometry,
    time: TimeGrid,
    signal: SignalSpec,
    medium: Medium,
    dimension: Dimension,
    spectral: SpectralParams,
) -> Result<ScatteredDataSet> {
    signal.validate()?;
    for p in points {
        for s in sensors.points.iter().chain(&sources.points) {
            if distance(&p.center, s) <= 1e-12 {
                return Err(Error::Coincident(format!(
                    "scatterer at ({}, {}, {}) coincides with a sensor or source",
                    p.center[0], p.center[1], p.center[2]
                )));
            }
        }
    }
    let mut data = ScatteredDataSet::zeros(
        dimension,
        sensors.clone(),
        sources.clone(),
        time,
        signal,
        medium,
    );
    data.metadata.insert("model".into(), ForwardModel::PointModel.name().into());
    data.metadata.insert(
        "scatterers".into(),
        serde_json::to_string(points).expect("point scatterers serialize"),
    );
    data.set_spectral_params(spectral);
    let (nm, nt, ni) = data.shape();
    match dimension {
        Dimension::Three => {
            for i in 0..nm {
                for k in 0..nt {
                    let t = time.node(k);
                    for j in 0..ni {
                        let mut v = 0.0;
                        for p in points {
                            v += p.strength
                                * eval_uz(&sensors.points[i], t, &sources.points[j], &p.center, &signal, medium)?;
                        }
                        let idx = data.index(i, k, j);
                        data.values[idx] = v;
                    }
                }
            }
        }
        Dimension::Two => {
            let plan = FrequencyPlan::new(&signal, &time, spectral)?;
            let mut scratch = vec![Complex64::new(0.0, 0.0); plan.padded_len()];
            for p in points {
                let legs_x: Vec<Vec<Complex64>> = sensors
                    .points
                    .iter()
                    .map(|x| green2d_spectrum(&plan, distance(x, &p.center), medium))
                    .collect();
                let legs_y: Vec<Vec<Complex64>> = sources
                    .points
                    .iter()
                    .map(|y| green2d_spectrum(&plan, distance(y, &p.center), medium))
                    .collect();
                for i in 0..nm {
                    for j in 0..ni {
                        let tr = point_response_2d(&plan, &legs_x[i], &legs_y[j], p.strength, &mut scratch);
                        for (k, v) in tr.iter().enumerate() {
                            let idx = data.index(i, k, j);
                            data.values[idx] += v;
                        }
                    }
                }
            }
        }
    }
    Ok(data)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NoiseSpec {
    pub level: f64,
    pub seed: u64,
}

/// Multiplicative uniform noise `u (1 + ε r)`, `r ~ U[-1, 1]` per sample,
/// drawn in storage order from a seeded ChaCha8 stream.
pub fn add_noise(data: &ScatteredDataSet, noise: NoiseSpec) -> Result<ScatteredDataSet> {
    if !(noise.level >= 0.0 && noise.level.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "noise level must be non-negative, got {}",
            noise.level
        )));
    }
    let mut out = data.clone();
    out.metadata.insert("noise_level".into(), format!("{:?}", noise.level));
    if noise.level == 0.0 {
        out.metadata.remove("noise_seed");
        return Ok(out);
    }
    out.metadata.insert("noise_seed".into(), noise.seed.to_string());
    let mut rng = ChaCha8Rng::seed_from_u64(noise.seed);
    for v in out.values.iter_mut() {
        let r: f64 = rng.gen_range(-1.0..=1.0);
        *v *= 1.0 + noise.level * r;
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_circle_sensors, make_fibonacci_sphere_sensors};
    use std::f64::consts::PI;

    fn setup2d() -> (SurfaceGeometry, TimeGrid) {
        (
            make_circle_sensors(8, 4.0, 0.0, 2.0 * PI).unwrap(),
            TimeGrid::new(25.0, 128).unwrap(),
        )
    }

    #[test]
    fn three_d_point_model_is_uz() {
        let s = make_fibonacci_sphere_sensors(6, 4.0).unwrap();
        let time = TimeGrid::new(19.0, 64).unwrap();
        let sig = SignalSpec::default();
        let c = [0.4, -0.8, 0.2];
        let p = PointScatterer::new(c);
        let d = synth_point_model(&[p], &s, &s, time, sig, Medium::default(), Dimension::Three, SpectralParams::default()).unwrap();
        assert_eq!(d.shape(), (6, 65, 6));
        for i in 0..6 {
            for k in 0..65 {
                for j in 0..6 {
                    let u = eval_uz(&s.points[i], time.node(k), &s.points[j], &c, &sig, Medium::default()).unwrap();
                    assert_eq!(d.get(i, k, j), u);
                }
            }
        }
        let d2 = synth_point_model(&[p.with_strength(2.0)], &s, &s, time, sig, Medium::default(), Dimension::Three, SpectralParams::default()).unwrap();
        for (a, b) in d.values.iter().zip(&d2.values) {
            assert_eq!(2.0 * a, *b);
        }
    }

    #[test]
    fn superposition_and_linearity_2d() {
        let (s, time) = setup2d();
        let sig = SignalSpec::default();
        let m = Medium::default();
        let sp = SpectralParams::default();
        let a = PointScatterer::new([-1.0, -1.0, 0.0]);
        let b = PointScatterer::new([1.0, 1.5, 0.0]);
        let da = synth_point_model(&[a], &s, &s, time, sig, m, Dimension::Two, sp).unwrap();
        let db = synth_point_model(&[b], &s, &s, time, sig, m, Dimension::Two, sp).unwrap();
        let dab = synth_point_model(&[a, b], &s, &s, time, sig, m, Dimension::Two, sp).unwrap();
        let peak = dab.max_abs();
        for ((x, y), z) in da.values.iter().zip(&db.values).zip(&dab.values) {
            assert!((x + y - z).abs() <= 1e-14 * peak);
        }
        let d2 = synth_point_model(&[a.with_strength(2.0)], &s, &s, time, sig, m, Dimension::Two, sp).unwrap();
        for (x, y) in da.values.iter().zip(&d2.values) {
            assert!((2.0 * x - y).abs() <= 1e-14 * peak);
        }
    }

    #[test]
    fn point_model_2d_is_causal() {
        let (s, time) = setup2d();
        let z = [0.7, -0.3, 0.0];
        let d = synth_point_model(
            &[PointScatterer::new(z)],
            &s,
            &s,
            time,
            SignalSpec::default(),
            Medium::default(),
            Dimension::Two,
            SpectralParams::default(),
        )
        .unwrap();
        for i in 0..s.len() {
            for j in 0..s.len() {
                let tr = d.trace(i, j);
                assert_eq!(tr[0], 0.0);
                let peak = tr.iter().fold(0.0f64, |m, v| m.max(v.abs()));
                let arrival = distance(&s.points[i], &z) + distance(&s.points[j], &z);
                for (k, v) in tr.iter().enumerate() {
                    if time.node(k) < arrival {
                        assert!(v.abs() < 1e-3 * peak, "pre-arrival {v} vs {peak}");
                    }
                }
            }
        }
    }

    #[test]
    fn coincident_center_rejected() {
        let (s, time) = setup2d();
        let p = PointScatterer::new(s.points[3]);
        let r = synth_point_model(&[p], &s, &s, time, SignalSpec::default(), Medium::default(), Dimension::Two, SpectralParams::default());
        assert!(matches!(r, Err(Error::Coincident(_))));
    }

    #[test]
    fn noise_contract() {
        let s = make_fibonacci_sphere_sensors(5, 4.0).unwrap();
        let time = TimeGrid::new(19.0, 40).unwrap();
        let d = synth_point_model(&[PointScatterer::new([0.1, 0.2, 0.3])], &s, &s, time, SignalSpec::default(), Medium::default(), Dimension::Three, SpectralParams::default()).unwrap();
        let zero = add_noise(&d, NoiseSpec { level: 0.0, seed: 9 }).unwrap();
        assert!(zero.values.iter().zip(&d.values).all(|(a, b)| a.to_bits() == b.to_bits()));
        let n1 = add_noise(&d, NoiseSpec { level: 0.05, seed: 3 }).unwrap();
        let n2 = add_noise(&d, NoiseSpec { level: 0.05, seed: 3 }).unwrap();
        assert_eq!(n1.values, n2.values);
        let n3 = add_noise(&d, NoiseSpec { level: 0.05, seed: 4 }).unwrap();
        assert_ne!(n1.values, n3.values);
        for (a, b) in n1.values.iter().zip(&d.values) {
            assert!((a - b).abs() <= 0.05 * b.abs() + 1e-300);
        }
        assert!(add_noise(&d, NoiseSpec { level: -0.1, seed: 0 }).is_err());
    }

    #[test]
    fn diameter_warning() {
        let sig = SignalSpec::default();
        let cfg = ScattererConfig {
            model: ForwardModel::PointModel,
            boundaries: vec![],
            points: vec![PointScatterer { center: [0.0; 3], strength: 1.0, diameter: 0.5 }],
        };
        assert_eq!(cfg.validate(&sig, Medium::default()).unwrap().len(), 1);
        let cfg = ScattererConfig {
            points: vec![PointScatterer::new([0.0; 3])],
            ..cfg
        };
        assert!(cfg.validate(&sig, Medium::default()).unwrap().is_empty());
    }

    #[test]
    fn shift_and_scale_helpers() {
        let s = make_fibonacci_sphere_sensors(3, 4.0).unwrap();
        let time = TimeGrid::new(19.0, 30).unwrap();
        let d = synth_point_model(&[PointScatterer::new([0.1, 0.2, 0.3])], &s, &s, time, SignalSpec::default(), Medium::default(), Dimension::Three, SpectralParams::default()).unwrap();
        let sh = d.shifted(2);
        assert_eq!(sh.get(1, 0, 2), 0.0);
        assert_eq!(sh.get(1, 7, 2), d.get(1, 5, 2));
        let sc = d.scaled(-3.0);
        assert_eq!(sc.get(2, 9, 0), -3.0 * d.get(2, 9, 0));
    }
}
