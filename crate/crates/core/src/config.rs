//! Declarative run configuration.
//!
//! Configurations are TOML (or the equivalent JSON) documents. Every key
//! except `geometry.sensors` has a default; [`RunConfig::effective`] fills
//! them in and the resulting document is echoed into every output so a
//! run can be repeated from its own metadata.
//!
//! ```toml
//! [signal]
//! omega = 4.0
//! [time]
//! steps = 128            # terminal defaults to 25, or 15 for i3-only runs
//! [geometry]
//! dimension = 2
//! sensors = { count = 20, radius = 4.0 }
//! grid = { bounds = [[-2.6, 2.6], [-2.6, 2.6]], counts = [21, 21] }
//! scatterers = [{ shape = "point", center = [0.0, 0.0] }]
//! [forward]
//! model = "point_model"
//! noise = 0.05
//! seed = 7
//! [reconstruct]
//! indicators = ["i1", "i2", "i3"]
//! pairing = "correlation"  # or "convolution"
//! ```

use std::f64::consts::PI;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::forward::bie::BieParams;
use crate::forward::{ForwardModel, NoiseSpec, PointScatterer, ScattererConfig};
use crate::geometry::{
    make_boundary, make_circle_sensors, make_fibonacci_sphere_sensors, make_sampling_grid, SamplingGrid, Shape,
    SurfaceGeometry, POINT_RADIUS,
};
use crate::greenfn::Medium;
use crate::indicator::{IndicatorKind, Pairing};
use crate::signal::{SignalSpec, TimeGrid};
use crate::spectral::SpectralParams;
use crate::{Dimension, Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SignalSection {
    pub omega: f64,
    pub sigma: f64,
    pub t0: f64,
    pub causal: bool,
}

impl Default for SignalSection {
    fn default() -> Self {
        let s = SignalSpec::default();
        SignalSection {
            omega: s.omega,
            sigma: s.sigma,
            t0: s.t0,
            causal: s.causal,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct MediumSection {
    pub c: f64,
}

impl Default for MediumSection {
    fn default() -> Self {
        MediumSection { c: 1.0 }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TimeSection {
    pub terminal: Option<f64>,
    pub steps: usize,
}

impl Default for TimeSection {
    fn default() -> Self {
        TimeSection {
            terminal: None,
            steps: 128,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SensorLayout {
    Circle,
    Sphere,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SensorSection {
    pub layout: Option<SensorLayout>,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default)]
    pub aperture_start: f64,
    #[serde(default = "full_turn")]
    pub aperture_span: f64,
}

fn default_count() -> usize {
    20
}

fn default_radius() -> f64 {
    4.0
}

fn full_turn() -> f64 {
    2.0 * PI
}

impl Default for SensorSection {
    fn default() -> Self {
        SensorSection {
            layout: None,
            count: default_count(),
            radius: default_radius(),
            aperture_start: 0.0,
            aperture_span: full_turn(),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct GridSection {
    pub bounds: Option<Vec<[f64; 2]>>,
    pub counts: Option<Vec<usize>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScattererEntry {
    #[serde(default = "default_shape")]
    pub shape: Shape,
    pub center: Vec<f64>,
    #[serde(default = "one")]
    pub scale: f64,
    /// Scattering strength of a point-model entry.
    #[serde(default = "one")]
    pub strength: f64,
}

fn default_shape() -> Shape {
    Shape::Point
}

fn one() -> f64 {
    1.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GeometrySection {
    #[serde(default = "two")]
    pub dimension: u32,
    pub sensors: Option<SensorSection>,
    #[serde(default)]
    pub grid: GridSection,
    /// Defaults to one point scatterer at the origin.
    pub scatterers: Option<Vec<ScattererEntry>>,
}

fn two() -> u32 {
    2
}

fn origin_point(dim: usize) -> Vec<ScattererEntry> {
    vec![ScattererEntry {
        shape: Shape::Point,
        center: vec![0.0; dim],
        scale: 1.0,
        strength: 1.0,
    }]
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct BieSection {
    pub nodes_per_curve: usize,
    pub padding_factor: f64,
    pub freq_threshold: f64,
    pub damping: f64,
    pub coupling: Option<f64>,
}

impl Default for BieSection {
    fn default() -> Self {
        let s = SpectralParams::default();
        BieSection {
            nodes_per_curve: BieParams::default().nodes_per_curve,
            padding_factor: s.padding_factor,
            freq_threshold: s.freq_threshold,
            damping: s.damping,
            coupling: None,
        }
    }
}

impl BieSection {
    pub fn spectral(&self) -> SpectralParams {
        SpectralParams {
            padding_factor: self.padding_factor,
            freq_threshold: self.freq_threshold,
            damping: self.damping,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ForwardSection {
    pub model: ForwardModel,
    pub noise: f64,
    pub seed: u64,
    pub bie: BieSection,
}

impl Default for ForwardSection {
    fn default() -> Self {
        ForwardSection {
            model: ForwardModel::PointModel,
            noise: 0.0,
            seed: 0,
            bie: BieSection::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ReconstructSection {
    pub indicators: Vec<String>,
    /// Planes `axis=coord` exported from 3D fields, e.g. `"z=0.2"`.
    pub slices: Vec<String>,
    pub pairing: Pairing,
}

impl Default for ReconstructSection {
    fn default() -> Self {
        ReconstructSection {
            indicators: vec!["i1".into(), "i2".into(), "i3".into()],
            slices: Vec::new(),
            pairing: Pairing::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub signal: SignalSection,
    #[serde(default)]
    pub medium: MediumSection,
    #[serde(default)]
    pub time: TimeSection,
    pub geometry: Option<GeometrySection>,
    #[serde(default)]
    pub forward: ForwardSection,
    #[serde(default)]
    pub reconstruct: ReconstructSection,
}

/// Parses an axis-aligned plane such as `z=0.2` (also `x3=0.2` or `2=0.2`).
pub fn parse_slice(s: &str) -> Result<(usize, f64)> {
    let bad = || Error::InvalidArgument(format!("slice `{s}` is not of the form <axis>=<coord>"));
    let (axis, coord) = s.split_once('=').ok_or_else(bad)?;
    let axis = match axis.trim() {
        "x" | "x1" | "0" => 0,
        "y" | "x2" | "1" => 1,
        "z" | "x3" | "2" => 2,
        _ => return Err(bad()),
    };
    let coord = coord.trim().parse::<f64>().map_err(|_| bad())?;
    Ok((axis, coord))
}

fn check(cond: bool, path: &str, message: impl FnOnce() -> String) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::config(path, message()))
    }
}

impl RunConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::config("<document>", e.message().to_string()))
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config("<document>", e.to_string()))
    }

    /// Reads a `.json` or TOML file.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        if path.extension().is_some_and(|e| e == "json") {
            Self::from_json(&text)
        } else {
            Self::from_toml(&text)
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("config serializes")
    }

    fn geometry_section(&self) -> Result<&GeometrySection> {
        self.geometry
            .as_ref()
            .ok_or_else(|| Error::config("geometry", "missing section"))
    }

    pub fn dimension(&self) -> Result<Dimension> {
        let d = self.geometry_section()?.dimension;
        Dimension::from_u32(d).ok_or_else(|| Error::config("geometry.dimension", format!("must be 2 or 3, got {d}")))
    }

    pub fn indicators(&self) -> Result<Vec<IndicatorKind>> {
        check(!self.reconstruct.indicators.is_empty(), "reconstruct.indicators", || {
            "at least one indicator is required".into()
        })?;
        self.reconstruct
            .indicators
            .iter()
            .map(|s| {
                s.parse()
                    .map_err(|e: Error| Error::config("reconstruct.indicators", e.to_string()))
            })
            .collect()
    }

    /// The configuration with every default made explicit; fails with the
    /// path of the first invalid key.
    pub fn effective(&self) -> Result<RunConfig> {
        let mut c = self.clone();
        let dimension = c.dimension()?;
        let kinds = c.indicators()?;
        let dim = dimension.as_u32() as usize;
        if c.time.terminal.is_none() {
            let i3_only = kinds.iter().all(|k| *k == IndicatorKind::I3);
            c.time.terminal = Some(if i3_only { 15.0 } else { 25.0 });
        }
        let g = c.geometry.as_mut().expect("checked above");
        let sensors = g
            .sensors
            .as_mut()
            .ok_or_else(|| Error::config("geometry.sensors", "missing section"))?;
        if sensors.layout.is_none() {
            sensors.layout = Some(match dimension {
                Dimension::Two => SensorLayout::Circle,
                Dimension::Three => SensorLayout::Sphere,
            });
        }
        if g.grid.bounds.is_none() {
            let half = if dimension == Dimension::Two { 2.6 } else { 2.0 };
            g.grid.bounds = Some(vec![[-half, half]; dim]);
        }
        if g.grid.counts.is_none() {
            g.grid.counts = Some(vec![21; dim]);
        }
        if g.scatterers.is_none() {
            g.scatterers = Some(origin_point(dim));
        }
        c.validate()?;
        Ok(c)
    }

    fn validate(&self) -> Result<()> {
        let s = &self.signal;
        check(s.omega > 0.0 && s.omega.is_finite(), "signal.omega", || format!("must be positive, got {}", s.omega))?;
        check(s.sigma > 0.0 && s.sigma.is_finite(), "signal.sigma", || format!("must be positive, got {}", s.sigma))?;
        check(s.t0.is_finite(), "signal.t0", || "must be finite".into())?;
        check(self.medium.c > 0.0 && self.medium.c.is_finite(), "medium.c", || {
            format!("must be positive, got {}", self.medium.c)
        })?;
        let t = self.time.terminal.unwrap_or(1.0);
        check(t > 0.0 && t.is_finite(), "time.terminal", || format!("must be positive, got {t}"))?;
        check(self.time.steps > 0, "time.steps", || "must be positive".into())?;

        let dimension = self.dimension()?;
        let dim = dimension.as_u32() as usize;
        let g = self.geometry_section()?;
        let sensors = g
            .sensors
            .as_ref()
            .ok_or_else(|| Error::config("geometry.sensors", "missing section"))?;
        check(sensors.count >= 1, "geometry.sensors.count", || "must be positive".into())?;
        check(sensors.radius > 0.0 && sensors.radius.is_finite(), "geometry.sensors.radius", || {
            format!("must be positive, got {}", sensors.radius)
        })?;
        check(
            sensors.aperture_span > 0.0 && sensors.aperture_span <= 2.0 * PI + 1e-12,
            "geometry.sensors.aperture_span",
            || format!("must lie in (0, 2π], got {}", sensors.aperture_span),
        )?;
        match (dimension, sensors.layout) {
            (Dimension::Two, Some(SensorLayout::Sphere)) => {
                return Err(Error::config("geometry.sensors.layout", "a sphere layout needs dimension 3"))
            }
            (Dimension::Three, Some(SensorLayout::Sphere)) => check(sensors.count >= 2, "geometry.sensors.count", || {
                "a sphere layout needs at least 2 sensors".into()
            })?,
            _ => {}
        }
        if let Some(b) = &g.grid.bounds {
            check(b.len() == dim, "geometry.grid.bounds", || format!("needs {dim} axes, got {}", b.len()))?;
            check(b.iter().all(|[lo, hi]| lo < hi), "geometry.grid.bounds", || "each axis needs lo < hi".into())?;
        }
        if let Some(n) = &g.grid.counts {
            check(n.len() == dim, "geometry.grid.counts", || format!("needs {dim} axes, got {}", n.len()))?;
            check(n.iter().all(|n| *n >= 2), "geometry.grid.counts", || "each axis needs at least 2 points".into())?;
        }
        for (m, e) in g.scatterers.iter().flatten().enumerate() {
            let path = format!("geometry.scatterers[{m}]");
            check(e.center.len() == dim, &format!("{path}.center"), || {
                format!("needs {dim} coordinates, got {}", e.center.len())
            })?;
            check(e.scale > 0.0 && e.scale.is_finite(), &format!("{path}.scale"), || "must be positive".into())?;
            check(e.strength.is_finite(), &format!("{path}.strength"), || "must be finite".into())?;
            match self.forward.model {
                ForwardModel::PointModel => check(e.shape == Shape::Point, &format!("{path}.shape"), || {
                    format!("the point model only accepts point scatterers, got {}", e.shape)
                })?,
                ForwardModel::Bie2d => check(dimension == Dimension::Two, "forward.model", || {
                    "bie_2d needs dimension 2".into()
                })?,
            }
        }
        let f = &self.forward;
        check(f.noise >= 0.0 && f.noise.is_finite(), "forward.noise", || format!("must be non-negative, got {}", f.noise))?;
        check(f.bie.nodes_per_curve >= 8, "forward.bie.nodes_per_curve", || "must be at least 8".into())?;
        f.bie
            .spectral()
            .validate()
            .map_err(|e| Error::config("forward.bie", e.to_string()))?;
        for s in &self.reconstruct.slices {
            parse_slice(s).map_err(|e| Error::config("reconstruct.slices", e.to_string()))?;
        }
        Ok(())
    }

    /// Fully resolved objects for a run.
    pub fn build(&self) -> Result<RunSetup> {
        let c = self.effective()?;
        let dimension = c.dimension()?;
        let g = c.geometry.as_ref().expect("validated");
        let s = g.sensors.as_ref().expect("validated");
        let at = |path: &'static str| move |e: Error| Error::config(path, e.to_string());
        let sensors = match s.layout.expect("defaulted") {
            SensorLayout::Circle => make_circle_sensors(s.count, s.radius, s.aperture_start, s.aperture_span),
            SensorLayout::Sphere => make_fibonacci_sphere_sensors(s.count, s.radius),
        }
        .map_err(at("geometry.sensors"))?;
        let bounds: Vec<(f64, f64)> = g.grid.bounds.as_ref().unwrap().iter().map(|b| (b[0], b[1])).collect();
        let grid = make_sampling_grid(&bounds, g.grid.counts.as_ref().unwrap()).map_err(at("geometry.grid"))?;
        let nodes = c.forward.bie.nodes_per_curve;
        let mut scatterers = ScattererConfig {
            model: c.forward.model,
            boundaries: Vec::new(),
            points: Vec::new(),
        };
        for e in g.scatterers.as_ref().unwrap() {
            let mut center = [0.0; 3];
            center[..e.center.len()].copy_from_slice(&e.center);
            match c.forward.model {
                ForwardModel::PointModel => scatterers.points.push(PointScatterer {
                    center,
                    strength: e.strength,
                    diameter: 2.0 * POINT_RADIUS * e.scale,
                }),
                ForwardModel::Bie2d => scatterers.boundaries.push(
                    make_boundary(e.shape, [center[0], center[1]], e.scale, nodes)
                        .map_err(at("geometry.scatterers"))?,
                ),
            }
        }
        let signal = SignalSpec::new(c.signal.omega, c.signal.sigma, c.signal.t0)
            .map_err(at("signal"))?
            .with_causal(c.signal.causal);
        let medium = Medium::new(c.medium.c).map_err(at("medium.c"))?;
        let time = TimeGrid::new(c.time.terminal.expect("defaulted"), c.time.steps).map_err(at("time"))?;
        let bie = BieParams {
            nodes_per_curve: nodes,
            spectral: c.forward.bie.spectral(),
            coupling: c.forward.bie.coupling,
            ..BieParams::default()
        };
        let noise = NoiseSpec {
            level: c.forward.noise,
            seed: c.forward.seed,
        };
        let indicators = c.indicators()?;
        let slices = c
            .reconstruct
            .slices
            .iter()
            .map(|s| parse_slice(s))
            .collect::<Result<_>>()?;
        Ok(RunSetup {
            dimension,
            signal,
            medium,
            time,
            sensors,
            grid,
            scatterers,
            bie,
            noise,
            indicators,
            slices,
            pairing: c.reconstruct.pairing,
            effective: c,
        })
    }
}

/// Resolved run inputs.
#[derive(Debug, Clone)]
pub struct RunSetup {
    pub dimension: Dimension,
    pub signal: SignalSpec,
    pub medium: Medium,
    pub time: TimeGrid,
    /// Sensors; the sources coincide with them.
    pub sensors: SurfaceGeometry,
    pub grid: SamplingGrid,
    pub scatterers: ScattererConfig,
    pub bie: BieParams,
    pub noise: NoiseSpec,
    pub indicators: Vec<IndicatorKind>,
    pub slices: Vec<(usize, f64)>,
    pub pairing: Pairing,
    pub effective: RunConfig,
}
