//! Scatterer boundaries, sensor surfaces and sampling grids.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::{distance, Dimension, Error, Point, Result};

/// Radius of the reference point-like scatterer.
pub const POINT_RADIUS: f64 = 0.001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Shape {
    Point,
    Circle,
    Kite,
    Starfish,
    Acorn,
    RoundedSquare,
    Peanut,
}

impl Shape {
    pub const ALL: [Shape; 7] = [
        Shape::Point,
        Shape::Circle,
        Shape::Kite,
        Shape::Starfish,
        Shape::Acorn,
        Shape::RoundedSquare,
        Shape::Peanut,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Shape::Point => "point",
            Shape::Circle => "circle",
            Shape::Kite => "kite",
            Shape::Starfish => "starfish",
            Shape::Acorn => "acorn",
            Shape::RoundedSquare => "rounded_square",
            Shape::Peanut => "peanut",
        }
    }

    /// Unscaled profile at `theta` together with its first and second
    /// derivatives, relative to the curve center.
    pub fn profile(self, theta: f64) -> [[f64; 2]; 3] {
        let (s, c) = theta.sin_cos();
        match self {
            Shape::Point => radial(theta, POINT_RADIUS, 0.0, 0.0),
            Shape::Circle => radial(theta, 1.5, 0.0, 0.0),
            Shape::Starfish => {
                let (s5, c5) = (5.0 * theta).sin_cos();
                radial(theta, 1.0 + 0.2 * c5, -s5, -5.0 * c5)
            }
            Shape::Acorn => {
                let (s3, c3) = (3.0 * theta).sin_cos();
                let g = 17.0 / 4.0 + 2.0 * c3;
                let g1 = -6.0 * s3;
                let g2 = -18.0 * c3;
                let sq = g.sqrt();
                let r = 0.84 * sq;
                let r1 = 0.84 * g1 / (2.0 * sq);
                let r2 = 0.84 * (g2 / (2.0 * sq) - g1 * g1 / (4.0 * g * sq));
                radial(theta, r, r1, r2)
            }
            Shape::Peanut => {
                // 4cos²θ + sin²θ = 5/2 + (3/2) cos 2θ
                let (s2, c2) = (2.0 * theta).sin_cos();
                let g = 2.5 + 1.5 * c2;
                let g1 = -3.0 * s2;
                let g2 = -6.0 * c2;
                let sq = g.sqrt();
                let a = 5.0 / 12.0;
                let r = a * sq;
                let r1 = a * g1 / (2.0 * sq);
                let r2 = a * (g2 / (2.0 * sq) - g1 * g1 / (4.0 * g * sq));
                radial(theta, r, r1, r2)
            }
            Shape::Kite => {
                let (s2, c2) = (2.0 * theta).sin_cos();
                [
                    [c + 0.65 * c2 - 0.65, 1.5 * s],
                    [-s - 1.3 * s2, 1.5 * c],
                    [-c - 2.6 * c2, -1.5 * s],
                ]
            }
            Shape::RoundedSquare => {
                let (c3, s3) = (c * c * c, s * s * s);
                let k = FRAC_1_SQRT_2;
                let p = [k * (c3 + s3 + c + s), k * (-c3 + s3 - c + s)];
                let a = -3.0 * c * c * s;
                let b = 3.0 * s * s * c;
                let d1 = [k * (a + b - s + c), k * (-a + b + s + c)];
                let a2 = -3.0 * (c3 - 2.0 * c * s * s);
                let b2 = 3.0 * (2.0 * s * c * c - s3);
                let d2 = [k * (a2 + b2 - c - s), k * (-a2 + b2 + c - s)];
                [p, d1, d2]
            }
        }
    }
}

fn radial(theta: f64, r: f64, r1: f64, r2: f64) -> [[f64; 2]; 3] {
    let (s, c) = theta.sin_cos();
    [
        [r * c, r * s],
        [r1 * c - r * s, r1 * s + r * c],
        [r2 * c - 2.0 * r1 * s - r * c, r2 * s + 2.0 * r1 * c - r * s],
    ]
}

impl fmt::Display for Shape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Shape {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Shape::ALL
            .into_iter()
            .find(|sh| sh.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown shape `{s}`")))
    }
}

/// Closed planar curve `s(θ) = center + scale · profile(θ)` sampled at
/// `θ_m = 2π m / n`.
#[derive(Debug, Clone, PartialEq)]
pub struct BoundaryCurve {
    pub shape: Shape,
    pub center: [f64; 2],
    pub scale: f64,
    pub nodes: Vec<[f64; 2]>,
}

impl BoundaryCurve {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn theta(&self, m: usize) -> f64 {
        2.0 * PI * m as f64 / self.nodes.len() as f64
    }

    /// Position, first and second parameter derivatives at `theta`.
    pub fn eval(&self, theta: f64) -> [[f64; 2]; 3] {
        let [p, d1, d2] = self.shape.profile(theta);
        [
            [self.center[0] + self.scale * p[0], self.center[1] + self.scale * p[1]],
            [self.scale * d1[0], self.scale * d1[1]],
            [self.scale * d2[0], self.scale * d2[1]],
        ]
    }

    pub fn diameter(&self) -> f64 {
        let mut d: f64 = 0.0;
        for (i, a) in self.nodes.iter().enumerate() {
            for b in &self.nodes[i + 1..] {
                d = d.max(((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt());
            }
        }
        d
    }

    /// Shoelace area of the node polygon; positive for counterclockwise curves.
    pub fn signed_area(&self) -> f64 {
        let n = self.nodes.len();
        (0..n)
            .map(|i| {
                let a = self.nodes[i];
                let b = self.nodes[(i + 1) % n];
                a[0] * b[1] - a[1] * b[0]
            })
            .sum::<f64>()
            / 2.0
    }

    /// Even-odd point-in-polygon test against the node polygon.
    pub fn contains(&self, p: [f64; 2]) -> bool {
        let n = self.nodes.len();
        let mut inside = false;
        let mut j = n - 1;
        for i in 0..n {
            let (a, b) = (self.nodes[i], self.nodes[j]);
            if (a[1] > p[1]) != (b[1] > p[1])
                && p[0] < (b[0] - a[0]) * (p[1] - a[1]) / (b[1] - a[1]) + a[0]
            {
                inside = !inside;
            }
            j = i;
        }
        inside
    }
}

pub fn make_boundary(shape: Shape, center: [f64; 2], scale: f64, n: usize) -> Result<BoundaryCurve> {
    if n < 8 {
        return Err(Error::InvalidArgument(format!(
            "boundary needs at least 8 nodes, got {n}"
        )));
    }
    if !(scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!("scale must be positive, got {scale}")));
    }
    if shape == Shape::Point && 2.0 * POINT_RADIUS * scale > 0.2 {
        return Err(Error::InvalidArgument(format!(
            "point scatterer diameter {} exceeds 0.2",
            2.0 * POINT_RADIUS * scale
        )));
    }
    let mut curve = BoundaryCurve {
        shape,
        center,
        scale,
        nodes: Vec::with_capacity(n),
    };
    for m in 0..n {
        let theta = 2.0 * PI * m as f64 / n as f64;
        curve.nodes.push(curve.eval(theta)[0]);
    }
    Ok(curve)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Aperture {
    /// Whole circle.
    Full,
    /// Closed arc starting at `start` and spanning `span` radians.
    Arc { start: f64, span: f64 },
    /// Whole sphere.
    Sphere,
}

/// Sensor (or source) positions with per-point quadrature weights.
#[derive(Debug, Clone, PartialEq)]
pub struct SurfaceGeometry {
    pub dimension: Dimension,
    pub points: Vec<Point>,
    pub weights: Vec<f64>,
    pub aperture: Aperture,
}

impl SurfaceGeometry {
    pub fn new(
        dimension: Dimension,
        points: Vec<Point>,
        weights: Vec<f64>,
        aperture: Aperture,
    ) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidArgument("surface needs at least one point".into()));
        }
        if points.len() != weights.len() {
            return Err(Error::InvalidArgument(format!(
                "{} points but {} weights",
                points.len(),
                weights.len()
            )));
        }
        if weights.iter().any(|w| !(*w > 0.0 && w.is_finite())) {
            return Err(Error::InvalidArgument("surface weights must be positive".into()));
        }
        Ok(SurfaceGeometry {
            dimension,
            points,
            weights,
            aperture,
        })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn total_weight(&self) -> f64 {
        self.weights.iter().sum()
    }

    /// Dense sampling of the continuous surface the sensors are drawn from
    /// (circle, arc or sphere centered at the origin).
    pub fn continuous_samples(&self) -> Vec<Point> {
        let radius = distance(&self.points[0], &[0.0; 3]);
        match self.aperture {
            Aperture::Full => (0..3600)
                .map(|m| {
                    let th = 2.0 * PI * m as f64 / 3600.0;
                    [radius * th.cos(), radius * th.sin(), 0.0]
                })
                .collect(),
            Aperture::Arc { start, span } => (0..=3600)
                .map(|m| {
                    let th = start + span * m as f64 / 3600.0;
                    [radius * th.cos(), radius * th.sin(), 0.0]
                })
                .collect(),
            Aperture::Sphere => make_fibonacci_sphere_sensors(20_000, radius)
                .map(|s| s.points)
                .unwrap_or_else(|_| self.points.clone()),
        }
    }
}

/// `count` sensors on a circle of the given radius.
///
/// A full aperture (`span = 2π`) places `x_i = R(cos(2πi/N), sin(2πi/N))`.
/// A partial aperture is a closed arc: the first and last sensors sit on the
/// arc ends, so the angular step is `span / (N - 1)`. Every sensor carries
/// the uniform weight `R · span / N`.
pub fn make_circle_sensors(count: usize, radius: f64, start: f64, span: f64) -> Result<SurfaceGeometry> {
    if count == 0 {
        return Err(Error::InvalidArgument("sensor count must be positive".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("sensor radius must be positive, got {radius}")));
    }
    if !(span > 0.0 && span <= 2.0 * PI + 1e-12) {
        return Err(Error::InvalidArgument(format!("aperture span must be in (0, 2π], got {span}")));
    }
    let full = (span - 2.0 * PI).abs() < 1e-12;
    let step = if full {
        2.0 * PI / count as f64
    } else if count > 1 {
        span / (count - 1) as f64
    } else {
        0.0
    };
    let points = (0..count)
        .map(|i| {
            let th = start + step * i as f64;
            [radius * th.cos(), radius * th.sin(), 0.0]
        })
        .collect();
    let w = radius * span / count as f64;
    let aperture = if full {
        Aperture::Full
    } else {
        Aperture::Arc { start, span }
    };
    SurfaceGeometry::new(Dimension::Two, points, vec![w; count], aperture)
}

/// Fibonacci ("golden spiral") layout on a sphere:
/// `x_i = R(√(1-α²) cos((3-√5) i π), α, √(1-α²) sin((3-√5) i π))`,
/// `α_i = (2i - N + 1)/N`, each with weight `4πR²/N`.
pub fn make_fibonacci_sphere_sensors(count: usize, radius: f64) -> Result<SurfaceGeometry> {
    if count < 2 {
        return Err(Error::InvalidArgument("sphere layout needs at least 2 points".into()));
    }
    if !(radius > 0.0 && radius.is_finite()) {
        return Err(Error::InvalidArgument(format!("sensor radius must be positive, got {radius}")));
    }
    let n = count as f64;
    let golden = (3.0 - 5f64.sqrt()) * PI;
    let points = (0..count)
        .map(|i| {
            let alpha = (2.0 * i as f64 - n + 1.0) / n;
            let rho = (1.0 - alpha * alpha).sqrt();
            let phi = golden * i as f64;
            [radius * rho * phi.cos(), radius * alpha, radius * rho * phi.sin()]
        })
        .collect();
    let w = 4.0 * PI * radius * radius / n;
    SurfaceGeometry::new(Dimension::Three, points, vec![w; count], Aperture::Sphere)
}

/// Tensor-product grid of probe points, flattened with the last axis fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingGrid {
    pub bounds: Vec<(f64, f64)>,
    pub counts: Vec<usize>,
    pub points: Vec<Point>,
}

impl SamplingGrid {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn axes(&self) -> usize {
        self.counts.len()
    }

    pub fn spacing(&self, axis: usize) -> f64 {
        let (lo, hi) = self.bounds[axis];
        (hi - lo) / (self.counts[axis] - 1) as f64
    }

    pub fn axis_value(&self, axis: usize, idx: usize) -> f64 {
        let (lo, hi) = self.bounds[axis];
        if idx + 1 == self.counts[axis] {
            hi
        } else {
            lo + idx as f64 * self.spacing(axis)
        }
    }

    /// Multi-index of flat position `flat`.
    pub fn unflatten(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.counts.len()];
        for a in (0..self.counts.len()).rev() {
            idx[a] = flat % self.counts[a];
            flat /= self.counts[a];
        }
        idx
    }

    pub fn flatten(&self, idx: &[usize]) -> usize {
        idx.iter()
            .zip(&self.counts)
            .fold(0, |acc, (i, n)| acc * n + i)
    }

    /// Flat index of the probe closest to `p`.
    pub fn nearest(&self, p: &Point) -> usize {
        let mut best = 0;
        let mut bd = f64::INFINITY;
        for (i, q) in self.points.iter().enumerate() {
            let d = distance(p, q);
            if d < bd {
                bd = d;
                best = i;
            }
        }
        best
    }

    /// Euclidean distance from `p` to the closed box spanned by the grid.
    pub fn box_distance(&self, p: &Point) -> f64 {
        let mut d2 = 0.0;
        for (a, &(lo, hi)) in self.bounds.iter().enumerate() {
            let v = p[a];
            let e = if v < lo {
                lo - v
            } else if v > hi {
                v - hi
            } else {
                0.0
            };
            d2 += e * e;
        }
        for &v in p.iter().skip(self.bounds.len()) {
            d2 += v * v;
        }
        d2.sqrt()
    }
}

pub fn make_sampling_grid(bounds: &[(f64, f64)], counts: &[usize]) -> Result<SamplingGrid> {
    if bounds.is_empty() || bounds.len() > 3 || bounds.len() != counts.len() {
        return Err(Error::InvalidArgument(format!(
            "grid needs 1 to 3 axes with matching counts (got {} bounds, {} counts)",
            bounds.len(),
            counts.len()
        )));
    }
    for (a, (&(lo, hi), &n)) in bounds.iter().zip(counts).enumerate() {
        if n < 2 {
            return Err(Error::InvalidArgument(format!("grid axis {a} needs at least 2 points")));
        }
        if !(hi > lo && lo.is_finite() && hi.is_finite()) {
            return Err(Error::InvalidArgument(format!("grid axis {a} has empty bounds")));
        }
    }
    let total: usize = counts.iter().product();
    let mut grid = SamplingGrid {
        bounds: bounds.to_vec(),
        counts: counts.to_vec(),
        points: Vec::with_capacity(total),
    };
    for flat in 0..total {
        let idx = grid.unflatten(flat);
        let mut p = [0.0; 3];
        for (a, &i) in idx.iter().enumerate() {
            p[a] = grid.axis_value(a, i);
        }
        grid.points.push(p);
    }
    Ok(grid)
}

/// Outcome of the geometric admissibility checks for an imaging setup.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparationReport {
    /// Distance between the sampling box and the closest sensor.
    pub grid_sensor_distance: f64,
    /// Largest scatterer diameter.
    pub max_diameter: f64,
    /// `dist(Ω, Γ_m) > max diam(D)`.
    pub distance_exceeds_diameter: bool,
    /// Every boundary node lies inside the sampling box.
    pub boundaries_inside: bool,
    /// No sensor lies in the closed sampling box.
    pub disjoint: bool,
    pub warnings: Vec<String>,
}

impl SeparationReport {
    pub fn all_passed(&self) -> bool {
        self.distance_exceeds_diameter && self.boundaries_inside && self.disjoint
    }
}

pub fn check_separation(
    grid: &SamplingGrid,
    surface: &SurfaceGeometry,
    boundaries: &[BoundaryCurve],
) -> SeparationReport {
    let grid_sensor_distance = surface
        .continuous_samples()
        .iter()
        .chain(surface.points.iter())
        .map(|p| grid.box_distance(p))
        .fold(f64::INFINITY, f64::min);
    let max_diameter = boundaries.iter().map(|b| b.diameter()).fold(0.0, f64::max);
    let disjoint = surface.points.iter().all(|p| grid.box_distance(p) > 0.0);
    let distance_exceeds_diameter = grid_sensor_distance > max_diameter;
    let mut boundaries_inside = true;
    let mut warnings = Vec::new();
    for b in boundaries {
        let outside = b
            .nodes
            .iter()
            .filter(|n| grid.box_distance(&[n[0], n[1], 0.0]) > 0.0)
            .count();
        if outside > 0 {
            boundaries_inside = false;
            warnings.push(format!(
                "{} boundary at ({}, {}): {outside} nodes outside the sampling region",
                b.shape, b.center[0], b.center[1]
            ));
        }
    }
    if !disjoint {
        let inside = surface
            .points
            .iter()
            .filter(|p| grid.box_distance(p) == 0.0)
            .count();
        warnings.push(format!("{inside} sensors lie inside the sampling region"));
    }
    if !distance_exceeds_diameter {
        warnings.push(format!(
            "sampling region is {grid_sensor_distance:.4} from the sensors, not more than the scatterer diameter {max_diameter:.4}"
        ));
    }
    SeparationReport {
        grid_sensor_distance,
        max_diameter,
        distance_exceeds_diameter,
        boundaries_inside,
        disjoint,
        warnings,
    }
}
