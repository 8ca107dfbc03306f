//! Sound-soft scattering in 2D by a combined-field boundary integral
//! equation, solved per frequency with Nyström's method and logarithmic
//! splitting quadrature, then synthesized into the time domain.
//!
//! For a source at `y` the scattered field is sought as
//!
//! ```text
//! uˢ(x) = ∫_∂D { ∂Φ(x,ξ)/∂ν(ξ) − iη Φ(x,ξ) } ψ(ξ) ds(ξ),   Φ = (i/4) H₀⁽¹⁾(k|x−ξ|),
//! ```
//!
//! and the Dirichlet condition `uˢ = −Φ(·, y)` on `∂D` gives a second-kind
//! equation for `ψ`. With the parametrization sampled at `t_j = πj/n`, the
//! self-interaction kernel is split as `K = K₁ ln(4 sin²((t−τ)/2)) + K₂` and
//! the logarithmic part is integrated exactly against trigonometric
//! interpolants.

use std::f64::consts::PI;

use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use super::{ForwardModel, ScatteredDataSet};
use crate::bessel::{cylinder01, hankel0_complex, EULER_GAMMA};
use crate::geometry::{BoundaryCurve, SurfaceGeometry};
use crate::greenfn::Medium;
use crate::signal::{SignalSpec, TimeGrid};
use crate::spectral::{FrequencyPlan, SpectralParams};
use crate::{Dimension, Error, Result};

const I: Complex64 = Complex64::new(0.0, 1.0);

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BieParams {
    /// Quadrature nodes per boundary curve (even).
    pub nodes_per_curve: usize,
    pub spectral: SpectralParams,
    /// Coupling parameter `η`; `None` uses `Re k`.
    pub coupling: Option<f64>,
    /// Check the boundary condition on a refined node set at every frequency.
    pub verify: bool,
}

impl Default for BieParams {
    fn default() -> Self {
        BieParams {
            nodes_per_curve: 128,
            spectral: SpectralParams::default(),
            coupling: None,
            verify: false,
        }
    }
}

#[derive(Debug, Clone)]
struct CurveNodes {
    /// Half the node count.
    n: usize,
    pos: Vec<[f64; 2]>,
    d1: Vec<[f64; 2]>,
    d2: Vec<[f64; 2]>,
    speed: Vec<f64>,
}

impl CurveNodes {
    fn new(curve: &BoundaryCurve, nodes: usize) -> Self {
        let n = nodes / 2;
        let mut c = CurveNodes {
            n,
            pos: Vec::with_capacity(nodes),
            d1: Vec::with_capacity(nodes),
            d2: Vec::with_capacity(nodes),
            speed: Vec::with_capacity(nodes),
        };
        for j in 0..nodes {
            let [p, d1, d2] = curve.eval(PI * j as f64 / n as f64);
            c.pos.push(p);
            c.d1.push(d1);
            c.d2.push(d2);
            c.speed.push(d1[0].hypot(d1[1]));
        }
        c
    }

    fn len(&self) -> usize {
        self.pos.len()
    }
}

/// Weights `R_m` of the logarithmic quadrature for node offsets `m = |i − j|`.
fn log_weights(n: usize) -> Vec<f64> {
    (0..2 * n)
        .map(|m| {
            let d = m as f64 * PI / n as f64;
            let s: f64 = (1..n).map(|p| (p as f64 * d).cos() / p as f64).sum();
            -2.0 * PI / n as f64 * s - PI / (n * n) as f64 * (n as f64 * d).cos()
        })
        .collect()
}

/// Double-layer numerator `ν(ξ)|ξ'| · (x − ξ)`.
#[inline]
fn normal_dot(x: [f64; 2], xi: [f64; 2], d1: [f64; 2]) -> f64 {
    d1[1] * (x[0] - xi[0]) - d1[0] * (x[1] - xi[1])
}

#[inline]
fn dist2(a: [f64; 2], b: [f64; 2]) -> f64 {
    (a[0] - b[0]).hypot(a[1] - b[1])
}

/// Per-frequency solutions for a fixed set of point sources.
#[derive(Debug, Clone)]
pub struct FrequencySolution {
    pub k: Complex64,
    pub eta: f64,
    sources: Vec<[f64; 2]>,
    /// Densities, one column per source.
    density: DMatrix<Complex64>,
}

impl FrequencySolution {
    pub fn density(&self) -> &DMatrix<Complex64> {
        &self.density
    }
}

/// Nyström discretization of one or more disjoint sound-soft obstacles.
#[derive(Debug, Clone)]
pub struct BieSolver {
    curves: Vec<BoundaryCurve>,
    parts: Vec<CurveNodes>,
    offsets: Vec<usize>,
    total: usize,
    coupling: Option<f64>,
}

impl BieSolver {
    pub fn new(curves: &[BoundaryCurve], nodes_per_curve: usize, coupling: Option<f64>) -> Result<Self> {
        if nodes_per_curve < 8 || nodes_per_curve % 2 != 0 {
            return Err(Error::InvalidArgument(format!(
                "nodes per curve must be even and at least 8, got {nodes_per_curve}"
            )));
        }
        if let Some(eta) = coupling {
            if !(eta > 0.0 && eta.is_finite()) {
                return Err(Error::InvalidArgument(format!("coupling must be positive, got {eta}")));
            }
        }
        let parts: Vec<CurveNodes> = curves.iter().map(|c| CurveNodes::new(c, nodes_per_curve)).collect();
        let mut offsets = Vec::with_capacity(parts.len());
        let mut total = 0;
        for p in &parts {
            offsets.push(total);
            total += p.len();
        }
        Ok(BieSolver {
            curves: curves.to_vec(),
            parts,
            offsets,
            total,
            coupling,
        })
    }

    pub fn unknowns(&self) -> usize {
        self.total
    }

    fn eta(&self, k: Complex64) -> f64 {
        self.coupling.unwrap_or(k.re)
    }

    /// System matrix `I − (K_D − iη S)` in Nyström form.
    fn assemble(&self, k: Complex64, eta: f64) -> DMatrix<Complex64> {
        let mut a = DMatrix::<Complex64>::zeros(self.total, self.total);
        let ieta = I * eta;
        for (ca, pa) in self.parts.iter().enumerate() {
            let weights = log_weights(pa.n);
            let h = PI / pa.n as f64;
            for i in 0..pa.len() {
                let row = self.offsets[ca] + i;
                let x = pa.pos[i];
                for (cb, pb) in self.parts.iter().enumerate() {
                    let hb = PI / pb.n as f64;
                    for j in 0..pb.len() {
                        let col = self.offsets[cb] + j;
                        let (xi, d1, sp) = (pb.pos[j], pb.d1[j], pb.speed[j]);
                        let value = if ca == cb && i == j {
                            let d2 = pa.d2[i];
                            let l2 = (d1[0] * d2[1] - d1[1] * d2[0]) / (2.0 * PI * sp * sp);
                            let m1 = -sp / (2.0 * PI);
                            let m2 = (0.5 * I
                                - EULER_GAMMA / PI
                                - (k * (sp / 2.0)).ln() / PI)
                                * sp;
                            let k1 = ieta * m1;
                            let k2 = l2 + ieta * m2;
                            weights[0] * k1 + h * k2
                        } else {
                            let r = dist2(x, xi);
                            let q = normal_dot(x, xi, d1);
                            let cyl = cylinder01(k * r);
                            let l = 0.5 * I * k * (-q) * cyl.h1 / r;
                            let m = 0.5 * I * cyl.h0 * sp;
                            let full = l + ieta * m;
                            if ca == cb {
                                let l1 = k / (2.0 * PI) * q * cyl.j1 / r;
                                let m1 = -cyl.j0 * sp / (2.0 * PI);
                                let k1 = l1 + ieta * m1;
                                let s = ((i as f64 - j as f64) * h / 2.0).sin();
                                let lg = (4.0 * s * s).ln();
                                let k2 = full - k1 * lg;
                                weights[i.abs_diff(j)] * k1 + h * k2
                            } else {
                                hb * full
                            }
                        };
                        a[(row, col)] = -value;
                    }
                }
                a[(row, row)] += Complex64::new(1.0, 0.0);
            }
        }
        a
    }

    fn incident(&self, k: Complex64, source: [f64; 2], x: [f64; 2]) -> Complex64 {
        0.25 * I * hankel0_complex(k * dist2(x, source))
    }

    /// Solves for the densities induced by unit point sources at `sources`.
    pub fn solve(&self, k: Complex64, sources: &[[f64; 2]]) -> Result<FrequencySolution> {
        if !(k.re > 0.0 && k.im >= 0.0 && k.is_finite()) {
            return Err(Error::InvalidArgument(format!("wavenumber must be positive, got {k}")));
        }
        let eta = self.eta(k);
        let a = self.assemble(k, eta);
        let mut g = DMatrix::<Complex64>::zeros(self.total, sources.len());
        for (cb, p) in self.parts.iter().enumerate() {
            for (i, x) in p.pos.iter().enumerate() {
                for (s, y) in sources.iter().enumerate() {
                    g[(self.offsets[cb] + i, s)] = -2.0 * self.incident(k, *y, *x);
                }
            }
        }
        let density = a
            .clone()
            .lu()
            .solve(&g)
            .ok_or_else(|| Error::Solver(format!("singular boundary system at k = {k}")))?;
        let resid = (&a * &density - &g).norm();
        let scale = g.norm().max(f64::MIN_POSITIVE);
        if !(resid <= 1e-8 * scale) {
            return Err(Error::Solver(format!(
                "linear solve did not converge at k = {k}: relative residual {:.3e}",
                resid / scale
            )));
        }
        Ok(FrequencySolution {
            k,
            eta,
            sources: sources.to_vec(),
            density,
        })
    }

    /// Scattered field at an off-boundary point, one value per source.
    pub fn scattered(&self, sol: &FrequencySolution, x: [f64; 2]) -> Vec<Complex64> {
        let k = sol.k;
        let mut out = vec![Complex64::new(0.0, 0.0); sol.sources.len()];
        for (cb, p) in self.parts.iter().enumerate() {
            let h = PI / p.n as f64;
            for j in 0..p.len() {
                let xi = p.pos[j];
                let r = dist2(x, xi);
                let q = normal_dot(x, xi, p.d1[j]);
                let cyl = cylinder01(k * r);
                let kernel = h
                    * (0.25 * I * k * cyl.h1 * q / r
                        - I * sol.eta * 0.25 * I * cyl.h0 * p.speed[j]);
                let row = self.offsets[cb] + j;
                for (s, o) in out.iter_mut().enumerate() {
                    *o += kernel * sol.density[(row, s)];
                }
            }
        }
        out
    }

    /// Largest `|uˢ + uⁱ| / max|uⁱ|` over a node set twice as fine as the
    /// solver's, using the trigonometric interpolant of the density.
    pub fn boundary_residual(&self, sol: &FrequencySolution) -> Result<f64> {
        let refined_nodes = 2 * self.parts.first().map_or(8, |p| p.len());
        let fine = BieSolver::new(&self.curves, refined_nodes, self.coupling)?;
        let mut psi = DMatrix::<Complex64>::zeros(fine.total, sol.sources.len());
        for (cb, p) in self.parts.iter().enumerate() {
            for s in 0..sol.sources.len() {
                let coarse: Vec<Complex64> = (0..p.len())
                    .map(|j| sol.density[(self.offsets[cb] + j, s)])
                    .collect();
                for (j, v) in upsample(&coarse).into_iter().enumerate() {
                    psi[(fine.offsets[cb] + j, s)] = v;
                }
            }
        }
        let a = fine.assemble(sol.k, sol.eta);
        let trace = (&a * &psi) * Complex64::new(0.5, 0.0);
        let mut worst: f64 = 0.0;
        for s in 0..sol.sources.len() {
            let mut peak: f64 = 0.0;
            let mut err: f64 = 0.0;
            for (cb, p) in fine.parts.iter().enumerate() {
                for (i, x) in p.pos.iter().enumerate() {
                    let ui = self.incident(sol.k, sol.sources[s], *x);
                    peak = peak.max(ui.norm());
                    err = err.max((trace[(fine.offsets[cb] + i, s)] + ui).norm());
                }
            }
            worst = worst.max(err / peak);
        }
        Ok(worst)
    }
}

/// Trigonometric interpolation of `2n` equispaced samples onto `4n` nodes.
fn upsample(v: &[Complex64]) -> Vec<Complex64> {
    let len = v.len();
    let n = len / 2;
    let mut planner = FftPlanner::<f64>::new();
    let mut coef = v.to_vec();
    planner.plan_fft_forward(len).process(&mut coef);
    let mut wide = vec![Complex64::new(0.0, 0.0); 2 * len];
    wide[..n].copy_from_slice(&coef[..n]);
    wide[n] = 0.5 * coef[n];
    wide[2 * len - n] = 0.5 * coef[n];
    for m in 1..n {
        wide[2 * len - m] = coef[len - m];
    }
    planner.plan_fft_inverse(2 * len).process(&mut wide);
    let scale = 1.0 / len as f64;
    wide.into_iter().map(|c| c * scale).collect()
}

fn planar(points: &[crate::Point]) -> Vec<[f64; 2]> {
    points.iter().map(|p| [p[0], p[1]]).collect()
}

/// Time-domain scattered data of sound-soft obstacles bounded by `curves`,
/// for the incident fields `(G₂ ∗ λ)(·, t; y_j)` radiated by the sources.
pub fn synth_bie_2d(
    curves: &[BoundaryCurve],
    sensors: &SurfaceGeometry,
    sources: &SurfaceGeometry,
    time: TimeGrid,
    signal: SignalSpec,
    medium: Medium,
    params: BieParams,
) -> Result<ScatteredDataSet> {
    signal.validate()?;
    let mut data = ScatteredDataSet::zeros(
        Dimension::Two,
        sensors.clone(),
        sources.clone(),
        time,
        signal,
        medium,
    );
    data.metadata.insert("model".into(), ForwardModel::Bie2d.name().into());
    data.set_spectral_params(params.spectral);
    data.metadata
        .insert("bie.nodes_per_curve".into(), params.nodes_per_curve.to_string());
    if let Some(eta) = params.coupling {
        data.metadata.insert("bie.coupling".into(), format!("{eta:?}"));
    }
    let described: Vec<String> = curves
        .iter()
        .map(|c| format!("{}@({:?},{:?})x{:?}", c.shape, c.center[0], c.center[1], c.scale))
        .collect();
    data.metadata.insert("boundaries".into(), described.join(";"));
    if curves.is_empty() {
        return Ok(data);
    }
    let xs = planar(&sensors.points);
    let ys = planar(&sources.points);
    for c in curves {
        for p in xs.iter().chain(&ys) {
            if c.contains(*p) {
                return Err(Error::InvalidArgument(format!(
                    "sensor or source ({}, {}) lies inside the {} obstacle",
                    p[0], p[1], c.shape
                )));
            }
        }
    }
    let solver = BieSolver::new(curves, params.nodes_per_curve, params.coupling)?;
    let plan = FrequencyPlan::new(&signal, &time, params.spectral)?;
    let per_freq: Vec<(Vec<Complex64>, f64)> = plan
        .frequencies()
        .par_iter()
        .map(|w| {
            let sol = solver.solve(w / medium.c, &ys)?;
            let resid = if params.verify { solver.boundary_residual(&sol)? } else { 0.0 };
            let mut vals = Vec::with_capacity(xs.len() * ys.len());
            for x in &xs {
                vals.extend(solver.scattered(&sol, *x));
            }
            Ok((vals, resid))
        })
        .collect::<Result<_>>()?;
    if params.verify {
        let worst = per_freq.iter().fold(0.0f64, |m, (_, r)| m.max(*r));
        data.metadata.insert("bie.max_boundary_residual".into(), format!("{worst:e}"));
    }
    let ni = ys.len();
    let mut scratch = vec![Complex64::new(0.0, 0.0); plan.padded_len()];
    let mut transfer = vec![Complex64::new(0.0, 0.0); plan.len()];
    for i in 0..xs.len() {
        for j in 0..ni {
            for (q, (vals, _)) in per_freq.iter().enumerate() {
                transfer[q] = vals[i * ni + j];
            }
            let mut tr = plan.synthesize_into(&transfer, &mut scratch);
            tr[0] = 0.0;
            data.set_trace(i, j, &tr);
        }
    }
    Ok(data)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bessel::{jn, yn};
    use crate::geometry::{make_boundary, make_circle_sensors, Shape};

    fn hn(n: u32, x: f64) -> Complex64 {
        Complex64::new(jn(n, x), yn(n, x))
    }

    /// Scattered field of a sound-soft disk of radius `a` at the origin for
    /// a point source at `y`, by separation of variables.
    fn disk_series(k: f64, a: f64, y: [f64; 2], x: [f64; 2]) -> Complex64 {
        let (ry, ty) = (y[0].hypot(y[1]), y[1].atan2(y[0]));
        let (rx, tx) = (x[0].hypot(x[1]), x[1].atan2(x[0]));
        let mut s = Complex64::new(0.0, 0.0);
        for n in 0..60u32 {
            let coef = jn(n, k * a) / hn(n, k * a) * hn(n, k * ry) * hn(n, k * rx);
            let ang = (n as f64 * (tx - ty)).cos();
            let mult = if n == 0 { 1.0 } else { 2.0 };
            s += coef * ang * mult;
        }
        -0.25 * I * s
    }

    #[test]
    fn log_weights_sum() {
        // Σ_j R_j(t) integrates ln(4 sin²(τ/2)) over a period, which is zero.
        let w = log_weights(16);
        assert!(w.iter().sum::<f64>().abs() < 1e-12);
    }

    #[test]
    fn upsample_reproduces_trig_polynomial() {
        let n = 8;
        let f = |t: f64| Complex64::new((3.0 * t).cos() + 0.5 * (2.0 * t).sin(), (t).cos());
        let v: Vec<Complex64> = (0..2 * n).map(|j| f(PI * j as f64 / n as f64)).collect();
        let up = upsample(&v);
        for (j, u) in up.iter().enumerate() {
            let t = PI * j as f64 / (2 * n) as f64;
            assert!((u - f(t)).norm() < 1e-12);
        }
    }

    #[test]
    fn disk_matches_series() {
        let disk = make_boundary(Shape::Circle, [0.0, 0.0], 1.0, 64).unwrap();
        assert!((disk.diameter() - 3.0).abs() < 1e-12);
        let solver = BieSolver::new(&[disk], 128, None).unwrap();
        let y = [3.0, 1.0];
        for k in [0.05, 1.0, 4.0, 9.0] {
            let sol = solver.solve(Complex64::new(k, 0.0), &[y]).unwrap();
            for x in [[-2.5, 0.3], [0.0, 2.0], [4.0, -4.0]] {
                let got = solver.scattered(&sol, x)[0];
                let want = disk_series(k, 1.5, y, x);
                assert!((got - want).norm() < 1e-8 * want.norm().max(1e-3), "k = {k}: {got} vs {want}");
            }
            assert!(solver.boundary_residual(&sol).unwrap() < 1e-6);
        }
    }

    #[test]
    fn kite_boundary_condition() {
        let kite = make_boundary(Shape::Kite, [0.2, -0.1], 0.5, 64).unwrap();
        let solver = BieSolver::new(&[kite], 128, None).unwrap();
        for k in [Complex64::new(0.3, 0.0), Complex64::new(2.0, 0.0), Complex64::new(8.0, 0.0), Complex64::new(0.05, 0.12)] {
            let sol = solver.solve(k, &[[4.0, 0.0], [0.0, -4.0]]).unwrap();
            assert!(solver.boundary_residual(&sol).unwrap() < 1e-6);
        }
    }

    #[test]
    fn two_bodies_boundary_condition() {
        let a = make_boundary(Shape::Starfish, [-1.0, 0.8], 0.5, 64).unwrap();
        let b = make_boundary(Shape::Peanut, [1.0, -0.8], 0.5, 64).unwrap();
        let solver = BieSolver::new(&[a, b], 128, None).unwrap();
        assert_eq!(solver.unknowns(), 256);
        let sol = solver.solve(Complex64::new(3.0, 0.1), &[[4.0, 0.0]]).unwrap();
        assert!(solver.boundary_residual(&sol).unwrap() < 1e-6);
    }

    #[test]
    fn reciprocity_of_scattered_field() {
        let kite = make_boundary(Shape::Kite, [0.0, 0.0], 0.6, 64).unwrap();
        let solver = BieSolver::new(&[kite], 128, None).unwrap();
        let (p, q) = ([3.0, 1.0], [-2.0, 2.5]);
        let k = Complex64::new(2.5, 0.1);
        let a = solver.scattered(&solver.solve(k, &[q]).unwrap(), p)[0];
        let b = solver.scattered(&solver.solve(k, &[p]).unwrap(), q)[0];
        assert!((a - b).norm() < 1e-8 * a.norm());
    }

    #[test]
    fn empty_boundary_list_gives_zero_data() {
        let s = make_circle_sensors(6, 4.0, 0.0, 2.0 * PI).unwrap();
        let time = TimeGrid::new(25.0, 64).unwrap();
        let d = synth_bie_2d(&[], &s, &s, time, SignalSpec::default(), Medium::default(), BieParams::default()).unwrap();
        assert!(d.values.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn rejects_sensor_inside_obstacle() {
        let s = make_circle_sensors(6, 0.1, 0.0, 2.0 * PI).unwrap();
        let disk = make_boundary(Shape::Circle, [0.0, 0.0], 1.0, 64).unwrap();
        let time = TimeGrid::new(25.0, 64).unwrap();
        let r = synth_bie_2d(&[disk], &s, &s, time, SignalSpec::default(), Medium::default(), BieParams::default());
        assert!(r.is_err());
    }

    #[test]
    fn time_domain_data_is_causal() {
        let s = make_circle_sensors(6, 4.0, 0.0, 2.0 * PI).unwrap();
        let disk = make_boundary(Shape::Circle, [0.5, 0.0], 0.5, 64).unwrap();
        let time = TimeGrid::new(25.0, 128).unwrap();
        let params = BieParams { nodes_per_curve: 32, ..BieParams::default() };
        let d = synth_bie_2d(&[disk], &s, &s, time, SignalSpec::default(), Medium::default(), params).unwrap();
        let peak = d.max_abs();
        assert!(peak > 0.0);
        for i in 0..6 {
            for j in 0..6 {
                // earliest arrival: source to the nearest boundary point and back
                let xi = s.points[i];
                let yj = s.points[j];
                let near = |p: crate::Point| ((p[0] - 0.5).hypot(p[1]) - 0.5).max(0.0);
                let arrival = near(xi) + near(yj);
                for (k, v) in d.trace(i, j).iter().enumerate() {
                    if time.node(k) < arrival {
                        assert!(v.abs() < 1e-3 * peak, "i={i} j={j} t={}", time.node(k));
                    }
                }
            }
        }
    }
}
