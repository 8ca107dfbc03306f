//! Randomized invariants of the kernels, indicators and containers.

mod common;

use std::f64::consts::PI;

use proptest::prelude::*;
use tdsm::forward::{synth_point_model, PointScatterer};
use tdsm::geometry::{make_circle_sensors, make_fibonacci_sphere_sensors, make_sampling_grid};
use tdsm::greenfn::{greens2d_conv, greens3d_conv, Medium};
use tdsm::indicator::{
    discrete_conv, discrete_xcorr, fft_conv, ConvNormCache, IndicatorKind, Pairing,
};
use tdsm::signal::{SignalSpec, TimeGrid};
use tdsm::spectral::SpectralParams;
use tdsm::Dimension;

/// Reference truncated convolution written as a double loop over both indices.
fn direct_conv(f: &[f64], g: &[f64], dt: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; n];
    for (a, fa) in f.iter().enumerate() {
        for (b, gb) in g.iter().enumerate() {
            if a + b < n {
                out[a + b] += fa * gb * dt;
            }
        }
    }
    out
}

fn direct_xcorr(f: &[f64], g: &[f64], dt: f64) -> Vec<f64> {
    let n = f.len();
    let mut out = vec![0.0; 2 * n - 1];
    for (a, fa) in f.iter().enumerate() {
        for (b, gb) in g.iter().enumerate() {
            out[a + n - 1 - b] += fa * gb * dt;
        }
    }
    out
}

fn max_dev(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).fold(0.0f64, |m, (x, y)| m.max((x - y).abs()))
}

fn series(len: std::ops::Range<usize>) -> impl Strategy<Value = (Vec<f64>, Vec<f64>, f64)> {
    len.prop_flat_map(|n| {
        (
            prop::collection::vec(-10.0f64..10.0, n),
            prop::collection::vec(-10.0f64..10.0, n),
            0.001f64..1.0,
        )
    })
}

fn point_data(center: [f64; 3], dim: Dimension) -> tdsm::forward::ScatteredDataSet {
    let (s, time) = match dim {
        Dimension::Two => (make_circle_sensors(8, 4.0, 0.0, 2.0 * PI).unwrap(), TimeGrid::new(25.0, 64).unwrap()),
        Dimension::Three => (make_fibonacci_sphere_sensors(8, 4.0).unwrap(), TimeGrid::new(19.0, 64).unwrap()),
    };
    synth_point_model(
        &[PointScatterer::new(center)],
        &s,
        &s,
        time,
        SignalSpec::default(),
        Medium::default(),
        dim,
        SpectralParams::default(),
    )
    .unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn conv_matches_direct_sum((f, g, dt) in series(1..200)) {
        let want = direct_conv(&f, &g, dt);
        let scale = want.iter().fold(1e-300f64, |m, v| m.max(v.abs()))
            .max(f.iter().map(|v| v.abs()).sum::<f64>() * g.iter().fold(0.0f64, |m, v| m.max(v.abs())) * dt);
        prop_assert!(max_dev(&discrete_conv(&f, &g, dt).unwrap(), &want) <= 1e-12 * scale);
        prop_assert!(max_dev(&fft_conv(&f, &g, dt).unwrap(), &want) <= 1e-12 * scale);
    }

    #[test]
    fn xcorr_matches_direct_sum((f, g, dt) in series(1..120)) {
        let want = direct_xcorr(&f, &g, dt);
        let scale = f.iter().map(|v| v.abs()).sum::<f64>() * g.iter().fold(0.0f64, |m, v| m.max(v.abs())) * dt;
        prop_assert!(max_dev(&discrete_xcorr(&f, &g, dt).unwrap(), &want) <= 1e-12 * scale.max(1e-300));
    }

    #[test]
    fn green_functions_are_reciprocal(
        x in prop::array::uniform3(-5.0f64..5.0),
        y in prop::array::uniform3(-5.0f64..5.0),
        t in 0.0f64..20.0,
    ) {
        prop_assume!(tdsm::distance(&x, &y) > 1e-3);
        let s = SignalSpec::default();
        let m = Medium::default();
        prop_assert_eq!(greens3d_conv(&x, &y, t, &s, m).unwrap(), greens3d_conv(&y, &x, t, &s, m).unwrap());
        let (xp, yp) = ([x[0], x[1], 0.0], [y[0], y[1], 0.0]);
        prop_assume!(tdsm::distance(&xp, &yp) > 1e-3);
        prop_assert_eq!(greens2d_conv(&xp, &yp, t, &s, m).unwrap(), greens2d_conv(&yp, &xp, t, &s, m).unwrap());
    }

    #[test]
    fn three_d_kernel_decays_inversely(r in 0.1f64..5.0, t in 0.0f64..8.0) {
        let s = SignalSpec::default();
        let m = Medium::default();
        let o = [0.0; 3];
        let a = greens3d_conv(&o, &[r, 0.0, 0.0], t + r, &s, m).unwrap();
        let b = greens3d_conv(&o, &[2.0 * r, 0.0, 0.0], t + 2.0 * r, &s, m).unwrap();
        // Measured against the amplitude 1/(4πr): near zeros of the pulse the
        // rounding of the shifted times dominates any pointwise ratio.
        prop_assert!((a - 2.0 * b).abs() <= 1e-12 / (4.0 * PI * r));
    }

    #[test]
    fn pulse_stays_inside_envelope(t in -10.0f64..30.0) {
        let s = SignalSpec::default();
        prop_assert!(s.eval(t).abs() <= s.envelope(t));
        prop_assert_eq!(s.eval(t), common::pulse(t));
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn correlation_i1_is_bounded_by_one(
        cx in -2.0f64..2.0,
        cy in -2.0f64..2.0,
        zx in -2.5f64..2.5,
        zy in -2.5f64..2.5,
        three in any::<bool>(),
    ) {
        let (dim, c, z) = if three {
            (Dimension::Three, [cx, cy, 0.3], [zx, zy, -0.2])
        } else {
            (Dimension::Two, [cx, cy, 0.0], [zx, zy, 0.0])
        };
        let cache = ConvNormCache::with_pairing(&point_data(c, dim), Pairing::Correlation).unwrap();
        let at_z = cache.evaluate(&z, &[IndicatorKind::I1]).unwrap()[0];
        let at_c = cache.evaluate(&c, &[IndicatorKind::I1]).unwrap()[0];
        prop_assert!(at_z <= 1.0 + 1e-9, "I1(z) = {}", at_z);
        prop_assert!(at_c > 0.999 && at_c <= 1.0 + 1e-9, "I1(y0) = {}", at_c);
    }

    #[test]
    fn normalized_indicators_ignore_data_scale(
        alpha in 0.01f64..100.0,
        cx in -2.0f64..2.0,
        cy in -2.0f64..2.0,
        pairing in prop_oneof![Just(Pairing::Correlation), Just(Pairing::Convolution)],
    ) {
        let data = point_data([cx, cy, 0.0], Dimension::Two);
        let kinds = [IndicatorKind::I1, IndicatorKind::I2, IndicatorKind::I3];
        let grid = make_sampling_grid(&[(-2.0, 2.0), (-2.0, 2.0)], &[5, 5]).unwrap();
        let a = ConvNormCache::with_pairing(&data, pairing).unwrap();
        let b = ConvNormCache::with_pairing(&data.scaled(alpha), pairing).unwrap();
        let mut best = (0usize, 0usize, f64::MIN, f64::MIN);
        for (idx, z) in grid.points.iter().enumerate() {
            let va = a.evaluate(z, &kinds).unwrap();
            let vb = b.evaluate(z, &kinds).unwrap();
            for q in 0..2 {
                prop_assert!((va[q] - vb[q]).abs() <= 1e-12 * va[q].abs().max(1e-300));
            }
            prop_assert!((vb[2] - alpha * va[2]).abs() <= 1e-12 * vb[2].abs().max(1e-300));
            if va[2] > best.2 { best.0 = idx; best.2 = va[2]; }
            if vb[2] > best.3 { best.1 = idx; best.3 = vb[2]; }
        }
        prop_assert_eq!(best.0, best.1);
    }
}

#[test]
fn surface_weights_sum_to_measure() {
    for r in [0.5, 4.0, 7.25] {
        let c = make_circle_sensors(37, r, 0.0, 2.0 * PI).unwrap();
        assert!((c.total_weight() - 2.0 * PI * r).abs() <= 1e-10 * 2.0 * PI * r);
        let s = make_fibonacci_sphere_sensors(50, r).unwrap();
        assert!((s.total_weight() - 4.0 * PI * r * r).abs() <= 1e-10 * 4.0 * PI * r * r);
    }
}

#[test]
fn sampling_grid_spans_declared_box() {
    let g = make_sampling_grid(&[(-2.6, 2.6), (-1.0, 3.0), (0.0, 0.5)], &[21, 5, 3]).unwrap();
    assert_eq!(g.len(), 21 * 5 * 3);
    for axis in 0..3 {
        let lo = g.points.iter().map(|p| p[axis]).fold(f64::MAX, f64::min);
        let hi = g.points.iter().map(|p| p[axis]).fold(f64::MIN, f64::max);
        let want = [(-2.6, 2.6), (-1.0, 3.0), (0.0, 0.5)][axis];
        assert!((lo - want.0).abs() < 1e-12 && (hi - want.1).abs() < 1e-12);
    }
}
