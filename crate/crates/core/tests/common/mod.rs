//! Reference implementations used by the integration tests. Nothing here
//! calls into the crate's numerical kernels.

#![allow(dead_code)]

use std::f64::consts::PI;

use num_complex::Complex64;

pub const EULER: f64 = 0.577_215_664_901_532_9;

/// `sin(ωt) exp(−σ(t−t0)²)` for `t ≥ 0`, zero before.
pub fn pulse(t: f64) -> f64 {
    if t < 0.0 {
        0.0
    } else {
        (4.0 * t).sin() * (-1.6 * (t - 3.0) * (t - 3.0)).exp()
    }
}

/// Adaptive Simpson quadrature with Richardson correction.
pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn step(f: &dyn Fn(f64) -> f64, a: f64, b: f64, fa: f64, fm: f64, fb: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
        let (flm, frm) = (f(lm), f(rm));
        let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
        let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
        let delta = left + right - whole;
        if depth == 0 || delta.abs() <= 15.0 * tol {
            left + right + delta / 15.0
        } else {
            step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
                + step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
        }
    }
    if b <= a {
        return 0.0;
    }
    // Start from a few panels so that oscillatory integrands are resolved.
    let panels = 64;
    let h = (b - a) / panels as f64;
    (0..panels)
        .map(|p| {
            let (x0, x1) = (a + p as f64 * h, a + (p + 1) as f64 * h);
            let (f0, fm, f1) = (f(x0), f(0.5 * (x0 + x1)), f(x1));
            let whole = (x1 - x0) / 6.0 * (f0 + 4.0 * fm + f1);
            step(f, x0, x1, f0, fm, f1, whole, tol / panels as f64, 40)
        })
        .sum()
}

/// `J_0(x) … J_nmax(x)` by Miller's backward recurrence, normalized with
/// `J_0 + 2 Σ J_{2m} = 1`.
pub fn bessel_j_table(nmax: i32, x: f64) -> Vec<f64> {
    let start = (nmax.max(x as i32) + 40 + (2.0 * x) as i32) | 1;
    let mut v = vec![0.0; start as usize + 2];
    v[start as usize] = 1e-300;
    for m in (1..=start as usize).rev() {
        v[m - 1] = 2.0 * m as f64 / x * v[m] - v[m + 1];
        if v[m - 1].abs() > 1e250 {
            for w in v.iter_mut() {
                *w *= 1e-250;
            }
        }
    }
    let norm = v[0] + 2.0 * v.iter().skip(2).step_by(2).sum::<f64>();
    v.truncate(nmax as usize + 1);
    v.into_iter().map(|w| w / norm).collect()
}

pub fn bessel_j(n: i32, x: f64) -> f64 {
    let j = bessel_j_table(n.abs(), x)[n.unsigned_abs() as usize];
    if n < 0 && n % 2 != 0 {
        -j
    } else {
        j
    }
}

/// `Y_0` and `Y_1` from the Schläfli integral
/// `Y_n(x) = (1/π)∫₀^π sin(x sin θ − nθ) dθ − (1/π)∫₀^∞ (e^{nt} + (−1)ⁿ e^{−nt}) e^{−x sinh t} dt`.
fn bessel_y01(n: i32, x: f64) -> f64 {
    let a = adaptive_simpson(&|th: f64| (x * th.sin() - n as f64 * th).sin(), 0.0, PI, 1e-14);
    let sign = if n % 2 == 0 { 1.0 } else { -1.0 };
    let upper = (40.0 / x).asinh() + 1.0;
    let b = adaptive_simpson(
        &|t: f64| ((n as f64 * t).exp() + sign * (-n as f64 * t).exp()) * (-x * t.sinh()).exp(),
        0.0,
        upper,
        1e-14,
    );
    (a - b) / PI
}

/// `Y_n(x)` for `n ≥ 0` by forward recurrence from `Y_0`, `Y_1`.
pub fn bessel_y(n: i32, x: f64) -> f64 {
    let (mut a, mut b) = (bessel_y01(0, x), bessel_y01(1, x));
    if n == 0 {
        return a;
    }
    for m in 1..n {
        let c = 2.0 * m as f64 / x * b - a;
        a = b;
        b = c;
    }
    b
}

/// `H_n^{(1)}(x)` for integer `n` of either sign.
pub fn hankel(n: i32, x: f64) -> Complex64 {
    let m = n.abs();
    let h = Complex64::new(bessel_j(m, x), bessel_y(m, x));
    if n < 0 && m % 2 == 1 {
        -h
    } else {
        h
    }
}

/// Hankel values `H_n(x)` for `n = 0..=nmax` sharing one `Y_0`, `Y_1` pair.
pub fn hankel_table(nmax: i32, x: f64) -> Vec<Complex64> {
    let mut y = vec![bessel_y01(0, x), bessel_y01(1, x)];
    for m in 1..nmax {
        y.push(2.0 * m as f64 / x * y[m as usize] - y[m as usize - 1]);
    }
    let j = bessel_j_table(nmax, x);
    (0..=nmax as usize).map(|m| Complex64::new(j[m], y[m])).collect()
}

const SERIES_TERMS: i32 = 60;

/// Scattered field of the sound-soft disk of radius `a` centred at the
/// origin for the source `(i/4)H₀(k|x−y|)`, at `|x| > a`.
pub fn disk_scattered(k: f64, a: f64, y: [f64; 2], x: [f64; 2]) -> Complex64 {
    let (ry, ty) = (y[0].hypot(y[1]), y[1].atan2(y[0]));
    let (rx, tx) = (x[0].hypot(x[1]), x[1].atan2(x[0]));
    let ha = hankel_table(SERIES_TERMS, k * a);
    let hy = hankel_table(SERIES_TERMS, k * ry);
    let hx = hankel_table(SERIES_TERMS, k * rx);
    let mut s = Complex64::new(0.0, 0.0);
    for n in -SERIES_TERMS..=SERIES_TERMS {
        let m = n.unsigned_abs() as usize;
        // The parity signs of H_{−n} cancel in the product below.
        let coeff = bessel_j(m as i32, k * a) / ha[m] * hx[m] * hy[m];
        s += coeff * Complex64::from_polar(1.0, n as f64 * (tx - ty));
    }
    -Complex64::new(0.0, 0.25) * s
}

/// Arclength density `ψ(θ)` of the combined-field representation
/// `uˢ = ∫ (∂Φ/∂ν − iηΦ) ψ ds` on the same disk, at polar angle `theta`.
pub fn disk_density(k: f64, a: f64, eta: f64, y: [f64; 2], theta: f64) -> Complex64 {
    let (ry, ty) = (y[0].hypot(y[1]), y[1].atan2(y[0]));
    let ha = hankel_table(SERIES_TERMS + 1, k * a);
    let hy = hankel_table(SERIES_TERMS, k * ry);
    let i = Complex64::new(0.0, 1.0);
    let mut s = Complex64::new(0.0, 0.0);
    for n in -SERIES_TERMS..=SERIES_TERMS {
        let m = n.unsigned_abs() as i32;
        let j = bessel_j(m, k * a);
        // J'_n is even in n up to the parity sign shared with J_n.
        let dj = 0.5 * (bessel_j(m - 1, k * a) - bessel_j(m + 1, k * a));
        let denom = 2.0 * PI * a * ha[m as usize] * (k * dj - i * eta * j);
        s += -j * hy[m as usize] / denom * Complex64::from_polar(1.0, n as f64 * (theta - ty));
    }
    s
}

/// `(G₂ ∗ λ)(t)` for receiver distance `r`, with `s = (r/c) cosh v`:
/// `(1/2π) ∫₀^{acosh(ct/r)} λ(t − (r/c) cosh v) dv`.
pub fn greens2d_oracle(r: f64, t: f64, c: f64) -> f64 {
    let a = r / c;
    if t <= a {
        return 0.0;
    }
    let top = (t / a).acosh();
    adaptive_simpson(&|v: f64| pulse(t - a * v.cosh()), 0.0, top, 1e-12) / (2.0 * PI)
}

/// Arithmetic–geometric mean.
pub fn agm(mut a: f64, mut b: f64) -> f64 {
    while (a - b).abs() > 1e-15 * a {
        let m = 0.5 * (a + b);
        b = (a * b).sqrt();
        a = m;
    }
    a
}

/// Complete elliptic integral of the first kind, parameter `m = k²`.
pub fn ellip_k(m: f64) -> f64 {
    PI / (2.0 * agm(1.0, (1.0 - m).sqrt()))
}

/// Two-leg kernel `(G₂(a) ∗ G₂(b))(s)` with unit sound speed:
/// `(1/4π²) ∫_a^{s−b} dτ / √((τ²−a²)((s−τ)²−b²))`, a complete elliptic
/// integral for `s > a + b`.
pub fn two_leg_kernel(a: f64, b: f64, s: f64) -> f64 {
    if s <= a + b {
        return 0.0;
    }
    let p = (s + b - a) * (s - b + a);
    let m = (s - a - b) * (s + a + b) / p;
    2.0 * ellip_k(m) / p.sqrt() / (4.0 * PI * PI)
}

/// 2D point-scatterer trace `−(G₂(a) ∗ G₂(b) ∗ λ)(t)` with unit sound speed.
pub fn point2d_oracle(a: f64, b: f64, t: f64) -> f64 {
    if t <= a + b {
        return 0.0;
    }
    -adaptive_simpson(&|s: f64| two_leg_kernel(a, b, s) * pulse(t - s), a + b, t, 1e-12)
}

/// Deterministic pseudo-random stream for test inputs (SplitMix64).
pub struct Stream(pub u64);

impl Stream {
    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9e37_79b9_7f4a_7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn uniform(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}
