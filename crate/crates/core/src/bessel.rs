//! Cylinder functions of real argument.

use num_complex::Complex64;

pub fn j0(x: f64) -> f64 {
    puruspe::Jn(0, x)
}

pub fn j1(x: f64) -> f64 {
    puruspe::Jn(1, x)
}

/// Hankel function of the first kind, order 0, `x > 0`.
pub fn hankel0(x: f64) -> Complex64 {
    Complex64::new(puruspe::Jn(0, x), puruspe::Yn(0, x))
}

/// Hankel function of the first kind, order 1, `x > 0`.
pub fn hankel1(x: f64) -> Complex64 {
    Complex64::new(puruspe::Jn(1, x), puruspe::Yn(1, x))
}

/// `J_n(x)` for integer `n ≥ 0`.
pub fn jn(n: u32, x: f64) -> f64 {
    puruspe::Jn(n, x)
}

/// `Y_n(x)` for integer `n ≥ 0`, `x > 0`.
pub fn yn(n: u32, x: f64) -> f64 {
    puruspe::Yn(n, x)
}

/// Euler–Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Cylinder functions of order 0 and 1 at one complex argument.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Cylinder01 {
    pub j0: Complex64,
    pub j1: Complex64,
    pub h0: Complex64,
    pub h1: Complex64,
}

/// Below this modulus the ascending series is used, above it the Hankel
/// asymptotic expansion.
const SERIES_LIMIT: f64 = 12.0;

/// `J₀, J₁, H₀⁽¹⁾, H₁⁽¹⁾` at `z` with `Im z ≥ 0`, `z ≠ 0`.
pub fn cylinder01(z: Complex64) -> Cylinder01 {
    if z.norm() <= SERIES_LIMIT {
        cylinder01_series(z)
    } else {
        cylinder01_asymptotic(z)
    }
}

pub fn hankel0_complex(z: Complex64) -> Complex64 {
    cylinder01(z).h0
}

pub fn hankel1_complex(z: Complex64) -> Complex64 {
    cylinder01(z).h1
}

fn cylinder01_series(z: Complex64) -> Cylinder01 {
    use std::f64::consts::PI;
    let half = z * 0.5;
    let q = half * half;
    // term_m = (−q)^m / (m!)², harmonic numbers H_m
    let mut term = Complex64::new(1.0, 0.0);
    let mut harmonic = 0.0;
    let mut j0 = Complex64::new(0.0, 0.0);
    let mut j1s = Complex64::new(0.0, 0.0);
    let mut y0s = Complex64::new(0.0, 0.0);
    let mut y1s = Complex64::new(0.0, 0.0);
    let mut m = 0usize;
    loop {
        let mf = m as f64;
        let t1 = term / (mf + 1.0);
        let next_h = harmonic + 1.0 / (mf + 1.0);
        j0 += term;
        j1s += t1;
        y0s += term * harmonic;
        y1s += t1 * (harmonic + next_h);
        if m > 4 && term.norm() < 1e-17 * j0.norm().max(1e-300) && term.norm() < 1e-17 {
            break;
        }
        m += 1;
        term = -term * q / (m as f64 * m as f64);
        harmonic = next_h;
        if m > 200 {
            break;
        }
    }
    let j1 = half * j1s;
    let log_term = (half.ln() + EULER_GAMMA) * (2.0 / PI);
    // Σ (−1)^{m+1} H_m q^m/(m!)² = −Σ H_m (−q)^m/(m!)²
    let y0 = log_term * j0 - y0s * (2.0 / PI);
    let y1 = log_term * j1 - 2.0 / (PI * z) - half * y1s / PI;
    let i = Complex64::new(0.0, 1.0);
    Cylinder01 {
        j0,
        j1,
        h0: j0 + i * y0,
        h1: j1 + i * y1,
    }
}

fn cylinder01_asymptotic(z: Complex64) -> Cylinder01 {
    use std::f64::consts::PI;
    let i = Complex64::new(0.0, 1.0);
    // Σ_k (±i)^k a_k(ν) / z^k for ν = 0, 1
    let sums = |nu: f64| -> (Complex64, Complex64) {
        let mu = 4.0 * nu * nu;
        let mut a = Complex64::new(1.0, 0.0);
        let mut plus = a;
        let mut minus = a;
        let mut prev = f64::INFINITY;
        for k in 1..60 {
            let kf = k as f64;
            let odd = 2.0 * kf - 1.0;
            a = a * (mu - odd * odd) / (kf * 8.0 * z);
            let size = a.norm();
            if size >= prev || size < 1e-17 {
                break;
            }
            prev = size;
            let ik = i.powi(k);
            plus += ik * a;
            minus += ik.conj() * a;
        }
        (plus, minus)
    };
    let amp = (2.0 / (PI * z)).sqrt();
    let (p0, m0) = sums(0.0);
    let (p1, m1) = sums(1.0);
    let w0 = z - PI / 4.0;
    let w1 = z - 3.0 * PI / 4.0;
    let h0 = amp * (i * w0).exp() * p0;
    let h1 = amp * (i * w1).exp() * p1;
    let h0m = amp * (-i * w0).exp() * m0;
    let h1m = amp * (-i * w1).exp() * m1;
    Cylinder01 {
        j0: 0.5 * (h0 + h0m),
        j1: 0.5 * (h1 + h1m),
        h0,
        h1,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64, tol: f64) -> bool {
        (a - b).norm() <= tol * b.norm().max(1e-3)
    }

    #[test]
    fn complex_matches_real_axis() {
        for &x in &[0.01, 0.3, 1.0, 4.7, 11.9, 12.1, 20.0, 75.0] {
            let c = cylinder01(Complex64::new(x, 0.0));
            assert!(close(c.h0, hankel0(x), 1e-10), "h0 at {x}");
            assert!(close(c.h1, hankel1(x), 1e-10), "h1 at {x}");
            assert!((c.j0.re - j0(x)).abs() < 1e-10);
            assert!((c.j1.re - j1(x)).abs() < 1e-10);
        }
    }

    #[test]
    fn complex_reference_values() {
        // mpmath hankel1 / besselj at 50 digits
        let cases = [
            (Complex64::new(0.2, 0.05), Complex64::new(0.8276110807552817, -1.0672543660889038), Complex64::new(-0.6306539421199624, -3.1140465706278535)),
            (Complex64::new(3.0, 0.4), Complex64::new(-0.156320036518351, 0.26093318149758277), Complex64::new(0.24474074988009215, 0.20248752906249184)),
            (Complex64::new(11.0, 1.5), Complex64::new(-0.04040287022456763, -0.0348033061740427), Complex64::new(-0.03683645222258138, 0.039145378358641646)),
            (Complex64::new(14.0, 0.8), Complex64::new(0.07836109500771543, 0.05486723363105213), Complex64::new(0.05779328587698026, -0.0766221770863672)),
        ];
        for (z, h0, h1) in cases {
            let c = cylinder01(z);
            assert!(close(c.h0, h0, 1e-10), "h0 at {z}: {}", c.h0);
            assert!(close(c.h1, h1, 1e-10), "h1 at {z}: {}", c.h1);
        }
    }

    #[test]
    fn complex_wronskian() {
        // J₁H₀ − J₀H₁ = 2i/(πz)
        for &(re, im) in &[(0.05, 0.01), (2.0, 0.3), (9.0, 1.0), (11.99, 0.5), (12.01, 0.5), (30.0, 2.0)] {
            let z = Complex64::new(re, im);
            let c = cylinder01(z);
            let w = c.j1 * c.h0 - c.j0 * c.h1;
            let expect = Complex64::new(0.0, 2.0) / (std::f64::consts::PI * z);
            assert!((w - expect).norm() < 1e-10 * expect.norm(), "z = {z}");
        }
    }

    #[test]
    fn reference_values() {
        // scipy.special.jv / yv
        assert!((j0(2.5) - (-0.048_383_776_468_197_92)).abs() < 1e-14);
        assert!((yn(0, 2.5) - 0.498_070_359_615_231_94).abs() < 1e-14);
        assert!((j1(7.3) - 0.082_570_430_493_257_93).abs() < 1e-14);
    }

    #[test]
    fn wronskian() {
        for &x in &[0.05, 0.7, 3.0, 11.0, 24.0] {
            let w = j1(x) * yn(0, x) - j0(x) * yn(1, x);
            assert!((w - 2.0 / (std::f64::consts::PI * x)).abs() < 1e-13 * (1.0 + 1.0 / x));
        }
    }
}
