//! Real gamma function (Lanczos approximation with reflection).

use std::f64::consts::PI;

const LANCZOS_G: f64 = 7.0;
const LANCZOS_COEF: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// Gamma function on the real line. Returns NaN at the poles 0, -1, -2, ...
pub fn gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 && x == x.floor() {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    if x == x.floor() && x <= 171.0 {
        let mut acc = 1.0;
        let mut k = 2.0;
        while k < x {
            acc *= k;
            k += 1.0;
        }
        return acc;
    }
    let z = x - 1.0;
    let mut a = LANCZOS_COEF[0];
    let t = z + LANCZOS_G + 0.5;
    for (i, c) in LANCZOS_COEF.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * a
}

/// Digamma function, used for first-order limits at gamma poles.
pub fn digamma(mut x: f64) -> f64 {
    let mut acc = 0.0;
    if x <= 0.0 {
        if x == x.floor() {
            return f64::NAN;
        }
        // reflection
        return digamma(1.0 - x) - PI / (PI * x).tan();
    }
    while x < 16.0 {
        acc -= 1.0 / x;
        x += 1.0;
    }
    let inv = 1.0 / x;
    let inv2 = inv * inv;
    acc + x.ln() - 0.5 * inv
        - inv2
            * (1.0 / 12.0
                - inv2 * (1.0 / 120.0 - inv2 * (1.0 / 252.0 - inv2 * (1.0 / 240.0 - inv2 / 132.0))))
}

/// Residue-style expansion of Γ(x) near a non-positive integer pole `-n`:
/// Γ(-n + δ) = r/δ + c + O(δ) with r = (-1)^n/n! and c = r·ψ(n+1).
pub fn gamma_pole_expansion(n: u32) -> (f64, f64) {
    let mut fact = 1.0;
    for k in 2..=n {
        fact *= k as f64;
    }
    let r = if n.is_multiple_of(2) { 1.0 } else { -1.0 } / fact;
    (r, r * digamma(n as f64 + 1.0))
}

/// coth with a guarded series for small arguments.
pub fn coth(x: f64) -> f64 {
    let ax = x.abs();
    if ax < 1e-4 {
        1.0 / x + x / 3.0
    } else if ax > 20.0 {
        x.signum() * (1.0 + 2.0 * (-2.0 * ax).exp())
    } else {
        1.0 / x.tanh()
    }
}

/// Inverse hyperbolic cotangent for |y| > 1.
pub fn arccoth(y: f64) -> f64 {
    0.5 * (2.0 / (y - 1.0)).ln_1p()
}

/// sin(x)/x with the removable point handled.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < 1e-4 {
        1.0 - x * x / 6.0
    } else {
        x.sin() / x
    }
}
