//! Small special-function kit: log-gamma and scaled associated Laguerre
//! evaluation for the radial machinery.

/// Lanczos g=7, n=9 coefficients.
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

/// ln Gamma(x) for x > 0 (Lanczos approximation, ~1e-13 relative).
pub fn ln_gamma(x: f64) -> f64 {
    assert!(x > 0.0, "ln_gamma requires positive argument, got {x}");
    if x < 0.5 {
        // reflection: Gamma(x) Gamma(1-x) = pi / sin(pi x)
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut acc = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        acc += c / (x + i as f64);
    }
    let t = x + 7.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + acc.ln()
}

/// ln(n!) by direct summation (exact-ish for the modest n used here).
pub fn ln_factorial(n: u64) -> f64 {
    (2..=n).map(|k| (k as f64).ln()).sum()
}

/// Associated Laguerre L^alpha_m(x) with power-of-two rescaling.
///
/// Returns (mantissa, exponent) with value = mantissa * 2^exponent. The
/// upward recurrence overflows f64 for large m and x; both recurrence values
/// are renormalized whenever they grow past 2^512.
pub fn laguerre_scaled(m: u32, alpha: f64, x: f64) -> (f64, i64) {
    if m == 0 {
        return (1.0, 0);
    }
    let mut prev = 1.0_f64; // L_0
    let mut cur = 1.0 + alpha - x; // L_1
    let mut exp2: i64 = 0;
    const LIMIT: f64 = 1.3407807929942597e154; // 2^512
    for j in 1..m {
        let jf = j as f64;
        let next = ((2.0 * jf + 1.0 + alpha - x) * cur - (jf + alpha) * prev) / (jf + 1.0);
        prev = cur;
        cur = next;
        if cur.abs() > LIMIT || prev.abs() > LIMIT {
            cur *= 2.0_f64.powi(-512);
            prev *= 2.0_f64.powi(-512);
            exp2 += 512;
        }
    }
    (cur, exp2)
}

/// d/dx L^alpha_m(x) = -L^(alpha+1)_(m-1)(x), rescaled like `laguerre_scaled`.
pub fn laguerre_deriv_scaled(m: u32, alpha: f64, x: f64) -> (f64, i64) {
    if m == 0 {
        return (0.0, 0);
    }
    let (v, e) = laguerre_scaled(m - 1, alpha + 1.0, x);
    (-v, e)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn gamma_values() {
        assert_relative_eq!(ln_gamma(1.0), 0.0, epsilon = 1e-13);
        assert_relative_eq!(ln_gamma(0.5), std::f64::consts::PI.sqrt().ln(), epsilon = 1e-13);
        assert_relative_eq!(ln_gamma(10.0), 362880.0_f64.ln(), max_relative = 1e-12);
        assert_relative_eq!(ln_gamma(183.5), {
            // Stirling series with two correction terms as an independent check
            let x: f64 = 183.5;
            (x - 0.5) * x.ln() - x + 0.5 * (2.0 * std::f64::consts::PI).ln()
                + 1.0 / (12.0 * x)
                - 1.0 / (360.0 * x.powi(3))
        }, max_relative = 1e-12);
    }

    #[test]
    fn factorial_agrees_with_gamma() {
        for n in [0u64, 1, 5, 20, 100] {
            assert_relative_eq!(ln_factorial(n), ln_gamma(n as f64 + 1.0), max_relative = 1e-11, epsilon = 1e-11);
        }
    }

    #[test]
    fn laguerre_small_orders() {
        // L^a_1(x) = 1 + a - x, L^a_2(x) = x^2/2 - (a+2)x + (a+1)(a+2)/2
        let (v, e) = laguerre_scaled(1, 3.0, 2.5);
        assert_eq!(e, 0);
        assert_relative_eq!(v, 1.5, epsilon = 1e-14);
        let (v, e) = laguerre_scaled(2, 3.0, 2.5);
        assert_eq!(e, 0);
        assert_relative_eq!(v, 2.5f64 * 2.5 / 2.0 - 5.0 * 2.5 + 10.0, epsilon = 1e-12);
    }

    #[test]
    fn laguerre_derivative_identity() {
        // finite-difference check of dL/dx = -L^(a+1)_(m-1)
        let (m, a, x) = (8u32, 3.0, 1.7);
        let h = 1e-6;
        let (vp, ep) = laguerre_scaled(m, a, x + h);
        let (vm, em) = laguerre_scaled(m, a, x - h);
        assert_eq!(ep, 0);
        assert_eq!(em, 0);
        let fd = (vp - vm) / (2.0 * h);
        let (d, ed) = laguerre_deriv_scaled(m, a, x);
        assert_eq!(ed, 0);
        assert_relative_eq!(fd, d, max_relative = 1e-8);
    }
}
