//! Hydrogen bound-state radial wavefunctions R_nl in atomic units,
//! normalized so that integral R_nl^2 r^2 dr = 1.

use crate::special::{laguerre_deriv_scaled, laguerre_scaled, ln_factorial};

/// One radial eigenfunction with its normalization precomputed.
#[derive(Debug, Clone, Copy)]
pub struct RadialState {
    pub n: u32,
    pub l: u32,
    ln_norm: f64,
}

impl RadialState {
    pub fn new(n: u32, l: u32) -> Self {
        assert!(n >= 1 && l < n, "invalid hydrogen state (n={n}, l={l})");
        // R_nl = sqrt((2/n)^3 (n-l-1)!/(2n (n+l)!)) e^(-rho/2) rho^l L^(2l+1)_(n-l-1)(rho)
        let ln_norm = 1.5 * (2.0 / n as f64).ln()
            + 0.5 * (ln_factorial((n - l - 1) as u64)
                - (2.0 * n as f64).ln()
                - ln_factorial((n + l) as u64));
        RadialState { n, l, ln_norm }
    }

    /// R_nl(r).
    pub fn eval(&self, r: f64) -> f64 {
        if r <= 0.0 {
            return 0.0;
        }
        let rho = 2.0 * r / self.n as f64;
        let (lag, e2) = laguerre_scaled(self.n - self.l - 1, 2.0 * self.l as f64 + 1.0, rho);
        if lag == 0.0 {
            return 0.0;
        }
        let ln_mag = self.ln_norm + self.l as f64 * rho.ln() - 0.5 * rho
            + lag.abs().ln()
            + e2 as f64 * std::f64::consts::LN_2;
        lag.signum() * ln_mag.exp()
    }

    /// (R_nl(r), dR_nl/dr).
    pub fn eval_with_deriv(&self, r: f64) -> (f64, f64) {
        if r <= 0.0 {
            return (0.0, 0.0);
        }
        let n = self.n as f64;
        let l = self.l as f64;
        let rho = 2.0 * r / n;
        let m = self.n - self.l - 1;
        let alpha = 2.0 * l + 1.0;
        let (lag, e2) = laguerre_scaled(m, alpha, rho);
        let (dlag, de2) = laguerre_deriv_scaled(m, alpha, rho);
        let scale = (self.ln_norm + l * rho.ln() - 0.5 * rho).exp();
        let value = scale * lag * 2.0_f64.powi(e2 as i32);
        // dR/dr = (2/n) * d/drho [prefactor * rho^l e^(-rho/2) L]
        let dvalue = (2.0 / n)
            * scale
            * ((l / rho - 0.5) * lag * 2.0_f64.powi(e2 as i32)
                + dlag * 2.0_f64.powi(de2 as i32));
        (value, dvalue)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::quad;
    use approx::assert_relative_eq;

    #[test]
    fn r21_closed_form() {
        // R_21 = r e^(-r/2) / sqrt(24)
        let s = RadialState::new(2, 1);
        for r in [0.1, 0.5, 1.0, 3.0, 8.0] {
            let expect = r * (-r / 2.0_f64).exp() / 24.0_f64.sqrt();
            assert_relative_eq!(s.eval(r), expect, max_relative = 1e-12);
        }
    }

    #[test]
    fn r10_closed_form() {
        // R_10 = 2 e^-r
        let s = RadialState::new(1, 0);
        assert_relative_eq!(s.eval(1.3), 2.0 * (-1.3f64).exp(), max_relative = 1e-12);
    }

    #[test]
    fn normalization_and_orthogonality() {
        for (n, m) in [(2u32, 2u32), (5, 5), (20, 20), (45, 45), (2, 5), (20, 22), (45, 47)] {
            let sn = RadialState::new(n, 1);
            let sm = RadialState::new(m, 1);
            let rmax = 8.0 * (n.max(m) as f64).powi(2);
            let v = quad::integrate(|r| sn.eval(r) * sm.eval(r) * r * r, 0.0, rmax, 1e-10)
                .unwrap();
            let expect = if n == m { 1.0 } else { 0.0 };
            assert_relative_eq!(v, expect, epsilon = 1e-8);
        }
    }

    #[test]
    fn derivative_matches_finite_difference() {
        let s = RadialState::new(45, 1);
        for r in [50.0, 500.0, 2000.0, 3900.0] {
            let h = 1e-4 * r;
            let fd = (s.eval(r + h) - s.eval(r - h)) / (2.0 * h);
            let (_, d) = s.eval_with_deriv(r);
            assert_relative_eq!(fd, d, max_relative = 1e-5, epsilon = 1e-12);
        }
    }
}
