//! Exact-rational helpers: continued-fraction rational approximation and
//! phases defined modulo one turn.

use num_complex::Complex64;
use num_rational::Ratio;
use num_traits::{Signed, Zero};

use crate::error::{Error, Result};

/// Best rational approximation of `x` by continued-fraction convergents with
/// denominator bounded by `max_denominator`.
///
/// Returns the convergent (in lowest terms) only if its relative error is at
/// most `tol_rel`; otherwise `None`. `x` must be positive and finite.
pub fn approximate_ratio(x: f64, tol_rel: f64, max_denominator: u64) -> Option<Ratio<i64>> {
    if !(x.is_finite() && x > 0.0) {
        return None;
    }
    let (mut h0, mut h1) = (1i128, 0i128); // numerators
    let (mut k0, mut k1) = (0i128, 1i128); // denominators
    let mut frac = x;
    let mut best: Option<(i128, i128)> = None;
    for _ in 0..64 {
        let a = frac.floor();
        if a > i64::MAX as f64 {
            break;
        }
        let ai = a as i128;
        let h = ai * h0 + h1;
        let k = ai * k0 + k1;
        if k as u128 > max_denominator as u128 {
            break;
        }
        best = Some((h, k));
        h1 = h0;
        h0 = h;
        k1 = k0;
        k0 = k;
        let rem = frac - a;
        if rem.abs() < 1e-18 * frac.abs().max(1.0) {
            break;
        }
        frac = 1.0 / rem;
    }
    let (h, k) = best?;
    let approx = h as f64 / k as f64;
    if ((approx - x) / x).abs() <= tol_rel {
        Some(Ratio::new(h as i64, k as i64))
    } else {
        None
    }
}

/// Reduce a rational to the interval [0, 1).
pub fn mod_one(r: Ratio<i128>) -> Ratio<i128> {
    let f = r - r.floor();
    debug_assert!(!f.is_negative() && f < Ratio::from_integer(1));
    f
}

/// exp(2 pi i r) with the turn count removed exactly in rational arithmetic.
pub fn phase_from_turns(r: Ratio<i128>) -> Complex64 {
    let f = mod_one(r);
    let x = *f.numer() as f64 / *f.denom() as f64;
    Complex64::from_polar(1.0, 2.0 * std::f64::consts::PI * x)
}

/// Parse a string like "1/12" or "3" into a positive rational in lowest terms.
pub fn parse_ratio(s: &str) -> Result<Ratio<i64>> {
    let parts: Vec<&str> = s.split('/').collect();
    let bad = || Error::InvalidParameter(format!("cannot parse ratio '{s}'"));
    let ratio = match parts.as_slice() {
        [n] => {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            Ratio::from_integer(n)
        }
        [n, d] => {
            let n: i64 = n.trim().parse().map_err(|_| bad())?;
            let d: i64 = d.trim().parse().map_err(|_| bad())?;
            if d == 0 {
                return Err(bad());
            }
            Ratio::new(n, d)
        }
        _ => return Err(bad()),
    };
    if ratio <= Ratio::zero() {
        return Err(Error::InvalidParameter(format!("ratio '{s}' must be positive")));
    }
    Ok(ratio)
}

/// Widen a 64-bit rational to 128 bits.
pub fn widen(r: Ratio<i64>) -> Ratio<i128> {
    Ratio::new(*r.numer() as i128, *r.denom() as i128)
}
