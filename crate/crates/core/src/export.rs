//! CSV and JSON emission with pinned, reproducible formatting: 17
//! significant digits, '.' decimal separator, LF line endings.

use std::io::{self, Write};

use crate::error::{Error, Result};
use crate::packet::AutocorrelationTrace;
use crate::spectrum::TabulatedSpectrum;
use crate::squeezed::UncertaintySeries;
use crate::units;

/// Format a float with 17 significant digits.
pub fn g17(x: f64) -> String {
    format!("{x:.16e}")
}

/// Write an autocorrelation trace as CSV:
/// t_atomic, t_si, re_a, im_a, abs2.
pub fn write_trace_csv<W: Write>(w: &mut W, trace: &AutocorrelationTrace) -> io::Result<()> {
    writeln!(w, "t_atomic,t_si,re_a,im_a,abs2")?;
    for i in 0..trace.times.len() {
        let t = trace.times[i];
        let a = trace.values[i];
        writeln!(
            w,
            "{},{},{},{},{}",
            g17(t),
            g17(units::time_to_seconds(t)),
            g17(a.re),
            g17(a.im),
            g17(trace.abs2[i])
        )?;
    }
    Ok(())
}

/// Write an uncertainty series as CSV:
/// t_atomic, t_si, r_mean, r_std, pr_mean, pr_std, product.
pub fn write_uncertainty_csv<W: Write>(w: &mut W, series: &UncertaintySeries) -> io::Result<()> {
    writeln!(w, "t_atomic,t_si,r_mean,r_std,pr_mean,pr_std,product")?;
    for i in 0..series.times.len() {
        writeln!(
            w,
            "{},{},{},{},{},{},{}",
            g17(series.times[i]),
            g17(units::time_to_seconds(series.times[i])),
            g17(series.r_mean[i]),
            g17(series.r_std[i]),
            g17(series.pr_mean[i]),
            g17(series.pr_std[i]),
            g17(series.product[i])
        )?;
    }
    Ok(())
}

/// Load a tabulated spectrum from two-column CSV text (n, E_n). Lines
/// starting with '#' and a leading header row are skipped.
pub fn tabulated_from_csv(text: &str) -> Result<TabulatedSpectrum> {
    let mut rows: Vec<(i64, f64)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut parts = line.split(',');
        let a = parts.next().map(str::trim).unwrap_or("");
        let b = parts.next().map(str::trim).unwrap_or("");
        let n: i64 = match a.parse() {
            Ok(v) => v,
            Err(_) if lineno == 0 => continue, // header
            Err(_) => {
                return Err(Error::InvalidParameter(format!(
                    "line {}: cannot parse index '{a}'",
                    lineno + 1
                )))
            }
        };
        let e: f64 = b.parse().map_err(|_| {
            Error::InvalidParameter(format!("line {}: cannot parse energy '{b}'", lineno + 1))
        })?;
        rows.push((n, e));
    }
    rows.sort_by_key(|r| r.0);
    if rows.is_empty() {
        return Err(Error::InvalidParameter("empty energy table".into()));
    }
    let first = rows[0].0;
    for (i, (n, _)) in rows.iter().enumerate() {
        if *n != first + i as i64 {
            return Err(Error::InvalidParameter(format!(
                "table indices must be contiguous; missing n = {}",
                first + i as i64
            )));
        }
    }
    TabulatedSpectrum::new(first, rows.into_iter().map(|r| r.1).collect())
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn g17_has_17_significant_digits() {
        assert_eq!(g17(1.0), "1.0000000000000000e0");
        assert_eq!(g17(std::f64::consts::PI), "3.1415926535897931e0");
    }

    #[test]
    fn trace_csv_is_stable() {
        let tr = AutocorrelationTrace {
            times: vec![0.0, 1.0],
            values: vec![Complex64::new(1.0, 0.0), Complex64::new(0.5, -0.5)],
            abs2: vec![1.0, 0.5],
            annotations: Default::default(),
        };
        let mut buf = Vec::new();
        write_trace_csv(&mut buf, &tr).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t_atomic,t_si,re_a,im_a,abs2\n"));
        assert!(text.contains("2.4188843260000001e-17"));
        assert!(!text.contains('\r'));
    }

    #[test]
    fn csv_table_round_trip() {
        let text = "n,energy\n# comment\n12,-0.003\n10,-0.005\n11,-0.004\n13,-0.002\n14,-0.001\n";
        let tab = tabulated_from_csv(text).unwrap();
        assert_eq!(tab.first_n, 10);
        assert_eq!(tab.energies.len(), 5);
        assert_eq!(tab.energies[2], -0.003);
    }

    #[test]
    fn csv_rejects_gaps() {
        let text = "1,0.1\n2,0.2\n4,0.4\n5,0.5\n6,0.6\n";
        assert!(tabulated_from_csv(text).is_err());
    }
}
