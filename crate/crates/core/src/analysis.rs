//! Revival structure: prediction from time scales, detection on traces, and
//! spectrum classification.

use num_integer::Integer;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::packet::AutocorrelationTrace;
use crate::spectrum::{Spectrum, TimeScaleSet};

/// Default maximum denominator for fractional-revival predictions.
pub const DEFAULT_MAX_Q_REVIVAL: u32 = 8;
/// Default maximum q for fractional-superrevival predictions.
pub const DEFAULT_MAX_Q_SUPERREVIVAL: u32 = 12;

/// Peak-detection thresholds (|A|^2 units).
pub const PEAK_MIN_HEIGHT: f64 = 0.1;
pub const PEAK_MIN_PROMINENCE: f64 = 0.05;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeatureKind {
    ClassicalPeriod,
    FractionalRevival { p: u32, q: u32 },
    FullRevival,
    FractionalSuperrevival { q: u32 },
    FullSuperrevival,
}

/// One predicted feature of the revival hierarchy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub kind: FeatureKind,
    /// Occurrence time (atomic units). For ClassicalPeriod this is the period.
    pub time: f64,
    /// Expected local periodicity of |A(t)|^2 near the feature.
    pub local_period: Option<f64>,
    /// The principal superrevival (q = 6), where a single packet reforms.
    pub principal: bool,
}

/// A detected |A|^2 peak.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub time: f64,
    pub height: f64,
    pub local_period: Option<f64>,
}

/// Match between a prediction and a detection.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureMatch {
    pub prediction: usize,
    pub detection: usize,
    pub time_offset: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct RevivalReport {
    pub predictions: Vec<Prediction>,
    pub detections: Vec<Detection>,
    pub matches: Vec<FeatureMatch>,
}

impl RevivalReport {
    /// Human-readable table.
    pub fn table(&self) -> String {
        let mut out = String::new();
        out.push_str("predictions:\n");
        out.push_str("  kind                      time (a.u.)        local period (a.u.)\n");
        for p in &self.predictions {
            let kind = match p.kind {
                FeatureKind::ClassicalPeriod => "classical period".to_string(),
                FeatureKind::FractionalRevival { p, q } => format!("revival {p}/{q} t_rev"),
                FeatureKind::FullRevival => "full revival".to_string(),
                FeatureKind::FractionalSuperrevival { q } => format!("superrevival t_sr/{q}"),
                FeatureKind::FullSuperrevival => "full superrevival".to_string(),
            };
            let lp = p
                .local_period
                .map(|v| format!("{v:.6e}"))
                .unwrap_or_else(|| "-".into());
            let star = if p.principal { " *" } else { "" };
            out.push_str(&format!("  {kind:<24}  {:.6e}       {lp}{star}\n", p.time));
        }
        if !self.detections.is_empty() {
            out.push_str("detections:\n");
            out.push_str("  time (a.u.)        |A|^2     local period (a.u.)\n");
            for d in &self.detections {
                let lp = d
                    .local_period
                    .map(|v| format!("{v:.6e}"))
                    .unwrap_or_else(|| "-".into());
                out.push_str(&format!("  {:.6e}       {:.4}    {lp}\n", d.time, d.height));
            }
            out.push_str(&format!("matched: {} of {}\n", self.matches.len(), self.detections.len()));
        }
        out
    }
}

/// Classification of a spectrum by which time scales exist.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectrumClass {
    pub has_classical: bool,
    pub has_revival: bool,
    pub has_superrevival: bool,
    pub verdict: String,
}

fn verdict_for(has_revival: bool, has_superrevival: bool) -> &'static str {
    match (has_revival, has_superrevival) {
        (true, true) => "classical periods, fractional/full revivals, and fractional/full superrevivals",
        (true, false) => "perfect full and fractional revivals and no superrevivals",
        (false, false) => "nondispersive: classical periodicity only",
        (false, true) => "classical periodicity with third-order recurrences only",
    }
}

/// Classify a spectrum from the defined-scale pattern at the given center.
pub fn classify_spectrum(spectrum: &Spectrum, center: f64) -> Result<SpectrumClass> {
    let ts = spectrum.time_scales(center)?;
    let has_classical = ts.t_cl_n.is_some();
    let has_revival = ts.t_rev_n.is_some();
    let has_superrevival = ts.t_sr.is_some();
    Ok(SpectrumClass {
        has_classical,
        has_revival,
        has_superrevival,
        verdict: verdict_for(has_revival, has_superrevival).to_string(),
    })
}

/// Expected |A|^2 periodicity near the fractional revival (p/q) t_rev.
///
/// At that time the packet splits into q (q odd) or q/2 (q even) subsidiary
/// waves, so the classical-scale period is T_cl/q or 2 T_cl/q.
fn fractional_revival_period(t_cl: f64, q: u32) -> f64 {
    if q % 2 == 1 {
        t_cl / q as f64
    } else {
        2.0 * t_cl / q as f64
    }
}

/// Predict the revival hierarchy from a TimeScaleSet. Levels whose scale is
/// undefined are omitted.
pub fn predict_revivals(scales: &TimeScaleSet, max_q: u32) -> Result<RevivalReport> {
    predict_revivals_with(scales, max_q, DEFAULT_MAX_Q_SUPERREVIVAL)
}

pub fn predict_revivals_with(
    scales: &TimeScaleSet,
    max_q_revival: u32,
    max_q_superrevival: u32,
) -> Result<RevivalReport> {
    let t_cl = scales.classical_period()?;
    let mut predictions = vec![Prediction {
        kind: FeatureKind::ClassicalPeriod,
        time: t_cl,
        local_period: Some(t_cl),
        principal: false,
    }];
    if let Some(rev) = scales.t_rev_n {
        let t_rev = rev.time;
        for q in 2..=max_q_revival {
            for p in 1..q {
                if p.gcd(&q) != 1 {
                    continue;
                }
                predictions.push(Prediction {
                    kind: FeatureKind::FractionalRevival { p, q },
                    time: p as f64 / q as f64 * t_rev,
                    local_period: Some(fractional_revival_period(t_cl, q)),
                    principal: false,
                });
            }
        }
        predictions.push(Prediction {
            kind: FeatureKind::FullRevival,
            time: t_rev,
            local_period: Some(t_cl),
            principal: false,
        });
        if let Some(sr) = scales.t_sr {
            let t_sr = sr.time;
            // fractional superrevivals exist at t_sr/q for q a multiple of 3,
            // with local period (3/q) t_rev
            let mut q = 3;
            while q <= max_q_superrevival {
                predictions.push(Prediction {
                    kind: FeatureKind::FractionalSuperrevival { q },
                    time: t_sr / q as f64,
                    local_period: Some(3.0 / q as f64 * t_rev),
                    principal: q == 6,
                });
                q += 3;
            }
            predictions.push(Prediction {
                kind: FeatureKind::FullSuperrevival,
                time: t_sr,
                local_period: None,
                principal: false,
            });
        }
    }
    predictions.sort_by(|a, b| a.time.total_cmp(&b.time));
    Ok(RevivalReport { predictions, detections: Vec::new(), matches: Vec::new() })
}

/// A local maximum of |A|^2.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Peak {
    pub time: f64,
    pub height: f64,
}

/// Local maxima of |A|^2 above `min_height` with prominence at least
/// `min_prominence`; maxima closer than `merge_within` are merged keeping the
/// tallest.
pub fn find_peaks(
    trace: &AutocorrelationTrace,
    min_height: f64,
    min_prominence: f64,
    merge_within: f64,
) -> Result<Vec<Peak>> {
    let y = &trace.abs2;
    if y.len() < 3 {
        return Err(Error::TraceTooShort("peak detection needs >= 3 samples".into()));
    }
    let mut raw = Vec::new();
    for i in 1..y.len() - 1 {
        if y[i] >= y[i - 1] && y[i] > y[i + 1] && y[i] >= min_height {
            // prominence: drop to the highest saddle separating this peak
            // from taller terrain on each side
            let mut left_min = y[i];
            let mut j = i;
            while j > 0 && y[j - 1] <= y[i] {
                j -= 1;
                left_min = left_min.min(y[j]);
            }
            if j == 0 {
                left_min = y[..=i].iter().cloned().fold(f64::MAX, f64::min);
            }
            let mut right_min = y[i];
            let mut j = i;
            while j + 1 < y.len() && y[j + 1] <= y[i] {
                j += 1;
                right_min = right_min.min(y[j]);
            }
            if j + 1 == y.len() {
                right_min = y[i..].iter().cloned().fold(f64::MAX, f64::min);
            }
            let prominence = y[i] - left_min.max(right_min);
            if prominence >= min_prominence {
                raw.push(Peak { time: trace.times[i], height: y[i] });
            }
        }
    }
    let mut merged: Vec<Peak> = Vec::new();
    for p in raw {
        match merged.last_mut() {
            Some(last) if p.time - last.time < merge_within => {
                if p.height > last.height {
                    *last = p;
                }
            }
            _ => merged.push(p),
        }
    }
    Ok(merged)
}

fn moving_average(y: &[f64], half: usize) -> Vec<f64> {
    let mut prefix = Vec::with_capacity(y.len() + 1);
    prefix.push(0.0);
    for v in y {
        prefix.push(prefix.last().unwrap() + v);
    }
    (0..y.len())
        .map(|i| {
            let a = i.saturating_sub(half);
            let b = (i + half + 1).min(y.len());
            (prefix[b] - prefix[a]) / (b - a) as f64
        })
        .collect()
}

/// Measure the local periodicity of |A|^2 around `t_center`.
///
/// The trace is smoothed on a fraction of the candidate period, the dominant
/// recurrence lobe nearest `t_center` is anchored, the neighbouring
/// recurrences are located by windowed centroids, and the period is the
/// least-squares slope of centroid time against recurrence index. The
/// candidate period `p0` only sets the search windows (each +- p0/4), so a
/// true period anywhere within ~20% of the candidate is measured faithfully.
pub fn local_period(
    trace: &AutocorrelationTrace,
    t_center: f64,
    p0: f64,
    max_recurrences: u32,
) -> Result<f64> {
    local_period_series(&trace.times, &trace.abs2, t_center, p0, max_recurrences)
}

/// `local_period` over a raw uniformly sampled series.
pub fn local_period_series(
    times: &[f64],
    ys: &[f64],
    t_center: f64,
    p0: f64,
    max_recurrences: u32,
) -> Result<f64> {
    if times.len() < 2 || times.len() != ys.len() {
        return Err(Error::TraceTooShort("need at least 2 samples".into()));
    }
    let dt = times[1] - times[0];
    if dt > p0 / 16.0 {
        return Err(Error::InsufficientResolution(format!(
            "need >= 16 samples per candidate period, have {:.1}",
            p0 / dt
        )));
    }
    let half = ((0.1 * p0 / dt).round() as usize).max(1);
    let env = moving_average(ys, half);
    let t0_grid = times[0];
    let idx_of = |t: f64| ((t - t0_grid) / dt).round() as i64;
    // anchor at the envelope maximum within +- p0/2 of the center
    let a = idx_of(t_center - p0 / 2.0).max(0) as usize;
    let b = (idx_of(t_center + p0 / 2.0) as usize).min(env.len() - 1);
    if a >= b {
        return Err(Error::TraceTooShort("trace does not cover the requested window".into()));
    }
    let anchor = a + env[a..=b]
        .iter()
        .enumerate()
        .max_by(|x, y| x.1.total_cmp(y.1))
        .unwrap()
        .0;
    let t_anchor = times[anchor];
    // centroid of each recurrence lobe at t_anchor + j p0
    let mut pts: Vec<(f64, f64)> = Vec::new();
    let m = max_recurrences as i64;
    for j in -m..=m {
        let tc = t_anchor + j as f64 * p0;
        let a = idx_of(tc - p0 / 4.0);
        let b = idx_of(tc + p0 / 4.0);
        if a < 0 || b as usize >= env.len() {
            continue;
        }
        let (a, b) = (a as usize, b as usize);
        let seg = &env[a..=b];
        let lo = seg.iter().cloned().fold(f64::MAX, f64::min);
        let hi = seg.iter().cloned().fold(f64::MIN, f64::max);
        let thr = lo + 0.5 * (hi - lo);
        let mut wsum = 0.0;
        let mut tsum = 0.0;
        for (i, &v) in seg.iter().enumerate() {
            let w = (v - thr).max(0.0);
            wsum += w;
            tsum += w * times[a + i];
        }
        if wsum > 0.0 {
            pts.push((j as f64, tsum / wsum));
        }
    }
    if pts.len() < 3 {
        return Err(Error::TraceTooShort(format!(
            "only {} recurrence lobes inside the trace; need >= 3",
            pts.len()
        )));
    }
    // least-squares slope
    let n = pts.len() as f64;
    let sj: f64 = pts.iter().map(|p| p.0).sum();
    let st: f64 = pts.iter().map(|p| p.1).sum();
    let sjj: f64 = pts.iter().map(|p| p.0 * p.0).sum();
    let sjt: f64 = pts.iter().map(|p| p.0 * p.1).sum();
    let denom = sjj - sj * sj / n;
    if denom <= 0.0 {
        return Err(Error::InsufficientResolution("degenerate recurrence fit".into()));
    }
    Ok((sjt - sj * st / n) / denom)
}

/// Detect peaks in a trace, estimate their local periodicity, and match them
/// against the predicted revival hierarchy. Detections are matched to the
/// nearest prediction within 2% of t_rev.
pub fn detect_structure(
    trace: &AutocorrelationTrace,
    scales: &TimeScaleSet,
) -> Result<RevivalReport> {
    let mut report = predict_revivals(scales, DEFAULT_MAX_Q_REVIVAL)?;
    let t_cl = scales.classical_period()?;
    let peaks = find_peaks(trace, PEAK_MIN_HEIGHT, PEAK_MIN_PROMINENCE, t_cl / 4.0)?;
    let match_tol = 0.02
        * scales
            .t_rev_n
            .map(|s| s.time)
            .unwrap_or_else(|| trace.times.last().unwrap() - trace.times[0]);
    for peak in &peaks {
        // local periodicity against the nearest prediction's expectation
        let nearest = report
            .predictions
            .iter()
            .enumerate()
            .filter(|(_, p)| !matches!(p.kind, FeatureKind::ClassicalPeriod))
            .min_by(|a, b| {
                (a.1.time - peak.time).abs().total_cmp(&(b.1.time - peak.time).abs())
            });
        let local = nearest
            .and_then(|(_, p)| p.local_period)
            .and_then(|p0| local_period(trace, peak.time, p0, 2).ok());
        report.detections.push(Detection { time: peak.time, height: peak.height, local_period: local });
    }
    for (di, d) in report.detections.iter().enumerate() {
        let best = report
            .predictions
            .iter()
            .enumerate()
            .filter(|(_, p)| !matches!(p.kind, FeatureKind::ClassicalPeriod))
            .min_by(|a, b| (a.1.time - d.time).abs().total_cmp(&(b.1.time - d.time).abs()));
        if let Some((pi, p)) = best {
            let off = d.time - p.time;
            if off.abs() <= match_tol {
                report.matches.push(FeatureMatch { prediction: pi, detection: di, time_offset: off });
            }
        }
    }
    Ok(report)
}

/// Write peak/node annotations into a trace.
pub fn annotate(trace: &mut AutocorrelationTrace, t_cl: f64) -> Result<()> {
    let peaks = find_peaks(trace, PEAK_MIN_HEIGHT, PEAK_MIN_PROMINENCE, t_cl / 4.0)?;
    trace.annotations.peaks = peaks.iter().map(|p| (p.time, p.height)).collect();
    let max = trace.abs2.iter().cloned().fold(0.0, f64::max);
    let mut nodes = Vec::new();
    for i in 1..trace.abs2.len() - 1 {
        if trace.abs2[i] <= trace.abs2[i - 1]
            && trace.abs2[i] < trace.abs2[i + 1]
            && trace.abs2[i] < 0.05 * max
        {
            nodes.push(trace.times[i]);
        }
    }
    trace.annotations.nodes = nodes;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::{autocorrelation, build_packet, time_grid, PhaseModel};
    use crate::spectrum::TabulatedSpectrum;
    use approx::assert_relative_eq;

    fn hydrogen45() -> (Spectrum, TimeScaleSet) {
        let s = Spectrum::hydrogen();
        let ts = s.time_scales(45.0).unwrap();
        (s, ts)
    }

    #[test]
    fn predictions_include_principal_superrevival() {
        let (_, ts) = hydrogen45();
        let r = predict_revivals(&ts, 8).unwrap();
        let sr6 = r
            .predictions
            .iter()
            .find(|p| matches!(p.kind, FeatureKind::FractionalSuperrevival { q: 6 }))
            .unwrap();
        assert!(sr6.principal);
        let tsr = ts.superrevival_time().unwrap();
        assert_relative_eq!(sr6.time, tsr / 6.0, max_relative = 1e-14);
        // SI: ~2.34 ns for nbar = 45
        assert_relative_eq!(
            crate::units::time_to_seconds(sr6.time),
            2.337e-9,
            max_relative = 1e-3
        );
        // q = 6 local period is t_rev/2
        assert_relative_eq!(
            sr6.local_period.unwrap(),
            ts.revival_time().unwrap() / 2.0,
            max_relative = 1e-14
        );
    }

    #[test]
    fn superrevival_qs_are_multiples_of_three() {
        let (_, ts) = hydrogen45();
        let r = predict_revivals_with(&ts, 8, 12).unwrap();
        for p in &r.predictions {
            if let FeatureKind::FractionalSuperrevival { q } = p.kind {
                assert_eq!(q % 3, 0);
                assert!(q >= 3);
            }
        }
    }

    #[test]
    fn quadratic_spectrum_predicts_no_superrevivals() {
        let energies: Vec<f64> = (5..=15).map(|n| (n * n) as f64 * 0.013).collect();
        let s = Spectrum::Tabulated(TabulatedSpectrum::new(5, energies).unwrap());
        let ts = s.time_scales(10.0).unwrap();
        let r = predict_revivals(&ts, 8).unwrap();
        assert!(!r
            .predictions
            .iter()
            .any(|p| matches!(p.kind, FeatureKind::FractionalSuperrevival { .. } | FeatureKind::FullSuperrevival)));
        assert!(r.predictions.iter().any(|p| matches!(p.kind, FeatureKind::FullRevival)));
    }

    #[test]
    fn predictions_scale_homogeneously() {
        let (_, ts) = hydrogen45();
        let lambda = 3.7;
        let scaled = TimeScaleSet {
            t_cl_n: ts.t_cl_n.map(|s| crate::spectrum::Scale { time: s.time * lambda, rate: s.rate / lambda }),
            t_rev_n: ts.t_rev_n.map(|s| crate::spectrum::Scale { time: s.time * lambda, rate: s.rate / lambda }),
            t_sr: ts.t_sr.map(|s| crate::spectrum::Scale { time: s.time * lambda, rate: s.rate / lambda }),
            ..ts.clone()
        };
        let a = predict_revivals(&ts, 8).unwrap();
        let b = predict_revivals(&scaled, 8).unwrap();
        assert_eq!(a.predictions.len(), b.predictions.len());
        for (x, y) in a.predictions.iter().zip(&b.predictions) {
            assert_eq!(x.kind, y.kind);
            assert_relative_eq!(y.time, lambda * x.time, max_relative = 1e-12);
            match (x.local_period, y.local_period) {
                (Some(px), Some(py)) => assert_relative_eq!(py, lambda * px, max_relative = 1e-12),
                (None, None) => {}
                _ => panic!("local period presence changed under rescaling"),
            }
        }
    }

    #[test]
    fn full_revival_detected_within_one_step() {
        let (s, ts) = hydrogen45();
        let p = build_packet(&s, 45.0, 2.5, 10).unwrap();
        let m = PhaseModel::truncated(2, ts.clone()).unwrap();
        let trev = ts.revival_time().unwrap();
        let tcl = ts.classical_period().unwrap();
        let grid = time_grid(trev - 2.0 * tcl, trev + 2.0 * tcl, 4097);
        let tr = autocorrelation(&s, &p, &m, &grid).unwrap();
        let report = detect_structure(&tr, &ts).unwrap();
        let top = report
            .detections
            .iter()
            .max_by(|a, b| a.height.total_cmp(&b.height))
            .unwrap();
        let dt = tr.dt().unwrap();
        assert!((top.time - trev).abs() <= dt, "off by {}", (top.time - trev).abs() / dt);
        assert!(top.height > 0.999);
        assert!(report
            .matches
            .iter()
            .any(|m| matches!(report.predictions[m.prediction].kind, FeatureKind::FullRevival)));
    }

    #[test]
    fn half_revival_local_period_is_tcl() {
        // At t_rev/2 the truncated(2) packet is a single subsidiary wave
        // shifted by half an orbit, so |A|^2 recurs with the classical
        // period itself.
        let (s, ts) = hydrogen45();
        let p = build_packet(&s, 45.0, 2.5, 10).unwrap();
        let m = PhaseModel::truncated(2, ts.clone()).unwrap();
        let trev = ts.revival_time().unwrap();
        let tcl = ts.classical_period().unwrap();
        let grid = time_grid(trev / 2.0 - 3.2 * tcl, trev / 2.0 + 3.2 * tcl, 16384);
        let tr = autocorrelation(&s, &p, &m, &grid).unwrap();
        let period = local_period(&tr, trev / 2.0, tcl, 2).unwrap();
        assert!((period - tcl).abs() / tcl < 0.02, "period/tcl = {}", period / tcl);
    }

    #[test]
    fn quarter_revival_local_period_is_half_tcl() {
        let (s, ts) = hydrogen45();
        let p = build_packet(&s, 45.0, 2.5, 10).unwrap();
        let m = PhaseModel::truncated(2, ts.clone()).unwrap();
        let trev = ts.revival_time().unwrap();
        let tcl = ts.classical_period().unwrap();
        let grid = time_grid(trev / 4.0 - 3.2 * tcl, trev / 4.0 + 3.2 * tcl, 16384);
        let tr = autocorrelation(&s, &p, &m, &grid).unwrap();
        let period = local_period(&tr, trev / 4.0, tcl / 2.0, 2).unwrap();
        assert!((period - tcl / 2.0).abs() / (tcl / 2.0) < 0.02);
    }

    #[test]
    fn classify_square_well() {
        let energies: Vec<f64> = (5..=15).map(|n| (n * n) as f64).collect();
        let s = Spectrum::Tabulated(TabulatedSpectrum::new(5, energies).unwrap());
        let c = classify_spectrum(&s, 10.0).unwrap();
        assert!(c.has_revival && !c.has_superrevival);
        assert_eq!(c.verdict, "perfect full and fractional revivals and no superrevivals");
    }

    #[test]
    fn classify_hydrogen_three_levels() {
        let c = classify_spectrum(&Spectrum::hydrogen(), 45.0).unwrap();
        assert!(c.has_classical && c.has_revival && c.has_superrevival);
        assert!(c.verdict.contains("superrevivals"));
    }

    #[test]
    fn classify_harmonic() {
        let energies: Vec<f64> = (1..=9).map(|n| 0.4 * n as f64).collect();
        let s = Spectrum::Tabulated(TabulatedSpectrum::new(1, energies).unwrap());
        let c = classify_spectrum(&s, 5.0).unwrap();
        assert!(c.has_classical && !c.has_revival && !c.has_superrevival);
        assert_eq!(c.verdict, "nondispersive: classical periodicity only");
    }

    #[test]
    fn report_json_and_table() {
        let (_, ts) = hydrogen45();
        let r = predict_revivals(&ts, 4).unwrap();
        let js = serde_json::to_string(&r).unwrap();
        let back: RevivalReport = serde_json::from_str(&js).unwrap();
        assert_eq!(r, back);
        let tab = r.table();
        assert!(tab.contains("full revival"));
        assert!(tab.contains("superrevival t_sr/6"));
    }
}
