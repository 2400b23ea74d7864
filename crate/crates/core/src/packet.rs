//! Coherent superpositions, phase evolution (exact or Taylor-truncated), and
//! autocorrelation traces.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::radial::RadialState;
use crate::spectrum::{Spectrum, StarkSpectrum, StateIndex, TimeScaleSet};

/// Weighting-amplitude profile metadata.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketProfile {
    pub shape: String,
    pub sigma_n: f64,
    pub sigma_k: Option<f64>,
    pub window: u32,
}

/// A normalized superposition over a finite index window.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PacketCoefficients {
    /// Central principal quantum number nbar.
    pub center_n: f64,
    /// Central parabolic quantum number (0 for Stark packets).
    pub center_k: Option<f64>,
    pub entries: Vec<(StateIndex, Complex64)>,
    pub profile: Option<PacketProfile>,
}

/// Tolerance on the packet norm.
pub const NORM_TOL: f64 = 1e-12;

impl PacketCoefficients {
    /// Wrap and validate a coefficient set: unit norm and (for two-number
    /// indices) the Stark parity and |k| <= n-1 rules.
    pub fn new(
        center_n: f64,
        center_k: Option<f64>,
        entries: Vec<(StateIndex, Complex64)>,
        profile: Option<PacketProfile>,
    ) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::EmptyWindow);
        }
        let norm2: f64 = entries.iter().map(|(_, c)| c.norm_sqr()).sum();
        if (norm2 - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "packet norm^2 = {norm2} is not 1 within {NORM_TOL}"
            )));
        }
        for (idx, _) in &entries {
            if let StateIndex::Nk(n, k) = *idx {
                if k.abs() > n - 1 {
                    return Err(Error::InvalidIndex(format!("|k|={} exceeds n-1={}", k.abs(), n - 1)));
                }
                if !StarkSpectrum::parity_ok(n, k) {
                    return Err(Error::ParityViolation { n, k });
                }
            }
        }
        Ok(PacketCoefficients { center_n, center_k, entries, profile })
    }

    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|(_, c)| c.norm_sqr()).sum()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn is_stark(&self) -> bool {
        self.entries.iter().any(|(i, _)| matches!(i, StateIndex::Nk(..)))
    }
}

/// Gaussian packet over a single quantum number:
/// |c_n|^2 proportional to exp(-(n-nbar)^2 / (2 sigma^2)).
pub fn build_packet(
    spectrum: &Spectrum,
    nbar: f64,
    sigma: f64,
    window: u32,
) -> Result<PacketCoefficients> {
    if spectrum.is_stark() {
        return Err(Error::InvalidParameter(
            "stark packets need two widths; use build_stark_packet".into(),
        ));
    }
    if sigma <= 0.0 {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    if window < 1 {
        return Err(Error::InvalidParameter("window must be >= 1".into()));
    }
    spectrum.center_energy(nbar).map_err(|_| Error::InvalidCenter(format!("{nbar}")))?;
    let n0 = nbar.round() as i64;
    let mut entries = Vec::new();
    for n in (n0 - window as i64)..=(n0 + window as i64) {
        let idx = StateIndex::n(n);
        if spectrum.energy(idx).is_err() {
            continue;
        }
        let d = n as f64 - nbar;
        let amp = (-d * d / (4.0 * sigma * sigma)).exp();
        if amp > 0.0 {
            entries.push((idx, Complex64::new(amp, 0.0)));
        }
    }
    normalize(&mut entries)?;
    PacketCoefficients::new(
        nbar,
        None,
        entries,
        Some(PacketProfile { shape: "gaussian".into(), sigma_n: sigma, sigma_k: None, window }),
    )
}

/// Default window half-width for a given sigma.
pub fn default_window(sigma: f64) -> u32 {
    (5.0 * sigma).ceil() as u32
}

/// Separable Gaussian Stark packet centered on (nbar, kbar = 0), restricted
/// to parity-valid pairs.
pub fn build_stark_packet(
    spectrum: &Spectrum,
    nbar: i64,
    sigma_n: f64,
    sigma_k: f64,
    window: u32,
) -> Result<PacketCoefficients> {
    if !spectrum.is_stark() {
        return Err(Error::InvalidParameter("build_stark_packet requires a stark spectrum".into()));
    }
    if sigma_n <= 0.0 || sigma_k <= 0.0 {
        return Err(Error::InvalidParameter("sigmas must be positive".into()));
    }
    let w = window as i64;
    let mut entries = Vec::new();
    for n in (nbar - w)..=(nbar + w) {
        for k in -w..=w {
            let idx = StateIndex::nk(n, k);
            if spectrum.energy(idx).is_err() {
                continue;
            }
            let dn = (n - nbar) as f64;
            let amp = (-dn * dn / (4.0 * sigma_n * sigma_n)
                - (k * k) as f64 / (4.0 * sigma_k * sigma_k))
                .exp();
            entries.push((idx, Complex64::new(amp, 0.0)));
        }
    }
    normalize(&mut entries)?;
    PacketCoefficients::new(
        nbar as f64,
        Some(0.0),
        entries,
        Some(PacketProfile {
            shape: "gaussian".into(),
            sigma_n,
            sigma_k: Some(sigma_k),
            window,
        }),
    )
}

fn normalize(entries: &mut Vec<(StateIndex, Complex64)>) -> Result<()> {
    let norm2: f64 = entries.iter().map(|(_, c)| c.norm_sqr()).sum();
    if norm2 <= 0.0 || entries.is_empty() {
        return Err(Error::EmptyWindow);
    }
    let scale = norm2.sqrt().recip();
    for (_, c) in entries.iter_mut() {
        *c *= scale;
    }
    Ok(())
}

/// Phase evolution rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum PhaseMode {
    /// exp(-i (E - E_center) t) with the exact model energy.
    Exact,
    /// Taylor phase truncated at the given order (1, 2 or 3).
    Truncated(u8),
}

/// Phase model: the mode plus the reference time scales it draws rates from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PhaseModel {
    pub mode: PhaseMode,
    pub scales: TimeScaleSet,
}

impl PhaseModel {
    pub fn exact(scales: TimeScaleSet) -> Self {
        PhaseModel { mode: PhaseMode::Exact, scales }
    }

    pub fn truncated(order: u8, scales: TimeScaleSet) -> Result<Self> {
        if !(1..=3).contains(&order) {
            return Err(Error::InvalidParameter(format!(
                "truncation order must be 1..=3, got {order}"
            )));
        }
        Ok(PhaseModel { mode: PhaseMode::Truncated(order), scales })
    }

    /// Signed angular rate omega for a state, so that its phase factor is
    /// exp(-i omega t).
    pub fn rate(&self, spectrum: &Spectrum, center_n: f64, idx: StateIndex) -> Result<f64> {
        match self.mode {
            PhaseMode::Exact => {
                let e = spectrum.energy(idx)?;
                let e0 = spectrum.center_energy(center_n)?;
                Ok(e - e0)
            }
            PhaseMode::Truncated(order) => {
                let s = &self.scales;
                let dn = idx.principal() as f64 - s.expansion_center;
                let mut omega = 0.0;
                match idx {
                    StateIndex::N(_) => {
                        let a1 = s.t_cl_n.ok_or(Error::UndefinedScale("T_cl"))?.rate;
                        omega += a1 * dn;
                        if order >= 2 {
                            let a2 = s.t_rev_n.ok_or(Error::UndefinedScale("t_rev"))?.rate;
                            omega += a2 * dn * dn;
                        }
                        if order >= 3 {
                            let a3 = s.t_sr.ok_or(Error::UndefinedScale("t_sr"))?.rate;
                            omega += a3 * dn * dn * dn;
                        }
                    }
                    StateIndex::Nk(_, k) => {
                        let k = k as f64 - s.center_k.unwrap_or(0.0);
                        let a_n = s.t_cl_n.ok_or(Error::UndefinedScale("T_cl^(n)"))?.rate;
                        let a_k = s.t_cl_k.ok_or(Error::UndefinedScale("T_cl^(k)"))?.rate;
                        omega += a_n * dn + a_k * k;
                        if order >= 2 {
                            let a_nn = s.t_rev_n.ok_or(Error::UndefinedScale("t_rev^(n)"))?.rate;
                            let a_nk = s.t_rev_nk.ok_or(Error::UndefinedScale("t_rev^(nk)"))?.rate;
                            omega += a_nn * dn * dn + a_nk * dn * k;
                        }
                        if order >= 3 {
                            return Err(Error::UndefinedScale("t_sr"));
                        }
                    }
                }
                Ok(omega)
            }
        }
    }
}

/// Unit phase factor of one state at time t.
pub fn phase_at(
    spectrum: &Spectrum,
    packet: &PacketCoefficients,
    model: &PhaseModel,
    idx: StateIndex,
    t: f64,
) -> Result<Complex64> {
    if !packet.entries.iter().any(|(i, _)| *i == idx) {
        return Err(Error::InvalidIndex(format!("{idx:?} not in packet")));
    }
    let omega = model.rate(spectrum, packet.center_n, idx)?;
    Ok(Complex64::from_polar(1.0, -omega * t))
}

/// Trace annotations filled in by the analysis module.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TraceAnnotations {
    /// (time, |A|^2) of detected peaks.
    pub peaks: Vec<(f64, f64)>,
    /// Times of detected nodes (deep minima).
    pub nodes: Vec<f64>,
}

/// Sampled autocorrelation A(t) = <Psi(0)|Psi(t)>.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutocorrelationTrace {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    pub abs2: Vec<f64>,
    #[serde(default)]
    pub annotations: TraceAnnotations,
}

impl AutocorrelationTrace {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    /// Uniform grid step; the evolution grids used here are uniform.
    pub fn dt(&self) -> Result<f64> {
        if self.times.len() < 2 {
            return Err(Error::TraceTooShort("need at least 2 samples".into()));
        }
        Ok(self.times[1] - self.times[0])
    }
}

/// Evaluate the autocorrelation on a strictly increasing time grid.
///
/// Uses eigenbasis orthonormality: A(t) = sum |c|^2 exp(-i omega t); no
/// spatial integrals are involved.
pub fn autocorrelation(
    spectrum: &Spectrum,
    packet: &PacketCoefficients,
    model: &PhaseModel,
    times: &[f64],
) -> Result<AutocorrelationTrace> {
    if times.len() < 2 {
        return Err(Error::TraceTooShort("time grid needs at least 2 points".into()));
    }
    if times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
    }
    let weights_rates: Vec<(f64, f64)> = packet
        .entries
        .iter()
        .map(|(idx, c)| Ok((c.norm_sqr(), model.rate(spectrum, packet.center_n, *idx)?)))
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(times.len());
    let mut abs2 = Vec::with_capacity(times.len());
    for &t in times {
        let mut a = Complex64::new(0.0, 0.0);
        for &(w, omega) in &weights_rates {
            a += w * Complex64::from_polar(1.0, -omega * t);
        }
        abs2.push(a.norm_sqr());
        values.push(a);
    }
    Ok(AutocorrelationTrace {
        times: times.to_vec(),
        values,
        abs2,
        annotations: TraceAnnotations::default(),
    })
}

/// Uniformly sampled closed interval.
pub fn time_grid(t0: f64, t1: f64, samples: usize) -> Vec<f64> {
    assert!(samples >= 2 && t1 > t0);
    let dt = (t1 - t0) / (samples - 1) as f64;
    (0..samples).map(|i| t0 + i as f64 * dt).collect()
}

/// Radial probability density |Psi(r, t)|^2 r^2 for a hydrogenic l = 1 packet.
#[derive(Debug, Clone)]
pub struct RadialDensity {
    pub r: Vec<f64>,
    pub density: Vec<f64>,
    /// Trapezoid integral of the density over the grid.
    pub norm: f64,
}

pub fn radial_density(
    spectrum: &Spectrum,
    packet: &PacketCoefficients,
    model: &PhaseModel,
    r_grid: &[f64],
    t: f64,
) -> Result<RadialDensity> {
    if !matches!(spectrum, Spectrum::Hydrogen(_)) {
        return Err(Error::InvalidParameter(
            "radial densities are implemented for the hydrogenic model".into(),
        ));
    }
    if r_grid.len() < 8 || r_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::GridTooCoarse("radial grid must be increasing with >= 8 points".into()));
    }
    let states: Vec<(RadialState, Complex64)> = packet
        .entries
        .iter()
        .map(|(idx, c)| {
            let n = idx.principal();
            if n < 2 {
                return Err(Error::InvalidIndex(format!("l=1 requires n >= 2, got {n}")));
            }
            let omega = model.rate(spectrum, packet.center_n, *idx)?;
            Ok((RadialState::new(n as u32, 1), c * Complex64::from_polar(1.0, -omega * t)))
        })
        .collect::<Result<_>>()?;
    let mut density = Vec::with_capacity(r_grid.len());
    for &r in r_grid {
        let psi: Complex64 = states.iter().map(|(s, a)| a * s.eval(r)).sum();
        density.push(psi.norm_sqr() * r * r);
    }
    // trapezoid norm check on the caller's grid
    let mut norm = 0.0;
    for i in 1..r_grid.len() {
        norm += 0.5 * (density[i] + density[i - 1]) * (r_grid[i] - r_grid[i - 1]);
    }
    if (norm - 1.0).abs() > 1e-6 {
        return Err(Error::GridTooCoarse(format!(
            "density integrates to {norm}, not 1 within 1e-6; refine or extend the radial grid"
        )));
    }
    Ok(RadialDensity { r: r_grid.to_vec(), density, norm })
}
