//! Energy-level models and the derivative-defined time scales that govern
//! wave-packet evolution.
//!
//! All energies are in atomic units. The hydrogenic rule is E_n = -1/(2 n^2);
//! quantum-defect spectra replace n by n* = n - delta(l); the first-order
//! Stark spectrum is E_nk = -1/(2 n^2) + 3 n k F / 2 with the parity
//! constraint that k is even exactly when n is odd.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fraction;

/// Quantum numbers addressing one basis state.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(untagged)]
pub enum StateIndex {
    /// Single principal quantum number.
    N(i64),
    /// Principal and parabolic (k = n1 - n2) quantum numbers.
    Nk(i64, i64),
}

impl StateIndex {
    pub fn n(n: i64) -> Self {
        StateIndex::N(n)
    }

    pub fn nk(n: i64, k: i64) -> Self {
        StateIndex::Nk(n, k)
    }

    pub fn principal(&self) -> i64 {
        match *self {
            StateIndex::N(n) | StateIndex::Nk(n, _) => n,
        }
    }

    pub fn parabolic(&self) -> Option<i64> {
        match *self {
            StateIndex::N(_) => None,
            StateIndex::Nk(_, k) => Some(k),
        }
    }
}

/// Pure hydrogen: E_n = -1/(2 n^2).
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct HydrogenSpectrum;

mod defect_map {
    use std::collections::BTreeMap;

    use serde::de::Error as _;
    use serde::{Deserialize, Deserializer, Serializer};

    // JSON object keys are strings; keep l-channel keys explicit so the
    // internally tagged Spectrum enum round-trips.
    pub fn serialize<S: Serializer>(m: &BTreeMap<u32, f64>, s: S) -> Result<S::Ok, S::Error> {
        s.collect_map(m.iter().map(|(k, v)| (k.to_string(), *v)))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BTreeMap<u32, f64>, D::Error> {
        let raw = BTreeMap::<String, f64>::deserialize(d)?;
        raw.into_iter()
            .map(|(k, v)| {
                k.parse::<u32>()
                    .map(|k| (k, v))
                    .map_err(|_| D::Error::custom(format!("invalid l channel '{k}'")))
            })
            .collect()
    }
}

/// Alkali-metal spectrum with asymptotic quantum defects,
/// E_n = -1/(2 (n - delta(l))^2) for the active channel l.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct QuantumDefectSpectrum {
    /// delta(l) per angular-momentum channel.
    #[serde(with = "defect_map")]
    pub defects: BTreeMap<u32, f64>,
    /// Channel used when evaluating energies (radial packets are p states).
    #[serde(default = "default_active_l")]
    pub active_l: u32,
    /// Laser detuning added to the expansion center (dimensionless offset
    /// in principal-quantum-number units).
    #[serde(default)]
    pub detuning: f64,
}

fn default_active_l() -> u32 {
    1
}

impl QuantumDefectSpectrum {
    pub fn new(defects: BTreeMap<u32, f64>, active_l: u32, detuning: f64) -> Result<Self> {
        if !defects.contains_key(&active_l) {
            return Err(Error::InvalidParameter(format!(
                "no defect listed for active channel l={active_l}"
            )));
        }
        Ok(QuantumDefectSpectrum { defects, active_l, detuning })
    }

    pub fn defect(&self) -> f64 {
        self.defects[&self.active_l]
    }
}

/// Hydrogen in a weak static electric field (first-order Stark effect).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StarkSpectrum {
    /// Field strength F in atomic units.
    pub field_strength: f64,
}

impl StarkSpectrum {
    pub fn new(field_strength: f64) -> Result<Self> {
        if field_strength < 0.0 || !field_strength.is_finite() {
            return Err(Error::InvalidParameter(format!(
                "field strength must be nonnegative, got {field_strength}"
            )));
        }
        Ok(StarkSpectrum { field_strength })
    }

    /// Classical field-ionization threshold F_c = 1/(16 nbar^4).
    pub fn ionization_threshold(nbar: f64) -> f64 {
        1.0 / (16.0 * nbar.powi(4))
    }

    /// True when F < F_c for the given center.
    pub fn below_threshold(&self, nbar: f64) -> bool {
        self.field_strength < Self::ionization_threshold(nbar)
    }

    /// Parity rule: k must be even exactly when n is odd.
    pub fn parity_ok(n: i64, k: i64) -> bool {
        (k.rem_euclid(2) == 0) == (n.rem_euclid(2) == 1)
    }
}

/// Energies given on a contiguous integer index range.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedSpectrum {
    pub first_n: i64,
    pub energies: Vec<f64>,
}

impl TabulatedSpectrum {
    pub fn new(first_n: i64, energies: Vec<f64>) -> Result<Self> {
        if energies.len() < 5 {
            return Err(Error::InvalidParameter(format!(
                "tabulated spectrum needs at least 5 entries, got {}",
                energies.len()
            )));
        }
        Ok(TabulatedSpectrum { first_n, energies })
    }

    pub fn last_n(&self) -> i64 {
        self.first_n + self.energies.len() as i64 - 1
    }

    fn get(&self, n: i64) -> Result<f64> {
        if n < self.first_n || n > self.last_n() {
            return Err(Error::OutOfTable(n));
        }
        Ok(self.energies[(n - self.first_n) as usize])
    }
}

/// Any supported energy-level model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Spectrum {
    Hydrogen(HydrogenSpectrum),
    QuantumDefect(QuantumDefectSpectrum),
    Stark(StarkSpectrum),
    Tabulated(TabulatedSpectrum),
}

impl Spectrum {
    pub fn hydrogen() -> Self {
        Spectrum::Hydrogen(HydrogenSpectrum)
    }

    pub fn is_stark(&self) -> bool {
        matches!(self, Spectrum::Stark(_))
    }

    /// Energy of one state, exact closed form (or table lookup).
    pub fn energy(&self, idx: StateIndex) -> Result<f64> {
        match self {
            Spectrum::Hydrogen(_) => match idx {
                StateIndex::N(n) if n >= 1 => Ok(-0.5 / (n as f64 * n as f64)),
                StateIndex::N(n) => Err(Error::InvalidIndex(format!("hydrogen requires n >= 1, got {n}"))),
                StateIndex::Nk(..) => Err(Error::InvalidIndex("hydrogen states carry a single quantum number".into())),
            },
            Spectrum::QuantumDefect(qd) => match idx {
                StateIndex::N(n) => {
                    let ns = n as f64 - qd.defect();
                    if ns <= 0.0 {
                        return Err(Error::InvalidIndex(format!(
                            "effective quantum number n* = {ns} must be positive (n={n}, delta={})",
                            qd.defect()
                        )));
                    }
                    Ok(-0.5 / (ns * ns))
                }
                StateIndex::Nk(..) => Err(Error::InvalidIndex("quantum-defect states carry a single quantum number".into())),
            },
            Spectrum::Stark(st) => match idx {
                StateIndex::Nk(n, k) => {
                    if n < 1 {
                        return Err(Error::InvalidIndex(format!("stark requires n >= 1, got {n}")));
                    }
                    if k.abs() > n - 1 {
                        return Err(Error::InvalidIndex(format!("|k| = {} must be <= n-1 = {}", k.abs(), n - 1)));
                    }
                    if !StarkSpectrum::parity_ok(n, k) {
                        return Err(Error::ParityViolation { n, k });
                    }
                    let nf = n as f64;
                    Ok(-0.5 / (nf * nf) + 1.5 * nf * k as f64 * st.field_strength)
                }
                StateIndex::N(_) => Err(Error::InvalidIndex("stark states need both n and k".into())),
            },
            Spectrum::Tabulated(tab) => match idx {
                StateIndex::N(n) => tab.get(n),
                StateIndex::Nk(..) => Err(Error::InvalidIndex("tabulated states carry a single quantum number".into())),
            },
        }
    }

    /// Energy at the (possibly noninteger) expansion center; used as the
    /// phase reference for exact-mode evolution.
    pub fn center_energy(&self, center: f64) -> Result<f64> {
        match self {
            Spectrum::Hydrogen(_) => {
                if center <= 0.0 {
                    return Err(Error::InvalidCenter(format!("center {center} must be positive")));
                }
                Ok(-0.5 / (center * center))
            }
            Spectrum::QuantumDefect(qd) => {
                let ns = center + qd.detuning - qd.defect();
                if ns <= 0.0 {
                    return Err(Error::InvalidCenter(format!("effective center {ns} must be positive")));
                }
                Ok(-0.5 / (ns * ns))
            }
            Spectrum::Stark(_) => {
                if center <= 0.0 {
                    return Err(Error::InvalidCenter(format!("center {center} must be positive")));
                }
                Ok(-0.5 / (center * center))
            }
            Spectrum::Tabulated(tab) => {
                let n = center.round() as i64;
                tab.get(n)
            }
        }
    }

    /// Derivative-defined time scales around the center, Taylor rates included.
    pub fn time_scales(&self, center: f64) -> Result<TimeScaleSet> {
        match self {
            Spectrum::Hydrogen(_) => {
                if center <= 0.0 {
                    return Err(Error::InvalidCenter(format!("center {center} must be positive")));
                }
                Ok(TimeScaleSet::from_single_rates(
                    center,
                    None,
                    center.powi(-3),
                    -1.5 * center.powi(-4),
                    2.0 * center.powi(-5),
                ))
            }
            Spectrum::QuantumDefect(qd) => {
                // Expansion around the noninteger N* = nbar - delta + detuning.
                let nstar = center - qd.defect() + qd.detuning;
                if nstar <= 0.0 {
                    return Err(Error::InvalidCenter(format!(
                        "effective center N* = {nstar} must be positive"
                    )));
                }
                Ok(TimeScaleSet::from_single_rates(
                    center + qd.detuning,
                    Some(nstar),
                    nstar.powi(-3),
                    -1.5 * nstar.powi(-4),
                    2.0 * nstar.powi(-5),
                ))
            }
            Spectrum::Stark(st) => {
                if center <= 0.0 {
                    return Err(Error::InvalidCenter(format!("center {center} must be positive")));
                }
                let f = st.field_strength;
                let rate_n = center.powi(-3); // dE/dn at k=0
                let rate_k = 1.5 * center * f; // dE/dk
                let rate_nn = -1.5 * center.powi(-4); // (1/2) d2E/dn2
                let rate_nk = 1.5 * f; // d2E/dn dk
                let scale = |t: f64, r: f64| Scale { time: t, rate: r };
                Ok(TimeScaleSet {
                    expansion_center: center,
                    center_k: Some(0.0),
                    effective_center: None,
                    t_cl_n: Some(scale(2.0 * PI * center.powi(3), rate_n)),
                    t_cl_k: if rate_k != 0.0 {
                        Some(scale(PI / rate_k.abs(), rate_k))
                    } else {
                        None
                    },
                    t_rev_n: Some(scale(2.0 * PI / rate_nn.abs(), rate_nn)),
                    t_rev_nk: if rate_nk != 0.0 {
                        Some(scale(PI / rate_nk.abs(), rate_nk))
                    } else {
                        None
                    },
                    t_sr: None,
                })
            }
            Spectrum::Tabulated(tab) => {
                let n = center.round() as i64;
                if (center - n as f64).abs() > 1e-9 {
                    return Err(Error::InvalidCenter(format!(
                        "tabulated spectra require an integer center, got {center}"
                    )));
                }
                if n - 2 < tab.first_n || n + 2 > tab.last_n() {
                    return Err(Error::InvalidCenter(format!(
                        "center {n} must sit at least 2 indices inside the table [{}..{}]",
                        tab.first_n,
                        tab.last_n()
                    )));
                }
                let e = |m: i64| tab.get(m).unwrap();
                let d1 = (e(n + 1) - e(n - 1)) / 2.0;
                let d2 = e(n + 1) - 2.0 * e(n) + e(n - 1);
                let d3 = (e(n + 2) - 2.0 * e(n + 1) + 2.0 * e(n - 1) - e(n - 2)) / 2.0;
                // cancellation floor for deciding a derivative truly vanishes
                let magnitude = (n - 2..=n + 2).map(|m| e(m).abs()).fold(0.0, f64::max);
                let floor = 64.0 * f64::EPSILON * magnitude;
                if d1.abs() <= floor {
                    return Err(Error::DegenerateSpectrum { center });
                }
                let d2 = if d2.abs() <= floor { 0.0 } else { d2 };
                let d3 = if d3.abs() <= floor { 0.0 } else { d3 };
                Ok(TimeScaleSet::from_single_rates(center, None, d1, 0.5 * d2, d3 / 6.0))
            }
        }
    }
}

/// One named time scale: the (positive) time and the signed Taylor rate that
/// defines it. The phase contribution of that order is exp(-i rate * k^m * t).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Scale {
    /// Magnitude of the time scale in atomic units.
    pub time: f64,
    /// Signed expansion coefficient in the energy Taylor series.
    pub rate: f64,
}

/// The derivative-defined periods for a spectrum and center.
///
/// Undefined scales (vanishing derivative) are `None`. Times are magnitudes;
/// the sign of each defining derivative lives in `rate`. For a single
/// quantum number the populated fields are t_cl_n, t_rev_n, t_sr; a Stark
/// spectrum populates t_cl_n, t_cl_k, t_rev_n, t_rev_nk (no revival time is
/// associated with k alone since d2E/dk2 = 0).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeScaleSet {
    /// Center c such that the packet phase index is n - c.
    pub expansion_center: f64,
    /// k center (always 0 for Stark packets), None otherwise.
    pub center_k: Option<f64>,
    /// Effective quantum-defect center N* = nbar - delta + detuning.
    pub effective_center: Option<f64>,
    pub t_cl_n: Option<Scale>,
    pub t_cl_k: Option<Scale>,
    pub t_rev_n: Option<Scale>,
    pub t_rev_nk: Option<Scale>,
    pub t_sr: Option<Scale>,
}

impl TimeScaleSet {
    fn from_single_rates(
        expansion_center: f64,
        effective_center: Option<f64>,
        a1: f64,
        a2: f64,
        a3: f64,
    ) -> Self {
        let mk = |rate: f64| {
            if rate == 0.0 {
                None
            } else {
                Some(Scale { time: 2.0 * PI / rate.abs(), rate })
            }
        };
        TimeScaleSet {
            expansion_center,
            center_k: None,
            effective_center,
            t_cl_n: mk(a1),
            t_cl_k: None,
            t_rev_n: mk(a2),
            t_rev_nk: None,
            t_sr: mk(a3),
        }
    }

    pub fn classical_period(&self) -> Result<f64> {
        self.t_cl_n.map(|s| s.time).ok_or(Error::UndefinedScale("T_cl"))
    }

    pub fn revival_time(&self) -> Result<f64> {
        self.t_rev_n.map(|s| s.time).ok_or(Error::UndefinedScale("t_rev"))
    }

    pub fn superrevival_time(&self) -> Result<f64> {
        self.t_sr.map(|s| s.time).ok_or(Error::UndefinedScale("t_sr"))
    }

    /// Integer and fractional parts of the quantum-defect expansion center,
    /// reported separately so defect and detuning effects can be told apart.
    pub fn effective_center_parts(&self) -> Option<(i64, f64)> {
        self.effective_center.map(|c| (c.floor() as i64, c - c.floor()))
    }
}

/// Hydrogen time scales for an integer center as exact rational multiples of
/// pi: (T_cl, t_rev, t_sr) = (2 nbar^3, 4 nbar^4 / 3, nbar^5) * pi.
pub fn hydrogen_rational_scales(nbar: i64) -> Result<(Ratio<i128>, Ratio<i128>, Ratio<i128>)> {
    if nbar < 1 {
        return Err(Error::InvalidCenter(format!("nbar must be >= 1, got {nbar}")));
    }
    let n = nbar as i128;
    Ok((
        Ratio::from_integer(2 * n.pow(3)),
        Ratio::new(4 * n.pow(4), 3),
        Ratio::from_integer(n.pow(5)),
    ))
}

/// Result of tuning the Stark field to a requested revival-time ratio.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TunedField {
    /// Field strength in atomic units solving t_rev^(n)/t_rev^(nk) = r/s.
    pub field: f64,
    /// Classical field-ionization threshold 1/(16 nbar^4).
    pub threshold: f64,
    pub below_threshold: bool,
    /// The requested ratio in lowest terms.
    pub ratio: (i64, i64),
}

/// Solve t_rev^(n)/t_rev^(nk) = r/s for the field strength: F = (r/s)/(2 nbar^4).
///
/// Ratios at or above 1/8 put F at or above the ionization threshold and are
/// rejected.
pub fn tune_field(nbar: i64, ratio: Ratio<i64>) -> Result<TunedField> {
    if nbar < 1 {
        return Err(Error::InvalidCenter(format!("nbar must be >= 1, got {nbar}")));
    }
    if ratio <= Ratio::from_integer(0) {
        return Err(Error::InvalidParameter("ratio must be positive".into()));
    }
    if ratio >= Ratio::new(1, 8) {
        return Err(Error::RatioExceedsBound(format!("{}/{}", ratio.numer(), ratio.denom())));
    }
    let n4 = (nbar as f64).powi(4);
    let field = (*ratio.numer() as f64) / (*ratio.denom() as f64) / (2.0 * n4);
    let threshold = 1.0 / (16.0 * n4);
    Ok(TunedField {
        field,
        threshold,
        below_threshold: field < threshold,
        ratio: (*ratio.numer(), *ratio.denom()),
    })
}

/// Exact-rational version of `tune_field`, for identity checks.
pub fn tune_field_rational(nbar: i64, ratio: Ratio<i64>) -> Result<Ratio<i128>> {
    tune_field(nbar, ratio)?; // validation
    let n = nbar as i128;
    Ok(fraction::widen(ratio) / Ratio::from_integer(2 * n.pow(4)))
}

/// Best rational approximation a/b of t_a/t_b, by continued fractions.
///
/// Returns None when no convergent with denominator <= `max_denominator`
/// matches within `tolerance` (relative).
pub fn commensurability(
    t_a: f64,
    t_b: f64,
    tolerance: f64,
    max_denominator: u64,
) -> Result<Option<Ratio<i64>>> {
    if !(t_a > 0.0 && t_b > 0.0) {
        return Err(Error::InvalidParameter("both times must be positive".into()));
    }
    Ok(fraction::approximate_ratio(t_a / t_b, tolerance, max_denominator))
}

/// Defaults from the matching rule used throughout the library.
pub const COMMENSURABILITY_TOLERANCE: f64 = 1e-9;
pub const COMMENSURABILITY_MAX_DENOMINATOR: u64 = 64;
