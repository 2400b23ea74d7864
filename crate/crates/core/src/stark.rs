//! Two-quantum-number interference machinery for Stark wave packets:
//! parity splitting, theta phases, minimal periods, subsidiary-wave
//! expansions, the reconstruction identity, antiperiodicity relations, and
//! node analysis.
//!
//! Conventions. A Stark packet centered on (nbar, kbar = 0) is split into the
//! odd and even sectors by the parity of the shifted index n' = n - nbar.
//! Within a sector the parabolic number has fixed parity (k even exactly
//! when the absolute n is odd), so k is relabeled as k = 2 kappa + eps_k.
//! Writing n' = 2 m + eps_n puts each sector on a full integer lattice
//! (m, kappa), where the second-order phase content at a commensurate
//! fractional time is the exact-rational quadratic
//!
//!   theta(m, kappa) = A m^2 + B m kappa + C m + D kappa + E  (mod 1).
//!
//! All periodicity statements are decided in rational arithmetic; floating
//! point enters only in the final coefficient evaluation.

use num_complex::Complex64;
use num_integer::Integer;
use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fraction::{mod_one, phase_from_turns, widen};
use crate::packet::{AutocorrelationTrace, PacketCoefficients, PhaseModel};
use crate::spectrum::{tune_field, Spectrum, StarkSpectrum, StateIndex, TimeScaleSet};

/// Parity sector of the shifted principal index n' = n - nbar.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Sector {
    Odd,
    Even,
}

impl Sector {
    pub fn eps_n(self) -> i64 {
        match self {
            Sector::Odd => 1,
            Sector::Even => 0,
        }
    }
}

/// Parity of the original k in a sector: k is even iff the absolute n is odd.
fn eps_k_for(sector: Sector, nbar: i64) -> i64 {
    let n_abs_odd = (nbar + sector.eps_n()).rem_euclid(2) == 1;
    if n_abs_odd {
        0
    } else {
        1
    }
}

/// A tuned Stark configuration: field, scales, and the exact commensurability
/// ratio r/s = t_rev^(n)/t_rev^(nk).
#[derive(Debug, Clone)]
pub struct StarkSetup {
    pub nbar: i64,
    pub ratio: Ratio<i64>,
    pub spectrum: Spectrum,
    pub scales: TimeScaleSet,
}

impl StarkSetup {
    pub fn new(nbar: i64, ratio: Ratio<i64>) -> Result<Self> {
        let tuned = tune_field(nbar, ratio)?;
        let spectrum = Spectrum::Stark(StarkSpectrum::new(tuned.field)?);
        let scales = spectrum.time_scales(nbar as f64)?;
        Ok(StarkSetup { nbar, ratio, spectrum, scales })
    }

    pub fn t_cl_n(&self) -> f64 {
        self.scales.t_cl_n.unwrap().time
    }

    pub fn t_cl_k(&self) -> f64 {
        self.scales.t_cl_k.unwrap().time
    }

    pub fn t_rev_n(&self) -> f64 {
        self.scales.t_rev_n.unwrap().time
    }

    pub fn t_rev_nk(&self) -> f64 {
        self.scales.t_rev_nk.unwrap().time
    }

    /// Smallest time that is an integer multiple of both revival scales:
    /// t_rev = s t_rev^(n) = r t_rev^(nk) for ratio r/s in lowest terms.
    pub fn full_revival_time(&self) -> f64 {
        *self.ratio.denom() as f64 * self.t_rev_n()
    }
}

/// One parity sector of a packet, with k relabeled: k = 2 kappa + eps_k.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorPacket {
    pub sector: Sector,
    pub nbar: i64,
    pub eps_k: i64,
    /// (n' = n - nbar, kappa, amplitude)
    pub entries: Vec<(i64, i64, Complex64)>,
}

impl SectorPacket {
    pub fn norm_sqr(&self) -> f64 {
        self.entries.iter().map(|e| e.2.norm_sqr()).sum()
    }

    /// Original state index of one entry.
    pub fn original_index(&self, entry: &(i64, i64, Complex64)) -> StateIndex {
        StateIndex::nk(entry.0 + self.nbar, 2 * entry.1 + self.eps_k)
    }
}

/// Split a Stark packet into odd and even sectors of n' = n - nbar, with the
/// parabolic index relabeled as stated above. The union of the two sectors
/// is exactly the input.
pub fn split_parity(packet: &PacketCoefficients) -> Result<(SectorPacket, SectorPacket)> {
    let nbar = packet.center_n.round() as i64;
    if (packet.center_n - nbar as f64).abs() > 1e-9 {
        return Err(Error::InvalidCenter(format!(
            "parity splitting requires an integer nbar, got {}",
            packet.center_n
        )));
    }
    let mut odd = SectorPacket {
        sector: Sector::Odd,
        nbar,
        eps_k: eps_k_for(Sector::Odd, nbar),
        entries: Vec::new(),
    };
    let mut even = SectorPacket {
        sector: Sector::Even,
        nbar,
        eps_k: eps_k_for(Sector::Even, nbar),
        entries: Vec::new(),
    };
    for (idx, amp) in &packet.entries {
        let (n, k) = match idx {
            StateIndex::Nk(n, k) => (*n, *k),
            StateIndex::N(_) => {
                return Err(Error::InvalidIndex("parity splitting needs (n, k) states".into()))
            }
        };
        if !StarkSpectrum::parity_ok(n, k) {
            return Err(Error::ParityViolation { n, k });
        }
        let n_shift = n - nbar;
        let target = if n_shift.rem_euclid(2) == 1 { &mut odd } else { &mut even };
        let kappa = (k - target.eps_k).div_euclid(2);
        debug_assert_eq!(2 * kappa + target.eps_k, k);
        target.entries.push((n_shift, kappa, *amp));
    }
    Ok((odd, even))
}

/// A commensurate fractional time, expressed against both revival scales:
/// t = (p1/q1) t_rev^(n) = (p12/q12) t_rev^(nk).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionalTime {
    pub time: f64,
    /// t / t_rev^(n), lowest terms.
    pub p1_q1: (i64, i64),
    /// t / t_rev^(nk), lowest terms.
    pub p12_q12: (i64, i64),
}

impl FractionalTime {
    /// Build from t = rho * t_rev^(n).
    pub fn from_trev_n_multiple(rho: Ratio<i64>, setup: &StarkSetup) -> Result<Self> {
        if rho <= Ratio::from_integer(0) {
            return Err(Error::InvalidParameter("fractional time must be positive".into()));
        }
        let p12 = rho * setup.ratio;
        Ok(FractionalTime {
            time: ratio_to_f64(rho) * setup.t_rev_n(),
            p1_q1: (*rho.numer(), *rho.denom()),
            p12_q12: (*p12.numer(), *p12.denom()),
        })
    }

    /// Build from t = rho * t_rev, the full revival time.
    pub fn from_full_revival_multiple(rho: Ratio<i64>, setup: &StarkSetup) -> Result<Self> {
        let of_trev_n = rho * Ratio::from_integer(*setup.ratio.denom());
        Self::from_trev_n_multiple(of_trev_n, setup)
    }

    pub fn rho(&self) -> Ratio<i64> {
        Ratio::new(self.p1_q1.0, self.p1_q1.1)
    }
}

fn ratio_to_f64(r: Ratio<i64>) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

/// The higher-order phase theta (in turns, mod 1) of one sector state at a
/// fractional time. `n` is the shifted index n - nbar and `k` the relabeled
/// kappa. With P = p1/q1 and R = (r/s)(p1/q1) this is
/// P n^2 - R n k - (R/2) eps_k n, which reduces to the odd/even closed forms
/// for even nbar.
pub fn theta_phase(
    sector: Sector,
    n: i64,
    k: i64,
    frac: &FractionalTime,
    ratio: Ratio<i64>,
    nbar: i64,
) -> Ratio<i128> {
    let p = widen(frac.rho());
    let r = p * widen(ratio);
    let eps_k = eps_k_for(sector, nbar) as i128;
    let n = n as i128;
    let k = k as i128;
    let theta = p * Ratio::from_integer(n * n)
        - r * Ratio::from_integer(n * k)
        - r * Ratio::new(eps_k * n, 2);
    mod_one(theta)
}

/// Quadratic phase on the sector's (m, kappa) lattice:
/// theta~(m, kappa) = A m^2 + B m kappa + C m + D kappa + E.
#[derive(Debug, Clone, Copy)]
struct SectorQuadratic {
    a: Ratio<i128>,
    b: Ratio<i128>,
    c: Ratio<i128>,
    d: Ratio<i128>,
    e: Ratio<i128>,
}

impl SectorQuadratic {
    fn build(sector: Sector, frac: &FractionalTime, ratio: Ratio<i64>, nbar: i64) -> Self {
        let p = widen(Ratio::new(frac.p1_q1.0, frac.p1_q1.1));
        let r = p * widen(ratio);
        let en = Ratio::from_integer(sector.eps_n() as i128);
        let ek = Ratio::from_integer(eps_k_for(sector, nbar) as i128);
        let four = Ratio::from_integer(4i128);
        let two = Ratio::from_integer(2i128);
        SectorQuadratic {
            a: four * p,
            b: -two * r,
            c: four * p * en - r * ek,
            d: -r * en,
            e: p * en * en - r * en * ek / two,
        }
    }

    fn eval(&self, m: i64, kappa: i64) -> Ratio<i128> {
        let m = Ratio::from_integer(m as i128);
        let k = Ratio::from_integer(kappa as i128);
        self.a * m * m + self.b * m * k + self.c * m + self.d * k + self.e
    }
}

fn is_integer(r: Ratio<i128>) -> bool {
    r.is_integer()
}

/// Minimal periods (l1, l2) of exp(2 pi i theta~) on the (m, kappa) lattice
/// for one sector; in the original n index a sector step of l1 advances n by
/// 2 l1.
fn sector_periods(q: &SectorQuadratic) -> (u32, u32) {
    let bound = |rs: &[Ratio<i128>]| -> i128 {
        rs.iter().fold(1i128, |acc, r| acc.lcm(r.denom()))
    };
    let two = Ratio::from_integer(2i128);
    let l1_bound = bound(&[two * q.a, q.b, q.a, q.c]);
    let mut l1 = 1i128;
    while l1 <= l1_bound {
        let l = Ratio::from_integer(l1);
        if is_integer(two * q.a * l) && is_integer(q.b * l) && is_integer(q.a * l * l + q.c * l) {
            break;
        }
        l1 += 1;
    }
    let l2_bound = bound(&[q.b, q.d]);
    let mut l2 = 1i128;
    while l2 <= l2_bound {
        let l = Ratio::from_integer(l2);
        if is_integer(q.b * l) && is_integer(q.d * l) {
            break;
        }
        l2 += 1;
    }
    (l1 as u32, l2 as u32)
}

/// Minimal periods for both sectors at a fractional time.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct MinimalPeriods {
    /// Odd sector (l1, l2).
    pub l1: u32,
    pub l2: u32,
    /// Even sector (l1', l2').
    pub l1p: u32,
    pub l2p: u32,
}

/// Smallest positive integers such that theta is invariant under
/// m -> m + l1 and kappa -> kappa + l2 in each sector (n advances by 2 per
/// sector step). The result is verified exhaustively on a full period block.
pub fn minimal_periods(
    frac: &FractionalTime,
    ratio: Ratio<i64>,
    nbar: i64,
) -> Result<MinimalPeriods> {
    let mut out = [0u32; 4];
    for (i, sector) in [Sector::Odd, Sector::Even].into_iter().enumerate() {
        let q = SectorQuadratic::build(sector, frac, ratio, nbar);
        let (l1, l2) = sector_periods(&q);
        // exhaustive check on one full block
        for m in 0..(2 * l1 as i64) {
            for kappa in 0..(2 * l2 as i64) {
                let base = mod_one(q.eval(m, kappa));
                if mod_one(q.eval(m + l1 as i64, kappa)) != base
                    || mod_one(q.eval(m, kappa + l2 as i64)) != base
                {
                    return Err(Error::InvalidParameter(format!(
                        "period verification failed for {sector:?} at ({m}, {kappa})"
                    )));
                }
            }
        }
        out[2 * i] = l1;
        out[2 * i + 1] = l2;
    }
    Ok(MinimalPeriods { l1: out[0], l2: out[1], l1p: out[2], l2p: out[3] })
}

/// Expansion of one sector over shifted classical waves.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SectorExpansion {
    pub sector: Sector,
    /// Sector-lattice periods (l1, l2).
    pub periods: (u32, u32),
    /// l1 x l2 coefficient table a_(s1 s2).
    pub coefficients: Vec<Vec<Complex64>>,
    /// Sector-wide phase factor (unity for the sector whose original k is
    /// even; exp(-i pi (p12/q12) nbar) for the other).
    pub global_phase: Complex64,
    /// Exact exponent of `global_phase` in turns: (numerator, denominator).
    pub global_phase_turns: (i128, i128),
    pub eps_n: i64,
    pub eps_k: i64,
}

impl SectorExpansion {
    /// Unitarity defect |sum |a|^2 - 1|.
    pub fn unitarity_defect(&self) -> f64 {
        let s: f64 = self
            .coefficients
            .iter()
            .flat_map(|row| row.iter().map(|c| c.norm_sqr()))
            .sum();
        (s - 1.0).abs()
    }

    /// Coefficients with |a| above the negligibility threshold, as
    /// (s1, s2, value).
    pub fn significant(&self, threshold: f64) -> Vec<(u32, u32, Complex64)> {
        let mut out = Vec::new();
        for (s1, row) in self.coefficients.iter().enumerate() {
            for (s2, c) in row.iter().enumerate() {
                if c.norm() > threshold {
                    out.push((s1 as u32, s2 as u32, *c));
                }
            }
        }
        out
    }

    /// Time shifts (into the first and second arguments of psi_cl) of one
    /// coefficient, in units of (T_cl^(n), T_cl^(k)).
    pub fn shifts(&self, s1: u32, s2: u32) -> (f64, f64) {
        (
            s1 as f64 / (2.0 * self.periods.0 as f64),
            s2 as f64 / self.periods.1 as f64,
        )
    }
}

/// Full subsidiary-wave expansion at a fractional revival time.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsidiaryExpansion {
    pub frac: FractionalTime,
    pub ratio: (i64, i64),
    pub nbar: i64,
    pub odd: SectorExpansion,
    pub even: SectorExpansion,
}

/// Coefficient threshold below which an expansion term is negligible.
pub const NEGLIGIBLE: f64 = 1e-8;

impl SubsidiaryExpansion {
    /// The even-sector global phase factor.
    pub fn even_global_phase(&self) -> Complex64 {
        self.even.global_phase
    }
}

/// Compute the expansion coefficients for both sectors at a fractional time
/// (finite double Fourier sums over exp(2 pi i theta), evaluated with
/// exact-rational phases).
pub fn expansion_coefficients(
    frac: &FractionalTime,
    ratio: Ratio<i64>,
    nbar: i64,
    periods: &MinimalPeriods,
) -> Result<SubsidiaryExpansion> {
    let build = |sector: Sector, l1: u32, l2: u32| -> Result<SectorExpansion> {
        let q = SectorQuadratic::build(sector, frac, ratio, nbar);
        let l1i = l1 as i64;
        let l2i = l2 as i64;
        let mut table = vec![vec![Complex64::new(0.0, 0.0); l2 as usize]; l1 as usize];
        // theta~ is linear in kappa, so the kappa sum is an exact Kronecker
        // delta selecting s2 with s2/l2 + B kappa1 + D integral.
        for k1 in 0..l1i {
            let linear = q.b * Ratio::from_integer(k1 as i128) + q.d;
            let scaled = linear * Ratio::from_integer(l2i as i128);
            debug_assert!(scaled.is_integer());
            let s2 = (-scaled.to_integer()).rem_euclid(l2i as i128) as usize;
            let phase1 = mod_one(q.eval(k1, 0));
            for s1 in 0..l1i {
                let turns = phase1
                    + Ratio::new((s1 * k1) as i128, l1i as i128);
                table[s1 as usize][s2] += phase_from_turns(turns) / l1 as f64;
            }
        }
        let eps_k = eps_k_for(sector, nbar);
        // sector-wide factor exp(-2 pi i eps_k t/(2 T_cl^(k))) at t_frac;
        // t_frac / T_cl^(k) = (p12/q12) nbar exactly
        let turns = -Ratio::new(
            eps_k as i128 * frac.p12_q12.0 as i128 * nbar as i128,
            2 * frac.p12_q12.1 as i128,
        );
        let expansion = SectorExpansion {
            sector,
            periods: (l1, l2),
            coefficients: table,
            global_phase: phase_from_turns(turns),
            global_phase_turns: (*mod_one(turns).numer(), *mod_one(turns).denom()),
            eps_n: sector.eps_n(),
            eps_k,
        };
        let defect = expansion.unitarity_defect();
        if defect > 1e-12 {
            return Err(Error::InvalidParameter(format!(
                "coefficient table lost unitarity (defect {defect:.3e})"
            )));
        }
        Ok(expansion)
    };
    Ok(SubsidiaryExpansion {
        frac: frac.clone(),
        ratio: (*ratio.numer(), *ratio.denom()),
        nbar,
        odd: build(Sector::Odd, periods.l1, periods.l2)?,
        even: build(Sector::Even, periods.l1p, periods.l2p)?,
    })
}

/// Per-state coefficients of the doubly periodic classical wave
/// psi_cl(t1, t2) for one sector: amplitude times
/// exp(-2 pi i (n' t1 / T_cl^(n) + kappa t2 / T_cl^(k))).
pub fn psi_cl_coefficients(
    sector: &SectorPacket,
    setup: &StarkSetup,
    t1: f64,
    t2: f64,
) -> Vec<(StateIndex, Complex64)> {
    let t_cl_n = setup.t_cl_n();
    let t_cl_k = setup.t_cl_k();
    sector
        .entries
        .iter()
        .map(|e| {
            let (n_shift, kappa, amp) = (e.0, e.1, e.2);
            let turns = n_shift as f64 * t1 / t_cl_n + kappa as f64 * t2 / t_cl_k;
            let phase = Complex64::from_polar(1.0, -2.0 * std::f64::consts::PI * turns);
            (sector.original_index(e), amp * phase)
        })
        .collect()
}

/// Direct second-order evolution of a Stark packet (the expansion the
/// reconstruction must reproduce).
pub fn direct_coefficients(
    packet: &PacketCoefficients,
    setup: &StarkSetup,
    t: f64,
) -> Result<Vec<(StateIndex, Complex64)>> {
    let model = PhaseModel::truncated(2, setup.scales.clone())?;
    packet
        .entries
        .iter()
        .map(|(idx, amp)| {
            let omega = model.rate(&setup.spectrum, packet.center_n, *idx)?;
            Ok((*idx, amp * Complex64::from_polar(1.0, -omega * t)))
        })
        .collect()
}

/// Evaluate the subsidiary-wave expansion at its fractional time: the sum of
/// shifted psi_cl terms per sector, with the sector global phase.
///
/// Must agree with `direct_coefficients` at the same time.
pub fn reconstruct(
    odd: &SectorPacket,
    even: &SectorPacket,
    expansion: &SubsidiaryExpansion,
    setup: &StarkSetup,
    t: f64,
) -> Result<Vec<(StateIndex, Complex64)>> {
    let expected = expansion.frac.time;
    if (t - expected).abs() > 1e-9 * expected.abs().max(1.0) {
        return Err(Error::TimeMismatch { t, expected });
    }
    let mut out = Vec::new();
    for (sector_packet, sector_exp) in [(odd, &expansion.odd), (even, &expansion.even)] {
        let (l1, l2) = sector_exp.periods;
        let t_cl_n = setup.t_cl_n();
        let t_cl_k = setup.t_cl_k();
        // accumulate shifted psi_cl sums entry by entry
        let mut acc: Vec<(StateIndex, Complex64)> = sector_packet
            .entries
            .iter()
            .map(|e| (sector_packet.original_index(e), Complex64::new(0.0, 0.0)))
            .collect();
        for s1 in 0..l1 {
            // relabeling offset phase exp(2 pi i eps_n s1 / (2 l1))
            let offset = Complex64::from_polar(
                1.0,
                std::f64::consts::PI * sector_exp.eps_n as f64 * s1 as f64 / l1 as f64,
            );
            for s2 in 0..l2 {
                let a = sector_exp.coefficients[s1 as usize][s2 as usize];
                if a.norm() < 1e-15 {
                    continue;
                }
                let (f1, f2) = sector_exp.shifts(s1, s2);
                let t1 = t + f1 * t_cl_n;
                let t2 = t + f2 * t_cl_k;
                let term = psi_cl_coefficients(sector_packet, setup, t1, t2);
                for (slot, (_, v)) in acc.iter_mut().zip(term) {
                    slot.1 += a * offset * v;
                }
            }
        }
        for (idx, v) in acc {
            out.push((idx, sector_exp.global_phase * v));
        }
    }
    Ok(out)
}

/// Maximum coefficient deviation between two per-state coefficient sets.
pub fn max_coefficient_error(
    a: &[(StateIndex, Complex64)],
    b: &[(StateIndex, Complex64)],
) -> f64 {
    let mut map = std::collections::HashMap::new();
    for (idx, v) in a {
        map.insert(*idx, *v);
    }
    let mut worst = 0.0f64;
    for (idx, v) in b {
        let u = map.get(idx).copied().unwrap_or(Complex64::new(0.0, 0.0));
        worst = worst.max((u - v).norm());
    }
    worst
}

/// Coefficient-level deviation from the half-period relation
/// psi_cl(t + T_cl^(n)/2, t) = sign * psi_cl(t, t) over the given times.
/// The odd sector satisfies it with sign = -1, the even sector with +1.
pub fn antiperiodicity_deviation(
    sector: &SectorPacket,
    setup: &StarkSetup,
    times: &[f64],
    sign: f64,
) -> f64 {
    let half = setup.t_cl_n() / 2.0;
    let mut worst = 0.0f64;
    for &t in times {
        let shifted = psi_cl_coefficients(sector, setup, t + half, t);
        let base = psi_cl_coefficients(sector, setup, t, t);
        for ((_, a), (_, b)) in shifted.iter().zip(&base) {
            worst = worst.max((a - sign * b).norm());
        }
    }
    worst
}

/// Antiperiodicity report for both sectors.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AntiperiodicityReport {
    /// max |psi_odd(t + T/2, t) + psi_odd(t, t)| over tested times.
    pub odd_deviation: f64,
    /// max |psi_even(t + T/2, t) - psi_even(t, t)|.
    pub even_deviation: f64,
    pub times_tested: usize,
}

pub fn antiperiodicity_check(
    odd: &SectorPacket,
    even: &SectorPacket,
    setup: &StarkSetup,
    times: &[f64],
) -> AntiperiodicityReport {
    AntiperiodicityReport {
        odd_deviation: antiperiodicity_deviation(odd, setup, times, -1.0),
        even_deviation: antiperiodicity_deviation(even, setup, times, 1.0),
        times_tested: times.len(),
    }
}

/// Node detection threshold as a fraction of the window maximum of |A|^2.
pub const NODE_DEPTH_FRACTION: f64 = 0.05;

/// Nodes (deep minima) of a trace and their spacing.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NodeReport {
    pub nodes: Vec<f64>,
    pub median_spacing: Option<f64>,
    /// The reference spacing T_cl^(n)/2.
    pub half_period: f64,
    /// True when at least 3 nodes are spaced half_period within 5%.
    pub matches_half_period: bool,
}

/// Find the deep minima of |A(t)|^2 attributable to sector antiperiodicity
/// and test their spacing against T_cl^(n)/2.
///
/// Requires at least 64 samples per half period.
pub fn node_structure(trace: &AutocorrelationTrace, t_cl_n: f64) -> Result<NodeReport> {
    let half = t_cl_n / 2.0;
    let dt = trace.dt()?;
    if dt > half / 64.0 {
        return Err(Error::InsufficientResolution(format!(
            "need >= 64 samples per half classical period, have {:.1}",
            half / dt
        )));
    }
    let max = trace.abs2.iter().cloned().fold(0.0, f64::max);
    let mut minima: Vec<(f64, f64)> = Vec::new();
    for i in 1..trace.abs2.len() - 1 {
        let y = trace.abs2[i];
        if y <= trace.abs2[i - 1] && y < trace.abs2[i + 1] && y < NODE_DEPTH_FRACTION * max {
            minima.push((trace.times[i], y));
        }
    }
    // merge minima within a quarter classical period, keeping the deepest
    let mut nodes: Vec<(f64, f64)> = Vec::new();
    for (t, y) in minima {
        match nodes.last_mut() {
            Some(last) if t - last.0 < t_cl_n / 4.0 => {
                if y < last.1 {
                    *last = (t, y);
                }
            }
            _ => nodes.push((t, y)),
        }
    }
    let times: Vec<f64> = nodes.iter().map(|n| n.0).collect();
    let mut gaps: Vec<f64> = times.windows(2).map(|w| w[1] - w[0]).collect();
    gaps.sort_by(f64::total_cmp);
    let median = if gaps.is_empty() {
        None
    } else {
        Some(gaps[gaps.len() / 2])
    };
    let matches = times.len() >= 3
        && median.map(|m| (m - half).abs() <= 0.05 * half).unwrap_or(false);
    Ok(NodeReport {
        nodes: times,
        median_spacing: median,
        half_period: half,
        matches_half_period: matches,
    })
}

/// Autocorrelation of a sector packet alone, normalized by the sector weight
/// so that perfect reformation reaches 1.
pub fn sector_autocorrelation(
    sector: &SectorPacket,
    setup: &StarkSetup,
    times: &[f64],
) -> Result<AutocorrelationTrace> {
    if times.len() < 2 || times.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("time grid must be strictly increasing".into()));
    }
    let model = PhaseModel::truncated(2, setup.scales.clone())?;
    let norm: f64 = sector.norm_sqr();
    if norm <= 0.0 {
        return Err(Error::EmptyWindow);
    }
    let rates: Vec<(f64, f64)> = sector
        .entries
        .iter()
        .map(|e| {
            let idx = sector.original_index(e);
            let omega = model.rate(&setup.spectrum, setup.nbar as f64, idx)?;
            Ok((e.2.norm_sqr() / norm, omega))
        })
        .collect::<Result<_>>()?;
    let mut values = Vec::with_capacity(times.len());
    let mut abs2 = Vec::with_capacity(times.len());
    for &t in times {
        let mut a = Complex64::new(0.0, 0.0);
        for &(w, omega) in &rates {
            a += w * Complex64::from_polar(1.0, -omega * t);
        }
        abs2.push(a.norm_sqr());
        values.push(a);
    }
    Ok(AutocorrelationTrace {
        times: times.to_vec(),
        values,
        abs2,
        annotations: Default::default(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::packet::{build_stark_packet, time_grid};
    use approx::assert_relative_eq;

    fn setup24() -> StarkSetup {
        StarkSetup::new(24, Ratio::new(1, 12)).unwrap()
    }

    fn packet24(setup: &StarkSetup) -> PacketCoefficients {
        build_stark_packet(&setup.spectrum, 24, 2.0, 2.0, 6).unwrap()
    }

    #[test]
    fn field_matches_published_value() {
        let setup = setup24();
        let f = match setup.spectrum {
            Spectrum::Stark(s) => s.field_strength,
            _ => unreachable!(),
        };
        let vcm = crate::units::field_to_v_per_cm(f);
        assert!((vcm - 645.8).abs() / 645.8 < 5e-4, "field = {vcm} V/cm");
    }

    #[test]
    fn split_is_a_partition() {
        let setup = setup24();
        let p = packet24(&setup);
        let (odd, even) = split_parity(&p).unwrap();
        assert_eq!(odd.entries.len() + even.entries.len(), p.len());
        assert_relative_eq!(odd.norm_sqr() + even.norm_sqr(), 1.0, epsilon = 1e-12);
        // all odd-sector shifted n are odd, relabeled k covers the original
        // even k values (nbar = 24 is even)
        for e in &odd.entries {
            assert_eq!(e.0.rem_euclid(2), 1);
            let orig = odd.original_index(e);
            assert_eq!(orig.parabolic().unwrap().rem_euclid(2), 0);
            assert_eq!(orig.parabolic().unwrap(), 2 * e.1);
        }
        for e in &even.entries {
            assert_eq!(e.0.rem_euclid(2), 0);
            assert_eq!(even.original_index(e).parabolic().unwrap(), 2 * e.1 + 1);
        }
    }

    #[test]
    fn neighbors_only_packet_has_empty_even_sector() {
        let setup = setup24();
        // keep only n = 23 and 25 (odd shifted indices)
        let full = packet24(&setup);
        let mut entries: Vec<_> = full
            .entries
            .iter()
            .filter(|(i, _)| i.principal() == 23 || i.principal() == 25)
            .cloned()
            .collect();
        let norm: f64 = entries.iter().map(|(_, c)| c.norm_sqr()).sum::<f64>().sqrt();
        for (_, c) in entries.iter_mut() {
            *c /= norm;
        }
        let p = PacketCoefficients::new(24.0, Some(0.0), entries, None).unwrap();
        let (odd, even) = split_parity(&p).unwrap();
        assert!(even.entries.is_empty());
        assert_relative_eq!(odd.norm_sqr(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn theta_examples() {
        let setup = setup24();
        // p1/q1 = 1/2, r/s = 1/12, n = 1, k = 0, odd sector -> 1/2 mod 1
        let frac = FractionalTime::from_trev_n_multiple(Ratio::new(1, 2), &setup).unwrap();
        let th = theta_phase(Sector::Odd, 1, 0, &frac, setup.ratio, 24);
        assert_eq!(th, Ratio::new(1i128, 2));
        // n = 0 in the even sector is always zero
        let th = theta_phase(Sector::Even, 0, 5, &frac, setup.ratio, 24);
        assert_eq!(th, Ratio::from_integer(0i128));
    }

    #[test]
    fn theta_invariance_under_periods() {
        let setup = setup24();
        let frac = FractionalTime::from_trev_n_multiple(Ratio::new(1, 3), &setup).unwrap();
        let periods = minimal_periods(&frac, setup.ratio, 24).unwrap();
        // exhaustive over a 2 l1 x 2 l2 block of sector-valid states:
        // sector n-step is 2 l1 in the original index
        for (sector, l1, l2) in [
            (Sector::Odd, periods.l1, periods.l2),
            (Sector::Even, periods.l1p, periods.l2p),
        ] {
            let en = sector.eps_n();
            for m in 0..(2 * l1 as i64) {
                for k in 0..(2 * l2 as i64) {
                    let n = 2 * m + en;
                    let base = theta_phase(sector, n, k, &frac, setup.ratio, 24);
                    let stepped_n =
                        theta_phase(sector, n + 2 * l1 as i64, k, &frac, setup.ratio, 24);
                    let stepped_k =
                        theta_phase(sector, n, k + l2 as i64, &frac, setup.ratio, 24);
                    assert_eq!(base, stepped_n);
                    assert_eq!(base, stepped_k);
                }
            }
        }
    }

    #[test]
    fn full_revival_periods_are_unity() {
        let setup = setup24();
        // t_rev = 12 t_rev^(n)
        let frac = FractionalTime::from_full_revival_multiple(Ratio::from_integer(1), &setup).unwrap();
        assert_eq!(frac.p1_q1, (12, 1));
        assert_eq!(frac.p12_q12, (1, 1));
        let p = minimal_periods(&frac, setup.ratio, 24).unwrap();
        assert_eq!((p.l1, p.l2, p.l1p, p.l2p), (1, 1, 1, 1));
        // single coefficient of unit modulus per sector
        let exp = expansion_coefficients(&frac, setup.ratio, 24, &p).unwrap();
        for sector in [&exp.odd, &exp.even] {
            let sig = sector.significant(NEGLIGIBLE);
            assert_eq!(sig.len(), 1);
            assert_relative_eq!(sig[0].2.norm(), 1.0, epsilon = 1e-12);
        }
        // even global phase is exp(-i pi nbar) = +1 for nbar = 24
        assert_relative_eq!((exp.even_global_phase() - Complex64::new(1.0, 0.0)).norm(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn half_revival_reduces_to_two_shifted_terms() {
        let setup = setup24();
        let frac = FractionalTime::from_full_revival_multiple(Ratio::new(1, 2), &setup).unwrap();
        assert_eq!(frac.p1_q1, (6, 1));
        assert_eq!(frac.p12_q12, (1, 2));
        let p = minimal_periods(&frac, setup.ratio, 24).unwrap();
        let exp = expansion_coefficients(&frac, setup.ratio, 24, &p).unwrap();
        // odd: one term shifted by T_cl^(k)/2 in t2
        let sig = exp.odd.significant(NEGLIGIBLE);
        assert_eq!(sig.len(), 1);
        let (s1, s2, a) = sig[0];
        assert_relative_eq!(a.norm(), 1.0, epsilon = 1e-12);
        let (f1, f2) = exp.odd.shifts(s1, s2);
        assert_relative_eq!(f1, 0.0, epsilon = 1e-15);
        assert_relative_eq!(f2, 0.5, epsilon = 1e-15);
        // even: one term shifted by T_cl^(n)/4 in t1
        let sig = exp.even.significant(NEGLIGIBLE);
        assert_eq!(sig.len(), 1);
        let (s1, s2, a) = sig[0];
        assert_relative_eq!(a.norm(), 1.0, epsilon = 1e-12);
        let (f1, f2) = exp.even.shifts(s1, s2);
        assert_relative_eq!(f1, 0.25, epsilon = 1e-15);
        assert_relative_eq!(f2, 0.0, epsilon = 1e-15);
    }

    #[test]
    fn reconstruction_matches_direct_evolution() {
        let setup = setup24();
        let packet = packet24(&setup);
        let (odd, even) = split_parity(&packet).unwrap();
        for rho in [Ratio::from_integer(1), Ratio::new(1, 2), Ratio::new(1, 3)] {
            let frac = FractionalTime::from_full_revival_multiple(rho, &setup).unwrap();
            let periods = minimal_periods(&frac, setup.ratio, 24).unwrap();
            let exp = expansion_coefficients(&frac, setup.ratio, 24, &periods).unwrap();
            let recon = reconstruct(&odd, &even, &exp, &setup, frac.time).unwrap();
            let direct = direct_coefficients(&packet, &setup, frac.time).unwrap();
            let err = max_coefficient_error(&direct, &recon);
            assert!(err < 1e-10, "rho = {rho}: err = {err:.3e}");
        }
    }

    #[test]
    fn reconstruction_rejects_wrong_time() {
        let setup = setup24();
        let packet = packet24(&setup);
        let (odd, even) = split_parity(&packet).unwrap();
        let frac = FractionalTime::from_full_revival_multiple(Ratio::new(1, 2), &setup).unwrap();
        let periods = minimal_periods(&frac, setup.ratio, 24).unwrap();
        let exp = expansion_coefficients(&frac, setup.ratio, 24, &periods).unwrap();
        assert!(matches!(
            reconstruct(&odd, &even, &exp, &setup, frac.time * 1.01),
            Err(Error::TimeMismatch { .. })
        ));
    }

    #[test]
    fn unitarity_over_random_commensurate_fractions() {
        let setup = setup24();
        // all p1/q1 with q1 <= 12, a spread of p1
        for q1 in 1..=12i64 {
            for p1 in [1i64, 2, 3, 5, 7, 11] {
                let frac =
                    FractionalTime::from_trev_n_multiple(Ratio::new(p1, q1), &setup).unwrap();
                let periods = minimal_periods(&frac, setup.ratio, 24).unwrap();
                let exp = expansion_coefficients(&frac, setup.ratio, 24, &periods).unwrap();
                assert!(exp.odd.unitarity_defect() < 1e-12);
                assert!(exp.even.unitarity_defect() < 1e-12);
            }
        }
    }

    #[test]
    fn antiperiodicity_signs() {
        let setup = setup24();
        let packet = packet24(&setup);
        let (odd, even) = split_parity(&packet).unwrap();
        let t_cl = setup.t_cl_n();
        let times: Vec<f64> = (0..25).map(|i| 0.37 * t_cl * i as f64).collect();
        let report = antiperiodicity_check(&odd, &even, &setup, &times);
        assert!(report.odd_deviation < 1e-12, "odd dev {}", report.odd_deviation);
        assert!(report.even_deviation < 1e-12, "even dev {}", report.even_deviation);
        // a mixed-parity pseudo-sector satisfies neither relation
        let mut mixed = odd.clone();
        mixed.entries.extend(even.entries.iter().map(|e| (e.0, e.1, e.2)));
        let dev_minus = antiperiodicity_deviation(&mixed, &setup, &times[1..2], -1.0);
        let dev_plus = antiperiodicity_deviation(&mixed, &setup, &times[1..2], 1.0);
        assert!(dev_minus > 0.5 && dev_plus > 0.5);
    }

    #[test]
    fn odd_sector_nodes_at_half_period() {
        let setup = setup24();
        let packet = packet24(&setup);
        let (odd, even) = split_parity(&packet).unwrap();
        let t_half = setup.full_revival_time() / 2.0;
        let t_cl = setup.t_cl_n();
        let grid = time_grid(t_half - 3.0 * t_cl, t_half + 3.0 * t_cl, 6 * 256 + 1);
        let tr_odd = sector_autocorrelation(&odd, &setup, &grid).unwrap();
        let rep = node_structure(&tr_odd, t_cl).unwrap();
        assert!(rep.matches_half_period, "odd spacing {:?}", rep.median_spacing);
        assert_relative_eq!(
            rep.median_spacing.unwrap(),
            t_cl / 2.0,
            max_relative = 0.05
        );
        // even sector shows no such node comb
        let tr_even = sector_autocorrelation(&even, &setup, &grid).unwrap();
        let rep = node_structure(&tr_even, t_cl).unwrap();
        assert!(!rep.matches_half_period, "even spacing {:?}", rep.median_spacing);
    }

    #[test]
    fn node_detection_requires_resolution() {
        let setup = setup24();
        let packet = packet24(&setup);
        let (odd, _) = split_parity(&packet).unwrap();
        let t_half = setup.full_revival_time() / 2.0;
        let t_cl = setup.t_cl_n();
        let grid = time_grid(t_half - 2.0 * t_cl, t_half + 2.0 * t_cl, 129);
        let tr = sector_autocorrelation(&odd, &setup, &grid).unwrap();
        assert!(matches!(
            node_structure(&tr, t_cl),
            Err(Error::InsufficientResolution(_))
        ));
    }

    #[test]
    fn expansion_serializes() {
        let setup = setup24();
        let frac = FractionalTime::from_full_revival_multiple(Ratio::new(1, 2), &setup).unwrap();
        let periods = minimal_periods(&frac, setup.ratio, 24).unwrap();
        let exp = expansion_coefficients(&frac, setup.ratio, 24, &periods).unwrap();
        let js = serde_json::to_string(&exp).unwrap();
        let back: SubsidiaryExpansion = serde_json::from_str(&js).unwrap();
        assert_eq!(exp, back);
    }
}
