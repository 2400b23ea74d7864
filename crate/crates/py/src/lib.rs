//! Python bindings: spectra, packets, traces, revival analysis, the Stark
//! subsidiary-wave machinery, and squeezed-state fitting.
//!
//! Structured reports (revival predictions, Stark expansions) are returned
//! as JSON strings; array-like data comes back as plain Python lists.

use std::collections::BTreeMap;

use num_rational::Ratio;
use pyo3::exceptions::PyValueError;
use pyo3::prelude::*;
use pyo3::types::PyDict;

use rydlab::analysis;
use rydlab::packet::{self, PhaseModel};
use rydlab::spectrum::{self, StateIndex};
use rydlab::squeezed;
use rydlab::stark;
use rydlab::units;

fn err(e: rydlab::Error) -> PyErr {
    PyValueError::new_err(e.to_string())
}

/// An energy-level model.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Spectrum {
    inner: spectrum::Spectrum,
}

#[pymethods]
impl Spectrum {
    /// E_n = -1/(2 n^2).
    #[staticmethod]
    fn hydrogen() -> Self {
        Spectrum { inner: spectrum::Spectrum::hydrogen() }
    }

    /// Quantum-defect spectrum; `defects` maps l to delta(l).
    #[staticmethod]
    #[pyo3(signature = (defects, active_l=1, detuning=0.0))]
    fn quantum_defect(defects: BTreeMap<u32, f64>, active_l: u32, detuning: f64) -> PyResult<Self> {
        let qd = spectrum::QuantumDefectSpectrum::new(defects, active_l, detuning).map_err(err)?;
        Ok(Spectrum { inner: spectrum::Spectrum::QuantumDefect(qd) })
    }

    /// First-order Stark spectrum with field strength in atomic units.
    #[staticmethod]
    fn stark(field_strength: f64) -> PyResult<Self> {
        let st = spectrum::StarkSpectrum::new(field_strength).map_err(err)?;
        Ok(Spectrum { inner: spectrum::Spectrum::Stark(st) })
    }

    /// Tabulated energies on the contiguous range starting at first_n.
    #[staticmethod]
    fn tabulated(first_n: i64, energies: Vec<f64>) -> PyResult<Self> {
        let tab = spectrum::TabulatedSpectrum::new(first_n, energies).map_err(err)?;
        Ok(Spectrum { inner: spectrum::Spectrum::Tabulated(tab) })
    }

    /// Parse the JSON description ({"kind": ..., ...}).
    #[staticmethod]
    fn from_json(text: &str) -> PyResult<Self> {
        let inner: spectrum::Spectrum =
            serde_json::from_str(text).map_err(|e| PyValueError::new_err(e.to_string()))?;
        Ok(Spectrum { inner })
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }

    /// Energy of one state in atomic units; pass k for Stark states.
    #[pyo3(signature = (n, k=None))]
    fn energy(&self, n: i64, k: Option<i64>) -> PyResult<f64> {
        let idx = match k {
            Some(k) => StateIndex::nk(n, k),
            None => StateIndex::n(n),
        };
        self.inner.energy(idx).map_err(err)
    }

    /// Derivative-defined time scales at the center, as a dict.
    fn time_scales<'py>(&self, py: Python<'py>, nbar: f64) -> PyResult<Bound<'py, PyDict>> {
        let ts = self.inner.time_scales(nbar).map_err(err)?;
        let d = PyDict::new(py);
        d.set_item("t_cl_n", ts.t_cl_n.map(|s| s.time))?;
        d.set_item("t_cl_k", ts.t_cl_k.map(|s| s.time))?;
        d.set_item("t_rev_n", ts.t_rev_n.map(|s| s.time))?;
        d.set_item("t_rev_nk", ts.t_rev_nk.map(|s| s.time))?;
        d.set_item("t_sr", ts.t_sr.map(|s| s.time))?;
        d.set_item("expansion_center", ts.expansion_center)?;
        d.set_item("effective_center", ts.effective_center)?;
        Ok(d)
    }

    /// Classification verdict string.
    fn classify(&self, nbar: f64) -> PyResult<String> {
        Ok(analysis::classify_spectrum(&self.inner, nbar).map_err(err)?.verdict)
    }
}

/// A normalized wave packet.
#[pyclass(skip_from_py_object)]
#[derive(Clone)]
struct Packet {
    inner: packet::PacketCoefficients,
}

#[pymethods]
impl Packet {
    /// Gaussian packet over one quantum number.
    #[staticmethod]
    fn gaussian(spectrum: &Spectrum, nbar: f64, sigma: f64, window: u32) -> PyResult<Self> {
        Ok(Packet { inner: packet::build_packet(&spectrum.inner, nbar, sigma, window).map_err(err)? })
    }

    /// Separable Gaussian Stark packet with kbar = 0.
    #[staticmethod]
    fn stark_gaussian(
        spectrum: &Spectrum,
        nbar: i64,
        sigma_n: f64,
        sigma_k: f64,
        window: u32,
    ) -> PyResult<Self> {
        Ok(Packet {
            inner: packet::build_stark_packet(&spectrum.inner, nbar, sigma_n, sigma_k, window)
                .map_err(err)?,
        })
    }

    fn __len__(&self) -> usize {
        self.inner.len()
    }

    fn norm_sqr(&self) -> f64 {
        self.inner.norm_sqr()
    }

    /// Entries as (n, k_or_None, re, im) tuples.
    fn entries(&self) -> Vec<(i64, Option<i64>, f64, f64)> {
        self.inner
            .entries
            .iter()
            .map(|(idx, c)| (idx.principal(), idx.parabolic(), c.re, c.im))
            .collect()
    }

    fn to_json(&self) -> PyResult<String> {
        serde_json::to_string(&self.inner).map_err(|e| PyValueError::new_err(e.to_string()))
    }
}

fn model_for(spectrum: &Spectrum, nbar: f64, order: u8) -> PyResult<PhaseModel> {
    let scales = spectrum.inner.time_scales(nbar).map_err(err)?;
    if order == 0 {
        Ok(PhaseModel::exact(scales))
    } else {
        PhaseModel::truncated(order, scales).map_err(err)
    }
}

/// Autocorrelation trace; order 0 is exact phase evolution, 1..3 are Taylor
/// truncations. Returns {"times", "re", "im", "abs2"}.
#[pyfunction]
#[pyo3(signature = (spectrum, packet, times, order=0))]
fn autocorrelation<'py>(
    py: Python<'py>,
    spectrum: &Spectrum,
    packet: &Packet,
    times: Vec<f64>,
    order: u8,
) -> PyResult<Bound<'py, PyDict>> {
    let model = model_for(spectrum, packet.inner.center_n, order)?;
    let tr = packet::autocorrelation(&spectrum.inner, &packet.inner, &model, &times).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("times", tr.times)?;
    d.set_item("re", tr.values.iter().map(|c| c.re).collect::<Vec<_>>())?;
    d.set_item("im", tr.values.iter().map(|c| c.im).collect::<Vec<_>>())?;
    d.set_item("abs2", tr.abs2)?;
    Ok(d)
}

/// Radial probability density |Psi(r, t)|^2 r^2 for hydrogenic l = 1 packets.
#[pyfunction]
#[pyo3(signature = (spectrum, packet, r, t, order=0))]
fn radial_density(
    spectrum: &Spectrum,
    packet: &Packet,
    r: Vec<f64>,
    t: f64,
    order: u8,
) -> PyResult<Vec<f64>> {
    let model = model_for(spectrum, packet.inner.center_n, order)?;
    Ok(packet::radial_density(&spectrum.inner, &packet.inner, &model, &r, t)
        .map_err(err)?
        .density)
}

/// Field strength solving t_rev^(n)/t_rev^(nk) = r/s, with the ionization
/// threshold; returns a dict with atomic-unit and V/cm values.
#[pyfunction]
fn tune_field<'py>(py: Python<'py>, nbar: i64, r: i64, s: i64) -> PyResult<Bound<'py, PyDict>> {
    let tuned = spectrum::tune_field(nbar, Ratio::new(r, s)).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("field_au", tuned.field)?;
    d.set_item("field_v_per_cm", units::field_to_v_per_cm(tuned.field))?;
    d.set_item("threshold_au", tuned.threshold)?;
    d.set_item("below_threshold", tuned.below_threshold)?;
    Ok(d)
}

/// Best rational approximation (a, b) of t_a/t_b, or None.
#[pyfunction]
#[pyo3(signature = (t_a, t_b, tolerance=1e-9, max_denominator=64))]
fn commensurability(
    t_a: f64,
    t_b: f64,
    tolerance: f64,
    max_denominator: u64,
) -> PyResult<Option<(i64, i64)>> {
    Ok(spectrum::commensurability(t_a, t_b, tolerance, max_denominator)
        .map_err(err)?
        .map(|r| (*r.numer(), *r.denom())))
}

/// Predicted revival hierarchy as a JSON report.
#[pyfunction]
#[pyo3(signature = (spectrum, nbar, max_q=8, max_q_sr=12))]
fn predict_revivals(spectrum: &Spectrum, nbar: f64, max_q: u32, max_q_sr: u32) -> PyResult<String> {
    let scales = spectrum.inner.time_scales(nbar).map_err(err)?;
    let report = analysis::predict_revivals_with(&scales, max_q, max_q_sr).map_err(err)?;
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Local periodicity of a sampled |A|^2 series near t_center.
#[pyfunction]
#[pyo3(signature = (times, abs2, t_center, candidate_period, max_recurrences=2))]
fn local_period(
    times: Vec<f64>,
    abs2: Vec<f64>,
    t_center: f64,
    candidate_period: f64,
    max_recurrences: u32,
) -> PyResult<f64> {
    analysis::local_period_series(&times, &abs2, t_center, candidate_period, max_recurrences)
        .map_err(err)
}

/// Subsidiary-wave expansion of the nbar-centered Stark packet at the
/// fractional time (p/q) t_rev, with the reconstruction self-check. Returns
/// a JSON report with the expansion, periods, and max coefficient error.
#[pyfunction]
#[pyo3(signature = (nbar, r, s, p, q, sigma_n=2.0, sigma_k=2.0, window=6))]
#[allow(clippy::too_many_arguments)]
fn stark_expansion(
    nbar: i64,
    r: i64,
    s: i64,
    p: i64,
    q: i64,
    sigma_n: f64,
    sigma_k: f64,
    window: u32,
) -> PyResult<String> {
    let setup = stark::StarkSetup::new(nbar, Ratio::new(r, s)).map_err(err)?;
    let pk = packet::build_stark_packet(&setup.spectrum, nbar, sigma_n, sigma_k, window)
        .map_err(err)?;
    let (odd, even) = stark::split_parity(&pk).map_err(err)?;
    let frac = stark::FractionalTime::from_full_revival_multiple(Ratio::new(p, q), &setup)
        .map_err(err)?;
    let periods = stark::minimal_periods(&frac, setup.ratio, nbar).map_err(err)?;
    let exp = stark::expansion_coefficients(&frac, setup.ratio, nbar, &periods).map_err(err)?;
    let recon = stark::reconstruct(&odd, &even, &exp, &setup, frac.time).map_err(err)?;
    let direct = stark::direct_coefficients(&pk, &setup, frac.time).map_err(err)?;
    let error = stark::max_coefficient_error(&direct, &recon);
    let report = serde_json::json!({
        "expansion": exp,
        "periods": {"l1": periods.l1, "l2": periods.l2, "l1p": periods.l1p, "l2p": periods.l2p},
        "reconstruction_error": error,
        "significant_odd": exp.odd.significant(stark::NEGLIGIBLE).len(),
        "significant_even": exp.even.significant(stark::NEGLIGIBLE).len(),
    });
    serde_json::to_string(&report).map_err(|e| PyValueError::new_err(e.to_string()))
}

/// Fit a radial squeezed state at the outer apsis; r_out defaults to
/// 2 nbar^2. Returns the parameters and fitted expectation values.
#[pyfunction]
#[pyo3(signature = (nbar, r_out=None, l=1))]
fn squeezed_fit<'py>(
    py: Python<'py>,
    nbar: f64,
    r_out: Option<f64>,
    l: u32,
) -> PyResult<Bound<'py, PyDict>> {
    let target = match r_out {
        Some(r) => squeezed::FitTarget { nbar, r_out: r, l },
        None => squeezed::FitTarget::near_radial(nbar, l),
    };
    let params = squeezed::fit(&target).map_err(err)?;
    let d = PyDict::new(py);
    d.set_item("alpha", params.alpha)?;
    d.set_item("gamma0", params.gamma0)?;
    d.set_item("gamma1", params.gamma1)?;
    d.set_item("mean_r", params.mean_r())?;
    d.set_item("mean_pr", params.mean_pr())?;
    d.set_item("mean_energy", params.mean_energy(l).map_err(err)?)?;
    d.set_item("uncertainty_product", params.uncertainty_product().map_err(err)?)?;
    d.set_item("target_energy", target.energy())?;
    Ok(d)
}

/// Atomic-unit conversion constants, as a dict.
#[pyfunction]
fn constants<'py>(py: Python<'py>) -> PyResult<Bound<'py, PyDict>> {
    let d = PyDict::new(py);
    d.set_item("atomic_time_s", units::ATOMIC_TIME_S)?;
    d.set_item("atomic_field_v_per_cm", units::ATOMIC_FIELD_V_PER_CM)?;
    Ok(d)
}

#[pymodule]
fn rydlab_py(m: &Bound<'_, PyModule>) -> PyResult<()> {
    m.add_class::<Spectrum>()?;
    m.add_class::<Packet>()?;
    m.add_function(wrap_pyfunction!(autocorrelation, m)?)?;
    m.add_function(wrap_pyfunction!(radial_density, m)?)?;
    m.add_function(wrap_pyfunction!(tune_field, m)?)?;
    m.add_function(wrap_pyfunction!(commensurability, m)?)?;
    m.add_function(wrap_pyfunction!(predict_revivals, m)?)?;
    m.add_function(wrap_pyfunction!(local_period, m)?)?;
    m.add_function(wrap_pyfunction!(stark_expansion, m)?)?;
    m.add_function(wrap_pyfunction!(squeezed_fit, m)?)?;
    m.add_function(wrap_pyfunction!(constants, m)?)?;
    Ok(())
}
