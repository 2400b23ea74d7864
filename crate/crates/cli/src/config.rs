//! Option structs shared between the command line and JSON config files.
//! Flags override file values; the fully resolved configuration is echoed
//! into the run manifest so a run is reproducible from the manifest alone.

use std::collections::BTreeMap;
use std::path::PathBuf;

use clap::Args;
use serde::{Deserialize, Serialize};

use rydlab::spectrum::{QuantumDefectSpectrum, StarkSpectrum, Spectrum};
use rydlab::units;

use crate::CliError;

/// Merge `self` (command line) over `file` (config file defaults).
pub trait Merge: Sized {
    fn or_file(self, file: Self) -> Self;
}

#[derive(Debug, Clone, Args, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct SpectrumArgs {
    /// Energy model: hydrogen | quantum_defect | stark | tabulated.
    #[arg(long)]
    pub model: Option<String>,
    /// Quantum defect per channel, as l=delta (repeatable).
    #[arg(long = "defect", value_name = "L=DELTA")]
    pub defects: Vec<String>,
    /// Active angular-momentum channel for quantum-defect energies.
    #[arg(long)]
    pub active_l: Option<u32>,
    /// Laser detuning added to the expansion center.
    #[arg(long)]
    pub detuning: Option<f64>,
    /// Stark field strength in atomic units.
    #[arg(long)]
    pub field: Option<f64>,
    /// Stark field strength in V/cm (converted at the boundary).
    #[arg(long)]
    pub field_vcm: Option<f64>,
    /// Two-column CSV (n, E_n) for a tabulated spectrum.
    #[arg(long)]
    pub table: Option<PathBuf>,
    /// Full spectrum description as a JSON file (overrides the flags above).
    #[arg(long)]
    pub spectrum_json: Option<PathBuf>,
}

impl Merge for SpectrumArgs {
    fn or_file(self, file: Self) -> Self {
        SpectrumArgs {
            model: self.model.or(file.model),
            defects: if self.defects.is_empty() { file.defects } else { self.defects },
            active_l: self.active_l.or(file.active_l),
            detuning: self.detuning.or(file.detuning),
            field: self.field.or(file.field),
            field_vcm: self.field_vcm.or(file.field_vcm),
            table: self.table.or(file.table),
            spectrum_json: self.spectrum_json.or(file.spectrum_json),
        }
    }
}

impl SpectrumArgs {
    pub fn build(&self) -> Result<Spectrum, CliError> {
        if let Some(path) = &self.spectrum_json {
            let text = std::fs::read_to_string(path)?;
            return Ok(serde_json::from_str(&text)?);
        }
        let model = self.model.as_deref().unwrap_or("hydrogen");
        match model {
            "hydrogen" => Ok(Spectrum::hydrogen()),
            "quantum_defect" | "quantum-defect" => {
                let mut defects = BTreeMap::new();
                for spec in &self.defects {
                    let (l, d) = spec.split_once('=').ok_or_else(|| {
                        CliError::Config(format!("--defect expects l=delta, got '{spec}'"))
                    })?;
                    let l: u32 = l
                        .trim()
                        .parse()
                        .map_err(|_| CliError::Config(format!("bad channel in '{spec}'")))?;
                    let d: f64 = d
                        .trim()
                        .parse()
                        .map_err(|_| CliError::Config(format!("bad defect in '{spec}'")))?;
                    defects.insert(l, d);
                }
                if defects.is_empty() {
                    return Err(CliError::Config("quantum_defect model needs --defect".into()));
                }
                let active = self.active_l.unwrap_or(1);
                Ok(Spectrum::QuantumDefect(QuantumDefectSpectrum::new(
                    defects,
                    active,
                    self.detuning.unwrap_or(0.0),
                )?))
            }
            "stark" => {
                let f = match (self.field, self.field_vcm) {
                    (Some(f), _) => f,
                    (None, Some(v)) => units::field_from_v_per_cm(v),
                    (None, None) => {
                        return Err(CliError::Config("stark model needs --field or --field-vcm".into()))
                    }
                };
                Ok(Spectrum::Stark(StarkSpectrum::new(f)?))
            }
            "tabulated" => {
                let path = self
                    .table
                    .as_ref()
                    .ok_or_else(|| CliError::Config("tabulated model needs --table".into()))?;
                let text = std::fs::read_to_string(path)?;
                Ok(Spectrum::Tabulated(rydlab::export::tabulated_from_csv(&text)?))
            }
            other => Err(CliError::Config(format!("unknown model '{other}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum UnitSystem {
    #[default]
    Atomic,
    Si,
}

/// Human-readable time with an SI prefix.
pub fn format_si_time(seconds: f64) -> String {
    let abs = seconds.abs();
    if abs >= 1e-6 {
        format!("{:.2} us", seconds * 1e6)
    } else if abs >= 1e-9 {
        format!("{:.2} ns", seconds * 1e9)
    } else if abs >= 1e-12 {
        format!("{:.2} ps", seconds * 1e12)
    } else {
        format!("{:.2} fs", seconds * 1e15)
    }
}

/// Load a config file and parse it as the given options type.
pub fn load_config<T: for<'de> Deserialize<'de>>(path: &PathBuf) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}
