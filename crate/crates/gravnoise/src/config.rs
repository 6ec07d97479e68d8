//! TOML run configuration.

use std::path::Path;

use gravnoise_core::hybrid::{DEFAULT_FOCK_LEVELS, DEFAULT_PADDING, DEFAULT_QUAD_NODES};
use gravnoise_core::models::{
    cq_kernel, entropic_i_integrals, entropic_local_kernel, entropic_nonlocal_kernel, CqParams, DissipationKernel,
    EntropicLocalParams, EntropicNonlocalParams, ModelKind, RadialProfile,
};
use gravnoise_core::quadrature::QuadratureSpec;
use gravnoise_core::scanner::ScanSpec;
use gravnoise_core::thresholds::ExperimentConfig;
use serde::{Deserialize, Serialize};

use crate::error::CliError;

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub model: Option<ModelSection>,
    #[serde(default)]
    pub experiment: Option<ExperimentConfig>,
    #[serde(default)]
    pub quadrature: QuadratureSpec,
    #[serde(default)]
    pub evolve: EvolveSection,
    #[serde(default)]
    pub scan: Option<ScanSpec>,
    #[serde(default)]
    pub output: OutputSection,
}

/// `kind` may be omitted when exactly one parameter table is present.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    #[serde(default)]
    pub kind: Option<ModelKind>,
    #[serde(default)]
    pub cq: Option<CqParams>,
    #[serde(default)]
    pub entropic_local: Option<LocalInput>,
    #[serde(default)]
    pub entropic_nonlocal: Option<NonlocalInput>,
    #[serde(default)]
    pub custom: Option<CustomInput>,
}

/// Lattice model; `l4` defaults to the value that reproduces Newton's constant.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct LocalInput {
    pub a: f64,
    pub temperature: f64,
    pub sigma_star: f64,
    pub gamma_th: f64,
    #[serde(default)]
    pub l4: Option<f64>,
}

/// Non-local model; `temperature` defaults to the emergent-G value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NonlocalInput {
    pub lambda_len: f64,
    pub ell2: f64,
    pub zeta: f64,
    #[serde(default)]
    pub temperature: Option<f64>,
}

/// Tabulated spectra on a shared grid, linearly interpolated, and the
/// correlated force noise `beta` in N²/Hz.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CustomInput {
    pub k: Vec<f64>,
    pub f1: Vec<f64>,
    pub f2: Vec<f64>,
    pub beta: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvolveSection {
    /// Duration, s. Defaults to a short window set by the fastest rate.
    pub t_final: Option<f64>,
    pub steps: usize,
    pub n_max: usize,
    pub padding: usize,
    pub quad_nodes: usize,
}

impl Default for EvolveSection {
    fn default() -> Self {
        Self {
            t_final: None,
            steps: 100,
            n_max: DEFAULT_FOCK_LEVELS,
            padding: DEFAULT_PADDING,
            quad_nodes: DEFAULT_QUAD_NODES,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Json,
    Csv,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub path: Option<String>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        Self::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let de = toml::Deserializer::new(text);
        serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            let message = inner.message().trim().to_string();
            CliError::Config(if path == "." || path.is_empty() {
                message
            } else {
                format!("{path}: {message}")
            })
        })
    }

    pub fn experiment(&self) -> Result<&ExperimentConfig, CliError> {
        self.experiment
            .as_ref()
            .ok_or_else(|| CliError::Config("experiment: section is required for this command".into()))
    }

    pub fn model_kind(&self) -> Result<ModelKind, CliError> {
        let m = self
            .model
            .as_ref()
            .ok_or_else(|| CliError::Config("model: section is required for this command".into()))?;
        let present: Vec<ModelKind> = [
            (m.cq.is_some(), ModelKind::Cq),
            (m.entropic_local.is_some(), ModelKind::EntropicLocal),
            (m.entropic_nonlocal.is_some(), ModelKind::EntropicNonlocal),
            (m.custom.is_some(), ModelKind::Custom),
        ]
        .into_iter()
        .filter_map(|(p, k)| p.then_some(k))
        .collect();
        match (m.kind, present.as_slice()) {
            (Some(ModelKind::Graviton), []) => Ok(ModelKind::Graviton),
            (Some(k), [only]) if k == *only => Ok(k),
            (None, [only]) => Ok(*only),
            (None, []) => Err(CliError::Config("model: no model table given".into())),
            (Some(k), []) => Err(CliError::Config(format!("model.{}: table is missing", k.name()))),
            _ => Err(CliError::Config(
                "model: exactly one model per run (kind and parameter tables disagree)".into(),
            )),
        }
    }

    /// The kernel for the configured experiment's masses and separation.
    pub fn kernel(&self) -> Result<DissipationKernel, CliError> {
        let kind = self.model_kind()?;
        let e = self.experiment()?;
        let m = self.model.as_ref().expect("model_kind checked the section");
        let kernel = match kind {
            ModelKind::Graviton => DissipationKernel::graviton(),
            ModelKind::Cq => cq_kernel(m.cq.as_ref().expect("present"), e.m1, e.m2)?,
            ModelKind::EntropicLocal => {
                let i = m.entropic_local.expect("present");
                let mut p = EntropicLocalParams::on_constraint(i.a, i.temperature, i.sigma_star, i.gamma_th)?;
                if let Some(l4) = i.l4 {
                    p.l4 = l4;
                }
                entropic_local_kernel(&p, e.m1, e.m2, e.d)?
            }
            ModelKind::EntropicNonlocal => {
                let i = m.entropic_nonlocal.expect("present");
                let mut p = EntropicNonlocalParams::on_constraint(i.lambda_len, i.ell2, i.zeta, e.m1, e.m2)?;
                if let Some(t) = i.temperature {
                    p.temperature = t;
                }
                let integrals = entropic_i_integrals(&self.quadrature)?;
                entropic_nonlocal_kernel(&p, e.m1, e.m2, e.d, &integrals)?
            }
            ModelKind::Custom => {
                let c = m.custom.as_ref().expect("present");
                DissipationKernel::custom(
                    RadialProfile::tabulated(c.k.clone(), c.f1.clone())?,
                    RadialProfile::tabulated(c.k.clone(), c.f2.clone())?,
                    c.beta,
                )?
            }
        };
        Ok(kernel)
    }

    pub fn scan_spec(&self) -> ScanSpec {
        self.scan.unwrap_or_default()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn missing_field_names_its_path() {
        let err = RunConfig::parse("[experiment]\narchitecture = \"oscillators\"\nm2 = 1e-6\nd = 1e-3\n").unwrap_err();
        let text = err.to_string();
        assert!(text.contains("experiment") && text.contains("m1"), "{text}");
        assert_eq!(err.exit_code(), 2);
    }

    #[test]
    fn model_kind_is_inferred() {
        let c = RunConfig::parse("[model.cq]\nd0 = 1.0\nd2 = 1.0\nell = 1e-4\n").unwrap();
        assert_eq!(c.model_kind().unwrap(), ModelKind::Cq);
        let c = RunConfig::parse("[model]\nkind = \"graviton\"\n").unwrap();
        assert_eq!(c.model_kind().unwrap(), ModelKind::Graviton);
        let c = RunConfig::parse("[model]\nkind = \"entropic_local\"\n[model.cq]\nd0 = 1.0\nd2 = 1.0\nell = 1e-4\n")
            .unwrap();
        assert!(c.model_kind().is_err());
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(RunConfig::parse("[quadrature]\nrel_tol = 1e-8\nfoo = 1\n").is_err());
        let c = RunConfig::parse("[quadrature]\nrel_tol = 1e-8\n").unwrap();
        assert_eq!(
            c.quadrature.max_subdivisions,
            QuadratureSpec::default().max_subdivisions
        );
    }

    #[test]
    fn partial_scan_section_keeps_defaults() {
        let c = RunConfig::parse("[scan.d0]\nmin = 1e-3\nmax = 1e3\npoints = 9\n").unwrap();
        let s = c.scan_spec();
        assert_eq!(s.d0.points, 9);
        assert_eq!(s.d2, ScanSpec::default().d2);
    }
}
