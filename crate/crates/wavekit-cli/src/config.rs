//! Run configuration: a single JSON document with one block per
//! subcommand. Unknown fields are rejected, every default is materialized
//! before execution, and the resolved form is echoed into the run manifest.

use anyhow::{anyhow, bail, Context, Result};
use num_bigint::BigInt;
use num_rational::BigRational;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::str::FromStr;
use wavekit::field::{Model, ModelParams, NuConvention, Profile};
use wavekit::integrate::{IntegratorConfig, Scheme, System};
use wavekit::lattice::WaveVector;

pub fn parse_rational(s: &str) -> Result<BigRational> {
    let (n, d) = match s.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (s.trim(), "1"),
    };
    let n = BigInt::from_str(n).map_err(|e| anyhow!("bad rational {s:?}: {e}"))?;
    let d = BigInt::from_str(d).map_err(|e| anyhow!("bad rational {s:?}: {e}"))?;
    if d == BigInt::from(0) {
        bail!("bad rational {s:?}: zero denominator");
    }
    Ok(BigRational::new(n, d))
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ModelConfig {
    Nls {
        dim: usize,
        #[serde(default = "default_one")]
        box_size: String,
        #[serde(default = "default_delta")]
        delta: f64,
    },
    Chm {
        rho: String,
        #[serde(default = "default_zero")]
        froude: String,
    },
}

fn default_one() -> String {
    "1".into()
}

fn default_zero() -> String {
    "0".into()
}

fn default_delta() -> f64 {
    1.0
}

impl ModelConfig {
    pub fn build(&self) -> Result<Model> {
        Ok(match self {
            ModelConfig::Nls {
                dim,
                box_size,
                delta,
            } => {
                if *dim == 0 || *dim > wavekit::lattice::MAX_DIM {
                    bail!("model.dim must be 1..={}", wavekit::lattice::MAX_DIM);
                }
                Model::Nls {
                    dim: *dim,
                    box_size: parse_rational(box_size)?,
                    delta: *delta,
                }
            }
            ModelConfig::Chm { rho, froude } => Model::Chm {
                rho: parse_rational(rho)?,
                froude: parse_rational(froude)?,
            },
        })
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProfileConfig {
    Uniform { value: f64 },
    PowerLaw { coeff: f64, exponent: f64, min: f64 },
    PerMode { entries: Vec<PerModeEntry> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PerModeEntry {
    pub mode: Vec<i32>,
    pub value: f64,
}

impl ProfileConfig {
    pub fn build(&self) -> Result<Profile> {
        Ok(match self {
            ProfileConfig::Uniform { value } => Profile::Uniform(*value),
            ProfileConfig::PowerLaw {
                coeff,
                exponent,
                min,
            } => Profile::PowerLaw {
                coeff: *coeff,
                exponent: *exponent,
                min: *min,
            },
            ProfileConfig::PerMode { entries } => {
                let mut map = BTreeMap::new();
                for e in entries {
                    map.insert(WaveVector::new(&e.mode), e.value);
                }
                Profile::PerMode(map)
            }
        })
    }
}

fn default_gamma() -> ProfileConfig {
    ProfileConfig::Uniform { value: 1.0 }
}

fn default_forcing() -> ProfileConfig {
    ProfileConfig::Uniform { value: 0.0 }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum NuConventionConfig {
    /// ν = ε².
    CubicNls,
    /// ν = ε^q.
    GeneralQ,
    /// take `nu` verbatim.
    Explicit,
}

fn default_nu_convention() -> NuConventionConfig {
    NuConventionConfig::Explicit
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct RunConfig {
    pub model: Option<ModelConfig>,
    #[serde(default = "default_cutoff")]
    pub cutoff: i32,
    #[serde(default = "default_epsilon")]
    pub epsilon: f64,
    #[serde(default)]
    pub nu: Option<f64>,
    #[serde(default = "default_nu_convention")]
    pub nu_convention: NuConventionConfig,
    #[serde(default)]
    pub mu: u8,
    #[serde(default = "default_gamma")]
    pub gamma: ProfileConfig,
    #[serde(default = "default_forcing")]
    pub forcing: ProfileConfig,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub resonances: Option<ResonancesConfig>,
    #[serde(default)]
    pub kinetic: Option<KineticConfig>,
    #[serde(default)]
    pub chm_oracle: Option<ChmOracleConfig>,
    #[serde(default)]
    pub moments: Option<MomentsConfig>,
}

fn default_cutoff() -> i32 {
    8
}

fn default_epsilon() -> f64 {
    0.1
}

fn default_seed() -> u64 {
    0
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: RunConfig = serde_json::from_str(text).context("config schema violation")?;
        Ok(cfg)
    }

    pub fn model(&self) -> Result<Model> {
        self.model
            .as_ref()
            .ok_or_else(|| anyhow!("config field `model` is required for this subcommand"))?
            .build()
    }

    pub fn resolved_nu(&self, model: &Model) -> Result<f64> {
        let q = model.nonlinearity_degree();
        let nu = match self.nu_convention {
            NuConventionConfig::CubicNls => {
                wavekit::field::nu_from_epsilon(self.epsilon, q, NuConvention::CubicNls)
            }
            NuConventionConfig::GeneralQ => {
                wavekit::field::nu_from_epsilon(self.epsilon, q, NuConvention::GeneralQ)
            }
            NuConventionConfig::Explicit => self
                .nu
                .ok_or_else(|| anyhow!("nu-convention `explicit` requires the `nu` field"))?,
        };
        if !(nu > 0.0) {
            bail!("resolved nu must be positive, got {nu}");
        }
        Ok(nu)
    }

    pub fn params(&self) -> Result<ModelParams> {
        let model = self.model()?;
        let nu = self.resolved_nu(&model)?;
        let params = ModelParams {
            model,
            cutoff: self.cutoff,
            epsilon: self.epsilon,
            nu,
            mu: self.mu,
            gamma: self.gamma.build()?,
            forcing: self.forcing.build()?,
        };
        if self.mu > 1 {
            bail!("mu must be 0 or 1");
        }
        params
            .validate()
            .map_err(|e| anyhow!("invalid parameters: {e}"))?;
        Ok(params)
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SystemConfig {
    Original,
    Interaction,
    Effective,
}

impl From<SystemConfig> for System {
    fn from(s: SystemConfig) -> System {
        match s {
            SystemConfig::Original => System::Original,
            SystemConfig::Interaction => System::Interaction,
            SystemConfig::Effective => System::Effective,
        }
    }
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeConfig {
    ExponentialEuler,
    Rk4,
    Splitting,
}

impl From<SchemeConfig> for Scheme {
    fn from(s: SchemeConfig) -> Scheme {
        match s {
            SchemeConfig::ExponentialEuler => Scheme::ExponentialEuler,
            SchemeConfig::Rk4 => Scheme::Rk4,
            SchemeConfig::Splitting => Scheme::Splitting,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum InitialConfig {
    Zero,
    /// Deterministic pseudo-random amplitudes of the given scale.
    Random { amplitude: f64, seed: u64 },
    Snapshot { path: String },
    Modes { entries: Vec<ModeAmplitude> },
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModeAmplitude {
    pub mode: Vec<i32>,
    pub re: f64,
    pub im: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct SimulateConfig {
    pub system: SystemConfig,
    pub scheme: SchemeConfig,
    pub dt: f64,
    pub t_final: f64,
    #[serde(default = "default_stride")]
    pub record_stride: usize,
    #[serde(default = "default_one_usize")]
    pub n_trajectories: usize,
    #[serde(default)]
    pub window_from: f64,
    pub initial: InitialConfig,
}

fn default_stride() -> usize {
    1
}

fn default_one_usize() -> usize {
    1
}

impl SimulateConfig {
    pub fn integrator(&self) -> IntegratorConfig {
        IntegratorConfig {
            scheme: self.scheme.into(),
            dt: self.dt,
            t_final: self.t_final,
            record_stride: self.record_stride,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ResonancesConfig {
    #[serde(default)]
    pub budget: Option<usize>,
    /// Identify k with −k before clustering (defaults to the model's
    /// reality convention).
    #[serde(default)]
    pub reality: Option<bool>,
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum KineticMode {
    Scan,
    Integrate,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct KineticConfig {
    pub mode: KineticMode,
    pub dim: usize,
    pub gamma_coeff: f64,
    pub gamma_exponent: f64,
    #[serde(default = "default_one_f64")]
    pub coupling: f64,
    pub k_min: f64,
    pub k_max: f64,
    #[serde(default = "default_samples")]
    pub samples: usize,
    #[serde(default)]
    pub phi: Option<f64>,
    #[serde(default)]
    pub exponent_grid: Option<GridConfig>,
    /// Boundary treatment: "inertial" (default) or "clamped-tail".
    #[serde(default)]
    pub domain: Option<DomainConfig>,
    /// Scan reference wavenumber as a log-annulus quantile in [0, 1]
    /// (k_ref = k_min·(k_max/k_min)^q); defaults to 0.5.
    #[serde(default)]
    pub reference_quantile: Option<f64>,
    #[serde(default)]
    pub grid_points: Option<usize>,
    #[serde(default)]
    pub dt: Option<f64>,
    #[serde(default)]
    pub t_final: Option<f64>,
    #[serde(default)]
    pub initial_amplitude: Option<f64>,
    #[serde(default)]
    pub initial_exponent: Option<f64>,
    #[serde(default)]
    pub ring_forcing: Option<RingConfig>,
}

fn default_one_f64() -> f64 {
    1.0
}

fn default_samples() -> usize {
    100_000
}

#[derive(Debug, Clone, Copy, Serialize, Deserialize, PartialEq, Eq)]
#[serde(rename_all = "kebab-case")]
pub enum DomainConfig {
    Inertial,
    ClampedTail,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    pub from: f64,
    pub to: f64,
    pub step: f64,
}

impl GridConfig {
    pub fn points(&self) -> Result<Vec<f64>> {
        if !(self.step > 0.0) || self.to < self.from {
            bail!("grid must have positive step and to >= from");
        }
        let n = ((self.to - self.from) / self.step).round() as usize;
        Ok((0..=n).map(|i| self.from + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RingConfig {
    pub amplitude: f64,
    pub center: f64,
    pub width: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ChmOracleConfig {
    pub rho: String,
    #[serde(default = "default_zero")]
    pub froude: String,
    pub mode: Vec<i32>,
    pub initial: OracleInitial,
    pub t_final: f64,
    pub t_points: usize,
    /// Max |m|, |n| of the printed coupling table.
    #[serde(default = "default_table_range")]
    pub table_range: i32,
}

fn default_table_range() -> i32 {
    4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleInitial {
    pub a_k: [f64; 2],
    pub a_kbar: [f64; 2],
    pub a_c: [f64; 2],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct MomentsConfig {
    /// Ensemble settings reuse the simulate block.
    pub modes: Vec<Vec<i32>>,
    #[serde(default)]
    pub time_index: Option<usize>,
    /// Also estimate the order-4 moments of these quadruples
    /// (k1, k2, k3, k) with upper (k1,k2), lower (k3,k).
    #[serde(default)]
    pub quadruples: Vec<[Vec<i32>; 4]>,
}
