//! Scenario configuration: TOML-backed specs describing groups, power,
//! schemes, sweeps, and fairness runs, plus construction of the derived
//! group profiles.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::channel::{CovarianceSpec, GroupProfile};
use crate::error::{JsdmError, Result};

/// Covariance construction in config form.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum CovarianceConfig {
    OneRing {
        m: usize,
        theta: f64,
        spread: f64,
        spacing: f64,
    },
    ExpCorrelation {
        m: usize,
        nu: f64,
    },
    /// 0-based, end-exclusive DFT column range.
    DftColumns {
        m: usize,
        start: usize,
        end: usize,
        eigenvalues: Vec<f64>,
    },
}

impl CovarianceConfig {
    pub fn to_spec(&self) -> CovarianceSpec {
        match self.clone() {
            CovarianceConfig::OneRing {
                m,
                theta,
                spread,
                spacing,
            } => CovarianceSpec::OneRing {
                m,
                theta,
                spread,
                spacing,
            },
            CovarianceConfig::ExpCorrelation { m, nu } => CovarianceSpec::ExpCorrelation { m, nu },
            CovarianceConfig::DftColumns {
                m,
                start,
                end,
                eigenvalues,
            } => CovarianceSpec::DftColumns {
                m,
                start,
                end,
                eigenvalues,
            },
        }
    }
}

/// One user group in a scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct GroupConfig {
    pub covariance: CovarianceConfig,
    pub r_star: usize,
    /// Fraction of the total user count K assigned to this group;
    /// omitted = equal split.
    #[serde(default)]
    pub k_share: Option<f64>,
    /// Large-scale fading span in dB: user gains l_k log-spaced from 0 dB
    /// up to this value across the group's users.
    #[serde(default)]
    pub gain_spread_db: Option<f64>,
}

/// One scheme entry in a scenario.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum SchemeConfig {
    RedosPbr {
        #[serde(default)]
        alpha: Option<f64>,
        #[serde(default)]
        alpha_grid: Option<Vec<f64>>,
    },
    Rbf {},
    SusNorm { gamma_grid: Vec<f64> },
    SusQsinr { gamma_grid: Vec<f64> },
    GreedyDpc {},
}

/// One proportional-fair variant to run (fig7-style).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PfVariantConfig {
    pub label: String,
    pub delta_alpha_up: f64,
    pub delta_alpha_down: f64,
    /// Overrides the shared alpha_init; a variant pinned at the floor
    /// with zero steps reproduces the fixed-alpha baseline.
    #[serde(default)]
    pub alpha_init: Option<f64>,
}

/// Fairness block (optional).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FairnessConfig {
    /// "rr" or "pf".
    pub mode: String,
    #[serde(default = "default_intervals")]
    pub intervals: u64,
    #[serde(default = "default_delta")]
    pub delta: f64,
    #[serde(default = "default_mu_init")]
    pub mu_init: f64,
    #[serde(default = "default_alpha_init")]
    pub alpha_init: f64,
    /// RR cone-parameter step.
    #[serde(default = "default_delta_alpha")]
    pub delta_alpha: f64,
    #[serde(default)]
    pub variants: Vec<PfVariantConfig>,
}

fn default_intervals() -> u64 {
    10_000
}
fn default_delta() -> f64 {
    0.01
}
fn default_mu_init() -> f64 {
    0.1
}
fn default_alpha_init() -> f64 {
    0.6
}
fn default_delta_alpha() -> f64 {
    0.1
}

/// A complete scenario.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScenarioSpec {
    pub name: String,
    /// Total transmit power in dB.
    pub p_db: f64,
    pub trials: u64,
    pub seed: u64,
    pub k_grid: Vec<usize>,
    /// Approximate-BD residual tolerance.
    #[serde(default = "default_bd_tol")]
    pub bd_tol: f64,
    /// Skip the BD gate (scenarios that intentionally overlap subspaces).
    #[serde(default)]
    pub waive_bd_check: bool,
    /// Cross-variant sweep over exponential-correlation nu values; each
    /// value yields a scenario variant named `name[nu=x.xx]`.
    #[serde(default)]
    pub nu_grid: Option<Vec<f64>>,
    #[serde(rename = "group")]
    pub groups: Vec<GroupConfig>,
    #[serde(rename = "scheme", default)]
    pub schemes: Vec<SchemeConfig>,
    #[serde(default)]
    pub fairness: Option<FairnessConfig>,
}

fn default_bd_tol() -> f64 {
    1e-9
}

impl ScenarioSpec {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        let spec: ScenarioSpec =
            toml::from_str(&text).map_err(|e| JsdmError::Config(format!("{path:?}: {e}")))?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if self.groups.is_empty() {
            return Err(JsdmError::Config("scenario needs at least one group".into()));
        }
        if self.k_grid.is_empty() {
            return Err(JsdmError::Config("empty K grid".into()));
        }
        if self.trials == 0 {
            return Err(JsdmError::Config("trials must be positive".into()));
        }
        for g in &self.groups {
            g.covariance
                .to_spec()
                .validate()
                .map_err(|e| JsdmError::Config(format!("{}: {e}", self.name)))?;
            if let Some(s) = g.k_share {
                if !(0.0..=1.0).contains(&s) {
                    return Err(JsdmError::Config("k_share must be in [0, 1]".into()));
                }
            }
        }
        if let Some(f) = &self.fairness {
            if f.mode != "rr" && f.mode != "pf" {
                return Err(JsdmError::Config(format!(
                    "fairness mode must be rr or pf, got {}",
                    f.mode
                )));
            }
        }
        Ok(())
    }

    /// Expands the nu sweep into per-variant scenarios. Without a sweep,
    /// returns self unchanged.
    pub fn variants(&self) -> Vec<ScenarioSpec> {
        let Some(nus) = &self.nu_grid else {
            return vec![self.clone()];
        };
        nus.iter()
            .map(|&nu| {
                let mut v = self.clone();
                v.name = format!("{}[nu={nu:.2}]", self.name);
                v.nu_grid = None;
                for g in v.groups.iter_mut() {
                    if let CovarianceConfig::ExpCorrelation { m, .. } = g.covariance {
                        g.covariance = CovarianceConfig::ExpCorrelation { m, nu };
                    }
                }
                v
            })
            .collect()
    }

    /// Total linear transmit power.
    pub fn p_linear(&self) -> f64 {
        10f64.powf(self.p_db / 10.0)
    }

    /// Per-beam power rho = P / sum_g r_g*, computed from realized beam
    /// counts (r* may have been clamped to the numerical rank).
    pub fn rho(&self, profiles: &[GroupProfile]) -> f64 {
        let beams: usize = profiles.iter().map(|p| p.r_star).sum();
        self.p_linear() / beams as f64
    }

    /// Builds group profiles for a total user count `k_total`. Shares
    /// default to an equal split; remainders go to the earliest groups.
    pub fn build_profiles(&self, k_total: usize) -> Result<Vec<GroupProfile>> {
        let g_count = self.groups.len();
        let mut counts: Vec<usize> = Vec::with_capacity(g_count);
        if self.groups.iter().any(|g| g.k_share.is_some()) {
            for g in &self.groups {
                let share = g.k_share.unwrap_or(1.0 / g_count as f64);
                counts.push((share * k_total as f64).round() as usize);
            }
        } else {
            let base = k_total / g_count;
            let rem = k_total % g_count;
            for i in 0..g_count {
                counts.push(base + usize::from(i < rem));
            }
        }
        let mut profiles = Vec::with_capacity(g_count);
        for (i, (g, &k)) in self.groups.iter().zip(&counts).enumerate() {
            let mut p = GroupProfile::from_covariance(i, &g.covariance.to_spec(), g.r_star, k)?;
            if let Some(span_db) = g.gain_spread_db {
                // l_k log-spaced from 0 dB to span_db across the group.
                p.user_gains = (0..k)
                    .map(|j| {
                        let frac = if k > 1 { j as f64 / (k as f64 - 1.0) } else { 0.0 };
                        10f64.powf(span_db * frac / 10.0)
                    })
                    .collect();
            }
            profiles.push(p);
        }
        Ok(profiles)
    }
}
