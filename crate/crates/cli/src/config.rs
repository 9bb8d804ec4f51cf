//! Run configuration: a TOML document whose values command-line flags override.

use std::path::{Path, PathBuf};

use lshaped_core::lshaped::{SolverConfig, StepSizePolicy};
use lshaped_core::oracle::{NoiseModel, SampleMode};
use serde::Deserialize;

use crate::error::CliError;

/// Either a sample count or the word `exact` (every joint scenario).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(untagged)]
pub enum Samples {
    Count(usize),
    Word(ExactWord),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ExactWord {
    Exact,
}

impl Samples {
    pub fn parse(text: &str) -> Result<Self, String> {
        if text.eq_ignore_ascii_case("exact") {
            return Ok(Self::Word(ExactWord::Exact));
        }
        text.parse::<usize>()
            .map(Self::Count)
            .map_err(|_| format!("`{text}` is neither a sample count nor `exact`"))
    }

    pub fn mode(self) -> SampleMode {
        match self {
            Self::Count(n) => SampleMode::Sampled(n),
            Self::Word(_) => SampleMode::Exact,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyName {
    Constant,
    Practical,
    Optimal,
    SharpConstant,
    SharpOptimal,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum GeneratorName {
    Tiny,
    Inventory,
    Random,
}

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(tag = "source", rename_all = "lowercase", deny_unknown_fields)]
pub enum InstanceSource {
    /// SMPS triplet: a directory (with optional file stem) or three paths.
    Smps {
        dir: Option<PathBuf>,
        stem: Option<String>,
        core: Option<PathBuf>,
        time: Option<PathBuf>,
        stoch: Option<PathBuf>,
    },
    Native {
        path: PathBuf,
    },
    Generator {
        name: GeneratorName,
        /// Inventory items or random first-stage columns.
        items: Option<usize>,
        /// Support size of each independent customer count.
        values: Option<usize>,
        n: Option<usize>,
        m: Option<usize>,
        l: Option<usize>,
        r: Option<usize>,
        scenarios: Option<usize>,
        seed: Option<u64>,
    },
}

impl InstanceSource {
    pub fn generator(name: GeneratorName) -> Self {
        Self::Generator {
            name,
            items: None,
            values: None,
            n: None,
            m: None,
            l: None,
            r: None,
            scenarios: None,
            seed: None,
        }
    }

    fn rebase(&mut self, base: &Path) {
        let join = |p: &mut PathBuf| {
            if p.is_relative() {
                *p = base.join(&*p);
            }
        };
        match self {
            Self::Smps {
                dir, core, time, stoch, ..
            } => {
                for p in [dir, core, time, stoch].into_iter().flatten() {
                    join(p);
                }
            }
            Self::Native { path } => join(path),
            Self::Generator { .. } => {}
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SolverSection {
    pub beta: Option<f64>,
    pub samples: Option<Samples>,
    pub policy: Option<PolicyName>,
    pub rho: Option<f64>,
    pub cp: Option<f64>,
    pub f_star: Option<f64>,
    pub diameter: Option<f64>,
    pub mu: Option<f64>,
    pub v: Option<f64>,
    pub eps_bar: Option<f64>,
    /// Noise bound on `f − f̂`.
    pub eps1: Option<f64>,
    /// Noise bound on `f̂ − f`; also the `ε₂` of the optimal policies.
    pub eps2: Option<f64>,
    pub sigma: Option<f64>,
    pub lipschitz: Option<f64>,
    pub memory: Option<usize>,
    pub max_outer: Option<usize>,
    pub max_inner: Option<usize>,
    pub max_wall_seconds: Option<f64>,
    pub stop_tol: Option<f64>,
    pub keep_last: Option<usize>,
    pub x0: Option<Vec<f64>>,
    pub enumeration_cap: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputSection {
    pub trace: Option<PathBuf>,
    pub summary: Option<PathBuf>,
    /// Score the last trial points on this sample after solving.
    pub evaluate: Option<Samples>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsSection {
    pub batches: Option<usize>,
    pub batch_size: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BenchSection {
    pub rhos: Option<Vec<f64>>,
    pub cps: Option<Vec<f64>>,
    /// Adds the optimal policy when set.
    pub f_star: Option<f64>,
    pub seeds: Option<usize>,
    pub evaluate: Option<Samples>,
}

#[derive(Debug, Clone, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfigDocument {
    pub seed: Option<u64>,
    pub instance: Option<InstanceSource>,
    #[serde(default)]
    pub solver: SolverSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default)]
    pub bounds: BoundsSection,
    #[serde(default)]
    pub bench: BenchSection,
}

impl RunConfigDocument {
    /// Parses `text`; relative instance paths are resolved against `base`.
    pub fn parse(text: &str, origin: &str, base: &Path) -> Result<Self, CliError> {
        let mut doc: Self = toml::from_str(text).map_err(|e| CliError::Usage(format!("{origin}: {e}")))?;
        if let Some(src) = &mut doc.instance {
            src.rebase(base);
        }
        Ok(doc)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, &path.display().to_string(), base)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(0)
    }

    pub fn sample_mode(&self) -> SampleMode {
        self.solver.samples.unwrap_or(Samples::Count(100)).mode()
    }

    pub fn noise(&self) -> NoiseModel {
        let s = &self.solver;
        let mut noise = if self.sample_mode() == SampleMode::Exact {
            NoiseModel::exact()
        } else {
            NoiseModel::default()
        };
        noise.eps1 = s.eps1.or(noise.eps1);
        noise.eps2 = s.eps2.or(noise.eps2);
        noise.sigma = s.sigma;
        noise
    }

    pub fn beta(&self) -> f64 {
        self.solver.beta.unwrap_or(0.5)
    }

    pub fn policy(&self) -> Result<StepSizePolicy, CliError> {
        let s = &self.solver;
        let need = |v: Option<f64>, what: &str, policy: &str| {
            v.ok_or_else(|| CliError::Usage(format!("the {policy} policy needs `{what}`")))
        };
        let eps2 = s.eps2.unwrap_or(0.0);
        Ok(match s.policy.unwrap_or(PolicyName::Constant) {
            PolicyName::Constant => StepSizePolicy::Constant {
                rho: s.rho.unwrap_or(1.0),
            },
            PolicyName::Practical => StepSizePolicy::Practical {
                cp: s.cp.unwrap_or(1.0),
            },
            PolicyName::Optimal => StepSizePolicy::Optimal {
                f_star: need(s.f_star, "f_star", "optimal")?,
                diameter: s.diameter,
                eps2,
            },
            PolicyName::SharpConstant => StepSizePolicy::SharpConstant {
                mu: need(s.mu, "mu", "sharp-constant")?,
                v: need(s.v, "v", "sharp-constant")?,
                eps_bar: need(s.eps_bar.or(self.noise().eps_bar(self.beta())), "eps_bar", "sharp-constant")?,
            },
            PolicyName::SharpOptimal => StepSizePolicy::SharpOptimal {
                mu: need(s.mu, "mu", "sharp-optimal")?,
                f_star: need(s.f_star, "f_star", "sharp-optimal")?,
                eps2,
            },
        })
    }

    pub fn solver_config(&self) -> Result<SolverConfig, CliError> {
        let s = &self.solver;
        let d = SolverConfig::default();
        let max_wall = match s.max_wall_seconds {
            Some(t) if !(t > 0.0 && t.is_finite()) => {
                return Err(CliError::Usage(format!("max_wall_seconds = {t} must be positive")))
            }
            t => t.map(std::time::Duration::from_secs_f64),
        };
        let config = SolverConfig {
            beta: self.beta(),
            sampling: self.sample_mode(),
            policy: self.policy()?,
            memory: s.memory.unwrap_or(d.memory),
            max_outer: s.max_outer.unwrap_or(d.max_outer),
            max_total_inner: s.max_inner.unwrap_or(d.max_total_inner),
            max_wall,
            stop_tol: s.stop_tol.unwrap_or(d.stop_tol),
            seed: self.seed(),
            x0: s.x0.clone(),
            lipschitz: s.lipschitz,
            noise: self.noise(),
            keep_last: s.keep_last.unwrap_or(d.keep_last),
            enumeration_cap: s.enumeration_cap.unwrap_or(d.enumeration_cap),
            ..d
        };
        config.check().map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(config)
    }
}
