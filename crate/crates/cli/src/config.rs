//! Experiment configuration: space source, initial datum, flow parameters,
//! task list, seed, output directory.

use anyhow::{anyhow, bail, Context, Result};
use cheeger_flow::flow::FlowConfig;
use cheeger_flow::generate::{generate, GeneratorSpec};
use cheeger_flow::space::io::{node_function_from_csv, read_pgm, space_from_json};
use cheeger_flow::space::{DiscreteSpace, NodeFunction};
use serde::{Deserialize, Serialize};
use std::path::{Path, PathBuf};

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SpaceSource {
    /// Path to a space JSON file (relative paths resolve against the config).
    File(PathBuf),
    /// Deterministic generator, seeded from the experiment seed.
    Generator(GeneratorSpec),
    /// Space file contents inlined into the config.
    Inline(serde_json::Value),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum InitialDatum {
    Literal(Vec<f64>),
    /// One value per line.
    Csv(PathBuf),
    /// Grayscale PGM scaled to [0, 1]; grid spaces only.
    Pgm(PathBuf),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Task {
    Flow,
    Resolvent,
    Lambda1,
    VerifyCertificates,
    VerifyAsymptotics,
    VerifyPairing,
    Denoise,
}

impl Task {
    pub fn name(&self) -> &'static str {
        match self {
            Task::Flow => "flow",
            Task::Resolvent => "resolvent",
            Task::Lambda1 => "lambda1",
            Task::VerifyCertificates => "verify-certificates",
            Task::VerifyAsymptotics => "verify-asymptotics",
            Task::VerifyPairing => "verify-pairing",
            Task::Denoise => "denoise",
        }
    }

    pub fn is_verification(&self) -> bool {
        matches!(self, Task::VerifyCertificates | Task::VerifyAsymptotics | Task::VerifyPairing)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", default)]
pub struct FlowSection {
    pub p: f64,
    pub tau: f64,
    pub t_final: f64,
    pub inner_tol: f64,
    pub inner_max_iters: usize,
    pub extinction_eps: Option<f64>,
}

impl Default for FlowSection {
    fn default() -> Self {
        let d = FlowConfig::new(1.0, 1e-3, 2.0);
        Self {
            p: d.p,
            tau: d.tau,
            t_final: d.t_final,
            inner_tol: d.inner_tol,
            inner_max_iters: d.inner_max_iters,
            extinction_eps: d.extinction_eps,
        }
    }
}

impl FlowSection {
    pub fn to_flow_config(&self) -> FlowConfig {
        FlowConfig {
            p: self.p,
            tau: self.tau,
            t_final: self.t_final,
            inner_tol: self.inner_tol,
            inner_max_iters: self.inner_max_iters,
            extinction_eps: self.extinction_eps,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub space: SpaceSource,
    #[serde(default)]
    pub u0: Option<InitialDatum>,
    #[serde(default)]
    pub flow: FlowSection,
    pub tasks: Vec<Task>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out: Option<PathBuf>,
    /// Dump the per-step certificate reports of flow runs as JSON.
    #[serde(default)]
    pub dump_certificates: bool,
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: ExperimentConfig =
            serde_json::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        if cfg.tasks.is_empty() {
            bail!("config has an empty task list");
        }
        Ok(cfg)
    }

    /// Resolve the space (files are relative to `base`).
    pub fn resolve_space(&self, base: &Path) -> Result<DiscreteSpace> {
        match &self.space {
            SpaceSource::File(p) => {
                let path = base.join(p);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading space {}", path.display()))?;
                Ok(space_from_json(&text)?)
            }
            SpaceSource::Generator(spec) => Ok(generate(spec, self.seed)?),
            SpaceSource::Inline(v) => Ok(space_from_json(&v.to_string())?),
        }
    }

    /// Resolve the initial datum against a space; the second component is the
    /// source image's maxval when u0 came from a PGM.
    pub fn resolve_u0(
        &self,
        space: &DiscreteSpace,
        base: &Path,
    ) -> Result<Option<(NodeFunction, Option<u16>)>> {
        let Some(src) = &self.u0 else { return Ok(None) };
        let mut maxval = None;
        let values = match src {
            InitialDatum::Literal(v) => v.clone(),
            InitialDatum::Csv(p) => {
                let path = base.join(p);
                let text = std::fs::read_to_string(&path)
                    .with_context(|| format!("reading u0 {}", path.display()))?;
                node_function_from_csv(&text)?
            }
            InitialDatum::Pgm(p) => {
                let path = base.join(p);
                let bytes =
                    std::fs::read(&path).with_context(|| format!("reading PGM {}", path.display()))?;
                let img = read_pgm(&bytes)?;
                match space {
                    DiscreteSpace::Grid(g) if g.shape() == [img.width, img.height] => {}
                    DiscreteSpace::Grid(g) => {
                        bail!(
                            "PGM is {}x{} but the grid has shape {:?}",
                            img.width,
                            img.height,
                            g.shape()
                        )
                    }
                    DiscreteSpace::Graph(_) => bail!("PGM initial data needs a grid space"),
                }
                maxval = Some(img.maxval);
                img.to_node_function().values
            }
        };
        if values.len() != space.node_count() {
            return Err(anyhow!(
                "u0 has {} values, space has {} nodes",
                values.len(),
                space.node_count()
            ));
        }
        if values.iter().any(|v| !v.is_finite()) {
            bail!("u0 contains a non-finite value");
        }
        Ok(Some((NodeFunction::new(values), maxval)))
    }
}
