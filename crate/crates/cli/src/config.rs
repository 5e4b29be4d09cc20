//! Run configuration: everything a run depends on, serializable, hashed into
//! every artifact. `out` and `workers` change where and how fast, never what,
//! so they are left out of the hash.

use std::path::PathBuf;

use nqground_core::global::FlowOptions;
use nqground_core::manifold::GammaOptions;
use nqground_core::params::RawParams;
use nqground_core::{ParameterSet, RadialGrid, Result, WeinsteinOptions};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GridConfig {
    #[serde(rename = "R")]
    pub radius: f64,
    pub n: usize,
    /// Geometric grading; `None` places the first node at `1e-5·R`.
    pub grading: Option<f64>,
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            radius: 40.0,
            n: 4096,
            grading: None,
        }
    }
}

impl GridConfig {
    pub fn build(&self, dim: usize) -> Result<RadialGrid> {
        match self.grading {
            Some(g) => RadialGrid::build(dim, self.radius, self.n, g),
            None => RadialGrid::with_first_node(dim, self.radius, self.n, 1e-5 * self.radius),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunConfig {
    pub params: RawParams,
    pub grid: GridConfig,
    pub flow: FlowOptions,
    pub gamma: GammaOptions,
    pub weinstein: WeinsteinOptions,
    pub seed: u64,
    pub workers: usize,
    pub out: PathBuf,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            params: RawParams {
                n: 2,
                q: 3.0,
                p: 4.0,
                b: 0.5,
            },
            grid: GridConfig::default(),
            flow: FlowOptions::default(),
            gamma: GammaOptions::default(),
            weinstein: WeinsteinOptions::default(),
            seed: 0,
            workers: 1,
            out: PathBuf::from("out"),
        }
    }
}

impl RunConfig {
    pub fn params(&self) -> Result<ParameterSet> {
        ParameterSet::try_from(self.params)
    }

    /// SHA-256 of the canonical JSON of the result-relevant fields plus the task.
    pub fn hash(&self, task: &impl Serialize) -> String {
        let view = serde_json::json!({
            "params": self.params,
            "grid": self.grid,
            "flow": self.flow,
            "gamma": self.gamma,
            "weinstein": self.weinstein,
            "seed": self.seed,
            "task": task,
        });
        hex::encode(Sha256::digest(view.to_string().as_bytes()))
    }
}
