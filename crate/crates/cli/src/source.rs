use std::path::PathBuf;

use clap::{Args, ValueEnum};
use htmax::construct::{
    adversarial_tensor, cheb_tensor, counterexample_matrix, from_elementary, random_ht,
};
use htmax::{io, HtTensor};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Family {
    Rand,
    Cheb,
    Counterexample,
    Adversarial,
    Elementary,
}

/// Where the tensor comes from: a container file or a generator.
#[derive(Debug, Clone, Args)]
pub struct Source {
    /// JSON container to read.
    #[arg(
        short,
        long,
        conflicts_with = "family",
        required_unless_present = "family"
    )]
    pub input: Option<PathBuf>,
    /// Generator family.
    #[arg(long, value_enum)]
    pub family: Option<Family>,
    /// Order.
    #[arg(long, default_value_t = 4)]
    pub d: usize,
    /// Mode size.
    #[arg(long, default_value_t = 5)]
    pub n: usize,
    /// Rank of rand tensors.
    #[arg(long, default_value_t = 3)]
    pub r: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Leading singular value of the counterexample matrix.
    #[arg(long, default_value_t = 2.0)]
    pub sigma1: f64,
    /// Trailing singular value of the counterexample matrix.
    #[arg(long, default_value_t = 1.0)]
    pub sigma2: f64,
    /// Comma-separated factor of an elementary tensor; repeat once per mode.
    #[arg(long = "factor", allow_hyphen_values = true)]
    pub factors: Vec<String>,
}

impl Source {
    pub fn load(&self) -> Result<HtTensor, CliError> {
        if let Some(path) = &self.input {
            return Ok(io::load(path)?);
        }
        let family = self.family.expect("clap enforces a source");
        let t = match family {
            Family::Rand => random_ht(self.d, self.n, self.r, self.seed)?,
            Family::Cheb => cheb_tensor(self.d, self.n)?,
            Family::Counterexample => counterexample_matrix(self.n, self.sigma1, self.sigma2)?,
            Family::Adversarial => adversarial_tensor(self.d, self.n, self.seed)?,
            Family::Elementary => {
                if self.factors.is_empty() {
                    return Err(CliError::Usage(
                        "elementary tensors need at least one --factor".into(),
                    ));
                }
                let vs = self
                    .factors
                    .iter()
                    .map(|f| parse_factor(f))
                    .collect::<Result<Vec<_>, _>>()?;
                from_elementary(&vs)?
            }
        };
        Ok(t)
    }

    pub fn family(&self) -> Option<Family> {
        self.family
    }
}

fn parse_factor(text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|v| {
            v.trim()
                .parse::<f64>()
                .map_err(|e| CliError::Usage(format!("bad factor entry {v:?}: {e}")))
        })
        .collect()
}
