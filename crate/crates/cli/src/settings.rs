//! Resolved run settings. These are what the manifests echo and what replay
//! feeds back into the commands.

use std::path::PathBuf;

use anyhow::{bail, Context, Result};
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use thermoinv::inversion::ResidualNorm;
use thermoinv::kernel::DataWeights;
use thermoinv::model::{box_source, KernelMode, ProblemConfig, SamplingScheme, SchemeKind, SourceFunction};
use thermoinv::rules::{DiscrepancyCriterion, LadderConfig};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SchemeArg {
    FixedPoint,
    FixedTime,
    Random,
}

impl SchemeArg {
    pub const ALL: [SchemeArg; 3] = [SchemeArg::FixedPoint, SchemeArg::FixedTime, SchemeArg::Random];

    pub fn kind(self) -> SchemeKind {
        match self {
            SchemeArg::FixedPoint => SchemeKind::FixedPoint,
            SchemeArg::FixedTime => SchemeKind::FixedTime,
            SchemeArg::Random => SchemeKind::RandomPoints,
        }
    }

    pub fn name(self) -> &'static str {
        self.kind().as_str()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ModeArg {
    Paper,
    Physical,
}

impl From<ModeArg> for KernelMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Paper => KernelMode::Paper,
            ModeArg::Physical => KernelMode::Physical,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SourceArg {
    Box,
    Zero,
}

impl SourceArg {
    pub fn function(self) -> SourceFunction {
        match self {
            SourceArg::Box => box_source(),
            SourceArg::Zero => SourceFunction::zero(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MethodArg {
    Naive,
    Tikhonov,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RuleArg {
    Oracle,
    Discrepancy,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NormArg {
    Euclidean,
    Rms,
    Max,
}

impl From<NormArg> for ResidualNorm {
    fn from(n: NormArg) -> Self {
        match n {
            NormArg::Euclidean => ResidualNorm::Euclidean,
            NormArg::Rms => ResidualNorm::Rms,
            NormArg::Max => ResidualNorm::Max,
        }
    }
}

/// Everything that determines the forward model and the sampled points.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ProblemSettings {
    pub scheme: SchemeArg,
    pub source: SourceArg,
    pub x0: f64,
    pub t0: f64,
    pub t_start: f64,
    pub ht: f64,
    pub n_data: usize,
    pub n_series: usize,
    pub mode: ModeArg,
    pub diffusion: f64,
    pub length: f64,
    pub seed: u64,
}

impl ProblemSettings {
    pub fn config(&self) -> Result<ProblemConfig> {
        ProblemConfig::new(self.diffusion, self.length, self.n_series, self.mode.into())
            .context("invalid problem configuration")
    }

    /// The sampling scheme with `count` points.
    pub fn scheme_with_count(&self, count: usize) -> Result<SamplingScheme> {
        let scheme = match self.scheme {
            SchemeArg::FixedPoint => SamplingScheme::fixed_point(self.x0, self.t_start, self.ht, count),
            SchemeArg::FixedTime => SamplingScheme::fixed_time(self.t0, count, self.length),
            SchemeArg::Random => SamplingScheme::random_points(self.t_start, self.ht, count, self.seed),
        };
        scheme.validate(self.length).context("invalid sampling scheme")?;
        Ok(scheme)
    }

    pub fn scheme(&self) -> Result<SamplingScheme> {
        self.scheme_with_count(self.n_data)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenerateSettings {
    pub problem: ProblemSettings,
    pub noise: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReconstructSettings {
    pub problem: ProblemSettings,
    /// Measurement CSV the reconstruction was computed from.
    pub data: PathBuf,
    pub n_grid: usize,
    pub method: MethodArg,
    pub rule: Option<RuleArg>,
    /// Fixed regularization parameter when no rule is given.
    pub alpha: Option<f64>,
    pub alpha_start: Option<f64>,
    pub alpha_factor: Option<f64>,
    pub max_steps: usize,
    pub discrepancy_norm: NormArg,
    pub tau: f64,
    pub paper_weights: bool,
    pub paper_exact: bool,
    /// Noise bound used by the discrepancy rule.
    pub delta: Option<f64>,
    /// Whether `problem.source` is the source that produced the data, so the
    /// true profile can be written and the oracle rule used.
    pub truth: bool,
}

impl ReconstructSettings {
    /// Output file stem: `naive`, `oracle`, `discrepancy` or `tikhonov`.
    pub fn tag(&self) -> &'static str {
        match (self.method, self.rule) {
            (MethodArg::Naive, _) => "naive",
            (MethodArg::Tikhonov, Some(RuleArg::Oracle)) => "oracle",
            (MethodArg::Tikhonov, Some(RuleArg::Discrepancy)) => "discrepancy",
            (MethodArg::Tikhonov, None) => "tikhonov",
        }
    }

    pub fn weights(&self) -> DataWeights {
        if self.paper_weights {
            DataWeights::PaperListing
        } else {
            DataWeights::Swept
        }
    }

    pub fn ladder(&self, rule: RuleArg) -> Result<LadderConfig> {
        let default = match rule {
            RuleArg::Oracle => LadderConfig::descent(),
            RuleArg::Discrepancy => LadderConfig::ascent(),
        };
        let ladder = LadderConfig::new(
            self.alpha_start.unwrap_or(default.alpha_start),
            self.alpha_factor.unwrap_or(default.factor),
            self.max_steps,
        )?;
        match rule {
            RuleArg::Oracle if ladder.factor >= 1.0 => bail!("--alpha-factor must be < 1 for the oracle rule"),
            RuleArg::Discrepancy if ladder.factor <= 1.0 => {
                bail!("--alpha-factor must be > 1 for the discrepancy rule")
            }
            _ => Ok(ladder),
        }
    }

    pub fn criterion(&self) -> DiscrepancyCriterion {
        if self.paper_exact {
            DiscrepancyCriterion::paper_exact()
        } else {
            DiscrepancyCriterion::new(self.discrepancy_norm.into(), self.tau)
        }
    }
}
