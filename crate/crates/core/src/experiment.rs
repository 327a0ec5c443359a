//! Multi-trial experiments: one fresh split, normalisation and optimisation
//! run per trial, aggregated into an [`ExperimentReport`].

use std::fmt;
use std::str::FromStr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::time::Instant;

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cooperative::{CooperativeParams, CooperativeState, Variant};
use crate::dataset::{self, Dataset, Manifest, SplitSizes};
use crate::gso::{seeded_rng, BoundaryPolicy, Bounds, GroupState, GsoParams, Objective};
use crate::mlp::{self, MlpTopology};
use crate::stats::{self, AnovaResult, PairwiseMatrix};
use crate::weight_decay::WdParams;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    Gso,
    GsoWd,
    CgsoSWd,
    CgsoHWd,
}

impl Algorithm {
    pub const ALL: [Algorithm; 4] = [Algorithm::Gso, Algorithm::GsoWd, Algorithm::CgsoSWd, Algorithm::CgsoHWd];

    pub fn as_str(&self) -> &'static str {
        match self {
            Algorithm::Gso => "gso",
            Algorithm::GsoWd => "gso-wd",
            Algorithm::CgsoSWd => "cgso-s-wd",
            Algorithm::CgsoHWd => "cgso-h-wd",
        }
    }

    pub fn variant(&self) -> Option<Variant> {
        match self {
            Algorithm::CgsoSWd => Some(Variant::S),
            Algorithm::CgsoHWd => Some(Variant::H),
            _ => None,
        }
    }

    /// Plain GSO variants revert escaping members, cooperative ones absorb them.
    pub fn boundary_policy(&self) -> BoundaryPolicy {
        if self.variant().is_some() {
            BoundaryPolicy::Absorb
        } else {
            BoundaryPolicy::Revert
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| Error::Config(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FitnessSplit {
    Train,
    Validation,
}

impl FromStr for FitnessSplit {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(FitnessSplit::Train),
            "validation" => Ok(FitnessSplit::Validation),
            _ => Err(Error::Config(format!("unknown fitness split {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub algorithm: Algorithm,
    pub trials: usize,
    pub population: usize,
    pub max_iter: usize,
    pub k: usize,
    pub seed: u64,
    pub fitness_split: FitnessSplit,
    pub hidden: usize,
    pub scrounger_fraction: f64,
    pub wd: WdParams,
    pub exchange_half: Option<usize>,
    /// Run trials on the rayon pool. Results do not depend on it.
    #[serde(skip, default = "yes")]
    pub parallel: bool,
}

fn yes() -> bool {
    true
}

impl ExperimentConfig {
    /// Defaults: 50 trials, 50 members, 50 iterations, `K = 5`, 6 hidden
    /// nodes, fitness on the validation split, weight decay on for every
    /// algorithm except plain GSO.
    pub fn for_algorithm(algorithm: Algorithm) -> Self {
        Self {
            algorithm,
            trials: 50,
            population: 50,
            max_iter: 50,
            k: 5,
            seed: 0,
            fitness_split: FitnessSplit::Validation,
            hidden: MlpTopology::DEFAULT_HIDDEN,
            scrounger_fraction: 0.8,
            wd: WdParams {
                enabled: algorithm != Algorithm::Gso,
                ..WdParams::default()
            },
            exchange_half: None,
            parallel: true,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.trials == 0 {
            return Err(Error::Config("trials must be >= 1".into()));
        }
        if self.population == 0 {
            return Err(Error::Config("population must be >= 1".into()));
        }
        if self.hidden == 0 {
            return Err(Error::Config("hidden must be >= 1".into()));
        }
        if self.variant().is_some() && self.k == 0 {
            return Err(Error::Config("k must be >= 1".into()));
        }
        self.wd.validate()
    }

    fn variant(&self) -> Option<Variant> {
        self.algorithm.variant()
    }
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self::for_algorithm(Algorithm::Gso)
    }
}

/// Wraps an objective and counts evaluations independently of the optimizer.
#[derive(Debug)]
pub struct CountingObjective<O> {
    inner: O,
    count: AtomicU64,
}

impl<O> CountingObjective<O> {
    pub fn new(inner: O) -> Self {
        Self {
            inner,
            count: AtomicU64::new(0),
        }
    }

    pub fn count(&self) -> u64 {
        self.count.load(Ordering::Relaxed)
    }

    pub fn inner(&self) -> &O {
        &self.inner
    }
}

impl<O: Objective> Objective for CountingObjective<O> {
    fn evaluate(&self, x: &[f64]) -> Result<f64> {
        self.count.fetch_add(1, Ordering::Relaxed);
        self.inner.evaluate(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub best_position: Vec<f64>,
    pub best_cost: f64,
    pub evaluations: u64,
    pub iterations: usize,
}

/// Runs the configured optimizer until the best cost hits 0 or `max_iter`
/// outer iterations have run.
pub fn optimize<O: Objective + ?Sized, R: Rng + ?Sized>(
    config: &ExperimentConfig,
    objective: &O,
    bounds: &Bounds,
    rng: &mut R,
) -> Result<Outcome> {
    match config.variant() {
        None => {
            let params = GsoParams::for_bounds(bounds)
                .with_population(config.population)
                .with_max_iter(config.max_iter)
                .with_scrounger_fraction(config.scrounger_fraction)
                .with_policy(config.algorithm.boundary_policy());
            let mut group = GroupState::new(bounds, &params, &config.wd, objective, rng)?;
            while group.iteration < config.max_iter && group.best_cost > 0.0 {
                group.iterate(objective, &params, &config.wd, rng)?;
            }
            Ok(Outcome {
                best_position: group.best_position.clone(),
                best_cost: group.best_cost,
                evaluations: group.evaluations,
                iterations: group.iteration,
            })
        }
        Some(variant) => {
            let params = CooperativeParams {
                variant,
                k: config.k,
                population: config.population,
                scrounger_fraction: config.scrounger_fraction,
                boundary_policy: config.algorithm.boundary_policy(),
                exchange_half: config.exchange_half,
            };
            let mut state = CooperativeState::new(bounds, params, &config.wd, objective, rng)?;
            while state.iteration < config.max_iter && state.best_cost() > 0.0 {
                state.iterate(objective, &config.wd, rng)?;
            }
            let (best_position, best_cost) = state.report_best();
            Ok(Outcome {
                best_position,
                best_cost,
                evaluations: state.evaluations(),
                iterations: state.iteration,
            })
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrialResult {
    /// Percentage in `[0, 100]`.
    pub test_accuracy: f64,
    /// Wall-clock seconds spent in the optimizer.
    pub train_time: f64,
    /// Raw MSE of the reported network on the validation split.
    pub final_validation_error: f64,
    pub evaluations: u64,
    pub seed: u64,
}

/// A loaded dataset with its split sizes, scaled down when the file has fewer
/// usable rows than configured.
#[derive(Debug, Clone)]
pub struct PreparedData {
    pub dataset: Dataset,
    pub sizes: SplitSizes,
    pub sizes_scaled: bool,
}

impl PreparedData {
    pub fn new(dataset: Dataset, sizes: SplitSizes) -> Self {
        let (sizes, sizes_scaled) = sizes.fit_to(dataset.rows());
        Self {
            dataset,
            sizes,
            sizes_scaled,
        }
    }

    pub fn from_manifest(manifest: &Manifest) -> Result<Self> {
        Ok(Self::new(manifest.load_dataset()?, manifest.sizes()))
    }
}

/// SplitMix64 finaliser over `master + index`.
pub fn trial_seed(master: u64, index: u64) -> u64 {
    let mut z = master.wrapping_add(index).wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Split, normalise, optimise and score on the test split. The same RNG
/// stream drives the split and the optimizer.
pub fn run_trial(config: &ExperimentConfig, data: &PreparedData, seed: u64) -> Result<TrialResult> {
    let (result, _) = run_trial_detailed(config, data, seed)?;
    Ok(result)
}

/// [`run_trial`] that also returns the optimizer outcome.
pub fn run_trial_detailed(
    config: &ExperimentConfig,
    data: &PreparedData,
    seed: u64,
) -> Result<(TrialResult, Outcome)> {
    config.validate()?;
    let ds = &data.dataset;
    if data.sizes.validation == 0 || data.sizes.test == 0 {
        return Err(Error::Config("validation and test splits must be non-empty".into()));
    }
    let mut rng = seeded_rng(seed);
    let splits = dataset::split(ds.rows(), data.sizes, &mut rng)?;
    let (features, _) = dataset::normalize(ds, &splits)?;
    let classes = ds.num_classes();
    let topology = MlpTopology::new(ds.num_features(), config.hidden, classes)?;
    let train = dataset::patterns(&features, &ds.labels, classes, &splits.train)?;
    let validation = dataset::patterns(&features, &ds.labels, classes, &splits.validation)?;
    let test = dataset::patterns(&features, &ds.labels, classes, &splits.test)?;

    let fitness = match config.fitness_split {
        FitnessSplit::Train => train,
        FitnessSplit::Validation => validation.clone(),
    };
    let objective = CountingObjective::new(mlp::make_cost_fn(topology, fitness)?);
    let bounds = Bounds::uniform(topology.dimension(), -1.0, 1.0)?;

    let start = Instant::now();
    let outcome = optimize(config, &objective, &bounds, &mut rng)?;
    let train_time = start.elapsed().as_secs_f64();

    let test_accuracy = 100.0 * mlp::accuracy(&topology, &outcome.best_position, &test)?;
    let final_validation_error = mlp::mse_cost(&topology, &outcome.best_position, &validation)?;
    Ok((
        TrialResult {
            test_accuracy,
            train_time,
            final_validation_error,
            evaluations: objective.count(),
            seed,
        },
        outcome,
    ))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub dataset: String,
    pub algorithm: Algorithm,
    pub trials: usize,
    pub mean_accuracy: f64,
    /// Sample standard deviation; reported as 0 with `std_defined = false`
    /// for a single trial.
    pub std_accuracy: f64,
    pub std_defined: bool,
    pub mean_time: f64,
    pub mean_evaluations: f64,
    pub sizes_scaled: bool,
    pub config: ExperimentConfig,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ExperimentReport {
    pub trials: Vec<TrialResult>,
    pub summary: Summary,
}

impl ExperimentReport {
    pub fn accuracies(&self) -> Vec<f64> {
        self.trials.iter().map(|t| t.test_accuracy).collect()
    }

    pub fn from_trials(
        config: &ExperimentConfig,
        dataset: &str,
        sizes_scaled: bool,
        trials: Vec<TrialResult>,
    ) -> Result<Self> {
        if trials.is_empty() {
            return Err(Error::Report("no trials".into()));
        }
        let acc: Vec<f64> = trials.iter().map(|t| t.test_accuracy).collect();
        let std = stats::sample_std(&acc);
        let n = trials.len() as f64;
        let summary = Summary {
            dataset: dataset.to_owned(),
            algorithm: config.algorithm,
            trials: trials.len(),
            mean_accuracy: stats::mean(&acc),
            std_accuracy: std.unwrap_or(0.0),
            std_defined: std.is_some(),
            mean_time: trials.iter().map(|t| t.train_time).sum::<f64>() / n,
            mean_evaluations: trials.iter().map(|t| t.evaluations as f64).sum::<f64>() / n,
            sizes_scaled,
            config: config.clone(),
        };
        Ok(Self { trials, summary })
    }
}

pub fn run_experiment(config: &ExperimentConfig, data: &PreparedData) -> Result<ExperimentReport> {
    config.validate()?;
    let seeds: Vec<u64> = (0..config.trials as u64).map(|i| trial_seed(config.seed, i)).collect();
    let trials: Vec<TrialResult> = if config.parallel {
        seeds.par_iter().map(|&s| run_trial(config, data, s)).collect::<Result<_>>()?
    } else {
        seeds.iter().map(|&s| run_trial(config, data, s)).collect::<Result<_>>()?
    };
    ExperimentReport::from_trials(config, &data.dataset.name, data.sizes_scaled, trials)
}

/// ANOVA plus pairwise comparisons across several reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Comparison {
    pub labels: Vec<String>,
    pub means: Vec<f64>,
    pub stds: Vec<f64>,
    pub anova: AnovaResult,
    pub pairwise: PairwiseMatrix,
}

pub fn compare_reports(reports: &[ExperimentReport], alpha_per_test: f64) -> Result<Comparison> {
    let groups: Vec<Vec<f64>> = reports.iter().map(ExperimentReport::accuracies).collect();
    let anova = stats::anova_f(&groups)?;
    let pairwise = stats::bonferroni_pairwise(&groups, alpha_per_test)?;
    Ok(Comparison {
        labels: reports
            .iter()
            .map(|r| format!("{}/{}", r.summary.dataset, r.summary.algorithm))
            .collect(),
        means: groups.iter().map(|g| stats::mean(g)).collect(),
        stds: groups.iter().map(|g| stats::sample_std(g).unwrap_or(0.0)).collect(),
        anova,
        pairwise,
    })
}
