//! Multi-start fixed-gradient sampling.
//!
//! Each start spawns a group: `t_fix` ordinary constrained iterations with a
//! generous move limit, then the objective gradient is frozen at the current
//! iterate while volume constraint values and gradients stay live, and the
//! optimizer keeps stepping with a small move limit. Iterates are snapshotted
//! on a fixed schedule. An optional reference group runs the same schedule
//! without freezing, starting from the uniform design at the volume bound.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mma::Mma;
use crate::par::{self, ExecMode};
use crate::problem::Problem;

/// How the initial designs of the sampling groups are constructed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum StartKind {
    /// Partition the elements into nearly equal contiguous blocks; start j is
    /// solid on block j and at `rho_min` elsewhere, so starts are pairwise
    /// orthogonal up to O(rho_min) dot products. The block construction
    /// saturates at eight blocks; starts beyond the eighth are uniform fields
    /// at the volume bound, the centroid of the block starts.
    OrthogonalBlocks,
    /// Constant fields at evenly spaced densities in [0.1, 0.9].
    UniformLevels,
    /// Element-wise uniform draws from [rho_min, 1].
    SeededRandom,
    /// Eight orthogonal blocks plus seeded-random starts for the remainder.
    Mixed,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct SamplingConfig {
    pub num_starts: usize,
    pub start_kind: StartKind,
    pub t_fix: usize,
    pub max_iter: usize,
    pub save_interval: usize,
    pub eta_max_initial: f64,
    pub eta_max_after_fix: f64,
    pub include_reference_group: bool,
    pub freeze_gradient: bool,
    pub rng_seed: u64,
}

impl Default for SamplingConfig {
    fn default() -> Self {
        Self {
            num_starts: 9,
            start_kind: StartKind::OrthogonalBlocks,
            t_fix: 5,
            max_iter: 100,
            save_interval: 20,
            eta_max_initial: 0.2,
            eta_max_after_fix: 0.01,
            include_reference_group: true,
            freeze_gradient: true,
            rng_seed: 0,
        }
    }
}

impl SamplingConfig {
    pub fn validate(&self) -> Result<()> {
        if self.num_starts == 0 {
            return Err(Error::Config("numStarts must be at least 1".into()));
        }
        if self.t_fix >= self.max_iter {
            return Err(Error::Config(format!(
                "tFix ({}) must be smaller than maxIter ({})",
                self.t_fix, self.max_iter
            )));
        }
        if self.save_interval == 0 || self.save_interval > self.max_iter {
            return Err(Error::Config(format!(
                "saveInterval ({}) must lie in 1..=maxIter ({})",
                self.save_interval, self.max_iter
            )));
        }
        for (name, eta) in [
            ("etaMaxInitial", self.eta_max_initial),
            ("etaMaxAfterFix", self.eta_max_after_fix),
        ] {
            if !eta.is_finite() || eta <= 0.0 {
                return Err(Error::Config(format!("{name} must be positive, got {eta}")));
            }
        }
        if self.eta_max_after_fix > self.eta_max_initial {
            return Err(Error::Config(format!(
                "etaMaxAfterFix ({}) must not exceed etaMaxInitial ({})",
                self.eta_max_after_fix, self.eta_max_initial
            )));
        }
        Ok(())
    }

    /// Iterations snapshotted for a sampling group: {0, Δ, 2Δ, …, ⌊T/Δ⌋Δ}.
    pub fn save_schedule(&self) -> Vec<usize> {
        (0..=self.max_iter / self.save_interval).map(|q| q * self.save_interval).collect()
    }
}

/// One saved design with its objective values.
#[derive(Debug, Clone)]
pub struct Sample {
    pub group_id: usize,
    pub iteration: usize,
    pub is_reference: bool,
    /// Unfiltered design vector; embeddings are built from these.
    pub design: Vec<f64>,
    pub raw_j: f64,
    pub clipped_j: f64,
}

/// All samples of an experiment, in deterministic (group, iteration) order.
#[derive(Debug, Clone)]
pub struct SampleSet {
    pub samples: Vec<Sample>,
    pub num_groups: usize,
    pub reference_group_id: Option<usize>,
    /// Groups that stopped early, with the error that stopped them.
    pub aborted_groups: Vec<(usize, String)>,
}

impl SampleSet {
    /// Lowest clipped objective within a group (earliest iteration on ties).
    pub fn best_in_group(&self, group_id: usize) -> Option<&Sample> {
        self.samples
            .iter()
            .filter(|s| s.group_id == group_id)
            .min_by(|a, b| {
                a.clipped_j
                    .total_cmp(&b.clipped_j)
                    .then(a.iteration.cmp(&b.iteration))
            })
    }

    pub fn reference_best(&self) -> Option<&Sample> {
        self.best_in_group(self.reference_group_id?)
    }

    /// Samples excluding the reference group, for ablation comparisons.
    pub fn without_reference(&self) -> Vec<&Sample> {
        self.samples.iter().filter(|s| !s.is_reference).collect()
    }
}

/// Construct the initial designs for `n` elements. `volume_fraction` sets the
/// density of the uniform starts that pad an orthogonal-block set beyond
/// eight groups.
pub fn make_starts(
    config: &SamplingConfig,
    n: usize,
    rho_min: f64,
    volume_fraction: f64,
) -> Result<Vec<Vec<f64>>> {
    config.validate()?;
    let m = config.num_starts;
    if m > n {
        return Err(Error::Config(format!(
            "cannot build {m} starts for only {n} design variables"
        )));
    }
    let blocks = |count: usize| -> Vec<Vec<f64>> {
        (0..count)
            .map(|j| {
                let (from, to) = (j * n / count, (j + 1) * n / count);
                let mut rho = vec![rho_min; n];
                rho[from..to].fill(1.0);
                rho
            })
            .collect()
    };
    match config.start_kind {
        StartKind::OrthogonalBlocks => {
            let mut starts = blocks(m.min(8));
            starts.resize(m, vec![volume_fraction; n]);
            Ok(starts)
        }
        StartKind::UniformLevels => Ok((0..m)
            .map(|j| {
                let level = if m == 1 { 0.5 } else { 0.1 + 0.8 * j as f64 / (m - 1) as f64 };
                vec![level; n]
            })
            .collect()),
        StartKind::SeededRandom => {
            let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
            Ok((0..m)
                .map(|_| (0..n).map(|_| rng.gen_range(rho_min..=1.0)).collect())
                .collect())
        }
        StartKind::Mixed => {
            if m < 8 {
                return Err(Error::Config(format!(
                    "mixed starts need at least 8 groups, got {m}"
                )));
            }
            let mut starts = blocks(8);
            let mut rng = ChaCha8Rng::seed_from_u64(config.rng_seed);
            for _ in 8..m {
                starts.push((0..n).map(|_| rng.gen_range(rho_min..=1.0)).collect());
            }
            Ok(starts)
        }
    }
}

struct GroupRun {
    samples: Vec<Sample>,
    abort: Option<String>,
}

/// Core optimization loop shared by sampling and reference groups.
///
/// The gradient used by iteration t is the live gradient at iterate t-1 while
/// t <= t_fix, and afterwards the gradient evaluated once at iterate t_fix
/// (when freezing is active). `observe` sees every gradient handed to the
/// optimizer, keyed by iteration, which tests use to verify the freeze.
fn run_group_observed(
    problem: &Problem,
    start: &[f64],
    config: &SamplingConfig,
    group_id: usize,
    is_reference: bool,
    observe: &mut dyn FnMut(usize, &[f64]),
) -> GroupRun {
    let n = problem.num_elements();
    let saves: BTreeSet<usize> = config
        .save_schedule()
        .into_iter()
        .filter(|&it| !(is_reference && it == 0))
        .collect();
    let freeze = config.freeze_gradient && !is_reference;
    let t_total = config.max_iter;

    let mut samples = Vec::with_capacity(saves.len());
    let mut x = start.to_vec();
    let mut live_grad: Vec<f64> = Vec::new();
    let mut frozen_grad: Option<Vec<f64>> = None;
    let mut mma = match Mma::new(vec![problem.rho_min; n], vec![1.0; n]) {
        Ok(m) => m,
        Err(e) => return GroupRun { samples, abort: Some(e.to_string()) },
    };
    let dvol = vec![1.0 / n as f64; n];

    for t in 0..=t_total {
        let next_live = t < t_total && (!freeze || t + 1 <= config.t_fix);
        let freeze_here = freeze && t == config.t_fix;
        let want_grad = next_live || freeze_here;
        let is_save = saves.contains(&t);
        if want_grad || is_save {
            let eval = match problem.evaluate(&x, want_grad) {
                Ok(r) => r,
                Err(e) => return GroupRun { samples, abort: Some(e.to_string()) },
            };
            if is_save {
                samples.push(Sample {
                    group_id,
                    iteration: t,
                    is_reference,
                    design: x.clone(),
                    raw_j: eval.objective,
                    clipped_j: problem.clip(eval.objective),
                });
            }
            if let Some(g) = eval.gradient {
                if freeze_here {
                    frozen_grad = Some(g.clone());
                }
                live_grad = g;
            }
        }
        if t == t_total {
            break;
        }
        let grad: &[f64] = if !freeze || t + 1 <= config.t_fix {
            &live_grad
        } else {
            frozen_grad.as_ref().expect("frozen gradient must exist past t_fix")
        };
        let (gv, _) = problem.volume_constraint(&x);
        let eta = if t + 1 <= config.t_fix {
            config.eta_max_initial
        } else {
            config.eta_max_after_fix
        };
        observe(t + 1, grad);
        x = match mma.step(&x, grad, gv, &dvol, eta) {
            Ok(next) => next,
            Err(e) => return GroupRun { samples, abort: Some(e.to_string()) },
        };
    }
    GroupRun { samples, abort: None }
}

/// Run one sampling group from `start`.
pub fn run_group(
    problem: &Problem,
    start: &[f64],
    config: &SamplingConfig,
    group_id: usize,
) -> (Vec<Sample>, Option<String>) {
    let run = run_group_observed(problem, start, config, group_id, false, &mut |_, _| {});
    (run.samples, run.abort)
}

/// Run the reference group: uniform start at the volume bound, live gradients
/// throughout, snapshots at {Δ, …, ⌊T/Δ⌋Δ}.
pub fn run_reference_group(
    problem: &Problem,
    config: &SamplingConfig,
    group_id: usize,
) -> (Vec<Sample>, Option<String>) {
    let start = vec![problem.volume_fraction; problem.num_elements()];
    let run = run_group_observed(problem, &start, config, group_id, true, &mut |_, _| {});
    (run.samples, run.abort)
}

/// Run all groups (optionally in parallel) and merge deterministically.
pub fn run_sampling(
    problem: &Problem,
    config: &SamplingConfig,
    mode: ExecMode,
) -> Result<SampleSet> {
    let starts = make_starts(
        config,
        problem.num_elements(),
        problem.rho_min,
        problem.volume_fraction,
    )?;
    let m = starts.len();
    let mut groups: Vec<(Vec<Sample>, Option<String>)> =
        par::map_indexed(mode, m, |j| run_group(problem, &starts[j], config, j));
    let reference_group_id = if config.include_reference_group {
        groups.push(run_reference_group(problem, config, m));
        Some(m)
    } else {
        None
    };

    let mut samples = Vec::new();
    let mut aborted_groups = Vec::new();
    for (gid, (group_samples, abort)) in groups.into_iter().enumerate() {
        samples.extend(group_samples);
        if let Some(msg) = abort {
            aborted_groups.push((gid, msg));
        }
    }
    Ok(SampleSet {
        samples,
        num_groups: m + reference_group_id.is_some() as usize,
        reference_group_id,
        aborted_groups,
    })
}
