//! End-to-end experiment orchestration: configuration, the
//! sampling → embedding → surface → envelope → index pipeline, and the
//! report structure persisted alongside the artifacts.

use std::path::PathBuf;
use std::time::Instant;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::embedding::{classical_mds, pca_embed, squared_cosine_distance_matrix, Embedding2D};
use crate::error::{Error, Result};
use crate::landscape::{
    lower_convex_hull, nonlinearity_index, LandscapeSurface, LowerHullEnvelope, NonlinearityIndex,
};
use crate::par::ExecMode;
use crate::problem::{presets, ObjectiveKind, ObjectiveSpec, Problem};
use crate::sampler::{run_sampling, Sample, SampleSet, SamplingConfig};

/// How the 2D embedding is computed from the design vectors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum EmbeddingMethod {
    /// Classical MDS on squared cosine distances.
    #[default]
    CosineMds,
    /// Principal components of the centered design vectors.
    Pca,
}

/// Full description of one experiment; everything needed to reproduce a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", default)]
pub struct ExperimentConfig {
    /// Boundary-condition preset name.
    pub preset: String,
    pub nelx: usize,
    pub nely: usize,
    pub objective: ObjectiveKind,
    /// p-norm exponent for aggregated objectives; ignored otherwise.
    pub aggregation_exponent: f64,
    pub volume_fraction: f64,
    pub filter_radius: f64,
    pub sampling: SamplingConfig,
    pub embedding: EmbeddingMethod,
    /// Barycentric resolution R of the envelope sampling.
    pub hull_resolution: usize,
    /// Number of filled iso-bands in the contour plot.
    pub contour_bands: usize,
    pub exec_mode: ExecMode,
    /// Where artifacts are written. Plumbing rather than experiment identity:
    /// excluded from serialization so reports stay byte-identical across
    /// output locations (and hence from the config hash).
    #[serde(skip_serializing)]
    pub out_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            preset: presets::CANTILEVER.to_string(),
            nelx: 30,
            nely: 60,
            objective: ObjectiveKind::Compliance,
            aggregation_exponent: 10.0,
            volume_fraction: 0.5,
            filter_radius: 2.5,
            sampling: SamplingConfig::default(),
            embedding: EmbeddingMethod::CosineMds,
            hull_resolution: 20,
            contour_bands: 10,
            exec_mode: ExecMode::default(),
            out_dir: None,
        }
    }
}

impl ExperimentConfig {
    /// Builds the problem instance this config describes.
    pub fn build_problem(&self) -> Result<Problem> {
        let objective = ObjectiveSpec::new(self.objective, self.aggregation_exponent)?;
        match self.preset.as_str() {
            s if s == presets::CANTILEVER => presets::cantilever(
                self.nelx,
                self.nely,
                objective,
                self.volume_fraction,
                self.filter_radius,
            ),
            s if s == presets::HEAT_SINK => {
                if self.nelx != self.nely {
                    return Err(Error::Config(format!(
                        "preset {:?} uses a square mesh; nelx = {} != nely = {}",
                        self.preset, self.nelx, self.nely
                    )));
                }
                presets::heat_sink(
                    self.nelx,
                    objective,
                    self.volume_fraction,
                    self.filter_radius,
                )
            }
            other => Err(Error::Config(format!(
                "unknown preset {other:?}; available: {:?}",
                presets::names()
            ))),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.build_problem()?;
        self.sampling.validate()?;
        if self.hull_resolution == 0 {
            return Err(Error::Config("hull-resolution must be >= 1".into()));
        }
        if self.contour_bands == 0 {
            return Err(Error::Config("contour-bands must be >= 1".into()));
        }
        Ok(())
    }

    /// SHA-256 over the canonical JSON form of every semantically meaningful
    /// field (the output directory is excluded). serde_json orders object
    /// keys deterministically, so the hash is stable across runs and across
    /// config file formats.
    pub fn hash(&self) -> Result<String> {
        let mut value = serde_json::to_value(self)?;
        if let Some(map) = value.as_object_mut() {
            map.remove("out-dir");
        }
        let canonical = serde_json::to_string(&value)?;
        let digest = Sha256::digest(canonical.as_bytes());
        Ok(digest.iter().map(|b| format!("{b:02x}")).collect())
    }
}

/// Everything the analysis half of the pipeline produces for a sample list.
pub struct Analysis {
    pub embedding: Embedding2D,
    pub surface: LandscapeSurface,
    pub envelope: LowerHullEnvelope,
    pub index: NonlinearityIndex,
    /// Deterministic jitter was applied to break a collinear embedding.
    pub collinear_jitter_applied: bool,
}

/// Magnitude of the deterministic jitter used to unblock collinear
/// embeddings, and the fixed seed that generates it.
const COLLINEAR_JITTER: f64 = 1e-9;
const COLLINEAR_JITTER_SEED: u64 = 0x6a6974746572;

/// Embedding + surface + envelope + index for an explicit list of samples.
/// Subset analyses (for example leaving out the reference group) reuse this
/// directly.
pub fn analyze_samples(
    samples: &[&Sample],
    method: EmbeddingMethod,
    resolution: usize,
    mode: ExecMode,
) -> Result<Analysis> {
    let designs: Vec<&[f64]> = samples.iter().map(|s| s.design.as_slice()).collect();
    let embedding = match method {
        EmbeddingMethod::CosineMds => {
            let d2 = squared_cosine_distance_matrix(&designs, mode)?;
            classical_mds(&d2)?
        }
        EmbeddingMethod::Pca => pca_embed(&designs)?,
    };
    let clipped: Vec<f64> = samples.iter().map(|s| s.clipped_j).collect();

    let (surface, jittered) = match LandscapeSurface::build(&embedding.coords, &clipped) {
        Ok(s) => (s, false),
        Err(Error::CollinearEmbedding) => {
            let mut rng = ChaCha8Rng::seed_from_u64(COLLINEAR_JITTER_SEED);
            let coords: Vec<[f64; 2]> = embedding
                .coords
                .iter()
                .map(|c| {
                    [
                        c[0] + rng.gen_range(-COLLINEAR_JITTER..COLLINEAR_JITTER),
                        c[1] + rng.gen_range(-COLLINEAR_JITTER..COLLINEAR_JITTER),
                    ]
                })
                .collect();
            (LandscapeSurface::build(&coords, &clipped)?, true)
        }
        Err(e) => return Err(e),
    };
    let envelope = lower_convex_hull(&surface, resolution)?;
    let index = nonlinearity_index(&surface, &envelope)?;
    Ok(Analysis {
        embedding,
        surface,
        envelope,
        index,
        collinear_jitter_applied: jittered,
    })
}

/// Per-stage wall-clock timings, kept out of the deterministic report.
#[derive(Debug, Clone, Serialize)]
#[serde(rename_all = "kebab-case")]
pub struct StageTimings {
    pub sampling_s: f64,
    pub analysis_s: f64,
    pub total_s: f64,
}

/// The persisted summary of one experiment.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub struct IndexReport {
    pub config: ExperimentConfig,
    pub config_hash: String,
    pub nonlinearity_index: f64,
    pub gap_min: f64,
    pub gap_mean: f64,
    pub gap_max: f64,
    pub num_queries: usize,
    pub num_envelope_faces: usize,
    pub flat_envelope_fallback: bool,
    pub num_samples: usize,
    pub num_groups: usize,
    pub reference_group_id: Option<usize>,
    pub aborted_groups: Vec<(usize, String)>,
    pub j_min: f64,
    pub j_max: f64,
    pub constant_objective: bool,
    pub merged_duplicate_samples: usize,
    pub embedding_eigenvalues: [f64; 2],
    pub embedding_stress_residual: f64,
    pub negative_eigenvalue_clamped: bool,
    pub collinear_jitter_applied: bool,
    pub warnings: Vec<String>,
}

/// A finished run: report plus the in-memory stages for further use.
pub struct ExperimentOutcome {
    pub report: IndexReport,
    pub timings: StageTimings,
    pub samples: SampleSet,
    pub analysis: Analysis,
}

/// Runs the full pipeline. Artifacts are written only when the config names
/// an output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<ExperimentOutcome> {
    config.validate()?;
    let problem = config.build_problem()?;
    let total_start = Instant::now();

    let sampling_start = Instant::now();
    let samples = run_sampling(&problem, &config.sampling, config.exec_mode)?;
    let sampling_s = sampling_start.elapsed().as_secs_f64();

    let analysis_start = Instant::now();
    let refs: Vec<&Sample> = samples.samples.iter().collect();
    let analysis = analyze_samples(&refs, config.embedding, config.hull_resolution, config.exec_mode)?;
    let analysis_s = analysis_start.elapsed().as_secs_f64();

    let mut warnings = Vec::new();
    for (gid, msg) in &samples.aborted_groups {
        warnings.push(format!("group {gid} aborted: {msg}"));
    }
    if analysis.surface.constant_objective {
        warnings.push("all clipped objectives equal; surface flattened to 0".into());
    }
    if analysis.embedding.negative_clamped {
        warnings.push("negative Gram eigenvalue clamped during embedding".into());
    }
    if analysis.collinear_jitter_applied {
        warnings.push(format!(
            "collinear embedding jittered deterministically (magnitude {COLLINEAR_JITTER:e})"
        ));
    }

    let report = IndexReport {
        config: config.clone(),
        config_hash: config.hash()?,
        nonlinearity_index: analysis.index.value,
        gap_min: analysis.index.min_gap,
        gap_mean: analysis.index.value,
        gap_max: analysis.index.max_gap,
        num_queries: analysis.index.num_queries,
        num_envelope_faces: analysis.envelope.faces.len(),
        flat_envelope_fallback: analysis.envelope.flat_fallback,
        num_samples: samples.samples.len(),
        num_groups: samples.num_groups,
        reference_group_id: samples.reference_group_id,
        aborted_groups: samples.aborted_groups.clone(),
        j_min: analysis.surface.j_min,
        j_max: analysis.surface.j_max,
        constant_objective: analysis.surface.constant_objective,
        merged_duplicate_samples: analysis.surface.merged_duplicates,
        embedding_eigenvalues: analysis.embedding.eigenvalues,
        embedding_stress_residual: analysis.embedding.stress_residual,
        negative_eigenvalue_clamped: analysis.embedding.negative_clamped,
        collinear_jitter_applied: analysis.collinear_jitter_applied,
        warnings,
    };
    let timings = StageTimings {
        sampling_s,
        analysis_s,
        total_s: total_start.elapsed().as_secs_f64(),
    };

    let outcome = ExperimentOutcome {
        report,
        timings,
        samples,
        analysis,
    };
    if let Some(dir) = &config.out_dir {
        crate::io::write_artifacts(dir, &outcome, config.contour_bands)?;
    }
    Ok(outcome)
}
