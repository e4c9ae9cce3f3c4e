//! Seeded sampling and ranking of small-world ensemble instances.
//!
//! Instance `i` of an ensemble is generated from `mix(master_seed, i)` (see
//! [`crate::rng::mix`]), so a search gives the same report for any number of
//! workers or evaluation order. Instances are scored by the number of DE
//! iterations until the average BER first drops to a target. BP thresholds
//! are computed only for the best-ranked finalists.

use std::cmp::Ordering;

use rayon::prelude::*;

use crate::coupling::{make_regular, sw_rewire, to_base_matrix, CouplingGraph, TrainingAssignment};
use crate::de::{run_de, DeConfig, MmseEval, SystemScenario, DEFAULT_MAX_ITER, DEFAULT_TOL};
use crate::error::{Error, Result};
use crate::rng::mix;
use crate::threshold::{
    bp_threshold, ThresholdQuery, ThresholdResult, DEFAULT_ALPHA_HI, DEFAULT_ALPHA_LO,
    DEFAULT_ALPHA_TOL, DEFAULT_SUCCESS_BER, DEFAULT_THRESHOLD_MAX_ITER,
};

pub const DEFAULT_TARGET_BER: f64 = 1e-3;
pub const DEFAULT_FINALISTS: usize = 10;

/// Parameters of an `(L, W, p, c, τ)` small-world ensemble and how many
/// instances to draw from it.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnsembleSpec {
    pub len: usize,
    pub width: usize,
    pub p: f64,
    pub c: usize,
    pub tau: usize,
    pub master_seed: u64,
    pub n_samples: usize,
}

impl EnsembleSpec {
    pub fn validate(&self) -> Result<()> {
        if self.n_samples == 0 {
            return Err(Error::Range("n_samples must be at least 1".into()));
        }
        if !(0.0..=1.0).contains(&self.p) {
            return Err(Error::Range(format!("p={} outside [0, 1]", self.p)));
        }
        if self.tau == 0 || self.tau > self.len {
            return Err(Error::Range(format!(
                "need 1 <= tau <= L (tau={}, L={})",
                self.tau, self.len
            )));
        }
        make_regular(self.len, self.width)?;
        if self.c == 0 || !self.len.is_multiple_of(self.c) {
            return Err(Error::Config(format!(
                "c={} must divide L={}",
                self.c, self.len
            )));
        }
        if self.p > 0.0 && self.c < 2 {
            return Err(Error::Config("rewiring needs at least two clusters".into()));
        }
        if self.c > 1 && self.len / self.c <= 4 * self.width {
            return Err(Error::Config(format!(
                "clusters overlap: L/c = {} must exceed 4W = {}",
                self.len / self.c,
                4 * self.width
            )));
        }
        Ok(())
    }

    pub fn instance_seed(&self, index: usize) -> u64 {
        mix(self.master_seed, index as u64)
    }
}

/// Noise level and loads shared by every instance of a search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScenarioParams {
    pub sigma2: f64,
    pub alpha_tr: f64,
    pub alpha: f64,
}

impl ScenarioParams {
    pub fn with_training(&self, training: TrainingAssignment) -> Result<SystemScenario> {
        SystemScenario::new(self.sigma2, self.alpha_tr, self.alpha, training)
    }
}

/// Draws instance `index` of the ensemble.
pub fn sample_instance(
    spec: &EnsembleSpec,
    index: usize,
) -> Result<(CouplingGraph, TrainingAssignment)> {
    if index >= spec.n_samples {
        return Err(Error::Index {
            index,
            len: spec.n_samples,
        });
    }
    let reg = make_regular(spec.len, spec.width)?;
    sw_rewire(&reg, spec.p, spec.c, spec.tau, spec.instance_seed(index))
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceScore {
    pub index: usize,
    pub instance_seed: u64,
    /// First iteration with average BER at or below the target; `None` when
    /// never reached.
    pub iterations_to_target: Option<usize>,
    pub final_max_ber: f64,
    pub final_avg_ber: f64,
    pub converged: bool,
    pub threshold: Option<ThresholdResult>,
    pub threshold_error: Option<String>,
}

impl InstanceScore {
    /// Ranking order: iterations (unreached last), then final max BER, then
    /// seed.
    pub fn rank_cmp(&self, other: &Self) -> Ordering {
        let key = |s: &Self| s.iterations_to_target.unwrap_or(usize::MAX);
        key(self)
            .cmp(&key(other))
            .then(self.final_max_ber.total_cmp(&other.final_max_ber))
            .then(self.instance_seed.cmp(&other.instance_seed))
    }
}

/// Runs DE on one instance and reports how fast the average BER reaches
/// `target_ber`.
pub fn score_instance(
    g: &CouplingGraph,
    training: &TrainingAssignment,
    params: &ScenarioParams,
    target_ber: f64,
    de: &DeConfig,
) -> Result<InstanceScore> {
    let b = to_base_matrix(g)?;
    let scen = params.with_training(training.clone())?;
    let cfg = DeConfig {
        keep_snapshots: false,
        ..*de
    };
    let traj = run_de(&b, &scen, &cfg)?;
    let last = traj.final_summary();
    Ok(InstanceScore {
        index: 0,
        instance_seed: g.provenance().map_or(0, |p| p.seed),
        iterations_to_target: traj.iterations_to_avg_ber(target_ber),
        final_max_ber: last.max_ber,
        final_avg_ber: last.avg_ber,
        converged: traj.converged,
        threshold: None,
        threshold_error: None,
    })
}

/// Settings of an ensemble search.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchConfig {
    pub target_ber: f64,
    pub de: DeConfig,
    pub with_thresholds: bool,
    pub finalists: usize,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    pub alpha_tol: f64,
    pub success_ber: f64,
    pub threshold_max_iter: usize,
    /// Worker threads; 0 uses rayon's default.
    pub workers: usize,
}

impl Default for SearchConfig {
    fn default() -> Self {
        SearchConfig {
            target_ber: DEFAULT_TARGET_BER,
            de: DeConfig {
                max_iter: DEFAULT_MAX_ITER,
                tol: DEFAULT_TOL,
                mmse: MmseEval::Table,
                keep_snapshots: false,
            },
            with_thresholds: false,
            finalists: DEFAULT_FINALISTS,
            alpha_lo: DEFAULT_ALPHA_LO,
            alpha_hi: DEFAULT_ALPHA_HI,
            alpha_tol: DEFAULT_ALPHA_TOL,
            success_ber: DEFAULT_SUCCESS_BER,
            threshold_max_iter: DEFAULT_THRESHOLD_MAX_ITER,
            workers: 0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct InstanceFailure {
    pub index: usize,
    pub instance_seed: u64,
    pub message: String,
}

#[derive(Debug, Clone)]
pub struct SearchReport {
    pub spec: EnsembleSpec,
    pub params: ScenarioParams,
    pub target_ber: f64,
    pub with_thresholds: bool,
    /// Sorted by [`InstanceScore::rank_cmp`].
    pub ranked: Vec<InstanceScore>,
    pub failures: Vec<InstanceFailure>,
    /// Graph and training set of `ranked[0]`.
    pub best: Option<(CouplingGraph, TrainingAssignment)>,
}

impl SearchReport {
    pub fn best_score(&self) -> Option<&InstanceScore> {
        self.ranked.first()
    }
}

fn threshold_of(
    g: &CouplingGraph,
    training: &TrainingAssignment,
    params: &ScenarioParams,
    cfg: &SearchConfig,
) -> Result<ThresholdResult> {
    let query = ThresholdQuery {
        alpha_lo: cfg.alpha_lo,
        alpha_hi: cfg.alpha_hi,
        alpha_tol: cfg.alpha_tol,
        success_ber: cfg.success_ber,
        max_iter: cfg.threshold_max_iter,
        sir_tol: cfg.de.tol,
        mmse: cfg.de.mmse,
        ..ThresholdQuery::new(
            to_base_matrix(g)?,
            params.sigma2,
            params.alpha_tr,
            training.clone(),
        )
    };
    bp_threshold(&query)
}

/// Scores every instance of the ensemble and ranks them. With
/// `with_thresholds`, the top `finalists` also get a BP threshold.
pub fn ensemble_search(
    spec: &EnsembleSpec,
    params: &ScenarioParams,
    cfg: &SearchConfig,
) -> Result<SearchReport> {
    spec.validate()?;
    params.with_training(TrainingAssignment::empty())?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cfg.workers)
        .build()
        .map_err(|e| Error::Config(format!("cannot start worker pool: {e}")))?;

    let outcomes: Vec<std::result::Result<InstanceScore, InstanceFailure>> = pool.install(|| {
        (0..spec.n_samples)
            .into_par_iter()
            .map(|index| {
                let seed = spec.instance_seed(index);
                sample_instance(spec, index)
                    .and_then(|(g, t)| score_instance(&g, &t, params, cfg.target_ber, &cfg.de))
                    .map(|s| InstanceScore { index, ..s })
                    .map_err(|e| InstanceFailure {
                        index,
                        instance_seed: seed,
                        message: e.to_string(),
                    })
            })
            .collect()
    });

    let mut ranked = Vec::new();
    let mut failures = Vec::new();
    for o in outcomes {
        match o {
            Ok(s) => ranked.push(s),
            Err(f) => failures.push(f),
        }
    }
    ranked.sort_by(InstanceScore::rank_cmp);

    if cfg.with_thresholds {
        let n = cfg.finalists.min(ranked.len());
        let thresholds: Vec<Result<ThresholdResult>> = pool.install(|| {
            ranked[..n]
                .par_iter()
                .map(|s| {
                    let (g, t) = sample_instance(spec, s.index)?;
                    threshold_of(&g, &t, params, cfg)
                })
                .collect()
        });
        for (s, t) in ranked.iter_mut().zip(thresholds) {
            match t {
                Ok(t) => s.threshold = Some(t),
                Err(e) => s.threshold_error = Some(e.to_string()),
            }
        }
    }

    let best = match ranked.first() {
        Some(s) => Some(sample_instance(spec, s.index)?),
        None => None,
    };
    Ok(SearchReport {
        spec: *spec,
        params: *params,
        target_ber: cfg.target_ber,
        with_thresholds: cfg.with_thresholds,
        ranked,
        failures,
        best,
    })
}
