#![allow(dead_code)]

pub mod checks;

use scde::coupling::{
    cluster_of, make_regular, to_base_matrix, BaseMatrix, Side, TrainingAssignment,
};
use scde::de::{run_de, sigma2_from_snr_db, DeConfig, DeTrajectory, SystemScenario};
use scde::search::{EnsembleSpec, ScenarioParams, SearchConfig};

pub const SNR_DB: f64 = 10.0;
pub const ALPHA_TR: f64 = 1.45;
pub const LEN: usize = 64;
pub const WIDTH: usize = 2;
/// Hand-picked training rows of the regular baseline.
pub const REGULAR_TRAINING: [usize; 14] = [61, 62, 63, 0, 1, 2, 3, 29, 30, 31, 32, 33, 34, 35];

pub fn regular() -> (BaseMatrix, TrainingAssignment) {
    let b = to_base_matrix(&make_regular(LEN, WIDTH).unwrap()).unwrap();
    let t = TrainingAssignment::new(REGULAR_TRAINING.to_vec(), LEN).unwrap();
    (b, t)
}

pub fn run(b: &BaseMatrix, training: &TrainingAssignment, alpha: f64, keep: bool) -> DeTrajectory {
    let scen = SystemScenario::from_snr_db(SNR_DB, ALPHA_TR, alpha, training.clone()).unwrap();
    let cfg = DeConfig {
        keep_snapshots: keep,
        ..DeConfig::default()
    };
    run_de(b, &scen, &cfg).unwrap()
}

pub fn sw_spec(n_samples: usize) -> EnsembleSpec {
    EnsembleSpec {
        len: LEN,
        width: WIDTH,
        p: 0.1,
        c: 2,
        tau: 14,
        master_seed: 1,
        n_samples,
    }
}

pub fn params(alpha: f64) -> ScenarioParams {
    ScenarioParams {
        sigma2: sigma2_from_snr_db(SNR_DB),
        alpha_tr: ALPHA_TR,
        alpha,
    }
}

pub fn search_config(target_ber: f64) -> SearchConfig {
    SearchConfig {
        target_ber,
        with_thresholds: true,
        ..SearchConfig::default()
    }
}

/// Variable positions inside the two clusters.
pub fn cluster_positions() -> Vec<usize> {
    let mut v: Vec<usize> = [0, LEN / 2]
        .iter()
        .flat_map(|&x| cluster_of(x, Side::Variable, WIDTH, LEN).unwrap())
        .collect();
    v.sort_unstable();
    v
}
