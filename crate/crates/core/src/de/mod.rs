//! Coupled density evolution for large-system BPSK CDMA.
//!
//! With squared coupling weights `b²[l][m]`, per-row loads `α_l` and noise
//! variance `σ²`, one iteration is
//!
//! ```text
//! σ²_l(i)   = σ² + α_l Σ_m b²[l][m] · mmse(sir_m(i−1))
//! sir_m(i)  = Σ_l b²[l][m] / σ²_l(i)
//! ```
//!
//! started from `sir_m(0) = 0`. The BER of position `m` is `Q(√sir_m)`.
//! Both updates are parallel (Jacobi): the row variances use only the
//! previous iteration's SIRs.

mod scalar;

pub use scalar::{
    ber_of, mmse_bpsk, mmse_bpsk_with, qfunc, MmseEval, MmseTable, DEFAULT_RESOLUTION, MMSE_CUTOFF,
    TABLE_POINTS,
};

use crate::coupling::{BaseMatrix, TrainingAssignment};
use crate::error::{Error, Result};

pub const DEFAULT_TOL: f64 = 1e-8;
pub const DEFAULT_MAX_ITER: usize = 1000;

/// Converts an SNR `1/σ²` in dB to the noise variance `σ²`.
pub fn sigma2_from_snr_db(snr_db: f64) -> f64 {
    10f64.powf(-snr_db / 10.0)
}

/// Noise level, loads and training set of one system.
#[derive(Debug, Clone, PartialEq)]
pub struct SystemScenario {
    sigma2: f64,
    alpha_tr: f64,
    alpha: f64,
    training: TrainingAssignment,
}

impl SystemScenario {
    pub fn new(
        sigma2: f64,
        alpha_tr: f64,
        alpha: f64,
        training: TrainingAssignment,
    ) -> Result<Self> {
        if !(sigma2 > 0.0 && sigma2.is_finite()) {
            return Err(Error::Range(format!(
                "noise variance must be positive, got {sigma2}"
            )));
        }
        for (name, v) in [("alpha_tr", alpha_tr), ("alpha", alpha)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::Range(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(SystemScenario {
            sigma2,
            alpha_tr,
            alpha,
            training,
        })
    }

    pub fn from_snr_db(
        snr_db: f64,
        alpha_tr: f64,
        alpha: f64,
        training: TrainingAssignment,
    ) -> Result<Self> {
        Self::new(sigma2_from_snr_db(snr_db), alpha_tr, alpha, training)
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn alpha_tr(&self) -> f64 {
        self.alpha_tr
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn training(&self) -> &TrainingAssignment {
        &self.training
    }

    /// Load of row `l`: `α_tr` on training rows, `α` elsewhere.
    pub fn row_load(&self, factor: usize) -> f64 {
        if self.training.contains(factor) {
            self.alpha_tr
        } else {
            self.alpha
        }
    }

    pub fn with_alpha(&self, alpha: f64) -> Result<Self> {
        Self::new(self.sigma2, self.alpha_tr, alpha, self.training.clone())
    }

    pub fn with_training(&self, training: TrainingAssignment) -> Self {
        SystemScenario {
            training,
            ..self.clone()
        }
    }

    fn row_loads(&self, len: usize) -> Vec<f64> {
        (0..len).map(|l| self.row_load(l)).collect()
    }

    fn check_dims(&self, b: &BaseMatrix) -> Result<()> {
        if let Some(&l) = self.training.indices().last() {
            if l >= b.len() {
                return Err(Error::Dimension(format!(
                    "training index {l} outside base matrix of order {}",
                    b.len()
                )));
            }
        }
        Ok(())
    }
}

/// SIRs and row variances after `iteration` DE steps.
#[derive(Debug, Clone, PartialEq)]
pub struct DeState {
    pub sir: Vec<f64>,
    /// `σ²_l` of the last step. Before the first step it holds `σ²`.
    pub sigma2_rows: Vec<f64>,
    pub iteration: usize,
}

impl DeState {
    /// The all-zero starting point.
    pub fn initial(len: usize, sigma2: f64) -> Self {
        DeState {
            sir: vec![0.0; len],
            sigma2_rows: vec![sigma2; len],
            iteration: 0,
        }
    }
}

// Scratch-buffer form of one step; `mmse` is overwritten.
#[allow(clippy::too_many_arguments)]
fn step_into(
    b: &BaseMatrix,
    sigma2: f64,
    loads: &[f64],
    mmse_eval: MmseEval,
    sir_in: &[f64],
    mmse: &mut [f64],
    sigma2_rows: &mut [f64],
    sir_out: &mut [f64],
) {
    let len = b.len();
    for (v, &s) in mmse.iter_mut().zip(sir_in) {
        *v = mmse_eval.eval(s);
    }
    for l in 0..len {
        let interference: f64 = b.row(l).iter().zip(mmse.iter()).map(|(w, v)| w * v).sum();
        sigma2_rows[l] = sigma2 + loads[l] * interference;
    }
    sir_out.fill(0.0);
    for (l, &s2) in sigma2_rows.iter().enumerate() {
        let inv = 1.0 / s2;
        for (out, w) in sir_out.iter_mut().zip(b.row(l)) {
            *out += w * inv;
        }
    }
}

/// One parallel DE iteration.
pub fn de_step(state: &DeState, b: &BaseMatrix, scen: &SystemScenario) -> Result<DeState> {
    de_step_with(state, b, scen, MmseEval::Direct)
}

pub fn de_step_with(
    state: &DeState,
    b: &BaseMatrix,
    scen: &SystemScenario,
    mmse_eval: MmseEval,
) -> Result<DeState> {
    let len = b.len();
    if state.sir.len() != len || state.sigma2_rows.len() != len {
        return Err(Error::Dimension(format!(
            "state of length {} for base matrix of order {len}",
            state.sir.len()
        )));
    }
    scen.check_dims(b)?;
    if let Some(s) = state.sir.iter().find(|s| !(**s >= 0.0)) {
        return Err(Error::Domain(format!("negative or NaN sir {s} in state")));
    }
    let loads = scen.row_loads(len);
    let mut mmse = vec![0.0; len];
    let mut sigma2_rows = vec![0.0; len];
    let mut sir = vec![0.0; len];
    step_into(
        b,
        scen.sigma2,
        &loads,
        mmse_eval,
        &state.sir,
        &mut mmse,
        &mut sigma2_rows,
        &mut sir,
    );
    Ok(DeState {
        sir,
        sigma2_rows,
        iteration: state.iteration + 1,
    })
}

/// Settings for [`run_de`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DeConfig {
    pub max_iter: usize,
    /// Stop once `max_m |sir_m(i) − sir_m(i−1)| < tol`.
    pub tol: f64,
    pub mmse: MmseEval,
    /// Keep per-position snapshots; summaries are always kept.
    pub keep_snapshots: bool,
}

impl Default for DeConfig {
    fn default() -> Self {
        DeConfig {
            max_iter: DEFAULT_MAX_ITER,
            tol: DEFAULT_TOL,
            mmse: MmseEval::Direct,
            keep_snapshots: true,
        }
    }
}

/// Per-position values after one iteration.
#[derive(Debug, Clone, PartialEq)]
pub struct Snapshot {
    pub sir: Vec<f64>,
    pub ber: Vec<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IterationSummary {
    pub iteration: usize,
    pub avg_ber: f64,
    pub min_ber: f64,
    /// Lowest position attaining `min_ber`.
    pub argmin: usize,
    pub max_ber: f64,
}

impl IterationSummary {
    fn of(iteration: usize, ber: &[f64]) -> Self {
        let mut argmin = 0;
        let mut max_ber = f64::NEG_INFINITY;
        for (m, &v) in ber.iter().enumerate() {
            if v < ber[argmin] {
                argmin = m;
            }
            max_ber = max_ber.max(v);
        }
        IterationSummary {
            iteration,
            avg_ber: ber.iter().sum::<f64>() / ber.len() as f64,
            min_ber: ber[argmin],
            argmin,
            max_ber,
        }
    }
}

/// Record of a DE run. Index `i` of `summaries` (and of `snapshots`, when
/// kept) is iteration `i`; index 0 is the all-zero start.
#[derive(Debug, Clone, PartialEq)]
pub struct DeTrajectory {
    pub snapshots: Vec<Snapshot>,
    pub summaries: Vec<IterationSummary>,
    pub converged: bool,
    pub iterations_run: usize,
    pub final_state: DeState,
    pub final_ber: Vec<f64>,
}

impl DeTrajectory {
    /// First iteration whose average BER is at most `target`.
    pub fn iterations_to_avg_ber(&self, target: f64) -> Option<usize> {
        self.summaries
            .iter()
            .find(|s| s.avg_ber <= target)
            .map(|s| s.iteration)
    }

    pub fn final_summary(&self) -> &IterationSummary {
        self.summaries
            .last()
            .expect("trajectory always has iteration 0")
    }

    pub fn final_max_ber(&self) -> f64 {
        self.final_summary().max_ber
    }
}

fn bers(sir: &[f64]) -> Vec<f64> {
    sir.iter().map(|s| qfunc(s.sqrt())).collect()
}

/// Iterates [`de_step`] from the all-zero SIR state until the SIRs move by
/// less than `tol` or `max_iter` steps have run.
pub fn run_de(b: &BaseMatrix, scen: &SystemScenario, cfg: &DeConfig) -> Result<DeTrajectory> {
    if cfg.max_iter == 0 {
        return Err(Error::Range("max_iter must be at least 1".into()));
    }
    if !(cfg.tol > 0.0) {
        return Err(Error::Range(format!(
            "tol must be positive, got {}",
            cfg.tol
        )));
    }
    scen.check_dims(b)?;
    let len = b.len();
    let loads = scen.row_loads(len);

    let mut sir = vec![0.0; len];
    let mut next = vec![0.0; len];
    let mut mmse = vec![0.0; len];
    let mut sigma2_rows = vec![scen.sigma2; len];

    let ber0 = bers(&sir);
    let mut summaries = vec![IterationSummary::of(0, &ber0)];
    let mut snapshots = Vec::new();
    if cfg.keep_snapshots {
        snapshots.push(Snapshot {
            sir: sir.clone(),
            ber: ber0,
        });
    }

    let mut converged = false;
    let mut iterations = 0;
    while iterations < cfg.max_iter {
        step_into(
            b,
            scen.sigma2,
            &loads,
            cfg.mmse,
            &sir,
            &mut mmse,
            &mut sigma2_rows,
            &mut next,
        );
        iterations += 1;
        let change = sir
            .iter()
            .zip(&next)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        std::mem::swap(&mut sir, &mut next);
        let ber = bers(&sir);
        summaries.push(IterationSummary::of(iterations, &ber));
        if cfg.keep_snapshots {
            snapshots.push(Snapshot {
                sir: sir.clone(),
                ber,
            });
        }
        if change < cfg.tol {
            converged = true;
            break;
        }
    }

    let final_ber = bers(&sir);
    Ok(DeTrajectory {
        snapshots,
        summaries,
        converged,
        iterations_run: iterations,
        final_state: DeState {
            sir,
            sigma2_rows,
            iteration: iterations,
        },
        final_ber,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coupling::{make_regular, to_base_matrix};

    fn uncoupled(snr_db: f64, alpha: f64) -> (BaseMatrix, SystemScenario) {
        (
            BaseMatrix::uncoupled(),
            SystemScenario::from_snr_db(snr_db, alpha, alpha, TrainingAssignment::empty()).unwrap(),
        )
    }

    /// Eqs. written out directly for a dense matrix, for cross-checking.
    fn reference_step(b: &[Vec<f64>], sigma2: f64, loads: &[f64], sir: &[f64]) -> Vec<f64> {
        let len = b.len();
        let rows: Vec<f64> = (0..len)
            .map(|l| {
                sigma2
                    + loads[l]
                        * (0..len)
                            .map(|m| b[l][m] * mmse_bpsk(sir[m]).unwrap())
                            .sum::<f64>()
            })
            .collect();
        (0..len)
            .map(|m| (0..len).map(|l| b[l][m] / rows[l]).sum())
            .collect()
    }

    #[test]
    fn single_position_first_step() {
        let b = BaseMatrix::uncoupled();
        let scen = SystemScenario::new(0.1, 1.73, 1.73, TrainingAssignment::empty()).unwrap();
        let s1 = de_step(&DeState::initial(1, 0.1), &b, &scen).unwrap();
        assert!((s1.sigma2_rows[0] - 1.83).abs() < 1e-15);
        assert!((s1.sir[0] - 1.0 / 1.83).abs() < 1e-15);
        assert!((s1.sir[0] - 0.546448).abs() < 1e-6);
        assert_eq!(s1.iteration, 1);
    }

    #[test]
    fn step_matches_reference_and_is_monotone() {
        let b = to_base_matrix(&make_regular(16, 2).unwrap()).unwrap();
        let dense: Vec<Vec<f64>> = (0..16).map(|l| b.row(l).to_vec()).collect();
        let training = TrainingAssignment::new(vec![0, 1, 2], 16).unwrap();
        let scen = SystemScenario::new(0.1, 1.2, 1.9, training).unwrap();
        let loads: Vec<f64> = (0..16).map(|l| scen.row_load(l)).collect();
        let s0 = DeState::initial(16, 0.1);
        let s1 = de_step(&s0, &b, &scen).unwrap();
        let s2 = de_step(&s1, &b, &scen).unwrap();
        let r1 = reference_step(&dense, 0.1, &loads, &s0.sir);
        let r2 = reference_step(&dense, 0.1, &loads, &r1);
        for m in 0..16 {
            assert!((s1.sir[m] - r1[m]).abs() < 1e-13);
            assert!((s2.sir[m] - r2[m]).abs() < 1e-13);
            assert!(s2.sir[m] >= s1.sir[m]);
            assert!(s2.sir[m] <= 1.0 / 0.1 + 1e-12);
        }
    }

    #[test]
    fn dimension_mismatch() {
        let b = BaseMatrix::uncoupled();
        let scen = SystemScenario::new(0.1, 1.0, 1.0, TrainingAssignment::empty()).unwrap();
        assert!(matches!(
            de_step(&DeState::initial(2, 0.1), &b, &scen),
            Err(Error::Dimension(_))
        ));
        let scen = scen.with_training(TrainingAssignment::new(vec![3], 4).unwrap());
        assert!(matches!(
            run_de(&b, &scen, &DeConfig::default()),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn scenario_validation() {
        assert!(SystemScenario::new(0.0, 1.0, 1.0, TrainingAssignment::empty()).is_err());
        assert!(SystemScenario::new(0.1, -1.0, 1.0, TrainingAssignment::empty()).is_err());
        assert!(SystemScenario::new(0.1, 1.0, f64::NAN, TrainingAssignment::empty()).is_err());
        assert!((sigma2_from_snr_db(10.0) - 0.1).abs() < 1e-16);
    }

    /// Good fixed point of `x = 1/(σ² + α mmse(x))` by bisection on
    /// `[x_lo, 1/σ²]`, where `x_lo` lies above every other root.
    fn good_fixed_point(sigma2: f64, alpha: f64, x_lo: f64) -> f64 {
        let f = |x: f64| x * (sigma2 + alpha * mmse_bpsk(x).unwrap()) - 1.0;
        let (mut lo, mut hi) = (x_lo, 1.0 / sigma2);
        assert!(f(lo) < 0.0 && f(hi) >= 0.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) < 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        0.5 * (lo + hi)
    }

    #[test]
    fn uncoupled_below_threshold_reaches_good_fixed_point() {
        let (b, scen) = uncoupled(10.0, 1.5);
        let traj = run_de(&b, &scen, &DeConfig::default()).unwrap();
        assert!(traj.converged);
        let fp = good_fixed_point(0.1, 1.5, 5.0);
        assert!((traj.final_state.sir[0] - fp).abs() < 1e-6);
        assert!(traj.final_ber[0] < 1e-3, "{}", traj.final_ber[0]);
    }

    #[test]
    fn uncoupled_above_threshold_sticks() {
        let (b, scen) = uncoupled(10.0, 1.9);
        let traj = run_de(&b, &scen, &DeConfig::default()).unwrap();
        assert!(traj.converged);
        assert!(traj.final_ber[0] > 1e-2, "{}", traj.final_ber[0]);
    }

    #[test]
    fn trajectory_bookkeeping() {
        let b = to_base_matrix(&make_regular(12, 1).unwrap()).unwrap();
        let scen = SystemScenario::new(
            0.1,
            1.0,
            1.5,
            TrainingAssignment::new(vec![0, 6], 12).unwrap(),
        )
        .unwrap();
        let traj = run_de(&b, &scen, &DeConfig::default()).unwrap();
        assert_eq!(traj.summaries.len(), traj.iterations_run + 1);
        assert_eq!(traj.snapshots.len(), traj.iterations_run + 1);
        assert_eq!(traj.summaries[0].avg_ber, 0.5);
        assert_eq!(traj.iterations_to_avg_ber(0.5), Some(0));
        for (snap, sum) in traj.snapshots.iter().zip(&traj.summaries) {
            for (s, e) in snap.sir.iter().zip(&snap.ber) {
                assert!((qfunc(s.sqrt()) - e).abs() <= 1e-14);
            }
            let mean = snap.ber.iter().sum::<f64>() / 12.0;
            assert!((mean - sum.avg_ber).abs() < 1e-15);
            assert_eq!(snap.ber[sum.argmin], sum.min_ber);
        }
        let lean = run_de(
            &b,
            &scen,
            &DeConfig {
                keep_snapshots: false,
                ..DeConfig::default()
            },
        )
        .unwrap();
        assert!(lean.snapshots.is_empty());
        assert_eq!(lean.summaries, traj.summaries);
    }

    #[test]
    fn max_iter_cap_reports_not_converged() {
        let (b, scen) = uncoupled(10.0, 1.5);
        let traj = run_de(
            &b,
            &scen,
            &DeConfig {
                max_iter: 3,
                ..DeConfig::default()
            },
        )
        .unwrap();
        assert!(!traj.converged);
        assert_eq!(traj.iterations_run, 3);
        assert!(run_de(
            &b,
            &scen,
            &DeConfig {
                max_iter: 0,
                ..DeConfig::default()
            }
        )
        .is_err());
    }

    #[test]
    fn table_and_direct_runs_agree() {
        let b = to_base_matrix(&make_regular(24, 2).unwrap()).unwrap();
        let scen = SystemScenario::from_snr_db(
            10.0,
            1.45,
            1.9,
            TrainingAssignment::new(vec![0, 1, 2, 3, 12, 13], 24).unwrap(),
        )
        .unwrap();
        let direct = run_de(&b, &scen, &DeConfig::default()).unwrap();
        let table = run_de(
            &b,
            &scen,
            &DeConfig {
                mmse: MmseEval::Table,
                ..DeConfig::default()
            },
        )
        .unwrap();
        for (a, t) in direct.final_ber.iter().zip(&table.final_ber) {
            assert!((a - t).abs() < 1e-8);
        }
    }
}
