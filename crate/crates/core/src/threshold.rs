//! BP-threshold estimation.
//!
//! The BP threshold is the largest propagation load below which the DE
//! recursion has a unique fixed point. Because DE started from zero SIR is
//! monotone, it settles on the smallest fixed point. Uniqueness therefore
//! shows up as that run reaching the good (low-BER) fixed point. A load
//! counts as a success when the zero-start run converges with every
//! position's BER at or below `success_ber`. The threshold is bracketed by
//! bisection on that predicate.

use crate::coupling::{average_load, BaseMatrix, TrainingAssignment};
use crate::de::{mmse_bpsk, qfunc, run_de, DeConfig, MmseEval, SystemScenario, DEFAULT_TOL};
use crate::error::{Error, Result};

/// Separates the good fixed point (BER ≈ 1.0e-3 to 1.1e-3 at 10 dB) from
/// the bad one (BER above 5e-2).
pub const DEFAULT_SUCCESS_BER: f64 = 1e-2;
pub const DEFAULT_ALPHA_TOL: f64 = 1e-4;
pub const DEFAULT_THRESHOLD_MAX_ITER: usize = 10_000;
pub const DEFAULT_ALPHA_LO: f64 = 1.0;
pub const DEFAULT_ALPHA_HI: f64 = 2.5;

/// Everything a threshold bisection needs except the propagation load.
#[derive(Debug, Clone)]
pub struct ThresholdQuery {
    pub base: BaseMatrix,
    pub sigma2: f64,
    pub alpha_tr: f64,
    pub training: TrainingAssignment,
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    /// Bisection stops once the bracket is at most this wide.
    pub alpha_tol: f64,
    pub success_ber: f64,
    pub max_iter: usize,
    pub sir_tol: f64,
    pub mmse: MmseEval,
}

impl ThresholdQuery {
    /// A query with the default bracket and DE settings.
    pub fn new(base: BaseMatrix, sigma2: f64, alpha_tr: f64, training: TrainingAssignment) -> Self {
        ThresholdQuery {
            base,
            sigma2,
            alpha_tr,
            training,
            alpha_lo: DEFAULT_ALPHA_LO,
            alpha_hi: DEFAULT_ALPHA_HI,
            alpha_tol: DEFAULT_ALPHA_TOL,
            success_ber: DEFAULT_SUCCESS_BER,
            max_iter: DEFAULT_THRESHOLD_MAX_ITER,
            sir_tol: DEFAULT_TOL,
            mmse: MmseEval::Direct,
        }
    }

    /// The single-position system (`B = [[1]]`, no training).
    pub fn uncoupled(sigma2: f64) -> Self {
        // alpha_tr is never used without training rows
        Self::new(
            BaseMatrix::uncoupled(),
            sigma2,
            1.0,
            TrainingAssignment::empty(),
        )
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha_lo > 0.0 && self.alpha_hi.is_finite()) {
            return Err(Error::Range(format!(
                "bracket endpoints must be positive and finite ({}, {})",
                self.alpha_lo, self.alpha_hi
            )));
        }
        if !(self.alpha_tol > 0.0) {
            return Err(Error::Range(format!(
                "alpha_tol must be positive, got {}",
                self.alpha_tol
            )));
        }
        if !(self.success_ber > 0.0 && self.success_ber <= 0.5) {
            return Err(Error::Range(format!(
                "success_ber must lie in (0, 0.5], got {}",
                self.success_ber
            )));
        }
        if self.max_iter == 0 || !(self.sir_tol > 0.0) {
            return Err(Error::Range("max_iter and sir_tol must be positive".into()));
        }
        // Checked before the bracket so a bad noise level reports as such.
        let scen = self.scenario(self.alpha_lo.max(f64::MIN_POSITIVE))?;
        let single_user = qfunc((1.0 / self.sigma2).sqrt());
        if single_user >= self.success_ber {
            return Err(Error::Config(format!(
                "success_ber {} is not above the single-user bound {single_user}",
                self.success_ber
            )));
        }
        if let Some(&l) = scen.training().indices().last() {
            if l >= self.base.len() {
                return Err(Error::Dimension(format!(
                    "training index {l} outside base matrix of order {}",
                    self.base.len()
                )));
            }
        }
        Ok(())
    }

    fn scenario(&self, alpha: f64) -> Result<SystemScenario> {
        SystemScenario::new(self.sigma2, self.alpha_tr, alpha, self.training.clone())
    }

    fn de_config(&self) -> DeConfig {
        DeConfig {
            max_iter: self.max_iter,
            tol: self.sir_tol,
            mmse: self.mmse,
            keep_snapshots: false,
        }
    }
}

/// One DE run made while bracketing.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Evaluation {
    pub alpha: f64,
    pub converged: bool,
    pub max_ber: f64,
    pub iterations: usize,
    pub success: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdResult {
    /// Last load known to succeed (the lower bracket end).
    pub alpha_bp: f64,
    pub bracket: (f64, f64),
    pub de_evaluations: usize,
    pub avg_load_at_threshold: f64,
    pub success_ber: f64,
    pub alpha_tol: f64,
    pub lo_success: bool,
    pub hi_success: bool,
    pub log: Vec<Evaluation>,
}

pub fn evaluate(alpha: f64, query: &ThresholdQuery) -> Result<Evaluation> {
    if !(alpha > 0.0) {
        return Err(Error::Range(format!("alpha must be positive, got {alpha}")));
    }
    let traj = run_de(&query.base, &query.scenario(alpha)?, &query.de_config())?;
    let max_ber = traj.final_max_ber();
    Ok(Evaluation {
        alpha,
        converged: traj.converged,
        max_ber,
        iterations: traj.iterations_run,
        success: traj.converged && max_ber <= query.success_ber,
    })
}

/// True iff zero-start DE at load `alpha` converges with every position's
/// BER at most `success_ber`.
pub fn de_success(alpha: f64, query: &ThresholdQuery) -> Result<bool> {
    Ok(evaluate(alpha, query)?.success)
}

/// Fails if some success was recorded at a load above a recorded failure.
pub fn check_monotone(log: &[Evaluation]) -> Result<()> {
    let top_success = log
        .iter()
        .filter(|e| e.success)
        .map(|e| e.alpha)
        .fold(f64::NEG_INFINITY, f64::max);
    let low_failure = log
        .iter()
        .filter(|e| !e.success)
        .map(|e| e.alpha)
        .fold(f64::INFINITY, f64::min);
    if top_success > low_failure {
        return Err(Error::NonMonotone {
            success_at: top_success,
            failure_at: low_failure,
        });
    }
    Ok(())
}

/// Bisects `[alpha_lo, alpha_hi]` on [`de_success`] until the bracket is at
/// most `alpha_tol` wide.
pub fn bp_threshold(query: &ThresholdQuery) -> Result<ThresholdResult> {
    if !(query.alpha_lo < query.alpha_hi) {
        return Err(Error::Bracket {
            lo: query.alpha_lo,
            lo_success: false,
            hi: query.alpha_hi,
            hi_success: false,
        });
    }
    query.validate()?;

    let mut log = Vec::new();
    let at_lo = evaluate(query.alpha_lo, query)?;
    let at_hi = evaluate(query.alpha_hi, query)?;
    log.push(at_lo);
    log.push(at_hi);
    if !at_lo.success || at_hi.success {
        return Err(Error::Bracket {
            lo: query.alpha_lo,
            lo_success: at_lo.success,
            hi: query.alpha_hi,
            hi_success: at_hi.success,
        });
    }

    let (mut lo, mut hi) = (query.alpha_lo, query.alpha_hi);
    while hi - lo > query.alpha_tol {
        let mid = 0.5 * (lo + hi);
        let e = evaluate(mid, query)?;
        log.push(e);
        check_monotone(&log)?;
        if e.success {
            lo = mid;
        } else {
            hi = mid;
        }
    }

    Ok(ThresholdResult {
        alpha_bp: lo,
        bracket: (lo, hi),
        de_evaluations: log.len(),
        avg_load_at_threshold: average_load(
            query.alpha_tr,
            lo,
            query.training.tau(),
            query.base.len(),
        )?,
        success_ber: query.success_ber,
        alpha_tol: query.alpha_tol,
        lo_success: true,
        hi_success: false,
        log,
    })
}

/// Roots of `f(x) = x (σ² + α mmse(x)) − 1` on `(0, 1/σ²]`, ascending.
///
/// The interval is scanned on a uniform grid of `grid_size` points; each
/// sign change is refined by bisection to width 1e-10.
pub fn scalar_fixed_points(alpha: f64, sigma2: f64, grid_size: usize) -> Result<Vec<f64>> {
    if grid_size < 100 {
        return Err(Error::Range(format!(
            "grid_size must be at least 100, got {grid_size}"
        )));
    }
    if !(alpha > 0.0 && sigma2 > 0.0) {
        return Err(Error::Range(format!(
            "alpha and sigma2 must be positive (alpha={alpha}, sigma2={sigma2})"
        )));
    }
    let f = |x: f64| -> Result<f64> { Ok(x * (sigma2 + alpha * mmse_bpsk(x)?) - 1.0) };
    let x_max = 1.0 / sigma2;
    let step = x_max / grid_size as f64;

    let mut roots = Vec::new();
    let (mut x_prev, mut f_prev) = (0.0, -1.0);
    for k in 1..=grid_size {
        let x = if k == grid_size {
            x_max
        } else {
            k as f64 * step
        };
        let fx = f(x)?;
        if fx == 0.0 {
            roots.push(x);
        } else if f_prev != 0.0 && (f_prev < 0.0) != (fx < 0.0) {
            let (mut lo, mut hi) = (x_prev, x);
            let lo_negative = f_prev < 0.0;
            while hi - lo > 1e-10 {
                let mid = 0.5 * (lo + hi);
                let fm = f(mid)?;
                if fm == 0.0 {
                    lo = mid;
                    hi = mid;
                } else if (fm < 0.0) == lo_negative {
                    lo = mid;
                } else {
                    hi = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        x_prev = x;
        f_prev = fx;
    }
    Ok(roots)
}
