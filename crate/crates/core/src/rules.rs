//! Regularization-parameter choice by geometric ladder search.
//!
//! Both rules walk `α ← α·factor` and stop on the first rung that fails their
//! acceptance test; the previous rung is returned together with the full
//! trace of evaluated rungs.

use crate::error::{Error, Result};
use crate::inversion::{Reconstruction, ResidualNorm, TikhonovSolver};
use crate::kernel::KernelMatrix;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderConfig {
    pub alpha_start: f64,
    pub factor: f64,
    pub max_steps: usize,
}

impl LadderConfig {
    pub const DEFAULT_MAX_STEPS: usize = 200;

    pub fn new(alpha_start: f64, factor: f64, max_steps: usize) -> Result<Self> {
        if !(alpha_start > 0.0 && alpha_start.is_finite()) {
            return Err(Error::invalid(
                "alpha_start",
                format!("must be positive, got {alpha_start}"),
            ));
        }
        if !(factor > 0.0 && factor.is_finite()) || factor == 1.0 {
            return Err(Error::invalid(
                "factor",
                format!("must be positive and != 1, got {factor}"),
            ));
        }
        if max_steps == 0 {
            return Err(Error::invalid("max_steps", "must be at least 1"));
        }
        Ok(Self {
            alpha_start,
            factor,
            max_steps,
        })
    }

    /// Start at 1 and halve.
    pub fn descent() -> Self {
        Self {
            alpha_start: 1.0,
            factor: 0.5,
            max_steps: Self::DEFAULT_MAX_STEPS,
        }
    }

    /// Start at 1e-14 and double.
    pub fn ascent() -> Self {
        Self {
            alpha_start: 1e-14,
            factor: 2.0,
            max_steps: Self::DEFAULT_MAX_STEPS,
        }
    }

    fn require_descent(&self) -> Result<()> {
        if self.factor < 1.0 {
            Ok(())
        } else {
            Err(Error::invalid(
                "factor",
                format!("descent ladder needs factor < 1, got {}", self.factor),
            ))
        }
    }

    fn require_ascent(&self) -> Result<()> {
        if self.factor > 1.0 {
            Ok(())
        } else {
            Err(Error::invalid(
                "factor",
                format!("ascent ladder needs factor > 1, got {}", self.factor),
            ))
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LadderStep {
    pub alpha: f64,
    pub objective: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum RuleStatus {
    /// Stopped on the first rung failing the acceptance test.
    Converged,
    /// Ran out of steps while every rung was still accepted.
    MaxStepsReached,
    /// The discrepancy condition already failed at the starting rung.
    StartViolatesDiscrepancy,
}

impl RuleStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RuleStatus::Converged => "converged",
            RuleStatus::MaxStepsReached => "max-steps",
            RuleStatus::StartViolatesDiscrepancy => "start-violates",
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RuleTrace {
    pub steps: Vec<LadderStep>,
    pub chosen_alpha: f64,
    pub chosen_reconstruction: Reconstruction,
    pub status: RuleStatus,
    /// Objective at the chosen rung (squared error or residual norm).
    pub chosen_objective: f64,
}

fn squared_error(f_true: &[f64], f: &[f64]) -> f64 {
    f_true.iter().zip(f).map(|(a, b)| (a - b).powi(2)).sum()
}

/// Descends the ladder while `Σ_j (f_true,j − f_α,j)²` strictly decreases.
///
/// Only usable in simulation, where the true source is known.
pub fn oracle_distance_rule(k: &KernelMatrix, u: &[f64], f_true: &[f64], ladder: &LadderConfig) -> Result<RuleTrace> {
    ladder.require_descent()?;
    if f_true.len() != k.cols() {
        return Err(Error::DimensionMismatch {
            expected: k.cols(),
            found: f_true.len(),
            context: "true source vs kernel columns",
        });
    }
    let solver = TikhonovSolver::new(k)?;
    let mut best = solver.solve(u, ladder.alpha_start)?;
    let mut best_error = squared_error(f_true, best.values());
    let mut steps = vec![LadderStep {
        alpha: ladder.alpha_start,
        objective: best_error,
    }];
    let mut status = RuleStatus::MaxStepsReached;
    while steps.len() < ladder.max_steps {
        let alpha = best.alpha() * ladder.factor;
        let candidate = solver.solve(u, alpha)?;
        let error = squared_error(f_true, candidate.values());
        steps.push(LadderStep {
            alpha,
            objective: error,
        });
        if error < best_error {
            best = candidate;
            best_error = error;
        } else {
            status = RuleStatus::Converged;
            break;
        }
    }
    Ok(RuleTrace {
        steps,
        chosen_alpha: best.alpha(),
        chosen_reconstruction: best,
        status,
        chosen_objective: best_error,
    })
}

/// How the noise bound is turned into a residual threshold.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DiscrepancyCriterion {
    pub norm: ResidualNorm,
    /// Safety multiplier `τ ≥ 1`.
    pub tau: f64,
    /// Compare the raw norm against `δ` without rescaling by `√N`.
    pub unscaled: bool,
}

impl Default for DiscrepancyCriterion {
    fn default() -> Self {
        Self {
            norm: ResidualNorm::Rms,
            tau: 1.0,
            unscaled: false,
        }
    }
}

impl DiscrepancyCriterion {
    pub fn new(norm: ResidualNorm, tau: f64) -> Self {
        Self {
            norm,
            tau,
            unscaled: false,
        }
    }

    /// Literal `‖K f h_s − u'‖₂ < δ`.
    pub fn paper_exact() -> Self {
        Self {
            norm: ResidualNorm::Euclidean,
            tau: 1.0,
            unscaled: true,
        }
    }

    /// Residual level implied by a componentwise bound `δ` on `count` data.
    pub fn threshold(&self, delta: f64, count: usize) -> f64 {
        let base = match self.norm {
            ResidualNorm::Euclidean if !self.unscaled => delta * (count as f64).sqrt(),
            _ => delta,
        };
        self.tau * base
    }
}

/// Ascends the ladder while the residual stays strictly below the threshold
/// and returns the last rung that satisfied it.
pub fn discrepancy_rule(
    k: &KernelMatrix,
    u: &[f64],
    delta: f64,
    criterion: &DiscrepancyCriterion,
    ladder: &LadderConfig,
) -> Result<RuleTrace> {
    ladder.require_ascent()?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(Error::invalid("delta", format!("must be positive, got {delta}")));
    }
    if !(criterion.tau >= 1.0) {
        return Err(Error::invalid("tau", format!("must be >= 1, got {}", criterion.tau)));
    }
    let threshold = criterion.threshold(delta, u.len());
    let solver = TikhonovSolver::new(k)?;
    let residual =
        |r: &Reconstruction| -> Result<f64> { crate::inversion::residual_norm(k, r.values(), u, criterion.norm) };

    let mut accepted = solver.solve(u, ladder.alpha_start)?;
    let mut accepted_residual = residual(&accepted)?;
    let mut steps = vec![LadderStep {
        alpha: ladder.alpha_start,
        objective: accepted_residual,
    }];
    if accepted_residual >= threshold {
        return Ok(RuleTrace {
            steps,
            chosen_alpha: ladder.alpha_start,
            chosen_reconstruction: accepted,
            status: RuleStatus::StartViolatesDiscrepancy,
            chosen_objective: accepted_residual,
        });
    }
    let mut status = RuleStatus::MaxStepsReached;
    while steps.len() < ladder.max_steps {
        let alpha = accepted.alpha() * ladder.factor;
        let candidate = solver.solve(u, alpha)?;
        let r = residual(&candidate)?;
        steps.push(LadderStep { alpha, objective: r });
        if r < threshold {
            accepted = candidate;
            accepted_residual = r;
        } else {
            status = RuleStatus::Converged;
            break;
        }
    }
    Ok(RuleTrace {
        steps,
        chosen_alpha: accepted.alpha(),
        chosen_reconstruction: accepted,
        status,
        chosen_objective: accepted_residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inversion::predict;
    use crate::model::{KernelMode, SchemeKind};
    use nalgebra::DMatrix;

    fn scalar() -> KernelMatrix {
        KernelMatrix::from_parts(
            DMatrix::from_element(1, 1, 1.0),
            1.0,
            1.0,
            SchemeKind::FixedTime,
            KernelMode::Physical,
        )
        .unwrap()
    }

    #[test]
    fn ladder_validation() {
        assert!(LadderConfig::new(0.0, 0.5, 10).is_err());
        assert!(LadderConfig::new(1.0, 1.0, 10).is_err());
        assert!(LadderConfig::new(1.0, -2.0, 10).is_err());
        assert!(LadderConfig::new(1.0, 0.5, 0).is_err());
        let k = scalar();
        assert!(oracle_distance_rule(&k, &[1.0], &[1.0], &LadderConfig::ascent()).is_err());
        assert!(discrepancy_rule(
            &k,
            &[1.0],
            0.1,
            &DiscrepancyCriterion::default(),
            &LadderConfig::descent()
        )
        .is_err());
    }

    #[test]
    fn oracle_rule_on_noise_free_scalar_runs_to_floor() {
        // E(α) = (α/(1+α))² keeps shrinking as α halves; the step budget keeps
        // α well above the resolution of 1 + α
        let ladder = LadderConfig::new(1.0, 0.5, 40).unwrap();
        let trace = oracle_distance_rule(&scalar(), &[1.0], &[1.0], &ladder).unwrap();
        assert_eq!(trace.status, RuleStatus::MaxStepsReached);
        assert_eq!(trace.steps.len(), 40);
        assert_eq!(trace.chosen_alpha, 0.5f64.powi(39));
        for s in &trace.steps {
            let distance = s.alpha / (1.0 + s.alpha);
            assert!((s.objective.sqrt() - distance).abs() <= 1e-15);
        }
    }

    #[test]
    fn oracle_rule_reaches_exact_source() {
        let entries = DMatrix::from_fn(4, 4, |i, j| if i == j { 2.0 } else { 0.3 });
        let k = KernelMatrix::from_parts(entries, 0.25, 0.25, SchemeKind::FixedTime, KernelMode::Physical).unwrap();
        let f_true = [0.0, 1.0, 1.0, 0.0];
        let u = predict(&k, &f_true).unwrap();
        let ladder = LadderConfig::new(1.0, 0.5, 80).unwrap();
        let trace = oracle_distance_rule(&k, &u, &f_true, &ladder).unwrap();
        assert!(trace.chosen_objective < 1e-20, "{}", trace.chosen_objective);
    }

    #[test]
    fn oracle_rule_returns_trace_minimum() {
        let entries = DMatrix::from_fn(5, 5, |i, j| (-((i as f64 - j as f64).powi(2))).exp());
        let k = KernelMatrix::from_parts(entries, 0.2, 0.2, SchemeKind::FixedTime, KernelMode::Physical).unwrap();
        let f_true = [0.0, 1.0, 1.0, 1.0, 0.0];
        let mut u = predict(&k, &f_true).unwrap();
        u[2] += 1e-3;
        let trace = oracle_distance_rule(&k, &u, &f_true, &LadderConfig::descent()).unwrap();
        assert_eq!(trace.status, RuleStatus::Converged);
        assert!(trace.steps.iter().all(|s| trace.chosen_objective <= s.objective));
        assert!(trace.steps.iter().any(|s| s.alpha == trace.chosen_alpha));
    }

    #[test]
    fn discrepancy_scalar_closed_form() {
        let trace = discrepancy_rule(
            &scalar(),
            &[1.0],
            0.25,
            &DiscrepancyCriterion::new(ResidualNorm::Euclidean, 1.0),
            &LadderConfig::ascent(),
        )
        .unwrap();
        // largest 1e-14·2^m below 1/3
        let mut expected = 1e-14;
        while expected * 2.0 < 1.0 / 3.0 {
            expected *= 2.0;
        }
        assert_eq!(trace.status, RuleStatus::Converged);
        assert!((trace.chosen_alpha - expected).abs() <= 1e-12 * expected);
        assert!(trace.chosen_objective < 0.25);
        assert!(trace.steps.last().unwrap().objective >= 0.25);
    }

    #[test]
    fn discrepancy_flags_unreachable_threshold() {
        let trace = discrepancy_rule(
            &scalar(),
            &[1.0],
            1e-20,
            &DiscrepancyCriterion::new(ResidualNorm::Max, 1.0),
            &LadderConfig::new(1.0, 2.0, 10).unwrap(),
        )
        .unwrap();
        assert_eq!(trace.status, RuleStatus::StartViolatesDiscrepancy);
        assert_eq!(trace.chosen_alpha, 1.0);
        assert_eq!(trace.steps.len(), 1);
    }

    #[test]
    fn discrepancy_rejects_bad_inputs() {
        let k = scalar();
        let ladder = LadderConfig::ascent();
        assert!(discrepancy_rule(&k, &[1.0], 0.0, &DiscrepancyCriterion::default(), &ladder).is_err());
        let loose = DiscrepancyCriterion::new(ResidualNorm::Rms, 0.5);
        assert!(discrepancy_rule(&k, &[1.0], 0.1, &loose, &ladder).is_err());
    }

    #[test]
    fn thresholds_scale_consistently() {
        let n = 100;
        assert_eq!(
            DiscrepancyCriterion::new(ResidualNorm::Max, 1.0).threshold(1e-4, n),
            1e-4
        );
        assert_eq!(
            DiscrepancyCriterion::new(ResidualNorm::Rms, 2.0).threshold(1e-4, n),
            2e-4
        );
        assert!((DiscrepancyCriterion::new(ResidualNorm::Euclidean, 1.0).threshold(1e-4, n) - 1e-3).abs() < 1e-18);
        assert_eq!(DiscrepancyCriterion::paper_exact().threshold(1e-4, n), 1e-4);
    }
}
