//! Crank–Nicolson reference solver, independent of the sine series.

use crate::error::{Error, Result};
use crate::model::{ProblemConfig, SourceFunction};
use crate::quadrature::{integrate, QuadratureOptions};

/// Interior node positions and temperatures of a finite-difference solve.
#[derive(Clone, Debug, PartialEq)]
pub struct FdField {
    pub positions: Vec<f64>,
    pub values: Vec<f64>,
}

impl FdField {
    /// Linear interpolation between interior nodes (zero at the walls).
    pub fn value_at(&self, x: f64, length: f64) -> f64 {
        let m = self.positions.len();
        let h = length / (m as f64 + 1.0);
        let pos = x / h;
        let i = pos.floor() as isize;
        let w = pos - i as f64;
        let at = |j: isize| {
            if j <= 0 || j as usize > m {
                0.0
            } else {
                self.values[j as usize - 1]
            }
        };
        (1.0 - w) * at(i) + w * at(i + 1)
    }
}

/// Solves `u_t = a² u_xx + f` with zero walls and zero start up to time `t` on
/// `nodes` uniformly spaced points (walls included).
///
/// The source enters as cell averages over `[x_i − h/2, x_i + h/2]`, which keeps
/// jumps in `f` from degrading the scheme to first order. If `t` is not a
/// multiple of `dt` the last step is shortened.
pub fn fd_reference(f: &SourceFunction, config: &ProblemConfig, t: f64, nodes: usize, dt: f64) -> Result<FdField> {
    if nodes < 3 {
        return Err(Error::invalid("M", format!("need at least 3 nodes, got {nodes}")));
    }
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be positive, got {dt}")));
    }
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::invalid("t", format!("must be non-negative, got {t}")));
    }
    let l = config.length();
    let interior = nodes - 2;
    let h = l / (nodes as f64 - 1.0);
    let positions: Vec<f64> = (1..=interior).map(|i| i as f64 * h).collect();

    let opts = QuadratureOptions {
        abs_tol: 1e-13,
        ..Default::default()
    };
    let source = positions
        .iter()
        .map(|&x| {
            let lo = (x - 0.5 * h).max(0.0);
            let hi = (x + 0.5 * h).min(l);
            integrate(|s| f.evaluate_on(s, l), lo, hi, opts).map(|v| v / h)
        })
        .collect::<Result<Vec<_>>>()?;

    let mut u = vec![0.0; interior];
    let full_steps = (t / dt * (1.0 + 1e-12)).floor() as usize;
    let remainder = t - full_steps as f64 * dt;
    let mut stepper = CrankNicolson::new(interior, config.diffusion().powi(2) * dt / (h * h), dt);
    for _ in 0..full_steps {
        stepper.advance(&mut u, &source)?;
    }
    if remainder > 1e-12 * dt {
        let mut last = CrankNicolson::new(interior, config.diffusion().powi(2) * remainder / (h * h), remainder);
        last.advance(&mut u, &source)?;
    }
    Ok(FdField { positions, values: u })
}

struct CrankNicolson {
    ratio: f64,
    dt: f64,
    rhs: Vec<f64>,
    scratch: Vec<f64>,
}

impl CrankNicolson {
    fn new(size: usize, ratio: f64, dt: f64) -> Self {
        Self {
            ratio,
            dt,
            rhs: vec![0.0; size],
            scratch: vec![0.0; size],
        }
    }

    fn advance(&mut self, u: &mut [f64], source: &[f64]) -> Result<()> {
        let n = u.len();
        let r = self.ratio;
        for i in 0..n {
            let left = if i > 0 { u[i - 1] } else { 0.0 };
            let right = if i + 1 < n { u[i + 1] } else { 0.0 };
            self.rhs[i] = (1.0 - r) * u[i] + 0.5 * r * (left + right) + self.dt * source[i];
        }
        // (1 + r) on the diagonal, -r/2 off it
        solve_tridiagonal(-0.5 * r, 1.0 + r, -0.5 * r, &mut self.rhs, &mut self.scratch)?;
        u.copy_from_slice(&self.rhs);
        Ok(())
    }
}

/// Thomas algorithm for a constant-coefficient tridiagonal system; the
/// solution overwrites `rhs`.
fn solve_tridiagonal(lower: f64, diag: f64, upper: f64, rhs: &mut [f64], c: &mut [f64]) -> Result<()> {
    let n = rhs.len();
    if n == 0 {
        return Ok(());
    }
    let mut pivot = diag;
    if pivot == 0.0 {
        return Err(Error::Internal("zero pivot in tridiagonal solve".into()));
    }
    c[0] = upper / pivot;
    rhs[0] /= pivot;
    for i in 1..n {
        pivot = diag - lower * c[i - 1];
        if pivot == 0.0 || !pivot.is_finite() {
            return Err(Error::Internal("zero pivot in tridiagonal solve".into()));
        }
        c[i] = upper / pivot;
        rhs[i] = (rhs[i] - lower * rhs[i - 1]) / pivot;
    }
    for i in (0..n - 1).rev() {
        rhs[i] -= c[i] * rhs[i + 1];
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::direct::{evaluate_field, sine_coefficients};
    use crate::model::box_source;

    #[test]
    fn tridiagonal_against_dense_product() {
        let (lo, d, up) = (-0.3, 2.0, -0.7);
        let x = [1.0, -2.0, 0.5, 3.0, 0.25];
        let n = x.len();
        let mut b: Vec<f64> = (0..n)
            .map(|i| d * x[i] + if i > 0 { lo * x[i - 1] } else { 0.0 } + if i + 1 < n { up * x[i + 1] } else { 0.0 })
            .collect();
        let mut scratch = vec![0.0; n];
        solve_tridiagonal(lo, d, up, &mut b, &mut scratch).unwrap();
        for (a, e) in b.iter().zip(x) {
            assert!((a - e).abs() < 1e-14);
        }
    }

    #[test]
    fn zero_source_stays_cold() {
        let field = fd_reference(&SourceFunction::zero(), &ProblemConfig::default(), 0.05, 41, 1e-3).unwrap();
        assert_eq!(field.values.len(), 39);
        assert!(field.values.iter().all(|&u| u == 0.0));
    }

    #[test]
    fn rejects_bad_discretization() {
        let c = ProblemConfig::default();
        assert!(fd_reference(&box_source(), &c, 0.1, 2, 1e-3).is_err());
        assert!(fd_reference(&box_source(), &c, 0.1, 11, 0.0).is_err());
    }

    #[test]
    fn agrees_with_series_at_moderate_time() {
        let config = ProblemConfig::default();
        let coeffs = sine_coefficients(&box_source(), &config).unwrap();
        let field = fd_reference(&box_source(), &config, 0.4, 401, 1e-4).unwrap();
        let worst = field
            .positions
            .iter()
            .zip(&field.values)
            .map(|(&x, &u)| (u - evaluate_field(&coeffs, x, 0.4, &config)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-4, "max deviation {worst:e}");
    }

    #[test]
    fn partial_last_step() {
        let config = ProblemConfig::default();
        let a = fd_reference(&box_source(), &config, 0.0105, 101, 1e-3).unwrap();
        let b = fd_reference(&box_source(), &config, 0.0105, 101, 5e-4).unwrap();
        let diff = a
            .values
            .iter()
            .zip(&b.values)
            .map(|(x, y)| (x - y).abs())
            .fold(0.0, f64::max);
        assert!(diff < 1e-5);
    }
}
