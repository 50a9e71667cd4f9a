//! Naive and Tikhonov-regularized solution of the discretized source equation.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::kernel::KernelMatrix;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    Naive,
    Tikhonov,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Naive => "naive",
            Method::Tikhonov => "tikhonov",
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum ResidualNorm {
    Euclidean,
    #[default]
    Rms,
    Max,
}

impl ResidualNorm {
    pub fn as_str(self) -> &'static str {
        match self {
            ResidualNorm::Euclidean => "euclidean",
            ResidualNorm::Rms => "rms",
            ResidualNorm::Max => "max",
        }
    }

    pub fn apply(self, r: &[f64]) -> f64 {
        let sum_sq: f64 = r.iter().map(|v| v * v).sum();
        match self {
            ResidualNorm::Euclidean => sum_sq.sqrt(),
            ResidualNorm::Rms => (sum_sq / r.len().max(1) as f64).sqrt(),
            ResidualNorm::Max => r.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Diagnostics {
    /// Spectral condition number of `K` (`+inf` when rank deficient).
    pub condition: f64,
    /// Euclidean norm of `K f h_s − u`.
    pub residual_norm: f64,
    /// Set when the solve hit numerical singularity; the values are then
    /// not trustworthy (or NaN if no factorization was possible).
    pub singular: bool,
}

/// A source estimate on the reconstruction grid.
#[derive(Clone, Debug, PartialEq)]
pub struct Reconstruction {
    values: Vec<f64>,
    alpha: f64,
    method: Method,
    diagnostics: Diagnostics,
}

impl Reconstruction {
    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn method(&self) -> Method {
        self.method
    }

    pub fn diagnostics(&self) -> &Diagnostics {
        &self.diagnostics
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

fn check_data(k: &KernelMatrix, u: &[f64]) -> Result<()> {
    if u.len() != k.rows() {
        return Err(Error::DimensionMismatch {
            expected: k.rows(),
            found: u.len(),
            context: "measurement vector vs kernel rows",
        });
    }
    Ok(())
}

fn check_source(k: &KernelMatrix, f: &[f64]) -> Result<()> {
    if f.len() != k.cols() {
        return Err(Error::DimensionMismatch {
            expected: k.cols(),
            found: f.len(),
            context: "source vector vs kernel columns",
        });
    }
    Ok(())
}

fn ratio_of_extremes(singular_values: &DVector<f64>) -> f64 {
    let max = singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
    let min = singular_values.iter().fold(f64::INFINITY, |m, &s| m.min(s));
    if min <= 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// `σ_max / σ_min` of the kernel entries.
pub fn condition_estimate(k: &KernelMatrix) -> f64 {
    ratio_of_extremes(&k.entries().singular_values())
}

/// `K f h_s`.
pub fn predict(k: &KernelMatrix, f: &[f64]) -> Result<Vec<f64>> {
    check_source(k, f)?;
    let product = k.entries() * DVector::from_column_slice(f) * k.h_s();
    Ok(product.iter().copied().collect())
}

pub fn residual_vector(k: &KernelMatrix, f: &[f64], u: &[f64]) -> Result<Vec<f64>> {
    check_data(k, u)?;
    let mut r = predict(k, f)?;
    for (ri, ui) in r.iter_mut().zip(u) {
        *ri -= ui;
    }
    Ok(r)
}

pub fn residual_norm(k: &KernelMatrix, f: &[f64], u: &[f64], norm: ResidualNorm) -> Result<f64> {
    Ok(norm.apply(&residual_vector(k, f, u)?))
}

/// `Σ_i h_i (K f h_s − u)_i²`.
pub fn weighted_residual(k: &KernelMatrix, f: &[f64], u: &[f64]) -> Result<f64> {
    let r = residual_vector(k, f, u)?;
    Ok(k.h_i() * r.iter().map(|v| v * v).sum::<f64>())
}

/// `Σ_j h_s f_j²`.
pub fn solution_seminorm(k: &KernelMatrix, f: &[f64]) -> Result<f64> {
    check_source(k, f)?;
    Ok(k.h_s() * f.iter().map(|v| v * v).sum::<f64>())
}

/// Discretized Tikhonov functional `M^α(f)`.
pub fn functional_value(k: &KernelMatrix, f: &[f64], u: &[f64], alpha: f64) -> Result<f64> {
    Ok(weighted_residual(k, f, u)? + alpha * solution_seminorm(k, f)?)
}

/// `f = K⁻¹u / h_s` by LU with partial pivoting.
///
/// Never fails on numerical grounds: an exactly singular factorization yields
/// NaN values, and a condition number past `1/ε` sets the singular flag.
pub fn naive_reconstruct(k: &KernelMatrix, u: &[f64]) -> Result<Reconstruction> {
    if k.rows() != k.cols() {
        return Err(Error::DimensionMismatch {
            expected: k.cols(),
            found: k.rows(),
            context: "naive inversion needs a square kernel",
        });
    }
    check_data(k, u)?;
    let condition = condition_estimate(k);
    let rhs = DVector::from_column_slice(u);
    let (values, exact_singular) = match k.entries().clone().lu().solve(&rhs) {
        Some(x) if x.iter().all(|v| v.is_finite()) => (x.iter().map(|v| v / k.h_s()).collect::<Vec<_>>(), false),
        _ => (vec![f64::NAN; k.cols()], true),
    };
    let residual = if exact_singular {
        f64::NAN
    } else {
        residual_norm(k, &values, u, ResidualNorm::Euclidean)?
    };
    Ok(Reconstruction {
        values,
        alpha: 0.0,
        method: Method::Naive,
        diagnostics: Diagnostics {
            condition,
            residual_norm: residual,
            singular: exact_singular || condition * f64::EPSILON >= 1.0,
        },
    })
}

/// Tikhonov solver with the kernel's SVD cached, so a ladder of `α` values
/// costs one factorization.
///
/// With `K = U Σ Vᵀ` the regularized normal equations
/// `(KᵀK h_i h_s + α h_s I) f = Kᵀ h_i u` diagonalize to
/// `f = V diag(σ h_i / (σ² h_i h_s + α h_s)) Uᵀ u`.
///
/// Differentiating [`functional_value`] gives `h_s²` rather than `h_s` in front
/// of `KᵀK`, so `f_α` is the exact minimizer of `M^{α h_s}`, the functional at
/// penalty weight `α·h_s`. The two parametrizations differ only by that fixed
/// rescaling of `α`.
#[derive(Clone, Debug)]
pub struct TikhonovSolver<'a> {
    kernel: &'a KernelMatrix,
    left: DMatrix<f64>,
    singular_values: DVector<f64>,
    right_t: DMatrix<f64>,
    condition: f64,
}

impl<'a> TikhonovSolver<'a> {
    pub fn new(kernel: &'a KernelMatrix) -> Result<Self> {
        let svd = kernel.entries().clone().svd(true, true);
        let left = svd
            .u
            .ok_or_else(|| Error::Internal("SVD did not return left vectors".into()))?;
        let right_t = svd
            .v_t
            .ok_or_else(|| Error::Internal("SVD did not return right vectors".into()))?;
        let mut condition = ratio_of_extremes(&svd.singular_values);
        if svd.singular_values.len() < kernel.cols() {
            condition = f64::INFINITY;
        }
        Ok(Self {
            kernel,
            left,
            singular_values: svd.singular_values,
            right_t,
            condition,
        })
    }

    pub fn kernel(&self) -> &KernelMatrix {
        self.kernel
    }

    pub fn condition(&self) -> f64 {
        self.condition
    }

    pub fn singular_values(&self) -> &[f64] {
        self.singular_values.as_slice()
    }

    pub fn solve(&self, u: &[f64], alpha: f64) -> Result<Reconstruction> {
        if !(alpha >= 0.0 && alpha.is_finite()) {
            return Err(Error::invalid(
                "alpha",
                format!("must be non-negative and finite, got {alpha}"),
            ));
        }
        check_data(self.kernel, u)?;
        let (h_i, h_s) = (self.kernel.h_i(), self.kernel.h_s());
        if alpha == 0.0 {
            let sigma_max = self.singular_values.iter().fold(0.0f64, |m, &s| m.max(s));
            let floor = sigma_max * f64::EPSILON * self.kernel.rows().max(self.kernel.cols()) as f64;
            if self.singular_values.len() < self.kernel.cols() || self.singular_values.iter().any(|&s| s <= floor) {
                return Err(Error::Singular {
                    condition: self.condition,
                });
            }
        }
        let projected = self.left.tr_mul(&DVector::from_column_slice(u));
        let filtered = DVector::from_iterator(
            projected.len(),
            projected
                .iter()
                .zip(self.singular_values.iter())
                .map(|(&b, &s)| s * h_i * b / (s * s * h_i * h_s + alpha * h_s)),
        );
        let f = self.right_t.tr_mul(&filtered);
        let values: Vec<f64> = f.iter().copied().collect();
        let residual = residual_norm(self.kernel, &values, u, ResidualNorm::Euclidean)?;
        Ok(Reconstruction {
            values,
            alpha,
            method: Method::Tikhonov,
            diagnostics: Diagnostics {
                condition: self.condition,
                residual_norm: residual,
                singular: false,
            },
        })
    }
}

/// `f_α = (KᵀK h_i h_s + α h_s I)⁻¹ Kᵀ h_i u`, computed through the SVD.
pub fn tikhonov_reconstruct(k: &KernelMatrix, u: &[f64], alpha: f64) -> Result<Reconstruction> {
    TikhonovSolver::new(k)?.solve(u, alpha)
}

/// The same minimizer by forming and factoring the normal equations
/// literally. Loses accuracy on ill-conditioned kernels.
pub fn tikhonov_normal_equations(k: &KernelMatrix, u: &[f64], alpha: f64) -> Result<Vec<f64>> {
    if !(alpha >= 0.0 && alpha.is_finite()) {
        return Err(Error::invalid(
            "alpha",
            format!("must be non-negative and finite, got {alpha}"),
        ));
    }
    check_data(k, u)?;
    let (h_i, h_s) = (k.h_i(), k.h_s());
    let entries = k.entries();
    let mut normal = entries.tr_mul(entries) * (h_i * h_s);
    for j in 0..normal.nrows() {
        normal[(j, j)] += alpha * h_s;
    }
    let rhs = entries.tr_mul(&DVector::from_column_slice(u)) * h_i;
    let solution = normal.lu().solve(&rhs).ok_or(Error::Singular {
        condition: f64::INFINITY,
    })?;
    Ok(solution.iter().copied().collect())
}
