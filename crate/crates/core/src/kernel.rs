//! The Fredholm kernel of the source-to-measurement map and its discretization.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::model::{
    KernelMode, ProblemConfig, ReconstructionGrid, SamplePoint, SamplingScheme, SchemeKind, DEFAULT_HT,
};

/// `K(x, t, s) = (c/l) Σ_k sin(ω_k x)·(1/(aω_k))²·(1 − e^{−(aω_k)²t})·sin(ω_k s)`,
/// `ω_k = kπ/l`, `c` the mode's expansion factor.
pub fn kernel_value(x: f64, t: f64, s: f64, config: &ProblemConfig) -> f64 {
    if t <= 0.0 {
        return 0.0;
    }
    let scale = config.mode().expansion_factor() / config.length();
    let sum: f64 = (1..=config.series_terms())
        .map(|k| {
            let w = config.wavenumber(k);
            (w * x).sin() * config.mode_response(k, t) * (w * s).sin()
        })
        .sum();
    scale * sum
}

/// How the data-side quadrature weight `h_i` is picked.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum DataWeights {
    /// Spacing of the coordinate the scheme sweeps (`h_t` for the time
    /// series, `h_x` for the snapshot).
    #[default]
    Swept,
    /// Swapped weights: `h_x` for the fixed-point scheme and `h_t` for the
    /// other two.
    PaperListing,
}

/// Discretized operator with `u ≈ K f h_s`.
#[derive(Clone, Debug, PartialEq)]
pub struct KernelMatrix {
    entries: DMatrix<f64>,
    h_s: f64,
    h_i: f64,
    scheme: SchemeKind,
    mode: KernelMode,
}

impl KernelMatrix {
    pub fn from_parts(entries: DMatrix<f64>, h_s: f64, h_i: f64, scheme: SchemeKind, mode: KernelMode) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::invalid("K", "kernel matrix is empty"));
        }
        if !(h_s > 0.0 && h_i > 0.0) {
            return Err(Error::invalid(
                "weights",
                format!("need positive weights, got h_s={h_s}, h_i={h_i}"),
            ));
        }
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("K", "kernel matrix has non-finite entries"));
        }
        Ok(Self {
            entries,
            h_s,
            h_i,
            scheme,
            mode,
        })
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn rows(&self) -> usize {
        self.entries.nrows()
    }

    pub fn cols(&self) -> usize {
        self.entries.ncols()
    }

    pub fn h_s(&self) -> f64 {
        self.h_s
    }

    pub fn h_i(&self) -> f64 {
        self.h_i
    }

    pub fn scheme(&self) -> SchemeKind {
        self.scheme
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }
}

pub fn assemble(
    points: &[SamplePoint],
    grid: &ReconstructionGrid,
    scheme: &SamplingScheme,
    config: &ProblemConfig,
) -> Result<KernelMatrix> {
    assemble_with_weights(points, grid, scheme, config, DataWeights::Swept)
}

pub fn assemble_with_weights(
    points: &[SamplePoint],
    grid: &ReconstructionGrid,
    scheme: &SamplingScheme,
    config: &ProblemConfig,
    weights: DataWeights,
) -> Result<KernelMatrix> {
    if points.is_empty() {
        return Err(Error::invalid("points", "no measurement points"));
    }
    let n = config.series_terms();
    let scale = config.mode().expansion_factor() / config.length();
    // K = A·S with A[i][k] = sin(ω_k x_i)·response_k(t_i), S[k][j] = sin(ω_k s_j)
    let data_side = DMatrix::from_fn(points.len(), n, |i, k| {
        let p = points[i];
        if p.t <= 0.0 {
            return 0.0;
        }
        (config.wavenumber(k + 1) * p.x).sin() * config.mode_response(k + 1, p.t)
    });
    let nodes = grid.nodes();
    let source_side = DMatrix::from_fn(n, nodes.len(), |k, j| (config.wavenumber(k + 1) * nodes[j]).sin());
    let entries = data_side * source_side * scale;

    let h_i = match weights {
        DataWeights::Swept => scheme.swept_spacing(),
        DataWeights::PaperListing => match *scheme {
            SamplingScheme::FixedPoint { .. } => config.length() / (points.len() as f64 + 1.0),
            // the snapshot has no time step of its own; use the default one
            SamplingScheme::FixedTime { .. } => DEFAULT_HT,
            SamplingScheme::RandomPoints { h_t, .. } => h_t,
        },
    };
    KernelMatrix::from_parts(entries, grid.spacing(), h_i, scheme.kind(), config.mode())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::direct::{generate_data, sample_points};
    use crate::model::{box_source, discretize_source, make_grid};

    #[test]
    fn kernel_vanishes_at_start_and_walls() {
        let c = ProblemConfig::default();
        assert_eq!(kernel_value(0.3, 0.0, 0.6, &c), 0.0);
        assert_eq!(kernel_value(0.0, 0.2, 0.6, &c), 0.0);
        assert_eq!(kernel_value(0.3, 0.2, 0.0, &c), 0.0);
    }

    #[test]
    fn kernel_is_symmetric_in_positions() {
        let c = ProblemConfig::default();
        for &(x, t, s) in &[(0.1, 0.01, 0.7), (0.35, 0.2, 0.5), (0.9, 1.0, 0.05)] {
            let a = kernel_value(x, t, s, &c);
            let b = kernel_value(s, t, x, &c);
            assert!((a - b).abs() <= 1e-15 * a.abs().max(1.0));
        }
    }

    #[test]
    fn physical_is_twice_paper() {
        let phys = ProblemConfig::default();
        let paper = phys.with_mode(KernelMode::Paper);
        let a = kernel_value(0.4, 0.05, 0.45, &phys);
        let b = kernel_value(0.4, 0.05, 0.45, &paper);
        assert!((a - 2.0 * b).abs() < 1e-16);
    }

    #[test]
    fn default_dimensions_and_weights() {
        let config = ProblemConfig::default();
        let grid = make_grid(100, 1.0).unwrap();
        for (kind, h_i) in [
            (SchemeKind::FixedPoint, 0.004),
            (SchemeKind::FixedTime, 1.0 / 101.0),
            (SchemeKind::RandomPoints, 0.004),
        ] {
            let scheme = SamplingScheme::default_for(kind, 1.0, 1);
            let pts = sample_points(&scheme, &config);
            let k = assemble(&pts, &grid, &scheme, &config).unwrap();
            assert_eq!((k.rows(), k.cols()), (100, 100));
            assert_eq!(k.h_s(), 1.0 / 101.0);
            assert_eq!(k.h_i(), h_i);
        }
    }

    #[test]
    fn paper_listing_swaps_weights() {
        let config = ProblemConfig::default();
        let grid = make_grid(10, 1.0).unwrap();
        let fp = SamplingScheme::default_for(SchemeKind::FixedPoint, 1.0, 0);
        let k = assemble_with_weights(
            &sample_points(&fp, &config),
            &grid,
            &fp,
            &config,
            DataWeights::PaperListing,
        )
        .unwrap();
        assert_eq!(k.h_i(), 1.0 / 101.0);
        let ft = SamplingScheme::default_for(SchemeKind::FixedTime, 1.0, 0);
        let k = assemble_with_weights(
            &sample_points(&ft, &config),
            &grid,
            &ft,
            &config,
            DataWeights::PaperListing,
        )
        .unwrap();
        assert_eq!(k.h_i(), 0.004);
    }

    #[test]
    fn single_entry_matches_kernel_value() {
        let config = ProblemConfig::default();
        let grid = make_grid(1, 1.0).unwrap();
        let scheme = SamplingScheme::fixed_point(0.3, 0.05, 0.01, 1);
        let pts = sample_points(&scheme, &config);
        let k = assemble(&pts, &grid, &scheme, &config).unwrap();
        assert_eq!((k.rows(), k.cols()), (1, 1));
        let direct = kernel_value(0.3, 0.05, 0.5, &config);
        assert!((k.entries()[(0, 0)] - direct).abs() < 1e-15);
    }

    #[test]
    fn entries_match_pointwise_kernel() {
        let config = ProblemConfig::default();
        let grid = make_grid(100, 1.0).unwrap();
        let scheme = SamplingScheme::default_for(SchemeKind::FixedTime, 1.0, 0);
        let pts = sample_points(&scheme, &config);
        let k = assemble(&pts, &grid, &scheme, &config).unwrap();
        for &(i, j) in &[(0, 0), (10, 57), (99, 3), (45, 45)] {
            let swapped = kernel_value(grid.nodes()[j], pts[i].t, pts[i].x, &config);
            assert!((k.entries()[(i, j)] - swapped).abs() < 1e-14);
        }
    }

    fn quadrature_gap(config: &ProblemConfig, kind: SchemeKind, nodes: usize) -> f64 {
        let grid = make_grid(nodes, 1.0).unwrap();
        let scheme = SamplingScheme::default_for(kind, 1.0, 3);
        let data = generate_data(&box_source(), &scheme, config).unwrap();
        let k = assemble(data.points(), &grid, &scheme, config).unwrap();
        let f = nalgebra::DVector::from_vec(discretize_source(&box_source(), &grid));
        let predicted = k.entries() * f * k.h_s();
        predicted
            .iter()
            .zip(data.values())
            .map(|(p, u)| (p - u).abs())
            .fold(0.0, f64::max)
    }

    #[test]
    fn row_sums_reproduce_generated_data() {
        let physical = ProblemConfig::default();
        let paper = physical.with_mode(KernelMode::Paper);
        assert!(quadrature_gap(&physical, SchemeKind::FixedTime, 100) < 5e-4);
        for kind in [SchemeKind::FixedPoint, SchemeKind::FixedTime, SchemeKind::RandomPoints] {
            assert!(quadrature_gap(&paper, kind, 100) < 5e-4);
            // the rectangle rule is first order across the jumps of the box
            assert!(quadrature_gap(&physical, kind, 100) < 6e-4);
        }
    }

    #[test]
    fn quadrature_error_shrinks_with_refinement() {
        let config = ProblemConfig::default();
        for kind in [SchemeKind::FixedPoint, SchemeKind::FixedTime] {
            let coarse = quadrature_gap(&config, kind, 100);
            let fine = quadrature_gap(&config, kind, 201);
            assert!(fine < 0.6 * coarse, "{kind}: {coarse:e} -> {fine:e}");
        }
    }
}
