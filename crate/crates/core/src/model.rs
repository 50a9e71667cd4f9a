//! Problem configuration, source functions, grids and measurement containers.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};

/// Normalization of the sine expansion used by the series solver and kernel.
///
/// `Paper` uses a `1/l` prefactor, which drops the
/// factor 2 of the orthonormal expansion. `Physical` restores it, so the series
/// matches an independent PDE solve. Inversion results do not depend on the
/// choice as long as data generation and inversion use the same mode.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum KernelMode {
    Paper,
    #[default]
    Physical,
}

impl KernelMode {
    pub fn expansion_factor(self) -> f64 {
        match self {
            KernelMode::Paper => 1.0,
            KernelMode::Physical => 2.0,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            KernelMode::Paper => "paper",
            KernelMode::Physical => "physical",
        }
    }
}

impl fmt::Display for KernelMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Physical and numerical constants of the forward model.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ProblemConfig {
    diffusion: f64,
    length: f64,
    series_terms: usize,
    mode: KernelMode,
}

impl ProblemConfig {
    pub fn new(diffusion: f64, length: f64, series_terms: usize, mode: KernelMode) -> Result<Self> {
        if !(diffusion > 0.0 && diffusion.is_finite()) {
            return Err(Error::invalid("a", format!("must be positive, got {diffusion}")));
        }
        if !(length > 0.0 && length.is_finite()) {
            return Err(Error::invalid("l", format!("must be positive, got {length}")));
        }
        if series_terms == 0 {
            return Err(Error::invalid("n", "series truncation must be at least 1"));
        }
        Ok(Self {
            diffusion,
            length,
            series_terms,
            mode,
        })
    }

    pub fn with_mode(mut self, mode: KernelMode) -> Self {
        self.mode = mode;
        self
    }

    pub fn diffusion(&self) -> f64 {
        self.diffusion
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn series_terms(&self) -> usize {
        self.series_terms
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }

    /// Spatial frequency `kπ/l` of mode `k` (1-based).
    pub(crate) fn wavenumber(&self, k: usize) -> f64 {
        k as f64 * std::f64::consts::PI / self.length
    }

    /// Temporal weight `(1/(aω))² (1 − exp(−(aω)² t))` of mode `k`.
    pub(crate) fn mode_response(&self, k: usize, t: f64) -> f64 {
        let rate = (self.diffusion * self.wavenumber(k)).powi(2);
        -(-rate * t).exp_m1() / rate
    }
}

impl Default for ProblemConfig {
    fn default() -> Self {
        Self {
            diffusion: 1.0,
            length: 1.0,
            series_terms: 100,
            mode: KernelMode::Physical,
        }
    }
}

#[derive(Clone)]
pub enum SourceShape {
    /// `height` on the closed interval `[lo, hi]`, zero elsewhere.
    Box {
        lo: f64,
        hi: f64,
        height: f64,
    },
    Constant(f64),
    /// `amplitude · sin(kπs/l)`.
    SineMode {
        k: usize,
        amplitude: f64,
    },
    Custom(Arc<dyn Fn(f64) -> f64 + Send + Sync>),
}

impl fmt::Debug for SourceShape {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            SourceShape::Box { lo, hi, height } => f
                .debug_struct("Box")
                .field("lo", lo)
                .field("hi", hi)
                .field("height", height)
                .finish(),
            SourceShape::Constant(c) => f.debug_tuple("Constant").field(c).finish(),
            SourceShape::SineMode { k, amplitude } => f
                .debug_struct("SineMode")
                .field("k", k)
                .field("amplitude", amplitude)
                .finish(),
            SourceShape::Custom(_) => f.write_str("Custom(..)"),
        }
    }
}

/// A stationary heat source `f(s)` on the bar.
#[derive(Clone, Debug)]
pub struct SourceFunction {
    shape: SourceShape,
    label: String,
}

impl SourceFunction {
    pub fn new(label: impl Into<String>, shape: SourceShape) -> Self {
        Self {
            shape,
            label: label.into(),
        }
    }

    pub fn custom(label: impl Into<String>, f: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        Self::new(label, SourceShape::Custom(Arc::new(f)))
    }

    pub fn zero() -> Self {
        Self::new("zero", SourceShape::Constant(0.0))
    }

    pub fn constant(value: f64) -> Self {
        Self::new(format!("constant({value})"), SourceShape::Constant(value))
    }

    pub fn sine_mode(k: usize, amplitude: f64) -> Self {
        Self::new(format!("sine({k})"), SourceShape::SineMode { k, amplitude })
    }

    pub fn shape(&self) -> &SourceShape {
        &self.shape
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    /// Evaluates the source at `s`. `SineMode` uses the unit bar; use
    /// [`SourceFunction::evaluate_on`] when `l != 1`.
    pub fn evaluate(&self, s: f64) -> f64 {
        self.evaluate_on(s, 1.0)
    }

    pub fn evaluate_on(&self, s: f64, length: f64) -> f64 {
        match &self.shape {
            SourceShape::Box { lo, hi, height } => {
                if *lo <= s && s <= *hi {
                    *height
                } else {
                    0.0
                }
            }
            SourceShape::Constant(c) => *c,
            SourceShape::SineMode { k, amplitude } => amplitude * (*k as f64 * std::f64::consts::PI * s / length).sin(),
            SourceShape::Custom(f) => f(s),
        }
    }
}

/// The unit pulse on `[1/3, 2/3]` used to generate synthetic data.
pub fn box_source() -> SourceFunction {
    SourceFunction::new(
        "box",
        SourceShape::Box {
            lo: 1.0 / 3.0,
            hi: 2.0 / 3.0,
            height: 1.0,
        },
    )
}

/// Interior nodes `s_j = j·h_s`, `j = 1..J`, with `h_s = l/(J+1)`.
#[derive(Clone, Debug, PartialEq)]
pub struct ReconstructionGrid {
    spacing: f64,
    length: f64,
    nodes: Vec<f64>,
}

impl ReconstructionGrid {
    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn length(&self) -> f64 {
        self.length
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }
}

pub fn make_grid(count: usize, length: f64) -> Result<ReconstructionGrid> {
    if count == 0 {
        return Err(Error::invalid("J", "grid needs at least one node"));
    }
    if !(length > 0.0 && length.is_finite()) {
        return Err(Error::invalid("l", format!("must be positive, got {length}")));
    }
    let spacing = length / (count as f64 + 1.0);
    let nodes = (1..=count).map(|j| j as f64 * spacing).collect();
    Ok(ReconstructionGrid { spacing, length, nodes })
}

pub fn discretize_source(f: &SourceFunction, grid: &ReconstructionGrid) -> Vec<f64> {
    grid.nodes.iter().map(|&s| f.evaluate_on(s, grid.length)).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SchemeKind {
    FixedPoint,
    FixedTime,
    RandomPoints,
}

impl SchemeKind {
    pub fn as_str(self) -> &'static str {
        match self {
            SchemeKind::FixedPoint => "fixed-point",
            SchemeKind::FixedTime => "fixed-time",
            SchemeKind::RandomPoints => "random",
        }
    }
}

impl fmt::Display for SchemeKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

pub const DEFAULT_X0: f64 = 0.35;
pub const DEFAULT_T0: f64 = 0.1;
pub const DEFAULT_T_START: f64 = 0.004;
pub const DEFAULT_HT: f64 = 0.004;
pub const DEFAULT_COUNT: usize = 100;

/// Layout of the temperature measurements.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum SamplingScheme {
    /// One sensor at `x0`, read at `t_start + (i-1)·h_t`.
    FixedPoint {
        x0: f64,
        t_start: f64,
        h_t: f64,
        count: usize,
    },
    /// Snapshot at `t0` on the uniform interior points `i·h_x`, `h_x = l/(N+1)`.
    FixedTime { t0: f64, h_x: f64, count: usize },
    /// Uniformly random positions, one per time `t_start + (i-1)·h_t`.
    RandomPoints {
        t_start: f64,
        h_t: f64,
        count: usize,
        seed: u64,
    },
}

impl SamplingScheme {
    pub fn fixed_point(x0: f64, t_start: f64, h_t: f64, count: usize) -> Self {
        SamplingScheme::FixedPoint {
            x0,
            t_start,
            h_t,
            count,
        }
    }

    pub fn fixed_time(t0: f64, count: usize, length: f64) -> Self {
        SamplingScheme::FixedTime {
            t0,
            h_x: length / (count as f64 + 1.0),
            count,
        }
    }

    pub fn random_points(t_start: f64, h_t: f64, count: usize, seed: u64) -> Self {
        SamplingScheme::RandomPoints {
            t_start,
            h_t,
            count,
            seed,
        }
    }

    /// The scheme of `kind` with every other parameter at its default.
    pub fn default_for(kind: SchemeKind, length: f64, seed: u64) -> Self {
        match kind {
            SchemeKind::FixedPoint => {
                Self::fixed_point(DEFAULT_X0 * length, DEFAULT_T_START, DEFAULT_HT, DEFAULT_COUNT)
            }
            SchemeKind::FixedTime => Self::fixed_time(DEFAULT_T0, DEFAULT_COUNT, length),
            SchemeKind::RandomPoints => Self::random_points(DEFAULT_T_START, DEFAULT_HT, DEFAULT_COUNT, seed),
        }
    }

    pub fn kind(&self) -> SchemeKind {
        match self {
            SamplingScheme::FixedPoint { .. } => SchemeKind::FixedPoint,
            SamplingScheme::FixedTime { .. } => SchemeKind::FixedTime,
            SamplingScheme::RandomPoints { .. } => SchemeKind::RandomPoints,
        }
    }

    pub fn count(&self) -> usize {
        match *self {
            SamplingScheme::FixedPoint { count, .. }
            | SamplingScheme::FixedTime { count, .. }
            | SamplingScheme::RandomPoints { count, .. } => count,
        }
    }

    /// Spacing of the coordinate swept by the scheme: `h_t` for the time
    /// sweeps, `h_x` for the snapshot.
    pub fn swept_spacing(&self) -> f64 {
        match *self {
            SamplingScheme::FixedPoint { h_t, .. } | SamplingScheme::RandomPoints { h_t, .. } => h_t,
            SamplingScheme::FixedTime { h_x, .. } => h_x,
        }
    }

    pub fn validate(&self, length: f64) -> Result<()> {
        if self.count() == 0 {
            return Err(Error::invalid("N", "need at least one measurement"));
        }
        let positive = |name, v: f64| {
            if v > 0.0 && v.is_finite() {
                Ok(())
            } else {
                Err(Error::invalid(name, format!("must be positive, got {v}")))
            }
        };
        match *self {
            SamplingScheme::FixedPoint { x0, t_start, h_t, .. } => {
                if !(x0 > 0.0 && x0 < length) {
                    return Err(Error::invalid("x0", format!("must lie in (0, {length}), got {x0}")));
                }
                positive("t_start", t_start)?;
                positive("h_t", h_t)
            }
            SamplingScheme::FixedTime { t0, h_x, count } => {
                positive("t0", t0)?;
                positive("h_x", h_x)?;
                if (count as f64 + 1.0) * h_x > length * (1.0 + 1e-12) {
                    return Err(Error::invalid("h_x", "snapshot points extend past the bar"));
                }
                Ok(())
            }
            SamplingScheme::RandomPoints { t_start, h_t, .. } => {
                positive("t_start", t_start)?;
                positive("h_t", h_t)
            }
        }
    }
}

/// Seeded bounded noise `u' = u + δ r`, `r_i ~ U[-1, 1]`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NoiseSpec {
    pub delta: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(delta: f64, seed: u64) -> Result<Self> {
        if !(delta >= 0.0 && delta.is_finite()) {
            return Err(Error::invalid("delta", format!("must be non-negative, got {delta}")));
        }
        Ok(Self { delta, seed })
    }
}

impl Default for NoiseSpec {
    fn default() -> Self {
        Self { delta: 1e-4, seed: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplePoint {
    pub x: f64,
    pub t: f64,
}

/// Temperature readings at `(x, t)` points with the accumulated noise bound.
#[derive(Clone, Debug, PartialEq)]
pub struct Measurements {
    points: Vec<SamplePoint>,
    values: Vec<f64>,
    delta: f64,
    scheme: SamplingScheme,
}

impl Measurements {
    pub fn new(points: Vec<SamplePoint>, values: Vec<f64>, delta: f64, scheme: SamplingScheme) -> Result<Self> {
        if points.len() != values.len() {
            return Err(Error::DimensionMismatch {
                expected: points.len(),
                found: values.len(),
                context: "measurement values",
            });
        }
        if points.is_empty() {
            return Err(Error::invalid("N", "measurements are empty"));
        }
        if !(delta >= 0.0) {
            return Err(Error::invalid("delta", format!("must be non-negative, got {delta}")));
        }
        if let Some(p) = points.iter().find(|p| !(p.t > 0.0) || !(p.x >= 0.0)) {
            return Err(Error::invalid(
                "points",
                format!("need x >= 0 and t > 0, got ({}, {})", p.x, p.t),
            ));
        }
        Ok(Self {
            points,
            values,
            delta,
            scheme,
        })
    }

    pub fn points(&self) -> &[SamplePoint] {
        &self.points
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn delta(&self) -> f64 {
        self.delta
    }

    pub fn scheme(&self) -> &SamplingScheme {
        &self.scheme
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub(crate) fn with_values(&self, values: Vec<f64>, delta: f64) -> Self {
        Self {
            points: self.points.clone(),
            values,
            delta,
            scheme: self.scheme,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn box_source_values() {
        let f = box_source();
        assert_eq!(f.evaluate(0.5), 1.0);
        assert_eq!(f.evaluate(0.1), 0.0);
        assert_eq!(f.evaluate(1.0 / 3.0), 1.0);
        assert_eq!(f.evaluate(2.0 / 3.0), 1.0);
        assert_eq!(f.evaluate(0.9), 0.0);
    }

    #[test]
    fn grid_examples() {
        let g = make_grid(100, 1.0).unwrap();
        assert_eq!(g.spacing(), 1.0 / 101.0);
        assert_eq!(g.nodes()[0], 1.0 / 101.0);
        assert_eq!(make_grid(1, 1.0).unwrap().nodes(), &[0.5]);
        assert_eq!(make_grid(3, 1.0).unwrap().nodes(), &[0.25, 0.5, 0.75]);
        assert!(make_grid(0, 1.0).is_err());
    }

    #[test]
    fn grid_stays_inside_bar() {
        for (j, l) in [(1, 1.0), (7, 2.5), (100, 1.0), (257, 0.3)] {
            let g = make_grid(j, l).unwrap();
            assert!(g.nodes().iter().all(|&s| s > 0.0 && s < l));
            assert!(g.nodes().windows(2).all(|w| w[0] < w[1]));
            assert!((g.spacing() * (j as f64 + 1.0) - l).abs() < 1e-12 * l);
        }
    }

    #[test]
    fn box_discretization_counts_plateau_nodes() {
        let grid = make_grid(100, 1.0).unwrap();
        let v = discretize_source(&box_source(), &grid);
        // brute-force count of j with 1/3 <= j/101 <= 2/3 in exact integer arithmetic
        let expected: Vec<usize> = (1..=100usize).filter(|&j| 3 * j >= 101 && 3 * j <= 202).collect();
        assert_eq!(expected.len(), 34);
        assert_eq!(expected.first(), Some(&34));
        assert_eq!(expected.last(), Some(&67));
        for (idx, &value) in v.iter().enumerate() {
            let j = idx + 1;
            assert_eq!(value, if expected.contains(&j) { 1.0 } else { 0.0 }, "node {j}");
        }
    }

    #[test]
    fn zero_and_constant_sources() {
        let grid = make_grid(10, 1.0).unwrap();
        assert!(discretize_source(&SourceFunction::zero(), &grid)
            .iter()
            .all(|&v| v == 0.0));
        assert!(discretize_source(&SourceFunction::constant(2.5), &grid)
            .iter()
            .all(|&v| v == 2.5));
    }

    #[test]
    fn config_rejects_bad_values() {
        assert!(ProblemConfig::new(0.0, 1.0, 10, KernelMode::Paper).is_err());
        assert!(ProblemConfig::new(1.0, -1.0, 10, KernelMode::Paper).is_err());
        assert!(ProblemConfig::new(1.0, 1.0, 0, KernelMode::Paper).is_err());
        assert!(ProblemConfig::new(1.0, 1.0, 1, KernelMode::Paper).is_ok());
    }

    #[test]
    fn scheme_validation() {
        assert!(SamplingScheme::fixed_point(0.0, 0.004, 0.004, 10)
            .validate(1.0)
            .is_err());
        assert!(SamplingScheme::fixed_point(1.0, 0.004, 0.004, 10)
            .validate(1.0)
            .is_err());
        assert!(SamplingScheme::fixed_point(0.35, 0.0, 0.004, 10).validate(1.0).is_err());
        assert!(SamplingScheme::fixed_time(0.1, 0, 1.0).validate(1.0).is_err());
        assert!(SamplingScheme::fixed_time(-0.1, 5, 1.0).validate(1.0).is_err());
        assert!(SamplingScheme::random_points(0.004, -1.0, 5, 1).validate(1.0).is_err());
        for kind in [SchemeKind::FixedPoint, SchemeKind::FixedTime, SchemeKind::RandomPoints] {
            SamplingScheme::default_for(kind, 1.0, 3).validate(1.0).unwrap();
        }
        assert_eq!(
            SamplingScheme::default_for(SchemeKind::FixedTime, 1.0, 0).swept_spacing(),
            1.0 / 101.0
        );
    }

    #[test]
    fn measurements_reject_mismatch() {
        let scheme = SamplingScheme::fixed_time(0.1, 2, 1.0);
        let pts = vec![SamplePoint { x: 0.3, t: 0.1 }, SamplePoint { x: 0.6, t: 0.1 }];
        assert!(Measurements::new(pts.clone(), vec![1.0], 0.0, scheme).is_err());
        assert!(Measurements::new(pts.clone(), vec![1.0, 2.0], -1.0, scheme).is_err());
        assert!(Measurements::new(pts, vec![1.0, 2.0], 0.0, scheme).is_ok());
    }

    proptest! {
        #[test]
        fn discretization_is_linear(alpha in -5.0f64..5.0, beta in -5.0f64..5.0, k in 1usize..6, j in 1usize..60) {
            let grid = make_grid(j, 1.0).unwrap();
            let f = box_source();
            let g = SourceFunction::sine_mode(k, 1.0);
            let (f2, g2) = (f.clone(), g.clone());
            let combo = SourceFunction::custom("combo", move |s| alpha * f2.evaluate(s) + beta * g2.evaluate(s));
            let lhs = discretize_source(&combo, &grid);
            let df = discretize_source(&f, &grid);
            let dg = discretize_source(&g, &grid);
            for i in 0..j {
                prop_assert!((lhs[i] - (alpha * df[i] + beta * dg[i])).abs() <= 1e-12);
            }
        }
    }
}
