//! Forward problem: truncated sine-series solution, data generation and noise.

mod fd;

pub use fd::{fd_reference, FdField};

use rand::distributions::{Distribution, Open01, Uniform};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::model::{
    KernelMode, Measurements, NoiseSpec, ProblemConfig, SamplePoint, SamplingScheme, SourceFunction, SourceShape,
};
use crate::quadrature::{integrate, QuadratureOptions};

// Independent generator streams so the same seed can drive both positions and noise.
const POSITION_STREAM: u64 = 1;
const NOISE_STREAM: u64 = 2;

/// Sine coefficients `b_k`, `k = 1..n`, of a source under a given normalization.
#[derive(Clone, Debug, PartialEq)]
pub struct SineCoefficients {
    coeffs: Vec<f64>,
    mode: KernelMode,
}

impl SineCoefficients {
    pub fn coeffs(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn mode(&self) -> KernelMode {
        self.mode
    }
}

/// `b_k = (c/l)∫₀ˡ f(s) sin(kπs/l) ds` with `c = 2` in physical mode and `c = 1`
/// in paper mode. Built-in shapes use closed forms; custom sources go through
/// adaptive quadrature at absolute tolerance 1e-12.
pub fn sine_coefficients(f: &SourceFunction, config: &ProblemConfig) -> Result<SineCoefficients> {
    let l = config.length();
    let scale = config.mode().expansion_factor() / l;
    let n = config.series_terms();
    let mut coeffs = Vec::with_capacity(n);
    for k in 1..=n {
        let w = config.wavenumber(k);
        let integral = match f.shape() {
            SourceShape::Box { lo, hi, height } => {
                let (a, b) = (lo.clamp(0.0, l), hi.clamp(0.0, l));
                if a >= b {
                    0.0
                } else {
                    height * ((w * a).cos() - (w * b).cos()) / w
                }
            }
            SourceShape::Constant(c) => {
                let odd = if k % 2 == 1 { 2.0 } else { 0.0 };
                c * odd / w
            }
            SourceShape::SineMode { k: k0, amplitude } => {
                if *k0 == k {
                    0.5 * amplitude * l
                } else {
                    0.0
                }
            }
            SourceShape::Custom(_) => {
                let opts = QuadratureOptions {
                    initial_panels: n.max(8),
                    ..Default::default()
                };
                integrate(|s| f.evaluate_on(s, l) * (w * s).sin(), 0.0, l, opts)?
            }
        };
        coeffs.push(scale * integral);
    }
    Ok(SineCoefficients {
        coeffs,
        mode: config.mode(),
    })
}

/// Temperature `u(x, t) = Σ_k sin(kπx/l)·(1/(aω_k))²·(1 − e^{−(aω_k)²t})·b_k`.
pub fn evaluate_field(coeffs: &SineCoefficients, x: f64, t: f64, config: &ProblemConfig) -> f64 {
    if t <= 0.0 || x <= 0.0 || x >= config.length() {
        return 0.0;
    }
    coeffs
        .coeffs
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            let k = i + 1;
            (config.wavenumber(k) * x).sin() * config.mode_response(k, t) * b
        })
        .sum()
}

pub fn sample_points(scheme: &SamplingScheme, config: &ProblemConfig) -> Vec<SamplePoint> {
    match *scheme {
        SamplingScheme::FixedPoint {
            x0,
            t_start,
            h_t,
            count,
        } => (0..count)
            .map(|i| SamplePoint {
                x: x0,
                t: t_start + i as f64 * h_t,
            })
            .collect(),
        SamplingScheme::FixedTime { t0, h_x, count } => (1..=count)
            .map(|i| SamplePoint {
                x: i as f64 * h_x,
                t: t0,
            })
            .collect(),
        SamplingScheme::RandomPoints {
            t_start,
            h_t,
            count,
            seed,
        } => {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(POSITION_STREAM);
            let l = config.length();
            (0..count)
                .map(|i| {
                    let unit: f64 = Open01.sample(&mut rng);
                    SamplePoint {
                        x: unit * l,
                        t: t_start + i as f64 * h_t,
                    }
                })
                .collect()
        }
    }
}

/// Clean synthetic measurements of the field driven by `f`.
pub fn generate_data(f: &SourceFunction, scheme: &SamplingScheme, config: &ProblemConfig) -> Result<Measurements> {
    scheme.validate(config.length())?;
    let coeffs = sine_coefficients(f, config)?;
    let points = sample_points(scheme, config);
    let values = points
        .iter()
        .map(|p| evaluate_field(&coeffs, p.x, p.t, config))
        .collect();
    Measurements::new(points, values, 0.0, *scheme)
}

/// Adds `δ·r_i`, `r_i ~ U[-1, 1]`, and accumulates the noise bound.
///
/// The perturbation is clamped at the last ulp so `|u'_i − u_i| ≤ δ` holds in
/// floating point, not just in exact arithmetic.
pub fn apply_noise(m: &Measurements, spec: &NoiseSpec) -> Measurements {
    if spec.delta == 0.0 {
        return m.with_values(m.values().to_vec(), m.delta());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    rng.set_stream(NOISE_STREAM);
    let unit = Uniform::new_inclusive(-1.0, 1.0);
    let values = m
        .values()
        .iter()
        .map(|&u| {
            let r: f64 = unit.sample(&mut rng);
            let mut noisy = u + spec.delta * r;
            while (noisy - u).abs() > spec.delta {
                noisy = if noisy > u { noisy.next_down() } else { noisy.next_up() };
            }
            noisy
        })
        .collect();
    m.with_values(values, m.delta() + spec.delta)
}
