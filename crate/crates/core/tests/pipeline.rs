use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use thermoinv::direct::{apply_noise, generate_data};
use thermoinv::inversion::{
    functional_value, naive_reconstruct, solution_seminorm, tikhonov_reconstruct, weighted_residual, ResidualNorm,
    TikhonovSolver,
};
use thermoinv::kernel::{assemble, KernelMatrix};
use thermoinv::model::{
    box_source, discretize_source, make_grid, KernelMode, Measurements, NoiseSpec, ProblemConfig, SamplingScheme,
    SchemeKind,
};
use thermoinv::rules::{discrepancy_rule, oracle_distance_rule, DiscrepancyCriterion, LadderConfig, RuleStatus};

const SCHEMES: [SchemeKind; 3] = [SchemeKind::FixedPoint, SchemeKind::FixedTime, SchemeKind::RandomPoints];

struct Setup {
    kernel: KernelMatrix,
    data: Measurements,
    f_true: Vec<f64>,
}

fn setup(kind: SchemeKind, config: ProblemConfig) -> Setup {
    let grid = make_grid(100, 1.0).unwrap();
    let scheme = SamplingScheme::default_for(kind, 1.0, 17);
    let clean = generate_data(&box_source(), &scheme, &config).unwrap();
    let data = apply_noise(&clean, &NoiseSpec { delta: 1e-4, seed: 23 });
    let kernel = assemble(data.points(), &grid, &scheme, &config).unwrap();
    Setup {
        kernel,
        data,
        f_true: discretize_source(&box_source(), &grid),
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn relative_error(f: &[f64], f_true: &[f64]) -> f64 {
    let diff: Vec<f64> = f.iter().zip(f_true).map(|(a, b)| a - b).collect();
    norm(&diff) / norm(f_true)
}

#[test]
fn tikhonov_minimizes_the_functional() {
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    for kind in SCHEMES {
        let s = setup(kind, ProblemConfig::default());
        let solver = TikhonovSolver::new(&s.kernel).unwrap();
        for alpha in [1e-10, 1e-6, 1e-3, 1.0] {
            let f = solver.solve(s.data.values(), alpha).unwrap();
            // f_α minimizes the functional at penalty weight α·h_s
            let weight = alpha * s.kernel.h_s();
            let best = functional_value(&s.kernel, f.values(), s.data.values(), weight).unwrap();
            let scale = norm(f.values()).max(1e-12);
            for probe in 0..100 {
                let eps = [1e-3, -1e-3, 1e-6, -1e-6][probe % 4] * scale;
                let direction: Vec<f64> = (0..f.len()).map(|_| rng.gen_range(-1.0..1.0)).collect();
                let dn = norm(&direction);
                let g: Vec<f64> = f
                    .values()
                    .iter()
                    .zip(&direction)
                    .map(|(a, d)| a + eps * d / dn)
                    .collect();
                let other = functional_value(&s.kernel, &g, s.data.values(), weight).unwrap();
                assert!(
                    best <= other * (1.0 + 1e-12),
                    "{kind} alpha {alpha} eps {eps:e}: {best:e} > {other:e}"
                );
            }
        }
    }
}

#[test]
fn normal_equations_hold() {
    for kind in SCHEMES {
        let s = setup(kind, ProblemConfig::default());
        let k = s.kernel.entries();
        let (h_i, h_s) = (s.kernel.h_i(), s.kernel.h_s());
        let u = nalgebra::DVector::from_column_slice(s.data.values());
        let rhs = k.tr_mul(&u) * h_i;
        let solver = TikhonovSolver::new(&s.kernel).unwrap();
        for alpha in [1e-8, 1e-5, 1e-2, 1.0] {
            let f = nalgebra::DVector::from_column_slice(solver.solve(s.data.values(), alpha).unwrap().values());
            let lhs = k.tr_mul(&(k * &f)) * (h_i * h_s) + &f * (alpha * h_s);
            let gap = (lhs - &rhs).norm();
            assert!(gap <= 1e-8 * rhs.norm(), "{kind} alpha {alpha}: {gap:e}");
        }
    }
}

#[test]
fn reconstruction_is_invariant_to_kernel_mode() {
    for kind in SCHEMES {
        let phys = setup(kind, ProblemConfig::default());
        let paper = setup(kind, ProblemConfig::default().with_mode(KernelMode::Paper));
        let ladder = LadderConfig::descent();
        let a = oracle_distance_rule(&phys.kernel, phys.data.values(), &phys.f_true, &ladder).unwrap();
        let b = oracle_distance_rule(&paper.kernel, paper.data.values(), &paper.f_true, &ladder).unwrap();
        // data halves and kernel halves, but the noise does not; errors stay comparable
        let ea = relative_error(a.chosen_reconstruction.values(), &phys.f_true);
        let eb = relative_error(b.chosen_reconstruction.values(), &paper.f_true);
        assert!(ea < 1.0 && eb < 1.0, "{kind}: {ea} vs {eb}");
    }
}

#[test]
fn naive_inversion_is_unusable_at_defaults() {
    for kind in SCHEMES {
        let s = setup(kind, ProblemConfig::default());
        let r = naive_reconstruct(&s.kernel, s.data.values()).unwrap();
        let err = if r.values().iter().all(|v| v.is_finite()) {
            relative_error(r.values(), &s.f_true)
        } else {
            f64::INFINITY
        };
        assert!(err > 1.0, "{kind}: {err}");
    }
}

#[test]
fn huge_alpha_suppresses_solution() {
    for kind in SCHEMES {
        let s = setup(kind, ProblemConfig::default());
        let small = tikhonov_reconstruct(&s.kernel, s.data.values(), 1e-6).unwrap();
        let huge = tikhonov_reconstruct(&s.kernel, s.data.values(), 1e12).unwrap();
        assert!(norm(huge.values()) < 1e-9 * norm(small.values()), "{kind}");
    }
}

#[test]
fn oracle_trace_contract() {
    for kind in SCHEMES {
        let s = setup(kind, ProblemConfig::default());
        let trace = oracle_distance_rule(&s.kernel, s.data.values(), &s.f_true, &LadderConfig::descent()).unwrap();
        assert_eq!(trace.status, RuleStatus::Converged);
        assert!(trace.chosen_alpha > 0.0);
        assert!(trace.steps.iter().all(|st| trace.chosen_objective <= st.objective));
        let chosen_err = relative_error(trace.chosen_reconstruction.values(), &s.f_true);
        for st in &trace.steps {
            let err = st.objective.sqrt() / norm(&s.f_true);
            assert!(chosen_err <= err * (1.0 + 1e-12));
        }
    }
}

#[test]
fn discrepancy_trace_contract() {
    for kind in SCHEMES {
        let s = setup(kind, ProblemConfig::default());
        let criterion = DiscrepancyCriterion::new(ResidualNorm::Rms, 1.0);
        let ladder = LadderConfig::ascent();
        let trace = discrepancy_rule(&s.kernel, s.data.values(), 1e-4, &criterion, &ladder).unwrap();
        assert_eq!(trace.status, RuleStatus::Converged, "{kind}");
        assert!(trace.chosen_objective < 1e-4);
        let last = trace.steps.last().unwrap();
        assert!((last.alpha - trace.chosen_alpha * ladder.factor).abs() <= 1e-12 * last.alpha);
        assert!(last.objective >= 1e-4);
        for w in trace.steps.windows(2) {
            assert!(
                w[1].objective >= w[0].objective * (1.0 - 1e-12),
                "{kind}: residual fell along the ladder"
            );
        }
    }
}

#[test]
fn clean_data_gives_small_discrepancy_alpha() {
    let s = setup(SchemeKind::FixedTime, ProblemConfig::default());
    let grid = make_grid(100, 1.0).unwrap();
    // consistent data: exactly in the range of the discrete operator
    let u: Vec<f64> = thermoinv::inversion::predict(&s.kernel, &discretize_source(&box_source(), &grid)).unwrap();
    let trace = discrepancy_rule(
        &s.kernel,
        &u,
        1e-9,
        &DiscrepancyCriterion::default(),
        &LadderConfig::ascent(),
    )
    .unwrap();
    assert!(trace.chosen_alpha < 1e-6, "{}", trace.chosen_alpha);
    assert!(trace.chosen_objective <= 1e-9);
}

#[test]
fn seminorm_and_residual_trade_off_along_alpha() {
    for kind in SCHEMES {
        let s = setup(kind, ProblemConfig::default());
        let solver = TikhonovSolver::new(&s.kernel).unwrap();
        let mut prev: Option<(f64, f64)> = None;
        let mut alpha = 1e-12;
        while alpha <= 1.0 {
            let f = solver.solve(s.data.values(), alpha).unwrap();
            let semi = solution_seminorm(&s.kernel, f.values()).unwrap();
            let res = weighted_residual(&s.kernel, f.values(), s.data.values()).unwrap();
            if let Some((ps, pr)) = prev {
                assert!(semi <= ps * (1.0 + 1e-12), "{kind} alpha {alpha}");
                assert!(res >= pr * (1.0 - 1e-12), "{kind} alpha {alpha}");
            }
            prev = Some((semi, res));
            alpha *= 2.0;
        }
    }
}
