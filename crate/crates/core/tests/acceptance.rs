//! End-to-end acceptance checks. Runs as a plain binary so that every
//! criterion prints its PASS/FAIL line. A criterion that errors aborts the
//! run; with `PMIDS_ACCEPTANCE_STRICT=1` any FAIL also exits nonzero.

use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use pmids::classifier::{
    alignment_upper, classify, dueling_pair_bound, is_globally_observable, is_locally_observable,
    Regime,
};
use pmids::contextual::{conditional_ids, contextual_ids, joint_ratio, ContextualGame};
use pmids::game::{laser_is_screen, sample_observation, LaserVariant};
use pmids::harness::{run_experiment, run_sweep, ExperimentConfig};
use pmids::kernel::{gradient_blocks, Functional, KernelAction, KernelData, KernelSpec};
use pmids::linalg::operator_norm;
use pmids::policy::{
    decide, info_gain_directed, info_gain_full, relaxed_deterministic_action, ucb_action, Policy,
};
use pmids::{
    build_game, Environment, Error, EstimatorState, Game, NoiseModel, PolicyKind, PresetSpec,
};

type Check = fn() -> Outcome;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: String) -> Outcome {
    Outcome { pass, detail }
}

fn gaussian(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn uniform_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Random game with zero, bandit and random operators.
fn random_game(rng: &mut ChaCha8Rng, d: usize, k: usize) -> Game {
    let actions: Vec<Vec<f64>> = (0..k).map(|_| uniform_vec(rng, d)).collect();
    let operators = actions
        .iter()
        .map(|x| match rng.random_range(0..3) {
            0 => vec![vec![0.0; d]],
            1 => vec![x.clone()],
            _ => (0..rng.random_range(1..=2))
                .map(|_| uniform_vec(rng, d))
                .collect(),
        })
        .collect();
    build_game(&PresetSpec::Custom { actions, operators }).unwrap()
}

fn random_history(rng: &mut ChaCha8Rng, game: &Game, steps: usize) -> EstimatorState {
    let mut state = EstimatorState::new(game.dim()).unwrap();
    for _ in 0..steps {
        let i = rng.random_range(0..game.num_actions());
        let obs = DVector::from_fn(game.obs_dim(i), |_, _| gaussian(rng));
        state.update(game.operator(i), &obs).unwrap();
    }
    state
}

fn config(
    game: PresetSpec,
    policy: PolicyKind,
    horizon: usize,
    reps: usize,
    theta: serde_json::Value,
    noise: Option<f64>,
) -> ExperimentConfig {
    let mut doc = serde_json::json!({
        "game": game,
        "policy": policy,
        "horizon": horizon,
        "reps": reps,
        "base_seed": 20240501u64,
        "theta": theta,
    });
    if let Some(sigma) = noise {
        doc["noise"] = serde_json::json!({"kind": "gaussian", "sigma": sigma});
    }
    ExperimentConfig::from_json(&doc.to_string()).unwrap()
}

fn observer_game() -> PresetSpec {
    PresetSpec::Custom {
        actions: vec![vec![1.0], vec![-1.0], vec![0.0]],
        operators: vec![vec![vec![0.0]], vec![vec![0.0]], vec![vec![1.0]]],
    }
}

fn regime(preset: &PresetSpec) -> Regime {
    classify(&build_game(preset).unwrap()).unwrap().regime
}

/// Exponent over `[n/2, n]` of the largest horizon, and the slope of the
/// final mean regret across horizons.
fn sweep_exponents(cfg: &ExperimentConfig) -> (f64, f64) {
    let sweep = run_sweep(cfg, &[500, 1000, 2000, 4000]).unwrap();
    let window = sweep
        .summaries
        .last()
        .unwrap()
        .regret_exponent
        .unwrap_or(f64::NAN);
    (window, sweep.exponent.unwrap_or(f64::NAN))
}

fn criterion_rate_separation() -> Outcome {
    let start = Instant::now();
    let mut pass = true;
    let mut parts = Vec::new();
    let observer_regime = regime(&observer_game());
    pass &= observer_regime == Regime::NTwoThirds;
    parts.push(format!("observer regime {observer_regime:?}"));
    for theta in [0.05, -0.05] {
        let cfg = config(
            observer_game(),
            PolicyKind::IdsFull,
            500,
            20,
            serde_json::json!([theta]),
            Some(0.3),
        );
        let (window, across) = sweep_exponents(&cfg);
        let ok = (0.50..=0.85).contains(&window);
        pass &= ok;
        parts.push(format!("observer theta {theta:+}: exponent {window:.3} (across horizons {across:.3}) want [0.50, 0.85]"));
    }
    let bandit = PresetSpec::Bandit {
        actions: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
    };
    let bandit_regime = regime(&bandit);
    pass &= bandit_regime == Regime::SqrtN;
    // actions are rescaled by 1/sqrt(2); this theta gives a gap of 0.1
    let c = 0.1 / 2f64.sqrt();
    let cfg = config(
        bandit,
        PolicyKind::IdsFull,
        500,
        20,
        serde_json::json!([c, -c]),
        Some(0.3),
    );
    let (window, across) = sweep_exponents(&cfg);
    let ok = (0.30..=0.70).contains(&window);
    pass &= ok;
    parts.push(format!("bandit regime {bandit_regime:?}, exponent {window:.3} (across horizons {across:.3}) want [0.30, 0.70]"));
    let secs = start.elapsed().as_secs_f64();
    pass &= secs <= 300.0;
    parts.push(format!("{secs:.1}s"));
    outcome(pass, parts.join("; "))
}

fn criterion_classification() -> Outcome {
    let cases = [
        (
            "duplicate pair",
            PresetSpec::Bandit {
                actions: vec![vec![0.5, 0.2], vec![0.5, 0.2]],
            },
            Regime::Trivial,
        ),
        (
            "bandit pair",
            PresetSpec::Bandit {
                actions: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            },
            Regime::SqrtN,
        ),
        (
            "zero-info pair",
            PresetSpec::ZeroInfo {
                actions: vec![vec![1.0, 0.0], vec![0.0, 1.0]],
            },
            Regime::Hopeless,
        ),
        ("observer game", observer_game(), Regime::NTwoThirds),
    ];
    let mut pass = true;
    let mut parts = Vec::new();
    for (name, preset, want) in cases {
        let got = regime(&preset);
        pass &= got == want;
        parts.push(format!("{name} {got:?}"));
    }
    outcome(pass, parts.join(", "))
}

fn criterion_laser() -> Outcome {
    let start = Instant::now();
    let laser = |variant| PresetSpec::Laser { grid_m: 5, variant };
    let truth = serde_json::json!("laser-truth");
    let run = |variant, policy| {
        run_experiment(&config(
            laser(variant),
            policy,
            3000,
            10,
            truth.clone(),
            None,
        ))
        .unwrap()
        .summary
    };
    let invasive_ucb = run(LaserVariant::Invasive, PolicyKind::Ucb);
    let screens: usize = invasive_ucb
        .action_counts
        .iter()
        .enumerate()
        .filter(|(i, _)| laser_is_screen(*i))
        .map(|(_, c)| c)
        .sum();
    let ucb = run(LaserVariant::Transductive, PolicyKind::Ucb)
        .regret_exponent
        .unwrap_or(f64::NAN);
    let ids = run(LaserVariant::Transductive, PolicyKind::IdsFull);
    let ids_exp = ids.regret_exponent.unwrap_or(f64::NAN);
    let secs = start.elapsed().as_secs_f64();
    let pass = screens == 0 && ucb >= 0.9 && ids_exp <= 0.85 && secs <= 600.0;
    outcome(
        pass,
        format!(
            "invasive ucb screen plays {screens}; transductive ucb exponent {ucb:.3} (want >= 0.9), ids exponent {ids_exp:.3} (want <= 0.85, final regret {:.2}); {secs:.1}s",
            ids.mean_final_regret
        ),
    )
}

fn criterion_lemma_suite() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let n = 1000;
    let (mut support, mut lemma4, mut directed, mut gamma, mut local) = (0, 0, 0, 0, 0);
    let mut informative = 0;
    for _ in 0..n {
        let d = rng.random_range(1..=4);
        let k = rng.random_range(2..=6);
        let game = random_game(&mut rng, d, k);
        let steps = rng.random_range(0..=30);
        let state = random_history(&mut rng, &game, steps);
        let delta = rng.random_range(0.01..1.0);

        for kind in [PolicyKind::IdsFull, PolicyKind::IdsDirected] {
            let dec = decide(&Policy::new(kind, delta).unwrap(), &state, &game).unwrap();
            if dec.support.len() > 2 {
                support += 1;
            }
            if !dec.fallback {
                informative += 1;
                let min_gap = dec.gaps.iter().cloned().fold(f64::INFINITY, f64::min);
                if dec.expected_gap() > 2.0 * min_gap + 1e-9 {
                    lemma4 += 1;
                }
            }
        }

        let i = rng.random_range(0..k);
        let w = DVector::from_fn(d, |_, _| gaussian(&mut rng));
        let full = info_gain_full(&state, game.operator(i)).unwrap();
        match info_gain_directed(&state, game.operator(i), &w) {
            Ok(dir) if dir > full + 1e-9 => directed += 1,
            _ => {}
        }

        let m = (0..k).map(|z| game.obs_dim(z)).max().unwrap() as f64;
        let bound = d as f64 * (1.0 + steps as f64 * m / d as f64).ln();
        if state.total_info_gain() > bound + 1e-9 {
            gamma += 1;
        }

        if is_locally_observable(&game).unwrap() && !is_globally_observable(&game).unwrap() {
            local += 1;
        }
    }
    let violations = support + lemma4 + directed + gamma + local;
    outcome(
        violations == 0,
        format!(
            "{n} instances: support>2 {support}, gap of mixture {lemma4} ({informative} informative decisions), directed>full {directed}, total gain bound {gamma}, local-not-global {local}"
        ),
    )
}

fn criterion_ucb_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 500;
    let mut mismatches = 0;
    for _ in 0..n {
        let d = rng.random_range(1..=5);
        let k = rng.random_range(2..=8);
        let actions = (0..k).map(|_| uniform_vec(&mut rng, d)).collect();
        let game = build_game(&PresetSpec::Bandit { actions }).unwrap();
        let steps = rng.random_range(0..=30);
        let state = random_history(&mut rng, &game, steps);
        let beta = state.beta_radius(rng.random_range(0.01..1.0)).unwrap();
        if relaxed_deterministic_action(&state, &game, beta) != ucb_action(&state, &game, beta) {
            mismatches += 1;
        }
    }
    outcome(
        mismatches == 0,
        format!("{n} bandit instances, {mismatches} mismatches"),
    )
}

fn finite_difference_blocks(
    kernel: &KernelSpec,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> (DMatrix<f64>, DVector<f64>) {
    let d = x.len();
    let h = 1e-4;
    let e = |i: usize| DVector::from_fn(d, |r, _| if r == i { h } else { 0.0 });
    let cross = DVector::from_fn(d, |i, _| {
        (kernel.k(x, &(y + e(i))) - kernel.k(x, &(y - e(i)))) / (2.0 * h)
    });
    let block = DMatrix::from_fn(d, d, |i, j| {
        let f = |sx: f64, sy: f64| kernel.k(&(x + e(j) * sx), &(y + e(i) * sy));
        (f(1.0, 1.0) - f(1.0, -1.0) - f(-1.0, 1.0) + f(-1.0, -1.0)) / (4.0 * h * h)
    });
    (block, cross)
}

fn criterion_kernel_consistency() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut worst_linear = 0.0_f64;
    for _ in 0..100 {
        let d = rng.random_range(1..=5);
        let t = rng.random_range(0..=30);
        let mut data = KernelData::new(KernelSpec::Linear).unwrap();
        let mut est = EstimatorState::new(d).unwrap();
        for _ in 0..t {
            let x = uniform_vec(&mut rng, d);
            let x: Vec<f64> = x.iter().map(|v| v / d as f64).collect();
            let y = gaussian(&mut rng);
            let action = KernelAction {
                reward: Functional::eval(DVector::from_column_slice(&x)),
                observe: vec![Functional::eval(DVector::from_column_slice(&x))],
                label: String::new(),
            };
            data.update(&action, &DVector::from_element(1, y)).unwrap();
            est.update(
                &DMatrix::from_column_slice(d, 1, &x),
                &DVector::from_element(1, y),
            )
            .unwrap();
        }
        let q = DVector::from_column_slice(&uniform_vec(&mut rng, d));
        let delta = rng.random_range(0.01..1.0);
        let (mean, var) = data.posterior(&Functional::eval(q.clone())).unwrap();
        let action = KernelAction {
            reward: Functional::eval(q.clone()),
            observe: vec![Functional::eval(q.clone())],
            label: String::new(),
        };
        let op = DMatrix::from_column_slice(d, 1, q.as_slice());
        let diffs = [
            mean - q.dot(est.theta_hat()),
            var - est.weighted_norm(&q).unwrap().powi(2),
            data.beta(delta).unwrap() - est.beta_radius(delta).unwrap(),
            data.info_gain(&action).unwrap() - info_gain_full(&est, &op).unwrap(),
        ];
        worst_linear = diffs.iter().fold(worst_linear, |w, v| w.max(v.abs()));
    }
    let mut worst_fd = 0.0_f64;
    for _ in 0..100 {
        let d = rng.random_range(1..=3);
        let kernel = KernelSpec::Rbf {
            lengthscale: rng.random_range(0.5..2.0),
        };
        let x = DVector::from_column_slice(&uniform_vec(&mut rng, d));
        let y = DVector::from_column_slice(&uniform_vec(&mut rng, d));
        let (block, cross) = gradient_blocks(&kernel, &x, &y);
        let (fb, fc) = finite_difference_blocks(&kernel, &x, &y);
        worst_fd = worst_fd
            .max((block - fb).abs().max())
            .max((cross - fc).abs().max());
    }
    outcome(
        worst_linear <= 1e-8 && worst_fd <= 1e-5,
        format!("linear kernel max deviation {worst_linear:.2e} over 100 histories; gradient blocks max deviation {worst_fd:.2e} over 100 pairs"),
    )
}

fn criterion_alignment() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut worst_bandit = 0.0_f64;
    for _ in 0..200 {
        let d = rng.random_range(1..=4);
        let k = rng.random_range(2..=6);
        let actions = (0..k).map(|_| uniform_vec(&mut rng, d)).collect();
        let game = build_game(&PresetSpec::Bandit { actions }).unwrap();
        let size = rng.random_range(2..=k);
        let mut subset: Vec<usize> = (0..k).collect();
        for i in (1..k).rev() {
            subset.swap(i, rng.random_range(0..=i));
        }
        subset.truncate(size);
        subset.sort();
        worst_bandit = worst_bandit.max(alignment_upper(&game, &subset));
    }
    let mut worst_dueling = 0.0_f64;
    for _ in 0..50 {
        let d = rng.random_range(1..=3);
        let ground = rng.random_range(2..=4);
        let ground_actions = (0..ground).map(|_| uniform_vec(&mut rng, d)).collect();
        let game = build_game(&PresetSpec::DuelingAvg { ground_actions }).unwrap();
        let mut pair = || (rng.random_range(0..ground), rng.random_range(0..ground));
        let (first, second) = (pair(), pair());
        worst_dueling =
            worst_dueling.max(dueling_pair_bound(&game, ground, first, second).unwrap());
    }
    outcome(
        worst_bandit <= 4.0 + 1e-6 && worst_dueling <= 1.0 + 1e-6,
        format!("bandit subsets max {worst_bandit:.6} (want <= 4); dueling pairs max {worst_dueling:.6} (want <= 1)"),
    )
}

fn criterion_coverage() -> Outcome {
    let game = Arc::new(
        build_game(&PresetSpec::Circle { num_points: 8 })
            .unwrap()
            .with_noise(NoiseModel::Gaussian { sigma: 1.0 })
            .unwrap(),
    );
    let delta = 0.1;
    let policy = Policy::new(PolicyKind::IdsFull, delta).unwrap();
    let episodes = 500;
    let mut covered = 0;
    for ep in 0..episodes {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        rng.set_stream(ep as u64);
        let dir = DVector::from_fn(2, |_, _| gaussian(&mut rng)).normalize();
        let theta = dir * rng.random_range(0.0..1.0);
        let env = Environment::new(game.clone(), theta.clone(), ep as u64).unwrap();
        let mut state = EstimatorState::new(2).unwrap();
        let mut ok = true;
        for _ in 0..100 {
            let dec = decide(&policy, &state, &game).unwrap();
            let i = dec.sample(&mut rng);
            let obs = sample_observation(&env, i, &mut rng).unwrap();
            state.update(game.operator(i), &obs).unwrap();
            if state.confidence_distance(&theta).unwrap() > state.beta_radius(delta).unwrap() {
                ok = false;
                break;
            }
        }
        covered += ok as usize;
    }
    let rate = covered as f64 / episodes as f64;
    outcome(
        rate >= 0.85,
        format!(
            "{covered}/{episodes} episodes covered ({:.1}%, want >= 85%)",
            100.0 * rate
        ),
    )
}

fn criterion_contextual_dominance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let n = 200;
    let (mut dominance, mut descent, mut no_info) = (0, 0, 0);
    for _ in 0..n {
        let d = 2;
        let contexts: Vec<Arc<Game>> = (0..rng.random_range(2..=3))
            .map(|_| {
                let k = rng.random_range(2..=4);
                Arc::new(random_game(&mut rng, d, k))
            })
            .collect();
        let raw: Vec<f64> = contexts
            .iter()
            .map(|_| rng.random_range(0.05..1.0))
            .collect();
        let total: f64 = raw.iter().sum();
        let nu: Vec<f64> = raw.iter().map(|v| v / total).collect();
        let cgame = ContextualGame::new(contexts, nu.clone()).unwrap();
        let mut state = EstimatorState::new(d).unwrap();
        for _ in 0..rng.random_range(0..=20) {
            let g = cgame.context(rng.random_range(0..cgame.num_contexts()));
            let i = rng.random_range(0..g.num_actions());
            let obs = DVector::from_fn(g.obs_dim(i), |_, _| gaussian(&mut rng));
            state.update(g.operator(i), &obs).unwrap();
        }
        let delta = rng.random_range(0.01..1.0);
        let conditional: Vec<_> = (0..cgame.num_contexts())
            .map(|z| conditional_ids(&state, &cgame, z, delta).unwrap())
            .collect();
        let baseline = joint_ratio(&nu, &conditional);
        match contextual_ids(&state, &cgame, delta) {
            Ok(plan) => {
                if plan.joint_ratio > baseline {
                    dominance += 1;
                }
                if plan.sweep_ratios.windows(2).any(|w| w[1] > w[0]) {
                    descent += 1;
                }
            }
            Err(Error::NoInformation) => {
                no_info += 1;
                if baseline.is_finite() {
                    dominance += 1;
                }
            }
            Err(e) => panic!("contextual plan failed: {e}"),
        }
    }
    outcome(
        dominance + descent == 0,
        format!("{n} instances ({no_info} without information): dominance violations {dominance}, descent violations {descent}"),
    )
}

fn main() -> ExitCode {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let g = random_game(&mut rng, 3, 4);
    assert!(g
        .operators()
        .iter()
        .all(|a| operator_norm(a) <= 1.0 + 1e-12));

    let criteria: [(&str, Check); 9] = [
        ("rate separation", criterion_rate_separation),
        ("classification", criterion_classification),
        ("laser experiment", criterion_laser),
        ("lemma invariants", criterion_lemma_suite),
        ("ucb equivalence", criterion_ucb_equivalence),
        ("kernel consistency", criterion_kernel_consistency),
        ("alignment bounds", criterion_alignment),
        ("confidence coverage", criterion_coverage),
        ("contextual dominance", criterion_contextual_dominance),
    ];
    let mut failed = 0;
    for (k, (name, check)) in criteria.iter().enumerate() {
        let result = check();
        let verdict = if result.pass { "PASS" } else { "FAIL" };
        println!("criterion {} ({name}): {verdict}: {}", k + 1, result.detail);
        failed += !result.pass as usize;
    }
    println!(
        "acceptance: {} of {} criteria passed",
        criteria.len() - failed,
        criteria.len()
    );
    let strict = std::env::var("PMIDS_ACCEPTANCE_STRICT").is_ok_and(|v| v == "1");
    if failed > 0 && strict {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
