use pmids::harness::{run_episode, run_experiment, ExperimentConfig};
use pmids::kernel::{
    kernel_decide, sample_kernel_observation, Feedback, KernelData, KernelGame, KernelSpec,
    KernelTruth,
};
use pmids::policy::Policy;
use pmids::{NoiseModel, PolicyKind};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn bandit_config(horizon: usize, reps: usize, seed: u64, policy: &str) -> ExperimentConfig {
    ExperimentConfig::from_json(&format!(
        r#"{{"game": {{"preset": "bandit", "actions": [[1, 0], [0, 1], [-0.5, 0.5]]}},
            "policy": "{policy}", "horizon": {horizon}, "reps": {reps}, "base_seed": {seed},
            "theta": [0.3, -0.1]}}"#
    ))
    .unwrap()
}

#[test]
fn single_rep_matches_episode() {
    let cfg = bandit_config(50, 1, 4, "ids_full");
    let result = run_experiment(&cfg).unwrap();
    assert_eq!(result.trajectories, vec![run_episode(&cfg, 0).unwrap()]);
    assert_eq!(
        result.summary.mean_final_regret,
        result.trajectories[0].final_regret()
    );
    assert_eq!(result.summary.checkpoints[2].std, 0.0);
}

#[test]
fn parallel_runs_merge_in_rep_order() {
    let cfg = bandit_config(30, 8, 5, "ids_directed");
    let result = run_experiment(&cfg).unwrap();
    for (rep, traj) in result.trajectories.iter().enumerate() {
        assert_eq!(traj.rep, rep);
        assert_eq!(traj, &run_episode(&cfg, rep).unwrap());
    }
    assert_eq!(
        run_experiment(&cfg).unwrap().trajectories,
        result.trajectories
    );
}

#[test]
fn checkpoint_means_ignore_rep_order() {
    let cfg = bandit_config(40, 6, 6, "ucb");
    let result = run_experiment(&cfg).unwrap();
    for cp in &result.summary.checkpoints {
        let mut finals: Vec<f64> = result
            .trajectories
            .iter()
            .map(|t| t.rounds[cp.t - 1].cum_regret)
            .collect();
        finals.reverse();
        let mean = finals.iter().sum::<f64>() / finals.len() as f64;
        assert!((mean - cp.mean).abs() < 1e-12);
    }
    assert_eq!(result.summary.action_counts.iter().sum::<usize>(), 40 * 6);
}

#[test]
fn kernel_gradient_game_gap_estimates_shrink() {
    let kernel = KernelSpec::Rbf { lengthscale: 1.0 };
    let ground: Vec<Vec<f64>> = (0..5).map(|i| vec![-1.0 + 0.5 * i as f64]).collect();
    let noise = NoiseModel::Gaussian { sigma: 0.1 };
    let game = KernelGame::from_ground(kernel, &ground, Feedback::Gradient, noise).unwrap();
    let truth = KernelTruth::new(kernel, vec![vec![0.3], vec![-0.6]], vec![1.0, -0.4]).unwrap();
    let policy = Policy::new(PolicyKind::IdsFull, 0.01).unwrap();
    let (n, reps) = (200, 4);
    let mut gaps = vec![0.0; n];
    for rep in 0..reps {
        let mut rng = ChaCha8Rng::seed_from_u64(rep);
        let mut data = KernelData::new(kernel).unwrap();
        for g in gaps.iter_mut() {
            let dec = kernel_decide(&policy, &data, &game).unwrap();
            *g += dec.expected_gap() / reps as f64;
            let action = &game.actions[dec.sample(&mut rng)];
            let obs = sample_kernel_observation(&truth, action, noise, &mut rng).unwrap();
            data.update(action, &obs).unwrap();
        }
    }
    let quarter = n / 4;
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    let blocks: Vec<f64> = gaps.chunks(quarter).map(mean).collect();
    assert!(blocks.windows(2).all(|w| w[1] < w[0]), "{blocks:?}");
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(12))]

    #[test]
    fn trajectories_are_consistent(
        horizon in 1usize..40,
        reps in 1usize..4,
        seed in any::<u64>(),
        policy in prop::sample::select(vec!["ids_full", "ids_directed", "ids_deterministic", "ucb", "greedy", "uniform"])
    ) {
        let cfg = bandit_config(horizon, reps, seed, policy);
        let result = run_experiment(&cfg).unwrap();
        prop_assert_eq!(result.trajectories.len(), reps);
        for traj in &result.trajectories {
            prop_assert_eq!(traj.rounds.len(), horizon);
            let mut cum = 0.0;
            for (k, r) in traj.rounds.iter().enumerate() {
                prop_assert_eq!(r.t, k + 1);
                prop_assert!(r.inst_regret >= 0.0);
                cum += r.inst_regret;
                prop_assert!((cum - r.cum_regret).abs() <= 1e-9);
                prop_assert!(r.info_gain >= 0.0);
            }
        }
        prop_assert_eq!(result.mean_cum_regret.len(), horizon);
    }
}
