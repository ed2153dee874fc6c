//! Linear partial monitoring games.
//!
//! A game is a finite list of reward vectors `x_i` in `R^d`, each paired with
//! an observation operator `A_i` of shape `d x m_i`. Playing action `i` under
//! the hidden parameter `theta` yields reward `<x_i, theta>` and a noisy
//! observation `A_i^T theta + noise`.

use std::sync::Arc;

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, operator_norm};

/// Slack allowed when re-checking the unit-norm bounds after rescaling.
pub const NORM_TOL: f64 = 1e-12;

/// Observation noise.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum NoiseModel {
    /// Independent `N(0, sigma^2)` noise on every observation coordinate.
    Gaussian { sigma: f64 },
    /// Observations in `{-1, +1}` whose mean is the noiseless coordinate.
    BinarySign,
}

impl Default for NoiseModel {
    fn default() -> Self {
        NoiseModel::Gaussian { sigma: 1.0 }
    }
}

impl NoiseModel {
    pub fn validate(&self) -> Result<()> {
        match *self {
            NoiseModel::Gaussian { sigma } if !(sigma >= 0.0 && sigma.is_finite()) => Err(
                Error::InvalidParameter(format!("gaussian sigma must be >= 0, got {sigma}")),
            ),
            _ => Ok(()),
        }
    }
}

/// A finite linear partial monitoring game.
#[derive(Debug, Clone)]
pub struct Game {
    dim: usize,
    actions: Vec<DVector<f64>>,
    obs_ops: Vec<DMatrix<f64>>,
    labels: Vec<String>,
    noise: NoiseModel,
    name: String,
    scale: f64,
}

impl Game {
    /// Builds a game from vectors that already satisfy the norm bounds.
    pub fn new(
        name: impl Into<String>,
        actions: Vec<DVector<f64>>,
        obs_ops: Vec<DMatrix<f64>>,
        noise: NoiseModel,
    ) -> Result<Self> {
        let game = Self::unchecked(name.into(), actions, obs_ops, noise, 1.0)?;
        game.check_invariants()?;
        Ok(game)
    }

    /// Builds a game, dividing every action and operator by one common factor
    /// when needed so that all norms and pairwise distances are at most one.
    pub fn rescaled(
        name: impl Into<String>,
        actions: Vec<DVector<f64>>,
        obs_ops: Vec<DMatrix<f64>>,
        noise: NoiseModel,
    ) -> Result<Self> {
        let mut game = Self::unchecked(name.into(), actions, obs_ops, noise, 1.0)?;
        let s = game.max_norm();
        if s > 1.0 {
            for x in &mut game.actions {
                *x /= s;
            }
            for a in &mut game.obs_ops {
                *a /= s;
            }
            game.scale = s;
            game.name = format!("{} [scale 1/{:.6}]", game.name, s);
        }
        game.check_invariants()?;
        Ok(game)
    }

    fn unchecked(
        name: String,
        actions: Vec<DVector<f64>>,
        obs_ops: Vec<DMatrix<f64>>,
        noise: NoiseModel,
        scale: f64,
    ) -> Result<Self> {
        if actions.is_empty() {
            return Err(Error::InvalidGame("action list is empty".into()));
        }
        if actions.len() != obs_ops.len() {
            return Err(Error::InvalidGame(format!(
                "{} actions but {} observation operators",
                actions.len(),
                obs_ops.len()
            )));
        }
        let dim = actions[0].len();
        if dim == 0 {
            return Err(Error::InvalidGame("dimension must be positive".into()));
        }
        for (i, (x, a)) in actions.iter().zip(&obs_ops).enumerate() {
            if x.len() != dim {
                return Err(Error::InvalidGame(format!(
                    "action {i} has dimension {} (expected {dim})",
                    x.len()
                )));
            }
            if a.nrows() != dim || a.ncols() == 0 {
                return Err(Error::InvalidGame(format!(
                    "operator {i} has shape {}x{} (expected {dim} rows, >= 1 column)",
                    a.nrows(),
                    a.ncols()
                )));
            }
        }
        noise.validate()?;
        let labels = (0..actions.len()).map(|i| format!("a{i}")).collect();
        Ok(Self {
            dim,
            actions,
            obs_ops,
            labels,
            noise,
            name,
            scale,
        })
    }

    fn max_norm(&self) -> f64 {
        let mut s = 0.0_f64;
        for x in &self.actions {
            s = s.max(x.norm());
        }
        for a in &self.obs_ops {
            s = s.max(operator_norm(a));
        }
        for (i, x) in self.actions.iter().enumerate() {
            for y in &self.actions[i + 1..] {
                s = s.max((x - y).norm());
            }
        }
        s
    }

    /// Checks the boundedness assumptions.
    pub fn check_invariants(&self) -> Result<()> {
        for (i, x) in self.actions.iter().enumerate() {
            if x.norm() > 1.0 + NORM_TOL {
                return Err(Error::InvalidGame(format!("|x_{i}| = {} > 1", x.norm())));
            }
        }
        for (i, a) in self.obs_ops.iter().enumerate() {
            let n = operator_norm(a);
            if n > 1.0 + NORM_TOL {
                return Err(Error::InvalidGame(format!("|A_{i}| = {n} > 1")));
            }
        }
        for (i, x) in self.actions.iter().enumerate() {
            for (j, y) in self.actions.iter().enumerate().skip(i + 1) {
                let dist = (x - y).norm();
                if dist > 1.0 + NORM_TOL {
                    return Err(Error::InvalidGame(format!("|x_{i} - x_{j}| = {dist} > 1")));
                }
            }
        }
        Ok(())
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Result<Self> {
        noise.validate()?;
        self.noise = noise;
        Ok(self)
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        check_dim(self.actions.len(), labels.len(), "action labels")?;
        self.labels = labels;
        Ok(self)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }

    pub fn action(&self, i: usize) -> &DVector<f64> {
        &self.actions[i]
    }

    pub fn actions(&self) -> &[DVector<f64>] {
        &self.actions
    }

    pub fn operator(&self, i: usize) -> &DMatrix<f64> {
        &self.obs_ops[i]
    }

    pub fn operators(&self) -> &[DMatrix<f64>] {
        &self.obs_ops
    }

    /// Number of observation coordinates of action `i`.
    pub fn obs_dim(&self, i: usize) -> usize {
        self.obs_ops[i].ncols()
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn noise(&self) -> NoiseModel {
        self.noise
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    /// Common factor every action and operator was divided by.
    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn reward(&self, i: usize, theta: &DVector<f64>) -> f64 {
        self.actions[i].dot(theta)
    }

    /// `argmax_x <x, theta>` with the lowest index winning ties.
    pub fn best_action(&self, theta: &DVector<f64>) -> usize {
        let rewards: Vec<f64> = self.actions.iter().map(|x| x.dot(theta)).collect();
        linalg::argmax(&rewards)
    }

    /// Instantaneous regret `<x* - x_i, theta>`.
    pub fn regret(&self, i: usize, theta: &DVector<f64>) -> f64 {
        let best = self.best_action(theta);
        (self.reward(best, theta) - self.reward(i, theta)).max(0.0)
    }
}

/// Variant of the laser alignment preset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LaserVariant {
    /// Intensity actions observe their own reward; screen actions observe the
    /// grid and earn nothing.
    Invasive,
    /// Only the screen actions produce observations.
    Transductive,
}

/// Named game constructors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "preset", rename_all = "snake_case", deny_unknown_fields)]
pub enum PresetSpec {
    /// Bandit feedback, `A_x = x`.
    Bandit { actions: Vec<Vec<f64>> },
    /// Full information, `A_x = I`.
    FullInfo { actions: Vec<Vec<f64>> },
    /// All ordered pairs of ground actions with the average reward and the
    /// difference observed.
    DuelingAvg { ground_actions: Vec<Vec<f64>> },
    /// Exploration-only actions (zero reward) and target actions (no
    /// observation); vectors in both sets get bandit feedback.
    Transductive {
        explore_set: Vec<Vec<f64>>,
        target_set: Vec<Vec<f64>>,
    },
    /// Every multiset of `batch_size` ground actions, reward the sum and the
    /// stacked bandit observations.
    Batch {
        ground_actions: Vec<Vec<f64>>,
        batch_size: usize,
    },
    /// The laser alignment example.
    Laser {
        grid_m: usize,
        variant: LaserVariant,
    },
    /// No action produces information.
    ZeroInfo { actions: Vec<Vec<f64>> },
    /// `num_points` equally spaced bandit actions on the unit circle.
    Circle { num_points: usize },
    /// Explicit reward vectors with operators given as lists of columns.
    Custom {
        actions: Vec<Vec<f64>>,
        operators: Vec<Vec<Vec<f64>>>,
    },
}

fn vectors(raw: &[Vec<f64>], what: &str) -> Result<Vec<DVector<f64>>> {
    if raw.is_empty() {
        return Err(Error::InvalidGame(format!("{what}: empty action list")));
    }
    let d = raw[0].len();
    if d == 0 {
        return Err(Error::InvalidGame(format!(
            "{what}: zero-dimensional action"
        )));
    }
    raw.iter()
        .map(|v| {
            if v.len() != d {
                Err(Error::InvalidGame(format!(
                    "{what}: mixed action dimensions {d} and {}",
                    v.len()
                )))
            } else {
                Ok(DVector::from_column_slice(v))
            }
        })
        .collect()
}

fn column(x: &DVector<f64>) -> DMatrix<f64> {
    DMatrix::from_column_slice(x.len(), 1, x.as_slice())
}

/// Builds a game from a preset. Noise defaults to unit Gaussian; use
/// [`Game::with_noise`] to change it.
pub fn build_game(preset: &PresetSpec) -> Result<Game> {
    let noise = NoiseModel::default();
    match preset {
        PresetSpec::Bandit { actions } => {
            let xs = vectors(actions, "bandit")?;
            let ops = xs.iter().map(column).collect();
            Game::rescaled("bandit", xs, ops, noise)
        }
        PresetSpec::FullInfo { actions } => {
            let xs = vectors(actions, "full_info")?;
            let d = xs[0].len();
            let ops = xs.iter().map(|_| DMatrix::identity(d, d)).collect();
            Game::rescaled("full_info", xs, ops, noise)
        }
        PresetSpec::DuelingAvg { ground_actions } => {
            let ground = vectors(ground_actions, "dueling_avg")?;
            let mut xs = Vec::new();
            let mut ops = Vec::new();
            let mut labels = Vec::new();
            for (i, a) in ground.iter().enumerate() {
                for (j, b) in ground.iter().enumerate() {
                    xs.push((a + b) * 0.5);
                    ops.push(column(&(a - b)));
                    labels.push(format!("pair({i},{j})"));
                }
            }
            Game::rescaled("dueling_avg", xs, ops, noise)?.with_labels(labels)
        }
        PresetSpec::Transductive {
            explore_set,
            target_set,
        } => {
            let explore = vectors(explore_set, "transductive explore_set")?;
            let target = vectors(target_set, "transductive target_set")?;
            check_dim(explore[0].len(), target[0].len(), "transductive sets")?;
            let d = explore[0].len();
            let mut xs = Vec::new();
            let mut ops = Vec::new();
            let mut labels = Vec::new();
            for (i, s) in explore.iter().enumerate() {
                if target.contains(s) {
                    xs.push(s.clone());
                    labels.push(format!("both{i}"));
                } else {
                    xs.push(DVector::zeros(d));
                    labels.push(format!("explore{i}"));
                }
                ops.push(column(s));
            }
            for (i, v) in target.iter().enumerate() {
                if !explore.contains(v) {
                    xs.push(v.clone());
                    ops.push(DMatrix::zeros(d, 1));
                    labels.push(format!("target{i}"));
                }
            }
            Game::rescaled("transductive", xs, ops, noise)?.with_labels(labels)
        }
        PresetSpec::Batch {
            ground_actions,
            batch_size,
        } => {
            if *batch_size < 1 {
                return Err(Error::InvalidGame("batch size must be >= 1".into()));
            }
            let ground = vectors(ground_actions, "batch")?;
            let d = ground[0].len();
            let mut xs = Vec::new();
            let mut ops = Vec::new();
            let mut labels = Vec::new();
            for combo in multisets(ground.len(), *batch_size) {
                let mut sum = DVector::zeros(d);
                let mut op = DMatrix::zeros(d, combo.len());
                for (c, &g) in combo.iter().enumerate() {
                    sum += &ground[g];
                    op.set_column(c, &ground[g]);
                }
                xs.push(sum);
                ops.push(op);
                labels.push(format!("batch{combo:?}"));
            }
            Game::rescaled("batch", xs, ops, noise)?.with_labels(labels)
        }
        PresetSpec::Laser { grid_m, variant } => laser_game(*grid_m, *variant),
        PresetSpec::ZeroInfo { actions } => {
            let xs = vectors(actions, "zero_info")?;
            let d = xs[0].len();
            let ops = xs.iter().map(|_| DMatrix::zeros(d, 1)).collect();
            Game::rescaled("zero_info", xs, ops, noise)
        }
        PresetSpec::Circle { num_points } => {
            if *num_points < 1 {
                return Err(Error::InvalidGame("circle needs at least one point".into()));
            }
            let xs: Vec<DVector<f64>> = (0..*num_points)
                .map(|k| {
                    let a = 2.0 * std::f64::consts::PI * k as f64 / *num_points as f64;
                    DVector::from_vec(vec![a.cos(), a.sin()])
                })
                .collect();
            let ops = xs.iter().map(column).collect();
            Game::rescaled("circle", xs, ops, noise)
        }
        PresetSpec::Custom { actions, operators } => {
            let xs = vectors(actions, "custom")?;
            let d = xs[0].len();
            if operators.len() != xs.len() {
                return Err(Error::InvalidGame(format!(
                    "custom: {} actions but {} operators",
                    xs.len(),
                    operators.len()
                )));
            }
            let ops = operators
                .iter()
                .enumerate()
                .map(|(i, cols)| {
                    if cols.is_empty() {
                        return Err(Error::InvalidGame(format!(
                            "custom: operator {i} has no columns"
                        )));
                    }
                    let cols = vectors(cols, "custom operator")?;
                    check_dim(d, cols[0].len(), "custom operator rows")?;
                    Ok(DMatrix::from_columns(&cols))
                })
                .collect::<Result<Vec<_>>>()?;
            Game::rescaled("custom", xs, ops, noise)
        }
    }
}

/// Non-decreasing index tuples of length `k` over `0..n`.
fn multisets(n: usize, k: usize) -> Vec<Vec<usize>> {
    fn rec(n: usize, k: usize, start: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(n, k, i, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(n, k, 0, &mut Vec::with_capacity(k), &mut out);
    out
}

// Laser preset: radial-basis features with centers on a 5x5 grid over
// [-2, 2]^2, lengthscale 1. Shifts are the 8 unit moves followed by "stay";
// the target square for shift s is [s1, s1 + 1] x [s2, s2 + 1].

const LASER_LENGTHSCALE: f64 = 1.0;
const LASER_QUADRATURE: usize = 5;

/// Shifts in action order: 8 unit moves, then stay.
pub const LASER_SHIFTS: [(i32, i32); 9] = [
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, -1),
    (0, 1),
    (1, -1),
    (1, 0),
    (1, 1),
    (0, 0),
];

/// Dimension of the laser feature embedding.
pub const LASER_DIM: usize = 25;

fn laser_centers() -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(LASER_DIM);
    for i in -2..=2 {
        for j in -2..=2 {
            out.push((i as f64, j as f64));
        }
    }
    out
}

/// Radial-basis feature vector of a point on the plane.
pub fn laser_features(z: (f64, f64)) -> DVector<f64> {
    let two_l2 = 2.0 * LASER_LENGTHSCALE * LASER_LENGTHSCALE;
    DVector::from_iterator(
        LASER_DIM,
        laser_centers().into_iter().map(|(c1, c2)| {
            let r2 = (z.0 - c1).powi(2) + (z.1 - c2).powi(2);
            (-r2 / two_l2).exp()
        }),
    )
}

/// Midpoints of an `m x m` grid inside the unit square at `shift`.
/// Coordinates are formed as integer ratios so that mirrored squares produce
/// exactly mirrored points.
fn square_grid(shift: (i32, i32), m: usize) -> Vec<(f64, f64)> {
    let denom = 2.0 * m as f64;
    let mut pts = Vec::with_capacity(m * m);
    for a in 0..m {
        for b in 0..m {
            let p1 = (2 * m as i64 * shift.0 as i64 + 2 * a as i64 + 1) as f64 / denom;
            let p2 = (2 * m as i64 * shift.1 as i64 + 2 * b as i64 + 1) as f64 / denom;
            pts.push((p1, p2));
        }
    }
    pts
}

/// The true laser intensity on the plane.
pub fn laser_intensity(z: (f64, f64)) -> f64 {
    (-((z.0 - 0.5).powi(2) + (z.1 - 0.5).powi(2))).exp()
}

/// Reward vector of the intensity action at `shift`: midpoint quadrature of
/// the features over the unit target square.
pub fn laser_reward_vector(shift: (i32, i32)) -> DVector<f64> {
    let pts = square_grid(shift, LASER_QUADRATURE);
    let w = 1.0 / pts.len() as f64;
    pts.into_iter().fold(DVector::zeros(LASER_DIM), |acc, p| {
        acc + laser_features(p) * w
    })
}

fn laser_game(grid_m: usize, variant: LaserVariant) -> Result<Game> {
    if grid_m < 1 {
        return Err(Error::InvalidGame("laser grid_m must be >= 1".into()));
    }
    let mut xs = Vec::new();
    let mut ops = Vec::new();
    let mut labels = Vec::new();
    for &s in &LASER_SHIFTS {
        let x = laser_reward_vector(s);
        ops.push(match variant {
            LaserVariant::Invasive => column(&x),
            LaserVariant::Transductive => DMatrix::zeros(LASER_DIM, 1),
        });
        xs.push(x);
        labels.push(format!("intensity({},{})", s.0, s.1));
    }
    for &s in &LASER_SHIFTS {
        let cols: Vec<_> = square_grid(s, grid_m)
            .into_iter()
            .map(laser_features)
            .collect();
        xs.push(DVector::zeros(LASER_DIM));
        ops.push(DMatrix::from_columns(&cols));
        labels.push(format!("screen({},{})", s.0, s.1));
    }
    let name = match variant {
        LaserVariant::Invasive => "laser-invasive",
        LaserVariant::Transductive => "laser-transductive",
    };
    Game::rescaled(name, xs, ops, NoiseModel::default())?.with_labels(labels)
}

/// Whether a laser action index is a screen (grid) measurement.
pub fn laser_is_screen(index: usize) -> bool {
    index >= LASER_SHIFTS.len()
}

/// Feature-space parameter whose linear model approximates the true
/// intensity: ridge fit on a dense grid over [-1.5, 2.5]^2, rescaled to unit
/// norm if larger.
pub fn laser_truth() -> DVector<f64> {
    let n = 41;
    let mut gram = DMatrix::<f64>::identity(LASER_DIM, LASER_DIM) * 1e-3;
    let mut rhs = DVector::zeros(LASER_DIM);
    for a in 0..n {
        for b in 0..n {
            let z = (
                -1.5 + 4.0 * a as f64 / (n - 1) as f64,
                -1.5 + 4.0 * b as f64 / (n - 1) as f64,
            );
            let phi = laser_features(z);
            gram += &phi * phi.transpose();
            rhs += &phi * laser_intensity(z);
        }
    }
    let theta = gram
        .cholesky()
        .expect("regularized gram matrix is positive definite")
        .solve(&rhs);
    let norm = theta.norm();
    if norm > 1.0 {
        theta / norm
    } else {
        theta
    }
}

/// A game together with the hidden parameter.
#[derive(Debug, Clone)]
pub struct Environment {
    pub game: Arc<Game>,
    pub theta: DVector<f64>,
    pub rng_seed: u64,
}

impl Environment {
    pub fn new(game: Arc<Game>, theta: DVector<f64>, rng_seed: u64) -> Result<Self> {
        check_dim(game.dim(), theta.len(), "theta")?;
        if theta.norm() > 1.0 + NORM_TOL {
            return Err(Error::InvalidParameter(format!(
                "|theta| = {} exceeds 1",
                theta.norm()
            )));
        }
        Ok(Self {
            game,
            theta,
            rng_seed,
        })
    }

    pub fn best_action(&self) -> usize {
        self.game.best_action(&self.theta)
    }

    pub fn regret(&self, i: usize) -> f64 {
        self.game.regret(i, &self.theta)
    }
}

/// Draws `A_i^T theta + noise` for action `action_index`.
pub fn sample_observation<R: Rng + ?Sized>(
    env: &Environment,
    action_index: usize,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let game = &env.game;
    if action_index >= game.num_actions() {
        return Err(Error::InvalidParameter(format!(
            "action index {action_index} out of range (0..{})",
            game.num_actions()
        )));
    }
    let mean = game.operator(action_index).tr_mul(&env.theta);
    match game.noise() {
        NoiseModel::Gaussian { sigma } => Ok(mean.map(|mu| {
            let eps: f64 = rng.sample(StandardNormal);
            mu + sigma * eps
        })),
        NoiseModel::BinarySign => {
            if let Some(mu) = mean.iter().find(|mu| mu.abs() > 1.0 + 1e-9) {
                return Err(Error::InvalidParameter(format!(
                    "binary-sign noise needs |A^T theta| <= 1, got {mu}"
                )));
            }
            Ok(mean.map(|mu| {
                let p_plus = ((1.0 + mu) / 2.0).clamp(0.0, 1.0);
                if rng.random::<f64>() < p_plus {
                    1.0
                } else {
                    -1.0
                }
            }))
        }
    }
}
