//! Kernelized partial monitoring.
//!
//! Rewards and observations are linear functionals of an unknown function in
//! a reproducing kernel Hilbert space. A functional is a finite combination of
//! point evaluations and partial derivatives, which is enough for bandit,
//! dueling and gradient feedback.

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{check_dim, Error, Result};
use crate::game::NoiseModel;
use crate::linalg;
use crate::policy::{info_ratio, min_ratio_pair, Policy, PolicyDecision, PolicyKind};

/// Negative variances above this are rounding noise and clamp to zero.
pub const VARIANCE_FLOOR: f64 = -1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum KernelSpec {
    Linear,
    /// `exp(-|x - y|^2 / (2 l^2))`, so `k(x, x) = 1`.
    Rbf {
        lengthscale: f64,
    },
}

impl KernelSpec {
    pub fn validate(&self) -> Result<()> {
        match *self {
            KernelSpec::Rbf { lengthscale } if !(lengthscale > 0.0 && lengthscale.is_finite()) => {
                Err(Error::InvalidParameter(format!(
                    "lengthscale must be positive, got {lengthscale}"
                )))
            }
            _ => Ok(()),
        }
    }

    pub fn k(&self, x: &DVector<f64>, y: &DVector<f64>) -> f64 {
        match *self {
            KernelSpec::Linear => x.dot(y),
            KernelSpec::Rbf { lengthscale } => {
                (-(x - y).norm_squared() / (2.0 * lengthscale * lengthscale)).exp()
            }
        }
    }

    /// `d/dy_i k(x, y)`.
    pub fn d_second(&self, x: &DVector<f64>, y: &DVector<f64>, i: usize) -> f64 {
        match *self {
            KernelSpec::Linear => x[i],
            KernelSpec::Rbf { lengthscale } => {
                self.k(x, y) * (x[i] - y[i]) / (lengthscale * lengthscale)
            }
        }
    }

    /// `d^2 / (dx_j dy_i) k(x, y)`.
    pub fn d_both(&self, x: &DVector<f64>, y: &DVector<f64>, j: usize, i: usize) -> f64 {
        match *self {
            KernelSpec::Linear => {
                if i == j {
                    1.0
                } else {
                    0.0
                }
            }
            KernelSpec::Rbf { lengthscale } => {
                let l2 = lengthscale * lengthscale;
                let delta = if i == j { 1.0 / l2 } else { 0.0 };
                self.k(x, y) * (delta - (x[j] - y[j]) * (x[i] - y[i]) / (l2 * l2))
            }
        }
    }

    fn cov_atoms(&self, a: &Atom, b: &Atom) -> f64 {
        match (a, b) {
            (Atom::Eval(x), Atom::Eval(y)) => self.k(x, y),
            (Atom::Eval(x), Atom::Partial(y, i)) => self.d_second(x, y, *i),
            (Atom::Partial(x, j), Atom::Eval(y)) => self.d_second(y, x, *j),
            (Atom::Partial(x, j), Atom::Partial(y, i)) => self.d_both(x, y, *j, *i),
        }
    }

    /// Prior covariance of two functionals.
    pub fn cov(&self, a: &Functional, b: &Functional) -> f64 {
        let mut total = 0.0;
        for (ca, ta) in &a.terms {
            for (cb, tb) in &b.terms {
                total += ca * cb * self.cov_atoms(ta, tb);
            }
        }
        total
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Atom {
    /// `f(x)`
    Eval(DVector<f64>),
    /// `d f / d x_i` at `x`
    Partial(DVector<f64>, usize),
}

/// Finite linear combination of atoms.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Functional {
    pub terms: Vec<(f64, Atom)>,
}

impl Functional {
    pub fn eval(x: DVector<f64>) -> Self {
        Self {
            terms: vec![(1.0, Atom::Eval(x))],
        }
    }

    pub fn partial(x: DVector<f64>, i: usize) -> Self {
        Self {
            terms: vec![(1.0, Atom::Partial(x, i))],
        }
    }

    pub fn scaled(mut self, c: f64) -> Self {
        for (w, _) in &mut self.terms {
            *w *= c;
        }
        self
    }

    pub fn plus(mut self, other: &Functional) -> Self {
        self.terms.extend(other.terms.iter().cloned());
        self
    }

    pub fn minus(self, other: &Functional) -> Self {
        self.plus(&other.clone().scaled(-1.0))
    }
}

/// An action: its reward functional and the functionals it observes.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelAction {
    pub reward: Functional,
    pub observe: Vec<Functional>,
    pub label: String,
}

/// A finite kernelized game.
#[derive(Debug, Clone)]
pub struct KernelGame {
    pub kernel: KernelSpec,
    pub actions: Vec<KernelAction>,
    pub noise: NoiseModel,
    pub name: String,
}

/// Observation model of a kernel game built on ground points.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Feedback {
    /// Observe `f(x)`.
    Value,
    /// Observe only the gradient of `f` at `x`.
    Gradient,
    /// Pairs `(x, x')` with reward `(f(x) + f(x')) / 2` observing
    /// `f(x) - f(x')`.
    Dueling,
}

impl KernelGame {
    pub fn from_ground(
        kernel: KernelSpec,
        ground: &[Vec<f64>],
        feedback: Feedback,
        noise: NoiseModel,
    ) -> Result<Self> {
        kernel.validate()?;
        noise.validate()?;
        if ground.is_empty() {
            return Err(Error::InvalidGame("kernel game needs ground points".into()));
        }
        let d = ground[0].len();
        if d == 0 || ground.iter().any(|g| g.len() != d) {
            return Err(Error::InvalidGame(
                "ground points must share a positive dimension".into(),
            ));
        }
        let pts: Vec<DVector<f64>> = ground
            .iter()
            .map(|g| DVector::from_column_slice(g))
            .collect();
        let mut actions = Vec::new();
        match feedback {
            Feedback::Value => {
                for (i, x) in pts.iter().enumerate() {
                    actions.push(KernelAction {
                        reward: Functional::eval(x.clone()),
                        observe: vec![Functional::eval(x.clone())],
                        label: format!("x{i}"),
                    });
                }
            }
            Feedback::Gradient => {
                for (i, x) in pts.iter().enumerate() {
                    actions.push(KernelAction {
                        reward: Functional::eval(x.clone()),
                        observe: (0..d).map(|k| Functional::partial(x.clone(), k)).collect(),
                        label: format!("x{i}"),
                    });
                }
            }
            Feedback::Dueling => {
                for (i, x) in pts.iter().enumerate() {
                    for (j, y) in pts.iter().enumerate() {
                        let fx = Functional::eval(x.clone());
                        let fy = Functional::eval(y.clone());
                        actions.push(KernelAction {
                            reward: fx.clone().plus(&fy).scaled(0.5),
                            observe: vec![fx.minus(&fy)],
                            label: format!("pair({i},{j})"),
                        });
                    }
                }
            }
        }
        let name = match feedback {
            Feedback::Value => "kernel-bandit",
            Feedback::Gradient => "kernel-gradient",
            Feedback::Dueling => "kernel-dueling",
        };
        Ok(Self {
            kernel,
            actions,
            noise,
            name: name.into(),
        })
    }

    pub fn num_actions(&self) -> usize {
        self.actions.len()
    }
}

/// `f = sum_i c_i k(., z_i)` with RKHS norm at most one.
#[derive(Debug, Clone)]
pub struct KernelTruth {
    kernel: KernelSpec,
    centers: Vec<DVector<f64>>,
    weights: Vec<f64>,
}

impl KernelTruth {
    /// Rescales the weights so that `|f|_H <= 1`.
    pub fn new(kernel: KernelSpec, centers: Vec<Vec<f64>>, weights: Vec<f64>) -> Result<Self> {
        kernel.validate()?;
        check_dim(centers.len(), weights.len(), "truth weights")?;
        if centers.is_empty() {
            return Err(Error::InvalidParameter(
                "truth needs at least one center".into(),
            ));
        }
        let centers: Vec<DVector<f64>> = centers
            .iter()
            .map(|c| DVector::from_column_slice(c))
            .collect();
        let mut norm2 = 0.0;
        for (a, ca) in centers.iter().zip(&weights) {
            for (b, cb) in centers.iter().zip(&weights) {
                norm2 += ca * cb * kernel.k(a, b);
            }
        }
        let norm = norm2.max(0.0).sqrt();
        let weights = if norm > 1.0 {
            weights.iter().map(|w| w / norm).collect()
        } else {
            weights
        };
        Ok(Self {
            kernel,
            centers,
            weights,
        })
    }

    pub fn rkhs_norm(&self) -> f64 {
        let f = self.as_functional_of_centers();
        self.kernel.cov(&f, &f).max(0.0).sqrt()
    }

    fn as_functional_of_centers(&self) -> Functional {
        Functional {
            terms: self
                .centers
                .iter()
                .zip(&self.weights)
                .map(|(c, &w)| (w, Atom::Eval(c.clone())))
                .collect(),
        }
    }

    /// Value of a functional applied to the truth.
    pub fn apply(&self, l: &Functional) -> f64 {
        self.kernel.cov(l, &self.as_functional_of_centers())
    }
}

/// Kernel ridge posterior over the observed functionals.
#[derive(Debug, Clone)]
pub struct KernelData {
    kernel: KernelSpec,
    history: Vec<Functional>,
    obs: DVector<f64>,
    gram: DMatrix<f64>,
    chol: DMatrix<f64>,
    alpha: DVector<f64>,
    logdet: f64,
}

impl KernelData {
    pub fn new(kernel: KernelSpec) -> Result<Self> {
        kernel.validate()?;
        Ok(Self {
            kernel,
            history: Vec::new(),
            obs: DVector::zeros(0),
            gram: DMatrix::zeros(0, 0),
            chol: DMatrix::zeros(0, 0),
            alpha: DVector::zeros(0),
            logdet: 0.0,
        })
    }

    pub fn kernel(&self) -> KernelSpec {
        self.kernel
    }

    pub fn len(&self) -> usize {
        self.history.len()
    }

    pub fn is_empty(&self) -> bool {
        self.history.is_empty()
    }

    /// The block kernel matrix `K_t`.
    pub fn gram(&self) -> &DMatrix<f64> {
        &self.gram
    }

    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    /// Appends the observation `obs` of `action`. The Cholesky factor of
    /// `K + I` is extended block-wise.
    pub fn update(&mut self, action: &KernelAction, obs: &DVector<f64>) -> Result<()> {
        check_dim(action.observe.len(), obs.len(), "kernel observation")?;
        let n = self.history.len();
        let m = action.observe.len();
        let cross = DMatrix::from_fn(n, m, |r, c| {
            self.kernel.cov(&self.history[r], &action.observe[c])
        });
        let block = DMatrix::from_fn(m, m, |r, c| {
            self.kernel.cov(&action.observe[r], &action.observe[c])
        });

        let l21t = if n > 0 {
            self.chol
                .solve_lower_triangular(&cross)
                .ok_or_else(|| Error::Numerical("singular kernel factor".into()))?
        } else {
            DMatrix::zeros(0, m)
        };
        let mut schur = &block + DMatrix::identity(m, m) - l21t.transpose() * &l21t;
        schur = (&schur + schur.transpose()) * 0.5;
        let l22 = schur
            .cholesky()
            .ok_or_else(|| Error::Numerical("kernel matrix lost positive definiteness".into()))?
            .l();

        let mut chol = DMatrix::zeros(n + m, n + m);
        chol.view_mut((0, 0), (n, n)).copy_from(&self.chol);
        chol.view_mut((n, 0), (m, n)).copy_from(&l21t.transpose());
        chol.view_mut((n, n), (m, m)).copy_from(&l22);
        self.logdet += 2.0 * l22.diagonal().iter().map(|v| v.ln()).sum::<f64>();
        self.chol = chol;

        let mut gram = DMatrix::zeros(n + m, n + m);
        gram.view_mut((0, 0), (n, n)).copy_from(&self.gram);
        gram.view_mut((0, n), (n, m)).copy_from(&cross);
        gram.view_mut((n, 0), (m, n)).copy_from(&cross.transpose());
        gram.view_mut((n, n), (m, m)).copy_from(&block);
        self.gram = gram;

        self.history.extend(action.observe.iter().cloned());
        let mut all = DVector::zeros(n + m);
        all.rows_mut(0, n).copy_from(&self.obs);
        all.rows_mut(n, m).copy_from(obs);
        self.obs = all;
        self.alpha = self.solve(&self.obs.clone())?;
        Ok(())
    }

    /// `(K + I)^{-1} v`.
    fn solve(&self, v: &DVector<f64>) -> Result<DVector<f64>> {
        let y = self
            .chol
            .solve_lower_triangular(v)
            .ok_or_else(|| Error::Numerical("singular kernel factor".into()))?;
        self.chol
            .tr_solve_lower_triangular(&y)
            .ok_or_else(|| Error::Numerical("singular kernel factor".into()))
    }

    fn cross_vector(&self, l: &Functional) -> DVector<f64> {
        DVector::from_fn(self.history.len(), |r, _| {
            self.kernel.cov(&self.history[r], l)
        })
    }

    /// `L^{-1} k_t(l)` where `L L^T = K + I`.
    fn whitened(&self, l: &Functional) -> DVector<f64> {
        let k = self.cross_vector(l);
        if k.is_empty() {
            return k;
        }
        self.chol
            .solve_lower_triangular(&k)
            .expect("factor has a positive diagonal")
    }

    pub fn mean(&self, l: &Functional) -> f64 {
        self.cross_vector(l).dot(&self.alpha)
    }

    /// Posterior covariance of two functionals.
    pub fn cross_cov(&self, a: &Functional, b: &Functional) -> f64 {
        self.kernel.cov(a, b) - self.whitened(a).dot(&self.whitened(b))
    }

    /// Posterior mean and variance of `l`.
    pub fn posterior(&self, l: &Functional) -> Result<(f64, f64)> {
        let var = clamp_variance(self.cross_cov(l, l))?;
        Ok((self.mean(l), var))
    }

    /// `sqrt(log det(K + I) + 2 log(1/delta)) + 1`.
    pub fn beta(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1], got {delta}"
            )));
        }
        Ok((self.logdet + 2.0 * (1.0 / delta).ln()).max(0.0).sqrt() + 1.0)
    }

    /// `log det(I + Sigma_t)` where `Sigma_t` is the posterior covariance of
    /// the functionals observed by `action`.
    pub fn info_gain(&self, action: &KernelAction) -> Result<f64> {
        let white: Vec<DVector<f64>> = action.observe.iter().map(|l| self.whitened(l)).collect();
        info_gain_from(&self.kernel, action, &white)
    }
}

fn clamp_variance(v: f64) -> Result<f64> {
    if v >= 0.0 {
        Ok(v)
    } else if v >= VARIANCE_FLOOR {
        Ok(0.0)
    } else {
        Err(Error::Numerical(format!("negative posterior variance {v}")))
    }
}

fn info_gain_from(
    kernel: &KernelSpec,
    action: &KernelAction,
    white: &[DVector<f64>],
) -> Result<f64> {
    let m = action.observe.len();
    let mut mat = DMatrix::from_fn(m, m, |r, c| {
        kernel.cov(&action.observe[r], &action.observe[c]) - white[r].dot(&white[c])
    });
    mat = (&mat + mat.transpose()) * 0.5;
    for r in 0..m {
        mat[(r, r)] += 1.0;
    }
    let value = match linalg::spd_logdet(&mat) {
        Ok(v) => v,
        Err(_) => {
            return Err(Error::Numerical(
                "information gain determinant is not positive".into(),
            ))
        }
    };
    if value < VARIANCE_FLOOR {
        return Err(Error::Numerical(format!(
            "negative information gain {value}"
        )));
    }
    Ok(value.max(0.0))
}

/// Per-round quantities for every action of a game.
struct Snapshot {
    means: Vec<f64>,
    prior: DMatrix<f64>,
    white: Vec<DVector<f64>>,
}

impl Snapshot {
    fn new(data: &KernelData, game: &KernelGame) -> Self {
        let k = game.num_actions();
        let rewards: Vec<&Functional> = game.actions.iter().map(|a| &a.reward).collect();
        let means = rewards.iter().map(|r| data.mean(r)).collect();
        let prior = DMatrix::from_fn(k, k, |i, j| game.kernel.cov(rewards[i], rewards[j]));
        let white = rewards.iter().map(|r| data.whitened(r)).collect();
        Self {
            means,
            prior,
            white,
        }
    }

    /// Posterior variance of `f_y - f_x` on the reward functionals.
    fn diff_var(&self, x: usize, y: usize) -> Result<f64> {
        let prior = self.prior[(y, y)] + self.prior[(x, x)] - 2.0 * self.prior[(x, y)];
        let w = if self.white[x].is_empty() {
            0.0
        } else {
            (&self.white[y] - &self.white[x]).norm_squared()
        };
        clamp_variance(prior - w)
    }

    fn var(&self, x: usize) -> Result<f64> {
        let w = self.white[x].norm_squared();
        clamp_variance(self.prior[(x, x)] - w)
    }

    fn gap(&self, beta: f64, x: usize) -> Result<f64> {
        let mut best = 0.0_f64;
        for y in 0..self.means.len() {
            let v = self.means[y] - self.means[x] + beta * self.diff_var(x, y)?.sqrt();
            best = best.max(v);
        }
        Ok(best.min(1.0))
    }
}

/// Truncated gap estimate of action `x` among the game's actions.
pub fn kernel_gap(data: &KernelData, game: &KernelGame, beta_sqrt: f64, x: usize) -> Result<f64> {
    Snapshot::new(data, game).gap(beta_sqrt, x)
}

pub fn kernel_gaps(data: &KernelData, game: &KernelGame, beta_sqrt: f64) -> Result<Vec<f64>> {
    let snap = Snapshot::new(data, game);
    (0..game.num_actions())
        .map(|x| snap.gap(beta_sqrt, x))
        .collect()
}

pub fn kernel_info_gain(data: &KernelData, action: &KernelAction) -> Result<f64> {
    data.info_gain(action)
}

pub fn kernel_beta(data: &KernelData, delta: f64) -> Result<f64> {
    data.beta(delta)
}

/// Decision of `policy` on a kernel game.
pub fn kernel_decide(
    policy: &Policy,
    data: &KernelData,
    game: &KernelGame,
) -> Result<PolicyDecision> {
    let beta = data.beta(policy.delta)?;
    let snap = Snapshot::new(data, game);
    let k = game.num_actions();
    let gaps = (0..k)
        .map(|x| snap.gap(beta, x))
        .collect::<Result<Vec<_>>>()?;
    let full = |data: &KernelData| -> Result<Vec<f64>> {
        game.actions.iter().map(|a| data.info_gain(a)).collect()
    };
    let point = |i: usize, gaps: Vec<f64>, infos: Vec<f64>, fallback: bool| PolicyDecision {
        support: vec![i],
        probs: vec![1.0],
        ratio: info_ratio(gaps[i], infos[i]),
        gaps,
        infos,
        fallback,
    };
    let mixture = |gaps: Vec<f64>, infos: Vec<f64>| -> Result<PolicyDecision> {
        match min_ratio_pair(&gaps, &infos) {
            Ok(m) => {
                let (support, probs) = m.distribution();
                Ok(PolicyDecision {
                    support,
                    probs,
                    gaps,
                    infos,
                    ratio: m.ratio,
                    fallback: false,
                })
            }
            Err(Error::NoInformation) => {
                let i = linalg::argmin(&gaps);
                Ok(point(i, gaps, infos, true))
            }
            Err(e) => Err(e),
        }
    };
    match policy.kind {
        PolicyKind::IdsFull => mixture(gaps, full(data)?),
        PolicyKind::IdsDirected => {
            let infos = directed_infos(data, game, &snap, beta)?;
            mixture(gaps, infos)
        }
        PolicyKind::IdsDeterministic => {
            let infos = full(data)?;
            let ratios: Vec<f64> = gaps
                .iter()
                .zip(&infos)
                .map(|(&g, &i)| info_ratio(g, i))
                .collect();
            if ratios.iter().all(|r| r.is_infinite()) {
                let i = linalg::argmin(&gaps);
                return Ok(point(i, gaps, infos, true));
            }
            Ok(point(linalg::argmin(&ratios), gaps, infos, false))
        }
        PolicyKind::Ucb => {
            let scores = (0..k)
                .map(|x| Ok(snap.means[x] + beta * snap.var(x)?.sqrt()))
                .collect::<Result<Vec<_>>>()?;
            Ok(point(linalg::argmax(&scores), gaps, full(data)?, false))
        }
        PolicyKind::Greedy => Ok(point(linalg::argmax(&snap.means), gaps, full(data)?, false)),
        PolicyKind::Uniform => {
            let infos = full(data)?;
            let p = 1.0 / k as f64;
            Ok(PolicyDecision {
                support: (0..k).collect(),
                probs: vec![p; k],
                ratio: info_ratio(gaps.iter().sum::<f64>() * p, infos.iter().sum::<f64>() * p),
                gaps,
                infos,
                fallback: false,
            })
        }
    }
}

/// Directed gains towards the most uncertain difference among plausible
/// maximizers.
fn directed_infos(
    data: &KernelData,
    game: &KernelGame,
    snap: &Snapshot,
    beta: f64,
) -> Result<Vec<f64>> {
    let k = game.num_actions();
    let mut plausible = Vec::new();
    for x in 0..k {
        let mut ok = true;
        for y in 0..k {
            if snap.means[y] - snap.means[x] - beta * snap.diff_var(x, y)?.sqrt() > 0.0 {
                ok = false;
                break;
            }
        }
        if ok {
            plausible.push(x);
        }
    }
    let mut best: Option<(f64, usize, usize)> = None;
    for (a, &x) in plausible.iter().enumerate() {
        for &y in &plausible[a + 1..] {
            let v = snap.diff_var(x, y)?;
            if v > 0.0 && best.is_none_or(|(b, _, _)| v > b) {
                best = Some((v, x, y));
            }
        }
    }
    let Some((var_w, x, y)) = best else {
        return Ok(vec![0.0; k]);
    };
    let w = game.actions[x]
        .reward
        .clone()
        .minus(&game.actions[y].reward);
    game.actions
        .iter()
        .map(|a| {
            let m = a.observe.len();
            let white: Vec<DVector<f64>> = a.observe.iter().map(|l| data.whitened(l)).collect();
            let mut sigma = DMatrix::from_fn(m, m, |r, c| {
                game.kernel.cov(&a.observe[r], &a.observe[c]) - white[r].dot(&white[c])
            });
            sigma = (&sigma + sigma.transpose()) * 0.5;
            for r in 0..m {
                sigma[(r, r)] += 1.0;
            }
            let c = DVector::from_fn(m, |r, _| data.cross_cov(&a.observe[r], &w));
            let chol = sigma.cholesky().ok_or_else(|| {
                Error::Numerical("observation covariance is not positive definite".into())
            })?;
            let q = c.dot(&chol.solve(&c));
            let frac = (q / var_w).clamp(0.0, 1.0);
            Ok((-(1.0 - frac).ln()).max(0.0))
        })
        .collect()
}

/// Draws `L f + noise` for every observed functional of `action`.
pub fn sample_kernel_observation<R: Rng + ?Sized>(
    truth: &KernelTruth,
    action: &KernelAction,
    noise: NoiseModel,
    rng: &mut R,
) -> Result<DVector<f64>> {
    let mean = DVector::from_iterator(
        action.observe.len(),
        action.observe.iter().map(|l| truth.apply(l)),
    );
    match noise {
        NoiseModel::Gaussian { sigma } => Ok(mean.map(|mu| {
            let e: f64 = rng.sample(StandardNormal);
            mu + sigma * e
        })),
        NoiseModel::BinarySign => {
            if let Some(mu) = mean.iter().find(|mu| mu.abs() > 1.0 + 1e-9) {
                return Err(Error::InvalidParameter(format!(
                    "binary-sign noise needs |mean| <= 1, got {mu}"
                )));
            }
            Ok(mean.map(|mu| {
                if rng.random::<f64>() < ((1.0 + mu) / 2.0).clamp(0.0, 1.0) {
                    1.0
                } else {
                    -1.0
                }
            }))
        }
    }
}

/// Covariance of the observations of dueling pairs `a = (x, x')` and
/// `b = (z, z')`, together with the covariances of `f(x)` and `f(x')` with
/// the observation of `b`.
pub fn dueling_blocks(
    kernel: &KernelSpec,
    pair_a: (&DVector<f64>, &DVector<f64>),
    pair_b: (&DVector<f64>, &DVector<f64>),
) -> (f64, [f64; 2]) {
    let (x, xp) = pair_a;
    let (z, zp) = pair_b;
    let block = kernel.k(x, z) - kernel.k(x, zp) - kernel.k(xp, z) + kernel.k(xp, zp);
    let cross = [
        kernel.k(x, z) - kernel.k(x, zp),
        kernel.k(xp, z) - kernel.k(xp, zp),
    ];
    (block, cross)
}

/// Covariance of the gradients at `x` and `y` (entry `(i, j)` is
/// `d^2 k / (dy_i dx_j)`) and the covariances of `f(x)` with the gradient at
/// `y` (entry `i` is `d k(x, y) / dy_i`).
pub fn gradient_blocks(
    kernel: &KernelSpec,
    x: &DVector<f64>,
    y: &DVector<f64>,
) -> (DMatrix<f64>, DVector<f64>) {
    let d = x.len();
    let block = DMatrix::from_fn(d, d, |i, j| kernel.d_both(x, y, j, i));
    let cross = DVector::from_fn(d, |i, _| kernel.d_second(x, y, i));
    (block, cross)
}
