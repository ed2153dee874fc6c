//! Regularized least-squares estimate of the hidden parameter.

use nalgebra::{DMatrix, DVector};

use crate::error::{check_dim, Error, Result};

/// `V = I + sum A A^T`, `b = sum A obs`, `theta_hat = V^{-1} b`.
#[derive(Debug, Clone)]
pub struct EstimatorState {
    v: DMatrix<f64>,
    v_inv: DMatrix<f64>,
    b: DVector<f64>,
    theta_hat: DVector<f64>,
    t: usize,
    logdet: f64,
}

impl EstimatorState {
    pub fn new(dim: usize) -> Result<Self> {
        if dim < 1 {
            return Err(Error::InvalidParameter(
                "estimator dimension must be >= 1".into(),
            ));
        }
        Ok(Self {
            v: DMatrix::identity(dim, dim),
            v_inv: DMatrix::identity(dim, dim),
            b: DVector::zeros(dim),
            theta_hat: DVector::zeros(dim),
            t: 0,
            logdet: 0.0,
        })
    }

    pub fn dim(&self) -> usize {
        self.b.len()
    }

    /// Adds one observation `obs` made through operator `a` (shape `d x m`).
    pub fn update(&mut self, a: &DMatrix<f64>, obs: &DVector<f64>) -> Result<()> {
        check_dim(self.dim(), a.nrows(), "operator rows")?;
        check_dim(a.ncols(), obs.len(), "observation length")?;
        self.t += 1;
        if a.iter().all(|&v| v == 0.0) {
            return Ok(());
        }
        self.v += a * a.transpose();
        // keep V exactly symmetric
        self.v = (&self.v + self.v.transpose()) * 0.5;
        self.b += a * obs;
        self.refresh()
    }

    fn refresh(&mut self) -> Result<()> {
        let chol = self
            .v
            .clone()
            .cholesky()
            .ok_or_else(|| Error::Numerical("Gram matrix lost positive definiteness".into()))?;
        self.logdet = 2.0
            * chol
                .l_dirty()
                .diagonal()
                .iter()
                .map(|x| x.ln())
                .sum::<f64>();
        self.theta_hat = chol.solve(&self.b);
        self.v_inv = chol.inverse();
        Ok(())
    }

    pub fn gram(&self) -> &DMatrix<f64> {
        &self.v
    }

    pub fn gram_inverse(&self) -> &DMatrix<f64> {
        &self.v_inv
    }

    pub fn b(&self) -> &DVector<f64> {
        &self.b
    }

    pub fn theta_hat(&self) -> &DVector<f64> {
        &self.theta_hat
    }

    pub fn rounds(&self) -> usize {
        self.t
    }

    pub fn logdet(&self) -> f64 {
        self.logdet
    }

    /// `sqrt(log det V + 2 log(1/delta)) + 1`.
    pub fn beta_radius(&self, delta: f64) -> Result<f64> {
        if !(delta > 0.0 && delta <= 1.0) {
            return Err(Error::InvalidParameter(format!(
                "delta must lie in (0, 1], got {delta}"
            )));
        }
        Ok((self.logdet + 2.0 * (1.0 / delta).ln()).max(0.0).sqrt() + 1.0)
    }

    /// `|w|_{V^{-1}}`.
    pub fn weighted_norm(&self, w: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), w.len(), "weighted_norm argument")?;
        Ok(self.weighted_norm_sq(w).sqrt())
    }

    pub(crate) fn weighted_norm_sq(&self, w: &DVector<f64>) -> f64 {
        w.dot(&(&self.v_inv * w)).max(0.0)
    }

    /// `log det V_t - log det V_0`.
    pub fn total_info_gain(&self) -> f64 {
        self.logdet
    }

    /// `|theta_hat - theta|_V`, the quantity bounded by the confidence radius.
    pub fn confidence_distance(&self, theta: &DVector<f64>) -> Result<f64> {
        check_dim(self.dim(), theta.len(), "theta")?;
        let e = &self.theta_hat - theta;
        Ok(e.dot(&(&self.v * &e)).max(0.0).sqrt())
    }
}

/// Starts an estimator in dimension `dim`.
pub fn init_estimator(dim: usize) -> Result<EstimatorState> {
    EstimatorState::new(dim)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::spd_logdet;
    use proptest::prelude::*;

    fn col(x: &[f64]) -> DMatrix<f64> {
        DMatrix::from_column_slice(x.len(), 1, x)
    }

    fn obs(x: f64) -> DVector<f64> {
        DVector::from_element(1, x)
    }

    #[test]
    fn init_is_identity() {
        assert!(EstimatorState::new(0).is_err());
        for d in [1, 2, 25] {
            let s = EstimatorState::new(d).unwrap();
            assert_eq!(s.gram(), &DMatrix::identity(d, d));
            assert_eq!(s.theta_hat().norm(), 0.0);
            assert_eq!(s.logdet(), 0.0);
            assert_eq!(s.rounds(), 0);
        }
    }

    #[test]
    fn single_and_double_update() {
        let mut s = EstimatorState::new(2).unwrap();
        s.update(&col(&[1.0, 0.0]), &obs(1.0)).unwrap();
        // 2x2 closed-form inverse of diag(2, 1) applied to (1, 0)
        let v = s.gram();
        let det = v[(0, 0)] * v[(1, 1)] - v[(0, 1)] * v[(1, 0)];
        let inv00 = v[(1, 1)] / det;
        assert!((s.theta_hat()[0] - inv00 * 1.0).abs() < 1e-12);
        assert!((s.theta_hat()[0] - 0.5).abs() < 1e-12);
        assert_eq!(s.theta_hat()[1], 0.0);
        s.update(&col(&[1.0, 0.0]), &obs(1.0)).unwrap();
        assert!((s.theta_hat()[0] - 2.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn zero_operator_only_advances_round() {
        let mut s = EstimatorState::new(2).unwrap();
        s.update(&DMatrix::zeros(2, 1), &obs(3.0)).unwrap();
        assert_eq!(s.rounds(), 1);
        assert_eq!(s.gram(), &DMatrix::identity(2, 2));
        assert_eq!(s.b().norm(), 0.0);
    }

    #[test]
    fn dimension_checks() {
        let mut s = EstimatorState::new(2).unwrap();
        assert!(s.update(&col(&[1.0]), &obs(1.0)).is_err());
        assert!(s.update(&col(&[1.0, 0.0]), &DVector::zeros(2)).is_err());
        assert!(s.weighted_norm(&DVector::zeros(3)).is_err());
    }

    #[test]
    fn beta_values() {
        let mut s = EstimatorState::new(2).unwrap();
        assert_eq!(s.beta_radius(1.0).unwrap(), 1.0);
        let b = s.beta_radius((-1.0f64).exp()).unwrap();
        assert!((b - (2f64.sqrt() + 1.0)).abs() < 1e-12);
        s.update(&col(&[1.0, 0.0]), &obs(0.0)).unwrap();
        let b = s.beta_radius(1.0).unwrap();
        assert!((b - (2f64.ln().sqrt() + 1.0)).abs() < 1e-12);
        assert!((b - 1.83255).abs() < 1e-5);
        assert!(s.beta_radius(0.0).is_err());
        assert!(s.beta_radius(1.5).is_err());
    }

    #[test]
    fn weighted_norm_values() {
        let mut s = EstimatorState::new(2).unwrap();
        let e1 = DVector::from_vec(vec![1.0, 0.0]);
        assert_eq!(s.weighted_norm(&e1).unwrap(), 1.0);
        s.update(&col(&[3f64.sqrt(), 0.0]), &obs(0.0)).unwrap();
        assert!((s.weighted_norm(&e1).unwrap() - 0.5).abs() < 1e-12);
        assert_eq!(s.weighted_norm(&DVector::zeros(2)).unwrap(), 0.0);
    }

    #[test]
    fn total_info_gain_values() {
        let mut s = EstimatorState::new(2).unwrap();
        assert_eq!(s.total_info_gain(), 0.0);
        s.update(&col(&[1.0, 0.0]), &obs(0.0)).unwrap();
        assert!((s.total_info_gain() - 2f64.ln()).abs() < 1e-12);
    }

    fn unit_ops(d: usize, max_m: usize) -> impl Strategy<Value = Vec<DMatrix<f64>>> {
        prop::collection::vec(
            (1..=max_m).prop_flat_map(move |m| {
                prop::collection::vec(-1.0..1.0f64, d * m).prop_map(move |vals| {
                    let a = DMatrix::from_vec(d, m, vals);
                    let n = crate::linalg::operator_norm(&a);
                    if n > 1.0 {
                        a / n
                    } else {
                        a
                    }
                })
            }),
            1..20,
        )
    }

    proptest! {
        #[test]
        fn gram_and_logdet_invariants(ops in unit_ops(3, 2), seed in any::<u64>()) {
            let mut s = EstimatorState::new(3).unwrap();
            let mut prev = 0.0;
            let mut telescoped = 0.0;
            let mut m_max = 1;
            for (k, a) in ops.iter().enumerate() {
                m_max = m_max.max(a.ncols());
                let y = DVector::from_fn(a.ncols(), |i, _| ((seed as f64 + (k + i) as f64) * 0.37).sin());
                let inner = DMatrix::identity(a.ncols(), a.ncols()) + a.transpose() * s.gram_inverse() * a;
                telescoped += spd_logdet(&inner).unwrap();
                s.update(a, &y).unwrap();
                prop_assert!(s.logdet() >= prev - 1e-12);
                prev = s.logdet();
                let eig = s.gram().clone().symmetric_eigen().eigenvalues;
                prop_assert!(eig.iter().all(|&e| e >= 1.0 - 1e-9));
                prop_assert!((spd_logdet(s.gram()).unwrap() - s.logdet()).abs() < 1e-8);
                let resid = (s.gram() * s.theta_hat() - s.b()).norm();
                prop_assert!(resid < 1e-9 * (1.0 + s.b().norm()));
            }
            prop_assert!((telescoped - s.total_info_gain()).abs() < 1e-6);
            let n = ops.len() as f64;
            prop_assert!(s.total_info_gain() <= 3.0 * (1.0 + n * m_max as f64 / 3.0).ln() + 1e-9);
        }

        #[test]
        fn update_order_is_irrelevant(ops in unit_ops(2, 2), shift in 0usize..20) {
            let ys: Vec<DVector<f64>> = ops
                .iter()
                .enumerate()
                .map(|(k, a)| DVector::from_fn(a.ncols(), |i, _| (k as f64 * 1.3 + i as f64).cos()))
                .collect();
            let mut fwd = EstimatorState::new(2).unwrap();
            for (a, y) in ops.iter().zip(&ys) {
                fwd.update(a, y).unwrap();
            }
            let mut rot = EstimatorState::new(2).unwrap();
            let n = ops.len();
            for k in 0..n {
                let idx = (k + shift) % n;
                rot.update(&ops[idx], &ys[idx]).unwrap();
            }
            prop_assert!((fwd.gram() - rot.gram()).norm() < 1e-9);
            prop_assert!((fwd.theta_hat() - rot.theta_hat()).norm() < 1e-9);
        }
    }
}
