use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::chebyshev::{chebyshev_expand, expanded_dim};
use crate::linalg::{self, matrix_serde, vector_serde};
use crate::{Error, Result};

/// One fuzzy rule: a multivariate Gaussian premise and a Chebyshev-expanded
/// linear consequent per class, with its recursive least-squares state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FuzzyRule {
    pub(crate) id: u64,
    #[serde(with = "vector_serde")]
    pub(crate) center: DVector<f64>,
    /// Inverse covariance of the premise.
    #[serde(with = "matrix_serde")]
    pub(crate) inv_cov: DMatrix<f64>,
    /// `(2n+1) × m` consequent weights.
    #[serde(with = "matrix_serde")]
    pub(crate) consequent: DMatrix<f64>,
    /// `(2n+1) × (2n+1)` output covariance of the RLS update.
    #[serde(with = "matrix_serde")]
    pub(crate) rls_cov: DMatrix<f64>,
    pub(crate) support: u64,
    pub(crate) firing_ema: f64,
    pub(crate) lifetime_contrib: f64,
    pub(crate) age: u64,
    pub(crate) active: bool,
    /// Firing averages at the end of the last two forgetting windows,
    /// oldest first.
    pub(crate) ema_history: [Option<f64>; 2],
}

impl FuzzyRule {
    /// A rule centred at `center` with isotropic spread `sigma` whose
    /// consequent votes for `label`.
    pub fn new(
        id: u64,
        center: &[f64],
        sigma: f64,
        label: usize,
        class_count: usize,
        rls_init_scale: f64,
    ) -> Self {
        let n = center.len();
        let p = expanded_dim(n);
        let mut consequent = DMatrix::zeros(p, class_count);
        consequent[(0, label)] = 1.0;
        Self {
            id,
            center: DVector::from_column_slice(center),
            inv_cov: DMatrix::identity(n, n) / (sigma * sigma),
            consequent,
            rls_cov: DMatrix::identity(p, p) * rls_init_scale,
            support: 1,
            firing_ema: 1.0,
            lifetime_contrib: 0.0,
            age: 0,
            active: true,
            ema_history: [None, None],
        }
    }

    pub fn id(&self) -> u64 {
        self.id
    }

    pub fn center(&self) -> &[f64] {
        self.center.as_slice()
    }

    pub fn inv_cov(&self) -> &DMatrix<f64> {
        &self.inv_cov
    }

    pub fn consequent(&self) -> &DMatrix<f64> {
        &self.consequent
    }

    pub fn rls_cov(&self) -> &DMatrix<f64> {
        &self.rls_cov
    }

    pub fn support(&self) -> u64 {
        self.support
    }

    pub fn firing_ema(&self) -> f64 {
        self.firing_ema
    }

    pub fn lifetime_contrib(&self) -> f64 {
        self.lifetime_contrib
    }

    pub fn is_active(&self) -> bool {
        self.active
    }

    pub fn input_dim(&self) -> usize {
        self.center.len()
    }

    /// Mahalanobis form `(x − c)·A⁻¹·(x − c)`.
    pub fn distance(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.center.len() {
            return Err(Error::Dimension {
                expected: self.center.len(),
                got: x.len(),
            });
        }
        if x.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("rule input"));
        }
        let d = DVector::from_column_slice(x) - &self.center;
        Ok(linalg::quadratic_form(&self.inv_cov, &d).max(0.0))
    }

    /// Firing strength `exp(−(x − c)·A⁻¹·(x − c))`, in `(0, 1]` unless it
    /// underflows.
    pub fn firing_strength(&self, x: &[f64]) -> Result<f64> {
        Ok((-self.distance(x)?).exp())
    }

    /// Rule output `Φ(x)·W` given an already expanded input.
    pub fn output_expanded(&self, phi: &DVector<f64>) -> DVector<f64> {
        self.consequent.tr_mul(phi)
    }

    /// The class this rule votes for at its own centre.
    pub fn dominant_class(&self) -> usize {
        argmax(self.output_expanded(&chebyshev_expand(self.center.as_slice())).as_slice())
    }

    /// `ln` of the premise volume `det(A)^(1/2)`, i.e. `−½·ln det(A⁻¹)`.
    pub fn log_volume(&self) -> f64 {
        linalg::log_det_spd(&self.inv_cov)
            .map(|ld| -0.5 * ld)
            .unwrap_or(f64::INFINITY)
    }
}

/// Index of the largest entry; ties go to the lowest index.
pub(crate) fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate() {
        if *v > values[best] {
            best = i;
        }
    }
    best
}
