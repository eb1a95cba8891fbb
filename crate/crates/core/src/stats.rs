//! Recursive second-order moments and the correlation measures built on them.

use serde::{Deserialize, Serialize};

/// Running means, variances and covariance of a pair `(u, v)`.
///
/// Welford-style updates; variances are population variances.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PairMoments {
    count: u64,
    mean_u: f64,
    mean_v: f64,
    m2_u: f64,
    m2_v: f64,
    co: f64,
}

impl PairMoments {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn update(&mut self, u: f64, v: f64) {
        self.count += 1;
        let n = self.count as f64;
        let du = u - self.mean_u;
        let dv = v - self.mean_v;
        self.mean_u += du / n;
        self.mean_v += dv / n;
        self.m2_u += du * (u - self.mean_u);
        self.m2_v += dv * (v - self.mean_v);
        self.co += du * (v - self.mean_v);
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean_u(&self) -> f64 {
        self.mean_u
    }

    pub fn mean_v(&self) -> f64 {
        self.mean_v
    }

    pub fn var_u(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.m2_u / self.count as f64
        }
    }

    pub fn var_v(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.m2_v / self.count as f64
        }
    }

    pub fn covariance(&self) -> f64 {
        if self.count == 0 {
            0.0
        } else {
            self.co / self.count as f64
        }
    }

    /// Pearson correlation; 0 when either variance vanishes or fewer than
    /// two observations have been seen.
    pub fn pearson(&self) -> f64 {
        let (vu, vv) = (self.var_u(), self.var_v());
        if self.count < 2 || vu <= 0.0 || vv <= 0.0 {
            return 0.0;
        }
        (self.covariance() / (vu * vv).sqrt()).clamp(-1.0, 1.0)
    }

    /// Maximum information compression index of the pair.
    pub fn mici(&self) -> f64 {
        mici(self.var_u(), self.var_v(), self.pearson())
    }
}

/// Maximum information compression index:
/// `½·(v₁+v₂ − √((v₁+v₂)² − 4v₁v₂(1−ζ²)))`.
///
/// Zero means maximal dependence. The radicand is clipped at zero to absorb
/// rounding.
pub fn mici(var_u: f64, var_v: f64, zeta: f64) -> f64 {
    let sum = var_u + var_v;
    let radicand = (sum * sum - 4.0 * var_u * var_v * (1.0 - zeta * zeta)).max(0.0);
    (0.5 * (sum - radicand.sqrt())).max(0.0)
}
