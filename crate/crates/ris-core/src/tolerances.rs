//! Numerical thresholds shared by every module.

use serde::{Deserialize, Serialize};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Subdiagonal entries below `deflation * ||M||` are set to zero.
    pub deflation: f64,
    /// QR sweeps allowed per unit of dimension.
    pub sweeps_per_dim: usize,
    /// Relative distance under which eigenvalues are merged.
    pub cluster: f64,
    /// `|e| > 1 - peripheral` marks an eigenvalue as peripheral.
    pub peripheral: f64,
    /// Non-peripheral moduli above `1 - boundary` are refused.
    pub boundary: f64,
    pub hermitian: f64,
    pub faithful_floor: f64,
    pub cptp: f64,
    pub reconstruction: f64,
    /// Clustering of Hamiltonian levels in first-order expansions.
    pub level: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            deflation: 1e-12,
            sweeps_per_dim: 30,
            cluster: 1e-8,
            peripheral: 1e-9,
            boundary: 1e-6,
            hermitian: 1e-12,
            faithful_floor: 1e-12,
            cptp: 1e-10,
            reconstruction: 1e-9,
            level: 1e-10,
        }
    }
}
