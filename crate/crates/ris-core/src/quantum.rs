//! States, Hamiltonians, Gibbs states and entropy functionals (natural log).

use crate::error::{Error, Result};
use crate::linalg::{self, Operator, C64};

/// Hermitian generator.
#[derive(Clone, Debug, PartialEq)]
pub struct Hamiltonian {
    op: Operator,
}

impl Hamiltonian {
    pub fn new(op: Operator) -> Result<Self> {
        if !op.is_square() {
            return Err(Error::DimensionMismatch("Hamiltonian must be square".into()));
        }
        linalg::ensure_hermitian(&op, 1e-12)?;
        Ok(Self { op: linalg::hermitize(&op) })
    }

    pub fn zero(d: usize) -> Self {
        Self { op: Operator::zeros(d, d) }
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.nrows()
    }

    pub fn into_op(self) -> Operator {
        self.op
    }
}

/// Positive unit-trace operator with a cached eigendecomposition.
#[derive(Clone, Debug)]
pub struct DensityMatrix {
    op: Operator,
    eigenvalues: Vec<f64>,
    eigenvectors: Operator,
}

impl PartialEq for DensityMatrix {
    fn eq(&self, other: &Self) -> bool {
        self.op == other.op
    }
}

impl DensityMatrix {
    /// Validate at the default 1e-12 tolerance.
    pub fn new(op: Operator) -> Result<Self> {
        Self::with_tolerance(op, 1e-12)
    }

    /// Validate Hermiticity, positivity and unit trace at `tol`.
    pub fn with_tolerance(op: Operator, tol: f64) -> Result<Self> {
        if !op.is_square() || op.nrows() == 0 {
            return Err(Error::InvalidState("density matrix must be square and nonempty".into()));
        }
        linalg::ensure_hermitian(&op, tol)?;
        let op = linalg::hermitize(&op);
        let tr = linalg::trace(&op);
        if (tr - C64::new(1.0, 0.0)).norm() > tol {
            return Err(Error::InvalidState(format!("trace {tr} differs from 1")));
        }
        let (eigenvalues, eigenvectors) = linalg::herm_eigen(&op);
        if eigenvalues[0] < -tol {
            return Err(Error::InvalidState(format!(
                "negative eigenvalue {:e}",
                eigenvalues[0]
            )));
        }
        Ok(Self { op, eigenvalues, eigenvectors })
    }

    pub fn maximally_mixed(d: usize) -> Self {
        Self::new(linalg::identity(d) / C64::new(d as f64, 0.0)).expect("valid state")
    }

    pub fn op(&self) -> &Operator {
        &self.op
    }

    pub fn dim(&self) -> usize {
        self.op.nrows()
    }

    /// Ascending eigenvalues.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn eigenvectors(&self) -> &Operator {
        &self.eigenvectors
    }

    pub fn faithful_floor(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn is_faithful(&self, floor: f64) -> bool {
        self.faithful_floor() > floor
    }

    /// `log ρ`; requires a faithful state.
    pub fn log(&self) -> Result<Operator> {
        self.require_faithful(1e-12)?;
        Ok(linalg::spectral_apply(&self.eigenvalues, &self.eigenvectors, |w| {
            C64::new(w.ln(), 0.0)
        }))
    }

    /// `ρ^p` for real `p`; negative powers require faithfulness.
    pub fn power(&self, p: f64) -> Result<Operator> {
        if p < 0.0 {
            self.require_faithful(1e-12)?;
        }
        Ok(linalg::spectral_apply(&self.eigenvalues, &self.eigenvectors, |w| {
            C64::new(w.max(0.0).powf(p), 0.0)
        }))
    }

    pub fn require_faithful(&self, floor: f64) -> Result<()> {
        if self.faithful_floor() <= floor {
            return Err(Error::NonFaithfulState {
                eigenvalue: self.faithful_floor(),
            });
        }
        Ok(())
    }

    pub fn expectation(&self, a: &Operator) -> C64 {
        linalg::trace(&(&self.op * a))
    }
}

/// `exp(-βh) / Tr exp(-βh)`.
pub fn gibbs_state(h: &Hamiltonian, beta: f64) -> Result<DensityMatrix> {
    if !beta.is_finite() {
        return Err(Error::Precondition(format!("inverse temperature {beta} is not finite")));
    }
    let (w, v) = linalg::herm_eigen(h.op());
    // Shift by the ground level so the largest weight is exactly 1.
    let shift = if beta >= 0.0 { w[0] } else { w[w.len() - 1] };
    let weights: Vec<f64> = w.iter().map(|&e| (-beta * (e - shift)).exp()).collect();
    let z: f64 = weights.iter().sum();
    let op = linalg::spectral_apply(&w, &v, |e| C64::new((-beta * (e - shift)).exp() / z, 0.0));
    DensityMatrix::new(op)
}

pub fn von_neumann_entropy(rho: &DensityMatrix) -> f64 {
    -rho.eigenvalues()
        .iter()
        .filter(|&&mu| mu > 0.0)
        .map(|&mu| mu * mu.ln())
        .sum::<f64>()
}

/// `Tr η (log η - log ν)` for faithful `η`, `ν`.
pub fn relative_entropy(eta: &DensityMatrix, nu: &DensityMatrix) -> Result<f64> {
    if eta.dim() != nu.dim() {
        return Err(Error::DimensionMismatch(format!(
            "relative entropy between dimensions {} and {}",
            eta.dim(),
            nu.dim()
        )));
    }
    eta.require_faithful(1e-12)?;
    nu.require_faithful(1e-12)?;
    let self_term: f64 = eta.eigenvalues().iter().map(|&mu| mu * mu.ln()).sum();
    let cross = eta.expectation(&nu.log()?).re;
    Ok(self_term - cross)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testutil::*;
    use crate::linalg::{from_real_diagonal, trace_norm};
    use proptest::prelude::*;

    fn binary_entropy(p: f64) -> f64 {
        -(p * p.ln() + (1.0 - p) * (1.0 - p).ln())
    }

    #[test]
    fn gibbs_limits() {
        let mut r = rng(21);
        let h = Hamiltonian::new(random_hermitian(&mut r, 3)).unwrap();
        let g = gibbs_state(&h, 0.0).unwrap();
        assert!((g.op() - linalg::identity(3) / C64::new(3.0, 0.0)).norm() < 1e-14);
        let (e0, beta) = (0.8, 1.7);
        let g = gibbs_state(&Hamiltonian::new(from_real_diagonal(&[0.0, e0])).unwrap(), beta).unwrap();
        let z = 1.0 + (-beta * e0).exp();
        assert!((g.op()[(0, 0)].re - 1.0 / z).abs() < 1e-15);
        assert!((g.op()[(1, 1)].re - (-beta * e0).exp() / z).abs() < 1e-15);
    }

    #[test]
    fn gibbs_commutes_with_generator() {
        let mut r = rng(22);
        for _ in 0..10 {
            let h = Hamiltonian::new(random_hermitian(&mut r, 4)).unwrap();
            let g = gibbs_state(&h, 2.3).unwrap();
            assert!(linalg::commutator(g.op(), h.op()).norm() < 1e-12);
            assert!(g.faithful_floor() > 0.0);
        }
    }

    #[test]
    fn entropy_values() {
        let pure = DensityMatrix::new(from_real_diagonal(&[1.0, 0.0, 0.0])).unwrap();
        assert_eq!(von_neumann_entropy(&pure), 0.0);
        let mixed = DensityMatrix::maximally_mixed(4);
        assert!((von_neumann_entropy(&mixed) - 4f64.ln()).abs() < 1e-14);
        for p in [0.1, 0.37, 0.5, 0.93] {
            let rho = DensityMatrix::new(from_real_diagonal(&[p, 1.0 - p])).unwrap();
            assert!((von_neumann_entropy(&rho) - binary_entropy(p)).abs() < 1e-14);
        }
    }

    #[test]
    fn relative_entropy_small_perturbation() {
        let eps = 1e-3;
        let eta = DensityMatrix::new(from_real_diagonal(&[0.5 + eps, 0.5 - eps])).unwrap();
        let nu = DensityMatrix::maximally_mixed(2);
        let kl = (0.5 + eps) * (2.0 * (0.5 + eps)).ln() + (0.5 - eps) * (2.0 * (0.5 - eps)).ln();
        let s = relative_entropy(&eta, &nu).unwrap();
        assert!((s - kl).abs() < 1e-15);
        assert!((s - 2.0 * eps * eps).abs() < 1e-9);
        assert!(relative_entropy(&eta, &eta).unwrap().abs() < 1e-15);
    }

    #[test]
    fn relative_entropy_rejects_non_faithful() {
        let pure = DensityMatrix::new(from_real_diagonal(&[1.0, 0.0])).unwrap();
        let mixed = DensityMatrix::maximally_mixed(2);
        assert!(matches!(
            relative_entropy(&mixed, &pure),
            Err(Error::NonFaithfulState { .. })
        ));
    }

    #[test]
    fn invalid_states_rejected() {
        assert!(DensityMatrix::new(from_real_diagonal(&[0.7, 0.7])).is_err());
        assert!(DensityMatrix::new(from_real_diagonal(&[1.2, -0.2])).is_err());
    }

    proptest! {
        #[test]
        fn pinsker_bound(seed in 0u64..10_000, n in 2usize..5) {
            let mut r = rng(seed);
            let eta = DensityMatrix::new(random_state(&mut r, n)).unwrap();
            let nu = DensityMatrix::new(random_state(&mut r, n)).unwrap();
            let s = relative_entropy(&eta, &nu).unwrap();
            let d = trace_norm(&(eta.op() - nu.op()));
            prop_assert!(s >= 0.5 * d * d - 1e-12);
        }

        #[test]
        fn entropy_unitarily_invariant(seed in 0u64..10_000) {
            let mut r = rng(seed);
            let rho = DensityMatrix::new(random_state(&mut r, 3)).unwrap();
            let u = linalg::herm_propagator(&random_hermitian(&mut r, 3), 1.1).unwrap();
            let rot = DensityMatrix::new(&u * rho.op() * u.adjoint()).unwrap();
            prop_assert!((von_neumann_entropy(&rho) - von_neumann_entropy(&rot)).abs() < 1e-10);
        }

        #[test]
        fn gibbs_strictly_positive(seed in 0u64..10_000, beta in 0.0f64..5.0) {
            let mut r = rng(seed);
            let h = Hamiltonian::new(random_hermitian(&mut r, 3)).unwrap();
            prop_assert!(gibbs_state(&h, beta).unwrap().faithful_floor() > 0.0);
        }
    }
}
