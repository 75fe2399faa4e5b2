//! Reduced one-step dynamics as superoperators, CPTP checks, spectral
//! analysis and the induced trace norm.
//!
//! A superoperator on `d x d` operators is stored as a `d² x d²` matrix acting
//! on column-stacked operators, `vec(X)[i + d j] = X[i, j]`.

mod norm;
mod power;
mod spectrum;

pub use norm::{induced_trace_norm, induced_trace_norm_with, NormEstimate, NormOptions};
pub use power::{find_m, find_m_with, power, FindMOptions, M_CAP};
pub use spectrum::{
    invariant_state, irreducibility, spectral, spectral_with, ChannelSpectrum, IrreducibilityVerdict,
    SpectralCluster, SpectralOptions,
};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{self, Operator, C64, ONE};
use crate::quantum::{DensityMatrix, Hamiltonian};

#[derive(Clone, Debug, PartialEq)]
pub struct Superoperator {
    d: usize,
    mat: Operator,
}

fn unit(d: usize, i: usize, j: usize) -> Operator {
    let mut e = Operator::zeros(d, d);
    e[(i, j)] = ONE;
    e
}

impl Superoperator {
    pub fn from_matrix(d: usize, mat: Operator) -> Result<Self> {
        if mat.nrows() != d * d || mat.ncols() != d * d {
            return Err(Error::DimensionMismatch(format!(
                "superoperator on {d}x{d} operators needs a {0}x{0} matrix",
                d * d
            )));
        }
        Ok(Self { d, mat })
    }

    /// Tabulate a linear map on the matrix units.
    pub fn from_map(d: usize, f: impl Fn(&Operator) -> Operator) -> Self {
        let n = d * d;
        let mut mat = Operator::zeros(n, n);
        for j in 0..d {
            for i in 0..d {
                let image = f(&unit(d, i, j));
                mat.set_column(i + d * j, &linalg::vec_of(&image));
            }
        }
        Self { d, mat }
    }

    pub fn identity(d: usize) -> Self {
        Self { d, mat: linalg::identity(d * d) }
    }

    pub fn zero(d: usize) -> Self {
        Self { d, mat: Operator::zeros(d * d, d * d) }
    }

    /// Dimension of the operators acted on.
    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn matrix(&self) -> &Operator {
        &self.mat
    }

    pub fn apply(&self, x: &Operator) -> Operator {
        linalg::unvec(&(&self.mat * linalg::vec_of(x)), self.d)
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &Superoperator) -> Superoperator {
        Superoperator { d: self.d, mat: &self.mat * &other.mat }
    }

    /// Hilbert-Schmidt adjoint.
    pub fn adjoint(&self) -> Superoperator {
        Superoperator { d: self.d, mat: self.mat.adjoint() }
    }

    pub fn scale(&self, c: C64) -> Superoperator {
        Superoperator { d: self.d, mat: &self.mat * c }
    }

    pub fn sub(&self, other: &Superoperator) -> Superoperator {
        Superoperator { d: self.d, mat: &self.mat - &other.mat }
    }
}

/// `exp(-iτ(h_S⊗I + I⊗h_E + λv))`.
pub fn step_unitary(h_s: &Hamiltonian, h_e: &Hamiltonian, v: &Hamiltonian, lambda: f64, tau: f64) -> Result<Operator> {
    let (ds, de) = (h_s.dim(), h_e.dim());
    if v.dim() != ds * de {
        return Err(Error::DimensionMismatch(format!(
            "coupling of dimension {} on a {}x{} bipartition",
            v.dim(),
            ds,
            de
        )));
    }
    let h = free_hamiltonian(h_s, h_e) + v.op() * C64::new(lambda, 0.0);
    linalg::herm_propagator(&h, tau)
}

/// `h_S⊗I + I⊗h_E`.
pub fn free_hamiltonian(h_s: &Hamiltonian, h_e: &Hamiltonian) -> Operator {
    let (ds, de) = (h_s.dim(), h_e.dim());
    linalg::kron(h_s.op(), &linalg::identity(de)) + linalg::kron(&linalg::identity(ds), h_e.op())
}

/// `ρ ↦ Tr_E(U(ρ⊗ξ)U†)` without CPTP verification.
pub fn reduced_dynamics_from_unitary(u: &Operator, xi: &DensityMatrix, d_sys: usize) -> Result<Superoperator> {
    let d_env = xi.dim();
    if u.nrows() != d_sys * d_env {
        return Err(Error::DimensionMismatch(format!(
            "unitary of dimension {} on a {}x{} bipartition",
            u.nrows(),
            d_sys,
            d_env
        )));
    }
    let ud = u.adjoint();
    Ok(Superoperator::from_map(d_sys, |x| {
        let joint = u * linalg::kron(x, xi.op()) * &ud;
        linalg::partial_trace_env(&joint, d_sys, d_env).expect("dimensions checked")
    }))
}

/// Reduced dynamics of one interaction step, verified CPTP.
pub fn reduced_dynamics(
    h_s: &Hamiltonian,
    h_e: &Hamiltonian,
    v: &Hamiltonian,
    lambda: f64,
    tau: f64,
    xi: &DensityMatrix,
) -> Result<Superoperator> {
    if xi.dim() != h_e.dim() {
        return Err(Error::DimensionMismatch("probe state and probe Hamiltonian differ in dimension".into()));
    }
    let u = step_unitary(h_s, h_e, v, lambda, tau)?;
    let l = reduced_dynamics_from_unitary(&u, xi, h_s.dim())?;
    let report = verify_cptp(&l);
    if !report.is_cptp(1e-10) {
        return Err(Error::CptpViolation {
            min_choi_eigenvalue: report.min_choi_eigenvalue,
            trace_residual: report.trace_residual,
        });
    }
    Ok(l)
}

/// `Σ_ij E_ij ⊗ S(E_ij)`.
pub fn choi(s: &Superoperator) -> Operator {
    let d = s.dim();
    let mut c = Operator::zeros(d * d, d * d);
    for j in 0..d {
        for i in 0..d {
            c += linalg::kron(&unit(d, i, j), &s.apply(&unit(d, i, j)));
        }
    }
    c
}

#[derive(Clone, Debug, Serialize)]
pub struct CptpReport {
    pub min_choi_eigenvalue: f64,
    /// `max |Tr S(E_ij) - δ_ij|`.
    pub trace_residual: f64,
    pub choi_hermitian_deviation: f64,
}

impl CptpReport {
    pub fn is_cptp(&self, tol: f64) -> bool {
        self.min_choi_eigenvalue >= -tol && self.trace_residual <= tol && self.choi_hermitian_deviation <= tol
    }
}

pub fn verify_cptp(s: &Superoperator) -> CptpReport {
    let c = choi(s);
    let (w, _) = linalg::herm_eigen(&c);
    let d = s.dim();
    let mut trace_residual = 0.0f64;
    for j in 0..d {
        for i in 0..d {
            let t = linalg::trace(&s.apply(&unit(d, i, j)));
            let expect = if i == j { ONE } else { C64::new(0.0, 0.0) };
            trace_residual = trace_residual.max((t - expect).norm());
        }
    }
    CptpReport {
        min_choi_eigenvalue: w[0],
        trace_residual,
        choi_hermitian_deviation: linalg::hermitian_deviation(&c),
    }
}
