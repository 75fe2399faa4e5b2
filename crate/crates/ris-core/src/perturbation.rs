//! Second-order expansion of the relative entropy, the commutator defect of
//! the invariant state and its first-order behaviour in the coupling.

use log::warn;
use serde::Serialize;

use crate::channel::{invariant_state, Superoperator};
use crate::error::{Error, Result};
use crate::linalg::{self, Operator, C64};
use crate::quantum::{relative_entropy, DensityMatrix, Hamiltonian};
use crate::sim::StepKernel;

/// Spectral resolution of a faithful state with eigenvalues merged at
/// relative `1e-8`.
#[derive(Clone, Debug)]
pub struct EtaSpectral {
    pub eta: DensityMatrix,
    pub mu: Vec<f64>,
    pub projectors: Vec<Operator>,
    pub inf_sp: f64,
}

fn hermitian_projectors(values: &[f64], vectors: &Operator, rel: f64, abs: f64) -> (Vec<f64>, Vec<Operator>) {
    let n = vectors.nrows();
    let clusters = linalg::cluster_real(values, |a, b| (rel * a.abs().max(b.abs())).max(abs));
    let mut means = Vec::with_capacity(clusters.len());
    let mut projectors = Vec::with_capacity(clusters.len());
    for c in clusters {
        let mut p = Operator::zeros(n, n);
        for &i in &c {
            let col = vectors.column(i);
            p += col * col.adjoint();
        }
        means.push(c.iter().map(|&i| values[i]).sum::<f64>() / c.len() as f64);
        projectors.push(p);
    }
    (means, projectors)
}

impl EtaSpectral {
    pub fn new(eta: &DensityMatrix) -> Result<Self> {
        eta.require_faithful(1e-12)?;
        let (mu, projectors) = hermitian_projectors(eta.eigenvalues(), eta.eigenvectors(), 1e-8, 0.0);
        Ok(Self { eta: eta.clone(), inf_sp: eta.faithful_floor(), mu, projectors })
    }
}

fn ensure_traceless(a: &Operator) -> Result<()> {
    let t = linalg::trace(a);
    if t.norm() > 1e-10 {
        return Err(Error::NonTraceless { trace: t });
    }
    Ok(())
}

/// `Σ_i Tr(A p_i B p_i)/(2μ_i) + Σ_{i<j} Tr(A p_j B p_i)(log μ_i - log μ_j)/(μ_i - μ_j)`.
pub fn f_eta(sp: &EtaSpectral, a: &Operator, b: &Operator) -> Result<C64> {
    ensure_traceless(a)?;
    ensure_traceless(b)?;
    let n = sp.mu.len();
    let mut total = C64::new(0.0, 0.0);
    for i in 0..n {
        let (pi, mi) = (&sp.projectors[i], sp.mu[i]);
        total += linalg::trace(&(a * pi * b * pi)) / (2.0 * mi);
        for j in i + 1..n {
            let (pj, mj) = (&sp.projectors[j], sp.mu[j]);
            let weight = (mi.ln() - mj.ln()) / (mi - mj);
            total += linalg::trace(&(a * pj * b * pi)) * weight;
        }
    }
    Ok(total)
}

/// Quadratic form `F_η(A, A)`.
pub fn f_eta_quadratic(sp: &EtaSpectral, a: &Operator) -> Result<f64> {
    Ok(f_eta(sp, a, a)?.re)
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct ExpansionCheck {
    pub exact: f64,
    pub predicted: f64,
    pub residual: f64,
    /// `max ||D_i||` in the matrix 2-norm.
    pub perturbation_norm: f64,
}

/// Compare `S(η+D₁ | η+D₂)` with `F_η(D₁ - D₂)`.
pub fn entropy_expansion_check(eta: &DensityMatrix, d1: &Operator, d2: &Operator) -> Result<ExpansionCheck> {
    let sp = EtaSpectral::new(eta)?;
    let norm = linalg::operator_norm(d1).max(linalg::operator_norm(d2));
    let limit = sp.inf_sp / 4.0;
    if norm > limit {
        return Err(Error::PerturbationTooLarge { norm, limit });
    }
    let s1 = DensityMatrix::with_tolerance(eta.op() + d1, 1e-10)?;
    let s2 = DensityMatrix::with_tolerance(eta.op() + d2, 1e-10)?;
    let exact = relative_entropy(&s1, &s2)?;
    let predicted = f_eta_quadratic(&sp, &(d1 - d2))?;
    Ok(ExpansionCheck { exact, predicted, residual: (exact - predicted).abs(), perturbation_norm: norm })
}

/// `U(ρ^inv⊗ξ)U* - ρ^inv⊗ξ` at the configuration of `kernel`.
pub fn x_of_s(kernel: &StepKernel, rho_inv: &DensityMatrix) -> Operator {
    kernel.commutator_defect(rho_inv.op())
}

/// First-order coefficient of the commutator defect in the coupling.
///
/// With `W = ρ⁽⁰⁾⊗ξ` commuting with the free generator `h₀`,
/// `M = U₀(ρ⁽¹⁾⊗ξ)U₀* - ρ⁽¹⁾⊗ξ - [W, G]`, where `G = (dU/dλ) U₀*` has
/// entries `v_ij (e^{-iτΔ} - 1)/Δ` between levels `Δ = E_i - E_j` apart and
/// `-iτ v_ij` within a level.
pub fn first_order_m(
    h_s: &Hamiltonian,
    h_e: &Hamiltonian,
    v: &Hamiltonian,
    tau: f64,
    rho0: &Operator,
    rho1: &Operator,
    xi: &DensityMatrix,
) -> Result<Operator> {
    let h0 = crate::channel::free_hamiltonian(h_s, h_e);
    let w0 = linalg::kron(rho0, xi.op());
    let defect = linalg::max_abs(&linalg::commutator(&w0, &h0));
    if defect > 1e-10 {
        return Err(Error::Precondition(format!(
            "unperturbed state does not commute with the free generator (defect {defect:e})"
        )));
    }
    let u0 = linalg::herm_propagator(&h0, tau)?;
    let (values, vectors) = linalg::herm_eigen(&h0);
    let (levels, pis) = hermitian_projectors(&values, &vectors, 0.0, 1e-10);
    let n = h0.nrows();
    let mut g = Operator::zeros(n, n);
    for (i, pi) in pis.iter().enumerate() {
        for (j, pj) in pis.iter().enumerate() {
            let weight = if i == j {
                C64::new(0.0, -tau)
            } else {
                let delta = levels[i] - levels[j];
                let x = tau * delta / 2.0;
                let sinc = if x.abs() < 1e-8 { 1.0 - x * x / 6.0 } else { x.sin() / x };
                C64::new(0.0, -tau) * C64::from_polar(1.0, -x) * sinc
            };
            g += pi * v.op() * pj * weight;
        }
    }
    let w1 = linalg::kron(rho1, xi.op());
    Ok(&u0 * &w1 * u0.adjoint() - &w1 - linalg::commutator(&w0, &g))
}

#[derive(Clone, Debug)]
pub struct InvariantExpansion {
    pub rho0: Operator,
    pub rho1: Operator,
    /// Difference between the two central-difference levels, divided by 3.
    pub error_estimate: f64,
}

/// Step used for the coupling derivatives.
pub const EXPANSION_STEP: f64 = 1e-3;

/// Zeroth and first order of `λ ↦ ρ^inv(λ)` by Richardson-extrapolated
/// central differences at `±h, ±2h`.
pub fn invariant_state_expansion<F>(family: F) -> Result<InvariantExpansion>
where
    F: Fn(f64) -> Result<Superoperator>,
{
    let h = EXPANSION_STEP;
    let state = |l: f64| -> Result<Operator> { Ok(invariant_state(&family(l)?)?.op().clone()) };
    let (p1, m1, p2, m2) = (state(h)?, state(-h)?, state(2.0 * h)?, state(-2.0 * h)?);
    let half = C64::new(0.5, 0.0);
    let a_h = (&p1 + &m1) * half;
    let a_2h = (&p2 + &m2) * half;
    let d_h = (&p1 - &m1) / C64::new(2.0 * h, 0.0);
    let d_2h = (&p2 - &m2) / C64::new(4.0 * h, 0.0);
    let third = C64::new(1.0 / 3.0, 0.0);
    let rho0 = linalg::hermitize(&((&a_h * C64::new(4.0, 0.0) - &a_2h) * third));
    let rho1 = linalg::hermitize(&((&d_h * C64::new(4.0, 0.0) - &d_2h) * third));
    let error_estimate = (&d_h - &d_2h).norm() / 3.0;
    Ok(InvariantExpansion { rho0, rho1, error_estimate })
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum DetailedBalanceVerdict {
    DetailedBalance,
    Violated,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct KmsReport {
    /// Largest entrywise deviation between the weighted adjoint channel and
    /// the reversed-unitary map over the matrix-unit basis.
    pub relation_deviation: f64,
    /// `||[log(ρ^inv⊗ξ), U]||` in the matrix 2-norm.
    pub generator_commutator: f64,
    /// `||U(ρ^inv⊗ξ)U* - ρ^inv⊗ξ||₁`.
    pub x_norm: f64,
    pub verdict: DetailedBalanceVerdict,
}

/// Tolerance on `||X||₁` for the detailed-balance verdict.
pub const DETAILED_BALANCE_TOL: f64 = 1e-8;

/// Compare `ρ^{1/2} L*(ρ^{-1/2} Y ρ^{-1/2}) ρ^{1/2}` with `Tr_E(U*(Y⊗ξ)U)`.
pub fn kms_dual_check(l: &Superoperator, rho_inv: &DensityMatrix, u: &Operator, xi: &DensityMatrix) -> Result<KmsReport> {
    rho_inv.require_faithful(1e-12)?;
    let d = l.dim();
    let de = xi.dim();
    if u.nrows() != d * de || rho_inv.dim() != d {
        return Err(Error::DimensionMismatch("channel, state and unitary disagree".into()));
    }
    let sqrt = rho_inv.power(0.5)?;
    let inv_sqrt = rho_inv.power(-0.5)?;
    let adj = l.adjoint();
    let ud = u.adjoint();
    let mut deviation = 0.0f64;
    for j in 0..d {
        for i in 0..d {
            let mut y = Operator::zeros(d, d);
            y[(i, j)] = C64::new(1.0, 0.0);
            let lhs = &sqrt * adj.apply(&(&inv_sqrt * &y * &inv_sqrt)) * &sqrt;
            let rhs = linalg::partial_trace_env(&(&ud * linalg::kron(&y, xi.op()) * u), d, de)?;
            deviation = deviation.max(linalg::max_abs(&(lhs - rhs)));
        }
    }
    let w = DensityMatrix::with_tolerance(linalg::kron(rho_inv.op(), xi.op()), 1e-10)?;
    let log_w = w.log()?;
    let generator_commutator = linalg::operator_norm(&linalg::commutator(&log_w, u));
    let x_norm = linalg::trace_norm(&(u * w.op() * &ud - w.op()));
    let verdict = if x_norm <= DETAILED_BALANCE_TOL {
        DetailedBalanceVerdict::DetailedBalance
    } else {
        DetailedBalanceVerdict::Violated
    };
    Ok(KmsReport { relation_deviation: deviation, generator_commutator, x_norm, verdict })
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct SmallCouplingPrediction {
    pub predicted: f64,
    /// `||λM - D||₁`.
    pub perturbation_norm: f64,
    /// Admissible size, a sixteenth of the smallest eigenvalue of `ρ⁽⁰⁾⊗ξ`.
    pub delta: f64,
    pub admissible: bool,
}

/// `λ²F(M,M) + F(D,D) - λF(D,M) - λF(M,D)` on `η = ρ⁽⁰⁾⊗ξ`.
pub fn sigma_small_coupling(
    lambda: f64,
    m: &Operator,
    d: &Operator,
    rho0: &DensityMatrix,
    xi: &DensityMatrix,
) -> Result<SmallCouplingPrediction> {
    let eta = DensityMatrix::with_tolerance(linalg::kron(rho0.op(), xi.op()), 1e-10)?;
    let sp = EtaSpectral::new(&eta)?;
    let l = C64::new(lambda, 0.0);
    let predicted = (f_eta(&sp, m, m)? * l * l + f_eta(&sp, d, d)? - f_eta(&sp, d, m)? * l - f_eta(&sp, m, d)? * l).re;
    let perturbation_norm = linalg::trace_norm(&(m * l - d));
    let delta = sp.inf_sp / 16.0;
    let admissible = perturbation_norm <= delta;
    if !admissible {
        warn!("small-coupling prediction outside admissible region: {perturbation_norm:e} > {delta:e}");
    }
    Ok(SmallCouplingPrediction { predicted, perturbation_norm, delta, admissible })
}

/// Deviation of one step from the invariant configuration:
/// `D = ρ'⊗ξ - ρ^inv⊗ξ - U((ρ - ρ^inv)⊗ξ)U*`, so that the joint state and the
/// decoupled product differ by `X - D`.
pub fn step_deviation(kernel: &StepKernel, rho: &Operator, next: &Operator, rho_inv: &Operator) -> Operator {
    let xi = kernel.xi.op();
    linalg::kron(&(next - rho_inv), xi) - kernel.joint(&(rho - rho_inv))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::{reduced_dynamics, reduced_dynamics_from_unitary};
    use crate::linalg::testutil::*;
    use crate::models;
    use crate::quantum::gibbs_state;
    use crate::sim::simulate_step;
    use proptest::prelude::*;
    use rand::Rng;

    fn traceless_hermitian(r: &mut impl Rng, n: usize) -> Operator {
        let h = random_hermitian(r, n);
        let t = linalg::trace(&h) / C64::new(n as f64, 0.0);
        h - linalg::identity(n) * t
    }

    fn faithful(r: &mut impl Rng, n: usize) -> DensityMatrix {
        let mixed = linalg::identity(n) / C64::new(n as f64, 0.0);
        DensityMatrix::new(random_state(r, n) * C64::new(0.7, 0.0) + mixed * C64::new(0.3, 0.0)).unwrap()
    }

    struct Fixture {
        h_s: Hamiltonian,
        h_e: Hamiltonian,
        v: Hamiltonian,
        xi: DensityMatrix,
        tau: f64,
        beta: f64,
    }

    fn fd_fixture(beta: f64) -> Fixture {
        let h_e = models::probe_hamiltonian(0.8);
        Fixture {
            h_s: models::system_hamiltonian(0.9),
            xi: gibbs_state(&h_e, beta).unwrap(),
            h_e,
            v: models::coupling_full_dipole(1.0),
            tau: 0.5,
            beta,
        }
    }

    impl Fixture {
        fn channel(&self, lambda: f64) -> Result<Superoperator> {
            reduced_dynamics(&self.h_s, &self.h_e, &self.v, lambda, self.tau, &self.xi)
        }

        fn kernel(&self, lambda: f64) -> StepKernel {
            StepKernel::new(&self.h_s, &self.h_e, &self.v, lambda, self.tau, self.beta).unwrap()
        }

        fn x(&self, lambda: f64) -> Operator {
            let inv = invariant_state(&self.channel(lambda).unwrap()).unwrap();
            x_of_s(&self.kernel(lambda), &inv)
        }

        fn m(&self) -> Operator {
            let exp = invariant_state_expansion(|l| self.channel(l)).unwrap();
            first_order_m(&self.h_s, &self.h_e, &self.v, self.tau, &exp.rho0, &exp.rho1, &self.xi).unwrap()
        }
    }

    #[test]
    fn f_of_zero_and_qubit_closed_form() {
        let eta = DensityMatrix::maximally_mixed(2);
        let sp = EtaSpectral::new(&eta).unwrap();
        assert_eq!(sp.mu.len(), 1);
        assert_eq!(f_eta_quadratic(&sp, &Operator::zeros(2, 2)).unwrap(), 0.0);
        let eps = 1e-3;
        let a = linalg::from_real_diagonal(&[eps, -eps]);
        assert!((f_eta_quadratic(&sp, &a).unwrap() - 2.0 * eps * eps).abs() < 1e-18);
        let chk = entropy_expansion_check(&eta, &a, &Operator::zeros(2, 2)).unwrap();
        assert!(chk.residual < 1e-9);
    }

    #[test]
    fn equal_perturbations_give_zero() {
        let mut r = rng(91);
        let eta = faithful(&mut r, 3);
        let d = traceless_hermitian(&mut r, 3) * C64::new(1e-3, 0.0);
        let chk = entropy_expansion_check(&eta, &d, &d).unwrap();
        assert!(chk.exact.abs() < 1e-12 && chk.predicted.abs() < 1e-18);
    }

    #[test]
    fn non_traceless_rejected() {
        let sp = EtaSpectral::new(&DensityMatrix::maximally_mixed(2)).unwrap();
        let a = linalg::identity(2);
        assert!(matches!(f_eta(&sp, &a, &a), Err(Error::NonTraceless { .. })));
        let pure = DensityMatrix::new(linalg::from_real_diagonal(&[1.0, 0.0])).unwrap();
        assert!(matches!(EtaSpectral::new(&pure), Err(Error::NonFaithfulState { .. })));
    }

    #[test]
    fn expansion_residual_is_cubic() {
        let mut r = rng(92);
        for n in [2, 4] {
            let eta = faithful(&mut r, n);
            let scale = eta.faithful_floor() / 64.0;
            let mut d1 = traceless_hermitian(&mut r, n);
            let mut d2 = traceless_hermitian(&mut r, n);
            let top = linalg::operator_norm(&d1).max(linalg::operator_norm(&d2));
            d1 *= C64::new(scale / top, 0.0);
            d2 *= C64::new(scale / top, 0.0);
            let res: Vec<f64> = [1.0, 0.5, 0.25]
                .iter()
                .map(|&t| {
                    let f = C64::new(t, 0.0);
                    entropy_expansion_check(&eta, &(&d1 * f), &(&d2 * f)).unwrap().residual
                })
                .collect();
            let slope = (res[0] / res[2]).ln() / 4f64.ln();
            assert!((2.6..=3.4).contains(&slope), "n={n} {res:?}");
        }
    }

    #[test]
    fn rotating_wave_defect_vanishes() {
        let h_e = models::probe_hamiltonian(0.8);
        for (beta, lambda, tau) in [(1.0, 0.3, 0.5), (2.5, 1.7, 1.9)] {
            let xi = gibbs_state(&h_e, beta).unwrap();
            let k = StepKernel::new(
                &models::system_hamiltonian(1.1),
                &h_e,
                &models::coupling_rotating_wave(1.0),
                lambda,
                tau,
                beta,
            )
            .unwrap();
            let inv = invariant_state(&reduced_dynamics_from_unitary(&k.u, &xi, 2).unwrap()).unwrap();
            let x = x_of_s(&k, &inv);
            assert!(linalg::trace_norm(&x) <= 1e-9);
            let rep = kms_dual_check(&reduced_dynamics_from_unitary(&k.u, &xi, 2).unwrap(), &inv, &k.u, &xi).unwrap();
            assert_eq!(rep.verdict, DetailedBalanceVerdict::DetailedBalance);
            assert!(rep.relation_deviation <= 1e-8);
            assert!(rep.generator_commutator <= 1e-8);
        }
    }

    #[test]
    fn full_dipole_defect_is_traceless_hermitian() {
        let fx = fd_fixture(1.0);
        let x = fx.x(0.5);
        assert!(linalg::trace(&x).norm() < 1e-10);
        assert!(linalg::hermitian_deviation(&x) < 1e-10);
        assert!(linalg::trace_norm(&x) > 1e-3);
    }

    #[test]
    fn trivial_unitary_satisfies_relation() {
        let mut r = rng(93);
        let rho = faithful(&mut r, 2);
        let xi = faithful(&mut r, 2);
        let u = linalg::identity(4);
        let l = reduced_dynamics_from_unitary(&u, &xi, 2).unwrap();
        let rep = kms_dual_check(&l, &rho, &u, &xi).unwrap();
        assert!(rep.relation_deviation < 1e-12);
    }

    #[test]
    fn invariant_expansion_recovers_engineered_drift() {
        let mut r = rng(94);
        let base = faithful(&mut r, 3);
        let drift = traceless_hermitian(&mut r, 3) * C64::new(0.05, 0.0);
        let curve = traceless_hermitian(&mut r, 3) * C64::new(0.03, 0.0);
        let family = |l: f64| -> Result<Superoperator> {
            let target = base.op() + &drift * C64::new(l, 0.0) + &curve * C64::new(l * l, 0.0);
            Ok(Superoperator::from_map(3, |x| &target * linalg::trace(x)))
        };
        let exp = invariant_state_expansion(family).unwrap();
        assert!((&exp.rho1 - &drift).norm() < 1e-6);
        assert!((&exp.rho0 - base.op()).norm() < 1e-6);
        assert!(exp.error_estimate < 1e-6);
    }

    #[test]
    fn invariant_state_has_no_first_order_term() {
        let fx = fd_fixture(1.0);
        let exp = invariant_state_expansion(|l| fx.channel(l)).unwrap();
        assert!(exp.rho1.norm() < 1e-6, "{}", exp.rho1);
        assert!(linalg::trace(&exp.rho1).norm() < 1e-10);
        let h_e = models::probe_hamiltonian(0.8);
        let xi = gibbs_state(&h_e, 1.0).unwrap();
        let rw = |l: f64| {
            reduced_dynamics(
                &models::system_hamiltonian(1.0),
                &h_e,
                &models::coupling_rotating_wave(1.0),
                l,
                0.5,
                &xi,
            )
        };
        let exp = invariant_state_expansion(rw).unwrap();
        assert!(exp.rho1.norm() < 1e-6);
    }

    #[test]
    fn first_order_coefficient_matches_central_difference() {
        let fx = fd_fixture(1.0);
        let m = fx.m();
        // At |λ| = 1e-4 the relaxation eigenvalue sits within 1e-8 of 1, so
        // the fixed point is taken as the eigenvector closest to 1.
        let x_near = |l: f64| {
            let dec = crate::linalg::eig_general(fx.channel(l).unwrap().matrix()).unwrap();
            let i = (0..4)
                .min_by(|&a, &b| (dec.eigenvalues[a] - 1.0).norm().total_cmp(&(dec.eigenvalues[b] - 1.0).norm()))
                .unwrap();
            let r = linalg::unvec(&dec.right.column(i).into_owned(), 2);
            let r = linalg::hermitize(&(&r / linalg::trace(&r)));
            fx.kernel(l).commutator_defect(&r)
        };
        let h = 1e-4;
        let fd = (x_near(h) - x_near(-h)) / C64::new(2.0 * h, 0.0);
        assert!((&m - fd).norm() < 1e-6);
        assert!(linalg::trace(&m).norm() < 1e-10);
        assert!(linalg::hermitian_deviation(&m) < 1e-10);
    }

    #[test]
    fn closed_form_coefficient_agrees_in_modulus() {
        // The closed form fixes the entries up to the sign convention of the
        // two single-excitation corners; compare moduli entry by entry.
        let fx = fd_fixture(1.0);
        let m = fx.m();
        let closed = models::full_dipole_first_order_coefficient(0.9, 0.8, 0.5, 1.0, 1.0);
        for i in 0..4 {
            for j in 0..4 {
                assert!((m[(i, j)].norm() - closed[(i, j)].norm()).abs() < 1e-8, "({i},{j})");
            }
        }
    }

    #[test]
    fn defect_is_first_order_in_coupling() {
        let fx = fd_fixture(1.0);
        let m = fx.m();
        let scaled: Vec<f64> = [0.1, 0.05, 0.025]
            .iter()
            .map(|&l| linalg::trace_norm(&(fx.x(l) - &m * C64::new(l, 0.0))) / (l * l))
            .collect();
        let spread = scaled.iter().cloned().fold(0.0, f64::max) / scaled.iter().cloned().fold(f64::MAX, f64::min);
        assert!(spread < 1.5, "{scaled:?}");
    }

    #[test]
    fn vanishing_potential_leaves_state_term() {
        let mut r = rng(95);
        let fx = fd_fixture(1.0);
        let rho0 = linalg::from_real_diagonal(&[0.6, 0.4]);
        let rho1 = traceless_hermitian(&mut r, 2);
        let zero = Hamiltonian::zero(4);
        let m = first_order_m(&fx.h_s, &fx.h_e, &zero, fx.tau, &rho0, &rho1, &fx.xi).unwrap();
        let u0 = linalg::herm_propagator(&crate::channel::free_hamiltonian(&fx.h_s, &fx.h_e), fx.tau).unwrap();
        let w1 = linalg::kron(&rho1, fx.xi.op());
        assert!((m - (&u0 * &w1 * u0.adjoint() - &w1)).norm() < 1e-12);
        let off = linalg::identity(2) + random_hermitian(&mut r, 2);
        assert!(first_order_m(&fx.h_s, &fx.h_e, &fx.v, fx.tau, &off, &rho1, &fx.xi).is_err());
    }

    #[test]
    fn zero_inputs_predict_zero() {
        let rho0 = DensityMatrix::maximally_mixed(2);
        let z = Operator::zeros(4, 4);
        let p = sigma_small_coupling(0.1, &z, &z, &rho0, &DensityMatrix::maximally_mixed(2)).unwrap();
        assert_eq!(p.predicted, 0.0);
        assert!(p.admissible);
    }

    fn exact_and_predicted(fx: &Fixture, lambda: f64) -> (f64, f64) {
        let inv = invariant_state(&fx.channel(lambda).unwrap()).unwrap();
        let kernel = fx.kernel(lambda);
        let (next, bal) = simulate_step(&inv, &kernel).unwrap();
        let exp = invariant_state_expansion(|l| fx.channel(l)).unwrap();
        let m = first_order_m(&fx.h_s, &fx.h_e, &fx.v, fx.tau, &exp.rho0, &exp.rho1, &fx.xi).unwrap();
        let d = step_deviation(&kernel, inv.op(), next.op(), inv.op());
        let rho0 = DensityMatrix::with_tolerance(exp.rho0, 1e-9).unwrap();
        let p = sigma_small_coupling(lambda, &m, &d, &rho0, &fx.xi).unwrap();
        (bal.sigma, p.predicted)
    }

    #[test]
    fn small_coupling_prediction_at_invariant_state() {
        let fx = fd_fixture(1.0);
        let (exact, predicted) = exact_and_predicted(&fx, 0.05);
        assert!((exact - predicted).abs() <= 0.15 * exact, "{exact} {predicted}");
        let lambdas = [0.1, 0.05, 0.025];
        let res: Vec<f64> = lambdas
            .iter()
            .map(|&l| {
                let (e, p) = exact_and_predicted(&fx, l);
                (e - p).abs()
            })
            .collect();
        let slope = (res[0] / res[2]).ln() / 4f64.ln();
        assert!(slope >= 2.5, "{res:?}");
    }

    proptest! {
        #[test]
        fn quadratic_form_nonnegative(seed in 0u64..5_000, n in 2usize..5) {
            let mut r = rng(seed);
            let sp = EtaSpectral::new(&faithful(&mut r, n)).unwrap();
            let a = traceless_hermitian(&mut r, n);
            prop_assert!(f_eta_quadratic(&sp, &a).unwrap() >= -1e-10);
        }

        #[test]
        fn form_is_bilinear(seed in 0u64..5_000, alpha in -2.0f64..2.0) {
            let mut r = rng(seed);
            let sp = EtaSpectral::new(&faithful(&mut r, 3)).unwrap();
            let (a, b, c) = (traceless_hermitian(&mut r, 3), traceless_hermitian(&mut r, 3), traceless_hermitian(&mut r, 3));
            let al = C64::new(alpha, 0.0);
            let lhs = f_eta(&sp, &(&a * al + &b), &c).unwrap();
            let rhs = f_eta(&sp, &a, &c).unwrap() * al + f_eta(&sp, &b, &c).unwrap();
            prop_assert!((lhs - rhs).norm() <= 1e-12 * (1.0 + lhs.norm()));
        }

        #[test]
        fn form_bounded_by_inverse_floor(seed in 0u64..5_000) {
            let mut r = rng(seed);
            let sp = EtaSpectral::new(&faithful(&mut r, 3)).unwrap();
            let (a, b) = (traceless_hermitian(&mut r, 3), traceless_hermitian(&mut r, 3));
            let bound = linalg::operator_norm(&a) * linalg::operator_norm(&b) * 9.0 / sp.inf_sp;
            prop_assert!(f_eta(&sp, &a, &b).unwrap().norm() <= bound);
        }

        #[test]
        fn entropy_production_dominates_pinsker(seed in 0u64..2_000) {
            let mut r = rng(seed);
            let fx = fd_fixture(0.5 + r.random::<f64>());
            let lambda = 0.05 + r.random::<f64>();
            let inv = invariant_state(&fx.channel(lambda).unwrap()).unwrap();
            let rho = faithful(&mut r, 2);
            let kernel = fx.kernel(lambda);
            let (next, bal) = simulate_step(&rho, &kernel).unwrap();
            // D' = ω - η and D'' = ρ'⊗ξ - η with η = ρ^inv⊗ξ.
            let eta = linalg::kron(inv.op(), kernel.xi.op());
            let d1 = kernel.joint(rho.op()) - &eta;
            let d2 = linalg::kron(next.op(), kernel.xi.op()) - &eta;
            let gap = linalg::trace_norm(&(d2 - d1));
            prop_assert!(bal.sigma >= 0.5 * gap * gap - 1e-9);
        }
    }
}
