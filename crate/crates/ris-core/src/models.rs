//! Two-level system coupled to two-level probes through their dipoles, with
//! closed-form expressions used to validate the numerics.
//!
//! Single-qubit basis is `(ground, excited)`; the joint basis is
//! `system ⊗ probe`, so index 0 is `|gg⟩` and index 3 is `|ee⟩`.

use crate::linalg::{self, Operator, C64, ONE, ZERO};
use crate::quantum::Hamiltonian;

/// Lowering operator `|g⟩⟨e|`.
pub fn lowering() -> Operator {
    let mut a = Operator::zeros(2, 2);
    a[(0, 1)] = ONE;
    a
}

pub fn raising() -> Operator {
    lowering().adjoint()
}

/// `E a*a`.
pub fn system_hamiltonian(e: f64) -> Hamiltonian {
    Hamiltonian::new(linalg::from_real_diagonal(&[0.0, e])).expect("diagonal is Hermitian")
}

/// `E₀ b*b`.
pub fn probe_hamiltonian(e0: f64) -> Hamiltonian {
    system_hamiltonian(e0)
}

/// Rotating-wave coupling `(u₁/2)(a*⊗b + a⊗b*)`.
pub fn coupling_rotating_wave(u1: f64) -> Hamiltonian {
    let (a, ad) = (lowering(), raising());
    let v = (linalg::kron(&ad, &a) + linalg::kron(&a, &ad)) * C64::new(u1 / 2.0, 0.0);
    Hamiltonian::new(v).expect("Hermitian by construction")
}

/// Full dipole coupling `(u₁/2)(a + a*)⊗(b + b*)`.
pub fn coupling_full_dipole(u1: f64) -> Hamiltonian {
    let x = lowering() + raising();
    Hamiltonian::new(linalg::kron(&x, &x) * C64::new(u1 / 2.0, 0.0)).expect("Hermitian by construction")
}

/// Inverse temperature of the rotating-wave invariant state: `β E₀ / E`.
pub fn rotating_wave_invariant_beta(beta: f64, e: f64, e0: f64) -> f64 {
    beta * e0 / e
}

/// Spectral radius of `LQ` for the rotating-wave channel,
/// `(1 - λ²/(Δ²+λ²) sin²(ντ/2))^{1/2}` with `Δ = E - E₀`, `ν = √(Δ²+λ²)`.
pub fn rotating_wave_contraction(e: f64, e0: f64, lambda: f64, tau: f64) -> f64 {
    let delta = e - e0;
    let nu2 = delta * delta + lambda * lambda;
    let nu = nu2.sqrt();
    let s = (nu * tau / 2.0).sin();
    (1.0 - lambda * lambda / nu2 * s * s).max(0.0).sqrt()
}

/// Diagonal `(ρ₀₀, ρ₁₁)` of the full-dipole invariant state.
pub fn full_dipole_invariant_diagonal(e: f64, e0: f64, lambda: f64, tau: f64, beta: f64) -> (f64, f64) {
    let nu = ((e0 - e).powi(2) + lambda * lambda).sqrt();
    let eta = ((e + e0).powi(2) + lambda * lambda).sqrt();
    let a = (1.0 - (nu * tau).cos()) * eta * eta;
    let b = nu * nu * (1.0 - (eta * tau).cos());
    let w = (beta * e0).exp();
    let den = (1.0 + w) * (a + b);
    ((w * a + b) / den, (a + w * b) / den)
}

/// Denominator shared by the rate constant and the first-order coefficient.
fn rate_denominator(e: f64, e0: f64, tau: f64) -> f64 {
    2.0 * e0 * e * (e0 * tau).sin() * (e * tau).sin()
        - (e0 * e0 + e * e) * (1.0 - (e0 * tau).cos() * (e * tau).cos())
}

/// Small-coupling rate constant of the full-dipole model.
///
/// The off-resonant branch is written with the denominator negated, which is
/// the sign that makes it positive and continuous with the resonant branch.
pub fn full_dipole_rate_constant(e: f64, e0: f64, tau: f64, u1: f64) -> f64 {
    if (e - e0).abs() <= 1e-12 * e.abs().max(1.0) {
        let x = e0 * tau;
        2.0 * u1 * u1 * tau * tau * x.sin().powi(2) / (1.0 + 2.0 * x * x - (2.0 * x).cos())
    } else {
        let num = u1 * u1 * ((e0 * tau).cos() - (e * tau).cos()).powi(2);
        -num / rate_denominator(e, e0, tau)
    }
}

/// Per-step entropy production predicted at small coupling:
/// `λ² γ (βE₀/2) tanh(βE₀/2)`.
pub fn full_dipole_step_rate(lambda: f64, gamma: f64, beta: f64, e0: f64) -> f64 {
    let x = beta * e0 / 2.0;
    lambda * lambda * gamma * x * x.tanh()
}

/// Closed-form first-order coefficient of the full-dipole commutator defect,
/// transcribed entry by entry in the joint energy basis.
pub fn full_dipole_first_order_coefficient(e: f64, e0: f64, tau: f64, beta: f64, u1: f64) -> Operator {
    let nu0 = (e - e0).abs();
    let eta0 = (e + e0).abs();
    let a = 0.5 * (beta * e0 / 2.0).tanh() * u1 / rate_denominator(e, e0, tau);
    let phase = |x: f64| C64::from_polar(1.0, x);
    let outer = (phase(tau * eta0) - ONE) * ((nu0 * tau / 2.0).sin().powi(2) * eta0);
    let inner = (phase(tau * nu0) - ONE) * ((eta0 * tau / 2.0).sin().powi(2) * nu0);
    let mut m = Operator::from_element(4, 4, ZERO);
    m[(0, 3)] = -outer * a;
    m[(1, 2)] = -inner * a;
    m[(2, 1)] = phase(-nu0 * tau) * inner * a;
    m[(3, 0)] = phase(-eta0 * tau) * outer * a;
    m
}
