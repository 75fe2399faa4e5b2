//! Step-by-step execution of repeated interaction runs with an exact
//! entropy/energy ledger.
//!
//! Block `k = 1..=T` uses the probe configuration at `s = k/T` and repeats it
//! `m` times; the `k' `-th elementary step belongs to block `(k' - 1)/m + 1`.

pub mod schedule;

use log::warn;
use serde::Serialize;

use crate::channel::{invariant_state, power, reduced_dynamics, spectral_with, SpectralOptions, Superoperator};
use crate::error::{Error, Result};
use crate::linalg::{self, Operator, C64};
use crate::quantum::{gibbs_state, relative_entropy, von_neumann_entropy, DensityMatrix, Hamiltonian};
pub use schedule::{affine, constant, tabulated, CubicSpline, Sampler};

/// Tolerance used when re-validating evolved states.
const STATE_TOL: f64 = 1e-10;

#[derive(Clone)]
pub struct RisSchedule {
    pub h_s: Hamiltonian,
    pub h_e: Sampler<Hamiltonian>,
    pub beta: Sampler<f64>,
    pub v: Sampler<Hamiltonian>,
    pub lambda: f64,
    pub tau: f64,
    pub t: usize,
    pub m: usize,
}

impl std::fmt::Debug for RisSchedule {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RisSchedule")
            .field("d_sys", &self.d_sys())
            .field("d_env", &self.d_env())
            .field("lambda", &self.lambda)
            .field("tau", &self.tau)
            .field("t", &self.t)
            .field("m", &self.m)
            .finish()
    }
}

impl RisSchedule {
    pub fn d_sys(&self) -> usize {
        self.h_s.dim()
    }

    pub fn d_env(&self) -> usize {
        (self.h_e)(0.0).dim()
    }

    pub fn s_of(&self, k: usize) -> f64 {
        k as f64 / self.t as f64
    }

    /// Block index of the `k'`-th elementary step (both 1-based).
    pub fn block_of(&self, step: usize) -> usize {
        (step - 1) / self.m + 1
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 || self.m == 0 {
            return Err(Error::InvalidSchedule("T and m must be at least 1".into()));
        }
        if !self.lambda.is_finite() || !self.tau.is_finite() || self.tau < 0.0 {
            return Err(Error::InvalidSchedule("coupling and interaction time must be finite, τ ≥ 0".into()));
        }
        let (ds, de) = (self.d_sys(), self.d_env());
        for i in 0..=16 {
            let s = i as f64 / 16.0;
            let beta = (self.beta)(s);
            if !(beta >= 0.0 && beta.is_finite()) {
                return Err(Error::InvalidSchedule(format!("β({s}) = {beta} must be finite and nonnegative")));
            }
            if (self.h_e)(s).dim() != de || (self.v)(s).dim() != ds * de {
                return Err(Error::InvalidSchedule(format!("sampler dimensions change at s = {s}")));
            }
        }
        Ok(())
    }

    pub fn kernel(&self, s: f64) -> Result<StepKernel> {
        StepKernel::new(&self.h_s, &(self.h_e)(s), &(self.v)(s), self.lambda, self.tau, (self.beta)(s))
    }

    /// Verified one-step channel `L(s)`.
    pub fn channel(&self, s: f64) -> Result<Superoperator> {
        let h_e = (self.h_e)(s);
        let xi = gibbs_state(&h_e, (self.beta)(s))?;
        reduced_dynamics(&self.h_s, &h_e, &(self.v)(s), self.lambda, self.tau, &xi)
    }

    /// `L(s)^m`, the channel of one block.
    pub fn block_channel(&self, s: f64) -> Result<Superoperator> {
        Ok(power(&self.channel(s)?, self.m))
    }
}

/// Everything a single interaction step needs at a fixed `s`.
#[derive(Clone, Debug)]
pub struct StepKernel {
    pub beta: f64,
    pub h_e: Hamiltonian,
    pub xi: DensityMatrix,
    pub u: Operator,
    u_dag: Operator,
    probe_energy: f64,
}

impl StepKernel {
    pub fn new(h_s: &Hamiltonian, h_e: &Hamiltonian, v: &Hamiltonian, lambda: f64, tau: f64, beta: f64) -> Result<Self> {
        let xi = gibbs_state(h_e, beta)?;
        xi.require_faithful(1e-12)?;
        let u = crate::channel::step_unitary(h_s, h_e, v, lambda, tau)?;
        let probe_energy = xi.expectation(h_e.op()).re;
        Ok(Self { beta, h_e: h_e.clone(), u_dag: u.adjoint(), u, xi, probe_energy })
    }

    pub fn d_env(&self) -> usize {
        self.xi.dim()
    }

    /// `U(ρ⊗ξ)U*`.
    pub fn joint(&self, rho: &Operator) -> Operator {
        &self.u * linalg::kron(rho, self.xi.op()) * &self.u_dag
    }

    /// `U(ρ⊗ξ)U* - ρ⊗ξ`.
    pub fn commutator_defect(&self, rho: &Operator) -> Operator {
        let w = linalg::kron(rho, self.xi.op());
        &self.u * &w * &self.u_dag - w
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct StepBalance {
    pub ds: f64,
    pub dq: f64,
    pub sigma: f64,
    pub beta: f64,
    /// `dS + σ - β dQ`.
    pub residual: f64,
}

/// One interaction step. Entropy production is the relative entropy of the
/// joint state to the decoupled product, evaluated on the joint space.
pub fn simulate_step(rho: &DensityMatrix, kernel: &StepKernel) -> Result<(DensityMatrix, StepBalance)> {
    let d_sys = rho.dim();
    let d_env = kernel.d_env();
    let omega = kernel.joint(rho.op());
    let next = DensityMatrix::with_tolerance(linalg::partial_trace_env(&omega, d_sys, d_env)?, STATE_TOL)?;
    let probe = linalg::partial_trace_sys(&omega, d_sys, d_env)?;
    let dq = linalg::trace(&(kernel.h_e.op() * probe)).re - kernel.probe_energy;
    let ds = von_neumann_entropy(rho) - von_neumann_entropy(&next);
    let omega = DensityMatrix::with_tolerance(omega, STATE_TOL)?;
    let product = DensityMatrix::with_tolerance(linalg::kron(next.op(), kernel.xi.op()), STATE_TOL)?;
    let sigma = relative_entropy(&omega, &product)?;
    let residual = ds + sigma - kernel.beta * dq;
    Ok((next, StepBalance { ds, dq, sigma, beta: kernel.beta, residual }))
}

#[derive(Clone, Debug)]
pub struct StepRecord {
    pub k: usize,
    pub j: usize,
    pub s: f64,
    pub beta: f64,
    pub ds: f64,
    pub dq: f64,
    pub sigma: f64,
    pub balance_residual: f64,
    /// `||ρ - ρ^inv(s)||₁` after the step; NaN without diagnostics.
    pub dist_to_invariant: f64,
    /// `||U(ρ^inv⊗ξ)U* - ρ^inv⊗ξ||₁` at `s`; NaN without diagnostics.
    pub x_norm: f64,
    pub state_before: Option<DensityMatrix>,
    pub state_after: Option<DensityMatrix>,
}

#[derive(Clone, Copy, Debug)]
pub struct RunOptions {
    pub record_states: bool,
    /// Compute the invariant state and commutator defect of every block.
    pub diagnostics: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self { record_states: false, diagnostics: true }
    }
}

#[derive(Clone, Debug)]
pub struct RunLedger {
    pub steps: Vec<StepRecord>,
    pub sigma_tot: f64,
    pub ds_tot: f64,
    pub beta_dq_tot: f64,
    /// `Σ β_k ΔQ_k - Σ ΔS_k`.
    pub landauer_gap: f64,
    pub max_balance_residual: f64,
    pub min_sigma: f64,
    pub initial_entropy: f64,
    pub final_state: DensityMatrix,
    /// False when a step failed; `error` then holds the reason.
    pub complete: bool,
    pub error: Option<String>,
}

impl RunLedger {
    fn new(rho: &DensityMatrix) -> Self {
        Self {
            steps: Vec::new(),
            sigma_tot: 0.0,
            ds_tot: 0.0,
            beta_dq_tot: 0.0,
            landauer_gap: 0.0,
            max_balance_residual: 0.0,
            min_sigma: f64::INFINITY,
            initial_entropy: von_neumann_entropy(rho),
            final_state: rho.clone(),
            complete: false,
            error: None,
        }
    }

    /// `S(ρ_0) - S(ρ_final)`, which the summed entropy changes telescope to.
    pub fn entropy_drop(&self) -> f64 {
        self.initial_entropy - von_neumann_entropy(&self.final_state)
    }
}

struct BlockDiagnostics {
    invariant: Option<DensityMatrix>,
    x_norm: f64,
}

fn block_diagnostics(schedule: &RisSchedule, kernel: &StepKernel, s: f64) -> Result<BlockDiagnostics> {
    match invariant_state(&schedule.channel(s)?) {
        Ok(inv) => {
            let x_norm = linalg::trace_norm(&kernel.commutator_defect(inv.op()));
            Ok(BlockDiagnostics { invariant: Some(inv), x_norm })
        }
        Err(Error::ReducibleChannel(_)) => Ok(BlockDiagnostics { invariant: None, x_norm: f64::NAN }),
        Err(e) => Err(e),
    }
}

pub fn run(schedule: &RisSchedule, rho_i: &DensityMatrix) -> Result<RunLedger> {
    run_with(schedule, rho_i, &RunOptions::default())
}

/// Execute blocks `k = 1..=T`, each with `m` steps, in order. A failing step
/// stops the run and returns the partial ledger flagged incomplete.
pub fn run_with(schedule: &RisSchedule, rho_i: &DensityMatrix, opts: &RunOptions) -> Result<RunLedger> {
    schedule.validate()?;
    if rho_i.dim() != schedule.d_sys() {
        return Err(Error::DimensionMismatch(format!(
            "initial state of dimension {} for a {}-level system",
            rho_i.dim(),
            schedule.d_sys()
        )));
    }
    let mut ledger = RunLedger::new(rho_i);
    ledger.steps.reserve(schedule.t * schedule.m);
    let mut rho = rho_i.clone();
    let outcome = (|| -> Result<()> {
        for k in 1..=schedule.t {
            let s = schedule.s_of(k);
            let kernel = schedule.kernel(s)?;
            let diag = if opts.diagnostics {
                Some(block_diagnostics(schedule, &kernel, s)?)
            } else {
                None
            };
            for j in 1..=schedule.m {
                let (next, bal) = simulate_step(&rho, &kernel)?;
                let dist = match diag.as_ref().and_then(|d| d.invariant.as_ref()) {
                    Some(inv) => linalg::trace_norm(&(next.op() - inv.op())),
                    None => f64::NAN,
                };
                ledger.sigma_tot += bal.sigma;
                ledger.ds_tot += bal.ds;
                ledger.beta_dq_tot += bal.beta * bal.dq;
                ledger.max_balance_residual = ledger.max_balance_residual.max(bal.residual.abs());
                ledger.min_sigma = ledger.min_sigma.min(bal.sigma);
                ledger.steps.push(StepRecord {
                    k,
                    j,
                    s,
                    beta: bal.beta,
                    ds: bal.ds,
                    dq: bal.dq,
                    sigma: bal.sigma,
                    balance_residual: bal.residual,
                    dist_to_invariant: dist,
                    x_norm: diag.as_ref().map_or(f64::NAN, |d| d.x_norm),
                    state_before: opts.record_states.then(|| rho.clone()),
                    state_after: opts.record_states.then(|| next.clone()),
                });
                rho = next;
            }
        }
        Ok(())
    })();
    ledger.landauer_gap = ledger.beta_dq_tot - ledger.ds_tot;
    ledger.final_state = rho;
    match outcome {
        Ok(()) => ledger.complete = true,
        Err(e) => {
            warn!("run stopped after {} steps: {e}", ledger.steps.len());
            ledger.error = Some(e.to_string());
        }
    }
    Ok(ledger)
}

#[derive(Clone, Debug, Serialize)]
pub struct TrackingReport {
    /// `||ρ_k - ρ^inv(k/T)||₁` at the end of each block `k = 1..=T`.
    pub distances: Vec<f64>,
    /// Largest distance over blocks with `k/T ∈ [1/4, 3/4]`.
    pub max_mid: f64,
    /// `||Q₀ ρ^i||₁`.
    pub initial_q_component: f64,
    /// Spectral radius of `L^m Q` at `s = 0`.
    pub ell_spr_initial: f64,
}

/// Distance of the evolved state to the instantaneous invariant state.
pub fn adiabatic_state_tracking(schedule: &RisSchedule, rho_i: &DensityMatrix) -> Result<TrackingReport> {
    schedule.validate()?;
    let d = schedule.d_sys();
    let l0 = schedule.block_channel(0.0)?;
    invariant_state(&schedule.channel(0.0)?)?;
    let sp = spectral_with(&l0, &SpectralOptions::without_norm())?;
    let unit = sp
        .unit_cluster()
        .ok_or_else(|| Error::ReducibleChannel("eigenvalue 1 missing at s = 0".into()))?;
    let v = linalg::vec_of(rho_i.op());
    for &c in &sp.peripheral_indices {
        if c == unit {
            continue;
        }
        let part = (&sp.clusters[c].projector * &v).norm();
        if part > 1e-8 {
            return Err(Error::Precondition(format!(
                "initial state has a component {part:e} on the peripheral eigenvalue {}",
                sp.clusters[c].value
            )));
        }
    }
    let initial_q_component = linalg::trace_norm(&linalg::unvec(&(&sp.q * &v), d));

    let mut state = rho_i.op().clone();
    let mut distances = Vec::with_capacity(schedule.t);
    let mut max_mid = 0.0f64;
    for k in 1..=schedule.t {
        let s = schedule.s_of(k);
        let l = schedule.channel(s)?;
        let inv = invariant_state(&l)?;
        state = power(&l, schedule.m).apply(&state);
        let dist = linalg::trace_norm(&(&state - inv.op()));
        if (0.25..=0.75).contains(&s) {
            max_mid = max_mid.max(dist);
        }
        distances.push(dist);
    }
    Ok(TrackingReport { distances, max_mid, initial_q_component, ell_spr_initial: sp.ell_spr })
}

/// Trace-preserving check used by callers that evolve raw operators.
pub fn trace_deviation(rho: &Operator) -> f64 {
    (linalg::trace(rho) - C64::new(1.0, 0.0)).norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::testutil::*;
    use crate::models;
    use proptest::prelude::*;
    use rand::Rng;

    fn rw_schedule(t: usize, m: usize, lambda: f64) -> RisSchedule {
        RisSchedule {
            h_s: models::system_hamiltonian(1.0),
            h_e: constant(models::probe_hamiltonian(0.8)),
            beta: affine(1.0, 1.0),
            v: constant(models::coupling_rotating_wave(1.0)),
            lambda,
            tau: 0.5,
            t,
            m,
        }
    }

    fn random_kernel(r: &mut impl Rng, full: bool) -> StepKernel {
        let v = if full { models::coupling_full_dipole(1.0) } else { models::coupling_rotating_wave(1.0) };
        StepKernel::new(
            &models::system_hamiltonian(0.5 + r.random::<f64>()),
            &models::probe_hamiltonian(0.5 + r.random::<f64>()),
            &v,
            2.0 * r.random::<f64>(),
            0.1 + 1.9 * r.random::<f64>(),
            0.1 + 2.9 * r.random::<f64>(),
        )
        .unwrap()
    }

    #[test]
    fn decoupled_step_produces_nothing() {
        let mut r = rng(81);
        let rho = DensityMatrix::new(random_state(&mut r, 2)).unwrap();
        let k = StepKernel::new(
            &models::system_hamiltonian(1.0),
            &models::probe_hamiltonian(0.8),
            &models::coupling_full_dipole(1.0),
            0.0,
            0.7,
            1.2,
        )
        .unwrap();
        let (_, b) = simulate_step(&rho, &k).unwrap();
        assert!(b.ds.abs() < 1e-10 && b.dq.abs() < 1e-10 && b.sigma.abs() < 1e-10, "{b:?}");
    }

    #[test]
    fn sigma_matches_definition_with_logs() {
        // Duplicate of the definition: Tr ω log ω - Tr ω log(ρ'⊗ξ), with
        // logarithms from independent Hermitian eigendecompositions.
        let mut r = rng(82);
        let rho = DensityMatrix::new(random_state(&mut r, 2)).unwrap();
        let k = random_kernel(&mut r, false);
        let (next, b) = simulate_step(&rho, &k).unwrap();
        let omega = k.joint(rho.op());
        let prod = linalg::kron(next.op(), k.xi.op());
        let log = |a: &Operator| linalg::herm_function(&linalg::hermitize(a), |w| C64::new(w.ln(), 0.0));
        let expect = linalg::trace(&(&omega * (log(&omega) - log(&prod)))).re;
        assert!((b.sigma - expect).abs() < 1e-11);
    }

    #[test]
    fn single_block_run_is_a_step() {
        let mut r = rng(83);
        let rho = DensityMatrix::new(random_state(&mut r, 2)).unwrap();
        let sch = rw_schedule(1, 1, 0.7);
        let ledger = run(&sch, &rho).unwrap();
        let (next, b) = simulate_step(&rho, &sch.kernel(1.0).unwrap()).unwrap();
        assert_eq!(ledger.steps.len(), 1);
        assert_eq!(ledger.steps[0].sigma, b.sigma);
        assert_eq!(ledger.final_state, next);
        assert!(ledger.complete);
    }

    #[test]
    fn block_index_map() {
        let sch = rw_schedule(4, 3, 0.1);
        let blocks: Vec<usize> = (1..=12).map(|k| sch.block_of(k)).collect();
        assert_eq!(blocks, vec![1, 1, 1, 2, 2, 2, 3, 3, 3, 4, 4, 4]);
    }

    #[test]
    fn ledger_totals_telescope() {
        let mut r = rng(84);
        let rho = DensityMatrix::new(random_state(&mut r, 2)).unwrap();
        let mut sch = rw_schedule(20, 3, 0.9);
        sch.v = constant(models::coupling_full_dipole(1.0));
        let ledger = run(&sch, &rho).unwrap();
        assert!((ledger.ds_tot - ledger.entropy_drop()).abs() < 1e-9);
        assert!((ledger.sigma_tot - ledger.landauer_gap).abs() < 1e-8);
        assert!(ledger.landauer_gap >= -1e-8);
        assert!(trace_deviation(ledger.final_state.op()) < 1e-10);
        assert!(ledger.steps.iter().all(|s| s.x_norm > 1e-3));
    }

    #[test]
    fn repeated_constant_block_equals_channel_power() {
        let mut r = rng(85);
        let rho = DensityMatrix::new(random_state(&mut r, 2)).unwrap();
        let mut sch = rw_schedule(1, 7, 0.6);
        sch.beta = constant(1.3);
        let ledger = run(&sch, &rho).unwrap();
        let expect = sch.block_channel(0.5).unwrap().apply(rho.op());
        assert!((ledger.final_state.op() - expect).norm() < 1e-12);
    }

    #[test]
    fn stationary_run_stays_invariant() {
        let mut sch = rw_schedule(30, 2, 0.8);
        sch.beta = constant(1.0);
        let inv = invariant_state(&sch.channel(0.0).unwrap()).unwrap();
        let rep = adiabatic_state_tracking(&sch, &inv).unwrap();
        assert!(rep.distances.iter().all(|&d| d <= 1e-9));
        let ledger = run(&sch, &inv).unwrap();
        assert!(ledger.steps.iter().all(|s| s.dist_to_invariant <= 1e-9));
        assert!(ledger.sigma_tot.abs() < 1e-9);
    }

    #[test]
    fn tracking_envelope_with_contracting_component() {
        let sch = rw_schedule(200, 1, 1.5);
        let rho = DensityMatrix::new(linalg::from_real_diagonal(&[0.1, 0.9])).unwrap();
        let rep = adiabatic_state_tracking(&sch, &rho).unwrap();
        assert!(rep.initial_q_component > 0.1);
        let ell = rep.ell_spr_initial;
        for (i, d) in rep.distances.iter().enumerate().take(20) {
            let envelope = 2.0 * rep.initial_q_component * ell.powi(i as i32 + 1) + 5.0 / sch.t as f64;
            assert!(*d <= envelope, "k={} {d} > {envelope}", i + 1);
        }
    }

    #[test]
    fn reducible_channel_gives_nan_diagnostics() {
        let mut sch = rw_schedule(2, 1, 0.0);
        sch.beta = constant(1.0);
        let rho = DensityMatrix::maximally_mixed(2);
        let ledger = run(&sch, &rho).unwrap();
        assert!(ledger.steps.iter().all(|s| s.dist_to_invariant.is_nan()));
        assert!(matches!(adiabatic_state_tracking(&sch, &rho), Err(Error::ReducibleChannel(_))));
    }

    #[test]
    fn invalid_schedules_rejected() {
        let mut sch = rw_schedule(3, 1, 0.3);
        sch.beta = affine(-1.0, 0.5);
        assert!(matches!(run(&sch, &DensityMatrix::maximally_mixed(2)), Err(Error::InvalidSchedule(_))));
        let sch = rw_schedule(0, 1, 0.3);
        assert!(sch.validate().is_err());
    }

    proptest! {
        #[test]
        fn balance_holds_on_random_steps(seed in 0u64..5_000, full in any::<bool>()) {
            let mut r = rng(seed);
            let rho = DensityMatrix::new(random_state(&mut r, 2)).unwrap();
            let k = random_kernel(&mut r, full);
            let (next, b) = simulate_step(&rho, &k).unwrap();
            prop_assert!(b.residual.abs() <= 1e-9);
            prop_assert!(b.sigma >= -1e-9);
            prop_assert!(trace_deviation(next.op()) <= 1e-10);
        }
    }
}
