//! Discrete non-unitary adiabatic approximation along a sampled path of
//! channels `L_0, ..., L_T`.
//!
//! The Kato intertwiners transport the peripheral spectral subspaces from one
//! sample to the next; the phase factors accumulate the peripheral eigenvalues.
//! Their product `A_k = K_k Φ_k` approximates `L_k ⋯ L_1` on the peripheral
//! part to `O(1/T)`.

use serde::Serialize;

use crate::channel::{
    induced_trace_norm_with, spectral_with, NormEstimate, NormOptions, SpectralOptions, Superoperator,
};
use crate::error::{Error, Result};
use crate::linalg::{self, eig_general, Operator, C64};
use crate::par::{self, Execution};

#[derive(Clone, Debug)]
pub struct PathSample {
    /// Peripheral eigenvalues, labelled consistently along the path.
    pub eigenvalues: Vec<C64>,
    /// Matching peripheral spectral projectors.
    pub projectors: Vec<Operator>,
    pub p: Operator,
    pub q: Operator,
    pub ell_spr: f64,
}

#[derive(Clone, Debug)]
pub struct ProjectorPath {
    pub t: usize,
    pub samples: Vec<PathSample>,
    /// Largest scaled first and second divided difference of projectors and
    /// eigenvalues, in the matrix 2-norm.
    pub c_p_estimate: f64,
    pub ell_spr_max: f64,
}

impl ProjectorPath {
    /// Spectral data of `channels[k]` for `k = 0..=T`.
    pub fn from_channels(channels: &[Superoperator], exec: Execution) -> Result<Self> {
        if channels.len() < 2 {
            return Err(Error::Precondition("a projector path needs at least two samples".into()));
        }
        let t = channels.len() - 1;
        let opts = SpectralOptions::without_norm();
        let spectra = par::map_slice(exec, channels, |l| spectral_with(l, &opts))
            .into_iter()
            .collect::<Result<Vec<_>>>()?;

        let mut samples: Vec<PathSample> = Vec::with_capacity(t + 1);
        for (k, sp) in spectra.into_iter().enumerate() {
            if sp.near_degenerate_boundary {
                return Err(Error::NearDegeneratePeripheral { modulus: sp.ell_spr });
            }
            let mut values = sp.peripheral_values();
            let mut projectors = sp.peripheral_projectors();
            if let Some(prev) = samples.last() {
                if values.len() != prev.eigenvalues.len() {
                    return Err(Error::PeripheralMismatch { k });
                }
                let order = match_labels(&prev.eigenvalues, &values);
                values = order.iter().map(|&i| values[i]).collect();
                projectors = order.iter().map(|&i| projectors[i].clone()).collect();
            }
            samples.push(PathSample {
                eigenvalues: values,
                projectors,
                p: sp.p,
                q: sp.q,
                ell_spr: sp.ell_spr,
            });
        }

        let tf = t as f64;
        let mut c_p = 0.0f64;
        for k in 1..=t {
            let (a, b) = (&samples[k - 1], &samples[k]);
            for j in 0..a.projectors.len() {
                c_p = c_p.max(tf * linalg::operator_norm(&(&b.projectors[j] - &a.projectors[j])));
                c_p = c_p.max(tf * (b.eigenvalues[j] - a.eigenvalues[j]).norm());
                if k < t {
                    let c = &samples[k + 1];
                    let second = &c.projectors[j] - &b.projectors[j] * C64::new(2.0, 0.0) + &a.projectors[j];
                    c_p = c_p.max(tf * tf * linalg::operator_norm(&second));
                }
            }
        }
        let ell_spr_max = samples.iter().map(|s| s.ell_spr).fold(0.0, f64::max);
        Ok(Self { t, samples, c_p_estimate: c_p, ell_spr_max })
    }

    pub fn dim(&self) -> usize {
        self.samples[0].p.nrows()
    }
}

/// Assign each previous label the nearest unused new eigenvalue.
fn match_labels(prev: &[C64], next: &[C64]) -> Vec<usize> {
    let n = prev.len();
    let mut pairs: Vec<(f64, usize, usize)> = Vec::with_capacity(n * n);
    for (i, p) in prev.iter().enumerate() {
        for (j, q) in next.iter().enumerate() {
            pairs.push(((p - q).norm(), i, j));
        }
    }
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut order = vec![usize::MAX; n];
    let mut used = vec![false; n];
    for (_, i, j) in pairs {
        if order[i] == usize::MAX && !used[j] {
            order[i] = j;
            used[j] = true;
        }
    }
    order
}

/// `(I - X)^{-1/2}` where `X = (ΔP)²` and `||ΔP|| = dp_norm < 1`.
fn inverse_sqrt_complement(x: &Operator, dp_norm: f64) -> Result<Operator> {
    let n = x.nrows();
    if dp_norm < 0.3 {
        // Binomial series Σ c_n X^n with c_n = c_{n-1} (2n-1)/(2n).
        let mut sum = linalg::identity(n);
        let mut term = linalg::identity(n);
        let mut c = 1.0;
        for k in 1..=400 {
            c *= (2 * k - 1) as f64 / (2 * k) as f64;
            term = &term * x;
            let add = &term * C64::new(c, 0.0);
            let size = add.norm();
            sum += add;
            if size <= 1e-14 * sum.norm() {
                break;
            }
        }
        return Ok(sum);
    }
    let dec = eig_general(&(linalg::identity(n) - x))?;
    Ok(dec.apply_function(|w| w.sqrt().inv()))
}

/// One Kato step between consecutive peripheral projector families.
pub fn kato_step(prev: &[Operator], next: &[Operator]) -> Result<(Operator, Operator)> {
    if prev.len() != next.len() || prev.is_empty() {
        return Err(Error::DimensionMismatch("projector families differ in size".into()));
    }
    let n = prev[0].nrows();
    let mut kappa = Operator::zeros(n, n);
    let mut kappa_dag = Operator::zeros(n, n);
    for (p0, p1) in prev.iter().zip(next) {
        let dp = p1 - p0;
        let norm = linalg::operator_norm(&dp);
        if norm >= 1.0 {
            return Err(Error::StepTooLarge { k: 0, norm });
        }
        let y = inverse_sqrt_complement(&(&dp * &dp), norm)?;
        kappa += p1 * p0 * &y;
        kappa_dag += p0 * p1 * &y;
    }
    Ok((kappa, kappa_dag))
}

#[derive(Clone, Debug)]
pub struct AdiabaticPropagator {
    pub k: Vec<Operator>,
    pub k_dag: Vec<Operator>,
    pub phi: Vec<Operator>,
    pub phi_dag: Vec<Operator>,
    pub a: Vec<Operator>,
    pub a_dag: Vec<Operator>,
    /// `max_k ||A_k||` in the matrix 2-norm.
    pub a_norm_max: f64,
}

#[derive(Clone, Copy, Debug, Serialize)]
pub struct IdentityResiduals {
    pub k: usize,
    /// `||A†A - P_0||_F`
    pub adag_a: f64,
    /// `||AA† - P_k||_F`
    pub a_adag: f64,
    /// `max_j ||A P_0^j - P_k^j A||_F`
    pub intertwining: f64,
    /// `||A Q_0||_F + ||Q_0 A†||_F`
    pub q_annihilation: f64,
}

impl IdentityResiduals {
    pub fn max(&self) -> f64 {
        self.adag_a.max(self.a_adag).max(self.intertwining).max(self.q_annihilation)
    }
}

pub fn build_propagator(path: &ProjectorPath) -> Result<AdiabaticPropagator> {
    if path.ell_spr_max >= 1.0 {
        return Err(Error::Precondition(format!(
            "contracting part has spectral radius {}",
            path.ell_spr_max
        )));
    }
    let n = path.dim();
    let t = path.t;
    let first = &path.samples[0];
    let nper = first.projectors.len();

    let mut k_ops = vec![first.p.clone()];
    let mut k_dag = vec![first.p.clone()];
    let mut phi = vec![first.p.clone()];
    let mut phi_dag = vec![first.p.clone()];
    let mut phases = vec![C64::new(1.0, 0.0); nper];

    for k in 1..=t {
        let (kappa, kappa_dag) = kato_step(&path.samples[k - 1].projectors, &path.samples[k].projectors)
            .map_err(|e| match e {
                Error::StepTooLarge { norm, .. } => Error::StepTooLarge { k, norm },
                other => other,
            })?;
        let next_k = &kappa * &k_ops[k - 1];
        let next_k_dag = &k_dag[k - 1] * &kappa_dag;
        k_ops.push(next_k);
        k_dag.push(next_k_dag);

        let mut f = Operator::zeros(n, n);
        let mut fd = Operator::zeros(n, n);
        for (j, phase) in phases.iter_mut().enumerate().take(nper) {
            *phase *= path.samples[k].eigenvalues[j];
            f += &first.projectors[j] * *phase;
            fd += &first.projectors[j] * phase.conj();
        }
        phi.push(f);
        phi_dag.push(fd);
    }
    let a: Vec<Operator> = k_ops.iter().zip(&phi).map(|(kk, f)| kk * f).collect();
    let a_dag: Vec<Operator> = phi_dag.iter().zip(&k_dag).map(|(f, kk)| f * kk).collect();
    let a_norm_max = a.iter().map(linalg::operator_norm).fold(0.0, f64::max);
    Ok(AdiabaticPropagator { k: k_ops, k_dag, phi, phi_dag, a, a_dag, a_norm_max })
}

impl AdiabaticPropagator {
    pub fn identity_residuals(&self, path: &ProjectorPath) -> Vec<IdentityResiduals> {
        let s0 = &path.samples[0];
        (0..self.a.len())
            .map(|k| {
                let (a, ad) = (&self.a[k], &self.a_dag[k]);
                let sk = &path.samples[k];
                let intertwining = s0
                    .projectors
                    .iter()
                    .zip(&sk.projectors)
                    .map(|(p0, pk)| (a * p0 - pk * a).norm())
                    .fold(0.0, f64::max);
                IdentityResiduals {
                    k,
                    adag_a: (ad * a - &s0.p).norm(),
                    a_adag: (a * ad - &sk.p).norm(),
                    intertwining,
                    q_annihilation: (a * &s0.q).norm() + (&s0.q * ad).norm(),
                }
            })
            .collect()
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct AdiabaticErrorReport {
    /// `||L_k⋯L_1 - A_k - L^Q_k⋯L^Q_1 Q_0||` for `k = 1..=T`.
    pub e1: Vec<NormEstimate>,
    /// `||L_k⋯L_1 P_0 - L^P_k⋯L^P_1 P_0||`.
    pub e2: Vec<NormEstimate>,
    /// `||L^Q_k⋯L^Q_1 Q_0||`.
    pub q_chain: Vec<NormEstimate>,
    pub max_e1: f64,
    pub max_e2: f64,
    /// `max_k ||L_k Q_k||`.
    pub ell: f64,
}

/// Error of the adiabatic approximation for `channels = [L_1, ..., L_T]`.
pub fn adiabatic_error(
    channels: &[Superoperator],
    path: &ProjectorPath,
    prop: &AdiabaticPropagator,
    norm: &NormOptions,
    exec: Execution,
) -> Result<AdiabaticErrorReport> {
    let t = path.t;
    if channels.len() != t || prop.a.len() != t + 1 {
        return Err(Error::DimensionMismatch(format!(
            "{} channels for a path of length {}",
            channels.len(),
            t
        )));
    }
    let d = channels[0].dim();
    let n = d * d;
    let s0 = &path.samples[0];
    let mut full = linalg::identity(n);
    let mut lq = linalg::identity(n);
    let mut lp = linalg::identity(n);
    let mut chains = Vec::with_capacity(t);
    for k in 1..=t {
        let l = channels[k - 1].matrix();
        let sk = &path.samples[k];
        full = l * &full;
        lq = l * &sk.q * &lq;
        lp = l * &sk.p * &lp;
        chains.push((full.clone(), &lq * &s0.q, &lp * &s0.p));
    }
    let sup = |m: Operator| Superoperator::from_matrix(d, m).expect("square");
    let rows = par::map_range(exec, t, |i| {
        let k = i + 1;
        let (full_k, q_k, p_k) = &chains[i];
        let e1 = induced_trace_norm_with(&sup(full_k - &prop.a[k] - q_k), norm);
        let e2 = induced_trace_norm_with(&sup(full_k * &s0.p - p_k), norm);
        let qc = induced_trace_norm_with(&sup(q_k.clone()), norm);
        let lqk = induced_trace_norm_with(&sup(channels[i].matrix() * &path.samples[k].q), norm);
        (e1, e2, qc, lqk.value)
    });
    let mut e1 = Vec::with_capacity(t);
    let mut e2 = Vec::with_capacity(t);
    let mut q_chain = Vec::with_capacity(t);
    let mut ell = 0.0f64;
    for (a, b, c, l) in rows {
        e1.push(a);
        e2.push(b);
        q_chain.push(c);
        ell = ell.max(l);
    }
    let max_e1 = e1.iter().map(|e| e.value).fold(0.0, f64::max);
    let max_e2 = e2.iter().map(|e| e.value).fold(0.0, f64::max);
    Ok(AdiabaticErrorReport { e1, e2, q_chain, max_e1, max_e2, ell })
}
