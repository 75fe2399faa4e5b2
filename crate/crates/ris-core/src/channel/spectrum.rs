//! Spectral projectors, peripheral structure and invariant states.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::norm::{induced_trace_norm_with, NormEstimate, NormOptions};
use super::Superoperator;
use crate::error::{Error, Result};
use crate::linalg::{self, eig_general_with, Operator, C64};
use crate::quantum::DensityMatrix;
use crate::tolerances::Tolerances;

#[derive(Clone, Debug)]
pub struct SpectralCluster {
    pub value: C64,
    pub multiplicity: usize,
    pub projector: Operator,
}

#[derive(Clone, Debug)]
pub struct ChannelSpectrum {
    /// All eigenvalues with multiplicity.
    pub eigs: Vec<C64>,
    pub clusters: Vec<SpectralCluster>,
    /// Cluster indices on the unit circle, ordered by angle in `[0, 2π)`.
    pub peripheral_indices: Vec<usize>,
    /// Order of the peripheral group when the peripheral set is `S_z` with simple eigenvalues.
    pub z: Option<usize>,
    /// Minimum distance between distinct peripheral eigenvalues.
    pub gap: Option<f64>,
    pub p: Operator,
    pub q: Operator,
    /// Induced trace norm of `L Q` (skipped when no norm options are given).
    pub ell_norm: Option<NormEstimate>,
    /// Spectral radius of `L Q`.
    pub ell_spr: f64,
    /// The largest non-peripheral modulus sits within the boundary tolerance of 1.
    pub near_degenerate_boundary: bool,
    pub reconstruction_residual: f64,
    /// Relative mismatch between the resolvent and `Σ P_j / (z - e_j)` at random points.
    pub resolvent_residual: f64,
}

impl ChannelSpectrum {
    pub fn peripheral_values(&self) -> Vec<C64> {
        self.peripheral_indices.iter().map(|&c| self.clusters[c].value).collect()
    }

    pub fn peripheral_projectors(&self) -> Vec<Operator> {
        self.peripheral_indices
            .iter()
            .map(|&c| self.clusters[c].projector.clone())
            .collect()
    }

    /// Cluster index whose value is closest to 1.
    pub fn unit_cluster(&self) -> Option<usize> {
        self.peripheral_indices.iter().copied().min_by(|&a, &b| {
            (self.clusters[a].value - 1.0)
                .norm()
                .total_cmp(&(self.clusters[b].value - 1.0).norm())
        })
    }
}

#[derive(Clone, Debug)]
pub struct SpectralOptions {
    pub tol: Tolerances,
    pub norm: Option<NormOptions>,
    pub resolvent_seed: u64,
}

impl Default for SpectralOptions {
    fn default() -> Self {
        Self {
            tol: Tolerances::default(),
            norm: Some(NormOptions::default()),
            resolvent_seed: 0x5eed_0002,
        }
    }
}

impl SpectralOptions {
    pub fn without_norm() -> Self {
        Self { norm: None, ..Self::default() }
    }
}

pub fn spectral(s: &Superoperator) -> Result<ChannelSpectrum> {
    spectral_with(s, &SpectralOptions::default())
}

fn angle(z: C64) -> f64 {
    let a = z.arg();
    if a < -1e-9 {
        a + std::f64::consts::TAU
    } else {
        a.max(0.0)
    }
}

pub fn spectral_with(s: &Superoperator, opts: &SpectralOptions) -> Result<ChannelSpectrum> {
    let tol = &opts.tol;
    let mat = s.matrix();
    let n = mat.nrows();
    let dec = eig_general_with(mat, tol)?;
    let clusters: Vec<SpectralCluster> = (0..dec.clusters.len())
        .map(|c| SpectralCluster {
            value: dec.cluster_value(c),
            multiplicity: dec.clusters[c].len(),
            projector: dec.cluster_projector(c),
        })
        .collect();

    let mut peripheral_indices: Vec<usize> = (0..clusters.len())
        .filter(|&c| clusters[c].value.norm() > 1.0 - tol.peripheral)
        .collect();
    peripheral_indices.sort_by(|&a, &b| angle(clusters[a].value).total_cmp(&angle(clusters[b].value)));

    for &c in &peripheral_indices {
        let cl = &clusters[c];
        let scale = cl.projector.norm().max(1.0);
        let residual = (mat * &cl.projector - &cl.projector * cl.value).norm()
            + (&cl.projector * &cl.projector - &cl.projector).norm();
        if residual > 1e-9 * scale {
            return Err(Error::NonDiagonalizablePeripheral {
                eigenvalue: cl.value,
                residual,
            });
        }
    }

    let mut p = Operator::zeros(n, n);
    for &c in &peripheral_indices {
        p += &clusters[c].projector;
    }
    let q = linalg::identity(n) - &p;

    let ell_spr = (0..clusters.len())
        .filter(|c| !peripheral_indices.contains(c))
        .map(|c| clusters[c].value.norm())
        .fold(0.0f64, f64::max);
    let near_degenerate_boundary = ell_spr >= 1.0 - tol.boundary;

    let values: Vec<C64> = peripheral_indices.iter().map(|&c| clusters[c].value).collect();
    let z = peripheral_group_order(&values, &peripheral_indices, &clusters);
    let gap = pairwise_min_distance(&values);

    let ell_norm = opts.norm.as_ref().map(|no| {
        let lq = Superoperator::from_matrix(s.dim(), mat * &q).expect("same dimension");
        induced_trace_norm_with(&lq, no)
    });

    let resolvent_residual = resolvent_check(mat, &clusters, opts.resolvent_seed);

    Ok(ChannelSpectrum {
        eigs: dec.eigenvalues.clone(),
        clusters,
        peripheral_indices,
        z,
        gap,
        p,
        q,
        ell_norm,
        ell_spr,
        near_degenerate_boundary,
        reconstruction_residual: dec.residual,
        resolvent_residual,
    })
}

fn peripheral_group_order(values: &[C64], idx: &[usize], clusters: &[SpectralCluster]) -> Option<usize> {
    let zc = values.len();
    if zc == 0 || idx.iter().any(|&c| clusters[c].multiplicity != 1) {
        return None;
    }
    let ok = values.iter().enumerate().all(|(k, &e)| {
        let root = C64::from_polar(1.0, std::f64::consts::TAU * k as f64 / zc as f64);
        (e - root).norm() <= 1e-8
    });
    ok.then_some(zc)
}

fn pairwise_min_distance(values: &[C64]) -> Option<f64> {
    let mut best: Option<f64> = None;
    for i in 0..values.len() {
        for j in (i + 1)..values.len() {
            let d = (values[i] - values[j]).norm();
            best = Some(best.map_or(d, |b| b.min(d)));
        }
    }
    best
}

/// Compare `(z - M)^{-1}` with `Σ_j P_j / (z - e_j)` at three random points
/// outside the unit disc, where the resolvent equals the residue sum.
fn resolvent_check(mat: &Operator, clusters: &[SpectralCluster], seed: u64) -> f64 {
    let n = mat.nrows();
    let radius = clusters.iter().fold(1.0f64, |m, c| m.max(c.value.norm()));
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let r = radius * (1.2 + 0.4 * rng.random::<f64>());
        let z = C64::from_polar(r, std::f64::consts::TAU * rng.random::<f64>());
        let Some(res) = (linalg::identity(n) * z - mat).try_inverse() else {
            return f64::INFINITY;
        };
        let mut sum = Operator::zeros(n, n);
        for c in clusters {
            sum += &c.projector / (z - c.value);
        }
        worst = worst.max((&res - sum).norm() / res.norm());
    }
    worst
}

#[derive(Clone, Debug, PartialEq, serde::Serialize)]
pub struct IrreducibilityVerdict {
    pub irreducible: bool,
    /// Number of eigenvalues numerically equal to 1.
    pub multiplicity_of_one: usize,
    /// Smallest eigenvalue of the normalized fixed point, when it is unique.
    pub fixed_point_min_eigenvalue: Option<f64>,
    pub reason: Option<String>,
}

fn fixed_point(s: &Superoperator) -> Result<(IrreducibilityVerdict, Option<DensityMatrix>)> {
    let tol = Tolerances::default();
    let dec = eig_general_with(s.matrix(), &tol)?;
    let ones: Vec<usize> = (0..dec.dim())
        .filter(|&k| (dec.eigenvalues[k] - 1.0).norm() <= tol.cluster)
        .collect();
    let mut verdict = IrreducibilityVerdict {
        irreducible: false,
        multiplicity_of_one: ones.len(),
        fixed_point_min_eigenvalue: None,
        reason: None,
    };
    if ones.len() != 1 {
        verdict.reason = Some(format!("eigenvalue 1 has multiplicity {}", ones.len()));
        return Ok((verdict, None));
    }
    let d = s.dim();
    let x = linalg::unvec(&dec.right.column(ones[0]).into_owned(), d);
    let t = linalg::trace(&x);
    if t.norm() < 1e-12 {
        verdict.reason = Some("fixed point is traceless".into());
        return Ok((verdict, None));
    }
    let x = linalg::hermitize(&(x / t));
    let (w, _) = linalg::herm_eigen(&x);
    verdict.fixed_point_min_eigenvalue = Some(w[0]);
    if w[0] <= tol.faithful_floor {
        verdict.reason = Some(format!("fixed point is singular (smallest eigenvalue {:e})", w[0]));
        return Ok((verdict, None));
    }
    let rho = DensityMatrix::with_tolerance(x, 1e-10)?;
    verdict.irreducible = true;
    Ok((verdict, Some(rho)))
}

pub fn irreducibility(s: &Superoperator) -> Result<IrreducibilityVerdict> {
    Ok(fixed_point(s)?.0)
}

/// Unique invariant state of an irreducible channel.
pub fn invariant_state(s: &Superoperator) -> Result<DensityMatrix> {
    let (verdict, rho) = fixed_point(s)?;
    rho.ok_or_else(|| Error::ReducibleChannel(verdict.reason.unwrap_or_default()))
}
