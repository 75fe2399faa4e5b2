//! General complex eigensolver for nonnormal matrices.
//!
//! Householder reduction to upper Hessenberg form, then single-shift complex
//! QR (Wilkinson shifts, occasional exceptional shifts) down to Schur form.
//! Right eigenvectors come from back substitution on the triangular factor;
//! left vectors are the rows of the inverse of the right-vector matrix, so the
//! pairing `l_j† r_k = δ_jk` holds to working precision.

use nalgebra::DVector;

use super::{Operator, C64, ONE, ZERO};
use crate::error::{Error, Result};
use crate::tolerances::Tolerances;

#[derive(Clone, Debug)]
pub struct SpectralDecomposition {
    pub eigenvalues: Vec<C64>,
    /// Column `k` is the unit-norm right eigenvector for `eigenvalues[k]`.
    pub right: Operator,
    /// Column `k` is the left vector with `left[:,k]† right[:,j] = δ_kj`.
    pub left: Operator,
    /// Indices grouped by numerically coincident eigenvalues.
    pub clusters: Vec<Vec<usize>>,
    /// `||M - R diag(e) L†||_F / ||M||_F`.
    pub residual: f64,
}

impl SpectralDecomposition {
    pub fn dim(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn cluster_value(&self, c: usize) -> C64 {
        let idx = &self.clusters[c];
        idx.iter().map(|&i| self.eigenvalues[i]).sum::<C64>() / idx.len() as f64
    }

    /// Dyad `r_k l_k†`.
    pub fn dyad(&self, k: usize) -> Operator {
        self.right.column(k) * self.left.column(k).adjoint()
    }

    /// Sum of the dyads of cluster `c`.
    pub fn cluster_projector(&self, c: usize) -> Operator {
        let n = self.dim();
        let mut p = Operator::zeros(n, n);
        for &k in &self.clusters[c] {
            p += self.dyad(k);
        }
        p
    }

    /// `R f(diag e) L†`.
    pub fn apply_function(&self, f: impl Fn(C64) -> C64) -> Operator {
        let mut scaled = self.right.clone();
        for (k, &e) in self.eigenvalues.iter().enumerate() {
            let fe = f(e);
            for i in 0..scaled.nrows() {
                scaled[(i, k)] *= fe;
            }
        }
        scaled * self.left.adjoint()
    }
}

pub fn eig_general(m: &Operator) -> Result<SpectralDecomposition> {
    eig_general_with(m, &Tolerances::default())
}

pub fn eig_general_with(m: &Operator, tol: &Tolerances) -> Result<SpectralDecomposition> {
    if !m.is_square() {
        return Err(Error::DimensionMismatch(format!(
            "eigendecomposition of a {}x{} matrix",
            m.nrows(),
            m.ncols()
        )));
    }
    let n = m.nrows();
    let scale = m.norm();
    let (mut h, mut z) = hessenberg(m);
    schur_qr(&mut h, &mut z, scale, tol)?;

    let eigenvalues: Vec<C64> = (0..n).map(|i| h[(i, i)]).collect();
    let x = triangular_eigenvectors(&h, scale);
    let mut right = z * x;
    for k in 0..n {
        let nk = right.column(k).norm();
        if nk > 0.0 {
            right.column_mut(k).unscale_mut(nk);
        }
    }
    let inv = right.clone().try_inverse().ok_or_else(|| {
        Error::Precondition("eigenvector matrix is singular (defective matrix)".into())
    })?;
    let left = inv.adjoint();

    let mut recon = right.clone();
    for k in 0..n {
        let e = eigenvalues[k];
        for i in 0..n {
            recon[(i, k)] *= e;
        }
    }
    let recon = recon * inv;
    let residual = if scale > 0.0 { (m - recon).norm() / scale } else { 0.0 };

    let clusters = cluster_complex(&eigenvalues, tol.cluster);
    Ok(SpectralDecomposition {
        eigenvalues,
        right,
        left,
        clusters,
        residual,
    })
}

/// Single-linkage clustering at `rel * max|e|`.
pub(crate) fn cluster_complex(values: &[C64], rel: f64) -> Vec<Vec<usize>> {
    let n = values.len();
    let radius = values.iter().fold(0.0f64, |m, e| m.max(e.norm()));
    let thresh = rel * radius;
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(p: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while p[r] != r {
            r = p[r];
        }
        let mut c = i;
        while p[c] != r {
            let next = p[c];
            p[c] = r;
            c = next;
        }
        r
    }
    for i in 0..n {
        for j in (i + 1)..n {
            if (values[i] - values[j]).norm() <= thresh {
                let (a, b) = (find(&mut parent, i), find(&mut parent, j));
                if a != b {
                    parent[b] = a;
                }
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut root_of: Vec<Option<usize>> = vec![None; n];
    for i in 0..n {
        let r = find(&mut parent, i);
        match root_of[r] {
            Some(g) => groups[g].push(i),
            None => {
                root_of[r] = Some(groups.len());
                groups.push(vec![i]);
            }
        }
    }
    groups
}

/// Householder reduction `m = Q H Q†`; returns `(H, Q)`.
fn hessenberg(m: &Operator) -> (Operator, Operator) {
    let n = m.nrows();
    let mut h = m.clone();
    let mut q = Operator::identity(n, n);
    if n < 3 {
        return (h, q);
    }
    for k in 0..n - 2 {
        let len = n - k - 1;
        let x: DVector<C64> = DVector::from_fn(len, |i, _| h[(k + 1 + i, k)]);
        let xnorm = x.norm();
        if xnorm == 0.0 {
            continue;
        }
        let x0 = x[0];
        let phase = if x0.norm() > 0.0 { x0 / x0.norm() } else { ONE };
        let alpha = -phase * xnorm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.norm();
        if vnorm == 0.0 {
            continue;
        }
        v.unscale_mut(vnorm);
        // H <- (I - 2vv†) H (I - 2vv†), acting on rows/cols k+1..n
        for j in 0..n {
            let mut s = ZERO;
            for i in 0..len {
                s += v[i].conj() * h[(k + 1 + i, j)];
            }
            let s2 = s * 2.0;
            for i in 0..len {
                h[(k + 1 + i, j)] -= v[i] * s2;
            }
        }
        for i in 0..n {
            let mut s = ZERO;
            for j in 0..len {
                s += h[(i, k + 1 + j)] * v[j];
            }
            let s2 = s * 2.0;
            for j in 0..len {
                h[(i, k + 1 + j)] -= s2 * v[j].conj();
            }
            let mut s = ZERO;
            for j in 0..len {
                s += q[(i, k + 1 + j)] * v[j];
            }
            let s2 = s * 2.0;
            for j in 0..len {
                q[(i, k + 1 + j)] -= s2 * v[j].conj();
            }
        }
        for i in (k + 2)..n {
            h[(i, k)] = ZERO;
        }
    }
    (h, q)
}

/// Rotation `G = [[c, s], [-conj(s), c]]` with `G [a; b] = [r; 0]`.
fn givens(a: C64, b: C64) -> (f64, C64) {
    let an = a.norm();
    let bn = b.norm();
    if bn == 0.0 {
        return (1.0, ZERO);
    }
    if an == 0.0 {
        return (0.0, b.conj() / bn);
    }
    let r = an.hypot(bn);
    let c = an / r;
    let s = (a / an) * b.conj() / r;
    (c, s)
}

fn rotate_rows(h: &mut Operator, k: usize, c: f64, s: C64, cols: std::ops::Range<usize>) {
    for j in cols {
        let x = h[(k, j)];
        let y = h[(k + 1, j)];
        h[(k, j)] = x * c + s * y;
        h[(k + 1, j)] = -s.conj() * x + y * c;
    }
}

fn rotate_cols(h: &mut Operator, k: usize, c: f64, s: C64, rows: std::ops::Range<usize>) {
    for i in rows {
        let x = h[(i, k)];
        let y = h[(i, k + 1)];
        h[(i, k)] = x * c + y * s.conj();
        h[(i, k + 1)] = -x * s + y * c;
    }
}

fn wilkinson_shift(a: C64, b: C64, c: C64, d: C64) -> C64 {
    let half = (a - d) * 0.5;
    let disc = (half * half + b * c).sqrt();
    let mu1 = (a + d) * 0.5 + disc;
    let mu2 = (a + d) * 0.5 - disc;
    if (mu1 - d).norm() <= (mu2 - d).norm() {
        mu1
    } else {
        mu2
    }
}

fn schur_qr(h: &mut Operator, z: &mut Operator, scale: f64, tol: &Tolerances) -> Result<()> {
    let n = h.nrows();
    if n <= 1 {
        return Ok(());
    }
    let max_sweeps = tol.sweeps_per_dim * n;
    let mut sweeps = 0usize;
    let mut stall = 0usize;
    let mut hi = n - 1;
    let eps = f64::EPSILON;
    while hi > 0 {
        let mut l = hi;
        while l > 0 {
            let sub = h[(l, l - 1)].norm();
            let local = h[(l - 1, l - 1)].norm() + h[(l, l)].norm();
            if sub <= tol.deflation * scale || sub <= eps * local {
                h[(l, l - 1)] = ZERO;
                break;
            }
            l -= 1;
        }
        if l == hi {
            hi -= 1;
            stall = 0;
            continue;
        }
        sweeps += 1;
        stall += 1;
        if sweeps > max_sweeps {
            return Err(Error::EigenNoConvergence { dim: n, sweeps: max_sweeps });
        }
        let mu = if stall % 11 == 10 {
            h[(hi, hi)] + h[(hi, hi - 1)].norm() * 1.5
        } else {
            wilkinson_shift(h[(hi - 1, hi - 1)], h[(hi - 1, hi)], h[(hi, hi - 1)], h[(hi, hi)])
        };
        // Implicit single-shift sweep over the active window [l, hi].
        let (mut x, mut y) = (h[(l, l)] - mu, h[(l + 1, l)]);
        for k in l..hi {
            let (c, s) = givens(x, y);
            let col_start = if k > l { k - 1 } else { l };
            rotate_rows(h, k, c, s, col_start..n);
            let row_end = (k + 3).min(hi + 1);
            rotate_cols(h, k, c, s, 0..row_end);
            rotate_cols(z, k, c, s, 0..n);
            if k > l {
                h[(k + 1, k - 1)] = ZERO;
            }
            if k + 1 < hi {
                x = h[(k + 1, k)];
                y = h[(k + 2, k)];
            }
        }
    }
    for j in 0..n {
        for i in (j + 1)..n {
            h[(i, j)] = ZERO;
        }
    }
    Ok(())
}

/// Eigenvectors of an upper triangular matrix, column `k` with unit entry at `k`.
fn triangular_eigenvectors(t: &Operator, scale: f64) -> Operator {
    let n = t.nrows();
    let smallnum = (f64::EPSILON * scale).max(f64::MIN_POSITIVE);
    let mut x = Operator::zeros(n, n);
    for k in 0..n {
        x[(k, k)] = ONE;
        let tkk = t[(k, k)];
        for i in (0..k).rev() {
            let mut s = ZERO;
            for j in (i + 1)..=k {
                s += t[(i, j)] * x[(j, k)];
            }
            let mut den = t[(i, i)] - tkk;
            if den.norm() < smallnum {
                den = C64::new(smallnum, 0.0);
            }
            x[(i, k)] = -s / den;
        }
    }
    x
}
