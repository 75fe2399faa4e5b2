//! Dense complex kernels: tensor products, partial traces, Hermitian
//! functional calculus, a general eigensolver and Schatten norms.
//!
//! Operators are plain `DMatrix<Complex64>` values indexed `(row, col)`.
//! Composite indices follow the `kron` convention: `(i, k)` with `i` on the
//! left factor maps to `i * d_right + k`.

mod eig;

pub use eig::{eig_general, eig_general_with, SpectralDecomposition};

use nalgebra::{DMatrix, DVector};
use num_complex::Complex64;

use crate::error::{Error, Result};

pub type C64 = Complex64;
pub type Operator = DMatrix<C64>;

pub const ZERO: C64 = C64::new(0.0, 0.0);
pub const ONE: C64 = C64::new(1.0, 0.0);
pub const I: C64 = C64::new(0.0, 1.0);

pub fn identity(d: usize) -> Operator {
    Operator::identity(d, d)
}

pub fn from_real_diagonal(diag: &[f64]) -> Operator {
    Operator::from_diagonal(&DVector::from_iterator(
        diag.len(),
        diag.iter().map(|&x| C64::new(x, 0.0)),
    ))
}

pub fn kron(a: &Operator, b: &Operator) -> Operator {
    let (ar, ac) = a.shape();
    let (br, bc) = b.shape();
    let mut out = Operator::zeros(ar * br, ac * bc);
    for j in 0..ac {
        for i in 0..ar {
            let aij = a[(i, j)];
            if aij == ZERO {
                continue;
            }
            for l in 0..bc {
                for k in 0..br {
                    out[(i * br + k, j * bc + l)] = aij * b[(k, l)];
                }
            }
        }
    }
    out
}

fn check_bipartite(ab: &Operator, d_sys: usize, d_env: usize) -> Result<()> {
    let n = d_sys * d_env;
    if ab.nrows() != n || ab.ncols() != n {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} operator on a {}x{} bipartition",
            ab.nrows(),
            ab.ncols(),
            d_sys,
            d_env
        )));
    }
    Ok(())
}

/// Trace out the right (environment) factor.
pub fn partial_trace_env(ab: &Operator, d_sys: usize, d_env: usize) -> Result<Operator> {
    check_bipartite(ab, d_sys, d_env)?;
    Ok(Operator::from_fn(d_sys, d_sys, |i, j| {
        (0..d_env).map(|k| ab[(i * d_env + k, j * d_env + k)]).sum()
    }))
}

/// Trace out the left (system) factor.
pub fn partial_trace_sys(ab: &Operator, d_sys: usize, d_env: usize) -> Result<Operator> {
    check_bipartite(ab, d_sys, d_env)?;
    Ok(Operator::from_fn(d_env, d_env, |k, l| {
        (0..d_sys).map(|i| ab[(i * d_env + k, i * d_env + l)]).sum()
    }))
}

pub fn trace(a: &Operator) -> C64 {
    a.diagonal().iter().sum()
}

pub fn dagger(a: &Operator) -> Operator {
    a.adjoint()
}

pub fn commutator(a: &Operator, b: &Operator) -> Operator {
    a * b - b * a
}

/// Largest entrywise deviation from Hermiticity.
pub fn hermitian_deviation(a: &Operator) -> f64 {
    if !a.is_square() {
        return f64::INFINITY;
    }
    let n = a.nrows();
    let mut dev = 0.0f64;
    for j in 0..n {
        for i in 0..=j {
            dev = dev.max((a[(i, j)] - a[(j, i)].conj()).norm());
        }
    }
    dev
}

pub fn max_abs(a: &Operator) -> f64 {
    a.iter().fold(0.0, |m, z| m.max(z.norm()))
}

/// Check Hermiticity at `tol` relative to `max(1, max|a_ij|)`.
pub fn ensure_hermitian(a: &Operator, tol: f64) -> Result<()> {
    let dev = hermitian_deviation(a);
    if dev > tol * max_abs(a).max(1.0) {
        return Err(Error::NotHermitian { deviation: dev });
    }
    Ok(())
}

pub fn hermitize(a: &Operator) -> Operator {
    (a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Eigenvalues (ascending) and orthonormal eigenvectors of the Hermitian part of `h`.
pub fn herm_eigen(h: &Operator) -> (Vec<f64>, Operator) {
    let eig = nalgebra::SymmetricEigen::new(hermitize(h));
    let n = h.nrows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let mut vectors = Operator::zeros(n, n);
    for (dst, &src) in order.iter().enumerate() {
        vectors.set_column(dst, &eig.eigenvectors.column(src));
    }
    (values, vectors)
}

/// `V diag(f(w)) V†` from a Hermitian eigendecomposition.
pub fn spectral_apply(values: &[f64], vectors: &Operator, f: impl Fn(f64) -> C64) -> Operator {
    let n = vectors.nrows();
    let mut scaled = vectors.clone();
    for (j, &w) in values.iter().enumerate() {
        let fw = f(w);
        for i in 0..n {
            scaled[(i, j)] *= fw;
        }
    }
    scaled * vectors.adjoint()
}

pub fn herm_function(h: &Operator, f: impl Fn(f64) -> C64) -> Operator {
    let (w, v) = herm_eigen(h);
    spectral_apply(&w, &v, f)
}

/// `exp(-i t h)` for Hermitian `h`.
pub fn herm_propagator(h: &Operator, t: f64) -> Result<Operator> {
    ensure_hermitian(h, 1e-12)?;
    Ok(herm_function(h, |w| C64::from_polar(1.0, -t * w)))
}

pub fn singular_values(a: &Operator) -> Vec<f64> {
    if a.is_empty() {
        return Vec::new();
    }
    a.clone().svd(false, false).singular_values.iter().copied().collect()
}

pub fn trace_norm(a: &Operator) -> f64 {
    singular_values(a).iter().sum()
}

pub fn operator_norm(a: &Operator) -> f64 {
    singular_values(a).into_iter().fold(0.0, f64::max)
}

pub fn frobenius_norm(a: &Operator) -> f64 {
    a.norm()
}

/// Unitary polar factor `U V†` of `a = U Σ V†`.
pub fn polar_unitary(a: &Operator) -> Operator {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    u * v_t
}

/// Leading singular triple `(sigma, left, right)`.
pub fn top_singular(a: &Operator) -> (f64, DVector<C64>, DVector<C64>) {
    let svd = a.clone().svd(true, true);
    let u = svd.u.expect("left singular vectors requested");
    let v_t = svd.v_t.expect("right singular vectors requested");
    let (idx, &sigma) = svd
        .singular_values
        .iter()
        .enumerate()
        .max_by(|a, b| a.1.total_cmp(b.1))
        .expect("nonempty matrix");
    let left = u.column(idx).into_owned();
    let right = v_t.row(idx).adjoint();
    (sigma, left, right)
}

/// Column-stacked vector of `a`.
pub fn vec_of(a: &Operator) -> DVector<C64> {
    DVector::from_column_slice(a.as_slice())
}

pub fn unvec(v: &DVector<C64>, d: usize) -> Operator {
    Operator::from_column_slice(d, d, v.as_slice())
}

/// Single-linkage clustering of real values within `tol`.
pub fn cluster_real(values: &[f64], tol: impl Fn(f64, f64) -> f64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut clusters: Vec<Vec<usize>> = Vec::new();
    for &i in &order {
        match clusters.last_mut() {
            Some(c) => {
                let prev = values[*c.last().unwrap()];
                if (values[i] - prev).abs() <= tol(prev, values[i]) {
                    c.push(i);
                } else {
                    clusters.push(vec![i]);
                }
            }
            None => clusters.push(vec![i]),
        }
    }
    clusters
}

#[cfg(test)]
pub(crate) mod testutil {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    pub fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    pub fn random_matrix(rng: &mut impl Rng, n: usize) -> Operator {
        Operator::from_fn(n, n, |_, _| {
            C64::new(rng.random::<f64>() * 2.0 - 1.0, rng.random::<f64>() * 2.0 - 1.0)
        })
    }

    pub fn random_hermitian(rng: &mut impl Rng, n: usize) -> Operator {
        hermitize(&random_matrix(rng, n))
    }

    pub fn random_state(rng: &mut impl Rng, n: usize) -> Operator {
        let g = random_matrix(rng, n);
        let p = &g * g.adjoint() + identity(n) * C64::new(0.05, 0.0);
        let t = trace(&p);
        p / t
    }
}

#[cfg(test)]
mod tests {
    use super::testutil::*;
    use super::*;
    use proptest::prelude::*;

    fn close(a: &Operator, b: &Operator, tol: f64) -> bool {
        (a - b).iter().all(|z| z.norm() <= tol)
    }

    #[test]
    fn kron_identities() {
        assert_eq!(kron(&identity(2), &identity(2)), identity(4));
        let p = from_real_diagonal(&[1.0, 0.0]);
        assert_eq!(kron(&p, &identity(2)), from_real_diagonal(&[1.0, 1.0, 0.0, 0.0]));
    }

    #[test]
    fn kron_matches_index_loop() {
        let mut r = rng(1);
        for _ in 0..10 {
            let a = random_matrix(&mut r, 2);
            let b = random_matrix(&mut r, 2);
            let k = kron(&a, &b);
            for i in 0..2 {
                for j in 0..2 {
                    for p in 0..2 {
                        for q in 0..2 {
                            assert_eq!(k[(i * 2 + p, j * 2 + q)], a[(i, j)] * b[(p, q)]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn partial_trace_of_product() {
        let p = from_real_diagonal(&[1.0, 0.0]);
        let ab = kron(&p, &identity(2));
        let r = partial_trace_env(&ab, 2, 2).unwrap();
        assert_eq!(r, p * C64::new(2.0, 0.0));
        assert!(partial_trace_env(&identity(3), 2, 2).is_err());
    }

    #[test]
    fn partial_trace_matches_index_sum() {
        let mut r = rng(2);
        let m = random_matrix(&mut r, 4);
        let pt = partial_trace_env(&m, 2, 2).unwrap();
        let ps = partial_trace_sys(&m, 2, 2).unwrap();
        for i in 0..2 {
            for j in 0..2 {
                let mut env = ZERO;
                let mut sys = ZERO;
                for k in 0..2 {
                    env += m[(2 * i + k, 2 * j + k)];
                    sys += m[(2 * k + i, 2 * k + j)];
                }
                assert!((pt[(i, j)] - env).norm() < 1e-15);
                assert!((ps[(i, j)] - sys).norm() < 1e-15);
            }
        }
        assert!((trace(&pt) - trace(&m)).norm() < 1e-14);
        assert!((trace(&ps) - trace(&m)).norm() < 1e-14);
    }

    #[test]
    fn propagator_basic_cases() {
        let z = Operator::zeros(3, 3);
        assert!(close(&herm_propagator(&z, 1.3).unwrap(), &identity(3), 1e-15));
        let e = 0.7;
        let tau = 0.5;
        let u = herm_propagator(&from_real_diagonal(&[0.0, e]), tau).unwrap();
        let expect = Operator::from_diagonal(&DVector::from_vec(vec![ONE, C64::from_polar(1.0, -tau * e)]));
        assert!(close(&u, &expect, 1e-14));
        let mut bad = identity(2);
        bad[(0, 1)] = ONE;
        assert!(matches!(herm_propagator(&bad, 1.0), Err(Error::NotHermitian { .. })));
    }

    #[test]
    fn propagator_is_unitary_on_random_generators() {
        let mut r = rng(3);
        for n in [2, 4, 9] {
            let h = random_hermitian(&mut r, n);
            let u = herm_propagator(&h, 0.8).unwrap();
            assert!(close(&(&u * u.adjoint()), &identity(n), 1e-10));
        }
    }

    #[test]
    fn norms_on_simple_inputs() {
        assert!((trace_norm(&from_real_diagonal(&[1.0, -1.0])) - 2.0).abs() < 1e-14);
        let mut r = rng(4);
        let rho = random_state(&mut r, 3);
        assert!((trace_norm(&rho) - 1.0).abs() < 1e-12);
        assert_eq!(trace_norm(&Operator::zeros(2, 2)), 0.0);
        assert!((operator_norm(&from_real_diagonal(&[0.5, -3.0])) - 3.0).abs() < 1e-14);
    }

    #[test]
    fn trace_norm_matches_eigenvalue_sum() {
        let mut r = rng(5);
        for _ in 0..20 {
            let h = random_hermitian(&mut r, 4);
            let (w, _) = herm_eigen(&h);
            let expect: f64 = w.iter().map(|x| x.abs()).sum();
            assert!((trace_norm(&h) - expect).abs() < 1e-12);
        }
    }

    #[test]
    fn polar_factor_attains_trace_norm() {
        let mut r = rng(6);
        let a = random_matrix(&mut r, 3);
        let w = polar_unitary(&a);
        let val = trace(&(w.adjoint() * &a)).re;
        assert!((val - trace_norm(&a)).abs() < 1e-12);
    }

    #[test]
    fn vec_round_trip_is_column_major() {
        let a = Operator::from_fn(3, 3, |i, j| C64::new(i as f64, j as f64));
        let v = vec_of(&a);
        assert_eq!(v[1 + 3 * 2], a[(1, 2)]);
        assert_eq!(unvec(&v, 3), a);
    }

    fn arb_matrix(n: usize) -> impl Strategy<Value = Operator> {
        proptest::collection::vec((-1.0f64..1.0, -1.0f64..1.0), n * n)
            .prop_map(move |v| Operator::from_iterator(n, n, v.into_iter().map(|(a, b)| C64::new(a, b))))
    }

    proptest! {
        #[test]
        fn kron_is_associative(a in arb_matrix(2), b in arb_matrix(2), c in arb_matrix(2)) {
            let l = kron(&kron(&a, &b), &c);
            let r = kron(&a, &kron(&b, &c));
            prop_assert!(close(&l, &r, 1e-12));
        }

        #[test]
        fn kron_mixed_product(a in arb_matrix(2), b in arb_matrix(3), c in arb_matrix(2), d in arb_matrix(3)) {
            let l = kron(&a, &b) * kron(&c, &d);
            let r = kron(&(&a * &c), &(&b * &d));
            prop_assert!(close(&l, &r, 1e-12));
        }

        #[test]
        fn partial_trace_recovers_factor(a in arb_matrix(2), b in arb_matrix(3)) {
            let ab = kron(&a, &b);
            let ra = partial_trace_env(&ab, 2, 3).unwrap();
            let rb = partial_trace_sys(&ab, 2, 3).unwrap();
            prop_assert!(close(&ra, &(&a * trace(&b)), 1e-12));
            prop_assert!(close(&rb, &(&b * trace(&a)), 1e-12));
        }

        #[test]
        fn propagator_group_law(h in arb_matrix(3), t1 in -2.0f64..2.0, t2 in -2.0f64..2.0) {
            let h = hermitize(&h);
            let u1 = herm_propagator(&h, t1).unwrap();
            let u2 = herm_propagator(&h, t2).unwrap();
            let u12 = herm_propagator(&h, t1 + t2).unwrap();
            prop_assert!(close(&(u1 * u2), &u12, 1e-10));
        }
    }
}
