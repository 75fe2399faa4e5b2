//! Channel powers and the search for a repetition count `m` that makes the
//! contracting part strictly contracting in norm.

use log::info;

use super::norm::{induced_trace_norm_with, NormOptions};
use super::spectrum::{spectral_with, SpectralOptions};
use super::Superoperator;
use crate::error::{Error, Result};
use crate::linalg::Operator;
use crate::par::{self, Execution};

pub const M_CAP: usize = 100_000;

pub fn power(s: &Superoperator, m: usize) -> Superoperator {
    let d = s.dim();
    let mut result = crate::linalg::identity(d * d);
    let mut base = s.matrix().clone();
    let mut e = m;
    while e > 0 {
        if e & 1 == 1 {
            result = &result * &base;
        }
        e >>= 1;
        if e > 0 {
            base = &base * &base;
        }
    }
    Superoperator::from_matrix(d, result).expect("same dimension")
}

#[derive(Clone, Copy, Debug)]
pub struct FindMOptions {
    pub norm: NormOptions,
    pub cap: usize,
    pub exec: Execution,
}

impl Default for FindMOptions {
    fn default() -> Self {
        Self {
            norm: NormOptions::default(),
            cap: M_CAP,
            exec: Execution::Parallel,
        }
    }
}

struct Sample {
    l: Superoperator,
    q: Operator,
    spr: f64,
    z: usize,
}

impl Sample {
    /// Lower bound on `||L^m Q||`: the better of the ascent estimate and `spr^m`.
    fn contraction(&self, m: usize, opts: &NormOptions) -> f64 {
        let lm = power(&self.l, m);
        let lq = Superoperator::from_matrix(self.l.dim(), lm.matrix() * &self.q).expect("same dimension");
        induced_trace_norm_with(&lq, opts).value.max(self.spr.powi(m as i32))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

pub fn find_m<F>(sampler: F, g: f64, s_grid: &[f64]) -> Result<usize>
where
    F: Fn(f64) -> Result<Superoperator> + Sync + Send,
{
    find_m_with(sampler, g, s_grid, &FindMOptions::default())
}

/// Smallest `m` with `max_s ||L(s)^m Q(s)|| ≤ 1 - g` and `gcd(m, z(s)) = 1`.
///
/// `||L^m Q||` is nonincreasing in `m` because `L` is a trace-norm contraction
/// commuting with `Q`, so the threshold is located by doubling then bisection,
/// starting from the spectral-radius bound `spr^m ≤ ||L^m Q||`.
pub fn find_m_with<F>(sampler: F, g: f64, s_grid: &[f64], opts: &FindMOptions) -> Result<usize>
where
    F: Fn(f64) -> Result<Superoperator> + Sync + Send,
{
    if !(g > 0.0 && g < 1.0) {
        return Err(Error::Precondition(format!("gap parameter G = {g} must lie in (0, 1)")));
    }
    if s_grid.is_empty() {
        return Err(Error::Precondition("empty s grid".into()));
    }
    let sopts = SpectralOptions::without_norm();
    let samples: Vec<Sample> = par::map_slice(opts.exec, s_grid, |&s| {
        let l = sampler(s)?;
        let sp = spectral_with(&l, &sopts)?;
        if sp.ell_spr >= 1.0 {
            return Err(Error::Precondition(format!("spectral radius of LQ is {} at s = {s}", sp.ell_spr)));
        }
        Ok(Sample { z: sp.z.unwrap_or(1), spr: sp.ell_spr, q: sp.q, l })
    })
    .into_iter()
    .collect::<Result<_>>()?;

    let target = 1.0 - g;
    let eval = |m: usize| -> f64 {
        par::map_slice(opts.exec, &samples, |smp| smp.contraction(m, &opts.norm))
            .into_iter()
            .fold(0.0, f64::max)
    };

    let spr_max = samples.iter().map(|s| s.spr).fold(0.0, f64::max);
    let mut lo = 0usize;
    let mut hi = if spr_max > 0.0 {
        let bound = (target.ln() / spr_max.ln() - 1e-9).ceil();
        if bound > opts.cap as f64 {
            return Err(Error::NoSuchM { cap: opts.cap });
        }
        (bound as usize).max(1)
    } else {
        1
    };
    lo = lo.max(hi - 1);
    while eval(hi) > target {
        if hi >= opts.cap {
            return Err(Error::NoSuchM { cap: opts.cap });
        }
        lo = hi;
        hi = (hi * 2).min(opts.cap);
    }
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if eval(mid) <= target {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let mut m = hi;
    while samples.iter().any(|s| gcd(m, s.z) != 1) {
        m += 1;
        if m > opts.cap {
            return Err(Error::NoSuchM { cap: opts.cap });
        }
    }
    info!("selected m = {m} for G = {g}");
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::channel::testutil::random_channel;
    use crate::linalg::testutil::rng;
    use crate::linalg::C64;

    #[test]
    fn power_matches_repeated_composition() {
        let mut r = rng(61);
        let l = random_channel(&mut r, 2, 2);
        let mut direct = Superoperator::identity(2);
        for m in 0..9 {
            assert!((power(&l, m).matrix() - direct.matrix()).norm() < 1e-12);
            direct = l.compose(&direct);
        }
    }

    #[test]
    fn contracting_channel_needs_no_repetition() {
        let mixed = crate::linalg::identity(2) / C64::new(2.0, 0.0);
        let replace = Superoperator::from_map(2, |x| &mixed * crate::linalg::trace(x));
        let m = find_m(|_| Ok(replace.clone()), 0.5, &[0.0, 0.5, 1.0]).unwrap();
        assert_eq!(m, 1);
    }

    #[test]
    fn search_agrees_with_linear_scan() {
        let mut r = rng(62);
        let l = random_channel(&mut r, 2, 2);
        // Slow the channel down so that several repetitions are needed.
        let slow = Superoperator::from_matrix(
            2,
            l.matrix() * C64::new(0.1, 0.0) + crate::linalg::identity(4) * C64::new(0.9, 0.0),
        )
        .unwrap();
        let opts = FindMOptions::default();
        let m = find_m_with(|_| Ok(slow.clone()), 0.5, &[0.0], &opts).unwrap();
        let sp = spectral_with(&slow, &SpectralOptions::without_norm()).unwrap();
        let smp = Sample { l: slow.clone(), q: sp.q.clone(), spr: sp.ell_spr, z: 1 };
        let scan = (1..=M_CAP).find(|&k| smp.contraction(k, &opts.norm) <= 0.5).unwrap();
        assert_eq!(m, scan);
        assert!(m > 1);
    }

    #[test]
    fn coprimality_with_peripheral_order() {
        assert_eq!(gcd(12, 8), 4);
        let swap = Superoperator::from_map(2, |x| {
            let mut y = Operator::zeros(2, 2);
            y[(0, 0)] = x[(1, 1)];
            y[(1, 1)] = x[(0, 0)];
            y
        });
        let m = find_m(|_| Ok(swap.clone()), 0.5, &[0.0]).unwrap();
        assert_eq!(m % 2, 1);
    }

    #[test]
    fn rejects_bad_gap() {
        assert!(find_m(|_| Ok(Superoperator::identity(2)), 1.5, &[0.0]).is_err());
    }
}
