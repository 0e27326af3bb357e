//! Fixed standard-normal draws for sample-average approximation.
//!
//! Quasi-Monte Carlo draws come from a Sobol sequence (Joe–Kuo direction
//! numbers) with the first point dropped and a hash-based nested uniform
//! (Owen) scramble applied per dimension. Every scrambled integer `x` is mapped
//! to `(x + ½) / 2³²`, which never reaches 0 or 1, before the inverse normal CDF.

use std::collections::HashMap;
use std::sync::{Arc, Mutex, OnceLock};

use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};
use sobol::params::JoeKuoD6;
use sobol::Sobol;

use crate::error::{check_finite, Error, Result};
use crate::normal;
use crate::streams;

/// Where a draw matrix came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DrawSource {
    Qmc,
    Pseudo,
    /// Supplied by the caller.
    Explicit,
}

/// `N × K` matrix of standard-normal deviates, row-major, held fixed for a solve.
#[derive(Debug, Clone, PartialEq)]
pub struct NormalDraws {
    rows: usize,
    cols: usize,
    z: Vec<f64>,
    pub source: DrawSource,
    pub seed: u64,
}

const STANDARD_DIMS: usize = 1000;

fn standard_params() -> &'static JoeKuoD6 {
    static PARAMS: OnceLock<JoeKuoD6> = OnceLock::new();
    PARAMS.get_or_init(JoeKuoD6::standard)
}

fn extended_params() -> &'static JoeKuoD6 {
    static PARAMS: OnceLock<JoeKuoD6> = OnceLock::new();
    PARAMS.get_or_init(JoeKuoD6::extended)
}

// Laine–Karras style permutation; each output bit depends only on lower input bits.
#[inline]
fn lk_permutation(mut x: u32, seed: u32) -> u32 {
    x = x.wrapping_add(seed);
    x ^= x.wrapping_mul(0x6c50_b47c);
    x ^= x.wrapping_mul(0xb82f_1e52);
    x ^= x.wrapping_mul(0xc7af_e638);
    x ^= x.wrapping_mul(0x8d22_f6e6);
    x
}

#[inline]
fn owen_scramble(x: u32, seed: u32) -> u32 {
    lk_permutation(x.reverse_bits(), seed).reverse_bits()
}

fn dimension_seed(seed: u64, dim: usize) -> u32 {
    let mut h = seed ^ (dim as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15);
    h = (h ^ (h >> 33)).wrapping_mul(0xff51_afd7_ed55_8ccd);
    h = (h ^ (h >> 33)).wrapping_mul(0xc4ce_b9fe_1a85_ec53);
    (h ^ (h >> 33)) as u32
}

impl NormalDraws {
    /// Caller-supplied draws (row-major, `rows × cols`).
    pub fn from_matrix(rows: usize, cols: usize, z: Vec<f64>) -> Result<Self> {
        if rows == 0 || cols == 0 {
            return Err(Error::invalid("draw matrix must be nonempty"));
        }
        if z.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "draw matrix",
                expected: rows * cols,
                actual: z.len(),
            });
        }
        check_finite("draw matrix", &z)?;
        Ok(Self {
            rows,
            cols,
            z,
            source: DrawSource::Explicit,
            seed: 0,
        })
    }

    /// Scrambled Sobol points mapped through the inverse normal CDF.
    pub fn sobol(n: usize, k: usize, seed: u64) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::invalid("need at least one sample and one arm"));
        }
        let params = if k <= STANDARD_DIMS {
            standard_params()
        } else {
            extended_params()
        };
        if k > params.max_dims {
            return Err(Error::Capacity(format!(
                "{k} dimensions requested, generator supports {}",
                params.max_dims
            )));
        }
        // u32 Sobol yields at most 2^32 - 1 points and the first is skipped.
        if (n as u64) >= u64::from(u32::MAX) {
            return Err(Error::Capacity(format!(
                "{n} points requested, generator supports {}",
                u32::MAX - 1
            )));
        }
        let seeds: Vec<u32> = (0..k).map(|d| dimension_seed(seed, d)).collect();
        let mut z = Vec::with_capacity(n * k);
        for point in Sobol::<u32>::new(k, params).skip(1).take(n) {
            for (d, &x) in point.iter().enumerate() {
                let u = (f64::from(owen_scramble(x, seeds[d])) + 0.5) / 4_294_967_296.0;
                z.push(normal::quantile(u));
            }
        }
        Ok(Self {
            rows: n,
            cols: k,
            z,
            source: DrawSource::Qmc,
            seed,
        })
    }

    /// Independent pseudo-random normals.
    pub fn pseudo(n: usize, k: usize, seed: u64) -> Result<Self> {
        if n == 0 || k == 0 {
            return Err(Error::invalid("need at least one sample and one arm"));
        }
        let mut rng = streams::seeded(seed);
        let z = (0..n * k)
            .map(|_| StandardNormal.sample(&mut rng))
            .collect();
        Ok(Self {
            rows: n,
            cols: k,
            z,
            source: DrawSource::Pseudo,
            seed,
        })
    }

    pub fn generate(n: usize, k: usize, seed: u64, qmc: bool) -> Result<Self> {
        if qmc {
            Self::sobol(n, k, seed)
        } else {
            Self::pseudo(n, k, seed)
        }
    }

    /// Process-wide cache keyed by `(n, k, seed, qmc)`; draws are immutable once built.
    pub fn shared(n: usize, k: usize, seed: u64, qmc: bool) -> Result<Arc<Self>> {
        type Key = (usize, usize, u64, bool);
        static CACHE: OnceLock<Mutex<HashMap<Key, Arc<NormalDraws>>>> = OnceLock::new();
        let cache = CACHE.get_or_init(Default::default);
        let key = (n, k, seed, qmc);
        if let Some(found) = cache.lock().expect("draw cache poisoned").get(&key) {
            return Ok(Arc::clone(found));
        }
        let draws = Arc::new(Self::generate(n, k, seed, qmc)?);
        let mut guard = cache.lock().expect("draw cache poisoned");
        Ok(Arc::clone(guard.entry(key).or_insert(draws)))
    }

    pub fn num_samples(&self) -> usize {
        self.rows
    }

    pub fn num_arms(&self) -> usize {
        self.cols
    }

    pub fn row(&self, j: usize) -> &[f64] {
        &self.z[j * self.cols..(j + 1) * self.cols]
    }

    pub fn rows(&self) -> impl Iterator<Item = &[f64]> {
        self.z.chunks_exact(self.cols)
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.z
    }
}

/// Scrambled-Sobol standard normals, `N × K`.
pub fn sobol_standard_normals(n: usize, k: usize, seed: u64) -> Result<NormalDraws> {
    NormalDraws::sobol(n, k, seed)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_per_seed() {
        let a = sobol_standard_normals(64, 3, 11).unwrap();
        let b = sobol_standard_normals(64, 3, 11).unwrap();
        assert_eq!(a, b);
        let c = sobol_standard_normals(64, 3, 12).unwrap();
        assert_ne!(a.as_slice(), c.as_slice());
    }

    #[test]
    fn moments_match_standard_normal() {
        let d = sobol_standard_normals(1024, 2, 0).unwrap();
        for col in 0..2 {
            let xs: Vec<f64> = d.rows().map(|r| r[col]).collect();
            let mean = xs.iter().sum::<f64>() / xs.len() as f64;
            let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
            assert!(mean.abs() <= 0.1, "mean {mean}");
            assert!((var - 1.0).abs() <= 0.15, "var {var}");
        }
    }

    #[test]
    fn all_entries_finite() {
        for seed in 0..4 {
            let d = sobol_standard_normals(4096, 7, seed).unwrap();
            assert!(d.as_slice().iter().all(|z| z.is_finite()));
        }
    }

    #[test]
    fn scrambled_points_stay_stratified() {
        // Owen scrambling preserves the net property: with 2^m points each
        // dimension has exactly one point in each of the 2^m elementary intervals,
        // up to the single point lost by skipping the origin.
        let n = 256;
        let d = sobol_standard_normals(n, 4, 5).unwrap();
        for col in 0..4 {
            let mut hit = vec![0usize; n];
            for r in d.rows() {
                let u = normal::cdf(r[col]);
                hit[((u * n as f64) as usize).min(n - 1)] += 1;
            }
            assert!(hit.iter().filter(|&&c| c == 0).count() <= 1);
            assert!(hit.iter().all(|&c| c <= 2));
        }
    }

    #[test]
    fn capacity_errors() {
        assert!(matches!(
            NormalDraws::sobol(4, 30_000, 0),
            Err(Error::Capacity(_))
        ));
        assert!(matches!(
            NormalDraws::sobol(u32::MAX as usize, 1, 0),
            Err(Error::Capacity(_))
        ));
    }

    #[test]
    fn explicit_matrix_checks_shape() {
        assert!(NormalDraws::from_matrix(2, 2, vec![1.0, -1.0, -1.0, 1.0]).is_ok());
        assert!(NormalDraws::from_matrix(2, 2, vec![1.0]).is_err());
    }
}
