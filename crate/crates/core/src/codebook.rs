//! Shared `n x 2^k` sign codebook, generated lazily column by column.
//!
//! Column `j` (1-based) is keyed by `mix64(mix64(seed) ^ j * GOLDEN_GAMMA)`.
//! Entry `i` of that column is bit `i mod 64` of word `i / 64` of the
//! [`CounterRng`] stream under the column key; a set bit is `-1`, a clear bit
//! `+1`. Either party can rebuild any single column from `(seed, j)`.

use crate::error::{invalid, Error, Result};
use crate::rng::{mix64, CounterRng, GOLDEN_GAMMA};

/// Largest message length whose index space fits in a `u64`.
pub const MAX_K: u32 = 63;
/// Scans longer than `2^40` columns need an explicit cap.
pub const MAX_FULL_SCAN_LOG2: u32 = 40;

/// How many columns `find_first_hit` may examine.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ScanCap {
    /// All `2^k` columns; refused when `2^k > 2^40`.
    #[default]
    Full,
    /// At most this many columns. Columns past the cap are treated as misses.
    Limit(u64),
}

/// Check that a `2^k` codebook can be scanned under `cap`.
pub fn check_budget(k: u32, cap: ScanCap) -> Result<()> {
    if k == 0 {
        return Err(invalid("codebook needs k >= 1"));
    }
    if k > MAX_K {
        return Err(Error::ResourceRefusal(format!(
            "k = {k} bits: 2^k columns cannot be indexed (limit k <= {MAX_K})"
        )));
    }
    match cap {
        ScanCap::Full if k > MAX_FULL_SCAN_LOG2 => Err(Error::ResourceRefusal(format!(
            "k = {k} bits: a full scan of 2^{k} columns exceeds 2^{MAX_FULL_SCAN_LOG2}; set an explicit scan cap"
        ))),
        ScanCap::Limit(0) => Err(invalid("scan cap must be >= 1")),
        _ => Ok(()),
    }
}

#[derive(Debug, Clone)]
pub struct Codebook {
    seed: u64,
    n: usize,
    k: u32,
    cap: ScanCap,
    all_plus: bool,
}

impl Codebook {
    pub fn new(seed: u64, n: usize, k: u32) -> Result<Self> {
        Self::with_scan_cap(seed, n, k, ScanCap::Full)
    }

    pub fn with_scan_cap(seed: u64, n: usize, k: u32, cap: ScanCap) -> Result<Self> {
        if n == 0 {
            return Err(invalid("codebook needs n >= 1"));
        }
        check_budget(k, cap)?;
        Ok(Codebook { seed, n, k, cap, all_plus: false })
    }

    /// A codebook whose entries are all `+1`. Test rigs only.
    #[doc(hidden)]
    pub fn all_plus_for_tests(n: usize, k: u32) -> Result<Self> {
        let mut book = Self::new(0, n, k)?;
        book.all_plus = true;
        Ok(book)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn k(&self) -> u32 {
        self.k
    }

    pub fn columns(&self) -> u64 {
        1u64 << self.k
    }

    /// Columns `find_first_hit` will examine.
    pub fn scan_limit(&self) -> u64 {
        match self.cap {
            ScanCap::Full => self.columns(),
            ScanCap::Limit(c) => c.min(self.columns()),
        }
    }

    fn column_key(&self, j: u64) -> u64 {
        mix64(mix64(self.seed) ^ j.wrapping_mul(GOLDEN_GAMMA))
    }

    fn check_index(&self, j: u64) -> Result<()> {
        if j == 0 || j > self.columns() {
            return Err(invalid(format!("column index {j} outside [1, {}]", self.columns())));
        }
        Ok(())
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::Shape(format!("vector has length {len}, codebook has n = {}", self.n)));
        }
        Ok(())
    }

    /// Sign word `w` of column `j`: bit `b` set means entry `64 w + b` is `-1`.
    fn sign_word(&self, key: u64, w: usize) -> u64 {
        if self.all_plus {
            0
        } else {
            CounterRng::word_at(key, w as u64)
        }
    }

    /// Column `j` as `+-1` values.
    pub fn column(&self, j: u64) -> Result<Vec<f64>> {
        self.check_index(j)?;
        let key = self.column_key(j);
        Ok((0..self.n)
            .map(|i| {
                if (self.sign_word(key, i / 64) >> (i % 64)) & 1 == 1 {
                    -1.0
                } else {
                    1.0
                }
            })
            .collect())
    }

    /// `sum_i U_ij x_i`, accumulated in index order.
    pub fn column_dot(&self, j: u64, x: &[f64]) -> Result<f64> {
        self.check_index(j)?;
        self.check_len(x.len())?;
        Ok(self.dot_unchecked(j, x))
    }

    fn dot_unchecked(&self, j: u64, x: &[f64]) -> f64 {
        let key = self.column_key(j);
        let mut acc = 0.0;
        for (w, chunk) in x.chunks(64).enumerate() {
            let bits = self.sign_word(key, w);
            for (b, &v) in chunk.iter().enumerate() {
                let flip = ((bits >> b) & 1) << 63;
                acc += f64::from_bits(v.to_bits() ^ flip);
            }
        }
        acc
    }

    /// Least `j` in scan order `1, 2, ...` with `U_j . x >= threshold`.
    pub fn find_first_hit(&self, x: &[f64], threshold: f64) -> Result<Option<u64>> {
        self.check_len(x.len())?;
        Ok((1..=self.scan_limit()).find(|&j| self.dot_unchecked(j, x) >= threshold))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn xs(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = CounterRng::new(seed);
        (0..n).map(|_| rand::Rng::random::<f64>(&mut rng) - 0.5).collect()
    }

    #[test]
    fn all_plus_column_sums() {
        let book = Codebook::all_plus_for_tests(100, 3).unwrap();
        assert_eq!(book.column_dot(5, &vec![1.0; 100]).unwrap(), 100.0);
    }

    #[test]
    fn dot_is_odd() {
        let book = Codebook::new(17, 130, 8).unwrap();
        let x = xs(130, 1);
        let neg: Vec<f64> = x.iter().map(|v| -v).collect();
        for j in 1..=20 {
            assert_eq!(book.column_dot(j, &neg).unwrap(), -book.column_dot(j, &x).unwrap());
        }
    }

    #[test]
    fn dot_matches_naive_loop() {
        let book = Codebook::new(5, 64, 6).unwrap();
        let x = xs(64, 2);
        for j in 1..=64 {
            let col = book.column(j).unwrap();
            let mut naive = 0.0;
            for i in 0..64 {
                naive += col[i] * x[i];
            }
            assert_eq!(book.column_dot(j, &x).unwrap(), naive);
        }
    }

    #[test]
    fn trivial_thresholds() {
        let book = Codebook::new(9, 10, 4).unwrap();
        let x = xs(10, 3);
        let l1: f64 = x.iter().map(|v| v.abs()).sum();
        assert_eq!(book.find_first_hit(&x, -l1).unwrap(), Some(1));
        assert_eq!(book.find_first_hit(&x, l1 + 1e-9).unwrap(), None);
    }

    #[test]
    fn first_hit_matches_exhaustive_scan() {
        for seed in 0..20 {
            let book = Codebook::new(seed, 8, 4).unwrap();
            let x = xs(8, 100 + seed);
            let thr = 0.6;
            let expect = (1..=16).find(|&j| {
                let col = book.column(j).unwrap();
                col.iter().zip(&x).map(|(u, v)| u * v).sum::<f64>() >= thr
            });
            assert_eq!(book.find_first_hit(&x, thr).unwrap(), expect);
        }
    }

    #[test]
    fn shared_seed_gives_same_columns() {
        let a = Codebook::new(77, 200, 10).unwrap();
        let b = Codebook::new(77, 200, 10).unwrap();
        for j in [1, 2, 500, 1024] {
            assert_eq!(a.column(j).unwrap(), b.column(j).unwrap());
        }
        let c = Codebook::new(78, 200, 10).unwrap();
        assert_ne!(a.column(1).unwrap(), c.column(1).unwrap());
    }

    #[test]
    fn entries_unbiased() {
        let book = Codebook::new(3, 100, 8).unwrap();
        let total: f64 = (1..=100).map(|j| book.column(j).unwrap().iter().sum::<f64>()).sum();
        assert!((total / 10_000.0).abs() < 0.04);
    }

    #[test]
    fn budget_refusals() {
        assert!(matches!(Codebook::new(0, 4, 64), Err(Error::ResourceRefusal(_))));
        assert!(matches!(Codebook::new(0, 4, 41), Err(Error::ResourceRefusal(_))));
        assert!(Codebook::with_scan_cap(0, 4, 41, ScanCap::Limit(1000)).is_ok());
        assert!(Codebook::new(0, 4, 0).is_err());
    }

    #[test]
    fn errors_on_bad_index_and_length() {
        let book = Codebook::new(0, 4, 2).unwrap();
        assert!(book.column_dot(0, &[0.0; 4]).is_err());
        assert!(book.column_dot(5, &[0.0; 4]).is_err());
        assert!(book.column_dot(1, &[0.0; 3]).is_err());
    }

    #[test]
    fn scan_cap_limits_search() {
        let book = Codebook::with_scan_cap(1, 16, 8, ScanCap::Limit(3)).unwrap();
        let x = xs(16, 8);
        let hit = book.find_first_hit(&x, f64::NEG_INFINITY).unwrap();
        assert_eq!(hit, Some(1));
        let full = Codebook::new(1, 16, 8).unwrap();
        if let Some(j) = full.find_first_hit(&x, 1.5).unwrap() {
            let capped = book.find_first_hit(&x, 1.5).unwrap();
            assert_eq!(capped, if j <= 3 { Some(j) } else { None });
        }
    }
}
