//! Independent reference implementations used as test oracles.
//!
//! Nothing here calls into the crate's codebook, rng or numerics modules:
//! the codebook mapping is rebuilt from its documented definition and the
//! normal tail is integrated numerically.

#![allow(dead_code)]

use std::path::PathBuf;

const GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;

pub fn splitmix_finalize(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Word `c` of the SplitMix64 stream seeded with `key`, generated sequentially.
pub fn splitmix_word(key: u64, c: u64) -> u64 {
    let mut state = key;
    let mut out = 0;
    for _ in 0..=c {
        state = state.wrapping_add(GAMMA);
        out = splitmix_finalize(state);
    }
    out
}

/// Full `n x 2^k` sign matrix, column-major: `m[j - 1][i]`.
pub fn naive_matrix(seed: u64, n: usize, k: u32) -> Vec<Vec<f64>> {
    (1..=(1u64 << k))
        .map(|j| {
            let key = splitmix_finalize(splitmix_finalize(seed) ^ j.wrapping_mul(GAMMA));
            (0..n)
                .map(|i| {
                    let word = splitmix_word(key, (i / 64) as u64);
                    if word & (1u64 << (i % 64)) != 0 {
                        -1.0
                    } else {
                        1.0
                    }
                })
                .collect()
        })
        .collect()
}

pub fn naive_dot(col: &[f64], x: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..x.len() {
        s += col[i] * x[i];
    }
    s
}

/// Least 1-based column with `U_j . x >= r sqrt(n)`.
pub fn naive_encode(u: &[Vec<f64>], x: &[f64], r: f64) -> Option<u64> {
    let bar = r * (x.len() as f64).sqrt();
    u.iter().position(|c| naive_dot(c, x) >= bar).map(|p| p as u64 + 1)
}

/// `true` = declare correlated.
pub fn naive_decide(u: &[Vec<f64>], msg: Option<u64>, y: &[f64], theta: f64, r: f64, two_sided: bool) -> bool {
    let Some(j) = msg else { return false };
    let dot = naive_dot(&u[(j - 1) as usize], y);
    let bar = theta * r * (y.len() as f64).sqrt();
    dot >= bar || (two_sided && -dot >= bar)
}

/// Projection direction from the documented mapping.
pub fn naive_projection(d: usize, seed: u64) -> Vec<f64> {
    let s = 1.0 / (d as f64).sqrt();
    (0..d)
        .map(|i| {
            if splitmix_word(seed, (i / 64) as u64) & (1u64 << (i % 64)) != 0 {
                -s
            } else {
                s
            }
        })
        .collect()
}

/// `(master, purpose, trial, repetition)` stream key, from the documented packing.
pub fn naive_derive(master: u64, purpose: u64, trial: u64, rep: u64) -> u64 {
    splitmix_finalize(splitmix_finalize(master) ^ (purpose << 56 | rep << 32 | trial))
}

fn phi(t: f64) -> f64 {
    (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

/// `Q(x)` by composite 5-point Gauss-Legendre over `[x, 40]`, panels of width 1/16.
pub fn q_integrated(x: f64) -> f64 {
    let a = (5.0 - 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let b = (5.0 + 2.0 * (10.0f64 / 7.0).sqrt()).sqrt() / 3.0;
    let wa = (322.0 + 13.0 * 70.0f64.sqrt()) / 900.0;
    let wb = (322.0 - 13.0 * 70.0f64.sqrt()) / 900.0;
    let nodes = [(0.0, 128.0 / 225.0), (a, wa), (-a, wa), (b, wb), (-b, wb)];
    let upper = 40.0;
    if x >= upper {
        return 0.0;
    }
    let panels = ((upper - x) * 16.0).ceil() as usize;
    let h = (upper - x) / panels as f64;
    // Sum from the far end so small contributions accumulate first.
    let mut total = 0.0;
    for p in (0..panels).rev() {
        let mid = x + (p as f64 + 0.5) * h;
        let mut s = 0.0;
        for &(t, w) in &nodes {
            s += w * phi(mid + 0.5 * h * t);
        }
        total += 0.5 * h * s;
    }
    total
}

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("fixtures").join(name)
}

pub fn rel_close(actual: f64, expected: f64, rel: f64) -> bool {
    if expected == 0.0 {
        actual.abs() <= 1e-12
    } else {
        ((actual - expected) / expected).abs() <= rel
    }
}

/// One point of the extended-precision formula grid.
#[derive(Debug, Clone, serde::Deserialize)]
pub struct GridPoint {
    pub tau: String,
    pub delta: String,
    pub epsilon: String,
    pub d: usize,
    pub rho0: String,
    pub rho1: String,
    pub r: String,
    pub theta: String,
    pub k: u32,
    pub binary_r: String,
    pub binary_theta: String,
    pub binary_k: u32,
    pub lb_oneway_eps: String,
    pub lb_oneway_delta: String,
    pub lb_ddim_eps: String,
    pub lb_ddim_delta: String,
    pub lb_interactive: String,
    pub lb_estimation: String,
}

pub fn num(s: &str) -> f64 {
    s.parse().expect("fixture decimal")
}

pub fn load_grid() -> Vec<GridPoint> {
    #[derive(serde::Deserialize)]
    struct Grid {
        points: Vec<GridPoint>,
    }
    let text = std::fs::read_to_string(fixture_path("formula_grid.json")).expect("fixture present");
    serde_json::from_str::<Grid>(&text).expect("fixture parses").points
}
