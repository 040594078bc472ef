//! Monte Carlo estimation of error rates.

use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::codebook::Codebook;
use crate::error::{Error, Result};
use crate::model::{sample_block, CorrelationVector, SourceKind};
use crate::protocol::{ddim_repetition, median_vote, run_binary, run_one_sided, run_two_sided, DdimRun, Verdict};
use crate::rng::{derive_seed, Purpose};

use super::config::{resolve, ExperimentSpec, Hypothesis, ProtocolKind, Resolved};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialReport {
    pub hypothesis: &'static str,
    pub trials: u64,
    pub n: usize,
    pub k: u32,
    pub m: u64,
    pub declared_null: u64,
    /// Fraction of null verdicts; only meaningful under the correlated hypothesis.
    pub false_alarm_rate: Option<f64>,
    /// Fraction of correlated verdicts; only meaningful under the null.
    pub missed_detection_rate: Option<f64>,
    /// `3 sqrt(p (1 - p) / trials)` for the reported rate.
    pub binomial_ci_radius: f64,
    pub avg_bits: f64,
    pub wall_time: f64,
}

impl TrialReport {
    /// JSON form; `wall_time` is left out unless asked for so that repeated
    /// runs print identical bytes.
    pub fn to_json(&self, timing: bool) -> Result<String> {
        let mut v = serde_json::to_value(self)?;
        if !timing {
            if let Some(obj) = v.as_object_mut() {
                obj.remove("wall_time");
            }
        }
        Ok(serde_json::to_string_pretty(&v)?)
    }

    /// The reported (non-vacuous) rate.
    pub fn rate(&self) -> f64 {
        self.false_alarm_rate.or(self.missed_detection_rate).unwrap_or(0.0)
    }
}

/// Inputs shared by every trial of one experiment.
#[derive(Debug, Clone)]
pub struct TrialContext {
    pub resolved: Resolved,
    pub rho: CorrelationVector,
    pub source_kind: SourceKind,
    pub master_seed: u64,
}

/// One protocol execution; streams are keyed by `(master_seed, trial, repetition)`.
pub fn run_trial(ctx: &TrialContext, trial: u64) -> Result<Verdict> {
    let r = &ctx.resolved;
    let block = |rep: u64| {
        sample_block(&ctx.rho, r.n, ctx.source_kind, derive_seed(ctx.master_seed, Purpose::Source, trial, rep))
    };
    match r.protocol {
        ProtocolKind::Ddim => {
            let plan = r.plan.expect("ddim protocol carries a plan");
            let null_votes = ddim_votes(ctx, trial, plan.m)?.iter().filter(|&&v| v).count() as u64;
            Ok(median_vote(null_votes, &plan))
        }
        kind => {
            let b = block(0)?;
            let book = Codebook::with_scan_cap(
                derive_seed(ctx.master_seed, Purpose::Codebook, trial, 0),
                r.n,
                r.params.k,
                r.scan_cap,
            )?;
            let x = b.column(0);
            let run = match kind {
                ProtocolKind::OneSided => run_one_sided,
                ProtocolKind::TwoSided => run_two_sided,
                _ => run_binary,
            };
            Ok(run(&x, b.ys(), &book, &r.params, r.accounting)?.0)
        }
    }
}

/// `D_i = (repetition i declares null)` for the first `m` repetitions of a projected trial.
pub fn ddim_votes(ctx: &TrialContext, trial: u64, m: u64) -> Result<Vec<bool>> {
    let r = &ctx.resolved;
    let run = DdimRun { master_seed: ctx.master_seed, trial, accounting: r.accounting, scan_cap: r.scan_cap };
    (0..m)
        .map(|rep| {
            let b = sample_block(&ctx.rho, r.n, ctx.source_kind, derive_seed(ctx.master_seed, Purpose::Source, trial, rep))?;
            Ok(ddim_repetition(&b, &r.params, &run, rep)?.0 == Verdict::DeclareNull)
        })
        .collect()
}

/// Run `f(i)` for `i in 0..count` on `workers` threads, keeping index order.
pub(crate) fn par_map<T, F>(count: u64, workers: Option<usize>, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    let workers = workers.unwrap_or_else(|| std::thread::available_parallelism().map_or(1, |n| n.get()));
    if workers == 0 {
        return Err(crate::error::invalid("workers must be >= 1"));
    }
    if workers == 1 {
        return (0..count).map(f).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| Error::ResourceRefusal(format!("thread pool: {e}")))?;
    pool.install(|| (0..count).into_par_iter().map(&f).collect())
}

pub fn estimate_error_rates(spec: &ExperimentSpec) -> Result<TrialReport> {
    estimate_with_workers(spec, spec.overrides.workers)
}

pub fn estimate_with_workers(spec: &ExperimentSpec, workers: Option<usize>) -> Result<TrialReport> {
    let start = Instant::now();
    let resolved = resolve(spec)?;
    let ctx = TrialContext {
        resolved: resolved.clone(),
        rho: spec.rho()?,
        source_kind: spec.source_kind,
        master_seed: spec.master_seed,
    };
    let verdicts = par_map(spec.trials, workers, |i| run_trial(&ctx, i))?;
    let declared_null = verdicts.iter().filter(|v| **v == Verdict::DeclareNull).count() as u64;
    let trials = spec.trials;
    let frac = |count: u64| count as f64 / trials as f64;
    let (hypothesis, fa, md) = match spec.hypothesis {
        Hypothesis::Correlated { .. } => ("correlated", Some(frac(declared_null)), None),
        Hypothesis::Null => ("null", None, Some(frac(trials - declared_null))),
    };
    let p = fa.or(md).unwrap_or(0.0);
    Ok(TrialReport {
        hypothesis,
        trials,
        n: resolved.n,
        k: resolved.params.k,
        m: resolved.plan.map_or(1, |p| p.m),
        declared_null,
        false_alarm_rate: fa,
        missed_detection_rate: md,
        binomial_ci_radius: 3.0 * (p * (1.0 - p) / trials as f64).sqrt(),
        avg_bits: resolved.bits_per_trial() as f64,
        wall_time: start.elapsed().as_secs_f64(),
    })
}
