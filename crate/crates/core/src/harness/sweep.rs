//! Error versus communication budget at fixed `d / tau^2`.
//!
//! Budgets are `m k` for a list of repetition counts at one inner message
//! length `k`. Repetition `i` of trial `t` uses the same streams whatever the
//! budget, so the row for `m` is exactly what an `m`-repetition run on that
//! trial's seed would report.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::codebook::ScanCap;
use crate::error::{invalid, Result};
use crate::model::{CorrelationVector, SourceKind};
use crate::params::{
    fixed_length_params, projected_error_pair, two_sided_params, BoostPlan, TestSpec,
};
use crate::protocol::{median_vote, BitAccounting, Verdict};
use crate::rng::{derive_seed, Purpose};

use super::config::{ProtocolKind, Resolved};
use super::simulate::{ddim_votes, par_map, TrialContext};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub d: usize,
    pub tau_sq: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSpec {
    pub configs: Vec<SweepConfig>,
    /// Repetition counts; budget is `m k` bits.
    pub repetitions: Vec<u64>,
    /// Trials per hypothesis.
    pub trials: u64,
    pub master_seed: u64,
    pub n: usize,
    /// Inner message length.
    pub k: u32,
    /// Inner acceptance level; defaults to the closed-form value at the inner spec.
    #[serde(default)]
    pub theta: Option<f64>,
    #[serde(default = "relaxed")]
    pub inner_alpha: f64,
    #[serde(default = "relaxed")]
    pub inner_beta: f64,
    #[serde(default)]
    pub plan_alpha: Option<f64>,
    #[serde(default)]
    pub plan_beta: Option<f64>,
    #[serde(default = "gaussian")]
    pub source_kind: SourceKind,
    #[serde(default)]
    pub strict_bits: bool,
    #[serde(default)]
    pub workers: Option<usize>,
}

fn relaxed() -> f64 {
    0.2
}

fn gaussian() -> SourceKind {
    SourceKind::Gaussian
}

impl SweepSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub d: usize,
    pub tau_sq: f64,
    pub k_bits: u32,
    pub total_bits: u64,
    pub trials: u64,
    pub p_false_alarm: f64,
    pub p_missed: f64,
    pub avg_error: f64,
}

fn validate(spec: &SweepSpec) -> Result<()> {
    if spec.configs.is_empty() {
        return Err(invalid("sweep needs at least one (d, tau^2) pair"));
    }
    if spec.repetitions.is_empty() || spec.repetitions.contains(&0) {
        return Err(invalid("repetition counts must be >= 1"));
    }
    if spec.trials == 0 || spec.trials >= 1 << 30 {
        return Err(invalid("trials must be in 1..2^30"));
    }
    if spec.n == 0 {
        return Err(invalid("n must be >= 1"));
    }
    let mut ratios = Vec::new();
    for c in &spec.configs {
        if c.d == 0 || !(c.tau_sq > 0.0 && c.tau_sq <= 1.0) {
            return Err(invalid(format!("bad sweep pair d={} tau^2={}", c.d, c.tau_sq)));
        }
        ratios.push(c.d as f64 / c.tau_sq);
    }
    let lo = ratios.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ratios.iter().cloned().fold(0.0, f64::max);
    // Some constant c has every ratio in [0.95 c, 1.05 c].
    if hi / lo > 1.05 / 0.95 {
        return Err(invalid(format!("d/tau^2 ranges over [{lo}, {hi}], not within 5% of one constant")));
    }
    Ok(())
}

fn plan_for(spec: &SweepSpec, m: u64) -> Result<BoostPlan> {
    let (pa, pb) = projected_error_pair(spec.inner_alpha, spec.inner_beta);
    let plan = BoostPlan::with_repetitions(spec.plan_alpha.unwrap_or(pa), spec.plan_beta.unwrap_or(pb), m)?;
    plan.validate()?;
    Ok(plan)
}

/// Context for one sweep configuration, run at the largest repetition count.
pub fn sweep_context(spec: &SweepSpec, config: &SweepConfig, rho: CorrelationVector, master: u64) -> Result<TrialContext> {
    let tau = config.tau_sq.sqrt();
    let inner_spec = TestSpec::new(tau / (2.0 * config.d as f64).sqrt(), spec.inner_alpha, spec.inner_beta, 1)?;
    let theta = match spec.theta {
        Some(t) => t,
        None => two_sided_params(&inner_spec)?.theta,
    };
    let params = fixed_length_params(spec.k, spec.inner_alpha, theta)?;
    let m_max = *spec.repetitions.iter().max().expect("validated non-empty");
    let resolved = Resolved {
        protocol: ProtocolKind::Ddim,
        params,
        plan: Some(plan_for(spec, m_max)?),
        n: spec.n,
        d: config.d,
        accounting: if spec.strict_bits { BitAccounting::Strict } else { BitAccounting::Nominal },
        scan_cap: ScanCap::Full,
    };
    Ok(TrialContext { resolved, rho, source_kind: spec.source_kind, master_seed: master })
}

/// Trials whose first `plan.m` votes give `verdict`.
fn count_verdicts(votes: &[Vec<bool>], plan: &BoostPlan, verdict: Verdict) -> u64 {
    let m = plan.m as usize;
    votes
        .iter()
        .filter(|v| median_vote(v[..m].iter().filter(|&&b| b).count() as u64, plan) == verdict)
        .count() as u64
}

pub fn sweep_phase_transition(spec: &SweepSpec) -> Result<Vec<SweepRow>> {
    sweep_with_workers(spec, spec.workers)
}

pub fn sweep_with_workers(spec: &SweepSpec, workers: Option<usize>) -> Result<Vec<SweepRow>> {
    validate(spec)?;
    let plans: Vec<BoostPlan> = spec.repetitions.iter().map(|&m| plan_for(spec, m)).collect::<Result<_>>()?;
    let m_max = *spec.repetitions.iter().max().expect("validated non-empty");
    let mut rows = Vec::new();
    for (ci, config) in spec.configs.iter().enumerate() {
        let master = derive_seed(spec.master_seed, Purpose::Trial, ci as u64, 0);
        let correlated = CorrelationVector::equal_split(config.tau_sq.sqrt(), config.d)?;
        let alt = sweep_context(spec, config, correlated, master)?;
        let null = sweep_context(spec, config, CorrelationVector::zero(config.d)?, master)?;
        let t = spec.trials;
        // Correlated trials take indices [0, t), null trials [t, 2t).
        let alt_votes = par_map(t, workers, |i| ddim_votes(&alt, i, m_max))?;
        let null_votes = par_map(t, workers, |i| ddim_votes(&null, t + i, m_max))?;
        let bits = alt.resolved.accounting.cost(alt.resolved.params.k);
        for plan in &plans {
            let false_alarms = count_verdicts(&alt_votes, plan, Verdict::DeclareNull);
            let misses = count_verdicts(&null_votes, plan, Verdict::DeclareCorrelated);
            rows.push(SweepRow {
                d: config.d,
                tau_sq: config.tau_sq,
                k_bits: bits,
                total_bits: plan.m * bits as u64,
                trials: t,
                p_false_alarm: false_alarms as f64 / t as f64,
                p_missed: misses as f64 / t as f64,
                avg_error: (false_alarms + misses) as f64 / (2 * t) as f64,
            });
        }
    }
    rows.sort_by(|a, b| {
        (a.d, a.total_bits)
            .cmp(&(b.d, b.total_bits))
            .then(a.tau_sq.total_cmp(&b.tau_sq))
    });
    Ok(rows)
}

/// CSV with a header line, `.` decimals and LF line endings.
pub fn write_csv<W: Write>(rows: &[SweepRow], out: W) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out);
    if rows.is_empty() {
        w.write_record(["d", "tau_sq", "k_bits", "total_bits", "trials", "p_false_alarm", "p_missed", "avg_error"])?;
    }
    for row in rows {
        w.serialize(row)?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec() -> SweepSpec {
        SweepSpec {
            configs: vec![SweepConfig { d: 2, tau_sq: 0.405 }, SweepConfig { d: 4, tau_sq: 0.81 }],
            repetitions: vec![1, 3],
            trials: 4,
            master_seed: 3,
            n: 64,
            k: 6,
            theta: None,
            inner_alpha: 0.2,
            inner_beta: 0.2,
            plan_alpha: Some(0.6),
            plan_beta: Some(0.05),
            source_kind: SourceKind::Gaussian,
            strict_bits: false,
            workers: Some(1),
        }
    }

    #[test]
    fn rejects_zero_repetitions() {
        let mut s = spec();
        s.repetitions = vec![0, 2];
        assert!(sweep_phase_transition(&s).is_err());
    }

    #[test]
    fn rejects_mismatched_ratios() {
        let mut s = spec();
        s.configs[1].tau_sq = 0.5;
        assert!(sweep_phase_transition(&s).is_err());
    }

    #[test]
    fn rows_ordered_and_budgets_exact() {
        let rows = sweep_phase_transition(&spec()).unwrap();
        assert_eq!(rows.len(), 4);
        assert_eq!(rows.iter().map(|r| (r.d, r.total_bits)).collect::<Vec<_>>(), vec![(2, 6), (2, 18), (4, 6), (4, 18)]);
        let mut buf = Vec::new();
        write_csv(&rows, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("d,tau_sq,k_bits,total_bits,trials,p_false_alarm,p_missed,avg_error\n"));
        assert!(!text.contains('\r'));
    }
}
