//! Experiment configuration as read from JSON, and its resolution into runnable parameters.

use serde::{Deserialize, Serialize};

use crate::codebook::{check_budget, ScanCap};
use crate::error::{invalid, Error, Result};
use crate::model::{CorrelationVector, SourceKind};
use crate::params::{
    binary_params, default_sample_size, fixed_length_params, median_plan, one_sided_params, projected_error_pair,
    two_sided_params, BoostPlan, DerivedParams, MedianRule, TestSpec, DDIM_INNER_ALPHA, DDIM_INNER_BETA,
};
use crate::protocol::BitAccounting;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Hypothesis {
    Null,
    Correlated { rho: CorrelationVector },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProtocolKind {
    OneSided,
    TwoSided,
    Ddim,
    Binary { rho0: f64, rho1: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Overrides {
    /// Error targets of the inner one-dimensional test (projected protocol).
    pub inner_alpha: Option<f64>,
    pub inner_beta: Option<f64>,
    /// Per-repetition error pair fed to the repetition planner.
    pub plan_alpha: Option<f64>,
    pub plan_beta: Option<f64>,
    pub median_rule: Option<MedianRule>,
    /// Repetition count.
    pub m: Option<u64>,
    /// Message length; `r` is then solved from `2^k Q(r) = ln(3/delta)`.
    pub k: Option<u32>,
    /// Acceptance level used together with `k`.
    pub theta: Option<f64>,
    pub scan_cap: Option<u64>,
    pub strict_bits: Option<bool>,
    pub workers: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub hypothesis: Hypothesis,
    pub test: TestSpec,
    /// Samples per inner test; defaults to `10 ceil(1/Q(r))`, capped.
    #[serde(default)]
    pub n: Option<usize>,
    pub trials: u64,
    pub master_seed: u64,
    #[serde(default = "default_source")]
    pub source_kind: SourceKind,
    /// Defaults to `two_sided` for `d = 1` and `ddim` otherwise.
    #[serde(default)]
    pub protocol: Option<ProtocolKind>,
    #[serde(default)]
    pub overrides: Overrides,
}

fn default_source() -> SourceKind {
    SourceKind::Gaussian
}

impl ExperimentSpec {
    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// Correlation vector of the sampled source.
    pub fn rho(&self) -> Result<CorrelationVector> {
        match &self.hypothesis {
            Hypothesis::Null => CorrelationVector::zero(self.test.d),
            Hypothesis::Correlated { rho } => Ok(rho.clone()),
        }
    }
}

/// Everything a trial needs, fixed before any sampling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Resolved {
    pub protocol: ProtocolKind,
    /// Parameters of the (inner) codebook test.
    pub params: DerivedParams,
    /// Present for the projected protocol only.
    pub plan: Option<BoostPlan>,
    pub n: usize,
    pub d: usize,
    #[serde(skip)]
    pub accounting: BitAccounting,
    #[serde(skip)]
    pub scan_cap: ScanCap,
}

impl Resolved {
    /// Bits charged per trial; independent of the data.
    pub fn bits_per_trial(&self) -> u64 {
        let m = self.plan.map_or(1, |p| p.m);
        m * self.accounting.cost(self.params.k) as u64
    }
}

pub(crate) fn scan_cap_of(o: &Overrides) -> ScanCap {
    o.scan_cap.map_or(ScanCap::Full, ScanCap::Limit)
}

pub(crate) fn accounting_of(o: &Overrides) -> BitAccounting {
    if o.strict_bits.unwrap_or(false) {
        BitAccounting::Strict
    } else {
        BitAccounting::Nominal
    }
}

/// Codebook parameters for an explicit `k`, or the closed form otherwise.
fn params_with(o: &Overrides, delta: f64, closed: impl FnOnce() -> Result<DerivedParams>) -> Result<DerivedParams> {
    match o.k {
        Some(k) => {
            let theta = match o.theta {
                Some(t) => t,
                None => closed()?.theta,
            };
            fixed_length_params(k, delta, theta)
        }
        None => {
            if o.theta.is_some() {
                return Err(invalid("theta override needs an explicit k"));
            }
            closed()
        }
    }
}

pub fn resolve(spec: &ExperimentSpec) -> Result<Resolved> {
    spec.test.validate()?;
    if spec.trials == 0 {
        return Err(invalid("trials must be >= 1"));
    }
    if spec.trials >= 1 << 31 {
        return Err(invalid("trials must be < 2^31"));
    }
    let rho = spec.rho()?;
    if rho.dim() != spec.test.d {
        return Err(Error::Shape(format!(
            "hypothesis has dimension {}, test has d = {}",
            rho.dim(),
            spec.test.d
        )));
    }
    let d = spec.test.d;
    let protocol = spec.protocol.unwrap_or(if d == 1 { ProtocolKind::TwoSided } else { ProtocolKind::Ddim });
    let o = &spec.overrides;
    let t = spec.test;
    if !matches!(protocol, ProtocolKind::Ddim) && d != 1 {
        return Err(invalid("one-dimensional protocols need d = 1"));
    }
    if !matches!(protocol, ProtocolKind::Ddim)
        && (o.inner_alpha.is_some() || o.inner_beta.is_some() || o.plan_alpha.is_some() || o.plan_beta.is_some() || o.m.is_some())
    {
        return Err(invalid("inner/plan/m overrides apply to the ddim protocol only"));
    }

    let (params, plan) = match protocol {
        ProtocolKind::OneSided => (params_with(o, t.delta, || one_sided_params(t.tau, t.delta, t.epsilon))?, None),
        ProtocolKind::TwoSided => (params_with(o, t.delta, || two_sided_params(&t))?, None),
        ProtocolKind::Binary { rho0, rho1 } => {
            (params_with(o, t.delta, || binary_params(rho0, rho1, t.delta, t.epsilon))?, None)
        }
        ProtocolKind::Ddim => {
            let ia = o.inner_alpha.unwrap_or(DDIM_INNER_ALPHA);
            let ib = o.inner_beta.unwrap_or(DDIM_INNER_BETA);
            let inner_spec = TestSpec::new(t.tau / (2.0 * d as f64).sqrt(), ia, ib, 1)?;
            let params = params_with(o, ia, || two_sided_params(&inner_spec))?;
            let (pa, pb) = projected_error_pair(ia, ib);
            let pa = o.plan_alpha.unwrap_or(pa);
            let pb = o.plan_beta.unwrap_or(pb);
            let plan = match o.m {
                Some(m) => BoostPlan::with_repetitions(pa, pb, m)?,
                None => median_plan(pa, pb, t.delta, t.epsilon, o.median_rule.unwrap_or_default())?,
            };
            plan.validate()?;
            if plan.m >= 1 << 24 {
                return Err(Error::ResourceRefusal(format!("m = {} repetitions exceeds 2^24", plan.m)));
            }
            (params, Some(plan))
        }
    };
    let scan_cap = scan_cap_of(o);
    check_budget(params.k, scan_cap)?;
    let n = match spec.n {
        Some(0) => return Err(invalid("n must be >= 1")),
        Some(n) => n,
        None => default_sample_size(params.r),
    };
    Ok(Resolved { protocol, params, plan, n, d, accounting: accounting_of(o), scan_cap })
}
