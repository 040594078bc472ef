//! Parameter and bound tables for a test spec.

use serde::Serialize;

use crate::error::Result;
use crate::params::{
    ddim_plan, default_sample_size, lb_ddim, lb_estimation, lb_interactive, lb_oneway_delta, lb_oneway_eps,
    one_sided_params, two_sided_params, upper_bound_bits, Bound, BoundSide, DerivedParams, EstimationBound,
    MedianRule, TestSpec,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundsReport {
    pub spec: TestSpec,
    /// One-dimensional bounds; present for `d = 1`.
    pub lb_oneway_eps: Option<Bound>,
    pub lb_oneway_delta: Option<Bound>,
    pub lb_ddim_eps: Bound,
    pub lb_ddim_delta: Bound,
    pub lb_interactive: Bound,
    pub lb_estimation: EstimationBound,
    pub upper_bound_bits: f64,
    /// Upper bound is at least every one-way and interactive lower bound.
    pub upper_ge_lower: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamsReport {
    pub spec: TestSpec,
    /// Codebook test run per repetition: the one-sided test for `d = 1`,
    /// the inner projected test otherwise.
    pub r: f64,
    pub r_sq: f64,
    pub theta: f64,
    pub k: u32,
    pub k_within_sandwich: bool,
    pub log2_q_r: f64,
    pub m: u64,
    pub t: Option<f64>,
    pub n_default: usize,
    pub inner_spec: Option<TestSpec>,
    /// Parameters of the `|rho| >= tau` test for `d = 1`.
    pub two_sided: Option<DerivedParams>,
    /// Absent when `delta >= 1`, where the bounds are undefined.
    pub bounds: Option<BoundsReport>,
}

pub fn print_bounds(spec: &TestSpec) -> Result<BoundsReport> {
    spec.validate()?;
    let (tau, delta, eps, d) = (spec.tau, spec.delta, spec.epsilon, spec.d);
    let one = |b: Result<Bound>| -> Result<Option<Bound>> { if d == 1 { b.map(Some) } else { Ok(None) } };
    let lb_oneway_eps = one(lb_oneway_eps(tau, delta, eps))?;
    let lb_oneway_delta = one(lb_oneway_delta(tau, delta, eps))?;
    let lb_ddim_eps = lb_ddim(d, tau, delta, eps, BoundSide::Epsilon)?;
    let lb_ddim_delta = lb_ddim(d, tau, delta, eps, BoundSide::Delta)?;
    let lb_interactive = lb_interactive(d, tau, delta, eps)?;
    let upper = upper_bound_bits(spec)?;
    let lower = [lb_oneway_eps, lb_oneway_delta, Some(lb_ddim_eps), Some(lb_ddim_delta), Some(lb_interactive)]
        .iter()
        .flatten()
        .map(|b| b.bits)
        .fold(0.0, f64::max);
    Ok(BoundsReport {
        spec: *spec,
        lb_oneway_eps,
        lb_oneway_delta,
        lb_ddim_eps,
        lb_ddim_delta,
        lb_interactive,
        lb_estimation: lb_estimation(d, tau)?,
        upper_bound_bits: upper,
        upper_ge_lower: upper >= lower,
    })
}

pub fn print_params(spec: &TestSpec) -> Result<ParamsReport> {
    spec.validate()?;
    let bounds = if spec.delta < 1.0 { Some(print_bounds(spec)?) } else { None };
    if spec.d == 1 {
        let p = one_sided_params(spec.tau, spec.delta, spec.epsilon)?;
        Ok(ParamsReport {
            spec: *spec,
            r: p.r,
            r_sq: p.r * p.r,
            theta: p.theta,
            k: p.k,
            k_within_sandwich: p.k_within_sandwich,
            log2_q_r: p.log2_q_r(),
            m: 1,
            t: None,
            n_default: default_sample_size(p.r),
            inner_spec: None,
            two_sided: Some(two_sided_params(spec)?),
            bounds,
        })
    } else {
        let plan = ddim_plan(spec, MedianRule::Hoeffding)?;
        let p = plan.inner;
        Ok(ParamsReport {
            spec: *spec,
            r: p.r,
            r_sq: p.r * p.r,
            theta: p.theta,
            k: p.k,
            k_within_sandwich: p.k_within_sandwich,
            log2_q_r: p.log2_q_r(),
            m: plan.plan.m,
            t: Some(plan.plan.t),
            n_default: default_sample_size(p.r),
            inner_spec: Some(plan.inner_spec),
            two_sided: None,
            bounds,
        })
    }
}
