//! Closed-form protocol parameters, repetition planning and communication
//! lower bounds.
//!
//! `log` means base 2 and `ln` the natural logarithm throughout; every
//! formula keeps the bases exactly as derived and every bound is in bits.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::numerics::{log2_q_tail_unchecked, q_tail_unchecked};

/// Pre-boost false-alarm target of the inner one-dimensional test.
pub const DDIM_INNER_ALPHA: f64 = 1.0 / 56.0;
/// Pre-boost missed-detection target of the inner one-dimensional test.
pub const DDIM_INNER_BETA: f64 = 1.0 / 112.0;
/// Probability that a Rademacher projection keeps at least `|rho| / sqrt(2d)`.
pub const PROJECTION_SUCCESS: f64 = 1.0 / 28.0;
/// Default sample size is capped here.
pub const MAX_DEFAULT_SAMPLES: usize = 1_000_000;

/// Ceiling that ignores floating-point noise just above an integer.
pub(crate) fn ceil_tol(x: f64) -> f64 {
    let r = x.round();
    if (x - r).abs() <= 1e-9 * x.abs().max(1.0) {
        r
    } else {
        x.ceil()
    }
}

fn check_open_unit(name: &str, v: f64) -> Result<()> {
    if !(v > 0.0 && v < 1.0) {
        return Err(invalid(format!("{name} must lie in (0, 1), got {v}")));
    }
    Ok(())
}

/// The closed forms only need `ln(3/delta) > 0`, so `delta` may exceed 1.
fn check_delta(delta: f64) -> Result<()> {
    if !(delta > 0.0 && delta < 3.0) {
        return Err(invalid(format!("delta must lie in (0, 3), got {delta}")));
    }
    Ok(())
}

fn check_tau(tau: f64) -> Result<()> {
    if !(tau > 0.0 && tau <= 1.0) {
        return Err(invalid(format!("tau must lie in (0, 1], got {tau}")));
    }
    Ok(())
}

/// Requirements of a `(l, delta, epsilon, tau)`-test in dimension `d`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TestSpec {
    pub tau: f64,
    pub delta: f64,
    pub epsilon: f64,
    #[serde(default = "default_dim")]
    pub d: usize,
}

fn default_dim() -> usize {
    1
}

impl TestSpec {
    pub fn new(tau: f64, delta: f64, epsilon: f64, d: usize) -> Result<Self> {
        let spec = TestSpec { tau, delta, epsilon, d };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        check_tau(self.tau)?;
        check_delta(self.delta)?;
        check_open_unit("epsilon", self.epsilon)?;
        if self.d == 0 {
            return Err(invalid("d must be >= 1"));
        }
        Ok(())
    }
}

/// Knobs of the one-sided codebook test: P1 looks for a column with
/// `U_j . x >= r sqrt(n)` among `2^k`; P2 accepts if `U_j . y >= theta r sqrt(n)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DerivedParams {
    pub r: f64,
    pub theta: f64,
    pub k: u32,
    /// Whether `ln(3/delta) <= 2^k Q(r) <= 2 ln(3/delta)` holds for the integer `k`.
    pub k_within_sandwich: bool,
}

impl DerivedParams {
    /// Build from explicit values, checking only basic ranges.
    pub fn explicit(r: f64, theta: f64, k: u32) -> Result<Self> {
        if !(r > 0.0 && r.is_finite()) {
            return Err(invalid(format!("r must be positive, got {r}")));
        }
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(invalid(format!("theta must be positive, got {theta}")));
        }
        if k == 0 {
            return Err(invalid("k must be >= 1"));
        }
        Ok(DerivedParams { r, theta, k, k_within_sandwich: true })
    }

    /// `log2 Q(r)`.
    pub fn log2_q_r(&self) -> f64 {
        log2_q_tail_unchecked(self.r)
    }
}

/// `k = ceil(log(1/Q(r)) + log ln(3/delta))` and the sandwich flag.
fn bits_for_threshold(r: f64, delta: f64) -> Result<(u32, bool)> {
    let log_ln = (3.0 / delta).ln().log2();
    let raw = -log2_q_tail_unchecked(r) + log_ln;
    let k = ceil_tol(raw).max(1.0);
    if k > u32::MAX as f64 {
        return Err(invalid(format!("k = {k} bits is not representable")));
    }
    // log2(2^k Q(r)) - log2 ln(3/delta) must land in [0, 1].
    let slack = k - raw;
    let within = (-1e-9..=1.0 + 1e-9).contains(&slack);
    Ok((k as u32, within))
}

fn threshold_exponents(tau_like_gap: f64, miss_weight: f64, delta: f64, epsilon: f64, alarm_weight: f64) -> (f64, f64, f64) {
    let a = miss_weight * (1.0 / epsilon).log2() + (3.0 / delta).ln().log2() + 1.0;
    let b = alarm_weight * (3.0 / delta).log2();
    let r_sq = 2.0 * std::f64::consts::LN_2 / (tau_like_gap * tau_like_gap) * (a.sqrt() + b.sqrt()).powi(2);
    (a, b, r_sq)
}

/// Parameters of the one-sided test `rho >= tau` vs `rho = 0`.
pub fn one_sided_params(tau: f64, delta: f64, epsilon: f64) -> Result<DerivedParams> {
    check_tau(tau)?;
    check_delta(delta)?;
    check_open_unit("epsilon", epsilon)?;
    let (a, b, r_sq) = threshold_exponents(tau, 1.0, delta, epsilon, 1.0 - tau * tau);
    if a <= 0.0 {
        return Err(invalid(format!("exponent a = {a} must be positive")));
    }
    let r = r_sq.sqrt();
    let theta = tau * a.sqrt() / (a.sqrt() + b.sqrt());
    let (k, k_within_sandwich) = bits_for_threshold(r, delta)?;
    Ok(DerivedParams { r, theta, k, k_within_sandwich })
}

/// Parameters of the two-sided `d = 1` test with errors `(delta, epsilon)`:
/// the shared one-sided test is run at `epsilon / 2`, since accepting on
/// either `y` or `-y` doubles the missed-detection probability.
pub fn two_sided_params(spec: &TestSpec) -> Result<DerivedParams> {
    spec.validate()?;
    one_sided_params(spec.tau, spec.delta, spec.epsilon / 2.0)
}

/// Parameters of the simple test `rho = rho0` vs `rho = rho1`, `0 < rho1 < rho0 < 1`.
///
/// `theta` interpolates between the endpoints with the same `sqrt(a)` weight
/// as the one-sided optimum.
pub fn binary_params(rho0: f64, rho1: f64, delta: f64, epsilon: f64) -> Result<DerivedParams> {
    if !(rho1 > 0.0 && rho1 < rho0 && rho0 < 1.0) {
        return Err(invalid(format!("need 0 < rho1 < rho0 < 1, got rho0={rho0} rho1={rho1}")));
    }
    check_delta(delta)?;
    check_open_unit("epsilon", epsilon)?;
    let (a, b, r_sq) =
        threshold_exponents(rho0 - rho1, 1.0 - rho1 * rho1, delta, epsilon, 1.0 - rho0 * rho0);
    if a <= 0.0 {
        return Err(invalid(format!("exponent a = {a} must be positive")));
    }
    let r = r_sq.sqrt();
    let theta = rho1 + (rho0 - rho1) * a.sqrt() / (a.sqrt() + b.sqrt());
    let (k, k_within_sandwich) = bits_for_threshold(r, delta)?;
    Ok(DerivedParams { r, theta, k, k_within_sandwich })
}

/// Parameters at a fixed message length `k`: `r` solves
/// `2^k Q(r) = ln(3/delta)` (the lower edge of the sandwich) and `theta` is
/// given explicitly. Used where the closed-form `k` is far beyond any scan
/// budget.
pub fn fixed_length_params(k: u32, delta: f64, theta: f64) -> Result<DerivedParams> {
    check_delta(delta)?;
    if k == 0 {
        return Err(invalid("fixed message length must be >= 1"));
    }
    if k > 62 {
        return Err(Error::ResourceRefusal(format!("k = {k} bits: fixed message length is limited to 62")));
    }
    let target = (3.0 / delta).ln().log2() - k as f64;
    if target >= -1.0 {
        return Err(invalid(format!(
            "k = {k} too small: ln(3/delta)/2^k = {} leaves no positive threshold",
            target.exp2()
        )));
    }
    // log2 Q is strictly decreasing; bisect on (0, 40).
    let (mut lo, mut hi) = (0.0_f64, 40.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if log2_q_tail_unchecked(mid) > target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let r = 0.5 * (lo + hi);
    let mut p = DerivedParams::explicit(r, theta, k)?;
    p.k_within_sandwich = bits_for_threshold(r, delta)?.0 <= k;
    Ok(p)
}

/// Default sample size `10 * ceil(1/Q(r))`, capped at [`MAX_DEFAULT_SAMPLES`].
pub fn default_sample_size(r: f64) -> usize {
    let log2_inv = -log2_q_tail_unchecked(r);
    if log2_inv >= 20.0 {
        return MAX_DEFAULT_SAMPLES;
    }
    let n = 10.0 * ceil_tol(1.0 / q_tail_unchecked(r));
    (n as usize).min(MAX_DEFAULT_SAMPLES)
}

/// Repetition count rule for boosting a constant-error test.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MedianRule {
    /// `m >= 2/(1-beta-alpha)^2 max{ln 1/delta, ln 1/epsilon}`, which is what
    /// the Hoeffding steps `exp(-2m(t-alpha)^2)` require.
    #[default]
    Hoeffding,
    /// The `2/(1-beta+alpha)^2` denominator as printed; kept for comparison.
    Printed,
}

/// `m` repetitions of an `(alpha, beta)` test, declaring null iff more than `m t` of them do.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoostPlan {
    pub alpha: f64,
    pub beta: f64,
    pub m: u64,
    pub t: f64,
}

impl BoostPlan {
    /// A plan with an explicit repetition count and the midpoint threshold.
    pub fn with_repetitions(alpha: f64, beta: f64, m: u64) -> Result<Self> {
        check_pair(alpha, beta)?;
        if m == 0 {
            return Err(invalid("repetition count must be >= 1"));
        }
        Ok(BoostPlan { alpha, beta, m, t: (1.0 - beta + alpha) / 2.0 })
    }

    pub fn validate(&self) -> Result<()> {
        check_pair(self.alpha, self.beta)?;
        if self.m == 0 {
            return Err(invalid("repetition count must be >= 1"));
        }
        if !(self.t > self.alpha && self.t < 1.0 - self.beta) {
            return Err(invalid(format!(
                "threshold t = {} must lie in (alpha, 1 - beta) = ({}, {})",
                self.t,
                self.alpha,
                1.0 - self.beta
            )));
        }
        Ok(())
    }
}

fn check_pair(alpha: f64, beta: f64) -> Result<()> {
    if !(alpha >= 0.0 && beta >= 0.0 && alpha + beta < 1.0) {
        return Err(invalid(format!("need alpha, beta >= 0 and alpha + beta < 1, got ({alpha}, {beta})")));
    }
    Ok(())
}

pub fn median_plan(alpha: f64, beta: f64, delta: f64, epsilon: f64, rule: MedianRule) -> Result<BoostPlan> {
    check_pair(alpha, beta)?;
    check_open_unit("delta", delta)?;
    check_open_unit("epsilon", epsilon)?;
    let gap = match rule {
        MedianRule::Hoeffding => 1.0 - beta - alpha,
        MedianRule::Printed => 1.0 - beta + alpha,
    };
    let log_term = (-delta.ln()).max(-epsilon.ln());
    let m = ceil_tol(2.0 / (gap * gap) * log_term).max(1.0);
    if m > u64::MAX as f64 {
        return Err(invalid("repetition count overflows"));
    }
    Ok(BoostPlan { alpha, beta, m: m as u64, t: (1.0 - beta + alpha) / 2.0 })
}

/// The one-dimensional spec each projected repetition must meet:
/// threshold `tau / sqrt(2d)`, errors `(1/56, 1/112)`.
pub fn ddim_inner_spec(tau: f64, d: usize) -> Result<TestSpec> {
    check_tau(tau)?;
    if d == 0 {
        return Err(invalid("d must be >= 1"));
    }
    TestSpec::new(tau / (2.0 * d as f64).sqrt(), DDIM_INNER_ALPHA, DDIM_INNER_BETA, 1)
}

/// Error pair of one projected repetition built on an `(alpha, beta)` inner
/// test: a false alarm also happens when the projection misses, which has
/// probability at most `1 - 1/28`.
pub fn projected_error_pair(inner_alpha: f64, inner_beta: f64) -> (f64, f64) {
    (inner_alpha + (1.0 - PROJECTION_SUCCESS), inner_beta)
}

/// Everything needed to run the full d-dimensional test at the default targets.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DdimPlan {
    pub inner_spec: TestSpec,
    pub inner: DerivedParams,
    pub plan: BoostPlan,
}

pub fn ddim_plan(spec: &TestSpec, rule: MedianRule) -> Result<DdimPlan> {
    spec.validate()?;
    let inner_spec = ddim_inner_spec(spec.tau, spec.d)?;
    let inner = two_sided_params(&inner_spec)?;
    let (alpha, beta) = projected_error_pair(inner_spec.delta, inner_spec.epsilon);
    let plan = median_plan(alpha, beta, spec.delta, spec.epsilon, rule)?;
    Ok(DdimPlan { inner_spec, inner, plan })
}

/// Bits used by the implemented one-way protocol: `k` of the one-sided test
/// for `d = 1`, `m k` of the boosted projected test otherwise.
pub fn upper_bound_bits(spec: &TestSpec) -> Result<f64> {
    spec.validate()?;
    if spec.d == 1 {
        Ok(one_sided_params(spec.tau, spec.delta, spec.epsilon)?.k as f64)
    } else {
        let p = ddim_plan(spec, MedianRule::Hoeffding)?;
        Ok(p.plan.m as f64 * p.inner.k as f64)
    }
}

/// A lower bound in bits together with the conditions it was computed under.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Bound {
    pub bits: f64,
    /// The stated hypothesis of the bound holds at these arguments.
    pub hypothesis_ok: bool,
    /// The quoted value was negative and 0 is reported instead.
    pub clamped: bool,
}

/// `scale (sqrt(lead) - sqrt(penalty))^2`, or 0 when `lead < penalty`.
fn radical_gap(scale: f64, lead: f64, penalty: f64, hypothesis_ok: bool) -> Bound {
    let gap = lead.sqrt() - penalty.sqrt();
    if gap.is_nan() || gap < 0.0 {
        Bound { bits: 0.0, hypothesis_ok, clamped: true }
    } else {
        Bound { bits: scale * gap * gap, hypothesis_ok, clamped: false }
    }
}

fn check_bound_args(tau: f64, delta: f64, epsilon: f64) -> Result<()> {
    check_tau(tau)?;
    if !(0.0..1.0).contains(&delta) {
        return Err(invalid(format!("delta must lie in [0, 1), got {delta}")));
    }
    if !(0.0..1.0).contains(&epsilon) {
        return Err(invalid(format!("epsilon must lie in [0, 1), got {epsilon}")));
    }
    Ok(())
}

/// `delta + epsilon^((1-tau)/(1+tau)) <= 1`.
pub fn eps_bound_hypothesis(tau: f64, delta: f64, epsilon: f64) -> bool {
    delta + epsilon.powf((1.0 - tau) / (1.0 + tau)) <= 1.0
}

/// `(1/tau^2)(sqrt(log 1/eps) - sqrt((1-tau^2) log 1/(1-delta)))^2`.
pub fn lb_oneway_eps(tau: f64, delta: f64, epsilon: f64) -> Result<Bound> {
    lb_ddim(1, tau, delta, epsilon, BoundSide::Epsilon)
}

/// `(1/tau^2)(sqrt(log 1/(1-eps)) - sqrt((1-tau^2) log 1/delta))^2`.
///
/// Not clamped: the difference is negative exactly where this bound matters
/// (small `delta`), giving the `(1-tau^2)/tau^2 log 1/delta` leading term.
/// `hypothesis_ok` is false when the optimal ribbon point leaves `w >= 0`.
pub fn lb_oneway_delta(tau: f64, delta: f64, epsilon: f64) -> Result<Bound> {
    lb_ddim(1, tau, delta, epsilon, BoundSide::Delta)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundSide {
    Epsilon,
    Delta,
}

/// d-dimensional one-way bounds; `tau^2` becomes `tau^2/d` inside the radical
/// and the prefactor is `d/tau^2`.
pub fn lb_ddim(d: usize, tau: f64, delta: f64, epsilon: f64, side: BoundSide) -> Result<Bound> {
    check_bound_args(tau, delta, epsilon)?;
    if d == 0 {
        return Err(invalid("d must be >= 1"));
    }
    let df = d as f64;
    let scale = df / (tau * tau);
    let shrink = 1.0 - tau * tau / df;
    match side {
        BoundSide::Epsilon => {
            if epsilon == 0.0 {
                return Err(invalid("epsilon must be positive for the epsilon-side bound"));
            }
            let lead = (1.0 / epsilon).log2();
            let penalty = shrink * (1.0 / (1.0 - delta)).log2();
            Ok(radical_gap(scale, lead, penalty, eps_bound_hypothesis(tau, delta, epsilon)))
        }
        BoundSide::Delta => {
            if delta == 0.0 {
                return Err(invalid("delta must be positive for the delta-side bound"));
            }
            let miss = (1.0 / (1.0 - epsilon)).log2();
            let alarm = (1.0 / delta).log2();
            // The optimising ribbon parameter is >= 0 iff shrink * miss <= alarm.
            let gap = miss.sqrt() - (shrink * alarm).sqrt();
            Ok(Bound { bits: scale * gap * gap, hypothesis_ok: shrink * miss <= alarm, clamped: false })
        }
    }
}

/// Bound for any number of rounds: `(d/tau^2)((1-delta) log 1/eps - 1)`, clamped at 0.
pub fn lb_interactive(d: usize, tau: f64, delta: f64, epsilon: f64) -> Result<Bound> {
    check_bound_args(tau, delta, epsilon)?;
    if d == 0 {
        return Err(invalid("d must be >= 1"));
    }
    if epsilon == 0.0 {
        return Err(invalid("epsilon must be positive"));
    }
    let raw = d as f64 / (tau * tau) * ((1.0 - delta) * (1.0 / epsilon).log2() - 1.0);
    Ok(if raw < 0.0 {
        Bound { bits: 0.0, hypothesis_ok: true, clamped: true }
    } else {
        Bound { bits: raw, hypothesis_ok: true, clamped: false }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum EstimationRegime {
    /// `d >= 12`: `d^2 / (768 tau^2)`.
    Quoted,
    /// `d < 12`: the `d / tau^2` testing-order bound, with the constant that
    /// makes it agree with the quoted form at `d = 12`.
    TestingOrder,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EstimationBound {
    pub bits: f64,
    pub regime: EstimationRegime,
}

/// Communication needed to estimate `rho` to mean squared error `tau^2`.
pub fn lb_estimation(d: usize, tau: f64) -> Result<EstimationBound> {
    check_tau(tau)?;
    if d == 0 {
        return Err(invalid("d must be >= 1"));
    }
    let df = d as f64;
    Ok(if d >= 12 {
        EstimationBound { bits: df * df / (768.0 * tau * tau), regime: EstimationRegime::Quoted }
    } else {
        EstimationBound { bits: df / (64.0 * tau * tau), regime: EstimationRegime::TestingOrder }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RibbonKind {
    /// `1 <= q <= p`, member iff `(q-1)/(p-1) >= rho^2`.
    Hyper,
    /// `p <= q <= 1`, member iff `(1-q)/(1-p) >= rho^2`.
    Reverse,
}

/// Hypercontractivity ribbon membership of `(p, q)` for a bivariate Gaussian pair
/// with correlation `rho`.
///
/// The comparison is made in product form with a few ulps of slack, so
/// points built as `p = 1 + w`, `q = 1 + rho^2 w` are recognised as lying on
/// the boundary.
pub fn ribbon_check(p: f64, q: f64, rho: f64, kind: RibbonKind) -> Result<bool> {
    if !(p.is_finite() && q.is_finite() && rho.is_finite()) || rho.abs() > 1.0 {
        return Err(invalid(format!("bad ribbon arguments p={p} q={q} rho={rho}")));
    }
    let (num, den) = match kind {
        RibbonKind::Hyper => {
            if !(1.0 <= q && q <= p) {
                return Err(invalid(format!("hypercontractive pair needs 1 <= q <= p, got p={p} q={q}")));
            }
            (q - 1.0, p - 1.0)
        }
        RibbonKind::Reverse => {
            if !(p <= q && q <= 1.0) {
                return Err(invalid(format!("reverse pair needs p <= q <= 1, got p={p} q={q}")));
            }
            (1.0 - q, 1.0 - p)
        }
    };
    if den == 0.0 {
        // p = q = 1: the ratio is 1 in the limit.
        return Ok(rho * rho <= 1.0);
    }
    let slack = 4.0 * f64::EPSILON * p.abs().max(q.abs()).max(1.0);
    Ok(num >= rho * rho * den - slack)
}
