//! One-way test protocols: P1 sees `x`, sends one message, P2 sees `y` and decides.
//!
//! P1 and P2 only meet through [`Message`] values and the shared [`Codebook`].

use serde::Serialize;

use crate::codebook::{Codebook, ScanCap};
use crate::error::{invalid, Error, Result};
use crate::model::SampleBlock;
use crate::params::{BoostPlan, DerivedParams};
use crate::rng::{derive_seed, CounterRng, Purpose};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Payload {
    /// 1-based codebook column.
    Index(u64),
    /// No column crossed P1's threshold.
    Sentinel,
}

/// How a message over `2^k` indices plus the sentinel is charged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum BitAccounting {
    /// `k` bits, the sentinel rides along for free.
    #[default]
    Nominal,
    /// `ceil(log2(2^k + 1)) = k + 1` bits.
    Strict,
}

impl BitAccounting {
    pub fn cost(self, k: u32) -> u32 {
        match self {
            BitAccounting::Nominal => k,
            BitAccounting::Strict => k + 1,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Message {
    pub payload: Payload,
    pub bit_cost: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Verdict {
    DeclareCorrelated,
    DeclareNull,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub struct BitLedger {
    pub total_bits: u64,
    pub messages: u64,
}

impl BitLedger {
    pub fn record(&mut self, msg: &Message) {
        self.total_bits += msg.bit_cost as u64;
        self.messages += 1;
    }

    pub fn merge(&mut self, other: &BitLedger) {
        self.total_bits += other.total_bits;
        self.messages += other.messages;
    }
}

fn threshold(r: f64, n: usize) -> f64 {
    r * (n as f64).sqrt()
}

/// P1: least column with `U_j . x >= r sqrt(n)`, or the sentinel.
pub fn p1_encode_one_sided(x: &[f64], book: &Codebook, r: f64, accounting: BitAccounting) -> Result<Message> {
    let payload = match book.find_first_hit(x, threshold(r, book.n()))? {
        Some(j) => Payload::Index(j),
        None => Payload::Sentinel,
    };
    Ok(Message { payload, bit_cost: accounting.cost(book.k()) })
}

/// P2: correlated iff the message names a column with `U_j . y >= theta r sqrt(n)`.
pub fn p2_decide_one_sided(y: &[f64], msg: &Message, book: &Codebook, theta: f64, r: f64) -> Result<Verdict> {
    match msg.payload {
        Payload::Sentinel => Ok(Verdict::DeclareNull),
        Payload::Index(j) => {
            if book.column_dot(j, y)? >= theta * threshold(r, book.n()) {
                Ok(Verdict::DeclareCorrelated)
            } else {
                Ok(Verdict::DeclareNull)
            }
        }
    }
}

/// P2 for the two-sided test: accept if the one-sided rule accepts `y` or `-y`.
pub fn p2_decide_two_sided(y: &[f64], msg: &Message, book: &Codebook, theta: f64, r: f64) -> Result<Verdict> {
    match msg.payload {
        Payload::Sentinel => Ok(Verdict::DeclareNull),
        Payload::Index(j) => {
            // U_j . (-y) = -(U_j . y) exactly, so one dot product serves both sides.
            let dot = book.column_dot(j, y)?;
            let bar = theta * threshold(r, book.n());
            if dot >= bar || -dot >= bar {
                Ok(Verdict::DeclareCorrelated)
            } else {
                Ok(Verdict::DeclareNull)
            }
        }
    }
}

fn check_pair_len(x: &[f64], y: &[f64]) -> Result<()> {
    if x.len() != y.len() {
        return Err(Error::Shape(format!("x has {} samples, y has {}", x.len(), y.len())));
    }
    Ok(())
}

fn check_book(book: &Codebook, params: &DerivedParams) -> Result<()> {
    if book.k() != params.k {
        return Err(invalid(format!("codebook has k = {}, parameters need {}", book.k(), params.k)));
    }
    Ok(())
}

/// One-sided test `rho >= tau` vs `rho = 0`.
pub fn run_one_sided(
    x: &[f64],
    y: &[f64],
    book: &Codebook,
    params: &DerivedParams,
    accounting: BitAccounting,
) -> Result<(Verdict, BitLedger)> {
    check_pair_len(x, y)?;
    check_book(book, params)?;
    let msg = p1_encode_one_sided(x, book, params.r, accounting)?;
    let mut ledger = BitLedger::default();
    ledger.record(&msg);
    Ok((p2_decide_one_sided(y, &msg, book, params.theta, params.r)?, ledger))
}

/// Two-sided test `|rho| >= tau` vs `rho = 0`; `params` should come from
/// `two_sided_params`.
pub fn run_two_sided(
    x: &[f64],
    y: &[f64],
    book: &Codebook,
    params: &DerivedParams,
    accounting: BitAccounting,
) -> Result<(Verdict, BitLedger)> {
    check_pair_len(x, y)?;
    check_book(book, params)?;
    let msg = p1_encode_one_sided(x, book, params.r, accounting)?;
    let mut ledger = BitLedger::default();
    ledger.record(&msg);
    Ok((p2_decide_two_sided(y, &msg, book, params.theta, params.r)?, ledger))
}

/// `rho = rho0` (reported as `DeclareCorrelated`) vs `rho = rho1` (`DeclareNull`)
/// with parameters from `binary_params`.
pub fn run_binary(
    x: &[f64],
    y: &[f64],
    book: &Codebook,
    params: &DerivedParams,
    accounting: BitAccounting,
) -> Result<(Verdict, BitLedger)> {
    run_one_sided(x, y, book, params, accounting)
}

/// Shared direction `R = W / sqrt(d)` with Rademacher `W`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProjectionState {
    r_vec: Vec<f64>,
    seed: u64,
}

impl ProjectionState {
    /// Entry `i` is `-1/sqrt(d)` iff bit `i mod 64` of word `i / 64` of the stream is set.
    pub fn draw(d: usize, seed: u64) -> Result<Self> {
        if d == 0 {
            return Err(invalid("projection needs d >= 1"));
        }
        let s = 1.0 / (d as f64).sqrt();
        let r_vec = (0..d)
            .map(|i| {
                if (CounterRng::word_at(seed, (i / 64) as u64) >> (i % 64)) & 1 == 1 {
                    -s
                } else {
                    s
                }
            })
            .collect();
        Ok(ProjectionState { r_vec, seed })
    }

    pub fn from_vec(r_vec: Vec<f64>) -> Result<Self> {
        if r_vec.is_empty() {
            return Err(invalid("projection needs d >= 1"));
        }
        let s = 1.0 / (r_vec.len() as f64).sqrt();
        if r_vec.iter().any(|&v| v != s && v != -s) {
            return Err(invalid("projection entries must be +-1/sqrt(d)"));
        }
        Ok(ProjectionState { r_vec, seed: 0 })
    }

    pub fn r_vec(&self) -> &[f64] {
        &self.r_vec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }
}

/// `x~_t = R . x_t` for every row.
pub fn project_ddim(block: &SampleBlock, proj: &ProjectionState) -> Result<Vec<f64>> {
    if block.d() != proj.r_vec.len() {
        return Err(Error::Shape(format!(
            "block has d = {}, projection has d = {}",
            block.d(),
            proj.r_vec.len()
        )));
    }
    Ok((0..block.n())
        .map(|t| block.row(t).iter().zip(&proj.r_vec).map(|(x, r)| x * r).sum())
        .collect())
}

/// Per-trial knobs of the projected test that are not parameters of the inner test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdimRun {
    pub master_seed: u64,
    pub trial: u64,
    pub accounting: BitAccounting,
    pub scan_cap: ScanCap,
}

/// One projected repetition: fresh projection and codebook from
/// `(master_seed, trial, repetition)`, then the two-sided inner test.
pub fn ddim_repetition(
    block: &SampleBlock,
    inner: &DerivedParams,
    run: &DdimRun,
    repetition: u64,
) -> Result<(Verdict, BitLedger)> {
    let proj = ProjectionState::draw(
        block.d(),
        derive_seed(run.master_seed, Purpose::Projection, run.trial, repetition),
    )?;
    let book = Codebook::with_scan_cap(
        derive_seed(run.master_seed, Purpose::Codebook, run.trial, repetition),
        block.n(),
        inner.k,
        run.scan_cap,
    )?;
    let x = project_ddim(block, &proj)?;
    run_two_sided(&x, block.ys(), &book, inner, run.accounting)
}

/// Outcome of the boosted test, with the vote count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DdimOutcome {
    pub verdict: Verdict,
    pub ledger: BitLedger,
    pub null_votes: u64,
}

/// Null iff more than `m t` of the `m` repetitions declare null.
pub fn median_vote(null_votes: u64, plan: &BoostPlan) -> Verdict {
    if null_votes as f64 > plan.m as f64 * plan.t {
        Verdict::DeclareNull
    } else {
        Verdict::DeclareCorrelated
    }
}

/// d-dimensional test: `plan.m` projected repetitions, each on its own block.
pub fn run_ddim(blocks: &[SampleBlock], inner: &DerivedParams, plan: &BoostPlan, run: &DdimRun) -> Result<DdimOutcome> {
    plan.validate()?;
    let m = plan.m as usize;
    if blocks.len() < m {
        return Err(Error::InsufficientSamples(format!(
            "{} sample blocks supplied, plan needs m = {m}",
            blocks.len()
        )));
    }
    let d = blocks[0].d();
    if blocks[..m].iter().any(|b| b.d() != d) {
        return Err(Error::Shape("sample blocks disagree on d".into()));
    }
    let mut ledger = BitLedger::default();
    let mut null_votes = 0;
    for (i, block) in blocks[..m].iter().enumerate() {
        let (v, l) = ddim_repetition(block, inner, run, i as u64)?;
        ledger.merge(&l);
        if v == Verdict::DeclareNull {
            null_votes += 1;
        }
    }
    Ok(DdimOutcome { verdict: median_vote(null_votes, plan), ledger, null_votes })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{sample_block, CorrelationVector, SourceKind};
    use crate::numerics::q_tail;
    use crate::params::DerivedParams;

    fn gauss(n: usize, rho: f64, seed: u64) -> SampleBlock {
        sample_block(&CorrelationVector::new(vec![rho]).unwrap(), n, SourceKind::Gaussian, seed).unwrap()
    }

    #[test]
    fn sentinel_when_threshold_unreachable() {
        let book = Codebook::new(1, 16, 4).unwrap();
        let x = vec![0.01; 16];
        let msg = p1_encode_one_sided(&x, &book, 1.0, BitAccounting::Nominal).unwrap();
        assert_eq!(msg.payload, Payload::Sentinel);
        assert_eq!(msg.bit_cost, 4);
        assert_eq!(
            p2_decide_one_sided(&x, &msg, &book, 0.5, 1.0).unwrap(),
            Verdict::DeclareNull
        );
        let strict = p1_encode_one_sided(&x, &book, 1.0, BitAccounting::Strict).unwrap();
        assert_eq!(strict.bit_cost, 5);
    }

    #[test]
    fn minus_infinity_threshold_sends_first_column() {
        let book = Codebook::new(1, 16, 6).unwrap();
        let msg = p1_encode_one_sided(&[0.3; 16], &book, f64::NEG_INFINITY, BitAccounting::Nominal).unwrap();
        assert_eq!(msg.payload, Payload::Index(1));
    }

    #[test]
    fn column_itself_is_accepted() {
        let book = Codebook::new(4, 32, 5).unwrap();
        let y = book.column(7).unwrap();
        let msg = Message { payload: Payload::Index(7), bit_cost: 5 };
        // theta r sqrt(n) = 0.5 * 2 * sqrt(32) <= 32
        assert_eq!(
            p2_decide_one_sided(&y, &msg, &book, 0.5, 2.0).unwrap(),
            Verdict::DeclareCorrelated
        );
    }

    #[test]
    fn two_sided_ignores_sign_of_y() {
        let p = DerivedParams::explicit(1.2, 0.5, 6).unwrap();
        for seed in 0..40 {
            let b = gauss(64, 0.6, seed);
            let book = Codebook::new(seed, 64, 6).unwrap();
            let neg: Vec<f64> = b.ys().iter().map(|v| -v).collect();
            let x = b.column(0);
            let a = run_two_sided(&x, b.ys(), &book, &p, BitAccounting::Nominal).unwrap();
            let c = run_two_sided(&x, &neg, &book, &p, BitAccounting::Nominal).unwrap();
            assert_eq!(a, c);
            assert_eq!(a.1.total_bits, 6);
        }
    }

    #[test]
    fn message_ignores_y() {
        let book = Codebook::new(2, 50, 8).unwrap();
        let b = gauss(50, 0.5, 3);
        let x = b.column(0);
        let m1 = p1_encode_one_sided(&x, &book, 1.0, BitAccounting::Nominal).unwrap();
        let p = DerivedParams::explicit(1.0, 0.5, 8).unwrap();
        let mut y = b.ys().to_vec();
        let before = run_one_sided(&x, &y, &book, &p, BitAccounting::Nominal).unwrap();
        for v in y.iter_mut() {
            *v = -3.0 * *v + 1.0;
        }
        let after = run_one_sided(&x, &y, &book, &p, BitAccounting::Nominal).unwrap();
        let m2 = p1_encode_one_sided(&x, &book, 1.0, BitAccounting::Nominal).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(before.1, after.1);
    }

    #[test]
    fn projection_examples() {
        let b = SampleBlock::from_parts(vec![1.0; 12], vec![0.0; 3], 4).unwrap();
        let p = ProjectionState::from_vec(vec![0.5; 4]).unwrap();
        assert_eq!(project_ddim(&b, &p).unwrap(), vec![2.0; 3]);

        let b = gauss(10, 0.3, 1);
        let p = ProjectionState::draw(1, 5).unwrap();
        let s = p.r_vec()[0];
        assert!(s == 1.0 || s == -1.0);
        let proj = project_ddim(&b, &p).unwrap();
        for (t, v) in proj.iter().enumerate() {
            assert_eq!(*v, s * b.row(t)[0]);
        }
        assert!(ProjectionState::from_vec(vec![0.5, 0.5]).is_err());
    }

    #[test]
    fn single_repetition_is_inner_verdict() {
        let inner = DerivedParams::explicit(1.5, 0.4, 5).unwrap();
        let plan = BoostPlan::with_repetitions(0.3, 0.1, 1).unwrap();
        let rho = CorrelationVector::new(vec![0.5, 0.5]).unwrap();
        let run = DdimRun { master_seed: 9, trial: 2, accounting: BitAccounting::Nominal, scan_cap: ScanCap::Full };
        for s in 0..20 {
            let block = sample_block(&rho, 128, SourceKind::Gaussian, s).unwrap();
            let out = run_ddim(std::slice::from_ref(&block), &inner, &plan, &run).unwrap();
            let (v, _) = ddim_repetition(&block, &inner, &run, 0).unwrap();
            assert_eq!(out.verdict, v);
            assert_eq!(out.ledger.total_bits, 5);
        }
    }

    #[test]
    fn insufficient_blocks() {
        let inner = DerivedParams::explicit(1.5, 0.4, 5).unwrap();
        let plan = BoostPlan::with_repetitions(0.3, 0.1, 3).unwrap();
        let block = gauss(16, 0.0, 0);
        let run = DdimRun { master_seed: 0, trial: 0, accounting: BitAccounting::Nominal, scan_cap: ScanCap::Full };
        let err = run_ddim(&[block.clone(), block], &inner, &plan, &run).unwrap_err();
        assert!(matches!(err, Error::InsufficientSamples(_)));
    }

    #[test]
    fn null_acceptance_obeys_tail_bound_at_small_n() {
        // P(accept | rho = 0) <= 2^k Q(r) Q(theta r), one-sided, n = 8.
        let p = DerivedParams::explicit(2.0, 0.6, 5).unwrap();
        let bound = 32.0 * q_tail(2.0).unwrap().value() * q_tail(1.2).unwrap().value();
        let trials = 20_000;
        let mut accepted = 0u32;
        for t in 0..trials {
            let b = gauss(8, 0.0, 1000 + t);
            let book = Codebook::new(t, 8, 5).unwrap();
            let (v, _) = run_one_sided(&b.column(0), b.ys(), &book, &p, BitAccounting::Nominal).unwrap();
            if v == Verdict::DeclareCorrelated {
                accepted += 1;
            }
        }
        let rate = accepted as f64 / trials as f64;
        let sigma = (bound * (1.0 - bound) / trials as f64).sqrt();
        assert!(rate <= bound + 3.0 * sigma, "rate {rate} bound {bound}");
    }
}
