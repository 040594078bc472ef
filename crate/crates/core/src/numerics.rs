//! Standard normal upper tail `Q(x) = P(N(0,1) >= x)` and its base-2 logarithm.
//!
//! `Q` is evaluated as `erfc(x / sqrt 2) / 2`. The `erfc` kernel is the
//! FreeBSD `s_erf.c` rational approximation (Sun Microsystems, 1993), whose
//! documented error is below one ulp over the whole real line.
//!
//! `log2_q_tail` switches to the asymptotic expansion of `ln Q` above
//! [`LOG_TAIL_SWITCH`], where `Q` itself starts to lose the low-order bits
//! and eventually underflows.

// Coefficients are kept digit-for-digit as published.
#![allow(clippy::excessive_precision)]

use crate::error::{invalid, Result};

/// Above this argument `log2_q_tail` uses the asymptotic series.
pub const LOG_TAIL_SWITCH: f64 = 8.0;

const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

/// A probability produced by the tail function. Always in `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct TailProb(f64);

impl TailProb {
    pub fn value(self) -> f64 {
        self.0
    }
}

impl From<TailProb> for f64 {
    fn from(p: TailProb) -> f64 {
        p.0
    }
}

/// Upper tail of the standard normal distribution.
pub fn q_tail(x: f64) -> Result<TailProb> {
    if !x.is_finite() {
        return Err(invalid(format!("q_tail argument must be finite, got {x}")));
    }
    Ok(TailProb(q_tail_unchecked(x)))
}

pub(crate) fn q_tail_unchecked(x: f64) -> f64 {
    (0.5 * erfc(x * std::f64::consts::FRAC_1_SQRT_2)).clamp(0.0, 1.0)
}

/// `log2 Q(x)`, accurate far into the tail where `Q(x)` underflows.
pub fn log2_q_tail(x: f64) -> Result<f64> {
    if !x.is_finite() {
        return Err(invalid(format!("log2_q_tail argument must be finite, got {x}")));
    }
    Ok(log2_q_tail_unchecked(x))
}

pub(crate) fn log2_q_tail_unchecked(x: f64) -> f64 {
    if x == 0.0 {
        return -1.0;
    }
    if x <= LOG_TAIL_SWITCH {
        return q_tail_unchecked(x).log2();
    }
    ln_q_asymptotic(x) / std::f64::consts::LN_2
}

/// `ln Q(x) = -x^2/2 - ln(x sqrt(2 pi)) + ln(1 - 1/x^2 + 3/x^4 - 15/x^6 + ...)`.
///
/// The divergent series is cut at its smallest term; for `x >= 8` that term is
/// far below `1e-13`.
fn ln_q_asymptotic(x: f64) -> f64 {
    let inv_x2 = 1.0 / (x * x);
    let mut term = 1.0;
    let mut correction = 0.0; // series minus its leading 1
    let mut k = 1.0;
    loop {
        let next = -term * (2.0 * k - 1.0) * inv_x2;
        if next.abs() >= term.abs() || next.abs() < 1e-18 {
            break;
        }
        correction += next;
        term = next;
        k += 1.0;
    }
    -0.5 * x * x - x.ln() - LN_SQRT_2PI + correction.ln_1p()
}

const ERX: f64 = 8.45062911510467529297e-01;
// erf on [0, 0.84375]
const PP0: f64 = 1.28379167095512558561e-01;
const PP1: f64 = -3.25042107247001499370e-01;
const PP2: f64 = -2.84817495755985104766e-02;
const PP3: f64 = -5.77027029648944159157e-03;
const PP4: f64 = -2.37630166566501626084e-05;
const QQ1: f64 = 3.97917223959155352819e-01;
const QQ2: f64 = 6.50222499887672944485e-02;
const QQ3: f64 = 5.08130628187576562776e-03;
const QQ4: f64 = 1.32494738004321644526e-04;
const QQ5: f64 = -3.96022827877536812320e-06;
// erf on [0.84375, 1.25]
const PA0: f64 = -2.36211856075265944077e-03;
const PA1: f64 = 4.14856118683748331666e-01;
const PA2: f64 = -3.72207876035701323847e-01;
const PA3: f64 = 3.18346619901161753674e-01;
const PA4: f64 = -1.10894694282396677476e-01;
const PA5: f64 = 3.54783043256182359371e-02;
const PA6: f64 = -2.16637559486879084300e-03;
const QA1: f64 = 1.06420880400844228286e-01;
const QA2: f64 = 5.40397917702171048937e-01;
const QA3: f64 = 7.18286544141962662868e-02;
const QA4: f64 = 1.26171219808761642112e-01;
const QA5: f64 = 1.36370839120290507362e-02;
const QA6: f64 = 1.19844998467991074170e-02;
// erfc on [1.25, 1/0.35]
const RA0: f64 = -9.86494403484714822705e-03;
const RA1: f64 = -6.93858572707181764372e-01;
const RA2: f64 = -1.05586262253232909814e+01;
const RA3: f64 = -6.23753324503260060396e+01;
const RA4: f64 = -1.62396669462573470355e+02;
const RA5: f64 = -1.84605092906711035994e+02;
const RA6: f64 = -8.12874355063065934246e+01;
const RA7: f64 = -9.81432934416914548592e+00;
const SA1: f64 = 1.96512716674392571292e+01;
const SA2: f64 = 1.37657754143519042600e+02;
const SA3: f64 = 4.34565877475229228821e+02;
const SA4: f64 = 6.45387271733267880336e+02;
const SA5: f64 = 4.29008140027567833386e+02;
const SA6: f64 = 1.08635005541779435134e+02;
const SA7: f64 = 6.57024977031928170135e+00;
const SA8: f64 = -6.04244152148580987438e-02;
// erfc on [1/0.35, 28]
const RB0: f64 = -9.86494292470009928597e-03;
const RB1: f64 = -7.99283237680523006574e-01;
const RB2: f64 = -1.77579549177547519889e+01;
const RB3: f64 = -1.60636384855821916062e+02;
const RB4: f64 = -6.37566443368389627722e+02;
const RB5: f64 = -1.02509513161107724954e+03;
const RB6: f64 = -4.83519191608651397019e+02;
const SB1: f64 = 3.03380607434824582924e+01;
const SB2: f64 = 3.25792512996573918826e+02;
const SB3: f64 = 1.53672958608443695994e+03;
const SB4: f64 = 3.19985821950859553908e+03;
const SB5: f64 = 2.55305040643316442583e+03;
const SB6: f64 = 4.74528541206955367215e+02;
const SB7: f64 = -2.24409524465858183362e+01;

/// Complementary error function.
pub(crate) fn erfc(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    let negative = x < 0.0;
    let ax = x.abs();

    if ax < 0.84375 {
        let poly = if ax < 1.387_778_780_781_445_7e-17 {
            ax
        } else {
            let z = ax * ax;
            let r = PP0 + z * (PP1 + z * (PP2 + z * (PP3 + z * PP4)));
            let s = 1.0 + z * (QQ1 + z * (QQ2 + z * (QQ3 + z * (QQ4 + z * QQ5))));
            let y = r / s;
            if ax < 0.25 {
                ax + ax * y
            } else {
                0.5 + (ax * y + (ax - 0.5))
            }
        };
        return if negative { 1.0 + poly } else { 1.0 - poly };
    }

    if ax < 1.25 {
        let s = ax - 1.0;
        let p = PA0 + s * (PA1 + s * (PA2 + s * (PA3 + s * (PA4 + s * (PA5 + s * PA6)))));
        let q = 1.0 + s * (QA1 + s * (QA2 + s * (QA3 + s * (QA4 + s * (QA5 + s * QA6)))));
        return if negative { 1.0 + ERX + p / q } else { 1.0 - ERX - p / q };
    }

    if ax >= 28.0 {
        return if negative { 2.0 } else { 0.0 };
    }
    if negative && ax > 6.0 {
        return 2.0;
    }

    let s = 1.0 / (ax * ax);
    let (r, big_s) = if ax < 1.0 / 0.35 {
        (
            RA0 + s * (RA1 + s * (RA2 + s * (RA3 + s * (RA4 + s * (RA5 + s * (RA6 + s * RA7)))))),
            1.0 + s
                * (SA1
                    + s * (SA2 + s * (SA3 + s * (SA4 + s * (SA5 + s * (SA6 + s * (SA7 + s * SA8))))))),
        )
    } else {
        (
            RB0 + s * (RB1 + s * (RB2 + s * (RB3 + s * (RB4 + s * (RB5 + s * RB6))))),
            1.0 + s * (SB1 + s * (SB2 + s * (SB3 + s * (SB4 + s * (SB5 + s * (SB6 + s * SB7)))))),
        )
    };
    // z keeps the high 32 bits of ax so that z*z is exact.
    let z = f64::from_bits(ax.to_bits() & 0xffff_ffff_0000_0000);
    let tail = (-z * z - 0.5625).exp() * ((z - ax) * (z + ax) + r / big_s).exp() / ax;
    if negative {
        2.0 - tail
    } else {
        tail
    }
}
