//! Minimum-distance objectives evaluated on order statistics.
//!
//! With `F_i = F(x_(i))` the model cdf at the i-th order statistic:
//!
//! * least squares: `sum (F_i - i/(n+1))^2`
//! * weighted least squares: `sum w_i (F_i - i/(n+1))^2`, `w_i = (n+1)^2 (n+2) / (i (n-i+1))`
//! * Cramér–von Mises: `1/(12n) + sum (F_i - (2i-1)/(2n))^2`
//! * Anderson–Darling: `-n - (1/n) sum (2i-1) [ln F_i + ln(1 - F_(n+1-i))]`
//!
//! Gradients are taken with respect to `(lambda, alpha)` for TLE and
//! `(lambda, alpha, q)` for TLqE.
//!
//! Every cdf is written as `F = u^alpha` with `u = 1 - S`, where `S` is the
//! squared parent survival: `S = exp(-2 lambda x)` for TLE and
//! `S = psi^k`, `psi = 1 - (1-q) lambda x`, `k = 2(2-q)/(1-q)` for TLqE.
//! Then
//!
//! ```text
//! dF/dalpha = F ln u
//! dF/dtheta = alpha F d(ln u)/dtheta,   d(ln u)/dtheta = -(S/u) d(ln S)/dtheta
//! d(ln S)/dlambda = -2x                                   (TLE)
//! d(ln S)/dlambda = -2(2-q) x / psi                       (TLqE)
//! d(ln S)/dq      = 2 ln(psi)/(1-q)^2 + k lambda x / psi  (TLqE)
//! ```
//!
//! and at `q = 1` the last line has the limit `2 lambda x + (lambda x)^2`.

use serde::{Deserialize, Serialize};

use crate::distributions::{ln_one_minus_exp, DistParams, TlqeParams};
use crate::sample::SortedSample;

/// `ln` of the smallest positive normal double; Anderson–Darling log terms are
/// clamped here.
pub const LN_FLOOR: f64 = -708.396_418_532_264_1;

/// The four minimum-distance criteria.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ObjectiveKind {
    Ls,
    Wls,
    Cvm,
    Ad,
}

impl ObjectiveKind {
    pub const ALL: [ObjectiveKind; 4] = [
        ObjectiveKind::Ls,
        ObjectiveKind::Wls,
        ObjectiveKind::Cvm,
        ObjectiveKind::Ad,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ObjectiveKind::Ls => "ls",
            ObjectiveKind::Wls => "wls",
            ObjectiveKind::Cvm => "cvm",
            ObjectiveKind::Ad => "ad",
        }
    }
}

/// Objective value with its gradient. Infeasible points carry `+inf` and no
/// gradient.
#[derive(Debug, Clone, PartialEq)]
pub struct ObjectiveValue {
    pub value: f64,
    pub gradient: Option<Vec<f64>>,
    pub feasible: bool,
}

impl ObjectiveValue {
    fn infeasible() -> Self {
        ObjectiveValue {
            value: f64::INFINITY,
            gradient: None,
            feasible: false,
        }
    }
}

/// Per-parameter-set constants for the squared parent survival.
enum Kernel {
    Exponential {
        lambda: f64,
    },
    QExponential {
        lambda: f64,
        q: f64,
        t: f64,
        k: f64,
    },
}

/// `ln S` and its partials for one observation.
struct LogSurvival {
    ln_s: f64,
    d_lambda: f64,
    d_q: f64,
}

impl Kernel {
    fn new(p: &DistParams) -> Self {
        match p {
            DistParams::Tle(p) => Kernel::Exponential { lambda: p.lambda() },
            DistParams::Tlqe(p) => Self::for_tlqe(p),
        }
    }

    fn for_tlqe(p: &TlqeParams) -> Self {
        if p.is_exponential_limit() {
            // q is kept so the q-partial can use its limit form
            return Kernel::QExponential {
                lambda: p.lambda(),
                q: 1.0,
                t: 0.0,
                k: f64::INFINITY,
            };
        }
        let t = 1.0 - p.q();
        Kernel::QExponential {
            lambda: p.lambda(),
            q: p.q(),
            t,
            k: 2.0 * (2.0 - p.q()) / t,
        }
    }

    #[inline]
    fn eval(&self, x: f64) -> LogSurvival {
        match *self {
            Kernel::Exponential { lambda } => LogSurvival {
                ln_s: -2.0 * lambda * x,
                d_lambda: -2.0 * x,
                d_q: 0.0,
            },
            Kernel::QExponential { lambda, t: 0.0, .. } => {
                let y = lambda * x;
                LogSurvival {
                    ln_s: -2.0 * y,
                    d_lambda: -2.0 * x,
                    d_q: 2.0 * y + y * y,
                }
            }
            Kernel::QExponential { lambda, q, t, k } => {
                let y = lambda * x;
                let ln_psi = (-t * y).ln_1p();
                let psi = 1.0 - t * y;
                LogSurvival {
                    ln_s: k * ln_psi,
                    d_lambda: -2.0 * (2.0 - q) * x / psi,
                    d_q: 2.0 * ln_psi / (t * t) + k * y / psi,
                }
            }
        }
    }
}

/// Model cdf at one order statistic with the log-space pieces the objectives need.
struct CdfPoint {
    f: f64,
    ln_f: f64,
    /// d(ln F)/d(lambda, alpha, q)
    dln_f: [f64; 3],
    ln_s: f64,
    /// d(ln S)/d(lambda, q)
    dln_s: [f64; 2],
}

/// Below this `ln(alpha S)`, `ln(1 - F)` is taken as `ln alpha + ln S`; the
/// neglected terms are `O(alpha S)`, far below rounding.
const TAIL_SWITCH: f64 = -40.0;

#[inline]
fn cdf_point<const GRAD: bool>(kernel: &Kernel, alpha: f64, x: f64) -> CdfPoint {
    let ls = kernel.eval(x);
    if ls.ln_s >= 0.0 {
        return CdfPoint {
            f: 0.0,
            ln_f: f64::NEG_INFINITY,
            dln_f: [0.0; 3],
            ln_s: 0.0,
            dln_s: [0.0; 2],
        };
    }
    let ln_u = ln_one_minus_exp(ls.ln_s);
    let ln_f = alpha * ln_u;
    let f = ln_f.exp();
    let dln_f = if GRAD {
        let ratio = (ls.ln_s - ln_u).exp();
        [
            -alpha * ratio * ls.d_lambda,
            ln_u,
            -alpha * ratio * ls.d_q,
        ]
    } else {
        [0.0; 3]
    };
    CdfPoint {
        f,
        ln_f,
        dln_f,
        ln_s: ls.ln_s,
        dln_s: [ls.d_lambda, ls.d_q],
    }
}

/// `ln(1 - F)` and its partials, kept finite when `1 - F` is below the
/// smallest double but its logarithm is not.
#[inline]
fn upper_tail<const GRAD: bool>(pt: &CdfPoint, alpha: f64) -> (f64, [f64; 3]) {
    let ln_alpha = alpha.ln();
    if ln_alpha + pt.ln_s < TAIL_SWITCH {
        let d = if GRAD {
            [pt.dln_s[0], 1.0 / alpha, pt.dln_s[1]]
        } else {
            [0.0; 3]
        };
        return (ln_alpha + pt.ln_s, d);
    }
    let ln_1mf = ln_one_minus_exp(pt.ln_f);
    let d = if GRAD {
        // d ln(1-F) = -(F/(1-F)) d ln F
        let odds = (pt.ln_f - ln_1mf).exp();
        [-odds * pt.dln_f[0], -odds * pt.dln_f[1], -odds * pt.dln_f[2]]
    } else {
        [0.0; 3]
    };
    (ln_1mf, d)
}

fn is_feasible(sample: &SortedSample, p: &DistParams) -> bool {
    match p {
        DistParams::Tle(_) => true,
        DistParams::Tlqe(p) => {
            p.is_exponential_limit()
                || p.q() >= 1.0
                || (1.0 - p.q()) * p.lambda() * sample.max() < 1.0
        }
    }
}

/// Weighted-least-squares weight for order statistic `i` (1-based) of `n`.
#[inline]
pub fn wls_weight(i: usize, n: usize) -> f64 {
    let n1 = (n + 1) as f64;
    n1 * n1 * (n + 2) as f64 / (i as f64 * (n - i + 1) as f64)
}

fn evaluate_impl<const GRAD: bool>(
    kind: ObjectiveKind,
    sample: &SortedSample,
    p: &DistParams,
) -> ObjectiveValue {
    if !is_feasible(sample, p) {
        return ObjectiveValue::infeasible();
    }
    let kernel = Kernel::new(p);
    let alpha = p.alpha();
    let dim = p.kind().dimension();
    let xs = sample.values();
    let n = xs.len();
    let nf = n as f64;
    let mut value = 0.0;
    let mut grad = [0.0; 3];

    match kind {
        ObjectiveKind::Ls | ObjectiveKind::Wls | ObjectiveKind::Cvm => {
            for (idx, &x) in xs.iter().enumerate() {
                let i = idx + 1;
                let (target, weight) = match kind {
                    ObjectiveKind::Ls => (i as f64 / (nf + 1.0), 1.0),
                    ObjectiveKind::Wls => (i as f64 / (nf + 1.0), wls_weight(i, n)),
                    _ => ((2 * i - 1) as f64 / (2.0 * nf), 1.0),
                };
                let pt = cdf_point::<GRAD>(&kernel, alpha, x);
                let resid = pt.f - target;
                value += weight * resid * resid;
                if GRAD {
                    let c = 2.0 * weight * resid * pt.f;
                    for (g, d) in grad.iter_mut().zip(pt.dln_f.iter()) {
                        *g += c * d;
                    }
                }
            }
            if kind == ObjectiveKind::Cvm {
                value += 1.0 / (12.0 * nf);
            }
        }
        ObjectiveKind::Ad => {
            // Reindexed so each observation appears once:
            // (2i-1) ln F_i + (2n+1-2i) ln(1 - F_i)
            let mut acc = 0.0;
            for (idx, &x) in xs.iter().enumerate() {
                let i = idx + 1;
                let lower_w = (2 * i - 1) as f64;
                let upper_w = (2 * n + 1 - 2 * i) as f64;
                let pt = cdf_point::<GRAD>(&kernel, alpha, x);

                let (ln_f, f_active) = if pt.ln_f < LN_FLOOR {
                    (LN_FLOOR, false)
                } else {
                    (pt.ln_f, true)
                };
                let (ln_1mf_raw, dln_1mf) = upper_tail::<GRAD>(&pt, alpha);
                let (ln_1mf, c_active) = if ln_1mf_raw.is_nan() || ln_1mf_raw < LN_FLOOR {
                    (LN_FLOOR, false)
                } else {
                    (ln_1mf_raw, true)
                };
                acc += lower_w * ln_f + upper_w * ln_1mf;

                if GRAD {
                    for k in 0..3 {
                        let mut d = 0.0;
                        if f_active {
                            d += lower_w * pt.dln_f[k];
                        }
                        if c_active {
                            d += upper_w * dln_1mf[k];
                        }
                        grad[k] += d;
                    }
                }
            }
            value = -nf - acc / nf;
            if GRAD {
                for g in grad.iter_mut() {
                    *g /= -nf;
                }
            }
        }
    }

    if value.is_nan() {
        return ObjectiveValue::infeasible();
    }
    ObjectiveValue {
        value,
        gradient: GRAD.then(|| grad[..dim].to_vec()),
        feasible: true,
    }
}

/// Objective value and analytic gradient.
pub fn evaluate(kind: ObjectiveKind, sample: &SortedSample, p: &DistParams) -> ObjectiveValue {
    evaluate_impl::<true>(kind, sample, p)
}

/// Objective value only; `+inf` at infeasible points. This is the fast path
/// used by the optimizer.
pub fn value(kind: ObjectiveKind, sample: &SortedSample, p: &DistParams) -> f64 {
    evaluate_impl::<false>(kind, sample, p).value
}

pub fn ls_value(sample: &SortedSample, p: &DistParams) -> ObjectiveValue {
    evaluate(ObjectiveKind::Ls, sample, p)
}

pub fn wls_value(sample: &SortedSample, p: &DistParams) -> ObjectiveValue {
    evaluate(ObjectiveKind::Wls, sample, p)
}

pub fn cvm_value(sample: &SortedSample, p: &DistParams) -> ObjectiveValue {
    evaluate(ObjectiveKind::Cvm, sample, p)
}

pub fn ad_value(sample: &SortedSample, p: &DistParams) -> ObjectiveValue {
    evaluate(ObjectiveKind::Ad, sample, p)
}

/// Analytic gradient, `None` at infeasible points.
pub fn gradient(kind: ObjectiveKind, sample: &SortedSample, p: &DistParams) -> Option<Vec<f64>> {
    evaluate(kind, sample, p).gradient
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{TleParams, TlqeParams};
    use std::f64::consts::LN_2;

    fn tle(a: f64, l: f64) -> DistParams {
        TleParams::new(a, l).unwrap().into()
    }

    fn tlqe(a: f64, l: f64, q: f64) -> DistParams {
        TlqeParams::new(a, l, q).unwrap().into()
    }

    fn pair() -> SortedSample {
        SortedSample::new(vec![LN_2, 2.0 * LN_2]).unwrap()
    }

    // F(x) = 1 - exp(-x) under alpha = 1, lambda = 0.5, so F = 0.5, 0.75.

    #[test]
    fn ls_hand_arithmetic() {
        let v = ls_value(&pair(), &tle(1.0, 0.5)).value;
        assert!((v - (1.0 / 36.0 + 1.0 / 144.0)).abs() < 1e-12);
    }

    #[test]
    fn cvm_hand_arithmetic() {
        let v = cvm_value(&pair(), &tle(1.0, 0.5)).value;
        assert!((v - (1.0 / 24.0 + 1.0 / 16.0)).abs() < 1e-12);
    }

    #[test]
    fn ad_hand_arithmetic() {
        let v = ad_value(&pair(), &tle(1.0, 0.5)).value;
        let expected =
            -2.0 - 0.5 * ((0.5f64.ln() + 0.25f64.ln()) + 3.0 * (0.75f64.ln() + 0.5f64.ln()));
        assert!((v - expected).abs() < 1e-12);
        assert!((v - 0.510_964_650_357_506_9).abs() < 1e-12);
    }

    #[test]
    fn single_observation_at_median() {
        // alpha = 1, lambda = 0.5: F(ln 2) = 1/2
        let s = SortedSample::new(vec![LN_2]).unwrap();
        let p = tle(1.0, 0.5);
        assert!(ls_value(&s, &p).value.abs() < 1e-15);
        assert!(wls_value(&s, &p).value.abs() < 1e-13);
        assert!((cvm_value(&s, &p).value - 1.0 / 12.0).abs() < 1e-15);
        let ad = ad_value(&s, &p).value;
        assert!((ad - (-1.0 + 2.0 * LN_2)).abs() < 1e-12);
    }

    #[test]
    fn wls_weights() {
        assert_eq!(wls_weight(1, 1), 12.0);
        assert_eq!(wls_weight(1, 2), 18.0);
        assert_eq!(wls_weight(2, 2), 18.0);
        for n in 1..50 {
            for i in 1..=n {
                let w = wls_weight(i, n);
                assert!(w.is_finite() && w > 0.0);
            }
        }
        // F(x) = 0.25 at x = -ln(0.75) under alpha = 1, lambda = 0.5
        let s = SortedSample::new(vec![-(0.75f64.ln())]).unwrap();
        let v = wls_value(&s, &tle(1.0, 0.5)).value;
        assert!((v - 0.75).abs() < 1e-12);
    }

    #[test]
    fn ls_alpha_partial_single_point() {
        let s = SortedSample::new(vec![1.0]).unwrap();
        let g = gradient(ObjectiveKind::Ls, &s, &tle(1.0, 1.0)).unwrap();
        let f = 1.0 - (-2.0f64).exp();
        let expected = 2.0 * (f - 0.5) * f * f.ln();
        assert!((g[1] - expected).abs() < 1e-14);
        assert!((g[1] + 0.091677).abs() < 1e-4);
    }

    #[test]
    fn infeasible_support() {
        let s = SortedSample::new(vec![0.5, 1.0, 4.0]).unwrap();
        // (1-q) lambda x_(n) = 0.5 * 1 * 4 = 2 >= 1
        for kind in ObjectiveKind::ALL {
            let v = evaluate(kind, &s, &tlqe(1.0, 1.0, 0.5));
            assert!(!v.feasible);
            assert_eq!(v.value, f64::INFINITY);
            assert!(v.gradient.is_none());
        }
        // exactly on the boundary
        let v = evaluate(ObjectiveKind::Ls, &s, &tlqe(1.0, 0.5, 0.5));
        assert!(!v.feasible);
        // q >= 1 is never infeasible
        assert!(evaluate(ObjectiveKind::Ad, &s, &tlqe(1.0, 100.0, 1.5)).feasible);
    }

    #[test]
    fn ad_is_finite_at_extremes() {
        let s = SortedSample::new(vec![0.0, 1e-300, 1.0, 800.0]).unwrap();
        for p in [tle(1.0, 1.0), tle(50.0, 1e-3), tle(1e-3, 50.0)] {
            let v = ad_value(&s, &p);
            assert!(v.value.is_finite(), "{p:?}");
            assert!(v.gradient.unwrap().iter().all(|g| g.is_finite()));
        }
    }

    #[test]
    fn ad_upper_tail_below_double_precision() {
        // 1 - F at x = 30 is about 3 e^-60: too small for 1 - F in doubles,
        // but its logarithm must still enter the statistic.
        let s = SortedSample::new(vec![0.3, 0.8, 1.5, 30.0]).unwrap();
        let (alpha, lambda) = (3.0, 1.0);
        let n = 4.0;
        let mut acc = 0.0;
        for (k, &x) in s.values().iter().enumerate() {
            let i = (k + 1) as f64;
            let ln_u = (-(-2.0 * lambda * x).exp()).ln_1p();
            let ln_f = alpha * ln_u;
            let ln_1mf = (-ln_f.exp_m1()).ln();
            acc += (2.0 * i - 1.0) * ln_f + (2.0 * n + 1.0 - 2.0 * i) * ln_1mf;
        }
        let want = -n - acc / n;
        let got = ad_value(&s, &tle(alpha, lambda)).value;
        assert!((got - want).abs() <= 1e-12 * want.abs(), "{got} vs {want}");
    }

    #[test]
    fn ties_are_allowed() {
        let s = SortedSample::new(vec![1.0, 1.0, 1.0, 2.0]).unwrap();
        for kind in ObjectiveKind::ALL {
            assert!(evaluate(kind, &s, &tle(1.5, 0.7)).value.is_finite());
        }
    }

    #[test]
    fn q_one_matches_tle() {
        let s = SortedSample::new(vec![0.2, 0.5, 1.1, 2.0, 3.5]).unwrap();
        for kind in ObjectiveKind::ALL {
            let a = evaluate(kind, &s, &tle(1.7, 0.9));
            let b = evaluate(kind, &s, &tlqe(1.7, 0.9, 1.0));
            assert_eq!(a.value, b.value);
            let (ga, gb) = (a.gradient.unwrap(), b.gradient.unwrap());
            assert_eq!(ga[..], gb[..2]);
            // limit of the q-partial against a symmetric difference across q = 1
            let h = 1e-4;
            let fd = (value(kind, &s, &tlqe(1.7, 0.9, 1.0 + h))
                - value(kind, &s, &tlqe(1.7, 0.9, 1.0 - h)))
                / (2.0 * h);
            assert!((gb[2] - fd).abs() < 1e-5 * (1.0 + fd.abs()), "{kind:?} {} {fd}", gb[2]);
        }
    }
}
