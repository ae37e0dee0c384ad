//! Globally adaptive 15-point Gauss–Kronrod quadrature.
//!
//! Used to check density normalization; kept independent of the closed-form
//! cdfs it is meant to verify.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];

const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_728,
];

// Gauss weights for the odd Kronrod nodes (indices 1, 3, 5, 7).
const WG: [f64; 4] = [
    0.129_484_966_168_869_7,
    0.279_705_391_489_276_7,
    0.381_830_050_505_118_9,
    0.417_959_183_673_469_4,
];

#[derive(Debug, Clone, Copy)]
pub struct Estimate {
    pub value: f64,
    pub error: f64,
    pub intervals: usize,
}

struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

impl PartialEq for Panel {
    fn eq(&self, other: &Self) -> bool {
        self.error == other.error
    }
}
impl Eq for Panel {}
impl PartialOrd for Panel {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Panel {
    fn cmp(&self, other: &Self) -> Ordering {
        self.error.total_cmp(&other.error)
    }
}

fn kronrod(f: &impl Fn(f64) -> f64, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kron = WGK[7] * fc;
    let mut gauss = WG[3] * fc;
    for (j, (&x, &w)) in XGK.iter().zip(WGK.iter()).take(7).enumerate() {
        let f1 = f(center - half * x);
        let f2 = f(center + half * x);
        kron += w * (f1 + f2);
        if j % 2 == 1 {
            gauss += WG[j / 2] * (f1 + f2);
        }
    }
    Panel {
        a,
        b,
        value: kron * half,
        error: ((kron - gauss) * half).abs(),
    }
}

/// Integrates `f` over the finite interval `[a, b]`, starting from
/// `initial_panels` equal panels and bisecting the worst panel until the
/// summed error estimate drops below `abs_tol` or `max_panels` is reached.
pub fn integrate(
    f: impl Fn(f64) -> f64,
    a: f64,
    b: f64,
    abs_tol: f64,
    initial_panels: usize,
    max_panels: usize,
) -> Estimate {
    let m = initial_panels.max(1);
    let width = (b - a) / m as f64;
    let mut heap: BinaryHeap<Panel> = (0..m)
        .map(|k| {
            let lo = a + k as f64 * width;
            let hi = if k + 1 == m { b } else { lo + width };
            kronrod(&f, lo, hi)
        })
        .collect();
    loop {
        let total_err: f64 = heap.iter().map(|p| p.error).sum();
        if total_err <= abs_tol || heap.len() >= max_panels {
            let value = heap.iter().map(|p| p.value).sum();
            return Estimate {
                value,
                error: total_err,
                intervals: heap.len(),
            };
        }
        let worst = heap.pop().expect("heap is never empty");
        let mid = 0.5 * (worst.a + worst.b);
        heap.push(kronrod(&f, worst.a, mid));
        heap.push(kronrod(&f, mid, worst.b));
    }
}

/// Integrates a density over `(0, upper]` after the substitution `x = e^s`,
/// which turns power-law tails and `x^(alpha-1)` singularities at the origin
/// into exponentially decaying ends. `upper` may be infinite.
pub fn integrate_positive_half_line(f: impl Fn(f64) -> f64, upper: f64, abs_tol: f64) -> Estimate {
    const S_LO: f64 = -80.0;
    const S_HI: f64 = 160.0;
    let s_hi = if upper.is_finite() { upper.ln() } else { S_HI };
    integrate(
        |s| {
            let x = s.exp();
            if x > upper {
                0.0
            } else {
                f(x) * x
            }
        },
        S_LO,
        s_hi,
        abs_tol,
        64,
        20_000,
    )
}
