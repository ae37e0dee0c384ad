//! Topp-Leone exponential (TLE) and Topp-Leone q-exponential (TLqE) laws.
//!
//! Both are built from the Topp-Leone-G generator `F = [G (2 - G)]^alpha`
//! applied to a parent cdf `G`: the exponential for TLE and the q-exponential
//! for TLqE. The q-exponential parent has bounded support `[0, 1/((1-q) lambda)]`
//! when `q < 1` and unbounded support when `1 <= q < 2`. At `q = 1` it reduces
//! to the exponential; any `|1 - q| < 1e-8` is evaluated on the exponential path.
//!
//! The deformation is restricted to `q < 2` (the density carries a `2 - q`
//! factor); `q = 0` is an ordinary admissible value.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::Stream;
use crate::sample::SortedSample;

/// Half-width of the window around `q = 1` evaluated by the exponential limit.
pub const Q_ONE_TOLERANCE: f64 = 1e-8;

fn check_positive(name: &'static str, value: f64) -> Result<()> {
    if value.is_finite() && value > 0.0 {
        Ok(())
    } else {
        Err(Error::InvalidParameter {
            name,
            value,
            reason: "must be finite and > 0",
        })
    }
}

fn check_nonnegative_x(x: f64) -> Result<()> {
    if x >= 0.0 && !x.is_nan() {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "x",
            value: x,
            domain: "[0, inf)",
        })
    }
}

fn check_open_unit(u: f64) -> Result<()> {
    if u > 0.0 && u < 1.0 {
        Ok(())
    } else {
        Err(Error::Domain {
            name: "u",
            value: u,
            domain: "(0, 1)",
        })
    }
}

/// Shape `alpha` and rate `lambda` of a TLE distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TleParams {
    alpha: f64,
    lambda: f64,
}

impl TleParams {
    pub fn new(alpha: f64, lambda: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("lambda", lambda)?;
        Ok(TleParams { alpha, lambda })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }
}

/// Shape `alpha`, rate `lambda` and deformation `q < 2` of a TLqE distribution.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TlqeParams {
    alpha: f64,
    lambda: f64,
    q: f64,
}

impl TlqeParams {
    pub fn new(alpha: f64, lambda: f64, q: f64) -> Result<Self> {
        check_positive("alpha", alpha)?;
        check_positive("lambda", lambda)?;
        if !(q.is_finite() && q < 2.0) {
            return Err(Error::InvalidParameter {
                name: "q",
                value: q,
                reason: "must be finite and < 2",
            });
        }
        Ok(TlqeParams { alpha, lambda, q })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    /// True when `q` is close enough to 1 to use the exponential limit.
    pub fn is_exponential_limit(&self) -> bool {
        (1.0 - self.q).abs() < Q_ONE_TOLERANCE
    }

    /// The TLE law this reduces to at `q = 1`.
    pub fn exponential_limit(&self) -> TleParams {
        TleParams {
            alpha: self.alpha,
            lambda: self.lambda,
        }
    }
}

/// Interval `[lower, upper]` on which the density is positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Support {
    pub lower: f64,
    pub upper: f64,
}

impl Support {
    pub fn is_bounded(&self) -> bool {
        self.upper.is_finite()
    }

    pub fn contains(&self, x: f64) -> bool {
        x >= self.lower && x <= self.upper
    }
}

/// Which of the two families a parameter record belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistKind {
    Tle,
    Tlqe,
}

impl DistKind {
    /// Number of free parameters.
    pub fn dimension(self) -> usize {
        match self {
            DistKind::Tle => 2,
            DistKind::Tlqe => 3,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            DistKind::Tle => "tle",
            DistKind::Tlqe => "tlqe",
        }
    }

    /// Names of the parameters, in gradient order.
    pub fn parameter_names(self) -> &'static [&'static str] {
        match self {
            DistKind::Tle => &["lambda", "alpha"],
            DistKind::Tlqe => &["lambda", "alpha", "q"],
        }
    }
}

impl std::fmt::Display for DistKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for DistKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tle" => Ok(DistKind::Tle),
            "tlqe" => Ok(DistKind::Tlqe),
            other => Err(Error::Config(format!("unknown distribution '{other}'"))),
        }
    }
}

/// A fully specified TLE or TLqE law.
///
/// Serialized as `{"kind": "tle", "alpha": .., "lambda": ..}` or
/// `{"kind": "tlqe", "alpha": .., "lambda": .., "q": ..}`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "RawParams", into = "RawParams")]
pub enum DistParams {
    Tle(TleParams),
    Tlqe(TlqeParams),
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawParams {
    kind: DistKind,
    alpha: f64,
    lambda: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    q: Option<f64>,
}

impl TryFrom<RawParams> for DistParams {
    type Error = Error;

    fn try_from(raw: RawParams) -> Result<Self> {
        match (raw.kind, raw.q) {
            (DistKind::Tle, None) => Ok(DistParams::Tle(TleParams::new(raw.alpha, raw.lambda)?)),
            (DistKind::Tle, Some(_)) => Err(Error::Config("tle takes no q parameter".into())),
            (DistKind::Tlqe, Some(q)) => Ok(DistParams::Tlqe(TlqeParams::new(
                raw.alpha, raw.lambda, q,
            )?)),
            (DistKind::Tlqe, None) => Err(Error::Config("tlqe requires a q parameter".into())),
        }
    }
}

impl From<DistParams> for RawParams {
    fn from(p: DistParams) -> Self {
        RawParams {
            kind: p.kind(),
            alpha: p.alpha(),
            lambda: p.lambda(),
            q: p.q(),
        }
    }
}

impl From<TleParams> for DistParams {
    fn from(p: TleParams) -> Self {
        DistParams::Tle(p)
    }
}

impl From<TlqeParams> for DistParams {
    fn from(p: TlqeParams) -> Self {
        DistParams::Tlqe(p)
    }
}

impl DistParams {
    pub fn kind(&self) -> DistKind {
        match self {
            DistParams::Tle(_) => DistKind::Tle,
            DistParams::Tlqe(_) => DistKind::Tlqe,
        }
    }

    pub fn alpha(&self) -> f64 {
        match self {
            DistParams::Tle(p) => p.alpha,
            DistParams::Tlqe(p) => p.alpha,
        }
    }

    pub fn lambda(&self) -> f64 {
        match self {
            DistParams::Tle(p) => p.lambda,
            DistParams::Tlqe(p) => p.lambda,
        }
    }

    pub fn q(&self) -> Option<f64> {
        match self {
            DistParams::Tle(_) => None,
            DistParams::Tlqe(p) => Some(p.q),
        }
    }

    /// Parameters in gradient order: `[lambda, alpha]` or `[lambda, alpha, q]`.
    pub fn to_vec(&self) -> Vec<f64> {
        match self {
            DistParams::Tle(p) => vec![p.lambda, p.alpha],
            DistParams::Tlqe(p) => vec![p.lambda, p.alpha, p.q],
        }
    }

    /// Inverse of [`DistParams::to_vec`].
    pub fn from_slice(kind: DistKind, v: &[f64]) -> Result<Self> {
        match (kind, v) {
            (DistKind::Tle, [lambda, alpha]) => Ok(TleParams::new(*alpha, *lambda)?.into()),
            (DistKind::Tlqe, [lambda, alpha, q]) => Ok(TlqeParams::new(*alpha, *lambda, *q)?.into()),
            _ => Err(Error::Config(format!(
                "{kind} expects {} parameters, got {}",
                kind.dimension(),
                v.len()
            ))),
        }
    }

    pub fn support(&self) -> Support {
        match self {
            DistParams::Tle(_) => Support {
                lower: 0.0,
                upper: f64::INFINITY,
            },
            DistParams::Tlqe(p) => support(p),
        }
    }

    pub fn cdf(&self, x: f64) -> Result<f64> {
        match self {
            DistParams::Tle(p) => cdf_tle(x, p),
            DistParams::Tlqe(p) => cdf_tlqe(x, p),
        }
    }

    pub fn pdf(&self, x: f64) -> Result<f64> {
        match self {
            DistParams::Tle(p) => pdf_tle(x, p),
            DistParams::Tlqe(p) => pdf_tlqe(x, p),
        }
    }

    pub fn quantile(&self, u: f64) -> Result<f64> {
        match self {
            DistParams::Tle(p) => quantile_tle(u, p),
            DistParams::Tlqe(p) => quantile_tlqe(u, p),
        }
    }

    /// Log density, `-inf` outside the support. Evaluated in log space so the
    /// tails do not underflow.
    pub fn ln_pdf(&self, x: f64) -> f64 {
        if x.is_nan() || x < 0.0 {
            return f64::NEG_INFINITY;
        }
        let alpha = self.alpha();
        let lambda = self.lambda();
        let (ln_const, ln_tail, ln_s) = match self {
            DistParams::Tle(_) => (0.0, -2.0 * lambda * x, -2.0 * lambda * x),
            DistParams::Tlqe(p) if p.is_exponential_limit() => {
                (0.0, -2.0 * lambda * x, -2.0 * lambda * x)
            }
            DistParams::Tlqe(p) => {
                let t = 1.0 - p.q;
                let ln_psi = (-t * lambda * x).ln_1p();
                if ln_psi.is_nan() || ln_psi == f64::NEG_INFINITY {
                    return f64::NEG_INFINITY;
                }
                let ln_s = 2.0 * (2.0 - p.q) / t * ln_psi;
                ((2.0 - p.q).ln(), (3.0 - p.q) / t * ln_psi, ln_s)
            }
        };
        let head = std::f64::consts::LN_2 + alpha.ln() + lambda.ln() + ln_const + ln_tail;
        if alpha == 1.0 {
            return head;
        }
        head + (alpha - 1.0) * ln_one_minus_exp(ln_s)
    }
}

/// `ln(1 - e^a)` for `a <= 0`, accurate at both ends of the range.
#[inline]
pub(crate) fn ln_one_minus_exp(a: f64) -> f64 {
    if a < -std::f64::consts::LN_2 {
        (-a.exp()).ln_1p()
    } else {
        (-a.exp_m1()).ln()
    }
}

/// Topp-Leone-G cdf: `g^alpha (2 - g)^alpha` for a parent probability `g`.
pub fn tl_transform_cdf(g: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&g) {
        return Err(Error::Domain {
            name: "g",
            value: g,
            domain: "[0, 1]",
        });
    }
    check_positive("alpha", alpha)?;
    Ok(tl_base(g).powf(alpha))
}

/// `g (2 - g)`. For `g >= 1/2` it is formed as `1 - (1 - g)^2`, where `1 - g`
/// is exact, so the result never decreases as `g` approaches 1.
#[inline]
fn tl_base(g: f64) -> f64 {
    if g < 0.5 {
        g * (2.0 - g)
    } else {
        let s = 1.0 - g;
        1.0 - s * s
    }
}

/// Topp-Leone-G density `2 alpha g(x) (1 - G(x)) [G(x)(2 - G(x))]^(alpha - 1)`
/// from the parent cdf value and parent density at the same point.
pub fn tl_transform_pdf(parent_cdf: f64, parent_pdf: f64, alpha: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&parent_cdf) {
        return Err(Error::Domain {
            name: "g",
            value: parent_cdf,
            domain: "[0, 1]",
        });
    }
    check_positive("alpha", alpha)?;
    Ok(tl_density(parent_cdf, 1.0 - parent_cdf, parent_pdf, alpha))
}

/// Generator density with the parent survival supplied separately, so tails
/// keep their precision when `1 - G` would round to zero.
fn tl_density(parent_cdf: f64, parent_survival: f64, parent_pdf: f64, alpha: f64) -> f64 {
    let base = tl_base(parent_cdf);
    2.0 * alpha * parent_pdf * parent_survival * base.powf(alpha - 1.0)
}

/// Exponential cdf `1 - exp(-lambda x)`.
pub fn exponential_cdf(x: f64, lambda: f64) -> f64 {
    -(-lambda * x).exp_m1()
}

/// q-exponential cdf `1 - [1 - (1-q) lambda x]^((2-q)/(1-q))`, equal to 1
/// beyond a finite upper endpoint and to the exponential cdf near `q = 1`.
pub fn q_exponential_cdf(x: f64, lambda: f64, q: f64) -> f64 {
    let t = 1.0 - q;
    if t.abs() < Q_ONE_TOLERANCE {
        return exponential_cdf(x, lambda);
    }
    let arg = -t * lambda * x;
    if arg <= -1.0 {
        return 1.0;
    }
    -((2.0 - q) / t * arg.ln_1p()).exp_m1()
}

/// Returns `(G, 1 - G, g)` for the q-exponential parent at an interior point.
fn q_exponential_parts(x: f64, p: &TlqeParams) -> (f64, f64, f64) {
    let t = 1.0 - p.q;
    let ln_psi = (-t * p.lambda * x).ln_1p();
    let survival = ((2.0 - p.q) / t * ln_psi).exp();
    let cdf = -((2.0 - p.q) / t * ln_psi).exp_m1();
    let density = (2.0 - p.q) * p.lambda * (ln_psi / t).exp();
    (cdf, survival, density)
}

pub fn cdf_tle(x: f64, p: &TleParams) -> Result<f64> {
    check_nonnegative_x(x)?;
    tl_transform_cdf(exponential_cdf(x, p.lambda), p.alpha)
}

pub fn pdf_tle(x: f64, p: &TleParams) -> Result<f64> {
    check_nonnegative_x(x)?;
    let g = exponential_cdf(x, p.lambda);
    let survival = (-p.lambda * x).exp();
    Ok(tl_density(g, survival, p.lambda * survival, p.alpha))
}

/// `-ln(1 - u^(1/alpha)) / (2 lambda)`.
pub fn quantile_tle(u: f64, p: &TleParams) -> Result<f64> {
    check_open_unit(u)?;
    let v = u.powf(1.0 / p.alpha);
    Ok(-(-v).ln_1p() / (2.0 * p.lambda))
}

pub fn cdf_tlqe(x: f64, p: &TlqeParams) -> Result<f64> {
    check_nonnegative_x(x)?;
    tl_transform_cdf(q_exponential_cdf(x, p.lambda, p.q), p.alpha)
}

/// TLqE density. Defined as the one-sided limit at a finite upper endpoint;
/// points beyond that endpoint are a domain error.
pub fn pdf_tlqe(x: f64, p: &TlqeParams) -> Result<f64> {
    check_nonnegative_x(x)?;
    if p.is_exponential_limit() {
        return pdf_tle(x, &p.exponential_limit());
    }
    let s = support(p);
    if x > s.upper {
        return Err(Error::Domain {
            name: "x",
            value: x,
            domain: "support of the TLqE law",
        });
    }
    if x == s.upper {
        // psi = 0 and the density exponent (3-q)/(1-q) is positive for q < 1
        return Ok(0.0);
    }
    let (cdf, survival, density) = q_exponential_parts(x, p);
    Ok(tl_density(cdf, survival, density, p.alpha))
}

/// Closed-form inverse of [`cdf_tlqe`]; the exponential closed form near `q = 1`.
pub fn quantile_tlqe(u: f64, p: &TlqeParams) -> Result<f64> {
    check_open_unit(u)?;
    if p.is_exponential_limit() {
        return quantile_tle(u, &p.exponential_limit());
    }
    let t = 1.0 - p.q;
    let v = u.powf(1.0 / p.alpha);
    let ln_psi = t / (2.0 * (2.0 - p.q)) * (-v).ln_1p();
    Ok(-ln_psi.exp_m1() / (t * p.lambda))
}

/// Support of a TLqE law: bounded above by `1/((1-q) lambda)` when `q < 1`.
pub fn support(p: &TlqeParams) -> Support {
    let upper = if p.q < 1.0 && !p.is_exponential_limit() {
        1.0 / ((1.0 - p.q) * p.lambda)
    } else {
        f64::INFINITY
    };
    Support { lower: 0.0, upper }
}

/// Draws `n` observations by inverse transform from the stream seeded with
/// `seed`, returned sorted ascending.
pub fn sample(n: usize, dist: &DistParams, seed: u64) -> SortedSample {
    let mut stream = Stream::new(seed);
    let values: Vec<f64> = (0..n)
        .map(|_| {
            dist.quantile(stream.next_open01())
                .expect("open-interval uniforms are always in the quantile domain")
        })
        .collect();
    SortedSample::new(values).expect("quantiles are finite and nonnegative")
}
