//! Independent continued-fraction ground truth for the n = 2 horocycle.
//!
//! For the lattice family Lambda_alpha (lower-unipotent translate of Z^2),
//! the convergents p/q of alpha predict every deep excursion of the
//! horocycle orbit: the excursion happens at s* = q/|r| with r = q alpha - p
//! and reaches depth 2 log(1/|r|). Convergents with r < 0 correspond to the
//! time-reversed flow.
//!
//! Floating input hits a precision wall after ~dozens of quotients;
//! rational input (Liouville constructions in particular) is expanded in
//! exact arithmetic, with logarithms of big integers used where the
//! magnitudes leave the f64 range.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};

use crate::error::CoreError;
use crate::group::GroupElement;
use crate::lattice::LatticePoint;
use crate::matrix::SquareMatrix;
use crate::scalar::Scalar;

/// One convergent p/q of a continued fraction, with the residual
/// r = q alpha - p kept in sign/log form (the magnitude may be far below
/// the f64 range).
#[derive(Debug, Clone)]
pub struct Convergent<S> {
    pub p: BigInt,
    pub q: BigInt,
    /// Sign of r = q alpha - p; 0 when the expansion terminated exactly.
    pub residual_sign: i8,
    /// ln |r|; -inf when the expansion terminated exactly.
    pub residual_ln_abs: S,
}

/// A continued-fraction expansion with exact convergents.
#[derive(Debug, Clone)]
pub struct ContinuedFraction<S> {
    value: S,
    exact: Option<BigRational>,
    quotients: Vec<BigInt>,
    convergents: Vec<Convergent<S>>,
}

impl<S: Scalar> ContinuedFraction<S> {
    #[inline]
    pub fn value(&self) -> S {
        self.value
    }

    #[inline]
    pub fn exact(&self) -> Option<&BigRational> {
        self.exact.as_ref()
    }

    #[inline]
    pub fn quotients(&self) -> &[BigInt] {
        &self.quotients
    }

    #[inline]
    pub fn convergents(&self) -> &[Convergent<S>] {
        &self.convergents
    }

    /// Whether the expansion reached the value exactly (rational input).
    pub fn is_terminated(&self) -> bool {
        self.convergents.last().map_or(false, |c| c.residual_sign == 0)
    }
}

/// Natural log of a positive big integer, stable for any size.
pub fn ln_bigint(x: &BigInt) -> f64 {
    assert!(x.is_positive(), "ln_bigint needs a positive integer");
    let bits = x.bits();
    if bits <= 53 {
        return x.to_f64().expect("fits f64").ln();
    }
    let shift = (bits - 53) as usize;
    let top: BigInt = x >> shift;
    top.to_f64().expect("53 bits fit").ln() + shift as f64 * std::f64::consts::LN_2
}

fn ln_ratio(num: &BigInt, den: &BigInt) -> f64 {
    ln_bigint(&num.abs()) - ln_bigint(&den.abs())
}

/// Expand x in (0, 1) as a simple continued fraction from floating input.
///
/// At most 64 terms: beyond that double precision cannot certify the
/// quotients. The precision wall (residual underflow or an unrepresentable
/// quotient) is signalled as an error.
pub fn cf_expand<S: Scalar>(x: S, max_terms: usize) -> Result<ContinuedFraction<S>, CoreError> {
    if !(x > S::zero() && x < S::one()) {
        return Err(CoreError::InvalidInput("cf_expand needs x in (0, 1)".into()));
    }
    if max_terms > 64 {
        return Err(CoreError::InvalidInput(
            "floating expansion supports at most 64 terms".into(),
        ));
    }
    let mut quotients: Vec<BigInt> = Vec::new();
    // complete-quotient residuals x_0 = x, x_k = frac(1/x_{k-1})
    let mut residuals: Vec<S> = vec![x];
    let mut frac = x;
    for _ in 0..max_terms {
        let inv = S::one() / frac;
        if !inv.is_finite() || inv >= S::of(2.0_f64.powi(53)) {
            return Err(CoreError::PrecisionWall { terms: quotients.len() });
        }
        let a = inv.floor();
        quotients.push(BigInt::from(a.as_f64() as i64));
        frac = inv - a;
        residuals.push(frac);
        if frac == S::zero() {
            break;
        }
    }
    Ok(build_cf(x, None, quotients, FloatResiduals(residuals)))
}

/// Expand an exact rational in (0, 1); unlimited terms, exact termination.
pub fn cf_expand_rational<S: Scalar>(value: &BigRational) -> Result<ContinuedFraction<S>, CoreError> {
    if !(value.is_positive() && value < &BigRational::from_integer(1.into())) {
        return Err(CoreError::InvalidInput("cf_expand_rational needs x in (0, 1)".into()));
    }
    let mut quotients = Vec::new();
    // Euclidean algorithm on (num, den) of 1/x
    let mut num = value.denom().clone();
    let mut den = value.numer().clone();
    while !den.is_zero() {
        let (q, r) = num.div_rem(&den);
        quotients.push(q);
        num = den;
        den = r;
    }
    let float_value = S::of(ln_ratio(value.numer(), value.denom()).exp());
    Ok(build_cf(float_value, Some(value.clone()), quotients, ExactResiduals(value.clone())))
}

/// Residual computation strategies for the two input kinds.
struct FloatResiduals<S>(Vec<S>);
struct ExactResiduals(BigRational);

trait ResidualSource<S: Scalar> {
    /// Sign and ln|r| of r = q alpha - p for the k-th convergent.
    fn residual(&self, k: usize, p: &BigInt, q: &BigInt, q_prev: &BigInt) -> (i8, S);
}

impl<S: Scalar> ResidualSource<S> for FloatResiduals<S> {
    fn residual(&self, k: usize, _p: &BigInt, q: &BigInt, q_prev: &BigInt) -> (i8, S) {
        // |r_k| = x_k / (q_k + x_k q_{k-1}); the sign is (-1)^k
        let xk = self.0[k];
        if xk == S::zero() {
            return (0, S::neg_infinity());
        }
        let qk = S::of(q.to_f64().expect("float-path q fits f64"));
        let qk1 = S::of(q_prev.to_f64().expect("float-path q fits f64"));
        let ln_abs = xk.ln() - (qk + xk * qk1).ln();
        let sign = if k % 2 == 0 { 1 } else { -1 };
        (sign, ln_abs)
    }
}

impl<S: Scalar> ResidualSource<S> for ExactResiduals {
    fn residual(&self, _k: usize, p: &BigInt, q: &BigInt, _q_prev: &BigInt) -> (i8, S) {
        // r = q alpha - p exactly
        let r_num = q * self.0.numer() - p * self.0.denom();
        if r_num.is_zero() {
            return (0, S::neg_infinity());
        }
        let sign = if r_num.is_positive() { 1 } else { -1 };
        (sign, S::of(ln_ratio(&r_num, self.0.denom())))
    }
}

fn build_cf<S: Scalar, R: ResidualSource<S>>(
    value: S,
    exact: Option<BigRational>,
    quotients: Vec<BigInt>,
    residuals: R,
) -> ContinuedFraction<S> {
    // p_{-1}/q_{-1} = 1/0, p_0/q_0 = 0/1, p_k = a_k p_{k-1} + p_{k-2}
    let mut p_prev = BigInt::from(1);
    let mut q_prev = BigInt::from(0);
    let mut p = BigInt::from(0);
    let mut q = BigInt::from(1);
    let mut convergents: Vec<Convergent<S>> = Vec::new();
    // include the 0/1 convergent only when it is a best approximation,
    // i.e. when the first quotient is at least 2; this keeps q strictly
    // increasing along the list
    let include_zeroth = quotients.first().map_or(false, |a| a > &BigInt::from(1));
    if include_zeroth {
        let (sign, ln_abs) = residuals.residual(0, &p, &q, &q_prev);
        convergents.push(Convergent {
            p: p.clone(),
            q: q.clone(),
            residual_sign: sign,
            residual_ln_abs: ln_abs,
        });
    }
    for (i, a) in quotients.iter().enumerate() {
        let p_next = a * &p + &p_prev;
        let q_next = a * &q + &q_prev;
        p_prev = std::mem::replace(&mut p, p_next);
        q_prev = std::mem::replace(&mut q, q_next);
        let (sign, ln_abs) = residuals.residual(i + 1, &p, &q, &q_prev);
        convergents.push(Convergent {
            p: p.clone(),
            q: q.clone(),
            residual_sign: sign,
            residual_ln_abs: ln_abs,
        });
    }
    ContinuedFraction { value, exact, quotients, convergents }
}

/// The test family Lambda_alpha: lower-unipotent matrix with subdiagonal
/// -alpha applied to Z^2. Its vectors under h_s are (q - s r, -r) with
/// r = q alpha - p, so excursions happen at s* = q/r for r > 0.
pub fn lattice_family<S: Scalar>(alpha: S) -> Result<LatticePoint<S>, CoreError> {
    if !(alpha >= S::zero() && alpha < S::one()) {
        return Err(CoreError::InvalidInput("lattice_family needs alpha in [0, 1)".into()));
    }
    let m = SquareMatrix::from_rows(&[vec![S::one(), S::zero()], vec![-alpha, S::one()]]);
    Ok(LatticePoint::new(GroupElement::new(m)?))
}

/// A predicted horocycle excursion.
#[derive(Debug, Clone)]
pub struct ExcursionPrediction<S> {
    /// Peak time s* = q/|r| (may overflow to +inf; ln_s_star is always
    /// finite).
    pub s_star: S,
    pub ln_s_star: S,
    /// Peak depth 2 ln(1/|r|).
    pub depth: S,
    pub convergent: (BigInt, BigInt),
    /// Whether the excursion occurs under the time-reversed flow (r < 0).
    pub time_reversed: bool,
}

/// One prediction per convergent with 0 < s* <= s_max, sorted by s*.
/// Includes every excursion of depth at least 2 ln q, since best rational
/// approximations dominate all others.
pub fn predict_excursions<S: Scalar>(
    cf: &ContinuedFraction<S>,
    s_max: S,
) -> Vec<ExcursionPrediction<S>> {
    let ln_smax = s_max.ln();
    let mut out: Vec<ExcursionPrediction<S>> = Vec::new();
    for c in cf.convergents() {
        if c.residual_sign == 0 {
            continue; // exact rational reached: no further excursions
        }
        let ln_q = S::of(ln_bigint(&c.q));
        let ln_s_star = ln_q - c.residual_ln_abs;
        if !(ln_s_star <= ln_smax) {
            continue;
        }
        let depth = -S::of(2.0) * c.residual_ln_abs;
        if depth <= S::zero() {
            continue;
        }
        out.push(ExcursionPrediction {
            s_star: ln_s_star.exp(),
            ln_s_star,
            depth,
            convergent: (c.p.clone(), c.q.clone()),
            time_reversed: c.residual_sign < 0,
        });
    }
    out.sort_by(|a, b| a.ln_s_star.partial_cmp(&b.ln_s_star).expect("finite"));
    out
}

/// The Liouville-type number sum_{k=1}^{terms} 10^(-k!), exactly.
pub fn liouville_alpha(terms: u32) -> Result<BigRational, CoreError> {
    if !(1..=6).contains(&terms) {
        return Err(CoreError::InvalidInput("liouville_alpha needs 1 <= terms <= 6".into()));
    }
    let ten = BigInt::from(10);
    let denom = ten.pow(factorial(terms));
    let mut numer = BigInt::from(0);
    for k in 1..=terms {
        numer += ten.pow(factorial(terms) - factorial(k));
    }
    Ok(BigRational::new(numer, denom))
}

fn factorial(k: u32) -> u32 {
    (1..=k).product::<u32>().max(1)
}

/// Slope diagnostics of one truncation stage of the Liouville construction.
#[derive(Debug, Clone, Copy)]
pub struct LiouvilleStage<S> {
    /// Stage index: the truncation keeps k+1 terms, q = 10^((k+1)!).
    pub k: u32,
    pub log10_q: u64,
    /// Peak depth 2 ln(1/|r|), exact via big-integer logarithms.
    pub depth: S,
    pub ln_s_star: S,
    /// depth / ln s*.
    pub slope: S,
    /// The predicted limit 2(k+1)/(k+2) of the slope at stage k.
    pub target_slope: S,
}

/// Exact per-stage excursion slopes of the Liouville construction.
///
/// Stage k truncates the sum after k+1 terms (so q = 10^((k+1)!)); the
/// excursion slope depth/ln s* approaches 2(k+1)/(k+2), increasing toward
/// the extremal slope 2. Requires k + 2 <= terms so the tail is nonzero.
pub fn liouville_stages<S: Scalar>(terms: u32, stages: &[u32]) -> Result<Vec<LiouvilleStage<S>>, CoreError> {
    let alpha = liouville_alpha(terms)?;
    let ten = BigInt::from(10);
    let mut out = Vec::with_capacity(stages.len());
    for &k in stages {
        if k + 2 > terms {
            return Err(CoreError::InvalidInput(format!(
                "stage {k} needs at least {} terms",
                k + 2
            )));
        }
        let kept = k + 1;
        let q = ten.pow(factorial(kept));
        let mut p = BigInt::from(0);
        for j in 1..=kept {
            p += ten.pow(factorial(kept) - factorial(j));
        }
        // r = q alpha - p > 0 exactly
        let r_num = &q * alpha.numer() - &p * alpha.denom();
        assert!(r_num.is_positive(), "liouville truncation residual must be positive");
        let ln_r = S::of(ln_ratio(&r_num, alpha.denom()));
        let depth = -S::of(2.0) * ln_r;
        let ln_s_star = S::of(ln_bigint(&q)) - ln_r;
        out.push(LiouvilleStage {
            k,
            log10_q: factorial(kept) as u64,
            depth,
            ln_s_star,
            slope: depth / ln_s_star,
            target_slope: S::of(2.0) * S::of_usize(k as usize + 1) / S::of_usize(k as usize + 2),
        });
    }
    Ok(out)
}
