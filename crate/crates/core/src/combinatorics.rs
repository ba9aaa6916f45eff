//! Exact combinatorial functions and the closed-form rates and series built on them.
//!
//! Every count is an arbitrary-precision integer and every rate an exact
//! rational. Conversion to `f64` happens only in [`limit_probability`],
//! [`partial_ie_sum`] and [`Rate::to_f64`].

use std::fmt;

use num_bigint::{BigInt, BigUint};
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};
use serde::Serialize;
use thiserror::Error;

use crate::table::DeficiencyType;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CombinatoricsError {
    #[error("falling factorial [{n}]_{m} needs n >= m")]
    FallingUnderflow { n: u64, m: u64 },
    #[error("arity must be at least 2, got {0}")]
    ArityTooSmall(u32),
    #[error("arity {0} is too large")]
    ArityTooLarge(u32),
    #[error("subset size must be at least 2, got {0}")]
    SubsetTooSmall(u64),
    #[error("subset size {s} exceeds order {n}")]
    SubsetExceedsOrder { s: u64, n: u64 },
    #[error("sub-table of {cells} cells is too large")]
    TooManyCells { cells: u64 },
    #[error("rate must be nonnegative")]
    NegativeRate,
    #[error("partial sum needs at least one term")]
    NoTerms,
}

/// An exact nonnegative rational, kept in lowest terms.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Rate(BigRational);

impl Rate {
    pub fn new(numer: impl Into<BigInt>, denom: impl Into<BigInt>) -> Result<Self, CombinatoricsError> {
        Rate::from_ratio(BigRational::new(numer.into(), denom.into()))
    }

    pub fn from_ratio(r: BigRational) -> Result<Self, CombinatoricsError> {
        if r.is_negative() {
            return Err(CombinatoricsError::NegativeRate);
        }
        Ok(Rate(r))
    }

    pub fn integer(v: impl Into<BigInt>) -> Self {
        Rate(BigRational::from_integer(v.into()))
    }

    pub fn zero() -> Self {
        Rate(BigRational::zero())
    }

    pub fn as_ratio(&self) -> &BigRational {
        &self.0
    }

    pub fn numer(&self) -> &BigInt {
        self.0.numer()
    }

    pub fn denom(&self) -> &BigInt {
        self.0.denom()
    }

    pub fn to_f64(&self) -> f64 {
        ratio_to_f64(&self.0)
    }
}

impl fmt::Display for Rate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_integer() {
            write!(f, "{}", self.0.numer())
        } else {
            write!(f, "{}/{}", self.0.numer(), self.0.denom())
        }
    }
}

impl Serialize for Rate {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

fn ratio_to_f64(r: &BigRational) -> f64 {
    if let Some(v) = r.to_f64() {
        if v.is_finite() {
            return v;
        }
    }
    // Scale huge numerators and denominators down together.
    let (n, d) = (r.numer(), r.denom());
    let shift = n.bits().max(d.bits()).saturating_sub(1000);
    let n = (n >> shift).to_f64().unwrap_or(f64::NAN);
    let d = (d >> shift).to_f64().unwrap_or(f64::NAN);
    n / d
}

fn big(v: u64) -> BigUint {
    BigUint::from(v)
}

/// `C(n, m)`; zero when `m > n`.
pub fn binomial(n: u64, m: u64) -> BigUint {
    if m > n {
        return BigUint::zero();
    }
    let m = m.min(n - m);
    let mut acc = BigUint::one();
    for i in 0..m {
        acc = acc * big(n - i) / big(i + 1);
    }
    acc
}

/// Stirling number of the second kind `{n brace m}`, by the standard recurrence.
pub fn stirling2(n: u64, m: u64) -> BigUint {
    if m > n {
        return BigUint::zero();
    }
    let m = m as usize;
    // row[j] = S(i, j), rolled forward in i
    let mut row = vec![BigUint::zero(); m + 1];
    row[0] = BigUint::one();
    for i in 1..=n {
        let hi = m.min(i as usize);
        for j in (1..=hi).rev() {
            row[j] = &row[j] * big(j as u64) + &row[j - 1];
        }
        row[0] = BigUint::zero();
    }
    row.swap_remove(m)
}

/// `[n]_m = n (n-1) ... (n-m+1)`.
pub fn falling(n: u64, m: u64) -> Result<BigUint, CombinatoricsError> {
    if n < m {
        return Err(CombinatoricsError::FallingUnderflow { n, m });
    }
    Ok((0..m).fold(BigUint::one(), |acc, i| acc * big(n - i)))
}

/// `n (n - step) (n - 2 step) ...` down to the last positive factor.
///
/// # Panics
/// If `step` is zero.
pub fn multifactorial(n: u64, step: u64) -> BigUint {
    assert!(step > 0, "multifactorial step must be positive");
    let mut acc = BigUint::one();
    let mut k = n;
    while k > 0 {
        acc *= big(k);
        k = k.saturating_sub(step);
    }
    acc
}

pub fn factorial(n: u64) -> BigUint {
    multifactorial(n, 1)
}

/// `(2k - 1)!!`, the number of perfect matchings on `2k` points.
pub fn perfect_matching_count(k: u64) -> BigUint {
    if k == 0 {
        BigUint::one()
    } else {
        multifactorial(2 * k - 1, 2)
    }
}

/// Equivalence classes of disjoint `k`-configurations of pairs: `7^k (2k-1)!!`.
pub fn disjoint_pair_class_count(k: u64) -> BigUint {
    big(7).pow(k as u32) * perfect_matching_count(k)
}

/// Upper bound `7^k 2^(2k^2 - k)` on all `k`-configuration classes.
pub fn nondisjoint_class_bound(k: u64) -> BigUint {
    big(7).pow(k as u32) * (BigUint::one() << (2 * k * k - k))
}

/// Number of labelled 3-element set partition types with exactly six blocks.
pub const TRIPLE_EXCEEDANCE_TYPES: u64 = 2646;

/// Disjoint configurations of `k` exceedance-3 triples, from
/// `D(k) = 2646 (3k-1)(3k-2)/2 D(k-1)`, `D(0) = 1`.
///
/// The recurrence solves to `2646^k (3k)! / ((3k)!!! 2^k)`. The same formula
/// written with `3(k-1)` in place of `3k` disagrees with the recurrence
/// (it gives 1323 at `k = 1`); the recurrence form is the one whose ratio
/// `D(k) / (3k)!` equals `441^k / k!`.
pub fn disjoint_triple_class_count(k: u64) -> BigUint {
    (1..=k).fold(BigUint::one(), |acc, j| {
        acc * big(TRIPLE_EXCEEDANCE_TYPES) * big((3 * j - 1) * (3 * j - 2)) / big(2)
    })
}

/// Closed form of [`disjoint_triple_class_count`].
pub fn disjoint_triple_class_count_closed(k: u64) -> BigUint {
    big(TRIPLE_EXCEEDANCE_TYPES).pow(k as u32) * factorial(3 * k)
        / (multifactorial(3 * k, 3) * (BigUint::one() << k))
}

fn rate_of(numer: BigUint, denom: BigUint) -> Rate {
    Rate(BigRational::new(numer.into(), denom.into()))
}

/// Per-pair rate `{2^d brace 2} / 2` for `d`-ary operations.
///
/// Only `d = 2` is backed by the pair-configuration argument. For `d >= 3`
/// the expected number of such pairs, `C(n,2)({2^d brace 2}(n-1)+1)/n^(2^d-1)`,
/// tends to zero, so callers should report the value as conjectural.
pub fn rate_dary(d: u32) -> Result<Rate, CombinatoricsError> {
    if d < 2 {
        return Err(CombinatoricsError::ArityTooSmall(d));
    }
    if d > 12 {
        return Err(CombinatoricsError::ArityTooLarge(d));
    }
    Ok(rate_of(stirling2(1 << d, 2), big(2)))
}

/// `{s^2 brace s^2 - s} / s!`: the rate for `s`-subsets of exceedance `s^2 - 2s`.
///
/// Established for `s = 2` (7/2) and `s = 3` (441); see [`rate_exceedance_is_conjectural`].
pub fn rate_exceedance(s: u64) -> Result<Rate, CombinatoricsError> {
    if s < 2 {
        return Err(CombinatoricsError::SubsetTooSmall(s));
    }
    if s * s > 4096 {
        return Err(CombinatoricsError::TooManyCells { cells: s * s });
    }
    Ok(rate_of(stirling2(s * s, s * s - s), factorial(s)))
}

pub fn rate_exceedance_is_conjectural(s: u64) -> bool {
    s >= 4
}

/// `1 - e^(-rate)`.
pub fn limit_probability(rate: &Rate) -> f64 {
    -(-rate.to_f64()).exp_m1()
}

/// `sum_{k=1..terms} (-1)^(k+1) rate^k / k!`, accumulated exactly.
pub fn partial_ie_sum(rate: &Rate, terms: u64) -> Result<f64, CombinatoricsError> {
    Ok(ratio_to_f64(&partial_ie_sum_exact(rate, terms)?))
}

pub fn partial_ie_sum_exact(rate: &Rate, terms: u64) -> Result<BigRational, CombinatoricsError> {
    if terms == 0 {
        return Err(CombinatoricsError::NoTerms);
    }
    let mut sum = BigRational::zero();
    let mut term = BigRational::one();
    for k in 1..=terms {
        term = term * &rate.0 / BigRational::from_integer(BigInt::from(k));
        if k % 2 == 1 {
            sum += &term;
        } else {
            sum -= &term;
        }
    }
    Ok(sum)
}

fn check_subset_params(n: u64, d: u32, s: u64) -> Result<u64, CombinatoricsError> {
    if d < 2 {
        return Err(CombinatoricsError::ArityTooSmall(d));
    }
    if s < 2 {
        return Err(CombinatoricsError::SubsetTooSmall(s));
    }
    if s > n {
        return Err(CombinatoricsError::SubsetExceedsOrder { s, n });
    }
    s.checked_pow(d).filter(|&c| c <= 64).ok_or(CombinatoricsError::TooManyCells { cells: u64::MAX })
}

fn expected_count_impl(
    n: u64,
    d: u32,
    s: u64,
    eps: i64,
    include_constant: bool,
) -> Result<Rate, CombinatoricsError> {
    let cells = check_subset_params(n, d, s)?;
    let max_blocks = (s as i64 + eps).clamp(0, cells.min(n) as i64) as u64;
    let first = if include_constant { 1 } else { 2 };
    let mut favourable = BigUint::zero();
    for i in first..=max_blocks {
        favourable += stirling2(cells, i) * falling(n, i)?;
    }
    Ok(rate_of(binomial(n, s) * favourable, big(n).pow(cells as u32)))
}

/// Exact expected number of `s`-subsets with exceedance at most `eps` in a
/// uniformly random `d`-ary table of order `n`.
///
/// A fixed subset qualifies with probability
/// `sum_{i <= s + eps} {s^d brace i} [n]_i / n^(s^d)`.
pub fn expected_count(n: u64, d: u32, s: u64, eps: i64) -> Result<Rate, CombinatoricsError> {
    expected_count_impl(n, d, s, eps, true)
}

/// As [`expected_count`], ignoring subsets whose sub-table is constant.
pub fn expected_count_excluding_constant(
    n: u64,
    d: u32,
    s: u64,
    eps: i64,
) -> Result<Rate, CombinatoricsError> {
    expected_count_impl(n, d, s, eps, false)
}

/// Probability that a fixed pair of a random order-`n` groupoid has type `t`:
/// `1/n^3` for T0 and `(n-1)/n^3` otherwise.
pub fn pair_type_probability(n: u64, t: DeficiencyType) -> Rate {
    let numer = if t == DeficiencyType::T0 { 1 } else { n - 1 };
    rate_of(big(numer), big(n).pow(3))
}

/// Expected number of type-`t` pairs in a random order-`n` groupoid.
pub fn expected_type_count(n: u64, t: DeficiencyType) -> Rate {
    Rate(pair_type_probability(n, t).0 * BigRational::from_integer(binomial(n, 2).into()))
}

/// Upper bound `18002 [n]_5 C(n,3) / n^9` on the expected number of
/// 3-subsets with exceedance at most 2.
pub fn triple_low_exceedance_bound(n: u64) -> Result<Rate, CombinatoricsError> {
    let types: BigUint = (1..=5).map(|i| stirling2(9, i)).sum();
    Ok(rate_of(types * falling(n, 5)? * binomial(n, 3), big(n).pow(9)))
}

/// Large-`n` behaviour of the qualifying-subset count.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LimitRate {
    /// Expected count tends to zero.
    Vanishing,
    /// Expected count tends to `rate`; the probability tends to `1 - e^(-rate)`.
    Finite { rate: Rate, conjectural: bool },
    /// Expected count diverges.
    Saturating,
}

impl LimitRate {
    pub fn limit_probability(&self) -> f64 {
        match self {
            LimitRate::Vanishing => 0.0,
            LimitRate::Finite { rate, .. } => limit_probability(rate),
            LimitRate::Saturating => 1.0,
        }
    }
}

/// First-moment limit for `s`-subsets of exceedance at most `eps` in `d`-ary tables.
///
/// The dominant term of [`expected_count`] has order `n^(2s + eps - s^d)`,
/// so the count has a finite limit exactly when `eps = s^d - 2s`, with rate
/// `{s^d brace s^d - s} / s!`.
pub fn limit_rate(d: u32, s: u64, eps: i64) -> Result<LimitRate, CombinatoricsError> {
    let cells = check_subset_params(s, d, s)?;
    let exponent = 2 * s as i64 + eps - cells as i64;
    Ok(match exponent {
        e if e < 0 => LimitRate::Vanishing,
        0 => LimitRate::Finite {
            rate: rate_of(stirling2(cells, cells - s), factorial(s)),
            conjectural: d >= 3 || rate_exceedance_is_conjectural(s),
        },
        _ => LimitRate::Saturating,
    })
}

/// `rate^(terms+1) / (terms+1)!`, the first omitted term. Once `terms >= rate`
/// it bounds the distance from the partial sum to `1 - e^(-rate)`.
pub fn partial_sum_error_bound(rate: &Rate, terms: u64) -> f64 {
    let r = rate.to_f64();
    (1..=terms + 1).fold(1.0, |acc, k| acc * r / k as f64)
}

pub fn is_canonical(r: &BigRational) -> bool {
    r.numer().gcd(r.denom()).is_one() && r.denom().is_positive()
}
