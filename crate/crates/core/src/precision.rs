//! Exact rationals and tagged arbitrary-precision reals. Also holds the
//! half-integer binomial coefficients shared by every reexpansion formula.

use std::cmp::Ordering;
use std::fmt;
use std::ops::{Add, Div, Mul, Neg, Sub};

use rug::float::Round;
use rug::ops::Pow;
use rug::{Float, Integer, Rational};

use crate::error::{Error, Result};

/// Exact rational number, always in lowest terms with a positive denominator.
pub type BigRational = Rational;

const LOG2_10: f64 = std::f64::consts::LOG2_10;

/// Most digits two values can be said to agree to; exact equality reports this.
pub const MAX_AGREEMENT: u32 = 100_000;

/// Mantissa bits needed to hold `digits` significant decimal digits.
pub fn digits_to_bits(digits: u32) -> u32 {
    ((f64::from(digits.max(1)) * LOG2_10).ceil() as u32).max(2)
}

/// Decimal digits represented by a mantissa of `bits` bits (rounded down).
pub fn bits_to_digits(bits: u32) -> u32 {
    (f64::from(bits) / LOG2_10).floor() as u32
}

/// Number of leading significant decimal digits on which `a` and `b` agree.
///
/// Both zero counts as full agreement; exactly one zero counts as none.
pub fn agreed_digits(a: &Float, b: &Float) -> u32 {
    if a == b {
        return MAX_AGREEMENT;
    }
    if a.is_zero() || b.is_zero() || !a.is_finite() || !b.is_finite() {
        return 0;
    }
    let prec = a.prec().max(b.prec()) + 16;
    let diff = Float::with_val(prec, a - b).abs();
    let scale = Float::with_val(prec, a.abs_ref()).max(&Float::with_val(prec, b.abs_ref()));
    let rel = diff / scale;
    let log = -rel.log10().to_f64();
    if log <= 0.0 {
        0
    } else {
        log.floor().min(f64::from(MAX_AGREEMENT)) as u32
    }
}

/// An arbitrary-precision real carrying the number of decimal digits it is
/// meant to represent.
#[derive(Clone, Debug)]
pub struct BigReal {
    value: Float,
    digits: u32,
}

impl BigReal {
    /// Wrap a float, rounding it to `digits` significant decimal digits.
    pub fn from_float(value: &Float, digits: u32) -> Self {
        let digits = digits.max(1);
        BigReal {
            value: Float::with_val(digits_to_bits(digits), value),
            digits,
        }
    }

    /// Correctly rounded conversion of an exact rational.
    pub fn from_rational(r: &Rational, digits: u32) -> Self {
        let digits = digits.max(1);
        BigReal {
            value: Float::with_val(digits_to_bits(digits), r),
            digits,
        }
    }

    pub fn from_i64(x: i64, digits: u32) -> Self {
        Self::from_rational(&Rational::from(x), digits)
    }

    /// Exact binary value of `x`, tagged with `digits`.
    pub fn from_f64(x: f64, digits: u32) -> Self {
        let digits = digits.max(1);
        BigReal {
            value: Float::with_val(digits_to_bits(digits).max(53), x),
            digits,
        }
    }

    /// Parse a decimal string ("0.186047272987975", "-1.5e-3", ...).
    pub fn parse(s: &str, digits: u32) -> Result<Self> {
        let digits = digits.max(1);
        let parsed =
            Float::parse(s.trim()).map_err(|e| Error::InvalidInput(format!("cannot parse '{s}' as a real: {e}")))?;
        Ok(BigReal {
            value: Float::with_val(digits_to_bits(digits), parsed),
            digits,
        })
    }

    pub fn zero(digits: u32) -> Self {
        Self::from_i64(0, digits)
    }

    pub fn value(&self) -> &Float {
        &self.value
    }

    pub fn into_float(self) -> Float {
        self.value
    }

    pub fn digits(&self) -> u32 {
        self.digits
    }

    /// Same value re-rounded to a different digit count.
    pub fn with_digits(&self, digits: u32) -> Self {
        Self::from_float(&self.value, digits)
    }

    pub fn to_f64(&self) -> f64 {
        self.value.to_f64()
    }

    pub fn is_zero(&self) -> bool {
        self.value.is_zero()
    }

    pub fn is_sign_negative(&self) -> bool {
        self.value.is_sign_negative() && !self.value.is_zero()
    }

    pub fn abs(&self) -> Self {
        BigReal {
            value: self.value.clone().abs(),
            digits: self.digits,
        }
    }

    pub fn ln(&self) -> Self {
        self.map(|v| v.ln())
    }

    pub fn exp(&self) -> Self {
        self.map(|v| v.exp())
    }

    pub fn sqrt(&self) -> Self {
        self.map(|v| v.sqrt())
    }

    pub fn cos(&self) -> Self {
        self.map(|v| v.cos())
    }

    pub fn sin(&self) -> Self {
        self.map(|v| v.sin())
    }

    /// Real power `self^e`; NaN for negative bases with non-integer exponents.
    pub fn pow(&self, e: &BigReal) -> Self {
        let digits = self.digits.max(e.digits);
        let prec = digits_to_bits(digits);
        BigReal {
            value: Float::with_val(prec, &self.value).pow(&e.value),
            digits,
        }
    }

    pub fn powi(&self, e: i32) -> Self {
        self.map(|v| v.pow(e))
    }

    /// Leading significant digits on which the two values agree.
    pub fn agreed_digits(&self, other: &BigReal) -> u32 {
        agreed_digits(&self.value, &other.value)
    }

    /// Agreement to `digits` significant digits.
    pub fn agrees_with(&self, other: &BigReal, digits: u32) -> bool {
        self.agreed_digits(other) >= digits
    }

    /// Equality up to the default comparison tolerance 10^-(digits-5), with
    /// `digits` the smaller of the two tags.
    pub fn approx_eq(&self, other: &BigReal) -> bool {
        let d = self.digits.min(other.digits);
        self.agrees_with(other, d.saturating_sub(5))
    }

    /// Decimal string with `digits` significant digits and a dot separator.
    /// Uses scientific notation with an `e` exponent when needed.
    pub fn to_decimal_string(&self) -> String {
        format_float(&self.value, self.digits as usize)
    }

    fn map(&self, f: impl FnOnce(Float) -> Float) -> Self {
        BigReal {
            value: f(self.value.clone()),
            digits: self.digits,
        }
    }
}

/// Format a float with `digits` significant digits.
pub fn format_float(x: &Float, digits: usize) -> String {
    if x.is_zero() {
        return "0".to_string();
    }
    if !x.is_finite() {
        return x.to_string();
    }
    let s = x.to_string_radix_round(10, Some(digits.max(1)), Round::Nearest);
    tidy_exponent(&s)
}

// rug renders "1.2500e-3" or "1.2500"; drop redundant trailing zeros in the
// mantissa and render small exponents positionally.
fn tidy_exponent(s: &str) -> String {
    let (mantissa, exp) = match s.find('e') {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i64>().unwrap_or(0)),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(m) => (true, m),
        None => (false, mantissa),
    };
    let (int_part, frac_part) = match mantissa.find('.') {
        Some(pos) => (&mantissa[..pos], &mantissa[pos + 1..]),
        None => (mantissa, ""),
    };
    let mut all: String = format!("{int_part}{frac_part}");
    // position of the decimal point measured from the start of `all`
    let mut point = int_part.len() as i64 + exp;
    let lead = all.len() - all.trim_start_matches('0').len();
    if lead == all.len() {
        return "0".to_string();
    }
    all.drain(..lead);
    point -= lead as i64;
    let trimmed = all.trim_end_matches('0').to_string();
    let sign = if neg { "-" } else { "" };
    let n = trimmed.len() as i64;
    if (-5..=21).contains(&point) {
        if point <= 0 {
            format!("{sign}0.{}{}", "0".repeat((-point) as usize), trimmed)
        } else if point >= n {
            format!("{sign}{}{}", trimmed, "0".repeat((point - n) as usize))
        } else {
            let (a, b) = trimmed.split_at(point as usize);
            format!("{sign}{a}.{b}")
        }
    } else {
        let (a, b) = trimmed.split_at(1);
        if b.is_empty() {
            format!("{sign}{a}e{}", point - 1)
        } else {
            format!("{sign}{a}.{b}e{}", point - 1)
        }
    }
}

impl fmt::Display for BigReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.to_decimal_string())
    }
}

impl PartialEq for BigReal {
    fn eq(&self, other: &Self) -> bool {
        self.value == other.value
    }
}

impl PartialOrd for BigReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        self.value.partial_cmp(&other.value)
    }
}

macro_rules! binop {
    ($trait:ident, $method:ident) => {
        impl $trait<&BigReal> for &BigReal {
            type Output = BigReal;
            fn $method(self, rhs: &BigReal) -> BigReal {
                let digits = self.digits.max(rhs.digits);
                BigReal {
                    value: Float::with_val(digits_to_bits(digits), (&self.value).$method(&rhs.value)),
                    digits,
                }
            }
        }
        impl $trait<BigReal> for BigReal {
            type Output = BigReal;
            fn $method(self, rhs: BigReal) -> BigReal {
                (&self).$method(&rhs)
            }
        }
    };
}

binop!(Add, add);
binop!(Sub, sub);
binop!(Mul, mul);
binop!(Div, div);

impl Neg for &BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        BigReal {
            value: Float::with_val(self.value.prec(), -&self.value),
            digits: self.digits,
        }
    }
}

impl Neg for BigReal {
    type Output = BigReal;
    fn neg(self) -> BigReal {
        -&self
    }
}

/// Working-precision schedule for order-dependent computations.
#[derive(Clone, Debug, PartialEq)]
pub struct PrecisionPolicy {
    pub base_digits: u32,
    pub per_order_digits: Rational,
    pub escalation_factor: Rational,
    pub max_escalations: u32,
}

impl Default for PrecisionPolicy {
    fn default() -> Self {
        PrecisionPolicy {
            base_digits: 40,
            per_order_digits: Rational::from(2),
            escalation_factor: Rational::from((3, 2)),
            max_escalations: 4,
        }
    }
}

impl PrecisionPolicy {
    pub fn new(base_digits: u32, per_order_digits: Rational, escalation_factor: Rational) -> Result<Self> {
        let policy = PrecisionPolicy {
            base_digits,
            per_order_digits,
            escalation_factor,
            max_escalations: 4,
        };
        policy.validate()?;
        Ok(policy)
    }

    pub fn validate(&self) -> Result<()> {
        if self.base_digits == 0 {
            return Err(Error::InvalidInput("base_digits must be positive".into()));
        }
        if self.per_order_digits < 0 {
            return Err(Error::InvalidInput("per_order_digits must be nonnegative".into()));
        }
        if self.escalation_factor <= 1 {
            return Err(Error::InvalidInput("escalation_factor must exceed 1".into()));
        }
        Ok(())
    }

    /// `base_digits + ceil(per_order_digits * order)`.
    pub fn working_digits(&self, order: usize) -> u32 {
        let extra = Rational::from(&self.per_order_digits * Integer::from(order));
        let extra = extra.ceil().numer().to_u32().unwrap_or(u32::MAX);
        self.base_digits.saturating_add(extra)
    }

    /// `ceil(escalation_factor * digits)`, strictly larger than `digits`.
    pub fn escalate(&self, digits: u32) -> u32 {
        let up = Rational::from(&self.escalation_factor * Integer::from(digits));
        let up = up.ceil().numer().to_u32().unwrap_or(u32::MAX);
        up.max(digits + 1)
    }

    pub fn escalated_digits(&self, order: usize) -> u32 {
        self.escalate(self.working_digits(order))
    }
}

/// Guard digits kept above the target when choosing the first working precision.
const TARGET_GUARD: u32 = 5;

/// Run `compute` at the policy's working precision for `order` and again at
/// escalated precision; accept once the two runs agree to `target_digits`.
///
/// `compute` receives the number of decimal digits to work at. On
/// disagreement the pair is escalated again, up to `policy.max_escalations`
/// times, before giving up with [`Error::PrecisionExhausted`].
pub fn verified_eval<F>(policy: &PrecisionPolicy, order: usize, target_digits: u32, compute: F) -> Result<BigReal>
where
    F: Fn(u32) -> Result<Float>,
{
    let mut out = verified_eval_many(policy, order, target_digits, |d| Ok(vec![compute(d)?]))?;
    Ok(out.remove(0))
}

/// Vector form of [`verified_eval`]: every component must agree.
pub fn verified_eval_many<F>(
    policy: &PrecisionPolicy,
    order: usize,
    target_digits: u32,
    compute: F,
) -> Result<Vec<BigReal>>
where
    F: Fn(u32) -> Result<Vec<Float>>,
{
    let target_digits = target_digits.max(1);
    let mut low = policy.working_digits(order).max(target_digits + TARGET_GUARD);
    let mut previous = compute(low)?;
    let mut worst = 0;
    let mut high = low;
    for _ in 0..=policy.max_escalations {
        high = policy.escalate(low);
        let current = compute(high)?;
        if current.len() != previous.len() {
            return Err(Error::InvalidInput(
                "computation changed its output length with precision".into(),
            ));
        }
        worst = previous
            .iter()
            .zip(&current)
            .map(|(a, b)| agreed_digits(a, b))
            .min()
            .unwrap_or(MAX_AGREEMENT);
        if worst >= target_digits {
            return Ok(current.iter().map(|v| BigReal::from_float(v, target_digits)).collect());
        }
        previous = current;
        low = high;
    }
    Err(Error::PrecisionExhausted {
        target: target_digits,
        agreed: worst,
        low,
        high,
    })
}

/// Generalized binomial coefficient `C(a, m)` for rational `a`.
pub fn rational_binomial(a: &Rational, m: u32) -> Rational {
    let mut acc = Rational::from(1);
    for i in 0..m {
        acc *= Rational::from(a - i);
        acc /= i + 1;
    }
    acc
}

/// `C((1 - 3j)/2, m)`, the binomial appearing in the reexpansion of the
/// perturbation series under `omega -> sqrt(Omega^2 - g sigma / Omega)`.
pub fn half_binomial(j: u32, m: u32) -> Rational {
    rational_binomial(&half_index(j), m)
}

/// The upper index `(1 - 3j)/2`.
pub fn half_index(j: u32) -> Rational {
    Rational::from((1 - 3 * i64::from(j), 2))
}

/// Table of `C((1 - 3j)/2, m)` for all `j + m <= max_order`, built row by row
/// from `C(a, m) = C(a, m - 1) (a - m + 1) / m`.
#[derive(Clone, Debug)]
pub struct HalfBinomialTable {
    rows: Vec<Vec<Rational>>,
    max_order: usize,
}

impl HalfBinomialTable {
    pub fn new(max_order: usize) -> Self {
        let rows = (0..=max_order)
            .map(|j| {
                let len = max_order - j + 1;
                let mut row = Vec::with_capacity(len);
                row.push(Rational::from(1));
                for m in 1..len {
                    // (a - m + 1)/m with a = (1 - 3j)/2
                    let step = Rational::from((3 - 3 * j as i64 - 2 * m as i64, 2 * m as i64));
                    let next = Rational::from(&row[m - 1] * &step);
                    row.push(next);
                }
                row
            })
            .collect();
        HalfBinomialTable { rows, max_order }
    }

    pub fn max_order(&self) -> usize {
        self.max_order
    }

    /// `C((1 - 3j)/2, m)`; panics if `j + m` exceeds the table order.
    pub fn get(&self, j: usize, m: usize) -> &Rational {
        &self.rows[j][m]
    }

    pub fn try_get(&self, j: usize, m: usize) -> Option<&Rational> {
        self.rows.get(j).and_then(|row| row.get(m))
    }
}

/// Ordinary binomial `C(k, n)` as an exact integer.
pub fn int_binomial(k: u32, n: u32) -> Integer {
    Integer::from(k).binomial(n)
}
