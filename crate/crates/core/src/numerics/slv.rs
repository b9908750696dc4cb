use std::cmp::Ordering;
use std::fmt;
use std::ops::{Mul, Neg};

use super::summation::CompensatedSum;
use crate::error::{Error, Result};

/// Cancellation threshold of [`slv_sum`]: a sum whose magnitude falls below
/// this fraction of its largest term is reported as exactly zero.
pub const FLUSH_RELATIVE: f64 = 1e-14;

const MANT_MASK: u64 = (1 << 52) - 1;
const EXP_BIAS: i64 = 1023;

/// A real number held as a sign and a logarithmic magnitude.
///
/// The base-2 logarithm of the magnitude is split into an integer part and a
/// mantissa in `[1, 2)`, so the exponent range is effectively unbounded while
/// every finite `f64` converts in and out without rounding. The natural log of
/// the magnitude is available through [`SignedLogValue::log_mag`].
#[derive(Clone, Copy, PartialEq)]
pub struct SignedLogValue {
    sign: i8,
    mant: f64,
    exp: i64,
}

impl SignedLogValue {
    pub const ZERO: Self = Self { sign: 0, mant: 0.0, exp: 0 };
    pub const ONE: Self = Self { sign: 1, mant: 1.0, exp: 0 };

    /// Converts a finite real.
    pub fn from_real(v: f64) -> Result<Self> {
        if !v.is_finite() {
            return Err(Error::Domain(format!("non-finite value {v}")));
        }
        Ok(Self::from_finite(v))
    }

    pub(crate) fn from_finite(v: f64) -> Self {
        if v == 0.0 {
            return Self::ZERO;
        }
        let (mant, exp) = frexp(v.abs());
        Self { sign: if v < 0.0 { -1 } else { 1 }, mant, exp }
    }

    /// Builds `sign * exp(ln_mag)`. A magnitude of `-inf` yields zero.
    pub fn from_ln(sign: i8, ln_mag: f64) -> Self {
        if sign == 0 || ln_mag == f64::NEG_INFINITY {
            return Self::ZERO;
        }
        debug_assert!(ln_mag.is_finite(), "log magnitude {ln_mag} not finite");
        let log2 = ln_mag * std::f64::consts::LOG2_E;
        let exp = log2.floor() as i64;
        // ln_mag - exp * ln 2, with ln 2 split so the product is exact
        let e = exp as f64;
        let frac = (-e).mul_add(LN2_HI, ln_mag) - e * LN2_LO;
        SignedLogValue { sign: sign.signum(), mant: frac.exp(), exp }.normalized()
    }

    fn normalized(mut self) -> Self {
        if self.sign == 0 || self.mant == 0.0 {
            return Self::ZERO;
        }
        while self.mant >= 2.0 {
            self.mant *= 0.5;
            self.exp += 1;
        }
        while self.mant < 1.0 {
            self.mant *= 2.0;
            self.exp -= 1;
        }
        self
    }

    /// Sign in `{-1, 0, 1}`.
    pub fn sign(&self) -> i8 {
        self.sign
    }

    /// Natural log of the magnitude; `-inf` for zero.
    pub fn log_mag(&self) -> f64 {
        if self.sign == 0 {
            return f64::NEG_INFINITY;
        }
        self.mant.ln() + (self.exp as f64) * std::f64::consts::LN_2
    }

    pub fn is_zero(&self) -> bool {
        self.sign == 0
    }

    /// Nearest `f64`; saturates to `±inf` or flushes to zero outside the
    /// representable range.
    pub fn to_real(&self) -> f64 {
        if self.sign == 0 {
            return 0.0;
        }
        self.sign as f64 * ldexp(self.mant, self.exp)
    }

    pub fn abs(&self) -> Self {
        Self { sign: self.sign.abs(), ..*self }
    }

    /// Multiplies by `exp(ln_factor)`.
    pub fn scale_ln(&self, ln_factor: f64) -> Self {
        if self.sign == 0 {
            return *self;
        }
        *self * Self::from_ln(1, ln_factor)
    }

    /// Magnitude comparison, ignoring sign.
    pub fn cmp_abs(&self, other: &Self) -> Ordering {
        match (self.sign == 0, other.sign == 0) {
            (true, true) => Ordering::Equal,
            (true, false) => Ordering::Less,
            (false, true) => Ordering::Greater,
            (false, false) => self
                .exp
                .cmp(&other.exp)
                .then(self.mant.partial_cmp(&other.mant).unwrap_or(Ordering::Equal)),
        }
    }

    pub fn powi(&self, n: i32) -> Self {
        if n == 0 {
            return Self::ONE;
        }
        let sign = if n % 2 == 0 { self.sign.abs() } else { self.sign };
        Self::from_ln(sign, self.log_mag() * n as f64)
    }
}

const LN2_HI: f64 = 6.931_471_803_691_238_164_90e-1;
const LN2_LO: f64 = 1.908_214_929_270_587_700_02e-10;

impl fmt::Debug for SignedLogValue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.sign {
            0 => write!(f, "SLV(0)"),
            s => write!(f, "SLV({}, ln {})", if s > 0 { '+' } else { '-' }, self.log_mag()),
        }
    }
}

impl Mul for SignedLogValue {
    type Output = Self;

    fn mul(self, rhs: Self) -> Self {
        slv_product(self, rhs)
    }
}

impl Neg for SignedLogValue {
    type Output = Self;

    fn neg(self) -> Self {
        Self { sign: -self.sign, ..self }
    }
}

/// Product of two values: signs multiply, log-magnitudes add, zero absorbs.
pub fn slv_product(a: SignedLogValue, b: SignedLogValue) -> SignedLogValue {
    if a.sign == 0 || b.sign == 0 {
        return SignedLogValue::ZERO;
    }
    SignedLogValue {
        sign: a.sign * b.sign,
        mant: a.mant * b.mant,
        exp: a.exp.saturating_add(b.exp),
    }
    .normalized()
}

/// Sum of signed log-domain terms.
///
/// Terms are rescaled against the largest magnitude and accumulated with a
/// compensated sum in a fixed (input) order. If the result is smaller than
/// [`FLUSH_RELATIVE`] times the largest term it is returned as exact zero.
/// An empty slice sums to zero.
pub fn slv_sum(terms: &[SignedLogValue]) -> SignedLogValue {
    let Some(exp_max) = terms.iter().filter(|t| t.sign != 0).map(|t| t.exp).max() else {
        return SignedLogValue::ZERO;
    };
    let mut acc = CompensatedSum::new();
    let mut dominant = 0.0f64;
    for t in terms.iter().filter(|t| t.sign != 0) {
        let scaled = t.sign as f64 * ldexp(t.mant, t.exp - exp_max);
        dominant = dominant.max(scaled.abs());
        acc.add(scaled);
    }
    let total = acc.total();
    if total.abs() < FLUSH_RELATIVE * dominant || total == 0.0 {
        return SignedLogValue::ZERO;
    }
    let (mant, exp) = frexp(total.abs());
    SignedLogValue {
        sign: if total < 0.0 { -1 } else { 1 },
        mant,
        exp: exp + exp_max,
    }
}

/// Splits a positive finite `v` into `mant * 2^exp` with `mant` in `[1, 2)`.
fn frexp(v: f64) -> (f64, i64) {
    debug_assert!(v > 0.0 && v.is_finite());
    let bits = v.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    if biased == 0 {
        // subnormal
        let (m, e) = frexp(v * 2f64.powi(64));
        return (m, e - 64);
    }
    let mant = f64::from_bits((bits & MANT_MASK) | ((EXP_BIAS as u64) << 52));
    (mant, biased - EXP_BIAS)
}

fn pow2(exp: i64) -> f64 {
    debug_assert!((-1022..=1023).contains(&exp));
    f64::from_bits(((exp + EXP_BIAS) as u64) << 52)
}

/// `mant * 2^exp` with a single rounding when the result is subnormal.
fn ldexp(mant: f64, exp: i64) -> f64 {
    if exp > 1023 {
        return f64::INFINITY;
    }
    if exp >= -1022 {
        return mant * pow2(exp);
    }
    if exp < -1076 {
        return 0.0;
    }
    mant * pow2(exp + 1022) * pow2(-1022)
}
