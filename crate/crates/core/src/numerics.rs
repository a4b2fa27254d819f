//! Extended-range signed arithmetic and 2x2 linear algebra.
//!
//! The derivative cocycles studied in this crate produce quantities like
//! `sigma^(-2^40)` or `lambda^n sigma^m` with `n, m` in the billions, far
//! outside the dynamic range of `f64`. [`LogValue`] stores a sign and the
//! natural log of the magnitude, [`SigmaPower`] stores an exact signed
//! integer power of a fixed base `sigma`, and [`Mat2`]/[`SpMat2`] carry
//! the 2x2 cocycle matrices over those scalars.

// The arithmetic methods are named add/sub/mul/neg on purpose; the std
// operator traits are not implemented because several of these operations
// are fallible or sign-aware in ways the traits cannot express uniformly.
#![allow(clippy::should_implement_trait)]
// Index-based loops over fixed 2x2 matrices read better than iterator chains.
#![allow(clippy::needless_range_loop)]

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum NumericsError {
    #[error("exponent arithmetic overflowed i128")]
    ExponentOverflow,
    #[error("zero cannot be raised to a non-positive power")]
    ZeroToNonPositive,
    #[error("sum of sigma-powers with equal exponent and equal sign is not a sigma-power")]
    InexactSigmaSum,
}

/// Signed number stored as `sign * exp(logmag)`.
///
/// `sign == 0` means exactly zero; `logmag` is ignored in that case.
/// Cancellation in [`LogValue::add`] produces the distinguished zero, not
/// `logmag = -inf`.
///
/// `logmag` is an `f64`, so integer exponents above 2^52 lose exactness;
/// the GGS cocycle, which needs bitwise-exact exponents, uses
/// [`SigmaPower`] instead.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogValue {
    sign: i8,
    logmag: f64,
}

impl LogValue {
    pub const ZERO: LogValue = LogValue { sign: 0, logmag: 0.0 };
    pub const ONE: LogValue = LogValue { sign: 1, logmag: 0.0 };

    pub fn new(sign: i8, logmag: f64) -> Self {
        debug_assert!(sign == -1 || sign == 0 || sign == 1);
        if sign == 0 {
            Self::ZERO
        } else {
            LogValue { sign, logmag }
        }
    }

    pub fn from_real(x: f64) -> Self {
        if x == 0.0 {
            Self::ZERO
        } else {
            LogValue { sign: if x > 0.0 { 1 } else { -1 }, logmag: x.abs().ln() }
        }
    }

    pub fn to_real(self) -> f64 {
        f64::from(self.sign) * self.logmag.exp()
    }

    pub fn sign(self) -> i8 {
        self.sign
    }

    /// Natural log of |self|. Meaningless for zero.
    pub fn logmag(self) -> f64 {
        self.logmag
    }

    pub fn is_zero(self) -> bool {
        self.sign == 0
    }

    pub fn neg(self) -> Self {
        LogValue { sign: -self.sign, logmag: self.logmag }
    }

    pub fn abs(self) -> Self {
        LogValue { sign: self.sign.abs(), logmag: self.logmag }
    }

    /// Sign-aware log-sum-exp addition. Exact cancellation yields zero.
    pub fn add(self, other: Self) -> Self {
        if self.sign == 0 {
            return other;
        }
        if other.sign == 0 {
            return self;
        }
        let (hi, lo) = if self.logmag >= other.logmag { (self, other) } else { (other, self) };
        let diff = lo.logmag - hi.logmag; // <= 0
        if self.sign == other.sign {
            LogValue { sign: hi.sign, logmag: hi.logmag + diff.exp().ln_1p() }
        } else if diff == 0.0 {
            Self::ZERO
        } else {
            LogValue { sign: hi.sign, logmag: hi.logmag + (-diff.exp()).ln_1p() }
        }
    }

    pub fn sub(self, other: Self) -> Self {
        self.add(other.neg())
    }

    pub fn mul(self, other: Self) -> Self {
        if self.sign == 0 || other.sign == 0 {
            return Self::ZERO;
        }
        LogValue { sign: self.sign * other.sign, logmag: self.logmag + other.logmag }
    }

    /// Integer power. `zero^e` is zero for `e > 0` and an error otherwise.
    pub fn powi(self, e: i128) -> Result<Self, NumericsError> {
        if self.sign == 0 {
            return if e > 0 { Ok(Self::ZERO) } else { Err(NumericsError::ZeroToNonPositive) };
        }
        let sign = if self.sign == -1 && e.rem_euclid(2) == 1 { -1 } else { 1 };
        Ok(LogValue { sign, logmag: self.logmag * e as f64 })
    }

    /// |self| <= |other| as magnitudes.
    pub fn mag_le(self, other: Self) -> bool {
        match (self.sign == 0, other.sign == 0) {
            (true, _) => true,
            (false, true) => false,
            (false, false) => self.logmag <= other.logmag,
        }
    }
}

/// Exactly `sign * sigma^exponent` for the ambient base `sigma > 1`.
///
/// The base itself is not stored; exponent arithmetic is exact i128 with
/// checked overflow.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SigmaPower {
    pub sign: i8,
    pub exponent: i128,
}

impl SigmaPower {
    pub fn new(sign: i8, exponent: i128) -> Self {
        debug_assert!(sign == 1 || sign == -1);
        SigmaPower { sign, exponent }
    }

    pub fn one() -> Self {
        SigmaPower { sign: 1, exponent: 0 }
    }

    pub fn mul(self, other: Self) -> Result<Self, NumericsError> {
        let exponent = self
            .exponent
            .checked_add(other.exponent)
            .ok_or(NumericsError::ExponentOverflow)?;
        Ok(SigmaPower { sign: self.sign * other.sign, exponent })
    }

    pub fn neg(self) -> Self {
        SigmaPower { sign: -self.sign, exponent: self.exponent }
    }

    /// Lower to a [`LogValue`] given `ln(sigma)`.
    pub fn to_log(self, ln_sigma: f64) -> LogValue {
        LogValue::new(self.sign, self.exponent as f64 * ln_sigma)
    }
}

/// Column vector over [`LogValue`].
pub type Vec2 = [LogValue; 2];

/// Log of the Euclidean norm of `v`, as a non-negative-sign [`LogValue`].
pub fn vec_lognorm(v: Vec2) -> LogValue {
    let sq = |x: LogValue| x.abs().mul(x.abs());
    let s = sq(v[0]).add(sq(v[1]));
    match s.sign() {
        0 => LogValue::ZERO,
        _ => LogValue::new(1, 0.5 * s.logmag()),
    }
}

/// 2x2 matrix over [`LogValue`], row-major.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Mat2 {
    pub e: [[LogValue; 2]; 2],
}

impl Mat2 {
    pub fn new(a11: LogValue, a12: LogValue, a21: LogValue, a22: LogValue) -> Self {
        Mat2 { e: [[a11, a12], [a21, a22]] }
    }

    pub fn identity() -> Self {
        Mat2::new(LogValue::ONE, LogValue::ZERO, LogValue::ZERO, LogValue::ONE)
    }

    pub fn from_reals(m: [[f64; 2]; 2]) -> Self {
        Mat2 {
            e: [
                [LogValue::from_real(m[0][0]), LogValue::from_real(m[0][1])],
                [LogValue::from_real(m[1][0]), LogValue::from_real(m[1][1])],
            ],
        }
    }

    pub fn mul(self, rhs: Self) -> Self {
        let mut out = [[LogValue::ZERO; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                *cell = self.e[i][0].mul(rhs.e[0][j]).add(self.e[i][1].mul(rhs.e[1][j]));
            }
        }
        Mat2 { e: out }
    }

    pub fn apply(self, v: Vec2) -> Vec2 {
        [
            self.e[0][0].mul(v[0]).add(self.e[0][1].mul(v[1])),
            self.e[1][0].mul(v[0]).add(self.e[1][1].mul(v[1])),
        ]
    }
}

/// 2x2 matrix whose entries are zero or exact signed powers of sigma.
///
/// The GGS cocycle matrices are (anti-)diagonal of this shape, and the
/// shape is closed under the products that arise there: every entry of a
/// product is a sum of terms of which at most one is nonzero, unless two
/// equal powers cancel exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SpMat2 {
    pub e: [[Option<SigmaPower>; 2]; 2],
}

impl SpMat2 {
    pub fn new(e: [[Option<SigmaPower>; 2]; 2]) -> Self {
        SpMat2 { e }
    }

    pub fn identity() -> Self {
        SpMat2 {
            e: [[Some(SigmaPower::one()), None], [None, Some(SigmaPower::one())]],
        }
    }

    pub fn scale(self, s: i8) -> Self {
        debug_assert!(s == 1 || s == -1);
        let mut out = self;
        for row in out.e.iter_mut() {
            for p in row.iter_mut().flatten() {
                p.sign *= s;
            }
        }
        out
    }

    pub fn mul(self, rhs: Self) -> Result<Self, NumericsError> {
        let mut out = [[None; 2]; 2];
        for (i, row) in out.iter_mut().enumerate() {
            for (j, cell) in row.iter_mut().enumerate() {
                let mut acc: Option<SigmaPower> = None;
                for k in 0..2 {
                    let term = match (self.e[i][k], rhs.e[k][j]) {
                        (Some(a), Some(b)) => Some(a.mul(b)?),
                        _ => None,
                    };
                    acc = match (acc, term) {
                        (None, t) => t,
                        (a, None) => a,
                        (Some(a), Some(t)) if a.exponent == t.exponent && a.sign != t.sign => None,
                        _ => return Err(NumericsError::InexactSigmaSum),
                    };
                }
                *cell = acc;
            }
        }
        Ok(SpMat2 { e: out })
    }

    pub fn to_log(self, ln_sigma: f64) -> Mat2 {
        let conv = |c: Option<SigmaPower>| match c {
            Some(p) => p.to_log(ln_sigma),
            None => LogValue::ZERO,
        };
        Mat2 {
            e: [
                [conv(self.e[0][0]), conv(self.e[0][1])],
                [conv(self.e[1][0]), conv(self.e[1][1])],
            ],
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
    }

    #[test]
    fn round_trip() {
        for &x in &[1.0, -2.5, 1e-300, -1e300, 3.7e-150] {
            let lv = LogValue::from_real(x);
            assert!(close(lv.to_real(), x, 1e-12), "{x}");
        }
        assert!(LogValue::from_real(0.0).is_zero());
    }

    #[test]
    fn add_small_reals() {
        let two = LogValue::from_real(2.0);
        let three = LogValue::from_real(3.0);
        let five = two.add(three);
        assert_eq!(five.sign(), 1);
        assert!(close(five.logmag(), 5.0f64.ln(), 1e-14));
    }

    #[test]
    fn add_exact_cancellation() {
        let x = LogValue::new(1, 123.456);
        assert!(x.add(x.neg()).is_zero());
    }

    #[test]
    fn add_far_below_float_range() {
        // (+, -41000) + (-, -42000): the correction ln(1 - e^-1000) is below
        // f64 resolution, so the expected logmag is -41000 exactly.
        let x = LogValue::new(1, -41000.0);
        let y = LogValue::new(-1, -42000.0);
        let s = x.add(y);
        assert_eq!(s.sign(), 1);
        assert!((s.logmag() - (-41000.0 + (-(-1000.0f64).exp()).ln_1p())).abs() < 1e-12);
        assert!((s.logmag() + 41000.0).abs() < 1e-12);
    }

    #[test]
    fn mul_signs() {
        let m = LogValue::new(-1, 0.0).mul(LogValue::new(-1, 0.0));
        assert_eq!(m, LogValue::ONE);
    }

    #[test]
    fn pow_large_exponent() {
        let sigma = LogValue::from_real(2.0);
        let e: i128 = -(1i128 << 28) * 2;
        let p = sigma.powi(e).unwrap();
        assert_eq!(p.sign(), 1);
        assert!(close(p.logmag(), -(1i128 << 29) as f64 * 2.0f64.ln(), 1e-14));
    }

    #[test]
    fn pow_zero_errors() {
        assert_eq!(LogValue::ZERO.powi(0), Err(NumericsError::ZeroToNonPositive));
        assert_eq!(LogValue::ZERO.powi(-3), Err(NumericsError::ZeroToNonPositive));
        assert!(LogValue::ZERO.powi(5).unwrap().is_zero());
    }

    #[test]
    fn mat2_identity() {
        let a = Mat2::from_reals([[1.5, -0.25], [3.0, 0.125]]);
        assert_eq!(Mat2::identity().mul(a), a);
    }

    #[test]
    fn sigma_power_overflow_is_error() {
        let a = SigmaPower::new(1, i128::MAX);
        let b = SigmaPower::new(1, 1);
        assert_eq!(a.mul(b), Err(NumericsError::ExponentOverflow));
    }

    #[test]
    fn vec_lognorm_matches_float() {
        let v = [LogValue::from_real(3.0), LogValue::from_real(-4.0)];
        assert!(close(vec_lognorm(v).logmag(), 5.0f64.ln(), 1e-14));
        assert!(vec_lognorm([LogValue::ZERO, LogValue::ZERO]).is_zero());
    }

    fn small() -> impl Strategy<Value = f64> {
        (-10.0f64..10.0).prop_filter("nonzero", |x| x.abs() > 1e-6)
    }

    proptest! {
        #[test]
        fn lv_add_commutes(a in small(), b in small()) {
            let (x, y) = (LogValue::from_real(a), LogValue::from_real(b));
            let ab = x.add(y);
            let ba = y.add(x);
            prop_assert_eq!(ab.sign(), ba.sign());
            if !ab.is_zero() {
                prop_assert!((ab.logmag() - ba.logmag()).abs() < 1e-12);
            }
        }

        #[test]
        fn lv_mul_assoc_exact(a in small(), b in small(), c in small()) {
            let (x, y, z) = (LogValue::from_real(a), LogValue::from_real(b), LogValue::from_real(c));
            let l = x.mul(y).mul(z);
            let r = x.mul(y.mul(z));
            prop_assert_eq!(l.sign(), r.sign());
            // logmag addition is commutative/associative up to rounding
            prop_assert!((l.logmag() - r.logmag()).abs() < 1e-12);
        }

        #[test]
        fn mat2_mul_assoc(m in proptest::array::uniform3(proptest::array::uniform4(small()))) {
            let mk = |v: [f64; 4]| Mat2::from_reals([[v[0], v[1]], [v[2], v[3]]]);
            let (a, b, c) = (mk(m[0]), mk(m[1]), mk(m[2]));
            let l = a.mul(b).mul(c);
            let r = a.mul(b.mul(c));
            for i in 0..2 {
                for j in 0..2 {
                    let (x, y) = (l.e[i][j], r.e[i][j]);
                    if x.is_zero() || y.is_zero() {
                        // cancellation only to rounding level: compare as reals
                        prop_assert!(close(x.to_real(), y.to_real(), 1e-8));
                    } else {
                        prop_assert_eq!(x.sign(), y.sign());
                        prop_assert!((x.logmag() - y.logmag()).abs()
                            <= 1e-10 * x.logmag().abs().max(1.0));
                    }
                }
            }
        }

        #[test]
        fn mat2_product_matches_float(m in proptest::array::uniform2(proptest::array::uniform4(small()))) {
            let (a, b) = (
                [[m[0][0], m[0][1]], [m[0][2], m[0][3]]],
                [[m[1][0], m[1][1]], [m[1][2], m[1][3]]],
            );
            let prod = Mat2::from_reals(a).mul(Mat2::from_reals(b));
            for i in 0..2 {
                for j in 0..2 {
                    let direct = a[i][0] * b[0][j] + a[i][1] * b[1][j];
                    prop_assert!(close(prod.e[i][j].to_real(), direct, 1e-10));
                }
            }
        }
    }
}
