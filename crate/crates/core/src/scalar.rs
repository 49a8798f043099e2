//! Coefficient fields for algebra elements.
//!
//! Two scalar types back every computation: `Complex64` for floating-point
//! work and [`Exact`], a complex number with rational real and imaginary
//! parts, for proof-grade arithmetic.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

/// Coefficients pruned below this magnitude in floating-point elements.
pub const FLOAT_PRUNE: f64 = 1e-14;

/// Scalar field usable as the coefficient ring of an algebra element.
pub trait Coefficient: Clone + PartialEq + std::fmt::Debug + Send + Sync + 'static {
    fn zero() -> Self;
    fn one() -> Self;
    fn from_int(n: i64) -> Self;
    /// The rational n/d embedded in the field. Panics if `d == 0`.
    fn from_ratio(n: i64, d: i64) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn mul(&self, other: &Self) -> Self;
    fn neg(&self) -> Self;
    fn conj(&self) -> Self;
    /// Whether the coefficient should be dropped from a term map.
    fn is_negligible(&self) -> bool;
    /// Modulus as a float (used for l1 norms and diagnostics).
    fn modulus(&self) -> f64;
    fn to_c64(&self) -> Complex64;
    fn render(&self) -> String;
}

impl Coefficient for Complex64 {
    fn zero() -> Self {
        Complex64::ZERO
    }

    fn one() -> Self {
        Complex64::ONE
    }

    fn from_int(n: i64) -> Self {
        Complex64::new(n as f64, 0.0)
    }

    fn from_ratio(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Complex64::new(n as f64 / d as f64, 0.0)
    }

    fn add(&self, other: &Self) -> Self {
        self + other
    }

    fn mul(&self, other: &Self) -> Self {
        self * other
    }

    fn neg(&self) -> Self {
        -self
    }

    fn conj(&self) -> Self {
        Complex64::conj(self)
    }

    fn is_negligible(&self) -> bool {
        self.norm() < FLOAT_PRUNE
    }

    fn modulus(&self) -> f64 {
        self.norm()
    }

    fn to_c64(&self) -> Complex64 {
        *self
    }

    fn render(&self) -> String {
        if self.im == 0.0 {
            format!("{}", self.re)
        } else if self.re == 0.0 {
            format!("{}i", self.im)
        } else if self.im < 0.0 {
            format!("({}{}i)", self.re, self.im)
        } else {
            format!("({}+{}i)", self.re, self.im)
        }
    }
}

/// Complex number with rational components. Arithmetic never rounds.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Exact {
    pub re: BigRational,
    pub im: BigRational,
}

impl Exact {
    pub fn new(re: BigRational, im: BigRational) -> Self {
        Exact { re, im }
    }

    pub fn real(re: BigRational) -> Self {
        Exact {
            re,
            im: BigRational::zero(),
        }
    }

    pub fn ratio(n: i64, d: i64) -> Self {
        assert!(d != 0, "zero denominator");
        Exact::real(BigRational::new(BigInt::from(n), BigInt::from(d)))
    }

    pub fn int(n: i64) -> Self {
        Exact::real(BigRational::from_integer(BigInt::from(n)))
    }

    pub fn i() -> Self {
        Exact {
            re: BigRational::zero(),
            im: BigRational::one(),
        }
    }

    pub fn is_real(&self) -> bool {
        self.im.is_zero()
    }

    /// |c|^2, always rational.
    pub fn modulus_squared(&self) -> BigRational {
        &self.re * &self.re + &self.im * &self.im
    }

    /// |c| when it happens to be rational, i.e. when |c|^2 is a perfect
    /// square of rationals. A general complex rational has irrational
    /// modulus, in which case this returns `None`.
    pub fn modulus_exact(&self) -> Option<BigRational> {
        rational_sqrt(&self.modulus_squared())
    }

    pub fn sub(&self, other: &Self) -> Self {
        Exact {
            re: &self.re - &other.re,
            im: &self.im - &other.im,
        }
    }
}

impl Coefficient for Exact {
    fn zero() -> Self {
        Exact::int(0)
    }

    fn one() -> Self {
        Exact::int(1)
    }

    fn from_int(n: i64) -> Self {
        Exact::int(n)
    }

    fn from_ratio(n: i64, d: i64) -> Self {
        Exact::ratio(n, d)
    }

    fn add(&self, other: &Self) -> Self {
        Exact {
            re: &self.re + &other.re,
            im: &self.im + &other.im,
        }
    }

    fn mul(&self, other: &Self) -> Self {
        Exact {
            re: &self.re * &other.re - &self.im * &other.im,
            im: &self.re * &other.im + &self.im * &other.re,
        }
    }

    fn neg(&self) -> Self {
        Exact {
            re: -self.re.clone(),
            im: -self.im.clone(),
        }
    }

    fn conj(&self) -> Self {
        Exact {
            re: self.re.clone(),
            im: -self.im.clone(),
        }
    }

    fn is_negligible(&self) -> bool {
        self.re.is_zero() && self.im.is_zero()
    }

    fn modulus(&self) -> f64 {
        let sq = self.modulus_squared();
        sq.to_f64().map(|v| v.sqrt()).unwrap_or(f64::INFINITY)
    }

    fn to_c64(&self) -> Complex64 {
        Complex64::new(
            self.re.to_f64().unwrap_or(f64::NAN),
            self.im.to_f64().unwrap_or(f64::NAN),
        )
    }

    fn render(&self) -> String {
        if self.im.is_zero() {
            render_rational(&self.re)
        } else if self.re.is_zero() {
            format!("{}i", render_rational(&self.im))
        } else if self.im.is_negative() {
            format!("({}{}i)", render_rational(&self.re), render_rational(&self.im))
        } else {
            format!("({}+{}i)", render_rational(&self.re), render_rational(&self.im))
        }
    }
}

fn render_rational(r: &BigRational) -> String {
    if r.denom().is_one() {
        format!("{}", r.numer())
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Exact square root of a nonnegative rational, if one exists.
pub fn rational_sqrt(r: &BigRational) -> Option<BigRational> {
    if r.is_negative() {
        return None;
    }
    let ns = r.numer().sqrt();
    let ds = r.denom().sqrt();
    if &(&ns * &ns) == r.numer() && &(&ds * &ds) == r.denom() {
        Some(BigRational::new(ns, ds))
    } else {
        None
    }
}
