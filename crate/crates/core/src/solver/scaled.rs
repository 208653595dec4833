//! Complex numbers with a separate power-of-two exponent, so `z^N` never overflows.

use num_complex::Complex;
use num_traits::{Float, FromPrimitive};
use twofloat::TwoFloat;

/// Real scalar usable by the solvers: `f64` or double-double.
pub trait Real: Float + FromPrimitive + Send + Sync + std::fmt::Debug + 'static {
    fn of(x: f64) -> Self;
    fn approx(self) -> f64;
    /// Relative rounding error of one operation.
    fn roundoff() -> f64;
}

impl Real for f64 {
    fn of(x: f64) -> Self {
        x
    }

    fn approx(self) -> f64 {
        self
    }

    fn roundoff() -> f64 {
        f64::EPSILON
    }
}

impl Real for TwoFloat {
    fn of(x: f64) -> Self {
        TwoFloat::from(x)
    }

    fn approx(self) -> f64 {
        self.hi() + self.lo()
    }

    // TwoFloat::EPSILON is the smallest normal f64, not the roundoff.
    fn roundoff() -> f64 {
        2f64.powi(-104)
    }
}

pub fn cast<T: Real>(z: Complex<f64>) -> Complex<T> {
    Complex::new(T::of(z.re), T::of(z.im))
}

pub fn uncast<T: Real>(z: Complex<T>) -> Complex<f64> {
    Complex::new(z.re.approx(), z.im.approx())
}

fn pow2<T: Real>(k: i64) -> T {
    T::of(2f64.powi(k.clamp(-1100, 1100) as i32))
}

const HI: f64 = 1e120;
const LO: f64 = 1e-120;

/// `m * 2^e`.
#[derive(Clone, Copy, Debug)]
pub struct Scaled<T> {
    pub m: Complex<T>,
    pub e: i64,
}

impl<T: Real> Scaled<T> {
    pub fn zero() -> Self {
        Self {
            m: Complex::new(T::zero(), T::zero()),
            e: 0,
        }
    }

    pub fn one() -> Self {
        Self {
            m: Complex::new(T::one(), T::zero()),
            e: 0,
        }
    }

    pub fn new(m: Complex<T>) -> Self {
        Self { m, e: 0 }.normalized()
    }

    fn size(&self) -> f64 {
        self.m.re.abs().approx().max(self.m.im.abs().approx())
    }

    pub fn is_zero(&self) -> bool {
        self.m.re == T::zero() && self.m.im == T::zero()
    }

    /// Rescale the mantissa to unit size when it drifts far from one.
    fn normalized(mut self) -> Self {
        let a = self.size();
        if a == 0.0 || !a.is_finite() || (LO..=HI).contains(&a) {
            return self;
        }
        let k = a.log2().floor() as i64;
        let s = pow2::<T>(-k);
        self.m = Complex::new(self.m.re * s, self.m.im * s);
        self.e += k;
        self
    }

    pub fn mul(self, o: Self) -> Self {
        Self {
            m: self.m * o.m,
            e: self.e.saturating_add(o.e),
        }
        .normalized()
    }

    pub fn scale(self, c: Complex<T>) -> Self {
        Self {
            m: self.m * c,
            e: self.e,
        }
        .normalized()
    }

    pub fn add(self, o: Self) -> Self {
        if self.is_zero() {
            return o;
        }
        if o.is_zero() {
            return self;
        }
        let (big, small) = if self.e >= o.e { (self, o) } else { (o, self) };
        let d = big.e - small.e;
        if d > 1000 {
            return big;
        }
        let s = pow2::<T>(-d);
        Self {
            m: big.m + Complex::new(small.m.re * s, small.m.im * s),
            e: big.e,
        }
        .normalized()
    }

    pub fn powu(self, mut n: u32) -> Self {
        let mut base = self;
        let mut acc = Self::one();
        while n > 0 {
            if n & 1 == 1 {
                acc = acc.mul(base);
            }
            n >>= 1;
            if n > 0 {
                base = base.mul(base);
            }
        }
        acc
    }

    /// `self / o` as an ordinary complex number; callers ensure the quotient is representable.
    pub fn div(self, o: Self) -> Complex<T> {
        let q = self.m / o.m;
        let d = self.e - o.e;
        if d < -1000 {
            return Complex::new(T::zero(), T::zero());
        }
        let d = d.min(1000);
        Complex::new(q.re * pow2::<T>(d), q.im * pow2::<T>(d))
    }

    pub fn ln_abs(&self) -> f64 {
        uncast(self.m).norm().ln() + self.e as f64 * std::f64::consts::LN_2
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use num_complex::Complex64;

    #[test]
    fn large_powers_do_not_overflow() {
        let z = Scaled::new(Complex64::from_polar(10.0, 0.3));
        let p = z.powu(500);
        assert!((p.ln_abs() - 500.0 * 10f64.ln()).abs() < 1e-9);
        let ratio = p.div(z.powu(499));
        assert!((ratio - Complex64::from_polar(10.0, 0.3)).norm() < 1e-10);
    }

    #[test]
    fn addition_aligns_exponents() {
        let a = Scaled::new(Complex64::new(1.0, 0.0)).powu(1);
        let b = Scaled::new(Complex64::new(2.0, 0.0)).powu(600);
        let s = b.add(a);
        assert!((s.ln_abs() - 600.0 * 2f64.ln()).abs() < 1e-12);
        let c = Scaled::new(Complex64::new(3.0, 1.0)).add(Scaled::new(Complex64::new(-1.0, 1.0)));
        assert!((c.div(Scaled::one()) - Complex64::new(2.0, 2.0)).norm() < 1e-15);
    }

    #[test]
    fn works_in_double_double() {
        let z = Scaled::new(cast::<TwoFloat>(Complex64::new(1.0, 1e-20)));
        let p = z.powu(3);
        assert!((p.m.re.approx() - 1.0).abs() < 1e-15);
    }
}
