//! Complex numbers carried as `mantissa · exp(log_scale)`.
//!
//! Quantities on the tree grow like `F̌^{|x|}`, which leaves the double range
//! after a few hundred levels. Every evaluation at a vertex `x` uses the
//! common scale `|x| · ln F̌`, so ratios of two values at the same vertex are
//! plain mantissa ratios.

use std::ops::{Add, Mul, Neg, Sub};

use num_complex::Complex64;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Scaled {
    pub mantissa: Complex64,
    pub log_scale: Complex64,
}

impl Scaled {
    pub fn new(mantissa: Complex64, log_scale: Complex64) -> Self {
        Scaled {
            mantissa,
            log_scale,
        }
    }

    pub fn unscaled(value: Complex64) -> Self {
        Scaled::new(value, Complex64::new(0.0, 0.0))
    }

    pub fn zero_at(log_scale: Complex64) -> Self {
        Scaled::new(Complex64::new(0.0, 0.0), log_scale)
    }

    /// The plain value; overflows to infinity when the scale is too large.
    pub fn to_complex(self) -> Complex64 {
        if self.mantissa == Complex64::new(0.0, 0.0) {
            return self.mantissa;
        }
        self.mantissa * self.log_scale.exp()
    }

    /// `ln |value|`, finite even when the value itself is not representable.
    pub fn ln_abs(self) -> f64 {
        self.mantissa.norm().ln() + self.log_scale.re
    }

    pub fn is_zero(self) -> bool {
        self.mantissa == Complex64::new(0.0, 0.0)
    }

    /// Re-expresses the value at another scale.
    pub fn rescale(self, log_scale: Complex64) -> Scaled {
        if self.log_scale == log_scale {
            return self;
        }
        Scaled::new(self.mantissa * (self.log_scale - log_scale).exp(), log_scale)
    }

    /// `self / other` as a plain complex number.
    pub fn ratio(self, other: Scaled) -> Complex64 {
        let m = self.mantissa / other.mantissa;
        if self.log_scale == other.log_scale {
            m
        } else {
            m * (self.log_scale - other.log_scale).exp()
        }
    }

    pub fn scale_by(self, c: Complex64) -> Scaled {
        Scaled::new(self.mantissa * c, self.log_scale)
    }
}

impl Add for Scaled {
    type Output = Scaled;

    fn add(self, rhs: Scaled) -> Scaled {
        if self.is_zero() {
            return rhs;
        }
        if rhs.is_zero() {
            return self;
        }
        // keep the larger scale so the smaller term is the one shrunk
        if self.log_scale.re >= rhs.log_scale.re {
            Scaled::new(self.mantissa + rhs.rescale(self.log_scale).mantissa, self.log_scale)
        } else {
            Scaled::new(self.rescale(rhs.log_scale).mantissa + rhs.mantissa, rhs.log_scale)
        }
    }
}

impl Sub for Scaled {
    type Output = Scaled;

    fn sub(self, rhs: Scaled) -> Scaled {
        self + (-rhs)
    }
}

impl Neg for Scaled {
    type Output = Scaled;

    fn neg(self) -> Scaled {
        Scaled::new(-self.mantissa, self.log_scale)
    }
}

impl Mul for Scaled {
    type Output = Scaled;

    fn mul(self, rhs: Scaled) -> Scaled {
        Scaled::new(self.mantissa * rhs.mantissa, self.log_scale + rhs.log_scale)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    #[test]
    fn huge_values_keep_ratios() {
        let scale = c(2000.0, 1.0);
        let a = Scaled::new(c(3.0, 1.0), scale);
        let b = Scaled::new(c(1.0, -1.0), scale);
        assert!(a.to_complex().re.is_infinite() || a.to_complex().re.is_nan());
        assert!((a.ratio(b) - c(3.0, 1.0) / c(1.0, -1.0)).norm() < 1e-15);
        assert!(((a + b).ratio(b) - (c(4.0, 0.0) / c(1.0, -1.0))).norm() < 1e-15);
        assert!((a.ln_abs() - (10f64.sqrt().ln() + 2000.0)).abs() < 1e-12);
    }

    #[test]
    fn add_across_scales() {
        let a = Scaled::new(c(1.0, 0.0), c(2.0_f64.ln(), 0.0));
        let b = Scaled::unscaled(c(3.0, 0.0));
        assert!(((a + b).to_complex() - 5.0).norm() < 1e-15);
        assert!(((b - a).to_complex() - 1.0).norm() < 1e-15);
        assert!(((a * b).to_complex() - 6.0).norm() < 1e-14);
    }
}
