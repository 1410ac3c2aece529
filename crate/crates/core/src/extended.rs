//! Double-double evaluation of `Φ_n` and `K · hor_n`.
//!
//! Applying `(λI - P)^n` to values of size `|x|^n |F̌|^{|x|}` cancels about
//! `n log10 |x|` digits, which exhausts double precision deep in the tree.
//! The constants are refined from a [`SpectralContext`] by one Newton step.

use num_complex::Complex;
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::operators::{ComplexDD, FieldValue};
use crate::spectral::SpectralContext;
use crate::spherical::MAX_ORDER;
use crate::tree::{horocycle, End, Vertex};

fn dd(t: f64) -> TwoFloat {
    TwoFloat::from(t)
}

fn real(t: TwoFloat) -> ComplexDD {
    Complex::new(t, dd(0.0))
}

// twofloat's quotient of two double-doubles is only double accurate; one
// correction step restores the low word.
fn div(a: TwoFloat, b: TwoFloat) -> TwoFloat {
    let q0 = a / b;
    q0 + (a - q0 * b) / b
}

fn recip(z: ComplexDD) -> ComplexDD {
    let inv = div(dd(1.0), z.re * z.re + z.im * z.im);
    Complex::new(z.re * inv, -z.im * inv)
}

#[derive(Debug, Clone, Copy)]
pub struct ExtendedContext {
    q: u32,
    pub s: ComplexDD,
    pub f: ComplexDD,
    pub fc: ComplexDD,
    pub u: ComplexDD,
}

impl ExtendedContext {
    pub fn new(ctx: &SpectralContext) -> Self {
        let q = ctx.q();
        let qd = dd(q as f64);
        let lambda = ComplexDD::from_complex(ctx.lambda);
        let rho2 = div(dd(4.0) * qd, (qd + dd(1.0)) * (qd + dd(1.0)));
        let target = lambda * lambda - real(rho2);
        let mut s = ComplexDD::from_complex(ctx.s);
        for _ in 0..2 {
            s = s - (s * s - target) * recip(s * dd(2.0));
        }
        let fc = (lambda + s) * div(qd + dd(1.0), dd(2.0) * qd);
        let f = recip(fc * qd);
        let u = f * recip(fc);
        ExtendedContext { q, s, f, fc, u }
    }

    /// `F^k` for any integer `k`, with `F^{-1} = q F̌`.
    pub fn f_pow(&self, k: i64) -> ComplexDD {
        if k >= 0 {
            self.f.powu(k as u32)
        } else {
            (self.fc * dd(self.q as f64)).powu(k.unsigned_abs() as u32)
        }
    }

    fn norm(&self, n: usize) -> ComplexDD {
        let fact: f64 = (1..=n).map(|k| k as f64).product();
        self.s.powu(n as u32) * dd(fact)
    }

    fn hor_power(&self, n: usize, h: i64) -> ComplexDD {
        real(dd(h as f64).powi(n as i32)) * recip(self.norm(n))
    }

    pub fn martin_kernel(&self, x: &Vertex, xi: &End) -> ComplexDD {
        self.f_pow(horocycle(x, xi))
    }

    /// `K(x,ξ) hor_n(x,ξ)`.
    pub fn extended_kernel(&self, n: usize, x: &Vertex, xi: &End) -> Result<ComplexDD> {
        check_order(n)?;
        let h = horocycle(x, xi);
        Ok(self.f_pow(h) * self.hor_power(n, h))
    }

    /// `Φ_n` at word length `len`.
    pub fn phi_n(&self, n: usize, len: usize) -> Result<ComplexDD> {
        check_order(n)?;
        if len == 0 {
            return Ok(real(dd(if n == 0 { 1.0 } else { 0.0 })));
        }
        let qd = dd(self.q as f64);
        let edge = div(qd, qd + dd(1.0));
        let inner = div(qd - dd(1.0), qd + dd(1.0));
        let l = len as i64;
        let mut acc = self.hor_power(n, -l) * edge;
        let mut uk = real(dd(1.0));
        for k in 1..len {
            uk *= self.u;
            acc += uk * self.hor_power(n, 2 * k as i64 - l) * inner;
        }
        acc += self.u.powu(len as u32) * self.hor_power(n, l) * edge;
        Ok(acc * self.fc.powu(len as u32))
    }
}

fn check_order(n: usize) -> Result<()> {
    if n > MAX_ORDER {
        return Err(Error::Parameter(format!(
            "order index {n} exceeds the supported maximum {MAX_ORDER}"
        )));
    }
    Ok(())
}
