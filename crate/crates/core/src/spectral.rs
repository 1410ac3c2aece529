//! Spectral constants of the simple random walk on the homogeneous tree.
//!
//! For a spectral parameter `λ` off the segment `[-ρ, ρ]` the context holds
//! the two roots `F`, `F̌` of `q z² - (q+1) λ z + 1 = 0` together with
//! `s(λ) = λ √(1 - ρ²/λ²)` and the coefficients `a`, `ǎ` that express the
//! spherical function as `a F^k + ǎ F̌^k`.

use std::fmt;
use std::str::FromStr;

use num_complex::Complex64;

use crate::error::{Error, Result};

/// Complex scalar used throughout the crate.
pub type ComplexScalar = Complex64;

/// Distance below which `λ` is treated as lying on the spectrum.
pub const SPECTRUM_GUARD: f64 = 1e-9;

/// Principal square root with the branch cut on the negative real axis.
///
/// The argument is taken in `(-π, π)`, so the result has non-negative real
/// part. Points on the open negative real axis are rejected.
pub fn principal_sqrt(z: Complex64) -> Result<Complex64> {
    if !z.re.is_finite() || !z.im.is_finite() {
        return Err(Error::Parameter(format!("non-finite argument {z}")));
    }
    if z.im == 0.0 && z.re < 0.0 {
        return Err(Error::BranchCut(z.re));
    }
    if z.re == 0.0 && z.im == 0.0 {
        return Ok(Complex64::new(0.0, 0.0));
    }
    let r = z.norm();
    // t is the larger of |Re w|, |Im w|; the other follows without cancellation.
    let t = ((r + z.re.abs()) / 2.0).sqrt();
    if z.re >= 0.0 {
        Ok(Complex64::new(t, z.im / (2.0 * t)))
    } else {
        Ok(Complex64::new(z.im.abs() / (2.0 * t), t.copysign(z.im)))
    }
}

/// Branching parameter of the tree together with its spectral radius.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TreeParams {
    pub q: u32,
    pub rho: f64,
}

impl TreeParams {
    pub fn new(q: u32) -> Result<Self> {
        if q < 2 {
            return Err(Error::Parameter(format!("q must be at least 2, got {q}")));
        }
        let qf = q as f64;
        Ok(TreeParams {
            q,
            rho: 2.0 * qf.sqrt() / (qf + 1.0),
        })
    }

    pub fn qf(&self) -> f64 {
        self.q as f64
    }
}

/// Where `λ` sits relative to the closed disk of radius `ρ`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Regime {
    /// `|λ| > ρ`: asymptotics and boundary convergence are available.
    OutsideDisk,
    /// `λ ∉ [-ρ, ρ]` but `|λ| ≤ ρ`: only the resolvent-set identities hold.
    ResolventOnly,
}

/// All spectral scalars derived from `(q, λ)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralContext {
    pub params: TreeParams,
    pub lambda: Complex64,
    pub s: Complex64,
    pub f: Complex64,
    pub fc: Complex64,
    pub a: Complex64,
    pub ac: Complex64,
    pub regime: Regime,
}

/// Residuals of the defining identities of a [`SpectralContext`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IdentityResiduals {
    /// `|λF - 1/(q+1) - qF²/(q+1)| / max(|λF|, 1/(q+1))`.
    pub quadratic: f64,
    /// `|F·F̌ - 1/q|`.
    pub product: f64,
    /// `|a + ǎ - 1|`.
    pub coefficient_sum: f64,
    /// `|s² - (λ² - ρ²)| / max(|λ²|, ρ²)`.
    pub s_squared: f64,
    /// `1/√q - |F|`, positive when the lower inequality is strict.
    pub lower_margin: f64,
    /// `|F̌| - 1/√q`, positive when the upper inequality is strict.
    pub upper_margin: f64,
}

fn distance_to_spectrum(lambda: Complex64, rho: f64) -> f64 {
    if lambda.re.abs() <= rho {
        lambda.im.abs()
    } else {
        (lambda.re.abs() - rho).hypot(lambda.im)
    }
}

impl SpectralContext {
    /// Builds the context, rejecting `q < 2` and `λ` within 1e-9 of `[-ρ, ρ]`.
    pub fn new(q: u32, lambda: Complex64) -> Result<Self> {
        let params = TreeParams::new(q)?;
        if !lambda.re.is_finite() || !lambda.im.is_finite() {
            return Err(Error::Parameter(format!("non-finite lambda {lambda}")));
        }
        let rho = params.rho;
        if distance_to_spectrum(lambda, rho) <= SPECTRUM_GUARD {
            return Err(Error::Spectrum {
                re: lambda.re,
                im: lambda.im,
                rho,
            });
        }
        let qf = params.qf();
        let one = Complex64::new(1.0, 0.0);
        let s = lambda * principal_sqrt(one - rho * rho / (lambda * lambda))?;
        let scale = (qf + 1.0) / (2.0 * qf);
        // λ + s never cancels on this branch; F follows from F·F̌ = 1/q.
        let fc = scale * (lambda + s);
        let f = 1.0 / (qf * fc);
        let ratio = (qf - 1.0) / (qf + 1.0) * lambda;
        let a = (s - ratio) / (2.0 * s);
        let ac = (s + ratio) / (2.0 * s);
        let regime = if lambda.norm() > rho {
            Regime::OutsideDisk
        } else {
            Regime::ResolventOnly
        };
        Ok(SpectralContext {
            params,
            lambda,
            s,
            f,
            fc,
            a,
            ac,
            regime,
        })
    }

    pub fn q(&self) -> u32 {
        self.params.q
    }

    pub fn qf(&self) -> f64 {
        self.params.qf()
    }

    pub fn rho(&self) -> f64 {
        self.params.rho
    }

    /// Fails with a regime error unless `|λ| > ρ`.
    pub fn require_outside_disk(&self) -> Result<()> {
        match self.regime {
            Regime::OutsideDisk => Ok(()),
            Regime::ResolventOnly => Err(Error::Regime {
                modulus: self.lambda.norm(),
                rho: self.rho(),
            }),
        }
    }

    /// `q·F²`, the ratio `F/F̌`; its modulus is below one.
    pub fn decay_ratio(&self) -> Complex64 {
        self.qf() * self.f * self.f
    }

    /// `F^k` for any integer `k`, with `F^{-1} = q·F̌`.
    pub fn f_pow(&self, k: i64) -> Complex64 {
        if k >= 0 {
            stable_pow(self.f, k as u64)
        } else {
            stable_pow(self.qf() * self.fc, k.unsigned_abs())
        }
    }

    /// `F̌^k` for `k ≥ 0`.
    pub fn fc_pow(&self, k: u64) -> Complex64 {
        stable_pow(self.fc, k)
    }

    pub fn residuals(&self) -> IdentityResiduals {
        let qf = self.qf();
        let rho = self.rho();
        let lhs = self.lambda * self.f;
        let rhs = 1.0 / (qf + 1.0) + qf * self.f * self.f / (qf + 1.0);
        let quadratic = (lhs - rhs).norm() / lhs.norm().max(1.0 / (qf + 1.0));
        let product = (self.f * self.fc - 1.0 / qf).norm();
        let coefficient_sum = (self.a + self.ac - 1.0).norm();
        let l2 = self.lambda * self.lambda;
        let s_squared = (self.s * self.s - (l2 - rho * rho)).norm() / l2.norm().max(rho * rho);
        let inv_sqrt_q = 1.0 / qf.sqrt();
        IdentityResiduals {
            quadratic,
            product,
            coefficient_sum,
            s_squared,
            lower_margin: inv_sqrt_q - self.f.norm(),
            upper_margin: self.fc.norm() - inv_sqrt_q,
        }
    }
}

/// `z^k` by repeated squaring for small `k`, through the logarithm otherwise.
pub(crate) fn stable_pow(z: Complex64, k: u64) -> Complex64 {
    if k <= 64 {
        let mut acc = Complex64::new(1.0, 0.0);
        let mut base = z;
        let mut e = k;
        while e > 0 {
            if e & 1 == 1 {
                acc *= base;
            }
            base *= base;
            e >>= 1;
        }
        acc
    } else if z.norm() == 0.0 {
        Complex64::new(0.0, 0.0)
    } else {
        (k as f64 * z.ln()).exp()
    }
}

/// Roots of `q z² - (q+1) λ z + 1 = 0` ordered by modulus.
///
/// The discriminant root uses the principal branch of `((q+1)λ)² - 4q` and the
/// sign that avoids cancellation, so the branch choice is independent of the
/// one in [`SpectralContext::new`].
pub fn quadratic_roots_oracle(q: u32, lambda: Complex64) -> Result<(Complex64, Complex64)> {
    let params = TreeParams::new(q)?;
    if distance_to_spectrum(lambda, params.rho) <= SPECTRUM_GUARD {
        return Err(Error::Spectrum {
            re: lambda.re,
            im: lambda.im,
            rho: params.rho,
        });
    }
    let qf = params.qf();
    let b = (qf + 1.0) * lambda;
    let disc = b * b - 4.0 * qf;
    if disc.norm() < 1e-14 {
        return Err(Error::Degenerate(disc.norm()));
    }
    let root = if disc.im == 0.0 && disc.re < 0.0 {
        Complex64::new(0.0, (-disc.re).sqrt())
    } else {
        principal_sqrt(disc)?
    };
    let root = if (b.conj() * root).re >= 0.0 { root } else { -root };
    let big = (b + root) / (2.0 * qf);
    let small = 1.0 / (qf * big);
    if small.norm() <= big.norm() {
        Ok((small, big))
    } else {
        Ok((big, small))
    }
}

/// Text form of a spectral parameter: `re` or `re,im`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaArg(pub Complex64);

impl FromStr for LambdaArg {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse = |t: &str| {
            t.trim()
                .parse::<f64>()
                .map_err(|_| Error::Parse(format!("bad lambda component '{t}'")))
        };
        let mut parts = s.split(',');
        let re = parse(parts.next().unwrap_or(""))?;
        let im = match parts.next() {
            Some(t) => parse(t)?,
            None => 0.0,
        };
        if parts.next().is_some() {
            return Err(Error::Parse(format!("lambda '{s}' has more than two components")));
        }
        if !re.is_finite() || !im.is_finite() {
            return Err(Error::Parse(format!("lambda '{s}' is not finite")));
        }
        Ok(LambdaArg(Complex64::new(re, im)))
    }
}

impl fmt::Display for LambdaArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.im == 0.0 {
            write!(f, "{}", self.0.re)
        } else {
            write!(f, "{},{}", self.0.re, self.0.im)
        }
    }
}
