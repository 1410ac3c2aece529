//! Martin kernel, spherical and polyspherical functions.
//!
//! The polyspherical function `Φ_n(x|λ) = ∫ K(x,ξ|λ) hor_n(x,ξ|λ) dξ` is radial.
//! Splitting `∂T` by the depth `ℓ = |x ∧ ξ|` of the confluent turns the integral
//! into a finite sum with masses
//!
//! ```text
//! m_0 = q/(q+1),  m_ℓ = (q-1)/((q+1) q^ℓ) for 0 < ℓ < |x|,  m_|x| = 1/((q+1) q^{|x|-1}).
//! ```
//!
//! All values at `x` are returned as [`Scaled`] with log-scale `|x| ln F̌`.
//! With `u = q F²` the normalized kernel is `F^{|x|-2ℓ} / F̌^{|x|} = q^ℓ u^{|x|-ℓ}`,
//! so every term in the sums stays bounded.

use num_complex::Complex64;

use crate::error::{Error, Result};
use crate::scaled::Scaled;
use crate::spectral::{stable_pow, SpectralContext};
use crate::tree::{distance, horocycle, End, Vertex};

/// Largest supported polyharmonic order index.
pub const MAX_ORDER: usize = 8;

/// Radii scanned by [`KernelSpec::r_threshold`].
pub const THRESHOLD_SEARCH_LIMIT: usize = 200;

/// Width of the window on which the threshold condition must hold.
pub const THRESHOLD_WINDOW: usize = 20;

/// A spectral context together with an order index `n`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec {
    pub ctx: SpectralContext,
    pub n: usize,
    /// `n! s(λ)^n`.
    norm: Complex64,
}

fn factorial(n: usize) -> f64 {
    (1..=n).map(|k| k as f64).product()
}

impl KernelSpec {
    pub fn new(ctx: SpectralContext, n: usize) -> Result<Self> {
        if n > MAX_ORDER {
            return Err(Error::Parameter(format!(
                "order index {n} exceeds the supported maximum {MAX_ORDER}"
            )));
        }
        let norm = factorial(n) * ctx.s.powi(n as i32);
        Ok(KernelSpec { ctx, n, norm })
    }

    fn q(&self) -> u32 {
        self.ctx.q()
    }

    /// `h^n / (n! s^n)`.
    pub fn hor_power(&self, h: i64) -> Complex64 {
        (h as f64).powi(self.n as i32) / self.norm
    }

    /// `hor_n(x, ξ|λ)`.
    pub fn hor_factor(&self, x: &Vertex, xi: &End) -> Complex64 {
        self.hor_power(horocycle(x, xi))
    }

    /// `K(x,ξ|λ) · hor_n(x,ξ|λ)`.
    pub fn extended_kernel(&self, x: &Vertex, xi: &End) -> Complex64 {
        martin_kernel(&self.ctx, x, xi) * self.hor_factor(x, xi)
    }

    /// `K · hor_n` at `x` in the common scale of `x`.
    pub fn extended_kernel_scaled(&self, x: &Vertex, xi: &End) -> Scaled {
        let len = x.len();
        let ell = xi.confluent_depth(x);
        let kern = normalized_kernel(&self.ctx, len, ell);
        Scaled::new(
            kern * self.hor_power(len as i64 - 2 * ell as i64),
            vertex_scale(&self.ctx, len),
        )
    }

    /// `∫_{∂T_v} K(x,ξ|λ) hor_n(x,ξ|λ) dξ` by descent through the children of `v`.
    ///
    /// Off the geodesic `π(o, x)` the confluent is constant on `∂T_v`. Otherwise
    /// the arc splits into the child continuing towards `x` and siblings whose
    /// confluent is the current vertex.
    pub fn integrate_kernel_over_arc(&self, x: &Vertex, v: &Vertex) -> Scaled {
        let ctx = &self.ctx;
        let q = self.q();
        let len = x.len();
        let scale = vertex_scale(ctx, len);
        let ln_q = (q as f64).ln();
        let ln_u = ctx.decay_ratio().ln();
        // m(∂T_w) q^ℓ u^{|x|-ℓ} hor_n at confluent depth ℓ, through logarithms
        let term = |arc_depth: usize, ell: usize| -> Complex64 {
            let ln_mass = ln_arc_measure(q, arc_depth);
            let k = (len - ell) as f64;
            let weight = (Complex64::new(ln_mass + ell as f64 * ln_q, 0.0) + k * ln_u).exp();
            weight * self.hor_power(len as i64 - 2 * ell as i64)
        };

        if !v.is_prefix_of(x) {
            let ell = confluent_len(x, v);
            return Scaled::new(term(v.len(), ell), scale);
        }
        let mut acc = Complex64::new(0.0, 0.0);
        let word = x.word();
        let mut cur = v.clone();
        while cur.len() < len {
            let toward = word[cur.len()];
            let depth = cur.len();
            for j in 0..cur.child_count(q) {
                if j != toward {
                    acc += term(depth + 1, depth);
                }
            }
            cur = cur.child(toward);
        }
        acc += term(len, len);
        Scaled::new(acc, scale)
    }

    /// `Φ_n(x|λ)` from the finite sum over confluent depths; depends on `|x|` only.
    pub fn phi_n_scaled(&self, len: usize) -> Scaled {
        let ctx = &self.ctx;
        let scale = vertex_scale(ctx, len);
        if len == 0 {
            let v = if self.n == 0 { 1.0 } else { 0.0 };
            return Scaled::new(Complex64::new(v, 0.0), scale);
        }
        let qf = ctx.qf();
        let u = ctx.decay_ratio();
        let l = len as i64;
        let edge = qf / (qf + 1.0);
        let inner = (qf - 1.0) / (qf + 1.0);
        let mut acc = edge * self.hor_power(-l);
        let mut uk = Complex64::new(1.0, 0.0);
        for k in 1..len {
            uk *= u;
            acc += inner * uk * self.hor_power(2 * k as i64 - l);
        }
        acc += edge * stable_pow(u, len as u64) * self.hor_power(l);
        Scaled::new(acc, scale)
    }

    /// `Φ_n(x|λ)` by descent over the partition of `∂T` into the root's children.
    pub fn phi_n_descent(&self, x: &Vertex) -> Scaled {
        Vertex::root()
            .children(self.q())
            .iter()
            .map(|c| self.integrate_kernel_over_arc(x, c))
            .fold(Scaled::zero_at(vertex_scale(&self.ctx, x.len())), |a, b| a + b)
    }

    pub fn phi_n(&self, x: &Vertex) -> Complex64 {
        self.phi_n_scaled(x.len()).to_complex()
    }

    /// `|Φ|_n(x|λ) = ∫ |K hor_n| dξ`, as mantissa with log-scale `|x| ln |F̌|`.
    pub fn phi_abs_n_scaled(&self, len: usize) -> (f64, f64) {
        let ctx = &self.ctx;
        let scale = len as f64 * ctx.fc.norm().ln();
        if len == 0 {
            return (if self.n == 0 { 1.0 } else { 0.0 }, scale);
        }
        let qf = ctx.qf();
        let u = ctx.decay_ratio().norm();
        let l = len as i64;
        let nrm = self.norm.norm();
        let hp = |h: i64| (h.unsigned_abs() as f64).powi(self.n as i32) / nrm;
        let edge = qf / (qf + 1.0);
        let inner = (qf - 1.0) / (qf + 1.0);
        let mut acc = edge * hp(l);
        let mut uk = 1.0;
        for k in 1..len {
            uk *= u;
            acc += inner * uk * hp(2 * k as i64 - l);
        }
        acc += edge * u.powi(len as i32) * hp(l);
        (acc, scale)
    }

    pub fn phi_abs_n(&self, x: &Vertex) -> f64 {
        let (m, s) = self.phi_abs_n_scaled(x.len());
        m * s.exp()
    }

    /// `ǎ(λ) (-1)^n r^n / (n! s^n) F̌^r`, the leading behaviour of `Φ_n` at radius `r`.
    pub fn asymptotic_phi_n(&self, radius: usize) -> Result<Scaled> {
        self.ctx.require_outside_disk()?;
        if radius == 0 {
            return Err(Error::Parameter("asymptotics need radius >= 1".into()));
        }
        Ok(Scaled::new(
            self.ctx.ac * self.hor_power(-(radius as i64)),
            vertex_scale(&self.ctx, radius),
        ))
    }

    /// `Φ_n / asymptotic - 1` at radius `r`, summed without cancellation.
    ///
    /// Uses `ǎ = q/(q+1) + (q-1)/(q+1) · u/(1-u)` to subtract the leading
    /// term analytically; only the tails remain.
    pub fn asymptotic_deviation(&self, radius: usize) -> Result<Complex64> {
        self.ctx.require_outside_disk()?;
        if radius == 0 {
            return Err(Error::Parameter("asymptotics need radius >= 1".into()));
        }
        let qf = self.ctx.qf();
        let u = self.ctx.decay_ratio();
        let inner = (qf - 1.0) / (qf + 1.0);
        let edge = qf / (qf + 1.0);
        let l = radius as f64;
        let mut acc = Complex64::new(0.0, 0.0);
        if self.n > 0 {
            let mut uk = Complex64::new(1.0, 0.0);
            for k in 1..radius {
                uk *= u;
                if uk.norm() == 0.0 {
                    break;
                }
                acc += inner * uk * pow_minus_one(-2.0 * k as f64 / l, self.n);
            }
        }
        let ul = stable_pow(u, radius as u64);
        let sign = if self.n.is_multiple_of(2) { 1.0 } else { -1.0 };
        acc += -inner * ul / (1.0 - u) + edge * sign * ul;
        Ok(acc / self.ctx.ac)
    }

    /// `|Φ|_n / |Φ_n| - C(λ)/|ǎ(λ)|` at radius `r`, summed without cancellation.
    pub fn abs_ratio_deviation(&self, radius: usize) -> Result<f64> {
        let dev = self.asymptotic_deviation(radius)?;
        if self.ctx.lambda.im == 0.0 {
            return Ok(self.abs_ratio_deviation_real(radius));
        }
        let qf = self.ctx.qf();
        let u = self.ctx.decay_ratio().norm();
        let inner = (qf - 1.0) / (qf + 1.0);
        let edge = qf / (qf + 1.0);
        let l = radius as f64;
        let mut d_abs = 0.0;
        if self.n > 0 {
            let mut uk = 1.0;
            for k in 1..radius {
                uk *= u;
                if uk == 0.0 {
                    break;
                }
                let t = 1.0 - 2.0 * k as f64 / l;
                d_abs += inner * uk * pow_minus_one(t.abs() - 1.0, self.n);
            }
        }
        let ul = u.powi(radius as i32);
        d_abs += -inner * ul / (1.0 - u) + edge * ul;
        let one_plus = (1.0 + dev).norm();
        let e = (2.0 * dev.re + dev.norm_sqr()) / (one_plus + 1.0);
        let c = c_lambda(&self.ctx);
        let b = self.ctx.ac.norm() * one_plus;
        Ok((d_abs - c * e) / b)
    }

    /// For real `λ`, `C(λ) = ǎ(λ)` and all terms of `Φ_n` share one sign up to
    /// `sgn(hor)^n`, so the deviation is `2 S_- / (S_+ - S_-)` with `S_-` the
    /// total of the minority-sign terms: zero for even `n`, of order
    /// `|u|^{r/2}` for odd `n`.
    fn abs_ratio_deviation_real(&self, radius: usize) -> f64 {
        if self.n.is_multiple_of(2) {
            return 0.0;
        }
        let qf = self.ctx.qf();
        let u = self.ctx.decay_ratio().norm();
        let l = radius as f64;
        let (mut major, mut minor) = (0.0, 0.0);
        // k = |x| - ℓ; weights (m_ℓ q^ℓ) |u|^k |2k - |x||^n / |x|^n
        for k in 0..=radius {
            let h = 2.0 * k as f64 - l;
            if h == 0.0 {
                continue;
            }
            let c = if k == 0 || k == radius { qf } else { qf - 1.0 } / (qf + 1.0);
            let w = c * (k as f64 * u.ln() + self.n as f64 * (h.abs() / l).ln()).exp();
            if h < 0.0 {
                major += w;
            } else {
                minor += w;
            }
        }
        2.0 * minor / (major - minor)
    }

    /// Smallest `r ≤ 200` with `Φ_n ≠ 0` and `|Φ_n/asymptotic - 1| < 1` on `[r, r+20]`.
    pub fn r_threshold(&self) -> Result<usize> {
        self.threshold_with(1.0)
    }

    /// Like [`Self::r_threshold`] with `|Φ_n/asymptotic - 1| ≤ bound`.
    pub fn threshold_with(&self, bound: f64) -> Result<usize> {
        self.ctx.require_outside_disk()?;
        let top = THRESHOLD_SEARCH_LIMIT + THRESHOLD_WINDOW;
        let ok: Vec<bool> = (1..=top)
            .map(|r| {
                let dev = self.asymptotic_deviation(r).expect("regime checked");
                dev.norm() < bound && !self.phi_n_scaled(r).is_zero()
            })
            .collect();
        (1..=THRESHOLD_SEARCH_LIMIT)
            .find(|&r| ok[r - 1..r + THRESHOLD_WINDOW].iter().all(|&b| b))
            .ok_or(Error::Threshold(THRESHOLD_SEARCH_LIMIT))
    }

    /// Radial profile rows for `0 ≤ r ≤ max_radius`.
    pub fn radial_profile(&self, max_radius: usize) -> Result<Vec<ProfileRow>> {
        self.ctx.require_outside_disk()?;
        Ok((0..=max_radius)
            .map(|r| {
                let value = self.phi_n_scaled(r);
                let asymptotic = if r == 0 {
                    None
                } else {
                    self.asymptotic_phi_n(r).ok()
                };
                ProfileRow {
                    radius: r,
                    value: value.to_complex(),
                    asymptotic: asymptotic.map(|a| a.to_complex()),
                    ratio_abs: asymptotic.map(|a| value.ratio(a).norm()),
                }
            })
            .collect())
    }
}

/// One line of a radial profile.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileRow {
    pub radius: usize,
    pub value: Complex64,
    pub asymptotic: Option<Complex64>,
    pub ratio_abs: Option<f64>,
}

/// `(1 + t)^n - 1` accurate for small `t`.
fn pow_minus_one(t: f64, n: usize) -> f64 {
    if n == 0 {
        return 0.0;
    }
    if t.abs() < 0.5 {
        (n as f64 * t.ln_1p()).exp_m1()
    } else {
        (1.0 + t).powi(n as i32) - 1.0
    }
}

fn confluent_len(x: &Vertex, v: &Vertex) -> usize {
    x.word()
        .iter()
        .zip(v.word())
        .take_while(|(a, b)| a == b)
        .count()
}

fn ln_arc_measure(q: u32, depth: usize) -> f64 {
    if depth == 0 {
        0.0
    } else {
        let qf = q as f64;
        -(qf + 1.0).ln() - (depth - 1) as f64 * qf.ln()
    }
}

/// The common log-scale `|x| ln F̌` of values at word length `len`.
pub fn vertex_scale(ctx: &SpectralContext, len: usize) -> Complex64 {
    len as f64 * ctx.fc.ln()
}

/// `F^{len-2ℓ} / F̌^{len} = q^ℓ u^{len-ℓ}`.
pub fn normalized_kernel(ctx: &SpectralContext, len: usize, ell: usize) -> Complex64 {
    let k = (len - ell) as u64;
    let qpow = (ell as f64) * ctx.qf().ln();
    if qpow < 600.0 {
        ctx.qf().powi(ell as i32) * stable_pow(ctx.decay_ratio(), k)
    } else {
        (qpow + k as f64 * ctx.decay_ratio().ln()).exp()
    }
}

/// `K(x,ξ|λ) = F(λ)^{hor(x,ξ)}`.
pub fn martin_kernel(ctx: &SpectralContext, x: &Vertex, xi: &End) -> Complex64 {
    ctx.f_pow(horocycle(x, xi))
}

/// `φ_k` from the closed form `a F^k + ǎ F̌^k`.
pub fn phi_closed(ctx: &SpectralContext, k: usize) -> Complex64 {
    ctx.a * stable_pow(ctx.f, k as u64) + ctx.ac * stable_pow(ctx.fc, k as u64)
}

/// `φ_k` in the common scale of radius `k`.
pub fn phi_scaled(ctx: &SpectralContext, k: usize) -> Scaled {
    Scaled::new(
        ctx.a * stable_pow(ctx.decay_ratio(), k as u64) + ctx.ac,
        vertex_scale(ctx, k),
    )
}

/// `φ_k(λ)`.
pub fn phi(ctx: &SpectralContext, k: usize) -> Complex64 {
    phi_closed(ctx, k)
}

/// `Φ(x|λ) = φ_{|x|}(λ)`.
pub fn spherical(ctx: &SpectralContext, x: &Vertex) -> Complex64 {
    phi(ctx, x.len())
}

/// `Φ(x,y|λ) = φ_{d(x,y)}(λ)`.
pub fn phi_two_point(ctx: &SpectralContext, x: &Vertex, y: &Vertex) -> Complex64 {
    phi(ctx, distance(x, y))
}

/// `C(λ) = (q²|F̌|² - 1) / ((q+1)(q|F̌|² - 1))`.
pub fn c_lambda(ctx: &SpectralContext) -> f64 {
    let qf = ctx.qf();
    let m2 = ctx.fc.norm_sqr();
    (qf * qf * m2 - 1.0) / ((qf + 1.0) * (qf * m2 - 1.0))
}

/// `φ_0, …, φ_K` from the three-term recursion.
#[derive(Debug, Clone, PartialEq)]
pub struct SphericalTable {
    pub ctx: SpectralContext,
    values: Vec<Complex64>,
}

impl SphericalTable {
    pub fn new(ctx: SpectralContext, max_radius: usize) -> Self {
        let qf = ctx.qf();
        let mut values = Vec::with_capacity(max_radius + 1);
        values.push(Complex64::new(1.0, 0.0));
        if max_radius >= 1 {
            values.push(ctx.lambda);
        }
        for k in 1..max_radius {
            let next = ((qf + 1.0) * ctx.lambda * values[k] - values[k - 1]) / qf;
            values.push(next);
        }
        SphericalTable { ctx, values }
    }

    pub fn values(&self) -> &[Complex64] {
        &self.values
    }

    pub fn max_radius(&self) -> usize {
        self.values.len() - 1
    }

    /// Largest `|λφ_k - φ_{k-1}/(q+1) - qφ_{k+1}/(q+1)| / max(1, |φ_{k+1}|)`.
    pub fn max_residual(&self) -> f64 {
        let qf = self.ctx.qf();
        (1..self.max_radius())
            .map(|k| {
                let v = &self.values;
                let r = self.ctx.lambda * v[k] - v[k - 1] / (qf + 1.0) - qf * v[k + 1] / (qf + 1.0);
                r.norm() / v[k + 1].norm().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}
