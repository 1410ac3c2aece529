//! The transition operator `P` on finite pieces of the tree.
//!
//! `Pf(x)` needs `f` on all `q + 1` neighbours of `x`, so every application
//! shrinks the domain: a ball of radius `R` becomes a ball of radius `R - 1`,
//! and a tube around a ray loses its outer layer.

use std::collections::{BTreeMap, BTreeSet};

use std::iter::Sum;
use std::ops::{Add, Mul, Sub};

use num_complex::{Complex, Complex64};
use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::spectral::SpectralContext;
use crate::tree::{ball, level_size, sphere, End, Vertex};

/// Complex scalars the operators act on: plain doubles or double-double.
pub trait FieldValue:
    Copy + PartialEq + Add<Output = Self> + Sub<Output = Self> + Mul<Output = Self> + Sum
{
    fn from_complex(z: Complex64) -> Self;
    /// Division by an exactly representable real, rounded once.
    fn divide(self, t: f64) -> Self;
    fn magnitude(self) -> f64;
}

/// Complex numbers with double-double parts, about 32 significant digits.
pub type ComplexDD = Complex<TwoFloat>;

impl FieldValue for Complex64 {
    fn from_complex(z: Complex64) -> Self {
        z
    }

    fn divide(self, t: f64) -> Self {
        self / t
    }

    fn magnitude(self) -> f64 {
        self.norm()
    }
}

impl FieldValue for ComplexDD {
    fn from_complex(z: Complex64) -> Self {
        Complex::new(z.re.into(), z.im.into())
    }

    fn divide(self, t: f64) -> Self {
        Complex::new(self.re / t, self.im / t)
    }

    fn magnitude(self) -> f64 {
        f64::from(self.re).hypot(f64::from(self.im))
    }
}

/// A complex function on a finite set of vertices, closed under the
/// operations in this module.
pub trait VertexField: Sized {
    type Value: FieldValue;

    fn q(&self) -> u32;

    /// Applies `op(center, neighbours)` at every vertex whose neighbours all lie
    /// in the domain. Neighbours come predecessor first, then children.
    fn stencil<F>(&self, op: F) -> Result<Self>
    where
        F: Fn(Self::Value, &[Self::Value]) -> Self::Value;

    fn entries(&self) -> Vec<(Vertex, Self::Value)>;

    fn map_values<F: Fn(Self::Value) -> Self::Value>(&self, f: F) -> Self;

    /// `Pf`.
    fn apply_p(&self) -> Result<Self> {
        let w = self.q() as f64 + 1.0;
        self.stencil(|_, nb| nb.iter().copied().sum::<Self::Value>().divide(w))
    }

    /// `(λI - P) f`.
    fn lambda_minus_p(&self, ctx: &SpectralContext) -> Result<Self> {
        let w = self.q() as f64 + 1.0;
        let lambda = Self::Value::from_complex(ctx.lambda);
        self.stencil(|c, nb| lambda * c - nb.iter().copied().sum::<Self::Value>().divide(w))
    }

    /// `(λI - P)^n f`.
    fn lambda_minus_p_power(&self, ctx: &SpectralContext, n: usize) -> Result<Self>
    where
        Self: Clone,
    {
        let mut cur = self.clone();
        for _ in 0..n {
            cur = cur.lambda_minus_p(ctx)?;
        }
        Ok(cur)
    }

    /// `max_{d(y,x) ≤ n} |f(y)|` on the `n`-interior.
    ///
    /// Magnitudes are carried in the value type as real numbers.
    fn local_scale(&self, n: usize) -> Result<Self> {
        let real = |t: f64| Self::Value::from_complex(Complex64::new(t, 0.0));
        let mut cur = self.map_values(|z| real(z.magnitude()));
        for _ in 0..n {
            cur = cur.stencil(|c, nb| {
                real(nb.iter().fold(c.magnitude(), |acc, z| acc.max(z.magnitude())))
            })?;
        }
        Ok(cur)
    }

    /// `max_x |f(x) - reference(x)| / |reference(x)|`.
    fn max_relative_error<R>(&self, reference: R) -> f64
    where
        R: Fn(&Vertex) -> Self::Value,
    {
        self.max_weighted_error(&reference, |v| reference(v).magnitude())
    }

    /// `max_x |f(x) - reference(x)| / weight(x)`.
    fn max_weighted_error<R, W>(&self, reference: R, weight: W) -> f64
    where
        R: Fn(&Vertex) -> Self::Value,
        W: Fn(&Vertex) -> f64,
    {
        self.entries()
            .into_iter()
            .map(|(v, z)| (z - reference(&v)).magnitude() / weight(&v).max(f64::MIN_POSITIVE))
            .fold(0.0, f64::max)
    }
}

/// `max |((λI - P)^n f)(x)| / max(1, max_{d(y,x) ≤ n} |f(y)|)` over the `n`-interior.
pub fn polyharmonic_residual<V>(ctx: &SpectralContext, f: &V, n: usize) -> Result<f64>
where
    V: VertexField + Clone,
{
    let image = f.lambda_minus_p_power(ctx, n)?;
    let scale = f.local_scale(n)?;
    let scale: BTreeMap<Vertex, f64> = scale
        .entries()
        .into_iter()
        .map(|(v, z)| (v, z.magnitude()))
        .collect();
    Ok(image
        .entries()
        .into_iter()
        .map(|(v, z)| z.magnitude() / scale[&v].max(1.0))
        .fold(0.0, f64::max))
}

/// A function on the ball `{x : |x| ≤ radius}`, stored level by level.
///
/// Level `k` holds its `(q+1) q^{k-1}` vertices in lexicographic order of
/// their words, so the children of entry `i` on level `k ≥ 1` are the entries
/// `i q .. i q + q` on level `k + 1`.
#[derive(Debug, Clone, PartialEq)]
pub struct BallFunction<T = Complex64> {
    q: u32,
    levels: Vec<Vec<T>>,
}

impl<T: FieldValue> BallFunction<T> {
    /// Samples `f` on the ball of the given radius.
    pub fn sample<F: Fn(&Vertex) -> T>(q: u32, radius: usize, f: F) -> Self {
        let mut levels = Vec::with_capacity(radius + 1);
        let mut layer = vec![Vertex::root()];
        for k in 0..=radius {
            if k > 0 {
                layer = layer.iter().flat_map(|v| v.children(q)).collect();
            }
            levels.push(layer.iter().map(&f).collect());
        }
        BallFunction { q, levels }
    }

    /// Samples a radial function `x ↦ g(|x|)`.
    pub fn sample_radial<F: Fn(usize) -> T>(q: u32, radius: usize, g: F) -> Self {
        let levels = (0..=radius)
            .map(|k| vec![g(k); level_size(k, q)])
            .collect();
        BallFunction { q, levels }
    }

    pub fn radius(&self) -> usize {
        self.levels.len() - 1
    }

    /// Total number of vertices, `1 + (q+1)(q^R - 1)/(q-1)`.
    pub fn len(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn level(&self, k: usize) -> &[T] {
        &self.levels[k]
    }

    fn index_of(&self, v: &Vertex) -> Option<usize> {
        let w = v.word();
        if w.len() > self.radius() || v.validate(self.q).is_err() {
            return None;
        }
        Some(
            w.iter()
                .fold(0usize, |acc, &l| acc * self.q as usize + l as usize),
        )
    }

    pub fn get(&self, v: &Vertex) -> Option<T> {
        self.index_of(v).map(|i| self.levels[v.len()][i])
    }

    pub fn to_sampled(&self) -> SampledFunction<T> {
        SampledFunction {
            q: self.q,
            values: self.entries().into_iter().collect(),
        }
    }

    /// Spherical average around `center`: `h̄(y)` is the mean of `f` over the
    /// sphere through `y` centred at `center`.
    ///
    /// Only spheres inside the ball are used, so the result lives on the ball
    /// of radius `R - |center|` around `center`.
    pub fn spherical_average(&self, center: &Vertex) -> Result<SampledFunction<T>> {
        if self.get(center).is_none() {
            return Err(Error::Domain(format!(
                "center {center} outside the ball of radius {}",
                self.radius()
            )));
        }
        let max_r = self.radius() - center.len();
        let averages = sphere_averages(self.q, center, max_r, |v| {
            self.get(v).expect("sphere lies inside the ball")
        });
        let mut values = BTreeMap::new();
        for (r, avg) in averages.iter().enumerate() {
            for v in sphere(center, r, self.q) {
                values.insert(v, *avg);
            }
        }
        Ok(SampledFunction { q: self.q, values })
    }
}

/// Means of `f` over the spheres of radius `0..=max_r` around `center`.
pub fn sphere_averages<T: FieldValue, F: Fn(&Vertex) -> T>(
    q: u32,
    center: &Vertex,
    max_r: usize,
    f: F,
) -> Vec<T> {
    (0..=max_r)
        .map(|r| {
            let s = sphere(center, r, q);
            s.iter().map(&f).sum::<T>().divide(s.len() as f64)
        })
        .collect()
}

impl<T: FieldValue> VertexField for BallFunction<T> {
    type Value = T;

    fn q(&self) -> u32 {
        self.q
    }

    fn stencil<F>(&self, op: F) -> Result<Self>
    where
        F: Fn(T, &[T]) -> T,
    {
        let radius = self.radius();
        if radius == 0 {
            return Err(Error::DomainExhausted(
                "ball of radius 0 has no interior".into(),
            ));
        }
        let q = self.q as usize;
        let mut nb = Vec::with_capacity(q + 1);
        let mut levels = Vec::with_capacity(radius);
        for k in 0..radius {
            let row: Vec<T> = (0..self.levels[k].len())
                .map(|i| {
                    nb.clear();
                    match k {
                        0 => nb.extend_from_slice(&self.levels[1]),
                        _ => {
                            let parent = if k == 1 { 0 } else { i / q };
                            nb.push(self.levels[k - 1][parent]);
                            nb.extend_from_slice(&self.levels[k + 1][i * q..(i + 1) * q]);
                        }
                    }
                    op(self.levels[k][i], &nb)
                })
                .collect();
            levels.push(row);
        }
        Ok(BallFunction { q: self.q, levels })
    }

    fn entries(&self) -> Vec<(Vertex, T)> {
        let mut layer = vec![Vertex::root()];
        let mut out = Vec::with_capacity(self.len());
        for (k, row) in self.levels.iter().enumerate() {
            if k > 0 {
                layer = layer.iter().flat_map(|v| v.children(self.q)).collect();
            }
            out.extend(layer.iter().cloned().zip(row.iter().copied()));
        }
        out
    }

    fn map_values<F: Fn(T) -> T>(&self, f: F) -> Self {
        BallFunction {
            q: self.q,
            levels: self
                .levels
                .iter()
                .map(|row| row.iter().map(|&z| f(z)).collect())
                .collect(),
        }
    }
}

/// A function on an arbitrary finite vertex set, e.g. a tube around a ray.
#[derive(Debug, Clone, PartialEq)]
pub struct SampledFunction<T = Complex64> {
    q: u32,
    values: BTreeMap<Vertex, T>,
}

impl<T: FieldValue> SampledFunction<T> {
    pub fn from_vertices<I, F>(q: u32, vertices: I, f: F) -> Self
    where
        I: IntoIterator<Item = Vertex>,
        F: Fn(&Vertex) -> T,
    {
        let values = vertices
            .into_iter()
            .map(|v| {
                let z = f(&v);
                (v, z)
            })
            .collect();
        SampledFunction { q, values }
    }

    /// Samples `f` on the vertices within distance `width` of the ray
    /// vertices of `ξ` at depths `0..=depth`.
    pub fn tube<F: Fn(&Vertex) -> T>(
        q: u32,
        xi: &End,
        depth: usize,
        width: usize,
        f: F,
    ) -> Self {
        Self::from_vertices(q, tube_vertices(q, xi, depth, width), f)
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn get(&self, v: &Vertex) -> Option<T> {
        self.values.get(v).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&Vertex, &T)> {
        self.values.iter()
    }
}

/// Vertices within distance `width` of `π(o, ξ)` truncated at `depth`.
pub fn tube_vertices(q: u32, xi: &End, depth: usize, width: usize) -> BTreeSet<Vertex> {
    (0..=depth)
        .flat_map(|k| ball(&xi.ray_vertex(k), width, q))
        .collect()
}

impl<T: FieldValue> VertexField for SampledFunction<T> {
    type Value = T;

    fn q(&self) -> u32 {
        self.q
    }

    fn stencil<F>(&self, op: F) -> Result<Self>
    where
        F: Fn(T, &[T]) -> T,
    {
        let mut out = BTreeMap::new();
        let mut nb = Vec::with_capacity(self.q as usize + 1);
        'vertices: for (v, &z) in &self.values {
            nb.clear();
            for u in v.neighbours(self.q) {
                match self.values.get(&u) {
                    Some(&w) => nb.push(w),
                    None => continue 'vertices,
                }
            }
            out.insert(v.clone(), op(z, &nb));
        }
        if out.is_empty() {
            return Err(Error::DomainExhausted(
                "no vertex has all neighbours in the domain".into(),
            ));
        }
        Ok(SampledFunction {
            q: self.q,
            values: out,
        })
    }

    fn entries(&self) -> Vec<(Vertex, T)> {
        self.values.iter().map(|(v, z)| (v.clone(), *z)).collect()
    }

    fn map_values<F: Fn(T) -> T>(&self, f: F) -> Self {
        SampledFunction {
            q: self.q,
            values: self.values.iter().map(|(v, &z)| (v.clone(), f(z))).collect(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spherical::{martin_kernel, phi, phi_two_point, spherical, KernelSpec};
    use crate::tree::{distance, parse_end};

    fn ctx(q: u32, re: f64, im: f64) -> SpectralContext {
        SpectralContext::new(q, Complex64::new(re, im)).unwrap()
    }

    fn one() -> Complex64 {
        Complex64::new(1.0, 0.0)
    }

    #[test]
    fn sample_ball_counts() {
        let f = BallFunction::sample(2, 2, |_| one());
        assert_eq!(f.len(), 10);
        for q in [2u32, 3] {
            for r in 0..5 {
                let f = BallFunction::sample(q, r, |_| one());
                let expect = 1 + (q as usize + 1) * ((q as usize).pow(r as u32) - 1) / (q as usize - 1);
                assert_eq!(f.len(), expect);
            }
        }
        let f = BallFunction::sample(2, 3, |v| Complex64::new(v.len() as f64, 0.0));
        for (v, z) in f.entries() {
            assert_eq!(f.get(&v), Some(z));
            assert_eq!(z.re, v.len() as f64);
        }
    }

    #[test]
    fn p_examples() {
        let c = Complex64::new(2.5, -1.0);
        let f = BallFunction::sample(3, 3, |_| c);
        let pf = f.apply_p().unwrap();
        assert_eq!(pf.radius(), 2);
        assert!(pf.entries().iter().all(|(_, z)| (z - c).norm() < 1e-15));

        let delta = BallFunction::sample(2, 2, |v| if v.is_root() { one() } else { 0.0 * one() });
        let pd = delta.apply_p().unwrap();
        assert_eq!(pd.get(&Vertex::root()), Some(0.0 * one()));
        for v in Vertex::root().children(2) {
            assert!((pd.get(&v).unwrap() - 1.0 / 3.0).norm() < 1e-16);
        }

        let z = ctx(2, 1.3, 0.4);
        let sph = BallFunction::sample(2, 8, |v| spherical(&z, v));
        let err = sph.apply_p().unwrap().max_relative_error(|v| z.lambda * spherical(&z, v));
        assert!(err < 1e-12);

        let tiny = BallFunction::sample(2, 0, |_| one());
        assert!(matches!(tiny.apply_p(), Err(Error::DomainExhausted(_))));
    }

    #[test]
    fn dense_matrix_brute_force() {
        let q = 2;
        let z = ctx(q, 0.3, 1.7);
        let verts = ball(&Vertex::root(), 4, q);
        let f = BallFunction::sample(q, 4, |v| {
            Complex64::new(v.word().iter().sum::<u32>() as f64, v.len() as f64).exp() * z.lambda
        });
        let vals: Vec<Complex64> = verts.iter().map(|v| f.get(v).unwrap()).collect();
        let pf = f.apply_p().unwrap();
        for (i, x) in verts.iter().enumerate() {
            if x.len() == 4 {
                continue;
            }
            let row_sum: Complex64 = (0..verts.len())
                .filter(|&j| distance(x, &verts[j]) == 1)
                .map(|j| vals[j] / (q as f64 + 1.0))
                .sum();
            assert!((pf.get(x).unwrap() - row_sum).norm() <= 1e-14 * row_sum.norm().max(1.0));
            let _ = i;
        }
    }

    #[test]
    fn ball_and_sampled_agree() {
        let z = ctx(3, -1.1, 0.2);
        let xi = parse_end("1.2|0.1", 3).unwrap();
        let k = |v: &Vertex| martin_kernel(&z, v, &xi);
        let b = BallFunction::sample(3, 5, k);
        let s = b.to_sampled();
        let pb = b.lambda_minus_p_power(&z, 2).unwrap();
        let ps = s.lambda_minus_p_power(&z, 2).unwrap();
        assert_eq!(pb.len(), ps.len());
        for (v, w) in pb.entries() {
            assert!((ps.get(&v).unwrap() - w).norm() < 1e-14 * w.norm().max(1.0));
        }
    }

    #[test]
    fn residual_examples() {
        let z = ctx(2, 2.0, 0.0);
        let sph = BallFunction::sample(2, 10, |v| spherical(&z, v));
        assert!(polyharmonic_residual(&z, &sph, 1).unwrap() < 1e-11);
        let spec = KernelSpec::new(z, 2).unwrap();
        let f = BallFunction::sample(2, 10, |v| spec.phi_n(v));
        assert!(polyharmonic_residual(&z, &f, 3).unwrap() < 1e-10);
        assert!(polyharmonic_residual(&z, &f, 2).unwrap() > 1e-4);
        let img = f.lambda_minus_p_power(&z, 2).unwrap();
        assert!(img.max_relative_error(|v| spherical(&z, v)) < 1e-10);
        assert!(matches!(
            polyharmonic_residual(&z, &BallFunction::sample(2, 1, |_| one()), 2),
            Err(Error::DomainExhausted(_))
        ));
    }

    #[test]
    fn spherical_average_examples() {
        let q = 2;
        let c = Complex64::new(0.7, 0.1);
        let f = BallFunction::sample(q, 6, |_| c);
        let center: Vertex = "1.0".parse().unwrap();
        let avg = f.spherical_average(&center).unwrap();
        assert!(avg.iter().all(|(_, w)| (w - c).norm() < 1e-15));

        let radial = BallFunction::sample(q, 6, |v| Complex64::new(v.len() as f64, 0.0));
        let avg = radial.spherical_average(&Vertex::root()).unwrap();
        for (v, w) in avg.iter() {
            assert_eq!(radial.get(v), Some(*w));
        }

        let z = ctx(q, 1.0, 1.0);
        let xi = parse_end("2|1.1.0", q).unwrap();
        let h = BallFunction::sample(q, 8, |v| martin_kernel(&z, v, &xi));
        let avg = h.spherical_average(&center).unwrap();
        let hx = h.get(&center).unwrap();
        for (y, w) in avg.iter() {
            let expect = hx * phi_two_point(&z, &center, y);
            assert!((w - expect).norm() < 1e-10 * expect.norm().max(1.0));
        }
        assert_eq!(avg.get(&center), Some(hx));
        let far: Vertex = "0.0.0.0.0.0.0.0.0".parse().unwrap();
        assert!(matches!(h.spherical_average(&far), Err(Error::Domain(_))));
        let _ = phi(&z, 0);
    }

    #[test]
    fn tube_shrinks_and_keeps_ray() {
        let q = 2;
        let z = ctx(q, 2.0, 0.0);
        let xi = parse_end("0|1", q).unwrap();
        let spec = KernelSpec::new(z, 3).unwrap();
        let f = SampledFunction::tube(q, &xi, 40, 3, |v| spec.extended_kernel(v, &xi));
        let img = f.lambda_minus_p_power(&z, 3).unwrap();
        for k in 0..=37 {
            assert!(img.get(&xi.ray_vertex(k)).is_some(), "ray vertex {k}");
        }
        assert!(img.max_relative_error(|v| martin_kernel(&z, v, &xi)) < 1e-10);
    }
}
