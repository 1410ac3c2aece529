//! Dirichlet and Riquier problems at infinity, boundary-convergence probes
//! and the maximal operators.

use num_complex::Complex64;

use crate::boundary::{arc_measure_f64, BoundaryDistribution, LocallyConstantFunction};
use crate::error::{Error, Result};
use crate::scaled::Scaled;
use crate::spectral::SpectralContext;
use crate::spherical::{vertex_scale, KernelSpec, MAX_ORDER};
use crate::tree::{Cone, End, Vertex};

/// `x ↦ ∫ K(x,ξ|λ) hor_n(x,ξ|λ) dν(ξ)` for finitely described `ν`, or a sum
/// of such transforms over one spectral context.
#[derive(Debug, Clone, PartialEq)]
pub enum Evaluator {
    Transform {
        spec: KernelSpec,
        data: BoundaryDistribution,
    },
    Sum(Vec<Evaluator>),
}

impl Evaluator {
    /// The value at `x` in the common scale `|x| ln F̌`.
    pub fn eval_scaled(&self, x: &Vertex) -> Scaled {
        match self {
            Evaluator::Transform { spec, data } => transform_at(spec, data, x),
            Evaluator::Sum(parts) => parts
                .iter()
                .map(|p| p.eval_scaled(x))
                .fold(Scaled::zero_at(self.scale_at(x.len())), |a, b| a + b),
        }
    }

    pub fn eval(&self, x: &Vertex) -> Complex64 {
        self.eval_scaled(x).to_complex()
    }

    pub fn ctx(&self) -> Option<&SpectralContext> {
        match self {
            Evaluator::Transform { spec, .. } => Some(&spec.ctx),
            Evaluator::Sum(parts) => parts.first().and_then(Evaluator::ctx),
        }
    }

    fn scale_at(&self, len: usize) -> Complex64 {
        self.ctx()
            .map(|c| vertex_scale(c, len))
            .unwrap_or_default()
    }

    /// Density of the boundary data at `ξ`; `None` for sums.
    pub fn boundary_value(&self, xi: &End) -> Option<Complex64> {
        match self {
            Evaluator::Transform { data, .. } => Some(data.density_at(xi)),
            Evaluator::Sum(_) => None,
        }
    }
}

fn transform_at(spec: &KernelSpec, data: &BoundaryDistribution, x: &Vertex) -> Scaled {
    match data {
        BoundaryDistribution::AbsolutelyContinuous(g) => g
            .terms()
            .iter()
            .map(|(v, c)| spec.integrate_kernel_over_arc(x, v).scale_by(*c))
            .fold(Scaled::zero_at(vertex_scale(&spec.ctx, x.len())), |a, b| a + b),
        BoundaryDistribution::PointMass { end, weight } => {
            spec.extended_kernel_scaled(x, end).scale_by(*weight)
        }
        BoundaryDistribution::Combination(parts) => parts
            .iter()
            .map(|p| transform_at(spec, p, x))
            .fold(Scaled::zero_at(vertex_scale(&spec.ctx, x.len())), |a, b| a + b),
    }
}

/// The transform of `data` against `K hor_n`; λ-polyharmonic of order `n + 1`.
pub fn poisson_transform(
    ctx: &SpectralContext,
    n: usize,
    data: impl Into<BoundaryDistribution>,
) -> Result<Evaluator> {
    Ok(Evaluator::Transform {
        spec: KernelSpec::new(*ctx, n)?,
        data: data.into(),
    })
}

impl From<LocallyConstantFunction> for BoundaryDistribution {
    fn from(g: LocallyConstantFunction) -> Self {
        BoundaryDistribution::AbsolutelyContinuous(g)
    }
}

/// `Φ_n` as an [`Evaluator`].
pub fn polyspherical(ctx: &SpectralContext, n: usize) -> Result<Evaluator> {
    poisson_transform(ctx, n, LocallyConstantFunction::constant(Complex64::new(1.0, 0.0)))
}

/// The λ-harmonic function with boundary values `g` relative to `Φ`.
pub fn dirichlet_solve(ctx: &SpectralContext, g: &LocallyConstantFunction) -> Evaluator {
    poisson_transform(ctx, 0, g.clone()).expect("order 0 is always supported")
}

/// Components `f_k = ∫ g_k K hor_k dm` and their sum.
pub fn riquier_solve(
    ctx: &SpectralContext,
    data: &[LocallyConstantFunction],
) -> Result<(Vec<Evaluator>, Evaluator)> {
    if data.is_empty() {
        return Err(Error::Parameter("riquier problem needs at least one g_k".into()));
    }
    if data.len() > MAX_ORDER {
        return Err(Error::Parameter(format!(
            "riquier problem supports at most {MAX_ORDER} boundary functions, got {}",
            data.len()
        )));
    }
    let parts = data
        .iter()
        .enumerate()
        .map(|(k, g)| poisson_transform(ctx, k, g.clone()))
        .collect::<Result<Vec<_>>>()?;
    let sum = Evaluator::Sum(parts.clone());
    Ok((parts, sum))
}

/// One depth of a [`ConvergenceReport`]: the worst cone member at that depth.
#[derive(Debug, Clone, PartialEq)]
pub struct ProbeRow {
    pub depth: usize,
    pub vertex: Vertex,
    pub value: Complex64,
    pub target: Complex64,
    pub abs_error: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceReport {
    pub end: End,
    pub a: usize,
    pub r_threshold: usize,
    pub rows: Vec<ProbeRow>,
}

impl ConvergenceReport {
    pub fn error_at(&self, depth: usize) -> Option<f64> {
        self.rows
            .iter()
            .find(|r| r.depth == depth)
            .map(|r| r.abs_error)
    }

    /// Whether errors at depths `≥ start` strictly decrease until they reach
    /// `floor`, and stay below it afterwards.
    pub fn decreasing_from(&self, start: usize, floor: f64) -> bool {
        let errs: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.depth >= start)
            .map(|r| r.abs_error)
            .collect();
        errs.windows(2)
            .all(|w| w[1] < w[0] || (w[0] <= floor && w[1] <= floor))
    }
}

/// Normalized values `numerator(x) / Φ_n(x)` on `Γ_a(ξ)` at the given depths.
pub fn convergence_probe(
    numerator: &Evaluator,
    n: usize,
    ctx: &SpectralContext,
    xi: &End,
    a: usize,
    depths: &[usize],
    target: Complex64,
) -> Result<ConvergenceReport> {
    ctx.require_outside_disk()?;
    if depths.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::Parameter("probe depths must strictly increase".into()));
    }
    let spec = KernelSpec::new(*ctx, n)?;
    let r_threshold = spec.r_threshold()?;
    let cone = Cone::new(xi.clone(), a);
    let q = ctx.q();
    let rows = depths
        .iter()
        .map(|&d| {
            let phi = spec.phi_n_scaled(d);
            cone.sample(d, q)
                .into_iter()
                .map(|x| {
                    let value = numerator.eval_scaled(&x).ratio(phi);
                    let abs_error = (value - target).norm();
                    ProbeRow {
                        depth: d,
                        vertex: x,
                        value,
                        target,
                        abs_error,
                    }
                })
                .fold(None::<ProbeRow>, |worst, row| match worst {
                    Some(w) if w.abs_error >= row.abs_error => Some(w),
                    _ => Some(row),
                })
                .expect("cones are nonempty at every depth")
        })
        .collect();
    Ok(ConvergenceReport {
        end: xi.clone(),
        a,
        r_threshold,
        rows,
    })
}

/// `Mg(ξ) = sup_{x ∈ π(o,ξ)} m(∂T_x)^{-1} ∫_{∂T_x} |g| dm`.
///
/// Below the resolution depth of `g` the average is `|g(ξ)|`, which the
/// average at the resolution depth already equals.
pub fn hl_maximal(q: u32, g: &LocallyConstantFunction, xi: &End) -> f64 {
    (0..=g.resolution_depth())
        .map(|k| {
            let x = xi.ray_vertex(k);
            g.abs_integral_over_arc(q, &x) / arc_measure_f64(q, k)
        })
        .fold(0.0, f64::max)
}

/// `sup |∫ K hor_n g dm / Φ_n(x)|` over `x ∈ Γ_a(ξ)` with `R ≤ |x| ≤ max_depth`.
pub fn frak_m_a(
    ctx: &SpectralContext,
    n: usize,
    g: &LocallyConstantFunction,
    xi: &End,
    a: usize,
    max_depth: usize,
) -> Result<f64> {
    let spec = KernelSpec::new(*ctx, n)?;
    let r = spec.r_threshold()?;
    if max_depth < r {
        return Err(Error::Parameter(format!(
            "max depth {max_depth} is below the threshold radius {r}"
        )));
    }
    let f = poisson_transform(ctx, n, g.clone())?;
    let cone = Cone::new(xi.clone(), a);
    let mut sup = 0.0f64;
    for d in r..=max_depth {
        let phi = spec.phi_n_scaled(d);
        for x in cone.sample(d, ctx.q()) {
            sup = sup.max(f.eval_scaled(&x).ratio(phi).norm());
        }
    }
    Ok(sup)
}

/// `C_a = (1+2a)^n |F|^{-2a} C_0` with `C_0 = 2(q+1) / (q |ǎ|) · 1/(1 - |F/F̌|)`.
pub fn c_a_constant(ctx: &SpectralContext, n: usize, a: usize) -> Result<f64> {
    ctx.require_outside_disk()?;
    let qf = ctx.qf();
    let c0 = 2.0 * (qf + 1.0) / (qf * ctx.ac.norm()) / (1.0 - (ctx.f / ctx.fc).norm());
    let widen = (1.0 + 2.0 * a as f64).powi(n as i32) * ctx.f.norm().powi(-2 * a as i32);
    Ok(widen * c0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::{polyharmonic_residual, SampledFunction};
    use crate::spherical::spherical;
    use crate::tree::{ball, parse_end};

    fn ctx(q: u32, re: f64, im: f64) -> SpectralContext {
        SpectralContext::new(q, Complex64::new(re, im)).unwrap()
    }

    fn c(re: f64) -> Complex64 {
        Complex64::new(re, 0.0)
    }

    fn v(s: &str) -> Vertex {
        s.parse().unwrap()
    }

    #[test]
    fn constant_data_gives_polyspherical() {
        let z = ctx(2, 1.2, 0.8);
        for n in 0..4 {
            let f = polyspherical(&z, n).unwrap();
            let spec = KernelSpec::new(z, n).unwrap();
            for x in ball(&Vertex::root(), 6, 2) {
                let want = spec.phi_n_scaled(x.len());
                let got = f.eval_scaled(&x);
                if want.is_zero() {
                    assert!(got.mantissa.norm() < 1e-14);
                } else {
                    assert!((got.ratio(want) - 1.0).norm() < 1e-12);
                }
            }
        }
        let h = dirichlet_solve(&z, &LocallyConstantFunction::constant(c(1.0)));
        for x in ball(&Vertex::root(), 5, 2) {
            assert!((h.eval(&x) / spherical(&z, &x) - 1.0).norm() < 1e-12);
        }
    }

    #[test]
    fn value_at_root_is_mean() {
        let z = ctx(3, -2.0, 0.5);
        let g = LocallyConstantFunction::new(vec![
            (v("1"), c(2.0)),
            (v("2.0.1"), Complex64::new(-1.0, 3.0)),
            (v("o"), c(0.25)),
        ]);
        let h = dirichlet_solve(&z, &g);
        assert!((h.eval(&Vertex::root()) - g.integrate_against_m(3)).norm() < 1e-15);

        let zero_mean = LocallyConstantFunction::new(vec![(v("0"), c(1.0)), (v("1"), c(-1.0))]);
        assert!(dirichlet_solve(&z, &zero_mean).eval(&Vertex::root()).norm() < 1e-15);
    }

    #[test]
    fn point_mass_transform() {
        let z = ctx(2, 2.0, 0.0);
        let xi0 = parse_end("1|0.1", 2).unwrap();
        let w = Complex64::new(0.5, -2.0);
        let f = poisson_transform(&z, 2, BoundaryDistribution::PointMass { end: xi0.clone(), weight: w }).unwrap();
        let spec = KernelSpec::new(z, 2).unwrap();
        for x in ball(&Vertex::root(), 4, 2) {
            assert!((f.eval(&x) - w * spec.extended_kernel(&x, &xi0)).norm() < 1e-12);
        }
    }

    #[test]
    fn riquier_examples() {
        let z = ctx(2, 2.0, 0.0);
        assert!(matches!(riquier_solve(&z, &[]), Err(Error::Parameter(_))));
        let g = LocallyConstantFunction::indicator(v("0.1"));
        let (parts, sum) = riquier_solve(&z, std::slice::from_ref(&g)).unwrap();
        let h = dirichlet_solve(&z, &g);
        for x in ball(&Vertex::root(), 4, 2) {
            assert_eq!(parts[0].eval(&x), h.eval(&x));
            assert_eq!(sum.eval(&x), h.eval(&x));
        }
        let ones = vec![LocallyConstantFunction::constant(c(1.0)); 3];
        let (parts, sum) = riquier_solve(&z, &ones).unwrap();
        let x = v("0.1.1.0");
        let mut total = c(0.0);
        for (k, f) in parts.iter().enumerate() {
            let p = KernelSpec::new(z, k).unwrap().phi_n(&x);
            assert!((f.eval(&x) - p).norm() < 1e-12 * p.norm().max(1.0));
            total += p;
        }
        assert!((sum.eval(&x) - total).norm() < 1e-12 * total.norm());
    }

    #[test]
    fn solver_order_certificate() {
        let z = ctx(3, 1.0, 1.0);
        let xi = parse_end("0|2", 3).unwrap();
        let g = LocallyConstantFunction::new(vec![(v("0"), c(1.0)), (v("0.2.1"), c(-3.0))]);
        for n in 0..3 {
            let f = poisson_transform(&z, n, g.clone()).unwrap();
            let tube = SampledFunction::tube(3, &xi, 14, n + 1, |x| f.eval(x));
            assert!(polyharmonic_residual(&z, &tube, n + 1).unwrap() < 1e-10);
            if n > 0 {
                assert!(polyharmonic_residual(&z, &tube, n).unwrap() > 1e-4);
            }
        }
    }

    #[test]
    fn probes() {
        let z = ctx(2, 2.0, 0.0);
        let xi = parse_end("0|1", 2).unwrap();
        let r = KernelSpec::new(z, 1).unwrap().r_threshold().unwrap();
        let depths: Vec<usize> = (0..6).map(|i| r + 5 * i).collect();
        let f = polyspherical(&z, 1).unwrap();
        let rep = convergence_probe(&f, 1, &z, &xi, 1, &depths, c(1.0)).unwrap();
        assert_eq!(rep.r_threshold, r);
        assert!(rep.decreasing_from(r, 1e-14));

        let inside = LocallyConstantFunction::indicator(v("0.1"));
        let h = dirichlet_solve(&z, &inside);
        let rep = convergence_probe(&h, 0, &z, &xi, 0, &[20, 30, 40], c(1.0)).unwrap();
        assert!(rep.error_at(40).unwrap() < 1e-8);
        let away = parse_end("1|0", 2).unwrap();
        let rep = convergence_probe(&h, 0, &z, &away, 2, &[20, 30, 40], c(0.0)).unwrap();
        assert!(rep.error_at(40).unwrap() < 1e-8);
        assert!(rep.decreasing_from(0, 0.0));

        assert!(matches!(
            convergence_probe(&h, 0, &z, &xi, 0, &[5, 5], c(1.0)),
            Err(Error::Parameter(_))
        ));
        let inner = ctx(2, 0.0, 0.5);
        let h = dirichlet_solve(&inner, &inside);
        assert!(matches!(
            convergence_probe(&h, 0, &inner, &xi, 0, &[5], c(1.0)),
            Err(Error::Regime { .. })
        ));
    }

    #[test]
    fn maximal_examples() {
        let one = LocallyConstantFunction::constant(c(1.0));
        let xi = parse_end("0.1|1", 2).unwrap();
        assert_eq!(hl_maximal(2, &one, &xi), 1.0);
        let g = LocallyConstantFunction::indicator(v("0.1.1"));
        assert_eq!(hl_maximal(2, &g, &xi), 1.0);
        let g = LocallyConstantFunction::indicator(v("0.0.0"));
        assert!((hl_maximal(2, &g, &xi) - 0.25).abs() < 1e-15);

        let z = ctx(2, 2.0, 0.0);
        let m = frak_m_a(&z, 0, &one, &xi, 0, 40).unwrap();
        assert!((m - 1.0).abs() < 1e-12);
        let c0 = c_a_constant(&z, 0, 0).unwrap();
        assert!(c0 >= 1.0);
        assert_eq!(c_a_constant(&z, 3, 0).unwrap(), c0);
        let c2 = c_a_constant(&z, 2, 1).unwrap();
        assert!((c2 - 9.0 / z.f.norm_sqr() * c0).abs() < 1e-12 * c2);
    }
}
