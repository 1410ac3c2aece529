//! The acceptance checks, one function per criterion.
//!
//! Every check is deterministic: random boundary data and ends come from a
//! ChaCha generator seeded by the caller.

use std::fmt;
use std::time::{Duration, Instant};

use num_complex::Complex64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::boundary::{BoundaryDistribution, LocallyConstantFunction};
use crate::error::Result;
use crate::extended::ExtendedContext;
use crate::operators::{polyharmonic_residual, sphere_averages, BallFunction, SampledFunction, VertexField};
use crate::oracle::{first_passage_table, truncated_series, Backend};
use crate::solvers::{
    c_a_constant, convergence_probe, dirichlet_solve, frak_m_a, hl_maximal, poisson_transform,
    riquier_solve, Evaluator,
};
use crate::spectral::{quadratic_roots_oracle, SpectralContext, TreeParams};
use crate::spherical::{c_lambda, phi, phi_closed, KernelSpec, SphericalTable};
use crate::tree::{End, Vertex};

pub const DEFAULT_SEED: u64 = 20_240_917;

#[derive(Debug, Clone, PartialEq)]
pub struct CriterionOutcome {
    pub id: u8,
    pub title: &'static str,
    pub passed: bool,
    pub detail: String,
    pub elapsed: Duration,
}

impl fmt::Display for CriterionOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "criterion {:>2} {} {}: {} ({:.2} s)",
            self.id,
            if self.passed { "PASS" } else { "FAIL" },
            self.title,
            self.detail,
            self.elapsed.as_secs_f64()
        )
    }
}

fn timed<F>(id: u8, title: &'static str, budget: Option<Duration>, body: F) -> CriterionOutcome
where
    F: FnOnce() -> Result<(bool, String)>,
{
    let start = Instant::now();
    let (mut passed, mut detail) = match body() {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e}")),
    };
    let elapsed = start.elapsed();
    if let Some(b) = budget {
        if elapsed > b {
            passed = false;
            detail.push_str(&format!("; over the {:.0} s budget", b.as_secs_f64()));
        }
    }
    CriterionOutcome {
        id,
        title,
        passed,
        detail,
        elapsed,
    }
}

fn c(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

fn ctx(q: u32, lambda: Complex64) -> Result<SpectralContext> {
    SpectralContext::new(q, lambda)
}

/// Spectral parameters for `q ∈ {2,3,5}`: real, imaginary and generic
/// complex `λ`, all with `|λ| > ρ + 0.05`.
pub fn spectral_grid() -> Vec<SpectralContext> {
    let mut out = Vec::new();
    for q in [2u32, 3, 5] {
        let rho = TreeParams::new(q).expect("q >= 2").rho;
        let edge = rho + 0.06;
        let lambdas = [
            c(edge, 0.0),
            c(-edge, 0.0),
            c(1.5, 0.0),
            c(-2.5, 0.0),
            c(4.0, 0.0),
            c(0.0, edge),
            c(0.0, 1.2),
            c(0.0, -2.0),
            c(1.0, 1.0),
            c(-0.7, 0.9),
            c(0.3, -1.1),
            c(2.0, 0.5),
            c(-1.5, -1.5),
            c(0.8, 0.8),
            c(3.0, -2.0),
            c(0.6 * rho, 0.8 * rho + 0.1),
            c(-0.2, -1.05),
            c(1.1, -0.3),
        ];
        for l in lambdas {
            debug_assert!(l.norm() > rho + 0.05);
            out.push(ctx(q, l).expect("grid avoids the spectrum"));
        }
    }
    out
}

/// Spectral identities and the independent quadratic-root oracle.
pub fn criterion_1() -> CriterionOutcome {
    timed(1, "spectral identities", Some(Duration::from_secs(1)), || {
        let grid = spectral_grid();
        let mut worst = [0.0f64; 4];
        let mut min_margin = f64::INFINITY;
        for z in &grid {
            let r = z.residuals();
            let (small, big) = quadratic_roots_oracle(z.q(), z.lambda)?;
            let root_err = ((small - z.f).norm() / z.f.norm()).max((big - z.fc).norm() / z.fc.norm());
            worst[0] = worst[0].max(r.quadratic);
            worst[1] = worst[1].max(r.product);
            worst[2] = worst[2].max(root_err);
            worst[3] = worst[3].max(r.coefficient_sum);
            min_margin = min_margin.min(r.lower_margin).min(r.upper_margin);
        }
        let ok = grid.len() >= 50
            && worst[0] < 1e-12
            && worst[1] < 1e-14
            && worst[2] < 1e-12
            && min_margin > 1e-10;
        Ok((
            ok,
            format!(
                "{} points; quadratic {:.1e}, product {:.1e}, oracle roots {:.1e}, min margin {:.1e}",
                grid.len(),
                worst[0],
                worst[1],
                worst[2],
                min_margin
            ),
        ))
    })
}

/// Recursion against the closed form for `φ_k`.
pub fn criterion_2() -> CriterionOutcome {
    timed(2, "spherical backends", Some(Duration::from_secs(1)), || {
        let mut worst = 0.0f64;
        for z in spectral_grid() {
            let table = SphericalTable::new(z, 60);
            for (k, v) in table.values().iter().enumerate() {
                let closed = phi_closed(&z, k);
                worst = worst.max((v - closed).norm() / closed.norm().max(1.0));
            }
        }
        let mut worst_one = 0.0f64;
        for q in [2u32, 3, 5] {
            let z = ctx(q, c(1.0, 0.0))?;
            let table = SphericalTable::new(z, 60);
            for (k, v) in table.values().iter().enumerate() {
                worst_one = worst_one.max((v - 1.0).norm()).max((phi_closed(&z, k) - 1.0).norm());
            }
        }
        Ok((
            worst < 1e-10 && worst_one < 1e-13,
            format!("recursion vs closed form {worst:.1e}; |φ_k(1) - 1| {worst_one:.1e}"),
        ))
    })
}

/// Harmonicity of `Φ` on balls, `(λI-P)^n Φ_n = Φ` and the kernel identity deep in tubes.
pub fn criterion_3() -> CriterionOutcome {
    timed(3, "harmonicity and polyharmonicity", Some(Duration::from_secs(30)), || {
        let mut ball_worst = 0.0f64;
        for q in [2u32, 3] {
            for l in [c(2.0, 0.0), c(1.0, 1.0), c(-0.4, 0.7)] {
                let z = ctx(q, l)?;
                let f = BallFunction::sample_radial(q, 12, |k| phi(&z, k));
                ball_worst = ball_worst.max(polyharmonic_residual(&z, &f, 1)?);
            }
        }
        let mut phi_worst = 0.0f64;
        let mut kernel_worst = 0.0f64;
        for q in [2u32, 3] {
            let xi = End::new("1".parse()?, vec![0, 1], q)?;
            let other = End::new("2".parse()?, vec![1], q)?;
            for l in [c(2.0, 0.0), c(1.0, 1.0)] {
                let z = ctx(q, l)?;
                let e = ExtendedContext::new(&z);
                for n in 1..=4 {
                    let f = SampledFunction::tube(q, &xi, 100 + n, n, |x| {
                        e.phi_n(n, x.len()).expect("order checked")
                    });
                    let img = f.lambda_minus_p_power(&z, n)?;
                    phi_worst = phi_worst
                        .max(img.max_relative_error(|x| e.phi_n(0, x.len()).expect("order 0")));
                    for end in [&xi, &other] {
                        let f = SampledFunction::tube(q, &xi, 100 + n, n, |x| {
                            e.extended_kernel(n, x, end).expect("order checked")
                        });
                        let img = f.lambda_minus_p_power(&z, n)?;
                        kernel_worst =
                            kernel_worst.max(img.max_relative_error(|x| e.martin_kernel(x, end)));
                    }
                }
            }
        }
        Ok((
            ball_worst < 1e-11 && phi_worst < 1e-10 && kernel_worst < 1e-10,
            format!(
                "ball residual {ball_worst:.1e}; (λI-P)^n Φ_n vs Φ {phi_worst:.1e}; (λI-P)^n K hor_n vs K {kernel_worst:.1e} (depth 100)"
            ),
        ))
    })
}

fn probe_vertex(len: usize, q: u32) -> Vertex {
    let word = (0..len)
        .map(|i| if i == 0 { q } else { (i as u32 * 7 + 3) % q })
        .collect();
    Vertex::from_word(word, q).expect("letters in range")
}

/// Finite-sum and arc-descent backends for `Φ_n`.
pub fn criterion_4() -> CriterionOutcome {
    timed(4, "polyspherical cross-check", None, || {
        let mut worst = 0.0f64;
        let mut root_worst = 0.0f64;
        let mut one_worst = 0.0f64;
        for z in spectral_grid() {
            for n in 0..=4 {
                let spec = KernelSpec::new(z, n)?;
                for len in 0..=30 {
                    let x = probe_vertex(len, z.q());
                    let fast = spec.phi_n_scaled(len);
                    let slow = spec.phi_n_descent(&x);
                    let (abs_m, abs_ln) = spec.phi_abs_n_scaled(len);
                    let diff = (fast - slow).ln_abs();
                    if !(fast - slow).is_zero() {
                        worst = worst.max((diff - abs_ln).exp() / abs_m);
                    }
                }
                if n >= 1 {
                    root_worst = root_worst
                        .max(spec.phi_n(&Vertex::root()).norm())
                        .max(spec.phi_n_descent(&Vertex::root()).to_complex().norm());
                }
                if n == 1 {
                    let x = probe_vertex(1, z.q());
                    one_worst = one_worst
                        .max((spec.phi_n(&x) + 1.0).norm())
                        .max((spec.phi_n_descent(&x).to_complex() + 1.0).norm());
                }
            }
        }
        Ok((
            worst < 1e-11 && root_worst < 1e-12 && one_worst < 1e-12,
            format!(
                "backends {worst:.1e} relative to |Φ|_n; |Φ_n(o)| {root_worst:.1e}; |Φ_1(1) + 1| {one_worst:.1e}"
            ),
        ))
    })
}

/// Strict decrease of `values` once it is not already an exact zero.
fn strictly_decreasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] < w[0] || (w[0] == 0.0 && w[1] == 0.0))
}

/// Asymptotics of `Φ_n`, `Φ_k/Φ_n` and `|Φ|_n/|Φ_n|` at radii 50, 100, 200, 300.
pub fn criterion_5() -> CriterionOutcome {
    timed(5, "asymptotics", Some(Duration::from_secs(10)), || {
        let radii = [50usize, 100, 200, 300];
        let mut bad = Vec::new();
        let mut cases = 0;
        for z in spectral_grid() {
            for n in 0..=4 {
                let spec = KernelSpec::new(z, n)?;
                cases += 1;
                let dev: Vec<f64> = radii
                    .iter()
                    .map(|&r| spec.asymptotic_deviation(r).map(|d| d.norm()))
                    .collect::<Result<_>>()?;
                let abs_dev: Vec<f64> = radii
                    .iter()
                    .map(|&r| spec.abs_ratio_deviation(r).map(f64::abs))
                    .collect::<Result<_>>()?;
                let mut ratio_ok = true;
                for k in 0..n {
                    let lower = KernelSpec::new(z, k)?;
                    let ratios: Vec<f64> = radii
                        .iter()
                        .map(|&r| lower.phi_n_scaled(r).ratio(spec.phi_n_scaled(r)).norm())
                        .collect();
                    ratio_ok &= strictly_decreasing(&ratios);
                }
                if !(strictly_decreasing(&dev) && strictly_decreasing(&abs_dev) && ratio_ok) {
                    bad.push(format!("q={} λ={} n={n}", z.q(), z.lambda));
                }
                let _ = c_lambda(&z);
            }
        }
        Ok((
            bad.is_empty(),
            if bad.is_empty() {
                format!("{cases} (λ, n) cases decrease strictly")
            } else {
                format!("{} of {cases} cases not decreasing: {}", bad.len(), bad.join(", "))
            },
        ))
    })
}

fn probe_contexts() -> Result<Vec<SpectralContext>> {
    Ok(vec![
        ctx(2, c(2.0, 0.0))?,
        ctx(3, c(1.0, 1.0))?,
        ctx(2, c(-1.5, 0.5))?,
        ctx(3, c(0.0, -1.4))?,
        ctx(5, c(1.2, 0.0))?,
    ])
}

/// A random end, forced into `∂T_v` for the given `v` when one is supplied.
fn end_in(rng: &mut ChaCha8Rng, q: u32, v: Option<&Vertex>) -> End {
    let e = End::random(rng, q, 6, 3);
    match v {
        Some(v) if !v.is_root() => {
            let mut word = v.word().to_vec();
            word.extend((v.len()..v.len() + 2).map(|i| e.letter(i) % q));
            End::new(Vertex::from_word(word, q).expect("valid"), e.period().to_vec(), q)
                .expect("valid")
        }
        _ => e,
    }
}

/// Dirichlet solutions: boundary limits along rays and the value at the root.
pub fn criterion_6(seed: u64) -> CriterionOutcome {
    timed(6, "dirichlet probe", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let contexts = probe_contexts()?;
        let mut worst_final = 0.0f64;
        let mut worst_root = 0.0f64;
        let mut non_monotone = Vec::new();
        for i in 0..10 {
            let z = contexts[i % contexts.len()];
            let q = z.q();
            let g = LocallyConstantFunction::random(&mut rng, q, 4, 3);
            let h = dirichlet_solve(&z, &g);
            worst_root = worst_root.max((h.eval(&Vertex::root()) - g.integrate_against_m(q)).norm());
            let r = KernelSpec::new(z, 0)?.r_threshold()?;
            let start = r.max(g.resolution_depth());
            let floor = 1e-13 * g.sup_norm(q).max(1.0);
            for j in 0..5 {
                let anchor = g.terms().get(j).map(|(v, _)| v);
                let xi = end_in(&mut rng, q, anchor);
                let depths: Vec<usize> = (r..=r + 40).collect();
                let rep = convergence_probe(&h, 0, &z, &xi, 0, &depths, g.evaluate(&xi))?;
                worst_final = worst_final.max(rep.error_at(r + 40).expect("depth probed"));
                if !rep.decreasing_from(start, floor) {
                    non_monotone.push(format!("g{i} ξ={xi}"));
                }
            }
        }
        Ok((
            worst_final < 1e-6 && worst_root < 1e-13 && non_monotone.is_empty(),
            format!(
                "error at R+40 {worst_final:.1e}; |h(o) - ∫g dm| {worst_root:.1e}; non-monotone probes {}",
                non_monotone.len()
            ),
        ))
    })
}

/// `h̄(y) = h(x) Φ(x,y)` for λ-harmonic `h` on spheres of radius ≤ 10.
pub fn criterion_7(seed: u64) -> CriterionOutcome {
    timed(7, "spherical-average identity", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 7);
        let z2 = ctx(2, c(2.0, 0.0))?;
        let z3 = ctx(3, c(1.0, 1.0))?;
        let inside = ctx(2, c(0.0, 0.3))?;
        let functions: Vec<(SpectralContext, Evaluator)> = vec![
            (z2, dirichlet_solve(&z2, &LocallyConstantFunction::constant(c(1.0, 0.0)))),
            (z2, dirichlet_solve(&z2, &LocallyConstantFunction::random(&mut rng, 2, 5, 3))),
            (
                z3,
                poisson_transform(
                    &z3,
                    0,
                    BoundaryDistribution::PointMass {
                        end: End::random(&mut rng, 3, 4, 2),
                        weight: c(1.0, -0.5),
                    },
                )?,
            ),
            (z3, dirichlet_solve(&z3, &LocallyConstantFunction::random(&mut rng, 3, 5, 3))),
            (
                inside,
                dirichlet_solve(&inside, &LocallyConstantFunction::random(&mut rng, 2, 5, 3)),
            ),
        ];
        let mut worst = 0.0f64;
        for (z, h) in &functions {
            let q = z.q();
            for len in [0usize, 1, 2, 4, 5] {
                let center = probe_vertex(len, q);
                let hx = h.eval(&center);
                let avgs = sphere_averages(q, &center, 10, |v| h.eval(v));
                for (r, avg) in avgs.iter().enumerate() {
                    let expect = hx * phi(z, r);
                    let scale = crate::tree::sphere(&center, r, q)
                        .iter()
                        .map(|v| h.eval(v).norm())
                        .fold(expect.norm(), f64::max);
                    worst = worst.max((avg - expect).norm() / scale.max(f64::MIN_POSITIVE));
                }
            }
        }
        Ok((
            worst < 1e-10,
            format!("5 centers × 5 functions, max error relative to sphere maximum {worst:.1e}"),
        ))
    })
}

/// Riquier components: Dirichlet consistency on tubes and normalized boundary limits.
pub fn criterion_8(seed: u64) -> CriterionOutcome {
    timed(8, "riquier probe", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 8);
        let mut tube_worst = 0.0f64;
        let mut summed_worst = 0.0f64;
        let mut single_worst = 0.0f64;
        for z in [ctx(2, c(2.0, 0.0))?, ctx(3, c(1.0, 1.0))?] {
            let q = z.q();
            let gs: Vec<LocallyConstantFunction> = (0..3)
                .map(|_| LocallyConstantFunction::random(&mut rng, q, 4, 3))
                .collect();
            let (parts, _) = riquier_solve(&z, &gs)?;
            let abs_kernel = KernelSpec::new(z, 0)?;
            for (k, g) in gs.iter().enumerate() {
                let xi = end_in(&mut rng, q, g.terms().first().map(|(v, _)| v));
                let h = dirichlet_solve(&z, g);
                let f = SampledFunction::tube(q, &xi, 40 + k, k, |x| parts[k].eval(x));
                let img = f.lambda_minus_p_power(&z, k)?;
                let sup = g.sup_norm(q).max(f64::MIN_POSITIVE);
                tube_worst = tube_worst.max(
                    img.max_weighted_error(|x| h.eval(x), |x| sup * abs_kernel.phi_abs_n(x)),
                );

                let r = KernelSpec::new(z, k)?.r_threshold()?;
                let target = g.evaluate(&xi);
                let sum = Evaluator::Sum(parts[..=k].to_vec());
                let rep = convergence_probe(&sum, k, &z, &xi, 0, &[r + 40], target)?;
                summed_worst = summed_worst.max(rep.rows[0].abs_error);
                let rep = convergence_probe(&parts[k], k, &z, &xi, 0, &[r + 40], target)?;
                single_worst = single_worst.max(rep.rows[0].abs_error);
            }
        }
        Ok((
            tube_worst < 1e-10 && summed_worst < 1e-5,
            format!(
                "(λI-P)^k f_k vs h_gk {tube_worst:.1e}; (f_0+…+f_k)/Φ_k error at R+40 {summed_worst:.1e}; f_k/Φ_k error at R+40 {single_worst:.1e}"
            ),
        ))
    })
}

/// Point-mass transforms vanish along cones at other ends.
pub fn criterion_9(seed: u64) -> CriterionOutcome {
    timed(9, "fatou point mass", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 9);
        let mut worst = 0.0f64;
        let mut non_monotone = Vec::new();
        let mut cases = 0;
        for q in [2u32, 3] {
            for l in [c(2.0, 0.0), c(1.0, 1.0)] {
                let z = ctx(q, l)?;
                let r = KernelSpec::new(z, 0)?.r_threshold()?;
                for _ in 0..3 {
                    let xi0 = End::random(&mut rng, q, 4, 2);
                    let mut xi = End::random(&mut rng, q, 4, 2);
                    while xi.confluent_depth_end(&xi0).is_none() {
                        xi = End::random(&mut rng, q, 4, 2);
                    }
                    let split = xi.confluent_depth_end(&xi0).expect("distinct ends");
                    let f = poisson_transform(
                        &z,
                        0,
                        BoundaryDistribution::PointMass {
                            end: xi0.clone(),
                            weight: c(1.0, 0.0),
                        },
                    )?;
                    for a in 0..=2 {
                        cases += 1;
                        let depths: Vec<usize> = (r..=r + 40).collect();
                        let rep = convergence_probe(&f, 0, &z, &xi, a, &depths, c(0.0, 0.0))?;
                        worst = worst.max(rep.error_at(r + 40).expect("probed"));
                        if !rep.decreasing_from(r.max(split + a), 0.0) {
                            non_monotone.push(format!("q={q} λ={l} ξ0={xi0} ξ={xi} a={a}"));
                        }
                    }
                }
            }
        }
        Ok((
            worst < 1e-6 && non_monotone.is_empty(),
            format!(
                "{cases} cone probes; max |value| at R+40 {worst:.1e}; non-monotone {}",
                if non_monotone.is_empty() { "none".to_string() } else { non_monotone.join(", ") }
            ),
        ))
    })
}

/// `𝔐_a g ≤ C_a M g` on sampled triples.
pub fn criterion_10(seed: u64) -> CriterionOutcome {
    timed(10, "maximal inequality", None, || {
        let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 10);
        let settings = [
            (ctx(2, c(2.0, 0.0))?, 1usize),
            (ctx(3, c(1.0, 1.0))?, 2),
            (ctx(2, c(-1.2, 0.6))?, 0),
            (ctx(3, c(2.5, 0.0))?, 1),
        ];
        let mut violations = 0;
        let mut worst_ratio = 0.0f64;
        let mut triples = 0;
        for i in 0..20 {
            let (z, n) = settings[i % settings.len()];
            let q = z.q();
            let g = LocallyConstantFunction::random(&mut rng, q, 5, 4);
            let r = KernelSpec::new(z, n)?.r_threshold()?;
            for _ in 0..30 {
                let xi = End::random(&mut rng, q, 6, 3);
                let mg = hl_maximal(q, &g, &xi);
                for a in 0..=2 {
                    triples += 1;
                    let m = frak_m_a(&z, n, &g, &xi, a, r + 25)?;
                    let bound = c_a_constant(&z, n, a)? * mg;
                    if m > bound {
                        violations += 1;
                    }
                    if bound > 0.0 {
                        worst_ratio = worst_ratio.max(m / bound);
                    }
                }
            }
        }
        Ok((
            violations == 0,
            format!("{triples} triples, {violations} violations, max 𝔐_a g / (C_a Mg) = {worst_ratio:.3}"),
        ))
    })
}

/// First-passage series against the closed form.
pub fn criterion_11() -> CriterionOutcome {
    timed(11, "oracle agreement", None, || {
        let mut worst = 0.0f64;
        let mut mult_ok = true;
        let mut mult_worst = 0.0f64;
        for q in [2u32, 3] {
            let table = first_passage_table(q, 4, 2000, Backend::Double)?;
            for l in [1.5, 2.0] {
                let z = ctx(q, c(l, 0.0))?;
                let one = truncated_series(&table, 1, z.lambda)?;
                worst = worst.max((one.value - z.f).norm());
                for d in 2..=4 {
                    let s = truncated_series(&table, d, z.lambda)?;
                    let power = one.value.powi(d as i32);
                    let spread = d as f64 * one.value.norm().powi(d as i32 - 1) * one.tail_bound;
                    let diff = (s.value - power).norm();
                    mult_worst = mult_worst.max(diff);
                    mult_ok &= diff <= 2.0 * (s.tail_bound + spread);
                }
            }
        }
        Ok((
            worst < 1e-8 && mult_ok,
            format!("|series - F| {worst:.1e} (N = 2000); |series_d - series_1^d| {mult_worst:.1e} within twice the tail bound: {mult_ok}"),
        ))
    })
}

/// Runs every criterion in order.
pub fn run_all(seed: u64) -> Vec<CriterionOutcome> {
    vec![
        criterion_1(),
        criterion_2(),
        criterion_3(),
        criterion_4(),
        criterion_5(),
        criterion_6(seed),
        criterion_7(seed),
        criterion_8(seed),
        criterion_9(seed),
        criterion_10(seed),
        criterion_11(),
    ]
}
