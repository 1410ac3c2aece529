//! Boundary data on `∂T`: the uniform distribution, locally constant
//! functions and finitely additive distributions on boundary arcs.

use std::fmt::Write as _;

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::One;
use rand::Rng;

use crate::error::{Error, Result};
use crate::tree::{parse_end, End, Vertex};

/// `m(∂T_v)` as an exact rational.
pub fn arc_measure(q: u32, v: &Vertex) -> BigRational {
    if v.is_root() {
        return BigRational::one();
    }
    let denom = BigInt::from(q + 1) * num_traits::pow(BigInt::from(q), v.len() - 1);
    BigRational::new(BigInt::one(), denom)
}

/// `m(∂T_v)` for `|v| = depth`, in floating point.
pub fn arc_measure_f64(q: u32, depth: usize) -> f64 {
    if depth == 0 {
        1.0
    } else {
        let qf = q as f64;
        1.0 / ((qf + 1.0) * qf.powi(depth as i32 - 1))
    }
}

/// `g = Σ_j c_j 1_{∂T_{v_j}}`; overlapping arcs add up.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct LocallyConstantFunction {
    terms: Vec<(Vertex, Complex64)>,
}

impl LocallyConstantFunction {
    pub fn new(terms: Vec<(Vertex, Complex64)>) -> Self {
        LocallyConstantFunction { terms }
    }

    pub fn constant(c: Complex64) -> Self {
        Self::new(vec![(Vertex::root(), c)])
    }

    pub fn indicator(v: Vertex) -> Self {
        Self::new(vec![(v, Complex64::new(1.0, 0.0))])
    }

    pub fn terms(&self) -> &[(Vertex, Complex64)] {
        &self.terms
    }

    pub fn validate(&self, q: u32) -> Result<()> {
        self.terms.iter().try_for_each(|(v, _)| v.validate(q))
    }

    /// Depth below which `g` is constant on every arc.
    pub fn resolution_depth(&self) -> usize {
        self.terms.iter().map(|(v, _)| v.len()).max().unwrap_or(0)
    }

    /// `g(ξ)`.
    pub fn evaluate(&self, xi: &End) -> Complex64 {
        self.terms
            .iter()
            .filter(|(v, _)| xi.passes_through(v))
            .map(|(_, c)| c)
            .sum()
    }

    /// `∫ g dm`.
    pub fn integrate_against_m(&self, q: u32) -> Complex64 {
        self.terms
            .iter()
            .map(|(v, c)| c * arc_measure_f64(q, v.len()))
            .sum()
    }

    /// The constant value of `g` on `∂T_v`, provided no term sits strictly below `v`.
    fn value_on_arc(&self, v: &Vertex) -> Complex64 {
        self.terms
            .iter()
            .filter(|(u, _)| u.is_prefix_of(v))
            .map(|(_, c)| c)
            .sum()
    }

    fn splits_below(&self, v: &Vertex) -> bool {
        self.terms
            .iter()
            .any(|(u, _)| u.len() > v.len() && v.is_prefix_of(u))
    }

    /// `∫_{∂T_v} |g| dm`.
    pub fn abs_integral_over_arc(&self, q: u32, v: &Vertex) -> f64 {
        if self.splits_below(v) {
            v.children(q)
                .iter()
                .map(|c| self.abs_integral_over_arc(q, c))
                .sum()
        } else {
            self.value_on_arc(v).norm() * arc_measure_f64(q, v.len())
        }
    }

    /// `max |g|`.
    pub fn sup_norm(&self, q: u32) -> f64 {
        fn walk(g: &LocallyConstantFunction, q: u32, v: &Vertex) -> f64 {
            if g.splits_below(v) {
                v.children(q)
                    .iter()
                    .map(|c| walk(g, q, c))
                    .fold(0.0, f64::max)
            } else {
                g.value_on_arc(v).norm()
            }
        }
        walk(self, q, &Vertex::root())
    }

    /// Parses lines `<vertex> <re> <im>`; `#` starts a comment.
    pub fn parse(text: &str, q: u32) -> Result<Self> {
        let mut terms = Vec::new();
        for (lineno, line) in data_lines(text) {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 3 {
                return Err(Error::Parse(format!(
                    "line {lineno}: expected '<vertex> <re> <im>', got '{line}'"
                )));
            }
            let v: Vertex = fields[0].parse()?;
            v.validate(q)?;
            terms.push((v, parse_complex(fields[1], fields[2], lineno)?));
        }
        Ok(Self::new(terms))
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (v, c) in &self.terms {
            let _ = writeln!(out, "{v} {:.17e} {:.17e}", c.re, c.im);
        }
        out
    }

    /// A random function with `terms` arcs of depth at most `max_depth`.
    pub fn random<R: Rng>(rng: &mut R, q: u32, terms: usize, max_depth: usize) -> Self {
        let terms = (0..terms)
            .map(|_| {
                let depth = rng.random_range(0..=max_depth);
                let word = (0..depth)
                    .map(|i| rng.random_range(0..if i == 0 { q + 1 } else { q }))
                    .collect();
                let v = Vertex::from_word(word, q).expect("letters drawn in range");
                let c = Complex64::new(rng.random_range(-1.0..1.0), rng.random_range(-1.0..1.0));
                (v, c)
            })
            .collect();
        Self::new(terms)
    }
}

fn data_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, raw)| {
        let line = raw.split('#').next().unwrap_or("").trim();
        (!line.is_empty()).then_some((i + 1, line))
    })
}

fn parse_complex(re: &str, im: &str, lineno: usize) -> Result<Complex64> {
    let p = |t: &str| {
        t.parse::<f64>()
            .ok()
            .filter(|x| x.is_finite())
            .ok_or_else(|| Error::Parse(format!("line {lineno}: bad number '{t}'")))
    };
    Ok(Complex64::new(p(re)?, p(im)?))
}

/// A finitely additive complex distribution on boundary arcs.
#[derive(Debug, Clone, PartialEq)]
pub enum BoundaryDistribution {
    AbsolutelyContinuous(LocallyConstantFunction),
    PointMass { end: End, weight: Complex64 },
    Combination(Vec<BoundaryDistribution>),
}

impl BoundaryDistribution {
    /// `ν(∂T_v)`.
    pub fn evaluate(&self, q: u32, v: &Vertex) -> Complex64 {
        match self {
            BoundaryDistribution::AbsolutelyContinuous(g) => g
                .terms()
                .iter()
                .filter_map(|(u, c)| {
                    if u.is_prefix_of(v) {
                        Some(c * arc_measure_f64(q, v.len()))
                    } else if v.is_prefix_of(u) {
                        Some(c * arc_measure_f64(q, u.len()))
                    } else {
                        None
                    }
                })
                .sum(),
            BoundaryDistribution::PointMass { end, weight } => {
                if end.passes_through(v) {
                    *weight
                } else {
                    Complex64::new(0.0, 0.0)
                }
            }
            BoundaryDistribution::Combination(parts) => {
                parts.iter().map(|p| p.evaluate(q, v)).sum()
            }
        }
    }

    /// Density of the absolutely continuous part at `ξ`.
    pub fn density_at(&self, xi: &End) -> Complex64 {
        match self {
            BoundaryDistribution::AbsolutelyContinuous(g) => g.evaluate(xi),
            BoundaryDistribution::PointMass { .. } => Complex64::new(0.0, 0.0),
            BoundaryDistribution::Combination(parts) => {
                parts.iter().map(|p| p.density_at(xi)).sum()
            }
        }
    }

    /// Parses lines `ac <vertex> <re> <im>` and `pm <end> <re> <im>`.
    pub fn parse(text: &str, q: u32) -> Result<Self> {
        let mut density = Vec::new();
        let mut parts = Vec::new();
        for (lineno, line) in data_lines(text) {
            let fields: Vec<&str> = line.split_whitespace().collect();
            if fields.len() != 4 {
                return Err(Error::Parse(format!(
                    "line {lineno}: expected '<ac|pm> <point> <re> <im>', got '{line}'"
                )));
            }
            let c = parse_complex(fields[2], fields[3], lineno)?;
            match fields[0] {
                "ac" => {
                    let v: Vertex = fields[1].parse()?;
                    v.validate(q)?;
                    density.push((v, c));
                }
                "pm" => parts.push(BoundaryDistribution::PointMass {
                    end: parse_end(fields[1], q)?,
                    weight: c,
                }),
                tag => {
                    return Err(Error::Parse(format!(
                        "line {lineno}: unknown tag '{tag}', expected ac or pm"
                    )))
                }
            }
        }
        if !density.is_empty() {
            parts.insert(
                0,
                BoundaryDistribution::AbsolutelyContinuous(LocallyConstantFunction::new(density)),
            );
        }
        match parts.len() {
            0 => Err(Error::Parse("distribution file has no entries".into())),
            1 => Ok(parts.pop().expect("one part")),
            _ => Ok(BoundaryDistribution::Combination(parts)),
        }
    }
}
