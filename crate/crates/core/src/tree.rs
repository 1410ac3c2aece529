//! Geometry of the homogeneous tree `T_q` and its space of ends.
//!
//! A vertex is the word of child labels read along the geodesic from the
//! root: the first letter is in `0..=q`, later letters in `0..q`. Ends are
//! eventually periodic infinite words `prefix · period · period · …`.

use std::cmp::Ordering;
use std::fmt;
use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use rand::Rng;

use crate::error::{Error, Result};

/// A vertex of the tree, encoded by its word from the root.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct Vertex(Vec<u32>);

impl Vertex {
    pub fn root() -> Self {
        Vertex(Vec::new())
    }

    /// Builds a vertex, checking the letter ranges for branching `q`.
    pub fn from_word(word: Vec<u32>, q: u32) -> Result<Self> {
        let v = Vertex(word);
        v.validate(q)?;
        Ok(v)
    }

    pub fn validate(&self, q: u32) -> Result<()> {
        for (i, &letter) in self.0.iter().enumerate() {
            let bound = if i == 0 { q } else { q - 1 };
            if letter > bound {
                return Err(Error::Parameter(format!(
                    "letter {letter} at position {i} of {self} exceeds {bound} (q = {q})"
                )));
            }
        }
        Ok(())
    }

    pub fn word(&self) -> &[u32] {
        &self.0
    }

    /// Graph distance to the root.
    #[allow(clippy::len_without_is_empty)]
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_root(&self) -> bool {
        self.0.is_empty()
    }

    /// The predecessor `x⁻`; `None` at the root.
    pub fn parent(&self) -> Option<Vertex> {
        if self.is_root() {
            None
        } else {
            Some(Vertex(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    /// The ancestor at word length `k` (`k ≤ |x|`).
    pub fn truncate(&self, k: usize) -> Vertex {
        Vertex(self.0[..k.min(self.0.len())].to_vec())
    }

    pub fn child(&self, letter: u32) -> Vertex {
        let mut w = self.0.clone();
        w.push(letter);
        Vertex(w)
    }

    /// Number of forward children: `q + 1` at the root, `q` elsewhere.
    pub fn child_count(&self, q: u32) -> u32 {
        if self.is_root() {
            q + 1
        } else {
            q
        }
    }

    pub fn children(&self, q: u32) -> Vec<Vertex> {
        (0..self.child_count(q)).map(|j| self.child(j)).collect()
    }

    /// All `q + 1` neighbours: predecessor first (if any), then children.
    pub fn neighbours(&self, q: u32) -> Vec<Vertex> {
        let mut out = Vec::with_capacity(q as usize + 1);
        if let Some(p) = self.parent() {
            out.push(p);
        }
        out.extend(self.children(q));
        out
    }

    pub fn is_prefix_of(&self, other: &Vertex) -> bool {
        other.0.starts_with(&self.0)
    }

    /// `x ∈ T_v`, i.e. `v` lies on the geodesic from the root to `x`.
    pub fn is_in_branch(&self, v: &Vertex) -> bool {
        v.is_prefix_of(self)
    }

    fn common_prefix_len(&self, other: &Vertex) -> usize {
        self.0
            .iter()
            .zip(other.0.iter())
            .take_while(|(a, b)| a == b)
            .count()
    }
}

/// Last common vertex of the root geodesics to `x` and `y`.
pub fn confluent(x: &Vertex, y: &Vertex) -> Vertex {
    x.truncate(x.common_prefix_len(y))
}

pub fn distance(x: &Vertex, y: &Vertex) -> usize {
    x.len() + y.len() - 2 * x.common_prefix_len(y)
}

impl fmt::Display for Vertex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return f.write_str("o");
        }
        for (i, letter) in self.0.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{letter}")?;
        }
        Ok(())
    }
}

fn parse_letters(s: &str) -> Result<Vec<u32>> {
    s.split('.')
        .map(|t| {
            t.trim()
                .parse::<u32>()
                .map_err(|_| Error::Parse(format!("bad index '{t}' in '{s}'")))
        })
        .collect()
}

impl FromStr for Vertex {
    type Err = Error;

    /// Grammar `o | idx ("." idx)*`; letter ranges are checked by [`Vertex::validate`].
    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        if s == "o" {
            return Ok(Vertex::root());
        }
        if s.is_empty() {
            return Err(Error::Parse("empty vertex".into()));
        }
        Ok(Vertex(parse_letters(s)?))
    }
}

/// An eventually periodic end `prefix · period^∞`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct End {
    prefix: Vertex,
    period: Vec<u32>,
}

impl End {
    pub fn new(prefix: Vertex, period: Vec<u32>, q: u32) -> Result<Self> {
        if prefix.is_root() {
            return Err(Error::Parameter("end prefix must be non-empty".into()));
        }
        if period.is_empty() {
            return Err(Error::Parameter("end period must be non-empty".into()));
        }
        prefix.validate(q)?;
        if let Some(&bad) = period.iter().find(|&&l| l >= q) {
            return Err(Error::Parameter(format!(
                "period letter {bad} exceeds {} (q = {q})",
                q - 1
            )));
        }
        Ok(End { prefix, period })
    }

    pub fn prefix(&self) -> &Vertex {
        &self.prefix
    }

    pub fn period(&self) -> &[u32] {
        &self.period
    }

    /// Letter at position `i` of the infinite expansion.
    pub fn letter(&self, i: usize) -> u32 {
        let p = self.prefix.len();
        if i < p {
            self.prefix.0[i]
        } else {
            self.period[(i - p) % self.period.len()]
        }
    }

    /// The vertex at depth `k` on the ray `π(o, ξ)`.
    pub fn ray_vertex(&self, k: usize) -> Vertex {
        Vertex((0..k).map(|i| self.letter(i)).collect())
    }

    /// `|x ∧ ξ|`.
    pub fn confluent_depth(&self, x: &Vertex) -> usize {
        x.0.iter()
            .enumerate()
            .take_while(|(i, &l)| self.letter(*i) == l)
            .count()
    }

    /// `|ξ ∧ η|`, or `None` when the two ends coincide.
    pub fn confluent_depth_end(&self, other: &End) -> Option<usize> {
        let horizon = self.prefix.len().max(other.prefix.len())
            + lcm(self.period.len(), other.period.len());
        (0..horizon).find(|&i| self.letter(i) != other.letter(i))
    }

    /// Whether `ξ ∈ ∂T_v`.
    pub fn passes_through(&self, v: &Vertex) -> bool {
        self.confluent_depth(v) == v.len()
    }

    /// A random end with prefix length in `1..=max_prefix` and period
    /// length in `1..=max_period`.
    pub fn random<R: Rng>(rng: &mut R, q: u32, max_prefix: usize, max_period: usize) -> End {
        let plen = rng.random_range(1..=max_prefix.max(1));
        let prefix = (0..plen)
            .map(|i| rng.random_range(0..if i == 0 { q + 1 } else { q }))
            .collect();
        let period = (0..rng.random_range(1..=max_period.max(1)))
            .map(|_| rng.random_range(0..q))
            .collect();
        End {
            prefix: Vertex(prefix),
            period,
        }
    }
}

fn lcm(a: usize, b: usize) -> usize {
    fn gcd(a: usize, b: usize) -> usize {
        if b == 0 {
            a
        } else {
            gcd(b, a % b)
        }
    }
    a / gcd(a, b) * b
}

impl fmt::Display for End {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}|", self.prefix)?;
        for (i, l) in self.period.iter().enumerate() {
            if i > 0 {
                f.write_str(".")?;
            }
            write!(f, "{l}")?;
        }
        Ok(())
    }
}

/// Unvalidated end text `<vertex> "|" <idx>("." <idx>)*`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EndSpec {
    pub prefix: Vertex,
    pub period: Vec<u32>,
}

impl EndSpec {
    pub fn build(self, q: u32) -> Result<End> {
        End::new(self.prefix, self.period, q)
    }
}

impl FromStr for EndSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (prefix, period) = s
            .trim()
            .split_once('|')
            .ok_or_else(|| Error::Parse(format!("end '{s}' lacks '|'")))?;
        Ok(EndSpec {
            prefix: prefix.parse()?,
            period: parse_letters(period)?,
        })
    }
}

/// Parses an end and checks it against `q`.
pub fn parse_end(s: &str, q: u32) -> Result<End> {
    s.parse::<EndSpec>()?.build(q)
}

/// `hor(x, ξ) = |x| - 2|x ∧ ξ|`.
pub fn horocycle(x: &Vertex, xi: &End) -> i64 {
    x.len() as i64 - 2 * xi.confluent_depth(x) as i64
}

/// A point of `T ∪ ∂T`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Point {
    Vertex(Vertex),
    End(End),
}

/// `|z ∧ w|`, or `None` when `z = w` is an end.
pub fn confluent_depth(z: &Point, w: &Point) -> Option<usize> {
    match (z, w) {
        (Point::Vertex(x), Point::Vertex(y)) => Some(x.common_prefix_len(y)),
        (Point::Vertex(x), Point::End(e)) | (Point::End(e), Point::Vertex(x)) => {
            Some(e.confluent_depth(x))
        }
        (Point::End(a), Point::End(b)) => a.confluent_depth_end(b),
    }
}

/// The ultrametric `θ(z, w) = q^{-|z∧w|}` for `z ≠ w`, and `0` for `z = w`.
pub fn theta_metric(q: u32, z: &Point, w: &Point) -> BigRational {
    if z == w {
        return BigRational::zero();
    }
    match confluent_depth(z, w) {
        None => BigRational::zero(),
        Some(k) => BigRational::new(BigInt::one(), num_traits::pow(BigInt::from(q), k)),
    }
}

/// The cone `Γ_a(ξ)` of vertices within distance `a` of the ray `π(o, ξ)`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Cone {
    pub end: End,
    pub width: usize,
}

impl Cone {
    pub fn new(end: End, width: usize) -> Self {
        Cone { end, width }
    }

    /// `d(x, π(o, ξ))`; the nearest ray vertex is the confluent `x ∧ ξ`.
    pub fn distance_to_ray(&self, x: &Vertex) -> usize {
        x.len() - self.end.confluent_depth(x)
    }

    pub fn contains(&self, x: &Vertex) -> bool {
        self.distance_to_ray(x) <= self.width
    }

    /// All cone members with word length `depth`, in lexicographic order.
    pub fn sample(&self, depth: usize, q: u32) -> Vec<Vertex> {
        let anchor_depth = depth.saturating_sub(self.width);
        let anchor = self.end.ray_vertex(anchor_depth);
        descendants(&anchor, depth - anchor_depth, q)
    }
}

/// All descendants of `v` exactly `k` levels below it, lexicographically.
pub fn descendants(v: &Vertex, k: usize, q: u32) -> Vec<Vertex> {
    let mut layer = vec![v.clone()];
    for _ in 0..k {
        layer = layer.iter().flat_map(|u| u.children(q)).collect();
    }
    layer
}

/// The vertices of word length `k`, lexicographically.
pub fn level(k: usize, q: u32) -> Vec<Vertex> {
    descendants(&Vertex::root(), k, q)
}

/// Number of vertices at word length `k`.
pub fn level_size(k: usize, q: u32) -> usize {
    if k == 0 {
        1
    } else {
        (q as usize + 1) * (q as usize).pow(k as u32 - 1)
    }
}

/// The sphere `{v : d(v, c) = r}`.
pub fn sphere(center: &Vertex, r: usize, q: u32) -> Vec<Vertex> {
    let mut out = Vec::new();
    for up in 0..=r.min(center.len()) {
        let anchor = center.truncate(center.len() - up);
        let down = r - up;
        if down == 0 {
            out.push(anchor);
            continue;
        }
        let avoid = if up == 0 {
            None
        } else {
            Some(center.0[center.len() - up])
        };
        for j in 0..anchor.child_count(q) {
            if Some(j) == avoid {
                continue;
            }
            out.extend(descendants(&anchor.child(j), down - 1, q));
        }
    }
    out
}

/// The ball `{v : d(v, c) ≤ r}`, sorted.
pub fn ball(center: &Vertex, r: usize, q: u32) -> Vec<Vertex> {
    let mut out: Vec<Vertex> = (0..=r).flat_map(|k| sphere(center, k, q)).collect();
    out.sort();
    out
}

// Lexicographic order on the infinite expansions.
impl PartialOrd for End {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for End {
    fn cmp(&self, other: &Self) -> Ordering {
        match self.confluent_depth_end(other) {
            None => Ordering::Equal,
            Some(i) => self.letter(i).cmp(&other.letter(i)),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn v(s: &str) -> Vertex {
        s.parse().unwrap()
    }

    fn end(s: &str, q: u32) -> End {
        parse_end(s, q).unwrap()
    }

    #[test]
    fn confluent_and_distance_examples() {
        assert_eq!(confluent(&v("0.1"), &v("0.0.1")), v("0"));
        assert_eq!(distance(&v("0.1"), &v("0.0.1")), 3);
        let y = v("2.1.0");
        assert_eq!(confluent(&Vertex::root(), &y), Vertex::root());
        assert_eq!(distance(&Vertex::root(), &y), 3);
        assert_eq!(confluent(&y, &y), y);
        assert_eq!(distance(&y, &y), 0);
    }

    #[test]
    fn horocycle_examples() {
        let xi = end("0|1", 2);
        assert_eq!(horocycle(&xi.ray_vertex(3), &xi), -3);
        assert_eq!(horocycle(&Vertex::root(), &xi), 0);
        let x = v("1.0");
        assert_eq!(xi.confluent_depth(&x), 0);
        assert_eq!(horocycle(&x, &xi), 2);
    }

    #[test]
    fn theta_examples() {
        let a = Point::End(end("0.1.0|0", 2));
        let b = Point::End(end("0.1.1|0", 2));
        assert_eq!(
            theta_metric(2, &a, &b),
            BigRational::new(BigInt::one(), BigInt::from(4))
        );
        let x = Point::Vertex(v("1.1"));
        assert!(theta_metric(2, &x, &x).is_zero());
        assert!(theta_metric(2, &Point::Vertex(Vertex::root()), &a).is_one());
        // same end written two ways
        let c = Point::End(end("0.1|1", 2));
        let d = Point::End(end("0.1.1.1|1.1", 2));
        assert!(theta_metric(2, &c, &d).is_zero());
    }

    #[test]
    fn ray_children_branch_examples() {
        let xi = end("0|1", 2);
        assert_eq!(xi.ray_vertex(3), v("0.1.1"));
        assert_eq!(Vertex::root().children(2), vec![v("0"), v("1"), v("2")]);
        assert!(v("0.1.0").is_in_branch(&v("0.1")));
        assert!(!v("0.0.0").is_in_branch(&v("0.1")));
    }

    #[test]
    fn cone_examples() {
        let xi = end("0|1", 2);
        let ray_cone = Cone::new(xi.clone(), 0);
        for k in 0..6 {
            assert!(ray_cone.contains(&xi.ray_vertex(k)));
        }
        assert!(!ray_cone.contains(&v("0.0")));
        assert_eq!(ray_cone.sample(5, 2), vec![xi.ray_vertex(5)]);
        let wide = Cone::new(xi, 1);
        // child hanging off the ray vertex "0.1"
        assert!(wide.contains(&v("0.1.0")));
        assert!(!wide.contains(&v("0.0.1")));
        assert_eq!(wide.sample(3, 2), vec![v("0.1.0"), v("0.1.1")]);
    }

    #[test]
    fn cone_distance_matches_brute_force_minimum() {
        let q = 2;
        let xi = end("1.0|1.0", q);
        let cone = Cone::new(xi.clone(), 2);
        for x in ball(&Vertex::root(), 6, q) {
            let brute = (0..=x.len() + 2)
                .map(|k| distance(&x, &xi.ray_vertex(k)))
                .min()
                .unwrap();
            assert_eq!(cone.distance_to_ray(&x), brute, "{x}");
        }
    }

    #[test]
    fn sphere_sizes_and_distances() {
        let q = 3;
        let c = v("1.2.0");
        for r in 0..6 {
            let s = sphere(&c, r, q);
            let expected = if r == 0 { 1 } else { (q as usize + 1) * (q as usize).pow(r as u32 - 1) };
            assert_eq!(s.len(), expected, "r = {r}");
            assert!(s.iter().all(|u| distance(u, &c) == r));
        }
        assert_eq!(ball(&Vertex::root(), 2, 2).len(), 10);
    }

    #[test]
    fn parse_errors() {
        assert!("".parse::<Vertex>().is_err());
        assert!("0..1".parse::<Vertex>().is_err());
        assert!(v("3").validate(2).is_err());
        assert!(v("2.2").validate(2).is_err());
        assert!(v("2.1").validate(2).is_ok());
        assert!(parse_end("o|0", 2).is_err());
        assert!(parse_end("0|2", 2).is_err());
        assert!(parse_end("0", 2).is_err());
        assert_eq!(end("2.0|1.0", 2).to_string(), "2.0|1.0");
        assert_eq!(v("o").to_string(), "o");
    }
}
