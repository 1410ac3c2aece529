//! First-passage series for `F(λ)`, independent of the closed form.
//!
//! `f^{(n)}(d)` is the probability that the walk started at distance `d` from
//! a target first reaches it at step `n`. At distance one the walk either
//! steps onto the target, or steps away and then needs two consecutive
//! distance-one passages; larger distances are `d`-fold convolutions.

use num_bigint::BigInt;
use num_complex::Complex64;
use num_rational::BigRational;
use num_traits::{ToPrimitive, Zero};

use crate::error::{Error, Result};
use crate::spectral::TreeParams;

/// Largest truncation supported by the exact backend.
pub const EXACT_LIMIT: usize = 200;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Backend {
    Exact,
    Double,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FirstPassageTable {
    pub q: u32,
    pub max_steps: usize,
    /// `values[d-1][n] = f^{(n)}(d)`.
    values: Vec<Vec<f64>>,
    exact: Option<Vec<Vec<BigRational>>>,
}

/// `Σ f^{(n)}(d) / λ^n` together with a bound on the omitted tail.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeriesValue {
    pub value: Complex64,
    pub tail_bound: f64,
}

fn convolve<T>(a: &[T], b: &[T], zero: T) -> Vec<T>
where
    T: Clone + std::ops::Add<Output = T>,
    for<'x> &'x T: std::ops::Mul<&'x T, Output = T>,
{
    let len = a.len();
    (0..len)
        .map(|n| {
            (0..=n)
                .filter(|&i| n - i < b.len())
                .fold(zero.clone(), |acc, i| acc + &a[i] * &b[n - i])
        })
        .collect()
}

fn distance_one<T>(steps: usize, first: T, away: T, zero: T) -> Vec<T>
where
    T: Clone + std::ops::Add<Output = T>,
    for<'x> &'x T: std::ops::Mul<&'x T, Output = T>,
{
    let mut f = vec![zero.clone(); steps + 1];
    if steps >= 1 {
        f[1] = first;
    }
    for n in 2..=steps {
        // two passages taking i and j steps after one step away, i + j = n - 1
        let m = n - 1;
        let s = (1..m).fold(zero.clone(), |acc, i| acc + &f[i] * &f[m - i]);
        f[n] = &away * &s;
    }
    f
}

/// `f^{(n)}(d)` for `1 ≤ d ≤ max_distance`, `0 ≤ n ≤ max_steps`.
pub fn first_passage_table(
    q: u32,
    max_distance: usize,
    max_steps: usize,
    backend: Backend,
) -> Result<FirstPassageTable> {
    TreeParams::new(q)?;
    if max_distance < 1 || max_steps < 1 {
        return Err(Error::Parameter(
            "first-passage table needs distance and steps at least 1".into(),
        ));
    }
    match backend {
        Backend::Double => {
            let qf = q as f64;
            let f1 = distance_one(max_steps, 1.0 / (qf + 1.0), qf / (qf + 1.0), 0.0);
            let mut values = vec![f1.clone()];
            for _ in 1..max_distance {
                let next = convolve(values.last().expect("nonempty"), &f1, 0.0);
                values.push(next);
            }
            Ok(FirstPassageTable {
                q,
                max_steps,
                values,
                exact: None,
            })
        }
        Backend::Exact => {
            if max_steps > EXACT_LIMIT {
                return Err(Error::Parameter(format!(
                    "exact backend supports at most {EXACT_LIMIT} steps, got {max_steps}"
                )));
            }
            let frac = |a: u32, b: u32| BigRational::new(BigInt::from(a), BigInt::from(b));
            let f1 = distance_one(max_steps, frac(1, q + 1), frac(q, q + 1), BigRational::zero());
            let mut exact = vec![f1.clone()];
            for _ in 1..max_distance {
                let next = convolve(exact.last().expect("nonempty"), &f1, BigRational::zero());
                exact.push(next);
            }
            let values = exact
                .iter()
                .map(|row| row.iter().map(|r| r.to_f64().unwrap_or(0.0)).collect())
                .collect();
            Ok(FirstPassageTable {
                q,
                max_steps,
                values,
                exact: Some(exact),
            })
        }
    }
}

impl FirstPassageTable {
    pub fn max_distance(&self) -> usize {
        self.values.len()
    }

    /// `f^{(n)}(d)`; zero beyond the table.
    pub fn coefficient(&self, d: usize, n: usize) -> f64 {
        self.values
            .get(d.wrapping_sub(1))
            .and_then(|row| row.get(n))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn coefficient_exact(&self, d: usize, n: usize) -> Option<&BigRational> {
        self.exact.as_ref()?.get(d.wrapping_sub(1))?.get(n)
    }

    pub fn row(&self, d: usize) -> Option<&[f64]> {
        self.values.get(d.wrapping_sub(1)).map(Vec::as_slice)
    }

    /// `Σ_{n ≤ N} f^{(n)}(d)`, the probability of reaching the target within `N` steps.
    pub fn partial_mass(&self, d: usize, steps: usize) -> f64 {
        self.row(d)
            .map(|r| r.iter().take(steps + 1).sum())
            .unwrap_or(0.0)
    }
}

/// `Σ_{n ≤ N} f^{(n)}(d) / λ^n`.
///
/// The tail bound uses `f^{(n)}(d) ρ^{-n}` summing to at most `F(ρ)^d = q^{-d/2}`,
/// so the omitted terms are below `(ρ/|λ|)^{N+1} q^{-d/2}`; rounding of the
/// partial sum is added on top. For non-real `λ` the bound still holds but
/// compares against `|λ|` only.
pub fn truncated_series(
    table: &FirstPassageTable,
    d: usize,
    lambda: Complex64,
) -> Result<SeriesValue> {
    let params = TreeParams::new(table.q)?;
    let modulus = lambda.norm();
    if modulus <= params.rho {
        return Err(Error::Regime {
            modulus,
            rho: params.rho,
        });
    }
    let row = table.row(d).ok_or_else(|| {
        Error::Parameter(format!(
            "distance {d} outside the table (1..={})",
            table.max_distance()
        ))
    })?;
    let inv = 1.0 / lambda;
    let mut power = Complex64::new(1.0, 0.0);
    let mut value = Complex64::new(0.0, 0.0);
    let mut abs_sum = 0.0;
    for &c in row.iter().skip(1) {
        power *= inv;
        let term = power * c;
        value += term;
        abs_sum += term.norm();
    }
    let n = table.max_steps as f64;
    let tail = (params.rho / modulus).powf(n + 1.0) * (table.q as f64).powf(-(d as f64) / 2.0);
    let rounding = 4.0 * (n + 1.0) * f64::EPSILON * abs_sum;
    Ok(SeriesValue {
        value,
        tail_bound: tail + rounding,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::SpectralContext;

    #[test]
    fn small_coefficients() {
        for q in [2u32, 3, 5] {
            let t = first_passage_table(q, 3, 12, Backend::Exact).unwrap();
            let frac = |a: i64, b: i64| BigRational::new(a.into(), b.into());
            assert_eq!(t.coefficient_exact(1, 1), Some(&frac(1, q as i64 + 1)));
            assert!(t.coefficient_exact(1, 2).unwrap().is_zero());
            for d in 1..=3 {
                for n in 0..=12 {
                    let c = t.coefficient(d, n);
                    assert!((0.0..=1.0).contains(&c));
                    if n < d || (n - d) % 2 == 1 {
                        assert_eq!(c, 0.0, "d={d} n={n}");
                    }
                }
            }
        }
        let t = first_passage_table(2, 1, 5, Backend::Exact).unwrap();
        assert_eq!(
            t.coefficient_exact(1, 3),
            Some(&BigRational::new(2.into(), 27.into()))
        );
    }

    #[test]
    fn backends_agree() {
        let e = first_passage_table(3, 3, 100, Backend::Exact).unwrap();
        let d = first_passage_table(3, 3, 100, Backend::Double).unwrap();
        for dist in 1..=3 {
            for n in 0..=100 {
                let (a, b) = (e.coefficient(dist, n), d.coefficient(dist, n));
                assert!((a - b).abs() <= 1e-13 * a, "d={dist} n={n}");
            }
        }
        assert!(matches!(
            first_passage_table(2, 1, 201, Backend::Exact),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn series_matches_closed_form() {
        let t = first_passage_table(2, 2, 2000, Backend::Double).unwrap();
        let z = SpectralContext::new(2, Complex64::new(2.0, 0.0)).unwrap();
        let s = truncated_series(&t, 1, z.lambda).unwrap();
        assert!((s.value - z.f).norm() < 1e-10);
        assert!((s.value - z.f).norm() <= s.tail_bound);
        let s2 = truncated_series(&t, 2, z.lambda).unwrap();
        assert!((s2.value - s.value * s.value).norm() <= 2.0 * s2.tail_bound.max(2.0 * s.tail_bound));
        let one = truncated_series(&t, 1, Complex64::new(1.0, 0.0)).unwrap();
        assert!((one.value.re - 0.5).abs() < 1e-12);
        assert!(matches!(
            truncated_series(&t, 1, Complex64::new(0.5, 0.5)),
            Err(Error::Regime { .. })
        ));
        assert!(truncated_series(&t, 3, z.lambda).is_err());
    }

    #[test]
    fn mass_increases_towards_one_over_q() {
        let t = first_passage_table(3, 1, 1500, Backend::Double).unwrap();
        let masses: Vec<f64> = [10, 100, 500, 1500].iter().map(|&n| t.partial_mass(1, n)).collect();
        assert!(masses.windows(2).all(|w| w[0] <= w[1]));
        assert!(masses.iter().all(|&m| m <= 1.0 / 3.0 + 1e-15));
        assert!(1.0 / 3.0 - masses[3] < 1.0 / 3.0 - masses[0]);
    }
}
