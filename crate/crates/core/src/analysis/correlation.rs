//! Pearson's ρ and Kendall's τ_b.
//!
//! Both return `Ok(None)` when a coefficient is undefined, which happens
//! when either input is constant.

use std::cmp::Ordering;

use statrs::distribution::{ContinuousCDF, Normal, StudentsT};
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum CorrelationError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("need at least two observations, got {0}")]
    TooShort(usize),
    #[error("non-finite observation")]
    NonFinite,
}

fn check(x: &[f64], y: &[f64]) -> Result<(), CorrelationError> {
    if x.len() != y.len() {
        return Err(CorrelationError::LengthMismatch(x.len(), y.len()));
    }
    if x.len() < 2 {
        return Err(CorrelationError::TooShort(x.len()));
    }
    if x.iter().chain(y).any(|v| !v.is_finite()) {
        return Err(CorrelationError::NonFinite);
    }
    Ok(())
}

fn is_constant(v: &[f64]) -> bool {
    v.iter().all(|&a| a == v[0])
}

/// Product-moment correlation, computed from centred sums.
pub fn pearson_rho(x: &[f64], y: &[f64]) -> Result<Option<f64>, CorrelationError> {
    check(x, y)?;
    if is_constant(x) || is_constant(y) {
        return Ok(None);
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (dx, dy) = (a - mx, b - my);
        sxy += dx * dy;
        sxx += dx * dx;
        syy += dy * dy;
    }
    if sxx == 0.0 || syy == 0.0 {
        return Ok(None);
    }
    Ok(Some((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0)))
}

/// Number of pairs within runs of equal values: Σ t(t−1)/2.
fn tied_pairs<T: PartialEq>(sorted: &[T]) -> u64 {
    let mut total = 0u64;
    let mut run = 1u64;
    for w in sorted.windows(2) {
        if w[0] == w[1] {
            run += 1;
        } else {
            total += run * (run - 1) / 2;
            run = 1;
        }
    }
    total + run * (run - 1) / 2
}

/// Merge sort that returns the number of inversions it undid.
fn sort_counting_swaps(v: &mut [f64], buf: &mut Vec<f64>) -> u64 {
    let n = v.len();
    if n < 2 {
        return 0;
    }
    let mid = n / 2;
    let mut swaps = sort_counting_swaps(&mut v[..mid], buf) + sort_counting_swaps(&mut v[mid..], buf);
    buf.clear();
    let (mut i, mut j) = (0, mid);
    while i < mid && j < n {
        if v[j] < v[i] {
            swaps += (mid - i) as u64;
            buf.push(v[j]);
            j += 1;
        } else {
            buf.push(v[i]);
            i += 1;
        }
    }
    buf.extend_from_slice(&v[i..mid]);
    buf.extend_from_slice(&v[j..n]);
    v.copy_from_slice(buf);
    swaps
}

/// Tie-corrected Kendall rank correlation in O(n log n) (Knight's method).
///
/// `τ_b = (C − D) / √((n₀ − n₁)(n₀ − n₂))`, with `n₁`, `n₂` the tied pairs
/// in `x` and `y`.
pub fn kendall_tau_b(x: &[f64], y: &[f64]) -> Result<Option<f64>, CorrelationError> {
    check(x, y)?;
    let n = x.len() as u64;
    let n0 = n * (n - 1) / 2;

    let mut pairs: Vec<(f64, f64)> = x.iter().copied().zip(y.iter().copied()).collect();
    pairs.sort_by(|a, b| {
        a.0.partial_cmp(&b.0)
            .unwrap_or(Ordering::Equal)
            .then(a.1.partial_cmp(&b.1).unwrap_or(Ordering::Equal))
    });
    let n1 = tied_pairs(&pairs.iter().map(|p| p.0).collect::<Vec<_>>());
    let n3 = tied_pairs(&pairs);

    let mut ys: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    let mut buf = Vec::with_capacity(ys.len());
    let swaps = sort_counting_swaps(&mut ys, &mut buf);
    let n2 = tied_pairs(&ys);

    if n0 == n1 || n0 == n2 {
        return Ok(None);
    }
    // C − D = n₀ − n₁ − n₂ + n₃ − 2·swaps
    let concordance = n0 as i64 - n1 as i64 - n2 as i64 + n3 as i64 - 2 * swaps as i64;
    let denom = ((n0 - n1) as f64 * (n0 - n2) as f64).sqrt();
    Ok(Some((concordance as f64 / denom).clamp(-1.0, 1.0)))
}

/// Two-sided p-value of ρ under the t approximation with n − 2 degrees of
/// freedom. Informational only.
pub fn pearson_p_value(rho: f64, n: usize) -> Option<f64> {
    if n < 3 || !rho.is_finite() {
        return None;
    }
    if rho.abs() >= 1.0 {
        return Some(0.0);
    }
    let df = (n - 2) as f64;
    let t = rho * (df / (1.0 - rho * rho)).sqrt();
    let dist = StudentsT::new(0.0, 1.0, df).ok()?;
    Some((2.0 * (1.0 - dist.cdf(t.abs()))).clamp(0.0, 1.0))
}

/// Two-sided p-value of τ under the normal approximation (no tie
/// correction). Informational only.
pub fn kendall_p_value(tau: f64, n: usize) -> Option<f64> {
    if n < 2 || !tau.is_finite() {
        return None;
    }
    let n = n as f64;
    let z = 3.0 * tau * (n * (n - 1.0)).sqrt() / (2.0 * (2.0 * n + 5.0)).sqrt();
    let normal = Normal::standard();
    Some((2.0 * (1.0 - normal.cdf(z.abs()))).clamp(0.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    /// Direct concordant/discordant enumeration.
    fn brute_tau_b(x: &[f64], y: &[f64]) -> Option<f64> {
        let (mut c, mut d, mut tx, mut ty) = (0i64, 0i64, 0i64, 0i64);
        for i in 0..x.len() {
            for j in i + 1..x.len() {
                let sx = (x[i] - x[j]).signum() * f64::from(x[i] != x[j]);
                let sy = (y[i] - y[j]).signum() * f64::from(y[i] != y[j]);
                match (sx == 0.0, sy == 0.0) {
                    (true, true) => {}
                    (true, false) => tx += 1,
                    (false, true) => ty += 1,
                    (false, false) if sx == sy => c += 1,
                    _ => d += 1,
                }
            }
        }
        let denom = (((c + d + tx) * (c + d + ty)) as f64).sqrt();
        (denom != 0.0).then(|| (c - d) as f64 / denom)
    }

    #[test]
    fn pearson_examples() {
        assert_eq!(pearson_rho(&[1.0, 2.0, 3.0], &[2.0, 4.0, 6.0]).unwrap(), Some(1.0));
        assert_eq!(pearson_rho(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), Some(-1.0));
        assert_eq!(pearson_rho(&[1.0, 1.0, 1.0], &[3.0, 2.0, 1.0]).unwrap(), None);
        assert_eq!(pearson_rho(&[1.0], &[1.0]), Err(CorrelationError::TooShort(1)));
        assert_eq!(pearson_rho(&[1.0, 2.0], &[1.0]), Err(CorrelationError::LengthMismatch(2, 1)));
    }

    #[test]
    fn pearson_against_integer_sums() {
        // Inputs scaled by 20 are integers, so the sums formula is exact.
        let x = [0.2, 0.9, 0.4, 0.7];
        let y = [0.1, 0.8, 0.6, 0.5];
        let xi = [4i64, 18, 8, 14];
        let yi = [2i64, 16, 12, 10];
        let n = 4i64;
        let sx: i64 = xi.iter().sum();
        let sy: i64 = yi.iter().sum();
        let sxy: i64 = xi.iter().zip(&yi).map(|(a, b)| a * b).sum();
        let sxx: i64 = xi.iter().map(|a| a * a).sum();
        let syy: i64 = yi.iter().map(|a| a * a).sum();
        let num = (n * sxy - sx * sy) as f64;
        let den = (((n * sxx - sx * sx) * (n * syy - sy * sy)) as f64).sqrt();
        let got = pearson_rho(&x, &y).unwrap().unwrap();
        assert!((got - num / den).abs() < 1e-12, "{got} vs {}", num / den);
    }

    #[test]
    fn kendall_examples() {
        assert_eq!(kendall_tau_b(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]).unwrap(), Some(1.0));
        assert_eq!(kendall_tau_b(&[1.0, 2.0, 3.0], &[3.0, 2.0, 1.0]).unwrap(), Some(-1.0));
        let x = [1.0, 1.0, 2.0, 3.0];
        let y = [1.0, 2.0, 2.0, 3.0];
        assert_eq!(kendall_tau_b(&x, &y).unwrap(), brute_tau_b(&x, &y));
        // C = 4, D = 0, one tie in each: 4 / √(5·5)
        assert_eq!(kendall_tau_b(&x, &y).unwrap(), Some(0.8));
        assert_eq!(kendall_tau_b(&[2.0, 2.0], &[1.0, 3.0]).unwrap(), None);
    }

    #[test]
    fn p_values_are_sane() {
        assert_eq!(pearson_p_value(1.0, 10), Some(0.0));
        assert!((pearson_p_value(0.0, 10).unwrap() - 1.0).abs() < 1e-12);
        assert!(pearson_p_value(0.8, 20).unwrap() < 0.01);
        assert!(kendall_p_value(0.0, 10).unwrap() > 0.99);
        assert!(kendall_p_value(0.6, 30).unwrap() < 0.01);
        assert_eq!(pearson_p_value(0.5, 2), None);
    }

    fn paired(max: usize) -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
        (2..max).prop_flat_map(|n| {
            let grid = proptest::sample::select(vec![0.0, 0.25, 0.5, 0.75, 1.0]);
            (proptest::collection::vec(grid.clone(), n), proptest::collection::vec(grid, n))
        })
    }

    proptest! {
        #[test]
        fn kendall_matches_enumeration((x, y) in paired(30)) {
            prop_assert_eq!(kendall_tau_b(&x, &y).unwrap(), brute_tau_b(&x, &y));
        }

        #[test]
        fn both_are_symmetric((x, y) in paired(20)) {
            prop_assert_eq!(pearson_rho(&x, &y).unwrap(), pearson_rho(&y, &x).unwrap());
            prop_assert_eq!(kendall_tau_b(&x, &y).unwrap(), kendall_tau_b(&y, &x).unwrap());
        }

        #[test]
        fn pearson_ignores_positive_affine_maps((x, y) in paired(20), scale in 0.1f64..50.0, shift in -10.0f64..10.0) {
            let xt: Vec<f64> = x.iter().map(|v| v * scale + shift).collect();
            match (pearson_rho(&x, &y).unwrap(), pearson_rho(&xt, &y).unwrap()) {
                (Some(a), Some(b)) => prop_assert!((a - b).abs() < 1e-9, "{} {}", a, b),
                (a, b) => prop_assert_eq!(a, b),
            }
        }

        #[test]
        fn kendall_ignores_monotone_maps((x, y) in paired(20)) {
            let xt: Vec<f64> = x.iter().map(|v| (3.0 * v).exp() - 7.0).collect();
            prop_assert_eq!(kendall_tau_b(&x, &y).unwrap(), kendall_tau_b(&xt, &y).unwrap());
        }
    }
}
