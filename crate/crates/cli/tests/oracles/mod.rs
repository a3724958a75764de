#![allow(dead_code)]

//! Reference computations the library is checked against. None of these
//! share code with the implementations under test.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{Signed, ToPrimitive, Zero};

/// Kendall's τ_b by enumerating every pair.
pub fn kendall_pairs(x: &[f64], y: &[f64]) -> Option<f64> {
    let (mut c, mut d, mut only_x, mut only_y) = (0i64, 0i64, 0i64, 0i64);
    for i in 0..x.len() {
        for j in i + 1..x.len() {
            let dx = x[i].partial_cmp(&x[j]).unwrap();
            let dy = y[i].partial_cmp(&y[j]).unwrap();
            use std::cmp::Ordering::Equal;
            match (dx, dy) {
                (Equal, Equal) => {}
                (Equal, _) => only_x += 1,
                (_, Equal) => only_y += 1,
                (a, b) if a == b => c += 1,
                _ => d += 1,
            }
        }
    }
    let denom = (((c + d + only_x) * (c + d + only_y)) as f64).sqrt();
    (denom != 0.0).then(|| (c - d) as f64 / denom)
}

fn exact(v: f64) -> BigRational {
    BigRational::from_float(v).expect("finite input")
}

/// Pearson's ρ from the definition, with the sums in exact rational
/// arithmetic. Only the final square root is rounded.
pub fn pearson_definition(x: &[f64], y: &[f64]) -> Option<f64> {
    let n = BigRational::from_integer(BigInt::from(x.len()));
    let xs: Vec<BigRational> = x.iter().map(|&v| exact(v)).collect();
    let ys: Vec<BigRational> = y.iter().map(|&v| exact(v)).collect();
    let mx = xs.iter().fold(BigRational::zero(), |a, b| a + b) / &n;
    let my = ys.iter().fold(BigRational::zero(), |a, b| a + b) / &n;
    let (mut sxy, mut sxx, mut syy) = (BigRational::zero(), BigRational::zero(), BigRational::zero());
    for (a, b) in xs.iter().zip(&ys) {
        let dx = a - &mx;
        let dy = b - &my;
        sxy += &dx * &dy;
        sxx += &dx * &dx;
        syy += &dy * &dy;
    }
    if sxx.is_zero() || syy.is_zero() {
        return None;
    }
    let r2 = (&sxy * &sxy) / (sxx * syy);
    let r = r2.to_f64()?.sqrt();
    Some(if sxy.is_negative() { -r } else { r })
}

/// Pearson's ρ for vectors on the quarter grid {0, .25, .5, .75, 1}: after
/// scaling by 4 every sum is an exact integer, so only the final division
/// and square root are rounded.
pub fn pearson_quarter_grid(x: &[f64], y: &[f64]) -> Option<f64> {
    let scale = |v: &[f64]| -> Vec<i64> {
        v.iter()
            .map(|&a| {
                let k = a * 4.0;
                assert!(k.fract() == 0.0, "{a} is off the quarter grid");
                k as i64
            })
            .collect()
    };
    let (a, b) = (scale(x), scale(y));
    let n = a.len() as i64;
    let (sa, sb) = (a.iter().sum::<i64>(), b.iter().sum::<i64>());
    let sab: i64 = a.iter().zip(&b).map(|(p, q)| p * q).sum();
    let saa: i64 = a.iter().map(|p| p * p).sum();
    let sbb: i64 = b.iter().map(|q| q * q).sum();
    let cov = n * sab - sa * sb;
    let (va, vb) = (n * saa - sa * sa, n * sbb - sb * sb);
    (va != 0 && vb != 0).then(|| cov as f64 / ((va * vb) as f64).sqrt())
}

/// Ranks with ties sharing their average rank, 1-based.
pub fn average_ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].partial_cmp(&v[b]).unwrap());
    let mut ranks = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman's rank correlation: Pearson on average ranks.
pub fn spearman(x: &[f64], y: &[f64]) -> Option<f64> {
    pearson_definition(&average_ranks(x), &average_ranks(y))
}

/// Every vector of length `n` over `values`, in odometer order.
pub fn grid(values: &[f64], n: usize) -> impl Iterator<Item = Vec<f64>> + '_ {
    let total = values.len().pow(n as u32);
    (0..total).map(move |mut k| {
        (0..n)
            .map(|_| {
                let v = values[k % values.len()];
                k /= values.len();
                v
            })
            .collect()
    })
}

/// The oracles themselves, on hand-worked inputs.
pub fn sanity_check() {
    assert_eq!(kendall_pairs(&[1.0, 1.0, 2.0, 3.0], &[1.0, 2.0, 2.0, 3.0]), Some(0.8));
    // Σdxdy = 3, Σdx² = 2, Σdy² = 42/9
    let r = pearson_definition(&[1.0, 2.0, 3.0], &[1.0, 2.0, 4.0]).unwrap();
    assert!((r - 3.0 / (2.0f64 * 42.0 / 9.0).sqrt()).abs() < 1e-15);
    let (x, y) = ([0.0, 0.5, 1.0, 0.25], [0.25, 0.5, 0.75, 1.0]);
    assert!((pearson_quarter_grid(&x, &y).unwrap() - pearson_definition(&x, &y).unwrap()).abs() < 1e-15);
    assert_eq!(average_ranks(&[3.0, 1.0, 3.0]), vec![2.5, 1.0, 2.5]);
    assert_eq!(grid(&[0.0, 1.0], 3).count(), 8);
}
