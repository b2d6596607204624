//! Independent force-closure oracle: Gaussian-elimination rank plus a dense
//! sweep of random wrench directions. For a full-rank grasp matrix the origin
//! is strictly inside the hull iff every direction `d` has some column with
//! `g . d > 0`. The sweep is refined by local descent, and a pairwise Frank-Wolfe walk
//! towards the hull's minimum-norm point supplies further candidates.

#![allow(dead_code)]

use graspmap_core::force_closure::Contact;
use nalgebra::{DMatrix, Vector3, Vector6};
use rand::Rng;
use rand_distr::StandardNormal;

pub const ORACLE_DIRECTIONS: usize = 10_000;

/// Row-echelon rank with partial pivoting and relative tolerance `rtol`.
pub fn gauss_rank(m: &DMatrix<f64>, rtol: f64) -> usize {
    let mut a = m.clone();
    let (rows, cols) = a.shape();
    let scale = a.amax();
    if scale == 0.0 {
        return 0;
    }
    let mut rank = 0;
    for c in 0..cols {
        if rank == rows {
            break;
        }
        let (p, best) = (rank..rows)
            .map(|r| (r, a[(r, c)].abs()))
            .max_by(|x, y| x.1.total_cmp(&y.1))
            .unwrap();
        if best <= rtol * scale {
            continue;
        }
        a.swap_rows(rank, p);
        for r in rank + 1..rows {
            let f = a[(r, c)] / a[(rank, c)];
            for k in c..cols {
                let v = a[(rank, k)];
                a[(r, k)] -= f * v;
            }
        }
        rank += 1;
    }
    rank
}

pub fn random_unit6(rng: &mut impl Rng) -> Vector6<f64> {
    loop {
        let v = Vector6::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-9 {
            return v / n;
        }
    }
}

pub fn random_unit3(rng: &mut impl Rng) -> Vector3<f64> {
    loop {
        let v = Vector3::from_fn(|_, _| rng.sample::<f64, _>(StandardNormal));
        let n = v.norm();
        if n > 1e-9 {
            return v / n;
        }
    }
}

fn unit_columns(g: &DMatrix<f64>) -> Vec<Vector6<f64>> {
    (0..g.ncols())
        .map(|j| {
            let c = g.column(j);
            let n = c.norm();
            Vector6::from_iterator(c.iter().map(|v| v / n))
        })
        .collect()
}

fn support(cols: &[Vector6<f64>], d: &Vector6<f64>) -> f64 {
    cols.iter().map(|c| c.dot(d)).fold(f64::NEG_INFINITY, f64::max)
}

/// Smallest over sampled unit directions of the largest column projection.
pub fn min_support(g: &DMatrix<f64>, directions: &[Vector6<f64>]) -> f64 {
    let cols = unit_columns(g);
    directions
        .iter()
        .map(|d| support(&cols, d))
        .fold(f64::INFINITY, f64::min)
}

/// Sampled minimum followed by subgradient descent on the sphere from the
/// best few samples. Thin separating cones slip between samples otherwise.
pub fn min_support_refined(g: &DMatrix<f64>, directions: &[Vector6<f64>]) -> f64 {
    let cols = unit_columns(g);
    let mut scored: Vec<(f64, Vector6<f64>)> =
        directions.iter().map(|d| (support(&cols, d), *d)).collect();
    scored.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut best = scored.first().map_or(f64::INFINITY, |s| s.0);
    for &(start, d0) in scored.iter().take(64) {
        let (mut d, mut value, mut step) = (d0, start, 0.1);
        for _ in 0..4000 {
            if value <= 0.0 || step < 1e-12 {
                break;
            }
            let top = cols
                .iter()
                .max_by(|a, b| a.dot(&d).total_cmp(&b.dot(&d)))
                .unwrap();
            let next = (d - top * step).normalize();
            let v = support(&cols, &next);
            if v < value {
                d = next;
                value = v;
            } else {
                step *= 0.7;
            }
        }
        best = best.min(value);
    }
    best
}

/// Pairwise Frank-Wolfe walk towards the minimum-norm point of the hull.
/// Returns the smallest support value seen along `-x / |x|` over the
/// iterates; negative means the origin lies outside the hull.
pub fn min_norm_separation(g: &DMatrix<f64>, iterations: usize) -> f64 {
    let cols = unit_columns(g);
    let k = cols.len();
    let mut lambda = vec![1.0 / k as f64; k];
    let mut x = cols.iter().fold(Vector6::zeros(), |a, c| a + c) / k as f64;
    let mut best = f64::INFINITY;
    for _ in 0..iterations {
        let nx = x.norm();
        if nx < 1e-14 {
            break;
        }
        best = best.min(support(&cols, &(-x / nx)));
        if best <= 0.0 {
            break;
        }
        let dots: Vec<f64> = cols.iter().map(|c| c.dot(&x)).collect();
        let toward = (0..k).min_by(|&i, &j| dots[i].total_cmp(&dots[j])).unwrap();
        let away = (0..k)
            .filter(|&j| lambda[j] > 0.0)
            .max_by(|&i, &j| dots[i].total_cmp(&dots[j]))
            .unwrap();
        let dir = cols[toward] - cols[away];
        let dd = dir.norm_squared();
        if dd == 0.0 {
            break;
        }
        let gamma = (-x.dot(&dir) / dd).clamp(0.0, lambda[away]);
        if gamma == 0.0 {
            break;
        }
        lambda[toward] += gamma;
        lambda[away] -= gamma;
        x += dir * gamma;
    }
    best
}

/// Wrench functionals measuring the moment about the line through each pair
/// of contact points. Forces applied at either point have zero moment about
/// that line, so only the remaining contacts can balance it.
pub fn pair_axis_directions(contacts: &[Contact]) -> Vec<Vector6<f64>> {
    let mut out = Vec::new();
    for (i, a) in contacts.iter().enumerate() {
        for b in &contacts[i + 1..] {
            let axis = b.p - a.p;
            if axis.norm() < 1e-12 {
                continue;
            }
            let e = axis.normalize();
            let f = -e.cross(&a.p);
            let d = Vector6::new(f.x, f.y, f.z, e.x, e.y, e.z).normalize();
            out.push(d);
            out.push(-d);
        }
    }
    out
}

/// Closure verdict for a grasp matrix built with unit torque scaling.
pub fn oracle_closed(contacts: &[Contact], g: &DMatrix<f64>, directions: &[Vector6<f64>]) -> bool {
    const EPS: f64 = 1e-9;
    let cols = unit_columns(g);
    gauss_rank(g, 1e-9) == 6
        && pair_axis_directions(contacts)
            .iter()
            .all(|d| support(&cols, d) > EPS)
        && min_norm_separation(g, 20_000) > EPS
        && min_support_refined(g, directions) > EPS
}

pub fn oracle_directions(rng: &mut impl Rng) -> Vec<Vector6<f64>> {
    (0..ORACLE_DIRECTIONS).map(|_| random_unit6(rng)).collect()
}

/// `n` contacts in the unit ball, normals roughly toward the center.
pub fn random_contact_set(rng: &mut impl Rng) -> Vec<Contact> {
    let n = rng.random_range(1..=6);
    let mu = rng.random_range(0.0..=1.0);
    (0..n)
        .map(|_| {
            let p = random_unit3(rng) * rng.random_range(0.0_f64..1.0).cbrt();
            let normal = -p + random_unit3(rng) * 0.6;
            let normal = if normal.norm() < 1e-6 { random_unit3(rng) } else { normal };
            Contact::new(p, normal, mu).unwrap()
        })
        .collect()
}
