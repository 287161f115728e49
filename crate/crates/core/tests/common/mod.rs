//! Independent oracles and generators shared by the property tests.
#![allow(dead_code)]

use std::sync::Arc;

use bmgame_core::maps::LinearMap;
use bmgame_core::matrix::Matrix;
use bmgame_core::rational::{dot, q, qf, Q};
use bmgame_core::space::PolyNormedSpace;
use num_traits::{Signed, Zero};
use proptest::prelude::*;

pub fn small_q() -> impl Strategy<Value = Q> {
    (-6i64..=6, 1i64..=3).prop_map(|(n, d)| qf(n, d))
}

pub fn qvec_of(len: usize) -> impl Strategy<Value = Vec<Q>> {
    prop::collection::vec(small_q(), len)
}

pub fn int_vec(len: usize, r: i64) -> impl Strategy<Value = Vec<Q>> {
    prop::collection::vec(-r..=r, len).prop_map(|v| v.into_iter().map(q).collect())
}

/// A space spanned by 2 to 4 random integer generators (plus negatives).
pub fn space_of_dim(dim: usize) -> impl Strategy<Value = Arc<PolyNormedSpace>> {
    prop::collection::vec(int_vec(dim, 3), dim..=dim + 2)
        .prop_filter_map("degenerate", |g| PolyNormedSpace::make_space(&g).ok().map(Arc::new))
}

pub fn space_upto(max_dim: usize) -> impl Strategy<Value = Arc<PolyNormedSpace>> {
    (1..=max_dim).prop_flat_map(space_of_dim)
}

pub fn matrix(rows: usize, cols: usize) -> impl Strategy<Value = Matrix> {
    prop::collection::vec(small_q(), rows * cols)
        .prop_map(move |xs| Matrix::from_rows(cols, xs.chunks(cols).map(|c| c.to_vec()).collect()).unwrap())
}

/// A random linear map between two random spaces of the given dimensions.
pub fn map_between(n: usize, m: usize) -> impl Strategy<Value = LinearMap> {
    (space_of_dim(n), space_of_dim(m), matrix(m, n)).prop_map(|(x, y, a)| LinearMap::new(x, y, a).unwrap())
}

fn cross(o: &[Q], a: &[Q], b: &[Q]) -> Q {
    (&a[0] - &o[0]) * (&b[1] - &o[1]) - (&a[1] - &o[1]) * (&b[0] - &o[0])
}

/// Strict convex hull of planar points, counter-clockwise (Andrew's monotone chain).
pub fn hull2d(points: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let mut p: Vec<Vec<Q>> = points.to_vec();
    p.sort();
    p.dedup();
    if p.len() < 3 {
        return p;
    }
    let mut lower: Vec<Vec<Q>> = Vec::new();
    for x in &p {
        while lower.len() >= 2 && !cross(&lower[lower.len() - 2], &lower[lower.len() - 1], x).is_positive() {
            lower.pop();
        }
        lower.push(x.clone());
    }
    let mut upper: Vec<Vec<Q>> = Vec::new();
    for x in p.iter().rev() {
        while upper.len() >= 2 && !cross(&upper[upper.len() - 2], &upper[upper.len() - 1], x).is_positive() {
            upper.pop();
        }
        upper.push(x.clone());
    }
    lower.pop();
    upper.pop();
    lower.extend(upper);
    lower
}

/// Facet functionals `φ` with `φ(v_i) = φ(v_{i+1}) = 1` for consecutive hull vertices.
pub fn facets2d(hull: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let n = hull.len();
    let mut out: Vec<Vec<Q>> = (0..n)
        .map(|i| {
            let (a, b) = (&hull[i], &hull[(i + 1) % n]);
            let det = &a[0] * &b[1] - &a[1] * &b[0];
            vec![(&b[1] - &a[1]) / &det, (&a[0] - &b[0]) / &det]
        })
        .collect();
    out.sort();
    out
}

pub fn max_dot(fs: &[Vec<Q>], x: &[Q]) -> Q {
    fs.iter().map(|f| dot(f, x)).max().unwrap().max(Q::zero())
}

/// Exact minimum of `‖Tx‖_Y` over the unit sphere of a planar `X`: the
/// objective is piecewise linear along each edge, so it suffices to test the
/// endpoints and every crossing of two facet functionals of `Y`.
pub fn lower2d(t: &Matrix, x_hull: &[Vec<Q>], y_facets: &[Vec<Q>]) -> Q {
    let n = x_hull.len();
    let mut best: Option<Q> = None;
    let mut consider = |p: Vec<Q>| {
        let v = max_dot(y_facets, &t.apply(&p));
        if best.as_ref().is_none_or(|b| v < *b) {
            best = Some(v);
        }
    };
    for i in 0..n {
        let (a, b) = (&x_hull[i], &x_hull[(i + 1) % n]);
        let (ta, tb) = (t.apply(a), t.apply(b));
        consider(a.clone());
        for f in y_facets {
            for g in y_facets {
                // f(T x(s)) = g(T x(s)) with x(s) = a + s (b - a)
                let fa = dot(f, &ta) - dot(g, &ta);
                let fb = dot(f, &tb) - dot(g, &tb);
                let den = &fa - &fb;
                if den.is_zero() {
                    continue;
                }
                let s = &fa / &den;
                if s.is_positive() && s < Q::from_integer(1.into()) {
                    let p: Vec<Q> = a.iter().zip(b).map(|(u, w)| u + &s * (w - u)).collect();
                    consider(p);
                }
            }
        }
    }
    best.unwrap()
}

/// Exact minimum of `c·x` over `{Ax ≤ b}` in the plane by enumerating every
/// pairwise intersection of constraint lines (the region must be bounded).
pub fn brute_lp2d(c: &[Q], a: &[Vec<Q>], b: &[Q]) -> Option<Q> {
    let mut best: Option<Q> = None;
    for i in 0..a.len() {
        for j in i + 1..a.len() {
            let det = &a[i][0] * &a[j][1] - &a[i][1] * &a[j][0];
            if det.is_zero() {
                continue;
            }
            let x = vec![
                (&b[i] * &a[j][1] - &b[j] * &a[i][1]) / &det,
                (&a[i][0] * &b[j] - &a[j][0] * &b[i]) / &det,
            ];
            if a.iter().zip(b).all(|(r, bb)| dot(r, &x) <= *bb) {
                let v = dot(c, &x);
                if best.as_ref().is_none_or(|bv| v < *bv) {
                    best = Some(v);
                }
            }
        }
    }
    best
}
