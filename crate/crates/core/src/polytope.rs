//! Polytope representation conversion for symmetric, full-dimensional balls.
//!
//! V→H and H→V are the same computation by polarity: the facets of
//! `conv(V)` are the vertices of `{φ : φ(v) ≤ 1 for all v}`. Both run the
//! double-description method on the homogenized cone.

use std::collections::BTreeSet;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lp::{lp_solve, LpOutcome, LpProblem};
use crate::matrix::Matrix;
use crate::rational::{dot, neg_vec, Q};

#[derive(Clone, PartialEq, Eq)]
struct BitSet(Vec<u64>);

impl BitSet {
    fn new(n: usize) -> Self {
        BitSet(vec![0; n.div_ceil(64).max(1)])
    }
    fn insert(&mut self, i: usize) {
        self.0[i / 64] |= 1 << (i % 64);
    }
    fn and(&self, o: &BitSet) -> BitSet {
        BitSet(self.0.iter().zip(&o.0).map(|(a, b)| a & b).collect())
    }
    fn len(&self) -> usize {
        self.0.iter().map(|w| w.count_ones() as usize).sum()
    }
    fn contains_all(&self, o: &BitSet) -> bool {
        self.0.iter().zip(&o.0).all(|(a, b)| a & b == *b)
    }
}

struct Ray {
    v: Vec<Q>,
    tight: BitSet,
}

fn normalize(mut v: Vec<Q>) -> Vec<Q> {
    let m = v.iter().map(|x| x.abs()).max().unwrap_or_else(Q::zero);
    if !m.is_zero() && !m.is_one() {
        v.iter_mut().for_each(|x| *x /= &m);
    }
    v
}

/// Vertices of `{x : a·x ≤ 1 for every row a}`, assuming the set is bounded
/// and has the origin in its interior.
fn dd_vertices(rows: &[Vec<Q>], dim: usize) -> Vec<Vec<Q>> {
    // Homogenized constraints on (x, t): a·x - t ≤ 0, and -t ≤ 0.
    let d = dim + 1;
    let mut cone: Vec<Vec<Q>> = Vec::with_capacity(rows.len() + 1);
    let mut t_row = vec![Q::zero(); d];
    t_row[dim] = -Q::one();
    cone.push(t_row);
    for a in rows {
        let mut r = a.clone();
        r.push(-Q::one());
        cone.push(r);
    }
    let m = cone.len();

    // Initial simplicial cone from d independent rows.
    let mut chosen: Vec<usize> = Vec::with_capacity(d);
    let mut basis_rows: Vec<Vec<Q>> = Vec::new();
    for (i, r) in cone.iter().enumerate() {
        let mut trial = basis_rows.clone();
        trial.push(r.clone());
        if Matrix::from_rows(d, trial.clone()).expect("row width").rank() == trial.len() {
            basis_rows = trial;
            chosen.push(i);
            if chosen.len() == d {
                break;
            }
        }
    }
    assert_eq!(chosen.len(), d, "double description needs a full-rank constraint system");
    let b = Matrix::from_rows(d, basis_rows).expect("row width");
    let binv = b.inverse().expect("independent rows");
    let mut rays: Vec<Ray> = (0..d)
        .map(|k| {
            let v: Vec<Q> = binv.col(k).into_iter().map(|x| -x).collect();
            let mut tight = BitSet::new(m);
            for (kk, &row) in chosen.iter().enumerate() {
                if kk != k {
                    tight.insert(row);
                }
            }
            Ray { v: normalize(v), tight }
        })
        .collect();

    for h in 0..m {
        if chosen.contains(&h) {
            continue;
        }
        let row = &cone[h];
        let s: Vec<Q> = rays.iter().map(|r| dot(row, &r.v)).collect();
        let plus: Vec<usize> = (0..rays.len()).filter(|&i| s[i].is_positive()).collect();
        if plus.is_empty() {
            for (i, r) in rays.iter_mut().enumerate() {
                if s[i].is_zero() {
                    r.tight.insert(h);
                }
            }
            continue;
        }
        let minus: Vec<usize> = (0..rays.len()).filter(|&i| s[i].is_negative()).collect();
        let mut fresh = Vec::new();
        for &p in &plus {
            for &qi in &minus {
                let common = rays[p].tight.and(&rays[qi].tight);
                if common.len() + 2 < d {
                    continue;
                }
                let blocked = rays.iter().enumerate().any(|(k, r)| {
                    k != p && k != qi && r.tight.contains_all(&common)
                });
                if blocked {
                    continue;
                }
                let v: Vec<Q> = rays[qi]
                    .v
                    .iter()
                    .zip(&rays[p].v)
                    .map(|(x, y)| &s[p] * x - &s[qi] * y)
                    .collect();
                let mut tight = common;
                tight.insert(h);
                fresh.push(Ray { v: normalize(v), tight });
            }
        }
        let mut kept: Vec<Ray> = Vec::with_capacity(rays.len() + fresh.len());
        for (i, mut r) in rays.into_iter().enumerate() {
            if s[i].is_positive() {
                continue;
            }
            if s[i].is_zero() {
                r.tight.insert(h);
            }
            kept.push(r);
        }
        kept.extend(fresh);
        rays = kept;
    }

    let out: BTreeSet<Vec<Q>> = rays
        .into_iter()
        .filter(|r| r.v[dim].is_positive())
        .map(|r| {
            let t = r.v[dim].clone();
            r.v[..dim].iter().map(|x| x / &t).collect()
        })
        .collect();
    out.into_iter().collect()
}

fn check_symmetric(points: &[Vec<Q>]) -> Result<()> {
    let set: BTreeSet<&Vec<Q>> = points.iter().collect();
    if points.iter().all(|p| set.contains(&neg_vec(p))) {
        Ok(())
    } else {
        Err(Error::NotSymmetric)
    }
}

fn check_spanning(points: &[Vec<Q>], dim: usize, what: &str) -> Result<()> {
    if points.iter().any(|p| p.len() != dim) {
        return Err(Error::DimensionMismatch(format!("{what} of inconsistent length")));
    }
    let rank = if points.is_empty() {
        0
    } else {
        Matrix::from_rows(dim, points.to_vec())?.rank()
    };
    if rank < dim {
        return Err(Error::Degenerate(format!(
            "{what} span a space of dimension {rank} < {dim}: ball is not full-dimensional"
        )));
    }
    Ok(())
}

/// Irredundant facet functionals `φ` (with `φ(x) ≤ 1` on the hull) of a
/// symmetric generator set spanning `dim`-space.
pub fn vrep_to_hrep(generators: &[Vec<Q>], dim: usize) -> Result<Vec<Vec<Q>>> {
    check_spanning(generators, dim, "generators")?;
    check_symmetric(generators)?;
    Ok(dd_vertices(generators, dim))
}

/// Vertices of `{x : φ(x) ≤ 1}` for a symmetric spanning set of functionals.
pub fn hrep_to_vrep(facets: &[Vec<Q>], dim: usize) -> Result<Vec<Vec<Q>>> {
    check_spanning(facets, dim, "facet functionals")?;
    check_symmetric(facets)?;
    Ok(dd_vertices(facets, dim))
}

/// Whether `p` is a convex combination of `others`.
pub fn in_convex_hull(p: &[Q], others: &[&Vec<Q>]) -> bool {
    if others.is_empty() {
        return false;
    }
    let k = others.len();
    let mut lp = LpProblem::new(vec![Q::zero(); k]).all_nonnegative();
    for (i, pi) in p.iter().enumerate() {
        lp = lp.eq(others.iter().map(|o| o[i].clone()).collect(), pi.clone());
    }
    lp = lp.eq(vec![Q::one(); k], Q::one());
    matches!(lp_solve(&lp).expect("well-formed"), LpOutcome::Optimal { .. })
}

/// Whether `⟨psi, pts[i]⟩ > ⟨psi, pts[j]⟩` for every other `j`, which makes `pts[i]` a vertex.
fn strictly_exposed(pts: &[Vec<Q>], i: usize, psi: &[Q]) -> bool {
    let top = dot(psi, &pts[i]);
    (0..pts.len()).all(|j| j == i || dot(psi, &pts[j]) < top)
}

/// `Σ p pᵀ` over the points.
fn second_moment(pts: &[Vec<Q>]) -> Option<Matrix> {
    let n = pts.first()?.len();
    let mut m = Matrix::zeros(n, n);
    for p in pts {
        for r in 0..n {
            if p[r].is_zero() {
                continue;
            }
            for c in 0..n {
                m[(r, c)] += &p[r] * &p[c];
            }
        }
    }
    Some(m)
}

/// Drops duplicates and every point lying in the convex hull of the rest.
/// Output is sorted; works for hulls of any dimension.
pub fn prune_redundant(points: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let uniq: Vec<Vec<Q>> = points.iter().cloned().collect::<BTreeSet<_>>().into_iter().collect();
    let mut keep = vec![true; uniq.len()];
    let whitened = second_moment(&uniq).and_then(|m| m.inverse());
    for i in 0..uniq.len() {
        // p strictly maximizing ⟨p, ·⟩ over the set is extreme; no LP needed
        if strictly_exposed(&uniq, i, &uniq[i]) {
            continue;
        }
        if let Some(psi) = whitened.as_ref().map(|w| w.apply(&uniq[i])) {
            if strictly_exposed(&uniq, i, &psi) {
                continue;
            }
        }
        let others: Vec<&Vec<Q>> =
            (0..uniq.len()).filter(|&j| j != i && keep[j]).map(|j| &uniq[j]).collect();
        if in_convex_hull(&uniq[i], &others) {
            keep[i] = false;
        }
    }
    uniq.into_iter().zip(keep).filter_map(|(p, k)| k.then_some(p)).collect()
}

/// V-rep of the image of `conv(generators)` under `map`.
pub fn project_polytope(generators: &[Vec<Q>], map: &Matrix) -> Result<Vec<Vec<Q>>> {
    if let Some(g) = generators.iter().find(|g| g.len() != map.cols()) {
        return Err(Error::DimensionMismatch(format!(
            "generator of length {} under a map with {} columns",
            g.len(),
            map.cols()
        )));
    }
    let images: Vec<Vec<Q>> = generators.iter().map(|g| map.apply(g)).collect();
    Ok(prune_redundant(&images))
}

/// Points whose convex hull is `conv(vertices) ∩ {x : ℓ(x) = 0 for each ℓ}`.
///
/// Each cut keeps the points on the hyperplane and replaces every pair on
/// opposite sides by the point where their segment crosses it.
pub fn section_points(vertices: &[Vec<Q>], annihilators: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let mut pts: Vec<Vec<Q>> = vertices.to_vec();
    for ell in annihilators {
        let vals: Vec<Q> = pts.iter().map(|p| dot(ell, p)).collect();
        let mut next: BTreeSet<Vec<Q>> = BTreeSet::new();
        for (p, v) in pts.iter().zip(&vals) {
            if v.is_zero() {
                next.insert(p.clone());
            }
        }
        for (i, p) in pts.iter().enumerate() {
            if !vals[i].is_positive() {
                continue;
            }
            for (j, qv) in pts.iter().enumerate() {
                if !vals[j].is_negative() {
                    continue;
                }
                let denom = &vals[i] - &vals[j];
                let c: Vec<Q> = p
                    .iter()
                    .zip(qv)
                    .map(|(a, b)| (&vals[i] * b - &vals[j] * a) / &denom)
                    .collect();
                next.insert(c);
            }
        }
        pts = next.into_iter().collect();
    }
    pts
}
