//! Finite-dimensional normed spaces whose unit ball is a rational,
//! symmetric, full-dimensional polytope.
//!
//! A space keeps one primary representation of its ball (vertices or facet
//! functionals) and materializes the other on demand. Small spaces carry
//! both from construction and are cross-validated; large chain stages would
//! pay an exponential price for the second representation, so algorithms
//! elsewhere pick whichever side is available.

use std::collections::BTreeSet;
use std::fmt;
use std::sync::OnceLock;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, Result};
use crate::lp::{lp_solve, LpOutcome, LpProblem};
use crate::matrix::Matrix;
use crate::polytope;
use crate::rational::{self, dot, neg_vec, Q};

/// Spaces up to this dimension always carry both representations.
pub const SMALL_DIM: usize = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Rep {
    Vertices,
    Facets,
}

pub struct PolyNormedSpace {
    dim: usize,
    primary: Rep,
    vertices: OnceLock<Vec<Vec<Q>>>,
    facets: OnceLock<Vec<Vec<Q>>>,
    vertex_set: OnceLock<BTreeSet<Vec<Q>>>,
    id: String,
}

impl fmt::Debug for PolyNormedSpace {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PolyNormedSpace")
            .field("id", &self.id)
            .field("dim", &self.dim)
            .field("primary", &self.primary)
            .field("vertices", &self.vertices.get().map(Vec::len))
            .field("facets", &self.facets.get().map(Vec::len))
            .finish()
    }
}

impl PartialEq for PolyNormedSpace {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

fn symmetrize(points: &[Vec<Q>]) -> Vec<Vec<Q>> {
    let mut set: BTreeSet<Vec<Q>> = BTreeSet::new();
    for p in points {
        if !rational::is_zero_vec(p) {
            set.insert(neg_vec(p));
            set.insert(p.clone());
        }
    }
    set.into_iter().collect()
}

fn check_lengths(points: &[Vec<Q>], dim: usize) -> Result<()> {
    match points.iter().find(|p| p.len() != dim) {
        Some(p) => Err(Error::DimensionMismatch(format!(
            "vector of length {} in a space of dimension {dim}",
            p.len()
        ))),
        None => Ok(()),
    }
}

fn check_spanning(points: &[Vec<Q>], dim: usize) -> Result<()> {
    let rank = if points.is_empty() { 0 } else { Matrix::from_rows(dim, points.to_vec())?.rank() };
    if rank < dim {
        return Err(Error::Degenerate(format!(
            "ball spans only {rank} of {dim} dimensions, so its gauge is not a norm"
        )));
    }
    Ok(())
}

fn compute_id(dim: usize, rep: Rep, points: &[Vec<Q>]) -> String {
    let mut h = Sha256::new();
    h.update(format!("{dim}:{rep:?}:").as_bytes());
    for p in points {
        for x in p {
            h.update(rational::to_string(x).as_bytes());
            h.update(b",");
        }
        h.update(b";");
    }
    hex::encode(&h.finalize()[..8])
}

/// Gauge of `x` with respect to `conv(points)`, by LP over convex weights.
/// `None` when `x` is outside the cone of the points.
pub(crate) fn gauge_lp(points: &[Vec<Q>], x: &[Q]) -> Option<(Q, Vec<Q>)> {
    if rational::is_zero_vec(x) {
        return Some((Q::zero(), vec![Q::zero(); points.len()]));
    }
    let k = points.len();
    let mut lp = LpProblem::new(vec![Q::one(); k]).all_nonnegative();
    for (i, xi) in x.iter().enumerate() {
        lp = lp.eq(points.iter().map(|p| p[i].clone()).collect(), xi.clone());
    }
    match lp_solve(&lp).expect("well-formed gauge lp") {
        LpOutcome::Optimal { value, witness } => Some((value, witness)),
        _ => None,
    }
}

impl PolyNormedSpace {
    fn build(dim: usize, primary: Rep, points: Vec<Vec<Q>>) -> Self {
        let id = compute_id(dim, primary, &points);
        let s = PolyNormedSpace {
            dim,
            primary,
            vertices: OnceLock::new(),
            facets: OnceLock::new(),
            vertex_set: OnceLock::new(),
            id,
        };
        match primary {
            Rep::Vertices => s.vertices.set(points).expect("fresh"),
            Rep::Facets => s.facets.set(points).expect("fresh"),
        }
        s
    }

    /// The zero-dimensional space, the canonical pre-game stage.
    pub fn zero() -> Self {
        let s = Self::build(0, Rep::Vertices, Vec::new());
        s.facets.set(Vec::new()).expect("fresh");
        s
    }

    /// Space whose ball is the symmetric hull of `generators`. Redundant
    /// generators are pruned and the facet description is computed.
    pub fn make_space(generators: &[Vec<Q>]) -> Result<Self> {
        let Some(first) = generators.first() else {
            return Err(Error::Degenerate("empty generator list".into()));
        };
        let s = Self::from_vertices(first.len(), generators)?;
        s.facets();
        s.cross_validate()?;
        Ok(s)
    }

    /// Vertex-primary constructor; facets are computed eagerly only for small dimensions.
    pub fn from_vertices(dim: usize, generators: &[Vec<Q>]) -> Result<Self> {
        check_lengths(generators, dim)?;
        let sym = symmetrize(generators);
        check_spanning(&sym, dim)?;
        let verts = polytope::prune_redundant(&sym);
        let s = Self::build(dim, Rep::Vertices, verts);
        if dim <= SMALL_DIM {
            s.facets();
            s.cross_validate()?;
        }
        Ok(s)
    }

    /// Vertex-primary constructor for lists already known to be symmetric and irredundant.
    pub(crate) fn from_vertices_trusted(dim: usize, mut verts: Vec<Vec<Q>>) -> Self {
        verts.sort();
        verts.dedup();
        let s = Self::build(dim, Rep::Vertices, verts);
        if dim <= SMALL_DIM {
            s.facets();
        }
        s
    }

    /// Facet-primary constructor: ball `{x : φ(x) ≤ 1}` over the symmetrized functionals.
    pub fn from_facets(dim: usize, functionals: &[Vec<Q>]) -> Result<Self> {
        check_lengths(functionals, dim)?;
        let sym = symmetrize(functionals);
        check_spanning(&sym, dim)?;
        let facets = polytope::prune_redundant(&sym);
        let s = Self::build(dim, Rep::Facets, facets);
        if dim <= SMALL_DIM {
            s.vertices();
            s.cross_validate()?;
        }
        Ok(s)
    }

    pub(crate) fn from_facets_trusted(dim: usize, mut facets: Vec<Vec<Q>>) -> Self {
        facets.sort();
        facets.dedup();
        let s = Self::build(dim, Rep::Facets, facets);
        if dim <= SMALL_DIM {
            s.vertices();
        }
        s
    }

    /// `ℓ∞^n`, stored by its `2n` coordinate facets.
    pub fn linf(n: usize) -> Self {
        if n == 0 {
            return Self::zero();
        }
        let facets = (0..n)
            .flat_map(|i| {
                let mut e = vec![Q::zero(); n];
                e[i] = Q::one();
                [neg_vec(&e), e]
            })
            .collect();
        Self::from_facets_trusted(n, facets)
    }

    /// `ℓ₁^n`, stored by its `2n` coordinate vertices.
    pub fn l1(n: usize) -> Self {
        if n == 0 {
            return Self::zero();
        }
        let verts = (0..n)
            .flat_map(|i| {
                let mut e = vec![Q::zero(); n];
                e[i] = Q::one();
                [neg_vec(&e), e]
            })
            .collect();
        Self::from_vertices_trusted(n, verts)
    }

    /// One-dimensional space with `‖t‖ = c·|t|`.
    pub fn line(c: &Q) -> Result<Self> {
        if !c.is_positive() {
            return Err(Error::Degenerate(format!(
                "line norm scale {} must be positive",
                rational::to_string(c)
            )));
        }
        let r = c.recip();
        Ok(Self::from_vertices_trusted(1, vec![vec![-r.clone()], vec![r]]))
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn primary(&self) -> Rep {
        self.primary
    }

    pub fn has_vertices(&self) -> bool {
        self.vertices.get().is_some()
    }

    pub fn has_facets(&self) -> bool {
        self.facets.get().is_some()
    }

    /// Ball vertices, computed by double description if not yet known.
    pub fn vertices(&self) -> &[Vec<Q>] {
        self.vertices.get_or_init(|| {
            let f = self.facets.get().expect("a space always has one representation");
            polytope::hrep_to_vrep(f, self.dim).expect("validated at construction")
        })
    }

    /// Facet functionals `φ` with `φ(x) ≤ 1` describing the ball.
    pub fn facets(&self) -> &[Vec<Q>] {
        self.facets.get_or_init(|| {
            let v = self.vertices.get().expect("a space always has one representation");
            polytope::vrep_to_hrep(v, self.dim).expect("validated at construction")
        })
    }

    /// Whether `v` is one of the listed (irredundant) ball vertices, so `‖v‖ = 1`.
    pub fn is_listed_vertex(&self, v: &[Q]) -> bool {
        match self.vertices.get() {
            Some(vs) => self.vertex_set.get_or_init(|| vs.iter().cloned().collect()).contains(v),
            None => false,
        }
    }

    fn cross_validate(&self) -> Result<()> {
        let (Some(vs), Some(fs)) = (self.vertices.get(), self.facets.get()) else {
            return Ok(());
        };
        let one = Q::one();
        for v in vs {
            let m = fs.iter().map(|f| dot(f, v)).max().unwrap_or_else(Q::zero);
            if m != one {
                return Err(Error::Rejected(format!(
                    "representations disagree: vertex has facet value {}",
                    rational::to_string(&m)
                )));
            }
        }
        for f in fs {
            let m = vs.iter().map(|v| dot(f, v)).max().unwrap_or_else(Q::zero);
            if m != one {
                return Err(Error::Rejected(format!(
                    "representations disagree: facet attains {} on the vertices",
                    rational::to_string(&m)
                )));
            }
        }
        Ok(())
    }

    /// The norm of `x`, using the facet description when it is at hand.
    pub fn norm(&self, x: &[Q]) -> Q {
        assert_eq!(x.len(), self.dim, "vector length does not match space dimension");
        if self.has_facets() {
            self.norm_by_facets(x)
        } else {
            self.norm_by_vertices(x)
        }
    }

    pub fn norm_by_facets(&self, x: &[Q]) -> Q {
        self.facets().iter().map(|f| dot(f, x)).max().unwrap_or_else(Q::zero).max(Q::zero())
    }

    /// Gauge LP: `min Σλ` over `Σ λ_i v_i = x`, `λ ≥ 0`.
    pub fn norm_by_vertices(&self, x: &[Q]) -> Q {
        gauge_lp(self.vertices(), x).expect("ball spans the space").0
    }

    /// Evaluates the norm both ways and insists they agree exactly.
    pub fn norm_checked(&self, x: &[Q]) -> Result<Q> {
        let a = self.norm_by_vertices(x);
        let b = self.norm_by_facets(x);
        if a != b {
            return Err(Error::Rejected(format!(
                "gauge {} disagrees with facet maximum {}",
                rational::to_string(&a),
                rational::to_string(&b)
            )));
        }
        Ok(a)
    }

    /// Dual norm of a functional: `max φ(x)` over the ball.
    pub fn dual_norm(&self, phi: &[Q]) -> Q {
        assert_eq!(phi.len(), self.dim);
        if self.has_vertices() {
            self.vertices().iter().map(|v| dot(phi, v)).max().unwrap_or_else(Q::zero).max(Q::zero())
        } else {
            gauge_lp(self.facets(), phi).expect("dual ball spans").0
        }
    }

    pub fn wire(&self) -> SpaceWire {
        let small = self.dim <= SMALL_DIM;
        SpaceWire {
            id: Some(self.id.clone()),
            dim: self.dim,
            primary: (self.primary == Rep::Facets).then_some(Rep::Facets),
            vertices: (small || self.primary == Rep::Vertices).then(|| self.vertices().to_vec()),
            facets: (small || self.primary == Rep::Facets).then(|| self.facets().to_vec()),
        }
    }

    pub fn from_wire(w: &SpaceWire) -> Result<Self> {
        if w.dim == 0 {
            return Ok(Self::zero());
        }
        let primary = w.primary.unwrap_or(if w.vertices.is_some() { Rep::Vertices } else { Rep::Facets });
        let s = match (primary, &w.vertices, &w.facets) {
            (Rep::Vertices, Some(v), _) => Self::from_vertices(w.dim, v)?,
            (Rep::Facets, _, Some(f)) => Self::from_facets(w.dim, f)?,
            _ => return Err(Error::Parse("space lacks its primary representation".into())),
        };
        if w.dim <= SMALL_DIM {
            let (given, have) = match primary {
                Rep::Vertices => (&w.facets, s.facets()),
                Rep::Facets => (&w.vertices, s.vertices()),
            };
            if let Some(g) = given {
                let mut g = symmetrize(g);
                g.sort();
                if g != have {
                    return Err(Error::Rejected(
                        "listed vertices and facets describe different balls".into(),
                    ));
                }
            }
        }
        if let Some(id) = &w.id {
            if *id != s.id {
                return Err(Error::Rejected(format!("space id {id} does not match its content ({})", s.id)));
            }
        }
        Ok(s)
    }
}

/// JSON form: `{ "dim", "vertices", "facets" }` with `"p/q"` entries.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpaceWire {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub dim: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub primary: Option<Rep>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_qvecs")]
    pub vertices: Option<Vec<Vec<Q>>>,
    #[serde(default, skip_serializing_if = "Option::is_none", with = "opt_qvecs")]
    pub facets: Option<Vec<Vec<Q>>>,
}

mod opt_qvecs {
    use super::*;
    use serde::{Deserializer, Serializer};

    pub fn serialize<S: Serializer>(x: &Option<Vec<Vec<Q>>>, s: S) -> std::result::Result<S::Ok, S::Error> {
        match x {
            Some(v) => rational::serde_qvecs::serialize(v, s),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Option<Vec<Vec<Q>>>, D::Error> {
        rational::serde_qvecs::deserialize(d).map(Some)
    }
}

/// `X ⊕₁ Y`: ball `conv(B_X × {0} ∪ {0} × B_Y)`, norm `‖x‖ + ‖y‖`.
pub fn l1_sum(x: &PolyNormedSpace, y: &PolyNormedSpace) -> PolyNormedSpace {
    if x.dim() == 0 {
        return PolyNormedSpace::from_vertices_trusted(y.dim(), y.vertices().to_vec());
    }
    if y.dim() == 0 {
        return PolyNormedSpace::from_vertices_trusted(x.dim(), x.vertices().to_vec());
    }
    let n = x.dim() + y.dim();
    let mut verts = Vec::with_capacity(x.vertices().len() + y.vertices().len());
    for v in x.vertices() {
        let mut p = v.clone();
        p.resize(n, Q::zero());
        verts.push(p);
    }
    for v in y.vertices() {
        let mut p = vec![Q::zero(); x.dim()];
        p.extend(v.iter().cloned());
        verts.push(p);
    }
    PolyNormedSpace::from_vertices_trusted(n, verts)
}

/// Linear projection with kernel `span(kernel_basis columns)`, onto the
/// coordinates left over after eliminating the kernel with pivots taken at
/// the last nonzero coordinate of each kernel vector.
pub fn quotient_map(dim: usize, kernel_basis: &Matrix) -> Result<Matrix> {
    if kernel_basis.rows() != dim {
        return Err(Error::DimensionMismatch(format!(
            "kernel vectors of length {} in dimension {dim}",
            kernel_basis.rows()
        )));
    }
    let k = kernel_basis.cols();
    if k >= dim && dim > 0 {
        return Err(Error::InvalidKernel("kernel must be a proper subspace".into()));
    }
    let mut rows = kernel_basis.col_vecs();
    let mut pivots: Vec<usize> = Vec::with_capacity(k);
    for r in 0..k {
        let Some(p) = (0..dim).rev().find(|&j| !rows[r][j].is_zero()) else {
            return Err(Error::InvalidKernel("kernel basis is linearly dependent".into()));
        };
        let inv = rows[r][p].recip();
        rows[r].iter_mut().for_each(|x| *x *= &inv);
        for o in 0..k {
            if o != r && !rows[o][p].is_zero() {
                let f = rows[o][p].clone();
                let sub: Vec<Q> = rows[r].iter().map(|x| x * &f).collect();
                rows[o].iter_mut().zip(sub).for_each(|(a, b)| *a -= b);
            }
        }
        pivots.push(p);
    }
    let complement: Vec<usize> = (0..dim).filter(|j| !pivots.contains(j)).collect();
    let mut qm = Matrix::zeros(complement.len(), dim);
    for (i, &c) in complement.iter().enumerate() {
        qm[(i, c)] = Q::one();
        for (r, &p) in pivots.iter().enumerate() {
            qm[(i, p)] = -rows[r][c].clone();
        }
    }
    Ok(qm)
}

/// Quotient of `space` by the span of the kernel columns, with its projection.
pub fn quotient(space: &PolyNormedSpace, kernel_basis: &Matrix) -> Result<(PolyNormedSpace, Matrix)> {
    let qm = quotient_map(space.dim(), kernel_basis)?;
    if qm.rows() == space.dim() {
        return Ok((PolyNormedSpace::from_vertices_trusted(space.dim(), space.vertices().to_vec()), qm));
    }
    let images = polytope::project_polytope(space.vertices(), &qm)?;
    let sym = symmetrize(&images);
    Ok((PolyNormedSpace::from_vertices_trusted(qm.rows(), sym), qm))
}

/// The span of the basis columns with the inherited norm, plus its inclusion.
pub fn subspace(space: &PolyNormedSpace, basis: &Matrix) -> Result<(PolyNormedSpace, Matrix)> {
    if basis.rows() != space.dim() {
        return Err(Error::DimensionMismatch(format!(
            "basis vectors of length {} in dimension {}",
            basis.rows(),
            space.dim()
        )));
    }
    let k = basis.cols();
    if basis.rank() < k {
        return Err(Error::Rejected("subspace basis is linearly dependent".into()));
    }
    if k == 0 {
        return Ok((PolyNormedSpace::zero(), basis.clone()));
    }
    if k == 1 && !space.has_facets() {
        let c = space.norm(&basis.col(0));
        return Ok((PolyNormedSpace::line(&c)?, basis.clone()));
    }
    let restricted: Vec<Vec<Q>> = space.facets().iter().map(|f| basis.pullback(f)).collect();
    Ok((PolyNormedSpace::from_facets(k, &restricted)?, basis.clone()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf, qvec};

    fn hexagon() -> PolyNormedSpace {
        PolyNormedSpace::make_space(&[qvec(&[1, 0]), qvec(&[0, 1]), qvec(&[1, 1])]).unwrap()
    }

    #[test]
    fn make_space_examples() {
        let l1 = PolyNormedSpace::make_space(&[qvec(&[1, 0]), qvec(&[0, 1])]).unwrap();
        assert_eq!(l1.vertices().len(), 4);
        assert_eq!(l1.norm_checked(&qvec(&[1, 1])).unwrap(), q(2));
        let linf = PolyNormedSpace::make_space(&[qvec(&[1, 1]), qvec(&[1, -1])]).unwrap();
        assert_eq!(linf.norm_checked(&qvec(&[1, 1])).unwrap(), q(1));
        assert!(matches!(
            PolyNormedSpace::make_space(&[qvec(&[1, 0])]),
            Err(Error::Degenerate(_))
        ));
    }

    #[test]
    fn hexagon_norm() {
        assert_eq!(hexagon().norm_checked(&qvec(&[1, -1])).unwrap(), q(2));
        assert_eq!(hexagon().norm_checked(&qvec(&[1, 1])).unwrap(), q(1));
    }

    #[test]
    fn builtin_families_match_make_space() {
        assert_eq!(PolyNormedSpace::linf(2).vertices().len(), 4);
        assert_eq!(PolyNormedSpace::l1(3).facets().len(), 8);
        let x = vec![qf(1, 2), qf(-3, 4), q(2)];
        assert_eq!(PolyNormedSpace::l1(3).norm_checked(&x).unwrap(), qf(13, 4));
        assert_eq!(PolyNormedSpace::linf(3).norm_checked(&x).unwrap(), q(2));
    }

    #[test]
    fn l1_sum_examples() {
        let s = l1_sum(&PolyNormedSpace::l1(1), &PolyNormedSpace::l1(1));
        assert_eq!(s.vertices(), PolyNormedSpace::l1(2).vertices());
        let z = l1_sum(&hexagon(), &PolyNormedSpace::zero());
        assert_eq!(z.vertices(), hexagon().vertices());
        let m = l1_sum(&PolyNormedSpace::linf(2), &PolyNormedSpace::l1(1));
        assert_eq!(m.norm_checked(&qvec(&[1, 1, 1])).unwrap(), q(2));
    }

    #[test]
    fn quotient_examples() {
        let l1 = PolyNormedSpace::l1(2);
        let (qs, qm) = quotient(&l1, &Matrix::from_i64(2, 1, &[1, -1])).unwrap();
        assert_eq!(qm, Matrix::from_i64(1, 2, &[1, 1]));
        assert_eq!(qs.vertices(), &[qvec(&[-1]), qvec(&[1])]);

        let (same, id) = quotient(&l1, &Matrix::zeros(2, 0)).unwrap();
        assert_eq!(id, Matrix::identity(2));
        assert_eq!(same.vertices(), l1.vertices());

        let (qs, qm) = quotient(&PolyNormedSpace::linf(2), &Matrix::from_i64(2, 1, &[1, 0])).unwrap();
        assert_eq!(qm, Matrix::from_i64(1, 2, &[0, 1]));
        assert_eq!(qs.vertices(), &[qvec(&[-1]), qvec(&[1])]);

        assert!(matches!(
            quotient(&l1, &Matrix::identity(2)),
            Err(Error::InvalidKernel(_))
        ));
    }

    #[test]
    fn subspace_examples() {
        let (s, _) = subspace(&PolyNormedSpace::l1(2), &Matrix::from_i64(2, 1, &[1, 0])).unwrap();
        assert_eq!(s.vertices(), PolyNormedSpace::l1(1).vertices());
        let (s, _) = subspace(&PolyNormedSpace::linf(2), &Matrix::from_i64(2, 1, &[1, 1])).unwrap();
        assert_eq!(s.norm(&qvec(&[3])), q(3));
        let (s, _) = subspace(&PolyNormedSpace::l1(2), &Matrix::from_i64(2, 1, &[1, 1])).unwrap();
        assert_eq!(s.norm(&qvec(&[3])), q(6));
        assert!(subspace(&PolyNormedSpace::l1(2), &Matrix::from_i64(2, 2, &[1, 2, 1, 2])).is_err());
    }

    #[test]
    fn wire_round_trip_and_tamper() {
        let h = hexagon();
        let w = h.wire();
        let back = PolyNormedSpace::from_wire(&w).unwrap();
        assert_eq!(back, h);
        let mut bad = w.clone();
        bad.facets.as_mut().unwrap()[0][0] = qf(1, 3);
        assert!(PolyNormedSpace::from_wire(&bad).is_err());
        let only_facets = SpaceWire { vertices: None, id: None, ..w.clone() };
        let mut wrong_id = w;
        wrong_id.id = Some("00".into());
        assert!(PolyNormedSpace::from_wire(&wrong_id).is_err());
        assert_eq!(PolyNormedSpace::from_wire(&only_facets).unwrap().vertices(), h.vertices());
    }

    #[test]
    fn zero_space() {
        let z = PolyNormedSpace::zero();
        assert_eq!(z.dim(), 0);
        assert_eq!(z.norm(&[]), q(0));
    }
}
