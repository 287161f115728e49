//! Linear maps between polyhedral spaces and their exact isometry constants.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result, Witness};
use crate::lp::{lp_solve, LpOutcome, LpProblem};
use crate::matrix::Matrix;
use crate::polytope;
use crate::rational::{self, Q};
use crate::space::{PolyNormedSpace, SMALL_DIM};

pub type Space = Arc<PolyNormedSpace>;

#[derive(Debug, Clone)]
pub struct LinearMap {
    source: Space,
    target: Space,
    matrix: Matrix,
}

/// Best constants with `lower·‖x‖ ≤ ‖Tx‖ ≤ upper·‖x‖`, each with a vector attaining it.
#[derive(Debug, Clone, PartialEq)]
pub struct IsometryConstants {
    pub lower: Q,
    pub upper: Q,
    pub lower_witness: Vec<Q>,
    pub upper_witness: Vec<Q>,
}

impl LinearMap {
    pub fn new(source: Space, target: Space, matrix: Matrix) -> Result<Self> {
        if matrix.rows() != target.dim() || matrix.cols() != source.dim() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} matrix for a map from dimension {} to dimension {}",
                matrix.rows(),
                matrix.cols(),
                source.dim(),
                target.dim()
            )));
        }
        Ok(LinearMap { source, target, matrix })
    }

    pub fn identity(space: Space) -> Self {
        let m = Matrix::identity(space.dim());
        LinearMap { source: space.clone(), target: space, matrix: m }
    }

    pub fn scaling(space: Space, c: &Q) -> Self {
        let m = Matrix::scalar(space.dim(), c);
        LinearMap { source: space.clone(), target: space, matrix: m }
    }

    /// The unique map out of the zero space.
    pub fn from_zero(target: Space) -> Self {
        let m = Matrix::zeros(target.dim(), 0);
        LinearMap { source: Arc::new(PolyNormedSpace::zero()), target, matrix: m }
    }

    pub fn source(&self) -> &Space {
        &self.source
    }

    pub fn target(&self) -> &Space {
        &self.target
    }

    pub fn matrix(&self) -> &Matrix {
        &self.matrix
    }

    pub fn apply(&self, x: &[Q]) -> Vec<Q> {
        self.matrix.apply(x)
    }

    pub fn wire(&self) -> MapWire {
        MapWire {
            source: self.source.id().to_string(),
            target: self.target.id().to_string(),
            matrix: self.matrix.clone(),
        }
    }

    pub fn isometry_constants(&self) -> IsometryConstants {
        let (upper, upper_witness) = self.upper_constant();
        let (lower, lower_witness) = self.lower_constant();
        IsometryConstants { lower, upper, lower_witness, upper_witness }
    }

    /// Smallest `C` with `‖Tx‖ ≤ C‖x‖`, and a vector attaining it.
    pub fn upper_constant(&self) -> (Q, Vec<Q>) {
        operator_norm(&self.matrix, &self.source, &self.target)
    }

    /// Largest `c` with `‖Tx‖ ≥ c‖x‖`, and a vector attaining it.
    pub fn lower_constant(&self) -> (Q, Vec<Q>) {
        let n = self.source.dim();
        if n == 0 {
            return (Q::one(), Vec::new());
        }
        if self.matrix.rank() < n {
            let ker = self.matrix.null_space().remove(0);
            return (Q::zero(), ker);
        }
        let x = &self.source;
        if x.has_facets() || x.dim() <= SMALL_DIM || !self.target.has_vertices() {
            self.lower_by_facets()
        } else {
            self.lower_by_section()
        }
    }

    /// One LP per facet pair of the source sphere: minimize `‖Tx‖` over the facet.
    pub fn lower_by_facets(&self) -> (Q, Vec<Q>) {
        let x_sp = &self.source;
        let y_sp = &self.target;
        let n = x_sp.dim();
        let facets = x_sp.facets();
        let mut best: Option<(Q, Vec<Q>)> = None;
        let by_target_facets = y_sp.has_facets()
            && !(y_sp.has_vertices() && y_sp.vertices().len() + y_sp.dim() <= y_sp.facets().len());
        for phi in representatives(facets) {
            let (val, x) = if by_target_facets {
                // variables: x (free), t; minimize t with ψ(Tx) ≤ t.
                let mut obj = vec![Q::zero(); n + 1];
                obj[n] = Q::one();
                let mut lp = LpProblem::new(obj);
                for psi in y_sp.facets() {
                    let mut row = self.matrix.pullback(psi);
                    row.push(-Q::one());
                    lp = lp.le(row, Q::zero());
                }
                lp = facet_constraints(lp, phi, facets, n, 1);
                let LpOutcome::Optimal { value, witness } = lp_solve(&lp).expect("well-formed")
                else {
                    unreachable!("facet of a bounded ball is nonempty and the norm is bounded below")
                };
                (value, witness[..n].to_vec())
            } else {
                // variables: x (free), λ ≥ 0; minimize Σλ with V_Y λ = Tx.
                let vy = y_sp.vertices();
                let k = vy.len();
                let mut obj = vec![Q::zero(); n];
                obj.extend(std::iter::repeat_n(Q::one(), k));
                let mut lp = LpProblem::new(obj);
                lp.nonnegative = (0..n + k).map(|j| j >= n).collect();
                for i in 0..y_sp.dim() {
                    let mut row: Vec<Q> = self.matrix.row(i).iter().map(|a| -a).collect();
                    row.extend(vy.iter().map(|v| v[i].clone()));
                    lp = lp.eq(row, Q::zero());
                }
                lp = facet_constraints(lp, phi, facets, n, k);
                let LpOutcome::Optimal { value, witness } = lp_solve(&lp).expect("well-formed")
                else {
                    unreachable!("facet of a bounded ball is nonempty and the norm is bounded below")
                };
                (value, witness[..n].to_vec())
            };
            if best.as_ref().is_none_or(|(b, _)| val < *b) {
                best = Some((val, x));
            }
        }
        best.expect("a nonzero space has facets")
    }

    /// Via the section `B_Y ∩ im T`: `lower = 1 / max ‖T⁻¹p‖` over its generators.
    pub fn lower_by_section(&self) -> (Q, Vec<Q>) {
        let ann = self.matrix.transpose().null_space();
        let pts = polytope::section_points(self.target.vertices(), &ann);
        // max of the convex ‖T⁻¹·‖ over conv(pts) sits at one of the points
        let mut best: Option<(Q, Vec<Q>)> = None;
        for p in pts.iter().filter(|p| !rational::is_zero_vec(p)) {
            let x = self.matrix.solve(p).expect("section lies in the image");
            let nx = if self.source.is_listed_vertex(&x) { Q::one() } else { self.source.norm(&x) };
            if best.as_ref().is_none_or(|(b, _)| nx > *b) {
                best = Some((nx, x));
            }
        }
        let (m, x) = best.expect("section of a full-dimensional ball by a nonzero subspace is nontrivial");
        (m.recip(), x)
    }

    pub fn is_epsilon_isometric(&self, eps: &Q) -> std::result::Result<(), Witness> {
        let (up, uw) = self.upper_constant();
        if up > Q::one() + eps {
            return Err(self.witness(uw));
        }
        let (lo, lw) = self.lower_constant();
        if lo < Q::one() - eps {
            return Err(self.witness(lw));
        }
        Ok(())
    }

    /// `Ok` iff the isometry constants are exactly `(1, 1)`.
    pub fn is_isometric_embedding(&self) -> std::result::Result<(), Witness> {
        if self.source.has_facets() && self.target.has_facets() && self.isometric_by_duals() {
            return Ok(());
        }
        self.is_epsilon_isometric(&Q::zero())
    }

    /// `T` is isometric iff the pulled-back target facets `Tᵀψ` and the
    /// source facets have the same symmetric hull, both being dual balls.
    pub fn isometric_by_duals(&self) -> bool {
        let fx = self.source.facets();
        let own: BTreeSet<&Vec<Q>> = fx.iter().collect();
        let pulled: BTreeSet<Vec<Q>> = self
            .target
            .facets()
            .iter()
            .map(|psi| self.matrix.pullback(psi))
            .filter(|p| !rational::is_zero_vec(p))
            .collect();
        let all_fx: Vec<&Vec<Q>> = fx.iter().collect();
        let inside = pulled.iter().all(|p| own.contains(p) || polytope::in_convex_hull(p, &all_fx));
        if !inside {
            return false;
        }
        let all_p: Vec<&Vec<Q>> = pulled.iter().collect();
        fx.iter().all(|phi| pulled.contains(phi) || polytope::in_convex_hull(phi, &all_p))
    }

    pub fn witness(&self, x: Vec<Q>) -> Witness {
        let image_norm = self.target.norm(&self.apply(&x));
        Witness { source_norm: self.source.norm(&x), image_norm, vector: x }
    }

    pub fn require_isometric(&self) -> Result<()> {
        self.is_isometric_embedding().map_err(Error::NotIsometric)
    }
}

fn facet_constraints(mut lp: LpProblem, phi: &[Q], facets: &[Vec<Q>], n: usize, extra: usize) -> LpProblem {
    let pad = |f: &[Q]| {
        let mut r = f.to_vec();
        r.extend(std::iter::repeat_n(Q::zero(), extra));
        r
    };
    debug_assert_eq!(phi.len(), n);
    lp = lp.eq(pad(phi), Q::one());
    for psi in facets {
        if psi.as_slice() != phi {
            lp = lp.le(pad(psi), Q::one());
        }
    }
    lp
}

/// One functional from each `±` pair: the one whose first nonzero entry is positive.
pub fn representatives(points: &[Vec<Q>]) -> impl Iterator<Item = &Vec<Q>> {
    points.iter().filter(|p| p.iter().find(|x| !x.is_zero()).is_some_and(Signed::is_positive))
}

/// `max ‖Mx‖_Y` over the unit ball of `X`, with a maximizer.
pub fn operator_norm(m: &Matrix, x_sp: &PolyNormedSpace, y_sp: &PolyNormedSpace) -> (Q, Vec<Q>) {
    if x_sp.dim() == 0 {
        return (Q::zero(), Vec::new());
    }
    if x_sp.has_vertices() || x_sp.dim() <= SMALL_DIM {
        let mut best: Option<(Q, &Vec<Q>)> = None;
        for v in representatives(x_sp.vertices()) {
            let image = m.apply(v);
            let val = if y_sp.is_listed_vertex(&image) { Q::one() } else { y_sp.norm(&image) };
            if best.as_ref().is_none_or(|(b, _)| val > *b) {
                best = Some((val, v));
            }
        }
        let (val, v) = best.expect("a nonzero ball has vertices");
        return (val, v.clone());
    }
    // Facet-only source: maximize ψ(Mx) over {x : φ(x) ≤ 1} for each target facet ψ.
    let mut best: Option<(Q, Vec<Q>)> = None;
    for psi in representatives(y_sp.facets()) {
        let c: Vec<Q> = m.pullback(psi).into_iter().map(|a| -a).collect();
        let mut lp = LpProblem::new(c);
        for phi in x_sp.facets() {
            lp = lp.le(phi.clone(), Q::one());
        }
        let LpOutcome::Optimal { value, witness } = lp_solve(&lp).expect("well-formed") else {
            unreachable!("ball is bounded")
        };
        let val = -value;
        if best.as_ref().is_none_or(|(b, _)| val > *b) {
            best = Some((val, witness));
        }
    }
    best.expect("a nonzero ball has facets")
}

/// Operator norm of `f - g`.
pub fn op_distance(f: &LinearMap, g: &LinearMap) -> Result<Q> {
    if f.source.id() != g.source.id() || f.target.id() != g.target.id() {
        return Err(Error::DimensionMismatch("maps do not share source and target".into()));
    }
    Ok(operator_norm(&f.matrix.sub(&g.matrix), &f.source, &f.target).0)
}

/// `f ∘ g`.
pub fn compose(f: &LinearMap, g: &LinearMap) -> Result<LinearMap> {
    if g.target.id() != f.source.id() {
        return Err(Error::DimensionMismatch(format!(
            "cannot compose: target {} differs from source {}",
            g.target.id(),
            f.source.id()
        )));
    }
    Ok(LinearMap {
        source: g.source.clone(),
        target: f.target.clone(),
        matrix: f.matrix.matmul(&g.matrix),
    })
}

/// JSON form of a map: `{ "source": id, "target": id, "matrix": [[p/q]] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MapWire {
    pub source: String,
    pub target: String,
    pub matrix: Matrix,
}

impl MapWire {
    pub fn resolve(&self, source: Space, target: Space) -> Result<LinearMap> {
        if self.source != source.id() || self.target != target.id() {
            return Err(Error::Rejected(format!(
                "map refers to spaces {} -> {}, expected {} -> {}",
                self.source,
                self.target,
                source.id(),
                target.id()
            )));
        }
        let m = self.matrix.clone().with_cols(source.dim())?;
        LinearMap::new(source, target, m)
    }
}
