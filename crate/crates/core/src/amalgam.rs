//! Amalgamation constructions: the correction amalgam, pushouts, and `ℓ∞` domination.

use std::sync::Arc;

use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};
use crate::lp::{lp_solve, LpOutcome, LpProblem};
use crate::maps::{compose, op_distance, representatives, LinearMap, Space};
use crate::matrix::Matrix;
use crate::rational::{self, scale_vec, Q};
use crate::space::{self, PolyNormedSpace};

#[derive(Debug, Clone)]
pub struct CorrectionAmalgam {
    pub space: Space,
    pub i: LinearMap,
    pub j: LinearMap,
    pub epsilon: Q,
}

/// An amalgam `W` with legs `f′: X → W`, `g′: Y → W` agreeing on `Z`.
#[derive(Debug, Clone)]
pub struct Pushout {
    pub space: Space,
    pub f_prime: LinearMap,
    pub g_prime: LinearMap,
}

fn block_injections(nx: usize, ny: usize) -> (Matrix, Matrix) {
    let mut a = Matrix::zeros(nx + ny, nx);
    let mut b = Matrix::zeros(nx + ny, ny);
    for k in 0..nx {
        a[(k, k)] = Q::one();
    }
    for k in 0..ny {
        b[(nx + k, k)] = Q::one();
    }
    (a, b)
}

/// Norm on `X ⊕ Y` whose ball is `conv(B_X×0 ∪ 0×B_Y ∪ ε⁻¹(v, −f v))`,
/// making both injections isometric with `‖j∘f − i‖ ≤ ε`.
pub fn correction_amalgam(f: &LinearMap, epsilon: &Q) -> Result<CorrectionAmalgam> {
    if !epsilon.is_positive() || *epsilon >= Q::one() {
        return Err(Error::EpsilonOutOfRange(rational::to_string(epsilon)));
    }
    f.is_epsilon_isometric(epsilon).map_err(|witness| Error::NotEpsilonIsometric {
        epsilon: rational::to_string(epsilon),
        witness,
    })?;
    let x = f.source();
    let y = f.target();
    let (nx, ny) = (x.dim(), y.dim());
    let inv = epsilon.recip();
    let mut gens = Vec::new();
    for v in x.vertices() {
        let mut p = v.clone();
        p.resize(nx + ny, Q::zero());
        gens.push(p);
        let mut s = scale_vec(&inv, v);
        s.extend(f.apply(v).iter().map(|c| -c * &inv));
        gens.push(s);
    }
    for w in y.vertices() {
        let mut p = vec![Q::zero(); nx];
        p.extend(w.iter().cloned());
        gens.push(p);
    }
    let sum = Arc::new(PolyNormedSpace::from_vertices(nx + ny, &gens)?);
    let (a, b) = block_injections(nx, ny);
    let i = LinearMap::new(x.clone(), sum.clone(), a)?;
    let j = LinearMap::new(y.clone(), sum.clone(), b)?;
    i.require_isometric()?;
    j.require_isometric()?;
    let d = op_distance(&compose(&j, f)?, &i)?;
    if d > *epsilon {
        return Err(Error::Rejected(format!(
            "correction distance {} exceeds {}",
            rational::to_string(&d),
            rational::to_string(epsilon)
        )));
    }
    Ok(CorrectionAmalgam { space: sum, i, j, epsilon: epsilon.clone() })
}

/// `min ‖x₀‖ + ‖y₀‖ + ε‖x₁‖` over `x = x₀ + x₁`, `y = y₀ − f(x₁)`, each norm
/// expanded as a gauge over ball vertices.
pub fn correction_norm_lp(f: &LinearMap, epsilon: &Q, x: &[Q], y: &[Q]) -> Q {
    let vx = f.source().vertices();
    let vy = f.target().vertices();
    let (a, b, c) = (vx.len(), vx.len(), vy.len());
    let mut obj = vec![Q::one(); a];
    obj.extend(std::iter::repeat_n(epsilon.clone(), b));
    obj.extend(std::iter::repeat_n(Q::one(), c));
    let mut lp = LpProblem::new(obj).all_nonnegative();
    for (r, xr) in x.iter().enumerate() {
        let mut row: Vec<Q> = vx.iter().map(|v| v[r].clone()).collect();
        row.extend(vx.iter().map(|v| v[r].clone()));
        row.extend(std::iter::repeat_n(Q::zero(), c));
        lp = lp.eq(row, xr.clone());
    }
    let fv: Vec<Vec<Q>> = vx.iter().map(|v| f.apply(v)).collect();
    for (r, yr) in y.iter().enumerate() {
        let mut row = vec![Q::zero(); a];
        row.extend(fv.iter().map(|w| -&w[r]));
        row.extend(vy.iter().map(|w| w[r].clone()));
        lp = lp.eq(row, yr.clone());
    }
    match lp_solve(&lp).expect("well-formed") {
        LpOutcome::Optimal { value, .. } => value,
        other => unreachable!("decomposition always feasible and bounded: {other:?}"),
    }
}

/// `W = (X ⊕₁ Y) / span{(f z, −g z)}` for isometric `f: Z → X`, `g: Z → Y`.
pub fn pushout(f: &LinearMap, g: &LinearMap) -> Result<Pushout> {
    if f.source().id() != g.source().id() {
        return Err(Error::DimensionMismatch("pushout legs have different sources".into()));
    }
    f.require_isometric()?;
    g.require_isometric()?;
    let x = f.target();
    let y = g.target();
    let (nx, ny, nz) = (x.dim(), y.dim(), f.source().dim());
    let sum = space::l1_sum(x, y);
    let mut kernel = Matrix::zeros(nx + ny, nz);
    for k in 0..nz {
        for r in 0..nx {
            kernel[(r, k)] = f.matrix()[(r, k)].clone();
        }
        for r in 0..ny {
            kernel[(nx + r, k)] = -g.matrix()[(r, k)].clone();
        }
    }
    let (w, qm) = space::quotient(&sum, &kernel)?;
    let w = Arc::new(w);
    let (a, b) = block_injections(nx, ny);
    let f_prime = LinearMap::new(x.clone(), w.clone(), qm.matmul(&a))?;
    let g_prime = LinearMap::new(y.clone(), w.clone(), qm.matmul(&b))?;
    check_square(f, g, &f_prime, &g_prime)?;
    f_prime.require_isometric()?;
    g_prime.require_isometric()?;
    Ok(Pushout { space: w, f_prime, g_prime })
}

fn check_square(f: &LinearMap, g: &LinearMap, fp: &LinearMap, gp: &LinearMap) -> Result<()> {
    let lhs = fp.matrix().matmul(f.matrix());
    let rhs = gp.matrix().matmul(g.matrix());
    if let Some((r, c)) = lhs.first_difference(&rhs) {
        return Err(Error::Rejected(format!("amalgam square fails to commute at entry ({r}, {c})")));
    }
    Ok(())
}

/// Facet functionals as a map into `ℓ∞^N`, one row per `±` pair, in descending order.
pub fn facet_embedding_rows(x: &PolyNormedSpace) -> Vec<Vec<Q>> {
    let mut rows: Vec<Vec<Q>> = representatives(x.facets()).cloned().collect();
    rows.sort_by(|a, b| b.cmp(a));
    rows
}

/// Embeds `X` isometrically into `ℓ∞^N` through its facet functionals.
pub fn linf_dominate(x: &Space, e: &LinearMap) -> Result<(Space, LinearMap)> {
    if e.target().id() != x.id() {
        return Err(Error::DimensionMismatch("anchor map does not land in the space".into()));
    }
    e.require_isometric()?;
    let rows = facet_embedding_rows(x);
    let f = Arc::new(PolyNormedSpace::linf(rows.len()));
    let s = LinearMap::new(x.clone(), f.clone(), Matrix::from_rows(x.dim(), rows)?)?;
    s.require_isometric()?;
    compose(&s, e)?.require_isometric()?;
    Ok((f, s))
}

/// Whether the ball is a parallelotope: exactly `n` independent `±` facet pairs.
pub fn is_linf_class(x: &PolyNormedSpace) -> bool {
    let n = x.dim();
    if n == 0 {
        return true;
    }
    let fs = x.facets();
    if fs.len() != 2 * n {
        return false;
    }
    let reps: Vec<Vec<Q>> = representatives(fs).cloned().collect();
    reps.len() == n && Matrix::from_rows(n, reps).map(|m| m.rank() == n).unwrap_or(false)
}

/// A functional `χ` on `space` with `χ∘basis = values` and dual norm at most 1.
pub fn extend_functional(space: &PolyNormedSpace, basis: &Matrix, values: &[Q]) -> Option<Vec<Q>> {
    let n = space.dim();
    let k = basis.cols();
    if space.has_vertices() {
        let mut lp = LpProblem::new(vec![Q::zero(); n]);
        for v in space.vertices() {
            lp = lp.le(v.clone(), Q::one());
        }
        for c in 0..k {
            lp = lp.eq(basis.col(c), values[c].clone());
        }
        return lp_solve(&lp).ok()?.witness().map(<[Q]>::to_vec);
    }
    // χ = Σ μ_i φ_i with μ ≥ 0, Σ μ ≤ 1.
    let fs = space.facets();
    let m = fs.len();
    let mut lp = LpProblem::new(vec![Q::zero(); m]).all_nonnegative();
    lp = lp.le(vec![Q::one(); m], Q::one());
    for c in 0..k {
        let col = basis.col(c);
        lp = lp.eq(fs.iter().map(|phi| rational::dot(phi, &col)).collect(), values[c].clone());
    }
    let mu = lp_solve(&lp).ok()?.witness()?.to_vec();
    let mut chi = vec![Q::zero(); n];
    for (w, phi) in mu.iter().zip(fs) {
        if !w.is_zero() {
            chi.iter_mut().zip(phi).for_each(|(c, p)| *c += w * p);
        }
    }
    Some(chi)
}

/// Amalgam inside the `ℓ∞` class: `W = E ⊕∞ ℓ∞^M` with `M` the facet pairs of `Y`.
///
/// `f′(x) = (x, Lx)` and `g′(y) = (Ext y, s_Y y)`, where the rows of `L` and of
/// `Ext` (in facet coordinates of `E`) are norm-one extensions of functionals
/// transported across `Z`.
pub fn linf_amalgam(f: &LinearMap, g: &LinearMap) -> Result<Pushout> {
    let e = f.target();
    let y = g.target();
    if f.source().id() != g.source().id() {
        return Err(Error::DimensionMismatch("amalgam legs have different sources".into()));
    }
    if !is_linf_class(e) {
        return Err(Error::ClassViolation { class: "linf".into(), detail: "base space is not a parallelotope".into() });
    }
    f.require_isometric()?;
    g.require_isometric()?;
    let (ne, ny) = (e.dim(), y.dim());
    let phi = facet_embedding_rows(e);
    let psi = facet_embedding_rows(y);
    let mm = psi.len();
    let mut l_rows = Vec::with_capacity(mm);
    for p in &psi {
        let vals = g.matrix().pullback(p);
        let chi = extend_functional(e, f.matrix(), &vals)
            .ok_or_else(|| Error::Rejected("functional extension infeasible over the base".into()))?;
        l_rows.push(chi);
    }
    let mut chis = Vec::with_capacity(ne);
    for p in &phi {
        let vals = f.matrix().pullback(p);
        let chi = extend_functional(y, g.matrix(), &vals)
            .ok_or_else(|| Error::Rejected("functional extension infeasible over the new space".into()))?;
        chis.push(chi);
    }
    let ext = if ne == 0 {
        Matrix::zeros(0, ny)
    } else {
        let phi_m = Matrix::from_rows(ne, phi.clone())?;
        phi_m.inverse().expect("class member has independent facets").matmul(&Matrix::from_rows(ny, chis)?)
    };
    let n = ne + mm;
    let mut facets = Vec::with_capacity(2 * n);
    for p in &phi {
        let mut r = p.clone();
        r.resize(n, Q::zero());
        facets.push(rational::neg_vec(&r));
        facets.push(r);
    }
    for k in 0..mm {
        let mut r = vec![Q::zero(); n];
        r[ne + k] = Q::one();
        facets.push(rational::neg_vec(&r));
        facets.push(r);
    }
    let w = Arc::new(if n == 0 { PolyNormedSpace::zero() } else { PolyNormedSpace::from_facets_trusted(n, facets) });
    let fp = Matrix::identity(ne).vstack(&Matrix::from_rows(ne, l_rows)?);
    let gp = ext.vstack(&Matrix::from_rows(ny, psi)?);
    let f_prime = LinearMap::new(e.clone(), w.clone(), fp)?;
    let g_prime = LinearMap::new(y.clone(), w.clone(), gp)?;
    check_square(f, g, &f_prime, &g_prime)?;
    f_prime.require_isometric()?;
    g_prime.require_isometric()?;
    Ok(Pushout { space: w, f_prime, g_prime })
}

/// A class of spaces closed under isometries, with a way into the class.
pub trait SpaceClass: Send + Sync + std::fmt::Debug {
    fn name(&self) -> &str;

    fn contains(&self, x: &PolyNormedSpace) -> bool;

    /// Some `F` in the class and `s: X → F` with `s∘e` isometric.
    fn dominate(&self, x: &Space, e: &LinearMap) -> Result<(Space, LinearMap)>;

    /// Amalgamate `f: Z → X`, `g: Z → Y` into a member of the class.
    fn amalgamate(&self, f: &LinearMap, g: &LinearMap) -> Result<Pushout> {
        let p = pushout(f, g)?;
        let (fspace, s) = self.dominate(&p.space, &p.f_prime)?;
        Ok(Pushout { space: fspace, f_prime: compose(&s, &p.f_prime)?, g_prime: compose(&s, &p.g_prime)? })
    }
}

#[derive(Debug, Clone, Copy, Default)]
pub struct LinfClass;

impl SpaceClass for LinfClass {
    fn name(&self) -> &str {
        "linf"
    }

    fn contains(&self, x: &PolyNormedSpace) -> bool {
        is_linf_class(x)
    }

    fn dominate(&self, x: &Space, e: &LinearMap) -> Result<(Space, LinearMap)> {
        linf_dominate(x, e)
    }

    fn amalgamate(&self, f: &LinearMap, g: &LinearMap) -> Result<Pushout> {
        if is_linf_class(f.target()) {
            linf_amalgam(f, g)
        } else {
            let p = pushout(f, g)?;
            let (fspace, s) = self.dominate(&p.space, &p.f_prime)?;
            Ok(Pushout { space: fspace, f_prime: compose(&s, &p.f_prime)?, g_prime: compose(&s, &p.g_prime)? })
        }
    }
}

pub fn class_by_name(name: &str) -> Option<Arc<dyn SpaceClass>> {
    match name {
        "linf" => Some(Arc::new(LinfClass)),
        _ => None,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf, qvec};

    fn sp(s: PolyNormedSpace) -> Space {
        Arc::new(s)
    }

    fn line() -> Space {
        sp(PolyNormedSpace::l1(1))
    }

    #[test]
    fn correction_identity_half() {
        let id = LinearMap::identity(line());
        let ca = correction_amalgam(&id, &qf(1, 2)).unwrap();
        let mut expect = vec![qvec(&[1, 0]), qvec(&[0, 1]), qvec(&[2, -2])];
        expect.extend(expect.clone().iter().map(|v| rational::neg_vec(v)));
        expect.sort();
        assert_eq!(ca.space.vertices(), expect.as_slice());
        assert_eq!(op_distance(&compose(&ca.j, &id).unwrap(), &ca.i).unwrap(), qf(1, 2));
        // (1,−1) is half the graph vertex.
        assert_eq!(ca.space.norm(&qvec(&[1, -1])), qf(1, 2));
    }

    #[test]
    fn correction_scaling() {
        let f = LinearMap::scaling(line(), &qf(5, 4));
        let ca = correction_amalgam(&f, &qf(1, 4)).unwrap();
        assert_eq!(ca.i.isometry_constants().lower, q(1));
        assert!(op_distance(&compose(&ca.j, &f).unwrap(), &ca.i).unwrap() <= qf(1, 4));
        for v in [qvec(&[1, 0]), qvec(&[3, -2]), qvec(&[1, 7])] {
            assert_eq!(ca.space.norm(&v), correction_norm_lp(&f, &qf(1, 4), &v[..1], &v[1..]));
        }
    }

    #[test]
    fn correction_rejections() {
        let f = LinearMap::scaling(line(), &q(2));
        assert!(matches!(correction_amalgam(&f, &qf(1, 2)), Err(Error::NotEpsilonIsometric { .. })));
        let id = LinearMap::identity(line());
        assert!(matches!(correction_amalgam(&id, &q(1)), Err(Error::EpsilonOutOfRange(_))));
        assert!(matches!(correction_amalgam(&id, &q(0)), Err(Error::EpsilonOutOfRange(_))));
    }

    #[test]
    fn pushout_examples() {
        let zero = LinearMap::from_zero(sp(PolyNormedSpace::l1(2)));
        let zero2 = LinearMap::new(zero.source().clone(), line(), Matrix::zeros(1, 0)).unwrap();
        let p = pushout(&zero, &zero2).unwrap();
        assert_eq!(p.space.dim(), 3);
        assert_eq!(p.space.vertices().len(), 6);

        let id = LinearMap::identity(line());
        let p = pushout(&id, &id).unwrap();
        assert_eq!(p.space.dim(), 1);
        assert_eq!(p.space.vertices(), &[qvec(&[-1]), qvec(&[1])]);
        assert_eq!(p.f_prime.matrix(), &Matrix::identity(1));

        let z = line();
        let f = LinearMap::new(z.clone(), sp(PolyNormedSpace::l1(2)), Matrix::from_i64(2, 1, &[1, 0])).unwrap();
        let g = LinearMap::identity(z);
        let p = pushout(&f, &g).unwrap();
        assert_eq!(p.space.dim(), 2);
        assert!(p.f_prime.is_isometric_embedding().is_ok());
        assert!(p.g_prime.is_isometric_embedding().is_ok());
    }

    #[test]
    fn pushout_rejects_nonisometric() {
        let f = LinearMap::scaling(line(), &q(2));
        assert!(matches!(pushout(&f, &LinearMap::identity(line())), Err(Error::NotIsometric(_))));
    }

    #[test]
    fn domination_examples() {
        let l1 = sp(PolyNormedSpace::l1(2));
        let (f, s) = linf_dominate(&l1, &LinearMap::identity(l1.clone())).unwrap();
        assert_eq!(f.dim(), 2);
        assert_eq!(s.matrix(), &Matrix::from_i64(2, 2, &[1, 1, 1, -1]));
        let hex = sp(PolyNormedSpace::make_space(&[qvec(&[1, 0]), qvec(&[0, 1]), qvec(&[1, 1])]).unwrap());
        let (f, s) = linf_dominate(&hex, &LinearMap::identity(hex.clone())).unwrap();
        assert_eq!(f.dim(), 3);
        assert!(s.is_isometric_embedding().is_ok());
        let linf = sp(PolyNormedSpace::linf(3));
        let (_, s) = linf_dominate(&linf, &LinearMap::identity(linf.clone())).unwrap();
        assert_eq!(s.matrix(), &Matrix::identity(3));
    }

    #[test]
    fn class_membership() {
        assert!(is_linf_class(&PolyNormedSpace::linf(3)));
        assert!(is_linf_class(&PolyNormedSpace::l1(2)));
        assert!(!is_linf_class(&PolyNormedSpace::l1(3)));
        let hex = PolyNormedSpace::make_space(&[qvec(&[1, 0]), qvec(&[0, 1]), qvec(&[1, 1])]).unwrap();
        assert!(!is_linf_class(&hex));
    }

    #[test]
    fn linf_amalgam_stays_in_class() {
        let e = sp(PolyNormedSpace::linf(2));
        let z = line();
        let f = LinearMap::new(z.clone(), e.clone(), Matrix::from_i64(2, 1, &[1, 1])).unwrap();
        let hex = sp(PolyNormedSpace::make_space(&[qvec(&[1, 0]), qvec(&[0, 1]), qvec(&[1, 1])]).unwrap());
        let g = LinearMap::new(z, hex, Matrix::from_i64(2, 1, &[1, 0])).unwrap();
        let p = LinfClass.amalgamate(&f, &g).unwrap();
        assert!(is_linf_class(&p.space));
        assert_eq!(p.space.dim(), 5);
        assert!(p.g_prime.is_isometric_embedding().is_ok());
    }
}
