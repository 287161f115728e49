mod common;

use std::sync::Arc;

use bmgame_core::amalgam::{correction_amalgam, is_linf_class, linf_dominate, pushout};
use bmgame_core::lp::{lp_solve, LpProblem};
use bmgame_core::maps::{compose, op_distance, LinearMap};
use bmgame_core::matrix::Matrix;
use bmgame_core::rational::{dot, q, qf, Q};
use bmgame_core::space::{l1_sum, PolyNormedSpace};
use common::{int_vec, qvec_of, space_upto};
use num_traits::Zero;
use proptest::prelude::*;

type Space = Arc<PolyNormedSpace>;

/// An isometric embedding out of a random space: the identity, a dominating
/// ℓ∞ embedding, or the first summand of an ℓ1 sum.
fn isometric_from(x: Space, style: u8, extra: Space) -> LinearMap {
    match style % 3 {
        0 => LinearMap::identity(x),
        1 => linf_dominate(&x, &LinearMap::identity(x.clone())).unwrap().1,
        _ => {
            let w = Arc::new(l1_sum(&x, &extra));
            let mut m = Matrix::zeros(w.dim(), x.dim());
            for i in 0..x.dim() {
                m[(i, i)] = q(1);
            }
            LinearMap::new(x, w, m).unwrap()
        }
    }
}

fn epsilon() -> impl Strategy<Value = Q> {
    prop_oneof![Just(qf(1, 2)), Just(qf(1, 4)), Just(qf(1, 10))]
}

/// An ε-isometric map obtained by perturbing an isometric one.
fn approx_map() -> impl Strategy<Value = (LinearMap, Q)> {
    (space_upto(2), any::<u8>(), space_upto(1), epsilon()).prop_flat_map(|(x, st, extra, eps)| {
        let e = isometric_from(x, st, extra);
        let (r, c) = (e.matrix().rows(), e.matrix().cols());
        prop::collection::vec(-1i64..=1, r * c).prop_filter_map("not ε-isometric", move |d| {
            let mut m = e.matrix().clone();
            for (k, v) in d.iter().enumerate() {
                m[(k / c, k % c)] += qf(*v, 20);
            }
            let f = LinearMap::new(e.source().clone(), e.target().clone(), m).ok()?;
            f.is_epsilon_isometric(&eps).ok()?;
            Some((f, eps.clone()))
        })
    })
}

/// `min ‖x₀‖ + ‖y₀‖ + ε‖x₁‖` over `x = x₀ + x₁`, `y = y₀ − f x₁`.
fn decomposition_norm(f: &LinearMap, eps: &Q, x: &[Q], y: &[Q]) -> Q {
    let (n, m) = (f.source().dim(), f.target().dim());
    let nv = 2 * n + m + 3;
    let (t0, t1, t2) = (2 * n + m, 2 * n + m + 1, 2 * n + m + 2);
    let mut obj = vec![Q::zero(); nv];
    obj[t0] = q(1);
    obj[t1] = q(1);
    obj[t2] = eps.clone();
    let mut lp = LpProblem::new(obj);
    for phi in f.source().facets() {
        for (off, t) in [(0, t0), (n, t2)] {
            let mut row = vec![Q::zero(); nv];
            row[off..off + n].clone_from_slice(phi);
            row[t] = q(-1);
            lp = lp.le(row, Q::zero());
        }
    }
    for psi in f.target().facets() {
        let mut row = vec![Q::zero(); nv];
        row[2 * n..2 * n + m].clone_from_slice(psi);
        row[t1] = q(-1);
        lp = lp.le(row, Q::zero());
    }
    for i in 0..n {
        let mut row = vec![Q::zero(); nv];
        row[i] = q(1);
        row[n + i] = q(1);
        lp = lp.eq(row, x[i].clone());
    }
    for k in 0..m {
        let mut row = vec![Q::zero(); nv];
        row[2 * n + k] = q(1);
        for i in 0..n {
            row[n + i] = -f.matrix()[(k, i)].clone();
        }
        lp = lp.eq(row, y[k].clone());
    }
    lp_solve(&lp).unwrap().value().unwrap().clone()
}

/// `min_z ‖x + f z‖ + ‖y − g z‖`.
fn coset_norm(f: &LinearMap, g: &LinearMap, x: &[Q], y: &[Q]) -> Q {
    let k = f.source().dim();
    let mut obj = vec![Q::zero(); k + 2];
    obj[k] = q(1);
    obj[k + 1] = q(1);
    let mut lp = LpProblem::new(obj);
    for phi in f.target().facets() {
        let mut row = f.matrix().pullback(phi);
        row.extend([q(-1), Q::zero()]);
        lp = lp.le(row, -dot(phi, x));
    }
    for psi in g.target().facets() {
        let mut row: Vec<Q> = g.matrix().pullback(psi).into_iter().map(|v| -v).collect();
        row.extend([Q::zero(), q(-1)]);
        lp = lp.le(row, -dot(psi, y));
    }
    lp_solve(&lp).unwrap().value().unwrap().clone()
}

fn concat(a: &[Q], b: &[Q]) -> Vec<Q> {
    a.iter().chain(b).cloned().collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn correction_amalgam_matches_decomposition((f, eps) in approx_map(), pts in prop::collection::vec(qvec_of(8), 4)) {
        let a = correction_amalgam(&f, &eps).unwrap();
        prop_assert!(a.i.is_isometric_embedding().is_ok());
        prop_assert!(a.j.is_isometric_embedding().is_ok());
        prop_assert!(op_distance(&compose(&a.j, &f).unwrap(), &a.i).unwrap() <= eps);
        let (n, m) = (f.source().dim(), f.target().dim());
        for p in &pts {
            let (x, y) = (&p[..n], &p[n..n + m]);
            prop_assert_eq!(a.space.norm(&concat(x, y)), decomposition_norm(&f, &eps, x, y));
        }
    }

    #[test]
    fn pushout_square_and_norm(
        z in space_upto(2),
        (sf, sg) in (any::<u8>(), any::<u8>()),
        (ef, eg) in (space_upto(1), space_upto(1)),
        pts in prop::collection::vec(int_vec(12, 3), 3),
    ) {
        let f = isometric_from(z.clone(), sf, ef);
        let g = isometric_from(z, sg, eg);
        let p = pushout(&f, &g).unwrap();
        let lhs = compose(&p.f_prime, &f).unwrap();
        let rhs = compose(&p.g_prime, &g).unwrap();
        prop_assert_eq!(lhs.matrix(), rhs.matrix());
        prop_assert!(p.f_prime.is_isometric_embedding().is_ok());
        prop_assert!(p.g_prime.is_isometric_embedding().is_ok());
        let (nx, ny) = (f.target().dim(), g.target().dim());
        for v in &pts {
            let (x, y) = (&v[..nx], &v[nx..nx + ny]);
            let w: Vec<Q> = p.f_prime.apply(x).iter().zip(p.g_prime.apply(y)).map(|(a, b)| a + b).collect();
            prop_assert_eq!(p.space.norm(&w), coset_norm(&f, &g, x, y));
        }
    }

    #[test]
    fn domination_is_exact(x in space_upto(3)) {
        let (f, s) = linf_dominate(&x, &LinearMap::identity(x.clone())).unwrap();
        let c = s.isometry_constants();
        prop_assert_eq!((c.lower, c.upper), (q(1), q(1)));
        prop_assert!(is_linf_class(&f));
        prop_assert_eq!(f.dim(), x.facets().len() / 2);
    }
}

#[test]
fn membership_on_standard_spaces() {
    for n in 1..=4 {
        assert!(is_linf_class(&PolyNormedSpace::linf(n)));
    }
    assert!(is_linf_class(&PolyNormedSpace::l1(2)));
    assert!(!is_linf_class(&PolyNormedSpace::l1(3)));
    assert!(!is_linf_class(&PolyNormedSpace::l1(4)));
}
