use std::sync::Arc;

use bmgame_core::metric::{free_amalgam, one_point_extension, validate_metric, FinMetricSpace, KatetovFunction, MetricEmbedding};
use bmgame_core::rational::{q, qf, Q};
use num_traits::Zero;
use proptest::prelude::*;

fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("p{i}")).collect()
}

fn symmetric_matrix(n: usize) -> impl Strategy<Value = Vec<Vec<Q>>> {
    prop::collection::vec(1i64..=8, n * (n - 1) / 2).prop_map(move |vals| {
        let mut d = vec![vec![Q::zero(); n]; n];
        let mut it = vals.into_iter();
        for i in 0..n {
            for j in i + 1..n {
                let v = qf(it.next().unwrap(), 2);
                d[i][j] = v.clone();
                d[j][i] = v;
            }
        }
        d
    })
}

fn brute_triangle(d: &[Vec<Q>]) -> bool {
    let n = d.len();
    (0..n).all(|x| (0..n).all(|y| (0..n).all(|z| d[x][z] <= &d[x][y] + &d[y][z])))
}

/// A metric built as shortest paths over a random weighted complete graph.
fn metric(n: usize) -> impl Strategy<Value = Arc<FinMetricSpace>> {
    symmetric_matrix(n).prop_map(move |mut d| {
        for k in 0..n {
            for i in 0..n {
                for j in 0..n {
                    let via = &d[i][k] + &d[k][j];
                    if via < d[i][j] {
                        d[i][j] = via;
                    }
                }
            }
        }
        Arc::new(FinMetricSpace::new(labels(n), d).unwrap())
    })
}

/// `Z ⊆ X`, `Z ⊆ Y` as the first points of each side.
fn amalgam_instance(max_total: usize) -> impl Strategy<Value = (MetricEmbedding, MetricEmbedding)> {
    (1usize..=2, 0usize..=2, 0usize..=2)
        .prop_filter("size", move |(z, a, b)| z + a + b <= max_total)
        .prop_flat_map(|(z, a, b)| (metric(z + a), metric(z + b), Just(z)))
        .prop_filter_map("sides disagree on Z", |(x, y, z)| {
            let zs = Arc::new(
                FinMetricSpace::new(labels(z), (0..z).map(|i| (0..z).map(|j| x.d(i, j).clone()).collect()).collect())
                    .unwrap(),
            );
            let f = MetricEmbedding::new(zs.clone(), x, (0..z).collect()).ok()?;
            let g = MetricEmbedding::new(zs, y, (0..z).collect()).ok()?;
            Some((f, g))
        })
}

fn katetov_over(m: Arc<FinMetricSpace>) -> impl Strategy<Value = (Arc<FinMetricSpace>, KatetovFunction)> {
    let n = m.len();
    prop::collection::vec(1i64..=16, n).prop_filter_map("not Katětov", move |v| {
        let k = KatetovFunction { values: v.into_iter().map(|x| qf(x, 2)).collect() };
        k.validate(&m).ok()?;
        Some((m.clone(), k))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn validator_matches_all_triples(d in (3usize..=5).prop_flat_map(symmetric_matrix)) {
        let n = d.len();
        prop_assert_eq!(validate_metric(&labels(n), &d).is_ok(), brute_triangle(&d));
    }

    #[test]
    fn free_amalgam_is_a_metric((f, g) in amalgam_instance(6)) {
        let (w, fx, gy) = free_amalgam(&f, &g).unwrap();
        prop_assert!(brute_triangle(w.dist()));
        prop_assert!(fx.check_isometric().is_ok() && gy.check_isometric().is_ok());
        for z in 0..f.source().len() {
            prop_assert_eq!(fx.apply(f.apply(z)), gy.apply(g.apply(z)));
        }
    }

    #[test]
    fn free_amalgam_is_maximal((f, g) in amalgam_instance(5)) {
        let (w, fx, gy) = free_amalgam(&f, &g).unwrap();
        let (nx, ny) = (f.target().len(), g.target().len());
        let fresh: Vec<usize> = (0..ny).filter(|y| !g.assignment().contains(y)).collect();
        let pairs: Vec<(usize, usize)> = (0..nx).filter(|x| !f.assignment().contains(x))
            .flat_map(|x| fresh.iter().map(move |&y| (x, y)))
            .collect();
        prop_assume!(!pairs.is_empty());
        // candidate cross distances: half-integers up to one above the largest free value
        let max_free = pairs.iter().map(|&(x, y)| w.d(fx.apply(x), gy.apply(y)).clone()).max().unwrap();
        let top = ((max_free + q(1)) * q(2)).floor().to_integer().to_string().parse::<i64>().unwrap();
        let mut choice = vec![1i64; pairs.len()];
        loop {
            let mut d = w.dist().to_vec();
            for (&(x, y), &c) in pairs.iter().zip(&choice) {
                let (a, b) = (fx.apply(x), gy.apply(y));
                d[a][b] = qf(c, 2);
                d[b][a] = qf(c, 2);
            }
            if brute_triangle(&d) {
                for &(x, y) in &pairs {
                    let (a, b) = (fx.apply(x), gy.apply(y));
                    prop_assert!(d[a][b] <= w.d(a, b).clone());
                }
            }
            let mut k = 0;
            while k < choice.len() && choice[k] == top {
                choice[k] = 1;
                k += 1;
            }
            if k == choice.len() {
                break;
            }
            choice[k] += 1;
        }
    }

    #[test]
    fn one_point_extension_reads_back((m, k) in (1usize..=4).prop_flat_map(metric).prop_flat_map(katetov_over)) {
        let e = one_point_extension(&m, &k, "new").unwrap();
        prop_assert!(brute_triangle(e.dist()));
        let last = e.len() - 1;
        for x in 0..m.len() {
            prop_assert_eq!(e.d(last, x), &k.values[x]);
        }
    }

    #[test]
    fn transport_preserves_profile((m, k) in (1usize..=3).prop_flat_map(metric).prop_flat_map(katetov_over), extra in 1usize..=2) {
        // embed m into a bigger space by extending it with points at distance 1 from everything
        let mut big = (*m).clone();
        for i in 0..extra {
            let kk = KatetovFunction { values: vec![big.diameter().max(q(1)); big.len()] };
            big = one_point_extension(&big, &kk, &format!("x{i}")).unwrap();
        }
        let big = Arc::new(big);
        let e = MetricEmbedding::new(m.clone(), big.clone(), (0..m.len()).collect()).unwrap();
        let t = k.transport(&e);
        prop_assert!(t.validate(&big).is_ok());
        for x in 0..m.len() {
            prop_assert_eq!(&t.values[e.apply(x)], &k.values[x]);
        }
    }
}
