//! Deterministic enumeration of extension challenges against chain stages.

use std::collections::{HashMap, VecDeque};
use std::sync::Arc;

use num_bigint::BigInt;
use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::game::GameState;
use crate::maps::{LinearMap, Space};
use crate::matrix::Matrix;
use crate::rational::{self, pow2_neg, Q};
use crate::space::PolyNormedSpace;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChallengeKind {
    /// Given `u: A → E_m` isometric and `A ⊆ B`, find `v: B → E_n` with `v∘incl = link∘u`.
    ExactExtension,
    /// Given `u: A → E_m` ε-isometric, find isometric `v: A → E_n` within ε of `link∘u`.
    ApproxCorrection,
}

#[derive(Debug, Clone)]
pub struct Challenge {
    pub id: String,
    pub kind: ChallengeKind,
    pub stage: usize,
    pub a: Space,
    pub b: Option<Space>,
    pub incl: Option<LinearMap>,
    pub u: LinearMap,
    pub tolerance: Option<Q>,
}

impl Challenge {
    pub fn summary(&self) -> Value {
        let mut v = json!({ "id": self.id, "kind": self.kind, "stage": self.stage });
        if let Some(t) = &self.tolerance {
            v["tolerance"] = json!(rational::to_string(t));
        }
        v
    }
}

/// Nonzero fractions in `[−1, 1]` with denominator at most `h`, ordered by
/// denominator, then magnitude, positive before negative.
pub fn grid_values(h: u64) -> Vec<Q> {
    let mut out = Vec::new();
    for den in 1..=h {
        for num in 1..=den {
            let v = Q::new(BigInt::from(num), BigInt::from(den));
            if *v.denom() == BigInt::from(den) {
                out.push(v.clone());
                out.push(-v);
            }
        }
    }
    out
}

fn denominator_of(v: &[Q]) -> BigInt {
    v.iter().filter(|x| !x.is_zero()).map(|x| x.denom().clone()).max().unwrap_or_else(BigInt::one)
}

/// The first `limit` candidate vectors in `R^n`, by level = support size + height.
fn candidates(n: usize, q: u64, limit: usize) -> Vec<Vec<Q>> {
    let mut out = Vec::new();
    for level in 2..=(n as u64 + q) {
        for s in 1..=n.min((level - 1) as usize) {
            let h = level - s as u64;
            if h == 0 || h > q {
                continue;
            }
            let vals = grid_values(h);
            let hb = BigInt::from(h);
            let mut pos: Vec<usize> = (0..s).collect();
            loop {
                let mut idx = vec![0usize; s];
                loop {
                    if vals[idx[0]].is_positive() {
                        let mut v = vec![Q::zero(); n];
                        for (k, &p) in pos.iter().enumerate() {
                            v[p] = vals[idx[k]].clone();
                        }
                        if denominator_of(&v) == hb {
                            out.push(v);
                            if out.len() >= limit {
                                return out;
                            }
                        }
                    }
                    // odometer, last position fastest
                    let mut k = s;
                    loop {
                        if k == 0 {
                            break;
                        }
                        k -= 1;
                        idx[k] += 1;
                        if idx[k] < vals.len() {
                            break;
                        }
                        idx[k] = 0;
                        if k == 0 {
                            k = usize::MAX;
                            break;
                        }
                    }
                    if k == usize::MAX {
                        break;
                    }
                }
                // next combination of positions in lex order
                let mut i = s;
                while i > 0 && pos[i - 1] == n - s + i - 1 {
                    i -= 1;
                }
                if i == 0 {
                    break;
                }
                pos[i - 1] += 1;
                for j in i..s {
                    pos[j] = pos[j - 1] + 1;
                }
            }
        }
    }
    out
}

/// Number of candidate vectors in `R^n`, saturating.
fn candidate_count(n: usize, q: u64) -> usize {
    let base = grid_values(q).len() as u128 + 1;
    let mut total: u128 = 1;
    for _ in 0..n {
        total = total.saturating_mul(base);
        if total > usize::MAX as u128 {
            return usize::MAX;
        }
    }
    ((total - 1) / 2) as usize
}

fn cantor_unpair(j: usize) -> (usize, usize) {
    let w = (((8 * j as u128 + 1) as f64).sqrt() as usize - 1) / 2;
    let mut w = w;
    while (w + 1) * (w + 2) / 2 <= j {
        w += 1;
    }
    while w * (w + 1) / 2 > j {
        w -= 1;
    }
    let t = w * (w + 1) / 2;
    let b = j - t;
    (w - b, b)
}

fn cantor_pair(a: usize, b: usize) -> usize {
    let s = a.saturating_add(b);
    (s.saturating_mul(s.saturating_add(1)) / 2).saturating_add(b)
}

#[derive(Debug, Default)]
struct CandidateCache {
    by_dim: HashMap<usize, Vec<Vec<Q>>>,
}

impl CandidateCache {
    fn get(&mut self, n: usize, q: u64, idx: usize) -> Option<Vec<Q>> {
        let total = candidate_count(n, q);
        if idx >= total {
            return None;
        }
        let have = self.by_dim.get(&n).map_or(0, Vec::len);
        if idx >= have {
            let limit = (2 * have).max(idx + 1).max(16);
            self.by_dim.insert(n, candidates(n, q, limit));
        }
        self.by_dim.get(&n).and_then(|v| v.get(idx).cloned())
    }
}

/// Enumeration caps: dimension `d` of `B`, denominator `q`, per-turn budget.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CatalogParams {
    pub d: usize,
    pub q: u64,
    pub budget: usize,
}

/// Per-stage challenge streams, dovetailed across stages.
#[derive(Debug)]
pub struct ChallengeCatalog {
    params: CatalogParams,
    cursors: Vec<usize>,
    cache: CandidateCache,
    w_list: Vec<Vec<Q>>,
    next_seq: usize,
    next_k: u32,
}

impl ChallengeCatalog {
    pub fn new(params: CatalogParams) -> Self {
        // second coordinate nonzero so that B is two-dimensional; first-seen order
        let mut seen = std::collections::BTreeSet::new();
        let w_list = if params.d >= 2 {
            candidates(2, params.q, usize::MAX)
                .into_iter()
                .filter(|w| !w[1].is_zero())
                .map(|w| if w[1].is_negative() { rational::neg_vec(&w) } else { w })
                .filter(|w| seen.insert(w.clone()))
                .collect()
        } else {
            Vec::new()
        };
        ChallengeCatalog { params, cursors: Vec::new(), cache: CandidateCache::default(), w_list, next_seq: 0, next_k: 1 }
    }

    pub fn params(&self) -> CatalogParams {
        self.params
    }

    fn exhausted(&self, n: usize, cursor: usize) -> bool {
        let na = candidate_count(n, self.params.q);
        let exact_end = if self.params.d >= 2 && !self.w_list.is_empty() {
            cantor_pair(na.saturating_sub(1), self.w_list.len() - 1).saturating_add(1)
        } else {
            0
        };
        let approx_end = cantor_pair(na.saturating_sub(1), na.saturating_sub(1)).saturating_add(1);
        if self.params.d >= 2 {
            cursor >= 2usize.saturating_mul(exact_end.max(approx_end))
        } else {
            cursor >= approx_end
        }
    }

    /// Stream item `i` of stage `m`, or `None` if it is out of range or invalid.
    fn item(&mut self, state: &GameState, m: usize, i: usize) -> Option<Challenge> {
        let space = state.stages[m].space.clone();
        let n = space.dim();
        let q = self.params.q;
        let (exact, j) = if self.params.d >= 2 { (i % 2 == 0, i / 2) } else { (false, i) };
        let (a_idx, b_idx) = cantor_unpair(j);
        let x = self.cache.get(n, q, a_idx)?;
        let c = space.norm(&x);
        let a = Arc::new(PolyNormedSpace::line(&c).expect("nonzero vector has positive norm"));
        if exact {
            let w = self.w_list.get(b_idx)?.clone();
            let r = c.recip();
            let b = Arc::new(
                PolyNormedSpace::from_vertices(2, &[vec![r, Q::zero()], w]).expect("spanning pair"),
            );
            let incl = LinearMap::new(a.clone(), b.clone(), Matrix::from_i64(2, 1, &[1, 0])).ok()?;
            let u = LinearMap::new(a.clone(), space, Matrix::from_cols(n, &[x]).ok()?).ok()?;
            Some(Challenge {
                id: String::new(),
                kind: ChallengeKind::ExactExtension,
                stage: m,
                a,
                b: Some(b),
                incl: Some(incl),
                u,
                tolerance: None,
            })
        } else {
            let y = self.cache.get(n, q, b_idx)?;
            let k = self.next_k;
            let eps = pow2_neg(k);
            let xp = rational::add_vec(&x, &rational::scale_vec(&pow2_neg(k + 1), &y));
            if rational::is_zero_vec(&xp) {
                return None;
            }
            let ratio = space.norm(&xp) / &c;
            if ratio < Q::one() - &eps || ratio > Q::one() + &eps {
                return None;
            }
            let u = LinearMap::new(a.clone(), space, Matrix::from_cols(n, &[xp]).ok()?).ok()?;
            self.next_k += 1;
            Some(Challenge {
                id: String::new(),
                kind: ChallengeKind::ApproxCorrection,
                stage: m,
                a,
                b: None,
                incl: None,
                u,
                tolerance: Some(eps),
            })
        }
    }

    /// Up to `budget` new challenges against the current stages.
    pub fn enumerate(&mut self, state: &GameState) -> Vec<Challenge> {
        self.cursors.resize(state.stages.len(), 0);
        let mut out = Vec::new();
        while out.len() < self.params.budget {
            let pick = (0..state.stages.len())
                .filter(|&m| {
                    let n = state.stages[m].space.dim();
                    n > 0 && !self.exhausted(n, self.cursors[m])
                })
                .min_by_key(|&m| (m + self.cursors[m], m));
            let Some(m) = pick else { break };
            let i = self.cursors[m];
            self.cursors[m] += 1;
            if let Some(mut c) = self.item(state, m, i) {
                c.id = format!("c{}", self.next_seq);
                self.next_seq += 1;
                out.push(c);
            }
        }
        out
    }
}

#[derive(Debug, Clone)]
pub struct Pending {
    pub challenge: Challenge,
    pub enqueued_round: usize,
    pub queue_len: usize,
}

/// FIFO bookkeeping shared by the strategy and the checker.
#[derive(Debug)]
pub struct ChallengeQueue {
    pub catalog: ChallengeCatalog,
    pub queue: VecDeque<Pending>,
}

impl ChallengeQueue {
    pub fn new(params: CatalogParams) -> Self {
        ChallengeQueue { catalog: ChallengeCatalog::new(params), queue: VecDeque::new() }
    }

    /// Enumerates new challenges, then dequeues the oldest one.
    pub fn turn(&mut self, state: &GameState) -> (Vec<Challenge>, Option<Pending>) {
        let round = state.round();
        let fresh = self.catalog.enumerate(state);
        for c in &fresh {
            let queue_len = self.queue.len() + 1;
            self.queue.push_back(Pending { challenge: c.clone(), enqueued_round: round, queue_len });
        }
        (fresh, self.queue.pop_front())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameState;
    use crate::rational::{q, qf, qvec};

    fn state_with(space: PolyNormedSpace) -> GameState {
        let mut st = GameState::new(None, 64);
        let s = Arc::new(space);
        st.push(s.clone(), LinearMap::from_zero(s));
        st
    }

    #[test]
    fn grid() {
        assert_eq!(grid_values(2), vec![q(1), q(-1), qf(1, 2), qf(-1, 2)]);
        assert_eq!(grid_values(4).len(), 12);
    }

    #[test]
    fn candidate_order_and_count() {
        let c = candidates(2, 1, usize::MAX);
        assert_eq!(c, vec![qvec(&[1, 0]), qvec(&[0, 1]), qvec(&[1, 1]), qvec(&[1, -1])]);
        assert_eq!(candidate_count(2, 1), 4);
        assert_eq!(candidates(3, 4, usize::MAX).len(), candidate_count(3, 4));
    }

    #[test]
    fn cantor_roundtrip() {
        for j in 0..500 {
            let (a, b) = cantor_unpair(j);
            assert_eq!(cantor_pair(a, b), j);
        }
    }

    #[test]
    fn first_entry_is_l1_square() {
        let st = state_with(PolyNormedSpace::l1(1));
        let mut cat = ChallengeCatalog::new(CatalogParams { d: 2, q: 2, budget: 2 });
        let cs = cat.enumerate(&st);
        assert_eq!(cs[0].kind, ChallengeKind::ExactExtension);
        let b = cs[0].b.as_ref().unwrap();
        assert_eq!(b.id(), PolyNormedSpace::l1(2).id());
        assert_eq!(cs[1].kind, ChallengeKind::ApproxCorrection);
        assert_eq!(cs[1].tolerance, Some(qf(1, 2)));
    }

    #[test]
    fn d1_only_approx() {
        let st = state_with(PolyNormedSpace::l1(2));
        let mut cat = ChallengeCatalog::new(CatalogParams { d: 1, q: 1, budget: 6 });
        let cs = cat.enumerate(&st);
        assert!(!cs.is_empty());
        assert!(cs.iter().all(|c| c.kind == ChallengeKind::ApproxCorrection && c.a.dim() == 1));
    }

    #[test]
    fn approx_challenges_are_eps_isometric() {
        let st = state_with(PolyNormedSpace::make_space(&[qvec(&[1, 0]), qvec(&[0, 1]), qvec(&[1, 1])]).unwrap());
        let mut cat = ChallengeCatalog::new(CatalogParams { d: 2, q: 4, budget: 12 });
        for c in cat.enumerate(&st) {
            match c.kind {
                ChallengeKind::ApproxCorrection => {
                    assert!(c.u.is_epsilon_isometric(c.tolerance.as_ref().unwrap()).is_ok())
                }
                ChallengeKind::ExactExtension => {
                    assert!(c.u.is_isometric_embedding().is_ok());
                    assert!(c.incl.as_ref().unwrap().is_isometric_embedding().is_ok());
                }
            }
        }
    }

    #[test]
    fn deterministic_stream() {
        let st = state_with(PolyNormedSpace::l1(2));
        let ids = |_: ()| {
            let mut cat = ChallengeCatalog::new(CatalogParams { d: 2, q: 4, budget: 5 });
            cat.enumerate(&st).iter().map(|c| (c.kind, c.u.matrix().clone())).collect::<Vec<_>>()
        };
        assert_eq!(ids(()), ids(()));
    }
}
