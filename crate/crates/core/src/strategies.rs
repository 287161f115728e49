//! Strategies for both players of the normed game.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::amalgam::{correction_amalgam, pushout, SpaceClass};
use crate::catalog::{CatalogParams, Challenge, ChallengeKind, ChallengeQueue};
use crate::error::{Error, Result};
use crate::game::{CertificateRecord, ChainStep, GameConfig, GameState, Mirrored, Player, Proposal, Strategy, StrategyKind};
use crate::maps::{compose, LinearMap, Space};
use crate::matrix::Matrix;
use crate::rational::{self, q, qvec, Q};
use crate::space::{self, PolyNormedSpace};

pub fn catalog_params(c: &GameConfig) -> CatalogParams {
    CatalogParams { d: c.d, q: c.q, budget: c.budget }
}

/// Answers one challenge by amalgamating into the last stage.
/// Returns the new stage, its link and the certificate map.
pub fn answer_challenge(
    state: &GameState,
    ch: &Challenge,
    class: Option<&Arc<dyn SpaceClass>>,
) -> Result<(Space, LinearMap, LinearMap)> {
    let last = state.round() - 1;
    let w = compose(&state.composite(ch.stage, last), &ch.u)?;
    let amalgamate = |f: &LinearMap, g: &LinearMap| match class {
        Some(c) => c.amalgamate(f, g),
        None => pushout(f, g),
    };
    match ch.kind {
        ChallengeKind::ExactExtension => {
            let incl = ch.incl.as_ref().expect("exact challenges carry the inclusion");
            let p = amalgamate(&w, incl)?;
            Ok((p.space, p.f_prime, p.g_prime))
        }
        ChallengeKind::ApproxCorrection => {
            let eps = ch.tolerance.as_ref().expect("approximate challenges carry a tolerance");
            let e_last = state.last_space();
            let (u_space, basis) = space::subspace(&e_last, w.matrix())?;
            let u_space = Arc::new(u_space);
            let incl_u = LinearMap::new(u_space.clone(), e_last, basis)?;
            let w0 = LinearMap::new(ch.a.clone(), u_space, Matrix::identity(ch.a.dim()))?;
            let ca = correction_amalgam(&w0, eps)?;
            let p = amalgamate(&incl_u, &ca.j)?;
            let v = compose(&p.g_prime, &ca.i)?;
            Ok((p.space, p.f_prime, v))
        }
    }
}

/// Odd's catalog strategy: each turn enqueue new challenges and answer the
/// oldest pending one. With a class, every stage is built inside it.
pub struct OddCatalog {
    book: ChallengeQueue,
    class: Option<Arc<dyn SpaceClass>>,
    label: &'static str,
}

impl OddCatalog {
    pub fn gurarii(params: CatalogParams) -> Self {
        OddCatalog { book: ChallengeQueue::new(params), class: None, label: "gurarii" }
    }

    pub fn restricted(params: CatalogParams, class: Arc<dyn SpaceClass>) -> Self {
        OddCatalog { book: ChallengeQueue::new(params), class: Some(class), label: "restricted" }
    }
}

impl Strategy for OddCatalog {
    fn name(&self) -> String {
        self.label.into()
    }

    fn kind(&self) -> StrategyKind {
        StrategyKind::General
    }

    fn propose(&mut self, state: &GameState) -> Result<Proposal> {
        let (fresh, next) = self.book.turn(state);
        let enqueued: Vec<_> = fresh.iter().map(Challenge::summary).collect();
        let Some(pending) = next else {
            let mut p = Proposal::identity(state);
            p.annotations = json!({ "enqueued": enqueued, "dequeued": null, "queue": 0 });
            return Ok(p);
        };
        let ch = &pending.challenge;
        let (space, link, v) = answer_challenge(state, ch, self.class.as_ref())?;
        let source = match ch.kind {
            ChallengeKind::ExactExtension => ch.b.as_ref().expect("exact").wire(),
            ChallengeKind::ApproxCorrection => ch.a.wire(),
        };
        let mut p = Proposal::new(space, link);
        p.annotations = json!({
            "enqueued": enqueued,
            "dequeued": ch.summary(),
            "latency": (state.round() - pending.enqueued_round) / 2,
            "queue": self.book.queue.len(),
        });
        p.certificates.push(CertificateRecord {
            challenge: ch.id.clone(),
            player: Player::Odd,
            stage: state.round(),
            source: Some(source),
            matrix: Some(v.matrix().clone()),
            point: None,
        });
        Ok(p)
    }
}

/// Repeats the last stage.
pub struct Trivial;

impl Strategy for Trivial {
    fn name(&self) -> String {
        "trivial".into()
    }

    fn kind(&self) -> StrategyKind {
        StrategyKind::Markov
    }

    fn propose(&mut self, state: &GameState) -> Result<Proposal> {
        Ok(Proposal::identity(state))
    }
}

fn rand_q(rng: &mut ChaCha8Rng, num: i64, den: i64) -> Q {
    rational::qf(rng.gen_range(-num..=num), rng.gen_range(1..=den))
}

/// `E` with one extra dimension whose ball adds the vertex pair `±(p, h)`.
/// The old ball is exactly the `t = 0` section, so the link is isometric.
fn bump(e: &Space, p: Vec<Q>, h: Q) -> (Space, LinearMap) {
    let n = e.dim();
    let mut verts: Vec<Vec<Q>> = e
        .vertices()
        .iter()
        .map(|v| {
            let mut w = v.clone();
            w.push(Q::from_integer(0.into()));
            w
        })
        .collect();
    let mut top = p;
    top.push(h);
    verts.push(rational::neg_vec(&top));
    verts.push(top);
    let w = Arc::new(PolyNormedSpace::from_vertices_trusted(n + 1, verts));
    let link = LinearMap::new(e.clone(), w.clone(), Matrix::identity(n).vstack(&Matrix::zeros(1, n)))
        .expect("shapes agree");
    (w, link)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RandomStyle {
    Plain,
    /// Eccentric balls: large numerators, large denominators, flat bumps.
    Spike,
}

pub struct RandomEve {
    rng: ChaCha8Rng,
    style: RandomStyle,
}

impl RandomEve {
    pub fn new(seed: u64, style: RandomStyle) -> Self {
        RandomEve { rng: ChaCha8Rng::seed_from_u64(seed), style }
    }

    fn coord(&mut self) -> Q {
        match self.style {
            RandomStyle::Plain => rand_q(&mut self.rng, 3, 4),
            RandomStyle::Spike => rand_q(&mut self.rng, 60, 97),
        }
    }

    fn height(&mut self) -> Q {
        match self.style {
            RandomStyle::Plain => rational::qf(self.rng.gen_range(1..=4), self.rng.gen_range(1..=3)),
            RandomStyle::Spike => rational::qf(1, self.rng.gen_range(40..=100)),
        }
    }
}

impl Strategy for RandomEve {
    fn name(&self) -> String {
        match self.style {
            RandomStyle::Plain => "random".into(),
            RandomStyle::Spike => "spike".into(),
        }
    }

    fn kind(&self) -> StrategyKind {
        StrategyKind::Markov
    }

    fn propose(&mut self, state: &GameState) -> Result<Proposal> {
        let e = state.last_space();
        if e.dim() == 0 {
            let mut gens = vec![qvec(&[1, 0])];
            let extra = self.rng.gen_range(1..=2);
            for _ in 0..extra {
                let a = self.coord();
                let b = self.height();
                gens.push(vec![a, b]);
            }
            let s = Arc::new(PolyNormedSpace::make_space(&gens)?);
            return Ok(Proposal::new(s.clone(), LinearMap::from_zero(s)));
        }
        let p = (0..e.dim()).map(|_| self.coord()).collect();
        let h = self.height();
        let (w, link) = bump(&e, p, h);
        Ok(Proposal::new(w, link))
    }
}

/// Random moves inside the `ℓ∞` class: a new facet pair `±(χ, c)` with `‖χ‖* ≤ 1`.
pub struct LinfEve {
    rng: ChaCha8Rng,
}

impl LinfEve {
    pub fn new(seed: u64) -> Self {
        LinfEve { rng: ChaCha8Rng::seed_from_u64(seed) }
    }
}

impl Strategy for LinfEve {
    fn name(&self) -> String {
        "linf".into()
    }

    fn kind(&self) -> StrategyKind {
        StrategyKind::Markov
    }

    fn propose(&mut self, state: &GameState) -> Result<Proposal> {
        let e = state.last_space();
        let n = e.dim();
        if n == 0 {
            let a = rand_q(&mut self.rng, 3, 4);
            let s = Arc::new(PolyNormedSpace::from_facets(2, &[qvec(&[1, 0]), vec![a, q(1)]])?);
            return Ok(Proposal::new(s.clone(), LinearMap::from_zero(s)));
        }
        let mut chi: Vec<Q> = (0..n).map(|_| rand_q(&mut self.rng, 3, 4)).collect();
        let dn = e.dual_norm(&chi);
        if dn > Q::from_integer(1.into()) {
            chi = rational::scale_vec(&dn.recip(), &chi);
        }
        let c = rational::qf(self.rng.gen_range(1..=4), self.rng.gen_range(1..=3));
        let mut facets: Vec<Vec<Q>> = e
            .facets()
            .iter()
            .map(|f| {
                let mut g = f.clone();
                g.push(q(0));
                g
            })
            .collect();
        chi.push(c);
        facets.push(chi);
        let w = Arc::new(PolyNormedSpace::from_facets(n + 1, &facets)?);
        let link = LinearMap::new(e, w.clone(), Matrix::identity(n).vstack(&Matrix::zeros(1, n)))?;
        Ok(Proposal::new(w, link))
    }
}

/// Plays `S_0`, then `E ⊕₁ S_k` at its `k`-th turn, then identity moves.
pub struct ScriptEve {
    script: Vec<Space>,
    turn: usize,
}

impl ScriptEve {
    pub fn new(script: Vec<Space>) -> Self {
        ScriptEve { script, turn: 0 }
    }

    pub fn default_script() -> Vec<PolyNormedSpace> {
        vec![
            PolyNormedSpace::l1(1),
            PolyNormedSpace::l1(1),
            PolyNormedSpace::make_space(&[qvec(&[1, 0]), qvec(&[0, 1]), qvec(&[1, 1])]).expect("hexagon"),
            PolyNormedSpace::linf(2),
        ]
    }
}

impl Strategy for ScriptEve {
    fn name(&self) -> String {
        "script".into()
    }

    fn kind(&self) -> StrategyKind {
        StrategyKind::Markov
    }

    fn propose(&mut self, state: &GameState) -> Result<Proposal> {
        let k = self.turn;
        self.turn += 1;
        let Some(s) = self.script.get(k).cloned() else {
            return Ok(Proposal::identity(state));
        };
        let e = state.last_space();
        if e.dim() == 0 {
            return Ok(Proposal::new(s.clone(), LinearMap::from_zero(s)));
        }
        let w = Arc::new(space::l1_sum(&e, &s));
        let n = e.dim();
        let link = LinearMap::new(e, w.clone(), Matrix::identity(n).vstack(&Matrix::zeros(s.dim(), n)))?;
        Ok(Proposal::new(w, link))
    }
}

/// Builds a target chain from its wire form.
pub fn chain_from_steps(steps: &[ChainStep]) -> Result<Vec<(Space, Option<LinearMap>)>> {
    let mut out: Vec<(Space, Option<LinearMap>)> = Vec::new();
    for (k, st) in steps.iter().enumerate() {
        let s = Arc::new(PolyNormedSpace::from_wire(&st.space)?);
        let link = match (&st.link, out.last()) {
            (Some(m), Some((prev, _))) => {
                let l = LinearMap::new(prev.clone(), s.clone(), m.clone().with_cols(prev.dim())?)?;
                l.require_isometric().map_err(|e| Error::Rejected(format!("target chain step {k}: {e}")))?;
                Some(l)
            }
            (None, None) => None,
            _ => return Err(Error::Rejected(format!("target chain step {k} has a misplaced link"))),
        };
        out.push((s, link));
    }
    Ok(out)
}

/// `ℓ₁¹ ⊆ ℓ₁² ⊆ ℓ₁³` with coordinate inclusions.
pub fn default_target_chain() -> Vec<ChainStep> {
    (1..=3)
        .map(|n| ChainStep {
            space: PolyNormedSpace::l1(n).wire(),
            link: (n > 1).then(|| Matrix::identity(n - 1).vstack(&Matrix::zeros(1, n - 1))),
        })
        .collect()
}

/// Eve's universality strategy: builds the target chain into the play.
pub struct UniversalityEve {
    chain: Vec<(Space, Option<LinearMap>)>,
    embeddings: Vec<LinearMap>,
}

impl UniversalityEve {
    pub fn new(chain: Vec<(Space, Option<LinearMap>)>) -> Self {
        UniversalityEve { chain, embeddings: Vec::new() }
    }
}

impl Strategy for UniversalityEve {
    fn name(&self) -> String {
        "universality".into()
    }

    fn kind(&self) -> StrategyKind {
        StrategyKind::General
    }

    fn propose(&mut self, state: &GameState) -> Result<Proposal> {
        let round = state.round();
        let k = self.embeddings.len();
        let cert = |k: usize, e: &LinearMap, x: &Space| CertificateRecord {
            challenge: format!("u{k}"),
            player: Player::Eve,
            stage: round,
            source: Some(x.wire()),
            matrix: Some(e.matrix().clone()),
            point: None,
        };
        if round == 0 {
            let (x0, _) = self.chain.first().cloned().ok_or_else(|| Error::Rejected("empty target chain".into()))?;
            let e0 = LinearMap::identity(x0.clone());
            let mut p = Proposal::new(x0.clone(), LinearMap::from_zero(x0.clone()));
            p.certificates.push(cert(0, &e0, &x0));
            self.embeddings.push(e0);
            return Ok(p);
        }
        let Some((xk1, Some(step))) = self.chain.get(k).cloned() else {
            return Ok(Proposal::identity(state));
        };
        let prev_stage = round - 2;
        let ek = compose(&state.composite(prev_stage, round - 1), &self.embeddings[k - 1])?;
        let p = pushout(&step, &ek)?;
        let e_next = p.f_prime.clone();
        let mut prop = Proposal::new(p.space, p.g_prime);
        prop.certificates.push(cert(k, &e_next, &xk1));
        prop.annotations = json!({ "universality": k });
        self.embeddings.push(e_next);
        Ok(prop)
    }
}

fn space_list(ws: &[crate::space::SpaceWire]) -> Result<Vec<Space>> {
    ws.iter().map(|w| PolyNormedSpace::from_wire(w).map(Arc::new)).collect()
}

/// Instantiates Eve's strategy named in the configuration.
pub fn build_eve(c: &GameConfig) -> Result<Box<dyn Strategy>> {
    let seed = c.seed;
    Ok(match c.eve.as_str() {
        "random" => Box::new(RandomEve::new(seed, RandomStyle::Plain)),
        "spike" | "adversarial-spike" => Box::new(RandomEve::new(seed, RandomStyle::Spike)),
        "linf" => Box::new(LinfEve::new(seed)),
        "script" => {
            let s = if c.script.is_empty() {
                ScriptEve::default_script().into_iter().map(Arc::new).collect()
            } else {
                space_list(&c.script)?
            };
            Box::new(ScriptEve::new(s))
        }
        "universality" => {
            let steps = if c.target_chain.is_empty() { default_target_chain() } else { c.target_chain.clone() };
            Box::new(UniversalityEve::new(chain_from_steps(&steps)?))
        }
        "mirror" => Box::new(Mirrored { inner: build_odd(c)?, seed: Arc::new(PolyNormedSpace::l1(1)) }),
        other => return Err(Error::Rejected(format!("unknown Eve strategy {other:?}"))),
    })
}

pub fn build_odd(c: &GameConfig) -> Result<Box<dyn Strategy>> {
    Ok(match c.odd.as_str() {
        "gurarii" => Box::new(OddCatalog::gurarii(catalog_params(c))),
        "restricted" => {
            let class = c.rule_class()?.ok_or_else(|| Error::Rejected("restricted Odd needs a class".into()))?;
            Box::new(OddCatalog::restricted(catalog_params(c), class))
        }
        "trivial" => Box::new(Trivial),
        other => return Err(Error::Rejected(format!("unknown Odd strategy {other:?}"))),
    })
}

/// Plays a normed game entirely from its configuration.
pub fn play_config(c: &GameConfig) -> Result<(crate::game::Transcript, GameState)> {
    let mut eve = build_eve(c)?;
    let mut odd = build_odd(c)?;
    crate::game::play(eve.as_mut(), odd.as_mut(), c)
}
