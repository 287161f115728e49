//! The game over finite rational metric spaces: Katětov challenges, Odd's
//! one-point extension strategy and the exact certificate checker.

use std::collections::VecDeque;
use std::sync::Arc;

use num_traits::{Signed, Zero};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::error::{Error, PairWitness, Result};
use crate::game::{CertificateRecord, GameConfig, GameKind, LinkWire, MoveRecord, Player, Transcript};
use crate::metric::{one_point_extension, FinMetricSpace, KatetovFunction, Metric, MetricEmbedding};
use crate::rational::{self, Q};

#[derive(Debug, Clone)]
pub struct MetricStage {
    pub space: Metric,
    pub link: MetricEmbedding,
    pub by: Player,
}

#[derive(Debug, Clone, Default)]
pub struct MetricState {
    pub stages: Vec<MetricStage>,
}

impl MetricState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn round(&self) -> usize {
        self.stages.len()
    }

    pub fn last_space(&self) -> Metric {
        self.stages.last().map(|s| s.space.clone()).unwrap_or_else(|| Arc::new(FinMetricSpace::empty()))
    }

    /// The composite link from stage `m` into stage `n`.
    pub fn composite(&self, m: usize, n: usize) -> MetricEmbedding {
        assert!(m <= n && n < self.stages.len());
        let mut e = MetricEmbedding::identity(self.stages[m].space.clone());
        for k in m + 1..=n {
            e = self.stages[k].link.compose(&e).expect("links chain");
        }
        e
    }

    pub fn prefix(&self, len: usize) -> MetricState {
        MetricState { stages: self.stages[..len].to_vec() }
    }

    pub fn validate_move(&self, space: &Metric, link: &MetricEmbedding) -> Result<()> {
        if space.is_empty() {
            return Err(Error::Rejected("a stage needs at least one point".into()));
        }
        if link.source().id() != self.last_space().id() || link.target().id() != space.id() {
            return Err(Error::Rejected("link does not connect the last stage to the new one".into()));
        }
        link.check_isometric()
    }

    pub fn push(&mut self, space: Metric, link: MetricEmbedding) {
        let by = Player::at_round(self.stages.len());
        self.stages.push(MetricStage { space, link, by });
    }

    /// Rebuilds a state from transcript moves. Distances are checked before
    /// identifiers, so an edited entry surfaces as a distorted pair.
    pub fn from_moves(moves: &[MoveRecord]) -> Result<Self> {
        let mut st = MetricState::new();
        for (i, mv) in moves.iter().enumerate() {
            if mv.round != i || mv.by != Player::at_round(i) {
                return Err(Error::Rejected(format!("move {i} is out of turn")));
            }
            let w = mv.metric.as_ref().ok_or_else(|| Error::Parse(format!("move {i} has no metric")))?;
            let space = Arc::new(FinMetricSpace::new(w.points.clone(), w.dist.clone())?);
            let a = mv.link.assignment.clone().ok_or_else(|| Error::Parse(format!("move {i} has no assignment")))?;
            let link = MetricEmbedding::unchecked(st.last_space(), space.clone(), a)?;
            link.check_isometric().map_err(|e| Error::Rejected(format!("round {i}: {e}")))?;
            if w.id.as_deref().is_some_and(|id| id != space.id())
                || mv.link.source != st.last_space().id()
                || mv.link.target != space.id()
            {
                return Err(Error::Rejected(format!("round {i}: identifiers do not match the content")));
            }
            st.validate_move(&space, &link)?;
            st.push(space, link);
        }
        Ok(st)
    }
}

#[derive(Debug, Clone)]
pub struct MetricProposal {
    pub space: Metric,
    pub link: MetricEmbedding,
    pub annotations: Value,
    pub certificates: Vec<CertificateRecord>,
}

impl MetricProposal {
    pub fn new(space: Metric, link: MetricEmbedding) -> Self {
        MetricProposal { space, link, annotations: Value::Null, certificates: Vec::new() }
    }

    pub fn identity(state: &MetricState) -> Self {
        let s = state.last_space();
        MetricProposal::new(s.clone(), MetricEmbedding::identity(s))
    }

    /// Extends the last stage by the point realizing `kappa` over it.
    pub fn extension(state: &MetricState, kappa: &KatetovFunction, label: &str) -> Result<Self> {
        let last = state.last_space();
        let next = Arc::new(one_point_extension(&last, kappa, label)?);
        let link = MetricEmbedding::new(last.clone(), next.clone(), (0..last.len()).collect())?;
        Ok(MetricProposal::new(next, link))
    }
}

pub trait MetricStrategy: Send {
    fn name(&self) -> String;

    fn propose(&mut self, state: &MetricState) -> Result<MetricProposal>;
}

/// Positive rationals with denominator at most `q`, up to `max`, ascending.
pub fn katetov_grid(q: u64, max: &Q) -> Vec<Q> {
    let mut g = Vec::new();
    for r in 1..=q as i64 {
        let mut p = 1i64;
        loop {
            let v = rational::qf(p, r);
            if v > *max {
                break;
            }
            g.push(v);
            p += 1;
        }
    }
    g.sort();
    g.dedup();
    g
}

/// Upper end of the value grid over a stage: twice its diameter, at least 2.
pub fn value_cap(m: &FinMetricSpace) -> Q {
    rational::q(2) * m.diameter().max(rational::one())
}

/// Lexicographic stream of the Katětov functions over a base with values in a grid.
#[derive(Debug, Clone)]
pub struct KatetovStream {
    base: Metric,
    grid: Vec<Q>,
    stack: Vec<usize>,
    started: bool,
    done: bool,
}

impl KatetovStream {
    pub fn new(base: Metric, q: u64) -> Self {
        let grid = katetov_grid(q, &value_cap(&base));
        let done = base.is_empty();
        KatetovStream { base, grid, stack: Vec::new(), started: false, done }
    }

    fn fits(&self, point: usize, v: &Q) -> bool {
        self.stack.iter().enumerate().all(|(j, &s)| {
            let (w, d) = (&self.grid[s], self.base.d(point, j));
            (v - w).abs() <= *d && *d <= v + w
        })
    }

    /// Every unassigned point still has a compatible value.
    fn viable(&self) -> bool {
        (self.stack.len()..self.base.len()).all(|p| self.grid.iter().any(|v| self.fits(p, v)))
    }

    pub fn is_exhausted(&self) -> bool {
        self.done
    }
}

impl Iterator for KatetovStream {
    type Item = KatetovFunction;

    fn next(&mut self) -> Option<KatetovFunction> {
        if self.done {
            return None;
        }
        let n = self.base.len();
        let mut from = if self.started {
            match self.stack.pop() {
                Some(i) => i + 1,
                None => 0,
            }
        } else {
            self.started = true;
            0
        };
        loop {
            let depth = self.stack.len();
            let mut found = None;
            for i in from..self.grid.len() {
                if self.fits(depth, &self.grid[i]) {
                    self.stack.push(i);
                    if self.viable() {
                        found = Some(i);
                        break;
                    }
                    self.stack.pop();
                }
            }
            match found {
                Some(_) if self.stack.len() == n => {
                    let values = self.stack.iter().map(|&i| self.grid[i].clone()).collect();
                    return Some(KatetovFunction { values });
                }
                Some(_) => from = 0,
                None => match self.stack.pop() {
                    Some(j) => from = j + 1,
                    None => {
                        self.done = true;
                        return None;
                    }
                },
            }
        }
    }
}

/// Number of Katětov functions a stream over `base` would produce, stopping at `cap`.
pub fn katetov_count(base: &Metric, q: u64, cap: usize) -> (usize, bool) {
    let mut s = KatetovStream::new(base.clone(), q);
    let mut n = 0;
    while n < cap {
        if s.next().is_none() {
            return (n, false);
        }
        n += 1;
    }
    (n, s.next().is_some())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatetovChallenge {
    pub id: String,
    pub stage: usize,
    pub kappa: KatetovFunction,
}

impl KatetovChallenge {
    pub fn summary(&self) -> Value {
        json!({ "id": self.id, "stage": self.stage, "kappa": self.kappa.values.iter().map(rational::to_string).collect::<Vec<_>>() })
    }
}

#[derive(Debug, Clone)]
pub struct PendingKatetov {
    pub challenge: KatetovChallenge,
    pub enqueued_round: usize,
    pub queue_len: usize,
}

/// Dovetailed enumeration of Katětov challenges against every stage, fed
/// into a FIFO queue.
#[derive(Debug, Clone)]
pub struct KatetovQueue {
    pub q: u64,
    pub budget: usize,
    streams: Vec<(KatetovStream, usize)>,
    next_seq: usize,
    pub queue: VecDeque<PendingKatetov>,
}

impl KatetovQueue {
    pub fn new(q: u64, budget: usize) -> Self {
        KatetovQueue { q, budget, streams: Vec::new(), next_seq: 0, queue: VecDeque::new() }
    }

    fn enumerate(&mut self, state: &MetricState) -> Vec<KatetovChallenge> {
        while self.streams.len() < state.stages.len() {
            let m = self.streams.len();
            self.streams.push((KatetovStream::new(state.stages[m].space.clone(), self.q), 0));
        }
        let mut out = Vec::new();
        while out.len() < self.budget {
            let pick = (0..self.streams.len())
                .filter(|&m| !self.streams[m].0.is_exhausted())
                .min_by_key(|&m| (m + self.streams[m].1, m));
            let Some(m) = pick else { break };
            let (stream, cursor) = &mut self.streams[m];
            if let Some(kappa) = stream.next() {
                *cursor += 1;
                out.push(KatetovChallenge { id: format!("k{}", self.next_seq), stage: m, kappa });
                self.next_seq += 1;
            }
        }
        out
    }

    /// Enqueues this turn's new challenges and dequeues the oldest one.
    pub fn turn(&mut self, state: &MetricState) -> (Vec<KatetovChallenge>, Option<PendingKatetov>) {
        let round = state.round();
        let fresh = self.enumerate(state);
        for c in &fresh {
            let queue_len = self.queue.len() + 1;
            self.queue.push_back(PendingKatetov { challenge: c.clone(), enqueued_round: round, queue_len });
        }
        (fresh, self.queue.pop_front())
    }
}

/// Odd realizes the oldest pending Katětov challenge by a one-point extension.
pub struct OddUrysohn {
    book: KatetovQueue,
}

impl OddUrysohn {
    pub fn new(q: u64, budget: usize) -> Self {
        OddUrysohn { book: KatetovQueue::new(q, budget) }
    }
}

impl MetricStrategy for OddUrysohn {
    fn name(&self) -> String {
        "urysohn".into()
    }

    fn propose(&mut self, state: &MetricState) -> Result<MetricProposal> {
        let n = state.round();
        let (fresh, next) = self.book.turn(state);
        let mut p = match &next {
            None => MetricProposal::identity(state),
            Some(pk) => {
                let ch = &pk.challenge;
                let e = state.composite(ch.stage, n - 1);
                let kappa = ch.kappa.transport(&e);
                let p = MetricProposal::extension(state, &kappa, &format!("o{n}"))?;
                let point = p.space.len() - 1;
                let cert = CertificateRecord {
                    challenge: ch.id.clone(),
                    player: Player::Odd,
                    stage: n,
                    source: None,
                    matrix: None,
                    point: Some(point),
                };
                MetricProposal { certificates: vec![cert], ..p }
            }
        };
        p.annotations = json!({
            "enqueued": fresh.iter().map(KatetovChallenge::summary).collect::<Vec<_>>(),
            "dequeued": next.as_ref().map(|pk| pk.challenge.summary()),
            "latency": next.as_ref().map(|pk| (n - pk.enqueued_round) / 2),
            "queue": self.book.queue.len(),
        });
        Ok(p)
    }
}

/// Repeats the last stage.
pub struct MetricTrivial;

impl MetricStrategy for MetricTrivial {
    fn name(&self) -> String {
        "trivial".into()
    }

    fn propose(&mut self, state: &MetricState) -> Result<MetricProposal> {
        if state.stages.is_empty() {
            let p = Arc::new(FinMetricSpace::point("p0"));
            return Ok(MetricProposal::new(p.clone(), MetricEmbedding::from_empty(p)));
        }
        Ok(MetricProposal::identity(state))
    }
}

/// Eve plays one point, then passes.
pub struct PointEve;

impl MetricStrategy for PointEve {
    fn name(&self) -> String {
        "point".into()
    }

    fn propose(&mut self, state: &MetricState) -> Result<MetricProposal> {
        MetricTrivial.propose(state)
    }
}

/// Eve opens with one or two points and then adds a random point per move,
/// at distances `min_a r_a + d(a, x)` over a few anchors.
pub struct RandomMetricEve {
    rng: ChaCha8Rng,
}

impl RandomMetricEve {
    pub fn new(seed: u64) -> Self {
        RandomMetricEve { rng: ChaCha8Rng::seed_from_u64(seed) }
    }

    fn radius(&mut self) -> Q {
        rational::qf(self.rng.gen_range(1..=4), 2)
    }
}

impl MetricStrategy for RandomMetricEve {
    fn name(&self) -> String {
        "random".into()
    }

    fn propose(&mut self, state: &MetricState) -> Result<MetricProposal> {
        if state.stages.is_empty() {
            let m = if self.rng.gen_bool(0.5) {
                FinMetricSpace::point("p0")
            } else {
                let d = self.radius();
                FinMetricSpace::new(
                    vec!["p0".into(), "p1".into()],
                    vec![vec![Q::zero(), d.clone()], vec![d, Q::zero()]],
                )?
            };
            let m = Arc::new(m);
            return Ok(MetricProposal::new(m.clone(), MetricEmbedding::from_empty(m)));
        }
        let last = state.last_space();
        let n = last.len();
        let k = self.rng.gen_range(1..=n.min(3));
        let anchors: Vec<(usize, Q)> = (0..k).map(|_| (self.rng.gen_range(0..n), self.radius())).collect();
        let profile = |anchors: &[(usize, Q)]| KatetovFunction {
            values: (0..n).map(|x| anchors.iter().map(|(a, r)| r + last.d(*a, x)).min().expect("anchors")).collect(),
        };
        let mut kappa = profile(&anchors);
        if kappa.validate(&last).is_err() {
            kappa = profile(&anchors[..1]);
        }
        MetricProposal::extension(state, &kappa, &format!("e{}", state.round()))
    }
}

pub fn build_metric_eve(config: &GameConfig) -> Result<Box<dyn MetricStrategy>> {
    match config.eve.as_str() {
        "random" => Ok(Box::new(RandomMetricEve::new(config.seed))),
        "point" => Ok(Box::new(PointEve)),
        other => Err(Error::Rejected(format!("unknown metric Eve strategy {other:?}"))),
    }
}

pub fn build_metric_odd(config: &GameConfig) -> Result<Box<dyn MetricStrategy>> {
    match config.odd.as_str() {
        "urysohn" => Ok(Box::new(OddUrysohn::new(config.q, config.budget))),
        "trivial" => Ok(Box::new(MetricTrivial)),
        other => Err(Error::Rejected(format!("unknown metric Odd strategy {other:?}"))),
    }
}

pub fn record_metric_move(round: usize, p: &MetricProposal) -> MoveRecord {
    let link: LinkWire = p.link.wire();
    MoveRecord {
        by: Player::at_round(round),
        round,
        space: None,
        metric: Some(p.space.wire()),
        link,
        annotations: p.annotations.clone(),
    }
}

pub fn metric_step(state: &mut MetricState, s: &mut dyn MetricStrategy, t: &mut Transcript) -> Result<()> {
    let round = state.round();
    let p = s.propose(state)?;
    state.validate_move(&p.space, &p.link)?;
    t.moves.push(record_metric_move(round, &p));
    t.certificates.extend(p.certificates);
    state.push(p.space, p.link);
    Ok(())
}

pub fn play_metric(
    eve: &mut dyn MetricStrategy,
    odd: &mut dyn MetricStrategy,
    config: &GameConfig,
) -> Result<(Transcript, MetricState)> {
    config.check()?;
    if config.kind != GameKind::Metric {
        return Err(Error::Rejected("not a metric game configuration".into()));
    }
    let mut state = MetricState::new();
    let mut t = Transcript::new(config.clone());
    for round in 0..config.rounds {
        let s: &mut dyn MetricStrategy = if Player::at_round(round) == Player::Eve { &mut *eve } else { &mut *odd };
        let name = s.name();
        if let Err(e) = metric_step(&mut state, s, &mut t) {
            log::warn!("metric game aborted at round {round}: {e}");
            t.abort = Some(format!("round {round}, {name}: {e}"));
            break;
        }
    }
    Ok((t, state))
}

pub fn play_metric_config(config: &GameConfig) -> Result<(Transcript, MetricState)> {
    let mut eve = build_metric_eve(config)?;
    let mut odd = build_metric_odd(config)?;
    play_metric(eve.as_mut(), odd.as_mut(), config)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Coverage {
    /// Stages `0..=stages` are counted.
    pub stages: usize,
    pub realized: usize,
    pub total: usize,
    /// The count hit its cap, so `total` is a lower bound.
    pub capped: bool,
    #[serde(with = "rational::serde_q")]
    pub fraction: Q,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UrysohnReport {
    pub pass: bool,
    pub turns: usize,
    pub processed: usize,
    pub latencies: Vec<usize>,
    pub latency_bound_holds: bool,
    pub unprocessed: Vec<String>,
    pub coverage: Coverage,
    pub failures: Vec<String>,
}

const COVERAGE_CAP: usize = 100_000;

fn verify_realization(state: &MetricState, ch: &KatetovChallenge, point: Option<usize>, n: usize) -> std::result::Result<(), String> {
    let target = &state.stages[n].space;
    let p = point.ok_or("certificate names no point")?;
    if p >= target.len() {
        return Err(format!("point index {p} outside stage {n}"));
    }
    let e = state.composite(ch.stage, n);
    for (x, k) in ch.kappa.values.iter().enumerate() {
        let y = e.apply(x);
        if target.d(p, y) != k {
            let w = PairWitness {
                points: [target.labels()[p].clone(), target.labels()[y].clone()],
                source_distance: k.clone(),
                target_distance: target.d(p, y).clone(),
            };
            return Err(format!("realized point misses its profile: {w}"));
        }
    }
    Ok(())
}

/// Replays Odd's Katětov queue and checks every realization exactly.
pub fn check_urysohn_certificates(t: &Transcript, state: &MetricState) -> UrysohnReport {
    let mut book = KatetovQueue::new(t.config.q, t.config.budget);
    let mut r = UrysohnReport {
        pass: true,
        turns: 0,
        processed: 0,
        latencies: Vec::new(),
        latency_bound_holds: true,
        unprocessed: Vec::new(),
        coverage: Coverage { stages: t.config.coverage_stages, realized: 0, total: 0, capped: false, fraction: Q::zero() },
        failures: Vec::new(),
    };
    let certs: Vec<&CertificateRecord> = t.certificates.iter().filter(|c| c.player == Player::Odd).collect();
    let mut used = vec![false; certs.len()];
    for n in (1..state.stages.len()).step_by(2) {
        r.turns += 1;
        let (_, next) = book.turn(&state.prefix(n));
        let Some(pk) = next else { continue };
        let ch = &pk.challenge;
        let Some(idx) = certs.iter().position(|c| c.challenge == ch.id && c.stage == n) else {
            r.failures.push(format!("challenge {} (stage {}) was due at round {n} but not realized", ch.id, ch.stage));
            continue;
        };
        used[idx] = true;
        if let Err(e) = verify_realization(state, ch, certs[idx].point, n) {
            r.failures.push(format!("challenge {} at round {n}: {e}", ch.id));
            continue;
        }
        r.processed += 1;
        if ch.stage <= r.coverage.stages {
            r.coverage.realized += 1;
        }
        let latency = (n - pk.enqueued_round) / 2;
        if latency >= pk.queue_len {
            r.latency_bound_holds = false;
            r.failures.push(format!("challenge {} waited {latency} turns behind a queue of {}", ch.id, pk.queue_len));
        }
        r.latencies.push(latency);
    }
    for (c, u) in certs.iter().zip(&used) {
        if !u {
            r.failures.push(format!("certificate for {} at stage {} answers no due challenge", c.challenge, c.stage));
        }
    }
    r.unprocessed = book.queue.iter().map(|p| p.challenge.id.clone()).collect();
    for st in state.stages.iter().take(r.coverage.stages + 1) {
        let (n, capped) = katetov_count(&st.space, t.config.q, COVERAGE_CAP);
        r.coverage.total += n;
        r.coverage.capped |= capped;
    }
    if r.coverage.total > 0 {
        r.coverage.fraction = Q::new((r.coverage.realized as i64).into(), (r.coverage.total as i64).into());
    }
    r.pass = r.failures.is_empty();
    r
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{q, qf};

    #[test]
    fn grid_and_single_point_stream() {
        assert_eq!(katetov_grid(2, &q(2)), vec![qf(1, 2), q(1), qf(3, 2), q(2)]);
        let s = KatetovStream::new(Arc::new(FinMetricSpace::point("a")), 2);
        let vals: Vec<Q> = s.map(|k| k.values[0].clone()).collect();
        assert_eq!(vals, vec![qf(1, 2), q(1), qf(3, 2), q(2)]);
    }

    #[test]
    fn stream_matches_brute_force() {
        let m = Arc::new(
            FinMetricSpace::new(
                vec!["a".into(), "b".into(), "c".into()],
                vec![vec![q(0), q(1), qf(3, 2)], vec![q(1), q(0), q(1)], vec![qf(3, 2), q(1), q(0)]],
            )
            .unwrap(),
        );
        let grid = katetov_grid(2, &value_cap(&m));
        let mut brute = Vec::new();
        for a in &grid {
            for b in &grid {
                for c in &grid {
                    let k = KatetovFunction { values: vec![a.clone(), b.clone(), c.clone()] };
                    if k.validate(&m).is_ok() {
                        brute.push(k);
                    }
                }
            }
        }
        let got: Vec<KatetovFunction> = KatetovStream::new(m.clone(), 2).collect();
        assert_eq!(got, brute);
        assert_eq!(katetov_count(&m, 2, 10_000), (brute.len(), false));
    }

    #[test]
    fn point_eve_stage_zero_order() {
        let c = GameConfig { q: 2, ..GameConfig::metric("point", "urysohn", 20, 0) };
        let (t, st) = play_metric_config(&c).unwrap();
        let on_zero: Vec<Q> = t
            .moves
            .iter()
            .filter_map(|m| m.annotations.get("dequeued").filter(|d| !d.is_null()).cloned())
            .filter(|d| d["stage"] == 0)
            .map(|d| rational::parse(d["kappa"][0].as_str().unwrap()).unwrap())
            .collect();
        assert_eq!(on_zero, vec![qf(1, 2), q(1), qf(3, 2), q(2)]);
        let r = check_urysohn_certificates(&t, &st);
        assert!(r.pass, "{:?}", r.failures);
        assert_eq!(r.coverage.realized, 4);
        assert_eq!(r.coverage.total, 4);
        assert_eq!(r.coverage.fraction, q(1));
    }

    #[test]
    fn urysohn_vs_random_passes() {
        let c = GameConfig::metric("random", "urysohn", 12, 5);
        let (t, st) = play_metric_config(&c).unwrap();
        assert!(t.abort.is_none());
        let r = check_urysohn_certificates(&t, &st);
        assert!(r.pass, "{:?}", r.failures);
        assert_eq!(r.processed, 6);
        let again = MetricState::from_moves(&t.moves).unwrap();
        assert_eq!(again.stages.len(), 12);
    }

    #[test]
    fn trivial_odd_fails_with_zero_coverage() {
        let c = GameConfig::metric("random", "trivial", 8, 1);
        let (t, st) = play_metric_config(&c).unwrap();
        let r = check_urysohn_certificates(&t, &st);
        assert!(!r.pass);
        assert_eq!(r.coverage.realized, 0);
        assert!(r.coverage.fraction.is_zero());
    }

    #[test]
    fn corrupted_entry_names_pair() {
        let c = GameConfig::metric("random", "urysohn", 6, 2);
        let (mut t, _) = play_metric_config(&c).unwrap();
        let d = &mut t.moves[2].metric.as_mut().unwrap().dist;
        let v = &d[0][1] + qf(1, 100);
        d[0][1] = v.clone();
        d[1][0] = v;
        match MetricState::from_moves(&t.moves) {
            Err(Error::Rejected(msg)) => assert!(msg.contains("apart"), "{msg}"),
            Err(Error::TriangleViolation(w)) => assert!(w.d_xz > &w.d_xy + &w.d_yz),
            other => panic!("expected a witness, got {other:?}"),
        }
    }

    #[test]
    fn empty_queue_repeats_stage() {
        let mut st = MetricState::new();
        let p = Arc::new(FinMetricSpace::point("a"));
        st.push(p.clone(), MetricEmbedding::from_empty(p));
        let mut odd = OddUrysohn::new(1, 0);
        let m = odd.propose(&st).unwrap();
        assert_eq!(m.space.id(), st.last_space().id());
        assert!(m.certificates.is_empty());
    }
}
