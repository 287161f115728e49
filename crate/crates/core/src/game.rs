//! The alternating extension game over polyhedral normed spaces.
//!
//! Stage `n` is the space played at round `n` together with an isometric
//! link from stage `n − 1` (from the zero space at round 0). Eve moves at
//! even rounds and Odd at odd rounds.

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::amalgam::{class_by_name, SpaceClass};
use crate::error::{Error, Result};
use crate::maps::{LinearMap, MapWire, Space};
use crate::matrix::Matrix;
use crate::metric::MetricWire;
use crate::space::{PolyNormedSpace, SpaceWire};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Player {
    Eve,
    Odd,
}

impl Player {
    pub fn at_round(round: usize) -> Player {
        if round % 2 == 0 {
            Player::Eve
        } else {
            Player::Odd
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GameKind {
    Normed,
    Metric,
    NormedRestricted,
}

impl std::str::FromStr for GameKind {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "normed" => Ok(GameKind::Normed),
            "metric" => Ok(GameKind::Metric),
            "normed-restricted" => Ok(GameKind::NormedRestricted),
            _ => Err(Error::Parse(format!("unknown game kind {s:?}"))),
        }
    }
}

/// One step of a target chain: a space and its link from the previous step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainStep {
    pub space: SpaceWire,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub link: Option<Matrix>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GameConfig {
    pub kind: GameKind,
    pub rounds: usize,
    pub seed: u64,
    pub eve: String,
    pub odd: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<String>,
    /// Catalog dimension cap.
    pub d: usize,
    /// Catalog denominator cap.
    pub q: u64,
    /// New challenges enqueued per Odd turn.
    pub budget: usize,
    pub max_dim: usize,
    #[serde(default)]
    pub mirror: bool,
    /// Stages counted by the metric coverage report.
    #[serde(default)]
    pub coverage_stages: usize,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub script: Vec<SpaceWire>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub target_chain: Vec<ChainStep>,
}

impl GameConfig {
    pub fn normed(eve: &str, odd: &str, rounds: usize, seed: u64) -> Self {
        GameConfig {
            kind: GameKind::Normed,
            rounds,
            seed,
            eve: eve.into(),
            odd: odd.into(),
            class: None,
            d: 2,
            q: 4,
            budget: 2,
            max_dim: 64,
            mirror: false,
            coverage_stages: 0,
            script: Vec::new(),
            target_chain: Vec::new(),
        }
    }

    pub fn restricted(eve: &str, odd: &str, class: &str, rounds: usize, seed: u64) -> Self {
        GameConfig { kind: GameKind::NormedRestricted, class: Some(class.into()), ..Self::normed(eve, odd, rounds, seed) }
    }

    pub fn metric(eve: &str, odd: &str, rounds: usize, seed: u64) -> Self {
        GameConfig { kind: GameKind::Metric, ..Self::normed(eve, odd, rounds, seed) }
    }

    pub fn check(&self) -> Result<()> {
        if self.rounds == 0 {
            return Err(Error::Rejected("a game needs at least one round".into()));
        }
        if self.q == 0 {
            return Err(Error::Rejected("denominator cap must be positive".into()));
        }
        if self.kind == GameKind::NormedRestricted && self.rule_class()?.is_none() {
            return Err(Error::Rejected("restricted games need a class".into()));
        }
        Ok(())
    }

    pub fn rule_class(&self) -> Result<Option<Arc<dyn SpaceClass>>> {
        match (&self.class, self.kind) {
            (Some(c), GameKind::NormedRestricted) => {
                class_by_name(c).map(Some).ok_or_else(|| Error::Rejected(format!("unknown class {c:?}")))
            }
            _ => Ok(None),
        }
    }
}

/// A link on the wire: a matrix for normed games, a point assignment for metric ones.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinkWire {
    pub source: String,
    pub target: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Matrix>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub assignment: Option<Vec<usize>>,
}

impl From<MapWire> for LinkWire {
    fn from(m: MapWire) -> Self {
        LinkWire { source: m.source, target: m.target, matrix: Some(m.matrix), assignment: None }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MoveRecord {
    pub by: Player,
    pub round: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub space: Option<SpaceWire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub metric: Option<MetricWire>,
    pub link: LinkWire,
    #[serde(default)]
    pub annotations: Value,
}

/// A strategy's exact answer to a challenge, as recorded in the transcript.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateRecord {
    pub challenge: String,
    pub player: Player,
    /// The stage the certificate lands in.
    pub stage: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<SpaceWire>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub matrix: Option<Matrix>,
    /// Metric certificates: index of the realized point in the stage.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub point: Option<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub config: GameConfig,
    pub moves: Vec<MoveRecord>,
    pub certificates: Vec<CertificateRecord>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort: Option<String>,
}

impl Transcript {
    pub fn new(config: GameConfig) -> Self {
        Transcript { config, moves: Vec::new(), certificates: Vec::new(), abort: None }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("transcript serializes")
    }

    pub fn from_json(s: &str) -> Result<Self> {
        serde_json::from_str(s).map_err(|e| Error::Parse(e.to_string()))
    }
}

#[derive(Debug, Clone)]
pub struct Stage {
    pub space: Space,
    pub link: LinearMap,
    pub by: Player,
    pub round: usize,
}

#[derive(Debug, Clone)]
pub struct GameState {
    pub stages: Vec<Stage>,
    pub rule_class: Option<Arc<dyn SpaceClass>>,
    pub max_dim: usize,
}

impl GameState {
    pub fn new(rule_class: Option<Arc<dyn SpaceClass>>, max_dim: usize) -> Self {
        GameState { stages: Vec::new(), rule_class, max_dim }
    }

    /// The round about to be played.
    pub fn round(&self) -> usize {
        self.stages.len()
    }

    pub fn last_space(&self) -> Space {
        match self.stages.last() {
            Some(s) => s.space.clone(),
            None => Arc::new(PolyNormedSpace::zero()),
        }
    }

    /// The composite link from stage `m` to stage `n`, `m ≤ n`.
    pub fn composite(&self, m: usize, n: usize) -> LinearMap {
        assert!(m <= n && n < self.stages.len(), "composite link {m} -> {n} out of range");
        let mut acc = LinearMap::identity(self.stages[m].space.clone());
        for k in m + 1..=n {
            acc = crate::maps::compose(&self.stages[k].link, &acc).expect("chain links compose");
        }
        acc
    }

    /// The game seen from round `k` on: stage `k` becomes the first stage.
    pub fn shifted(&self, k: usize) -> GameState {
        let mut stages: Vec<Stage> = self.stages.iter().skip(k).cloned().collect();
        for (i, s) in stages.iter_mut().enumerate() {
            s.round = i;
            s.by = Player::at_round(i);
        }
        if let Some(first) = stages.first_mut() {
            first.link = LinearMap::from_zero(first.space.clone());
        }
        GameState { stages, rule_class: self.rule_class.clone(), max_dim: self.max_dim }
    }

    /// Accepts iff the link is an exact isometric embedding from the last
    /// stage and, in a restricted game, the space belongs to the class.
    pub fn validate_move(&self, space: &Space, link: &LinearMap) -> Result<()> {
        let prev = self.last_space();
        if link.source().id() != prev.id() || link.target().id() != space.id() {
            return Err(Error::Rejected("link does not run from the last stage to the new space".into()));
        }
        link.require_isometric()?;
        if space.dim() > self.max_dim {
            return Err(Error::DimensionCap { cap: self.max_dim, dim: space.dim() });
        }
        if let Some(c) = &self.rule_class {
            if !c.contains(space) {
                return Err(Error::ClassViolation {
                    class: c.name().into(),
                    detail: format!(
                        "ball has {} facets, not {} independent opposite pairs",
                        space.facets().len(),
                        2 * space.dim()
                    ),
                });
            }
        }
        Ok(())
    }

    pub fn push(&mut self, space: Space, link: LinearMap) {
        let round = self.round();
        self.stages.push(Stage { space, link, by: Player::at_round(round), round });
    }

    /// Rebuilds and revalidates a state from transcript moves.
    pub fn from_moves(moves: &[MoveRecord], rule_class: Option<Arc<dyn SpaceClass>>, max_dim: usize) -> Result<Self> {
        let mut st = GameState::new(rule_class, max_dim);
        for (i, mv) in moves.iter().enumerate() {
            if mv.round != i || mv.by != Player::at_round(i) {
                return Err(Error::Rejected(format!("move {i} is out of turn")));
            }
            let sw = mv.space.as_ref().ok_or_else(|| Error::Parse(format!("move {i} has no space")))?;
            let space = Arc::new(PolyNormedSpace::from_wire(sw)?);
            let matrix = mv.link.matrix.clone().ok_or_else(|| Error::Parse(format!("move {i} has no link matrix")))?;
            let wire = MapWire { source: mv.link.source.clone(), target: mv.link.target.clone(), matrix };
            let link = wire.resolve(st.last_space(), space.clone())?;
            st.validate_move(&space, &link).map_err(|e| Error::Rejected(format!("round {i}: {e}")))?;
            st.push(space, link);
        }
        Ok(st)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StrategyKind {
    /// Depends only on the round and the last stage.
    Markov,
    General,
}

/// A move a strategy wants to make, with annotations and any certificates.
#[derive(Debug, Clone)]
pub struct Proposal {
    pub space: Space,
    pub link: LinearMap,
    pub annotations: Value,
    pub certificates: Vec<CertificateRecord>,
}

impl Proposal {
    pub fn new(space: Space, link: LinearMap) -> Self {
        Proposal { space, link, annotations: Value::Null, certificates: Vec::new() }
    }

    /// Repeats the last stage with the identity link.
    pub fn identity(state: &GameState) -> Self {
        let s = state.last_space();
        Proposal::new(s.clone(), LinearMap::identity(s))
    }
}

pub trait Strategy: Send {
    fn name(&self) -> String;

    fn kind(&self) -> StrategyKind;

    fn propose(&mut self, state: &GameState) -> Result<Proposal>;
}

pub fn record_move(round: usize, p: &Proposal) -> MoveRecord {
    MoveRecord {
        by: Player::at_round(round),
        round,
        space: Some(p.space.wire()),
        metric: None,
        link: p.link.wire().into(),
        annotations: p.annotations.clone(),
    }
}

/// Plays one validated move; on failure the state is left untouched.
pub fn step(state: &mut GameState, strategy: &mut dyn Strategy, transcript: &mut Transcript) -> Result<()> {
    let round = state.round();
    let p = strategy.propose(state)?;
    state.validate_move(&p.space, &p.link)?;
    transcript.moves.push(record_move(round, &p));
    transcript.certificates.extend(p.certificates);
    state.push(p.space, p.link);
    Ok(())
}

/// Alternates Eve and Odd for `config.rounds` rounds. A failing strategy or
/// an invalid move ends the game early with `abort` set.
pub fn play(eve: &mut dyn Strategy, odd: &mut dyn Strategy, config: &GameConfig) -> Result<(Transcript, GameState)> {
    config.check()?;
    let mut state = GameState::new(config.rule_class()?, config.max_dim);
    let mut t = Transcript::new(config.clone());
    for round in 0..config.rounds {
        let who = Player::at_round(round);
        let s: &mut dyn Strategy = if who == Player::Eve { &mut *eve } else { &mut *odd };
        let name = s.name();
        if let Err(e) = step(&mut state, s, &mut t) {
            log::warn!("game aborted at round {round}: {e}");
            t.abort = Some(format!("round {round}, {name}: {e}"));
            break;
        }
    }
    Ok((t, state))
}

/// Eve's mirror of an Odd strategy: a fixed first move, then the strategy
/// applied to the game with the first stage dropped.
pub struct Mirrored {
    pub inner: Box<dyn Strategy>,
    pub seed: Space,
}

impl Strategy for Mirrored {
    fn name(&self) -> String {
        format!("mirror({})", self.inner.name())
    }

    fn kind(&self) -> StrategyKind {
        self.inner.kind()
    }

    fn propose(&mut self, state: &GameState) -> Result<Proposal> {
        if state.round() == 0 {
            return Ok(Proposal::new(self.seed.clone(), LinearMap::from_zero(self.seed.clone())));
        }
        let shifted = state.shifted(1);
        let mut p = self.inner.propose(&shifted)?;
        // Stage 1 sits behind a zero link in the shifted view; re-anchor on the real last stage.
        let link = LinearMap::new(state.last_space(), p.space.clone(), p.link.matrix().clone())?;
        p.link = link;
        for c in &mut p.certificates {
            c.player = Player::Eve;
            c.stage += 1;
        }
        Ok(p)
    }
}
