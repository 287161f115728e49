//! Exact re-verification of the certificates recorded in a normed transcript.


use num_traits::Zero;
use serde::{Deserialize, Serialize};

use crate::catalog::{Challenge, ChallengeKind, ChallengeQueue};
use crate::error::Result;
use crate::game::{CertificateRecord, GameState, Player, Transcript};
use crate::maps::{compose, op_distance, LinearMap};
use crate::rational::{self, pow2_neg, Q};
use crate::space::PolyNormedSpace;
use crate::strategies::{catalog_params, chain_from_steps, default_target_chain};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CertificateReport {
    pub player: Player,
    pub pass: bool,
    pub turns: usize,
    pub processed: usize,
    pub exact: usize,
    pub approx: usize,
    /// Odd turns between enqueue and answer, per processed challenge.
    pub latencies: Vec<usize>,
    pub latency_bound_holds: bool,
    pub unprocessed: Vec<String>,
    #[serde(with = "rational::serde_q")]
    pub tolerance_sum: Q,
    pub failures: Vec<String>,
}

fn prefix(state: &GameState, len: usize) -> GameState {
    GameState { stages: state.stages[..len].to_vec(), rule_class: state.rule_class.clone(), max_dim: state.max_dim }
}

fn verify_one(state: &GameState, ch: &Challenge, cert: &CertificateRecord, n: usize) -> std::result::Result<(), String> {
    let expected = match ch.kind {
        ChallengeKind::ExactExtension => ch.b.clone().expect("exact"),
        ChallengeKind::ApproxCorrection => ch.a.clone(),
    };
    let src = cert.source.as_ref().ok_or("certificate lacks its source space")?;
    let src = PolyNormedSpace::from_wire(src).map_err(|e| e.to_string())?;
    if src.id() != expected.id() {
        return Err(format!("certificate source {} is not the challenge space {}", src.id(), expected.id()));
    }
    let m = cert.matrix.clone().ok_or("certificate lacks its matrix")?;
    let m = m.with_cols(expected.dim()).map_err(|e| e.to_string())?;
    let v = LinearMap::new(expected, state.stages[n].space.clone(), m).map_err(|e| e.to_string())?;
    v.is_isometric_embedding().map_err(|w| format!("certificate map is not isometric: {w}"))?;
    let target = compose(&state.composite(ch.stage, n), &ch.u).map_err(|e| e.to_string())?;
    match ch.kind {
        ChallengeKind::ExactExtension => {
            let lhs = compose(&v, ch.incl.as_ref().expect("exact")).map_err(|e| e.to_string())?;
            if let Some((r, c)) = lhs.matrix().first_difference(target.matrix()) {
                return Err(format!(
                    "v∘incl differs from link∘u at ({r}, {c}): {} vs {}",
                    rational::to_string(&lhs.matrix()[(r, c)]),
                    rational::to_string(&target.matrix()[(r, c)])
                ));
            }
        }
        ChallengeKind::ApproxCorrection => {
            let tol = ch.tolerance.as_ref().expect("approx");
            let d = op_distance(&v, &target).map_err(|e| e.to_string())?;
            if d > *tol {
                return Err(format!(
                    "distance {} to link∘u exceeds tolerance {}",
                    rational::to_string(&d),
                    rational::to_string(tol)
                ));
            }
        }
    }
    Ok(())
}

/// Replays the challenge queue over the stages of `state` (Odd's turns are
/// the odd stages) and checks that each dequeued challenge was answered.
pub fn check_side(
    state: &GameState,
    certs: &[CertificateRecord],
    params: crate::catalog::CatalogParams,
    player: Player,
) -> CertificateReport {
    let mut book = ChallengeQueue::new(params);
    let mut r = CertificateReport {
        player,
        pass: true,
        turns: 0,
        processed: 0,
        exact: 0,
        approx: 0,
        latencies: Vec::new(),
        latency_bound_holds: true,
        unprocessed: Vec::new(),
        tolerance_sum: Q::zero(),
        failures: Vec::new(),
    };
    let mut used = vec![false; certs.len()];
    for n in (1..state.stages.len()).step_by(2) {
        r.turns += 1;
        let (_, next) = book.turn(&prefix(state, n));
        let Some(p) = next else { continue };
        let ch = &p.challenge;
        let found = certs.iter().enumerate().find(|(_, c)| c.challenge == ch.id && c.stage == n);
        let Some((idx, cert)) = found else {
            r.failures.push(format!(
                "challenge {} (stage {}, enqueued at round {}) was due at round {n} but not answered",
                ch.id, ch.stage, p.enqueued_round
            ));
            continue;
        };
        used[idx] = true;
        if let Err(e) = verify_one(state, ch, cert, n) {
            r.failures.push(format!("challenge {} at round {n}: {e}", ch.id));
            continue;
        }
        r.processed += 1;
        let latency = (n - p.enqueued_round) / 2;
        if latency >= p.queue_len {
            r.latency_bound_holds = false;
            r.failures.push(format!("challenge {} waited {latency} turns behind a queue of {}", ch.id, p.queue_len));
        }
        r.latencies.push(latency);
        match ch.kind {
            ChallengeKind::ExactExtension => r.exact += 1,
            ChallengeKind::ApproxCorrection => {
                r.approx += 1;
                let tol = ch.tolerance.clone().expect("approx");
                if tol != pow2_neg(r.approx as u32) {
                    r.failures.push(format!(
                        "approximate challenge {} has tolerance {}, schedule says 2^-{}",
                        ch.id,
                        rational::to_string(&tol),
                        r.approx
                    ));
                }
                r.tolerance_sum += tol;
            }
        }
    }
    for (c, u) in certs.iter().zip(&used) {
        if !u {
            r.failures.push(format!("certificate for {} at stage {} answers no due challenge", c.challenge, c.stage));
        }
    }
    r.unprocessed = book.queue.iter().map(|p| p.challenge.id.clone()).collect();
    if r.tolerance_sum >= rational::q(2) {
        r.failures.push("tolerance sum is not below 2".into());
    }
    r.pass = r.failures.is_empty();
    r
}

/// Odd's suite over the whole transcript.
pub fn check_certificates(t: &Transcript, state: &GameState) -> CertificateReport {
    let certs: Vec<CertificateRecord> = t.certificates.iter().filter(|c| c.player == Player::Odd).cloned().collect();
    check_side(state, &certs, catalog_params(&t.config), Player::Odd)
}

/// Eve's suite in a mirror game: the same checks on the game shifted by one round.
pub fn check_mirror_certificates(t: &Transcript, state: &GameState) -> CertificateReport {
    let certs: Vec<CertificateRecord> = t
        .certificates
        .iter()
        .filter(|c| c.player == Player::Eve && c.stage >= 1)
        .map(|c| CertificateRecord { stage: c.stage - 1, ..c.clone() })
        .collect();
    check_side(&state.shifted(1), &certs, catalog_params(&t.config), Player::Eve)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UniversalityReport {
    pub pass: bool,
    /// Chain indices `k` with a verified embedding of `X_k` at round `2k`.
    pub embedded: Vec<usize>,
    pub failures: Vec<String>,
}

/// Checks Eve's recorded embeddings `e_k: X_k → E_{2k}` and their coherence.
pub fn check_universality(t: &Transcript, state: &GameState) -> Result<UniversalityReport> {
    let steps = if t.config.target_chain.is_empty() { default_target_chain() } else { t.config.target_chain.clone() };
    let chain = chain_from_steps(&steps)?;
    let mut rep = UniversalityReport { pass: true, embedded: Vec::new(), failures: Vec::new() };
    let mut prev: Option<LinearMap> = None;
    for (k, (xk, step)) in chain.iter().enumerate() {
        let stage = 2 * k;
        if stage >= state.stages.len() {
            break;
        }
        let id = format!("u{k}");
        let Some(cert) = t.certificates.iter().find(|c| c.player == Player::Eve && c.challenge == id) else {
            rep.failures.push(format!("no embedding recorded for X_{k}"));
            break;
        };
        if cert.stage != stage {
            rep.failures.push(format!("X_{k} recorded at round {} instead of {stage}", cert.stage));
            break;
        }
        let check = || -> std::result::Result<LinearMap, String> {
            let m = cert.matrix.clone().ok_or("missing matrix")?.with_cols(xk.dim()).map_err(|e| e.to_string())?;
            let e = LinearMap::new(xk.clone(), state.stages[stage].space.clone(), m).map_err(|e| e.to_string())?;
            e.is_isometric_embedding().map_err(|w| format!("embedding of X_{k} is not isometric: {w}"))?;
            if let (Some(p), Some(s)) = (&prev, step) {
                let lhs = compose(&e, s).map_err(|e| e.to_string())?;
                let rhs = compose(&state.composite(stage - 2, stage), p).map_err(|e| e.to_string())?;
                if let Some((r, c)) = lhs.matrix().first_difference(rhs.matrix()) {
                    return Err(format!("embeddings of X_{} and X_{k} disagree at ({r}, {c})", k - 1));
                }
            }
            Ok(e)
        };
        match check() {
            Ok(e) => {
                rep.embedded.push(k);
                prev = Some(e);
            }
            Err(msg) => {
                rep.failures.push(msg);
                break;
            }
        }
    }
    rep.pass = rep.failures.is_empty();
    Ok(rep)
}

/// Membership of every stage in the game's class, if any.
pub fn class_report(state: &GameState) -> Option<(usize, usize)> {
    let c = state.rule_class.as_ref()?;
    let total = state.stages.len();
    let inside = state.stages.iter().filter(|s| c.contains(&s.space)).count();
    Some((inside, total))
}


#[cfg(test)]
mod tests {
    use super::*;
    use crate::game::GameConfig;
    use crate::strategies::play_config;

    #[test]
    fn gurarii_passes_trivial_fails() {
        let c = GameConfig::normed("random", "gurarii", 6, 2);
        let (t, st) = play_config(&c).unwrap();
        let r = check_certificates(&t, &st);
        assert!(r.pass, "{:?}", r.failures);
        assert_eq!(r.processed, 3);

        let c = GameConfig::normed("random", "trivial", 4, 2);
        let (t, st) = play_config(&c).unwrap();
        let r = check_certificates(&t, &st);
        assert!(!r.pass);
        assert!(!r.unprocessed.is_empty());
    }

    #[test]
    fn corrupted_certificate_fails() {
        let c = GameConfig::normed("random", "gurarii", 2, 4);
        let (mut t, st) = play_config(&c).unwrap();
        let m = t.certificates[0].matrix.as_mut().unwrap();
        m[(0, 0)] += rational::qf(1, 7);
        let r = check_certificates(&t, &st);
        assert!(!r.pass);
        assert!(r.failures[0].contains("c0"), "{:?}", r.failures);
    }

    #[test]
    fn universality_records() {
        let c = GameConfig::normed("universality", "gurarii", 6, 0);
        let (t, st) = play_config(&c).unwrap();
        assert!(t.abort.is_none(), "{:?}", t.abort);
        let u = check_universality(&t, &st).unwrap();
        assert!(u.pass, "{:?}", u.failures);
        assert_eq!(u.embedded, vec![0, 1, 2]);
        assert!(check_certificates(&t, &st).pass);
    }

    #[test]
    fn mirror_suites() {
        let c = GameConfig { mirror: true, ..GameConfig::normed("mirror", "gurarii", 6, 0) };
        let (t, st) = play_config(&c).unwrap();
        assert!(t.abort.is_none(), "{:?}", t.abort);
        assert!(check_certificates(&t, &st).pass);
        let e = check_mirror_certificates(&t, &st);
        assert!(e.pass, "{:?}", e.failures);
        assert!(e.processed >= 2);
    }

    #[test]
    fn mirror_single_round_is_vacuous() {
        let c = GameConfig { mirror: true, ..GameConfig::normed("mirror", "gurarii", 1, 0) };
        let (t, st) = play_config(&c).unwrap();
        assert_eq!(t.moves.len(), 1);
        assert!(check_certificates(&t, &st).pass);
        assert!(check_mirror_certificates(&t, &st).pass);
    }

    #[test]
    fn mirror_of_trivial_fails_odd_side() {
        let c = GameConfig { mirror: true, ..GameConfig::normed("mirror", "trivial", 6, 0) };
        let (t, st) = play_config(&c).unwrap();
        assert!(!check_certificates(&t, &st).pass);
    }

    #[test]
    fn restricted_stages_in_class() {
        let c = GameConfig::restricted("linf", "restricted", "linf", 6, 3);
        let (t, st) = play_config(&c).unwrap();
        assert!(t.abort.is_none(), "{:?}", t.abort);
        assert_eq!(class_report(&st), Some((6, 6)));
        assert!(check_certificates(&t, &st).pass);
    }
}
