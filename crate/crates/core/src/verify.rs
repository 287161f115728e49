//! Full replay of a transcript followed by every applicable certificate suite.

use serde::{Deserialize, Serialize};

use crate::certs::{check_certificates, check_mirror_certificates, check_universality, CertificateReport, UniversalityReport};
use crate::game::{GameKind, GameState, Transcript};
use crate::metric_game::{check_urysohn_certificates, MetricState, UrysohnReport};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMembership {
    pub class: String,
    pub inside: usize,
    pub total: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub pass: bool,
    pub kind: GameKind,
    pub rounds: usize,
    pub played: usize,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub abort: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub replay_error: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub odd: Option<CertificateReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eve: Option<CertificateReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub universality: Option<UniversalityReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub class: Option<ClassMembership>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub urysohn: Option<UrysohnReport>,
}

impl VerifyReport {
    /// Every failure message, prefixed by the suite it comes from.
    pub fn failures(&self) -> Vec<String> {
        let mut out = Vec::new();
        if let Some(a) = &self.abort {
            out.push(format!("game aborted: {a}"));
        }
        if let Some(e) = &self.replay_error {
            out.push(format!("replay: {e}"));
        }
        if self.played < self.rounds && self.abort.is_none() {
            out.push(format!("only {} of {} rounds recorded", self.played, self.rounds));
        }
        for (tag, r) in [("odd", &self.odd), ("eve", &self.eve)] {
            if let Some(r) = r {
                out.extend(r.failures.iter().map(|f| format!("{tag}: {f}")));
            }
        }
        if let Some(u) = &self.universality {
            out.extend(u.failures.iter().map(|f| format!("universality: {f}")));
        }
        if let Some(c) = &self.class {
            if c.inside != c.total {
                out.push(format!("class {}: {} of {} stages are members", c.class, c.inside, c.total));
            }
        }
        if let Some(u) = &self.urysohn {
            out.extend(u.failures.iter().map(|f| format!("urysohn: {f}")));
        }
        out
    }
}

pub fn verify_transcript(t: &Transcript) -> VerifyReport {
    let c = &t.config;
    let mut r = VerifyReport {
        pass: false,
        kind: c.kind,
        rounds: c.rounds,
        played: t.moves.len(),
        abort: t.abort.clone(),
        replay_error: None,
        odd: None,
        eve: None,
        universality: None,
        class: None,
        urysohn: None,
    };
    if c.kind == GameKind::Metric {
        match MetricState::from_moves(&t.moves) {
            Ok(st) => r.urysohn = Some(check_urysohn_certificates(t, &st)),
            Err(e) => r.replay_error = Some(e.to_string()),
        }
    } else {
        let replay = c.rule_class().and_then(|rc| GameState::from_moves(&t.moves, rc, c.max_dim));
        match replay {
            Ok(st) => {
                r.odd = Some(check_certificates(t, &st));
                if c.mirror {
                    r.eve = Some(check_mirror_certificates(t, &st));
                }
                if c.eve == "universality" {
                    match check_universality(t, &st) {
                        Ok(u) => r.universality = Some(u),
                        Err(e) => r.replay_error = Some(e.to_string()),
                    }
                }
                if let Some(rc) = &st.rule_class {
                    let inside = st.stages.iter().filter(|s| rc.contains(&s.space)).count();
                    r.class = Some(ClassMembership { class: rc.name().to_string(), inside, total: st.stages.len() });
                }
            }
            Err(e) => r.replay_error = Some(e.to_string()),
        }
    }
    r.pass = r.failures().is_empty();
    r
}
