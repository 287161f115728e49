//! Finite metric spaces with rational distances, free amalgamation and
//! Katětov one-point extensions.

use std::collections::BTreeSet;
use std::sync::Arc;

use num_traits::{One, Signed, Zero};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{Error, PairWitness, Result, TriangleWitness};
use crate::rational::{self, Q};

#[derive(Debug, Clone)]
pub struct FinMetricSpace {
    labels: Vec<String>,
    dist: Vec<Vec<Q>>,
    id: String,
}

impl PartialEq for FinMetricSpace {
    fn eq(&self, other: &Self) -> bool {
        self.id == other.id
    }
}

/// First triangle violation, scanning triples `i < j < k` in point order.
pub fn validate_metric(labels: &[String], dist: &[Vec<Q>]) -> Result<()> {
    let n = labels.len();
    if dist.len() != n || dist.iter().any(|r| r.len() != n) {
        return Err(Error::InvalidMetric(format!("distance matrix is not {n}x{n}")));
    }
    let uniq: BTreeSet<&String> = labels.iter().collect();
    if uniq.len() != n {
        return Err(Error::InvalidMetric("point labels are not distinct".into()));
    }
    for i in 0..n {
        if !dist[i][i].is_zero() {
            return Err(Error::InvalidMetric(format!("d({0},{0}) is not zero", labels[i])));
        }
        for j in 0..n {
            if dist[i][j] != dist[j][i] {
                return Err(Error::InvalidMetric(format!("d({},{}) is not symmetric", labels[i], labels[j])));
            }
            if i != j && !dist[i][j].is_positive() {
                return Err(Error::InvalidMetric(format!(
                    "distinct points {} and {} at distance {}",
                    labels[i],
                    labels[j],
                    rational::to_string(&dist[i][j])
                )));
            }
        }
    }
    for i in 0..n {
        for j in i + 1..n {
            for k in j + 1..n {
                // the three ways to pick the long side
                for (x, y, z) in [(i, j, k), (i, k, j), (j, i, k)] {
                    if dist[x][z] > &dist[x][y] + &dist[y][z] {
                        return Err(Error::TriangleViolation(TriangleWitness {
                            points: [labels[x].clone(), labels[y].clone(), labels[z].clone()],
                            d_xz: dist[x][z].clone(),
                            d_xy: dist[x][y].clone(),
                            d_yz: dist[y][z].clone(),
                        }));
                    }
                }
            }
        }
    }
    Ok(())
}

fn metric_id(labels: &[String], dist: &[Vec<Q>]) -> String {
    let mut h = Sha256::new();
    for l in labels {
        h.update(l.as_bytes());
        h.update(b"|");
    }
    for row in dist {
        for x in row {
            h.update(rational::to_string(x).as_bytes());
            h.update(b",");
        }
        h.update(b";");
    }
    hex::encode(&h.finalize()[..8])
}

impl FinMetricSpace {
    pub fn new(labels: Vec<String>, dist: Vec<Vec<Q>>) -> Result<Self> {
        validate_metric(&labels, &dist)?;
        let id = metric_id(&labels, &dist);
        Ok(FinMetricSpace { labels, dist, id })
    }

    pub(crate) fn new_trusted(labels: Vec<String>, dist: Vec<Vec<Q>>) -> Self {
        debug_assert!(validate_metric(&labels, &dist).is_ok());
        let id = metric_id(&labels, &dist);
        FinMetricSpace { labels, dist, id }
    }

    pub fn empty() -> Self {
        Self::new_trusted(Vec::new(), Vec::new())
    }

    pub fn point(label: &str) -> Self {
        Self::new_trusted(vec![label.to_string()], vec![vec![Q::zero()]])
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn id(&self) -> &str {
        &self.id
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn d(&self, i: usize, j: usize) -> &Q {
        &self.dist[i][j]
    }

    pub fn dist(&self) -> &[Vec<Q>] {
        &self.dist
    }

    pub fn diameter(&self) -> Q {
        self.dist.iter().flatten().max().cloned().unwrap_or_else(Q::zero)
    }

    pub fn wire(&self) -> MetricWire {
        MetricWire { id: Some(self.id.clone()), points: self.labels.clone(), dist: self.dist.clone() }
    }

    pub fn from_wire(w: &MetricWire) -> Result<Self> {
        let s = Self::new(w.points.clone(), w.dist.clone())?;
        if let Some(id) = &w.id {
            if *id != s.id {
                return Err(Error::Rejected(format!("metric id {id} does not match its content ({})", s.id)));
            }
        }
        Ok(s)
    }

    /// A label not used by this space, derived from `base`.
    pub fn fresh_label(&self, base: &str) -> String {
        let mut l = base.to_string();
        while self.labels.contains(&l) {
            l.push('\'');
        }
        l
    }
}

/// JSON form: `{ "points": [...], "dist": [["0", "1/2"], ...] }`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricWire {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub id: Option<String>,
    pub points: Vec<String>,
    #[serde(with = "rational::serde_qvecs")]
    pub dist: Vec<Vec<Q>>,
}

pub type Metric = Arc<FinMetricSpace>;

/// An injective point map, meant to preserve all distances.
#[derive(Debug, Clone)]
pub struct MetricEmbedding {
    source: Metric,
    target: Metric,
    assignment: Vec<usize>,
}

impl MetricEmbedding {
    /// Builds the map after checking that it is an isometric embedding.
    pub fn new(source: Metric, target: Metric, assignment: Vec<usize>) -> Result<Self> {
        let e = Self::unchecked(source, target, assignment)?;
        e.check_isometric()?;
        Ok(e)
    }

    pub fn unchecked(source: Metric, target: Metric, assignment: Vec<usize>) -> Result<Self> {
        if assignment.len() != source.len() {
            return Err(Error::DimensionMismatch(format!(
                "assignment of length {} for {} points",
                assignment.len(),
                source.len()
            )));
        }
        if let Some(&bad) = assignment.iter().find(|&&a| a >= target.len()) {
            return Err(Error::DimensionMismatch(format!("point index {bad} out of range")));
        }
        Ok(MetricEmbedding { source, target, assignment })
    }

    pub fn identity(m: Metric) -> Self {
        let a = (0..m.len()).collect();
        MetricEmbedding { source: m.clone(), target: m, assignment: a }
    }

    pub fn from_empty(target: Metric) -> Self {
        MetricEmbedding { source: Arc::new(FinMetricSpace::empty()), target, assignment: Vec::new() }
    }

    pub fn source(&self) -> &Metric {
        &self.source
    }

    pub fn target(&self) -> &Metric {
        &self.target
    }

    pub fn assignment(&self) -> &[usize] {
        &self.assignment
    }

    pub fn apply(&self, i: usize) -> usize {
        self.assignment[i]
    }

    pub fn check_isometric(&self) -> Result<()> {
        let n = self.source.len();
        for i in 0..n {
            for j in i + 1..n {
                let (a, b) = (self.assignment[i], self.assignment[j]);
                if self.source.d(i, j) != self.target.d(a, b) {
                    return Err(Error::DistortedPair(PairWitness {
                        points: [self.source.labels[i].clone(), self.source.labels[j].clone()],
                        source_distance: self.source.d(i, j).clone(),
                        target_distance: self.target.d(a, b).clone(),
                    }));
                }
            }
        }
        Ok(())
    }

    /// `self ∘ other`.
    pub fn compose(&self, other: &MetricEmbedding) -> Result<MetricEmbedding> {
        if other.target.id() != self.source.id() {
            return Err(Error::DimensionMismatch("embeddings do not compose".into()));
        }
        let a = other.assignment.iter().map(|&i| self.assignment[i]).collect();
        Ok(MetricEmbedding { source: other.source.clone(), target: self.target.clone(), assignment: a })
    }

    pub fn wire(&self) -> crate::game::LinkWire {
        crate::game::LinkWire {
            source: self.source.id().to_string(),
            target: self.target.id().to_string(),
            matrix: None,
            assignment: Some(self.assignment.clone()),
        }
    }
}

/// The free amalgam: `X` followed by the points of `Y` outside `g(Z)`, with
/// cross distances the shortest paths through `Z`.
pub fn free_amalgam(f: &MetricEmbedding, g: &MetricEmbedding) -> Result<(Metric, MetricEmbedding, MetricEmbedding)> {
    if f.source.id() != g.source.id() {
        return Err(Error::DimensionMismatch("amalgam legs have different sources".into()));
    }
    f.check_isometric()?;
    g.check_isometric()?;
    let (x, y) = (&f.target, &g.target);
    let nx = x.len();
    // Y points hit by g map to their partner in X.
    let mut y_to_w: Vec<Option<usize>> = vec![None; y.len()];
    for (z, &yi) in g.assignment.iter().enumerate() {
        y_to_w[yi] = Some(f.assignment[z]);
    }
    let mut labels = x.labels.clone();
    let mut fresh = Vec::new();
    for (yi, slot) in y_to_w.iter_mut().enumerate() {
        if slot.is_none() {
            let mut l = y.labels[yi].clone();
            while labels.contains(&l) {
                l.push('\'');
            }
            labels.push(l);
            *slot = Some(nx + fresh.len());
            fresh.push(yi);
        }
    }
    let n = labels.len();
    let empty_gap = x.diameter().max(y.diameter()).max(Q::one());
    let cross = |xi: usize, yi: usize| -> Q {
        if f.source.is_empty() {
            return empty_gap.clone();
        }
        (0..f.source.len())
            .map(|z| x.d(xi, f.assignment[z]) + y.d(g.assignment[z], yi))
            .min()
            .expect("nonempty")
    };
    let mut dist = vec![vec![Q::zero(); n]; n];
    for i in 0..nx {
        for j in 0..nx {
            dist[i][j] = x.d(i, j).clone();
        }
    }
    for (a, &ya) in fresh.iter().enumerate() {
        for (b, &yb) in fresh.iter().enumerate() {
            dist[nx + a][nx + b] = y.d(ya, yb).clone();
        }
        for i in 0..nx {
            let c = cross(i, ya);
            dist[i][nx + a] = c.clone();
            dist[nx + a][i] = c;
        }
    }
    let w = Arc::new(FinMetricSpace::new(labels, dist)?);
    let fx = MetricEmbedding::new(x.clone(), w.clone(), (0..nx).collect())?;
    let gy = MetricEmbedding::new(y.clone(), w.clone(), y_to_w.into_iter().map(Option::unwrap).collect())?;
    Ok((w, fx, gy))
}

/// Distances from a prospective new point to each point of `base`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KatetovFunction {
    #[serde(with = "rational::serde_qvec")]
    pub values: Vec<Q>,
}

impl KatetovFunction {
    /// Checks positivity and `|κx − κy| ≤ d(x,y) ≤ κx + κy`.
    pub fn validate(&self, base: &FinMetricSpace) -> Result<()> {
        let k = &self.values;
        if k.len() != base.len() {
            return Err(Error::InvalidKatetov(format!("{} values for {} points", k.len(), base.len())));
        }
        let l = base.labels();
        let s = rational::to_string;
        for (i, v) in k.iter().enumerate() {
            if !v.is_positive() {
                return Err(Error::InvalidKatetov(format!("value {} at {} is not positive", s(v), l[i])));
            }
        }
        for i in 0..k.len() {
            for j in i + 1..k.len() {
                let d = base.d(i, j);
                if (&k[i] - &k[j]).abs() > *d {
                    return Err(Error::InvalidKatetov(format!(
                        "|{} - {}| > d({},{}) = {}",
                        s(&k[i]),
                        s(&k[j]),
                        l[i],
                        l[j],
                        s(d)
                    )));
                }
                if &k[i] + &k[j] < *d {
                    return Err(Error::InvalidKatetov(format!(
                        "{} + {} < d({},{}) = {}",
                        s(&k[i]),
                        s(&k[j]),
                        l[i],
                        l[j],
                        s(d)
                    )));
                }
            }
        }
        Ok(())
    }

    /// `κ'(y) = min_x κ(x) + d(e x, y)`, the free transport along `e`.
    pub fn transport(&self, e: &MetricEmbedding) -> KatetovFunction {
        let t = e.target();
        let values = (0..t.len())
            .map(|y| {
                (0..self.values.len())
                    .map(|x| &self.values[x] + t.d(e.apply(x), y))
                    .min()
                    .expect("nonempty base")
            })
            .collect();
        KatetovFunction { values }
    }
}

/// `m` plus one new point at distances `κ`.
pub fn one_point_extension(m: &FinMetricSpace, kappa: &KatetovFunction, label: &str) -> Result<FinMetricSpace> {
    kappa.validate(m)?;
    let n = m.len();
    let mut labels = m.labels.clone();
    labels.push(m.fresh_label(label));
    let mut dist: Vec<Vec<Q>> = m.dist.clone();
    for (row, k) in dist.iter_mut().zip(&kappa.values) {
        row.push(k.clone());
    }
    let mut last = kappa.values.clone();
    last.push(Q::zero());
    dist.push(last);
    let s = FinMetricSpace::new_trusted(labels, dist);
    debug_assert_eq!(s.len(), n + 1);
    Ok(s)
}
