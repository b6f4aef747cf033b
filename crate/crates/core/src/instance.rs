//! Problem instances: a complete metric graph over monitored vertices plus an
//! optional recharging depot, with per-vertex latency constraints and weights.

use std::collections::BTreeMap;
use std::fmt;
use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::config::PlannerConfig;
use crate::error::{Error, Result};
use crate::subroutines::tsp::tsp_tour;
use crate::{approx_eq, leq, EPS};

/// Current on-disk schema version.
pub const SCHEMA_VERSION: u32 = 1;

/// Dense symmetric matrix of travel times.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    pub fn from_rows(rows: Vec<Vec<f64>>) -> Result<Self> {
        let n = rows.len();
        let mut data = Vec::with_capacity(n * n);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n {
                return Err(Error::Malformed(format!(
                    "distance row {i} has {} entries, expected {n}",
                    row.len()
                )));
            }
            data.extend(row);
        }
        Ok(Self { n, data })
    }

    /// Builds a matrix from a function of the node pair.
    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(n * n);
        for u in 0..n {
            for v in 0..n {
                data.push(f(u, v));
            }
        }
        Self { n, data }
    }

    /// Euclidean distances between planar points.
    pub fn euclidean(points: &[(f64, f64)]) -> Self {
        Self::from_fn(points.len(), |i, j| {
            let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
            (dx * dx + dy * dy).sqrt()
        })
    }

    #[inline]
    pub fn get(&self, u: usize, v: usize) -> f64 {
        self.data[u * self.n + v]
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn rows(&self) -> Vec<Vec<f64>> {
        self.data.chunks(self.n.max(1)).map(<[f64]>::to_vec).take(self.n).collect()
    }

    /// All-pairs shortest paths over the matrix itself (Floyd–Warshall).
    ///
    /// A metric matrix is a fixed point.
    pub fn closure(&self) -> DistanceMatrix {
        let n = self.n;
        let mut d = self.data.clone();
        // Rounding can leave one-ulp shortcuts after a single sweep; repeat
        // until nothing moves so the result is an exact fixed point.
        loop {
            let mut changed = false;
            for k in 0..n {
                for i in 0..n {
                    let dik = d[i * n + k];
                    if dik.is_infinite() {
                        continue;
                    }
                    for j in 0..n {
                        let via = dik + d[k * n + j];
                        if via < d[i * n + j] {
                            d[i * n + j] = via;
                            changed = true;
                        }
                    }
                }
            }
            if !changed {
                return DistanceMatrix { n, data: d };
            }
        }
    }
}

/// Undirected weighted edge of a sparse input graph.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "(usize, usize, f64)", into = "(usize, usize, f64)")]
pub struct Edge {
    pub u: usize,
    pub v: usize,
    pub length: f64,
}

impl From<(usize, usize, f64)> for Edge {
    fn from((u, v, length): (usize, usize, f64)) -> Self {
        Edge { u, v, length }
    }
}

impl From<Edge> for (usize, usize, f64) {
    fn from(e: Edge) -> Self {
        (e.u, e.v, e.length)
    }
}

/// Shortest-path closure of an undirected graph on `n` vertices.
pub fn metric_closure(n: usize, edges: &[Edge]) -> Result<DistanceMatrix> {
    let mut m = DistanceMatrix::from_fn(n, |u, v| if u == v { 0.0 } else { f64::INFINITY });
    for e in edges {
        if e.u >= n || e.v >= n {
            return Err(Error::Malformed(format!("edge ({}, {}) out of range", e.u, e.v)));
        }
        if e.length.is_nan() || e.length < 0.0 {
            return Err(Error::Malformed(format!(
                "edge ({}, {}) has negative or NaN length {}",
                e.u, e.v, e.length
            )));
        }
        let idx = e.u * n + e.v;
        if e.length < m.data[idx] {
            m.data[idx] = e.length;
            m.data[e.v * n + e.u] = e.length;
        }
    }
    let closed = m.closure();
    for u in 0..n {
        for v in u + 1..n {
            if closed.get(u, v).is_infinite() {
                return Err(Error::Disconnected(u, v));
            }
        }
    }
    Ok(closed)
}

/// A complete metric graph with latency constraints, weights and a depot.
///
/// Node indices cover every vertex of the matrix; the depot (when present)
/// is one of them and the remaining nodes are the monitored set `V`.
/// `latency(depot)` reports the discharge time `D` so the recharging
/// constraint can be treated as one more latency bound on a single walk.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricInstance {
    dist: DistanceMatrix,
    depot: Option<usize>,
    latency: Vec<f64>,
    weight: Vec<f64>,
    discharge: f64,
    labels: Vec<String>,
}

impl MetricInstance {
    /// Builds an instance. Weights are normalized so the largest weight over
    /// the monitored vertices is 1; the depot's latency and weight entries are
    /// ignored.
    pub fn new(
        dist: DistanceMatrix,
        depot: Option<usize>,
        latency: Vec<f64>,
        weight: Vec<f64>,
        discharge: f64,
    ) -> Result<Self> {
        let n = dist.len();
        if latency.len() != n || weight.len() != n {
            return Err(Error::Malformed(format!(
                "expected {n} latency and weight entries, got {} and {}",
                latency.len(),
                weight.len()
            )));
        }
        if let Some(d) = depot {
            if d >= n {
                return Err(Error::Malformed(format!("depot index {d} out of range 0..{n}")));
            }
        } else if discharge.is_finite() {
            return Err(Error::Malformed(
                "a finite discharge time requires a depot".to_string(),
            ));
        }
        if discharge.is_nan() || discharge < 0.0 {
            return Err(Error::Malformed(format!("discharge time {discharge} is not a time")));
        }
        let labels = (0..n)
            .map(|v| if Some(v) == depot { "depot".to_string() } else { format!("v{v}") })
            .collect();
        let mut inst = Self { dist, depot, latency, weight, discharge, labels };
        inst.normalize();
        Ok(inst)
    }

    fn normalize(&mut self) {
        if let Some(d) = self.depot {
            self.latency[d] = self.discharge;
            self.weight[d] = 0.0;
        }
        let max = self
            .vertices()
            .map(|v| self.weight[v])
            .fold(0.0_f64, f64::max);
        if max > 0.0 && max.is_finite() && max != 1.0 {
            for v in 0..self.weight.len() {
                if Some(v) != self.depot {
                    self.weight[v] /= max;
                }
            }
        }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n_nodes() {
            return Err(Error::Malformed(format!(
                "{} labels for {} nodes",
                labels.len(),
                self.n_nodes()
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    /// Same graph with new latency constraints.
    pub fn with_latency(&self, latency: Vec<f64>) -> Result<Self> {
        Self::new(self.dist.clone(), self.depot, latency, self.weight.clone(), self.discharge)?
            .with_labels(self.labels.clone())
    }

    /// Same graph with new weights (normalized).
    pub fn with_weights(&self, weight: Vec<f64>) -> Result<Self> {
        Self::new(self.dist.clone(), self.depot, self.latency.clone(), weight, self.discharge)?
            .with_labels(self.labels.clone())
    }

    /// Number of matrix nodes, depot included.
    #[inline]
    pub fn n_nodes(&self) -> usize {
        self.dist.len()
    }

    /// Number of monitored vertices.
    pub fn n_vertices(&self) -> usize {
        self.n_nodes() - usize::from(self.depot.is_some())
    }

    /// Monitored vertices in index order.
    pub fn vertices(&self) -> impl Iterator<Item = usize> + '_ {
        let depot = self.depot;
        (0..self.n_nodes()).filter(move |&v| Some(v) != depot)
    }

    /// Monitored vertices with a finite latency constraint; only these need
    /// to be visited.
    pub fn constrained(&self) -> Vec<usize> {
        self.vertices().filter(|&v| self.latency[v].is_finite()).collect()
    }

    #[inline]
    pub fn depot(&self) -> Option<usize> {
        self.depot
    }

    #[inline]
    pub fn dist(&self, u: usize, v: usize) -> f64 {
        self.dist.get(u, v)
    }

    pub fn distances(&self) -> &DistanceMatrix {
        &self.dist
    }

    /// `r(v)`; for the depot this is the discharge time.
    #[inline]
    pub fn latency(&self, v: usize) -> f64 {
        self.latency[v]
    }

    pub fn latencies(&self) -> &[f64] {
        &self.latency
    }

    #[inline]
    pub fn weight(&self, v: usize) -> f64 {
        self.weight[v]
    }

    pub fn weights(&self) -> &[f64] {
        &self.weight
    }

    #[inline]
    pub fn discharge(&self) -> f64 {
        self.discharge
    }

    pub fn label(&self, v: usize) -> &str {
        &self.labels[v]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    /// Node index for a label.
    pub fn node(&self, label: &str) -> Option<usize> {
        self.labels.iter().position(|l| l == label)
    }

    /// True when every distance, finite latency and finite discharge time is
    /// an integer.
    pub fn is_integral(&self) -> bool {
        let int = |x: f64| !x.is_finite() || (x - x.round()).abs() <= EPS;
        self.dist.data.iter().all(|&d| int(d))
            && self.vertices().all(|v| int(self.latency[v]))
            && int(self.discharge)
    }

    /// Sub-instance on `keep` (monitored vertices) plus the depot.
    ///
    /// The returned map sends new node indices to old ones. The depot, when
    /// present, becomes node 0.
    pub fn restrict(&self, keep: &[usize]) -> Result<(MetricInstance, Vec<usize>)> {
        let mut map: Vec<usize> = Vec::with_capacity(keep.len() + 1);
        if let Some(d) = self.depot {
            map.push(d);
        }
        map.extend(keep.iter().copied().filter(|&v| Some(v) != self.depot));
        let dist = DistanceMatrix::from_fn(map.len(), |i, j| self.dist(map[i], map[j]));
        let latency = map.iter().map(|&v| self.latency[v]).collect();
        let weight = map.iter().map(|&v| self.weight[v]).collect();
        let depot = self.depot.map(|_| 0);
        let sub = MetricInstance::new(dist, depot, latency, weight, self.discharge)?
            .with_labels(map.iter().map(|&v| self.labels[v].clone()).collect())?;
        Ok((sub, map))
    }

    /// Lists every violated well-formedness condition.
    pub fn validate(&self) -> ValidationReport {
        let mut issues = Vec::new();
        let n = self.n_nodes();
        for u in 0..n {
            let duu = self.dist(u, u);
            if duu != 0.0 {
                issues.push(Issue::NonZeroDiagonal { node: u, value: duu });
            }
            for v in 0..n {
                let d = self.dist(u, v);
                if !d.is_finite() || d < 0.0 {
                    issues.push(Issue::BadDistance { u, v, value: d });
                }
                if v > u && !approx_eq(d, self.dist(v, u)) {
                    issues.push(Issue::Asymmetric { u, v });
                }
            }
        }
        for u in 0..n {
            for v in 0..n {
                for w in 0..n {
                    let direct = self.dist(u, w);
                    let via = self.dist(u, v) + self.dist(v, w);
                    if !leq(direct, via) {
                        issues.push(Issue::Triangle { u, via: v, w, direct, detour: via });
                    }
                }
            }
        }
        match self.depot {
            Some(mu) => {
                for v in self.vertices() {
                    let need = 2.0 * self.dist(mu, v);
                    if !leq(need, self.discharge) {
                        issues.push(Issue::DischargeTooShort { vertex: v, needed: need });
                    }
                    if !leq(need, self.latency[v]) {
                        issues.push(Issue::LatencyBelowRoundTrip { vertex: v, needed: need });
                    }
                }
            }
            None if self.discharge.is_finite() => issues.push(Issue::MissingDepot),
            None => {}
        }
        for v in self.vertices() {
            let r = self.latency[v];
            if r.is_nan() || r <= 0.0 {
                issues.push(Issue::NonPositiveLatency { vertex: v, value: r });
            }
            let phi = self.weight[v];
            if !(phi > 0.0 && phi <= 1.0 + EPS) {
                issues.push(Issue::WeightOutOfRange { vertex: v, value: phi });
            }
        }
        if self.n_vertices() > 0 {
            let max = self.vertices().map(|v| self.weight[v]).fold(f64::NEG_INFINITY, f64::max);
            if max > 0.0 && !approx_eq(max, 1.0) {
                issues.push(Issue::WeightsNotNormalized { max });
            }
        }
        ValidationReport { issues }
    }

    /// Validation as a `Result`, for planners that require a well-formed
    /// instance.
    pub fn ensure_valid(&self) -> Result<()> {
        let report = self.validate();
        if report.is_valid() {
            Ok(())
        } else {
            Err(Error::Invalid(report.to_string()))
        }
    }
}

/// One violated instance condition.
#[derive(Debug, Clone, PartialEq)]
pub enum Issue {
    NonZeroDiagonal { node: usize, value: f64 },
    BadDistance { u: usize, v: usize, value: f64 },
    Asymmetric { u: usize, v: usize },
    Triangle { u: usize, via: usize, w: usize, direct: f64, detour: f64 },
    MissingDepot,
    /// `D >= 2 l(mu, v)` fails.
    DischargeTooShort { vertex: usize, needed: f64 },
    /// `r(v) >= 2 l(mu, v)` fails.
    LatencyBelowRoundTrip { vertex: usize, needed: f64 },
    NonPositiveLatency { vertex: usize, value: f64 },
    WeightOutOfRange { vertex: usize, value: f64 },
    WeightsNotNormalized { max: f64 },
}

impl fmt::Display for Issue {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Issue::NonZeroDiagonal { node, value } => {
                write!(f, "dist({node},{node}) = {value}, expected 0")
            }
            Issue::BadDistance { u, v, value } => write!(f, "dist({u},{v}) = {value} is not a finite nonnegative time"),
            Issue::Asymmetric { u, v } => write!(f, "dist({u},{v}) != dist({v},{u})"),
            Issue::Triangle { u, via, w, direct, detour } => write!(
                f,
                "triangle inequality fails: dist({u},{w}) = {direct} > {detour} via {via}"
            ),
            Issue::MissingDepot => write!(f, "finite discharge time but no depot"),
            Issue::DischargeTooShort { vertex, needed } => write!(
                f,
                "discharge time below round trip to vertex {vertex} (needs {needed})"
            ),
            Issue::LatencyBelowRoundTrip { vertex, needed } => write!(
                f,
                "latency of vertex {vertex} below its depot round trip {needed}"
            ),
            Issue::NonPositiveLatency { vertex, value } => {
                write!(f, "latency of vertex {vertex} is {value}, must be positive")
            }
            Issue::WeightOutOfRange { vertex, value } => {
                write!(f, "weight of vertex {vertex} is {value}, must lie in (0, 1]")
            }
            Issue::WeightsNotNormalized { max } => write!(f, "largest weight is {max}, expected 1"),
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct ValidationReport {
    pub issues: Vec<Issue>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.issues.is_empty()
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.issues.is_empty() {
            return write!(f, "ok");
        }
        for (i, issue) in self.issues.iter().enumerate() {
            if i > 0 {
                write!(f, "; ")?;
            }
            write!(f, "{issue}")?;
        }
        Ok(())
    }
}

// ---------------------------------------------------------------------------
// Random generation
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DepotPlacement {
    Center,
    Corner,
    Random,
    /// No depot; discharge time is infinite.
    None,
}

/// Parameters of the uniform-square instance generator.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorParams {
    pub n: usize,
    /// `k` is drawn uniformly from this interval once per instance and
    /// latencies uniformly from `[TSP/k, k TSP]`.
    pub k_range: [f64; 2],
    pub speed: f64,
    pub discharge: f64,
    /// Side length of the sampling square.
    pub extent: f64,
    pub depot: DepotPlacement,
    /// Round distances, latencies and discharge to integers (grid points,
    /// closed under shortest paths).
    pub integer: bool,
    /// Weights are drawn log-uniformly from `[1/weight_spread, 1]`; 1 gives
    /// uniform weights.
    pub weight_spread: f64,
}

impl Default for GeneratorParams {
    fn default() -> Self {
        Self {
            n: 10,
            k_range: [4.0, 8.0],
            speed: 1.0,
            discharge: 3000.0,
            extent: 1000.0,
            depot: DepotPlacement::Center,
            integer: false,
            weight_spread: 1.0,
        }
    }
}

/// Generation provenance stored alongside an instance.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Provenance {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// The `k` that was drawn.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k: Option<f64>,
    /// Tour length used to scale latencies.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tsp: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub generator: Option<GeneratorParams>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub notes: BTreeMap<String, String>,
}

/// Samples an instance. Deterministic in `seed`.
///
/// Points are uniform in an `extent`-sided square; travel time is Euclidean
/// distance over `speed`. Latencies below a vertex's depot round trip are
/// raised to it, and the discharge time is raised to the farthest round trip.
pub fn generate_random(params: &GeneratorParams, seed: u64) -> InstanceDocument {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = params.n;
    let has_depot = params.depot != DepotPlacement::None;
    let total = n + usize::from(has_depot);

    let points: Vec<(f64, f64)> = if params.integer {
        let side = (params.extent.round() as usize).max(((total as f64).sqrt().ceil() as usize).max(1));
        let mut taken = std::collections::BTreeSet::new();
        let mut pts = Vec::with_capacity(total);
        let centre = (side / 2, side / 2);
        if has_depot {
            let p = match params.depot {
                DepotPlacement::Center => centre,
                DepotPlacement::Corner => (0, 0),
                _ => (rng.random_range(0..=side), rng.random_range(0..=side)),
            };
            taken.insert(p);
            pts.push(p);
        }
        while pts.len() < total {
            let p = (rng.random_range(0..=side), rng.random_range(0..=side));
            if taken.insert(p) {
                pts.push(p);
            }
        }
        pts.into_iter().map(|(x, y)| (x as f64, y as f64)).collect()
    } else {
        let e = params.extent;
        let mut pts = Vec::with_capacity(total);
        if has_depot {
            pts.push(match params.depot {
                DepotPlacement::Center => (e / 2.0, e / 2.0),
                DepotPlacement::Corner => (0.0, 0.0),
                _ => (rng.random::<f64>() * e, rng.random::<f64>() * e),
            });
        }
        while pts.len() < total {
            pts.push((rng.random::<f64>() * e, rng.random::<f64>() * e));
        }
        pts
    };

    let euclid = |i: usize, j: usize| {
        let (dx, dy) = (points[i].0 - points[j].0, points[i].1 - points[j].1);
        (dx * dx + dy * dy).sqrt() / params.speed
    };
    let dist = if params.integer {
        DistanceMatrix::from_fn(total, |i, j| if i == j { 0.0 } else { euclid(i, j).round().max(1.0) })
            .closure()
    } else {
        DistanceMatrix::from_fn(total, |i, j| if i == j { 0.0 } else { euclid(i, j) })
    };

    let depot = has_depot.then_some(0);
    let all: Vec<usize> = (0..total).collect();
    let tsp = if total >= 2 {
        tsp_tour(&dist, &all, &PlannerConfig::default()).period(&dist)
    } else {
        0.0
    };
    let [k_lo, k_hi] = params.k_range;
    let k = if k_hi > k_lo { rng.random_range(k_lo..=k_hi) } else { k_lo };

    let mut latency = vec![0.0; total];
    let mut weight = vec![0.0; total];
    for v in 0..total {
        if Some(v) == depot {
            continue;
        }
        let lo = tsp / k;
        let hi = k * tsp;
        let mut r = if hi > lo { rng.random_range(lo..=hi) } else { lo };
        if let Some(mu) = depot {
            r = r.max(2.0 * dist.get(mu, v));
        }
        if params.integer {
            r = r.ceil().max(1.0);
        }
        latency[v] = r;
        weight[v] = if params.weight_spread > 1.0 {
            let t: f64 = rng.random();
            params.weight_spread.powf(-t)
        } else {
            1.0
        };
    }

    let discharge = match depot {
        Some(mu) => {
            let far = (0..total).map(|v| 2.0 * dist.get(mu, v)).fold(0.0, f64::max);
            let d = params.discharge.max(far);
            if params.integer {
                d.ceil()
            } else {
                d
            }
        }
        None => f64::INFINITY,
    };
    if let Some(mu) = depot {
        latency[mu] = discharge;
    }

    let instance = MetricInstance::new(dist, depot, latency, weight, discharge)
        .expect("generator builds structurally valid instances");
    InstanceDocument {
        instance,
        edges: None,
        provenance: Some(Provenance {
            seed: Some(seed),
            k: Some(k),
            tsp: Some(tsp),
            generator: Some(params.clone()),
            notes: BTreeMap::new(),
        }),
    }
}

// ---------------------------------------------------------------------------
// Documents and file I/O
// ---------------------------------------------------------------------------

/// An instance plus optional pre-closure edges and provenance.
#[derive(Debug, Clone, PartialEq)]
pub struct InstanceDocument {
    pub instance: MetricInstance,
    pub edges: Option<Vec<Edge>>,
    pub provenance: Option<Provenance>,
}

impl InstanceDocument {
    pub fn new(instance: MetricInstance) -> Self {
        Self { instance, edges: None, provenance: None }
    }

    /// Instance whose matrix is the closure of `edges`.
    pub fn from_edges(
        n: usize,
        edges: Vec<Edge>,
        depot: Option<usize>,
        latency: Vec<f64>,
        weight: Vec<f64>,
        discharge: f64,
    ) -> Result<Self> {
        let dist = metric_closure(n, &edges)?;
        let instance = MetricInstance::new(dist, depot, latency, weight, discharge)?;
        Ok(Self { instance, edges: Some(edges), provenance: None })
    }

    pub fn to_toml(&self) -> String {
        let inst = &self.instance;
        let file = InstanceFile {
            version: SCHEMA_VERSION,
            n: inst.n_nodes(),
            depot_index: inst.depot,
            labels: Some(inst.labels.clone()),
            discharge: inst.discharge,
            r: inst.latency.clone(),
            phi: inst.weight.clone(),
            dist: inst.dist.rows(),
            edges: self.edges.clone(),
            provenance: self.provenance.clone(),
        };
        toml::to_string(&file).expect("instance documents always serialize")
    }

    pub fn from_toml(text: &str) -> std::result::Result<Self, String> {
        let probe: VersionProbe = toml::from_str(text).map_err(|e| e.to_string())?;
        if probe.version != SCHEMA_VERSION {
            return Err(format!(
                "{}",
                Error::SchemaVersion { found: probe.version, expected: SCHEMA_VERSION }
            ));
        }
        let file: InstanceFile = toml::from_str(text).map_err(|e| e.to_string())?;
        file.into_document().map_err(|e| e.to_string())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = fs::read_to_string(path)
            .map_err(|source| Error::Io { path: path.to_path_buf(), source })?;
        let probe: VersionProbe = toml::from_str(&text)
            .map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        if probe.version != SCHEMA_VERSION {
            return Err(Error::SchemaVersion { found: probe.version, expected: SCHEMA_VERSION });
        }
        let file: InstanceFile = toml::from_str(&text)
            .map_err(|e| Error::Parse { path: path.to_path_buf(), message: e.to_string() })?;
        file.into_document()
    }

    /// Writes the document atomically: a reader never sees a partial file.
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        write_atomic(path.as_ref(), &self.to_toml())
    }
}

pub(crate) fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let io = |source| Error::Io { path: path.to_path_buf(), source };
    let file_name = path
        .file_name()
        .map(|f| f.to_string_lossy().into_owned())
        .unwrap_or_else(|| "out".to_string());
    let tmp = path.with_file_name(format!(".{file_name}.tmp{}", std::process::id()));
    fs::write(&tmp, contents).map_err(io)?;
    fs::rename(&tmp, path).map_err(|e| {
        let _ = fs::remove_file(&tmp);
        io(e)
    })
}

#[derive(Deserialize)]
struct VersionProbe {
    version: u32,
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct InstanceFile {
    version: u32,
    n: usize,
    #[serde(skip_serializing_if = "Option::is_none")]
    depot_index: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
    #[serde(rename = "D")]
    discharge: f64,
    r: Vec<f64>,
    phi: Vec<f64>,
    dist: Vec<Vec<f64>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    edges: Option<Vec<Edge>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    provenance: Option<Provenance>,
}

impl InstanceFile {
    fn into_document(self) -> Result<InstanceDocument> {
        if self.dist.len() != self.n {
            return Err(Error::Malformed(format!(
                "field `dist`: {} rows but n = {}",
                self.dist.len(),
                self.n
            )));
        }
        let dist = DistanceMatrix::from_rows(self.dist)?;
        if let Some(edges) = &self.edges {
            let closed = metric_closure(self.n, edges)?;
            for u in 0..self.n {
                for v in 0..self.n {
                    if !approx_eq(closed.get(u, v), dist.get(u, v)) {
                        return Err(Error::Malformed(format!(
                            "field `dist`: entry ({u},{v}) differs from the closure of `edges`"
                        )));
                    }
                }
            }
        }
        let mut instance =
            MetricInstance::new(dist, self.depot_index, self.r, self.phi, self.discharge)?;
        if let Some(labels) = self.labels {
            instance = instance.with_labels(labels)?;
        }
        Ok(InstanceDocument { instance, edges: self.edges, provenance: self.provenance })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn path_graph() -> Vec<Edge> {
        vec![Edge { u: 0, v: 1, length: 1.0 }, Edge { u: 1, v: 2, length: 1.0 }]
    }

    #[test]
    fn closure_composes_paths() {
        let m = metric_closure(3, &path_graph()).unwrap();
        assert_eq!(m.get(0, 2), 2.0);
        assert_eq!(m.get(2, 0), 2.0);
    }

    #[test]
    fn closure_shortcuts_long_edge() {
        let edges = vec![
            Edge { u: 0, v: 1, length: 1.0 },
            Edge { u: 1, v: 2, length: 1.0 },
            Edge { u: 0, v: 2, length: 5.0 },
        ];
        let m = metric_closure(3, &edges).unwrap();
        assert_eq!(m.get(0, 2), 2.0);
    }

    #[test]
    fn closure_reports_disconnected_pair() {
        let edges = vec![Edge { u: 0, v: 1, length: 1.0 }];
        match metric_closure(3, &edges) {
            Err(Error::Disconnected(u, v)) => assert!(v == 2 && u < 2),
            other => panic!("expected disconnection, got {other:?}"),
        }
    }

    fn star(discharge: f64, r: f64) -> MetricInstance {
        // depot 0 at distance 1 and 2 from vertices 1 and 2
        let rows = vec![vec![0.0, 1.0, 2.0], vec![1.0, 0.0, 3.0], vec![2.0, 3.0, 0.0]];
        MetricInstance::new(
            DistanceMatrix::from_rows(rows).unwrap(),
            Some(0),
            vec![0.0, r, r],
            vec![0.0, 1.0, 1.0],
            discharge,
        )
        .unwrap()
    }

    #[test]
    fn discharge_at_round_trip_boundary_is_valid() {
        assert!(star(4.0, 10.0).validate().is_valid());
    }

    #[test]
    fn latency_just_below_round_trip_is_flagged() {
        let inst = star(10.0, 4.0 - 1e-3);
        let report = inst.validate();
        assert_eq!(
            report.issues,
            vec![Issue::LatencyBelowRoundTrip { vertex: 2, needed: 4.0 }]
        );
    }

    #[test]
    fn short_discharge_is_flagged_per_vertex() {
        let report = star(3.0, 10.0).validate();
        assert_eq!(report.issues, vec![Issue::DischargeTooShort { vertex: 2, needed: 4.0 }]);
    }

    #[test]
    fn triangle_violation_is_reported() {
        let rows = vec![vec![0.0, 1.0, 5.0], vec![1.0, 0.0, 1.0], vec![5.0, 1.0, 0.0]];
        let inst = MetricInstance::new(
            DistanceMatrix::from_rows(rows).unwrap(),
            None,
            vec![10.0; 3],
            vec![1.0; 3],
            f64::INFINITY,
        )
        .unwrap();
        assert!(inst
            .validate()
            .issues
            .iter()
            .any(|i| matches!(i, Issue::Triangle { u: 0, w: 2, .. })));
    }

    #[test]
    fn weights_are_normalized() {
        let inst = star(10.0, 10.0).with_weights(vec![0.0, 4.0, 2.0]).unwrap();
        assert_eq!(inst.weight(1), 1.0);
        assert_eq!(inst.weight(2), 0.5);
        assert_eq!(inst.weight(0), 0.0);
    }

    #[test]
    fn finite_discharge_without_depot_is_rejected() {
        let m = DistanceMatrix::from_fn(2, |u, v| if u == v { 0.0 } else { 1.0 });
        assert!(MetricInstance::new(m, None, vec![2.0; 2], vec![1.0; 2], 5.0).is_err());
    }

    #[test]
    fn restrict_keeps_depot_first() {
        let inst = star(10.0, 10.0);
        let (sub, map) = inst.restrict(&[2]).unwrap();
        assert_eq!(map, vec![0, 2]);
        assert_eq!(sub.depot(), Some(0));
        assert_eq!(sub.dist(0, 1), 2.0);
    }

    #[test]
    fn single_vertex_generation_uses_round_trip_tour() {
        let params = GeneratorParams { n: 1, ..Default::default() };
        let doc = generate_random(&params, 3);
        let prov = doc.provenance.unwrap();
        let (k, tsp) = (prov.k.unwrap(), prov.tsp.unwrap());
        let inst = doc.instance;
        assert!((tsp - 2.0 * inst.dist(0, 1)).abs() < 1e-9);
        let r = inst.latency(1);
        assert!(r >= tsp / k - 1e-9 && r <= k * tsp + 1e-9);
    }

    #[test]
    fn generation_is_deterministic() {
        let params = GeneratorParams { n: 12, ..Default::default() };
        assert_eq!(generate_random(&params, 5), generate_random(&params, 5));
        assert_ne!(generate_random(&params, 5), generate_random(&params, 6));
    }

    #[test]
    fn thirty_vertex_instance_validates() {
        let params = GeneratorParams { n: 30, ..Default::default() };
        let inst = generate_random(&params, 7).instance;
        let report = inst.validate();
        assert!(report.is_valid(), "{report}");
    }

    #[test]
    fn integer_generation_is_integral_and_valid() {
        let params = GeneratorParams {
            n: 5,
            extent: 4.0,
            integer: true,
            k_range: [1.0, 2.0],
            discharge: 0.0,
            ..Default::default()
        };
        for seed in 0..20 {
            let inst = generate_random(&params, seed).instance;
            assert!(inst.is_integral());
            assert!(inst.validate().is_valid(), "seed {seed}: {}", inst.validate());
        }
    }

    #[test]
    fn toml_round_trip_is_exact() {
        let params = GeneratorParams { n: 6, weight_spread: 8.0, ..Default::default() };
        let doc = generate_random(&params, 11);
        let back = InstanceDocument::from_toml(&doc.to_toml()).unwrap();
        assert_eq!(doc, back);
    }

    #[test]
    fn infinite_values_round_trip() {
        let m = DistanceMatrix::from_fn(2, |u, v| if u == v { 0.0 } else { 1.0 });
        let inst =
            MetricInstance::new(m, None, vec![f64::INFINITY, 3.0], vec![1.0, 1.0], f64::INFINITY)
                .unwrap();
        let doc = InstanceDocument::new(inst);
        let text = doc.to_toml();
        assert!(text.contains("inf"));
        assert_eq!(InstanceDocument::from_toml(&text).unwrap(), doc);
    }

    #[test]
    fn truncated_file_is_a_parse_error() {
        let doc = generate_random(&GeneratorParams { n: 4, ..Default::default() }, 1);
        let text = doc.to_toml();
        let cut = &text[..text.len() / 2];
        assert!(InstanceDocument::from_toml(cut).is_err());
    }

    #[test]
    fn wrong_version_is_explicit() {
        let doc = generate_random(&GeneratorParams { n: 2, ..Default::default() }, 1);
        let text = doc.to_toml().replacen("version = 1", "version = 7", 1);
        let err = InstanceDocument::from_toml(&text).unwrap_err();
        assert!(err.contains("schema version 7"), "{err}");
    }

    #[test]
    fn edges_must_match_matrix() {
        let doc = InstanceDocument::from_edges(
            3,
            path_graph(),
            None,
            vec![4.0; 3],
            vec![1.0; 3],
            f64::INFINITY,
        )
        .unwrap();
        let text = doc.to_toml();
        assert_eq!(InstanceDocument::from_toml(&text).unwrap(), doc);
        let tampered = text.replacen("[0.0, 1.0, 2.0]", "[0.0, 1.0, 1.5]", 1);
        assert_ne!(tampered, text);
        assert!(InstanceDocument::from_toml(&tampered).is_err());
    }
}
