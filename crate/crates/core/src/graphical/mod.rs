//! Random-cluster and Edwards–Sokal representations with site-dependent
//! fields.
//!
//! Exterior spins enter as two ghost vertices, one per boundary sign. A
//! cluster touching the plus ghost has factor 1, one touching the minus ghost
//! `exp(-2 beta S_C)`, one touching both is impossible, and a free cluster has
//! `1 + exp(-2 beta S_C)`, where `S_C` is the field summed over the cluster.

mod checks;
mod sampling;

pub use checks::{
    check_free_below_wired, check_rc_fkg, compare_rc_in_j, es_marginals, heat_bath_edge_law, percolation_proxy,
    sw_transition, EdgeLawRow, EsMarginals, PercolationPoint, ProxySetup,
};
pub use sampling::{rc_heat_bath_edge, sample_edges_given_spins, sample_spins_given_edges, sw_step};

use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::model::ModelInstance;

/// Largest edge set tabulated exhaustively.
pub const RC_EDGE_CAP: usize = 20;

/// Which edges are random variables under a wired or fixed boundary.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum EdgeSetChoice {
    /// Every edge touching the region; frontier edges join the ghosts.
    #[default]
    Touching,
    /// Only edges inside the region; sites on the frontier are permanently
    /// attached to their exterior spin (exterior edges all open).
    Interior,
}

/// One end of a graphical edge.
pub const GHOST_PLUS: usize = usize::MAX - 1;
pub const GHOST_MINUS: usize = usize::MAX;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GraphEdge {
    pub a: usize,
    /// A site index or one of the ghosts.
    pub b: usize,
    pub coupling: f64,
}

/// Vertex set, variable edges and fields of a finite RC/ES model.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphicalModel {
    sites: Vec<Site>,
    field: Vec<f64>,
    edges: Vec<GraphEdge>,
    /// Sites attached to a ghost regardless of the edge configuration.
    pinned: Vec<(usize, usize)>,
    beta: f64,
}

fn ghost_of(spin: i8) -> usize {
    if spin > 0 {
        GHOST_PLUS
    } else {
        GHOST_MINUS
    }
}

impl GraphicalModel {
    pub fn from_instance(instance: &ModelInstance, choice: EdgeSetChoice) -> Result<Self> {
        let sys = instance.compile()?;
        let mut edges: Vec<GraphEdge> = sys
            .edges()
            .iter()
            .map(|&(a, b, j)| GraphEdge { a: a as usize, b: b as usize, coupling: j })
            .collect();
        let mut pinned = Vec::new();
        for f in sys.frontier() {
            match choice {
                EdgeSetChoice::Touching => edges.push(GraphEdge { a: f.site, b: ghost_of(f.spin), coupling: f.coupling }),
                EdgeSetChoice::Interior => pinned.push((f.site, ghost_of(f.spin))),
            }
        }
        pinned.sort_unstable();
        pinned.dedup();
        Ok(GraphicalModel { sites: sys.sites().to_vec(), field: sys.field().to_vec(), edges, pinned, beta: instance.beta })
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn n_sites(&self) -> usize {
        self.sites.len()
    }

    pub fn edges(&self) -> &[GraphEdge] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn field(&self) -> &[f64] {
        &self.field
    }

    pub fn pinned(&self) -> &[(usize, usize)] {
        &self.pinned
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    /// Same graph with new variable-edge couplings.
    pub fn with_couplings(&self, couplings: &[f64]) -> Result<Self> {
        if couplings.len() != self.edges.len() {
            return Err(Error::InvalidArgument("coupling count does not match the edge set".into()));
        }
        let mut out = self.clone();
        for (e, &j) in out.edges.iter_mut().zip(couplings) {
            e.coupling = j;
        }
        Ok(out)
    }

    pub fn has_negative_field(&self) -> bool {
        self.field.iter().any(|h| *h < 0.0)
    }

    pub(crate) fn require_non_negative(&self) -> Result<()> {
        if self.has_negative_field() {
            return Err(Error::InvalidArgument("signed fields are not allowed for this check".into()));
        }
        if self.edges.iter().any(|e| e.coupling < 0.0) {
            return Err(Error::InvalidArgument("couplings must be non-negative".into()));
        }
        Ok(())
    }

    /// Spin of a vertex given the site spins; ghosts are fixed.
    #[inline]
    pub(crate) fn vertex_spin(&self, spins: &[i8], v: usize) -> i8 {
        match v {
            GHOST_PLUS => 1,
            GHOST_MINUS => -1,
            i => spins[i],
        }
    }

    fn vertex_index(&self, v: usize) -> usize {
        match v {
            GHOST_PLUS => self.sites.len(),
            GHOST_MINUS => self.sites.len() + 1,
            i => i,
        }
    }
}

/// Open/closed state of each variable edge.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct EdgeConfiguration {
    pub open: Vec<bool>,
}

impl EdgeConfiguration {
    pub fn closed(m: usize) -> Self {
        EdgeConfiguration { open: vec![false; m] }
    }

    pub fn from_bits(m: usize, bits: u64) -> Self {
        EdgeConfiguration { open: (0..m).map(|e| bits >> e & 1 == 1).collect() }
    }

    pub fn to_bits(&self) -> u64 {
        self.open.iter().enumerate().fold(0, |acc, (e, &o)| if o { acc | 1 << e } else { acc })
    }

    pub fn bitstring(&self) -> String {
        self.open.iter().map(|&o| if o { '1' } else { '0' }).collect()
    }
}

/// Disjoint-set forest over sites and the two ghosts.
#[derive(Clone, Debug)]
struct Dsu {
    parent: Vec<usize>,
}

impl Dsu {
    fn new(n: usize) -> Self {
        Dsu { parent: (0..n).collect() }
    }

    fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    fn union(&mut self, a: usize, b: usize) {
        let (ra, rb) = (self.find(a), self.find(b));
        if ra != rb {
            let (lo, hi) = (ra.min(rb), ra.max(rb));
            self.parent[hi] = lo;
        }
    }
}

/// One open cluster.
#[derive(Clone, Debug, PartialEq)]
pub struct Cluster {
    pub sites: Vec<usize>,
    /// Field summed over the cluster (beta not applied).
    pub field_sum: f64,
    pub touches_plus: bool,
    pub touches_minus: bool,
}

impl Cluster {
    /// `ln` of the cluster factor, `-inf` when it joins both ghosts.
    pub fn log_factor(&self, beta: f64) -> f64 {
        let x = -2.0 * beta * self.field_sum;
        match (self.touches_plus, self.touches_minus) {
            (true, true) => f64::NEG_INFINITY,
            (true, false) => 0.0,
            (false, true) => x,
            (false, false) => softplus(x),
        }
    }

    pub fn touches_boundary(&self) -> bool {
        self.touches_plus || self.touches_minus
    }
}

/// `ln(1 + e^x)` without overflow.
pub fn softplus(x: f64) -> f64 {
    if x > 30.0 {
        x + (-x).exp().ln_1p()
    } else {
        x.exp().ln_1p()
    }
}

/// Open clusters of an edge configuration, in order of their smallest site.
#[derive(Clone, Debug)]
pub struct ClusterPartition {
    pub clusters: Vec<Cluster>,
    /// Cluster index of each site.
    pub label: Vec<usize>,
}

impl ClusterPartition {
    pub fn build(model: &GraphicalModel, config: &EdgeConfiguration) -> Self {
        Self::build_skipping(model, config, None)
    }

    /// Partition with one edge treated as closed.
    pub(crate) fn build_skipping(model: &GraphicalModel, config: &EdgeConfiguration, skip: Option<usize>) -> Self {
        let n = model.n_sites();
        let (gp, gm) = (n, n + 1);
        let mut dsu = Dsu::new(n + 2);
        for &(s, g) in &model.pinned {
            dsu.union(s, model.vertex_index(g));
        }
        for (e, edge) in model.edges.iter().enumerate() {
            if config.open[e] && Some(e) != skip {
                dsu.union(model.vertex_index(edge.a), model.vertex_index(edge.b));
            }
        }
        let (rp, rm) = (dsu.find(gp), dsu.find(gm));
        let mut root_to_cluster = vec![usize::MAX; n + 2];
        let mut clusters: Vec<Cluster> = Vec::new();
        let mut label = vec![0; n];
        for i in 0..n {
            let r = dsu.find(i);
            if root_to_cluster[r] == usize::MAX {
                root_to_cluster[r] = clusters.len();
                clusters.push(Cluster { sites: Vec::new(), field_sum: 0.0, touches_plus: r == rp, touches_minus: r == rm });
            }
            let c = root_to_cluster[r];
            clusters[c].sites.push(i);
            clusters[c].field_sum += model.field[i];
            label[i] = c;
        }
        ClusterPartition { clusters, label }
    }

    pub fn connected(&self, a: usize, b: usize) -> bool {
        self.label[a] == self.label[b]
    }
}

/// `ln` of the random-cluster weight.
pub fn rc_log_weight(model: &GraphicalModel, config: &EdgeConfiguration) -> f64 {
    let beta = model.beta;
    let mut lw = 0.0;
    for (e, edge) in model.edges.iter().enumerate() {
        if config.open[e] {
            lw += (2.0 * beta * edge.coupling).exp_m1().ln();
        }
    }
    if lw == f64::NEG_INFINITY {
        return lw;
    }
    let part = ClusterPartition::build(model, config);
    lw + part.clusters.iter().map(|c| c.log_factor(beta)).sum::<f64>()
}

/// `prod_open (e^{2 beta J_e} - 1) prod_C factor(C)`.
pub fn rc_weight(model: &GraphicalModel, config: &EdgeConfiguration) -> f64 {
    rc_log_weight(model, config).exp()
}

/// Normalised random-cluster probabilities indexed by edge bit patterns.
pub fn rc_exact_distribution(model: &GraphicalModel) -> Result<Vec<f64>> {
    let m = model.n_edges();
    if m > RC_EDGE_CAP {
        return Err(Error::Capacity { what: "random-cluster edge set", size: m, cap: RC_EDGE_CAP });
    }
    let lw: Vec<f64> = (0..1u64 << m).map(|b| rc_log_weight(model, &EdgeConfiguration::from_bits(m, b))).collect();
    normalize_log(lw)
}

pub(crate) fn normalize_log(mut lw: Vec<f64>) -> Result<Vec<f64>> {
    let max = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Conditioning("every configuration has zero weight".into()));
    }
    let mut total = 0.0;
    for v in lw.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in lw.iter_mut() {
        *v /= total;
    }
    Ok(lw)
}

/// `ln` of the Edwards–Sokal weight
/// `prod_open delta(s_a = s_b) (e^{2 beta J_e} - 1) prod_i e^{beta h_i s_i}`.
pub fn es_log_weight(model: &GraphicalModel, spins: &[i8], config: &EdgeConfiguration) -> f64 {
    let beta = model.beta;
    for &(s, g) in &model.pinned {
        if spins[s] != model.vertex_spin(spins, g) {
            return f64::NEG_INFINITY;
        }
    }
    let mut lw = 0.0;
    for (e, edge) in model.edges.iter().enumerate() {
        if config.open[e] {
            if model.vertex_spin(spins, edge.a) != model.vertex_spin(spins, edge.b) {
                return f64::NEG_INFINITY;
            }
            lw += (2.0 * beta * edge.coupling).exp_m1().ln();
        }
    }
    lw + spins.iter().zip(&model.field).map(|(&s, h)| beta * h * s as f64).sum::<f64>()
}

pub fn es_weight(model: &GraphicalModel, spins: &[i8], config: &EdgeConfiguration) -> f64 {
    es_log_weight(model, spins, config).exp()
}
