//! Exhaustive verifications on small graphs and the percolation proxy.

use crate::check::CheckReport;
use crate::error::{Error, Result};
use crate::lattice::{BoundaryCondition, Region, Site, Universe};
use crate::model::{CouplingSpec, FieldSpec, ModelInstance};
use crate::monotone::{covariance, mean, MonotoneFunction};
use crate::rng::{derive_seed, stream_rng};
use crate::stats::summarize;

use super::{
    es_log_weight, normalize_log, rc_exact_distribution, rc_heat_bath_edge, sample_edges_given_spins, sample_spins_given_edges,
    ClusterPartition, EdgeConfiguration, EdgeSetChoice, GraphicalModel,
};

const SLACK: f64 = 1e-12;
/// Joint tables are `2^{sites + edges}` long.
const JOINT_CAP: usize = 24;

fn spins_of(n: usize, bits: u64) -> Vec<i8> {
    (0..n).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect()
}

fn check_joint_size(model: &GraphicalModel) -> Result<()> {
    let size = model.n_sites() + model.n_edges();
    if size > JOINT_CAP {
        return Err(Error::Capacity { what: "spin-edge joint table", size, cap: JOINT_CAP });
    }
    Ok(())
}

/// Both marginals of the exact Edwards–Sokal joint.
#[derive(Clone, Debug, PartialEq)]
pub struct EsMarginals {
    /// Indexed by spin bit patterns (bit set = `+1`).
    pub spin: Vec<f64>,
    /// Indexed by edge bit patterns (bit set = open).
    pub rc: Vec<f64>,
}

pub fn es_marginals(model: &GraphicalModel) -> Result<EsMarginals> {
    check_joint_size(model)?;
    let (n, m) = (model.n_sites(), model.n_edges());
    let mut joint = Vec::with_capacity(1 << (n + m));
    for sb in 0u64..1 << n {
        let spins = spins_of(n, sb);
        for eb in 0u64..1 << m {
            joint.push(es_log_weight(model, &spins, &EdgeConfiguration::from_bits(m, eb)));
        }
    }
    let joint = normalize_log(joint)?;
    let mut spin = vec![0.0; 1 << n];
    let mut rc = vec![0.0; 1 << m];
    for sb in 0..1usize << n {
        for eb in 0..1usize << m {
            let p = joint[sb << m | eb];
            spin[sb] += p;
            rc[eb] += p;
        }
    }
    Ok(EsMarginals { spin, rc })
}

/// `sum_s dist(s) P_SW(s -> .)`, the exact Swendsen–Wang operator applied to
/// a spin distribution.
pub fn sw_transition(model: &GraphicalModel, dist: &[f64]) -> Result<Vec<f64>> {
    check_joint_size(model)?;
    let (n, m) = (model.n_sites(), model.n_edges());
    if dist.len() != 1 << n {
        return Err(Error::InvalidArgument("distribution length must be 2^sites".into()));
    }
    let beta = model.beta();
    let p_open: Vec<f64> = model.edges().iter().map(|e| -(-2.0 * beta * e.coupling).exp_m1()).collect();
    // edge marginal after the first half-step
    let mut mu = vec![0.0; 1 << m];
    for (sb, &pi) in dist.iter().enumerate() {
        if pi == 0.0 {
            continue;
        }
        let spins = spins_of(n, sb as u64);
        let agree: Vec<usize> = (0..m)
            .filter(|&e| {
                let ed = model.edges()[e];
                model.vertex_spin(&spins, ed.a) == model.vertex_spin(&spins, ed.b)
            })
            .collect();
        for sub in 0u64..1 << agree.len() {
            let mut p = pi;
            let mut bits = 0usize;
            for (k, &e) in agree.iter().enumerate() {
                if sub >> k & 1 == 1 {
                    p *= p_open[e];
                    bits |= 1 << e;
                } else {
                    p *= 1.0 - p_open[e];
                }
            }
            mu[bits] += p;
        }
    }
    let mut out = vec![0.0; 1 << n];
    for (eb, &w) in mu.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let part = ClusterPartition::build(model, &EdgeConfiguration::from_bits(m, eb as u64));
        let mut fixed = 0usize;
        let mut free = Vec::new();
        for c in &part.clusters {
            match (c.touches_plus, c.touches_minus) {
                (true, true) => {
                    return Err(Error::Conditioning("cluster joins plus and minus boundary spins".into()))
                }
                (true, false) => fixed |= c.sites.iter().fold(0, |a, &i| a | 1 << i),
                (false, true) => {}
                (false, false) => {
                    let mask = c.sites.iter().fold(0usize, |a, &i| a | 1 << i);
                    let p = 1.0 / (1.0 + (-2.0 * beta * c.field_sum).exp());
                    free.push((mask, p));
                }
            }
        }
        for choice in 0u64..1 << free.len() {
            let mut bits = fixed;
            let mut p = w;
            for (k, &(mask, pp)) in free.iter().enumerate() {
                if choice >> k & 1 == 1 {
                    bits |= mask;
                    p *= pp;
                } else {
                    p *= 1.0 - pp;
                }
            }
            out[bits] += p;
        }
    }
    Ok(out)
}

fn same_graph(a: &GraphicalModel, b: &GraphicalModel) -> bool {
    a.n_sites() == b.n_sites()
        && a.pinned() == b.pinned()
        && a.edges().iter().zip(b.edges()).all(|(x, y)| x.a == y.a && x.b == y.b)
        && a.n_edges() == b.n_edges()
}

/// Increasing events are at least as likely under the larger couplings.
pub fn compare_rc_in_j(low: &GraphicalModel, high: &GraphicalModel, events: &[MonotoneFunction]) -> Result<CheckReport> {
    if !same_graph(low, high) || low.field() != high.field() || low.beta() != high.beta() {
        return Err(Error::InvalidArgument("models must share graph, field and beta".into()));
    }
    low.require_non_negative()?;
    high.require_non_negative()?;
    if low.edges().iter().zip(high.edges()).any(|(a, b)| a.coupling > b.coupling) {
        return Err(Error::InvalidArgument("couplings must be ordered edgewise".into()));
    }
    let (pl, ph) = (rc_exact_distribution(low)?, rc_exact_distribution(high)?);
    let mut report = CheckReport::new("rc monotone in J", SLACK);
    for f in events {
        report.record(mean(&ph, f) - mean(&pl, f), || f.describe());
    }
    Ok(report)
}

/// Positive association of random increasing edge events.
pub fn check_rc_fkg(model: &GraphicalModel, trials: usize, seed: u64) -> Result<CheckReport> {
    model.require_non_negative()?;
    let table = rc_exact_distribution(model)?;
    let mut report = CheckReport::new("rc fkg", SLACK);
    if model.n_edges() == 0 {
        return Ok(report);
    }
    let mut rng = stream_rng(seed, 0);
    for _ in 0..trials {
        let f = MonotoneFunction::random(model.n_edges(), &mut rng);
        let g = MonotoneFunction::random(model.n_edges(), &mut rng);
        report.record(covariance(&table, &f, &g), || format!("f={} g={}", f.describe(), g.describe()));
    }
    Ok(report)
}

/// Free and wired random-cluster states on the interior edges of a region:
/// increasing events are no more likely in the free state.
pub fn check_free_below_wired(instance: &ModelInstance, trials: usize, seed: u64) -> Result<CheckReport> {
    let wired = GraphicalModel::from_instance(&instance.clone().with_bc(BoundaryCondition::Plus), EdgeSetChoice::Interior)?;
    let free = GraphicalModel::from_instance(&instance.clone().with_bc(BoundaryCondition::Free), EdgeSetChoice::Interior)?;
    wired.require_non_negative()?;
    let (pw, pf) = (rc_exact_distribution(&wired)?, rc_exact_distribution(&free)?);
    let mut report = CheckReport::new("free below wired", SLACK);
    if wired.n_edges() == 0 {
        return Ok(report);
    }
    let mut rng = stream_rng(seed, 0);
    for _ in 0..trials {
        let f = MonotoneFunction::random(wired.n_edges(), &mut rng);
        report.record(mean(&pw, &f) - mean(&pf, &f), || f.describe());
    }
    Ok(report)
}

/// Exact probability of one edge configuration next to its long-run
/// frequency under systematic single-edge heat-bath sweeps.
#[derive(Clone, Debug, PartialEq)]
pub struct EdgeLawRow {
    pub bits: u64,
    pub exact: f64,
    pub frequency: f64,
    /// Autocorrelation-aware error of the frequency, floored at the i.i.d.
    /// binomial error of the exact probability.
    pub stderr: f64,
}

impl EdgeLawRow {
    pub fn z_score(&self) -> f64 {
        (self.frequency - self.exact).abs() / self.stderr
    }
}

/// Runs `burn_in + sweeps` heat-bath sweeps from the all-closed state and
/// compares visit frequencies with [`rc_exact_distribution`].
pub fn heat_bath_edge_law(model: &GraphicalModel, sweeps: usize, burn_in: usize, seed: u64) -> Result<Vec<EdgeLawRow>> {
    if sweeps == 0 {
        return Err(Error::InvalidArgument("need at least one sweep".into()));
    }
    let m = model.n_edges();
    let exact = rc_exact_distribution(model)?;
    let mut rng = stream_rng(seed, 0);
    let mut config = EdgeConfiguration::closed(m);
    let mut sweep = |config: &mut EdgeConfiguration| {
        for e in 0..m {
            rc_heat_bath_edge(model, config, e, &mut rng);
        }
    };
    for _ in 0..burn_in {
        sweep(&mut config);
    }
    let visits: Vec<u64> = (0..sweeps)
        .map(|_| {
            sweep(&mut config);
            config.to_bits()
        })
        .collect();
    Ok((0..exact.len() as u64)
        .map(|bits| {
            let series: Vec<f64> = visits.iter().map(|&v| f64::from(u8::from(v == bits))).collect();
            let s = summarize(&series);
            let p = exact[bits as usize];
            let floor = (p * (1.0 - p) / sweeps as f64).sqrt();
            EdgeLawRow { bits, exact: p, frequency: s.mean, stderr: s.stderr.max(floor) }
        })
        .collect())
}

/// Probability that the origin connects to the wired exterior of the box of
/// radius `radius - 1` around it.
#[derive(Clone, Debug, PartialEq)]
pub struct PercolationPoint {
    pub radius: i64,
    pub estimate: f64,
    pub stderr: f64,
    /// Exact value when the edge set is small enough to tabulate.
    pub exact: Option<f64>,
}

/// Parameters of the nested wired boxes.
#[derive(Clone, Debug, PartialEq)]
pub struct ProxySetup {
    pub origin: Site,
    pub universe: Universe,
    pub couplings: CouplingSpec,
    pub field: FieldSpec,
    pub beta: f64,
}

impl ProxySetup {
    pub fn model(&self, radius: i64) -> Result<GraphicalModel> {
        let r = radius - 1;
        let d = self.origin.dim();
        let side = if r >= 0 { (2 * r + 1) as usize } else { 0 };
        let mut sites = Vec::new();
        for k in 0..side.pow(d as u32) {
            let mut rest = k;
            let coords: Vec<i64> = (0..d)
                .map(|axis| {
                    let off = (rest % side) as i64 - r;
                    rest /= side;
                    self.origin.coords()[axis] + off
                })
                .collect();
            let s = Site::new(coords);
            if self.universe.contains(&s) {
                sites.push(s);
            }
        }
        let inst = ModelInstance::new(Region::explicit(d, sites), BoundaryCondition::Plus, self.couplings.clone(), self.field.clone())
            .with_universe(self.universe)
            .with_beta(self.beta);
        GraphicalModel::from_instance(&inst, EdgeSetChoice::Touching)
    }
}

fn origin_wired(model: &GraphicalModel, config: &EdgeConfiguration, origin: usize) -> bool {
    let part = ClusterPartition::build(model, config);
    part.clusters[part.label[origin]].touches_plus
}

/// Swendsen–Wang estimates of the connection probability per radius.
pub fn percolation_proxy(
    setup: &ProxySetup,
    radii: &[i64],
    samples: usize,
    burn_in: usize,
    seed: u64,
) -> Result<Vec<PercolationPoint>> {
    if radii.windows(2).any(|w| w[1] <= w[0]) || radii.iter().any(|r| *r < 0) {
        return Err(Error::InvalidArgument("radii must be non-negative and increasing".into()));
    }
    let mut out = Vec::new();
    for (k, &radius) in radii.iter().enumerate() {
        if radius == 0 {
            out.push(PercolationPoint { radius, estimate: 1.0, stderr: 0.0, exact: Some(1.0) });
            continue;
        }
        let model = setup.model(radius)?;
        let origin = model
            .sites()
            .iter()
            .position(|s| *s == setup.origin)
            .ok_or_else(|| Error::InvalidArgument("origin outside the universe".into()))?;
        let exact = if model.n_edges() <= super::RC_EDGE_CAP {
            let table = rc_exact_distribution(&model)?;
            let m = model.n_edges();
            Some(
                table
                    .iter()
                    .enumerate()
                    .filter(|(b, _)| origin_wired(&model, &EdgeConfiguration::from_bits(m, *b as u64), origin))
                    .map(|(_, p)| p)
                    .sum(),
            )
        } else {
            None
        };
        let mut rng = stream_rng(derive_seed(seed, k as u64), 0);
        let mut spins = vec![1i8; model.n_sites()];
        let mut series = Vec::with_capacity(samples);
        for it in 0..burn_in + samples {
            let edges = sample_edges_given_spins(&model, &spins, &mut rng);
            if it >= burn_in {
                series.push(if origin_wired(&model, &edges, origin) { 1.0 } else { 0.0 });
            }
            spins = sample_spins_given_edges(&model, &edges, &mut rng)?;
        }
        let s = summarize(&series);
        out.push(PercolationPoint { radius, estimate: s.mean, stderr: s.stderr, exact });
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::probability_table;

    fn tv(a: &[f64], b: &[f64]) -> f64 {
        a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / 2.0
    }

    fn small(bc: BoundaryCondition, field: FieldSpec) -> ModelInstance {
        ModelInstance::new(
            Region::explicit(2, [Site::xy(0, 1), Site::xy(1, 1), Site::xy(0, 2)]),
            bc,
            CouplingSpec::uniform(0.6),
            field,
        )
        .with_beta(0.8)
    }

    #[test]
    fn es_marginals_match_spin_and_rc_measures() {
        for bc in [BoundaryCondition::Plus, BoundaryCondition::Free, BoundaryCondition::Minus] {
            let inst = small(bc, FieldSpec::decay(0.4, 1.0));
            let model = GraphicalModel::from_instance(&inst, EdgeSetChoice::Touching).unwrap();
            let marg = es_marginals(&model).unwrap();
            let gibbs = probability_table(&inst.compile().unwrap()).unwrap();
            assert!(tv(&marg.spin, &gibbs) < 1e-12);
            assert!(tv(&marg.rc, &rc_exact_distribution(&model).unwrap()) < 1e-12);
        }
    }

    #[test]
    fn interior_edges_condition_frontier_sites() {
        let inst = small(BoundaryCondition::Plus, FieldSpec::decay(0.4, 1.0));
        let model = GraphicalModel::from_instance(&inst, EdgeSetChoice::Interior).unwrap();
        let marg = es_marginals(&model).unwrap();
        // every site of this region touches the exterior, so all are pinned to +1
        assert!((marg.spin[0b111] - 1.0).abs() < 1e-12);
    }

    #[test]
    fn sw_fixes_gibbs() {
        let inst = small(BoundaryCondition::Minus, FieldSpec::decay(0.4, 1.0));
        let model = GraphicalModel::from_instance(&inst, EdgeSetChoice::Touching).unwrap();
        let gibbs = probability_table(&inst.compile().unwrap()).unwrap();
        let next = sw_transition(&model, &gibbs).unwrap();
        assert!(tv(&next, &gibbs) < 1e-12);
        // and moves a non-stationary vector
        let mut delta = vec![0.0; gibbs.len()];
        delta[0] = 1.0;
        assert!(tv(&sw_transition(&model, &delta).unwrap(), &delta) > 1e-3);
    }

    #[test]
    fn rc_monotonicity_in_j() {
        let inst = |c: CouplingSpec| {
            let region = Region::explicit(2, [Site::xy(0, 0), Site::xy(1, 0), Site::xy(0, 1), Site::xy(1, 1)]);
            ModelInstance::new(region, BoundaryCondition::Plus, c, FieldSpec::Zero).with_universe(Universe::Full)
        };
        let choice = EdgeSetChoice::Interior;
        let hi = GraphicalModel::from_instance(&inst(CouplingSpec::uniform(0.3)), choice).unwrap();
        let lo = GraphicalModel::from_instance(&inst(CouplingSpec::LayerWeakened { j: 0.3, lambda: 0.2 }), choice).unwrap();
        let mut rng = stream_rng(4, 0);
        let events: Vec<_> = (0..30).map(|_| MonotoneFunction::random(hi.n_edges(), &mut rng)).collect();
        assert!(compare_rc_in_j(&lo, &hi, &events).unwrap().passed());
        let same = compare_rc_in_j(&hi, &hi, &events).unwrap();
        assert_eq!(same.worst_margin, 0.0);
        assert!(compare_rc_in_j(&hi, &lo, &events).is_err());
        let zero = hi.with_couplings(&vec![0.0; hi.n_edges()]).unwrap();
        let e0 = MonotoneFunction::bit(0);
        assert_eq!(mean(&rc_exact_distribution(&zero).unwrap(), &e0), 0.0);
    }

    #[test]
    fn rc_fkg_and_free_wired() {
        let inst = ModelInstance::new(Region::semi_box(2, 1, 2), BoundaryCondition::Plus, CouplingSpec::uniform(0.5), FieldSpec::decay(0.3, 2.0));
        let wired = GraphicalModel::from_instance(&inst, EdgeSetChoice::Interior).unwrap();
        assert!(check_rc_fkg(&wired, 100, 1).unwrap().passed());
        let r = check_free_below_wired(&inst, 100, 2).unwrap();
        assert!(r.passed(), "{r}");
    }

    #[test]
    fn rc_weight_is_multiplicative_over_disjoint_graphs() {
        let part = |sites: Vec<Site>| {
            let inst = ModelInstance::new(Region::explicit(2, sites), BoundaryCondition::Free, CouplingSpec::uniform(0.4), FieldSpec::decay(0.5, 1.0));
            GraphicalModel::from_instance(&inst, EdgeSetChoice::Touching).unwrap()
        };
        let a = part(vec![Site::xy(0, 1), Site::xy(1, 1)]);
        let b = part(vec![Site::xy(5, 2), Site::xy(5, 3)]);
        let ab = part(vec![Site::xy(0, 1), Site::xy(1, 1), Site::xy(5, 2), Site::xy(5, 3)]);
        for bits in 0..4u64 {
            let wa = super::super::rc_weight(&a, &EdgeConfiguration::from_bits(1, bits & 1));
            let wb = super::super::rc_weight(&b, &EdgeConfiguration::from_bits(1, bits >> 1));
            let wab = super::super::rc_weight(&ab, &EdgeConfiguration::from_bits(2, bits));
            assert!((wab - wa * wb).abs() < 1e-12 * wab.max(1.0));
        }
    }

    #[test]
    fn percolation_basics() {
        let setup = ProxySetup {
            origin: Site::xy(0, 0),
            universe: Universe::Full,
            couplings: CouplingSpec::uniform(0.0),
            field: FieldSpec::Zero,
            beta: 1.0,
        };
        let pts = percolation_proxy(&setup, &[0, 1, 2], 200, 10, 1).unwrap();
        assert_eq!(pts[0].estimate, 1.0);
        assert!(pts[1..].iter().all(|p| p.estimate == 0.0));
        assert_eq!(setup.model(2).unwrap().n_sites(), 9);
        assert_eq!(setup.model(1).unwrap().n_edges(), 4);
    }
}
