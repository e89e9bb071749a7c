//! Conditional samplers of the Edwards–Sokal coupling and the single-edge
//! random-cluster heat bath.

use rand::Rng;

use crate::error::{Error, Result};

use super::{ClusterPartition, EdgeConfiguration, GraphicalModel};

/// Opens each agreeing edge with probability `1 - e^{-2 beta J_e}`.
pub fn sample_edges_given_spins<R: Rng + ?Sized>(model: &GraphicalModel, spins: &[i8], rng: &mut R) -> EdgeConfiguration {
    let beta = model.beta();
    let open = model
        .edges()
        .iter()
        .map(|e| {
            let agree = model.vertex_spin(spins, e.a) == model.vertex_spin(spins, e.b);
            // one uniform per edge keeps streams aligned across spin states
            let u: f64 = rng.gen();
            agree && u < -(-2.0 * beta * e.coupling).exp_m1()
        })
        .collect();
    EdgeConfiguration { open }
}

/// Constant spins on clusters: boundary clusters copy their ghost, free
/// clusters are `+1` with probability `1 / (1 + e^{-2 beta S_C})`.
pub fn sample_spins_given_edges<R: Rng + ?Sized>(
    model: &GraphicalModel,
    config: &EdgeConfiguration,
    rng: &mut R,
) -> Result<Vec<i8>> {
    let part = ClusterPartition::build(model, config);
    let beta = model.beta();
    let mut value = Vec::with_capacity(part.clusters.len());
    for (k, c) in part.clusters.iter().enumerate() {
        let s = match (c.touches_plus, c.touches_minus) {
            (true, true) => {
                return Err(Error::Conditioning(format!(
                    "cluster {k} joins plus and minus boundary spins"
                )))
            }
            (true, false) => 1,
            (false, true) => -1,
            (false, false) => {
                let p = 1.0 / (1.0 + (-2.0 * beta * c.field_sum).exp());
                if rng.gen::<f64>() < p {
                    1
                } else {
                    -1
                }
            }
        };
        value.push(s);
    }
    Ok(part.label.iter().map(|&c| value[c]).collect())
}

/// One generalised Swendsen–Wang update.
pub fn sw_step<R: Rng + ?Sized>(model: &GraphicalModel, spins: &[i8], rng: &mut R) -> Result<Vec<i8>> {
    let edges = sample_edges_given_spins(model, spins, rng);
    sample_spins_given_edges(model, &edges, rng)
}

/// Probability that edge `e` is open given all other edges.
pub fn edge_open_probability(model: &GraphicalModel, config: &EdgeConfiguration, e: usize) -> f64 {
    let edge = model.edges()[e];
    let beta = model.beta();
    let log_b = (2.0 * beta * edge.coupling).exp_m1().ln();
    if log_b == f64::NEG_INFINITY {
        return 0.0;
    }
    let part = ClusterPartition::build_skipping(model, config, Some(e));
    let n = model.n_sites();
    // the cluster an endpoint belongs to, or a bare ghost
    let cluster_of = |v: usize| if v < n { Some(part.label[v]) } else { None };
    let (ca, cb) = (cluster_of(edge.a), cluster_of(edge.b));
    let log_odds = match (ca, cb) {
        (Some(a), Some(b)) if a == b => log_b,
        (Some(a), Some(b)) => {
            let (x, y) = (&part.clusters[a], &part.clusters[b]);
            let merged = super::Cluster {
                sites: Vec::new(),
                field_sum: x.field_sum + y.field_sum,
                touches_plus: x.touches_plus || y.touches_plus,
                touches_minus: x.touches_minus || y.touches_minus,
            };
            log_b + merged.log_factor(beta) - x.log_factor(beta) - y.log_factor(beta)
        }
        (Some(a), None) | (None, Some(a)) => {
            let ghost = if ca.is_none() { edge.a } else { edge.b };
            let x = &part.clusters[a];
            let plus = ghost == super::GHOST_PLUS;
            let already = if plus { x.touches_plus } else { x.touches_minus };
            if already {
                log_b
            } else {
                let merged = super::Cluster {
                    sites: Vec::new(),
                    field_sum: x.field_sum,
                    touches_plus: x.touches_plus || plus,
                    touches_minus: x.touches_minus || !plus,
                };
                log_b + merged.log_factor(beta) - x.log_factor(beta)
            }
        }
        (None, None) => log_b,
    };
    if log_odds == f64::NEG_INFINITY {
        0.0
    } else {
        1.0 / (1.0 + (-log_odds).exp())
    }
}

/// Resamples edge `e` from its conditional law given the rest.
pub fn rc_heat_bath_edge<R: Rng + ?Sized>(
    model: &GraphicalModel,
    config: &mut EdgeConfiguration,
    e: usize,
    rng: &mut R,
) {
    let p = edge_open_probability(model, config, e);
    config.open[e] = rng.gen::<f64>() < p;
}
