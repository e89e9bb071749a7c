//! `snapshot`, `profile` and `figures`: Monte Carlo runs on the configured model.

use rayon::prelude::*;
use wetting_core::io::{csv_float, pgm};
use wetting_core::model::{FieldSpec, ModelInstance};
use wetting_core::rng::derive_seed;
use wetting_core::spin_mc::{estimate_gap, estimate_profile_with, Chain, Layers, ProfileEstimate, ProfileScope, Raster, Start};
use wetting_core::stats::SeriesSummary;

use crate::config::{ExperimentConfig, Format};
use crate::output::Artifacts;
use crate::streams;
use crate::Outcome;

pub(crate) fn instance(cfg: &ExperimentConfig) -> ModelInstance {
    let m = &cfg.model;
    ModelInstance::new(m.region.region(m.dim), m.bc.bc(), m.coupling.clone(), m.field.clone())
        .with_universe(cfg.universe())
        .with_beta(m.beta)
}

/// Final state of one chain after `run.sweeps` sweeps.
fn final_chain(cfg: &ExperimentConfig, inst: &ModelInstance, seed: u64) -> wetting_core::Result<Chain> {
    let mut chain = Chain::new(inst, Start::BoundarySign, seed)?.with_kind(cfg.run.update);
    chain.run(cfg.run.sweeps);
    Ok(chain)
}

pub fn snapshot(cfg: &ExperimentConfig, out: &Artifacts) -> Outcome {
    let inst = instance(cfg);
    let chain = final_chain(cfg, &inst, derive_seed(cfg.run.seed, streams::SNAPSHOT))?;
    let raster = Raster::from_configuration(chain.system(), chain.spins())?;
    out.write("snapshot.pgm", Format::Pgm, &pgm(&raster))?;
    let layers = Layers::new(chain.system(), ProfileScope::Layer);
    let mut csv = String::from("layer,magnetization\n");
    for (h, m) in layers.heights.iter().zip(layers.means(chain.spins())) {
        csv.push_str(&format!("{h},{}\n", csv_float(m)));
    }
    out.write("snapshot.csv", Format::Csv, &csv)?;
    println!("snapshot: {}x{} raster after {} sweeps", raster.width, raster.height, cfg.run.sweeps);
    Ok(())
}

/// Pools independent chains: the mean of the means, with errors added in
/// quadrature.
fn pool(runs: &[ProfileEstimate]) -> ProfileEstimate {
    let k = runs.len() as f64;
    let layers = (0..runs[0].heights.len())
        .map(|q| {
            let s: Vec<&SeriesSummary> = runs.iter().map(|r| &r.layers[q]).collect();
            SeriesSummary {
                mean: s.iter().map(|x| x.mean).sum::<f64>() / k,
                stderr: s.iter().map(|x| x.stderr * x.stderr).sum::<f64>().sqrt() / k,
                tau_int: s.iter().map(|x| x.tau_int).sum::<f64>() / k,
                samples: s.iter().map(|x| x.samples).sum(),
            }
        })
        .collect();
    ProfileEstimate { heights: runs[0].heights.clone(), layers }
}

fn profile_csv(p: &ProfileEstimate) -> String {
    let mut csv = String::from("layer,mean,stderr,tau_int,samples\n");
    for (h, s) in p.heights.iter().zip(&p.layers) {
        csv.push_str(&format!("{h},{},{},{},{}\n", csv_float(s.mean), csv_float(s.stderr), csv_float(s.tau_int), s.samples));
    }
    csv
}

pub fn profile(cfg: &ExperimentConfig, out: &Artifacts) -> Outcome {
    let inst = instance(cfg);
    let base = derive_seed(cfg.run.seed, streams::PROFILE_CHAINS);
    let runs = (0..cfg.run.chains.max(1))
        .into_par_iter()
        .map(|k| estimate_profile_with(&inst, cfg.run.schedule(), cfg.run.scope, derive_seed(base, k as u64), cfg.run.update))
        .collect::<wetting_core::Result<Vec<_>>>()?;
    let pooled = pool(&runs);
    out.write("profile.csv", Format::Csv, &profile_csv(&pooled))?;
    if let Some(wall) = pooled.layers.first() {
        println!("profile: {} layers, {} chains, m(layer {}) = {:+.4} +- {:.4}", pooled.heights.len(), runs.len(), pooled.heights[0], wall.mean, wall.stderr);
    }
    if cfg.run.gap {
        let g = estimate_gap(&inst, cfg.run.schedule(), cfg.run.scope, derive_seed(cfg.run.seed, streams::GAP_CHAINS))?;
        let mut csv = String::from("layer,plus,minus,gap,gap_stderr\n");
        for (q, h) in g.gap.heights.iter().enumerate() {
            csv.push_str(&format!(
                "{h},{},{},{},{}\n",
                csv_float(g.plus.layers[q].mean),
                csv_float(g.minus.layers[q].mean),
                csv_float(g.gap.layers[q].mean),
                csv_float(g.gap.layers[q].stderr)
            ));
        }
        out.write("gap.csv", Format::Csv, &csv)?;
    }
    Ok(())
}

/// Wall strengths of the two figures: a wet and a dry wall.
const FIGURE_LAMBDAS: [f64; 2] = [1.0, 0.03];

pub fn figures(cfg: &ExperimentConfig, out: &Artifacts) -> Outcome {
    let base = derive_seed(cfg.run.seed, streams::FIGURES);
    let results = FIGURE_LAMBDAS
        .par_iter()
        .enumerate()
        .map(|(k, &lambda)| {
            let inst = instance(cfg).with_field(FieldSpec::wall(lambda));
            let seed = derive_seed(base, k as u64);
            let chain = final_chain(cfg, &inst, seed)?;
            let raster = Raster::from_configuration(chain.system(), chain.spins())?;
            let p = estimate_profile_with(&inst, cfg.run.schedule(), ProfileScope::Layer, derive_seed(seed, 1), cfg.run.update)?;
            let wall = p.layers.first().cloned().expect("non-empty region");
            Ok((lambda, raster, wall))
        })
        .collect::<wetting_core::Result<Vec<_>>>()?;
    let mut csv = String::from("figure,lambda,wall_magnetization,stderr,samples\n");
    for (k, (lambda, raster, wall)) in results.iter().enumerate() {
        out.write(&format!("figure{}.pgm", k + 1), Format::Pgm, &pgm(raster))?;
        csv.push_str(&format!("{},{},{},{},{}\n", k + 1, csv_float(*lambda), csv_float(wall.mean), csv_float(wall.stderr), wall.samples));
        println!("figure {}: lambda = {lambda}, wall magnetization {:+.4} +- {:.4}", k + 1, wall.mean, wall.stderr);
    }
    out.write("figures.csv", Format::Csv, &csv)?;
    Ok(())
}
