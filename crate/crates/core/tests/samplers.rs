mod common;

use common::{four_cycle, random_instance, tv};
use proptest::prelude::*;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use wetting_core::exact::{probability_table, ExactState};
use wetting_core::graphical::{
    es_marginals, heat_bath_edge_law, rc_exact_distribution, sw_step, sw_transition, EdgeSetChoice, GraphicalModel,
};
use wetting_core::lattice::{BoundaryCondition, Region, Site};
use wetting_core::model::{CouplingSpec, FieldSpec, ModelInstance, SpinConfiguration};
use wetting_core::rng::stream_rng;
use wetting_core::spin_mc::{estimate_gap, Chain, ProfileScope, Schedule, Start};

/// 99.9% quantile of the chi-square law with 15 degrees of freedom.
const CHI2_15_999: f64 = 37.697;

fn chi_square(counts: &[u64], probs: &[f64]) -> f64 {
    let total: u64 = counts.iter().sum();
    counts
        .iter()
        .zip(probs)
        .map(|(&c, &p)| {
            let e = p * total as f64;
            (c as f64 - e).powi(2) / e
        })
        .sum()
}

fn square(bc: BoundaryCondition) -> ModelInstance {
    let region = Region::explicit(2, [Site::xy(0, 1), Site::xy(1, 1), Site::xy(0, 2), Site::xy(1, 2)]);
    ModelInstance::new(region, bc, CouplingSpec::uniform(0.3), FieldSpec::decay(0.4, 1.5)).with_beta(1.0)
}

#[test]
fn heat_bath_samples_pass_goodness_of_fit() {
    let inst = square(BoundaryCondition::Minus);
    let probs = probability_table(&inst.compile().unwrap()).unwrap();
    let mut chain = Chain::new(&inst, Start::Random, 11).unwrap();
    chain.run(100);
    // thinned to ten sweeps so the samples are close enough to independent
    // for the chi-square quantile to apply
    let mut counts = vec![0u64; probs.len()];
    for _ in 0..1_000_000 {
        chain.run(10);
        counts[chain.configuration().to_bits() as usize] += 1;
    }
    let stat = chi_square(&counts, &probs);
    assert!(stat < CHI2_15_999, "chi-square {stat}");
}

#[test]
fn swendsen_wang_samples_pass_goodness_of_fit() {
    let inst = square(BoundaryCondition::Plus);
    let model = GraphicalModel::from_instance(&inst, EdgeSetChoice::Touching).unwrap();
    let probs = probability_table(&inst.compile().unwrap()).unwrap();
    let mut rng = stream_rng(12, 0);
    let mut spins = vec![-1i8; 4];
    let mut counts = vec![0u64; probs.len()];
    for k in 0..200_000 {
        spins = sw_step(&model, &spins, &mut rng).unwrap();
        if k >= 100 {
            counts[SpinConfiguration(spins.clone()).to_bits() as usize] += 1;
        }
    }
    let stat = chi_square(&counts, &probs);
    assert!(stat < CHI2_15_999, "chi-square {stat}");
}

#[test]
fn heat_bath_edge_law_on_a_cycle() {
    let model = GraphicalModel::from_instance(&four_cycle(), EdgeSetChoice::Touching).unwrap();
    assert_eq!(model.n_edges(), 4);
    for row in heat_bath_edge_law(&model, 200_000, 1000, 21).unwrap() {
        assert!(
            (row.frequency - row.exact).abs() <= 4.0 * row.stderr,
            "{:04b}: {} vs {} +- {}",
            row.bits,
            row.frequency,
            row.exact,
            row.stderr
        );
    }
}

#[test]
fn gap_estimates_are_non_negative_up_to_noise() {
    let inst = ModelInstance::new(
        Region::semi_box(2, 3, 4),
        BoundaryCondition::Plus,
        CouplingSpec::uniform(0.6),
        FieldSpec::decay(0.3, 2.0),
    );
    let g = estimate_gap(&inst, Schedule::new(4000, 500, 1), ProfileScope::Layer, 9).unwrap();
    let exact = ExactState::new(&inst).unwrap();
    let minus = ExactState::new(&inst.clone().with_bc(BoundaryCondition::Minus)).unwrap();
    for (k, s) in g.gap.layers.iter().enumerate() {
        assert!(s.mean >= -4.0 * s.stderr, "layer {k}: {} +- {}", s.mean, s.stderr);
    }
    // and the wall-layer gap agrees with the oracle
    let sys = exact.system();
    let wall: Vec<usize> = (0..sys.len()).filter(|&i| sys.sites()[i].height() == 1).collect();
    let want: f64 = wall.iter().map(|&i| exact.magnetization()[i] - minus.magnetization()[i]).sum::<f64>() / wall.len() as f64;
    let got = g.gap.at_height(1).unwrap();
    assert!((got.mean - want).abs() < 4.0 * got.stderr + 1e-3, "{} vs {want}", got.mean);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(40))]

    #[test]
    fn edwards_sokal_marginals(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (inst, model) = loop {
            let inst = random_instance(&mut rng, 10);
            let model = GraphicalModel::from_instance(&inst, EdgeSetChoice::Touching).unwrap();
            if model.n_edges() <= 12 {
                break (inst, model);
            }
        };
        let marg = es_marginals(&model).unwrap();
        let gibbs = probability_table(&inst.compile().unwrap()).unwrap();
        prop_assert!(tv(&marg.spin, &gibbs) <= 1e-12);
        prop_assert!(tv(&marg.rc, &rc_exact_distribution(&model).unwrap()) <= 1e-12);
    }

    #[test]
    fn swendsen_wang_operator_fixes_gibbs(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let (inst, model) = loop {
            let inst = random_instance(&mut rng, 6);
            let model = GraphicalModel::from_instance(&inst, EdgeSetChoice::Touching).unwrap();
            if model.n_sites() + model.n_edges() <= 18 {
                break (inst, model);
            }
        };
        let gibbs = probability_table(&inst.compile().unwrap()).unwrap();
        prop_assert!(tv(&sw_transition(&model, &gibbs).unwrap(), &gibbs) <= 1e-10);
    }
}
