#![allow(dead_code)]

use rand::seq::SliceRandom;
use rand::Rng;
use wetting_core::lattice::{BoundaryCondition, Region, Site, Universe};
use wetting_core::model::{CouplingSpec, FieldSpec, ModelInstance};

pub fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

/// Non-negative fields built from every family the model knows.
pub fn random_field<R: Rng>(rng: &mut R, full: bool) -> FieldSpec {
    let lambda = rng.gen_range(0.0..1.5);
    let delta = rng.gen_range(0.3..3.0);
    let base = match rng.gen_range(0..6) {
        0 => FieldSpec::Zero,
        1 => FieldSpec::decay(lambda, delta),
        2 => FieldSpec::CenteredDecay { h: lambda, delta },
        3 => FieldSpec::wall(lambda),
        4 => FieldSpec::decay(lambda, delta).plus(FieldSpec::wall(rng.gen_range(0.0..1.0))),
        _ => FieldSpec::LayerSequence((0..3).map(|_| rng.gen_range(0.0..1.0)).collect()),
    };
    if full && rng.gen_bool(0.5) {
        base.mirrored()
    } else {
        base
    }
}

/// A random connected-or-not subset of a small window, optionally reaching
/// below the wall, with random couplings, boundary condition and field.
pub fn random_instance<R: Rng>(rng: &mut R, max_sites: usize) -> ModelInstance {
    let full = rng.gen_bool(0.5);
    let w = rng.gen_range(1..=3i64);
    let h = rng.gen_range(1..=3i64);
    let y0 = if full { rng.gen_range(-1..=1) } else { 1 };
    let mut window: Vec<Site> = (0..w).flat_map(|x| (0..h).map(move |y| Site::xy(x, y0 + y))).collect();
    window.shuffle(rng);
    let k = rng.gen_range(1..=window.len().min(max_sites));
    let region = Region::explicit(2, window.into_iter().take(k));
    let bc = match rng.gen_range(0..4) {
        0 => BoundaryCondition::Plus,
        1 => BoundaryCondition::Minus,
        2 => BoundaryCondition::Free,
        _ => BoundaryCondition::MinusPlus,
    };
    let j = rng.gen_range(0.0..1.2);
    let couplings = if rng.gen_bool(0.5) {
        CouplingSpec::uniform(j)
    } else {
        CouplingSpec::LayerWeakened { j, lambda: rng.gen_range(0.0..1.5) }
    };
    let universe = if full { Universe::Full } else { Universe::SemiInfinite };
    ModelInstance::new(region, bc, couplings, random_field(rng, full))
        .with_universe(universe)
        .with_beta(rng.gen_range(0.3..1.5))
}

/// Four sites on a unit square with free boundary: the four edges form a cycle.
pub fn four_cycle() -> ModelInstance {
    let region = Region::explicit(2, [Site::xy(0, 1), Site::xy(1, 1), Site::xy(0, 2), Site::xy(1, 2)]);
    ModelInstance::new(region, BoundaryCondition::Free, CouplingSpec::uniform(0.5), FieldSpec::decay(0.4, 1.0))
        .with_beta(1.0)
}
