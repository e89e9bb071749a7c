//! Exact partition functions, expectations and free energies.
//!
//! Small systems are enumerated exhaustively; rectangular d = 2 regions can
//! also go through a column transfer matrix. Both engines carry directional
//! derivatives of `ln Z` along linear parameter paths, which is how every
//! integrand in this crate is evaluated exactly.

mod enumerate;
mod free_energy;
mod inequalities;
mod transfer;

pub use free_energy::{
    finite_interface_free_energy, finite_surface_free_energy, finite_wall_free_energy,
    interpolated_log_ratio, InterpolationReport, Sign, WallProblem,
};
pub use inequalities::{
    check_dvi, check_fkg, check_gap_monotone_in_field, check_tau_concavity_and_monotonicity,
    check_uniqueness_criterion, TauGrid,
};

use crate::error::{Error, Result};
use crate::lattice::Site;
use crate::model::{ModelInstance, SpinSystem};

/// Largest system enumerated exhaustively.
pub const ENUMERATION_CAP: usize = 24;
/// Largest column height the transfer matrix accepts.
pub const TRANSFER_HEIGHT_CAP: usize = 20;
/// Largest system for which full probability tables are built.
pub const TABLE_CAP: usize = 20;

/// Tangent of a linear path `J_e + t dJ_e`, `h_i + t dh_i` through the
/// interior couplings and site fields of a compiled system.
#[derive(Clone, Debug, PartialEq)]
pub struct Direction {
    pub couplings: Vec<f64>,
    pub field: Vec<f64>,
}

impl Direction {
    pub fn zero(sys: &SpinSystem) -> Self {
        Direction { couplings: vec![0.0; sys.edges().len()], field: vec![0.0; sys.len()] }
    }

    /// Field-only direction.
    pub fn field(sys: &SpinSystem, field: Vec<f64>) -> Self {
        assert_eq!(field.len(), sys.len());
        Direction { couplings: vec![0.0; sys.edges().len()], field }
    }

    /// Unit field direction at one site; its mean is that site's magnetisation.
    pub fn site(sys: &SpinSystem, i: usize) -> Self {
        let mut d = Self::zero(sys);
        d.field[i] = 1.0;
        d
    }

    /// `sum_e dJ_e s_a s_b + sum_i dh_i s_i`.
    pub fn observable(&self, sys: &SpinSystem, spins: &[i8]) -> f64 {
        let mut acc = 0.0;
        for (&(a, b, _), dj) in sys.edges().iter().zip(&self.couplings) {
            acc += dj * (spins[a as usize] * spins[b as usize]) as f64;
        }
        for (s, dh) in spins.iter().zip(&self.field) {
            acc += dh * *s as f64;
        }
        acc
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Engine {
    #[default]
    Auto,
    Enumeration,
    Transfer,
}

/// Result of one exact pass.
#[derive(Clone, Debug, PartialEq)]
pub struct Evaluation {
    pub log_z: f64,
    /// `<D_k>`, so that `d ln Z / dt_k = beta <D_k>`.
    pub direction_means: Vec<f64>,
    /// Means of spin products over each requested bit mask.
    pub mask_means: Vec<f64>,
    pub magnetization: Option<Vec<f64>>,
}

fn choose(sys: &SpinSystem, engine: Engine, needs_enumeration: bool) -> Result<Option<transfer::Layout>> {
    let n = sys.len();
    let layout = || transfer::layout(sys).filter(|l| l.height() <= TRANSFER_HEIGHT_CAP);
    match engine {
        Engine::Enumeration => {
            if n > ENUMERATION_CAP {
                return Err(Error::Capacity { what: "enumeration", size: n, cap: ENUMERATION_CAP });
            }
            Ok(None)
        }
        Engine::Transfer => {
            if needs_enumeration {
                return Err(Error::InvalidArgument("transfer engine cannot evaluate masks".into()));
            }
            match layout() {
                Some(l) => Ok(Some(l)),
                None => Err(Error::InvalidArgument(
                    "transfer engine needs a rectangular d = 2 region with height <= 20".into(),
                )),
            }
        }
        Engine::Auto => {
            if needs_enumeration {
                return choose(sys, Engine::Enumeration, true);
            }
            let lay = layout();
            match lay {
                Some(l) => {
                    let tm_cost = (n as f64) * 2f64.powi(l.height() as i32 + 1);
                    if n <= ENUMERATION_CAP && 2f64.powi(n as i32) <= tm_cost {
                        Ok(None)
                    } else {
                        Ok(Some(l))
                    }
                }
                None if n <= ENUMERATION_CAP => Ok(None),
                None => Err(Error::Capacity { what: "exact evaluation", size: n, cap: ENUMERATION_CAP }),
            }
        }
    }
}

/// Exact `ln Z` and derivative data for a compiled system.
pub fn evaluate(
    sys: &SpinSystem,
    directions: &[Direction],
    masks: &[u64],
    magnetization: bool,
    engine: Engine,
) -> Result<Evaluation> {
    for d in directions {
        if d.couplings.len() != sys.edges().len() || d.field.len() != sys.len() {
            return Err(Error::InvalidArgument("direction does not match the system".into()));
        }
    }
    if sys.is_empty() {
        return Ok(Evaluation {
            log_z: 0.0,
            direction_means: vec![0.0; directions.len()],
            mask_means: vec![1.0; masks.len()],
            magnetization: magnetization.then(Vec::new),
        });
    }
    match choose(sys, engine, !masks.is_empty())? {
        None => Ok(enumerate::enumerate(sys, directions, masks, magnetization)),
        Some(lay) => {
            if !magnetization {
                return Ok(transfer::transfer(sys, &lay, directions));
            }
            let mut all = directions.to_vec();
            all.extend((0..sys.len()).map(|i| Direction::site(sys, i)));
            let mut ev = transfer::transfer(sys, &lay, &all);
            let mag = ev.direction_means.split_off(directions.len());
            ev.magnetization = Some(mag);
            Ok(ev)
        }
    }
}

pub fn log_partition(instance: &ModelInstance) -> Result<f64> {
    let sys = instance.compile()?;
    Ok(evaluate(&sys, &[], &[], false, Engine::Auto)?.log_z)
}

/// Exact mean of the product of spins over `sites` (repeats cancel).
pub fn expectation(instance: &ModelInstance, sites: &[Site]) -> Result<f64> {
    let sys = instance.compile()?;
    let mut mask = 0u64;
    let mut idx = Vec::new();
    for s in sites {
        let i = sys
            .index_of(s)
            .ok_or_else(|| Error::InvalidArgument(format!("site {s} is not in the region")))?;
        idx.push(i);
        if i < 64 {
            mask ^= 1 << i;
        }
    }
    idx.sort_unstable();
    let mut odd = Vec::new();
    for chunk in idx.chunk_by(|a, b| a == b) {
        if chunk.len() % 2 == 1 {
            odd.push(chunk[0]);
        }
    }
    match odd.len() {
        0 => Ok(1.0),
        1 => Ok(evaluate(&sys, &[Direction::site(&sys, odd[0])], &[], false, Engine::Auto)?.direction_means[0]),
        _ => Ok(evaluate(&sys, &[], &[mask], false, Engine::Enumeration)?.mask_means[0]),
    }
}

/// Normalised Gibbs probabilities indexed by the bit encoding of the
/// configuration (bit `i` set means site `i` is `+1`).
pub fn probability_table(sys: &SpinSystem) -> Result<Vec<f64>> {
    if sys.len() > TABLE_CAP {
        return Err(Error::Capacity { what: "probability table", size: sys.len(), cap: TABLE_CAP });
    }
    Ok(enumerate::probability_table(sys))
}

/// Exact log-partition function with cached one- and two-point functions.
#[derive(Clone, Debug)]
pub struct ExactState {
    instance: ModelInstance,
    system: SpinSystem,
    log_partition: f64,
    magnetization: Vec<f64>,
    pairs: Option<Vec<f64>>,
}

impl ExactState {
    pub fn new(instance: &ModelInstance) -> Result<Self> {
        let system = instance.compile()?;
        let ev = evaluate(&system, &[], &[], true, Engine::Auto)?;
        Ok(ExactState {
            instance: instance.clone(),
            log_partition: ev.log_z,
            magnetization: ev.magnetization.unwrap_or_default(),
            system,
            pairs: None,
        })
    }

    /// Also tabulates every pair correlation (enumeration only).
    pub fn with_pairs(instance: &ModelInstance) -> Result<Self> {
        let system = instance.compile()?;
        let n = system.len();
        let mut masks = Vec::new();
        for i in 0..n {
            for j in i + 1..n {
                masks.push(1u64 << i | 1u64 << j);
            }
        }
        let ev = evaluate(&system, &[], &masks, true, Engine::Enumeration)?;
        let mut pairs = vec![1.0; n * n];
        let mut k = 0;
        for i in 0..n {
            for j in i + 1..n {
                pairs[i * n + j] = ev.mask_means[k];
                pairs[j * n + i] = ev.mask_means[k];
                k += 1;
            }
        }
        Ok(ExactState {
            instance: instance.clone(),
            log_partition: ev.log_z,
            magnetization: ev.magnetization.unwrap_or_default(),
            system,
            pairs: Some(pairs),
        })
    }

    pub fn instance(&self) -> &ModelInstance {
        &self.instance
    }

    pub fn system(&self) -> &SpinSystem {
        &self.system
    }

    pub fn log_partition(&self) -> f64 {
        self.log_partition
    }

    pub fn magnetization(&self) -> &[f64] {
        &self.magnetization
    }

    pub fn magnetization_at(&self, site: &Site) -> Option<f64> {
        self.system.index_of(site).map(|i| self.magnetization[i])
    }

    /// `<s_i s_j>` by flat index, when pairs were tabulated.
    pub fn pair(&self, i: usize, j: usize) -> Option<f64> {
        let n = self.system.len();
        self.pairs.as_ref().map(|p| p[i * n + j])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::{BoundaryCondition, Region, Universe};
    use crate::model::{CouplingSpec, FieldSpec};

    fn free_site(h: f64) -> ModelInstance {
        ModelInstance::new(
            Region::explicit(2, [Site::xy(0, 1)]),
            BoundaryCondition::Free,
            CouplingSpec::uniform(1.0),
            FieldSpec::LayerOnly { layer: 1, value: h },
        )
    }

    fn chain(j: f64) -> ModelInstance {
        ModelInstance::new(
            Region::explicit(2, [Site::xy(0, 1), Site::xy(1, 1)]),
            BoundaryCondition::Free,
            CouplingSpec::uniform(j),
            FieldSpec::Zero,
        )
    }

    #[test]
    fn single_site() {
        for h in [0.0, 0.3, -1.2] {
            let inst = free_site(h);
            assert!((log_partition(&inst).unwrap() - (2.0 * f64::cosh(h)).ln()).abs() < 1e-14);
            assert!((expectation(&inst, &[Site::xy(0, 1)]).unwrap() - h.tanh()).abs() < 1e-14);
        }
    }

    #[test]
    fn two_site_chain() {
        for j in [0.0, 0.5, 2.0] {
            let inst = chain(j);
            assert!((log_partition(&inst).unwrap() - (4.0 * j.cosh()).ln()).abs() < 1e-14);
            let c = expectation(&inst, &[Site::xy(0, 1), Site::xy(1, 1)]).unwrap();
            assert!((c - j.tanh()).abs() < 1e-14);
        }
    }

    #[test]
    fn strong_coupling_plus_boundary_is_saturated() {
        let inst = ModelInstance::new(
            Region::semi_box(2, 1, 2),
            BoundaryCondition::Plus,
            CouplingSpec::uniform(20.0),
            FieldSpec::Zero,
        );
        let st = ExactState::new(&inst).unwrap();
        assert!(st.magnetization().iter().all(|m| (m - 1.0).abs() < 1e-8));
    }

    #[test]
    fn spin_flip_symmetry() {
        let inst = ModelInstance::new(
            Region::semi_box(2, 1, 2),
            BoundaryCondition::Plus,
            CouplingSpec::uniform(0.7),
            FieldSpec::decay(0.4, 1.5),
        );
        let flipped = inst.spin_flipped().unwrap();
        assert!((log_partition(&inst).unwrap() - log_partition(&flipped).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn capacity_is_enforced() {
        let inst = ModelInstance::new(
            Region::extended_box(2, 3, crate::lattice::Reflection::Negation),
            BoundaryCondition::Plus,
            CouplingSpec::uniform(0.5),
            FieldSpec::Zero,
        );
        assert!(matches!(log_partition(&inst), Err(Error::Capacity { .. })));
    }

    #[test]
    fn transfer_matches_enumeration() {
        for (region, bc) in [
            (Region::semi_box(2, 1, 4), BoundaryCondition::Minus),
            (Region::semi_box(2, 2, 3), BoundaryCondition::Plus),
            (Region::full_box(2, 1, 2), BoundaryCondition::MinusPlus),
            (Region::semi_box(2, 0, 5), BoundaryCondition::Free),
        ] {
            let inst = ModelInstance::new(region, bc, CouplingSpec::uniform(0.6), FieldSpec::decay(0.5, 2.0))
                .with_beta(0.9);
            let sys = inst.compile().unwrap();
            let mut dir = Direction::zero(&sys);
            for (k, c) in dir.couplings.iter_mut().enumerate() {
                *c = 0.1 * (k % 3) as f64;
            }
            dir.field[0] = 1.0;
            let a = evaluate(&sys, &[dir.clone()], &[], true, Engine::Enumeration).unwrap();
            let b = evaluate(&sys, &[dir], &[], true, Engine::Transfer).unwrap();
            assert!((a.log_z - b.log_z).abs() <= 1e-10 * a.log_z.abs().max(1.0));
            assert!((a.direction_means[0] - b.direction_means[0]).abs() < 1e-10);
            for (x, y) in a.magnetization.unwrap().iter().zip(b.magnetization.unwrap()) {
                assert!((x - y).abs() < 1e-10);
            }
        }
    }

    #[test]
    fn direction_mean_is_a_derivative() {
        let inst = ModelInstance::new(
            Region::semi_box(2, 1, 3),
            BoundaryCondition::MinusPlus,
            CouplingSpec::uniform(0.4),
            FieldSpec::decay(0.3, 1.0),
        )
        .with_beta(0.8)
        .with_universe(Universe::SemiInfinite);
        let sys = inst.compile().unwrap();
        let mut dir = Direction::zero(&sys);
        dir.couplings[1] = 1.0;
        dir.field[2] = -0.5;
        let ev = evaluate(&sys, &[dir.clone()], &[], false, Engine::Auto).unwrap();
        let shift = |t: f64| {
            let c: Vec<f64> = sys.edges().iter().zip(&dir.couplings).map(|(e, d)| e.2 + t * d).collect();
            let f: Vec<f64> = sys.field().iter().zip(&dir.field).map(|(h, d)| h + t * d).collect();
            evaluate(&sys.with_parameters(&c, &f), &[], &[], false, Engine::Auto).unwrap().log_z
        };
        let eps = 1e-5;
        let fd = (shift(eps) - shift(-eps)) / (2.0 * eps);
        assert!((fd - sys.beta() * ev.direction_means[0]).abs() < 1e-8);
    }

    #[test]
    fn brute_force_agrees_with_gray_code() {
        let inst = ModelInstance::new(
            Region::semi_box(2, 1, 3),
            BoundaryCondition::Plus,
            CouplingSpec::uniform(0.3),
            FieldSpec::decay(1.0, 2.0),
        );
        let sys = inst.compile().unwrap();
        let table = probability_table(&sys).unwrap();
        let m0: f64 = table.iter().enumerate().map(|(b, p)| if b & 1 == 1 { *p } else { -*p }).sum();
        let st = ExactState::new(&inst).unwrap();
        assert!((st.magnetization()[0] - m0).abs() < 1e-13);
    }
}
