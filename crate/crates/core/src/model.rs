//! Couplings, external fields and finite-volume Hamiltonians.
//!
//! The wall term `-lambda * sum_{wall} sigma_i` is not a separate parameter:
//! it is expressed by adding [`FieldSpec::WallOnly`] to the field.

use std::collections::HashMap;
use std::ops::{Deref, DerefMut};

use crate::error::{Error, Result};
use crate::lattice::{boundary_edges, neighbors, BoundaryCondition, Region, Site, Universe};

/// Nearest-neighbour ferromagnetic couplings.
#[derive(Clone, Debug, PartialEq)]
pub enum CouplingSpec {
    Uniform { j: f64 },
    /// `lambda / 2` on vertical edges between layer 0 and layers `+-1`, `j` elsewhere.
    LayerWeakened { j: f64, lambda: f64 },
}

impl CouplingSpec {
    pub fn uniform(j: f64) -> Self {
        CouplingSpec::Uniform { j }
    }

    /// Coupling of the pair `(a, b)`; zero unless they are nearest neighbours.
    pub fn coupling(&self, a: &Site, b: &Site) -> f64 {
        if !a.is_adjacent(b) {
            return 0.0;
        }
        match *self {
            CouplingSpec::Uniform { j } => j,
            CouplingSpec::LayerWeakened { j, lambda } => {
                let (ha, hb) = (a.height(), b.height());
                let touches_zero = (ha == 0 && hb.abs() == 1) || (hb == 0 && ha.abs() == 1);
                if touches_zero {
                    lambda / 2.0
                } else {
                    j
                }
            }
        }
    }

    pub fn bulk(&self) -> f64 {
        match *self {
            CouplingSpec::Uniform { j } | CouplingSpec::LayerWeakened { j, .. } => j,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            CouplingSpec::Uniform { j } => j.is_finite() && j >= 0.0,
            CouplingSpec::LayerWeakened { j, lambda } => {
                j.is_finite() && lambda.is_finite() && j >= 0.0 && lambda >= 0.0
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("couplings must be finite and >= 0: {self:?}")))
        }
    }
}

/// Declarative external field.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldSpec {
    Zero,
    /// `lambda` on the wall (height 1), zero elsewhere.
    WallOnly { lambda: f64 },
    /// `value` on the layer of the given height, zero elsewhere.
    LayerOnly { layer: i64, value: f64 },
    /// `lambda * i_d^(-delta)` on the half-space, zero below it.
    DecayHat { lambda: f64, delta: f64 },
    /// `h` at the origin, `h * |i|_1^(-delta)` elsewhere.
    CenteredDecay { h: f64, delta: f64 },
    /// `values[l - 1]` on the layer of height `l >= 1`; zero beyond the list and below the wall.
    LayerSequence(Vec<f64>),
    /// The base field on the half-space, the base field at `-i + e_d` below it.
    Mirrored(Box<FieldSpec>),
    Sum(Vec<FieldSpec>),
}

impl FieldSpec {
    pub fn decay(lambda: f64, delta: f64) -> Self {
        FieldSpec::DecayHat { lambda, delta }
    }

    pub fn wall(lambda: f64) -> Self {
        FieldSpec::WallOnly { lambda }
    }

    pub fn mirrored(self) -> Self {
        FieldSpec::Mirrored(Box::new(self))
    }

    pub fn plus(self, other: FieldSpec) -> Self {
        match self {
            FieldSpec::Zero => other,
            FieldSpec::Sum(mut parts) => {
                parts.push(other);
                FieldSpec::Sum(parts)
            }
            base => FieldSpec::Sum(vec![base, other]),
        }
    }

    pub fn value_at(&self, site: &Site) -> f64 {
        match self {
            FieldSpec::Zero => 0.0,
            FieldSpec::WallOnly { lambda } => {
                if site.is_on_wall() {
                    *lambda
                } else {
                    0.0
                }
            }
            FieldSpec::LayerOnly { layer, value } => {
                if site.height() == *layer {
                    *value
                } else {
                    0.0
                }
            }
            FieldSpec::DecayHat { lambda, delta } => {
                let h = site.height();
                if h >= 1 {
                    lambda * (h as f64).powf(-delta)
                } else {
                    0.0
                }
            }
            FieldSpec::CenteredDecay { h, delta } => {
                let r = site.l1_norm();
                if r == 0 {
                    *h
                } else {
                    h * (r as f64).powf(-delta)
                }
            }
            FieldSpec::LayerSequence(values) => {
                let h = site.height();
                if h >= 1 {
                    values.get((h - 1) as usize).copied().unwrap_or(0.0)
                } else {
                    0.0
                }
            }
            FieldSpec::Mirrored(base) => {
                if site.is_in_half_space() {
                    base.value_at(site)
                } else {
                    base.value_at(&site.mirror())
                }
            }
            FieldSpec::Sum(parts) => parts.iter().map(|p| p.value_at(site)).sum(),
        }
    }

    /// The field multiplied by `c` (every variant is linear in its amplitude).
    pub fn scaled(&self, c: f64) -> FieldSpec {
        match self {
            FieldSpec::Zero => FieldSpec::Zero,
            FieldSpec::WallOnly { lambda } => FieldSpec::WallOnly { lambda: c * lambda },
            FieldSpec::LayerOnly { layer, value } => {
                FieldSpec::LayerOnly { layer: *layer, value: c * value }
            }
            FieldSpec::DecayHat { lambda, delta } => {
                FieldSpec::DecayHat { lambda: c * lambda, delta: *delta }
            }
            FieldSpec::CenteredDecay { h, delta } => {
                FieldSpec::CenteredDecay { h: c * h, delta: *delta }
            }
            FieldSpec::LayerSequence(v) => FieldSpec::LayerSequence(v.iter().map(|x| c * x).collect()),
            FieldSpec::Mirrored(b) => FieldSpec::Mirrored(Box::new(b.scaled(c))),
            FieldSpec::Sum(parts) => FieldSpec::Sum(parts.iter().map(|p| p.scaled(c)).collect()),
        }
    }

    /// Checks parameter ranges. Signed amplitudes are allowed here; the
    /// inequality checkers reject negative field values separately.
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        match self {
            FieldSpec::Zero => Ok(()),
            FieldSpec::WallOnly { lambda } if !lambda.is_finite() => bad(format!("lambda = {lambda}")),
            FieldSpec::LayerOnly { value, .. } if !value.is_finite() => bad(format!("value = {value}")),
            FieldSpec::DecayHat { lambda, delta } => {
                if !lambda.is_finite() || !(delta.is_finite() && *delta > 0.0) {
                    bad(format!("decay field needs finite lambda and delta > 0, got {lambda}, {delta}"))
                } else {
                    Ok(())
                }
            }
            FieldSpec::CenteredDecay { h, delta } => {
                if !h.is_finite() || !(delta.is_finite() && *delta > 0.0) {
                    bad(format!("centered field needs finite h and delta > 0, got {h}, {delta}"))
                } else {
                    Ok(())
                }
            }
            FieldSpec::LayerSequence(v) if v.iter().any(|x| !x.is_finite()) => {
                bad("layer sequence has non-finite entries".into())
            }
            FieldSpec::Mirrored(b) => b.validate(),
            FieldSpec::Sum(parts) => parts.iter().try_for_each(FieldSpec::validate),
            _ => Ok(()),
        }
    }

    /// Exponents below or at 1 make the induced layer sequence non-summable.
    pub fn is_summable(&self) -> bool {
        match self {
            FieldSpec::DecayHat { lambda, delta } => *lambda == 0.0 || *delta > 1.0,
            FieldSpec::Mirrored(b) => b.is_summable(),
            FieldSpec::Sum(parts) => parts.iter().all(FieldSpec::is_summable),
            _ => true,
        }
    }
}

/// `field_at` as a free function.
pub fn field_at(field: &FieldSpec, site: &Site) -> f64 {
    field.value_at(site)
}

/// One spin (`+-1`) per region site, in the order of [`Region::sites`].
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct SpinConfiguration(pub Vec<i8>);

impl SpinConfiguration {
    pub fn uniform(n: usize, spin: i8) -> Self {
        SpinConfiguration(vec![spin; n])
    }

    /// Bit `k` of `bits` set means site `k` is `+1`.
    pub fn from_bits(n: usize, bits: u64) -> Self {
        SpinConfiguration((0..n).map(|k| if bits >> k & 1 == 1 { 1 } else { -1 }).collect())
    }

    pub fn to_bits(&self) -> u64 {
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (k, &s)| if s > 0 { acc | 1 << k } else { acc })
    }

    pub fn flipped(&self) -> Self {
        SpinConfiguration(self.0.iter().map(|s| -s).collect())
    }
}

impl Deref for SpinConfiguration {
    type Target = Vec<i8>;
    fn deref(&self) -> &Vec<i8> {
        &self.0
    }
}

impl DerefMut for SpinConfiguration {
    fn deref_mut(&mut self) -> &mut Vec<i8> {
        &mut self.0
    }
}

/// Everything that determines one finite Gibbs measure.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelInstance {
    pub region: Region,
    pub universe: Universe,
    pub bc: BoundaryCondition,
    pub couplings: CouplingSpec,
    pub field: FieldSpec,
    /// Weights are `exp(-beta * H)`.
    pub beta: f64,
}

impl ModelInstance {
    pub fn new(region: Region, bc: BoundaryCondition, couplings: CouplingSpec, field: FieldSpec) -> Self {
        let universe = region.default_universe();
        ModelInstance { region, universe, bc, couplings, field, beta: 1.0 }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_universe(mut self, universe: Universe) -> Self {
        self.universe = universe;
        self
    }

    pub fn with_bc(mut self, bc: BoundaryCondition) -> Self {
        self.bc = bc;
        self
    }

    pub fn with_field(mut self, field: FieldSpec) -> Self {
        self.field = field;
        self
    }

    pub fn validate(&self) -> Result<()> {
        self.region.validate()?;
        self.couplings.validate()?;
        self.field.validate()?;
        if !(self.beta.is_finite() && self.beta > 0.0) {
            return Err(Error::InvalidArgument(format!("beta must be > 0, got {}", self.beta)));
        }
        Ok(())
    }

    /// Global spin flip: field, boundary and (implicitly) configuration.
    pub fn spin_flipped(&self) -> Result<ModelInstance> {
        Ok(ModelInstance {
            bc: self.bc.flipped_for(&self.region, self.universe)?,
            field: self.field.scaled(-1.0),
            ..self.clone()
        })
    }

    pub fn compile(&self) -> Result<SpinSystem> {
        SpinSystem::build(self)
    }
}

/// Interior/frontier split of an instance, flattened for hot loops.
#[derive(Clone, Debug)]
pub struct SpinSystem {
    sites: Vec<Site>,
    index: HashMap<Site, usize>,
    field: Vec<f64>,
    boundary_field: Vec<f64>,
    edges: Vec<(u32, u32, f64)>,
    frontier: Vec<FrontierEdge>,
    adj_offsets: Vec<u32>,
    adj: Vec<(u32, f64)>,
    beta: f64,
}

/// An edge from a region site to a frozen exterior spin.
#[derive(Clone, Debug, PartialEq)]
pub struct FrontierEdge {
    pub site: usize,
    pub outside: Site,
    pub spin: i8,
    pub coupling: f64,
}

impl SpinSystem {
    fn build(inst: &ModelInstance) -> Result<Self> {
        inst.validate()?;
        let sites = inst.region.sites()?;
        let sets = boundary_edges(&inst.region, inst.universe)?;
        let index: HashMap<Site, usize> = sites.iter().cloned().enumerate().map(|(k, s)| (s, k)).collect();
        let field: Vec<f64> = sites.iter().map(|s| inst.field.value_at(s)).collect();
        let edges: Vec<(u32, u32, f64)> = sets
            .interior
            .iter()
            .map(|e| {
                let (a, b) = e.endpoints();
                (index[a] as u32, index[b] as u32, inst.couplings.coupling(a, b))
            })
            .collect();
        let mut frontier = Vec::new();
        if inst.bc != BoundaryCondition::Free {
            for (inside, outside) in sets.frontier {
                let spin = inst.bc.exterior_spin(&outside)?.expect("non-free boundary");
                let coupling = inst.couplings.coupling(&inside, &outside);
                frontier.push(FrontierEdge { site: index[&inside], outside, spin, coupling });
            }
        }
        Ok(Self::assemble(sites, index, field, edges, frontier, inst.beta))
    }

    fn assemble(
        sites: Vec<Site>,
        index: HashMap<Site, usize>,
        field: Vec<f64>,
        edges: Vec<(u32, u32, f64)>,
        frontier: Vec<FrontierEdge>,
        beta: f64,
    ) -> Self {
        let n = sites.len();
        let mut boundary_field = vec![0.0; n];
        for f in &frontier {
            boundary_field[f.site] += f.coupling * f.spin as f64;
        }
        let mut degree = vec![0u32; n];
        for &(a, b, _) in &edges {
            degree[a as usize] += 1;
            degree[b as usize] += 1;
        }
        let mut adj_offsets = vec![0u32; n + 1];
        for k in 0..n {
            adj_offsets[k + 1] = adj_offsets[k] + degree[k];
        }
        let mut fill = adj_offsets.clone();
        let mut adj = vec![(0u32, 0.0); adj_offsets[n] as usize];
        for &(a, b, j) in &edges {
            adj[fill[a as usize] as usize] = (b, j);
            fill[a as usize] += 1;
            adj[fill[b as usize] as usize] = (a, j);
            fill[b as usize] += 1;
        }
        SpinSystem { sites, index, field, boundary_field, edges, frontier, adj_offsets, adj, beta }
    }

    /// Same geometry with new interior couplings and site fields.
    pub fn with_parameters(&self, couplings: &[f64], field: &[f64]) -> Self {
        assert_eq!(couplings.len(), self.edges.len());
        assert_eq!(field.len(), self.sites.len());
        let edges = self.edges.iter().zip(couplings).map(|(&(a, b, _), &j)| (a, b, j)).collect();
        Self::assemble(
            self.sites.clone(),
            self.index.clone(),
            field.to_vec(),
            edges,
            self.frontier.clone(),
            self.beta,
        )
    }

    pub fn len(&self) -> usize {
        self.sites.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sites.is_empty()
    }

    pub fn sites(&self) -> &[Site] {
        &self.sites
    }

    pub fn index_of(&self, site: &Site) -> Option<usize> {
        self.index.get(site).copied()
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn field(&self) -> &[f64] {
        &self.field
    }

    pub fn edges(&self) -> &[(u32, u32, f64)] {
        &self.edges
    }

    pub fn frontier(&self) -> &[FrontierEdge] {
        &self.frontier
    }

    /// Site field plus the pull of frozen exterior neighbours.
    pub fn effective_field(&self, i: usize) -> f64 {
        self.field[i] + self.boundary_field[i]
    }

    pub fn neighbors(&self, i: usize) -> &[(u32, f64)] {
        &self.adj[self.adj_offsets[i] as usize..self.adj_offsets[i + 1] as usize]
    }

    /// `sum_j J_ij sigma_j + h_eff_i`.
    #[inline]
    pub fn local_field(&self, spins: &[i8], i: usize) -> f64 {
        let mut acc = self.field[i] + self.boundary_field[i];
        for &(j, c) in self.neighbors(i) {
            acc += c * spins[j as usize] as f64;
        }
        acc
    }

    /// `H(flip_i sigma) - H(sigma)`, without beta.
    #[inline]
    pub fn delta_energy(&self, spins: &[i8], i: usize) -> f64 {
        2.0 * spins[i] as f64 * self.local_field(spins, i)
    }

    /// Hamiltonian without beta, summed in a fixed edge order.
    pub fn energy(&self, spins: &[i8]) -> f64 {
        let mut e = 0.0;
        for &(a, b, j) in &self.edges {
            e -= j * (spins[a as usize] * spins[b as usize]) as f64;
        }
        for (i, &s) in spins.iter().enumerate() {
            e -= (self.field[i] + self.boundary_field[i]) * s as f64;
        }
        e
    }
}

/// Hamiltonian by direct walk over the lattice neighbourhoods (beta not applied).
pub fn hamiltonian(instance: &ModelInstance, config: &SpinConfiguration) -> Result<f64> {
    instance.validate()?;
    let sites = instance.region.sites()?;
    if config.len() != sites.len() {
        return Err(Error::Configuration(format!(
            "configuration has {} spins, region has {} sites",
            config.len(),
            sites.len()
        )));
    }
    let position: HashMap<&Site, usize> = sites.iter().enumerate().map(|(k, s)| (s, k)).collect();
    let mut energy = 0.0;
    for (k, site) in sites.iter().enumerate() {
        let sk = config[k] as f64;
        for nb in neighbors(site, instance.universe) {
            let j = instance.couplings.coupling(site, &nb);
            match position.get(&nb) {
                Some(&m) if m > k => energy -= j * sk * config[m] as f64,
                Some(_) => {}
                None => {
                    if let Some(eta) = instance.bc.exterior_spin(&nb)? {
                        energy -= j * sk * eta as f64;
                    }
                }
            }
        }
        energy -= instance.field.value_at(site) * sk;
    }
    Ok(energy)
}

/// `H(config with site flipped) - H(config)` via the compiled neighbourhood.
pub fn local_energy_delta(instance: &ModelInstance, config: &SpinConfiguration, site: &Site) -> Result<f64> {
    let sys = instance.compile()?;
    let i = sys
        .index_of(site)
        .ok_or_else(|| Error::InvalidArgument(format!("{site} is not in the region")))?;
    Ok(sys.delta_energy(config, i))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::lattice::Reflection;

    fn one_site(bc: BoundaryCondition, field: FieldSpec) -> ModelInstance {
        ModelInstance::new(Region::explicit(2, [Site::xy(0, 1)]), bc, CouplingSpec::uniform(1.0), field)
    }

    #[test]
    fn field_values() {
        assert_eq!(FieldSpec::decay(1.0, 2.0).value_at(&Site::xy(5, 2)), 0.25);
        let centered = FieldSpec::CenteredDecay { h: 1.0, delta: 1.0 };
        assert_eq!(centered.value_at(&Site::xy(0, 0)), 1.0);
        assert_eq!(centered.value_at(&Site::xy(1, -1)), 0.5);
        let mirrored = FieldSpec::decay(1.0, 1.0).mirrored();
        assert_eq!(mirrored.value_at(&Site::xy(0, 0)), 1.0);
        assert_eq!(mirrored.value_at(&Site::xy(0, -1)), 0.5);
        let seq = FieldSpec::LayerSequence(vec![0.5, 0.25]);
        assert_eq!(seq.value_at(&Site::xy(0, 2)), 0.25);
        assert_eq!(seq.value_at(&Site::xy(0, 3)), 0.0);
        let sum = FieldSpec::decay(1.0, 1.0).plus(FieldSpec::wall(2.0));
        assert_eq!(sum.value_at(&Site::xy(0, 1)), 3.0);
        assert_eq!(sum.value_at(&Site::xy(0, 2)), 0.5);
    }

    #[test]
    fn field_validation() {
        assert!(FieldSpec::decay(1.0, 0.0).validate().is_err());
        assert!(FieldSpec::decay(1.0, -1.0).validate().is_err());
        assert!(FieldSpec::Sum(vec![FieldSpec::wall(f64::NAN)]).validate().is_err());
        assert!(!FieldSpec::decay(1.0, 0.5).is_summable());
        assert!(FieldSpec::decay(1.0, 1.5).is_summable());
    }

    #[test]
    fn single_site_energies() {
        let plus = one_site(BoundaryCondition::Plus, FieldSpec::Zero);
        let up = SpinConfiguration(vec![1]);
        let down = SpinConfiguration(vec![-1]);
        assert_eq!(hamiltonian(&plus, &up).unwrap(), -3.0);
        assert_eq!(hamiltonian(&plus, &down).unwrap(), 3.0);
        let free = one_site(BoundaryCondition::Free, FieldSpec::wall(2.0));
        assert_eq!(hamiltonian(&free, &up).unwrap(), -2.0);

        assert_eq!(local_energy_delta(&plus, &up, &Site::xy(0, 1)).unwrap(), 6.0);
        let h = 0.7;
        let free = one_site(BoundaryCondition::Free, FieldSpec::wall(h));
        assert!((local_energy_delta(&free, &up, &Site::xy(0, 1)).unwrap() - 2.0 * h).abs() < 1e-15);
    }

    #[test]
    fn balanced_neighbourhood_has_zero_delta() {
        let inst = ModelInstance::new(
            Region::semi_box(2, 1, 1),
            BoundaryCondition::Free,
            CouplingSpec::uniform(1.0),
            FieldSpec::Zero,
        );
        let cfg = SpinConfiguration(vec![1, 1, -1]);
        assert_eq!(local_energy_delta(&inst, &cfg, &Site::xy(0, 1)).unwrap(), 0.0);
    }

    #[test]
    fn missing_fixed_spin_is_an_error() {
        let inst = one_site(BoundaryCondition::Fixed(HashMap::new()), FieldSpec::Zero);
        assert!(matches!(
            hamiltonian(&inst, &SpinConfiguration(vec![1])),
            Err(Error::Configuration(_))
        ));
    }

    #[test]
    fn weakened_couplings() {
        let weak = CouplingSpec::LayerWeakened { j: 1.0, lambda: 0.4 };
        assert_eq!(weak.coupling(&Site::xy(0, 0), &Site::xy(0, 1)), 0.2);
        assert_eq!(weak.coupling(&Site::xy(0, -1), &Site::xy(0, 0)), 0.2);
        assert_eq!(weak.coupling(&Site::xy(0, 0), &Site::xy(1, 0)), 1.0);
        assert_eq!(weak.coupling(&Site::xy(0, 1), &Site::xy(0, 2)), 1.0);
        assert_eq!(weak.coupling(&Site::xy(0, 1), &Site::xy(0, 3)), 0.0);
    }

    #[test]
    fn compiled_energy_matches_direct_walk() {
        let inst = ModelInstance::new(
            Region::extended_box(2, 2, Reflection::HalfPlane),
            BoundaryCondition::MinusPlus,
            CouplingSpec::LayerWeakened { j: 0.8, lambda: 0.3 },
            FieldSpec::decay(0.5, 1.5).mirrored(),
        );
        let sys = inst.compile().unwrap();
        for bits in [0u64, 1, 0b1_0110_1101, 0xF_FFFF, 0x5_5555] {
            let cfg = SpinConfiguration::from_bits(sys.len(), bits);
            let direct = hamiltonian(&inst, &cfg).unwrap();
            assert!((direct - sys.energy(&cfg)).abs() < 1e-12);
        }
    }
}
