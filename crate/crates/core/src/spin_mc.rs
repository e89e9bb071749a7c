//! Single-spin-flip Monte Carlo: heat bath and Metropolis chains, coupled
//! plus/minus chains, layer profiles and snapshots.

use rand::Rng;
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::lattice::BoundaryCondition;
use crate::model::{ModelInstance, SpinConfiguration, SpinSystem};
use crate::rng::stream_rng;
use crate::stats::{summarize, SeriesSummary};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum UpdateKind {
    #[default]
    HeatBath,
    Metropolis,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum SiteOrder {
    #[default]
    Raster,
    Random,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Start {
    /// The sign of the boundary condition; all plus when it has none.
    #[default]
    BoundarySign,
    Plus,
    Minus,
    Random,
}

/// Heat-bath probability of `+1` given the local field.
#[inline]
pub fn heat_bath_plus(beta: f64, local: f64) -> f64 {
    1.0 / (1.0 + (-2.0 * beta * local).exp())
}

fn initial_spins(sys: &SpinSystem, bc: &BoundaryCondition, start: Start, rng: &mut ChaCha8Rng) -> Vec<i8> {
    let n = sys.len();
    match start {
        Start::Plus => vec![1; n],
        Start::Minus => vec![-1; n],
        Start::BoundarySign => vec![bc.sign().unwrap_or(1); n],
        Start::Random => (0..n).map(|_| if rng.gen::<bool>() { 1 } else { -1 }).collect(),
    }
}

/// One Markov chain over a compiled system.
#[derive(Clone, Debug)]
pub struct Chain {
    sys: SpinSystem,
    spins: Vec<i8>,
    rng: ChaCha8Rng,
    sweeps: u64,
    kind: UpdateKind,
    order: SiteOrder,
}

impl Chain {
    pub fn new(instance: &ModelInstance, start: Start, seed: u64) -> Result<Self> {
        let sys = instance.compile()?;
        let mut rng = stream_rng(seed, 0);
        let spins = initial_spins(&sys, &instance.bc, start, &mut rng);
        Ok(Chain { sys, spins, rng, sweeps: 0, kind: UpdateKind::HeatBath, order: SiteOrder::Raster })
    }

    pub fn with_kind(mut self, kind: UpdateKind) -> Self {
        self.kind = kind;
        self
    }

    pub fn with_order(mut self, order: SiteOrder) -> Self {
        self.order = order;
        self
    }

    pub fn with_spins(mut self, spins: SpinConfiguration) -> Result<Self> {
        if spins.len() != self.sys.len() {
            return Err(Error::Configuration("configuration size does not match the region".into()));
        }
        self.spins = spins.0;
        Ok(self)
    }

    pub fn system(&self) -> &SpinSystem {
        &self.sys
    }

    pub fn spins(&self) -> &[i8] {
        &self.spins
    }

    pub fn configuration(&self) -> SpinConfiguration {
        SpinConfiguration(self.spins.clone())
    }

    pub fn sweep_count(&self) -> u64 {
        self.sweeps
    }

    pub fn energy(&self) -> f64 {
        self.sys.energy(&self.spins)
    }

    #[inline]
    fn update(&mut self, i: usize) {
        let beta = self.sys.beta();
        match self.kind {
            UpdateKind::HeatBath => {
                let p = heat_bath_plus(beta, self.sys.local_field(&self.spins, i));
                self.spins[i] = if self.rng.gen::<f64>() < p { 1 } else { -1 };
            }
            UpdateKind::Metropolis => {
                let de = self.sys.delta_energy(&self.spins, i);
                let u: f64 = self.rng.gen();
                if de <= 0.0 || u < (-beta * de).exp() {
                    self.spins[i] = -self.spins[i];
                }
            }
        }
    }

    /// One pass of `len()` updates.
    pub fn sweep(&mut self) {
        let n = self.sys.len();
        for k in 0..n {
            let i = match self.order {
                SiteOrder::Raster => k,
                SiteOrder::Random => self.rng.gen_range(0..n),
            };
            self.update(i);
        }
        self.sweeps += 1;
    }

    pub fn run(&mut self, sweeps: u64) {
        for _ in 0..sweeps {
            self.sweep();
        }
    }
}

/// Heat-bath chains for the plus and minus boundary conditions driven by the
/// same uniforms; the minus chain never exceeds the plus chain.
#[derive(Clone, Debug)]
pub struct CoupledChains {
    plus: SpinSystem,
    minus: SpinSystem,
    up: Vec<i8>,
    down: Vec<i8>,
    rng: ChaCha8Rng,
    sweeps: u64,
}

impl CoupledChains {
    /// `instance.bc` is replaced by Plus and Minus; chains start all plus and
    /// all minus respectively.
    pub fn new(instance: &ModelInstance, seed: u64) -> Result<Self> {
        let plus = instance.clone().with_bc(BoundaryCondition::Plus).compile()?;
        let minus = instance.clone().with_bc(BoundaryCondition::Minus).compile()?;
        let n = plus.len();
        Ok(CoupledChains { plus, minus, up: vec![1; n], down: vec![-1; n], rng: stream_rng(seed, 0), sweeps: 0 })
    }

    pub fn sweep(&mut self) {
        let beta = self.plus.beta();
        for i in 0..self.plus.len() {
            let u: f64 = self.rng.gen();
            let pu = heat_bath_plus(beta, self.plus.local_field(&self.up, i));
            let pd = heat_bath_plus(beta, self.minus.local_field(&self.down, i));
            self.up[i] = if u < pu { 1 } else { -1 };
            self.down[i] = if u < pd { 1 } else { -1 };
        }
        self.sweeps += 1;
    }

    pub fn plus_spins(&self) -> &[i8] {
        &self.up
    }

    pub fn minus_spins(&self) -> &[i8] {
        &self.down
    }

    pub fn system(&self) -> &SpinSystem {
        &self.plus
    }

    /// Sites where the minus chain is above the plus chain.
    pub fn order_violations(&self) -> usize {
        self.up.iter().zip(&self.down).filter(|(u, d)| d > u).count()
    }

    pub fn sweep_count(&self) -> u64 {
        self.sweeps
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Schedule {
    pub sweeps: u64,
    pub burn_in: u64,
    pub thin: u64,
}

impl Schedule {
    pub fn new(sweeps: u64, burn_in: u64, thin: u64) -> Self {
        Schedule { sweeps, burn_in, thin }
    }

    pub fn validate(&self) -> Result<()> {
        if self.sweeps <= self.burn_in || self.thin == 0 {
            return Err(Error::InvalidArgument(format!(
                "invalid schedule: sweeps {} must exceed burn-in {} and thin must be positive",
                self.sweeps, self.burn_in
            )));
        }
        Ok(())
    }

    fn is_sample(&self, sweep: u64) -> bool {
        sweep > self.burn_in && (sweep - self.burn_in).is_multiple_of(self.thin)
    }
}

/// Which sites of a layer are averaged.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ProfileScope {
    /// Every site of the layer.
    #[default]
    Layer,
    /// Only the column through the lateral origin.
    CentralColumn,
}

/// Site groups for each layer height present in the system.
#[derive(Clone, Debug)]
pub struct Layers {
    pub heights: Vec<i64>,
    pub members: Vec<Vec<usize>>,
}

impl Layers {
    pub fn new(sys: &SpinSystem, scope: ProfileScope) -> Self {
        let mut heights: Vec<i64> = sys.sites().iter().map(|s| s.height()).collect();
        heights.sort_unstable();
        heights.dedup();
        let mut members = vec![Vec::new(); heights.len()];
        for (i, s) in sys.sites().iter().enumerate() {
            let central = s.coords()[..s.dim() - 1].iter().all(|&c| c == 0);
            if scope == ProfileScope::Layer || central {
                let k = heights.binary_search(&s.height()).unwrap();
                members[k].push(i);
            }
        }
        Layers { heights, members }
    }

    pub fn means(&self, spins: &[i8]) -> Vec<f64> {
        self.members
            .iter()
            .map(|m| {
                if m.is_empty() {
                    0.0
                } else {
                    m.iter().map(|&i| spins[i] as f64).sum::<f64>() / m.len() as f64
                }
            })
            .collect()
    }
}

/// Per-layer means with their error bars.
#[derive(Clone, Debug, PartialEq)]
pub struct ProfileEstimate {
    pub heights: Vec<i64>,
    pub layers: Vec<SeriesSummary>,
}

impl ProfileEstimate {
    fn from_series(heights: Vec<i64>, series: &[Vec<f64>]) -> Self {
        ProfileEstimate { heights, layers: series.iter().map(|s| summarize(s)).collect() }
    }

    pub fn at_height(&self, h: i64) -> Option<&SeriesSummary> {
        self.heights.iter().position(|&x| x == h).map(|k| &self.layers[k])
    }
}

/// Layer magnetisation profile from one heat-bath chain.
pub fn estimate_profile(
    instance: &ModelInstance,
    schedule: Schedule,
    scope: ProfileScope,
    seed: u64,
) -> Result<ProfileEstimate> {
    estimate_profile_with(instance, schedule, scope, seed, UpdateKind::HeatBath)
}

/// [`estimate_profile`] with a chosen single-site update.
pub fn estimate_profile_with(
    instance: &ModelInstance,
    schedule: Schedule,
    scope: ProfileScope,
    seed: u64,
    kind: UpdateKind,
) -> Result<ProfileEstimate> {
    schedule.validate()?;
    let mut chain = Chain::new(instance, Start::BoundarySign, seed)?.with_kind(kind);
    let layers = Layers::new(chain.system(), scope);
    let mut series = vec![Vec::new(); layers.heights.len()];
    for s in 1..=schedule.sweeps {
        chain.sweep();
        if schedule.is_sample(s) {
            for (k, m) in layers.means(chain.spins()).into_iter().enumerate() {
                series[k].push(m);
            }
        }
    }
    Ok(ProfileEstimate::from_series(layers.heights, &series))
}

/// Plus, minus and gap profiles from coupled chains.
#[derive(Clone, Debug, PartialEq)]
pub struct GapEstimate {
    pub plus: ProfileEstimate,
    pub minus: ProfileEstimate,
    pub gap: ProfileEstimate,
}

pub fn estimate_gap(
    instance: &ModelInstance,
    schedule: Schedule,
    scope: ProfileScope,
    seed: u64,
) -> Result<GapEstimate> {
    schedule.validate()?;
    let mut chains = CoupledChains::new(instance, seed)?;
    let layers = Layers::new(chains.system(), scope);
    let k = layers.heights.len();
    let (mut sp, mut sm, mut sg) = (vec![Vec::new(); k], vec![Vec::new(); k], vec![Vec::new(); k]);
    for s in 1..=schedule.sweeps {
        chains.sweep();
        if schedule.is_sample(s) {
            let p = layers.means(chains.plus_spins());
            let m = layers.means(chains.minus_spins());
            for q in 0..k {
                sp[q].push(p[q]);
                sm[q].push(m[q]);
                sg[q].push(p[q] - m[q]);
            }
        }
    }
    let h = layers.heights;
    Ok(GapEstimate {
        plus: ProfileEstimate::from_series(h.clone(), &sp),
        minus: ProfileEstimate::from_series(h.clone(), &sm),
        gap: ProfileEstimate::from_series(h, &sg),
    })
}

/// Two-level raster of a d = 2 configuration: row 0 is the top layer, the
/// last row the lowest one; `0` is a plus spin (black), `1` a minus spin.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Raster {
    pub width: usize,
    pub height: usize,
    pub pixels: Vec<u8>,
}

impl Raster {
    pub fn from_configuration(sys: &SpinSystem, spins: &[i8]) -> Result<Self> {
        let sites = sys.sites();
        if let Some(s) = sites.first() {
            if s.dim() != 2 {
                return Err(Error::UnsupportedDimension(s.dim()));
            }
        } else {
            return Ok(Raster { width: 0, height: 0, pixels: Vec::new() });
        }
        let xs = sites.iter().map(|s| s.coords()[0]);
        let ys = sites.iter().map(|s| s.coords()[1]);
        let (x0, x1) = (xs.clone().min().unwrap(), xs.max().unwrap());
        let (y0, y1) = (ys.clone().min().unwrap(), ys.max().unwrap());
        let width = (x1 - x0 + 1) as usize;
        let height = (y1 - y0 + 1) as usize;
        // sites outside the region stay white
        let mut pixels = vec![1u8; width * height];
        for (s, &v) in sites.iter().zip(spins) {
            let col = (s.coords()[0] - x0) as usize;
            let row = (y1 - s.coords()[1]) as usize;
            pixels[row * width + col] = if v > 0 { 0 } else { 1 };
        }
        Ok(Raster { width, height, pixels })
    }

    /// Fraction of plus pixels in a row.
    pub fn row_plus_fraction(&self, row: usize) -> f64 {
        let r = &self.pixels[row * self.width..(row + 1) * self.width];
        r.iter().filter(|&&p| p == 0).count() as f64 / self.width as f64
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Snapshot {
    pub raster: Raster,
    pub configuration: SpinConfiguration,
    /// Mean spin of the wall layer in the final configuration.
    pub wall_magnetization: f64,
}

/// Runs a heat-bath chain from the boundary sign and renders its final state.
pub fn snapshot(instance: &ModelInstance, sweeps: u64, seed: u64) -> Result<Snapshot> {
    if instance.region.dim() != 2 {
        return Err(Error::UnsupportedDimension(instance.region.dim()));
    }
    let mut chain = Chain::new(instance, Start::BoundarySign, seed)?;
    chain.run(sweeps);
    let raster = Raster::from_configuration(chain.system(), chain.spins())?;
    let layers = Layers::new(chain.system(), ProfileScope::Layer);
    let wall_magnetization = layers
        .heights
        .iter()
        .position(|&h| h == 1)
        .map(|k| layers.means(chain.spins())[k])
        .unwrap_or(0.0);
    Ok(Snapshot { raster, configuration: chain.configuration(), wall_magnetization })
}
