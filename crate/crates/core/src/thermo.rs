//! Wall free energy by thermodynamic integration and scans for the
//! critical wall influence.

use crate::error::{Error, Result};
use crate::exact::{evaluate, Direction, Engine};
use crate::lattice::{BoundaryCondition, Region};
use crate::model::{CouplingSpec, FieldSpec, ModelInstance, SpinSystem};
use crate::quadrature::QuadratureRule;
use crate::rng::derive_seed;
use crate::spin_mc::{CoupledChains, Layers, ProfileScope, Schedule};
use crate::stats::summarize;

/// A field linear in its strength `s`.
#[derive(Clone, Debug, PartialEq)]
pub enum FieldFamily {
    /// `DecayHat(s, delta)`.
    Decay { delta: f64 },
    /// `WallOnly(s)`.
    Wall,
}

impl FieldFamily {
    pub fn at(&self, s: f64) -> FieldSpec {
        match self {
            FieldFamily::Decay { delta } => FieldSpec::decay(s, *delta),
            FieldFamily::Wall => FieldSpec::wall(s),
        }
    }

    /// `d h_l / d s` for layer `l >= 1`.
    pub fn slope(&self, layer: i64) -> f64 {
        match self {
            FieldFamily::Decay { delta } => (layer as f64).powf(-delta),
            FieldFamily::Wall => {
                if layer == 1 {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_summable(&self) -> bool {
        match self {
            FieldFamily::Decay { delta } => *delta > 1.0,
            FieldFamily::Wall => true,
        }
    }

    pub fn label(&self) -> String {
        match self {
            FieldFamily::Decay { delta } => format!("decay(delta={delta})"),
            FieldFamily::Wall => "wall".into(),
        }
    }
}

/// Layer weights applied to the plus/minus gaps.
#[derive(Clone, Debug, PartialEq)]
pub enum Weights {
    /// The family's own slope; integrating gives the wall free energy.
    Slope,
    /// `l^{-delta}` regardless of the family, used to compare scans.
    Decay(f64),
}

/// How an integrand value is obtained.
#[derive(Clone, Debug, PartialEq)]
pub enum Estimator {
    Exact,
    MonteCarlo { schedule: Schedule, seed: u64 },
}

impl Estimator {
    fn label(&self) -> &'static str {
        match self {
            Estimator::Exact => "exact",
            Estimator::MonteCarlo { .. } => "mc",
        }
    }
}

/// Box, couplings and field family for a thermodynamic integration.
#[derive(Clone, Debug, PartialEq)]
pub struct ThermoSetup {
    pub dim: usize,
    /// Lateral half-width.
    pub n: i64,
    /// Box height.
    pub m: i64,
    pub j: f64,
    pub beta: f64,
    pub family: FieldFamily,
    /// Number of layers entering the integrand.
    pub depth: i64,
    pub scope: ProfileScope,
    pub weights: Weights,
}

impl ThermoSetup {
    /// `SemiBox(n, n)` in d = 2, full depth, wall-averaged gaps.
    pub fn new(n: i64, j: f64, family: FieldFamily) -> Self {
        ThermoSetup { dim: 2, n, m: n, j, beta: 1.0, family, depth: n, scope: ProfileScope::Layer, weights: Weights::Slope }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_box(mut self, n: i64, m: i64) -> Self {
        let full = self.depth == self.m;
        self.n = n;
        self.m = m;
        self.depth = if full { m } else { self.depth.min(m) };
        self
    }

    pub fn with_depth(mut self, depth: i64) -> Self {
        self.depth = depth;
        self
    }

    pub fn with_scope(mut self, scope: ProfileScope) -> Self {
        self.scope = scope;
        self
    }

    pub fn with_weights(mut self, weights: Weights) -> Self {
        self.weights = weights;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.depth < 0 || self.depth > self.m {
            return Err(Error::InvalidArgument(format!("depth {} outside 0..={}", self.depth, self.m)));
        }
        if let FieldFamily::Decay { delta } = self.family {
            if !(delta > 0.0) {
                return Err(Error::InvalidArgument(format!("delta must be positive, got {delta}")));
            }
        }
        if !(self.beta > 0.0) || !(self.j >= 0.0) {
            return Err(Error::InvalidArgument("beta must be positive and J non-negative".into()));
        }
        Ok(())
    }

    pub fn instance(&self, s: f64) -> ModelInstance {
        ModelInstance::new(
            Region::semi_box(self.dim, self.n, self.m),
            BoundaryCondition::Plus,
            CouplingSpec::uniform(self.j),
            self.family.at(s),
        )
        .with_beta(self.beta)
    }

    fn weight(&self, layer: i64) -> f64 {
        match &self.weights {
            Weights::Slope => self.family.slope(layer),
            Weights::Decay(delta) => (layer as f64).powf(-delta),
        }
    }

    /// Crude bound on the integrand dropped by truncating at `depth`:
    /// `beta * sum_{l > depth} 2 w_l` over the box height.
    pub fn truncation_bound(&self) -> f64 {
        (self.depth + 1..=self.m).map(|l| 2.0 * self.beta * self.weight(l)).sum()
    }
}

/// Integrand of the wall free energy at field strength `s`.
#[derive(Clone, Debug, PartialEq)]
pub struct IntegrandSample {
    pub s: f64,
    /// `w_l (<s_l>^+ - <s_l>^-)` for `l = 1..=depth`.
    pub gap_terms: Vec<f64>,
    pub term_stderr: Vec<f64>,
    /// `beta * sum_l gap_terms[l]`.
    pub total: f64,
    pub stderr: f64,
}

fn layer_groups(sys: &SpinSystem, setup: &ThermoSetup) -> Vec<Vec<usize>> {
    let layers = Layers::new(sys, setup.scope);
    (1..=setup.depth)
        .map(|l| layers.heights.iter().position(|&h| h == l).map(|k| layers.members[k].clone()).unwrap_or_default())
        .collect()
}

pub fn gap_integrand(setup: &ThermoSetup, s: f64, estimator: &Estimator) -> Result<IntegrandSample> {
    setup.validate()?;
    if !(s >= 0.0) {
        return Err(Error::InvalidArgument(format!("field strength must be non-negative, got {s}")));
    }
    let inst = setup.instance(s);
    let weights: Vec<f64> = (1..=setup.depth).map(|l| setup.weight(l)).collect();
    match estimator {
        Estimator::Exact => {
            let plus = inst.compile()?;
            let minus = inst.clone().with_bc(BoundaryCondition::Minus).compile()?;
            let groups = layer_groups(&plus, setup);
            let dirs: Vec<Direction> = groups
                .iter()
                .map(|g| {
                    let mut d = Direction::zero(&plus);
                    for &i in g {
                        d.field[i] = 1.0 / g.len() as f64;
                    }
                    d
                })
                .collect();
            let ep = evaluate(&plus, &dirs, &[], false, Engine::Auto)?;
            let em = evaluate(&minus, &dirs, &[], false, Engine::Auto)?;
            let gap_terms: Vec<f64> = weights
                .iter()
                .zip(ep.direction_means.iter().zip(&em.direction_means))
                .map(|(w, (a, b))| w * (a - b))
                .collect();
            let total = setup.beta * gap_terms.iter().sum::<f64>();
            Ok(IntegrandSample { s, term_stderr: vec![0.0; gap_terms.len()], gap_terms, total, stderr: 0.0 })
        }
        Estimator::MonteCarlo { schedule, seed } => {
            schedule.validate()?;
            let mut chains = CoupledChains::new(&inst, *seed)?;
            let groups = layer_groups(chains.system(), setup);
            let mean = |spins: &[i8], g: &[usize]| {
                if g.is_empty() {
                    0.0
                } else {
                    g.iter().map(|&i| spins[i] as f64).sum::<f64>() / g.len() as f64
                }
            };
            let mut terms = vec![Vec::new(); groups.len()];
            let mut totals = Vec::new();
            for sweep in 1..=schedule.sweeps {
                chains.sweep();
                if sweep > schedule.burn_in && (sweep - schedule.burn_in) % schedule.thin == 0 {
                    let mut t = 0.0;
                    for (k, g) in groups.iter().enumerate() {
                        let v = weights[k] * (mean(chains.plus_spins(), g) - mean(chains.minus_spins(), g));
                        terms[k].push(v);
                        t += v;
                    }
                    totals.push(setup.beta * t);
                }
            }
            let term_stats: Vec<_> = terms.iter().map(|t| summarize(t)).collect();
            let tot = summarize(&totals);
            Ok(IntegrandSample {
                s,
                gap_terms: term_stats.iter().map(|t| t.mean).collect(),
                term_stderr: term_stats.iter().map(|t| t.stderr).collect(),
                total: tot.mean,
                stderr: tot.stderr,
            })
        }
    }
}

/// Per-node estimator: Monte Carlo nodes get their own derived seeds.
fn node_estimator(estimator: &Estimator, node: u64) -> Estimator {
    match estimator {
        Estimator::Exact => Estimator::Exact,
        Estimator::MonteCarlo { schedule, seed } => {
            Estimator::MonteCarlo { schedule: *schedule, seed: derive_seed(*seed, node) }
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct TauPoint {
    pub lambda: f64,
    pub tau: f64,
    pub stderr: f64,
    pub nodes: usize,
}

/// `int_0^lambda integrand(s) ds` with the given rule.
pub fn tau_w_by_integration(
    setup: &ThermoSetup,
    lambda: f64,
    rule: &QuadratureRule,
    estimator: &Estimator,
) -> Result<TauPoint> {
    if !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!("lambda must be non-negative, got {lambda}")));
    }
    if lambda == 0.0 {
        return Ok(TauPoint { lambda, tau: 0.0, stderr: 0.0, nodes: 0 });
    }
    let nodes = rule.nodes(0.0, lambda)?;
    let (mut tau, mut var) = (0.0, 0.0);
    for (k, &(s, w)) in nodes.iter().enumerate() {
        let sample = gap_integrand(setup, s, &node_estimator(estimator, k as u64))?;
        tau += w * sample.total;
        var += (w * sample.stderr).powi(2);
    }
    Ok(TauPoint { lambda, tau, stderr: var.sqrt(), nodes: nodes.len() })
}

#[derive(Clone, Debug, PartialEq)]
pub struct TauCurve {
    pub lambdas: Vec<f64>,
    pub taus: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub source: &'static str,
    pub n: i64,
    pub m: i64,
    pub depth: i64,
    pub rule: String,
    pub truncation_bound: f64,
    /// Set when the decay exponent makes the field non-summable.
    pub non_summable: bool,
    /// Largest second difference in units of its combined error (or raw when exact).
    pub concavity_excess: f64,
}

impl TauCurve {
    /// Whether every second difference stays below `k` combined standard errors
    /// plus `slack`.
    pub fn is_concave(&self, k: f64, slack: f64) -> bool {
        (2..self.taus.len()).all(|i| {
            let (l0, l1, l2) = (self.lambdas[i - 2], self.lambdas[i - 1], self.lambdas[i]);
            let s0 = (self.taus[i - 1] - self.taus[i - 2]) / (l1 - l0);
            let s1 = (self.taus[i] - self.taus[i - 1]) / (l2 - l1);
            let err = (self.stderrs[i - 2].powi(2) + 2.0 * self.stderrs[i - 1].powi(2) + self.stderrs[i].powi(2)).sqrt()
                / (l1 - l0).min(l2 - l1);
            s1 - s0 <= k * err + slack
        })
    }
}

/// The wall free energy on a sorted grid starting at 0. The exact estimator
/// integrates each interval with `rule`; Monte Carlo uses the trapezoid rule
/// on the grid itself.
pub fn tau_curve(setup: &ThermoSetup, grid: &[f64], rule: &QuadratureRule, estimator: &Estimator) -> Result<TauCurve> {
    check_grid(grid)?;
    let mut taus = vec![0.0];
    let mut stderrs = vec![0.0];
    match estimator {
        Estimator::Exact => {
            for w in grid.windows(2) {
                let nodes = rule.nodes(w[0], w[1])?;
                let mut acc = 0.0;
                for (s, wt) in nodes {
                    acc += wt * gap_integrand(setup, s, estimator)?.total;
                }
                taus.push(taus.last().unwrap() + acc);
                stderrs.push(0.0);
            }
        }
        Estimator::MonteCarlo { .. } => {
            let samples = integrand_on_grid(setup, grid, estimator)?;
            let mut var = 0.0;
            for k in 1..grid.len() {
                let h = grid[k] - grid[k - 1];
                taus.push(taus[k - 1] + h * (samples[k - 1].total + samples[k].total) / 2.0);
                // grid points are independent chains; each interior point feeds two panels
                var += (h / 2.0 * samples[k - 1].stderr).powi(2) + (h / 2.0 * samples[k].stderr).powi(2);
                stderrs.push(var.sqrt());
            }
        }
    }
    let mut curve = TauCurve {
        lambdas: grid.to_vec(),
        taus,
        stderrs,
        source: estimator.label(),
        n: setup.n,
        m: setup.m,
        depth: setup.depth,
        rule: match estimator {
            Estimator::Exact => rule.label(),
            Estimator::MonteCarlo { .. } => format!("trapezoid-grid({})", grid.len()),
        },
        truncation_bound: setup.truncation_bound(),
        non_summable: !setup.family.is_summable(),
        concavity_excess: 0.0,
    };
    curve.concavity_excess = (2..grid.len())
        .map(|i| {
            let s0 = (curve.taus[i - 1] - curve.taus[i - 2]) / (grid[i - 1] - grid[i - 2]);
            let s1 = (curve.taus[i] - curve.taus[i - 1]) / (grid[i] - grid[i - 1]);
            s1 - s0
        })
        .fold(f64::NEG_INFINITY, f64::max);
    Ok(curve)
}

fn check_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() || grid[0] != 0.0 || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("grid must start at 0 and increase strictly".into()));
    }
    Ok(())
}

fn integrand_on_grid(setup: &ThermoSetup, grid: &[f64], estimator: &Estimator) -> Result<Vec<IntegrandSample>> {
    let job = |k: usize| gap_integrand(setup, grid[k], &node_estimator(estimator, k as u64));
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        (0..grid.len()).into_par_iter().map(job).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..grid.len()).map(job).collect()
    }
}

/// Integrand curve of one box in a scan.
#[derive(Clone, Debug, PartialEq)]
pub struct BoxScan {
    pub n: i64,
    pub m: i64,
    pub samples: Vec<IntegrandSample>,
    /// Smallest grid value from which the integrand stays below the threshold.
    pub crossing: Option<f64>,
    /// Smallest grid value from which the mean integrand over the rest of the
    /// grid is below the threshold (onset of the `tau` plateau).
    pub plateau: Option<f64>,
    /// Largest increase of the integrand between neighbouring grid points,
    /// in units of combined standard errors (raw difference when exact).
    pub monotonicity_excess: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanResult {
    pub boxes: Vec<BoxScan>,
    /// Largest crossing across the ladder; `None` when some box never crosses.
    pub estimate: Option<f64>,
    /// Spread of the crossings plus the local grid spacing.
    pub uncertainty: f64,
    pub threshold: f64,
}

impl ScanResult {
    pub fn is_open_ended(&self) -> bool {
        self.estimate.is_none()
    }
}

/// Smallest grid value after which the integrand stays below `threshold`, for
/// every box of the ladder.
pub fn lambda_c_scan(
    setup: &ThermoSetup,
    grid: &[f64],
    ladder: &[(i64, i64)],
    estimator: &Estimator,
    threshold: f64,
) -> Result<ScanResult> {
    if !(threshold > 0.0) {
        return Err(Error::InvalidArgument("threshold must be positive".into()));
    }
    if grid.is_empty() || grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidArgument("grid must be sorted and strictly increasing".into()));
    }
    let mut boxes = Vec::new();
    for (b, &(n, m)) in ladder.iter().enumerate() {
        let s = setup.clone().with_box(n, m);
        let est = node_estimator(estimator, 1000 + b as u64);
        let samples = integrand_on_grid(&s, grid, &est)?;
        let below: Vec<bool> = samples.iter().map(|x| x.total < threshold).collect();
        let crossing = (0..grid.len()).find(|&k| below[k..].iter().all(|&v| v)).map(|k| grid[k]);
        let plateau = (0..grid.len())
            .find(|&k| {
                let rest = &samples[k..];
                rest.iter().map(|x| x.total).sum::<f64>() / (rest.len() as f64) < threshold
            })
            .map(|k| grid[k]);
        let monotonicity_excess = samples
            .windows(2)
            .map(|w| {
                let err = (w[0].stderr.powi(2) + w[1].stderr.powi(2)).sqrt();
                let d = w[1].total - w[0].total;
                if err > 0.0 {
                    d / err
                } else {
                    d
                }
            })
            .fold(f64::NEG_INFINITY, f64::max);
        boxes.push(BoxScan { n, m, samples, crossing, plateau, monotonicity_excess });
    }
    let crossings: Option<Vec<f64>> = boxes.iter().map(|b| b.crossing).collect();
    let (estimate, uncertainty) = match crossings {
        Some(c) if !c.is_empty() => {
            let hi = c.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let lo = c.iter().cloned().fold(f64::INFINITY, f64::min);
            let k = grid.iter().position(|&g| g == hi).unwrap();
            let spacing = if k > 0 { grid[k] - grid[k - 1] } else { 0.0 };
            (Some(hi), hi - lo + spacing)
        }
        _ => (None, f64::INFINITY),
    };
    Ok(ScanResult { boxes, estimate, uncertainty, threshold })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exact::{finite_wall_free_energy, WallProblem};

    #[test]
    fn zero_coupling_integrand_vanishes() {
        let s = ThermoSetup::new(2, 0.0, FieldFamily::Decay { delta: 2.0 });
        assert_eq!(gap_integrand(&s, 0.7, &Estimator::Exact).unwrap().total, 0.0);
        let scan = lambda_c_scan(&s, &[0.0, 0.5, 1.0], &[(1, 1), (2, 2)], &Estimator::Exact, 1e-3).unwrap();
        assert_eq!(scan.estimate, Some(0.0));
    }

    #[test]
    fn huge_field_closes_the_gap() {
        let s = ThermoSetup::new(2, 0.5, FieldFamily::Decay { delta: 2.0 });
        assert!(gap_integrand(&s, 30.0, &Estimator::Exact).unwrap().total <= 1e-6);
    }

    #[test]
    fn integration_reproduces_log_ratio() {
        for (j, delta, lambda) in [(0.5, 2.0, 0.4), (1.0, 0.5, 1.0), (0.3, 3.0, 0.2)] {
            let s = ThermoSetup::new(1, j, FieldFamily::Decay { delta });
            let t = tau_w_by_integration(&s, lambda, &QuadratureRule::Gauss(32), &Estimator::Exact).unwrap();
            let direct = finite_wall_free_energy(&WallProblem::new(1, CouplingSpec::uniform(j), FieldSpec::decay(lambda, delta)))
                .unwrap();
            assert!((t.tau - direct).abs() < 1e-6, "{} vs {direct}", t.tau);
        }
    }

    #[test]
    fn zero_lambda_is_empty() {
        let s = ThermoSetup::new(1, 0.5, FieldFamily::Wall);
        let t = tau_w_by_integration(&s, 0.0, &QuadratureRule::Gauss(32), &Estimator::Exact).unwrap();
        assert_eq!((t.tau, t.nodes), (0.0, 0));
        let c = tau_curve(&s, &[0.0], &QuadratureRule::Gauss(8), &Estimator::Exact).unwrap();
        assert_eq!(c.taus, vec![0.0]);
    }

    #[test]
    fn non_summable_is_flagged() {
        let s = ThermoSetup::new(1, 0.5, FieldFamily::Decay { delta: 0.5 });
        let c = tau_curve(&s, &[0.0, 0.5], &QuadratureRule::Gauss(8), &Estimator::Exact).unwrap();
        assert!(c.non_summable);
    }

    #[test]
    fn exact_and_mc_integrands_agree() {
        let s = ThermoSetup::new(1, 0.6, FieldFamily::Decay { delta: 1.5 }).with_box(1, 3).with_depth(3);
        let ex = gap_integrand(&s, 0.3, &Estimator::Exact).unwrap();
        let mc = gap_integrand(&s, 0.3, &Estimator::MonteCarlo { schedule: Schedule::new(60000, 500, 1), seed: 5 }).unwrap();
        assert!((ex.total - mc.total).abs() < 4.0 * mc.stderr, "{} vs {} +- {}", ex.total, mc.total, mc.stderr);
    }

    #[test]
    fn exact_curve_is_concave_and_monotone() {
        let s = ThermoSetup::new(1, 0.6, FieldFamily::Decay { delta: 2.0 });
        let grid: Vec<f64> = (0..=8).map(|k| k as f64 * 0.25).collect();
        let c = tau_curve(&s, &grid, &QuadratureRule::Gauss(16), &Estimator::Exact).unwrap();
        assert!(c.taus.windows(2).all(|w| w[1] >= w[0]));
        assert!(c.is_concave(0.0, 1e-10));
    }

    #[test]
    fn truncation_bound() {
        let s = ThermoSetup::new(3, 0.6, FieldFamily::Decay { delta: 2.0 }).with_depth(1);
        let want = 2.0 * (0.25 + 1.0 / 9.0);
        assert!((s.truncation_bound() - want).abs() < 1e-15);
        let full = gap_integrand(&s.clone().with_depth(3), 0.2, &Estimator::Exact).unwrap();
        let cut = gap_integrand(&s, 0.2, &Estimator::Exact).unwrap();
        assert!((full.total - cut.total).abs() <= s.truncation_bound());
    }
}
