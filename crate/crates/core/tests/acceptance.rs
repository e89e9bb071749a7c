//! Acceptance suite: one PASS/FAIL line per criterion.
//!
//! `cargo test -p wetting-core --test acceptance` runs everything; extra
//! arguments after `--` select criteria by number (`-- 1 4`).

mod common;

use std::process::ExitCode;
use std::time::{Duration, Instant};

use rand::Rng;
use wetting_core::check::CheckReport;
use wetting_core::exact::{check_dvi, check_fkg, finite_wall_free_energy, probability_table, WallProblem};
use wetting_core::graphical::{
    check_free_below_wired, compare_rc_in_j, es_marginals, heat_bath_edge_law, rc_exact_distribution, sw_transition,
    EdgeSetChoice, GraphicalModel,
};
use wetting_core::lattice::{BoundaryCondition, Region, Site, Universe};
use wetting_core::model::{CouplingSpec, FieldSpec, ModelInstance};
use wetting_core::monotone::MonotoneFunction;
use wetting_core::quadrature::QuadratureRule;
use wetting_core::rng::{derive_seed, stream_rng};
use wetting_core::spin_mc::{estimate_gap, estimate_profile, CoupledChains, ProfileScope, Schedule};
use wetting_core::thermo::{lambda_c_scan, tau_w_by_integration, Estimator, FieldFamily, ScanResult, ThermoSetup, Weights};
use wetting_core::Result;

const MASTER_SEED: u64 = 0x5eed_2024;

/// Figure and ladder runs: SemiBox(n, n), J = 1, beta = 0.5.
const FIG_BETA: f64 = 0.5;
const SCHEDULE: Schedule = Schedule { sweeps: 20_000, burn_in: 5_000, thin: 1 };
const LADDER: [i64; 3] = [16, 32, 64];

/// Integrand threshold of the scans, frozen after a pilot run: the smallest
/// round value every rung of the decay ladder reaches on the grid below.
const SCAN_THRESHOLD: f64 = 0.1;
const SCAN_STEP: f64 = 0.1;
const SCAN_POINTS: usize = 16;
const SCAN_SEED: u64 = 3;

struct Outcome {
    passed: bool,
    detail: String,
}

impl Outcome {
    fn new(passed: bool, detail: impl Into<String>) -> Self {
        Outcome { passed, detail: detail.into() }
    }
}

struct Criterion {
    id: u32,
    name: &'static str,
    budget: Duration,
    run: fn() -> Result<Outcome>,
}

fn main() -> ExitCode {
    let selected: Vec<u32> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let criteria = [
        Criterion { id: 1, name: "oracle identity", budget: mins(5), run: oracle_identity },
        Criterion { id: 2, name: "edwards-sokal equivalence", budget: mins(1), run: es_equivalence },
        Criterion { id: 3, name: "inequality suites", budget: mins(5), run: inequality_suites },
        Criterion { id: 4, name: "sampler stationarity", budget: mins(5), run: sampler_stationarity },
        Criterion { id: 5, name: "figure reproduction", budget: mins(10), run: figures },
        Criterion { id: 6, name: "uniqueness trend, delta = 0.5", budget: mins(15), run: uniqueness_trend },
        Criterion { id: 7, name: "phase-transition trend, delta = 2", budget: mins(30), run: transition_trend },
        Criterion { id: 8, name: "monotone coupling sandwich", budget: mins(2), run: sandwich },
    ];
    let mut failed = 0;
    for c in criteria.iter().filter(|c| selected.is_empty() || selected.contains(&c.id)) {
        let start = Instant::now();
        let outcome = (c.run)().unwrap_or_else(|e| Outcome::new(false, format!("error: {e}")));
        let elapsed = start.elapsed();
        let in_budget = elapsed <= c.budget;
        let passed = outcome.passed && in_budget;
        failed += usize::from(!passed);
        println!(
            "{} {}. {} [{:.1}s of {}s{}] {}",
            if passed { "PASS" } else { "FAIL" },
            c.id,
            c.name,
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            if in_budget { "" } else { ", over budget" },
            outcome.detail
        );
    }
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn mins(m: u64) -> Duration {
    Duration::from_secs(60 * m)
}

fn summary(reports: &[CheckReport]) -> (bool, String) {
    let checks: usize = reports.iter().map(|r| r.checks).sum();
    let violations: usize = reports.iter().map(|r| r.violations).sum();
    let worst = reports.iter().map(|r| r.worst_margin).fold(f64::INFINITY, f64::min);
    (violations == 0, format!("{checks} checks, {violations} violations, worst margin {worst:.3e}"))
}

/// Tallest single column (n = 0) in the identity check; the cost doubles with
/// every layer and heights 17..=24 alone would exceed the runtime budget.
const MAX_COLUMN: i64 = 16;

/// Integrated wall free energy against the partition-function ratio on every
/// d = 2 box of at most 24 sites, columns up to `MAX_COLUMN` layers.
fn oracle_identity() -> Result<Outcome> {
    let boxes: Vec<(i64, i64)> = (0..=11)
        .flat_map(|n| (1..=24).map(move |m| (n, m)))
        .filter(|&(n, m)| (2 * n + 1) * m <= 24 && (n > 0 || m <= MAX_COLUMN))
        .collect();
    let mut worst = (0.0f64, String::new());
    let mut cases = 0;
    for &(n, m) in &boxes {
        for j in [0.3, 0.5, 1.0] {
            for delta in [0.5, 1.5, 2.0, 3.0] {
                let setup = ThermoSetup::new(n, j, FieldFamily::Decay { delta }).with_box(n, m);
                for lambda in [0.0, 0.2, 0.4, 1.0] {
                    let t = tau_w_by_integration(&setup, lambda, &QuadratureRule::Gauss(32), &Estimator::Exact)?;
                    let oracle = finite_wall_free_energy(
                        &WallProblem::new(n, CouplingSpec::uniform(j), FieldSpec::decay(lambda, delta)).with_height(m),
                    )?;
                    let err = (t.tau - oracle).abs();
                    if err > worst.0 || cases == 0 {
                        worst = (err, format!("SemiBox({n},{m}) J={j} delta={delta} lambda={lambda}"));
                    }
                    cases += 1;
                }
            }
        }
    }
    Ok(Outcome::new(
        worst.0 <= 1e-6,
        format!("{} boxes, {cases} cases, worst |diff| {:.3e} at {}", boxes.len(), worst.0, worst.1),
    ))
}

/// A small random instance; `kind` cycles through the decaying field, the
/// centred field `h*` and the weakened coupling `J_lambda`.
fn es_instance(seed: u64, kind: usize) -> ModelInstance {
    let mut rng = stream_rng(seed, 0);
    loop {
        let full = kind == 2;
        let y0 = if full { 0 } else { 1 };
        let mut sites: Vec<Site> = (0..3).flat_map(|x| (0..3).map(move |y| Site::xy(x, y0 + y))).collect();
        rand::seq::SliceRandom::shuffle(sites.as_mut_slice(), &mut rng);
        let k = rng.gen_range(2..=9);
        let region = Region::explicit(2, sites.into_iter().take(k));
        let bc = match rng.gen_range(0..4) {
            0 => BoundaryCondition::Plus,
            1 => BoundaryCondition::Minus,
            2 => BoundaryCondition::Free,
            _ => BoundaryCondition::MinusPlus,
        };
        let (lambda, delta) = (rng.gen_range(0.0..1.5), rng.gen_range(0.3..3.0));
        let j = rng.gen_range(0.05..1.2);
        let (couplings, field, universe) = match kind {
            0 => (CouplingSpec::uniform(j), FieldSpec::decay(lambda, delta), Universe::SemiInfinite),
            1 => (CouplingSpec::uniform(j), FieldSpec::CenteredDecay { h: lambda, delta }, Universe::SemiInfinite),
            _ => (
                CouplingSpec::LayerWeakened { j, lambda: rng.gen_range(0.0..1.5) },
                FieldSpec::decay(lambda, delta).mirrored(),
                Universe::Full,
            ),
        };
        let inst = ModelInstance::new(region, bc, couplings, field)
            .with_universe(universe)
            .with_beta(rng.gen_range(0.3..1.5));
        let model = GraphicalModel::from_instance(&inst, EdgeSetChoice::Touching).ok();
        if model.is_some_and(|m| m.n_sites() <= 10 && m.n_edges() <= 12) {
            return inst;
        }
    }
}

fn es_equivalence() -> Result<Outcome> {
    let mut worst = 0.0f64;
    let mut edges = 0;
    let count = 24;
    for k in 0..count {
        let inst = es_instance(derive_seed(MASTER_SEED, 200 + k as u64), k % 3);
        let model = GraphicalModel::from_instance(&inst, EdgeSetChoice::Touching)?;
        let marg = es_marginals(&model)?;
        let gibbs = probability_table(&inst.compile()?)?;
        let rc = rc_exact_distribution(&model)?;
        worst = worst.max(common::tv(&marg.spin, &gibbs)).max(common::tv(&marg.rc, &rc));
        edges = edges.max(model.n_edges());
    }
    Ok(Outcome::new(
        worst <= 1e-12,
        format!("{count} instances (decay, centred, weakened coupling), up to {edges} edges, worst TV {worst:.3e}"),
    ))
}

/// Non-negative field instances for the exact inequality checks.
fn inequality_instance(k: u64) -> ModelInstance {
    let mut rng = stream_rng(derive_seed(MASTER_SEED, 300), k);
    let (n, m) = [(1, 3), (2, 2), (1, 2), (1, 4), (3, 2)][k as usize % 5];
    let bc = [BoundaryCondition::Plus, BoundaryCondition::Minus, BoundaryCondition::Free][k as usize % 3].clone();
    let field = match k % 3 {
        0 => FieldSpec::decay(rng.gen_range(0.0..1.5), rng.gen_range(0.3..3.0)),
        1 => FieldSpec::wall(rng.gen_range(0.0..1.5)),
        _ => FieldSpec::CenteredDecay { h: rng.gen_range(0.0..1.0), delta: rng.gen_range(0.3..3.0) },
    };
    ModelInstance::new(Region::semi_box(2, n, m), bc, CouplingSpec::uniform(rng.gen_range(0.1..1.2)), field)
        .with_beta(rng.gen_range(0.3..1.5))
}

fn inequality_suites() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut all = true;

    let mut fkg = Vec::new();
    let mut dvi = Vec::new();
    for k in 0..10 {
        let inst = inequality_instance(k);
        fkg.push(check_fkg(&inst, 200, derive_seed(MASTER_SEED, 310 + k))?);
        dvi.push(check_dvi(&inst)?);
    }

    let mut rc_j = Vec::new();
    for k in 0..10u64 {
        let mut rng = stream_rng(derive_seed(MASTER_SEED, 320), k);
        let choice = if k % 2 == 0 { EdgeSetChoice::Interior } else { EdgeSetChoice::Touching };
        let mut salt = 0;
        let low = loop {
            let inst = es_instance(derive_seed(MASTER_SEED, 321 + 100 * salt + k), k as usize % 3);
            let model = GraphicalModel::from_instance(&inst, choice)?;
            if model.n_edges() > 0 {
                break model;
            }
            salt += 1;
        };
        let high_j: Vec<f64> = low.edges().iter().map(|e| e.coupling + rng.gen_range(0.0..0.8)).collect();
        let high = low.with_couplings(&high_j)?;
        let events: Vec<MonotoneFunction> = (0..50).map(|_| MonotoneFunction::random(low.n_edges(), &mut rng)).collect();
        rc_j.push(compare_rc_in_j(&low, &high, &events)?);
    }

    let mut wired = Vec::new();
    for k in 0..10 {
        wired.push(check_free_below_wired(&inequality_instance(k), 200, derive_seed(MASTER_SEED, 330 + k))?);
    }

    for (name, reports) in [("fkg", &fkg), ("dvi", &dvi), ("rc in J", &rc_j), ("free<=wired", &wired)] {
        let (ok, text) = summary(reports);
        all &= ok && !reports.is_empty();
        parts.push(format!("{name} x{}: {text}", reports.len()));
    }
    Ok(Outcome::new(all, parts.join("; ")))
}

fn sampler_stationarity() -> Result<Outcome> {
    let mut worst_tv = 0.0f64;
    for k in 0..5u64 {
        let inst = es_instance(derive_seed(MASTER_SEED, 410 + k), k as usize % 3);
        let model = GraphicalModel::from_instance(&inst, EdgeSetChoice::Touching)?;
        let gibbs = probability_table(&inst.compile()?)?;
        worst_tv = worst_tv.max(common::tv(&sw_transition(&model, &gibbs)?, &gibbs));
    }

    let model = GraphicalModel::from_instance(&common::four_cycle(), EdgeSetChoice::Touching)?;
    let rows = heat_bath_edge_law(&model, 1_000_000, 1000, derive_seed(MASTER_SEED, 400))?;
    let worst_z = rows
        .iter()
        .map(|r| r.z_score())
        .fold(0.0f64, f64::max);
    Ok(Outcome::new(
        worst_tv <= 1e-10 && worst_z <= 4.0 && model.n_edges() == 4,
        format!("sw operator on 5 instances: worst TV {worst_tv:.3e}; heat-bath edge law on the 4-cycle: worst |z| {worst_z:.2} over {} configurations", rows.len()),
    ))
}

fn figure_instance(lambda: f64) -> ModelInstance {
    ModelInstance::new(Region::semi_box(2, 64, 64), BoundaryCondition::Minus, CouplingSpec::uniform(1.0), FieldSpec::wall(lambda))
        .with_beta(FIG_BETA)
}

fn figures() -> Result<Outcome> {
    let mut parts = Vec::new();
    let mut ok = true;
    for (k, lambda, want_positive) in [(0, 1.0, true), (1, 0.03, false)] {
        let p = estimate_profile(&figure_instance(lambda), SCHEDULE, ProfileScope::Layer, derive_seed(MASTER_SEED, 500 + k))?;
        let wall = p.at_height(1).expect("wall layer");
        ok &= if want_positive { wall.mean > 0.5 } else { wall.mean < -0.5 };
        parts.push(format!("lambda={lambda}: m1 = {:+.4} +- {:.4}", wall.mean, wall.stderr));
    }
    Ok(Outcome::new(ok, parts.join(", ")))
}

fn ladder_instance(n: i64, field: FieldSpec) -> ModelInstance {
    ModelInstance::new(Region::semi_box(2, n, n), BoundaryCondition::Plus, CouplingSpec::uniform(1.0), field).with_beta(FIG_BETA)
}

/// Gap at site (0, 1) for each rung: mean and standard error.
fn ladder_gaps(field: &FieldSpec, stream: u64) -> Result<Vec<(f64, f64)>> {
    LADDER
        .iter()
        .enumerate()
        .map(|(b, &n)| {
            let g = estimate_gap(&ladder_instance(n, field.clone()), SCHEDULE, ProfileScope::CentralColumn, derive_seed(MASTER_SEED, stream + b as u64))?;
            let s = g.gap.at_height(1).expect("wall layer");
            Ok((s.mean, s.stderr))
        })
        .collect()
}

fn show(gaps: &[(f64, f64)]) -> String {
    gaps.iter().map(|(m, s)| format!("{m:.4}+-{s:.4}")).collect::<Vec<_>>().join(" ")
}

/// The gap may not grow along the ladder by more than three combined
/// standard errors, and must be below 0.05 on the largest box.
fn uniqueness_trend() -> Result<Outcome> {
    let mut ok = true;
    let mut parts = Vec::new();
    for (k, lambda) in [0.5, 1.0].into_iter().enumerate() {
        let gaps = ladder_gaps(&FieldSpec::decay(lambda, 0.5), 600 + 10 * k as u64)?;
        let non_increasing = gaps.windows(2).all(|w| w[1].0 <= w[0].0 + 3.0 * (w[0].1.powi(2) + w[1].1.powi(2)).sqrt());
        let last = gaps.last().unwrap().0;
        ok &= non_increasing && last < 0.05;
        parts.push(format!("lambda={lambda}: gap(0,1) over n=16/32/64 = {}", show(&gaps)));
    }
    Ok(Outcome::new(ok, parts.join("; ")))
}

fn scan(family: FieldFamily) -> Result<ScanResult> {
    let grid: Vec<f64> = (0..SCAN_POINTS).map(|k| k as f64 * SCAN_STEP).collect();
    let setup = ThermoSetup::new(LADDER[0], 1.0, family)
        .with_beta(FIG_BETA)
        .with_scope(ProfileScope::CentralColumn)
        .with_weights(Weights::Decay(2.0));
    let ladder: Vec<(i64, i64)> = LADDER.iter().map(|&n| (n, n)).collect();
    let estimator = Estimator::MonteCarlo { schedule: SCHEDULE, seed: SCAN_SEED };
    lambda_c_scan(&setup, &grid, &ladder, &estimator, SCAN_THRESHOLD)
}

fn crossings(r: &ScanResult) -> String {
    r.boxes
        .iter()
        .map(|b| match b.crossing {
            Some(c) => format!("{c:.1}"),
            None => "open".into(),
        })
        .collect::<Vec<_>>()
        .join("/")
}

fn transition_trend() -> Result<Outcome> {
    let gaps = ladder_gaps(&FieldSpec::decay(0.0, 2.0), 700)?;
    let persists = gaps.iter().all(|&(m, _)| m > 0.5);

    let decay = scan(FieldFamily::Decay { delta: 2.0 })?;
    let wall = scan(FieldFamily::Wall)?;
    let grid_max = (SCAN_POINTS - 1) as f64 * SCAN_STEP;
    let positive = decay.estimate.is_some_and(|x| x > 0.0);
    // an open-ended scan only bounds the crossing from below by the grid end
    let (wall_low, wall_err) = match wall.estimate {
        Some(x) => (x, wall.uncertainty),
        None => (grid_max + SCAN_STEP, SCAN_STEP),
    };
    let ordered = decay.estimate.is_some_and(|d| wall_low >= d - (decay.uncertainty + wall_err));
    Ok(Outcome::new(
        persists && positive && ordered,
        format!(
            "lambda=0 gap(0,1) over n=16/32/64 = {}; decay crossing {} +- {:.2} (per box {}); wall crossing {} (per box {}); threshold {SCAN_THRESHOLD}",
            show(&gaps),
            decay.estimate.map_or("open".into(), |x| format!("{x:.1}")),
            decay.uncertainty,
            crossings(&decay),
            wall.estimate.map_or(format!("> {grid_max:.1}"), |x| format!("{x:.1} +- {:.2}", wall.uncertainty)),
            crossings(&wall),
        ),
    ))
}

fn sandwich() -> Result<Outcome> {
    let inst = ModelInstance::new(Region::semi_box(2, 32, 32), BoundaryCondition::Plus, CouplingSpec::uniform(1.0), FieldSpec::decay(0.5, 2.0))
        .with_beta(FIG_BETA);
    let mut chains = CoupledChains::new(&inst, derive_seed(MASTER_SEED, 800))?;
    let mut violations = 0;
    let mut coalesced = None;
    for s in 1..=10_000u64 {
        chains.sweep();
        violations += chains.order_violations();
        if coalesced.is_none() && chains.plus_spins() == chains.minus_spins() {
            coalesced = Some(s);
        }
    }
    let sites = chains.system().len();
    Ok(Outcome::new(
        violations == 0,
        format!(
            "{sites} sites, 10000 sweeps, {violations} violations{}",
            coalesced.map_or(String::new(), |s| format!(", chains coalesced at sweep {s}"))
        ),
    ))
}
