//! `verify-exact` and `verify-graphical`: the invariant suites of the exact
//! and graphical modules on instances generated from the master seed.

use std::collections::HashMap;

use rand::seq::SliceRandom;
use rand::Rng;
use rayon::prelude::*;
use wetting_core::check::CheckReport;
use wetting_core::exact::{
    check_dvi, check_fkg, check_gap_monotone_in_field, check_tau_concavity_and_monotonicity,
    check_uniqueness_criterion, evaluate, finite_wall_free_energy, interpolated_log_ratio, probability_table, Engine,
    ExactState, Sign, TauGrid, WallProblem,
};
use wetting_core::graphical::{
    check_free_below_wired, check_rc_fkg, compare_rc_in_j, es_marginals, heat_bath_edge_law, rc_exact_distribution,
    rc_log_weight, sw_transition, EdgeConfiguration, EdgeSetChoice, GraphicalModel,
};
use wetting_core::io::{csv_float, csv_text};
use wetting_core::lattice::{BoundaryCondition, Region, Site, Universe};
use wetting_core::model::{hamiltonian, CouplingSpec, FieldSpec, ModelInstance, SpinConfiguration};
use wetting_core::monotone::MonotoneFunction;
use wetting_core::rng::{derive_seed, stream_rng};
use wetting_core::thermo::{tau_w_by_integration, Estimator, FieldFamily, ThermoSetup};

use crate::config::{render, ExperimentConfig, Format, OutputBlock};
use crate::output::{Artifacts, Cache};
use crate::streams;
use crate::{Failure, Outcome};

/// Relative agreement required between the two exact engines.
const ENGINE_TOL: f64 = 1e-10;

struct Row {
    suite: &'static str,
    instance: String,
    report: CheckReport,
}

fn row(suite: &'static str, instance: impl Into<String>, report: CheckReport) -> Row {
    Row { suite, instance: instance.into(), report }
}

/// A report whose margin is `tol - error` for each recorded error.
fn tolerance_report(name: &str, tol: f64, errors: impl IntoIterator<Item = (f64, String)>) -> CheckReport {
    let mut r = CheckReport::new(name, 0.0);
    for (err, what) in errors {
        r.record(tol - err, || what);
    }
    r
}

fn tv(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p.iter().zip(q).map(|(a, b)| (a - b).abs()).sum::<f64>()
}

fn csv(rows: &[Row]) -> String {
    let mut out = String::from("suite,instance,checks,violations,worst_margin,passed,witness\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.suite,
            csv_text(&r.instance),
            r.report.checks,
            r.report.violations,
            csv_float(r.report.worst_margin),
            r.report.passed(),
            csv_text(&r.report.witness)
        ));
    }
    out
}

fn text(title: &str, cases: &[String], rows: &[Row]) -> String {
    let mut out = format!("{title}\n\ninstances:\n");
    for (k, c) in cases.iter().enumerate() {
        out.push_str(&format!("  {k}: {c}\n"));
    }
    out.push_str("\nsuites:\n");
    for r in rows {
        out.push_str(&format!("  [{}] {}\n", r.instance, r.report));
    }
    let failed = rows.iter().filter(|r| !r.report.passed()).count();
    out.push_str(&format!("\n{} suites, {failed} failed: {}\n", rows.len(), if failed == 0 { "PASS" } else { "FAIL" }));
    out
}

/// Runs `job` for every instance, possibly in parallel, keeping the order.
fn per_instance<T: Send>(count: usize, job: impl Fn(usize) -> T + Sync + Send) -> Vec<T> {
    (0..count).into_par_iter().map(job).collect()
}

/// Runs a suite through the cache and writes `<name>.csv` and `<name>.txt`.
fn finish(
    cfg: &ExperimentConfig,
    out: &Artifacts,
    name: &str,
    compute: impl FnOnce() -> wetting_core::Result<(String, String)>,
) -> Outcome {
    let mut keyed = cfg.clone();
    keyed.output = OutputBlock { dir: String::new(), formats: Vec::new() };
    let cache = Cache::from_env();
    let key = Cache::key(&[name, &render(&keyed)]);
    const SEP: &str = "\n\u{1e}\n";
    let (csv_text, report) = match cache.get(&key).and_then(|v| v.split_once(SEP).map(|(a, b)| (a.to_string(), b.to_string()))) {
        Some(hit) => hit,
        None => {
            let fresh = compute()?;
            cache.put(&key, &format!("{}{SEP}{}", fresh.0, fresh.1));
            fresh
        }
    };
    out.write(&format!("{name}.csv"), Format::Csv, &csv_text)?;
    out.write(&format!("{name}.txt"), Format::Txt, &report)?;
    print!("{report}");
    let failed: Vec<String> = csv_text
        .lines()
        .skip(1)
        .filter(|l| l.split(',').nth(5) == Some("false"))
        .map(|l| l.split(',').take(2).collect::<Vec<_>>().join(" on "))
        .collect();
    if failed.is_empty() {
        Ok(())
    } else {
        Err(Failure::Verification(failed.join("; ")))
    }
}

// ---- exact -----------------------------------------------------------------

struct ExactCase {
    n: i64,
    m: i64,
    j: f64,
    beta: f64,
    lambda: f64,
    delta: f64,
    instance: ModelInstance,
}

impl ExactCase {
    fn describe(&self) -> String {
        format!(
            "SemiBox({},{}) bc={:?} J={:.4} beta={:.4} lambda={:.4} delta={:.4} field={:?}",
            self.n, self.m, self.instance.bc, self.j, self.beta, self.lambda, self.delta, self.instance.field
        )
    }

    fn problem(&self, field: FieldSpec) -> WallProblem {
        WallProblem::new(self.n, CouplingSpec::uniform(self.j), field).with_height(self.m).with_beta(self.beta)
    }
}

fn exact_case(cfg: &ExperimentConfig, k: usize) -> ExactCase {
    let mut rng = stream_rng(derive_seed(cfg.run.seed, streams::EXACT_INSTANCES), k as u64);
    let cap = cfg.verify.max_sites as i64;
    let boxes: Vec<(i64, i64)> = (0..=cap).flat_map(|n| (1..=cap).map(move |m| (n, m))).filter(|&(n, m)| (2 * n + 1) * m <= cap).collect();
    let (n, m) = *boxes.choose(&mut rng).expect("max_sites >= 1");
    let j = rng.gen_range(0.1..1.2);
    let beta = rng.gen_range(0.3..1.5);
    let lambda = rng.gen_range(0.0..1.5);
    let delta = rng.gen_range(0.3..3.0);
    let field = match k % 3 {
        0 => FieldSpec::decay(lambda, delta),
        1 => FieldSpec::decay(lambda, delta).plus(FieldSpec::wall(lambda / 2.0)),
        _ => FieldSpec::CenteredDecay { h: lambda, delta },
    };
    let bc = [BoundaryCondition::Plus, BoundaryCondition::Minus, BoundaryCondition::Free][rng.gen_range(0..3)].clone();
    let instance =
        ModelInstance::new(Region::semi_box(2, n, m), bc, CouplingSpec::uniform(j), field).with_beta(beta);
    ExactCase { n, m, j, beta, lambda, delta, instance }
}

fn exact_suites(cfg: &ExperimentConfig, k: usize, case: &ExactCase) -> wetting_core::Result<Vec<Row>> {
    let tol = &cfg.tolerance;
    let id = k.to_string();
    let inst = &case.instance;
    let mut rows = Vec::new();

    let setup = ThermoSetup::new(case.n, case.j, FieldFamily::Decay { delta: case.delta })
        .with_box(case.n, case.m)
        .with_beta(case.beta);
    let t = tau_w_by_integration(&setup, case.lambda, &cfg.scan.quadrature, &Estimator::Exact)?;
    let direct = finite_wall_free_energy(&case.problem(FieldSpec::decay(case.lambda, case.delta)))?;
    rows.push(row("identity", &id, tolerance_report("integrated tau equals log ratio", tol.identity, [((t.tau - direct).abs(), format!("integrated {} vs direct {direct}", t.tau))])));

    if case.n == case.m {
        let mut errors = Vec::new();
        for sign in [Sign::Plus, Sign::Minus] {
            let r = interpolated_log_ratio(&case.problem(FieldSpec::decay(case.lambda, case.delta)), sign, &cfg.scan.quadrature)?;
            errors.push((r.gap.abs(), format!("{sign:?}: direct {} vs quadrature {}", r.direct, r.quadrature)));
        }
        rows.push(row("interpolation", &id, tolerance_report("interpolation matches partition functions", tol.identity, errors)));
    }

    let seed = derive_seed(derive_seed(cfg.run.seed, streams::EXACT_TRIALS), k as u64);
    rows.push(row("fkg", &id, check_fkg(inst, cfg.verify.trials, seed)?));
    rows.push(row("dvi", &id, check_dvi(inst)?));
    let (gap_report, _) =
        check_gap_monotone_in_field(inst, &Site::xy(0, 1), &Site::xy(0, case.m), &[0.0, 0.25, 0.5, 1.0, 2.0])?;
    rows.push(row("gap monotone", &id, gap_report));
    rows.push(row("uniqueness", &id, check_uniqueness_criterion(inst, &Site::xy(0, 1), 1e-10)?));

    let lambdas = if case.lambda > 0.0 { vec![0.0, case.lambda / 2.0, case.lambda] } else { vec![0.0, 0.5, 1.0] };
    let grid = TauGrid {
        dim: 2,
        n: case.n.clamp(1, 2),
        beta: case.beta,
        delta: case.delta,
        j_grid: vec![case.j / 2.0, case.j],
        lambda_grid: lambdas,
        bump: 0.25,
    };
    rows.push(row("tau audit", &id, check_tau_concavity_and_monotonicity(&grid)?));

    let sys = inst.compile()?;
    let a = evaluate(&sys, &[], &[], true, Engine::Enumeration)?;
    if let Ok(b) = evaluate(&sys, &[], &[], true, Engine::Transfer) {
        let mut errors = vec![((a.log_z - b.log_z).abs() / a.log_z.abs().max(1.0), "log Z".to_string())];
        for (i, (x, y)) in a.magnetization.unwrap_or_default().iter().zip(b.magnetization.unwrap_or_default()).enumerate() {
            errors.push(((x - y).abs(), format!("magnetization at site {i}")));
        }
        rows.push(row("engines agree", &id, tolerance_report("transfer matches enumeration", ENGINE_TOL, errors)));
    }

    let flipped = inst.spin_flipped()?;
    let n = sys.len();
    let mut flip = CheckReport::new("spin-flip covariance", 0.0);
    for bits in 0..1u64 << n {
        let c = SpinConfiguration::from_bits(n, bits);
        let d = (hamiltonian(inst, &c)? - hamiltonian(&flipped, &c.flipped())?).abs();
        flip.record(tol.slack - d, || format!("configuration {bits:0n$b}"));
    }
    rows.push(row("spin flip", &id, flip));

    let state = ExactState::with_pairs(inst)?;
    let mut bounded = CheckReport::new("moments bounded", tol.slack);
    for i in 0..n {
        bounded.record(1.0 - state.magnetization()[i].abs(), || format!("magnetization at site {i}"));
        for j in i + 1..n {
            let p = state.pair(i, j).expect("pairs tabulated");
            bounded.record(1.0 - p.abs(), || format!("correlation of sites {i} and {j}"));
        }
    }
    rows.push(row("moments", &id, bounded));

    let folded = finite_wall_free_energy(&case.problem(FieldSpec::Zero).with_lambda(case.lambda))?;
    let bare = finite_wall_free_energy(&case.problem(FieldSpec::wall(case.lambda)))?;
    rows.push(row(
        "representation",
        &id,
        tolerance_report("wall strength as a field", tol.identity, [((folded - bare).abs(), format!("folded {folded} vs field {bare}"))]),
    ));

    let full = finite_wall_free_energy(&case.problem(FieldSpec::wall(case.lambda).plus(FieldSpec::decay(case.lambda, case.delta))))?;
    let mut dom = CheckReport::new("decay field dominates the bare wall", tol.slack);
    dom.record(full - bare, || format!("wall only {bare} vs with decay {full}"));
    rows.push(row("domination", &id, dom));
    Ok(rows)
}

pub fn verify_exact(cfg: &ExperimentConfig, out: &Artifacts) -> Outcome {
    finish(cfg, out, "verify-exact", || {
        let cases: Vec<ExactCase> = (0..cfg.verify.instances).map(|k| exact_case(cfg, k)).collect();
        let rows = per_instance(cases.len(), |k| exact_suites(cfg, k, &cases[k]));
        let rows: Vec<Row> = rows.into_iter().collect::<wetting_core::Result<Vec<_>>>()?.into_iter().flatten().collect();
        let names: Vec<String> = cases.iter().map(ExactCase::describe).collect();
        Ok((csv(&rows), text("verify-exact", &names, &rows)))
    })
}

// ---- graphical ------------------------------------------------------------

/// At most `max_sites` (and 10) sites and 12 random-cluster edges; the kind
/// cycles through the decaying field, the centred field and the weakened
/// coupling across the wall.
fn graphical_case(cfg: &ExperimentConfig, k: usize) -> ModelInstance {
    let mut rng = stream_rng(derive_seed(cfg.run.seed, streams::GRAPHICAL_INSTANCES), k as u64);
    let max_sites = cfg.verify.max_sites.min(10);
    loop {
        let full = k % 3 == 2;
        let y0 = if full { 0 } else { 1 };
        let mut sites: Vec<Site> = (0..3).flat_map(|x| (0..4).map(move |y| Site::xy(x, y0 + y))).collect();
        sites.shuffle(&mut rng);
        let count = rng.gen_range(1..=max_sites);
        let region = Region::explicit(2, sites.into_iter().take(count));
        let bc = [BoundaryCondition::Plus, BoundaryCondition::Minus, BoundaryCondition::Free, BoundaryCondition::MinusPlus]
            [rng.gen_range(0..4)]
        .clone();
        let (lambda, delta, j) = (rng.gen_range(0.0..1.5), rng.gen_range(0.3..3.0), rng.gen_range(0.05..1.2));
        let (couplings, field, universe) = match k % 3 {
            0 => (CouplingSpec::uniform(j), FieldSpec::decay(lambda, delta), Universe::SemiInfinite),
            1 => (CouplingSpec::uniform(j), FieldSpec::CenteredDecay { h: lambda, delta }, Universe::SemiInfinite),
            _ => (
                CouplingSpec::LayerWeakened { j, lambda: rng.gen_range(0.0..1.5) },
                FieldSpec::decay(lambda, delta).mirrored(),
                Universe::Full,
            ),
        };
        let inst = ModelInstance::new(region, bc, couplings, field).with_universe(universe).with_beta(rng.gen_range(0.3..1.5));
        if GraphicalModel::from_instance(&inst, EdgeSetChoice::Touching).is_ok_and(|m| m.n_edges() <= 12) {
            return inst;
        }
    }
}

/// Log weights of the disjoint union of the region and a far translate add up.
fn rc_multiplicativity<R: Rng>(inst: &ModelInstance, trials: usize, slack: f64, rng: &mut R) -> wetting_core::Result<CheckReport> {
    let sites = inst.region.sites()?;
    let shifted: Vec<Site> = sites.iter().map(|s| s.shifted(0, 1000)).collect();
    let free = |sites: Vec<Site>| {
        let i = ModelInstance::new(Region::explicit(2, sites), BoundaryCondition::Free, inst.couplings.clone(), inst.field.clone())
            .with_universe(inst.universe)
            .with_beta(inst.beta);
        GraphicalModel::from_instance(&i, EdgeSetChoice::Touching)
    };
    let a = free(sites.clone())?;
    let b = free(shifted.clone())?;
    let ab = free(sites.into_iter().chain(shifted).collect())?;
    let index = |g: &GraphicalModel| -> HashMap<(Site, Site), usize> {
        g.edges().iter().enumerate().map(|(k, e)| ((g.sites()[e.a].clone(), g.sites()[e.b].clone()), k)).collect()
    };
    let (ia, ib) = (index(&a), index(&b));
    let mut report = CheckReport::new("rc weight multiplicative", 0.0);
    for _ in 0..trials.max(1) {
        let mut ca = EdgeConfiguration::closed(a.n_edges());
        let mut cb = EdgeConfiguration::closed(b.n_edges());
        let mut cab = EdgeConfiguration::closed(ab.n_edges());
        for (k, e) in ab.edges().iter().enumerate() {
            let open = rng.gen_bool(0.5);
            cab.open[k] = open;
            let key = (ab.sites()[e.a].clone(), ab.sites()[e.b].clone());
            match (ia.get(&key), ib.get(&key)) {
                (Some(&x), _) => ca.open[x] = open,
                (_, Some(&x)) => cb.open[x] = open,
                _ => unreachable!("every edge of the union lies in one part"),
            }
        }
        let (wab, wa, wb) = (rc_log_weight(&ab, &cab), rc_log_weight(&a, &ca), rc_log_weight(&b, &cb));
        let err = (wab - wa - wb).abs();
        report.record(slack * wab.abs().max(1.0) - err, || cab.bitstring());
    }
    Ok(report)
}

fn graphical_suites(cfg: &ExperimentConfig, k: usize, inst: &ModelInstance) -> wetting_core::Result<Vec<Row>> {
    let tol = &cfg.tolerance;
    let id = k.to_string();
    let trials = cfg.verify.trials;
    let mut rng = stream_rng(derive_seed(cfg.run.seed, streams::GRAPHICAL_TRIALS), k as u64);
    let model = GraphicalModel::from_instance(inst, EdgeSetChoice::Touching)?;
    let gibbs = probability_table(&inst.compile()?)?;
    let mut rows = Vec::new();

    let marg = es_marginals(&model)?;
    let rc = rc_exact_distribution(&model)?;
    rows.push(row(
        "es equivalence",
        &id,
        tolerance_report(
            "edwards-sokal marginals",
            tol.slack,
            [(tv(&marg.spin, &gibbs), "spin marginal TV".to_string()), (tv(&marg.rc, &rc), "edge marginal TV".to_string())],
        ),
    ));
    let moved = sw_transition(&model, &gibbs)?;
    rows.push(row("sw stationarity", &id, tolerance_report("swendsen-wang fixes gibbs", tol.tv, [(tv(&moved, &gibbs), "TV after one step".to_string())])));
    rows.push(row("rc multiplicativity", &id, rc_multiplicativity(inst, trials, tol.slack, &mut rng)?));

    if model.n_edges() > 0 {
        rows.push(row("rc fkg", &id, check_rc_fkg(&model, trials, rng.gen())?));
        let free = GraphicalModel::from_instance(&inst.clone().with_bc(BoundaryCondition::Free), EdgeSetChoice::Touching)?;
        if free.n_edges() > 0 {
            rows.push(row("rc fkg free", &id, check_rc_fkg(&free, trials, rng.gen())?));
        }
        let high: Vec<f64> = model.edges().iter().map(|e| e.coupling + rng.gen_range(0.0..0.8)).collect();
        let high = model.with_couplings(&high)?;
        let events: Vec<MonotoneFunction> = (0..trials).map(|_| MonotoneFunction::random(model.n_edges(), &mut rng)).collect();
        rows.push(row("rc monotone in J", &id, compare_rc_in_j(&model, &high, &events)?));
    }
    rows.push(row("free below wired", &id, check_free_below_wired(inst, trials, rng.gen())?));
    Ok(rows)
}

/// Four sites on a unit square with free boundary: a 4-edge cycle with field.
fn four_cycle() -> ModelInstance {
    let region = Region::explicit(2, [Site::xy(0, 1), Site::xy(1, 1), Site::xy(0, 2), Site::xy(1, 2)]);
    ModelInstance::new(region, BoundaryCondition::Free, CouplingSpec::uniform(0.5), FieldSpec::decay(0.4, 1.0))
}

pub fn verify_graphical(cfg: &ExperimentConfig, out: &Artifacts) -> Outcome {
    finish(cfg, out, "verify-graphical", || {
        let cases: Vec<ModelInstance> = (0..cfg.verify.instances).map(|k| graphical_case(cfg, k)).collect();
        let rows = per_instance(cases.len(), |k| graphical_suites(cfg, k, &cases[k]));
        let mut rows: Vec<Row> = rows.into_iter().collect::<wetting_core::Result<Vec<_>>>()?.into_iter().flatten().collect();

        let cycle = GraphicalModel::from_instance(&four_cycle(), EdgeSetChoice::Touching)?;
        let law = heat_bath_edge_law(&cycle, cfg.verify.edge_sweeps.max(1), 1000, derive_seed(cfg.run.seed, streams::EDGE_SAMPLER))?;
        let mut r = CheckReport::new("heat-bath edge law", 0.0);
        for l in &law {
            r.record(cfg.tolerance.sigma - l.z_score(), || {
                format!("edges {:04b}: frequency {:.6} vs exact {:.6} +- {:.2e}", l.bits, l.frequency, l.exact, l.stderr)
            });
        }
        rows.push(row("heat-bath edges", "cycle", r));

        let mut names: Vec<String> = cases
            .iter()
            .map(|i| format!("{} sites bc={:?} couplings={:?} field={:?} beta={:.4}", i.region.cardinality(), i.bc, i.couplings, i.field, i.beta))
            .collect();
        names.push("cycle: four sites on a unit square, free boundary".into());
        Ok((csv(&rows), text("verify-graphical", &names, &rows)))
    })
}
