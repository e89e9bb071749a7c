//! `tau-scan` and `lambda-c`: thermodynamic integration over the wall strength.

use wetting_core::io::csv_float;
use wetting_core::model::CouplingSpec;
use wetting_core::rng::derive_seed;
use wetting_core::thermo::{lambda_c_scan, tau_curve, Estimator, FieldFamily, ScanResult, ThermoSetup, Weights};

use crate::config::{EstimatorKind, ExperimentConfig, Format, RegionSpec, ScanFamily, ScanWeights};
use crate::output::Artifacts;
use crate::streams;
use crate::{Failure, Outcome};

fn family(cfg: &ExperimentConfig, which: ScanFamily) -> FieldFamily {
    match which {
        ScanFamily::Decay => FieldFamily::Decay { delta: cfg.scan.delta },
        ScanFamily::Wall => FieldFamily::Wall,
    }
}

fn setup(cfg: &ExperimentConfig, which: ScanFamily, n: i64, m: i64) -> Result<ThermoSetup, Failure> {
    let CouplingSpec::Uniform { j } = cfg.model.coupling else {
        return Err(Failure::Usage("scans need a uniform coupling".into()));
    };
    let mut s = ThermoSetup::new(n, j, family(cfg, which))
        .with_box(n, m)
        .with_beta(cfg.model.beta)
        .with_scope(cfg.scan.scope)
        .with_weights(match cfg.scan.weights {
            ScanWeights::Slope => Weights::Slope,
            ScanWeights::Decay => Weights::Decay(cfg.scan.delta),
        });
    if cfg.scan.depth > 0 {
        s = s.with_depth(cfg.scan.depth.min(m));
    }
    s.validate()?;
    Ok(s)
}

fn estimator(cfg: &ExperimentConfig, stream: u64, k: u64) -> Estimator {
    match cfg.scan.estimator {
        EstimatorKind::Exact => Estimator::Exact,
        EstimatorKind::MonteCarlo => {
            Estimator::MonteCarlo { schedule: cfg.run.schedule(), seed: derive_seed(derive_seed(cfg.run.seed, stream), k) }
        }
    }
}

pub fn tau_scan(cfg: &ExperimentConfig, out: &Artifacts) -> Outcome {
    let RegionSpec::SemiBox { n, m } = cfg.model.region else {
        return Err(Failure::Usage("tau-scan needs model.region = semi_box(n, m)".into()));
    };
    let s = setup(cfg, cfg.scan.family, n, m)?;
    let curve = tau_curve(&s, &cfg.scan.grid(), &cfg.scan.quadrature, &estimator(cfg, streams::TAU_SCAN, 0))?;
    let mut csv = String::from("lambda,tau,stderr,n,m,depth,rule\n");
    for k in 0..curve.lambdas.len() {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            csv_float(curve.lambdas[k]),
            csv_float(curve.taus[k]),
            csv_float(curve.stderrs[k]),
            curve.n,
            curve.m,
            curve.depth,
            curve.rule
        ));
    }
    out.write("tau.csv", Format::Csv, &csv)?;
    let mut report = format!(
        "tau-scan: {} on SemiBox({n},{m}), depth {}, {} estimator, rule {}\n",
        s.family.label(),
        curve.depth,
        curve.source,
        curve.rule
    );
    report.push_str(&format!("truncation bound: {:.6e}\n", curve.truncation_bound + 0.0));
    if curve.non_summable {
        report.push_str("warning: the field is not summable; tau grows with the box depth\n");
    }
    if curve.lambdas.len() > 2 {
        report.push_str(&format!("largest slope increase (concavity excess): {:.6e}\n", curve.concavity_excess));
    }
    out.write("tau.txt", Format::Txt, &report)?;
    print!("{report}");
    Ok(())
}

fn describe(name: &str, r: &ScanResult, grid_max: f64) -> String {
    let mut s = format!("{name}:\n");
    for b in &r.boxes {
        let show = |x: Option<f64>| x.map_or(format!("none (above {grid_max})"), |v| format!("{v}"));
        s.push_str(&format!(
            "  SemiBox({},{}): crossing {}, plateau {}, monotonicity excess {:.3}\n",
            b.n,
            b.m,
            show(b.crossing),
            show(b.plateau),
            b.monotonicity_excess
        ));
    }
    match r.estimate {
        Some(x) => s.push_str(&format!("  estimate {x} +- {:.3}\n", r.uncertainty)),
        None => s.push_str(&format!("  estimate: open-ended, above {grid_max}\n")),
    }
    s
}

pub fn lambda_c(cfg: &ExperimentConfig, out: &Artifacts) -> Outcome {
    let grid = cfg.scan.grid();
    let grid_max = *grid.last().expect("grid starts at 0");
    let ladder: Vec<(i64, i64)> = cfg.scan.ladder.iter().map(|&n| (n, n)).collect();
    let first = *cfg.scan.ladder.first().ok_or_else(|| Failure::Usage("scan.ladder is empty".into()))?;
    let mut csv = String::from("family,n,m,lambda,integrand,stderr,below\n");
    let mut report = format!("lambda-c: threshold {}, grid 0..={grid_max} step {}\n\n", cfg.scan.threshold, cfg.scan.lambda_step);
    let mut results = Vec::new();
    for (k, which) in [ScanFamily::Decay, ScanFamily::Wall].into_iter().enumerate() {
        let s = setup(cfg, which, first, first)?;
        let r = lambda_c_scan(&s, &grid, &ladder, &estimator(cfg, streams::LAMBDA_C, k as u64), cfg.scan.threshold)?;
        let label = s.family.label();
        for b in &r.boxes {
            for x in &b.samples {
                csv.push_str(&format!(
                    "{label},{},{},{},{},{},{}\n",
                    b.n,
                    b.m,
                    csv_float(x.s),
                    csv_float(x.total),
                    csv_float(x.stderr),
                    x.total < cfg.scan.threshold
                ));
            }
        }
        report.push_str(&describe(&label, &r, grid_max));
        results.push(r);
    }
    let (decay, wall) = (&results[0], &results[1]);
    report.push_str("\naudit:\n");
    if !family(cfg, ScanFamily::Decay).is_summable() {
        report.push_str("  the decaying field is not summable (delta <= 1)\n");
    }
    let wall_low = wall.estimate.map_or(grid_max + cfg.scan.lambda_step, |x| x);
    match decay.estimate {
        Some(d) => {
            let ok = wall_low >= d - (decay.uncertainty + wall.uncertainty.max(cfg.scan.lambda_step));
            report.push_str(&format!(
                "  wall crossing {} the decay crossing within errors\n",
                if ok { "is not below" } else { "is below" }
            ));
        }
        None => report.push_str("  decay scan is open-ended; widen scan.lambda_max\n"),
    }
    out.write("lambda_c.csv", Format::Csv, &csv)?;
    out.write("lambda_c.txt", Format::Txt, &report)?;
    print!("{report}");
    Ok(())
}
