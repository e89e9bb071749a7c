//! Exhaustive checks of the correlation inequalities behind the wall results.

use crate::check::CheckReport;
use crate::error::{Error, Result};
use crate::lattice::{BoundaryCondition, Site};
use crate::model::{CouplingSpec, FieldSpec, ModelInstance, SpinSystem};
use crate::monotone::{covariance, MonotoneFunction};
use crate::rng::stream_rng;

use super::free_energy::{finite_wall_free_energy, WallProblem};
use super::{evaluate, probability_table, Direction, Engine, ExactState};

const SLACK: f64 = 1e-12;

fn require_non_negative_field(sys: &SpinSystem) -> Result<()> {
    if let Some(h) = sys.field().iter().find(|h| **h < 0.0) {
        return Err(Error::InvalidArgument(format!("negative field {h} is not allowed here")));
    }
    Ok(())
}

/// Positive association of random increasing functions of `(s + 1) / 2`.
pub fn check_fkg(instance: &ModelInstance, trials: usize, seed: u64) -> Result<CheckReport> {
    let sys = instance.compile()?;
    require_non_negative_field(&sys)?;
    let table = probability_table(&sys)?;
    let mut report = CheckReport::new("fkg", SLACK);
    if sys.is_empty() {
        return Ok(report);
    }
    let mut rng = stream_rng(seed, 0);
    for trial in 0..trials {
        let f = MonotoneFunction::random(sys.len(), &mut rng);
        let g = MonotoneFunction::random(sys.len(), &mut rng);
        let margin = covariance(&table, &f, &g);
        report.record(margin, || format!("trial {trial}: f={} g={}", f.describe(), g.describe()));
    }
    Ok(report)
}

/// Both boundary-comparison inequalities for every site pair:
/// `<s_i s_j>^- <= <s_i s_j>^+` and the truncated plus correlation is at most
/// the truncated minus one.
pub fn check_dvi(instance: &ModelInstance) -> Result<CheckReport> {
    let plus = ExactState::with_pairs(&instance.clone().with_bc(BoundaryCondition::Plus))?;
    let minus = ExactState::with_pairs(&instance.clone().with_bc(BoundaryCondition::Minus))?;
    require_non_negative_field(plus.system())?;
    let n = plus.system().len();
    let mut report = CheckReport::new("dvi", SLACK);
    let (mp, mm) = (plus.magnetization(), minus.magnetization());
    let sites = plus.system().sites();
    for i in 0..n {
        for j in i..n {
            let (cp, cm) = (plus.pair(i, j).unwrap(), minus.pair(i, j).unwrap());
            report.record(cp - cm, || format!("correlation {} {}", sites[i], sites[j]));
            let tp = cp - mp[i] * mp[j];
            let tm = cm - mm[i] * mm[j];
            report.record(tm - tp, || format!("truncated {} {}", sites[i], sites[j]));
        }
    }
    Ok(report)
}

fn plus_minus_gap(plus: &SpinSystem, minus: &SpinSystem, i: usize) -> Result<f64> {
    let a = evaluate(plus, &[Direction::site(plus, i)], &[], false, Engine::Auto)?.direction_means[0];
    let b = evaluate(minus, &[Direction::site(minus, i)], &[], false, Engine::Auto)?.direction_means[0];
    Ok(a - b)
}

/// The plus/minus gap at `site` as `h_j` is raised by each grid value; it
/// should not increase.
pub fn check_gap_monotone_in_field(
    instance: &ModelInstance,
    site: &Site,
    perturbed: &Site,
    h_grid: &[f64],
) -> Result<(CheckReport, Vec<f64>)> {
    let plus = instance.clone().with_bc(BoundaryCondition::Plus).compile()?;
    let minus = instance.clone().with_bc(BoundaryCondition::Minus).compile()?;
    require_non_negative_field(&plus)?;
    if h_grid.iter().any(|h| *h < 0.0) {
        return Err(Error::InvalidArgument("field grid must be non-negative".into()));
    }
    let i = plus.index_of(site).ok_or_else(|| Error::InvalidArgument(format!("{site} not in region")))?;
    let j = plus
        .index_of(perturbed)
        .ok_or_else(|| Error::InvalidArgument(format!("{perturbed} not in region")))?;
    let couplings: Vec<f64> = plus.edges().iter().map(|e| e.2).collect();
    let mut gaps = Vec::with_capacity(h_grid.len());
    for &h in h_grid {
        let mut field = plus.field().to_vec();
        field[j] += h;
        gaps.push(plus_minus_gap(
            &plus.with_parameters(&couplings, &field),
            &minus.with_parameters(&couplings, &field),
            i,
        )?);
    }
    let mut report = CheckReport::new("gap monotone in field", SLACK);
    for k in 1..gaps.len() {
        let (lo, hi) = (h_grid[k - 1].min(h_grid[k]), h_grid[k - 1].max(h_grid[k]));
        let (g_lo, g_hi) = if h_grid[k] >= h_grid[k - 1] { (gaps[k - 1], gaps[k]) } else { (gaps[k], gaps[k - 1]) };
        report.record(g_lo - g_hi, || format!("h_j in [{lo}, {hi}]"));
    }
    Ok((report, gaps))
}

/// A finite version of the uniqueness criterion: when the plus/minus gap
/// vanishes at one site it vanishes everywhere.
pub fn check_uniqueness_criterion(instance: &ModelInstance, probe: &Site, tol: f64) -> Result<CheckReport> {
    let plus = ExactState::new(&instance.clone().with_bc(BoundaryCondition::Plus))?;
    let minus = ExactState::new(&instance.clone().with_bc(BoundaryCondition::Minus))?;
    let i = plus
        .system()
        .index_of(probe)
        .ok_or_else(|| Error::InvalidArgument(format!("{probe} not in region")))?;
    let mut report = CheckReport::new("uniqueness criterion", 0.0);
    let gaps: Vec<f64> = plus.magnetization().iter().zip(minus.magnetization()).map(|(a, b)| a - b).collect();
    if gaps[i].abs() <= tol {
        for (k, g) in gaps.iter().enumerate() {
            let site = &plus.system().sites()[k];
            report.record(tol - g.abs(), || format!("gap {g:e} at {site}"));
        }
    }
    Ok(report)
}

/// Grids for the monotonicity and concavity audit of the wall free energy.
#[derive(Clone, Debug, PartialEq)]
pub struct TauGrid {
    pub dim: usize,
    pub n: i64,
    pub beta: f64,
    pub delta: f64,
    pub j_grid: Vec<f64>,
    pub lambda_grid: Vec<f64>,
    /// Size of the single-layer field bumps.
    pub bump: f64,
}

/// `tau_w` of `DecayHat(lambda, delta)` is non-decreasing in `J` and in each
/// layer field, and concave in `lambda`.
pub fn check_tau_concavity_and_monotonicity(grid: &TauGrid) -> Result<CheckReport> {
    let tau = |j: f64, field: FieldSpec| {
        finite_wall_free_energy(&WallProblem::new(grid.n, CouplingSpec::uniform(j), field).with_dim(grid.dim).with_beta(grid.beta))
    };
    let mut report = CheckReport::new("tau monotone and concave", 1e-10);
    let mut table = vec![vec![0.0; grid.lambda_grid.len()]; grid.j_grid.len()];
    for (a, &j) in grid.j_grid.iter().enumerate() {
        for (b, &l) in grid.lambda_grid.iter().enumerate() {
            table[a][b] = tau(j, FieldSpec::decay(l, grid.delta))?;
        }
    }
    for b in 0..grid.lambda_grid.len() {
        for a in 1..grid.j_grid.len() {
            let (j0, j1) = (grid.j_grid[a - 1], grid.j_grid[a]);
            let sign = if j1 >= j0 { 1.0 } else { -1.0 };
            report.record(sign * (table[a][b] - table[a - 1][b]), || {
                format!("J {j0} -> {j1} at lambda {}", grid.lambda_grid[b])
            });
        }
    }
    for (a, &j) in grid.j_grid.iter().enumerate() {
        for (b, &l) in grid.lambda_grid.iter().enumerate() {
            for layer in 1..=grid.n {
                let bumped = FieldSpec::decay(l, grid.delta).plus(FieldSpec::LayerOnly { layer, value: grid.bump });
                let up = tau(j, bumped)?;
                report.record(up - table[a][b], || format!("bump at layer {layer}, J {j}, lambda {l}"));
            }
        }
        // slopes between consecutive grid points must not increase
        let ls = &grid.lambda_grid;
        for b in 2..ls.len() {
            let s0 = (table[a][b - 1] - table[a][b - 2]) / (ls[b - 1] - ls[b - 2]);
            let s1 = (table[a][b] - table[a][b - 1]) / (ls[b] - ls[b - 1]);
            report.record(s0 - s1, || format!("concavity at J {j}, lambda {}", ls[b - 1]));
        }
    }
    Ok(report)
}
