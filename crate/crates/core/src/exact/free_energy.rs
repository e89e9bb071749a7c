//! Finite-volume surface, wall and interface free energies.

use crate::error::{Error, Result};
use crate::lattice::{BoundaryCondition, Reflection, Region, Universe};
use crate::model::{CouplingSpec, FieldSpec, ModelInstance};
use crate::quadrature::QuadratureRule;

use super::{evaluate, Direction, Engine};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Sign {
    Plus,
    Minus,
}

impl Sign {
    pub fn bc(self) -> BoundaryCondition {
        match self {
            Sign::Plus => BoundaryCondition::Plus,
            Sign::Minus => BoundaryCondition::Minus,
        }
    }
}

/// A semi-infinite box `SemiBox(n, m)` (square unless a height is set) with
/// its couplings and field. The wall
/// influence `lambda` is folded into the field as `WallOnly(lambda)`.
#[derive(Clone, Debug, PartialEq)]
pub struct WallProblem {
    pub dim: usize,
    pub n: i64,
    pub m: i64,
    pub couplings: CouplingSpec,
    pub field: FieldSpec,
    pub lambda: f64,
    pub beta: f64,
}

impl WallProblem {
    pub fn new(n: i64, couplings: CouplingSpec, field: FieldSpec) -> Self {
        WallProblem { dim: 2, n, m: n, couplings, field, lambda: 0.0, beta: 1.0 }
    }

    pub fn with_dim(mut self, dim: usize) -> Self {
        self.dim = dim;
        self
    }

    pub fn with_height(mut self, m: i64) -> Self {
        self.m = m;
        self
    }

    pub fn with_lambda(mut self, lambda: f64) -> Self {
        self.lambda = lambda;
        self
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn effective_field(&self) -> FieldSpec {
        if self.lambda == 0.0 {
            self.field.clone()
        } else {
            self.field.clone().plus(FieldSpec::wall(self.lambda))
        }
    }

    pub fn region(&self) -> Region {
        Region::semi_box(self.dim, self.n, self.m)
    }

    pub fn instance(&self, sign: Sign) -> ModelInstance {
        ModelInstance::new(self.region(), sign.bc(), self.couplings.clone(), self.effective_field())
            .with_beta(self.beta)
    }

    fn wall_size(&self) -> f64 {
        self.region().wall_size() as f64
    }

    fn uniform_j(&self) -> Result<f64> {
        match self.couplings {
            CouplingSpec::Uniform { j } => Ok(j),
            _ => Err(Error::InvalidArgument(
                "reflected boxes need uniform couplings".into(),
            )),
        }
    }

    /// The doubled box `Delta_n` at zero field, in the full lattice.
    fn doubled(&self, sign: Sign) -> Result<ModelInstance> {
        if self.m != self.n {
            return Err(Error::InvalidArgument("the doubled box needs a square SemiBox".into()));
        }
        let j = self.uniform_j()?;
        Ok(ModelInstance::new(
            Region::extended_box(self.dim, self.n, Reflection::HalfPlane),
            sign.bc(),
            CouplingSpec::uniform(j),
            FieldSpec::Zero,
        )
        .with_universe(Universe::Full)
        .with_beta(self.beta))
    }
}

fn log_z(inst: &ModelInstance) -> Result<f64> {
    Ok(evaluate(&inst.compile()?, &[], &[], false, Engine::Auto)?.log_z)
}

/// `-(1 / (2|W_n|)) [2 ln Z^sign_n - ln Q^sign_{Delta_n; 0}]`.
pub fn finite_surface_free_energy(p: &WallProblem, sign: Sign) -> Result<f64> {
    let z = log_z(&p.instance(sign))?;
    let q = log_z(&p.doubled(sign)?)?;
    Ok(-(2.0 * z - q) / (2.0 * p.wall_size()))
}

/// `-(1 / |W_n|) ln(Z^-_n / Z^+_n)`.
pub fn finite_wall_free_energy(p: &WallProblem) -> Result<f64> {
    let zm = log_z(&p.instance(Sign::Minus))?;
    let zp = log_z(&p.instance(Sign::Plus))?;
    Ok(-(zm - zp) / p.wall_size())
}

/// `-(1 / (2m+1)^{d-1}) ln(Q^{-+} / Q^+)` on `FullBox(m, n)` at zero field.
pub fn finite_interface_free_energy(dim: usize, m: i64, n: i64, j: f64, beta: f64) -> Result<f64> {
    let region = Region::full_box(dim, m, n);
    let base = ModelInstance::new(region.clone(), BoundaryCondition::Plus, CouplingSpec::uniform(j), FieldSpec::Zero)
        .with_universe(Universe::Full)
        .with_beta(beta);
    let qp = log_z(&base)?;
    let qmp = log_z(&base.clone().with_bc(BoundaryCondition::MinusPlus))?;
    Ok(-(qmp - qp) / region.wall_size() as f64)
}

/// Both evaluations of `ln[Xi_n(1) / Xi_n(0)]`.
#[derive(Clone, Debug, PartialEq)]
pub struct InterpolationReport {
    pub direct: f64,
    pub quadrature: f64,
    pub gap: f64,
    pub nodes: usize,
    pub log_xi0: f64,
    pub log_xi1: f64,
}

/// `Xi_n(t)` lives on `Delta_n`: the couplings across the wall plane are
/// `J(1 - t)` and the field is `t` times the mirrored field. At `t = 1` the
/// two halves decouple into two copies of `Z^sign_n`; at `t = 0` it is
/// `Q^sign_{Delta_n; 0}`.
pub fn interpolated_log_ratio(p: &WallProblem, sign: Sign, rule: &QuadratureRule) -> Result<InterpolationReport> {
    let nodes = rule.nodes(0.0, 1.0)?;
    let sys0 = p.doubled(sign)?.compile()?;
    let mirrored = p.effective_field().mirrored();
    let hbar: Vec<f64> = sys0.sites().iter().map(|s| mirrored.value_at(s)).collect();
    let mut dir = Direction::field(&sys0, hbar.clone());
    for (k, &(a, b, j)) in sys0.edges().iter().enumerate() {
        let (ha, hb) = (sys0.sites()[a as usize].height(), sys0.sites()[b as usize].height());
        if ha.min(hb) == 0 && ha.max(hb) == 1 {
            dir.couplings[k] = -j;
        }
    }
    let at = |t: f64| {
        let c: Vec<f64> = sys0.edges().iter().zip(&dir.couplings).map(|(e, d)| e.2 + t * d).collect();
        let f: Vec<f64> = hbar.iter().map(|h| t * h).collect();
        sys0.with_parameters(&c, &f)
    };
    let log_xi0 = evaluate(&sys0, &[], &[], false, Engine::Auto)?.log_z;
    let log_xi1 = evaluate(&at(1.0), &[], &[], false, Engine::Auto)?.log_z;
    let mut quad = 0.0;
    for &(t, w) in &nodes {
        let ev = evaluate(&at(t), std::slice::from_ref(&dir), &[], false, Engine::Auto)?;
        quad += w * p.beta * ev.direction_means[0];
    }
    let direct = log_xi1 - log_xi0;
    Ok(InterpolationReport { direct, quadrature: quad, gap: (direct - quad).abs(), nodes: nodes.len(), log_xi0, log_xi1 })
}
