//! Plain `key = value` experiment configuration.
//!
//! One assignment per line, `#` starts a comment, blocks are dotted key
//! prefixes. Structured values use a small call syntax such as
//! `decay(lambda=1.0, delta=2.0)`; [`render`] writes the canonical form and
//! `parse(render(c)) == c` for every valid configuration.

use std::fmt;

use wetting_core::lattice::{BoundaryCondition, Reflection, Region, Universe};
use wetting_core::model::{CouplingSpec, FieldSpec};
use wetting_core::quadrature::QuadratureRule;
use wetting_core::spin_mc::{ProfileScope, Schedule, UpdateKind};

#[derive(Clone, Debug, PartialEq)]
pub struct ConfigError {
    /// 1-based line of the offending assignment; 0 for command-line overrides.
    pub line: usize,
    pub key: String,
    pub message: String,
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match (self.line, self.key.is_empty()) {
            (0, false) => write!(f, "override `{}`: {}", self.key, self.message),
            (0, true) => write!(f, "{}", self.message),
            (l, false) => write!(f, "line {l}: `{}`: {}", self.key, self.message),
            (l, true) => write!(f, "line {l}: {}", self.message),
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RegionSpec {
    SemiBox { n: i64, m: i64 },
    ExtendedBox { n: i64, reflection: Reflection },
    FullBox { m: i64, n: i64 },
}

impl RegionSpec {
    pub fn region(&self, dim: usize) -> Region {
        match *self {
            RegionSpec::SemiBox { n, m } => Region::semi_box(dim, n, m),
            RegionSpec::ExtendedBox { n, reflection } => Region::extended_box(dim, n, reflection),
            RegionSpec::FullBox { m, n } => Region::full_box(dim, m, n),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum BcSpec {
    Plus,
    Minus,
    MinusPlus,
    Free,
}

impl BcSpec {
    pub fn bc(self) -> BoundaryCondition {
        match self {
            BcSpec::Plus => BoundaryCondition::Plus,
            BcSpec::Minus => BoundaryCondition::Minus,
            BcSpec::MinusPlus => BoundaryCondition::MinusPlus,
            BcSpec::Free => BoundaryCondition::Free,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Format {
    Csv,
    Pgm,
    Txt,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanFamily {
    Decay,
    Wall,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ScanWeights {
    Slope,
    Decay,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum EstimatorKind {
    Exact,
    MonteCarlo,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ModelBlock {
    pub dim: usize,
    pub region: RegionSpec,
    /// `None` picks the region's natural universe.
    pub universe: Option<Universe>,
    pub bc: BcSpec,
    pub coupling: CouplingSpec,
    pub field: FieldSpec,
    pub beta: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunBlock {
    pub sweeps: u64,
    pub burn_in: u64,
    pub thin: u64,
    pub seed: u64,
    pub chains: usize,
    pub update: UpdateKind,
    pub scope: ProfileScope,
    /// Also estimate the plus/minus gap with coupled chains.
    pub gap: bool,
}

impl RunBlock {
    pub fn schedule(&self) -> Schedule {
        Schedule::new(self.sweeps, self.burn_in, self.thin)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct OutputBlock {
    pub dir: String,
    pub formats: Vec<Format>,
}

impl OutputBlock {
    pub fn wants(&self, f: Format) -> bool {
        self.formats.contains(&f)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ToleranceBlock {
    pub identity: f64,
    pub slack: f64,
    pub tv: f64,
    pub sigma: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct VerifyBlock {
    pub instances: usize,
    pub trials: usize,
    pub max_sites: usize,
    pub edge_sweeps: usize,
}

#[derive(Clone, Debug, PartialEq)]
pub struct ScanBlock {
    pub family: ScanFamily,
    pub delta: f64,
    pub lambda_max: f64,
    pub lambda_step: f64,
    pub threshold: f64,
    pub ladder: Vec<i64>,
    pub quadrature: QuadratureRule,
    pub estimator: EstimatorKind,
    pub weights: ScanWeights,
    pub scope: ProfileScope,
    /// Layers entering the integrand; 0 means the whole box.
    pub depth: i64,
}

impl ScanBlock {
    /// `0, step, 2 step, ...` up to `lambda_max` (inclusive within rounding).
    pub fn grid(&self) -> Vec<f64> {
        let k = (self.lambda_max / self.lambda_step + 1e-9).floor() as usize;
        (0..=k).map(|i| i as f64 * self.lambda_step).collect()
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentConfig {
    /// Subcommand the configuration was resolved for; empty when unset.
    pub command: String,
    pub model: ModelBlock,
    pub run: RunBlock,
    pub output: OutputBlock,
    pub tolerance: ToleranceBlock,
    pub verify: VerifyBlock,
    pub scan: ScanBlock,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            command: String::new(),
            model: ModelBlock {
                dim: 2,
                region: RegionSpec::SemiBox { n: 16, m: 16 },
                universe: None,
                bc: BcSpec::Minus,
                coupling: CouplingSpec::uniform(1.0),
                field: FieldSpec::decay(1.0, 2.0),
                beta: 1.0,
            },
            run: RunBlock {
                sweeps: 20_000,
                burn_in: 5_000,
                thin: 1,
                seed: 1,
                chains: 1,
                update: UpdateKind::HeatBath,
                scope: ProfileScope::Layer,
                gap: false,
            },
            output: OutputBlock { dir: "out".into(), formats: vec![Format::Csv, Format::Pgm, Format::Txt] },
            tolerance: ToleranceBlock { identity: 1e-6, slack: 1e-12, tv: 1e-10, sigma: 4.0 },
            verify: VerifyBlock { instances: 10, trials: 200, max_sites: 12, edge_sweeps: 200_000 },
            scan: ScanBlock {
                family: ScanFamily::Decay,
                delta: 2.0,
                lambda_max: 1.5,
                lambda_step: 0.1,
                threshold: 1e-3,
                ladder: vec![16, 32, 64],
                quadrature: QuadratureRule::Gauss(32),
                estimator: EstimatorKind::MonteCarlo,
                weights: ScanWeights::Decay,
                scope: ProfileScope::CentralColumn,
                depth: 0,
            },
        }
    }
}

/// Named starting points; a config file and overrides are applied on top.
pub fn preset(name: &str) -> Option<ExperimentConfig> {
    let mut c = ExperimentConfig::default();
    match name {
        "default" | "desk" => {}
        "tiny" => {
            c.model.region = RegionSpec::SemiBox { n: 2, m: 3 };
            c.run.sweeps = 2_000;
            c.run.burn_in = 200;
            c.verify = VerifyBlock { instances: 3, trials: 20, max_sites: 8, edge_sweeps: 20_000 };
            c.scan.ladder = vec![2, 4];
            c.scan.lambda_max = 0.4;
            c.scan.lambda_step = 0.2;
            c.scan.quadrature = QuadratureRule::Gauss(8);
        }
        "figures" => {
            c.model.region = RegionSpec::SemiBox { n: 64, m: 64 };
            c.model.bc = BcSpec::Minus;
            c.model.coupling = CouplingSpec::uniform(1.0);
            c.model.field = FieldSpec::wall(1.0);
            c.model.beta = 0.5;
        }
        _ => return None,
    }
    Some(c)
}

pub const PRESETS: [&str; 4] = ["default", "desk", "tiny", "figures"];

// ---- value grammar -------------------------------------------------------

#[derive(Clone, Debug, PartialEq)]
enum Value {
    Num(f64),
    Term(Term),
}

#[derive(Clone, Debug, PartialEq)]
struct Term {
    name: String,
    args: Vec<(Option<String>, Value)>,
}

struct Lexer<'a> {
    s: &'a [u8],
    pos: usize,
}

impl<'a> Lexer<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.s.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn word(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && (self.s[self.pos].is_ascii_alphanumeric() || b"_.+-".contains(&self.s[self.pos])) {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.s[start..self.pos]).into_owned()
    }

    fn value(&mut self) -> Result<Value, String> {
        let w = self.word();
        if w.is_empty() {
            return Err(match self.peek() {
                Some(c) => format!("unexpected `{}`", c as char),
                None => "missing value".into(),
            });
        }
        let first = w.as_bytes()[0];
        if first.is_ascii_digit() || first == b'-' || first == b'+' || first == b'.' {
            return w.parse().map(Value::Num).map_err(|_| format!("malformed number `{w}`"));
        }
        let mut args = Vec::new();
        if self.eat(b'(')
            && !self.eat(b')') {
                loop {
                    let save = self.pos;
                    let key = self.word();
                    let arg = if !key.is_empty() && self.eat(b'=') {
                        (Some(key), self.value()?)
                    } else {
                        self.pos = save;
                        (None, self.value()?)
                    };
                    args.push(arg);
                    if self.eat(b')') {
                        break;
                    }
                    if !self.eat(b',') {
                        return Err(format!("expected `,` or `)` in `{w}(...)`"));
                    }
                }
            }
        Ok(Value::Term(Term { name: w, args }))
    }
}

fn parse_value(text: &str) -> Result<Value, String> {
    let mut lx = Lexer { s: text.as_bytes(), pos: 0 };
    let v = lx.value()?;
    if lx.peek().is_some() {
        return Err(format!("trailing input `{}`", &text[lx.pos..]));
    }
    Ok(v)
}

fn parse_term(text: &str) -> Result<Term, String> {
    match parse_value(text)? {
        Value::Term(t) => Ok(t),
        Value::Num(x) => Err(format!("expected a name, got number {x}")),
    }
}

/// Numeric arguments by name (or position), all required.
fn numbers(t: &Term, names: &[&str]) -> Result<Vec<f64>, String> {
    if t.args.len() != names.len() {
        return Err(format!("`{}` takes {} argument(s): {}", t.name, names.len(), names.join(", ")));
    }
    let mut out = vec![f64::NAN; names.len()];
    for (k, (key, v)) in t.args.iter().enumerate() {
        let slot = match key {
            Some(key) => names.iter().position(|n| n == key).ok_or_else(|| format!("`{}` has no argument `{key}`", t.name))?,
            None => k,
        };
        out[slot] = match v {
            Value::Num(x) => *x,
            Value::Term(_) => return Err(format!("argument `{}` of `{}` must be a number", names[slot], t.name)),
        };
    }
    if let Some(k) = out.iter().position(|x| x.is_nan()) {
        return Err(format!("`{}` is missing `{}`", t.name, names[k]));
    }
    Ok(out)
}

fn int(x: f64, what: &str) -> Result<i64, String> {
    if x.fract() == 0.0 && x.abs() < 1e15 {
        Ok(x as i64)
    } else {
        Err(format!("`{what}` must be an integer, got {x}"))
    }
}

fn check_finite(x: f64, what: &str) -> Result<f64, String> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(format!("`{what}` must be finite"))
    }
}

fn field_of(v: &Value) -> Result<FieldSpec, String> {
    let t = match v {
        Value::Term(t) => t,
        Value::Num(x) => return Err(format!("expected a field, got number {x}")),
    };
    let nested = |t: &Term| -> Result<Vec<FieldSpec>, String> {
        t.args
            .iter()
            .map(|(k, v)| match k {
                Some(k) => Err(format!("`{}` takes fields, not `{k}=`", t.name)),
                None => field_of(v),
            })
            .collect()
    };
    Ok(match t.name.as_str() {
        "zero" if t.args.is_empty() => FieldSpec::Zero,
        "wall" => {
            let a = numbers(t, &["lambda"])?;
            FieldSpec::wall(check_finite(a[0], "lambda")?)
        }
        "layer" => {
            let a = numbers(t, &["layer", "value"])?;
            FieldSpec::LayerOnly { layer: int(a[0], "layer")?, value: check_finite(a[1], "value")? }
        }
        "decay" => {
            let a = numbers(t, &["lambda", "delta"])?;
            if !(a[1] > 0.0) || !a[1].is_finite() {
                return Err(format!("`delta` must be positive, got {}", a[1]));
            }
            FieldSpec::decay(check_finite(a[0], "lambda")?, a[1])
        }
        "centered" => {
            let a = numbers(t, &["h", "delta"])?;
            if !(a[1] > 0.0) || !a[1].is_finite() {
                return Err(format!("`delta` must be positive, got {}", a[1]));
            }
            FieldSpec::CenteredDecay { h: check_finite(a[0], "h")?, delta: a[1] }
        }
        "layers" => FieldSpec::LayerSequence(
            t.args
                .iter()
                .map(|(k, v)| match (k, v) {
                    (None, Value::Num(x)) => check_finite(*x, "layers"),
                    _ => Err("`layers` takes plain numbers".to_string()),
                })
                .collect::<Result<_, _>>()?,
        ),
        "mirrored" => {
            let mut inner = nested(t)?;
            if inner.len() != 1 {
                return Err("`mirrored` takes exactly one field".into());
            }
            inner.pop().unwrap().mirrored()
        }
        "sum" => FieldSpec::Sum(nested(t)?),
        other => return Err(format!("unknown field `{other}`")),
    })
}

fn render_field(f: &FieldSpec) -> String {
    match f {
        FieldSpec::Zero => "zero".into(),
        FieldSpec::WallOnly { lambda } => format!("wall(lambda={})", num(*lambda)),
        FieldSpec::LayerOnly { layer, value } => format!("layer(layer={layer}, value={})", num(*value)),
        FieldSpec::DecayHat { lambda, delta } => format!("decay(lambda={}, delta={})", num(*lambda), num(*delta)),
        FieldSpec::CenteredDecay { h, delta } => format!("centered(h={}, delta={})", num(*h), num(*delta)),
        FieldSpec::LayerSequence(v) => format!("layers({})", v.iter().map(|x| num(*x)).collect::<Vec<_>>().join(", ")),
        FieldSpec::Mirrored(b) => format!("mirrored({})", render_field(b)),
        FieldSpec::Sum(parts) => format!("sum({})", parts.iter().map(render_field).collect::<Vec<_>>().join(", ")),
    }
}

/// Shortest text that parses back to the same double.
fn num(x: f64) -> String {
    format!("{x:?}")
}

fn coupling_of(t: &Term) -> Result<CouplingSpec, String> {
    let c = match t.name.as_str() {
        "uniform" => CouplingSpec::uniform(numbers(t, &["j"])?[0]),
        "weakened" => {
            let a = numbers(t, &["j", "lambda"])?;
            CouplingSpec::LayerWeakened { j: a[0], lambda: a[1] }
        }
        other => return Err(format!("unknown coupling `{other}`")),
    };
    c.validate().map_err(|_| "couplings must be finite and non-negative".to_string())?;
    Ok(c)
}

fn render_coupling(c: &CouplingSpec) -> String {
    match c {
        CouplingSpec::Uniform { j } => format!("uniform(j={})", num(*j)),
        CouplingSpec::LayerWeakened { j, lambda } => format!("weakened(j={}, lambda={})", num(*j), num(*lambda)),
    }
}

fn region_of(t: &Term) -> Result<RegionSpec, String> {
    let region = match t.name.as_str() {
        "semi_box" => {
            let a = numbers(t, &["n", "m"])?;
            RegionSpec::SemiBox { n: int(a[0], "n")?, m: int(a[1], "m")? }
        }
        "full_box" => {
            let a = numbers(t, &["m", "n"])?;
            RegionSpec::FullBox { m: int(a[0], "m")?, n: int(a[1], "n")? }
        }
        "extended_box" | "extended_box_negation" => {
            let a = numbers(t, &["n"])?;
            let reflection = if t.name == "extended_box" { Reflection::HalfPlane } else { Reflection::Negation };
            RegionSpec::ExtendedBox { n: int(a[0], "n")?, reflection }
        }
        other => return Err(format!("unknown region `{other}`")),
    };
    let ok = match region {
        RegionSpec::SemiBox { n, m } => n >= 0 && m >= 1,
        RegionSpec::FullBox { m, n } => m >= 0 && n >= 1,
        RegionSpec::ExtendedBox { n, .. } => n >= 1,
    };
    if !ok {
        return Err("box sizes out of range (half-widths >= 0, heights >= 1)".into());
    }
    Ok(region)
}

fn render_region(r: &RegionSpec) -> String {
    match r {
        RegionSpec::SemiBox { n, m } => format!("semi_box(n={n}, m={m})"),
        RegionSpec::FullBox { m, n } => format!("full_box(m={m}, n={n})"),
        RegionSpec::ExtendedBox { n, reflection: Reflection::HalfPlane } => format!("extended_box(n={n})"),
        RegionSpec::ExtendedBox { n, reflection: Reflection::Negation } => format!("extended_box_negation(n={n})"),
    }
}

fn quadrature_of(t: &Term) -> Result<QuadratureRule, String> {
    let k = int(numbers(t, &["k"])?[0], "k")?;
    if !(1..=4096).contains(&k) {
        return Err(format!("node count must lie in 1..=4096, got {k}"));
    }
    match t.name.as_str() {
        "gauss" => Ok(QuadratureRule::Gauss(k as usize)),
        "trapezoid" => Ok(QuadratureRule::Trapezoid(k as usize)),
        other => Err(format!("unknown quadrature `{other}`")),
    }
}

fn render_quadrature(q: &QuadratureRule) -> String {
    match q {
        QuadratureRule::Gauss(k) => format!("gauss({k})"),
        QuadratureRule::Trapezoid(k) => format!("trapezoid({k})"),
        QuadratureRule::Grid(_) => unreachable!("grid rules are not configurable"),
    }
}

fn choice<T: Copy>(text: &str, options: &[(&str, T)]) -> Result<T, String> {
    options.iter().find(|(n, _)| *n == text).map(|&(_, v)| v).ok_or_else(|| {
        format!("expected one of {}, got `{text}`", options.iter().map(|(n, _)| *n).collect::<Vec<_>>().join(", "))
    })
}

fn name_of<T: PartialEq>(v: T, options: &[(&'static str, T)]) -> &'static str {
    options.iter().find(|(_, o)| *o == v).map(|(n, _)| *n).expect("every variant is named")
}

const BCS: [(&str, BcSpec); 4] =
    [("plus", BcSpec::Plus), ("minus", BcSpec::Minus), ("minus_plus", BcSpec::MinusPlus), ("free", BcSpec::Free)];
const UNIVERSES: [(&str, Option<Universe>); 3] =
    [("auto", None), ("semi_infinite", Some(Universe::SemiInfinite)), ("full", Some(Universe::Full))];
const UPDATES: [(&str, UpdateKind); 2] = [("heat_bath", UpdateKind::HeatBath), ("metropolis", UpdateKind::Metropolis)];
const SCOPES: [(&str, ProfileScope); 2] = [("layer", ProfileScope::Layer), ("column", ProfileScope::CentralColumn)];
const FAMILIES: [(&str, ScanFamily); 2] = [("decay", ScanFamily::Decay), ("wall", ScanFamily::Wall)];
const WEIGHTS: [(&str, ScanWeights); 2] = [("slope", ScanWeights::Slope), ("decay", ScanWeights::Decay)];
const ESTIMATORS: [(&str, EstimatorKind); 2] = [("exact", EstimatorKind::Exact), ("mc", EstimatorKind::MonteCarlo)];
const FORMATS: [(&str, Format); 3] = [("csv", Format::Csv), ("pgm", Format::Pgm), ("txt", Format::Txt)];
const BOOLS: [(&str, bool); 2] = [("true", true), ("false", false)];

pub const COMMANDS: [&str; 7] = ["verify-exact", "verify-graphical", "snapshot", "profile", "tau-scan", "lambda-c", "figures"];

/// Every accepted key, in rendering order.
pub const KEYS: [&str; 37] = [
    "command",
    "model.dim",
    "model.region",
    "model.universe",
    "model.bc",
    "model.coupling",
    "model.field",
    "model.beta",
    "run.sweeps",
    "run.burn_in",
    "run.thin",
    "run.seed",
    "run.chains",
    "run.update",
    "run.scope",
    "run.gap",
    "output.dir",
    "output.formats",
    "tolerance.identity",
    "tolerance.slack",
    "tolerance.tv",
    "tolerance.sigma",
    "verify.instances",
    "verify.trials",
    "verify.max_sites",
    "verify.edge_sweeps",
    "scan.family",
    "scan.delta",
    "scan.lambda_max",
    "scan.lambda_step",
    "scan.threshold",
    "scan.ladder",
    "scan.quadrature",
    "scan.estimator",
    "scan.weights",
    "scan.scope",
    "scan.depth",
];

fn uint(text: &str) -> Result<u64, String> {
    text.parse().map_err(|_| format!("expected a non-negative integer, got `{text}`"))
}

fn float(text: &str) -> Result<f64, String> {
    let x: f64 = text.parse().map_err(|_| format!("expected a number, got `{text}`"))?;
    check_finite(x, "value")
}

fn positive(text: &str) -> Result<f64, String> {
    let x = float(text)?;
    if x > 0.0 {
        Ok(x)
    } else {
        Err(format!("must be positive, got {x}"))
    }
}

fn list(text: &str) -> impl Iterator<Item = &str> {
    text.split(',').map(str::trim).filter(|s| !s.is_empty())
}

impl ExperimentConfig {
    /// Applies one assignment; the error message does not repeat the key.
    pub fn set(&mut self, key: &str, text: &str) -> Result<(), String> {
        let text = text.trim();
        match key {
            "command" => {
                if !text.is_empty() && !COMMANDS.contains(&text) {
                    return Err(format!("unknown command `{text}`"));
                }
                self.command = text.to_string();
            }
            "model.dim" => {
                let d = uint(text)?;
                if !(2..=3).contains(&d) {
                    return Err(format!("dimension must be 2 or 3, got {d}"));
                }
                self.model.dim = d as usize;
            }
            "model.region" => self.model.region = region_of(&parse_term(text)?)?,
            "model.universe" => self.model.universe = choice(text, &UNIVERSES)?,
            "model.bc" => self.model.bc = choice(text, &BCS)?,
            "model.coupling" => self.model.coupling = coupling_of(&parse_term(text)?)?,
            "model.field" => self.model.field = field_of(&parse_value(text)?)?,
            "model.beta" => self.model.beta = positive(text)?,
            "run.sweeps" => self.run.sweeps = uint(text)?,
            "run.burn_in" => self.run.burn_in = uint(text)?,
            "run.thin" => {
                self.run.thin = uint(text)?;
                if self.run.thin == 0 {
                    return Err("must be at least 1".into());
                }
            }
            "run.seed" => self.run.seed = uint(text)?,
            "run.chains" => {
                self.run.chains = uint(text)? as usize;
                if self.run.chains == 0 {
                    return Err("must be at least 1".into());
                }
            }
            "run.update" => self.run.update = choice(text, &UPDATES)?,
            "run.scope" => self.run.scope = choice(text, &SCOPES)?,
            "run.gap" => self.run.gap = choice(text, &BOOLS)?,
            "output.dir" => {
                if text.is_empty() {
                    return Err("must not be empty".into());
                }
                self.output.dir = text.to_string();
            }
            "output.formats" => {
                let mut formats = Vec::new();
                for f in list(text) {
                    let f = choice(f, &FORMATS)?;
                    if !formats.contains(&f) {
                        formats.push(f);
                    }
                }
                self.output.formats = formats;
            }
            "tolerance.identity" => self.tolerance.identity = positive(text)?,
            "tolerance.slack" => self.tolerance.slack = positive(text)?,
            "tolerance.tv" => self.tolerance.tv = positive(text)?,
            "tolerance.sigma" => self.tolerance.sigma = positive(text)?,
            "verify.instances" => self.verify.instances = uint(text)? as usize,
            "verify.trials" => self.verify.trials = uint(text)? as usize,
            "verify.max_sites" => {
                let k = uint(text)? as usize;
                if !(1..=12).contains(&k) {
                    return Err(format!("must lie in 1..=12, got {k}"));
                }
                self.verify.max_sites = k;
            }
            "verify.edge_sweeps" => self.verify.edge_sweeps = uint(text)? as usize,
            "scan.family" => self.scan.family = choice(text, &FAMILIES)?,
            "scan.delta" => self.scan.delta = positive(text)?,
            "scan.lambda_max" => {
                let x = float(text)?;
                if x < 0.0 {
                    return Err(format!("must be non-negative, got {x}"));
                }
                self.scan.lambda_max = x;
            }
            "scan.lambda_step" => self.scan.lambda_step = positive(text)?,
            "scan.threshold" => self.scan.threshold = positive(text)?,
            "scan.ladder" => {
                let ladder: Vec<i64> =
                    list(text).map(|s| s.parse::<i64>().map_err(|_| format!("malformed box size `{s}`"))).collect::<Result<_, _>>()?;
                if ladder.is_empty() || ladder.iter().any(|&n| n < 1) {
                    return Err("needs one or more box sizes >= 1".into());
                }
                self.scan.ladder = ladder;
            }
            "scan.quadrature" => self.scan.quadrature = quadrature_of(&parse_term(text)?)?,
            "scan.estimator" => self.scan.estimator = choice(text, &ESTIMATORS)?,
            "scan.weights" => self.scan.weights = choice(text, &WEIGHTS)?,
            "scan.scope" => self.scan.scope = choice(text, &SCOPES)?,
            "scan.depth" => self.scan.depth = uint(text)? as i64,
            _ => return Err("unknown key".into()),
        }
        Ok(())
    }

    /// Cross-field constraints checked after all assignments.
    pub fn validate(&self) -> Result<(), ConfigError> {
        let fail = |key: &str, message: String| Err(ConfigError { line: 0, key: key.into(), message });
        if self.run.sweeps <= self.run.burn_in {
            return fail("run.sweeps", format!("must exceed run.burn_in ({})", self.run.burn_in));
        }
        if let Err(e) = self.model.field.validate() {
            return fail("model.field", e.to_string());
        }
        Ok(())
    }

    fn value_of(&self, key: &str) -> String {
        let m = &self.model;
        let r = &self.run;
        let s = &self.scan;
        match key {
            "command" => self.command.clone(),
            "model.dim" => m.dim.to_string(),
            "model.region" => render_region(&m.region),
            "model.universe" => name_of(m.universe, &UNIVERSES).into(),
            "model.bc" => name_of(m.bc, &BCS).into(),
            "model.coupling" => render_coupling(&m.coupling),
            "model.field" => render_field(&m.field),
            "model.beta" => num(m.beta),
            "run.sweeps" => r.sweeps.to_string(),
            "run.burn_in" => r.burn_in.to_string(),
            "run.thin" => r.thin.to_string(),
            "run.seed" => r.seed.to_string(),
            "run.chains" => r.chains.to_string(),
            "run.update" => name_of(r.update, &UPDATES).into(),
            "run.scope" => name_of(r.scope, &SCOPES).into(),
            "run.gap" => name_of(r.gap, &BOOLS).into(),
            "output.dir" => self.output.dir.clone(),
            "output.formats" => self.output.formats.iter().map(|&f| name_of(f, &FORMATS)).collect::<Vec<_>>().join(", "),
            "tolerance.identity" => num(self.tolerance.identity),
            "tolerance.slack" => num(self.tolerance.slack),
            "tolerance.tv" => num(self.tolerance.tv),
            "tolerance.sigma" => num(self.tolerance.sigma),
            "verify.instances" => self.verify.instances.to_string(),
            "verify.trials" => self.verify.trials.to_string(),
            "verify.max_sites" => self.verify.max_sites.to_string(),
            "verify.edge_sweeps" => self.verify.edge_sweeps.to_string(),
            "scan.family" => name_of(s.family, &FAMILIES).into(),
            "scan.delta" => num(s.delta),
            "scan.lambda_max" => num(s.lambda_max),
            "scan.lambda_step" => num(s.lambda_step),
            "scan.threshold" => num(s.threshold),
            "scan.ladder" => s.ladder.iter().map(|n| n.to_string()).collect::<Vec<_>>().join(", "),
            "scan.quadrature" => render_quadrature(&s.quadrature),
            "scan.estimator" => name_of(s.estimator, &ESTIMATORS).into(),
            "scan.weights" => name_of(s.weights, &WEIGHTS).into(),
            "scan.scope" => name_of(s.scope, &SCOPES).into(),
            "scan.depth" => s.depth.to_string(),
            _ => unreachable!("unknown key {key}"),
        }
    }

    pub fn universe(&self) -> Universe {
        self.model.universe.unwrap_or_else(|| self.model.region.region(self.model.dim).default_universe())
    }
}

/// Applies `text` on top of `base`.
pub fn parse_onto(base: ExperimentConfig, text: &str) -> Result<ExperimentConfig, ConfigError> {
    let mut c = base;
    for (k, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let Some((key, value)) = line.split_once('=') else {
            return Err(ConfigError { line: k + 1, key: String::new(), message: format!("expected `key = value`, got `{line}`") });
        };
        let key = key.trim();
        c.set(key, value).map_err(|message| ConfigError { line: k + 1, key: key.into(), message })?;
    }
    c.validate().map_err(|mut e| {
        e.line = text.lines().position(|l| l.split('=').next().map(str::trim) == Some(e.key.as_str())).map_or(0, |p| p + 1);
        e
    })?;
    Ok(c)
}

/// Parses a configuration on top of the defaults.
pub fn parse_config(text: &str) -> Result<ExperimentConfig, ConfigError> {
    parse_onto(ExperimentConfig::default(), text)
}

/// Canonical text of a configuration, one key per line in a fixed order.
pub fn render(c: &ExperimentConfig) -> String {
    let mut out = String::from("# wetting-lab resolved configuration\n");
    for key in KEYS {
        out.push_str(&format!("{key} = {}\n", c.value_of(key)));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_the_default() {
        assert_eq!(parse_config("").unwrap(), ExperimentConfig::default());
        assert_eq!(parse_config("# only a comment\n\n").unwrap(), ExperimentConfig::default());
    }

    #[test]
    fn decay_field() {
        let c = parse_config("model.field = decay(lambda=1.0, delta=2.0)").unwrap();
        assert_eq!(c.model.field, FieldSpec::DecayHat { lambda: 1.0, delta: 2.0 });
        let c = parse_config("model.field = sum(wall(0.5), mirrored(decay(delta=1.5, lambda=0.25)))").unwrap();
        assert_eq!(c.model.field, FieldSpec::wall(0.5).plus(FieldSpec::decay(0.25, 1.5).mirrored()));
    }

    #[test]
    fn range_errors_name_the_key_and_line() {
        let e = parse_config("model.dim = 2\nmodel.beta = -1").unwrap_err();
        assert_eq!((e.line, e.key.as_str()), (2, "model.beta"));
        assert!(e.to_string().contains("model.beta"));
        let e = parse_config("model.field = decay(lambda=1, delta=0)").unwrap_err();
        assert_eq!(e.key, "model.field");
        assert!(e.message.contains("delta"));
    }

    #[test]
    fn unknown_and_malformed() {
        let e = parse_config("model.colour = red").unwrap_err();
        assert_eq!((e.line, e.message.as_str()), (1, "unknown key"));
        assert!(parse_config("model.beta").is_err());
        assert!(parse_config("model.field = decay(lambda=1").is_err());
        assert!(parse_config("model.field = decay(lambda=1, delta=2) extra").is_err());
        assert!(parse_config("run.sweeps = many").is_err());
        let e = parse_config("run.sweeps = 10\nrun.burn_in = 10").unwrap_err();
        assert_eq!((e.line, e.key.as_str()), (1, "run.sweeps"));
    }

    #[test]
    fn grid_includes_the_end_point() {
        let mut s = ExperimentConfig::default().scan;
        s.lambda_max = 0.3;
        s.lambda_step = 0.1;
        assert_eq!(s.grid().len(), 4);
        s.lambda_max = 0.0;
        assert_eq!(s.grid(), vec![0.0]);
    }

    #[test]
    fn presets_render_and_parse_back() {
        for name in PRESETS {
            let c = preset(name).unwrap();
            assert_eq!(parse_config(&render(&c)).unwrap(), c, "{name}");
        }
        assert!(preset("huge").is_none());
    }
}
