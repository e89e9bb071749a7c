//! Geometry of the half-space lattice `Z^{d-1} x {1, 2, ...}` and of the
//! finite boxes, walls and boundary conditions built on top of it.
//!
//! The last coordinate of a [`Site`] is its height. The wall is the layer of
//! height 1; it is never stored, only derived from the height.

use std::collections::HashMap;
use std::fmt;

use crate::error::{Error, Result};

/// Default cap on the number of sites a region may enumerate.
pub const DEFAULT_SITE_CAP: usize = 1 << 22;

/// A lattice point in `Z^d`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Site(Vec<i64>);

impl Site {
    pub fn new(coords: impl Into<Vec<i64>>) -> Self {
        let coords = coords.into();
        assert!(!coords.is_empty(), "a site needs at least one coordinate");
        Site(coords)
    }

    /// Shorthand for a two-dimensional site `(x, height)`.
    pub fn xy(x: i64, height: i64) -> Self {
        Site(vec![x, height])
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn coords(&self) -> &[i64] {
        &self.0
    }

    /// Last coordinate.
    pub fn height(&self) -> i64 {
        *self.0.last().expect("non-empty")
    }

    pub fn is_in_half_space(&self) -> bool {
        self.height() >= 1
    }

    pub fn is_on_wall(&self) -> bool {
        self.height() == 1
    }

    pub fn l1_norm(&self) -> i64 {
        self.0.iter().map(|c| c.abs()).sum()
    }

    pub fn l1_distance(&self, other: &Site) -> i64 {
        self.0.iter().zip(&other.0).map(|(a, b)| (a - b).abs()).sum()
    }

    pub fn is_adjacent(&self, other: &Site) -> bool {
        self.dim() == other.dim() && self.l1_distance(other) == 1
    }

    pub fn shifted(&self, axis: usize, delta: i64) -> Site {
        let mut c = self.0.clone();
        c[axis] += delta;
        Site(c)
    }

    /// `-i + e_d`: the point reflection used to extend half-space fields to `Z^d`.
    pub fn mirror(&self) -> Site {
        let d = self.dim();
        let mut c: Vec<i64> = self.0.iter().map(|x| -x).collect();
        c[d - 1] += 1;
        Site(c)
    }

    /// Reflection of the height across the plane `i_d = 1/2`.
    pub fn reflect_half_plane(&self) -> Site {
        let mut c = self.0.clone();
        let d = c.len();
        c[d - 1] = 1 - c[d - 1];
        Site(c)
    }

    /// Reflection of the height across the plane `i_d = 0`.
    pub fn reflect_negation(&self) -> Site {
        let mut c = self.0.clone();
        let d = c.len();
        c[d - 1] = -c[d - 1];
        Site(c)
    }
}

impl fmt::Display for Site {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (k, c) in self.0.iter().enumerate() {
            if k > 0 {
                write!(f, ",")?;
            }
            write!(f, "{c}")?;
        }
        write!(f, ")")
    }
}

/// Unordered nearest-neighbour pair, stored with `a < b`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Edge {
    a: Site,
    b: Site,
}

impl Edge {
    pub fn new(x: Site, y: Site) -> Result<Self> {
        if !x.is_adjacent(&y) {
            return Err(Error::InvalidArgument(format!(
                "{x} and {y} are not nearest neighbours"
            )));
        }
        Ok(if x < y { Edge { a: x, b: y } } else { Edge { a: y, b: x } })
    }

    pub fn endpoints(&self) -> (&Site, &Site) {
        (&self.a, &self.b)
    }

    /// True for a vertical edge joining heights `k` and `k + 1`.
    pub fn crosses(&self, lower_height: i64) -> bool {
        let (ha, hb) = (self.a.height(), self.b.height());
        ha.min(hb) == lower_height && ha.max(hb) == lower_height + 1
    }
}

/// Which half of `Z^d` the neighbourhood relation lives in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Universe {
    /// Heights `>= 1` only; wall sites have `2d - 1` neighbours.
    SemiInfinite,
    Full,
}

impl Universe {
    pub fn contains(self, site: &Site) -> bool {
        match self {
            Universe::SemiInfinite => site.is_in_half_space(),
            Universe::Full => true,
        }
    }
}

/// How the reflected half of an extended box is placed.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Reflection {
    /// Across `i_d = 1/2`: the reflected box covers heights `1 - n ..= 0`.
    HalfPlane,
    /// Across `i_d = 0`: the reflected box covers heights `-n ..= -1`, layer 0 is left out.
    Negation,
}

impl Reflection {
    pub fn apply(self, site: &Site) -> Site {
        match self {
            Reflection::HalfPlane => site.reflect_half_plane(),
            Reflection::Negation => site.reflect_negation(),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum RegionKind {
    /// `[-n, n]^{d-1} x [1, m]`.
    SemiBox { n: i64, m: i64 },
    /// `SemiBox(n, n)` together with its reflection.
    ExtendedBox { n: i64, reflection: Reflection },
    /// `[-m, m]^{d-1} x [-n, n]`.
    FullBox { m: i64, n: i64 },
    Explicit(Vec<Site>),
}

#[derive(Clone, Debug, PartialEq)]
pub struct Region {
    dim: usize,
    kind: RegionKind,
}

impl Region {
    pub fn semi_box(dim: usize, n: i64, m: i64) -> Self {
        Region { dim, kind: RegionKind::SemiBox { n, m } }
    }

    pub fn extended_box(dim: usize, n: i64, reflection: Reflection) -> Self {
        Region { dim, kind: RegionKind::ExtendedBox { n, reflection } }
    }

    pub fn full_box(dim: usize, m: i64, n: i64) -> Self {
        Region { dim, kind: RegionKind::FullBox { m, n } }
    }

    pub fn explicit(dim: usize, sites: impl IntoIterator<Item = Site>) -> Self {
        let mut sites: Vec<Site> = sites.into_iter().collect();
        sites.sort();
        sites.dedup();
        Region { dim, kind: RegionKind::Explicit(sites) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn kind(&self) -> &RegionKind {
        &self.kind
    }

    pub fn validate(&self) -> Result<()> {
        if self.dim < 2 {
            return Err(Error::InvalidRegion(format!("dimension {} < 2", self.dim)));
        }
        let bad = match &self.kind {
            RegionKind::SemiBox { n, m } => *n < 0 || *m < 0,
            RegionKind::ExtendedBox { n, .. } => *n < 0,
            RegionKind::FullBox { m, n } => *m < 0 || *n < 0,
            RegionKind::Explicit(sites) => sites.iter().any(|s| s.dim() != self.dim),
        };
        if bad {
            return Err(Error::InvalidRegion(format!("{self:?}")));
        }
        Ok(())
    }

    /// Closed-form site count.
    pub fn cardinality(&self) -> usize {
        let side = |n: i64| (2 * n + 1) as usize;
        let lateral = |n: i64| side(n).pow(self.dim as u32 - 1);
        match &self.kind {
            RegionKind::SemiBox { n, m } => lateral(*n) * (*m as usize),
            RegionKind::ExtendedBox { n, .. } => 2 * lateral(*n) * (*n as usize),
            RegionKind::FullBox { m, n } => lateral(*m) * side(*n),
            RegionKind::Explicit(sites) => sites.len(),
        }
    }

    /// Number of wall sites the region's free energies are normalised by.
    pub fn wall_size(&self) -> usize {
        let lateral = |n: i64| ((2 * n + 1) as usize).pow(self.dim as u32 - 1);
        match &self.kind {
            RegionKind::SemiBox { n, .. } | RegionKind::ExtendedBox { n, .. } => lateral(*n),
            RegionKind::FullBox { m, .. } => lateral(*m),
            RegionKind::Explicit(sites) => sites.iter().filter(|s| s.is_on_wall()).count(),
        }
    }

    /// The universe a region naturally lives in.
    pub fn default_universe(&self) -> Universe {
        match &self.kind {
            RegionKind::SemiBox { .. } => Universe::SemiInfinite,
            RegionKind::ExtendedBox { .. } | RegionKind::FullBox { .. } => Universe::Full,
            RegionKind::Explicit(sites) => {
                if sites.iter().all(Site::is_in_half_space) {
                    Universe::SemiInfinite
                } else {
                    Universe::Full
                }
            }
        }
    }

    pub fn contains(&self, site: &Site) -> bool {
        if site.dim() != self.dim {
            return false;
        }
        let c = site.coords();
        let d = self.dim;
        let lateral_in = |n: i64| c[..d - 1].iter().all(|x| x.abs() <= n);
        let h = site.height();
        match &self.kind {
            RegionKind::SemiBox { n, m } => lateral_in(*n) && h >= 1 && h <= *m,
            RegionKind::ExtendedBox { n, reflection } => {
                let low = match reflection {
                    Reflection::HalfPlane => 1 - n,
                    Reflection::Negation => -n,
                };
                let in_low = match reflection {
                    Reflection::HalfPlane => h >= low && h <= 0,
                    Reflection::Negation => h >= low && h <= -1,
                };
                lateral_in(*n) && ((h >= 1 && h <= *n) || in_low)
            }
            RegionKind::FullBox { m, n } => lateral_in(*m) && h.abs() <= *n,
            RegionKind::Explicit(sites) => sites.binary_search(site).is_ok(),
        }
    }

    /// Sites in lexicographic order of their coordinates.
    pub fn sites(&self) -> Result<Vec<Site>> {
        sites_of(self, DEFAULT_SITE_CAP)
    }

    /// Reflects every site (meaningful for regions symmetric under `reflection`).
    pub fn reflected(&self, reflection: Reflection) -> Result<Region> {
        let sites = self.sites()?;
        Ok(Region::explicit(self.dim, sites.iter().map(|s| reflection.apply(s))))
    }
}

/// All sites of `region` in lexicographic order.
pub fn sites_of(region: &Region, cap: usize) -> Result<Vec<Site>> {
    region.validate()?;
    let count = region.cardinality();
    if count > cap {
        return Err(Error::Capacity { what: "region sites", size: count, cap });
    }
    let d = region.dim;
    let ranges: Vec<(i64, i64)> = match &region.kind {
        RegionKind::Explicit(sites) => return Ok(sites.clone()),
        RegionKind::SemiBox { n, m } => lateral_ranges(d, *n, (1, *m)),
        RegionKind::ExtendedBox { n, reflection } => {
            let low = match reflection {
                Reflection::HalfPlane => 1 - n,
                Reflection::Negation => -n,
            };
            lateral_ranges(d, *n, (low, *n))
        }
        RegionKind::FullBox { m, n } => lateral_ranges(d, *m, (-n, *n)),
    };
    let mut out = Vec::with_capacity(count);
    let mut cur: Vec<i64> = ranges.iter().map(|r| r.0).collect();
    if ranges.iter().any(|r| r.0 > r.1) {
        return Ok(out);
    }
    loop {
        let site = Site(cur.clone());
        if region.contains(&site) {
            out.push(site);
        }
        // odometer, last coordinate fastest
        let mut axis = d;
        loop {
            if axis == 0 {
                debug_assert_eq!(out.len(), count);
                return Ok(out);
            }
            axis -= 1;
            if cur[axis] < ranges[axis].1 {
                cur[axis] += 1;
                break;
            }
            cur[axis] = ranges[axis].0;
        }
    }
}

fn lateral_ranges(d: usize, n: i64, vertical: (i64, i64)) -> Vec<(i64, i64)> {
    let mut r = vec![(-n, n); d - 1];
    r.push(vertical);
    r
}

/// Nearest neighbours of `site` inside `universe`, ordered by axis then direction.
pub fn neighbors(site: &Site, universe: Universe) -> Vec<Site> {
    let mut out = Vec::with_capacity(2 * site.dim());
    for axis in 0..site.dim() {
        for delta in [-1, 1] {
            let nb = site.shifted(axis, delta);
            if universe.contains(&nb) {
                out.push(nb);
            }
        }
    }
    out
}

/// Edges touching a region: both endpoints inside, or exactly one.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct EdgeSets {
    pub interior: Vec<Edge>,
    /// Stored as `(inside, outside)`.
    pub frontier: Vec<(Site, Site)>,
}

impl EdgeSets {
    pub fn len(&self) -> usize {
        self.interior.len() + self.frontier.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

pub fn boundary_edges(region: &Region, universe: Universe) -> Result<EdgeSets> {
    let sites = region.sites()?;
    let index: HashMap<&Site, usize> = sites.iter().enumerate().map(|(k, s)| (s, k)).collect();
    let mut sets = EdgeSets::default();
    for (k, s) in sites.iter().enumerate() {
        for nb in neighbors(s, universe) {
            match index.get(&nb) {
                Some(&j) if j > k => sets.interior.push(Edge::new(s.clone(), nb)?),
                Some(_) => {}
                None => sets.frontier.push((s.clone(), nb)),
            }
        }
    }
    Ok(sets)
}

/// Frozen spins outside a finite region.
#[derive(Clone, Debug, PartialEq)]
pub enum BoundaryCondition {
    Plus,
    Minus,
    /// `-1` on the half-space, `+1` below it.
    MinusPlus,
    /// Frontier edges are dropped.
    Free,
    Fixed(HashMap<Site, i8>),
}

impl BoundaryCondition {
    /// Spin of an exterior site; `None` for free boundaries.
    pub fn exterior_spin(&self, site: &Site) -> Result<Option<i8>> {
        Ok(match self {
            BoundaryCondition::Plus => Some(1),
            BoundaryCondition::Minus => Some(-1),
            BoundaryCondition::MinusPlus => Some(if site.is_in_half_space() { -1 } else { 1 }),
            BoundaryCondition::Free => None,
            BoundaryCondition::Fixed(map) => match map.get(site) {
                Some(&s) if s == 1 || s == -1 => Some(s),
                Some(&s) => {
                    return Err(Error::Configuration(format!("spin {s} at {site} is not +-1")))
                }
                None => {
                    return Err(Error::Configuration(format!(
                        "fixed boundary does not cover exterior site {site}"
                    )))
                }
            },
        })
    }

    /// Global spin flip of the boundary, materialising the exterior spins the
    /// region needs when the flipped condition has no named variant.
    pub fn flipped_for(&self, region: &Region, universe: Universe) -> Result<BoundaryCondition> {
        Ok(match self {
            BoundaryCondition::Plus => BoundaryCondition::Minus,
            BoundaryCondition::Minus => BoundaryCondition::Plus,
            BoundaryCondition::Free => BoundaryCondition::Free,
            BoundaryCondition::Fixed(map) => {
                BoundaryCondition::Fixed(map.iter().map(|(k, v)| (k.clone(), -v)).collect())
            }
            BoundaryCondition::MinusPlus => {
                let edges = boundary_edges(region, universe)?;
                let map = edges
                    .frontier
                    .into_iter()
                    .map(|(_, out)| {
                        let s = if out.is_in_half_space() { 1 } else { -1 };
                        (out, s)
                    })
                    .collect();
                BoundaryCondition::Fixed(map)
            }
        })
    }

    /// The uniform sign of the boundary, if it has one.
    pub fn sign(&self) -> Option<i8> {
        match self {
            BoundaryCondition::Plus => Some(1),
            BoundaryCondition::Minus => Some(-1),
            _ => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn semi_box_sites_are_lexicographic() {
        let sites = Region::semi_box(2, 1, 2).sites().unwrap();
        assert_eq!(sites.len(), 6);
        assert_eq!(sites.first(), Some(&Site::xy(-1, 1)));
        assert_eq!(sites.last(), Some(&Site::xy(1, 2)));
        assert!(sites.windows(2).all(|w| w[0] < w[1]));
    }

    #[test]
    fn extended_box_doubles_the_semi_box() {
        let r = Region::extended_box(2, 1, Reflection::HalfPlane);
        let sites = r.sites().unwrap();
        assert_eq!(sites.len(), 6);
        assert!(sites.contains(&Site::xy(0, 0)));
        let neg = Region::extended_box(2, 1, Reflection::Negation).sites().unwrap();
        assert_eq!(neg.len(), 6);
        assert!(neg.contains(&Site::xy(0, -1)));
        assert!(!neg.contains(&Site::xy(0, 0)));
    }

    #[test]
    fn explicit_single_site() {
        let r = Region::explicit(2, [Site::xy(0, 1)]);
        assert_eq!(r.sites().unwrap(), vec![Site::xy(0, 1)]);
    }

    #[test]
    fn capacity_error() {
        let r = Region::semi_box(2, 10, 10);
        assert!(matches!(sites_of(&r, 50), Err(Error::Capacity { .. })));
    }

    #[test]
    fn wall_and_bulk_neighbours() {
        let wall = neighbors(&Site::xy(0, 1), Universe::SemiInfinite);
        assert_eq!(wall, vec![Site::xy(-1, 1), Site::xy(1, 1), Site::xy(0, 2)]);
        assert_eq!(neighbors(&Site::xy(0, 2), Universe::SemiInfinite).len(), 4);
        let full = neighbors(&Site::xy(0, 0), Universe::Full);
        assert_eq!(full.len(), 4);
        assert!(full.contains(&Site::xy(0, 1)) && full.contains(&Site::xy(0, -1)));
    }

    #[test]
    fn frontier_counts() {
        let single = Region::explicit(2, [Site::xy(0, 1)]);
        let e = boundary_edges(&single, Universe::SemiInfinite).unwrap();
        assert_eq!((e.interior.len(), e.frontier.len()), (0, 3));

        // three wall sites: 3 edges upward, 2 sideways, none below the wall
        let strip = Region::semi_box(2, 1, 1);
        let e = boundary_edges(&strip, Universe::SemiInfinite).unwrap();
        assert_eq!((e.interior.len(), e.frontier.len()), (2, 5));
        let e = boundary_edges(&strip, Universe::Full).unwrap();
        assert_eq!((e.interior.len(), e.frontier.len()), (2, 8));

        let empty = Region::explicit(2, []);
        assert!(boundary_edges(&empty, Universe::Full).unwrap().is_empty());
    }

    #[test]
    fn minus_plus_boundary() {
        let bc = BoundaryCondition::MinusPlus;
        assert_eq!(bc.exterior_spin(&Site::xy(3, 1)).unwrap(), Some(-1));
        assert_eq!(bc.exterior_spin(&Site::xy(3, 0)).unwrap(), Some(1));
        let fixed = BoundaryCondition::Fixed(HashMap::new());
        assert!(fixed.exterior_spin(&Site::xy(0, 0)).is_err());
    }

    #[test]
    fn mirror_maps_layer_zero_to_wall() {
        assert_eq!(Site::xy(0, 0).mirror(), Site::xy(0, 1));
        assert_eq!(Site::xy(2, -3).mirror(), Site::xy(-2, 4));
        assert_eq!(Site::xy(2, -3).reflect_half_plane(), Site::xy(2, 4));
    }
}
