//! Column transfer matrix for rectangular d = 2 regions.
//!
//! Sites are added one at a time in lexicographic `(x, y)` order while a
//! window holds the last `H` spins (one column). Bit `H - 1` of a window
//! state is the newest spin, bit `H - 2` the spin below it, and the dropped
//! bit 0 is its left neighbour.

use crate::model::SpinSystem;

use super::{Direction, Evaluation};

pub(crate) struct Layout {
    height: usize,
    /// Per site: coupling and edge index to the left and lower neighbours.
    left: Vec<Option<(f64, usize)>>,
    down: Vec<Option<(f64, usize)>>,
}

/// Detects a full `W x H` rectangle listed in lexicographic order.
pub(crate) fn layout(sys: &SpinSystem) -> Option<Layout> {
    let sites = sys.sites();
    let n = sites.len();
    if n == 0 || sites[0].dim() != 2 {
        return None;
    }
    let (x0, y0) = (sites[0].coords()[0], sites[0].coords()[1]);
    let height = sites.iter().take_while(|s| s.coords()[0] == x0).count();
    if !n.is_multiple_of(height) {
        return None;
    }
    for (k, s) in sites.iter().enumerate() {
        if s.coords()[0] != x0 + (k / height) as i64 || s.coords()[1] != y0 + (k % height) as i64 {
            return None;
        }
    }
    let mut left = vec![None; n];
    let mut down = vec![None; n];
    for (e, &(a, b, j)) in sys.edges().iter().enumerate() {
        let (a, b) = (a.min(b) as usize, a.max(b) as usize);
        if b == a + 1 && b % height != 0 {
            down[b] = Some((j, e));
        } else if b == a + height {
            left[b] = Some((j, e));
        } else {
            return None;
        }
    }
    Some(Layout { height, left, down })
}

impl Layout {
    pub(crate) fn height(&self) -> usize {
        self.height
    }
}

pub(crate) fn transfer(sys: &SpinSystem, lay: &Layout, dirs: &[Direction]) -> Evaluation {
    let h = lay.height;
    let size = 1usize << h;
    let k = dirs.len();
    let beta = sys.beta();
    let mut v = vec![0.0; size];
    let mut dv = vec![vec![0.0; size]; k];
    let mut nv = vec![0.0; size];
    let mut ndv = vec![vec![0.0; size]; k];
    v[0] = 1.0;
    let mut log_scale = 0.0;
    let low_mask = (size >> 1) - 1;
    for site in 0..sys.len() {
        let (jl, el) = lay.left[site].unwrap_or((0.0, usize::MAX));
        let (jd, ed) = lay.down[site].unwrap_or((0.0, usize::MAX));
        let hf = sys.effective_field(site);
        // factors[s][l][d] for new spin s, left spin l, lower spin d
        let mut factors = [[[0.0; 2]; 2]; 2];
        let mut locals = vec![[[[0.0; 2]; 2]; 2]; k];
        for si in 0..2 {
            for li in 0..2 {
                for di in 0..2 {
                    let (s, l, d) = (2.0 * si as f64 - 1.0, 2.0 * li as f64 - 1.0, 2.0 * di as f64 - 1.0);
                    factors[si][li][di] = (beta * (jl * s * l + jd * s * d + hf * s)).exp();
                    for (q, dir) in dirs.iter().enumerate() {
                        let djl = if el == usize::MAX { 0.0 } else { dir.couplings[el] };
                        let djd = if ed == usize::MAX { 0.0 } else { dir.couplings[ed] };
                        locals[q][si][li][di] = beta * (djl * s * l + djd * s * d + dir.field[site] * s);
                    }
                }
            }
        }
        for t in 0..size {
            let si = t >> (h - 1) & 1;
            let di = if h >= 2 { t >> (h - 2) & 1 } else { 0 };
            let base = (t & low_mask) << 1;
            let mut acc = 0.0;
            for li in 0..2 {
                let s = base | li;
                acc += factors[si][li][di] * v[s];
            }
            nv[t] = acc;
            for q in 0..k {
                let mut a = 0.0;
                for li in 0..2 {
                    let s = base | li;
                    a += factors[si][li][di] * (dv[q][s] + locals[q][si][li][di] * v[s]);
                }
                ndv[q][t] = a;
            }
        }
        let c: f64 = nv.iter().sum();
        let inv = 1.0 / c;
        for x in nv.iter_mut() {
            *x *= inv;
        }
        for row in ndv.iter_mut() {
            for x in row.iter_mut() {
                *x *= inv;
            }
        }
        log_scale += c.ln();
        std::mem::swap(&mut v, &mut nv);
        std::mem::swap(&mut dv, &mut ndv);
    }
    let z: f64 = v.iter().sum();
    Evaluation {
        log_z: log_scale + z.ln(),
        direction_means: dv.iter().map(|row| row.iter().sum::<f64>() / (beta * z)).collect(),
        mask_means: Vec::new(),
        magnetization: None,
    }
}
