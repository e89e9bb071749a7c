//! Exhaustive enumeration with Gray-code single-flip updates.
//!
//! Configuration space is cut into blocks over the high bits; each block
//! recomputes its starting energy exactly and walks the low bits in Gray
//! order, so roundoff never accumulates across blocks.

use crate::model::SpinSystem;

use super::{Direction, Evaluation};

const BLOCK_BITS: usize = 16;

#[derive(Clone, Debug)]
struct Acc {
    shift: f64,
    z: f64,
    dirs: Vec<f64>,
    masks: Vec<f64>,
    mag: Vec<f64>,
}

impl Acc {
    fn new(k: usize, masks: usize, mag: usize) -> Self {
        Acc { shift: f64::NEG_INFINITY, z: 0.0, dirs: vec![0.0; k], masks: vec![0.0; masks], mag: vec![0.0; mag] }
    }

    fn rescale(&mut self, factor: f64) {
        self.z *= factor;
        for v in self.dirs.iter_mut().chain(self.masks.iter_mut()).chain(self.mag.iter_mut()) {
            *v *= factor;
        }
    }

    #[inline]
    fn weight(&mut self, lw: f64) -> f64 {
        if lw > self.shift {
            let f = if self.shift == f64::NEG_INFINITY { 0.0 } else { (self.shift - lw).exp() };
            self.rescale(f);
            self.shift = lw;
        }
        (lw - self.shift).exp()
    }

    fn merge(mut self, mut other: Acc) -> Acc {
        if other.shift > self.shift {
            std::mem::swap(&mut self, &mut other);
        }
        if other.shift == f64::NEG_INFINITY {
            return self;
        }
        let f = (other.shift - self.shift).exp();
        self.z += f * other.z;
        for (a, b) in self.dirs.iter_mut().zip(&other.dirs) {
            *a += f * b;
        }
        for (a, b) in self.masks.iter_mut().zip(&other.masks) {
            *a += f * b;
        }
        for (a, b) in self.mag.iter_mut().zip(&other.mag) {
            *a += f * b;
        }
        self
    }
}

struct Kernel<'a> {
    sys: &'a SpinSystem,
    dirs: &'a [Direction],
    masks: &'a [u64],
    magnetization: bool,
    /// Per site: (neighbour, edge index).
    adj: Vec<Vec<(usize, usize)>>,
    heff: Vec<f64>,
}

impl<'a> Kernel<'a> {
    fn block(&self, high: u64, low_bits: usize) -> Acc {
        let n = self.sys.len();
        let beta = self.sys.beta();
        let mut acc = Acc::new(self.dirs.len(), self.masks.len(), if self.magnetization { n } else { 0 });
        let mut bits: u64 = high << low_bits;
        let mut spins: Vec<i8> = (0..n).map(|i| if bits >> i & 1 == 1 { 1 } else { -1 }).collect();
        let mut energy = self.sys.energy(&spins);
        let mut dvals: Vec<f64> = self.dirs.iter().map(|d| d.observable(self.sys, &spins)).collect();
        let count: u64 = 1 << low_bits;
        for g in 0..count {
            if g > 0 {
                let i = g.trailing_zeros() as usize;
                let s = spins[i] as f64;
                let mut local = self.heff[i];
                for &(j, e) in &self.adj[i] {
                    local += self.sys.edges()[e].2 * spins[j] as f64;
                }
                energy += 2.0 * s * local;
                for (k, d) in self.dirs.iter().enumerate() {
                    let mut dl = d.field[i];
                    for &(j, e) in &self.adj[i] {
                        dl += d.couplings[e] * spins[j] as f64;
                    }
                    dvals[k] -= 2.0 * s * dl;
                }
                spins[i] = -spins[i];
                bits ^= 1 << i;
            }
            let w = acc.weight(-beta * energy);
            acc.z += w;
            for (a, v) in acc.dirs.iter_mut().zip(&dvals) {
                *a += w * v;
            }
            for (a, &m) in acc.masks.iter_mut().zip(self.masks) {
                // product of spins over the mask: -1 per minus spin
                if (m & !bits).count_ones() & 1 == 0 {
                    *a += w;
                } else {
                    *a -= w;
                }
            }
            if self.magnetization {
                for (a, &s) in acc.mag.iter_mut().zip(&spins) {
                    *a += w * s as f64;
                }
            }
        }
        acc
    }
}

pub(crate) fn enumerate(sys: &SpinSystem, dirs: &[Direction], masks: &[u64], magnetization: bool) -> Evaluation {
    let n = sys.len();
    let mut adj = vec![Vec::new(); n];
    for (e, &(a, b, _)) in sys.edges().iter().enumerate() {
        adj[a as usize].push((b as usize, e));
        adj[b as usize].push((a as usize, e));
    }
    let kernel = Kernel { sys, dirs, masks, magnetization, adj, heff: (0..n).map(|i| sys.effective_field(i)).collect() };
    let low_bits = n.min(BLOCK_BITS);
    let blocks: u64 = 1 << (n - low_bits);
    let accs = run_blocks(blocks, |b| kernel.block(b, low_bits));
    let acc = accs
        .into_iter()
        .reduce(Acc::merge)
        .expect("at least one block");
    let z = acc.z;
    Evaluation {
        log_z: acc.shift + z.ln(),
        direction_means: acc.dirs.iter().map(|v| v / z).collect(),
        mask_means: acc.masks.iter().map(|v| v / z).collect(),
        magnetization: if magnetization { Some(acc.mag.iter().map(|v| v / z).collect()) } else { None },
    }
}

#[cfg(feature = "parallel")]
fn run_blocks<F: Fn(u64) -> Acc + Sync + Send>(blocks: u64, f: F) -> Vec<Acc> {
    use rayon::prelude::*;
    if blocks == 1 {
        return vec![f(0)];
    }
    (0..blocks).into_par_iter().map(f).collect()
}

#[cfg(not(feature = "parallel"))]
fn run_blocks<F: Fn(u64) -> Acc>(blocks: u64, f: F) -> Vec<Acc> {
    (0..blocks).map(f).collect()
}

/// Normalised Gibbs probabilities indexed by the bit encoding (bit set = +1).
pub(crate) fn probability_table(sys: &SpinSystem) -> Vec<f64> {
    let n = sys.len();
    let beta = sys.beta();
    let mut spins = vec![-1i8; n];
    let mut lw = Vec::with_capacity(1 << n);
    for bits in 0u64..(1 << n) {
        for (i, s) in spins.iter_mut().enumerate() {
            *s = if bits >> i & 1 == 1 { 1 } else { -1 };
        }
        lw.push(-beta * sys.energy(&spins));
    }
    let max = lw.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut total = 0.0;
    for v in lw.iter_mut() {
        *v = (*v - max).exp();
        total += *v;
    }
    for v in lw.iter_mut() {
        *v /= total;
    }
    lw
}
