//! Random increasing Boolean functions on bit-encoded configurations.

use rand::Rng;

/// `f(x) = max_c min_{k in c} x_k`: a disjunction of conjunctions of bits,
/// hence non-decreasing in every bit.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MonotoneFunction {
    clauses: Vec<u64>,
}

impl MonotoneFunction {
    pub fn new(clauses: Vec<u64>) -> Self {
        MonotoneFunction { clauses }
    }

    /// The indicator of one bit being set.
    pub fn bit(k: usize) -> Self {
        MonotoneFunction { clauses: vec![1 << k] }
    }

    /// One to three clauses, each over one to three random variables.
    pub fn random<R: Rng + ?Sized>(vars: usize, rng: &mut R) -> Self {
        assert!(vars > 0 && vars <= 64);
        let n_clauses = rng.gen_range(1..=3);
        let clauses = (0..n_clauses)
            .map(|_| {
                let size = rng.gen_range(1..=3.min(vars));
                let mut mask = 0u64;
                while (mask.count_ones() as usize) < size {
                    mask |= 1 << rng.gen_range(0..vars);
                }
                mask
            })
            .collect();
        MonotoneFunction { clauses }
    }

    /// Restricts the random variables to the given bit positions.
    pub fn random_on<R: Rng + ?Sized>(support: &[usize], rng: &mut R) -> Self {
        let local = Self::random(support.len(), rng);
        let clauses = local
            .clauses
            .iter()
            .map(|&c| {
                (0..support.len())
                    .filter(|k| c >> k & 1 == 1)
                    .fold(0u64, |acc, k| acc | 1 << support[k])
            })
            .collect();
        MonotoneFunction { clauses }
    }

    #[inline]
    pub fn eval(&self, bits: u64) -> bool {
        self.clauses.iter().any(|&c| c & !bits == 0)
    }

    pub fn clauses(&self) -> &[u64] {
        &self.clauses
    }

    pub fn describe(&self) -> String {
        let parts: Vec<String> = self.clauses.iter().map(|c| format!("{c:b}")).collect();
        format!("or[{}]", parts.join(","))
    }
}

/// `<fg> - <f><g>` under a probability table indexed by bit patterns.
pub fn covariance(table: &[f64], f: &MonotoneFunction, g: &MonotoneFunction) -> f64 {
    let (mut ef, mut eg, mut efg) = (0.0, 0.0, 0.0);
    for (bits, &p) in table.iter().enumerate() {
        let (a, b) = (f.eval(bits as u64), g.eval(bits as u64));
        if a {
            ef += p;
        }
        if b {
            eg += p;
        }
        if a && b {
            efg += p;
        }
    }
    efg - ef * eg
}

/// Mean of an indicator under a probability table.
pub fn mean(table: &[f64], f: &MonotoneFunction) -> f64 {
    table.iter().enumerate().filter(|(b, _)| f.eval(*b as u64)).map(|(_, p)| p).sum()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rng::stream_rng;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn random_functions_are_increasing(seed in any::<u64>(), x in 0u64..(1 << 10), extra in 0u64..(1 << 10)) {
            let mut rng = stream_rng(seed, 0);
            let f = MonotoneFunction::random(10, &mut rng);
            let y = x | extra;
            prop_assert!(!f.eval(x) || f.eval(y));
        }
    }

    #[test]
    fn support_is_respected() {
        let mut rng = stream_rng(3, 0);
        for _ in 0..50 {
            let f = MonotoneFunction::random_on(&[2, 5, 9], &mut rng);
            assert!(f.clauses().iter().all(|c| c & !(1 << 2 | 1 << 5 | 1 << 9) == 0));
        }
    }
}
