//! One-dimensional quadrature rules.

use std::f64::consts::PI;

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
pub enum QuadratureRule {
    /// Gauss–Legendre with `k` nodes.
    Gauss(usize),
    /// Composite trapezoid with `k` equal panels.
    Trapezoid(usize),
    /// Composite trapezoid on explicit points of the unit interval; the
    /// points must be increasing, start at 0 and end at 1.
    Grid(Vec<f64>),
}

impl QuadratureRule {
    /// Nodes and weights mapped onto `[a, b]`.
    pub fn nodes(&self, a: f64, b: f64) -> Result<Vec<(f64, f64)>> {
        let unit: Vec<(f64, f64)> = match self {
            QuadratureRule::Gauss(k) => {
                if *k == 0 {
                    return Err(Error::InvalidArgument("Gauss rule needs at least one node".into()));
                }
                gauss_legendre(*k)
                    .into_iter()
                    .map(|(x, w)| ((x + 1.0) / 2.0, w / 2.0))
                    .collect()
            }
            QuadratureRule::Trapezoid(k) => {
                if *k == 0 {
                    return Err(Error::InvalidArgument("trapezoid rule needs at least one panel".into()));
                }
                let pts: Vec<f64> = (0..=*k).map(|i| i as f64 / *k as f64).collect();
                trapezoid_weights(&pts)
            }
            QuadratureRule::Grid(pts) => {
                if pts.len() < 2 {
                    return Err(Error::InvalidArgument(format!(
                        "insufficient nodes: grid has {} point(s), needs at least 2",
                        pts.len()
                    )));
                }
                let increasing = pts.windows(2).all(|w| w[1] > w[0]);
                if !increasing || pts[0] != 0.0 || *pts.last().unwrap() != 1.0 {
                    return Err(Error::InvalidArgument(
                        "grid must be increasing from 0 to 1".into(),
                    ));
                }
                trapezoid_weights(pts)
            }
        };
        let len = b - a;
        Ok(unit.into_iter().map(|(x, w)| (a + len * x, len * w)).collect())
    }

    pub fn integrate<F: FnMut(f64) -> Result<f64>>(&self, a: f64, b: f64, mut f: F) -> Result<f64> {
        let mut acc = 0.0;
        for (x, w) in self.nodes(a, b)? {
            acc += w * f(x)?;
        }
        Ok(acc)
    }

    pub fn label(&self) -> String {
        match self {
            QuadratureRule::Gauss(k) => format!("gauss({k})"),
            QuadratureRule::Trapezoid(k) => format!("trapezoid({k})"),
            QuadratureRule::Grid(p) => format!("grid({})", p.len()),
        }
    }
}

fn trapezoid_weights(pts: &[f64]) -> Vec<(f64, f64)> {
    let n = pts.len();
    (0..n)
        .map(|i| {
            let left = if i > 0 { pts[i] - pts[i - 1] } else { 0.0 };
            let right = if i + 1 < n { pts[i + 1] - pts[i] } else { 0.0 };
            (pts[i], (left + right) / 2.0)
        })
        .collect()
}

/// Gauss–Legendre nodes and weights on `[-1, 1]`, by Newton iteration on `P_k`.
pub fn gauss_legendre(k: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(k);
    for i in 0..k {
        let mut x = (PI * (i as f64 + 0.75) / (k as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (p, d) = legendre(k, x);
            dp = d;
            let step = p / d;
            x -= step;
            if step.abs() < 1e-16 {
                break;
            }
        }
        let (_, d) = legendre(k, x);
        if d != 0.0 {
            dp = d;
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out.reverse();
    out
}

/// `(P_k(x), P_k'(x))` via the three-term recurrence.
fn legendre(k: usize, x: f64) -> (f64, f64) {
    let (mut p0, mut p1) = (1.0, x);
    if k == 0 {
        return (1.0, 0.0);
    }
    for n in 2..=k {
        let p2 = ((2 * n - 1) as f64 * x * p1 - (n - 1) as f64 * p0) / n as f64;
        p0 = p1;
        p1 = p2;
    }
    let d = k as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_integrates_polynomials_exactly() {
        for k in [1usize, 2, 5, 32, 64] {
            let rule = QuadratureRule::Gauss(k);
            let deg = 2 * k - 1;
            let got = rule.integrate(0.0, 2.0, |x| Ok(x.powi(deg as i32))).unwrap();
            let exact = 2f64.powi(deg as i32 + 1) / (deg as f64 + 1.0);
            assert!((got - exact).abs() <= 1e-12 * exact, "k={k}: {got} vs {exact}");
        }
    }

    #[test]
    fn gauss_weights_sum_to_length() {
        let s: f64 = QuadratureRule::Gauss(64).nodes(0.0, 3.0).unwrap().iter().map(|p| p.1).sum();
        assert!((s - 3.0).abs() < 1e-13);
    }

    #[test]
    fn smooth_integrand() {
        let got = QuadratureRule::Gauss(32).integrate(0.0, 1.0, |x| Ok(x.exp())).unwrap();
        assert!((got - (1f64.exp() - 1.0)).abs() < 1e-14);
        let trap = QuadratureRule::Trapezoid(1000).integrate(0.0, 1.0, |x| Ok(x.exp())).unwrap();
        assert!((trap - (1f64.exp() - 1.0)).abs() < 1e-6);
    }

    #[test]
    fn degenerate_grids_are_rejected() {
        assert!(QuadratureRule::Grid(vec![0.0]).nodes(0.0, 1.0).is_err());
        assert!(QuadratureRule::Grid(vec![0.0, 0.5]).nodes(0.0, 1.0).is_err());
        assert!(QuadratureRule::Gauss(0).nodes(0.0, 1.0).is_err());
        assert_eq!(QuadratureRule::Grid(vec![0.0, 1.0]).nodes(0.0, 2.0).unwrap(), vec![(0.0, 1.0), (2.0, 1.0)]);
    }
}
