//! Small direct linear-algebra kernels for the banded systems that arise
//! from one-dimensional finite differences and finite elements.

use crate::error::{KsError, Result};

/// Tridiagonal system in three-band storage.
///
/// Row i reads: lower[i] * x[i-1] + diag[i] * x[i] + upper[i] * x[i+1] = rhs[i],
/// with lower[0] and upper[n-1] ignored.
#[derive(Debug, Clone)]
pub struct Tridiag {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl Tridiag {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// y = A x.
    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut y = vec![0.0; n];
        for i in 0..n {
            let mut v = self.diag[i] * x[i];
            if i > 0 {
                v += self.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                v += self.upper[i] * x[i + 1];
            }
            y[i] = v;
        }
        y
    }

    /// Solve A x = rhs by the Thomas algorithm (no pivoting; the systems in
    /// this crate are diagonally dominant or come from SPD forms).
    pub fn solve(&self, rhs: &[f64]) -> Result<Vec<f64>> {
        let n = self.len();
        assert_eq!(rhs.len(), n);
        let mut c = vec![0.0; n];
        let mut d = vec![0.0; n];
        let mut denom = self.diag[0];
        if denom.abs() < f64::MIN_POSITIVE {
            return Err(KsError::LinearSolveFailure("zero pivot at row 0".into()));
        }
        c[0] = self.upper[0] / denom;
        d[0] = rhs[0] / denom;
        for i in 1..n {
            denom = self.diag[i] - self.lower[i] * c[i - 1];
            if denom.abs() < 1e-300 {
                return Err(KsError::LinearSolveFailure(format!(
                    "vanishing pivot at row {i}"
                )));
            }
            if i + 1 < n {
                c[i] = self.upper[i] / denom;
            }
            d[i] = (rhs[i] - self.lower[i] * d[i - 1]) / denom;
        }
        let mut x = d;
        for i in (0..n - 1).rev() {
            x[i] -= c[i] * x[i + 1];
        }
        Ok(x)
    }
}

/// Three-point finite-difference weights on an uneven stencil with left
/// spacing `hm` and right spacing `hp`. Returns ([d1m, d10, d1p], [d2m,
/// d20, d2p]) for the first and second derivative at the center node.
pub fn fd3(hm: f64, hp: f64) -> ([f64; 3], [f64; 3]) {
    let d1 = [
        -hp / (hm * (hm + hp)),
        (hp - hm) / (hm * hp),
        hm / (hp * (hm + hp)),
    ];
    let d2 = [
        2.0 / (hm * (hm + hp)),
        -2.0 / (hm * hp),
        2.0 / (hp * (hm + hp)),
    ];
    (d1, d2)
}

/// Nodal derivative of samples on an uneven grid: three-point central
/// differences in the interior, one-sided three-point stencils at the ends.
pub fn fd_derivative(x: &[f64], v: &[f64]) -> Vec<f64> {
    let n = x.len();
    assert_eq!(v.len(), n);
    assert!(n >= 3, "need at least three nodes for derivatives");
    let mut out = vec![0.0; n];
    for i in 1..n - 1 {
        let (d1, _) = fd3(x[i] - x[i - 1], x[i + 1] - x[i]);
        out[i] = d1[0] * v[i - 1] + d1[1] * v[i] + d1[2] * v[i + 1];
    }
    let (h1, h2) = (x[1] - x[0], x[2] - x[1]);
    out[0] = -v[0] * (2.0 * h1 + h2) / (h1 * (h1 + h2)) + v[1] * (h1 + h2) / (h1 * h2)
        - v[2] * h1 / (h2 * (h1 + h2));
    let (g1, g2) = (x[n - 1] - x[n - 2], x[n - 2] - x[n - 3]);
    out[n - 1] = v[n - 1] * (2.0 * g1 + g2) / (g1 * (g1 + g2)) - v[n - 2] * (g1 + g2) / (g1 * g2)
        + v[n - 3] * g1 / (g2 * (g1 + g2));
    out
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn solves_known_system() {
        // -u'' = 1 on (0,1), u(0)=u(1)=0, 3 interior nodes, h = 1/4.
        let n = 3;
        let mut a = Tridiag::zeros(n);
        let h = 0.25;
        for i in 0..n {
            a.diag[i] = 2.0 / (h * h);
            if i > 0 {
                a.lower[i] = -1.0 / (h * h);
            }
            if i + 1 < n {
                a.upper[i] = -1.0 / (h * h);
            }
        }
        let rhs = vec![1.0; n];
        let x = a.solve(&rhs).unwrap();
        // Exact solution u = x(1-x)/2 at 0.25, 0.5, 0.75 (FD is exact here).
        let exact = [0.25 * 0.75 / 2.0, 0.5 * 0.5 / 2.0, 0.75 * 0.25 / 2.0];
        for (xi, ei) in x.iter().zip(exact) {
            assert!((xi - ei).abs() < 1e-13);
        }
    }

    #[test]
    fn matvec_roundtrip() {
        let mut a = Tridiag::zeros(5);
        for i in 0..5 {
            a.diag[i] = 3.0 + i as f64;
            a.lower[i] = -0.5;
            a.upper[i] = 0.25;
        }
        let x: Vec<f64> = (0..5).map(|i| (i as f64).sin() + 1.0).collect();
        let b = a.matvec(&x);
        let x2 = a.solve(&b).unwrap();
        for (u, v) in x.iter().zip(&x2) {
            assert!((u - v).abs() < 1e-12);
        }
    }
}
