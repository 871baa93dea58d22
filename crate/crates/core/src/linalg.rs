//! Dense symmetric-indefinite factorization `P A Pᵀ = L D Lᵀ` with
//! Bunch–Kaufman partial pivoting. `D` is block diagonal with 1×1 and 2×2
//! blocks, `L` is unit lower triangular.
//!
//! The ordinary-kriging matrix carries a zero on the diagonal of its
//! Lagrange row, so Cholesky does not apply. Factoring once costs
//! O(n³); each subsequent solve is O(n²).

use crate::error::{Error, Result};

/// Bunch–Kaufman pivot threshold (1 + √17) / 8.
const ALPHA: f64 = 0.640_388_203_202_208_4;

#[derive(Debug, Clone, Copy, PartialEq)]
enum Block {
    One(f64),
    /// Symmetric 2×2 block `[[a, b], [b, c]]` starting at this row.
    Two {
        a: f64,
        b: f64,
        c: f64,
    },
    /// Second row of a 2×2 block.
    Cont,
}

#[derive(Debug, Clone)]
pub struct SymmetricFactorization {
    n: usize,
    // row-major; strictly lower part holds L
    l: Vec<f64>,
    blocks: Vec<Block>,
    // perm[i] = original index placed at position i
    perm: Vec<usize>,
}

impl SymmetricFactorization {
    /// Factors a symmetric matrix given in row-major order. Only the lower
    /// triangle is read.
    pub fn new(n: usize, matrix: &[f64]) -> Result<Self> {
        assert_eq!(matrix.len(), n * n, "matrix must be n×n");
        let mut a = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..=i {
                let v = matrix[i * n + j];
                a[i * n + j] = v;
                a[j * n + i] = v;
            }
        }
        let scale = a.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        let tiny = scale * f64::EPSILON * n as f64;
        let mut perm: Vec<usize> = (0..n).collect();
        let mut blocks = vec![Block::Cont; n];
        let at = |a: &[f64], i: usize, j: usize| a[i * n + j];

        let mut k = 0;
        while k < n {
            let absakk = at(&a, k, k).abs();
            let (imax, colmax) =
                ((k + 1)..n)
                    .map(|i| (i, at(&a, i, k).abs()))
                    .fold((k, 0.0), |best, c| if c.1 > best.1 { c } else { best });
            if absakk.max(colmax) <= tiny {
                return Err(Error::Singular(format!("zero pivot column at step {k}")));
            }

            let (kp, step) = if absakk >= ALPHA * colmax {
                (k, 1)
            } else {
                let rowmax = (k..n)
                    .filter(|&j| j != imax)
                    .map(|j| at(&a, imax, j).abs())
                    .fold(0.0, f64::max);
                if absakk * rowmax >= ALPHA * colmax * colmax {
                    (k, 1)
                } else if at(&a, imax, imax).abs() >= ALPHA * rowmax {
                    (imax, 1)
                } else {
                    (imax, 2)
                }
            };

            let kk = k + step - 1;
            if kp != kk {
                swap_symmetric(&mut a, n, k, kk, kp);
                perm.swap(kk, kp);
            }

            if step == 1 {
                let d = at(&a, k, k);
                if d.abs() <= tiny {
                    return Err(Error::Singular(format!("zero 1×1 pivot at step {k}")));
                }
                for i in (k + 1)..n {
                    let lik = at(&a, i, k) / d;
                    for j in (k + 1)..=i {
                        let v = at(&a, i, j) - lik * at(&a, j, k);
                        a[i * n + j] = v;
                        a[j * n + i] = v;
                    }
                }
                for i in (k + 1)..n {
                    a[i * n + k] /= d;
                }
                blocks[k] = Block::One(d);
            } else {
                let (d11, d21, d22) = (at(&a, k, k), at(&a, k + 1, k), at(&a, k + 1, k + 1));
                let det = d11 * d22 - d21 * d21;
                if det.abs() <= tiny * tiny {
                    return Err(Error::Singular(format!("singular 2×2 pivot at step {k}")));
                }
                // rows of L: [w1 w2]·D⁻¹
                let mut lrows = Vec::with_capacity(n - k - 2);
                for i in (k + 2)..n {
                    let (w1, w2) = (at(&a, i, k), at(&a, i, k + 1));
                    lrows.push(((w1 * d22 - w2 * d21) / det, (w2 * d11 - w1 * d21) / det));
                }
                for i in (k + 2)..n {
                    let (l1, l2) = lrows[i - k - 2];
                    for j in (k + 2)..=i {
                        let v = at(&a, i, j) - l1 * at(&a, j, k) - l2 * at(&a, j, k + 1);
                        a[i * n + j] = v;
                        a[j * n + i] = v;
                    }
                }
                for i in (k + 2)..n {
                    let (l1, l2) = lrows[i - k - 2];
                    a[i * n + k] = l1;
                    a[i * n + k + 1] = l2;
                }
                a[(k + 1) * n + k] = 0.0;
                blocks[k] = Block::Two { a: d11, b: d21, c: d22 };
                blocks[k + 1] = Block::Cont;
            }
            k += step;
        }
        Ok(SymmetricFactorization { n, l: a, blocks, perm })
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    /// Solves `A x = b`.
    pub fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        assert_eq!(b.len(), n);
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        // L y' = P b
        for k in 0..n {
            let yk = y[k];
            if yk != 0.0 {
                for i in (k + 1)..n {
                    y[i] -= self.l[i * n + k] * yk;
                }
            }
        }
        // D z = y'
        let mut k = 0;
        while k < n {
            match self.blocks[k] {
                Block::One(d) => {
                    y[k] /= d;
                    k += 1;
                }
                Block::Two { a, b, c } => {
                    let det = a * c - b * b;
                    let (y1, y2) = (y[k], y[k + 1]);
                    y[k] = (c * y1 - b * y2) / det;
                    y[k + 1] = (a * y2 - b * y1) / det;
                    k += 2;
                }
                Block::Cont => unreachable!("2×2 continuation without head"),
            }
        }
        // Lᵀ x' = z
        for k in (0..n).rev() {
            let mut s = y[k];
            for i in (k + 1)..n {
                s -= self.l[i * n + k] * y[i];
            }
            y[k] = s;
        }
        let mut x = vec![0.0; n];
        for (i, &p) in self.perm.iter().enumerate() {
            x[p] = y[i];
        }
        x
    }
}

/// Symmetric interchange of rows/columns `r` and `s` (r < s) at elimination
/// step `k`. Columns before `k` hold finished rows of L and are swapped as
/// rows only.
fn swap_symmetric(a: &mut [f64], n: usize, k: usize, r: usize, s: usize) {
    if r == s {
        return;
    }
    for j in 0..n {
        a.swap(r * n + j, s * n + j);
    }
    for i in k..n {
        a.swap(i * n + r, i * n + s);
    }
}
