//! Dense two-phase simplex for `min c·x  s.t.  A x = b, x >= 0`.
//!
//! Bland's rule throughout, so it terminates on degenerate problems. Meant for
//! small cross-check problems, not for production sizes.

use thiserror::Error;

const EPS: f64 = 1e-10;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible")]
    Infeasible,
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("constraint matrix rows must have {0} columns")]
    Shape(usize),
}

#[derive(Debug, Clone)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
}

struct Tableau {
    /// `rows` constraint rows followed by the objective row; last column is rhs.
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
    cols: usize,
}

impl Tableau {
    fn pivot(&mut self, r: usize, c: usize) {
        let p = self.t[r][c];
        for v in self.t[r].iter_mut() {
            *v /= p;
        }
        let pivot_row = self.t[r].clone();
        for (i, row) in self.t.iter_mut().enumerate() {
            if i == r {
                continue;
            }
            let f = row[c];
            if f != 0.0 {
                for (v, pv) in row.iter_mut().zip(&pivot_row) {
                    *v -= f * pv;
                }
            }
        }
        self.basis[r] = c;
    }

    /// Runs simplex iterations on the objective row over columns `< allowed`.
    fn optimize(&mut self, allowed: usize) -> Result<(), LpError> {
        let m = self.basis.len();
        let rhs = self.cols;
        loop {
            let obj = &self.t[m];
            let Some(enter) = (0..allowed).find(|&j| obj[j] < -EPS) else {
                return Ok(());
            };
            let mut leave: Option<(usize, f64)> = None;
            for i in 0..m {
                let a = self.t[i][enter];
                if a > EPS {
                    let ratio = self.t[i][rhs] / a;
                    leave = match leave {
                        None => Some((i, ratio)),
                        Some((li, lr)) => {
                            if ratio < lr - EPS || (ratio <= lr + EPS && self.basis[i] < self.basis[li]) {
                                Some((i, ratio))
                            } else {
                                Some((li, lr))
                            }
                        }
                    };
                }
            }
            let (r, _) = leave.ok_or(LpError::Unbounded)?;
            self.pivot(r, enter);
        }
    }
}

/// Minimizes `c·x` subject to `a x = b`, `x >= 0`.
pub fn minimize(c: &[f64], a: &[Vec<f64>], b: &[f64]) -> Result<LpSolution, LpError> {
    let n = c.len();
    let m = a.len();
    if a.iter().any(|row| row.len() != n) || b.len() != m {
        return Err(LpError::Shape(n));
    }
    // Columns: n structural, m artificial, then rhs.
    let cols = n + m;
    let mut t = vec![vec![0.0; cols + 1]; m + 1];
    for i in 0..m {
        let sign = if b[i] < 0.0 { -1.0 } else { 1.0 };
        for j in 0..n {
            t[i][j] = sign * a[i][j];
        }
        t[i][n + i] = 1.0;
        t[i][cols] = sign * b[i];
    }
    // Phase 1 objective: sum of artificials, expressed in nonbasic terms.
    #[allow(clippy::needless_range_loop)]
    for i in 0..m {
        for j in 0..=cols {
            if j < n || j == cols {
                t[m][j] -= t[i][j];
            }
        }
    }
    let mut tab = Tableau {
        t,
        basis: (n..n + m).collect(),
        cols,
    };
    tab.optimize(cols)?;
    if -tab.t[m][cols] > 1e-8 {
        return Err(LpError::Infeasible);
    }
    // Drive zero-level artificials out of the basis where possible.
    let mut redundant = Vec::new();
    for r in 0..m {
        if tab.basis[r] >= n {
            match (0..n).find(|&j| tab.t[r][j].abs() > EPS) {
                Some(j) => tab.pivot(r, j),
                None => redundant.push(r),
            }
        }
    }
    for &r in redundant.iter().rev() {
        tab.t.remove(r);
        tab.basis.remove(r);
    }
    let m = tab.basis.len();
    // Phase 2 objective row.
    let mut obj = vec![0.0; cols + 1];
    obj[..n].copy_from_slice(c);
    for (r, &bj) in tab.basis.iter().enumerate() {
        let cb = obj[bj];
        if cb != 0.0 {
            for (o, v) in obj.iter_mut().zip(&tab.t[r]) {
                *o -= cb * v;
            }
        }
    }
    tab.t[m] = obj;
    tab.optimize(n)?;
    let mut x = vec![0.0; n];
    for (r, &bj) in tab.basis.iter().enumerate() {
        if bj < n {
            x[bj] = tab.t[r][cols];
        }
    }
    let objective = c.iter().zip(&x).map(|(ci, xi)| ci * xi).sum();
    Ok(LpSolution { x, objective })
}
