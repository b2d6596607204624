//! Small dense two-phase simplex for `max c.x  s.t.  A x = b, x >= 0`.
//!
//! Full-tableau pivoting with Bland's rule. Intended for the handful of rows
//! and few dozen columns that arise in grasp analysis; no sparsity, no
//! presolve.

const PIVOT_EPS: f64 = 1e-11;
const COST_EPS: f64 = 1e-11;
const FEAS_EPS: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    /// Equality-constraint multipliers `y` with `A^T y >= c` at optimum.
    pub duals: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum LpOutcome {
    Optimal(LpSolution),
    Infeasible,
    Unbounded,
}

/// Equality-form LP with non-negative variables.
#[derive(Debug, Clone)]
pub struct LinearProgram {
    /// Row-major constraint matrix, `rows x vars`.
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

struct Tableau {
    rows: usize,
    vars: usize,
    // rows x (vars + rows + 1); the last column is the right-hand side and
    // the artificial block holds B^-1
    t: Vec<Vec<f64>>,
    basis: Vec<usize>,
}

impl Tableau {
    fn width(&self) -> usize {
        self.vars + self.rows + 1
    }

    fn rhs(&self, i: usize) -> f64 {
        self.t[i][self.vars + self.rows]
    }

    fn pivot(&mut self, row: usize, col: usize) {
        let w = self.width();
        let p = self.t[row][col];
        for k in 0..w {
            self.t[row][k] /= p;
        }
        self.t[row][col] = 1.0;
        let pivot_row = self.t[row].clone();
        for i in 0..self.rows {
            if i == row {
                continue;
            }
            let f = self.t[i][col];
            if f != 0.0 {
                for k in 0..w {
                    self.t[i][k] -= f * pivot_row[k];
                }
                self.t[i][col] = 0.0;
            }
        }
        self.basis[row] = col;
    }

    fn reduced_costs(&self, cost: &[f64]) -> Vec<f64> {
        let n = self.vars + self.rows;
        let mut d = cost.to_vec();
        for (i, &bi) in self.basis.iter().enumerate() {
            let cb = cost[bi];
            if cb != 0.0 {
                for j in 0..n {
                    d[j] -= cb * self.t[i][j];
                }
            }
        }
        d
    }

    fn objective(&self, cost: &[f64]) -> f64 {
        self.basis
            .iter()
            .enumerate()
            .map(|(i, &bi)| cost[bi] * self.rhs(i))
            .sum()
    }

    /// Runs simplex iterations on `cost` over columns `< allowed`.
    /// Returns `false` when unbounded.
    fn optimize(&mut self, cost: &[f64], allowed: usize) -> bool {
        let max_iter = 50 * (self.vars + self.rows).max(10);
        for _ in 0..max_iter {
            let d = self.reduced_costs(cost);
            // Bland: lowest-index improving column
            let Some(col) = (0..allowed).find(|&j| d[j] > COST_EPS && !self.basis.contains(&j))
            else {
                return true;
            };
            let mut best: Option<(usize, f64)> = None;
            for i in 0..self.rows {
                let a = self.t[i][col];
                if a > PIVOT_EPS {
                    let ratio = self.rhs(i) / a;
                    best = match best {
                        None => Some((i, ratio)),
                        Some((bi, br)) => {
                            if ratio < br - 1e-14
                                || (ratio <= br + 1e-14 && self.basis[i] < self.basis[bi])
                            {
                                Some((i, ratio))
                            } else {
                                Some((bi, br))
                            }
                        }
                    };
                }
            }
            match best {
                Some((row, _)) => self.pivot(row, col),
                None => return false,
            }
        }
        true
    }
}

impl LinearProgram {
    pub fn new(a: Vec<Vec<f64>>, b: Vec<f64>, c: Vec<f64>) -> Self {
        LinearProgram { a, b, c }
    }

    pub fn solve(&self) -> LpOutcome {
        let rows = self.a.len();
        let vars = self.c.len();
        assert_eq!(self.b.len(), rows, "rhs length");
        assert!(self.a.iter().all(|r| r.len() == vars), "ragged constraint matrix");

        let sign: Vec<f64> = self.b.iter().map(|&b| if b < 0.0 { -1.0 } else { 1.0 }).collect();
        let width = vars + rows + 1;
        let t = (0..rows)
            .map(|i| {
                let mut row = vec![0.0; width];
                for j in 0..vars {
                    row[j] = sign[i] * self.a[i][j];
                }
                row[vars + i] = 1.0;
                row[width - 1] = sign[i] * self.b[i];
                row
            })
            .collect();
        let mut tab = Tableau {
            rows,
            vars,
            t,
            basis: (vars..vars + rows).collect(),
        };

        // phase 1: drive the artificials to zero
        let mut phase1 = vec![0.0; vars + rows];
        for c in &mut phase1[vars..] {
            *c = -1.0;
        }
        tab.optimize(&phase1, vars + rows);
        let scale = 1.0 + self.b.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
        if tab.objective(&phase1) < -FEAS_EPS * scale {
            return LpOutcome::Infeasible;
        }
        // pivot zero-level artificials out where a structural column allows
        for i in 0..rows {
            if tab.basis[i] >= vars {
                if let Some(j) = (0..vars)
                    .filter(|j| !tab.basis.contains(j))
                    .max_by(|&p, &q| tab.t[i][p].abs().total_cmp(&tab.t[i][q].abs()))
                    .filter(|&j| tab.t[i][j].abs() > PIVOT_EPS)
                {
                    tab.pivot(i, j);
                }
            }
        }

        // phase 2
        let mut cost = vec![0.0; vars + rows];
        cost[..vars].copy_from_slice(&self.c);
        if !tab.optimize(&cost, vars) {
            return LpOutcome::Unbounded;
        }

        let mut x = vec![0.0; vars];
        for (i, &bi) in tab.basis.iter().enumerate() {
            if bi < vars {
                x[bi] = tab.rhs(i).max(0.0);
            }
        }
        // y^T = c_B^T B^-1; B^-1 sits in the artificial columns
        let duals = (0..rows)
            .map(|k| {
                let y: f64 = tab
                    .basis
                    .iter()
                    .enumerate()
                    .map(|(i, &bi)| cost[bi] * tab.t[i][vars + k])
                    .sum();
                y * sign[k]
            })
            .collect();
        let objective = self.c.iter().zip(&x).map(|(c, x)| c * x).sum();
        LpOutcome::Optimal(LpSolution {
            x,
            objective,
            duals,
        })
    }
}
