//! Dense primal-dual interior-point solver for small linear programs.
//!
//! Problems are given as
//!
//! ```text
//! min cᵀx  s.t.  A_ub·x ≤ b_ub,  A_eq·x = b_eq,  lb ≤ x ≤ ub
//! ```
//!
//! with finite lower bounds. Fixed variables are substituted out, the rest is
//! shifted to `x' = x − lb` and brought to `min c'ᵀz, M·z = r, z ≥ 0` with
//! slack columns for the inequalities and the finite upper bounds. That form
//! is solved with Mehrotra's predictor-corrector method on the normal
//! equations.

use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum LpError {
    #[error("dimension mismatch: {0}")]
    Dimension(String),
    #[error("lower bound of variable {0} is not finite")]
    UnboundedBelow(usize),
    #[error("bounds of variable {0} are inverted")]
    InvertedBounds(usize),
    #[error("equality row {0} has no free variables but a nonzero right-hand side")]
    Infeasible(usize),
    #[error("no convergence after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("normal equations are not positive definite")]
    Singular,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub c: Vec<f64>,
    pub a_ub: Vec<Vec<f64>>,
    pub b_ub: Vec<f64>,
    pub a_eq: Vec<Vec<f64>>,
    pub b_eq: Vec<f64>,
    pub lb: Vec<f64>,
    pub ub: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub x: Vec<f64>,
    pub objective: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct IpmOptions {
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for IpmOptions {
    fn default() -> Self {
        Self {
            tolerance: 1e-10,
            max_iterations: 100,
        }
    }
}

impl LinearProgram {
    fn check(&self) -> Result<(), LpError> {
        let n = self.c.len();
        let bad_rows = |rows: &[Vec<f64>]| rows.iter().any(|r| r.len() != n);
        if bad_rows(&self.a_ub) || bad_rows(&self.a_eq) {
            return Err(LpError::Dimension("constraint row length differs from c".into()));
        }
        if self.a_ub.len() != self.b_ub.len() || self.a_eq.len() != self.b_eq.len() {
            return Err(LpError::Dimension("right-hand side length differs from row count".into()));
        }
        if self.lb.len() != n || self.ub.len() != n {
            return Err(LpError::Dimension("bounds length differs from c".into()));
        }
        for i in 0..n {
            if !self.lb[i].is_finite() {
                return Err(LpError::UnboundedBelow(i));
            }
            if self.ub[i] < self.lb[i] {
                return Err(LpError::InvertedBounds(i));
            }
        }
        Ok(())
    }

    pub fn solve(&self) -> Result<LpSolution, LpError> {
        self.solve_with(IpmOptions::default())
    }

    pub fn solve_with(&self, opts: IpmOptions) -> Result<LpSolution, LpError> {
        self.check()?;
        let n = self.c.len();
        let free: Vec<usize> = (0..n).filter(|&i| self.ub[i] > self.lb[i]).collect();
        let bounded: Vec<usize> = free
            .iter()
            .copied()
            .filter(|&i| self.ub[i].is_finite())
            .collect();

        // right-hand sides after fixing and shifting every variable to lb
        let shift = |row: &[f64], rhs: f64| rhs - row.iter().zip(&self.lb).map(|(a, l)| a * l).sum::<f64>();

        let mut rows: Vec<Vec<f64>> = Vec::new();
        let mut rhs = Vec::new();
        let n_free = free.len();
        let n_slack = self.a_ub.len();
        let width = n_free + n_slack + bounded.len();

        for (r, row) in self.a_ub.iter().enumerate() {
            let mut dense = vec![0.0; width];
            for (col, &i) in free.iter().enumerate() {
                dense[col] = row[i];
            }
            dense[n_free + r] = 1.0;
            rows.push(dense);
            rhs.push(shift(row, self.b_ub[r]));
        }
        for (r, row) in self.a_eq.iter().enumerate() {
            let mut dense = vec![0.0; width];
            for (col, &i) in free.iter().enumerate() {
                dense[col] = row[i];
            }
            let b = shift(row, self.b_eq[r]);
            if dense.iter().all(|&a| a == 0.0) {
                if b.abs() > 1e-12 {
                    return Err(LpError::Infeasible(r));
                }
                continue;
            }
            rows.push(dense);
            rhs.push(b);
        }
        for (k, &i) in bounded.iter().enumerate() {
            let mut dense = vec![0.0; width];
            let col = free.iter().position(|&f| f == i).expect("bounded is a subset of free");
            dense[col] = 1.0;
            dense[n_free + n_slack + k] = 1.0;
            rows.push(dense);
            rhs.push(self.ub[i] - self.lb[i]);
        }
        let mut cost = vec![0.0; width];
        for (col, &i) in free.iter().enumerate() {
            cost[col] = self.c[i];
        }

        let (z, iterations) = if width == 0 {
            (Vec::new(), 0)
        } else {
            mehrotra(&rows, &rhs, &cost, opts)?
        };

        let mut x = self.lb.clone();
        for (col, &i) in free.iter().enumerate() {
            x[i] = self.lb[i] + z[col];
        }
        let objective = self.c.iter().zip(&x).map(|(c, x)| c * x).sum();
        Ok(LpSolution {
            x,
            objective,
            iterations,
        })
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// `A·v` for row-major `A`.
fn mul(a: &[Vec<f64>], v: &[f64]) -> Vec<f64> {
    a.iter().map(|row| dot(row, v)).collect()
}

/// `Aᵀ·v`.
fn mul_t(a: &[Vec<f64>], v: &[f64], width: usize) -> Vec<f64> {
    let mut out = vec![0.0; width];
    for (row, &vi) in a.iter().zip(v) {
        for (o, &aij) in out.iter_mut().zip(row) {
            *o += aij * vi;
        }
    }
    out
}

/// Cholesky factor of the symmetric matrix `A·diag(d)·Aᵀ`.
struct Normal {
    l: Vec<Vec<f64>>,
}

impl Normal {
    fn factor(a: &[Vec<f64>], d: &[f64]) -> Result<Self, LpError> {
        let m = a.len();
        let mut g = vec![vec![0.0; m]; m];
        for i in 0..m {
            for j in 0..=i {
                let v: f64 = a[i].iter().zip(&a[j]).zip(d).map(|((x, y), w)| x * y * w).sum();
                g[i][j] = v;
                g[j][i] = v;
            }
        }
        cholesky(&g).map(|l| Self { l }).ok_or(LpError::Singular)
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let m = b.len();
        let l = &self.l;
        let mut y = b.to_vec();
        for i in 0..m {
            for k in 0..i {
                y[i] -= l[i][k] * y[k];
            }
            y[i] /= l[i][i];
        }
        for i in (0..m).rev() {
            for k in i + 1..m {
                y[i] -= l[k][i] * y[k];
            }
            y[i] /= l[i][i];
        }
        y
    }
}

/// Cholesky factorization that tolerates the rank loss typical near an
/// interior-point optimum: a pivot that collapses relative to its diagonal
/// entry is replaced by a huge value, which zeroes that component of the
/// solve instead of failing.
fn cholesky(g: &[Vec<f64>]) -> Option<Vec<Vec<f64>>> {
    const SKIP: f64 = 1e64;
    let m = g.len();
    let mut l = vec![vec![0.0; m]; m];
    for i in 0..m {
        for j in 0..=i {
            let s = g[i][j] - (0..j).map(|k| l[i][k] * l[j][k]).sum::<f64>();
            if i == j {
                if !s.is_finite() {
                    return None;
                }
                l[i][i] = if s > 1e-30 * g[i][i].abs().max(f64::MIN_POSITIVE) {
                    s.sqrt()
                } else {
                    SKIP
                };
            } else {
                l[i][j] = s / l[j][j];
            }
        }
    }
    Some(l)
}

fn max_step(v: &[f64], dv: &[f64]) -> f64 {
    v.iter()
        .zip(dv)
        .filter(|(_, &d)| d < 0.0)
        .map(|(&x, &d)| -x / d)
        .fold(1.0, f64::min)
}

/// Residual below which a numerical breakdown still yields a usable point.
const NEAR_OPTIMAL: f64 = 1e-8;

/// Mehrotra predictor-corrector on `min cᵀz, A·z = b, z ≥ 0`.
fn mehrotra(a: &[Vec<f64>], b: &[f64], c: &[f64], opts: IpmOptions) -> Result<(Vec<f64>, usize), LpError> {
    let width = c.len();
    let n = width as f64;

    // Mehrotra's starting point
    let ones = vec![1.0; width];
    let normal = Normal::factor(a, &ones)?;
    let mut x = mul_t(a, &normal.solve(b), width);
    let mut y = normal.solve(&mul(a, c));
    let aty = mul_t(a, &y, width);
    let mut s: Vec<f64> = c.iter().zip(&aty).map(|(c, v)| c - v).collect();
    let dx = (-1.5 * x.iter().copied().fold(f64::INFINITY, f64::min)).max(0.0);
    let ds = (-1.5 * s.iter().copied().fold(f64::INFINITY, f64::min)).max(0.0);
    x.iter_mut().for_each(|v| *v += dx);
    s.iter_mut().for_each(|v| *v += ds);
    let xs = dot(&x, &s);
    let (sx, ss): (f64, f64) = (x.iter().sum(), s.iter().sum());
    let (dx2, ds2) = if xs > 0.0 { (0.5 * xs / ss, 0.5 * xs / sx) } else { (1.0, 1.0) };
    x.iter_mut().for_each(|v| *v += dx2);
    s.iter_mut().for_each(|v| *v += ds2);

    let b_norm = 1.0 + inf_norm(b);
    let c_norm = 1.0 + inf_norm(c);
    let mut residual = f64::INFINITY;
    let mut best = (f64::INFINITY, x.clone());

    for iter in 0..opts.max_iterations {
        let ax = mul(a, &x);
        let rp: Vec<f64> = b.iter().zip(&ax).map(|(b, v)| b - v).collect();
        let aty = mul_t(a, &y, width);
        let rd: Vec<f64> = (0..width).map(|i| c[i] - aty[i] - s[i]).collect();
        let gap = dot(&x, &s);
        let mu = gap / n;

        let p_res = inf_norm(&rp) / b_norm;
        let d_res = inf_norm(&rd) / c_norm;
        let g_res = gap / (1.0 + dot(c, &x).abs());
        residual = p_res.max(d_res).max(g_res);
        if residual <= opts.tolerance {
            return Ok((x, iter));
        }
        if residual < best.0 {
            best = (residual, x.clone());
        }

        let d: Vec<f64> = x.iter().zip(&s).map(|(x, s)| x / s).collect();
        let normal = match Normal::factor(a, &d) {
            Ok(n) => n,
            // roundoff floor reached just short of the requested tolerance
            Err(_) if residual <= NEAR_OPTIMAL => return Ok((x, iter)),
            Err(e) => return Err(e),
        };

        let direction = |r_xs: &[f64]| {
            // M·dy = rp + A·(D·rd − S⁻¹·r_xs)
            let inner: Vec<f64> = (0..width).map(|i| d[i] * rd[i] - r_xs[i] / s[i]).collect();
            let a_inner = mul(a, &inner);
            let rhs: Vec<f64> = rp.iter().zip(&a_inner).map(|(p, v)| p + v).collect();
            let dy = normal.solve(&rhs);
            let at_dy = mul_t(a, &dy, width);
            let ds: Vec<f64> = (0..width).map(|i| rd[i] - at_dy[i]).collect();
            let dx: Vec<f64> = (0..width).map(|i| (r_xs[i] - x[i] * ds[i]) / s[i]).collect();
            (dx, dy, ds)
        };

        let r_aff: Vec<f64> = x.iter().zip(&s).map(|(x, s)| -x * s).collect();
        let (dx_a, _, ds_a) = direction(&r_aff);
        let ap = max_step(&x, &dx_a);
        let ad = max_step(&s, &ds_a);
        let mu_aff = (0..width)
            .map(|i| (x[i] + ap * dx_a[i]) * (s[i] + ad * ds_a[i]))
            .sum::<f64>()
            / n;
        let sigma = (mu_aff / mu).powi(3).min(1.0);

        let r_cor: Vec<f64> = (0..width)
            .map(|i| -x[i] * s[i] - dx_a[i] * ds_a[i] + sigma * mu)
            .collect();
        let (dx, dy, ds) = direction(&r_cor);
        let eta = (1.0 - mu).clamp(0.9, 0.999_9);
        let ap = (eta * max_step(&x, &dx)).min(1.0);
        let x_prev = x.clone();
        let ad = (eta * max_step(&s, &ds)).min(1.0);
        for i in 0..width {
            x[i] += ap * dx[i];
            s[i] += ad * ds[i];
        }
        for (yi, d) in y.iter_mut().zip(&dy) {
            *yi += ad * d;
        }
        if x.iter().chain(&s).any(|v| !v.is_finite() || *v <= 0.0) {
            if residual <= NEAR_OPTIMAL {
                return Ok((x_prev, iter));
            }
            break;
        }
    }
    if best.0 <= NEAR_OPTIMAL {
        return Ok((best.1, opts.max_iterations));
    }
    Err(LpError::NonConvergence {
        iterations: opts.max_iterations,
        residual: best.0.min(residual),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn textbook_problem() {
        // max 3x + 5y s.t. x ≤ 4, 2y ≤ 12, 3x + 2y ≤ 18 → (2, 6), 36
        let lp = LinearProgram {
            c: vec![-3.0, -5.0],
            a_ub: vec![vec![1.0, 0.0], vec![0.0, 2.0], vec![3.0, 2.0]],
            b_ub: vec![4.0, 12.0, 18.0],
            a_eq: vec![],
            b_eq: vec![],
            lb: vec![0.0, 0.0],
            ub: vec![f64::INFINITY, f64::INFINITY],
        };
        let sol = lp.solve().unwrap();
        assert!((sol.x[0] - 2.0).abs() < 1e-8 && (sol.x[1] - 6.0).abs() < 1e-8, "{:?}", sol.x);
        assert!((sol.objective + 36.0).abs() < 1e-8);
    }

    #[test]
    fn bounds_and_equalities() {
        // min x + 2y + 3z s.t. x + y + z = 1, x ≤ 0.2, y ≤ 0.5
        let lp = LinearProgram {
            c: vec![1.0, 2.0, 3.0],
            a_ub: vec![],
            b_ub: vec![],
            a_eq: vec![vec![1.0, 1.0, 1.0]],
            b_eq: vec![1.0],
            lb: vec![0.0; 3],
            ub: vec![0.2, 0.5, 1.0],
        };
        let sol = lp.solve().unwrap();
        assert!((sol.objective - (0.2 + 1.0 + 0.9)).abs() < 1e-8, "{}", sol.objective);
    }

    #[test]
    fn fixed_variables_are_substituted() {
        let lp = LinearProgram {
            c: vec![1.0, 1.0],
            a_ub: vec![],
            b_ub: vec![],
            a_eq: vec![vec![1.0, 1.0]],
            b_eq: vec![1.0],
            lb: vec![0.25, 0.0],
            ub: vec![0.25, 1.0],
        };
        let sol = lp.solve().unwrap();
        assert_eq!(sol.x[0], 0.25);
        assert!((sol.x[1] - 0.75).abs() < 1e-10);
    }

    #[test]
    fn detects_trivially_infeasible_row() {
        let lp = LinearProgram {
            c: vec![1.0],
            a_ub: vec![],
            b_ub: vec![],
            a_eq: vec![vec![1.0]],
            b_eq: vec![1.0],
            lb: vec![0.0],
            ub: vec![0.0],
        };
        assert_eq!(lp.solve(), Err(LpError::Infeasible(0)));
    }

    #[test]
    fn iteration_cap_is_reported() {
        let lp = LinearProgram {
            c: vec![-3.0, -5.0],
            a_ub: vec![vec![3.0, 2.0]],
            b_ub: vec![18.0],
            a_eq: vec![],
            b_eq: vec![],
            lb: vec![0.0, 0.0],
            ub: vec![4.0, 6.0],
        };
        let err = lp
            .solve_with(IpmOptions { tolerance: 1e-12, max_iterations: 1 })
            .unwrap_err();
        assert!(matches!(err, LpError::NonConvergence { iterations: 1, .. }));
    }

    #[test]
    fn rejects_shape_errors() {
        let lp = LinearProgram {
            c: vec![1.0, 2.0],
            a_ub: vec![vec![1.0]],
            b_ub: vec![1.0],
            a_eq: vec![],
            b_eq: vec![],
            lb: vec![0.0, 0.0],
            ub: vec![1.0, 1.0],
        };
        assert!(matches!(lp.solve(), Err(LpError::Dimension(_))));
    }
}
