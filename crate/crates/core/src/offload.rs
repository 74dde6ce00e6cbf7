//! Per-vehicle offloading split: the min-max LP over (ρ_loc, ρ_rsu, ρ_sv, T)
//! and an independent closed-form oracle.
//!
//! The LP minimizes the auxiliary delay `T` subject to `ρ_i·μ_i ≤ T`,
//! `Σρ = 1`, `0 ≤ ρ ≤ 1` and `0 ≤ T ≤ T_max`. Unusable paths (infinite μ)
//! are disabled through a zero upper bound on their ρ.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::latency::PathCoefficients;
use crate::lp::{LinearProgram, LpError};

#[derive(Debug, Error, PartialEq)]
pub enum OffloadError {
    #[error("no usable execution path")]
    NoUsablePath,
    #[error(transparent)]
    Solver(#[from] LpError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OffloadSplit {
    pub rho_loc: f64,
    pub rho_rsu: f64,
    pub rho_sv: f64,
    /// Optimal end-to-end delay; kept even when it misses the deadline.
    pub t_star: f64,
    /// `t_star ≤ T_max`.
    pub feasible: bool,
}

impl OffloadSplit {
    pub fn new(rho_loc: f64, rho_rsu: f64, rho_sv: f64, t_star: f64) -> Self {
        Self {
            rho_loc,
            rho_rsu,
            rho_sv,
            t_star,
            feasible: true,
        }
    }

    pub fn as_array(&self) -> [f64; 3] {
        [self.rho_loc, self.rho_rsu, self.rho_sv]
    }

    pub fn sum(&self) -> f64 {
        self.rho_loc + self.rho_rsu + self.rho_sv
    }

    /// No work at all: zero delay, everything nominally local.
    pub fn idle() -> Self {
        Self::new(1.0, 0.0, 0.0, 0.0)
    }
}

/// Matrix form of one vehicle's LP over `x = [ρ_loc, ρ_rsu, ρ_sv, T]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LpStandardForm {
    pub c: [f64; 4],
    pub a: [[f64; 4]; 3],
    pub b: [f64; 3],
    pub a_eq: [f64; 4],
    pub b_eq: f64,
    pub lb: [f64; 4],
    pub ub: [f64; 4],
}

impl LpStandardForm {
    pub fn deadline(&self) -> f64 {
        self.ub[3]
    }

    /// Same program without the deadline bound on `T`, rescaled.
    ///
    /// Path coefficients can span many orders of magnitude (a link with
    /// near-zero similarity has a huge μ), which wrecks the normal equations.
    /// With `s` the smallest positive μ the program is rewritten over the
    /// path delays `y_i = ρ_i·μ_i/s` and `τ = T/s`, so every delay row reads
    /// `y_i − τ ≤ 0` and the simplex row becomes `Σ (s/μ_i)·y_i = 1`. The
    /// bounds `ρ_i ≤ 1` are implied by the simplex row and dropped.
    ///
    /// Returns the program and the factor mapping each variable back.
    fn relaxed_scaled(&self) -> (LinearProgram, [f64; 4]) {
        let s = (0..3)
            .map(|i| self.a[i][i])
            .filter(|&m| m > 0.0)
            .fold(f64::INFINITY, f64::min);
        let s = if s.is_finite() { s } else { 1.0 };
        let mut back = [1.0, 1.0, 1.0, s];
        let mut a_ub = vec![vec![0.0; 4]; 3];
        let mut a_eq = vec![0.0; 4];
        let mut ub = vec![f64::INFINITY; 4];
        for i in 0..3 {
            let mu = self.a[i][i];
            a_ub[i][3] = -1.0;
            if self.ub[i] == 0.0 {
                ub[i] = 0.0;
                a_eq[i] = 1.0;
            } else if mu > 0.0 {
                back[i] = s / mu;
                a_ub[i][i] = 1.0;
                a_eq[i] = s / mu * self.a_eq[i];
                if self.ub[i] < 1.0 {
                    ub[i] = self.ub[i] * mu / s;
                }
            } else {
                a_eq[i] = self.a_eq[i];
                ub[i] = self.ub[i];
            }
        }
        let lp = LinearProgram {
            c: self.c.to_vec(),
            a_ub,
            b_ub: self.b.to_vec(),
            a_eq: vec![a_eq],
            b_eq: vec![self.b_eq],
            lb: self.lb.to_vec(),
            ub,
        };
        (lp, back)
    }
}

pub fn build_standard_form(paths: &PathCoefficients, max_delay: f64) -> Result<LpStandardForm, OffloadError> {
    let mu = paths.as_array();
    if mu.iter().all(|m| !m.is_finite()) {
        return Err(OffloadError::NoUsablePath);
    }
    let mut a = [[0.0; 4]; 3];
    let mut ub = [1.0, 1.0, 1.0, max_delay];
    for i in 0..3 {
        if mu[i].is_finite() {
            a[i][i] = mu[i];
        } else {
            ub[i] = 0.0;
        }
        a[i][3] = -1.0;
    }
    Ok(LpStandardForm {
        c: [0.0, 0.0, 0.0, 1.0],
        a,
        b: [0.0; 3],
        a_eq: [1.0, 1.0, 1.0, 0.0],
        b_eq: 1.0,
        lb: [0.0; 4],
        ub,
    })
}

/// Interior-point solution of the split LP.
///
/// The deadline bound only decides feasibility: when the optimum of the
/// relaxed program exceeds it, the constrained program is empty. The relaxed
/// program is therefore solved and its optimum is reported either way, with
/// `feasible` recording whether the deadline holds.
pub fn solve_lp(form: &LpStandardForm) -> Result<OffloadSplit, OffloadError> {
    let (lp, back) = form.relaxed_scaled();
    let sol = lp.solve()?;
    let x: Vec<f64> = sol.x.iter().zip(back).map(|(v, b)| v * b).collect();
    let rho: Vec<f64> = x[..3].iter().map(|r| r.clamp(0.0, 1.0)).collect();
    let mut split = OffloadSplit::new(rho[0], rho[1], rho[2], x[3]);
    split.feasible = split.t_star <= form.deadline() * (1.0 + 1e-9);
    Ok(split)
}

/// Closed-form optimum of the min-max split: every usable path finishes at
/// the same time `T* = (Σ 1/μ_i)⁻¹` with `ρ_i = T*/μ_i`.
pub fn closed_form_oracle(paths: &PathCoefficients) -> Result<OffloadSplit, OffloadError> {
    let mu = paths.as_array();
    let usable: Vec<usize> = (0..3).filter(|&i| mu[i].is_finite()).collect();
    if usable.is_empty() {
        return Err(OffloadError::NoUsablePath);
    }
    let mut rho = [0.0; 3];
    let zero: Vec<usize> = usable.iter().copied().filter(|&i| mu[i] == 0.0).collect();
    let t_star = if !zero.is_empty() {
        for &i in &zero {
            rho[i] = 1.0 / zero.len() as f64;
        }
        0.0
    } else {
        let t = 1.0 / usable.iter().map(|&i| 1.0 / mu[i]).sum::<f64>();
        for &i in &usable {
            rho[i] = t / mu[i];
        }
        t
    };
    Ok(OffloadSplit::new(rho[0], rho[1], rho[2], t_star))
}

/// Closed-form oracle with the feasibility flag set against `max_delay`.
pub fn oracle_with_deadline(paths: &PathCoefficients, max_delay: f64) -> Result<OffloadSplit, OffloadError> {
    let mut split = closed_form_oracle(paths)?;
    split.feasible = split.t_star <= max_delay * (1.0 + 1e-9);
    Ok(split)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn solve(mu: [f64; 3]) -> OffloadSplit {
        let form = build_standard_form(&PathCoefficients::new(mu[0], mu[1], mu[2]), 10.0).unwrap();
        solve_lp(&form).unwrap()
    }

    #[test]
    fn form_matches_matrix_layout() {
        let form = build_standard_form(&PathCoefficients::new(2.0, 3.0, 6.0), 0.5).unwrap();
        assert_eq!(form.c, [0.0, 0.0, 0.0, 1.0]);
        assert_eq!(form.a[0], [2.0, 0.0, 0.0, -1.0]);
        assert_eq!(form.a[1], [0.0, 3.0, 0.0, -1.0]);
        assert_eq!(form.a[2], [0.0, 0.0, 6.0, -1.0]);
        assert_eq!(form.b, [0.0; 3]);
        assert_eq!(form.a_eq, [1.0, 1.0, 1.0, 0.0]);
        assert_eq!(form.b_eq, 1.0);
        assert_eq!(form.lb, [0.0; 4]);
        assert_eq!(form.ub, [1.0, 1.0, 1.0, 0.5]);
    }

    #[test]
    fn infinite_path_gets_zero_bound() {
        let form = build_standard_form(&PathCoefficients::new(2.0, 3.0, f64::INFINITY), 0.5).unwrap();
        assert_eq!(form.ub[2], 0.0);
        assert_eq!(
            build_standard_form(&PathCoefficients::new(f64::INFINITY, f64::INFINITY, f64::INFINITY), 0.5),
            Err(OffloadError::NoUsablePath)
        );
    }

    #[test]
    fn symmetric_split() {
        let s = solve([1.0, 1.0, 1.0]);
        for r in s.as_array() {
            assert!((r - 1.0 / 3.0).abs() < 1e-8);
        }
        assert!((s.t_star - 1.0 / 3.0).abs() < 1e-8);
    }

    #[test]
    fn harmonic_split() {
        let s = solve([2.0, 3.0, 6.0]);
        let want = [0.5, 1.0 / 3.0, 1.0 / 6.0];
        for (r, w) in s.as_array().iter().zip(want) {
            assert!((r - w).abs() < 1e-8, "{:?}", s);
        }
        assert!((s.t_star - 1.0).abs() < 1e-8);
    }

    #[test]
    fn disabled_path_reduces_to_two() {
        let s = solve([2.0, f64::INFINITY, 6.0]);
        assert_eq!(s.rho_rsu, 0.0);
        assert!((s.t_star - 1.5).abs() < 1e-8);
    }

    #[test]
    fn oracle_examples() {
        let o = closed_form_oracle(&PathCoefficients::new(1.0, 1.0, 1.0)).unwrap();
        assert!((o.t_star - 1.0 / 3.0).abs() < 1e-15);
        let o = closed_form_oracle(&PathCoefficients::new(0.2, 0.4, 0.4)).unwrap();
        assert!((o.t_star - 0.1).abs() < 1e-15);
        assert!((o.rho_loc - 0.5).abs() < 1e-15);
        assert!((o.rho_rsu - 0.25).abs() < 1e-15);
        let o = closed_form_oracle(&PathCoefficients::new(f64::INFINITY, 0.7, f64::INFINITY)).unwrap();
        assert_eq!(o.as_array(), [0.0, 1.0, 0.0]);
        assert_eq!(o.t_star, 0.7);
    }

    /// Exhaustive search over the simplex at the given resolution.
    fn grid_search(mu: [f64; 3], steps: usize) -> f64 {
        let h = 1.0 / steps as f64;
        let mut best = f64::INFINITY;
        for i in 0..=steps {
            for j in 0..=steps - i {
                let (a, b) = (i as f64 * h, j as f64 * h);
                let c = (1.0 - a - b).max(0.0);
                best = best.min((a * mu[0]).max(b * mu[1]).max(c * mu[2]));
            }
        }
        best
    }

    #[test]
    fn oracle_agrees_with_grid_search() {
        for mu in [[0.2, 0.4, 0.4], [2.0, 3.0, 6.0], [0.01, 5.0, 0.3]] {
            let o = closed_form_oracle(&PathCoefficients::new(mu[0], mu[1], mu[2])).unwrap();
            let g = grid_search(mu, 1000);
            assert!(g >= o.t_star - 1e-12);
            assert!(g - o.t_star < 2e-3 * mu.iter().cloned().fold(0.0, f64::max));
        }
    }

    #[test]
    fn deadline_flag() {
        let form = build_standard_form(&PathCoefficients::new(2.0, 3.0, 6.0), 0.5).unwrap();
        let s = solve_lp(&form).unwrap();
        assert!(!s.feasible);
        assert!((s.t_star - 1.0).abs() < 1e-8);
        let o = oracle_with_deadline(&PathCoefficients::new(2.0, 3.0, 6.0), 0.5).unwrap();
        assert_eq!(o.feasible, s.feasible);
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn log_uniform() -> impl Strategy<Value = f64> {
            (-3.0f64..1.0).prop_map(|e| 10f64.powf(e))
        }

        proptest! {
            #[test]
            fn solver_matches_oracle(a in log_uniform(), b in log_uniform(), c in log_uniform(), tmax in 0.001f64..5.0) {
                let paths = PathCoefficients::new(a, b, c);
                let form = build_standard_form(&paths, tmax).unwrap();
                let s = solve_lp(&form).unwrap();
                let o = oracle_with_deadline(&paths, tmax).unwrap();
                prop_assert!((s.t_star - o.t_star).abs() <= 1e-6);
                prop_assert!((s.sum() - 1.0).abs() <= 1e-9);
                prop_assert!(s.t_star <= a.min(b).min(c) + 1e-12);
                let prods = [s.rho_loc * a, s.rho_rsu * b, s.rho_sv * c];
                let spread = prods.iter().cloned().fold(f64::MIN, f64::max) - prods.iter().cloned().fold(f64::MAX, f64::min);
                prop_assert!(spread <= 1e-6);
                if (o.t_star - tmax).abs() > 1e-6 {
                    prop_assert_eq!(s.feasible, o.feasible);
                }
            }

            #[test]
            fn solver_handles_wide_dynamic_range(ea in -4.0f64..7.0, eb in -4.0f64..7.0, ec in -4.0f64..7.0) {
                let paths = PathCoefficients::new(10f64.powf(ea), 10f64.powf(eb), 10f64.powf(ec));
                let s = solve_lp(&build_standard_form(&paths, 0.5).unwrap()).unwrap();
                let o = closed_form_oracle(&paths).unwrap();
                prop_assert!((s.t_star - o.t_star).abs() <= 1e-6 * o.t_star, "{:?} {:?}", s, o);
            }
        }
    }
}
