//! First eigenpair of -Δ_{p,w}: minimizer of R(u) = ∫w|∇u|^p / ∫|u|^p
//! over the P1 space. The denominator is integrated element-wise (not
//! lumped), so the discrete λ₁ is a Rayleigh–Ritz upper bound.
//!
//! Nonlinear inverse iteration: v solves -Δ_{p,w}v = |u|^{p-2}u, then
//! u ← v/‖v‖_p. Each step does not increase R.

use std::path::Path;

use serde::Serialize;

use crate::error::{Result, SplError};
use crate::mesh::{write_file, DiscreteSpace, Field};
use crate::solver::{solve_load, torsion, SolveOptions};

#[derive(Debug, Clone)]
pub struct EigenPair {
    pub lambda1: f64,
    /// Positive at interior nodes, max value exactly 1.
    pub e1: Field,
    pub iterations: usize,
    pub residual: f64,
    /// Rayleigh quotient after each iteration.
    pub quotient_log: Vec<f64>,
}

#[derive(Debug, Clone, Copy)]
pub struct EigenOptions {
    /// Relative change of R between iterations.
    pub tol: f64,
    /// Weak residual of -Δ_{p,w}e₁ = λ₁e₁^{p-1} (sup-normalized e₁).
    pub residual_tol: f64,
    pub max_iter: usize,
}

impl Default for EigenOptions {
    fn default() -> Self {
        EigenOptions {
            tol: 1e-8,
            residual_tol: 1e-6,
            max_iter: 2000,
        }
    }
}

#[derive(Serialize)]
struct EigenRecord {
    lambda1: f64,
    iterations: usize,
    residual: f64,
}

impl EigenPair {
    /// `e1.csv` and `eigen.json` in `dir`.
    pub fn write(&self, space: &DiscreteSpace, dir: &Path) -> Result<()> {
        crate::mesh::write_fields_csv(&dir.join("e1.csv"), space.mesh(), &[("e1", &self.e1)])?;
        let rec = EigenRecord {
            lambda1: self.lambda1,
            iterations: self.iterations,
            residual: self.residual,
        };
        let json = serde_json::to_string_pretty(&rec).expect("plain record serializes");
        write_file(&dir.join("eigen.json"), &json)
    }
}

/// ∫|u|^p
pub fn lp_norm_pow(space: &DiscreteSpace, u: &[f64]) -> f64 {
    space.power_integral(u, space.p())
}

/// R(u) = ∫w|∇u|^p / ∫|u|^p.
pub fn rayleigh_quotient(space: &DiscreteSpace, u: &[f64]) -> f64 {
    space.p() * space.dirichlet_energy(u) / lp_norm_pow(space, u)
}

fn eigen_residual(space: &DiscreteSpace, u: &[f64], lambda: f64) -> f64 {
    let mut g = space.dirichlet_gradient(u);
    let b = space.power_load(u, space.p());
    for i in space.mesh().interior_nodes() {
        g[i] -= lambda * b[i];
    }
    space.residual_measure(&g)
}

pub fn first_eigenpair(space: &DiscreteSpace, opts: &EigenOptions) -> Result<EigenPair> {
    if !(opts.tol > 0.0) {
        return Err(SplError::invalid("tol", "must be positive"));
    }
    let p = space.p();
    let inner = SolveOptions {
        tol: 1e-13,
        max_iter: 200,
    };
    let normalize = |v: &mut Vec<f64>| {
        let s = lp_norm_pow(space, v).powf(1.0 / p);
        v.iter_mut().for_each(|x| *x /= s);
    };
    let mut u = torsion(space, 1.0, &inner)?.u;
    normalize(&mut u);
    let mut quotient = rayleigh_quotient(space, &u);
    let mut log = vec![quotient];
    let mut residual = f64::INFINITY;
    for it in 1..=opts.max_iter {
        let m = space.lumped_mass();
        let load: Vec<f64> = space.power_load(&u, p).iter().zip(m).map(|(b, m)| b / m).collect();
        // warm start with the homogeneity-scaled previous iterate
        let guess: Vec<f64> = u.iter().map(|t| t * quotient.powf(-1.0 / (p - 1.0))).collect();
        let mut v = solve_load(space, load, Some(&guess), &inner)?.u;
        normalize(&mut v);
        let next = rayleigh_quotient(space, &v);
        let change = (quotient - next).abs() / next;
        u = v;
        quotient = next;
        log.push(quotient);
        let sup = u.iter().fold(0.0f64, |m, t| m.max(t.abs()));
        let scaled: Vec<f64> = u.iter().map(|t| t / sup).collect();
        residual = eigen_residual(space, &scaled, quotient);
        if change < opts.tol && residual < opts.residual_tol {
            return finish(space, u, it, log);
        }
    }
    Err(SplError::NonConvergence {
        solver: "nonlinear inverse iteration",
        iterations: opts.max_iter,
        residual,
    })
}

fn finish(space: &DiscreteSpace, u: Vec<f64>, iterations: usize, quotient_log: Vec<f64>) -> Result<EigenPair> {
    let mut abs: Vec<f64> = u.iter().map(|t| t.abs()).collect();
    let (imax, sup) = abs.iter().enumerate().fold((0, 0.0), |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc });
    abs.iter_mut().for_each(|t| *t /= sup);
    abs[imax] = 1.0;
    if let Some(i) = space.mesh().interior_nodes().find(|&i| !(abs[i] > 0.0)) {
        return Err(SplError::Construction(format!(
            "eigenfunction is not positive: value {} at interior node {i}",
            abs[i]
        )));
    }
    let lambda1 = rayleigh_quotient(space, &abs);
    let residual = eigen_residual(space, &abs, lambda1);
    Ok(EigenPair {
        lambda1,
        e1: Field::from_values(space.mesh(), abs)?,
        iterations,
        residual,
        quotient_log,
    })
}
