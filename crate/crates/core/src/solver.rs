//! Newton-type solvers for discrete functionals
//! J(u) = (1/p)∫w|∇u|^p - Σ_i m_i G_i(u_i)
//! where G_i is a node-wise reaction primitive.

use log::debug;

use crate::error::{Result, SplError};
use crate::linalg::{dot, SymBand};
use crate::mesh::DiscreteSpace;

/// G, G' and G'' at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

/// Node-wise reaction primitive G_i.
pub trait Reaction {
    fn jet(&self, node: usize, t: f64) -> Jet;

    fn value(&self, node: usize, t: f64) -> f64 {
        self.jet(node, t).value
    }
}

/// G_i(t) = b_i·t
#[derive(Debug, Clone)]
pub struct Load(pub Vec<f64>);

impl Reaction for Load {
    fn jet(&self, node: usize, t: f64) -> Jet {
        Jet {
            value: self.0[node] * t,
            d1: self.0[node],
            d2: 0.0,
        }
    }
}

/// Discrete functional bound to a space.
pub struct Functional<'a> {
    space: &'a DiscreteSpace,
    reaction: &'a dyn Reaction,
}

impl<'a> Functional<'a> {
    pub fn new(space: &'a DiscreteSpace, reaction: &'a dyn Reaction) -> Self {
        Functional { space, reaction }
    }

    pub fn space(&self) -> &DiscreteSpace {
        self.space
    }

    pub fn energy(&self, u: &[f64]) -> f64 {
        let m = self.space.lumped_mass();
        let react: f64 = self.space.mesh().interior_nodes().map(|i| m[i] * self.reaction.value(i, u[i])).sum();
        self.space.dirichlet_energy(u) - react
    }

    pub fn gradient(&self, u: &[f64]) -> Vec<f64> {
        let m = self.space.lumped_mass();
        let mut g = self.space.dirichlet_gradient(u);
        for i in self.space.mesh().interior_nodes() {
            g[i] -= m[i] * self.reaction.jet(i, u[i]).d1;
        }
        g
    }

    /// Hessian with boundary rows pinned to the identity.
    pub fn hessian(&self, u: &[f64]) -> SymBand {
        let m = self.space.lumped_mass();
        let mut h = self.space.dirichlet_hessian(u);
        for i in 0..self.space.len() {
            if self.space.is_boundary(i) {
                h.pin(i, 1.0);
            } else {
                h.add(i, i, -m[i] * self.reaction.jet(i, u[i]).d2);
            }
        }
        h
    }

    pub fn residual(&self, u: &[f64]) -> f64 {
        self.space.residual_measure(&self.gradient(u))
    }
}

/// Node-wise box; `None` means unbounded on that side.
#[derive(Debug, Clone, Default)]
pub struct Bounds {
    pub lower: Option<Vec<f64>>,
    pub upper: Option<Vec<f64>>,
}

impl Bounds {
    pub fn none() -> Self {
        Bounds::default()
    }

    pub fn nonnegative(n: usize) -> Self {
        Bounds {
            lower: Some(vec![0.0; n]),
            upper: None,
        }
    }

    pub fn interval(lower: Vec<f64>, upper: Vec<f64>) -> Self {
        Bounds {
            lower: Some(lower),
            upper: Some(upper),
        }
    }

    fn lo(&self, i: usize) -> f64 {
        self.lower.as_ref().map_or(f64::NEG_INFINITY, |l| l[i])
    }

    fn hi(&self, i: usize) -> f64 {
        self.upper.as_ref().map_or(f64::INFINITY, |u| u[i])
    }

    pub fn project(&self, x: &mut [f64]) {
        for (i, v) in x.iter_mut().enumerate() {
            *v = v.max(self.lo(i)).min(self.hi(i));
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct SolveOptions {
    /// Stop when the (projected) residual measure drops below this.
    pub tol: f64,
    pub max_iter: usize,
}

impl Default for SolveOptions {
    fn default() -> Self {
        SolveOptions {
            tol: 1e-10,
            max_iter: 500,
        }
    }
}

#[derive(Debug, Clone)]
pub struct Outcome {
    pub u: Vec<f64>,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
    /// Energy after every accepted step, starting with the initial point.
    pub energy_log: Vec<f64>,
}

/// Solves H d = rhs, shifting an indefinite H by μK (K the weighted linear
/// stiffness, pinned like H) until the factorization succeeds.
fn newton_direction(h: &SymBand, stiff: &SymBand, rhs: &[f64]) -> Vec<f64> {
    if let Some(c) = h.cholesky() {
        return c.solve(rhs);
    }
    let hd = h.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let kd = stiff.diagonal().iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    let mut mu = 1e-8 * (hd / kd).max(1e-8);
    for _ in 0..30 {
        let mut shifted = h.clone();
        shifted.add_scaled(mu, stiff);
        if let Some(c) = shifted.cholesky() {
            return c.solve(rhs);
        }
        mu *= 10.0;
    }
    stiff.cholesky().expect("pinned stiffness is positive definite").solve(rhs)
}

/// Stiffness with the given rows pinned.
fn pinned_stiffness(space: &DiscreteSpace, pinned: &[bool]) -> SymBand {
    let mut k = space.linear_stiffness();
    for (i, &p) in pinned.iter().enumerate() {
        if p {
            k.pin(i, 1.0);
        }
    }
    k
}

/// Projected Newton with Armijo backtracking on the box `bounds`.
///
/// Variables sitting at a bound whose gradient pushes outward are frozen for
/// the step; the rest take a Newton step on the reduced Hessian.
pub fn minimize(space: &DiscreteSpace, reaction: &dyn Reaction, x0: &[f64], bounds: &Bounds, opts: &SolveOptions) -> Result<Outcome> {
    minimize_projected(space, reaction, x0, bounds, None, opts)
}

/// [`minimize`] over the box intersected with the ball ‖v‖ ≤ radius: trial
/// points outside the ball are rescaled radially onto the sphere. Converges
/// only to minimizers strictly inside the ball.
pub fn minimize_in_ball(
    space: &DiscreteSpace,
    reaction: &dyn Reaction,
    x0: &[f64],
    bounds: &Bounds,
    radius: f64,
    opts: &SolveOptions,
) -> Result<Outcome> {
    minimize_projected(space, reaction, x0, bounds, Some(radius), opts)
}

fn minimize_projected(
    space: &DiscreteSpace,
    reaction: &dyn Reaction,
    x0: &[f64],
    bounds: &Bounds,
    radius: Option<f64>,
    opts: &SolveOptions,
) -> Result<Outcome> {
    let fun = Functional::new(space, reaction);
    let n = space.len();
    let norms = space.basis_norms();
    let project = |x: &mut [f64]| {
        bounds.project(x);
        if let Some(r) = radius {
            let norm = space.seminorm(x);
            if norm > r {
                x.iter_mut().for_each(|v| *v *= r / norm);
            }
        }
    };
    let mut x = x0.to_vec();
    space.zero_boundary(&mut x);
    project(&mut x);
    let mut energy = fun.energy(&x);
    let mut log = vec![energy];
    let mut res = f64::INFINITY;
    for it in 0..opts.max_iter {
        let g = fun.gradient(&x);
        let mut active = vec![false; n];
        res = 0.0;
        for i in 0..n {
            active[i] = space.is_boundary(i)
                || (x[i] <= bounds.lo(i) && g[i] > 0.0)
                || (x[i] >= bounds.hi(i) && g[i] < 0.0);
            if !active[i] {
                res = f64::max(res, g[i].abs() / (1.0 + norms[i]));
            }
        }
        if res < opts.tol {
            return Ok(Outcome {
                u: x,
                energy,
                residual: res,
                iterations: it,
                energy_log: log,
            });
        }
        let mut h = fun.hessian(&x);
        let mut rhs = vec![0.0; n];
        for i in 0..n {
            if active[i] {
                h.pin(i, 1.0);
            } else {
                rhs[i] = -g[i];
            }
        }
        let stiff = pinned_stiffness(space, &active);
        let newton = newton_direction(&h, &stiff, &rhs);
        let accepted = line_search(&fun, &project, &x, energy, &g, &newton, res, &active)
            .or_else(|| {
                let sd = stiff.cholesky().expect("pinned stiffness is positive definite").solve(&rhs);
                line_search(&fun, &project, &x, energy, &g, &sd, res, &active)
            });
        match accepted {
            Some((xt, et)) => {
                x = xt;
                energy = et;
                log.push(energy);
            }
            None => {
                debug!("projected Newton: line search exhausted at residual {res:e}");
                return Err(SplError::NonConvergence {
                    solver: "projected Newton",
                    iterations: it,
                    residual: res,
                });
            }
        }
    }
    Err(SplError::NonConvergence {
        solver: "projected Newton",
        iterations: opts.max_iter,
        residual: res,
    })
}

#[allow(clippy::too_many_arguments)]
fn line_search(
    fun: &Functional,
    project: &dyn Fn(&mut [f64]),
    x: &[f64],
    energy: f64,
    g: &[f64],
    d: &[f64],
    res: f64,
    active: &[bool],
) -> Option<(Vec<f64>, f64)> {
    let mut alpha = 1.0;
    for _ in 0..60 {
        let mut xt: Vec<f64> = x.iter().zip(d).zip(active).map(|((a, b), &fix)| if fix { *a } else { a + alpha * b }).collect();
        project(&mut xt);
        let et = fun.energy(&xt);
        let step: Vec<f64> = xt.iter().zip(x).map(|(a, b)| a - b).collect();
        let pred = dot(g, &step);
        if et.is_finite() && et <= energy + 1e-4 * pred && pred < 0.0 {
            return Some((xt, et));
        }
        // rounding-noise regime: energy differences are below resolution
        if et.is_finite() && (et - energy).abs() <= 1e-13 * (1.0 + energy.abs()) && fun.residual(&xt) < res {
            return Some((xt, et.min(energy)));
        }
        alpha *= 0.5;
    }
    None
}

/// Newton root finding for ∇J = 0 with backtracking on Σ (g_i/(1+‖φ_i‖))².
/// Works at saddle points (LU on the possibly indefinite Hessian). With
/// `positive`, steps keep every interior value above 1% of its current value.
pub fn find_critical_point(space: &DiscreteSpace, reaction: &dyn Reaction, x0: &[f64], positive: bool, opts: &SolveOptions) -> Result<Outcome> {
    let fun = Functional::new(space, reaction);
    let norms = space.basis_norms();
    let merit = |g: &[f64]| -> f64 {
        space.mesh().interior_nodes().map(|i| (g[i] / (1.0 + norms[i])).powi(2)).sum()
    };
    let mut x = x0.to_vec();
    space.zero_boundary(&mut x);
    let mut g = fun.gradient(&x);
    let mut phi = merit(&g);
    let mut log = vec![fun.energy(&x)];
    for it in 0..opts.max_iter {
        let res = space.residual_measure(&g);
        if res < opts.tol {
            return Ok(Outcome {
                energy: fun.energy(&x),
                u: x,
                residual: res,
                iterations: it,
                energy_log: log,
            });
        }
        let h = fun.hessian(&x);
        let rhs: Vec<f64> = g.iter().map(|v| -v).collect();
        let d = h.lu()?.solve(&rhs);
        let mut alpha: f64 = 1.0;
        if positive {
            for i in space.mesh().interior_nodes() {
                if d[i] < 0.0 {
                    alpha = alpha.min(0.99 * x[i] / -d[i]);
                }
            }
        }
        let mut accepted = false;
        for _ in 0..60 {
            let xt: Vec<f64> = x.iter().zip(&d).map(|(a, b)| a + alpha * b).collect();
            let gt = fun.gradient(&xt);
            let pt = merit(&gt);
            if pt.is_finite() && pt <= (1.0 - 1e-4 * alpha) * phi {
                x = xt;
                g = gt;
                phi = pt;
                log.push(fun.energy(&x));
                accepted = true;
                break;
            }
            alpha *= 0.5;
        }
        if !accepted {
            return Err(SplError::NonConvergence {
                solver: "Newton critical-point search",
                iterations: it,
                residual: res,
            });
        }
    }
    Err(SplError::NonConvergence {
        solver: "Newton critical-point search",
        iterations: opts.max_iter,
        residual: space.residual_measure(&g),
    })
}

/// Solves -Δ_{p,w} u = c·load (a convex minimization).
pub fn solve_load(space: &DiscreteSpace, load: Vec<f64>, x0: Option<&[f64]>, opts: &SolveOptions) -> Result<Outcome> {
    let start = match x0 {
        Some(x) => x.to_vec(),
        None => vec![0.0; space.len()],
    };
    minimize(space, &Load(load), &start, &Bounds::none(), opts)
}

/// Solution of -Δ_{p,w} u = c with zero boundary values.
pub fn torsion(space: &DiscreteSpace, c: f64, opts: &SolveOptions) -> Result<Outcome> {
    let start = if space.p() > 2.0 { initial_guess(space, c) } else { vec![0.0; space.len()] };
    solve_load(space, vec![c; space.len()], Some(&start), opts)
}

/// Linear (p = 2) torsion rescaled to the p-homogeneity, a safe start for
/// p > 2 where the Hessian degenerates at 0.
fn initial_guess(space: &DiscreteSpace, c: f64) -> Vec<f64> {
    let mut k = space.linear_stiffness();
    let mut b: Vec<f64> = space.lumped_mass().iter().map(|m| m * c).collect();
    for i in 0..space.len() {
        if space.is_boundary(i) {
            k.pin(i, 1.0);
            b[i] = 0.0;
        }
    }
    let u = k.cholesky().expect("pinned stiffness is positive definite").solve(&b);
    let scale = u.iter().fold(0.0f64, |m, v| m.max(v.abs())).max(1e-300);
    u.iter().map(|v| v / scale * c.abs().powf(1.0 / (space.p() - 1.0)).max(1e-3)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, Domain};
    use crate::weights::Weight;

    fn space(p: f64, n: usize) -> DiscreteSpace {
        let w = Weight::constant(1.0, 1, p).unwrap();
        DiscreteSpace::new(build_mesh(&Domain::interval(-1.0, 1.0), n).unwrap(), &w).unwrap()
    }

    #[test]
    fn torsion_matches_closed_form_for_several_p() {
        for p in [1.5, 2.0, 3.0, 4.0] {
            let s = space(p, 256);
            let out = torsion(&s, 1.0, &SolveOptions::default()).unwrap();
            let e = p / (p - 1.0);
            let worst = (0..s.len())
                .map(|i| {
                    let x: f64 = s.mesh().node(i)[0];
                    (out.u[i] - (p - 1.0) / p * (1.0 - x.abs().powf(e))).abs()
                })
                .fold(0.0, f64::max);
            assert!(worst < 2e-3, "p = {p}: {worst}");
            assert!(out.energy_log.windows(2).all(|w| w[1] <= w[0] + 1e-15));
        }
    }

    #[test]
    fn bounds_are_respected() {
        let s = space(2.0, 32);
        let cap = vec![0.1; s.len()];
        let out = minimize(&s, &Load(vec![1.0; s.len()]), &vec![0.0; s.len()], &Bounds::interval(vec![0.0; s.len()], cap), &SolveOptions::default()).unwrap();
        assert!(out.u.iter().all(|v| *v <= 0.1 && *v >= 0.0));
        assert!(out.u[16] == 0.1);
    }

    #[test]
    fn critical_point_search_solves_linear_problem() {
        let s = space(2.0, 16);
        let out = find_critical_point(&s, &Load(vec![1.0; s.len()]), &vec![0.0; s.len()], false, &SolveOptions::default()).unwrap();
        let x: f64 = s.mesh().node(8)[0];
        assert!((out.u[8] - 0.5 * (1.0 - x * x)).abs() < 1e-12);
    }
}
