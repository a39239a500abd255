//! Case I: -Δ_{p,w}u = λ f(u) u^{-q}, u > 0, u = 0 on ∂Ω.
//!
//! Pipeline: eigenpair → pure singular solution v₀ → subsolution a·e₁ and
//! supersolution A·v₀ → minimization of E_λ over the order interval.

use std::time::Instant;

use log::info;
use serde::Serialize;

use crate::eigen::{first_eigenpair, EigenOptions, EigenPair};
use crate::energy::{energy_case1, CaseISpec, SingularReaction};
use crate::error::{Result, SplError, StageExt};
use crate::mesh::{DiscreteSpace, Field};
use crate::solver::{find_critical_point, minimize, Bounds, SolveOptions};

#[derive(Debug, Clone, Copy, Serialize)]
pub struct ContinuationStep {
    pub eps: f64,
    /// Seminorm distance to the previous level (∞ for the first).
    pub difference: f64,
    pub interior_min: f64,
    pub iterations: usize,
}

#[derive(Debug, Clone)]
pub struct PureSingular {
    pub v0: Field,
    pub steps: Vec<ContinuationStep>,
    /// v_{ε_{j+1}} ≥ v_{ε_j} at every node, for every level.
    pub monotone: bool,
    pub residual: f64,
}

/// Solves -Δ_{p,w}v = v^{-q} by continuation in ε = 2^{-j} on the convex
/// problems -Δ_{p,w}v = (v⁺+ε)^{-q}, then a Newton polish at ε = 0.
pub fn solve_pure_singular(space: &DiscreteSpace, q: f64, tol: f64) -> Result<PureSingular> {
    if !(q > 0.0 && q < 1.0) {
        return Err(SplError::invalid("q", format!("q must lie in (0,1), got {q}")));
    }
    let n = space.len();
    let inner = SolveOptions {
        tol: 1e-12,
        max_iter: 500,
    };
    let mut v = vec![0.0; n];
    let mut steps: Vec<ContinuationStep> = Vec::new();
    let mut monotone = true;
    let mut converged = false;
    for j in 1..=60 {
        let eps = 0.5f64.powi(j);
        let reaction = SingularReaction {
            lambda: 1.0,
            q,
            eps,
            r: None,
        };
        let out = minimize(space, &reaction, &v, &Bounds::nonnegative(n), &inner)?;
        let diff: Vec<f64> = out.u.iter().zip(&v).map(|(a, b)| a - b).collect();
        let difference = if j == 1 { f64::INFINITY } else { space.seminorm(&diff) };
        if j > 1 && diff.iter().any(|d| *d < -1e-12 * (1.0 + out.u.iter().fold(0.0f64, |m, x| m.max(*x)))) {
            monotone = false;
        }
        v = out.u;
        let interior_min = space.mesh().interior_nodes().map(|i| v[i]).fold(f64::INFINITY, f64::min);
        steps.push(ContinuationStep {
            eps,
            difference,
            interior_min,
            iterations: out.iterations,
        });
        if difference < tol {
            converged = true;
            break;
        }
        let k = steps.len();
        if k >= 5 && (k - 3..k).all(|i| steps[i].difference >= steps[i - 1].difference) {
            return Err(SplError::NonConvergence {
                solver: "singular continuation (stalled)",
                iterations: k,
                residual: difference,
            });
        }
    }
    if !converged {
        return Err(SplError::NonConvergence {
            solver: "singular continuation",
            iterations: steps.len(),
            residual: steps.last().map_or(f64::INFINITY, |s| s.difference),
        });
    }
    let reaction = SingularReaction {
        lambda: 1.0,
        q,
        eps: 0.0,
        r: None,
    };
    let polished = find_critical_point(space, &reaction, &v, true, &SolveOptions { tol: 1e-13, max_iter: 100 })?;
    let v0 = Field::from_values(space.mesh(), polished.u)?;
    if let Some(i) = space.mesh().interior_nodes().find(|&i| !(v0.values()[i] > 0.0)) {
        return Err(SplError::SingularEvaluation { node: i, value: v0.values()[i] });
    }
    Ok(PureSingular {
        v0,
        steps,
        monotone,
        residual: polished.residual,
    })
}

/// 0 ≤ lower ≤ upper.
#[derive(Debug, Clone)]
pub struct OrderInterval {
    pub lower: Field,
    pub upper: Field,
}

impl OrderInterval {
    pub fn new(lower: Field, upper: Field) -> Result<Self> {
        if lower.len() != upper.len() {
            return Err(SplError::invalid("interval", "bounds have different lengths"));
        }
        if lower.values().iter().any(|v| *v < 0.0) {
            return Err(SplError::invalid("interval", "lower bound must be nonnegative"));
        }
        let gap = upper.shortfall_below(&lower);
        if gap > 0.0 {
            return Err(SplError::invalid("interval", format!("lower exceeds upper by up to {gap:e}")));
        }
        Ok(OrderInterval { lower, upper })
    }
}

/// Largest dyadic a ≤ 1 (down to 1e-12) with
/// λ₁(a e₁)^{p-1} ≤ λ f(a e₁)(a e₁)^{-q} at every interior node. The
/// inequality is also imposed with the discrete eigen-load ∫e₁^{p-1}φ_i/m_i
/// in place of e₁^{p-1}, which is what the nodal defect actually sees.
pub fn construct_subsolution(space: &DiscreteSpace, spec: &CaseISpec, eig: &EigenPair) -> Result<(f64, Field)> {
    let p = spec.p;
    let e = eig.e1.values();
    let m = space.lumped_mass();
    let load = space.power_load(e, p);
    let interior: Vec<usize> = space.mesh().interior_nodes().collect();
    let violation = |a: f64| -> Option<(usize, f64)> {
        let mut worst: Option<(usize, f64)> = None;
        for &i in &interior {
            let t = a * e[i];
            let rhs = spec.rhs(t);
            let nodal = eig.lambda1 * t.powf(p - 1.0);
            let tested = eig.lambda1 * a.powf(p - 1.0) * load[i] / m[i];
            let excess = nodal.max(tested) - rhs;
            if excess > 0.0 && worst.is_none_or(|w| excess > w.1) {
                worst = Some((i, excess));
            }
        }
        worst
    };
    let mut last = None;
    for k in 0..=40 {
        let a = 0.5f64.powi(k);
        if a < 1e-12 {
            break;
        }
        match violation(a) {
            None => return Ok((a, eig.e1.scaled(a))),
            Some(w) => last = Some(w),
        }
    }
    let (node, excess) = last.expect("scan visits at least one a");
    Err(SplError::Construction(format!(
        "no admissible subsolution scale a >= 1e-12: worst node {node} exceeds the bound by {excess:e}"
    )))
}

/// Upper limit of the supersolution scale search.
pub const SUPERSOLUTION_CAP: f64 = 1e12;

/// Smallest dyadic A with λ f(A‖v₀‖_∞) ≤ A^{q+p-1}, i.e.
/// f(AV)/(AV)^{q+p-1} ≤ 1/(λ V^{q+p-1}).
pub fn construct_supersolution(spec: &CaseISpec, v0: &Field) -> Result<(f64, Field)> {
    let v = v0.sup_norm();
    if !(v > 0.0) {
        return Err(SplError::invalid("v0", "pure singular solution vanishes"));
    }
    let e = spec.q + spec.p - 1.0;
    for k in -40..=40 {
        let a = 2f64.powi(k);
        if a > SUPERSOLUTION_CAP {
            break;
        }
        let t = a * v;
        if spec.f.eval(t) / t.powf(e) <= 1.0 / (spec.lambda * v.powf(e)) {
            return Ok((a, v0.scaled(a)));
        }
    }
    Err(SplError::Construction(format!(
        "supersolution scale exceeds {SUPERSOLUTION_CAP:e}: f does not decay fast enough numerically"
    )))
}

#[derive(Debug, Clone)]
pub struct IntervalMinimum {
    pub u: Field,
    pub energy: f64,
    pub projected_residual: f64,
    pub iterations: usize,
    pub energy_log: Vec<f64>,
}

/// Projected Newton on E_λ over the box M, started from the lower bound.
pub fn minimize_over_interval(space: &DiscreteSpace, m: &OrderInterval, spec: &CaseISpec, tol: f64) -> Result<IntervalMinimum> {
    if m.lower == m.upper {
        let energy = energy_case1(space, &m.lower, spec)?;
        return Ok(IntervalMinimum {
            u: m.lower.clone(),
            energy,
            projected_residual: 0.0,
            iterations: 0,
            energy_log: vec![energy],
        });
    }
    let reaction = spec.reaction();
    let bounds = Bounds::interval(m.lower.values().to_vec(), m.upper.values().to_vec());
    let out = minimize(space, &reaction, m.lower.values(), &bounds, &SolveOptions { tol, max_iter: 500 })?;
    Ok(IntervalMinimum {
        u: Field::from_values(space.mesh(), out.u)?,
        energy: out.energy,
        projected_residual: out.residual,
        iterations: out.iterations,
        energy_log: out.energy_log,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct CaseIOptions {
    /// Bound on the weak residual of the returned solution.
    pub residual_tol: f64,
    /// Sign tolerance of the sub/supersolution defects.
    pub defect_tol: f64,
    /// Seminorm tolerance of the v₀ continuation.
    pub continuation_tol: f64,
    /// Compact set K = {x : dist(x, ∂Ω) ≥ margin·diam Ω}.
    pub compact_margin: f64,
}

impl Default for CaseIOptions {
    fn default() -> Self {
        CaseIOptions {
            residual_tol: 1e-6,
            defect_tol: 1e-8,
            continuation_tol: 1e-8,
            compact_margin: 0.05,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct CaseICertificates {
    pub order: bool,
    pub subsolution: bool,
    pub supersolution: bool,
    pub residual: bool,
    pub positivity: bool,
    pub energy_minimal: bool,
    pub monotone_descent: bool,
    pub monotone_continuation: bool,
}

impl CaseICertificates {
    pub fn all(&self) -> bool {
        self.order
            && self.subsolution
            && self.supersolution
            && self.residual
            && self.positivity
            && self.energy_minimal
            && self.monotone_descent
            && self.monotone_continuation
    }
}

#[derive(Debug, Clone)]
pub struct CaseIReport {
    pub eigen: EigenPair,
    pub a_lambda: f64,
    pub capital_a_lambda: f64,
    pub order_repairs: usize,
    pub c_k: f64,
    pub v0: PureSingular,
    pub interval: OrderInterval,
    pub solution: Field,
    pub energy: f64,
    pub energy_lower: f64,
    pub energy_upper: f64,
    pub residual: f64,
    pub sub_defect_max: f64,
    pub super_defect_min: f64,
    pub solution_min_on_k: f64,
    /// Share of interior nodes with lower < u < upper.
    pub strictly_inside: f64,
    pub minimization: IntervalMinimum,
    pub certificates: CaseICertificates,
    /// Wall-clock seconds per stage.
    pub timings: Vec<(&'static str, f64)>,
}

fn compact_nodes(space: &DiscreteSpace, margin: f64) -> Vec<usize> {
    let mesh = space.mesh();
    let cut = margin * mesh.diam();
    mesh.interior_nodes()
        .filter(|&i| mesh.domain().boundary_distance(mesh.point(i)) >= cut)
        .collect()
}

pub fn solve_case1(space: &DiscreteSpace, spec: &CaseISpec, opts: &CaseIOptions) -> Result<CaseIReport> {
    spec.validate().stage("validate")?;
    let mut timings = Vec::new();
    let mut clock = Instant::now();
    let mut lap = |name: &'static str, timings: &mut Vec<(&'static str, f64)>| {
        timings.push((name, clock.elapsed().as_secs_f64()));
        clock = Instant::now();
    };
    let eig_opts = EigenOptions {
        residual_tol: 1e-11,
        ..EigenOptions::default()
    };
    let eigen = first_eigenpair(space, &eig_opts).stage("eigen")?;
    info!("λ₁ = {:.8e} after {} iterations", eigen.lambda1, eigen.iterations);
    lap("eigen", &mut timings);
    let v0 = solve_pure_singular(space, spec.q, opts.continuation_tol).stage("pure_singular")?;
    lap("pure_singular", &mut timings);
    info!("v₀: {} continuation levels, ‖v₀‖∞ = {:.6e}", v0.steps.len(), v0.v0.sup_norm());
    let (mut a, mut lower) = construct_subsolution(space, spec, &eigen).stage("subsolution")?;
    let (big_a, upper) = construct_supersolution(spec, &v0.v0).stage("supersolution")?;
    let mut order_repairs = 0;
    // upper.shortfall_below(lower) > 0 iff lower exceeds upper somewhere
    while upper.shortfall_below(&lower) > 0.0 {
        a *= 0.5;
        if a < 1e-12 {
            return Err(SplError::Construction("cannot order the subsolution below the supersolution".into())).stage("order");
        }
        lower = eigen.e1.scaled(a);
        order_repairs += 1;
    }
    info!("a_λ = {a:e}, A_λ = {big_a:e}, {order_repairs} order repairs");
    lap("sub_super", &mut timings);
    let sub_rhs = |t: f64| spec.rhs(t);
    let sub_defect_max = space
        .defects(lower.values(), sub_rhs, true)
        .stage("subsolution")?
        .iter()
        .enumerate()
        .filter(|(i, _)| !space.is_boundary(*i))
        .map(|(_, d)| *d)
        .fold(f64::NEG_INFINITY, f64::max);
    let super_defect_min = space
        .defects(upper.values(), sub_rhs, true)
        .stage("supersolution")?
        .iter()
        .enumerate()
        .filter(|(i, _)| !space.is_boundary(*i))
        .map(|(_, d)| *d)
        .fold(f64::INFINITY, f64::min);
    let interval = OrderInterval::new(lower, upper).stage("order")?;
    let k_nodes = compact_nodes(space, opts.compact_margin);
    let c_k = k_nodes.iter().map(|&i| interval.lower.values()[i]).fold(f64::INFINITY, f64::min);
    let minimization = minimize_over_interval(space, &interval, spec, 1e-10).stage("minimize")?;
    let solution = minimization.u.clone();
    lap("minimize", &mut timings);
    let residual = space.weak_residual(&solution, sub_rhs, true).stage("residual")?;
    let energy = minimization.energy;
    let energy_lower = energy_case1(space, &interval.lower, spec)?;
    let energy_upper = energy_case1(space, &interval.upper, spec)?;
    let u = solution.values();
    let (lo, hi) = (interval.lower.values(), interval.upper.values());
    let order = (0..u.len()).all(|i| lo[i] <= u[i] && u[i] <= hi[i]);
    let interior: Vec<usize> = space.mesh().interior_nodes().collect();
    let inside = interior.iter().filter(|&&i| lo[i] < u[i] && u[i] < hi[i]).count();
    let solution_min_on_k = k_nodes.iter().map(|&i| u[i]).fold(f64::INFINITY, f64::min);
    let monotone_descent = minimization.energy_log.windows(2).all(|w| w[1] <= w[0]);
    let certificates = CaseICertificates {
        order,
        subsolution: sub_defect_max <= opts.defect_tol,
        supersolution: super_defect_min >= -opts.defect_tol,
        residual: residual <= opts.residual_tol,
        positivity: c_k > 0.0 && solution_min_on_k >= c_k,
        energy_minimal: energy <= energy_lower && energy <= energy_upper,
        monotone_descent,
        monotone_continuation: v0.monotone,
    };
    Ok(CaseIReport {
        eigen,
        a_lambda: a,
        capital_a_lambda: big_a,
        order_repairs,
        c_k,
        v0,
        interval,
        solution,
        energy,
        energy_lower,
        energy_upper,
        residual,
        sub_defect_max,
        super_defect_min,
        solution_min_on_k,
        strictly_inside: inside as f64 / interior.len().max(1) as f64,
        minimization,
        certificates,
        timings,
    })
}
