//! Case II: -Δ_{p,w}u = λu^{-q} + u^r. Two solutions as ε → 0 limits of a
//! ball-constrained minimizer ν_ε and a mountain-pass point ζ_ε of I_{λ,ε}.

use std::collections::BTreeMap;
use std::time::Instant;

use log::{debug, info, warn};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::case1::solve_pure_singular;
use crate::eigen::{first_eigenpair, EigenOptions, EigenPair};
use crate::energy::{CaseIISpec, SingularReaction};
use crate::error::{Result, SplError, StageExt};
use crate::mesh::{DiscreteSpace, Field};
use crate::solver::{find_critical_point, minimize_in_ball, solve_load, torsion, Bounds, Functional, SolveOptions};
use crate::weights::EmbeddingExponents;

/// Outcome of one certificate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Status {
    Pass,
    Warn,
    Fail,
}

impl Status {
    pub fn from_bool(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Fail
        }
    }

    /// Soft check: failure is reported but not fatal.
    pub fn soft(ok: bool) -> Self {
        if ok {
            Status::Pass
        } else {
            Status::Warn
        }
    }
}

/// l = |Ω|^{1/(p_s*/(r+1))'}; |Ω| when p_s* = ∞.
pub fn holder_factor(measure: f64, exps: &EmbeddingExponents, r: f64) -> f64 {
    match exps.p_s_star {
        Some(ps) => measure.powf(1.0 - (r + 1.0) / ps),
        None => measure,
    }
}

/// R = k((r+1)/(pCl))^{1/(r+1-p)} and 2ρ the smaller of
/// ((r+1)/(pCl))^{p/(r+1-p)}(k^p/p - Cl k^{r+1}/p) and the sphere bound
/// R^p/p - Cl R^{r+1}/(r+1) = ((r+1)/(pCl))^{p/(r+1-p)}(k^p - k^{r+1})/p.
/// The two agree at Cl = 1; for Cl < 1 only the second is guaranteed.
pub fn mp_constants(p: f64, r: f64, k: f64, cl: f64) -> Result<(f64, f64)> {
    if !(k > 0.0 && k < 1.0) {
        return Err(SplError::invalid("k", format!("k must lie in (0,1), got {k}")));
    }
    if !(cl > 0.0) || !cl.is_finite() {
        return Err(SplError::invalid("C_embed", format!("C·l must be positive, got {cl}")));
    }
    let e = r + 1.0 - p;
    if !(e > 0.0) {
        return Err(SplError::invalid("r", "r + 1 must exceed p"));
    }
    let base = (r + 1.0) / (p * cl);
    let radius = k * base.powf(1.0 / e);
    let closed = k.powf(p) / p - cl * k.powf(r + 1.0) / p;
    let sphere = (k.powf(p) - k.powf(r + 1.0)) / p;
    let rho = 0.5 * base.powf(p / e) * closed.min(sphere);
    if !(rho > 0.0) {
        let k_crit = cl.powf(-1.0 / e).min(1.0);
        return Err(SplError::Construction(format!(
            "mountain-pass level rho = {rho:e} is not positive; k must stay below {k_crit}"
        )));
    }
    Ok((radius, rho))
}

/// Smooth random fields: linear-stiffness solves against random loads
/// (uniform noise, single and double bumps). Nodal absolute values.
pub fn random_fields(space: &DiscreteSpace, count: usize, rng: &mut ChaCha8Rng) -> Vec<Vec<f64>> {
    let mesh = space.mesh();
    let n = space.len();
    let mut k = space.linear_stiffness();
    for i in 0..n {
        if mesh.is_boundary(i) {
            k.pin(i, 1.0);
        }
    }
    let chol = k.cholesky().expect("pinned stiffness is positive definite");
    let (lo, hi) = mesh.domain().bounding_box();
    let dim = mesh.dim();
    let diam = mesh.diam();
    let bump = |rng: &mut ChaCha8Rng| -> Vec<f64> {
        let mut c = [0.0; 2];
        for d in 0..dim {
            c[d] = rng.gen_range(lo[d]..hi[d]);
        }
        let s = rng.gen_range(0.05..0.5) * diam;
        (0..n)
            .map(|i| {
                let x = mesh.node(i);
                let d2: f64 = (0..dim).map(|d| (x[d] - c[d]).powi(2)).sum();
                (-d2 / (s * s)).exp()
            })
            .collect()
    };
    (0..count)
        .map(|j| {
            let load: Vec<f64> = match j % 3 {
                0 => (0..n).map(|_| rng.gen_range(-0.25..1.0)).collect(),
                1 => bump(rng),
                _ => {
                    let a = bump(rng);
                    let b = bump(rng);
                    let c: f64 = rng.gen_range(-0.5..1.0);
                    a.iter().zip(&b).map(|(x, y)| x + c * y).collect()
                }
            };
            let mut b: Vec<f64> = load.iter().zip(space.lumped_mass()).map(|(v, m)| v * m).collect();
            space.zero_boundary(&mut b);
            chol.solve(&b).into_iter().map(f64::abs).collect()
        })
        .filter(|v: &Vec<f64>| space.seminorm(v) > 0.0)
        .collect()
}

/// max over `fields` of ∫|v|^{r+1} / ‖v‖^{r+1} (lumped, as in the energy).
pub fn embedding_ratio(space: &DiscreteSpace, r: f64, fields: &[Vec<f64>]) -> f64 {
    fields
        .iter()
        .map(|v| space.lumped_integral(v, |t| t.abs().powf(r + 1.0)) / space.seminorm(v).powf(r + 1.0))
        .fold(0.0, f64::max)
}

fn ratio_of(space: &DiscreteSpace, r: f64, v: &[f64]) -> f64 {
    space.lumped_integral(v, |t| t.abs().powf(r + 1.0)) / space.seminorm(v).powf(r + 1.0)
}

/// Generalized power method for max ∫|v|^{r+1} on the unit sphere of X:
/// v ← (-Δ_{p,w})^{-1}(|v|^{r-1}v), normalized. The objective is convex,
/// so the ratio never decreases. Returns the final ratio.
pub fn refine_embedding(space: &DiscreteSpace, r: f64, start: &[f64], max_iter: usize) -> Result<f64> {
    let opts = SolveOptions { tol: 1e-11, max_iter: 200 };
    let mut v = unit(space, start);
    let mut ratio = ratio_of(space, r, &v);
    for _ in 0..max_iter {
        let load: Vec<f64> = v.iter().map(|t| t.abs().powf(r - 1.0) * t).collect();
        let w = solve_load(space, load, None, &opts)?.u;
        let next = unit(space, &w);
        let next_ratio = ratio_of(space, r, &next);
        let gain = next_ratio - ratio;
        v = next;
        ratio = ratio.max(next_ratio);
        if gain <= 1e-10 * ratio {
            break;
        }
    }
    Ok(ratio)
}

/// Sampled fields refined by [`refine_embedding`].
const EMBED_REFINED: usize = 4;

/// Safety inflation of the sampled embedding ratio.
pub const EMBED_INFLATION: f64 = 1.2;

#[derive(Debug, Clone, Copy)]
pub struct GeometryOptions {
    pub k: f64,
    pub embed_samples: usize,
    pub sphere_samples: usize,
    pub seed: u64,
}

impl Default for GeometryOptions {
    fn default() -> Self {
        GeometryOptions {
            k: 0.5,
            embed_samples: 500,
            sphere_samples: 200,
            seed: 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct MPGeometry {
    pub k: f64,
    /// Largest ratio ∫|v|^{r+1}/‖v‖^{r+1} over the random sample.
    pub embed_sampled: f64,
    /// The same after power-method refinement; C·l is its inflation.
    pub embed_refined: f64,
    pub c_embed: f64,
    pub l: f64,
    pub radius: f64,
    pub rho: f64,
    /// Estimate of Λ from the sampled sphere set.
    pub lambda_est: f64,
    pub t: f64,
    /// (1/(1-q)) max ∫|v|^{1-q} over the sphere set.
    pub sphere_sup: f64,
    /// Sphere directions (unit seminorm), reused by the sphere scan.
    #[serde(skip)]
    pub sphere_set: Vec<Vec<f64>>,
}

/// I_{λ,ε}(v)
pub fn energy_at(space: &DiscreteSpace, spec: &CaseIISpec, v: &[f64]) -> f64 {
    let r = spec.reaction();
    Functional::new(space, &r).energy(v)
}

fn unit(space: &DiscreteSpace, v: &[f64]) -> Vec<f64> {
    let s = space.seminorm(v);
    v.iter().map(|x| x / s).collect()
}

/// Mountain-pass constants. The sphere set holds e₁, the pure singular
/// direction (the exact maximizer of ∫|v|^{1-q} on the discrete sphere)
/// and `sphere_samples` random fields.
pub fn mp_geometry(
    space: &DiscreteSpace,
    spec: &CaseIISpec,
    exps: &EmbeddingExponents,
    e1: &Field,
    singular_direction: &Field,
    opts: &GeometryOptions,
) -> Result<MPGeometry> {
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let mut embed = random_fields(space, opts.embed_samples, &mut rng);
    embed.push(e1.values().to_vec());
    embed.push(singular_direction.values().to_vec());
    let sampled = embedding_ratio(space, spec.r, &embed);
    // random smooth fields miss concentrated maximizers; climb from the best few
    let mut ranked: Vec<(f64, usize)> = embed.iter().enumerate().map(|(i, v)| (ratio_of(space, spec.r, v), i)).collect();
    ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
    let mut refined = sampled;
    for &(_, i) in ranked.iter().take(EMBED_REFINED) {
        refined = refined.max(refine_embedding(space, spec.r, &embed[i], 500)?);
    }
    let cl = EMBED_INFLATION * refined;
    let l = holder_factor(space.mesh().domain().measure(), exps, spec.r);
    let (radius, rho) = mp_constants(spec.p, spec.r, opts.k, cl)?;
    let mut sphere_set = vec![unit(space, e1.values()), unit(space, singular_direction.values())];
    sphere_set.extend(random_fields(space, opts.sphere_samples, &mut rng).iter().map(|v| unit(space, v)));
    let q = spec.q;
    let sphere_sup = sphere_set
        .iter()
        .map(|v| space.lumped_integral(v, |t| (radius * t).abs().powf(1.0 - q)) / (1.0 - q))
        .fold(0.0, f64::max);
    let lambda_est = rho / sphere_sup;
    // I_0 bounds I_{λ,ε} from above on v ≥ 0
    let free = spec.with_lambda(0.0);
    let mut t = 2.0 * radius / space.seminorm(e1.values());
    let mut found = false;
    for _ in 0..200 {
        if energy_at(space, &free, &e1.scaled(t).into_values()) < -1.0 {
            found = true;
            break;
        }
        t *= 2.0;
    }
    if !found {
        return Err(SplError::Construction("no T with I(T e1) < -1".into()));
    }
    Ok(MPGeometry {
        k: opts.k,
        embed_sampled: sampled,
        embed_refined: refined,
        c_embed: cl / l,
        l,
        radius,
        rho,
        lambda_est,
        t,
        sphere_sup,
        sphere_set,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct SphereScan {
    pub min_energy: f64,
    pub threshold: f64,
    pub passes: bool,
}

/// min of I_{λ,ε} over the sphere set scaled to ‖v‖ = R, against ρ(1-0.05).
pub fn sphere_scan(space: &DiscreteSpace, spec: &CaseIISpec, geo: &MPGeometry) -> SphereScan {
    let min_energy = geo
        .sphere_set
        .iter()
        .map(|v| {
            let s: Vec<f64> = v.iter().map(|x| x * geo.radius).collect();
            energy_at(space, spec, &s)
        })
        .fold(f64::INFINITY, f64::min);
    let threshold = geo.rho * 0.95;
    SphereScan {
        min_energy,
        threshold,
        passes: min_energy >= threshold,
    }
}

#[derive(Debug, Clone)]
pub struct Barrier {
    pub c: f64,
    pub xi: Field,
}

/// ξ solving -Δ_{p,w}ξ = min{1, λ/2^q}.
pub fn barrier(space: &DiscreteSpace, spec: &CaseIISpec, tol: f64) -> Result<Barrier> {
    if !(spec.lambda > 0.0) {
        return Err(SplError::invalid("lambda", "barrier needs lambda > 0"));
    }
    let c = f64::min(1.0, spec.lambda / 2f64.powf(spec.q));
    let out = torsion(space, c, &SolveOptions { tol, max_iter: 500 })?;
    let xi = Field::in_space(space.mesh(), out.u)?;
    if let Some(i) = space.mesh().interior_nodes().find(|&i| !(xi.values()[i] > 0.0)) {
        return Err(SplError::SingularEvaluation { node: i, value: xi.values()[i] });
    }
    Ok(Barrier { c, xi })
}

#[derive(Debug, Clone)]
pub struct BallMinimum {
    pub nu: Field,
    pub energy: f64,
    pub residual: f64,
    pub iterations: usize,
}

/// Minimizer of I_{λ,ε} over {v ≥ 0, ‖v‖ ≤ R}, started at `warm` when it
/// has negative energy, else at the largest dyadic fraction t·e₁ that does.
pub fn ball_minimizer(
    space: &DiscreteSpace,
    spec: &CaseIISpec,
    geo: &MPGeometry,
    e1: &Field,
    warm: Option<&Field>,
    tol: f64,
) -> Result<BallMinimum> {
    if spec.lambda == 0.0 {
        // I ≥ 0 near the origin, which is the minimizer
        return Ok(BallMinimum {
            nu: Field::zeros(space.mesh()),
            energy: 0.0,
            residual: 0.0,
            iterations: 0,
        });
    }
    if !(spec.eps > 0.0) {
        return Err(SplError::invalid("eps", "ball minimization needs eps > 0"));
    }
    if spec.lambda >= geo.lambda_est {
        debug!("lambda = {} is not below the estimated Lambda = {:e}", spec.lambda, geo.lambda_est);
    }
    let start = match warm {
        Some(w) if energy_at(space, spec, w.values()) < 0.0 && space.seminorm(w.values()) <= geo.radius => w.values().to_vec(),
        _ => {
            let t0 = geo.radius / space.seminorm(e1.values());
            (1..=80)
                .map(|k| e1.scaled(t0 * 0.5f64.powi(k)).into_values())
                .find(|v| energy_at(space, spec, v) < 0.0)
                .ok_or_else(|| SplError::Construction("no negative-energy start along t*e1".into()))?
        }
    };
    let r = spec.reaction();
    let out = minimize_in_ball(
        space,
        &r,
        &start,
        &Bounds::nonnegative(space.len()),
        geo.radius,
        &SolveOptions { tol, max_iter: 500 },
    )?;
    if !(out.energy < 0.0) {
        return Err(SplError::Construction(format!(
            "ball minimizer has energy {:e} >= 0",
            out.energy
        )));
    }
    Ok(BallMinimum {
        nu: Field::in_space(space.mesh(), out.u)?,
        energy: out.energy,
        residual: out.residual,
        iterations: out.iterations,
    })
}

#[derive(Debug, Clone, Copy)]
pub struct MountainPassOptions {
    pub nodes: usize,
    /// Residual measure at which the path maximum is handed to Newton.
    pub switch_tol: f64,
    pub tol: f64,
    pub max_deformations: usize,
    /// Ceiling on the node count reached by midpoint refinement.
    pub max_nodes: usize,
}

impl Default for MountainPassOptions {
    fn default() -> Self {
        MountainPassOptions {
            nodes: 41,
            switch_tol: 1e-3,
            tol: 1e-10,
            max_deformations: 20_000,
            max_nodes: 321,
        }
    }
}

#[derive(Debug, Clone)]
pub struct MountainPass {
    pub zeta: Field,
    pub energy: f64,
    pub residual: f64,
    pub path: Vec<Vec<f64>>,
    /// Path maximum before every deformation step.
    pub max_log: Vec<f64>,
    /// Indices into `max_log` where a midpoint refinement took effect.
    pub refinements: Vec<usize>,
    pub deformations: usize,
    pub newton_iterations: usize,
}

impl MountainPass {
    /// Nonincreasing maximum across deformation steps. A refinement only adds
    /// nodes on the same polyline, so a rise across one is not a deformation.
    pub fn max_monotone(&self) -> bool {
        (1..self.max_log.len()).all(|i| self.refinements.contains(&i) || self.max_log[i] <= self.max_log[i - 1])
    }
}

fn distance(space: &DiscreteSpace, a: &[f64], b: &[f64]) -> f64 {
    space.seminorm(&a.iter().zip(b).map(|(x, y)| x - y).collect::<Vec<_>>())
}

/// Inserts the midpoint of every segment longer than `cap`; returns whether
/// anything changed.
fn split_long_segments(space: &DiscreteSpace, path: &mut Vec<Vec<f64>>, values: &mut Vec<f64>, cap: f64, energy: impl Fn(&[f64]) -> f64) -> bool {
    let mut k = 1;
    let mut changed = false;
    while k < path.len() {
        if distance(space, &path[k], &path[k - 1]) > cap {
            let mid: Vec<f64> = path[k].iter().zip(&path[k - 1]).map(|(a, b)| 0.5 * (a + b)).collect();
            values.insert(k, energy(&mid));
            path.insert(k, mid);
            changed = true;
        } else {
            k += 1;
        }
    }
    changed
}

fn straight_path(space: &DiscreteSpace, end: &[f64], m: usize) -> Vec<Vec<f64>> {
    let _ = space;
    (0..m)
        .map(|k| {
            let s = k as f64 / (m - 1) as f64;
            end.iter().map(|v| s * v).collect()
        })
        .collect()
}

fn cumulative_length(space: &DiscreteSpace, path: &[Vec<f64>]) -> Vec<f64> {
    let mut cum = vec![0.0; path.len()];
    for k in 1..path.len() {
        let d: Vec<f64> = path[k].iter().zip(&path[k - 1]).map(|(a, b)| a - b).collect();
        cum[k] = cum[k - 1] + space.seminorm(&d);
    }
    cum
}

fn path_length(space: &DiscreteSpace, path: &[Vec<f64>]) -> f64 {
    cumulative_length(space, path).last().copied().unwrap_or(0.0)
}

/// Equal seminorm arclength redistribution of the interior path nodes.
fn respline(space: &DiscreteSpace, path: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let m = path.len();
    let cum = cumulative_length(space, path);
    let total = cum[m - 1];
    if !(total > 0.0) {
        return path.to_vec();
    }
    let mut out = Vec::with_capacity(m);
    out.push(path[0].clone());
    let mut seg = 0;
    for k in 1..m - 1 {
        let target = total * k as f64 / (m - 1) as f64;
        while seg + 1 < m - 1 && cum[seg + 1] < target {
            seg += 1;
        }
        let len = cum[seg + 1] - cum[seg];
        let s = if len > 0.0 { (target - cum[seg]) / len } else { 0.0 };
        out.push(path[seg].iter().zip(&path[seg + 1]).map(|(a, b)| a + s * (b - a)).collect());
    }
    out.push(path[m - 1].clone());
    out
}

fn path_max(values: &[f64]) -> (usize, f64) {
    let m = values.len();
    (1..m - 1).fold((1, f64::NEG_INFINITY), |acc, k| if values[k] > acc.1 { (k, values[k]) } else { acc })
}

/// Path deformation from 0 to T·e₁: Armijo steps along the stiffness
/// preconditioned descent direction at the path maximum, then arclength
/// redistribution (kept only if the maximum does not rise). The maximizer is
/// polished by Newton once its residual drops below `switch_tol`.
///
/// Segments are kept no longer than twice the initial spacing: a long
/// segment lets neighbouring nodes straddle the ridge around the sphere
/// unseen. When the cap blocks a step the segments next to the maximizer are
/// halved instead.
///
/// The path maximum must stay at or above ρ when λ < Λ_est and above 0
/// otherwise; dropping below is reported as a level collapse.
pub fn mountain_pass_search(
    space: &DiscreteSpace,
    spec: &CaseIISpec,
    geo: &MPGeometry,
    e1: &Field,
    warm_path: Option<&[Vec<f64>]>,
    opts: &MountainPassOptions,
) -> Result<MountainPass> {
    let m0 = opts.nodes.max(3);
    let reaction = spec.reaction();
    let fun = Functional::new(space, &reaction);
    let end = e1.scaled(geo.t).into_values();
    if !(fun.energy(&end) <= 0.0) {
        return Err(SplError::invalid("T", "path endpoint must have nonpositive energy"));
    }
    let seg_cap = 2.0 * space.seminorm(&end) / (m0 - 1) as f64;
    let mut path = match warm_path {
        Some(p) if p.len() >= 3 => p.to_vec(),
        _ => straight_path(space, &end, m0),
    };
    let last = path.len() - 1;
    path[0] = vec![0.0; space.len()];
    path[last] = end;
    let n = space.len();
    let mut k = space.linear_stiffness();
    for i in 0..n {
        if space.is_boundary(i) {
            k.pin(i, 1.0);
        }
    }
    let chol = k.cholesky().expect("pinned stiffness is positive definite");
    let mut values: Vec<f64> = path.iter().map(|v| fun.energy(v)).collect();
    split_long_segments(space, &mut path, &mut values, seg_cap, |v| fun.energy(v));
    let mut max_log = Vec::new();
    let mut refinements = Vec::new();
    let mut alpha = 1.0f64;
    let mut switch_tol = opts.switch_tol;
    let mut deformations = 0;
    let floor = if spec.lambda < geo.lambda_est { geo.rho } else { 0.0 };
    loop {
        let m = path.len();
        let (j, top) = path_max(&values);
        max_log.push(top);
        if top < floor || top <= 0.0 {
            let hint = if floor > 0.0 {
                "refine the mesh"
            } else {
                "lambda is above the estimated Lambda, where the mountain-pass geometry is not guaranteed"
            };
            return Err(SplError::Construction(format!(
                "mountain-pass level collapsed to {top:e} below {floor:e}; {hint}"
            )));
        }
        let g = fun.gradient(&path[j]);
        let res = space.residual_measure(&g);
        if res < switch_tol {
            let mut guess = path[j].clone();
            for i in space.mesh().interior_nodes() {
                guess[i] = guess[i].max(1e-12);
            }
            match find_critical_point(space, &reaction, &guess, true, &SolveOptions { tol: opts.tol, max_iter: 100 }) {
                Ok(out) if out.energy >= floor && out.energy > 0.0 && out.u.iter().all(|v| *v >= 0.0) => {
                    debug!("mountain pass: {deformations} deformations, level {:e}", out.energy);
                    return Ok(MountainPass {
                        zeta: Field::in_space(space.mesh(), out.u)?,
                        energy: out.energy,
                        residual: out.residual,
                        path,
                        max_log,
                        refinements,
                        deformations,
                        newton_iterations: out.iterations,
                    });
                }
                _ => switch_tol *= 0.1,
            }
        }
        if deformations >= opts.max_deformations {
            return Err(SplError::NonConvergence {
                solver: "mountain-pass path deformation",
                iterations: deformations,
                residual: res,
            });
        }
        let mut b: Vec<f64> = g.iter().map(|v| -v).collect();
        space.zero_boundary(&mut b);
        let d = chol.solve(&b);
        let x = &path[j];
        let mut accepted = None;
        // steps longer than a path segment kink the path between nodes
        let seg = path_length(space, &path) / (m - 1) as f64;
        let cap = (0.5 * seg / space.seminorm(&d).max(f64::MIN_POSITIVE)).min(1.0);
        alpha = (2.0 * alpha).min(cap);
        for _ in 0..60 {
            let y: Vec<f64> = x.iter().zip(&d).map(|(a, b)| (a + alpha * b).max(0.0)).collect();
            let ey = fun.energy(&y);
            let pred: f64 = g.iter().zip(&y).zip(x).map(|((g, a), b)| g * (a - b)).sum();
            let short = distance(space, &y, &path[j - 1]) <= seg_cap && distance(space, &y, &path[j + 1]) <= seg_cap;
            if ey.is_finite() && pred < 0.0 && ey <= top + 1e-4 * pred && short {
                accepted = Some((y, ey));
                break;
            }
            alpha *= 0.5;
        }
        let Some((y, ey)) = accepted else {
            if m + 2 > opts.max_nodes {
                return Err(SplError::NonConvergence {
                    solver: "mountain-pass path deformation (line search)",
                    iterations: deformations,
                    residual: res,
                });
            }
            for k in [j + 1, j] {
                let mid: Vec<f64> = path[k].iter().zip(&path[k - 1]).map(|(a, b)| 0.5 * (a + b)).collect();
                values.insert(k, fun.energy(&mid));
                path.insert(k, mid);
            }
            refinements.push(max_log.len());
            alpha = 1.0;
            continue;
        };
        path[j] = y;
        values[j] = ey;
        deformations += 1;
        let candidate = respline(space, &path);
        let cv: Vec<f64> = candidate.iter().map(|v| fun.energy(v)).collect();
        let spacing = path_length(space, &candidate) / (m - 1) as f64;
        if path_max(&cv).1 <= top && spacing <= seg_cap {
            path = candidate;
            values = cv;
        }
    }
}

/// (normalized arclength, I) along a path.
pub fn path_profile(space: &DiscreteSpace, spec: &CaseIISpec, path: &[Vec<f64>]) -> Vec<(f64, f64)> {
    let cum = cumulative_length(space, path);
    let total = cum.last().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    path.iter().zip(&cum).map(|(v, c)| (c / total, energy_at(space, spec, v))).collect()
}

/// 2^{-1}, ..., 2^{-floor_exp}.
pub fn dyadic_schedule(floor_exp: u32) -> Vec<f64> {
    (1..=floor_exp as i32).map(|j| 0.5f64.powi(j)).collect()
}

#[derive(Debug, Clone, Serialize)]
pub struct EpsLevel {
    pub eps: f64,
    pub nu_energy: f64,
    pub zeta_energy: f64,
    pub nu_norm: f64,
    pub zeta_norm: f64,
    /// Seminorm distance to the previous level; NaN on the first.
    pub nu_difference: f64,
    pub zeta_difference: f64,
    pub nu_residual: f64,
    pub zeta_residual: f64,
    /// min over interior nodes of v - ξ.
    pub nu_barrier_margin: f64,
    pub zeta_barrier_margin: f64,
    pub deformations: usize,
    pub path_max_monotone: bool,
}

#[derive(Debug, Clone)]
pub struct Continuation {
    pub levels: Vec<EpsLevel>,
    pub nu: Field,
    pub zeta: Field,
    pub path: Vec<Vec<f64>>,
    pub nu_converged: bool,
    pub zeta_converged: bool,
}

/// min over interior nodes of v - ξ.
fn barrier_margin(space: &DiscreteSpace, v: &Field, xi: &Field) -> f64 {
    space.mesh().interior_nodes().map(|i| v.values()[i] - xi.values()[i]).fold(f64::INFINITY, f64::min)
}

/// Warm-started ball and mountain-pass solves along a strictly decreasing
/// schedule; converged when the last seminorm step falls below `tol`.
#[allow(clippy::too_many_arguments)]
pub fn eps_continuation(
    space: &DiscreteSpace,
    spec: &CaseIISpec,
    geo: &MPGeometry,
    e1: &Field,
    xi: &Field,
    schedule: &[f64],
    tol: f64,
    mp: &MountainPassOptions,
) -> Result<Continuation> {
    if schedule.is_empty() {
        return Err(SplError::invalid("schedule", "must not be empty"));
    }
    if schedule.iter().any(|e| !(*e > 0.0)) || schedule.windows(2).any(|w| !(w[1] < w[0])) {
        return Err(SplError::invalid("schedule", "must be positive and strictly decreasing"));
    }
    let mut levels: Vec<EpsLevel> = Vec::new();
    let mut nu: Option<Field> = None;
    let mut zeta: Option<Field> = None;
    let mut path: Option<Vec<Vec<f64>>> = None;
    for &eps in schedule {
        let s = spec.with_eps(eps);
        let ball = ball_minimizer(space, &s, geo, e1, nu.as_ref(), mp.tol).stage("ball_minimizer")?;
        let pass = mountain_pass_search(space, &s, geo, e1, path.as_deref(), mp).stage("mountain_pass")?;
        let diff = |a: &Field, b: Option<&Field>| match b {
            Some(b) => {
                let d: Vec<f64> = a.values().iter().zip(b.values()).map(|(x, y)| x - y).collect();
                space.seminorm(&d)
            }
            None => f64::NAN,
        };
        let rhs = |t: f64| s.rhs(t);
        let level = EpsLevel {
            eps,
            nu_energy: ball.energy,
            zeta_energy: pass.energy,
            nu_norm: space.seminorm(ball.nu.values()),
            zeta_norm: space.seminorm(pass.zeta.values()),
            nu_difference: diff(&ball.nu, nu.as_ref()),
            zeta_difference: diff(&pass.zeta, zeta.as_ref()),
            nu_residual: space.weak_residual(&ball.nu, rhs, false)?,
            zeta_residual: space.weak_residual(&pass.zeta, rhs, false)?,
            nu_barrier_margin: barrier_margin(space, &ball.nu, xi),
            zeta_barrier_margin: barrier_margin(space, &pass.zeta, xi),
            deformations: pass.deformations,
            path_max_monotone: pass.max_monotone(),
        };
        info!(
            "eps = {eps:.3e}: I(nu) = {:.6e}, I(zeta) = {:.6e}, steps {:.2e} / {:.2e}, {} deformations",
            level.nu_energy, level.zeta_energy, level.nu_difference, level.zeta_difference, level.deformations
        );
        levels.push(level);
        nu = Some(ball.nu);
        zeta = Some(pass.zeta);
        path = Some(pass.path);
    }
    let last = levels.last().expect("schedule is nonempty");
    let nu_converged = last.nu_difference < tol;
    let zeta_converged = last.zeta_difference < tol;
    Ok(Continuation {
        nu_converged,
        zeta_converged,
        levels,
        nu: nu.expect("schedule is nonempty"),
        zeta: zeta.expect("schedule is nonempty"),
        path: path.expect("schedule is nonempty"),
    })
}

#[derive(Debug, Clone)]
pub struct TwoSolutions {
    pub nu: Field,
    pub zeta: Field,
    pub energies: (f64, f64),
    pub theta: f64,
    pub separation: f64,
}

#[derive(Debug, Clone, Copy)]
pub struct CaseIIOptions {
    pub geometry: GeometryOptions,
    pub schedule_floor: u32,
    pub continuation_tol: f64,
    pub residual_tol: f64,
    pub barrier_tol: f64,
    pub identity_tol: f64,
    pub mountain_pass: MountainPassOptions,
}

impl Default for CaseIIOptions {
    fn default() -> Self {
        CaseIIOptions {
            geometry: GeometryOptions::default(),
            schedule_floor: 20,
            continuation_tol: 1e-6,
            residual_tol: 1e-5,
            barrier_tol: 1e-8,
            identity_tol: 1e-2,
            mountain_pass: MountainPassOptions::default(),
        }
    }
}

/// λ-independent ingredients: e₁, the pure singular direction and the
/// mountain-pass geometry.
#[derive(Debug, Clone)]
pub struct CaseIISetup {
    pub eigen: EigenPair,
    pub singular_direction: Field,
    pub geometry: MPGeometry,
    pub timings: Vec<(&'static str, f64)>,
}

pub fn prepare_case2(space: &DiscreteSpace, spec: &CaseIISpec, exps: &EmbeddingExponents, opts: &GeometryOptions) -> Result<CaseIISetup> {
    spec.check_r(exps).stage("validate")?;
    let mut timings = Vec::new();
    let clock = Instant::now();
    let eigen = first_eigenpair(space, &EigenOptions::default()).stage("eigen")?;
    timings.push(("eigen", clock.elapsed().as_secs_f64()));
    let clock = Instant::now();
    let singular = solve_pure_singular(space, spec.q, 1e-8).stage("geometry")?;
    let geometry = mp_geometry(space, spec, exps, &eigen.e1, &singular.v0, opts).stage("geometry")?;
    timings.push(("geometry", clock.elapsed().as_secs_f64()));
    info!(
        "R = {:.6e}, rho = {:.6e}, Lambda_est = {:.6e}, T = {:.3e}",
        geometry.radius, geometry.rho, geometry.lambda_est, geometry.t
    );
    Ok(CaseIISetup {
        eigen,
        singular_direction: singular.v0,
        geometry,
        timings,
    })
}

#[derive(Debug, Clone)]
pub struct CaseIIReport {
    pub eigen: EigenPair,
    pub geometry: MPGeometry,
    pub sphere: SphereScan,
    pub barrier: Barrier,
    pub continuation: Continuation,
    pub solutions: TwoSolutions,
    pub residuals: (f64, f64),
    /// |‖v‖^p - λ∫v^{1-q} - ∫v^{r+1}| / ‖v‖^p for ν₀ and ζ₀.
    pub identity_errors: (f64, f64),
    /// |I_{λ,ε_last}(v_ε) - I_λ(v₀)| for both branches.
    pub limit_gaps: (f64, f64),
    pub path_profile: Vec<(f64, f64)>,
    pub certificates: BTreeMap<&'static str, Status>,
    /// Wall-clock seconds per stage.
    pub timings: Vec<(&'static str, f64)>,
}

impl CaseIIReport {
    pub fn worst(&self) -> Status {
        worst_status(&self.certificates)
    }
}

pub fn worst_status(c: &BTreeMap<&'static str, Status>) -> Status {
    if c.values().any(|s| *s == Status::Fail) {
        Status::Fail
    } else if c.values().any(|s| *s == Status::Warn) {
        Status::Warn
    } else {
        Status::Pass
    }
}

/// Certificate keys of a Case II report, in schema order.
pub const CASE2_CERTIFICATES: [&str; 15] = [
    "barrier_domination",
    "continuation_converged",
    "continuation_monotone",
    "distinct_solutions",
    "energy_identity",
    "energy_limit",
    "energy_ordering",
    "lambda_range",
    "mountain_pass_level",
    "mountain_pass_monotone",
    "nonnegativity",
    "residual_nu",
    "residual_zeta",
    "sphere_geometry",
    "uniform_bound",
];

fn identity_error(space: &DiscreteSpace, spec: &CaseIISpec, v: &Field) -> f64 {
    let lhs = space.p() * space.dirichlet_energy(v.values());
    let rhs = spec.lambda * space.lumped_integral(v.values(), |t| t.max(0.0).powf(1.0 - spec.q))
        + space.lumped_integral(v.values(), |t| t.max(0.0).powf(spec.r + 1.0));
    (lhs - rhs).abs() / lhs.abs().max(f64::MIN_POSITIVE)
}

/// Consecutive differences decrease over the last `k` levels.
fn last_decreasing(d: &[f64], k: usize) -> bool {
    d.len() >= k && d[d.len() - k..].windows(2).all(|w| w[1] < w[0])
}

/// Geometry, barrier, continuation, then Newton polish of both branches at
/// ε = 0 and the certificate set.
pub fn solve_case2(space: &DiscreteSpace, spec: &CaseIISpec, exps: &EmbeddingExponents, opts: &CaseIIOptions) -> Result<CaseIIReport> {
    spec.validate(exps).stage("validate")?;
    let setup = prepare_case2(space, spec, exps, &opts.geometry)?;
    solve_case2_with(space, spec, exps, setup, opts)
}

/// [`solve_case2`] with precomputed λ-independent ingredients.
pub fn solve_case2_with(
    space: &DiscreteSpace,
    spec: &CaseIISpec,
    exps: &EmbeddingExponents,
    setup: CaseIISetup,
    opts: &CaseIIOptions,
) -> Result<CaseIIReport> {
    spec.validate(exps).stage("validate")?;
    let CaseIISetup {
        eigen,
        geometry,
        mut timings,
        ..
    } = setup;
    if spec.lambda >= geometry.lambda_est {
        warn!("lambda = {} is not below the estimated Lambda = {:e}", spec.lambda, geometry.lambda_est);
    }
    let clock = Instant::now();
    let barrier = barrier(space, spec, 1e-12).stage("barrier")?;
    timings.push(("barrier", clock.elapsed().as_secs_f64()));
    let clock = Instant::now();
    let schedule = dyadic_schedule(opts.schedule_floor);
    let sphere = sphere_scan(space, &spec.with_eps(schedule[schedule.len() - 1]), &geometry);
    let continuation = eps_continuation(
        space,
        spec,
        &geometry,
        &eigen.e1,
        &barrier.xi,
        &schedule,
        opts.continuation_tol,
        &opts.mountain_pass,
    )?;
    timings.push(("continuation", clock.elapsed().as_secs_f64()));
    let clock = Instant::now();
    let limit = spec.with_eps(0.0);
    let reaction: SingularReaction = limit.reaction();
    let newton = SolveOptions { tol: 1e-12, max_iter: 100 };
    let polish = |v: &Field| -> Result<Field> {
        let out = find_critical_point(space, &reaction, v.values(), true, &newton)?;
        Field::in_space(space.mesh(), out.u)
    };
    let nu = polish(&continuation.nu).stage("limit")?;
    let zeta = polish(&continuation.zeta).stage("limit")?;
    let rhs = |t: f64| limit.rhs(t);
    let residuals = (
        space.weak_residual(&nu, rhs, true).stage("limit")?,
        space.weak_residual(&zeta, rhs, true).stage("limit")?,
    );
    let energies = (energy_at(space, &limit, nu.values()), energy_at(space, &limit, zeta.values()));
    let levels = &continuation.levels;
    let last = levels.last().expect("schedule is nonempty");
    let limit_gaps = ((last.nu_energy - energies.0).abs(), (last.zeta_energy - energies.1).abs());
    let identity_errors = (identity_error(space, &limit, &nu), identity_error(space, &limit, &zeta));
    let diff: Vec<f64> = nu.values().iter().zip(zeta.values()).map(|(a, b)| a - b).collect();
    let separation = space.seminorm(&diff);
    let norms: Vec<f64> = levels.iter().map(|l| l.nu_norm.max(l.zeta_norm)).collect();
    let theta = norms.iter().copied().fold(0.0, f64::max);
    let growth = if norms.len() >= 2 {
        let (a, b) = (norms[norms.len() - 2], norms[norms.len() - 1]);
        (b - a) / a
    } else {
        f64::NAN
    };
    let rho = geometry.rho;
    let nu_d: Vec<f64> = levels.iter().skip(1).map(|l| l.nu_difference).collect();
    let zeta_d: Vec<f64> = levels.iter().skip(1).map(|l| l.zeta_difference).collect();
    let margin0 = barrier_margin(space, &nu, &barrier.xi).min(barrier_margin(space, &zeta, &barrier.xi));
    let mut c = BTreeMap::new();
    c.insert(
        "energy_ordering",
        Status::from_bool(
            levels.iter().all(|l| l.nu_energy < 0.0 && 0.0 < l.zeta_energy) && energies.0 < 0.0 && 0.0 < energies.1,
        ),
    );
    // ρ ≤ I(ζ) is only guaranteed below Λ
    let level_ok = levels.iter().all(|l| rho <= l.zeta_energy) && rho <= energies.1;
    let in_range = spec.lambda < geometry.lambda_est;
    c.insert(
        "mountain_pass_level",
        if in_range { Status::from_bool(level_ok) } else { Status::soft(level_ok) },
    );
    c.insert("distinct_solutions", Status::from_bool(separation > 0.0));
    c.insert(
        "barrier_domination",
        Status::from_bool(
            levels.iter().all(|l| l.nu_barrier_margin >= -opts.barrier_tol && l.zeta_barrier_margin >= -opts.barrier_tol)
                && margin0 >= -opts.barrier_tol,
        ),
    );
    c.insert("residual_nu", Status::from_bool(residuals.0 <= opts.residual_tol));
    c.insert("residual_zeta", Status::from_bool(residuals.1 <= opts.residual_tol));
    c.insert(
        "energy_identity",
        Status::from_bool(identity_errors.0 <= opts.identity_tol && identity_errors.1 <= opts.identity_tol),
    );
    c.insert(
        "energy_limit",
        Status::from_bool(
            limit_gaps.0 <= opts.identity_tol * (1.0 + energies.0.abs()) && limit_gaps.1 <= opts.identity_tol * (1.0 + energies.1.abs()),
        ),
    );
    c.insert(
        "continuation_converged",
        Status::soft(continuation.nu_converged && continuation.zeta_converged),
    );
    c.insert(
        "continuation_monotone",
        Status::from_bool(last_decreasing(&nu_d, 5) && last_decreasing(&zeta_d, 5)),
    );
    c.insert("uniform_bound", Status::from_bool(growth.is_finite() && growth < 0.05));
    c.insert(
        "nonnegativity",
        Status::from_bool(nu.values().iter().chain(zeta.values()).all(|v| *v >= 0.0)),
    );
    c.insert(
        "mountain_pass_monotone",
        Status::from_bool(levels.iter().all(|l| l.path_max_monotone)),
    );
    c.insert("sphere_geometry", Status::soft(sphere.passes));
    c.insert("lambda_range", Status::soft(in_range));
    debug_assert!(CASE2_CERTIFICATES.iter().all(|k| c.contains_key(k)));
    let path_profile = path_profile(space, &spec.with_eps(last.eps), &continuation.path);
    timings.push(("limit", clock.elapsed().as_secs_f64()));
    Ok(CaseIIReport {
        eigen,
        geometry,
        sphere,
        barrier,
        solutions: TwoSolutions {
            nu,
            zeta,
            energies,
            theta,
            separation,
        },
        continuation,
        residuals,
        identity_errors,
        limit_gaps,
        path_profile,
        certificates: c,
        timings,
    })
}
