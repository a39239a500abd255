//! Weight functions and their admissibility analysis: Muckenhoupt A_p
//! constant estimates, the A_s integrability subclass, embedding exponents,
//! and the weighted Morrey condition on 1/w.
//!
//! Suprema over balls are sampled on a lattice of centers with dyadic radii
//! `d0·2^{-j}`. "Finite" means two successive quadrature refinements agree
//! within 1% (relative).

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SplError};
use crate::mesh::{ray_exit_ball, Domain};
use crate::quadrature::{gauss, integrate_interval, integrate_polar, unit_sphere_area, GaussRule};

const STABLE_REL: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub enum WeightKind {
    Constant(f64),
    /// w(x) = |x|^alpha
    Power { alpha: f64 },
    Table(WeightTable),
}

/// Weight w > 0 on R^n, tagged with the Muckenhoupt index p.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    kind: WeightKind,
    n: usize,
    p: f64,
}

impl Weight {
    pub fn constant(c: f64, n: usize, p: f64) -> Result<Self> {
        if !(c > 0.0) || !c.is_finite() {
            return Err(SplError::invalid("weight", format!("constant weight must be positive, got {c}")));
        }
        Self::checked(WeightKind::Constant(c), n, p)
    }

    pub fn power(alpha: f64, n: usize, p: f64) -> Result<Self> {
        if !alpha.is_finite() {
            return Err(SplError::invalid("weight", "power exponent must be finite"));
        }
        Self::checked(WeightKind::Power { alpha }, n, p)
    }

    pub fn table(table: WeightTable, p: f64) -> Result<Self> {
        let n = table.dim();
        Self::checked(WeightKind::Table(table), n, p)
    }

    fn checked(kind: WeightKind, n: usize, p: f64) -> Result<Self> {
        if n == 0 {
            return Err(SplError::invalid("weight", "dimension must be positive"));
        }
        if !(p > 1.0) {
            return Err(SplError::invalid("p", format!("must exceed 1, got {p}")));
        }
        Ok(Weight { kind, n, p })
    }

    pub fn kind(&self) -> &WeightKind {
        &self.kind
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    /// Point where w vanishes or blows up (the origin for |x|^α, α ≠ 0).
    pub fn singular_point(&self) -> Option<[f64; 2]> {
        match self.kind {
            WeightKind::Power { alpha } if alpha != 0.0 => Some([0.0, 0.0]),
            _ => None,
        }
    }

    /// Radial weights admit the radial reduction of ball integrals.
    pub fn is_radial(&self) -> bool {
        !matches!(self.kind, WeightKind::Table(_))
    }

    /// w(x); refuses the singular point and non-positive values.
    pub fn eval(&self, x: &[f64]) -> Result<f64> {
        if let Some(s) = self.singular_point() {
            if x.iter().zip(s.iter()).all(|(a, b)| a == b) && x.iter().skip(2).all(|v| *v == 0.0) {
                return Err(SplError::invalid("weight", "evaluation at the singular point of a power weight"));
            }
        }
        let v = self.value(x);
        if !(v > 0.0) || !v.is_finite() {
            return Err(SplError::invalid("weight", format!("w = {v} at {x:?} is not in (0, ∞)")));
        }
        Ok(v)
    }

    /// Unchecked evaluation for quadrature points.
    pub(crate) fn value(&self, x: &[f64]) -> f64 {
        match &self.kind {
            WeightKind::Constant(c) => *c,
            WeightKind::Power { alpha } => {
                let r2: f64 = x.iter().map(|v| v * v).sum();
                r2.powf(0.5 * alpha)
            }
            WeightKind::Table(t) => t.interpolate(x),
        }
    }

    fn radial_value(&self, r: f64) -> f64 {
        match self.kind {
            WeightKind::Constant(c) => c,
            WeightKind::Power { alpha } => r.powf(alpha),
            WeightKind::Table(_) => unreachable!("tables are not radial"),
        }
    }
}

/// Tabulated weight, interpolated linearly (1D) or bilinearly on a tensor
/// grid (2D). Values outside the table are clamped to the nearest sample.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightTable {
    xs: Vec<f64>,
    ys: Vec<f64>,
    values: Vec<f64>,
}

impl WeightTable {
    pub fn new_1d(xs: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        let mut pairs: Vec<(f64, f64)> = xs.into_iter().zip(values).collect();
        pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
        if pairs.len() < 2 {
            return Err(SplError::invalid("weight", "table needs at least two samples"));
        }
        if pairs.windows(2).any(|w| w[0].0 == w[1].0) {
            return Err(SplError::invalid("weight", "duplicate x in weight table"));
        }
        let (xs, values): (Vec<f64>, Vec<f64>) = pairs.into_iter().unzip();
        Self::check_positive(&values)?;
        Ok(WeightTable { xs, ys: Vec::new(), values })
    }

    /// Samples (x, y, w) covering a full tensor grid.
    pub fn new_2d(samples: Vec<(f64, f64, f64)>) -> Result<Self> {
        let mut xs: Vec<f64> = samples.iter().map(|s| s.0).collect();
        let mut ys: Vec<f64> = samples.iter().map(|s| s.1).collect();
        xs.sort_by(f64::total_cmp);
        xs.dedup();
        ys.sort_by(f64::total_cmp);
        ys.dedup();
        if xs.len() < 2 || ys.len() < 2 || xs.len() * ys.len() != samples.len() {
            return Err(SplError::invalid("weight", "2D weight table must cover a full tensor grid"));
        }
        let mut values = vec![f64::NAN; xs.len() * ys.len()];
        for (x, y, w) in samples {
            let i = xs.partition_point(|v| *v < x);
            let j = ys.partition_point(|v| *v < y);
            values[j * xs.len() + i] = w;
        }
        if values.iter().any(|v| v.is_nan()) {
            return Err(SplError::invalid("weight", "2D weight table has duplicate grid points"));
        }
        Self::check_positive(&values)?;
        Ok(WeightTable { xs, ys, values })
    }

    fn check_positive(values: &[f64]) -> Result<()> {
        match values.iter().position(|v| !(*v > 0.0) || !v.is_finite()) {
            Some(i) => Err(SplError::invalid(
                "weight",
                format!("table sample {i} has w = {} (must be strictly positive)", values[i]),
            )),
            None => Ok(()),
        }
    }

    /// Reads CSV with header columns `x,w` or `x,y,w`.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| csv_err(path, e))?;
        let headers = rdr.headers().map_err(|e| csv_err(path, e))?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (ix, iy, iw) = (col("x"), col("y"), col("w"));
        let (Some(ix), Some(iw)) = (ix, iw) else {
            return Err(SplError::invalid("weight", format!("{}: expected columns x[,y],w", path.display())));
        };
        let mut rows = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| csv_err(path, e))?;
            let num = |k: usize| -> Result<f64> {
                rec.get(k)
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| SplError::invalid("weight", format!("{}: bad number in row {rec:?}", path.display())))
            };
            rows.push((num(ix)?, iy.map(num).transpose()?.unwrap_or(0.0), num(iw)?));
        }
        match iy {
            Some(_) => Self::new_2d(rows),
            None => Self::new_1d(rows.iter().map(|r| r.0).collect(), rows.iter().map(|r| r.2).collect()),
        }
    }

    pub fn dim(&self) -> usize {
        if self.ys.is_empty() {
            1
        } else {
            2
        }
    }

    fn locate(grid: &[f64], x: f64) -> (usize, f64) {
        let k = grid.partition_point(|v| *v <= x).clamp(1, grid.len() - 1) - 1;
        let t = ((x - grid[k]) / (grid[k + 1] - grid[k])).clamp(0.0, 1.0);
        (k, t)
    }

    pub fn interpolate(&self, x: &[f64]) -> f64 {
        let (i, s) = Self::locate(&self.xs, x[0]);
        if self.ys.is_empty() {
            return self.values[i] * (1.0 - s) + self.values[i + 1] * s;
        }
        let (j, t) = Self::locate(&self.ys, x.get(1).copied().unwrap_or(0.0));
        let nx = self.xs.len();
        let v = |a: usize, b: usize| self.values[b * nx + a];
        (1.0 - t) * ((1.0 - s) * v(i, j) + s * v(i + 1, j)) + t * ((1.0 - s) * v(i, j + 1) + s * v(i + 1, j + 1))
    }
}

fn csv_err(path: &Path, e: csv::Error) -> SplError {
    match e.into_kind() {
        csv::ErrorKind::Io(io) => SplError::io(path, io),
        other => SplError::invalid("weight", format!("{}: {other:?}", path.display())),
    }
}

/// `|x|^α ∈ A_p(R^n)` iff `-n < α < n(p-1)`.
pub fn power_weight_ap_admissible(alpha: f64, n: usize, p: f64) -> Result<bool> {
    if !(p > 1.0) {
        return Err(SplError::invalid("p", format!("must exceed 1, got {p}")));
    }
    if n == 0 {
        return Err(SplError::invalid("n", "dimension must be positive"));
    }
    let n = n as f64;
    Ok(-n < alpha && alpha < n * (p - 1.0))
}

/// Ball family used for sampled suprema.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BallSampling {
    pub centers_per_axis: usize,
    pub radii: usize,
    /// Graded-subdivision depth of the coarser of the two quadratures.
    pub depth: usize,
}

impl Default for BallSampling {
    fn default() -> Self {
        BallSampling {
            centers_per_axis: 32,
            radii: 12,
            depth: 24,
        }
    }
}

impl BallSampling {
    fn centers(&self, domain: &Domain, inside_only: bool) -> Vec<[f64; 2]> {
        let (lo, hi) = domain.bounding_box();
        let m = self.centers_per_axis.max(1);
        let coord = |k: usize, a: f64, b: f64| if m == 1 { 0.5 * (a + b) } else { a + (b - a) * k as f64 / (m - 1) as f64 };
        let mut out = Vec::new();
        if domain.dim() == 1 {
            for i in 0..m {
                out.push([coord(i, lo[0], hi[0]), 0.0]);
            }
        } else {
            for j in 0..m {
                for i in 0..m {
                    out.push([coord(i, lo[0], hi[0]), coord(j, lo[1], hi[1])]);
                }
            }
        }
        if inside_only {
            out.retain(|c| domain.contains(&c[..domain.dim()]));
        }
        out
    }
}

/// Integral of `f` over B(c, r) ∩ clip, returned together with the
/// same-rule measure of the region so constant averages cancel exactly.
fn region_integral(
    f: &dyn Fn(&[f64]) -> f64,
    dim: usize,
    center: [f64; 2],
    r: f64,
    clip: Option<&Domain>,
    singular: Option<[f64; 2]>,
    depth: usize,
) -> (f64, f64) {
    let rule = gauss(8);
    match dim {
        1 => {
            let (mut a, mut b) = (center[0] - r, center[0] + r);
            if let Some(Domain::Interval { a: lo, b: hi }) = clip {
                a = a.max(*lo);
                b = b.min(*hi);
            }
            if b <= a {
                return (0.0, 0.0);
            }
            let s = singular.map(|s| s[0]);
            (
                integrate_interval(|x| f(&[x]), a, b, s, depth, rule),
                integrate_interval(|_| 1.0, a, b, s, depth, rule),
            )
        }
        _ => {
            let inside = |x: [f64; 2]| {
                (x[0] - center[0]).hypot(x[1] - center[1]) <= r * (1.0 + 1e-12)
                    && clip.is_none_or(|d| d.boundary_distance(&x) >= -1e-12 * r)
            };
            let (origin, graded) = match singular {
                Some(s) if inside(s) => (s, true),
                _ => (center, false),
            };
            let extent = |theta: f64| {
                let dir = [theta.cos(), theta.sin()];
                let t = ray_exit_ball(origin, dir, center, r);
                match clip {
                    Some(d) => t.min(d.exit_distance(origin, dir)),
                    None => t,
                }
            };
            let mut fv = |x: [f64; 2]| f(&x);
            let val = integrate_polar(&mut fv, origin, extent, graded, 16, depth, rule);
            let meas = integrate_polar(&mut |_| 1.0, origin, extent, graded, 16, depth, rule);
            (val, meas)
        }
    }
}

fn relative_gap(a: f64, b: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(1e-300)
}

/// Sampled lower bound for the A_p constant:
/// sup over balls of (avg_B w)(avg_B w^{-1/(p-1)})^{p-1}.
pub fn estimate_ap_constant(w: &Weight, domain: &Domain, sampling: &BallSampling) -> Result<f64> {
    let dim = domain.dim();
    if dim > 2 || dim != w.dim() {
        return Err(SplError::UnsupportedDomain(format!(
            "A_p sampling needs a 1D/2D domain matching the weight dimension (domain {dim}, weight {})",
            w.dim()
        )));
    }
    let p = w.p();
    let dual = |x: &[f64]| w.value(x).powf(-1.0 / (p - 1.0));
    let prim = |x: &[f64]| w.value(x);
    let d0 = domain.diameter();
    let singular = w.singular_point();
    let mut sup: f64 = 0.0;
    for c in sampling.centers(domain, false) {
        for j in 1..=sampling.radii {
            let r = d0 * 0.5f64.powi(j as i32);
            let (iw, m1) = region_integral(&prim, dim, c, r, None, singular, sampling.depth);
            let (id, m2) = region_integral(&dual, dim, c, r, None, singular, sampling.depth);
            if singular.is_some() {
                let (id2, m3) = region_integral(&dual, dim, c, r, None, singular, 2 * sampling.depth);
                let (iw2, m4) = region_integral(&prim, dim, c, r, None, singular, 2 * sampling.depth);
                if relative_gap(id / m2, id2 / m3) > STABLE_REL || relative_gap(iw / m1, iw2 / m4) > STABLE_REL {
                    return Err(SplError::Quadrature(format!(
                        "w^(-1/(p-1)) or w is not integrable on the ball centered at {:?} with radius {r:e}: \
                         refinement changes the average from {:e} to {:e}",
                        &c[..dim],
                        id / m2,
                        id2 / m3
                    )));
                }
            }
            let value = (iw / m1) * (id / m2).powf(p - 1.0);
            if !value.is_finite() {
                return Err(SplError::Quadrature(format!("non-finite A_p ratio on the ball at {:?}, r = {r:e}", &c[..dim])));
            }
            sup = sup.max(value);
        }
    }
    Ok(sup)
}

/// Membership of w in the subclass A_s: w^{-s} ∈ L¹(Ω).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AsMembership {
    pub s: f64,
    pub integral_estimate: f64,
    pub member: bool,
    /// Estimates of ∫_Ω w^{-s} under successive quadrature refinements.
    pub refinements: Vec<f64>,
}

/// Admissible s-range [1/(p-1), ∞) ∩ (n/p, ∞).
pub fn check_s_range(s: f64, p: f64, n: usize) -> Result<()> {
    if !(p > 1.0) {
        return Err(SplError::invalid("p", format!("must exceed 1, got {p}")));
    }
    if !(s >= 1.0 / (p - 1.0)) {
        return Err(SplError::invalid("s", format!("s = {s} violates s >= 1/(p-1) = {}", 1.0 / (p - 1.0))));
    }
    if !(s > n as f64 / p) {
        return Err(SplError::invalid("s", format!("s = {s} violates s > n/p = {}", n as f64 / p)));
    }
    if !s.is_finite() {
        return Err(SplError::invalid("s", "must be finite"));
    }
    Ok(())
}

const REFINEMENT_DEPTHS: [usize; 5] = [8, 16, 24, 32, 40];

/// ∫_Ω g(w(x)) dx with graded refinement `depth` toward the weight's singular point.
fn domain_integral(w: &Weight, domain: &Domain, g: &dyn Fn(f64) -> f64, depth: usize) -> Result<f64> {
    let rule: &GaussRule = gauss(8);
    let singular = w.singular_point();
    match *domain {
        Domain::Interval { a, b } => Ok(integrate_interval(|x| g(w.value(&[x])), a, b, singular.map(|s| s[0]), depth, rule)),
        Domain::Ball { dim, radius } if w.is_radial() => {
            let radial = |t: f64| g(w.radial_value(t)) * t.powi(dim as i32 - 1);
            let inner = if singular.is_some() {
                crate::quadrature::graded_toward(radial, 0.0, radius, depth, rule)
            } else {
                rule.composite(radial, 0.0, radius, 4)
            };
            Ok(unit_sphere_area(dim) * inner)
        }
        Domain::Ball { dim: 1, radius } => {
            Ok(integrate_interval(|x| g(w.value(&[x])), -radius, radius, None, depth, rule))
        }
        Domain::Rectangle { .. } | Domain::Ball { dim: 2, .. } => {
            let origin = match singular {
                Some(s) if domain.contains(&s) => Some(s),
                _ => None,
            };
            let (lo, hi) = domain.bounding_box();
            let center = origin.unwrap_or([0.5 * (lo[0] + hi[0]), 0.5 * (lo[1] + hi[1])]);
            let extent = |theta: f64| domain.exit_distance(center, [theta.cos(), theta.sin()]);
            let mut f = |x: [f64; 2]| g(w.value(&x));
            Ok(integrate_polar(&mut f, center, extent, origin.is_some(), 32, depth, rule))
        }
        Domain::Ball { dim, .. } => Err(SplError::UnsupportedDomain(format!(
            "non-radial weight on a {dim}-dimensional ball"
        ))),
    }
}

pub fn as_membership(w: &Weight, s: f64, domain: &Domain) -> Result<AsMembership> {
    check_s_range(s, w.p(), w.dim())?;
    let g = |v: f64| v.powf(-s);
    let refinements = REFINEMENT_DEPTHS
        .iter()
        .map(|&d| domain_integral(w, domain, &g, d))
        .collect::<Result<Vec<f64>>>()?;
    let k = refinements.len();
    let (prev, last) = (refinements[k - 2], refinements[k - 1]);
    let member = last.is_finite() && relative_gap(last, prev) < STABLE_REL;
    Ok(AsMembership {
        s,
        integral_estimate: last,
        member,
        refinements,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingRegime {
    SubcriticalN,
    BorderlineN,
    SupercriticalN,
}

/// Exponents of the embedding X ↪ W₀^{1,p_s}(Ω) ↪ L^{p_s*}(Ω).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingExponents {
    pub p_s: f64,
    /// `None` stands for +∞ (borderline and supercritical regimes).
    pub p_s_star: Option<f64>,
    pub regime: EmbeddingRegime,
}

impl EmbeddingExponents {
    /// Whether r + 1 stays strictly below p_s*.
    pub fn admits_power(&self, r: f64) -> bool {
        self.p_s_star.is_none_or(|ps| r + 1.0 < ps)
    }
}

/// A default A_s exponent: just above the admissible lower bound, and for
/// power weights below n/|α| so that ∫w^{-s} stays finite.
pub fn default_s(w: &Weight) -> f64 {
    let p = w.p();
    let n = w.dim() as f64;
    let lower = f64::max(1.0 / (p - 1.0), n / p);
    let s = lower + 0.5;
    match w.kind() {
        WeightKind::Power { alpha } if *alpha != 0.0 && n / alpha.abs() > lower => s.min(0.5 * (lower + n / alpha.abs())),
        _ => s,
    }
}

/// Default Morrey parameters: exponent n + 1 and half the admissible α bound.
pub fn default_morrey(w: &Weight) -> (f64, f64) {
    let n = w.dim() as f64;
    let q = n + 1.0;
    let alpha = 0.5 * f64::min(1.0, w.p() * n / (q * (w.p() - 1.0)));
    (q, alpha)
}

pub fn embedding_exponents(p: f64, s: f64, n: usize) -> Result<EmbeddingExponents> {
    check_s_range(s, p, n)?;
    let p_s = p * s / (s + 1.0);
    let nf = n as f64;
    let (p_s_star, regime) = if p_s < nf {
        (Some(nf * p_s / (nf - p_s)), EmbeddingRegime::SubcriticalN)
    } else if p_s == nf {
        (None, EmbeddingRegime::BorderlineN)
    } else {
        (None, EmbeddingRegime::SupercriticalN)
    };
    Ok(EmbeddingExponents { p_s, p_s_star, regime })
}

/// Sampled weighted Morrey norm of 1/w.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MorreyReport {
    pub exponent_q: f64,
    pub alpha_m: f64,
    pub t: f64,
    pub norm_estimate: f64,
    pub d0: f64,
    pub passes: bool,
    /// The condition is only imposed for p_s ≤ n.
    pub vacuous: bool,
    pub refinements: Vec<f64>,
}

pub fn morrey_check(
    w: &Weight,
    exponent_q: f64,
    alpha_m: f64,
    domain: &Domain,
    sampling: &BallSampling,
    exponents: &EmbeddingExponents,
) -> Result<MorreyReport> {
    let n = w.dim() as f64;
    let p = w.p();
    if !(exponent_q > n) {
        return Err(SplError::invalid("morrey_q", format!("must exceed n = {n}, got {exponent_q}")));
    }
    let cap = 1f64.min(p * n / (exponent_q * (p - 1.0)));
    if !(alpha_m > 0.0 && alpha_m < cap) {
        return Err(SplError::invalid(
            "morrey_alpha",
            format!("must lie in (0, min{{1, pn/(q(p-1))}}) = (0, {cap}), got {alpha_m}"),
        ));
    }
    let t = p * n - alpha_m * exponent_q * (p - 1.0);
    let d0 = domain.diameter();
    if exponents.regime == EmbeddingRegime::SupercriticalN {
        return Ok(MorreyReport {
            exponent_q,
            alpha_m,
            t,
            norm_estimate: 0.0,
            d0,
            passes: true,
            vacuous: true,
            refinements: Vec::new(),
        });
    }
    let dim = domain.dim();
    if dim > 2 || dim != w.dim() {
        return Err(SplError::UnsupportedDomain(format!("Morrey sampling needs a 1D/2D domain (got {dim})")));
    }
    let integrand = |x: &[f64]| w.value(x).powf(1.0 - exponent_q);
    let measure = |x: &[f64]| w.value(x);
    let singular = w.singular_point();
    let centers = sampling.centers(domain, true);
    let sup_at = |depth: usize| -> f64 {
        let mut sup: f64 = 0.0;
        for c in &centers {
            for j in 1..=sampling.radii {
                let r = d0 * 0.5f64.powi(j as i32);
                let (num, _) = region_integral(&integrand, dim, *c, r, Some(domain), singular, depth);
                let (mu, _) = region_integral(&measure, dim, *c, r, Some(domain), singular, depth);
                if mu > 0.0 {
                    sup = sup.max((r.powf(t) / mu * num).powf(1.0 / exponent_q));
                }
            }
        }
        sup
    };
    let refinements = vec![sup_at(sampling.depth), sup_at(2 * sampling.depth)];
    let (a, b) = (refinements[0], refinements[1]);
    Ok(MorreyReport {
        exponent_q,
        alpha_m,
        t,
        norm_estimate: b,
        d0,
        passes: b.is_finite() && relative_gap(a, b) < STABLE_REL,
        vacuous: false,
        refinements,
    })
}

/// Combined admissibility record for a run.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct WeightReport {
    /// Exact iff-rule for power weights; `None` for other kinds.
    pub power_rule_admissible: Option<bool>,
    pub ap_estimate: Option<f64>,
    pub ap_error: Option<String>,
    pub as_membership: AsMembership,
    pub exponents: EmbeddingExponents,
    pub morrey: MorreyReport,
    /// The analysis assumes n ≥ 3; lower dimensions are flagged, not refused.
    pub dimension_below_three: bool,
}

impl WeightReport {
    pub fn admissible(&self) -> bool {
        self.power_rule_admissible.unwrap_or(true)
            && self.ap_error.is_none()
            && self.as_membership.member
            && self.morrey.passes
    }
}

pub fn assess_weight(
    w: &Weight,
    domain: &Domain,
    s: f64,
    morrey_q: f64,
    morrey_alpha: f64,
    sampling: &BallSampling,
) -> Result<WeightReport> {
    let power_rule_admissible = match w.kind() {
        WeightKind::Power { alpha } => Some(power_weight_ap_admissible(*alpha, w.dim(), w.p())?),
        _ => None,
    };
    let (ap_estimate, ap_error) = match estimate_ap_constant(w, domain, sampling) {
        Ok(v) => (Some(v), None),
        Err(e @ SplError::Quadrature(_)) => (None, Some(e.to_string())),
        Err(SplError::UnsupportedDomain(msg)) => (None, Some(msg)),
        Err(e) => return Err(e),
    };
    let exponents = embedding_exponents(w.p(), s, w.dim())?;
    Ok(WeightReport {
        power_rule_admissible,
        ap_estimate,
        ap_error,
        as_membership: as_membership(w, s, domain)?,
        exponents,
        morrey: morrey_check(w, morrey_q, morrey_alpha, domain, sampling, &exponents)?,
        dimension_below_three: w.dim() < 3,
    })
}
