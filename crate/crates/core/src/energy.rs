//! Problem specifications and the discrete energies
//! E_λ(u) = (1/p)∫w|∇u|^p - λ∫F(u) and
//! I_{λ,ε}(u) = (1/p)∫w|∇u|^p - λ/(1-q)∫[(u⁺+ε)^{1-q} - ε^{1-q}] - 1/(r+1)∫(u⁺)^{r+1}.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SplError};
use crate::mesh::{DiscreteSpace, Field};
use crate::quadrature::gauss;
use crate::solver::{Functional, Jet, Reaction};
use crate::weights::EmbeddingExponents;

/// Case II ε = 0 evaluations refuse interior values below this floor.
pub const POSITIVITY_FLOOR: f64 = 1e-14;

/// Nonlinearity f of Case I.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum Nonlinearity {
    /// c0 + c1·t
    Affine { c0: f64, c1: f64 },
    /// c0 + t^β
    PowerShift { c0: f64, beta: f64 },
    /// Piecewise-linear through (t, f) knots, constant beyond the last knot.
    Table { knots: Vec<(f64, f64)> },
    /// exp(t), kept for validation tests of the growth clause
    Exponential,
    /// f(t) = t
    Identity,
}

impl Nonlinearity {
    /// Reads `t,f` CSV columns.
    pub fn table_from_csv(path: &Path) -> Result<Self> {
        let mut rdr = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .from_path(path)
            .map_err(|e| SplError::invalid("f", format!("{}: {e}", path.display())))?;
        let mut knots = Vec::new();
        for rec in rdr.records() {
            let rec = rec.map_err(|e| SplError::invalid("f", format!("{}: {e}", path.display())))?;
            let num = |k: usize| rec.get(k).and_then(|s| s.parse::<f64>().ok());
            match (num(0), num(1)) {
                (Some(t), Some(f)) => knots.push((t, f)),
                _ => return Err(SplError::invalid("f", format!("{}: bad row {rec:?}", path.display()))),
            }
        }
        Self::table(knots)
    }

    pub fn table(mut knots: Vec<(f64, f64)>) -> Result<Self> {
        knots.sort_by(|a, b| a.0.total_cmp(&b.0));
        if knots.len() < 2 || knots[0].0 != 0.0 {
            return Err(SplError::invalid("f", "table needs at least two knots starting at t = 0"));
        }
        if knots.windows(2).any(|w| w[0].0 == w[1].0) || knots.iter().any(|k| !k.0.is_finite() || !k.1.is_finite()) {
            return Err(SplError::invalid("f", "table knots must be finite with distinct t"));
        }
        Ok(Nonlinearity::Table { knots })
    }

    /// f(t) for t ≥ 0.
    pub fn eval(&self, t: f64) -> f64 {
        match self {
            Nonlinearity::Affine { c0, c1 } => c0 + c1 * t,
            Nonlinearity::PowerShift { c0, beta } => c0 + t.max(0.0).powf(*beta),
            Nonlinearity::Table { knots } => {
                let k = knots.partition_point(|k| k.0 <= t);
                if k == 0 {
                    knots[0].1
                } else if k == knots.len() {
                    knots[k - 1].1
                } else {
                    let (a, b) = (knots[k - 1], knots[k]);
                    a.1 + (b.1 - a.1) * (t - a.0) / (b.0 - a.0)
                }
            }
            Nonlinearity::Exponential => t.exp(),
            Nonlinearity::Identity => t,
        }
    }

    /// f'(t) for t > 0 (one-sided at table knots).
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            Nonlinearity::Affine { c1, .. } => *c1,
            Nonlinearity::PowerShift { beta, .. } => beta * t.powf(beta - 1.0),
            Nonlinearity::Table { knots } => {
                let k = knots.partition_point(|k| k.0 <= t);
                if k == 0 || k == knots.len() {
                    0.0
                } else {
                    (knots[k].1 - knots[k - 1].1) / (knots[k].0 - knots[k - 1].0)
                }
            }
            Nonlinearity::Exponential => t.exp(),
            Nonlinearity::Identity => 1.0,
        }
    }

    fn breakpoints(&self) -> &[(f64, f64)] {
        match self {
            Nonlinearity::Table { knots } => knots,
            _ => &[],
        }
    }
}

/// Clause of the growth hypothesis on f.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum F1Clause {
    PositiveAtZero,
    Nondecreasing,
    SublinearDecay,
    BlowUpAtZero,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct F1Report {
    pub valid: bool,
    pub violated: Option<F1Clause>,
    pub diagnostics: Vec<String>,
}

/// Largest argument probed by the decay clause.
pub const F1_T_MAX: f64 = 1e8;

fn log_grid(from_exp: i32, to_exp: i32, per_decade: usize) -> Vec<f64> {
    let n = (to_exp - from_exp) as usize * per_decade;
    (0..=n).map(|k| 10f64.powf(from_exp as f64 + k as f64 / per_decade as f64)).collect()
}

/// Numerical check of the growth hypothesis: f(0) > 0, f nondecreasing,
/// f(t)/t^{q+p-1} strictly decreasing over the last two decades below
/// T_max, and f(t)/t^q increasing as t ↓ 0 down to 1e-12.
pub fn validate_f1(f: &Nonlinearity, q: f64, p: f64) -> F1Report {
    let fail = |clause, msg: String| F1Report {
        valid: false,
        violated: Some(clause),
        diagnostics: vec![msg],
    };
    let f0 = f.eval(0.0);
    if !(f0 > 0.0) || !f0.is_finite() {
        return fail(F1Clause::PositiveAtZero, format!("f(0) = {f0} is not positive"));
    }
    let mut grid = vec![0.0];
    grid.extend(log_grid(-12, 8, 10));
    grid.extend(f.breakpoints().iter().map(|k| k.0));
    grid.sort_by(f64::total_cmp);
    let mut prev = f0;
    for &t in &grid[1..] {
        let v = f.eval(t);
        if v.is_finite() && v < prev {
            return fail(F1Clause::Nondecreasing, format!("f decreases at t = {t:e}: {v} < {prev}"));
        }
        prev = v;
    }
    let e = q + p - 1.0;
    let tail = log_grid(6, 8, 10);
    let ratios: Vec<f64> = tail.iter().map(|&t| f.eval(t) / t.powf(e)).collect();
    if let Some(k) = ratios.iter().position(|r| !r.is_finite()) {
        return fail(
            F1Clause::SublinearDecay,
            format!("f(t)/t^(q+p-1) is not finite at t = {:e}", tail[k]),
        );
    }
    if let Some(k) = (1..ratios.len()).find(|&k| !(ratios[k] < ratios[k - 1])) {
        return fail(
            F1Clause::SublinearDecay,
            format!("f(t)/t^(q+p-1) does not decrease at t = {:e} ({:e} after {:e})", tail[k], ratios[k], ratios[k - 1]),
        );
    }
    // toward 0, not merely decreasing: the log-log slope over the last
    // decade must stay below -1e-3
    let k = ratios.len() - 1;
    let slope = (ratios[k] / ratios[k - 10]).log10();
    if !(slope <= -1e-3) {
        return fail(
            F1Clause::SublinearDecay,
            format!("f(t)/t^(q+p-1) levels off near {:e} instead of tending to 0 (log slope {slope:e})", ratios[k]),
        );
    }
    let head = log_grid(-12, -1, 10);
    let small: Vec<f64> = head.iter().map(|&t| f.eval(t) / t.powf(q)).collect();
    if let Some(k) = (1..small.len()).find(|&k| !(small[k - 1] > small[k])) {
        return fail(
            F1Clause::BlowUpAtZero,
            format!("f(t)/t^q does not increase as t decreases to {:e}", head[k - 1]),
        );
    }
    F1Report {
        valid: true,
        violated: None,
        diagnostics: vec![format!(
            "f(T_max)/T_max^(q+p-1) = {:e}, f(1e-12)/1e-12^q = {:e}",
            ratios[ratios.len() - 1],
            small[0]
        )],
    }
}

/// Cells of the fixed composite rule in σ = τ^{1-q}: geometric toward 0.
const PRIMITIVE_CELLS: usize = 24;
const PRIMITIVE_TOL: f64 = 1e-10;

fn primitive_with(f: &Nonlinearity, q: f64, t: f64, order: usize) -> f64 {
    let rule = gauss(order);
    let e = 1.0 / (1.0 - q);
    let g = |sigma: f64| f.eval(sigma.powf(e));
    // knots of tabulated f split the σ-range
    let mut cuts: Vec<f64> = f.breakpoints().iter().map(|k| k.0).filter(|&k| k > 0.0 && k < t).map(|k| k.powf(1.0 - q)).collect();
    cuts.push(t.powf(1.0 - q));
    let mut acc = 0.0;
    let mut lo = 0.0;
    for (k, &hi) in cuts.iter().enumerate() {
        if k == 0 {
            acc += crate::quadrature::graded_toward(g, 0.0, hi, PRIMITIVE_CELLS, rule);
        } else {
            acc += rule.composite(g, lo, hi, 4);
        }
        lo = hi;
    }
    acc * e
}

/// F(t) = ∫_0^t f(τ)τ^{-q} dτ for t > 0 and 0 for t ≤ 0, computed after the
/// substitution τ = σ^{1/(1-q)} with two Gauss orders as an error check.
pub fn f_primitive(t: f64, f: &Nonlinearity, q: f64) -> Result<f64> {
    if t <= 0.0 {
        return Ok(0.0);
    }
    let coarse = primitive_with(f, q, t, 6);
    let fine = primitive_with(f, q, t, 10);
    if !fine.is_finite() || (fine - coarse).abs() > PRIMITIVE_TOL * fine.abs().max(1.0) {
        return Err(SplError::Quadrature(format!(
            "F({t:e}) did not converge: order-6 and order-10 rules give {coarse:e} and {fine:e}"
        )));
    }
    Ok(fine)
}

/// Case I data: -Δ_{p,w}u = λ f(u) u^{-q}.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CaseISpec {
    pub p: f64,
    pub q: f64,
    pub lambda: f64,
    pub f: Nonlinearity,
}

fn check_common(p: f64, q: f64, lambda: f64) -> Result<()> {
    if !(p > 1.0) || !p.is_finite() {
        return Err(SplError::invalid("p", format!("p must exceed 1, got {p}")));
    }
    if !(q > 0.0 && q < 1.0) {
        return Err(SplError::invalid("q", format!("q must lie in (0,1), got {q}")));
    }
    if !(lambda > 0.0) || !lambda.is_finite() {
        return Err(SplError::invalid("lambda", format!("lambda must be positive, got {lambda}")));
    }
    Ok(())
}

impl CaseISpec {
    /// Parameter ranges and the growth hypothesis on f.
    pub fn validate(&self) -> Result<F1Report> {
        check_common(self.p, self.q, self.lambda)?;
        if let Nonlinearity::PowerShift { beta, .. } = self.f {
            if !(beta > 0.0 && beta < self.q + self.p - 1.0) {
                return Err(SplError::invalid(
                    "f",
                    format!("power_shift needs 0 < beta < q + p - 1 = {}, got {beta}", self.q + self.p - 1.0),
                ));
            }
        }
        let report = validate_f1(&self.f, self.q, self.p);
        if !report.valid {
            return Err(SplError::invalid("f", format!("growth hypothesis fails: {}", report.diagnostics.join("; "))));
        }
        Ok(report)
    }

    /// λ f(t) t^{-q}
    pub fn rhs(&self, t: f64) -> f64 {
        self.lambda * self.f.eval(t) * t.powf(-self.q)
    }

    pub fn reaction(&self) -> CaseIReaction<'_> {
        CaseIReaction { spec: self }
    }
}

/// G(t) = λF(t). Only evaluated at positive values (inside the order interval).
pub struct CaseIReaction<'a> {
    spec: &'a CaseISpec,
}

impl Reaction for CaseIReaction<'_> {
    fn jet(&self, _node: usize, t: f64) -> Jet {
        let s = self.spec;
        if t <= 0.0 {
            return Jet { value: 0.0, d1: 0.0, d2: 0.0 };
        }
        // the fixed rule is smooth in t; a failed error check only means the
        // two orders disagree beyond 1e-10, so the fine value is still used
        let big_f = f_primitive(t, &s.f, s.q).unwrap_or_else(|_| primitive_with(&s.f, s.q, t, 10));
        let f = s.f.eval(t);
        let tq = t.powf(-s.q);
        Jet {
            value: s.lambda * big_f,
            d1: s.lambda * f * tq,
            d2: s.lambda * (s.f.derivative(t) * tq - s.q * f * tq / t),
        }
    }
}

/// E_λ(u)
pub fn energy_case1(space: &DiscreteSpace, u: &Field, spec: &CaseISpec) -> Result<f64> {
    let m = space.lumped_mass();
    let mut react = 0.0;
    for i in space.mesh().interior_nodes() {
        react += m[i] * f_primitive(u.values()[i], &spec.f, spec.q)?;
    }
    Ok(space.dirichlet_energy(u.values()) - spec.lambda * react)
}

/// Gradient of E_λ at a field with positive interior values.
pub fn gradient_case1(space: &DiscreteSpace, u: &Field, spec: &CaseISpec) -> Result<Vec<f64>> {
    if let Some(i) = space.mesh().interior_nodes().find(|&i| !(u.values()[i] > 0.0)) {
        return Err(SplError::SingularEvaluation { node: i, value: u.values()[i] });
    }
    let r = spec.reaction();
    Ok(Functional::new(space, &r).gradient(u.values()))
}

/// Case II data: -Δ_{p,w}u = λ(u⁺+ε)^{-q} + (u⁺)^r.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CaseIISpec {
    pub p: f64,
    pub q: f64,
    pub r: f64,
    pub lambda: f64,
    pub eps: f64,
}

impl CaseIISpec {
    /// Checks the ranges, with r ∈ (p-1, p_s*-1) from the embedding exponents.
    pub fn validate(&self, exponents: &EmbeddingExponents) -> Result<()> {
        check_common(self.p, self.q, self.lambda)?;
        self.check_r(exponents)?;
        if !(self.eps >= 0.0) || !self.eps.is_finite() {
            return Err(SplError::invalid("eps", format!("must be a finite value >= 0, got {}", self.eps)));
        }
        Ok(())
    }

    pub fn check_r(&self, exponents: &EmbeddingExponents) -> Result<()> {
        let upper = exponents.p_s_star.map(|ps| ps - 1.0);
        let ok = self.r > self.p - 1.0 && upper.is_none_or(|u| self.r < u);
        if !ok {
            let hi = upper.map_or("inf".to_string(), |u| u.to_string());
            return Err(SplError::invalid(
                "r",
                format!("r must lie in the open interval (p-1, p_s*-1) = ({}, {hi}), got {}", self.p - 1.0, self.r),
            ));
        }
        Ok(())
    }

    pub fn with_eps(&self, eps: f64) -> Self {
        CaseIISpec { eps, ..*self }
    }

    pub fn with_lambda(&self, lambda: f64) -> Self {
        CaseIISpec { lambda, ..*self }
    }

    /// λ(t⁺+ε)^{-q} + (t⁺)^r
    pub fn rhs(&self, t: f64) -> f64 {
        let tp = t.max(0.0);
        self.lambda * (tp + self.eps).powf(-self.q) + tp.powf(self.r)
    }

    pub fn reaction(&self) -> SingularReaction {
        SingularReaction {
            lambda: self.lambda,
            q: self.q,
            eps: self.eps,
            r: Some(self.r),
        }
    }
}

/// G(t) = λ/(1-q)[(t⁺+ε)^{1-q} - ε^{1-q}] + (t⁺)^{r+1}/(r+1).
/// For t < 0 both terms are constant; at t = 0 the right derivative is used.
#[derive(Debug, Clone, Copy)]
pub struct SingularReaction {
    pub lambda: f64,
    pub q: f64,
    pub eps: f64,
    pub r: Option<f64>,
}

impl Reaction for SingularReaction {
    fn jet(&self, _node: usize, t: f64) -> Jet {
        if t < 0.0 {
            return Jet { value: 0.0, d1: 0.0, d2: 0.0 };
        }
        let (l, q, e) = (self.lambda, self.q, self.eps);
        let s = t + e;
        let mut jet = Jet {
            value: l / (1.0 - q) * (s.powf(1.0 - q) - e.powf(1.0 - q)),
            d1: l * s.powf(-q),
            d2: -q * l * s.powf(-q - 1.0),
        };
        if let Some(r) = self.r {
            jet.value += t.powf(r + 1.0) / (r + 1.0);
            jet.d1 += t.powf(r);
            jet.d2 += r * t.powf(r - 1.0);
        }
        jet
    }
}

fn check_floor(space: &DiscreteSpace, u: &Field, spec: &CaseIISpec) -> Result<()> {
    if spec.eps == 0.0 {
        if let Some(i) = space.mesh().interior_nodes().find(|&i| !(u.values()[i] >= POSITIVITY_FLOOR)) {
            return Err(SplError::SingularEvaluation { node: i, value: u.values()[i] });
        }
    }
    Ok(())
}

/// I_{λ,ε}(u); with ε = 0 the limit functional I_λ.
pub fn energy_case2(space: &DiscreteSpace, u: &Field, spec: &CaseIISpec) -> f64 {
    let r = spec.reaction();
    Functional::new(space, &r).energy(u.values())
}

/// a(u,φ_i) - λ∫(u⁺+ε)^{-q}φ_i - ∫(u⁺)^rφ_i over interior nodes.
pub fn gradient_case2(space: &DiscreteSpace, u: &Field, spec: &CaseIISpec) -> Result<Vec<f64>> {
    check_floor(space, u, spec)?;
    let r = spec.reaction();
    Ok(Functional::new(space, &r).gradient(u.values()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mesh::{build_mesh, Domain};
    use crate::weights::{embedding_exponents, Weight};

    #[test]
    fn f1_examples() {
        assert!(validate_f1(&Nonlinearity::Affine { c0: 1.0, c1: 1.0 }, 0.5, 2.0).valid);
        assert_eq!(validate_f1(&Nonlinearity::Identity, 0.5, 2.0).violated, Some(F1Clause::PositiveAtZero));
        assert_eq!(validate_f1(&Nonlinearity::Exponential, 0.5, 2.0).violated, Some(F1Clause::SublinearDecay));
        assert_eq!(
            validate_f1(&Nonlinearity::Affine { c0: 1.0, c1: -1.0 }, 0.5, 2.0).violated,
            Some(F1Clause::Nondecreasing)
        );
        // growth exactly t^{q+p-1} does not decay
        assert_eq!(
            validate_f1(&Nonlinearity::PowerShift { c0: 1.0, beta: 1.5 }, 0.5, 2.0).violated,
            Some(F1Clause::SublinearDecay)
        );
    }

    #[test]
    fn primitive_closed_forms() {
        let one = Nonlinearity::Affine { c0: 1.0, c1: 0.0 };
        assert_eq!(f_primitive(-1.0, &one, 0.5).unwrap(), 0.0);
        assert!((f_primitive(1.0, &one, 0.5).unwrap() - 2.0).abs() < 1e-13);
        let aff = Nonlinearity::Affine { c0: 1.0, c1: 1.0 };
        assert!((f_primitive(1.0, &aff, 0.5).unwrap() - 8.0 / 3.0).abs() < 1e-13);
        for &(t, q) in &[(0.3f64, 0.25f64), (7.0, 0.8), (1e-6, 0.6)] {
            let want = t.powf(1.0 - q) / (1.0 - q) + t.powf(2.0 - q) / (2.0 - q);
            let got = f_primitive(t, &aff, q).unwrap();
            assert!((got - want).abs() < 1e-10 * want.max(1.0), "t={t} q={q}: {got} vs {want}");
        }
    }

    #[test]
    fn primitive_of_table_splits_at_knots() {
        let f = Nonlinearity::table(vec![(0.0, 1.0), (1.0, 2.0), (3.0, 2.0)]).unwrap();
        // ∫_0^1 (1+τ)τ^{-1/2} + ∫_1^4 2τ^{-1/2} = 8/3 + 4(2 - 1)
        let got = f_primitive(4.0, &f, 0.5).unwrap();
        assert!((got - (8.0 / 3.0 + 4.0)).abs() < 1e-12, "{got}");
    }

    #[test]
    fn case2_energy_vanishes_at_zero_and_is_dominated() {
        let w = Weight::constant(1.0, 1, 2.0).unwrap();
        let s = DiscreteSpace::new(build_mesh(&Domain::interval(-1.0, 1.0), 16).unwrap(), &w).unwrap();
        let spec = CaseIISpec { p: 2.0, q: 0.5, r: 3.0, lambda: 0.7, eps: 0.1 };
        assert_eq!(energy_case2(&s, &Field::zeros(s.mesh()), &spec), 0.0);
        let v = Field::interpolate(s.mesh(), |x| 1.0 - x[0] * x[0]);
        assert!(energy_case2(&s, &v, &spec) <= energy_case2(&s, &v, &spec.with_lambda(0.0)));
        let g = gradient_case2(&s, &Field::zeros(s.mesh()), &spec).unwrap();
        for i in s.mesh().interior_nodes() {
            assert!((g[i] + 0.7 * 0.1f64.powf(-0.5) * s.lumped_mass()[i]).abs() < 1e-14);
        }
        assert!(gradient_case2(&s, &Field::zeros(s.mesh()), &spec.with_eps(0.0)).is_err());
    }

    #[test]
    fn range_messages() {
        let spec = CaseISpec {
            p: 2.0,
            q: 1.2,
            lambda: 1.0,
            f: Nonlinearity::Affine { c0: 1.0, c1: 1.0 },
        };
        assert!(spec.validate().unwrap_err().to_string().contains("q must lie in (0,1)"));
        let exps = embedding_exponents(2.0, 2.0, 3).unwrap();
        let err = CaseIISpec { p: 2.0, q: 0.5, r: 1.0, lambda: 1.0, eps: 0.0 }.validate(&exps).unwrap_err();
        assert!(err.to_string().contains("open interval"), "{err}");
    }
}
