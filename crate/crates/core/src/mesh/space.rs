use crate::error::{Result, SplError};
use crate::linalg::SymBand;
use crate::quadrature::{gauss, integrate_interval, integrate_triangle};
use crate::weights::{Weight, WeightKind};

use super::{Field, Mesh};

/// Below this gradient magnitude the kernel |g|^{p-2} is replaced by
/// (|g|² + δ²)^{(p-2)/2}.
pub const GRADIENT_FLOOR: f64 = 1e-12;

const SINGULAR_DEPTH_1D: usize = 48;
const SINGULAR_DEPTH_2D: usize = 24;

/// |x|^{p-2} x
pub fn flux(x: &[f64], p: f64) -> Vec<f64> {
    let n = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n == 0.0 {
        return vec![0.0; x.len()];
    }
    let k = n.powf(p - 2.0);
    x.iter().map(|v| k * v).collect()
}

/// ⟨|x|^{p-2}x - |y|^{p-2}y, x - y⟩
pub fn flux_monotonicity_gap(x: &[f64], y: &[f64], p: f64) -> f64 {
    let fx = flux(x, p);
    let fy = flux(y, p);
    (0..x.len()).map(|i| (fx[i] - fy[i]) * (x[i] - y[i])).sum()
}

#[inline]
fn kernel(g2: f64, p: f64) -> f64 {
    if g2 >= GRADIENT_FLOOR * GRADIENT_FLOOR {
        g2.powf(0.5 * (p - 2.0))
    } else {
        (g2 + GRADIENT_FLOOR * GRADIENT_FLOOR).powf(0.5 * (p - 2.0))
    }
}

/// P1 space on a mesh with the weight folded into per-element integrals
/// W_e = ∫_e w. Nonlinear reaction terms use the lumped (Lebesgue) nodal
/// measure m_i.
#[derive(Debug, Clone)]
pub struct DiscreteSpace {
    mesh: Mesh,
    weight: Weight,
    p: f64,
    element_weight: Vec<f64>,
    basis_grads: Vec<[f64; 2]>,
    lumped: Vec<f64>,
    basis_norms: Vec<f64>,
    bw: usize,
}

impl DiscreteSpace {
    pub fn new(mesh: Mesh, weight: &Weight) -> Result<Self> {
        let p = weight.p();
        if weight.dim() != mesh.dim() {
            return Err(SplError::invalid(
                "weight",
                format!("weight dimension {} does not match the {}D mesh", weight.dim(), mesh.dim()),
            ));
        }
        let k = mesh.nodes_per_element();
        let ne = mesh.element_count();
        let mut element_weight = Vec::with_capacity(ne);
        let mut basis_grads = Vec::with_capacity(ne * k);
        let mut lumped = vec![0.0; mesh.node_count()];
        let singular = weight.singular_point();
        // |x|^α is not polynomial; other weights are at most piecewise linear
        let rule = if matches!(weight.kind(), WeightKind::Power { .. }) { gauss(8) } else { gauss(3) };
        for e in 0..ne {
            let el = mesh.element(e);
            let vol = mesh.element_measure(e);
            let we = if mesh.dim() == 1 {
                let (a, b) = (mesh.node(el[0])[0], mesh.node(el[1])[0]);
                basis_grads.push([-1.0 / (b - a), 0.0]);
                basis_grads.push([1.0 / (b - a), 0.0]);
                integrate_interval(|x| weight.value(&[x]), a, b, singular.map(|s| s[0]), SINGULAR_DEPTH_1D, rule)
            } else {
                let t = [mesh.node(el[0]), mesh.node(el[1]), mesh.node(el[2])];
                let det = 2.0 * vol;
                for i in 0..3 {
                    let (b, c) = (t[(i + 1) % 3], t[(i + 2) % 3]);
                    basis_grads.push([(b[1] - c[1]) / det, (c[0] - b[0]) / det]);
                }
                integrate_triangle(&mut |x| weight.value(&x), t, singular, SINGULAR_DEPTH_2D)
            };
            if !(we > 0.0) || !we.is_finite() {
                return Err(SplError::Quadrature(format!("weight integral on element {e} is {we}")));
            }
            element_weight.push(we);
            for &i in el {
                lumped[i] += vol / k as f64;
            }
        }
        let mut norms = vec![0.0; mesh.node_count()];
        for e in 0..ne {
            for (a, &i) in mesh.element(e).iter().enumerate() {
                let g = basis_grads[e * k + a];
                norms[i] += element_weight[e] * (g[0] * g[0] + g[1] * g[1]).powf(0.5 * p);
            }
        }
        let basis_norms = norms.into_iter().map(|v: f64| v.powf(1.0 / p)).collect();
        let bw = mesh.bandwidth();
        Ok(DiscreteSpace {
            mesh,
            weight: weight.clone(),
            p,
            element_weight,
            basis_grads,
            lumped,
            basis_norms,
            bw,
        })
    }

    pub fn mesh(&self) -> &Mesh {
        &self.mesh
    }

    pub fn weight(&self) -> &Weight {
        &self.weight
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn len(&self) -> usize {
        self.mesh.node_count()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn bandwidth(&self) -> usize {
        self.bw
    }

    /// ∫_e w for each element.
    pub fn element_weights(&self) -> &[f64] {
        &self.element_weight
    }

    /// Lumped nodal measure m_i = ∫ φ_i (row sums of the P1 mass matrix).
    pub fn lumped_mass(&self) -> &[f64] {
        &self.lumped
    }

    /// ‖φ_i‖ in the weighted seminorm.
    pub fn basis_norms(&self) -> &[f64] {
        &self.basis_norms
    }

    pub fn is_boundary(&self, i: usize) -> bool {
        self.mesh.is_boundary(i)
    }

    #[inline]
    fn element_gradient(&self, e: usize, u: &[f64]) -> [f64; 2] {
        let k = self.mesh.nodes_per_element();
        let mut g = [0.0; 2];
        for (a, &i) in self.mesh.element(e).iter().enumerate() {
            let b = self.basis_grads[e * k + a];
            g[0] += u[i] * b[0];
            g[1] += u[i] * b[1];
        }
        g
    }

    /// (1/p)∫ w|∇u|^p
    pub fn dirichlet_energy(&self, u: &[f64]) -> f64 {
        let p = self.p;
        (0..self.mesh.element_count())
            .map(|e| {
                let g = self.element_gradient(e, u);
                self.element_weight[e] * (g[0] * g[0] + g[1] * g[1]).powf(0.5 * p)
            })
            .sum::<f64>()
            / p
    }

    /// (∫ w|∇u|^p)^{1/p}
    pub fn seminorm(&self, u: &[f64]) -> f64 {
        (self.p * self.dirichlet_energy(u)).powf(1.0 / self.p)
    }

    pub fn weighted_seminorm(&self, u: &Field) -> f64 {
        self.seminorm(u.values())
    }

    /// Covector ∫ w|∇u|^{p-2}∇u·∇φ_i; boundary rows are zero.
    pub fn dirichlet_gradient(&self, u: &[f64]) -> Vec<f64> {
        let k = self.mesh.nodes_per_element();
        let mut out = vec![0.0; self.len()];
        for e in 0..self.mesh.element_count() {
            let g = self.element_gradient(e, u);
            let c = self.element_weight[e] * kernel(g[0] * g[0] + g[1] * g[1], self.p);
            for (a, &i) in self.mesh.element(e).iter().enumerate() {
                let b = self.basis_grads[e * k + a];
                out[i] += c * (g[0] * b[0] + g[1] * b[1]);
            }
        }
        self.zero_boundary(&mut out);
        out
    }

    /// Energy and gradient together.
    pub fn dirichlet_energy_and_gradient(&self, u: &Field) -> (f64, Vec<f64>) {
        (self.dirichlet_energy(u.values()), self.dirichlet_gradient(u.values()))
    }

    /// Hessian of the Dirichlet energy, W_e(κ I + (p-2)|g|^{p-4} g gᵀ) per
    /// element. Boundary rows are not eliminated.
    pub fn dirichlet_hessian(&self, u: &[f64]) -> SymBand {
        let p = self.p;
        let k = self.mesh.nodes_per_element();
        let mut h = SymBand::zeros(self.len(), self.bw);
        for e in 0..self.mesh.element_count() {
            let g = self.element_gradient(e, u);
            let g2 = g[0] * g[0] + g[1] * g[1];
            let kap = kernel(g2, p);
            let extra = if g2 >= GRADIENT_FLOOR * GRADIENT_FLOOR { (p - 2.0) * kap / g2 } else { 0.0 };
            let we = self.element_weight[e];
            let el = self.mesh.element(e);
            for a in 0..k {
                let ba = self.basis_grads[e * k + a];
                let ga = g[0] * ba[0] + g[1] * ba[1];
                for b in 0..=a {
                    let bb = self.basis_grads[e * k + b];
                    let gb = g[0] * bb[0] + g[1] * bb[1];
                    let v = we * (kap * (ba[0] * bb[0] + ba[1] * bb[1]) + extra * ga * gb);
                    if a == b {
                        h.add(el[a], el[a], v);
                    } else {
                        h.add(el[a], el[b], v);
                    }
                }
            }
        }
        h
    }

    /// Weighted linear stiffness ∫ w ∇φ_i·∇φ_j.
    pub fn linear_stiffness(&self) -> SymBand {
        let k = self.mesh.nodes_per_element();
        let mut h = SymBand::zeros(self.len(), self.bw);
        for e in 0..self.mesh.element_count() {
            let el = self.mesh.element(e);
            for a in 0..k {
                let ba = self.basis_grads[e * k + a];
                for b in 0..=a {
                    let bb = self.basis_grads[e * k + b];
                    h.add(el[a], el[b], self.element_weight[e] * (ba[0] * bb[0] + ba[1] * bb[1]));
                }
            }
        }
        h
    }

    pub fn zero_boundary(&self, v: &mut [f64]) {
        for (i, x) in v.iter_mut().enumerate() {
            if self.mesh.is_boundary(i) {
                *x = 0.0;
            }
        }
    }

    /// Σ m_i G(u_i)
    pub fn lumped_integral(&self, u: &[f64], g: impl Fn(f64) -> f64) -> f64 {
        u.iter().zip(&self.lumped).map(|(v, m)| m * g(*v)).sum()
    }

    /// Calls `f(e, x, weight)` at element quadrature points for the
    /// unweighted measure, exact for quadratics on each element.
    fn for_each_point(&self, e: usize, u: &[f64], mut f: impl FnMut(usize, f64, &[f64], f64)) {
        let el = self.mesh.element(e);
        let vol = self.mesh.element_measure(e);
        if self.mesh.dim() == 1 {
            let rule = gauss(4);
            for (x, w) in rule.nodes().iter().zip(rule.weights()) {
                let s = 0.5 * (1.0 + x);
                let bary = [1.0 - s, s];
                let v = bary[0] * u[el[0]] + bary[1] * u[el[1]];
                f(e, v, &bary, 0.5 * w * vol);
            }
        } else {
            for (xi, w) in crate::quadrature::triangle_rule() {
                let bary = [1.0 - xi[0] - xi[1], xi[0], xi[1]];
                let v = bary[0] * u[el[0]] + bary[1] * u[el[1]] + bary[2] * u[el[2]];
                f(e, v, &bary, 2.0 * w * vol);
            }
        }
    }

    /// ∫|u|^p dx with element quadrature (no lumping).
    pub fn power_integral(&self, u: &[f64], p: f64) -> f64 {
        let mut acc = 0.0;
        for e in 0..self.mesh.element_count() {
            self.for_each_point(e, u, |_, v, _, w| acc += w * v.abs().powf(p));
        }
        acc
    }

    /// Covector ∫|u|^{p-2}u φ_i dx with element quadrature; boundary rows zero.
    pub fn power_load(&self, u: &[f64], p: f64) -> Vec<f64> {
        let mut out = vec![0.0; self.len()];
        for e in 0..self.mesh.element_count() {
            let el = self.mesh.element(e);
            self.for_each_point(e, u, |_, v, bary, w| {
                let g = if v == 0.0 { 0.0 } else { v.abs().powf(p - 2.0) * v };
                for (k, &i) in el.iter().enumerate() {
                    out[i] += w * g * bary[k];
                }
            });
        }
        self.zero_boundary(&mut out);
        out
    }

    /// max over interior i of |c_i| / (1 + ‖φ_i‖).
    pub fn residual_measure(&self, covector: &[f64]) -> f64 {
        self.mesh
            .interior_nodes()
            .map(|i| covector[i].abs() / (1.0 + self.basis_norms[i]))
            .fold(0.0, f64::max)
    }

    /// Signed, normalized nodal defects (a(u,φ_i) - ∫ g(u)φ_i)/(1 + ‖φ_i‖).
    /// With `singular`, interior values u_i ≤ 0 are refused.
    pub fn defects(&self, u: &[f64], rhs: impl Fn(f64) -> f64, singular: bool) -> Result<Vec<f64>> {
        let a = self.dirichlet_gradient(u);
        let mut out = vec![0.0; self.len()];
        for i in self.mesh.interior_nodes() {
            if singular && !(u[i] > 0.0) {
                return Err(SplError::SingularEvaluation { node: i, value: u[i] });
            }
            let g = rhs(u[i]);
            out[i] = (a[i] - self.lumped[i] * g) / (1.0 + self.basis_norms[i]);
        }
        Ok(out)
    }

    /// Discrete weak-solution defect: max_i |a(u,φ_i) - ∫g(u)φ_i| / (1 + ‖φ_i‖).
    pub fn weak_residual(&self, u: &Field, rhs: impl Fn(f64) -> f64, singular: bool) -> Result<f64> {
        let d = self.defects(u.values(), rhs, singular)?;
        Ok(d.iter().fold(0.0, |m, v| m.max(v.abs())))
    }
}
