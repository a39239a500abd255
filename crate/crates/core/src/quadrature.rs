//! Gauss rules and the graded composite schemes used near weight singularities.

use std::f64::consts::PI;
use std::sync::OnceLock;

/// Gauss–Legendre rule on [-1, 1].
#[derive(Debug, Clone)]
pub struct GaussRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
}

impl GaussRule {
    pub fn new(n: usize) -> Self {
        assert!(n >= 1, "Gauss rule needs at least one point");
        let mut nodes = vec![0.0; n];
        let mut weights = vec![0.0; n];
        let m = n.div_ceil(2);
        for i in 0..m {
            // Tricomi initial guess, then Newton on P_n.
            let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
            let mut dp = 0.0;
            for _ in 0..100 {
                let (p, d) = legendre(n, x);
                dp = d;
                let dx = p / d;
                x -= dx;
                if dx.abs() < 1e-16 {
                    break;
                }
            }
            let (_, d) = legendre(n, x);
            if d != 0.0 {
                dp = d;
            }
            let w = 2.0 / ((1.0 - x * x) * dp * dp);
            nodes[i] = -x;
            nodes[n - 1 - i] = x;
            weights[i] = w;
            weights[n - 1 - i] = w;
        }
        if n % 2 == 1 {
            nodes[n / 2] = 0.0;
        }
        GaussRule { nodes, weights }
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    /// Oriented integral of `f` from `a` to `b`.
    pub fn integrate(&self, mut f: impl FnMut(f64) -> f64, a: f64, b: f64) -> f64 {
        let half = 0.5 * (b - a);
        let mid = 0.5 * (a + b);
        let mut acc = 0.0;
        for (x, w) in self.nodes.iter().zip(&self.weights) {
            acc += w * f(mid + half * x);
        }
        acc * half
    }

    /// Integral with `panels` equal sub-intervals.
    pub fn composite(&self, mut f: impl FnMut(f64) -> f64, a: f64, b: f64, panels: usize) -> f64 {
        let panels = panels.max(1);
        let h = (b - a) / panels as f64;
        (0..panels)
            .map(|k| {
                let lo = a + h * k as f64;
                self.integrate(&mut f, lo, lo + h)
            })
            .sum()
    }
}

fn legendre(n: usize, x: f64) -> (f64, f64) {
    let mut p0 = 1.0;
    let mut p1 = x;
    for k in 2..=n {
        let k = k as f64;
        let p2 = ((2.0 * k - 1.0) * x * p1 - (k - 1.0) * p0) / k;
        p0 = p1;
        p1 = p2;
    }
    if n == 0 {
        return (1.0, 0.0);
    }
    let d = n as f64 * (x * p1 - p0) / (x * x - 1.0);
    (p1, d)
}

/// Cached Gauss–Legendre rule with `n` points, 1 ≤ n ≤ 32.
pub fn gauss(n: usize) -> &'static GaussRule {
    static RULES: OnceLock<Vec<GaussRule>> = OnceLock::new();
    let rules = RULES.get_or_init(|| (1..=32).map(GaussRule::new).collect());
    &rules[n.clamp(1, 32) - 1]
}

/// Integral over the segment between `s` and `e` (either order) with geometric
/// cells accumulating at `s`: cell k spans `s + L·[2^{-k-1}, 2^{-k}]`.
pub fn graded_toward(mut f: impl FnMut(f64) -> f64, s: f64, e: f64, depth: usize, rule: &GaussRule) -> f64 {
    let len = e - s;
    if len == 0.0 {
        return 0.0;
    }
    let mut acc = 0.0;
    let mut outer = 1.0;
    for _ in 0..depth {
        let inner = 0.5 * outer;
        acc += rule.integrate(&mut f, s + len * inner, s + len * outer);
        outer = inner;
    }
    acc += rule.integrate(&mut f, s, s + len * outer);
    acc * len.signum()
}

/// ∫_a^b f (a < b) with graded refinement toward `singular` when it lies in or
/// near the interval. Quadrature points never coincide with the singular point.
pub fn integrate_interval(
    mut f: impl FnMut(f64) -> f64,
    a: f64,
    b: f64,
    singular: Option<f64>,
    depth: usize,
    rule: &GaussRule,
) -> f64 {
    let len = b - a;
    if len <= 0.0 {
        return 0.0;
    }
    let tiny = 1e-14 * len.max(a.abs()).max(b.abs());
    match singular {
        Some(s) if s > a + tiny && s < b - tiny => {
            graded_toward(&mut f, s, a, depth, rule) + graded_toward(&mut f, s, b, depth, rule)
        }
        Some(s) if (s - a).abs() <= tiny || (s < a && a - s < len) => graded_toward(f, a, b, depth, rule),
        Some(s) if (s - b).abs() <= tiny || (s > b && s - b < len) => graded_toward(f, b, a, depth, rule),
        _ => rule.integrate(f, a, b),
    }
}

/// Four-point collapsed Gauss rule on the reference triangle (0,0),(1,0),(0,1):
/// a 2×2 tensor rule mapped by (ξ, η) ↦ (ξ, η(1-ξ)). All weights positive;
/// weights sum to 1/2.
pub fn triangle_rule() -> [([f64; 2], f64); 4] {
    let g = 1.0 / 3f64.sqrt();
    let pts = [0.5 * (1.0 - g), 0.5 * (1.0 + g)];
    let mut out = [([0.0; 2], 0.0); 4];
    let mut k = 0;
    for &xi in &pts {
        for &eta in &pts {
            out[k] = ([xi, eta * (1.0 - xi)], 0.25 * (1.0 - xi));
            k += 1;
        }
    }
    out
}

fn tri_area(t: &[[f64; 2]; 3]) -> f64 {
    0.5 * ((t[1][0] - t[0][0]) * (t[2][1] - t[0][1]) - (t[2][0] - t[0][0]) * (t[1][1] - t[0][1])).abs()
}

fn tri_contains(t: &[[f64; 2]; 3], p: [f64; 2]) -> bool {
    let cross = |a: [f64; 2], b: [f64; 2], c: [f64; 2]| (b[0] - a[0]) * (c[1] - a[1]) - (c[0] - a[0]) * (b[1] - a[1]);
    let scale = tri_area(t).max(1e-300);
    let tol = 1e-12 * scale;
    let d0 = cross(t[0], t[1], p);
    let d1 = cross(t[1], t[2], p);
    let d2 = cross(t[2], t[0], p);
    let has_neg = d0 < -tol || d1 < -tol || d2 < -tol;
    let has_pos = d0 > tol || d1 > tol || d2 > tol;
    !(has_neg && has_pos)
}

fn tri_plain(f: &mut impl FnMut([f64; 2]) -> f64, t: &[[f64; 2]; 3]) -> f64 {
    let area2 = 2.0 * tri_area(t);
    let e1 = [t[1][0] - t[0][0], t[1][1] - t[0][1]];
    let e2 = [t[2][0] - t[0][0], t[2][1] - t[0][1]];
    triangle_rule()
        .iter()
        .map(|(xi, w)| {
            let x = [t[0][0] + xi[0] * e1[0] + xi[1] * e2[0], t[0][1] + xi[0] * e1[1] + xi[1] * e2[1]];
            w * f(x)
        })
        .sum::<f64>()
        * area2
}

/// Integral over a triangle. When `singular` lies in the closed triangle,
/// the triangle is fanned into sub-triangles with apex at the singular point
/// and each is integrated in collapsed coordinates x = s + ρ(a + η(b - a)),
/// with `depth` graded cells in ρ and 8 radial and 16 transverse Gauss points.
pub fn integrate_triangle(
    f: &mut impl FnMut([f64; 2]) -> f64,
    t: [[f64; 2]; 3],
    singular: Option<[f64; 2]>,
    depth: usize,
) -> f64 {
    match singular {
        Some(s) if tri_contains(&t, s) => {
            let area = tri_area(&t);
            let (rule, across) = (gauss(8), gauss(16));
            let mut acc = 0.0;
            for k in 0..3 {
                let (a, b) = (t[k], t[(k + 1) % 3]);
                let sub = [s, a, b];
                let sub_area = tri_area(&sub);
                if sub_area <= 1e-14 * area {
                    continue;
                }
                let ea = [a[0] - s[0], a[1] - s[1]];
                let eb = [b[0] - a[0], b[1] - a[1]];
                let mut radial = |rho: f64| {
                    across.integrate(
                        |eta| {
                            f([s[0] + rho * (ea[0] + eta * eb[0]), s[1] + rho * (ea[1] + eta * eb[1])])
                        },
                        0.0,
                        1.0,
                    ) * rho
                };
                acc += 2.0 * sub_area * graded_toward(&mut radial, 0.0, 1.0, depth, rule);
            }
            acc
        }
        _ => tri_plain(f, &t),
    }
}

/// Polar integral ∫_0^{2π} ∫_0^{ρ(θ)} f(c + t·(cos θ, sin θ)) t dt dθ over a
/// region star-shaped about `center` with radial extent `extent(θ)`.
/// With `graded` the radial cells accumulate at the center.
pub fn integrate_polar(
    f: &mut impl FnMut([f64; 2]) -> f64,
    center: [f64; 2],
    extent: impl Fn(f64) -> f64,
    graded: bool,
    angular_panels: usize,
    depth: usize,
    rule: &GaussRule,
) -> f64 {
    let radial = |theta: f64, f: &mut dyn FnMut([f64; 2]) -> f64| {
        let rho = extent(theta);
        if rho <= 0.0 {
            return 0.0;
        }
        let (s, c) = theta.sin_cos();
        let mut g = |t: f64| t * f([center[0] + t * c, center[1] + t * s]);
        if graded {
            graded_toward(&mut g, 0.0, rho, depth, rule)
        } else {
            rule.composite(&mut g, 0.0, rho, 4)
        }
    };
    rule.composite(|theta| radial(theta, f), 0.0, 2.0 * PI, angular_panels)
}

/// Surface measure of the unit sphere in R^n.
pub fn unit_sphere_area(n: usize) -> f64 {
    2.0 * PI.powf(n as f64 / 2.0) / gamma_half(n)
}

/// Γ(n/2) for positive integer n.
fn gamma_half(n: usize) -> f64 {
    let (mut g, mut x) = if n % 2 == 0 { (1.0, 1.0) } else { (PI.sqrt(), 0.5) };
    while x < n as f64 / 2.0 - 1e-12 {
        g *= x;
        x += 1.0;
    }
    g
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gauss_rules_integrate_polynomials_exactly() {
        for n in 1..=12 {
            let rule = gauss(n);
            let deg = 2 * n - 1;
            let got = rule.integrate(|x| x.powi(deg as i32) + x.powi((deg - 1) as i32), 0.0, 1.0);
            let want = 1.0 / (deg as f64 + 1.0) + 1.0 / deg as f64;
            assert!((got - want).abs() < 1e-13, "n={n}: {got} vs {want}");
            assert!((rule.weights().iter().sum::<f64>() - 2.0).abs() < 1e-14);
        }
    }

    #[test]
    fn graded_rule_handles_integrable_endpoint_singularity() {
        // ∫_0^1 x^{-1/2} = 2
        let got = graded_toward(|x| x.powf(-0.5), 0.0, 1.0, 60, gauss(8));
        assert!((got - 2.0).abs() < 1e-9, "{got}");
        // orientation-free: grading toward the right endpoint
        let got = graded_toward(|x| (1.0 - x).powf(-0.5), 1.0, 0.0, 40, gauss(8));
        assert!((got - 2.0).abs() < 1e-6, "{got}");
    }

    #[test]
    fn interval_split_at_interior_singularity() {
        // ∫_{-1}^{1} |x|^{1/2} = 4/3
        let got = integrate_interval(|x: f64| x.abs().sqrt(), -1.0, 1.0, Some(0.0), 40, gauss(8));
        assert!((got - 4.0 / 3.0).abs() < 1e-13);
    }

    #[test]
    fn triangle_rule_is_exact_for_quadratics() {
        // ∫_T (x² + xy) over the reference triangle = 1/12 + 1/24
        let t = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let got = integrate_triangle(&mut |p: [f64; 2]| p[0] * p[0] + p[0] * p[1], t, None, 0);
        assert!((got - 0.125).abs() < 1e-15, "{got}");
    }

    #[test]
    fn graded_triangle_integrates_vertex_singularity() {
        // ∫ over the quarter unit square triangle (0,0),(1,0),(0,1) of |x|^{-1}
        // = ∫_0^{π/2} 1/(cos θ + sin θ) dθ = √2·ln(1+√2)
        let t = [[0.0, 0.0], [1.0, 0.0], [0.0, 1.0]];
        let got = integrate_triangle(&mut |p: [f64; 2]| (p[0] * p[0] + p[1] * p[1]).sqrt().recip(), t, Some([0.0, 0.0]), 40);
        let want = 2f64.sqrt() * (1.0 + 2f64.sqrt()).ln();
        assert!((got - want).abs() < 1e-9, "{got} vs {want}");
    }

    #[test]
    fn polar_area_of_unit_disk() {
        let got = integrate_polar(&mut |_| 1.0, [0.0, 0.0], |_| 1.0, false, 8, 0, gauss(8));
        assert!((got - PI).abs() < 1e-13);
    }

    #[test]
    fn sphere_areas() {
        assert!((unit_sphere_area(1) - 2.0).abs() < 1e-14);
        assert!((unit_sphere_area(2) - 2.0 * PI).abs() < 1e-14);
        assert!((unit_sphere_area(3) - 4.0 * PI).abs() < 1e-13);
    }
}
