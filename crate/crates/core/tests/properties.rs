use std::path::Path;
use std::sync::OnceLock;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use spl_core::case2::mp_constants;
use spl_core::config::{Overrides, RunConfig};
use spl_core::eigen::{first_eigenpair, EigenOptions};
use spl_core::mesh::{build_mesh, flux_monotonicity_gap, DiscreteSpace, Domain};
use spl_core::weights::Weight;

fn norm(x: &[f64]) -> f64 {
    x.iter().map(|v| v * v).sum::<f64>().sqrt()
}

/// gap / lower-bound shape; the inequality asks for a positive infimum.
fn ratio(x: &[f64], y: &[f64], p: f64) -> f64 {
    let d: Vec<f64> = x.iter().zip(y).map(|(a, b)| a - b).collect();
    let shape = if p >= 2.0 {
        norm(&d).powf(p)
    } else {
        norm(&d).powi(2) / (norm(x) + norm(y)).powf(2.0 - p)
    };
    flux_monotonicity_gap(x, y, p) / shape
}

/// Brute-force infimum of the ratio over planar pairs in the unit disk.
/// The ratio depends only on |x|, |y| and their angle, so the plane covers
/// every dimension.
fn brute_force_constant(p: f64) -> f64 {
    static CACHE: OnceLock<Vec<(u64, f64)>> = OnceLock::new();
    let table = CACHE.get_or_init(|| {
        [1.5, 2.0, 3.0, 4.0]
            .iter()
            .map(|&p: &f64| {
                let mut rng = ChaCha8Rng::seed_from_u64(7);
                let mut best = f64::INFINITY;
                for _ in 0..200_000 {
                    let x = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                    let y = [rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)];
                    if x != y {
                        best = best.min(ratio(&x, &y, p));
                    }
                }
                (p.to_bits(), best)
            })
            .collect()
    });
    table.iter().find(|(b, _)| *b == p.to_bits()).unwrap().1
}

fn vec_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (1usize..=3).prop_flat_map(|n| (prop::collection::vec(-3.0..3.0f64, n), prop::collection::vec(-3.0..3.0f64, n)))
}

fn space(n: usize, weighted: bool, p: f64) -> DiscreteSpace {
    let w = if weighted {
        Weight::power(0.5, 1, p).unwrap()
    } else {
        Weight::constant(1.0, 1, p).unwrap()
    };
    DiscreteSpace::new(build_mesh(&Domain::interval(-1.0, 1.0), n).unwrap(), &w).unwrap()
}

fn zero_boundary(v: Vec<f64>) -> Vec<f64> {
    let n = v.len();
    v.into_iter().enumerate().map(|(i, x)| if i == 0 || i == n - 1 { 0.0 } else { x }).collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn flux_gap_has_quantitative_lower_bound((x, y) in vec_pair(), pi in 0usize..4) {
        let p = [1.5, 2.0, 3.0, 4.0][pi];
        prop_assume!(norm(&x.iter().zip(&y).map(|(a, b)| a - b).collect::<Vec<_>>()) > 1e-6);
        let c = brute_force_constant(p);
        prop_assert!(c > 0.0);
        prop_assert!(ratio(&x, &y, p) >= 0.5 * c, "ratio {} below half of {}", ratio(&x, &y, p), c);
    }

    #[test]
    fn discrete_poincare(values in prop::collection::vec(-1.0..1.0f64, 33), weighted: bool, pi in 0usize..3) {
        let p = [1.5, 2.0, 3.0][pi];
        let s = space(32, weighted, p);
        let lambda1 = first_eigenpair(&s, &EigenOptions::default()).unwrap().lambda1;
        let phi = zero_boundary(values);
        prop_assume!(phi.iter().any(|v| v.abs() > 1e-3));
        let lhs = s.power_integral(&phi, p);
        let rhs = p * s.dirichlet_energy(&phi) / lambda1;
        prop_assert!(lhs <= rhs * (1.0 + 1e-8), "{lhs} > {rhs}");
    }

    #[test]
    fn dirichlet_energy_is_convex_on_segments(
        u in prop::collection::vec(-1.0..1.0f64, 17),
        v in prop::collection::vec(-1.0..1.0f64, 17),
        pi in 0usize..3,
    ) {
        let p = [2.0, 3.0, 4.0][pi];
        let s = space(16, true, p);
        let (u, v) = (zero_boundary(u), zero_boundary(v));
        let e: Vec<f64> = (0..=10)
            .map(|k| {
                let t = k as f64 / 10.0;
                let w: Vec<f64> = u.iter().zip(&v).map(|(a, b)| a + t * (b - a)).collect();
                s.dirichlet_energy(&w)
            })
            .collect();
        for k in 1..10 {
            let mid = 0.5 * (e[k - 1] + e[k + 1]);
            prop_assert!(e[k] <= mid + 1e-12 * (1.0 + mid.abs()));
        }
    }

    #[test]
    fn q_range_is_enforced_by_config(q in -1.0..2.0f64) {
        let text = format!("case = \"II\"\nq = {q:?}");
        let r = RunConfig::from_str_with(&text, Path::new("."), &Overrides::default());
        if q > 0.0 && q < 1.0 {
            prop_assert!(r.is_ok());
        } else {
            let msg = r.unwrap_err().to_string();
            prop_assert!(msg.contains("q must lie in (0,1)"), "{}", msg);
        }
    }

    #[test]
    fn mountain_pass_level_is_positive_below_critical_k(k in 0.01..0.99f64, cl in 0.1..10.0f64) {
        let (p, r) = (2.0, 3.0);
        let e = r + 1.0 - p;
        let k_crit = cl.powf(-1.0 / e).min(1.0);
        match mp_constants(p, r, k, cl) {
            Ok((radius, rho)) => {
                prop_assert!(k < k_crit * (1.0 + 1e-12));
                prop_assert!(radius > 0.0 && rho > 0.0);
                // half the lower bound of I_0 on the sphere of that radius
                let sphere = radius.powf(p) / p - cl * radius.powf(r + 1.0) / (r + 1.0);
                prop_assert!(rho <= 0.5 * sphere * (1.0 + 1e-12));
            }
            Err(_) => prop_assert!(k >= k_crit * (1.0 - 1e-12)),
        }
    }
}
