//! Independent oracles: dense generalized eigenproblem and the closed-form
//! maximum of the one-dimensional pure singular solution.

use nalgebra::{DMatrix, SymmetricEigen};
use spl_core::case1::solve_pure_singular;
use spl_core::eigen::{first_eigenpair, EigenOptions};
use spl_core::mesh::{build_mesh, DiscreteSpace, Domain};
use spl_core::weights::Weight;

fn space(a: f64, b: f64, n: usize, w: &Weight) -> DiscreteSpace {
    DiscreteSpace::new(build_mesh(&Domain::interval(a, b), n).unwrap(), w).unwrap()
}

/// Smallest λ of K u = λ M u for P1 on a uniform mesh of (a, b), with
/// element stiffness weights `we` and the consistent mass matrix.
fn dense_lambda1(a: f64, b: f64, we: &[f64]) -> f64 {
    let n = we.len();
    let h = (b - a) / n as f64;
    let m = n - 1;
    let mut k = DMatrix::<f64>::zeros(m, m);
    let mut mass = DMatrix::<f64>::zeros(m, m);
    for e in 0..n {
        let c = we[e] / (h * h);
        let nodes = [e as isize - 1, e as isize];
        for (li, &i) in nodes.iter().enumerate() {
            for (lj, &j) in nodes.iter().enumerate() {
                if i < 0 || j < 0 || i as usize >= m || j as usize >= m {
                    continue;
                }
                let (i, j) = (i as usize, j as usize);
                k[(i, j)] += if li == lj { c } else { -c };
                mass[(i, j)] += if li == lj { h / 3.0 } else { h / 6.0 };
            }
        }
    }
    let l = mass.cholesky().unwrap();
    let linv = l.l().try_inverse().unwrap();
    let a_mat = &linv * k * linv.transpose();
    let sym = 0.5 * (&a_mat + a_mat.transpose());
    SymmetricEigen::new(sym).eigenvalues.iter().copied().fold(f64::INFINITY, f64::min)
}

#[test]
fn inverse_iteration_matches_dense_eigensolver() {
    let w = Weight::constant(1.0, 1, 2.0).unwrap();
    let s = space(0.0, 1.0, 96, &w);
    let e = first_eigenpair(&s, &EigenOptions::default()).unwrap();
    let dense = dense_lambda1(0.0, 1.0, &vec![1.0 / 96.0; 96]);
    assert!((e.lambda1 - dense).abs() < 1e-8 * dense, "{} vs {dense}", e.lambda1);
}

#[test]
fn weighted_eigenvalue_matches_dense_eigensolver() {
    let w = Weight::power(0.5, 1, 2.0).unwrap();
    let n = 80;
    let s = space(-1.0, 1.0, n, &w);
    // ∫_e |x|^{1/2} from the antiderivative sign(x)·(2/3)|x|^{3/2}
    let prim = |x: f64| x.signum() * 2.0 / 3.0 * x.abs().powf(1.5);
    let h = 2.0 / n as f64;
    let we: Vec<f64> = (0..n).map(|e| prim(-1.0 + (e + 1) as f64 * h) - prim(-1.0 + e as f64 * h)).collect();
    for (a, b) in s.element_weights().iter().zip(&we) {
        assert!((a - b).abs() < 1e-10 * b.max(1e-3), "{a} vs {b}");
    }
    let e = first_eigenpair(&s, &EigenOptions::default()).unwrap();
    let dense = dense_lambda1(-1.0, 1.0, &we);
    assert!((e.lambda1 - dense).abs() < 1e-7 * dense, "{} vs {dense}", e.lambda1);
}

/// max of the solution of -v'' = v^{-q} on (-1, 1), v(±1) = 0.
///
/// The first integral v'^2/2 = (M^a - v^a)/a with a = 1 - q gives a
/// half-width M^{(1+q)/2}·L with L = ∫_0^1 dv / sqrt(2(1 - v^a)/a).
fn singular_max(q: f64) -> f64 {
    let a = 1.0 - q;
    // v = 1 - s² removes the endpoint singularity
    let g = |s: f64| 2.0 * s / (2.0 * (1.0 - (1.0 - s * s).powf(a)) / a).sqrt();
    let n = 100_000;
    let l: f64 = (0..n).map(|i| g((i as f64 + 0.5) / n as f64)).sum::<f64>() / n as f64;
    l.powf(-2.0 / (1.0 + q))
}

#[test]
fn pure_singular_maximum_matches_first_integral() {
    let w = Weight::constant(1.0, 1, 2.0).unwrap();
    for q in [0.3, 0.5, 0.8] {
        let exact = singular_max(q);
        let errs: Vec<f64> = [256, 1024, 4096]
            .iter()
            .map(|&n| {
                let v0 = solve_pure_singular(&space(-1.0, 1.0, n, &w), q, 1e-8).unwrap().v0;
                (v0.sup_norm() - exact).abs() / exact
            })
            .collect();
        assert!(errs[1] < 1e-3, "q={q}: {errs:?}");
        assert!(errs[2] < errs[0], "q={q}: no refinement gain {errs:?}");
    }
}
