//! Independent oracles for the cylindrical calculus: Cartesian finite
//! differences of the converted field, and brute-force theta quadrature.

use nalgebra::Matrix3;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::f64::consts::PI;

use korn_core::cylfield::{
    composite_nodes, gradient_cyl, mode_norms, washer_norm_set, washer_norm_sets, BoundaryCondition, FourierField,
    QuadratureSpec, Rule, WasherGeometry, WasherQuantity, Weight,
};
use korn_core::testfields::random_washer_field;

fn washer(h: f64) -> WasherGeometry {
    WasherGeometry::new(0.5, 1.0, h, 1.0).unwrap()
}

/// The field as a Cartesian vector function of `(x, y, z)`.
fn cartesian(field: &FourierField, p: [f64; 3]) -> [f64; 3] {
    let rho = p[0].hypot(p[1]);
    let theta = p[1].atan2(p[0]);
    let [ur, ut, uz] = field.displacement(rho, theta, p[2]);
    let (s, c) = theta.sin_cos();
    [ur * c - ut * s, ur * s + ut * c, uz]
}

/// `J[i][j] = d U_i / d x_j` by central differences; `fourth` selects the
/// five-point stencil.
fn cartesian_jacobian(field: &FourierField, p: [f64; 3], step: f64, fourth: bool) -> Matrix3<f64> {
    let mut j = Matrix3::zeros();
    for col in 0..3 {
        let at = |t: f64| {
            let mut q = p;
            q[col] += t;
            cartesian(field, q)
        };
        let (f1, b1) = (at(step), at(-step));
        let d: [f64; 3] = if fourth {
            let (f2, b2) = (at(2.0 * step), at(-2.0 * step));
            std::array::from_fn(|i| (8.0 * (f1[i] - b1[i]) - (f2[i] - b2[i])) / (12.0 * step))
        } else {
            std::array::from_fn(|i| (f1[i] - b1[i]) / (2.0 * step))
        };
        for row in 0..3 {
            j[(row, col)] = d[row];
        }
    }
    j
}

/// Cartesian Jacobian expressed in the `(e_rho, e_theta, e_z)` frame.
fn to_cylindrical_frame(j: &Matrix3<f64>, theta: f64) -> Matrix3<f64> {
    let (s, c) = theta.sin_cos();
    let q = Matrix3::new(c, -s, 0.0, s, c, 0.0, 0.0, 0.0, 1.0);
    q.transpose() * j * q
}

#[test]
fn gradient_matches_cartesian_finite_differences() {
    let geom = washer(0.2);
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst = 0.0f64;
    for seed in 0..50u64 {
        let bc = if seed % 2 == 0 { BoundaryCondition::V1 } else { BoundaryCondition::V2 };
        let field = random_washer_field(seed, &geom, bc, 3, 0.5).unwrap();
        for _ in 0..4 {
            let rho = rng.random_range(0.52..0.98);
            let theta = rng.random_range(-3.0..3.0);
            let z = rng.random_range(0.01..0.19);
            let (s, c) = f64::sin_cos(theta);
            let fd = cartesian_jacobian(&field, [rho * c, rho * s, z], 1e-5, false);
            let fd = to_cylindrical_frame(&fd, theta);
            let g = gradient_cyl(&field, rho, theta, z).unwrap().0;
            let scale = g.amax().max(1e-300);
            worst = worst.max((fd - g).amax() / scale);
        }
    }
    assert!(worst <= 1e-6, "largest relative deviation {worst:e}");
}

/// `sum_nodes w rho sum_theta |F(rho, theta, z)|^2 (2 pi / M)`; the
/// trapezoid rule in theta is exact for trigonometric polynomials of degree
/// below `M`.
fn brute_force(
    geom: &WasherGeometry,
    spec: &QuadratureSpec,
    theta_points: usize,
    integrand: impl Fn(f64, f64, f64) -> f64,
) -> f64 {
    let rho_nodes = composite_nodes(geom.inner, geom.outer, spec.n1, spec.rule);
    let z_nodes = composite_nodes(0.0, geom.thickness, spec.n2, spec.rule);
    let dt = 2.0 * PI / theta_points as f64;
    let mut total = 0.0;
    for &(rho, wr) in &rho_nodes {
        for &(z, wz) in &z_nodes {
            let ring: f64 = (0..theta_points).map(|k| integrand(rho, k as f64 * dt, z)).sum();
            total += wr * wz * rho * ring * dt;
        }
    }
    total
}

#[test]
fn change_of_variables_identity() {
    // Cartesian |grad U|^2 dx dy dz against the rho-weighted cylindrical norm,
    // for the full gradient and for the u_z row alone.
    let geom = washer(0.1);
    for seed in [3u64, 17, 40] {
        let field = random_washer_field(seed, &geom, BoundaryCondition::V2, 3, 0.5).unwrap();
        for spec in [QuadratureSpec::gauss(4, 1, 6), QuadratureSpec::gauss(8, 2, 6)] {
            let cart = |rho: f64, theta: f64, z: f64| {
                let (s, c) = theta.sin_cos();
                cartesian_jacobian(&field, [rho * c, rho * s, z], 1e-4, true)
            };
            let full = brute_force(&geom, &spec, 40, |rho, theta, z| cart(rho, theta, z).norm_squared());
            let row = brute_force(&geom, &spec, 40, |rho, theta, z| cart(rho, theta, z).row(2).norm_squared());
            let norms = washer_norm_set(&field, &spec).unwrap();
            assert!((full - norms.grad).abs() <= 1e-8 * norms.grad, "seed {seed}: {full} vs {}", norms.grad);
            assert!((row - norms.grad_uz).abs() <= 1e-8 * norms.grad_uz, "seed {seed}: {row} vs {}", norms.grad_uz);
        }
    }
}

#[test]
fn mode_sums_match_direct_theta_quadrature() {
    let geom = washer(0.1);
    let spec = QuadratureSpec::gauss(4, 1, 6);
    for seed in 0..6u64 {
        let field = random_washer_field(seed, &geom, BoundaryCondition::V1, 5, 0.5).unwrap();
        assert_eq!(field.modes().len(), 5);
        let theta_points = 4 * field.max_mode() as usize + 8;
        for (q, pointwise) in [
            (WasherQuantity::Grad, false),
            (WasherQuantity::Strain, true),
        ] {
            let per_mode = mode_norms(&field, q, Weight::Rho, &spec).unwrap();
            let direct = brute_force(&geom, &spec, theta_points, |rho, theta, z| {
                let g = gradient_cyl(&field, rho, theta, z).unwrap();
                if pointwise {
                    g.sym().norm_squared()
                } else {
                    g.0.norm_squared()
                }
            });
            let sum: f64 = per_mode.per_mode.iter().map(|(_, v)| v).sum();
            assert!((sum - per_mode.total).abs() <= 1e-12 * per_mode.total);
            assert!(
                (direct - per_mode.total).abs() <= 1e-8 * per_mode.total,
                "seed {seed} {q:?}: {direct} vs {}",
                per_mode.total
            );
        }
    }
}

#[test]
fn rule_refinement_converges_for_smooth_fields() {
    let geom = washer(0.1);
    let field = random_washer_field(9, &geom, BoundaryCondition::V2, 3, 0.5).unwrap();
    let coarse = washer_norm_set(&field, &QuadratureSpec::gauss(4, 1, 8)).unwrap();
    let fine = washer_norm_set(&field, &QuadratureSpec::new(64, 8, Rule::Gauss(8))).unwrap();
    assert!(coarse.max_rel_diff(&fine) < 1e-10);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn norms_are_two_homogeneous(seed in 0u64..10_000, s in -4.0f64..4.0) {
        prop_assume!(s.abs() > 1e-3);
        let geom = washer(0.05);
        let field = random_washer_field(seed, &geom, BoundaryCondition::V2, 3, 0.5).unwrap();
        let spec = QuadratureSpec::gauss(4, 1, 8);
        let a = washer_norm_set(&field, &spec).unwrap();
        let b = washer_norm_set(&field.scaled(s), &spec).unwrap();
        let s2 = s * s;
        for (x, y) in [(a.grad, b.grad), (a.strain, b.strain), (a.uz, b.uz), (a.block_z, b.block_z), (a.urho_inv, b.urho_inv)] {
            prop_assert!((y - s2 * x).abs() <= 1e-12 * s2 * x.max(1e-300));
        }
    }

    #[test]
    fn per_mode_norm_sets_add_up(seed in 0u64..10_000) {
        let geom = washer(0.05);
        let field = random_washer_field(seed, &geom, BoundaryCondition::V1, 4, 0.5).unwrap();
        let spec = QuadratureSpec::gauss(4, 1, 8);
        let total = washer_norm_set(&field, &spec).unwrap();
        let parts = washer_norm_sets(&field, &spec).unwrap();
        prop_assert_eq!(parts.len(), 4);
        let sum = parts.iter().map(|(_, s)| *s).reduce(|a, b| a + b).unwrap();
        for (x, y) in [(total.grad, sum.grad), (total.strain, sum.strain), (total.block_z, sum.block_z), (total.urho_inv, sum.urho_inv)] {
            prop_assert!((x - y).abs() <= 1e-10 * x);
        }
    }

    #[test]
    fn strain_never_exceeds_gradient(seed in 0u64..10_000, rho in 0.5f64..1.0, theta in 0.0f64..6.28, z in 0.0f64..0.05) {
        let geom = washer(0.05);
        let field = random_washer_field(seed, &geom, BoundaryCondition::V2, 3, 0.5).unwrap();
        let g = gradient_cyl(&field, rho, theta, z).unwrap();
        prop_assert!(g.sym().norm_squared() <= g.0.norm_squared() * (1.0 + 1e-14));
    }
}
