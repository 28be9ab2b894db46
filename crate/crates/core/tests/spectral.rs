//! Spectral module against dense linear algebra and closed-form identities.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use korn_core::cylfield::{washer_norm_set, BoundaryCondition, QuadratureSpec, WasherGeometry};
use korn_core::linalg::{smallest_eigenpairs, PencilOptions, SymBand};
use korn_core::spectral::{
    assemble, assemble_free, buckling_quotient, critical_load, korn15_constant, korn15_ratio, korn_constant_fixed,
    min_rayleigh, read_triplets, write_eigenpairs_csv, write_triplets, BucklingOutcome, CriticalLoad,
    ElasticityTensor, Grid, Korn15Options, StressField,
};
use korn_core::testfields::{bump, kirchhoff_ansatz, random_washer_field, BumpKind};

fn washer(h: f64) -> WasherGeometry {
    WasherGeometry::new(0.5, 1.0, h, 1.0).unwrap()
}

/// Smallest eigenvalue of `K x = l M x` through `L^{-1} K L^{-T}`.
fn dense_min(k: &DMatrix<f64>, m: &DMatrix<f64>) -> f64 {
    let l = m.clone().cholesky().expect("mass is SPD").l();
    let li = l.try_inverse().unwrap();
    let c = &li * k * li.transpose();
    let c = (&c + c.transpose()) * 0.5;
    c.symmetric_eigen().eigenvalues.min()
}

/// Random banded pencil: `K = B B^T + 1e-3 I` and a
/// diagonally dominant SPD `M`, both of half-bandwidth `bw`.
fn random_pencil(rng: &mut ChaCha8Rng, n: usize, bw: usize) -> (SymBand, SymBand) {
    let half = bw / 2;
    let mut b = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i.saturating_sub(half)..=i {
            b[(i, j)] = rng.random_range(-1.0..1.0);
        }
    }
    // The shift keeps the smallest eigenvalue away from roundoff level, as
    // in the assembled Korn pencils.
    let k = &b * b.transpose() + DMatrix::identity(n, n) * 1e-3;
    let mut m = DMatrix::zeros(n, n);
    for i in 0..n {
        for j in i.saturating_sub(bw)..i {
            let v = rng.random_range(-0.5..0.5) / bw as f64;
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
        m[(i, i)] = rng.random_range(1.0..3.0);
    }
    (SymBand::from_dense(&k, bw).unwrap(), SymBand::from_dense(&m, bw).unwrap())
}

#[test]
fn min_rayleigh_matches_dense_spectrum_on_random_pencils() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..20 {
        let n = rng.random_range(8..=200);
        let bw = rng.random_range(1..=8usize).min(n - 1);
        let (k, m) = random_pencil(&mut rng, n, bw);
        let oracle = dense_min(&k.to_dense(), &m.to_dense());
        let got = min_rayleigh(&k, &m).unwrap();
        let rel = (got.lambda - oracle).abs() / oracle.abs().max(1e-300);
        assert!(rel <= 1e-8, "trial {trial} (n={n}, bw={bw}): {} vs {oracle} (rel {rel:e})", got.lambda);
        assert!(got.residual <= 1e-8);
    }
}

#[test]
fn several_smallest_eigenvalues_match_dense() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let (k, m) = random_pencil(&mut rng, 150, 6);
    let (kd, md) = (k.to_dense(), m.to_dense());
    let l = md.clone().cholesky().unwrap().l().try_inverse().unwrap();
    let c = &l * kd * l.transpose();
    let mut all: Vec<f64> = ((&c + c.transpose()) * 0.5).symmetric_eigen().eigenvalues.iter().copied().collect();
    all.sort_by(f64::total_cmp);
    let sol = smallest_eigenpairs(&k, &m, 4, &PencilOptions::default()).unwrap();
    for (p, want) in sol.pairs.iter().zip(&all) {
        assert!((p.value - want).abs() <= 1e-8 * want.abs().max(1.0), "{} vs {want}", p.value);
        assert!(p.residual <= 1e-8);
    }
}

#[test]
fn korn_constant_matches_dense_oracle() {
    let geom = washer(0.1);
    let grid = Grid::new(32, 8);
    let mut oracle = f64::INFINITY;
    for n in 0..=4 {
        let fm = assemble(&geom, n, BoundaryCondition::V2, grid).unwrap();
        oracle = oracle.min(dense_min(&fm.a.to_dense(), &fm.b.to_dense()));
    }
    let k = korn_constant_fixed(&geom, BoundaryCondition::V2, 4, grid).unwrap();
    assert!((k.k - oracle).abs() <= 1e-9 * oracle, "{} vs {oracle}", k.k);
    // Frozen from the dense computation above.
    assert!((k.k - 1.658321707597e-2).abs() <= 1e-9, "{}", k.k);
    assert_eq!(k.mode, 0);
    assert!(k.residual <= 1e-8);
}

#[test]
fn strain_form_is_dominated_by_gradient_form() {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let geom = washer(0.05);
    for n in 0..4 {
        let free = assemble_free(&geom, n, Grid::new(16, 4)).unwrap();
        let fixed = assemble(&geom, n, BoundaryCondition::V1, Grid::new(16, 4)).unwrap();
        for fm in [&free, &fixed] {
            for _ in 0..100 {
                let x: Vec<f64> = (0..fm.a.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
                let (a, b) = (fm.a.quad_form(&x), fm.b.quad_form(&x));
                assert!(a >= -1e-14 * b && a <= b * (1.0 + 1e-12), "mode {n}: {a} > {b}");
            }
        }
    }
}

#[test]
fn interpolated_trial_fields_bound_the_minimum_from_above() {
    let geom = washer(0.1);
    let grid = Grid::new(32, 4);
    let phi = bump((0.75, 1.0), BumpKind::ExpMollifier).unwrap();
    let kirchhoff = kirchhoff_ansatz(&geom, &phi).unwrap();
    let fm = assemble(&geom, 0, BoundaryCondition::V2, grid).unwrap();
    let min = min_rayleigh(&fm.a, &fm.b).unwrap().lambda;
    let x = fm.interpolate(&kirchhoff).unwrap();
    assert!(fm.a.quad_form(&x) / fm.b.quad_form(&x) >= min);
    for seed in 0..5 {
        let field = random_washer_field(seed, &geom, BoundaryCondition::V2, 2, 0.5).unwrap();
        for m in field.modes() {
            let fm = assemble(&geom, m.n, BoundaryCondition::V2, grid).unwrap();
            let min = min_rayleigh(&fm.a, &fm.b).unwrap().lambda;
            let x = fm.interpolate(&field).unwrap();
            assert!(fm.a.quad_form(&x) / fm.b.quad_form(&x) >= min * (1.0 - 1e-12));
        }
    }
}

#[test]
fn buckling_quotient_reduces_to_norms() {
    let geom = washer(0.05);
    let spec = QuadratureSpec::gauss(4, 1, 8);
    let field = random_washer_field(12, &geom, BoundaryCondition::V2, 3, 0.5).unwrap();
    let norms = washer_norm_set(&field, &spec).unwrap();
    let half_shear = ElasticityTensor::new(0.0, 0.5).unwrap();
    let sigma = StressField::uniform_compression();
    match buckling_quotient(&field, &sigma, &half_shear, &spec).unwrap() {
        BucklingOutcome::Quotient { value, numerator, denominator } => {
            assert!((denominator - norms.grad).abs() <= 1e-12 * norms.grad);
            assert!((numerator - norms.strain).abs() <= 1e-12 * norms.strain);
            assert!((value - norms.strain / norms.grad).abs() <= 1e-12);
        }
        other => panic!("uniform compression must destabilize: {other:?}"),
    }
    let tension = sigma.scaled(-1.0);
    assert!(matches!(
        buckling_quotient(&field, &tension, &half_shear, &spec).unwrap(),
        BucklingOutcome::NonDestabilizing { .. }
    ));
}

#[test]
fn kirchhoff_buckling_quotient_steepens_toward_h_squared() {
    let phi = bump((0.75, 1.0), BumpKind::ExpMollifier).unwrap();
    let sigma = StressField::radial_compression();
    let l0 = ElasticityTensor::default();
    let spec = QuadratureSpec::gauss(64, 1, 8);
    let pairs: Vec<(f64, f64)> = [0.1, 0.05, 0.025, 0.0125]
        .iter()
        .map(|&h| {
            let field = kirchhoff_ansatz(&washer(h), &phi).unwrap();
            (h, buckling_quotient(&field, &sigma, &l0, &spec).unwrap().value().unwrap())
        })
        .collect();
    let fit = korn_core::experiment::fit_exponent(&pairs).unwrap();
    let slopes: Vec<f64> = pairs.windows(2).map(|w| (w[0].1 / w[1].1).ln() / (w[0].0 / w[1].0).ln()).collect();
    println!("Kirchhoff buckling quotient: fitted exponent {:.4}, local slopes {slopes:?}", fit.exponent);
    // The stress work is h int phi'^2 + (h^3/3) int phi''^2 and the second
    // term is not yet negligible at these thicknesses, so only the trend of
    // the local slope toward 2 is asserted.
    assert!(slopes.windows(2).all(|w| w[1] > w[0]), "{slopes:?}");
    assert!(slopes.iter().all(|&s| s > 0.0 && s < 2.0), "{slopes:?}");
}

#[test]
fn critical_load_is_homogeneous_in_stress_and_stiffness() {
    let geom = washer(0.1);
    let grid = Grid::new(16, 4);
    let sigma = StressField::radial_compression();
    let l0 = ElasticityTensor::default();
    let base = critical_load(&geom, &sigma, &l0, BoundaryCondition::V2, 3, grid).unwrap();
    let lambda = base.lambda().expect("radial compression destabilizes");
    let t = 2.5;
    let by_stress = critical_load(&geom, &sigma.scaled(t), &l0, BoundaryCondition::V2, 3, grid).unwrap();
    let by_stiffness = critical_load(&geom, &sigma, &l0.scaled(t).unwrap(), BoundaryCondition::V2, 3, grid).unwrap();
    assert!((by_stress.lambda().unwrap() - lambda / t).abs() <= 1e-8 * lambda);
    assert!((by_stiffness.lambda().unwrap() - lambda * t).abs() <= 1e-8 * lambda * t);
    let tension = critical_load(&geom, &sigma.scaled(-1.0), &l0, BoundaryCondition::V2, 3, grid).unwrap();
    assert!(matches!(tension, CriticalLoad::EmptyCone { .. }));
    assert_eq!(tension.per_mode().len(), 4);
}

#[test]
fn korn15_search_is_reproducible() {
    let geom = washer(0.05);
    let opts = Korn15Options::default();
    assert_eq!(opts.starts, 20);
    let a = korn15_constant(&geom, BoundaryCondition::V2, 8, Grid::new(64, 4), &opts).unwrap();
    let b = korn15_constant(&geom, BoundaryCondition::V2, 8, Grid::new(64, 4), &opts).unwrap();
    assert_eq!(a.c.to_bits(), b.c.to_bits());
    assert_eq!(a.mode, b.mode);
    assert!(a.converged);
    // Recorded from this 20-start run.
    assert!((a.c - 6.675875302350).abs() <= 1e-9 * a.c, "{}", a.c);
    let fm = assemble(&geom, 1, BoundaryCondition::V2, Grid::new(8, 4)).unwrap();
    assert!(korn15_ratio(&fm, &vec![0.0; fm.a.dim()]).is_err());
}

#[test]
fn assembled_matrices_survive_the_triplet_format() {
    let fm = assemble(&washer(0.1), 2, BoundaryCondition::V1, Grid::new(8, 4)).unwrap();
    let mut buf = Vec::new();
    write_triplets(&mut buf, &fm.a).unwrap();
    let back = read_triplets(buf.as_slice()).unwrap();
    assert_eq!(back.to_dense(), fm.a.to_dense());
    let sol = smallest_eigenpairs(&fm.a, &fm.b, 2, &PencilOptions::default()).unwrap();
    let mut csv = Vec::new();
    write_eigenpairs_csv(&mut csv, &sol.pairs).unwrap();
    let text = String::from_utf8(csv).unwrap();
    assert!(text.starts_with("index,value,residual,v0"));
    assert_eq!(text.lines().count(), 3);
}

#[test]
fn radial_dilation_is_strain_dominated() {
    use korn_core::cylfield::{FourierField, Jet2, ModeCoeffs, Profile};
    let geom = washer(0.1);
    let mut m = ModeCoeffs::new(0);
    m.a_rho = Profile::closed(|rho, _| Jet2::new(rho, 1.0, 0.0));
    let field = FourierField::new(geom, vec![m]).unwrap();
    // u_rho = rho is reproduced exactly by the bilinear basis and its
    // gradient is symmetric, so the quotient is one on every grid.
    for grid in [Grid::new(4, 4), Grid::new(8, 4), Grid::new(16, 8)] {
        let fm = assemble_free(&geom, 0, grid).unwrap();
        let x = fm.interpolate_full(&field).unwrap();
        let gap = (fm.a.quad_form(&x) / fm.b.quad_form(&x) - 1.0).abs();
        assert!(gap <= 1e-12, "{grid:?}: {gap:e}");
    }
}

#[test]
fn kirchhoff_interpolant_strain_converges_at_second_order() {
    // Oracle: the one-dimensional closed form of the bending strain.
    let geom = WasherGeometry::new(1.0, 2.0, 0.1, 1.0).unwrap();
    let phi = bump((1.5, 2.0), BumpKind::PolySpline(4)).unwrap();
    let field = kirchhoff_ansatz(&geom, &phi).unwrap();
    let exact = korn_core::testfields::bending_norms(0.1, &phi).strain;
    let errs: Vec<f64> = [Grid::new(64, 16), Grid::new(128, 32), Grid::new(256, 64)]
        .iter()
        .map(|&g| {
            let fm = assemble(&geom, 0, BoundaryCondition::V2, g).unwrap();
            let x = fm.interpolate(&field).unwrap();
            (fm.a.quad_form(&x) - exact).abs() / exact
        })
        .collect();
    for (got, want) in errs.iter().zip([3.974758601770e-3, 9.999221754216e-4, 2.503889561169e-4]) {
        assert!((got - want).abs() <= 1e-6 * want, "{got:e} vs {want:e}");
    }
    for w in errs.windows(2) {
        assert!(w[0] / w[1] > 3.9, "{errs:?}");
    }
}
