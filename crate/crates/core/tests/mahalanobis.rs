use nalgebra::DMatrix;
use rand::rngs::StdRng;
use rand::{RngExt, SeedableRng};
use riskrank_core::covariance::{exact_symmetric_inverse, pseudo_inverse, symmetric_pseudo_inverse};
use riskrank_core::metrics::euclidean;
use riskrank_core::{CovarianceMethod, CovarianceModel, MetricKind, Vector};

const MP_TOL: f64 = 1e-8;

fn random_matrix(rng: &mut StdRng, rows: usize, cols: usize) -> DMatrix<f64> {
    DMatrix::from_fn(rows, cols, |_, _| rng.random_range(-1.0..1.0))
}

/// 50×50 matrix of rank `rank` built as a product of thin factors.
fn rank_deficient(rng: &mut StdRng, rank: usize) -> DMatrix<f64> {
    random_matrix(rng, 50, rank) * random_matrix(rng, rank, 50)
}

fn rel(residual: &DMatrix<f64>, scale: &DMatrix<f64>) -> f64 {
    residual.norm() / scale.norm().max(f64::MIN_POSITIVE)
}

/// The four Moore–Penrose conditions, each as a relative Frobenius residual.
fn penrose_residuals(a: &DMatrix<f64>, p: &DMatrix<f64>) -> [f64; 4] {
    let ap = a * p;
    let pa = p * a;
    [
        rel(&(&ap * a - a), a),
        rel(&(&pa * p - p), p),
        rel(&(ap.transpose() - &ap), &ap),
        rel(&(pa.transpose() - &pa), &pa),
    ]
}

#[test]
fn identity_covariance_is_euclidean() {
    let mut rng = StdRng::seed_from_u64(11);
    for _ in 0..200 {
        let dim = rng.random_range(2..=64);
        let model = CovarianceModel::from_inverse(Vector::new(vec![0.0; dim]).unwrap(), DMatrix::identity(dim, dim)).unwrap();
        let a: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect();
        let m = model.distance_between(&a, &b).unwrap();
        let e = euclidean(&a, &b).unwrap();
        assert!((m - e).abs() <= 1e-12 * e.max(1.0), "{m} vs {e}");
    }
}

#[test]
fn general_pseudo_inverse_satisfies_penrose_conditions() {
    let mut rng = StdRng::seed_from_u64(50);
    for trial in 0..20 {
        let rank = rng.random_range(1..50);
        let a = rank_deficient(&mut rng, rank);
        let p = pseudo_inverse(&a);
        for (c, r) in penrose_residuals(&a, &p).iter().enumerate() {
            assert!(*r <= MP_TOL, "trial {trial} rank {rank} condition {}: {r:e}", c + 1);
        }
        assert_eq!(p.rank(1e-8 * p.norm()), rank, "trial {trial}");
    }
}

#[test]
fn symmetric_pseudo_inverse_satisfies_penrose_conditions() {
    let mut rng = StdRng::seed_from_u64(51);
    for trial in 0..20 {
        let rank = rng.random_range(1..50);
        let x = random_matrix(&mut rng, 50, rank);
        let a = &x * x.transpose();
        let p = symmetric_pseudo_inverse(&a);
        for (c, r) in penrose_residuals(&a, &p).iter().enumerate() {
            assert!(*r <= MP_TOL, "trial {trial} rank {rank} condition {}: {r:e}", c + 1);
        }
        assert!(rel(&(&p - pseudo_inverse(&a)), &p) <= MP_TOL, "trial {trial}");
    }
}

#[test]
fn pseudo_inverse_of_full_rank_is_inverse() {
    let mut rng = StdRng::seed_from_u64(52);
    let x = random_matrix(&mut rng, 20, 20);
    let a = &x * x.transpose() + DMatrix::identity(20, 20);
    let exact = exact_symmetric_inverse(&a).unwrap();
    assert!(rel(&(symmetric_pseudo_inverse(&a) - &exact), &exact) < 1e-10);
    assert!(rel(&(pseudo_inverse(&a) - &exact), &exact) < 1e-10);
}

#[test]
fn pseudo_inverse_of_non_square_and_zero() {
    let mut rng = StdRng::seed_from_u64(53);
    let a = random_matrix(&mut rng, 7, 3) * random_matrix(&mut rng, 3, 12);
    let p = pseudo_inverse(&a);
    assert_eq!(p.shape(), (12, 7));
    assert!(penrose_residuals(&a, &p).iter().all(|r| *r <= MP_TOL));
    let z = DMatrix::<f64>::zeros(4, 4);
    assert_eq!(pseudo_inverse(&z), z);
    assert_eq!(symmetric_pseudo_inverse(&z), z);
}

#[test]
fn fewer_samples_than_dimensions() {
    let mut rng = StdRng::seed_from_u64(54);
    let sample: Vec<Vector> = (0..25)
        .map(|_| Vector::new((0..64).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
        .collect();
    let refs: Vec<&Vector> = sample.iter().collect();
    assert!(CovarianceModel::estimate(&refs, CovarianceMethod::ExactInverse).is_err());

    let model = CovarianceModel::estimate(&refs, CovarianceMethod::PseudoInverse).unwrap();
    let shrunk = CovarianceModel::estimate(&refs, CovarianceMethod::Shrinkage { lambda: 0.1 }).unwrap();
    for v in &sample {
        let d = model.distance_between(v.as_slice(), sample[0].as_slice()).unwrap();
        assert!(d.is_finite() && d >= 0.0);
        assert!(shrunk.distance_between(v.as_slice(), sample[0].as_slice()).unwrap().is_finite());
    }
    assert_eq!(model.distance_between(sample[3].as_slice(), sample[3].as_slice()).unwrap(), 0.0);
}

#[test]
fn distance_is_symmetric_and_translation_invariant() {
    let mut rng = StdRng::seed_from_u64(55);
    let sample: Vec<Vector> = (0..40)
        .map(|_| Vector::new((0..8).map(|_| rng.random_range(-1.0..1.0)).collect()).unwrap())
        .collect();
    let refs: Vec<&Vector> = sample.iter().collect();
    let spec = MetricKind::Mahalanobis { method: CovarianceMethod::ExactInverse }.fit(refs.iter().copied()).unwrap();
    for _ in 0..100 {
        let a: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let b: Vec<f64> = (0..8).map(|_| rng.random_range(-1.0..1.0)).collect();
        let shift: Vec<f64> = (0..8).map(|_| rng.random_range(-5.0..5.0)).collect();
        let (a2, b2): (Vec<f64>, Vec<f64>) = a.iter().zip(&b).zip(&shift).map(|((x, y), s)| (x + s, y + s)).unzip();
        let ab = spec.eval(&a, &b).unwrap();
        assert!((ab - spec.eval(&b, &a).unwrap()).abs() <= 1e-12 * ab);
        assert!((ab - spec.eval(&a2, &b2).unwrap()).abs() <= 1e-9 * ab);
    }
}
