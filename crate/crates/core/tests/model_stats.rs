//! Monte Carlo moments of the samplers and of the projected observation.

use distcorr::model::{sample_block, CorrelationVector, SourceKind};
use distcorr::protocol::{project_ddim, ProjectionState};

const N: usize = 100_000;

fn mean(v: &[f64]) -> f64 {
    v.iter().sum::<f64>() / v.len() as f64
}

fn cross(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum::<f64>() / a.len() as f64
}

#[test]
fn gaussian_moments() {
    let rho = CorrelationVector::new(vec![0.3, -0.5, 0.0]).unwrap();
    let block = sample_block(&rho, N, SourceKind::Gaussian, 11).unwrap();
    let y = block.ys();
    // Var(y) = 1 has sd sqrt(2/N) for the sample second moment.
    assert!((cross(y, y) - 1.0).abs() <= 5.0 * (2.0 / N as f64).sqrt());
    for (i, &r) in rho.as_slice().iter().enumerate() {
        let x = block.column(i);
        // E[(xy)^2] = 1 + rho^2, so sd of the estimate is sqrt((1 + rho^2) / N).
        let tol = 5.0 * ((1.0 + r * r) / N as f64).sqrt();
        assert!((cross(&x, y) - r).abs() <= tol, "coord {i}: {}", cross(&x, y));
        assert!(mean(&x).abs() <= 5.0 / (N as f64).sqrt());
    }
}

#[test]
fn rademacher_moments() {
    let rho = CorrelationVector::new(vec![0.4, -0.35]).unwrap();
    let block = sample_block(&rho, N, SourceKind::Rademacher, 12).unwrap();
    let y = block.ys();
    assert!(y.iter().all(|&v| v == 1.0 || v == -1.0));
    for (i, &r) in rho.as_slice().iter().enumerate() {
        let x = block.column(i);
        let tol = 5.0 / (N as f64).sqrt();
        assert!((cross(&x, y) - r).abs() <= tol, "coord {i}: {}", cross(&x, y));
    }
}

#[test]
fn rademacher_rejects_large_l1() {
    let rho = CorrelationVector::new(vec![0.6, 0.6]).unwrap();
    assert!(sample_block(&rho, 4, SourceKind::Rademacher, 1).is_err());
}

#[test]
fn projected_correlation_is_rho_dot_r() {
    let rho = CorrelationVector::new(vec![0.5, 0.3, -0.2, 0.4]).unwrap();
    let block = sample_block(&rho, N, SourceKind::Gaussian, 13).unwrap();
    for seed in [1u64, 2, 3] {
        let proj = ProjectionState::draw(4, seed).unwrap();
        let want: f64 = rho.as_slice().iter().zip(proj.r_vec()).map(|(a, b)| a * b).sum();
        let xt = project_ddim(&block, &proj).unwrap();
        let got = cross(&xt, block.ys());
        let tol = 3.0 * ((1.0 + want * want) / N as f64).sqrt();
        assert!((got - want).abs() <= tol, "seed {seed}: {got} vs {want}");
    }
}

#[test]
fn projection_examples() {
    let block = distcorr::model::SampleBlock::from_parts(vec![1.0; 12], vec![0.0; 3], 4).unwrap();
    let proj = ProjectionState::from_vec(vec![0.5; 4]).unwrap();
    assert_eq!(project_ddim(&block, &proj).unwrap(), vec![2.0; 3]);
    let one = sample_block(&CorrelationVector::new(vec![0.2]).unwrap(), 8, SourceKind::Gaussian, 5).unwrap();
    let p = ProjectionState::draw(1, 77).unwrap();
    let s = p.r_vec()[0];
    assert!(s == 1.0 || s == -1.0);
    let xt = project_ddim(&one, &p).unwrap();
    assert!(xt.iter().zip(one.xs()).all(|(a, b)| *a == s * b));
}
