//! Exact engines checked against independent dense and quadrature oracles.

use approx::assert_relative_eq;
use nalgebra::{DMatrix, DVector};
use rgibbs::disorder::{SiteDisorder, SiteDistribution};
use rgibbs::experiments::expected_quad_form;
use rgibbs::gaussian_exact::{self, QuenchedGaussian};
use rgibbs::greens::{self, Domain, Greens, Normalization};
use rgibbs::lattice::{BoxRegion, Site};
use rgibbs::linalg::Method;
use rgibbs::model::{Couplings, Potential, System};
use rgibbs::quadrature::integrate_line;
use rgibbs::sampler::conditional_gaussian;
use rgibbs::surface::one_site_ratio;
use std::f64::consts::PI;

/// 2d·I − A on the sites of `region`, assembled from neighbor enumeration.
fn dense_laplacian(region: &BoxRegion) -> DMatrix<f64> {
    let d = region.dim();
    let n = region.len();
    let mut m = DMatrix::zeros(n, n);
    for (i, s) in region.sites().enumerate() {
        m[(i, i)] = 2.0 * d as f64;
        for ax in 0..d {
            for step in [-1, 1] {
                if let Some(j) = region.index(&s.step(ax, step)) {
                    m[(i, j)] = -1.0;
                }
            }
        }
    }
    m
}

/// Expected walk visits: (I − P)⁻¹ = 2d (2d·I − A)⁻¹.
fn dense_green(region: &BoxRegion) -> DMatrix<f64> {
    dense_laplacian(region).try_inverse().unwrap() * (2.0 * region.dim() as f64)
}

fn boxes() -> Vec<BoxRegion> {
    vec![
        BoxRegion::new(&[1], &[3]).unwrap(),
        BoxRegion::new(&[-4], &[6]).unwrap(),
        BoxRegion::new(&[0, 0], &[3, 3]).unwrap(),
        BoxRegion::new(&[-1, 2], &[3, 4]).unwrap(),
        BoxRegion::new(&[0, 0, 0], &[2, 3, 1]).unwrap(),
    ]
}

#[test]
fn green_columns_match_dense_inverse() {
    for region in boxes() {
        let exact = dense_green(&region);
        let domain = Domain::Box(region);
        let tol = if region.dim() == 1 { 1e-12 } else { 1e-10 };
        for method in [Method::Direct, Method::Iterative] {
            let g = Greens::new(&domain, method).unwrap();
            for (i, x) in region.sites().enumerate() {
                let col = g.column(&x, Normalization::Walk).unwrap();
                for (j, y) in region.sites().enumerate() {
                    assert_relative_eq!(col.at(&domain, &y), exact[(i, j)], max_relative = tol, epsilon = tol);
                }
            }
        }
    }
}

#[test]
fn exit_times_are_row_sums_of_the_green_matrix() {
    for region in boxes() {
        let exact = dense_green(&region);
        let domain = Domain::Box(region);
        let g = Greens::new(&domain, Method::Direct).unwrap();
        let times = g.exit_times().unwrap();
        for (i, t) in times.iter().enumerate() {
            assert_relative_eq!(*t, exact.row(i).sum(), max_relative = 1e-10);
        }
    }
}

#[test]
fn quadratic_form_matches_dense_product() {
    for (k, region) in boxes().into_iter().enumerate() {
        let xi = SiteDisorder::new(SiteDistribution::standard_gaussian(), 11 + k as u64).values(region.sites());
        let v = DVector::from_vec(xi.clone());
        let exact = (v.transpose() * dense_green(&region) * &v)[(0, 0)];
        let q = greens::quad_form(&Domain::Box(region), &xi, Method::Auto).unwrap();
        assert_relative_eq!(q, exact, max_relative = 1e-10);
    }
}

#[test]
fn total_green_sum_agrees_across_solvers() {
    for (n, d) in [(1, 1), (4, 1), (3, 2), (2, 3)] {
        let exact = dense_green(&BoxRegion::centered(n, d)).sum();
        assert_relative_eq!(greens::sum_all_green(n, d, Method::Direct).unwrap(), exact, max_relative = 1e-10);
        assert_relative_eq!(greens::sum_all_green(n, d, Method::Iterative).unwrap(), exact, max_relative = 1e-8);
        assert_relative_eq!(greens::sum_all_green_spectral(n, d), exact, max_relative = 1e-10);
    }
}

#[test]
fn expected_quadratic_form_is_a_green_sum() {
    for (n, d) in [(2, 1), (3, 2), (2, 3)] {
        let g = dense_green(&BoxRegion::centered(n, d));
        let trace = g.trace();
        let total = g.sum();
        let gauss = SiteDistribution::standard_gaussian();
        assert_relative_eq!(expected_quad_form(&gauss, n, d), trace, max_relative = 1e-10);
        // E ξ_x ξ_y = m² off the diagonal, m² + σ² on it
        let shifted = SiteDistribution::RademacherShifted { mean: 1.0 };
        assert_relative_eq!(expected_quad_form(&shifted, n, d), 2.0 * trace + (total - trace), max_relative = 1e-10);
    }
}

fn line_system(xi: &[f64], a: f64, u: f64, lambda: f64) -> System {
    let region = BoxRegion::new(&[1], &[xi.len() as i64]).unwrap();
    System::from_parts(region, &[u], xi.to_vec(), lambda, |_| Potential::quadratic(a), |_| false)
}

#[test]
fn single_site_partition_function_by_quadrature() {
    let cases = [(0.5, 0.0, 0.0, 1.0), (0.5, 0.3, 1.2, 1.0), (1.3, -0.7, -0.4, 0.5), (0.2, 1.5, 2.0, 2.0)];
    for (a, u, xi, lambda) in cases {
        let sys = line_system(&[xi], a, u, lambda);
        // Λ = {1}, boundary heights u·0 and u·2
        let energy = |p: f64| a * p * p + a * (2.0 * u - p).powi(2) - lambda * xi * p;
        let z = integrate_line(|p| (-energy(p)).exp(), u, 1.0, 1e-13).unwrap();
        let log_z = gaussian_exact::log_partition(&sys, Method::Direct).unwrap();
        assert_relative_eq!(log_z, z.ln(), epsilon = 1e-9);
    }
    let unit = line_system(&[0.0], 0.5, 0.0, 1.0);
    assert_relative_eq!(gaussian_exact::log_partition(&unit, Method::Direct).unwrap(), 0.5 * PI.ln(), epsilon = 1e-14);
}

#[test]
fn two_site_partition_function_by_quadrature() {
    let cases = [(0.5, 0.0, [0.0, 0.0]), (0.5, 0.4, [0.7, -1.1]), (0.8, -0.3, [1.5, 0.2])];
    for (a, u, xi) in cases {
        let sys = line_system(&xi, a, u, 1.0);
        let (left, right) = (0.0, 3.0 * u);
        let energy = |p: f64, q: f64| {
            a * ((p - left).powi(2) + (q - p).powi(2) + (right - q).powi(2)) - xi[0] * p - xi[1] * q
        };
        let inner = |p: f64| integrate_line(|q| (-energy(p, q)).exp(), (p + right) / 2.0, 1.0, 1e-12).unwrap();
        let z = integrate_line(inner, u, 1.5, 1e-10).unwrap();
        let log_z = gaussian_exact::log_partition(&sys, Method::Auto).unwrap();
        assert!((log_z - z.ln()).abs() < 1e-6, "log Z {log_z} vs quadrature {}", z.ln());
    }
}

#[test]
fn quenched_mean_matches_dense_solve() {
    let region = BoxRegion::new(&[-2, -1], &[2, 3]).unwrap();
    let tilt = [0.3, -0.2];
    for (a, lambda) in [(0.5, 1.0), (1.7, 0.6)] {
        let xi = SiteDisorder::new(SiteDistribution::standard_gaussian(), 5);
        let sys = System::new(region, &tilt, &Couplings::uniform(Potential::quadratic(a)), &xi, lambda);
        let mean = gaussian_exact::quenched_mean(&sys, Method::Auto).unwrap();
        // the plane is harmonic, so m − plane solves (2d − A)(m − plane) = λξ/(2a)
        let rhs = DVector::from_iterator(region.len(), region.sites().map(|s| lambda * xi.xi_at(&s) / (2.0 * a)));
        let dev = dense_laplacian(&region).lu().solve(&rhs).unwrap();
        for (i, s) in region.sites().enumerate() {
            assert_relative_eq!(mean[i], s.dot(&tilt) + dev[i], epsilon = 1e-10);
        }
    }
}

#[test]
fn log_determinant_matches_dense_cholesky() {
    let region = BoxRegion::new(&[0, 0, 0], &[3, 2, 2]).unwrap();
    let sys = System::new(region, &[0.0; 3], &Couplings::uniform(Potential::quadratic(0.5)), &SiteDisorder::zero(), 1.0);
    for method in [Method::Direct, Method::Iterative] {
        let g = QuenchedGaussian::new(&sys, 0.0, method).unwrap();
        let chol = dense_laplacian(&region).cholesky().unwrap();
        let exact: f64 = 2.0 * chol.l().diagonal().iter().map(|v| v.ln()).sum::<f64>();
        assert_relative_eq!(g.log_det().unwrap(), exact, max_relative = 1e-10);
    }
}

#[test]
fn heat_bath_conditional_matches_quadrature() {
    let region = BoxRegion::with_extents(&[0, 0], &[3, 3]).unwrap();
    let xi = SiteDisorder::new(SiteDistribution::standard_gaussian(), 9);
    let sys = System::new(region, &[0.4, 0.1], &Couplings::uniform(Potential::quadratic(0.7)), &xi, 1.0);
    let heights: Vec<f64> = region.sites().map(|s| 0.3 * s.get(0) as f64 - 0.5 * s.get(1) as f64 + 0.2).collect();
    for f in 0..sys.n_free() {
        let (m, v) = conditional_gaussian(&sys, &heights, f);
        let e0 = sys.local_energy(&heights, f, m);
        let w = |h: f64| (-(sys.local_energy(&heights, f, h) - e0)).exp();
        let scale = v.sqrt();
        let z = integrate_line(w, m, scale, 1e-13).unwrap();
        let mean = integrate_line(|h| h * w(h), m, scale, 1e-13).unwrap() / z;
        let var = integrate_line(|h| (h - m).powi(2) * w(h), m, scale, 1e-13).unwrap() / z;
        assert!((mean - m).abs() < 1e-8, "site {f}: mean {mean} vs {m}");
        assert!((var - v).abs() < 1e-8, "site {f}: variance {var} vs {v}");
    }
}

#[test]
fn one_site_ratio_of_a_gaussian() {
    // ½ Σ_y a(y − φ)² over 4 neighbors at the same height: precision 4a
    for (a, y) in [(0.5, 0.0), (0.5, 1.3), (2.0, -0.4)] {
        let r = one_site_ratio(&Potential::quadratic(a), &[y; 4], 0.0, y).unwrap();
        assert_relative_eq!(r, (2.0 * PI / (4.0 * a)).sqrt(), max_relative = 1e-10);
    }
}

#[test]
fn ball_domain_matches_dense_inverse() {
    let domain = Domain::ball(3.5, 2);
    let sites: Vec<Site> = domain.sites().collect();
    let n = sites.len();
    let mut m = DMatrix::zeros(n, n);
    for (i, s) in sites.iter().enumerate() {
        m[(i, i)] = 4.0;
        for (j, t) in sites.iter().enumerate() {
            if s.sub(t).l1() == 1 {
                m[(i, j)] = -1.0;
            }
        }
    }
    let exact = m.try_inverse().unwrap() * 4.0;
    let g = Greens::new(&domain, Method::Auto).unwrap();
    let col = g.column(&Site::origin(2), Normalization::Walk).unwrap();
    let i0 = domain.index(&Site::origin(2)).unwrap();
    for (j, y) in sites.iter().enumerate() {
        assert_relative_eq!(col.at(&domain, y), exact[(i0, j)], max_relative = 1e-10);
    }
}
