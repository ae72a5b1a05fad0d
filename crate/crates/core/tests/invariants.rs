use proptest::prelude::*;
use rgibbs::disorder::{SiteDisorder, SiteDistribution};
use rgibbs::greens::{Domain, Greens, Normalization};
use rgibbs::lattice::{block_partition, integrate_heights, symmetric_difference_size, BoxRegion, HeightField, Site};
use rgibbs::linalg::Method;
use rgibbs::model::{Couplings, Potential, System};
use rgibbs::sampler::energy_density;
use rgibbs::surface::log_one_site_ratio;
use std::collections::HashSet;

fn small_box() -> impl Strategy<Value = BoxRegion> {
    (1usize..=3)
        .prop_flat_map(|d| (prop::collection::vec(-3i64..3, d), prop::collection::vec(1usize..=4, d)))
        .prop_map(|(lo, ext)| BoxRegion::with_extents(&lo, &ext).unwrap())
}

fn pick(region: &BoxRegion, k: usize) -> Site {
    region.site(k % region.len())
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn green_function_is_symmetric(region in small_box(), i in 0usize..64, j in 0usize..64) {
        let domain = Domain::Box(region);
        let g = Greens::new(&domain, Method::Direct).unwrap();
        let (x, y) = (pick(&region, i), pick(&region, j));
        let gxy = g.column(&x, Normalization::Walk).unwrap().at(&domain, &y);
        let gyx = g.column(&y, Normalization::Walk).unwrap().at(&domain, &x);
        prop_assert!((gxy - gyx).abs() <= 1e-10 * gxy.abs().max(1.0));
        prop_assert!(gxy > 0.0);
    }

    #[test]
    fn green_function_grows_with_the_domain(region in small_box(), grow in prop::collection::vec(0usize..=2, 6), i in 0usize..64, j in 0usize..64) {
        let d = region.dim();
        let lo: Vec<i64> = (0..d).map(|a| region.lo().get(a) - grow[a] as i64).collect();
        let ext: Vec<usize> = (0..d).map(|a| region.extent(a) + grow[a] + grow[a + 3]).collect();
        let outer = BoxRegion::with_extents(&lo, &ext).unwrap();
        let (x, y) = (pick(&region, i), pick(&region, j));
        let small = Domain::Box(region);
        let big = Domain::Box(outer);
        let gs = Greens::new(&small, Method::Direct).unwrap().column(&x, Normalization::Walk).unwrap().at(&small, &y);
        let gb = Greens::new(&big, Method::Direct).unwrap().column(&x, Normalization::Walk).unwrap().at(&big, &y);
        prop_assert!(gs <= gb * (1.0 + 1e-12));
    }

    #[test]
    fn quadratic_form_grows_with_the_domain(region in small_box(), grow in prop::collection::vec(0usize..=2, 6), seed in any::<u64>()) {
        let d = region.dim();
        let lo: Vec<i64> = (0..d).map(|a| region.lo().get(a) - grow[a] as i64).collect();
        let ext: Vec<usize> = (0..d).map(|a| region.extent(a) + grow[a] + grow[a + 3]).collect();
        let outer = BoxRegion::with_extents(&lo, &ext).unwrap();
        let xi = SiteDisorder::new(SiteDistribution::standard_gaussian(), seed);
        let small = Domain::Box(region);
        let big = Domain::Box(outer);
        let qs = Greens::new(&small, Method::Direct).unwrap().quad_form(&xi.values(region.sites()), Normalization::Walk).unwrap();
        let qb = Greens::new(&big, Method::Direct).unwrap().quad_form(&xi.values(outer.sites()), Normalization::Walk).unwrap();
        prop_assert!(qs <= qb * (1.0 + 1e-12) + 1e-12);
    }

    #[test]
    fn shifted_disorder_is_translated(seed in any::<u64>(), s in prop::collection::vec(-50i64..50, 3), v in prop::collection::vec(-50i64..50, 3)) {
        let xi = SiteDisorder::new(SiteDistribution::standard_gaussian(), seed);
        let (s, v) = (Site::new(&s), Site::new(&v));
        prop_assert_eq!(xi.shifted(&v).xi_at(&s), xi.xi_at(&s.sub(&v)));
        prop_assert_eq!(xi.shifted(&v).shifted(&v.neg()).xi_at(&s), xi.xi_at(&s));
    }

    #[test]
    fn gradients_have_zero_curl_and_integrate_back(region in small_box(), seed in any::<u64>(), k in 0usize..64, phi0 in -5.0f64..5.0) {
        let xi = SiteDisorder::new(SiteDistribution::Gaussian { mean: 0.0, variance: 9.0 }, seed);
        let phi = HeightField::from_fn(region, |s| xi.xi_at(s));
        let eta = phi.gradient();
        prop_assert!(eta.max_plaquette_sum().0 < 1e-12);
        let origin = pick(&region, k);
        let back = integrate_heights(&eta, phi0, &origin).unwrap();
        let offset = phi0 - phi.get(&origin).unwrap();
        for (a, b) in back.values().iter().zip(phi.values()) {
            prop_assert!((a - b - offset).abs() < 1e-10);
        }
    }

    #[test]
    fn block_partition_covers_the_cube(big_n in 0usize..9, n in 1usize..10, d in 1usize..=3) {
        prop_assume!(n <= big_n + 1);
        let part = block_partition(big_n, n, d).unwrap();
        let mut seen = HashSet::new();
        for b in part.cubes.iter().chain(&part.slabs) {
            for s in b.sites() {
                prop_assert!(seen.insert(s), "site {:?} covered twice", s);
            }
        }
        let cube = BoxRegion::from_origin(big_n, d);
        prop_assert_eq!(seen.len(), cube.len());
        prop_assert!(seen.iter().all(|s| cube.contains(s)));
    }

    #[test]
    fn symmetric_difference_matches_enumeration(region in small_box(), v in prop::collection::vec(-3i64..=3, 3)) {
        let v = Site::new(&v[..region.dim()]);
        let a: HashSet<Site> = region.sites().collect();
        let b: HashSet<Site> = region.translate(&v).sites().collect();
        prop_assert_eq!(symmetric_difference_size(&region, &v), a.symmetric_difference(&b).count());
    }

    #[test]
    fn one_site_ratio_is_shift_covariant(ys in prop::collection::vec(-2.0f64..2.0, 4), gamma in -2.0f64..2.0, c in -10.0f64..10.0) {
        let v = Potential::quadratic_cosine(0.5, 0.2);
        let base = log_one_site_ratio(&v, &ys, 0.0, gamma).unwrap();
        let moved: Vec<f64> = ys.iter().map(|y| y + c).collect();
        let shifted = log_one_site_ratio(&v, &moved, 0.0, gamma + c).unwrap();
        prop_assert!((base - shifted).abs() < 1e-8);
        prop_assert!(base.is_finite());
    }

    #[test]
    fn planes_have_zero_energy_density(u in prop::collection::vec(-1.0f64..1.0, 2), c in -5.0f64..5.0) {
        let region = BoxRegion::with_extents(&[0, 0], &[4, 5]).unwrap();
        let sys = System::new(region, &u, &Couplings::uniform(Potential::quadratic_cosine(0.5, 0.2)), &SiteDisorder::zero(), 1.0)
            .with_boundary_offset(c);
        let heights: Vec<f64> = region.sites().map(|s| s.dot(&u) + c).collect();
        prop_assert!(energy_density(&sys, &heights).abs() < 1e-12);
    }
}
