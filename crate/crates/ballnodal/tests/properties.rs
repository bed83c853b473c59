use proptest::prelude::*;

use ballnodal::critical::{find_rho0, BISECTION_WIDTH};
use ballnodal::format::sig17;
use ballnodal::geometry::{bubble, projected_bubble_approx, BubbleParams, Point};
use ballnodal::pde::{graded_nodes, AxiGrid, Operator};
use ballnodal::profile::{
    classify_boundary, phi_boundary_normal_derivative, phi_field, psi, BoundaryKind, ProfileSpec,
};
use ballnodal::reduced::{
    alpha, beta, big_f, big_m, capital_lambda, chi, fibered_point, grad_f, little_f, little_m,
    m_prime, ReducedConfig,
};
use ballnodal::Error;

/// `ρ` strictly inside `(ρ₀, 1)`, given as a fraction of the interval.
fn admissible(n: usize, t: f64) -> f64 {
    let r0 = find_rho0(n, BISECTION_WIDTH).unwrap();
    r0 + 1e-3 + t * (1.0 - 2e-3 - r0)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn lambda_solves_its_quadratic(n in 3usize..=20, t in 0.0..1.0f64) {
        let rho = admissible(n, t);
        let (a, b) = (alpha(rho, n).unwrap(), beta(rho, n).unwrap());
        let l = capital_lambda(rho, n).unwrap();
        prop_assert!(l > 0.0);
        prop_assert!((l * l + b * l - a).abs() <= 1e-12 * (a.abs() + b * b).max(1.0));
    }

    #[test]
    fn fibered_point_is_stationary_in_scales(n in 3usize..=20, t in 0.0..1.0f64, c in 0.01..10.0f64) {
        let rho = admissible(n, t);
        let cfg = ReducedConfig::new(n, c).unwrap();
        let fp = fibered_point(rho, &cfg).unwrap();
        prop_assert!((fp.lambda - fp.cap_lambda * fp.mu).abs() <= 1e-14 * fp.lambda);
        let g = grad_f(&fp.reduced(), &cfg).unwrap();
        let scale = c / fp.lambda.min(fp.mu);
        prop_assert!(g[0].abs() <= 1e-10 * scale && g[1].abs() <= 1e-10 * scale);
        let f = big_f(&fp.reduced(), &cfg).unwrap();
        let closed = 1.5 * c - c * (fp.lambda * fp.mu * fp.mu).ln();
        prop_assert!((f - closed).abs() <= 1e-12 * closed.abs().max(1.0));
    }

    #[test]
    fn scales_grow_with_root_of_constant(n in 3usize..=20, t in 0.0..1.0f64, c in 0.01..10.0f64) {
        let rho = admissible(n, t);
        let unit = fibered_point(rho, &ReducedConfig::unit(n).unwrap()).unwrap();
        let fp = fibered_point(rho, &ReducedConfig::new(n, c).unwrap()).unwrap();
        prop_assert!((fp.mu - c.sqrt() * unit.mu).abs() <= 1e-13 * fp.mu);
        prop_assert!((fp.lambda - c.sqrt() * unit.lambda).abs() <= 1e-13 * fp.lambda);
    }

    #[test]
    fn derivative_of_f_is_two_mu_squared_chi(n in 3usize..=12, t in 0.02..0.98f64) {
        let rho = admissible(n, t);
        let cfg = ReducedConfig::unit(n).unwrap();
        let h = 1e-6;
        let fd = (little_f(rho + h, &cfg).unwrap() - little_f(rho - h, &cfg).unwrap()) / (2.0 * h);
        let mu = fibered_point(rho, &cfg).unwrap().mu;
        let exact = 2.0 * mu * mu * chi(rho, n).unwrap();
        prop_assert!((fd - exact).abs() <= 1e-5 * exact.abs().max(1e-3), "{} vs {}", fd, exact);
    }

    #[test]
    fn psi_is_even_and_increasing_in_latitude(n in 3usize..=20, t in 0.0..1.0f64, x in 0.0..0.99f64) {
        let rho = admissible(n, t);
        let a = psi(rho, x, n).unwrap();
        prop_assert_eq!(a, psi(rho, -x, n).unwrap());
        // Rounding of the cancelling terms is of order eps·Λ.
        let noise = 1e-14 * capital_lambda(rho, n).unwrap();
        prop_assert!(psi(rho, x + 1e-2, n).unwrap() > a - noise);
        prop_assert!(little_m(rho, n).unwrap() <= a && a <= big_m(rho, n).unwrap());
    }

    #[test]
    fn m_decreases(n in 3usize..=20, t in 0.0..1.0f64) {
        prop_assert!(m_prime(admissible(n, t), n).unwrap() < 0.0);
    }

    #[test]
    fn classification_follows_m_and_big_m(n in 3usize..=20, t in 0.0..1.0f64) {
        let rho = admissible(n, t);
        if let Ok(c) = classify_boundary(rho, n) {
            match c.kind {
                BoundaryKind::NoSignChangePositive => prop_assert!(c.m_value > 0.0),
                BoundaryKind::NoSignChangeNegative => prop_assert!(c.big_m_value < 0.0),
                BoundaryKind::ChangesSign => {
                    prop_assert!(c.m_value < 0.0 && c.big_m_value > 0.0);
                    prop_assert!(psi(rho, c.zero_latitudes[1], n).unwrap().abs() < 1e-10 * c.big_m_value);
                }
            }
        }
    }

    #[test]
    fn assembled_normal_derivative_is_psi(n in 3usize..=20, t in 0.0..1.0f64, x in -1.0..=1.0f64) {
        let rho = admissible(n, t);
        let spec = ProfileSpec::new(rho, n).unwrap();
        let a = phi_boundary_normal_derivative(&spec, x).unwrap();
        let b = (n as f64 - 2.0) * psi(rho, x, n).unwrap();
        prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0), "{} vs {}", a, b);
    }

    #[test]
    fn projection_lowers_the_bubble(n in 3usize..=8, delta in 1e-3..0.2f64, xi in -0.8..0.8f64, s in -0.9..0.9f64, r in 0.0..0.4f64) {
        prop_assume!(s * s + r * r < 1.0);
        let p = BubbleParams::new(delta, Point::on_axis(xi, n)).unwrap();
        let x = Point::meridian(s, r, n);
        let (u, pu) = (bubble(&x, &p), projected_bubble_approx(&x, &p));
        prop_assert!(pu < u);
    }

    #[test]
    fn graded_axes_are_increasing(n in 5usize..200, c in 0.0..1.0f64, a in 1e-5..0.05f64, hmax in 0.02..0.3f64) {
        // Too few nodes for the requested spacing is reported, never papered over.
        let x = match graded_nodes(n, &[(c, a)], hmax) {
            Ok(x) => x,
            Err(e) => {
                prop_assert!(matches!(e, Error::Domain(_)));
                prop_assert!((n - 1) as f64 * hmax < 1.0 + 1e-12);
                return Ok(());
            }
        };
        prop_assert_eq!(x.len(), n);
        prop_assert_eq!(x[0], 0.0);
        prop_assert_eq!(x[n - 1], 1.0);
        prop_assert!(x.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn quadratics_are_reproduced_on_graded_grids(n in 3usize..=8, c in 0.1..0.9f64, a in 1e-3..0.05f64) {
        let g = AxiGrid::graded(65, 33, &[(0.0, a), (c, a)], &[(0.0, a)], 0.1).unwrap();
        let v = g.sample(|s, r| 1.0 - s * s - r * r);
        let target = 2.0 * n as f64;
        prop_assert!(Operator::new(&g, n).apply(&v).iter().all(|x| (x - target).abs() < 1e-7 * target));
    }

    #[test]
    fn sig17_round_trips(x in proptest::num::f64::NORMAL) {
        prop_assert_eq!(sig17(x).parse::<f64>().unwrap(), x);
    }
}

#[test]
fn limit_profile_is_even_in_s() {
    let spec = ProfileSpec::new(0.67, 4).unwrap();
    let f = phi_field(&spec, (41, 21)).unwrap();
    let n = f.s_grid.len();
    for i in 0..n {
        for j in 0..f.r_grid.len() {
            assert_eq!(f.mask[i][j], f.mask[n - 1 - i][j]);
            if f.mask[i][j] {
                let (a, b) = (f.values[i][j], f.values[n - 1 - i][j]);
                assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
            }
        }
    }
}
