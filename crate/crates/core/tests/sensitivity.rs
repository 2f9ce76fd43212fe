use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use tasep_lk::domain_wall::solve_wall;
use tasep_lk::sensitivity::*;
use tasep_lk::{ModelParams, WallSolution};

/// Walls away from every singular set: `|C|, |D|, eps > 1e-3`, `K > 1.001`,
/// and with the regime unchanged under the finite-difference steps.
fn interior_points(
    seed: u64,
    upper_regime: bool,
    count: usize,
) -> Vec<(ModelParams, WallSolution)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::new();
    while out.len() < count {
        let k = rng.random_range(1.01..8.0);
        let od = rng.random_range(0.02..0.5);
        let alpha = rng.random_range(0.0..0.5);
        let split = 1.0 / (k + 1.0);
        let beta = if upper_regime {
            rng.random_range(split..0.5)
        } else {
            rng.random_range(0.0..split)
        };
        let Ok(params) = ModelParams::from_k(alpha, beta, k, od) else {
            continue;
        };
        let Ok(wall) = solve_wall(&params) else {
            continue;
        };
        let h = helpers(&params, wall.eps());
        if h.c.abs() < 1e-3 || h.d.abs() < 1e-3 || wall.eps() < 1e-3 {
            continue;
        }
        if wall.x_s < 1e-3 || wall.x_s > 1.0 - 1e-3 {
            continue;
        }
        if Parameter::ALL
            .iter()
            .any(|&p| finite_difference(&params, p, p.default_step()).is_err())
        {
            continue;
        }
        out.push((params, wall));
    }
    out
}

#[test]
fn analytic_derivatives_match_finite_differences() {
    for upper in [true, false] {
        for (params, _) in interior_points(7 + upper as u64, upper, 25) {
            for p in Parameter::ALL {
                let r = finite_difference(&params, p, p.default_step()).unwrap();
                assert!(r.rel_gap_xs <= 1e-3, "{params:?} {r:?}");
                if p == Parameter::Alpha {
                    assert_eq!(
                        r.analytic_eps.signum(),
                        r.fd_eps.signum(),
                        "{params:?} {r:?}"
                    );
                    let squared = r.alt_analytic_eps.unwrap();
                    assert_eq!(squared.signum(), r.fd_eps.signum());
                } else {
                    assert!(r.rel_gap_eps <= 1e-3, "{params:?} {r:?}");
                }
            }
        }
    }
}

#[test]
fn derivative_signs() {
    for upper in [true, false] {
        for (params, wall) in interior_points(100 + upper as u64, upper, 40) {
            assert!(dxs_dalpha(&params, &wall).unwrap() <= 0.0);
            assert!(dxs_dbeta(&params, &wall).unwrap() >= 0.0);
            assert!(deps_dbeta(&params, &wall).unwrap() <= 0.0);
            let de = deps_domega(&params, &wall).unwrap();
            if upper {
                assert!(de >= 0.0, "{params:?}");
            } else {
                assert!(de <= 0.0, "{params:?}");
            }
            if upper && params.k() >= 3.0 {
                assert!(dxs_dk(&params, &wall).unwrap() <= 0.0, "{params:?}");
                assert!(deps_dk(&params, &wall).unwrap() >= 0.0, "{params:?}");
            }
            if dxs_domega_predicts_decrease(&params, &wall) {
                assert!(dxs_domega(&params, &wall).unwrap() <= 0.0);
            }
            if !upper && params.k() > 3.0 && dxs_dk_condition_slack(&params, &wall).unwrap() >= 0.0
            {
                assert!(dxs_dk(&params, &wall).unwrap() <= 0.0, "{params:?}");
            }
        }
    }
}

#[test]
fn helper_sign_tables() {
    for (params, wall) in interior_points(200, true, 40) {
        let h = helpers(&params, wall.eps());
        assert!(h.a <= 0.0 && h.a + h.b > 0.0 && h.b >= 0.0);
        assert!(
            h.c >= 0.0 && h.d <= 0.0 && h.e >= 0.0 && h.f <= 0.0,
            "{params:?} {h:?}"
        );
    }
    for (params, wall) in interior_points(201, false, 40) {
        let h = helpers(&params, wall.eps());
        assert!(h.b >= 0.0);
        assert!(
            h.c <= 0.0 && h.d <= 0.0 && h.e >= 0.0 && h.f >= 0.0,
            "{params:?} {h:?}"
        );
    }
}

#[test]
fn squared_factor_variant_is_off_by_k_plus_one() {
    for (params, wall) in interior_points(300, true, 10) {
        let exact = deps_dalpha(&params, &wall).unwrap();
        let variant = deps_dalpha_squared_factor(&params, &wall).unwrap();
        assert!((exact / variant - (params.k() + 1.0)).abs() < 1e-9);
    }
}
