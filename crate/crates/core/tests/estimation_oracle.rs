mod common;

use common::{bayes_cases, bayes_cases_with_spread, grid_posterior, oracle_sigma_a, oracle_sigma_r, reference_covariance_update};
use nalgebra::Matrix2;
use transformloc_core::estimation::{correct, Belief};
use transformloc_core::sensing::{predict_observation, RangeBearing};
use transformloc_core::world::{Pose, Vec2};

fn ekf(case: &common::BayesCase) -> Belief {
    let c = case.prior_cov;
    let prior = Belief::new(
        Vec2::new(case.prior_mean.0, case.prior_mean.1),
        Matrix2::new(c[0][0], c[0][1], c[1][0], c[1][1]),
    );
    let amav = Pose::new(0.0, 0.0, 0.0);
    let zp = predict_observation(&amav, &prior.mean).unwrap();
    let (sr, sa) = (oracle_sigma_r(zp.range), oracle_sigma_a(zp.bearing));
    let r = Matrix2::new(sr * sr, 0.0, 0.0, sa * sa);
    let z = RangeBearing {
        range: case.z_range,
        bearing: case.z_bearing,
    };
    correct(&prior, &z, &amav, &r).unwrap()
}

#[test]
fn ekf_matches_grid_bayes_when_nearly_linear() {
    // Prior spreads of 1-3 cm keep the linearization error negligible, so any
    // disagreement points at the filter itself.
    for case in &bayes_cases_with_spread(2024, 20, 0.01, 0.03) {
        let post = ekf(case);
        let ((gx, gy), gcov) = grid_posterior(case, 0.002);
        let dm = (post.mean - Vec2::new(gx, gy)).norm();
        let gtr = gcov[0][0] + gcov[1][1];
        let dt = (post.trace() - gtr).abs() / gtr;
        assert!(dm < 2e-3, "mean off by {dm} for {case:?}");
        assert!(dt < 0.05, "trace off by {:.1} % for {case:?}", 100.0 * dt);
    }
}

#[test]
fn covariance_update_matches_textbook_formula() {
    for case in bayes_cases(7, 50) {
        let post = ekf(&case);
        let amav = Pose::new(0.0, 0.0, 0.0);
        let mean = Vec2::new(case.prior_mean.0, case.prior_mean.1);
        let zp = predict_observation(&amav, &mean).unwrap();
        let reference = reference_covariance_update(
            &case.prior_cov,
            case.prior_mean,
            (0.0, 0.0, 0.0),
            oracle_sigma_r(zp.range),
            oracle_sigma_a(zp.bearing),
        );
        for i in 0..2 {
            for j in 0..2 {
                assert!((post.cov[(i, j)] - reference[i][j]).abs() < 1e-12, "{:?} vs {:?}", post.cov, reference);
            }
        }
    }
}

