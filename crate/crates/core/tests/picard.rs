mod common;

use common::*;
use dfde::model::{Lipschitz, Trajectory};
use dfde::picard::{
    apply_operator, extend_horizon, solve_picard, solve_segment, InitialGuess, PicardConfig,
};

fn cfg() -> PicardConfig {
    PicardConfig::new(1e-10, 200)
}

#[test]
fn homogeneous_equation_keeps_the_history_value() {
    let p = expr_problem(0.4, 1.0, 2.0, &["0"], &[3.0]).with_lipschitz(Lipschitz::Constant(0.0));
    let sol = solve_picard(&p, 20, &cfg()).unwrap();
    assert!(sol.trajectory.nodes().all(|(_, _, x)| x == [3.0]));
    for r in &sol.reports {
        assert_eq!(r.iterations, 1);
        assert_eq!(r.final_distance, 0.0);
    }
}

#[test]
fn linear_decay_matches_the_mittag_leffler_solution() {
    let p = linear_decay();
    let sol = solve_picard(&p, 200, &cfg()).unwrap();
    let err = max_rel_error(&sol.trajectory, linear_decay_exact);
    println!("linear decay, m = 200: max relative error {err:e}");
    assert!(err <= 5e-3);
}

#[test]
fn pure_delay_matches_the_method_of_steps_by_hand() {
    let p = pure_delay();
    let sol = solve_picard(&p, 200, &cfg()).unwrap();
    let err = max_rel_error(&sol.trajectory, pure_delay_exact);
    println!("pure delay, m = 200: max relative error {err:e}");
    assert!(err <= 5e-3);
    let x1 = sol.trajectory.at(200)[0];
    assert!((x1 - 2.128_379_167_095_512_6).abs() < 5e-3 * x1);
    assert!(sol.reports.iter().all(|r| r.iterations <= 2));
}

#[test]
fn operator_examples() {
    // f = 1, φ(0) = 0, first segment: t^α/Γ(α+1).
    let p = expr_problem(0.5, 1.0, 1.0, &["1"], &[0.0]);
    let grid = p.grid(50).unwrap();
    let known = Trajectory::from_history(grid, &p.history).unwrap();
    let candidate = vec![vec![0.0]; 51];
    let image = apply_operator(&p, &known, 0, &candidate).unwrap();
    for (i, v) in image.iter().enumerate() {
        let t = grid.time(i as isize);
        assert!((v[0] - t.sqrt() / GAMMA_3_2).abs() < 1e-12);
    }

    // Pure delay: the image does not depend on the candidate.
    let p = pure_delay();
    let grid = p.grid(40).unwrap();
    let known = Trajectory::from_history(grid, &p.history).unwrap();
    let a = apply_operator(&p, &known, 0, &vec![vec![1.0]; 41]).unwrap();
    let mut other = vec![vec![-7.0]; 41];
    other[0] = vec![1.0];
    let b = apply_operator(&p, &known, 0, &other).unwrap();
    assert_eq!(a, b);
    for (i, v) in a.iter().enumerate() {
        let t = grid.time(i as isize);
        assert!((v[0] - (1.0 + t.sqrt() / GAMMA_3_2)).abs() < 1e-12);
    }
}

#[test]
fn decay_contraction_stays_below_the_weighted_bound() {
    let p = linear_decay();
    let grid = p.grid(100).unwrap();
    let known = Trajectory::from_history(grid, &p.history).unwrap();
    let (_, report) = solve_segment(&p, &known, 0, &cfg()).unwrap();
    println!("{report:?}");
    assert_eq!(report.beta_k, 2.5);
    assert!(report.contraction_estimate <= 0.4 + 0.1);
    assert!(report.fixed_point_defect <= 1e-10);
}

#[test]
fn initial_guess_does_not_change_the_fixed_point() {
    for p in [linear_decay(), pure_delay(), linear_delayed(3.0)] {
        let a = solve_picard(&p, 100, &cfg()).unwrap().trajectory;
        let b = solve_picard(&p, 100, &cfg().with_initial(InitialGuess::Zero))
            .unwrap()
            .trajectory;
        let gap = a
            .as_flat()
            .iter()
            .zip(b.as_flat())
            .map(|(u, v)| (u - v).abs())
            .fold(0.0, f64::max);
        assert!(gap <= 1e-9, "{gap:e}");
    }
}

#[test]
fn history_on_the_open_interval_is_read() {
    use dfde::model::HistoryFunction;
    let mut p = pure_delay();
    let a = solve_picard(&p, 50, &cfg()).unwrap().trajectory;
    p.history = HistoryFunction::Samples {
        times: vec![-1.0, -0.5, 0.0],
        values: vec![vec![0.0], vec![2.0], vec![1.0]],
    };
    let b = solve_picard(&p, 50, &cfg()).unwrap().trajectory;
    assert_eq!(a.at(0), b.at(0));
    assert!((1..=50).any(|j| a.at(j) != b.at(j)));
}

#[test]
fn estimated_lipschitz_is_flagged() {
    let p = linear_delayed(2.0).with_lipschitz(Lipschitz::Estimate);
    let sol = solve_picard(&p, 40, &cfg()).unwrap();
    for r in &sol.reports {
        assert!(r.lipschitz_estimated);
        assert!((r.max_l - 1.0).abs() < 1e-6);
    }
}

#[test]
fn horizon_extension_coincides() {
    for p in [linear_decay(), pure_delay(), counterexample(2.0)] {
        let sol = solve_picard(&p, 100, &cfg()).unwrap();
        let ext = extend_horizon(&p, &sol.trajectory, 4.0, &cfg()).unwrap();
        println!("coincidence defect {:e}", ext.coincidence_defect);
        assert!(ext.coincidence_defect <= 1e-9);
        assert_eq!(ext.solution.trajectory.grid().n_total(), 400);
    }
}

#[test]
fn non_convergence_is_reported() {
    let p = linear_decay();
    let err = solve_picard(&p, 50, &PicardConfig::new(1e-14, 2)).unwrap_err();
    assert!(matches!(
        err,
        dfde::picard::PicardError::NonConvergence { segment: 0, .. }
    ));
}

#[test]
fn weighted_rule_meets_the_contraction_iteration_budget() {
    use dfde::picard::StopRule;
    let p = linear_delayed(2.0);
    let sol = solve_picard(&p, 100, &cfg().with_stop(StopRule::Weighted)).unwrap();
    for r in &sol.reports {
        let budget = ((1e-10 / r.initial_distance).ln() / 0.5f64.ln()).ceil() + 2.0;
        assert!(r.iterations as f64 <= budget, "{r:?}");
        assert!(r.contraction_estimate <= r.max_l / r.beta_k + 0.1);
    }
}
