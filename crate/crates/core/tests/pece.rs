mod common;

use std::sync::{Arc, Mutex};

use common::*;
use dfde::model::{DelayProblem, FnRhs, HistoryFunction, Lipschitz};
use dfde::pece::{solve_pece, PeceConfig, PeceError};
use dfde::picard::{solve_picard, PicardConfig};

#[test]
fn homogeneous_equation_stays_constant() {
    let p = expr_problem(0.3, 1.0, 2.0, &["0", "0"], &[2.0, -1.0]);
    let traj = solve_pece(&p, 16, &PeceConfig::default()).unwrap();
    assert!(traj.nodes().all(|(_, _, x)| x == [2.0, -1.0]));
}

#[test]
fn linear_decay_matches_the_mittag_leffler_solution() {
    let traj = solve_pece(&linear_decay(), 200, &PeceConfig::default()).unwrap();
    let err = max_rel_error(&traj, linear_decay_exact);
    println!("pece linear decay m = 200: {err:e}");
    assert!(err <= 5e-3);
}

#[test]
fn agrees_with_picard_on_the_pure_delay_problem() {
    let p = pure_delay();
    let a = solve_pece(&p, 200, &PeceConfig::default()).unwrap();
    let b = solve_picard(&p, 200, &PicardConfig::default())
        .unwrap()
        .trajectory;
    let gap = a
        .as_flat()
        .iter()
        .zip(b.as_flat())
        .map(|(u, v)| (u - v).abs())
        .fold(0.0, f64::max);
    assert!(gap <= 5e-3, "{gap:e}");
}

#[test]
fn smooth_forcing_converges_with_order_at_least_one() {
    // x = t^{1+α} solves D^α x = Γ(2+α) t − t^{1+α} + x.
    let alpha = 0.6;
    let g = statrs::function::gamma::gamma(2.0 + alpha);
    let src = format!("{g} * t - t^{} + x", 1.0 + alpha);
    let p = expr_problem(alpha, 1.0, 1.0, &[&src], &[0.0]).with_lipschitz(Lipschitz::Constant(1.0));
    let errs: Vec<f64> = [20usize, 40, 80, 160]
        .iter()
        .map(|&m| {
            let traj = solve_pece(&p, m, &PeceConfig::default()).unwrap();
            traj.nodes()
                .filter(|(j, _, _)| *j >= 0)
                .map(|(_, t, x)| (x[0] - t.powf(1.0 + alpha)).abs())
                .fold(0.0, f64::max)
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        println!("observed order {order:.3}");
        assert!(order >= 1.0);
    }
}

#[test]
fn delayed_argument_is_read_from_finished_nodes() {
    let log: Arc<Mutex<Vec<(f64, f64)>>> = Arc::new(Mutex::new(Vec::new()));
    let sink = Arc::clone(&log);
    let rhs = FnRhs::new(1, move |t: f64, x: &[f64], y: &[f64], out: &mut [f64]| {
        sink.lock().unwrap().push((t, y[0]));
        out[0] = -x[0] + y[0] * t.cos();
    });
    let history = HistoryFunction::Samples {
        times: vec![-1.0, 0.0],
        values: vec![vec![0.5], vec![1.0]],
    };
    let p = DelayProblem::new(0.5, 1.0, 3.0, history, Arc::new(rhs))
        .with_lipschitz(Lipschitz::Constant(1.0));
    let traj = solve_pece(&p, 10, &PeceConfig::with_sweeps(2)).unwrap();
    let calls = log.lock().unwrap().clone();
    // Validation samples come first; the march starts at the first t = 0 call after them.
    let start = calls.iter().rposition(|(t, _)| *t == 0.0).unwrap();
    let march = &calls[start..];
    assert!(march.windows(2).all(|w| w[0].0 <= w[1].0));
    for (t, y) in march {
        let j = (t * 10.0).round() as isize;
        assert_eq!(*y, traj.at(j - 10)[0]);
    }
    // One evaluation per node for the history sample plus two sweeps and a final one.
    assert_eq!(march.len(), 1 + 30 * 3);
}

#[test]
fn counterexample_blows_up_with_its_location() {
    let err = solve_pece(&counterexample(30.0), 10, &PeceConfig::default()).unwrap_err();
    match err {
        PeceError::BlowUp { node, t } => {
            println!("blow-up at node {node}, t = {t}");
            assert!(t > 25.0 && t < 28.0);
        }
        other => panic!("expected blow-up, got {other}"),
    }
    // exp(t²) is still finite at t = 10.
    assert!(solve_pece(&counterexample(10.0), 10, &PeceConfig::default()).is_ok());
}

#[test]
fn zero_sweeps_is_rejected() {
    assert!(matches!(
        solve_pece(&linear_decay(), 10, &PeceConfig::with_sweeps(0)),
        Err(PeceError::Config(_))
    ));
}
