mod common;

use adaptive_engine::cli::{JointSettings, RunConfig};
use adaptive_engine::controller::ControllerSpec;
use adaptive_engine::engine::steady_currents;
use adaptive_engine::joint::{
    build_joint_generator, joint_steady_state_from, JointSpec, JointSteadyState,
};
use adaptive_engine::units::BOLTZMANN_EV_PER_K;
use common::*;
use std::sync::OnceLock;

fn settings() -> (RunConfig, JointSettings) {
    let cfg = RunConfig::default_config();
    let joint = cfg.joint.clone().expect("default config has a joint block");
    (cfg, joint)
}

fn run(spec: &JointSpec<f64>, ctrl: &ControllerSpec<f64>) -> JointSteadyState<f64> {
    let (cfg, s) = settings();
    let g = build_joint_generator(&s.engine, &cfg.baths, ctrl, spec).unwrap();
    joint_steady_state_from(&g, ctrl, spec, &s.options, g.vacuum_state()).unwrap()
}

fn coupled() -> &'static JointSteadyState<f64> {
    static CELL: OnceLock<JointSteadyState<f64>> = OnceLock::new();
    CELL.get_or_init(|| {
        let (_, s) = settings();
        run(&s.spec, &s.controller)
    })
}

/// Gaussian oracle written from the equipartition width, not the library's density.
fn boltzmann(ctrl: &ControllerSpec<f64>) -> impl Fn(f64) -> f64 {
    let mu = -ctrl.force / ctrl.kappa;
    let s = (BOLTZMANN_EV_PER_K * ctrl.temperature / ctrl.kappa).sqrt();
    move |x| gaussian(x, mu, s)
}

#[test]
fn uncoupled_marginal_is_the_boltzmann_gaussian() {
    let (_, s) = settings();
    let spec = JointSpec {
        coupling_scale: 0.0,
        ..s.spec
    };
    let st = run(&spec, &s.controller);
    let oracle = boltzmann(&s.controller);
    let reference: Vec<f64> = st.positions.iter().map(|&x| oracle(x)).collect();
    let err = relative_l2(&st.marginal, &reference);
    assert!(err < 5e-2, "relative L2 {err}");
    assert!((err - st.marginal_l2_error(&oracle)).abs() < 1e-12);
}

#[test]
fn applied_force_moves_the_peak() {
    let (_, s) = settings();
    let ctrl = ControllerSpec {
        force: -s.controller.kappa,
        ..s.controller
    };
    let spec = JointSpec {
        coupling_scale: 0.0,
        ..s.spec
    };
    let st = run(&spec, &ctrl);
    let k = (0..st.marginal.len())
        .max_by(|&a, &b| st.marginal[a].total_cmp(&st.marginal[b]))
        .unwrap();
    assert!(
        (st.positions[k] - 1.0).abs() <= st.grid_spacing,
        "peak at {}",
        st.positions[k]
    );
}

#[test]
fn conditional_power_follows_the_steady_state_landscape() {
    let (cfg, s) = settings();
    let st = coupled();
    let scaled = s.engine.with_coupling_scale(s.spec.coupling_scale);
    let numeric = st.conditional_j12(&scaled, &cfg.baths).unwrap();
    let sigma = (BOLTZMANN_EV_PER_K * s.controller.temperature / s.controller.kappa).sqrt();
    let mu = -s.controller.force / s.controller.kappa;
    let mut worst: f64 = 0.0;
    for (k, &x) in st.positions.iter().enumerate() {
        if (x - mu).abs() > 2.0 * sigma {
            continue;
        }
        let analytic = oracle_j12(&scaled, &cfg.baths, x);
        assert!(
            (analytic / steady_currents(&scaled, &cfg.baths, x).unwrap().j12 - 1.0).abs() < 1e-9
        );
        let num = numeric[k].expect("marginal is resolvable within two widths");
        worst = worst.max((num - analytic).abs() / analytic.abs());
    }
    assert!(worst < 0.1, "max relative error {worst}");
}

#[test]
fn coupled_state_is_physical_and_self_consistent() {
    let st = coupled();
    assert!(st.negativity < 1e-4, "negativity {}", st.negativity);
    assert!((st.state.trace() - 1.0).abs() < 1e-6);
    assert!(st.state.hermiticity_error() < 1e-10);
    let direct = st.state.engine_populations();
    let rebuilt = st.reconstructed_engine_populations();
    for i in 0..3 {
        assert!(
            (direct[i] - rebuilt[i]).abs() < 1e-3,
            "{direct:?} vs {rebuilt:?}"
        );
    }
}
