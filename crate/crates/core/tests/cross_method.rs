//! Modal closed form against the finite-difference simulator on a linear
//! index-1 problem.

use std::f64::consts::PI;
use std::sync::Arc;

use nalgebra::DMatrix;
use pdae_core::eigenbasis::{tensor_modes, BoundarySpec, BoxDomain, FieldFn};
use pdae_core::modal_dae::signal::Signal;
use pdae_core::modal_dae::{field_response, solve_problem, ModalInput, PdaeProblem};
use pdae_core::sim::{simulate, SemilinearModel, SimConfig, SimSetup};

fn fixture() -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>, BoxDomain, Vec<FieldFn>) {
    let e = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 0.0, 0.0]);
    let d = DMatrix::identity(2, 2);
    let a = DMatrix::from_row_slice(2, 2, &[-0.5, 1.0, 0.5, -2.0]);
    let dom = BoxDomain::new(vec![PI, 1.0]).unwrap();
    let initial: Vec<FieldFn> = vec![Arc::new(|z: &[f64]| 1.0 + z[0].cos()), Arc::new(|_: &[f64]| 0.0)];
    (e, d, a, dom, initial)
}

fn discrepancy(nodes: Vec<usize>, dt: f64, t_end: f64) -> f64 {
    let (e, d, a, dom, initial) = fixture();
    let bc = BoundarySpec::neumann(2);
    let basis = tensor_modes(&dom, &bc, 8).unwrap();
    let problem = PdaeProblem {
        e: e.clone(),
        d: d.clone(),
        a: a.clone(),
        b: DMatrix::zeros(2, 1),
        c: DMatrix::identity(2, 2),
        domain: dom.clone(),
        bc: vec![bc.clone()],
        initial: initial.clone(),
        input: ModalInput::Uniform(Signal::zero(1)),
        disturbance: None,
    };
    let modal = solve_problem(&problem, &basis, 8, &[t_end]).unwrap();
    let model = SemilinearModel::linear(e, d, a);
    let setup = SimSetup { domain: dom, bc: vec![bc], nodes, initial };
    let cfg = SimConfig { dt, t_end, ..SimConfig::default() };
    let sim = simulate(&model, &setup, &cfg).unwrap();
    let field = field_response(&basis, &modal.trajectories, &sim.grid).unwrap();
    field[0].max_abs_diff(&sim.final_state)
}

#[test]
fn modal_and_grid_solutions_agree_and_converge() {
    let coarse = discrepancy(vec![17, 5], 0.04, 1.0);
    let fine = discrepancy(vec![33, 9], 0.02, 1.0);
    assert!(fine < 1e-2, "discrepancy {fine:e}");
    assert!(coarse / fine > 3.0, "refinement ratio {}", coarse / fine);
}
