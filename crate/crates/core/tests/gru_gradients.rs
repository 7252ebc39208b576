mod common;

use moseg::gru::{GruDims, GruParams};

const DIMS: GruDims = GruDims {
    hidden: 2,
    steps: 5,
    head: 3,
};

#[test]
fn analytic_gradients_match_central_differences() {
    for draw in 0..20u64 {
        let scale = [0.1, 0.5, 1.0][draw as usize % 3];
        let p = GruParams::<f64>::uniform(DIMS, scale, draw);
        let batch = common::random_pairs(4, DIMS.steps, 1000 + draw);
        let worst = common::worst_gradient_error(&batch, &p, 1e-4);
        assert!(worst < 1e-4, "draw {draw}: relative error {worst:e}");
    }
}

#[test]
fn larger_configuration_gradients() {
    let dims = GruDims {
        hidden: 4,
        steps: 9,
        head: 6,
    };
    let p = GruParams::<f64>::uniform(dims, 0.7, 99);
    let batch = common::random_pairs(3, dims.steps, 7);
    assert!(common::worst_gradient_error(&batch, &p, 1e-4) < 1e-4);
}
