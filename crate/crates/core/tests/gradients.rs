mod common;

use common::*;
use trajrec_core::hda::{self, backprop_step};

#[test]
fn analytic_gradients_match_central_differences() {
    let mut r = rng(2024);
    let mut worst: f64 = 0.0;
    for sample in 0..20 {
        let params = gradient_network(sample);
        let input = random_vector(&mut r, 6);
        let omega = random_mask(&mut r, 6);
        let analytic = hda::gradients(&params, &input, &input, &omega).unwrap();
        let numeric = finite_difference(&params, &input, &input, &omega);
        worst = worst.max(max_relative_error(&analytic, &numeric, 1e-6));
    }
    assert!(worst < 1e-5, "max relative error {worst:e}");
}

#[test]
fn masked_target_coordinates_do_not_change_the_gradient() {
    let mut r = rng(7);
    for sample in 0..20 {
        let params = gradient_network(100 + sample);
        let input = random_vector(&mut r, 6);
        let omega = random_mask(&mut r, 6);
        let base = hda::gradients(&params, &input, &input, &omega).unwrap();
        let mut target = input.clone();
        for (t, w) in target.iter_mut().zip(&omega) {
            if *w == 0.0 {
                *t += 123.456;
            }
        }
        let moved = hda::gradients(&params, &input, &target, &omega).unwrap();
        assert_eq!(base, moved);
    }
}

#[test]
fn empty_mask_gives_zero_gradient_and_no_update() {
    let params = gradient_network(3);
    let input = [0.1, 0.9, 0.4, 0.3, 0.7, 0.2];
    let omega = [0.0; 6];
    let g = hda::gradients(&params, &input, &input, &omega).unwrap();
    assert!(g.weights.iter().all(|w| w.as_slice().iter().all(|v| *v == 0.0)));
    assert!(g.biases.iter().all(|b| b.iter().all(|v| *v == 0.0)));
    assert_eq!(backprop_step(&params, &input, &omega, 1e-3).unwrap(), params);
}

#[test]
fn step_moves_against_the_gradient() {
    let params = gradient_network(5);
    let input = [0.2, 0.8, 0.5, 0.1, 0.6, 0.9];
    let omega = [1.0, 1.0, 0.0, 1.0, 1.0, 0.0];
    let lr = 1e-3;
    let g = hda::gradients(&params, &input, &input, &omega).unwrap();
    let next = backprop_step(&params, &input, &omega, lr).unwrap();
    for k in 0..params.weights.len() {
        let expect = params.weights[k].sub(&g.weights[k].scale(lr)).unwrap();
        assert!(next.weights[k].max_abs_diff(&expect).unwrap() < 1e-15);
        for j in 0..params.biases[k].len() {
            assert!((next.biases[k][j] - (params.biases[k][j] - lr * g.biases[k][j])).abs() < 1e-15);
        }
    }
}
