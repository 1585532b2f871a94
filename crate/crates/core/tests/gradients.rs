mod common;

use common::{classifier_fd, generator_fd};
use namerec::generator::{lstm_step, LstmParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn classifier_gradient_matches_finite_differences() {
    for seed in 0..10 {
        let r = classifier_fd(seed);
        assert!(r.checked > 0);
        assert!(r.max_rel_err < 1e-4, "seed {seed}: rel err {}", r.max_rel_err);
    }
}

#[test]
fn generator_gradient_matches_finite_differences() {
    for seed in 0..10 {
        let r = generator_fd(seed);
        assert!(r.checked > 500, "checked only {}", r.checked);
        assert!(r.max_rel_err < 1e-4, "seed {seed}: rel err {}", r.max_rel_err);
    }
}

/// One step against the gate equations written out by hand.
#[test]
fn single_step_matches_gate_equations() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let p = LstmParams::init(3, 4, &mut rng);
    let x: Vec<f64> = (0..3).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let h: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let c: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let (h1, c1) = lstm_step(&p, &x, &h, &c);
    // c' = f⊙c + i⊙g and h' = o⊙tanh(c'), recomputed by hand
    let gate = |k: usize, j: usize| {
        let mut z = p.bias[k][j];
        for (a, xa) in x.iter().enumerate() {
            z += xa * p.input[k].get(a, j);
        }
        for (a, ha) in h.iter().enumerate() {
            z += ha * p.recurrent[k].get(a, j);
        }
        z
    };
    let sig = |z: f64| 1.0 / (1.0 + (-z).exp());
    for j in 0..4 {
        let (i, f, o, g) = (sig(gate(0, j)), sig(gate(1, j)), sig(gate(2, j)), gate(3, j).tanh());
        let cj = f * c[j] + i * g;
        assert!((cj - c1[j]).abs() < 1e-12);
        assert!((o * cj.tanh() - h1[j]).abs() < 1e-12);
    }
}
