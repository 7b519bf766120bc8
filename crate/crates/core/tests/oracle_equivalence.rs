mod common;

use common::equivalence::{compare, sweep};
use common::Fixture;

#[test]
fn hand_fixture() {
    let f = Fixture {
        family: "uniform",
        y: vec![1.0, 3.0, 2.0, 5.0, 4.0],
        x: vec![vec![0.5], vec![1.5], vec![-1.0], vec![2.0], vec![0.0]],
        v: vec![0.0, 0.5, 1.0, 2.5, 3.0],
        h: 0.75,
        b_n: 0.0,
        c: (-1.0, 1.0),
    };
    compare(&f).unwrap();
}

#[test]
fn fifty_random_fixtures() {
    sweep(0x5eed, 50).unwrap();
}

#[test]
fn other_seeds() {
    for seed in 1..20 {
        sweep(seed, 50).unwrap();
    }
}
