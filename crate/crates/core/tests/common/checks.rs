//! Seeded exactness and equivariance checks. Each returns the first violation.

use super::FixtureRng;
use nalgebra::{DMatrix, DVector};
use plm_core::kernel::{smooth_at, smooth_naive_at, weights};
use plm_core::markov::{regeneration_blocks, simulate_random_walk};
use plm_core::sls::{estimate_g, evaluation_grid, truncated_sls};
use plm_core::{KernelFamily, KernelSpec, SmallSet, TimeSeriesDataset, TruncationSpec};

pub type Check = std::result::Result<(), String>;

fn family(rng: &mut FixtureRng) -> KernelFamily {
    if rng.next_f64() < 0.5 {
        KernelFamily::Uniform
    } else {
        KernelFamily::Epanechnikov
    }
}

fn walk(rng: &mut FixtureRng, n: usize, seed: u64) -> Vec<f64> {
    let sd = rng.range(0.05, 0.5);
    simulate_random_walk(n, sd, 0.0, seed).unwrap()
}

/// Partially linear data with `d` regressors that load on `V`.
fn dataset(
    rng: &mut FixtureRng,
    seed: u64,
    n: usize,
    d: usize,
    noise: f64,
) -> (TimeSeriesDataset, Vec<f64>) {
    let v = walk(rng, n, seed);
    let theta: Vec<f64> = (0..d).map(|_| rng.range(-2.0, 2.0)).collect();
    let x = DMatrix::from_fn(n, d, |t, j| {
        (j as f64 + 1.0) * v[t].sin() + rng.range(-1.0, 1.0)
    });
    let y = (0..n)
        .map(|t| {
            let xb: f64 = (0..d).map(|j| x[(t, j)] * theta[j]).sum();
            xb + v[t] * v[t] + noise * rng.range(-1.0, 1.0)
        })
        .collect();
    (TimeSeriesDataset::new(y, x, v).unwrap(), theta)
}

fn setup(rng: &mut FixtureRng, n: usize) -> (KernelSpec, TruncationSpec) {
    let spec = KernelSpec::new(family(rng), rng.range(0.15, 0.6)).unwrap();
    let trunc =
        TruncationSpec::new(rng.range(0.0, 0.1), SmallSet::new(-1.0, 1.0).unwrap()).unwrap();
    let _ = n;
    (spec, trunc)
}

fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1.0)
}

pub fn weights_sum_to_one(seed: u64) -> Check {
    let mut rng = FixtureRng::new(seed);
    let n = 20 + (rng.next_f64() * 300.0) as usize;
    let v = walk(&mut rng, n, seed);
    let spec = KernelSpec::new(family(&mut rng), rng.range(0.01, 1.0)).unwrap();
    for _ in 0..20 {
        let at = v[(rng.next_f64() * n as f64) as usize] + rng.range(-0.5, 0.5);
        if let Some(w) = weights(&v, at, &spec) {
            let s: f64 = w.iter().sum();
            if (s - 1.0).abs() > 1e-12 {
                return Err(format!("weights sum {s} at v={at}"));
            }
        }
    }
    Ok(())
}

pub fn location_invariance(seed: u64) -> Check {
    let mut rng = FixtureRng::new(seed);
    let (ds, _) = dataset(&mut rng, seed, 400, 2, 1.0);
    let (spec, trunc) = setup(&mut rng, ds.len());
    let c = rng.range(-50.0, 50.0);
    let shifted_y: Vec<f64> = ds.y().iter().map(|y| y + c).collect();
    let shifted = TimeSeriesDataset::new(shifted_y, ds.x().clone(), ds.v().to_vec()).unwrap();
    let (a, b) = match (
        truncated_sls(&ds, &spec, &trunc),
        truncated_sls(&shifted, &spec, &trunc),
    ) {
        (Ok(a), Ok(b)) => (a.theta_hat, b.theta_hat),
        (Err(_), Err(_)) => return Ok(()),
        _ => return Err("shift changed success of the fit".into()),
    };
    for (p, q) in a.iter().zip(&b) {
        if (p - q).abs() > 1e-10 {
            return Err(format!("θ̂ {p} vs shifted {q}, c={c}"));
        }
    }
    Ok(())
}

pub fn regressor_equivariance(seed: u64) -> Check {
    let mut rng = FixtureRng::new(seed);
    let (ds, _) = dataset(&mut rng, seed, 400, 2, 1.0);
    let (spec, trunc) = setup(&mut rng, ds.len());
    let a = loop {
        let a = DMatrix::from_fn(2, 2, |_, _| rng.range(-2.0, 2.0));
        let svd = a.clone().svd(false, false);
        if svd.singular_values.min() > 0.2 * svd.singular_values.max() {
            break a;
        }
    };
    let xa = ds.x() * &a;
    let mapped = TimeSeriesDataset::new(ds.y().to_vec(), xa, ds.v().to_vec()).unwrap();
    let (base, moved) = match (
        truncated_sls(&ds, &spec, &trunc),
        truncated_sls(&mapped, &spec, &trunc),
    ) {
        (Ok(p), Ok(q)) => (p.theta_hat, q.theta_hat),
        (Err(_), Err(_)) => return Ok(()),
        _ => return Err("X -> XA changed success of the fit".into()),
    };
    let expected = a.try_inverse().unwrap() * DVector::from_vec(base);
    for (got, want) in moved.iter().zip(expected.iter()) {
        if !rel_close(*got, *want, 1e-8) {
            return Err(format!("θ̂(XA) {got} vs A⁻¹θ̂ {want}"));
        }
    }
    Ok(())
}

pub fn noiseless_recovery(seed: u64) -> Check {
    let mut rng = FixtureRng::new(seed);
    let d = 1 + (rng.next_f64() * 3.0) as usize;
    let (ds, theta) = dataset(&mut rng, seed, 300, d, 0.0);
    let y: Vec<f64> = (0..ds.len())
        .map(|t| (0..d).map(|j| ds.x()[(t, j)] * theta[j]).sum())
        .collect();
    let ds = TimeSeriesDataset::new(y, ds.x().clone(), ds.v().to_vec()).unwrap();
    let (spec, trunc) = setup(&mut rng, ds.len());
    let fit = match truncated_sls(&ds, &spec, &trunc) {
        Ok(fit) => fit,
        Err(_) => return Ok(()),
    };
    for (got, want) in fit.theta_hat.iter().zip(&theta) {
        if (got - want).abs() > 1e-10 {
            return Err(format!("θ̂ {got} vs θ0 {want}"));
        }
    }
    let lo = ds.v().iter().cloned().fold(f64::INFINITY, f64::min);
    let hi = ds.v().iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let g = estimate_g(&ds, &fit.theta_hat, &evaluation_grid(lo, hi, 50), &spec);
    for (value, ok) in g.values.iter().zip(&g.valid) {
        if *ok && value.abs() > 1e-10 {
            return Err(format!("ĝ {value} on noiseless data"));
        }
    }
    Ok(())
}

pub fn block_identity(seed: u64) -> Check {
    let mut rng = FixtureRng::new(seed);
    let n = 100 + (rng.next_f64() * 5000.0) as usize;
    let v = walk(&mut rng, n, seed);
    let c = SmallSet::new(-rng.range(0.1, 1.0), rng.range(0.1, 1.0)).unwrap();
    let f = |x: f64| 1.0 + x * x + x.cos();
    let blocks = match regeneration_blocks(&v, f, c) {
        Ok(b) => b,
        Err(_) => return Ok(()),
    };
    let direct: f64 = v.iter().map(|&x| f(x)).sum();
    if !rel_close(blocks.total(), direct, 1e-10) {
        return Err(format!(
            "Z0 + ΣZk + tail = {} vs S_n = {direct}",
            blocks.total()
        ));
    }
    Ok(())
}

pub fn fast_matches_naive(seed: u64) -> Check {
    let mut rng = FixtureRng::new(seed);
    let n = 10 + (rng.next_f64() * 400.0) as usize;
    let v = walk(&mut rng, n, seed);
    let targets = DMatrix::from_fn(n, 2, |_, _| rng.range(-10.0, 10.0));
    let spec = KernelSpec::new(family(&mut rng), rng.range(0.01, 1.0)).unwrap();
    let points: Vec<f64> = (0..60)
        .map(|_| rng.range(-3.0, 3.0))
        .chain(v.iter().cloned())
        .collect();
    let fast = smooth_at(&v, &targets, &points, &spec);
    let naive = smooth_naive_at(&v, &targets, &points, &spec);
    if fast.valid != naive.valid {
        return Err("validity flags differ".into());
    }
    for (a, b) in fast.values.iter().zip(naive.values.iter()) {
        if !rel_close(*a, *b, 1e-10) {
            return Err(format!("fast {a} vs naive {b}"));
        }
    }
    Ok(())
}

/// Every check with its label.
pub type NamedCheck = (&'static str, fn(u64) -> Check);

pub const ALL: [NamedCheck; 6] = [
    ("weights sum to one", weights_sum_to_one),
    ("location invariance in Y", location_invariance),
    ("X -> XA equivariance", regressor_equivariance),
    ("noiseless recovery", noiseless_recovery),
    ("block decomposition identity", block_identity),
    ("fast path equals naive path", fast_matches_naive),
];
