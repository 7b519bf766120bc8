//! Production estimators against the direct sums in the parent module.

use super::checks::Check;
use super::{random_fixture, Fixture, FixtureRng};
use nalgebra::DMatrix;
use plm_core::bandwidth::cv_criterion;
use plm_core::sls::{estimate_g, naive_sls, truncated_sls};
use plm_core::{KernelFamily, KernelSpec, SmallSet, TimeSeriesDataset, TruncationSpec};

pub fn to_dataset(f: &Fixture) -> TimeSeriesDataset {
    let flat: Vec<f64> = f.x.iter().flatten().cloned().collect();
    TimeSeriesDataset::new(
        f.y.clone(),
        DMatrix::from_row_slice(f.n(), f.d(), &flat),
        f.v.clone(),
    )
    .unwrap()
}

fn close(what: &str, got: f64, want: f64) -> Check {
    if (got - want).abs() <= 1e-10 * want.abs().max(1.0) {
        Ok(())
    } else {
        Err(format!("{what}: production {got} vs direct {want}"))
    }
}

pub fn compare(f: &Fixture) -> Check {
    let ds = to_dataset(f);
    let family: KernelFamily = f.family.parse().unwrap();
    let spec = KernelSpec::new(family, f.h).unwrap();
    let trunc = TruncationSpec::new(f.b_n, SmallSet::new(f.c.0, f.c.1).unwrap()).unwrap();

    let bar = naive_sls(&ds, &spec).map_err(|e| e.to_string())?;
    for (a, b) in bar.iter().zip(f.theta_bar()) {
        close("θ̄", *a, b)?;
    }

    let fit = truncated_sls(&ds, &spec, &trunc).map_err(|e| e.to_string())?;
    let mask = f.mask();
    if fit.mask != mask {
        return Err(format!("mask {:?} vs {:?}", fit.mask, mask));
    }
    let theta = f.theta_hat();
    for (a, b) in fit.theta_hat.iter().zip(&theta) {
        close("θ̂", *a, *b)?;
    }

    let grid: Vec<f64> = (0..9).map(|i| f.v[0] - 2.0 + 0.6 * i as f64).collect();
    let g = estimate_g(&ds, &fit.theta_hat, &grid, &spec);
    for (i, &v) in grid.iter().enumerate() {
        match f.g(&theta, v) {
            Some(want) => {
                if !g.valid[i] {
                    return Err(format!("ĝ flagged invalid at {v}"));
                }
                close("ĝ", g.values[i], want)?;
            }
            None if g.valid[i] => return Err(format!("ĝ valid at empty window {v}")),
            None => {}
        }
    }

    match (cv_criterion(&ds, f.h, family, &trunc), f.cv()) {
        (Ok(got), Some(want)) => close("CV(h)", got.value, want),
        (Err(_), None) => Ok(()),
        (got, want) => Err(format!("CV availability differs: {got:?} vs {want:?}")),
    }
}

/// Compares `count` well-conditioned random fixtures drawn from `seed`.
pub fn sweep(seed: u64, count: usize) -> Check {
    let mut rng = FixtureRng::new(seed);
    let mut accepted = 0;
    for _ in 0..count * 100 {
        let f = random_fixture(&mut rng);
        if f.conditioning(&f.mask()) < 1e-6 || f.conditioning(&vec![true; f.n()]) < 1e-6 {
            continue;
        }
        compare(&f)?;
        accepted += 1;
        if accepted == count {
            return Ok(());
        }
    }
    Err(format!("only {accepted} usable fixtures"))
}
