//! Direct term-by-term evaluation of the estimators from their defining
//! sums, written without the production smoothing or solver code.

#![allow(dead_code, clippy::needless_range_loop)]

pub mod checks;
pub mod equivalence;

pub fn kernel(family: &str, u: f64) -> f64 {
    if u.abs() > 1.0 {
        return 0.0;
    }
    match family {
        "uniform" => 0.5,
        "epanechnikov" => 0.75 * (1.0 - u * u),
        _ => unreachable!(),
    }
}

/// `K_{v,h}(x) = K((x - v) / h) / h`.
pub fn scaled_kernel(family: &str, x: f64, v: f64, h: f64) -> f64 {
    kernel(family, (x - v) / h) / h
}

/// `w_nt(v)` for every t, or `None` for an empty window.
pub fn weights(family: &str, vs: &[f64], v: f64, h: f64) -> Option<Vec<f64>> {
    let denom: f64 = vs.iter().map(|&x| scaled_kernel(family, x, v, h)).sum();
    if denom == 0.0 {
        return None;
    }
    Some(
        vs.iter()
            .map(|&x| scaled_kernel(family, x, v, h) / denom)
            .collect(),
    )
}

pub struct Fixture {
    pub family: &'static str,
    pub y: Vec<f64>,
    /// Row-major, `x[t][j]`.
    pub x: Vec<Vec<f64>>,
    pub v: Vec<f64>,
    pub h: f64,
    pub b_n: f64,
    pub c: (f64, f64),
}

impl Fixture {
    pub fn n(&self) -> usize {
        self.y.len()
    }

    pub fn d(&self) -> usize {
        self.x[0].len()
    }

    fn tilde(&self) -> (Vec<Vec<f64>>, Vec<f64>) {
        let n = self.n();
        let d = self.d();
        let mut xt = vec![vec![0.0; d]; n];
        let mut yt = vec![0.0; n];
        for t in 0..n {
            let w = weights(self.family, &self.v, self.v[t], self.h).expect("self in window");
            yt[t] = self.y[t] - (0..n).map(|k| w[k] * self.y[k]).sum::<f64>();
            for j in 0..d {
                xt[t][j] = self.x[t][j] - (0..n).map(|k| w[k] * self.x[k][j]).sum::<f64>();
            }
        }
        (xt, yt)
    }

    /// `N(n)`: visits to `C` minus one.
    pub fn n_blocks(&self) -> usize {
        self.v
            .iter()
            .filter(|&&x| self.c.0 <= x && x <= self.c.1)
            .count()
            - 1
    }

    pub fn p_n(&self, v: f64) -> f64 {
        let nb = self.n_blocks() as f64;
        self.v
            .iter()
            .map(|&x| scaled_kernel(self.family, x, v, self.h))
            .sum::<f64>()
            / nb
    }

    pub fn mask(&self) -> Vec<bool> {
        self.v
            .iter()
            .map(|&x| self.p_n(x).abs() > self.b_n)
            .collect()
    }

    fn normal_equations(&self, mask: &[bool]) -> (Vec<Vec<f64>>, Vec<f64>) {
        let (xt, yt) = self.tilde();
        let d = self.d();
        let mut a = vec![vec![0.0; d]; d];
        let mut b = vec![0.0; d];
        for t in 0..self.n() {
            let f = if mask[t] { 1.0 } else { 0.0 };
            for i in 0..d {
                b[i] += xt[t][i] * f * yt[t] * f;
                for j in 0..d {
                    a[i][j] += xt[t][i] * f * xt[t][j] * f;
                }
            }
        }
        (a, b)
    }

    /// Smallest pivot magnitude relative to the largest diagonal entry.
    pub fn conditioning(&self, mask: &[bool]) -> f64 {
        let (a, _) = self.normal_equations(mask);
        let scale = (0..self.d()).map(|i| a[i][i]).fold(0.0, f64::max);
        if scale == 0.0 {
            return 0.0;
        }
        let (_, min_pivot) = gauss_solve(a, vec![0.0; self.d()]);
        min_pivot / scale
    }

    pub fn theta_bar(&self) -> Vec<f64> {
        let (a, b) = self.normal_equations(&vec![true; self.n()]);
        gauss_solve(a, b).0
    }

    pub fn theta_hat(&self) -> Vec<f64> {
        let (a, b) = self.normal_equations(&self.mask());
        gauss_solve(a, b).0
    }

    pub fn g(&self, theta: &[f64], v: f64) -> Option<f64> {
        let w = weights(self.family, &self.v, v, self.h)?;
        Some(
            (0..self.n())
                .map(|t| {
                    let xb: f64 = (0..self.d()).map(|j| self.x[t][j] * theta[j]).sum();
                    w[t] * (self.y[t] - xb)
                })
                .sum(),
        )
    }

    /// Leave-one-out criterion averaged over retained observations with a
    /// nonempty leave-one-out window.
    pub fn cv(&self) -> Option<f64> {
        let theta = self.theta_hat();
        let mask = self.mask();
        let n = self.n();
        let r: Vec<f64> = (0..n)
            .map(|t| self.y[t] - (0..self.d()).map(|j| self.x[t][j] * theta[j]).sum::<f64>())
            .collect();
        let mut total = 0.0;
        let mut used = 0;
        for t in 0..n {
            if !mask[t] {
                continue;
            }
            let denom: f64 = (0..n)
                .filter(|&k| k != t)
                .map(|k| scaled_kernel(self.family, self.v[k], self.v[t], self.h))
                .sum();
            if denom == 0.0 {
                continue;
            }
            let g_loo: f64 = (0..n)
                .filter(|&k| k != t)
                .map(|k| scaled_kernel(self.family, self.v[k], self.v[t], self.h) / denom * r[k])
                .sum();
            total += (r[t] - g_loo).powi(2);
            used += 1;
        }
        (used > 0).then(|| total / used as f64)
    }
}

/// Gaussian elimination with partial pivoting. Returns the solution and the
/// smallest pivot magnitude.
pub fn gauss_solve(mut a: Vec<Vec<f64>>, mut b: Vec<f64>) -> (Vec<f64>, f64) {
    let d = b.len();
    let mut min_pivot = f64::INFINITY;
    for col in 0..d {
        let p = (col..d)
            .max_by(|&i, &j| a[i][col].abs().total_cmp(&a[j][col].abs()))
            .unwrap();
        a.swap(col, p);
        b.swap(col, p);
        min_pivot = min_pivot.min(a[col][col].abs());
        for row in col + 1..d {
            let f = a[row][col] / a[col][col];
            for k in col..d {
                a[row][k] -= f * a[col][k];
            }
            b[row] -= f * b[col];
        }
    }
    let mut x = vec![0.0; d];
    for i in (0..d).rev() {
        let s: f64 = (i + 1..d).map(|k| a[i][k] * x[k]).sum();
        x[i] = (b[i] - s) / a[i][i];
    }
    (x, min_pivot)
}

/// SplitMix64 stream for fixture generation, independent of the library RNG API.
pub struct FixtureRng(u64);

impl FixtureRng {
    pub fn new(seed: u64) -> Self {
        Self(seed)
    }

    pub fn next_f64(&mut self) -> f64 {
        self.0 = self.0.wrapping_add(0x9e3779b97f4a7c15);
        let mut z = self.0;
        z = (z ^ (z >> 30)).wrapping_mul(0xbf58476d1ce4e5b9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94d049bb133111eb);
        z ^= z >> 31;
        (z >> 11) as f64 / (1u64 << 53) as f64
    }

    pub fn range(&mut self, lo: f64, hi: f64) -> f64 {
        lo + (hi - lo) * self.next_f64()
    }
}

/// Random small fixture with `n` in 5..=8 and `d` in {1, 2}.
pub fn random_fixture(rng: &mut FixtureRng) -> Fixture {
    let n = 5 + (rng.next_f64() * 4.0) as usize;
    let d = 1 + (rng.next_f64() * 2.0) as usize;
    let family = if rng.next_f64() < 0.5 {
        "uniform"
    } else {
        "epanechnikov"
    };
    let mut level = 0.0;
    let v: Vec<f64> = (0..n)
        .map(|_| {
            level += rng.range(-0.8, 0.8);
            level
        })
        .collect();
    let x: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| rng.range(-2.0, 2.0)).collect())
        .collect();
    let y = (0..n)
        .map(|t| x[t].iter().sum::<f64>() + v[t] + rng.range(-1.0, 1.0))
        .collect();
    Fixture {
        family,
        y,
        x,
        v,
        h: rng.range(0.4, 1.6),
        b_n: rng.range(0.0, 0.25),
        c: (-10.0, 10.0),
    }
}
