//! Direct enumeration of the multi-index sums behind the mean and
//! covariance statistics. Quadratic or quartic in the sample size, so only
//! usable on tiny inputs.
#![allow(dead_code)]

use hdpe::TwoSampleData;
use ndarray::ArrayView2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A brute-force value and the magnitude of the terms that produced it.
#[derive(Debug, Clone, Copy)]
pub struct Enumerated {
    pub value: f64,
    pub scale: f64,
}

impl Enumerated {
    /// `|got - value| / |value|`; falls back to the term magnitude when the
    /// enumerated value is exactly zero.
    pub fn rel_err(&self, got: f64) -> f64 {
        let denom = if self.value != 0.0 { self.value.abs() } else { self.scale };
        if denom == 0.0 {
            got.abs()
        } else {
            (got - self.value).abs() / denom
        }
    }
}

#[derive(Default)]
struct Sum {
    value: f64,
    scale: f64,
}

impl Sum {
    fn add(&mut self, v: f64) {
        self.value += v;
        self.scale += v.abs();
    }
}

fn combine(parts: &[(f64, Sum)]) -> Enumerated {
    Enumerated {
        value: parts.iter().map(|(c, s)| c * s.value).sum(),
        scale: parts.iter().map(|(c, s)| c.abs() * s.scale).sum(),
    }
}

/// Within-group trace piece (`A_ij` for X, `B_ij` for Y).
pub fn within(m: ArrayView2<'_, f64>, i: usize, j: usize) -> Enumerated {
    let n = m.nrows();
    let x = |u: usize, c: usize| m[[u, c]];
    let (mut s2, mut s3, mut s4) = (Sum::default(), Sum::default(), Sum::default());
    for u in 0..n {
        for v in 0..n {
            if v == u {
                continue;
            }
            s2.add(x(u, i) * x(v, i) * x(u, j) * x(v, j));
            for k in 0..n {
                if k == u || k == v {
                    continue;
                }
                s3.add(x(u, i) * x(v, i) * x(v, j) * x(k, j));
                for l in 0..n {
                    if l == u || l == v || l == k {
                        continue;
                    }
                    s4.add(x(u, i) * x(v, i) * x(k, j) * x(l, j));
                }
            }
        }
    }
    let nf = n as f64;
    let d2 = nf * (nf - 1.0);
    let d3 = d2 * (nf - 2.0);
    let d4 = d3 * (nf - 3.0);
    combine(&[(1.0 / d2, s2), (-2.0 / d3, s3), (1.0 / d4, s4)])
}

/// Cross-group trace piece `C_ij`.
pub fn cross(xm: ArrayView2<'_, f64>, ym: ArrayView2<'_, f64>, i: usize, j: usize) -> Enumerated {
    let (n1, n2) = (xm.nrows(), ym.nrows());
    let x = |u: usize, c: usize| xm[[u, c]];
    let y = |u: usize, c: usize| ym[[u, c]];
    let (mut t1, mut t2, mut t3, mut t4) = (Sum::default(), Sum::default(), Sum::default(), Sum::default());
    for u in 0..n1 {
        for v in 0..n2 {
            t1.add(x(u, i) * y(v, i) * x(u, j) * y(v, j));
        }
    }
    for u in 0..n1 {
        for k in 0..n1 {
            if k == u {
                continue;
            }
            for v in 0..n2 {
                t2.add(x(u, i) * y(v, i) * y(v, j) * x(k, j));
            }
        }
    }
    for u in 0..n2 {
        for k in 0..n2 {
            if k == u {
                continue;
            }
            for v in 0..n1 {
                t3.add(y(u, i) * x(v, i) * x(v, j) * y(k, j));
            }
        }
    }
    for u in 0..n1 {
        for k in 0..n1 {
            if k == u {
                continue;
            }
            for v in 0..n2 {
                for l in 0..n2 {
                    if l == v {
                        continue;
                    }
                    t4.add(x(u, i) * y(v, i) * x(k, j) * y(l, j));
                }
            }
        }
    }
    let (f1, f2) = (n1 as f64, n2 as f64);
    combine(&[
        (1.0 / (f1 * f2), t1),
        (-1.0 / (f1 * f2 * (f1 - 1.0)), t2),
        (-1.0 / (f1 * f2 * (f2 - 1.0)), t3),
        (1.0 / (f1 * f2 * (f1 - 1.0) * (f2 - 1.0)), t4),
    ])
}

/// `(A_ij, B_ij, C_ij, T_ij)`.
pub fn pair(data: &TwoSampleData, i: usize, j: usize) -> [Enumerated; 4] {
    let a = within(data.x(), i, j);
    let b = within(data.y(), i, j);
    let c = cross(data.x(), data.y(), i, j);
    let t = Enumerated {
        value: a.value + b.value - 2.0 * c.value,
        scale: a.scale + b.scale + 2.0 * c.scale,
    };
    [a, b, c, t]
}

/// Coordinate piece `M_i` of the mean statistic, from its three double sums.
pub fn mean_piece(data: &TwoSampleData, i: usize) -> Enumerated {
    let (xm, ym) = (data.x(), data.y());
    let (n1, n2) = (xm.nrows(), ym.nrows());
    let (mut xx, mut yy, mut xy) = (Sum::default(), Sum::default(), Sum::default());
    for u in 0..n1 {
        for v in 0..n1 {
            if u != v {
                xx.add(xm[[u, i]] * xm[[v, i]]);
            }
        }
    }
    for u in 0..n2 {
        for v in 0..n2 {
            if u != v {
                yy.add(ym[[u, i]] * ym[[v, i]]);
            }
        }
    }
    for u in 0..n1 {
        for v in 0..n2 {
            xy.add(xm[[u, i]] * ym[[v, i]]);
        }
    }
    let (f1, f2) = (n1 as f64, n2 as f64);
    combine(&[(1.0 / (f1 * (f1 - 1.0)), xx), (1.0 / (f2 * (f2 - 1.0)), yy), (-2.0 / (f1 * f2), xy)])
}

/// Trace estimates `(A, B, C)` summed over all ordered pairs.
pub fn traces(data: &TwoSampleData) -> [Enumerated; 3] {
    let mut out = [Enumerated { value: 0.0, scale: 0.0 }; 3];
    for i in 0..data.p() {
        for j in 0..data.p() {
            let [a, b, c, _] = pair(data, i, j);
            for (o, e) in out.iter_mut().zip([a, b, c]) {
                o.value += e.value;
                o.scale += e.scale;
            }
        }
    }
    out
}

/// Random instance with entries uniform on `[-2, 2]` plus a per-column offset.
pub fn random_instance(rng: &mut ChaCha8Rng, n1: usize, n2: usize, p: usize) -> TwoSampleData {
    let offsets: Vec<f64> = (0..p).map(|_| rng.random_range(-1.0..1.0)).collect();
    let mut draw = |n: usize| {
        (0..n)
            .map(|_| (0..p).map(|c| offsets[c] + rng.random_range(-2.0..2.0)).collect())
            .collect::<Vec<Vec<f64>>>()
    };
    let x = draw(n1);
    let y = draw(n2);
    TwoSampleData::from_rows(&x, &y).unwrap()
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
