//! Data generators: the MA(1) design with optional mean shifts, and the
//! sparse covariance perturbation.

use nalgebra::{DMatrix, SymmetricEigen};
use ndarray::{Array2, ShapeBuilder};
use rand::seq::index;
use rand::Rng;
use rand_distr::{Distribution, Gamma, StandardNormal};

use crate::data::TwoSampleData;
use crate::error::{Error, Result};

/// Distribution of the i.i.d. innovations `Z_{k,i}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Innovation {
    #[default]
    Normal,
    /// Centred Gamma with shape 4; see [`GammaReading`] for the scale.
    Gamma,
}

/// How the second Gamma parameter is read.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GammaReading {
    /// Scale 1/2, so the centred innovation has unit variance.
    #[default]
    UnitVariance,
    /// Scale 2, centred but not rescaled (variance 16).
    Scale2,
}

#[derive(Debug, Clone, Copy)]
pub(crate) enum Sampler {
    Normal,
    Gamma { dist: Gamma<f64>, mean: f64 },
}

impl Sampler {
    pub(crate) fn new(innovation: Innovation, reading: GammaReading) -> Self {
        match innovation {
            Innovation::Normal => Sampler::Normal,
            Innovation::Gamma => {
                let scale = match reading {
                    GammaReading::UnitVariance => 0.5,
                    GammaReading::Scale2 => 2.0,
                };
                Sampler::Gamma {
                    dist: Gamma::new(4.0, scale).expect("valid gamma parameters"),
                    mean: 4.0 * scale,
                }
            }
        }
    }

    pub(crate) fn draw<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match self {
            Sampler::Normal => rng.sample(StandardNormal),
            Sampler::Gamma { dist, mean } => dist.sample(rng) - mean,
        }
    }

    pub(crate) fn fill<R: Rng + ?Sized>(&self, rng: &mut R, len: usize) -> Vec<f64> {
        (0..len).map(|_| self.draw(rng)).collect()
    }
}

/// Mean difference pattern of the second group.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeanShift {
    None,
    /// `floor(0.15 p)` leading coordinates at `sqrt(0.3 / sqrt(p))`.
    Dense,
    /// `ceil(p^0.05)` leading coordinates at `0.3 sqrt(ln p)`.
    Sparse,
}

pub const DENSE_FRACTION: f64 = 0.15;
pub const DENSE_ETA: f64 = 0.3;
pub const SPARSE_MEAN_EXPONENT: f64 = 0.05;
pub const SPARSE_MEAN_SCALE: f64 = 0.3;
/// MA coefficient of the second group under the dense covariance alternative.
pub const DENSE_THETA: f64 = 0.2;
pub const SPARSE_COV_SCALE: f64 = 0.3;
/// Upper-triangle positions of the sparse perturbation (mirrored to 8 entries).
pub const SPARSE_COV_POSITIONS: usize = 4;

/// Mean vector of the second group; the first group has mean zero.
pub fn mean_vector(shift: MeanShift, p: usize) -> Vec<f64> {
    let pf = p as f64;
    let (count, value) = match shift {
        MeanShift::None => (0, 0.0),
        MeanShift::Dense => ((DENSE_FRACTION * pf).floor() as usize, (DENSE_ETA / pf.sqrt()).sqrt()),
        MeanShift::Sparse => (
            (pf.powf(SPARSE_MEAN_EXPONENT).ceil() as usize).min(p),
            SPARSE_MEAN_SCALE * pf.ln().sqrt(),
        ),
    };
    let mut mu = vec![0.0; p];
    mu[..count].fill(value);
    mu
}

fn column_major(n: usize, p: usize, f: impl Fn(usize, usize) -> f64) -> Array2<f64> {
    let mut buf = Vec::with_capacity(n * p);
    for i in 0..p {
        for u in 0..n {
            buf.push(f(u, i));
        }
    }
    Array2::from_shape_vec((n, p).f(), buf).expect("shape matches buffer")
}

/// `X_ui = mu1_i + Z_ui + theta1 Z_u,i+1` and the analogous `Y` rows, with
/// `(n1 + n2) x (p + 1)` innovations drawn row by row.
#[allow(clippy::too_many_arguments)]
pub(crate) fn generate_ma1<R: Rng + ?Sized>(
    n1: usize,
    n2: usize,
    mu1: &[f64],
    mu2: &[f64],
    theta1: f64,
    theta2: f64,
    sampler: &Sampler,
    rng: &mut R,
) -> Result<TwoSampleData> {
    let p = mu1.len();
    let w = p + 1;
    let z = sampler.fill(rng, (n1 + n2) * w);
    let x = column_major(n1, p, |u, i| mu1[i] + z[u * w + i] + theta1 * z[u * w + i + 1]);
    let y = column_major(n2, p, |v, i| {
        let r = (n1 + v) * w;
        mu2[i] + z[r + i] + theta2 * z[r + i + 1]
    });
    TwoSampleData::new(x, y)
}

/// Sparse symmetric perturbation `U` and the matching pair
/// `Sigma1 = (1 + eps) I`, `Sigma2 = (1 + eps) I + U`.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseCovPerturbation {
    pub p: usize,
    /// Upper-triangle positions `(i, j)`, `i < j`, sorted.
    pub positions: Vec<(usize, usize)>,
    /// Magnitude of every nonzero entry, `0.3 sqrt(ln p^2)`.
    pub delta: f64,
    pub epsilon: f64,
    /// Coordinates touched by `U`, sorted.
    active: Vec<usize>,
    /// `Sigma2^{1/2}` restricted to the active coordinates.
    sqrt_block: DMatrix<f64>,
}

fn sym_sqrt(m: &DMatrix<f64>) -> DMatrix<f64> {
    let eig = SymmetricEigen::new(m.clone());
    let d = DMatrix::from_diagonal(&eig.eigenvalues.map(|l| l.max(0.0).sqrt()));
    &eig.eigenvectors * d * eig.eigenvectors.transpose()
}

impl SparseCovPerturbation {
    /// Draws 4 distinct strictly-upper positions uniformly.
    pub fn draw<R: Rng + ?Sized>(p: usize, rng: &mut R) -> Result<Self> {
        let slots = p * (p.saturating_sub(1)) / 2;
        if slots < SPARSE_COV_POSITIONS {
            return Err(Error::Precondition(format!(
                "sparse covariance perturbation needs p >= 4, got p = {p}"
            )));
        }
        let positions = index::sample(rng, slots, SPARSE_COV_POSITIONS)
            .into_iter()
            .map(|k| upper_position(p, k))
            .collect();
        Self::from_positions(p, positions, SPARSE_COV_SCALE * (2.0 * (p as f64).ln()).sqrt())
    }

    pub fn from_positions(p: usize, mut positions: Vec<(usize, usize)>, delta: f64) -> Result<Self> {
        positions.sort_unstable();
        positions.dedup();
        if let Some(&(i, j)) = positions.iter().find(|&&(i, j)| i >= j || j >= p) {
            return Err(Error::Precondition(format!("({i}, {j}) is not a strictly-upper position for p = {p}")));
        }
        let mut active: Vec<usize> = positions.iter().flat_map(|&(i, j)| [i, j]).collect();
        active.sort_unstable();
        active.dedup();
        let k = active.len();
        let local = |c: usize| active.binary_search(&c).expect("active coordinate");
        let mut u = DMatrix::<f64>::zeros(k, k);
        for &(i, j) in &positions {
            let (a, b) = (local(i), local(j));
            u[(a, b)] = delta;
            u[(b, a)] = delta;
        }
        // Coordinates outside the active block contribute eigenvalue 1 to
        // U + I, which the min with 1 absorbs.
        let lambda_min = if k == 0 {
            1.0
        } else {
            SymmetricEigen::new(&u + DMatrix::identity(k, k)).eigenvalues.min()
        };
        let epsilon = lambda_min.min(1.0).abs() + 0.05;
        let sigma2_block = u + DMatrix::identity(k, k) * (1.0 + epsilon);
        let min_eig = if k == 0 { 1.0 } else { SymmetricEigen::new(sigma2_block.clone()).eigenvalues.min() };
        if min_eig.is_nan() || min_eig <= 0.0 {
            return Err(Error::Calibration(format!(
                "perturbed covariance is not positive definite (smallest eigenvalue {min_eig})"
            )));
        }
        Ok(Self {
            p,
            positions,
            delta,
            epsilon,
            sqrt_block: if k == 0 { sigma2_block } else { sym_sqrt(&sigma2_block) },
            active,
        })
    }

    /// `U` as a dense matrix.
    pub fn u(&self) -> DMatrix<f64> {
        let mut u = DMatrix::zeros(self.p, self.p);
        for &(i, j) in &self.positions {
            u[(i, j)] = self.delta;
            u[(j, i)] = self.delta;
        }
        u
    }

    pub fn sigma1(&self) -> DMatrix<f64> {
        DMatrix::identity(self.p, self.p) * (1.0 + self.epsilon)
    }

    pub fn sigma2(&self) -> DMatrix<f64> {
        self.sigma1() + self.u()
    }

    /// `Sigma2^{1/2}` as a dense matrix.
    pub fn sigma2_sqrt(&self) -> DMatrix<f64> {
        let mut s = DMatrix::identity(self.p, self.p) * (1.0 + self.epsilon).sqrt();
        for (a, &i) in self.active.iter().enumerate() {
            for (b, &j) in self.active.iter().enumerate() {
                s[(i, j)] = self.sqrt_block[(a, b)];
            }
        }
        s
    }

    /// Applies `Sigma2^{1/2}` to one observation in place.
    fn transform_sigma2(&self, z: &mut [f64]) {
        let zs: Vec<f64> = self.active.iter().map(|&i| z[i]).collect();
        let s = (1.0 + self.epsilon).sqrt();
        z.iter_mut().for_each(|v| *v *= s);
        for (a, &i) in self.active.iter().enumerate() {
            z[i] = (0..zs.len()).map(|b| self.sqrt_block[(a, b)] * zs[b]).sum();
        }
    }
}

/// Maps `k` in `0..p(p-1)/2` to the `k`-th strictly-upper position in
/// row-major order.
fn upper_position(p: usize, mut k: usize) -> (usize, usize) {
    for i in 0..p {
        let row = p - 1 - i;
        if k < row {
            return (i, i + 1 + k);
        }
        k -= row;
    }
    unreachable!("index beyond the upper triangle")
}

/// `X_u = Sigma1^{1/2} Z_u + mu1`, `Y_v = Sigma2^{1/2} Z_{n1+v} + mu2`.
pub(crate) fn generate_sparse_cov<R: Rng + ?Sized>(
    n1: usize,
    n2: usize,
    mu1: &[f64],
    mu2: &[f64],
    pert: &SparseCovPerturbation,
    sampler: &Sampler,
    rng: &mut R,
) -> Result<TwoSampleData> {
    let p = mu1.len();
    let s1 = (1.0 + pert.epsilon).sqrt();
    let z = sampler.fill(rng, (n1 + n2) * p);
    let x = column_major(n1, p, |u, i| mu1[i] + s1 * z[u * p + i]);
    let mut yz = z[n1 * p..].to_vec();
    for row in yz.chunks_mut(p) {
        pert.transform_sigma2(row);
    }
    let y = column_major(n2, p, |v, i| mu2[i] + yz[v * p + i]);
    TwoSampleData::new(x, y)
}
