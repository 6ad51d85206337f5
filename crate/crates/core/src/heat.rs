//! Continuous-time heat kernels `H_t = exp(-t (I - K))`.

use crate::chain::MarkovChain;
use crate::linalg::{matrix_power, symmetric_eigen};
use crate::{Error, Real, Result};
use nalgebra::{DMatrix, DVector};

/// How `H_t` is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum HeatMethod {
    /// Spectral synthesis for reversible chains, uniformization otherwise.
    Auto,
    Uniformization,
    Spectral,
}

/// `H_t` at a fixed time together with the stationary law used for densities.
#[derive(Debug, Clone)]
pub struct HeatKernelSnapshot<T: Real> {
    t: T,
    ht: DMatrix<T>,
    pi: DVector<T>,
}

impl<T: Real> HeatKernelSnapshot<T> {
    pub fn t(&self) -> T {
        self.t
    }

    pub fn matrix(&self) -> &DMatrix<T> {
        &self.ht
    }

    /// `h(x, y, t) = H_t(x, y) / pi(y)`.
    pub fn density(&self, x: usize, y: usize) -> T {
        self.ht[(x, y)] / self.pi[y]
    }

    pub fn densities(&self) -> DMatrix<T> {
        let n = self.ht.nrows();
        DMatrix::from_fn(n, n, |x, y| self.density(x, y))
    }

    /// `sup_{x,y} |h(x, y, t) - 1|`.
    pub fn sup_density_deviation(&self) -> T {
        let n = self.ht.nrows();
        let mut best = T::zero();
        for x in 0..n {
            for y in 0..n {
                best = best.max((self.density(x, y) - T::one()).abs());
            }
        }
        best
    }
}

/// Poisson(t) weights `w_k` for `k in [lo, hi]`, normalised to sum 1, with
/// total truncated mass below `tol`.
pub fn poisson_window<T: Real>(t: T, tol: T) -> (usize, Vec<T>) {
    if t <= T::zero() {
        return (0, vec![T::one()]);
    }
    let mode = t.floor().to_f64_lossy() as usize;
    let quarter = tol * T::lit(0.25);
    let mut right = vec![T::one()];
    let mut k = mode;
    loop {
        let w = *right.last().unwrap();
        let r = t / T::from_usize_lossy(k + 1);
        if r < T::one() && w * r / (T::one() - r) < quarter {
            break;
        }
        right.push(w * t / T::from_usize_lossy(k + 1));
        k += 1;
    }
    let mut left = Vec::new();
    let mut w = T::one();
    let mut k = mode;
    while k > 0 {
        let r = T::from_usize_lossy(k) / t;
        if r < T::one() && w * r / (T::one() - r) < quarter {
            break;
        }
        w *= r;
        left.push(w);
        k -= 1;
    }
    let lo = mode - left.len();
    let mut weights: Vec<T> = left.into_iter().rev().collect();
    weights.extend(right);
    let total = weights.iter().fold(T::zero(), |a, &b| a + b);
    for w in &mut weights {
        *w /= total;
    }
    (lo, weights)
}

/// Uniformization series `sum_k Poisson(t)(k) K^k` truncated at Poisson tail `tol`.
pub fn uniformization<T: Real>(kernel: &DMatrix<T>, t: T, tol: T) -> DMatrix<T> {
    let n = kernel.nrows();
    let (lo, weights) = poisson_window(t, tol);
    let mut power = matrix_power(kernel, lo as u64);
    let mut acc = DMatrix::zeros(n, n);
    for (i, &w) in weights.iter().enumerate() {
        if i > 0 {
            power = &power * kernel;
        }
        acc += &power * w;
    }
    acc
}

pub(crate) fn heat_kernel<T: Real>(
    chain: &MarkovChain<T>,
    t: T,
    tol: T,
    method: HeatMethod,
) -> Result<HeatKernelSnapshot<T>> {
    if !(tol > T::zero()) || tol >= T::one() {
        return Err(Error::ToleranceTooLoose(tol.to_f64_lossy()));
    }
    if !(t >= T::zero()) || !t.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "time {t} must be finite and >= 0"
        )));
    }
    let spectral = match method {
        HeatMethod::Auto => chain.is_reversible(),
        HeatMethod::Spectral => {
            if !chain.is_reversible() {
                return Err(Error::NotReversible);
            }
            true
        }
        HeatMethod::Uniformization => false,
    };
    let ht = if spectral {
        SpectralDecomposition::new(chain)?.heat_kernel(t)
    } else {
        uniformization(chain.kernel(), t, tol)
    };
    Ok(HeatKernelSnapshot {
        t,
        ht,
        pi: chain.pi().clone(),
    })
}

/// Eigen-decomposition of the symmetric matrix `D^{1/2} (I - K) D^{-1/2}` of
/// a reversible chain.
///
/// The zero mode is replaced by `sqrt(pi)` exactly, so density deviations
/// `h - 1` are summed over the non-stationary modes only and do not suffer
/// cancellation when they are tiny.
#[derive(Debug, Clone)]
pub struct SpectralDecomposition<T: Real> {
    rates: DVector<T>,
    vectors: DMatrix<T>,
    sqrt_pi: DVector<T>,
}

impl<T: Real> SpectralDecomposition<T> {
    pub fn new(chain: &MarkovChain<T>) -> Result<Self> {
        if !chain.is_reversible() {
            return Err(Error::NotReversible);
        }
        let (mut rates, mut vectors) = symmetric_eigen(chain.symmetrized_laplacian())?;
        let sqrt_pi = chain.pi().map(|p| p.sqrt());
        vectors.set_column(0, &sqrt_pi);
        rates[0] = T::zero();
        Ok(Self {
            rates,
            vectors,
            sqrt_pi,
        })
    }

    /// Eigenvalues of `I - K`, ascending, starting at 0.
    pub fn rates(&self) -> &DVector<T> {
        &self.rates
    }

    pub fn gap(&self) -> T {
        if self.rates.len() > 1 {
            self.rates[1]
        } else {
            T::zero()
        }
    }

    pub fn n(&self) -> usize {
        self.rates.len()
    }

    fn excess_from_weights(&self, weights: &[T]) -> DMatrix<T> {
        let n = self.n();
        let mut scaled = self.vectors.columns(1, n - 1).into_owned();
        for (j, &w) in weights.iter().enumerate() {
            scaled.column_mut(j).scale_mut(w);
        }
        let mut m = &scaled * self.vectors.columns(1, n - 1).transpose();
        for x in 0..n {
            for y in 0..n {
                m[(x, y)] /= self.sqrt_pi[x] * self.sqrt_pi[y];
            }
        }
        m
    }

    fn diagonal_from_weights(&self, weights: &[T]) -> DVector<T> {
        let n = self.n();
        DVector::from_fn(n, |x, _| {
            let s = weights.iter().enumerate().fold(T::zero(), |acc, (j, &w)| {
                let u = self.vectors[(x, j + 1)];
                acc + w * u * u
            });
            s / (self.sqrt_pi[x] * self.sqrt_pi[x])
        })
    }

    fn continuous_weights(&self, t: T) -> Vec<T> {
        self.rates
            .iter()
            .skip(1)
            .map(|&mu| (-t * mu).exp())
            .collect()
    }

    fn discrete_weights(&self, m: u64) -> Vec<T> {
        self.rates
            .iter()
            .skip(1)
            .map(|&mu| pow_u64(T::one() - mu, m))
            .collect()
    }

    /// `h(x, y, t) - 1` for all pairs.
    pub fn density_excess(&self, t: T) -> DMatrix<T> {
        self.excess_from_weights(&self.continuous_weights(t))
    }

    /// `h(x, x, t) - 1` for all states.
    pub fn diagonal_excess(&self, t: T) -> DVector<T> {
        self.diagonal_from_weights(&self.continuous_weights(t))
    }

    /// `K^m(x, y) / pi(y) - 1` for all pairs.
    pub fn discrete_density_excess(&self, m: u64) -> DMatrix<T> {
        self.excess_from_weights(&self.discrete_weights(m))
    }

    pub fn discrete_diagonal_excess(&self, m: u64) -> DVector<T> {
        self.diagonal_from_weights(&self.discrete_weights(m))
    }

    /// `H_t` by spectral synthesis.
    pub fn heat_kernel(&self, t: T) -> DMatrix<T> {
        let n = self.n();
        let excess = self.density_excess(t);
        DMatrix::from_fn(n, n, |x, y| {
            let p = self.sqrt_pi[y] * self.sqrt_pi[y];
            p + p * excess[(x, y)]
        })
    }
}

fn pow_u64<T: Real>(base: T, mut m: u64) -> T {
    let mut result = T::one();
    let mut b = base;
    while m > 0 {
        if m & 1 == 1 {
            result *= b;
        }
        m >>= 1;
        if m > 0 {
            b = b * b;
        }
    }
    result
}
