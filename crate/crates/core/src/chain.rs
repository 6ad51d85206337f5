//! Finite Markov chains: validation, stationary law, adjoints and Dirichlet forms.

use crate::heat::{self, HeatKernelSnapshot, HeatMethod, SpectralDecomposition};
use crate::linalg::{self, matrix_power, scc_count, support_lists, symmetric_part};
use crate::{Error, Real, Result};
use nalgebra::{DMatrix, DVector};

/// Validation tolerances used when building a chain.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainOptions {
    pub row_sum_tol: f64,
    pub stationarity_tol: f64,
    pub reversibility_tol: f64,
    /// Entries at or below this value do not count as edges of the support graph.
    pub support_threshold: f64,
}

impl Default for ChainOptions {
    fn default() -> Self {
        Self {
            row_sum_tol: 1e-9,
            stationarity_tol: 1e-10,
            reversibility_tol: 1e-12,
            support_threshold: 1e-15,
        }
    }
}

/// An irreducible row-stochastic kernel together with its stationary law.
#[derive(Debug, Clone)]
pub struct MarkovChain<T: Real> {
    kernel: DMatrix<T>,
    pi: DVector<T>,
    pi_star: T,
    reversible: bool,
    holding: T,
    neighbors: Vec<Vec<usize>>,
    labels: Option<Vec<String>>,
    options: ChainOptions,
}

/// Validates `kernel` and solves for its stationary distribution.
pub fn build_chain<T: Real>(kernel: DMatrix<T>) -> Result<MarkovChain<T>> {
    MarkovChain::new(kernel)
}

fn validate_kernel<T: Real>(kernel: &mut DMatrix<T>, opts: &ChainOptions) -> Result<()> {
    let (rows, cols) = kernel.shape();
    if rows != cols {
        return Err(Error::NotSquare { rows, cols });
    }
    if rows == 0 {
        return Err(Error::EmptyKernel);
    }
    let row_tol = T::tol(opts.row_sum_tol);
    for x in 0..rows {
        let mut sum = T::zero();
        for y in 0..cols {
            let v = kernel[(x, y)];
            if !v.is_finite() || v < T::zero() {
                return Err(Error::InvalidEntry {
                    row: x,
                    col: y,
                    value: v.to_f64_lossy(),
                });
            }
            sum += v;
        }
        if (sum - T::one()).abs() > row_tol {
            return Err(Error::NotStochastic {
                row: x,
                sum: sum.to_f64_lossy(),
            });
        }
        if (sum - T::one()).abs() > T::EPSILON * T::from_usize_lossy(cols) {
            for y in 0..cols {
                kernel[(x, y)] /= sum;
            }
        }
    }
    let adj = support_lists(kernel, T::lit(opts.support_threshold));
    let components = scc_count(&adj);
    if components != 1 {
        return Err(Error::Reducible { components });
    }
    Ok(())
}

fn stationary_residual<T: Real>(kernel: &DMatrix<T>, pi: &DVector<T>) -> T {
    let moved = kernel.tr_mul(pi);
    (moved - pi).amax()
}

fn solve_stationary<T: Real>(kernel: &DMatrix<T>) -> Result<DVector<T>> {
    let n = kernel.nrows();
    let mut a = kernel.transpose() - DMatrix::identity(n, n);
    for j in 0..n {
        a[(n - 1, j)] = T::one();
    }
    let mut rhs = DVector::zeros(n);
    rhs[n - 1] = T::one();
    let lu = a.clone().lu();
    let mut pi = lu
        .solve(&rhs)
        .ok_or_else(|| Error::EigensolveFailure("singular stationary system".into()))?;
    for _ in 0..3 {
        let r = &rhs - &a * &pi;
        match lu.solve(&r) {
            Some(c) => pi += c,
            None => break,
        }
    }
    Ok(pi)
}

impl<T: Real> MarkovChain<T> {
    pub fn new(kernel: DMatrix<T>) -> Result<Self> {
        Self::with_options(kernel, ChainOptions::default())
    }

    pub fn with_options(mut kernel: DMatrix<T>, options: ChainOptions) -> Result<Self> {
        validate_kernel(&mut kernel, &options)?;
        let pi = solve_stationary(&kernel)?;
        Self::assemble(kernel, pi, options)
    }

    /// Builds a chain whose stationary law is known in closed form; the
    /// supplied `pi` is checked against the kernel.
    pub fn with_stationary(mut kernel: DMatrix<T>, pi: DVector<T>) -> Result<Self> {
        let options = ChainOptions::default();
        validate_kernel(&mut kernel, &options)?;
        if pi.len() != kernel.nrows() {
            return Err(Error::DimensionMismatch {
                expected: kernel.nrows(),
                found: pi.len(),
            });
        }
        let total = pi.sum();
        Self::assemble(kernel, pi / total, options)
    }

    /// Builds a chain from nested rows of `f64` values.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        if let Some(bad) = rows.iter().find(|r| r.len() != n) {
            return Err(Error::NotSquare {
                rows: n,
                cols: bad.len(),
            });
        }
        let kernel = DMatrix::from_fn(n, n, |i, j| T::lit(rows[i][j]));
        Self::new(kernel)
    }

    fn assemble(kernel: DMatrix<T>, pi: DVector<T>, options: ChainOptions) -> Result<Self> {
        let n = kernel.nrows();
        for (state, &mass) in pi.iter().enumerate() {
            if !(mass > T::zero()) {
                return Err(Error::ZeroStationaryMass {
                    state,
                    mass: mass.to_f64_lossy(),
                });
            }
        }
        let residual = stationary_residual(&kernel, &pi);
        if residual > T::tol(options.stationarity_tol) {
            return Err(Error::StationaryResidual {
                residual: residual.to_f64_lossy(),
            });
        }
        let rev_tol = T::tol(options.reversibility_tol);
        let mut reversible = true;
        'outer: for x in 0..n {
            for y in (x + 1)..n {
                if (pi[x] * kernel[(x, y)] - pi[y] * kernel[(y, x)]).abs() > rev_tol {
                    reversible = false;
                    break 'outer;
                }
            }
        }
        let thr = T::lit(options.support_threshold);
        let neighbors = (0..n)
            .map(|x| {
                (0..n)
                    .filter(|&y| y != x && (kernel[(x, y)] > thr || kernel[(y, x)] > thr))
                    .collect()
            })
            .collect();
        let pi_star = pi.iter().copied().fold(T::infinity(), |a, b| a.min(b));
        let holding = (0..n)
            .map(|x| kernel[(x, x)])
            .fold(T::infinity(), |a, b| a.min(b));
        Ok(Self {
            kernel,
            pi,
            pi_star,
            reversible,
            holding,
            neighbors,
            labels: None,
            options,
        })
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: labels.len(),
            });
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.kernel.nrows()
    }

    pub fn kernel(&self) -> &DMatrix<T> {
        &self.kernel
    }

    pub fn pi(&self) -> &DVector<T> {
        &self.pi
    }

    pub fn pi_star(&self) -> T {
        self.pi_star
    }

    pub fn is_reversible(&self) -> bool {
        self.reversible
    }

    /// `min_x K(x, x)`.
    pub fn holding(&self) -> T {
        self.holding
    }

    /// Neighbours of `x` in the undirected support graph (self-loops excluded).
    pub fn neighbors(&self, x: usize) -> &[usize] {
        &self.neighbors[x]
    }

    pub fn labels(&self) -> Option<&[String]> {
        self.labels.as_deref()
    }

    pub fn options(&self) -> &ChainOptions {
        &self.options
    }

    fn check_len(&self, v: &DVector<T>) -> Result<()> {
        if v.len() != self.n() {
            return Err(Error::DimensionMismatch {
                expected: self.n(),
                found: v.len(),
            });
        }
        Ok(())
    }

    /// `K*(x, y) = pi(y) K(y, x) / pi(x)`.
    pub fn adjoint_kernel(&self) -> DMatrix<T> {
        let n = self.n();
        DMatrix::from_fn(n, n, |x, y| self.pi[y] * self.kernel[(y, x)] / self.pi[x])
    }

    pub fn adjoint(&self) -> Result<Self> {
        let mut k = self.adjoint_kernel();
        validate_kernel(&mut k, &self.options)?;
        Self::assemble(k, self.pi.clone(), self.options)
    }

    /// Chain with an arbitrary stochastic kernel sharing this chain's `pi`.
    pub fn sibling(&self, kernel: DMatrix<T>) -> Result<Self> {
        let mut k = kernel;
        validate_kernel(&mut k, &self.options)?;
        Self::assemble(k, self.pi.clone(), self.options)
    }

    /// `<(I - K) f, g>_pi`.
    pub fn dirichlet_form(&self, f: &DVector<T>, g: &DVector<T>) -> Result<T> {
        self.check_len(f)?;
        self.check_len(g)?;
        let kf = &self.kernel * f;
        Ok((0..self.n()).fold(T::zero(), |acc, x| acc + self.pi[x] * g[x] * (f[x] - kf[x])))
    }

    /// `1/2 sum_{x,y} (f(x) - f(y))^2 K(x, y) pi(x)`.
    pub fn energy(&self, f: &DVector<T>) -> Result<T> {
        self.check_len(f)?;
        let n = self.n();
        let mut total = T::zero();
        for x in 0..n {
            for y in 0..n {
                let d = f[x] - f[y];
                total += d * d * self.kernel[(x, y)] * self.pi[x];
            }
        }
        Ok(total * T::lit(0.5))
    }

    pub fn expectation(&self, f: &DVector<T>) -> T {
        self.pi.dot(f)
    }

    pub fn inner(&self, f: &DVector<T>, g: &DVector<T>) -> T {
        (0..self.n()).fold(T::zero(), |acc, x| acc + self.pi[x] * f[x] * g[x])
    }

    pub fn variance(&self, f: &DVector<T>) -> T {
        let m = self.expectation(f);
        (0..self.n()).fold(T::zero(), |acc, x| {
            acc + self.pi[x] * (f[x] - m) * (f[x] - m)
        })
    }

    /// `Q(A, B) = sum_{x in A, y in B} pi(x) K(x, y)`.
    pub fn flow(&self, a: &[usize], b: &[usize]) -> T {
        let mut total = T::zero();
        for &x in a {
            for &y in b {
                total += self.pi[x] * self.kernel[(x, y)];
            }
        }
        total
    }

    /// `I - sym(D^{1/2} K D^{-1/2})`, the matrix of the symmetrized Dirichlet
    /// form in the orthonormal basis of `L^2(pi)`.
    pub fn symmetrized_laplacian(&self) -> DMatrix<T> {
        let n = self.n();
        let s: Vec<T> = self.pi.iter().map(|p| p.sqrt()).collect();
        let a = DMatrix::from_fn(n, n, |x, y| s[x] * self.kernel[(x, y)] / s[y]);
        DMatrix::identity(n, n) - symmetric_part(&a)
    }

    /// Second-smallest eigenvalue of the symmetrized Laplacian.
    pub fn spectral_gap(&self) -> Result<T> {
        if self.n() < 2 {
            return Err(Error::InvalidParameter(
                "spectral gap of a one-state chain".into(),
            ));
        }
        let vals = linalg::symmetric_eigenvalues(self.symmetrized_laplacian())?;
        Ok(vals[1].max(T::zero()))
    }

    pub fn spectral_decomposition(&self) -> Result<SpectralDecomposition<T>> {
        SpectralDecomposition::new(self)
    }

    pub fn heat_kernel(&self, t: T, tol: T) -> Result<HeatKernelSnapshot<T>> {
        self.heat_kernel_with(t, tol, HeatMethod::Auto)
    }

    pub fn heat_kernel_with(
        &self,
        t: T,
        tol: T,
        method: HeatMethod,
    ) -> Result<HeatKernelSnapshot<T>> {
        heat::heat_kernel(self, t, tol, method)
    }

    /// `K K*` and `K* K` with irreducibility flags.
    pub fn multiplicative_symmetrizations(&self) -> Symmetrizations<T> {
        let adj = self.adjoint_kernel();
        let kk_star = &self.kernel * &adj;
        let k_star_k = &adj * &self.kernel;
        let thr = T::lit(self.options.support_threshold);
        let kk_star_irreducible = scc_count(&support_lists(&kk_star, thr)) == 1;
        let k_star_k_irreducible = scc_count(&support_lists(&k_star_k, thr)) == 1;
        Symmetrizations {
            kk_star,
            k_star_k,
            kk_star_irreducible,
            k_star_k_irreducible,
        }
    }

    /// `alpha I + (1 - alpha) K`.
    pub fn add_laziness(&self, alpha: T) -> Result<Self> {
        if !(alpha >= T::zero() && alpha < T::one()) {
            return Err(Error::AlphaOutOfRange(alpha.to_f64_lossy()));
        }
        let n = self.n();
        let k = DMatrix::identity(n, n) * alpha + &self.kernel * (T::one() - alpha);
        self.sibling(k)
    }

    /// `(K - alpha I) / (1 - alpha)`.
    pub fn remove_laziness(&self, alpha: T) -> Result<Self> {
        if !(alpha >= T::zero() && alpha < T::one()) {
            return Err(Error::AlphaOutOfRange(alpha.to_f64_lossy()));
        }
        if alpha > self.holding + T::tol(1e-15) {
            return Err(Error::AlphaExceedsHolding {
                alpha: alpha.to_f64_lossy(),
                holding: self.holding.to_f64_lossy(),
            });
        }
        let n = self.n();
        let mut k = (&self.kernel - DMatrix::identity(n, n) * alpha) / (T::one() - alpha);
        for x in 0..n {
            k[(x, x)] = k[(x, x)].max(T::zero());
        }
        self.sibling(k)
    }

    pub fn discrete_power(&self, m: u64) -> DMatrix<T> {
        matrix_power(&self.kernel, m)
    }

    /// Period of the support digraph.
    pub fn period(&self) -> usize {
        linalg::period(&support_lists(
            &self.kernel,
            T::lit(self.options.support_threshold),
        ))
    }

    /// `min_{x != y, x ~ y} pi(x) K(x, y) + pi(y) K(y, x)`.
    pub fn min_edge_flow(&self) -> T {
        let mut best = T::infinity();
        for x in 0..self.n() {
            for &y in &self.neighbors[x] {
                let q = self.pi[x] * self.kernel[(x, y)] + self.pi[y] * self.kernel[(y, x)];
                best = best.min(q);
            }
        }
        best
    }
}

/// Multiplicative symmetrizations of a kernel.
#[derive(Debug, Clone)]
pub struct Symmetrizations<T: Real> {
    pub kk_star: DMatrix<T>,
    pub k_star_k: DMatrix<T>,
    pub kk_star_irreducible: bool,
    pub k_star_k_irreducible: bool,
}

impl<T: Real> Symmetrizations<T> {
    pub fn both_irreducible(&self) -> bool {
        self.kk_star_irreducible && self.k_star_k_irreducible
    }

    /// The two symmetrizations as chains; fails if either is reducible.
    pub fn chains(&self, base: &MarkovChain<T>) -> Result<(MarkovChain<T>, MarkovChain<T>)> {
        if !self.both_irreducible() {
            return Err(Error::ReducibleSymmetrization);
        }
        Ok((
            base.sibling(self.kk_star.clone())?,
            base.sibling(self.k_star_k.clone())?,
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn drift3() -> DMatrix<f64> {
        DMatrix::from_row_slice(3, 3, &[0.0, 1.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0])
    }

    #[test]
    fn uniform_kernel_is_reversible() {
        let c: MarkovChain<f64> = build_chain(DMatrix::from_element(3, 3, 1.0 / 3.0)).unwrap();
        assert!(c.is_reversible());
        for &p in c.pi().iter() {
            assert!((p - 1.0 / 3.0).abs() < 1e-15);
        }
    }

    #[test]
    fn identity_is_reducible() {
        let err = build_chain(DMatrix::<f64>::identity(2, 2)).unwrap_err();
        assert_eq!(err, Error::Reducible { components: 2 });
    }

    #[test]
    fn rejects_bad_rows() {
        let k = DMatrix::from_row_slice(2, 2, &[0.5, 0.6, 0.5, 0.5]);
        assert!(matches!(
            build_chain(k),
            Err(Error::NotStochastic { row: 0, .. })
        ));
        let k = DMatrix::from_row_slice(2, 2, &[1.5, -0.5, 0.5, 0.5]);
        assert!(matches!(build_chain(k), Err(Error::InvalidEntry { .. })));
        let k = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        assert!(matches!(build_chain(k), Err(Error::NotSquare { .. })));
    }

    #[test]
    fn drift_adjoint_is_reverse_rotation() {
        let c = build_chain(drift3()).unwrap();
        assert!(!c.is_reversible());
        assert_eq!(c.adjoint_kernel(), drift3().transpose());
        let back = c.adjoint().unwrap().adjoint_kernel();
        assert!((back - c.kernel()).amax() < 1e-15);
    }

    #[test]
    fn rotation_symmetrization_is_reducible() {
        let c = build_chain(drift3()).unwrap();
        let s = c.multiplicative_symmetrizations();
        assert!((&s.kk_star - DMatrix::identity(3, 3)).amax() < 1e-15);
        assert!(!s.kk_star_irreducible);
        assert!(matches!(s.chains(&c), Err(Error::ReducibleSymmetrization)));
    }

    #[test]
    fn laziness_bounds_are_enforced() {
        let c: MarkovChain<f64> = build_chain(DMatrix::from_element(2, 2, 0.5)).unwrap();
        assert!(matches!(
            c.remove_laziness(0.75),
            Err(Error::AlphaExceedsHolding { .. })
        ));
        assert!(matches!(
            c.add_laziness(1.0),
            Err(Error::AlphaOutOfRange(_))
        ));
        let back = c.remove_laziness(0.5).unwrap();
        assert!((back.kernel()[(0, 1)] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn single_precision_chain_builds() {
        let k = DMatrix::<f32>::from_element(4, 4, 0.25);
        let c = MarkovChain::new(k).unwrap();
        assert!((c.spectral_gap().unwrap() - 1.0).abs() < 1e-5);
    }
}
