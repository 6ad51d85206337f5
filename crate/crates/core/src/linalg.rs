//! Dense linear-algebra helpers built on nalgebra.

use crate::{Error, Real, Result};
use nalgebra::{DMatrix, DVector, SymmetricEigen};
use petgraph::algo::tarjan_scc;
use petgraph::graph::DiGraph;

/// Controls for symmetric bottom-eigenpair solves.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigenOptions {
    /// Matrices up to this order use a full decomposition; larger ones use
    /// shifted inverse iteration.
    pub full_cutoff: usize,
    pub max_iter: usize,
    pub tol: f64,
}

impl Default for EigenOptions {
    fn default() -> Self {
        Self {
            full_cutoff: 512,
            max_iter: 2000,
            tol: 1e-13,
        }
    }
}

fn sweep_limit(n: usize) -> usize {
    200 * n.max(1) + 1000
}

/// Eigenvalues (ascending) and matching eigenvector columns of a symmetric matrix.
pub fn symmetric_eigen<T: Real>(m: DMatrix<T>) -> Result<(DVector<T>, DMatrix<T>)> {
    let n = m.nrows();
    if n == 0 {
        return Ok((DVector::zeros(0), DMatrix::zeros(0, 0)));
    }
    let eig = SymmetricEigen::try_new(m, T::EPSILON, sweep_limit(n))
        .ok_or_else(|| Error::EigensolveFailure(format!("no convergence for order {n}")))?;
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[a]
            .partial_cmp(&eig.eigenvalues[b])
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    if order.iter().any(|&i| !eig.eigenvalues[i].is_finite()) {
        return Err(Error::EigensolveFailure("non-finite eigenvalue".into()));
    }
    let values = DVector::from_iterator(n, order.iter().map(|&i| eig.eigenvalues[i]));
    let mut vectors = DMatrix::zeros(n, n);
    for (k, &i) in order.iter().enumerate() {
        vectors.set_column(k, &eig.eigenvectors.column(i));
    }
    Ok((values, vectors))
}

/// Ascending eigenvalues of a symmetric matrix.
pub fn symmetric_eigenvalues<T: Real>(m: DMatrix<T>) -> Result<DVector<T>> {
    let n = m.nrows();
    if n == 0 {
        return Ok(DVector::zeros(0));
    }
    let mut vals: Vec<T> = SymmetricEigen::try_new(m, T::EPSILON, sweep_limit(n))
        .ok_or_else(|| Error::EigensolveFailure(format!("no convergence for order {n}")))?
        .eigenvalues
        .iter()
        .copied()
        .collect();
    if vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::EigensolveFailure("non-finite eigenvalue".into()));
    }
    vals.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
    Ok(DVector::from_vec(vals))
}

/// Smallest eigenvalue and a unit eigenvector of a symmetric positive
/// semidefinite matrix.
pub fn bottom_eigenpair<T: Real>(m: &DMatrix<T>, opts: &EigenOptions) -> Result<(T, DVector<T>)> {
    let n = m.nrows();
    if n == 0 {
        return Err(Error::EmptySubset);
    }
    if n <= opts.full_cutoff {
        let (vals, vecs) = symmetric_eigen(m.clone())?;
        return Ok((vals[0], vecs.column(0).into_owned()));
    }
    inverse_iteration(m, opts)
}

fn inverse_iteration<T: Real>(m: &DMatrix<T>, opts: &EigenOptions) -> Result<(T, DVector<T>)> {
    let n = m.nrows();
    let scale = m
        .iter()
        .fold(T::zero(), |acc, v| acc.max(v.abs()))
        .max(T::one());
    let shift = scale * T::tol(1e-10);
    let mut shifted = m.clone();
    for i in 0..n {
        shifted[(i, i)] += shift;
    }
    let chol = match shifted.clone().cholesky() {
        Some(c) => c,
        None => {
            let (vals, vecs) = symmetric_eigen(m.clone())?;
            return Ok((vals[0], vecs.column(0).into_owned()));
        }
    };
    let mut x = DVector::from_element(n, T::one() / T::from_usize_lossy(n).sqrt());
    let tol = T::tol(opts.tol) * scale;
    let mut theta = x.dot(&(m * &x));
    for _ in 0..opts.max_iter {
        let mut y = chol.solve(&x);
        let norm = y.norm();
        if !norm.is_finite() || norm == T::zero() {
            return Err(Error::EigensolveFailure(
                "inverse iteration broke down".into(),
            ));
        }
        y /= norm;
        let my = m * &y;
        theta = y.dot(&my);
        let residual = (my - &y * theta).norm();
        x = y;
        if residual <= tol {
            return Ok((theta, x));
        }
    }
    Ok((theta, x))
}

/// `m^k` by square-and-multiply.
pub fn matrix_power<T: Real>(m: &DMatrix<T>, mut k: u64) -> DMatrix<T> {
    let n = m.nrows();
    let mut result = DMatrix::identity(n, n);
    let mut base = m.clone();
    while k > 0 {
        if k & 1 == 1 {
            result = &result * &base;
        }
        k >>= 1;
        if k > 0 {
            base = &base * &base;
        }
    }
    result
}

/// Adjacency lists of the directed support graph `{(x, y) : m(x, y) > threshold}`.
pub fn support_lists<T: Real>(m: &DMatrix<T>, threshold: T) -> Vec<Vec<usize>> {
    let n = m.nrows();
    (0..n)
        .map(|x| (0..n).filter(|&y| m[(x, y)] > threshold).collect())
        .collect()
}

/// Number of strongly connected components of a directed graph.
pub fn scc_count(adj: &[Vec<usize>]) -> usize {
    let mut g = DiGraph::<(), ()>::with_capacity(adj.len(), 0);
    let nodes: Vec<_> = (0..adj.len()).map(|_| g.add_node(())).collect();
    for (x, row) in adj.iter().enumerate() {
        for &y in row {
            g.add_edge(nodes[x], nodes[y], ());
        }
    }
    tarjan_scc(&g).len()
}

fn gcd(mut a: usize, mut b: usize) -> usize {
    while b != 0 {
        (a, b) = (b, a % b);
    }
    a
}

/// Period of a strongly connected directed graph (1 means aperiodic).
pub fn period(adj: &[Vec<usize>]) -> usize {
    let n = adj.len();
    if n == 0 {
        return 1;
    }
    let mut level = vec![usize::MAX; n];
    level[0] = 0;
    let mut queue = std::collections::VecDeque::from([0usize]);
    while let Some(x) = queue.pop_front() {
        for &y in &adj[x] {
            if level[y] == usize::MAX {
                level[y] = level[x] + 1;
                queue.push_back(y);
            }
        }
    }
    let mut g = 0;
    for (x, row) in adj.iter().enumerate() {
        if level[x] == usize::MAX {
            continue;
        }
        for &y in row {
            if level[y] != usize::MAX {
                g = gcd(g, (level[x] + 1).abs_diff(level[y]));
            }
        }
    }
    g.max(1)
}

/// `(a + a^T) / 2`.
pub fn symmetric_part<T: Real>(a: &DMatrix<T>) -> DMatrix<T> {
    (a + a.transpose()) * T::lit(0.5)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigen_sorted_ascending() {
        let m = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 2.0, 1.0, 0.0, 1.0, 2.0]);
        let (vals, vecs) = symmetric_eigen(m.clone()).unwrap();
        let s = 2f64.sqrt();
        assert!((vals[0] - (2.0 - s)).abs() < 1e-12);
        assert!((vals[2] - (2.0 + s)).abs() < 1e-12);
        let v0 = vecs.column(0);
        assert!((&m * v0 - v0 * vals[0]).norm() < 1e-12);
    }

    #[test]
    fn inverse_iteration_matches_full_solve() {
        let n = 40;
        let mut m = DMatrix::<f64>::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
            if i + 1 < n {
                m[(i, i + 1)] = -0.5;
                m[(i + 1, i)] = -0.5;
            }
        }
        let opts = EigenOptions {
            full_cutoff: 4,
            ..Default::default()
        };
        let (lam, v) = bottom_eigenpair(&m, &opts).unwrap();
        let exact = 1.0 - (std::f64::consts::PI / (n as f64 + 1.0)).cos();
        assert!((lam - exact).abs() < 1e-10);
        assert!((&m * &v - &v * lam).norm() < 1e-8);
    }

    #[test]
    fn power_by_squaring_matches_repeated_products() {
        let m = DMatrix::from_row_slice(2, 2, &[0.25, 0.75, 0.5, 0.5]);
        let mut direct = DMatrix::identity(2, 2);
        for _ in 0..13 {
            direct = &direct * &m;
        }
        assert!((matrix_power(&m, 13) - direct).norm() < 1e-14);
        assert_eq!(matrix_power(&m, 0), DMatrix::identity(2, 2));
    }

    #[test]
    fn period_of_cycles() {
        let even: Vec<Vec<usize>> = (0..4).map(|i| vec![(i + 1) % 4, (i + 3) % 4]).collect();
        assert_eq!(period(&even), 2);
        let odd: Vec<Vec<usize>> = (0..5).map(|i| vec![(i + 1) % 5, (i + 4) % 5]).collect();
        assert_eq!(period(&odd), 1);
        let rotation: Vec<Vec<usize>> = (0..3).map(|i| vec![(i + 1) % 3]).collect();
        assert_eq!(period(&rotation), 3);
        assert_eq!(scc_count(&rotation), 1);
        assert_eq!(scc_count(&[vec![0], vec![1]]), 2);
    }
}
