//! Subsets of the state space and their Dirichlet spectra.

use crate::chain::MarkovChain;
use crate::linalg::{bottom_eigenpair, symmetric_eigen, EigenOptions};
use crate::{Error, Real, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// A non-empty set of states with cached mass, boundary flow and components.
#[derive(Debug, Clone, PartialEq)]
pub struct Subset<T: Real> {
    members: Vec<usize>,
    mass: T,
    boundary: T,
    components: Vec<Vec<usize>>,
}

impl<T: Real> Subset<T> {
    pub fn new(chain: &MarkovChain<T>, members: impl IntoIterator<Item = usize>) -> Result<Self> {
        let n = chain.n();
        let mut members: Vec<usize> = members.into_iter().collect();
        members.sort_unstable();
        members.dedup();
        if members.is_empty() {
            return Err(Error::EmptySubset);
        }
        if let Some(&index) = members.iter().find(|&&x| x >= n) {
            return Err(Error::IndexOutOfRange { index, n });
        }
        let mut inside = vec![false; n];
        for &x in &members {
            inside[x] = true;
        }
        let pi = chain.pi();
        let k = chain.kernel();
        let mut mass = T::zero();
        let mut boundary = T::zero();
        for &x in &members {
            mass += pi[x];
            let out = (0..n)
                .filter(|&y| !inside[y])
                .fold(T::zero(), |acc, y| acc + k[(x, y)]);
            boundary += pi[x] * out;
        }
        let components = components_of(chain, &members, &inside);
        Ok(Self {
            members,
            mass,
            boundary,
            components,
        })
    }

    /// Subset from a bit mask over the first 64 states.
    pub fn from_mask(chain: &MarkovChain<T>, mask: u64) -> Result<Self> {
        Self::new(chain, (0..64).filter(|&i| mask >> i & 1 == 1))
    }

    pub fn members(&self) -> &[usize] {
        &self.members
    }

    pub fn len(&self) -> usize {
        self.members.len()
    }

    pub fn is_empty(&self) -> bool {
        self.members.is_empty()
    }

    /// `pi(S)`.
    pub fn mass(&self) -> T {
        self.mass
    }

    /// `|dS| = Q(S, S^c)`.
    pub fn boundary(&self) -> T {
        self.boundary
    }

    pub fn components(&self) -> &[Vec<usize>] {
        &self.components
    }

    pub fn is_connected(&self) -> bool {
        self.components.len() == 1
    }

    pub fn contains(&self, x: usize) -> bool {
        self.members.binary_search(&x).is_ok()
    }

    pub fn is_full(&self, chain: &MarkovChain<T>) -> bool {
        self.members.len() == chain.n()
    }

    /// Indicator vector of length `n`.
    pub fn indicator(&self, n: usize) -> DVector<T> {
        let mut v = DVector::zeros(n);
        for &x in &self.members {
            v[x] = T::one();
        }
        v
    }
}

fn components_of<T: Real>(
    chain: &MarkovChain<T>,
    members: &[usize],
    inside: &[bool],
) -> Vec<Vec<usize>> {
    let mut seen = vec![false; inside.len()];
    let mut out = Vec::new();
    for &start in members {
        if seen[start] {
            continue;
        }
        seen[start] = true;
        let mut comp = vec![start];
        let mut stack = vec![start];
        while let Some(x) = stack.pop() {
            for &y in chain.neighbors(x) {
                if inside[y] && !seen[y] {
                    seen[y] = true;
                    comp.push(y);
                    stack.push(y);
                }
            }
        }
        comp.sort_unstable();
        out.push(comp);
    }
    out
}

/// Restricted Laplacian `I - K_S` and the symmetric matrix used for its spectrum.
#[derive(Debug, Clone)]
pub struct RestrictedLaplacian<T: Real> {
    /// `I - K_S` on the `S`-indexed block.
    pub block: DMatrix<T>,
    /// `(Delta_S + Delta_S^*) / 2` with the adjoint taken in `L^2(pi)`;
    /// present only for non-reversible chains.
    pub additive_symmetrization: Option<DMatrix<T>>,
    /// `D_S^{1/2} A D_S^{-1/2}` where `A` is the block (reversible case) or its
    /// additive symmetrization; symmetric up to rounding.
    pub operator: DMatrix<T>,
}

pub fn restricted_laplacian<T: Real>(
    chain: &MarkovChain<T>,
    s: &Subset<T>,
) -> Result<RestrictedLaplacian<T>> {
    let m = s.members();
    if m.is_empty() {
        return Err(Error::EmptySubset);
    }
    let k = chain.kernel();
    let pi = chain.pi();
    let len = m.len();
    let block = DMatrix::from_fn(len, len, |i, j| {
        let delta = if i == j { T::one() } else { T::zero() };
        delta - k[(m[i], m[j])]
    });
    let additive_symmetrization = if chain.is_reversible() {
        None
    } else {
        Some(DMatrix::from_fn(len, len, |i, j| {
            let adj = pi[m[j]] * block[(j, i)] / pi[m[i]];
            (block[(i, j)] + adj) * T::lit(0.5)
        }))
    };
    let full = chain.symmetrized_laplacian();
    let operator = DMatrix::from_fn(len, len, |i, j| full[(m[i], m[j])]);
    Ok(RestrictedLaplacian {
        block,
        additive_symmetrization,
        operator,
    })
}

/// Principal submatrix of `op` on `idx`.
pub fn principal_submatrix<T: Real>(op: &DMatrix<T>, idx: &[usize]) -> DMatrix<T> {
    DMatrix::from_fn(idx.len(), idx.len(), |i, j| op[(idx[i], idx[j])])
}

/// `lambda_0(S)`: bottom eigenvalue of the (symmetrized) restricted Laplacian.
pub fn lambda0<T: Real>(chain: &MarkovChain<T>, s: &Subset<T>) -> Result<T> {
    lambda0_with(chain, s, &EigenOptions::default())
}

pub fn lambda0_with<T: Real>(
    chain: &MarkovChain<T>,
    s: &Subset<T>,
    opts: &EigenOptions,
) -> Result<T> {
    Ok(dirichlet_eigenpair(chain, s, opts)?.0)
}

/// Bottom eigenvalue and a nonnegative eigenfunction (as a function on all
/// states, zero off `S`, normalised in `L^2(pi)`).
pub fn dirichlet_eigenpair<T: Real>(
    chain: &MarkovChain<T>,
    s: &Subset<T>,
    opts: &EigenOptions,
) -> Result<(T, DVector<T>)> {
    let op = principal_submatrix(&chain.symmetrized_laplacian(), s.members());
    let (lam, v) = bottom_eigenpair(&op, opts)?;
    let pi = chain.pi();
    let mut f = DVector::zeros(chain.n());
    for (i, &x) in s.members().iter().enumerate() {
        f[x] = v[i].abs() / pi[x].sqrt();
    }
    Ok((lam.max(T::zero()), f))
}

/// Two-sided bracket `lambda_0(S) <= lambda(S) <= lambda_0(S) / (1 - pi(S))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LambdaBracket<T: Real> {
    pub lambda0: T,
    pub lower: T,
    pub upper: T,
    pub variational_estimate: Option<T>,
    /// True when `lambda0` came from the additive symmetrization of a
    /// non-reversible chain.
    pub symmetrized: bool,
}

impl<T: Real> LambdaBracket<T> {
    pub fn contains(&self, value: T, rel: T) -> bool {
        value >= self.lower * (T::one() - rel) && value <= self.upper * (T::one() + rel)
    }
}

pub fn lambda_bracket<T: Real>(chain: &MarkovChain<T>, s: &Subset<T>) -> Result<LambdaBracket<T>> {
    if s.is_full(chain) {
        return Err(Error::FullSpace);
    }
    let l0 = lambda0(chain, s)?;
    Ok(LambdaBracket {
        lambda0: l0,
        lower: l0,
        upper: l0 / (T::one() - s.mass()),
        variational_estimate: None,
        symmetrized: !chain.is_reversible(),
    })
}

/// Bracket plus a variational estimate of `lambda(S)`, clamped into the bracket.
pub fn lambda_bracket_refined<T: Real>(
    chain: &MarkovChain<T>,
    s: &Subset<T>,
    opts: &VariationalOptions,
) -> Result<LambdaBracket<T>> {
    let mut b = lambda_bracket(chain, s)?;
    let v = lambda_variational(chain, s, opts)?;
    b.variational_estimate = Some(v.value.max(b.lower).min(b.upper));
    Ok(b)
}

/// Controls for the projected-gradient search behind [`lambda_variational`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VariationalOptions {
    pub max_iter: usize,
    pub restarts: usize,
    pub tol: f64,
    pub seed: u64,
}

impl Default for VariationalOptions {
    fn default() -> Self {
        Self {
            max_iter: 3000,
            restarts: 16,
            tol: 1e-13,
            seed: 0x5eed_cafe,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct VariationalEstimate<T: Real> {
    pub value: T,
    /// Nonnegative minimiser supported in `S`, as a function on all states.
    pub minimizer: DVector<T>,
    /// False when every restart hit the iteration limit.
    pub converged: bool,
}

struct Quotient<T: Real> {
    m: DMatrix<T>,
    b: DMatrix<T>,
    p: DVector<T>,
}

impl<T: Real> Quotient<T> {
    fn new(chain: &MarkovChain<T>, members: &[usize]) -> Self {
        let len = members.len();
        let k = chain.kernel();
        let pi = chain.pi();
        let p = DVector::from_fn(len, |i, _| pi[members[i]]);
        let m = DMatrix::from_fn(len, len, |i, j| {
            let (x, y) = (members[i], members[j]);
            let off = (pi[x] * k[(x, y)] + pi[y] * k[(y, x)]) * T::lit(0.5);
            if i == j {
                pi[x] - off
            } else {
                -off
            }
        });
        let b = DMatrix::from_fn(len, len, |i, j| {
            let d = if i == j { p[i] } else { T::zero() };
            d - p[i] * p[j]
        });
        Self { m, b, p }
    }

    fn parts(&self, f: &DVector<T>) -> (T, T) {
        (f.dot(&(&self.m * f)), f.dot(&(&self.b * f)))
    }

    fn value(&self, f: &DVector<T>) -> T {
        let (e, v) = self.parts(f);
        if v > T::zero() {
            e / v
        } else {
            T::infinity()
        }
    }

    fn normalize(&self, f: &mut DVector<T>) -> bool {
        let mean = self.p.dot(f) / self.p.sum();
        if !(mean > T::zero()) || !mean.is_finite() {
            return false;
        }
        *f /= mean;
        true
    }

    fn descend(
        &self,
        start: DVector<T>,
        opts: &VariationalOptions,
    ) -> Option<(T, DVector<T>, bool)> {
        let mut f = start.map(|v| v.max(T::zero()));
        if !self.normalize(&mut f) {
            return None;
        }
        let mut q = self.value(&f);
        if !q.is_finite() {
            return None;
        }
        let tol = T::tol(opts.tol);
        let mut step = T::one();
        let mut converged = false;
        let mut stalls = 0;
        for _ in 0..opts.max_iter {
            let (e, v) = self.parts(&f);
            let g = (&self.m * &f - &self.b * &f * (e / v)) * (T::lit(2.0) / v);
            let projected = (&f - (&f - &g).map(|x| x.max(T::zero()))).norm();
            if projected <= tol * (T::one() + f.norm()) {
                converged = true;
                break;
            }
            let mut st = step;
            let mut accepted = None;
            for _ in 0..64 {
                let cand = (&f - &g * st).map(|x| x.max(T::zero()));
                let qc = self.value(&cand);
                let decrease = g.dot(&(&f - &cand));
                if qc.is_finite() && qc <= q - T::lit(1e-4) * decrease {
                    accepted = Some((cand, qc));
                    break;
                }
                st *= T::lit(0.5);
            }
            let Some((mut cand, qc)) = accepted else {
                converged = true;
                break;
            };
            if !self.normalize(&mut cand) {
                break;
            }
            let gain = q - qc;
            f = cand;
            q = qc;
            step = st * T::lit(2.0);
            if gain <= tol * q.abs().max(T::EPSILON) {
                stalls += 1;
                if stalls >= 8 {
                    converged = true;
                    break;
                }
            } else {
                stalls = 0;
            }
        }
        let (q, f) = self.polish(q, f);
        Some((q, f, converged))
    }

    /// Generalised eigenproblem on the support of `f`; positive eigenvectors
    /// are feasible points, so the best one can only improve the estimate.
    fn polish(&self, q: T, f: DVector<T>) -> (T, DVector<T>) {
        let top = f.amax();
        let support: Vec<usize> = (0..f.len())
            .filter(|&i| f[i] > top * T::lit(1e-9))
            .collect();
        if support.is_empty() {
            return (q, f);
        }
        let ms = principal_submatrix(&self.m, &support);
        let bs = principal_submatrix(&self.b, &support);
        let Some(chol) = bs.cholesky() else {
            return (q, f);
        };
        let l = chol.l();
        let Some(l_inv) = l.clone().try_inverse() else {
            return (q, f);
        };
        let c = &l_inv * &ms * l_inv.transpose();
        let c = (&c + c.transpose()) * T::lit(0.5);
        let Ok((vals, vecs)) = symmetric_eigen(c) else {
            return (q, f);
        };
        let mut best = (q, f);
        for j in 0..vals.len() {
            if vals[j] >= best.0 {
                break;
            }
            let v = l_inv.transpose() * vecs.column(j);
            let scale = v.amax();
            let sign = if v.sum() < T::zero() {
                -T::one()
            } else {
                T::one()
            };
            if v.iter().all(|&x| x * sign >= -scale * T::lit(1e-12)) {
                let mut g = DVector::zeros(self.p.len());
                for (i, &s) in support.iter().enumerate() {
                    g[s] = (v[i] * sign).max(T::zero());
                }
                let val = self.value(&g);
                if val < best.0 && self.normalize(&mut g) {
                    best = (val, g);
                }
            }
        }
        best
    }
}

fn subset_seed(seed: u64, members: &[usize]) -> u64 {
    members.iter().fold(seed ^ 0xcbf2_9ce4_8422_2325, |h, &x| {
        (h ^ x as u64).wrapping_mul(0x0000_0100_0000_01b3)
    })
}

/// Estimate of `lambda(S) = inf E(f, f) / Var(f)` over nonnegative,
/// non-constant `f` supported in `S`.
///
/// For the full space this is the spectral gap.
pub fn lambda_variational<T: Real>(
    chain: &MarkovChain<T>,
    s: &Subset<T>,
    opts: &VariationalOptions,
) -> Result<VariationalEstimate<T>> {
    let n = chain.n();
    if s.is_full(chain) {
        let gap = chain.spectral_gap()?;
        let (_, vecs) = symmetric_eigen(chain.symmetrized_laplacian())?;
        let pi = chain.pi();
        let f = DVector::from_fn(n, |x, _| vecs[(x, 1)] / pi[x].sqrt());
        let lo = f.min();
        return Ok(VariationalEstimate {
            value: gap,
            minimizer: f.map(|v| v - lo),
            converged: true,
        });
    }
    let members = s.members();
    let len = members.len();
    let quotient = Quotient::new(chain, members);
    let mut starts: Vec<DVector<T>> = Vec::with_capacity(opts.restarts.max(2));
    let (_, eig) = dirichlet_eigenpair(chain, s, &EigenOptions::default())?;
    starts.push(DVector::from_fn(len, |i, _| eig[members[i]]));
    starts.push(DVector::from_element(len, T::one()));
    let mut rng = ChaCha8Rng::seed_from_u64(subset_seed(opts.seed, members));
    while starts.len() < opts.restarts.max(2) {
        let sparse = starts.len().is_multiple_of(2);
        let mut v = DVector::from_fn(len, |_, _| {
            let keep = !sparse || rng.random_bool(0.5);
            if keep {
                T::lit(rng.random::<f64>())
            } else {
                T::zero()
            }
        });
        if v.iter().all(|&x| x == T::zero()) {
            v[rng.random_range(0..len)] = T::one();
        }
        starts.push(v);
    }
    let mut best: Option<(T, DVector<T>)> = None;
    let mut any_converged = false;
    for start in starts {
        if let Some((q, f, conv)) = quotient.descend(start, opts) {
            any_converged |= conv;
            if best.as_ref().is_none_or(|b| q < b.0) {
                best = Some((q, f));
            }
        }
    }
    let (value, local) =
        best.ok_or_else(|| Error::EigensolveFailure("no feasible start".into()))?;
    let mut minimizer = DVector::zeros(n);
    for (i, &x) in members.iter().enumerate() {
        minimizer[x] = local[i];
    }
    Ok(VariationalEstimate {
        value,
        minimizer,
        converged: any_converged,
    })
}

/// Minimum of [`lambda_variational`] over the connected components of `S`.
pub fn lambda_by_components<T: Real>(
    chain: &MarkovChain<T>,
    s: &Subset<T>,
    opts: &VariationalOptions,
) -> Result<VariationalEstimate<T>> {
    let mut best: Option<VariationalEstimate<T>> = None;
    for comp in s.components() {
        let sub = Subset::new(chain, comp.iter().copied())?;
        let est = lambda_variational(chain, &sub, opts)?;
        if best.as_ref().is_none_or(|b| est.value < b.value) {
            best = Some(est);
        }
    }
    best.ok_or(Error::EmptySubset)
}

/// Rayleigh-type quotient `E(f, f) / Var(f)`; infinite for constant `f`.
pub fn rayleigh_quotient<T: Real>(chain: &MarkovChain<T>, f: &DVector<T>) -> Result<T> {
    let e = chain.dirichlet_form(f, f)?;
    let v = chain.variance(f);
    Ok(if v > T::zero() { e / v } else { T::infinity() })
}
