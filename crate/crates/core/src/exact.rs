//! Exact `L^p` distances and mixing times from dense heat kernels.

use crate::bounds::{Norm, TimeMode};
use crate::heat::uniformization;
use crate::linalg::matrix_power;
use crate::{Error, MarkovChain, Real, Result, SpectralDecomposition};
use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

/// `||mu/pi - nu/pi||` in `L^p(pi)`.
pub fn lp_distance<T: Real>(
    mu: &DVector<T>,
    nu: &DVector<T>,
    pi: &DVector<T>,
    p: Norm,
) -> Result<T> {
    let n = pi.len();
    for v in [mu, nu] {
        if v.len() != n {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: v.len(),
            });
        }
    }
    let diff = (0..n).map(|i| ((mu[i] - nu[i]) / pi[i], pi[i]));
    Ok(match p {
        Norm::L1 => diff.fold(T::zero(), |a, (d, w)| a + w * d.abs()),
        Norm::L2 => diff.fold(T::zero(), |a, (d, w)| a + w * d * d).sqrt(),
        Norm::LInf => diff.fold(T::zero(), |a, (d, _)| a.max(d.abs())),
    })
}

fn row_distances<T: Real>(excess: &DMatrix<T>, pi: &DVector<T>, p: Norm) -> f64 {
    let n = pi.len();
    let mut best = T::zero();
    for x in 0..n {
        let d = match p {
            Norm::L1 => (0..n).fold(T::zero(), |a, y| a + pi[y] * excess[(x, y)].abs()),
            Norm::L2 => (0..n)
                .fold(T::zero(), |a, y| {
                    a + pi[y] * excess[(x, y)] * excess[(x, y)]
                })
                .sqrt(),
            Norm::LInf => (0..n).fold(T::zero(), |a, y| a.max(excess[(x, y)].abs())),
        };
        best = best.max(d);
    }
    best.to_f64_lossy()
}

fn max_entry<T: Real>(v: &DVector<T>) -> f64 {
    v.iter().fold(T::zero(), |a, &b| a.max(b)).to_f64_lossy()
}

/// Evaluates `sup_x d_p(P_t(x, .), pi)` for a fixed chain.
pub struct DistanceOracle<'a, T: Real> {
    chain: &'a MarkovChain<T>,
    spectral: Option<SpectralDecomposition<T>>,
    nonnegative: bool,
    tol: T,
}

impl<'a, T: Real> DistanceOracle<'a, T> {
    pub fn new(chain: &'a MarkovChain<T>) -> Result<Self> {
        let spectral = if chain.is_reversible() {
            Some(SpectralDecomposition::new(chain)?)
        } else {
            None
        };
        let nonnegative = spectral
            .as_ref()
            .map(|s| s.rates().iter().all(|&mu| mu <= T::one() + T::tol(1e-12)))
            .unwrap_or(false);
        Ok(Self {
            chain,
            spectral,
            nonnegative,
            tol: T::tol(1e-14),
        })
    }

    pub fn chain(&self) -> &MarkovChain<T> {
        self.chain
    }

    /// `lambda_1` when the decomposition is available, else from the symmetrization.
    pub fn gap(&self) -> Result<f64> {
        match &self.spectral {
            Some(s) => Ok(s.gap().to_f64_lossy()),
            None => Ok(self.chain.spectral_gap()?.to_f64_lossy()),
        }
    }

    fn dense_excess(&self, kernel: &DMatrix<T>) -> DMatrix<T> {
        let pi = self.chain.pi();
        DMatrix::from_fn(kernel.nrows(), kernel.ncols(), |x, y| {
            kernel[(x, y)] / pi[y] - T::one()
        })
    }

    pub fn continuous(&self, t: f64, p: Norm) -> f64 {
        let tt = T::lit(t);
        match (&self.spectral, p) {
            (Some(s), Norm::LInf) => max_entry(&s.diagonal_excess(tt)),
            (Some(s), Norm::L2) => max_entry(&s.diagonal_excess(tt + tt)).max(0.0).sqrt(),
            (Some(s), Norm::L1) => row_distances(&s.density_excess(tt), self.chain.pi(), p),
            (None, _) => {
                let h = uniformization(self.chain.kernel(), tt, self.tol);
                row_distances(&self.dense_excess(&h), self.chain.pi(), p)
            }
        }
    }

    pub fn discrete(&self, m: u64, p: Norm) -> f64 {
        match (&self.spectral, p) {
            (Some(s), Norm::LInf) if self.nonnegative => max_entry(&s.discrete_diagonal_excess(m)),
            (Some(s), Norm::L2) => max_entry(&s.discrete_diagonal_excess(2 * m))
                .max(0.0)
                .sqrt(),
            (Some(s), _) => row_distances(&s.discrete_density_excess(m), self.chain.pi(), p),
            (None, _) => {
                let k = matrix_power(self.chain.kernel(), m);
                row_distances(&self.dense_excess(&k), self.chain.pi(), p)
            }
        }
    }

    pub fn at(&self, t: f64, p: Norm, mode: TimeMode) -> f64 {
        match mode {
            TimeMode::Continuous => self.continuous(t, p),
            TimeMode::Discrete => self.discrete(t.max(0.0).round() as u64, p),
        }
    }
}

/// Exact mixing time with an optional diagnostic.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactTau {
    pub value: f64,
    pub mode: TimeMode,
    pub norm: Norm,
    pub epsilon: f64,
    pub warning: Option<String>,
}

const MAX_STEP_EXPONENT: u32 = 48;

/// Smallest time (or step count) at which `sup_x d_p <= eps`.
pub fn exact_tau<T: Real>(
    chain: &MarkovChain<T>,
    p: Norm,
    eps: f64,
    mode: TimeMode,
) -> Result<ExactTau> {
    let oracle = DistanceOracle::new(chain)?;
    exact_tau_with(&oracle, p, eps, mode)
}

pub fn exact_tau_with<T: Real>(
    oracle: &DistanceOracle<'_, T>,
    p: Norm,
    eps: f64,
    mode: TimeMode,
) -> Result<ExactTau> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    let mut out = ExactTau {
        value: 0.0,
        mode,
        norm: p,
        epsilon: eps,
        warning: None,
    };
    match mode {
        TimeMode::Discrete => {
            let period = oracle.chain().period();
            if oracle.discrete(0, p) <= eps {
                return Ok(out);
            }
            let mut hi = 1u64;
            while oracle.discrete(hi, p) > eps {
                if hi >= 1 << MAX_STEP_EXPONENT {
                    if period > 1 {
                        return Err(Error::Periodic { period });
                    }
                    return Err(Error::NoConvergenceInWindow { t_max: hi as f64 });
                }
                hi *= 2;
            }
            let mut lo = hi / 2;
            while hi - lo > 1 {
                let mid = lo + (hi - lo) / 2;
                if oracle.discrete(mid, p) <= eps {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            if period > 1 {
                out.warning = Some(format!("chain has period {period}"));
            }
            out.value = hi as f64;
            Ok(out)
        }
        TimeMode::Continuous => {
            if oracle.continuous(0.0, p) <= eps {
                return Ok(out);
            }
            let gap = oracle.gap()?;
            let scale = if gap > 0.0 { 1.0 / gap } else { 1.0 };
            let t_max = scale * 1e6;
            let mut hi = scale * 1e-3;
            let mut lo = 0.0;
            while oracle.continuous(hi, p) > eps {
                lo = hi;
                hi *= 2.0;
                if hi > t_max {
                    return Err(Error::NoConvergenceInWindow { t_max });
                }
            }
            while hi - lo > 1e-8 * hi {
                let mid = 0.5 * (lo + hi);
                if oracle.continuous(mid, p) <= eps {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            if !oracle.chain().is_reversible() {
                let bad = (1..=64)
                    .map(|i| hi * (1.0 + i as f64 / 64.0))
                    .find(|&t| oracle.continuous(t, p) > eps * (1.0 + 1e-9));
                if let Some(t) = bad {
                    out.warning = Some(format!("distance exceeds eps again at t = {t}"));
                }
            }
            out.value = hi;
            Ok(out)
        }
    }
}

/// Sampled `sup_x d_p` on a time grid.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceCurve {
    pub times: Vec<f64>,
    pub values: Vec<f64>,
    pub p: Norm,
}

impl DistanceCurve {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn points(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        self.times.iter().copied().zip(self.values.iter().copied())
    }
}

/// 64 log-spaced points per decade from `1e-3 / lambda_1` to `20 / lambda_1`.
pub fn default_time_grid(lambda1: f64) -> Vec<f64> {
    log_grid(1e-3 / lambda1, 20.0 / lambda1, 64)
}

pub fn log_grid(a: f64, b: f64, per_decade: usize) -> Vec<f64> {
    let decades = (b / a).log10();
    let steps = (decades * per_decade as f64).ceil().max(1.0) as usize;
    (0..=steps)
        .map(|i| a * 10f64.powf(decades * i as f64 / steps as f64))
        .collect()
}

pub fn distance_curve<T: Real>(
    chain: &MarkovChain<T>,
    p: Norm,
    times: &[f64],
) -> Result<DistanceCurve> {
    if times.windows(2).any(|w| !(w[1] > w[0])) || times.iter().any(|t| !(*t >= 0.0)) {
        return Err(Error::InvalidParameter(
            "time grid must be non-negative and increasing".into(),
        ));
    }
    let oracle = DistanceOracle::new(chain)?;
    let values = times.par_iter().map(|&t| oracle.continuous(t, p)).collect();
    Ok(DistanceCurve {
        times: times.to_vec(),
        values,
        p,
    })
}
