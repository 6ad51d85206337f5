use super::step::{lower_steps, ProfileKind, ProfileSource, StepProfile};
use crate::chain::MarkovChain;
use crate::linalg::symmetric_eigen;
use crate::{Error, Real, Result};
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `log(1/r) / (1 - r)`, with its series near `r = 1`.
pub fn log_ratio<T: Real>(r: T) -> T {
    let u = T::one() - r;
    if u.abs() < T::lit(1e-4) {
        T::one() + u / T::lit(2.0) + u * u / T::lit(3.0) + u * u * u / T::lit(4.0)
    } else {
        -r.ln() / u
    }
}

/// `rho log(1/r) / (1 - r)`.
pub fn logsob_envelope_value<T: Real>(rho: T, r: T) -> T {
    rho * log_ratio(r)
}

/// `max(0, 1 / (C r^{1/(2D)}) - 1/T)`.
pub fn nash_envelope_value<T: Real>(c: T, d: T, t: T, r: T) -> T {
    let v = T::one() / (c * r.powf(T::one() / (T::lit(2.0) * d))) - T::one() / t;
    v.max(T::zero())
}

const ENVELOPE_RATIO: f64 = 1.01;

fn check_positive<T: Real>(name: &str, v: T) -> Result<()> {
    if !(v > T::zero()) || !v.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "{name} = {v} must be positive and finite"
        )));
    }
    Ok(())
}

/// Step lower envelope of `rho log(1/r) / (1 - r)` on `[pi_*, 1)`.
pub fn logsob_profile_bound<T: Real>(rho: T, pi_star: T) -> Result<StepProfile<T>> {
    check_positive("rho", rho)?;
    check_positive("pi_*", pi_star)?;
    if pi_star >= T::one() {
        return Err(Error::InvalidParameter("pi_* must be below 1".into()));
    }
    let (bps, vals) = lower_steps(pi_star, T::one(), T::lit(ENVELOPE_RATIO), |r| {
        logsob_envelope_value(rho, r)
    });
    StepProfile::new(
        bps,
        vals,
        Some(T::one()),
        ProfileKind::LowerEnvelope,
        ProfileSource::Logsob,
    )
}

/// Step lower envelope of the Nash bound on `[pi_*, r_hi)`.
pub fn nash_profile_bound<T: Real>(
    c: T,
    d: T,
    t: T,
    pi_star: T,
    r_hi: T,
) -> Result<StepProfile<T>> {
    check_positive("C", c)?;
    check_positive("D", d)?;
    check_positive("T", t)?;
    check_positive("pi_*", pi_star)?;
    if !(r_hi > pi_star) {
        return Err(Error::InvalidParameter("upper end must exceed pi_*".into()));
    }
    let (bps, vals) = lower_steps(pi_star, r_hi, T::lit(ENVELOPE_RATIO), |r| {
        nash_envelope_value(c, d, t, r)
    });
    StepProfile::new(
        bps,
        vals,
        Some(r_hi),
        ProfileKind::LowerEnvelope,
        ProfileSource::Nash,
    )
}

/// Options for [`estimate_logsob`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSobolevOptions {
    pub restarts: usize,
    pub max_iter: usize,
    pub tol: f64,
    pub seed: u64,
    /// Chains up to this size seed the search with every two-level function.
    pub two_level_limit: usize,
}

impl Default for LogSobolevOptions {
    fn default() -> Self {
        Self {
            restarts: 16,
            max_iter: 4000,
            tol: 1e-13,
            seed: 0x10c5_0b01,
            two_level_limit: 12,
        }
    }
}

/// Estimate of the log-Sobolev constant.
///
/// Every evaluated quotient is attained by some function, so the estimate
/// is an upper bound on the true constant (`upper_estimate` is always true).
#[derive(Debug, Clone, PartialEq)]
pub struct LogSobolevEstimate<T: Real> {
    pub rho_hat: T,
    pub upper_estimate: bool,
    pub converged: bool,
    /// `lambda_1 / 2`, the limit of the quotient along `1 + s psi_1`, `s -> 0`.
    pub gap_limit: T,
    pub minimizer: Option<DVector<T>>,
}

/// `Ent_pi(f^2) = sum pi f^2 log(f^2 / |f|^2)`.
pub fn entropy_of_square<T: Real>(pi: &DVector<T>, f: &DVector<T>) -> T {
    let m = (0..f.len()).fold(T::zero(), |a, x| a + pi[x] * f[x] * f[x]);
    if !(m > T::zero()) {
        return T::zero();
    }
    (0..f.len()).fold(T::zero(), |a, x| {
        let s = f[x] * f[x];
        if s > T::zero() {
            a + pi[x] * s * (s / m).ln()
        } else {
            a
        }
    })
}

struct LogSobQuotient<T: Real> {
    m: DMatrix<T>,
    pi: DVector<T>,
}

impl<T: Real> LogSobQuotient<T> {
    fn value(&self, f: &DVector<T>) -> T {
        let ent = entropy_of_square(&self.pi, f);
        let scale = (0..f.len()).fold(T::zero(), |a, x| a + self.pi[x] * f[x] * f[x]);
        if ent > scale * T::tol(1e-13) {
            f.dot(&(&self.m * f)) / ent
        } else {
            T::infinity()
        }
    }

    fn gradient(&self, f: &DVector<T>, q: T) -> DVector<T> {
        let n = f.len();
        let ent = entropy_of_square(&self.pi, f);
        let mass = (0..n).fold(T::zero(), |a, x| a + self.pi[x] * f[x] * f[x]);
        let two = T::lit(2.0);
        let mf = &self.m * f;
        DVector::from_fn(n, |x, _| {
            let dent = if f[x] > T::zero() {
                two * self.pi[x] * f[x] * (f[x] * f[x] / mass).ln()
            } else {
                T::zero()
            };
            (two * mf[x] - q * dent) / ent
        })
    }

    fn normalize(&self, f: &mut DVector<T>) -> bool {
        let norm = (0..f.len())
            .fold(T::zero(), |a, x| a + self.pi[x] * f[x] * f[x])
            .sqrt();
        if !(norm > T::zero()) {
            return false;
        }
        *f /= norm;
        true
    }

    fn descend(
        &self,
        start: DVector<T>,
        opts: &LogSobolevOptions,
    ) -> Option<(T, DVector<T>, bool)> {
        let mut f = start.map(|v| v.abs());
        if !self.normalize(&mut f) {
            return None;
        }
        let mut q = self.value(&f);
        if !q.is_finite() {
            return None;
        }
        let tol = T::tol(opts.tol);
        let mut step = T::lit(0.1);
        let mut stalls = 0;
        for _ in 0..opts.max_iter {
            let g = self.gradient(&f, q);
            let mut st = step;
            let mut accepted = None;
            for _ in 0..60 {
                let mut cand = (&f - &g * st).map(|v| v.max(T::zero()));
                if self.normalize(&mut cand) {
                    let qc = self.value(&cand);
                    if qc < q {
                        accepted = Some((cand, qc));
                        break;
                    }
                }
                st *= T::lit(0.5);
            }
            let Some((cand, qc)) = accepted else {
                return Some((q, f, true));
            };
            let gain = q - qc;
            f = cand;
            q = qc;
            step = st * T::lit(2.0);
            if gain <= tol * q {
                stalls += 1;
                if stalls >= 8 {
                    return Some((q, f, true));
                }
            } else {
                stalls = 0;
            }
        }
        Some((q, f, false))
    }
}

/// Multi-restart projected descent on `E(f, f) / Ent_pi(f^2)`.
pub fn estimate_logsob<T: Real>(
    chain: &MarkovChain<T>,
    opts: &LogSobolevOptions,
) -> Result<LogSobolevEstimate<T>> {
    let n = chain.n();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "log-Sobolev constant of a one-state chain".into(),
        ));
    }
    let pi = chain.pi().clone();
    let sq: Vec<T> = pi.iter().map(|p| p.sqrt()).collect();
    let lap = chain.symmetrized_laplacian();
    let m = DMatrix::from_fn(n, n, |x, y| sq[x] * lap[(x, y)] * sq[y]);
    let quotient = LogSobQuotient { m, pi: pi.clone() };
    let (vals, vecs) = symmetric_eigen(lap)?;
    let gap = vals[1].max(T::zero());
    let psi = DVector::from_fn(n, |x, _| vecs[(x, 1)] / sq[x]);
    let psi_scale = psi.amax().max(T::EPSILON);

    let mut candidates: Vec<(T, DVector<T>)> = Vec::new();
    let push = |f: DVector<T>, store: &mut Vec<(T, DVector<T>)>| {
        let q = quotient.value(&f);
        if q.is_finite() {
            store.push((q, f));
        }
    };
    for &s in &[0.05, 0.2, 0.5, 0.9, 0.99] {
        let s = T::lit(s) / psi_scale;
        push(
            DVector::from_fn(n, |x, _| (T::one() + s * psi[x]).max(T::zero())),
            &mut candidates,
        );
        push(
            DVector::from_fn(n, |x, _| (T::one() - s * psi[x]).max(T::zero())),
            &mut candidates,
        );
    }
    if n <= opts.two_level_limit {
        let levels = [0.0, 0.1, 0.3, 0.5, 2.0, 3.0, 10.0];
        for mask in 1u64..(1u64 << n) - 1 {
            for &a in &levels {
                let a = T::lit(a);
                push(
                    DVector::from_fn(n, |x, _| if mask >> x & 1 == 1 { a } else { T::one() }),
                    &mut candidates,
                );
            }
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    for _ in 0..opts.restarts {
        push(
            DVector::from_fn(n, |_, _| T::lit(rng.random::<f64>())),
            &mut candidates,
        );
    }
    candidates.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    candidates.truncate(opts.restarts.max(1));

    let mut best: Option<(T, DVector<T>)> = None;
    let mut converged = false;
    for (_, start) in candidates {
        if let Some((q, f, c)) = quotient.descend(start, opts) {
            converged |= c;
            if best.as_ref().is_none_or(|b| q < b.0) {
                best = Some((q, f));
            }
        }
    }
    let gap_limit = gap * T::lit(0.5);
    let (rho_hat, minimizer) = match best {
        Some((q, f)) if q < gap_limit => (q, Some(f)),
        _ => (gap_limit, None),
    };
    Ok(LogSobolevEstimate {
        rho_hat,
        upper_estimate: true,
        converged,
        gap_limit,
        minimizer,
    })
}
