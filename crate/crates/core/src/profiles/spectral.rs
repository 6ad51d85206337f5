use super::enumerate::{enumerate_sets, mask_members, EnumerationMode, MaskedSet};
use super::step::{ProfileKind, ProfileSource, StepProfile};
use crate::chain::MarkovChain;
use crate::linalg::symmetric_eigenvalues;
use crate::subset::{lambda_variational, principal_submatrix, Subset, VariationalOptions};
use crate::{Error, Real, Result};
use rayon::prelude::*;

/// `lambda_1`: second-smallest eigenvalue of the symmetrized Laplacian.
pub fn spectral_gap<T: Real>(chain: &MarkovChain<T>) -> Result<T> {
    chain.spectral_gap()
}

/// Options for [`spectral_profile_exhaustive`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ProfileOptions {
    /// Largest state count accepted for enumeration.
    pub cap: usize,
    /// Sets with mass above `r_max` are not enumerated.
    pub r_max: f64,
    pub mode: EnumerationMode,
    /// Run the variational search on the argmin sets of the upper edge.
    pub refine: bool,
    /// Sets refined per breakpoint.
    pub refine_per_breakpoint: usize,
    /// Argmin sets reported per breakpoint.
    pub max_ties: usize,
    /// Abort (with `TooLarge`) beyond this many sets.
    pub set_budget: Option<usize>,
    pub variational: VariationalOptions,
}

impl Default for ProfileOptions {
    fn default() -> Self {
        Self {
            cap: 20,
            r_max: f64::INFINITY,
            mode: EnumerationMode::Connected,
            refine: true,
            refine_per_breakpoint: 4,
            max_ties: 32,
            set_budget: None,
            variational: VariationalOptions::default(),
        }
    }
}

/// A set attaining the band at some breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct ArgminSet<T: Real> {
    pub members: Vec<usize>,
    pub mass: T,
    pub lambda0: T,
    /// Best known upper bound on `lambda(S)`.
    pub upper: T,
}

/// Exhaustive spectral profile, reported as a band.
///
/// * `dirichlet`: `r -> inf lambda_0(S)` over proper `S` with `pi(S) <= r`.
/// * `lower`: the same infimum of `max(lambda_0(S), lambda_1)`, continued by
///   `lambda_1` from `r = 1` on; a certified lower bound of the spectral
///   profile because `lambda(S) >= lambda_1` for every `S`.
/// * `upper`: infimum of the best upper bound on `lambda(S)`
///   (`lambda_0(S) / (1 - pi(S))`, refined variationally).
#[derive(Debug, Clone)]
pub struct SpectralProfileBand<T: Real> {
    pub dirichlet: StepProfile<T>,
    pub lower: StepProfile<T>,
    pub upper: StepProfile<T>,
    pub lambda1: T,
    pub argmin: Vec<ArgminSet<T>>,
    pub sets_examined: usize,
    /// True when every proper subset (up to the reduction) was visited.
    pub complete: bool,
}

struct Evaluated<T: Real> {
    set: MaskedSet<T>,
    lambda0: T,
    lower: T,
    upper: T,
}

fn group_by_mass<T: Real>(items: &[Evaluated<T>]) -> Vec<std::ops::Range<usize>> {
    let mut groups = Vec::new();
    let mut start = 0;
    for i in 1..=items.len() {
        let split = i == items.len() || {
            let a = items[start].set.mass;
            items[i].set.mass > a + a * T::tol(1e-12)
        };
        if split {
            groups.push(start..i);
            start = i;
        }
    }
    groups
}

fn running_min<T: Real>(
    groups: &[std::ops::Range<usize>],
    items: &[Evaluated<T>],
    f: impl Fn(&Evaluated<T>) -> T,
) -> Vec<T> {
    let mut best = T::infinity();
    groups
        .iter()
        .map(|g| {
            for it in &items[g.clone()] {
                best = best.min(f(it));
            }
            best
        })
        .collect()
}

pub fn spectral_profile_exhaustive<T: Real>(
    chain: &MarkovChain<T>,
    opts: &ProfileOptions,
) -> Result<SpectralProfileBand<T>> {
    let n = chain.n();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "profile of a one-state chain".into(),
        ));
    }
    let pi_star = chain.pi_star();
    let r_max = T::lit(opts.r_max);
    if !(r_max > pi_star) {
        return Err(Error::InvalidParameter(format!(
            "r_max = {} does not exceed pi_*",
            opts.r_max
        )));
    }
    let lambda1 = chain.spectral_gap()?;
    let sets = enumerate_sets(chain, opts.mode, r_max, opts.cap, opts.set_budget)?;
    let op = chain.symmetrized_laplacian();
    let mut items: Vec<Evaluated<T>> = sets
        .par_iter()
        .map(|s| {
            let idx = mask_members(s.mask);
            let l0 = symmetric_eigenvalues(principal_submatrix(&op, &idx))?[0].max(T::zero());
            let lower = l0.max(lambda1);
            let upper = (l0 / (T::one() - s.mass)).max(lower);
            Ok(Evaluated {
                set: *s,
                lambda0: l0,
                lower,
                upper,
            })
        })
        .collect::<Result<_>>()?;
    let groups = group_by_mass(&items);

    if opts.refine {
        let upper_min = running_min(&groups, &items, |e| e.upper);
        let mut targets = Vec::new();
        let mut prev = T::infinity();
        for (g, &m) in groups.iter().zip(&upper_min) {
            if m < prev {
                let mut hits: Vec<usize> = g.clone().filter(|&i| items[i].upper <= m).collect();
                hits.truncate(opts.refine_per_breakpoint);
                targets.extend(hits);
            }
            prev = m;
        }
        let refined: Vec<(usize, T)> = targets
            .par_iter()
            .map(|&i| {
                let sub = Subset::new(chain, mask_members(items[i].set.mask))?;
                Ok((i, lambda_variational(chain, &sub, &opts.variational)?.value))
            })
            .collect::<Result<_>>()?;
        for (i, v) in refined {
            let e = &mut items[i];
            e.upper = e.upper.min(v).max(e.lower);
        }
    }

    let dir = running_min(&groups, &items, |e| e.lambda0);
    let low = running_min(&groups, &items, |e| e.lower);
    let up = running_min(&groups, &items, |e| e.upper);
    let mut bps: Vec<T> = groups.iter().map(|g| items[g.start].set.mass).collect();

    let mut argmin = Vec::new();
    let mut prev = T::infinity();
    for (g, &m) in groups.iter().zip(&dir) {
        if m < prev {
            for i in g
                .clone()
                .filter(|&i| items[i].lambda0 <= m)
                .take(opts.max_ties)
            {
                let e = &items[i];
                argmin.push(ArgminSet {
                    members: mask_members(e.set.mask),
                    mass: e.set.mass,
                    lambda0: e.lambda0,
                    upper: e.upper,
                });
            }
        }
        prev = m;
    }

    let complete = r_max >= T::one() - pi_star;
    let one = T::one();
    let half = T::lit(0.5);
    let two = T::lit(2.0);
    let last_bp = *bps.last().unwrap();
    let r_edge = if r_max > last_bp {
        r_max
    } else {
        last_bp + last_bp * T::EPSILON * T::lit(4.0)
    };
    let dirichlet_end = if complete { one } else { r_edge };
    let dirichlet = StepProfile::new(
        bps.clone(),
        dir,
        Some(dirichlet_end),
        ProfileKind::Exact,
        ProfileSource::Enumeration,
    )?
    .simplified();

    let mut low_vals = low;
    let mut up_vals = up;
    if complete {
        bps.push(one);
        low_vals.push(lambda1);
        up_vals.push(lambda1);
    } else {
        let last_up = *up_vals.last().unwrap();
        bps.push(r_edge);
        low_vals.push(lambda1);
        up_vals.push(last_up);
        if r_edge < half {
            bps.push(half);
            low_vals.push(lambda1);
            up_vals.push(last_up.min(two * lambda1));
        } else {
            let v = up_vals.last_mut().unwrap();
            *v = v.min(two * lambda1);
        }
        if r_edge < one {
            let v = *up_vals.last().unwrap();
            bps.push(one);
            low_vals.push(lambda1);
            up_vals.push(v.min(lambda1));
        }
    }
    let kind_low = ProfileKind::LowerEnvelope;
    let lower = StepProfile::new(
        bps.clone(),
        low_vals,
        None,
        kind_low,
        ProfileSource::Enumeration,
    )?
    .simplified();
    let upper = StepProfile::new(
        bps,
        up_vals,
        None,
        ProfileKind::UpperEnvelope,
        ProfileSource::Enumeration,
    )?
    .simplified();
    Ok(SpectralProfileBand {
        dirichlet,
        lower,
        upper,
        lambda1,
        argmin,
        sets_examined: items.len(),
        complete,
    })
}
