use crate::chain::MarkovChain;
use crate::{Error, Real, Result};
use rayon::prelude::*;
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};

/// Which subsets an exhaustive profile visits.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum EnumerationMode {
    /// Connected sets only; exact for both profiles because a disconnected
    /// set is never better than its best component.
    #[default]
    Connected,
    /// Every subset.
    All,
}

/// Largest chain accepted by bit-mask enumeration.
pub const MASK_BITS: usize = 63;

/// A proper subset encoded as a bit mask, with its stationary mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MaskedSet<T: Real> {
    pub mask: u64,
    pub mass: T,
}

pub fn mask_members(mask: u64) -> Vec<usize> {
    (0..64).filter(|&i| mask >> i & 1 == 1).collect()
}

struct Search<'a, T: Real> {
    adj: &'a [u64],
    pi: &'a [T],
    limit: T,
    full: u64,
    root: usize,
    budget: Option<usize>,
    count: &'a AtomicUsize,
    aborted: &'a AtomicBool,
    out: Vec<MaskedSet<T>>,
}

impl<T: Real> Search<'_, T> {
    fn extend(&mut self, sub: u64, closed_nbhd: u64, ext: u64, mass: T) {
        if self.aborted.load(Ordering::Relaxed) {
            return;
        }
        if sub != self.full {
            self.out.push(MaskedSet { mask: sub, mass });
            if let Some(b) = self.budget {
                if self.count.fetch_add(1, Ordering::Relaxed) + 1 > b {
                    self.aborted.store(true, Ordering::Relaxed);
                    return;
                }
            }
        }
        let mut ext = ext;
        while ext != 0 {
            let w = ext.trailing_zeros() as usize;
            ext &= ext - 1;
            let m = mass + self.pi[w];
            if m > self.limit {
                continue;
            }
            let above_root = !((1u64 << (self.root + 1)) - 1);
            let fresh = self.adj[w] & !closed_nbhd & above_root;
            self.extend(sub | 1 << w, closed_nbhd | self.adj[w], ext | fresh, m);
        }
    }
}

/// Proper subsets with `pi(S) <= mass_limit`, connected ones only or all.
///
/// Fails with [`Error::TooLarge`] when `n > cap`, or when more than `budget`
/// sets would be produced.
pub fn enumerate_sets<T: Real>(
    chain: &MarkovChain<T>,
    mode: EnumerationMode,
    mass_limit: T,
    cap: usize,
    budget: Option<usize>,
) -> Result<Vec<MaskedSet<T>>> {
    let n = chain.n();
    if n > cap.min(MASK_BITS) {
        return Err(Error::TooLarge {
            n,
            cap: cap.min(MASK_BITS),
        });
    }
    let pi: Vec<T> = chain.pi().iter().copied().collect();
    let full = if n == 64 { u64::MAX } else { (1u64 << n) - 1 };
    let limit = mass_limit * (T::one() + T::tol(1e-12));
    let mut sets = match mode {
        EnumerationMode::All => {
            if let Some(b) = budget {
                if n < 64 && (1usize << n) > b.saturating_add(2) {
                    return Err(Error::TooLarge { n, cap });
                }
            }
            (1..full)
                .into_par_iter()
                .filter_map(|mask| {
                    let mass = mask_members(mask).iter().fold(T::zero(), |a, &i| a + pi[i]);
                    (mass <= limit).then_some(MaskedSet { mask, mass })
                })
                .collect::<Vec<_>>()
        }
        EnumerationMode::Connected => {
            let adj: Vec<u64> = (0..n)
                .map(|x| chain.neighbors(x).iter().fold(0u64, |m, &y| m | 1 << y))
                .collect();
            let count = AtomicUsize::new(0);
            let aborted = AtomicBool::new(false);
            let parts: Vec<Vec<MaskedSet<T>>> = (0..n)
                .into_par_iter()
                .map(|root| {
                    let mut s = Search {
                        adj: &adj,
                        pi: &pi,
                        limit,
                        full,
                        root,
                        budget,
                        count: &count,
                        aborted: &aborted,
                        out: Vec::new(),
                    };
                    if pi[root] <= limit {
                        let above_root = !((1u64 << (root + 1)) - 1);
                        s.extend(
                            1 << root,
                            adj[root] | 1 << root,
                            adj[root] & above_root,
                            pi[root],
                        );
                    }
                    s.out
                })
                .collect();
            if aborted.load(Ordering::Relaxed) {
                return Err(Error::TooLarge { n, cap });
            }
            parts.into_iter().flatten().collect()
        }
    };
    sets.sort_by(|a, b| {
        a.mass
            .partial_cmp(&b.mass)
            .unwrap()
            .then(a.mask.cmp(&b.mask))
    });
    Ok(sets)
}
