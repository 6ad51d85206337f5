use super::step::{lower_steps, ProfileKind, ProfileSource, StepProfile};
use crate::chain::MarkovChain;
use crate::{Real, Result};
use std::collections::VecDeque;

/// Hop distances from `source` in the undirected support graph.
pub fn bfs_hops<T: Real>(chain: &MarkovChain<T>, source: usize) -> Vec<u32> {
    let mut dist = vec![u32::MAX; chain.n()];
    dist[source] = 0;
    let mut queue = VecDeque::from([source]);
    while let Some(x) = queue.pop_front() {
        for &y in chain.neighbors(x) {
            if dist[y] == u32::MAX {
                dist[y] = dist[x] + 1;
                queue.push_back(y);
            }
        }
    }
    dist
}

/// Ball volumes `V(x, r) = pi(B(x, r))` in the graph `x ~ y` iff
/// `pi(x)K(x, y) + pi(y)K(y, x) > 0`.
#[derive(Debug, Clone)]
pub struct GrowthData<T: Real> {
    dist: Vec<Vec<u32>>,
    volumes: Vec<Vec<T>>,
    v_star: Vec<T>,
    diameter: usize,
}

pub fn growth_data<T: Real>(chain: &MarkovChain<T>) -> GrowthData<T> {
    let n = chain.n();
    let pi = chain.pi();
    let dist: Vec<Vec<u32>> = (0..n).map(|x| bfs_hops(chain, x)).collect();
    let diameter = dist.iter().flatten().copied().max().unwrap_or(0) as usize;
    let volumes: Vec<Vec<T>> = dist
        .iter()
        .map(|row| {
            let ecc = row.iter().copied().max().unwrap_or(0) as usize;
            let mut shell = vec![T::zero(); diameter + 1];
            for (y, &d) in row.iter().enumerate() {
                shell[d as usize] += pi[y];
            }
            let mut acc = T::zero();
            shell
                .iter()
                .enumerate()
                .map(|(r, &s)| {
                    acc += s;
                    if r >= ecc {
                        T::one()
                    } else {
                        acc
                    }
                })
                .collect()
        })
        .collect();
    let v_star = (0..=diameter)
        .map(|r| {
            volumes
                .iter()
                .map(|v| v[r])
                .fold(T::infinity(), |a, b| a.min(b))
        })
        .collect();
    GrowthData {
        dist,
        volumes,
        v_star,
        diameter,
    }
}

impl<T: Real> GrowthData<T> {
    pub fn n(&self) -> usize {
        self.dist.len()
    }

    /// `gamma`, the graph diameter.
    pub fn diameter(&self) -> usize {
        self.diameter
    }

    pub fn distance(&self, x: usize, y: usize) -> usize {
        self.dist[x][y] as usize
    }

    pub fn distances_from(&self, x: usize) -> &[u32] {
        &self.dist[x]
    }

    /// `V(x, r)` for integer radius `r`.
    pub fn volume(&self, x: usize, r: usize) -> T {
        self.volumes[x][r.min(self.diameter)]
    }

    /// `V_*(r) = min_x V(x, r)`.
    pub fn v_star(&self, r: usize) -> T {
        self.v_star[r.min(self.diameter)]
    }

    pub fn v_star_table(&self) -> &[T] {
        &self.v_star
    }

    /// `w(r) = inf{k : V_*(k) > r}`; `None` (infinite) when `r >= 1`.
    pub fn w(&self, r: T) -> Option<usize> {
        self.v_star.iter().position(|&v| v > r)
    }

    /// `W(v) = inf{r : V_*(r) >= v}`; `None` when `v > 1`.
    pub fn big_w(&self, v: T) -> Option<usize> {
        self.v_star.iter().position(|&s| s >= v)
    }
}

/// Result of scanning the moderate growth condition.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModerateGrowthCheck {
    pub holds: bool,
    /// First `(x, r)` with `V(x, r) < ((r + 1) / gamma)^d / A`.
    pub witness: Option<(usize, usize)>,
}

fn growth_target<T: Real>(r: usize, gamma: usize, d: T) -> T {
    (T::from_usize_lossy(r + 1) / T::from_usize_lossy(gamma.max(1))).powf(d)
}

/// Checks `V(x, r) >= ((r + 1) / gamma)^d / A` for all `x` and `0 <= r <= gamma`.
pub fn moderate_growth_check<T: Real>(growth: &GrowthData<T>, a: T, d: T) -> ModerateGrowthCheck {
    let gamma = growth.diameter();
    let slack = T::one() - T::tol(1e-12);
    for x in 0..growth.n() {
        for r in 0..=gamma {
            if growth.volume(x, r) < growth_target(r, gamma, d) / a * slack {
                return ModerateGrowthCheck {
                    holds: false,
                    witness: Some((x, r)),
                };
            }
        }
    }
    ModerateGrowthCheck {
        holds: true,
        witness: None,
    }
}

/// Smallest `A` for which the `(A, d)` moderate growth condition holds.
pub fn min_moderate_growth_constant<T: Real>(growth: &GrowthData<T>, d: T) -> T {
    let gamma = growth.diameter();
    let mut a = T::zero();
    for x in 0..growth.n() {
        for r in 0..=gamma {
            a = a.max(growth_target(r, gamma, d) / growth.volume(x, r));
        }
    }
    a
}

const ENVELOPE_RATIO: f64 = 1.01;

/// Lower envelope `r -> Q_* / (4 r w(r))` on `[pi_*, 1)`.
pub fn volume_profile_bound<T: Real>(
    chain: &MarkovChain<T>,
    growth: &GrowthData<T>,
) -> Result<StepProfile<T>> {
    let q = chain.min_edge_flow();
    let ratio = T::lit(ENVELOPE_RATIO);
    let mut bps = Vec::new();
    let mut vals = Vec::new();
    let table = growth.v_star_table();
    let four = T::lit(4.0);
    for k in 1..table.len() {
        let (a, b) = (table[k - 1], table[k]);
        if !(b > a) {
            continue;
        }
        let kk = T::from_usize_lossy(k);
        let (pb, pv) = lower_steps(a, b, ratio, |r| q / (four * r * kk));
        bps.extend(pb);
        vals.extend(pv);
    }
    if bps.is_empty() {
        bps.push(chain.pi_star());
        vals.push(q / (four * chain.pi_star()));
    }
    StepProfile::new(
        bps,
        vals,
        Some(T::one()),
        ProfileKind::LowerEnvelope,
        ProfileSource::Volume,
    )
}

/// Lower envelope `v -> 1 / (4 a W(2v)^2)` for `v <= 1/2`, continued beyond
/// `1/2` by half its value at `1/2`.
pub fn poincare_profile_bound<T: Real>(
    growth: &GrowthData<T>,
    a: T,
    pi_star: T,
) -> Result<StepProfile<T>> {
    let half = T::lit(0.5);
    let four = T::lit(4.0);
    let table = growth.v_star_table();
    let mut bps = Vec::new();
    let mut vals = Vec::new();
    for k in 1..table.len() {
        let lo = (table[k - 1] * half).max(pi_star);
        let hi = (table[k] * half).min(half);
        if hi > lo {
            let kk = T::from_usize_lossy(k);
            bps.push(lo);
            vals.push(T::one() / (four * a * kk * kk));
        }
    }
    let gamma = T::from_usize_lossy(growth.diameter().max(1));
    let at_half = T::one() / (four * a * gamma * gamma);
    if bps.is_empty() || *bps.last().unwrap() < half {
        bps.push(half);
    } else {
        vals.pop();
    }
    vals.push(at_half * half);
    if bps[0] > pi_star {
        bps.insert(0, pi_star);
        vals.insert(0, vals[0]);
    }
    StepProfile::new(
        bps,
        vals,
        None,
        ProfileKind::LowerEnvelope,
        ProfileSource::Poincare,
    )
    .map(|p| p.simplified())
}
