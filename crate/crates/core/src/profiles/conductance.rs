use super::enumerate::{enumerate_sets, mask_members, EnumerationMode};
use super::growth::GrowthData;
use super::step::{geometric_points, lower_steps, ProfileKind, ProfileSource, StepProfile};
use crate::chain::MarkovChain;
use crate::linalg::symmetric_eigen;
use crate::{Error, Real, Result};
use rayon::prelude::*;

/// How the conductance profile is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ConductanceMode {
    /// Exact enumeration when `n <= cap`, sweep heuristic otherwise.
    #[default]
    Auto,
    Exact,
    Sweep,
}

/// `Phi` on `[pi_*, 1)` and its truncation `Phi_*`, frozen at `Phi(1/2)`.
#[derive(Debug, Clone)]
pub struct ConductanceProfiles<T: Real> {
    pub phi: StepProfile<T>,
    pub phi_star: StepProfile<T>,
    /// Sets attaining `Phi` at its breakpoints.
    pub argmin: Vec<(Vec<usize>, T)>,
}

impl<T: Real> ConductanceProfiles<T> {
    pub fn is_exact(&self) -> bool {
        self.phi.kind() == ProfileKind::Exact
    }
}

/// `Q(S, S^c)` computed from neighbour lists.
fn boundary_of<T: Real>(chain: &MarkovChain<T>, inside: &[bool], members: &[usize]) -> T {
    let k = chain.kernel();
    let pi = chain.pi();
    members.iter().fold(T::zero(), |acc, &x| {
        let out = chain
            .neighbors(x)
            .iter()
            .filter(|&&y| !inside[y])
            .fold(T::zero(), |a, &y| a + k[(x, y)]);
        acc + pi[x] * out
    })
}

fn profiles_from_ratios<T: Real>(
    mut sets: Vec<(T, T, Vec<usize>)>,
    kind: ProfileKind,
    source: ProfileSource,
) -> Result<ConductanceProfiles<T>> {
    sets.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let half = T::lit(0.5) * (T::one() + T::tol(1e-12));
    let mut bps: Vec<T> = Vec::new();
    let mut vals: Vec<T> = Vec::new();
    let mut star_len = 0;
    let mut argmin = Vec::new();
    let mut best = T::infinity();
    for (mass, ratio, members) in sets {
        if ratio < best {
            best = ratio;
            argmin.push((members, ratio));
        }
        match bps.last() {
            Some(&b) if mass <= b + b * T::tol(1e-12) => *vals.last_mut().unwrap() = best,
            _ => {
                bps.push(mass);
                vals.push(best);
            }
        }
        if mass <= half {
            star_len = bps.len();
        }
    }
    if bps.is_empty() {
        return Err(Error::InvalidParameter("no candidate sets".into()));
    }
    let phi =
        StepProfile::new(bps.clone(), vals.clone(), Some(T::one()), kind, source)?.simplified();
    let star_len = star_len.max(1);
    let phi_star = StepProfile::new(
        bps[..star_len].to_vec(),
        vals[..star_len].to_vec(),
        None,
        kind,
        source,
    )?
    .simplified();
    Ok(ConductanceProfiles {
        phi,
        phi_star,
        argmin,
    })
}

/// Conductance profiles by exact enumeration or, for large chains, by a
/// sweep over balls, edge-separated halves and spectral level sets (an
/// upper envelope).
pub fn conductance_profile<T: Real>(
    chain: &MarkovChain<T>,
    mode: ConductanceMode,
    cap: usize,
    growth: Option<&GrowthData<T>>,
) -> Result<ConductanceProfiles<T>> {
    let n = chain.n();
    if n < 2 {
        return Err(Error::InvalidParameter(
            "conductance of a one-state chain".into(),
        ));
    }
    let exact = match mode {
        ConductanceMode::Exact => true,
        ConductanceMode::Sweep => false,
        ConductanceMode::Auto => n <= cap,
    };
    if exact {
        let sets = enumerate_sets(chain, EnumerationMode::Connected, T::one(), cap, None)?;
        let rows: Vec<(T, T, Vec<usize>)> = sets
            .par_iter()
            .map(|s| {
                let members = mask_members(s.mask);
                let mut inside = vec![false; n];
                members.iter().for_each(|&x| inside[x] = true);
                let b = boundary_of(chain, &inside, &members);
                (s.mass, b / s.mass, members)
            })
            .collect();
        return profiles_from_ratios(rows, ProfileKind::Exact, ProfileSource::Enumeration);
    }
    let owned;
    let growth = match growth {
        Some(g) => g,
        None => {
            owned = super::growth::growth_data(chain);
            &owned
        }
    };
    let candidates = sweep_candidates(chain, growth)?;
    let rows: Vec<(T, T, Vec<usize>)> = candidates
        .into_par_iter()
        .filter_map(|members| {
            if members.is_empty() || members.len() == n {
                return None;
            }
            let mut inside = vec![false; n];
            members.iter().for_each(|&x| inside[x] = true);
            let mass = members.iter().fold(T::zero(), |a, &x| a + chain.pi()[x]);
            let b = boundary_of(chain, &inside, &members);
            Some((mass, b / mass, members))
        })
        .collect();
    profiles_from_ratios(rows, ProfileKind::UpperEnvelope, ProfileSource::Sweep)
}

fn sweep_candidates<T: Real>(
    chain: &MarkovChain<T>,
    growth: &GrowthData<T>,
) -> Result<Vec<Vec<usize>>> {
    let n = chain.n();
    let mut out = Vec::new();
    for x in 0..n {
        let d = growth.distances_from(x);
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by_key(|&y| (d[y], y));
        let mut end = 0;
        while end < n {
            let r = d[order[end]];
            while end < n && d[order[end]] == r {
                end += 1;
            }
            out.push(order[..end].to_vec());
        }
    }
    for u in 0..n {
        for &v in chain.neighbors(u) {
            if u < v {
                let (du, dv) = (growth.distances_from(u), growth.distances_from(v));
                out.push((0..n).filter(|&z| du[z] < dv[z]).collect());
                out.push((0..n).filter(|&z| dv[z] < du[z]).collect());
            }
        }
    }
    let (_, vecs) = symmetric_eigen(chain.symmetrized_laplacian())?;
    let pi = chain.pi();
    let f: Vec<T> = (0..n).map(|x| vecs[(x, 1)] / pi[x].sqrt()).collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| f[a].partial_cmp(&f[b]).unwrap().then(a.cmp(&b)));
    for k in 1..n {
        out.push(order[..k].to_vec());
        out.push(order[n - k..].to_vec());
    }
    Ok(out)
}

/// Certified lower envelopes `Phi(r) >= Q_* / (2r)` and `Phi_*(r) >= Q_*`
/// for `r >= 1/2`, where `Q_*` is the smallest edge flow.
pub fn conductance_lower_envelope<T: Real>(
    chain: &MarkovChain<T>,
) -> Result<ConductanceProfiles<T>> {
    let q = chain.min_edge_flow();
    let two = T::lit(2.0);
    let half = T::lit(0.5);
    let ratio = T::lit(1.01);
    let pi_star = chain.pi_star();
    let f = |r: T| q / (two * r);
    let (bps, vals) = lower_steps(pi_star, T::one(), ratio, f);
    let phi = StepProfile::new(
        bps,
        vals,
        Some(T::one()),
        ProfileKind::LowerEnvelope,
        ProfileSource::EdgeFlow,
    )?;
    let (mut sb, mut sv) = if pi_star < half {
        lower_steps(pi_star, half, ratio, f)
    } else {
        (Vec::new(), Vec::new())
    };
    sb.push(half.max(pi_star));
    sv.push(f(half.max(pi_star)));
    let phi_star = StepProfile::new(
        sb,
        sv,
        None,
        ProfileKind::LowerEnvelope,
        ProfileSource::EdgeFlow,
    )?;
    Ok(ConductanceProfiles {
        phi,
        phi_star,
        argmin: Vec::new(),
    })
}

/// Cheeger envelopes `Phi^2 / 2 <= Lambda <= Phi / (1 - r)`.
///
/// The lower envelope needs an exact or lower `Phi`; the upper one needs an
/// exact or upper `Phi`. The unavailable side is `None`.
pub fn cheeger_envelopes<T: Real>(
    phi: &StepProfile<T>,
) -> Result<(Option<StepProfile<T>>, Option<StepProfile<T>>)> {
    let lower = match phi.kind() {
        ProfileKind::UpperEnvelope => None,
        _ => Some(
            phi.map_values(|v| v * v * T::lit(0.5))
                .with_provenance(ProfileKind::LowerEnvelope, ProfileSource::Cheeger),
        ),
    };
    let upper = match phi.kind() {
        ProfileKind::LowerEnvelope => None,
        _ => Some(cheeger_upper(phi)?),
    };
    Ok((lower, upper))
}

fn cheeger_upper<T: Real>(phi: &StepProfile<T>) -> Result<StepProfile<T>> {
    let one = T::one();
    let end = phi.end().map_or(one, |e| e.min(one));
    let mut bps = Vec::new();
    let mut vals = Vec::new();
    for (a, b, v) in phi.pieces() {
        if a >= end {
            break;
        }
        let b = b.map_or(end, |b| b.min(end));
        let (sa, sb) = (one - a, one - b);
        if sb > T::zero() {
            let pts = geometric_points(sb, sa, T::lit(1.02));
            for w in pts.windows(2).rev() {
                bps.push(one - w[1]);
                vals.push(v / w[0]);
            }
        } else {
            let floor = sa * T::lit(1e-6);
            let pts = geometric_points(floor, sa, T::lit(1.02));
            for w in pts.windows(2).rev() {
                bps.push(one - w[1]);
                vals.push(v / w[0]);
            }
            bps.push(one - floor);
            vals.push(T::infinity());
        }
    }
    let mut cleaned_b: Vec<T> = Vec::with_capacity(bps.len());
    let mut cleaned_v: Vec<T> = Vec::with_capacity(vals.len());
    for (b, v) in bps.into_iter().zip(vals) {
        if cleaned_b.last().is_some_and(|&l| b <= l) {
            let last = cleaned_v.last_mut().unwrap();
            *last = last.max(v);
            continue;
        }
        cleaned_b.push(b);
        cleaned_v.push(v);
    }
    StepProfile::new(
        cleaned_b,
        cleaned_v,
        Some(end),
        ProfileKind::UpperEnvelope,
        ProfileSource::Cheeger,
    )
}
