//! Seeded invariant suites over random and zoo chains.

use crate::bounds::{Norm, Validity};
use crate::exact::DistanceOracle;
use crate::profiles::{
    conductance_profile, spectral_profile_exhaustive, ConductanceMode, EnumerationMode,
    ProfileOptions,
};
use crate::report::{evaluate_all, profile_bundle, ProfileMode, ReportContext};
use crate::subset::{lambda0, lambda_bracket, lambda_variational, Subset, VariationalOptions};
use crate::{zoo, Chain, Error, Result};
use nalgebra::DVector;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use std::fmt;
use std::str::FromStr;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Dirichlet,
    Flow,
    Semigroup,
    Bracket,
    Cheeger,
    Sandwich,
    Abs,
    Ebound,
    Envelope,
    Exact,
    Dominance,
}

impl Suite {
    pub const ALL: [Suite; 11] = [
        Suite::Dirichlet,
        Suite::Flow,
        Suite::Semigroup,
        Suite::Bracket,
        Suite::Cheeger,
        Suite::Sandwich,
        Suite::Abs,
        Suite::Ebound,
        Suite::Envelope,
        Suite::Exact,
        Suite::Dominance,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Suite::Dirichlet => "dirichlet",
            Suite::Flow => "flow",
            Suite::Semigroup => "semigroup",
            Suite::Bracket => "bracket",
            Suite::Cheeger => "cheeger",
            Suite::Sandwich => "sandwich",
            Suite::Abs => "abs",
            Suite::Ebound => "ebound",
            Suite::Envelope => "envelope",
            Suite::Exact => "exact",
            Suite::Dominance => "dominance",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.as_str() == s)
            .ok_or_else(|| Error::Parse(format!("unknown suite {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SuiteConfig {
    pub seed: u64,
    /// Random chains per suite.
    pub chains: usize,
    /// Random functions per suite, spread over the chains.
    pub samples: usize,
    pub max_states: usize,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            seed: 0,
            chains: 50,
            samples: 500,
            max_states: 8,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Violation {
    pub invariant: &'static str,
    pub chain: String,
    pub detail: String,
    pub slack: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SuiteOutcome {
    pub suite: Suite,
    pub checks: usize,
    /// Smallest `rhs - lhs` seen over the inequalities of the suite.
    pub min_slack: f64,
    pub violations: Vec<Violation>,
}

impl SuiteOutcome {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

#[derive(Default)]
struct Tally {
    checks: usize,
    min_slack: f64,
    violations: Vec<Violation>,
}

impl Tally {
    fn new() -> Self {
        Self {
            min_slack: f64::INFINITY,
            ..Default::default()
        }
    }

    /// Records `lhs <= rhs` up to `tol`.
    fn le(&mut self, invariant: &'static str, chain: &str, lhs: f64, rhs: f64, tol: f64) {
        self.checks += 1;
        let slack = rhs - lhs;
        self.min_slack = self.min_slack.min(slack);
        if !(slack >= -tol) {
            self.violations.push(Violation {
                invariant,
                chain: chain.to_string(),
                detail: format!("{lhs} > {rhs}"),
                slack,
            });
        }
    }

    /// Records `|a - b| <= rel * max(1, |a|, |b|)`.
    fn close(&mut self, invariant: &'static str, chain: &str, a: f64, b: f64, rel: f64) {
        self.checks += 1;
        let scale = 1f64.max(a.abs()).max(b.abs());
        self.min_slack = self.min_slack.min(-(a - b).abs());
        if !((a - b).abs() <= rel * scale) {
            self.violations.push(Violation {
                invariant,
                chain: chain.to_string(),
                detail: format!("{a} != {b}"),
                slack: -(a - b).abs(),
            });
        }
    }

    fn fail(&mut self, invariant: &'static str, chain: &str, err: Error) {
        self.checks += 1;
        self.violations.push(Violation {
            invariant,
            chain: chain.to_string(),
            detail: err.to_string(),
            slack: f64::NEG_INFINITY,
        });
    }

    fn merge(mut self, other: Tally) -> Tally {
        self.checks += other.checks;
        self.min_slack = self.min_slack.min(other.min_slack);
        self.violations.extend(other.violations);
        self
    }
}

struct Case {
    name: String,
    chain: Chain,
    rng: ChaCha8Rng,
    samples: usize,
}

fn cases(cfg: &SuiteConfig, reversible_only: bool) -> Result<Vec<Case>> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let chains = cfg.chains.max(1);
    let mut out = Vec::with_capacity(chains);
    for i in 0..chains {
        let n = rng.random_range(3..=cfg.max_states.max(3));
        let seed: u64 = rng.random();
        let reversible = reversible_only || i % 2 == 0;
        let chain = if reversible {
            zoo::random_reversible(n, seed)?
        } else {
            zoo::random_chain(n, seed)?
        };
        let samples = cfg.samples / chains + usize::from(i < cfg.samples % chains);
        out.push(Case {
            name: format!("{}{}#{i}", if reversible { "rev" } else { "gen" }, n),
            chain,
            rng: ChaCha8Rng::seed_from_u64(seed ^ 0x9e37_79b9_7f4a_7c15),
            samples,
        });
    }
    Ok(out)
}

fn random_vector(rng: &mut ChaCha8Rng, n: usize, nonnegative: bool) -> DVector<f64> {
    loop {
        let v = DVector::from_fn(n, |_, _| {
            let sparse = rng.random_bool(0.3);
            let x: f64 = if sparse {
                0.0
            } else {
                rng.random_range(-1.0..1.0)
            };
            if nonnegative {
                x.abs()
            } else {
                x
            }
        });
        if v.max() > v.min() {
            return v;
        }
    }
}

fn proper_masks(n: usize) -> impl Iterator<Item = u64> {
    1..(1u64 << n) - 1
}

fn exact_band(chain: &Chain) -> Result<crate::profiles::SpectralProfileBand<f64>> {
    let opts = ProfileOptions {
        mode: EnumerationMode::Connected,
        refine: true,
        ..ProfileOptions::default()
    };
    spectral_profile_exhaustive(chain, &opts)
}

fn check_dirichlet(case: &mut Case, t: &mut Tally) -> Result<()> {
    let c = &case.chain;
    let adj = c.adjoint()?;
    let half = c.sibling((c.kernel() + adj.kernel()) * 0.5)?;
    for _ in 0..4 {
        let f = random_vector(&mut case.rng, c.n(), false);
        let e = c.dirichlet_form(&f, &f)?;
        t.close(
            "energy equals adjoint energy",
            &case.name,
            e,
            adj.dirichlet_form(&f, &f)?,
            1e-10,
        );
        t.close(
            "energy equals additive symmetrization",
            &case.name,
            e,
            half.dirichlet_form(&f, &f)?,
            1e-10,
        );
    }
    let x = case.rng.random_range(0..c.n());
    let s: f64 = case.rng.random_range(0.05..2.0);
    let h = 1e-5;
    let var_at = |time: f64| -> Result<f64> {
        let hk = c.heat_kernel(time, 1e-15)?;
        let u = DVector::from_fn(c.n(), |y, _| hk.density(x, y));
        Ok(c.variance(&u))
    };
    let derivative = (var_at(s + h)? - var_at(s - h)?) / (2.0 * h);
    let hk = c.heat_kernel(s, 1e-15)?;
    let u = DVector::from_fn(c.n(), |y, _| hk.density(x, y));
    let target = -2.0 * c.dirichlet_form(&u, &u)?;
    t.checks += 1;
    if !((derivative - target).abs() <= 1e-4 * target.abs().max(1e-8)) {
        t.violations.push(Violation {
            invariant: "variance derivative equals minus twice the energy",
            chain: case.name.clone(),
            detail: format!("{derivative} vs {target} at t = {s}"),
            slack: -(derivative - target).abs(),
        });
    }
    Ok(())
}

fn check_flow(case: &mut Case, t: &mut Tally) -> Result<()> {
    let c = &case.chain;
    let n = c.n();
    for mask in proper_masks(n) {
        let (inside, outside): (Vec<usize>, Vec<usize>) = (0..n).partition(|&x| mask >> x & 1 == 1);
        t.close(
            "flow out equals flow in",
            &case.name,
            c.flow(&inside, &outside),
            c.flow(&outside, &inside),
            1e-12,
        );
    }
    Ok(())
}

fn check_semigroup(case: &mut Case, t: &mut Tally) -> Result<()> {
    let c = &case.chain;
    for _ in 0..3 {
        let s: f64 = case.rng.random_range(0.01..3.0);
        let u: f64 = case.rng.random_range(0.01..3.0);
        let hs = c.heat_kernel(s, 1e-15)?;
        let hu = c.heat_kernel(u, 1e-15)?;
        let hsu = c.heat_kernel(s + u, 1e-15)?;
        let prod = hs.matrix() * hu.matrix();
        let err = (prod - hsu.matrix()).abs().max();
        t.le("semigroup property", &case.name, err, 1e-8, 0.0);
        for x in 0..c.n() {
            let row: f64 = hsu.matrix().row(x).sum();
            t.close("heat kernel rows sum to one", &case.name, row, 1.0, 1e-12);
        }
    }
    Ok(())
}

fn check_bracket(case: &mut Case, t: &mut Tally) -> Result<()> {
    let c = &case.chain;
    let n = c.n();
    let opts = VariationalOptions {
        restarts: 6,
        ..VariationalOptions::default()
    };
    for _ in 0..4 {
        let mut members: Vec<usize> = (0..n).filter(|_| case.rng.random_bool(0.6)).collect();
        if members.is_empty() || members.len() == n {
            members = vec![case.rng.random_range(0..n)];
        }
        let big = Subset::new(c, members.iter().copied())?;
        let keep: Vec<usize> = members
            .iter()
            .copied()
            .filter(|_| case.rng.random_bool(0.6))
            .collect();
        if !keep.is_empty() {
            let small = Subset::new(c, keep)?;
            let (l_small, l_big) = (lambda0(c, &small)?, lambda0(c, &big)?);
            t.le(
                "lambda0 decreases under inclusion",
                &case.name,
                l_big,
                l_small,
                1e-12,
            );
        }
        let b = lambda_bracket(c, &big)?;
        let v = lambda_variational(c, &big, &opts)?.value;
        t.le(
            "variational estimate above lambda0",
            &case.name,
            b.lower,
            v,
            1e-9 * b.lower.max(1.0),
        );
        t.le(
            "variational estimate below bracket top",
            &case.name,
            v,
            b.upper,
            1e-9 * b.upper.max(1.0),
        );
    }
    Ok(())
}

fn check_cheeger(case: &mut Case, t: &mut Tally) -> Result<()> {
    let c = &case.chain;
    let phi = conductance_profile(c, ConductanceMode::Exact, 20, None)?.phi;
    for mask in proper_masks(c.n()) {
        let s = Subset::from_mask(c, mask)?;
        let l0 = lambda0(c, &s)?;
        let p = phi.value_at(s.mass()).unwrap_or(f64::INFINITY);
        t.le("cheeger lower half", &case.name, 0.5 * p * p, l0, 1e-12);
        t.le(
            "cheeger upper half",
            &case.name,
            l0,
            s.boundary() / s.mass(),
            1e-12,
        );
    }
    Ok(())
}

fn check_sandwich(case: &mut Case, t: &mut Tally) -> Result<()> {
    let band = exact_band(&case.chain)?;
    let l1 = band.lambda1;
    let up = band.upper.value_at(0.5).unwrap_or(f64::INFINITY);
    let lo = band.lower.value_at(0.5).unwrap_or(f64::INFINITY);
    t.le(
        "gap below upper profile at one half",
        &case.name,
        l1,
        up,
        1e-12,
    );
    t.le(
        "lower profile at one half below twice the gap",
        &case.name,
        lo,
        2.0 * l1,
        1e-12,
    );
    for &v in band.lower.values() {
        t.le("lower profile above the gap", &case.name, l1, v, 1e-12);
    }
    Ok(())
}

fn check_abs(case: &mut Case, t: &mut Tally) -> Result<()> {
    let c = &case.chain;
    for _ in 0..case.samples {
        let f = random_vector(&mut case.rng, c.n(), false);
        let plus = f.map(|v| v.max(0.0));
        let minus = f.map(|v| (-v).max(0.0));
        let abs = f.abs();
        let e = c.dirichlet_form(&f, &f)?;
        let split = c.dirichlet_form(&plus, &plus)? + c.dirichlet_form(&minus, &minus)?;
        let ea = c.dirichlet_form(&abs, &abs)?;
        t.le("energy dominates split energy", &case.name, split, e, 1e-12);
        t.le(
            "split energy dominates energy of modulus",
            &case.name,
            ea,
            split,
            1e-12,
        );
    }
    Ok(())
}

fn check_ebound(case: &mut Case, t: &mut Tally) -> Result<()> {
    let c = &case.chain;
    let band = exact_band(c)?;
    for _ in 0..case.samples {
        let u = random_vector(&mut case.rng, c.n(), true);
        let var = c.variance(&u);
        let mean = c.expectation(&u);
        let r = (4.0 * mean * mean / var).max(band.lower.start());
        let lam = band.lower.value_at(r).unwrap_or(band.lambda1);
        let q = c.dirichlet_form(&u, &u)? / var;
        t.le(
            "energy ratio above half the profile",
            &case.name,
            0.5 * lam,
            q,
            1e-12,
        );
    }
    Ok(())
}

fn check_envelope(case: &mut Case, t: &mut Tally) -> Result<()> {
    let c = &case.chain;
    let band = exact_band(c)?;
    let ctx = ReportContext {
        mode: ProfileMode::Envelopes,
        ..ReportContext::default()
    };
    let env = profile_bundle(c, &ctx)?.lambda_lower;
    for &r in band.lower.breakpoints() {
        if let (Some(e), Some(b)) = (env.value_at(r), band.lower.value_at(r)) {
            t.le(
                "envelope below exhaustive lower edge",
                &case.name,
                e,
                b,
                1e-12 * b.max(1.0),
            );
        }
    }
    Ok(())
}

fn check_exact(case: &mut Case, t: &mut Tally) -> Result<()> {
    let c = &case.chain;
    let adj = c.adjoint()?;
    let oracle = DistanceOracle::new(c)?;
    let adj_oracle = DistanceOracle::new(&adj)?;
    let gap = oracle.gap()?;
    let mut prev = f64::INFINITY;
    for i in 0..12 {
        let time = 0.05 / gap * 1.6f64.powi(i);
        let d1 = oracle.continuous(time, Norm::L1);
        let d2 = oracle.continuous(time, Norm::L2);
        let di = oracle.continuous(time, Norm::LInf);
        t.le("d1 below d2", &case.name, d1, d2, 1e-12);
        t.le("d2 below dinf", &case.name, d2, di, 1e-12);
        let hk = c.heat_kernel(time, 1e-15)?;
        let sup = hk.sup_density_deviation();
        let half =
            oracle.continuous(time / 2.0, Norm::L2) * adj_oracle.continuous(time / 2.0, Norm::L2);
        t.le(
            "sup deviation below product of half-time l2 distances",
            &case.name,
            sup,
            half,
            1e-10 * half.max(1.0),
        );
        if c.is_reversible() {
            let dens = hk.densities();
            let off = dens.max();
            let diag = (0..c.n())
                .map(|x| dens[(x, x)])
                .fold(f64::NEG_INFINITY, f64::max);
            t.close(
                "reversible density maximum on the diagonal",
                &case.name,
                off,
                diag,
                1e-12,
            );
            t.le(
                "reversible dinf non-increasing",
                &case.name,
                di,
                prev,
                1e-12,
            );
            prev = di;
        }
    }
    Ok(())
}

fn zoo_chains() -> Result<Vec<(String, Chain)>> {
    Ok(vec![
        ("complete4".into(), zoo::complete_graph(4)?),
        ("cycle8".into(), zoo::cycle(8, 0.0)?),
        ("lazy_cycle8".into(), zoo::cycle(8, 0.5)?),
        ("torus3x3".into(), zoo::torus_product(3, 3)?),
    ])
}

fn dominance_of(name: &str, chain: &Chain, t: &mut Tally) -> Result<()> {
    let report = evaluate_all(name, chain, &ReportContext::default())?;
    for row in &report.rows {
        let (Some(exact), true) = (row.exact, row.certified) else {
            continue;
        };
        let scale = 1e-9 * exact.max(1.0);
        match row.validity {
            Validity::Upper => t.le("upper bound dominates exact", name, exact, row.value, scale),
            Validity::Lower => t.le("lower bound below exact", name, row.value, exact, scale),
        }
    }
    Ok(())
}

fn run_case(suite: Suite, case: &mut Case) -> Tally {
    let mut t = Tally::new();
    let r = match suite {
        Suite::Dirichlet => check_dirichlet(case, &mut t),
        Suite::Flow => check_flow(case, &mut t),
        Suite::Semigroup => check_semigroup(case, &mut t),
        Suite::Bracket => check_bracket(case, &mut t),
        Suite::Cheeger => check_cheeger(case, &mut t),
        Suite::Sandwich => check_sandwich(case, &mut t),
        Suite::Abs => check_abs(case, &mut t),
        Suite::Ebound => check_ebound(case, &mut t),
        Suite::Envelope => check_envelope(case, &mut t),
        Suite::Exact => check_exact(case, &mut t),
        Suite::Dominance => dominance_of(&case.name, &case.chain, &mut t),
    };
    if let Err(e) = r {
        t.fail("computation succeeded", &case.name, e);
    }
    t
}

fn reversible_only(suite: Suite) -> bool {
    matches!(
        suite,
        Suite::Cheeger | Suite::Sandwich | Suite::Ebound | Suite::Envelope | Suite::Dominance
    )
}

/// Runs `suite` on `cfg.chains` seeded random chains.
pub fn run_suite(suite: Suite, cfg: &SuiteConfig) -> Result<SuiteOutcome> {
    let mut all = cases(cfg, reversible_only(suite))?;
    let mut tally = all
        .par_iter_mut()
        .map(|case| run_case(suite, case))
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Tally::new(), Tally::merge);
    if suite == Suite::Dominance {
        for (name, chain) in zoo_chains()? {
            let mut t = Tally::new();
            if let Err(e) = dominance_of(&name, &chain, &mut t) {
                t.fail("computation succeeded", &name, e);
            }
            tally = tally.merge(t);
        }
    }
    Ok(SuiteOutcome {
        suite,
        checks: tally.checks,
        min_slack: tally.min_slack,
        violations: tally.violations,
    })
}

pub fn run_all(cfg: &SuiteConfig) -> Result<Vec<SuiteOutcome>> {
    Suite::ALL.iter().map(|&s| run_suite(s, cfg)).collect()
}
