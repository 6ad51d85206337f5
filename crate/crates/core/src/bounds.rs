//! Mixing-time bounds evaluated from profiles, gaps and functional constants.

use crate::profiles::{ProfileKind, StepProfile};
use crate::{Error, Real, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Validity {
    Upper,
    Lower,
}

impl Validity {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Upper => "upper",
            Self::Lower => "lower",
        }
    }
}

/// Distance a bound refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Norm {
    L1,
    L2,
    #[serde(rename = "linf")]
    LInf,
}

impl Norm {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::L1 => "1",
            Self::L2 => "2",
            Self::LInf => "inf",
        }
    }
}

impl std::str::FromStr for Norm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "1" | "l1" => Ok(Self::L1),
            "2" | "l2" => Ok(Self::L2),
            "inf" | "infinity" | "linf" => Ok(Self::LInf),
            other => Err(Error::Parse(format!("unknown norm {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TimeMode {
    Continuous,
    Discrete,
}

impl TimeMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Continuous => "continuous",
            Self::Discrete => "discrete",
        }
    }
}

impl std::str::FromStr for TimeMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_lowercase().as_str() {
            "continuous" | "c" => Ok(Self::Continuous),
            "discrete" | "d" => Ok(Self::Discrete),
            other => Err(Error::Parse(format!("unknown time mode {other:?}"))),
        }
    }
}

/// Which edge of the spectral band (or which envelope) fed a bound.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileEdge {
    Lower,
    Dirichlet,
    Upper,
    Envelope,
    Constant,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Flag {
    HypothesisViolated,
    EmptyIntegrationRange,
    /// Built on a heuristic (upper envelope) profile where a lower bound is needed.
    UncertifiedProfile,
    /// Uses a numerically estimated constant with the wrong one-sided direction.
    EstimatedConstant,
}

impl Flag {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::HypothesisViolated => "hypothesis_violated",
            Self::EmptyIntegrationRange => "empty_integration_range",
            Self::UncertifiedProfile => "uncertified_profile",
            Self::EstimatedConstant => "estimated_constant",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Assumption {
    pub name: String,
    pub holds: bool,
    #[serde(skip_serializing_if = "String::is_empty", default)]
    pub detail: String,
}

impl Assumption {
    pub fn new(name: &str, holds: bool, detail: impl Into<String>) -> Self {
        Self {
            name: name.into(),
            holds,
            detail: detail.into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub name: String,
    pub value: f64,
    pub epsilon: f64,
    pub validity: Validity,
    pub measure: Norm,
    pub time: TimeMode,
    pub inputs: BTreeMap<String, f64>,
    pub assumptions: Vec<Assumption>,
    pub flags: Vec<Flag>,
    /// Formula the value was computed from.
    pub anchor: String,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub profile_edge: Option<ProfileEdge>,
}

impl BoundReport {
    fn new(
        name: &str,
        value: f64,
        epsilon: f64,
        validity: Validity,
        measure: Norm,
        time: TimeMode,
        anchor: &str,
    ) -> Self {
        Self {
            name: name.into(),
            value,
            epsilon,
            validity,
            measure,
            time,
            inputs: BTreeMap::new(),
            assumptions: Vec::new(),
            flags: Vec::new(),
            anchor: anchor.into(),
            profile_edge: None,
        }
    }

    fn input(mut self, key: &str, value: f64) -> Self {
        self.inputs.insert(key.into(), value);
        self
    }

    fn assume(&mut self, a: Assumption) {
        if !a.holds && !self.flags.contains(&Flag::HypothesisViolated) {
            self.flags.push(Flag::HypothesisViolated);
        }
        self.assumptions.push(a);
    }

    fn flag(&mut self, f: Flag) {
        if !self.flags.contains(&f) {
            self.flags.push(f);
        }
    }

    pub fn with_edge(mut self, edge: ProfileEdge) -> Self {
        self.profile_edge = Some(edge);
        self
    }

    pub fn has_flag(&self, f: Flag) -> bool {
        self.flags.contains(&f)
    }

    /// No violated hypothesis, heuristic profile or estimated constant.
    pub fn is_certified(&self) -> bool {
        !self.flags.iter().any(|f| {
            matches!(
                f,
                Flag::HypothesisViolated | Flag::UncertifiedProfile | Flag::EstimatedConstant
            )
        })
    }

    /// Whether the report is consistent with the true mixing time `exact`.
    pub fn consistent_with(&self, exact: f64, tol: f64) -> bool {
        let slack = tol * exact.abs().max(1.0);
        match self.validity {
            Validity::Upper => self.value >= exact - slack,
            Validity::Lower => self.value <= exact + slack,
        }
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0) || !eps.is_finite() {
        return Err(Error::InvalidParameter(format!(
            "epsilon must be positive, got {eps}"
        )));
    }
    Ok(())
}

fn check_pi_star(pi_star: f64) -> Result<()> {
    if !(pi_star > 0.0 && pi_star <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "pi_star must lie in (0, 1], got {pi_star}"
        )));
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Piece {
    v0: f64,
    v1: f64,
    rate: f64,
    t0: f64,
}

/// Solution of `t = int_{v_0}^{V(t)} dv / (v L(v))` for a step profile `L`.
///
/// The profile's first value is extended below its first breakpoint.
#[derive(Debug, Clone, PartialEq)]
pub struct VFunction {
    start: f64,
    pieces: Vec<Piece>,
    end: Option<f64>,
}

/// Result of a regularity scan.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RegularityCheck {
    pub passes: bool,
    /// Smallest ratio of logarithmic derivatives seen.
    pub min_ratio: f64,
    /// First `(t, s)` with the ratio below `delta`.
    pub witness: Option<(f64, f64)>,
}

impl VFunction {
    pub fn new<T: Real>(profile: &StepProfile<T>, lower_limit: f64) -> Result<Self> {
        if !(lower_limit > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "lower limit must be positive, got {lower_limit}"
            )));
        }
        let bps: Vec<f64> = profile
            .breakpoints()
            .iter()
            .map(|b| b.to_f64_lossy())
            .collect();
        let vals: Vec<f64> = profile.values().iter().map(|b| b.to_f64_lossy()).collect();
        let end = profile.end().map(|e| e.to_f64_lossy());
        if let Some(e) = end {
            if lower_limit >= e {
                return Err(Error::InvalidParameter(format!(
                    "profile ends at {e}, before {lower_limit}"
                )));
            }
        }
        let mut pieces = Vec::new();
        let mut t = 0.0;
        let mut v = lower_limit;
        for i in 0..bps.len() {
            let hi = if i + 1 < bps.len() {
                bps[i + 1]
            } else {
                end.unwrap_or(f64::INFINITY)
            };
            if hi <= v {
                continue;
            }
            let rate = vals[i];
            if !(rate > 0.0) {
                return Err(Error::NonpositiveProfile {
                    r: bps[i].max(v),
                    value: rate,
                });
            }
            pieces.push(Piece {
                v0: v,
                v1: hi,
                rate,
                t0: t,
            });
            t += (hi / v).ln() / rate;
            v = hi;
        }
        Ok(Self {
            start: lower_limit,
            pieces,
            end,
        })
    }

    pub fn start(&self) -> f64 {
        self.start
    }

    /// Right end of the profile domain, if finite.
    pub fn end(&self) -> Option<f64> {
        self.end
    }

    /// Time at which `V` reaches `v`; zero for `v <= start`.
    pub fn t_of(&self, v: f64) -> Result<f64> {
        if v <= self.start {
            return Ok(0.0);
        }
        for p in &self.pieces {
            if v <= p.v1 {
                return Ok(p.t0 + (v / p.v0).ln() / p.rate);
            }
        }
        Err(Error::InvalidParameter(format!(
            "profile domain ends at {} below the upper limit {v}",
            self.end.unwrap_or(f64::INFINITY)
        )))
    }

    /// `int_a^b dv / (v L(v))` for `start <= a <= b`.
    pub fn integral(&self, a: f64, b: f64) -> Result<f64> {
        Ok(self.t_of(b)? - self.t_of(a)?)
    }

    pub fn v_of(&self, t: f64) -> Result<f64> {
        if t <= 0.0 {
            return Ok(self.start);
        }
        for p in &self.pieces {
            let t1 = p.t0 + (p.v1 / p.v0).ln() / p.rate;
            if t <= t1 {
                return Ok(p.v0 * ((t - p.t0) * p.rate).exp());
            }
        }
        Err(Error::InvalidParameter(format!(
            "time {t} beyond the profile domain"
        )))
    }

    /// Logarithmic derivative `V'(t)/V(t)`, i.e. the profile value at `V(t)`.
    pub fn log_derivative(&self, t: f64) -> f64 {
        let i = self.piece_at(t);
        self.pieces[i].rate
    }

    fn piece_at(&self, t: f64) -> usize {
        let k = self.pieces.partition_point(|p| p.t0 <= t);
        k.saturating_sub(1)
    }

    /// Time at which the last piece ends (infinite for an unbounded profile).
    pub fn horizon(&self) -> f64 {
        self.pieces
            .last()
            .map(|p| p.t0 + (p.v1 / p.v0).ln() / p.rate)
            .unwrap_or(0.0)
    }

    /// Exact regularity scan of `V` over `0 < t < s <= 2t < horizon`.
    pub fn exact_regularity(&self, delta: f64, horizon: f64) -> RegularityCheck {
        let mut cands: Vec<f64> = Vec::new();
        for p in &self.pieces {
            if p.t0 > 0.0 {
                cands.push(p.t0);
                cands.push(p.t0 / 2.0);
            }
        }
        cands.retain(|&t| t > 0.0 && 2.0 * t < horizon);
        cands.sort_by(|a, b| a.total_cmp(b));
        cands.dedup();
        let mut probes = cands.clone();
        let mut prev = 0.0;
        for &c in &cands {
            probes.push(0.5 * (prev + c));
            prev = c;
        }
        let last = if horizon.is_finite() {
            horizon / 2.0
        } else {
            2.0 * prev.max(1.0)
        };
        if last > prev {
            probes.push(0.5 * (prev + last));
        }
        probes.sort_by(|a, b| a.total_cmp(b));

        let mut min_ratio = f64::INFINITY;
        let mut witness = None;
        for &t in &probes {
            let i = self.piece_at(t);
            let here = self.pieces[i].rate;
            let s_hi = 2.0 * t;
            for (j, p) in self.pieces.iter().enumerate().skip(i) {
                if p.t0 > s_hi {
                    break;
                }
                let ratio = p.rate / here;
                if ratio < min_ratio {
                    min_ratio = ratio;
                }
                if ratio < delta && witness.is_none() {
                    let s = if j == i { s_hi } else { p.t0.max(t) };
                    witness = Some((t, s));
                }
            }
        }
        RegularityCheck {
            passes: witness.is_none(),
            min_ratio,
            witness,
        }
    }
}

fn profile_flags<T: Real>(report: &mut BoundReport, profile: &StepProfile<T>) {
    if profile.kind() == ProfileKind::UpperEnvelope {
        report.flag(Flag::UncertifiedProfile);
    }
}

/// `2 int_{4 pi_*}^{4/eps} dv / (v Lambda(v))`.
pub fn tau_upper_spectral<T: Real>(
    profile: &StepProfile<T>,
    eps: f64,
    pi_star: f64,
) -> Result<BoundReport> {
    check_eps(eps)?;
    check_pi_star(pi_star)?;
    let (lo, hi) = (4.0 * pi_star, 4.0 / eps);
    let mut r = BoundReport::new(
        "spectral_profile",
        0.0,
        eps,
        Validity::Upper,
        Norm::LInf,
        TimeMode::Continuous,
        "2 int_{4 pi*}^{4/eps} dv/(v Lambda(v))",
    )
    .input("pi_star", pi_star);
    profile_flags(&mut r, profile);
    if hi <= lo {
        r.flag(Flag::EmptyIntegrationRange);
        return Ok(r);
    }
    let v = VFunction::new(profile, lo)?;
    r.value = 2.0 * v.t_of(hi)?;
    Ok(r)
}

/// `int_{4 pi_*}^{4/eps} 4 dv / (v Phi_*(v)^2)`.
pub fn tau_upper_conductance<T: Real>(
    phi_star: &StepProfile<T>,
    eps: f64,
    pi_star: f64,
) -> Result<BoundReport> {
    check_eps(eps)?;
    check_pi_star(pi_star)?;
    let (lo, hi) = (4.0 * pi_star, 4.0 / eps);
    let mut r = BoundReport::new(
        "conductance_profile",
        0.0,
        eps,
        Validity::Upper,
        Norm::LInf,
        TimeMode::Continuous,
        "int_{4 pi*}^{4/eps} 4 dv/(v Phi*(v)^2)",
    )
    .input("pi_star", pi_star);
    profile_flags(&mut r, phi_star);
    if hi <= lo {
        r.flag(Flag::EmptyIntegrationRange);
        return Ok(r);
    }
    let sq = phi_star.map_values(|p| p * p);
    let v = VFunction::new(&sq, lo)?;
    r.value = 4.0 * v.t_of(hi)?;
    Ok(r)
}

/// `sup_x d_2(H_t(x, .), pi)^2 <= 4 / V(t)`.
pub fn tau_l2_upper<T: Real>(profile: &StepProfile<T>, pi_star: f64, t: f64) -> Result<f64> {
    check_pi_star(pi_star)?;
    if !(t >= 0.0) {
        return Err(Error::InvalidParameter(format!("negative time {t}")));
    }
    let v = VFunction::new(profile, 4.0 * pi_star)?;
    Ok(4.0 / v.v_of(t)?)
}

/// `tau_2(eps) <= int_{4 pi_*}^{4/eps^2} dv / (v Lambda(v))`.
pub fn tau2_upper_profile<T: Real>(
    profile: &StepProfile<T>,
    eps: f64,
    pi_star: f64,
) -> Result<BoundReport> {
    check_eps(eps)?;
    check_pi_star(pi_star)?;
    let (lo, hi) = (4.0 * pi_star, 4.0 / (eps * eps));
    let mut r = BoundReport::new(
        "spectral_profile_l2",
        0.0,
        eps,
        Validity::Upper,
        Norm::L2,
        TimeMode::Continuous,
        "int_{4 pi*}^{4/eps^2} dv/(v Lambda(v))",
    )
    .input("pi_star", pi_star);
    profile_flags(&mut r, profile);
    if hi <= lo {
        r.flag(Flag::EmptyIntegrationRange);
        return Ok(r);
    }
    r.value = VFunction::new(profile, lo)?.t_of(hi)?;
    Ok(r)
}

/// Spectral-gap bounds on `tau_2(eps)` and `tau_inf(eps)`.
///
/// At `eps = 1/e` the second reduces to `(1 + log(1/pi_*)) / lambda_1`.
pub fn tau_upper_spectral_gap(
    lambda1: f64,
    pi_star: f64,
    eps: f64,
) -> Result<(BoundReport, BoundReport)> {
    check_eps(eps)?;
    check_pi_star(pi_star)?;
    if !(lambda1 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "spectral gap must be positive, got {lambda1}"
        )));
    }
    let t2 = (1.0 / (eps * pi_star.sqrt())).ln().max(0.0) / lambda1;
    let tinf = (1.0 / (eps * pi_star)).ln().max(0.0) / lambda1;
    let l2 = BoundReport::new(
        "spectral_gap_l2",
        t2,
        eps,
        Validity::Upper,
        Norm::L2,
        TimeMode::Continuous,
        "log(1/(eps sqrt(pi*)))/lambda1",
    )
    .input("lambda1", lambda1)
    .input("pi_star", pi_star)
    .with_edge(ProfileEdge::Constant);
    let linf = BoundReport::new(
        "spectral_gap",
        tinf,
        eps,
        Validity::Upper,
        Norm::LInf,
        TimeMode::Continuous,
        "log(1/(eps pi*))/lambda1",
    )
    .input("lambda1", lambda1)
    .input("pi_star", pi_star)
    .with_edge(ProfileEdge::Constant);
    Ok((l2, linf))
}

/// How a discrete-time bound reaches the chain.
#[derive(Debug, Clone, Copy)]
pub enum DiscreteRoute<'a, T: Real> {
    /// Profile of `K` with holding `K(x, x) >= alpha`.
    Holding {
        profile: &'a StepProfile<T>,
        alpha: f64,
        holding: f64,
    },
    /// Profiles of `KK*` and `K*K`.
    Symmetrized {
        kk_star: &'a StepProfile<T>,
        k_star_k: &'a StepProfile<T>,
        irreducible: bool,
    },
}

fn two_ceil(x: f64) -> f64 {
    2.0 * x.ceil().max(0.0)
}

pub fn tau_discrete_upper<T: Real>(
    route: DiscreteRoute<'_, T>,
    eps: f64,
    pi_star: f64,
) -> Result<BoundReport> {
    check_eps(eps)?;
    check_pi_star(pi_star)?;
    let (lo, hi) = (4.0 * pi_star, 4.0 / eps);
    match route {
        DiscreteRoute::Holding {
            profile,
            alpha,
            holding,
        } => {
            if !(alpha > 0.0) || !(holding > 0.0) {
                return Err(Error::ZeroHolding);
            }
            if alpha > holding * (1.0 + 1e-12) {
                return Err(Error::AlphaExceedsHolding { alpha, holding });
            }
            let mut r = BoundReport::new(
                "discrete_holding",
                0.0,
                eps,
                Validity::Upper,
                Norm::LInf,
                TimeMode::Discrete,
                "2 ceil(int_{4 pi*}^{4/eps} dv/(alpha v Lambda(v)))",
            )
            .input("alpha", alpha)
            .input("pi_star", pi_star);
            profile_flags(&mut r, profile);
            if hi <= lo {
                r.flag(Flag::EmptyIntegrationRange);
                return Ok(r);
            }
            let t = VFunction::new(profile, lo)?.t_of(hi)?;
            r.value = two_ceil(t / alpha);
            Ok(r)
        }
        DiscreteRoute::Symmetrized {
            kk_star,
            k_star_k,
            irreducible,
        } => {
            if !irreducible {
                return Err(Error::ReducibleSymmetrization);
            }
            let mut r = BoundReport::new(
                "discrete_symmetrized",
                0.0,
                eps,
                Validity::Upper,
                Norm::LInf,
                TimeMode::Discrete,
                "2 ceil(2 max(int dv/(v Lambda_KK*), int dv/(v Lambda_K*K)))",
            )
            .input("pi_star", pi_star);
            profile_flags(&mut r, kk_star);
            profile_flags(&mut r, k_star_k);
            if hi <= lo {
                r.flag(Flag::EmptyIntegrationRange);
                return Ok(r);
            }
            let a = VFunction::new(kk_star, lo)?.t_of(hi)?;
            let b = VFunction::new(k_star_k, lo)?.t_of(hi)?;
            r.value = two_ceil(2.0 * a.max(b));
            Ok(r)
        }
    }
}

/// Rescaled conductance bound and the Morris-Peres comparator.
pub fn tau_discrete_conductance<T: Real>(
    phi_star: &StepProfile<T>,
    alpha: f64,
    eps: f64,
    pi_star: f64,
) -> Result<(BoundReport, BoundReport)> {
    check_eps(eps)?;
    check_pi_star(pi_star)?;
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::AlphaOutOfRange(alpha));
    }
    let (lo, hi) = (4.0 * pi_star, 4.0 / eps);
    let mut rescaled = BoundReport::new(
        "discrete_conductance_rescaled",
        0.0,
        eps,
        Validity::Upper,
        Norm::LInf,
        TimeMode::Discrete,
        "2 ceil(int 2 dv/((alpha/(1-alpha)) v Phi*(v)^2))",
    )
    .input("alpha", alpha)
    .input("pi_star", pi_star);
    let mut mp = BoundReport::new(
        "morris_peres",
        0.0,
        eps,
        Validity::Upper,
        Norm::LInf,
        TimeMode::Discrete,
        "2 ceil(int 2 dv/(min(alpha^2/(1-alpha)^2, 1) v Phi*(v)^2))",
    )
    .input("alpha", alpha)
    .input("pi_star", pi_star);
    profile_flags(&mut rescaled, phi_star);
    profile_flags(&mut mp, phi_star);
    if hi <= lo {
        rescaled.flag(Flag::EmptyIntegrationRange);
        mp.flag(Flag::EmptyIntegrationRange);
        return Ok((rescaled, mp));
    }
    let sq = phi_star.map_values(|p| p * p);
    let i = VFunction::new(&sq, lo)?.t_of(hi)?;
    let q = alpha / (1.0 - alpha);
    rescaled.value = two_ceil(2.0 * i / q);
    mp.value = two_ceil(2.0 * i / (q * q).min(1.0));
    Ok((rescaled, mp))
}

/// Nash inequality constants `(C, D, T)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NashConstants {
    pub c: f64,
    pub d: f64,
    pub t: f64,
}

/// Log-Sobolev constant and whether it is a numerical estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogSobolevInput {
    pub rho: f64,
    pub estimated: bool,
}

fn loglog(x: f64) -> f64 {
    x.ln().ln()
}

/// Combined log-Sobolev / Nash / gap bounds, plus the Aldous-Fill comparator.
pub fn tau_upper_combined(
    lambda1: f64,
    rho: Option<LogSobolevInput>,
    nash: Option<NashConstants>,
    pi_star: f64,
    eps: f64,
) -> Result<Vec<BoundReport>> {
    check_eps(eps)?;
    check_pi_star(pi_star)?;
    if !(lambda1 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "spectral gap must be positive, got {lambda1}"
        )));
    }
    if let Some(r) = rho {
        if !(r.rho > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "log-Sobolev constant must be positive, got {}",
                r.rho
            )));
        }
    }
    if let Some(n) = nash {
        if !(n.c > 0.0 && n.d > 0.0 && n.t > 0.0) {
            return Err(Error::InvalidParameter(
                "Nash constants must be positive".into(),
            ));
        }
    }
    let eps_ok = Assumption::new("eps<=8", eps <= 8.0, format!("eps = {eps}"));
    let pi_ok = Assumption::new(
        "pi_star<=1/(4e)",
        pi_star <= 1.0 / (4.0 * std::f64::consts::E),
        format!("pi_star = {pi_star}"),
    );
    let nash_assumptions = |n: &NashConstants| {
        vec![
            Assumption::new(
                "DC>=T",
                n.d * n.c >= n.t,
                format!("DC = {}, T = {}", n.d * n.c, n.t),
            ),
            Assumption::new("D>=1", n.d >= 1.0, format!("D = {}", n.d)),
        ]
    };
    let mut out = Vec::new();
    let base = |name: &str, value: f64, anchor: &str| {
        BoundReport::new(
            name,
            value,
            eps,
            Validity::Upper,
            Norm::LInf,
            TimeMode::Continuous,
            anchor,
        )
        .input("lambda1", lambda1)
        .input("pi_star", pi_star)
    };

    if let Some(r) = rho {
        let v = 2.0 / r.rho * loglog(1.0 / (4.0 * pi_star)) + 2.0 / lambda1 * (8.0 / eps).ln();
        let mut rep = base(
            "logsob_gap",
            v,
            "(2/rho) loglog(1/(4 pi*)) + (2/lambda1) log(8/eps)",
        )
        .input("rho", r.rho);
        rep.assume(pi_ok.clone());
        rep.assume(eps_ok.clone());
        if r.estimated {
            rep.flag(Flag::EstimatedConstant);
        }
        out.push(rep);
    }
    if let Some(n) = nash {
        let v = 4.0 * n.t
            + 2.0 / lambda1 * (2.0 * n.d * (2.0 * n.d * n.c / n.t).ln() + (4.0 / eps).ln());
        let mut rep = base(
            "nash_gap",
            v,
            "4T + (2/lambda1)(2D log(2DC/T) + log(4/eps))",
        )
        .input("C", n.c)
        .input("D", n.d)
        .input("T", n.t);
        for a in nash_assumptions(&n) {
            rep.assume(a);
        }
        rep.assume(pi_ok.clone());
        rep.assume(eps_ok.clone());
        out.push(rep);
    }
    if let (Some(r), Some(n)) = (rho, nash) {
        let inner = 2.0 * n.d * (2.0 * n.d * n.c / n.t).ln();
        let v = 4.0 * n.t + 2.0 / r.rho * inner.ln() + 2.0 / lambda1 * (8.0 / eps).ln();
        let mut rep = base(
            "nash_logsob_gap",
            v,
            "4T + (2/rho) loglog((2DC/T)^(2D)) + (2/lambda1) log(8/eps)",
        )
        .input("rho", r.rho)
        .input("C", n.c)
        .input("D", n.d)
        .input("T", n.t);
        for a in nash_assumptions(&n) {
            rep.assume(a);
        }
        rep.assume(pi_ok.clone());
        rep.assume(eps_ok.clone());
        if r.estimated {
            rep.flag(Flag::EstimatedConstant);
        }
        out.push(rep);

        let inner = n.d * (n.d * n.c / n.t).ln();
        let v = 2.0 * n.t + 1.0 / r.rho * inner.ln() + 1.0 / lambda1 * (4.0 + (1.0 / eps).ln());
        let mut rep = base(
            "aldous_fill",
            v,
            "2T + (1/rho) loglog((DC/T)^D) + (1/lambda1)(4 + log(1/eps))",
        )
        .input("rho", r.rho)
        .input("C", n.c)
        .input("D", n.d)
        .input("T", n.t);
        rep.assume(Assumption::new(
            "DC>=T",
            n.d * n.c >= n.t,
            format!("DC = {}, T = {}", n.d * n.c, n.t),
        ));
        if !v.is_finite() {
            rep.assume(Assumption::new(
                "(DC/T)^D>e",
                false,
                "iterated logarithm undefined",
            ));
            rep.value = f64::MAX;
        }
        if r.estimated {
            rep.flag(Flag::EstimatedConstant);
        }
        out.push(rep);
    }
    for rep in &mut out {
        if !rep.value.is_finite() {
            rep.value = f64::MAX;
            rep.assume(Assumption::new(
                "finite",
                false,
                "iterated logarithm undefined",
            ));
        }
    }
    Ok(out)
}

/// `exp(-t lambda_0(S)) / (2 pi(S))`, a lower bound on `sup_x h_t(x, x)`.
pub fn heat_diag_lower(lambda0: f64, mass: f64, t: f64) -> f64 {
    (-t * lambda0).exp() / (2.0 * mass)
}

/// Largest `t` with `heat_diag_lower(lambda0, mass, t) - 1 > eps`.
pub fn tau_lower_dirichlet_set(lambda0: f64, mass: f64, eps: f64) -> Result<BoundReport> {
    check_eps(eps)?;
    if !(mass > 0.0 && mass <= 1.0) {
        return Err(Error::InvalidParameter(format!(
            "set mass must lie in (0, 1], got {mass}"
        )));
    }
    let gap = (1.0 / (2.0 * mass * (1.0 + eps))).ln();
    let value = if gap <= 0.0 {
        0.0
    } else if lambda0 <= 0.0 {
        return Err(Error::InvalidParameter(
            "lambda0 must be positive for a proper set".into(),
        ));
    } else {
        gap / lambda0
    };
    Ok(BoundReport::new(
        "dirichlet_set",
        value,
        eps,
        Validity::Lower,
        Norm::LInf,
        TimeMode::Continuous,
        "log(1/(2 pi(S)(1+eps)))/lambda0(S)",
    )
    .input("lambda0", lambda0)
    .input("mass", mass))
}

/// Anti-Faber-Krahn lower bound.
#[derive(Debug, Clone, PartialEq)]
pub struct AntiFkBound {
    pub report: BoundReport,
    pub delta: f64,
    /// End of the regularity window.
    pub window: f64,
    pub gamma: VFunction,
}

impl AntiFkBound {
    /// `1 / (2 Gamma(2t/delta))` for `t < delta T / 2`.
    pub fn curve(&self, t: f64) -> Option<f64> {
        if t < 0.0 || t >= self.delta * self.window / 2.0 {
            return None;
        }
        self.gamma
            .v_of(2.0 * t / self.delta)
            .ok()
            .map(|g| 1.0 / (2.0 * g))
    }
}

/// Lower bound on `tau_inf(eps)` from an anti-Faber-Krahn function `L`.
///
/// `delta` defaults to the best exponent the piecewise `Gamma` admits on the
/// window; `window` defaults to the time at which `Gamma` reaches 1.
pub fn tau_lower_anti_fk<T: Real>(
    reversible: bool,
    l: &StepProfile<T>,
    pi_star: f64,
    delta: Option<f64>,
    window: Option<f64>,
    eps: f64,
) -> Result<AntiFkBound> {
    if !reversible {
        return Err(Error::NotReversible);
    }
    check_eps(eps)?;
    check_pi_star(pi_star)?;
    let gamma = VFunction::new(l, pi_star)?;
    let window = match window {
        Some(w) => w,
        None => gamma.t_of(1.0)?,
    };
    if !(window > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "empty regularity window {window}"
        )));
    }
    let scan = gamma.exact_regularity(delta.unwrap_or(0.0), window);
    let delta = match delta {
        Some(d) => {
            if !scan.passes {
                let (t, s) = scan.witness.unwrap_or((0.0, 0.0));
                return Err(Error::RegularityFailed { delta: d, t, s });
            }
            d
        }
        None => scan.min_ratio.min(1.0),
    };
    if !(delta > 0.0) {
        return Err(Error::RegularityFailed {
            delta,
            t: 0.0,
            s: 0.0,
        });
    }
    let target = 1.0 / (2.0 * (1.0 + eps));
    let t_max = delta * window / 2.0;
    let value = if target <= pi_star {
        0.0
    } else {
        (delta / 2.0 * gamma.t_of(target)?).min(t_max)
    };
    let report = BoundReport::new(
        "anti_faber_krahn",
        value,
        eps,
        Validity::Lower,
        Norm::LInf,
        TimeMode::Continuous,
        "sup_x h_t(x,x) >= 1/(2 Gamma(2t/delta)), t < delta T/2",
    )
    .input("delta", delta)
    .input("T", window)
    .input("pi_star", pi_star);
    Ok(AntiFkBound {
        report,
        delta,
        window,
        gamma,
    })
}

/// Scans sampled `Gamma` for regularity on `0 < t < s <= 2t < window`.
pub fn delta_regularity(
    times: &[f64],
    values: &[f64],
    delta: f64,
    window: f64,
) -> Result<RegularityCheck> {
    if times.len() != values.len() {
        return Err(Error::DimensionMismatch {
            expected: times.len(),
            found: values.len(),
        });
    }
    if times.len() < 3 {
        return Err(Error::GridTooCoarse {
            points_per_decade: 0.0,
        });
    }
    if times.windows(2).any(|w| !(w[0] > 0.0 && w[1] > w[0])) {
        return Err(Error::InvalidParameter(
            "grid must be positive and increasing".into(),
        ));
    }
    if values.windows(2).any(|w| !(w[0] > 0.0 && w[1] >= w[0])) {
        return Err(Error::InvalidParameter(
            "samples must be positive and non-decreasing".into(),
        ));
    }
    let decades = (times[times.len() - 1] / times[0]).log10();
    let density = (times.len() - 1) as f64 / decades;
    if density < 32.0 {
        return Err(Error::GridTooCoarse {
            points_per_decade: density,
        });
    }
    let n = times.len();
    let logs: Vec<f64> = values.iter().map(|v| v.ln()).collect();
    let deriv: Vec<f64> = (0..n)
        .map(|i| {
            let (a, b) = (i.saturating_sub(1), (i + 1).min(n - 1));
            (logs[b] - logs[a]) / (times[b] - times[a])
        })
        .collect();
    let tol = 1e-9;
    let mut min_ratio = f64::INFINITY;
    let mut witness = None;
    for i in 0..n {
        let t = times[i];
        if 2.0 * t >= window {
            break;
        }
        let mut j = i + 1;
        while j < n && times[j] <= 2.0 * t * (1.0 + 1e-12) {
            let ratio = deriv[j] / deriv[i];
            min_ratio = min_ratio.min(ratio);
            if deriv[j] < delta * deriv[i] - tol * deriv[i].abs() && witness.is_none() {
                witness = Some((t, times[j]));
            }
            j += 1;
        }
    }
    Ok(RegularityCheck {
        passes: witness.is_none(),
        min_ratio,
        witness,
    })
}

/// Lower bounds from the spectral gap of a reversible chain.
///
/// Returns `tau_inf(eps) >= log(1/eps)/lambda_1` and `tau_1(1/e) >= 1/lambda_1`.
pub fn tau_lower_spectral_gap(
    reversible: bool,
    lambda1: f64,
    eps: f64,
) -> Result<(BoundReport, BoundReport)> {
    if !reversible {
        return Err(Error::NotReversible);
    }
    check_eps(eps)?;
    if !(lambda1 > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "spectral gap must be positive, got {lambda1}"
        )));
    }
    let linf = BoundReport::new(
        "spectral_gap_lower",
        (1.0 / eps).ln().max(0.0) / lambda1,
        eps,
        Validity::Lower,
        Norm::LInf,
        TimeMode::Continuous,
        "log(1/eps)/lambda1",
    )
    .input("lambda1", lambda1)
    .with_edge(ProfileEdge::Constant);
    let l1 = BoundReport::new(
        "spectral_gap_lower_l1",
        1.0 / lambda1,
        (-1.0f64).exp(),
        Validity::Lower,
        Norm::L1,
        TimeMode::Continuous,
        "1/lambda1",
    )
    .input("lambda1", lambda1)
    .with_edge(ProfileEdge::Constant);
    Ok((linf, l1))
}

/// Moderate-growth lower bound `gamma^2 / (4^(2d+1) A^2)` at `eps = 1/e`.
pub fn dsc_moderate_growth_lower(a: f64, d: f64, gamma: f64) -> Result<BoundReport> {
    if !(a >= 1.0 && d >= 1.0 && gamma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "need A >= 1, d >= 1, gamma > 0; got {a}, {d}, {gamma}"
        )));
    }
    let value = gamma * gamma / (4f64.powf(2.0 * d + 1.0) * a * a);
    let mut r = BoundReport::new(
        "moderate_growth_lower",
        value,
        (-1.0f64).exp(),
        Validity::Lower,
        Norm::LInf,
        TimeMode::Continuous,
        "gamma^2/(4^(2d+1) A^2)",
    )
    .input("A", a)
    .input("d", d)
    .input("gamma", gamma);
    let need = a * 4f64.powf(d + 1.0);
    r.assume(Assumption::new(
        "gamma>=A*4^(d+1)",
        gamma >= need,
        format!("gamma = {gamma}, A 4^(d+1) = {need}"),
    ));
    Ok(r)
}
