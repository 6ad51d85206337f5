//! Per-chain comparison of every applicable bound against exact mixing times.

use crate::bounds::{
    dsc_moderate_growth_lower, tau2_upper_profile, tau_discrete_conductance, tau_discrete_upper,
    tau_lower_anti_fk, tau_lower_dirichlet_set, tau_lower_spectral_gap, tau_upper_combined,
    tau_upper_conductance, tau_upper_spectral, tau_upper_spectral_gap, BoundReport, DiscreteRoute,
    Flag, LogSobolevInput, NashConstants, Norm, ProfileEdge, TimeMode, Validity,
};
use crate::exact::{exact_tau_with, DistanceOracle};
use crate::io::fmt_sig;
use crate::profiles::{
    cheeger_envelopes, conductance_lower_envelope, conductance_profile, estimate_logsob,
    growth_data, poincare_profile_bound, spectral_profile_exhaustive, volume_profile_bound,
    ConductanceMode, ConductanceProfiles, EnumerationMode, GrowthData, LogSobolevOptions,
    ProfileKind, ProfileOptions, ProfileSource, SpectralProfileBand, StepProfile,
};
use crate::{Chain, Error, Result};
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;

/// How the spectral profile is obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ProfileMode {
    /// Connected enumeration up to the cap, envelopes beyond.
    #[default]
    Auto,
    /// Every subset, without the connected-component reduction.
    Exhaustive,
    Connected,
    Envelopes,
}

impl std::str::FromStr for ProfileMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "auto" => Ok(Self::Auto),
            "exhaustive" => Ok(Self::Exhaustive),
            "connected" => Ok(Self::Connected),
            "envelopes" => Ok(Self::Envelopes),
            other => Err(Error::Parse(format!("unknown profile mode {other:?}"))),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ReportContext {
    pub eps: f64,
    pub mode: ProfileMode,
    pub profile: ProfileOptions,
    /// Local Poincare constant for the volume-growth envelope.
    pub poincare_a: Option<f64>,
    pub rho: Option<f64>,
    /// Estimate the log-Sobolev constant when `rho` is not given.
    pub estimate_rho: bool,
    pub nash: Option<NashConstants>,
    /// Moderate growth constants `(A, d)`.
    pub moderate_growth: Option<(f64, f64)>,
    /// Discrete-time bounds; `None` uses the chain's holding.
    pub alpha: Option<f64>,
    pub discrete: bool,
    /// Anti-Faber-Krahn regularity exponent and window; computed when absent.
    pub delta: Option<f64>,
    pub window: Option<f64>,
}

impl Default for ReportContext {
    fn default() -> Self {
        Self {
            eps: (-1.0f64).exp(),
            mode: ProfileMode::Auto,
            profile: ProfileOptions::default(),
            poincare_a: None,
            rho: None,
            estimate_rho: false,
            nash: None,
            moderate_growth: None,
            alpha: None,
            discrete: true,
            delta: None,
            window: None,
        }
    }
}

/// Profiles consumed by the bounds.
#[derive(Debug, Clone)]
pub struct ProfileBundle {
    pub lambda1: f64,
    pub band: Option<SpectralProfileBand<f64>>,
    /// Certified lower bound on the spectral profile.
    pub lambda_lower: StepProfile<f64>,
    pub edge: ProfileEdge,
    /// Achieved `inf lambda_0` values: an anti-Faber-Krahn function.
    pub anti_fk: StepProfile<f64>,
    /// Exact or certified-lower conductance profiles.
    pub conductance: ConductanceProfiles<f64>,
    /// Sweep conductance (upper envelope), for envelope mode.
    pub conductance_sweep: Option<ConductanceProfiles<f64>>,
    pub growth: GrowthData<f64>,
}

impl ProfileBundle {
    pub fn is_exhaustive(&self) -> bool {
        self.band.is_some()
    }
}

fn singleton_profile(chain: &Chain) -> Result<StepProfile<f64>> {
    let mut pts: Vec<(f64, f64)> = (0..chain.n())
        .map(|x| (chain.pi()[x], 1.0 - chain.kernel()[(x, x)]))
        .collect();
    pts.sort_by(|a, b| a.0.total_cmp(&b.0));
    let mut bps: Vec<f64> = Vec::new();
    let mut vals: Vec<f64> = Vec::new();
    let mut best = f64::INFINITY;
    for (m, v) in pts {
        best = best.min(v);
        if bps.last() == Some(&m) {
            *vals.last_mut().unwrap() = best;
        } else {
            bps.push(m);
            vals.push(best);
        }
    }
    StepProfile::new(
        bps,
        vals,
        Some(1.0),
        ProfileKind::UpperEnvelope,
        ProfileSource::Sweep,
    )
}

/// Builds the profiles for `chain` under `ctx`.
pub fn profile_bundle(chain: &Chain, ctx: &ReportContext) -> Result<ProfileBundle> {
    let lambda1 = chain.spectral_gap()?;
    let growth = growth_data(chain);
    let n = chain.n();
    let enumerate = match ctx.mode {
        ProfileMode::Envelopes => None,
        ProfileMode::Exhaustive => Some(EnumerationMode::All),
        ProfileMode::Connected => Some(EnumerationMode::Connected),
        ProfileMode::Auto => (n <= ctx.profile.cap).then_some(EnumerationMode::Connected),
    };
    if let Some(mode) = enumerate {
        let opts = ProfileOptions {
            mode,
            ..ctx.profile
        };
        let band = spectral_profile_exhaustive(chain, &opts)?;
        let conductance = conductance_profile(
            chain,
            ConductanceMode::Exact,
            ctx.profile.cap.max(n),
            Some(&growth),
        )?;
        return Ok(ProfileBundle {
            lambda1,
            lambda_lower: band.lower.clone(),
            edge: ProfileEdge::Lower,
            anti_fk: band.dirichlet.clone(),
            band: Some(band),
            conductance,
            conductance_sweep: None,
            growth,
        });
    }
    let conductance = conductance_lower_envelope(chain)?;
    let sweep = conductance_profile(
        chain,
        ConductanceMode::Sweep,
        ctx.profile.cap,
        Some(&growth),
    )?;
    let pi_star = chain.pi_star();
    let gap = StepProfile::constant(
        pi_star,
        lambda1,
        None,
        ProfileKind::LowerEnvelope,
        ProfileSource::SpectralGap,
    )?;
    let mut parts = vec![gap];
    if let (Some(cheeger), _) = cheeger_envelopes(&conductance.phi_star)? {
        parts.push(cheeger);
    }
    parts.push(volume_profile_bound(chain, &growth)?);
    if let Some(a) = ctx.poincare_a {
        parts.push(poincare_profile_bound(&growth, a, pi_star)?);
    }
    let refs: Vec<&StepProfile<f64>> = parts.iter().collect();
    let lambda_lower =
        StepProfile::pointwise_max(&refs, ProfileKind::LowerEnvelope, ProfileSource::Combined)?;
    let singles = singleton_profile(chain)?;
    let anti_fk = StepProfile::pointwise_min(
        &[&sweep.phi, &singles],
        ProfileKind::UpperEnvelope,
        ProfileSource::Sweep,
    )?;
    Ok(ProfileBundle {
        lambda1,
        band: None,
        lambda_lower,
        edge: ProfileEdge::Envelope,
        anti_fk,
        conductance,
        conductance_sweep: Some(sweep),
        growth,
    })
}

/// One line of the comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportRow {
    pub name: String,
    pub validity: Validity,
    pub measure: Norm,
    pub time: TimeMode,
    pub value: f64,
    pub exact: Option<f64>,
    pub ratio: Option<f64>,
    pub certified: bool,
    pub consistent: Option<bool>,
    pub flags: Vec<Flag>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ChainReport {
    pub name: String,
    pub n: usize,
    pub reversible: bool,
    pub pi_star: f64,
    pub lambda1: f64,
    pub epsilon: f64,
    pub exhaustive: bool,
    /// Exact mixing times keyed by `"<norm>_<time mode>"`.
    pub exact: BTreeMap<String, f64>,
    pub bounds: Vec<BoundReport>,
    pub rows: Vec<ReportRow>,
}

fn exact_key(p: Norm, mode: TimeMode) -> String {
    let m = match mode {
        TimeMode::Continuous => "continuous",
        TimeMode::Discrete => "discrete",
    };
    format!("l{}_{m}", p.as_str())
}

impl ChainReport {
    /// Certified rows that contradict the exact value.
    pub fn violations(&self) -> Vec<&ReportRow> {
        self.rows
            .iter()
            .filter(|r| r.certified && r.consistent == Some(false))
            .collect()
    }

    pub fn exact_value(&self, p: Norm, mode: TimeMode) -> Option<f64> {
        self.exact.get(&exact_key(p, mode)).copied()
    }

    pub fn bound(&self, name: &str) -> Option<&BoundReport> {
        self.bounds.iter().find(|b| b.name == name)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

fn push(out: &mut Vec<BoundReport>, r: Result<BoundReport>) -> Result<()> {
    match r {
        Ok(b) => {
            out.push(b);
            Ok(())
        }
        Err(
            Error::NotReversible | Error::RegularityFailed { .. } | Error::ReducibleSymmetrization,
        ) => Ok(()),
        Err(e) => Err(e),
    }
}

/// Every applicable bound for `chain`.
pub fn evaluate_bounds(
    chain: &Chain,
    bundle: &ProfileBundle,
    ctx: &ReportContext,
) -> Result<Vec<BoundReport>> {
    let eps = ctx.eps;
    let pi_star = chain.pi_star();
    let lambda1 = bundle.lambda1;
    let mut out = Vec::new();

    out.push(tau_upper_spectral(&bundle.lambda_lower, eps, pi_star)?.with_edge(bundle.edge));
    out.push(tau2_upper_profile(&bundle.lambda_lower, eps, pi_star)?.with_edge(bundle.edge));
    out.push(
        tau_upper_conductance(&bundle.conductance.phi_star, eps, pi_star)?
            .with_edge(ProfileEdge::Envelope),
    );
    if let Some(sweep) = &bundle.conductance_sweep {
        let mut r =
            tau_upper_conductance(&sweep.phi_star, eps, pi_star)?.with_edge(ProfileEdge::Envelope);
        r.name = "conductance_profile_sweep".into();
        out.push(r);
    }
    let (l2, linf) = tau_upper_spectral_gap(lambda1, pi_star, eps)?;
    out.push(l2);
    out.push(linf);

    let rho = match (ctx.rho, ctx.estimate_rho) {
        (Some(r), _) => Some(LogSobolevInput {
            rho: r,
            estimated: false,
        }),
        (None, true) => {
            let est = estimate_logsob(chain, &LogSobolevOptions::default())?;
            Some(LogSobolevInput {
                rho: est.rho_hat,
                estimated: true,
            })
        }
        _ => None,
    };
    if rho.is_some() || ctx.nash.is_some() {
        out.extend(tau_upper_combined(lambda1, rho, ctx.nash, pi_star, eps)?);
    }

    let reversible = chain.is_reversible();
    if reversible {
        let (linf, l1) = tau_lower_spectral_gap(true, lambda1, eps)?;
        out.push(linf);
        if (eps - (-1.0f64).exp()).abs() < 1e-12 {
            out.push(l1);
        }
        let mut best: Option<BoundReport> = None;
        let mut consider = |l0: f64, mass: f64| -> Result<()> {
            if mass < 1.0 && l0 > 0.0 {
                let r = tau_lower_dirichlet_set(l0, mass, eps)?;
                if best.as_ref().is_none_or(|b| r.value > b.value) {
                    best = Some(r);
                }
            }
            Ok(())
        };
        for x in 0..chain.n() {
            consider(1.0 - chain.kernel()[(x, x)], chain.pi()[x])?;
        }
        if let Some(band) = &bundle.band {
            for a in &band.argmin {
                consider(a.lambda0, a.mass)?;
            }
        }
        if let Some(b) = best {
            out.push(b);
        }
        push(
            &mut out,
            tau_lower_anti_fk(true, &bundle.anti_fk, pi_star, ctx.delta, ctx.window, eps)
                .map(|a| a.report),
        )?;
    }
    if let Some((a, d)) = ctx.moderate_growth {
        out.push(dsc_moderate_growth_lower(
            a,
            d,
            bundle.growth.diameter() as f64,
        )?);
    }

    let alpha = ctx.alpha.unwrap_or(chain.holding());
    if ctx.discrete && alpha > 0.0 && alpha < 1.0 {
        let route = DiscreteRoute::Holding {
            profile: &bundle.lambda_lower,
            alpha,
            holding: chain.holding(),
        };
        out.push(tau_discrete_upper(route, eps, pi_star)?.with_edge(bundle.edge));
        let (a, b) = tau_discrete_conductance(&bundle.conductance.phi_star, alpha, eps, pi_star)?;
        out.push(a);
        out.push(b);
        let sym = chain.multiplicative_symmetrizations();
        if sym.both_irreducible() {
            let (kk, ksk) = sym.chains(chain)?;
            let sub = ReportContext {
                discrete: false,
                ..ctx.clone()
            };
            let pk = profile_bundle(&kk, &sub)?;
            let pks = profile_bundle(&ksk, &sub)?;
            let route = DiscreteRoute::Symmetrized {
                kk_star: &pk.lambda_lower,
                k_star_k: &pks.lambda_lower,
                irreducible: true,
            };
            out.push(tau_discrete_upper(route, eps, pi_star)?.with_edge(pk.edge));
        }
    }
    Ok(out)
}

/// Bounds, exact mixing times and their ratios for one chain.
pub fn evaluate_all(name: &str, chain: &Chain, ctx: &ReportContext) -> Result<ChainReport> {
    let bundle = profile_bundle(chain, ctx)?;
    let bounds = evaluate_bounds(chain, &bundle, ctx)?;
    let oracle = DistanceOracle::new(chain)?;
    let mut exact = BTreeMap::new();
    let mut needed: Vec<(Norm, TimeMode, f64)> = bounds
        .iter()
        .map(|b| (b.measure, b.time, b.epsilon))
        .collect();
    needed.dedup();
    for (p, mode, eps) in needed {
        if eps != ctx.eps {
            continue;
        }
        let key = exact_key(p, mode);
        if exact.contains_key(&key) {
            continue;
        }
        match exact_tau_with(&oracle, p, eps, mode) {
            Ok(t) => {
                exact.insert(key, t.value);
            }
            Err(Error::Periodic { .. } | Error::NoConvergenceInWindow { .. }) => {}
            Err(e) => return Err(e),
        }
    }
    let mut exact_by_eps: BTreeMap<(String, u64), f64> = BTreeMap::new();
    let mut rows = Vec::with_capacity(bounds.len());
    for b in &bounds {
        let key = exact_key(b.measure, b.time);
        let ex = if (b.epsilon - ctx.eps).abs() < 1e-15 {
            exact.get(&key).copied()
        } else {
            let k = (key.clone(), b.epsilon.to_bits());
            match exact_by_eps.get(&k) {
                Some(&v) => Some(v),
                None => {
                    let v = exact_tau_with(&oracle, b.measure, b.epsilon, b.time)
                        .ok()
                        .map(|t| t.value);
                    if let Some(v) = v {
                        exact_by_eps.insert(k, v);
                    }
                    v
                }
            }
        };
        rows.push(ReportRow {
            name: b.name.clone(),
            validity: b.validity,
            measure: b.measure,
            time: b.time,
            value: b.value,
            exact: ex,
            ratio: ex.filter(|&e| e > 0.0).map(|e| b.value / e),
            certified: b.is_certified(),
            consistent: ex.map(|e| b.consistent_with(e, 1e-9)),
            flags: b.flags.clone(),
        });
    }
    Ok(ChainReport {
        name: name.into(),
        n: chain.n(),
        reversible: chain.is_reversible(),
        pi_star: chain.pi_star(),
        lambda1: bundle.lambda1,
        epsilon: ctx.eps,
        exhaustive: bundle.is_exhaustive(),
        exact,
        bounds,
        rows,
    })
}

/// Comparison table for several chains; numbers carry 9 significant digits.
pub fn reports_to_csv(reports: &[ChainReport]) -> Result<String> {
    let mut w = csv::Writer::from_writer(Vec::new());
    let err = |e: csv::Error| Error::Parse(e.to_string());
    w.write_record([
        "chain",
        "bound",
        "validity",
        "measure",
        "time",
        "value",
        "exact",
        "ratio",
        "certified",
        "consistent",
        "flags",
    ])
    .map_err(err)?;
    let opt = |v: Option<f64>| v.map(|x| fmt_sig(x, 9)).unwrap_or_default();
    for rep in reports {
        for row in &rep.rows {
            let flags: Vec<&str> = row.flags.iter().map(|f| f.as_str()).collect();
            w.write_record([
                rep.name.as_str(),
                &row.name,
                row.validity.as_str(),
                row.measure.as_str(),
                row.time.as_str(),
                &fmt_sig(row.value, 9),
                &opt(row.exact),
                &opt(row.ratio),
                if row.certified { "true" } else { "false" },
                row.consistent
                    .map(|c| if c { "true" } else { "false" })
                    .unwrap_or(""),
                &flags.join(";"),
            ])
            .map_err(err)?;
        }
    }
    let bytes = w.into_inner().map_err(|e| Error::Parse(e.to_string()))?;
    String::from_utf8(bytes).map_err(|e| Error::Parse(e.to_string()))
}
