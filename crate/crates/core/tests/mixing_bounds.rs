mod common;

use common::*;
use spk_core::bounds::*;
use spk_core::exact::{exact_tau, DistanceOracle};
use spk_core::profiles::*;
use spk_core::report::{profile_bundle, ProfileMode, ReportContext};
use spk_core::zoo::{complete_graph, cycle, random_reversible, viscek};
use spk_core::Chain;
use std::f64::consts::{E, PI};

const INV_E: f64 = 1.0 / E;

fn constant(start: f64, v: f64) -> StepProfile<f64> {
    StepProfile::constant(
        start,
        v,
        None,
        ProfileKind::Exact,
        ProfileSource::SpectralGap,
    )
    .unwrap()
}

fn exact_band(c: &Chain) -> SpectralProfileBand<f64> {
    spectral_profile_exhaustive(c, &ProfileOptions::default()).unwrap()
}

fn linf(c: &Chain, eps: f64) -> f64 {
    exact_tau(c, Norm::LInf, eps, TimeMode::Continuous)
        .unwrap()
        .value
}

fn linf_discrete(c: &Chain, eps: f64) -> f64 {
    exact_tau(c, Norm::LInf, eps, TimeMode::Discrete)
        .unwrap()
        .value
}

/// Inverts `t = int_{a}^{V} dv / (v L(v))` with quadrature and bisection.
fn quadrature_v(profile: &StepProfile<f64>, a: f64, t: f64) -> f64 {
    let f = |v: f64| 1.0 / (v * profile.value_at(v).unwrap());
    let integral = |b: f64| {
        let mut cuts: Vec<f64> = vec![a];
        cuts.extend(
            profile
                .breakpoints()
                .iter()
                .copied()
                .filter(|&x| x > a && x < b),
        );
        cuts.push(b);
        cuts.windows(2)
            .map(|w| adaptive_simpson(&f, w[0], w[1], 1e-14))
            .sum::<f64>()
    };
    let (mut lo, mut hi) = (a, a);
    while integral(hi) < t {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let m = 0.5 * (lo + hi);
        if integral(m) < t {
            lo = m;
        } else {
            hi = m;
        }
    }
    0.5 * (lo + hi)
}

#[test]
fn v_function_closed_forms() {
    let v = VFunction::new(&constant(0.1, 1.0), 0.4).unwrap();
    for t in [0.0, 0.3, 1.0, 2.5] {
        assert!((v.v_of(t).unwrap() - 0.4 * t.exp()).abs() < 1e-14 * t.exp());
    }

    let two = StepProfile::new(
        vec![0.1, 1.0],
        vec![1.0, 0.5],
        None,
        ProfileKind::Exact,
        ProfileSource::Enumeration,
    )
    .unwrap();
    let v = VFunction::new(&two, 0.4).unwrap();
    let seam = (1.0f64 / 0.4).ln();
    assert!((v.v_of(seam).unwrap() - 1.0).abs() < 1e-14);
    assert!((v.v_of(seam - 1e-9).unwrap() - v.v_of(seam + 1e-9).unwrap()).abs() < 1e-8);
    assert!((v.v_of(seam + 1.0).unwrap() - 0.5f64.exp()).abs() < 1e-13);
}

#[test]
fn v_function_matches_quadrature() {
    let mut profiles = vec![exact_band(&cycle(8, 0.0).unwrap()).lower];
    profiles.push(exact_band(&random_reversible(6, 3).unwrap()).lower);
    for p in &profiles {
        let a = 4.0 * p.start();
        let v = VFunction::new(p, a).unwrap();
        for t in [0.1, 0.7, 2.0, 5.0, 11.0] {
            let closed = v.v_of(t).unwrap();
            let quad = quadrature_v(p, a, t);
            assert!(
                (closed - quad).abs() < 1e-8 * closed,
                "t {t}: {closed} vs {quad}"
            );
        }
    }
}

#[test]
fn spectral_profile_bound() {
    let k10: Chain = complete_graph(10).unwrap();
    let r = tau_upper_spectral(&constant(0.1, 1.0), INV_E, 0.1).unwrap();
    assert!((r.value - 2.0 * (1.0 + 10f64.ln())).abs() < 1e-9);
    assert_eq!(r.validity, Validity::Upper);

    for (l1, ps) in [(0.3, 0.01), (1.0, 0.1), (0.05, 1.0 / 64.0)] {
        let r = tau_upper_spectral(&constant(ps, l1), INV_E, ps).unwrap();
        assert!((r.value - 2.0 / l1 * (1.0 + (1.0 / ps).ln())).abs() < 1e-12 * r.value);
    }

    let c8: Chain = cycle(8, 0.0).unwrap();
    let r = tau_upper_spectral(&exact_band(&c8).lower, INV_E, c8.pi_star()).unwrap();
    assert!(r.value.is_finite() && r.value >= linf(&c8, INV_E));
    let _ = k10;
}

#[test]
fn conductance_bounds() {
    let eps = 0.2;
    let ps = 0.05;
    let r = tau_upper_conductance(&constant(ps, 0.5), eps, ps).unwrap();
    assert!((r.value - 16.0 * ((4.0 / eps) / (4.0 * ps)).ln()).abs() < 1e-12);

    for c in [
        cycle(8, 0.0).unwrap(),
        complete_graph(10).unwrap(),
        random_reversible(6, 1).unwrap(),
    ] {
        let band = exact_band(&c);
        let phi = conductance_profile(&c, ConductanceMode::Exact, 20, None).unwrap();
        let s = tau_upper_spectral(&band.lower, INV_E, c.pi_star())
            .unwrap()
            .value;
        let k = tau_upper_conductance(&phi.phi_star, INV_E, c.pi_star())
            .unwrap()
            .value;
        assert!(s <= k);
    }

    let (_, v2) = viscek::<f64>(4, 2, 2000).unwrap();
    let ctx = ReportContext {
        mode: ProfileMode::Envelopes,
        ..ReportContext::default()
    };
    let b = profile_bundle(&v2, &ctx).unwrap();
    let s = tau_upper_spectral(&b.lambda_lower, INV_E, v2.pi_star())
        .unwrap()
        .value;
    let k = tau_upper_conductance(&b.conductance.phi_star, INV_E, v2.pi_star())
        .unwrap()
        .value;
    assert!(k > s);
}

#[test]
fn l2_decay() {
    let ps = 0.1;
    let p = constant(ps, 1.0);
    assert!((tau_l2_upper(&p, ps, 0.0).unwrap() - 1.0 / ps).abs() < 1e-12);
    let t = 10f64.ln();
    assert!((tau_l2_upper(&p, ps, t).unwrap() - 4.0 / (0.4 * 10.0)).abs() < 1e-12);

    let c: Chain = random_reversible(6, 8).unwrap();
    let band = exact_band(&c);
    let oracle = DistanceOracle::new(&c).unwrap();
    for i in 0..20 {
        let t = 0.05 * 1.35f64.powi(i);
        let d2 = oracle.continuous(t, Norm::L2);
        let bound = tau_l2_upper(&band.lower, c.pi_star(), t).unwrap();
        assert!(d2 * d2 <= bound * (1.0 + 1e-12), "t {t}");
    }
}

#[test]
fn spectral_gap_bounds() {
    let (l2, li) = tau_upper_spectral_gap(1.0, 0.1, INV_E).unwrap();
    assert!((l2.value - (1.0 + 0.5 * 10f64.ln())).abs() < 1e-12);
    assert!((li.value - (1.0 + 10f64.ln())).abs() < 1e-12);
    let (l2, _) = tau_upper_spectral_gap(1.0, 0.5, 1.0).unwrap();
    assert!((l2.value - 2f64.sqrt().ln()).abs() < 1e-15);

    let c8: Chain = cycle(8, 0.0).unwrap();
    let l1 = 1.0 - (PI / 4.0).cos();
    let (l2, li) = tau_upper_spectral_gap(l1, 0.125, INV_E).unwrap();
    assert!(li.value >= linf(&c8, INV_E));
    assert!(
        l2.value
            >= exact_tau(&c8, Norm::L2, INV_E, TimeMode::Continuous)
                .unwrap()
                .value
    );

    let (lo, lo1) = tau_lower_spectral_gap(true, 1.0, INV_E).unwrap();
    assert!((lo.value - 1.0).abs() < 1e-15);
    assert!((lo1.value - 1.0).abs() < 1e-15);
    assert!(lo.value <= 1.0 + 9f64.ln());
    assert_eq!(tau_lower_spectral_gap(true, 1.0, 1.0).unwrap().0.value, 0.0);
    let (lo, _) = tau_lower_spectral_gap(true, l1, INV_E).unwrap();
    assert!(lo.value <= linf(&c8, INV_E));
}

#[test]
fn discrete_bounds() {
    let lazy_k: Chain = complete_graph::<f64>(6).unwrap().add_laziness(0.5).unwrap();
    let band = exact_band(&lazy_k);
    let route = DiscreteRoute::Holding {
        profile: &band.lower,
        alpha: 0.5,
        holding: lazy_k.holding(),
    };
    let r = tau_discrete_upper(route, INV_E, lazy_k.pi_star()).unwrap();
    assert_eq!(r.value.fract(), 0.0);
    assert!(r.value >= linf_discrete(&lazy_k, INV_E));

    assert!(spk_core::build_chain::<f64>(nalgebra::DMatrix::identity(3, 3)).is_err());

    let lazy8: Chain = cycle(8, 0.5).unwrap();
    let band = exact_band(&lazy8);
    let route = DiscreteRoute::Holding {
        profile: &band.lower,
        alpha: 0.5,
        holding: 0.5,
    };
    let r = tau_discrete_upper(route, INV_E, 0.125).unwrap();
    assert_eq!(r.value % 2.0, 0.0);

    let phi = conductance_profile(&lazy8, ConductanceMode::Exact, 20, None).unwrap();
    let (a, b) = tau_discrete_conductance(&phi.phi_star, 0.5, INV_E, 0.125).unwrap();
    assert_eq!(a.value, b.value);
    let ex = linf_discrete(&lazy8, INV_E);
    assert!(a.value >= ex && b.value >= ex);
    let (a, b) = tau_discrete_conductance(&phi.phi_star, 0.25, INV_E, 0.125).unwrap();
    assert!(a.value < b.value);
}

#[test]
fn combined_bounds() {
    let ps = 0.05;
    let (l1, rho) = (1.0, 1.0);
    let out = tau_upper_combined(
        l1,
        Some(LogSobolevInput {
            rho,
            estimated: false,
        }),
        None,
        ps,
        INV_E,
    )
    .unwrap();
    let expect = 2.0 / rho * (1.0 / (4.0 * ps)).ln().ln() + 2.0 / l1 * (8.0 / INV_E).ln();
    assert!((out[0].value - expect).abs() < 1e-12);
    assert!(out[0].flags.is_empty());

    let nash = NashConstants {
        c: 2.0,
        d: 1.0,
        t: 2.0,
    };
    let out = tau_upper_combined(l1, None, Some(nash), ps, INV_E).unwrap();
    let a = out[0]
        .assumptions
        .iter()
        .find(|a| a.name == "DC>=T")
        .unwrap();
    assert!(a.holds);
    let nash = NashConstants {
        c: 1.0,
        d: 1.0,
        t: 2.0,
    };
    let out = tau_upper_combined(l1, None, Some(nash), ps, INV_E).unwrap();
    assert!(out[0].has_flag(Flag::HypothesisViolated));

    let c16: Chain = cycle(16, 0.0).unwrap();
    let est = estimate_logsob(&c16, &LogSobolevOptions::default()).unwrap();
    let l1 = c16.spectral_gap().unwrap();
    let out = tau_upper_combined(
        l1,
        Some(LogSobolevInput {
            rho: est.rho_hat,
            estimated: true,
        }),
        None,
        c16.pi_star(),
        INV_E,
    )
    .unwrap();
    assert!(out[0].value >= linf(&c16, INV_E));
}

#[test]
fn dirichlet_set_lower_bound() {
    let n = 10.0;
    for t in [0.0, 0.1, 0.5, 1.0, 3.0, 8.0] {
        let lb = heat_diag_lower(1.0 - 1.0 / n, 1.0 / n, t);
        let exact = n * (-t).exp() + 1.0 - (-t).exp();
        assert!(lb <= exact);
    }
    assert!((heat_diag_lower(0.3, 0.2, 0.0) - 2.5).abs() < 1e-15);
    assert!(heat_diag_lower(0.3, 0.2, 0.0) <= 1.0 / 0.2);

    let c16: Chain = cycle(16, 0.0).unwrap();
    let band = exact_band(&c16);
    let anti = tau_lower_anti_fk(true, &band.lower, c16.pi_star(), None, None, INV_E).unwrap();
    assert_eq!(anti.report.validity, Validity::Lower);
    assert!(anti.report.value <= linf(&c16, INV_E));
    let d = tau_lower_anti_fk(true, &band.dirichlet, c16.pi_star(), None, None, INV_E).unwrap();
    assert!(d.report.value <= linf(&c16, INV_E));
}

#[test]
fn regularity_checks() {
    let times: Vec<f64> = (0..=400)
        .map(|i| 0.01 * 10f64.powf(i as f64 / 100.0))
        .collect();
    let exp: Vec<f64> = times.iter().map(|t| t.exp()).collect();
    assert!(delta_regularity(&times, &exp, 1.0, 50.0).unwrap().passes);
    let cube: Vec<f64> = times.iter().map(|t| t.powi(3)).collect();
    assert!(delta_regularity(&times, &cube, 0.5, 50.0).unwrap().passes);
    assert!(!delta_regularity(&times, &cube, 0.6, 50.0).unwrap().passes);
    let coarse: Vec<f64> = times.iter().step_by(8).copied().collect();
    let vals: Vec<f64> = coarse.iter().map(|t| t.exp()).collect();
    assert!(matches!(
        delta_regularity(&coarse, &vals, 0.5, 50.0),
        Err(spk_core::Error::GridTooCoarse { .. })
    ));
}

#[test]
fn dsc_bound() {
    let r = dsc_moderate_growth_lower(6.0, 1.0, 500.0).unwrap();
    assert!((r.value - 500.0f64.powi(2) / (64.0 * 36.0)).abs() < 1e-9);
    assert!((r.value - 108.5).abs() < 0.06);
    assert!(!r.has_flag(Flag::HypothesisViolated));
    assert!(dsc_moderate_growth_lower(6.0, 1.0, 4.0)
        .unwrap()
        .has_flag(Flag::HypothesisViolated));

    let c: Chain = cycle(1000, 0.0).unwrap();
    let ctx = ReportContext {
        mode: ProfileMode::Envelopes,
        poincare_a: Some(4.0),
        ..ReportContext::default()
    };
    let b = profile_bundle(&c, &ctx).unwrap();
    let up = tau_upper_spectral(&b.lambda_lower, INV_E, c.pi_star())
        .unwrap()
        .value;
    assert!(r.value <= up);
}

#[test]
fn empty_range_is_flagged() {
    let r = tau_upper_spectral(&constant(0.5, 1.0), 4.0, 0.5).unwrap();
    assert_eq!(r.value, 0.0);
    assert!(r.has_flag(Flag::EmptyIntegrationRange));
}
