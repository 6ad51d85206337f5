mod common;

use common::*;
use nalgebra::DVector;
use spk_core::profiles::*;
use spk_core::subset::{lambda0, Subset};
use spk_core::verify::{run_suite, Suite, SuiteConfig};
use spk_core::zoo::{
    complete_graph, cycle, random_chain, random_reversible, torus_product, viscek,
};
use spk_core::Chain;
use std::collections::VecDeque;
use std::f64::consts::PI;

fn band(c: &Chain, mode: EnumerationMode) -> SpectralProfileBand<f64> {
    let opts = ProfileOptions {
        mode,
        cap: 24,
        ..ProfileOptions::default()
    };
    spectral_profile_exhaustive(c, &opts).unwrap()
}

#[test]
fn spectral_gaps() {
    let k: Chain = complete_graph(7).unwrap();
    assert!((spectral_gap(&k).unwrap() - 1.0).abs() < 1e-12);
    let c4: Chain = cycle(4, 0.0).unwrap();
    assert!((spectral_gap(&c4).unwrap() - 1.0).abs() < 1e-12);
    for n in [5, 9, 16] {
        let c: Chain = cycle(n, 0.0).unwrap();
        assert!((spectral_gap(&c).unwrap() - (1.0 - (2.0 * PI / n as f64).cos())).abs() < 1e-12);
    }
    for seed in 0..5 {
        let r: Chain = random_reversible(8, seed).unwrap();
        assert!((spectral_gap(&r).unwrap() - gap_oracle(&r)).abs() < 1e-10);
    }
}

#[test]
fn exhaustive_examples() {
    let k6: Chain = complete_graph(6).unwrap();
    let b = band(&k6, EnumerationMode::Connected);
    assert!(b.complete);
    for &v in b.upper.values() {
        assert!((v - 1.0).abs() < 1e-6, "upper edge {v}");
    }

    let c8: Chain = cycle(8, 0.0).unwrap();
    let b = band(&c8, EnumerationMode::Connected);
    let v = b.dirichlet.value_at(3.0 / 8.0).unwrap();
    assert!((v - (1.0 - (PI / 4.0).cos())).abs() < 1e-12);

    let r: Chain = random_chain(5, 12).unwrap();
    let b = band(&r, EnumerationMode::All);
    for &bp in b.dirichlet.breakpoints() {
        let lib = b.dirichlet.value_at(bp).unwrap();
        assert!(
            (lib - brute_dirichlet_profile(&r, bp)).abs() < 1e-10,
            "r = {bp}"
        );
    }
}

#[test]
fn cycle_breakpoints() {
    for n in [5usize, 8, 12] {
        let c: Chain = cycle(n, 0.0).unwrap();
        let b = band(&c, EnumerationMode::Connected);
        assert_eq!(b.dirichlet.len(), n - 1);
        for (i, (&r, &v)) in b
            .dirichlet
            .breakpoints()
            .iter()
            .zip(b.dirichlet.values())
            .enumerate()
        {
            let s = (i + 1) as f64;
            assert!((r - s / n as f64).abs() < 1e-14);
            assert!(
                (v - (1.0 - (PI / (s + 1.0)).cos())).abs() < 1e-10,
                "n {n} s {s}"
            );
        }
    }
}

#[test]
fn connected_reduction_matches_all_sets() {
    for seed in 0..4 {
        let r: Chain = random_reversible(7, seed).unwrap();
        let a = band(&r, EnumerationMode::All);
        let c = band(&r, EnumerationMode::Connected);
        assert_eq!(a.dirichlet.len(), c.dirichlet.len());
        for i in 0..a.dirichlet.len() {
            assert!((a.dirichlet.breakpoints()[i] - c.dirichlet.breakpoints()[i]).abs() < 1e-14);
            assert!((a.dirichlet.values()[i] - c.dirichlet.values()[i]).abs() < 1e-12);
        }
    }
}

fn brute_phi(c: &Chain, r: f64) -> f64 {
    let n = c.n();
    let mut best = f64::INFINITY;
    for mask in 1..(1u64 << n) - 1 {
        let m = members(mask, n);
        let mass: f64 = m.iter().map(|&x| c.pi()[x]).sum();
        if mass <= r * (1.0 + 1e-12) {
            best = best.min(conductance_of(c, &m));
        }
    }
    best
}

#[test]
fn conductance_examples() {
    let k4: Chain = complete_graph(4).unwrap();
    assert!((conductance_of(&k4, &[0, 1]) - 0.5).abs() < 1e-15);
    let p = conductance_profile(&k4, ConductanceMode::Exact, 20, None).unwrap();
    assert!((p.phi.value_at(0.5).unwrap() - 0.5).abs() < 1e-14);

    let c8: Chain = cycle(8, 0.0).unwrap();
    let p = conductance_profile(&c8, ConductanceMode::Exact, 20, None).unwrap();
    assert!((p.phi.value_at(0.25).unwrap() - 0.5).abs() < 1e-14);
    assert!(p.phi.is_non_increasing());

    for seed in 0..4 {
        let r: Chain = random_chain(6, seed).unwrap();
        let p = conductance_profile(&r, ConductanceMode::Exact, 20, None).unwrap();
        assert!(p.phi.is_non_increasing());
        for &bp in p.phi.breakpoints() {
            assert!((p.phi.value_at(bp).unwrap() - brute_phi(&r, bp)).abs() < 1e-12);
        }
        let half = p.phi.value_at(0.5).unwrap();
        let last = *p.phi_star.values().last().unwrap();
        assert!((last - half).abs() < 1e-14);
    }
}

#[test]
fn cheeger_envelope_examples() {
    let flat = StepProfile::<f64>::constant(
        0.1,
        0.5,
        Some(0.5),
        ProfileKind::Exact,
        ProfileSource::Enumeration,
    )
    .unwrap();
    let (lo, _) = cheeger_envelopes(&flat).unwrap();
    assert!(lo
        .unwrap()
        .values()
        .iter()
        .all(|&v| (v - 0.125).abs() < 1e-15));

    let c8: Chain = cycle(8, 0.0).unwrap();
    let b = band(&c8, EnumerationMode::Connected);
    let p = conductance_profile(&c8, ConductanceMode::Exact, 20, None).unwrap();
    let (lo, hi) = cheeger_envelopes(&p.phi).unwrap();
    let (lo, hi) = (lo.unwrap(), hi.unwrap());
    for &bp in b.lower.breakpoints().iter().filter(|&&r| r < 1.0) {
        let l = b.dirichlet.value_at(bp).unwrap();
        assert!(lo.value_at(bp).unwrap() <= l + 1e-12);
        assert!(hi.value_at(bp).unwrap() >= l - 1e-12);
    }

    let k: Chain = complete_graph(10).unwrap();
    let p = conductance_profile(&k, ConductanceMode::Exact, 20, None).unwrap();
    let (_, hi) = cheeger_envelopes(&p.phi).unwrap();
    let hi = hi.unwrap();
    for &bp in hi.breakpoints().iter().filter(|&&r| r <= 0.5) {
        assert!(hi.value_at(bp).unwrap() >= 1.0 - 1e-12);
    }
}

fn bfs_oracle(adj: &[Vec<usize>], s: usize) -> Vec<usize> {
    let mut d = vec![usize::MAX; adj.len()];
    d[s] = 0;
    let mut q = VecDeque::from([s]);
    while let Some(x) = q.pop_front() {
        for &y in &adj[x] {
            if d[y] == usize::MAX {
                d[y] = d[x] + 1;
                q.push_back(y);
            }
        }
    }
    d
}

#[test]
fn growth_tables() {
    let n = 11;
    let c: Chain = cycle(n, 0.0).unwrap();
    let g = growth_data(&c);
    for r in 0..n / 2 {
        assert!((g.volume(3, r) - (1.0 + 2.0 * r as f64) / n as f64).abs() < 1e-14);
    }
    let k: Chain = complete_graph(6).unwrap();
    assert!((growth_data(&k).v_star(1) - 1.0).abs() < 1e-15);

    let (graph, chain) = viscek::<f64>(4, 2, 2000).unwrap();
    let g = growth_data(&chain);
    let adj = graph.adjacency();
    let dists: Vec<Vec<usize>> = (0..graph.n_vertices).map(|x| bfs_oracle(&adj, x)).collect();
    let gamma = dists.iter().flatten().copied().max().unwrap();
    assert_eq!(g.diameter(), gamma);
    for r in 0..=gamma {
        let v = (0..graph.n_vertices)
            .map(|x| {
                (0..graph.n_vertices)
                    .filter(|&y| dists[x][y] <= r)
                    .map(|y| chain.pi()[y])
                    .sum::<f64>()
            })
            .fold(f64::INFINITY, f64::min);
        assert!((g.v_star(r) - v).abs() < 1e-12, "r = {r}");
    }
}

#[test]
fn volume_envelope() {
    let c8: Chain = cycle(8, 0.0).unwrap();
    assert!((c8.min_edge_flow() - 0.125).abs() < 1e-15);
    let g = growth_data(&c8);
    let env = volume_profile_bound(&c8, &g).unwrap();
    let b = band(&c8, EnumerationMode::Connected);
    let at_half = env.value_at(0.5).unwrap();
    assert!(at_half > 0.0 && at_half <= b.lower.value_at(0.5).unwrap());
    assert!(env.value_at(c8.pi_star()).unwrap() <= 0.125 / (4.0 * c8.pi_star()) + 1e-15);

    let (_, v1) = viscek::<f64>(4, 1, 2000).unwrap();
    let env = volume_profile_bound(&v1, &growth_data(&v1)).unwrap();
    let b = band(&v1, EnumerationMode::Connected);
    for &bp in b.lower.breakpoints().iter().filter(|&&r| r < 1.0) {
        assert!(env.value_at(bp).unwrap() <= b.lower.value_at(bp).unwrap() + 1e-12);
    }
}

#[test]
fn moderate_growth() {
    let c: Chain = cycle(20, 0.0).unwrap();
    assert!(moderate_growth_check(&growth_data(&c), 6.0, 1.0).holds);

    let k: Chain = complete_graph(5).unwrap();
    let g = growth_data(&k);
    assert!(!moderate_growth_check(&g, 1.0, 1.0).holds);
    assert!((min_moderate_growth_constant(&g, 1.0) - 5.0).abs() < 1e-12);
    assert!(moderate_growth_check(&g, 5.0, 1.0).holds);

    let t: Chain = torus_product(4, 16).unwrap();
    let g = growth_data(&t);
    let a = min_moderate_growth_constant(&g, 1.5);
    assert!(a.is_finite() && a >= 1.0);
    assert!(moderate_growth_check(&g, a, 1.5).holds);
}

#[test]
fn poincare_envelope() {
    let n = 40;
    let c: Chain = cycle(n, 0.0).unwrap();
    let g = growth_data(&c);
    let env = poincare_profile_bound(&g, 4.0, c.pi_star()).unwrap();
    let small = g.v_star(1) / 2.0 * (1.0 - 1e-9);
    assert!(env.value_at(small).unwrap() >= 1.0 / 16.0 - 1e-15);
    let scaled: Vec<f64> = [0.1, 0.2, 0.3, 0.45]
        .iter()
        .map(|&v| env.value_at(v).unwrap() * (v * n as f64).powi(2))
        .collect();
    let (lo, hi) = scaled
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &x| (a.min(x), b.max(x)));
    assert!(hi / lo < 4.0, "{scaled:?}");

    let t: Chain = torus_product(3, 9).unwrap();
    let env = poincare_profile_bound(&growth_data(&t), 8.0, t.pi_star()).unwrap();
    for w in 1..=3 {
        for h in 1..=8 {
            let m: Vec<usize> = (0..w)
                .flat_map(|i| (0..h).map(move |j| i * 9 + j))
                .collect();
            if m.len() == 27 {
                continue;
            }
            let s = Subset::new(&t, m).unwrap();
            let upper = lambda0(&t, &s).unwrap() / (1.0 - s.mass());
            assert!(env.value_at(s.mass()).unwrap() <= upper + 1e-12);
        }
    }
}

#[test]
fn functional_envelopes() {
    assert!((logsob_envelope_value(0.7f64, 1.0 - 1e-9) - 0.7).abs() < 1e-8);
    let e = (-1.0f64).exp();
    assert!((logsob_envelope_value(0.5f64, e) - 0.5 / (1.0 - e)).abs() < 1e-15);
    assert!((logsob_envelope_value(0.5f64, e) - 0.7910).abs() < 1e-4);
    assert_eq!(nash_envelope_value(10.0f64, 1.0, 0.01, 0.5), 0.0);

    let k: Chain = complete_graph(6).unwrap();
    let est = estimate_logsob(&k, &LogSobolevOptions::default()).unwrap();
    let env = logsob_profile_bound(est.rho_hat, k.pi_star()).unwrap();
    let b = band(&k, EnumerationMode::Connected);
    for &bp in env.breakpoints() {
        assert!(env.value_at(bp).unwrap() <= b.upper.value_at(bp).unwrap() + 1e-9);
    }
}

fn logsob_quotient(c: &Chain, f: &DVector<f64>) -> f64 {
    let pi = c.pi();
    let norm: f64 = (0..c.n()).map(|x| pi[x] * f[x] * f[x]).sum();
    let ent: f64 = (0..c.n())
        .filter(|&x| f[x] != 0.0)
        .map(|x| pi[x] * f[x] * f[x] * (f[x] * f[x] / norm).ln())
        .sum();
    energy_oracle(c, f, f) / ent
}

#[test]
fn logsob_estimates() {
    let two: Chain = Chain::from_rows(&[vec![0.5, 0.5], vec![0.5, 0.5]]).unwrap();
    let est = estimate_logsob(&two, &LogSobolevOptions::default()).unwrap();
    let l1 = spectral_gap(&two).unwrap();
    assert!(est.rho_hat > 0.0 && est.rho_hat <= l1 + 1e-12);

    for seed in 0..3 {
        let r: Chain = random_reversible(5, seed).unwrap();
        let est = estimate_logsob(&r, &LogSobolevOptions::default()).unwrap();
        assert!(est.rho_hat <= spectral_gap(&r).unwrap() / 2.0 + 1e-9);
    }

    let k3: Chain = complete_graph(3).unwrap();
    let est = estimate_logsob(&k3, &LogSobolevOptions::default()).unwrap();
    let steps = 600;
    let mut best = f64::INFINITY;
    for i in 0..=steps {
        for j in 0..=steps - i {
            let f = DVector::from_vec(vec![i as f64, j as f64, (steps - i - j) as f64]);
            if f.max() > f.min() {
                best = best.min(logsob_quotient(&k3, &f));
            }
        }
    }
    assert!(
        (est.rho_hat - best).abs() < 1e-3,
        "{} vs {best}",
        est.rho_hat
    );
}

#[test]
fn gap_sandwich_on_zoo() {
    let chains: Vec<Chain> = vec![
        complete_graph(4).unwrap(),
        complete_graph(10).unwrap(),
        cycle(8, 0.0).unwrap(),
        cycle(16, 0.0).unwrap(),
        cycle(16, 0.5).unwrap(),
    ];
    for c in &chains {
        let b = band(c, EnumerationMode::Connected);
        let l1 = b.lambda1;
        assert!(b.lower.values().iter().all(|&v| v >= l1 - 1e-12));
        assert!(l1 <= b.upper.value_at(0.5).unwrap() + 1e-12);
        assert!(b.lower.value_at(0.5).unwrap() <= 2.0 * l1 + 1e-12);
    }
}

#[test]
fn property_suites() {
    let cfg = SuiteConfig {
        seed: 21,
        chains: 25,
        samples: 1000,
        ..SuiteConfig::default()
    };
    for s in [
        Suite::Abs,
        Suite::Ebound,
        Suite::Cheeger,
        Suite::Envelope,
        Suite::Bracket,
    ] {
        let out = run_suite(s, &cfg).unwrap();
        assert!(out.passed(), "{s}: {:?}", out.violations);
        assert!(out.min_slack >= -1e-12);
    }
}
