mod common;

use common::*;
use nalgebra::DVector;
use spk_core::bounds::{Norm, TimeMode};
use spk_core::exact::{distance_curve, exact_tau, log_grid, lp_distance, DistanceOracle};
use spk_core::zoo::{complete_graph, cycle, random_chain, random_reversible};
use spk_core::{Chain, Error};

const NORMS: [Norm; 3] = [Norm::L1, Norm::L2, Norm::LInf];

fn oracle_distance(h: &[Vec<f64>], pi: &DVector<f64>, p: Norm) -> f64 {
    let n = pi.len();
    (0..n)
        .map(|x| {
            let d = (0..n).map(|y| (h[x][y] / pi[y] - 1.0, pi[y]));
            match p {
                Norm::L1 => d.map(|(e, w)| w * e.abs()).sum(),
                Norm::L2 => d.map(|(e, w)| w * e * e).sum::<f64>().sqrt(),
                Norm::LInf => d.map(|(e, _)| e.abs()).fold(0.0, f64::max),
            }
        })
        .fold(0.0, f64::max)
}

#[test]
fn lp_distance_examples() {
    let pi: DVector<f64> = DVector::from_vec(vec![0.5, 0.25, 0.25]);
    let mu: DVector<f64> = DVector::from_vec(vec![1.0, 0.0, 0.0]);
    assert!((lp_distance(&mu, &pi, &pi, Norm::L1).unwrap() - 1.0).abs() < 1e-15);
    assert!((lp_distance(&mu, &pi, &pi, Norm::L2).unwrap() - 1.0).abs() < 1e-15);
    assert!((lp_distance(&mu, &pi, &pi, Norm::LInf).unwrap() - 1.0).abs() < 1e-15);
    let nu: DVector<f64> = DVector::from_vec(vec![0.0, 0.0, 1.0]);
    assert!((lp_distance(&nu, &pi, &pi, Norm::LInf).unwrap() - 3.0).abs() < 1e-15);
    assert!((lp_distance(&nu, &pi, &pi, Norm::L2).unwrap() - 3f64.sqrt()).abs() < 1e-15);
}

#[test]
fn complete_graph_closed_form() {
    for n in [3usize, 10, 25] {
        let c: Chain = complete_graph(n).unwrap();
        for eps in [0.1, 1.0 / std::f64::consts::E, 1.5] {
            let tau = exact_tau(&c, Norm::LInf, eps, TimeMode::Continuous).unwrap();
            let expect = ((n as f64 - 1.0) / eps).ln();
            assert!(
                (tau.value - expect).abs() < 1e-6 * expect,
                "n {n} eps {eps}"
            );
        }
        let zero = exact_tau(
            &c,
            Norm::LInf,
            (n as f64 - 1.0) * (1.0 + 1e-12),
            TimeMode::Continuous,
        )
        .unwrap();
        assert_eq!(zero.value, 0.0);
        let curve = distance_curve(&c, Norm::LInf, &[0.0, 0.25, 1.0, 4.0]).unwrap();
        for (t, v) in curve.points() {
            assert!((v - (n as f64 - 1.0) * (-t).exp()).abs() < 1e-12 * n as f64);
        }
    }
}

#[test]
fn distances_match_matrix_exponential() {
    let chains: Vec<Chain> = vec![
        cycle(8, 0.0).unwrap(),
        random_reversible(6, 12).unwrap(),
        random_chain(5, 13).unwrap(),
    ];
    for c in &chains {
        let oracle = DistanceOracle::new(c).unwrap();
        for t in [0.0, 0.3, 1.2, 4.0, 9.0] {
            let h = expm_oracle(c.kernel(), t);
            for p in NORMS {
                let lib = oracle.continuous(t, p);
                let ora = oracle_distance(&h, c.pi(), p);
                assert!(
                    (lib - ora).abs() < 1e-9 * ora.max(1.0),
                    "t {t} {p:?}: {lib} vs {ora}"
                );
            }
        }
    }
}

#[test]
fn discrete_distances_match_powers() {
    let chains: Vec<Chain> = vec![
        cycle(7, 0.5).unwrap(),
        random_reversible(5, 2).unwrap(),
        random_chain(5, 3).unwrap(),
    ];
    for c in &chains {
        let oracle = DistanceOracle::new(c).unwrap();
        let k = rows(c.kernel());
        let mut power = identity(c.n());
        for m in 0..25u64 {
            for p in NORMS {
                let lib = oracle.discrete(m, p);
                let ora = oracle_distance(&power, c.pi(), p);
                assert!((lib - ora).abs() < 1e-10 * ora.max(1.0), "m {m} {p:?}");
            }
            power = matmul(&power, &k);
        }
    }
}

#[test]
fn tau_is_first_crossing() {
    let c8: Chain = cycle(8, 0.0).unwrap();
    let eps = 1.0 / std::f64::consts::E;
    let tau = exact_tau(&c8, Norm::LInf, eps, TimeMode::Continuous)
        .unwrap()
        .value;
    assert!(sup_diag_excess(&c8, tau * (1.0 + 1e-6)) <= eps);
    assert!(sup_diag_excess(&c8, tau * (1.0 - 1e-6)) > eps);

    let lazy: Chain = cycle(8, 0.5).unwrap();
    let oracle = DistanceOracle::new(&lazy).unwrap();
    let m = exact_tau(&lazy, Norm::LInf, eps, TimeMode::Discrete)
        .unwrap()
        .value as u64;
    assert!(oracle.discrete(m, Norm::LInf) <= eps);
    assert!(oracle.discrete(m - 1, Norm::LInf) > eps);

    let c: Chain = random_chain(6, 40).unwrap();
    let a = exact_tau(&c, Norm::L1, 0.25, TimeMode::Continuous).unwrap();
    let b = exact_tau(&c, Norm::L2, 0.25, TimeMode::Continuous).unwrap();
    let d = exact_tau(&c, Norm::LInf, 0.25, TimeMode::Continuous).unwrap();
    assert!(a.value <= b.value * (1.0 + 1e-7) && b.value <= d.value * (1.0 + 1e-7));
}

#[test]
fn curve_starts_at_inverse_pi() {
    let c: Chain = random_reversible(6, 3).unwrap();
    let grid = log_grid(1e-3, 10.0, 16);
    let mut times = vec![0.0];
    times.extend(grid);
    let curve = distance_curve(&c, Norm::LInf, &times).unwrap();
    assert!((curve.values[0] - (1.0 / c.pi_star() - 1.0)).abs() < 1e-10);
    assert!(curve.values.windows(2).all(|w| w[1] <= w[0] + 1e-12));
    assert!(distance_curve(&c, Norm::LInf, &[1.0, 0.5]).is_err());
}

#[test]
fn periodic_discrete_chain() {
    let c: Chain = cycle(6, 0.0).unwrap();
    assert!(matches!(
        exact_tau(&c, Norm::LInf, 0.1, TimeMode::Discrete),
        Err(Error::Periodic { period: 2 })
    ));
    assert!(exact_tau(&c, Norm::LInf, 0.1, TimeMode::Continuous).is_ok());
    assert!(exact_tau(&c, Norm::LInf, 0.0, TimeMode::Continuous).is_err());
}
