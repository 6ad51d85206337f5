#![allow(dead_code, clippy::needless_range_loop)]

use nalgebra::{DMatrix, DVector};
use spk_core::Chain;

pub fn rows(m: &DMatrix<f64>) -> Vec<Vec<f64>> {
    (0..m.nrows())
        .map(|i| (0..m.ncols()).map(|j| m[(i, j)]).collect())
        .collect()
}

pub fn matmul(a: &[Vec<f64>], b: &[Vec<f64>]) -> Vec<Vec<f64>> {
    let n = a.len();
    let m = b[0].len();
    let mut c = vec![vec![0.0; m]; n];
    for i in 0..n {
        for k in 0..b.len() {
            let aik = a[i][k];
            for j in 0..m {
                c[i][j] += aik * b[k][j];
            }
        }
    }
    c
}

pub fn identity(n: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect()
}

pub fn max_abs_diff(a: &[Vec<f64>], b: &DMatrix<f64>) -> f64 {
    let mut d: f64 = 0.0;
    for (i, row) in a.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            d = d.max((v - b[(i, j)]).abs());
        }
    }
    d
}

/// Cyclic Jacobi rotations; eigenvalues ascending.
pub fn jacobi_eigenvalues(mut a: Vec<Vec<f64>>) -> Vec<f64> {
    let n = a.len();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    off += a[i][j] * a[i][j];
                }
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in p + 1..n {
                if a[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * a[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k][p];
                    let akq = a[k][q];
                    a[k][p] = c * akp - s * akq;
                    a[k][q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p][k];
                    let aqk = a[q][k];
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    ev.sort_by(|x, y| x.total_cmp(y));
    ev
}

/// `D^{1/2} (I - K_S)_sym D^{-1/2}` formed entry by entry from the kernel.
pub fn dirichlet_operator(chain: &Chain, members: &[usize]) -> Vec<Vec<f64>> {
    let k = chain.kernel();
    let pi = chain.pi();
    members
        .iter()
        .map(|&x| {
            members
                .iter()
                .map(|&y| {
                    let q = 0.5 * (pi[x] * k[(x, y)] + pi[y] * k[(y, x)]);
                    let id = if x == y { 1.0 } else { 0.0 };
                    id - q / (pi[x] * pi[y]).sqrt()
                })
                .collect()
        })
        .collect()
}

pub fn lambda0_oracle(chain: &Chain, members: &[usize]) -> f64 {
    jacobi_eigenvalues(dirichlet_operator(chain, members))[0]
}

pub fn gap_oracle(chain: &Chain) -> f64 {
    let all: Vec<usize> = (0..chain.n()).collect();
    jacobi_eigenvalues(dirichlet_operator(chain, &all))[1]
}

/// `e^{t(K - I)}` by scaling and squaring of a Taylor series.
pub fn expm_oracle(k: &DMatrix<f64>, t: f64) -> Vec<Vec<f64>> {
    let n = k.nrows();
    let mut squarings = 0;
    let mut scale = t;
    while scale > 0.25 {
        scale /= 2.0;
        squarings += 1;
    }
    let a: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..n)
                .map(|j| scale * (k[(i, j)] - if i == j { 1.0 } else { 0.0 }))
                .collect()
        })
        .collect();
    let mut sum = identity(n);
    let mut term = identity(n);
    for m in 1..30 {
        term = matmul(&term, &a);
        for row in term.iter_mut() {
            for v in row.iter_mut() {
                *v /= m as f64;
            }
        }
        for i in 0..n {
            for j in 0..n {
                sum[i][j] += term[i][j];
            }
        }
    }
    for _ in 0..squarings {
        sum = matmul(&sum, &sum);
    }
    sum
}

/// `(1/2) sum_{x,y} (f(x) - f(y))(g(x) - g(y)) pi(x) K(x, y)`.
pub fn energy_oracle(chain: &Chain, f: &DVector<f64>, g: &DVector<f64>) -> f64 {
    let k = chain.kernel();
    let pi = chain.pi();
    let n = chain.n();
    let mut s = 0.0;
    for x in 0..n {
        for y in 0..n {
            s += (f[x] - f[y]) * (g[x] - g[y]) * pi[x] * k[(x, y)];
        }
    }
    0.5 * s
}

pub fn adaptive_simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64, tol: f64) -> f64 {
    fn simpson(f: &dyn Fn(f64) -> f64, a: f64, b: f64) -> f64 {
        (b - a) / 6.0 * (f(a) + 4.0 * f(0.5 * (a + b)) + f(b))
    }
    fn rec(f: &dyn Fn(f64) -> f64, a: f64, b: f64, whole: f64, tol: f64, depth: u32) -> f64 {
        let m = 0.5 * (a + b);
        let l = simpson(f, a, m);
        let r = simpson(f, m, b);
        if depth == 0 || (l + r - whole).abs() <= 15.0 * tol {
            return l + r + (l + r - whole) / 15.0;
        }
        rec(f, a, m, l, tol / 2.0, depth - 1) + rec(f, m, b, r, tol / 2.0, depth - 1)
    }
    rec(f, a, b, simpson(f, a, b), tol, 50)
}

/// Members of a bit mask.
pub fn members(mask: u64, n: usize) -> Vec<usize> {
    (0..n).filter(|&i| mask >> i & 1 == 1).collect()
}

/// `|dS| / pi(S)` summed directly.
pub fn conductance_of(chain: &Chain, set: &[usize]) -> f64 {
    let n = chain.n();
    let k = chain.kernel();
    let pi = chain.pi();
    let inside: Vec<bool> = (0..n).map(|x| set.contains(&x)).collect();
    let mut flow = 0.0;
    let mut mass = 0.0;
    for &x in set {
        mass += pi[x];
        for y in 0..n {
            if !inside[y] {
                flow += pi[x] * k[(x, y)];
            }
        }
    }
    flow / mass
}

/// Brute-force `(mass, min lambda_0)` over every proper subset with mass at most `r`.
pub fn brute_dirichlet_profile(chain: &Chain, r: f64) -> f64 {
    let n = chain.n();
    let mut best = f64::INFINITY;
    for mask in 1..(1u64 << n) - 1 {
        let m = members(mask, n);
        let mass: f64 = m.iter().map(|&x| chain.pi()[x]).sum();
        if mass <= r * (1.0 + 1e-12) {
            best = best.min(lambda0_oracle(chain, &m));
        }
    }
    best
}

/// `max_x (H_t(x, x) / pi(x)) - 1` from the oracle exponential.
pub fn sup_diag_excess(chain: &Chain, t: f64) -> f64 {
    let h = expm_oracle(chain.kernel(), t);
    (0..chain.n())
        .map(|x| h[x][x] / chain.pi()[x] - 1.0)
        .fold(f64::NEG_INFINITY, f64::max)
}
