//! Example chains: complete graphs, cycles, Viscek trees, discrete tori, random chains.

use crate::{Error, MarkovChain, Real, Result};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::{BTreeMap, VecDeque};

/// Default vertex cap for generated chains.
pub const SIZE_CAP: usize = 2000;

/// `K(x, y) = 1/n` for all `x, y`.
pub fn complete_graph<T: Real>(n: usize) -> Result<MarkovChain<T>> {
    if n < 2 {
        return Err(Error::InvalidParameter(format!(
            "complete graph needs n >= 2, got {n}"
        )));
    }
    let w = T::one() / T::from_usize_lossy(n);
    MarkovChain::with_stationary(DMatrix::from_element(n, n, w), DVector::from_element(n, w))
}

/// Simple random walk on the n-cycle, holding with probability `lazy`.
pub fn cycle<T: Real>(n: usize, lazy: f64) -> Result<MarkovChain<T>> {
    if n < 3 {
        return Err(Error::InvalidParameter(format!(
            "cycle needs n >= 3, got {n}"
        )));
    }
    if !(0.0..1.0).contains(&lazy) {
        return Err(Error::AlphaOutOfRange(lazy));
    }
    let step = T::lit((1.0 - lazy) / 2.0);
    let mut k = DMatrix::zeros(n, n);
    for i in 0..n {
        k[(i, (i + 1) % n)] += step;
        k[(i, (i + n - 1) % n)] += step;
        k[(i, i)] += T::lit(lazy);
    }
    MarkovChain::with_stationary(
        k,
        DVector::from_element(n, T::one() / T::from_usize_lossy(n)),
    )
}

/// Walk on `Z_a x Z_b` with steps `(+-1, 0), (0, +-1)`; state `(i, j)` is `i * b + j`.
pub fn torus_product<T: Real>(a: usize, b: usize) -> Result<MarkovChain<T>> {
    if a < 3 || b < 3 {
        return Err(Error::DegenerateGenerators { a, b });
    }
    let n = a * b;
    if n > SIZE_CAP {
        return Err(Error::SizeCap {
            vertices: n,
            cap: SIZE_CAP,
        });
    }
    let q = T::lit(0.25);
    let mut k = DMatrix::zeros(n, n);
    for i in 0..a {
        for j in 0..b {
            let x = i * b + j;
            for y in [
                ((i + 1) % a) * b + j,
                ((i + a - 1) % a) * b + j,
                i * b + (j + 1) % b,
                i * b + (j + b - 1) % b,
            ] {
                k[(x, y)] += q;
            }
        }
    }
    MarkovChain::with_stationary(
        k,
        DVector::from_element(n, T::one() / T::from_usize_lossy(n)),
    )
}

/// A copy of a lower generation inside a Viscek graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Block {
    pub vertices: Vec<usize>,
    pub corners: Vec<usize>,
    pub center: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViscekGraph {
    pub branching: usize,
    pub generation: usize,
    pub n_vertices: usize,
    pub edges: Vec<(usize, usize)>,
    pub corners: Vec<usize>,
    pub center: usize,
    /// `(level, id) -> block`; level-`k` blocks are copies of generation `k`.
    pub blocks: BTreeMap<(usize, usize), Block>,
}

impl ViscekGraph {
    pub fn adjacency(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.n_vertices];
        for &(x, y) in &self.edges {
            adj[x].push(y);
            adj[y].push(x);
        }
        for a in &mut adj {
            a.sort_unstable();
        }
        adj
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.n_vertices];
        for &(x, y) in &self.edges {
            d[x] += 1;
            d[y] += 1;
        }
        d
    }

    pub fn block(&self, level: usize, id: usize) -> Result<&Block> {
        self.blocks.get(&(level, id)).ok_or_else(|| {
            Error::InvalidBlock(format!(
                "no block ({level}, {id}) in generation {}",
                self.generation
            ))
        })
    }

    /// Number of blocks of a level.
    pub fn block_count(&self, level: usize) -> usize {
        if level > self.generation {
            0
        } else {
            (self.branching + 1).pow((self.generation - level) as u32)
        }
    }

    /// `log_3(N + 1)`.
    pub fn dimension(&self) -> f64 {
        ((self.branching + 1) as f64).ln() / 3f64.ln()
    }

    pub fn diameter(&self) -> usize {
        2 * 3usize.pow(self.generation as u32)
    }
}

fn viscek_graph(branching: usize, generation: usize) -> ViscekGraph {
    let nb = branching;
    let mut g = ViscekGraph {
        branching: nb,
        generation: 0,
        n_vertices: nb + 1,
        edges: (1..=nb).map(|i| (0, i)).collect(),
        corners: (1..=nb).collect(),
        center: 0,
        blocks: BTreeMap::from([(
            (0, 0),
            Block {
                vertices: (0..=nb).collect(),
                corners: (1..=nb).collect(),
                center: 0,
            },
        )]),
    };
    for gen in 1..=generation {
        let v = g.n_vertices;
        let mut maps: Vec<Vec<usize>> = vec![(0..v).collect()];
        let mut next = v;
        for i in 1..=nb {
            let glue = g.corners[i - 1];
            let map: Vec<usize> = (0..v)
                .map(|x| {
                    if x == glue {
                        glue
                    } else {
                        next += 1;
                        next - 1
                    }
                })
                .collect();
            maps.push(map);
        }
        let mut edges = Vec::with_capacity(g.edges.len() * (nb + 1));
        let mut blocks = BTreeMap::new();
        for (c, map) in maps.iter().enumerate() {
            edges.extend(g.edges.iter().map(|&(x, y)| (map[x], map[y])));
            for (&(level, id), b) in &g.blocks {
                let count = (nb + 1).pow((gen - 1 - level) as u32);
                let mut vertices: Vec<usize> = b.vertices.iter().map(|&x| map[x]).collect();
                vertices.sort_unstable();
                blocks.insert(
                    (level, c * count + id),
                    Block {
                        vertices,
                        corners: b.corners.iter().map(|&x| map[x]).collect(),
                        center: map[b.center],
                    },
                );
            }
        }
        let corners: Vec<usize> = (1..=nb)
            .map(|i| {
                let j = if i != 1 { 1 } else { 2 };
                maps[i][g.corners[j - 1]]
            })
            .collect();
        blocks.insert(
            (gen, 0),
            Block {
                vertices: (0..next).collect(),
                corners: corners.clone(),
                center: g.center,
            },
        );
        g = ViscekGraph {
            branching: nb,
            generation: gen,
            n_vertices: next,
            edges,
            corners,
            center: g.center,
            blocks,
        };
    }
    g
}

/// Viscek tree `V_N(n)` and its simple random walk.
pub fn viscek<T: Real>(
    branching: usize,
    generation: usize,
    cap: usize,
) -> Result<(ViscekGraph, MarkovChain<T>)> {
    if branching < 2 {
        return Err(Error::InvalidParameter(format!(
            "Viscek graphs need N >= 2, got {branching}"
        )));
    }
    let vertices = (branching as u128)
        .checked_mul(
            (branching as u128 + 1)
                .checked_pow(generation as u32)
                .unwrap_or(u128::MAX),
        )
        .map(|v| v.saturating_add(1))
        .unwrap_or(u128::MAX);
    if vertices > cap as u128 {
        return Err(Error::SizeCap {
            vertices: vertices.min(usize::MAX as u128) as usize,
            cap,
        });
    }
    let g = viscek_graph(branching, generation);
    let deg = g.degrees();
    let n = g.n_vertices;
    let mut k = DMatrix::zeros(n, n);
    for &(x, y) in &g.edges {
        k[(x, y)] = T::one() / T::from_usize_lossy(deg[x]);
        k[(y, x)] = T::one() / T::from_usize_lossy(deg[y]);
    }
    let two_e = T::from_usize_lossy(2 * g.edges.len());
    let pi = DVector::from_fn(n, |x, _| T::from_usize_lossy(deg[x]) / two_e);
    let chain = MarkovChain::with_stationary(k, pi)?;
    Ok((g, chain))
}

/// Tent function on a block and its Rayleigh data.
#[derive(Debug, Clone, PartialEq)]
pub struct ViscekTestFunction<T: Real> {
    pub f: DVector<T>,
    pub energy: T,
    pub norm2: T,
    pub variance: T,
    /// `energy / variance`, an upper bound on `lambda(block)`.
    pub quotient: T,
    /// `pi(block)`.
    pub mass: T,
}

pub fn viscek_test_function<T: Real>(
    graph: &ViscekGraph,
    chain: &MarkovChain<T>,
    level: usize,
    id: usize,
) -> Result<ViscekTestFunction<T>> {
    if chain.n() != graph.n_vertices {
        return Err(Error::DimensionMismatch {
            expected: graph.n_vertices,
            found: chain.n(),
        });
    }
    let block = graph.block(level, id)?;
    let n = graph.n_vertices;
    let adj = graph.adjacency();
    let mut inside = vec![false; n];
    for &x in &block.vertices {
        inside[x] = true;
    }
    let mut parent = vec![usize::MAX; n];
    let mut dist = vec![usize::MAX; n];
    dist[block.center] = 0;
    let mut queue = VecDeque::from([block.center]);
    while let Some(x) = queue.pop_front() {
        for &y in &adj[x] {
            if inside[y] && dist[y] == usize::MAX {
                dist[y] = dist[x] + 1;
                parent[y] = x;
                queue.push_back(y);
            }
        }
    }
    let scale = T::from_usize_lossy(3usize.pow(level as u32));
    let mut value: Vec<Option<T>> = vec![None; n];
    for &c in &block.corners {
        let mut x = c;
        loop {
            value[x] = Some(T::one() - T::from_usize_lossy(dist[x]) / scale);
            if x == block.center {
                break;
            }
            x = parent[x];
        }
    }
    let mut queue: VecDeque<usize> = block
        .vertices
        .iter()
        .copied()
        .filter(|&x| value[x].is_some())
        .collect();
    while let Some(x) = queue.pop_front() {
        for &y in &adj[x] {
            if inside[y] && value[y].is_none() {
                value[y] = value[x];
                queue.push_back(y);
            }
        }
    }
    let f = DVector::from_fn(n, |x, _| value[x].unwrap_or_else(T::zero));
    let energy = chain.energy(&f)?;
    let norm2 = chain.inner(&f, &f);
    let variance = chain.variance(&f);
    let mass = block
        .vertices
        .iter()
        .fold(T::zero(), |a, &x| a + chain.pi()[x]);
    Ok(ViscekTestFunction {
        quotient: energy / variance,
        f,
        energy,
        norm2,
        variance,
        mass,
    })
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random reversible chain: random symmetric weights on a connected support.
pub fn random_reversible<T: Real>(n: usize, seed: u64) -> Result<MarkovChain<T>> {
    if n < 2 {
        return Err(Error::InvalidParameter("random chain needs n >= 2".into()));
    }
    let mut r = rng(seed);
    let mut w = DMatrix::<f64>::zeros(n, n);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut r);
    for i in 1..n {
        let (x, y) = (order[i], order[r.random_range(0..i)]);
        let v = r.random_range(0.1..1.0);
        w[(x, y)] = v;
        w[(y, x)] = v;
    }
    for x in 0..n {
        for y in x..n {
            if r.random_bool(0.4) {
                let v = r.random_range(0.05..1.0);
                w[(x, y)] = v;
                w[(y, x)] = v;
            }
        }
    }
    let deg: Vec<f64> = (0..n).map(|x| w.row(x).sum()).collect();
    let total: f64 = deg.iter().sum();
    let k = DMatrix::from_fn(n, n, |x, y| T::lit(w[(x, y)] / deg[x]));
    let pi = DVector::from_fn(n, |x, _| T::lit(deg[x] / total));
    MarkovChain::with_stationary(k, pi)
}

/// Random irreducible chain, generally non-reversible.
pub fn random_chain<T: Real>(n: usize, seed: u64) -> Result<MarkovChain<T>> {
    if n < 2 {
        return Err(Error::InvalidParameter("random chain needs n >= 2".into()));
    }
    let mut r = rng(seed);
    let mut m = DMatrix::<f64>::zeros(n, n);
    for x in 0..n {
        m[(x, (x + 1) % n)] = r.random_range(0.1..1.0);
        for y in 0..n {
            if r.random_bool(0.5) {
                m[(x, y)] += r.random_range(0.0..1.0);
            }
        }
    }
    let k = DMatrix::from_fn(n, n, |x, y| T::lit(m[(x, y)] / m.row(x).sum()));
    MarkovChain::new(k)
}

/// Random doubly-stochastic chain (uniform stationary law).
pub fn random_doubly_stochastic<T: Real>(n: usize, seed: u64) -> Result<MarkovChain<T>> {
    if n < 2 {
        return Err(Error::InvalidParameter("random chain needs n >= 2".into()));
    }
    let mut r = rng(seed);
    let mut m = DMatrix::<f64>::zeros(n, n);
    let mut weights = vec![r.random_range(0.1..1.0)];
    let mut perms = vec![(0..n).map(|i| (i + 1) % n).collect::<Vec<_>>()];
    for _ in 0..n {
        let mut p: Vec<usize> = (0..n).collect();
        p.shuffle(&mut r);
        perms.push(p);
        weights.push(r.random_range(0.0..1.0));
    }
    let total: f64 = weights.iter().sum();
    for (p, w) in perms.iter().zip(&weights) {
        for (x, &y) in p.iter().enumerate() {
            m[(x, y)] += w / total;
        }
    }
    let k = DMatrix::from_fn(n, n, |x, y| T::lit(m[(x, y)]));
    MarkovChain::with_stationary(
        k,
        DVector::from_element(n, T::one() / T::from_usize_lossy(n)),
    )
}
