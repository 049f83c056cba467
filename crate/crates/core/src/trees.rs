//! Exact tree counting: Prüfer enumeration with predicates, oriented
//! source/sink trees, the Kirchhoff polynomial and weighted matrix-tree
//! theorem, spanning-tree counts by Laplacian cofactors, and the d=1
//! tree-sum closed form.

use crate::la::Mat;
use crate::poly::{MPoly, Monomial};
use crate::scalar::{factorial, Rat};
use crate::series::{Series, SeriesError};
use num_bigint::BigInt;
use num_traits::{One, ToPrimitive, Zero};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum TreeError {
    #[error("enumeration budget exceeded (n = {0})")]
    Budget(usize),
    #[error("series error: {0}")]
    Series(#[from] SeriesError),
    #[error("h'(0) must be nonzero")]
    BadPotential,
}

/// Visit every labeled tree on n >= 1 vertices as an edge list, by decoding
/// all Prüfer sequences. n = 1 yields the single empty tree; n = 2 the
/// single edge.
pub fn for_each_labeled_tree<F: FnMut(&[(usize, usize)])>(n: usize, mut f: F) -> Result<(), TreeError> {
    if n > 9 {
        return Err(TreeError::Budget(n));
    }
    if n == 1 {
        f(&[]);
        return Ok(());
    }
    if n == 2 {
        f(&[(0, 1)]);
        return Ok(());
    }
    let len = n - 2;
    let mut seq = vec![0usize; len];
    let mut edges = Vec::with_capacity(n - 1);
    loop {
        decode_pruefer(&seq, n, &mut edges);
        f(&edges);
        // odometer over sequences
        let mut pos = len;
        loop {
            if pos == 0 {
                return Ok(());
            }
            pos -= 1;
            seq[pos] += 1;
            if seq[pos] < n {
                break;
            }
            seq[pos] = 0;
        }
    }
}

fn decode_pruefer(seq: &[usize], n: usize, edges: &mut Vec<(usize, usize)>) {
    edges.clear();
    let mut degree = vec![1usize; n];
    for &s in seq {
        degree[s] += 1;
    }
    let mut used = vec![false; n];
    for &s in seq {
        // smallest unused leaf
        let leaf = (0..n).find(|&v| degree[v] == 1 && !used[v]).unwrap();
        used[leaf] = true;
        edges.push((leaf.min(s), leaf.max(s)));
        degree[s] -= 1;
        degree[leaf] -= 1;
    }
    let rest: Vec<usize> = (0..n).filter(|&v| degree[v] == 1 && !used[v]).collect();
    edges.push((rest[0], rest[1]));
}

/// Count labeled trees whose vertex valencies all lie in `allowed`
/// (empty slice = no filter).
pub fn count_labeled_trees(n: usize, allowed: &[usize]) -> Result<BigInt, TreeError> {
    let mut count = BigInt::zero();
    for_each_labeled_tree(n, |edges| {
        if allowed.is_empty() {
            count += 1u8;
            return;
        }
        let mut deg = vec![0usize; n];
        for &(a, b) in edges {
            deg[a] += 1;
            deg[b] += 1;
        }
        if n == 1 {
            // the single vertex has valency 0
            if allowed.contains(&0) {
                count += 1u8;
            }
            return;
        }
        if deg.iter().all(|d| allowed.contains(d)) {
            count += 1u8;
        }
    })?;
    Ok(count)
}

/// Labeled oriented trees with p sources and q sinks (every vertex pure):
/// closed form p^{q-1} q^{p-1} (p+q)!/(p! q!). The `fixed` variant pins
/// vertices 1..p as the sources.
pub fn oriented_tree_count(p: usize, q: usize, fixed_sources: bool) -> BigInt {
    let base = BigInt::from(p as u64).pow(q as u32 - 1) * BigInt::from(q as u64).pow(p as u32 - 1);
    if fixed_sources {
        base
    } else {
        base * factorial(p + q) / (factorial(p) * factorial(q))
    }
}

/// Enumeration oracle: trees on p+q labeled vertices, bipartite between the
/// chosen source set and its complement (every edge joins a source and a
/// sink). `fixed` counts only sources = {0..p}.
pub fn oriented_tree_enumerate(p: usize, q: usize, fixed_sources: bool) -> Result<BigInt, TreeError> {
    let n = p + q;
    if n > 8 {
        return Err(TreeError::Budget(n));
    }
    let subsets: Vec<Vec<bool>> = if fixed_sources {
        vec![(0..n).map(|v| v < p).collect()]
    } else {
        // all subsets of size p
        let mut out = Vec::new();
        for mask in 0u32..(1 << n) {
            if mask.count_ones() as usize == p {
                out.push((0..n).map(|v| mask & (1 << v) != 0).collect());
            }
        }
        out
    };
    let mut total = BigInt::zero();
    for is_source in &subsets {
        let mut count = 0u64;
        for_each_labeled_tree(n, |edges| {
            if edges.iter().all(|&(a, b)| is_source[a] != is_source[b]) {
                count += 1;
            }
        })?;
        total += count;
    }
    Ok(total)
}

/// Kirchhoff polynomial K_m: any principal cofactor of the weighted
/// Laplacian over the variables u_{ik}, i < k (with u symmetric).
pub fn kirchhoff_polynomial(m: usize, removed: usize) -> MPoly {
    assert!(m >= 1 && removed < m);
    let var = |i: usize, k: usize| -> MPoly {
        let (a, b) = (i.min(k) + 1, i.max(k) + 1);
        MPoly::var(&format!("u{}{}", a, b))
    };
    // reduced Laplacian with row/column `removed` deleted
    let keep: Vec<usize> = (0..m).filter(|&v| v != removed).collect();
    let size = keep.len();
    let mut entries: Vec<Vec<MPoly>> = vec![vec![MPoly::zero(); size]; size];
    for (ri, &i) in keep.iter().enumerate() {
        for (ci, &k) in keep.iter().enumerate() {
            if i == k {
                let mut acc = MPoly::zero();
                for l in 0..m {
                    if l != i {
                        acc = acc.add(&var(i, l));
                    }
                }
                entries[ri][ci] = acc;
            } else {
                entries[ri][ci] = var(i, k).neg();
            }
        }
    }
    mpoly_det(&entries)
}

fn mpoly_det(m: &[Vec<MPoly>]) -> MPoly {
    let n = m.len();
    if n == 0 {
        return MPoly::constant(Rat::one());
    }
    if n == 1 {
        return m[0][0].clone();
    }
    // cofactor expansion along the first row
    let mut acc = MPoly::zero();
    for j in 0..n {
        if m[0][j].is_zero() {
            continue;
        }
        let minor: Vec<Vec<MPoly>> = (1..n)
            .map(|r| (0..n).filter(|&c| c != j).map(|c| m[r][c].clone()).collect())
            .collect();
        let term = m[0][j].mul(&mpoly_det(&minor));
        acc = if j % 2 == 0 { acc.add(&term) } else { acc.sub(&term) };
    }
    acc
}

/// The colored tree generating polynomial
/// Q_p(z) = (p_1...p_m)^{-1} K(p_k z_{kl} p_l) prod_l (sum_k p_k z_{kl})^{p_l - 1},
/// where z_{kl} are symmetric variables (diagonal included).
pub fn colored_tree_generating(p: &[usize]) -> MPoly {
    let m = p.len();
    let zvar = |i: usize, k: usize| -> MPoly {
        let (a, b) = (i.min(k) + 1, i.max(k) + 1);
        MPoly::var(&format!("z{}{}", a, b))
    };
    // K evaluated at u_{ik} = p_i z_{ik} p_k: build the reduced Laplacian
    // with those entries directly (remove the last row/column).
    let k_poly = if m == 1 {
        MPoly::constant(Rat::one())
    } else {
        let keep: Vec<usize> = (0..m - 1).collect();
        let size = keep.len();
        let mut entries: Vec<Vec<MPoly>> = vec![vec![MPoly::zero(); size]; size];
        let weighted = |i: usize, k: usize| -> MPoly {
            zvar(i, k).scale(&Rat::from_integer(BigInt::from((p[i] * p[k]) as u64)))
        };
        for (ri, &i) in keep.iter().enumerate() {
            for (ci, &k) in keep.iter().enumerate() {
                if i == k {
                    let mut acc = MPoly::zero();
                    for l in 0..m {
                        if l != i {
                            acc = acc.add(&weighted(i, l));
                        }
                    }
                    entries[ri][ci] = acc;
                } else {
                    entries[ri][ci] = weighted(i, k).neg();
                }
            }
        }
        mpoly_det(&entries)
    };
    let mut acc = k_poly;
    for l in 0..m {
        let mut row = MPoly::zero();
        for k in 0..m {
            row = row.add(&zvar(k, l).scale(&Rat::from_integer(BigInt::from(p[k] as u64))));
        }
        acc = acc.mul(&row.pow(p[l] as u32 - 1));
    }
    let denom = Rat::from_integer(p.iter().map(|&x| BigInt::from(x as u64)).product::<BigInt>());
    acc.scale(&denom.recip())
}

/// Enumeration oracle for Q_p: sum over colored labeled trees of
/// prod z_{c(i) c(j)} over edges.
pub fn colored_tree_enumerate(p: &[usize]) -> Result<MPoly, TreeError> {
    let n: usize = p.iter().sum();
    if n > 7 {
        return Err(TreeError::Budget(n));
    }
    let mut color = Vec::with_capacity(n);
    for (c, &cnt) in p.iter().enumerate() {
        for _ in 0..cnt {
            color.push(c);
        }
    }
    let mut acc = MPoly::zero();
    for_each_labeled_tree(n, |edges| {
        let mut mono = Monomial::new();
        for &(a, b) in edges {
            let (i, k) = (color[a].min(color[b]) + 1, color[a].max(color[b]) + 1);
            *mono.entry(format!("z{}{}", i, k)).or_insert(0) += 1;
        }
        acc.add_term(mono, Rat::one());
    })?;
    Ok(acc)
}

/// Number of spanning trees of a simple graph (no self-loops), as any
/// principal cofactor of the integer Laplacian, computed exactly.
pub fn spanning_tree_count(adjacency: &[Vec<u32>]) -> BigInt {
    let m = adjacency.len();
    if m == 0 {
        return BigInt::zero();
    }
    if m == 1 {
        return BigInt::one();
    }
    let mut lap = Mat::<Rat>::zeros(m - 1, m - 1);
    for i in 0..m - 1 {
        for j in 0..m - 1 {
            if i == j {
                let deg: u32 = adjacency[i].iter().sum();
                lap.set(i, j, Rat::from_integer(BigInt::from(deg)));
            } else {
                lap.set(i, j, -Rat::from_integer(BigInt::from(adjacency[i][j])));
            }
        }
    }
    let det = lap.det();
    assert!(det.denom().is_one());
    det.numer().clone()
}

/// Deletion-contraction oracle for spanning tree counts (test sizes only).
pub fn spanning_tree_count_dc(adjacency: &[Vec<u32>]) -> BigInt {
    let m = adjacency.len();
    // find an edge
    let mut edge = None;
    'outer: for i in 0..m {
        for j in i + 1..m {
            if adjacency[i][j] > 0 {
                edge = Some((i, j));
                break 'outer;
            }
        }
    }
    let (i, j) = match edge {
        None => {
            return if m <= 1 { BigInt::one() } else { BigInt::zero() };
        }
        Some(e) => e,
    };
    // delete
    let mut del = adjacency.to_vec();
    let mult = BigInt::from(del[i][j]);
    del[i][j] = 0;
    del[j][i] = 0;
    // contract: merge j into i, dropping the loops this creates
    let keep: Vec<usize> = (0..m).filter(|&v| v != j).collect();
    let merged = |v: usize| if v == j { i } else { v };
    let mut con = vec![vec![0u32; m - 1]; m - 1];
    for x in 0..m {
        for y in x + 1..m {
            let (a, b) = (merged(x), merged(y));
            if a == b {
                continue;
            }
            let ai = keep.iter().position(|&k| k == a).unwrap();
            let bi = keep.iter().position(|&k| k == b).unwrap();
            con[ai][bi] += adjacency[x][y];
            con[bi][ai] += adjacency[x][y];
        }
    }
    spanning_tree_count_dc(&del) + mult * spanning_tree_count_dc(&con)
}

/// F(g) = int_0^g h(f(a)) da with f the reversion of x/h'(x): the tree sum
/// for the action x^2/2 - g h(x).
pub fn tree_sum_closed_form(h: &Series<Rat>, max_degree: usize) -> Result<Series<Rat>, TreeError> {
    let order = (max_degree + 2) as isize;
    let hp = h.truncate(order).derivative();
    if hp.coeff(0).is_zero() {
        return Err(TreeError::BadPotential);
    }
    // y = x / h'(x)
    let y = Series::x("x", order).div(&hp)?;
    let f = y.reversion()?; // x as a series in y = g
    let integrand = h.truncate(order).compose(&f)?;
    Ok(integrand.integrate()?.truncate(max_degree as isize + 1))
}
