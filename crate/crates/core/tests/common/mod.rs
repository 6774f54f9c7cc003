//! Independent reference implementations used as test oracles.
#![allow(dead_code)]

use std::collections::{BTreeMap, HashMap, HashSet};

use randcomplex::complex::{Complex, Simplex};

/// Faces of a vertex list, i-th entry drops the i-th vertex.
pub fn drop_each(vs: &[u32]) -> Vec<Vec<u32>> {
    (0..vs.len())
        .map(|i| vs.iter().enumerate().filter(|&(j, _)| j != i).map(|(_, &v)| v).collect())
        .collect()
}

/// All `k`-subsets of `0..n`, lexicographic.
pub fn subsets(n: u32, k: usize) -> Vec<Vec<u32>> {
    fn rec(start: u32, n: u32, k: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if cur.len() == k {
            out.push(cur.clone());
            return;
        }
        for v in start..n {
            cur.push(v);
            rec(v + 1, n, k, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, k, &mut Vec::new(), &mut out);
    out
}

/// Rank mod `p` of the dense matrix `rows`, by textbook elimination in `u64`.
pub fn dense_rank(mut rows: Vec<Vec<u64>>, p: u64) -> usize {
    let ncols = rows.first().map_or(0, Vec::len);
    let mut rank = 0;
    for col in 0..ncols {
        let Some(piv) = (rank..rows.len()).find(|&r| !rows[r][col].is_multiple_of(p)) else {
            continue;
        };
        rows.swap(rank, piv);
        let inv = pow_mod(rows[rank][col] % p, p - 2, p);
        for r in 0..rows.len() {
            if r != rank && !rows[r][col].is_multiple_of(p) {
                let f = rows[r][col] % p * inv % p;
                for c in col..ncols {
                    let sub = f * rows[rank][c] % p;
                    rows[r][c] = (rows[r][c] % p + p - sub) % p;
                }
            }
        }
        rank += 1;
    }
    rank
}

pub fn pow_mod(mut b: u64, mut e: u64, p: u64) -> u64 {
    let mut acc = 1 % p;
    while e > 0 {
        if e & 1 == 1 {
            acc = acc * b % p;
        }
        b = b * b % p;
        e >>= 1;
    }
    acc
}

/// Rank of `∂_d` over F_p with rows indexed by simplices and columns by all `C(n, d)` faces.
pub fn boundary_rank_oracle(y: &Complex, p: u64) -> usize {
    let faces = subsets(y.n(), y.d());
    let index: HashMap<&[u32], usize> = faces.iter().enumerate().map(|(i, f)| (f.as_slice(), i)).collect();
    let rows = y
        .iter()
        .map(|s| {
            let mut row = vec![0u64; faces.len()];
            for (i, f) in drop_each(s.vertices()).iter().enumerate() {
                row[index[f.as_slice()]] = if i % 2 == 0 { 1 } else { p - 1 };
            }
            row
        })
        .collect();
    dense_rank(rows, p)
}

/// Face degrees by brute counting.
pub fn degrees(simplices: &[Vec<u32>]) -> BTreeMap<Vec<u32>, u32> {
    let mut deg = BTreeMap::new();
    for s in simplices {
        for f in drop_each(s) {
            *deg.entry(f).or_insert(0) += 1;
        }
    }
    deg
}

/// Core by repeated full recomputation of degrees.
pub fn naive_core(y: &Complex) -> (Vec<Vec<u32>>, usize) {
    let mut cur: Vec<Vec<u32>> = y.iter().map(|s| s.vertices().to_vec()).collect();
    let mut rounds = 0;
    loop {
        let deg = degrees(&cur);
        let next: Vec<Vec<u32>> = cur
            .iter()
            .filter(|s| drop_each(s).iter().all(|f| deg[f] != 1))
            .cloned()
            .collect();
        if next.len() == cur.len() {
            return (cur, rounds);
        }
        cur = next;
        rounds += 1;
    }
}

/// Every terminal complex reachable by removing one free face (with its simplex) at a time.
/// Simplices are addressed by bit position in `y.simplices()`.
pub fn all_peel_outcomes(y: &Complex) -> HashSet<u64> {
    assert!(y.f_d() <= 64);
    let simplices: Vec<Vec<u32>> = y.iter().map(|s| s.vertices().to_vec()).collect();
    let mut seen = HashSet::new();
    let mut terminal = HashSet::new();
    let mut stack = vec![mask(y.f_d())];
    while let Some(state) = stack.pop() {
        if !seen.insert(state) {
            continue;
        }
        let alive: Vec<Vec<u32>> = (0..simplices.len())
            .filter(|&i| state >> i & 1 == 1)
            .map(|i| simplices[i].clone())
            .collect();
        let deg = degrees(&alive);
        let mut moves = Vec::new();
        for i in 0..simplices.len() {
            if state >> i & 1 == 1 && drop_each(&simplices[i]).iter().any(|f| deg[f] == 1) {
                moves.push(state & !(1 << i));
            }
        }
        if moves.is_empty() {
            terminal.insert(state);
        }
        stack.extend(moves);
    }
    terminal
}

fn mask(bits: usize) -> u64 {
    if bits == 64 {
        u64::MAX
    } else {
        (1u64 << bits) - 1
    }
}

pub fn bits_of(y: &Complex, sub: &Complex) -> u64 {
    y.iter()
        .enumerate()
        .filter(|(_, s)| sub.contains(s))
        .fold(0, |acc, (i, _)| acc | 1 << i)
}

/// Vertex sets of `∂Δ_{d+1}` copies, by scanning every `(d+2)`-subset of `[n]`.
pub fn brute_boundaries(y: &Complex) -> Vec<Vec<u32>> {
    subsets(y.n(), y.d() + 2)
        .into_iter()
        .filter(|set| drop_each(set).iter().all(|s| y.contains(&Simplex::new(s.iter().copied()))))
        .collect()
}

pub fn binom(n: u64, k: u64) -> u64 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u64, |acc, i| acc * (n - i) / (i + 1))
}

/// Free-face counts: `(a, alpha)` by brute force over all faces of `[n]`.
pub fn brute_counts(y: &Complex) -> (u64, Vec<u64>) {
    let simplices: Vec<Vec<u32>> = y.iter().map(|s| s.vertices().to_vec()).collect();
    let deg = degrees(&simplices);
    let a = subsets(y.n(), y.d()).iter().filter(|f| !deg.contains_key(*f)).count() as u64;
    let mut alpha = vec![0u64; y.d() + 1];
    for s in &simplices {
        let free = drop_each(s).iter().filter(|f| deg[*f] == 1).count();
        if free >= 1 {
            alpha[y.d() + 1 - free] += 1;
        }
    }
    (a, alpha)
}

/// Rank over F_2 of `∂_d`, rows as bitsets over all `C(n, d)` faces.
pub fn gf2_rank_oracle(y: &Complex) -> usize {
    let faces = subsets(y.n(), y.d());
    let index: HashMap<&[u32], usize> = faces.iter().enumerate().map(|(i, f)| (f.as_slice(), i)).collect();
    let words = faces.len().div_ceil(64);
    let mut rows: Vec<Vec<u64>> = y
        .iter()
        .map(|s| {
            let mut row = vec![0u64; words];
            for f in drop_each(s.vertices()) {
                let c = index[f.as_slice()];
                row[c / 64] ^= 1 << (c % 64);
            }
            row
        })
        .collect();
    let mut rank = 0;
    for col in 0..faces.len() {
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(piv) = (rank..rows.len()).find(|&r| rows[r][w] & bit != 0) else {
            continue;
        };
        rows.swap(rank, piv);
        let pivot = rows[rank].clone();
        for (r, row) in rows.iter_mut().enumerate() {
            if r != rank && row[w] & bit != 0 {
                row.iter_mut().zip(&pivot).for_each(|(x, y)| *x ^= y);
            }
        }
        rank += 1;
    }
    rank
}
