//! Top-dimensional homology over F_p and the cheap cocycle-count bounds.

mod rank;

use serde::Serialize;
use thiserror::Error;

use crate::complex::{binomial, Complex, Incidence};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum HomologyError {
    #[error("{0} is not a prime in [2, 2^31)")]
    NotPrime(u64),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
pub struct FieldPrime(u32);

impl FieldPrime {
    pub fn new(p: u64) -> Result<Self, HomologyError> {
        if !(2..1 << 31).contains(&p) || !is_prime(p) {
            return Err(HomologyError::NotPrime(p));
        }
        Ok(FieldPrime(p as u32))
    }

    pub fn get(self) -> u32 {
        self.0
    }

    /// {2, 3, 5}
    pub fn defaults() -> Vec<FieldPrime> {
        vec![FieldPrime(2), FieldPrime(3), FieldPrime(5)]
    }
}

fn is_prime(p: u64) -> bool {
    if p < 2 {
        return false;
    }
    let mut q = 2;
    while q * q <= p {
        if p.is_multiple_of(q) {
            return false;
        }
        q += 1;
    }
    true
}

/// `∂_d` of a complex: one row per d-simplex, one column per face of positive degree.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMatrix {
    p: FieldPrime,
    ncols: usize,
    rows: Vec<Vec<(u32, u32)>>,
}

impl BoundaryMatrix {
    /// A general matrix over F_p; entries are reduced mod p and each row sorted by column.
    pub fn from_rows(p: FieldPrime, ncols: usize, rows: Vec<Vec<(u32, u32)>>) -> Self {
        let rows = rows
            .into_iter()
            .map(|mut r| {
                r.sort_unstable();
                r.into_iter()
                    .map(|(c, v)| {
                        assert!((c as usize) < ncols, "column {c} out of range");
                        (c, v % p.get())
                    })
                    .filter(|e| e.1 != 0)
                    .collect()
            })
            .collect();
        BoundaryMatrix { p, ncols, rows }
    }

    pub fn prime(&self) -> FieldPrime {
        self.p
    }

    pub fn nrows(&self) -> usize {
        self.rows.len()
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    /// Nonzeros of row `i` as `(column, value)`, sorted by column.
    pub fn row(&self, i: usize) -> &[(u32, u32)] {
        &self.rows[i]
    }

    pub fn to_dense(&self) -> Vec<Vec<u32>> {
        self.rows
            .iter()
            .map(|r| {
                let mut dense = vec![0; self.ncols];
                for &(c, v) in r {
                    dense[c as usize] = v;
                }
                dense
            })
            .collect()
    }

    /// Rows reordered so that new row `i` is old row `row_perm[i]`; column
    /// `c` is renamed `col_perm[c]`.
    pub fn permuted(&self, row_perm: &[usize], col_perm: &[u32]) -> BoundaryMatrix {
        let rows = row_perm
            .iter()
            .map(|&i| self.rows[i].iter().map(|&(c, v)| (col_perm[c as usize], v)).collect())
            .collect();
        BoundaryMatrix::from_rows(self.p, self.ncols, rows)
    }
}

/// Entry `(σ, τ_i) = (-1)^i mod p` where `τ_i` drops the `i`-th vertex of sorted `σ`.
pub fn boundary_matrix(y: &Complex, p: FieldPrime) -> BoundaryMatrix {
    let inc = Incidence::build(y);
    boundary_from_incidence(&inc, y.f_d(), p)
}

fn boundary_from_incidence(inc: &Incidence, f_d: usize, p: FieldPrime) -> BoundaryMatrix {
    let minus_one = p.get() - 1;
    let rows = (0..f_d)
        .map(|s| {
            let mut row: Vec<(u32, u32)> = inc
                .faces_of_simplex(s)
                .iter()
                .enumerate()
                .map(|(i, &f)| (f, if i % 2 == 0 { 1 } else { minus_one }))
                .collect();
            row.sort_unstable();
            row
        })
        .collect();
    BoundaryMatrix {
        p,
        ncols: inc.num_faces(),
        rows,
    }
}

pub fn rank_mod_p(m: &BoundaryMatrix) -> usize {
    rank::rank(m.p.get(), m.ncols, &m.rows)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct HomologySummary {
    pub p: u32,
    pub f_d: u64,
    pub rank_d: u64,
    /// `dim ker ∂_d`; there are no (d+1)-cells.
    pub h_d: u64,
    /// Reduced `h_{d-1}` (the (d-1)-skeleton is complete).
    pub h_d_minus_1: u64,
    /// `dim Z^{d-1} = C(n, d) - rank`.
    pub z_d_minus_1: u64,
}

pub fn betti(y: &Complex, p: FieldPrime) -> HomologySummary {
    let rank_d = rank_mod_p(&boundary_matrix(y, p)) as u64;
    summarize(y, p, rank_d)
}

fn summarize(y: &Complex, p: FieldPrime, rank_d: u64) -> HomologySummary {
    let (n, d) = (y.n() as u64, y.d() as u64);
    let f_d = y.f_d() as u64;
    let z_d_minus_1 = binomial(n, d) - rank_d;
    HomologySummary {
        p: p.get(),
        f_d,
        rank_d,
        h_d: f_d - rank_d,
        h_d_minus_1: z_d_minus_1 - binomial(n - 1, d - 1),
        z_d_minus_1,
    }
}

/// [`betti`] for several primes, sharing one incidence build.
pub fn betti_many(y: &Complex, primes: &[FieldPrime]) -> Vec<HomologySummary> {
    let inc = Incidence::build(y);
    primes
        .iter()
        .map(|&p| {
            let m = boundary_from_incidence(&inc, y.f_d(), p);
            summarize(y, p, rank_mod_p(&m) as u64)
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CocycleCounts {
    /// Faces of degree 0.
    pub a: u64,
    /// `alpha[j]`: simplices with exactly `d + 1 - j` faces of degree 1.
    pub alpha: Vec<u64>,
    /// `a + Σ_j alpha[j] (d - j)`, a lower bound on `dim Z^{d-1}`.
    pub u: i64,
    /// `f_d + u - C(n, d)`, a lower bound on `h_d`.
    pub v: i64,
}

pub fn cocycle_counts(y: &Complex) -> CocycleCounts {
    let inc = Incidence::build(y);
    counts_from_incidence(y, &inc)
}

pub(crate) fn counts_from_incidence(y: &Complex, inc: &Incidence) -> CocycleCounts {
    let d = y.d();
    let faces_total = binomial(y.n() as u64, d as u64);
    let a = faces_total - inc.num_faces() as u64;
    let mut alpha = vec![0u64; d + 1];
    for s in 0..y.f_d() {
        let free = inc
            .faces_of_simplex(s)
            .iter()
            .filter(|&&f| inc.degree[f as usize] == 1)
            .count();
        if free >= 1 {
            alpha[d + 1 - free] += 1;
        }
    }
    let u = a as i64
        + alpha
            .iter()
            .enumerate()
            .map(|(j, &c)| c as i64 * (d - j) as i64)
            .sum::<i64>();
    let v = y.f_d() as i64 + u - faces_total as i64;
    CocycleCounts { a, alpha, u, v }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::complex::Simplex;

    fn p(x: u64) -> FieldPrime {
        FieldPrime::new(x).unwrap()
    }

    fn sphere(d: usize) -> Complex {
        let verts: Vec<u32> = (0..d as u32 + 2).collect();
        Complex::sphere_boundary(d as u32 + 2, &verts).unwrap()
    }

    #[test]
    fn primes() {
        assert!(FieldPrime::new(2).is_ok());
        assert!(FieldPrime::new(2_147_483_647).is_ok());
        assert_eq!(FieldPrime::new(4), Err(HomologyError::NotPrime(4)));
        assert!(FieldPrime::new(1).is_err());
        assert!(FieldPrime::new(1 << 31).is_err());
    }

    #[test]
    fn matrix_shapes() {
        let one = Complex::new(5, 2, vec![Simplex::new([0, 1, 2])]).unwrap();
        let m = boundary_matrix(&one, p(2));
        assert_eq!(m.to_dense(), vec![vec![1, 1, 1]]);

        let m = boundary_matrix(&sphere(2), p(2));
        assert_eq!((m.nrows(), m.ncols()), (4, 6));
        let dense = m.to_dense();
        for c in 0..6 {
            assert_eq!(dense.iter().filter(|r| r[c] != 0).count(), 2);
        }
        // signs alternate in sorted order: [0,1,2] -> [1,2] +, [0,2] -, [0,1] +
        let m3 = boundary_matrix(&one, p(3));
        assert_eq!(m3.row(0), &[(0, 1), (1, 2), (2, 1)]);
        for s in 0..4 {
            assert_eq!(boundary_matrix(&sphere(2), p(5)).row(s).len(), 3);
        }
    }

    #[test]
    fn zero_and_sphere_ranks() {
        let zero = BoundaryMatrix::from_rows(p(3), 4, vec![vec![], vec![(2, 3)]]);
        assert_eq!(rank_mod_p(&zero), 0);
        for q in [2, 3, 5] {
            assert_eq!(rank_mod_p(&boundary_matrix(&sphere(2), p(q))), 3);
        }
    }

    #[test]
    fn betti_examples() {
        let empty = betti(&Complex::empty(6, 2), p(2));
        assert_eq!(empty.h_d, 0);
        assert_eq!(empty.h_d_minus_1, binomial(5, 2));

        for d in 1..=4 {
            for q in [2, 3, 5] {
                assert_eq!(betti(&sphere(d), p(q)).h_d, 1, "d={d} p={q}");
            }
        }

        // path 0-1-2-3-4 is a spanning tree
        let tree = Complex::new(
            5,
            1,
            (0..4).map(|i| Simplex::new([i, i + 1])).collect(),
        )
        .unwrap();
        let h = betti(&tree, p(3));
        assert_eq!((h.h_d, h.h_d_minus_1), (0, 0));
    }

    #[test]
    fn projective_plane_sees_characteristic_two() {
        // 6-vertex RP^2: H_2 is F_2 only
        let tris: [[u32; 3]; 10] = [
            [0, 1, 2], [0, 2, 3], [0, 3, 4], [0, 4, 5], [0, 1, 5],
            [1, 2, 4], [2, 3, 5], [1, 3, 4], [2, 4, 5], [1, 3, 5],
        ];
        let rp2 = Complex::new(6, 2, tris.iter().map(|t| Simplex::sorted(t.iter().copied())).collect()).unwrap();
        assert_eq!(betti(&rp2, p(2)).h_d, 1);
        assert_eq!(betti(&rp2, p(3)).h_d, 0);
        assert_eq!(betti(&rp2, p(5)).h_d, 0);
        let many = betti_many(&rp2, &FieldPrime::defaults());
        assert_eq!(many.iter().map(|h| h.h_d).collect::<Vec<_>>(), vec![1, 0, 0]);
    }

    #[test]
    fn cocycle_examples() {
        let n = 7u64;
        let empty = cocycle_counts(&Complex::empty(7, 2));
        assert_eq!(empty.a, binomial(n, 2));
        assert_eq!(empty.u, binomial(n, 2) as i64);
        assert_eq!(empty.v, 0);

        for d in 1..=4usize {
            let verts: Vec<u32> = (0..d as u32 + 1).collect();
            let one = Complex::new(n as u32, d, vec![Simplex::new(verts)]).unwrap();
            let cc = cocycle_counts(&one);
            let faces = binomial(n, d as u64);
            assert_eq!(cc.a, faces - (d as u64 + 1));
            assert_eq!(cc.alpha[0], 1);
            assert_eq!(cc.u, faces as i64 - 1);
            assert_eq!(cc.v, 0);
            // the bound is tight: rank 1
            assert_eq!(betti(&one, p(2)).z_d_minus_1, faces - 1);
        }

        let cc = cocycle_counts(&sphere(2));
        assert_eq!(cc.a, 0);
        assert!(cc.alpha.iter().all(|&x| x == 0));
        assert_eq!(cc.u, 0);
        assert_eq!(cc.v, -2);
    }
}
