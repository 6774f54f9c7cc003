//! Exact rank over F_p.
//!
//! Two phases. A sparse phase pivots on columns of small weight (weight-1
//! columns first, which is exactly peeling free faces) while fill stays
//! bounded. Whatever is left goes to dense elimination: bit-packed XOR rows
//! for p = 2, plain modular rows otherwise.

use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Columns heavier than this are left for the dense phase.
const SPARSE_MAX_COLUMN_WEIGHT: usize = 3;
/// Pivot rows longer than this are left for the dense phase.
const SPARSE_MAX_PIVOT_LEN: usize = 48;

pub(crate) type SparseRow = Vec<(u32, u32)>;

pub(crate) fn mul_mod(a: u32, b: u32, p: u32) -> u32 {
    ((a as u64 * b as u64) % p as u64) as u32
}

pub(crate) fn inv_mod(a: u32, p: u32) -> u32 {
    debug_assert!(!a.is_multiple_of(p));
    let (mut base, mut exp, mut acc) = (a % p, p - 2, 1u32);
    while exp > 0 {
        if exp & 1 == 1 {
            acc = mul_mod(acc, base, p);
        }
        base = mul_mod(base, base, p);
        exp >>= 1;
    }
    acc
}

/// `target -= factor * pivot`, both sorted by column; zeros are dropped.
/// Reports every column whose membership in `target` changed.
fn axpy_sparse(
    target: &SparseRow,
    pivot: &SparseRow,
    factor: u32,
    p: u32,
    out: &mut SparseRow,
    added: &mut Vec<u32>,
    removed: &mut Vec<u32>,
) {
    out.clear();
    let neg = (p - factor % p) % p;
    let (mut i, mut j) = (0, 0);
    while i < target.len() || j < pivot.len() {
        let ci = target.get(i).map_or(u32::MAX, |e| e.0);
        let cj = pivot.get(j).map_or(u32::MAX, |e| e.0);
        if ci < cj {
            out.push(target[i]);
            i += 1;
        } else if cj < ci {
            let v = mul_mod(neg, pivot[j].1, p);
            if v != 0 {
                out.push((cj, v));
                added.push(cj);
            }
            j += 1;
        } else {
            let v = ((target[i].1 as u64 + mul_mod(neg, pivot[j].1, p) as u64) % p as u64) as u32;
            if v != 0 {
                out.push((ci, v));
            } else {
                removed.push(ci);
            }
            i += 1;
            j += 1;
        }
    }
}

fn remove_from(list: &mut Vec<u32>, x: u32) {
    let at = list.iter().position(|&y| y == x).expect("row listed under column");
    list.swap_remove(at);
}

/// Rank over F_p of the matrix with the given sparse rows (entries already reduced mod p).
pub(crate) fn rank(p: u32, ncols: usize, rows: &[SparseRow]) -> usize {
    let mut rows: Vec<SparseRow> = rows
        .iter()
        .map(|r| r.iter().copied().filter(|e| e.1 % p != 0).collect())
        .collect();
    let mut alive = vec![true; rows.len()];
    let mut col_rows: Vec<Vec<u32>> = vec![Vec::new(); ncols];
    for (r, row) in rows.iter().enumerate() {
        for &(c, _) in row {
            col_rows[c as usize].push(r as u32);
        }
    }
    let mut heap: BinaryHeap<Reverse<(usize, u32)>> = col_rows
        .iter()
        .enumerate()
        .filter(|(_, l)| !l.is_empty())
        .map(|(c, l)| Reverse((l.len(), c as u32)))
        .collect();

    let mut rank = 0;
    let mut scratch = SparseRow::new();
    let mut added = Vec::new();
    let mut removed = Vec::new();
    let mut touched = Vec::new();

    while let Some(Reverse((w, c))) = heap.pop() {
        let cu = c as usize;
        if col_rows[cu].len() != w || w == 0 {
            continue;
        }
        if w > SPARSE_MAX_COLUMN_WEIGHT {
            break;
        }
        // shortest row in this column, ties by row index
        let pivot = *col_rows[cu]
            .iter()
            .min_by_key(|&&r| (rows[r as usize].len(), r))
            .unwrap();
        if rows[pivot as usize].len() > SPARSE_MAX_PIVOT_LEN {
            continue;
        }
        let pivot_row = std::mem::take(&mut rows[pivot as usize]);
        let pivot_val = pivot_row.iter().find(|e| e.0 == c).unwrap().1;
        let inv = inv_mod(pivot_val, p);

        let others: Vec<u32> = col_rows[cu].iter().copied().filter(|&r| r != pivot).collect();
        touched.clear();
        for r in others {
            let ru = r as usize;
            let val = rows[ru].iter().find(|e| e.0 == c).unwrap().1;
            added.clear();
            removed.clear();
            axpy_sparse(&rows[ru], &pivot_row, mul_mod(val, inv, p), p, &mut scratch, &mut added, &mut removed);
            std::mem::swap(&mut rows[ru], &mut scratch);
            for &a in &added {
                col_rows[a as usize].push(r);
                touched.push(a);
            }
            for &x in &removed {
                remove_from(&mut col_rows[x as usize], r);
                touched.push(x);
            }
        }
        for &(col, _) in &pivot_row {
            remove_from(&mut col_rows[col as usize], pivot);
            touched.push(col);
        }
        alive[pivot as usize] = false;
        rank += 1;

        touched.sort_unstable();
        touched.dedup();
        for &t in &touched {
            let len = col_rows[t as usize].len();
            if len > 0 {
                heap.push(Reverse((len, t)));
            }
        }
    }

    // dense remainder
    let mut col_map = vec![u32::MAX; ncols];
    let mut width = 0usize;
    for (c, l) in col_rows.iter().enumerate() {
        if !l.is_empty() {
            col_map[c] = width as u32;
            width += 1;
        }
    }
    let rest: Vec<&SparseRow> = rows
        .iter()
        .enumerate()
        .filter(|(r, row)| alive[*r] && !row.is_empty())
        .map(|(_, row)| row)
        .collect();
    if rest.is_empty() {
        return rank;
    }
    rank + if p == 2 {
        dense_rank_gf2(&rest, &col_map, width)
    } else {
        dense_rank_mod_p(&rest, &col_map, width, p)
    }
}

fn dense_rank_gf2(rows: &[&SparseRow], col_map: &[u32], width: usize) -> usize {
    let words = width.div_ceil(64);
    let mut m: Vec<Vec<u64>> = rows
        .iter()
        .map(|row| {
            let mut bits = vec![0u64; words];
            for &(c, _) in row.iter() {
                let k = col_map[c as usize] as usize;
                bits[k / 64] |= 1 << (k % 64);
            }
            bits
        })
        .collect();
    let mut rank = 0;
    for col in 0..width {
        let (w, bit) = (col / 64, 1u64 << (col % 64));
        let Some(found) = (rank..m.len()).find(|&r| m[r][w] & bit != 0) else {
            continue;
        };
        m.swap(rank, found);
        let (head, tail) = m.split_at_mut(rank + 1);
        let piv = &head[rank];
        for row in tail.iter_mut() {
            if row[w] & bit != 0 {
                for (x, y) in row[w..].iter_mut().zip(&piv[w..]) {
                    *x ^= *y;
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}

/// `row += neg * piv` over F_P; a constant modulus compiles to multiply-shift.
#[inline]
fn axpy_dense<const P: u32>(row: &mut [u32], piv: &[u32], neg: u32) {
    for (x, &y) in row.iter_mut().zip(piv) {
        *x = (*x + neg * y) % P;
    }
}

fn dense_rank_mod_p(rows: &[&SparseRow], col_map: &[u32], width: usize, p: u32) -> usize {
    let mut m: Vec<Vec<u32>> = rows
        .iter()
        .map(|row| {
            let mut dense = vec![0u32; width];
            for &(c, v) in row.iter() {
                dense[col_map[c as usize] as usize] = v;
            }
            dense
        })
        .collect();
    let p64 = p as u64;
    let mut rank = 0;
    for col in 0..width {
        let Some(found) = (rank..m.len()).find(|&r| m[r][col] != 0) else {
            continue;
        };
        m.swap(rank, found);
        let inv = inv_mod(m[rank][col], p);
        for x in m[rank][col..].iter_mut() {
            *x = mul_mod(*x, inv, p);
        }
        let (head, tail) = m.split_at_mut(rank + 1);
        let piv = &head[rank];
        for row in tail.iter_mut() {
            let f = row[col];
            if f == 0 {
                continue;
            }
            if p < 1 << 16 {
                // x + (p - f) y < p^2 fits in 32 bits
                match p {
                    3 => axpy_dense::<3>(&mut row[col..], &piv[col..], p - f),
                    5 => axpy_dense::<5>(&mut row[col..], &piv[col..], p - f),
                    7 => axpy_dense::<7>(&mut row[col..], &piv[col..], p - f),
                    _ => {
                        let neg = p - f;
                        for (x, &y) in row[col..].iter_mut().zip(&piv[col..]) {
                            *x = (*x + neg * y) % p;
                        }
                    }
                }
            } else {
                let neg = p64 - f as u64;
                for (x, &y) in row[col..].iter_mut().zip(&piv[col..]) {
                    *x = ((*x as u64 + neg * y as u64) % p64) as u32;
                }
            }
        }
        rank += 1;
        if rank == m.len() {
            break;
        }
    }
    rank
}
