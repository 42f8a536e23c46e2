//! Exact and modular linear algebra.
//!
//! Exact ranks and kernels run over sparse rational matrices and are only
//! used where the matrices are small (spot checks, escalation paths, tests).
//! The large ranks run mod a random word-sized prime in dense form; reduction
//! mod p can only lose rank, never gain it, which is the direction every
//! bound downstream needs.

use std::collections::BTreeMap;

use num_bigint::BigInt;
use num_traits::{Signed, ToPrimitive, Zero};
use rand::Rng;

use crate::error::{Error, Result};
use crate::par;
use crate::Rat;

pub fn mulmod(a: u64, b: u64, p: u64) -> u64 {
    ((a as u128 * b as u128) % p as u128) as u64
}

pub fn addmod(a: u64, b: u64, p: u64) -> u64 {
    let s = a as u128 + b as u128;
    (s % p as u128) as u64
}

pub fn submod(a: u64, b: u64, p: u64) -> u64 {
    (a + p - b % p) % p
}

pub fn powmod(mut a: u64, mut e: u64, p: u64) -> u64 {
    a %= p;
    let mut acc = 1u64;
    while e > 0 {
        if e & 1 == 1 {
            acc = mulmod(acc, a, p);
        }
        a = mulmod(a, a, p);
        e >>= 1;
    }
    acc
}

/// Inverse mod a prime. The caller guarantees a != 0 mod p.
pub fn invmod(a: u64, p: u64) -> u64 {
    debug_assert!(a % p != 0, "inverse of zero mod {p}");
    powmod(a, p - 2, p)
}

/// Residue of a big integer, sign folded into [0, p).
pub fn big_mod_signed(x: &BigInt, p: u64) -> u64 {
    let m = (x.abs() % BigInt::from(p)).to_u64().unwrap();
    if x.is_negative() && m != 0 {
        p - m
    } else {
        m
    }
}

/// Residue of a nonnegative big integer.
pub fn big_mod(x: &BigInt, p: u64) -> u64 {
    big_mod_signed(x, p)
}

/// Residue of a rational; fails if the denominator vanishes mod p.
pub fn rat_mod(x: &Rat, p: u64) -> Result<u64> {
    let d = big_mod(x.denom(), p);
    if d == 0 {
        return Err(Error::BadPrime { prime: p });
    }
    Ok(mulmod(big_mod_signed(x.numer(), p), invmod(d, p), p))
}

/// Deterministic Miller-Rabin for u64.
pub fn is_prime_u64(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    for q in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        if n == q {
            return true;
        }
        if n % q == 0 {
            return false;
        }
    }
    let mut d = n - 1;
    let mut r = 0;
    while d & 1 == 0 {
        d >>= 1;
        r += 1;
    }
    // These twelve bases decide primality for all n < 2^64.
    'witness: for a in [2u64, 3, 5, 7, 11, 13, 17, 19, 23, 29, 31, 37] {
        let mut x = powmod(a, d, n);
        if x == 1 || x == n - 1 {
            continue;
        }
        for _ in 0..r - 1 {
            x = mulmod(x, x, n);
            if x == n - 1 {
                continue 'witness;
            }
        }
        return false;
    }
    true
}

/// Uniform random prime in [2^61, 2^62). Large enough that an unlucky rank
/// drop mod p has negligible probability, small enough for u128 products.
pub fn random_prime_62<R: Rng>(rng: &mut R) -> u64 {
    loop {
        let c = rng.gen_range((1u64 << 61)..(1u64 << 62)) | 1;
        if is_prime_u64(c) {
            return c;
        }
    }
}

/// Sparse matrix over the rationals, row-major.
#[derive(Clone, Debug, Default)]
pub struct SparseRatMatrix {
    pub rows: usize,
    pub cols: usize,
    row_data: Vec<BTreeMap<usize, Rat>>,
}

impl SparseRatMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        SparseRatMatrix {
            rows,
            cols,
            row_data: vec![BTreeMap::new(); rows],
        }
    }

    pub fn set(&mut self, r: usize, c: usize, v: Rat) {
        assert!(r < self.rows && c < self.cols);
        if v.is_zero() {
            self.row_data[r].remove(&c);
        } else {
            self.row_data[r].insert(c, v);
        }
    }

    pub fn add(&mut self, r: usize, c: usize, v: Rat) {
        if v.is_zero() {
            return;
        }
        let e = self.row_data[r].entry(c).or_insert_with(Rat::zero);
        *e += v;
        if e.is_zero() {
            self.row_data[r].remove(&c);
        }
    }

    pub fn get(&self, r: usize, c: usize) -> Rat {
        self.row_data[r].get(&c).cloned().unwrap_or_else(Rat::zero)
    }

    pub fn row(&self, r: usize) -> &BTreeMap<usize, Rat> {
        &self.row_data[r]
    }

    pub fn nnz(&self) -> usize {
        self.row_data.iter().map(|r| r.len()).sum()
    }

    pub fn mul_vec(&self, v: &[Rat]) -> Vec<Rat> {
        assert_eq!(v.len(), self.cols);
        self.row_data
            .iter()
            .map(|row| {
                let mut acc = Rat::zero();
                for (c, a) in row {
                    acc += a * &v[*c];
                }
                acc
            })
            .collect()
    }

    /// Exact rank by sparse elimination. Pivots favor short rows and short
    /// columns to limit fill; entries stay rational throughout.
    pub fn rank(&self) -> usize {
        let mut rows: Vec<BTreeMap<usize, Rat>> =
            self.row_data.iter().filter(|r| !r.is_empty()).cloned().collect();
        let mut rank = 0;
        while !rows.is_empty() {
            // Column occupancy for the Markowitz score.
            let mut col_count: BTreeMap<usize, usize> = BTreeMap::new();
            for row in &rows {
                for c in row.keys() {
                    *col_count.entry(*c).or_insert(0) += 1;
                }
            }
            let (ri, pc) = {
                let mut best: Option<(usize, usize, usize)> = None;
                for (i, row) in rows.iter().enumerate() {
                    for c in row.keys() {
                        let score = (row.len() - 1) * (col_count[c] - 1);
                        if best.map_or(true, |(s, _, _)| score < s) {
                            best = Some((score, i, *c));
                        }
                    }
                }
                let (_, i, c) = best.unwrap();
                (i, c)
            };
            let pivot_row = rows.swap_remove(ri);
            let pivot = pivot_row[&pc].clone();
            rank += 1;
            for row in &mut rows {
                if let Some(factor) = row.remove(&pc) {
                    let scale = factor / &pivot;
                    for (c, v) in &pivot_row {
                        if *c == pc {
                            continue;
                        }
                        let e = row.entry(*c).or_insert_with(Rat::zero);
                        *e -= &scale * v;
                        if e.is_zero() {
                            row.remove(c);
                        }
                    }
                }
            }
            rows.retain(|r| !r.is_empty());
        }
        rank
    }

    /// Basis of the right kernel, via dense reduced row echelon form. One
    /// vector per free column; the pivot coordinates are back-substituted.
    pub fn kernel_basis(&self) -> Vec<Vec<Rat>> {
        let mut rows: Vec<Vec<Rat>> = self
            .row_data
            .iter()
            .map(|r| {
                let mut dense = vec![Rat::zero(); self.cols];
                for (c, v) in r {
                    dense[*c] = v.clone();
                }
                dense
            })
            .collect();
        let mut pivot_cols: Vec<usize> = Vec::new();
        let mut lead = 0;
        for c in 0..self.cols {
            let Some(pr) = (lead..rows.len()).find(|&r| !rows[r][c].is_zero()) else {
                continue;
            };
            rows.swap(lead, pr);
            let inv = rows[lead][c].clone();
            for v in rows[lead].iter_mut() {
                if !v.is_zero() {
                    *v /= &inv;
                }
            }
            for r in 0..rows.len() {
                if r != lead && !rows[r][c].is_zero() {
                    let factor = rows[r][c].clone();
                    for cc in c..self.cols {
                        let delta = &factor * &rows[lead][cc];
                        rows[r][cc] -= delta;
                    }
                }
            }
            pivot_cols.push(c);
            lead += 1;
            if lead == rows.len() {
                break;
            }
        }
        let rank = pivot_cols.len();
        debug_assert_eq!(rank, self.rank(), "echelon rank disagrees");
        let is_pivot: Vec<bool> = {
            let mut v = vec![false; self.cols];
            for &c in &pivot_cols {
                v[c] = true;
            }
            v
        };
        let mut basis = Vec::with_capacity(self.cols - rank);
        for free in 0..self.cols {
            if is_pivot[free] {
                continue;
            }
            let mut vec = vec![Rat::zero(); self.cols];
            vec[free] = Rat::from_integer(1.into());
            for (i, &pc) in pivot_cols.iter().enumerate() {
                vec[pc] = -rows[i][free].clone();
            }
            basis.push(vec);
        }
        debug_assert!(basis
            .iter()
            .all(|v| self.mul_vec(v).iter().all(|x| x.is_zero())));
        basis
    }

    /// Rank of the reduction mod p. Errors if any denominator vanishes mod p.
    pub fn rank_mod_p(&self, p: u64) -> Result<usize> {
        let mut m = DenseFp::zero(self.rows, self.cols, p);
        for (r, row) in self.row_data.iter().enumerate() {
            for (c, v) in row {
                m.set(r, *c, rat_mod(v, p)?);
            }
        }
        Ok(m.rank())
    }
}

/// Dense matrix mod a prime, one Vec per row so elimination can hand rows to
/// worker threads independently.
pub struct DenseFp {
    pub rows: usize,
    pub cols: usize,
    pub p: u64,
    data: Vec<Vec<u64>>,
}

impl DenseFp {
    pub fn zero(rows: usize, cols: usize, p: u64) -> Self {
        DenseFp {
            rows,
            cols,
            p,
            data: vec![vec![0; cols]; rows],
        }
    }

    /// Build from whole rows, checking widths.
    pub fn from_rows(rows: Vec<Vec<u64>>, cols: usize, p: u64) -> Self {
        assert!(rows.iter().all(|r| r.len() == cols));
        DenseFp {
            rows: rows.len(),
            cols,
            p,
            data: rows,
        }
    }

    pub fn set(&mut self, r: usize, c: usize, v: u64) {
        self.data[r][c] = v % self.p;
    }

    pub fn get(&self, r: usize, c: usize) -> u64 {
        self.data[r][c]
    }

    pub fn row_mut(&mut self, r: usize) -> &mut [u64] {
        &mut self.data[r]
    }

    /// Add v to entry (r, c) mod p; columns are streamed in, so accumulation
    /// is the native write operation.
    pub fn accumulate(&mut self, r: usize, c: usize, v: u64) {
        let p = self.p;
        let e = &mut self.data[r][c];
        *e = addmod(*e, v, p);
    }

    /// In-place rank by Gaussian elimination, eliminating below each pivot in
    /// parallel across rows.
    pub fn rank(&mut self) -> usize {
        let p = self.p;
        let mut rank = 0;
        for col in 0..self.cols {
            let Some(pr) = (rank..self.rows).find(|&r| self.data[r][col] != 0) else {
                continue;
            };
            self.data.swap(rank, pr);
            let inv = invmod(self.data[rank][col], p);
            {
                let row = &mut self.data[rank];
                for c in col..self.cols {
                    row[c] = mulmod(row[c], inv, p);
                }
            }
            let (pivot_rows, rest) = self.data.split_at_mut(rank + 1);
            let pivot_row = &pivot_rows[rank];
            par::for_each_mut(rest, |row| {
                let factor = row[col];
                if factor != 0 {
                    for c in col..row.len() {
                        row[c] = submod(row[c], mulmod(factor, pivot_row[c], p), p);
                    }
                }
            });
            rank += 1;
            if rank == self.rows {
                break;
            }
        }
        rank
    }
}
