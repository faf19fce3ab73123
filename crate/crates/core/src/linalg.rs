//! Dense linear algebra over Z/p^h.
//!
//! Fields (h = 1) use reduced row echelon form. The chain ring Z/p^h uses
//! Smith reduction with tracked transforms; a kernel is free exactly when
//! every mod-p kernel vector lifts one power of p at a time.

use crate::error::{Error, Result};
use crate::par::{self, Exec};
use crate::zmod::Zmod;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Mat {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<u64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Mat {
        Mat { rows, cols, data: vec![0; rows * cols] }
    }

    pub fn identity(n: usize) -> Mat {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1;
        }
        m
    }

    pub fn from_rows(rows: &[Vec<u64>]) -> Mat {
        let r = rows.len();
        let c = rows.first().map_or(0, |x| x.len());
        let mut m = Mat::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            assert_eq!(row.len(), c, "ragged rows");
            m.data[i * c..(i + 1) * c].copy_from_slice(row);
        }
        m
    }

    pub fn from_cols(cols: &[Vec<u64>], rows: usize) -> Mat {
        let mut m = Mat::zeros(rows, cols.len());
        for (j, col) in cols.iter().enumerate() {
            for i in 0..rows {
                m.data[i * m.cols + j] = col[i];
            }
        }
        m
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> u64 {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: u64) {
        self.data[i * self.cols + j] = v;
    }

    pub fn row(&self, i: usize) -> &[u64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<u64> {
        (0..self.rows).map(|i| self.get(i, j)).collect()
    }

    pub fn to_rows(&self) -> Vec<Vec<u64>> {
        (0..self.rows).map(|i| self.row(i).to_vec()).collect()
    }

    pub fn transpose(&self) -> Mat {
        let mut t = Mat::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                t.set(j, i, self.get(i, j));
            }
        }
        t
    }

    pub fn reduce(&self, z: &Zmod) -> Mat {
        Mat { rows: self.rows, cols: self.cols, data: self.data.iter().map(|&x| x % z.m).collect() }
    }

    pub fn mul(&self, other: &Mat, z: &Zmod) -> Mat {
        assert_eq!(self.cols, other.rows);
        let mut out = Mat::zeros(self.rows, other.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self.get(i, k);
                if a == 0 {
                    continue;
                }
                for j in 0..other.cols {
                    let v = z.add(out.get(i, j), z.mul(a, other.get(k, j)));
                    out.set(i, j, v);
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[u64], z: &Zmod) -> Vec<u64> {
        assert_eq!(self.cols, v.len());
        (0..self.rows)
            .map(|i| {
                self.row(i).iter().zip(v).fold(0, |acc, (&a, &b)| z.add(acc, z.mul(a, b)))
            })
            .collect()
    }

    pub fn sub(&self, other: &Mat, z: &Zmod) -> Mat {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        let data = self.data.iter().zip(&other.data).map(|(&a, &b)| z.sub(a, b)).collect();
        Mat { rows: self.rows, cols: self.cols, data }
    }

    pub fn is_zero(&self) -> bool {
        self.data.iter().all(|&x| x == 0)
    }

    /// Kronecker product, row index `i1 * r2 + i2`.
    pub fn kron(&self, other: &Mat, z: &Zmod) -> Mat {
        let mut out = Mat::zeros(self.rows * other.rows, self.cols * other.cols);
        for i1 in 0..self.rows {
            for j1 in 0..self.cols {
                let a = self.get(i1, j1);
                for i2 in 0..other.rows {
                    for j2 in 0..other.cols {
                        out.set(i1 * other.rows + i2, j1 * other.cols + j2, z.mul(a, other.get(i2, j2)));
                    }
                }
            }
        }
        out
    }

    pub fn vstack(blocks: &[Mat]) -> Mat {
        let cols = blocks.first().map_or(0, |b| b.cols);
        let mut data = Vec::new();
        let mut rows = 0;
        for b in blocks {
            assert_eq!(b.cols, cols);
            data.extend_from_slice(&b.data);
            rows += b.rows;
        }
        Mat { rows, cols, data }
    }
}

/// Reduced row echelon form over F_p; returns the pivot columns.
pub fn rref_mod_p(a: &mut Mat, p: u64, exec: Exec) -> Vec<usize> {
    let f = Zmod { p, h: 1, m: p };
    let cols = a.cols;
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..cols {
        if r == a.rows {
            break;
        }
        let Some(pr) = (r..a.rows).find(|&i| !a.get(i, c).is_multiple_of(p)) else {
            continue;
        };
        if pr != r {
            for j in 0..cols {
                a.data.swap(pr * cols + j, r * cols + j);
            }
        }
        let inv = f.inv(a.get(r, c) % p).expect("nonzero pivot");
        for j in c..cols {
            let v = f.mul(a.get(r, j) % p, inv);
            a.set(r, j, v);
        }
        let pivot_row: Vec<u64> = a.row(r).to_vec();
        par::for_each_row(exec, &mut a.data, cols, |i, row| {
            if i == r {
                return;
            }
            let t = row[c] % p;
            if t == 0 {
                return;
            }
            for j in c..cols {
                row[j] = f.sub(row[j] % p, f.mul(t, pivot_row[j]));
            }
        });
        pivots.push(c);
        r += 1;
    }
    pivots
}

pub fn rank_mod_p(a: &Mat, p: u64, exec: Exec) -> usize {
    let mut w = a.clone();
    rref_mod_p(&mut w, p, exec).len()
}

/// Canonical F_p-basis of the right kernel, one vector per free column.
pub fn kernel_mod_p(a: &Mat, p: u64, exec: Exec) -> Vec<Vec<u64>> {
    let mut w = a.clone();
    let pivots = rref_mod_p(&mut w, p, exec);
    let mut is_pivot = vec![false; a.cols];
    for &c in &pivots {
        is_pivot[c] = true;
    }
    let mut basis = Vec::new();
    for free in (0..a.cols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![0u64; a.cols];
        v[free] = 1;
        for (i, &pc) in pivots.iter().enumerate() {
            v[pc] = (p - w.get(i, free) % p) % p;
        }
        basis.push(v);
    }
    basis
}

/// Some solution of `a x = b` over F_p.
pub fn solve_mod_p(a: &Mat, b: &[u64], p: u64, exec: Exec) -> Option<Vec<u64>> {
    let mut aug = Mat::zeros(a.rows, a.cols + 1);
    for i in 0..a.rows {
        for j in 0..a.cols {
            aug.set(i, j, a.get(i, j) % p);
        }
        aug.set(i, a.cols, b[i] % p);
    }
    let pivots = rref_mod_p(&mut aug, p, exec);
    if pivots.last() == Some(&a.cols) {
        return None;
    }
    let mut x = vec![0u64; a.cols];
    for (i, &pc) in pivots.iter().enumerate() {
        x[pc] = aug.get(i, a.cols);
    }
    Some(x)
}

/// `u * a * v = diag(p^{e_i})` with `u`, `v` invertible over Z/p^h.
#[derive(Clone, Debug)]
pub struct Smith {
    pub u: Mat,
    pub v: Mat,
    /// Exponents of the diagonal, `h` meaning zero; length `min(rows, cols)`.
    pub exps: Vec<u32>,
}

pub fn smith(a: &Mat, z: &Zmod, exec: Exec) -> Smith {
    let (rows, cols) = (a.rows, a.cols);
    let mut w = a.reduce(z);
    let mut u = Mat::identity(rows);
    let mut v = Mat::identity(cols);
    let n = rows.min(cols);
    let mut exps = vec![z.h; n];
    for k in 0..n {
        let mut best: Option<(u32, usize, usize)> = None;
        'search: for i in k..rows {
            for j in k..cols {
                let x = w.get(i, j);
                if x == 0 {
                    continue;
                }
                let e = z.val(x);
                if best.is_none_or(|b| e < b.0) {
                    best = Some((e, i, j));
                    if e == 0 {
                        break 'search;
                    }
                }
            }
        }
        let Some((e, pi, pj)) = best else { break };
        exps[k] = e;
        swap_rows(&mut w, k, pi);
        swap_rows(&mut u, k, pi);
        swap_cols(&mut w, k, pj);
        swap_cols(&mut v, k, pj);
        let unit = z.div_p_pow(w.get(k, k), e);
        let inv = z.inv(unit).expect("unit part");
        scale_row(&mut w, k, inv, z);
        scale_row(&mut u, k, inv, z);
        let pe = z.p.pow(e);
        // Row elimination below the pivot.
        let factors: Vec<u64> = (0..rows).map(|i| if i > k { w.get(i, k) / pe } else { 0 }).collect();
        let wk = w.row(k).to_vec();
        let uk = u.row(k).to_vec();
        let cols_w = w.cols;
        par::for_each_row(exec, &mut w.data, cols_w, |i, row| {
            let t = factors[i];
            if t != 0 {
                for j in k..row.len() {
                    row[j] = z.sub(row[j], z.mul(t, wk[j]));
                }
            }
        });
        let cols_u = u.cols;
        par::for_each_row(exec, &mut u.data, cols_u, |i, row| {
            let t = factors[i];
            if t != 0 {
                for j in 0..row.len() {
                    row[j] = z.sub(row[j], z.mul(t, uk[j]));
                }
            }
        });
        // Column elimination right of the pivot; only row k of w is nonzero there now.
        let cfac: Vec<u64> = (0..cols).map(|j| if j > k { w.get(k, j) / pe } else { 0 }).collect();
        for j in k + 1..cols {
            w.set(k, j, 0);
        }
        let vk = v.col(k);
        let cols_v = v.cols;
        par::for_each_row(exec, &mut v.data, cols_v, |i, row| {
            let vik = vk[i];
            if vik == 0 {
                return;
            }
            for j in k + 1..row.len() {
                if cfac[j] != 0 {
                    row[j] = z.sub(row[j], z.mul(cfac[j], vik));
                }
            }
        });
    }
    Smith { u, v, exps }
}

fn swap_rows(m: &mut Mat, a: usize, b: usize) {
    if a != b {
        for j in 0..m.cols {
            m.data.swap(a * m.cols + j, b * m.cols + j);
        }
    }
}

fn swap_cols(m: &mut Mat, a: usize, b: usize) {
    if a != b {
        for i in 0..m.rows {
            m.data.swap(i * m.cols + a, i * m.cols + b);
        }
    }
}

fn scale_row(m: &mut Mat, r: usize, s: u64, z: &Zmod) {
    for j in 0..m.cols {
        let v = z.mul(m.get(r, j), s);
        m.set(r, j, v);
    }
}

/// Generators of the right kernel over Z/p^h with their additive orders p^e.
pub fn kernel_zmod(a: &Mat, z: &Zmod, exec: Exec) -> Vec<(Vec<u64>, u32)> {
    let s = smith(a, z, exec);
    let mut gens = Vec::new();
    for i in 0..a.cols {
        let e = if i < s.exps.len() { s.exps[i] } else { z.h };
        if e == 0 {
            continue;
        }
        let scale = z.p_pow(z.h - e);
        let g: Vec<u64> = s.v.col(i).iter().map(|&x| z.mul(x, scale)).collect();
        gens.push((g, e));
    }
    gens
}

/// Some solution of `a x = b` over Z/p^h.
pub fn solve_zmod(a: &Mat, b: &[u64], z: &Zmod, exec: Exec) -> Option<Vec<u64>> {
    let s = smith(a, z, exec);
    let bp = s.u.mul_vec(b, z);
    let n = s.exps.len();
    let mut y = vec![0u64; a.cols];
    for (i, &bi) in bp.iter().enumerate() {
        if i >= n {
            if bi != 0 {
                return None;
            }
            continue;
        }
        let e = s.exps[i];
        if e == z.h {
            if bi != 0 {
                return None;
            }
        } else {
            if z.val(bi) < e {
                return None;
            }
            y[i] = z.div_p_pow(bi, e);
        }
    }
    Some(s.v.mul_vec(&y, z))
}

pub fn is_invertible(a: &Mat, z: &Zmod) -> bool {
    a.rows == a.cols && rank_mod_p(&a.reduce(&z.residue()), z.p, Exec::Sequential) == a.rows
}

pub fn inverse_zmod(a: &Mat, z: &Zmod) -> Option<Mat> {
    if a.rows != a.cols {
        return None;
    }
    let n = a.rows;
    let mut w = a.reduce(z);
    let mut inv = Mat::identity(n);
    for c in 0..n {
        let pr = (c..n).find(|&i| z.is_unit(w.get(i, c)))?;
        swap_rows(&mut w, c, pr);
        swap_rows(&mut inv, c, pr);
        let s = z.inv(w.get(c, c)).unwrap();
        scale_row(&mut w, c, s, z);
        scale_row(&mut inv, c, s, z);
        for i in 0..n {
            if i == c {
                continue;
            }
            let t = w.get(i, c);
            if t == 0 {
                continue;
            }
            for j in 0..n {
                let a1 = z.sub(w.get(i, j), z.mul(t, w.get(c, j)));
                w.set(i, j, a1);
                let b1 = z.sub(inv.get(i, j), z.mul(t, inv.get(c, j)));
                inv.set(i, j, b1);
            }
        }
    }
    Some(inv)
}

/// Lifts a solution of `a x = 0 (mod p^k)` to one mod p^{k+1}, keeping it fixed mod p^k.
pub fn lift_kernel_vector(a: &Mat, x: &[u64], k: u32, z: &Zmod, exec: Exec) -> Result<Vec<u64>> {
    let ax = a.mul_vec(x, z);
    let pk = z.p.pow(k);
    let next = z.p_pow(k + 1);
    let modn = if next == 0 { z.m } else { next };
    let rhs: Vec<u64> = ax
        .iter()
        .map(|&y| {
            let y = y % modn;
            if y % pk != 0 {
                u64::MAX
            } else {
                (z.p - (y / pk) % z.p) % z.p
            }
        })
        .collect();
    if rhs.contains(&u64::MAX) {
        return Err(Error::ObstructionNonzero(format!("input is not a solution mod p^{k}")));
    }
    let w = solve_mod_p(&a.reduce(&z.residue()), &rhs, z.p, exec)
        .ok_or_else(|| Error::ObstructionNonzero(format!("no lift from p^{k} to p^{}", k + 1)))?;
    Ok(x.iter().zip(&w).map(|(&xi, &wi)| z.add(xi, z.mul(pk % z.m, wi))).collect())
}

/// Basis of the right kernel over Z/p^h, which must be free.
///
/// The mod-p kernel basis is lifted one power at a time; any failed lift
/// means the kernel has a non-free summand.
pub fn free_kernel_basis(a: &Mat, z: &Zmod, exec: Exec) -> Result<Vec<Vec<u64>>> {
    let base = kernel_mod_p(&a.reduce(&z.residue()), z.p, exec);
    let mut out = Vec::with_capacity(base.len());
    for v in base {
        let mut x = v;
        for k in 1..z.h {
            x = lift_kernel_vector(a, &x, k, z, exec)?;
        }
        out.push(x);
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn brute_kernel_size(a: &Mat, z: &Zmod) -> usize {
        let n = a.cols;
        let total = (z.m as usize).pow(n as u32);
        let mut count = 0;
        for idx in 0..total {
            let mut x = vec![0u64; n];
            let mut t = idx;
            for xi in x.iter_mut() {
                *xi = (t % z.m as usize) as u64;
                t /= z.m as usize;
            }
            if a.mul_vec(&x, z).iter().all(|&y| y == 0) {
                count += 1;
            }
        }
        count
    }

    #[test]
    fn smith_kernel_size_matches_enumeration() {
        let z = Zmod::new(2, 2).unwrap();
        let mats = [
            Mat::from_rows(&[vec![2, 0, 1], vec![0, 2, 2]]),
            Mat::from_rows(&[vec![2, 2], vec![2, 2]]),
            Mat::from_rows(&[vec![1, 3, 2], vec![0, 0, 0], vec![3, 1, 2]]),
        ];
        for a in &mats {
            let s = smith(a, &z, Exec::Sequential);
            let mut size: usize = 1;
            for i in 0..a.cols {
                let e = if i < s.exps.len() { s.exps[i] } else { z.h };
                size *= (z.p as usize).pow(e);
            }
            assert_eq!(size, brute_kernel_size(a, &z));
            for (g, _) in kernel_zmod(a, &z, Exec::Sequential) {
                assert!(a.mul_vec(&g, &z).iter().all(|&y| y == 0));
            }
        }
    }

    #[test]
    fn free_kernel_detects_torsion() {
        let z = Zmod::new(2, 2).unwrap();
        let a = Mat::from_rows(&[vec![2]]);
        assert!(matches!(free_kernel_basis(&a, &z, Exec::Sequential), Err(Error::ObstructionNonzero(_))));
        let b = Mat::from_rows(&[vec![1, 3]]);
        let basis = free_kernel_basis(&b, &z, Exec::Sequential).unwrap();
        assert_eq!(basis.len(), 1);
        assert_eq!(b.mul_vec(&basis[0], &z), vec![0]);
    }

    #[test]
    fn solve_and_inverse() {
        let z = Zmod::new(3, 2).unwrap();
        let a = Mat::from_rows(&[vec![1, 3], vec![2, 4]]);
        let inv = inverse_zmod(&a, &z).unwrap();
        assert_eq!(a.mul(&inv, &z), Mat::identity(2));
        let x = solve_zmod(&a, &[5, 7], &z, Exec::Sequential).unwrap();
        assert_eq!(a.mul_vec(&x, &z), vec![5, 7]);
        let sing = Mat::from_rows(&[vec![3, 0], vec![0, 1]]);
        assert!(solve_zmod(&sing, &[1, 0], &z, Exec::Sequential).is_none());
        assert_eq!(solve_zmod(&sing, &[6, 2], &z, Exec::Sequential).map(|x| sing.mul_vec(&x, &z)), Some(vec![6, 2]));
    }
}
