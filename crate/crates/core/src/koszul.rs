//! The complex of the commuting operators `id - φ_α` on a finite F_p-space.
//!
//! Degree r is `⊕_{|S| = r} W` over subsets of the ordered index set, listed
//! lexicographically. The component `S → S ∪ {β}` of `d^r` is
//! `(-1)^ε (id - φ_β)` with ε the number of elements of S smaller than β.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coeffs::{Ring, RingTag};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::par::{self, Exec};
use crate::zmod::Zmod;

#[derive(Clone, Debug)]
pub struct PhiComplexInstance {
    pub p: u64,
    pub names: Vec<String>,
    pub dim: usize,
    pub phi: Vec<Mat>,
    /// `subsets[r]`: the r-subsets in lexicographic order.
    pub subsets: Vec<Vec<Vec<usize>>>,
    /// `d[r]`: term r → term r+1.
    pub d: Vec<Mat>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CohomologyReport {
    pub dims: Vec<usize>,
    pub term_dims: Vec<usize>,
    /// `Σ(-1)^r h^r = Σ(-1)^r dim C^r`.
    pub euler_ok: bool,
}

fn subsets(n: usize, r: usize) -> Vec<Vec<usize>> {
    fn rec(start: usize, n: usize, r: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
        if cur.len() == r {
            out.push(cur.clone());
            return;
        }
        for i in start..n {
            cur.push(i);
            rec(i + 1, n, r, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    rec(0, n, r, &mut Vec::new(), &mut out);
    out
}

/// Assembles the differentials; fails on non-commuting maps or `d² ≠ 0`.
pub fn build_complex(p: u64, names: &[&str], phi: Vec<Mat>) -> Result<PhiComplexInstance> {
    let z = Zmod::new(p, 1)?;
    let n = phi.len();
    if names.len() != n {
        return Err(Error::Malformed("one name per map".into()));
    }
    let dim = phi.first().map_or(0, |m| m.rows);
    if phi.iter().any(|m| m.rows != dim || m.cols != dim) {
        return Err(Error::Malformed("maps must be square of equal size".into()));
    }
    for a in 0..n {
        for b in a + 1..n {
            if phi[a].mul(&phi[b], &z) != phi[b].mul(&phi[a], &z) {
                return Err(Error::NonCommutingMaps(format!("{} and {}", names[a], names[b])));
            }
        }
    }
    let subsets: Vec<Vec<Vec<usize>>> = (0..=n).map(|r| subsets(n, r)).collect();
    let id = Mat::identity(dim);
    let ops: Vec<Mat> = phi.iter().map(|m| id.sub(m, &z)).collect();
    let mut d = Vec::with_capacity(n);
    for r in 0..n {
        let (src, dst) = (&subsets[r], &subsets[r + 1]);
        let mut m = Mat::zeros(dst.len() * dim, src.len() * dim);
        for (j, s) in src.iter().enumerate() {
            for beta in (0..n).filter(|b| !s.contains(b)) {
                let mut t = s.clone();
                t.push(beta);
                t.sort_unstable();
                let i = dst.iter().position(|x| *x == t).expect("subset present");
                let eps = s.iter().filter(|&&x| x < beta).count();
                for a in 0..dim {
                    for b in 0..dim {
                        let v = ops[beta].get(a, b);
                        let v = if eps % 2 == 1 { z.neg(v) } else { v };
                        m.set(i * dim + a, j * dim + b, v);
                    }
                }
            }
        }
        d.push(m);
    }
    for r in 0..n.saturating_sub(1) {
        if !d[r + 1].mul(&d[r], &z).is_zero() {
            return Err(Error::D2NotZero(r));
        }
    }
    Ok(PhiComplexInstance { p, names: names.iter().map(|s| s.to_string()).collect(), dim, phi, subsets, d })
}

impl PhiComplexInstance {
    pub fn degree(&self) -> usize {
        self.phi.len()
    }

    pub fn term_dim(&self, r: usize) -> usize {
        self.subsets[r].len() * self.dim
    }

    fn z(&self) -> Zmod {
        Zmod::new(self.p, 1).expect("validated prime")
    }

    /// Ranks of all differentials, computed in parallel.
    fn ranks(&self, exec: Exec) -> Vec<usize> {
        par::map(exec, &self.d, |m| linalg::rank_mod_p(m, self.p, Exec::Sequential))
    }

    pub fn cohomology_dims(&self) -> CohomologyReport {
        self.cohomology_dims_with(Exec::default())
    }

    pub fn cohomology_dims_with(&self, exec: Exec) -> CohomologyReport {
        let n = self.degree();
        let ranks = self.ranks(exec);
        let term_dims: Vec<usize> = (0..=n).map(|r| self.term_dim(r)).collect();
        let dims: Vec<usize> = (0..=n)
            .map(|r| {
                let out = if r < n { ranks[r] } else { 0 };
                let inc = if r > 0 { ranks[r - 1] } else { 0 };
                term_dims[r] - out - inc
            })
            .collect();
        let alt = |v: &[usize]| v.iter().enumerate().map(|(r, &x)| if r % 2 == 0 { x as i64 } else { -(x as i64) }).sum::<i64>();
        let euler_ok = alt(&dims) == alt(&term_dims);
        CohomologyReport { dims, term_dims, euler_ok }
    }

    /// Basis of `⋂_α ker(id - φ_α)`.
    pub fn h0_basis(&self) -> Vec<Vec<u64>> {
        let z = self.z();
        let id = Mat::identity(self.dim);
        let blocks: Vec<Mat> = self.phi.iter().map(|m| id.sub(m, &z)).collect();
        if blocks.is_empty() {
            return (0..self.dim).map(|i| (0..self.dim).map(|j| u64::from(i == j)).collect()).collect();
        }
        linalg::kernel_mod_p(&Mat::vstack(&blocks), self.p, Exec::Sequential)
    }

    /// Operators of both factors on `W_1 ⊗ W_2`, acting factorwise.
    pub fn tensor(&self, other: &PhiComplexInstance) -> Result<PhiComplexInstance> {
        if self.p != other.p {
            return Err(Error::RingMismatch);
        }
        let z = self.z();
        let mut phi = Vec::new();
        let mut names = Vec::new();
        for (m, nm) in self.phi.iter().zip(&self.names) {
            phi.push(m.kron(&Mat::identity(other.dim), &z));
            names.push(format!("{nm}.1"));
        }
        for (m, nm) in other.phi.iter().zip(&other.names) {
            phi.push(Mat::identity(self.dim).kron(m, &z));
            names.push(format!("{nm}.2"));
        }
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        build_complex(self.p, &refs, phi)
    }
}

/// `W = F_q` with the absolute Frobenius.
pub fn finite_field_instance(p: u64, f: u32) -> Result<PhiComplexInstance> {
    let ring = Ring::new(RingTag::standard(p, 1, &[("a", f)])?)?;
    build_complex(p, &["a"], vec![ring.frob_matrix(0)?])
}

/// `W = F_q[X_β : β ≠ α]/(X_β^r) ⊗ F_p[X_α]/(X_α^r)` with the partial
/// Frobenii `φ_β` (β ≠ α); the F_q-coefficients sit on the β-factors.
pub fn truncation_instance(p: u64, f: u32, r: usize, others: usize) -> Result<PhiComplexInstance> {
    if r == 0 {
        return Err(Error::Malformed("truncation r must be positive".into()));
    }
    let names: Vec<String> = (1..=others).map(|i| format!("b{i}")).collect();
    let factors: Vec<(&str, u32)> = names.iter().map(|s| (s.as_str(), f)).collect();
    let ring = Ring::new(RingTag::standard(p, 1, &factors)?)?;
    let cd = ring.dim();
    // Monomials: exponents of the β's then α, each in [0, r).
    let nv = others + 1;
    let nmono = r.pow(nv as u32);
    let dim = cd * nmono;
    let decode = |mut k: usize| {
        let mut e = vec![0usize; nv];
        for x in e.iter_mut() {
            *x = k % r;
            k /= r;
        }
        e
    };
    let encode = |e: &[usize]| e.iter().rev().fold(0, |acc, &x| acc * r + x);
    let z = ring.z();
    let mut phi = Vec::with_capacity(others);
    for b in 0..others {
        let fr = ring.frob_matrix(b)?;
        let mut m = Mat::zeros(dim, dim);
        for k in 0..nmono {
            let mut e = decode(k);
            e[b] *= p as usize;
            if e[b] >= r {
                continue;
            }
            let tgt = encode(&e);
            for i in 0..cd {
                for j in 0..cd {
                    let v = fr.get(i, j);
                    if v != 0 {
                        m.set(tgt * cd + i, k * cd + j, z.add(m.get(tgt * cd + i, k * cd + j), v));
                    }
                }
            }
        }
        phi.push(m);
    }
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    build_complex(p, &refs, phi)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LongExactReport {
    pub sub: Vec<usize>,
    pub total: Vec<usize>,
    pub quotient: Vec<usize>,
    /// Ranks of `H^r(U) → H^r(W)`, `H^r(W) → H^r(Q)`, `H^r(Q) → H^{r+1}(U)`.
    pub incl: Vec<usize>,
    pub proj: Vec<usize>,
    pub connecting: Vec<usize>,
    pub exact: bool,
    pub euler_additive: bool,
}

/// Block upper triangular instance in adapted coordinates: the first `k`
/// coordinates span the stable subspace U.
#[derive(Clone, Debug)]
pub struct ShortExact {
    pub total: PhiComplexInstance,
    pub sub: PhiComplexInstance,
    pub quotient: PhiComplexInstance,
    pub k: usize,
}

/// Commuting maps `φ_i = P_i(M)` for a random block-triangular M, so that the
/// first `k` coordinates are stable.
pub fn random_short_exact(p: u64, k: usize, q: usize, maps: usize, seed: u64) -> Result<ShortExact> {
    let z = Zmod::new(p, 1)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let n = k + q;
    let mut m = Mat::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if !(i >= k && j < k) {
                m.set(i, j, rng.gen_range(0..p));
            }
        }
    }
    let mut phi = Vec::with_capacity(maps);
    for _ in 0..maps {
        // Random polynomial of degree ≤ 2 in M.
        let c: Vec<u64> = (0..3).map(|_| rng.gen_range(0..p)).collect();
        let m2 = m.mul(&m, &z);
        let mut out = Mat::zeros(n, n);
        for i in 0..n {
            for j in 0..n {
                let v = z.add(z.add(z.mul(c[0], u64::from(i == j)), z.mul(c[1], m.get(i, j))), z.mul(c[2], m2.get(i, j)));
                out.set(i, j, v);
            }
        }
        phi.push(out);
    }
    let names: Vec<String> = (0..maps).map(|i| format!("a{i}")).collect();
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    let block = |r0: usize, len: usize, m: &Mat| {
        let mut b = Mat::zeros(len, len);
        for i in 0..len {
            for j in 0..len {
                b.set(i, j, m.get(r0 + i, r0 + j));
            }
        }
        b
    };
    let sub = build_complex(p, &refs, phi.iter().map(|x| block(0, k, x)).collect())?;
    let quotient = build_complex(p, &refs, phi.iter().map(|x| block(k, q, x)).collect())?;
    let total = build_complex(p, &refs, phi)?;
    Ok(ShortExact { total, sub, quotient, k })
}

/// Rank of the induced map on cohomology: `dim((f(Z) + B) / B)`.
fn induced_rank(images: &[Vec<u64>], boundaries: &[Vec<u64>], len: usize, p: u64) -> usize {
    let rank = |vs: &[Vec<u64>]| {
        if vs.is_empty() {
            0
        } else {
            linalg::rank_mod_p(&Mat::from_cols(vs, len), p, Exec::Sequential)
        }
    };
    let mut all = images.to_vec();
    all.extend_from_slice(boundaries);
    rank(&all) - rank(boundaries)
}

fn cycles(c: &PhiComplexInstance, r: usize) -> Vec<Vec<u64>> {
    if r < c.degree() {
        linalg::kernel_mod_p(&c.d[r], c.p, Exec::Sequential)
    } else {
        (0..c.term_dim(r)).map(|i| (0..c.term_dim(r)).map(|j| u64::from(i == j)).collect()).collect()
    }
}

fn boundaries(c: &PhiComplexInstance, r: usize) -> Vec<Vec<u64>> {
    if r == 0 {
        Vec::new()
    } else {
        (0..c.d[r - 1].cols).map(|j| c.d[r - 1].col(j)).collect()
    }
}

/// Computes the long exact sequence maps and checks exactness at every spot.
pub fn long_exact_check(ses: &ShortExact) -> LongExactReport {
    let (w, u, q, k) = (&ses.total, &ses.sub, &ses.quotient, ses.k);
    let n = w.degree();
    let z = w.z();
    let (dw, qd) = (w.dim, q.dim);
    let nterm = |c: &PhiComplexInstance, r: usize| c.subsets[r].len();
    let incl_vec = |v: &[u64], r: usize| {
        let mut out = vec![0u64; nterm(w, r) * dw];
        for s in 0..nterm(w, r) {
            out[s * dw..s * dw + k].copy_from_slice(&v[s * k..(s + 1) * k]);
        }
        out
    };
    let proj_vec = |v: &[u64], r: usize| {
        let mut out = vec![0u64; nterm(w, r) * qd];
        for s in 0..nterm(w, r) {
            out[s * qd..(s + 1) * qd].copy_from_slice(&v[s * dw + k..(s + 1) * dw]);
        }
        out
    };
    let lift_vec = |v: &[u64], r: usize| {
        let mut out = vec![0u64; nterm(w, r) * dw];
        for s in 0..nterm(w, r) {
            out[s * dw + k..(s + 1) * dw].copy_from_slice(&v[s * qd..(s + 1) * qd]);
        }
        out
    };
    let sub_part = |v: &[u64], r: usize| {
        let mut out = vec![0u64; nterm(w, r) * k];
        for s in 0..nterm(w, r) {
            out[s * k..(s + 1) * k].copy_from_slice(&v[s * dw..s * dw + k]);
        }
        out
    };
    let mut incl = Vec::new();
    let mut proj = Vec::new();
    let mut connecting = Vec::new();
    for r in 0..=n {
        let zu: Vec<Vec<u64>> = cycles(u, r).iter().map(|v| incl_vec(v, r)).collect();
        incl.push(induced_rank(&zu, &boundaries(w, r), w.term_dim(r), w.p));
        let zw: Vec<Vec<u64>> = cycles(w, r).iter().map(|v| proj_vec(v, r)).collect();
        proj.push(induced_rank(&zw, &boundaries(q, r), q.term_dim(r), w.p));
        if r < n {
            let dz: Vec<Vec<u64>> =
                cycles(q, r).iter().map(|v| sub_part(&w.d[r].mul_vec(&lift_vec(v, r), &z), r + 1)).collect();
            connecting.push(induced_rank(&dz, &boundaries(u, r + 1), u.term_dim(r + 1), w.p));
        } else {
            connecting.push(0);
        }
    }
    let (hu, hw, hq) = (u.cohomology_dims().dims, w.cohomology_dims().dims, q.cohomology_dims().dims);
    let mut exact = true;
    for r in 0..=n {
        let prev_conn = if r > 0 { connecting[r - 1] } else { 0 };
        exact &= hu[r] == prev_conn + incl[r];
        exact &= hw[r] == incl[r] + proj[r];
        exact &= hq[r] == proj[r] + connecting[r];
    }
    let alt = |v: &[usize]| v.iter().enumerate().map(|(r, &x)| if r % 2 == 0 { x as i64 } else { -(x as i64) }).sum::<i64>();
    let euler_additive = alt(&hw) == alt(&hu) + alt(&hq);
    LongExactReport { sub: hu, total: hw, quotient: hq, incl, proj, connecting, exact, euler_additive }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f4_squaring_with_identity() {
        let ring = Ring::new(RingTag::standard(2, 1, &[("a", 2)]).unwrap()).unwrap();
        let c = build_complex(2, &["a", "b"], vec![ring.frob_matrix(0).unwrap(), Mat::identity(2)]).unwrap();
        let rep = c.cohomology_dims();
        assert!(rep.euler_ok);
        assert_eq!(rep.dims, vec![1, 2, 1]);
    }

    #[test]
    fn identity_maps_give_binomial_dims() {
        let c = build_complex(3, &["a", "b"], vec![Mat::identity(1), Mat::identity(1)]).unwrap();
        assert_eq!(c.cohomology_dims().dims, vec![1, 2, 1]);
        assert!(c.d.iter().all(|m| m.is_zero()));
    }

    #[test]
    fn truncation_h0_is_r() {
        for r in 1..=3 {
            let c = truncation_instance(2, 2, r, 1).unwrap();
            assert_eq!(c.cohomology_dims().dims[0], r);
        }
    }

    #[test]
    fn noncommuting_rejected() {
        let a = Mat::from_rows(&[vec![1, 1], vec![0, 1]]);
        let b = Mat::from_rows(&[vec![1, 0], vec![1, 1]]);
        assert!(matches!(build_complex(2, &["a", "b"], vec![a, b]), Err(Error::NonCommutingMaps(_))));
    }

    #[test]
    fn long_exact_sequence_reconciles() {
        for seed in 0..5 {
            let ses = random_short_exact(3, 2, 2, 2, seed).unwrap();
            let rep = long_exact_check(&ses);
            assert!(rep.exact, "{rep:?}");
            assert!(rep.euler_additive);
        }
    }
}
