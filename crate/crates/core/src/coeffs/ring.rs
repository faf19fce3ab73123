//! Coefficient universes `⊗_α W(F_{q_α}) / p^h`.
//!
//! Elements are dense coordinate vectors in the product of power bases. The
//! basis index of `∏ y_α^{i_α}` is `Σ i_α·stride_α` with the first factor
//! varying fastest. For h > 1 each modulus is the lift whose roots are
//! Teichmüller representatives, so the partial Frobenius is `y_α ↦ y_α^p`.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use super::poly;
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::par::Exec;
use crate::zmod::Zmod;

pub type Coeff = Vec<u64>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct FactorTag {
    pub alpha: String,
    pub f: u32,
    pub modulus: Vec<u64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RingTag {
    pub p: u64,
    pub h: u32,
    pub factors: Vec<FactorTag>,
}

impl RingTag {
    /// Standard moduli: smallest irreducible mod p, lifted to Teichmüller form.
    pub fn standard(p: u64, h: u32, factors: &[(&str, u32)]) -> Result<RingTag> {
        let z = Zmod::new(p, h)?;
        let factors = factors
            .iter()
            .map(|&(alpha, f)| {
                if f == 0 {
                    return Err(Error::MalformedRing(format!("factor {alpha} has degree 0")));
                }
                let m = poly::smallest_irreducible(p, f);
                Ok(FactorTag { alpha: alpha.to_string(), f, modulus: teichmuller_modulus(&m, &z) })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(RingTag { p, h, factors })
    }

    /// All residue degrees one: coefficients are plain Z/p^h.
    pub fn base(p: u64, h: u32, names: &[&str]) -> Result<RingTag> {
        let f: Vec<(&str, u32)> = names.iter().map(|&n| (n, 1)).collect();
        RingTag::standard(p, h, &f)
    }
}

/// The lift of `m` (irreducible mod p) whose roots are Teichmüller representatives.
pub fn teichmuller_modulus(m: &[u64], z: &Zmod) -> Vec<u64> {
    let n = poly::degree(m).expect("nonzero modulus");
    let mt: Vec<u64> = m.iter().map(|&c| c % z.m).collect();
    if z.h == 1 {
        return mt;
    }
    let q = (z.p as u128).pow(n as u32);
    let t = poly::powmod(&[0, 1], q.pow(z.h - 1), &mt, z);
    let mut conj = vec![t];
    for _ in 1..n {
        let last = conj.last().unwrap();
        conj.push(poly::powmod(last, z.p as u128, &mt, z));
    }
    // ∏ (Y - t_i) with coefficients in Z/p^h[y]/(mt).
    let mut prod: Vec<Vec<u64>> = vec![vec![1]];
    for ti in &conj {
        let mut next: Vec<Vec<u64>> = vec![Vec::new(); prod.len() + 1];
        for (k, c) in prod.iter().enumerate() {
            next[k + 1] = poly::add(&next[k + 1], c, z);
            let tc = poly::mulmod(c, ti, &mt, z);
            next[k] = poly::sub(&next[k], &tc, z);
        }
        prod = next;
    }
    prod.iter()
        .map(|c| {
            assert!(poly::degree(c).unwrap_or(0) == 0, "Teichmüller product is not constant");
            c.first().copied().unwrap_or(0)
        })
        .collect()
}

#[derive(Debug)]
struct FactorData {
    f: usize,
    stride: usize,
    /// Image of each basis element under the partial Frobenius of this factor.
    frob: Option<Vec<Coeff>>,
}

#[derive(Debug)]
pub struct RingData {
    pub tag: RingTag,
    pub z: Zmod,
    pub dim: usize,
    factors: Vec<FactorData>,
    /// Sparse products of basis elements, indexed `i * dim + j`.
    table: Vec<Vec<(u32, u64)>>,
}

#[derive(Clone, Debug)]
pub struct Ring(Arc<RingData>);

impl PartialEq for Ring {
    fn eq(&self, other: &Ring) -> bool {
        Arc::ptr_eq(&self.0, &other.0) || self.0.tag == other.0.tag
    }
}

impl Eq for Ring {}

/// `y^e mod modulus` for `e < upto`, each from the previous by one shift.
fn reduce_powers(modulus: &[u64], f: usize, upto: usize, z: &Zmod) -> Vec<Vec<u64>> {
    let mut out = Vec::with_capacity(upto);
    let mut cur = vec![0u64; f];
    if f == 1 {
        // y ≡ -modulus[0].
        cur[0] = 1;
        let y = z.neg(modulus[0]);
        for _ in 0..upto {
            out.push(cur.clone());
            cur[0] = z.mul(cur[0], y);
        }
        return out;
    }
    cur[0] = 1;
    for _ in 0..upto {
        out.push(cur.clone());
        let top = cur[f - 1];
        cur.rotate_right(1);
        cur[0] = 0;
        if top != 0 {
            for (c, &m) in cur.iter_mut().zip(modulus) {
                *c = z.sub(*c, z.mul(top, m));
            }
        }
    }
    out
}

impl Ring {
    pub fn new(tag: RingTag) -> Result<Ring> {
        let z = Zmod::new(tag.p, tag.h)?;
        let fp = z.residue();
        let mut seen = std::collections::BTreeSet::new();
        let mut factors = Vec::new();
        let mut stride = 1usize;
        let mut pow_tables = Vec::new();
        for ft in &tag.factors {
            if !seen.insert(ft.alpha.clone()) {
                return Err(Error::MalformedRing(format!("duplicate variable {}", ft.alpha)));
            }
            let f = ft.f as usize;
            if f == 0 || ft.modulus.len() != f + 1 {
                return Err(Error::MalformedRing(format!(
                    "factor {} needs a modulus of degree {}",
                    ft.alpha, ft.f
                )));
            }
            if ft.modulus.iter().any(|&c| c >= z.m) || ft.modulus[f] != 1 {
                return Err(Error::MalformedRing(format!("factor {} modulus is not monic and reduced", ft.alpha)));
            }
            let mp: Vec<u64> = ft.modulus.iter().map(|&c| c % z.p).collect();
            if !poly::is_irreducible(&mp, &fp) {
                return Err(Error::MalformedRing(format!("factor {} modulus is reducible mod p", ft.alpha)));
            }
            let pu = z.p as usize;
            let powers = reduce_powers(&ft.modulus, f, (f - 1).max(1) * pu + 1, &z);
            // The lift y ↦ y^p is well defined iff modulus(y^p) ≡ 0.
            let yp = powers[pu].clone();
            let mut acc: Vec<u64> = Vec::new();
            for &c in ft.modulus.iter().rev() {
                acc = poly::add(&poly::mulmod(&acc, &yp, &ft.modulus, &z), &[c], &z);
            }
            let frob = if acc.is_empty() {
                Some((0..f).map(|i| powers[i * z.p as usize].clone()).collect())
            } else {
                None
            };
            factors.push(FactorData { f, stride, frob });
            pow_tables.push(reduce_powers(&ft.modulus, f, 2 * f - 1, &z));
            stride *= f;
        }
        if stride > 4096 {
            return Err(Error::MalformedRing("coefficient algebra dimension exceeds 4096".into()));
        }
        let dim = stride;
        let mut table = Vec::new();
        if dim > 1 {
            table = vec![Vec::new(); dim * dim];
            for i in 0..dim {
                for j in 0..dim {
                    // Tensor product of per-factor reduced powers.
                    let mut acc: Vec<(usize, u64)> = vec![(0, 1)];
                    for (k, fd) in factors.iter().enumerate() {
                        let ei = (i / fd.stride) % fd.f;
                        let ej = (j / fd.stride) % fd.f;
                        let pw = &pow_tables[k][ei + ej];
                        let mut next = Vec::new();
                        for &(idx, c) in &acc {
                            for (t, &w) in pw.iter().enumerate() {
                                if w != 0 {
                                    next.push((idx + t * fd.stride, z.mul(c, w)));
                                }
                            }
                        }
                        acc = next;
                    }
                    table[i * dim + j] = acc.into_iter().map(|(a, b)| (a as u32, b)).collect();
                }
            }
        }
        Ok(Ring(Arc::new(RingData { tag, z, dim, factors, table })))
    }

    pub fn tag(&self) -> &RingTag {
        &self.0.tag
    }

    pub fn z(&self) -> Zmod {
        self.0.z
    }

    pub fn p(&self) -> u64 {
        self.0.z.p
    }

    pub fn h(&self) -> u32 {
        self.0.z.h
    }

    pub fn dim(&self) -> usize {
        self.0.dim
    }

    pub fn nvars(&self) -> usize {
        self.0.factors.len()
    }

    pub fn var_name(&self, i: usize) -> &str {
        &self.0.tag.factors[i].alpha
    }

    pub fn var_names(&self) -> Vec<String> {
        self.0.tag.factors.iter().map(|f| f.alpha.clone()).collect()
    }

    pub fn var_index(&self, name: &str) -> Result<usize> {
        self.0
            .tag
            .factors
            .iter()
            .position(|f| f.alpha == name)
            .ok_or_else(|| Error::UnknownVariable(name.to_string()))
    }

    pub fn residue_degree(&self, alpha: usize) -> u32 {
        self.0.tag.factors[alpha].f
    }

    /// Residue degrees are all one, so coefficients are Z/p^h.
    pub fn is_base(&self) -> bool {
        self.0.dim == 1
    }

    pub fn zero(&self) -> Coeff {
        vec![0; self.0.dim]
    }

    pub fn one(&self) -> Coeff {
        self.scalar(1)
    }

    pub fn scalar(&self, x: u64) -> Coeff {
        let mut c = self.zero();
        c[0] = x % self.0.z.m;
        c
    }

    pub fn scalar_i64(&self, x: i64) -> Coeff {
        self.scalar(self.0.z.from_i64(x))
    }

    pub fn is_zero(&self, a: &[u64]) -> bool {
        a.iter().all(|&x| x == 0)
    }

    /// The Z/p^h value when `a` lies in the prime subring.
    pub fn as_scalar(&self, a: &[u64]) -> Option<u64> {
        if a[1..].iter().all(|&x| x == 0) {
            Some(a[0])
        } else {
            None
        }
    }

    pub fn add(&self, a: &[u64], b: &[u64]) -> Coeff {
        let z = self.0.z;
        a.iter().zip(b).map(|(&x, &y)| z.add(x, y)).collect()
    }

    pub fn add_assign(&self, a: &mut [u64], b: &[u64]) {
        let z = self.0.z;
        a.iter_mut().zip(b).for_each(|(x, &y)| *x = z.add(*x, y));
    }

    pub fn sub(&self, a: &[u64], b: &[u64]) -> Coeff {
        let z = self.0.z;
        a.iter().zip(b).map(|(&x, &y)| z.sub(x, y)).collect()
    }

    pub fn neg(&self, a: &[u64]) -> Coeff {
        let z = self.0.z;
        a.iter().map(|&x| z.neg(x)).collect()
    }

    pub fn scale(&self, a: &[u64], s: u64) -> Coeff {
        let z = self.0.z;
        a.iter().map(|&x| z.mul(x, s)).collect()
    }

    pub fn mul(&self, a: &[u64], b: &[u64]) -> Coeff {
        let z = self.0.z;
        let d = self.0.dim;
        if d == 1 {
            return vec![z.mul(a[0], b[0])];
        }
        let mut out = vec![0u64; d];
        self.mul_acc(&mut out, a, b);
        out
    }

    /// `out += a * b`.
    pub fn mul_acc(&self, out: &mut [u64], a: &[u64], b: &[u64]) {
        let z = self.0.z;
        let d = self.0.dim;
        if d == 1 {
            out[0] = z.add(out[0], z.mul(a[0], b[0]));
            return;
        }
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            for (j, &y) in b.iter().enumerate() {
                if y == 0 {
                    continue;
                }
                let xy = z.mul(x, y);
                for &(k, c) in &self.0.table[i * d + j] {
                    let k = k as usize;
                    out[k] = z.add(out[k], z.mul(xy, c));
                }
            }
        }
    }

    pub fn pow(&self, a: &[u64], mut e: u64) -> Coeff {
        let mut base = a.to_vec();
        let mut r = self.one();
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(&r, &base);
            }
            base = self.mul(&base, &base);
            e >>= 1;
        }
        r
    }

    /// Matrix of multiplication by `a`; column j is `a · basis_j`.
    pub fn mul_matrix(&self, a: &[u64]) -> Mat {
        let d = self.0.dim;
        let mut m = Mat::zeros(d, d);
        for j in 0..d {
            let mut e = self.zero();
            e[j] = 1;
            let col = self.mul(a, &e);
            for i in 0..d {
                m.set(i, j, col[i]);
            }
        }
        m
    }

    pub fn is_unit(&self, a: &[u64]) -> bool {
        if self.0.dim == 1 {
            return self.0.z.is_unit(a[0]);
        }
        linalg::is_invertible(&self.mul_matrix(a), &self.0.z)
    }

    pub fn inv(&self, a: &[u64]) -> Option<Coeff> {
        let z = self.0.z;
        if self.0.dim == 1 {
            return z.inv(a[0]).map(|x| vec![x]);
        }
        let m = self.mul_matrix(a);
        linalg::solve_zmod(&m, &self.one(), &z, Exec::Sequential).filter(|_| linalg::is_invertible(&m, &z))
    }

    pub fn has_frobenius_lift(&self, alpha: usize) -> bool {
        self.0.factors[alpha].frob.is_some()
    }

    /// Partial Frobenius of factor `alpha`: raises that tensor factor to the p-th power.
    pub fn frob(&self, a: &[u64], alpha: usize) -> Result<Coeff> {
        let fd = self.0.factors.get(alpha).ok_or_else(|| Error::UnknownVariable(format!("#{alpha}")))?;
        let images = fd
            .frob
            .as_ref()
            .ok_or_else(|| Error::UnsupportedLift(self.var_name(alpha).to_string()))?;
        if fd.f == 1 {
            return Ok(a.to_vec());
        }
        let z = self.0.z;
        let mut out = self.zero();
        for (i, &x) in a.iter().enumerate() {
            if x == 0 {
                continue;
            }
            let ei = (i / fd.stride) % fd.f;
            let rest = i - ei * fd.stride;
            for (t, &w) in images[ei].iter().enumerate() {
                if w != 0 {
                    let k = rest + t * fd.stride;
                    out[k] = z.add(out[k], z.mul(x, w));
                }
            }
        }
        Ok(out)
    }

    /// Matrix of the partial Frobenius at `alpha`, columns are basis images.
    pub fn frob_matrix(&self, alpha: usize) -> Result<Mat> {
        let d = self.0.dim;
        let mut m = Mat::zeros(d, d);
        for j in 0..d {
            let mut e = self.zero();
            e[j] = 1;
            let col = self.frob(&e, alpha)?;
            for i in 0..d {
                m.set(i, j, col[i]);
            }
        }
        Ok(m)
    }

    /// Same variables with the residue degree of `alpha` replaced.
    pub fn with_factor_degree(&self, alpha: usize, f: u32) -> Result<Ring> {
        let mut tag = self.0.tag.clone();
        let m = poly::smallest_irreducible(tag.p, f);
        tag.factors[alpha].f = f;
        tag.factors[alpha].modulus = teichmuller_modulus(&m, &self.0.z);
        Ring::new(tag)
    }

    /// Single-factor ring holding only the coefficient field of `alpha`.
    pub fn factor_field(&self, alpha: usize) -> Result<Ring> {
        let mut tag = self.0.tag.clone();
        tag.factors = vec![tag.factors[alpha].clone()];
        Ring::new(tag)
    }

    /// Basis index decomposed into per-factor exponents.
    pub fn decode(&self, idx: usize) -> Vec<usize> {
        self.0.factors.iter().map(|fd| (idx / fd.stride) % fd.f).collect()
    }

    pub fn encode(&self, exps: &[usize]) -> usize {
        self.0.factors.iter().zip(exps).map(|(fd, &e)| fd.stride * e).sum()
    }

    pub fn stride(&self, alpha: usize) -> usize {
        self.0.factors[alpha].stride
    }
}

/// An element of a coefficient universe, carrying its ring.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct TensorCoeff {
    pub ring: Ring,
    pub coords: Coeff,
}

impl TensorCoeff {
    pub fn new(ring: &Ring, coords: Coeff) -> Result<TensorCoeff> {
        if coords.len() != ring.dim() {
            return Err(Error::Malformed(format!("expected {} coordinates", ring.dim())));
        }
        let z = ring.z();
        Ok(TensorCoeff { ring: ring.clone(), coords: coords.into_iter().map(|c| c % z.m).collect() })
    }

    pub fn mul(&self, other: &TensorCoeff) -> TensorCoeff {
        TensorCoeff { ring: self.ring.clone(), coords: self.ring.mul(&self.coords, &other.coords) }
    }

    pub fn add(&self, other: &TensorCoeff) -> TensorCoeff {
        TensorCoeff { ring: self.ring.clone(), coords: self.ring.add(&self.coords, &other.coords) }
    }
}

pub fn partial_frobenius_coeff(a: &TensorCoeff, alpha: &str) -> Result<TensorCoeff> {
    let i = a.ring.var_index(alpha)?;
    Ok(TensorCoeff { ring: a.ring.clone(), coords: a.ring.frob(&a.coords, i)? })
}

/// F_p-basis of the elements fixed by every partial Frobenius.
pub fn fixed_points_coeff(ring: &Ring) -> Result<Vec<TensorCoeff>> {
    if ring.h() != 1 {
        return Err(Error::Unsupported("fixed points are computed in characteristic p".into()));
    }
    let d = ring.dim();
    let mut blocks = Vec::new();
    for a in 0..ring.nvars() {
        blocks.push(ring.frob_matrix(a)?.sub(&Mat::identity(d), &ring.z()));
    }
    let stacked = if blocks.is_empty() { Mat::zeros(0, d) } else { Mat::vstack(&blocks) };
    Ok(linalg::kernel_mod_p(&stacked, ring.p(), Exec::Sequential)
        .into_iter()
        .map(|v| TensorCoeff { ring: ring.clone(), coords: v })
        .collect())
}

/// Ring map given by images of each factor generator.
#[derive(Clone, Debug)]
pub struct RingEmbedding {
    pub from: Ring,
    pub to: Ring,
    /// Column i is the image of basis element i.
    pub matrix: Mat,
}

impl RingEmbedding {
    pub fn apply(&self, a: &[u64]) -> Coeff {
        self.matrix.mul_vec(a, &self.to.z())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn f4_frobenius_squares() {
        let r = Ring::new(RingTag::standard(2, 1, &[("a", 2)]).unwrap()).unwrap();
        let w = vec![0, 1];
        assert_eq!(r.frob(&w, 0).unwrap(), vec![1, 1]);
        assert_eq!(r.mul(&w, &w), vec![1, 1]);
    }

    #[test]
    fn teichmuller_lift_divides_frobenius_polynomial() {
        for (p, h, f) in [(2u64, 2u32, 2u32), (2, 3, 3), (3, 2, 2), (5, 2, 1)] {
            let tag = RingTag::standard(p, h, &[("a", f)]).unwrap();
            let r = Ring::new(tag).unwrap();
            assert!(r.has_frobenius_lift(0), "p={p} h={h} f={f}");
            // σ^f = id on the generator.
            let mut y = r.zero();
            if f > 1 {
                y[1] = 1;
            } else {
                y[0] = 0;
            }
            let mut t = y.clone();
            for _ in 0..f {
                t = r.frob(&t, 0).unwrap();
            }
            assert_eq!(t, y);
        }
    }

    #[test]
    fn non_teichmuller_modulus_has_no_frobenius() {
        // y^2 + 4 is irreducible mod 3 but its roots are not roots of unity mod 9.
        let tag = RingTag { p: 3, h: 2, factors: vec![FactorTag { alpha: "a".into(), f: 2, modulus: vec![4, 0, 1] }] };
        let r = Ring::new(tag).unwrap();
        assert!(!r.has_frobenius_lift(0));
        assert!(matches!(r.frob(&r.one(), 0), Err(Error::UnsupportedLift(_))));
    }
}
