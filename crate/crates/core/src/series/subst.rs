//! Frobenius, Γ and diagonal substitutions.
//!
//! Under `X ↦ (1+X)^p - 1 = X^p (1 + t)` with `t = Σ_{0<i<p} C(p,i) X^{i-p}`,
//! `t` is divisible by p, so `X^e ↦ Σ_{j<h} C(e,j) X^{pe} t^j` is a finite
//! Laurent polynomial for every integer e.

use super::{Exp, Series, Window};
use crate::coeffs::Ring;
use crate::error::{Error, Result};
use crate::zmod::Zmod;

/// Generalized binomial `C(e, j)` mod p^h for any integer e.
pub(crate) fn gen_binomial(z: &Zmod, e: i64, j: u64) -> u64 {
    if e >= 0 {
        z.binomial(e as u64, j)
    } else {
        let b = z.binomial(j + (-e) as u64 - 1, j);
        if j.is_multiple_of(2) {
            b
        } else {
            z.neg(b)
        }
    }
}

/// Lowest exponent reached by the image of `X^e` under the Frobenius lift.
fn frob_exp(e: i64, p: i64, h: i64) -> i64 {
    if (0..h).contains(&e) {
        e
    } else {
        e * p - (h - 1) * (p - 1)
    }
}

pub fn frobenius_window(w: &Window, alpha: usize, p: u64, h: u32) -> Window {
    let mut out = w.clone();
    out.lo[alpha] = frob_exp(w.lo[alpha], p as i64, h as i64);
    out.hi[alpha] = frob_exp(w.hi[alpha], p as i64, h as i64);
    out
}

pub fn diagonal_window(w: &Window) -> Window {
    let sum_lo: i64 = w.lo.iter().sum();
    let hi = (0..w.nvars()).map(|a| w.hi[a] + sum_lo - w.lo[a]).min().unwrap_or(1);
    Window { lo: vec![sum_lo], hi: vec![hi] }
}

/// Powers `t^j` for `j < h`, as (lowest exponent, coefficients).
fn t_powers(z: &Zmod) -> Vec<(i64, Vec<u64>)> {
    let p = z.p as usize;
    // t has exponents 1-p ..= -1.
    let t: Vec<u64> = (1..p).map(|i| z.binomial(p as u64, i as u64)).collect();
    let mut out = vec![(0i64, vec![1u64])];
    for j in 1..z.h as usize {
        let (lo, prev) = &out[j - 1];
        let mut next = vec![0u64; prev.len() + t.len() - 1];
        for (a, &x) in prev.iter().enumerate() {
            for (b, &y) in t.iter().enumerate() {
                next[a + b] = z.add(next[a + b], z.mul(x, y));
            }
        }
        out.push((lo + 1 - p as i64, next));
    }
    out
}

fn poly_mul_trunc(a: &[u64], b: &[u64], n: usize, z: &Zmod) -> Vec<u64> {
    let mut out = vec![0u64; n];
    for (i, &x) in a.iter().enumerate().take(n) {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate().take(n - i) {
            out[i + j] = z.add(out[i + j], z.mul(x, y));
        }
    }
    out
}

fn poly_inv_trunc(a: &[u64], n: usize, z: &Zmod) -> Result<Vec<u64>> {
    let inv0 = z.inv(a[0]).ok_or(Error::NonUnitExponent(0))?;
    let mut out = vec![0u64; n];
    out[0] = inv0;
    for k in 1..n {
        let mut s = 0;
        for i in 1..=k.min(a.len() - 1) {
            s = z.add(s, z.mul(a[i], out[k - i]));
        }
        out[k] = z.neg(z.mul(s, inv0));
    }
    Ok(out)
}

impl Series {
    /// Partial Frobenius φ_α: `X_α ↦ (1+X_α)^p - 1`, coefficients by σ_α.
    pub fn subst_frobenius(&self, alpha: usize) -> Result<Series> {
        let ring = self.ring();
        if alpha >= ring.nvars() {
            return Err(Error::UnknownVariable(format!("#{alpha}")));
        }
        let z = ring.z();
        let w = frobenius_window(self.window(), alpha, z.p, z.h);
        let mut out = Series::zero(ring, w)?;
        let tp = t_powers(&z);
        let p = z.p as i64;
        for (e, c) in self.terms() {
            let c = ring.frob(c, alpha)?;
            let ea = e[alpha];
            for (j, (tlo, tc)) in tp.iter().enumerate() {
                let b = gen_binomial(&z, ea, j as u64);
                if b == 0 {
                    continue;
                }
                for (k, &tk) in tc.iter().enumerate() {
                    let x = ea * p + tlo + k as i64;
                    if x >= out.window().hi[alpha] || tk == 0 {
                        continue;
                    }
                    let mut e2: Exp = e.clone();
                    e2[alpha] = x;
                    let s = z.mul(b, tk);
                    out.add_term(e2, &ring.scale(&c, s));
                }
            }
        }
        Ok(out)
    }

    /// Γ_α with parameter c: `X_α ↦ (1+X_α)^c - 1`. The window is unchanged.
    pub fn subst_gamma(&self, alpha: usize, c: i64) -> Result<Series> {
        let ring = self.ring();
        if alpha >= ring.nvars() {
            return Err(Error::UnknownVariable(format!("#{alpha}")));
        }
        let z = ring.z();
        if c.rem_euclid(z.p as i64) == 0 {
            return Err(Error::NonUnitExponent(c));
        }
        if c == 1 || self.is_zero() {
            return Ok(self.clone());
        }
        let (lo, hi) = (self.window().lo[alpha], self.window().hi[alpha]);
        let n = (hi - lo) as usize;
        // (1+X)^c - 1 = X·v with v(0) = c.
        let v: Vec<u64> = (0..n).map(|k| gen_binomial(&z, c, k as u64 + 1)).collect();
        let vinv = poly_inv_trunc(&v, n, &z).map_err(|_| Error::NonUnitExponent(c))?;
        let emin = self.terms().keys().map(|e| e[alpha]).min().unwrap();
        let emax = self.terms().keys().map(|e| e[alpha]).max().unwrap();
        let mut powers = std::collections::BTreeMap::new();
        let mut acc = vec![0u64; n];
        acc[0] = 1;
        // Powers v^e for every e in [emin, emax].
        let mut pos = acc.clone();
        for e in 0..=emax.max(0) {
            if e >= emin {
                powers.insert(e, pos.clone());
            }
            pos = poly_mul_trunc(&pos, &v, n, &z);
        }
        let mut neg = acc;
        for e in (emin.min(0)..0).rev() {
            neg = poly_mul_trunc(&neg, &vinv, n, &z);
            if e <= emax {
                powers.insert(e, neg.clone());
            }
        }
        let mut out = Series::zero(ring, self.window().clone())?;
        for (e, cf) in self.terms() {
            let ea = e[alpha];
            let pw = &powers[&ea];
            for (k, &b) in pw.iter().enumerate() {
                let x = ea + k as i64;
                if x >= hi {
                    break;
                }
                if b == 0 {
                    continue;
                }
                let mut e2 = e.clone();
                e2[alpha] = x;
                out.add_term(e2, &ring.scale(cf, b));
            }
        }
        Ok(out)
    }

    /// Composite Frobenius φ_s over all variables.
    pub fn subst_phi_s(&self) -> Result<Series> {
        let mut f = self.clone();
        for a in 0..self.ring().nvars() {
            f = f.subst_frobenius(a)?;
        }
        Ok(f)
    }

    /// `X_α ↦ X` for every α, into a one-variable ring over the same Z/p^h.
    pub fn diagonal(&self, target: &Ring) -> Result<Series> {
        let ring = self.ring();
        if !ring.is_base() || !target.is_base() || target.nvars() != 1 || target.z() != ring.z() {
            return Err(Error::Unsupported("diagonal restriction needs Z/p^h coefficients".into()));
        }
        let w = diagonal_window(self.window());
        let w = Window::new(w.lo, w.hi)?;
        let mut out = Series::zero(target, w)?;
        for (e, c) in self.terms() {
            let x: i64 = e.iter().sum();
            if x < out.window().hi[0] {
                out.add_term(vec![x], c);
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::RingTag;

    fn ring(p: u64, h: u32, n: usize) -> Ring {
        let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        Ring::new(RingTag::base(p, h, &refs).unwrap()).unwrap()
    }

    fn uni(r: &Ring, lo: i64, hi: i64, terms: &[(i64, u64)]) -> Series {
        Series::from_terms(r, Window::new(vec![lo], vec![hi]).unwrap(), terms.iter().map(|&(e, c)| (vec![e], vec![c]))).unwrap()
    }

    #[test]
    fn frobenius_lift_mod_four() {
        let r = ring(2, 2, 1);
        let x = uni(&r, 0, 8, &[(1, 1)]);
        let y = x.subst_frobenius(0).unwrap();
        assert!(y.agrees_with(&uni(&r, 0, 8, &[(1, 2), (2, 1)])));
    }

    #[test]
    fn negative_powers_under_lifted_frobenius() {
        // φ(X^{-1}) · φ(X) = 1.
        let r = ring(3, 2, 1);
        let a = uni(&r, -1, 10, &[(-1, 1)]).subst_frobenius(0).unwrap();
        let b = uni(&r, 0, 10, &[(1, 1)]).subst_frobenius(0).unwrap();
        let prod = a.mul(&b).unwrap();
        assert!(prod.agrees_with(&uni(&r, prod.window().lo[0], prod.window().hi[0], &[(0, 1)])));
    }

    #[test]
    fn gamma_binomials() {
        let r = ring(3, 1, 1);
        let x = uni(&r, 0, 8, &[(1, 1)]);
        assert!(x.subst_gamma(0, 2).unwrap().agrees_with(&uni(&r, 0, 8, &[(1, 2), (2, 1)])));
        let r2 = ring(2, 1, 1);
        let x = uni(&r2, 0, 8, &[(1, 1)]);
        assert!(x.subst_gamma(0, 3).unwrap().agrees_with(&uni(&r2, 0, 8, &[(1, 1), (2, 1), (3, 1)])));
        assert_eq!(x.subst_gamma(0, 4), Err(Error::NonUnitExponent(4)));
    }

    #[test]
    fn gamma_parameters_multiply() {
        let r = ring(5, 2, 1);
        let f = uni(&r, -2, 9, &[(-2, 3), (0, 1), (3, 7)]);
        let g = f.subst_gamma(0, -1).unwrap().subst_gamma(0, -1).unwrap();
        assert!(g.agrees_with(&f));
        let a = f.subst_gamma(0, 2).unwrap().subst_gamma(0, -3).unwrap();
        assert!(a.agrees_with(&f.subst_gamma(0, -6).unwrap()));
    }
}
