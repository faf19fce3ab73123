//! Truncated multivariate Laurent series over a coefficient universe.
//!
//! A series is known modulo the ideal `(X_α^{hi_α})_α` and its true support
//! is bounded below by `lo` componentwise. Stored terms always lie in the box
//! `[lo, hi)`. Every operation states its result window; results are exact on
//! that window. Decisions such as valuations and unit tests read the stored
//! terms only.

mod subst;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::coeffs::{Coeff, Ring, RingEmbedding};
use crate::error::{Error, Result};

pub use subst::{diagonal_window, frobenius_window};

pub type Exp = Vec<i64>;

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Window {
    pub lo: Vec<i64>,
    pub hi: Vec<i64>,
}

impl Window {
    pub fn new(lo: Vec<i64>, hi: Vec<i64>) -> Result<Window> {
        if lo.len() != hi.len() {
            return Err(Error::Malformed("window bounds differ in length".into()));
        }
        if lo.iter().zip(&hi).any(|(l, h)| l >= h) {
            return Err(Error::EmptyResultWindow);
        }
        Ok(Window { lo, hi })
    }

    /// The box `[lo, hi)` in every variable.
    pub fn uniform(n: usize, lo: i64, hi: i64) -> Window {
        Window { lo: vec![lo; n], hi: vec![hi; n] }
    }

    pub fn nvars(&self) -> usize {
        self.lo.len()
    }

    pub fn contains(&self, e: &[i64]) -> bool {
        e.iter().zip(&self.lo).zip(&self.hi).all(|((x, l), h)| l <= x && x < h)
    }

    pub fn below_hi(&self, e: &[i64]) -> bool {
        e.iter().zip(&self.hi).all(|(x, h)| x < h)
    }

    pub fn intersect(&self, other: &Window) -> Result<Window> {
        let lo = self.lo.iter().zip(&other.lo).map(|(a, b)| *a.max(b)).collect();
        let hi = self.hi.iter().zip(&other.hi).map(|(a, b)| *a.min(b)).collect();
        Window::new(lo, hi)
    }

    /// Number of lattice points in the box.
    pub fn volume(&self) -> usize {
        self.lo.iter().zip(&self.hi).map(|(l, h)| (h - l) as usize).product()
    }

    /// Lattice points of the box, first variable varying fastest.
    pub fn points(&self) -> Vec<Exp> {
        let n = self.nvars();
        let mut out = Vec::with_capacity(self.volume());
        let mut cur = self.lo.clone();
        if n == 0 {
            return vec![Vec::new()];
        }
        loop {
            out.push(cur.clone());
            let mut i = 0;
            loop {
                cur[i] += 1;
                if cur[i] < self.hi[i] {
                    break;
                }
                cur[i] = self.lo[i];
                i += 1;
                if i == n {
                    return out;
                }
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Series {
    ring: Ring,
    window: Window,
    terms: BTreeMap<Exp, Coeff>,
}

/// Outcome of the unit test in E_Δ: `f = X^m · u` with `u(0)` a unit.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct UnitWitness {
    pub unit: bool,
    pub monomial: Option<Exp>,
}

/// The product norm `p^{-v}`; `v = None` encodes the zero series.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub struct ProdNorm {
    pub p: u64,
    pub v: Option<i64>,
}

impl ProdNorm {
    pub fn value(&self) -> f64 {
        match self.v {
            None => 0.0,
            Some(v) => (self.p as f64).powi(-(v as i32)),
        }
    }

    /// Exact comparison `self ≤ a·b`.
    pub fn le_product(&self, a: &ProdNorm, b: &ProdNorm) -> bool {
        match (self.v, a.v, b.v) {
            (None, _, _) => true,
            (Some(_), None, _) | (Some(_), _, None) => false,
            (Some(s), Some(x), Some(y)) => s >= x + y,
        }
    }
}

impl Series {
    pub fn zero(ring: &Ring, window: Window) -> Result<Series> {
        if window.nvars() != ring.nvars() {
            return Err(Error::Malformed("window arity differs from the ring".into()));
        }
        Ok(Series { ring: ring.clone(), window, terms: BTreeMap::new() })
    }

    pub fn from_terms(ring: &Ring, window: Window, terms: impl IntoIterator<Item = (Exp, Coeff)>) -> Result<Series> {
        let mut s = Series::zero(ring, window)?;
        for (e, c) in terms {
            if c.len() != ring.dim() {
                return Err(Error::Malformed(format!("coefficient at {e:?} has wrong length")));
            }
            if !s.window.contains(&e) {
                return Err(Error::Malformed(format!("term {e:?} lies outside the window")));
            }
            let z = ring.z();
            let c: Coeff = c.into_iter().map(|x| x % z.m).collect();
            s.add_term(e, &c);
        }
        Ok(s)
    }

    /// Constant `c` in the prime subring.
    pub fn constant(ring: &Ring, window: Window, c: i64) -> Result<Series> {
        let zero = vec![0; ring.nvars()];
        if !window.contains(&zero) {
            return Series::zero(ring, window);
        }
        Series::from_terms(ring, window, [(zero, ring.scalar_i64(c))])
    }

    pub fn one(ring: &Ring, window: Window) -> Result<Series> {
        Series::constant(ring, window, 1)
    }

    pub fn monomial(ring: &Ring, window: Window, e: Exp, c: Coeff) -> Result<Series> {
        if !window.below_hi(&e) {
            return Series::zero(ring, window);
        }
        Series::from_terms(ring, window, [(e, c)])
    }

    /// The variable `X_α`.
    pub fn var(ring: &Ring, window: Window, alpha: usize) -> Result<Series> {
        let mut e = vec![0; ring.nvars()];
        e[alpha] = 1;
        Series::monomial(ring, window, e, ring.one())
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn terms(&self) -> &BTreeMap<Exp, Coeff> {
        &self.terms
    }

    pub fn nterms(&self) -> usize {
        self.terms.len()
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn coeff(&self, e: &[i64]) -> Coeff {
        self.terms.get(e).cloned().unwrap_or_else(|| self.ring.zero())
    }

    fn add_term(&mut self, e: Exp, c: &[u64]) {
        if self.ring.is_zero(c) {
            return;
        }
        let ring = &self.ring;
        match self.terms.entry(e) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c.to_vec());
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                ring.add_assign(o.get_mut(), c);
                if ring.is_zero(o.get()) {
                    o.remove();
                }
            }
        }
    }

    fn check_ring(&self, other: &Series) -> Result<()> {
        if self.ring != other.ring || self.window.nvars() != other.window.nvars() {
            return Err(Error::RingMismatch);
        }
        Ok(())
    }

    /// Same series with a smaller window; terms outside are discarded.
    pub fn truncate(&self, window: &Window) -> Result<Series> {
        let w = self.window.intersect(window)?;
        let terms = self.terms.iter().filter(|(e, _)| w.contains(e)).map(|(e, c)| (e.clone(), c.clone())).collect();
        Ok(Series { ring: self.ring.clone(), window: w, terms })
    }

    /// Replaces the window, keeping terms inside it. The caller vouches for `lo`.
    pub fn with_window(&self, window: Window) -> Series {
        let terms = self.terms.iter().filter(|(e, _)| window.contains(e)).map(|(e, c)| (e.clone(), c.clone())).collect();
        Series { ring: self.ring.clone(), window, terms }
    }

    /// Raises `lo` to the componentwise minimum of the stored support; a zero
    /// series gets `lo = hi - 1`. Valid under the known-part reading, where the
    /// unknown tail is assumed not to undercut the stored terms.
    pub fn tighten(&self) -> Series {
        let lo = match self.support_min() {
            Some(m) => m,
            None => self.window.hi.iter().map(|h| h - 1).collect(),
        };
        let lo = lo.iter().zip(&self.window.lo).map(|(a, b)| *a.max(b)).collect();
        Series { ring: self.ring.clone(), window: Window { lo, hi: self.window.hi.clone() }, terms: self.terms.clone() }
    }

    /// Equality on the intersection of the two windows.
    pub fn agrees_with(&self, other: &Series) -> bool {
        if self.ring != other.ring {
            return false;
        }
        let Ok(w) = self.window.intersect(&other.window) else {
            return true;
        };
        let a = self.terms.iter().filter(|(e, _)| w.contains(e));
        let b = other.terms.iter().filter(|(e, _)| w.contains(e));
        a.eq(b)
    }

    /// First exponent where the two series differ on the common window.
    pub fn first_difference(&self, other: &Series) -> Option<Exp> {
        let w = self.window.intersect(&other.window).ok()?;
        for (e, c) in self.terms.iter().filter(|(e, _)| w.contains(e)) {
            if other.terms.get(e) != Some(c) {
                return Some(e.clone());
            }
        }
        other.terms.keys().find(|e| w.contains(e) && !self.terms.contains_key(*e)).cloned()
    }

    pub fn add(&self, other: &Series) -> Result<Series> {
        self.check_ring(other)?;
        let lo = self.window.lo.iter().zip(&other.window.lo).map(|(a, b)| *a.min(b)).collect();
        let hi = self.window.hi.iter().zip(&other.window.hi).map(|(a, b)| *a.min(b)).collect();
        let mut out = Series::zero(&self.ring, Window::new(lo, hi)?)?;
        for (e, c) in self.terms.iter().chain(other.terms.iter()) {
            if out.window.below_hi(e) {
                out.add_term(e.clone(), c);
            }
        }
        Ok(out)
    }

    pub fn neg(&self) -> Series {
        let terms = self.terms.iter().map(|(e, c)| (e.clone(), self.ring.neg(c))).collect();
        Series { ring: self.ring.clone(), window: self.window.clone(), terms }
    }

    pub fn sub(&self, other: &Series) -> Result<Series> {
        self.add(&other.neg())
    }

    /// Multiplication by a constant coefficient.
    pub fn scale(&self, c: &[u64]) -> Series {
        let mut out = Series { ring: self.ring.clone(), window: self.window.clone(), terms: BTreeMap::new() };
        for (e, x) in &self.terms {
            let y = self.ring.mul(x, c);
            out.add_term(e.clone(), &y);
        }
        out
    }

    /// Multiplication by `X^m`, shifting the window.
    pub fn shift(&self, m: &[i64]) -> Series {
        let add = |e: &[i64]| e.iter().zip(m).map(|(a, b)| a + b).collect::<Exp>();
        Series {
            ring: self.ring.clone(),
            window: Window { lo: add(&self.window.lo), hi: add(&self.window.hi) },
            terms: self.terms.iter().map(|(e, c)| (add(e), c.clone())).collect(),
        }
    }

    pub fn mul_window(a: &Window, b: &Window) -> Result<Window> {
        let lo: Vec<i64> = a.lo.iter().zip(&b.lo).map(|(x, y)| x + y).collect();
        let hi = (0..a.nvars()).map(|i| (a.hi[i] + b.lo[i]).min(b.hi[i] + a.lo[i])).collect();
        Window::new(lo, hi)
    }

    pub fn mul(&self, other: &Series) -> Result<Series> {
        self.check_ring(other)?;
        let w = Series::mul_window(&self.window, &other.window)?;
        let mut out = Series::zero(&self.ring, w)?;
        let ring = &self.ring;
        let mut e = vec![0i64; self.window.nvars()];
        for (ea, ca) in &self.terms {
            for (eb, cb) in &other.terms {
                let mut inside = true;
                for i in 0..e.len() {
                    e[i] = ea[i] + eb[i];
                    if e[i] >= out.window.hi[i] {
                        inside = false;
                        break;
                    }
                }
                if inside {
                    let c = ring.mul(ca, cb);
                    out.add_term(e.clone(), &c);
                }
            }
        }
        Ok(out)
    }

    pub fn pow(&self, k: u64) -> Result<Series> {
        let mut r = Series::one(&self.ring, self.window.clone())?;
        let mut base = self.clone();
        let mut k = k;
        let mut first = true;
        while k > 0 {
            if k & 1 == 1 {
                r = if first { base.clone() } else { r.mul(&base)? };
                first = false;
            }
            k >>= 1;
            if k > 0 {
                base = base.mul(&base)?;
            }
        }
        Ok(r)
    }

    /// Minimum α-exponent over the stored support; `None` for zero.
    pub fn val(&self, alpha: usize) -> Option<i64> {
        self.terms.keys().map(|e| e[alpha]).min()
    }

    /// Componentwise minimum of the stored support.
    pub fn support_min(&self) -> Option<Exp> {
        let mut it = self.terms.keys();
        let mut m = it.next()?.clone();
        for e in it {
            for (a, b) in m.iter_mut().zip(e) {
                *a = (*a).min(*b);
            }
        }
        Some(m)
    }

    /// `p^{-v}` with v the minimal total degree of the support.
    pub fn prod_norm(&self) -> Result<ProdNorm> {
        if self.terms.keys().any(|e| e.iter().any(|&x| x < 0)) {
            return Err(Error::NegativeSupport);
        }
        let v = self.terms.keys().map(|e| e.iter().sum::<i64>()).min();
        Ok(ProdNorm { p: self.ring.p(), v })
    }

    /// Unit test in E_Δ: the reduction mod p must be a monomial times a unit of
    /// `E^+_Δ`, i.e. its coefficient at its own support minimum is a unit.
    pub fn is_unit_in_edelta(&self) -> UnitWitness {
        let p = self.ring.p();
        let mut red = self.terms.iter().filter(|(_, c)| c.iter().any(|&x| x % p != 0)).map(|(e, _)| e);
        let Some(first) = red.next() else {
            return UnitWitness { unit: false, monomial: None };
        };
        let mut m = first.clone();
        for e in red {
            for (a, b) in m.iter_mut().zip(e) {
                *a = (*a).min(*b);
            }
        }
        if self.ring.is_unit(&self.coeff(&m)) {
            UnitWitness { unit: true, monomial: Some(m) }
        } else {
            UnitWitness { unit: false, monomial: None }
        }
    }

    /// Inverse of a unit `X^c·u`; result window `[-c, hi - 2c)` when the
    /// support of `X^{-c}u` is integral.
    ///
    /// Otherwise (only for h > 1) `X^{-c}u = a + b` with a integral and b
    /// divisible by p, and `u^{-1} = a^{-1} Σ_{k<h} (-a^{-1}b)^k`.
    pub fn invert(&self) -> Result<Series> {
        let w = self.is_unit_in_edelta();
        let Some(c) = w.monomial else {
            let m = self.support_min();
            return Err(Error::NotAUnit(match m {
                None => "zero series".into(),
                Some(m) => format!("reduction mod p at {m:?} is not a monomial times a unit"),
            }));
        };
        let neg_c: Exp = c.iter().map(|x| -x).collect();
        let u = self.shift(&neg_c);
        if u.terms.keys().all(|e| e.iter().all(|&x| x >= 0)) {
            return self.invert_integral(&c);
        }
        let mut a = u.clone();
        let mut b = u.clone();
        a.terms.retain(|e, _| e.iter().all(|&x| x >= 0));
        b.terms.retain(|e, _| e.iter().any(|&x| x < 0));
        let a_inv = a.shift(&c).with_window(self.window.clone()).invert_integral(&c)?.shift(&c);
        let t = a_inv.mul(&b.tighten())?.neg().tighten();
        let one = Series::one(&self.ring, a_inv.window.clone())?;
        let mut acc = one.clone();
        for _ in 1..self.ring.h() {
            acc = one.add(&t.mul(&acc)?)?.tighten();
        }
        Ok(a_inv.mul(&acc)?.shift(&neg_c).tighten())
    }

    fn invert_integral(&self, c: &[i64]) -> Result<Series> {
        let n = c.len();
        let neg_c: Exp = c.iter().map(|x| -x).collect();
        let u = self.shift(&neg_c);
        let uh: Vec<i64> = (0..n).map(|i| self.window.hi[i] - c[i]).collect();
        let box_w = Window::new(vec![0; n], uh.clone())?;
        let u = u.with_window(box_w.clone());
        let u0 = u.coeff(&vec![0; n]);
        let inv0 = self.ring.inv(&u0).ok_or_else(|| Error::NotAUnit("constant term".into()))?;
        let one = Series::one(&self.ring, box_w.clone())?;
        let mut v = Series::from_terms(&self.ring, box_w.clone(), [(vec![0; n], inv0)])?;
        // Newton: v ← v + v(1 - uv); the error ideal squares each round.
        let max_deg: i64 = uh.iter().sum::<i64>() + 1;
        let mut prec = 1i64;
        loop {
            let uv = u.mul(&v)?.with_window(box_w.clone());
            let err = one.sub(&uv)?.with_window(box_w.clone());
            if err.is_zero() {
                break;
            }
            v = v.add(&v.mul(&err)?)?.with_window(box_w.clone());
            prec *= 2;
            if prec > 2 * max_deg + 2 * i64::from(self.ring.h()) + 2 {
                return Err(Error::NotAUnit("Newton iteration did not converge".into()));
            }
        }
        let out_w = Window::new(neg_c.clone(), (0..n).map(|i| self.window.hi[i] - 2 * c[i]).collect())?;
        Ok(v.shift(&neg_c).with_window(out_w))
    }

    /// Splits by the α-exponent into `(> 0, = 0, < 0)` parts.
    pub fn alpha_parts(&self, alpha: usize) -> (Series, Series, Series) {
        let mut parts = [self.clone(), self.clone(), self.clone()];
        for p in parts.iter_mut() {
            p.terms.clear();
        }
        for (e, c) in &self.terms {
            let k = match e[alpha].cmp(&0) {
                std::cmp::Ordering::Greater => 0,
                std::cmp::Ordering::Equal => 1,
                std::cmp::Ordering::Less => 2,
            };
            parts[k].terms.insert(e.clone(), c.clone());
        }
        let [a, b, c] = parts;
        (a, b, c)
    }

    /// Coefficientwise image under a coefficient-ring map.
    pub fn map_coeffs(&self, emb: &RingEmbedding) -> Result<Series> {
        if emb.from != self.ring {
            return Err(Error::RingMismatch);
        }
        let mut out = Series::zero(&emb.to, self.window.clone())?;
        for (e, c) in &self.terms {
            out.add_term(e.clone(), &emb.apply(c));
        }
        Ok(out)
    }

    /// Applies `f` to every coefficient.
    pub fn map_coeff_fn(&self, f: impl Fn(&[u64]) -> Result<Coeff>) -> Result<Series> {
        let mut out = Series::zero(&self.ring, self.window.clone())?;
        for (e, c) in &self.terms {
            out.add_term(e.clone(), &f(c)?);
        }
        Ok(out)
    }

    /// Reinterprets the series over a ring with the same coefficient algebra
    /// and arity, e.g. after renaming variables.
    pub fn recast(&self, ring: &Ring) -> Result<Series> {
        if ring.dim() != self.ring.dim() || ring.nvars() != self.ring.nvars() || ring.z() != self.ring.z() {
            return Err(Error::RingMismatch);
        }
        Ok(Series { ring: ring.clone(), window: self.window.clone(), terms: self.terms.clone() })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::RingTag;

    fn ring(p: u64, n: usize) -> Ring {
        let names: Vec<String> = (1..=n).map(|i| format!("x{i}")).collect();
        let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
        Ring::new(RingTag::base(p, 1, &refs).unwrap()).unwrap()
    }

    fn s(r: &Ring, w: &Window, terms: &[(&[i64], u64)]) -> Series {
        Series::from_terms(r, w.clone(), terms.iter().map(|(e, c)| (e.to_vec(), vec![*c]))).unwrap()
    }

    #[test]
    fn char_two_square() {
        let r = ring(2, 1);
        let w = Window::uniform(1, 0, 8);
        let f = s(&r, &w, &[(&[0], 1), (&[1], 1)]);
        let g = f.mul(&f).unwrap();
        assert!(g.agrees_with(&s(&r, &w, &[(&[0], 1), (&[2], 1)])));
    }

    #[test]
    fn geometric_series_inverse() {
        let r = ring(2, 1);
        let w = Window::uniform(1, 0, 4);
        let f = s(&r, &w, &[(&[0], 1), (&[1], 1)]);
        let g = f.invert().unwrap();
        assert_eq!(g.window().hi, vec![4]);
        assert!(g.agrees_with(&s(&r, &w, &[(&[0], 1), (&[1], 1), (&[2], 1), (&[3], 1)])));
    }

    #[test]
    fn sum_of_variables_is_not_a_unit() {
        let r = ring(3, 2);
        let w = Window::uniform(2, 0, 6);
        let f = s(&r, &w, &[(&[1, 0], 1), (&[0, 1], 1)]);
        assert!(!f.is_unit_in_edelta().unit);
        assert!(matches!(f.invert(), Err(Error::NotAUnit(_))));
        let g = s(&r, &w, &[(&[1, 1], 1), (&[2, 1], 1)]);
        assert_eq!(g.is_unit_in_edelta().monomial, Some(vec![1, 1]));
    }

    #[test]
    fn prod_norm_is_minimal_total_degree() {
        let r = ring(5, 2);
        let w = Window::uniform(2, 0, 6);
        let f = s(&r, &w, &[(&[1, 1], 1), (&[3, 0], 1)]);
        assert_eq!(f.prod_norm().unwrap().v, Some(2));
        let neg = s(&r, &Window::uniform(2, -1, 6), &[(&[-1, 0], 1)]);
        assert_eq!(neg.prod_norm(), Err(Error::NegativeSupport));
    }
}

#[cfg(test)]
mod unit_tests_h2 {
    use super::*;
    use crate::coeffs::RingTag;

    #[test]
    fn p_divisible_leading_term_is_still_a_unit() {
        // 2X^{-2} + 3X^{-1} reduces to X^{-1} mod 2.
        let r = Ring::new(RingTag::base(2, 2, &["x"]).unwrap()).unwrap();
        let w = Window::new(vec![-4], vec![8]).unwrap();
        let f = Series::from_terms(&r, w, [(vec![-2], vec![2]), (vec![-1], vec![3])]).unwrap();
        let wit = f.is_unit_in_edelta();
        assert_eq!(wit.monomial, Some(vec![-1]));
        let g = f.invert().unwrap();
        let one = f.mul(&g).unwrap();
        assert!(one.terms().iter().all(|(e, c)| (e == &vec![0] && c == &vec![1]) || c == &vec![0]));
        assert_eq!(one.coeff(&[0]), vec![1]);
    }
}
