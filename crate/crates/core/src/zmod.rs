//! Scalars in Z/p^h stored as reduced `u64` residues.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Zmod {
    pub p: u64,
    pub h: u32,
    pub m: u64,
}

pub fn is_prime(n: u64) -> bool {
    if n < 2 {
        return false;
    }
    let mut d = 2;
    while d * d <= n {
        if n.is_multiple_of(d) {
            return false;
        }
        d += 1;
    }
    true
}

impl Zmod {
    pub fn new(p: u64, h: u32) -> Result<Self> {
        if !is_prime(p) {
            return Err(Error::MalformedRing(format!("{p} is not prime")));
        }
        if h == 0 {
            return Err(Error::MalformedRing("h must be positive".into()));
        }
        let mut m: u64 = 1;
        for _ in 0..h {
            m = m
                .checked_mul(p)
                .filter(|&m| m < (1 << 31))
                .ok_or_else(|| Error::MalformedRing("p^h exceeds 2^31".into()))?;
        }
        Ok(Zmod { p, h, m })
    }

    /// The residue field F_p.
    pub fn residue(&self) -> Zmod {
        Zmod { p: self.p, h: 1, m: self.p }
    }

    #[inline]
    pub fn add(&self, a: u64, b: u64) -> u64 {
        let s = a + b;
        if s >= self.m {
            s - self.m
        } else {
            s
        }
    }

    #[inline]
    pub fn sub(&self, a: u64, b: u64) -> u64 {
        if a >= b {
            a - b
        } else {
            a + self.m - b
        }
    }

    #[inline]
    pub fn neg(&self, a: u64) -> u64 {
        if a == 0 {
            0
        } else {
            self.m - a
        }
    }

    #[inline]
    pub fn mul(&self, a: u64, b: u64) -> u64 {
        a * b % self.m
    }

    pub fn from_i64(&self, x: i64) -> u64 {
        x.rem_euclid(self.m as i64) as u64
    }

    pub fn to_signed(&self, x: u64) -> i64 {
        if x > self.m / 2 {
            x as i64 - self.m as i64
        } else {
            x as i64
        }
    }

    pub fn pow(&self, mut a: u64, mut e: u64) -> u64 {
        let mut r = 1 % self.m;
        a %= self.m;
        while e > 0 {
            if e & 1 == 1 {
                r = self.mul(r, a);
            }
            a = self.mul(a, a);
            e >>= 1;
        }
        r
    }

    /// p-adic valuation, `h` for zero.
    pub fn val(&self, a: u64) -> u32 {
        if a == 0 {
            return self.h;
        }
        let mut v = 0;
        let mut x = a;
        while x.is_multiple_of(self.p) {
            x /= self.p;
            v += 1;
        }
        v
    }

    pub fn is_unit(&self, a: u64) -> bool {
        !a.is_multiple_of(self.p)
    }

    pub fn inv(&self, a: u64) -> Option<u64> {
        if !self.is_unit(a) {
            return None;
        }
        let (mut r0, mut r1) = (self.m as i64, a as i64);
        let (mut t0, mut t1) = (0i64, 1i64);
        while r1 != 0 {
            let q = r0 / r1;
            (r0, r1) = (r1, r0 - q * r1);
            (t0, t1) = (t1, t0 - q * t1);
        }
        Some(self.from_i64(t0))
    }

    /// Exact division by p^k of a residue with valuation at least k.
    pub fn div_p_pow(&self, a: u64, k: u32) -> u64 {
        let pk = self.p.pow(k);
        debug_assert_eq!(a % pk, 0);
        a / pk
    }

    pub fn p_pow(&self, k: u32) -> u64 {
        if k >= self.h {
            0
        } else {
            self.p.pow(k)
        }
    }

    /// Binomial coefficient C(n, k) reduced mod p^h, for n possibly large.
    pub fn binomial(&self, n: u64, k: u64) -> u64 {
        if k > n {
            return 0;
        }
        let k = k.min(n - k);
        // Track p-part separately so exact division stays valid.
        let mut unit = 1u64;
        let mut vp: u64 = 0;
        for i in 0..k {
            let mut num = n - i;
            let mut den = i + 1;
            while num.is_multiple_of(self.p) {
                num /= self.p;
                vp += 1;
            }
            while den % self.p == 0 {
                den /= self.p;
                vp -= 1;
            }
            unit = self.mul(unit, num % self.m);
            unit = self.mul(unit, self.inv(den % self.m).expect("unit denominator"));
        }
        if vp >= self.h as u64 {
            0
        } else {
            self.mul(unit, self.p.pow(vp as u32))
        }
    }
}
