//! Dense univariate polynomials with coefficients in Z/p^h, low degree first.

use crate::zmod::Zmod;

pub type Poly = Vec<u64>;

pub fn trim(mut a: Poly) -> Poly {
    while a.last() == Some(&0) {
        a.pop();
    }
    a
}

pub fn degree(a: &[u64]) -> Option<usize> {
    a.iter().rposition(|&c| c != 0)
}

pub fn add(a: &[u64], b: &[u64], z: &Zmod) -> Poly {
    let n = a.len().max(b.len());
    trim((0..n).map(|i| z.add(*a.get(i).unwrap_or(&0), *b.get(i).unwrap_or(&0))).collect())
}

pub fn sub(a: &[u64], b: &[u64], z: &Zmod) -> Poly {
    let n = a.len().max(b.len());
    trim((0..n).map(|i| z.sub(*a.get(i).unwrap_or(&0), *b.get(i).unwrap_or(&0))).collect())
}

pub fn mul(a: &[u64], b: &[u64], z: &Zmod) -> Poly {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let mut out = vec![0u64; a.len() + b.len() - 1];
    for (i, &x) in a.iter().enumerate() {
        if x == 0 {
            continue;
        }
        for (j, &y) in b.iter().enumerate() {
            out[i + j] = z.add(out[i + j], z.mul(x, y));
        }
    }
    trim(out)
}

/// Remainder modulo a polynomial whose leading coefficient is a unit.
pub fn rem(a: &[u64], m: &[u64], z: &Zmod) -> Poly {
    let dm = degree(m).expect("nonzero modulus");
    let lead_inv = z.inv(m[dm]).expect("unit leading coefficient");
    let mut r = trim(a.to_vec());
    while let Some(dr) = degree(&r) {
        if dr < dm {
            break;
        }
        let t = z.mul(r[dr], lead_inv);
        for i in 0..=dm {
            r[dr - dm + i] = z.sub(r[dr - dm + i], z.mul(t, m[i]));
        }
        r = trim(r);
    }
    r
}

pub fn divrem(a: &[u64], m: &[u64], z: &Zmod) -> (Poly, Poly) {
    let dm = degree(m).expect("nonzero modulus");
    let lead_inv = z.inv(m[dm]).expect("unit leading coefficient");
    let mut r = trim(a.to_vec());
    let mut q = vec![0u64; r.len().saturating_sub(dm).max(1)];
    while let Some(dr) = degree(&r) {
        if dr < dm {
            break;
        }
        let t = z.mul(r[dr], lead_inv);
        q[dr - dm] = t;
        for i in 0..=dm {
            r[dr - dm + i] = z.sub(r[dr - dm + i], z.mul(t, m[i]));
        }
        r = trim(r);
    }
    (trim(q), r)
}

pub fn mulmod(a: &[u64], b: &[u64], m: &[u64], z: &Zmod) -> Poly {
    rem(&mul(a, b, z), m, z)
}

pub fn powmod(a: &[u64], mut e: u128, m: &[u64], z: &Zmod) -> Poly {
    let mut base = rem(a, m, z);
    let mut r = rem(&[1], m, z);
    while e > 0 {
        if e & 1 == 1 {
            r = mulmod(&r, &base, m, z);
        }
        base = mulmod(&base, &base, m, z);
        e >>= 1;
    }
    r
}

/// Monic gcd over a field (h = 1).
pub fn gcd(a: &[u64], b: &[u64], f: &Zmod) -> Poly {
    let mut a = trim(a.to_vec());
    let mut b = trim(b.to_vec());
    while !b.is_empty() {
        let r = rem(&a, &b, f);
        a = b;
        b = r;
    }
    if let Some(d) = degree(&a) {
        let inv = f.inv(a[d]).unwrap();
        a.iter_mut().for_each(|c| *c = f.mul(*c, inv));
    }
    a
}

pub fn eval(a: &[u64], x: u64, z: &Zmod) -> u64 {
    a.iter().rev().fold(0, |acc, &c| z.add(z.mul(acc, x), c))
}

/// Rabin's test over F_p: `m | y^{p^f} - y` and `gcd(y^{p^{f/l}} - y, m) = 1` for primes l | f.
pub fn is_irreducible(m: &[u64], f: &Zmod) -> bool {
    let Some(n) = degree(m) else { return false };
    if n == 0 || m[n].is_multiple_of(f.p) {
        return false;
    }
    if n == 1 {
        return true;
    }
    let y = vec![0, 1];
    let frob_pow = |k: usize| -> Poly {
        let mut t = y.clone();
        for _ in 0..k {
            t = powmod(&t, f.p as u128, m, f);
        }
        t
    };
    if !sub(&frob_pow(n), &y, f).is_empty() {
        return false;
    }
    let mut k = n;
    let mut l = 2;
    let mut primes = Vec::new();
    while l * l <= k {
        if k % l == 0 {
            primes.push(l);
            while k % l == 0 {
                k /= l;
            }
        }
        l += 1;
    }
    if k > 1 {
        primes.push(k);
    }
    primes.into_iter().all(|l| {
        let g = gcd(&sub(&frob_pow(n / l), &y, f), m, f);
        degree(&g) == Some(0)
    })
}

/// Smallest monic irreducible of degree `n` over F_p, ordering candidates by
/// the integer whose base-p digits are the non-leading coefficients.
pub fn smallest_irreducible(p: u64, n: u32) -> Poly {
    let f = Zmod { p, h: 1, m: p };
    let count = p.pow(n);
    for code in 0..count {
        let mut m = vec![0u64; n as usize + 1];
        let mut t = code;
        for c in m.iter_mut().take(n as usize) {
            *c = t % p;
            t /= p;
        }
        m[n as usize] = 1;
        if is_irreducible(&m, &f) {
            return m;
        }
    }
    unreachable!("irreducibles exist in every degree")
}
