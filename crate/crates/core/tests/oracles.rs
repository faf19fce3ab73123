//! Library results against exhaustive enumeration and schoolbook arithmetic.

use std::collections::BTreeMap;

use rand::Rng as _;

use pgf_core::coeffs::{fixed_points_coeff, Ring, RingTag};
use pgf_core::descent::h90_invariant_basis;
use pgf_core::koszul::{build_complex, finite_field_instance};
use pgf_core::linalg::{self, Mat};
use pgf_core::par::Exec;
use pgf_core::random::{self, random_series};
use pgf_core::series::{Exp, Series, Window};
use pgf_core::zmod::Zmod;

/// `F_p[a]/(modulus)`, schoolbook.
struct Ff {
    p: u64,
    modulus: Vec<u64>,
}

impl Ff {
    fn of(ring: &Ring) -> Ff {
        Ff { p: ring.p(), modulus: ring.tag().factors[0].modulus.clone() }
    }

    fn deg(&self) -> usize {
        self.modulus.len() - 1
    }

    fn mul(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        let d = self.deg();
        let mut prod = vec![0u64; 2 * d];
        for (i, &x) in a.iter().enumerate() {
            for (j, &y) in b.iter().enumerate() {
                prod[i + j] = (prod[i + j] + x * y) % self.p;
            }
        }
        for k in (d..2 * d).rev() {
            let c = prod[k];
            for t in 0..d {
                prod[k - d + t] = (prod[k - d + t] + (self.p - c) * self.modulus[t]) % self.p;
            }
            prod[k] = 0;
        }
        prod.truncate(d);
        prod
    }

    fn add(&self, a: &[u64], b: &[u64]) -> Vec<u64> {
        a.iter().zip(b).map(|(x, y)| (x + y) % self.p).collect()
    }

    fn frob(&self, a: &[u64]) -> Vec<u64> {
        (0..self.p).fold(self.one(), |acc, _| self.mul(&acc, a))
    }

    fn one(&self) -> Vec<u64> {
        let mut v = vec![0; self.deg()];
        v[0] = 1;
        v
    }

    fn is_zero(&self, a: &[u64]) -> bool {
        a.iter().all(|&c| c == 0)
    }

    fn elements(&self) -> Vec<Vec<u64>> {
        digits(self.p, self.deg())
    }
}

/// All vectors of length `n` over `0..m`.
fn digits(m: u64, n: usize) -> Vec<Vec<u64>> {
    (0..m.pow(n as u32))
        .map(|mut k| {
            (0..n)
                .map(|_| {
                    let c = k % m;
                    k /= m;
                    c
                })
                .collect()
        })
        .collect()
}

fn field(p: u64, f: u32) -> Ring {
    Ring::new(RingTag::standard(p, 1, &[("a", f)]).unwrap()).unwrap()
}

#[test]
fn field_multiplication_matches_schoolbook() {
    for (p, f) in [(2, 3), (3, 2), (5, 2), (2, 4)] {
        let r = field(p, f);
        let ff = Ff::of(&r);
        let el = ff.elements();
        for a in &el {
            for b in &el {
                assert_eq!(r.mul(a, b), ff.mul(a, b));
            }
            if !ff.is_zero(a) {
                let inv = r.inv(a).unwrap();
                assert_eq!(ff.mul(a, &inv), ff.one());
            }
        }
    }
}

#[test]
fn frobenius_coefficient_map_is_pth_power() {
    for (p, f) in [(2, 4), (3, 3), (7, 2)] {
        let r = field(p, f);
        let ff = Ff::of(&r);
        for a in ff.elements() {
            assert_eq!(r.frob(&a, 0).unwrap(), ff.frob(&a));
        }
    }
}

#[test]
fn series_product_matches_naive_convolution() {
    let mut rng = random::rng(11);
    for (p, h, n) in [(2u64, 1u32, 1usize), (3, 2, 2), (5, 1, 3), (2, 3, 2)] {
        let names = ["x", "y", "z"];
        let r = Ring::new(RingTag::base(p, h, &names[..n]).unwrap()).unwrap();
        let m = r.z().m;
        for _ in 0..20 {
            let lo: Vec<i64> = (0..n).map(|_| rng.gen_range(-3..=1)).collect();
            let w1 = Window::new(lo.clone(), lo.iter().map(|l| l + rng.gen_range(2..8)).collect()).unwrap();
            let w2 = Window::new(lo.clone(), lo.iter().map(|l| l + rng.gen_range(2..8)).collect()).unwrap();
            let f = random_series(&mut rng, &r, &w1, 5).unwrap();
            let g = random_series(&mut rng, &r, &w2, 5).unwrap();
            let fg = f.mul(&g).unwrap();
            let mut want: BTreeMap<Exp, u64> = BTreeMap::new();
            for (ea, ca) in f.terms() {
                for (eb, cb) in g.terms() {
                    let e: Exp = ea.iter().zip(eb).map(|(a, b)| a + b).collect();
                    if fg.window().contains(&e) {
                        let c = want.entry(e).or_insert(0);
                        *c = (*c + ca[0] * cb[0]) % m;
                    }
                }
            }
            want.retain(|_, c| *c != 0);
            let got: BTreeMap<Exp, u64> =
                fg.terms().iter().filter(|(_, c)| c[0] != 0).map(|(e, c)| (e.clone(), c[0])).collect();
            assert_eq!(got, want);
            // The window is no larger than the region where both factors are known.
            for i in 0..n {
                assert!(fg.window().hi[i] <= (w1.hi[i] + w2.lo[i]).min(w2.hi[i] + w1.lo[i]));
            }
        }
    }
}

#[test]
fn gamma_substitution_matches_binomials() {
    for (p, h) in [(2u64, 1u32), (3, 2), (5, 1), (2, 3)] {
        let r = Ring::new(RingTag::base(p, h, &["x"]).unwrap()).unwrap();
        let z = r.z();
        let w = Window::uniform(1, 0, 9);
        let x = Series::var(&r, w.clone(), 0).unwrap();
        for c in [2i64, 3, 4, 6, 7] {
            if (c as u64).is_multiple_of(p) {
                continue;
            }
            let got = x.subst_gamma(0, c).unwrap();
            // (1 + X)^c - 1 with integer binomials.
            let mut binom = vec![1u128];
            for k in 1..=c as u128 {
                let prev = binom[k as usize - 1];
                binom.push(prev * (c as u128 - k + 1) / k);
            }
            for e in 1..got.window().hi[0] {
                let want = if e <= c { (binom[e as usize] % z.m as u128) as u64 } else { 0 };
                assert_eq!(got.coeff(&[e])[0], want, "p={p} h={h} c={c} e={e}");
            }
        }
    }
}

#[test]
fn fixed_points_by_enumeration() {
    for fs in [vec![2u32, 2], vec![2, 3], vec![1, 2]] {
        let names: Vec<(&str, u32)> = ["a", "b"].iter().copied().zip(fs.iter().copied()).collect();
        let r = Ring::new(RingTag::standard(2, 1, &names).unwrap()).unwrap();
        let all = digits(2, r.dim());
        let fixed = all.iter().filter(|x| (0..2).all(|a| r.frob(x, a).unwrap() == **x)).count();
        let basis = fixed_points_coeff(&r).unwrap();
        assert_eq!(fixed as u64, 2u64.pow(basis.len() as u32));
        assert_eq!(basis.len(), 1);
    }
}

#[test]
fn h90_exhaustive_over_f4() {
    let r = field(2, 2);
    let ff = Ff::of(&r);
    let el = ff.elements();
    let mat_mul = |a: &[Vec<Vec<u64>>], b: &[Vec<Vec<u64>>]| -> Vec<Vec<Vec<u64>>> {
        (0..2)
            .map(|i| (0..2).map(|j| ff.add(&ff.mul(&a[i][0], &b[0][j]), &ff.mul(&a[i][1], &b[1][j]))).collect())
            .collect()
    };
    let frob_m = |a: &[Vec<Vec<u64>>]| -> Vec<Vec<Vec<u64>>> { a.iter().map(|row| row.iter().map(|x| ff.frob(x)).collect()).collect() };
    let id = vec![vec![ff.one(), vec![0, 0]], vec![vec![0, 0], ff.one()]];
    let (mut cocycles, mut rejected) = (0, 0);
    for a in &el {
        for b in &el {
            for c in &el {
                for d in &el {
                    let m = vec![vec![a.clone(), b.clone()], vec![c.clone(), d.clone()]];
                    let norm = mat_mul(&m, &frob_m(&m));
                    let res = h90_invariant_basis(&r, std::slice::from_ref(&m));
                    if norm != id {
                        assert!(res.is_err());
                        rejected += 1;
                        continue;
                    }
                    cocycles += 1;
                    let bm = res.unwrap();
                    // Columns satisfy M σ(v) = v.
                    let sb = frob_m(&bm);
                    assert_eq!(mat_mul(&m, &sb), bm);
                    let det = ff.add(&ff.mul(&bm[0][0], &bm[1][1]), &ff.mul(&bm[0][1], &bm[1][0]));
                    assert!(!ff.is_zero(&det));
                    // The invariant vectors form an F_2-space of dimension 2.
                    let mut fixed = 0;
                    for x in &el {
                        for y in &el {
                            let v0 = ff.add(&ff.mul(a, &ff.frob(x)), &ff.mul(b, &ff.frob(y)));
                            let v1 = ff.add(&ff.mul(c, &ff.frob(x)), &ff.mul(d, &ff.frob(y)));
                            fixed += usize::from(v0 == *x && v1 == *y);
                        }
                    }
                    assert_eq!(fixed, 4);
                }
            }
        }
    }
    assert!(cocycles > 0 && rejected > 0);
}

#[test]
fn kernel_sizes_by_enumeration() {
    let mut rng = random::rng(12);
    for (p, h) in [(2u64, 2u32), (3, 1), (2, 3), (3, 2)] {
        let z = Zmod::new(p, h).unwrap();
        for _ in 0..15 {
            let rows = rng.gen_range(1..=3);
            let cols = rng.gen_range(1..=3);
            let a = Mat::from_rows(&(0..rows).map(|_| (0..cols).map(|_| rng.gen_range(0..z.m)).collect()).collect::<Vec<_>>());
            let all = digits(z.m, cols);
            let brute = all.iter().filter(|x| a.mul_vec(x, &z).iter().all(|&c| c == 0)).count() as u64;
            let gens = linalg::kernel_zmod(&a, &z, Exec::Sequential);
            let size: u64 = gens.iter().map(|(_, e)| p.pow(*e)).product();
            assert_eq!(size, brute);
            for (v, _) in &gens {
                assert!(a.mul_vec(v, &z).iter().all(|&c| c == 0));
            }
            if h == 1 {
                let image = {
                    let mut im: Vec<Vec<u64>> = all.iter().map(|x| a.mul_vec(x, &z)).collect();
                    im.sort();
                    im.dedup();
                    im.len() as u64
                };
                assert_eq!(p.pow(linalg::rank_mod_p(&a, p, Exec::Sequential) as u32), image);
            }
        }
    }
}

#[test]
fn two_field_complex_by_enumeration() {
    // W = F_4 ⊗ F_8 with both partial Frobenii; h^0 counts common fixed points.
    let r = Ring::new(RingTag::standard(2, 1, &[("a", 2), ("b", 3)]).unwrap()).unwrap();
    let inst = build_complex(2, &["a", "b"], vec![r.frob_matrix(0).unwrap(), r.frob_matrix(1).unwrap()]).unwrap();
    let dims = inst.cohomology_dims().dims;
    let all = digits(2, r.dim());
    let fixed = all.iter().filter(|x| (0..2).all(|a| r.frob(x, a).unwrap() == **x)).count();
    assert_eq!(2usize.pow(dims[0] as u32), fixed);
    assert_eq!(dims, vec![1, 2, 1]);
    let single = finite_field_instance(3, 3).unwrap().cohomology_dims();
    assert_eq!(single.dims, vec![1, 1]);
}
