//! Algebraic laws as property tests over seeded random inputs.

use proptest::prelude::*;

use pgf_core::coeffs::{Ring, RingTag};
use pgf_core::etale::EtaleModule;
use pgf_core::lattices::{membership, Status};
use pgf_core::linalg::{self, Mat};
use pgf_core::par::Exec;
use pgf_core::random::{self, random_consistent_module, random_series};
use pgf_core::series::{Series, Window};
use pgf_core::zmod::Zmod;

const NAMES: [&str; 3] = ["x", "y", "z"];

fn ring(p: u64, h: u32, n: usize) -> Ring {
    Ring::new(RingTag::base(p, h, &NAMES[..n]).unwrap()).unwrap()
}

fn config() -> impl Strategy<Value = (u64, u32, usize, u64)> {
    (prop::sample::select(vec![2u64, 3, 5]), 1u32..=2, 1usize..=2, any::<u64>())
}

fn series_pair(p: u64, h: u32, n: usize, seed: u64) -> (Series, Series, Series) {
    let r = ring(p, h, n);
    let mut rng = random::rng(seed);
    let w = Window::uniform(n, -2, 8);
    let f = random_series(&mut rng, &r, &w, 4).unwrap();
    let g = random_series(&mut rng, &r, &w, 4).unwrap();
    let k = random_series(&mut rng, &r, &w, 4).unwrap();
    (f, g, k)
}

fn agree(a: &Series, b: &Series) -> bool {
    a.window().intersect(b.window()).is_ok_and(|w| w.volume() > 0) && a.agrees_with(b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn multiplication_is_commutative_and_associative((p, h, n, seed) in config()) {
        let (f, g, k) = series_pair(p, h, n, seed);
        prop_assert!(agree(&f.mul(&g).unwrap(), &g.mul(&f).unwrap()));
        let l = f.mul(&g).unwrap().mul(&k).unwrap();
        let r = f.mul(&g.mul(&k).unwrap()).unwrap();
        prop_assert!(agree(&l, &r));
    }

    #[test]
    fn multiplication_distributes((p, h, n, seed) in config()) {
        let (f, g, k) = series_pair(p, h, n, seed);
        let l = f.mul(&g.add(&k).unwrap()).unwrap();
        let r = f.mul(&g).unwrap().add(&f.mul(&k).unwrap()).unwrap();
        prop_assert!(agree(&l, &r));
    }

    #[test]
    fn frobenius_is_a_ring_map((p, h, n, seed) in config(), alpha in 0usize..2) {
        let (f, g, _) = series_pair(p, h, n, seed);
        let a = alpha % n;
        let l = f.mul(&g).unwrap().tighten().subst_frobenius(a).unwrap();
        let r = f.tighten().subst_frobenius(a).unwrap().mul(&g.tighten().subst_frobenius(a).unwrap()).unwrap();
        prop_assert!(l.agrees_with(&r));
        let s = f.add(&g).unwrap().subst_frobenius(a).unwrap();
        let t = f.subst_frobenius(a).unwrap().add(&g.subst_frobenius(a).unwrap()).unwrap();
        prop_assert!(s.agrees_with(&t));
    }

    #[test]
    fn gamma_is_a_ring_map((p, h, n, seed) in config(), alpha in 0usize..2, c in prop::sample::select(vec![-1i64, 2, 4])) {
        prop_assume!(c.rem_euclid(p as i64) != 0);
        let (f, g, _) = series_pair(p, h, n, seed);
        let a = alpha % n;
        let l = f.mul(&g).unwrap().tighten().subst_gamma(a, c).unwrap();
        let r = f.tighten().subst_gamma(a, c).unwrap().mul(&g.tighten().subst_gamma(a, c).unwrap()).unwrap();
        prop_assert!(l.agrees_with(&r));
    }

    #[test]
    fn gamma_composes_multiplicatively((p, h, seed) in (prop::sample::select(vec![3u64, 5]), 1u32..=2, any::<u64>())) {
        let (f, _, _) = series_pair(p, h, 1, seed);
        let f = f.tighten();
        let l = f.subst_gamma(0, 2).unwrap().subst_gamma(0, 2).unwrap();
        let r = f.subst_gamma(0, 4).unwrap();
        prop_assert!(agree(&l, &r));
    }

    #[test]
    fn units_invert((p, h, n, seed) in config()) {
        let r = ring(p, h, n);
        let mut rng = random::rng(seed);
        let w = Window::uniform(n, -3, 9);
        let u = random::monomial_unit(&mut rng, &r, &w, 0).unwrap();
        let inv = u.invert().unwrap();
        let one = Series::one(&r, w).unwrap();
        prop_assert!(agree(&u.mul(&inv).unwrap(), &one));
    }

    #[test]
    fn random_modules_dualize_and_tensor((p, n, seed) in (prop::sample::select(vec![2u64, 3]), 1usize..=2, any::<u64>())) {
        let r = ring(p, 1, n);
        let mut rng = random::rng(seed);
        let w = Window::uniform(n, -3, 12);
        let m = random_consistent_module(&mut rng, &r, &w, 2, false).unwrap();
        let d = m.dual().unwrap();
        prop_assert!(d.check_etale().unwrap().etale);
        prop_assert!(d.check_consistency().unwrap().consistent);
        let dd = d.dual().unwrap();
        for a in 0..n {
            prop_assert!(dd.phi(a).agrees_with(m.phi(a)));
        }
        let t = m.tensor(&d).unwrap();
        prop_assert!(t.check_consistency().unwrap().consistent);
    }

    #[test]
    fn lattice_multiples_lie_in_double_plus((p, n, seed) in (prop::sample::select(vec![2u64, 3]), 1usize..=2, any::<u64>())) {
        let r = ring(p, 1, n);
        let mut rng = random::rng(seed);
        let m: EtaleModule = random_consistent_module(&mut rng, &r, &Window::uniform(n, -4, 30), 1, false).unwrap();
        let b = pgf_core::lattices::dpp_bounds(&m).unwrap();
        let v = vec![Series::one(&r, m.window().clone()).unwrap().shift(&vec![b.m + b.k; n])];
        prop_assert_eq!(membership(&m, &v, None).unwrap().status, Status::InDoublePlus);
    }

    #[test]
    fn zmod_inverse_and_smith((p, h, seed) in (prop::sample::select(vec![2u64, 3, 5]), 1u32..=3, any::<u64>())) {
        use rand::Rng as _;
        let z = Zmod::new(p, h).unwrap();
        let mut rng = random::rng(seed);
        let rows = rng.gen_range(1..=4);
        let cols = rng.gen_range(1..=4);
        let a = Mat::from_rows(&(0..rows).map(|_| (0..cols).map(|_| rng.gen_range(0..z.m)).collect()).collect::<Vec<_>>());
        let s = linalg::smith(&a, &z, Exec::Sequential);
        prop_assert!(linalg::is_invertible(&s.u, &z) && linalg::is_invertible(&s.v, &z));
        let d = s.u.mul(&a, &z).mul(&s.v, &z);
        for i in 0..rows {
            for j in 0..cols {
                let want = if i == j { z.p_pow(s.exps[i]) % z.m } else { 0 };
                prop_assert_eq!(d.get(i, j), want);
            }
        }
        let b: Vec<u64> = (0..rows).map(|_| rng.gen_range(0..z.m)).collect();
        let rhs = a.mul_vec(&(0..cols).map(|k| b[k % rows]).collect::<Vec<_>>(), &z);
        let x = linalg::solve_zmod(&a, &rhs, &z, Exec::Sequential).unwrap();
        prop_assert_eq!(a.mul_vec(&x, &z), rhs);
        for x in 1..z.m {
            if let Some(y) = z.inv(x) {
                prop_assert_eq!(z.mul(x, y), 1);
            } else {
                prop_assert_eq!(x % p, 0);
            }
        }
    }

    #[test]
    fn sequential_and_parallel_agree((p, seed) in (prop::sample::select(vec![2u64, 3]), any::<u64>())) {
        use rand::Rng as _;
        let mut rng = random::rng(seed);
        let n = rng.gen_range(2..12);
        let a = Mat::from_rows(&(0..n).map(|_| (0..n + 1).map(|_| rng.gen_range(0..p)).collect()).collect::<Vec<_>>());
        prop_assert_eq!(linalg::kernel_mod_p(&a, p, Exec::Sequential), linalg::kernel_mod_p(&a, p, Exec::Parallel));
    }
}
