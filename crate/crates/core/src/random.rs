//! Seeded generators for property suites.
//!
//! Consistent modules start from seeds whose identities hold structurally and
//! are then hidden by an exact base change `Q^{-1} A φ(Q)`.

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::coeffs::{Coeff, Ring};
use crate::error::Result;
use crate::etale::{EtaleModule, GammaGen};
use crate::matrix::SMat;
use crate::series::{Exp, Series, Window};

pub type Rng = ChaCha8Rng;

pub fn rng(seed: u64) -> Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_coeff(rng: &mut Rng, ring: &Ring) -> Coeff {
    let m = ring.z().m;
    (0..ring.dim()).map(|_| rng.gen_range(0..m)).collect()
}

fn random_exp(rng: &mut Rng, lo: &[i64], hi: &[i64]) -> Exp {
    lo.iter().zip(hi).map(|(&l, &h)| rng.gen_range(l..h)).collect()
}

/// Up to `nterms` random terms inside `window`.
pub fn random_series(rng: &mut Rng, ring: &Ring, window: &Window, nterms: usize) -> Result<Series> {
    let terms: Vec<(Exp, Coeff)> =
        (0..nterms).map(|_| (random_exp(rng, &window.lo, &window.hi), random_coeff(rng, ring))).collect();
    let mut out = Series::zero(ring, window.clone())?;
    for (e, c) in terms {
        out = out.add(&Series::monomial(ring, window.clone(), e, c)?)?;
    }
    Ok(out)
}

/// Random element supported in exponents `≥ lo` of the window, all below hi.
pub fn random_integral_series(rng: &mut Rng, ring: &Ring, window: &Window, lo: i64, nterms: usize) -> Result<Series> {
    let lo_v: Vec<i64> = window.lo.iter().map(|&l| l.max(lo)).collect();
    let mut out = Series::zero(ring, window.clone())?;
    for _ in 0..nterms {
        let e = random_exp(rng, &lo_v, &window.hi);
        out = out.add(&Series::monomial(ring, window.clone(), e, random_coeff(rng, ring))?)?;
    }
    Ok(out)
}

fn unit_scalar(rng: &mut Rng, ring: &Ring) -> u64 {
    let z = ring.z();
    loop {
        let c = rng.gen_range(1..z.m);
        if z.is_unit(c) {
            return c;
        }
    }
}

/// `c·X_α^n·u(X_α)` with `u ≡ 1` a polynomial unit in X_α alone.
pub fn monomial_unit(rng: &mut Rng, ring: &Ring, window: &Window, alpha: usize) -> Result<Series> {
    let n = ring.nvars();
    let mut e = vec![0; n];
    e[alpha] = rng.gen_range(-1..=1).max(window.lo[alpha]);
    let c = ring.scalar(unit_scalar(rng, ring));
    let mut u = Series::one(ring, window.clone())?;
    for k in 1..=2 {
        let mut ek = vec![0; n];
        ek[alpha] = k;
        if window.below_hi(&ek) {
            let coeff = ring.scalar(rng.gen_range(0..ring.z().m));
            u = u.add(&Series::monomial(ring, window.clone(), ek, coeff)?)?;
        }
    }
    Ok(u.mul(&Series::monomial(ring, window.clone(), e, c)?)?.tighten())
}

fn poly_in(m: &[Vec<u64>], coeffs: &[u64], ring: &Ring) -> Vec<Vec<u64>> {
    let z = ring.z();
    let d = m.len();
    let mul = |a: &[Vec<u64>], b: &[Vec<u64>]| -> Vec<Vec<u64>> {
        (0..d).map(|i| (0..d).map(|j| (0..d).fold(0, |acc, k| z.add(acc, z.mul(a[i][k], b[k][j])))).collect()).collect()
    };
    let mut pw: Vec<Vec<u64>> = (0..d).map(|i| (0..d).map(|j| u64::from(i == j)).collect()).collect();
    let mut out = vec![vec![0; d]; d];
    for &c in coeffs {
        for i in 0..d {
            for j in 0..d {
                out[i][j] = z.add(out[i][j], z.mul(c, pw[i][j]));
            }
        }
        pw = mul(&pw, m);
    }
    out
}

fn invertible_mod_p(m: &[Vec<u64>], ring: &Ring) -> bool {
    let a = crate::linalg::Mat::from_rows(m);
    crate::linalg::is_invertible(&a, &ring.z())
}

fn constant_mat(ring: &Ring, window: &Window, m: &[Vec<u64>]) -> Result<SMat> {
    let zero = vec![0; ring.nvars()];
    let rows = m
        .iter()
        .map(|r| {
            r.iter()
                .map(|&c| {
                    if c == 0 {
                        Series::zero(ring, window.clone())
                    } else {
                        Series::monomial(ring, window.clone(), zero.clone(), ring.scalar(c))
                    }
                })
                .collect()
        })
        .collect::<Result<_>>()?;
    SMat::from_rows(rows)
}

/// Random invertible polynomial in a fixed random matrix.
fn commuting_family(rng: &mut Rng, ring: &Ring, rank: usize, count: usize) -> Vec<Vec<Vec<u64>>> {
    let m = ring.z().m;
    let base: Vec<Vec<u64>> = (0..rank).map(|_| (0..rank).map(|_| rng.gen_range(0..m)).collect()).collect();
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let coeffs: Vec<u64> = (0..3).map(|_| rng.gen_range(0..m)).collect();
        let cand = poly_in(&base, &coeffs, ring);
        if invertible_mod_p(&cand, ring) {
            out.push(cand);
        }
    }
    out
}

/// Γ-parameters that are units mod p.
pub fn gamma_params(p: u64) -> Vec<i64> {
    vec![-1, p as i64 + 1]
}

/// Seeds, base-changed by a random unipotent, permutation or monomial Q.
///
/// Kinds: monomial-unit diagonal (no Γ), or commuting constants with Γ when
/// `with_gamma`.
pub fn random_consistent_module(
    rng: &mut Rng,
    ring: &Ring,
    window: &Window,
    rank: usize,
    with_gamma: bool,
) -> Result<EtaleModule> {
    let n = ring.nvars();
    let seed = if with_gamma || rng.gen_bool(0.5) {
        let params = if with_gamma { gamma_params(ring.p()) } else { Vec::new() };
        let fam = commuting_family(rng, ring, rank, n + n * params.len());
        let phi = (0..n).map(|a| constant_mat(ring, window, &fam[a])).collect::<Result<Vec<_>>>()?;
        let gamma = (0..n)
            .map(|a| {
                params
                    .iter()
                    .enumerate()
                    .map(|(k, &c)| Ok(GammaGen { c, mat: constant_mat(ring, window, &fam[n + a * params.len() + k])? }))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        EtaleModule::new_unchecked(ring, window.clone(), phi, gamma)?
    } else {
        let mut phi = Vec::with_capacity(n);
        for a in 0..n {
            let entries = (0..rank).map(|_| monomial_unit(rng, ring, window, a)).collect::<Result<Vec<_>>>()?;
            phi.push(SMat::diag(entries)?);
        }
        EtaleModule::new_unchecked(ring, window.clone(), phi, vec![Vec::new(); n])?
    };
    let (q, q_inv) = random_base_change(rng, ring, window, rank)?;
    seed.base_change(&q, &q_inv)
}

/// An exactly invertible change of basis.
pub fn random_base_change(rng: &mut Rng, ring: &Ring, window: &Window, rank: usize) -> Result<(SMat, SMat)> {
    let n = ring.nvars();
    let kind = if rank >= 2 { rng.gen_range(0..3) } else { 2 };
    let one = || Series::one(ring, window.clone());
    let zero = || Series::zero(ring, window.clone());
    match kind {
        0 => {
            let s = random_integral_series(rng, ring, window, 0, 2)?;
            let mut q = SMat::identity(ring, window, rank)?;
            let mut qi = q.clone();
            q.data[1] = s.clone();
            qi.data[1] = s.neg();
            Ok((q, qi))
        }
        1 => {
            let mut rows: Vec<Vec<Series>> = (0..rank).map(|_| (0..rank).map(|_| zero()).collect::<Result<_>>()).collect::<Result<_>>()?;
            for (i, row) in rows.iter_mut().enumerate() {
                row[(i + 1) % rank] = one()?;
            }
            let q = SMat::from_rows(rows)?;
            Ok((q.clone(), q.transpose()))
        }
        _ => {
            let mut d = Vec::with_capacity(rank);
            let mut di = Vec::with_capacity(rank);
            for _ in 0..rank {
                let e: Exp = (0..n).map(|_| rng.gen_range(-1..=1)).collect();
                let c = unit_scalar(rng, ring);
                let ci = ring.z().inv(c).expect("unit");
                let neg: Exp = e.iter().map(|x| -x).collect();
                d.push(Series::from_terms(ring, window.clone(), [(e, ring.scalar(c))])?);
                di.push(Series::from_terms(ring, window.clone(), [(neg, ring.scalar(ci))])?);
            }
            Ok((SMat::diag(d)?, SMat::diag(di)?))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::RingTag;

    #[test]
    fn random_modules_are_consistent_and_etale() {
        let mut r = rng(7);
        for (p, h, n) in [(2, 1, 2), (3, 1, 1), (2, 2, 2), (3, 1, 2)] {
            let names = ["x1", "x2", "x3"];
            let ring = Ring::new(RingTag::base(p, h, &names[..n]).unwrap()).unwrap();
            let w = Window::uniform(n, -3, 10);
            for rank in 1..=2 {
                for g in [false, true] {
                    let m = random_consistent_module(&mut r, &ring, &w, rank, g).unwrap();
                    assert!(m.check_consistency().unwrap().consistent);
                    assert!(m.check_etale().unwrap().etale);
                }
            }
        }
    }
}
