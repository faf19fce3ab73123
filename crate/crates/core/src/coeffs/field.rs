//! Finite-field Artin–Schreier solving and degree-p enlargement of a factor.
//!
//! All routines here assume characteristic p (h = 1).

use serde::Serialize;

use super::ring::{Coeff, FactorTag, Ring, RingEmbedding, RingTag, TensorCoeff};
use crate::error::{Error, Result};
use crate::linalg::{self, Mat};
use crate::par::Exec;

/// The extension `F_q[y]/(y^p - y - u)` adjoined to solve `x^p - x = u`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct AsTower {
    pub base: RingTag,
    pub u: Coeff,
}

#[derive(Clone, Debug)]
pub struct AsFfSolution {
    /// Field holding x; equals the input field when no extension was needed.
    pub field: Ring,
    pub x: Coeff,
    /// Inclusion of the input field into `field`.
    pub embedding: RingEmbedding,
    pub tower: Option<AsTower>,
}

fn require_char_p(ring: &Ring) -> Result<()> {
    if ring.h() != 1 {
        return Err(Error::Unsupported("Artin–Schreier solving needs characteristic p".into()));
    }
    Ok(())
}

pub fn identity_embedding(ring: &Ring) -> RingEmbedding {
    RingEmbedding { from: ring.clone(), to: ring.clone(), matrix: Mat::identity(ring.dim()) }
}

/// Absolute trace of an element of a single-factor field.
pub fn absolute_trace(ring: &Ring, u: &[u64]) -> Result<u64> {
    let mut acc = ring.zero();
    let mut t = u.to_vec();
    let f = if ring.nvars() == 0 { 1 } else { ring.residue_degree(0) };
    for _ in 0..f {
        acc = ring.add(&acc, &t);
        if ring.nvars() > 0 {
            t = ring.frob(&t, 0)?;
        }
    }
    ring.as_scalar(&acc).ok_or_else(|| Error::Malformed("trace left the prime field".into()))
}

/// Solves `y - σ_α(y) = u` in a characteristic-p coefficient algebra.
pub fn solve_id_minus_frob(ring: &Ring, u: &[u64], alpha: usize) -> Result<Option<Coeff>> {
    require_char_p(ring)?;
    let z = ring.z();
    let a = Mat::identity(ring.dim()).sub(&ring.frob_matrix(alpha)?, &z);
    Ok(linalg::solve_mod_p(&a, u, z.p, Exec::Sequential))
}

/// Enlarges factor `alpha` to degree `f·k` and embeds the old algebra.
///
/// The old generator maps to the first root of its modulus in the enlarged
/// field, enumerating the degree-f subfield in base-p order of its kernel basis.
pub fn extend_factor(ring: &Ring, alpha: usize, k: u32) -> Result<(Ring, RingEmbedding)> {
    require_char_p(ring)?;
    let f = ring.residue_degree(alpha);
    let to = ring.with_factor_degree(alpha, f * k)?;
    let big = to.factor_field(alpha)?;
    let p = ring.p();
    // Subfield fixed by σ^f.
    let mut sig = Mat::identity(big.dim());
    let s1 = big.frob_matrix(0)?;
    for _ in 0..f {
        sig = s1.mul(&sig, &big.z());
    }
    let sub_basis = linalg::kernel_mod_p(&sig.sub(&Mat::identity(big.dim()), &big.z()), p, Exec::Sequential);
    debug_assert_eq!(sub_basis.len(), f as usize);
    let modulus = &ring.tag().factors[alpha].modulus;
    let eval = |x: &Coeff| {
        let mut acc = big.zero();
        for &c in modulus.iter().rev() {
            acc = big.add(&big.mul(&acc, x), &big.scalar(c));
        }
        big.is_zero(&acc)
    };
    let count = p.pow(f);
    let mut root = None;
    for code in 0..count {
        let mut x = big.zero();
        let mut t = code;
        for b in &sub_basis {
            let c = t % p;
            t /= p;
            if c != 0 {
                big.add_assign(&mut x, &big.scale(b, c));
            }
        }
        if eval(&x) {
            root = Some(x);
            break;
        }
    }
    let root = root.ok_or_else(|| Error::Malformed("no root of the old modulus in the extension".into()))?;
    let mut powers = vec![big.one()];
    for i in 1..f as usize {
        powers.push(big.mul(&powers[i - 1], &root));
    }
    let mut matrix = Mat::zeros(to.dim(), ring.dim());
    for i in 0..ring.dim() {
        let exps = ring.decode(i);
        let mut base_exps = exps.clone();
        base_exps[alpha] = 0;
        let base = to.encode(&base_exps);
        for (t, &c) in powers[exps[alpha]].iter().enumerate() {
            if c != 0 {
                matrix.set(base + t * to.stride(alpha), i, c);
            }
        }
    }
    Ok((to.clone(), RingEmbedding { from: ring.clone(), to, matrix }))
}

/// Solves `x^p - x = u` in a finite field, adjoining `y^p - y - u` if needed.
pub fn as_solve_ff(u: &TensorCoeff) -> Result<AsFfSolution> {
    let ring = &u.ring;
    require_char_p(ring)?;
    if ring.nvars() > 1 {
        return Err(Error::Unsupported("as_solve_ff expects a single finite field".into()));
    }
    let minus_u = ring.neg(&u.coords);
    if ring.nvars() == 0 {
        // F_p itself: x^p - x = 0 for every x.
        if ring.is_zero(&u.coords) {
            return Ok(AsFfSolution { field: ring.clone(), x: ring.zero(), embedding: identity_embedding(ring), tower: None });
        }
    } else if let Some(x) = solve_id_minus_frob(ring, &minus_u, 0)? {
        return Ok(AsFfSolution { field: ring.clone(), x, embedding: identity_embedding(ring), tower: None });
    }
    let tower = AsTower { base: ring.tag().clone(), u: u.coords.clone() };
    let p = ring.p();
    let f = if ring.nvars() == 0 { 1 } else { ring.residue_degree(0) };
    if f == 1 {
        // F_p[y]/(y^p - y - u) directly, so x is the generator.
        let name = ring.tag().factors.first().map_or("a".to_string(), |ft| ft.alpha.clone());
        let mut modulus = vec![0u64; p as usize + 1];
        modulus[0] = ring.z().neg(u.coords[0]);
        modulus[1] = ring.z().neg(1);
        modulus[p as usize] = 1;
        let field = Ring::new(RingTag { p, h: 1, factors: vec![FactorTag { alpha: name, f: p as u32, modulus }] })?;
        let mut x = field.zero();
        x[1] = 1;
        let mut matrix = Mat::zeros(field.dim(), 1);
        matrix.set(0, 0, 1);
        let embedding = RingEmbedding { from: ring.clone(), to: field.clone(), matrix };
        return Ok(AsFfSolution { field, x, embedding, tower: Some(tower) });
    }
    let (field, embedding) = extend_factor(ring, 0, p as u32)?;
    let mu = embedding.apply(&minus_u);
    let x = solve_id_minus_frob(&field, &mu, 0)?
        .ok_or_else(|| Error::Malformed("degree-p extension did not split the equation".into()))?;
    Ok(AsFfSolution { field, x, embedding, tower: Some(tower) })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn f(p: u64, deg: u32) -> Ring {
        Ring::new(RingTag::standard(p, 1, &[("a", deg)]).unwrap()).unwrap()
    }

    #[test]
    fn f2_unit_needs_f4() {
        let r = f(2, 1);
        let sol = as_solve_ff(&TensorCoeff::new(&r, vec![1]).unwrap()).unwrap();
        assert_eq!(sol.field.tag().factors[0].modulus, vec![1, 1, 1]);
        assert_eq!(sol.x, vec![0, 1]);
    }

    #[test]
    fn f4_omega_has_trace_one() {
        let r = f(2, 2);
        assert_eq!(absolute_trace(&r, &[0, 1]).unwrap(), 1);
        let sol = as_solve_ff(&TensorCoeff::new(&r, vec![0, 1]).unwrap()).unwrap();
        let fl = &sol.field;
        let x = &sol.x;
        let lhs = fl.sub(&fl.pow(x, 2), x);
        assert_eq!(lhs, sol.embedding.apply(&[0, 1]));
    }

    #[test]
    fn embedding_is_multiplicative() {
        let r = f(3, 2);
        let (to, e) = extend_factor(&r, 0, 3).unwrap();
        for a in 0..9u64 {
            for b in 0..9u64 {
                let x = vec![a % 3, a / 3];
                let y = vec![b % 3, b / 3];
                assert_eq!(e.apply(&r.mul(&x, &y)), to.mul(&e.apply(&x), &e.apply(&y)));
            }
        }
    }
}
