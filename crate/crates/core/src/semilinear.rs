//! The monoid `∏_α φ_α^N Γ_α` of commuting ring endomorphisms.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::series::{Exp, Series};

/// `∏_α φ_α^{frob_α} γ_α(gamma_α)`, indexed by variable position.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct OperatorSpec {
    pub p: u64,
    pub frob: Vec<u32>,
    pub gamma: Vec<i64>,
}

/// One generator of the monoid.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Step {
    Phi(usize),
    Gamma(usize, i64),
}

impl OperatorSpec {
    pub fn new(p: u64, frob: Vec<u32>, gamma: Vec<i64>) -> Result<OperatorSpec> {
        if frob.len() != gamma.len() {
            return Err(Error::DeltaMismatch);
        }
        if let Some(&c) = gamma.iter().find(|&&c| c.rem_euclid(p as i64) == 0) {
            return Err(Error::NonUnitExponent(c));
        }
        Ok(OperatorSpec { p, frob, gamma })
    }

    pub fn identity(p: u64, n: usize) -> OperatorSpec {
        OperatorSpec { p, frob: vec![0; n], gamma: vec![1; n] }
    }

    pub fn phi(p: u64, n: usize, alpha: usize) -> OperatorSpec {
        let mut t = OperatorSpec::identity(p, n);
        t.frob[alpha] = 1;
        t
    }

    /// φ_s, the product of all partial Frobenii.
    pub fn phi_s(p: u64, n: usize) -> OperatorSpec {
        OperatorSpec { p, frob: vec![1; n], gamma: vec![1; n] }
    }

    pub fn gamma(p: u64, n: usize, alpha: usize, c: i64) -> Result<OperatorSpec> {
        let mut g = vec![1; n];
        g[alpha] = c;
        OperatorSpec::new(p, vec![0; n], g)
    }

    pub fn nvars(&self) -> usize {
        self.frob.len()
    }

    pub fn is_identity(&self) -> bool {
        self.frob.iter().all(|&k| k == 0) && self.gamma.iter().all(|&c| c == 1)
    }

    /// No φ_α component.
    pub fn avoids_phi(&self, alpha: usize) -> bool {
        self.frob[alpha] == 0
    }

    pub fn compose(&self, other: &OperatorSpec) -> Result<OperatorSpec> {
        if self.p != other.p || self.nvars() != other.nvars() {
            return Err(Error::DeltaMismatch);
        }
        Ok(OperatorSpec {
            p: self.p,
            frob: self.frob.iter().zip(&other.frob).map(|(a, b)| a + b).collect(),
            gamma: self
                .gamma
                .iter()
                .zip(&other.gamma)
                .map(|(a, b)| a.checked_mul(*b).ok_or_else(|| Error::Malformed("Γ parameter overflow".into())))
                .collect::<Result<_>>()?,
        })
    }

    /// Generator factorization: Frobenius steps first, then Γ steps, by variable.
    pub fn steps(&self) -> Vec<Step> {
        let mut out = Vec::new();
        for (a, &k) in self.frob.iter().enumerate() {
            out.extend(std::iter::repeat_n(Step::Phi(a), k as usize));
        }
        for (a, &c) in self.gamma.iter().enumerate() {
            if c != 1 {
                out.push(Step::Gamma(a, c));
            }
        }
        out
    }
}

pub fn apply_step(s: Step, f: &Series) -> Result<Series> {
    match s {
        Step::Phi(a) => f.subst_frobenius(a),
        Step::Gamma(a, c) => f.subst_gamma(a, c),
    }
}

pub fn apply_ring(t: &OperatorSpec, f: &Series) -> Result<Series> {
    if t.nvars() != f.ring().nvars() || t.p != f.ring().p() {
        return Err(Error::DeltaMismatch);
    }
    let mut g = f.clone();
    for s in t.steps() {
        g = apply_step(s, &g)?;
    }
    Ok(g)
}

pub fn compose(t1: &OperatorSpec, t2: &OperatorSpec) -> Result<OperatorSpec> {
    t1.compose(t2)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Counterexample {
    pub sample: usize,
    pub exponent: Exp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct CommutationReport {
    pub checked: usize,
    pub passed: usize,
    pub first_counterexample: Option<Counterexample>,
}

impl CommutationReport {
    pub fn ok(&self) -> bool {
        self.first_counterexample.is_none()
    }
}

pub fn check_ring_commutation(t1: &OperatorSpec, t2: &OperatorSpec, samples: &[Series]) -> Result<CommutationReport> {
    let mut rep = CommutationReport { checked: 0, passed: 0, first_counterexample: None };
    for (i, f) in samples.iter().enumerate() {
        let a = apply_ring(t1, &apply_ring(t2, f)?)?;
        let b = apply_ring(t2, &apply_ring(t1, f)?)?;
        rep.checked += 1;
        match a.first_difference(&b) {
            None => rep.passed += 1,
            Some(e) => {
                if rep.first_counterexample.is_none() {
                    rep.first_counterexample = Some(Counterexample { sample: i, exponent: e });
                }
            }
        }
    }
    Ok(rep)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{Ring, RingTag};
    use crate::series::Window;

    #[test]
    fn phi_times_gamma_on_monomial() {
        let r = Ring::new(RingTag::base(3, 1, &["a", "b"]).unwrap()).unwrap();
        let w = Window::uniform(2, 0, 10);
        let f = Series::from_terms(&r, w.clone(), [(vec![1, 1], vec![1])]).unwrap();
        let t = OperatorSpec::phi(3, 2, 0).compose(&OperatorSpec::gamma(3, 2, 1, 2).unwrap()).unwrap();
        let g = apply_ring(&t, &f).unwrap();
        let want = Series::from_terms(&r, w, [(vec![3, 2], vec![1]), (vec![3, 1], vec![2])]).unwrap();
        assert!(g.agrees_with(&want));
    }

    #[test]
    fn compose_laws() {
        let a = OperatorSpec::gamma(5, 1, 0, 2).unwrap();
        assert_eq!(a.compose(&a).unwrap().gamma, vec![4]);
        let id = OperatorSpec::identity(5, 1);
        assert_eq!(a.compose(&id).unwrap(), a);
        assert_eq!(a.compose(&OperatorSpec::identity(5, 2)), Err(Error::DeltaMismatch));
    }
}
