//! Integral lattices `D^{++} ⊆ D^+` of an étale module in characteristic p.
//!
//! All computations use the rescaled basis `X_Δ^m e` in which the matrix of
//! φ_s is `A' = X_Δ^{(p-1)m} A` with entries in `E^+_Δ`. With
//! `r > val_α(det A')` and `k = ⌊(r+1)/(p-1)⌋ + 1` one has
//! `X_Δ^k M ⊆ D^{++} ⊆ D^+ ⊆ X_Δ^{-r} M` for the standard lattice M.

mod dstar;
mod membership;

use serde::Serialize;

pub use dstar::{dstar_lattice, DstarResult};
pub use membership::{membership, membership_batch, Certificate, MembershipVerdict, Status};

use crate::error::{Error, Result};
use crate::etale::EtaleModule;
use crate::matrix::SMat;
use crate::semilinear::OperatorSpec;

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct LatticeBounds {
    /// Basis rescaling exponent: the bounds refer to `X_Δ^m e`.
    pub m: i64,
    pub r: i64,
    pub k: i64,
    /// `val_α(det A')` per variable.
    pub det_vals: Vec<i64>,
}

/// Matrix of φ_s, composing the partial Frobenii in ring order.
pub fn phi_s_matrix(m: &EtaleModule) -> Result<SMat> {
    let n = m.ring().nvars();
    m.operator_matrix(&OperatorSpec::phi_s(m.ring().p(), n))
}

pub(crate) fn require_char_p(m: &EtaleModule) -> Result<()> {
    if m.ring().h() != 1 {
        return Err(Error::Unsupported("lattices are computed in characteristic p".into()));
    }
    Ok(())
}

/// φ_s data in the rescaled basis.
#[derive(Clone, Debug)]
pub(crate) struct Rescaled {
    pub bounds: LatticeBounds,
    pub a: SMat,
}

pub(crate) fn rescale(module: &EtaleModule) -> Result<Rescaled> {
    require_char_p(module)?;
    let p = module.ring().p() as i64;
    let n = module.ring().nvars();
    let a = phi_s_matrix(module)?.map(|x| Ok(x.tighten()))?;
    let minval = a
        .data
        .iter()
        .flat_map(|x| (0..n).filter_map(move |al| x.val(al)))
        .min()
        .ok_or_else(|| Error::NotAUnit("φ_s matrix is zero".into()))?;
    // Smallest m with (p-1)m + minval ≥ 0.
    let m = (-minval).div_euclid(p - 1) + i64::from((-minval).rem_euclid(p - 1) != 0);
    let shift = vec![(p - 1) * m; n];
    let a = a.map(|x| Ok(x.shift(&shift)))?;
    let det = a.det()?;
    if !det.is_unit_in_edelta().unit {
        return Err(Error::NotAUnit("det of φ_s is not a unit".into()));
    }
    let det_vals: Vec<i64> = (0..n)
        .map(|al| det.val(al).ok_or_else(|| Error::WindowTooSmall("determinant vanishes on the window".into())))
        .collect::<Result<_>>()?;
    let r = det_vals.iter().copied().max().unwrap_or(0).max(0) + 1;
    let k = (r + 1).div_euclid(p - 1) + 1;
    Ok(Rescaled { bounds: LatticeBounds { m, r, k, det_vals }, a })
}

pub fn dpp_bounds(module: &EtaleModule) -> Result<LatticeBounds> {
    Ok(rescale(module)?.bounds)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{Ring, RingTag};
    use crate::series::{Series, Window};

    #[test]
    fn inverse_variable_rescales_to_constant() {
        let r = Ring::new(RingTag::base(2, 1, &["x"]).unwrap()).unwrap();
        let w = Window::new(vec![-2], vec![16]).unwrap();
        let a = Series::from_terms(&r, w.clone(), [(vec![-1], vec![1])]).unwrap();
        let m = EtaleModule::new(&r, w, vec![SMat::from_rows(vec![vec![a]]).unwrap()], vec![vec![]]).unwrap();
        let b = dpp_bounds(&m).unwrap();
        assert_eq!((b.m, b.r, b.k), (1, 1, 3));
    }

    #[test]
    fn trivial_bounds() {
        let r = Ring::new(RingTag::base(3, 1, &["x", "y"]).unwrap()).unwrap();
        let m = EtaleModule::trivial(&r, &Window::uniform(2, 0, 8), 2, &[]).unwrap();
        let b = dpp_bounds(&m).unwrap();
        assert_eq!((b.m, b.r, b.k), (0, 1, 2));
    }
}
