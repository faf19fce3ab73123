//! Membership in `D^{++}` and `D^+` by valuation trajectories of φ_s.
//!
//! Iterates `w_{n+1} = A' φ_s(w_n)` in rescaled coordinates. The input is
//! read through its known part; iterates keep the product's lower bound,
//! which also bounds the unknown tail. Verdicts, each with a certificate:
//! - `InDoublePlus`: the lower bound of some `w_n` is at least k, so `w_n ∈ X_Δ^k M`.
//! - `NotInPlus`: a known coefficient has `val_α < -r`, outside `X_Δ^{-r} M ⊇ D^+`.
//! - `InPlusOnly`: `w_n` lies in the φ_s-stable lattice `X^{-s} M` but a known
//!   coefficient keeps it out of `X_β X^{-s} M`, where φ_s is injective modulo `X_β`.

use serde::Serialize;

use super::{rescale, LatticeBounds, Rescaled};
use crate::error::{Error, Result};
use crate::etale::EtaleModule;
use crate::par::{self, Exec};
use crate::series::Series;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Status {
    InDoublePlus,
    InPlusOnly,
    NotInPlus,
    Inconclusive,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
#[serde(tag = "kind")]
pub enum Certificate {
    /// `w_step ∈ X_Δ^k M`.
    Threshold { step: usize, k: i64 },
    /// `val_α` of a coordinate fell below `-r`. Along φ_s the exponent moves
    /// at rate `(p-1)·val + val_α(det A') < 0`, contradicting boundedness.
    Determinant { step: usize, alpha: usize, coordinate: usize, val: i64, r: i64, det_val: i64, rate: i64 },
    /// `w_step ∈ X^{-s} M \ X_β X^{-s} M` and φ_s is injective modulo `X_β`.
    StableLattice { step: usize, beta: usize, s: Vec<i64> },
    Exhausted { k_max: usize },
    /// The window of `w_step` no longer reaches exponent k.
    PrecisionExhausted { step: usize },
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct MembershipVerdict {
    pub status: Status,
    pub bounds: LatticeBounds,
    /// Per step, per α: minimum valuation over coordinates in the original basis.
    pub trajectory: Vec<Vec<Option<i64>>>,
    pub certificate: Certificate,
}

/// Every term, known or not, has exponent `≥ lo`.
fn surely_at_least(v: &[Series], lo: &[i64]) -> bool {
    v.iter().all(|x| x.window().lo.iter().zip(lo).all(|(a, b)| a >= b))
}

struct Context {
    re: Rescaled,
    s: Vec<i64>,
    injective: Vec<bool>,
    p: i64,
}

fn context(module: &EtaleModule) -> Result<Context> {
    let re = rescale(module)?;
    let n = module.ring().nvars();
    let p = module.ring().p() as i64;
    let d = module.rank() as i64;
    let s: Vec<i64> = (0..n)
        .map(|al| re.a.data.iter().filter_map(|x| x.val(al)).min().unwrap_or(0).div_euclid(p - 1))
        .collect();
    let injective = (0..n)
        .map(|b| module.ring().is_base() && re.bounds.det_vals[b] - (p - 1) * d * s[b] == 0)
        .collect();
    Ok(Context { re, s, injective, p })
}

fn run(module: &EtaleModule, ctx: &Context, v: &[Series], k_max: usize) -> Result<MembershipVerdict> {
    if v.len() != module.rank() {
        return Err(Error::Malformed(format!("vector of length {} for rank {}", v.len(), module.rank())));
    }
    let n = module.ring().nvars();
    let b = &ctx.re.bounds;
    let kk = vec![b.k; n];
    let neg_s: Vec<i64> = ctx.s.iter().map(|x| -x).collect();
    let mut w: Vec<Series> = v.iter().map(|x| x.shift(&vec![-b.m; n]).tighten()).collect();
    let mut trajectory = Vec::new();
    let verdict = |status, trajectory, certificate| Ok(MembershipVerdict { status, bounds: b.clone(), trajectory, certificate });
    for step in 0..=k_max {
        trajectory.push((0..n).map(|al| w.iter().filter_map(|x| x.val(al)).min().map(|x| x + b.m)).collect());
        for (c, x) in w.iter().enumerate() {
            for al in 0..n {
                if let Some(val) = x.val(al) {
                    if val < -b.r {
                        let rate = (ctx.p - 1) * val + b.det_vals[al];
                        let cert = Certificate::Determinant { step, alpha: al, coordinate: c, val, r: b.r, det_val: b.det_vals[al], rate };
                        return verdict(Status::NotInPlus, trajectory, cert);
                    }
                }
            }
        }
        if w.iter().any(|x| x.window().hi.iter().any(|&h| h <= b.k)) {
            if step == 0 {
                return Err(Error::WindowTooSmall(format!("input is not known up to exponent {}", b.k + b.m)));
            }
            return verdict(Status::Inconclusive, trajectory, Certificate::PrecisionExhausted { step });
        }
        if surely_at_least(&w, &kk) {
            return verdict(Status::InDoublePlus, trajectory, Certificate::Threshold { step, k: b.k });
        }
        if surely_at_least(&w, &neg_s) {
            let beta = (0..n).find(|&be| {
                ctx.injective[be] && w.iter().any(|x| x.terms().keys().any(|e| e[be] == -ctx.s[be]))
            });
            if let Some(beta) = beta {
                return verdict(Status::InPlusOnly, trajectory, Certificate::StableLattice { step, beta, s: ctx.s.clone() });
            }
        }
        if step == k_max {
            break;
        }
        let next: Vec<Series> = w.iter().map(|x| x.subst_phi_s()).collect::<Result<_>>()?;
        w = match ctx.re.a.mul_vec(&next) {
            Ok(x) => x,
            Err(Error::EmptyResultWindow) => {
                return verdict(Status::Inconclusive, trajectory, Certificate::PrecisionExhausted { step: step + 1 })
            }
            Err(e) => return Err(e),
        };
    }
    verdict(Status::Inconclusive, trajectory, Certificate::Exhausted { k_max })
}

/// Classifies `v` (coordinates in the original basis). `k_max` defaults to `k + r + 8`.
pub fn membership(module: &EtaleModule, v: &[Series], k_max: Option<usize>) -> Result<MembershipVerdict> {
    let ctx = context(module)?;
    let k_max = k_max.unwrap_or((ctx.re.bounds.k + ctx.re.bounds.r + 8) as usize);
    run(module, &ctx, v, k_max)
}

/// Independent membership queries, evaluated in parallel.
pub fn membership_batch(
    module: &EtaleModule,
    vectors: &[Vec<Series>],
    k_max: Option<usize>,
    exec: Exec,
) -> Result<Vec<MembershipVerdict>> {
    let ctx = context(module)?;
    let k_max = k_max.unwrap_or((ctx.re.bounds.k + ctx.re.bounds.r + 8) as usize);
    par::map(exec, vectors, |v| run(module, &ctx, v, k_max)).into_iter().collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::coeffs::{Ring, RingTag};
    use crate::matrix::SMat;
    use crate::series::Window;

    fn setup() -> (Ring, Window, EtaleModule) {
        let r = Ring::new(RingTag::base(2, 1, &["x"]).unwrap()).unwrap();
        let w = Window::new(vec![-2], vec![16]).unwrap();
        let a = Series::from_terms(&r, w.clone(), [(vec![-1], vec![1])]).unwrap();
        let m = EtaleModule::new(&r, w.clone(), vec![SMat::from_rows(vec![vec![a]]).unwrap()], vec![vec![]]).unwrap();
        (r, w, m)
    }

    fn mono(r: &Ring, w: &Window, e: i64) -> Vec<Series> {
        vec![Series::from_terms(r, w.clone(), [(vec![e], vec![1])]).unwrap()]
    }

    #[test]
    fn three_regimes_for_inverse_variable() {
        let (r, w, m) = setup();
        let a = membership(&m, &mono(&r, &w, 2), None).unwrap();
        assert_eq!(a.status, Status::InDoublePlus);
        assert_eq!(a.trajectory.iter().map(|t| t[0].unwrap()).collect::<Vec<_>>(), vec![2, 3, 5]);
        assert_eq!(membership(&m, &mono(&r, &w, 1), None).unwrap().status, Status::InPlusOnly);
        let c = membership(&m, &mono(&r, &w, 0), None).unwrap();
        assert_eq!(c.status, Status::NotInPlus);
        assert_eq!(c.trajectory.iter().map(|t| t[0].unwrap()).collect::<Vec<_>>(), vec![0, -1]);
        assert_eq!(membership(&m, &mono(&r, &w, 2), Some(0)).unwrap().status, Status::Inconclusive);
    }
}
