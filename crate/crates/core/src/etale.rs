//! Free étale modules given by matrices of the partial Frobenii and of
//! chosen Γ-generators, in a fixed basis. Columns are images of basis vectors.
//!
//! Consistency identities checked on the common windows:
//! `A_α φ_α(A_β) = A_β φ_β(A_α)`, `G γ(A_β) = A_β φ_β(G)` for every listed
//! generator G, and `G_1 γ_1(G_2) = G_2 γ_2(G_1)` for every pair of generators.

use serde::Serialize;

use crate::coeffs::{Ring, RingTag};
use crate::error::{Error, Result};
use crate::matrix::SMat;
use crate::par::{self, Exec};
use crate::semilinear::{apply_ring, apply_step, OperatorSpec, Step};
use crate::series::{Exp, Series, Window};

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct GammaGen {
    pub c: i64,
    pub mat: SMat,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct EtaleModule {
    ring: Ring,
    rank: usize,
    window: Window,
    phi: Vec<SMat>,
    gamma: Vec<Vec<GammaGen>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EtaleWitness {
    pub alpha: String,
    pub unit: bool,
    pub monomial: Option<Exp>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct EtaleReport {
    pub etale: bool,
    pub witnesses: Vec<EtaleWitness>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConsistencyFailure {
    pub identity: String,
    pub row: usize,
    pub col: usize,
    pub exponent: Exp,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConsistencyReport {
    pub consistent: bool,
    pub checked: usize,
    pub failures: Vec<ConsistencyFailure>,
    /// Γ-data is checked only for the listed generators.
    pub note: String,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DetValEntry {
    pub generator: String,
    pub val: Option<i64>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DetValReport {
    pub alpha: String,
    pub pass: bool,
    pub values: Vec<DetValEntry>,
}

/// Identity to check: `L·s(R) = R'·s'(L')`, with labels.
struct Identity {
    label: String,
    lhs: (SMat, Step, SMat),
    rhs: (SMat, Step, SMat),
}

fn twist(m: &SMat, s: Step) -> Result<SMat> {
    m.map(|x| apply_step(s, x))
}

impl EtaleModule {
    /// Builds a module and checks consistency; fails on the first violation.
    pub fn new(ring: &Ring, window: Window, phi: Vec<SMat>, gamma: Vec<Vec<GammaGen>>) -> Result<EtaleModule> {
        let m = EtaleModule::new_unchecked(ring, window, phi, gamma)?;
        let rep = m.check_consistency()?;
        if let Some(f) = rep.failures.first() {
            return Err(Error::Malformed(format!(
                "inconsistent module: {} fails at ({}, {}) exponent {:?}",
                f.identity, f.row, f.col, f.exponent
            )));
        }
        Ok(m)
    }

    /// Builds a module checking only shapes; consistency is left to the caller.
    pub fn new_unchecked(ring: &Ring, window: Window, phi: Vec<SMat>, gamma: Vec<Vec<GammaGen>>) -> Result<EtaleModule> {
        let n = ring.nvars();
        if phi.len() != n || gamma.len() != n {
            return Err(Error::DeltaMismatch);
        }
        let rank = phi.first().map_or(0, |m| m.rows);
        if rank == 0 {
            return Err(Error::Malformed("rank must be positive".into()));
        }
        let all = phi.iter().chain(gamma.iter().flatten().map(|g| &g.mat));
        for m in all {
            if m.rows != rank || m.cols != rank {
                return Err(Error::Malformed(format!("expected {rank}x{rank} matrices")));
            }
            if m.data.iter().any(|s| s.ring() != ring) {
                return Err(Error::RingMismatch);
            }
        }
        for (a, gens) in gamma.iter().enumerate() {
            for g in gens {
                if g.c.rem_euclid(ring.p() as i64) == 0 {
                    return Err(Error::NonUnitExponent(g.c));
                }
                if gens.iter().filter(|h| h.c == g.c).count() > 1 {
                    return Err(Error::Malformed(format!("duplicate Γ parameter {} at {}", g.c, ring.var_name(a))));
                }
            }
        }
        Ok(EtaleModule { ring: ring.clone(), rank, window, phi, gamma })
    }

    /// Identity matrices for every φ_α and for the listed Γ parameters.
    pub fn trivial(ring: &Ring, window: &Window, rank: usize, gamma_params: &[i64]) -> Result<EtaleModule> {
        let id = SMat::identity(ring, window, rank)?;
        let phi = vec![id.clone(); ring.nvars()];
        let gamma = (0..ring.nvars())
            .map(|_| gamma_params.iter().map(|&c| GammaGen { c, mat: id.clone() }).collect())
            .collect();
        EtaleModule::new_unchecked(ring, window.clone(), phi, gamma)
    }

    pub fn ring(&self) -> &Ring {
        &self.ring
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn window(&self) -> &Window {
        &self.window
    }

    pub fn phi(&self, alpha: usize) -> &SMat {
        &self.phi[alpha]
    }

    pub fn phis(&self) -> &[SMat] {
        &self.phi
    }

    pub fn gammas(&self, alpha: usize) -> &[GammaGen] {
        &self.gamma[alpha]
    }

    pub fn all_gammas(&self) -> &[Vec<GammaGen>] {
        &self.gamma
    }

    fn p(&self) -> u64 {
        self.ring.p()
    }

    pub fn identity_matrix(&self) -> Result<SMat> {
        SMat::identity(&self.ring, &self.window, self.rank)
    }

    pub fn step_matrix(&self, s: Step) -> Result<SMat> {
        match s {
            Step::Phi(a) => Ok(self.phi[a].clone()),
            Step::Gamma(_, 1) => self.identity_matrix(),
            Step::Gamma(a, c) => self.gamma[a]
                .iter()
                .find(|g| g.c == c)
                .map(|g| g.mat.clone())
                .ok_or(Error::MissingGammaParameter(c)),
        }
    }

    /// Matrix of `s_1 ∘ … ∘ s_k`: `A_{s_1} · s_1(A_{s_2 … s_k})`.
    pub fn steps_matrix(&self, steps: &[Step]) -> Result<SMat> {
        let Some((&last, rest)) = steps.split_last() else {
            return self.identity_matrix();
        };
        let mut m = self.step_matrix(last)?;
        for &s in rest.iter().rev() {
            m = self.step_matrix(s)?.mul(&twist(&m, s)?)?;
        }
        Ok(m)
    }

    pub fn operator_matrix(&self, t: &OperatorSpec) -> Result<SMat> {
        self.check_spec(t)?;
        self.steps_matrix(&t.steps())
    }

    fn check_spec(&self, t: &OperatorSpec) -> Result<()> {
        if t.nvars() != self.ring.nvars() || t.p != self.p() {
            return Err(Error::DeltaMismatch);
        }
        Ok(())
    }

    /// `φ_t(v) = A_t · t(v)` on coordinate vectors.
    pub fn semilinear_apply(&self, t: &OperatorSpec, v: &[Series]) -> Result<Vec<Series>> {
        if v.len() != self.rank {
            return Err(Error::Malformed(format!("vector of length {} for rank {}", v.len(), self.rank)));
        }
        let a = self.operator_matrix(t)?;
        let tv = v.iter().map(|x| apply_ring(t, x)).collect::<Result<Vec<_>>>()?;
        a.mul_vec(&tv)
    }

    pub fn check_etale(&self) -> Result<EtaleReport> {
        let mut witnesses = Vec::new();
        for (a, m) in self.phi.iter().enumerate() {
            let w = m.det()?.is_unit_in_edelta();
            witnesses.push(EtaleWitness { alpha: self.ring.var_name(a).to_string(), unit: w.unit, monomial: w.monomial });
        }
        Ok(EtaleReport { etale: witnesses.iter().all(|w| w.unit), witnesses })
    }

    fn identities(&self) -> Vec<Identity> {
        let n = self.ring.nvars();
        let name = |a: usize| self.ring.var_name(a).to_string();
        let mut out = Vec::new();
        for a in 0..n {
            for b in a + 1..n {
                out.push(Identity {
                    label: format!("A_{}·φ_{}(A_{}) = A_{}·φ_{}(A_{})", name(a), name(a), name(b), name(b), name(b), name(a)),
                    lhs: (self.phi[a].clone(), Step::Phi(a), self.phi[b].clone()),
                    rhs: (self.phi[b].clone(), Step::Phi(b), self.phi[a].clone()),
                });
            }
        }
        let gens: Vec<(usize, &GammaGen)> =
            self.gamma.iter().enumerate().flat_map(|(a, gs)| gs.iter().map(move |g| (a, g))).collect();
        for &(a, g) in &gens {
            for b in 0..n {
                out.push(Identity {
                    label: format!("G_{}({})·γ(A_{}) = A_{}·φ_{}(G_{}({}))", name(a), g.c, name(b), name(b), name(b), name(a), g.c),
                    lhs: (g.mat.clone(), Step::Gamma(a, g.c), self.phi[b].clone()),
                    rhs: (self.phi[b].clone(), Step::Phi(b), g.mat.clone()),
                });
            }
        }
        for (i, &(a, g)) in gens.iter().enumerate() {
            for &(b, k) in &gens[i + 1..] {
                out.push(Identity {
                    label: format!("G_{}({})·γ(G_{}({})) = G_{}({})·γ(G_{}({}))", name(a), g.c, name(b), k.c, name(b), k.c, name(a), g.c),
                    lhs: (g.mat.clone(), Step::Gamma(a, g.c), k.mat.clone()),
                    rhs: (k.mat.clone(), Step::Gamma(b, k.c), g.mat.clone()),
                });
            }
        }
        out
    }

    pub fn check_consistency(&self) -> Result<ConsistencyReport> {
        self.check_consistency_with(Exec::default())
    }

    pub fn check_consistency_with(&self, exec: Exec) -> Result<ConsistencyReport> {
        let ids = self.identities();
        let results = par::map(exec, &ids, |id| -> Result<Option<ConsistencyFailure>> {
            let l = id.lhs.0.mul(&twist(&id.lhs.2, id.lhs.1)?)?;
            let r = id.rhs.0.mul(&twist(&id.rhs.2, id.rhs.1)?)?;
            Ok(l.first_difference(&r).map(|(row, col, exponent)| ConsistencyFailure {
                identity: id.label.clone(),
                row,
                col,
                exponent,
            }))
        });
        let mut failures = Vec::new();
        for r in results {
            if let Some(f) = r? {
                failures.push(f);
            }
        }
        Ok(ConsistencyReport {
            consistent: failures.is_empty(),
            checked: ids.len(),
            failures,
            note: "Γ-action verified only for the listed generators".into(),
        })
    }

    /// Kronecker products; Γ keeps the parameters listed in both factors.
    pub fn tensor(&self, other: &EtaleModule) -> Result<EtaleModule> {
        if self.ring != other.ring {
            return Err(Error::RingMismatch);
        }
        let phi = self.phi.iter().zip(&other.phi).map(|(a, b)| a.kron(b)).collect::<Result<_>>()?;
        let mut gamma = Vec::new();
        for (ga, gb) in self.gamma.iter().zip(&other.gamma) {
            let mut gens = Vec::new();
            for g in ga {
                if let Some(h) = gb.iter().find(|h| h.c == g.c) {
                    gens.push(GammaGen { c: g.c, mat: g.mat.kron(&h.mat)? });
                }
            }
            gamma.push(gens);
        }
        let window = self.window.intersect(&other.window).unwrap_or_else(|_| self.window.clone());
        EtaleModule::new_unchecked(&self.ring, window, phi, gamma)
    }

    /// Inverse transposes of all matrices.
    pub fn dual(&self) -> Result<EtaleModule> {
        let inv_t = |m: &SMat| -> Result<SMat> { Ok(m.inverse()?.transpose()) };
        let phi = self.phi.iter().map(inv_t).collect::<Result<_>>()?;
        let gamma = self
            .gamma
            .iter()
            .map(|gs| gs.iter().map(|g| Ok(GammaGen { c: g.c, mat: inv_t(&g.mat)? })).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        EtaleModule::new_unchecked(&self.ring, self.window.clone(), phi, gamma)
    }

    /// Base change along t: every matrix becomes `t(A)`.
    pub fn pullback(&self, t: &OperatorSpec) -> Result<EtaleModule> {
        self.check_spec(t)?;
        let ap = |m: &SMat| m.map(|x| apply_ring(t, x));
        let phi = self.phi.iter().map(ap).collect::<Result<_>>()?;
        let gamma = self
            .gamma
            .iter()
            .map(|gs| gs.iter().map(|g| Ok(GammaGen { c: g.c, mat: ap(&g.mat)? })).collect::<Result<Vec<_>>>())
            .collect::<Result<_>>()?;
        EtaleModule::new_unchecked(&self.ring, self.window.clone(), phi, gamma)
    }

    /// New basis given by the columns of Q: `A' = Q^{-1} A φ(Q)`, `G' = Q^{-1} G γ(Q)`.
    ///
    /// Operands and partial products are tightened to their known supports.
    pub fn base_change(&self, q: &SMat, q_inv: &SMat) -> Result<EtaleModule> {
        let tight = |m: &SMat| m.map(|x| Ok(x.tighten()));
        let (q, q_inv) = (tight(q)?, tight(q_inv)?);
        let conj = |m: &SMat, s: Step| -> Result<SMat> {
            let left = tight(&q_inv.mul(&tight(m)?)?)?;
            tight(&left.mul(&tight(&twist(&q, s)?)?)?)
        };
        let phi = self.phi.iter().enumerate().map(|(a, m)| conj(m, Step::Phi(a))).collect::<Result<_>>()?;
        let gamma = self
            .gamma
            .iter()
            .enumerate()
            .map(|(a, gs)| {
                gs.iter()
                    .map(|g| Ok(GammaGen { c: g.c, mat: conj(&g.mat, Step::Gamma(a, g.c))? }))
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<_>>()?;
        EtaleModule::new_unchecked(&self.ring, self.window.clone(), phi, gamma)
    }

    /// The diagonal restriction to one variable, enumerating Δ in ring order.
    pub fn reduce_diagonal(&self) -> Result<EtaleModule> {
        let order: Vec<usize> = (0..self.ring.nvars()).collect();
        self.reduce_diagonal_with_order(&order)
    }

    /// φ-matrix `A_{α_1} φ_{α_1}(A_{α_2}) ⋯` and, for each parameter c present at
    /// every α, the Γ-matrix of the simultaneous substitution, both restricted
    /// along `X_α ↦ X`.
    pub fn reduce_diagonal_with_order(&self, order: &[usize]) -> Result<EtaleModule> {
        let n = self.ring.nvars();
        let mut sorted = order.to_vec();
        sorted.sort_unstable();
        if sorted != (0..n).collect::<Vec<_>>() {
            return Err(Error::Malformed("order must enumerate every variable once".into()));
        }
        let tag = RingTag::base(self.p(), self.ring.h(), &["x"])?;
        let target = Ring::new(tag)?;
        let diag = |m: &SMat| m.map(|x| x.tighten().diagonal(&target));
        let steps: Vec<Step> = order.iter().map(|&a| Step::Phi(a)).collect();
        let phi = diag(&self.steps_matrix(&steps)?)?;
        let params: Vec<i64> = self.gamma[order[0]].iter().map(|g| g.c).collect();
        let mut gens = Vec::new();
        for gs in &self.gamma {
            if let Some(c) = gs.iter().map(|g| g.c).find(|c| !params.contains(c)) {
                return Err(Error::MissingGammaParameter(c));
            }
            if let Some(&c) = params.iter().find(|&&c| !gs.iter().any(|g| g.c == c)) {
                return Err(Error::MissingGammaParameter(c));
            }
        }
        for &c in &params {
            let steps: Vec<Step> = order.iter().map(|&a| Step::Gamma(a, c)).collect();
            gens.push(GammaGen { c, mat: diag(&self.steps_matrix(&steps)?)? });
        }
        let w = crate::series::diagonal_window(&self.window);
        let w = Window::new(w.lo, w.hi)?;
        EtaleModule::new_unchecked(&target, w, vec![phi], vec![gens])
    }

    /// `val_{X_α}(det A_t)` for the generators of the monoid without φ_α.
    pub fn rank1_detval_check(&self, alpha: usize) -> Result<DetValReport> {
        let mut values = Vec::new();
        for b in 0..self.ring.nvars() {
            if b != alpha {
                let v = self.phi[b].det()?.val(alpha);
                values.push(DetValEntry { generator: format!("phi_{}", self.ring.var_name(b)), val: v });
            }
        }
        for (b, gs) in self.gamma.iter().enumerate() {
            for g in gs {
                let v = g.mat.det()?.val(alpha);
                values.push(DetValEntry { generator: format!("gamma_{}({})", self.ring.var_name(b), g.c), val: v });
            }
        }
        Ok(DetValReport {
            alpha: self.ring.var_name(alpha).to_string(),
            pass: values.iter().all(|e| e.val == Some(0)),
            values,
        })
    }
}
