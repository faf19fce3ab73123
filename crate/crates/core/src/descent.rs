//! Artin–Schreier solving in series rings, Hilbert-90 descent, and the two
//! functors between étale modules and finite representations.
//!
//! Supported representations: the inertia-free part acts through
//! `∏ Gal(F_{q_α}/F_p)` by commuting matrices `S_α` with `S_α^{f_α} = 1`, and
//! chosen Γ-generators act by matrices commuting with everything. For such V the
//! invariants of `E'⊗V` have a constant basis B with `S_α σ_α(B) = B`, and then
//! `A_α = B^{-1} σ_α(B)`, `G' = B^{-1} G B`.

use std::collections::HashMap;

use rand::{Rng as _, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::coeffs::{extend_factor, solve_id_minus_frob, Coeff, Ring, RingEmbedding, RingTag};
use crate::error::{Error, Result};
use crate::etale::{EtaleModule, GammaGen};
use crate::linalg::{self, Mat};
use crate::matrix::SMat;
use crate::par::{self, Exec};
use crate::series::{Exp, Series, Window};
use crate::zmod::Zmod;

/// Square matrix with entries in a coefficient algebra.
pub type CoeffMatrix = Vec<Vec<Coeff>>;

#[derive(Clone, Debug)]
pub struct AsSeriesSolution {
    pub x: Series,
    /// Inclusion of the input coefficient algebra into the ring of `x`.
    pub embedding: RingEmbedding,
    /// Enlarged ring when the α-constant part needed a degree-p extension.
    pub extension: Option<RingTag>,
}

/// Solves `x - φ_α(x) = c` exactly on the window of `c` (characteristic p).
///
/// Positive α-part: `x = Σ_n φ_α^n(c)`. α-constant part: coefficientwise in
/// the coefficient algebra, enlarging factor α by degree p once if needed.
pub fn as_solve_series(c: &Series, alpha: usize) -> Result<AsSeriesSolution> {
    let ring = c.ring();
    if ring.h() != 1 {
        return Err(Error::Unsupported("Artin–Schreier solving needs characteristic p".into()));
    }
    if alpha >= ring.nvars() {
        return Err(Error::UnknownVariable(format!("#{alpha}")));
    }
    let (pos, zero, neg) = c.alpha_parts(alpha);
    if !neg.is_zero() {
        return Err(Error::PrincipalPartUnsupported);
    }
    let mut target = ring.clone();
    let mut embedding = crate::coeffs::identity_embedding(ring);
    let mut extension = None;
    let mut solved: Vec<(Exp, Coeff)> = Vec::new();
    for (e, u) in zero.terms() {
        match solve_id_minus_frob(&target, &embedding.apply(u), alpha)? {
            Some(y) => solved.push((e.clone(), y)),
            None => break,
        }
    }
    if solved.len() < zero.nterms() {
        let (big, emb) = extend_factor(ring, alpha, ring.p() as u32)?;
        extension = Some(big.tag().clone());
        target = big;
        embedding = emb;
        solved.clear();
        for (e, u) in zero.terms() {
            let y = solve_id_minus_frob(&target, &embedding.apply(u), alpha)?
                .ok_or_else(|| Error::Malformed("degree-p extension did not split the equation".into()))?;
            solved.push((e.clone(), y));
        }
    }
    let hi = c.window().hi[alpha];
    let p = ring.p() as i64;
    let mut x = Series::from_terms(&target, c.window().clone(), solved)?;
    for (e, u) in pos.terms() {
        let mut e = e.clone();
        let mut u = embedding.apply(u);
        while e[alpha] < hi {
            x = x.add(&Series::monomial(&target, c.window().clone(), e.clone(), u.clone())?)?;
            e[alpha] *= p;
            u = target.frob(&u, alpha)?;
        }
    }
    Ok(AsSeriesSolution { x, embedding, extension })
}

fn cmat_mul(ring: &Ring, a: &CoeffMatrix, b: &CoeffMatrix) -> CoeffMatrix {
    let n = a.len();
    let mut out = vec![vec![ring.zero(); n]; n];
    for (i, row) in out.iter_mut().enumerate() {
        for (j, cell) in row.iter_mut().enumerate() {
            for k in 0..n {
                ring.mul_acc(cell, &a[i][k], &b[k][j]);
            }
        }
    }
    out
}

fn cmat_frob(ring: &Ring, a: &CoeffMatrix, alpha: usize) -> Result<CoeffMatrix> {
    a.iter().map(|row| row.iter().map(|x| ring.frob(x, alpha)).collect()).collect()
}

fn cmat_identity(ring: &Ring, n: usize) -> CoeffMatrix {
    (0..n).map(|i| (0..n).map(|j| if i == j { ring.one() } else { ring.zero() }).collect()).collect()
}

/// Embeds a Z/p^h matrix as scalars.
pub fn cmat_from_scalars(ring: &Ring, m: &Mat) -> CoeffMatrix {
    m.to_rows().iter().map(|row| row.iter().map(|&x| ring.scalar(x)).collect()).collect()
}

/// The Z/p^h matrix if every entry is a scalar.
pub fn cmat_to_scalars(ring: &Ring, m: &CoeffMatrix) -> Option<Mat> {
    let rows: Option<Vec<Vec<u64>>> = m.iter().map(|row| row.iter().map(|x| ring.as_scalar(x)).collect()).collect();
    rows.map(|r| Mat::from_rows(&r))
}

/// Left multiplication on `R^n`, coordinates indexed `i·dim + t`.
fn cmat_big(ring: &Ring, a: &CoeffMatrix) -> Mat {
    let n = a.len();
    let dim = ring.dim();
    let mut out = Mat::zeros(n * dim, n * dim);
    for i in 0..n {
        for j in 0..n {
            let m = ring.mul_matrix(&a[i][j]);
            for r in 0..dim {
                for c in 0..dim {
                    out.set(i * dim + r, j * dim + c, m.get(r, c));
                }
            }
        }
    }
    out
}

pub fn cmat_inverse(ring: &Ring, a: &CoeffMatrix) -> Option<CoeffMatrix> {
    let n = a.len();
    let dim = ring.dim();
    let inv = linalg::inverse_zmod(&cmat_big(ring, a), &ring.z())?;
    let mut out = vec![vec![ring.zero(); n]; n];
    let one_idx: Vec<usize> = ring.one().iter().enumerate().filter(|(_, &x)| x != 0).map(|(i, _)| i).collect();
    for j in 0..n {
        let mut rhs = vec![0u64; n * dim];
        for &t in &one_idx {
            rhs[j * dim + t] = ring.one()[t];
        }
        let col = inv.mul_vec(&rhs, &ring.z());
        for (i, row) in out.iter_mut().enumerate() {
            row[j] = col[i * dim..(i + 1) * dim].to_vec();
        }
    }
    Some(out)
}

/// A Z/p^h-basis of `{v ∈ R^n : M_α σ_α(v) = v ∀α}`, returned as the columns of
/// a matrix invertible over R.
///
/// `action[α]` is the matrix of the generator of `Gal` acting on factor α; the
/// cocycle relations `N_α(M_α) = 1` and `M_α σ_α(M_β) = M_β σ_β(M_α)` are checked.
pub fn h90_invariant_basis(ring: &Ring, action: &[CoeffMatrix]) -> Result<CoeffMatrix> {
    h90_invariant_basis_with(ring, action, Exec::default())
}

pub fn h90_invariant_basis_with(ring: &Ring, action: &[CoeffMatrix], exec: Exec) -> Result<CoeffMatrix> {
    if action.len() != ring.nvars() {
        return Err(Error::Malformed(format!("expected {} generator matrices", ring.nvars())));
    }
    let n = action.first().map_or(0, |m| m.len());
    if action.iter().any(|m| m.len() != n || m.iter().any(|r| r.len() != n)) {
        return Err(Error::Malformed("generator matrices must be square of equal size".into()));
    }
    let id = cmat_identity(ring, n);
    for (a, m) in action.iter().enumerate() {
        let mut norm = id.clone();
        let mut t = m.clone();
        for _ in 0..ring.residue_degree(a) {
            norm = cmat_mul(ring, &norm, &t);
            t = cmat_frob(ring, &t, a)?;
        }
        if norm != id {
            return Err(Error::NotACocycle(format!("norm of the generator at {} is not 1", ring.var_name(a))));
        }
        for (b, mb) in action.iter().enumerate().skip(a + 1) {
            let l = cmat_mul(ring, m, &cmat_frob(ring, mb, a)?);
            let r = cmat_mul(ring, mb, &cmat_frob(ring, m, b)?);
            if l != r {
                return Err(Error::NotACocycle(format!(
                    "generators at {} and {} do not commute",
                    ring.var_name(a),
                    ring.var_name(b)
                )));
            }
        }
    }
    let z = ring.z();
    let dim = ring.dim();
    let mut blocks = Vec::new();
    for (a, m) in action.iter().enumerate() {
        let fr = ring.frob_matrix(a)?;
        let sig = Mat::identity(n).kron(&fr, &z);
        blocks.push(cmat_big(ring, m).mul(&sig, &z).sub(&Mat::identity(n * dim), &z));
    }
    let sys = if blocks.is_empty() { Mat::zeros(0, n * dim) } else { Mat::vstack(&blocks) };
    let basis = linalg::free_kernel_basis(&sys, &z, exec).map_err(|e| Error::DescentDefect(e.to_string()))?;
    if basis.len() != n {
        return Err(Error::DescentDefect(format!("invariants have rank {} instead of {n}", basis.len())));
    }
    let mut b = vec![vec![ring.zero(); n]; n];
    for (j, v) in basis.iter().enumerate() {
        for (i, row) in b.iter_mut().enumerate() {
            row[j] = v[i * dim..(i + 1) * dim].to_vec();
        }
    }
    if cmat_inverse(ring, &b).is_none() {
        return Err(Error::DescentDefect("invariants do not span over the extended ring".into()));
    }
    Ok(b)
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Unram {
    pub f: u32,
    pub mat: Vec<Vec<u64>>,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct RepGamma {
    pub c: i64,
    pub mat: Vec<Vec<u64>>,
}

/// A representation over Z/p^h of the supported class, one slot per variable.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct FiniteRepData {
    pub p: u64,
    pub h: u32,
    pub names: Vec<String>,
    pub dim: usize,
    pub unram: Vec<Option<Unram>>,
    pub gamma: Vec<Vec<RepGamma>>,
}

fn mat_of(rows: &[Vec<u64>]) -> Mat {
    Mat::from_rows(rows)
}

fn mat_pow(m: &Mat, k: u32, z: &Zmod) -> Mat {
    let mut out = Mat::identity(m.rows);
    for _ in 0..k {
        out = out.mul(m, z);
    }
    out
}

impl FiniteRepData {
    pub fn trivial(p: u64, h: u32, names: &[&str], dim: usize) -> FiniteRepData {
        FiniteRepData {
            p,
            h,
            names: names.iter().map(|s| s.to_string()).collect(),
            dim,
            unram: vec![None; names.len()],
            gamma: vec![Vec::new(); names.len()],
        }
    }

    pub fn z(&self) -> Result<Zmod> {
        Zmod::new(self.p, self.h)
    }

    pub fn residue_degree(&self, alpha: usize) -> u32 {
        self.unram[alpha].as_ref().map_or(1, |u| u.f)
    }

    /// Unramified generator at α, identity if absent.
    pub fn frob_matrix(&self, alpha: usize) -> Mat {
        self.unram[alpha].as_ref().map_or_else(|| Mat::identity(self.dim), |u| mat_of(&u.mat))
    }

    fn all_matrices(&self) -> Vec<(String, Mat)> {
        let mut out = Vec::new();
        for (a, name) in self.names.iter().enumerate() {
            if let Some(u) = &self.unram[a] {
                out.push((format!("unram {name}"), mat_of(&u.mat)));
            }
            for g in &self.gamma[a] {
                out.push((format!("gamma {name} c={}", g.c), mat_of(&g.mat)));
            }
        }
        out
    }

    /// Shapes, invertibility mod p, `S_α^{f_α} = 1`, and pairwise commutation.
    pub fn validate(&self) -> Result<()> {
        let z = self.z()?;
        let n = self.names.len();
        if self.unram.len() != n || self.gamma.len() != n {
            return Err(Error::Malformed("one unram and gamma slot per variable".into()));
        }
        let mats = self.all_matrices();
        for (label, m) in &mats {
            if m.rows != self.dim || m.cols != self.dim {
                return Err(Error::Malformed(format!("{label}: expected {0}x{0}", self.dim)));
            }
            if !linalg::is_invertible(m, &z) {
                return Err(Error::NotACocycle(format!("{label} is not invertible mod p")));
            }
        }
        for (a, u) in self.unram.iter().enumerate() {
            if let Some(u) = u {
                if u.f == 0 {
                    return Err(Error::Malformed("residue degree must be positive".into()));
                }
                if mat_pow(&mat_of(&u.mat), u.f, &z) != Mat::identity(self.dim) {
                    return Err(Error::NotACocycle(format!("unram {}: S^f is not 1", self.names[a])));
                }
            }
        }
        for i in 0..mats.len() {
            for j in i + 1..mats.len() {
                if mats[i].1.mul(&mats[j].1, &z) != mats[j].1.mul(&mats[i].1, &z) {
                    return Err(Error::NotACocycle(format!("{} and {} do not commute", mats[i].0, mats[j].0)));
                }
            }
        }
        Ok(())
    }

    /// `V_1 ⊗ V_2` with Kronecker matrices; Γ-generators kept where both list c.
    pub fn tensor(&self, other: &FiniteRepData) -> Result<FiniteRepData> {
        if self.p != other.p || self.h != other.h || self.names != other.names {
            return Err(Error::RingMismatch);
        }
        let z = self.z()?;
        let n = self.names.len();
        let mut unram = Vec::with_capacity(n);
        let mut gamma = Vec::with_capacity(n);
        for a in 0..n {
            let (f1, f2) = (self.residue_degree(a), other.residue_degree(a));
            unram.push(if self.unram[a].is_none() && other.unram[a].is_none() {
                None
            } else {
                Some(Unram { f: lcm(f1, f2), mat: self.frob_matrix(a).kron(&other.frob_matrix(a), &z).to_rows() })
            });
            let mut gs = Vec::new();
            for g in &self.gamma[a] {
                if let Some(g2) = other.gamma[a].iter().find(|x| x.c == g.c) {
                    gs.push(RepGamma { c: g.c, mat: mat_of(&g.mat).kron(&mat_of(&g2.mat), &z).to_rows() });
                }
            }
            gamma.push(gs);
        }
        Ok(FiniteRepData { p: self.p, h: self.h, names: self.names.clone(), dim: self.dim * other.dim, unram, gamma })
    }

    /// Restriction along the diagonal: `S = ∏ S_α`, `G_c = ∏ G_{α,c}`.
    pub fn diagonal(&self) -> Result<FiniteRepData> {
        let z = self.z()?;
        let n = self.names.len();
        let mut s = Mat::identity(self.dim);
        let mut f = 1;
        for a in 0..n {
            s = s.mul(&self.frob_matrix(a), &z);
            f = lcm(f, self.residue_degree(a));
        }
        let params: Vec<i64> = self.gamma.first().map_or(Vec::new(), |g| g.iter().map(|x| x.c).collect());
        let mut gs = Vec::new();
        for &c in &params {
            let mut g = Mat::identity(self.dim);
            for a in 0..n {
                let m = self.gamma[a].iter().find(|x| x.c == c).ok_or(Error::MissingGammaParameter(c))?;
                g = g.mul(&mat_of(&m.mat), &z);
            }
            gs.push(RepGamma { c, mat: g.to_rows() });
        }
        for row in &self.gamma {
            if let Some(x) = row.iter().find(|x| !params.contains(&x.c)) {
                return Err(Error::MissingGammaParameter(x.c));
            }
        }
        let unram = if self.unram.iter().all(|u| u.is_none()) { None } else { Some(Unram { f, mat: s.to_rows() }) };
        Ok(FiniteRepData { p: self.p, h: self.h, names: vec!["x".into()], dim: self.dim, unram: vec![unram], gamma: vec![gs] })
    }
}

fn lcm(a: u32, b: u32) -> u32 {
    fn gcd(a: u32, b: u32) -> u32 {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    a / gcd(a, b) * b
}

/// Unramified coefficient degrees per variable and the solving box.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct TrivializationLevel {
    pub f: Vec<u32>,
    pub window: Window,
}

impl TrivializationLevel {
    pub fn new(f: Vec<u32>, window: Window) -> Result<TrivializationLevel> {
        if f.len() != window.nvars() || f.contains(&0) {
            return Err(Error::Malformed("level needs a positive degree per variable".into()));
        }
        Ok(TrivializationLevel { f, window })
    }

    /// Same box, degrees `lcm` with the representation's.
    pub fn covering(rep: &FiniteRepData, window: Window) -> Result<TrivializationLevel> {
        let f = (0..rep.names.len()).map(|a| rep.residue_degree(a)).collect();
        TrivializationLevel::new(f, window)
    }

    fn ring(&self, p: u64, h: u32, names: &[String]) -> Result<Ring> {
        let factors: Vec<(&str, u32)> = names.iter().map(|s| s.as_str()).zip(self.f.iter().copied()).collect();
        Ring::new(RingTag::standard(p, h, &factors)?)
    }
}

fn constant(ring: &Ring, window: &Window, c: u64) -> Result<Series> {
    if c == 0 {
        return Series::zero(ring, window.clone());
    }
    Series::monomial(ring, window.clone(), vec![0; ring.nvars()], ring.scalar(c))
}

fn constant_smat(ring: &Ring, window: &Window, m: &Mat) -> Result<SMat> {
    let rows = m.to_rows().iter().map(|r| r.iter().map(|&c| constant(ring, window, c)).collect()).collect::<Result<_>>()?;
    SMat::from_rows(rows)
}

/// `𝔻(V)`: constant matrices `B^{-1}σ_α(B)` and `B^{-1}GB` over the base ring.
pub fn dee_functor(v: &FiniteRepData, level: &TrivializationLevel) -> Result<EtaleModule> {
    v.validate()?;
    let n = v.names.len();
    if level.f.len() != n {
        return Err(Error::Malformed("level arity differs from the representation".into()));
    }
    for a in 0..n {
        if !level.f[a].is_multiple_of(v.residue_degree(a)) {
            return Err(Error::UnsupportedRamification(format!(
                "level degree {} at {} does not trivialize the unramified action of degree {}",
                level.f[a],
                v.names[a],
                v.residue_degree(a)
            )));
        }
    }
    if !level.window.contains(&vec![0; n]) {
        return Err(Error::Malformed("window must contain the constant term".into()));
    }
    let ext = level.ring(v.p, v.h, &v.names)?;
    let action: Vec<CoeffMatrix> = (0..n).map(|a| cmat_from_scalars(&ext, &v.frob_matrix(a))).collect();
    let b = h90_invariant_basis(&ext, &action)?;
    let b_inv = cmat_inverse(&ext, &b).ok_or_else(|| Error::DescentDefect("basis not invertible".into()))?;
    let base = Ring::new(RingTag::base(v.p, v.h, &v.names.iter().map(|s| s.as_str()).collect::<Vec<_>>())?)?;
    let down = |m: &CoeffMatrix| {
        cmat_to_scalars(&ext, m).ok_or_else(|| Error::DescentDefect("descended matrix is not Galois-invariant".into()))
    };
    let mut phi = Vec::with_capacity(n);
    for a in 0..n {
        let m = down(&cmat_mul(&ext, &b_inv, &cmat_frob(&ext, &b, a)?))?;
        phi.push(constant_smat(&base, &level.window, &m)?);
    }
    let mut gamma = Vec::with_capacity(n);
    for gs in &v.gamma {
        let mut row = Vec::new();
        for g in gs {
            let gm = cmat_from_scalars(&ext, &mat_of(&g.mat));
            let m = down(&cmat_mul(&ext, &b_inv, &cmat_mul(&ext, &gm, &b)))?;
            row.push(GammaGen { c: g.c, mat: constant_smat(&base, &level.window, &m)? });
        }
        gamma.push(row);
    }
    EtaleModule::new(&base, level.window.clone(), phi, gamma)
}

/// Simultaneous φ-fixed vectors of the level-extended, boxed module.
#[derive(Clone, Debug)]
pub struct FixedSpace {
    pub ring: Ring,
    pub window: Window,
    pub rank: usize,
    points: Vec<Exp>,
    /// Z/p^h-basis; coordinate `(i·|box| + b)·dim + t`.
    pub basis: Vec<Vec<u64>>,
}

impl FixedSpace {
    fn coords_len(&self) -> usize {
        self.rank * self.points.len() * self.ring.dim()
    }

    /// Coordinates of a vector of series, read on the box.
    fn read(&self, v: &[Series]) -> Result<Vec<u64>> {
        let dim = self.ring.dim();
        let mut out = vec![0u64; self.coords_len()];
        for (i, s) in v.iter().enumerate() {
            for (b, pt) in self.points.iter().enumerate() {
                if !s.window().below_hi(pt) {
                    return Err(Error::WindowTooSmall(format!("coefficient at {pt:?} is unknown")));
                }
                let c = s.coeff(pt);
                let base = (i * self.points.len() + b) * dim;
                out[base..base + dim].copy_from_slice(&c);
            }
        }
        Ok(out)
    }

    pub fn vector(&self, coords: &[u64]) -> Result<Vec<Series>> {
        let dim = self.ring.dim();
        (0..self.rank)
            .map(|i| {
                let terms = self.points.iter().enumerate().filter_map(|(b, pt)| {
                    let base = (i * self.points.len() + b) * dim;
                    let c = coords[base..base + dim].to_vec();
                    (!self.ring.is_zero(&c)).then(|| (pt.clone(), c))
                });
                Series::from_terms(&self.ring, self.window.clone(), terms)
            })
            .collect()
    }

    pub fn basis_vectors(&self) -> Result<Vec<Vec<Series>>> {
        self.basis.iter().map(|c| self.vector(c)).collect()
    }

    /// Coordinates in the fixed basis of a vector known to lie in the span.
    fn solve(&self, w: &[u64], label: &str) -> Result<Vec<u64>> {
        let z = self.ring.z();
        let m = Mat::from_cols(&self.basis, w.len());
        linalg::solve_zmod(&m, w, &z, Exec::Sequential)
            .ok_or_else(|| Error::NonFreeSolution(format!("{label} does not preserve the fixed space")))
    }
}

fn extend_series(s: &Series, ring: &Ring) -> Result<Series> {
    let terms = s.terms().iter().map(|(e, c)| Ok((e.clone(), ring.scalar(c[0])))).collect::<Result<Vec<_>>>()?;
    Series::from_terms(ring, s.window().clone(), terms)
}

/// Builds and solves `A_α φ_α(λ) = λ` for all α, λ supported on the box.
pub fn fixed_space(module: &EtaleModule, level: &TrivializationLevel, exec: Exec) -> Result<FixedSpace> {
    let base = module.ring();
    if !base.is_base() {
        return Err(Error::Unsupported("the fixed-point solver expects a module over the base ring".into()));
    }
    let n = base.nvars();
    if level.f.len() != n || level.window.nvars() != n {
        return Err(Error::Malformed("level arity differs from the module".into()));
    }
    let ring = level.ring(base.p(), base.h(), &base.var_names())?;
    let d = module.rank();
    let dim = ring.dim();
    let points = level.window.points();
    let nb = points.len();
    let index: HashMap<&Exp, usize> = points.iter().enumerate().map(|(i, e)| (e, i)).collect();
    let ncols = d * nb * dim;
    let nrows = n * d * nb * dim;
    let p = base.p() as i64;
    let z = ring.z();
    let frobs: Vec<Mat> = (0..n).map(|a| ring.frob_matrix(a)).collect::<Result<_>>()?;
    let phis: Vec<SMat> = (0..n).map(|a| module.phi(a).map(|x| Ok(x.tighten()))).collect::<Result<_>>()?;
    for (a, ph) in phis.iter().enumerate() {
        for x in &ph.data {
            for pt in &points {
                let mut e = pt.clone();
                e[a] *= p;
                if e.iter().zip(&x.window().hi).zip(&level.window.hi).any(|((ei, h), bh)| h + ei < *bh) {
                    return Err(Error::WindowTooSmall("module precision does not cover the box".into()));
                }
            }
        }
    }
    let unknowns: Vec<usize> = (0..ncols).collect();
    let cols: Vec<Vec<(usize, u64)>> = par::map(exec, &unknowns, |&u| {
        let t = u % dim;
        let b = (u / dim) % nb;
        let i = u / (dim * nb);
        let mut col: Vec<(usize, u64)> = Vec::new();
        for a in 0..n {
            let mut e = points[b].clone();
            e[a] *= p;
            let img = frobs[a].col(t);
            for k in 0..d {
                for (ea, ca) in phis[a].get(k, i).terms() {
                    let tgt: Exp = ea.iter().zip(&e).map(|(x, y)| x + y).collect();
                    if let Some(&bi) = index.get(&tgt) {
                        let row0 = ((a * d + k) * nb + bi) * dim;
                        for (r, &v) in img.iter().enumerate() {
                            if v != 0 {
                                col.push((row0 + r, z.mul(v, ca[0])));
                            }
                        }
                    }
                }
            }
            col.push((((a * d + i) * nb + b) * dim + t, z.neg(1)));
        }
        col
    });
    let mut sys = Mat::zeros(nrows, ncols);
    for (j, col) in cols.iter().enumerate() {
        for &(r, v) in col {
            let x = z.add(sys.get(r, j), v);
            sys.set(r, j, x);
        }
    }
    let modp = linalg::kernel_mod_p(&sys.reduce(&z.residue()), z.p, exec);
    if modp.len() < d {
        return Err(Error::InsufficientLevel { found: modp.len(), expected: d });
    }
    if modp.len() > d {
        return Err(Error::NonFreeSolution(format!("fixed space mod p has rank {} > {d}", modp.len())));
    }
    let mut basis = modp;
    for k in 1..z.h {
        basis = devissage_lift(&sys, &basis, k, &z, exec)?;
    }
    Ok(FixedSpace { ring, window: level.window.clone(), rank: d, points, basis })
}

/// Lifts kernel vectors of `sys` from mod p^k to mod p^{k+1}.
pub fn devissage_lift(sys: &Mat, sol: &[Vec<u64>], k: u32, z: &Zmod, exec: Exec) -> Result<Vec<Vec<u64>>> {
    sol.iter().map(|x| linalg::lift_kernel_vector(sys, x, k, z, exec)).collect()
}

#[derive(Clone, Debug)]
pub struct VeeResult {
    pub rep: FiniteRepData,
    pub fixed: FixedSpace,
    pub level: TrivializationLevel,
    pub attempts: usize,
}

/// `𝕍(M)` at the given level: the fixed space with the action of the
/// coefficient Frobenius generators and of the module's Γ-generators.
pub fn vee_functor(module: &EtaleModule, level: &TrivializationLevel) -> Result<VeeResult> {
    vee_functor_with(module, level, Exec::default())
}

pub fn vee_functor_with(module: &EtaleModule, level: &TrivializationLevel, exec: Exec) -> Result<VeeResult> {
    let fs = fixed_space(module, level, exec)?;
    let base = module.ring();
    let n = base.nvars();
    let d = fs.rank;
    let ring = &fs.ring;
    let z = ring.z();
    let dim = ring.dim();
    let mut unram = Vec::with_capacity(n);
    for a in 0..n {
        let fr = ring.frob_matrix(a)?;
        let mut cols = Vec::with_capacity(d);
        for v in &fs.basis {
            let mut w = vec![0u64; v.len()];
            for (blk, out) in v.chunks(dim).zip(w.chunks_mut(dim)) {
                out.copy_from_slice(&fr.mul_vec(blk, &z));
            }
            cols.push(fs.solve(&w, "the unramified generator")?);
        }
        unram.push(Some(Unram { f: level.f[a], mat: Mat::from_cols(&cols, d).to_rows() }));
    }
    let vecs = fs.basis_vectors()?;
    let mut gamma = Vec::with_capacity(n);
    for a in 0..n {
        let mut row = Vec::new();
        for g in module.gammas(a) {
            let gm = g.mat.map(|x| extend_series(&x.tighten(), ring))?;
            let mut cols = Vec::with_capacity(d);
            for v in &vecs {
                let gv: Vec<Series> = v.iter().map(|x| Ok(x.subst_gamma(a, g.c)?.tighten())).collect::<Result<_>>()?;
                let w = fs.read(&gm.mul_vec(&gv)?)?;
                cols.push(fs.solve(&w, "a Γ-generator")?);
            }
            row.push(RepGamma { c: g.c, mat: Mat::from_cols(&cols, d).to_rows() });
        }
        gamma.push(row);
    }
    let rep = FiniteRepData { p: base.p(), h: base.h(), names: base.var_names(), dim: d, unram, gamma };
    Ok(VeeResult { rep, fixed: fs, level: level.clone(), attempts: 1 })
}

/// Retries `vee_functor` with the box doubled on `InsufficientLevel`.
pub fn vee_with_retry(module: &EtaleModule, level: &TrivializationLevel, budget: usize) -> Result<VeeResult> {
    let mut lvl = level.clone();
    let mut attempts = 0;
    loop {
        attempts += 1;
        match vee_functor(module, &lvl) {
            Ok(mut r) => {
                r.attempts = attempts;
                return Ok(r);
            }
            Err(Error::InsufficientLevel { .. }) if attempts <= budget => {
                let w = &lvl.window;
                let hi = w.lo.iter().zip(&w.hi).map(|(l, h)| l + 2 * (h - l)).collect();
                lvl.window = Window::new(w.lo.clone(), hi)?;
            }
            Err(e) => return Err(e),
        }
    }
}

/// Some invertible P over Z/p^h with `P X_i = Y_i P` for every pair.
///
/// Searches the solution module of the linear system: generators first, then
/// seeded random combinations.
pub fn find_conjugator(pairs: &[(Mat, Mat)], dim: usize, z: &Zmod, seed: u64) -> Option<Mat> {
    let nv = dim * dim;
    let mut rows = Vec::new();
    for (x, y) in pairs {
        if x.rows != dim || y.rows != dim {
            return None;
        }
        for i in 0..dim {
            for k in 0..dim {
                let mut row = vec![0u64; nv];
                for j in 0..dim {
                    row[i * dim + j] = z.add(row[i * dim + j], x.get(j, k));
                    row[j * dim + k] = z.sub(row[j * dim + k], y.get(i, j));
                }
                rows.push(row);
            }
        }
    }
    let sys = if rows.is_empty() { Mat::zeros(0, nv) } else { Mat::from_rows(&rows) };
    let gens: Vec<Vec<u64>> = linalg::kernel_zmod(&sys, z, Exec::Sequential).into_iter().map(|(g, _)| g).collect();
    let as_mat = |v: &[u64]| Mat::from_rows(&v.chunks(dim).map(|r| r.to_vec()).collect::<Vec<_>>());
    for g in &gens {
        let m = as_mat(g);
        if linalg::is_invertible(&m, z) {
            return Some(m);
        }
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..256 {
        let mut v = vec![0u64; nv];
        for g in &gens {
            let c = rng.gen_range(0..z.m);
            for (vi, gi) in v.iter_mut().zip(g) {
                *vi = z.add(*vi, z.mul(c, *gi));
            }
        }
        let m = as_mat(&v);
        if linalg::is_invertible(&m, z) {
            return Some(m);
        }
    }
    None
}

/// A conjugator between two representations on matching generators.
pub fn rep_conjugator(a: &FiniteRepData, b: &FiniteRepData, seed: u64) -> Result<Option<Mat>> {
    if a.p != b.p || a.h != b.h || a.names.len() != b.names.len() {
        return Err(Error::RingMismatch);
    }
    if a.dim != b.dim {
        return Ok(None);
    }
    let z = a.z()?;
    let mut pairs = Vec::new();
    for i in 0..a.names.len() {
        pairs.push((a.frob_matrix(i), b.frob_matrix(i)));
        for g in &a.gamma[i] {
            let h = b.gamma[i].iter().find(|x| x.c == g.c).ok_or(Error::MissingGammaParameter(g.c))?;
            pairs.push((mat_of(&g.mat), mat_of(&h.mat)));
        }
    }
    Ok(find_conjugator(&pairs, a.dim, &z, seed))
}

/// Constant φ- and Γ-matrices of a module, if all entries are constants.
fn constant_data(m: &EtaleModule) -> Option<Vec<(String, Mat)>> {
    let ring = m.ring();
    let zero = vec![0; ring.nvars()];
    let read = |s: &SMat| -> Option<Mat> {
        let mut rows = Vec::with_capacity(s.rows);
        for i in 0..s.rows {
            let mut row = Vec::with_capacity(s.cols);
            for j in 0..s.cols {
                let x = s.get(i, j);
                if x.terms().keys().any(|e| *e != zero) {
                    return None;
                }
                row.push(ring.as_scalar(&x.coeff(&zero))?);
            }
            rows.push(row);
        }
        Some(Mat::from_rows(&rows))
    };
    let mut out = Vec::new();
    for a in 0..ring.nvars() {
        out.push((format!("phi{a}"), read(m.phi(a))?));
        for g in m.gammas(a) {
            out.push((format!("gamma{a}:{}", g.c), read(&g.mat)?));
        }
    }
    Some(out)
}

/// A constant conjugator `P` with `P^{-1} A_X P = A'_X`, i.e. `A_X P = P A'_X`,
/// for modules whose matrices are all constant.
pub fn module_conjugator(m1: &EtaleModule, m2: &EtaleModule, seed: u64) -> Result<Option<Mat>> {
    if m1.ring() != m2.ring() {
        return Err(Error::RingMismatch);
    }
    let (Some(a), Some(b)) = (constant_data(m1), constant_data(m2)) else {
        return Err(Error::Unsupported("conjugacy search needs constant matrices".into()));
    };
    if m1.rank() != m2.rank() || a.iter().map(|x| &x.0).ne(b.iter().map(|x| &x.0)) {
        return Ok(None);
    }
    let pairs: Vec<(Mat, Mat)> = a.into_iter().zip(b).map(|((_, x), (_, y))| (y, x)).collect();
    Ok(find_conjugator(&pairs, m1.rank(), &m1.ring().z(), seed))
}
