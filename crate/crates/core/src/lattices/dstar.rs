//! The lattice `D^{+*}_ᾱ`, integral in X_α, for two variables {α, β}.
//!
//! Coefficients live in `K[[X_α]]` with `K = F_p((X_β))`, stored as two-variable
//! series truncated in X_α. The start lattice L is the largest coordinatewise
//! monomial lattice `⊕ X_α^{j_i} E^+_ᾱ e'_i` inside `D^+_ᾱ` found by the
//! membership oracle. Each round replaces `N` by `N ∩ E^+_ᾱ φ_β(N)`: with
//! `N = P·E^d` and `Q = B φ_β(P)`, the new lattice is `P·Y` where
//! `Y = {y : X^δ Q^{-1} P y ≡ 0 mod X^δ}`. The colength `val_α(det P)` grows
//! strictly until the lattice is stable. The Γ-action preserves every lattice
//! involved and is not used.

use serde::Serialize;

use super::membership::{membership, Status};
use super::rescale;
use crate::coeffs::{Ring, RingTag};
use crate::error::{Error, Result};
use crate::etale::EtaleModule;
use crate::matrix::SMat;
use crate::series::{Series, Window};

#[derive(Clone, Debug)]
pub struct DstarResult {
    /// Étale module over `Δ \ {α}` of rank `d·r`, basis `X_α^i n_j` indexed `i·d + j`.
    pub module: EtaleModule,
    pub report: DstarReport,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct DstarReport {
    pub alpha: String,
    pub r: usize,
    /// Start lattice exponents `j_i` in the rescaled basis `X_Δ^m e`.
    pub start_exponents: Vec<i64>,
    pub m: i64,
    pub k0: i64,
    pub colength: i64,
    pub iterations: usize,
    pub iteration_bound: usize,
    /// `X_α^{d·k0} L ⊆ N ⊆ L`, checked on the computed basis.
    pub sandwich: bool,
}

struct Chain {
    a: usize,
    c: i64,
}

impl Chain {
    fn val(&self, s: &Series) -> Option<i64> {
        s.val(self.a)
    }

    /// Inverse in `K((X_α))` of a nonzero element, truncated at `X_α^c`.
    fn inv(&self, u: &Series) -> Result<Series> {
        let v = self.val(u).ok_or_else(|| Error::NotAUnit("zero pivot".into()))?;
        let n = u.ring().nvars();
        let mut sh = vec![0; n];
        sh[self.a] = -v;
        let u = u.shift(&sh);
        let lead = Series::from_terms(
            u.ring(),
            u.window().clone(),
            u.terms().iter().filter(|(e, _)| e[self.a] == 0).map(|(e, c)| (e.clone(), c.clone())),
        )?;
        let lead_inv = lead.tighten().invert()?;
        let one = Series::one(u.ring(), lead_inv.window().clone())?;
        let w = one.sub(&u.mul(&lead_inv)?)?.tighten();
        let mut acc = one.clone();
        for _ in 0..self.c + v.abs() + 1 {
            acc = one.add(&w.mul(&acc)?)?.tighten();
        }
        let mut back = vec![0; n];
        back[self.a] = -v;
        Ok(acc.mul(&lead_inv)?.shift(&back).tighten())
    }

    fn mat_inv(&self, m: &SMat) -> Result<SMat> {
        let det = m.det()?;
        let di = self.inv(&det)?;
        m.adjugate()?.map(|x| Ok(x.mul(&di)?.tighten()))
    }
}

fn window_err(e: Error) -> Error {
    match e {
        Error::EmptyResultWindow => Error::WindowTooSmall("precision exhausted in the lattice iteration".into()),
        e => e,
    }
}

fn tight(m: SMat) -> Result<SMat> {
    m.map(|x| Ok(x.tighten()))
}

/// Smith reduction over `K[[X_α]]` modulo `X_α^δ`: returns the column transform
/// W and diagonal valuations s_i with `U^{-1} C W` diagonal.
fn smith_columns(ch: &Chain, c: &SMat, delta: i64) -> Result<(SMat, Vec<i64>)> {
    let d = c.rows;
    let mut c = c.clone();
    let ring = c.ring().clone();
    let mut w = SMat::identity(&ring, c.get(0, 0).window(), d)?;
    let mut vals = vec![delta; d];
    let effective = |s: &Series| ch.val(s).filter(|&v| v < delta);
    for t in 0..d {
        let mut best: Option<(i64, usize, usize)> = None;
        for i in t..d {
            for j in t..d {
                if let Some(v) = effective(c.get(i, j)) {
                    if best.is_none_or(|b| v < b.0) {
                        best = Some((v, i, j));
                    }
                }
            }
        }
        let Some((v, pi, pj)) = best else { break };
        vals[t] = v;
        // Row swap t <-> pi, column swap t <-> pj (tracked in W).
        for j in 0..d {
            c.data.swap(t * d + j, pi * d + j);
        }
        for i in 0..d {
            c.data.swap(i * d + t, i * d + pj);
            w.data.swap(i * d + t, i * d + pj);
        }
        let piv_inv = ch.inv(c.get(t, t))?;
        for i in t + 1..d {
            let f = c.get(i, t).mul(&piv_inv)?.tighten();
            for j in 0..d {
                let x = c.get(i, j).sub(&f.mul(c.get(t, j))?)?.tighten();
                c.data[i * d + j] = x;
            }
        }
        for j in t + 1..d {
            let f = c.get(t, j).mul(&piv_inv)?.tighten();
            for i in 0..d {
                let x = c.get(i, j).sub(&c.get(i, t).mul(&f)?)?.tighten();
                c.data[i * d + j] = x;
                let y = w.get(i, j).sub(&w.get(i, t).mul(&f)?)?.tighten();
                w.data[i * d + j] = y;
            }
        }
    }
    Ok((w, vals))
}

/// Computes `D^{+*}_ᾱ` modulo `X_α^r` as an étale module over the other variable.
pub fn dstar_lattice(module: &EtaleModule, alpha: usize, r: usize) -> Result<DstarResult> {
    let ring = module.ring();
    if ring.nvars() != 2 || !ring.is_base() || ring.h() != 1 {
        return Err(Error::Unsupported("the D^{+*} lattice is computed for two variables over F_p".into()));
    }
    if alpha >= 2 {
        return Err(Error::UnknownVariable(format!("#{alpha}")));
    }
    if r == 0 {
        return Err(Error::Malformed("truncation r must be positive".into()));
    }
    let beta = 1 - alpha;
    let d = module.rank();
    let p = ring.p() as i64;
    let re = rescale(module)?;
    let (m, rb, kb) = (re.bounds.m, re.bounds.r, re.bounds.k);
    let k0 = rb + kb;

    // Start lattice from the membership oracle.
    let mut start = Vec::with_capacity(d);
    for i in 0..d {
        let mut found = kb;
        for j in -rb..kb {
            let mut e = vec![m; 2];
            e[alpha] += j;
            e[beta] += kb;
            let hi: Vec<i64> = module.window().hi.iter().zip(&e).map(|(h, x)| (*h).max(x + kb + 2)).collect();
            let w = Window::new(e.clone(), hi)?;
            let mut v: Vec<Series> = (0..d).map(|_| Series::zero(ring, w.clone())).collect::<Result<_>>()?;
            v[i] = Series::monomial(ring, w.clone(), e, ring.one())?;
            let verdict = membership(module, &v, None)?;
            if matches!(verdict.status, Status::InDoublePlus | Status::InPlusOnly) {
                found = j;
                break;
            }
        }
        start.push(found);
    }

    // φ_β in the basis l_i = X_α^{j_i} X_Δ^m e_i.
    let mut shift = vec![0; 2];
    shift[beta] = (p - 1) * m;
    let bl = tight(module.phi(beta).map(|x| Ok(x.shift(&shift)))?)?;
    let mut data = Vec::with_capacity(d * d);
    for i in 0..d {
        for k in 0..d {
            let mut s = vec![0; 2];
            s[alpha] = start[k] - start[i];
            data.push(bl.get(i, k).shift(&s));
        }
    }
    let bl = SMat { rows: d, cols: d, data };
    let neg = bl.data.iter().filter_map(|x| x.val(alpha)).min().unwrap_or(0).min(0).abs();
    let dd = d as i64;
    let c = dd * dd * k0 + r as i64 + 4 * neg + 8;
    let ch = Chain { a: alpha, c };
    let mut hi = module.window().hi.clone();
    hi[alpha] = c;
    let mut lo = vec![0; 2];
    lo[beta] = module.window().lo[beta].min(0);
    let work = Window::new(lo, hi)?;
    let bl = bl.map(|x| Ok(x.with_window(Window::new(
        x.window().lo.clone(),
        x.window().hi.iter().enumerate().map(|(v, h)| if v == alpha { (*h).min(c) } else { *h }).collect(),
    )?)))?;

    let bound = (dd * dd * k0) as usize + 1;
    let mut pm = SMat::identity(ring, &work, d)?;
    let mut colength = 0i64;
    let mut iterations = 0;
    loop {
        if iterations >= bound {
            return Err(Error::Inconclusive(format!("no stabilization within {bound} rounds")));
        }
        iterations += 1;
        let phi_p = pm.map(|x| x.subst_frobenius(beta)).map_err(window_err)?;
        let q = tight(bl.mul(&phi_p).map_err(window_err)?)?;
        let c0 = tight(ch.mat_inv(&q).map_err(window_err)?.mul(&pm).map_err(window_err)?)?;
        let delta = c0.data.iter().filter_map(|x| x.val(alpha)).min().unwrap_or(0).min(0).abs();
        if delta == 0 {
            break;
        }
        let mut s = vec![0; 2];
        s[alpha] = delta;
        let cm = c0.map(|x| Ok(x.shift(&s)))?;
        let (w, vals) = smith_columns(&ch, &cm, delta).map_err(window_err)?;
        let t: Vec<i64> = vals.iter().map(|&v| (delta - v).max(0)).collect();
        if t.iter().all(|&x| x == 0) {
            break;
        }
        let mut scaled = w.clone();
        for (j, &tj) in t.iter().enumerate() {
            let mut s = vec![0; 2];
            s[alpha] = tj;
            for i in 0..d {
                scaled.data[i * d + j] = w.get(i, j).shift(&s);
            }
        }
        pm = tight(pm.mul(&scaled).map_err(window_err)?)?;
        colength += t.iter().sum::<i64>();
    }

    // φ_β on N in the basis P: T = P^{-1} B φ_β(P).
    let pinv = ch.mat_inv(&pm).map_err(window_err)?;
    let phi_p = pm.map(|x| x.subst_frobenius(beta)).map_err(window_err)?;
    let tm = tight(pinv.mul(&bl.mul(&phi_p).map_err(window_err)?).map_err(window_err)?)?;
    let lim = dd * k0;
    let sandwich = pm.data.iter().all(|x| x.val(alpha).is_none_or(|v| v >= 0))
        && pinv.data.iter().all(|x| x.val(alpha).is_none_or(|v| v >= -lim));
    if tm.data.iter().any(|x| x.val(alpha).is_some_and(|v| v < 0)) {
        return Err(Error::Malformed("φ_β does not preserve the stabilized lattice".into()));
    }
    if tm.data.iter().any(|x| x.window().hi[alpha] < r as i64) {
        return Err(Error::WindowTooSmall(format!("X_α precision below r = {r}")));
    }

    let tag = RingTag::base(ring.p(), 1, &[ring.var_name(beta)])?;
    let ring_b = Ring::new(tag)?;
    let blo = tm.data.iter().map(|x| x.window().lo[beta]).min().unwrap();
    let bhi = tm.data.iter().map(|x| x.window().hi[beta]).min().unwrap();
    let bw = Window::new(vec![blo], vec![bhi])?;
    let n = d * r;
    let mut big = Vec::with_capacity(n * n);
    for row in 0..n {
        for col in 0..n {
            let (ir, l) = (row / d, row % d);
            let (ic, j) = (col / d, col % d);
            let terms: Vec<_> = if ir >= ic {
                let k = (ir - ic) as i64;
                tm.get(l, j)
                    .terms()
                    .iter()
                    .filter(|(e, _)| e[alpha] == k && e[beta] < bhi)
                    .map(|(e, c)| (vec![e[beta]], c.clone()))
                    .collect()
            } else {
                Vec::new()
            };
            big.push(Series::from_terms(&ring_b, bw.clone(), terms)?);
        }
    }
    let phi = SMat { rows: n, cols: n, data: big };
    let out = EtaleModule::new_unchecked(&ring_b, bw, vec![phi], vec![vec![]])?;
    Ok(DstarResult {
        module: out,
        report: DstarReport {
            alpha: ring.var_name(alpha).to_string(),
            r,
            start_exponents: start,
            m,
            k0,
            colength,
            iterations,
            iteration_bound: bound,
            sandwich,
        },
    })
}
