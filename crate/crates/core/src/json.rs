//! JSON formats for rings, windows, series, operators, modules, representations,
//! levels and Koszul instances. Exponent vectors are keyed by variable name;
//! missing variables count as 0 in exponents and are errors in windows.

use serde_json::{json, Map, Value};

use crate::coeffs::{Coeff, FactorTag, Ring, RingTag};
use crate::descent::{FiniteRepData, RepGamma, TrivializationLevel, Unram};
use crate::error::{Error, Result};
use crate::etale::{EtaleModule, GammaGen};
use crate::koszul::{self, PhiComplexInstance};
use crate::linalg::Mat;
use crate::matrix::SMat;
use crate::semilinear::OperatorSpec;
use crate::series::{Exp, Series, Window};

fn bad(path: &str, msg: impl std::fmt::Display) -> Error {
    Error::Malformed(format!("{path}: {msg}"))
}

/// Parses text, reporting the location of syntax errors.
pub fn parse(text: &str) -> Result<Value> {
    serde_json::from_str(text).map_err(|e| Error::Malformed(format!("line {} column {}: {e}", e.line(), e.column())))
}

fn obj<'a>(v: &'a Value, path: &str) -> Result<&'a Map<String, Value>> {
    v.as_object().ok_or_else(|| bad(path, "expected an object"))
}

fn field<'a>(v: &'a Value, key: &str, path: &str) -> Result<&'a Value> {
    obj(v, path)?.get(key).ok_or_else(|| bad(path, format!("missing field \"{key}\"")))
}

fn as_u64(v: &Value, path: &str) -> Result<u64> {
    v.as_u64().ok_or_else(|| bad(path, "expected a nonnegative integer"))
}

fn as_i64(v: &Value, path: &str) -> Result<i64> {
    v.as_i64().ok_or_else(|| bad(path, "expected an integer"))
}

fn as_array<'a>(v: &'a Value, path: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| bad(path, "expected an array"))
}

/// `{"p","h","factors":[{"alpha","f","modulus"?}]}`; a missing modulus means
/// the standard one.
pub fn ring_from_value(v: &Value) -> Result<Ring> {
    let p = as_u64(field(v, "p", "ring")?, "ring.p")?;
    let h = as_u64(field(v, "h", "ring")?, "ring.h")? as u32;
    let mut factors = Vec::new();
    for (i, f) in as_array(field(v, "factors", "ring")?, "ring.factors")?.iter().enumerate() {
        let path = format!("ring.factors[{i}]");
        let alpha = field(f, "alpha", &path)?.as_str().ok_or_else(|| bad(&path, "alpha must be a string"))?;
        let deg = as_u64(field(f, "f", &path)?, &path)? as u32;
        let tag = match obj(f, &path)?.get("modulus") {
            Some(m) => {
                let modulus = as_array(m, &path)?.iter().map(|x| as_u64(x, &path)).collect::<Result<Vec<_>>>()?;
                FactorTag { alpha: alpha.to_string(), f: deg, modulus }
            }
            None => RingTag::standard(p, h, &[(alpha, deg)])?.factors.remove(0),
        };
        factors.push(tag);
    }
    Ring::new(RingTag { p, h, factors })
}

pub fn ring_to_value(ring: &Ring) -> Value {
    serde_json::to_value(ring.tag()).expect("ring tags serialize")
}

fn exp_from_value(ring: &Ring, v: &Value, path: &str, default: Option<i64>) -> Result<Exp> {
    let m = obj(v, path)?;
    for k in m.keys() {
        ring.var_index(k)?;
    }
    ring.var_names()
        .iter()
        .map(|name| match (m.get(name), default) {
            (Some(x), _) => as_i64(x, &format!("{path}.{name}")),
            (None, Some(d)) => Ok(d),
            (None, None) => Err(bad(path, format!("missing variable \"{name}\""))),
        })
        .collect()
}

fn exp_to_value(ring: &Ring, e: &[i64]) -> Value {
    Value::Object(ring.var_names().into_iter().zip(e).map(|(k, &x)| (k, json!(x))).collect())
}

pub fn window_from_value(ring: &Ring, v: &Value) -> Result<Window> {
    let lo = exp_from_value(ring, field(v, "lo", "window")?, "window.lo", None)?;
    let hi = exp_from_value(ring, field(v, "hi", "window")?, "window.hi", None)?;
    Window::new(lo, hi)
}

pub fn window_to_value(ring: &Ring, w: &Window) -> Value {
    json!({"lo": exp_to_value(ring, &w.lo), "hi": exp_to_value(ring, &w.hi)})
}

/// A scalar integer or the dense coordinate list.
fn coeff_from_value(ring: &Ring, v: &Value, path: &str) -> Result<Coeff> {
    let z = ring.z();
    if let Some(x) = v.as_i64() {
        return Ok(ring.scalar_i64(x));
    }
    let coords = as_array(v, path)?;
    if coords.len() != ring.dim() {
        return Err(bad(path, format!("expected {} coordinates", ring.dim())));
    }
    coords.iter().map(|x| Ok(z.from_i64(as_i64(x, path)?))).collect()
}

fn terms_from_value(ring: &Ring, window: &Window, v: &Value, path: &str) -> Result<Series> {
    let mut terms = Vec::new();
    for (i, t) in as_array(v, path)?.iter().enumerate() {
        let tp = format!("{path}[{i}]");
        let e = match obj(t, &tp)?.get("exp") {
            Some(e) => exp_from_value(ring, e, &format!("{tp}.exp"), Some(0))?,
            None => vec![0; ring.nvars()],
        };
        let c = coeff_from_value(ring, field(t, "coeff", &tp)?, &format!("{tp}.coeff"))?;
        if !window.contains(&e) {
            return Err(bad(&tp, format!("term {e:?} lies outside the window")));
        }
        terms.push((e, c));
    }
    let mut out = Series::zero(ring, window.clone())?;
    for (e, c) in terms {
        out = out.add(&Series::monomial(ring, window.clone(), e, c)?)?;
    }
    Ok(out)
}

pub fn series_from_value(v: &Value) -> Result<Series> {
    let ring = ring_from_value(field(v, "ring", "series")?)?;
    let window = window_from_value(&ring, field(v, "window", "series")?)?;
    terms_from_value(&ring, &window, field(v, "terms", "series")?, "series.terms")
}

fn terms_to_value(s: &Series) -> Value {
    let ring = s.ring();
    Value::Array(
        s.terms()
            .iter()
            .map(|(e, c)| {
                let coeff = match ring.as_scalar(c) {
                    Some(x) if ring.dim() == 1 => json!(x),
                    _ => json!(c),
                };
                json!({"exp": exp_to_value(ring, e), "coeff": coeff})
            })
            .collect(),
    )
}

pub fn series_to_value(s: &Series) -> Value {
    json!({"ring": ring_to_value(s.ring()), "window": window_to_value(s.ring(), s.window()), "terms": terms_to_value(s)})
}

/// `{"frob":{"a":1},"gamma":{"a":2}}`; absent variables mean exponent 0 and
/// parameter 1.
pub fn operator_from_value(ring: &Ring, v: &Value) -> Result<OperatorSpec> {
    let frob = match obj(v, "operator")?.get("frob") {
        Some(f) => exp_from_value(ring, f, "operator.frob", Some(0))?,
        None => vec![0; ring.nvars()],
    };
    let gamma = match obj(v, "operator")?.get("gamma") {
        Some(g) => exp_from_value(ring, g, "operator.gamma", Some(1))?,
        None => vec![1; ring.nvars()],
    };
    if frob.iter().any(|&x| x < 0) {
        return Err(bad("operator.frob", "exponents must be nonnegative"));
    }
    OperatorSpec::new(ring.p(), frob.into_iter().map(|x| x as u32).collect(), gamma)
}

fn entry_from_value(ring: &Ring, window: &Window, v: &Value, path: &str) -> Result<Series> {
    match v {
        Value::Number(_) => {
            let c = coeff_from_value(ring, v, path)?;
            if ring.is_zero(&c) {
                Series::zero(ring, window.clone())
            } else {
                Series::monomial(ring, window.clone(), vec![0; ring.nvars()], c)
            }
        }
        Value::Array(_) => terms_from_value(ring, window, v, path),
        Value::Object(_) => terms_from_value(ring, window, field(v, "terms", path)?, &format!("{path}.terms")),
        _ => Err(bad(path, "expected an integer, a term list or {\"terms\":[...]}")),
    }
}

fn entry_to_value(s: &Series) -> Value {
    let zero = vec![0; s.ring().nvars()];
    if s.is_zero() {
        return json!(0);
    }
    if s.nterms() == 1 && s.ring().dim() == 1 {
        if let Some((e, c)) = s.terms().iter().next() {
            if *e == zero {
                return json!(c[0]);
            }
        }
    }
    terms_to_value(s)
}

/// A coordinate vector in the module's ring and window; entries as in matrices.
pub fn vector_from_value(module: &EtaleModule, v: &Value) -> Result<Vec<Series>> {
    let cells = as_array(v, "vector")?;
    if cells.len() != module.rank() {
        return Err(bad("vector", format!("expected {} entries", module.rank())));
    }
    cells.iter().enumerate().map(|(i, c)| entry_from_value(module.ring(), module.window(), c, &format!("vector[{i}]"))).collect()
}

fn smat_from_value(ring: &Ring, window: &Window, rank: usize, v: &Value, path: &str) -> Result<SMat> {
    let rows = as_array(v, path)?;
    if rows.len() != rank {
        return Err(bad(path, format!("expected {rank} rows")));
    }
    let mut out = Vec::with_capacity(rank);
    for (i, r) in rows.iter().enumerate() {
        let rp = format!("{path}[{i}]");
        let cells = as_array(r, &rp)?;
        if cells.len() != rank {
            return Err(bad(&rp, format!("expected {rank} entries")));
        }
        out.push(
            cells.iter().enumerate().map(|(j, c)| entry_from_value(ring, window, c, &format!("{rp}[{j}]"))).collect::<Result<Vec<_>>>()?,
        );
    }
    SMat::from_rows(out)
}

fn smat_to_value(m: &SMat) -> Value {
    Value::Array((0..m.rows).map(|i| Value::Array((0..m.cols).map(|j| entry_to_value(m.get(i, j))).collect())).collect())
}

/// Parses a module without checking the consistency identities.
pub fn module_from_value(v: &Value) -> Result<EtaleModule> {
    let ring = ring_from_value(field(v, "ring", "module")?)?;
    let window = window_from_value(&ring, field(v, "window", "module")?)?;
    let rank = as_u64(field(v, "rank", "module")?, "module.rank")? as usize;
    if rank == 0 {
        return Err(bad("module.rank", "must be positive"));
    }
    let phi_v = obj(field(v, "phi", "module")?, "module.phi")?;
    for k in phi_v.keys() {
        ring.var_index(k)?;
    }
    let mut phi = Vec::with_capacity(ring.nvars());
    for name in ring.var_names() {
        let path = format!("module.phi.{name}");
        let m = phi_v.get(&name).ok_or_else(|| bad("module.phi", format!("missing variable \"{name}\"")))?;
        phi.push(smat_from_value(&ring, &window, rank, m, &path)?);
    }
    let mut gamma = vec![Vec::new(); ring.nvars()];
    if let Some(g) = obj(v, "module")?.get("gamma") {
        for (k, list) in obj(g, "module.gamma")? {
            let a = ring.var_index(k)?;
            for (i, item) in as_array(list, "module.gamma")?.iter().enumerate() {
                let path = format!("module.gamma.{k}[{i}]");
                let c = as_i64(field(item, "c", &path)?, &path)?;
                let mat = smat_from_value(&ring, &window, rank, field(item, "mat", &path)?, &format!("{path}.mat"))?;
                gamma[a].push(GammaGen { c, mat });
            }
        }
    }
    EtaleModule::new_unchecked(&ring, window, phi, gamma)
}

pub fn module_to_value(m: &EtaleModule) -> Value {
    let ring = m.ring();
    let names = ring.var_names();
    let phi: Map<String, Value> = names.iter().enumerate().map(|(a, k)| (k.clone(), smat_to_value(m.phi(a)))).collect();
    let gamma: Map<String, Value> = names
        .iter()
        .enumerate()
        .filter(|(a, _)| !m.gammas(*a).is_empty())
        .map(|(a, k)| {
            (k.clone(), Value::Array(m.gammas(a).iter().map(|g| json!({"c": g.c, "mat": smat_to_value(&g.mat)})).collect()))
        })
        .collect();
    json!({
        "ring": ring_to_value(ring),
        "rank": m.rank(),
        "window": window_to_value(ring, m.window()),
        "phi": phi,
        "gamma": gamma,
    })
}

fn int_matrix(v: &Value, dim: usize, path: &str, p: u64, h: u32) -> Result<Vec<Vec<u64>>> {
    let z = crate::zmod::Zmod::new(p, h)?;
    let rows = as_array(v, path)?;
    if rows.len() != dim {
        return Err(bad(path, format!("expected {dim} rows")));
    }
    rows.iter()
        .map(|r| {
            let cells = as_array(r, path)?;
            if cells.len() != dim {
                return Err(bad(path, format!("expected {dim} entries per row")));
            }
            cells.iter().map(|x| Ok(z.from_i64(as_i64(x, path)?))).collect()
        })
        .collect()
}

/// `{"p","h","names"?,"dim","unram":{..},"gamma":{..}}`; `p` and `h` may come
/// from defaults; names default to the sorted keys.
pub fn rep_from_value(v: &Value, p_default: Option<u64>, h_default: Option<u32>) -> Result<FiniteRepData> {
    let o = obj(v, "rep")?;
    let p = match (o.get("p"), p_default) {
        (Some(x), _) => as_u64(x, "rep.p")?,
        (None, Some(p)) => p,
        (None, None) => return Err(bad("rep", "missing field \"p\"")),
    };
    let h = match (o.get("h"), h_default) {
        (Some(x), _) => as_u64(x, "rep.h")? as u32,
        (None, Some(h)) => h,
        (None, None) => 1,
    };
    let dim = as_u64(field(v, "dim", "rep")?, "rep.dim")? as usize;
    let empty = Map::new();
    let unram_v = o.get("unram").map(|x| obj(x, "rep.unram")).transpose()?.unwrap_or(&empty);
    let gamma_v = o.get("gamma").map(|x| obj(x, "rep.gamma")).transpose()?.unwrap_or(&empty);
    let names: Vec<String> = match o.get("names") {
        Some(n) => as_array(n, "rep.names")?
            .iter()
            .map(|x| x.as_str().map(str::to_string).ok_or_else(|| bad("rep.names", "expected strings")))
            .collect::<Result<_>>()?,
        None => {
            let mut ks: Vec<String> = unram_v.keys().chain(gamma_v.keys()).cloned().collect();
            ks.sort();
            ks.dedup();
            ks
        }
    };
    if names.is_empty() {
        return Err(bad("rep", "no variables named"));
    }
    let idx = |k: &str| names.iter().position(|n| n == k).ok_or_else(|| Error::UnknownVariable(k.to_string()));
    let mut unram = vec![None; names.len()];
    for (k, u) in unram_v {
        let path = format!("rep.unram.{k}");
        let f = as_u64(field(u, "f", &path)?, &path)? as u32;
        unram[idx(k)?] = Some(Unram { f, mat: int_matrix(field(u, "mat", &path)?, dim, &path, p, h)? });
    }
    let mut gamma = vec![Vec::new(); names.len()];
    for (k, list) in gamma_v {
        for (i, g) in as_array(list, "rep.gamma")?.iter().enumerate() {
            let path = format!("rep.gamma.{k}[{i}]");
            let c = as_i64(field(g, "c", &path)?, &path)?;
            gamma[idx(k)?].push(RepGamma { c, mat: int_matrix(field(g, "mat", &path)?, dim, &path, p, h)? });
        }
    }
    let rep = FiniteRepData { p, h, names, dim, unram, gamma };
    rep.validate()?;
    Ok(rep)
}

pub fn rep_to_value(r: &FiniteRepData) -> Value {
    let unram: Map<String, Value> = r
        .names
        .iter()
        .zip(&r.unram)
        .filter_map(|(k, u)| u.as_ref().map(|u| (k.clone(), json!({"f": u.f, "mat": u.mat}))))
        .collect();
    let gamma: Map<String, Value> = r
        .names
        .iter()
        .zip(&r.gamma)
        .filter(|(_, g)| !g.is_empty())
        .map(|(k, g)| (k.clone(), Value::Array(g.iter().map(|x| json!({"c": x.c, "mat": x.mat})).collect())))
        .collect();
    json!({"p": r.p, "h": r.h, "names": r.names, "dim": r.dim, "unram": unram, "gamma": gamma})
}

/// `{"f":{"a":2},"window":{...}}`; absent degrees are 1.
pub fn level_from_value(ring: &Ring, v: &Value) -> Result<TrivializationLevel> {
    let f = match obj(v, "level")?.get("f") {
        Some(f) => exp_from_value(ring, f, "level.f", Some(1))?,
        None => vec![1; ring.nvars()],
    };
    let window = window_from_value(ring, field(v, "window", "level")?)?;
    TrivializationLevel::new(f.into_iter().map(|x| x as u32).collect(), window)
}

/// Explicit `{"p","names","maps"}`, or `{"finite_field":{"p","f"}}`, or
/// `{"truncation":{"p","f","r","others"}}`.
pub fn koszul_from_value(v: &Value) -> Result<PhiComplexInstance> {
    let o = obj(v, "koszul")?;
    if let Some(ff) = o.get("finite_field") {
        let p = as_u64(field(ff, "p", "koszul.finite_field")?, "koszul.finite_field.p")?;
        let f = as_u64(field(ff, "f", "koszul.finite_field")?, "koszul.finite_field.f")? as u32;
        return koszul::finite_field_instance(p, f);
    }
    if let Some(t) = o.get("truncation") {
        let g = |k: &str| as_u64(field(t, k, "koszul.truncation")?, "koszul.truncation");
        return koszul::truncation_instance(g("p")?, g("f")? as u32, g("r")? as usize, g("others")? as usize);
    }
    let p = as_u64(field(v, "p", "koszul")?, "koszul.p")?;
    let maps = as_array(field(v, "maps", "koszul")?, "koszul.maps")?;
    let names: Vec<String> = match o.get("names") {
        Some(n) => as_array(n, "koszul.names")?.iter().map(|x| x.as_str().unwrap_or("?").to_string()).collect(),
        None => (0..maps.len()).map(|i| format!("a{i}")).collect(),
    };
    let mut mats = Vec::with_capacity(maps.len());
    for (i, m) in maps.iter().enumerate() {
        let path = format!("koszul.maps[{i}]");
        let dim = as_array(m, &path)?.len();
        mats.push(Mat::from_rows(&int_matrix(m, dim, &path, p, 1)?));
    }
    let refs: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    koszul::build_complex(p, &refs, mats)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn module_round_trips() {
        let text = r#"{"ring":{"p":2,"h":1,"factors":[{"alpha":"a","f":1}]},"rank":1,
            "window":{"lo":{"a":-2},"hi":{"a":8}},"phi":{"a":[[[{"exp":{"a":-1},"coeff":1}]]]}}"#;
        let m = module_from_value(&parse(text).unwrap()).unwrap();
        let back = module_from_value(&module_to_value(&m)).unwrap();
        assert_eq!(m, back);
    }

    #[test]
    fn out_of_window_terms_are_rejected() {
        let text = r#"{"ring":{"p":2,"h":1,"factors":[{"alpha":"a","f":1}]},
            "window":{"lo":{"a":0},"hi":{"a":4}},"terms":[{"exp":{"a":5},"coeff":1}]}"#;
        assert!(series_from_value(&parse(text).unwrap()).is_err());
    }

    #[test]
    fn rep_example_parses() {
        let text = r#"{"dim":2,"unram":{"a":{"f":2,"mat":[[0,1],[1,0]]}},"gamma":{"a":[{"c":3,"mat":[[1,0],[0,1]]}]}}"#;
        let r = rep_from_value(&parse(text).unwrap(), Some(2), None).unwrap();
        assert_eq!(r.names, vec!["a".to_string()]);
        assert_eq!(rep_from_value(&rep_to_value(&r), None, None).unwrap(), r);
    }

    #[test]
    fn syntax_errors_carry_location() {
        let e = parse("{\"a\": ").unwrap_err();
        assert!(e.to_string().contains("line 1"));
    }
}
