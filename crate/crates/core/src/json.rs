//! JSON encodings of matrices, irregular types, chains, parameters, points and results.
//!
//! Scalars are `["re", "im"]` string pairs; exact values use rational strings
//! such as `"-3/2"`, float values use the shortest round-trip decimal. Every
//! matrix records its mode, and reading it into the other mode is an error.

use serde_json::{json, Map, Value};

use crate::assembly::{IrregularCurveData, LocalSlots, MarkedPoint, RepPoint};
use crate::blocks::{LeviChain, Partition};
use crate::error::{Result, WcvError};
use crate::irregular::IrregularType;
use crate::linalg::Tolerance;
use crate::matrix::Matrix;
use crate::scalar::{Mode, Scalar};
use crate::unfolding::{UnfoldResult, UnfoldingParams};

fn perr(msg: impl Into<String>) -> WcvError {
    WcvError::Parse(msg.into())
}

pub fn parse_str(s: &str) -> Result<Value> {
    serde_json::from_str(s).map_err(|e| perr(e.to_string()))
}

pub fn to_string_pretty(v: &Value) -> String {
    serde_json::to_string_pretty(v).expect("values serialize")
}

fn field<'a>(v: &'a Value, key: &str) -> Result<&'a Value> {
    v.get(key).ok_or_else(|| perr(format!("missing field `{key}`")))
}

fn as_array<'a>(v: &'a Value, what: &str) -> Result<&'a Vec<Value>> {
    v.as_array().ok_or_else(|| perr(format!("`{what}` must be an array")))
}

fn as_usize(v: &Value, what: &str) -> Result<usize> {
    v.as_u64().map(|x| x as usize).ok_or_else(|| perr(format!("`{what}` must be a non-negative integer")))
}

fn check_mode<S: Scalar>(v: &Value) -> Result<()> {
    let Some(m) = v.get("mode") else { return Ok(()) };
    let m: Mode = m.as_str().ok_or_else(|| perr("`mode` must be a string"))?.parse()?;
    if m != S::MODE {
        return Err(WcvError::ModeMismatch { left: m.name(), right: S::MODE.name() });
    }
    Ok(())
}

pub fn scalar_to_json<S: Scalar>(z: &S) -> Value {
    let (re, im) = z.format_parts();
    json!([re, im])
}

pub fn scalar_from_json<S: Scalar>(v: &Value) -> Result<S> {
    let part = |p: &Value| -> Result<String> {
        match p {
            Value::String(s) => Ok(s.clone()),
            Value::Number(x) => Ok(x.to_string()),
            _ => Err(perr("scalar parts must be strings or numbers")),
        }
    };
    match v {
        Value::Array(a) if a.len() == 2 => S::parse_parts(&part(&a[0])?, &part(&a[1])?),
        Value::String(_) | Value::Number(_) => S::parse_parts(&part(v)?, "0"),
        _ => Err(perr("a scalar is [\"re\", \"im\"]")),
    }
}

pub fn matrix_to_json<S: Scalar>(m: &Matrix<S>) -> Value {
    let rows: Vec<Value> = (0..m.rows()).map(|i| Value::Array(m.row(i).iter().map(scalar_to_json).collect())).collect();
    json!({ "n": m.rows(), "mode": S::MODE.name(), "entries": rows })
}

pub fn matrix_from_json<S: Scalar>(v: &Value) -> Result<Matrix<S>> {
    check_mode::<S>(v)?;
    let n = as_usize(field(v, "n")?, "n")?;
    let rows = as_array(field(v, "entries")?, "entries")?;
    if rows.len() != n {
        return Err(perr(format!("expected {n} rows, found {}", rows.len())));
    }
    let mut data = Vec::with_capacity(n * n);
    for row in rows {
        let row = as_array(row, "entries row")?;
        if row.len() != n {
            return Err(perr(format!("expected {n} columns, found {}", row.len())));
        }
        for z in row {
            data.push(scalar_from_json(z)?);
        }
    }
    Ok(Matrix::from_vec(n, n, data))
}

fn matrices_from_json<S: Scalar>(v: &Value, what: &str) -> Result<Vec<Matrix<S>>> {
    as_array(v, what)?.iter().map(matrix_from_json).collect()
}

pub fn irregular_to_json<S: Scalar>(q: &IrregularType<S>) -> Value {
    let coeffs: Vec<Value> = q.coeffs().iter().map(|c| Value::Array(c.iter().map(scalar_to_json).collect())).collect();
    json!({ "n": q.n(), "mode": S::MODE.name(), "coeffs": coeffs })
}

pub fn irregular_from_json<S: Scalar>(v: &Value) -> Result<IrregularType<S>> {
    check_mode::<S>(v)?;
    let n = as_usize(field(v, "n")?, "n")?;
    let coeffs = as_array(field(v, "coeffs")?, "coeffs")?
        .iter()
        .map(|c| as_array(c, "coeffs entry")?.iter().map(scalar_from_json).collect::<Result<Vec<S>>>())
        .collect::<Result<_>>()?;
    IrregularType::new(n, coeffs)
}

/// `{"n", "order": 1-based basis order, "partitions": block sizes per level}`.
pub fn chain_to_json(c: &LeviChain) -> Value {
    let order: Vec<usize> = c.order().iter().map(|i| i + 1).collect();
    let parts: Vec<Vec<usize>> = c.partitions().iter().map(Partition::sizes).collect();
    json!({ "n": c.n(), "order": order, "partitions": parts })
}

pub fn chain_from_json(v: &Value) -> Result<LeviChain> {
    let n = as_usize(field(v, "n")?, "n")?;
    let order: Vec<usize> = match v.get("order") {
        Some(o) => as_array(o, "order")?
            .iter()
            .map(|x| as_usize(x, "order").and_then(|i| i.checked_sub(1).ok_or_else(|| perr("order is 1-based"))))
            .collect::<Result<_>>()?,
        None => (0..n).collect(),
    };
    if order.len() != n {
        return Err(perr(format!("order has {} entries for n = {n}", order.len())));
    }
    let parts = as_array(field(v, "partitions")?, "partitions")?
        .iter()
        .map(|p| {
            let sizes: Vec<usize> = as_array(p, "partition")?.iter().map(|s| as_usize(s, "block size")).collect::<Result<_>>()?;
            Partition::from_sizes(&sizes)
        })
        .collect::<Result<Vec<_>>>()?;
    if parts.iter().any(|p| p.n() != n) {
        return Err(WcvError::Partition(format!("every partition must have total size {n}")));
    }
    LeviChain::new(order, parts)
}

pub fn params_to_json<S: Scalar>(p: &UnfoldingParams<S>) -> Value {
    json!({ "chain": chain_to_json(p.chain()), "ts": p.ts().iter().map(matrix_to_json).collect::<Vec<_>>() })
}

pub fn params_from_json<S: Scalar>(v: &Value, tol: &Tolerance) -> Result<UnfoldingParams<S>> {
    UnfoldingParams::new(chain_from_json(field(v, "chain")?)?, matrices_from_json(field(v, "ts")?, "ts")?, tol)
}

/// Slot-labeled point `{"slots": [{"name", "value"}]}`.
pub fn point_to_json<S: Scalar>(names: &[String], p: &[Matrix<S>]) -> Value {
    let slots: Vec<Value> = names.iter().zip(p).map(|(n, m)| json!({ "name": n, "value": matrix_to_json(m) })).collect();
    json!({ "slots": slots })
}

/// Reads a point; slot names are checked against `names` when present.
pub fn point_from_json<S: Scalar>(v: &Value, names: &[String]) -> Result<Vec<Matrix<S>>> {
    let slots = as_array(field(v, "slots")?, "slots")?;
    if slots.len() != names.len() {
        return Err(perr(format!("expected {} slots, found {}", names.len(), slots.len())));
    }
    slots
        .iter()
        .zip(names)
        .map(|(s, want)| {
            if let Some(name) = s.get("name").and_then(Value::as_str) {
                if name != want {
                    return Err(perr(format!("expected slot `{want}`, found `{name}`")));
                }
            }
            matrix_from_json(field(s, "value")?)
        })
        .collect()
}

pub fn unfold_result_to_json<S: Scalar>(r: &UnfoldResult<S>) -> Value {
    json!({
        "C": matrix_to_json(&r.c),
        "p": matrix_to_json(&r.p),
        "M": r.ms.iter().map(matrix_to_json).collect::<Vec<_>>(),
    })
}

pub fn unfold_result_from_json<S: Scalar>(v: &Value) -> Result<UnfoldResult<S>> {
    Ok(UnfoldResult {
        c: matrix_from_json(field(v, "C")?)?,
        p: matrix_from_json(field(v, "p")?)?,
        ms: matrices_from_json(field(v, "M")?, "M")?,
    })
}

pub fn rep_point_to_json<S: Scalar>(p: &RepPoint<S>) -> Value {
    let ab: Vec<Value> = p.ab.iter().map(|(a, b)| json!({ "A": matrix_to_json(a), "B": matrix_to_json(b) })).collect();
    let locals: Vec<Value> = p
        .locals
        .iter()
        .map(|l| {
            json!({
                "C": matrix_to_json(&l.c),
                "h": matrix_to_json(&l.h),
                "u": l.us.iter().map(matrix_to_json).collect::<Vec<_>>(),
            })
        })
        .collect();
    json!({ "mode": S::MODE.name(), "ab": ab, "points": locals })
}

pub fn rep_point_from_json<S: Scalar>(v: &Value) -> Result<RepPoint<S>> {
    check_mode::<S>(v)?;
    let ab = match v.get("ab") {
        Some(a) => as_array(a, "ab")?
            .iter()
            .map(|p| Ok((matrix_from_json(field(p, "A")?)?, matrix_from_json(field(p, "B")?)?)))
            .collect::<Result<_>>()?,
        None => Vec::new(),
    };
    let locals = as_array(field(v, "points")?, "points")?
        .iter()
        .map(|l| {
            let us = match l.get("u") {
                Some(u) => matrices_from_json(u, "u")?,
                None => Vec::new(),
            };
            Ok(LocalSlots { c: matrix_from_json(field(l, "C")?)?, h: matrix_from_json(field(l, "h")?)?, us })
        })
        .collect::<Result<_>>()?;
    Ok(RepPoint { ab, locals })
}

pub fn curve_to_json<S: Scalar>(c: &IrregularCurveData<S>) -> Value {
    let points: Vec<Value> = c
        .points
        .iter()
        .map(|p| {
            let mut o = Map::new();
            o.insert("q".into(), irregular_to_json(&p.q));
            o.insert("chain".into(), chain_to_json(&p.chain));
            o.insert("class_rep".into(), matrix_to_json(&p.class_rep));
            o.insert("params".into(), p.params.as_ref().map(|t| params_to_json(t)).unwrap_or(Value::Null));
            Value::Object(o)
        })
        .collect();
    json!({ "n": c.n, "genus": c.genus, "points": points })
}

pub fn curve_from_json<S: Scalar>(v: &Value, tol: &Tolerance) -> Result<IrregularCurveData<S>> {
    let n = as_usize(field(v, "n")?, "n")?;
    let genus = match v.get("genus") {
        Some(g) => as_usize(g, "genus")?,
        None => 0,
    };
    let points = as_array(field(v, "points")?, "points")?
        .iter()
        .map(|p| {
            let q = match p.get("q") {
                Some(q) => irregular_from_json(q)?,
                None => IrregularType::zero(n),
            };
            let chain = match p.get("chain") {
                Some(c) => chain_from_json(c)?,
                None => LeviChain::empty(n),
            };
            let params = match p.get("params") {
                Some(Value::Null) | None => None,
                Some(t) => Some(params_from_json(t, tol)?),
            };
            let class_rep = matrix_from_json(field(p, "class_rep")?)?;
            Ok(MarkedPoint { q, chain, params, class_rep })
        })
        .collect::<Result<_>>()?;
    IrregularCurveData::new(n, genus, points)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::random;
    use crate::scalar::{Exact, Float};
    use crate::spaces::SpaceModel;

    #[test]
    fn matrix_round_trip() {
        let mut rng = random::rng(5);
        for _ in 0..10 {
            let m: Matrix<Exact> = random::matrix(&mut rng, 3);
            assert_eq!(matrix_from_json::<Exact>(&parse_str(&matrix_to_json(&m).to_string()).unwrap()).unwrap(), m);
            let f: Matrix<Float> = random::matrix(&mut rng, 2);
            assert_eq!(matrix_from_json::<Float>(&matrix_to_json(&f)).unwrap(), f);
        }
    }

    #[test]
    fn mode_mismatch_is_rejected() {
        let m = Matrix::<Exact>::identity(2);
        let err = matrix_from_json::<Float>(&matrix_to_json(&m)).unwrap_err();
        assert!(matches!(err, WcvError::ModeMismatch { .. }));
    }

    #[test]
    fn rational_strings() {
        let v = parse_str(r#"{"n":1,"mode":"exact","entries":[[["-3/2","1"]]]}"#).unwrap();
        let m = matrix_from_json::<Exact>(&v).unwrap();
        assert_eq!(m[(0, 0)], Exact::from_gaussian((-3, 2), (1, 1)));
        assert!(matrix_from_json::<Exact>(&parse_str(r#"{"n":2,"entries":[[["1","0"]]]}"#).unwrap()).is_err());
    }

    #[test]
    fn chain_and_point_round_trip() {
        let mut rng = random::rng(8);
        let chain = random::chain(&mut rng, 4, 2, true);
        assert_eq!(chain_from_json(&chain_to_json(&chain)).unwrap(), chain);
        let model = SpaceModel::<Exact>::multi_fission(chain);
        let p = random::point(&mut rng, &model);
        let names = model.slot_names();
        assert_eq!(point_from_json::<Exact>(&point_to_json(&names, &p), &names).unwrap(), p);
        let q = random::irregular::<Exact>(&mut rng, 3, 2);
        assert_eq!(irregular_from_json::<Exact>(&irregular_to_json(&q)).unwrap(), q);
    }
}
