//! JSON kernel files.
//!
//! ```text
//! {"type": "dense", "labels": [...], "entries": [[[re, im], ...], ...], "hermitian": true}
//! {"type": "builtin", "name": "outer_power", "params": {"alpha": 0.5}, "tail_bound": "..."}
//! {"type": "composite", "op": "rescale", "operands": [...], "sequence": {...}}
//! ```
//!
//! Numbers are written with 17 significant digits so every double survives
//! a round trip unchanged.

use std::io;

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde_json::{json, Map, Value};

use super::{
    adjoint, convolve, direct_sum, hadamard, normalize_bd, outer, rescale, sum, Builtin, Composite,
    Kernel, KernelError, Node, Result, Sequence, Window,
};
use crate::linalg::HermitianMatrix;

/// Relative Hermitian defect tolerated in dense files declared Hermitian.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Pretty JSON with every float printed as `{:.16e}`.
pub fn write_value(v: &Value) -> String {
    let mut out = Vec::new();
    let mut ser = serde_json::Serializer::with_formatter(&mut out, FullPrecision::default());
    serde::Serialize::serialize(v, &mut ser).expect("serializing a Value to memory cannot fail");
    String::from_utf8(out).expect("serde_json emits UTF-8")
}

#[derive(Default)]
struct FullPrecision {
    pretty: serde_json::ser::PrettyFormatter<'static>,
}

impl serde_json::ser::Formatter for FullPrecision {
    fn write_f64<W: ?Sized + io::Write>(&mut self, w: &mut W, value: f64) -> io::Result<()> {
        if value.is_finite() {
            write!(w, "{value:.16e}")
        } else {
            w.write_all(b"null")
        }
    }
    fn begin_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_array(w)
    }
    fn end_array<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array(w)
    }
    fn begin_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_array_value(w, first)
    }
    fn end_array_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_array_value(w)
    }
    fn begin_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object(w)
    }
    fn end_object<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object(w)
    }
    fn begin_object_key<W: ?Sized + io::Write>(&mut self, w: &mut W, first: bool) -> io::Result<()> {
        self.pretty.begin_object_key(w, first)
    }
    fn begin_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.begin_object_value(w)
    }
    fn end_object_value<W: ?Sized + io::Write>(&mut self, w: &mut W) -> io::Result<()> {
        self.pretty.end_object_value(w)
    }
}

pub fn complex_to_json(z: Complex64) -> Value {
    json!([z.re, z.im])
}

pub fn matrix_to_json(m: &DMatrix<Complex64>) -> Value {
    Value::Array(
        (0..m.nrows())
            .map(|i| Value::Array((0..m.ncols()).map(|j| complex_to_json(m[(i, j)])).collect()))
            .collect(),
    )
}

fn sequence_to_json(s: &Sequence) -> Value {
    match s {
        Sequence::Explicit(v) => json!({
            "kind": "explicit",
            "values": v.iter().map(|z| complex_to_json(*z)).collect::<Vec<_>>(),
        }),
        Sequence::Power { alpha } => json!({"kind": "power", "alpha": alpha}),
        Sequence::Constant(c) => json!({"kind": "constant", "value": complex_to_json(*c)}),
        Sequence::HarmonicCoefficients => json!({"kind": "harmonic"}),
        Sequence::Product(a, b) => json!({
            "kind": "product",
            "factors": [sequence_to_json(a), sequence_to_json(b)],
        }),
    }
}

pub fn to_json(k: &Kernel) -> Value {
    match k.node() {
        Node::Dense(d) => json!({
            "type": "dense",
            "labels": d.labels(),
            "hermitian": d.is_hermitian(),
            "entries": matrix_to_json(d.matrix()),
        }),
        Node::Builtin(b) => {
            let params = match b {
                Builtin::OuterPower { alpha } => json!({"alpha": alpha}),
                Builtin::UniformFamily { n } => json!({"n": n}),
                Builtin::Shift { f } => json!({"f": f.iter().map(|z| complex_to_json(*z)).collect::<Vec<_>>()}),
                _ => json!({}),
            };
            json!({
                "type": "builtin",
                "name": b.name(),
                "params": params,
                "tail_bound": b.tail_bound_description(),
            })
        }
        Node::Composite(c) => {
            let mut obj = Map::new();
            obj.insert("type".into(), json!("composite"));
            obj.insert("op".into(), json!(c.op_name()));
            let operands: Vec<&Kernel> = match c {
                Composite::DirectSum(parts) | Composite::Sum(parts) => parts.iter().collect(),
                Composite::Rescale { kernel, .. } => vec![kernel],
                Composite::NormalizeBd(k) | Composite::Adjoint(k) => vec![k],
                Composite::Hadamard(a, b) => vec![a, b],
                Composite::Outer(_) => vec![],
            };
            obj.insert(
                "operands".into(),
                Value::Array(operands.into_iter().map(to_json).collect()),
            );
            if let Composite::Rescale { by: s, .. } | Composite::Outer(s) = c {
                obj.insert("sequence".into(), sequence_to_json(s));
            }
            Value::Object(obj)
        }
    }
}

pub fn to_string(k: &Kernel) -> String {
    let mut s = write_value(&to_json(k));
    s.push('\n');
    s
}

pub fn parse(text: &str) -> Result<Kernel> {
    let v: Value = serde_json::from_str(text).map_err(|e| KernelError::Format {
        field: "<document>".into(),
        message: e.to_string(),
    })?;
    from_json(&v)
}

pub fn from_json(v: &Value) -> Result<Kernel> {
    Parser::default().kernel(v)
}

fn bad(field: &str, message: impl Into<String>) -> KernelError {
    KernelError::Format {
        field: field.to_string(),
        message: message.into(),
    }
}

/// Tracks the path of the value being parsed for diagnostics.
#[derive(Default)]
struct Parser {
    path: String,
}

impl Parser {
    fn at(&self, key: &str) -> String {
        if self.path.is_empty() {
            key.to_string()
        } else {
            format!("{}.{key}", self.path)
        }
    }

    fn child(&self, key: &str) -> Parser {
        Parser { path: self.at(key) }
    }

    fn field<'a>(&self, obj: &'a Map<String, Value>, key: &str) -> Result<&'a Value> {
        obj.get(key).ok_or_else(|| bad(&self.at(key), "missing"))
    }

    fn str_field<'a>(&self, obj: &'a Map<String, Value>, key: &str) -> Result<&'a str> {
        self.field(obj, key)?
            .as_str()
            .ok_or_else(|| bad(&self.at(key), "expected a string"))
    }

    fn f64_field(&self, obj: &Map<String, Value>, key: &str) -> Result<f64> {
        let v = self.field(obj, key)?;
        number(v).ok_or_else(|| bad(&self.at(key), "expected a finite number"))
    }

    fn usize_field(&self, obj: &Map<String, Value>, key: &str) -> Result<usize> {
        self.field(obj, key)?
            .as_u64()
            .map(|n| n as usize)
            .ok_or_else(|| bad(&self.at(key), "expected a nonnegative integer"))
    }

    fn complex(&self, v: &Value, field: &str) -> Result<Complex64> {
        let pair = v.as_array().filter(|a| a.len() == 2);
        let parts = pair.and_then(|a| Some((number(&a[0])?, number(&a[1])?)));
        parts
            .map(|(re, im)| Complex64::new(re, im))
            .ok_or_else(|| bad(field, "expected a pair [re, im] of finite numbers"))
    }

    fn complex_list(&self, v: &Value, key: &str) -> Result<Vec<Complex64>> {
        let field = self.at(key);
        let items = v.as_array().ok_or_else(|| bad(&field, "expected an array"))?;
        items
            .iter()
            .enumerate()
            .map(|(i, z)| self.complex(z, &format!("{field}[{i}]")))
            .collect()
    }

    fn kernel(&self, v: &Value) -> Result<Kernel> {
        let obj = v
            .as_object()
            .ok_or_else(|| bad(if self.path.is_empty() { "<document>" } else { &self.path }, "expected an object"))?;
        match self.str_field(obj, "type")? {
            "dense" => self.dense(obj),
            "builtin" => self.builtin(obj),
            "composite" => self.composite(obj),
            other => Err(bad(
                &self.at("type"),
                format!("unknown kernel type {other:?} (expected dense, builtin or composite)"),
            )),
        }
    }

    fn dense(&self, obj: &Map<String, Value>) -> Result<Kernel> {
        let rows = self
            .field(obj, "entries")?
            .as_array()
            .ok_or_else(|| bad(&self.at("entries"), "expected an array of rows"))?;
        let n = rows.len();
        if n == 0 {
            return Err(bad(&self.at("entries"), "matrix has no rows"));
        }
        let mut m = DMatrix::zeros(n, n);
        for (i, row) in rows.iter().enumerate() {
            let field = format!("{}[{i}]", self.at("entries"));
            let row = row.as_array().ok_or_else(|| bad(&field, "expected a row array"))?;
            if row.len() != n {
                return Err(bad(&field, format!("row has {} entries, expected {n}", row.len())));
            }
            for (j, z) in row.iter().enumerate() {
                m[(i, j)] = self.complex(z, &format!("{field}[{j}]"))?;
            }
        }
        let labels = match obj.get("labels") {
            None => super::default_labels(n),
            Some(v) => v
                .as_array()
                .and_then(|a| a.iter().map(|l| l.as_str().map(str::to_string)).collect::<Option<Vec<_>>>())
                .ok_or_else(|| bad(&self.at("labels"), "expected an array of strings"))?,
        };
        let hermitian = match obj.get("hermitian") {
            None => true,
            Some(v) => v
                .as_bool()
                .ok_or_else(|| bad(&self.at("hermitian"), "expected a boolean"))?,
        };
        let labelled = |e: KernelError| match e {
            KernelError::LabelCountMismatch { .. } | KernelError::DuplicateLabel(_) => {
                bad(&self.at("labels"), e.to_string())
            }
            other => other,
        };
        if hermitian {
            let h = HermitianMatrix::checked(m, HERMITIAN_TOL).map_err(|e| {
                bad(&self.at("entries"), format!("not Hermitian: {e}"))
            })?;
            Kernel::dense(labels, h).map_err(labelled)
        } else {
            Kernel::dense_general(labels, m).map_err(labelled)
        }
    }

    fn builtin(&self, obj: &Map<String, Value>) -> Result<Kernel> {
        let name = self.str_field(obj, "name")?;
        let empty = Map::new();
        let params = match obj.get("params") {
            None | Some(Value::Null) => &empty,
            Some(v) => v
                .as_object()
                .ok_or_else(|| bad(&self.at("params"), "expected an object"))?,
        };
        let p = self.child("params");
        builtin_from_params(name, params).and_then(Kernel::builtin).map_err(|e| match e {
            KernelError::InvalidParameter { name, message } => bad(&p.at(&name), message),
            other => other,
        })
    }

    fn operands(&self, obj: &Map<String, Value>) -> Result<Vec<Kernel>> {
        let list = match obj.get("operands") {
            None => return Ok(Vec::new()),
            Some(v) => v
                .as_array()
                .ok_or_else(|| bad(&self.at("operands"), "expected an array"))?,
        };
        list.iter()
            .enumerate()
            .map(|(i, v)| self.child(&format!("operands[{i}]")).kernel(v))
            .collect()
    }

    fn sequence(&self, v: &Value) -> Result<Sequence> {
        let obj = v
            .as_object()
            .ok_or_else(|| bad(&self.path, "expected a sequence object"))?;
        match self.str_field(obj, "kind")? {
            "explicit" => Ok(Sequence::Explicit(self.complex_list(self.field(obj, "values")?, "values")?)),
            "power" => Ok(Sequence::Power {
                alpha: self.f64_field(obj, "alpha")?,
            }),
            "constant" => Ok(Sequence::Constant(
                self.complex(self.field(obj, "value")?, &self.at("value"))?,
            )),
            "harmonic" => Ok(Sequence::HarmonicCoefficients),
            "product" => {
                let f = self
                    .field(obj, "factors")?
                    .as_array()
                    .filter(|a| a.len() == 2)
                    .ok_or_else(|| bad(&self.at("factors"), "expected two factors"))?;
                Ok(Sequence::Product(
                    Box::new(self.child("factors[0]").sequence(&f[0])?),
                    Box::new(self.child("factors[1]").sequence(&f[1])?),
                ))
            }
            other => Err(bad(&self.at("kind"), format!("unknown sequence kind {other:?}"))),
        }
    }

    fn composite(&self, obj: &Map<String, Value>) -> Result<Kernel> {
        let op = self.str_field(obj, "op")?;
        let mut ops = self.operands(obj)?;
        let arity = |n: usize| -> Result<()> {
            if ops.len() != n {
                return Err(bad(
                    &self.at("operands"),
                    format!("`{op}` takes {n} operand(s), found {}", ops.len()),
                ));
            }
            Ok(())
        };
        let seq = || self.child("sequence").sequence(self.field(obj, "sequence")?);
        let located = |e: KernelError| match e {
            KernelError::Format { .. } => e,
            other => bad(&self.at("operands"), other.to_string()),
        };
        match op {
            "direct-sum" => direct_sum(ops).map_err(located),
            "sum" => sum(ops).map_err(located),
            "hadamard" => {
                arity(2)?;
                let b = ops.pop().expect("two operands");
                hadamard(&ops[0], &b).map_err(located)
            }
            "rescale" => {
                arity(1)?;
                Ok(rescale(&ops[0], &seq()?))
            }
            "normalize-bd" => {
                arity(1)?;
                Ok(normalize_bd(&ops[0]))
            }
            "adjoint" => {
                arity(1)?;
                Ok(adjoint(&ops[0]))
            }
            "outer" => {
                arity(0)?;
                Ok(outer(&seq()?))
            }
            "convolution" => {
                arity(2)?;
                let size = self.usize_field(obj, "window")?;
                let w = Window::new(size).map_err(|e| bad(&self.at("window"), e.to_string()))?;
                let tail_tol = match obj.get("tail_tol") {
                    None => 1e-12,
                    Some(_) => self.f64_field(obj, "tail_tol")?,
                };
                Ok(convolve(&ops[0], &ops[1], &w, tail_tol).map_err(located)?.kernel)
            }
            other => Err(bad(&self.at("op"), format!("unknown composite op {other:?}"))),
        }
    }
}

fn number(v: &Value) -> Option<f64> {
    v.as_f64().filter(|x| x.is_finite())
}

fn complex_pairs(v: &Value) -> Option<Vec<Complex64>> {
    v.as_array()?
        .iter()
        .map(|z| {
            let a = z.as_array().filter(|a| a.len() == 2)?;
            Some(Complex64::new(number(&a[0])?, number(&a[1])?))
        })
        .collect()
}

/// Builds a builtin from its name and parameter object. Parameter errors
/// name the offending key.
pub fn builtin_from_params(name: &str, params: &Map<String, Value>) -> Result<Builtin> {
    let invalid = |key: &str, message: &str| KernelError::InvalidParameter {
        name: key.into(),
        message: message.into(),
    };
    let param = |key: &str| params.get(key).ok_or_else(|| invalid(key, "missing"));
    Ok(match name {
        "delta" => Builtin::Delta,
        "diag_n2" => Builtin::DiagN2,
        "harmonic" => Builtin::Harmonic,
        "outer_power" => Builtin::OuterPower {
            alpha: number(param("alpha")?).ok_or_else(|| invalid("alpha", "expected a finite number"))?,
        },
        "uniform_family" => Builtin::UniformFamily {
            n: param("n")?
                .as_u64()
                .ok_or_else(|| invalid("n", "expected a nonnegative integer"))? as usize,
        },
        "shift" => Builtin::Shift {
            f: complex_pairs(param("f")?)
                .ok_or_else(|| invalid("f", "expected an array of [re, im] pairs"))?,
        },
        other => {
            return Err(KernelError::UnknownName {
                kind: "builtin",
                name: other.into(),
            })
        }
    })
}
