//! JSON readers and writers for every exchangeable object.
//!
//! The parser is hand-rolled and fully iterative: gamble plans nest one JSON
//! object per bet, so a hundred-thousand-step ladder would blow the stack of
//! any recursive-descent parser (and of a recursive destructor). Values,
//! parsing, conversion, and serialization all run on explicit work stacks.
//!
//! Number-valued fields accept plain JSON numbers, numeric strings, and
//! fraction strings like `"1/3"`, which are evaluated in double precision as
//! one division so the common exact-rational inputs are as accurate as
//! representable.
//!
//! Formats:
//! - distribution: `{"atoms": [[value, prob], ...]}`
//! - curve: `{"breakpoints": [[u, l], ...]}` (reader also accepts
//!   `{"points": ...}` for hand-specified interior points, or a distribution
//!   object, which is converted)
//! - kernel: `{"rows": {"<source value>": [[value, prob], ...]}}`
//! - plan: `{"wealth": w, "bet": null}` for leaves, otherwise
//!   `{"wealth": w, "bet": {"low_prob": p, "high_prob": q}, "low": n, "high": n}`
//! - mixture: `{"components": [{"weight": w, "plan": n}, ...]}`
//! - chain: `{"initial": distribution, "kernels": [kernel, ...]}`

use crate::config::Tolerances;
use crate::distribution::{DiscreteDistribution, DistError};
use crate::efficiency::{EfficiencyError, MixedPlan};
use crate::lorenz::{LorenzCurve, LorenzError};
use crate::synth::{FairBinaryGamble, FairKernel, GamblePlan, NodeId, PlanBuilder, PlanNode, SynthError};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum JsonIoError {
    #[error("JSON parse error at byte {pos}: {msg}")]
    Parse { pos: usize, msg: String },
    #[error("JSON shape error: {0}")]
    Schema(String),
    #[error("bad numeric value: {0}")]
    Number(String),
    #[error(transparent)]
    Distribution(#[from] DistError),
    #[error(transparent)]
    Curve(#[from] LorenzError),
    #[error(transparent)]
    Synth(#[from] SynthError),
    #[error(transparent)]
    Efficiency(#[from] EfficiencyError),
}

fn parse_err(pos: usize, msg: &str) -> JsonIoError {
    JsonIoError::Parse {
        pos,
        msg: msg.to_string(),
    }
}

fn schema(msg: impl Into<String>) -> JsonIoError {
    JsonIoError::Schema(msg.into())
}

/// A parsed JSON document. Object fields keep their textual order.
#[derive(Debug, Clone, PartialEq)]
pub enum JsonValue {
    Null,
    Bool(bool),
    Num(f64),
    Str(String),
    Arr(Vec<JsonValue>),
    Obj(Vec<(String, JsonValue)>),
}

/// Dropping a deep tree must not recurse, so children are drained onto an
/// explicit stack first.
impl Drop for JsonValue {
    fn drop(&mut self) {
        let mut stack: Vec<JsonValue> = Vec::new();
        take_children(self, &mut stack);
        while let Some(mut v) = stack.pop() {
            take_children(&mut v, &mut stack);
        }
    }
}

fn take_children(v: &mut JsonValue, stack: &mut Vec<JsonValue>) {
    match v {
        JsonValue::Arr(items) => stack.extend(items.drain(..)),
        JsonValue::Obj(fields) => stack.extend(fields.drain(..).map(|(_, child)| child)),
        _ => {}
    }
}

enum Frame {
    Arr(Vec<JsonValue>),
    Obj(Vec<(String, JsonValue)>, Option<String>),
}

/// Parses one JSON document, rejecting trailing garbage. Depth is limited
/// only by memory.
pub fn parse(text: &str) -> Result<JsonValue, JsonIoError> {
    let b = text.as_bytes();
    let mut i = 0usize;
    let mut frames: Vec<Frame> = Vec::new();
    let mut result: Option<JsonValue> = None;

    loop {
        if result.is_none() {
            skip_ws(b, &mut i);
            let c = *b.get(i).ok_or_else(|| parse_err(i, "unexpected end of input"))?;
            match c {
                b'[' => {
                    i += 1;
                    skip_ws(b, &mut i);
                    if b.get(i) == Some(&b']') {
                        i += 1;
                        result = Some(JsonValue::Arr(Vec::new()));
                    } else {
                        frames.push(Frame::Arr(Vec::new()));
                    }
                    continue;
                }
                b'{' => {
                    i += 1;
                    skip_ws(b, &mut i);
                    if b.get(i) == Some(&b'}') {
                        i += 1;
                        result = Some(JsonValue::Obj(Vec::new()));
                    } else {
                        let key = parse_object_key(b, &mut i)?;
                        frames.push(Frame::Obj(Vec::new(), Some(key)));
                    }
                    continue;
                }
                b'"' => result = Some(JsonValue::Str(parse_string(b, &mut i)?)),
                b't' => {
                    expect_literal(b, &mut i, "true")?;
                    result = Some(JsonValue::Bool(true));
                }
                b'f' => {
                    expect_literal(b, &mut i, "false")?;
                    result = Some(JsonValue::Bool(false));
                }
                b'n' => {
                    expect_literal(b, &mut i, "null")?;
                    result = Some(JsonValue::Null);
                }
                _ => result = Some(JsonValue::Num(parse_number(b, &mut i)?)),
            }
        }

        let value = result.take().expect("value just produced");
        match frames.last_mut() {
            None => {
                skip_ws(b, &mut i);
                if i != b.len() {
                    return Err(parse_err(i, "trailing characters after the document"));
                }
                return Ok(value);
            }
            Some(Frame::Arr(items)) => {
                items.push(value);
                skip_ws(b, &mut i);
                match b.get(i) {
                    Some(b',') => {
                        i += 1;
                    }
                    Some(b']') => {
                        i += 1;
                        let Some(Frame::Arr(items)) = frames.pop() else {
                            unreachable!("top frame checked above");
                        };
                        result = Some(JsonValue::Arr(items));
                    }
                    _ => return Err(parse_err(i, "expected ',' or ']' in array")),
                }
            }
            Some(Frame::Obj(fields, pending)) => {
                let key = pending.take().expect("object frame awaits a value");
                fields.push((key, value));
                skip_ws(b, &mut i);
                match b.get(i) {
                    Some(b',') => {
                        i += 1;
                        *pending = Some(parse_object_key(b, &mut i)?);
                    }
                    Some(b'}') => {
                        i += 1;
                        let Some(Frame::Obj(fields, _)) = frames.pop() else {
                            unreachable!("top frame checked above");
                        };
                        result = Some(JsonValue::Obj(fields));
                    }
                    _ => return Err(parse_err(i, "expected ',' or '}' in object")),
                }
            }
        }
    }
}

fn skip_ws(b: &[u8], i: &mut usize) {
    while matches!(b.get(*i), Some(b' ' | b'\t' | b'\n' | b'\r')) {
        *i += 1;
    }
}

fn parse_object_key(b: &[u8], i: &mut usize) -> Result<String, JsonIoError> {
    skip_ws(b, i);
    if b.get(*i) != Some(&b'"') {
        return Err(parse_err(*i, "expected a string key"));
    }
    let key = parse_string(b, i)?;
    skip_ws(b, i);
    if b.get(*i) != Some(&b':') {
        return Err(parse_err(*i, "expected ':' after key"));
    }
    *i += 1;
    Ok(key)
}

fn expect_literal(b: &[u8], i: &mut usize, lit: &str) -> Result<(), JsonIoError> {
    if b.get(*i..*i + lit.len()) == Some(lit.as_bytes()) {
        *i += lit.len();
        Ok(())
    } else {
        Err(parse_err(*i, "unrecognized literal"))
    }
}

fn parse_number(b: &[u8], i: &mut usize) -> Result<f64, JsonIoError> {
    let start = *i;
    while let Some(&c) = b.get(*i) {
        if c.is_ascii_digit() || matches!(c, b'-' | b'+' | b'.' | b'e' | b'E') {
            *i += 1;
        } else {
            break;
        }
    }
    if *i == start {
        return Err(parse_err(start, "expected a value"));
    }
    let s = std::str::from_utf8(&b[start..*i]).expect("ASCII only");
    s.parse::<f64>()
        .map_err(|_| parse_err(start, "invalid number"))
}

fn parse_string(b: &[u8], i: &mut usize) -> Result<String, JsonIoError> {
    debug_assert_eq!(b.get(*i), Some(&b'"'));
    *i += 1;
    let mut s = String::new();
    loop {
        let c = *b.get(*i).ok_or_else(|| parse_err(*i, "unterminated string"))?;
        *i += 1;
        match c {
            b'"' => return Ok(s),
            b'\\' => {
                let e = *b.get(*i).ok_or_else(|| parse_err(*i, "unterminated escape"))?;
                *i += 1;
                match e {
                    b'"' => s.push('"'),
                    b'\\' => s.push('\\'),
                    b'/' => s.push('/'),
                    b'b' => s.push('\u{0008}'),
                    b'f' => s.push('\u{000C}'),
                    b'n' => s.push('\n'),
                    b'r' => s.push('\r'),
                    b't' => s.push('\t'),
                    b'u' => {
                        let hi = parse_hex4(b, i)?;
                        let cp = if (0xD800..0xDC00).contains(&hi) {
                            if b.get(*i) == Some(&b'\\') && b.get(*i + 1) == Some(&b'u') {
                                *i += 2;
                                let lo = parse_hex4(b, i)?;
                                if !(0xDC00..0xE000).contains(&lo) {
                                    return Err(parse_err(*i, "invalid low surrogate"));
                                }
                                0x10000 + ((hi - 0xD800) << 10) + (lo - 0xDC00)
                            } else {
                                return Err(parse_err(*i, "unpaired surrogate"));
                            }
                        } else if (0xDC00..0xE000).contains(&hi) {
                            return Err(parse_err(*i, "unpaired low surrogate"));
                        } else {
                            hi
                        };
                        s.push(
                            char::from_u32(cp)
                                .ok_or_else(|| parse_err(*i, "invalid code point"))?,
                        );
                    }
                    _ => return Err(parse_err(*i - 1, "unknown escape")),
                }
            }
            0x20..=0x7F => s.push(c as char),
            0xC0..=0xFF => {
                let len = match c {
                    0xF0..=0xFF => 4,
                    0xE0..=0xEF => 3,
                    _ => 2,
                };
                let start = *i - 1;
                let chunk = b
                    .get(start..start + len)
                    .and_then(|w| std::str::from_utf8(w).ok())
                    .ok_or_else(|| parse_err(start, "invalid UTF-8 sequence"))?;
                s.push_str(chunk);
                *i = start + len;
            }
            _ => return Err(parse_err(*i - 1, "control character in string")),
        }
    }
}

fn parse_hex4(b: &[u8], i: &mut usize) -> Result<u32, JsonIoError> {
    let chunk = b
        .get(*i..*i + 4)
        .and_then(|w| std::str::from_utf8(w).ok())
        .ok_or_else(|| parse_err(*i, "truncated \\u escape"))?;
    let v = u32::from_str_radix(chunk, 16).map_err(|_| parse_err(*i, "invalid \\u escape"))?;
    *i += 4;
    Ok(v)
}

/// Numeric coercion used by all readers: a JSON number, a numeric string,
/// or a fraction string "numerator/denominator".
pub fn number_like(v: &JsonValue) -> Result<f64, JsonIoError> {
    match v {
        JsonValue::Num(x) => Ok(*x),
        JsonValue::Str(s) => numeric_str(s),
        other => Err(JsonIoError::Number(format!(
            "expected a number or numeric string, got {}",
            kind(other)
        ))),
    }
}

fn numeric_str(s: &str) -> Result<f64, JsonIoError> {
    let s = s.trim();
    if let Some((num, den)) = s.split_once('/') {
        let n: f64 = num
            .trim()
            .parse()
            .map_err(|_| JsonIoError::Number(format!("bad fraction numerator in {s:?}")))?;
        let d: f64 = den
            .trim()
            .parse()
            .map_err(|_| JsonIoError::Number(format!("bad fraction denominator in {s:?}")))?;
        if d == 0.0 {
            return Err(JsonIoError::Number(format!("zero denominator in {s:?}")));
        }
        Ok(n / d)
    } else {
        s.parse()
            .map_err(|_| JsonIoError::Number(format!("not numeric: {s:?}")))
    }
}

fn kind(v: &JsonValue) -> &'static str {
    match v {
        JsonValue::Null => "null",
        JsonValue::Bool(_) => "a boolean",
        JsonValue::Num(_) => "a number",
        JsonValue::Str(_) => "a string",
        JsonValue::Arr(_) => "an array",
        JsonValue::Obj(_) => "an object",
    }
}

fn as_obj(v: &JsonValue) -> Result<&[(String, JsonValue)], JsonIoError> {
    match v {
        JsonValue::Obj(fields) => Ok(fields),
        other => Err(schema(format!("expected an object, got {}", kind(other)))),
    }
}

fn as_arr(v: &JsonValue) -> Result<&[JsonValue], JsonIoError> {
    match v {
        JsonValue::Arr(items) => Ok(items),
        other => Err(schema(format!("expected an array, got {}", kind(other)))),
    }
}

fn field<'a>(fields: &'a [(String, JsonValue)], key: &str) -> Option<&'a JsonValue> {
    fields.iter().find(|(k, _)| k == key).map(|(_, v)| v)
}

fn require<'a>(
    fields: &'a [(String, JsonValue)],
    key: &str,
    context: &str,
) -> Result<&'a JsonValue, JsonIoError> {
    field(fields, key).ok_or_else(|| schema(format!("{context} needs a \"{key}\" field")))
}

fn pair_list(v: &JsonValue, context: &str) -> Result<Vec<(f64, f64)>, JsonIoError> {
    let items = as_arr(v)?;
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        let pair = as_arr(item)?;
        if pair.len() != 2 {
            return Err(schema(format!("{context} entries must be [value, prob] pairs")));
        }
        out.push((number_like(&pair[0])?, number_like(&pair[1])?));
    }
    Ok(out)
}

// ---------------------------------------------------------------------------
// Readers
// ---------------------------------------------------------------------------

pub fn dist_from_json(text: &str, tol: &Tolerances) -> Result<DiscreteDistribution, JsonIoError> {
    dist_from_value(&parse(text)?, tol)
}

pub fn dist_from_value(
    v: &JsonValue,
    tol: &Tolerances,
) -> Result<DiscreteDistribution, JsonIoError> {
    let fields = as_obj(v)?;
    let atoms = require(fields, "atoms", "a distribution")?;
    let pairs = pair_list(atoms, "\"atoms\"")?;
    Ok(DiscreteDistribution::from_pairs_with(&pairs, tol)?)
}

/// Accepts a curve (`breakpoints` or hand-specified interior `points`) or a
/// distribution (`atoms`), converting the latter.
pub fn curve_from_json(text: &str, tol: &Tolerances) -> Result<LorenzCurve, JsonIoError> {
    curve_from_value(&parse(text)?, tol)
}

pub fn curve_from_value(v: &JsonValue, tol: &Tolerances) -> Result<LorenzCurve, JsonIoError> {
    let fields = as_obj(v)?;
    if field(fields, "atoms").is_some() {
        let d = dist_from_value(v, tol)?;
        return Ok(LorenzCurve::from_distribution_with(&d, tol)?);
    }
    let pts = field(fields, "breakpoints")
        .or_else(|| field(fields, "points"))
        .ok_or_else(|| {
            schema("a curve needs \"breakpoints\", \"points\", or \"atoms\"")
        })?;
    let pairs = pair_list(pts, "curve point")?;
    Ok(LorenzCurve::from_points_with(&pairs, tol)?)
}

pub fn kernel_from_json(text: &str, tol: &Tolerances) -> Result<FairKernel, JsonIoError> {
    kernel_from_value(&parse(text)?, tol)
}

pub fn kernel_from_value(v: &JsonValue, tol: &Tolerances) -> Result<FairKernel, JsonIoError> {
    let fields = as_obj(v)?;
    let rows_v = require(fields, "rows", "a kernel")?;
    let rows_fields = as_obj(rows_v)?;
    let mut rows = Vec::with_capacity(rows_fields.len());
    for (key, row_v) in rows_fields {
        let value = numeric_str(key)?;
        let pairs = pair_list(row_v, "kernel row")?;
        rows.push((value, DiscreteDistribution::from_pairs_with(&pairs, tol)?));
    }
    Ok(FairKernel::from_rows(rows)?)
}

pub fn plan_from_json(text: &str) -> Result<GamblePlan, JsonIoError> {
    plan_from_value(&parse(text)?)
}

/// Builds the arena bottom-up with an explicit visit/build stack, so plan
/// depth is unbounded. Bet nodes must carry probabilities consistent with
/// the fair-gamble identity; leaves are `"bet": null` with no children.
pub fn plan_from_value(v: &JsonValue) -> Result<GamblePlan, JsonIoError> {
    enum Work<'a> {
        Visit(&'a JsonValue),
        Build(&'a JsonValue),
    }
    let mut builder = PlanBuilder::new();
    let mut work = vec![Work::Visit(v)];
    let mut built: Vec<NodeId> = Vec::new();
    while let Some(item) = work.pop() {
        match item {
            Work::Visit(node_v) => {
                let fields = as_obj(node_v)?;
                let bet = require(fields, "bet", "a plan node")?;
                if matches!(bet, JsonValue::Null) {
                    if field(fields, "low").is_some() || field(fields, "high").is_some() {
                        return Err(schema("a leaf (\"bet\": null) cannot have children"));
                    }
                    let wealth = number_like(require(fields, "wealth", "a plan node")?)?;
                    built.push(builder.leaf(wealth));
                } else {
                    work.push(Work::Build(node_v));
                    work.push(Work::Visit(require(fields, "high", "a bet node")?));
                    work.push(Work::Visit(require(fields, "low", "a bet node")?));
                }
            }
            Work::Build(node_v) => {
                let fields = as_obj(node_v)?;
                let wealth = number_like(require(fields, "wealth", "a plan node")?)?;
                let bet_fields = as_obj(require(fields, "bet", "a bet node")?)?;
                let high = built.pop().expect("high subtree built");
                let low = built.pop().expect("low subtree built");
                let low_value = builder.wealth(low);
                let high_value = builder.wealth(high);
                let gamble = match (
                    field(bet_fields, "low_prob"),
                    field(bet_fields, "high_prob"),
                ) {
                    (Some(lp), Some(hp)) => FairBinaryGamble::with_probs(
                        wealth,
                        low_value,
                        number_like(lp)?,
                        high_value,
                        number_like(hp)?,
                    )?,
                    _ => FairBinaryGamble::new(wealth, low_value, high_value)?,
                };
                built.push(builder.bet(gamble, low, high)?);
            }
        }
    }
    let root = built.pop().expect("root built");
    debug_assert!(built.is_empty());
    Ok(builder.finish(root))
}

pub fn mixed_from_json(text: &str) -> Result<MixedPlan, JsonIoError> {
    mixed_from_value(&parse(text)?)
}

pub fn mixed_from_value(v: &JsonValue) -> Result<MixedPlan, JsonIoError> {
    let fields = as_obj(v)?;
    let comps = as_arr(require(fields, "components", "a mixture")?)?;
    let mut out = Vec::with_capacity(comps.len());
    for comp in comps {
        let cf = as_obj(comp)?;
        let weight = number_like(require(cf, "weight", "a mixture component")?)?;
        let plan = plan_from_value(require(cf, "plan", "a mixture component")?)?;
        out.push((weight, plan));
    }
    Ok(MixedPlan::new(out)?)
}

/// `{"initial": distribution, "kernels": [kernel, ...]}`.
pub fn chain_from_json(
    text: &str,
    tol: &Tolerances,
) -> Result<(DiscreteDistribution, Vec<FairKernel>), JsonIoError> {
    let v = parse(text)?;
    let fields = as_obj(&v)?;
    let initial = dist_from_value(require(fields, "initial", "a chain")?, tol)?;
    let kernel_vs = as_arr(require(fields, "kernels", "a chain")?)?;
    let mut kernels = Vec::with_capacity(kernel_vs.len());
    for kv in kernel_vs {
        kernels.push(kernel_from_value(kv, tol)?);
    }
    Ok((initial, kernels))
}

// ---------------------------------------------------------------------------
// Writers
// ---------------------------------------------------------------------------

/// Shortest representation that parses back to the same double.
fn fmt(x: f64) -> String {
    format!("{x}")
}

pub fn dist_to_json(d: &DiscreteDistribution) -> String {
    let body: Vec<String> = d
        .atoms()
        .iter()
        .map(|&(v, p)| format!("[{},{}]", fmt(v), fmt(p)))
        .collect();
    format!("{{\"atoms\":[{}]}}", body.join(","))
}

pub fn curve_to_json(c: &LorenzCurve) -> String {
    let body: Vec<String> = c
        .breakpoints()
        .iter()
        .map(|&(u, l)| format!("[{},{}]", fmt(u), fmt(l)))
        .collect();
    format!("{{\"breakpoints\":[{}]}}", body.join(","))
}

pub fn kernel_to_json(k: &FairKernel) -> String {
    let body: Vec<String> = k
        .rows()
        .iter()
        .map(|(v, row)| {
            let atoms: Vec<String> = row
                .atoms()
                .iter()
                .map(|&(y, q)| format!("[{},{}]", fmt(y), fmt(q)))
                .collect();
            format!("\"{}\":[{}]", fmt(*v), atoms.join(","))
        })
        .collect();
    format!("{{\"rows\":{{{}}}}}", body.join(","))
}

/// Iterative pre-order emission; deep chains are fine.
pub fn plan_to_json(plan: &GamblePlan) -> String {
    enum Emit {
        Node(NodeId),
        Lit(&'static str),
    }
    let mut out = String::new();
    let mut stack = vec![Emit::Node(plan.root())];
    while let Some(e) = stack.pop() {
        match e {
            Emit::Lit(s) => out.push_str(s),
            Emit::Node(id) => match plan.node(id) {
                PlanNode::Leaf { wealth } => {
                    out.push_str(&format!("{{\"wealth\":{},\"bet\":null}}", fmt(*wealth)));
                }
                PlanNode::Bet { gamble, low, high } => {
                    out.push_str(&format!(
                        "{{\"wealth\":{},\"bet\":{{\"low_prob\":{},\"high_prob\":{}}},\"low\":",
                        fmt(gamble.wealth),
                        fmt(gamble.low_prob),
                        fmt(gamble.high_prob),
                    ));
                    stack.push(Emit::Lit("}"));
                    stack.push(Emit::Node(*high));
                    stack.push(Emit::Lit(",\"high\":"));
                    stack.push(Emit::Node(*low));
                }
            },
        }
    }
    out
}

pub fn mixed_to_json(m: &MixedPlan) -> String {
    let body: Vec<String> = m
        .components()
        .iter()
        .map(|(w, plan)| format!("{{\"weight\":{},\"plan\":{}}}", fmt(*w), plan_to_json(plan)))
        .collect();
    format!("{{\"components\":[{}]}}", body.join(","))
}
