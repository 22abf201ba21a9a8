//! Text formats: protocol files, recorded traces and counter machine
//! listings, with parsers and canonical serializers.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{One, Zero};
use thiserror::Error;

use crate::encodings::{Counter, Instr, TwoCounterMachine};
use crate::model::{
    Action, AtomicConstraint, ClockId, Edge, GuardBound, LocId, MsgId, ParamBound, ParamId,
    Protocol, Rat, Rel, SourceMap,
};
use crate::semantics::{Execution, Label, Mode};

/// Position of a parsed construct, 1-based.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SourceSpan {
    pub line: usize,
    pub col: usize,
}

impl fmt::Display for SourceSpan {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.line, self.col)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParseCode {
    MissingHeader,
    MissingInit,
    UnknownDirective,
    BadRational,
    BadBound,
    BadEdge,
    BadTrace,
    BadMachine,
    DuplicateDecl,
    UndeclaredIdent,
}

impl ParseCode {
    pub fn as_str(self) -> &'static str {
        match self {
            ParseCode::MissingHeader => "MISSING_HEADER",
            ParseCode::MissingInit => "MISSING_INIT",
            ParseCode::UnknownDirective => "UNKNOWN_DIRECTIVE",
            ParseCode::BadRational => "BAD_RATIONAL",
            ParseCode::BadBound => "BAD_BOUND",
            ParseCode::BadEdge => "BAD_EDGE",
            ParseCode::BadTrace => "BAD_TRACE",
            ParseCode::BadMachine => "BAD_MACHINE",
            ParseCode::DuplicateDecl => "DUPLICATE_DECL",
            ParseCode::UndeclaredIdent => "UNDECLARED_IDENT",
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("{span}: {message} [{}]", code.as_str())]
pub struct ParseError {
    pub code: ParseCode,
    pub span: SourceSpan,
    pub message: String,
}

fn err(code: ParseCode, line: usize, col: usize, message: impl Into<String>) -> ParseError {
    ParseError {
        code,
        span: SourceSpan { line, col },
        message: message.into(),
    }
}

/// Nonnegative rational literal: an integer, a fraction `a/b`, or a
/// terminating decimal.
pub fn parse_rat(s: &str) -> Option<Rat> {
    if let Some((n, d)) = s.split_once('/') {
        let n: num_bigint::BigInt = n.parse().ok()?;
        let d: num_bigint::BigInt = d.parse().ok()?;
        if n.sign() == num_bigint::Sign::Minus || d <= Zero::zero() {
            return None;
        }
        return Some(Rat::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        if int.is_empty() || frac.is_empty() {
            return None;
        }
        let digits: num_bigint::BigInt = format!("{}{}", int, frac).parse().ok()?;
        if digits.sign() == num_bigint::Sign::Minus {
            return None;
        }
        let den = num_bigint::BigInt::from(10u32).pow(frac.len() as u32);
        return Some(Rat::new(digits, den));
    }
    let n: num_bigint::BigInt = s.parse().ok()?;
    if n.sign() == num_bigint::Sign::Minus {
        return None;
    }
    Some(Rat::from_integer(n))
}

/// Shortest exact rendering: terminating decimals as decimals ("8.5"),
/// integers bare, everything else as a fraction.
pub fn fmt_rat(r: &Rat) -> String {
    if r.is_integer() {
        return r.numer().to_string();
    }
    let (den, pow2) = strip_factor(r.denom(), 2);
    let (den, pow5) = strip_factor(&den, 5);
    if !den.is_one() {
        return r.to_string();
    }
    let places = pow2.max(pow5);
    let scaled = r.numer() * num_bigint::BigInt::from(10u32).pow(places) / r.denom();
    let digits = scaled.to_string();
    let (int, frac) = if digits.len() > places as usize {
        digits.split_at(digits.len() - places as usize)
    } else {
        ("0", digits.as_str())
    };
    let frac = format!("{:0>width$}", frac, width = places as usize);
    format!("{}.{}", int, frac.trim_end_matches('0'))
}

fn strip_factor(n: &num_bigint::BigInt, f: u32) -> (num_bigint::BigInt, u32) {
    let f = num_bigint::BigInt::from(f);
    let mut n = n.clone();
    let mut k = 0;
    while (&n % &f).is_zero() {
        n /= &f;
        k += 1;
    }
    (n, k)
}

pub fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

/// Splits a line into whitespace-separated tokens with their 1-based column.
fn tokenize(line: &str) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start: Option<usize> = None;
    for (i, ch) in line.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push((s + 1, &line[s..i]));
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push((s + 1, &line[s..]));
    }
    out
}

fn strip_comment(line: &str) -> &str {
    match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    }
}

fn significant_lines(input: &str) -> impl Iterator<Item = (usize, Vec<(usize, &str)>)> {
    input.lines().enumerate().filter_map(|(i, raw)| {
        let toks = tokenize(strip_comment(raw.trim_end_matches('\r')));
        if toks.is_empty() {
            None
        } else {
            Some((i + 1, toks))
        }
    })
}

struct Names {
    list: Vec<String>,
    index: BTreeMap<String, usize>,
}

impl Names {
    fn new() -> Names {
        Names {
            list: Vec::new(),
            index: BTreeMap::new(),
        }
    }

    fn insert(&mut self, name: &str) -> bool {
        if self.index.contains_key(name) {
            return false;
        }
        self.index.insert(name.to_string(), self.list.len());
        self.list.push(name.to_string());
        true
    }

    fn get(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }
}

fn parse_guard_atoms(
    text: &str,
    line: usize,
    col: usize,
    clocks: &Names,
    params: &Names,
) -> Result<Vec<AtomicConstraint>, ParseError> {
    let mut out = Vec::new();
    for piece in text.split(',') {
        let piece = piece.trim();
        if piece.is_empty() {
            return Err(err(ParseCode::BadEdge, line, col, "empty guard atom"));
        }
        let (op_at, op) = ["<=", ">=", "<", ">", "="]
            .iter()
            .filter_map(|op| piece.find(op).map(|i| (i, *op)))
            .min_by_key(|(i, op)| (*i, std::cmp::Reverse(op.len())))
            .ok_or_else(|| {
                err(ParseCode::BadEdge, line, col, format!("no comparison in guard atom '{}'", piece))
            })?;
        let rel = match op {
            "<=" => Rel::Le,
            ">=" => Rel::Ge,
            "<" => Rel::Lt,
            ">" => Rel::Gt,
            "=" => Rel::Eq,
            _ => unreachable!(),
        };
        let lhs = piece[..op_at].trim();
        let rhs = piece[op_at + op.len()..].trim();
        let clock = clocks.get(lhs).ok_or_else(|| {
            err(ParseCode::UndeclaredIdent, line, col, format!("'{}' is not a declared clock", lhs))
        })?;
        let bound = if let Some(c) = parse_rat(rhs) {
            GuardBound::Const(c)
        } else if let Some(pid) = params.get(rhs) {
            GuardBound::Param(ParamId(pid))
        } else {
            return Err(err(
                ParseCode::UndeclaredIdent,
                line,
                col,
                format!("'{}' is neither a rational nor a declared parameter", rhs),
            ));
        };
        out.push(AtomicConstraint {
            clock: ClockId(clock),
            rel,
            bound,
        });
    }
    Ok(out)
}

fn parse_bound_token(tok: &str, line: usize, col: usize) -> Result<ParamBound, ParseError> {
    if tok == "unbounded" {
        return Ok(ParamBound::UNBOUNDED);
    }
    let bad = || err(ParseCode::BadBound, line, col, format!("cannot read interval '{}'", tok));
    let mut chars = tok.chars();
    let left_closed = match chars.next() {
        Some('[') => true,
        Some('(') => false,
        _ => return Err(bad()),
    };
    let right_closed = match tok.chars().last() {
        Some(']') => true,
        Some(')') => false,
        _ => return Err(bad()),
    };
    let inner = &tok[1..tok.len() - 1];
    let (lo, hi) = inner.split_once(',').ok_or_else(bad)?;
    let inf: u64 = lo.trim().parse().map_err(|_| bad())?;
    let sup = match hi.trim() {
        "inf" => None,
        s => Some(s.parse::<u64>().map_err(|_| bad())?),
    };
    Ok(ParamBound {
        inf,
        sup,
        left_closed,
        right_closed,
    })
}

/// Parses the protocol file format. Identifiers must be declared before any
/// line that uses them; the `protocol` header must come first.
pub fn parse_protocol(input: &str) -> Result<Protocol, ParseError> {
    let mut lines = significant_lines(input);

    let (hline, htoks) = lines
        .next()
        .ok_or_else(|| err(ParseCode::MissingHeader, 1, 1, "empty input, expected 'protocol NAME'"))?;
    if htoks[0].1 != "protocol" || htoks.len() != 2 || !is_ident(htoks[1].1) {
        return Err(err(
            ParseCode::MissingHeader,
            hline,
            htoks[0].0,
            "first line must be 'protocol NAME'",
        ));
    }
    let name = htoks[1].1.to_string();

    let mut locs = Names::new();
    let mut clocks = Names::new();
    let mut messages = Names::new();
    let mut params = Names::new();
    let mut init: Option<LocId> = None;
    let mut edges: Vec<Edge> = Vec::new();
    let mut bounds: BTreeMap<ParamId, ParamBound> = BTreeMap::new();
    let mut meta = SourceMap::default();

    for (line, toks) in lines {
        let (kcol, keyword) = toks[0];
        match keyword {
            "loc" | "clocks" | "messages" | "params" => {
                let (table, kind): (&mut Names, &str) = match keyword {
                    "loc" => (&mut locs, "location"),
                    "clocks" => (&mut clocks, "clock"),
                    "messages" => (&mut messages, "message"),
                    _ => (&mut params, "parameter"),
                };
                if toks.len() < 2 {
                    return Err(err(ParseCode::UnknownDirective, line, kcol, format!("'{}' needs at least one name", keyword)));
                }
                for &(col, tok) in &toks[1..] {
                    if !is_ident(tok) {
                        return Err(err(ParseCode::UnknownDirective, line, col, format!("'{}' is not an identifier", tok)));
                    }
                    if !table.insert(tok) {
                        return Err(err(ParseCode::DuplicateDecl, line, col, format!("{} '{}' declared twice", kind, tok)));
                    }
                }
            }
            "bound" => {
                if toks.len() != 4 || toks[2].1 != "in" {
                    return Err(err(ParseCode::BadBound, line, kcol, "expected 'bound PARAM in INTERVAL'"));
                }
                let pid = params.get(toks[1].1).ok_or_else(|| {
                    err(ParseCode::UndeclaredIdent, line, toks[1].0, format!("'{}' is not a declared parameter", toks[1].1))
                })?;
                let b = parse_bound_token(toks[3].1, line, toks[3].0)?;
                if bounds.insert(ParamId(pid), b).is_some() {
                    return Err(err(ParseCode::DuplicateDecl, line, toks[1].0, format!("bound for '{}' given twice", toks[1].1)));
                }
                meta.bounds.insert(ParamId(pid), SourceSpan { line, col: kcol });
            }
            "init" => {
                if toks.len() != 2 {
                    return Err(err(ParseCode::MissingInit, line, kcol, "expected 'init LOCATION'"));
                }
                let l = locs.get(toks[1].1).ok_or_else(|| {
                    err(ParseCode::UndeclaredIdent, line, toks[1].0, format!("'{}' is not a declared location", toks[1].1))
                })?;
                if init.replace(LocId(l)).is_some() {
                    return Err(err(ParseCode::DuplicateDecl, line, kcol, "init given twice"));
                }
            }
            "edge" => {
                let bad = |msg: String| err(ParseCode::BadEdge, line, kcol, msg);
                if toks.len() < 4 || toks[2].1 != "->" {
                    return Err(bad("expected 'edge SRC -> DST ...'".into()));
                }
                let source = locs.get(toks[1].1).ok_or_else(|| {
                    err(ParseCode::UndeclaredIdent, line, toks[1].0, format!("'{}' is not a declared location", toks[1].1))
                })?;
                let target = locs.get(toks[3].1).ok_or_else(|| {
                    err(ParseCode::UndeclaredIdent, line, toks[3].0, format!("'{}' is not a declared location", toks[3].1))
                })?;

                let rest = &toks[4..];
                let mut cursor = 0;
                let clause = |kw: &str, rest: &[(usize, &str)], cursor: &mut usize| -> Option<(usize, Vec<(usize, String)>)> {
                    if *cursor >= rest.len() || rest[*cursor].1 != kw {
                        return None;
                    }
                    let col = rest[*cursor].0;
                    *cursor += 1;
                    let mut body = Vec::new();
                    while *cursor < rest.len() && !["when", "do", "reset"].contains(&rest[*cursor].1) {
                        body.push((rest[*cursor].0, rest[*cursor].1.to_string()));
                        *cursor += 1;
                    }
                    Some((col, body))
                };

                let mut guard = Vec::new();
                if let Some((col, body)) = clause("when", rest, &mut cursor) {
                    if body.is_empty() {
                        return Err(bad("'when' needs at least one atom".into()));
                    }
                    let text = body.iter().map(|(_, t)| t.as_str()).collect::<Vec<_>>().join(" ");
                    guard = parse_guard_atoms(&text, line, col, &clocks, &params)?;
                }

                let mut action = Action::Internal;
                if let Some((col, body)) = clause("do", rest, &mut cursor) {
                    let words: Vec<&str> = body.iter().map(|(_, t)| t.as_str()).collect();
                    action = match words.as_slice() {
                        ["tau"] => Action::Internal,
                        ["send", m] => Action::Send(MsgId(messages.get(m).ok_or_else(|| {
                            err(ParseCode::UndeclaredIdent, line, col, format!("'{}' is not a declared message", m))
                        })?)),
                        ["recv", m] => Action::Receive(MsgId(messages.get(m).ok_or_else(|| {
                            err(ParseCode::UndeclaredIdent, line, col, format!("'{}' is not a declared message", m))
                        })?)),
                        _ => return Err(bad("expected 'do tau', 'do send MSG' or 'do recv MSG'".into())),
                    };
                }

                let mut resets: BTreeSet<ClockId> = BTreeSet::new();
                if let Some((_, body)) = clause("reset", rest, &mut cursor) {
                    if body.is_empty() {
                        return Err(bad("'reset' needs at least one clock".into()));
                    }
                    for (col, tok) in body {
                        let c = clocks.get(&tok).ok_or_else(|| {
                            err(ParseCode::UndeclaredIdent, line, col, format!("'{}' is not a declared clock", tok))
                        })?;
                        resets.insert(ClockId(c));
                    }
                }

                if cursor != rest.len() {
                    return Err(bad(format!("unexpected token '{}'", rest[cursor].1)));
                }

                edges.push(Edge {
                    source: LocId(source),
                    guard,
                    action,
                    resets,
                    target: LocId(target),
                });
                meta.edges.push(Some(SourceSpan { line, col: kcol }));
            }
            other => {
                return Err(err(ParseCode::UnknownDirective, line, kcol, format!("unknown directive '{}'", other)));
            }
        }
    }

    let init = init.ok_or_else(|| err(ParseCode::MissingInit, 1, 1, "no 'init' line"))?;
    Ok(Protocol {
        name,
        locations: locs.list,
        clocks: clocks.list,
        messages: messages.list,
        params: params.list,
        init,
        edges,
        bounds,
        meta,
    })
}

fn fmt_atom(p: &Protocol, a: &AtomicConstraint) -> String {
    let bound = match &a.bound {
        GuardBound::Const(c) => c.to_string(),
        GuardBound::Param(pid) => p.param_name(*pid).to_string(),
    };
    format!("{} {} {}", p.clock_name(a.clock), a.rel.as_str(), bound)
}

/// Canonical text form; `parse_protocol` inverts it.
pub fn serialize_protocol(p: &Protocol) -> String {
    let mut out = String::new();
    out.push_str(&format!("protocol {}\n\n", p.name));
    out.push_str(&format!("loc {}\n", p.locations.join(" ")));
    if !p.clocks.is_empty() {
        out.push_str(&format!("clocks {}\n", p.clocks.join(" ")));
    }
    if !p.messages.is_empty() {
        out.push_str(&format!("messages {}\n", p.messages.join(" ")));
    }
    if !p.params.is_empty() {
        out.push_str(&format!("params {}\n", p.params.join(" ")));
    }
    for (pid, b) in &p.bounds {
        out.push_str(&format!("bound {} in {}\n", p.param_name(*pid), b));
    }
    out.push_str(&format!("init {}\n\n", p.loc_name(p.init)));
    for e in &p.edges {
        out.push_str(&format!("edge {} -> {}", p.loc_name(e.source), p.loc_name(e.target)));
        if !e.guard.is_empty() {
            let atoms: Vec<String> = e.guard.iter().map(|a| fmt_atom(p, a)).collect();
            out.push_str(&format!(" when {}", atoms.join(", ")));
        }
        match e.action {
            Action::Internal => {}
            Action::Send(m) => out.push_str(&format!(" do send {}", p.msg_name(m))),
            Action::Receive(m) => out.push_str(&format!(" do recv {}", p.msg_name(m))),
        }
        if !e.resets.is_empty() {
            let names: Vec<&str> = e.resets.iter().map(|c| p.clock_name(*c)).collect();
            out.push_str(&format!(" reset {}", names.join(" ")));
        }
        out.push('\n');
    }
    out
}

/// A recorded run in file form. Process indices are 0-based in memory and
/// 1-based in the text; edge indices are 0-based in both.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceFile {
    pub protocol: String,
    pub mode: Mode,
    pub n: usize,
    pub pval: Vec<(String, Rat)>,
    pub steps: Vec<Label>,
}

impl TraceFile {
    pub fn from_execution(protocol: &str, pval: &[(String, Rat)], exec: &Execution) -> TraceFile {
        TraceFile {
            protocol: protocol.to_string(),
            mode: exec.mode,
            n: exec.states[0].len(),
            pval: pval.to_vec(),
            steps: exec.labels.clone(),
        }
    }
}

pub fn serialize_trace(t: &TraceFile) -> String {
    let mut out = String::new();
    out.push_str(&format!("protocol {}\n", t.protocol));
    out.push_str(&format!("mode {}\n", t.mode.as_str()));
    out.push_str(&format!("n {}\n", t.n));
    if !t.pval.is_empty() {
        let pairs: Vec<String> = t.pval.iter().map(|(k, v)| format!("{}={}", k, v)).collect();
        out.push_str(&format!("pval {}\n", pairs.join(" ")));
    }
    for s in &t.steps {
        out.push_str(&format!("step {} actor={} edge={}", s.delay, s.actor + 1, s.edge));
        if !s.receivers.is_empty() {
            let list: Vec<String> = s.receivers.iter().map(|j| (j + 1).to_string()).collect();
            out.push_str(&format!(" recv={}", list.join(",")));
        }
        if !s.choices.is_empty() {
            let list: Vec<String> = s.choices.iter().map(|(j, e)| format!("{}:{}", j + 1, e)).collect();
            out.push_str(&format!(" choose={}", list.join(",")));
        }
        out.push('\n');
    }
    out
}

pub fn parse_trace(input: &str) -> Result<TraceFile, ParseError> {
    let mut lines = significant_lines(input);
    let (hline, htoks) = lines
        .next()
        .ok_or_else(|| err(ParseCode::MissingHeader, 1, 1, "empty input, expected 'protocol NAME'"))?;
    if htoks[0].1 != "protocol" || htoks.len() != 2 {
        return Err(err(ParseCode::MissingHeader, hline, htoks[0].0, "first line must be 'protocol NAME'"));
    }
    let protocol = htoks[1].1.to_string();

    let mut mode: Option<Mode> = None;
    let mut n: Option<usize> = None;
    let mut pval: Vec<(String, Rat)> = Vec::new();
    let mut steps: Vec<Label> = Vec::new();

    for (line, toks) in lines {
        let (kcol, keyword) = toks[0];
        let bad = |col: usize, msg: String| err(ParseCode::BadTrace, line, col, msg);
        match keyword {
            "mode" => {
                let m = match toks.get(1).map(|t| t.1) {
                    Some("reconfigurable") => Mode::Reconfigurable,
                    Some("clique") => Mode::Clique,
                    _ => return Err(bad(kcol, "expected 'mode reconfigurable' or 'mode clique'".into())),
                };
                if mode.replace(m).is_some() {
                    return Err(err(ParseCode::DuplicateDecl, line, kcol, "mode given twice"));
                }
            }
            "n" => {
                let v = toks
                    .get(1)
                    .and_then(|t| t.1.parse::<usize>().ok())
                    .ok_or_else(|| bad(kcol, "expected 'n COUNT'".into()))?;
                if n.replace(v).is_some() {
                    return Err(err(ParseCode::DuplicateDecl, line, kcol, "n given twice"));
                }
            }
            "pval" => {
                for &(col, tok) in &toks[1..] {
                    let (name, val) = tok
                        .split_once('=')
                        .ok_or_else(|| bad(col, format!("expected NAME=VALUE, got '{}'", tok)))?;
                    let v = parse_rat(val)
                        .ok_or_else(|| err(ParseCode::BadRational, line, col, format!("bad rational '{}'", val)))?;
                    pval.push((name.to_string(), v));
                }
            }
            "step" => {
                if toks.len() < 2 {
                    return Err(bad(kcol, "expected 'step DELAY key=value ...'".into()));
                }
                let delay = parse_rat(toks[1].1).ok_or_else(|| {
                    err(ParseCode::BadRational, line, toks[1].0, format!("bad rational '{}'", toks[1].1))
                })?;
                let mut actor: Option<usize> = None;
                let mut edge: Option<usize> = None;
                let mut receivers: BTreeSet<usize> = BTreeSet::new();
                let mut choices: BTreeMap<usize, usize> = BTreeMap::new();
                for &(col, tok) in &toks[2..] {
                    let (key, val) = tok
                        .split_once('=')
                        .ok_or_else(|| bad(col, format!("expected key=value, got '{}'", tok)))?;
                    match key {
                        "actor" => {
                            let v: usize = val.parse().map_err(|_| bad(col, format!("bad actor '{}'", val)))?;
                            if v == 0 {
                                return Err(bad(col, "process indices are 1-based".into()));
                            }
                            actor = Some(v - 1);
                        }
                        "edge" => {
                            edge = Some(val.parse().map_err(|_| bad(col, format!("bad edge '{}'", val)))?);
                        }
                        "recv" => {
                            for part in val.split(',').filter(|s| !s.is_empty()) {
                                let v: usize = part.parse().map_err(|_| bad(col, format!("bad receiver '{}'", part)))?;
                                if v == 0 {
                                    return Err(bad(col, "process indices are 1-based".into()));
                                }
                                receivers.insert(v - 1);
                            }
                        }
                        "choose" => {
                            for part in val.split(',').filter(|s| !s.is_empty()) {
                                let (j, e) = part
                                    .split_once(':')
                                    .ok_or_else(|| bad(col, format!("expected RECEIVER:EDGE, got '{}'", part)))?;
                                let j: usize = j.parse().map_err(|_| bad(col, format!("bad receiver '{}'", j)))?;
                                let e: usize = e.parse().map_err(|_| bad(col, format!("bad edge '{}'", e)))?;
                                if j == 0 {
                                    return Err(bad(col, "process indices are 1-based".into()));
                                }
                                choices.insert(j - 1, e);
                            }
                        }
                        other => return Err(bad(col, format!("unknown step key '{}'", other))),
                    }
                }
                let actor = actor.ok_or_else(|| bad(kcol, "step without actor".into()))?;
                let edge = edge.ok_or_else(|| bad(kcol, "step without edge".into()))?;
                steps.push(Label {
                    delay,
                    actor,
                    edge,
                    receivers,
                    choices,
                });
            }
            other => {
                return Err(err(ParseCode::UnknownDirective, line, kcol, format!("unknown directive '{}'", other)));
            }
        }
    }

    let mode = mode.ok_or_else(|| err(ParseCode::BadTrace, 1, 1, "no 'mode' line"))?;
    let n = n.ok_or_else(|| err(ParseCode::BadTrace, 1, 1, "no 'n' line"))?;
    Ok(TraceFile {
        protocol,
        mode,
        n,
        pval,
        steps,
    })
}

/// Parses the counter machine listing format: `init` and `accept` lines plus
/// one labelled instruction per line. States are interned in order of first
/// mention.
pub fn parse_two_counter_machine(input: &str) -> Result<TwoCounterMachine, ParseError> {
    let mut states = Names::new();
    let mut init: Option<usize> = None;
    let mut accept: Option<usize> = None;
    let mut prog: BTreeMap<usize, Instr> = BTreeMap::new();

    let intern = |states: &mut Names, name: &str| -> usize {
        states.insert(name);
        states.get(name).expect("just inserted")
    };
    let counter = |tok: &str, line: usize, col: usize| -> Result<Counter, ParseError> {
        match tok {
            "c1" => Ok(Counter::C1),
            "c2" => Ok(Counter::C2),
            _ => Err(err(ParseCode::BadMachine, line, col, format!("counter must be c1 or c2, got '{}'", tok))),
        }
    };

    for (line, toks) in significant_lines(input) {
        let (kcol, keyword) = toks[0];
        match keyword {
            "init" => {
                if toks.len() != 2 || !is_ident(toks[1].1) {
                    return Err(err(ParseCode::BadMachine, line, kcol, "expected 'init STATE'"));
                }
                if init.replace(intern(&mut states, toks[1].1)).is_some() {
                    return Err(err(ParseCode::DuplicateDecl, line, kcol, "init given twice"));
                }
            }
            "accept" => {
                if toks.len() != 2 || !is_ident(toks[1].1) {
                    return Err(err(ParseCode::BadMachine, line, kcol, "expected 'accept STATE'"));
                }
                if accept.replace(intern(&mut states, toks[1].1)).is_some() {
                    return Err(err(ParseCode::DuplicateDecl, line, kcol, "accept given twice"));
                }
            }
            label if label.ends_with(':') => {
                let state_name = &label[..label.len() - 1];
                if !is_ident(state_name) {
                    return Err(err(ParseCode::BadMachine, line, kcol, format!("bad state label '{}'", label)));
                }
                let state = intern(&mut states, state_name);
                let words: Vec<(usize, &str)> = toks[1..].to_vec();
                let instr = match words.as_slice() {
                    [(_, "inc"), (ccol, c), (_, "goto"), (_, t)] if is_ident(t) => {
                        Instr::Inc(counter(c, line, *ccol)?, intern(&mut states, t))
                    }
                    [(_, "dec"), (ccol, c), (_, "goto"), (_, t)] if is_ident(t) => {
                        Instr::Dec(counter(c, line, *ccol)?, intern(&mut states, t))
                    }
                    [(_, "ifz"), (ccol, c), (_, "goto"), (_, t1), (_, "else"), (_, t2)]
                        if is_ident(t1) && is_ident(t2) =>
                    {
                        let c = counter(c, line, *ccol)?;
                        let z = intern(&mut states, t1);
                        let nz = intern(&mut states, t2);
                        Instr::Ifz(c, z, nz)
                    }
                    _ => {
                        return Err(err(
                            ParseCode::BadMachine,
                            line,
                            kcol,
                            "expected 'inc C goto S', 'dec C goto S' or 'ifz C goto S else S'",
                        ))
                    }
                };
                if prog.insert(state, instr).is_some() {
                    return Err(err(ParseCode::DuplicateDecl, line, kcol, format!("state '{}' has two instructions", state_name)));
                }
            }
            other => {
                return Err(err(ParseCode::UnknownDirective, line, kcol, format!("unknown directive '{}'", other)));
            }
        }
    }

    let init = init.ok_or_else(|| err(ParseCode::BadMachine, 1, 1, "no 'init' line"))?;
    let accept = accept.ok_or_else(|| err(ParseCode::BadMachine, 1, 1, "no 'accept' line"))?;
    Ok(TwoCounterMachine {
        states: states.list,
        init,
        accept,
        prog,
    })
}

/// Listing for a counter machine, parseable by [`parse_two_counter_machine`].
/// States are listed in index order, so a parsed machine round-trips to an
/// equal one.
pub fn serialize_two_counter_machine(m: &TwoCounterMachine) -> String {
    let mut out = String::new();
    out.push_str(&format!("init {}\n", m.state_name(m.init)));
    out.push_str(&format!("accept {}\n", m.state_name(m.accept)));
    for (&s, instr) in &m.prog {
        let line = match *instr {
            Instr::Inc(c, t) => format!("{}: inc {} goto {}", m.state_name(s), c.as_str(), m.state_name(t)),
            Instr::Dec(c, t) => format!("{}: dec {} goto {}", m.state_name(s), c.as_str(), m.state_name(t)),
            Instr::Ifz(c, z, nz) => format!(
                "{}: ifz {} goto {} else {}",
                m.state_name(s),
                c.as_str(),
                m.state_name(z),
                m.state_name(nz)
            ),
        };
        out.push_str(&line);
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rat, validate, DiagCode};

    const FACTORY: &str = "\
# one process turns factory, the others assemble what it produces
protocol factory

loc q0 c f s1 s2 s3 g
clocks x
messages f p
params pt tl
init q0

edge q0 -> c do recv f
edge q0 -> f do send f reset x
edge c -> s1 do recv p
edge s1 -> s2 do recv p
edge s2 -> s3 do recv p
edge s3 -> g when x < tl
edge f -> f when x >= pt do send p reset x
";

    #[test]
    fn factory_parses_and_round_trips() {
        let p = parse_protocol(FACTORY).unwrap();
        assert_eq!(p.name, "factory");
        assert_eq!(p.locations.len(), 7);
        assert_eq!(p.clocks, vec!["x"]);
        assert_eq!(p.edges.len(), 7);
        assert!(validate(&p).is_empty());
        let text = serialize_protocol(&p);
        let again = parse_protocol(&text).unwrap();
        assert_eq!(p, again);
        assert_eq!(serialize_protocol(&again), text);
    }

    #[test]
    fn message_and_location_may_share_a_name() {
        let p = parse_protocol(FACTORY).unwrap();
        assert!(p.loc_id("f").is_some());
        assert!(p.messages.contains(&"f".to_string()));
        assert!(validate(&p).is_empty());
    }

    #[test]
    fn undeclared_clock_in_guard_is_rejected() {
        let text = "protocol t\nloc a\ninit a\nedge a -> a when y > 1\n";
        let e = parse_protocol(text).unwrap_err();
        assert_eq!(e.code, ParseCode::UndeclaredIdent);
        assert_eq!(e.span.line, 4);
    }

    #[test]
    fn empty_interval_is_a_validate_diagnostic_with_span() {
        let text = "protocol t\nloc a\nparams p\nbound p in (2,2]\ninit a\n";
        let p = parse_protocol(text).unwrap();
        let ds = validate(&p);
        assert_eq!(ds.len(), 1);
        assert_eq!(ds[0].code, DiagCode::EmptyBoundInterval);
        assert_eq!(ds[0].span.as_ref().unwrap().line, 4);
    }

    #[test]
    fn rationals_decimal_and_fraction_agree() {
        assert_eq!(parse_rat("1.5"), Some(rat(3, 2)));
        assert_eq!(parse_rat("3/2"), Some(rat(3, 2)));
        assert_eq!(parse_rat("2"), Some(rat(2, 1)));
        assert_eq!(parse_rat("-1"), None);
        assert_eq!(parse_rat("1/0"), None);
        assert_eq!(parse_rat("x"), None);
    }

    #[test]
    fn trace_round_trips() {
        let text = "\
protocol factory
mode reconfigurable
n 5
pval pt=3 tl=19/2
step 1/10 actor=1 edge=1
step 41/10 actor=2 edge=2 recv=3,5 choose=3:3,5:3
step 0 actor=5 edge=6
";
        let t = parse_trace(text).unwrap();
        assert_eq!(t.n, 5);
        assert_eq!(t.steps.len(), 3);
        assert_eq!(t.steps[0].actor, 0);
        assert_eq!(t.steps[1].receivers, [2, 4].into_iter().collect());
        assert_eq!(t.steps[1].choices, [(2, 3), (4, 3)].into_iter().collect());
        assert_eq!(serialize_trace(&t), text);
    }

    #[test]
    fn machine_listing_parses() {
        let text = "\
init k0
accept kacc
k0: inc c1 goto k1
k1: ifz c2 goto kacc else k0
";
        let m = parse_two_counter_machine(text).unwrap();
        assert_eq!(m.states, vec!["k0", "kacc", "k1"]);
        assert_eq!(m.init, 0);
        assert_eq!(m.accept, 1);
        assert_eq!(m.prog.len(), 2);
    }

    #[test]
    fn duplicate_instruction_label_is_rejected() {
        let text = "init a\naccept b\na: inc c1 goto b\na: dec c1 goto b\n";
        let e = parse_two_counter_machine(text).unwrap_err();
        assert_eq!(e.code, ParseCode::DuplicateDecl);
    }
}
