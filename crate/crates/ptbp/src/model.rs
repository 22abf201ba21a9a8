//! Protocol syntax: locations, clocks, messages, parameters, guarded edges.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use num_traits::{Signed, Zero};
use thiserror::Error;

use crate::textio::SourceSpan;

/// Exact rational, used for every clock value, guard constant and parameter value.
pub type Rat = num_rational::BigRational;

/// Builds a rational from a numerator/denominator pair.
pub fn rat(num: i64, den: i64) -> Rat {
    Rat::new(num.into(), den.into())
}

pub fn rat_int(n: u64) -> Rat {
    Rat::from_integer(n.into())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct LocId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ClockId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct MsgId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ParamId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Rel {
    Lt,
    Le,
    Eq,
    Ge,
    Gt,
}

impl Rel {
    pub fn as_str(self) -> &'static str {
        match self {
            Rel::Lt => "<",
            Rel::Le => "<=",
            Rel::Eq => "=",
            Rel::Ge => ">=",
            Rel::Gt => ">",
        }
    }

    pub fn holds(self, lhs: &Rat, rhs: &Rat) -> bool {
        match self {
            Rel::Lt => lhs < rhs,
            Rel::Le => lhs <= rhs,
            Rel::Eq => lhs == rhs,
            Rel::Ge => lhs >= rhs,
            Rel::Gt => lhs > rhs,
        }
    }
}

/// Right-hand side of a guard atom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum GuardBound {
    Const(Rat),
    Param(ParamId),
}

/// One guard atom `clock rel bound`. A guard is a set of atoms, read as a conjunction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AtomicConstraint {
    pub clock: ClockId,
    pub rel: Rel,
    pub bound: GuardBound,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Action {
    Internal,
    Send(MsgId),
    Receive(MsgId),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Edge {
    pub source: LocId,
    pub guard: Vec<AtomicConstraint>,
    pub action: Action,
    pub resets: BTreeSet<ClockId>,
    pub target: LocId,
}

/// Interval of admissible values for one parameter. Endpoints are naturals;
/// `sup = None` means unbounded above (and forces an open right end).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParamBound {
    pub inf: u64,
    pub sup: Option<u64>,
    pub left_closed: bool,
    pub right_closed: bool,
}

impl ParamBound {
    pub const UNBOUNDED: ParamBound = ParamBound {
        inf: 0,
        sup: None,
        left_closed: true,
        right_closed: false,
    };

    pub fn closed(inf: u64, sup: u64) -> ParamBound {
        ParamBound {
            inf,
            sup: Some(sup),
            left_closed: true,
            right_closed: true,
        }
    }

    pub fn new(
        inf: u64,
        sup: Option<u64>,
        left_closed: bool,
        right_closed: bool,
    ) -> Result<ParamBound, ModelError> {
        let b = ParamBound {
            inf,
            sup,
            left_closed,
            right_closed,
        };
        match b.check() {
            None => Ok(b),
            Some(code) => Err(ModelError::BadBound { code }),
        }
    }

    /// None if well formed, otherwise the diagnostic code describing the flaw.
    pub fn check(&self) -> Option<DiagCode> {
        match self.sup {
            None if self.right_closed => Some(DiagCode::MalformedBound),
            None => None,
            Some(sup) if self.inf > sup => Some(DiagCode::EmptyBoundInterval),
            Some(sup) if self.inf == sup && !(self.left_closed && self.right_closed) => {
                Some(DiagCode::EmptyBoundInterval)
            }
            Some(_) => None,
        }
    }

    pub fn contains(&self, v: &Rat) -> bool {
        let lo = rat_int(self.inf);
        let above = if self.left_closed { *v >= lo } else { *v > lo };
        let below = match self.sup {
            None => true,
            Some(sup) => {
                let hi = rat_int(sup);
                if self.right_closed {
                    *v <= hi
                } else {
                    *v < hi
                }
            }
        };
        above && below
    }

    pub fn is_closed_finite(&self) -> bool {
        self.sup.is_some() && self.left_closed && self.right_closed
    }

    pub fn is_finite(&self) -> bool {
        self.sup.is_some()
    }
}

impl fmt::Display for ParamBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if *self == ParamBound::UNBOUNDED {
            return write!(f, "unbounded");
        }
        let l = if self.left_closed { '[' } else { '(' };
        let r = if self.right_closed { ']' } else { ')' };
        match self.sup {
            Some(sup) => write!(f, "{}{},{}{}", l, self.inf, sup, r),
            None => write!(f, "{}{},inf)", l, self.inf),
        }
    }
}

/// A broadcast protocol. Identifier namespaces are index-based; the name
/// tables give the surface spelling for parsing and printing.
#[derive(Debug, Clone)]
pub struct Protocol {
    pub name: String,
    pub locations: Vec<String>,
    pub clocks: Vec<String>,
    pub messages: Vec<String>,
    pub params: Vec<String>,
    pub init: LocId,
    pub edges: Vec<Edge>,
    pub bounds: BTreeMap<ParamId, ParamBound>,
    /// Source positions when the protocol was parsed from text. Ignored by equality.
    pub meta: SourceMap,
}

/// Side table of source spans for diagnostics.
#[derive(Debug, Clone, Default)]
pub struct SourceMap {
    pub edges: Vec<Option<SourceSpan>>,
    pub bounds: BTreeMap<ParamId, SourceSpan>,
}

impl PartialEq for Protocol {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.locations == other.locations
            && self.clocks == other.clocks
            && self.messages == other.messages
            && self.params == other.params
            && self.init == other.init
            && self.edges == other.edges
            && self.bounds == other.bounds
    }
}

impl Eq for Protocol {}

impl Protocol {
    pub fn loc_name(&self, l: LocId) -> &str {
        &self.locations[l.0]
    }

    pub fn clock_name(&self, c: ClockId) -> &str {
        &self.clocks[c.0]
    }

    pub fn msg_name(&self, m: MsgId) -> &str {
        &self.messages[m.0]
    }

    pub fn param_name(&self, p: ParamId) -> &str {
        &self.params[p.0]
    }

    pub fn loc_id(&self, name: &str) -> Option<LocId> {
        self.locations.iter().position(|n| n == name).map(LocId)
    }

    pub fn param_id(&self, name: &str) -> Option<ParamId> {
        self.params.iter().position(|n| n == name).map(ParamId)
    }

    /// Declared bound of a parameter, defaulting to `[0, inf)`.
    pub fn bound_or_default(&self, p: ParamId) -> ParamBound {
        self.bounds.get(&p).cloned().unwrap_or(ParamBound::UNBOUNDED)
    }
}

/// Mapping from every declared parameter to a nonnegative rational.
pub type Valuation = BTreeMap<ParamId, Rat>;

/// Builds a valuation from `(name, value)` pairs; unknown names are rejected.
pub fn valuation_of(p: &Protocol, pairs: &[(&str, Rat)]) -> Result<Valuation, ModelError> {
    let mut v = Valuation::new();
    for (name, value) in pairs {
        let id = p
            .param_id(name)
            .ok_or_else(|| ModelError::UnknownParam { name: name.to_string() })?;
        v.insert(id, value.clone());
    }
    Ok(v)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagCode {
    UndeclaredLocation,
    UndeclaredClock,
    UndeclaredMessage,
    UndeclaredParam,
    DuplicateDecl,
    ClockParamClash,
    NegativeConstant,
    EmptyBoundInterval,
    MalformedBound,
}

impl DiagCode {
    pub fn as_str(self) -> &'static str {
        match self {
            DiagCode::UndeclaredLocation => "UNDECLARED_LOCATION",
            DiagCode::UndeclaredClock => "UNDECLARED_CLOCK",
            DiagCode::UndeclaredMessage => "UNDECLARED_MESSAGE",
            DiagCode::UndeclaredParam => "UNDECLARED_PARAM",
            DiagCode::DuplicateDecl => "DUPLICATE_DECL",
            DiagCode::ClockParamClash => "CLOCK_PARAM_CLASH",
            DiagCode::NegativeConstant => "NEGATIVE_CONSTANT",
            DiagCode::EmptyBoundInterval => "EMPTY_BOUND_INTERVAL",
            DiagCode::MalformedBound => "MALFORMED_BOUND",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub code: DiagCode,
    pub span: Option<SourceSpan>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.span {
            Some(s) => write!(f, "{}: {} [{}]", s, self.message, self.code.as_str()),
            None => write!(f, "{} [{}]", self.message, self.code.as_str()),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ModelError {
    #[error("no value for parameter '{name}'")]
    MissingParam { name: String },
    #[error("unknown parameter '{name}'")]
    UnknownParam { name: String },
    #[error("negative value for parameter '{name}'")]
    NegativeParamValue { name: String },
    #[error("protocol is not in the L/U fragment")]
    NotLu,
    #[error("parameter '{name}' does not have a closed finite bound")]
    NotClosedBounded { name: String },
    #[error("parameter '{name}' has no finite upper bound")]
    UnboundedParam { name: String },
    #[error("malformed parameter bound ({})", code.as_str())]
    BadBound { code: DiagCode },
}

/// Structural well-formedness check. Returns every violation found.
pub fn validate(p: &Protocol) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut diag = |code: DiagCode, span: Option<SourceSpan>, message: String| {
        out.push(Diagnostic { code, span, message });
    };

    for (kind, names) in [
        ("location", &p.locations),
        ("clock", &p.clocks),
        ("message", &p.messages),
        ("parameter", &p.params),
    ] {
        let mut seen = BTreeSet::new();
        for name in names {
            if !seen.insert(name) {
                diag(
                    DiagCode::DuplicateDecl,
                    None,
                    format!("{} '{}' declared twice", kind, name),
                );
            }
        }
    }
    for clock in &p.clocks {
        if p.params.contains(clock) {
            diag(
                DiagCode::ClockParamClash,
                None,
                format!("'{}' is declared both as a clock and as a parameter", clock),
            );
        }
    }

    if p.init.0 >= p.locations.len() {
        diag(
            DiagCode::UndeclaredLocation,
            None,
            format!("initial location #{} is not declared", p.init.0),
        );
    }

    for (i, e) in p.edges.iter().enumerate() {
        let span = p.meta.edges.get(i).cloned().flatten();
        for (what, l) in [("source", e.source), ("target", e.target)] {
            if l.0 >= p.locations.len() {
                diag(
                    DiagCode::UndeclaredLocation,
                    span.clone(),
                    format!("edge #{} {} location #{} is not declared", i, what, l.0),
                );
            }
        }
        for a in &e.guard {
            if a.clock.0 >= p.clocks.len() {
                diag(
                    DiagCode::UndeclaredClock,
                    span.clone(),
                    format!("edge #{} guard uses undeclared clock #{}", i, a.clock.0),
                );
            }
            match &a.bound {
                GuardBound::Param(pid) if pid.0 >= p.params.len() => {
                    diag(
                        DiagCode::UndeclaredParam,
                        span.clone(),
                        format!("edge #{} guard uses undeclared parameter #{}", i, pid.0),
                    );
                }
                GuardBound::Const(c) if c.is_negative() => {
                    diag(
                        DiagCode::NegativeConstant,
                        span.clone(),
                        format!("edge #{} guard compares against negative constant {}", i, c),
                    );
                }
                _ => {}
            }
        }
        for c in &e.resets {
            if c.0 >= p.clocks.len() {
                diag(
                    DiagCode::UndeclaredClock,
                    span.clone(),
                    format!("edge #{} resets undeclared clock #{}", i, c.0),
                );
            }
        }
        if let Action::Send(m) | Action::Receive(m) = e.action {
            if m.0 >= p.messages.len() {
                diag(
                    DiagCode::UndeclaredMessage,
                    span.clone(),
                    format!("edge #{} uses undeclared message #{}", i, m.0),
                );
            }
        }
    }

    for (pid, b) in &p.bounds {
        let span = p.meta.bounds.get(pid).cloned();
        if pid.0 >= p.params.len() {
            diag(
                DiagCode::UndeclaredParam,
                span.clone(),
                format!("bound given for undeclared parameter #{}", pid.0),
            );
            continue;
        }
        if let Some(code) = b.check() {
            diag(
                code,
                span,
                format!("bound {} of parameter '{}' is not a valid interval", b, p.param_name(*pid)),
            );
        }
    }

    out
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ParamRole {
    LowerOnly,
    UpperOnly,
    Mixed,
    Unused,
}

impl ParamRole {
    pub fn as_str(self) -> &'static str {
        match self {
            ParamRole::LowerOnly => "lower-only",
            ParamRole::UpperOnly => "upper-only",
            ParamRole::Mixed => "mixed",
            ParamRole::Unused => "unused",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FragmentClass {
    ParameterFree,
    L,
    U,
    Lu,
    General,
}

impl FragmentClass {
    pub fn as_str(self) -> &'static str {
        match self {
            FragmentClass::ParameterFree => "parameter-free",
            FragmentClass::L => "L",
            FragmentClass::U => "U",
            FragmentClass::Lu => "L/U",
            FragmentClass::General => "general",
        }
    }

    pub fn is_one_sided_or_lu(self) -> bool {
        matches!(self, FragmentClass::L | FragmentClass::U | FragmentClass::Lu)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundedness {
    Unbounded,
    OpenBounded,
    ClosedBounded,
}

impl Boundedness {
    pub fn as_str(self) -> &'static str {
        match self {
            Boundedness::Unbounded => "unbounded",
            Boundedness::OpenBounded => "open-bounded",
            Boundedness::ClosedBounded => "closed-bounded",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FragmentInfo {
    pub clock_count: usize,
    pub roles: Vec<ParamRole>,
    pub class: FragmentClass,
    /// Aggregated over the parameters that actually occur in guards.
    pub boundedness: Boundedness,
}

/// Determines how each parameter is used and which syntactic fragment the
/// protocol falls into. Parameters that occur only in `<`/`<=` atoms are
/// upper bounds, only in `>`/`>=` atoms lower bounds; an `=` comparison or a
/// use on both sides makes the parameter mixed. Unused parameters do not
/// block the L/U classification.
pub fn classify(p: &Protocol) -> FragmentInfo {
    let mut upper = vec![false; p.params.len()];
    let mut lower = vec![false; p.params.len()];
    let mut mixed = vec![false; p.params.len()];
    for e in &p.edges {
        for a in &e.guard {
            if let GuardBound::Param(pid) = a.bound {
                match a.rel {
                    Rel::Lt | Rel::Le => upper[pid.0] = true,
                    Rel::Gt | Rel::Ge => lower[pid.0] = true,
                    Rel::Eq => mixed[pid.0] = true,
                }
            }
        }
    }
    let roles: Vec<ParamRole> = (0..p.params.len())
        .map(|i| match (upper[i], lower[i], mixed[i]) {
            (_, _, true) | (true, true, _) => ParamRole::Mixed,
            (true, false, false) => ParamRole::UpperOnly,
            (false, true, false) => ParamRole::LowerOnly,
            (false, false, false) => ParamRole::Unused,
        })
        .collect();

    let used: Vec<usize> = (0..p.params.len())
        .filter(|&i| roles[i] != ParamRole::Unused)
        .collect();
    let class = if used.is_empty() {
        FragmentClass::ParameterFree
    } else if used.iter().any(|&i| roles[i] == ParamRole::Mixed) {
        FragmentClass::General
    } else {
        let has_upper = used.iter().any(|&i| roles[i] == ParamRole::UpperOnly);
        let has_lower = used.iter().any(|&i| roles[i] == ParamRole::LowerOnly);
        match (has_lower, has_upper) {
            (true, true) => FragmentClass::Lu,
            (true, false) => FragmentClass::L,
            (false, true) => FragmentClass::U,
            (false, false) => unreachable!("used parameter without a role"),
        }
    };

    let boundedness = if used.is_empty() {
        Boundedness::ClosedBounded
    } else {
        let bounds: Vec<ParamBound> = used.iter().map(|&i| p.bound_or_default(ParamId(i))).collect();
        if bounds.iter().any(|b| !b.is_finite()) {
            Boundedness::Unbounded
        } else if bounds.iter().all(|b| b.is_closed_finite()) {
            Boundedness::ClosedBounded
        } else {
            Boundedness::OpenBounded
        }
    };

    FragmentInfo {
        clock_count: p.clocks.len(),
        roles,
        class,
        boundedness,
    }
}

/// Replaces every parameter occurrence in guards by its value. Purely
/// syntactic: declarations and bounds are kept as they are.
pub fn substitute(p: &Protocol, pval: &Valuation) -> Result<Protocol, ModelError> {
    for (i, name) in p.params.iter().enumerate() {
        match pval.get(&ParamId(i)) {
            None => return Err(ModelError::MissingParam { name: name.clone() }),
            Some(v) if v.is_negative() => {
                return Err(ModelError::NegativeParamValue { name: name.clone() })
            }
            Some(_) => {}
        }
    }
    let mut out = p.clone();
    for e in &mut out.edges {
        for a in &mut e.guard {
            if let GuardBound::Param(pid) = a.bound {
                a.bound = GuardBound::Const(pval[&pid].clone());
            }
        }
    }
    Ok(out)
}

/// The least permissive valuation of an L/U protocol with closed finite
/// bounds: upper-bound parameters at their interval infimum, lower-bound
/// parameters at their supremum. Unused parameters sit at their infimum.
pub fn least_permissive_valuation(p: &Protocol) -> Result<Valuation, ModelError> {
    let info = classify(p);
    if info.class == FragmentClass::General {
        return Err(ModelError::NotLu);
    }
    let mut v = Valuation::new();
    for i in 0..p.params.len() {
        let b = p.bound_or_default(ParamId(i));
        let not_closed = || ModelError::NotClosedBounded {
            name: p.params[i].clone(),
        };
        let value = match info.roles[i] {
            ParamRole::Unused => rat_int(b.inf),
            ParamRole::UpperOnly => {
                if !b.is_closed_finite() {
                    return Err(not_closed());
                }
                rat_int(b.inf)
            }
            ParamRole::LowerOnly => {
                if !b.is_closed_finite() {
                    return Err(not_closed());
                }
                rat_int(b.sup.expect("closed finite bound has a supremum"))
            }
            ParamRole::Mixed => unreachable!("mixed parameter in L/U protocol"),
        };
        v.insert(ParamId(i), value);
    }
    Ok(v)
}

/// Parameter-free protocol whose executions are exactly the executions under
/// the least permissive valuation. Requires the L/U fragment with closed
/// finite bounds.
pub fn build_n_min(p: &Protocol) -> Result<Protocol, ModelError> {
    let v = least_permissive_valuation(p)?;
    substitute(p, &v)
}

/// Parameter-free protocol reaching a location iff some valuation within the
/// bounds does. Closed interval ends substitute the endpoint; open ends turn
/// the comparison into a strict one against the endpoint. Requires the L/U
/// fragment with finite bounds.
pub fn build_n_max(p: &Protocol) -> Result<Protocol, ModelError> {
    let info = classify(p);
    if info.class == FragmentClass::General {
        return Err(ModelError::NotLu);
    }
    for (i, role) in info.roles.iter().enumerate() {
        if *role != ParamRole::Unused && !p.bound_or_default(ParamId(i)).is_finite() {
            return Err(ModelError::UnboundedParam {
                name: p.params[i].clone(),
            });
        }
    }
    let mut out = p.clone();
    for e in &mut out.edges {
        for a in &mut e.guard {
            let GuardBound::Param(pid) = a.bound else {
                continue;
            };
            let b = p.bound_or_default(pid);
            match info.roles[pid.0] {
                ParamRole::UpperOnly => {
                    let sup = b.sup.expect("finite bound checked above");
                    if b.right_closed {
                        a.bound = GuardBound::Const(rat_int(sup));
                    } else {
                        a.rel = Rel::Lt;
                        a.bound = GuardBound::Const(rat_int(sup));
                    }
                }
                ParamRole::LowerOnly => {
                    if b.left_closed {
                        a.bound = GuardBound::Const(rat_int(b.inf));
                    } else {
                        a.rel = Rel::Gt;
                        a.bound = GuardBound::Const(rat_int(b.inf));
                    }
                }
                ParamRole::Mixed | ParamRole::Unused => {
                    unreachable!("parameter in guard must be one sided here")
                }
            }
        }
    }
    Ok(out)
}

/// Largest guard constant together with the denominator scale that turns all
/// guard constants into integers. Parameters are ignored.
pub fn max_constant(p: &Protocol) -> (u64, u64) {
    use num_integer::Integer;
    let mut scale: num_bigint::BigInt = 1.into();
    for e in &p.edges {
        for a in &e.guard {
            if let GuardBound::Const(c) = &a.bound {
                scale = scale.lcm(c.denom());
            }
        }
    }
    let mut k: num_bigint::BigInt = 0.into();
    for e in &p.edges {
        for a in &e.guard {
            if let GuardBound::Const(c) = &a.bound {
                let scaled = c.numer() * &scale / c.denom();
                if scaled > k {
                    k = scaled;
                }
            }
        }
    }
    let to_u64 = |v: num_bigint::BigInt| -> u64 {
        use num_traits::ToPrimitive;
        v.to_u64().expect("guard constants fit in u64 at this scale")
    };
    if k.is_zero() {
        (0, to_u64(scale))
    } else {
        (to_u64(k), to_u64(scale))
    }
}
