//! Verdict-producing layer: routes a reachability question to a decision
//! procedure, a semi-decision, or a refusal naming the result that closes
//! the cell.
//!
//! Exact procedures exist for reconfigurable reachability of parameter-free
//! protocols with at most one clock, for bounded L/U protocols through
//! their most or least permissive parameter-free forms, and for all-runs
//! reachability at a point valuation. Clique reachability is explored size
//! by size and can only answer yes.

use std::borrow::Cow;
use std::collections::{BTreeMap, BTreeSet, VecDeque};

use num_traits::Zero;
use thiserror::Error;

use crate::model::{
    classify, rat_int, substitute, Action, Boundedness, FragmentClass, FragmentInfo, GuardBound,
    LocId, ModelError, ParamId, ParamRole, Protocol, Rat, Valuation,
};
use crate::model::{build_n_max, build_n_min, least_permissive_valuation};
use crate::regions::{self, OneClock, RegionError, SearchStats};
use crate::semantics::{replay, Execution, Label, Mode};

/// Stable tags for the results that close a routing cell.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Citation {
    Thm1,
    Thm2,
    Thm3,
    Thm4,
    Thm5,
    Lem1,
    Lem2,
    Lem3,
    Lem4,
    Lem5,
    Lem6,
    Lem7,
    OutOfScope,
    OpenProblem,
}

impl Citation {
    pub fn as_str(self) -> &'static str {
        match self {
            Citation::Thm1 => "THM1",
            Citation::Thm2 => "THM2",
            Citation::Thm3 => "THM3",
            Citation::Thm4 => "THM4",
            Citation::Thm5 => "THM5",
            Citation::Lem1 => "LEM1",
            Citation::Lem2 => "LEM2",
            Citation::Lem3 => "LEM3",
            Citation::Lem4 => "LEM4",
            Citation::Lem5 => "LEM5",
            Citation::Lem6 => "LEM6",
            Citation::Lem7 => "LEM7",
            Citation::OutOfScope => "OUT_OF_SCOPE",
            Citation::OpenProblem => "OPEN_PROBLEM",
        }
    }

    /// One-line reason shown next to the tag.
    pub fn describe(self) -> &'static str {
        match self {
            Citation::Thm1 => "all-runs reachability is settled at size one but undecidable from three clocks up",
            Citation::Thm2 => "parameter-free reachability is decidable in reconfigurable networks",
            Citation::Thm3 => "reachability with general parametric guards is undecidable",
            Citation::Thm4 => "all-runs reachability is undecidable in clique networks",
            Citation::Thm5 => "universal reachability is undecidable for open bounded L/U protocols in clique networks",
            Citation::Lem1 => "reachability with two clocks or more is undecidable",
            Citation::Lem2 => "clique reachability with general parametric guards is undecidable",
            Citation::Lem3 => "universal clique reachability with general parametric guards is undecidable",
            Citation::Lem4 => "runs under a less permissive valuation are prefixes of runs under a more permissive one",
            Citation::Lem5 => "universal reachability is decidable for closed bounded L/U protocols",
            Citation::Lem6 => "reachability is decidable for bounded L/U protocols",
            Citation::Lem7 => "universal clique reachability is undecidable for one-sided protocols with an open left bound or an infinite right bound",
            Citation::OutOfScope => "not implemented here",
            Citation::OpenProblem => "decidability status unknown",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    EfExistence,
    EfUniversality,
    AfExistence,
    AfUniversality,
}

impl ProblemKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ProblemKind::EfExistence => "ef-existence",
            ProblemKind::EfUniversality => "ef-universality",
            ProblemKind::AfExistence => "af-existence",
            ProblemKind::AfUniversality => "af-universality",
        }
    }

    pub fn is_af(self) -> bool {
        matches!(self, ProblemKind::AfExistence | ProblemKind::AfUniversality)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SearchLimits {
    /// Largest network size tried by semi-decisions.
    pub n_max: usize,
    /// Step budget for simulation-backed tooling; exact procedures ignore it.
    pub step_max: usize,
}

impl Default for SearchLimits {
    fn default() -> SearchLimits {
        SearchLimits {
            n_max: 6,
            step_max: 10_000,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ProblemSpec {
    pub protocol: Protocol,
    pub goal: LocId,
    pub mode: Mode,
    pub kind: ProblemKind,
    pub limits: SearchLimits,
    /// When present, the question is asked at this single valuation.
    pub pval: Option<Valuation>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Status {
    Decided { answer: bool },
    /// Positive half of a semi-decision; a witness accompanies it.
    SemiDecided,
    /// The size budget ran out without an answer.
    Inconclusive { explored_up_to: usize },
    Unsupported { citation: Citation },
}

/// A concrete yes-certificate: network size, parameter values, and a trace
/// that replays under them and visits the goal.
#[derive(Debug, Clone)]
pub struct Witness {
    pub n: usize,
    pub pval: Valuation,
    pub trace: Execution,
}

#[derive(Debug, Clone)]
pub enum AfCounterexample {
    /// Replayable prefix whose last configuration enables no action at any
    /// delay; the run is maximal and never saw the goal.
    Stuck { trace: Execution },
    /// Replayable stem reaching a region cycle that avoids the goal;
    /// `cycle_edges` lists the protocol edges fired around the cycle.
    Lasso {
        stem: Execution,
        cycle_edges: Vec<usize>,
    },
}

#[derive(Debug, Clone)]
pub struct Verdict {
    pub status: Status,
    /// Result tag backing the verdict, also set on decided routes.
    pub citation: Option<Citation>,
    pub witness: Option<Witness>,
    pub counterexample: Option<AfCounterexample>,
    pub procedure: &'static str,
    pub stats: Option<SearchStats>,
}

impl Verdict {
    fn unsupported(citation: Citation) -> Verdict {
        Verdict {
            status: Status::Unsupported { citation },
            citation: Some(citation),
            witness: None,
            counterexample: None,
            procedure: "routing",
            stats: None,
        }
    }
}

#[derive(Debug, Error)]
pub enum DecideError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Region(#[from] RegionError),
    #[error("goal location {goal} is outside the protocol")]
    BadGoal { goal: usize },
    #[error("internal witness reconstruction failed: {reason}")]
    Infeasible { reason: String },
}

fn infeasible<T>(reason: impl Into<String>) -> Result<T, DecideError> {
    Err(DecideError::Infeasible {
        reason: reason.into(),
    })
}

/// Clockless protocols get one padding clock so the region machinery
/// applies; no guard mentions it and nothing resets it, so K = 0.
fn search_form(p: &Protocol) -> Cow<'_, Protocol> {
    if p.clocks.is_empty() {
        let mut q = p.clone();
        q.clocks.push("__probe".to_string());
        Cow::Owned(q)
    } else {
        Cow::Borrowed(p)
    }
}

fn visits(exec: &Execution, goal: LocId) -> bool {
    exec.states.iter().any(|c| c.locs.contains(&goal))
}

/// Reachability at a fixed network size. The witness replays on the
/// protocol as given, padding clock stripped.
pub fn ef_fixed_n(
    p: &Protocol,
    mode: Mode,
    n: usize,
    goal: LocId,
) -> Result<(Option<Witness>, SearchStats), DecideError> {
    let q = search_form(p);
    let (found, stats) = regions::ef_fixed_n(&q, mode, n, goal)?;
    let Some(exec) = found else {
        return Ok((None, stats));
    };
    let trace = if p.clocks.is_empty() {
        let (t, _) = match replay(p, mode, n, &exec.labels) {
            Ok(r) => r,
            Err(e) => return infeasible(format!("witness does not replay: {e}")),
        };
        t
    } else {
        exec
    };
    if !visits(&trace, goal) {
        return infeasible("witness trace misses the goal");
    }
    Ok((
        Some(Witness {
            n,
            pval: Valuation::new(),
            trace,
        }),
        stats,
    ))
}

/// Sizes probed forward before falling back to the covering set.
const WITNESS_PROBE_MAX: usize = 4;

/// Exact reachability over all network sizes in reconfigurable mode, for
/// parameter-free protocols with at most one clock. Small sizes are probed
/// forward first: most positive instances fall there, and saturating the
/// covering set costs far more than a fixed-size search when guard
/// constants are large. Unreachability always comes from the saturated
/// covering set; a late positive resumes probing upward, and the
/// abstraction is exact per size, so the loop terminates.
pub fn ef_reconf_decide(
    p: &Protocol,
    goal: LocId,
) -> Result<(Option<Witness>, SearchStats), DecideError> {
    let q = search_form(p);
    let oc = OneClock::build(&q)?;
    for n in 1..=WITNESS_PROBE_MAX {
        let (w, stats) = ef_fixed_n(p, Mode::Reconfigurable, n, goal)?;
        if w.is_some() {
            return Ok((w, stats));
        }
    }
    let cov = regions::backward_coverability(&oc, goal)?;
    if !cov.reachable {
        return Ok((None, cov.stats));
    }
    let mut n = WITNESS_PROBE_MAX + 1;
    loop {
        let (w, _) = ef_fixed_n(p, Mode::Reconfigurable, n, goal)?;
        if w.is_some() {
            return Ok((w, cov.stats));
        }
        n += 1;
    }
}

/// Size-bounded reachability in clique mode. Never answers no.
pub fn ef_clique_semi(
    p: &Protocol,
    goal: LocId,
    n_max: usize,
) -> Result<(Option<Witness>, SearchStats), DecideError> {
    let mut stats = SearchStats { states: 0, basis: 0 };
    for n in 1..=n_max {
        let (w, s) = ef_fixed_n(p, Mode::Clique, n, goal)?;
        stats.states += s.states;
        if w.is_some() {
            return Ok((w, stats));
        }
    }
    Ok((None, stats))
}

fn pick_inside(b: &crate::model::ParamBound) -> Rat {
    if b.left_closed {
        return rat_int(b.inf);
    }
    match b.sup {
        Some(s) => (rat_int(b.inf) + rat_int(s)) / rat_int(2),
        None => rat_int(b.inf) + rat_int(1),
    }
}

/// Reconstructs parameter values from a trace of the most permissive
/// parameter-free form. Closed interval ends take the endpoint; open ends
/// move strictly inside, past every clock value the trace compared against
/// the parameter, so each comparison keeps the truth value it had.
pub fn witness_valuation(
    p: &Protocol,
    mode: Mode,
    n: usize,
    labels: &[Label],
) -> Result<Valuation, DecideError> {
    let pmax = build_n_max(p)?;
    let (exec, _) = match replay(&pmax, mode, n, labels) {
        Ok(r) => r,
        Err(e) => return infeasible(format!("trace does not replay on the permissive form: {e}")),
    };
    let info = classify(p);
    // extremes of the clock values compared against each parameter
    let mut lo: BTreeMap<ParamId, Rat> = BTreeMap::new();
    let mut hi: BTreeMap<ParamId, Rat> = BTreeMap::new();
    for (i, lab) in exec.labels.iter().enumerate() {
        let pre = exec.states[i].delayed(&lab.delay);
        let mut note = |proc: usize, edge: usize| {
            for a in &p.edges[edge].guard {
                if let GuardBound::Param(pid) = a.bound {
                    let v = &pre.clocks[proc][a.clock.0];
                    lo.entry(pid)
                        .and_modify(|m| {
                            if v < m {
                                *m = v.clone();
                            }
                        })
                        .or_insert_with(|| v.clone());
                    hi.entry(pid)
                        .and_modify(|m| {
                            if v > m {
                                *m = v.clone();
                            }
                        })
                        .or_insert_with(|| v.clone());
                }
            }
        };
        note(lab.actor, lab.edge);
        for (&r, &e) in &lab.choices {
            note(r, e);
        }
    }
    let mut out = Valuation::new();
    for i in 0..p.params.len() {
        let pid = ParamId(i);
        let b = p.bound_or_default(pid);
        let value = match info.roles[i] {
            ParamRole::Mixed => return Err(ModelError::NotLu.into()),
            ParamRole::Unused => pick_inside(&b),
            ParamRole::UpperOnly => match b.sup {
                None => {
                    return Err(ModelError::UnboundedParam {
                        name: p.params[i].clone(),
                    }
                    .into())
                }
                Some(s) if b.right_closed => rat_int(s),
                Some(s) => {
                    // strictly above every compared value, strictly below s
                    let mut m = rat_int(b.inf);
                    if let Some(h) = hi.get(&pid) {
                        if *h > m {
                            m = h.clone();
                        }
                    }
                    &m + (rat_int(s) - &m) / rat_int(2)
                }
            },
            ParamRole::LowerOnly => {
                if b.left_closed {
                    rat_int(b.inf)
                } else {
                    // strictly below every compared value, strictly above inf
                    let mut cap = b.sup.map(rat_int);
                    if let Some(l) = lo.get(&pid) {
                        cap = Some(match cap {
                            Some(c) if c < *l => c,
                            _ => l.clone(),
                        });
                    }
                    match cap {
                        Some(c) => rat_int(b.inf) + (c - rat_int(b.inf)) / rat_int(2),
                        None => rat_int(b.inf) + rat_int(1),
                    }
                }
            }
        };
        if !b.contains(&value) {
            return infeasible(format!(
                "reconstructed value for {} leaves its interval",
                p.params[i]
            ));
        }
        out.insert(pid, value);
    }
    // the trace must replay unchanged at the reconstructed point
    let pv = substitute(p, &out)?;
    if let Err(e) = replay(&pv, mode, n, labels) {
        return infeasible(format!("trace breaks at the reconstructed point: {e}"));
    }
    Ok(out)
}

fn lift_witness(
    p: &Protocol,
    mode: Mode,
    goal: LocId,
    w: Witness,
) -> Result<Witness, DecideError> {
    let pval = witness_valuation(p, mode, w.n, &w.trace.labels)?;
    let pv = substitute(p, &pval)?;
    let (trace, _) = match replay(&pv, mode, w.n, &w.trace.labels) {
        Ok(r) => r,
        Err(e) => return infeasible(format!("lifted witness does not replay: {e}")),
    };
    if !visits(&trace, goal) {
        return infeasible("lifted witness misses the goal");
    }
    Ok(Witness {
        n: w.n,
        pval,
        trace,
    })
}

/// Reachability for bounded L/U protocols: exact in reconfigurable mode
/// through the most permissive parameter-free form, size-bounded in clique
/// mode. Parameter values are reconstructed from the witness.
pub fn ef_existence_lu(
    p: &Protocol,
    mode: Mode,
    goal: LocId,
    limits: SearchLimits,
) -> Result<Verdict, DecideError> {
    let pmax = build_n_max(p)?;
    match mode {
        Mode::Reconfigurable => {
            let (w, stats) = ef_reconf_decide(&pmax, goal)?;
            let (status, witness) = match w {
                None => (Status::Decided { answer: false }, None),
                Some(w) => (
                    Status::Decided { answer: true },
                    Some(lift_witness(p, mode, goal, w)?),
                ),
            };
            Ok(Verdict {
                status,
                citation: Some(Citation::Lem6),
                witness,
                counterexample: None,
                procedure: "ef_existence_lu",
                stats: Some(stats),
            })
        }
        Mode::Clique => {
            let (w, stats) = ef_clique_semi(&pmax, goal, limits.n_max)?;
            let (status, witness) = match w {
                None => (
                    Status::Inconclusive {
                        explored_up_to: limits.n_max,
                    },
                    None,
                ),
                Some(w) => (Status::SemiDecided, Some(lift_witness(p, mode, goal, w)?)),
            };
            Ok(Verdict {
                status,
                citation: Some(Citation::Lem6),
                witness,
                counterexample: None,
                procedure: "ef_existence_lu",
                stats: Some(stats),
            })
        }
    }
}

/// Reachability under every admissible valuation, decided on the least
/// permissive form. Requires closed finite bounds on the used parameters;
/// runs at the least permissive point are prefixes of runs anywhere else,
/// so a yes there is a yes everywhere.
pub fn ef_universality_lu(
    p: &Protocol,
    mode: Mode,
    goal: LocId,
    limits: SearchLimits,
) -> Result<Verdict, DecideError> {
    let pmin = build_n_min(p)?;
    let vmin = least_permissive_valuation(p)?;
    let with_vmin = |w: Witness| -> Result<Witness, DecideError> {
        let pv = substitute(p, &vmin)?;
        let (trace, _) = match replay(&pv, mode, w.n, &w.trace.labels) {
            Ok(r) => r,
            Err(e) => return infeasible(format!("witness does not replay at the least permissive point: {e}")),
        };
        if !visits(&trace, goal) {
            return infeasible("witness misses the goal at the least permissive point");
        }
        Ok(Witness {
            n: w.n,
            pval: vmin.clone(),
            trace,
        })
    };
    match mode {
        Mode::Reconfigurable => {
            let (w, stats) = ef_reconf_decide(&pmin, goal)?;
            let (status, witness) = match w {
                None => (Status::Decided { answer: false }, None),
                Some(w) => (Status::Decided { answer: true }, Some(with_vmin(w)?)),
            };
            Ok(Verdict {
                status,
                citation: Some(Citation::Lem5),
                witness,
                counterexample: None,
                procedure: "ef_universality_lu",
                stats: Some(stats),
            })
        }
        Mode::Clique => {
            let (w, stats) = ef_clique_semi(&pmin, goal, limits.n_max)?;
            let (status, witness) = match w {
                None => (
                    Status::Inconclusive {
                        explored_up_to: limits.n_max,
                    },
                    None,
                ),
                Some(w) => (Status::SemiDecided, Some(with_vmin(w)?)),
            };
            Ok(Verdict {
                status,
                citation: Some(Citation::Lem5),
                witness,
                counterexample: None,
                procedure: "ef_universality_lu",
                stats: Some(stats),
            })
        }
    }
}

#[derive(Debug, Clone)]
pub struct AfOutcome {
    pub holds: bool,
    pub counterexample: Option<AfCounterexample>,
}

/// All-runs reachability at a point valuation, reconfigurable mode only.
/// Every maximal run of every network size visits the goal iff every
/// maximal run of one process does: receivers can always be excluded, and
/// a single avoiding process run lifts to any size by running all
/// processes along it. The single-process region graph settles the size
/// one question exhaustively.
///
/// A run is lost in exactly two shapes: it ends after an action (or before
/// any) in a state whose whole time orbit enables nothing, or it cycles
/// forever through non-goal region states.
pub fn af_concrete(
    p: &Protocol,
    pval: &Valuation,
    goal: LocId,
) -> Result<AfOutcome, DecideError> {
    let parametric = p
        .edges
        .iter()
        .any(|e| e.guard.iter().any(|a| matches!(a.bound, GuardBound::Param(_))));
    let p0 = if parametric {
        substitute(p, pval)?
    } else {
        p.clone()
    };
    if p0.init == goal {
        return Ok(AfOutcome {
            holds: true,
            counterexample: None,
        });
    }
    let q = search_form(&p0);
    let oc = OneClock::build(&q)?;
    let classes = oc.classes();
    let nclasses = classes.len();
    let nlocs = oc.nlocs;
    // action edges firable per location and class
    let mut fires = vec![vec![Vec::<usize>::new(); nclasses]; nlocs];
    for e in 0..oc.edge_count() {
        if matches!(oc.edge_action(e), Action::Receive(_)) {
            continue;
        }
        for (ci, &c) in classes.iter().enumerate() {
            if oc.sat(e, c) {
                fires[oc.edge_source(e).0][ci].push(e);
            }
        }
    }
    // alive = some action fires now or later in the time orbit
    let mut alive = vec![vec![false; nclasses]; nlocs];
    for l in 0..nlocs {
        for ci in (0..nclasses).rev() {
            let later = ci + 1 < nclasses && alive[l][ci + 1];
            alive[l][ci] = later || !fires[l][ci].is_empty();
        }
    }
    type St = (usize, usize);
    let start: St = (p0.init.0, 0);
    let refine = |steps: &[(St, Option<usize>)]| -> Result<Execution, DecideError> {
        let mut labels = Vec::new();
        let mut value = Rat::zero();
        let mut acc = Rat::zero();
        for &((_, ci), via) in steps {
            match via {
                None => {
                    let r = oc.class_representative(classes[ci]);
                    acc += &r - &value;
                    value = r;
                }
                Some(e) => {
                    labels.push(Label::internal(std::mem::take(&mut acc), 0, e));
                    if oc.edge_resets(e) {
                        value = Rat::zero();
                    }
                }
            }
        }
        match replay(&p0, Mode::Reconfigurable, 1, &labels) {
            Ok((t, _)) => Ok(t),
            Err(e) => infeasible(format!("counterexample does not replay: {e}")),
        }
    };
    let path_to = |s: St, parent: &BTreeMap<St, (St, Option<usize>)>| {
        let mut steps: Vec<(St, Option<usize>)> = Vec::new();
        let mut cur = s;
        while cur != start {
            let (prev, via) = parent[&cur];
            steps.push((cur, via));
            cur = prev;
        }
        steps.reverse();
        steps
    };
    if !alive[start.0][start.1] {
        // the empty run is already maximal
        let trace = refine(&[])?;
        return Ok(AfOutcome {
            holds: false,
            counterexample: Some(AfCounterexample::Stuck { trace }),
        });
    }
    let mut parent: BTreeMap<St, (St, Option<usize>)> = BTreeMap::new();
    let mut seen: BTreeSet<St> = BTreeSet::new();
    let mut queue: VecDeque<St> = VecDeque::new();
    seen.insert(start);
    queue.push_back(start);
    while let Some(s) = queue.pop_front() {
        let (l, ci) = s;
        if LocId(l) == goal {
            continue;
        }
        if ci + 1 < nclasses {
            let t = (l, ci + 1);
            if seen.insert(t) {
                parent.insert(t, (s, None));
                queue.push_back(t);
            }
        }
        for &e in &fires[l][ci] {
            let t: St = (
                oc.edge_target(e).0,
                if oc.edge_resets(e) { 0 } else { ci },
            );
            let to_goal = oc.edge_target(e) == goal;
            if !to_goal && !alive[t.0][t.1] {
                // a maximal run fires e and halts there, off the goal
                let mut steps = path_to(s, &parent);
                steps.push((t, Some(e)));
                let trace = refine(&steps)?;
                return Ok(AfOutcome {
                    holds: false,
                    counterexample: Some(AfCounterexample::Stuck { trace }),
                });
            }
            if seen.insert(t) {
                parent.insert(t, (s, Some(e)));
                if !to_goal {
                    queue.push_back(t);
                }
            }
        }
    }
    // cycle hunt in the explored non-goal subgraph
    let succs = |s: St| -> Vec<(St, Option<usize>)> {
        let (l, ci) = s;
        let mut out = Vec::new();
        if ci + 1 < nclasses {
            out.push(((l, ci + 1), None));
        }
        for &e in &fires[l][ci] {
            if oc.edge_target(e) != goal {
                out.push((
                    (oc.edge_target(e).0, if oc.edge_resets(e) { 0 } else { ci }),
                    Some(e),
                ));
            }
        }
        out
    };
    let mut color = vec![vec![0u8; nclasses]; nlocs];
    let mut frames: Vec<(St, Option<usize>, usize)> = vec![(start, None, 0)];
    color[start.0][start.1] = 1;
    while let Some(frame) = frames.last_mut() {
        let (s, _, ref mut idx) = *frame;
        let ss = succs(s);
        if *idx >= ss.len() {
            color[s.0][s.1] = 2;
            frames.pop();
            continue;
        }
        let (t, via) = ss[*idx].clone();
        *idx += 1;
        match color[t.0][t.1] {
            0 => {
                color[t.0][t.1] = 1;
                frames.push((t, via, 0));
            }
            1 => {
                // closing a loop; every region cycle fires at least one edge
                let pos = frames
                    .iter()
                    .position(|f| f.0 == t)
                    .expect("grey state sits on the stack");
                let stem_steps: Vec<(St, Option<usize>)> =
                    frames[1..=pos].iter().map(|f| (f.0, f.1)).collect();
                let mut cycle_edges: Vec<usize> = frames[pos + 1..]
                    .iter()
                    .filter_map(|f| f.1)
                    .collect();
                cycle_edges.extend(via);
                assert!(!cycle_edges.is_empty(), "time alone cannot cycle");
                let stem = refine(&stem_steps)?;
                return Ok(AfOutcome {
                    holds: false,
                    counterexample: Some(AfCounterexample::Lasso { stem, cycle_edges }),
                });
            }
            _ => {}
        }
    }
    Ok(AfOutcome {
        holds: true,
        counterexample: None,
    })
}

fn used_upper_with_open_left(p: &Protocol, info: &FragmentInfo) -> bool {
    (0..p.params.len()).any(|i| {
        info.roles[i] == ParamRole::UpperOnly && !p.bound_or_default(ParamId(i)).left_closed
    })
}

/// Routes a question to the procedure that settles it, or to a refusal
/// naming the closing result. Total over modes, kinds, fragments,
/// boundedness shapes, and clock counts.
pub fn solve(spec: &ProblemSpec) -> Result<Verdict, DecideError> {
    if spec.goal.0 >= spec.protocol.locations.len() {
        return Err(DecideError::BadGoal { goal: spec.goal.0 });
    }
    if spec.kind.is_af() {
        solve_af(spec)
    } else {
        solve_ef(spec)
    }
}

fn solve_af(spec: &ProblemSpec) -> Result<Verdict, DecideError> {
    if spec.mode == Mode::Clique {
        return Ok(Verdict::unsupported(Citation::Thm4));
    }
    match spec.protocol.clocks.len() {
        0 | 1 => {}
        2 => return Ok(Verdict::unsupported(Citation::OpenProblem)),
        _ => return Ok(Verdict::unsupported(Citation::Thm1)),
    }
    let info = classify(&spec.protocol);
    if info.class != FragmentClass::ParameterFree && spec.pval.is_none() {
        return Ok(Verdict::unsupported(Citation::OutOfScope));
    }
    let empty = Valuation::new();
    let pval = spec.pval.as_ref().unwrap_or(&empty);
    let out = af_concrete(&spec.protocol, pval, spec.goal)?;
    Ok(Verdict {
        status: Status::Decided { answer: out.holds },
        citation: Some(Citation::Thm1),
        witness: None,
        counterexample: out.counterexample,
        procedure: "af_concrete",
        stats: None,
    })
}

fn solve_ef(spec: &ProblemSpec) -> Result<Verdict, DecideError> {
    if spec.protocol.clocks.len() >= 2 {
        return Ok(Verdict::unsupported(Citation::Lem1));
    }
    if let Some(pv) = &spec.pval {
        let p0 = substitute(&spec.protocol, pv)?;
        return solve_ef_concrete(&p0, spec, pv);
    }
    let info = classify(&spec.protocol);
    match info.class {
        FragmentClass::ParameterFree => {
            let empty = Valuation::new();
            solve_ef_concrete(&spec.protocol, spec, &empty)
        }
        FragmentClass::General => Ok(Verdict::unsupported(match (spec.mode, spec.kind) {
            (Mode::Reconfigurable, _) => Citation::Thm3,
            (Mode::Clique, ProblemKind::EfExistence) => Citation::Lem2,
            (Mode::Clique, _) => Citation::Lem3,
        })),
        FragmentClass::L | FragmentClass::U | FragmentClass::Lu => match spec.kind {
            ProblemKind::EfExistence => match info.boundedness {
                Boundedness::ClosedBounded | Boundedness::OpenBounded => {
                    ef_existence_lu(&spec.protocol, spec.mode, spec.goal, spec.limits)
                }
                Boundedness::Unbounded => Ok(Verdict::unsupported(Citation::OpenProblem)),
            },
            ProblemKind::EfUniversality => match spec.mode {
                Mode::Reconfigurable => match info.boundedness {
                    Boundedness::ClosedBounded => {
                        ef_universality_lu(&spec.protocol, spec.mode, spec.goal, spec.limits)
                    }
                    _ => Ok(Verdict::unsupported(Citation::OpenProblem)),
                },
                Mode::Clique => match (info.class, info.boundedness) {
                    (_, Boundedness::ClosedBounded) => {
                        ef_universality_lu(&spec.protocol, spec.mode, spec.goal, spec.limits)
                    }
                    (FragmentClass::Lu, Boundedness::OpenBounded) => {
                        Ok(Verdict::unsupported(Citation::Thm5))
                    }
                    (FragmentClass::Lu, Boundedness::Unbounded) => {
                        Ok(Verdict::unsupported(Citation::OpenProblem))
                    }
                    (FragmentClass::L, Boundedness::OpenBounded) => {
                        Ok(Verdict::unsupported(Citation::OpenProblem))
                    }
                    (FragmentClass::L, Boundedness::Unbounded) => {
                        Ok(Verdict::unsupported(Citation::Lem7))
                    }
                    (FragmentClass::U, Boundedness::OpenBounded) => {
                        if used_upper_with_open_left(&spec.protocol, &info) {
                            Ok(Verdict::unsupported(Citation::Lem7))
                        } else {
                            Ok(Verdict::unsupported(Citation::OpenProblem))
                        }
                    }
                    (FragmentClass::U, Boundedness::Unbounded) => {
                        Ok(Verdict::unsupported(Citation::OpenProblem))
                    }
                    _ => unreachable!("parameter-free and general handled above"),
                },
            },
            _ => unreachable!("all-runs kinds handled in solve_af"),
        },
    }
}

fn solve_ef_concrete(
    p0: &Protocol,
    spec: &ProblemSpec,
    pval: &Valuation,
) -> Result<Verdict, DecideError> {
    match spec.mode {
        Mode::Reconfigurable => {
            let (w, stats) = ef_reconf_decide(p0, spec.goal)?;
            let witness = w.map(|mut w| {
                w.pval = pval.clone();
                w
            });
            Ok(Verdict {
                status: Status::Decided {
                    answer: witness.is_some(),
                },
                citation: Some(Citation::Thm2),
                witness,
                counterexample: None,
                procedure: "ef_reconf_decide",
                stats: Some(stats),
            })
        }
        Mode::Clique => {
            let (w, stats) = ef_clique_semi(p0, spec.goal, spec.limits.n_max)?;
            let witness = w.map(|mut w| {
                w.pval = pval.clone();
                w
            });
            let status = if witness.is_some() {
                Status::SemiDecided
            } else {
                Status::Inconclusive {
                    explored_up_to: spec.limits.n_max,
                }
            };
            Ok(Verdict {
                status,
                citation: None,
                witness,
                counterexample: None,
                procedure: "ef_clique_semi",
                stats: Some(stats),
            })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{rat, valuation_of};
    use crate::semantics::simulate;
    use crate::textio::parse_protocol;

    fn factory(pt: &str, tl: &str) -> Protocol {
        let src = format!(
            "protocol factory\nloc q0 c f s1 s2 s3 g\nclocks x\nmessages f p\ninit q0\n\
             edge q0 -> c do recv f\nedge q0 -> f do send f reset x\nedge c -> s1 do recv p\n\
             edge s1 -> s2 do recv p\nedge s2 -> s3 do recv p\nedge s3 -> g when x < {tl}\n\
             edge f -> f when x >= {pt} do send p reset x\n"
        );
        parse_protocol(&src).unwrap()
    }

    fn factory_lu(pt_bound: &str, tl_bound: &str) -> Protocol {
        let src = format!(
            "protocol factory\nloc q0 c f s1 s2 s3 g\nclocks x\nmessages f p\n\
             params pt tl\nbound pt in {pt_bound}\nbound tl in {tl_bound}\ninit q0\n\
             edge q0 -> c do recv f\nedge q0 -> f do send f reset x\nedge c -> s1 do recv p\n\
             edge s1 -> s2 do recv p\nedge s2 -> s3 do recv p\nedge s3 -> g when x < tl\n\
             edge f -> f when x >= pt do send p reset x\n"
        );
        parse_protocol(&src).unwrap()
    }

    fn spec_for(p: Protocol, mode: Mode, kind: ProblemKind, n_max: usize) -> ProblemSpec {
        let goal = p.loc_id("g").unwrap();
        ProblemSpec {
            protocol: p,
            goal,
            mode,
            kind,
            limits: SearchLimits {
                n_max,
                ..SearchLimits::default()
            },
            pval: None,
        }
    }

    #[test]
    fn reconf_reachability_is_decided_with_a_witness() {
        let v = solve(&spec_for(
            factory("3", "9"),
            Mode::Reconfigurable,
            ProblemKind::EfExistence,
            6,
        ))
        .unwrap();
        assert_eq!(v.status, Status::Decided { answer: true });
        assert_eq!(v.procedure, "ef_reconf_decide");
        assert_eq!(v.citation, Some(Citation::Thm2));
        let w = v.witness.expect("positive verdicts carry a witness");
        assert_eq!(w.n, 3);
        assert!(w.trace.states.last().unwrap().locs.contains(&LocId(6)));

        let v = solve(&spec_for(
            factory("1", "1"),
            Mode::Reconfigurable,
            ProblemKind::EfExistence,
            6,
        ))
        .unwrap();
        assert_eq!(v.status, Status::Decided { answer: false });
        assert!(v.witness.is_none());
    }

    #[test]
    fn clique_exploration_answers_yes_or_gives_up() {
        let v = solve(&spec_for(
            factory("2", "9"),
            Mode::Clique,
            ProblemKind::EfExistence,
            4,
        ))
        .unwrap();
        assert_eq!(v.status, Status::SemiDecided);
        assert_eq!(v.procedure, "ef_clique_semi");
        assert_eq!(v.witness.as_ref().unwrap().n, 2);

        let v = solve(&spec_for(
            factory("3", "9"),
            Mode::Clique,
            ProblemKind::EfExistence,
            2,
        ))
        .unwrap();
        assert_eq!(v.status, Status::Inconclusive { explored_up_to: 2 });
        assert!(v.witness.is_none());
    }

    #[test]
    fn bounded_lu_existence_reconstructs_parameter_values() {
        let p = factory_lu("[2,2]", "(0,10)");
        let v = solve(&spec_for(p, Mode::Clique, ProblemKind::EfExistence, 4)).unwrap();
        assert_eq!(v.status, Status::SemiDecided);
        assert_eq!(v.citation, Some(Citation::Lem6));
        let w = v.witness.unwrap();
        assert_eq!(w.n, 2);
        assert_eq!(w.pval[&ParamId(0)], rat_int(2));
        assert_eq!(w.pval[&ParamId(1)], rat_int(8));

        let p = factory_lu("[2,2]", "(0,10)");
        let v = solve(&spec_for(p, Mode::Reconfigurable, ProblemKind::EfExistence, 4)).unwrap();
        assert_eq!(v.status, Status::Decided { answer: true });
        let w = v.witness.unwrap();
        assert_eq!(w.pval[&ParamId(0)], rat_int(2));
        assert!(w.pval[&ParamId(1)] > rat_int(6) && w.pval[&ParamId(1)] < rat_int(10));

        let p = factory_lu("[1,1]", "[1,1]");
        let v = solve(&spec_for(p, Mode::Reconfigurable, ProblemKind::EfExistence, 4)).unwrap();
        assert_eq!(v.status, Status::Decided { answer: false });
        assert_eq!(v.citation, Some(Citation::Lem6));
    }

    #[test]
    fn closed_lu_universality_decides_at_the_least_permissive_point() {
        let p = factory_lu("[2,3]", "[9,12]");
        let v = solve(&spec_for(p, Mode::Reconfigurable, ProblemKind::EfUniversality, 4)).unwrap();
        assert_eq!(v.status, Status::Decided { answer: true });
        assert_eq!(v.citation, Some(Citation::Lem5));
        let w = v.witness.unwrap();
        assert_eq!(w.n, 3);
        assert_eq!(w.pval[&ParamId(0)], rat_int(3));
        assert_eq!(w.pval[&ParamId(1)], rat_int(9));

        let p = factory_lu("[1,1]", "[1,1]");
        let v = solve(&spec_for(p, Mode::Reconfigurable, ProblemKind::EfUniversality, 4)).unwrap();
        assert_eq!(v.status, Status::Decided { answer: false });
    }

    #[test]
    fn least_permissive_form_is_plain_substitution() {
        let p = factory_lu("[2,3]", "[9,12]");
        let vmin = least_permissive_valuation(&p).unwrap();
        let built = build_n_min(&p).unwrap();
        assert_eq!(built, substitute(&p, &vmin).unwrap());
        let (a, _) = simulate(&built, Mode::Reconfigurable, 3, 40, 7).unwrap();
        let (b, _) = simulate(&substitute(&p, &vmin).unwrap(), Mode::Reconfigurable, 3, 40, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn witness_values_sit_inside_open_intervals() {
        let upper = |bound: &str| {
            let src = format!(
                "protocol w\nloc a b\nclocks x\nparams u\nbound u in {bound}\ninit a\n\
                 edge a -> b when x < u\n"
            );
            parse_protocol(&src).unwrap()
        };
        let labels = vec![Label::internal(rat(6, 1), 0, 0)];
        let p = upper("[0,20)");
        let v = witness_valuation(&p, Mode::Reconfigurable, 1, &labels).unwrap();
        assert_eq!(v[&ParamId(0)], rat_int(13));
        let p = upper("(0,20]");
        let v = witness_valuation(&p, Mode::Reconfigurable, 1, &labels).unwrap();
        assert_eq!(v[&ParamId(0)], rat_int(20));

        let lower = |bound: &str| {
            let src = format!(
                "protocol w\nloc a b\nclocks x\nparams l\nbound l in {bound}\ninit a\n\
                 edge a -> b when x > l\n"
            );
            parse_protocol(&src).unwrap()
        };
        let p = lower("(2,9]");
        let v = witness_valuation(&p, Mode::Reconfigurable, 1, &labels).unwrap();
        assert_eq!(v[&ParamId(0)], rat_int(4));
        let p = lower("[2,9)");
        let v = witness_valuation(&p, Mode::Reconfigurable, 1, &labels).unwrap();
        assert_eq!(v[&ParamId(0)], rat_int(2));
    }

    #[test]
    fn all_runs_verdicts_follow_the_single_process_graph() {
        let p = factory("3", "9");
        let goal = p.loc_id("g").unwrap();
        let out = af_concrete(&p, &Valuation::new(), goal).unwrap();
        assert!(!out.holds);
        match out.counterexample.unwrap() {
            AfCounterexample::Lasso { cycle_edges, .. } => {
                assert!(cycle_edges.contains(&6), "production loop must appear: {cycle_edges:?}");
            }
            other => panic!("expected a lasso, got {other:?}"),
        }

        let p = parse_protocol(
            "protocol once\nloc a b\nclocks x\ninit a\nedge a -> b when x = 0\n",
        )
        .unwrap();
        let out = af_concrete(&p, &Valuation::new(), p.loc_id("b").unwrap()).unwrap();
        assert!(out.holds, "the only edge must fire before any delay");

        let p = parse_protocol("protocol here\nloc a\nclocks x\ninit a\n").unwrap();
        let out = af_concrete(&p, &Valuation::new(), p.loc_id("a").unwrap()).unwrap();
        assert!(out.holds);

        let p = parse_protocol(
            "protocol halt\nloc a m b\nclocks x\ninit a\nedge a -> m when x <= 1\nedge m -> b when x = 5, x < 2\n",
        )
        .unwrap();
        let out = af_concrete(&p, &Valuation::new(), p.loc_id("b").unwrap()).unwrap();
        assert!(!out.holds);
        match out.counterexample.unwrap() {
            AfCounterexample::Stuck { trace } => {
                assert_eq!(trace.last().locs[0], p.loc_id("m").unwrap());
            }
            other => panic!("expected a stuck run, got {other:?}"),
        }
    }

    #[test]
    fn routing_refusals_name_the_closing_result() {
        let unsupported = |v: Verdict| match v.status {
            Status::Unsupported { citation } => citation,
            other => panic!("expected a refusal, got {other:?}"),
        };
        let two_clock = parse_protocol(
            "protocol two\nloc a g\nclocks x y\ninit a\nedge a -> g when x < 1, y > 1\n",
        )
        .unwrap();
        for (mode, kind) in [
            (Mode::Reconfigurable, ProblemKind::EfExistence),
            (Mode::Clique, ProblemKind::EfUniversality),
        ] {
            let v = solve(&spec_for(two_clock.clone(), mode, kind, 2)).unwrap();
            assert_eq!(unsupported(v), Citation::Lem1);
        }

        let general = parse_protocol(
            "protocol gen\nloc a g\nclocks x\nparams p\nbound p in [0,5]\ninit a\nedge a -> g when x > p, x < p\n",
        )
        .unwrap();
        let v = solve(&spec_for(general.clone(), Mode::Reconfigurable, ProblemKind::EfExistence, 2)).unwrap();
        assert_eq!(unsupported(v), Citation::Thm3);
        let v = solve(&spec_for(general.clone(), Mode::Clique, ProblemKind::EfExistence, 2)).unwrap();
        assert_eq!(unsupported(v), Citation::Lem2);
        let v = solve(&spec_for(general.clone(), Mode::Clique, ProblemKind::EfUniversality, 2)).unwrap();
        assert_eq!(unsupported(v), Citation::Lem3);

        let v = solve(&spec_for(factory("2", "9"), Mode::Clique, ProblemKind::AfExistence, 2)).unwrap();
        assert_eq!(unsupported(v), Citation::Thm4);
        let v = solve(&spec_for(two_clock.clone(), Mode::Reconfigurable, ProblemKind::AfExistence, 2)).unwrap();
        assert_eq!(unsupported(v), Citation::OpenProblem);
        let three_clock = parse_protocol(
            "protocol three\nloc a g\nclocks x y z\ninit a\nedge a -> g when z > 1\n",
        )
        .unwrap();
        let v = solve(&spec_for(three_clock, Mode::Reconfigurable, ProblemKind::AfUniversality, 2)).unwrap();
        assert_eq!(unsupported(v), Citation::Thm1);

        let lu = factory_lu("[2,2]", "[9,9]");
        let v = solve(&spec_for(lu.clone(), Mode::Reconfigurable, ProblemKind::AfExistence, 2)).unwrap();
        assert_eq!(unsupported(v), Citation::OutOfScope);
        let mut pointed = spec_for(lu, Mode::Reconfigurable, ProblemKind::AfExistence, 2);
        pointed.pval = Some(valuation_of(&pointed.protocol, &[("pt", rat_int(3)), ("tl", rat_int(9))]).unwrap());
        let v = solve(&pointed).unwrap();
        assert_eq!(v.status, Status::Decided { answer: false });
        assert!(matches!(v.counterexample, Some(AfCounterexample::Lasso { .. })));

        let v = solve(&spec_for(
            factory_lu("[2,2]", "[0,inf)"),
            Mode::Reconfigurable,
            ProblemKind::EfExistence,
            2,
        ))
        .unwrap();
        assert_eq!(unsupported(v), Citation::OpenProblem);
        let v = solve(&spec_for(
            factory_lu("[2,2]", "(0,10)"),
            Mode::Reconfigurable,
            ProblemKind::EfUniversality,
            2,
        ))
        .unwrap();
        assert_eq!(unsupported(v), Citation::OpenProblem);
        let v = solve(&spec_for(
            factory_lu("[2,2]", "(0,10)"),
            Mode::Clique,
            ProblemKind::EfUniversality,
            2,
        ))
        .unwrap();
        assert_eq!(unsupported(v), Citation::Thm5);

        let one_sided = |guard: &str, bound: &str| {
            let src = format!(
                "protocol side\nloc a g\nclocks x\nparams p\nbound p in {bound}\ninit a\n\
                 edge a -> g when {guard}\n"
            );
            parse_protocol(&src).unwrap()
        };
        let v = solve(&spec_for(one_sided("x > p", "[0,inf)"), Mode::Clique, ProblemKind::EfUniversality, 2)).unwrap();
        assert_eq!(unsupported(v), Citation::Lem7);
        let v = solve(&spec_for(one_sided("x > p", "(0,5)"), Mode::Clique, ProblemKind::EfUniversality, 2)).unwrap();
        assert_eq!(unsupported(v), Citation::OpenProblem);
        let v = solve(&spec_for(one_sided("x < p", "(0,5]"), Mode::Clique, ProblemKind::EfUniversality, 2)).unwrap();
        assert_eq!(unsupported(v), Citation::Lem7);
        let v = solve(&spec_for(one_sided("x < p", "[0,5)"), Mode::Clique, ProblemKind::EfUniversality, 2)).unwrap();
        assert_eq!(unsupported(v), Citation::OpenProblem);
        let v = solve(&spec_for(one_sided("x < p", "[0,inf)"), Mode::Clique, ProblemKind::EfUniversality, 2)).unwrap();
        assert_eq!(unsupported(v), Citation::OpenProblem);
    }

    #[test]
    fn clockless_protocols_run_through_a_padding_clock() {
        let p = parse_protocol(
            "protocol bare\nloc a g\nmessages m\ninit a\nedge a -> g do send m\n",
        )
        .unwrap();
        let v = solve(&spec_for(p.clone(), Mode::Reconfigurable, ProblemKind::EfExistence, 2)).unwrap();
        assert_eq!(v.status, Status::Decided { answer: true });
        let w = v.witness.unwrap();
        assert_eq!(w.n, 1);
        assert!(w.trace.states.iter().all(|c| c.clocks.iter().all(Vec::is_empty)));

        let v = solve(&spec_for(p.clone(), Mode::Clique, ProblemKind::EfExistence, 2)).unwrap();
        assert_eq!(v.status, Status::SemiDecided);

        let out = af_concrete(&p, &Valuation::new(), p.loc_id("g").unwrap()).unwrap();
        assert!(out.holds);
    }
}
