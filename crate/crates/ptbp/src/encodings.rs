//! Counter machine workloads and their broadcast protocol encodings.
//!
//! The interpreter is the oracle the generated protocols are validated
//! against: a guided schedule of the timed reconfigurable encoding must pass
//! through configurations that mirror the machine run, and clique encodings
//! must keep one process per counter unit. Nothing here decides anything;
//! these are instance factories for the test suite and the `encode-2cm`
//! command.

use std::collections::{BTreeMap, BTreeSet};

use thiserror::Error;

use crate::model::{
    rat_int, Action, AtomicConstraint, ClockId, GuardBound, LocId, MsgId, ParamBound, ParamId,
    Protocol, Rat, Rel, SourceMap,
};
use crate::semantics::{Config, Label};

pub type StateId = usize;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Counter {
    C1,
    C2,
}

impl Counter {
    pub fn index(self) -> usize {
        match self {
            Counter::C1 => 0,
            Counter::C2 => 1,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Counter::C1 => "c1",
            Counter::C2 => "c2",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Instr {
    Inc(Counter, StateId),
    Dec(Counter, StateId),
    Ifz(Counter, StateId, StateId),
}

impl Instr {
    pub fn counter(self) -> Counter {
        match self {
            Instr::Inc(c, _) | Instr::Dec(c, _) | Instr::Ifz(c, _, _) => c,
        }
    }
}

/// Deterministic machine over two natural counters. Every state except the
/// accepting one carries exactly one instruction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TwoCounterMachine {
    pub states: Vec<String>,
    pub init: StateId,
    pub accept: StateId,
    pub prog: BTreeMap<StateId, Instr>,
}

impl TwoCounterMachine {
    pub fn state_name(&self, s: StateId) -> &str {
        &self.states[s]
    }

    pub fn validate(&self) -> Result<(), MachineError> {
        let bad = |s: StateId| MachineError::UnknownState { index: s };
        if self.init >= self.states.len() {
            return Err(bad(self.init));
        }
        if self.accept >= self.states.len() {
            return Err(bad(self.accept));
        }
        for (&s, instr) in &self.prog {
            if s >= self.states.len() {
                return Err(bad(s));
            }
            let targets = match *instr {
                Instr::Inc(_, t) | Instr::Dec(_, t) => vec![t],
                Instr::Ifz(_, z, nz) => vec![z, nz],
            };
            for t in targets {
                if t >= self.states.len() {
                    return Err(bad(t));
                }
            }
        }
        if self.prog.contains_key(&self.accept) {
            return Err(MachineError::AcceptInstruction {
                state: self.state_name(self.accept).to_string(),
            });
        }
        for s in 0..self.states.len() {
            if s != self.accept && !self.prog.contains_key(&s) {
                return Err(MachineError::MissingInstruction {
                    state: self.state_name(s).to_string(),
                });
            }
        }
        Ok(())
    }
}

/// One point of a machine run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct MachineConfig {
    pub label: StateId,
    pub c1: u64,
    pub c2: u64,
}

impl MachineConfig {
    pub fn counter(&self, c: Counter) -> u64 {
        match c {
            Counter::C1 => self.c1,
            Counter::C2 => self.c2,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MachineStatus {
    Halted,
    Running,
}

/// The run from `(init, 0, 0)`, its status within the step budget, and the
/// largest counter sum seen along the way.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Interpretation {
    pub run: Vec<MachineConfig>,
    pub status: MachineStatus,
    pub max_counter_sum: u64,
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MachineError {
    #[error("decrement of {counter} at zero in state '{state}'")]
    NegativeCounter { state: String, counter: &'static str },
    #[error("state index {index} is not declared")]
    UnknownState { index: usize },
    #[error("state '{state}' has no instruction and is not the accepting state")]
    MissingInstruction { state: String },
    #[error("accepting state '{state}' must not carry an instruction")]
    AcceptInstruction { state: String },
}

pub fn interpret(m: &TwoCounterMachine, max_steps: usize) -> Result<Interpretation, MachineError> {
    m.validate()?;
    let mut label = m.init;
    let mut c = [0u64, 0u64];
    let mut run = vec![MachineConfig { label, c1: 0, c2: 0 }];
    let mut max_sum = 0u64;
    for _ in 0..max_steps {
        if label == m.accept {
            break;
        }
        let instr = m.prog[&label];
        label = match instr {
            Instr::Inc(k, next) => {
                c[k.index()] += 1;
                next
            }
            Instr::Dec(k, next) => {
                if c[k.index()] == 0 {
                    return Err(MachineError::NegativeCounter {
                        state: m.state_name(label).to_string(),
                        counter: k.as_str(),
                    });
                }
                c[k.index()] -= 1;
                next
            }
            Instr::Ifz(k, zero, nonzero) => {
                if c[k.index()] == 0 {
                    zero
                } else {
                    nonzero
                }
            }
        };
        run.push(MachineConfig {
            label,
            c1: c[0],
            c2: c[1],
        });
        max_sum = max_sum.max(c[0] + c[1]);
    }
    let status = if label == m.accept {
        MachineStatus::Halted
    } else {
        MachineStatus::Running
    };
    Ok(Interpretation {
        run,
        status,
        max_counter_sum: max_sum,
    })
}

/// Rewrites the machine so that an accepting run drains both counters and
/// passes two final zero checks before stopping. Runs that never accepted are
/// unaffected.
pub fn normalize_machine(m: &TwoCounterMachine) -> TwoCounterMachine {
    let mut out = m.clone();
    let taken: BTreeSet<String> = out.states.iter().cloned().collect();
    let fresh = |stem: &str| {
        let mut name = stem.to_string();
        while taken.contains(&name) {
            name.insert_str(0, "n_");
        }
        name
    };
    let add = |out: &mut TwoCounterMachine, stem: &str| -> StateId {
        out.states.push(fresh(stem));
        out.states.len() - 1
    };
    let drain1 = m.accept;
    let drain1_dec = add(&mut out, "drain1_dec");
    let drain2 = add(&mut out, "drain2");
    let drain2_dec = add(&mut out, "drain2_dec");
    let check1 = add(&mut out, "check1");
    let check2 = add(&mut out, "check2");
    let stop = add(&mut out, "stop");
    out.prog.insert(drain1, Instr::Ifz(Counter::C1, drain2, drain1_dec));
    out.prog.insert(drain1_dec, Instr::Dec(Counter::C1, drain1));
    out.prog.insert(drain2, Instr::Ifz(Counter::C2, check1, drain2_dec));
    out.prog.insert(drain2_dec, Instr::Dec(Counter::C2, drain2));
    out.prog.insert(check1, Instr::Ifz(Counter::C1, check2, check1));
    out.prog.insert(check2, Instr::Ifz(Counter::C2, stop, check2));
    out.accept = stop;
    out
}

/// Location and edge handles into a generated timed reconfigurable encoding.
struct ReconfMap {
    linit: LocId,
    error: LocId,
    idle: LocId,
    c: [LocId; 2],
    nc1: [LocId; 2],
    nc2: [LocId; 2],
    zt1: [[LocId; 2]; 2],
    zt2: [[LocId; 2]; 2],
    dec1: [[LocId; 2]; 2],
    dec2: [[LocId; 2]; 2],
    inc1: [[LocId; 2]; 2],
    inc2: [[LocId; 2]; 2],
    dec3: [LocId; 2],
    /// Four controller locations per machine state.
    ctrl: Vec<[LocId; 4]>,
}

const RECONF_MESSAGES: [&str; 13] = [
    "tick", "inc1", "inc2", "dec1", "dec2", "zt1", "zt2", "c1", "c2", "oc1", "oc2", "nc1", "nc2",
];

fn msg_tick() -> MsgId {
    MsgId(0)
}
fn msg_inc(i: usize) -> MsgId {
    MsgId(1 + i)
}
fn msg_dec(i: usize) -> MsgId {
    MsgId(3 + i)
}
fn msg_zt(i: usize) -> MsgId {
    MsgId(5 + i)
}
fn msg_cnt(i: usize) -> MsgId {
    MsgId(7 + i)
}
fn msg_oc(i: usize) -> MsgId {
    MsgId(9 + i)
}
fn msg_nc(i: usize) -> MsgId {
    MsgId(11 + i)
}

fn reconf_layout(m: &TwoCounterMachine, with_gadget: bool) -> (Vec<String>, ReconfMap) {
    let mut names: Vec<String> = Vec::new();
    if with_gadget {
        names.extend(["g0", "g1", "g2"].map(String::from));
    }
    let base = names.len();
    names.extend(["linit", "error", "idle", "c1", "c2"].map(String::from));
    names.extend(["nc1_1", "nc2_1", "nc1_2", "nc2_2"].map(String::from));
    for i in 1..=2 {
        for j in 1..=2 {
            for stem in ["zt1", "zt2", "dec1", "dec2", "inc1", "inc2"] {
                names.push(format!("{}_{}_{}", stem, i, j));
            }
        }
    }
    names.push("dec3_1_1".into());
    names.push("dec3_2_2".into());

    let mut taken: BTreeSet<String> = names.iter().cloned().collect();
    let mut ctrl = Vec::with_capacity(m.states.len());
    for s in &m.states {
        let stem = {
            let mut stem = s.clone();
            loop {
                let four: Vec<String> = (1..=4).map(|t| format!("{}_{}", stem, t)).collect();
                if four.iter().all(|n| !taken.contains(n)) {
                    break;
                }
                stem = format!("m_{}", stem);
            }
            stem
        };
        let mut ids = [LocId(0); 4];
        for (t, id) in ids.iter_mut().enumerate() {
            let name = format!("{}_{}", stem, t + 1);
            taken.insert(name.clone());
            names.push(name);
            *id = LocId(names.len() - 1);
        }
        ctrl.push(ids);
    }

    let at = |off: usize| LocId(base + off);
    let block = |i: usize, j: usize, stem_off: usize| at(9 + 6 * (2 * i + j) + stem_off);
    let map = ReconfMap {
        linit: at(0),
        error: at(1),
        idle: at(2),
        c: [at(3), at(4)],
        nc1: [at(5), at(7)],
        nc2: [at(6), at(8)],
        zt1: [[block(0, 0, 0), block(0, 1, 0)], [block(1, 0, 0), block(1, 1, 0)]],
        zt2: [[block(0, 0, 1), block(0, 1, 1)], [block(1, 0, 1), block(1, 1, 1)]],
        dec1: [[block(0, 0, 2), block(0, 1, 2)], [block(1, 0, 2), block(1, 1, 2)]],
        dec2: [[block(0, 0, 3), block(0, 1, 3)], [block(1, 0, 3), block(1, 1, 3)]],
        inc1: [[block(0, 0, 4), block(0, 1, 4)], [block(1, 0, 4), block(1, 1, 4)]],
        inc2: [[block(0, 0, 5), block(0, 1, 5)], [block(1, 0, 5), block(1, 1, 5)]],
        dec3: [at(33), at(34)],
        ctrl,
    };
    (names, map)
}

fn atom(rel: Rel, bound: GuardBound) -> AtomicConstraint {
    AtomicConstraint {
        clock: ClockId(0),
        rel,
        bound,
    }
}

fn c_atom(rel: Rel, v: u64) -> AtomicConstraint {
    atom(rel, GuardBound::Const(rat_int(v)))
}

fn p_atom(rel: Rel) -> AtomicConstraint {
    atom(rel, GuardBound::Param(ParamId(0)))
}

/// Timed reconfigurable encoding of a counter machine: a controller cycles
/// through four locations per machine state, counter values live in the clock
/// offset between the counter representatives and the controller, and every
/// transition is capped by `x <= p`. With `with_integer_gadget` the machine is
/// first normalized to drain its counters, an integrality probe is prepended
/// as the initial block, and the probe's failure exit feeds `error`.
pub fn encode_ef_reconf(
    m: &TwoCounterMachine,
    with_integer_gadget: bool,
) -> Result<Protocol, MachineError> {
    m.validate()?;
    let normalized;
    let m = if with_integer_gadget {
        normalized = normalize_machine(m);
        &normalized
    } else {
        m
    };

    let (locations, ids) = reconf_layout(m, with_integer_gadget);
    let mut messages: Vec<String> = RECONF_MESSAGES.map(String::from).to_vec();
    if with_integer_gadget {
        messages.push("now".into());
    }
    let msg_now = MsgId(RECONF_MESSAGES.len());

    let mut edges = Vec::new();
    let mut push = |src: LocId, dst: LocId, mut guard: Vec<AtomicConstraint>, action: Action, reset: bool, capped: bool| {
        if capped {
            guard.push(p_atom(Rel::Le));
        }
        edges.push(crate::model::Edge {
            source: src,
            guard,
            action,
            resets: if reset {
                [ClockId(0)].into_iter().collect()
            } else {
                BTreeSet::new()
            },
            target: dst,
        });
    };

    if with_integer_gadget {
        let g0 = LocId(0);
        let g1 = LocId(1);
        let g2 = LocId(2);
        push(g0, g1, vec![], Action::Internal, false, false);
        push(g0, g2, vec![], Action::Internal, false, false);
        push(g1, g1, vec![p_atom(Rel::Eq)], Action::Send(msg_now), false, false);
        push(g2, g2, vec![c_atom(Rel::Eq, 1)], Action::Internal, true, false);
        push(g2, ids.linit, vec![c_atom(Rel::Eq, 0)], Action::Receive(msg_now), false, false);
        push(
            g2,
            ids.error,
            vec![c_atom(Rel::Gt, 0), c_atom(Rel::Lt, 1)],
            Action::Receive(msg_now),
            false,
            false,
        );
    }

    push(ids.linit, ids.ctrl[m.init][0], vec![c_atom(Rel::Eq, 0)], Action::Internal, false, true);
    push(ids.linit, ids.c[0], vec![c_atom(Rel::Eq, 0)], Action::Internal, false, true);
    push(ids.linit, ids.c[1], vec![c_atom(Rel::Eq, 0)], Action::Internal, false, true);
    push(ids.linit, ids.idle, vec![c_atom(Rel::Eq, 0)], Action::Internal, false, true);
    push(ids.idle, ids.idle, vec![], Action::Internal, true, true);

    let mut has = [[false; 2]; 3];
    for instr in m.prog.values() {
        let i = instr.counter().index();
        match instr {
            Instr::Inc(..) => has[0][i] = true,
            Instr::Dec(..) => has[1][i] = true,
            Instr::Ifz(..) => has[2][i] = true,
        }
    }

    for i in 0..2 {
        let j = 1 - i;
        if has[0][i] {
            push(ids.c[i], ids.inc1[i][i], vec![p_atom(Rel::Lt)], Action::Receive(msg_inc(i)), false, true);
            push(ids.c[i], ids.error, vec![p_atom(Rel::Eq)], Action::Receive(msg_inc(i)), false, true);
            push(ids.inc1[i][i], ids.inc2[i][i], vec![], Action::Send(msg_nc(i)), false, true);
            push(ids.inc2[i][i], ids.idle, vec![p_atom(Rel::Eq)], Action::Send(msg_oc(i)), false, true);
            push(ids.idle, ids.nc1[i], vec![], Action::Receive(msg_nc(i)), true, true);
            push(ids.nc1[i], ids.nc2[i], vec![c_atom(Rel::Eq, 1)], Action::Receive(msg_oc(i)), false, true);
            push(ids.nc2[i], ids.c[i], vec![], Action::Receive(msg_tick()), false, true);
            push(ids.c[j], ids.inc1[i][j], vec![], Action::Receive(msg_inc(i)), false, true);
            push(ids.inc1[i][j], ids.inc2[i][j], vec![p_atom(Rel::Eq)], Action::Internal, true, true);
            push(ids.inc2[i][j], ids.c[j], vec![], Action::Receive(msg_tick()), false, true);
        }
        if has[1][i] {
            push(
                ids.c[i],
                ids.dec1[i][i],
                vec![c_atom(Rel::Gt, 1), p_atom(Rel::Lt)],
                Action::Receive(msg_dec(i)),
                false,
                true,
            );
            push(ids.dec1[i][i], ids.dec2[i][i], vec![p_atom(Rel::Eq)], Action::Internal, true, true);
            push(ids.dec2[i][i], ids.dec3[i], vec![c_atom(Rel::Eq, 1)], Action::Internal, true, true);
            push(ids.dec3[i], ids.c[i], vec![], Action::Receive(msg_tick()), false, true);
            push(ids.c[j], ids.dec1[i][j], vec![], Action::Receive(msg_dec(i)), false, true);
            push(ids.dec1[i][j], ids.dec2[i][j], vec![p_atom(Rel::Eq)], Action::Internal, true, true);
            push(ids.dec2[i][j], ids.c[j], vec![], Action::Receive(msg_tick()), false, true);
        }
        if has[2][i] {
            push(ids.c[i], ids.zt1[i][i], vec![], Action::Receive(msg_zt(i)), false, true);
            push(ids.zt1[i][i], ids.zt2[i][i], vec![p_atom(Rel::Eq)], Action::Send(msg_cnt(i)), true, true);
            push(ids.zt2[i][i], ids.c[i], vec![], Action::Receive(msg_tick()), false, true);
            push(ids.c[j], ids.zt1[i][j], vec![], Action::Receive(msg_zt(i)), false, true);
            push(ids.zt1[i][j], ids.zt2[i][j], vec![p_atom(Rel::Eq)], Action::Internal, true, true);
            push(ids.zt2[i][j], ids.c[j], vec![], Action::Receive(msg_tick()), false, true);
        }
    }

    for (s, k) in ids.ctrl.iter().enumerate() {
        let Some(&instr) = m.prog.get(&s) else {
            continue;
        };
        match instr {
            Instr::Inc(c, next) => {
                let i = c.index();
                push(k[0], k[1], vec![c_atom(Rel::Eq, 1)], Action::Send(msg_inc(i)), false, true);
                push(k[1], ids.ctrl[next][0], vec![p_atom(Rel::Eq)], Action::Send(msg_tick()), true, true);
            }
            Instr::Dec(c, next) => {
                let i = c.index();
                push(k[0], k[1], vec![c_atom(Rel::Eq, 1)], Action::Send(msg_dec(i)), false, true);
                push(k[1], ids.ctrl[next][0], vec![p_atom(Rel::Eq)], Action::Send(msg_tick()), true, true);
            }
            Instr::Ifz(c, zero, nonzero) => {
                let i = c.index();
                push(k[0], k[1], vec![c_atom(Rel::Eq, 1)], Action::Send(msg_zt(i)), false, true);
                push(k[1], k[2], vec![p_atom(Rel::Eq)], Action::Receive(msg_cnt(i)), false, true);
                push(k[1], k[3], vec![p_atom(Rel::Lt)], Action::Receive(msg_cnt(i)), false, true);
                push(k[2], ids.ctrl[zero][0], vec![p_atom(Rel::Eq)], Action::Send(msg_tick()), true, true);
                push(k[3], ids.ctrl[nonzero][0], vec![p_atom(Rel::Eq)], Action::Send(msg_tick()), true, true);
            }
        }
    }

    Ok(Protocol {
        name: if with_integer_gadget {
            "counter_sim_reconf_probe".into()
        } else {
            "counter_sim_reconf".into()
        },
        locations,
        clocks: vec!["x".into()],
        messages,
        params: vec!["p".into()],
        init: if with_integer_gadget { LocId(0) } else { ids.linit },
        edges,
        bounds: BTreeMap::new(),
        meta: SourceMap::default(),
    })
}

/// Standalone integrality probe: one process loops broadcasting `now` at
/// `x = p`, another resets every time unit and hears the broadcast either at
/// clock zero (integer `p`, reaching `q0`) or strictly inside a unit
/// (reaching `notinteger`).
pub fn integer_gadget() -> Protocol {
    let mut edges = Vec::new();
    let g0 = LocId(0);
    let g1 = LocId(1);
    let g2 = LocId(2);
    let q0 = LocId(3);
    let ni = LocId(4);
    let now = MsgId(0);
    let mut push = |src: LocId, dst: LocId, guard: Vec<AtomicConstraint>, action: Action, reset: bool| {
        edges.push(crate::model::Edge {
            source: src,
            guard,
            action,
            resets: if reset {
                [ClockId(0)].into_iter().collect()
            } else {
                BTreeSet::new()
            },
            target: dst,
        });
    };
    push(g0, g1, vec![], Action::Internal, false);
    push(g0, g2, vec![], Action::Internal, false);
    push(g1, g1, vec![p_atom(Rel::Eq)], Action::Send(now), false);
    push(g2, g2, vec![c_atom(Rel::Eq, 1)], Action::Internal, true);
    push(g2, q0, vec![c_atom(Rel::Eq, 0)], Action::Receive(now), false);
    push(g2, ni, vec![c_atom(Rel::Gt, 0), c_atom(Rel::Lt, 1)], Action::Receive(now), false);
    Protocol {
        name: "integer_probe".into(),
        locations: ["g0", "g1", "g2", "q0", "notinteger"].map(String::from).to_vec(),
        clocks: vec!["x".into()],
        messages: vec!["now".into()],
        params: vec!["p".into()],
        init: g0,
        edges,
        bounds: BTreeMap::new(),
        meta: SourceMap::default(),
    }
}

/// Does the network configuration mirror the machine configuration under an
/// integer parameter value? Every process must either have drifted above the
/// parameter or sit in a counter location, the current controller entry
/// location, or idle; live same-location clocks must agree; and each counter
/// equals the clock offset between its representatives and the controller.
pub fn config_encodes(
    p: &Protocol,
    m: &TwoCounterMachine,
    cfg: &Config,
    s: &MachineConfig,
    pval: &Rat,
) -> bool {
    let (_, ids) = reconf_layout(m, p.loc_id("g0").is_some());
    let k1 = ids.ctrl[s.label][0];
    let c1 = ids.c[0];
    let c2 = ids.c[1];
    let idle = ids.idle;

    for (i, &l) in cfg.locs.iter().enumerate() {
        let clk = &cfg.clocks[i][0];
        if clk > pval || l == c1 || l == c2 || l == k1 || l == idle {
            continue;
        }
        return false;
    }

    let mut per_loc: BTreeMap<LocId, Rat> = BTreeMap::new();
    for (i, &l) in cfg.locs.iter().enumerate() {
        let clk = &cfg.clocks[i][0];
        if clk > pval || l == idle {
            continue;
        }
        match per_loc.get(&l) {
            None => {
                per_loc.insert(l, clk.clone());
            }
            Some(seen) if seen == clk => {}
            Some(_) => return false,
        }
    }

    for (i, &l) in cfg.locs.iter().enumerate() {
        if l != k1 {
            continue;
        }
        let z = &cfg.clocks[i][0];
        for (j, &l2) in cfg.locs.iter().enumerate() {
            let v = if l2 == c1 {
                s.c1
            } else if l2 == c2 {
                s.c2
            } else {
                continue;
            };
            if &cfg.clocks[j][0] - z != rat_int(v) {
                return false;
            }
        }
    }
    true
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ScheduleError {
    #[error(transparent)]
    Machine(#[from] MachineError),
    #[error("idle pool too small: the schedule needs {need} processes, got {have}")]
    PoolTooSmall { need: usize, have: usize },
    #[error("round {round}: counter values do not fit inside parameter value {pval}")]
    Window { round: usize, pval: u64 },
}

/// A schedule for `encode_ef_reconf(machine, false)` at an integer parameter
/// value: instruction broadcasts at `k*p + 1`, notifications and resets when
/// the acting clock hits the parameter, ticks at multiples of `p`, and idle
/// self-resets to keep the pool recruitable. Replaying it on the substituted
/// protocol passes through a mirror of the interpreter run at every
/// `k*p + 1/2`.
pub fn guided_run(
    m: &TwoCounterMachine,
    pval: u64,
    n: usize,
    max_rounds: usize,
) -> Result<Vec<Label>, ScheduleError> {
    let interp = interpret(m, max_rounds)?;
    let proto = encode_ef_reconf(m, false)?;
    let (_, ids) = reconf_layout(m, false);
    let mut edge_ix: BTreeMap<(LocId, LocId), usize> = BTreeMap::new();
    for (e, edge) in proto.edges.iter().enumerate() {
        let prev = edge_ix.insert((edge.source, edge.target), e);
        debug_assert!(prev.is_none(), "generated edges are unique per location pair");
    }
    let ix = |src: LocId, dst: LocId| edge_ix[&(src, dst)];

    let mut refs = [false; 2];
    for instr in m.prog.values() {
        refs[instr.counter().index()] = true;
    }
    let rounds = interp.run.len() - 1;
    let incs = (0..rounds)
        .filter(|&k| matches!(m.prog[&interp.run[k].label], Instr::Inc(..)))
        .count();
    let ref_count = refs.iter().filter(|&&r| r).count();
    let need = (2 + interp.max_counter_sum as usize + incs).max(1 + ref_count + incs);
    if n < need {
        return Err(ScheduleError::PoolTooSmall { need, have: n });
    }
    for k in 0..rounds {
        let here = &interp.run[k];
        let instr = m.prog[&here.label];
        let i = instr.counter();
        let fits = pval >= 2
            && here.c1 <= pval - 1
            && here.c2 <= pval - 1
            && match instr {
                Instr::Inc(..) | Instr::Dec(..) => here.counter(i) <= pval - 2,
                Instr::Ifz(..) => true,
            };
        if !fits {
            return Err(ScheduleError::Window { round: k, pval });
        }
    }

    let mut rep: [Option<usize>; 2] = [None, None];
    let mut pid = 1;
    for i in 0..2 {
        if refs[i] {
            rep[i] = Some(pid);
            pid += 1;
        }
    }
    let mut pool: Vec<usize> = (pid..n).collect();

    struct Ev {
        t: Rat,
        seq: u32,
        label: Label,
    }
    let mut evs: Vec<Ev> = Vec::new();
    let at = |evs: &mut Vec<Ev>, t: Rat, seq: u32, actor: usize, edge: usize, recv: &[usize]| {
        evs.push(Ev {
            t,
            seq,
            label: Label {
                delay: Rat::from_integer(0.into()),
                actor,
                edge,
                receivers: recv.iter().copied().collect(),
                choices: BTreeMap::new(),
            },
        });
    };

    at(&mut evs, rat_int(0), 0, 0, ix(ids.linit, ids.ctrl[m.init][0]), &[]);
    for i in 0..2 {
        if let Some(r) = rep[i] {
            at(&mut evs, rat_int(0), 1 + i as u32, r, ix(ids.linit, ids.c[i]), &[]);
        }
    }
    for (o, &q) in pool.iter().enumerate() {
        at(&mut evs, rat_int(0), 3 + o as u32, q, ix(ids.linit, ids.idle), &[]);
    }

    let p = rat_int(pval);
    for k in 0..rounds {
        let here = &interp.run[k];
        let next = &interp.run[k + 1];
        let instr = m.prog[&here.label];
        let i = instr.counter().index();
        let j = 1 - i;
        let base = rat_int(k as u64) * &p;
        let vi = here.counter(instr.counter());
        let vj = here.counter(if i == 0 { Counter::C2 } else { Counter::C1 });
        let ri = rep[i].expect("instruction counter has a representative");
        let k_ctrl = ids.ctrl[here.label];
        let both: Vec<usize> = rep.iter().flatten().copied().collect();

        at(&mut evs, &base + rat_int(1), 0, 0, ix(k_ctrl[0], k_ctrl[1]), &both);
        let mut tick_recv: Vec<usize> = Vec::new();
        let tick_from = match instr {
            Instr::Inc(..) => {
                let recruit = pool.remove(0);
                at(
                    &mut evs,
                    &base + &p - rat_int(1 + vi),
                    1,
                    ri,
                    ix(ids.inc1[i][i], ids.inc2[i][i]),
                    &[recruit],
                );
                at(&mut evs, &base + &p - rat_int(vi), 2, ri, ix(ids.inc2[i][i], ids.idle), &[recruit]);
                rep[i] = Some(recruit);
                tick_recv.push(recruit);
                k_ctrl[1]
            }
            Instr::Dec(..) => {
                at(&mut evs, &base + &p - rat_int(vi), 1, ri, ix(ids.dec1[i][i], ids.dec2[i][i]), &[]);
                at(
                    &mut evs,
                    &base + &p - rat_int(vi - 1),
                    2,
                    ri,
                    ix(ids.dec2[i][i], ids.dec3[i]),
                    &[],
                );
                tick_recv.push(ri);
                k_ctrl[1]
            }
            Instr::Ifz(..) => {
                at(&mut evs, &base + &p - rat_int(vi), 1, ri, ix(ids.zt1[i][i], ids.zt2[i][i]), &[0]);
                tick_recv.push(ri);
                if vi == 0 {
                    k_ctrl[2]
                } else {
                    k_ctrl[3]
                }
            }
        };
        if let Some(rj) = rep[j] {
            let mid = match instr {
                Instr::Inc(..) => ix(ids.inc1[i][j], ids.inc2[i][j]),
                Instr::Dec(..) => ix(ids.dec1[i][j], ids.dec2[i][j]),
                Instr::Ifz(..) => ix(ids.zt1[i][j], ids.zt2[i][j]),
            };
            at(&mut evs, &base + &p - rat_int(vj), 3, rj, mid, &[]);
            tick_recv.push(rj);
        }
        at(&mut evs, &base + &p, 5, 0, ix(tick_from, ids.ctrl[next.label][0]), &tick_recv);
        for (o, &q) in pool.iter().enumerate() {
            at(&mut evs, &base + &p, 6 + o as u32, q, ix(ids.idle, ids.idle), &[]);
        }
    }

    evs.sort_by(|a, b| a.t.cmp(&b.t).then(a.seq.cmp(&b.seq)));
    let mut out = Vec::with_capacity(evs.len());
    let mut prev = rat_int(0);
    for mut ev in evs {
        ev.label.delay = &ev.t - &prev;
        prev = ev.t;
        out.push(ev.label);
    }
    Ok(out)
}

/// Clique location and edge layout shared by the untimed halting encoding and
/// the timed goal encoding.
struct CliqueMap {
    init: LocId,
    idle: LocId,
    err: LocId,
    goal: Option<LocId>,
    c: [LocId; 2],
    c_inc: [LocId; 2],
    c_dec: [LocId; 2],
    c_zt: [LocId; 2],
    /// Controller state and its acknowledge-wait companion per machine state.
    ctrl: Vec<[LocId; 2]>,
}

const CLIQUE_MESSAGES: [&str; 9] = ["ok", "inc1", "inc2", "dec1", "dec2", "z1", "z2", "nz1", "nz2"];

fn cq_ok() -> MsgId {
    MsgId(0)
}
fn cq_inc(i: usize) -> MsgId {
    MsgId(1 + i)
}
fn cq_dec(i: usize) -> MsgId {
    MsgId(3 + i)
}
fn cq_z(i: usize) -> MsgId {
    MsgId(5 + i)
}
fn cq_nz(i: usize) -> MsgId {
    MsgId(7 + i)
}

fn clique_layout(m: &TwoCounterMachine, with_goal: bool) -> (Vec<String>, CliqueMap) {
    let mut names: Vec<String> = ["init", "idle", "err"].map(String::from).to_vec();
    if with_goal {
        names.push("goal".into());
    }
    names.extend(["c1", "c1_i", "c1_d", "c1_z", "c2", "c2_i", "c2_d", "c2_z"].map(String::from));
    let mut taken: BTreeSet<String> = names.iter().cloned().collect();
    let mut ctrl = Vec::with_capacity(m.states.len());
    for s in &m.states {
        let stem = {
            let mut stem = s.clone();
            while taken.contains(&stem) || taken.contains(&format!("{}_w", stem)) {
                stem = format!("m_{}", stem);
            }
            stem
        };
        let wait = format!("{}_w", stem);
        taken.insert(stem.clone());
        taken.insert(wait.clone());
        names.push(stem);
        let k = LocId(names.len() - 1);
        names.push(wait);
        ctrl.push([k, LocId(names.len() - 1)]);
    }
    let goal_off = usize::from(with_goal);
    let at = |off: usize| LocId(off);
    let cbase = 3 + goal_off;
    let map = CliqueMap {
        init: at(0),
        idle: at(1),
        err: at(2),
        goal: with_goal.then(|| at(3)),
        c: [at(cbase), at(cbase + 4)],
        c_inc: [at(cbase + 1), at(cbase + 5)],
        c_dec: [at(cbase + 2), at(cbase + 6)],
        c_zt: [at(cbase + 3), at(cbase + 7)],
        ctrl,
    };
    (names, map)
}

fn clique_core_edges(m: &TwoCounterMachine, ids: &CliqueMap, edges: &mut Vec<crate::model::Edge>) {
    let mut push = |src: LocId, dst: LocId, action: Action| {
        edges.push(crate::model::Edge {
            source: src,
            guard: vec![],
            action,
            resets: BTreeSet::new(),
            target: dst,
        });
    };
    push(ids.init, ids.ctrl[m.init][0], Action::Send(cq_ok()));
    push(ids.init, ids.idle, Action::Receive(cq_ok()));

    let mut has = [[false; 2]; 3];
    for instr in m.prog.values() {
        let i = instr.counter().index();
        match instr {
            Instr::Inc(..) => has[0][i] = true,
            Instr::Dec(..) => has[1][i] = true,
            Instr::Ifz(..) => has[2][i] = true,
        }
    }
    for i in 0..2 {
        if has[0][i] {
            push(ids.idle, ids.c_inc[i], Action::Receive(cq_inc(i)));
            push(ids.c_inc[i], ids.c[i], Action::Send(cq_ok()));
            push(ids.c_inc[i], ids.idle, Action::Receive(cq_ok()));
        }
        if has[1][i] {
            push(ids.c[i], ids.c_dec[i], Action::Receive(cq_dec(i)));
            push(ids.c_dec[i], ids.idle, Action::Send(cq_ok()));
            push(ids.c_dec[i], ids.c[i], Action::Receive(cq_ok()));
        }
        if has[2][i] {
            push(ids.c[i], ids.err, Action::Receive(cq_z(i)));
            push(ids.c[i], ids.c_zt[i], Action::Receive(cq_nz(i)));
            push(ids.c_zt[i], ids.c[i], Action::Send(cq_ok()));
            push(ids.c_zt[i], ids.c[i], Action::Receive(cq_ok()));
        }
    }
    for (s, k) in ids.ctrl.iter().enumerate() {
        let Some(&instr) = m.prog.get(&s) else {
            continue;
        };
        match instr {
            Instr::Inc(c, next) => {
                push(k[0], k[1], Action::Send(cq_inc(c.index())));
                push(k[1], ids.ctrl[next][0], Action::Receive(cq_ok()));
            }
            Instr::Dec(c, next) => {
                push(k[0], k[1], Action::Send(cq_dec(c.index())));
                push(k[1], ids.ctrl[next][0], Action::Receive(cq_ok()));
            }
            Instr::Ifz(c, zero, nonzero) => {
                push(k[0], ids.ctrl[zero][0], Action::Send(cq_z(c.index())));
                push(k[0], k[1], Action::Send(cq_nz(c.index())));
                push(k[1], ids.ctrl[nonzero][0], Action::Receive(cq_ok()));
            }
        }
    }
}

/// Untimed clique encoding of the halting problem: counter values are process
/// counts, zero tests are nondeterministic guesses punished on the counter
/// side, and the accepting controller state feeds the error sink.
pub fn encode_af_clique(m: &TwoCounterMachine) -> Result<Protocol, MachineError> {
    m.validate()?;
    let (locations, ids) = clique_layout(m, false);
    let mut edges = Vec::new();
    clique_core_edges(m, &ids, &mut edges);
    edges.push(crate::model::Edge {
        source: ids.ctrl[m.accept][0],
        guard: vec![],
        action: Action::Internal,
        resets: BTreeSet::new(),
        target: ids.err,
    });
    Ok(Protocol {
        name: "counter_sim_clique_halt".into(),
        locations,
        clocks: vec![],
        messages: CLIQUE_MESSAGES.map(String::from).to_vec(),
        params: vec![],
        init: ids.init,
        edges,
        bounds: BTreeMap::new(),
        meta: SourceMap::default(),
    })
}

fn open_left_unit() -> ParamBound {
    ParamBound::new(0, Some(1), false, true).expect("the unit interval is not empty")
}

/// Timing of the end-of-simulation loop in the timed clique encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EndTiming {
    /// `x < pu` on the repeat edge, `x > pl` on the goal edge, with
    /// `pu in (0,1]` and `pl in [0, lower_cap]`.
    TwoParams { lower_cap: u64 },
    /// Upper parameter only; the goal edge compares against the constant 1.
    UpperOnly,
    /// Lower parameter only, unbounded; the repeat edge compares against 1.
    LowerOnly,
}

/// Timed clique encoding of repeated accepting simulation: the clique core
/// plus a clocked end-of-simulation loop from the accepting state back to the
/// start, releasing idle processes to the goal once their clocks outgrow the
/// lower bound.
pub fn encode_ef_univ_clique(m: &TwoCounterMachine, timing: EndTiming) -> Result<Protocol, MachineError> {
    m.validate()?;
    let (locations, ids) = clique_layout(m, true);
    let mut edges = Vec::new();
    clique_core_edges(m, &ids, &mut edges);

    let (params, bounds, upper, lower) = match timing {
        EndTiming::TwoParams { lower_cap } => (
            vec!["pu".to_string(), "pl".to_string()],
            [
                (ParamId(0), open_left_unit()),
                (ParamId(1), ParamBound::closed(0, lower_cap)),
            ]
            .into_iter()
            .collect(),
            GuardBound::Param(ParamId(0)),
            GuardBound::Param(ParamId(1)),
        ),
        EndTiming::UpperOnly => (
            vec!["pu".to_string()],
            [(ParamId(0), open_left_unit())].into_iter().collect(),
            GuardBound::Param(ParamId(0)),
            GuardBound::Const(rat_int(1)),
        ),
        EndTiming::LowerOnly => (
            vec!["pl".to_string()],
            [(ParamId(0), ParamBound::UNBOUNDED)].into_iter().collect(),
            GuardBound::Const(rat_int(1)),
            GuardBound::Param(ParamId(0)),
        ),
    };
    let end = MsgId(CLIQUE_MESSAGES.len());
    edges.push(crate::model::Edge {
        source: ids.ctrl[m.accept][0],
        guard: vec![atom(Rel::Lt, upper)],
        action: Action::Send(end),
        resets: [ClockId(0)].into_iter().collect(),
        target: ids.ctrl[m.init][0],
    });
    edges.push(crate::model::Edge {
        source: ids.idle,
        guard: vec![atom(Rel::Gt, lower)],
        action: Action::Receive(end),
        resets: BTreeSet::new(),
        target: ids.goal.expect("goal layout"),
    });
    for i in 0..2 {
        edges.push(crate::model::Edge {
            source: ids.c[i],
            guard: vec![],
            action: Action::Receive(end),
            resets: BTreeSet::new(),
            target: ids.idle,
        });
    }

    let mut messages = CLIQUE_MESSAGES.map(String::from).to_vec();
    messages.push("end".into());
    Ok(Protocol {
        name: "counter_sim_clique_goal".into(),
        locations,
        clocks: vec!["x".into()],
        messages,
        params,
        init: ids.init,
        edges,
        bounds,
        meta: SourceMap::default(),
    })
}

/// Serializes a generated protocol with a comment header recording the source
/// machine and the generator that produced it.
pub fn serialize_generated(p: &Protocol, m: &TwoCounterMachine, variant: &str) -> String {
    let mut out = String::new();
    out.push_str(&format!("# generated by: {}\n", variant));
    out.push_str("# source machine:\n");
    for line in crate::textio::serialize_two_counter_machine(m).lines() {
        out.push_str(&format!("#   {}\n", line));
    }
    out.push_str(&crate::textio::serialize_protocol(p));
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{classify, rat, substitute, valuation_of, validate, Boundedness, FragmentClass};
    use crate::semantics::{enabled_labels, replay, Mode, RunEnd};
    use crate::textio::{parse_protocol, parse_two_counter_machine, serialize_two_counter_machine};

    fn inc_dec_ifz() -> TwoCounterMachine {
        parse_two_counter_machine(
            "init k0\naccept kacc\nk0: inc c1 goto k1\nk1: dec c1 goto k2\nk2: ifz c1 goto kacc else k0\n",
        )
        .unwrap()
    }

    fn bump_twice() -> TwoCounterMachine {
        parse_two_counter_machine(
            "init k0\naccept kacc\nk0: inc c1 goto k1\nk1: ifz c2 goto k2 else k0\nk2: inc c2 goto k3\nk3: ifz c1 goto k0 else kacc\n",
        )
        .unwrap()
    }

    #[test]
    fn interpreter_follows_the_successor_rules() {
        let m = inc_dec_ifz();
        let out = interpret(&m, 100).unwrap();
        assert_eq!(out.status, MachineStatus::Halted);
        assert_eq!(out.run.len(), 4);
        assert_eq!(out.max_counter_sum, 1);
        let path: Vec<(&str, u64, u64)> = out
            .run
            .iter()
            .map(|s| (m.state_name(s.label), s.c1, s.c2))
            .collect();
        assert_eq!(
            path,
            vec![("k0", 0, 0), ("k1", 1, 0), ("k2", 0, 0), ("kacc", 0, 0)]
        );

        let spin = parse_two_counter_machine("init k0\naccept kacc\nk0: ifz c1 goto k0 else k0\nkacc: inc c1 goto k0\n");
        assert!(spin.is_err() || spin.unwrap().validate().is_err());
        let spin = parse_two_counter_machine("init k0\naccept kacc\nk0: ifz c1 goto k0 else k0\n");
        let spin = spin.unwrap();
        assert_eq!(interpret(&spin, 1000).unwrap().status, MachineStatus::Running);

        let quiet = parse_two_counter_machine("init k\naccept k\n").unwrap();
        let out = interpret(&quiet, 10).unwrap();
        assert_eq!(out.status, MachineStatus::Halted);
        assert_eq!(out.run.len(), 1);
        assert_eq!(out.max_counter_sum, 0);
    }

    #[test]
    fn machine_validation_rejects_dangling_programs() {
        let m = parse_two_counter_machine("init k0\naccept kacc\nk0: inc c1 goto nowhere\n").unwrap();
        assert_eq!(
            m.validate(),
            Err(MachineError::MissingInstruction {
                state: "nowhere".into()
            })
        );
        let mut m = inc_dec_ifz();
        m.prog.insert(m.accept, Instr::Inc(Counter::C1, 0));
        assert_eq!(
            m.validate(),
            Err(MachineError::AcceptInstruction { state: "kacc".into() })
        );
    }

    #[test]
    fn normalization_drains_counters_before_accepting() {
        let m = normalize_machine(&bump_twice());
        assert!(m.validate().is_ok());
        let out = interpret(&m, 1000).unwrap();
        assert_eq!(out.status, MachineStatus::Halted);
        let last = out.run.last().unwrap();
        assert_eq!((last.c1, last.c2), (0, 0));
        let tail: Vec<&str> = out.run[out.run.len() - 3..].iter().map(|s| m.state_name(s.label)).collect();
        assert_eq!(tail, vec!["check1", "check2", "stop"]);

        let spin = parse_two_counter_machine("init k0\naccept kacc\nk0: ifz c1 goto k0 else k0\n").unwrap();
        let spin = normalize_machine(&spin);
        assert_eq!(interpret(&spin, 500).unwrap().status, MachineStatus::Running);
    }

    #[test]
    fn reconf_encoding_matches_the_fixed_location_budget() {
        let p = encode_ef_reconf(&inc_dec_ifz(), false).unwrap();
        assert_eq!(p.locations.len(), 35 + 4 * 4);
        assert_eq!(p.clocks.len(), 1);
        assert_eq!(p.params.len(), 1);
        assert!(validate(&p).is_empty());
        assert_eq!(classify(&p).class, FragmentClass::General);
        for e in &p.edges {
            let capped = e
                .guard
                .iter()
                .any(|a| a.rel == Rel::Le && a.bound == GuardBound::Param(ParamId(0)));
            assert!(capped, "edge {} -> {} lacks the parameter cap", p.loc_name(e.source), p.loc_name(e.target));
        }

        let quiet = parse_two_counter_machine("init k\naccept k\n").unwrap();
        let p = encode_ef_reconf(&quiet, false).unwrap();
        let start = p.loc_id("linit").unwrap();
        let acc = p.loc_id("k_1").unwrap();
        assert!(p.edges.iter().any(|e| e.source == start && e.target == acc));
    }

    #[test]
    fn gadget_variant_starts_inside_the_probe() {
        let plain = encode_ef_reconf(&inc_dec_ifz(), false).unwrap();
        let p = encode_ef_reconf(&inc_dec_ifz(), true).unwrap();
        assert_eq!(p.init, p.loc_id("g0").unwrap());
        assert!(p.loc_id("notinteger").is_none());
        assert!(p.locations.len() > plain.locations.len() + 3, "normalization adds controller states");

        let linit = p.loc_id("linit").unwrap();
        let entries: Vec<&crate::model::Edge> = p.edges.iter().filter(|e| e.target == linit).collect();
        assert_eq!(entries.len(), 1);
        assert!(matches!(entries[0].action, Action::Receive(_)));
        assert_eq!(entries[0].guard, vec![c_atom(Rel::Eq, 0)]);

        let err = p.loc_id("error").unwrap();
        let g2 = p.loc_id("g2").unwrap();
        assert!(p
            .edges
            .iter()
            .any(|e| e.source == g2 && e.target == err && e.guard == vec![c_atom(Rel::Gt, 0), c_atom(Rel::Lt, 1)]));
    }

    #[test]
    fn encoded_configurations_mirror_machine_configurations() {
        let m = inc_dec_ifz();
        let p = encode_ef_reconf(&m, false).unwrap();
        let half = rat(1, 2);
        let pv = rat_int(4);
        let at = |name: &str| p.loc_id(name).unwrap();
        let sid = |name: &str| m.states.iter().position(|s| s == name).unwrap();

        let cfg = Config {
            locs: vec![at("k0_1"), at("c1"), at("c2"), at("idle")],
            clocks: vec![vec![half.clone()]; 4],
        };
        let s0 = MachineConfig {
            label: sid("k0"),
            c1: 0,
            c2: 0,
        };
        assert!(config_encodes(&p, &m, &cfg, &s0, &pv));

        let v1 = 2u64;
        let v2 = 1u64;
        let cfg = Config {
            locs: vec![at("k2_1"), at("c1"), at("c2")],
            clocks: vec![
                vec![rat_int(0)],
                vec![rat_int(v1 - 1)],
                vec![rat_int(v2)],
            ],
        };
        let s = MachineConfig {
            label: sid("k2"),
            c1: v1 - 1,
            c2: v2,
        };
        assert!(config_encodes(&p, &m, &cfg, &s, &pv));
        let off = MachineConfig {
            label: sid("k2"),
            c1: v1,
            c2: v2,
        };
        assert!(!config_encodes(&p, &m, &cfg, &off, &pv));

        let stuck = Config {
            locs: vec![at("k1_2"), at("c1"), at("dec2_1_2")],
            clocks: vec![vec![rat_int(3)], vec![rat_int(3)], vec![rat_int(0)]],
        };
        for label in 0..m.states.len() {
            for c1 in 0..3 {
                let s = MachineConfig { label, c1, c2: 0 };
                assert!(!config_encodes(&p, &m, &stuck, &s, &pv));
            }
        }
    }

    #[test]
    fn guided_runs_track_the_interpreter() {
        let m = inc_dec_ifz();
        for pval in [3u64, 4] {
            let labels = guided_run(&m, pval, 4, 100).unwrap();
            let proto = encode_ef_reconf(&m, false).unwrap();
            let conc = substitute(&proto, &valuation_of(&proto, &[("p", rat_int(pval))]).unwrap()).unwrap();
            let (exec, _) = replay(&conc, Mode::Reconfigurable, 4, &labels).unwrap();
            let interp = interpret(&m, 100).unwrap();
            let half = rat(1, 2);
            for (k, s) in interp.run.iter().enumerate() {
                let t = rat_int(k as u64 * pval) + &half;
                let cfg = exec.config_at_time(&t).unwrap();
                assert!(
                    config_encodes(&proto, &m, &cfg, s, &rat_int(pval)),
                    "snapshot {} of run at p={} does not mirror the machine",
                    k,
                    pval
                );
            }
            let acc = proto.loc_id("kacc_1").unwrap();
            assert!(exec.last().locs.contains(&acc));
        }

        assert_eq!(
            guided_run(&m, 4, 3, 100),
            Err(ScheduleError::PoolTooSmall { need: 4, have: 3 })
        );
        assert_eq!(guided_run(&m, 2, 4, 100), Err(ScheduleError::Window { round: 1, pval: 2 }));
    }

    fn clique_schedule(m: &TwoCounterMachine, p: &Protocol, n: usize, horizon: usize) -> Vec<Label> {
        let (_, ids) = clique_layout(m, false);
        let interp = interpret(m, horizon).unwrap();
        let find = |src: LocId, dst: LocId, send: bool| {
            p.edges
                .iter()
                .position(|e| {
                    e.source == src && e.target == dst && matches!(e.action, Action::Send(_)) == send
                })
                .expect("edge in clique layout")
        };
        let zero = rat_int(0);
        let everyone = |actor: usize| -> BTreeSet<usize> { (0..n).filter(|&q| q != actor).collect() };
        let send = |actor: usize, edge: usize| Label {
            delay: zero.clone(),
            actor,
            edge,
            receivers: everyone(actor),
            choices: BTreeMap::new(),
        };
        let mut labels = vec![send(0, find(ids.init, ids.ctrl[m.init][0], true))];
        let mut counts = [Vec::<usize>::new(), Vec::new()];
        let mut idle: Vec<usize> = (1..n).collect();
        for w in interp.run.windows(2) {
            let here = &w[0];
            let instr = m.prog[&here.label];
            let i = instr.counter().index();
            let k = ids.ctrl[here.label];
            match instr {
                Instr::Inc(..) => {
                    labels.push(send(0, find(k[0], k[1], true)));
                    let chosen = idle.remove(0);
                    labels.push(send(chosen, find(ids.c_inc[i], ids.c[i], true)));
                    counts[i].push(chosen);
                }
                Instr::Dec(..) => {
                    labels.push(send(0, find(k[0], k[1], true)));
                    let leaver = counts[i].remove(0);
                    labels.push(send(leaver, find(ids.c_dec[i], ids.idle, true)));
                    idle.push(leaver);
                }
                Instr::Ifz(_, zero_t, _) => {
                    if w[1].label == zero_t {
                        labels.push(send(0, find(k[0], ids.ctrl[zero_t][0], true)));
                    } else {
                        labels.push(send(0, find(k[0], k[1], true)));
                        let speaker = counts[i][0];
                        labels.push(send(speaker, find(ids.c_zt[i], ids.c[i], true)));
                    }
                }
            }
        }
        labels
    }

    #[test]
    fn clique_counts_processes_per_counter_unit() {
        let m = bump_twice();
        let p = encode_af_clique(&m).unwrap();
        assert!(p.clocks.is_empty() && p.params.is_empty());
        assert!(validate(&p).is_empty());
        let interp = interpret(&m, 100).unwrap();
        let n = interp.max_counter_sum as usize + 2;
        let labels = clique_schedule(&m, &p, n, 100);
        let (exec, _) = replay(&p, Mode::Clique, n, &labels).unwrap();

        let (_, ids) = clique_layout(&m, false);
        let mut at_block = 0;
        let mut step_of_block = Vec::new();
        for w in interp.run.windows(2) {
            let instr = m.prog[&w[0].label];
            at_block += match instr {
                Instr::Ifz(_, z, _) if w[1].label == z => 1,
                Instr::Ifz(..) | Instr::Inc(..) | Instr::Dec(..) => 2,
            };
            step_of_block.push(at_block);
        }
        for (b, s) in step_of_block.iter().zip(interp.run.iter().skip(1)) {
            let cfg = &exec.states[*b + 1];
            for i in 0..2 {
                let have = cfg.locs.iter().filter(|&&l| l == ids.c[i]).count() as u64;
                let want = if i == 0 { s.c1 } else { s.c2 };
                assert_eq!(have, want, "counter {} after block reaching {:?}", i + 1, s);
            }
        }

        let acc = ids.ctrl[m.accept][0];
        assert!(exec.last().locs.contains(&acc));
        let to_err = p
            .edges
            .iter()
            .position(|e| e.source == acc && e.target == ids.err)
            .unwrap();
        let (post, _) = crate::semantics::step(
            &p,
            Mode::Clique,
            exec.last(),
            &Label::internal(rat_int(0), 0, to_err),
        )
        .unwrap();
        assert!(post.locs.contains(&ids.err));
    }

    #[test]
    fn lone_clique_controller_waits_forever_after_an_increment() {
        let m = bump_twice();
        let p = encode_af_clique(&m).unwrap();
        let (_, ids) = clique_layout(&m, false);
        let find = |src: LocId, dst: LocId| {
            p.edges
                .iter()
                .position(|e| e.source == src && e.target == dst && matches!(e.action, Action::Send(_)))
                .unwrap()
        };
        let k0 = ids.ctrl[m.init][0];
        let labels = vec![
            Label {
                delay: rat_int(0),
                actor: 0,
                edge: find(ids.init, k0),
                receivers: BTreeSet::new(),
                choices: BTreeMap::new(),
            },
            Label {
                delay: rat_int(0),
                actor: 0,
                edge: find(k0, ids.ctrl[m.init][1]),
                receivers: BTreeSet::new(),
                choices: BTreeMap::new(),
            },
        ];
        let (exec, end) = replay(&p, Mode::Clique, 1, &labels).unwrap();
        assert_eq!(end, RunEnd::Terminal);
        assert!(enabled_labels(&p, Mode::Clique, exec.last()).unwrap().is_empty());
    }

    #[test]
    fn end_loop_timing_advertises_one_sided_parameters() {
        let m = inc_dec_ifz();
        let p = encode_ef_univ_clique(&m, EndTiming::TwoParams { lower_cap: 3 }).unwrap();
        assert!(validate(&p).is_empty());
        assert_eq!(p.clocks.len(), 1);
        assert_eq!(p.params, vec!["pu".to_string(), "pl".to_string()]);
        let info = classify(&p);
        assert_eq!(info.class, FragmentClass::Lu);
        assert_eq!(info.boundedness, Boundedness::OpenBounded);
        assert_eq!(p.bounds[&ParamId(0)], ParamBound::new(0, Some(1), false, true).unwrap());
        assert_eq!(p.bounds[&ParamId(1)], ParamBound::closed(0, 3));

        let u = encode_ef_univ_clique(&m, EndTiming::UpperOnly).unwrap();
        assert_eq!(u.params, vec!["pu".to_string()]);
        assert_eq!(classify(&u).class, FragmentClass::U);

        let l = encode_ef_univ_clique(&m, EndTiming::LowerOnly).unwrap();
        assert_eq!(l.params, vec!["pl".to_string()]);
        let info = classify(&l);
        assert_eq!(info.class, FragmentClass::L);
        assert_eq!(info.boundedness, Boundedness::Unbounded);
    }

    fn gadget_labels(pv: &Rat) -> Vec<Label> {
        let zero = rat_int(0);
        let one = rat_int(1);
        let mut labels = vec![
            Label::internal(zero.clone(), 0, 0),
            Label::internal(zero.clone(), 1, 1),
        ];
        let mut t = zero.clone();
        while &t + &one <= *pv {
            t = &t + &one;
            labels.push(Label::internal(one.clone(), 1, 3));
        }
        let mut fire = Label::internal(pv - &t, 0, 2);
        fire.receivers.insert(1);
        labels.push(fire);
        labels
    }

    #[test]
    fn integer_probe_separates_integer_parameter_values() {
        for (pv, target) in [
            (rat_int(2), "q0"),
            (rat(3, 2), "notinteger"),
            (rat_int(0), "q0"),
        ] {
            let g = integer_gadget();
            let conc = substitute(&g, &valuation_of(&g, &[("p", pv.clone())]).unwrap()).unwrap();
            let (exec, _) = replay(&conc, Mode::Reconfigurable, 2, &gadget_labels(&pv)).unwrap();
            let want = g.loc_id(target).unwrap();
            assert_eq!(exec.last().locs[1], want, "listener end location for p={}", pv);
        }
    }

    #[test]
    fn generated_files_round_trip_with_their_pedigree() {
        let m = bump_twice();
        let listing = serialize_two_counter_machine(&m);
        let again = parse_two_counter_machine(&listing).unwrap();
        assert_eq!(parse_two_counter_machine(&serialize_two_counter_machine(&again)).unwrap(), again);

        let p = encode_ef_univ_clique(&m, EndTiming::TwoParams { lower_cap: 2 }).unwrap();
        let text = serialize_generated(&p, &m, "efu-clique");
        assert!(text.starts_with("# generated by: efu-clique\n"));
        assert!(text.contains("#   k0: inc c1 goto k1"));
        let back = parse_protocol(&text).unwrap();
        assert_eq!(back, p);
    }
}
