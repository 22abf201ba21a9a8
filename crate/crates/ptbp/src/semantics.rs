//! Network semantics: configurations of identical processes, delay plus
//! action steps, broadcast reception, random simulation and trace replay.

use std::collections::{BTreeMap, BTreeSet};

use num_traits::{Signed, Zero};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::model::{
    max_constant, rat_int, substitute, Action, GuardBound, LocId, ModelError, Protocol, Rat,
    Valuation,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Reconfigurable,
    Clique,
}

impl Mode {
    pub fn as_str(self) -> &'static str {
        match self {
            Mode::Reconfigurable => "reconfigurable",
            Mode::Clique => "clique",
        }
    }
}

/// State of a network: one location and one clock valuation per process.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Config {
    pub locs: Vec<LocId>,
    pub clocks: Vec<Vec<Rat>>,
}

impl Config {
    /// All processes in the initial location with every clock at zero.
    pub fn initial(p: &Protocol, n: usize) -> Config {
        Config {
            locs: vec![p.init; n],
            clocks: vec![vec![Rat::zero(); p.clocks.len()]; n],
        }
    }

    pub fn len(&self) -> usize {
        self.locs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.locs.is_empty()
    }

    pub fn delayed(&self, t: &Rat) -> Config {
        let mut c = self.clone();
        for v in &mut c.clocks {
            for x in v.iter_mut() {
                *x += t;
            }
        }
        c
    }
}

/// One network step: a delay, then one process fires an internal or send
/// edge. For a send, `receivers` is the set of addressed processes; each of
/// them with an enabled reception edge takes one, picked by `choices` when
/// several are enabled.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Label {
    pub delay: Rat,
    pub actor: usize,
    pub edge: usize,
    pub receivers: BTreeSet<usize>,
    pub choices: BTreeMap<usize, usize>,
}

impl Label {
    pub fn internal(delay: Rat, actor: usize, edge: usize) -> Label {
        Label {
            delay,
            actor,
            edge,
            receivers: BTreeSet::new(),
            choices: BTreeMap::new(),
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum StepError {
    #[error("negative delay")]
    NegativeDelay,
    #[error("actor {actor} is outside the network")]
    BadActor { actor: usize },
    #[error("edge {edge} cannot be fired by process {actor}")]
    BadEdge { actor: usize, edge: usize },
    #[error("guard of edge {edge} does not hold for process {process}")]
    GuardViolation { process: usize, edge: usize },
    #[error("guard still mentions a parameter; substitute a valuation first")]
    ParametricGuard,
    #[error("receiver {process} is outside the network or is the sender")]
    BadReceiver { process: usize },
    #[error("an internal step cannot address receivers")]
    ReceiversOnInternal,
    #[error("clique step must address every other process")]
    CliqueReceiverSet,
    #[error("edge {edge} is not an enabled reception for process {process}")]
    ReceptionChoiceInvalid { process: usize, edge: usize },
    #[error("process {process} has several enabled receptions and no choice")]
    AmbiguousReception { process: usize },
}

fn guard_holds(p: &Protocol, edge: usize, clocks: &[Rat]) -> Result<bool, StepError> {
    for a in &p.edges[edge].guard {
        let bound = match &a.bound {
            GuardBound::Const(c) => c,
            GuardBound::Param(_) => return Err(StepError::ParametricGuard),
        };
        if !a.rel.holds(&clocks[a.clock.0], bound) {
            return Ok(false);
        }
    }
    Ok(true)
}

fn apply_edge(p: &Protocol, edge: usize, cfg: &mut Config, process: usize) {
    let e = &p.edges[edge];
    cfg.locs[process] = e.target;
    for c in &e.resets {
        cfg.clocks[process][c.0] = Rat::zero();
    }
}

/// Reception edges of `process` enabled for message `m` after the delay.
fn enabled_receptions(p: &Protocol, cfg: &Config, process: usize, m: crate::model::MsgId) -> Result<Vec<usize>, StepError> {
    let mut out = Vec::new();
    for (k, e) in p.edges.iter().enumerate() {
        if e.action == Action::Receive(m)
            && e.source == cfg.locs[process]
            && guard_holds(p, k, &cfg.clocks[process])?
        {
            out.push(k);
        }
    }
    Ok(out)
}

/// Processes moved by the step, mapped to the edge each one took. The actor
/// is not included.
pub type Moved = BTreeMap<usize, usize>;

/// Applies one step to a configuration of a parameter-free protocol.
pub fn step(p: &Protocol, mode: Mode, cfg: &Config, label: &Label) -> Result<(Config, Moved), StepError> {
    if label.delay.is_negative() {
        return Err(StepError::NegativeDelay);
    }
    let n = cfg.len();
    if label.actor >= n {
        return Err(StepError::BadActor { actor: label.actor });
    }
    let mut next = cfg.delayed(&label.delay);

    let e = p.edges.get(label.edge).ok_or(StepError::BadEdge {
        actor: label.actor,
        edge: label.edge,
    })?;
    if e.source != next.locs[label.actor] || matches!(e.action, Action::Receive(_)) {
        return Err(StepError::BadEdge {
            actor: label.actor,
            edge: label.edge,
        });
    }
    if !guard_holds(p, label.edge, &next.clocks[label.actor])? {
        return Err(StepError::GuardViolation {
            process: label.actor,
            edge: label.edge,
        });
    }

    let mut moved = Moved::new();
    match e.action {
        Action::Internal => {
            if !label.receivers.is_empty() {
                return Err(StepError::ReceiversOnInternal);
            }
        }
        Action::Send(m) => {
            for &j in &label.receivers {
                if j >= n || j == label.actor {
                    return Err(StepError::BadReceiver { process: j });
                }
            }
            if mode == Mode::Clique && label.receivers.len() != n - 1 {
                return Err(StepError::CliqueReceiverSet);
            }
            for &j in &label.receivers {
                let enabled = enabled_receptions(p, &next, j, m)?;
                let take = match label.choices.get(&j) {
                    Some(&k) => {
                        if !enabled.contains(&k) {
                            return Err(StepError::ReceptionChoiceInvalid { process: j, edge: k });
                        }
                        Some(k)
                    }
                    None => match enabled.len() {
                        0 => None,
                        1 => Some(enabled[0]),
                        _ => return Err(StepError::AmbiguousReception { process: j }),
                    },
                };
                if let Some(k) = take {
                    moved.insert(j, k);
                }
            }
        }
        Action::Receive(_) => unreachable!("rejected above"),
    }

    apply_edge(p, label.edge, &mut next, label.actor);
    for (&j, &k) in &moved {
        apply_edge(p, k, &mut next, j);
    }
    Ok((next, moved))
}

/// A finite prefix of a run: the visited configurations and the steps
/// between them. `states.len() == labels.len() + 1`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Execution {
    pub mode: Mode,
    pub states: Vec<Config>,
    pub labels: Vec<Label>,
}

impl Execution {
    pub fn start(mode: Mode, init: Config) -> Execution {
        Execution {
            mode,
            states: vec![init],
            labels: Vec::new(),
        }
    }

    pub fn last(&self) -> &Config {
        self.states.last().expect("execution holds at least one state")
    }

    pub fn total_time(&self) -> Rat {
        self.labels.iter().map(|l| l.delay.clone()).sum()
    }

    /// Configuration as time `t`, after every step scheduled at or before
    /// `t` and with the remaining time elapsed in place.
    pub fn config_at_time(&self, t: &Rat) -> Option<Config> {
        if t.is_negative() {
            return None;
        }
        let mut entered = Rat::zero();
        let mut at = 0;
        for (i, l) in self.labels.iter().enumerate() {
            let next = &entered + &l.delay;
            if next > *t {
                break;
            }
            entered = next;
            at = i + 1;
        }
        Some(self.states[at].delayed(&(t - entered)))
    }
}

/// Whether a run prefix ended in a configuration with no possible action.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RunEnd {
    /// No delay enables any action; every continuation is delay only.
    Terminal,
    /// Stopped by the step budget; the run could continue.
    Truncated,
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("step {index}: {source}")]
pub struct ReplayError {
    pub index: usize,
    pub source: StepError,
}

/// Replays a recorded sequence of labels from the initial configuration.
pub fn replay(p: &Protocol, mode: Mode, n: usize, labels: &[Label]) -> Result<(Execution, RunEnd), ReplayError> {
    let mut exec = Execution::start(mode, Config::initial(p, n));
    for (index, label) in labels.iter().enumerate() {
        let (next, moved) = step(p, mode, exec.last(), label)
            .map_err(|source| ReplayError { index, source })?;
        let mut recorded = label.clone();
        recorded.choices = moved;
        exec.labels.push(recorded);
        exec.states.push(next);
    }
    let terminal = is_terminal(p, mode, exec.last()).map_err(|source| ReplayError {
        index: labels.len(),
        source,
    })?;
    let end = if terminal { RunEnd::Terminal } else { RunEnd::Truncated };
    Ok((exec, end))
}

/// Whether some process visits `goal` anywhere along the execution, the
/// initial configuration included.
pub fn reaches(exec: &Execution, goal: LocId) -> bool {
    exec.states.iter().any(|c| c.locs.contains(&goal))
}

#[derive(Debug, Error)]
pub enum ReplayUnderError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Replay(#[from] ReplayError),
}

/// Replays an execution's label sequence after substituting a different
/// valuation. For an L/U protocol this succeeds whenever `pval` relaxes
/// the valuation the execution was recorded under: lower parameters never
/// rise and upper parameters never fall, so every guard that held before
/// still holds. It may also succeed for unrelated valuations.
///
/// Broadcasts are re-addressed to the processes that actually moved in the
/// original run (replay and simulate both record them as choices). A wider
/// valuation can wake a reception that was disabled before; keeping such a
/// bystander in the receiver set would let it drift off the recorded run.
/// The result is always a reconfigurable-mode execution, which any clique
/// execution also is.
pub fn replay_under(
    p: &Protocol,
    exec: &Execution,
    pval: &Valuation,
) -> Result<Execution, ReplayUnderError> {
    let conc = substitute(p, pval)?;
    let n = exec.states[0].len();
    let labels: Vec<Label> = exec
        .labels
        .iter()
        .map(|l| {
            let mut l = l.clone();
            l.receivers = l.choices.keys().copied().collect();
            l
        })
        .collect();
    let (out, _) = replay(&conc, Mode::Reconfigurable, n, &labels)?;
    Ok(out)
}

/// Representative delays from `cfg`: every distance that puts some clock
/// exactly on a constant of the guard grid, midpoints between neighbouring
/// ones, zero, and one delay past the largest constant. For the rectangular
/// guards of the model, some action is enabled after some delay iff it is
/// enabled after one of these.
fn representative_delays(p: &Protocol, cfg: &Config) -> Vec<Rat> {
    let (k, scale) = max_constant(p);
    let mut set: BTreeSet<Rat> = BTreeSet::new();
    set.insert(Rat::zero());
    let mut far = Rat::zero();
    for v in &cfg.clocks {
        for x in v {
            for g in 0..=k {
                let target = Rat::new(g.into(), scale.into());
                if target >= *x {
                    set.insert(&target - x);
                }
            }
            let past = Rat::new(k.into(), scale.into()) - x + rat_int(1);
            if past > far {
                far = past;
            }
        }
    }
    set.insert(far);
    let points: Vec<Rat> = set.iter().cloned().collect();
    for w in points.windows(2) {
        set.insert((&w[0] + &w[1]) / rat_int(2));
    }
    set.into_iter().collect()
}

/// Every step label enabled from `cfg`, over the representative delays.
/// Send labels enumerate receiver sets: in reconfigurable mode all subsets
/// of the processes with an enabled reception, in clique mode the full
/// network. Reception choices are left empty.
pub fn enabled_labels(p: &Protocol, mode: Mode, cfg: &Config) -> Result<Vec<Label>, StepError> {
    let n = cfg.len();
    let mut out = Vec::new();
    for delay in representative_delays(p, cfg) {
        let delayed = cfg.delayed(&delay);
        for actor in 0..n {
            for (edge, e) in p.edges.iter().enumerate() {
                if e.source != delayed.locs[actor] {
                    continue;
                }
                match e.action {
                    Action::Receive(_) => continue,
                    Action::Internal => {
                        if guard_holds(p, edge, &delayed.clocks[actor])? {
                            out.push(Label::internal(delay.clone(), actor, edge));
                        }
                    }
                    Action::Send(m) => {
                        if !guard_holds(p, edge, &delayed.clocks[actor])? {
                            continue;
                        }
                        match mode {
                            Mode::Clique => {
                                let receivers: BTreeSet<usize> =
                                    (0..n).filter(|&j| j != actor).collect();
                                out.push(Label {
                                    delay: delay.clone(),
                                    actor,
                                    edge,
                                    receivers,
                                    choices: BTreeMap::new(),
                                });
                            }
                            Mode::Reconfigurable => {
                                let mut potential = Vec::new();
                                for j in 0..n {
                                    if j != actor && !enabled_receptions(p, &delayed, j, m)?.is_empty() {
                                        potential.push(j);
                                    }
                                }
                                for mask in 0u64..(1u64 << potential.len()) {
                                    let receivers: BTreeSet<usize> = potential
                                        .iter()
                                        .enumerate()
                                        .filter(|(b, _)| mask & (1 << b) != 0)
                                        .map(|(_, &j)| j)
                                        .collect();
                                    out.push(Label {
                                        delay: delay.clone(),
                                        actor,
                                        edge,
                                        receivers,
                                        choices: BTreeMap::new(),
                                    });
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(out)
}

/// No delay enables any action; the only behaviour left is letting time pass.
pub fn is_terminal(p: &Protocol, mode: Mode, cfg: &Config) -> Result<bool, StepError> {
    Ok(enabled_labels(p, mode, cfg)?.is_empty())
}

/// Runs a random maximal-run prefix of at most `max_steps` steps. The same
/// seed always produces the same execution.
pub fn simulate(
    p: &Protocol,
    mode: Mode,
    n: usize,
    max_steps: usize,
    seed: u64,
) -> Result<(Execution, RunEnd), StepError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut exec = Execution::start(mode, Config::initial(p, n));
    for _ in 0..max_steps {
        let menu = enabled_labels(p, mode, exec.last())?;
        let Some(pick) = menu.choose(&mut rng) else {
            return Ok((exec, RunEnd::Terminal));
        };
        let mut label = pick.clone();
        if let Action::Send(m) = p.edges[label.edge].action {
            let delayed = exec.last().delayed(&label.delay);
            for &j in &label.receivers {
                let enabled = enabled_receptions(p, &delayed, j, m)?;
                if enabled.len() > 1 {
                    label.choices.insert(j, *enabled.choose(&mut rng).expect("nonempty"));
                }
            }
        }
        let (next, moved) = step(p, mode, exec.last(), &label).expect("enabled label must step");
        label.choices = moved;
        exec.labels.push(label);
        exec.states.push(next);
    }
    let end = if is_terminal(p, mode, exec.last())? {
        RunEnd::Terminal
    } else {
        RunEnd::Truncated
    };
    Ok((exec, end))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{
        rat, AtomicConstraint, ClockId, Edge, GuardBound, LocId, MsgId, Rel, SourceMap,
    };
    use std::collections::BTreeMap as Map;

    fn atom(clock: usize, rel: Rel, num: i64, den: i64) -> AtomicConstraint {
        AtomicConstraint {
            clock: ClockId(clock),
            rel,
            bound: GuardBound::Const(rat(num, den)),
        }
    }

    fn edge(source: usize, target: usize, guard: Vec<AtomicConstraint>, action: Action, resets: &[usize]) -> Edge {
        Edge {
            source: LocId(source),
            guard,
            action,
            resets: resets.iter().map(|&c| ClockId(c)).collect(),
            target: LocId(target),
        }
    }

    /// Three locations: `a` broadcasts `m` once `x >= 1` and resets, `a`
    /// receives `m` into `b` while `x <= 1`, `b` steps internally to `c` at
    /// `x = 2`.
    fn ping() -> Protocol {
        Protocol {
            name: "ping".into(),
            locations: vec!["a".into(), "b".into(), "c".into()],
            clocks: vec!["x".into()],
            messages: vec!["m".into()],
            params: vec![],
            init: LocId(0),
            edges: vec![
                edge(0, 0, vec![atom(0, Rel::Ge, 1, 1)], Action::Send(MsgId(0)), &[0]),
                edge(0, 1, vec![atom(0, Rel::Le, 1, 1)], Action::Receive(MsgId(0)), &[]),
                edge(1, 2, vec![atom(0, Rel::Eq, 2, 1)], Action::Internal, &[]),
            ],
            bounds: Map::new(),
            meta: SourceMap::default(),
        }
    }

    #[test]
    fn send_moves_addressed_receivers_only() {
        let p = ping();
        let cfg = Config::initial(&p, 3);
        let label = Label {
            delay: rat(1, 1),
            actor: 0,
            edge: 0,
            receivers: [1].into_iter().collect(),
            choices: Map::new(),
        };
        let (next, moved) = step(&p, Mode::Reconfigurable, &cfg, &label).unwrap();
        assert_eq!(next.locs, vec![LocId(0), LocId(1), LocId(0)]);
        assert_eq!(next.clocks[0][0], rat(0, 1));
        assert_eq!(next.clocks[1][0], rat(1, 1));
        assert_eq!(moved, [(1, 1)].into_iter().collect::<Moved>());
    }

    #[test]
    fn receiver_with_disabled_guard_stays() {
        let p = ping();
        let cfg = Config::initial(&p, 2);
        let label = Label {
            delay: rat(3, 2),
            actor: 0,
            edge: 0,
            receivers: [1].into_iter().collect(),
            choices: Map::new(),
        };
        let (next, moved) = step(&p, Mode::Reconfigurable, &cfg, &label).unwrap();
        assert_eq!(next.locs[1], LocId(0));
        assert!(moved.is_empty());
    }

    #[test]
    fn clique_requires_full_receiver_set() {
        let p = ping();
        let cfg = Config::initial(&p, 3);
        let label = Label {
            delay: rat(1, 1),
            actor: 0,
            edge: 0,
            receivers: [1].into_iter().collect(),
            choices: Map::new(),
        };
        assert_eq!(
            step(&p, Mode::Clique, &cfg, &label),
            Err(StepError::CliqueReceiverSet)
        );
        let full = Label {
            receivers: [1, 2].into_iter().collect(),
            ..label
        };
        assert!(step(&p, Mode::Clique, &cfg, &full).is_ok());
    }

    #[test]
    fn sender_cannot_receive_its_own_broadcast() {
        let p = ping();
        let cfg = Config::initial(&p, 2);
        let label = Label {
            delay: rat(1, 1),
            actor: 0,
            edge: 0,
            receivers: [0, 1].into_iter().collect(),
            choices: Map::new(),
        };
        assert_eq!(
            step(&p, Mode::Reconfigurable, &cfg, &label),
            Err(StepError::BadReceiver { process: 0 })
        );
    }

    #[test]
    fn guard_violation_is_reported() {
        let p = ping();
        let cfg = Config::initial(&p, 1);
        let label = Label::internal(rat(1, 2), 0, 0);
        assert_eq!(
            step(&p, Mode::Reconfigurable, &cfg, &label),
            Err(StepError::GuardViolation { process: 0, edge: 0 })
        );
    }

    #[test]
    fn representative_delays_hit_equality_guards() {
        let p = ping();
        let mut cfg = Config::initial(&p, 1);
        cfg.locs[0] = LocId(1);
        cfg.clocks[0][0] = rat(1, 2);
        let menu = enabled_labels(&p, Mode::Reconfigurable, &cfg).unwrap();
        assert!(menu.iter().any(|l| l.edge == 2 && l.delay == rat(3, 2)));
    }

    #[test]
    fn terminal_configuration_has_empty_menu() {
        let p = ping();
        let mut cfg = Config::initial(&p, 1);
        cfg.locs[0] = LocId(2);
        assert!(is_terminal(&p, Mode::Reconfigurable, &cfg).unwrap());
        cfg.locs[0] = LocId(1);
        cfg.clocks[0][0] = rat(5, 2);
        assert!(is_terminal(&p, Mode::Reconfigurable, &cfg).unwrap());
    }

    #[test]
    fn simulate_is_deterministic_per_seed() {
        let p = ping();
        let (a, _) = simulate(&p, Mode::Reconfigurable, 3, 20, 7).unwrap();
        let (b, _) = simulate(&p, Mode::Reconfigurable, 3, 20, 7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn replay_records_reception_choices() {
        let p = ping();
        let labels = vec![Label {
            delay: rat(1, 1),
            actor: 0,
            edge: 0,
            receivers: [1, 2].into_iter().collect(),
            choices: Map::new(),
        }];
        let (exec, _) = replay(&p, Mode::Reconfigurable, 3, &labels).unwrap();
        assert_eq!(exec.labels[0].choices, [(1, 1), (2, 1)].into_iter().collect::<Moved>());
    }

    #[test]
    fn config_at_time_interpolates_between_steps() {
        let p = ping();
        let labels = vec![Label {
            delay: rat(1, 1),
            actor: 0,
            edge: 0,
            receivers: [1].into_iter().collect(),
            choices: Map::new(),
        }];
        let (exec, _) = replay(&p, Mode::Reconfigurable, 2, &labels).unwrap();
        let mid = exec.config_at_time(&rat(1, 2)).unwrap();
        assert_eq!(mid.locs, vec![LocId(0), LocId(0)]);
        assert_eq!(mid.clocks[0][0], rat(1, 2));
        let after = exec.config_at_time(&rat(3, 2)).unwrap();
        assert_eq!(after.locs, vec![LocId(0), LocId(1)]);
        assert_eq!(after.clocks[0][0], rat(1, 2));
        assert_eq!(after.clocks[1][0], rat(3, 2));
    }

    #[test]
    fn reaches_scans_every_configuration_including_the_first() {
        let p = ping();
        let labels = vec![Label {
            delay: rat(1, 1),
            actor: 0,
            edge: 0,
            receivers: [1].into_iter().collect(),
            choices: Map::new(),
        }];
        let (exec, _) = replay(&p, Mode::Reconfigurable, 2, &labels).unwrap();
        assert!(reaches(&exec, LocId(0)));
        assert!(reaches(&exec, LocId(1)));
        assert!(!reaches(&exec, LocId(2)));
        let (empty, _) = replay(&p, Mode::Reconfigurable, 1, &[]).unwrap();
        assert!(reaches(&empty, LocId(0)));
    }

    /// One clock, a lower parameter on the first hop and an upper parameter
    /// on the second.
    fn gated() -> Protocol {
        use crate::model::ParamId;
        Protocol {
            name: "gated".into(),
            locations: vec!["a".into(), "b".into(), "c".into()],
            clocks: vec!["x".into()],
            messages: vec![],
            params: vec!["lo".into(), "hi".into()],
            init: LocId(0),
            edges: vec![
                Edge {
                    source: LocId(0),
                    guard: vec![AtomicConstraint {
                        clock: ClockId(0),
                        rel: Rel::Ge,
                        bound: GuardBound::Param(ParamId(0)),
                    }],
                    action: Action::Internal,
                    resets: [ClockId(0)].into_iter().collect(),
                    target: LocId(1),
                },
                Edge {
                    source: LocId(1),
                    guard: vec![AtomicConstraint {
                        clock: ClockId(0),
                        rel: Rel::Le,
                        bound: GuardBound::Param(ParamId(1)),
                    }],
                    action: Action::Internal,
                    resets: BTreeSet::new(),
                    target: LocId(2),
                },
            ],
            bounds: Map::new(),
            meta: SourceMap::default(),
        }
    }

    #[test]
    fn relaxed_valuations_preserve_recorded_runs() {
        use crate::model::ParamId;
        let p = gated();
        let tight: Valuation = [(ParamId(0), rat(2, 1)), (ParamId(1), rat(1, 1))]
            .into_iter()
            .collect();
        let conc = substitute(&p, &tight).unwrap();
        let labels = vec![
            Label::internal(rat(2, 1), 0, 0),
            Label::internal(rat(1, 1), 0, 1),
        ];
        let (exec, _) = replay(&conc, Mode::Reconfigurable, 1, &labels).unwrap();

        let same = replay_under(&p, &exec, &tight).unwrap();
        assert_eq!(same.states, exec.states);

        let relaxed: Valuation = [(ParamId(0), rat(1, 2)), (ParamId(1), rat(3, 1))]
            .into_iter()
            .collect();
        assert!(replay_under(&p, &exec, &relaxed).is_ok());

        let raised: Valuation = [(ParamId(0), rat(3, 1)), (ParamId(1), rat(1, 1))]
            .into_iter()
            .collect();
        match replay_under(&p, &exec, &raised) {
            Err(ReplayUnderError::Replay(e)) => assert_eq!(e.index, 0),
            other => panic!("expected a replay failure, got {:?}", other.map(|e| e.states)),
        }
    }
}
