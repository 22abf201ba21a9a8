//! Region abstraction for one-clock networks: counting abstraction words,
//! their time and discrete successors and predecessors, a backward
//! coverability engine, and a fixed-size region search refined back into
//! concrete executions.

use std::collections::hash_map::Entry;
use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};

use num_traits::{ToPrimitive, Zero};
use thiserror::Error;

use crate::model::{Action, GuardBound, LocId, MsgId, Protocol, Rat, Rel};
use crate::semantics::{self, Config, Execution, Label, Mode};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RegionError {
    #[error("region analysis needs exactly one clock, protocol has {actual}")]
    NotOneClock { actual: usize },
    #[error("region analysis needs a parameter-free protocol")]
    Parametric,
    #[error("backward coverability is sound for reconfigurable semantics only")]
    CliqueUnsupported,
}

pub type Bag<T> = BTreeMap<T, usize>;

fn bag_add<T: Ord>(bag: &mut Bag<T>, key: T, count: usize) {
    if count > 0 {
        *bag.entry(key).or_insert(0) += count;
    }
}

fn bag_remove<T: Ord + Clone>(bag: &mut Bag<T>, key: &T, count: usize) {
    if count == 0 {
        return;
    }
    let c = bag.get_mut(key).expect("bag removal of absent key");
    assert!(*c >= count, "bag removal exceeds multiplicity");
    *c -= count;
    if *c == 0 {
        bag.remove(key);
    }
}

fn bag_le<T: Ord>(small: &Bag<T>, big: &Bag<T>) -> bool {
    small.iter().all(|(k, &c)| big.get(k).copied().unwrap_or(0) >= c)
}

fn bag_size<T>(bag: &Bag<T>) -> usize {
    bag.values().sum()
}

/// Where a clock value sits on the scaled integer grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Class {
    /// Exactly the integer `n`, `0 <= n <= K`.
    At(u32),
    /// Strictly between `n` and `n + 1`, `0 <= n < K`.
    Between(u32),
    /// Strictly above `K`.
    Beyond,
}

/// Scaled one-clock view of a parameter-free protocol: all guard constants
/// multiplied by `scale` so they become integers bounded by `k`.
#[derive(Debug, Clone)]
pub struct OneClock {
    pub k: u32,
    pub scale: u64,
    pub init: LocId,
    pub nlocs: usize,
    edges: Vec<ScaledEdge>,
}

#[derive(Debug, Clone)]
struct ScaledEdge {
    source: LocId,
    target: LocId,
    action: Action,
    reset: bool,
    guard: Vec<(Rel, u32)>,
}

impl OneClock {
    pub fn build(p: &Protocol) -> Result<OneClock, RegionError> {
        if p.clocks.len() != 1 {
            return Err(RegionError::NotOneClock {
                actual: p.clocks.len(),
            });
        }
        let (k, scale) = crate::model::max_constant(p);
        let k = u32::try_from(k).expect("scaled constants fit in u32");
        let mut edges = Vec::with_capacity(p.edges.len());
        for e in &p.edges {
            let mut guard = Vec::with_capacity(e.guard.len());
            for a in &e.guard {
                let c = match &a.bound {
                    GuardBound::Const(c) => c,
                    GuardBound::Param(_) => return Err(RegionError::Parametric),
                };
                let scaled = c * Rat::from_integer(scale.into());
                debug_assert!(scaled.is_integer());
                let scaled = scaled.to_integer().to_u32().expect("constant fits in u32");
                guard.push((a.rel, scaled));
            }
            edges.push(ScaledEdge {
                source: e.source,
                target: e.target,
                action: e.action,
                reset: !e.resets.is_empty(),
                guard,
            });
        }
        Ok(OneClock {
            k,
            scale,
            init: p.init,
            nlocs: p.locations.len(),
            edges,
        })
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edge_action(&self, e: usize) -> Action {
        self.edges[e].action
    }

    pub fn edge_source(&self, e: usize) -> LocId {
        self.edges[e].source
    }

    pub fn edge_target(&self, e: usize) -> LocId {
        self.edges[e].target
    }

    pub fn edge_resets(&self, e: usize) -> bool {
        self.edges[e].reset
    }

    /// Whether the guard of edge `e` holds everywhere in the class.
    pub fn sat(&self, e: usize, class: Class) -> bool {
        self.edges[e].guard.iter().all(|&(rel, c)| match class {
            Class::At(n) => match rel {
                Rel::Lt => n < c,
                Rel::Le => n <= c,
                Rel::Eq => n == c,
                Rel::Ge => n >= c,
                Rel::Gt => n > c,
            },
            Class::Between(n) => match rel {
                Rel::Lt | Rel::Le => n < c,
                Rel::Eq => false,
                Rel::Ge | Rel::Gt => c <= n,
            },
            Class::Beyond => matches!(rel, Rel::Ge | Rel::Gt),
        })
    }

    /// The `2K + 2` classes in the order time visits them.
    pub fn classes(&self) -> Vec<Class> {
        let mut out = Vec::with_capacity(2 * self.k as usize + 2);
        for n in 0..self.k {
            out.push(Class::At(n));
            out.push(Class::Between(n));
        }
        out.push(Class::At(self.k));
        out.push(Class::Beyond);
        out
    }

    /// Next class reached by letting time pass; `None` once beyond.
    pub fn class_successor(&self, class: Class) -> Option<Class> {
        match class {
            Class::At(n) if n == self.k => Some(Class::Beyond),
            Class::At(n) => Some(Class::Between(n)),
            Class::Between(n) => Some(Class::At(n + 1)),
            Class::Beyond => None,
        }
    }

    pub fn class_of(&self, value: &Rat) -> Class {
        let scaled = value * Rat::from_integer(self.scale.into());
        let k = Rat::from_integer(self.k.into());
        if scaled > k {
            return Class::Beyond;
        }
        let floor = scaled.floor();
        let n = floor.to_integer().to_u32().expect("clock value fits in u32");
        if scaled.is_integer() {
            Class::At(n)
        } else {
            Class::Between(n)
        }
    }

    /// A concrete clock value inside the class, in unscaled time.
    pub fn class_representative(&self, class: Class) -> Rat {
        let scale = num_bigint::BigInt::from(self.scale);
        match class {
            Class::At(n) => Rat::new(n.into(), scale),
            Class::Between(n) => Rat::new((2 * n + 1).into(), scale * 2),
            Class::Beyond => Rat::new((self.k + 1).into(), scale),
        }
    }
}

/// Counting abstraction of a configuration: multiplicities of `(location,
/// integer part)` letters at integer clock values (`zero`), one bag per
/// shared fractional value in increasing order (`fracs`), and locations of
/// clocks above every constant (`beyond`).
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct RegionWord {
    pub zero: Bag<(LocId, u32)>,
    pub fracs: Vec<Bag<(LocId, u32)>>,
    pub beyond: Bag<LocId>,
}

impl RegionWord {
    pub fn empty() -> RegionWord {
        RegionWord {
            zero: Bag::new(),
            fracs: Vec::new(),
            beyond: Bag::new(),
        }
    }

    /// All `n` processes in the initial location with clock zero.
    pub fn initial(oc: &OneClock, n: usize) -> RegionWord {
        let mut w = RegionWord::empty();
        bag_add(&mut w.zero, (oc.init, 0), n);
        w
    }

    pub fn size(&self) -> usize {
        bag_size(&self.zero) + self.fracs.iter().map(bag_size).sum::<usize>() + bag_size(&self.beyond)
    }

    pub fn contains_loc(&self, loc: LocId) -> bool {
        self.zero.keys().any(|&(l, _)| l == loc)
            || self.fracs.iter().any(|g| g.keys().any(|&(l, _)| l == loc))
            || self.beyond.contains_key(&loc)
    }

    fn drop_empty_groups(&mut self) {
        self.fracs.retain(|g| !g.is_empty());
    }
}

/// Canonical byte key of a word, for hash interning in searches.
fn pack_word(w: &RegionWord) -> Box<[u8]> {
    fn push32(out: &mut Vec<u8>, v: u32) {
        out.extend_from_slice(&v.to_le_bytes());
    }
    fn push_bag(out: &mut Vec<u8>, bag: &Bag<(LocId, u32)>) {
        push32(out, bag.len() as u32);
        for (&(loc, n), &c) in bag {
            push32(out, loc.0 as u32);
            push32(out, n);
            push32(out, c as u32);
        }
    }
    let mut out = Vec::with_capacity(16 + 12 * w.size());
    push_bag(&mut out, &w.zero);
    push32(&mut out, w.fracs.len() as u32);
    for g in &w.fracs {
        push_bag(&mut out, g);
    }
    push32(&mut out, w.beyond.len() as u32);
    for (&loc, &c) in &w.beyond {
        push32(&mut out, loc.0 as u32);
        push32(&mut out, c as u32);
    }
    out.into_boxed_slice()
}

/// Region of a concrete configuration; processes sharing a fractional part
/// share a group.
pub fn region_of(oc: &OneClock, cfg: &Config) -> RegionWord {
    let mut w = RegionWord::empty();
    let mut by_frac: BTreeMap<Rat, Bag<(LocId, u32)>> = BTreeMap::new();
    for i in 0..cfg.len() {
        let v = &cfg.clocks[i][0];
        match oc.class_of(v) {
            Class::Beyond => bag_add(&mut w.beyond, cfg.locs[i], 1),
            Class::At(n) => bag_add(&mut w.zero, (cfg.locs[i], n), 1),
            Class::Between(n) => {
                let scaled = v * Rat::from_integer(oc.scale.into());
                let frac = &scaled - scaled.floor();
                bag_add(by_frac.entry(frac).or_default(), (cfg.locs[i], n), 1);
            }
        }
    }
    w.fracs = by_frac.into_values().collect();
    w
}

/// The next region reached by letting time pass; `None` when the word only
/// holds clocks beyond the constants (or is empty).
pub fn time_successor(oc: &OneClock, w: &RegionWord) -> Option<RegionWord> {
    if !w.zero.is_empty() {
        let mut next = RegionWord {
            zero: Bag::new(),
            fracs: Vec::new(),
            beyond: w.beyond.clone(),
        };
        let mut emerging: Bag<(LocId, u32)> = Bag::new();
        for (&(loc, n), &c) in &w.zero {
            if n == oc.k {
                bag_add(&mut next.beyond, loc, c);
            } else {
                bag_add(&mut emerging, (loc, n), c);
            }
        }
        if !emerging.is_empty() {
            next.fracs.push(emerging);
        }
        next.fracs.extend(w.fracs.iter().cloned());
        return Some(next);
    }
    if let Some((last, rest)) = w.fracs.split_last() {
        let mut zero = Bag::new();
        for (&(loc, n), &c) in last {
            bag_add(&mut zero, (loc, n + 1), c);
        }
        return Some(RegionWord {
            zero,
            fracs: rest.to_vec(),
            beyond: w.beyond.clone(),
        });
    }
    None
}

/// Enumerates every submultiset of a bag.
fn submultisets<T: Ord + Clone>(bag: &Bag<T>) -> Vec<Bag<T>> {
    let mut out = vec![Bag::new()];
    for (k, &c) in bag {
        let mut next = Vec::with_capacity(out.len() * (c + 1));
        for picked in &out {
            for take in 0..=c {
                let mut b = picked.clone();
                bag_add(&mut b, k.clone(), take);
                next.push(b);
            }
        }
        out = next;
    }
    out
}

/// All exact one-step time predecessors: words `u` with
/// `time_successor(u) = w`.
pub fn pre_time(oc: &OneClock, w: &RegionWord) -> Vec<RegionWord> {
    let mut out = Vec::new();
    if !w.zero.is_empty() {
        // Only a promotion of the largest fractional group makes a word
        // whose zero letters all carry n >= 1.
        if w.zero.keys().all(|&(_, n)| n >= 1) {
            let mut demoted = Bag::new();
            for (&(loc, n), &c) in &w.zero {
                bag_add(&mut demoted, (loc, n - 1), c);
            }
            let mut fracs = w.fracs.clone();
            fracs.push(demoted);
            out.push(RegionWord {
                zero: Bag::new(),
                fracs,
                beyond: w.beyond.clone(),
            });
        }
        return out;
    }
    // Zero is empty: predecessors let a zero group emerge into the smallest
    // fractional group or push k-valued clocks beyond, in one instant.
    for takes_first in [false, true] {
        let (first, rest): (Option<&Bag<(LocId, u32)>>, &[Bag<(LocId, u32)>]) = if takes_first {
            match w.fracs.split_first() {
                Some((f, r)) => (Some(f), r),
                None => continue,
            }
        } else {
            (None, &w.fracs[..])
        };
        for sub in submultisets(&w.beyond) {
            let mut zero = Bag::new();
            if let Some(f) = first {
                if f.keys().any(|&(_, n)| n >= oc.k) {
                    continue;
                }
                for (&key, &c) in f {
                    bag_add(&mut zero, key, c);
                }
            }
            for (loc, &c) in &sub {
                bag_add(&mut zero, (*loc, oc.k), c);
            }
            if zero.is_empty() {
                continue;
            }
            let mut beyond = w.beyond.clone();
            for (loc, &c) in &sub {
                bag_remove(&mut beyond, loc, c);
            }
            out.push(RegionWord {
                zero,
                fracs: rest.to_vec(),
                beyond,
            });
        }
    }
    out
}

/// Word embedding: `small` covers-into `big` when its zero and beyond bags
/// are included and its fractional groups embed order-preservingly.
pub fn covers(big: &RegionWord, small: &RegionWord) -> bool {
    if small.fracs.len() > big.fracs.len() {
        return false;
    }
    if !bag_le(&small.zero, &big.zero) || !bag_le(&small.beyond, &big.beyond) {
        return false;
    }
    let mut j = 0;
    for g in &small.fracs {
        loop {
            if j >= big.fracs.len() {
                return false;
            }
            j += 1;
            if bag_le(g, &big.fracs[j - 1]) {
                break;
            }
        }
    }
    true
}

/// Occurrence slot inside a region word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum SlotClass {
    Zero,
    Frac(usize),
    Beyond,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub struct Slot {
    pub class: SlotClass,
    pub loc: LocId,
    /// Integer part; 0 for beyond slots.
    pub n: u32,
}

impl Slot {
    fn clock_class(&self, k: u32) -> Class {
        match self.class {
            SlotClass::Zero => Class::At(self.n),
            SlotClass::Frac(_) => {
                debug_assert!(self.n < k || k == 0);
                Class::Between(self.n)
            }
            SlotClass::Beyond => Class::Beyond,
        }
    }
}

/// One discrete region step: the firing edge, which occurrence fired it and
/// how many occurrences of each slot took which reception edge.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DiscreteMove {
    pub edge: usize,
    pub actor: Slot,
    pub receivers: Vec<(Slot, usize, usize)>,
}

fn word_slots(w: &RegionWord) -> Vec<(Slot, usize)> {
    let mut out = Vec::new();
    for (&(loc, n), &c) in &w.zero {
        out.push((Slot { class: SlotClass::Zero, loc, n }, c));
    }
    for (i, g) in w.fracs.iter().enumerate() {
        for (&(loc, n), &c) in g {
            out.push((Slot { class: SlotClass::Frac(i), loc, n }, c));
        }
    }
    for (&loc, &c) in &w.beyond {
        out.push((Slot { class: SlotClass::Beyond, loc, n: 0 }, c));
    }
    out
}

fn remove_slot(w: &mut RegionWord, slot: Slot, count: usize) {
    match slot.class {
        SlotClass::Zero => bag_remove(&mut w.zero, &(slot.loc, slot.n), count),
        SlotClass::Frac(i) => bag_remove(&mut w.fracs[i], &(slot.loc, slot.n), count),
        SlotClass::Beyond => bag_remove(&mut w.beyond, &slot.loc, count),
    }
}

fn add_slot(w: &mut RegionWord, slot: Slot, count: usize) {
    match slot.class {
        SlotClass::Zero => bag_add(&mut w.zero, (slot.loc, slot.n), count),
        SlotClass::Frac(i) => bag_add(&mut w.fracs[i], (slot.loc, slot.n), count),
        SlotClass::Beyond => bag_add(&mut w.beyond, slot.loc, count),
    }
}

/// Moves `count` occurrences from `slot` through edge `e`: a reset lands on
/// the zero letter `(target, 0)`, otherwise the letter keeps its class.
fn move_through(w: &mut RegionWord, oc: &OneClock, slot: Slot, e: usize, count: usize) {
    remove_slot(w, slot, count);
    let target = oc.edge_target(e);
    if oc.edge_resets(e) {
        bag_add(&mut w.zero, (target, 0), count);
    } else {
        add_slot(
            w,
            Slot {
                class: slot.class,
                loc: target,
                n: slot.n,
            },
            count,
        );
    }
}

/// Splits `total` into `parts` nonnegative summands, in lexicographic order.
fn compositions(total: usize, parts: usize) -> Vec<Vec<usize>> {
    if parts == 0 {
        return if total == 0 { vec![vec![]] } else { Vec::new() };
    }
    let mut out = Vec::new();
    for first in 0..=total {
        for mut rest in compositions(total - first, parts - 1) {
            let mut v = vec![first];
            v.append(&mut rest);
            out.push(v);
        }
    }
    out
}

/// Every discrete successor of `w`, with the move that produces it. In
/// reconfigurable mode each potential receiver independently takes one of
/// its enabled receptions or stays; in clique mode every process with an
/// enabled reception must take one.
pub fn discrete_successors(oc: &OneClock, mode: Mode, w: &RegionWord) -> Vec<(RegionWord, DiscreteMove)> {
    let mut out = Vec::new();
    let slots = word_slots(w);
    for &(actor_slot, actor_count) in &slots {
        debug_assert!(actor_count >= 1);
        let class = actor_slot.clock_class(oc.k);
        for e in 0..oc.edge_count() {
            if oc.edge_source(e) != actor_slot.loc || !oc.sat(e, class) {
                continue;
            }
            match oc.edge_action(e) {
                Action::Receive(_) => continue,
                Action::Internal => {
                    let mut next = w.clone();
                    move_through(&mut next, oc, actor_slot, e, 1);
                    next.drop_empty_groups();
                    out.push((
                        next,
                        DiscreteMove {
                            edge: e,
                            actor: actor_slot,
                            receivers: Vec::new(),
                        },
                    ));
                }
                Action::Send(m) => {
                    // Receivers are chosen among the remaining occurrences.
                    let mut pool: Vec<(Slot, usize)> = Vec::new();
                    for &(slot, c) in &slots {
                        let c = if slot == actor_slot { c - 1 } else { c };
                        if c > 0 {
                            pool.push((slot, c));
                        }
                    }
                    let mut pool_edges: Vec<(Slot, usize, Vec<usize>)> = Vec::new();
                    for &(slot, c) in &pool {
                        let enabled: Vec<usize> = (0..oc.edge_count())
                            .filter(|&f| {
                                oc.edge_action(f) == Action::Receive(m)
                                    && oc.edge_source(f) == slot.loc
                                    && oc.sat(f, slot.clock_class(oc.k))
                            })
                            .collect();
                        pool_edges.push((slot, c, enabled));
                    }
                    // Per slot: one count per enabled edge, plus a stay count
                    // in reconfigurable mode (or when nothing is enabled).
                    let mut assignments: Vec<Vec<(Slot, usize, usize)>> = vec![Vec::new()];
                    for (slot, c, enabled) in &pool_edges {
                        let stay_allowed = mode == Mode::Reconfigurable || enabled.is_empty();
                        let parts = enabled.len() + usize::from(stay_allowed);
                        let splits = compositions(*c, parts);
                        let mut grown = Vec::with_capacity(assignments.len() * splits.len());
                        for base in &assignments {
                            for split in &splits {
                                let mut a = base.clone();
                                for (fi, &cnt) in split.iter().take(enabled.len()).enumerate() {
                                    if cnt > 0 {
                                        a.push((*slot, enabled[fi], cnt));
                                    }
                                }
                                grown.push(a);
                            }
                        }
                        assignments = grown;
                    }
                    for assignment in assignments {
                        let mut next = w.clone();
                        move_through(&mut next, oc, actor_slot, e, 1);
                        for &(slot, f, cnt) in &assignment {
                            move_through(&mut next, oc, slot, f, cnt);
                        }
                        next.drop_empty_groups();
                        out.push((
                            next,
                            DiscreteMove {
                                edge: e,
                                actor: actor_slot,
                                receivers: assignment,
                            },
                        ));
                    }
                }
            }
        }
    }
    out
}

/// Where a rewound occurrence may be inserted into a word.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Insert {
    Zero(u32),
    IntoGroup(usize, u32),
    NewGroupAt(usize, u32),
    Beyond,
    /// Exact slot of an in-place location swap.
    Fixed(Slot),
}

fn insert_options(oc: &OneClock, e: usize, groups: usize) -> Vec<Insert> {
    let mut out = Vec::new();
    for n in 0..=oc.k {
        if oc.sat(e, Class::At(n)) {
            out.push(Insert::Zero(n));
        }
    }
    for n in 0..oc.k {
        if oc.sat(e, Class::Between(n)) {
            for i in 0..groups {
                out.push(Insert::IntoGroup(i, n));
            }
            for g in 0..=groups {
                out.push(Insert::NewGroupAt(g, n));
            }
        }
    }
    if oc.sat(e, Class::Beyond) {
        out.push(Insert::Beyond);
    }
    out
}

/// Applies removals already done in `w`; inserts each `(loc, insert)` pair.
/// New groups referencing the same gap are laid down in list order.
fn realize(w: &RegionWord, inserts: &[(LocId, Insert)]) -> RegionWord {
    let mut zero = w.zero.clone();
    let mut beyond = w.beyond.clone();
    let mut joined: Vec<Bag<(LocId, u32)>> = w.fracs.clone();
    let mut gaps: Vec<Vec<Bag<(LocId, u32)>>> = vec![Vec::new(); w.fracs.len() + 1];
    for &(loc, ins) in inserts {
        match ins {
            Insert::Zero(n) => bag_add(&mut zero, (loc, n), 1),
            Insert::IntoGroup(i, n) => bag_add(&mut joined[i], (loc, n), 1),
            Insert::NewGroupAt(g, n) => {
                let mut b = Bag::new();
                bag_add(&mut b, (loc, n), 1);
                gaps[g].push(b);
            }
            Insert::Beyond => bag_add(&mut beyond, loc, 1),
            Insert::Fixed(slot) => match slot.class {
                SlotClass::Zero => bag_add(&mut zero, (loc, slot.n), 1),
                SlotClass::Frac(i) => bag_add(&mut joined[i], (loc, slot.n), 1),
                SlotClass::Beyond => bag_add(&mut beyond, loc, 1),
            },
        }
    }
    let mut fracs = Vec::new();
    for g in 0..=joined.len() {
        fracs.extend(gaps[g].iter().cloned());
        if g < joined.len() {
            fracs.push(joined[g].clone());
        }
    }
    let mut out = RegionWord { zero, fracs, beyond };
    out.drop_empty_groups();
    out
}

/// Minimal-basis discrete predecessors of the upward closure of `w` under
/// reconfigurable semantics: candidates `u` such that some discrete step
/// from a word covering `u` reaches a word covering `w`.
pub fn pre_discrete(oc: &OneClock, w: &RegionWord) -> Vec<RegionWord> {
    let mut out: BTreeSet<RegionWord> = BTreeSet::new();
    for e in 0..oc.edge_count() {
        let (source, target) = (oc.edge_source(e), oc.edge_target(e));
        match oc.edge_action(e) {
            Action::Receive(_) => continue,
            action => {
                // Rewind options for the firing occurrence: in place when the
                // edge does not reset, from the (target, 0) zero letter when
                // it does, or as a surplus occurrence absent from `w`.
                let mut starts: Vec<(RegionWord, Vec<(LocId, Vec<Insert>)>)> = Vec::new();
                if oc.edge_resets(e) {
                    if w.zero.get(&(target, 0)).copied().unwrap_or(0) >= 1 {
                        let mut base = w.clone();
                        bag_remove(&mut base.zero, &(target, 0), 1);
                        let opts = insert_options(oc, e, base.fracs.len());
                        starts.push((base, vec![(source, opts)]));
                    }
                } else {
                    for (slot, _) in word_slots(w) {
                        if slot.loc == target && oc.sat(e, slot.clock_class(oc.k)) {
                            let mut base = w.clone();
                            remove_slot(&mut base, slot, 1);
                            starts.push((base, vec![(source, vec![Insert::Fixed(slot)])]));
                        }
                    }
                }
                if matches!(action, Action::Send(_)) {
                    // Surplus actor: its post occurrence is not needed by
                    // `w`. Useful only when receivers rewind; for internal
                    // edges the candidate would cover `w` and be pruned.
                    let opts = insert_options(oc, e, w.fracs.len());
                    starts.push((w.clone(), vec![(source, opts)]));
                }

                for (base, pending) in starts {
                    match action {
                        Action::Internal => {
                            expand_inserts(&base, &pending, &mut out);
                        }
                        Action::Send(m) => {
                            rewind_receivers(oc, m, &base, &pending, &mut out);
                        }
                        Action::Receive(_) => unreachable!(),
                    }
                }
            }
        }
    }
    out.into_iter().collect()
}

/// Enumerates receiver-result rewinds on top of an actor rewind, then
/// realizes all pending insertions.
fn rewind_receivers(
    oc: &OneClock,
    m: MsgId,
    base: &RegionWord,
    pending: &[(LocId, Vec<Insert>)],
    out: &mut BTreeSet<RegionWord>,
) {
    // Receiver choices per slot of the current base word: how many
    // occurrences rewind through which reception edge.
    let receptions: Vec<usize> = (0..oc.edge_count())
        .filter(|&f| oc.edge_action(f) == Action::Receive(m))
        .collect();
    let slots = word_slots(base);
    let mut variants: Vec<(RegionWord, Vec<(LocId, Vec<Insert>)>)> = vec![(base.clone(), pending.to_vec())];
    for (slot, count) in slots {
        let class = slot.clock_class(oc.k);
        let in_place: Vec<usize> = receptions
            .iter()
            .copied()
            .filter(|&f| !oc.edge_resets(f) && oc.edge_target(f) == slot.loc && oc.sat(f, class))
            .collect();
        let with_reset: Vec<usize> = receptions
            .iter()
            .copied()
            .filter(|&f| {
                oc.edge_resets(f) && oc.edge_target(f) == slot.loc && slot.class == SlotClass::Zero && slot.n == 0
            })
            .collect();
        if in_place.is_empty() && with_reset.is_empty() {
            continue;
        }
        let kinds: Vec<Option<usize>> = std::iter::once(None)
            .chain(in_place.iter().map(|&f| Some(f)))
            .chain(with_reset.iter().map(|&f| Some(f)))
            .collect();
        let splits = compositions(count, kinds.len());
        let mut grown = Vec::new();
        for (word, pend) in &variants {
            // Slot multiplicities coincide across variants because earlier
            // rewinds only touch other slots or queue insertions.
            for split in &splits {
                let mut word2 = word.clone();
                let mut pend2 = pend.clone();
                let mut ok = true;
                for (ki, &cnt) in split.iter().enumerate() {
                    if cnt == 0 {
                        continue;
                    }
                    match kinds[ki] {
                        None => {}
                        Some(f) if !oc.edge_resets(f) => {
                            remove_slot(&mut word2, slot, cnt);
                            add_slot(
                                &mut word2,
                                Slot {
                                    class: slot.class,
                                    loc: oc.edge_source(f),
                                    n: slot.n,
                                },
                                cnt,
                            );
                        }
                        Some(f) => {
                            remove_slot(&mut word2, slot, cnt);
                            let opts = insert_options(oc, f, base.fracs.len());
                            if opts.is_empty() {
                                ok = false;
                                break;
                            }
                            for _ in 0..cnt {
                                pend2.push((oc.edge_source(f), opts.clone()));
                            }
                        }
                    }
                }
                if ok {
                    grown.push((word2, pend2));
                }
            }
        }
        variants = grown;
    }
    for (word, pend) in variants {
        expand_inserts(&word, &pend, out);
    }
}

/// Expands the cartesian product of insertion options and realizes each
/// choice vector.
fn expand_inserts(base: &RegionWord, pending: &[(LocId, Vec<Insert>)], out: &mut BTreeSet<RegionWord>) {
    fn go(
        base: &RegionWord,
        pending: &[(LocId, Vec<Insert>)],
        chosen: &mut Vec<(LocId, Insert)>,
        out: &mut BTreeSet<RegionWord>,
    ) {
        match pending.split_first() {
            None => {
                out.insert(realize(base, chosen));
            }
            Some(((loc, opts), rest)) => {
                for &ins in opts {
                    chosen.push((*loc, ins));
                    go(base, rest, chosen, out);
                    chosen.pop();
                }
            }
        }
    }
    let mut chosen: Vec<(LocId, Insert)> = Vec::with_capacity(pending.len());
    go(base, pending, &mut chosen, out);
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SearchStats {
    pub states: usize,
    pub basis: usize,
}

/// Result of the backward coverability run: whether some network size can
/// cover the goal, plus the final antichain basis.
#[derive(Debug, Clone)]
pub struct CoverOutcome {
    pub reachable: bool,
    pub basis: Vec<RegionWord>,
    pub stats: SearchStats,
}

/// Letter-presence fingerprint. A word can only embed into another when its
/// letter bits are a subset, so mask tests reject most pairs before the
/// structural embedding check.
fn word_mask(w: &RegionWord) -> u64 {
    fn bit(section: u64, loc: LocId, n: u32) -> u64 {
        let h = section
            .wrapping_mul(0x9E37_79B9_7F4A_7C15)
            .wrapping_add((loc.0 as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9))
            .wrapping_add((n as u64).wrapping_mul(0x94D0_49BB_1331_11EB));
        1u64 << (h >> 58)
    }
    let mut m = 0u64;
    for &(loc, n) in w.zero.keys() {
        m |= bit(0, loc, n);
    }
    for g in &w.fracs {
        for &(loc, n) in g.keys() {
            m |= bit(1, loc, n);
        }
    }
    for &loc in w.beyond.keys() {
        m |= bit(2, loc, 0);
    }
    m
}

/// Distinct letters of a word, encoded as orderable keys; grouping and
/// multiplicities are dropped.
fn word_letters(w: &RegionWord) -> Vec<u64> {
    fn enc(section: u64, loc: LocId, n: u32) -> u64 {
        (section << 56) | ((loc.0 as u64) << 28) | n as u64
    }
    let mut out: Vec<u64> = Vec::with_capacity(w.size());
    out.extend(w.zero.keys().map(|&(l, n)| enc(0, l, n)));
    for g in &w.fracs {
        out.extend(g.keys().map(|&(l, n)| enc(1, l, n)));
    }
    out.extend(w.beyond.keys().map(|&l| enc(2, l, 0)));
    out.sort_unstable();
    out.dedup();
    out
}

/// Minimal-element antichain under the covering order, indexed for fast
/// dominance checks. An element can only sit below `w` when all its letters
/// occur in `w`, so dominators are drawn from the buckets of `w`'s letters
/// keyed by each element's smallest letter; conversely anything `w` prunes
/// must contain every letter of `w`, so pruning scans one inverted bucket.
/// Size and letter-mask prefilters cut the remaining pairs before the
/// structural embedding test.
struct Antichain {
    arena: Vec<Option<RegionWord>>,
    masks: Vec<u64>,
    sizes: Vec<usize>,
    index: HashMap<Box<[u8]>, u32>,
    by_rep: HashMap<u64, Vec<u32>>,
    by_letter: HashMap<u64, Vec<u32>>,
}

impl Antichain {
    fn new() -> Antichain {
        Antichain {
            arena: Vec::new(),
            masks: Vec::new(),
            sizes: Vec::new(),
            index: HashMap::new(),
            by_rep: HashMap::new(),
            by_letter: HashMap::new(),
        }
    }

    fn live(&self, id: u32) -> Option<&RegionWord> {
        self.arena[id as usize].as_ref()
    }

    fn len(&self) -> usize {
        self.index.len()
    }

    fn words(&self) -> Vec<RegionWord> {
        let mut out: Vec<RegionWord> = self.arena.iter().flatten().cloned().collect();
        out.sort();
        out
    }

    /// Inserts `w` unless a basis element already sits below it; drops
    /// elements the new word sits below. Returns the id when inserted.
    fn insert(&mut self, w: RegionWord) -> Option<u32> {
        let key = pack_word(&w);
        if self.index.contains_key(&key) {
            return None;
        }
        let m = word_mask(&w);
        let s = w.size();
        let letters = word_letters(&w);
        for &l in &letters {
            let Some(ids) = self.by_rep.get(&l) else { continue };
            for &id in ids {
                let Some(b) = self.live(id) else { continue };
                if self.sizes[id as usize] <= s && self.masks[id as usize] & !m == 0 && covers(&w, b) {
                    return None;
                }
            }
        }
        let rare = letters
            .iter()
            .min_by_key(|l| self.by_letter.get(l).map_or(0, Vec::len))
            .copied()
            .expect("a word has at least one letter");
        let mut pruned: Vec<u32> = Vec::new();
        if let Some(ids) = self.by_letter.get(&rare) {
            for &id in ids {
                let Some(b) = self.live(id) else { continue };
                if self.sizes[id as usize] >= s && m & !self.masks[id as usize] == 0 && covers(b, &w) {
                    pruned.push(id);
                }
            }
        }
        for id in pruned {
            let b = self.arena[id as usize].take().expect("pruned id was live");
            self.index.remove(&pack_word(&b));
        }
        let id = self.arena.len() as u32;
        self.arena.push(Some(w));
        self.masks.push(m);
        self.sizes.push(s);
        self.index.insert(key, id);
        self.by_rep.entry(letters[0]).or_default().push(id);
        for l in letters {
            self.by_letter.entry(l).or_default().push(id);
        }
        Some(id)
    }
}

/// A word below some initial configuration: only `(init, 0)` letters.
fn below_initial(oc: &OneClock, w: &RegionWord) -> bool {
    w.fracs.is_empty() && w.beyond.is_empty() && w.zero.keys().all(|&(l, n)| l == oc.init && n == 0)
}

/// Decides reachability of `goal` in reconfigurable semantics for some
/// network size, by saturating the basis of the backward covering set.
/// Positive instances return as soon as a word below an initial
/// configuration enters the basis; negative ones run to the fixpoint.
pub fn backward_coverability(oc: &OneClock, goal: LocId) -> Result<CoverOutcome, RegionError> {
    let mut basis = Antichain::new();
    let mut worklist: BTreeSet<(usize, u32)> = BTreeSet::new();
    let mut reachable = false;
    let mut seed = |w: RegionWord, basis: &mut Antichain, worklist: &mut BTreeSet<(usize, u32)>| {
        let size = w.size();
        let hit = below_initial(oc, &w);
        if let Some(id) = basis.insert(w) {
            reachable |= hit;
            worklist.insert((size, id));
        }
    };
    for n in 0..=oc.k {
        let mut w = RegionWord::empty();
        bag_add(&mut w.zero, (goal, n), 1);
        seed(w, &mut basis, &mut worklist);
    }
    for n in 0..oc.k {
        let mut b = Bag::new();
        bag_add(&mut b, (goal, n), 1);
        let w = RegionWord {
            zero: Bag::new(),
            fracs: vec![b],
            beyond: Bag::new(),
        };
        seed(w, &mut basis, &mut worklist);
    }
    {
        let mut w = RegionWord::empty();
        bag_add(&mut w.beyond, goal, 1);
        seed(w, &mut basis, &mut worklist);
    }

    let mut expanded = 0usize;
    'saturate: while let Some((_, id)) = worklist.pop_first() {
        if reachable {
            break;
        }
        let Some(w) = basis.live(id).cloned() else {
            continue;
        };
        expanded += 1;
        let mut preds = pre_time(oc, &w);
        preds.extend(pre_discrete(oc, &w));
        // Inserting small candidates first lets the antichain reject the
        // dominated remainder of the batch cheaply.
        preds.sort_by_cached_key(|u| u.size());
        for u in preds {
            debug_assert!(u.size() >= 1);
            let size = u.size();
            let hit = below_initial(oc, &u);
            if let Some(uid) = basis.insert(u) {
                if hit {
                    reachable = true;
                    break 'saturate;
                }
                worklist.insert((size, uid));
            }
        }
    }

    let stats = SearchStats {
        states: expanded,
        basis: basis.len(),
    };
    Ok(CoverOutcome {
        reachable,
        basis: basis.words(),
        stats,
    })
}

enum PathStep {
    Time,
    Disc(DiscreteMove),
}

/// Reachability of `goal` for a fixed network size, by forward search of
/// the region graph; a positive answer is refined into a concrete witness
/// execution that replays on the protocol.
pub fn ef_fixed_n(
    p: &Protocol,
    mode: Mode,
    n: usize,
    goal: LocId,
) -> Result<(Option<Execution>, SearchStats), RegionError> {
    let oc = OneClock::build(p)?;
    let start = RegionWord::initial(&oc, n);
    // Words are interned once, keyed by their packed form; the frontier and
    // the discovery tree are ids into the arena. Moves along the witness
    // path are re-derived afterwards, exhausted searches never pay for them.
    let mut ids: HashMap<Box<[u8]>, u32> = HashMap::new();
    let mut arena: Vec<RegionWord> = Vec::new();
    let mut parent: Vec<u32> = Vec::new();
    let mut intern = |w: RegionWord, from: u32, arena: &mut Vec<RegionWord>, parent: &mut Vec<u32>| -> Option<u32> {
        match ids.entry(pack_word(&w)) {
            Entry::Occupied(_) => None,
            Entry::Vacant(e) => {
                let id = arena.len() as u32;
                e.insert(id);
                arena.push(w);
                parent.push(from);
                Some(id)
            }
        }
    };
    let root = intern(start, u32::MAX, &mut arena, &mut parent).expect("fresh arena");
    let mut queue: VecDeque<u32> = VecDeque::new();
    queue.push_back(root);
    let mut found: Option<u32> = arena[root as usize].contains_loc(goal).then_some(root);
    'search: while found.is_none() {
        let Some(id) = queue.pop_front() else {
            break;
        };
        let w = arena[id as usize].clone();
        if let Some(t) = time_successor(&oc, &w) {
            if let Some(nid) = intern(t, id, &mut arena, &mut parent) {
                if arena[nid as usize].contains_loc(goal) {
                    found = Some(nid);
                    break 'search;
                }
                queue.push_back(nid);
            }
        }
        for (next, _) in discrete_successors(&oc, mode, &w) {
            if let Some(nid) = intern(next, id, &mut arena, &mut parent) {
                if arena[nid as usize].contains_loc(goal) {
                    found = Some(nid);
                    break 'search;
                }
                queue.push_back(nid);
            }
        }
    }
    let stats = SearchStats {
        states: arena.len(),
        basis: 0,
    };
    let Some(goal_id) = found else {
        return Ok((None, stats));
    };

    let mut path = vec![goal_id];
    while *path.last().unwrap() != root {
        path.push(parent[*path.last().unwrap() as usize]);
    }
    path.reverse();
    let mut chain: Vec<PathStep> = Vec::with_capacity(path.len().saturating_sub(1));
    for pair in path.windows(2) {
        let (a, b) = (&arena[pair[0] as usize], &arena[pair[1] as usize]);
        if time_successor(&oc, a).as_ref() == Some(b) {
            chain.push(PathStep::Time);
        } else {
            let mv = discrete_successors(&oc, mode, a)
                .into_iter()
                .find(|(w2, _)| w2 == b)
                .map(|(_, mv)| mv)
                .expect("parent link mirrors a region step");
            chain.push(PathStep::Disc(mv));
        }
    }

    Ok((Some(refine(p, &oc, mode, n, &chain)), stats))
}

/// Turns a region path into a concrete execution. Group promotions take the
/// exact boundary delay; emerging groups take half the room below the next
/// boundary.
fn refine(p: &Protocol, oc: &OneClock, mode: Mode, n: usize, chain: &[PathStep]) -> Execution {
    let scale = Rat::from_integer(oc.scale.into());
    let mut exec = Execution::start(mode, Config::initial(p, n));
    let mut pending_delay = Rat::zero();
    for step in chain {
        let cfg = exec.last().delayed(&pending_delay);
        // Scaled clock values of the current configuration.
        let scaled: Vec<Rat> = (0..n).map(|i| &cfg.clocks[i][0] * &scale).collect();
        match step {
            PathStep::Time => {
                let fracs: Vec<Rat> = scaled
                    .iter()
                    .map(|v| v - v.floor())
                    .filter(|f| !f.is_zero())
                    .collect();
                let has_zero = (0..n).any(|i| scaled[i].is_integer() && oc.class_of(&cfg.clocks[i][0]) != Class::Beyond);
                let d_scaled = if has_zero {
                    let fmax = fracs.iter().max().cloned().unwrap_or_else(Rat::zero);
                    (Rat::from_integer(1.into()) - fmax) / Rat::from_integer(2.into())
                } else {
                    let fmax = fracs.iter().max().cloned().expect("time step needs a fractional clock");
                    Rat::from_integer(1.into()) - fmax
                };
                pending_delay += d_scaled / &scale;
            }
            PathStep::Disc(mv) => {
                // Assign concrete processes to word slots.
                let grouping = frac_grouping(&scaled);
                let slot_of = |i: usize| -> Slot {
                    match oc.class_of(&cfg.clocks[i][0]) {
                        Class::Beyond => Slot { class: SlotClass::Beyond, loc: cfg.locs[i], n: 0 },
                        Class::At(m) => Slot { class: SlotClass::Zero, loc: cfg.locs[i], n: m },
                        Class::Between(m) => Slot {
                            class: SlotClass::Frac(grouping[&(&scaled[i] - scaled[i].floor())]),
                            loc: cfg.locs[i],
                            n: m,
                        },
                    }
                };
                let actor = (0..n)
                    .find(|&i| slot_of(i) == mv.actor)
                    .expect("actor slot occupied");
                let mut receivers: BTreeSet<usize> = BTreeSet::new();
                let mut choices: BTreeMap<usize, usize> = BTreeMap::new();
                for &(slot, f, cnt) in &mv.receivers {
                    let mut picked = 0;
                    for i in 0..n {
                        if picked == cnt {
                            break;
                        }
                        if i != actor && !receivers.contains(&i) && slot_of(i) == slot {
                            receivers.insert(i);
                            choices.insert(i, f);
                            picked += 1;
                        }
                    }
                    assert_eq!(picked, cnt, "receiver slots occupied");
                }
                if mode == Mode::Clique && matches!(oc.edge_action(mv.edge), Action::Send(_)) {
                    receivers = (0..n).filter(|&i| i != actor).collect();
                }
                let label = Label {
                    delay: pending_delay.clone(),
                    actor,
                    edge: mv.edge,
                    receivers,
                    choices,
                };
                let (next, moved) = semantics::step(p, mode, exec.last(), &label)
                    .expect("refined region step must replay");
                let mut recorded = label;
                recorded.choices = moved;
                exec.labels.push(recorded);
                exec.states.push(next);
                pending_delay = Rat::zero();
            }
        }
    }
    exec
}

/// Group index per distinct fractional value, in increasing order.
fn frac_grouping(scaled: &[Rat]) -> BTreeMap<Rat, usize> {
    let mut fracs: BTreeSet<Rat> = BTreeSet::new();
    for v in scaled {
        let f = v - v.floor();
        if !f.is_zero() {
            fracs.insert(f);
        }
    }
    fracs.into_iter().enumerate().map(|(i, f)| (f, i)).collect()
}

/// Counts of reachable words and edges of the fixed-size region graph.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphSummary {
    pub words: usize,
    pub time_edges: usize,
    pub discrete_edges: usize,
}

pub fn region_graph_summary(p: &Protocol, mode: Mode, n: usize) -> Result<GraphSummary, RegionError> {
    let oc = OneClock::build(p)?;
    let start = RegionWord::initial(&oc, n);
    let mut seen: BTreeSet<RegionWord> = BTreeSet::new();
    let mut queue: VecDeque<RegionWord> = VecDeque::new();
    seen.insert(start.clone());
    queue.push_back(start);
    let mut time_edges = 0usize;
    let mut discrete_edges = 0usize;
    while let Some(w) = queue.pop_front() {
        if let Some(t) = time_successor(&oc, &w) {
            time_edges += 1;
            if seen.insert(t.clone()) {
                queue.push_back(t);
            }
        }
        for (next, _) in discrete_successors(&oc, mode, &w) {
            discrete_edges += 1;
            if seen.insert(next.clone()) {
                queue.push_back(next);
            }
        }
    }
    Ok(GraphSummary {
        words: seen.len(),
        time_edges,
        discrete_edges,
    })
}

/// Renders a word as `Z{...} | F{...} | ... | B{...}` with `loc@n:count`
/// letters.
pub fn format_word(p: &Protocol, w: &RegionWord) -> String {
    let fmt_bag = |bag: &Bag<(LocId, u32)>| -> String {
        bag.iter()
            .map(|(&(l, n), &c)| format!("{}@{}:{}", p.loc_name(l), n, c))
            .collect::<Vec<_>>()
            .join(",")
    };
    let mut parts = vec![format!("Z{{{}}}", fmt_bag(&w.zero))];
    for g in &w.fracs {
        parts.push(format!("F{{{}}}", fmt_bag(g)));
    }
    let b = w
        .beyond
        .iter()
        .map(|(&l, &c)| format!("{}:{}", p.loc_name(l), c))
        .collect::<Vec<_>>()
        .join(",");
    parts.push(format!("B{{{}}}", b));
    parts.join(" | ")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::rat;
    use crate::semantics::{replay, RunEnd};
    use crate::textio::parse_protocol;

    fn factory_at(pt: i64, tl: i64) -> Protocol {
        let text = format!(
            "protocol factory\n\
             loc q0 c f s1 s2 s3 g\n\
             clocks x\n\
             messages f p\n\
             init q0\n\
             edge q0 -> c do recv f\n\
             edge q0 -> f do send f reset x\n\
             edge c -> s1 do recv p\n\
             edge s1 -> s2 do recv p\n\
             edge s2 -> s3 do recv p\n\
             edge s3 -> g when x < {}\n\
             edge f -> f when x >= {} do send p reset x\n",
            tl, pt
        );
        parse_protocol(&text).unwrap()
    }

    fn single(_oc: &OneClock, loc: usize, class: Class) -> RegionWord {
        let mut w = RegionWord::empty();
        match class {
            Class::At(n) => bag_add(&mut w.zero, (LocId(loc), n), 1),
            Class::Between(n) => {
                let mut b = Bag::new();
                bag_add(&mut b, (LocId(loc), n), 1);
                w.fracs.push(b);
            }
            Class::Beyond => bag_add(&mut w.beyond, LocId(loc), 1),
        }
        w
    }

    #[test]
    fn single_process_time_orbit_has_2k_plus_2_regions() {
        let p = factory_at(2, 9);
        let oc = OneClock::build(&p).unwrap();
        assert_eq!(oc.k, 9);
        assert_eq!(oc.scale, 1);
        let mut w = RegionWord::initial(&oc, 1);
        let mut visited = vec![w.clone()];
        while let Some(next) = time_successor(&oc, &w) {
            visited.push(next.clone());
            w = next;
        }
        assert_eq!(visited.len(), 2 * 9 + 2);
        assert_eq!(visited, oc.classes().iter().map(|&c| single(&oc, 0, c)).collect::<Vec<_>>());
    }

    #[test]
    fn time_predecessors_invert_time_successor() {
        let p = factory_at(2, 9);
        let oc = OneClock::build(&p).unwrap();
        // A word with a zero letter, two groups and a beyond letter.
        let mut w = RegionWord::empty();
        bag_add(&mut w.zero, (LocId(1), 3), 2);
        let mut g1 = Bag::new();
        bag_add(&mut g1, (LocId(2), 0), 1);
        let mut g2 = Bag::new();
        bag_add(&mut g2, (LocId(0), 5), 1);
        w.fracs = vec![g1, g2];
        bag_add(&mut w.beyond, LocId(4), 1);
        for u in pre_time(&oc, &w) {
            assert_eq!(time_successor(&oc, &u).as_ref(), Some(&w));
        }
        let wz = {
            let mut v = w.clone();
            v.zero.clear();
            v
        };
        let pres = pre_time(&oc, &wz);
        assert!(!pres.is_empty());
        for u in &pres {
            assert_eq!(time_successor(&oc, u).as_ref(), Some(&wz));
        }
    }

    #[test]
    fn covering_embeds_groups_in_order() {
        let mk = |groups: Vec<Vec<(usize, u32, usize)>>| -> RegionWord {
            let mut w = RegionWord::empty();
            for g in groups {
                let mut b = Bag::new();
                for (l, n, c) in g {
                    bag_add(&mut b, (LocId(l), n), c);
                }
                w.fracs.push(b);
            }
            w
        };
        let small = mk(vec![vec![(0, 1, 1)], vec![(1, 2, 1)]]);
        let big = mk(vec![vec![(9, 0, 1)], vec![(0, 1, 1), (5, 3, 1)], vec![(3, 3, 1)], vec![(1, 2, 2)]]);
        assert!(covers(&big, &small));
        let wrong_order = mk(vec![vec![(1, 2, 1)], vec![(0, 1, 1)]]);
        assert!(!covers(&wrong_order, &small));
        let merged = mk(vec![vec![(0, 1, 1), (1, 2, 1)]]);
        assert!(!covers(&merged, &small));
        assert!(covers(&merged, &mk(vec![vec![(0, 1, 1)]])));
    }

    #[test]
    fn factory_goal_is_coverable_reconfigurably() {
        let p = factory_at(1, 2);
        let oc = OneClock::build(&p).unwrap();
        let goal = p.loc_id("g").unwrap();
        let out = backward_coverability(&oc, goal).unwrap();
        assert!(out.reachable);
        assert!(out.stats.basis >= 1);
    }

    #[test]
    fn factory_goal_needs_production_faster_than_the_deadline() {
        // pt = tl: the third product arrives no earlier than pt, past the
        // deadline, for every network size.
        let p = factory_at(2, 2);
        let oc = OneClock::build(&p).unwrap();
        let goal = p.loc_id("g").unwrap();
        let out = backward_coverability(&oc, goal).unwrap();
        assert!(!out.reachable);
    }

    #[test]
    fn unreachable_goal_has_no_initial_basis_word() {
        // The only edge into b requires x = 1 but leaving a needs x > 1.
        let p = parse_protocol(
            "protocol t\nloc a m b\nclocks x\ninit a\n\
             edge a -> m when x > 1\n\
             edge m -> b when x = 1\n",
        )
        .unwrap();
        let oc = OneClock::build(&p).unwrap();
        let out = backward_coverability(&oc, p.loc_id("b").unwrap()).unwrap();
        assert!(!out.reachable);
        let fwd = region_graph_summary(&p, Mode::Reconfigurable, 2).unwrap();
        assert!(fwd.words > 0);
    }

    #[test]
    fn fixed_size_search_finds_and_refines_a_witness() {
        let p = factory_at(2, 9);
        let goal = p.loc_id("g").unwrap();
        let (none, _) = ef_fixed_n(&p, Mode::Reconfigurable, 1, goal).unwrap();
        assert!(none.is_none());
        let (got, _) = ef_fixed_n(&p, Mode::Reconfigurable, 2, goal).unwrap();
        let exec = got.expect("two processes suffice");
        let (again, _end) = replay(&p, Mode::Reconfigurable, 2, &exec.labels).unwrap();
        assert_eq!(again.states, exec.states);
        assert!(exec.last().locs.contains(&goal));
    }

    #[test]
    fn clique_fixed_size_search_respects_mandatory_reception() {
        let p = factory_at(3, 9);
        let goal = p.loc_id("g").unwrap();
        for n in 1..=4 {
            let (got, _) = ef_fixed_n(&p, Mode::Clique, n, goal).unwrap();
            assert!(got.is_none(), "3pt < tl fails, no witness at n={}", n);
        }
        let p2 = factory_at(2, 9);
        let goal2 = p2.loc_id("g").unwrap();
        let (got, _) = ef_fixed_n(&p2, Mode::Clique, 2, goal2).unwrap();
        let exec = got.expect("one factory and one client reach the goal");
        let (again, _) = replay(&p2, Mode::Clique, 2, &exec.labels).unwrap();
        assert_eq!(again.states, exec.states);
    }

    #[test]
    fn reconfigurable_needs_fewer_when_more_factories_help() {
        // 2pt < tl < 3pt: two sizes behave differently.
        let p = factory_at(4, 9);
        let goal = p.loc_id("g").unwrap();
        let (two, _) = ef_fixed_n(&p, Mode::Reconfigurable, 2, goal).unwrap();
        assert!(two.is_none(), "single factory takes 3pt = 12 > tl");
        let (three, _) = ef_fixed_n(&p, Mode::Reconfigurable, 3, goal).unwrap();
        let exec = three.expect("two factories interleave productions");
        let (again, end) = replay(&p, Mode::Reconfigurable, 3, &exec.labels).unwrap();
        assert_eq!(again.states, exec.states);
        assert!(matches!(end, RunEnd::Truncated | RunEnd::Terminal));
    }

    #[test]
    fn region_of_groups_equal_fractions() {
        let p = factory_at(2, 9);
        let oc = OneClock::build(&p).unwrap();
        let mut cfg = Config::initial(&p, 4);
        cfg.clocks[0][0] = rat(1, 2);
        cfg.clocks[1][0] = rat(3, 2);
        cfg.clocks[2][0] = rat(1, 4);
        cfg.clocks[3][0] = rat(3, 1);
        let w = region_of(&oc, &cfg);
        assert_eq!(w.fracs.len(), 2);
        assert_eq!(bag_size(&w.fracs[0]), 1);
        assert_eq!(bag_size(&w.fracs[1]), 2);
        assert_eq!(w.zero.get(&(LocId(0), 3)), Some(&1));
    }

    #[test]
    fn halves_scale_to_integer_grid() {
        let p = parse_protocol(
            "protocol t\nloc a b\nclocks x\ninit a\nedge a -> b when x = 1/2\n",
        )
        .unwrap();
        let oc = OneClock::build(&p).unwrap();
        assert_eq!((oc.k, oc.scale), (1, 2));
        let (got, _) = ef_fixed_n(&p, Mode::Reconfigurable, 1, p.loc_id("b").unwrap()).unwrap();
        let exec = got.expect("goal at the half boundary");
        assert_eq!(exec.labels[0].delay, rat(1, 2));
    }
}
