//! Weak-bisimulation partition refinement.
//!
//! Internal synchronizations are silent: `q =l=> p` for a visible label `l`
//! means some internal steps, one `l` step, then some internal steps. For an
//! internal label it means `p` is in the silent closure of `q`
//! ([`InternalSemantics::Silent`]), or the label itself must occur between the
//! silent steps ([`InternalSemantics::Strict`]).
//!
//! The refinement loop keeps singleton and multi-state blocks apart, iterates
//! over the labels, and refines only the multi-state blocks against a chosen
//! splitter block until a full pass over the labels changes nothing.

mod oracle;

pub use oracle::{weak_bisim_oracle, WeakBisimOracle, DEFAULT_ORACLE_BOUND};

use std::collections::{BTreeSet, HashSet};
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;

use crate::automaton::{Automaton, Label, StateId};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum InternalSemantics {
    /// Every internal synchronization is a silent step.
    #[default]
    Silent,
    /// Internal labels are matched label-for-label, surrounded by silent steps.
    Strict,
}

#[derive(Clone, Debug, Default)]
pub struct RefineOptions {
    pub timeout: Option<Duration>,
    pub semantics: InternalSemantics,
}

impl RefineOptions {
    pub fn with_timeout(timeout: Duration) -> Self {
        RefineOptions {
            timeout: Some(timeout),
            ..RefineOptions::default()
        }
    }
}

/// Reflexive-transitive closure of the internal transitions, per state, in
/// both directions.
#[derive(Clone, Debug)]
pub struct SilentClosure {
    forward: Vec<FixedBitSet>,
    backward: Vec<FixedBitSet>,
}

impl SilentClosure {
    pub fn new(a: &Automaton) -> Self {
        let n = a.state_count();
        let mut internal_succ = vec![Vec::new(); n];
        for t in a.transitions() {
            if t.label.is_internal() {
                internal_succ[t.source].push(t.target);
            }
        }
        let mut forward = Vec::with_capacity(n);
        let mut stack = Vec::new();
        for q in 0..n {
            let mut set = FixedBitSet::with_capacity(n);
            set.insert(q);
            stack.push(q);
            while let Some(x) = stack.pop() {
                for &y in &internal_succ[x] {
                    if !set.put(y) {
                        stack.push(y);
                    }
                }
            }
            forward.push(set);
        }
        let mut backward = vec![FixedBitSet::with_capacity(n); n];
        for (q, set) in forward.iter().enumerate() {
            for p in set.ones() {
                backward[p].insert(q);
            }
        }
        SilentClosure { forward, backward }
    }

    /// States reachable from `q` by zero or more internal transitions.
    pub fn of(&self, q: usize) -> &FixedBitSet {
        &self.forward[q]
    }

    /// States that reach `q` by zero or more internal transitions.
    pub fn reaching(&self, q: usize) -> &FixedBitSet {
        &self.backward[q]
    }

    pub fn contains(&self, q: usize, p: usize) -> bool {
        self.forward[q].contains(p)
    }

    fn backward_of(&self, set: &FixedBitSet) -> FixedBitSet {
        let mut out = FixedBitSet::with_capacity(set.len());
        for p in set.ones() {
            out.union_with(&self.backward[p]);
        }
        out
    }
}

pub fn silent_closure(a: &Automaton) -> SilentClosure {
    SilentClosure::new(a)
}

fn matches_silently(l: &Label, semantics: InternalSemantics) -> bool {
    l.is_internal() && semantics == InternalSemantics::Silent
}

/// All `p` with `q =l=> p`.
pub fn weak_targets(
    q: usize,
    l: &Label,
    a: &Automaton,
    closure: &SilentClosure,
    semantics: InternalSemantics,
) -> FixedBitSet {
    if matches_silently(l, semantics) {
        return closure.of(q).clone();
    }
    let n = a.state_count();
    let start = closure.of(q);
    let mut out = FixedBitSet::with_capacity(n);
    for t in a.transitions() {
        if &t.label == l && start.contains(t.source) {
            out.union_with(closure.of(t.target));
        }
    }
    out
}

/// True iff `q` can weakly reach a state of `block` via `l`.
pub fn splitter(
    q: usize,
    l: &Label,
    block: &[usize],
    a: &Automaton,
    closure: &SilentClosure,
    semantics: InternalSemantics,
) -> bool {
    let targets = weak_targets(q, l, a, closure, semantics);
    block.iter().any(|&p| targets.contains(p))
}

/// A set of disjoint, non-empty blocks covering the states `0..n`.
///
/// Blocks are kept sorted internally and ordered by their smallest state.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Partition {
    blocks: Vec<Vec<usize>>,
    block_of: Vec<usize>,
}

impl Partition {
    pub fn new(n: usize, blocks: Vec<Vec<usize>>) -> Result<Self> {
        let mut blocks: Vec<Vec<usize>> = blocks
            .into_iter()
            .map(|mut b| {
                b.sort_unstable();
                b
            })
            .collect();
        if blocks.iter().any(Vec::is_empty) {
            return Err(Error::InvalidPartition("empty block".into()));
        }
        blocks.sort_unstable_by_key(|b| b[0]);
        let mut block_of = vec![usize::MAX; n];
        for (i, b) in blocks.iter().enumerate() {
            for &q in b {
                if q >= n {
                    return Err(Error::InvalidPartition(format!("state {q} out of range")));
                }
                if block_of[q] != usize::MAX {
                    return Err(Error::InvalidPartition(format!("state {q} in two blocks")));
                }
                block_of[q] = i;
            }
        }
        if let Some(q) = block_of.iter().position(|&b| b == usize::MAX) {
            return Err(Error::InvalidPartition(format!("state {q} not covered")));
        }
        Ok(Partition { blocks, block_of })
    }

    /// One block holding every state.
    pub fn coarsest(n: usize) -> Self {
        Partition::new(n, vec![(0..n).collect()]).expect("n > 0")
    }

    pub fn discrete(n: usize) -> Self {
        Partition::new(n, (0..n).map(|q| vec![q]).collect()).expect("valid")
    }

    pub fn blocks(&self) -> &[Vec<usize>] {
        &self.blocks
    }

    pub fn len(&self) -> usize {
        self.blocks.len()
    }

    pub fn is_empty(&self) -> bool {
        self.blocks.is_empty()
    }

    pub fn block_of(&self, q: usize) -> usize {
        self.block_of[q]
    }

    pub fn state_count(&self) -> usize {
        self.block_of.len()
    }

    /// `X¹`: the singleton blocks.
    pub fn singletons(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.blocks.iter().filter(|b| b.len() == 1)
    }

    /// `X^{>1}`: the blocks with two or more states.
    pub fn multis(&self) -> impl Iterator<Item = &Vec<usize>> {
        self.blocks.iter().filter(|b| b.len() > 1)
    }

    pub fn is_discrete(&self) -> bool {
        self.blocks.len() == self.block_of.len()
    }

    /// Blocks rendered with state ids, for display.
    pub fn named_blocks<'a>(&self, a: &'a Automaton) -> Vec<Vec<&'a StateId>> {
        self.blocks
            .iter()
            .map(|b| b.iter().map(|&q| a.state(q)).collect())
            .collect()
    }
}

/// Precomputed data for evaluating splitters as predecessor sets.
struct SplitterIndex<'a> {
    closure: &'a SilentClosure,
    n: usize,
    /// One entry per splitter label class: `None` is the silent class.
    classes: Vec<Option<Vec<(usize, usize)>>>,
}

impl<'a> SplitterIndex<'a> {
    fn new(a: &Automaton, closure: &'a SilentClosure, semantics: InternalSemantics) -> Self {
        let labels: BTreeSet<&Label> = a.transitions().iter().map(|t| &t.label).collect();
        let mut classes = Vec::new();
        let mut silent_seen = false;
        for l in labels {
            if matches_silently(l, semantics) {
                // Every internal label yields the same silent splitter; one suffices.
                if !silent_seen {
                    silent_seen = true;
                    classes.push(None);
                }
                continue;
            }
            let edges = a
                .transitions()
                .iter()
                .filter(|t| &t.label == l)
                .map(|t| (t.source, t.target))
                .collect();
            classes.push(Some(edges));
        }
        SplitterIndex {
            closure,
            n: a.state_count(),
            classes,
        }
    }

    /// `{q | splitter(q, class, block)}`.
    fn predecessors(&self, class: usize, block: &[usize]) -> FixedBitSet {
        let mut target = FixedBitSet::with_capacity(self.n);
        for &p in block {
            target.insert(p);
        }
        let after = self.closure.backward_of(&target);
        match &self.classes[class] {
            None => after,
            Some(edges) => {
                let mut pre = FixedBitSet::with_capacity(self.n);
                for &(s, t) in edges {
                    if after.contains(t) {
                        pre.insert(s);
                    }
                }
                self.closure.backward_of(&pre)
            }
        }
    }
}

fn split_by(block: &[usize], marked: &FixedBitSet) -> (Vec<usize>, Vec<usize>) {
    block.iter().partition(|&&q| marked.contains(q))
}

/// One application of the refine function: every block of `x` is split into its
/// members for which the splitter holds and those for which it does not.
pub fn refine_step(
    x: &Partition,
    l: &Label,
    splitter_block: &[usize],
    a: &Automaton,
    closure: &SilentClosure,
    semantics: InternalSemantics,
) -> Partition {
    let marked: FixedBitSet = if matches_silently(l, semantics) {
        let mut target = FixedBitSet::with_capacity(a.state_count());
        splitter_block.iter().for_each(|&p| target.insert(p));
        closure.backward_of(&target)
    } else {
        let mut target = FixedBitSet::with_capacity(a.state_count());
        splitter_block.iter().for_each(|&p| target.insert(p));
        let after = closure.backward_of(&target);
        let mut pre = FixedBitSet::with_capacity(a.state_count());
        for t in a.transitions() {
            if &t.label == l && after.contains(t.target) {
                pre.insert(t.source);
            }
        }
        closure.backward_of(&pre)
    };
    let mut blocks = Vec::with_capacity(x.len() + 1);
    for b in x.blocks() {
        let (yes, no) = split_by(b, &marked);
        blocks.extend([yes, no].into_iter().filter(|h| !h.is_empty()));
    }
    Partition::new(x.state_count(), blocks).expect("refinement of a partition is a partition")
}

/// Counters describing one refinement run.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RefineStats {
    /// Refine-step applications actually evaluated.
    pub steps: usize,
    /// Block splits; each adds exactly one block.
    pub splits: usize,
    /// Outer passes over the label set.
    pub passes: usize,
    pub elapsed: Duration,
}

/// Coarsest partition of `a`'s states that is stable under every splitter.
pub fn partition_refine(a: &Automaton, options: &RefineOptions) -> Result<Partition> {
    partition_refine_traced(a, options).map(|(p, _)| p)
}

/// [`partition_refine`] that also reports [`RefineStats`].
pub fn partition_refine_traced(a: &Automaton, options: &RefineOptions) -> Result<(Partition, RefineStats)> {
    let started = Instant::now();
    let n = a.state_count();
    let closure = SilentClosure::new(a);
    let index = SplitterIndex::new(a, &closure, options.semantics);
    let mut stats = RefineStats::default();

    // Arena of every block ever created; a block's content never reappears
    // under another id once it has been split.
    let mut arena: Vec<Vec<usize>> = vec![(0..n).collect()];
    let mut live: Vec<usize> = vec![0];
    // (class, block id) pairs already applied. Re-applying one is a no-op:
    // afterwards every block is uniform for it, and refinement keeps it so.
    let mut applied: HashSet<(usize, usize)> = HashSet::new();

    let mut repeat = true;
    while repeat {
        repeat = false;
        stats.passes += 1;
        for class in 0..index.classes.len() {
            loop {
                let chosen = live
                    .iter()
                    .copied()
                    .filter(|&b| !applied.contains(&(class, b)))
                    .min_by(|&x, &y| {
                        arena[x]
                            .len()
                            .cmp(&arena[y].len())
                            .then_with(|| arena[x].cmp(&arena[y]))
                    });
                let Some(chosen) = chosen else {
                    break;
                };
                if let Some(limit) = options.timeout {
                    let elapsed = started.elapsed();
                    if elapsed > limit {
                        return Err(Error::Timeout {
                            elapsed,
                            blocks: live.len(),
                        });
                    }
                }
                applied.insert((class, chosen));
                stats.steps += 1;
                let marked = index.predecessors(class, &arena[chosen]);
                let mut next_live = Vec::with_capacity(live.len() + 1);
                let mut changed = false;
                for &b in &live {
                    if arena[b].len() < 2 {
                        next_live.push(b);
                        continue;
                    }
                    let (yes, no) = split_by(&arena[b], &marked);
                    if yes.is_empty() || no.is_empty() {
                        next_live.push(b);
                    } else {
                        changed = true;
                        stats.splits += 1;
                        next_live.push(arena.len());
                        arena.push(yes);
                        next_live.push(arena.len());
                        arena.push(no);
                    }
                }
                if changed {
                    live = next_live;
                    repeat = true;
                }
            }
        }
    }

    stats.elapsed = started.elapsed();
    let blocks = live.into_iter().map(|b| std::mem::take(&mut arena[b])).collect();
    let partition = Partition::new(n, blocks).expect("blocks partition the states");
    Ok((partition, stats))
}

/// Quotient under the default silent semantics.
pub fn quotient(a: &Automaton, x: &Partition) -> Automaton {
    quotient_with(a, x, InternalSemantics::Silent)
}

/// One state `r0, r1, ...` per block (in block order); transitions are the
/// deduplicated images of `δ`. Internal self-loops on a block are dropped under
/// silent semantics, where they are unobservable.
pub fn quotient_with(a: &Automaton, x: &Partition, semantics: InternalSemantics) -> Automaton {
    let states: Vec<StateId> = (0..x.len())
        .map(|i| StateId::new(format!("r{i}")).expect("valid id"))
        .collect();
    let transitions = a.transitions().iter().filter_map(|t| {
        let (s, d) = (x.block_of(t.source), x.block_of(t.target));
        if s == d && matches_silently(&t.label, semantics) {
            None
        } else {
            Some((s, t.label.clone(), d))
        }
    });
    let initial = a.initial().iter().map(|&q| x.block_of(q));
    Automaton::from_indexed(
        format!("{}'", a.name()),
        states,
        a.actions().clone(),
        transitions,
        initial,
        a.hierarchy().clone(),
    )
}

/// Partition refinement followed by the quotient.
pub fn minimize(a: &Automaton, options: &RefineOptions) -> Result<Automaton> {
    let x = partition_refine(a, options)?;
    Ok(quotient_with(a, &x, options.semantics))
}
