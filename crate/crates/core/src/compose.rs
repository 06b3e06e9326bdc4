//! Product construction over an ordered list of components, gated by the
//! provided/required action sets, and the pairwise compose-then-reduce fold.

use std::collections::{BTreeSet, HashMap};

use crate::automaton::{Action, Automaton, Hierarchy, Label, LabelKind, StateId};
use crate::error::{Error, Result};
use crate::refine::{partition_refine, quotient_with, RefineOptions};

/// Product states beyond this are refused rather than materialized.
pub const MAX_PRODUCT_STATES: u128 = 20_000_000;

/// Provided (`P`) and required (`R`) actions of a composition.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct IoSets {
    pub provided: BTreeSet<Action>,
    pub required: BTreeSet<Action>,
}

impl IoSets {
    pub fn new(provided: impl IntoIterator<Item = Action>, required: impl IntoIterator<Item = Action>) -> Self {
        IoSets {
            provided: provided.into_iter().collect(),
            required: required.into_iter().collect(),
        }
    }

    pub fn empty() -> Self {
        IoSets::default()
    }

    fn check_against(&self, components: &[Automaton]) -> Result<()> {
        let all: BTreeSet<&Action> = components.iter().flat_map(|c| c.actions()).collect();
        for (set, actions) in [("provided", &self.provided), ("required", &self.required)] {
            if let Some(a) = actions.iter().find(|a| !all.contains(a)) {
                return Err(Error::UnknownIoAction {
                    set,
                    action: a.to_string(),
                });
            }
        }
        Ok(())
    }
}

/// `R` = actions on some component INPUT label, `P` = actions on some OUTPUT label.
pub fn default_io_sets(components: &[Automaton]) -> IoSets {
    let mut io = IoSets::empty();
    for t in components.iter().flat_map(|c| c.transitions()) {
        match t.label.kind() {
            LabelKind::Input => {
                io.required.insert(t.label.action().clone());
            }
            LabelKind::Output => {
                io.provided.insert(t.label.action().clone());
            }
            LabelKind::Internal => {}
        }
    }
    io
}

/// Which of the four product transition classes a composite transition is in.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum SyncClass {
    /// An existing internal synchronization of one component.
    OldSync,
    /// A fresh handshake between an output of one component and an input of another.
    NewSync,
    Input,
    Output,
}

fn check_disjoint(components: &[Automaton]) -> Result<()> {
    let mut seen = BTreeSet::new();
    for c in components {
        for n in c.hierarchy().names() {
            if !seen.insert(n.clone()) {
                return Err(Error::HierarchyOverlap(n.to_string()));
            }
        }
    }
    Ok(())
}

fn composite_state_name(parts: &[&StateId]) -> StateId {
    let mut s = String::from("(");
    for (i, p) in parts.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(p.as_str());
    }
    s.push(')');
    StateId::new(s).expect("component state ids contain no whitespace")
}

/// n-ary product of `components` under `io`.
///
/// The composite transition relation is the union of internal transitions lifted
/// from single components, output/input handshakes between distinct components,
/// solo inputs on actions in `R` and solo outputs on actions in `P`.
pub fn compose(components: &[Automaton], io: &IoSets) -> Result<Automaton> {
    if components.len() < 2 {
        return Err(Error::TooFewComponents(components.len()));
    }
    check_disjoint(components)?;
    io.check_against(components)?;
    compose_unchecked(components, io)
}

fn compose_unchecked(components: &[Automaton], io: &IoSets) -> Result<Automaton> {
    let sizes: Vec<usize> = components.iter().map(Automaton::state_count).collect();
    let total = sizes.iter().map(|&s| s as u128).product::<u128>();
    if total > MAX_PRODUCT_STATES {
        return Err(Error::ProductTooLarge(total));
    }
    let total = total as usize;
    let n = components.len();
    // Row-major mixed radix: the last component varies fastest.
    let mut strides = vec![1usize; n];
    for i in (0..n - 1).rev() {
        strides[i] = strides[i + 1] * sizes[i + 1];
    }
    let decode = |mut idx: usize, out: &mut [usize]| {
        for i in 0..n {
            out[i] = idx / strides[i];
            idx %= strides[i];
        }
    };

    let succ: Vec<Vec<Vec<usize>>> = components.iter().map(Automaton::successors).collect();
    // Per component: (state, action) -> input transitions, for handshakes.
    let inputs: Vec<HashMap<(usize, &Action), Vec<usize>>> = components
        .iter()
        .map(|c| {
            let mut m: HashMap<(usize, &Action), Vec<usize>> = HashMap::new();
            for (ti, t) in c.transitions().iter().enumerate() {
                if t.label.kind() == LabelKind::Input {
                    m.entry((t.source, t.label.action())).or_default().push(ti);
                }
            }
            m
        })
        .collect();

    let mut states = Vec::with_capacity(total);
    let mut tuple = vec![0usize; n];
    for idx in 0..total {
        decode(idx, &mut tuple);
        let parts: Vec<&StateId> = (0..n).map(|i| components[i].state(tuple[i])).collect();
        states.push(composite_state_name(&parts));
    }

    let mut transitions = Vec::new();
    for idx in 0..total {
        decode(idx, &mut tuple);
        for i in 0..n {
            let qi = tuple[i];
            for &ti in &succ[i][qi] {
                let t = &components[i].transitions()[ti];
                let moved = idx - qi * strides[i] + t.target * strides[i];
                match t.label.kind() {
                    LabelKind::Internal => transitions.push((idx, t.label.clone(), moved)),
                    LabelKind::Input => {
                        if io.required.contains(t.label.action()) {
                            transitions.push((idx, t.label.clone(), moved));
                        }
                    }
                    LabelKind::Output => {
                        if io.provided.contains(t.label.action()) {
                            transitions.push((idx, t.label.clone(), moved));
                        }
                        let sender = t.label.src().expect("output label has a source").clone();
                        for (j, inputs_j) in inputs.iter().enumerate() {
                            if j == i {
                                continue;
                            }
                            let Some(partners) = inputs_j.get(&(tuple[j], t.label.action())) else {
                                continue;
                            };
                            for &pj in partners {
                                let p = &components[j].transitions()[pj];
                                let receiver = p.label.dst().expect("input label has a target").clone();
                                let target = moved - tuple[j] * strides[j] + p.target * strides[j];
                                transitions.push((
                                    idx,
                                    Label::internal(sender.clone(), t.label.action().clone(), receiver),
                                    target,
                                ));
                            }
                        }
                    }
                }
            }
        }
    }

    let mut initial = Vec::new();
    let mut stack: Vec<(usize, usize)> = vec![(0, 0)];
    while let Some((depth, acc)) = stack.pop() {
        if depth == n {
            initial.push(acc);
            continue;
        }
        for &q in components[depth].initial() {
            stack.push((depth + 1, acc + q * strides[depth]));
        }
    }

    let name: String = components.iter().map(Automaton::name).collect();
    let actions = components.iter().flat_map(|c| c.actions().iter().cloned()).collect();
    let hierarchy = Hierarchy::Node(components.iter().map(|c| c.hierarchy().clone()).collect());
    Ok(Automaton::from_indexed(
        name,
        states,
        actions,
        transitions,
        initial,
        hierarchy,
    ))
}

/// Classifies a composite transition label given the composite's components.
/// Internal labels whose two annotations come from different components are
/// fresh handshakes; all other internal labels were lifted unchanged.
pub fn sync_class(components: &[Automaton], label: &Label) -> SyncClass {
    match label.kind() {
        LabelKind::Input => SyncClass::Input,
        LabelKind::Output => SyncClass::Output,
        LabelKind::Internal => {
            let owner = |n| components.iter().position(|c| c.hierarchy().contains(n));
            let src = owner(label.src().expect("internal"));
            let dst = owner(label.dst().expect("internal"));
            if src == dst {
                SyncClass::OldSync
            } else {
                SyncClass::NewSync
            }
        }
    }
}

/// Left fold composing two automata at a time, pruning unreachable states and
/// reducing up to weak bisimulation after every step.
pub fn compose_pairwise_reduce(components: &[Automaton], io: &IoSets, options: &RefineOptions) -> Result<Automaton> {
    if components.len() < 2 {
        return Err(Error::TooFewComponents(components.len()));
    }
    check_disjoint(components)?;
    io.check_against(components)?;
    let mut composite = components[0].clone();
    for next in &components[1..] {
        let product = compose_unchecked(&[composite, next.clone()], io)?.reachable();
        let partition = partition_refine(&product, options)?;
        composite = quotient_with(&product, &partition, options.semantics);
    }
    Ok(composite)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::format::parse_automaton;

    pub(crate) fn handshake_pair() -> (Automaton, Automaton) {
        let a = parse_automaton(
            "automaton A\nhierarchy (A)\nstates a0 a1\ninitial a0\ntrans a0 (-,m,A) a1\nend\n",
        )
        .unwrap();
        let b = parse_automaton(
            "automaton B\nhierarchy (B)\nstates b0 b1\ninitial b0\ntrans b0 (B,m,-) b1\nend\n",
        )
        .unwrap();
        (a, b)
    }

    fn edges(c: &Automaton) -> BTreeSet<(String, String, String)> {
        c.transitions()
            .iter()
            .map(|t| {
                (
                    c.state(t.source).to_string(),
                    t.label.to_string(),
                    c.state(t.target).to_string(),
                )
            })
            .collect()
    }

    #[test]
    fn handshake_only_without_io() {
        let (a, b) = handshake_pair();
        let c = compose(&[a, b], &IoSets::empty()).unwrap();
        assert_eq!(c.state_count(), 4);
        assert_eq!(
            edges(&c),
            BTreeSet::from([("(a0,b0)".into(), "(B,m,A)".into(), "(a1,b1)".into())])
        );
        assert_eq!(c.initial().len(), 1);
        assert_eq!(c.state(c.initial()[0]).as_str(), "(a0,b0)");
        assert_eq!(c.hierarchy().to_string(), "((A)(B))");
    }

    #[test]
    fn solo_moves_with_open_io() {
        let (a, b) = handshake_pair();
        let m = Action::new("m").unwrap();
        let io = IoSets::new([m.clone()], [m]);
        let c = compose(&[a, b], &io).unwrap();
        let expected: BTreeSet<(String, String, String)> = [
            ("(a0,b0)", "(B,m,A)", "(a1,b1)"),
            ("(a0,b0)", "(-,m,A)", "(a1,b0)"),
            ("(a0,b1)", "(-,m,A)", "(a1,b1)"),
            ("(a0,b0)", "(B,m,-)", "(a0,b1)"),
            ("(a1,b0)", "(B,m,-)", "(a1,b1)"),
        ]
        .iter()
        .map(|(x, y, z)| (x.to_string(), y.to_string(), z.to_string()))
        .collect();
        assert_eq!(edges(&c), expected);
    }

    #[test]
    fn default_io_from_open_labels() {
        let (a, b) = handshake_pair();
        let io = default_io_sets(&[a.clone(), b.clone()]);
        let m = Action::new("m").unwrap();
        assert_eq!(io, IoSets::new([m.clone()], [m]));

        let single = parse_automaton(
            "automaton S\nhierarchy (S)\nstates s0 s1\ninitial s0\ntrans s0 (-,a,S) s1\ntrans s1 (S,b,-) s0\nend\n",
        )
        .unwrap();
        let io = default_io_sets(&[single]);
        assert_eq!(io.required, BTreeSet::from([Action::new("a").unwrap()]));
        assert_eq!(io.provided, BTreeSet::from([Action::new("b").unwrap()]));

        let internal_only = parse_automaton(
            "automaton I\nhierarchy (I J)\nstates s0 s1\ninitial s0\ntrans s0 (I,t,J) s1\nend\n",
        )
        .unwrap();
        assert_eq!(default_io_sets(&[internal_only]), IoSets::empty());
    }

    #[test]
    fn internal_transitions_lift_regardless_of_io() {
        let (_, b) = handshake_pair();
        let a = parse_automaton(
            "automaton A\nhierarchy (A A2)\nstates a0 a1\ninitial a0\ntrans a0 (A,t,A2) a1\nend\n",
        )
        .unwrap();
        let c = compose(&[a, b], &IoSets::empty()).unwrap();
        let lifted: Vec<_> = c
            .transitions()
            .iter()
            .filter(|t| t.label.to_string() == "(A,t,A2)")
            .collect();
        assert_eq!(lifted.len(), 2);
    }

    #[test]
    fn compose_errors() {
        let (a, b) = handshake_pair();
        assert_eq!(
            compose(std::slice::from_ref(&a), &IoSets::empty()),
            Err(Error::TooFewComponents(1))
        );
        assert_eq!(
            compose(&[a.clone(), a.clone()], &IoSets::empty()),
            Err(Error::HierarchyOverlap("A".into()))
        );
        let io = IoSets::new([Action::new("zzz").unwrap()], []);
        assert!(matches!(compose(&[a, b], &io), Err(Error::UnknownIoAction { .. })));
    }

    #[test]
    fn pairwise_of_singletons() {
        let single = |n: &str| {
            parse_automaton(&format!(
                "automaton {n}\nhierarchy ({n})\nstates q\ninitial q\nend\n"
            ))
            .unwrap()
        };
        let out = compose_pairwise_reduce(
            &[single("X"), single("Y"), single("Z")],
            &IoSets::empty(),
            &RefineOptions::default(),
        )
        .unwrap();
        assert_eq!(out.state_count(), 1);
        assert_eq!(out.transition_count(), 0);
    }

    #[test]
    fn sync_classes() {
        let (a, b) = handshake_pair();
        let comps = [a, b];
        let c = compose(&comps, &default_io_sets(&comps)).unwrap();
        let mut seen = BTreeSet::new();
        for t in c.transitions() {
            seen.insert(format!("{:?}", sync_class(&comps, &t.label)));
        }
        assert_eq!(seen.len(), 3);
    }
}
