//! Component Interaction Automata: names, structured labels, hierarchies and
//! the automaton quintuple itself.

use std::collections::{BTreeMap, BTreeSet, VecDeque};
use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use crate::error::{Error, Result};

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn check_name_token(what: &'static str, token: &str) -> Result<()> {
    if token.is_empty() || !token.chars().all(is_name_char) {
        return Err(Error::InvalidToken {
            what,
            token: token.to_string(),
        });
    }
    Ok(())
}

macro_rules! token_newtype {
    ($(#[$meta:meta])* $name:ident, $what:literal, $check:expr) => {
        $(#[$meta])*
        #[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
        pub struct $name(Arc<str>);

        impl $name {
            pub fn new(token: impl AsRef<str>) -> Result<Self> {
                let token = token.as_ref();
                ($check)($what, token)?;
                Ok($name(Arc::from(token)))
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl fmt::Debug for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                write!(f, "{:?}", &*self.0)
            }
        }

        impl FromStr for $name {
            type Err = Error;

            fn from_str(s: &str) -> Result<Self> {
                $name::new(s)
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }
    };
}

token_newtype!(
    /// A primitive component instance name (letters, digits, underscore).
    ComponentName,
    "component name",
    check_name_token
);

token_newtype!(
    /// An action token (letters, digits, underscore).
    Action,
    "action",
    check_name_token
);

token_newtype!(
    /// Opaque state identifier. Composite states are rendered as `(q1,q2,...)`.
    StateId,
    "state id",
    |what, token: &str| {
        if token.is_empty() || token.chars().any(|c: char| c.is_whitespace() || c == '#') {
            Err(Error::InvalidToken {
                what,
                token: token.to_string(),
            })
        } else {
            Ok(())
        }
    }
);

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum LabelKind {
    Input,
    Output,
    Internal,
}

/// Structured label `(src, action, dst)`; `None` stands for the absent annotation `-`.
///
/// The derived order is the canonical one: by source, action, target, with an
/// absent annotation sorting before any name.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Label {
    src: Option<ComponentName>,
    action: Action,
    dst: Option<ComponentName>,
}

impl Label {
    pub fn new(src: Option<ComponentName>, action: Action, dst: Option<ComponentName>) -> Result<Self> {
        if src.is_none() && dst.is_none() {
            return Err(Error::AbsentLabel);
        }
        Ok(Label { src, action, dst })
    }

    pub fn input(action: Action, dst: ComponentName) -> Self {
        Label {
            src: None,
            action,
            dst: Some(dst),
        }
    }

    pub fn output(src: ComponentName, action: Action) -> Self {
        Label {
            src: Some(src),
            action,
            dst: None,
        }
    }

    pub fn internal(src: ComponentName, action: Action, dst: ComponentName) -> Self {
        Label {
            src: Some(src),
            action,
            dst: Some(dst),
        }
    }

    pub fn src(&self) -> Option<&ComponentName> {
        self.src.as_ref()
    }

    pub fn action(&self) -> &Action {
        &self.action
    }

    pub fn dst(&self) -> Option<&ComponentName> {
        self.dst.as_ref()
    }

    pub fn kind(&self) -> LabelKind {
        match (&self.src, &self.dst) {
            (None, _) => LabelKind::Input,
            (_, None) => LabelKind::Output,
            _ => LabelKind::Internal,
        }
    }

    pub fn is_internal(&self) -> bool {
        self.kind() == LabelKind::Internal
    }

    /// Component names mentioned by the label.
    pub fn names(&self) -> impl Iterator<Item = &ComponentName> {
        self.src.iter().chain(self.dst.iter())
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let side = |n: &Option<ComponentName>| n.as_ref().map_or("-", |n| n.as_str()).to_string();
        write!(f, "({},{},{})", side(&self.src), self.action, side(&self.dst))
    }
}

impl fmt::Debug for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Label {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let inner = s
            .strip_prefix('(')
            .and_then(|rest| rest.strip_suffix(')'))
            .ok_or_else(|| Error::Syntax(format!("label `{s}` must have the form (src,action,dst)")))?;
        let parts: Vec<&str> = inner.split(',').collect();
        if parts.len() != 3 {
            return Err(Error::Syntax(format!(
                "label `{s}` must have exactly three comma-separated fields"
            )));
        }
        let side = |t: &str| -> Result<Option<ComponentName>> {
            if t == "-" {
                Ok(None)
            } else {
                ComponentName::new(t).map(Some)
            }
        };
        Label::new(side(parts[0])?, Action::new(parts[1])?, side(parts[2])?)
    }
}

/// Composition hierarchy: a primitive composition of component instances, or a
/// composition of sub-hierarchies whose leaf sets are pairwise disjoint.
#[derive(Clone, PartialEq, Eq, Hash)]
pub enum Hierarchy {
    Leaf(Vec<ComponentName>),
    Node(Vec<Hierarchy>),
}

impl Hierarchy {
    pub fn leaf(names: Vec<ComponentName>) -> Result<Self> {
        let h = Hierarchy::Leaf(names);
        h.validate()?;
        Ok(h)
    }

    pub fn node(children: Vec<Hierarchy>) -> Result<Self> {
        let h = Hierarchy::Node(children);
        h.validate()?;
        Ok(h)
    }

    /// Checks non-emptiness and pairwise disjointness of all sibling leaf sets.
    pub fn validate(&self) -> Result<()> {
        let mut seen = BTreeSet::new();
        self.collect_checked(&mut seen)
    }

    fn collect_checked<'a>(&'a self, seen: &mut BTreeSet<&'a ComponentName>) -> Result<()> {
        match self {
            Hierarchy::Leaf(names) => {
                if names.is_empty() {
                    return Err(Error::EmptyHierarchy);
                }
                for n in names {
                    if !seen.insert(n) {
                        return Err(Error::HierarchyOverlap(n.to_string()));
                    }
                }
            }
            Hierarchy::Node(children) => {
                if children.is_empty() {
                    return Err(Error::EmptyHierarchy);
                }
                for c in children {
                    c.collect_checked(seen)?;
                }
            }
        }
        Ok(())
    }

    /// `S(H)`: every component name at the leaves.
    pub fn names(&self) -> BTreeSet<ComponentName> {
        let mut out = BTreeSet::new();
        self.collect_names(&mut out);
        out
    }

    fn collect_names(&self, out: &mut BTreeSet<ComponentName>) {
        match self {
            Hierarchy::Leaf(names) => out.extend(names.iter().cloned()),
            Hierarchy::Node(children) => children.iter().for_each(|c| c.collect_names(out)),
        }
    }

    pub fn contains(&self, name: &ComponentName) -> bool {
        match self {
            Hierarchy::Leaf(names) => names.contains(name),
            Hierarchy::Node(children) => children.iter().any(|c| c.contains(name)),
        }
    }
}

impl fmt::Display for Hierarchy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Hierarchy::Leaf(names) => {
                f.write_str("(")?;
                for (i, n) in names.iter().enumerate() {
                    if i > 0 {
                        f.write_str(" ")?;
                    }
                    f.write_str(n.as_str())?;
                }
                f.write_str(")")
            }
            Hierarchy::Node(children) => {
                f.write_str("(")?;
                for c in children {
                    write!(f, "{c}")?;
                }
                f.write_str(")")
            }
        }
    }
}

impl fmt::Debug for Hierarchy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Display::fmt(self, f)
    }
}

impl FromStr for Hierarchy {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parser = HierarchyParser {
            chars: s.char_indices().peekable(),
            src: s,
        };
        let h = parser.parse()?;
        parser.skip_ws();
        if let Some((i, _)) = parser.chars.peek() {
            return Err(Error::Syntax(format!(
                "trailing input after hierarchy at offset {i}"
            )));
        }
        h.validate()?;
        Ok(h)
    }
}

struct HierarchyParser<'a> {
    chars: std::iter::Peekable<std::str::CharIndices<'a>>,
    src: &'a str,
}

impl HierarchyParser<'_> {
    fn skip_ws(&mut self) {
        while self.chars.next_if(|(_, c)| c.is_whitespace()).is_some() {}
    }

    fn expect(&mut self, want: char) -> Result<()> {
        self.skip_ws();
        match self.chars.next() {
            Some((_, c)) if c == want => Ok(()),
            Some((i, c)) => Err(Error::Syntax(format!(
                "expected `{want}` in hierarchy, found `{c}` at offset {i}"
            ))),
            None => Err(Error::Syntax(format!(
                "expected `{want}` in hierarchy, found end of line"
            ))),
        }
    }

    fn parse(&mut self) -> Result<Hierarchy> {
        self.expect('(')?;
        self.skip_ws();
        if matches!(self.chars.peek(), Some((_, '('))) {
            let mut children = Vec::new();
            loop {
                self.skip_ws();
                match self.chars.peek() {
                    Some((_, '(')) => children.push(self.parse()?),
                    Some((_, ')')) => {
                        self.chars.next();
                        return Ok(Hierarchy::Node(children));
                    }
                    Some((i, c)) => {
                        return Err(Error::Syntax(format!(
                            "unexpected `{c}` at offset {i} in hierarchy node"
                        )))
                    }
                    None => return Err(Error::Syntax("unterminated hierarchy".into())),
                }
            }
        }
        let mut names = Vec::new();
        loop {
            self.skip_ws();
            match self.chars.peek().copied() {
                Some((_, ')')) => {
                    self.chars.next();
                    if names.is_empty() {
                        return Err(Error::EmptyHierarchy);
                    }
                    return Ok(Hierarchy::Leaf(names));
                }
                Some((start, _)) => {
                    let mut end = start;
                    while let Some((i, c)) = self.chars.peek().copied() {
                        if c.is_whitespace() || c == '(' || c == ')' {
                            break;
                        }
                        end = i + c.len_utf8();
                        self.chars.next();
                    }
                    if end == start {
                        return Err(Error::Syntax(format!(
                            "unexpected `(` at offset {start} inside a leaf"
                        )));
                    }
                    names.push(ComponentName::new(&self.src[start..end])?);
                }
                None => return Err(Error::Syntax("unterminated hierarchy".into())),
            }
        }
    }
}

/// A transition between states given by index into [`Automaton::states`].
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Transition {
    pub source: usize,
    pub label: Label,
    pub target: usize,
}

/// The quintuple `(Q, Act, δ, I, H)`.
///
/// Values are kept in canonical form: states sorted lexicographically (so state
/// indices follow that order), transitions sorted by `(source, label, target)`
/// and free of duplicates. Structural equality is therefore set equality.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct Automaton {
    name: String,
    states: Vec<StateId>,
    actions: BTreeSet<Action>,
    transitions: Vec<Transition>,
    initial: Vec<usize>,
    hierarchy: Hierarchy,
}

impl Automaton {
    pub fn builder(name: impl Into<String>, hierarchy: Hierarchy) -> AutomatonBuilder {
        AutomatonBuilder {
            name: name.into(),
            hierarchy,
            states: Vec::new(),
            actions: BTreeSet::new(),
            initial: Vec::new(),
            transitions: Vec::new(),
        }
    }

    /// Builds an automaton from indexed parts produced by the library itself.
    /// `states` must be unique; the result is re-sorted into canonical form.
    pub(crate) fn from_indexed(
        name: String,
        states: Vec<StateId>,
        actions: BTreeSet<Action>,
        transitions: impl IntoIterator<Item = (usize, Label, usize)>,
        initial: impl IntoIterator<Item = usize>,
        hierarchy: Hierarchy,
    ) -> Automaton {
        let mut order: Vec<usize> = (0..states.len()).collect();
        order.sort_by(|&a, &b| states[a].cmp(&states[b]));
        let mut remap = vec![0usize; states.len()];
        for (new, &old) in order.iter().enumerate() {
            remap[old] = new;
        }
        let sorted: Vec<StateId> = order.iter().map(|&i| states[i].clone()).collect();
        debug_assert!(sorted.windows(2).all(|w| w[0] < w[1]), "state ids must be unique");
        let mut transitions: Vec<Transition> = transitions
            .into_iter()
            .map(|(s, label, t)| Transition {
                source: remap[s],
                label,
                target: remap[t],
            })
            .collect();
        transitions.sort_unstable();
        transitions.dedup();
        let mut actions = actions;
        actions.extend(transitions.iter().map(|t| t.label.action().clone()));
        let mut initial: Vec<usize> = initial.into_iter().map(|i| remap[i]).collect();
        initial.sort_unstable();
        initial.dedup();
        Automaton {
            name,
            states: sorted,
            actions,
            transitions,
            initial,
            hierarchy,
        }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn states(&self) -> &[StateId] {
        &self.states
    }

    pub fn state(&self, index: usize) -> &StateId {
        &self.states[index]
    }

    pub fn state_index(&self, id: &str) -> Option<usize> {
        self.states.binary_search_by(|s| s.as_str().cmp(id)).ok()
    }

    pub fn state_count(&self) -> usize {
        self.states.len()
    }

    pub fn actions(&self) -> &BTreeSet<Action> {
        &self.actions
    }

    pub fn transitions(&self) -> &[Transition] {
        &self.transitions
    }

    pub fn transition_count(&self) -> usize {
        self.transitions.len()
    }

    pub fn internal_transition_count(&self) -> usize {
        self.transitions.iter().filter(|t| t.label.is_internal()).count()
    }

    pub fn initial(&self) -> &[usize] {
        &self.initial
    }

    pub fn is_initial(&self, state: usize) -> bool {
        self.initial.binary_search(&state).is_ok()
    }

    pub fn hierarchy(&self) -> &Hierarchy {
        &self.hierarchy
    }

    /// `Σ` restricted to the labels occurring in `δ`, in canonical order.
    pub fn labels(&self) -> BTreeSet<Label> {
        self.transitions.iter().map(|t| t.label.clone()).collect()
    }

    pub fn out_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.states.len()];
        for t in &self.transitions {
            d[t.source] += 1;
        }
        d
    }

    pub fn in_degrees(&self) -> Vec<usize> {
        let mut d = vec![0; self.states.len()];
        for t in &self.transitions {
            d[t.target] += 1;
        }
        d
    }

    /// Outgoing transitions per state, as indices into [`Automaton::transitions`].
    pub fn successors(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.states.len()];
        for (i, t) in self.transitions.iter().enumerate() {
            out[t.source].push(i);
        }
        out
    }

    /// Re-checks every structural invariant.
    pub fn validate(&self) -> Result<()> {
        self.hierarchy.validate()?;
        if self.initial.is_empty() {
            return Err(Error::EmptyInitial);
        }
        for w in self.states.windows(2) {
            if w[0] >= w[1] {
                return Err(Error::DuplicateState(w[1].to_string()));
            }
        }
        let n = self.states.len();
        if self.initial.iter().any(|&i| i >= n) {
            return Err(Error::UnknownState("initial index out of range".into()));
        }
        let names = self.hierarchy.names();
        for t in &self.transitions {
            if t.source >= n || t.target >= n {
                return Err(Error::UnknownState("transition endpoint out of range".into()));
            }
            if !self.actions.contains(t.label.action()) {
                return Err(Error::Syntax(format!("action `{}` missing from Act", t.label.action())));
            }
            if let Some(unknown) = t.label.names().find(|c| !names.contains(*c)) {
                return Err(Error::UnknownComponent(unknown.to_string()));
            }
        }
        if self.transitions.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Syntax("transitions not in canonical order".into()));
        }
        Ok(())
    }

    /// Restricts the automaton to the states reachable from `I` along forward
    /// transitions. `Act`, `I` and `H` are unchanged.
    pub fn reachable(&self) -> Automaton {
        let succ = self.successors();
        let mut seen = vec![false; self.states.len()];
        let mut queue: VecDeque<usize> = self.initial.iter().copied().collect();
        for &i in &self.initial {
            seen[i] = true;
        }
        while let Some(q) = queue.pop_front() {
            for &ti in &succ[q] {
                let t = self.transitions[ti].target;
                if !seen[t] {
                    seen[t] = true;
                    queue.push_back(t);
                }
            }
        }
        if seen.iter().all(|&s| s) {
            return self.clone();
        }
        // Keeping a subsequence of the sorted states preserves canonical order.
        let mut remap = vec![usize::MAX; self.states.len()];
        let mut states = Vec::new();
        for (i, s) in self.states.iter().enumerate() {
            if seen[i] {
                remap[i] = states.len();
                states.push(s.clone());
            }
        }
        let transitions = self
            .transitions
            .iter()
            .filter(|t| seen[t.source])
            .map(|t| Transition {
                source: remap[t.source],
                label: t.label.clone(),
                target: remap[t.target],
            })
            .collect();
        Automaton {
            name: self.name.clone(),
            states,
            actions: self.actions.clone(),
            transitions,
            initial: self.initial.iter().map(|&i| remap[i]).collect(),
            hierarchy: self.hierarchy.clone(),
        }
    }
}

/// Free-function form of [`Automaton::reachable`].
pub fn reachable(a: &Automaton) -> Automaton {
    a.reachable()
}

/// Incremental, validating construction of an [`Automaton`] from state ids.
#[derive(Clone, Debug)]
pub struct AutomatonBuilder {
    name: String,
    hierarchy: Hierarchy,
    states: Vec<StateId>,
    actions: BTreeSet<Action>,
    initial: Vec<StateId>,
    transitions: Vec<(StateId, Label, StateId)>,
}

impl AutomatonBuilder {
    pub fn state(mut self, id: impl AsRef<str>) -> Result<Self> {
        self.states.push(StateId::new(id)?);
        Ok(self)
    }

    pub fn states<I, S>(mut self, ids: I) -> Result<Self>
    where
        I: IntoIterator<Item = S>,
        S: AsRef<str>,
    {
        for id in ids {
            self.states.push(StateId::new(id)?);
        }
        Ok(self)
    }

    pub fn initial(mut self, id: impl AsRef<str>) -> Result<Self> {
        self.initial.push(StateId::new(id)?);
        Ok(self)
    }

    pub fn action(mut self, action: Action) -> Self {
        self.actions.insert(action);
        self
    }

    pub fn transition(mut self, from: impl AsRef<str>, label: Label, to: impl AsRef<str>) -> Result<Self> {
        self.transitions
            .push((StateId::new(from)?, label, StateId::new(to)?));
        Ok(self)
    }

    /// Shorthand taking the label in its textual form, e.g. `"(-,m,A)"`.
    pub fn trans(self, from: impl AsRef<str>, label: &str, to: impl AsRef<str>) -> Result<Self> {
        let label = label.parse()?;
        self.transition(from, label, to)
    }

    pub fn build(self) -> Result<Automaton> {
        self.hierarchy.validate()?;
        let mut index = BTreeMap::new();
        for (i, s) in self.states.iter().enumerate() {
            if index.insert(s.clone(), i).is_some() {
                return Err(Error::DuplicateState(s.to_string()));
            }
        }
        if self.initial.is_empty() {
            return Err(Error::EmptyInitial);
        }
        let lookup = |s: &StateId| index.get(s).copied().ok_or_else(|| Error::UnknownState(s.to_string()));
        let initial = self.initial.iter().map(lookup).collect::<Result<Vec<_>>>()?;
        let names = self.hierarchy.names();
        let mut transitions = Vec::with_capacity(self.transitions.len());
        for (from, label, to) in self.transitions {
            if let Some(unknown) = label.names().find(|c| !names.contains(*c)) {
                return Err(Error::UnknownComponent(unknown.to_string()));
            }
            transitions.push((lookup(&from)?, label, lookup(&to)?));
        }
        Ok(Automaton::from_indexed(
            self.name,
            self.states,
            self.actions,
            transitions,
            initial,
            self.hierarchy,
        ))
    }
}
