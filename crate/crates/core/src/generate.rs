//! Seeded generator of primitive automata with preferential-attachment
//! topology, and of automaton pairs that can synchronize.
//!
//! All randomness comes from `Pcg64` (PCG XSL RR 128/64) seeded with
//! `seed_from_u64`, so a seed fixes the output on every platform.

use std::collections::{BTreeSet, HashSet};
use std::ops::RangeInclusive;

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore, SeedableRng};
use rand_distr::Normal;
use rand_pcg::Pcg64;

use crate::automaton::{Action, Automaton, ComponentName, Hierarchy, Label, LabelKind, StateId};
use crate::error::{Error, Result};

pub const MIN_BETA: f64 = 0.63;
pub const MAX_BETA: f64 = 2.0;
/// Preferential-attachment draws tried before falling back to a free slot.
const PA_ATTEMPTS: usize = 32;

/// Relative frequencies of input, output and internal labels.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KindMix {
    pub input: f64,
    pub output: f64,
    pub internal: f64,
}

impl Default for KindMix {
    fn default() -> Self {
        KindMix {
            input: 0.4,
            output: 0.4,
            internal: 0.2,
        }
    }
}

impl KindMix {
    fn weights(&self) -> [f64; 3] {
        [self.input, self.output, self.internal]
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct GenParams {
    pub states: RangeInclusive<usize>,
    pub target_beta: f64,
    /// Standard deviation of the per-automaton exponent around `target_beta`
    /// (clipped to the attainable range); 0 makes every automaton use the target.
    pub beta_spread: f64,
    pub alphabet_size: usize,
    pub kind_mix: KindMix,
    /// Probability that an edge-placement round emits an internal chain.
    pub clique_bias: f64,
    pub pa_strength: f64,
    /// Whether the two automata of a pair draw from one alphabet.
    pub shared_alphabet: bool,
    pub seed: u64,
}

impl Default for GenParams {
    fn default() -> Self {
        GenParams {
            states: 3..=10,
            target_beta: 1.36,
            beta_spread: 0.19,
            alphabet_size: 6,
            kind_mix: KindMix::default(),
            clique_bias: 0.2,
            pa_strength: 0.5,
            shared_alphabet: true,
            seed: 0,
        }
    }
}

impl GenParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::Infeasible(msg));
        if *self.states.start() < 2 || self.states.is_empty() {
            return bad(format!(
                "state range {}..{} must be non-empty with minimum >= 2",
                self.states.start(),
                self.states.end()
            ));
        }
        if !(MIN_BETA..=MAX_BETA).contains(&self.target_beta) {
            return bad(format!("target beta {} outside [{MIN_BETA}, {MAX_BETA}]", self.target_beta));
        }
        if !(self.beta_spread >= 0.0 && self.beta_spread.is_finite()) {
            return bad(format!("beta spread {} must be finite and >= 0", self.beta_spread));
        }
        if self.alphabet_size == 0 {
            return bad("alphabet size must be at least 1".into());
        }
        let w = self.kind_mix.weights();
        if w.iter().any(|x| !(*x >= 0.0)) || (w.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return bad(format!("kind mix {w:?} must be non-negative and sum to 1"));
        }
        if !(0.0..=1.0).contains(&self.clique_bias) {
            return bad(format!("clique bias {} outside [0, 1]", self.clique_bias));
        }
        if !(self.pa_strength >= 0.0 && self.pa_strength.is_finite()) {
            return bad(format!("attachment strength {} must be finite and >= 0", self.pa_strength));
        }
        Ok(())
    }
}

/// `round(n^β)` clamped to `[n − 1, n²]`.
pub fn edge_budget(n: usize, beta: f64) -> usize {
    let raw = (n as f64).powf(beta).round() as usize;
    raw.clamp(n - 1, n * n)
}

/// Actions a pair partner should prefer, to make handshakes likely.
#[derive(Clone, Debug, Default)]
struct Partner {
    /// Actions the partner receives; ours to send.
    inputs: Vec<Action>,
    /// Actions the partner sends; ours to receive.
    outputs: Vec<Action>,
}

const PARTNER_BIAS: f64 = 0.75;

struct Builder<'a, R: Rng> {
    rng: &'a mut R,
    params: &'a GenParams,
    component: ComponentName,
    alphabet: Vec<Action>,
    partner: Option<&'a Partner>,
    edges: Vec<(usize, Label, usize)>,
    seen: HashSet<(usize, Label, usize)>,
    out_deg: Vec<usize>,
    in_deg: Vec<usize>,
}

impl<R: Rng> Builder<'_, R> {
    /// Index drawn with probability proportional to `(degree + 1)^pa_strength`.
    fn pick_by_degree(&mut self, degrees: &[usize]) -> usize {
        let pa = self.params.pa_strength;
        let weights = degrees.iter().map(|&d| (d as f64 + 1.0).powf(pa));
        match WeightedIndex::new(weights) {
            Ok(dist) => dist.sample(self.rng),
            Err(_) => self.rng.random_range(0..degrees.len()),
        }
    }

    fn kind(&mut self) -> LabelKind {
        let dist = WeightedIndex::new(self.params.kind_mix.weights()).expect("validated kind mix");
        [LabelKind::Input, LabelKind::Output, LabelKind::Internal][dist.sample(self.rng)]
    }

    fn action(&mut self, kind: LabelKind) -> Action {
        let preferred = match (self.partner, kind) {
            (Some(p), LabelKind::Output) => p.inputs.as_slice(),
            (Some(p), LabelKind::Input) => p.outputs.as_slice(),
            _ => &[],
        };
        if !preferred.is_empty() && self.rng.random_bool(PARTNER_BIAS) {
            return preferred[self.rng.random_range(0..preferred.len())].clone();
        }
        self.alphabet[self.rng.random_range(0..self.alphabet.len())].clone()
    }

    fn label(&self, kind: LabelKind, action: Action) -> Label {
        let c = self.component.clone();
        match kind {
            LabelKind::Input => Label::input(action, c),
            LabelKind::Output => Label::output(c, action),
            LabelKind::Internal => Label::internal(c.clone(), action, c),
        }
    }

    fn push(&mut self, s: usize, label: Label, t: usize) -> bool {
        if !self.seen.insert((s, label.clone(), t)) {
            return false;
        }
        self.edges.push((s, label, t));
        self.out_deg[s] += 1;
        self.in_deg[t] += 1;
        true
    }

    /// Adds one edge, retrying on duplicates and finally falling back to a
    /// uniformly chosen free `(source, label, target)` slot.
    fn add_edge(&mut self, source: Option<usize>, kind: Option<LabelKind>) -> Option<(usize, usize)> {
        for _ in 0..PA_ATTEMPTS {
            let s = source.unwrap_or_else(|| {
                let out = self.out_deg.clone();
                self.pick_by_degree(&out)
            });
            let inn = self.in_deg.clone();
            let t = self.pick_by_degree(&inn);
            let k = kind.unwrap_or_else(|| self.kind());
            let a = self.action(k);
            let label = self.label(k, a);
            if self.push(s, label, t) {
                return Some((s, t));
            }
        }
        let n = self.out_deg.len();
        let kinds: Vec<LabelKind> = match kind {
            Some(k) => vec![k],
            None => [LabelKind::Input, LabelKind::Output, LabelKind::Internal]
                .into_iter()
                .zip(self.params.kind_mix.weights())
                .filter(|(_, w)| *w > 0.0)
                .map(|(k, _)| k)
                .collect(),
        };
        let sources: Vec<usize> = source.map_or_else(|| (0..n).collect(), |s| vec![s]);
        let mut free = Vec::new();
        for &s in &sources {
            for t in 0..n {
                for &k in &kinds {
                    for a in &self.alphabet {
                        let label = self.label(k, a.clone());
                        if !self.seen.contains(&(s, label.clone(), t)) {
                            free.push((s, label, t));
                        }
                    }
                }
            }
        }
        if free.is_empty() {
            return None;
        }
        let (s, label, t) = free.swap_remove(self.rng.random_range(0..free.len()));
        self.push(s, label, t);
        Some((s, t))
    }
}

fn primitive_with<R: Rng>(
    rng: &mut R,
    params: &GenParams,
    component: &str,
    alphabet: Vec<Action>,
    partner: Option<&Partner>,
) -> Result<Automaton> {
    let n = rng.random_range(params.states.clone());
    let beta = if params.beta_spread > 0.0 {
        let noise = Normal::new(params.target_beta, params.beta_spread).expect("finite spread");
        noise.sample(rng).clamp(MIN_BETA, MAX_BETA)
    } else {
        params.target_beta
    };
    let budget = edge_budget(n, beta);
    let component = ComponentName::new(component)?;
    let mut b = Builder {
        rng,
        params,
        component: component.clone(),
        alphabet,
        partner,
        edges: Vec::with_capacity(budget),
        seen: HashSet::with_capacity(budget),
        out_deg: vec![0; n],
        in_deg: vec![0; n],
    };

    // Spanning arborescence rooted at the initial state, each state hanging
    // off a uniformly chosen earlier one.
    for child in 1..n {
        let parent = b.rng.random_range(0..child);
        let kind = if b.rng.random_bool(params.clique_bias) {
            LabelKind::Internal
        } else {
            b.kind()
        };
        let action = b.action(kind);
        let label = b.label(kind, action);
        b.push(parent, label, child);
    }

    while b.edges.len() < budget {
        let left = budget - b.edges.len();
        if b.rng.random_bool(params.clique_bias) && left >= 2 {
            let len = b.rng.random_range(2..=5usize).min(left);
            let mut at = None;
            for _ in 0..len {
                match b.add_edge(at, Some(LabelKind::Internal)) {
                    Some((_, t)) => at = Some(t),
                    None => break,
                }
            }
            if at.is_none() && b.add_edge(None, None).is_none() {
                break;
            }
        } else if b.add_edge(None, None).is_none() {
            break;
        }
    }

    let states: Vec<StateId> = (0..n)
        .map(|i| StateId::new(format!("s{i}")).expect("valid id"))
        .collect();
    let hierarchy = Hierarchy::leaf(vec![component.clone()])?;
    Ok(Automaton::from_indexed(
        component.to_string(),
        states,
        BTreeSet::new(),
        b.edges,
        [0],
        hierarchy,
    ))
}

fn alphabet(prefix: char, size: usize) -> Vec<Action> {
    (0..size)
        .map(|i| Action::new(format!("{prefix}{i}")).expect("valid action"))
        .collect()
}

/// One primitive automaton named `C0`, determined by `params.seed`.
pub fn generate_primitive(params: &GenParams) -> Result<Automaton> {
    params.validate()?;
    let mut rng = Pcg64::seed_from_u64(params.seed);
    primitive_with(&mut rng, params, "C0", alphabet('a', params.alphabet_size), None)
}

/// The `index`-th pair of a corpus, from its own seed.
pub fn generate_pair(params: &GenParams, index: usize, seed: u64) -> Result<(Automaton, Automaton)> {
    params.validate()?;
    let mut rng = Pcg64::seed_from_u64(seed);
    let first = primitive_with(
        &mut rng,
        params,
        &format!("C{}", 2 * index),
        alphabet('a', params.alphabet_size),
        None,
    )?;
    let (second_alphabet, partner) = if params.shared_alphabet {
        let mut p = Partner::default();
        for t in first.transitions() {
            match t.label.kind() {
                LabelKind::Input => p.inputs.push(t.label.action().clone()),
                LabelKind::Output => p.outputs.push(t.label.action().clone()),
                LabelKind::Internal => {}
            }
        }
        p.inputs.sort();
        p.inputs.dedup();
        p.outputs.sort();
        p.outputs.dedup();
        (alphabet('a', params.alphabet_size), Some(p))
    } else {
        (alphabet('b', params.alphabet_size), None)
    };
    let second = primitive_with(
        &mut rng,
        params,
        &format!("C{}", 2 * index + 1),
        second_alphabet,
        partner.as_ref(),
    )?;
    Ok((first, second))
}

/// Per-pair seeds derived from the corpus seed.
pub fn pair_seeds(seed: u64, n_pairs: usize) -> Vec<u64> {
    let mut rng = Pcg64::seed_from_u64(seed);
    (0..n_pairs).map(|_| rng.next_u64()).collect()
}

pub fn generate_corpus(params: &GenParams, n_pairs: usize) -> Result<Vec<(Automaton, Automaton)>> {
    params.validate()?;
    if n_pairs == 0 {
        return Err(Error::Infeasible("corpus needs at least one pair".into()));
    }
    pair_seeds(params.seed, n_pairs)
        .into_iter()
        .enumerate()
        .map(|(i, s)| generate_pair(params, i, s))
        .collect()
}
