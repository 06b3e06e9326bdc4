//! Brute-force weak bisimulation, for testing the refinement on small inputs.

use std::collections::BTreeSet;

use crate::automaton::{Automaton, Label};
use crate::error::{Error, Result};

use super::{InternalSemantics, Partition};

pub const DEFAULT_ORACLE_BOUND: usize = 64;

/// Greatest-fixpoint weak bisimulation over explicit state pairs.
#[derive(Clone, Debug)]
pub struct WeakBisimOracle {
    /// Largest total number of states the oracle accepts.
    pub bound: usize,
    pub semantics: InternalSemantics,
}

impl Default for WeakBisimOracle {
    fn default() -> Self {
        WeakBisimOracle {
            bound: DEFAULT_ORACLE_BOUND,
            semantics: InternalSemantics::Silent,
        }
    }
}

struct Lts<'a> {
    n: usize,
    edges: Vec<(usize, &'a Label, usize)>,
}

impl<'a> Lts<'a> {
    fn union(parts: &[&'a Automaton]) -> (Self, Vec<usize>) {
        let mut edges = Vec::new();
        let mut offsets = Vec::with_capacity(parts.len());
        let mut n = 0;
        for a in parts {
            offsets.push(n);
            edges.extend(a.transitions().iter().map(|t| (t.source + n, &t.label, t.target + n)));
            n += a.state_count();
        }
        (Lts { n, edges }, offsets)
    }

    /// Largest weak bisimulation on the states, as a symmetric boolean matrix.
    fn bisimulation(&self, semantics: InternalSemantics) -> Vec<Vec<bool>> {
        let n = self.n;
        let mut closure = vec![vec![false; n]; n];
        for (q, row) in closure.iter_mut().enumerate() {
            row[q] = true;
        }
        for &(s, l, t) in &self.edges {
            if l.is_internal() {
                closure[s][t] = true;
            }
        }
        for k in 0..n {
            for i in 0..n {
                if closure[i][k] {
                    for j in 0..n {
                        if closure[k][j] {
                            closure[i][j] = true;
                        }
                    }
                }
            }
        }

        let labels: Vec<&Label> = self
            .edges
            .iter()
            .map(|e| e.1)
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect();
        // weak[li][q][p]: q =labels[li]=> p
        let weak: Vec<Vec<Vec<bool>>> = labels
            .iter()
            .map(|&l| {
                if l.is_internal() && semantics == InternalSemantics::Silent {
                    return closure.clone();
                }
                let mut direct = vec![vec![false; n]; n];
                for &(s, m, t) in &self.edges {
                    if m == l {
                        direct[s][t] = true;
                    }
                }
                (0..n)
                    .map(|q| {
                        let mut row = vec![false; n];
                        for q1 in (0..n).filter(|&q1| closure[q][q1]) {
                            for q2 in (0..n).filter(|&q2| direct[q1][q2]) {
                                for (p, cell) in row.iter_mut().enumerate() {
                                    *cell |= closure[q2][p];
                                }
                            }
                        }
                        row
                    })
                    .collect()
            })
            .collect();
        let label_index = |l: &Label| labels.binary_search(&l).expect("label of the union");
        let moves: Vec<Vec<(usize, usize)>> = {
            let mut m = vec![Vec::new(); n];
            for &(s, l, t) in &self.edges {
                m[s].push((label_index(l), t));
            }
            m
        };

        let mut rel = vec![vec![true; n]; n];
        let simulates = |rel: &Vec<Vec<bool>>, p: usize, q: usize| {
            moves[p]
                .iter()
                .all(|&(li, p2)| (0..n).any(|q2| weak[li][q][q2] && rel[p2][q2]))
        };
        let mut changed = true;
        while changed {
            changed = false;
            for p in 0..n {
                for q in p + 1..n {
                    if rel[p][q] && !(simulates(&rel, p, q) && simulates(&rel, q, p)) {
                        rel[p][q] = false;
                        rel[q][p] = false;
                        changed = true;
                    }
                }
            }
        }
        rel
    }
}

impl WeakBisimOracle {
    fn check_bound(&self, states: usize) -> Result<()> {
        if states > self.bound {
            return Err(Error::OracleBound {
                states,
                bound: self.bound,
            });
        }
        Ok(())
    }

    /// True iff every initial state of each automaton is weakly bisimilar to
    /// some initial state of the other.
    pub fn equivalent(&self, a: &Automaton, b: &Automaton) -> Result<bool> {
        self.check_bound(a.state_count() + b.state_count())?;
        if a.hierarchy().names() != b.hierarchy().names() {
            return Err(Error::HierarchyMismatch);
        }
        let (lts, offsets) = Lts::union(&[a, b]);
        let rel = lts.bisimulation(self.semantics);
        let ia: Vec<usize> = a.initial().iter().map(|&q| q + offsets[0]).collect();
        let ib: Vec<usize> = b.initial().iter().map(|&q| q + offsets[1]).collect();
        let covered = |from: &[usize], to: &[usize]| from.iter().all(|&p| to.iter().any(|&q| rel[p][q]));
        Ok(covered(&ia, &ib) && covered(&ib, &ia))
    }

    /// Weak bisimilarity on the states of one automaton.
    pub fn relation(&self, a: &Automaton) -> Result<Vec<Vec<bool>>> {
        self.check_bound(a.state_count())?;
        Ok(Lts::union(&[a]).0.bisimulation(self.semantics))
    }

    /// The equivalence classes of [`WeakBisimOracle::relation`].
    pub fn classes(&self, a: &Automaton) -> Result<Partition> {
        let rel = self.relation(a)?;
        let n = a.state_count();
        let mut seen = vec![false; n];
        let mut blocks = Vec::new();
        for p in 0..n {
            if seen[p] {
                continue;
            }
            let block: Vec<usize> = (p..n).filter(|&q| rel[p][q]).collect();
            block.iter().for_each(|&q| seen[q] = true);
            blocks.push(block);
        }
        Partition::new(n, blocks)
    }
}

/// [`WeakBisimOracle::equivalent`] with the default bound and silent semantics.
pub fn weak_bisim_oracle(a: &Automaton, b: &Automaton) -> Result<bool> {
    WeakBisimOracle::default().equivalent(a, b)
}
