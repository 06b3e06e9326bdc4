//! Graphviz rendering.

use std::fmt::Write as _;

use crate::automaton::Automaton;

fn quoted(s: &str) -> String {
    let mut out = String::with_capacity(s.len() + 2);
    out.push('"');
    for c in s.chars() {
        if c == '"' || c == '\\' {
            out.push('\\');
        }
        out.push(c);
    }
    out.push('"');
    out
}

/// DOT digraph of `a`. Initial states are double circles; internal
/// synchronizations are dashed and blue. Output follows the canonical state
/// and transition order, so equal automata render identically.
pub fn export_dot(a: &Automaton) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "digraph {} {{", quoted(a.name()));
    s.push_str("  rankdir=LR;\n  node [shape=circle];\n");
    for (i, q) in a.states().iter().enumerate() {
        if a.is_initial(i) {
            let _ = writeln!(s, "  {} [shape=doublecircle];", quoted(q.as_str()));
        } else {
            let _ = writeln!(s, "  {};", quoted(q.as_str()));
        }
    }
    for t in a.transitions() {
        let style = if t.label.is_internal() {
            ", style=dashed, color=blue"
        } else {
            ""
        };
        let _ = writeln!(
            s,
            "  {} -> {} [label={}{}];",
            quoted(a.state(t.source).as_str()),
            quoted(a.state(t.target).as_str()),
            quoted(&t.label.to_string()),
            style
        );
    }
    s.push_str("}\n");
    s
}
