//! Line-oriented textual format for automata.
//!
//! ```text
//! automaton C1
//! hierarchy (A)
//! states s0 s1
//! initial s0
//! actions idle            # optional: actions not used by any transition
//! trans s0 (-,m,A) s1
//! end
//! ```
//!
//! `#` starts a comment. A document may hold several `automaton ... end` blocks.

use std::collections::BTreeSet;
use std::fmt::Write as _;

use crate::automaton::{Action, Automaton, Hierarchy, Label, StateId};
use crate::error::{Error, Result};

struct Token<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Token<'_>> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, c) in line.char_indices() {
        match (c.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push(Token {
                    text: &line[s..i],
                    column: s + 1,
                });
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push(Token {
            text: &line[s..],
            column: s + 1,
        });
    }
    out
}

fn strip_comment(line: &str) -> &str {
    line.find('#').map_or(line, |i| &line[..i])
}

#[derive(Default)]
struct Block {
    name: String,
    start_line: usize,
    hierarchy: Option<Hierarchy>,
    states: Vec<(StateId, usize, usize)>,
    initial: Vec<(StateId, usize, usize)>,
    actions: BTreeSet<Action>,
    transitions: Vec<(StateId, Label, StateId, usize, usize)>,
}

impl Block {
    fn finish(self, end_line: usize) -> Result<Automaton> {
        let hierarchy = self.hierarchy.ok_or_else(|| {
            Error::at(
                self.start_line,
                1,
                Error::Syntax(format!("automaton `{}` has no hierarchy line", self.name)),
            )
        })?;
        let names = hierarchy.names();
        let mut declared = BTreeSet::new();
        for (s, line, col) in &self.states {
            if !declared.insert(s.clone()) {
                return Err(Error::at(*line, *col, Error::DuplicateState(s.to_string())));
            }
        }
        if self.initial.is_empty() {
            return Err(Error::at(end_line, 1, Error::EmptyInitial));
        }
        let known = |s: &StateId, line: usize, col: usize| {
            if declared.contains(s) {
                Ok(())
            } else {
                Err(Error::at(line, col, Error::UnknownState(s.to_string())))
            }
        };
        for (s, line, col) in &self.initial {
            known(s, *line, *col)?;
        }
        let mut builder = Automaton::builder(self.name, hierarchy);
        for (s, _, _) in self.states {
            builder = builder.state(s)?;
        }
        for (s, _, _) in self.initial {
            builder = builder.initial(s)?;
        }
        for a in self.actions {
            builder = builder.action(a);
        }
        for (from, label, to, line, col) in self.transitions {
            if let Some(unknown) = label.names().find(|c| !names.contains(*c)) {
                return Err(Error::at(line, col, Error::UnknownComponent(unknown.to_string())));
            }
            known(&from, line, col)?;
            known(&to, line, col)?;
            builder = builder.transition(from, label, to)?;
        }
        builder.build().map_err(|e| Error::at(end_line, 1, e))
    }
}

/// Parses every `automaton ... end` block of a document.
pub fn parse_document(text: &str) -> Result<Vec<Automaton>> {
    let mut out = Vec::new();
    let mut block: Option<Block> = None;
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = strip_comment(raw);
        let tokens = tokenize(line);
        let Some(keyword) = tokens.first() else {
            continue;
        };
        let at = |col: usize, e: Error| Error::at(line_no, col, e);
        let syntax = |col: usize, msg: String| Error::at(line_no, col, Error::Syntax(msg));
        let args = &tokens[1..];

        let Some(current) = block.as_mut() else {
            if keyword.text != "automaton" {
                return Err(syntax(
                    keyword.column,
                    format!("expected `automaton`, found `{}`", keyword.text),
                ));
            }
            if args.len() != 1 {
                return Err(syntax(keyword.column, "`automaton` takes exactly one name".into()));
            }
            block = Some(Block {
                name: args[0].text.to_string(),
                start_line: line_no,
                ..Block::default()
            });
            continue;
        };

        match keyword.text {
            "hierarchy" => {
                if current.hierarchy.is_some() {
                    return Err(syntax(keyword.column, "duplicate hierarchy line".into()));
                }
                let Some(first) = args.first() else {
                    return Err(syntax(keyword.column, "empty hierarchy".into()));
                };
                let h: Hierarchy = line[first.column - 1..]
                    .trim_end()
                    .parse()
                    .map_err(|e| at(first.column, e))?;
                current.hierarchy = Some(h);
            }
            "states" | "initial" => {
                if args.is_empty() {
                    return Err(syntax(keyword.column, format!("`{}` needs at least one id", keyword.text)));
                }
                for t in args {
                    let id = StateId::new(t.text).map_err(|e| at(t.column, e))?;
                    let entry = (id, line_no, t.column);
                    if keyword.text == "states" {
                        current.states.push(entry);
                    } else {
                        current.initial.push(entry);
                    }
                }
            }
            "actions" => {
                for t in args {
                    current
                        .actions
                        .insert(Action::new(t.text).map_err(|e| at(t.column, e))?);
                }
            }
            "trans" => {
                if args.len() != 3 {
                    return Err(syntax(
                        keyword.column,
                        "expected `trans <id> (<src>,<action>,<dst>) <id>`".into(),
                    ));
                }
                let from = StateId::new(args[0].text).map_err(|e| at(args[0].column, e))?;
                let label: Label = args[1].text.parse().map_err(|e| at(args[1].column, e))?;
                let to = StateId::new(args[2].text).map_err(|e| at(args[2].column, e))?;
                current
                    .transitions
                    .push((from, label, to, line_no, args[1].column));
            }
            "end" => {
                if !args.is_empty() {
                    return Err(syntax(args[0].column, "unexpected token after `end`".into()));
                }
                let done = block.take().expect("inside a block");
                out.push(done.finish(line_no)?);
            }
            other => {
                return Err(syntax(keyword.column, format!("unknown keyword `{other}`")));
            }
        }
    }
    if let Some(open) = block {
        return Err(Error::at(
            open.start_line,
            1,
            Error::Syntax(format!("automaton `{}` is missing `end`", open.name)),
        ));
    }
    Ok(out)
}

/// Parses a document that must contain exactly one automaton.
pub fn parse_automaton(text: &str) -> Result<Automaton> {
    let mut all = parse_document(text)?;
    if all.len() != 1 {
        return Err(Error::AutomatonCount(all.len()));
    }
    Ok(all.pop().expect("one automaton"))
}

/// Canonical serialization of one automaton.
pub fn to_text(a: &Automaton) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "automaton {}", a.name());
    let _ = writeln!(s, "hierarchy {}", a.hierarchy());
    s.push_str("states");
    for q in a.states() {
        s.push(' ');
        s.push_str(q.as_str());
    }
    s.push('\n');
    s.push_str("initial");
    for &i in a.initial() {
        s.push(' ');
        s.push_str(a.state(i).as_str());
    }
    s.push('\n');
    let used: BTreeSet<&Action> = a.transitions().iter().map(|t| t.label.action()).collect();
    let extra: Vec<&Action> = a.actions().iter().filter(|x| !used.contains(x)).collect();
    if !extra.is_empty() {
        s.push_str("actions");
        for x in extra {
            s.push(' ');
            s.push_str(x.as_str());
        }
        s.push('\n');
    }
    for t in a.transitions() {
        let _ = writeln!(
            s,
            "trans {} {} {}",
            a.state(t.source),
            t.label,
            a.state(t.target)
        );
    }
    s.push_str("end\n");
    s
}

/// Serializes several automata, separated by blank lines.
pub fn to_document(automata: &[Automaton]) -> String {
    automata
        .iter()
        .map(to_text)
        .collect::<Vec<_>>()
        .join("\n")
}
