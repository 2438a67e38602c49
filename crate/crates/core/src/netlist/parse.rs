use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt::Write as _;

use thiserror::Error;

use super::{CellInstance, MasterDecl, Net, Netlist, Terminal};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}, column {column}: {kind}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub kind: ParseErrorKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ParseErrorKind {
    #[error("syntax error: {0}")]
    Syntax(String),
    #[error("unresolved master {0}")]
    UnresolvedMaster(String),
    #[error("unresolved cell {0}")]
    UnresolvedCell(String),
    #[error("unresolved pin {pin} on cell {cell}")]
    UnresolvedPin { cell: String, pin: String },
    #[error("duplicate master {0}")]
    DuplicateMaster(String),
    #[error("duplicate cell id {0}")]
    DuplicateCell(String),
    #[error("duplicate net id {0}")]
    DuplicateNet(String),
    #[error("terminal {0} listed twice")]
    DuplicateTerminal(String),
}

struct Tok<'a> {
    text: &'a str,
    column: usize,
}

fn tokenize(line: &str) -> Vec<Tok<'_>> {
    let body = match line.find('#') {
        Some(i) => &line[..i],
        None => line,
    };
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in body.char_indices() {
        if ch.is_whitespace() {
            if let Some(s) = start.take() {
                out.push(Tok {
                    text: &body[s..i],
                    column: body[..s].chars().count() + 1,
                });
            }
        } else if start.is_none() {
            start = Some(i);
        }
    }
    if let Some(s) = start {
        out.push(Tok {
            text: &body[s..],
            column: body[..s].chars().count() + 1,
        });
    }
    out
}

struct Pending<'a> {
    line: usize,
    column: usize,
    cell: &'a str,
    pin: &'a str,
}

/// Parses the line-oriented netlist format.
///
/// ```text
/// design <name>
/// master <name> pins <p1> <p2> ...
/// cell <id> <master> [seq]
/// net <id> <cell>.<pin> <cell>.<pin> ...
/// ```
///
/// Sections may appear in any order; references are resolved after the
/// whole text is read. A net's driver is the terminal on its master's
/// output (last) pin.
pub fn parse_netlist(text: &str) -> Result<Netlist, ParseError> {
    let syntax = |line: usize, column: usize, msg: &str| ParseError {
        line,
        column,
        kind: ParseErrorKind::Syntax(msg.to_string()),
    };

    let mut name = String::new();
    let mut masters: BTreeMap<String, MasterDecl> = BTreeMap::new();
    // (line, id column, master column, cell)
    let mut cells: Vec<(usize, usize, usize, CellInstance)> = Vec::new();
    let mut nets: Vec<(usize, usize, String, Vec<Pending<'_>>)> = Vec::new();

    for (ln0, raw) in text.lines().enumerate() {
        let ln = ln0 + 1;
        let toks = tokenize(raw);
        let Some(head) = toks.first() else { continue };
        match head.text {
            "design" => {
                if toks.len() != 2 {
                    return Err(syntax(ln, head.column, "expected `design <name>`"));
                }
                name = toks[1].text.to_string();
            }
            "master" => {
                if toks.len() < 4 || toks[2].text != "pins" {
                    return Err(syntax(
                        ln,
                        head.column,
                        "expected `master <name> pins <pin>...`",
                    ));
                }
                let mname = toks[1].text;
                let mut seen = HashSet::new();
                let mut pins = Vec::with_capacity(toks.len() - 3);
                for t in &toks[3..] {
                    if t.text.contains('.') {
                        return Err(syntax(ln, t.column, "pin names may not contain '.'"));
                    }
                    if !seen.insert(t.text) {
                        return Err(syntax(ln, t.column, "pin declared twice"));
                    }
                    pins.push(t.text.to_string());
                }
                if masters.contains_key(mname) {
                    return Err(ParseError {
                        line: ln,
                        column: toks[1].column,
                        kind: ParseErrorKind::DuplicateMaster(mname.to_string()),
                    });
                }
                masters.insert(
                    mname.to_string(),
                    MasterDecl {
                        name: mname.to_string(),
                        pins,
                    },
                );
            }
            "cell" => {
                let seq = match toks.len() {
                    3 => false,
                    4 if toks[3].text == "seq" => true,
                    4 => return Err(syntax(ln, toks[3].column, "expected `seq` or end of line")),
                    _ => {
                        return Err(syntax(
                            ln,
                            head.column,
                            "expected `cell <id> <master> [seq]`",
                        ))
                    }
                };
                cells.push((
                    ln,
                    toks[1].column,
                    toks[2].column,
                    CellInstance {
                        id: toks[1].text.to_string(),
                        master: toks[2].text.to_string(),
                        is_sequential: seq,
                    },
                ));
            }
            "net" => {
                if toks.len() < 3 {
                    return Err(syntax(
                        ln,
                        head.column,
                        "expected `net <id> <cell>.<pin>...`",
                    ));
                }
                let mut terms = Vec::with_capacity(toks.len() - 2);
                for t in &toks[2..] {
                    let Some((cell, pin)) = t.text.rsplit_once('.') else {
                        return Err(syntax(ln, t.column, "terminal must be <cell>.<pin>"));
                    };
                    if cell.is_empty() || pin.is_empty() {
                        return Err(syntax(ln, t.column, "terminal must be <cell>.<pin>"));
                    }
                    terms.push(Pending {
                        line: ln,
                        column: t.column,
                        cell,
                        pin,
                    });
                }
                nets.push((ln, toks[1].column, toks[1].text.to_string(), terms));
            }
            other => {
                return Err(syntax(
                    ln,
                    head.column,
                    &format!("unknown keyword `{other}`"),
                ));
            }
        }
    }

    let mut cell_master: HashMap<&str, &MasterDecl> = HashMap::with_capacity(cells.len());
    for (ln, col, mcol, c) in &cells {
        let m = masters.get(&c.master).ok_or_else(|| ParseError {
            line: *ln,
            column: *mcol,
            kind: ParseErrorKind::UnresolvedMaster(c.master.clone()),
        })?;
        if cell_master.insert(c.id.as_str(), m).is_some() {
            return Err(ParseError {
                line: *ln,
                column: *col,
                kind: ParseErrorKind::DuplicateCell(c.id.clone()),
            });
        }
    }

    let mut net_ids = HashSet::with_capacity(nets.len());
    let mut out_nets = Vec::with_capacity(nets.len());
    for (ln, col, id, terms) in &nets {
        if !net_ids.insert(id.as_str()) {
            return Err(ParseError {
                line: *ln,
                column: *col,
                kind: ParseErrorKind::DuplicateNet(id.clone()),
            });
        }
        let mut seen = HashSet::with_capacity(terms.len());
        let mut terminals = Vec::with_capacity(terms.len());
        let mut driver = None;
        for p in terms {
            let err = |kind| ParseError {
                line: p.line,
                column: p.column,
                kind,
            };
            let m = cell_master
                .get(p.cell)
                .ok_or_else(|| err(ParseErrorKind::UnresolvedCell(p.cell.to_string())))?;
            let pi = m.pin_index(p.pin).ok_or_else(|| {
                err(ParseErrorKind::UnresolvedPin {
                    cell: p.cell.to_string(),
                    pin: p.pin.to_string(),
                })
            })?;
            if !seen.insert((p.cell, p.pin)) {
                return Err(err(ParseErrorKind::DuplicateTerminal(format!(
                    "{}.{}",
                    p.cell, p.pin
                ))));
            }
            if driver.is_none() && m.is_output(pi) {
                driver = Some(terminals.len());
            }
            terminals.push(Terminal::new(p.cell, p.pin));
        }
        out_nets.push(Net {
            id: id.clone(),
            terminals,
            driver,
        });
    }

    Ok(Netlist {
        name,
        masters,
        cells: cells.into_iter().map(|(_, _, _, c)| c).collect(),
        nets: out_nets,
    })
}

/// Serializes a netlist in the format read by [`parse_netlist`].
pub fn write_netlist(netlist: &Netlist) -> String {
    let mut out = String::new();
    if !netlist.name.is_empty() {
        let _ = writeln!(out, "design {}", netlist.name);
    }
    for m in netlist.masters.values() {
        let _ = write!(out, "master {} pins", m.name);
        for p in &m.pins {
            let _ = write!(out, " {p}");
        }
        out.push('\n');
    }
    for c in &netlist.cells {
        let _ = write!(out, "cell {} {}", c.id, c.master);
        if c.is_sequential {
            out.push_str(" seq");
        }
        out.push('\n');
    }
    for n in &netlist.nets {
        let _ = write!(out, "net {}", n.id);
        for t in &n.terminals {
            let _ = write!(out, " {}.{}", t.cell, t.pin);
        }
        out.push('\n');
    }
    out
}
