//! Text formats for graphs and bridge sets.
//!
//! Graph file:
//!
//! ```text
//! n m
//! i j d_e        (m lines, 0-based, i != j, each pair at most once)
//! ```
//!
//! Bridge-set file: `#` header lines carrying `key=value` pairs (at least
//! `rule` and `q`), then one `i j` pair per line with `i < j`, sorted.
//! Blank lines are ignored in both formats.

use std::collections::BTreeSet;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::graph::{BridgeSet, NNGraph, Rule};

/// Plain decimal with 17 significant digits, enough to round-trip an f64.
pub fn format_real(x: f64) -> String {
    if x == 0.0 || !x.is_finite() {
        return format!("{x:.16}");
    }
    let magnitude = x.abs().log10().floor() as i32;
    let decimals = (16 - magnitude).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn write_graph<W: Write>(mut w: W, graph: &NNGraph) -> Result<()> {
    writeln!(w, "{} {}", graph.node_count(), graph.edge_count())?;
    for e in graph.edges() {
        writeln!(w, "{} {} {}", e.i, e.j, format_real(e.cost))?;
    }
    Ok(())
}

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        message: message.into(),
    }
}

fn field<T: std::str::FromStr>(tok: Option<&str>, line: usize, what: &str) -> Result<T> {
    let tok = tok.ok_or_else(|| parse_err(line, format!("missing {what}")))?;
    tok.parse()
        .map_err(|_| parse_err(line, format!("invalid {what} '{tok}'")))
}

pub fn read_graph<R: BufRead>(r: R) -> Result<NNGraph> {
    let mut header: Option<(usize, usize)> = None;
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    for (idx, line) in r.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        let mut toks = text.split_whitespace();
        match header {
            None => {
                let n = field(toks.next(), lineno, "node count")?;
                let m = field(toks.next(), lineno, "edge count")?;
                if toks.next().is_some() {
                    return Err(parse_err(lineno, "header must be 'n m'"));
                }
                header = Some((n, m));
            }
            Some((n, _)) => {
                let i: usize = field(toks.next(), lineno, "node id")?;
                let j: usize = field(toks.next(), lineno, "node id")?;
                let d: f64 = field(toks.next(), lineno, "edge cost")?;
                if toks.next().is_some() {
                    return Err(parse_err(lineno, "expected 'i j d_e'"));
                }
                if i >= n || j >= n {
                    return Err(parse_err(lineno, format!("node id out of range 0..{n}")));
                }
                if i == j {
                    return Err(parse_err(lineno, format!("self-loop at node {i}")));
                }
                if !(d >= 0.0 && d.is_finite()) {
                    return Err(parse_err(lineno, format!("edge cost must be finite and >= 0 (got {d})")));
                }
                if !seen.insert((i.min(j), i.max(j))) {
                    return Err(parse_err(lineno, format!("duplicate edge ({i}, {j})")));
                }
                edges.push((i, j, d));
            }
        }
    }
    let (n, m) = header.ok_or_else(|| parse_err(1, "missing header"))?;
    if edges.len() != m {
        return Err(parse_err(
            0,
            format!("header announces {m} edges but {} were read", edges.len()),
        ));
    }
    NNGraph::from_edges(n, edges)
}

pub fn write_bridge_set<W: Write>(
    mut w: W,
    bridges: &BridgeSet,
    extra: &[(&str, String)],
) -> Result<()> {
    writeln!(w, "# rule={}", bridges.rule)?;
    writeln!(w, "# q={}", bridges.q)?;
    for (k, v) in extra {
        writeln!(w, "# {k}={v}")?;
    }
    for (i, j) in &bridges.edges {
        writeln!(w, "{i} {j}")?;
    }
    Ok(())
}

pub fn read_bridge_set<R: BufRead>(r: R) -> Result<BridgeSet> {
    let mut rule = None;
    let mut q = None;
    let mut edges = BTreeSet::new();
    for (idx, line) in r.lines().enumerate() {
        let lineno = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(comment) = text.strip_prefix('#') {
            if let Some((k, v)) = comment.trim().split_once('=') {
                match k.trim() {
                    "rule" => {
                        rule = Some(v.trim().parse::<Rule>().map_err(|e| parse_err(lineno, e.to_string()))?)
                    }
                    "q" => q = Some(field::<f64>(Some(v.trim()), lineno, "q")?),
                    _ => {}
                }
            }
            continue;
        }
        let mut toks = text.split_whitespace();
        let i: usize = field(toks.next(), lineno, "node id")?;
        let j: usize = field(toks.next(), lineno, "node id")?;
        if toks.next().is_some() {
            return Err(parse_err(lineno, "expected 'i j'"));
        }
        if i >= j {
            return Err(parse_err(lineno, "pairs must be written with i < j"));
        }
        if !edges.insert((i, j)) {
            return Err(parse_err(lineno, format!("duplicate pair ({i}, {j})")));
        }
    }
    Ok(BridgeSet {
        edges,
        rule: rule.ok_or_else(|| parse_err(0, "missing '# rule=' header"))?,
        q: q.ok_or_else(|| parse_err(0, "missing '# q=' header"))?,
    })
}
