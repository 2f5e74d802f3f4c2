//! Line-oriented text format for graphs.
//!
//! ```text
//! # comment
//! vertices: a b c h
//! latent: h
//! fixed: a
//! a -> b
//! h -> c
//! b <-> c
//! ```

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::error::{Error, Result};
use crate::graph::{Admg, Cadmg};
use crate::vertex::{is_label, is_reserved_hidden, Label, VertexSet};

/// A parsed graph together with the vertices flagged as latent.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GraphDocument {
    pub graph: Cadmg,
    pub latent: VertexSet,
}

impl GraphDocument {
    pub fn from_admg(graph: Admg) -> Self {
        GraphDocument {
            graph: Cadmg::from_admg(graph),
            latent: VertexSet::new(),
        }
    }

    pub fn admg(&self) -> &Admg {
        self.graph.graph()
    }

    pub fn to_text(&self) -> String {
        write_graph(self.graph.graph(), &self.latent, &self.graph.fixed())
    }
}

#[derive(PartialEq, PartialOrd)]
enum Stage {
    Start,
    Vertices,
    Latent,
    Fixed,
    Edges,
}

fn parse_err(line: usize, column: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        line,
        column,
        message: message.into(),
    }
}

/// Column (1-based, in characters) of byte offset `at` within `line`.
fn column(line: &str, at: usize) -> usize {
    line[..at].chars().count() + 1
}

/// Splits a header body into `(byte offset, token)` pairs.
fn tokens(body: &str, base: usize) -> Vec<(usize, &str)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, ch) in body.char_indices() {
        match (ch.is_whitespace(), start) {
            (true, Some(s)) => {
                out.push((base + s, &body[s..i]));
                start = None;
            }
            (false, None) => start = Some(i),
            _ => {}
        }
    }
    if let Some(s) = start {
        out.push((base + s, &body[s..]));
    }
    out
}

pub fn parse_graph(text: &str) -> Result<GraphDocument> {
    let mut stage = Stage::Start;
    let mut labels: Vec<Label> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut latent = VertexSet::new();
    let mut fixed = VertexSet::new();
    let mut directed = Vec::new();
    let mut bidirected = Vec::new();

    for (lineno, raw) in text.split('\n').enumerate() {
        let lineno = lineno + 1;
        let raw = raw.strip_suffix('\r').unwrap_or(raw);
        let line = match raw.find('#') {
            Some(i) => &raw[..i],
            None => raw,
        };
        let lead = line.len() - line.trim_start().len();
        let content = line.trim();
        if content.is_empty() {
            continue;
        }

        if let Some(colon) = content.find(':') {
            let key = content[..colon].trim();
            let next = match key {
                "vertices" => Stage::Vertices,
                "latent" => Stage::Latent,
                "fixed" => Stage::Fixed,
                _ => return Err(parse_err(lineno, lead + 1, format!("unknown header `{key}`"))),
            };
            if stage == Stage::Start && next != Stage::Vertices {
                return Err(parse_err(lineno, lead + 1, "the first header must be `vertices:`"));
            }
            if next <= stage {
                return Err(parse_err(
                    lineno,
                    lead + 1,
                    format!("header `{key}:` is out of order or repeated"),
                ));
            }
            let base = lead + colon + 1;
            for (at, tok) in tokens(&line[base..], base) {
                let col = column(line, at);
                if !is_label(tok) {
                    return Err(parse_err(lineno, col, format!("invalid vertex label `{tok}`")));
                }
                match next {
                    Stage::Vertices => {
                        if index.insert(tok.to_string(), labels.len()).is_some() {
                            return Err(parse_err(lineno, col, format!("duplicate vertex `{tok}`")));
                        }
                        labels.push(Label::new(tok)?);
                    }
                    _ => {
                        let v = *index
                            .get(tok)
                            .ok_or_else(|| parse_err(lineno, col, format!("unknown vertex `{tok}`")))?;
                        let target = if next == Stage::Latent { &mut latent } else { &mut fixed };
                        if !target.insert(v) {
                            return Err(parse_err(lineno, col, format!("vertex `{tok}` listed twice")));
                        }
                        if next == Stage::Fixed && latent.contains(v) {
                            return Err(parse_err(
                                lineno,
                                col,
                                format!("vertex `{tok}` cannot be both latent and fixed"),
                            ));
                        }
                    }
                }
            }
            stage = next;
            continue;
        }

        if stage == Stage::Start {
            return Err(parse_err(lineno, lead + 1, "expected `vertices:` header before edges"));
        }
        stage = Stage::Edges;
        let (arrow_at, arrow, bi) = match content.find("<->") {
            Some(i) => (i, "<->", true),
            None => match content.find("->") {
                Some(i) => (i, "->", false),
                None => return Err(parse_err(lineno, lead + 1, "expected `->` or `<->`")),
            },
        };
        let left = &content[..arrow_at];
        let right = &content[arrow_at + arrow.len()..];
        let mut ends = [0usize; 2];
        for (slot, (part, offset)) in [(left, lead), (right, lead + arrow_at + arrow.len())]
            .into_iter()
            .enumerate()
        {
            let toks = tokens(part, offset);
            let (at, tok) = match toks.as_slice() {
                [one] => *one,
                [] => {
                    let col = column(line, lead + arrow_at) + if slot == 0 { 0 } else { arrow.len() };
                    return Err(parse_err(lineno, col, "missing edge endpoint"));
                }
                [_, (at, tok), ..] => {
                    return Err(parse_err(lineno, column(line, *at), format!("unexpected token `{tok}`")))
                }
            };
            let col = column(line, at);
            if !is_label(tok) {
                return Err(parse_err(lineno, col, format!("invalid vertex label `{tok}`")));
            }
            ends[slot] = *index
                .get(tok)
                .ok_or_else(|| parse_err(lineno, col, format!("unknown vertex `{tok}`")))?;
        }
        if ends[0] == ends[1] {
            return Err(Error::SelfLoop(labels[ends[0]].to_string()));
        }
        if bi {
            bidirected.push((ends[0], ends[1]));
        } else {
            directed.push((ends[0], ends[1]));
        }
    }

    if stage == Stage::Start {
        return Err(parse_err(1, 1, "missing `vertices:` header"));
    }
    if let Some(l) = labels
        .iter()
        .enumerate()
        .find(|(i, l)| l.is_reserved() && !latent.contains(*i))
    {
        return Err(Error::ReservedLabel(l.1.to_string()));
    }
    let graph = Admg::new(labels, &directed, &bidirected)?;
    let graph = Cadmg::new(graph, &fixed)?;
    Ok(GraphDocument { graph, latent })
}

/// Serializes in declaration order: directed edges first, then bidirected,
/// each sorted by endpoint position.
pub fn write_graph(g: &Admg, latent: &VertexSet, fixed: &VertexSet) -> String {
    let mut out = String::new();
    let names = |s: &VertexSet| g.names(s).join(" ");
    let _ = writeln!(out, "vertices: {}", names(&g.all()));
    if !latent.is_empty() {
        let _ = writeln!(out, "latent: {}", names(latent));
    }
    if !fixed.is_empty() {
        let _ = writeln!(out, "fixed: {}", names(fixed));
    }
    for (a, b) in g.directed_edges() {
        let _ = writeln!(out, "{} -> {}", g.label(a), g.label(b));
    }
    for (a, b) in g.bidirected_edges() {
        let _ = writeln!(out, "{} <-> {}", g.label(a), g.label(b));
    }
    out
}

pub fn admg_to_text(g: &Admg) -> String {
    write_graph(g, &VertexSet::new(), &VertexSet::new())
}

/// Parses a document that must not declare latent or fixed vertices.
pub fn parse_admg(text: &str) -> Result<Admg> {
    let doc = parse_graph(text)?;
    if !doc.latent.is_empty() || !doc.graph.fixed().is_empty() {
        return Err(Error::Precondition(
            "expected a plain ADMG without latent or fixed vertices".into(),
        ));
    }
    Ok(doc.graph.into_graph())
}

pub(crate) fn reserved_in(g: &Admg) -> Option<&Label> {
    g.labels().iter().find(|l| is_reserved_hidden(l.as_str()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_iv() {
        let doc = parse_graph("vertices: a b c\na -> b\nb -> c\nb <-> c\n").unwrap();
        let g = doc.admg();
        assert_eq!(g.directed_edges().len(), 2);
        assert_eq!(g.bidirected_edges().len(), 1);
        assert!(doc.latent.is_empty());
    }

    #[test]
    fn singleton_and_spacing() {
        let g = parse_admg("vertices: a").unwrap();
        assert_eq!(g.n(), 1);
        let g = parse_admg("  # header\r\nvertices:a b\r\n\r\na->b # edge\r\nb<->a\r\n").unwrap();
        assert!(g.has_directed(0, 1) && g.has_bidirected(0, 1));
    }

    #[test]
    fn errors_carry_locations() {
        assert!(matches!(parse_graph("vertices: a\na -> a"), Err(Error::SelfLoop(_))));
        assert_eq!(
            parse_graph("vertices: a b\na -> z\n"),
            Err(Error::Parse {
                line: 2,
                column: 6,
                message: "unknown vertex `z`".into()
            })
        );
        assert!(matches!(
            parse_graph("a -> b"),
            Err(Error::Parse { line: 1, column: 1, .. })
        ));
        assert!(matches!(
            parse_graph("vertices: a b\nfixed: a\nlatent: b"),
            Err(Error::Parse { line: 3, .. })
        ));
        assert!(matches!(
            parse_graph("vertices: a b\na => b"),
            Err(Error::Parse { line: 2, .. })
        ));
        assert!(matches!(
            parse_graph("vertices: a b\na -> b\na -> b"),
            Err(Error::DuplicateEdge(_))
        ));
        assert!(matches!(
            parse_graph("vertices: a b\na -> b\nb -> a"),
            Err(Error::DirectedCycle(_))
        ));
        assert!(matches!(
            parse_graph("vertices: a b\nfixed: b\na -> b"),
            Err(Error::FixedWithIncoming(_))
        ));
        assert!(matches!(
            parse_graph("vertices: a _h1\na <-> _h1"),
            Err(Error::ReservedLabel(_))
        ));
        assert!(parse_graph("vertices: a _h1\nlatent: _h1\n_h1 -> a").is_ok());
    }

    #[test]
    fn round_trip() {
        let text = "vertices: h a b\nlatent: h\nfixed: a\nh -> b\na -> b\nh <-> b\n";
        let doc = parse_graph(text).unwrap();
        assert_eq!(doc.to_text(), text);
        assert_eq!(parse_graph(&doc.to_text()).unwrap(), doc);
    }

    #[test]
    fn sorted_output() {
        let g = parse_admg("vertices: c b a\na <-> b\nb -> a\nc -> a\nc <-> a\n").unwrap();
        assert_eq!(
            admg_to_text(&g),
            "vertices: c b a\nc -> a\nb -> a\nc <-> a\nb <-> a\n"
        );
    }
}
