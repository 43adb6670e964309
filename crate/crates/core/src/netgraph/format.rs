//! Plain-text network files.
//!
//! ```text
//! # comment
//! node s
//! node u
//! node r
//! edge s u        # parallel index defaults to the next free one
//! edge s u 1
//! edge u r 0
//! edge u r 1
//! source s
//! receiver r
//! ```
//!
//! Nodes may also be introduced implicitly by an edge line.

use std::collections::HashMap;
use std::fmt::Write;

use super::{Edge, GraphError, Network};

pub fn parse_network(text: &str) -> Result<Network, GraphError> {
    let mut labels: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    let mut edges: Vec<Edge> = Vec::new();
    let mut source = None;
    let mut receiver = None;

    fn intern(labels: &mut Vec<String>, index: &mut HashMap<String, usize>, l: &str) -> usize {
        *index.entry(l.to_string()).or_insert_with(|| {
            labels.push(l.to_string());
            labels.len() - 1
        })
    }

    for (no, raw) in text.lines().enumerate() {
        let line = no + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let parts: Vec<&str> = content.split_whitespace().collect();
        let err = |msg: &str| GraphError::Parse {
            line,
            msg: msg.to_string(),
        };
        match parts.as_slice() {
            ["node", l] => {
                if index.contains_key(*l) {
                    return Err(GraphError::DuplicateNode(l.to_string()));
                }
                intern(&mut labels, &mut index, l);
            }
            ["edge", t, h, rest @ ..] if rest.len() <= 1 => {
                let tail = intern(&mut labels, &mut index, t);
                let head = intern(&mut labels, &mut index, h);
                let k = match rest.first() {
                    Some(k) => k.parse::<u32>().map_err(|_| err("bad parallel index"))?,
                    None => edges
                        .iter()
                        .filter(|e| e.tail == tail && e.head == head)
                        .map(|e| e.k + 1)
                        .max()
                        .unwrap_or(0),
                };
                edges.push(Edge { tail, head, k });
            }
            ["source", l] => source = Some(intern(&mut labels, &mut index, l)),
            ["receiver", l] => receiver = Some(intern(&mut labels, &mut index, l)),
            _ => return Err(err(&format!("unrecognized line {content:?}"))),
        }
    }
    let source = source.ok_or(GraphError::Parse {
        line: 0,
        msg: "missing source".into(),
    })?;
    let receiver = receiver.ok_or(GraphError::Parse {
        line: 0,
        msg: "missing receiver".into(),
    })?;
    Network::new(labels, edges, source, receiver)
}

pub fn render_network(net: &Network) -> String {
    let mut out = String::new();
    for l in net.labels() {
        let _ = writeln!(out, "node {l}");
    }
    let _ = writeln!(out, "source {}", net.label(net.source()));
    let _ = writeln!(out, "receiver {}", net.label(net.receiver()));
    for e in net.edges() {
        let _ = writeln!(
            out,
            "edge {} {} {}",
            net.label(e.tail),
            net.label(e.head),
            e.k
        );
    }
    out
}
