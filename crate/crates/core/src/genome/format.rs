//! Line-oriented text form of a genome.
//!
//! ```text
//! AGENT-GENOME v1
//! node <id> <role> <activation|none> <memory>
//! edge <source> <target> <weight>
//! ```
//!
//! Node records precede edge records. Weights carry 17 significant digits so
//! every `f64` survives the round trip.

use std::fmt::Write as _;

use thiserror::Error;

use super::{join_violations, Activation, EdgeGene, Genome, Memory, NodeGene, NodeId, Role, Violation};
use crate::scalar::Scalar;

pub const GENOME_HEADER: &str = "AGENT-GENOME v1";

#[derive(Clone, Debug, PartialEq, Error)]
#[error("line {line}: {kind}")]
pub struct ParseError {
    /// 1-based; 0 for whole-document problems.
    pub line: usize,
    pub kind: ParseErrorKind,
}

#[derive(Clone, Debug, PartialEq, Error)]
pub enum ParseErrorKind {
    #[error("missing header `{GENOME_HEADER}`")]
    MissingHeader,
    #[error("unknown record kind `{0}`")]
    UnknownRecord(String),
    #[error("expected {expected} fields, found {found}")]
    FieldCount { expected: usize, found: usize },
    #[error("bad {field}: `{value}`")]
    BadField { field: &'static str, value: String },
    #[error("node record after edge records")]
    NodeAfterEdge,
    #[error("unknown node {0}")]
    UnknownNode(NodeId),
    #[error("duplicate node {0}")]
    DuplicateNode(NodeId),
    #[error("duplicate edge {0}->{1}")]
    DuplicateEdge(NodeId, NodeId),
    #[error("invalid genome: {}", join_violations(.0))]
    Invalid(Vec<Violation>),
}

fn role_from_name(name: &str) -> Option<Role> {
    [Role::Input, Role::Bias, Role::Hidden, Role::Output].into_iter().find(|r| r.name() == name)
}

pub fn serialize<T: Scalar>(genome: &Genome<T>) -> String {
    let mut out = String::with_capacity(32 * (genome.nodes().len() + genome.edges().len()));
    out.push_str(GENOME_HEADER);
    out.push('\n');
    for n in genome.nodes() {
        let activation = n.activation.map_or("none", Activation::name);
        let _ = writeln!(out, "node {} {} {} {}", n.id, n.role.name(), activation, n.memory.order());
    }
    for e in genome.edges() {
        let _ = writeln!(out, "edge {} {} {:.16e}", e.source, e.target, e.weight.as_f64());
    }
    out
}

pub fn deserialize<T: Scalar>(text: &str) -> Result<Genome<T>, ParseError> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l.trim()));
    let err = |line, kind| ParseError { line, kind };

    match lines.find(|(_, l)| !l.is_empty()) {
        Some((_, l)) if l == GENOME_HEADER => {}
        Some((n, _)) => return Err(err(n, ParseErrorKind::MissingHeader)),
        None => return Err(err(0, ParseErrorKind::MissingHeader)),
    }

    let mut nodes: Vec<NodeGene> = Vec::new();
    let mut edges: Vec<EdgeGene<T>> = Vec::new();
    for (n, line) in lines {
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split_whitespace().collect();
        let expect = |count: usize| {
            if fields.len() == count {
                Ok(())
            } else {
                Err(err(n, ParseErrorKind::FieldCount { expected: count, found: fields.len() }))
            }
        };
        let parse_id = |field: &'static str, s: &str| {
            s.parse::<u32>()
                .map(NodeId)
                .map_err(|_| err(n, ParseErrorKind::BadField { field, value: s.to_string() }))
        };
        match fields[0] {
            "node" => {
                if !edges.is_empty() {
                    return Err(err(n, ParseErrorKind::NodeAfterEdge));
                }
                expect(5)?;
                let id = parse_id("node id", fields[1])?;
                let bad = |field, value: &str| err(n, ParseErrorKind::BadField { field, value: value.to_string() });
                let role = role_from_name(fields[2]).ok_or_else(|| bad("role", fields[2]))?;
                let activation = match fields[3] {
                    "none" => None,
                    name => Some(Activation::from_name(name).ok_or_else(|| bad("activation", name))?),
                };
                let memory = fields[4]
                    .parse::<u8>()
                    .ok()
                    .and_then(Memory::from_order)
                    .ok_or_else(|| bad("memory", fields[4]))?;
                if nodes.iter().any(|x| x.id == id) {
                    return Err(err(n, ParseErrorKind::DuplicateNode(id)));
                }
                nodes.push(NodeGene { id, role, activation, memory });
            }
            "edge" => {
                expect(4)?;
                let source = parse_id("edge source", fields[1])?;
                let target = parse_id("edge target", fields[2])?;
                let weight: f64 = fields[3].parse().map_err(|_| {
                    err(n, ParseErrorKind::BadField { field: "weight", value: fields[3].to_string() })
                })?;
                if !weight.is_finite() {
                    return Err(err(n, ParseErrorKind::BadField { field: "weight", value: fields[3].to_string() }));
                }
                for id in [source, target] {
                    if !nodes.iter().any(|x| x.id == id) {
                        return Err(err(n, ParseErrorKind::UnknownNode(id)));
                    }
                }
                if edges.iter().any(|e| e.key() == (source, target)) {
                    return Err(err(n, ParseErrorKind::DuplicateEdge(source, target)));
                }
                edges.push(EdgeGene::new(source, target, T::cast(weight)));
            }
            other => return Err(err(n, ParseErrorKind::UnknownRecord(other.to_string()))),
        }
    }

    let genome = Genome::from_parts(nodes, edges);
    let report = genome.validate();
    if report.is_empty() {
        Ok(genome)
    } else {
        Err(err(0, ParseErrorKind::Invalid(report)))
    }
}
