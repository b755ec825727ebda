use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::Graph;
use crate::error::{Error, Result};
use crate::scalar::Real;

/// Writes `#nodes N` followed by one `u v w` line per edge.
pub fn write_edge_list<T: Real, W: Write>(g: &Graph<T>, mut out: W) -> Result<()> {
    writeln!(out, "#nodes {}", g.node_count())?;
    for (u, v, w) in g.edges() {
        writeln!(out, "{u} {v} {w}")?;
    }
    Ok(())
}

pub fn save_edge_list<T: Real>(g: &Graph<T>, path: impl AsRef<Path>) -> Result<()> {
    let mut out = BufWriter::new(File::create(path)?);
    write_edge_list(g, &mut out)?;
    out.flush()?;
    Ok(())
}

pub fn load_edge_list<T: Real>(path: impl AsRef<Path>) -> Result<Graph<T>> {
    let path = path.as_ref();
    read_edge_list(File::open(path)?, path)
}

/// Parses the edge-list format. `origin` only labels error messages.
pub fn read_edge_list<T: Real, R: Read>(input: R, origin: impl AsRef<Path>) -> Result<Graph<T>> {
    let origin = origin.as_ref();
    let err = |line: usize, message: String| Error::Parse {
        path: origin.to_path_buf(),
        line,
        message,
    };
    let mut graph: Option<Graph<T>> = None;
    for (idx, line) in BufReader::new(input).lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        let text = line.trim();
        if text.is_empty() {
            continue;
        }
        if let Some(rest) = text.strip_prefix("#nodes") {
            if graph.is_some() {
                return Err(err(line_no, "repeated #nodes header".into()));
            }
            let n: usize = rest
                .trim()
                .parse()
                .map_err(|_| err(line_no, format!("bad node count `{}`", rest.trim())))?;
            graph = Some(Graph::new(n));
            continue;
        }
        if text.starts_with('#') {
            continue;
        }
        let g = graph
            .as_mut()
            .ok_or_else(|| err(line_no, "edge before #nodes header".into()))?;
        let fields: Vec<&str> = text.split_whitespace().collect();
        if fields.len() != 3 {
            return Err(err(
                line_no,
                format!("expected `u v w`, found {} field(s)", fields.len()),
            ));
        }
        let u: usize = fields[0]
            .parse()
            .map_err(|_| err(line_no, format!("bad node id `{}`", fields[0])))?;
        let v: usize = fields[1]
            .parse()
            .map_err(|_| err(line_no, format!("bad node id `{}`", fields[1])))?;
        let w: T = fields[2]
            .parse()
            .map_err(|_| err(line_no, format!("bad weight `{}`", fields[2])))?;
        g.add_edge(u, v, w).map_err(|e| err(line_no, e.to_string()))?;
    }
    graph.ok_or_else(|| err(0, "missing #nodes header".into()))
}

/// Interchange form for JSON export.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphJson {
    pub nodes: usize,
    pub edges: Vec<(usize, usize, f64)>,
}

impl<T: Real> From<&Graph<T>> for GraphJson {
    fn from(g: &Graph<T>) -> Self {
        Self {
            nodes: g.node_count(),
            edges: g.edges().map(|(u, v, w)| (u, v, w.as_f64())).collect(),
        }
    }
}

impl GraphJson {
    pub fn into_graph<T: Real>(self) -> Result<Graph<T>> {
        Graph::from_edges(self.nodes, self.edges.into_iter().map(|(u, v, w)| (u, v, T::lit(w))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate_power_law_cluster;

    fn parse(text: &str) -> Result<Graph<f64>> {
        read_edge_list(text.as_bytes(), "inline")
    }

    #[test]
    fn file_round_trip() {
        let g = generate_power_law_cluster::<f64>(120, 2, 0.3, 4).unwrap();
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.edges");
        save_edge_list(&g, &path).unwrap();
        assert_eq!(load_edge_list::<f64>(&path).unwrap(), g);
    }

    #[test]
    fn json_round_trip() {
        let g = parse("#nodes 3\n0 1 0.25\n1 2 3.5\n").unwrap();
        let json = serde_json::to_string(&GraphJson::from(&g)).unwrap();
        let back: GraphJson = serde_json::from_str(&json).unwrap();
        assert_eq!(back.into_graph::<f64>().unwrap(), g);
    }

    #[test]
    fn rejects_self_loop() {
        match parse("#nodes 2\n0 0 1.0\n") {
            Err(Error::Parse { line, message, .. }) => {
                assert_eq!(line, 2);
                assert!(message.contains("self-loop"), "{message}");
            }
            other => panic!("expected parse error, got {other:?}"),
        }
    }

    #[test]
    fn reports_line_of_missing_weight() {
        match parse("#nodes 3\n0 1 1.0\n\n1 2\n") {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 4),
            other => panic!("expected parse error, got {other:?}"),
        }
        assert!(parse("0 1 1.0\n").is_err());
    }
}
