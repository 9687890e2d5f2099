//! Versioned binary graph artifacts. Layout:
//!
//! ```text
//! magic "ICGRAF01" | u32 meta_len | meta JSON | m * (u32 src, u32 dst) | m * f64 prob
//! ```
//!
//! All integers little-endian; edges in canonical id order, so writing a
//! loaded artifact reproduces the bytes exactly.

use std::io::Read;
use std::path::Path;

use anyhow::{bail, Context, Result};
use influence::graph::{Graph, GraphMeta, NodeId};
use serde::{Deserialize, Serialize};

const MAGIC: &[u8; 8] = b"ICGRAF01";

#[derive(Serialize, Deserialize)]
struct ArtifactMeta {
    graph: GraphMeta,
    #[serde(skip_serializing_if = "Option::is_none")]
    labels: Option<Vec<String>>,
}

pub fn write_graph(path: &Path, graph: &Graph) -> Result<()> {
    let meta = ArtifactMeta {
        graph: graph.meta().clone(),
        labels: graph.labels().map(|l| l.to_vec()),
    };
    let meta_bytes = serde_json::to_vec(&meta)?;
    let mut out = Vec::with_capacity(16 + meta_bytes.len() + graph.edge_count() * 16);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(meta_bytes.len() as u32).to_le_bytes());
    out.extend_from_slice(&meta_bytes);
    for e in 0..graph.edge_count() as u32 {
        let (u, v) = graph.endpoints(e);
        out.extend_from_slice(&u.to_le_bytes());
        out.extend_from_slice(&v.to_le_bytes());
    }
    for e in 0..graph.edge_count() as u32 {
        out.extend_from_slice(&graph.prob(e).to_le_bytes());
    }
    std::fs::write(path, out).with_context(|| format!("writing {}", path.display()))
}

pub fn read_graph(path: &Path) -> Result<Graph> {
    let mut file = std::fs::File::open(path)
        .with_context(|| format!("opening artifact {}", path.display()))?;
    let mut bytes = Vec::new();
    file.read_to_end(&mut bytes)?;
    let mut cur = &bytes[..];

    let mut magic = [0u8; 8];
    read_exact(&mut cur, &mut magic, "magic")?;
    if &magic != MAGIC {
        bail!("{} is not a graph artifact (bad magic)", path.display());
    }
    let meta_len = read_u32(&mut cur)? as usize;
    if cur.len() < meta_len {
        bail!("truncated artifact metadata");
    }
    let meta: ArtifactMeta =
        serde_json::from_slice(&cur[..meta_len]).context("artifact metadata")?;
    cur = &cur[meta_len..];

    let m = meta.graph.edges;
    let mut edges: Vec<(NodeId, NodeId)> = Vec::with_capacity(m);
    for _ in 0..m {
        let u = read_u32(&mut cur)?;
        let v = read_u32(&mut cur)?;
        edges.push((u, v));
    }
    let mut probs = Vec::with_capacity(m);
    for _ in 0..m {
        let mut buf = [0u8; 8];
        read_exact(&mut cur, &mut buf, "probability block")?;
        probs.push(f64::from_le_bytes(buf));
    }
    if !cur.is_empty() {
        bail!("{} trailing bytes after artifact payload", cur.len());
    }
    Ok(Graph::from_parts(meta.graph.nodes, &edges, &probs, meta.labels, meta.graph)?)
}

fn read_exact(cur: &mut &[u8], buf: &mut [u8], what: &str) -> Result<()> {
    if cur.len() < buf.len() {
        bail!("truncated artifact ({what})");
    }
    buf.copy_from_slice(&cur[..buf.len()]);
    *cur = &cur[buf.len()..];
    Ok(())
}

fn read_u32(cur: &mut &[u8]) -> Result<u32> {
    let mut buf = [0u8; 4];
    read_exact(cur, &mut buf, "u32 field")?;
    Ok(u32::from_le_bytes(buf))
}

#[cfg(test)]
mod tests {
    use super::*;
    use influence::graph::ProbModel;

    #[test]
    fn round_trip_preserves_everything() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("g.bin");
        let text = "a b\nb c\na c\nc a\n";
        let g = Graph::from_edge_list_str(text, ProbModel::WeightedCascade).unwrap();
        write_graph(&path, &g).unwrap();
        let g2 = read_graph(&path).unwrap();
        assert_eq!(g2.node_count(), g.node_count());
        assert_eq!(g2.edge_count(), g.edge_count());
        assert_eq!(g2.meta(), g.meta());
        for e in 0..g.edge_count() as u32 {
            assert_eq!(g2.endpoints(e), g.endpoints(e));
            assert_eq!(g2.prob(e), g.prob(e));
        }
        assert_eq!(g2.label(2), g.label(2));
        // writing the reloaded graph is byte-identical
        let path2 = dir.path().join("g2.bin");
        write_graph(&path2, &g2).unwrap();
        assert_eq!(std::fs::read(&path).unwrap(), std::fs::read(&path2).unwrap());
    }

    #[test]
    fn rejects_foreign_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("not_a_graph.bin");
        std::fs::write(&path, b"hello world, definitely not a graph").unwrap();
        assert!(read_graph(&path).is_err());
    }
}
