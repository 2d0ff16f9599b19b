//! Canonical three-file CSV dataset format.
//!
//! ```text
//! graphs.csv         graph_id,num_vertices,horizon,class
//! edges.csv          graph_id,source,target,time
//! vertex_labels.csv  graph_id,vertex,time,value
//! ```
//!
//! Ids are 0-based, edge times 1-based. Edges are undirected, listed once,
//! and symmetrized on load. A label value holds from its time until the next
//! row for the same vertex; time 0 sets the initial condition. Vertices with
//! no label rows are 0 throughout. Lines starting with `#` are comments.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use csv::{ReaderBuilder, StringRecord, Trim};
use serde::de::DeserializeOwned;
use serde::Deserialize;

use super::{Dataset, DynamicGraph, LabelStream, LabeledGraph, TemporalEdge};
use crate::error::{Error, Result};

pub const GRAPHS_FILE: &str = "graphs.csv";
pub const EDGES_FILE: &str = "edges.csv";
pub const LABELS_FILE: &str = "vertex_labels.csv";

#[derive(Deserialize)]
struct GraphRow {
    graph_id: usize,
    num_vertices: usize,
    horizon: usize,
    class: u8,
}

#[derive(Deserialize)]
struct EdgeRow {
    graph_id: usize,
    source: usize,
    target: usize,
    time: usize,
}

#[derive(Deserialize)]
struct LabelRow {
    graph_id: usize,
    vertex: usize,
    time: usize,
    value: f64,
}

/// Reads every data row of `path`, passing the 1-based line number along.
fn read_rows<T: DeserializeOwned>(
    path: &Path,
    expected_header: &[&str],
    mut visit: impl FnMut(T, u64) -> Result<()>,
) -> Result<()> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = ReaderBuilder::new()
        .comment(Some(b'#'))
        .trim(Trim::All)
        .from_reader(file);
    let parse_err = |line: u64, reason: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        reason,
    };
    let headers = reader
        .headers()
        .map_err(|e| parse_err(e.position().map_or(1, |p| p.line()), e.to_string()))?
        .clone();
    if headers.iter().ne(expected_header.iter().copied()) {
        let line = headers.position().map_or(1, |p| p.line());
        return Err(parse_err(
            line,
            format!(
                "expected header `{}`, found `{}`",
                expected_header.join(","),
                headers.iter().collect::<Vec<_>>().join(",")
            ),
        ));
    }
    let mut record = StringRecord::new();
    loop {
        match reader.read_record(&mut record) {
            Ok(false) => return Ok(()),
            Ok(true) => {
                let line = record.position().map_or(0, |p| p.line());
                let row: T = record
                    .deserialize(Some(&headers))
                    .map_err(|e| parse_err(line, e.to_string()))?;
                visit(row, line)?;
            }
            Err(e) => {
                let line = e.position().map_or(0, |p| p.line());
                return Err(parse_err(line, e.to_string()));
            }
        }
    }
}

struct PendingGraph {
    row: GraphRow,
    edges: Vec<TemporalEdge>,
    labels: LabelStream,
}

/// Loads a dataset from the three canonical files. Graphs are ordered by id.
pub fn load_dataset(graphs_path: &Path, edges_path: &Path, labels_path: &Path) -> Result<Dataset> {
    let mut pending: BTreeMap<usize, PendingGraph> = BTreeMap::new();

    read_rows::<GraphRow>(
        graphs_path,
        &["graph_id", "num_vertices", "horizon", "class"],
        |row, line| {
            let fail = |reason: String| Error::Parse {
                path: graphs_path.to_path_buf(),
                line,
                reason,
            };
            if row.horizon == 0 {
                return Err(fail("horizon must be at least 1".into()));
            }
            if row.class > 1 {
                return Err(fail(format!("class must be 0 or 1, got {}", row.class)));
            }
            if pending.contains_key(&row.graph_id) {
                return Err(fail(format!("duplicate graph id {}", row.graph_id)));
            }
            pending.insert(
                row.graph_id,
                PendingGraph {
                    labels: LabelStream::zeros(row.num_vertices, 1),
                    edges: Vec::new(),
                    row,
                },
            );
            Ok(())
        },
    )?;

    read_rows::<EdgeRow>(
        edges_path,
        &["graph_id", "source", "target", "time"],
        |row, line| {
            let g = pending.get_mut(&row.graph_id).ok_or(Error::UnknownGraph {
                graph_id: row.graph_id,
                path: edges_path.to_path_buf(),
                line,
            })?;
            let fail = |reason: String| Error::Parse {
                path: edges_path.to_path_buf(),
                line,
                reason,
            };
            let n = g.row.num_vertices;
            for v in [row.source, row.target] {
                if v >= n {
                    return Err(fail(format!(
                        "vertex id out of range: {v} (graph has {n} vertices)"
                    )));
                }
            }
            if row.time == 0 || row.time > g.row.horizon {
                return Err(fail(format!(
                    "edge time {} outside horizon 1..={}",
                    row.time, g.row.horizon
                )));
            }
            g.edges
                .push(TemporalEdge::new(row.source, row.target, row.time));
            Ok(())
        },
    )?;

    read_rows::<LabelRow>(
        labels_path,
        &["graph_id", "vertex", "time", "value"],
        |row, line| {
            let g = pending.get_mut(&row.graph_id).ok_or(Error::UnknownGraph {
                graph_id: row.graph_id,
                path: labels_path.to_path_buf(),
                line,
            })?;
            let fail = |reason: String| Error::Parse {
                path: labels_path.to_path_buf(),
                line,
                reason,
            };
            let n = g.row.num_vertices;
            if row.vertex >= n {
                return Err(fail(format!(
                    "vertex id out of range: {} (graph has {n} vertices)",
                    row.vertex
                )));
            }
            if row.time > g.row.horizon {
                return Err(fail(format!(
                    "label time {} outside 0..={}",
                    row.time, g.row.horizon
                )));
            }
            if !row.value.is_finite() {
                return Err(fail("label value is not finite".into()));
            }
            g.labels.set(row.vertex, row.time, &[row.value])
        },
    )?;

    let graphs = pending
        .into_iter()
        .map(|(id, p)| {
            let graph = DynamicGraph::new(p.row.num_vertices, p.row.horizon, p.edges, false)?
                .with_labels(p.labels)?;
            Ok(LabeledGraph {
                id,
                graph,
                class: p.row.class,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Dataset::new(graphs)
}

/// Loads `graphs.csv`, `edges.csv` and `vertex_labels.csv` from `dir`.
pub fn load_dataset_dir(dir: &Path) -> Result<Dataset> {
    load_dataset(
        &dir.join(GRAPHS_FILE),
        &dir.join(EDGES_FILE),
        &dir.join(LABELS_FILE),
    )
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

/// Writes `d` into `dir` in the canonical format, each file prefixed with
/// `# {comment}` when given. Only the first label component is written.
/// Returns the paths of the three files.
pub fn write_dataset(d: &Dataset, dir: &Path, comment: Option<&str>) -> Result<[PathBuf; 3]> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    if d.label_dim().is_some_and(|u| u != 1) {
        return Err(Error::Data(
            "canonical format holds scalar labels only".into(),
        ));
    }
    let paths = [
        dir.join(GRAPHS_FILE),
        dir.join(EDGES_FILE),
        dir.join(LABELS_FILE),
    ];
    let mut writers = [create(&paths[0])?, create(&paths[1])?, create(&paths[2])?];
    let write_all = |writers: &mut [BufWriter<File>; 3]| -> std::io::Result<()> {
        let [gw, ew, lw] = writers;
        if let Some(c) = comment {
            for w in [&mut *gw, &mut *ew, &mut *lw] {
                writeln!(w, "# {c}")?;
            }
        }
        writeln!(gw, "graph_id,num_vertices,horizon,class")?;
        writeln!(ew, "graph_id,source,target,time")?;
        writeln!(lw, "graph_id,vertex,time,value")?;
        for lg in d.graphs() {
            let g = &lg.graph;
            writeln!(
                gw,
                "{},{},{},{}",
                lg.id,
                g.num_vertices(),
                g.horizon(),
                lg.class
            )?;
            for e in g.edges() {
                if g.is_directed() || e.source <= e.target {
                    writeln!(ew, "{},{},{},{}", lg.id, e.source, e.target, e.time)?;
                }
            }
            for (v, t, value) in g.labels().events() {
                writeln!(lw, "{},{},{},{}", lg.id, v, t, value[0])?;
            }
        }
        for w in writers.iter_mut() {
            w.flush()?;
        }
        Ok(())
    };
    write_all(&mut writers).map_err(|e| Error::io(dir, e))?;
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::fs;

    fn write_files(dir: &Path, graphs: &str, edges: &str, labels: &str) {
        fs::write(dir.join(GRAPHS_FILE), graphs).unwrap();
        fs::write(dir.join(EDGES_FILE), edges).unwrap();
        fs::write(dir.join(LABELS_FILE), labels).unwrap();
    }

    #[test]
    fn loads_single_edge_graph() {
        let dir = tempfile::tempdir().unwrap();
        write_files(
            dir.path(),
            "graph_id,num_vertices,horizon,class\n0,2,1,1\n",
            "graph_id,source,target,time\n0,0,1,1\n",
            "graph_id,vertex,time,value\n",
        );
        let d = load_dataset_dir(dir.path()).unwrap();
        assert_eq!(d.len(), 1);
        let g = &d.graphs()[0].graph;
        assert_eq!(g.horizon(), 1);
        assert_eq!(g.num_edges(), 2);
        assert!((d.alpha_mean() - 1.0).abs() < 1e-10);
        assert_eq!(g.labels().value_at(1, 1), &[0.0]);
    }

    #[test]
    fn empty_edges_file() {
        let dir = tempfile::tempdir().unwrap();
        write_files(
            dir.path(),
            "graph_id,num_vertices,horizon,class\n0,3,2,0\n",
            "graph_id,source,target,time\n",
            "graph_id,vertex,time,value\n",
        );
        let d = load_dataset_dir(dir.path()).unwrap();
        assert!(d.graphs()[0].graph.snapshots().iter().all(|s| s.is_empty()));
        assert_eq!(d.alpha_mean(), 0.0);
    }

    #[test]
    fn vertex_out_of_range_reports_line() {
        let dir = tempfile::tempdir().unwrap();
        write_files(
            dir.path(),
            "graph_id,num_vertices,horizon,class\n0,3,2,0\n",
            "graph_id,source,target,time\n0,0,1,1\n0,5,1,2\n",
            "graph_id,vertex,time,value\n",
        );
        let err = load_dataset_dir(dir.path()).unwrap_err();
        let msg = err.to_string();
        assert!(msg.contains("vertex id out of range"), "{msg}");
        assert!(msg.contains("edges.csv:3"), "{msg}");
    }

    #[test]
    fn edge_time_outside_horizon() {
        let dir = tempfile::tempdir().unwrap();
        write_files(
            dir.path(),
            "graph_id,num_vertices,horizon,class\n0,3,2,0\n",
            "graph_id,source,target,time\n0,0,1,3\n",
            "graph_id,vertex,time,value\n",
        );
        let msg = load_dataset_dir(dir.path()).unwrap_err().to_string();
        assert!(msg.contains("outside horizon"), "{msg}");
    }

    #[test]
    fn unknown_graph_id() {
        let dir = tempfile::tempdir().unwrap();
        write_files(
            dir.path(),
            "graph_id,num_vertices,horizon,class\n0,3,2,0\n",
            "graph_id,source,target,time\n7,0,1,1\n",
            "graph_id,vertex,time,value\n",
        );
        assert!(matches!(
            load_dataset_dir(dir.path()).unwrap_err(),
            Error::UnknownGraph { graph_id: 7, .. }
        ));
    }

    #[test]
    fn malformed_row() {
        let dir = tempfile::tempdir().unwrap();
        write_files(
            dir.path(),
            "graph_id,num_vertices,horizon,class\n0,three,2,0\n",
            "graph_id,source,target,time\n",
            "graph_id,vertex,time,value\n",
        );
        let msg = load_dataset_dir(dir.path()).unwrap_err().to_string();
        assert!(msg.contains("graphs.csv:2"), "{msg}");
    }

    #[test]
    fn wrong_header() {
        let dir = tempfile::tempdir().unwrap();
        write_files(
            dir.path(),
            "id,num_vertices,horizon,class\n",
            "graph_id,source,target,time\n",
            "graph_id,vertex,time,value\n",
        );
        let msg = load_dataset_dir(dir.path()).unwrap_err().to_string();
        assert!(msg.contains("expected header"), "{msg}");
    }

    #[test]
    fn round_trip_preserves_graphs() {
        let mut labels = LabelStream::zeros(3, 1);
        labels.set(0, 0, &[1.0]).unwrap();
        labels.set(2, 2, &[1.0]).unwrap();
        let g = DynamicGraph::new(
            3,
            2,
            [TemporalEdge::new(0, 1, 1), TemporalEdge::new(2, 1, 2)],
            false,
        )
        .unwrap()
        .with_labels(labels)
        .unwrap();
        let d = Dataset::from_pairs([(g, 1)]).unwrap();
        let dir = tempfile::tempdir().unwrap();
        write_dataset(&d, dir.path(), Some("test")).unwrap();
        let back = load_dataset_dir(dir.path()).unwrap();
        let (a, b) = (&d.graphs()[0].graph, &back.graphs()[0].graph);
        assert_eq!(a.edges().collect::<Vec<_>>(), b.edges().collect::<Vec<_>>());
        assert_eq!(a.labels(), b.labels());
        assert_eq!(back.graphs()[0].class, 1);
    }
}
