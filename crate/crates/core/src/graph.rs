//! Node-colored directed graphs.
//!
//! Every node carries one of two colors. Red marks the protected group. The
//! graph keeps its adjacency in compressed sparse row form together with the
//! per-node count of red and blue out-neighbors, since every fair transition
//! rule is defined in terms of those counts.

use std::collections::HashSet;
use std::fmt::Write as _;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize)]
pub enum Color {
    Red,
    Blue,
}

impl Color {
    pub fn is_red(self) -> bool {
        self == Color::Red
    }

    /// File encoding: 1 = red (protected), 0 = blue.
    pub fn code(self) -> u8 {
        match self {
            Color::Red => 1,
            Color::Blue => 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ColoredGraph {
    offsets: Vec<usize>,
    targets: Vec<usize>,
    colors: Vec<Color>,
    out_red: Vec<usize>,
    out_blue: Vec<usize>,
    n_red: usize,
}

impl ColoredGraph {
    /// Builds a graph from colors and an edge list. Edge order within each
    /// source is preserved.
    pub fn new(colors: Vec<Color>, edges: &[(usize, usize)]) -> Result<Self> {
        let n = colors.len();
        let mut seen = HashSet::with_capacity(edges.len());
        let mut degree = vec![0usize; n];
        for &(s, t) in edges {
            for v in [s, t] {
                if v >= n {
                    return Err(Error::Uncolored(v));
                }
            }
            if !seen.insert((s, t)) {
                return Err(Error::DuplicateEdge(s, t));
            }
            degree[s] += 1;
        }

        let mut offsets = Vec::with_capacity(n + 1);
        offsets.push(0);
        for d in &degree {
            offsets.push(offsets.last().unwrap() + d);
        }
        let mut cursor = offsets[..n].to_vec();
        let mut targets = vec![0usize; edges.len()];
        for &(s, t) in edges {
            targets[cursor[s]] = t;
            cursor[s] += 1;
        }

        let mut out_red = vec![0usize; n];
        let mut out_blue = vec![0usize; n];
        for i in 0..n {
            for &j in &targets[offsets[i]..offsets[i + 1]] {
                match colors[j] {
                    Color::Red => out_red[i] += 1,
                    Color::Blue => out_blue[i] += 1,
                }
            }
        }

        let n_red = colors.iter().filter(|c| c.is_red()).count();
        if n_red == 0 {
            return Err(Error::EmptyGroup("red"));
        }
        if n_red == n {
            return Err(Error::EmptyGroup("blue"));
        }

        Ok(Self {
            offsets,
            targets,
            colors,
            out_red,
            out_blue,
            n_red,
        })
    }

    /// Loads a tab-separated edge list and a color file.
    ///
    /// Lines starting with `#` and blank lines are skipped in both files.
    /// Color ids must cover `0..n` exactly; nodes that only appear in the
    /// color file become isolated sinks.
    pub fn load(edge_path: impl AsRef<Path>, color_path: impl AsRef<Path>) -> Result<Self> {
        let colors = read_colors(color_path.as_ref())?;
        let edges = read_edges(edge_path.as_ref())?;
        for &(s, t) in &edges {
            for v in [s, t] {
                if v >= colors.len() {
                    return Err(Error::Uncolored(v));
                }
            }
        }
        Self::new(colors, &edges)
    }

    /// Writes the graph back out in the same formats [`ColoredGraph::load`] reads.
    pub fn save(&self, edge_path: impl AsRef<Path>, color_path: impl AsRef<Path>) -> Result<()> {
        let mut edges = String::new();
        for (s, t) in self.edges() {
            writeln!(edges, "{s}\t{t}").unwrap();
        }
        fs::write(edge_path, edges)?;
        let mut colors = String::new();
        for (i, c) in self.colors.iter().enumerate() {
            writeln!(colors, "{i}\t{}", c.code()).unwrap();
        }
        fs::write(color_path, colors)?;
        Ok(())
    }

    pub fn node_count(&self) -> usize {
        self.colors.len()
    }

    pub fn edge_count(&self) -> usize {
        self.targets.len()
    }

    pub fn out_neighbors(&self, i: usize) -> &[usize] {
        &self.targets[self.offsets[i]..self.offsets[i + 1]]
    }

    pub fn out_degree(&self, i: usize) -> usize {
        self.offsets[i + 1] - self.offsets[i]
    }

    pub fn out_red(&self, i: usize) -> usize {
        self.out_red[i]
    }

    pub fn out_blue(&self, i: usize) -> usize {
        self.out_blue[i]
    }

    pub fn is_sink(&self, i: usize) -> bool {
        self.out_degree(i) == 0
    }

    pub fn color(&self, i: usize) -> Color {
        self.colors[i]
    }

    pub fn is_red(&self, i: usize) -> bool {
        self.colors[i].is_red()
    }

    pub fn colors(&self) -> &[Color] {
        &self.colors
    }

    pub fn red_count(&self) -> usize {
        self.n_red
    }

    pub fn blue_count(&self) -> usize {
        self.node_count() - self.n_red
    }

    pub fn red_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(|&i| self.is_red(i))
    }

    pub fn blue_nodes(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.node_count()).filter(|&i| !self.is_red(i))
    }

    pub fn edges(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        (0..self.node_count()).flat_map(move |i| self.out_neighbors(i).iter().map(move |&j| (i, j)))
    }

    /// Indicator vector of the red group.
    pub fn red_indicator(&self) -> Vec<f64> {
        self.colors.iter().map(|c| if c.is_red() { 1.0 } else { 0.0 }).collect()
    }
}

fn parse_usize(path: &Path, line: usize, tok: Option<&str>) -> Result<usize> {
    let tok = tok.ok_or_else(|| Error::Parse {
        path: path.to_owned(),
        line,
        msg: "expected two columns".into(),
    })?;
    tok.parse().map_err(|_| Error::Parse {
        path: path.to_owned(),
        line,
        msg: format!("not a node id: {tok:?}"),
    })
}

fn data_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let reader = BufReader::new(fs::File::open(path)?);
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((idx + 1, trimmed.to_owned()));
    }
    Ok(out)
}

fn read_edges(path: &Path) -> Result<Vec<(usize, usize)>> {
    let mut edges = Vec::new();
    for (line, text) in data_lines(path)? {
        let mut toks = text.split_whitespace();
        let s = parse_usize(path, line, toks.next())?;
        let t = parse_usize(path, line, toks.next())?;
        edges.push((s, t));
    }
    Ok(edges)
}

fn read_colors(path: &Path) -> Result<Vec<Color>> {
    let mut entries: Vec<Option<Color>> = Vec::new();
    for (line, text) in data_lines(path)? {
        let mut toks = text.split_whitespace();
        let node = parse_usize(path, line, toks.next())?;
        let color = match toks.next() {
            Some("1") => Color::Red,
            Some("0") => Color::Blue,
            other => {
                return Err(Error::Parse {
                    path: path.to_owned(),
                    line,
                    msg: format!("color must be 0 or 1, got {other:?}"),
                })
            }
        };
        if node >= entries.len() {
            entries.resize(node + 1, None);
        }
        if entries[node].replace(color).is_some() {
            return Err(Error::DuplicateColor(node));
        }
    }
    entries
        .into_iter()
        .enumerate()
        .map(|(i, c)| c.ok_or(Error::SparseIds(i)))
        .collect()
}

/// Group sizes and cross-edge ratios.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct GroupStats {
    pub n: usize,
    pub edges: usize,
    pub r: f64,
    pub b: f64,
    /// Fraction of red-sourced edges that point to blue nodes, divided by
    /// `b` (the fraction expected under color-blind target choice). `None`
    /// when red nodes have no out-edges.
    pub cross_r: Option<f64>,
    pub cross_b: Option<f64>,
}

pub fn group_stats(g: &ColoredGraph) -> GroupStats {
    let n = g.node_count();
    let r = g.red_count() as f64 / n as f64;
    let b = g.blue_count() as f64 / n as f64;
    let (mut red_out, mut red_cross, mut blue_out, mut blue_cross) = (0usize, 0usize, 0usize, 0usize);
    for i in 0..n {
        if g.is_red(i) {
            red_out += g.out_degree(i);
            red_cross += g.out_blue(i);
        } else {
            blue_out += g.out_degree(i);
            blue_cross += g.out_red(i);
        }
    }
    let ratio = |cross: usize, total: usize, expected: f64| {
        (total > 0).then(|| cross as f64 / total as f64 / expected)
    };
    GroupStats {
        n,
        edges: g.edge_count(),
        r,
        b,
        cross_r: ratio(red_cross, red_out, b),
        cross_b: ratio(blue_cross, blue_out, r),
    }
}

impl GroupStats {
    /// Single-row CSV with header `n,edges,r,b,cross_R,cross_B`. Undefined
    /// cross ratios are written as empty fields.
    pub fn to_csv(&self) -> String {
        let opt = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
        format!(
            "n,edges,r,b,cross_R,cross_B\n{},{},{},{},{},{}\n",
            self.n,
            self.edges,
            self.r,
            self.b,
            opt(self.cross_r),
            opt(self.cross_b)
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use Color::{Blue, Red};

    fn write(dir: &Path, name: &str, body: &str) -> std::path::PathBuf {
        let p = dir.join(name);
        fs::write(&p, body).unwrap();
        p
    }

    #[test]
    fn two_node_mutual() {
        let g = ColoredGraph::new(vec![Red, Blue], &[(0, 1), (1, 0)]).unwrap();
        assert_eq!(g.node_count(), 2);
        assert_eq!(g.red_count(), 1);
        assert_eq!(g.out_red(0), 0);
        assert_eq!(g.out_blue(0), 1);
    }

    #[test]
    fn load_reports_uncolored_node() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.tsv", "0\t1\n");
        let c = write(dir.path(), "c.tsv", "0\t1\n");
        assert!(matches!(ColoredGraph::load(e, c), Err(Error::Uncolored(1))));
    }

    #[test]
    fn load_rejects_duplicate_edge() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.tsv", "# five nodes\n0\t1\n2\t3\n3\t4\n2\t3\n");
        let c = write(dir.path(), "c.tsv", "0\t1\n1\t0\n2\t1\n3\t0\n4\t0\n");
        assert!(matches!(ColoredGraph::load(e, c), Err(Error::DuplicateEdge(2, 3))));
    }

    #[test]
    fn load_rejects_bad_tokens_and_empty_groups() {
        let dir = tempfile::tempdir().unwrap();
        let c = write(dir.path(), "c.tsv", "0\t1\n1\t0\n");
        let e = write(dir.path(), "e.tsv", "0\tx\n");
        assert!(matches!(ColoredGraph::load(&e, &c), Err(Error::Parse { line: 1, .. })));

        let e = write(dir.path(), "e2.tsv", "0\t1\n");
        let c = write(dir.path(), "c2.tsv", "0\t1\n1\t1\n");
        assert!(matches!(ColoredGraph::load(&e, &c), Err(Error::EmptyGroup("blue"))));

        let c = write(dir.path(), "c3.tsv", "0\t1\n2\t0\n");
        assert!(matches!(ColoredGraph::load(&e, &c), Err(Error::SparseIds(1))));
    }

    #[test]
    fn color_only_nodes_are_sinks() {
        let dir = tempfile::tempdir().unwrap();
        let e = write(dir.path(), "e.tsv", "0\t1\n");
        let c = write(dir.path(), "c.tsv", "0\t1\n1\t0\n2\t0\n");
        let g = ColoredGraph::load(e, c).unwrap();
        assert_eq!(g.node_count(), 3);
        assert!(g.is_sink(2));
    }

    #[test]
    fn save_then_load_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let g = ColoredGraph::new(vec![Red, Blue, Blue, Red], &[(0, 2), (0, 1), (2, 3), (3, 0)]).unwrap();
        let (e, c) = (dir.path().join("e"), dir.path().join("c"));
        g.save(&e, &c).unwrap();
        assert_eq!(ColoredGraph::load(&e, &c).unwrap(), g);
    }

    #[test]
    fn stats_two_node() {
        let g = ColoredGraph::new(vec![Red, Blue], &[(0, 1), (1, 0)]).unwrap();
        let s = group_stats(&g);
        assert_eq!(s.r, 0.5);
        assert_eq!(s.cross_r, Some(2.0));
        assert_eq!(s.cross_b, Some(2.0));
    }

    #[test]
    fn stats_complete_bipartite() {
        let colors = vec![Red, Red, Blue, Blue];
        let mut edges = Vec::new();
        for r in 0..2 {
            for b in 2..4 {
                edges.push((r, b));
                edges.push((b, r));
            }
        }
        let s = group_stats(&ColoredGraph::new(colors, &edges).unwrap());
        assert_eq!(s.cross_r, Some(2.0));
        assert_eq!(s.cross_b, Some(2.0));
    }

    #[test]
    fn stats_red_clique_with_isolated_blue() {
        let mut edges = Vec::new();
        for i in 0..4 {
            for j in 0..4 {
                if i != j {
                    edges.push((i, j));
                }
            }
        }
        let g = ColoredGraph::new(vec![Red, Red, Red, Red, Blue], &edges).unwrap();
        let s = group_stats(&g);
        assert_eq!(s.cross_r, Some(0.0));
        assert_eq!(s.cross_b, None);
        assert_eq!(s.to_csv(), "n,edges,r,b,cross_R,cross_B\n5,12,0.8,0.2,0,\n");
    }
}
