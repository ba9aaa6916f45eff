//! Configurations of deficient pairs and the labelled diagrams abstracting them.
//!
//! A [`Diagram`] has vertices `1..=v` in their natural order and one labelled
//! edge per deficient pair. Two diagrams are equivalent when an order- and
//! label-preserving graph isomorphism maps one onto the other; since the only
//! order-preserving bijection between two chains is the rank map, the sorted
//! edge list after rank compression is a canonical form.
//!
//! Realizability is decided by compiling each edge's type pattern into
//! equalities and one disequality over the Cayley cells it touches, closing
//! the equalities with union-find and checking that no disequality collapses.

use std::collections::BTreeMap;

use itertools::Itertools;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::table::{DeficiencyType, OperationTable, TableError};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum DiagramError {
    #[error("configuration is empty")]
    Empty,
    #[error("edge ({0}, {1}) must satisfy i < j")]
    UnorderedEdge(usize, usize),
    #[error("pair ({0}, {1}) occurs more than once")]
    DuplicateEdge(usize, usize),
    #[error("type T0 is not a diagram label")]
    T0Label,
    #[error("edge ({a}, {b}) is outside vertices 1..={v}")]
    VertexOutOfRange { a: usize, b: usize, v: usize },
    #[error("vertex {0} has no incident edge")]
    IsolatedVertex(usize),
    #[error("diagram is not realizable by any groupoid")]
    Unrealizable,
    #[error("edge count {0} is outside the supported range 1..=4")]
    EdgeCountOutOfRange(usize),
    #[error("configurations overlap")]
    Overlap,
    #[error(transparent)]
    Table(#[from] TableError),
}

/// One deficient pair `{i, j}` (with `i < j`) and its type.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ConfigEdge {
    pub i: usize,
    pub j: usize,
    pub kind: DeficiencyType,
}

/// A set of deficient pairs of one groupoid.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Configuration {
    edges: Vec<ConfigEdge>,
    source_order: Option<usize>,
}

impl Configuration {
    /// Validates and sorts `edges`. T0 edges are rejected unless `allow_t0`.
    pub fn new(mut edges: Vec<ConfigEdge>, allow_t0: bool) -> Result<Self, DiagramError> {
        for e in &edges {
            if e.i >= e.j {
                return Err(DiagramError::UnorderedEdge(e.i, e.j));
            }
            if e.kind == DeficiencyType::T0 && !allow_t0 {
                return Err(DiagramError::T0Label);
            }
        }
        edges.sort();
        if let Some((a, _)) = edges.iter().tuple_windows().find(|(a, b)| (a.i, a.j) == (b.i, b.j)) {
            return Err(DiagramError::DuplicateEdge(a.i, a.j));
        }
        Ok(Configuration { edges, source_order: None })
    }

    pub fn with_source_order(mut self, n: usize) -> Self {
        self.source_order = Some(n);
        self
    }

    pub fn edges(&self) -> &[ConfigEdge] {
        &self.edges
    }

    pub fn source_order(&self) -> Option<usize> {
        self.source_order
    }

    pub fn len(&self) -> usize {
        self.edges.len()
    }

    pub fn is_empty(&self) -> bool {
        self.edges.is_empty()
    }

    /// Sorted union of the pairs.
    pub fn elements(&self) -> Vec<usize> {
        self.edges.iter().flat_map(|e| [e.i, e.j]).sorted().dedup().collect()
    }

    pub fn is_disjoint(&self) -> bool {
        self.elements().len() == 2 * self.edges.len()
    }

    /// `self ⊕ other`, defined only when no pair of one meets a pair of the other.
    pub fn disjoint_sum(&self, other: &Configuration) -> Result<Configuration, DiagramError> {
        let mine = self.elements();
        if other.elements().iter().any(|x| mine.binary_search(x).is_ok()) {
            return Err(DiagramError::Overlap);
        }
        let edges = self.edges.iter().chain(&other.edges).copied().collect();
        let mut sum = Configuration::new(edges, true)?;
        sum.source_order = self.source_order.or(other.source_order);
        Ok(sum)
    }

    /// Keeps only the given pairs.
    pub fn restrict(&self, pairs: &[(usize, usize)]) -> Configuration {
        Configuration {
            edges: self.edges.iter().filter(|e| pairs.contains(&(e.i, e.j))).copied().collect(),
            source_order: self.source_order,
        }
    }
}

/// All T1–T7 deficient pairs of a binary table (T0 pairs too if `include_t0`).
pub fn config_of_table(table: &OperationTable, include_t0: bool) -> Result<Configuration, DiagramError> {
    if table.arity() != 2 {
        return Err(TableError::NotBinary(table.arity()).into());
    }
    let n = table.order();
    let mut edges = Vec::new();
    for i in 0..n {
        for j in i + 1..n {
            match table.classify_pair(i, j)? {
                Some(DeficiencyType::T0) if !include_t0 => {}
                Some(kind) => edges.push(ConfigEdge { i, j, kind }),
                None => {}
            }
        }
    }
    Ok(Configuration { edges, source_order: Some(n) })
}

pub type DiagramEdge = (usize, usize, DeficiencyType);

#[derive(Deserialize)]
struct RawDiagram {
    v: usize,
    edges: Vec<DiagramEdge>,
}

/// A labelled graph on the ordered vertices `1..=v` without isolated vertices.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "RawDiagram")]
pub struct Diagram {
    v: usize,
    edges: Vec<DiagramEdge>,
}

impl TryFrom<RawDiagram> for Diagram {
    type Error = DiagramError;

    fn try_from(raw: RawDiagram) -> Result<Self, Self::Error> {
        Diagram::new(raw.v, raw.edges)
    }
}

impl Diagram {
    /// Validates a diagram given on vertices `1..=v`; edges are stored sorted.
    pub fn new(v: usize, mut edges: Vec<DiagramEdge>) -> Result<Self, DiagramError> {
        if edges.is_empty() {
            return Err(DiagramError::Empty);
        }
        let mut degree = vec![0usize; v + 1];
        for &(a, b, t) in &edges {
            if a >= b {
                return Err(DiagramError::UnorderedEdge(a, b));
            }
            if a == 0 || b > v {
                return Err(DiagramError::VertexOutOfRange { a, b, v });
            }
            if t == DeficiencyType::T0 {
                return Err(DiagramError::T0Label);
            }
            degree[a] += 1;
            degree[b] += 1;
        }
        if let Some(isolated) = (1..=v).find(|&x| degree[x] == 0) {
            return Err(DiagramError::IsolatedVertex(isolated));
        }
        edges.sort();
        if let Some((a, _)) = edges.iter().tuple_windows().find(|(a, b)| (a.0, a.1) == (b.0, b.1)) {
            return Err(DiagramError::DuplicateEdge(a.0, a.1));
        }
        Ok(Diagram { v, edges })
    }

    /// Compresses arbitrary vertex labels order-preservingly onto `1..=v`.
    pub fn from_labelled_edges(edges: &[DiagramEdge]) -> Result<Self, DiagramError> {
        let vertices: Vec<usize> = edges.iter().flat_map(|e| [e.0, e.1]).sorted().dedup().collect();
        let rank = |x: usize| vertices.binary_search(&x).map(|r| r + 1).unwrap_or(0);
        let compressed = edges.iter().map(|&(a, b, t)| (rank(a), rank(b), t)).collect();
        Diagram::new(vertices.len(), compressed)
    }

    pub fn from_json(text: &str) -> Result<Self, serde_json::Error> {
        serde_json::from_str(text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string(self).expect("diagram serializes")
    }

    pub fn vertex_count(&self) -> usize {
        self.v
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn edges(&self) -> &[DiagramEdge] {
        &self.edges
    }

    pub fn degrees(&self) -> Vec<usize> {
        let mut degree = vec![0usize; self.v];
        for &(a, b, _) in &self.edges {
            degree[a - 1] += 1;
            degree[b - 1] += 1;
        }
        degree
    }

    pub fn is_perfect_matching(&self) -> bool {
        self.degrees().iter().all(|&d| d == 1)
    }

    pub fn component_count(&self) -> usize {
        let mut uf = UnionFind::new(self.v);
        for &(a, b, _) in &self.edges {
            uf.union(a - 1, b - 1);
        }
        uf.set_count()
    }

    /// Connected with maximum degree 2 and `v - 1` edges.
    pub fn is_path(&self) -> bool {
        self.component_count() == 1
            && self.edges.len() + 1 == self.v
            && self.degrees().iter().all(|&d| d <= 2)
    }

    /// Diagrams are stored in canonical form, so this is a clone.
    pub fn canonicalize(&self) -> Diagram {
        self.clone()
    }

    pub fn equivalent(&self, other: &Diagram) -> bool {
        self.canonicalize() == other.canonicalize()
    }

    pub fn compile_constraints(&self) -> ConstraintSystem {
        ConstraintSystem::compile(self)
    }

    pub fn realizable(&self) -> bool {
        self.compile_constraints().is_consistent()
    }

    pub fn stats(&self) -> DiagramStats {
        let system = self.compile_constraints();
        DiagramStats {
            alpha: system.class_count(),
            beta: system.cell_count(),
            gamma: self.v,
            k: self.edges.len(),
            c: self.component_count(),
        }
    }

    /// The configuration on elements `0..v` whose diagram is `self`.
    pub fn to_configuration(&self) -> Configuration {
        let edges = self.edges.iter().map(|&(a, b, kind)| ConfigEdge { i: a - 1, j: b - 1, kind });
        Configuration { edges: edges.collect(), source_order: None }
    }
}

/// `Diagram(C)`: the union of the pairs, ranked, with the pairs as labelled edges.
pub fn diagram_of(config: &Configuration) -> Result<Diagram, DiagramError> {
    let edges: Vec<DiagramEdge> = config.edges.iter().map(|e| (e.i, e.j, e.kind)).collect();
    Diagram::from_labelled_edges(&edges)
}

/// Disjoint-set forest with path halving and union by size.
#[derive(Debug, Clone)]
pub struct UnionFind {
    parent: Vec<usize>,
    size: Vec<usize>,
    sets: usize,
}

impl UnionFind {
    pub fn new(n: usize) -> Self {
        UnionFind { parent: (0..n).collect(), size: vec![1; n], sets: n }
    }

    pub fn find(&mut self, mut x: usize) -> usize {
        while self.parent[x] != x {
            self.parent[x] = self.parent[self.parent[x]];
            x = self.parent[x];
        }
        x
    }

    pub fn union(&mut self, a: usize, b: usize) -> bool {
        let (mut ra, mut rb) = (self.find(a), self.find(b));
        if ra == rb {
            return false;
        }
        if self.size[ra] < self.size[rb] {
            std::mem::swap(&mut ra, &mut rb);
        }
        self.parent[rb] = ra;
        self.size[ra] += self.size[rb];
        self.sets -= 1;
        true
    }

    pub fn set_count(&self) -> usize {
        self.sets
    }
}

/// Equalities and disequalities over the Cayley cells `(u, w)` that a
/// diagram's edges constrain. Vertices are 1-based as in [`Diagram`].
#[derive(Debug, Clone)]
pub struct ConstraintSystem {
    cells: Vec<(usize, usize)>,
    classes: UnionFind,
    /// Cell indices whose classes must differ, one per edge.
    neq: Vec<(usize, usize)>,
}

impl ConstraintSystem {
    pub fn compile(diagram: &Diagram) -> Self {
        let mut index: BTreeMap<(usize, usize), usize> = BTreeMap::new();
        for &(a, b, _) in &diagram.edges {
            for cell in [(a, a), (a, b), (b, a), (b, b)] {
                let next = index.len();
                index.entry(cell).or_insert(next);
            }
        }
        // Renumber in row-major cell order.
        let cells: Vec<(usize, usize)> = index.keys().copied().collect();
        let id = |cell: (usize, usize)| cells.binary_search(&cell).expect("cell registered");

        let mut classes = UnionFind::new(cells.len());
        let mut neq = Vec::with_capacity(diagram.edges.len());
        for &(a, b, t) in &diagram.edges {
            let block = [id((a, a)), id((a, b)), id((b, a)), id((b, b))];
            let pattern = t.pattern();
            let x = (0..4).find(|&p| pattern[p] == 0).expect("x slot");
            let y = (0..4).find(|&p| pattern[p] == 1).expect("y slot");
            for p in 0..4 {
                let rep = if pattern[p] == 0 { x } else { y };
                classes.union(block[rep], block[p]);
            }
            neq.push((block[x], block[y]));
        }
        ConstraintSystem { cells, classes, neq }
    }

    pub fn cells(&self) -> &[(usize, usize)] {
        &self.cells
    }

    /// β: number of constrained cells.
    pub fn cell_count(&self) -> usize {
        self.cells.len()
    }

    /// α: number of free parameters after equality closure.
    pub fn class_count(&self) -> usize {
        self.classes.set_count()
    }

    pub fn disequalities(&self) -> &[(usize, usize)] {
        &self.neq
    }

    /// Class id of each cell, numbered by first appearance in row-major order.
    pub fn class_labels(&self) -> Vec<usize> {
        let mut uf = self.classes.clone();
        let mut seen: Vec<usize> = Vec::new();
        (0..self.cells.len())
            .map(|c| {
                let root = uf.find(c);
                seen.iter().position(|&r| r == root).unwrap_or_else(|| {
                    seen.push(root);
                    seen.len() - 1
                })
            })
            .collect()
    }

    /// No disequality joins two cells of the same class.
    pub fn is_consistent(&self) -> bool {
        let mut uf = self.classes.clone();
        self.neq.iter().all(|&(a, b)| uf.find(a) != uf.find(b))
    }
}

/// Parameter, cell, diagonal, edge and component counts of a diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DiagramStats {
    pub alpha: usize,
    pub beta: usize,
    pub gamma: usize,
    pub k: usize,
    pub c: usize,
}

pub const MAX_ENUMERATION_EDGES: usize = 4;

fn check_edge_count(k: usize) -> Result<(), DiagramError> {
    if k == 0 || k > MAX_ENUMERATION_EDGES {
        return Err(DiagramError::EdgeCountOutOfRange(k));
    }
    Ok(())
}

/// Vertex count and sorted edge list of an unlabelled graph.
pub type BaseGraph = (usize, Vec<(usize, usize)>);

/// Unlabelled graphs with `k` edges and no isolated vertex on `1..=v`, for
/// every `v`, as `(v, sorted edge list)`.
pub fn base_graphs(k: usize) -> Result<Vec<BaseGraph>, DiagramError> {
    check_edge_count(k)?;
    let mut out = Vec::new();
    for v in 2..=2 * k {
        let pairs: Vec<(usize, usize)> = (1..=v).tuple_combinations().collect();
        for edges in pairs.into_iter().combinations(k) {
            let mut covered = vec![false; v + 1];
            for &(a, b) in &edges {
                covered[a] = true;
                covered[b] = true;
            }
            if covered[1..].iter().all(|&c| c) {
                out.push((v, edges));
            }
        }
    }
    Ok(out)
}

fn labellings(k: usize) -> impl Iterator<Item = Vec<DeficiencyType>> {
    (0..k).map(|_| DeficiencyType::TWO_VALUED).multi_cartesian_product()
}

fn labelled(v: usize, edges: &[(usize, usize)], labels: &[DeficiencyType]) -> Diagram {
    let edges = edges.iter().zip(labels).map(|(&(a, b), &t)| (a, b, t)).collect();
    Diagram { v, edges }
}

/// Every canonical diagram with `k` edges, ordered by vertex count, then edge
/// set, then labels.
pub fn enumerate_diagrams(k: usize, realizable_only: bool) -> Result<Vec<Diagram>, DiagramError> {
    let graphs = base_graphs(k)?;
    let out = graphs
        .par_iter()
        .map(|(v, edges)| {
            labellings(k)
                .map(|labels| labelled(*v, edges, &labels))
                .filter(|d| !realizable_only || d.realizable())
                .collect::<Vec<_>>()
        })
        .collect::<Vec<_>>();
    Ok(out.into_iter().flatten().collect())
}

/// Number of diagrams [`enumerate_diagrams`] would return, without building the list.
pub fn count_diagrams(k: usize, realizable_only: bool) -> Result<u64, DiagramError> {
    let graphs = base_graphs(k)?;
    if !realizable_only {
        return Ok(graphs.len() as u64 * 7u64.pow(k as u32));
    }
    Ok(graphs
        .par_iter()
        .map(|(v, edges)| {
            labellings(k).filter(|labels| labelled(*v, edges, labels).realizable()).count() as u64
        })
        .sum())
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lemma3Violation {
    pub diagram: Diagram,
    pub relation: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Lemma3Report {
    /// Realizable diagrams checked, over all edge counts.
    pub checked: usize,
    /// `(k, checked)` per edge count.
    pub by_k: Vec<(usize, usize)>,
    /// Path-shaped diagrams among them, for which `α = v` is also checked.
    pub paths: usize,
    pub violations: Vec<Lemma3Violation>,
}

impl Lemma3Report {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Relations between α, β, γ, k, c and v that every realizable diagram satisfies.
/// Returns the names of the ones that fail.
pub fn lemma3_failures(diagram: &Diagram) -> Vec<&'static str> {
    let s = diagram.stats();
    let v = diagram.vertex_count();
    let matching = diagram.is_perfect_matching();
    let mut failed = Vec::new();
    if s.alpha > s.k + s.c {
        failed.push("alpha <= k + c");
    }
    if matching && s.alpha != 2 * s.k {
        failed.push("matching => alpha = 2k");
    }
    if s.beta != 2 * s.k + v {
        failed.push("beta = 2k + v");
    }
    if s.gamma != v {
        failed.push("gamma = v");
    }
    if s.c > s.k {
        failed.push("c <= k");
    }
    if (s.c == s.k) != matching {
        failed.push("c = k <=> matching");
    }
    if diagram.is_path() && s.alpha != v {
        failed.push("path => alpha = v");
    }
    failed
}

/// Checks [`lemma3_failures`] over every realizable diagram with at most `k_max` edges.
pub fn verify_lemma3(k_max: usize) -> Result<Lemma3Report, DiagramError> {
    if k_max > 3 {
        return Err(DiagramError::EdgeCountOutOfRange(k_max));
    }
    let mut report = Lemma3Report { checked: 0, by_k: Vec::new(), paths: 0, violations: Vec::new() };
    for k in 1..=k_max {
        let diagrams = enumerate_diagrams(k, true)?;
        report.by_k.push((k, diagrams.len()));
        report.checked += diagrams.len();
        for d in diagrams {
            if d.is_path() {
                report.paths += 1;
            }
            for relation in lemma3_failures(&d) {
                report.violations.push(Lemma3Violation { diagram: d.clone(), relation: relation.into() });
            }
        }
    }
    Ok(report)
}

/// A smallest table containing a configuration with this diagram.
///
/// Vertex `a` becomes element `a - 1`; each equality class gets its own value,
/// numbered by first appearance in row-major cell order. Unconstrained cells are 0.
pub fn witness_groupoid(diagram: &Diagram) -> Result<OperationTable, DiagramError> {
    let system = diagram.compile_constraints();
    if !system.is_consistent() {
        return Err(DiagramError::Unrealizable);
    }
    let n = diagram.vertex_count().max(system.class_count());
    let mut entries = vec![0u32; n * n];
    for (&(u, w), class) in system.cells().iter().zip(system.class_labels()) {
        entries[(u - 1) * n + (w - 1)] = class as u32;
    }
    Ok(OperationTable::new(n, 2, entries)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use DeficiencyType::*;

    fn d(v: usize, edges: &[DiagramEdge]) -> Diagram {
        Diagram::new(v, edges.to_vec()).unwrap()
    }

    fn edge(i: usize, j: usize, kind: DeficiencyType) -> ConfigEdge {
        ConfigEdge { i, j, kind }
    }

    #[test]
    fn diagram_of_examples() {
        let c = Configuration::new(vec![edge(2, 5, T1)], false).unwrap();
        assert_eq!(diagram_of(&c).unwrap(), d(2, &[(1, 2, T1)]));

        let c = Configuration::new(vec![edge(1, 2, T1), edge(3, 4, T7)], false).unwrap();
        let g = diagram_of(&c).unwrap();
        assert!(c.is_disjoint());
        assert!(g.is_perfect_matching());
        assert_eq!(g.vertex_count(), 4);

        let c = Configuration::new(vec![edge(1, 2, T1), edge(2, 3, T4)], false).unwrap();
        let g = diagram_of(&c).unwrap();
        assert!(!c.is_disjoint());
        assert!(!g.is_perfect_matching());
        assert_eq!((g.component_count(), g.edge_count(), g.vertex_count()), (1, 2, 3));
    }

    #[test]
    fn configuration_validation() {
        assert_eq!(
            Configuration::new(vec![edge(3, 1, T1)], false).unwrap_err(),
            DiagramError::UnorderedEdge(3, 1)
        );
        assert_eq!(
            Configuration::new(vec![edge(1, 3, T1), edge(1, 3, T2)], false).unwrap_err(),
            DiagramError::DuplicateEdge(1, 3)
        );
        assert_eq!(Configuration::new(vec![edge(1, 3, T0)], false).unwrap_err(), DiagramError::T0Label);
        assert!(Configuration::new(vec![edge(1, 3, T0)], true).is_ok());
    }

    #[test]
    fn disjoint_sums() {
        let a = Configuration::new(vec![edge(0, 1, T1)], false).unwrap();
        let b = Configuration::new(vec![edge(2, 5, T3)], false).unwrap();
        let c = Configuration::new(vec![edge(1, 4, T3)], false).unwrap();
        let sum = a.disjoint_sum(&b).unwrap();
        assert_eq!(sum.len(), 2);
        assert!(sum.is_disjoint());
        assert_eq!(a.disjoint_sum(&c).unwrap_err(), DiagramError::Overlap);
        let merged = diagram_of(&sum).unwrap().stats();
        let (sa, sb) = (diagram_of(&a).unwrap().stats(), diagram_of(&b).unwrap().stats());
        assert_eq!(merged.alpha, sa.alpha + sb.alpha);
        assert_eq!(merged.beta, sa.beta + sb.beta);
    }

    #[test]
    fn diagram_validation() {
        assert_eq!(Diagram::new(3, vec![(1, 2, T1)]).unwrap_err(), DiagramError::IsolatedVertex(3));
        assert_eq!(Diagram::new(2, vec![]).unwrap_err(), DiagramError::Empty);
        assert_eq!(Diagram::new(2, vec![(1, 2, T0)]).unwrap_err(), DiagramError::T0Label);
        assert!(matches!(
            Diagram::new(2, vec![(1, 3, T1)]).unwrap_err(),
            DiagramError::VertexOutOfRange { .. }
        ));
    }

    #[test]
    fn json_format() {
        let g = d(3, &[(2, 3, T3), (1, 2, T1)]);
        assert_eq!(g.to_json(), r#"{"v":3,"edges":[[1,2,"T1"],[2,3,"T3"]]}"#);
        assert_eq!(Diagram::from_json(&g.to_json()).unwrap(), g);
        assert!(Diagram::from_json(r#"{"v":3,"edges":[[1,2,"T1"]]}"#).is_err());
        assert!(Diagram::from_json(r#"{"v":2,"edges":[[1,2,"T9"]]}"#).is_err());
    }

    #[test]
    fn equivalence() {
        let a = Diagram::from_labelled_edges(&[(1, 3, T2)]).unwrap();
        assert!(a.equivalent(&d(2, &[(1, 2, T2)])));
        assert!(!d(2, &[(1, 2, T1)]).equivalent(&d(2, &[(1, 2, T2)])));
        let p = d(3, &[(1, 2, T1), (2, 3, T4)]);
        let q = d(3, &[(1, 3, T1), (2, 3, T4)]);
        assert!(!p.equivalent(&q));
        assert_eq!(p.canonicalize().canonicalize(), p);
    }

    #[test]
    fn constraint_examples() {
        let single = d(2, &[(1, 2, T1)]).compile_constraints();
        assert_eq!((single.class_count(), single.cell_count()), (2, 4));
        assert_eq!(single.class_labels(), vec![0, 1, 1, 1]);
        assert_eq!(single.disequalities().len(), 1);

        let t7 = d(2, &[(1, 2, T7)]).compile_constraints();
        assert_eq!(t7.class_labels(), vec![0, 1, 1, 0]);

        let path = d(3, &[(1, 2, T1), (2, 3, T1)]).compile_constraints();
        assert_eq!((path.cell_count(), path.class_count()), (7, 3));
    }

    #[test]
    fn realizability_examples() {
        for t in DeficiencyType::TWO_VALUED {
            assert!(d(2, &[(1, 2, t)]).realizable());
        }
        assert!(!d(3, &[(1, 2, T7), (2, 3, T7), (1, 3, T1)]).realizable());
        assert!(d(3, &[(1, 2, T1), (2, 3, T4), (1, 3, T7)]).realizable());
    }

    #[test]
    fn stats_examples() {
        let s = d(2, &[(1, 2, T5)]).stats();
        assert_eq!((s.alpha, s.beta, s.gamma, s.k, s.c), (2, 4, 2, 1, 1));
        let s = d(4, &[(1, 2, T3), (3, 4, T6)]).stats();
        assert_eq!((s.alpha, s.beta, s.gamma), (4, 8, 4));
        let s = d(3, &[(1, 2, T1), (2, 3, T2)]).stats();
        assert_eq!((s.alpha, s.beta, s.gamma, s.c, s.k), (3, 7, 3, 1, 2));
    }

    #[test]
    fn enumeration_counts() {
        assert_eq!(enumerate_diagrams(1, false).unwrap().len(), 7);
        let two = enumerate_diagrams(2, false).unwrap();
        assert_eq!(two.len(), 294);
        assert_eq!(base_graphs(2).unwrap().len(), 6);
        assert_eq!(two.iter().filter(|g| g.is_perfect_matching()).count(), 147);
        assert_eq!(enumerate_diagrams(2, true).unwrap().len(), 294);
        assert_eq!(count_diagrams(2, false).unwrap(), 294);
        assert_eq!(count_diagrams(3, true).unwrap(), enumerate_diagrams(3, true).unwrap().len() as u64);
        assert!(enumerate_diagrams(0, false).is_err());
        assert!(enumerate_diagrams(5, false).is_err());
        // all distinct, all canonical
        let mut sorted = two.clone();
        sorted.sort();
        sorted.dedup();
        assert_eq!(sorted.len(), 294);
    }

    #[test]
    fn lemma3_small() {
        let r = verify_lemma3(1).unwrap();
        assert_eq!((r.checked, r.violations.len()), (7, 0));
        let r = verify_lemma3(2).unwrap();
        assert_eq!(r.by_k, vec![(1, 7), (2, 294)]);
        assert!(r.passed());
        assert!(verify_lemma3(4).is_err());
    }

    #[test]
    fn witness_examples() {
        let w = witness_groupoid(&d(2, &[(1, 2, T5)])).unwrap();
        assert_eq!(w, OperationTable::left_projection(2).unwrap());
        let w = witness_groupoid(&d(2, &[(1, 2, T7)])).unwrap();
        assert_eq!(w, OperationTable::parse("2\n0 1\n1 0").unwrap());
        assert_eq!(
            witness_groupoid(&d(3, &[(1, 2, T7), (2, 3, T7), (1, 3, T1)])).unwrap_err(),
            DiagramError::Unrealizable
        );
    }

    #[test]
    fn configs_of_tables() {
        let xor = OperationTable::parse("2\n0 1\n1 0").unwrap();
        assert_eq!(config_of_table(&xor, false).unwrap().edges(), &[edge(0, 1, T7)]);
        let c = OperationTable::constant(3, 2, 0).unwrap();
        assert!(config_of_table(&c, false).unwrap().is_empty());
        assert_eq!(config_of_table(&c, true).unwrap().len(), 3);
        let l = OperationTable::left_projection(3).unwrap();
        let cfg = config_of_table(&l, false).unwrap();
        assert_eq!(cfg.len(), 3);
        assert!(cfg.edges().iter().all(|e| e.kind == T5));
        let ternary = OperationTable::constant(2, 3, 0).unwrap();
        assert!(config_of_table(&ternary, false).is_err());
    }
}
