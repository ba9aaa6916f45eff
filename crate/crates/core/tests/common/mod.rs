//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use std::collections::BTreeSet;

use deflab::{DeficiencyType, Diagram, OperationTable};

/// Cells constrained by a diagram: every diagonal cell plus both off-diagonal
/// cells of every edge.
pub fn diagram_cells(d: &Diagram) -> Vec<(usize, usize)> {
    let mut cells: Vec<(usize, usize)> = (1..=d.vertex_count()).map(|a| (a, a)).collect();
    for &(a, b, _) in d.edges() {
        cells.push((a, b));
        cells.push((b, a));
    }
    cells
}

/// Calls `visit` on every restricted-growth string of length `len`.
pub fn for_each_partition(len: usize, visit: &mut impl FnMut(&[u32]) -> bool) -> bool {
    fn go(labels: &mut Vec<u32>, len: usize, max: u32, visit: &mut impl FnMut(&[u32]) -> bool) -> bool {
        if labels.len() == len {
            return visit(labels);
        }
        for l in 0..=max + 1 {
            labels.push(l);
            let stop = go(labels, len, max.max(l), visit);
            labels.pop();
            if stop {
                return true;
            }
        }
        false
    }
    if len == 0 {
        return visit(&[]);
    }
    let mut labels = vec![0];
    go(&mut labels, len, 0, visit)
}

/// Model search: some assignment of values to the constrained cells gives every
/// edge exactly its type.
pub fn brute_realizable(d: &Diagram) -> bool {
    let cells = diagram_cells(d);
    let pos = |c: (usize, usize)| cells.iter().position(|&x| x == c).unwrap();
    let edges: Vec<([usize; 4], DeficiencyType)> = d
        .edges()
        .iter()
        .map(|&(a, b, t)| ([pos((a, a)), pos((a, b)), pos((b, a)), pos((b, b))], t))
        .collect();
    for_each_partition(cells.len(), &mut |vals| {
        edges.iter().all(|(idx, t)| DeficiencyType::from_cells(idx.map(|i| vals[i])) == Some(*t))
    })
}

pub fn all_tables(n: usize) -> impl Iterator<Item = OperationTable> {
    let cells = n * n;
    let total = (n as u64).pow(cells as u32);
    (0..total).map(move |mut code| {
        let entries = (0..cells)
            .map(|_| {
                let v = (code % n as u64) as u32;
                code /= n as u64;
                v
            })
            .collect();
        OperationTable::new(n, 2, entries).unwrap()
    })
}

pub fn brute_deficient_pairs(t: &OperationTable) -> usize {
    let n = t.order();
    let mut count = 0;
    for i in 0..n {
        for j in i + 1..n {
            let vals: BTreeSet<u32> =
                [t.product(i, i), t.product(i, j), t.product(j, i), t.product(j, j)].into();
            if vals.len() <= 2 {
                count += 1;
            }
        }
    }
    count
}
