//! Finite operation tables and the deficiency predicates evaluated on them.
//!
//! An [`OperationTable`] of order `n` and arity `d` stores `n^d` values in
//! row-major order, so the entry for `f(i_1, ..., i_d)` lives at
//! `sum_k i_k * n^(d-k)`. Elements are 0-based everywhere.

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use itertools::Itertools;
use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Upper bound on the number of stored entries.
pub const MAX_ENTRIES: usize = 1 << 28;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum TableError {
    #[error("order must be at least 1")]
    EmptyOrder,
    #[error("arity must be at least 2, got {0}")]
    BadArity(usize),
    #[error("table of order {order} and arity {arity} is too large")]
    TooLarge { order: usize, arity: usize },
    #[error("expected {expected} entries, got {actual}")]
    EntryCount { expected: usize, actual: usize },
    #[error("entry {value} at position {position} is out of range for order {order}")]
    EntryOutOfRange { position: usize, value: u32, order: usize },
    #[error("element {element} is out of range for order {order}")]
    ElementOutOfRange { element: usize, order: usize },
    #[error("subset must be nonempty")]
    EmptySubset,
    #[error("pair ({0}, {1}) must satisfy i < j")]
    UnorderedPair(usize, usize),
    #[error("operation requires arity 2, table has arity {0}")]
    NotBinary(usize),
    #[error("subset size {size} is invalid for order {order} (need 2 <= s <= n)")]
    SubsetSize { size: usize, order: usize },
    #[error("type filter is only defined for 2-element subsets of binary tables")]
    TypeFilterUnsupported,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

impl ParseError {
    fn new(line: usize, message: impl Into<String>) -> Self {
        ParseError { line, message: message.into() }
    }
}

/// A finite `d`-ary operation on `{0, ..., n-1}`.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct OperationTable {
    order: usize,
    arity: usize,
    entries: Vec<u32>,
}

pub(crate) fn entry_count(order: usize, arity: usize) -> Result<usize, TableError> {
    if order == 0 {
        return Err(TableError::EmptyOrder);
    }
    if arity < 2 {
        return Err(TableError::BadArity(arity));
    }
    u32::try_from(arity)
        .ok()
        .and_then(|a| order.checked_pow(a))
        .filter(|&c| c <= MAX_ENTRIES)
        .ok_or(TableError::TooLarge { order, arity })
}

impl OperationTable {
    pub fn new(order: usize, arity: usize, entries: Vec<u32>) -> Result<Self, TableError> {
        let expected = entry_count(order, arity)?;
        if entries.len() != expected {
            return Err(TableError::EntryCount { expected, actual: entries.len() });
        }
        if let Some((position, &value)) = entries.iter().enumerate().find(|(_, &v)| v as usize >= order) {
            return Err(TableError::EntryOutOfRange { position, value, order });
        }
        Ok(OperationTable { order, arity, entries })
    }

    /// Builds a table by evaluating `f` on every coordinate tuple in row-major order.
    pub fn from_fn(
        order: usize,
        arity: usize,
        mut f: impl FnMut(&[usize]) -> u32,
    ) -> Result<Self, TableError> {
        let count = entry_count(order, arity)?;
        let mut coords = vec![0usize; arity];
        let mut entries = Vec::with_capacity(count);
        for _ in 0..count {
            entries.push(f(&coords));
            for c in coords.iter_mut().rev() {
                *c += 1;
                if *c < order {
                    break;
                }
                *c = 0;
            }
        }
        OperationTable::new(order, arity, entries)
    }

    pub fn constant(order: usize, arity: usize, value: u32) -> Result<Self, TableError> {
        let count = entry_count(order, arity)?;
        OperationTable::new(order, arity, vec![value; count])
    }

    /// The binary left projection `x * y = x`.
    pub fn left_projection(order: usize) -> Result<Self, TableError> {
        OperationTable::from_fn(order, 2, |c| c[0] as u32)
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn entries(&self) -> &[u32] {
        &self.entries
    }

    pub fn into_entries(self) -> Vec<u32> {
        self.entries
    }

    pub fn flat_index(&self, coords: &[usize]) -> usize {
        debug_assert_eq!(coords.len(), self.arity);
        coords.iter().fold(0, |acc, &c| acc * self.order + c)
    }

    pub fn get(&self, coords: &[usize]) -> u32 {
        self.entries[self.flat_index(coords)]
    }

    /// `i * j` for a binary table.
    pub fn product(&self, i: usize, j: usize) -> u32 {
        self.entries[i * self.order + j]
    }

    fn check_elements(&self, subset: &[usize]) -> Result<(), TableError> {
        if subset.is_empty() {
            return Err(TableError::EmptySubset);
        }
        match subset.iter().find(|&&x| x >= self.order) {
            Some(&element) => Err(TableError::ElementOutOfRange { element, order: self.order }),
            None => Ok(()),
        }
    }

    /// `{ f(x_1, ..., x_d) : x_i in subset }`.
    pub fn image(&self, subset: &[usize]) -> Result<BTreeSet<u32>, TableError> {
        self.check_elements(subset)?;
        let elems: Vec<usize> = subset.iter().copied().sorted().dedup().collect();
        let mut out = BTreeSet::new();
        for_each_subtable_cell(elems.len(), self.arity, |positions| {
            let coords: Vec<usize> = positions.iter().map(|&p| elems[p]).collect();
            out.insert(self.get(&coords));
        });
        Ok(out)
    }

    /// `|image(X)| - |X|`. A subset is deficient iff this is `<= 0`.
    pub fn exceedance(&self, subset: &[usize]) -> Result<i64, TableError> {
        let size = subset.iter().copied().sorted().dedup().count();
        Ok(self.image(subset)?.len() as i64 - size as i64)
    }

    pub fn classify_pair(&self, i: usize, j: usize) -> Result<Option<DeficiencyType>, TableError> {
        if self.arity != 2 {
            return Err(TableError::NotBinary(self.arity));
        }
        self.check_elements(&[i, j])?;
        if i >= j {
            return Err(TableError::UnorderedPair(i, j));
        }
        Ok(DeficiencyType::from_cells([
            self.product(i, i),
            self.product(i, j),
            self.product(j, i),
            self.product(j, j),
        ]))
    }

    /// Partition of the `s^d` sub-table cells of `subset` by equal value.
    pub fn cell_signature(&self, subset: &[usize]) -> Result<CellSignature, TableError> {
        self.check_elements(subset)?;
        let elems: Vec<usize> = subset.iter().copied().sorted().dedup().collect();
        let mut values = Vec::with_capacity(elems.len().pow(self.arity as u32));
        for_each_subtable_cell(elems.len(), self.arity, |positions| {
            let coords: Vec<usize> = positions.iter().map(|&p| elems[p]).collect();
            values.push(self.get(&coords));
        });
        Ok(CellSignature::from_values(elems.len(), self.arity, &values))
    }

    /// Every `s`-subset satisfying `query`, in lexicographic order.
    pub fn deficient_subsets(&self, query: &SubsetQuery) -> Result<Vec<QualifyingSubset>, TableError> {
        query.validate(self.order, self.arity)?;
        let mut out = Vec::new();
        for subset in (0..self.order).combinations(query.subset_size) {
            let signature = self.cell_signature(&subset)?;
            if query.accepts(&signature) {
                out.push(QualifyingSubset { subset, signature });
            }
        }
        Ok(out)
    }

    pub fn parse(text: &str) -> Result<Self, ParseError> {
        let mut lines = text
            .lines()
            .enumerate()
            .map(|(i, l)| (i + 1, l.trim()))
            .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'));

        let (header_line, header) = lines.next().ok_or_else(|| ParseError::new(1, "missing header"))?;
        let fields: Vec<&str> = header.split_whitespace().collect();
        let parse_usize = |s: &str, what: &str| {
            s.parse::<usize>().map_err(|_| ParseError::new(header_line, format!("invalid {what} `{s}`")))
        };
        let (order, arity) = match fields.as_slice() {
            [n] => (parse_usize(n, "order")?, 2),
            [n, d] => (parse_usize(n, "order")?, parse_usize(d, "arity")?),
            _ => return Err(ParseError::new(header_line, "header must be `n` or `n d`")),
        };
        let count = entry_count(order, arity).map_err(|e| ParseError::new(header_line, e.to_string()))?;
        let rows = count / order;

        let mut entries = Vec::with_capacity(count);
        let mut last_line = header_line;
        for row in 0..rows {
            let (line, content) = lines.next().ok_or_else(|| {
                ParseError::new(last_line + 1, format!("expected {rows} rows, found {row}"))
            })?;
            last_line = line;
            let values: Vec<&str> = content.split_whitespace().collect();
            if values.len() != order {
                return Err(ParseError::new(
                    line,
                    format!("expected {order} entries, found {}", values.len()),
                ));
            }
            for v in values {
                let value: u32 =
                    v.parse().map_err(|_| ParseError::new(line, format!("invalid entry `{v}`")))?;
                if value as usize >= order {
                    return Err(ParseError::new(
                        line,
                        format!("entry {value} out of range for order {order}"),
                    ));
                }
                entries.push(value);
            }
        }
        if let Some((line, _)) = lines.next() {
            return Err(ParseError::new(line, format!("unexpected extra row (expected {rows})")));
        }
        OperationTable::new(order, arity, entries).map_err(|e| ParseError::new(header_line, e.to_string()))
    }

    /// Canonical text form: no comments, single spaces, trailing newline.
    pub fn serialize(&self) -> String {
        let mut out = if self.arity == 2 {
            format!("{}\n", self.order)
        } else {
            format!("{} {}\n", self.order, self.arity)
        };
        for row in self.entries.chunks(self.order) {
            out.push_str(&row.iter().join(" "));
            out.push('\n');
        }
        out
    }
}

impl FromStr for OperationTable {
    type Err = ParseError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        OperationTable::parse(s)
    }
}

impl fmt::Display for OperationTable {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.serialize())
    }
}

/// Calls `visit` with every `d`-tuple over positions `0..s`, lexicographically.
pub fn for_each_subtable_cell(s: usize, arity: usize, mut visit: impl FnMut(&[usize])) {
    if s == 0 {
        return;
    }
    let mut positions = vec![0usize; arity];
    loop {
        visit(&positions);
        let mut k = arity;
        loop {
            if k == 0 {
                return;
            }
            k -= 1;
            positions[k] += 1;
            if positions[k] < s {
                break;
            }
            positions[k] = 0;
        }
    }
}

/// The eight value patterns of a 2-element subset's sub-table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DeficiencyType {
    T0,
    T1,
    T2,
    T3,
    T4,
    T5,
    T6,
    T7,
}

/// Whether a type forces `i*i = j*j` or `i*i != j*j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiagonalClass {
    Equal,
    Unequal,
}

impl DeficiencyType {
    pub const ALL: [DeficiencyType; 8] = [
        DeficiencyType::T0,
        DeficiencyType::T1,
        DeficiencyType::T2,
        DeficiencyType::T3,
        DeficiencyType::T4,
        DeficiencyType::T5,
        DeficiencyType::T6,
        DeficiencyType::T7,
    ];

    /// The seven two-parameter types, T1 through T7.
    pub const TWO_VALUED: [DeficiencyType; 7] = [
        DeficiencyType::T1,
        DeficiencyType::T2,
        DeficiencyType::T3,
        DeficiencyType::T4,
        DeficiencyType::T5,
        DeficiencyType::T6,
        DeficiencyType::T7,
    ];

    /// Slot assignment for the cells `(ii, ij, ji, jj)`: 0 is `x`, 1 is `y`.
    pub fn pattern(self) -> [u8; 4] {
        use DeficiencyType::*;
        match self {
            T0 => [0, 0, 0, 0],
            T1 => [0, 1, 1, 1],
            T2 => [1, 0, 1, 1],
            T3 => [1, 1, 0, 1],
            T4 => [1, 1, 1, 0],
            T5 => [0, 0, 1, 1],
            T6 => [0, 1, 0, 1],
            T7 => [0, 1, 1, 0],
        }
    }

    /// The pattern relabelled by order of first appearance.
    pub fn canonical_pattern(self) -> [u8; 4] {
        let p = self.pattern();
        let mut out = [0u8; 4];
        for (o, &slot) in out.iter_mut().zip(&p) {
            *o = u8::from(slot != p[0]);
        }
        out
    }

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Self> {
        Self::ALL.get(index).copied()
    }

    pub fn diagonal_class(self) -> DiagonalClass {
        let p = self.pattern();
        if p[0] == p[3] {
            DiagonalClass::Equal
        } else {
            DiagonalClass::Unequal
        }
    }

    /// Matches the values of `(ii, ij, ji, jj)` against the eight patterns.
    pub fn from_cells(cells: [u32; 4]) -> Option<Self> {
        let first = cells[0];
        let mut other = None;
        let mut canon = [0u8; 4];
        for (c, &v) in canon.iter_mut().zip(&cells) {
            if v != first {
                match other {
                    None => other = Some(v),
                    Some(o) if o != v => return None,
                    _ => {}
                }
                *c = 1;
            }
        }
        Self::ALL.into_iter().find(|t| t.canonical_pattern() == canon)
    }
}

impl fmt::Display for DeficiencyType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "T{}", self.index())
    }
}

impl FromStr for DeficiencyType {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        s.strip_prefix('T')
            .or_else(|| s.strip_prefix('t'))
            .and_then(|d| d.parse::<usize>().ok())
            .and_then(DeficiencyType::from_index)
            .ok_or_else(|| format!("unknown type `{s}` (expected T0..T7)"))
    }
}

impl Serialize for DeficiencyType {
    fn serialize<S: serde::Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for DeficiencyType {
    fn deserialize<D: serde::Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// Canonical set partition of a subset's sub-table cells, labelled by first
/// appearance in lexicographic cell order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CellSignature {
    subset_size: usize,
    arity: usize,
    labels: Vec<u32>,
}

impl CellSignature {
    pub fn from_values(subset_size: usize, arity: usize, values: &[u32]) -> Self {
        let mut seen: Vec<u32> = Vec::new();
        let labels = values
            .iter()
            .map(|v| match seen.iter().position(|s| s == v) {
                Some(p) => p as u32,
                None => {
                    seen.push(*v);
                    (seen.len() - 1) as u32
                }
            })
            .collect();
        CellSignature { subset_size, arity, labels }
    }

    pub fn subset_size(&self) -> usize {
        self.subset_size
    }

    pub fn arity(&self) -> usize {
        self.arity
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    /// Number of blocks, which equals the size of the subset's image.
    pub fn block_count(&self) -> usize {
        self.labels.iter().max().map_or(0, |&m| m as usize + 1)
    }

    pub fn blocks(&self) -> Vec<Vec<usize>> {
        let mut blocks = vec![Vec::new(); self.block_count()];
        for (cell, &l) in self.labels.iter().enumerate() {
            blocks[l as usize].push(cell);
        }
        blocks
    }

    pub fn exceedance(&self) -> i64 {
        self.block_count() as i64 - self.subset_size as i64
    }

    /// The named type, for 2-element subsets of binary tables.
    pub fn as_type(&self) -> Option<DeficiencyType> {
        if self.subset_size != 2 || self.arity != 2 {
            return None;
        }
        DeficiencyType::from_cells([self.labels[0], self.labels[1], self.labels[2], self.labels[3]])
    }

    pub fn is_constant(&self) -> bool {
        self.block_count() == 1
    }
}

impl fmt::Display for CellSignature {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if let Some(t) = self.as_type() {
            return write!(f, "{t}");
        }
        for block in self.blocks() {
            write!(f, "{{{}}}", block.iter().join(","))?;
        }
        Ok(())
    }
}

/// Which subsets count as qualifying.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubsetQuery {
    pub subset_size: usize,
    /// Deficiency is `max_exceedance = 0`.
    pub max_exceedance: i64,
    pub type_filter: Option<DeficiencyType>,
    /// Drop subsets whose sub-table is constant (type T0 for pairs).
    pub exclude_t0: bool,
}

impl SubsetQuery {
    /// Deficient `s`-subsets: `|X*X| <= |X|`.
    pub fn deficient(subset_size: usize) -> Self {
        SubsetQuery { subset_size, max_exceedance: 0, type_filter: None, exclude_t0: false }
    }

    pub fn with_max_exceedance(mut self, eps: i64) -> Self {
        self.max_exceedance = eps;
        self
    }

    pub fn with_type(mut self, t: DeficiencyType) -> Self {
        self.type_filter = Some(t);
        self
    }

    pub fn excluding_t0(mut self) -> Self {
        self.exclude_t0 = true;
        self
    }

    pub fn validate(&self, order: usize, arity: usize) -> Result<(), TableError> {
        if self.subset_size < 2 || self.subset_size > order {
            return Err(TableError::SubsetSize { size: self.subset_size, order });
        }
        if self.type_filter.is_some() && (self.subset_size != 2 || arity != 2) {
            return Err(TableError::TypeFilterUnsupported);
        }
        Ok(())
    }

    /// Largest admissible image size.
    pub fn max_image(&self) -> i64 {
        self.subset_size as i64 + self.max_exceedance
    }

    pub fn accepts(&self, signature: &CellSignature) -> bool {
        if signature.exceedance() > self.max_exceedance {
            return false;
        }
        if self.exclude_t0 && signature.is_constant() {
            return false;
        }
        match self.type_filter {
            Some(t) => signature.as_type() == Some(t),
            None => true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QualifyingSubset {
    pub subset: Vec<usize>,
    pub signature: CellSignature,
}

impl QualifyingSubset {
    pub fn deficiency_type(&self) -> Option<DeficiencyType> {
        self.signature.as_type()
    }
}
