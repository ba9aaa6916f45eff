//! Monte Carlo and exhaustive estimation of deficiency-event probabilities.
//!
//! # Sampling scheme
//!
//! Sample `i` under seed `s` is a uniformly random table whose cells are
//! generated independently from a counter-based function, so a cell's value
//! depends only on `(s, i, flat cell index)`:
//!
//! ```text
//! mix64(z)      = SplitMix64 finalizer:
//!                 z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
//!                 z = (z ^ (z >> 27)) * 0x94d049bb133111eb
//!                 z ^ (z >> 31)
//! stream(s, i)  = mix64(mix64(s ^ 0x6a09e667f3bcc909) ^ i * 0x9e3779b97f4a7c15)
//! word(c, a)    = mix64(stream + (((a << 48) | c) + 1) * 0x9e3779b97f4a7c15)
//! cell(c)       = word(c, a) mod n for the first attempt a = 0, 1, ...
//!                 with word(c, a) < floor(2^64 / n) * n
//! ```
//!
//! All arithmetic wraps modulo 2^64. Rejection removes modulo bias. Because
//! no sequential stream is consumed, early exit, scan order and the number of
//! worker threads never change any result.

use std::ops::ControlFlow;

use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::combinatorics::{
    expected_count, expected_count_excluding_constant, expected_type_count, limit_rate, CombinatoricsError,
    LimitRate, Rate,
};
use crate::table::{
    entry_count, for_each_subtable_cell, CellSignature, DeficiencyType, OperationTable, SubsetQuery,
    TableError,
};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EstimationError {
    #[error(transparent)]
    Table(#[from] TableError),
    #[error(transparent)]
    Combinatorics(#[from] CombinatoricsError),
    #[error("need at least one sample")]
    NoSamples,
    #[error("exhaustive enumeration of {order}^({order}^{arity}) tables exceeds the default limit; pass the override flag")]
    GuardExceeded { order: usize, arity: usize },
    #[error("exhaustive enumeration of order {order}, arity {arity} is out of reach")]
    Infeasible { order: usize, arity: usize },
    #[error("cell index space of order {order}, arity {arity} exceeds 2^48")]
    IndexSpace { order: usize, arity: usize },
    #[error("this estimator needs 2-element subsets of binary tables")]
    PairsOnly,
}

const GOLDEN_GAMMA: u64 = 0x9e37_79b9_7f4a_7c15;
const SEED_SALT: u64 = 0x6a09_e667_f3bc_c909;
const MAX_CELL_INDEX: u64 = 1 << 48;

pub fn mix64(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

/// Identifies one random table: the run seed and the sample's index.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct SamplerKey {
    pub seed: u64,
    pub sample_index: u64,
}

impl SamplerKey {
    pub fn new(seed: u64, sample_index: u64) -> Self {
        SamplerKey { seed, sample_index }
    }

    fn stream(&self) -> u64 {
        mix64(mix64(self.seed ^ SEED_SALT) ^ self.sample_index.wrapping_mul(GOLDEN_GAMMA))
    }
}

fn bounded(stream: u64, n: usize, cell: u64) -> u32 {
    if n <= 1 {
        return 0;
    }
    let n = n as u64;
    let zone = (u64::MAX / n) * n;
    let mut attempt = 0u64;
    loop {
        let counter = ((attempt << 48) | cell).wrapping_add(1);
        let w = mix64(stream.wrapping_add(counter.wrapping_mul(GOLDEN_GAMMA)));
        if w < zone {
            return (w % n) as u32;
        }
        attempt += 1;
    }
}

/// Value of the cell at flat row-major index `flat` in the table for `key`.
pub fn cell_value(key: SamplerKey, n: usize, flat: u64) -> u32 {
    bounded(key.stream(), n, flat)
}

fn check_index_space(n: usize, d: usize) -> Result<(), EstimationError> {
    let fits =
        u32::try_from(d).ok().and_then(|d| (n as u64).checked_pow(d)).is_some_and(|c| c <= MAX_CELL_INDEX);
    if fits {
        Ok(())
    } else {
        Err(EstimationError::IndexSpace { order: n, arity: d })
    }
}

/// The full table for `key`, evaluated eagerly.
pub fn materialize(key: SamplerKey, n: usize, d: usize) -> Result<OperationTable, EstimationError> {
    let count = entry_count(n, d)?;
    let stream = key.stream();
    let entries = (0..count as u64).map(|c| bounded(stream, n, c)).collect();
    Ok(OperationTable::new(n, d, entries)?)
}

/// Read access to table cells, either stored or generated on demand.
pub trait Cells {
    fn order(&self) -> usize;
    fn arity(&self) -> usize;
    fn cell(&self, flat: usize) -> u32;

    /// `f(x, ..., x)`.
    fn diagonal(&self, x: usize) -> u32 {
        let n = self.order();
        let flat = (0..self.arity()).fold(0, |acc, _| acc * n + x);
        self.cell(flat)
    }
}

impl Cells for OperationTable {
    fn order(&self) -> usize {
        OperationTable::order(self)
    }

    fn arity(&self) -> usize {
        OperationTable::arity(self)
    }

    fn cell(&self, flat: usize) -> u32 {
        self.entries()[flat]
    }
}

struct RawTable<'a> {
    order: usize,
    arity: usize,
    entries: &'a [u32],
}

impl Cells for RawTable<'_> {
    fn order(&self) -> usize {
        self.order
    }

    fn arity(&self) -> usize {
        self.arity
    }

    fn cell(&self, flat: usize) -> u32 {
        self.entries[flat]
    }
}

/// The random table for one key, with diagonals precomputed and every other
/// cell generated when first asked for.
pub struct LazyTable {
    order: usize,
    arity: usize,
    stream: u64,
    diagonal: Vec<u32>,
}

impl LazyTable {
    pub fn new(key: SamplerKey, order: usize, arity: usize) -> Result<Self, EstimationError> {
        if order == 0 {
            return Err(TableError::EmptyOrder.into());
        }
        if arity < 2 {
            return Err(TableError::BadArity(arity).into());
        }
        check_index_space(order, arity)?;
        let stream = key.stream();
        let step: usize = (0..arity).fold(0, |acc, _| acc * order + 1);
        let diagonal = (0..order).map(|x| bounded(stream, order, (x * step) as u64)).collect();
        Ok(LazyTable { order, arity, stream, diagonal })
    }
}

impl Cells for LazyTable {
    fn order(&self) -> usize {
        self.order
    }

    fn arity(&self) -> usize {
        self.arity
    }

    fn cell(&self, flat: usize) -> u32 {
        bounded(self.stream, self.order, flat as u64)
    }

    fn diagonal(&self, x: usize) -> u32 {
        self.diagonal[x]
    }
}

fn flat_of(n: usize, coords: impl IntoIterator<Item = usize>) -> usize {
    coords.into_iter().fold(0, |acc, c| acc * n + c)
}

fn signature_of<C: Cells>(cells: &C, subset: &[usize]) -> CellSignature {
    let n = cells.order();
    let mut values = Vec::with_capacity(subset.len().pow(cells.arity() as u32));
    for_each_subtable_cell(subset.len(), cells.arity(), |pos| {
        values.push(cells.cell(flat_of(n, pos.iter().map(|&p| subset[p]))));
    });
    CellSignature::from_values(subset.len(), cells.arity(), &values)
}

struct Scan<'a, C, F> {
    cells: &'a C,
    query: &'a SubsetQuery,
    limit: usize,
    chosen: Vec<usize>,
    values: Vec<u32>,
    visit: F,
}

impl<C, F> Scan<'_, C, F>
where
    C: Cells,
    F: FnMut(&[usize], &CellSignature) -> ControlFlow<()>,
{
    /// Adds the cells that involve the newest element; false once the
    /// prefix image already exceeds the limit.
    fn extend_values(&mut self) -> bool {
        let n = self.cells.order();
        let d = self.cells.arity();
        let p = self.chosen.len() - 1;
        let e = self.chosen[p];
        let mut ok = self.push_value(self.cells.diagonal(e));
        if !ok {
            return false;
        }
        if d == 2 {
            for q in 0..p {
                let x = self.chosen[q];
                if !self.push_value(self.cells.cell(x * n + e))
                    || !self.push_value(self.cells.cell(e * n + x))
                {
                    return false;
                }
            }
            return true;
        }
        let chosen = self.chosen.clone();
        for_each_subtable_cell(p + 1, d, |pos| {
            if !ok || !pos.contains(&p) || pos.iter().all(|&i| i == p) {
                return;
            }
            let v = self.cells.cell(flat_of(n, pos.iter().map(|&i| chosen[i])));
            ok = self.push_value(v);
        });
        ok
    }

    fn push_value(&mut self, v: u32) -> bool {
        if !self.values.contains(&v) {
            self.values.push(v);
        }
        self.values.len() <= self.limit
    }

    fn descend(&mut self, start: usize) -> ControlFlow<()> {
        let n = self.cells.order();
        let s = self.query.subset_size;
        let remaining = s - self.chosen.len();
        for e in start..=n - remaining {
            let mark = self.values.len();
            self.chosen.push(e);
            if self.extend_values() {
                if remaining == 1 {
                    let signature = signature_of(self.cells, &self.chosen);
                    if self.query.accepts(&signature) {
                        (self.visit)(&self.chosen, &signature)?;
                    }
                } else {
                    self.descend(e + 1)?;
                }
            }
            self.chosen.pop();
            self.values.truncate(mark);
        }
        ControlFlow::Continue(())
    }
}

/// Visits every subset qualifying under `query`, in lexicographic order,
/// until `visit` breaks. Prefixes whose image already exceeds `s + eps` are
/// pruned, since a subset's image contains the image of every subset of it.
pub fn scan_subsets<C, F>(cells: &C, query: &SubsetQuery, visit: F) -> Result<(), TableError>
where
    C: Cells,
    F: FnMut(&[usize], &CellSignature) -> ControlFlow<()>,
{
    query.validate(cells.order(), cells.arity())?;
    let limit = query.max_image();
    if limit < 1 {
        return Ok(());
    }
    let mut scan = Scan {
        cells,
        query,
        limit: limit as usize,
        chosen: Vec::with_capacity(query.subset_size),
        values: Vec::new(),
        visit,
    };
    let _ = scan.descend(0);
    Ok(())
}

pub fn count_qualifying<C: Cells>(cells: &C, query: &SubsetQuery) -> Result<u64, TableError> {
    let mut count = 0u64;
    scan_subsets(cells, query, |_, _| {
        count += 1;
        ControlFlow::Continue(())
    })?;
    Ok(count)
}

pub fn has_qualifying<C: Cells>(cells: &C, query: &SubsetQuery) -> Result<bool, TableError> {
    let mut found = false;
    scan_subsets(cells, query, |_, _| {
        found = true;
        ControlFlow::Break(())
    })?;
    Ok(found)
}

/// Whether the random table for `key` has a subset qualifying under `query`.
pub fn sample_indicator(
    n: usize,
    d: usize,
    query: &SubsetQuery,
    key: SamplerKey,
) -> Result<bool, EstimationError> {
    query.validate(n, d)?;
    let table = LazyTable::new(key, n, d)?;
    Ok(has_qualifying(&table, query)?)
}

/// Same as [`sample_indicator`] but materializes the whole table first and
/// uses the plain enumeration in [`OperationTable::deficient_subsets`].
pub fn sample_indicator_eager(
    n: usize,
    d: usize,
    query: &SubsetQuery,
    key: SamplerKey,
) -> Result<bool, EstimationError> {
    let table = materialize(key, n, d)?;
    Ok(!table.deficient_subsets(query)?.is_empty())
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EstimateRecord {
    pub n: usize,
    pub d: usize,
    pub s: usize,
    pub eps: i64,
    #[serde(rename = "type", skip_serializing_if = "Option::is_none")]
    pub type_filter: Option<DeficiencyType>,
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub exclude_t0: bool,
    pub samples: u64,
    pub seed: u64,
    pub hits: u64,
    pub p_hat: f64,
    pub stderr: f64,
    pub ci95: [f64; 2],
}

impl EstimateRecord {
    pub fn new(n: usize, d: usize, query: &SubsetQuery, samples: u64, seed: u64, hits: u64) -> Self {
        let p_hat = hits as f64 / samples as f64;
        let stderr = (p_hat * (1.0 - p_hat) / samples as f64).sqrt();
        EstimateRecord {
            n,
            d,
            s: query.subset_size,
            eps: query.max_exceedance,
            type_filter: query.type_filter,
            exclude_t0: query.exclude_t0,
            samples,
            seed,
            hits,
            p_hat,
            stderr,
            ci95: [p_hat - 1.96 * stderr, p_hat + 1.96 * stderr],
        }
    }
}

pub fn mc_probability(
    n: usize,
    d: usize,
    query: &SubsetQuery,
    samples: u64,
    seed: u64,
) -> Result<EstimateRecord, EstimationError> {
    if samples == 0 {
        return Err(EstimationError::NoSamples);
    }
    query.validate(n, d)?;
    check_index_space(n, d)?;
    let hits = (0..samples)
        .into_par_iter()
        .map(|i| sample_indicator(n, d, query, SamplerKey::new(seed, i)).map(u64::from))
        .try_reduce(|| 0, |a, b| Ok(a + b))?;
    Ok(EstimateRecord::new(n, d, query, samples, seed, hits))
}

/// Sample mean and variance of the qualifying-subset count.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MeanEstimate {
    pub n: usize,
    pub d: usize,
    pub samples: u64,
    pub seed: u64,
    pub total: u64,
    pub mean: f64,
    pub variance: f64,
    pub expected: f64,
}

impl MeanEstimate {
    /// Standard error of the mean, falling back on the Poisson variance
    /// `expected` when the sample variance is smaller.
    pub fn stderr(&self) -> f64 {
        (self.variance.max(self.expected) / self.samples as f64).sqrt()
    }
}

pub fn mc_mean_count(
    n: usize,
    d: usize,
    query: &SubsetQuery,
    samples: u64,
    seed: u64,
) -> Result<MeanEstimate, EstimationError> {
    if samples == 0 {
        return Err(EstimationError::NoSamples);
    }
    query.validate(n, d)?;
    let (total, squares) = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<(u64, u64), EstimationError> {
            let table = LazyTable::new(SamplerKey::new(seed, i), n, d)?;
            let c = count_qualifying(&table, query)?;
            Ok((c, c * c))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;
    let mean = total as f64 / samples as f64;
    let variance = if samples > 1 {
        (squares as f64 - samples as f64 * mean * mean) / (samples - 1) as f64
    } else {
        0.0
    };
    let (lambda, _) = query_theory(n, d, query)?;
    Ok(MeanEstimate { n, d, samples, seed, total, mean, variance, expected: lambda.to_f64() })
}

/// Exact results over all `n^(n^d)` tables.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExactResult {
    pub n: usize,
    pub d: usize,
    pub s: usize,
    pub eps: i64,
    pub tables: u64,
    pub qualifying_tables: u64,
    pub probability: Rate,
    pub probability_real: f64,
    pub total_count: u64,
    pub mean_count: Rate,
    pub mean_count_real: f64,
    /// `count_histogram[m]` tables have exactly `m` qualifying subsets.
    pub count_histogram: Vec<u64>,
}

/// Enumerates every table of order `n` and arity `d`. Without `force`, the
/// table count must stay below 2^32.
pub fn exact_probability(
    n: usize,
    d: usize,
    query: &SubsetQuery,
    force: bool,
) -> Result<ExactResult, EstimationError> {
    query.validate(n, d)?;
    let cells = entry_count(n, d)?;
    let tables =
        (n as u64).checked_pow(cells as u32).ok_or(EstimationError::Infeasible { order: n, arity: d })?;
    if tables >= 1 << 32 && !force {
        return Err(EstimationError::GuardExceeded { order: n, arity: d });
    }
    if tables > 1 << 40 {
        return Err(EstimationError::Infeasible { order: n, arity: d });
    }

    const CHUNK: u64 = 1 << 14;
    let chunks = tables.div_ceil(CHUNK);
    let histogram = (0..chunks)
        .into_par_iter()
        .map(|chunk| -> Result<Vec<u64>, EstimationError> {
            let start = chunk * CHUNK;
            let end = (start + CHUNK).min(tables);
            // digits of `start` in base n; the last cell varies fastest
            let mut entries = vec![0u32; cells];
            let mut rest = start;
            for e in entries.iter_mut().rev() {
                *e = (rest % n as u64) as u32;
                rest /= n as u64;
            }
            let mut hist = Vec::new();
            for _ in start..end {
                let table = RawTable { order: n, arity: d, entries: &entries };
                let count = count_qualifying(&table, query)? as usize;
                if hist.len() <= count {
                    hist.resize(count + 1, 0);
                }
                hist[count] += 1;
                for e in entries.iter_mut().rev() {
                    *e += 1;
                    if (*e as usize) < n {
                        break;
                    }
                    *e = 0;
                }
            }
            Ok(hist)
        })
        .try_reduce(Vec::new, |a, b| Ok(add_histograms(a, b)))?;

    let qualifying_tables = tables - histogram.first().copied().unwrap_or(0);
    let total_count: u64 = histogram.iter().enumerate().map(|(m, &c)| m as u64 * c).sum();
    let probability = Rate::new(qualifying_tables, tables)?;
    let mean_count = Rate::new(total_count, tables)?;
    Ok(ExactResult {
        n,
        d,
        s: query.subset_size,
        eps: query.max_exceedance,
        tables,
        qualifying_tables,
        probability_real: probability.to_f64(),
        probability,
        total_count,
        mean_count_real: mean_count.to_f64(),
        mean_count,
        count_histogram: histogram,
    })
}

fn add_histograms(mut a: Vec<u64>, b: Vec<u64>) -> Vec<u64> {
    if a.len() < b.len() {
        a.resize(b.len(), 0);
    }
    for (x, y) in a.iter_mut().zip(b) {
        *x += y;
    }
    a
}

/// Expected qualifying count at order `n` and its large-`n` limit.
pub fn query_theory(n: usize, d: usize, query: &SubsetQuery) -> Result<(Rate, LimitRate), EstimationError> {
    let (n64, s) = (n as u64, query.subset_size as u64);
    let d32 = u32::try_from(d).map_err(|_| TableError::BadArity(d))?;
    if let Some(t) = query.type_filter {
        let limit = if t == DeficiencyType::T0 {
            LimitRate::Vanishing
        } else {
            LimitRate::Finite { rate: Rate::new(1, 2)?, conjectural: false }
        };
        return Ok((expected_type_count(n64, t), limit));
    }
    let lambda = if query.exclude_t0 {
        expected_count_excluding_constant(n64, d32, s, query.max_exceedance)?
    } else {
        expected_count(n64, d32, s, query.max_exceedance)?
    };
    Ok((lambda, limit_rate(d32, s, query.max_exceedance)?))
}

fn poisson_pmf(lambda: f64, max: usize) -> Vec<f64> {
    let mut pmf = Vec::with_capacity(max + 1);
    let mut p = (-lambda).exp();
    for m in 0..=max {
        pmf.push(p);
        p *= lambda / (m + 1) as f64;
    }
    pmf
}

/// Total variation distance between an empirical histogram and Poisson(λ).
pub fn tv_to_poisson(counts: &[u64], lambda: f64) -> f64 {
    let total: u64 = counts.iter().sum();
    let pmf = poisson_pmf(lambda, counts.len().saturating_sub(1));
    let covered: f64 = pmf.iter().sum();
    let body: f64 = counts.iter().zip(&pmf).map(|(&c, &p)| (c as f64 / total as f64 - p).abs()).sum();
    0.5 * (body + (1.0 - covered).max(0.0))
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CountHistogram {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    pub include_t0: bool,
    /// `counts[m]` samples had exactly `m` deficient pairs.
    pub counts: Vec<u64>,
    pub mean: f64,
    pub lambda_n: Rate,
    pub lambda_n_real: f64,
    pub tv_distance: f64,
}

/// Histogram of the number of deficient pairs per random groupoid, compared
/// with Poisson(λ_n). T0 pairs count only if `include_t0`.
pub fn count_distribution(
    n: usize,
    samples: u64,
    seed: u64,
    include_t0: bool,
) -> Result<CountHistogram, EstimationError> {
    if samples == 0 {
        return Err(EstimationError::NoSamples);
    }
    let mut query = SubsetQuery::deficient(2);
    query.exclude_t0 = !include_t0;
    query.validate(n, 2)?;
    let counts = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<Vec<u64>, EstimationError> {
            let table = LazyTable::new(SamplerKey::new(seed, i), n, 2)?;
            let c = count_qualifying(&table, &query)? as usize;
            let mut h = vec![0u64; c + 1];
            h[c] = 1;
            Ok(h)
        })
        .try_reduce(Vec::new, |a, b| Ok(add_histograms(a, b)))?;
    let total: u64 = counts.iter().enumerate().map(|(m, &c)| m as u64 * c).sum();
    let (lambda_n, _) = query_theory(n, 2, &query)?;
    let lambda_real = lambda_n.to_f64();
    Ok(CountHistogram {
        n,
        samples,
        seed,
        include_t0,
        mean: total as f64 / samples as f64,
        tv_distance: tv_to_poisson(&counts, lambda_real),
        counts,
        lambda_n_real: lambda_real,
        lambda_n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct IndependenceReport {
    pub n: usize,
    pub samples: u64,
    pub seed: u64,
    /// Samples containing at least one pair of type T1..T7.
    pub presence: [u64; 7],
    pub presence_rate: [f64; 7],
    /// Pearson correlations between the presence indicators.
    pub correlation: [[f64; 7]; 7],
}

#[derive(Clone, Copy, Default)]
struct CoOccurrence {
    single: [u64; 7],
    joint: [[u64; 7]; 7],
}

impl CoOccurrence {
    fn add_mask(mut self, mask: u8) -> Self {
        for t in 0..7 {
            if mask >> t & 1 == 1 {
                self.single[t] += 1;
                for u in 0..7 {
                    if mask >> u & 1 == 1 {
                        self.joint[t][u] += 1;
                    }
                }
            }
        }
        self
    }

    fn merge(mut self, other: Self) -> Self {
        for t in 0..7 {
            self.single[t] += other.single[t];
            for u in 0..7 {
                self.joint[t][u] += other.joint[t][u];
            }
        }
        self
    }
}

/// Bit `t - 1` set when the table has a pair of type `Tt`, t in 1..=7.
pub fn type_presence_mask<C: Cells>(cells: &C) -> Result<u8, TableError> {
    let query = SubsetQuery::deficient(2).excluding_t0();
    let mut mask = 0u8;
    scan_subsets(cells, &query, |_, sig| {
        if let Some(t) = sig.as_type() {
            mask |= 1 << (t.index() - 1);
        }
        if mask == 0x7f {
            ControlFlow::Break(())
        } else {
            ControlFlow::Continue(())
        }
    })?;
    Ok(mask)
}

/// Empirical correlation matrix of the events "some pair has type Tt".
/// Off-diagonal entries are 0 when either indicator is constant.
pub fn independence_check(n: usize, samples: u64, seed: u64) -> Result<IndependenceReport, EstimationError> {
    if samples == 0 {
        return Err(EstimationError::NoSamples);
    }
    SubsetQuery::deficient(2).validate(n, 2)?;
    let acc = (0..samples)
        .into_par_iter()
        .map(|i| -> Result<u8, EstimationError> {
            let table = LazyTable::new(SamplerKey::new(seed, i), n, 2)?;
            Ok(type_presence_mask(&table)?)
        })
        .try_fold(CoOccurrence::default, |acc, mask| Ok::<_, EstimationError>(acc.add_mask(mask?)))
        .try_reduce(CoOccurrence::default, |a, b| Ok(a.merge(b)))?;

    let big_n = samples as f64;
    let correlation = std::array::from_fn(|t| {
        std::array::from_fn(|u| {
            let (a, b) = (acc.single[t] as f64, acc.single[u] as f64);
            let cov = big_n * acc.joint[t][u] as f64 - a * b;
            let var = (big_n * a - a * a) * (big_n * b - b * b);
            if t == u {
                1.0
            } else if var > 0.0 {
                cov / var.sqrt()
            } else {
                0.0
            }
        })
    });
    Ok(IndependenceReport {
        n,
        samples,
        seed,
        presence: acc.single,
        presence_rate: acc.single.map(|c| c as f64 / big_n),
        correlation,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    #[serde(flatten)]
    pub record: EstimateRecord,
    pub lambda_n: Rate,
    pub lambda_n_real: f64,
    /// `1 - e^(-λ_n)`.
    pub poisson_approx: f64,
    pub limit: f64,
    pub limit_conjectural: bool,
}

impl SweepRow {
    pub const CSV_HEADER: &'static str = "n,p_hat,stderr,lambda_n,poisson_approx,limit";

    pub fn csv_line(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.record.n,
            self.record.p_hat,
            self.record.stderr,
            self.lambda_n_real,
            self.poisson_approx,
            self.limit
        )
    }
}

pub fn sweep(
    n_list: &[usize],
    d: usize,
    query: &SubsetQuery,
    samples: u64,
    seed: u64,
) -> Result<Vec<SweepRow>, EstimationError> {
    n_list
        .iter()
        .map(|&n| {
            let record = mc_probability(n, d, query, samples, seed)?;
            let (lambda_n, limit) = query_theory(n, d, query)?;
            let conjectural = matches!(limit, LimitRate::Finite { conjectural: true, .. });
            let lambda_real = lambda_n.to_f64();
            Ok(SweepRow {
                record,
                lambda_n,
                lambda_n_real: lambda_real,
                poisson_approx: -(-lambda_real).exp_m1(),
                limit: limit.limit_probability(),
                limit_conjectural: conjectural,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mix_reference_values() {
        // SplitMix64 outputs for state 0 after one and two gamma steps.
        assert_eq!(mix64(GOLDEN_GAMMA), 0xe220_a839_7b1d_cdaf);
        assert_eq!(mix64(GOLDEN_GAMMA.wrapping_mul(2)), 0x6e78_9e6a_a1b9_65f4);
    }

    #[test]
    fn cell_values_are_deterministic_and_in_range() {
        let key = SamplerKey::new(42, 7);
        for c in 0..1000 {
            let v = cell_value(key, 13, c);
            assert_eq!(v, cell_value(key, 13, c));
            assert!(v < 13);
            assert_eq!(cell_value(key, 1, c), 0);
        }
        assert_ne!(
            (0..32).map(|c| cell_value(key, 1000, c)).collect::<Vec<_>>(),
            (0..32).map(|c| cell_value(SamplerKey::new(42, 8), 1000, c)).collect::<Vec<_>>()
        );
    }

    #[test]
    fn cell_values_are_uniform() {
        let n = 10usize;
        let draws = 1_000_000u64;
        let mut freq = [0u64; 10];
        for i in 0..draws {
            let key = SamplerKey::new(3, i / 1000);
            freq[cell_value(key, n, i % 1000) as usize] += 1;
        }
        let expected = draws as f64 / n as f64;
        let sigma = (expected * (1.0 - 1.0 / n as f64)).sqrt();
        let mut chi2 = 0.0;
        for &f in &freq {
            assert!((f as f64 - expected).abs() <= 5.0 * sigma, "{freq:?}");
            chi2 += (f as f64 - expected).powi(2) / expected;
        }
        // 9 degrees of freedom; 0.9999 quantile is about 33.7
        assert!(chi2 < 33.7, "chi2 = {chi2}");
    }

    #[test]
    fn lazy_cells_match_materialized() {
        let key = SamplerKey::new(9, 1);
        let lazy = LazyTable::new(key, 7, 3).unwrap();
        let eager = materialize(key, 7, 3).unwrap();
        for flat in 0..343 {
            assert_eq!(lazy.cell(flat), eager.entries()[flat]);
        }
        for x in 0..7 {
            assert_eq!(lazy.diagonal(x), eager.get(&[x, x, x]));
        }
    }

    #[test]
    fn indicator_examples() {
        let q = SubsetQuery::deficient(2);
        for i in 0..50 {
            assert!(sample_indicator(2, 2, &q, SamplerKey::new(5, i)).unwrap());
        }
        assert!(sample_indicator(1, 2, &q, SamplerKey::new(0, 0)).is_err());
    }

    #[test]
    fn scan_matches_plain_enumeration() {
        let queries = [
            SubsetQuery::deficient(2),
            SubsetQuery::deficient(2).excluding_t0(),
            SubsetQuery::deficient(2).with_type(DeficiencyType::T6),
            SubsetQuery::deficient(3),
            SubsetQuery::deficient(3).with_max_exceedance(3),
            SubsetQuery::deficient(2).with_max_exceedance(1),
        ];
        for i in 0..300u64 {
            let n = 2 + (i % 5) as usize;
            let table = materialize(SamplerKey::new(11, i), n, 2).unwrap();
            // fold values onto a smaller range so qualifying subsets are common
            let entries = table.entries().iter().map(|v| v % 2).collect();
            let table = OperationTable::new(n, 2, entries).unwrap();
            for q in &queries {
                if q.validate(n, 2).is_err() {
                    continue;
                }
                let mut seen = Vec::new();
                scan_subsets(&table, q, |s, sig| {
                    seen.push((s.to_vec(), sig.clone()));
                    ControlFlow::Continue(())
                })
                .unwrap();
                let plain: Vec<_> = table
                    .deficient_subsets(q)
                    .unwrap()
                    .into_iter()
                    .map(|x| (x.subset, x.signature))
                    .collect();
                assert_eq!(seen, plain, "n = {n}, query = {q:?}");
            }
        }
    }

    #[test]
    fn scan_matches_plain_enumeration_ternary() {
        for i in 0..100u64 {
            let n = 2 + (i % 3) as usize;
            let table = materialize(SamplerKey::new(12, i), n, 3).unwrap();
            let entries = table.entries().iter().map(|v| v % 2).collect();
            let table = OperationTable::new(n, 3, entries).unwrap();
            for q in [SubsetQuery::deficient(2), SubsetQuery::deficient(2).with_max_exceedance(1)] {
                let lazy = count_qualifying(&table, &q).unwrap();
                assert_eq!(lazy as usize, table.deficient_subsets(&q).unwrap().len());
            }
        }
    }

    #[test]
    fn lazy_equals_eager_indicator() {
        let queries = [
            SubsetQuery::deficient(2),
            SubsetQuery::deficient(3),
            SubsetQuery::deficient(3).with_max_exceedance(2),
        ];
        for i in 0..1000u64 {
            let n = 3 + (i % 4) as usize;
            let key = SamplerKey::new(77, i);
            for q in &queries {
                assert_eq!(
                    sample_indicator(n, 2, q, key).unwrap(),
                    sample_indicator_eager(n, 2, q, key).unwrap(),
                    "n = {n}, i = {i}"
                );
            }
        }
    }

    #[test]
    fn estimate_record_fields() {
        let q = SubsetQuery::deficient(2);
        let r = mc_probability(2, 2, &q, 100, 1).unwrap();
        assert_eq!((r.hits, r.p_hat, r.stderr), (100, 1.0, 0.0));
        assert_eq!(r.ci95, [1.0, 1.0]);
        let json = serde_json::to_string(&r).unwrap();
        assert_eq!(
            json,
            r#"{"n":2,"d":2,"s":2,"eps":0,"samples":100,"seed":1,"hits":100,"p_hat":1.0,"stderr":0.0,"ci95":[1.0,1.0]}"#
        );
        assert_eq!(mc_probability(2, 2, &q, 0, 1).unwrap_err(), EstimationError::NoSamples);
    }

    #[test]
    fn exact_small_cases() {
        let q = SubsetQuery::deficient(2);
        let r = exact_probability(2, 2, &q, false).unwrap();
        assert_eq!((r.tables, r.qualifying_tables), (16, 16));
        assert_eq!(r.mean_count, Rate::integer(1));
        let r = exact_probability(2, 2, &q.clone().excluding_t0(), false).unwrap();
        assert_eq!(r.qualifying_tables, 14);
        assert_eq!(r.mean_count, Rate::new(14, 16).unwrap());
        assert_eq!(
            exact_probability(4, 2, &q, false).unwrap_err(),
            EstimationError::GuardExceeded { order: 4, arity: 2 }
        );
        // binary tables on 2 elements with d = 3: every pair has image of size <= 2
        let r = exact_probability(2, 3, &q, false).unwrap();
        assert_eq!((r.tables, r.qualifying_tables), (256, 256));
    }

    #[test]
    fn tv_distance_basics() {
        assert!(tv_to_poisson(&[1], 0.0).abs() < 1e-15);
        assert!((tv_to_poisson(&[0, 1], 0.0) - 1.0).abs() < 1e-15);
        let pmf = poisson_pmf(2.0, 30);
        let counts: Vec<u64> = pmf.iter().map(|p| (p * 1e9).round() as u64).collect();
        assert!(tv_to_poisson(&counts, 2.0) < 1e-6);
    }

    #[test]
    fn histogram_totals() {
        let h = count_distribution(2, 4000, 3, false).unwrap();
        assert_eq!(h.counts.iter().sum::<u64>(), 4000);
        assert!(h.counts.len() <= 2);
        assert!((h.mean - 14.0 / 16.0).abs() < 4.0 * (0.875f64 * 0.125 / 4000.0).sqrt());
        assert_eq!(h.lambda_n, Rate::new(7, 8).unwrap());
    }

    #[test]
    fn independence_shape() {
        let r = independence_check(20, 300, 2).unwrap();
        for t in 0..7 {
            assert_eq!(r.correlation[t][t], 1.0);
            for u in 0..7 {
                assert_eq!(r.correlation[t][u], r.correlation[u][t]);
            }
        }
    }

    #[test]
    fn sweep_small() {
        let rows = sweep(&[2], 2, &SubsetQuery::deficient(2), 50, 0).unwrap();
        assert_eq!(rows[0].record.p_hat, 1.0);
        assert_eq!(rows[0].lambda_n, Rate::integer(1));
        assert!((rows[0].poisson_approx - 0.6321205588285577).abs() < 1e-12);
        assert!((rows[0].limit - 0.9698026165776815).abs() < 1e-12);
        assert_eq!(SweepRow::CSV_HEADER, "n,p_hat,stderr,lambda_n,poisson_approx,limit");
        assert!(rows[0].csv_line().starts_with("2,1,0,1,"));
    }

    #[test]
    fn deterministic_across_thread_counts() {
        let q = SubsetQuery::deficient(2);
        let run = |threads| {
            rayon::ThreadPoolBuilder::new()
                .num_threads(threads)
                .build()
                .unwrap()
                .install(|| mc_probability(40, 2, &q, 2000, 99).unwrap())
        };
        assert_eq!(run(1), run(3));
    }
}
