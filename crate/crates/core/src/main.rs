//! `deflab` command-line front end.
//!
//! Machine-readable output goes to stdout, human summaries to stderr.
//! Exit codes: 0 success, 1 a verification found violations, 2 usage or input error.

use std::error::Error;
use std::fs;
use std::io::{self, Write};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use deflab::combinatorics::{
    self, binomial, disjoint_pair_class_count, disjoint_triple_class_count, limit_probability,
    nondisjoint_class_bound, partial_ie_sum_exact, perfect_matching_count, rate_dary, rate_exceedance,
    rate_exceedance_is_conjectural, stirling2, Rate,
};
use deflab::diagrams::{
    base_graphs, config_of_table, count_diagrams, diagram_of, enumerate_diagrams, verify_lemma3,
    witness_groupoid, Diagram,
};
use deflab::estimation::{
    count_distribution, exact_probability, independence_check, mc_mean_count, mc_probability, sweep, SweepRow,
};
use deflab::table::{DeficiencyType, OperationTable, SubsetQuery};

type CliResult = Result<ExitCode, Box<dyn Error + Send + Sync>>;

#[derive(Debug, Parser)]
#[command(name = "deflab", version, about = "Deficient sets in random groupoids")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Args)]
struct Common {
    /// Seed for all randomness.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Monte Carlo sample count.
    #[arg(long, global = true, default_value_t = 10_000)]
    samples: u64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads (default: DEFLAB_THREADS, else all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Count type-T0 pairs where types are reported.
    #[arg(long, global = true)]
    include_t0: bool,
    /// Allow exhaustive enumeration beyond 2^32 tables.
    #[arg(long, global = true)]
    force: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Debug, Args)]
struct SubsetArgs {
    /// Subset size.
    #[arg(long, default_value_t = 2)]
    s: usize,
    /// Maximum exceedance (0 = deficient).
    #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
    eps: i64,
    /// Arity of the operation.
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Only pairs of this type (T0..T7).
    #[arg(long = "type")]
    kind: Option<DeficiencyType>,
    /// Ignore subsets with a constant sub-table (T0 pairs).
    #[arg(long)]
    exclude_t0: bool,
}

impl SubsetArgs {
    fn query(&self) -> SubsetQuery {
        SubsetQuery {
            subset_size: self.s,
            max_exceedance: self.eps,
            type_filter: self.kind,
            exclude_t0: self.exclude_t0,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum TheoryKind {
    Pair2,
    PerType,
    Dary,
    Exceedance,
    PartialSum,
    ExpectedCount,
    ClassCounts,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// List the qualifying subsets of a table file and the diagram of its configuration.
    Classify {
        file: String,
        #[arg(long, default_value_t = 2)]
        s: usize,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        eps: i64,
    },
    /// Closed-form rates, limits, series and class counts.
    Theory {
        #[arg(value_enum)]
        kind: TheoryKind,
        #[arg(long, default_value_t = 2)]
        d: u32,
        #[arg(long, default_value_t = 2)]
        s: u64,
        /// Number of series terms, or edge count for class-counts.
        #[arg(long = "K", visible_alias = "k", default_value_t = 40)]
        terms: u64,
        #[arg(long)]
        n: Option<u64>,
        #[arg(long, default_value_t = 0, allow_negative_numbers = true)]
        eps: i64,
    },
    /// Exact probability over all tables of order n.
    Exact {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        subset: SubsetArgs,
    },
    /// Monte Carlo estimate of the probability of a qualifying subset.
    Mc {
        #[arg(long)]
        n: usize,
        #[command(flatten)]
        subset: SubsetArgs,
        /// Estimate the mean qualifying count instead of the probability.
        #[arg(long)]
        mean: bool,
    },
    /// Monte Carlo estimates over several orders, with theory columns.
    Sweep {
        #[arg(long, value_delimiter = ',', required = true)]
        n_list: Vec<usize>,
        #[command(flatten)]
        subset: SubsetArgs,
    },
    /// Histogram of deficient-pair counts against Poisson(λ_n).
    Poisson {
        #[arg(long)]
        n: usize,
    },
    /// Correlations between the per-type presence indicators.
    Independence {
        #[arg(long)]
        n: usize,
    },
    /// Enumerate or count diagrams with k edges.
    Diagrams {
        #[arg(long)]
        k: usize,
        #[arg(long, conflicts_with = "list")]
        count: bool,
        #[arg(long)]
        list: bool,
        #[arg(long)]
        realizable_only: bool,
    },
    /// Check the α/β/γ relations over every realizable diagram with at most k-max edges.
    VerifyLemma3 {
        #[arg(long, default_value_t = 3)]
        k_max: usize,
    },
    /// Smallest table realizing a diagram given as JSON or a path to a JSON file.
    Witness {
        #[arg(long)]
        diagram: String,
    },
}

fn emit_json<T: Serialize>(out: &mut impl Write, value: &T) -> io::Result<()> {
    serde_json::to_writer(&mut *out, value)?;
    writeln!(out)
}

#[derive(Serialize)]
struct TheoryLine {
    quantity: String,
    exact: String,
    real: f64,
    conjectural: bool,
}

impl TheoryLine {
    fn rate(quantity: &str, rate: &Rate, conjectural: bool) -> Self {
        TheoryLine { quantity: quantity.into(), exact: rate.to_string(), real: rate.to_f64(), conjectural }
    }

    fn limit(rate: &Rate, conjectural: bool) -> Self {
        TheoryLine {
            quantity: "probability".into(),
            exact: format!("1 - exp(-{rate})"),
            real: limit_probability(rate),
            conjectural,
        }
    }

    fn count(quantity: &str, value: impl ToString, real: f64) -> Self {
        TheoryLine { quantity: quantity.into(), exact: value.to_string(), real, conjectural: false }
    }
}

fn big_to_f64(v: &num_bigint::BigUint) -> f64 {
    Rate::integer(num_bigint::BigInt::from(v.clone())).to_f64()
}

fn theory(
    out: &mut impl Write,
    kind: TheoryKind,
    d: u32,
    s: u64,
    terms: u64,
    n: Option<u64>,
    eps: i64,
) -> CliResult {
    let mut lines = Vec::new();
    match kind {
        TheoryKind::Pair2 | TheoryKind::PerType => {
            let rate = if kind == TheoryKind::Pair2 { Rate::new(7, 2)? } else { Rate::new(1, 2)? };
            lines.push(TheoryLine::rate("rate", &rate, false));
            lines.push(TheoryLine::limit(&rate, false));
        }
        TheoryKind::Dary => {
            let rate = rate_dary(d)?;
            let conjectural = d >= 3;
            lines.push(TheoryLine::rate("rate", &rate, conjectural));
            lines.push(TheoryLine::limit(&rate, conjectural));
        }
        TheoryKind::Exceedance => {
            let rate = rate_exceedance(s)?;
            let conjectural = rate_exceedance_is_conjectural(s);
            lines.push(TheoryLine::rate("rate", &rate, conjectural));
            lines.push(TheoryLine::limit(&rate, conjectural));
            eprintln!("P = 1 - {:.3e}", (-rate.to_f64()).exp());
        }
        TheoryKind::PartialSum => {
            let rate = rate_exceedance(s)?;
            let sum = Rate::from_ratio(partial_ie_sum_exact(&rate, terms)?)
                .map(|r| r.to_string())
                .unwrap_or_else(|_| {
                    // odd partial sums can dip below zero for large rates
                    let r = partial_ie_sum_exact(&rate, terms).expect("terms checked");
                    format!("{}/{}", r.numer(), r.denom())
                });
            lines.push(TheoryLine {
                quantity: format!("partial_sum_{terms}"),
                exact: sum,
                real: combinatorics::partial_ie_sum(&rate, terms)?,
                conjectural: rate_exceedance_is_conjectural(s),
            });
            lines.push(TheoryLine::limit(&rate, rate_exceedance_is_conjectural(s)));
            lines.push(TheoryLine::count(
                "error_bound",
                format!("({rate})^{0}/{0}!", terms + 1),
                combinatorics::partial_sum_error_bound(&rate, terms),
            ));
        }
        TheoryKind::ExpectedCount => {
            let n = n.ok_or("expected-count needs --n")?;
            let lambda = combinatorics::expected_count(n, d, s, eps)?;
            lines.push(TheoryLine::rate("expected_count", &lambda, false));
            let limit = combinatorics::limit_rate(d, s, eps)?;
            if let combinatorics::LimitRate::Finite { rate, conjectural } = &limit {
                lines.push(TheoryLine::rate("limit_rate", rate, *conjectural));
            }
            lines.push(TheoryLine {
                quantity: "limit_probability".into(),
                exact: match &limit {
                    combinatorics::LimitRate::Vanishing => "0".into(),
                    combinatorics::LimitRate::Saturating => "1".into(),
                    combinatorics::LimitRate::Finite { rate, .. } => format!("1 - exp(-{rate})"),
                },
                real: limit.limit_probability(),
                conjectural: matches!(limit, combinatorics::LimitRate::Finite { conjectural: true, .. }),
            });
        }
        TheoryKind::ClassCounts => {
            let k = terms;
            let counts = [
                ("perfect_matchings", perfect_matching_count(k)),
                ("disjoint_pair_classes", disjoint_pair_class_count(k)),
                ("class_bound", nondisjoint_class_bound(k)),
                ("disjoint_triple_classes", disjoint_triple_class_count(k)),
                ("stirling2_4_2", stirling2(4, 2)),
                ("binomial_4_2", binomial(4, 2)),
            ];
            for (name, v) in counts {
                lines.push(TheoryLine::count(name, &v, big_to_f64(&v)));
            }
            if (1..=4).contains(&(k as usize)) {
                let all = count_diagrams(k as usize, false)?;
                lines.push(TheoryLine::count("diagrams", all, all as f64));
                let realizable = count_diagrams(k as usize, true)?;
                lines.push(TheoryLine::count("realizable_diagrams", realizable, realizable as f64));
            }
        }
    }
    for line in &lines {
        emit_json(out, line)?;
        eprintln!("{}: {} = {:.10}", line.quantity, line.exact, line.real);
    }
    Ok(ExitCode::SUCCESS)
}

fn classify(out: &mut impl Write, common: &Common, path: &str, s: usize, eps: i64) -> CliResult {
    let text = fs::read_to_string(path).map_err(|e| format!("{path}: {e}"))?;
    let table = OperationTable::parse(&text).map_err(|e| format!("{path}: {e}"))?;
    let mut query = SubsetQuery::deficient(s).with_max_exceedance(eps);
    query.exclude_t0 = !common.include_t0;
    let found = table.deficient_subsets(&query)?;

    if common.format == Format::Csv {
        writeln!(out, "subset,kind,exceedance")?;
    }
    for q in &found {
        let kind = q.signature.to_string();
        let exceedance = q.signature.exceedance();
        match common.format {
            Format::Csv => {
                let subset: Vec<String> = q.subset.iter().map(|x| x.to_string()).collect();
                writeln!(out, "{},{},{}", subset.join(" "), kind, exceedance)?;
            }
            Format::Json => {
                let key = if q.deficiency_type().is_some() { "type" } else { "signature" };
                let line = serde_json::json!({ "subset": q.subset, key: kind, "exceedance": exceedance });
                emit_json(out, &line)?;
            }
        }
    }
    eprintln!("{} qualifying subset(s)", found.len());

    if s == 2 && eps == 0 && table.arity() == 2 && common.format == Format::Json {
        let config = config_of_table(&table, false)?;
        let diagram = if config.is_empty() { None } else { Some(diagram_of(&config)?) };
        let stats = diagram.as_ref().map(Diagram::stats);
        emit_json(out, &serde_json::json!({ "diagram": diagram, "stats": stats }))?;
    }
    Ok(ExitCode::SUCCESS)
}

fn run(cli: Cli) -> CliResult {
    let stdout = io::stdout();
    let mut out = stdout.lock();
    let common = &cli.common;
    match cli.command {
        Command::Classify { ref file, s, eps } => classify(&mut out, common, file, s, eps),
        Command::Theory { kind, d, s, terms, n, eps } => theory(&mut out, kind, d, s, terms, n, eps),
        Command::Exact { n, ref subset } => {
            let r = exact_probability(n, subset.d, &subset.query(), common.force)?;
            match common.format {
                Format::Json => emit_json(&mut out, &r)?,
                Format::Csv => {
                    writeln!(out, "n,d,s,eps,tables,qualifying_tables,probability,mean_count")?;
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{}",
                        r.n, r.d, r.s, r.eps, r.tables, r.qualifying_tables, r.probability, r.mean_count
                    )?;
                }
            }
            eprintln!("p = {} = {:.10}, mean count = {}", r.probability, r.probability_real, r.mean_count);
            Ok(ExitCode::SUCCESS)
        }
        Command::Mc { n, ref subset, mean } => {
            let query = subset.query();
            if mean {
                let m = mc_mean_count(n, subset.d, &query, common.samples, common.seed)?;
                emit_json(&mut out, &m)?;
                eprintln!("mean = {:.6} ± {:.6} (expected {:.6})", m.mean, m.stderr(), m.expected);
                return Ok(ExitCode::SUCCESS);
            }
            let r = mc_probability(n, subset.d, &query, common.samples, common.seed)?;
            match common.format {
                Format::Json => emit_json(&mut out, &r)?,
                Format::Csv => {
                    writeln!(out, "n,d,s,eps,samples,seed,hits,p_hat,stderr,ci_lo,ci_hi")?;
                    writeln!(
                        out,
                        "{},{},{},{},{},{},{},{},{},{},{}",
                        r.n,
                        r.d,
                        r.s,
                        r.eps,
                        r.samples,
                        r.seed,
                        r.hits,
                        r.p_hat,
                        r.stderr,
                        r.ci95[0],
                        r.ci95[1]
                    )?;
                }
            }
            eprintln!("p_hat = {:.6} ± {:.6}", r.p_hat, r.stderr);
            Ok(ExitCode::SUCCESS)
        }
        Command::Sweep { ref n_list, ref subset } => {
            let rows = sweep(n_list, subset.d, &subset.query(), common.samples, common.seed)?;
            if common.format == Format::Csv {
                writeln!(out, "{}", SweepRow::CSV_HEADER)?;
            }
            for row in &rows {
                match common.format {
                    Format::Json => emit_json(&mut out, row)?,
                    Format::Csv => writeln!(out, "{}", row.csv_line())?,
                }
                eprintln!(
                    "n = {}: p_hat = {:.4} ± {:.4}, 1-exp(-λ_n) = {:.4}, limit = {:.4}",
                    row.record.n, row.record.p_hat, row.record.stderr, row.poisson_approx, row.limit
                );
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::Poisson { n } => {
            let h = count_distribution(n, common.samples, common.seed, common.include_t0)?;
            emit_json(&mut out, &h)?;
            eprintln!("mean = {:.4}, λ_n = {:.4}, TV = {:.4}", h.mean, h.lambda_n_real, h.tv_distance);
            Ok(ExitCode::SUCCESS)
        }
        Command::Independence { n } => {
            let r = independence_check(n, common.samples, common.seed)?;
            emit_json(&mut out, &r)?;
            let max = (0..7)
                .flat_map(|t| (0..7).filter(move |&u| u != t).map(move |u| (t, u)))
                .map(|(t, u)| r.correlation[t][u].abs())
                .fold(0.0, f64::max);
            eprintln!("max |rho| off diagonal = {max:.4}");
            Ok(ExitCode::SUCCESS)
        }
        Command::Diagrams { k, list, realizable_only, .. } => {
            if list {
                for d in enumerate_diagrams(k, realizable_only)? {
                    writeln!(out, "{}", d.to_json())?;
                }
            } else {
                let count = count_diagrams(k, realizable_only)?;
                let matchings = enumerate_diagrams(k, realizable_only)?
                    .iter()
                    .filter(|d| d.is_perfect_matching())
                    .count();
                let line = serde_json::json!({
                    "k": k,
                    "count": count,
                    "base_graphs": base_graphs(k)?.len(),
                    "perfect_matchings": matchings,
                    "realizable_only": realizable_only,
                });
                emit_json(&mut out, &line)?;
                eprintln!("{count} diagrams with {k} edge(s)");
            }
            Ok(ExitCode::SUCCESS)
        }
        Command::VerifyLemma3 { k_max } => {
            let report = verify_lemma3(k_max)?;
            emit_json(&mut out, &report)?;
            for (k, checked) in &report.by_k {
                eprintln!("k = {k}: checked {checked}");
            }
            eprintln!("checked {}, violations {}", report.checked, report.violations.len());
            Ok(if report.passed() { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Witness { ref diagram } => {
            let text = if diagram.trim_start().starts_with('{') {
                diagram.clone()
            } else {
                fs::read_to_string(diagram).map_err(|e| format!("{diagram}: {e}"))?
            };
            let d = Diagram::from_json(&text)?;
            let table = witness_groupoid(&d)?;
            write!(out, "{}", table.serialize())?;
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn thread_count(flag: Option<usize>) -> Result<usize, Box<dyn Error + Send + Sync>> {
    if let Some(t) = flag {
        return Ok(t);
    }
    match std::env::var("DEFLAB_THREADS") {
        Ok(v) => Ok(v.parse().map_err(|_| format!("DEFLAB_THREADS: invalid value `{v}`"))?),
        Err(_) => Ok(0),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = thread_count(cli.common.threads).and_then(|threads| {
        let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build()?;
        pool.install(|| run(cli))
    });
    match result {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
