use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{anyhow, bail, Context};
use clap::{Parser, Subcommand};

use pgarc::bounds::{
    coding_upper_bound, counting_bound, griesmer_code_dr, griesmer_g, griesmer_g_r, griesmer_upper_bound, BoundQuery,
    CodingBound, SigmaEps,
};
use pgarc::code::{LinearCode, DEFAULT_SUBCODE_BUDGET};
use pgarc::constructions::{Placement, SsType};
use pgarc::error::Error;
use pgarc::geometry::{ProjectiveSpace, Subspace};
use pgarc::multiset::Multiset;
use pgarc::oracle::Oracle;
use pgarc::search::{max_arc_size, solve, verify_witness, LogLine, SearchProblem, SearchStatus, SolveOptions};
use pgarc::tables::{
    data_dir, emit_table, verify_entries_with, verify_matrix, Certification, Construction, ClaimedBound, Dataset,
    TableEntry, VerifyOptions,
};

const EXIT_USAGE: u8 = 1;
const EXIT_MISMATCH: u8 = 2;
const EXIT_BUDGET: u8 = 3;

/// Searches above this many points need `--big`.
const BIG_POINTS: usize = 127;

#[derive(Parser)]
#[command(name = "pgarc", version, about = "Arcs in finite projective spaces and the generalized Griesmer bound")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Upper bounds on m_q^(r)(K,w).
    Bounds {
        #[arg(long)]
        q: u32,
        #[arg(long = "K")]
        big_k: u32,
        #[arg(long)]
        r: u32,
        #[arg(long)]
        w: u64,
        /// Code table in the oracle format; defaults to the dataset's.
        #[arg(long)]
        oracle: Option<PathBuf>,
    },
    /// σ/ε digits of d and the Griesmer values of [g_q(k,d), k, d]_q codes.
    Decompose {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        k: u32,
        #[arg(long)]
        d: u64,
    },
    /// Weight hierarchy of the code in a matrix file.
    Hierarchy {
        #[arg(long)]
        matrix: PathBuf,
        /// Also enumerate subcodes and compare.
        #[arg(long)]
        direct: bool,
        /// Largest number of subcodes enumerated per dimension.
        #[arg(long, default_value_t = DEFAULT_SUBCODE_BUDGET)]
        budget: u128,
    },
    /// Builds a Solomon–Stiffler type such as "2[5]-[4]-[3]" or "[4]+[0]".
    Construct {
        #[arg(long = "type")]
        ty: String,
        #[arg(long)]
        q: u32,
        /// chain, spread or auto.
        #[arg(long, default_value = "auto")]
        placement: String,
        /// Subspace dimension minimized when adding points.
        #[arg(long, default_value_t = 1)]
        r: usize,
        /// Arc file to write; stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Multiset induced by projecting an arc from a center onto a screen.
    Project {
        #[arg(long)]
        arc: PathBuf,
        /// Spanning vectors as digit strings, comma separated, e.g. 1000,0100.
        #[arg(long)]
        center: String,
        #[arg(long)]
        screen: String,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Exact branch and bound for m_q^(r)(K,w).
    Search {
        #[arg(long)]
        q: u32,
        #[arg(long = "K")]
        big_k: usize,
        #[arg(long)]
        r: usize,
        #[arg(long)]
        w: u32,
        /// Require the unit points; the result is optimal among such arcs.
        #[arg(long)]
        prescribe_frame: bool,
        /// Largest point multiplicity.
        #[arg(long)]
        cap: Option<u32>,
        /// Node limit.
        #[arg(long)]
        budget: Option<u64>,
        /// Wall-clock limit in seconds.
        #[arg(long)]
        time: Option<f64>,
        /// 1 is serial and deterministic; 0 uses every core.
        #[arg(long, default_value_t = 1)]
        threads: usize,
        /// Allow spaces with more than 127 points.
        #[arg(long)]
        big: bool,
        /// Improvement log (`n nodes seconds`); stderr otherwise.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Witness arc file; stdout otherwise.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Re-checks the tabulated values and the embedded matrices.
    VerifyPaper {
        /// T1..T8, "ternary", or a matrix or lemma id.
        #[arg(long)]
        only: Option<String>,
        /// Seconds of exhaustive search per lemma row; 0 disables.
        #[arg(long, default_value_t = 5.0)]
        search_time: f64,
        #[arg(long, default_value_t = 0)]
        threads: usize,
    },
    /// The rows of one table as TSV.
    Tables {
        #[arg(long)]
        q: u32,
        #[arg(long = "K")]
        big_k: usize,
        #[arg(long)]
        r: usize,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let mut out = String::new();
    let res = run(cli.cmd, &mut out);
    print!("{out}");
    match res {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            let budget = matches!(e.downcast_ref::<Error>(), Some(Error::BudgetExceeded(_)));
            ExitCode::from(if budget { EXIT_BUDGET } else { EXIT_USAGE })
        }
    }
}

fn run(cmd: Cmd, out: &mut String) -> anyhow::Result<u8> {
    match cmd {
        Cmd::Bounds { q, big_k, r, w, oracle } => bounds(q, big_k, r, w, oracle.as_deref(), out),
        Cmd::Decompose { q, k, d } => decompose(q, k, d, out),
        Cmd::Hierarchy { matrix, direct, budget } => hierarchy(&matrix, direct, budget, out),
        Cmd::Construct { ty, q, placement, r, out: file } => construct(&ty, q, &placement, r, file.as_deref(), out),
        Cmd::Project { arc, center, screen, out: file } => project(&arc, &center, &screen, file.as_deref(), out),
        Cmd::Search { q, big_k, r, w, prescribe_frame, cap, budget, time, threads, big, log, out: file } => {
            let opts = SolveOptions {
                point_cap: cap,
                node_limit: budget,
                time_limit: time.map(Duration::from_secs_f64),
                threads,
                warm_start: None,
            };
            search(q, big_k, r, w, prescribe_frame, big, opts, log.as_deref(), file.as_deref(), out)
        }
        Cmd::VerifyPaper { only, search_time, threads } => verify_paper(only.as_deref(), search_time, threads, out),
        Cmd::Tables { q, big_k, r } => {
            out.push_str(&emit_table(&Dataset::default_set()?, q, big_k, r)?);
            Ok(0)
        }
    }
}

fn load_oracle(path: Option<&Path>) -> anyhow::Result<Oracle> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(Oracle::parse(&text).with_context(|| format!("parsing {}", p.display()))?)
        }
        None => {
            let p = data_dir().join("oracle.txt");
            if p.exists() {
                load_oracle(Some(&p))
            } else {
                Ok(Oracle::builtin())
            }
        }
    }
}

fn bounds(q: u32, big_k: u32, r: u32, w: u64, oracle: Option<&Path>, out: &mut String) -> anyhow::Result<u8> {
    let query = BoundQuery::new(q, big_k, r, w)?;
    let oracle = load_oracle(oracle)?;
    let g = griesmer_upper_bound(&query)?;
    let (k, gr) = (big_k + 1, big_k - r);
    writeln!(out, "query {query}")?;
    writeln!(out, "griesmer {g}")?;
    writeln!(out, "  g_{q}^({gr})({k},{}) = {} <= {g}", g - w, griesmer_g_r(q, k, gr, g - w))?;
    writeln!(out, "  g_{q}^({gr})({k},{}) = {} > {}", g + 1 - w, griesmer_g_r(q, k, gr, g + 1 - w), g + 1)?;
    let cnt = counting_bound(&query);
    writeln!(out, "counting {cnt}")?;
    let coding = coding_upper_bound(&query, &oracle)?;
    let chain: Vec<String> = coding.chain().iter().map(u64::to_string).collect();
    match &coding {
        CodingBound::Known { value, .. } => writeln!(out, "coding {value}")?,
        CodingBound::Unknown { missing: (mq, n, mk), .. } => {
            writeln!(out, "coding unknown (no oracle entry for [{n},{mk}]_{mq})")?
        }
    }
    if !chain.is_empty() {
        writeln!(out, "  chain {}", chain.join(" -> "))?;
    }
    let mut best = (g, "griesmer");
    if let Some(c) = coding.value().filter(|&c| c < best.0) {
        best = (c, "coding");
    }
    if cnt < best.0 {
        best = (cnt, "counting");
    }
    writeln!(out, "best {} {}", best.0, best.1)?;
    Ok(0)
}

fn decompose(q: u32, k: u32, d: u64, out: &mut String) -> anyhow::Result<u8> {
    let se = SigmaEps::decompose(q, k, d)?;
    writeln!(out, "sigma {}", se.sigma)?;
    for (i, e) in se.eps.iter().enumerate().filter(|(_, &e)| e > 0) {
        writeln!(out, "eps_{i} {e}")?;
    }
    let n = griesmer_g(q, k, d);
    writeln!(out, "g {n}")?;
    for r in 1..=k {
        let dr = griesmer_code_dr(q, k, d, r)?;
        writeln!(out, "d_{r} {dr}\tg^({r}) {}", griesmer_g_r(q, k, r, dr))?;
    }
    Ok(0)
}

fn hierarchy(path: &Path, direct: bool, budget: u128, out: &mut String) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let code = LinearCode::from_matrix_str(&text)?;
    writeln!(out, "[{},{}]_{}", code.n(), code.k(), code.q())?;
    let h = code.hierarchy_geometric()?;
    for (i, d) in h.d.iter().enumerate() {
        writeln!(out, "d_{} {d}", i + 1)?;
    }
    if direct {
        let hd = code.hierarchy_direct(budget)?;
        if hd != h {
            let d: Vec<String> = hd.d.iter().map(u64::to_string).collect();
            writeln!(out, "direct MISMATCH {}", d.join(" "))?;
            return Ok(EXIT_MISMATCH);
        }
        writeln!(out, "direct agrees")?;
    }
    Ok(0)
}

fn profile_lines(ms: &Multiset) -> anyhow::Result<String> {
    let p = ms.arc_profile()?;
    let join = |v: &[u64]| v.iter().map(u64::to_string).collect::<Vec<_>>().join(" ");
    Ok(format!("# n {}\n# w {}\n# u {}\n", ms.cardinality(), join(&p.w), join(&p.u)))
}

fn write_arc(ms: &Multiset, file: Option<&Path>, out: &mut String) -> anyhow::Result<()> {
    match file {
        Some(f) => std::fs::write(f, ms.to_arc_string()).with_context(|| format!("writing {}", f.display()))?,
        None => out.push_str(&ms.to_arc_string()),
    }
    Ok(())
}

fn construct(ty: &str, q: u32, placement: &str, r: usize, file: Option<&Path>, out: &mut String) -> anyhow::Result<u8> {
    let t: SsType = ty.parse()?;
    let placement: Placement = placement.parse()?;
    let space = ProjectiveSpace::shared(q, t.dim)?;
    let ms = t.build(&space, placement, r)?;
    write_arc(&ms, file, out)?;
    writeln!(out, "# type {t} in PG({},{q})", t.dim)?;
    out.push_str(&profile_lines(&ms)?);
    Ok(0)
}

fn parse_span(space: &ProjectiveSpace, text: &str) -> anyhow::Result<Subspace> {
    let vecs: Vec<Vec<u8>> = text
        .split([',', ';'])
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.chars()
                .map(|c| c.to_digit(10).map(|x| space.field().reduce(x as i64)).ok_or_else(|| anyhow!("bad digit {c:?} in {s:?}")))
                .collect()
        })
        .collect::<anyhow::Result<_>>()?;
    if vecs.is_empty() {
        bail!("empty subspace {text:?}");
    }
    let refs: Vec<&[u8]> = vecs.iter().map(Vec::as_slice).collect();
    Ok(space.span(&refs)?)
}

fn project(arc: &Path, center: &str, screen: &str, file: Option<&Path>, out: &mut String) -> anyhow::Result<u8> {
    let text = std::fs::read_to_string(arc).with_context(|| format!("reading {}", arc.display()))?;
    let ms = Multiset::from_arc_str(&text)?;
    let space = Arc::clone(ms.space());
    let delta = parse_span(&space, center)?;
    let pi = parse_span(&space, screen)?;
    let t = ms.subspace_multiplicity(&delta);
    let img = ms.induced_projection(&delta, &pi)?;
    write_arc(&img, file, out)?;
    writeln!(out, "# center multiplicity t {t}")?;
    out.push_str(&profile_lines(&img)?);
    Ok(0)
}

fn warm_start(q: u32, big_k: usize, r: usize, w: u32, cap: Option<u32>) -> Option<Multiset> {
    let ds = Dataset::default_set().ok()?;
    let e = ds.entry(q, big_k, r, w)?;
    if ds.rests_on_missing(e) {
        return None;
    }
    let ms = ds.build(e, &mut Default::default()).ok()?;
    let fits = cap.map_or(true, |c| ms.max_multiplicity() <= c);
    (fits && verify_witness(&ms, r, w as u64).unwrap_or(false)).then_some(ms)
}

#[allow(clippy::too_many_arguments)]
fn search(
    q: u32,
    big_k: usize,
    r: usize,
    w: u32,
    frame: bool,
    big: bool,
    mut opts: SolveOptions,
    log: Option<&Path>,
    file: Option<&Path>,
    out: &mut String,
) -> anyhow::Result<u8> {
    let points = pgarc::geometry::gaussian_v(big_k as u32 + 1, q as u64) as usize;
    if points > BIG_POINTS && !big {
        bail!("PG({big_k},{q}) has {points} points; pass --big to search it anyway");
    }
    let (best_n, witness, status, nodes, lines, by_dim) = if frame {
        let space = ProjectiveSpace::shared(q, big_k)?;
        let mut p = SearchProblem::new(space, r, w);
        p.point_cap = opts.point_cap.unwrap_or(w).min(w);
        p.node_limit = opts.node_limit;
        p.time_limit = opts.time_limit;
        p.threads = opts.threads;
        let p = p.prescribe_unit_frame()?;
        let res = max_arc_size(&p)?;
        let wit = res.witness.ok_or_else(|| anyhow!("no arc contains the unit points"))?;
        (res.best_n, wit, res.status, res.nodes, res.log, None)
    } else {
        opts.warm_start = warm_start(q, big_k, r, w, opts.point_cap);
        let res = solve(q, big_k, r, w, &opts)?;
        (res.best_n, res.witness, res.status, res.nodes, res.log, Some(res.by_dim))
    };
    let verified = verify_witness(&witness, r, w as u64)? && witness.cardinality() == best_n;
    writeln!(out, "query m_{q}^({r})({big_k},{w})")?;
    let status_word = match status {
        SearchStatus::Optimal => "optimal",
        SearchStatus::FeasibleOnly => "feasible-only",
    };
    writeln!(out, "{status_word} {best_n}")?;
    if frame {
        writeln!(out, "prescription unit points (optimal among arcs containing them)")?;
    }
    if let Some(by_dim) = by_dim {
        let parts: Vec<String> = by_dim
            .iter()
            .map(|(j, v, s)| format!("{j}:{v}{}", if *s == SearchStatus::Optimal { "" } else { "+" }))
            .collect();
        writeln!(out, "by-dimension {}", parts.join(" "))?;
    }
    writeln!(out, "nodes {nodes}")?;
    writeln!(out, "witness {}", if verified { "verified" } else { "FAILED" })?;
    write_arc(&witness, file, out)?;
    let log_text: String = lines.iter().map(|l: &LogLine| format!("{l}\n")).collect();
    match log {
        Some(p) => std::fs::write(p, log_text).with_context(|| format!("writing {}", p.display()))?,
        None => eprint!("{log_text}"),
    }
    Ok(match (verified, status) {
        (false, _) => EXIT_MISMATCH,
        (true, SearchStatus::FeasibleOnly) => EXIT_BUDGET,
        (true, SearchStatus::Optimal) => 0,
    })
}

/// Rows and matrix ids selected by `--only`.
fn select<'a>(ds: &'a Dataset, only: Option<&str>) -> anyhow::Result<(Vec<&'a TableEntry>, Vec<String>)> {
    let all: Vec<&TableEntry> = ds.entries.iter().collect();
    let rows: Vec<&TableEntry> = match only {
        None => all,
        Some("ternary") => all.into_iter().filter(|e| e.q == 3).collect(),
        Some(t) if t.starts_with('T') && t[1..].parse::<u32>().is_ok() => {
            let pick: Box<dyn Fn(&TableEntry) -> bool> = match &t[1..] {
                "1" => Box::new(|e| (e.q, e.big_k, e.r) == (2, 3, 1)),
                "2" => Box::new(|e| (e.q, e.big_k, e.r) == (2, 4, 2)),
                "3" => Box::new(|e| (e.q, e.big_k, e.r) == (2, 5, 2)),
                "4" => Box::new(|e| (e.q, e.big_k, e.r) == (2, 6, 2)),
                "5" => Box::new(|e| (e.q, e.big_k, e.r) == (2, 5, 3)),
                "6" => Box::new(|e| (e.q, e.big_k, e.r) == (2, 6, 4) && e.w <= 45),
                "7" => Box::new(|e| (e.q, e.big_k, e.r) == (2, 6, 4) && e.w >= 46),
                "8" => Box::new(|e| (e.q, e.big_k, e.r) == (2, 6, 3)),
                _ => bail!("tables are T1..T8, got {t}"),
            };
            all.into_iter().filter(|e| pick(e)).collect()
        }
        Some(id) => {
            let rows: Vec<&TableEntry> = all
                .into_iter()
                .filter(|e| {
                    matches!(&e.bound_source, ClaimedBound::Lemma(l) if l == id)
                        || matches!(&e.construction, Construction::Matrix(m) if m == id)
                })
                .collect();
            if rows.is_empty() && ds.matrix(id).is_none() {
                bail!("--only takes T1..T8, ternary, or a matrix or lemma id; {id:?} matches nothing");
            }
            rows
        }
    };
    let mut ids: Vec<String> = match only {
        None => ds.matrices.iter().map(|m| m.id.clone()).collect(),
        Some("ternary") => ds.matrices.iter().filter(|m| m.code.q() == 3).map(|m| m.id.clone()).collect(),
        Some(id) if ds.matrix(id).is_some() => vec![id.to_string()],
        Some(_) => Vec::new(),
    };
    for e in &rows {
        if let Construction::Matrix(m) = &e.construction {
            if !ids.contains(m) {
                ids.push(m.clone());
            }
        }
    }
    Ok((rows, ids))
}

fn verify_paper(only: Option<&str>, search_time: f64, threads: usize, out: &mut String) -> anyhow::Result<u8> {
    let ds = Dataset::default_set()?;
    let (rows, ids) = select(&ds, only)?;
    let mut bad = 0;
    let mut known = 0;
    for id in &ids {
        let rep = verify_matrix(ds.matrix(id).expect("selected ids exist"));
        if rep.unexplained() {
            bad += 1;
        } else if !rep.ok() {
            known += 1;
        }
        writeln!(out, "{rep}")?;
    }
    let opts = VerifyOptions { lemma_search: (search_time > 0.0).then(|| Duration::from_secs_f64(search_time)), threads };
    let reports = verify_entries_with(&ds, &rows, &opts);
    let mut counts: Vec<(Certification, usize)> = Vec::new();
    for rep in &reports {
        writeln!(out, "{rep}")?;
        if rep.unexplained() {
            bad += 1;
        } else if rep.certification == Certification::Mismatch {
            known += 1;
        }
        match counts.iter_mut().find(|(c, _)| *c == rep.certification) {
            Some((_, n)) => *n += 1,
            None => counts.push((rep.certification, 1)),
        }
    }
    counts.sort();
    let parts: Vec<String> = counts.iter().map(|(c, n)| format!("{n} {c}")).collect();
    writeln!(out, "summary: {} matrices, {} rows ({}); {known} known issues, {bad} unexplained mismatches", ids.len(), reports.len(), parts.join(", "))?;
    Ok(if bad > 0 { EXIT_MISMATCH } else { 0 })
}
