use std::fs;
use std::io::{self, Write};
use std::net::{Ipv4Addr, TcpListener};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand};
use url::Url;

use ontosearch::crawler::{crawl, CrawlConfig, HttpFetcher};
use ontosearch::eval::{compare, load_qrels, load_queries, search};
use ontosearch::expansion::{Scripted, Selection};
use ontosearch::index::{load_corpus_dir, TfIdfIndex};
use ontosearch::kcore::{kcores_to_tsv, mine_kcores, save_kcores, MinerConfig};
use ontosearch::text::StopwordList;
use ontosearch_server::{ServiceConfig, ServiceState, StorePaths, DEFAULT_PORT, DEFAULT_TOP_N};

mod interactive;

use interactive::Interactive;

#[derive(Parser)]
#[command(name = "ontosearch", version, about = "Ontology-driven query refinement over a local corpus")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Crawl breadth-first from seed urls into a corpus directory.
    Crawl(CrawlArgs),
    /// Build and save the tf-idf index of a corpus directory.
    Index(IndexArgs),
    /// Mine k-cores from a saved index.
    Mine(MineArgs),
    /// Refine one query and print ranked results.
    Query(QueryArgs),
    /// Serve the JSON API over the given stores.
    Serve(ServeArgs),
    /// Compare keyword and expanded retrieval over a query set.
    Eval(EvalArgs),
}

#[derive(Args)]
struct CrawlArgs {
    /// Seed urls, comma separated or repeated.
    #[arg(long, required = true, num_args = 1.., value_delimiter = ',')]
    seeds: Vec<Url>,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 100)]
    max_pages: usize,
    /// Only follow links to the host of the linking page.
    #[arg(long)]
    same_host: bool,
    /// Minimum spacing between requests to one host.
    #[arg(long, default_value_t = 500)]
    delay_ms: u64,
}

#[derive(Args)]
struct IndexArgs {
    #[arg(long)]
    corpus: PathBuf,
    #[arg(long)]
    stopwords: PathBuf,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct MineArgs {
    #[arg(long)]
    index: PathBuf,
    /// Terms per core.
    #[arg(long, default_value_t = 4)]
    k: usize,
    /// Candidate pool size.
    #[arg(long, default_value_t = 50)]
    m: usize,
    /// Number of cores to keep.
    #[arg(long, default_value_t = 10)]
    q: usize,
    #[arg(long, default_value_t = 0.5)]
    lambda: f64,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct StoreArgs {
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    kcores: PathBuf,
    #[arg(long)]
    ontology: PathBuf,
    #[arg(long)]
    thesaurus: PathBuf,
    /// Stopword file used to parse queries (built-in English list if absent).
    #[arg(long)]
    stopwords: Option<PathBuf>,
    /// Milestone factor, overriding the ontology file.
    #[arg(long)]
    factor: Option<f64>,
}

impl StoreArgs {
    fn load(&self, port: u16, top_n: usize) -> Result<ServiceState> {
        let paths = StorePaths {
            index: self.index.clone(),
            kcores: self.kcores.clone(),
            ontology: self.ontology.clone(),
            thesaurus: self.thesaurus.clone(),
            stopwords: self.stopwords.clone(),
        };
        let config = ServiceConfig {
            port,
            top_n,
            factor: self.factor,
        };
        Ok(ServiceState::load(&paths, config)?)
    }
}

#[derive(Args)]
struct QueryArgs {
    #[command(flatten)]
    stores: StoreArgs,
    /// The raw query text.
    raw: String,
    /// List the candidates and read the selection from standard input.
    #[arg(long, conflicts_with_all = ["concept", "sense"])]
    interactive: bool,
    #[arg(long)]
    concept: Option<String>,
    #[arg(long)]
    sense: Option<String>,
    /// Print the enriched query and relation diagnostics.
    #[arg(long)]
    explain: bool,
    #[arg(long, default_value_t = DEFAULT_TOP_N, value_parser = positive())]
    n: usize,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = DEFAULT_PORT)]
    port: u16,
    #[command(flatten)]
    stores: StoreArgs,
    /// Results per search when a request has no `n`.
    #[arg(long, default_value_t = DEFAULT_TOP_N, value_parser = positive())]
    n: usize,
}

#[derive(Args)]
struct EvalArgs {
    #[command(flatten)]
    stores: StoreArgs,
    #[arg(long)]
    queries: PathBuf,
    #[arg(long)]
    qrels: PathBuf,
    /// Report TSV; the text table goes next to it with a `.table.txt` suffix.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = DEFAULT_TOP_N, value_parser = positive())]
    n: usize,
}

fn positive() -> clap::builder::RangedU64ValueParser<usize> {
    clap::builder::RangedU64ValueParser::new().range(1..)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Crawl(a) => run_crawl(a),
        Command::Index(a) => run_index(a),
        Command::Mine(a) => run_mine(a),
        Command::Query(a) => run_query(a),
        Command::Serve(a) => run_serve(a),
        Command::Eval(a) => run_eval(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run_crawl(a: CrawlArgs) -> Result<()> {
    let n_seeds = a.seeds.len();
    let config = CrawlConfig {
        max_pages: a.max_pages,
        same_host_only: a.same_host,
        delay_ms: a.delay_ms,
        ..CrawlConfig::new(a.seeds)
    };
    let fetcher = HttpFetcher::new(Duration::from_millis(config.timeout_ms));
    let outcome = crawl(&config, &fetcher)?;
    for note in &outcome.notes {
        eprintln!("warning: {note}");
    }
    if outcome.pages.is_empty() {
        bail!("no page could be fetched from {n_seeds} seed(s)");
    }
    outcome
        .write_corpus(&a.out)
        .with_context(|| format!("writing {}", a.out.display()))?;
    let crawled = outcome.table.records().iter().filter(|r| r.is_crawled).count();
    println!(
        "crawl: pages={} records={} crawled={} failed={} out={}",
        outcome.pages.len(),
        outcome.table.len(),
        crawled,
        outcome.notes.len(),
        a.out.display()
    );
    Ok(())
}

fn run_index(a: IndexArgs) -> Result<()> {
    let stopwords =
        StopwordList::from_file(&a.stopwords).with_context(|| format!("stopwords {}", a.stopwords.display()))?;
    let docs = load_corpus_dir(&a.corpus).with_context(|| format!("corpus {}", a.corpus.display()))?;
    let index = TfIdfIndex::build(&docs, &stopwords).with_context(|| format!("corpus {}", a.corpus.display()))?;
    index.save(&a.out).with_context(|| format!("writing {}", a.out.display()))?;
    println!(
        "index: docs={} vocab={} out={}",
        index.n_docs(),
        index.vocab_len(),
        a.out.display()
    );
    Ok(())
}

fn run_mine(a: MineArgs) -> Result<()> {
    let index = TfIdfIndex::load(&a.index).with_context(|| format!("index {}", a.index.display()))?;
    let config = MinerConfig {
        k: a.k,
        pool_size: a.m,
        cores: a.q,
        lambda: a.lambda,
    };
    let cores = mine_kcores(&index, &config)?;
    save_kcores(&cores, &a.out).with_context(|| format!("writing {}", a.out.display()))?;
    print!("{}", kcores_to_tsv(&cores));
    println!("mine: cores={} k={} pool={} out={}", cores.len(), a.k, a.m, a.out.display());
    Ok(())
}

fn run_query(a: QueryArgs) -> Result<()> {
    let state = a.stores.load(DEFAULT_PORT, a.n)?;
    let pipeline = state.pipeline();
    let query = pipeline.parse_query(&a.raw)?;
    let refinement = if a.interactive {
        let stdin = io::stdin();
        let mut selector = Interactive::new(stdin.lock(), io::stdout());
        pipeline.refine(&query, &mut selector)?
    } else {
        let selection = Selection {
            concept: a.concept,
            sense: a.sense,
        };
        pipeline.refine(&query, &mut Scripted(selection))?
    };
    for note in &refinement.notes {
        eprintln!("warning: {note}");
    }
    let enriched = &refinement.enriched;
    if a.explain {
        print!("{}", enriched.to_text());
        for d in pipeline.relation_diagnostics(&refinement.candidates.concepts) {
            println!(
                "relation {} {} {} {:.6}",
                d.concept_id, d.first, d.second, d.similarity
            );
        }
    }
    let results = search(&state.index, enriched, a.n)?;
    for (i, r) in results.iter().enumerate() {
        let uri = state.index.document(r.doc_id).map_or("", |d| d.source_uri.as_str());
        println!("{}\t{}\t{:.6}\t{}", i + 1, r.doc_id, r.score, uri);
    }
    println!(
        "query: terms={} expansion_terms={} concept={} sense={} results={}",
        query.terms.len(),
        enriched.expansion_terms.len(),
        enriched.chosen_concept.as_deref().unwrap_or("-"),
        enriched.chosen_sense.as_deref().unwrap_or("-"),
        results.len()
    );
    Ok(())
}

fn run_serve(a: ServeArgs) -> Result<()> {
    let state = Arc::new(a.stores.load(a.port, a.n)?);
    let listener =
        TcpListener::bind((Ipv4Addr::LOCALHOST, a.port)).with_context(|| format!("cannot listen on port {}", a.port))?;
    listener.set_nonblocking(true)?;
    let addr = listener.local_addr()?;
    let runtime = tokio::runtime::Builder::new_multi_thread().enable_all().build()?;
    runtime.block_on(async move {
        let listener = tokio::net::TcpListener::from_std(listener)?;
        let meta = state.meta();
        println!(
            "serve: listening on http://{addr} docs={} kcores={} concepts={} senses={}",
            meta.n_docs, meta.kcore_count, meta.concept_count, meta.sense_count
        );
        io::stdout().flush()?;
        ontosearch_server::serve(listener, state).await
    })?;
    Ok(())
}

fn table_path(out: &Path) -> PathBuf {
    let mut name = out.file_stem().unwrap_or_default().to_os_string();
    name.push(".table.txt");
    out.with_file_name(name)
}

fn run_eval(a: EvalArgs) -> Result<()> {
    let state = a.stores.load(DEFAULT_PORT, a.n)?;
    let queries = load_queries(&a.queries, &state.graph, &state.thesaurus)
        .with_context(|| format!("queries {}", a.queries.display()))?;
    let qrels = load_qrels(&a.qrels, &state.index).with_context(|| format!("qrels {}", a.qrels.display()))?;
    let report = compare(&state.index, &queries, &qrels, &state.pipeline(), a.n)?;
    let table = report.to_table();
    fs::write(&a.out, report.to_tsv()).with_context(|| format!("writing {}", a.out.display()))?;
    let table_out = table_path(&a.out);
    fs::write(&table_out, &table).with_context(|| format!("writing {}", table_out.display()))?;
    print!("{table}");
    println!(
        "eval: queries={} improved_levels={} report={} table={}",
        report.queries.len(),
        report.improved_levels(),
        a.out.display(),
        table_out.display()
    );
    Ok(())
}
