//! Thin command-line wrapper over the `strategist` library.
//!
//! Exit codes: 0 success, 2 usage/config error, 3 pipeline stage failure,
//! 4 network failure.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};

use strategist::config::RunConfig;
use strategist::evaluation::{
    collect_artifacts, error_buckets, load_manifest, run_benchmark, write_report, BenchEntry,
    BenchOptions, Engine, EvalError,
};
use strategist::llm::{
    FixtureStore, Gateway, GatewayError, HttpChatProvider, Mode, PromptExchange, SchemaName,
};
use strategist::pipeline::{
    save_artifact, ChainEntry, ChainError, ChainInput, Objective, PicoElements, Pipeline,
    PipelineError, PipelineOptions, PromptLibrary, SourceRole,
};
use strategist::query::{parse_pubmed, serialize_pubmed, FieldTag, QueryNode};
use strategist::retrieval::{eval_query, load_corpus, CorpusIndex, PubMedClient, PubMedConfig};

const EXIT_CONFIG: i32 = 2;
const EXIT_STAGE: i32 = 3;
const EXIT_NETWORK: i32 = 4;

struct CliError {
    code: i32,
    message: String,
}

impl CliError {
    fn config(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_CONFIG,
            message: message.into(),
        }
    }
}

type CliResult<T> = Result<T, CliError>;

#[derive(Parser)]
#[command(
    name = "strategist",
    about = "Compile systematic-review objectives into Boolean search strategies and benchmark their recall",
    version
)]
struct Cli {
    /// Config file (default: ./strategist.toml when present)
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build one search strategy and print the serialized query
    Strategy(StrategyArgs),
    /// Run the recall benchmark over a review manifest
    Bench(BenchArgs),
    /// Parse, print, or evaluate Boolean queries
    Query {
        #[command(subcommand)]
        command: QueryCommand,
    },
    /// Record or list LLM fixtures
    Fixtures {
        #[command(subcommand)]
        command: FixturesCommand,
    },
}

#[derive(Args)]
struct CommonLlmArgs {
    /// live | record | replay
    #[arg(long)]
    mode: Option<Mode>,
    /// Fixture directory for record/replay
    #[arg(long)]
    fixtures: Option<PathBuf>,
    /// Directory of prompt-template overrides
    #[arg(long)]
    prompts: Option<PathBuf>,
    /// Chat model name
    #[arg(long)]
    model: Option<String>,
    /// Field tag applied to query terms: tiab | mh | all | tw
    #[arg(long)]
    tag: Option<String>,
    /// Extra PICO roles to include in the query (comma-separated:
    /// comparison,outcome)
    #[arg(long, value_delimiter = ',')]
    include_roles: Vec<String>,
    /// Run the keyword-review exchange before query assembly
    #[arg(long)]
    review_query: bool,
}

#[derive(Args)]
struct StrategyArgs {
    #[command(flatten)]
    llm: CommonLlmArgs,
    /// Review title (entry: full)
    #[arg(long)]
    title: Option<String>,
    /// File with the review abstract (entry: full)
    #[arg(long)]
    abstract_file: Option<PathBuf>,
    /// File with a ready objective (entry: objective-start)
    #[arg(long)]
    objective_file: Option<PathBuf>,
    /// JSON file with ready PICO elements (entry: pico-start)
    #[arg(long)]
    pico_file: Option<PathBuf>,
    /// full | objective-start | pico-start (inferred from the inputs when
    /// omitted)
    #[arg(long)]
    entry: Option<String>,
    /// Output directory (default: config output dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run directory name (default: timestamp)
    #[arg(long)]
    run_id: Option<String>,
    /// Artifact file stem
    #[arg(long, default_value = "strategy")]
    id: String,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    llm: CommonLlmArgs,
    /// JSON-lines review manifest
    #[arg(long)]
    manifest: PathBuf,
    /// offline | pubmed
    #[arg(long, default_value = "offline")]
    engine: String,
    /// JSON-lines corpus (required for the offline engine)
    #[arg(long)]
    corpus: Option<PathBuf>,
    /// full | pico-start
    #[arg(long, default_value = "full")]
    entry: String,
    /// Apply the year-window / citation-cap / api-error inclusion rules
    #[arg(long)]
    filter_paper_criteria: bool,
    /// Do not cap retrieval at each review's publication year
    #[arg(long)]
    no_date_ceiling: bool,
    /// Worker threads
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Attach error-bucket analysis to the run output
    #[arg(long)]
    error_buckets: bool,
    /// JSON map review_id -> corrected objective, for the objective-error
    /// bucket re-run
    #[arg(long)]
    corrected_objectives: Option<PathBuf>,
    /// Output directory (default: config output dir)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Run directory name (default: timestamp)
    #[arg(long)]
    run_id: Option<String>,
}

#[derive(Subcommand)]
enum QueryCommand {
    /// Validate a query and echo its normalized serialization
    Parse(QueryInput),
    /// Show the parsed tree
    Print(QueryInput),
    /// Evaluate a query offline against a corpus file
    Eval {
        #[command(flatten)]
        input: QueryInput,
        #[arg(long)]
        corpus: PathBuf,
    },
}

#[derive(Args)]
struct QueryInput {
    /// The query text
    query: Option<String>,
    /// Read the query from a file instead
    #[arg(long, conflicts_with = "query")]
    query_file: Option<PathBuf>,
}

#[derive(Subcommand)]
enum FixturesCommand {
    /// Run one live exchange and store it as a fixture
    Record {
        /// objective | pico | concepts | keywords | query_review
        #[arg(long)]
        schema: String,
        #[arg(long)]
        system_file: PathBuf,
        #[arg(long)]
        user_file: PathBuf,
        #[arg(long)]
        model: Option<String>,
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
    /// List stored fixtures (digest and schema)
    List {
        #[arg(long)]
        fixtures: Option<PathBuf>,
    },
}

fn main() {
    let cli = Cli::parse();
    if let Err(err) = run(cli) {
        eprintln!("error: {}", err.message);
        std::process::exit(err.code);
    }
}

fn run(cli: Cli) -> CliResult<()> {
    let config =
        RunConfig::load(cli.config.as_deref()).map_err(|e| CliError::config(e.to_string()))?;
    match cli.command {
        Command::Strategy(args) => cmd_strategy(config, args),
        Command::Bench(args) => cmd_bench(config, args),
        Command::Query { command } => cmd_query(command),
        Command::Fixtures { command } => cmd_fixtures(config, command),
    }
}

// ---------------------------------------------------------------- strategy

fn cmd_strategy(config: RunConfig, args: StrategyArgs) -> CliResult<()> {
    let entry = resolve_entry(&args)?;
    let pipeline = build_pipeline(&config, &args.llm)?;
    let title = args.title.clone().unwrap_or_default();
    let abstract_text = match &args.abstract_file {
        Some(path) => read_file(path)?,
        None => String::new(),
    };

    let input = ChainInput {
        title,
        abstract_text,
        entry,
    };
    let artifact = pipeline.run_chain(&input).map_err(chain_error)?;

    let out_dir = run_dir(&config, args.out.as_deref(), args.run_id.as_deref());
    let path = save_artifact(&out_dir, &args.id, &artifact)
        .map_err(|e| CliError::config(format!("cannot write artifact: {e}")))?;
    eprintln!("artifact: {}", path.display());
    println!("{}", artifact.serialized_query);
    Ok(())
}

fn resolve_entry(args: &StrategyArgs) -> CliResult<ChainEntry> {
    let inferred = match (&args.pico_file, &args.objective_file) {
        (Some(_), _) => "pico-start",
        (None, Some(_)) => "objective-start",
        (None, None) => "full",
    };
    let entry = args.entry.as_deref().unwrap_or(inferred);
    match entry {
        "full" => {
            if args.title.as_deref().unwrap_or("").trim().is_empty() {
                return Err(CliError::config("--title is required for a full-entry run"));
            }
            Ok(ChainEntry::Full)
        }
        "objective-start" => {
            let path = args.objective_file.as_ref().ok_or_else(|| {
                CliError::config("--objective-file is required for objective-start")
            })?;
            let text = read_file(path)?;
            let objective = Objective::new(text.trim())
                .map_err(|e| CliError::config(format!("objective file: {e}")))?;
            Ok(ChainEntry::ObjectiveStart(objective))
        }
        "pico-start" => {
            let path = args
                .pico_file
                .as_ref()
                .ok_or_else(|| CliError::config("--pico-file is required for pico-start"))?;
            let text = read_file(path)?;
            let pico: PicoElements = serde_json::from_str(&text)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?;
            pico.validate()
                .map_err(|e| CliError::config(format!("pico file: {e}")))?;
            Ok(ChainEntry::PicoStart(pico))
        }
        other => Err(CliError::config(format!(
            "unknown entry `{other}` (expected full|objective-start|pico-start)"
        ))),
    }
}

// ------------------------------------------------------------------- bench

fn cmd_bench(config: RunConfig, args: BenchArgs) -> CliResult<()> {
    let records = load_manifest(&args.manifest).map_err(manifest_error)?;
    let entry = match args.entry.as_str() {
        "full" => BenchEntry::Full,
        "pico-start" | "pico_start" => BenchEntry::PicoStart,
        other => {
            return Err(CliError::config(format!(
                "unknown entry `{other}` (expected full|pico-start)"
            )))
        }
    };

    let corpus_docs;
    let index;
    let pubmed_client;
    let engine = match args.engine.as_str() {
        "offline" => {
            let corpus_path = args
                .corpus
                .as_ref()
                .ok_or_else(|| CliError::config("--corpus is required for the offline engine"))?;
            corpus_docs = load_corpus(corpus_path).map_err(|e| CliError::config(e.to_string()))?;
            index =
                CorpusIndex::build(&corpus_docs).map_err(|e| CliError::config(e.to_string()))?;
            Engine::Offline(&index)
        }
        "pubmed" => {
            corpus_docs = Vec::new();
            pubmed_client = PubMedClient::new(PubMedConfig {
                api_key: config.pubmed_api_key.clone(),
                requests_per_second: config.pubmed_rps,
                ..PubMedConfig::default()
            });
            Engine::PubMed(&pubmed_client)
        }
        other => {
            return Err(CliError::config(format!(
                "unknown engine `{other}` (expected offline|pubmed)"
            )))
        }
    };

    let pipeline = build_pipeline(&config, &args.llm)?;
    let out_dir = run_dir(&config, args.out.as_deref(), args.run_id.as_deref());
    let artifacts_dir = out_dir.join("artifacts");
    let options = BenchOptions {
        entry,
        apply_filter: args.filter_paper_criteria,
        date_ceiling: !args.no_date_ceiling,
        jobs: args.jobs,
        artifacts_dir: Some(artifacts_dir.clone()),
    };

    let report = run_benchmark(&records, &engine, &pipeline, &options);
    let json_path = write_report(&out_dir, &report)
        .map_err(|e| CliError::config(format!("cannot write report: {e}")))?;

    if args.error_buckets {
        let corrected: BTreeMap<String, String> = match &args.corrected_objectives {
            Some(path) => serde_json::from_str(&read_file(path)?)
                .map_err(|e| CliError::config(format!("{}: {e}", path.display())))?,
            None => BTreeMap::new(),
        };
        let artifacts = collect_artifacts(&records, &artifacts_dir);
        let analysis = error_buckets(
            &report.results,
            &artifacts,
            &records,
            &corpus_docs,
            |record| {
                let text = corrected.get(&record.review_id)?;
                let objective = Objective::new(text.clone()).ok()?;
                let artifact = pipeline
                    .run_chain(&ChainInput {
                        title: record.title.clone(),
                        abstract_text: record.abstract_text.clone(),
                        entry: ChainEntry::ObjectiveStart(objective),
                    })
                    .ok()?;
                match &engine {
                    Engine::Offline(index) => {
                        let retrieved = eval_query(&artifact.query, index);
                        strategist::evaluation::compute_recall(&retrieved, &record.included_pmids)
                            .ok()
                    }
                    Engine::PubMed(_) => None,
                }
            },
        );
        let mut bytes = serde_json::to_vec_pretty(&analysis).expect("analysis serializes");
        bytes.push(b'\n');
        std::fs::write(out_dir.join("error_buckets.json"), bytes)
            .map_err(|e| CliError::config(format!("cannot write error buckets: {e}")))?;
    }

    eprintln!("report: {}", json_path.display());
    print!("{}", report.summary_table());
    Ok(())
}

// ------------------------------------------------------------------- query

fn cmd_query(command: QueryCommand) -> CliResult<()> {
    match command {
        QueryCommand::Parse(input) => {
            let query = parse_query_input(&input)?;
            println!("{}", serialize_pubmed(&query));
            Ok(())
        }
        QueryCommand::Print(input) => {
            let query = parse_query_input(&input)?;
            print!("{}", render_tree(&query, 0));
            Ok(())
        }
        QueryCommand::Eval { input, corpus } => {
            let query = parse_query_input(&input)?;
            let docs = load_corpus(&corpus).map_err(|e| CliError::config(e.to_string()))?;
            let index = CorpusIndex::build(&docs).map_err(|e| CliError::config(e.to_string()))?;
            for doc_id in eval_query(&query, &index) {
                println!("{doc_id}");
            }
            Ok(())
        }
    }
}

fn parse_query_input(input: &QueryInput) -> CliResult<QueryNode> {
    let text = match (&input.query, &input.query_file) {
        (Some(text), None) => text.clone(),
        (None, Some(path)) => read_file(path)?,
        _ => return Err(CliError::config("provide a query argument or --query-file")),
    };
    // no trimming: parse errors must report offsets into the given input
    parse_pubmed(&text).map_err(|e| CliError::config(e.to_string()))
}

fn render_tree(node: &QueryNode, depth: usize) -> String {
    let pad = "  ".repeat(depth);
    match node {
        QueryNode::Term { phrase, tag } => format!("{pad}term {phrase:?} {tag}\n"),
        QueryNode::And(children) => {
            let mut out = format!("{pad}AND\n");
            children
                .iter()
                .for_each(|c| out.push_str(&render_tree(c, depth + 1)));
            out
        }
        QueryNode::Or(children) => {
            let mut out = format!("{pad}OR\n");
            children
                .iter()
                .for_each(|c| out.push_str(&render_tree(c, depth + 1)));
            out
        }
        QueryNode::Not { positive, negative } => {
            let mut out = format!("{pad}NOT\n");
            out.push_str(&render_tree(positive, depth + 1));
            out.push_str(&render_tree(negative, depth + 1));
            out
        }
    }
}

// ---------------------------------------------------------------- fixtures

fn cmd_fixtures(config: RunConfig, command: FixturesCommand) -> CliResult<()> {
    match command {
        FixturesCommand::Record {
            schema,
            system_file,
            user_file,
            model,
            fixtures,
        } => {
            let schema = SchemaName::from_name(&schema)
                .ok_or_else(|| CliError::config(format!("unknown schema `{schema}`")))?;
            let system = read_file(&system_file)?;
            let user = read_file(&user_file)?;
            let model = model.unwrap_or_else(|| config.llm_model.clone());
            let store = FixtureStore::new(fixtures.unwrap_or_else(|| config.fixtures_dir.clone()));
            let provider = Arc::new(HttpChatProvider::new(
                config.llm_base_url.clone(),
                config.llm_api_key.clone(),
            ));
            let gateway =
                Gateway::record(provider, store, model).with_max_attempts(config.max_attempts);
            let exchange = PromptExchange::new(system, user, schema)
                .map_err(|e| CliError::config(e.to_string()))?;
            let digest = gateway.digest_of(&exchange);
            gateway
                .complete_structured(&exchange)
                .map_err(gateway_error)?;
            println!("{digest}");
            Ok(())
        }
        FixturesCommand::List { fixtures } => {
            let store = FixtureStore::new(fixtures.unwrap_or_else(|| config.fixtures_dir.clone()));
            let entries = store
                .list()
                .map_err(|e| CliError::config(format!("cannot list fixtures: {e}")))?;
            for (digest, schema) in entries {
                println!("{digest}  {schema}");
            }
            Ok(())
        }
    }
}

// ----------------------------------------------------------------- helpers

fn build_pipeline(config: &RunConfig, args: &CommonLlmArgs) -> CliResult<Pipeline> {
    let mode = args.mode.unwrap_or(config.mode);
    let model = args
        .model
        .clone()
        .unwrap_or_else(|| config.llm_model.clone());
    let fixtures_dir = args
        .fixtures
        .clone()
        .unwrap_or_else(|| config.fixtures_dir.clone());

    let gateway = match mode {
        Mode::Replay => {
            if !fixtures_dir.is_dir() {
                return Err(CliError::config(format!(
                    "replay mode requires a fixtures directory; {} does not exist",
                    fixtures_dir.display()
                )));
            }
            Gateway::replay(FixtureStore::new(fixtures_dir), model)
        }
        Mode::Live => Gateway::live(
            Arc::new(HttpChatProvider::new(
                config.llm_base_url.clone(),
                config.llm_api_key.clone(),
            )),
            model,
        ),
        Mode::Record => Gateway::record(
            Arc::new(HttpChatProvider::new(
                config.llm_base_url.clone(),
                config.llm_api_key.clone(),
            )),
            FixtureStore::new(fixtures_dir),
            model,
        ),
    }
    .with_max_attempts(config.max_attempts);

    let prompts = match args.prompts.clone().or_else(|| config.prompts_dir.clone()) {
        Some(dir) => PromptLibrary::from_dir(&dir)
            .map_err(|e| CliError::config(format!("prompt templates: {e}")))?,
        None => PromptLibrary::builtin(),
    };

    let default_tag = match &args.tag {
        Some(tag) => tag
            .parse::<FieldTag>()
            .map_err(|e| CliError::config(e.to_string()))?,
        None => config.default_tag,
    };
    let mut options = PipelineOptions {
        default_tag,
        review_query: args.review_query,
        ..PipelineOptions::default()
    };
    for role in &args.include_roles {
        let role: SourceRole = role.parse().map_err(|e: String| CliError::config(e))?;
        if !options.included_roles.contains(&role) {
            options.included_roles.push(role);
        }
    }

    Ok(Pipeline::new(gateway, prompts, options))
}

fn run_dir(config: &RunConfig, out: Option<&Path>, run_id: Option<&str>) -> PathBuf {
    let base = out
        .map(Path::to_path_buf)
        .unwrap_or_else(|| config.output_dir.clone());
    let run_id = run_id.map(str::to_string).unwrap_or_else(|| {
        format!(
            "{}-{}",
            chrono::Utc::now().format("%Y%m%dT%H%M%SZ"),
            std::process::id()
        )
    });
    base.join(run_id)
}

fn read_file(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::config(format!("{}: {e}", path.display())))
}

fn chain_error(err: ChainError) -> CliError {
    // missing fixtures are a configuration problem, not a stage failure
    if let PipelineError::Gateway(gateway_err) = &err.error.source {
        match gateway_err {
            GatewayError::MissingFixture { .. } => {
                return CliError {
                    code: EXIT_CONFIG,
                    message: err.error.to_string(),
                }
            }
            GatewayError::Http { .. } | GatewayError::Transport(_) => {
                return CliError {
                    code: EXIT_NETWORK,
                    message: err.error.to_string(),
                }
            }
            _ => {}
        }
    }
    CliError {
        code: EXIT_STAGE,
        message: err.error.to_string(),
    }
}

fn gateway_error(err: GatewayError) -> CliError {
    let code = match &err {
        GatewayError::Http { .. } | GatewayError::Transport(_) => EXIT_NETWORK,
        GatewayError::SchemaInvalid { .. } => EXIT_STAGE,
        _ => EXIT_CONFIG,
    };
    CliError {
        code,
        message: err.to_string(),
    }
}

fn manifest_error(err: EvalError) -> CliError {
    CliError::config(err.to_string())
}
