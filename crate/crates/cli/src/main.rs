//! `storyframe`: run the pipeline end to end or one stage at a time, or serve
//! the project API.

use std::fmt::Display;
use std::fs;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use storyframe::blueprint::{layout_frame, Blueprint, GlyphMetrics};
use storyframe::document::{
    parse_blueprint, parse_frame, serialize_blueprint, serialize_frame, to_pretty_json, Versioned,
};
use storyframe::model::{compute_metrics, validate_frame, InvalidFrame, LayoutKind, StoryFrame};
use storyframe::pipeline::{build_frame, fetch_assets, rank, CanvasOptions, PipelineError};
use storyframe::provider::{make_provider, Provider, ProviderConfig, ProviderKind};
use storyframe::recommend::LayoutRanking;
use storyframe::render::render;
use storyframe_service::{Service, ServiceConfig};

pub const RANKING_SCHEMA_VERSION: u32 = 1;

#[derive(Parser)]
#[command(name = "storyframe", version, about = "Turn text into a storytelling infographic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build a storyframe from plain text and a story goal.
    Extract {
        text: PathBuf,
        #[arg(long)]
        goal: String,
        #[command(flatten)]
        provider: ProviderArgs,
        /// Output file (stdout when absent).
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Print the feature metrics of a storyframe.
    Metrics { storyframe: PathBuf },
    /// Rank the six layouts for a storyframe.
    Recommend {
        storyframe: PathBuf,
        /// Print the rule firings and scores instead of the ranking document.
        #[arg(long)]
        explain: bool,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Solve the blueprint for a storyframe (top-ranked layout unless --layout).
    Blueprint {
        storyframe: PathBuf,
        #[command(flatten)]
        canvas: CanvasArgs,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// Render a storyframe and blueprint to SVG.
    Render {
        storyframe: PathBuf,
        blueprint: PathBuf,
        #[command(flatten)]
        provider: ProviderArgs,
        #[arg(long, short)]
        out: Option<PathBuf>,
    },
    /// extract, recommend, blueprint and render, writing all four files.
    Pipeline {
        text: PathBuf,
        #[arg(long)]
        goal: String,
        #[command(flatten)]
        provider: ProviderArgs,
        #[command(flatten)]
        canvas: CanvasArgs,
        #[arg(long, default_value = "out")]
        out_dir: PathBuf,
    },
    /// Serve the project API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080", env = "STORYFRAME_LISTEN")]
        listen: SocketAddr,
        #[arg(long, default_value = "data", env = "STORYFRAME_DATA_DIR")]
        data_dir: PathBuf,
        #[command(flatten)]
        provider: ProviderArgs,
    },
}

#[derive(Args, Clone)]
struct ProviderArgs {
    #[arg(long, default_value = "mock")]
    provider: ProviderKind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Chat-completion endpoint for the http provider (or STORYFRAME_ENDPOINT).
    #[arg(long)]
    endpoint: Option<String>,
    /// Model name for the http provider (or STORYFRAME_MODEL).
    #[arg(long)]
    model: Option<String>,
    /// Icon service endpoint (or STORYFRAME_ICON_ENDPOINT).
    #[arg(long)]
    icon_endpoint: Option<String>,
    /// Request timeout in seconds (or STORYFRAME_TIMEOUT).
    #[arg(long)]
    timeout: Option<f64>,
}

impl ProviderArgs {
    fn config(&self) -> ProviderConfig {
        let mut c = ProviderConfig::mock(self.seed);
        if self.provider == ProviderKind::Http {
            c.kind = ProviderKind::Http;
            c.endpoint = self.endpoint.clone();
            c.model_name = self.model.clone();
            c.icon_endpoint = self.icon_endpoint.clone();
            c = c.with_env();
        }
        if let Some(t) = self.timeout {
            c.timeout_secs = t;
        }
        c
    }

    fn build(&self) -> Result<Box<dyn Provider>, Failure> {
        make_provider(&self.config()).map_err(|e| Failure::new(Code::Provider, e))
    }
}

#[derive(Args, Clone, Copy)]
struct CanvasArgs {
    #[arg(long)]
    layout: Option<LayoutKind>,
    #[arg(long)]
    width: Option<f64>,
    #[arg(long)]
    height: Option<f64>,
}

impl CanvasArgs {
    fn options(&self) -> CanvasOptions {
        CanvasOptions { width: self.width, height: self.height }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Code {
    Io = 3,
    Parse = 4,
    Validation = 5,
    Provider = 6,
    Layout = 7,
    Render = 8,
    Service = 9,
}

impl Code {
    fn name(self) -> &'static str {
        match self {
            Code::Io => "io",
            Code::Parse => "parse",
            Code::Validation => "validation",
            Code::Provider => "provider",
            Code::Layout => "layout",
            Code::Render => "render",
            Code::Service => "service",
        }
    }
}

struct Failure {
    code: Code,
    message: String,
}

impl Failure {
    fn new(code: Code, e: impl Display) -> Self {
        Failure { code, message: e.to_string() }
    }
}

impl From<PipelineError> for Failure {
    fn from(e: PipelineError) -> Self {
        let code = match &e {
            PipelineError::Provider(_) => Code::Provider,
            PipelineError::Invalid(_) => Code::Validation,
            PipelineError::Recommend(_) | PipelineError::Build(_) => Code::Layout,
            PipelineError::Render(_) => Code::Render,
        };
        Failure::new(code, e)
    }
}

impl From<InvalidFrame> for Failure {
    fn from(e: InvalidFrame) -> Self {
        let mut message = e.to_string();
        for v in &e.0 {
            message.push_str(&format!("\n  {v}"));
        }
        Failure { code: Code::Validation, message }
    }
}

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::new(Code::Io, format!("{}: {e}", path.display())))
}

fn write(path: &Path, text: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Failure::new(Code::Io, format!("{}: {e}", dir.display())))?;
    }
    fs::write(path, text).map_err(|e| Failure::new(Code::Io, format!("{}: {e}", path.display())))
}

fn emit(out: Option<&Path>, text: &str) -> Result<(), Failure> {
    match out {
        Some(p) => write(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn load_frame(path: &Path) -> Result<StoryFrame, Failure> {
    let text = read(path)?;
    let frame = parse_frame(&text).map_err(|e| Failure::new(Code::Parse, format!("{}: {e}", path.display())))?;
    let report = validate_frame(&frame);
    if !report.is_empty() {
        return Err(InvalidFrame(report).into());
    }
    Ok(frame)
}

fn load_blueprint(path: &Path) -> Result<Blueprint, Failure> {
    let text = read(path)?;
    parse_blueprint(&text).map_err(|e| Failure::new(Code::Parse, format!("{}: {e}", path.display())))
}

fn ranking_document(ranking: &LayoutRanking) -> String {
    to_pretty_json(&Versioned { schema_version: RANKING_SCHEMA_VERSION, body: ranking })
}

fn explain(ranking: &LayoutRanking) -> String {
    let mut s = String::from("firings:\n");
    for f in &ranking.firings {
        s.push_str(&format!("  {f} +{}\n", f.increment));
    }
    s.push_str("scores:\n");
    for l in &ranking.order {
        s.push_str(&format!("  {l} {}\n", ranking.scores[l]));
    }
    s
}

fn warn(warnings: &[String]) {
    for w in warnings {
        eprintln!("warning: {w}");
    }
}

/// Solves and rounds, so the blueprint on disk is exactly what gets rendered.
fn solve(frame: &StoryFrame, ranking: &LayoutRanking, canvas: CanvasArgs) -> Result<Blueprint, Failure> {
    let layout = canvas.layout.unwrap_or_else(|| ranking.top());
    let bp = layout_frame(frame, layout, canvas.options().resolve(layout), GlyphMetrics::builtin())
        .map_err(|e| Failure::new(Code::Layout, e))?;
    Ok(bp.rounded())
}

fn draw(provider: &dyn Provider, frame: &StoryFrame, bp: &Blueprint) -> Result<String, Failure> {
    let (assets, mut warnings) = fetch_assets(provider, frame);
    let out = render(frame, bp, &frame.stylization, &assets, GlyphMetrics::builtin())
        .map_err(|e| Failure::new(Code::Render, e))?;
    warnings.extend(out.warnings);
    warn(&warnings);
    Ok(out.svg)
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Extract { text, goal, provider, out } => {
            let source = read(&text)?;
            let frame = build_frame(&*provider.build()?, &source, &goal, provider.seed)?;
            emit(out.as_deref(), &serialize_frame(&frame))
        }
        Command::Metrics { storyframe } => {
            let frame = load_frame(&storyframe)?;
            let m = compute_metrics(&frame)?;
            emit(None, &to_pretty_json(&m))
        }
        Command::Recommend { storyframe, explain: why, out } => {
            let ranking = rank(&load_frame(&storyframe)?)?;
            if why {
                print!("{}", explain(&ranking));
                return match out {
                    Some(p) => write(&p, &ranking_document(&ranking)),
                    None => Ok(()),
                };
            }
            emit(out.as_deref(), &ranking_document(&ranking))
        }
        Command::Blueprint { storyframe, canvas, out } => {
            let frame = load_frame(&storyframe)?;
            let bp = solve(&frame, &rank(&frame)?, canvas)?;
            warn(&bp.warnings);
            emit(out.as_deref(), &serialize_blueprint(&bp))
        }
        Command::Render { storyframe, blueprint, provider, out } => {
            let frame = load_frame(&storyframe)?;
            let bp = load_blueprint(&blueprint)?;
            let svg = draw(&*provider.build()?, &frame, &bp)?;
            emit(out.as_deref(), &svg)
        }
        Command::Pipeline { text, goal, provider, canvas, out_dir } => {
            let source = read(&text)?;
            let p = provider.build()?;
            let frame = build_frame(&*p, &source, &goal, provider.seed)?;
            let ranking = rank(&frame)?;
            let bp = solve(&frame, &ranking, canvas)?;
            warn(&bp.warnings);
            let svg = draw(&*p, &frame, &bp)?;
            write(&out_dir.join("storyframe.json"), &serialize_frame(&frame))?;
            write(&out_dir.join("ranking.json"), &ranking_document(&ranking))?;
            write(&out_dir.join("blueprint.json"), &serialize_blueprint(&bp))?;
            write(&out_dir.join("infographic.svg"), &svg)?;
            println!("{} ({}) -> {}", bp.layout, ranking.order.iter().map(ToString::to_string).collect::<Vec<_>>().join(" > "), out_dir.display());
            Ok(())
        }
        Command::Serve { listen, data_dir, provider } => {
            let config = ServiceConfig { data_dir, provider: provider.config() };
            let service = Service::open(config).map_err(|e| Failure::new(Code::Service, e))?;
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::new(Code::Service, e))?;
            runtime.block_on(async move {
                let listener =
                    tokio::net::TcpListener::bind(listen).await.map_err(|e| Failure::new(Code::Io, format!("{listen}: {e}")))?;
                eprintln!("listening on http://{}", listener.local_addr().map_err(|e| Failure::new(Code::Io, e))?);
                storyframe_service::serve(listener, Arc::new(service)).await.map_err(|e| Failure::new(Code::Service, e))
            })
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error[{}]: {}", f.code.name(), f.message);
            ExitCode::from(f.code as u8)
        }
    }
}
