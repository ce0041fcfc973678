use std::fs;
use std::io::{self, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use audimath::config::EngineConfig;
use audimath::files::{read_document, EXTENSION};
use audimath::script::parse_script;
use audimath::{replay, serve, FileStore};
use audimath_core::audio::{MarkerMode, Planner};
use audimath_core::document::open_document;
use audimath_core::latex::parse_latex_with;
use audimath_core::layout::{geometry_with, LayoutOptions};
use audimath_core::speech::{render_text, serialize};
use audimath_core::{to_latex, EquationTree, SpeechKind};
use clap::{ArgGroup, Parser, ValueEnum};

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Style {
    Mathspeak,
    Intuitive,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Emit {
    Speech,
    Directives,
    Latex,
}

/// Speak, plan or convert equations, replay event scripts, or serve
/// editor sessions over NDJSON.
#[derive(Parser, Debug)]
#[command(name = "audimath", version)]
#[command(group(ArgGroup::new("mode").required(true).args(["input", "script", "serve"])))]
struct Cli {
    /// LaTeX text, or a path to a .tex/.txt file or a .smq document.
    #[arg(long = "in", value_name = "LATEX|PATH")]
    input: Option<String>,

    /// Speech style for --emit speech and directives.
    #[arg(long, value_enum, default_value = "mathspeak")]
    style: Style,

    #[arg(long, value_enum, default_value = "speech")]
    emit: Emit,

    /// Replay an event file and print one batch per line.
    #[arg(long, value_name = "EVENT_FILE")]
    script: Option<PathBuf>,

    /// Serve sessions over TCP at the --listen address.
    #[arg(long)]
    serve: bool,

    #[arg(long, env = "AUDIMATH_LISTEN", default_value = "127.0.0.1:7878")]
    listen: String,

    /// Directory for save/load paths in served and scripted sessions.
    #[arg(long, value_name = "DIR")]
    documents: Option<PathBuf>,

    /// Keyboard layout file for spatial navigation.
    #[arg(long, env = "AUDIMATH_LAYOUT")]
    layout: Option<PathBuf>,

    #[arg(long, env = "AUDIMATH_SETTINGS")]
    settings: Option<PathBuf>,

    /// Earcon override file.
    #[arg(long, env = "AUDIMATH_EARCONS")]
    earcons: Option<PathBuf>,

    /// Extra named symbols.
    #[arg(long, env = "AUDIMATH_SYMBOLS")]
    symbols: Option<PathBuf>,
}

type Failure = Box<dyn std::error::Error>;

fn read_input(arg: &str, config: &EngineConfig) -> Result<EquationTree, Failure> {
    let path = Path::new(arg);
    if path.is_file() {
        if path.extension().is_some_and(|e| e == EXTENSION) {
            return Ok(open_document(&read_document(path)?)?);
        }
        let text = fs::read_to_string(path)?;
        return Ok(parse_latex_with(text.trim(), &config.symbols)?);
    }
    Ok(parse_latex_with(arg, &config.symbols)?)
}

fn emit(cli: &Cli, config: &EngineConfig, tree: &EquationTree, out: &mut impl Write) -> Result<(), Failure> {
    let kind = match cli.style {
        Style::Mathspeak => SpeechKind::MathSpeak,
        Style::Intuitive => SpeechKind::IntuitiveSpeak,
    };
    let markers = MarkerMode::for_settings(&config.settings, true);
    match cli.emit {
        Emit::Latex => writeln!(out, "{}", to_latex(tree))?,
        Emit::Speech => {
            let tokens = serialize(tree, tree.root(), kind, true)?;
            writeln!(out, "{}", render_text(&tokens, markers.words))?;
        }
        Emit::Directives => {
            let tokens = serialize(tree, tree.root(), kind, true)?;
            let geometry = geometry_with(tree, LayoutOptions { honor_folds: true });
            let planner = Planner {
                geometry: &geometry,
                settings: &config.settings,
                catalog: &config.catalog,
                markers,
            };
            for d in planner.speech_tokens(&tokens)? {
                writeln!(out, "{}", serde_json::to_string(&d)?)?;
            }
        }
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), Failure> {
    let config = EngineConfig::from_files(
        cli.settings.as_deref(),
        cli.layout.as_deref(),
        cli.earcons.as_deref(),
        cli.symbols.as_deref(),
    )?;
    let store = FileStore {
        base: cli.documents.clone(),
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    if cli.serve {
        let server = serve(cli.listen.as_str(), config)?;
        let server = match &cli.documents {
            Some(d) => server.with_documents(d),
            None => server,
        };
        eprintln!("audimath: listening on {}", server.local_addr()?);
        server.run()?;
    } else if let Some(path) = &cli.script {
        let file = fs::File::open(path).map_err(|e| format!("{}: {e}", path.display()))?;
        let events = parse_script(BufReader::new(file))?;
        replay(&config, &events, store, &mut out)?;
    } else if let Some(input) = &cli.input {
        let tree = read_input(input, &config)?;
        emit(&cli, &config, &tree, &mut out)?;
    }
    out.flush()?;
    Ok(())
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        // output cut short by a closed pipe, e.g. `| head`
        Err(e) if e.downcast_ref::<io::Error>().is_some_and(|e| e.kind() == io::ErrorKind::BrokenPipe) => {
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("audimath: {e}");
            ExitCode::FAILURE
        }
    }
}
