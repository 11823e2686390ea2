//! The `iat` command line. Subcommands work on project and annotation files
//! or start the annotation service.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{anyhow, Context};
use clap::{Parser, Subcommand};
use iat_core::project::{DEFAULT_EXTENSIONS, PROJECT_EXTENSION};
use iat_core::{parse_set, Project, Taxonomy};
use iat_service::{start_service, ServiceConfig, DEFAULT_PORT, MIN_PORT};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

/// Overrides the default port when `--port` is absent.
pub const PORT_ENV: &str = "IAT_PORT";

#[derive(Debug, Parser)]
#[command(name = "iat", version, about = "Image annotation projects from the command line")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Create a project over the images in a directory
    New {
        root: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        /// Image extensions to include
        #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_EXTENSIONS.map(String::from))]
        ext: Vec<String>,
        /// Project file to write [default: <root>/project.iatproj]
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Check an annotation, project or labels file
    Validate { file: PathBuf },
    /// Print progress and label counts of a project
    Stats { project: PathBuf },
    /// Serve a project to the browser client
    Serve {
        project: PathBuf,
        #[arg(long, value_parser = port_value)]
        port: Option<u16>,
    },
    /// Annotate a single image without a project file
    Annotate {
        image: PathBuf,
        #[arg(long)]
        labels: PathBuf,
        #[arg(long, value_parser = port_value)]
        port: Option<u16>,
    },
}

fn port_value(s: &str) -> Result<u16, String> {
    let port: u16 = s.parse().map_err(|_| format!("'{s}' is not a port number"))?;
    if port < MIN_PORT {
        return Err(format!("port must be between {MIN_PORT} and 65535"));
    }
    Ok(port)
}

/// Port from `--port`, else from `env` (the value of `IAT_PORT`), else the
/// default.
pub fn resolve_port(flag: Option<u16>, env: Option<&str>) -> Result<u16, String> {
    match (flag, env) {
        (Some(p), _) => Ok(p),
        (None, Some(v)) => port_value(v.trim()).map_err(|e| format!("{PORT_ENV}: {e}")),
        (None, None) => Ok(DEFAULT_PORT),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FileKind {
    Annotation,
    Project,
    Labels,
}

/// The magic line wins over the extension, so renamed files are still
/// recognised.
pub fn detect_kind(path: &Path, text: &str) -> FileKind {
    let first = text.lines().next().unwrap_or("").trim_end_matches('\r');
    match first.split('\t').next() {
        Some(iat_core::project::MAGIC) => return FileKind::Project,
        Some(iat_core::persistence::MAGIC) => return FileKind::Annotation,
        _ => {}
    }
    match path.extension().and_then(|e| e.to_str()) {
        Some(PROJECT_EXTENSION) => FileKind::Project,
        Some(iat_core::project::ANNOTATION_EXTENSION) => FileKind::Annotation,
        _ => FileKind::Labels,
    }
}

/// Outcome of a subcommand that ran to completion.
enum Failure {
    /// Already reported on stderr.
    Reported,
    Error(anyhow::Error),
}

impl From<anyhow::Error> for Failure {
    fn from(e: anyhow::Error) -> Self {
        Failure::Error(e)
    }
}

/// Runs `iat` with `argv` (program name first) and returns the exit code.
pub fn run<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) if !e.use_stderr() => {
            let _ = write!(stdout, "{}", e.render());
            return EXIT_OK;
        }
        Err(e) => {
            let _ = write!(stderr, "{}", e.render());
            return EXIT_USAGE;
        }
    };
    let port_env = std::env::var(PORT_ENV).ok();
    let result = match cli.command {
        Command::New { root, labels, ext, out } => new(&root, &labels, &ext, out, stdout),
        Command::Validate { file } => validate(&file, stdout, stderr),
        Command::Stats { project } => stats(&project, stdout),
        Command::Serve { project, port } => match resolve_port(port, port_env.as_deref()) {
            Ok(port) => serve(ServiceConfig::new(port, project), stdout),
            Err(e) => return usage(stderr, &e),
        },
        Command::Annotate { image, labels, port } => match resolve_port(port, port_env.as_deref()) {
            Ok(port) => serve(ServiceConfig::single_image(port, image, labels), stdout),
            Err(e) => return usage(stderr, &e),
        },
    };
    match result {
        Ok(()) => EXIT_OK,
        Err(Failure::Reported) => EXIT_FAILURE,
        Err(Failure::Error(e)) => {
            let _ = writeln!(stderr, "iat: {}", describe(&e));
            EXIT_FAILURE
        }
    }
}

/// The error and its causes, skipping causes the message already spells out.
fn describe(e: &anyhow::Error) -> String {
    let mut text = e.to_string();
    for cause in e.chain().skip(1) {
        let cause = cause.to_string();
        if !text.contains(&cause) {
            text = format!("{text}: {cause}");
        }
    }
    text
}

fn usage(stderr: &mut dyn Write, message: &str) -> i32 {
    let _ = writeln!(stderr, "iat: {message}");
    EXIT_USAGE
}

fn new(
    root: &Path,
    labels: &Path,
    ext: &[String],
    out: Option<PathBuf>,
    stdout: &mut dyn Write,
) -> Result<(), Failure> {
    let exts: Vec<&str> = ext.iter().map(String::as_str).filter(|e| !e.is_empty()).collect();
    let mut project = Project::create(root, labels, &exts).map_err(anyhow::Error::from)?;
    let out = out.unwrap_or_else(|| root.join(format!("project.{PROJECT_EXTENSION}")));
    let out_dir = match out.parent() {
        Some(d) if !d.as_os_str().is_empty() => d.to_path_buf(),
        _ => PathBuf::from("."),
    };
    let same_dir = out_dir.canonicalize().ok().zip(root.canonicalize().ok()).is_some_and(|(a, b)| a == b);
    if !same_dir {
        project.rebase(&out_dir).map_err(anyhow::Error::from)?;
    }
    project.save(&out).map_err(anyhow::Error::from)?;
    let n = project.len();
    writeln!(stdout, "created {} with {n} image{}", out.display(), if n == 1 { "" } else { "s" })
        .context("writing output")?;
    Ok(())
}

fn validate(file: &Path, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<(), Failure> {
    let text = std::fs::read_to_string(file).with_context(|| format!("cannot read {}", file.display()))?;
    let root = file.parent().map(Path::to_path_buf).unwrap_or_default();
    let parsed = match detect_kind(file, &text) {
        FileKind::Annotation => parse_set(&text).map(drop),
        FileKind::Project => Project::parse(&text, root).map(drop),
        FileKind::Labels => Taxonomy::parse(&text).map(drop),
    };
    match parsed {
        Ok(()) => {
            writeln!(stdout, "ok").context("writing output")?;
            Ok(())
        }
        Err(e) => {
            let _ = writeln!(stderr, "{}: {e}", file.display());
            Err(Failure::Reported)
        }
    }
}

fn stats(project: &Path, stdout: &mut dyn Write) -> Result<(), Failure> {
    let project = Project::open(project).map_err(anyhow::Error::from)?;
    let stats = project.aggregate_stats().map_err(anyhow::Error::from)?;
    let mut out = format!("status\tpending\t{}\nstatus\tannotated\t{}\n", stats.pending, stats.annotated);
    for ((class, ty), n) in &stats.labels {
        out.push_str(&format!("label\t{class}\t{ty}\t{n}\n"));
    }
    stdout.write_all(out.as_bytes()).context("writing output")?;
    Ok(())
}

fn serve(config: ServiceConfig, stdout: &mut dyn Write) -> Result<(), Failure> {
    let runtime = tokio::runtime::Runtime::new().context("starting the runtime")?;
    runtime.block_on(async {
        let handle = start_service(config).await.map_err(|e| anyhow!(e))?;
        writeln!(stdout, "serving on http://{} (Ctrl-C to stop)", handle.addr()).context("writing output")?;
        stdout.flush().ok();
        tokio::signal::ctrl_c().await.context("waiting for Ctrl-C")?;
        handle.shutdown().await.context("stopping the service")?;
        Ok(())
    })
}
