//! Command line entry point. Exit codes: 0 success, 1 user error, 2 internal
//! failure or oracle mismatch.

use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use tensegrid_core::geom::Point;
use tensegrid_core::growgen::{generate, GenerateOptions, MeshBudget, MeshKind, Profile, RemovalPolicy, StartFace};
use tensegrid_core::multiply::{degrees_of_freedom, laman_bound};
use tensegrid_core::stress::{certify, cross_check, nullity, StateSource};

use crate::document::{self, Document, Meta};
use crate::render::{render_svg, RenderStyle};
use crate::script::{Script, ScriptError};
use crate::session::Session;

pub const DEFAULT_PORT: u16 = 8080;

#[derive(Debug, Parser)]
#[command(name = "tensegrid", version, about = "Planar tensegrity structures grown from K4 cells")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Mesh {
    Tri,
    Quad,
    Mixed,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Mesh a profile, fill it with cells and write the document.
    Generate {
        /// `circle`, `ellipse`, or a JSON file with polygon vertices.
        #[arg(long)]
        profile: String,
        #[arg(long)]
        cells: usize,
        #[arg(long, value_enum, default_value = "tri")]
        mesh: Mesh,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 1.0)]
        radius: f64,
        /// Ellipse semi-axes.
        #[arg(long, default_value_t = 2.0)]
        a: f64,
        #[arg(long, default_value_t = 1.0)]
        b: f64,
        /// Remove every k-th member shared by two cells.
        #[arg(long)]
        remove_every: Option<usize>,
        /// Start face index instead of a random one.
        #[arg(long)]
        start: Option<usize>,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print counts, basis sources and the oracle cross-check.
    Analyze { doc: PathBuf },
    /// Draw a document as SVG, optionally styled by one basis column.
    Render {
        doc: PathBuf,
        #[arg(long)]
        state: Option<usize>,
        #[arg(long)]
        width_scale: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Replay an operations file and write the resulting document.
    Script {
        ops: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the HTTP service.
    Serve {
        #[arg(long, env = "TENSEGRID_PORT", default_value_t = DEFAULT_PORT)]
        port: u16,
        #[arg(long, default_value = "127.0.0.1")]
        host: String,
        /// Document to start from.
        #[arg(long)]
        doc: Option<PathBuf>,
    },
}

#[derive(Debug)]
enum Failure {
    User(String),
    Internal(String),
}

impl Failure {
    fn code(&self) -> i32 {
        match self {
            Failure::User(_) => 1,
            Failure::Internal(_) => 2,
        }
    }
}

impl From<tensegrid_core::Error> for Failure {
    fn from(e: tensegrid_core::Error) -> Self {
        if e.is_internal() {
            Failure::Internal(e.to_string())
        } else {
            Failure::User(e.to_string())
        }
    }
}

impl From<document::DocumentError> for Failure {
    fn from(e: document::DocumentError) -> Self {
        Failure::User(e.to_string())
    }
}

impl From<ScriptError> for Failure {
    fn from(e: ScriptError) -> Self {
        match e {
            ScriptError::Basis(inner) => inner.into(),
            other => Failure::User(other.to_string()),
        }
    }
}

fn read(path: &Path) -> Result<Vec<u8>, Failure> {
    std::fs::read(path).map_err(|e| Failure::User(format!("{}: {e}", path.display())))
}

fn emit(out: &Option<PathBuf>, bytes: &[u8], stdout: &mut dyn Write) -> Result<(), Failure> {
    match out {
        Some(path) => std::fs::write(path, bytes).map_err(|e| Failure::User(format!("{}: {e}", path.display()))),
        None => stdout.write_all(bytes).map_err(|e| Failure::Internal(e.to_string())),
    }
}

fn polygon_profile(path: &Path) -> Result<Profile, Failure> {
    let bytes = read(path)?;
    if let Ok(p) = serde_json::from_slice::<Profile>(&bytes) {
        return Ok(p);
    }
    if let Ok(points) = serde_json::from_slice::<Vec<Point>>(&bytes) {
        return Ok(Profile::Polygon { points });
    }
    match serde_json::from_slice::<Vec<[f64; 2]>>(&bytes) {
        Ok(raw) => {
            let points = raw.iter().map(|&[x, y]| Point::try_new(x, y)).collect::<Result<Vec<_>, _>>()?;
            Ok(Profile::Polygon { points })
        }
        Err(e) => Err(Failure::User(format!("{}: not a polygon: {e}", path.display()))),
    }
}

/// Parses `args` (program name first) and runs the command.
pub fn run(args: impl IntoIterator<Item = impl Into<OsString> + Clone>, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32 {
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                1
            } else {
                let _ = write!(stdout, "{text}");
                0
            };
        }
    };
    match execute(cli.command, stdout, stderr) {
        Ok(code) => code,
        Err(f) => {
            let (Failure::User(m) | Failure::Internal(m)) = &f;
            let _ = writeln!(stderr, "error: {m}");
            f.code()
        }
    }
}

fn execute(command: Command, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<i32, Failure> {
    match command {
        Command::Generate { profile, cells, mesh, seed, radius, a, b, remove_every, start, out } => {
            let profile = match profile.as_str() {
                "circle" => Profile::Circle { radius },
                "ellipse" => Profile::Ellipse { a, b },
                path => polygon_profile(Path::new(path))?,
            };
            let mesh_kind = match mesh {
                Mesh::Tri => MeshKind::Tri,
                Mesh::Quad => MeshKind::Quad,
                Mesh::Mixed => MeshKind::Mixed,
            };
            let mut options = GenerateOptions::new(MeshBudget::Faces(cells), mesh_kind, seed);
            if let Some(k) = remove_every {
                options.removals = RemovalPolicy::EveryKthSharedRim(k);
            }
            options.start = start.map(StartFace::Index);
            let g = generate(&profile, &options)?;
            let generator = serde_json::json!({ "profile": profile, "options": options });
            let meta = Meta { seed: Some(seed), generator: Some(generator) };
            emit(&out, &document::save(&g.structure, &g.basis, meta), stdout)?;
            let r = &g.report;
            let _ = writeln!(
                stderr,
                "cells {} ({} type I, {} type II), states {} ({} cell, {} virtual), oracle {}",
                r.cells,
                r.type_i,
                r.type_ii,
                g.basis.dim(),
                r.cell_states,
                r.virtual_states,
                if r.cross_check.pass { "PASS" } else { "FAIL" }
            );
            Ok(if r.cross_check.pass { 0 } else { 2 })
        }
        Command::Analyze { doc } => {
            let (structure, basis, _) = document::load(&read(&doc)?)?;
            let s = nullity(&structure);
            let check = cross_check(&structure, &basis);
            let certified = certify(&structure, &basis).is_ok();
            let count = |f: fn(&StateSource) -> bool| basis.sources.iter().filter(|s| f(s)).count();
            let wheels = count(|s| matches!(s, StateSource::VirtualWheel { .. }));
            let general = count(|s| matches!(s, StateSource::VirtualGeneral { .. }));
            let numeric = count(|s| matches!(s, StateSource::Numeric));
            let pass = check.pass && certified;
            let _ = writeln!(stdout, "nodes {}", structure.active_node_ids().len());
            let _ = writeln!(stdout, "members {}", structure.active_member_ids().len());
            let _ = writeln!(stdout, "cells {}", structure.actual_cells().count());
            let _ = writeln!(stdout, "laman_bound {}", laman_bound(&structure));
            let _ = writeln!(stdout, "nullity {s}");
            let _ = writeln!(stdout, "mechanisms {}", degrees_of_freedom(&structure, s));
            let _ = writeln!(
                stdout,
                "basis dim {} (cell {}, virtual wheel {}, virtual general {}, numeric {})",
                basis.dim(),
                basis.cell_count(),
                wheels,
                general,
                numeric
            );
            let _ = writeln!(
                stdout,
                "oracle {} (dim {}, basis off oracle {:.3e}, oracle off basis {:.3e}, certified {})",
                if pass { "PASS" } else { "FAIL" },
                check.oracle_dim,
                check.basis_in_oracle,
                check.oracle_in_basis,
                certified
            );
            Ok(if pass { 0 } else { 2 })
        }
        Command::Render { doc, state, width_scale, out } => {
            let (structure, basis, _) = document::load(&read(&doc)?)?;
            let column = match state {
                Some(k) if k >= basis.dim() => {
                    return Err(Failure::User(format!("state {k} out of range, basis has {} columns", basis.dim())))
                }
                Some(k) => Some(basis.column(k)),
                None => None,
            };
            let style = RenderStyle { width_scale, ..Default::default() };
            let svg = render_svg(&structure, column.as_deref(), &style);
            emit(&out, svg.as_bytes(), stdout)?;
            Ok(0)
        }
        Command::Script { ops, out } => {
            let script = Script::parse(&read(&ops)?)?;
            let doc = script.run()?;
            emit(&out, doc.to_json().as_bytes(), stdout)?;
            Ok(0)
        }
        Command::Serve { port, host, doc } => {
            let session = match doc {
                Some(path) => {
                    let d = Document::from_json(&read(&path)?)?;
                    let (structure, _) = d.to_parts()?;
                    Session::new(structure, d.meta)
                }
                None => Session::new(Default::default(), Meta::default()),
            };
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Failure::Internal(e.to_string()))?;
            runtime.block_on(async {
                let listener = tokio::net::TcpListener::bind((host.as_str(), port))
                    .await
                    .map_err(|e| Failure::User(format!("cannot bind {host}:{port}: {e}")))?;
                let addr = listener.local_addr().map_err(|e| Failure::Internal(e.to_string()))?;
                let _ = writeln!(stderr, "listening on http://{addr}");
                crate::server::serve(listener, session).await.map_err(|e| Failure::Internal(e.to_string()))
            })?;
            Ok(0)
        }
    }
}
