//! `maxarc`: command-line front end for the embeddability pipeline.
//!
//! Every subcommand prints a JSON document (or a short table with
//! `--format table`) and, given `--out-dir`, writes its artifacts there.
//! Exit codes: 0 success, 2 unreadable or malformed input, 3 input that
//! parses but fails validation, 4 internal consistency failure.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use maxarc::compat::compatible_resolution_bound;
use maxarc::geometry::{
    denniston_arc, extract_design, generate_pg2q, reconstruct_plane, verify_plane, ReconstructedPlane,
};
use maxarc::io::{
    read_arc, read_json, to_json_string, ArcFile, AutFile, ClassesFile, DesignFile, PlaneFile, ResolutionsFile,
};
use maxarc::pipeline::identify_plane;
use maxarc::{
    all_parallel_classes, all_resolutions, automorphism_group_order, build_compat_graph, develop_family, max_clique,
    run_pipeline, validate_design, validate_family, verify_clique_compatible, CliqueResult, CompatGraph, Design,
    DifferenceFamily, Error, IncidenceStructure, ParallelClass, PipelineConfig, PipelineInput, Resolution,
    SearchConfig,
};

#[derive(Parser)]
#[command(name = "maxarc", version, about = "Resolvable Steiner 2-designs and their embeddings as maximal arcs")]
struct Cli {
    #[command(flatten)]
    global: Global,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Global {
    /// Difference family JSON file.
    #[arg(long, global = true)]
    family: Option<PathBuf>,
    /// Directory for output artifacts.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Worker threads; defaults to the available parallelism.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Run every search on one thread.
    #[arg(long, global = true, conflicts_with = "threads")]
    single_thread: bool,
    /// Directory for cached parallel classes and resolutions.
    #[arg(long, global = true)]
    cache_dir: Option<PathBuf>,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Table,
}

/// A design given directly or through `--family`.
#[derive(Args)]
struct DesignArg {
    /// Design JSON file; used instead of `--family`.
    #[arg(long)]
    design: Option<PathBuf>,
}

#[derive(Args)]
struct ClassesArg {
    /// Parallel classes JSON file; enumerated when absent.
    #[arg(long)]
    classes: Option<PathBuf>,
}

#[derive(Args)]
struct ResolutionsArg {
    /// Resolutions JSON file; enumerated when absent.
    #[arg(long)]
    resolutions: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Check the difference conditions of a family.
    ValidateFamily,
    /// Develop a family into its design and validate the design.
    Develop,
    /// Enumerate all parallel classes.
    Classes {
        #[command(flatten)]
        design: DesignArg,
    },
    /// Enumerate all resolutions.
    Resolutions {
        #[command(flatten)]
        design: DesignArg,
        #[command(flatten)]
        classes: ClassesArg,
    },
    /// Build the compatibility graph.
    CompatGraph {
        #[command(flatten)]
        design: DesignArg,
        #[command(flatten)]
        classes: ClassesArg,
        #[command(flatten)]
        resolutions: ResolutionsArg,
        /// Also write the graph in DIMACS format to this path.
        #[arg(long)]
        dimacs: Option<PathBuf>,
    },
    /// Find all maximum cliques of a compatibility graph.
    Clique {
        /// DIMACS graph file.
        #[arg(long)]
        graph: PathBuf,
    },
    /// Rebuild the plane from every maximum clique and identify it.
    Embed {
        #[command(flatten)]
        design: DesignArg,
        #[command(flatten)]
        classes: ClassesArg,
        #[command(flatten)]
        resolutions: ResolutionsArg,
        /// Cliques JSON file.
        #[arg(long)]
        cliques: PathBuf,
    },
    /// Check the projective plane axioms, and the arc property with `--arc`.
    VerifyPlane {
        #[arg(long, required_unless_present = "arc")]
        plane: Option<PathBuf>,
        /// Arc JSON file; its plane is checked too.
        #[arg(long, conflicts_with = "plane")]
        arc: Option<PathBuf>,
    },
    /// Rank of an incidence matrix over GF(p).
    Rank {
        #[command(flatten)]
        design: DesignArg,
        /// Plane JSON file; used instead of a design.
        #[arg(long, conflicts_with = "design")]
        plane: Option<PathBuf>,
        #[arg(long, default_value_t = 2)]
        p: u32,
    },
    /// Order and generators of the automorphism group.
    Aut {
        #[command(flatten)]
        design: DesignArg,
        #[arg(long, conflicts_with = "design")]
        plane: Option<PathBuf>,
    },
    /// Generate PG(2, q).
    Pg2q {
        #[arg(long)]
        q: u32,
    },
    /// Build a Denniston maximal arc in PG(2, q).
    Denniston {
        #[arg(long)]
        q: u32,
        #[arg(long)]
        k: u32,
    },
    /// Run every stage and print the embeddability verdict.
    Pipeline {
        #[command(flatten)]
        design: DesignArg,
    },
}

/// Command outcome: a JSON value, a table rendering, and an optional
/// request for a nonzero exit after printing.
struct Output {
    json: serde_json::Value,
    table: String,
    failure: Option<Error>,
}

impl Output {
    fn ok(json: serde_json::Value, table: String) -> Self {
        Output { json, table, failure: None }
    }
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Parse(_) | Error::Io(_) => 2,
        Error::Context(_)
        | Error::Parameter(_)
        | Error::Structural(_)
        | Error::InvalidFamily(_)
        | Error::Precondition(_) => 3,
        Error::DivisionByZero(_) | Error::Reconstruction(_) | Error::Consistency(_) => 4,
    }
}

struct Ctx {
    global: Global,
    search: SearchConfig,
}

impl Ctx {
    fn family(&self) -> maxarc::Result<DifferenceFamily> {
        let path = self.global.family.as_deref().ok_or_else(|| Error::Parse("--family is required".into()))?;
        read_json(path)
    }

    fn design(&self, arg: &DesignArg) -> maxarc::Result<Design> {
        match &arg.design {
            Some(p) => read_json::<DesignFile>(p)?.into_design(),
            None => develop_family(&self.family()?),
        }
    }

    fn classes(&self, design: &Design, arg: &ClassesArg) -> maxarc::Result<Vec<ParallelClass>> {
        match &arg.classes {
            Some(p) => {
                let file: ClassesFile = read_json(p)?;
                file.validate(design)?;
                Ok(file.classes)
            }
            None => all_parallel_classes(design, &self.search),
        }
    }

    fn resolutions(
        &self,
        design: &Design,
        classes: &[ParallelClass],
        arg: &ResolutionsArg,
    ) -> maxarc::Result<Vec<Resolution>> {
        match &arg.resolutions {
            Some(p) => {
                let file: ResolutionsFile = read_json(p)?;
                file.validate(design, classes)?;
                Ok(file.resolutions)
            }
            None => all_resolutions(design, classes, &self.search),
        }
    }

    fn write(&self, name: &str, text: &str) -> maxarc::Result<()> {
        if let Some(dir) = &self.global.out_dir {
            std::fs::create_dir_all(dir)?;
            std::fs::write(dir.join(name), text)?;
        }
        Ok(())
    }

    fn write_json<T: Serialize>(&self, name: &str, value: &T) -> maxarc::Result<()> {
        self.write(name, &to_json_string(value)?)
    }
}

fn read_plane(path: &Path) -> maxarc::Result<IncidenceStructure> {
    read_json::<PlaneFile>(path)?.into_structure()
}

fn to_value<T: Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).unwrap_or(serde_json::Value::Null)
}

fn table(rows: &[(&str, String)]) -> String {
    let width = rows.iter().map(|(k, _)| k.len()).max().unwrap_or(0);
    rows.iter().map(|(k, v)| format!("{k:<width$}  {v}\n")).collect()
}

fn plane_rows(planes: &[maxarc::pipeline::PlaneSummary]) -> Vec<(&'static str, String)> {
    let mut rows = Vec::new();
    for p in planes {
        rows.push(("plane order", p.order.to_string()));
        rows.push(("plane p-rank", p.p_rank.to_string()));
        if let Some(r) = p.desarguesian_p_rank {
            rows.push(("PG(2,q) p-rank", r.to_string()));
        }
        if let Some(iso) = p.isomorphic_to_desarguesian {
            rows.push(("isomorphic to PG(2,q)", iso.to_string()));
        }
    }
    rows
}

fn run(cli: Cli) -> maxarc::Result<Output> {
    let search = if cli.global.single_thread {
        SearchConfig::single_thread()
    } else {
        cli.global.threads.map(SearchConfig::with_threads).unwrap_or_default()
    };
    let ctx = Ctx { global: cli.global, search };
    match cli.command {
        Command::ValidateFamily => {
            let family = ctx.family()?;
            let report = validate_family(&family)?;
            let table = table(&[
                ("points", family.point_count().to_string()),
                ("block size", family.block_size().to_string()),
                ("valid", report.is_valid().to_string()),
                ("detail", report.to_string()),
            ]);
            let failure = (!report.is_valid()).then(|| Error::InvalidFamily(report.clone()));
            Ok(Output { json: to_value(&report), table, failure })
        }
        Command::Develop => {
            let design = develop_family(&ctx.family()?)?;
            let report = validate_design(&design);
            ctx.write_json("design.json", &DesignFile::from(&design))?;
            let table = table(&[
                ("points", design.v().to_string()),
                ("blocks", design.b().to_string()),
                ("valid", report.is_valid().to_string()),
            ]);
            let failure = (!report.is_valid())
                .then(|| Error::Structural(format!("developed design has violations: {:?}", report.violations)));
            Ok(Output { json: json!({ "design": DesignFile::from(&design), "report": report }), table, failure })
        }
        Command::Classes { design } => {
            let design = ctx.design(&design)?;
            let classes = all_parallel_classes(&design, &ctx.search)?;
            let file = ClassesFile { block_count: design.b(), classes };
            ctx.write_json("classes.json", &file)?;
            let table = table(&[("Par. Cl.", file.classes.len().to_string())]);
            Ok(Output::ok(to_value(&file), table))
        }
        Command::Resolutions { design, classes } => {
            let design = ctx.design(&design)?;
            let classes = ctx.classes(&design, &classes)?;
            let resolutions = all_resolutions(&design, &classes, &ctx.search)?;
            let file = ResolutionsFile { class_count: classes.len(), resolutions };
            ctx.write_json("resolutions.json", &file)?;
            let table = table(&[("Par. Cl.", classes.len().to_string()), ("Res.", file.resolutions.len().to_string())]);
            Ok(Output::ok(to_value(&file), table))
        }
        Command::CompatGraph { design, classes, resolutions, dimacs } => {
            let design = ctx.design(&design)?;
            let classes = ctx.classes(&design, &classes)?;
            let resolutions = ctx.resolutions(&design, &classes, &resolutions)?;
            let graph = build_compat_graph(&resolutions, &classes, &ctx.search)?;
            let text = graph.to_dimacs();
            if let Some(path) = dimacs {
                std::fs::write(path, &text)?;
            }
            ctx.write("compat.dimacs", &text)?;
            let json = json!({ "vertices": graph.vertex_count(), "edges": graph.edge_count() });
            let table =
                table(&[("vertices", graph.vertex_count().to_string()), ("edges", graph.edge_count().to_string())]);
            Ok(Output::ok(json, table))
        }
        Command::Clique { graph } => {
            let text = std::fs::read_to_string(&graph)?;
            let graph = CompatGraph::from_dimacs(&text)?;
            let result = max_clique(&graph);
            ctx.write_json("cliques.json", &result)?;
            let table =
                table(&[("Comp. Res.", result.max_size.to_string()), ("cliques", result.cliques.len().to_string())]);
            Ok(Output::ok(to_value(&result), table))
        }
        Command::Embed { design, classes, resolutions, cliques } => {
            let design = ctx.design(&design)?;
            let classes = ctx.classes(&design, &classes)?;
            let resolutions = ctx.resolutions(&design, &classes, &resolutions)?;
            let cliques: CliqueResult = read_json(&cliques)?;
            let params = design.params().ok_or_else(|| Error::Structural("input is not a 2-design".into()))?;
            let bound = compatible_resolution_bound(params.v, params.k);
            if bound != Some(cliques.max_size) {
                return Err(Error::Precondition(format!(
                    "cliques of size {} do not reach the bound {bound:?}",
                    cliques.max_size
                )));
            }
            let mut planes: Vec<ReconstructedPlane> = Vec::new();
            for c in &cliques.cliques {
                if !verify_clique_compatible(c, &resolutions, &classes)? {
                    return Err(Error::Precondition(format!("clique {c:?} is not pairwise compatible")));
                }
                let members: Vec<Resolution> = c.iter().map(|&i| resolutions[i].clone()).collect();
                planes.push(reconstruct_plane(&design, &members, &classes)?);
            }
            let mut summaries = Vec::new();
            for (i, p) in planes.iter().enumerate() {
                summaries.push(identify_plane(p)?);
                ctx.write_json(&format!("plane-{i}.json"), &PlaneFile::from(p.arc.plane()))?;
                ctx.write_json(&format!("arc-{i}.json"), &ArcFile::inline(&p.arc))?;
            }
            let table = table(&plane_rows(&summaries));
            Ok(Output::ok(to_value(&summaries), table))
        }
        Command::VerifyPlane { plane, arc } => {
            if let Some(path) = arc {
                // Loading an arc verifies the plane and the 0-or-k line intersections.
                let arc = read_arc(&path)?;
                let json = json!({ "q": arc.order(), "arc_size": arc.size(), "degree": arc.degree(), "valid": true });
                let table = table(&[
                    ("valid", "true".into()),
                    ("order", arc.order().to_string()),
                    ("arc size", arc.size().to_string()),
                    ("degree", arc.degree().to_string()),
                ]);
                return Ok(Output::ok(json, table));
            }
            let plane = read_plane(plane.as_deref().expect("clap requires --plane without --arc"))?;
            let report = verify_plane(&plane);
            let table = table(&[
                ("valid", report.is_valid().to_string()),
                ("order", report.q.map_or("-".into(), |q| q.to_string())),
            ]);
            let failure = report.violation.as_ref().map(|v| Error::Structural(format!("plane axiom violated: {v:?}")));
            Ok(Output { json: to_value(&report), table, failure })
        }
        Command::Rank { design, plane, p } => {
            let matrix = match plane {
                Some(path) => read_plane(&path)?.incidence_matrix(),
                None => ctx.design(&design)?.incidence_matrix(),
            };
            let rank = matrix.p_rank(p)?;
            Ok(Output::ok(json!({ "p": p, "rank": rank }), table(&[("p", p.to_string()), ("rank", rank.to_string())])))
        }
        Command::Aut { design, plane } => {
            let aut = match plane {
                Some(path) => automorphism_group_order(&read_plane(&path)?),
                None => automorphism_group_order(&ctx.design(&design)?),
            };
            let file = AutFile::from(&aut);
            ctx.write_json("aut.json", &file)?;
            let table =
                table(&[("|Aut|", aut.group_order.to_string()), ("generators", aut.generators.len().to_string())]);
            Ok(Output::ok(to_value(&file), table))
        }
        Command::Pg2q { q } => {
            let plane = generate_pg2q(q)?;
            let file = PlaneFile::from(&plane);
            ctx.write_json("plane.json", &file)?;
            let table =
                table(&[("points", plane.point_count().to_string()), ("lines", plane.line_count().to_string())]);
            Ok(Output::ok(to_value(&file), table))
        }
        Command::Denniston { q, k } => {
            let arc = denniston_arc(q, k)?;
            let design = extract_design(&arc)?;
            ctx.write_json("plane.json", &PlaneFile::from(arc.plane()))?;
            ctx.write_json("arc.json", &ArcFile::inline(&arc))?;
            ctx.write_json("design.json", &DesignFile::from(&design))?;
            let table = table(&[
                ("q", arc.order().to_string()),
                ("arc size", arc.size().to_string()),
                ("degree", arc.degree().to_string()),
                ("design blocks", design.b().to_string()),
            ]);
            Ok(Output::ok(to_value(&ArcFile::inline(&arc)), table))
        }
        Command::Pipeline { design } => {
            let input = match (design.design, &ctx.global.family) {
                (Some(p), _) => PipelineInput::Design(p),
                (None, Some(p)) => PipelineInput::Family(p.clone()),
                (None, None) => return Err(Error::Parse("--family or --design is required".into())),
            };
            let config = PipelineConfig {
                search: ctx.search,
                out_dir: ctx.global.out_dir.clone(),
                cache_dir: ctx.global.cache_dir.clone(),
            };
            let run = run_pipeline(&input, &config)?;
            let s = &run.manifest.summary;
            let mut rows = vec![
                ("input", run.manifest.input.clone()),
                ("design", format!("2-({},{},1), {} blocks", s.points, run.design.block_size().unwrap_or(0), s.blocks)),
                ("2-rank", s.rank.to_string()),
                ("|Aut|", s.aut.to_string()),
                ("Par. Cl.", s.classes.to_string()),
                ("Res.", s.resolutions.to_string()),
                ("edges", s.edges.to_string()),
                ("Comp. Res.", s.m.to_string()),
                ("bound", s.bound.map_or("-".into(), |b| b.to_string())),
                ("maximum cliques", s.cliques.to_string()),
            ];
            rows.extend(plane_rows(&s.planes));
            rows.push(("verdict", s.verdict.to_string()));
            Ok(Output::ok(to_value(&run.manifest), table(&rows)))
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let format = cli.global.format;
    match run(cli) {
        Ok(out) => {
            match format {
                Format::Json => println!("{}", serde_json::to_string_pretty(&out.json).unwrap_or_default()),
                Format::Table => print!("{}", out.table),
            }
            match out.failure {
                None => ExitCode::SUCCESS,
                Some(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(exit_code(&e))
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}
