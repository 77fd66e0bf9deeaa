//! `evolvekit`: batch workflows over models and metamodels.
//!
//! Exit codes: 0 ok, 1 usage or unreadable/ill-formed inputs, 2 validation
//! or constraint failure, 3 migration failure, 4 merge conflicts. Output
//! files are written to a temporary sibling and renamed into place, so a
//! failing run never leaves a partial file behind.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use evolvekit_constraints as constraints;
use evolvekit_core as core;
use evolvekit_diff as diff;
use evolvekit_mcl as mcl;
use evolvekit_refactor as refactor;
use evolvekit_ummie as ummie;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Text,
    Json,
}

#[derive(Parser, Debug)]
#[command(name = "evolvekit", version, about = "Metamodel-driven model evolution toolkit")]
struct Cli {
    /// Report format for standard output.
    #[arg(long, global = true, value_enum, env = "EVOLVEKIT_FORMAT", default_value = "text")]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug, Clone, Copy)]
struct MatchOpts {
    /// Neighborhood propagation weight of the similarity iteration.
    #[arg(long, default_value_t = 0.5)]
    alpha: f64,
    /// Acceptance threshold for matched pairs.
    #[arg(long, default_value_t = 0.6)]
    theta: f64,
    /// Convergence bound on the similarity fixed point.
    #[arg(long, default_value_t = 1e-3)]
    epsilon: f64,
    /// Iteration cap for the similarity fixed point.
    #[arg(long, default_value_t = 100)]
    max_iter: u32,
}

impl From<MatchOpts> for diff::MatchConfig {
    fn from(o: MatchOpts) -> Self {
        diff::MatchConfig {
            alpha: o.alpha,
            theta: o.theta,
            epsilon: o.epsilon,
            max_iter: o.max_iter,
        }
    }
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Check a model's structural conformance against a metamodel.
    Validate {
        #[arg(long)]
        metamodel: PathBuf,
        #[arg(long)]
        model: PathBuf,
    },
    /// Evaluate well-formedness constraints, reporting counterexamples.
    Check {
        #[arg(long)]
        metamodel: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        constraints: PathBuf,
        /// Only evaluate constraints of this phase.
        #[arg(long)]
        phase: Option<String>,
    },
    /// Match two model versions and report their structural difference.
    Diff {
        #[arg(long)]
        metamodel: PathBuf,
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[command(flatten)]
        matching: MatchOpts,
    },
    /// Three-way merge of two models against a common ancestor.
    Merge {
        #[arg(long)]
        metamodel: PathBuf,
        #[arg(long)]
        base: PathBuf,
        #[arg(long)]
        left: PathBuf,
        #[arg(long)]
        right: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[command(flatten)]
        matching: MatchOpts,
    },
    /// Migrate a model across a metamodel delta.
    Migrate {
        /// Source metamodel file.
        #[arg(long)]
        from: PathBuf,
        /// Evolved metamodel file.
        #[arg(long)]
        to: PathBuf,
        /// Delta file in the migration DSL.
        #[arg(long)]
        delta: PathBuf,
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Treat every warning as an error.
        #[arg(long)]
        strict: bool,
    },
    /// Patch a transformation rule graph against a metamodel delta.
    MigrateRules {
        /// Source metamodel file.
        #[arg(long)]
        from: PathBuf,
        /// Evolved metamodel file.
        #[arg(long)]
        to: PathBuf,
        /// Delta file in the migration DSL.
        #[arg(long)]
        delta: PathBuf,
        /// Destination (output-side) metamodel of the transformation.
        #[arg(long)]
        dest: PathBuf,
        /// Rule graph file.
        #[arg(long)]
        rules: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Apply a built-in refactoring.
    Refactor {
        #[arg(value_enum)]
        action: RefactorAction,
        #[arg(long)]
        model: PathBuf,
        /// Component to move (push-down, pull-up).
        #[arg(long)]
        component: Option<String>,
        /// Container to move it into (push-down).
        #[arg(long)]
        container: Option<String>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum RefactorAction {
    PushDown,
    PullUp,
    Flatten,
}

/// Input-side failure: reported on stderr, exit 1.
struct InputError(String);

type CmdResult = Result<u8, InputError>;

fn read(path: &Path) -> Result<String, InputError> {
    fs::read_to_string(path)
        .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))
}

fn load_metamodel(path: &Path) -> Result<core::Metamodel, InputError> {
    core::load_metamodel(&read(path)?)
        .map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn load_model(path: &Path) -> Result<core::Model, InputError> {
    core::load_model(&read(path)?).map_err(|e| InputError(format!("{}: {e}", path.display())))
}

fn write_atomic(path: &Path, content: &str) -> Result<(), InputError> {
    let file_name = path
        .file_name()
        .ok_or_else(|| InputError(format!("{} has no file name", path.display())))?;
    let tmp = path.with_file_name(format!("{}.tmp", file_name.to_string_lossy()));
    fs::write(&tmp, content)
        .map_err(|e| InputError(format!("cannot write {}: {e}", tmp.display())))?;
    fs::rename(&tmp, path)
        .map_err(|e| InputError(format!("cannot move output into {}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                print!("{e}");
                return ExitCode::SUCCESS;
            }
            eprint!("{e}");
            return ExitCode::from(1);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(InputError(msg)) => {
            eprintln!("evolvekit: {msg}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> CmdResult {
    let format = cli.format;
    match cli.command {
        Command::Validate { metamodel, model } => cmd_validate(&metamodel, &model, format),
        Command::Check { metamodel, model, constraints, phase } => {
            cmd_check(&metamodel, &model, &constraints, phase.as_deref(), format)
        }
        Command::Diff { metamodel, left, right, matching } => {
            cmd_diff(&metamodel, &left, &right, matching, format)
        }
        Command::Merge { metamodel, base, left, right, out, matching } => {
            cmd_merge(&metamodel, &base, &left, &right, &out, matching, format)
        }
        Command::Migrate { from, to, delta, model, out, strict } => {
            cmd_migrate(&from, &to, &delta, &model, &out, strict, format)
        }
        Command::MigrateRules { from, to, delta, dest, rules, out } => {
            cmd_migrate_rules(&from, &to, &delta, &dest, &rules, &out, format)
        }
        Command::Refactor { action, model, component, container, out } => {
            cmd_refactor(action, &model, component.as_deref(), container.as_deref(), &out)
        }
    }
}

fn cmd_validate(metamodel: &Path, model: &Path, format: Format) -> CmdResult {
    let mm = load_metamodel(metamodel)?;
    let m = load_model(model)?;
    let report = core::check_conformance(&m, &mm);
    print!(
        "{}",
        match format {
            Format::Text => report.render_text(),
            Format::Json => report.render_json(),
        }
    );
    Ok(if report.conformant() { 0 } else { 2 })
}

fn cmd_check(
    metamodel: &Path,
    model: &Path,
    constraint_file: &Path,
    phase: Option<&str>,
    format: Format,
) -> CmdResult {
    let mm = load_metamodel(metamodel)?;
    let m = load_model(model)?;
    let text = read(constraint_file)?;
    let suite = constraints::parse_constraints(&text, &mm)
        .map_err(|e| InputError(format!("{}: {e}", constraint_file.display())))?;
    let report = constraints::evaluate_suite(&suite, &m, &mm, phase);
    let rendered = constraints::render_report(
        &report,
        match format {
            Format::Text => constraints::ReportFormat::Text,
            Format::Json => constraints::ReportFormat::Json,
        },
    );
    print!("{rendered}");
    Ok(if report.valid { 0 } else { 2 })
}

fn diff_format(format: Format) -> diff::ReportFormat {
    match format {
        Format::Text => diff::ReportFormat::Text,
        Format::Json => diff::ReportFormat::Json,
    }
}

fn cmd_diff(
    metamodel: &Path,
    left: &Path,
    right: &Path,
    matching: MatchOpts,
    format: Format,
) -> CmdResult {
    load_metamodel(metamodel)?;
    let l = load_model(left)?;
    let r = load_model(right)?;
    let m = diff::match_models(&l, &r, matching.into())
        .map_err(|e| InputError(e.to_string()))?;
    let report = diff::diff_models(&l, &r, &m);
    print!("{}", diff::render_diff(&report, diff_format(format)));
    Ok(0)
}

fn cmd_merge(
    metamodel: &Path,
    base: &Path,
    left: &Path,
    right: &Path,
    out: &Path,
    matching: MatchOpts,
    format: Format,
) -> CmdResult {
    load_metamodel(metamodel)?;
    let b = load_model(base)?;
    let l = load_model(left)?;
    let r = load_model(right)?;
    let result =
        diff::merge3(&b, &l, &r, matching.into()).map_err(|e| InputError(e.to_string()))?;
    write_atomic(out, &core::save_model(&result.merged))?;
    print!("{}", diff::render_merge(&result, diff_format(format)));
    Ok(if result.conflicts.is_empty() { 0 } else { 4 })
}

fn cmd_migrate(
    from: &Path,
    to: &Path,
    delta: &Path,
    model: &Path,
    out: &Path,
    strict: bool,
    format: Format,
) -> CmdResult {
    let mm_src = load_metamodel(from)?;
    let mm_dst = load_metamodel(to)?;
    let delta_text = read(delta)?;
    let spec = mcl::parse_mcl(&delta_text, &mm_src, &mm_dst)
        .map_err(|e| InputError(format!("{}: {e}", delta.display())))?;
    let m = load_model(model)?;

    match mcl::migrate_model(&m, &spec, &mm_src, &mm_dst) {
        Ok((migrated, report)) => {
            if strict && !report.warnings.is_empty() {
                eprintln!("evolvekit: --strict: {} warning(s) promoted to errors", report.warnings.len());
                print!(
                    "{}",
                    match format {
                        Format::Text => report.render_text(),
                        Format::Json => report.render_json(),
                    }
                );
                return Ok(3);
            }
            write_atomic(out, &core::save_model(&migrated))?;
            print!(
                "{}",
                match format {
                    Format::Text => report.render_text(),
                    Format::Json => report.render_json(),
                }
            );
            Ok(0)
        }
        Err(e) => {
            eprintln!("evolvekit: {e}");
            if let mcl::MclError::Incomplete { report: Some(report), .. }
            | mcl::MclError::SourceNotConformant { report } = &e
            {
                eprint!("{}", report.render_text());
            }
            Ok(3)
        }
    }
}

fn cmd_migrate_rules(
    from: &Path,
    to: &Path,
    delta: &Path,
    dest: &Path,
    rules: &Path,
    out: &Path,
    format: Format,
) -> CmdResult {
    let mm_src = load_metamodel(from)?;
    let mm_evolved = load_metamodel(to)?;
    let mm_dest = load_metamodel(dest)?;
    let delta_text = read(delta)?;
    let spec = mcl::parse_mcl(&delta_text, &mm_src, &mm_evolved)
        .map_err(|e| InputError(format!("{}: {e}", delta.display())))?;
    let rg = ummie::load_rulegraph(&read(rules)?)
        .map_err(|e| InputError(format!("{}: {e}", rules.display())))?;
    let (migrated, report) =
        ummie::migrate_rules(&rg, &spec, &mm_src, &mm_evolved, &mm_dest)
            .map_err(|e| InputError(e.to_string()))?;
    write_atomic(out, &ummie::save_rulegraph(&migrated))?;
    print!(
        "{}",
        match format {
            Format::Text => report.render_text(),
            Format::Json => report.render_json(),
        }
    );
    Ok(0)
}

fn cmd_refactor(
    action: RefactorAction,
    model: &Path,
    component: Option<&str>,
    container: Option<&str>,
    out: &Path,
) -> CmdResult {
    let m = load_model(model)?;
    let result = match action {
        RefactorAction::PushDown => {
            let (Some(component), Some(container)) = (component, container) else {
                return Err(InputError(
                    "push-down needs --component and --container".into(),
                ));
            };
            refactor::push_down(&m, component, container)
        }
        RefactorAction::PullUp => {
            let Some(component) = component else {
                return Err(InputError("pull-up needs --component".into()));
            };
            refactor::pull_up(&m, component)
        }
        RefactorAction::Flatten => refactor::flatten_statechart(&m),
    };
    match result {
        Ok(refactored) => {
            write_atomic(out, &core::save_model(&refactored))?;
            match action {
                RefactorAction::Flatten => {
                    let states = refactored
                        .objects
                        .iter()
                        .filter(|o| o.class_name == "State")
                        .count();
                    let transitions = refactored.objects.len() - states;
                    println!("flatten: {states} leaf state(s), {transitions} transition(s)");
                }
                _ => {
                    println!(
                        "refactor complete: {} object(s), {} link(s)",
                        refactored.objects.len(),
                        refactored.links.len()
                    );
                }
            }
            Ok(0)
        }
        Err(
            e @ (refactor::RefactorError::IdUnknown(_)
            | refactor::RefactorError::NotSiblings(_, _)
            | refactor::RefactorError::AtRoot(_)),
        ) => Err(InputError(e.to_string())),
        Err(e) => {
            eprintln!("evolvekit: {e}");
            Ok(2)
        }
    }
}
