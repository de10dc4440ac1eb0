//! The `hscale` command line.
//!
//! Exit codes: 0 when every check passes, 2 when a check fails or a
//! computation is refused (dimension mismatch, incomparable indices), 3 when
//! the input cannot be read or parsed.

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

use crate::error::{Error, Result};
use crate::format::{
    format_complex, load_system, parse_vector, LoadedSystem, Matrix, NamedMatrix, SpaceDef, SystemFile, SystemSpec,
};
use crate::generators::{GeneratorSpec, WeightForm};
use crate::hspace::CMat;
use crate::jtl::{lift_to, pair, theta, DElement};
use crate::ofamily::validate_ofamily;
use crate::opalg::{apply_at, bound_constant, component_at, involution, lift, partial_product, LimOperator, Product};
use crate::report::{Report, ReportEntry, Verdict};
use crate::system::{validate_system, AxiomCheck};
use crate::tolerance::Tolerances;
use crate::verify::{verify, VerifyOptions};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAIL: i32 = 2;
pub const EXIT_INPUT: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "hscale", version, about = "Directed contractive systems of Hilbert spaces and their limits")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// System file (JSON).
    pub file: PathBuf,
    /// Class-equality tolerance; overrides the file and HSCALE_TOL.
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check the system axioms.
    Validate {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        json: bool,
    },
    /// Run the full verification suite.
    Verify {
        #[command(flatten)]
        common: Common,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 200)]
        samples: usize,
        #[arg(long)]
        json: bool,
    },
    /// Evaluate the duality form B(x, d).
    Pair {
        #[command(flatten)]
        common: Common,
        /// Element of D^x as `base:vector`, e.g. `1:1,0`.
        #[arg(long)]
        dx: String,
        /// Element of D by its top component, e.g. `1,0` or `[[1,0],[0,2]]`.
        #[arg(long)]
        d: String,
    },
    /// Work with inductive-limit operators.
    Op {
        #[command(flatten)]
        common: Common,
        /// Operator name from the file, or `identity@<index>`.
        #[arg(long)]
        op: String,
        #[command(subcommand)]
        action: OpAction,
    },
    /// Write a generated system to a file.
    Gen {
        #[command(subcommand)]
        generator: GenCommand,
        /// Output path; stdout when absent.
        #[arg(long, short, global = true)]
        out: Option<PathBuf>,
        /// Always write the explicit form, even for operator families.
        #[arg(long, global = true)]
        explicit: bool,
    },
}

#[derive(Debug, Subcommand)]
pub enum OpAction {
    /// `X d` as an element of D^x.
    Apply {
        #[arg(long)]
        d: String,
        /// Index to express the result at; the base when absent.
        #[arg(long)]
        at: Option<String>,
    },
    /// The base component of `X^dagger`.
    Adjoint,
    /// The partial product `X . Y`.
    Product {
        #[arg(long)]
        with: String,
    },
    /// The component `X_g` and its bound constant.
    Bound {
        #[arg(long)]
        at: String,
    },
}

#[derive(Debug, Subcommand)]
pub enum GenCommand {
    ShiftChain {
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 4)]
        levels: usize,
    },
    WeightedGrid {
        #[arg(long, default_value_t = -1.0, allow_hyphen_values = true)]
        xmin: f64,
        #[arg(long, default_value_t = 1.0, allow_hyphen_values = true)]
        xmax: f64,
        #[arg(long, default_value_t = 21)]
        points: usize,
        /// Comma-separated exponents.
        #[arg(long, default_value = "0,0.5,1,1.5,2", value_delimiter = ',', allow_hyphen_values = true)]
        alphas: Vec<f64>,
        /// `one-plus-abs-pow` for (1 + |x|)^alpha, `one-plus-pow` for 1 + |x|^alpha.
        #[arg(long, default_value = "one-plus-abs-pow", value_parser = ["one-plus-abs-pow", "one-plus-pow"])]
        weight: String,
    },
    Ofamily {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 3)]
        dim: usize,
        #[arg(long, default_value_t = 4)]
        count: usize,
    },
    Random {
        #[arg(long, default_value_t = 42)]
        seed: u64,
        #[arg(long, default_value_t = 6)]
        nodes: usize,
        #[arg(long, default_value_t = 8)]
        max_dim: usize,
    },
    E1,
    Diamond,
}

impl GenCommand {
    pub fn spec(&self) -> GeneratorSpec {
        match self {
            GenCommand::ShiftChain { dim, levels } => GeneratorSpec::ShiftChain {
                dim: *dim,
                levels: *levels,
            },
            GenCommand::WeightedGrid {
                xmin,
                xmax,
                points,
                alphas,
                weight,
            } => GeneratorSpec::WeightedGrid {
                xmin: *xmin,
                xmax: *xmax,
                points: *points,
                alphas: alphas.clone(),
                weight: if weight == "one-plus-pow" { WeightForm::OnePlusPow } else { WeightForm::OnePlusAbsPow },
            },
            GenCommand::Ofamily { seed, dim, count } => GeneratorSpec::OfamilySeed {
                seed: *seed,
                dim: *dim,
                count: *count,
            },
            GenCommand::Random { seed, nodes, max_dim } => GeneratorSpec::Random {
                seed: *seed,
                nodes: *nodes,
                max_dim: *max_dim,
            },
            GenCommand::E1 => GeneratorSpec::E1,
            GenCommand::Diamond => GeneratorSpec::Diamond,
        }
    }
}

/// Failure of a command, carrying its exit code.
#[derive(Debug)]
pub struct Failure {
    pub code: i32,
    pub message: String,
}

impl Failure {
    fn input(e: impl std::fmt::Display) -> Self {
        Self {
            code: EXIT_INPUT,
            message: e.to_string(),
        }
    }

    fn math(e: Error) -> Self {
        Self {
            code: EXIT_FAIL,
            message: e.to_string(),
        }
    }
}

type CmdResult = std::result::Result<i32, Failure>;

/// Runs one parsed command, writing results to `out`. Returns the exit code.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let result = match cli.command {
        Command::Validate { common, json } => cmd_validate(&common, json, out),
        Command::Verify {
            common,
            seed,
            samples,
            json,
        } => cmd_verify(&common, VerifyOptions { seed, samples }, json, out),
        Command::Pair { common, dx, d } => cmd_pair(&common, &dx, &d, out),
        Command::Op { common, op, action } => cmd_op(&common, &op, &action, out),
        Command::Gen {
            generator,
            out: path,
            explicit,
        } => cmd_gen(&generator, path.as_deref(), explicit, out),
    };
    match result {
        Ok(code) => code,
        Err(f) => {
            let _ = writeln!(err, "error: {}", f.message);
            f.code
        }
    }
}

fn io(e: std::io::Error) -> Failure {
    Failure::input(format!("write failed: {e}"))
}

pub fn load(common: &Common) -> std::result::Result<LoadedSystem, Failure> {
    let text = std::fs::read_to_string(&common.file)
        .map_err(|e| Failure::input(format!("cannot read {}: {e}", common.file.display())))?;
    load_system(&text, common.tol).map_err(Failure::input)
}

fn axiom_entry(check: &str, claim: &str, a: &AxiomCheck) -> ReportEntry {
    let e = ReportEntry::new(check, claim, Verdict::from_pass(a.pass), a.margin);
    match &a.witness {
        Some(w) => e.with_witness(w),
        None => e,
    }
}

/// Axiom checks, and the order checks of an operator family when present.
pub fn validation_report(loaded: &LoadedSystem) -> Report {
    let s = &loaded.system;
    let v = validate_system(s);
    let mut r = Report::new(loaded.name.clone(), 0, 0);
    r.push(axiom_entry("axioms.injective", "every linking map U_ba is injective", &v.injective));
    let mut contraction = axiom_entry("axioms.contraction", "every linking map U_ba is a contraction", &v.contraction);
    if v.contraction_marginal && contraction.witness.is_none() {
        contraction.witness = Some(json!({ "marginal": true }));
    }
    r.push(contraction);
    r.push(axiom_entry("axioms.identity", "U_aa is the identity of H_a", &v.identity));
    r.push(axiom_entry(
        "axioms.path-independence",
        "U_ca = U_cb U_ba whenever a <= b <= c",
        &v.path_independence,
    ));
    if let Some(f) = &loaded.ofamily {
        let o = validate_ofamily(f, s.tolerances());
        r.push(
            ReportEntry::new(
                "ofamily.directed",
                "the operator family is directed by A <= B iff ||A xi|| <= ||B xi||",
                Verdict::from_pass(o.directed),
                o.missing_upper_bounds.len() as f64,
            )
            .with_witness(&json!({ "ties": o.ties, "missing_upper_bounds": o.missing_upper_bounds })),
        );
    }
    r
}

fn emit(report: &Report, json: bool, out: &mut dyn Write) -> std::result::Result<(), Failure> {
    if json {
        writeln!(out, "{}", report.to_json()).map_err(io)
    } else {
        write!(out, "{}", report.render()).map_err(io)
    }
}

pub fn cmd_validate(common: &Common, json: bool, out: &mut dyn Write) -> CmdResult {
    let loaded = load(common)?;
    let report = validation_report(&loaded);
    emit(&report, json, out)?;
    Ok(report.exit_code())
}

pub fn cmd_verify(common: &Common, opts: VerifyOptions, json: bool, out: &mut dyn Write) -> CmdResult {
    let loaded = load(common)?;
    let report = verify(&loaded, opts);
    emit(&report, json, out)?;
    Ok(report.exit_code())
}

/// `base:vector`.
fn parse_dx(text: &str) -> std::result::Result<(String, crate::hspace::CVec), Failure> {
    let (base, vector) = text
        .split_once(':')
        .ok_or_else(|| Failure::input(format!("expected `base:vector`, got `{text}`")))?;
    Ok((base.trim().to_string(), parse_vector(vector).map_err(Failure::input)?))
}

pub fn cmd_pair(common: &Common, dx: &str, d: &str, out: &mut dyn Write) -> CmdResult {
    let loaded = load(common)?;
    let s = &loaded.system;
    let (base, eta) = parse_dx(dx)?;
    let dv = parse_vector(d).map_err(Failure::input)?;
    let value = (|| -> Result<_> {
        let x = theta(s, &base, &eta)?;
        let d = DElement::new(s, dv)?;
        pair(s, &x, &d)
    })()
    .map_err(Failure::math)?;
    writeln!(out, "{}", format_complex(value)).map_err(io)?;
    Ok(EXIT_OK)
}

/// A file operator by name, or `identity@<index>`.
pub fn resolve_operator(loaded: &LoadedSystem, name: &str) -> Result<LimOperator> {
    if let Some(label) = name.strip_prefix("identity@") {
        let n = loaded.system.space(label)?.dim();
        return lift(&loaded.system, label, &CMat::identity(n, n));
    }
    loaded.operator(name).cloned()
}

fn write_matrix(out: &mut dyn Write, m: &CMat) -> std::io::Result<()> {
    for i in 0..m.nrows() {
        let row: Vec<String> = (0..m.ncols()).map(|j| format_complex(m[(i, j)])).collect();
        writeln!(out, "  {}", row.join("  "))?;
    }
    Ok(())
}

fn write_vector(out: &mut dyn Write, v: &crate::hspace::CVec) -> std::io::Result<()> {
    let parts: Vec<String> = v.iter().map(|z| format_complex(*z)).collect();
    writeln!(out, "{}", parts.join(", "))
}

pub fn cmd_op(common: &Common, op: &str, action: &OpAction, out: &mut dyn Write) -> CmdResult {
    let loaded = load(common)?;
    let s = &loaded.system;
    let x = resolve_operator(&loaded, op).map_err(Failure::input)?;
    match action {
        OpAction::Apply { d, at } => {
            let dv = parse_vector(d).map_err(Failure::input)?;
            let y = (|| -> Result<_> {
                let d = DElement::new(s, dv)?;
                let at = at.clone().unwrap_or_else(|| x.base.clone());
                let y = apply_at(s, &x, &d, &at)?;
                Ok((at.clone(), lift_to(s, &y, &at)?))
            })()
            .map_err(Failure::math)?;
            write!(out, "at {}: ", y.0).map_err(io)?;
            write_vector(out, &y.1).map_err(io)?;
        }
        OpAction::Adjoint => {
            let xd = involution(&x);
            writeln!(out, "base {}", xd.base).map_err(io)?;
            write_matrix(out, &xd.matrix).map_err(io)?;
        }
        OpAction::Product { with } => {
            let y = resolve_operator(&loaded, with).map_err(Failure::input)?;
            match partial_product(s, &x, &y).map_err(Failure::math)? {
                Product::Defined { operator } => {
                    writeln!(out, "DEFINED base {}", operator.base).map_err(io)?;
                    write_matrix(out, &operator.matrix).map_err(io)?;
                }
                Product::Undefined { residual, lower, upper } => {
                    writeln!(out, "UNDEFINED residual {residual:.15} between {lower} and {upper}").map_err(io)?;
                }
            }
        }
        OpAction::Bound { at } => {
            let (comp, bound) = (|| -> Result<_> { Ok((component_at(s, &x, at)?, bound_constant(s, &x, at)?)) })()
                .map_err(Failure::math)?;
            writeln!(out, "component at {at}").map_err(io)?;
            write_matrix(out, &comp).map_err(io)?;
            match bound {
                Some(b) => writeln!(out, "bound {b:.15}").map_err(io)?,
                None => writeln!(out, "bound none").map_err(io)?,
            }
        }
    }
    Ok(EXIT_OK)
}

/// The file written by `gen`: an operator family when the generator has
/// one (unless `explicit`), the explicit system otherwise.
pub fn generated_file(spec: &GeneratorSpec, explicit: bool) -> Result<SystemFile> {
    let tol = Tolerances::from_env();
    let (s, f) = spec.build(&tol)?;
    let name = Some(
        serde_json::to_value(spec)
            .ok()
            .and_then(|v| v.get("type").and_then(|t| t.as_str()).map(str::to_string))
            .unwrap_or_else(|| "generated".into()),
    );
    match f {
        Some(f) if !explicit => Ok(SystemFile {
            name,
            spec: SystemSpec::Ofamily {
                base: SpaceDef {
                    label: "base".into(),
                    dim: None,
                    gram: Some(Matrix(f.base().gram().clone())),
                },
                ops: f
                    .ops()
                    .iter()
                    .map(|(n, m)| NamedMatrix {
                        name: n.clone(),
                        matrix: Matrix(m.clone()),
                    })
                    .collect(),
            },
            tolerances: None,
            operators: vec![],
        }),
        _ => Ok(SystemFile::from_system(&s, name)),
    }
}

pub fn cmd_gen(generator: &GenCommand, path: Option<&Path>, explicit: bool, out: &mut dyn Write) -> CmdResult {
    let file = generated_file(&generator.spec(), explicit).map_err(Failure::input)?;
    let text = file.to_json();
    match path {
        Some(p) => std::fs::write(p, text + "\n").map_err(|e| Failure::input(format!("cannot write {}: {e}", p.display())))?,
        None => writeln!(out, "{text}").map_err(io)?,
    }
    Ok(EXIT_OK)
}

/// Parses `args` and runs the command. Help and usage errors exit like clap.
pub fn main_with<I, T>(args: I, out: &mut dyn Write, err: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    match Cli::try_parse_from(args) {
        Ok(cli) => run(cli, out, err),
        Err(e) => {
            let code = if e.use_stderr() { EXIT_INPUT } else { EXIT_OK };
            let text = e.render().to_string();
            if e.use_stderr() {
                let _ = write!(err, "{text}");
            } else {
                let _ = write!(out, "{text}");
            }
            code
        }
    }
}

