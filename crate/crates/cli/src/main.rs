use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use cmsys::coeffexpr::PotentialKind;
use cmsys::models::{
    hamiltonian, template_i3_a, template_i4_a, template_i4_b, template_i5_a, CouplingSet, IntegralName,
};
use cmsys::rootsys::{catalog, catalog_lookup, render_table, Family, Multiplicities};
use cmsys::verify::{calibrate, run_check, run_suite, CheckKind, CheckSpec, Config, OutputFormat, Report, SystemSpec};

/// Quantum integrable systems on root systems: operators, integrals and checks.
#[derive(Parser)]
#[command(name = "cmsys", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the table of symmetric spaces and their couplings.
    Catalog {
        /// Table parameter for rows that depend on it.
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        json: bool,
    },
    /// Couplings of one catalog row.
    Couplings {
        #[arg(long)]
        space: String,
        #[arg(long)]
        n: Option<u32>,
        #[arg(long)]
        json: bool,
    },
    /// Print an operator.
    Print {
        #[arg(long)]
        op: String,
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, value_enum, default_value_t = PrintFormat::P)]
        format: PrintFormat,
    },
    /// Run one check and print its report.
    Verify {
        #[arg(value_enum)]
        check: VerifyKind,
        #[command(flatten)]
        system: SystemArgs,
        /// Comma-separated operator names, e.g. `H,I3`.
        #[arg(long, value_delimiter = ',')]
        ops: Vec<String>,
        #[arg(long)]
        points: Option<usize>,
        #[arg(long)]
        margin: Option<f64>,
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_delimiter = ',')]
        seed: Vec<u64>,
        /// Relative perturbation of the couplings of H (negative control).
        #[arg(long)]
        perturb: Option<f64>,
        #[arg(long)]
        json: bool,
    },
    /// Run every check of a JSON config file.
    Suite {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the `output` field of the config.
        #[arg(long, value_enum)]
        format: Option<SuiteFormat>,
        #[arg(long)]
        fail_fast: bool,
    },
    /// Fit template weights so that the integral commutes with H.
    Calibrate {
        #[arg(long, value_enum)]
        template: TemplateName,
        /// Pieces whose weights are fitted; defaults to the quartic piece.
        #[arg(long, value_delimiter = ',')]
        unknowns: Vec<String>,
        #[command(flatten)]
        system: SystemArgs,
        #[arg(long, default_value_t = 25)]
        points: usize,
        #[arg(long, default_value_t = 1)]
        seed: u64,
        #[arg(long)]
        json: bool,
    },
}

#[derive(Args, Clone)]
struct SystemArgs {
    #[arg(long)]
    family: Option<Family>,
    /// Lie rank (A with rank r has r + 1 particles).
    #[arg(long)]
    rank: Option<usize>,
    /// Catalog label, instead of family and rank.
    #[arg(long)]
    space: Option<String>,
    /// Table parameter for the catalog row.
    #[arg(long)]
    n: Option<u32>,
    #[arg(long, default_value = "hyperbolic")]
    kind: PotentialKind,
    #[arg(long, default_value_t = 1.0)]
    a: f64,
    /// Multiplicities `edge,short,long`; couplings follow from them.
    #[arg(long, value_delimiter = ',', num_args = 3)]
    mult: Option<Vec<u32>>,
    /// Explicit coupling g² on the edge roots.
    #[arg(long)]
    g2: Option<f64>,
    /// Explicit coupling on the short roots.
    #[arg(long)]
    g2_short: Option<f64>,
    /// Explicit coupling on the long roots.
    #[arg(long)]
    g2_long: Option<f64>,
}

impl SystemArgs {
    fn spec(&self) -> Result<SystemSpec> {
        let mut s = match (&self.space, self.family, self.rank) {
            (Some(label), None, None) => SystemSpec::from_space(label, self.n, self.kind),
            (None, Some(f), Some(r)) => SystemSpec::new(f, r, self.kind),
            _ => bail!("give either --space or both --family and --rank"),
        };
        s.a = self.a;
        if let Some(m) = &self.mult {
            s.multiplicities = Some(Multiplicities {
                edge: m[0],
                short: m[1],
                long: m[2],
            });
        }
        if self.g2.is_some() || self.g2_short.is_some() || self.g2_long.is_some() {
            s.couplings = Some(CouplingSet {
                edge: self.g2.unwrap_or(0.0),
                short: self.g2_short.unwrap_or(0.0),
                long: self.g2_long.unwrap_or(0.0),
            });
        }
        Ok(s)
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum PrintFormat {
    /// Coefficients in front of momentum monomials.
    P,
    /// Derivative-normal form with s-expression coefficients.
    Sexpr,
    Json,
}

#[derive(Clone, Copy, ValueEnum)]
enum SuiteFormat {
    Json,
    Text,
}

#[derive(Clone, Copy, ValueEnum)]
enum VerifyKind {
    Conjugation,
    Fvanish,
    Commute,
    Pairwise,
    Weyl,
    Gradation,
    Asymptotic,
    Tables,
}

impl VerifyKind {
    fn check(self) -> CheckKind {
        match self {
            VerifyKind::Conjugation => CheckKind::Conjugation,
            VerifyKind::Fvanish => CheckKind::FVanish,
            VerifyKind::Commute => CheckKind::Commute,
            VerifyKind::Pairwise => CheckKind::PairwiseCommute,
            VerifyKind::Weyl => CheckKind::Weyl,
            VerifyKind::Gradation => CheckKind::Gradation,
            VerifyKind::Asymptotic => CheckKind::Asymptotic,
            VerifyKind::Tables => CheckKind::TableCouplings,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum TemplateName {
    I3,
    I4,
    I5,
    I4b,
}

enum Outcome {
    Pass,
    Fail,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(Outcome::Pass) => ExitCode::SUCCESS,
        Ok(Outcome::Fail) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    println!("{}", serde_json::to_string_pretty(value)?);
    Ok(())
}

fn print_report(r: &Report, json: bool) -> Result<()> {
    if json {
        return print_json(r);
    }
    println!("{}", r.summary());
    for d in r.details.iter().filter(|d| !d.pass) {
        let at = d.point.as_ref().map(|q| format!(" at {q:?}")).unwrap_or_default();
        let index = d.index.as_ref().map(|i| format!(" index {i}")).unwrap_or_default();
        println!("  seed {}: {}: {:.3e} / {:.3e}{index}{at}", d.seed, d.label, d.residual, d.scale);
    }
    for (k, v) in &r.measured {
        println!("  {k} = {v:.6e}");
    }
    Ok(())
}

fn run(command: Command) -> Result<Outcome> {
    match command {
        Command::Catalog { n, json } => {
            let entries = match n {
                Some(n) => catalog()
                    .iter()
                    .map(|e| catalog_lookup(&e.cartan_label, Some(n)))
                    .collect::<cmsys::Result<Vec<_>>>()?,
                None => catalog(),
            };
            if json {
                print_json(&entries)?;
            } else {
                print!("{}", render_table(&entries));
            }
        }
        Command::Couplings { space, n, json } => {
            let entry = catalog_lookup(&space, n)?;
            if json {
                print_json(&entry)?;
            } else {
                let symbol = |class| match class {
                    cmsys::rootsys::RootClass::Edge => "g^2",
                    cmsys::rootsys::RootClass::Short => "g1^2",
                    cmsys::rootsys::RootClass::Long => "g2^2",
                };
                let n = entry.n.map(|n| format!(" (n = {n})")).unwrap_or_default();
                println!("{} {}{n}: {}{}", entry.cartan_label, entry.quotient, entry.family, entry.rank);
                for (class, g2) in &entry.couplings {
                    println!("  {} = {g2}", symbol(*class));
                }
            }
        }
        Command::Print { op, system, format } => {
            let name: IntegralName = op.parse()?;
            let spec = system.spec()?.model()?;
            let operator = name.build(&spec)?;
            match format {
                PrintFormat::P => println!("{}", operator.display_p()),
                PrintFormat::Sexpr => println!("{operator}"),
                PrintFormat::Json => {
                    let terms: Vec<serde_json::Value> = operator
                        .terms()
                        .map(|(a, c)| serde_json::json!({ "index": a.as_slice(), "coeff": c.to_expr().to_string() }))
                        .collect();
                    print_json(&serde_json::json!({ "operator": op, "dim": operator.dim(), "terms": terms }))?;
                }
            }
        }
        Command::Verify {
            check,
            system,
            ops,
            points,
            margin,
            tol,
            seed,
            perturb,
            json,
        } => {
            let kind = check.check();
            let system = match kind {
                CheckKind::TableCouplings => None,
                _ => Some(system.spec()?),
            };
            let mut cs = CheckSpec::new(kind, system);
            cs.operators = if ops.is_empty() { default_ops(kind) } else { ops };
            if let Some(p) = points {
                cs.n_points = p;
            }
            cs.margin = margin;
            cs.tolerance = tol;
            if !seed.is_empty() {
                cs.seeds = seed;
            }
            cs.perturb = perturb;
            let report = run_check(&cs)?;
            print_report(&report, json)?;
            return Ok(if report.pass { Outcome::Pass } else { Outcome::Fail });
        }
        Command::Suite { config, format, fail_fast } => {
            let text = std::fs::read_to_string(&config).with_context(|| format!("reading {}", config.display()))?;
            let mut config = Config::from_json(&text)?;
            config.fail_fast |= fail_fast;
            let json = match format {
                Some(f) => matches!(f, SuiteFormat::Json),
                None => config.output == OutputFormat::Json,
            };
            let outcome = run_suite(&config)?;
            if json {
                print_json(&outcome)?;
            } else {
                for r in &outcome.reports {
                    print_report(r, false)?;
                }
                println!("{} passed, {} failed", outcome.passed, outcome.failed);
            }
            return Ok(if outcome.pass { Outcome::Pass } else { Outcome::Fail });
        }
        Command::Calibrate {
            template,
            unknowns,
            system,
            points,
            seed,
            json,
        } => {
            let spec = system.spec()?.model()?;
            let n = spec.dim();
            let g2 = spec.couplings.edge;
            let (t, default) = match template {
                TemplateName::I3 => (template_i3_a(n, &spec.xkind, g2)?, "x2_pl"),
                TemplateName::I4 => (template_i4_a(n, &spec.xkind, g2)?, "x4"),
                TemplateName::I5 => (template_i5_a(n, &spec.xkind, g2)?, "x4_pl"),
                TemplateName::I4b => (template_i4_b(&spec)?, "edge_quartic"),
            };
            let unknowns = if unknowns.is_empty() { vec![default.to_string()] } else { unknowns };
            let refs: Vec<&str> = unknowns.iter().map(String::as_str).collect();
            let h = hamiltonian(&spec)?;
            let pts = spec.rs.sample_points(&spec.region(), 0.3, seed, points)?;
            let cal = calibrate(&t, &refs, &h, &pts)?;
            if json {
                print_json(&cal)?;
            } else {
                for (name, v) in &cal.values {
                    let printed = t.piece(name)?.weight;
                    println!("{name} = {v:.10} (built-in weight {printed:.10})");
                }
                println!(
                    "rank {}, residual {:.3e} / scale {:.3e} = {:.3e}",
                    cal.rank,
                    cal.residual_max,
                    cal.scale,
                    cal.relative_residual()
                );
            }
        }
    }
    Ok(Outcome::Pass)
}

fn default_ops(kind: CheckKind) -> Vec<String> {
    let ops: &[&str] = match kind {
        CheckKind::Commute => &["H", "I3"],
        CheckKind::PairwiseCommute => &["H", "I3", "I4"],
        CheckKind::Weyl => &["H"],
        CheckKind::Gradation | CheckKind::Asymptotic => &["I3"],
        _ => &[],
    };
    ops.iter().map(|s| s.to_string()).collect()
}
