//! Command-line front end: every subcommand writes one CSV table.

use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand};

use polytree::boundary::{BoundaryDistribution, LocallyConstantFunction};
use polytree::oracle::{first_passage_table, truncated_series, Backend};
use polytree::solvers::{
    c_a_constant, convergence_probe, dirichlet_solve, frak_m_a, hl_maximal, poisson_transform,
    riquier_solve, ConvergenceReport, Evaluator,
};
use polytree::spectral::LambdaArg;
use polytree::spherical::KernelSpec;
use polytree::suite;
use polytree::table::{self, fmt_f64, CsvTable};
use polytree::tree::parse_end;
use polytree::{End, Error, SpectralContext};

#[derive(Parser)]
#[command(name = "polytree", version, about = "Polyharmonic functions on homogeneous trees")]
struct Cli {
    /// Write the table here instead of stdout
    #[arg(long, global = true)]
    output: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone)]
struct Spectral {
    #[arg(long, default_value_t = 2)]
    q: u32,
    /// `re` or `re,im`
    #[arg(long, allow_hyphen_values = true)]
    lambda: LambdaArg,
}

impl Spectral {
    fn context(&self) -> polytree::Result<SpectralContext> {
        SpectralContext::new(self.q, self.lambda.0)
    }
}

/// `start:stop:step`, stop included.
#[derive(Clone, Debug, PartialEq)]
struct Depths(Vec<usize>);

impl FromStr for Depths {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, String> {
        let parts: Vec<usize> = s
            .split(':')
            .map(|t| t.trim().parse().map_err(|_| format!("bad depth '{t}'")))
            .collect::<Result<_, _>>()?;
        let [start, stop, step] = parts[..] else {
            return Err(format!("expected start:stop:step, got '{s}'"));
        };
        if step == 0 || stop < start {
            return Err(format!("empty depth range '{s}'"));
        }
        Ok(Depths((start..=stop).step_by(step).collect()))
    }
}

#[derive(Args, Clone)]
struct Probe {
    /// End as `prefix|period`, e.g. `0|1`; repeatable
    #[arg(long = "end", required = true)]
    ends: Vec<String>,
    #[arg(long, default_value = "10:60:5")]
    depths: Depths,
    /// Cone width
    #[arg(long, default_value_t = 0)]
    a: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Spectral constants and identity residuals
    Spectral(Spectral),
    /// Radial profile of Φ_n against its asymptotics
    Spherical {
        #[command(flatten)]
        spectral: Spectral,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long, default_value_t = 40)]
        max_radius: usize,
    },
    /// Normalized limits of the Poisson transform of g
    Dirichlet {
        #[command(flatten)]
        spectral: Spectral,
        /// Locally constant boundary data, lines `<vertex> <re> <im>`
        #[arg(long)]
        g: PathBuf,
        #[command(flatten)]
        probe: Probe,
    },
    /// Normalized limits of f_0 + … + f_k for the Riquier problem
    Riquier {
        #[command(flatten)]
        spectral: Spectral,
        /// Number of boundary functions; defaults to the number given
        #[arg(long)]
        n: Option<usize>,
        #[arg(long)]
        g0: Option<PathBuf>,
        #[arg(long)]
        g1: Option<PathBuf>,
        #[arg(long)]
        g2: Option<PathBuf>,
        #[arg(long)]
        g3: Option<PathBuf>,
        #[arg(long)]
        g4: Option<PathBuf>,
        #[arg(long)]
        g5: Option<PathBuf>,
        #[arg(long)]
        g6: Option<PathBuf>,
        #[arg(long)]
        g7: Option<PathBuf>,
        #[command(flatten)]
        probe: Probe,
    },
    /// Normalized limits of the order-n transform of a distribution
    Fatou {
        #[command(flatten)]
        spectral: Spectral,
        #[arg(long, default_value_t = 0)]
        n: usize,
        /// Distribution, lines `ac <vertex> <re> <im>` or `pm <end> <re> <im>`
        #[arg(long)]
        g: PathBuf,
        #[command(flatten)]
        probe: Probe,
    },
    /// Maximal function against the constant C_a times Mg
    Maximal {
        #[command(flatten)]
        spectral: Spectral,
        #[arg(long, default_value_t = 0)]
        n: usize,
        #[arg(long)]
        g: PathBuf,
        #[arg(long = "end", required = true)]
        ends: Vec<String>,
        #[arg(long, default_value_t = 0)]
        a: usize,
        /// Deepest level scanned in each cone
        #[arg(long, default_value_t = 40)]
        max_depth: usize,
    },
    /// First-passage series against the closed form of F^d
    Oracle {
        #[command(flatten)]
        spectral: Spectral,
        /// Largest distance; rows for 1..=d
        #[arg(long, default_value_t = 1)]
        d: usize,
        /// Truncation order
        #[arg(long = "N", default_value_t = 2000)]
        steps: usize,
        /// Use exact rational coefficients (N ≤ 200)
        #[arg(long)]
        exact: bool,
    },
    /// All acceptance checks; exit status 1 when any fails
    Suite {
        #[arg(long, default_value_t = suite::DEFAULT_SEED)]
        seed: u64,
    },
}

fn read_file(path: &Path) -> polytree::Result<String> {
    fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))
}

fn read_function(path: &Path, q: u32) -> polytree::Result<LocallyConstantFunction> {
    LocallyConstantFunction::parse(&read_file(path)?, q)
}

fn ends(specs: &[String], q: u32) -> polytree::Result<Vec<End>> {
    specs.iter().map(|s| parse_end(s, q)).collect()
}

fn probe_all<F>(probe: &Probe, q: u32, mut one: F) -> polytree::Result<Vec<ConvergenceReport>>
where
    F: FnMut(&End, &[usize], usize) -> polytree::Result<ConvergenceReport>,
{
    ends(&probe.ends, q)?
        .iter()
        .map(|xi| one(xi, &probe.depths.0, probe.a))
        .collect()
}

fn with_leading_column(name: &str, blocks: Vec<(String, CsvTable)>) -> CsvTable {
    let mut out = CsvTable::default();
    for (key, t) in blocks {
        if out.header.is_empty() {
            out.header = std::iter::once(name.to_string()).chain(t.header).collect();
        }
        for row in t.rows {
            out.push(std::iter::once(key.clone()).chain(row).collect());
        }
    }
    out
}

fn run(command: Command) -> polytree::Result<(CsvTable, bool)> {
    let table = match command {
        Command::Spectral(sp) => table::spectral_table(&sp.context()?),
        Command::Spherical {
            spectral,
            n,
            max_radius,
        } => {
            let spec = KernelSpec::new(spectral.context()?, n)?;
            table::profile_table(&spec.radial_profile(max_radius)?)
        }
        Command::Dirichlet { spectral, g, probe } => {
            let ctx = spectral.context()?;
            let g = read_function(&g, ctx.q())?;
            let h = dirichlet_solve(&ctx, &g);
            let reports = probe_all(&probe, ctx.q(), |xi, depths, a| {
                convergence_probe(&h, 0, &ctx, xi, a, depths, g.evaluate(xi))
            })?;
            table::probe_table(&reports)
        }
        Command::Riquier {
            spectral,
            n,
            g0,
            g1,
            g2,
            g3,
            g4,
            g5,
            g6,
            g7,
            probe,
        } => {
            let ctx = spectral.context()?;
            let given = [g0, g1, g2, g3, g4, g5, g6, g7];
            let count = n.unwrap_or_else(|| given.iter().take_while(|g| g.is_some()).count());
            if count == 0 || count > given.len() {
                return Err(Error::Parameter(format!(
                    "riquier needs between 1 and {} boundary functions, got {count}",
                    given.len()
                )));
            }
            let gs = given[..count]
                .iter()
                .enumerate()
                .map(|(k, p)| match p {
                    Some(p) => read_function(p, ctx.q()),
                    None => Err(Error::Parameter(format!("missing --g{k} for n = {count}"))),
                })
                .collect::<polytree::Result<Vec<_>>>()?;
            if let Some(k) = given[count..].iter().position(Option::is_some) {
                return Err(Error::Parameter(format!(
                    "--g{} given but n = {count}",
                    count + k
                )));
            }
            let (parts, _) = riquier_solve(&ctx, &gs)?;
            let mut blocks = Vec::new();
            for (k, g) in gs.iter().enumerate() {
                let partial = Evaluator::Sum(parts[..=k].to_vec());
                let reports = probe_all(&probe, ctx.q(), |xi, depths, a| {
                    convergence_probe(&partial, k, &ctx, xi, a, depths, g.evaluate(xi))
                })?;
                blocks.push((k.to_string(), table::probe_table(&reports)));
            }
            with_leading_column("k", blocks)
        }
        Command::Fatou {
            spectral,
            n,
            g,
            probe,
        } => {
            let ctx = spectral.context()?;
            let nu = BoundaryDistribution::parse(&read_file(&g)?, ctx.q())?;
            let f = poisson_transform(&ctx, n, nu.clone())?;
            let reports = probe_all(&probe, ctx.q(), |xi, depths, a| {
                convergence_probe(&f, n, &ctx, xi, a, depths, nu.density_at(xi))
            })?;
            table::probe_table(&reports)
        }
        Command::Maximal {
            spectral,
            n,
            g,
            ends: specs,
            a,
            max_depth,
        } => {
            let ctx = spectral.context()?;
            let q = ctx.q();
            let g = read_function(&g, q)?;
            let ca = c_a_constant(&ctx, n, a)?;
            let mut t = CsvTable::new(&["end", "a", "n", "Mg", "frak_M_a", "C_a", "C_a_Mg", "holds"]);
            for xi in ends(&specs, q)? {
                let mg = hl_maximal(q, &g, &xi);
                let big = frak_m_a(&ctx, n, &g, &xi, a, max_depth)?;
                t.push(vec![
                    xi.to_string(),
                    a.to_string(),
                    n.to_string(),
                    fmt_f64(mg),
                    fmt_f64(big),
                    fmt_f64(ca),
                    fmt_f64(ca * mg),
                    (big <= ca * mg).to_string(),
                ]);
            }
            t
        }
        Command::Oracle {
            spectral,
            d,
            steps,
            exact,
        } => {
            let ctx = spectral.context()?;
            let backend = if exact { Backend::Exact } else { Backend::Double };
            let fp = first_passage_table(ctx.q(), d, steps, backend)?;
            let rows = (1..=d)
                .map(|k| Ok((k, truncated_series(&fp, k, ctx.lambda)?)))
                .collect::<polytree::Result<Vec<_>>>()?;
            table::oracle_table(&ctx, steps, &rows)
        }
        Command::Suite { seed } => {
            let mut t = CsvTable::new(&["criterion", "title", "passed", "detail"]);
            let mut all = true;
            for outcome in suite::run_all(seed) {
                eprintln!("{outcome}");
                all &= outcome.passed;
                t.push(vec![
                    outcome.id.to_string(),
                    outcome.title.to_string(),
                    outcome.passed.to_string(),
                    outcome.detail.clone(),
                ]);
            }
            return Ok((t, all));
        }
    };
    Ok((table, true))
}

fn emit(table: &CsvTable, output: Option<&Path>) -> polytree::Result<()> {
    match output {
        Some(path) => {
            let file = fs::File::create(path)
                .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
            table.write_to(io::BufWriter::new(file))
        }
        None => {
            let stdout = io::stdout();
            let mut lock = stdout.lock();
            table.write_to(&mut lock)?;
            lock.flush()?;
            Ok(())
        }
    }
}

fn exit_code(err: &Error) -> u8 {
    match err {
        Error::Io(_) => 3,
        _ => 2,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = run(cli.command).and_then(|(table, ok)| {
        emit(&table, cli.output.as_deref())?;
        Ok(ok)
    });
    match result {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn depth_ranges() {
        assert_eq!("10:20:5".parse::<Depths>().unwrap().0, vec![10, 15, 20]);
        assert_eq!("3:3:1".parse::<Depths>().unwrap().0, vec![3]);
        assert!("10:5:1".parse::<Depths>().is_err());
        assert!("1:5:0".parse::<Depths>().is_err());
        assert!("1:5".parse::<Depths>().is_err());
    }

    #[test]
    fn command_definition_is_consistent() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
