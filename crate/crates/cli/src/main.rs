mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::{Config, OpKind};

#[derive(Debug)]
pub enum CliError {
    /// Bad input: malformed config, invalid parameter, unwritable output.
    Validation(String),
    /// A numerical iteration failed to converge or overflowed.
    Numerical(String),
}

impl CliError {
    fn exit_code(&self) -> u8 {
        match self {
            CliError::Validation(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Validation(m) => write!(f, "error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl From<bumplab::Error> for CliError {
    fn from(e: bumplab::Error) -> Self {
        if e.is_numerical() {
            CliError::Numerical(e.to_string())
        } else {
            CliError::Validation(e.to_string())
        }
    }
}

#[derive(Parser, Debug)]
#[command(name = "bumplab", version, about = "Two-weight bump constants and commutator compactness probes on a 1-D grid")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Luxemburg norm of f over one cube for Phi(t) = t^p log(e+t)^a.
    Orlicz {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        a: Option<f64>,
        /// Cube as START,LEN in cells (default: whole grid).
        #[arg(long, value_parser = parse_cube)]
        cube: Option<bumplab::Cube>,
    },
    /// BMO norm of the symbol b over a cube family.
    Bmo {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        b: Option<String>,
        #[command(flatten)]
        family: FamilyArgs,
    },
    /// A_p constant of the weight u.
    Ap {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        u: Option<String>,
        #[command(flatten)]
        family: FamilyArgs,
    },
    /// Two-weight bump constant of (u, v).
    Bump {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        weights: WeightArgs,
        #[command(flatten)]
        bump: BumpArgs,
        #[command(flatten)]
        family: FamilyArgs,
        /// Also emit every per-cube value.
        #[arg(long)]
        per_cube: bool,
    },
    /// Weight generation.
    Weights {
        #[command(subcommand)]
        action: WeightsAction,
    },
    /// Operator evaluation.
    Op {
        #[command(subcommand)]
        action: OpAction,
    },
    /// Compactness probes of the commutator.
    Probe {
        #[command(subcommand)]
        action: ProbeAction,
    },
    /// Singular value decay of [b_cmo, T^eta] against a BMO-matched [b_bmo, T^eta].
    Compare {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        weights: WeightArgs,
        #[command(flatten)]
        operator: OperatorArgs,
        #[arg(long)]
        b: Option<String>,
        #[arg(long)]
        b_bmo: Option<String>,
        #[arg(long, value_delimiter = ',')]
        k_list: Option<Vec<usize>>,
        #[command(flatten)]
        family: FamilyArgs,
    },
}

#[derive(Subcommand, Debug)]
enum WeightsAction {
    /// Write u and M^k u as CSV.
    Gen {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        u: Option<String>,
        /// Iteration count (default floor(2p) + 1).
        #[arg(long)]
        k: Option<usize>,
    },
}

#[derive(Subcommand, Debug)]
enum OpAction {
    /// Apply M, T^eta, T#, or [b, T^eta] to f.
    Apply {
        #[command(flatten)]
        common: Common,
        #[arg(long, value_enum)]
        op: Option<OpKind>,
        #[arg(long)]
        f: Option<String>,
        #[arg(long)]
        b: Option<String>,
        #[command(flatten)]
        operator: OperatorArgs,
    },
}

#[derive(Subcommand, Debug)]
enum ProbeAction {
    /// Kolmogorov–Riesz probes on a seeded unit-ball sample.
    Kr {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        weights: WeightArgs,
        #[command(flatten)]
        operator: OperatorArgs,
        #[arg(long)]
        b: Option<String>,
        #[arg(long)]
        count: Option<usize>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        n_list: Option<Vec<f64>>,
        /// Shifts in cells.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        shifts: Option<Vec<i64>>,
        /// Permit shifts of eta/4 or more.
        #[arg(long)]
        allow_large_shift: bool,
        /// Radius for the pointwise tail constant.
        #[arg(long)]
        n0: Option<f64>,
    },
    /// Singular values of the commutator as an operator L^2(v) -> L^2(u).
    Svd {
        #[command(flatten)]
        common: Common,
        #[command(flatten)]
        weights: WeightArgs,
        #[command(flatten)]
        operator: OperatorArgs,
        #[arg(long)]
        b: Option<String>,
        #[arg(long, value_delimiter = ',')]
        k_list: Option<Vec<usize>>,
    },
}

#[derive(Args, Debug)]
struct Common {
    /// JSON config (or a previous report); flags override it.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Grid half-width.
    #[arg(long = "L")]
    half_width: Option<f64>,
    /// Number of cells (power of two).
    #[arg(long)]
    m: Option<usize>,
    #[arg(long)]
    p: Option<f64>,
}

#[derive(Args, Debug)]
struct WeightArgs {
    #[arg(long)]
    u: Option<String>,
    /// A profile or `Mk:u`.
    #[arg(long)]
    v: Option<String>,
}

#[derive(Args, Debug)]
struct BumpArgs {
    #[arg(long)]
    delta: Option<f64>,
    #[arg(long)]
    preset: Option<String>,
    #[arg(long)]
    a_left: Option<f64>,
    #[arg(long)]
    a_right: Option<f64>,
}

#[derive(Args, Debug)]
struct FamilyArgs {
    /// `dyadic` or `shifted`.
    #[arg(long)]
    family: Option<String>,
}

#[derive(Args, Debug)]
struct OperatorArgs {
    #[arg(long)]
    eta_cells: Option<f64>,
}

fn parse_cube(s: &str) -> Result<bumplab::Cube, String> {
    let (a, b) = s.split_once(',').ok_or("expected START,LEN")?;
    let start = a.trim().parse().map_err(|_| format!("bad start `{a}`"))?;
    let len = b.trim().parse().map_err(|_| format!("bad length `{b}`"))?;
    Ok(bumplab::Cube::new(start, len))
}

impl Common {
    fn load(&self) -> Result<Config, CliError> {
        let mut c = match &self.config {
            Some(path) => Config::load(path)?,
            None => Config::default(),
        };
        set(&mut c.grid.half_width, self.half_width);
        if let (Some(new), Some(old)) = (self.m, c.grid.m) {
            // A family spanning the old grid keeps spanning the new one.
            if let Some(family) = &mut c.bump.family {
                let (bumplab::CubeFamily::Dyadic { max_cells, .. } | bumplab::CubeFamily::Shifted { max_cells, .. }) =
                    family;
                if *max_cells == old {
                    *max_cells = new;
                }
            }
        }
        set(&mut c.grid.m, self.m);
        set(&mut c.bump.p, self.p);
        set(&mut c.output.dir, self.out.clone());
        Ok(c)
    }
}

fn set<T>(slot: &mut Option<T>, value: Option<T>) {
    if value.is_some() {
        *slot = value;
    }
}

fn profile(slot: &mut Option<bumplab::Profile>, value: &Option<String>) -> Result<(), CliError> {
    if let Some(s) = value {
        *slot = Some(config::parse_profile(s)?);
    }
    Ok(())
}

impl WeightArgs {
    fn apply(&self, c: &mut Config) -> Result<(), CliError> {
        profile(&mut c.weights.u, &self.u)?;
        if let Some(v) = &self.v {
            c.weights.v = Some(v.parse()?);
        }
        Ok(())
    }
}

impl FamilyArgs {
    /// Needs the grid size, so it runs after the other overrides.
    fn apply(&self, c: &mut Config) -> Result<(), CliError> {
        let Some(kind) = &self.family else { return Ok(()) };
        let m = c.grid.m.unwrap_or(256);
        c.bump.family = Some(match kind.as_str() {
            "dyadic" => bumplab::CubeFamily::Dyadic { min_cells: 1, max_cells: m },
            "shifted" => bumplab::CubeFamily::Shifted { min_cells: 1, max_cells: m },
            other => return Err(CliError::Validation(format!("unknown cube family `{other}`"))),
        });
        Ok(())
    }
}

impl BumpArgs {
    fn apply(&self, c: &mut Config) -> Result<(), CliError> {
        set(&mut c.bump.delta, self.delta);
        if let Some(p) = &self.preset {
            c.bump.preset = Some(p.parse()?);
            if self.a_left.is_none() && self.a_right.is_none() {
                c.bump.a_left = None;
                c.bump.a_right = None;
            }
        }
        set(&mut c.bump.a_left, self.a_left);
        set(&mut c.bump.a_right, self.a_right);
        Ok(())
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Orlicz { common, f, a, cube } => {
            let mut c = common.load()?;
            profile(&mut c.orlicz.f, &f)?;
            set(&mut c.orlicz.a, a);
            set(&mut c.orlicz.cube, cube);
            // --p sets the Orlicz exponent here.
            set(&mut c.orlicz.p, common.p);
            commands::orlicz(c)
        }
        Command::Bmo { common, b, family } => {
            let mut c = common.load()?;
            profile(&mut c.symbol.b, &b)?;
            family.apply(&mut c)?;
            commands::bmo(c)
        }
        Command::Ap { common, u, family } => {
            let mut c = common.load()?;
            profile(&mut c.weights.u, &u)?;
            family.apply(&mut c)?;
            commands::ap(c)
        }
        Command::Bump {
            common,
            weights,
            bump,
            family,
            per_cube,
        } => {
            let mut c = common.load()?;
            weights.apply(&mut c)?;
            bump.apply(&mut c)?;
            family.apply(&mut c)?;
            if per_cube {
                c.bump.per_cube = Some(true);
            }
            commands::bump(c)
        }
        Command::Weights {
            action: WeightsAction::Gen { common, u, k },
        } => {
            let mut c = common.load()?;
            profile(&mut c.weights.u, &u)?;
            set(&mut c.weights.k, k);
            commands::weights_gen(c)
        }
        Command::Op {
            action: OpAction::Apply {
                common,
                op,
                f,
                b,
                operator,
            },
        } => {
            let mut c = common.load()?;
            set(&mut c.operator.op, op);
            profile(&mut c.operator.f, &f)?;
            profile(&mut c.symbol.b, &b)?;
            set(&mut c.operator.eta_cells, operator.eta_cells);
            commands::op_apply(c)
        }
        Command::Probe {
            action:
                ProbeAction::Kr {
                    common,
                    weights,
                    operator,
                    b,
                    count,
                    seed,
                    n_list,
                    shifts,
                    allow_large_shift,
                    n0,
                },
        } => {
            let mut c = common.load()?;
            weights.apply(&mut c)?;
            set(&mut c.operator.eta_cells, operator.eta_cells);
            profile(&mut c.symbol.b, &b)?;
            let kr = &mut c.probes.kr;
            set(&mut kr.count, count);
            set(&mut kr.seed, seed);
            set(&mut kr.n_list, n_list);
            set(&mut kr.shift_list, shifts);
            set(&mut kr.n0, n0);
            if allow_large_shift {
                kr.allow_large_shift = Some(true);
            }
            commands::probe_kr(c)
        }
        Command::Probe {
            action:
                ProbeAction::Svd {
                    common,
                    weights,
                    operator,
                    b,
                    k_list,
                },
        } => {
            let mut c = common.load()?;
            weights.apply(&mut c)?;
            set(&mut c.operator.eta_cells, operator.eta_cells);
            profile(&mut c.symbol.b, &b)?;
            set(&mut c.probes.spectral.k_list, k_list);
            commands::probe_svd(c)
        }
        Command::Compare {
            common,
            weights,
            operator,
            b,
            b_bmo,
            k_list,
            family,
        } => {
            let mut c = common.load()?;
            weights.apply(&mut c)?;
            set(&mut c.operator.eta_cells, operator.eta_cells);
            profile(&mut c.symbol.b, &b)?;
            profile(&mut c.symbol.b_bmo, &b_bmo)?;
            set(&mut c.probes.spectral.k_list, k_list);
            family.apply(&mut c)?;
            commands::compare(c)
        }
    }
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(raw) = std::env::var("BUMPLAB_THREADS") else { return Ok(()) };
    let threads: usize = raw
        .trim()
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Validation(format!("BUMPLAB_THREADS must be a positive integer, got `{raw}`")))?;
    bumplab::exec::configure_threads(threads);
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match configure_threads().and_then(|()| run(cli)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code())
        }
    }
}
