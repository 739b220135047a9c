use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Parser)]
#[command(name = "fibersim", version, about = "Quantum fibrations, channels, correlations and polymer annealing")]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalOpts,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct GlobalOpts {
    /// Seed for every random choice of the run.
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,

    /// Override the command's numerical tolerance.
    #[arg(long, global = true)]
    pub tol: Option<f64>,

    /// Output directory for result, manifest and data files.
    #[arg(short, long, global = true)]
    pub out: Option<PathBuf>,

    /// Worker threads for multi-config runs.
    #[arg(long, global = true, default_value_t = 1)]
    pub jobs: usize,

    /// Format of standard output.
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    pub format: Format,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Finite topologies.
    #[command(subcommand)]
    Topology(TopologyCmd),
    /// Matrix *-algebras and orbits.
    #[command(subcommand)]
    Algebra(AlgebraCmd),
    /// Quantum channels.
    #[command(subcommand)]
    Channel(ChannelCmd),
    /// Evaluate a correlation functional on a state.
    Measure(MeasureArgs),
    /// Classify an operator against a functional.
    Classify(ClassifyArgs),
    /// Fibration bundles.
    #[command(subcommand)]
    Fibration(FibrationCmd),
    /// Polymer annealing and general evolution.
    #[command(subcommand)]
    Polymer(PolymerCmd),
    /// α-monotone homotopy grids.
    #[command(subcommand)]
    Alpha(AlphaCmd),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Topology(TopologyCmd::Validate { .. }) => "topology validate",
            Command::Algebra(AlgebraCmd::Commutant { .. }) => "algebra commutant",
            Command::Algebra(AlgebraCmd::Orbit { .. }) => "algebra orbit",
            Command::Channel(ChannelCmd::Check { .. }) => "channel check",
            Command::Measure(_) => "measure",
            Command::Classify(_) => "classify",
            Command::Fibration(FibrationCmd::Assemble { .. }) => "fibration assemble",
            Command::Fibration(FibrationCmd::Fiber { .. }) => "fibration fiber",
            Command::Polymer(PolymerCmd::Anneal(_)) => "polymer anneal",
            Command::Polymer(PolymerCmd::Evolve(_)) => "polymer evolve",
            Command::Alpha(AlphaCmd::Check { .. }) => "alpha check",
        }
    }
}

#[derive(Debug, Clone, Subcommand)]
pub enum TopologyCmd {
    /// Check the open-set axioms of a topology file.
    Validate { file: PathBuf },
}

#[derive(Debug, Clone, Subcommand)]
pub enum AlgebraCmd {
    /// Commutant of the algebra generated by a gate-set file.
    Commutant { file: PathBuf },
    /// Orbit of a state under a gate set.
    Orbit {
        /// Gate-set file.
        gates: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = fibersim::algebra::DEFAULT_ORBIT_DEPTH)]
        depth: usize,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum ChannelCmd {
    /// Trace preservation and complete positivity of a channel file.
    Check { file: PathBuf },
}

#[derive(Debug, Clone, Args)]
pub struct MeasureArgs {
    /// negativity, log-negativity, mutual-information, discord or ree.
    pub functional: String,
    #[arg(long)]
    pub state: PathBuf,
    /// Factors on side A, comma separated.
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub cut: Vec<usize>,
    /// Local dimensions, comma separated; qubits when omitted.
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Report entropic values in bits.
    #[arg(long)]
    pub bits: bool,
}

#[derive(Debug, Clone, Args)]
pub struct ClassifyArgs {
    /// Operator file: a named matrix.
    #[arg(long)]
    pub op: PathBuf,
    #[arg(long, default_value = "negativity")]
    pub functional: String,
    #[arg(long, value_delimiter = ',', default_value = "0")]
    pub cut: Vec<usize>,
    #[arg(long, value_delimiter = ',')]
    pub dims: Option<Vec<usize>>,
    /// Hilbert–Schmidt mixed probe states.
    #[arg(long, default_value_t = 200)]
    pub mixed: usize,
    /// Haar pure probe states.
    #[arg(long, default_value_t = 50)]
    pub pure: usize,
}

#[derive(Debug, Clone, Subcommand)]
pub enum FibrationCmd {
    /// Load a bundle directory and run the assembly checks.
    Assemble { dir: PathBuf },
    /// Fiber over one open set.
    Fiber {
        dir: PathBuf,
        /// Point labels of the open set, comma separated.
        #[arg(long, value_delimiter = ',')]
        open: Vec<String>,
        #[arg(long, default_value_t = fibersim::algebra::DEFAULT_ORBIT_DEPTH)]
        depth: usize,
    },
}

#[derive(Debug, Clone, Subcommand)]
pub enum PolymerCmd {
    /// Anneal from ⊗|+⟩ into the polymer ground state.
    Anneal(PolymerArgs),
    /// General evolution from non-interacting sites.
    Evolve(PolymerArgs),
}

#[derive(Debug, Clone, Args)]
pub struct PolymerArgs {
    /// TOML or JSON configs; several configs run as parallel jobs.
    #[arg(required = true)]
    pub configs: Vec<PathBuf>,
    /// Also write every step's state.
    #[arg(long)]
    pub dump_states: bool,
}

#[derive(Debug, Clone, Subcommand)]
pub enum AlphaCmd {
    /// Equivalence verdict of a homotopy grid.
    Check {
        #[arg(long)]
        grid: PathBuf,
        /// energy, entropy, table or a correlation functional.
        #[arg(long, default_value = "energy")]
        functional: String,
    },
}
