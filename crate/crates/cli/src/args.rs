use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "domex", version, about = "Substitutions, return words and self-affine domain exchanges")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the incidence matrix and the substitution.
    Analyze {
        #[command(flatten)]
        input: Input,
        /// Print the substitution in canonical DSL form.
        #[arg(long)]
        emit_dsl: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Return words to a prefix and the return substitution.
    Derive {
        #[command(flatten)]
        input: Input,
        /// Prefix of the fixed point.
        #[arg(long)]
        u: String,
        /// Print the return substitution in DSL form.
        #[arg(long)]
        emit_dsl: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Build the proper substitution and its conjugacy certificate.
    Properize {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        u: Option<String>,
        #[arg(long, default_value = "domex-out")]
        out: PathBuf,
    },
    /// Build the exchange cloud and export it.
    Build(Run),
    /// Build and verify; exits 1 if a check fails.
    Verify(Run),
    /// All stages and all artifacts.
    Pipeline(Run),
    /// Build and write the SVG and PNG figures.
    Render(Run),
}

#[derive(Debug, Args, Clone)]
pub struct Input {
    /// Substitution file in the DSL.
    #[arg(conflicts_with_all = ["preset", "dsl"])]
    pub file: Option<PathBuf>,
    /// Bundled example by name.
    #[arg(long, conflicts_with = "dsl")]
    pub preset: Option<String>,
    /// Substitution given inline, rules separated by `;` or newlines.
    #[arg(long)]
    pub dsl: Option<String>,
}

#[derive(Debug, Args, Clone)]
pub struct Run {
    #[command(flatten)]
    pub input: Input,
    /// Return-word prefix used for properization (default: the seed letter).
    #[arg(long)]
    pub u: Option<String>,
    /// Tower level of the pieces (default: least atom-constant level).
    #[arg(long)]
    pub level: Option<usize>,
    /// Series depth of F (default: least depth with certified tail below --tol).
    #[arg(long)]
    pub depth: Option<usize>,
    /// Orbit positions sampled (default: enough for the doubled raster).
    #[arg(long)]
    pub points: Option<usize>,
    /// Cells per axis of the piece raster; a power of two.
    #[arg(long)]
    pub resolution: Option<usize>,
    /// Cells per axis of the torus raster; a power of two.
    #[arg(long)]
    pub torus_resolution: Option<usize>,
    /// Bound on the certified tail of the series for F.
    #[arg(long, default_value_t = 1e-8)]
    pub tol: f64,
    /// Seed for randomized controls.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Skip the unimodular Pisot precondition; the hypotheses are still checked.
    #[arg(long)]
    pub force: bool,
    /// Rows written to cloud.csv; 0 writes every point.
    #[arg(long, default_value_t = 100_000)]
    pub csv_rows: usize,
    #[arg(long, default_value = "domex-out")]
    pub out: PathBuf,
}
