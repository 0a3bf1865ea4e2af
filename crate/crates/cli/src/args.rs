use std::path::PathBuf;
use std::str::FromStr;

use clap::{Args, Parser, Subcommand, ValueEnum};
use uadb_core::io::ModelKind;
use uadb_core::worlds::{BUDGET_ENV, DEFAULT_WORLD_BUDGET};
use uadb_core::Semiring;

#[derive(Parser, Debug)]
#[command(
    name = "uadb",
    version,
    about = "Label, query and verify uncertainty-annotated databases"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Label uncertain inputs and write the UA-database as JSON.
    Label(LabelArgs),
    /// Evaluate a query over a UA-database.
    Query(QueryArgs),
    /// Compare labeled answers with exact certain answers.
    Verify(VerifyArgs),
    /// Print the rewritten query over encoded relations.
    Rewrite(RewriteArgs),
    #[command(subcommand)]
    Experiment(Experiment),
}

/// `kind:name=path`, e.g. `x:ADDR=addr.csv`.
#[derive(Clone, Debug, PartialEq)]
pub struct InputSpec {
    pub kind: ModelKind,
    pub name: String,
    pub path: PathBuf,
}

impl FromStr for InputSpec {
    type Err = String;

    fn from_str(s: &str) -> Result<InputSpec, String> {
        let (kind, rest) = s.split_once(':').ok_or("expected kind:name=path")?;
        let (name, path) = rest.split_once('=').ok_or("expected kind:name=path")?;
        if name.is_empty() || path.is_empty() {
            return Err("relation name and path must be non-empty".into());
        }
        Ok(InputSpec {
            kind: kind.parse().map_err(|e: uadb_core::Error| e.to_string())?,
            name: name.to_string(),
            path: path.into(),
        })
    }
}

/// `name=path`.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedPath {
    pub name: String,
    pub path: PathBuf,
}

impl FromStr for NamedPath {
    type Err = String;

    fn from_str(s: &str) -> Result<NamedPath, String> {
        let (name, path) = s.split_once('=').ok_or("expected name=path")?;
        Ok(NamedPath {
            name: name.to_string(),
            path: path.into(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SemiringArg {
    /// Bags.
    N,
    /// Sets.
    B,
}

impl SemiringArg {
    pub fn semiring(self) -> Semiring {
        match self {
            SemiringArg::N => Semiring::Natural,
            SemiringArg::B => Semiring::Boolean,
        }
    }
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Format {
    #[default]
    Table,
    Json,
    Csv,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, ValueEnum)]
pub enum Mode {
    /// Tuple-level annotations.
    #[default]
    Ua,
    /// Attribute-level annotations.
    Uaa,
}

#[derive(Args, Clone, Debug)]
pub struct InputArgs {
    /// Uncertain relation as `kind:name=path`; kind is ti, x, ctable or det.
    #[arg(short = 'i', long = "input", value_name = "KIND:NAME=PATH")]
    pub inputs: Vec<InputSpec>,
    /// Variable domains of a C-table input, as `name=path`.
    #[arg(long, value_name = "NAME=PATH")]
    pub vars: Vec<NamedPath>,
    #[arg(long, value_enum, default_value = "n")]
    pub semiring: SemiringArg,
    /// Pick best-guess alternatives at random from this seed instead of
    /// taking the first one. Only used when inputs carry no probabilities.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Keep optional tuples in the best-guess world.
    #[arg(long)]
    pub include_optional: bool,
    /// Largest number of world-tuples the exact oracle may enumerate.
    #[arg(long, env = BUDGET_ENV, default_value_t = DEFAULT_WORLD_BUDGET)]
    pub budget: u128,
}

#[derive(Args, Debug)]
pub struct LabelArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// Write here instead of standard output.
    #[arg(short, long)]
    pub output: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct QueryArgs {
    /// Query as an s-expression, e.g. `(project (state) (rel R))`.
    pub query: String,
    #[command(flatten)]
    pub input: InputArgs,
    /// A UA-database written by `label`.
    #[arg(long)]
    pub db: Option<PathBuf>,
    /// Attribute-annotated relation as `name=path`; cells ending in `!u` are uncertain.
    #[arg(short = 'a', long = "annotated", value_name = "NAME=PATH")]
    pub annotated: Vec<NamedPath>,
    #[arg(long, value_enum, default_value = "ua")]
    pub mode: Mode,
    /// Print SQL for the rewritten query instead of running it.
    #[arg(long)]
    pub emit_sql: bool,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    pub query: String,
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum LabelingKind {
    Ti,
    X,
    Ctable,
}

#[derive(Args, Debug)]
pub struct RewriteArgs {
    /// Query to rewrite. Omit when only printing labeling SQL.
    pub query: Option<String>,
    /// Print SQL rather than the rewritten algebra.
    #[arg(long)]
    pub sql: bool,
    /// Print the SQL that labels a stored relation of this kind.
    #[arg(long, value_enum)]
    pub labeling: Option<LabelingKind>,
    #[arg(long, default_value = "R")]
    pub relation: String,
    /// Value attributes of the stored relation.
    #[arg(long, value_delimiter = ',')]
    pub attrs: Vec<String>,
    #[arg(long, default_value = "P")]
    pub prob: String,
    #[arg(long, default_value = "Xid")]
    pub xid: String,
    #[arg(long, default_value = "Aid")]
    pub altid: String,
    /// Variable columns of a C-table.
    #[arg(long, value_delimiter = ',')]
    pub var_cols: Vec<String>,
    #[arg(long, default_value = "LC")]
    pub condition: String,
}

#[derive(Subcommand, Debug)]
pub enum Experiment {
    /// False-negative rate of labeled projections over synthetic x-DBs.
    Fnr(FnrArgs),
    /// Precision and recall of certain and best-guess answers.
    Utility(UtilityArgs),
    /// Soundness of labels over the access-control semiring.
    Access(AccessArgs),
}

#[derive(Args, Clone, Debug)]
pub struct FnrArgs {
    #[arg(long, default_value_t = 1000)]
    pub rows: usize,
    #[arg(long, default_value_t = 8)]
    pub cols: usize,
    /// Fraction of uncertain cells.
    #[arg(long, default_value_t = 0.1)]
    pub rate: f64,
    /// Random projections per width.
    #[arg(long, default_value_t = 9)]
    pub queries: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Args, Clone, Debug)]
pub struct UtilityArgs {
    #[arg(long, default_value_t = 500)]
    pub rows: usize,
    /// Corruption rates in percent.
    #[arg(long, value_delimiter = ',', default_value = "10,30,50")]
    pub rates: Vec<u32>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, value_enum, default_value = "table")]
    pub format: Format,
}

#[derive(Args, Clone, Debug)]
pub struct AccessArgs {
    #[arg(long, default_value_t = 500)]
    pub trials: usize,
    #[arg(long, default_value_t = 4)]
    pub worlds: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn input_spec_parses() {
        let s: InputSpec = "x:ADDR=data/addr.csv".parse().unwrap();
        assert_eq!(s.kind, ModelKind::X);
        assert_eq!(s.name, "ADDR");
        assert_eq!(s.path, PathBuf::from("data/addr.csv"));
        assert!("x:ADDR".parse::<InputSpec>().is_err());
        assert!("zz:A=b".parse::<InputSpec>().is_err());
    }

    #[test]
    fn cli_is_well_formed() {
        use clap::CommandFactory;
        Cli::command().debug_assert();
    }
}
