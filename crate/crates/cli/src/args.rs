use clap::{Args, Parser, Subcommand, ValueEnum};
use rss_median::mixture::Order;
use rss_median::{DensityKind, Error, ParentDensity, Result, SizeModel};
use std::path::PathBuf;

#[derive(Debug, Parser)]
#[command(name = "rss-median", version, about = "Second-order approximations for the median of a random-size sample")]
pub struct Cli {
    /// Worker threads for simulations (overrides RSS_MEDIAN_THREADS).
    #[arg(long, global = true)]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Evaluate a CDF approximation on an x-grid.
    Cdf(CdfArgs),
    /// Cornish-Fisher quantiles for a list of levels.
    Quantile(QuantileArgs),
    /// Negative moments of the sample size: expansion against exact summation.
    Negmoment(NegMomentArgs),
    /// Simulate the normalized median and tabulate its empirical CDF.
    Simulate(SimulateArgs),
    /// Sup distances to each approximation order over several n, with slopes.
    Study(StudyArgs),
    /// Random means under the three classic scalings.
    Demo3(Demo3Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ParentName {
    Normal,
    Student,
    Triangular,
    Uniform,
    Laplace,
}

#[derive(Debug, Clone, Args)]
pub struct ParentArgs {
    /// Parent density of the observations.
    #[arg(long, value_enum, default_value = "normal")]
    pub parent: ParentName,
    /// Degrees of freedom of the Student parent.
    #[arg(long, default_value_t = 3.0)]
    pub nu: f64,
    /// Half-width of the triangular or uniform parent.
    #[arg(long, default_value_t = 1.0)]
    pub a: f64,
    /// Standard deviation of the Laplace parent.
    #[arg(long, default_value_t = 1.0)]
    pub mu: f64,
}

impl ParentArgs {
    pub fn density(&self) -> Result<ParentDensity> {
        let kind = match self.parent {
            ParentName::Normal => DensityKind::Normal,
            ParentName::Student => DensityKind::StudentT { nu: self.nu },
            ParentName::Triangular => DensityKind::Triangular { a: self.a },
            ParentName::Uniform => DensityKind::Uniform { a: self.a },
            ParentName::Laplace => DensityKind::Laplace { mu: self.mu },
        };
        ParentDensity::new(kind)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    /// Shifted negative binomial sizes (Student limit).
    Nb,
    /// Maximum of discrete Pareto variables (Laplace limit).
    Pareto,
    /// Non-random sample size m (normal limit).
    Fixed,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    #[arg(long, value_enum, default_value = "nb")]
    pub model: ModelName,
    /// Shape of the negative binomial model.
    #[arg(long, default_value_t = 2.0)]
    pub r: f64,
    /// Pareto tail parameter.
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    /// Size index of the random models.
    #[arg(long, default_value_t = 100)]
    pub n: u64,
    /// Sample size of the fixed model.
    #[arg(long, default_value_t = 100)]
    pub m: u64,
}

impl ModelArgs {
    pub fn size_model(&self) -> Result<Option<SizeModel>> {
        match self.model {
            ModelName::Nb => SizeModel::neg_binomial(self.r, self.n).map(Some),
            ModelName::Pareto => SizeModel::pareto_max(self.s, self.n).map(Some),
            ModelName::Fixed => Ok(None),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OrderName {
    Limit,
    First,
    Second,
}

impl From<OrderName> for Order {
    fn from(o: OrderName) -> Order {
        match o {
            OrderName::Limit => Order::LimitOnly,
            OrderName::First => Order::FirstOrder,
            OrderName::Second => Order::SecondOrder,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Csv,
    Json,
}

#[derive(Debug, Clone, Args)]
pub struct OutputArgs {
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    /// Write the table here instead of standard output.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// Closed-form expansion.
    Closed,
    /// Quadrature of the mixture integral (random models only).
    Numeric,
}

#[derive(Debug, Clone, Args)]
pub struct CdfArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub parent: ParentArgs,
    #[arg(long, value_enum, default_value = "second")]
    pub order: OrderName,
    /// Grid as lo:hi:step.
    #[arg(long, allow_hyphen_values = true, default_value = "-3:3:0.5")]
    pub x: String,
    #[arg(long, value_enum, default_value = "closed")]
    pub method: Method,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct QuantileArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub parent: ParentArgs,
    /// Comma-separated levels in (0, 1).
    #[arg(long, default_value = "0.9,0.95,0.99")]
    pub alpha: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct NegMomentArgs {
    #[arg(long, value_enum, default_value = "nb")]
    pub model: ModelName,
    #[arg(long, default_value_t = 2.0)]
    pub r: f64,
    #[arg(long, default_value_t = 1.0)]
    pub s: f64,
    /// Order of the negative moment.
    #[arg(long, default_value_t = 1.0)]
    pub p: f64,
    /// Comma-separated size indices.
    #[arg(long, default_value = "10,30,100,300,1000")]
    pub n: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScalingName {
    /// 2 p0 sqrt(g_n N* / N)
    Mixed,
    /// 2 p0 sqrt(g_n)
    Plain,
}

#[derive(Debug, Clone, Args)]
pub struct SimArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[command(flatten)]
    pub parent: ParentArgs,
    #[arg(long, default_value_t = 100_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    /// Location of the parent.
    #[arg(long, default_value_t = 0.0, allow_hyphen_values = true)]
    pub theta: f64,
    /// Normalization of the random-size median.
    #[arg(long, value_enum, default_value = "mixed")]
    pub scaling: ScalingName,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Grid as lo:hi:step for the empirical CDF table.
    #[arg(long, allow_hyphen_values = true, default_value = "-6:6:0.01")]
    pub x: String,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct StudyArgs {
    #[command(flatten)]
    pub sim: SimArgs,
    /// Comma-separated size indices (m values for the fixed model).
    #[arg(long = "ns", default_value = "20,50,100,200")]
    pub ns: String,
    /// Comma-separated approximation orders.
    #[arg(long, value_enum, value_delimiter = ',', default_value = "limit,first,second")]
    pub orders: Vec<OrderName>,
    #[command(flatten)]
    pub output: OutputArgs,
}

#[derive(Debug, Clone, Args)]
pub struct Demo3Args {
    /// Mean of the geometric sample size.
    #[arg(long, default_value_t = 1000)]
    pub n: u64,
    #[arg(long, default_value_t = 1_000_000)]
    pub reps: u64,
    #[arg(long, default_value_t = 42)]
    pub seed: u64,
    #[command(flatten)]
    pub output: OutputArgs,
}

/// `lo:hi:step`, inclusive of both ends.
pub fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::Domain(format!("grid must look like lo:hi:step, got {spec:?}"));
    let parts: Vec<&str> = spec.split(':').collect();
    if parts.len() != 3 {
        return Err(bad());
    }
    let v: Vec<f64> = parts.iter().map(|p| p.trim().parse::<f64>()).collect::<std::result::Result<_, _>>().map_err(|_| bad())?;
    let (lo, hi, step) = (v[0], v[1], v[2]);
    if !(lo.is_finite() && hi.is_finite() && step.is_finite()) || step <= 0.0 || hi < lo {
        return Err(Error::Domain(format!("grid needs finite lo <= hi and step > 0, got {spec:?}")));
    }
    let k = ((hi - lo) / step * (1.0 + 1e-12)).floor();
    if k > 1e7 {
        return Err(Error::Domain(format!("grid {spec:?} has more than 1e7 points")));
    }
    Ok((0..=k as usize).map(|i| lo + step * i as f64).collect())
}

pub fn parse_list<T: std::str::FromStr>(spec: &str, what: &str) -> Result<Vec<T>> {
    spec.split(',')
        .map(|p| p.trim().parse::<T>().map_err(|_| Error::Domain(format!("cannot read {what} {p:?} in {spec:?}"))))
        .collect()
}

pub fn parse_alphas(spec: &str) -> Result<Vec<f64>> {
    let v: Vec<f64> = parse_list(spec, "level")?;
    if let Some(a) = v.iter().find(|a| !(**a > 0.0 && **a < 1.0)) {
        return Err(Error::Domain(format!("levels must lie strictly inside (0, 1), got {a}")));
    }
    Ok(v)
}
