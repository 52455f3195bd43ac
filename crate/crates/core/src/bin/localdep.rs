use std::fmt::Write as _;
use std::fs;
use std::io::{self, Write as _};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use localdep::output::{self, axis_name, format_value};
use localdep::{
    solve_reference_point, sweep, Error, ErrorClass, GaussianModel, GridAxis, GridSpec,
    LocalDependence, Point, SolverOptions,
};

/// Appends one line to a command's output buffer.
macro_rules! outln {
    ($out:expr, $($arg:tt)*) => {
        let _ = writeln!($out, $($arg)*);
    };
}

const BUNDLED_POINTS: &str = include_str!("../../data/table_points.csv");

/// Local dependence functions for Gaussian models.
///
/// Models are JSON files of the form
/// {"mean":[0,0,0],"cov":[[1,0.5,0.3],[0.5,1,0.4],[0.3,0.4,1]]}.
/// Axes are named x, y, z for up to three variables and x1..xn otherwise;
/// 1-based indices are accepted too.
///
/// Exit codes: 0 success, 2 invalid input, 3 computation error,
/// 4 solver did not converge.
#[derive(Parser)]
#[command(name = "localdep", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Model JSON file.
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Decimal places for printed values.
    #[arg(long, default_value_t = 4)]
    precision: usize,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate H at one point and print φ and the ρ terms.
    Eval {
        #[command(flatten)]
        common: Common,
        /// Comma-separated coordinates, e.g. 0,0,1.
        #[arg(long, allow_hyphen_values = true)]
        point: String,
    },
    /// Evaluate H over a grid and write CSV (and optionally an SVG heatmap).
    Grid {
        #[command(flatten)]
        common: Common,
        /// Fixed coordinate, AXIS=VALUE. Repeatable.
        #[arg(long = "fix", value_name = "AXIS=VALUE", allow_hyphen_values = true)]
        fix: Vec<String>,
        /// Swept axis, AXIS=LO:HI:COUNT (endpoints included). Repeatable.
        #[arg(
            long = "range",
            value_name = "AXIS=LO:HI:COUNT",
            allow_hyphen_values = true
        )]
        range: Vec<String>,
        /// CSV output with header "<axis1>,<axis2>,H".
        #[arg(long, value_name = "FILE")]
        csv: PathBuf,
        /// SVG heatmap output; needs exactly two swept axes.
        #[arg(long, value_name = "FILE")]
        svg: Option<PathBuf>,
    },
    /// Print f and H at each point of a CSV points file.
    Table {
        #[command(flatten)]
        common: Common,
        /// Points CSV; defaults to the bundled verified table points (3 variables).
        #[arg(long, value_name = "FILE")]
        points: Option<PathBuf>,
    },
    /// Solve for the reference point where every conditional mean equals its mean.
    Saddle {
        #[command(flatten)]
        common: Common,
        /// Starting point; defaults to the origin.
        #[arg(long, allow_hyphen_values = true)]
        start: Option<String>,
        #[arg(long, default_value_t = 100)]
        max_iter: usize,
        #[arg(long, default_value_t = 1e-10)]
        tol: f64,
    },
}

/// Failure with its exit code.
struct Failure {
    code: u8,
    message: String,
}

impl Failure {
    fn input(message: impl Into<String>) -> Self {
        Self {
            code: 2,
            message: message.into(),
        }
    }
}

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        let code = match e.class() {
            ErrorClass::Validation => 2,
            ErrorClass::Computation => 3,
            ErrorClass::NoConvergence => 4,
        };
        Self {
            code,
            message: e.to_string(),
        }
    }
}

type CliResult<T = ()> = Result<T, Failure>;

fn load_model(path: &Path) -> CliResult<GaussianModel> {
    let text =
        fs::read_to_string(path).map_err(|e| Failure::input(format!("{}: {e}", path.display())))?;
    GaussianModel::from_json(&text).map_err(|e| Failure::input(format!("{}: {e}", path.display())))
}

fn parse_coords(text: &str, dim: usize, what: &str) -> CliResult<Point> {
    let coords = text
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| Failure::input(format!("{what}: {e}")))?;
    if coords.len() != dim {
        return Err(Failure::input(format!(
            "{what}: expected {dim} coordinates, got {}",
            coords.len()
        )));
    }
    Point::new(coords).map_err(Failure::from)
}

fn split_assignment<'a>(text: &'a str, flag: &str, dim: usize) -> CliResult<(usize, &'a str)> {
    let (name, value) = text
        .split_once('=')
        .ok_or_else(|| Failure::input(format!("--{flag} {text}: expected AXIS=...")))?;
    let axis = output::parse_axis(name, dim).ok_or_else(|| {
        Failure::input(format!(
            "--{flag} {text}: unknown axis '{name}' for a {dim}-variable model"
        ))
    })?;
    Ok((axis, value))
}

fn parse_number(text: &str, context: &str) -> CliResult<f64> {
    text.trim()
        .parse::<f64>()
        .map_err(|e| Failure::input(format!("{context}: '{text}': {e}")))
}

fn parse_range(text: &str, dim: usize) -> CliResult<GridAxis> {
    let (axis, value) = split_assignment(text, "range", dim)?;
    let context = format!("--range {text}");
    let parts: Vec<&str> = value.split(':').collect();
    let [lo, hi, count] = parts[..] else {
        return Err(Failure::input(format!("{context}: expected LO:HI:COUNT")));
    };
    let count = count
        .trim()
        .parse::<usize>()
        .map_err(|e| Failure::input(format!("{context}: count '{count}': {e}")))?;
    Ok(GridAxis {
        axis,
        lo: parse_number(lo, &context)?,
        hi: parse_number(hi, &context)?,
        count,
    })
}

fn run_eval(out: &mut String, common: &Common, point: &str) -> CliResult {
    let model = load_model(&common.model)?;
    let p = parse_coords(point, model.dim(), "--point")?;
    let ld = LocalDependence::new(&model)?;
    let result = match model.dim() {
        2 => ld.h_bivariate(&p)?,
        3 => ld.h_trivariate(&p)?,
        _ => ld.h_nvariate(&p)?,
    };
    let prec = common.precision;
    let list = |v: &[f64]| {
        v.iter()
            .map(|x| format_value(*x, prec))
            .collect::<Vec<_>>()
            .join(", ")
    };
    outln!(out, "H = {}", format_value(result.h_value, prec));
    outln!(out, "numerator = {}", format_value(result.numerator, prec));
    outln!(
        out,
        "denominator = {}",
        format_value(result.denominator, prec)
    );
    outln!(out, "phi = {}", list(&result.phi.phi));
    outln!(out, "xi = {}", list(&result.phi.xi));
    for (s, r) in &result.rho_terms {
        outln!(out, "rho{s} = {}", format_value(*r, prec));
    }
    Ok(())
}

fn write_outputs(files: &[(&Path, String)]) -> CliResult {
    for (k, (path, contents)) in files.iter().enumerate() {
        if let Err(e) = fs::write(path, contents) {
            for (written, _) in &files[..=k] {
                let _ = fs::remove_file(written);
            }
            return Err(Failure {
                code: 3,
                message: format!("{}: {e}", path.display()),
            });
        }
    }
    Ok(())
}

fn run_grid(
    out: &mut String,
    common: &Common,
    fix: &[String],
    range: &[String],
    csv: &Path,
    svg: Option<&Path>,
) -> CliResult {
    let model = load_model(&common.model)?;
    let dim = model.dim();
    let fixed = fix
        .iter()
        .map(|f| {
            let (axis, value) = split_assignment(f, "fix", dim)?;
            Ok((axis, parse_number(value, &format!("--fix {f}"))?))
        })
        .collect::<CliResult<Vec<_>>>()?;
    let swept = range
        .iter()
        .map(|r| parse_range(r, dim))
        .collect::<CliResult<Vec<_>>>()?;
    if svg.is_some() && swept.len() != 2 {
        return Err(Failure::input(format!(
            "--svg needs exactly two --range axes, got {}",
            swept.len()
        )));
    }
    let spec = GridSpec::new(dim, fixed, swept)?;
    let map = sweep(&model, &spec)?;

    let mut files = vec![(csv, output::map_to_csv(&map, common.precision))];
    if let Some(path) = svg {
        files.push((
            path,
            output::map_to_svg(&map).expect("two swept axes checked above"),
        ));
    }
    write_outputs(&files)?;

    let describe = |k: usize| {
        map.grid
            .swept()
            .iter()
            .zip(map.grid.node_swept_coords(k))
            .map(|(a, c)| format!("{}={}", axis_name(a.axis, dim), output::format_coord(c)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    outln!(out, "nodes = {}", map.values.len());
    outln!(
        out,
        "min H = {} at {}",
        format_value(map.min, common.precision),
        describe(map.argmin)
    );
    outln!(
        out,
        "max H = {} at {}",
        format_value(map.max, common.precision),
        describe(map.argmax)
    );
    Ok(())
}

fn run_table(out: &mut String, common: &Common, points: Option<&Path>) -> CliResult {
    let model = load_model(&common.model)?;
    let dim = model.dim();
    let text = match points {
        Some(path) => fs::read_to_string(path)
            .map_err(|e| Failure::input(format!("{}: {e}", path.display())))?,
        None if dim == 3 => BUNDLED_POINTS.to_string(),
        None => {
            return Err(Failure::input(
                "the bundled points are 3-variate; pass --points for this model",
            ))
        }
    };
    let rows = output::parse_points(&text, dim).map_err(|e| Failure::input(e.to_string()))?;
    let ld = LocalDependence::new(&model)?;
    let mut table = Vec::with_capacity(rows.len());
    for coords in rows {
        let p = Point::new(coords.clone())?;
        let f = model.pdf(&p)?;
        let h = ld.h_value(&p)?;
        table.push(coords.into_iter().chain([f, h]).collect::<Vec<f64>>());
    }
    let headers: Vec<String> = (0..dim)
        .map(|a| axis_name(a, dim))
        .chain(["f".to_string(), "H".to_string()])
        .collect();
    out.push_str(&output::format_table(&headers, &table, common.precision));
    Ok(())
}

fn run_saddle(
    out: &mut String,
    common: &Common,
    start: Option<&str>,
    max_iter: usize,
    tol: f64,
) -> CliResult {
    let model = load_model(&common.model)?;
    let start = match start {
        Some(s) => parse_coords(s, model.dim(), "--start")?,
        None => Point::new(vec![0.0; model.dim()])?,
    };
    let rp = solve_reference_point(
        &model,
        &start,
        SolverOptions {
            max_iter,
            tol,
            ..SolverOptions::default()
        },
    )?;
    let prec = common.precision;
    let coords: Vec<String> = rp.point.iter().map(|v| format_value(*v, prec)).collect();
    outln!(out, "p* = ({})", coords.join(", "));
    outln!(out, "residual = {:.3e}", rp.residual);
    outln!(out, "iterations = {}", rp.iterations);
    outln!(out, "H = {}", format_value(rp.h_value, prec));
    outln!(out, "rho_top = {}", format_value(rp.rho_top, prec));
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let mut out = String::new();
    let outcome = match &cli.command {
        Command::Eval { common, point } => run_eval(&mut out, common, point),
        Command::Grid {
            common,
            fix,
            range,
            csv,
            svg,
        } => run_grid(&mut out, common, fix, range, csv, svg.as_deref()),
        Command::Table { common, points } => run_table(&mut out, common, points.as_deref()),
        Command::Saddle {
            common,
            start,
            max_iter,
            tol,
        } => run_saddle(&mut out, common, start.as_deref(), *max_iter, *tol),
    };
    let mut stdout = io::stdout().lock();
    match stdout
        .write_all(out.as_bytes())
        .and_then(|()| stdout.flush())
    {
        Ok(()) => {}
        // A closed pipe (e.g. `| head`) is not an error worth reporting.
        Err(e) if e.kind() == io::ErrorKind::BrokenPipe => {}
        Err(e) => {
            eprintln!("error: writing output: {e}");
            return ExitCode::from(3);
        }
    }
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
