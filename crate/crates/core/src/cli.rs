//! Command-line commands. Each returns its report text, the files it wrote and
//! an exit status: 0 when every check passes, 2 on a certificate violation,
//! 3 when the optimizer exhausts its budget, 1 on any other error.

use std::ffi::OsString;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::calibration::{observed_order, polynomial_interior_exact, stokes_study, StokesRow};
use crate::config::{OutputFormat, RunConfig};
use crate::error::{JetError, Result};
use crate::fillvol::{fv_curve, write_fv_csv, FillingReport};
use crate::jet::JetPoint;
use crate::jetmaps::prolong;
use crate::multiindex::MultiIndex;
use crate::nonextension::{
    build_witness, cross_shell_check, growth_table, lip_f_upper, shell_separation_holds, within_shell_check,
    witness_contradiction_curve,
};
use crate::numfmt::num;
use crate::paths::{cc_upper_bound, coordinate_lower_bound, metric_bounds, r0_upper_bound};
use crate::poly::Polynomial;

pub const EXIT_OK: i32 = 0;
pub const EXIT_ERROR: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_BUDGET: i32 = 3;

#[derive(Parser, Debug)]
#[command(
    name = "jetcarnot",
    version,
    about = "Jet-space Carnot groups: distances, Lipschitz non-extension and filling-volume certificates"
)]
pub struct Cli {
    /// TOML run configuration; flags override its values.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Base dimension of `J^k(R^n)`.
    #[arg(long, global = true)]
    pub n: Option<usize>,
    /// Jet order.
    #[arg(long, global = true)]
    pub k: Option<usize>,
    /// Seed for every random stream of the run.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Directory for report files.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    pub format: Option<OutputFormat>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Metric {
    Cc,
    R0,
    Lower,
    All,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Prints the k-jet of a polynomial at a point.
    Prolong {
        /// Polynomial JSON file.
        #[arg(long)]
        field: PathBuf,
        /// Comma-separated coordinates.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true, required = true)]
        x: Vec<f64>,
    },
    /// Distance bounds between two jet points.
    Dist {
        #[arg(long)]
        p: PathBuf,
        #[arg(long)]
        q: PathBuf,
        #[arg(long, value_enum, default_value = "all")]
        metric: Metric,
        #[arg(long)]
        steps: Option<usize>,
        #[arg(long)]
        starts: Option<usize>,
    },
    /// Growth table of certified versus measured Lipschitz constants.
    Certify {
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
    },
    /// Unbounded-set witness and its contradiction level.
    Witness {
        #[arg(long)]
        lambda: Option<f64>,
        #[arg(long)]
        levels: Option<usize>,
    },
    /// Filling-volume constant and lower-bound curve.
    Fillvol {
        #[arg(long, value_delimiter = ',')]
        scales: Option<Vec<f64>>,
    },
    /// Stokes residuals of the bundled test maps under refinement.
    Stokes {
        #[arg(long, value_delimiter = ',')]
        resolutions: Option<Vec<usize>>,
    },
}

/// What a command printed and wrote.
#[derive(Clone, Debug, PartialEq)]
pub struct CommandOutput {
    pub status: i32,
    pub stdout: String,
    pub files: Vec<PathBuf>,
}

impl CommandOutput {
    fn new(status: i32, stdout: String) -> Self {
        CommandOutput { status, stdout, files: Vec::new() }
    }
}

fn write_report(config: &RunConfig, name: &str, bytes: &[u8], files: &mut Vec<PathBuf>) -> Result<()> {
    if let Some(dir) = &config.out {
        fs::create_dir_all(dir)?;
        let path = dir.join(name);
        fs::write(&path, bytes)?;
        files.push(path);
    }
    Ok(())
}

fn read_jet(path: &Path) -> Result<JetPoint> {
    Ok(serde_json::from_str(&fs::read_to_string(path)?)?)
}

fn to_json<T: Serialize>(v: &T) -> Result<String> {
    Ok(serde_json::to_string_pretty(v)? + "\n")
}

/// `j^k_x(f)` as JetPoint JSON.
pub fn cmd_prolong(config: &RunConfig, field: &Path, x: &[f64]) -> Result<CommandOutput> {
    let f: Polynomial = serde_json::from_str(&fs::read_to_string(field)?)?;
    if f.n() != x.len() {
        return Err(JetError::DimensionMismatch { expected: f.n(), got: x.len() });
    }
    let p = prolong(&f.into(), config.k, x)?;
    let text = to_json(&p)?;
    let mut out = CommandOutput::new(EXIT_OK, text.clone());
    write_report(config, "prolong.json", text.as_bytes(), &mut out.files)?;
    Ok(out)
}

#[derive(Serialize)]
struct DistReport {
    lower: f64,
    r0: Option<f64>,
    cc: Option<f64>,
    sandwich: bool,
}

/// All requested bounds, with the check `lower <= r0 <= cc + 1e-6`.
pub fn cmd_dist(config: &RunConfig, p: &Path, q: &Path, metric: Metric) -> Result<CommandOutput> {
    let p = read_jet(p)?;
    let q = read_jet(q)?;
    p.same_shape(&q)?;
    let opts = &config.optimizer;
    let lower = coordinate_lower_bound(&p, &q)?;
    let (r0, cc) = match metric {
        Metric::Lower => (None, None),
        Metric::Cc => (None, Some(cc_upper_bound(&p, &q, opts)?)),
        Metric::R0 => (Some(r0_upper_bound(&p, &q, opts)?), None),
        Metric::All => {
            let (c, r) = metric_bounds(&p, &q, opts)?;
            (Some(r.value), Some(c.value))
        }
    };
    let r0_ok = r0.is_none_or(|r| lower <= r + 1e-12);
    let cc_ok = match (r0, cc) {
        (Some(r), Some(c)) => r <= c + 1e-6,
        (None, Some(c)) => lower <= c + 1e-12,
        _ => true,
    };
    let report = DistReport { lower, r0, cc, sandwich: r0_ok && cc_ok };
    let text = to_json(&report)?;
    let status = if report.sandwich { EXIT_OK } else { EXIT_VIOLATION };
    let mut out = CommandOutput::new(status, text.clone());
    write_report(config, "dist.json", text.as_bytes(), &mut out.files)?;
    Ok(out)
}

/// Growth table over the configured scales; violations exit with status 2.
pub fn cmd_certify(config: &RunConfig) -> Result<CommandOutput> {
    let spec = config.boundary_spec()?;
    let table = growth_table(&spec, &config.scales, &config.sampling)?;
    let violations = table.violations(config.certify.tolerance);
    let body = match config.format {
        OutputFormat::Csv => {
            let mut buf = Vec::new();
            table.write_csv(&mut buf)?;
            buf
        }
        OutputFormat::Json => to_json(&table)?.into_bytes(),
    };
    let mut text = String::from_utf8_lossy(&body).into_owned();
    let slope = table.slope.map_or("n/a".to_string(), num);
    text.push_str(&format!("# slope = {slope}, expected = {}\n", table.expected_slope));
    text.push_str(&format!("# violations = {}\n", violations.len()));
    let status = if violations.is_empty() { EXIT_OK } else { EXIT_VIOLATION };
    let mut out = CommandOutput::new(status, text);
    let name = match config.format {
        OutputFormat::Csv => "growth.csv",
        OutputFormat::Json => "growth.json",
    };
    write_report(config, name, &body, &mut out.files)?;
    Ok(out)
}

/// Witness, shell checks and the first level where `lambda` fails.
pub fn cmd_witness(config: &RunConfig) -> Result<CommandOutput> {
    let wc = &config.witness;
    let spec = config.boundary_spec()?;
    let w = build_witness(&spec, wc.levels, wc.per_axis, &config.optimizer)?;
    let level = witness_contradiction_curve(&w, wc.lambda)?;
    let cross = cross_shell_check(&w, wc.cross_pairs, config.seed);
    let lam = lip_f_upper(&spec, config.fillvol.lip_resolution)?;
    let within = within_shell_check(&w, wc.within_pairs, config.seed.wrapping_add(1), lam)?;
    let separation = shell_separation_holds(wc.levels);
    let doc = json!({
        "witness": w.to_value()?,
        "lambda": wc.lambda,
        "contradiction_level": level,
        "shell_separation": separation,
        "cross_shell": cross,
        "within_shell": within,
    });
    let body = to_json(&doc)?;
    let text = format!(
        "c = {}\ncontradiction level for lambda = {}: L = {level}\nshell separation: {}\ncross-shell max ratio {} <= 8c = {}: {}\nwithin-shell max ratio {} <= Lambda = {}: {}\n",
        w.c(),
        wc.lambda,
        pass(separation),
        cross.max_ratio,
        cross.bound,
        pass(cross.holds),
        within.max_ratio,
        within.lip_estimate,
        pass(within.holds),
    );
    let ok = separation && cross.holds && within.holds;
    let mut out = CommandOutput::new(if ok { EXIT_OK } else { EXIT_VIOLATION }, text);
    write_report(config, "witness.json", body.as_bytes(), &mut out.files)?;
    Ok(out)
}

fn pass(ok: bool) -> &'static str {
    if ok {
        "pass"
    } else {
        "FAIL"
    }
}

/// `lipF_upper`, `delta`, the per-scale identity and the `FV` curve.
pub fn cmd_fillvol(config: &RunConfig) -> Result<CommandOutput> {
    let spec = config.boundary_spec()?;
    let lam = lip_f_upper(&spec, config.fillvol.lip_resolution)?;
    let report = FillingReport::build(&spec, &config.pair_label(), lam, &config.scales)?;
    let curve = fv_curve(&spec, lam, &config.fillvol.r_values)?;
    let identity = report.max_identity_residual() <= 1e-12;
    let text = format!(
        "lipF_upper = {lam}\ndelta = {}\nexponent = {}\nidentity delta*M^e = filling_lower: {} (max residual {:e})\n",
        report.delta,
        report.exponent,
        pass(identity),
        report.max_identity_residual()
    );
    let mut out = CommandOutput::new(if identity { EXIT_OK } else { EXIT_VIOLATION }, text);
    write_report(config, "fillvol.json", to_json(&report)?.as_bytes(), &mut out.files)?;
    let mut csv = Vec::new();
    write_fv_csv(&curve, &mut csv)?;
    write_report(config, "fv.csv", &csv, &mut out.files)?;
    Ok(out)
}

#[derive(Serialize)]
struct StokesTableRow<'a> {
    map: &'a str,
    #[serde(flatten)]
    row: &'a StokesRow,
}

/// `h_i = x_i^3 + x_i x_{i+1} / 2 - 7 x_{i-1}^2 x_i / 10`, indices cyclic.
fn cubic_test_map(dim: usize) -> Result<Vec<Polynomial>> {
    (0..dim)
        .map(|i| {
            let mono = |pairs: &[(usize, u32)], c: f64| {
                let mut e = vec![0u32; dim];
                for &(a, p) in pairs {
                    e[a] += p;
                }
                (MultiIndex::new(e), c)
            };
            let next = (i + 1) % dim;
            let prev = (i + dim - 1) % dim;
            Polynomial::from_terms(
                dim,
                vec![mono(&[(i, 3)], 1.0), mono(&[(i, 1), (next, 1)], 0.5), mono(&[(prev, 2), (i, 1)], -0.7)],
            )
        })
        .collect()
}

/// Residuals for the identity, a cubic map with a symbolic exact interior
/// value, and a piecewise-linear map with kinks off the grid lines.
pub fn cmd_stokes(config: &RunConfig) -> Result<CommandOutput> {
    let dim = config.n + 1;
    let res = &config.stokes.resolutions;
    let mut tables: Vec<(&str, Vec<StokesRow>)> = Vec::new();
    tables.push(("identity", stokes_study(dim, res, |x| Ok(x.to_vec()), Some(1.0))?));
    let cubic = cubic_test_map(dim)?;
    let exact = polynomial_interior_exact(&cubic)?;
    tables.push(("cubic", stokes_study(dim, res, |x| Ok(cubic.iter().map(|p| p.eval(x)).collect()), Some(exact))?));
    let pl = |x: &[f64]| {
        Ok((0..dim)
            .map(|i| (x[i] - 0.3).abs() + 0.5 * x[(i + 1) % dim] - 0.25 * (x[(i + dim - 1) % dim] - 0.55).abs())
            .collect())
    };
    tables.push(("piecewise-linear", stokes_study(dim, res, pl, None)?));

    let worst = tables.iter().flat_map(|(_, t)| t.iter().map(|r| r.residual)).fold(0.0, f64::max);
    let body = match config.format {
        OutputFormat::Csv => {
            let mut s = String::from("map,N,interior,boundary,residual,error\n");
            for (name, rows) in &tables {
                for r in rows {
                    s.push_str(&format!(
                        "{name},{},{},{},{},{}\n",
                        r.cells,
                        num(r.interior),
                        num(r.boundary),
                        num(r.residual),
                        r.error.map_or(String::new(), num)
                    ));
                }
            }
            s
        }
        OutputFormat::Json => {
            let rows: Vec<StokesTableRow> =
                tables.iter().flat_map(|(m, t)| t.iter().map(move |row| StokesTableRow { map: m, row })).collect();
            to_json(&rows)?
        }
    };
    let mut text = body.clone();
    if let Some(order) = observed_order(&tables[1].1) {
        text.push_str(&format!("# cubic convergence order = {order}\n"));
    }
    text.push_str(&format!("# max residual = {worst:e}\n"));
    let status = if worst <= 1e-6 { EXIT_OK } else { EXIT_VIOLATION };
    let mut out = CommandOutput::new(status, text);
    let name = match config.format {
        OutputFormat::Csv => "stokes.csv",
        OutputFormat::Json => "stokes.json",
    };
    write_report(config, name, body.as_bytes(), &mut out.files)?;
    Ok(out)
}

/// Builds the effective configuration: file (or defaults), then flags.
pub fn resolve_config(cli: &Cli) -> Result<RunConfig> {
    let mut c = match &cli.config {
        Some(p) => RunConfig::load(p)?,
        None => RunConfig::default(),
    };
    if let Some(n) = cli.n {
        c.n = n;
    }
    if let Some(k) = cli.k {
        c.k = k;
    }
    let seed = cli.seed.unwrap_or(c.seed);
    c.set_seed(seed);
    if let Some(o) = &cli.out {
        c.out = Some(o.clone());
    }
    if let Some(f) = cli.format {
        c.format = f;
    }
    match &cli.command {
        Command::Dist { steps, starts, .. } => {
            if let Some(s) = steps {
                c.optimizer.steps = *s;
            }
            if let Some(s) = starts {
                c.optimizer.starts = *s;
            }
        }
        Command::Certify { scales: Some(s) } | Command::Fillvol { scales: Some(s) } => c.scales = s.clone(),
        Command::Witness { lambda, levels } => {
            if let Some(l) = lambda {
                c.witness.lambda = *l;
            }
            if let Some(l) = levels {
                c.witness.levels = *l;
            }
        }
        Command::Stokes { resolutions: Some(r) } => c.stokes.resolutions = r.clone(),
        _ => {}
    }
    c.validate()?;
    Ok(c)
}

/// Runs a parsed command line.
pub fn execute(cli: &Cli) -> Result<CommandOutput> {
    let config = resolve_config(cli)?;
    match &cli.command {
        Command::Prolong { field, x } => cmd_prolong(&config, field, x),
        Command::Dist { p, q, metric, .. } => cmd_dist(&config, p, q, *metric),
        Command::Certify { .. } => cmd_certify(&config),
        Command::Witness { .. } => cmd_witness(&config),
        Command::Fillvol { .. } => cmd_fillvol(&config),
        Command::Stokes { .. } => cmd_stokes(&config),
    }
}

/// Exit status for an error: 3 for optimizer budget exhaustion, 1 otherwise.
pub fn error_status(e: &JetError) -> i32 {
    match e {
        JetError::InfeasibleAtBudget { .. } => EXIT_BUDGET,
        _ => EXIT_ERROR,
    }
}

/// Parses `args`, runs the command, prints its report and returns the exit status.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { EXIT_ERROR } else { EXIT_OK };
        }
    };
    match execute(&cli) {
        Ok(out) => {
            print!("{}", out.stdout);
            out.status
        }
        Err(e) => {
            eprintln!("error: {e}");
            error_status(&e)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_override_file() {
        let dir = tempfile::tempdir().unwrap();
        let cfg = dir.path().join("run.toml");
        fs::write(&cfg, "n = 2\nk = 2\nseed = 5\n[witness]\nlambda = 3.0\n").unwrap();
        let cli = Cli::try_parse_from([
            "jetcarnot",
            "witness",
            "--config",
            cfg.to_str().unwrap(),
            "--k",
            "1",
            "--lambda",
            "4",
        ])
        .unwrap();
        let c = resolve_config(&cli).unwrap();
        assert_eq!((c.n, c.k, c.seed, c.optimizer.seed), (2, 1, 5, 5));
        assert_eq!(c.witness.lambda, 4.0);
    }

    #[test]
    fn cubic_map_is_cubic() {
        let m = cubic_test_map(2).unwrap();
        assert!(m.iter().all(|p| p.degree() == 3));
    }

    #[test]
    fn budget_errors_map_to_status_three() {
        assert_eq!(error_status(&JetError::InfeasibleAtBudget { best_mismatch: 1.0 }), 3);
        assert_eq!(error_status(&JetError::ZeroGap), 1);
        assert_eq!(run(["jetcarnot", "nonsense"]), 1);
        assert_eq!(run(["jetcarnot", "--help"]), 0);
    }
}
