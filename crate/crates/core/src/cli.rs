//! The `smvi` command line: `validate`, `member`, `scan`, `sweep`, `probe`
//! and `init`.
//!
//! Exit codes: 0 success (or member), 1 non-member, 2 usage or validation
//! error, 3 internal error.

use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

use crate::diagnose::{closedness_probe, report_json, sweep, verdict, ProbeConfig, SweepConfig, ThresholdPolicy};
use crate::exprlang::{parse, Expr, VarSpace};
use crate::model::{
    build_problem, reduce_sfp, reduce_smp, reduce_smvip, reduce_svip, ConstraintSet, LinearOperator, MultiMap,
    Reduction, SplitProblem,
};
use crate::residual::{Evaluator, GridSpec, ResidualError};
use crate::scan::{scan_eps_set, ScanError, ScanRegion};
use crate::specfile::{render, SpecFile};
use crate::diagnose::DiagnoseError;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NON_MEMBER: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(name = "smvi", version, about = "Approximate solution sets of split multivalued variational inequalities")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a problem file.
    Validate { path: PathBuf },
    /// Print the residual profile of one pair and decide membership.
    Member {
        path: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        z: String,
        #[arg(long, allow_hyphen_values = true)]
        w: String,
        #[arg(long, allow_hyphen_values = true)]
        eps: f64,
        #[arg(long, allow_hyphen_values = true)]
        p: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
    },
    /// Write the lattice sample of S(eps) as CSV.
    Scan {
        path: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        eps: f64,
        #[arg(long, default_value_t = 0.01)]
        res: f64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        p: Option<String>,
        #[arg(long, allow_hyphen_values = true)]
        delta: Option<f64>,
        /// `lo,hi` applied to every axis.
        #[arg(long, allow_hyphen_values = true)]
        region: Option<String>,
        /// Scan even when n + m exceeds 4.
        #[arg(long)]
        allow_large: bool,
    },
    /// Scan a decreasing tolerance schedule and write the JSON trend report.
    Sweep {
        path: PathBuf,
        #[arg(long, default_value = "0.2,0.1,0.05,0.02")]
        schedule: String,
        #[arg(long)]
        report: PathBuf,
        #[arg(long, allow_hyphen_values = true)]
        p: Option<String>,
        /// Defaults to the tolerance schedule when `--p` is given.
        #[arg(long)]
        delta_schedule: Option<String>,
        #[arg(long, default_value_t = 0.01)]
        res: f64,
        #[arg(long, default_value_t = 4)]
        k: usize,
        #[arg(long)]
        gap: Option<f64>,
        #[arg(long)]
        diam_final: Option<f64>,
        #[arg(long)]
        mu_final: Option<f64>,
        #[arg(long, default_value_t = 3)]
        min_rows: usize,
        #[arg(long)]
        allow_large: bool,
    },
    /// Check that limits of scanned solution sequences are solutions.
    Probe {
        path: PathBuf,
        #[arg(long, default_value_t = 20)]
        trials: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long, default_value_t = 0.01)]
        res: f64,
        #[arg(long, allow_hyphen_values = true)]
        p: Option<String>,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Write a template problem file.
    Init {
        #[arg(long)]
        template: String,
        #[arg(long)]
        out: PathBuf,
    },
}

/// An error with the exit code it maps to.
#[derive(Debug, Clone, PartialEq)]
pub struct CliError {
    pub code: i32,
    pub message: String,
}

impl CliError {
    fn usage(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_USAGE,
            message: message.into(),
        }
    }

    fn internal(message: impl Into<String>) -> Self {
        CliError {
            code: EXIT_INTERNAL,
            message: message.into(),
        }
    }
}

impl From<ResidualError> for CliError {
    fn from(e: ResidualError) -> Self {
        match e {
            ResidualError::Eval(_) => CliError::internal(e.to_string()),
            _ => CliError::usage(e.to_string()),
        }
    }
}

impl From<ScanError> for CliError {
    fn from(e: ScanError) -> Self {
        match e {
            ScanError::Residual(r) => r.into(),
            _ => CliError::usage(e.to_string()),
        }
    }
}

impl From<DiagnoseError> for CliError {
    fn from(e: DiagnoseError) -> Self {
        match e {
            DiagnoseError::Scan(s) => s.into(),
            DiagnoseError::Residual(r) => r.into(),
            DiagnoseError::Metric(m) => CliError::internal(m.to_string()),
            _ => CliError::usage(e.to_string()),
        }
    }
}

/// Parses `1, -0.5, 2` into numbers.
pub fn parse_list(flag: &str, text: &str) -> Result<Vec<f64>, CliError> {
    text.split(',')
        .map(|v| {
            let v = v.trim();
            v.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| CliError::usage(format!("--{flag}: '{v}' is not a number")))
        })
        .collect()
}

pub fn load_problem(path: &Path) -> Result<SplitProblem<f64>, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    let spec = SpecFile::parse(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
    build_problem(&spec).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, text: &str) -> Result<(), CliError> {
    std::fs::write(path, text).map_err(|e| CliError::internal(format!("{}: {e}", path.display())))
}

fn nums(v: &[f64]) -> String {
    v.iter().map(|x| x.to_string()).collect::<Vec<_>>().join(", ")
}

fn template_sets(lo: f64, hi: f64) -> (ConstraintSet<f64>, ConstraintSet<f64>, LinearOperator<f64>) {
    (
        ConstraintSet::interval(lo, hi, 1),
        ConstraintSet::interval(lo, hi, 1),
        LinearOperator::identity(1),
    )
}

fn example_problem(which: u8) -> SplitProblem<f64> {
    let (lo, f, g, b1, b2, k) = match which {
        1 => (0.0, "x1^4", "y1^2", "x1", "y1", 0),
        2 => (-1.0, "(x1^2 - 1)^2", "(y1^4 - 1)^2", "x1", "y1", 0),
        3 => (0.0, "x1^4 - p1^4", "y1^2 - p1^2", "x1 - p1", "y1 - p1", 1),
        _ => (-1.0, "(x1^2 - 1)^2 - p1^2", "(y1^4 - 1)^2 - p1^4", "x1 - p1", "y1 - p1", 1),
    };
    let (c, q, a) = template_sets(lo, 1.0);
    let e = |s: &str| parse(s).expect("template expression");
    SplitProblem::new(
        k,
        c,
        q,
        a,
        e(f),
        e(g),
        MultiMap::new(VarSpace::X, 1, vec![vec![e(b1)], vec![Expr::zero()]]).expect("template map"),
        MultiMap::new(VarSpace::Y, 1, vec![vec![e(b2)], vec![Expr::zero()]]).expect("template map"),
    )
    .expect("template problem")
}

pub const TEMPLATES: [&str; 8] = ["sfp", "svip", "smvip", "smp", "example1", "example2", "example3", "example4"];

/// Text of a named template.
pub fn template(name: &str) -> Result<String, CliError> {
    let e = |s: &str| parse(s).expect("template expression");
    let text = match name {
        "sfp" => {
            let c = ConstraintSet::new_box(vec![0.0, 0.0], vec![1.0, 1.0]).expect("box");
            let q = ConstraintSet::new_ball(vec![1.0, 1.0], 1.0).expect("ball");
            let a = LinearOperator::from_rows(vec![vec![1.0, 0.0], vec![0.0, 1.0]]).expect("matrix");
            let p = reduce_sfp(c, q, a).expect("template");
            render(&p, "Split feasibility: find x in C with Ax in Q.\nB1 = B2 = {0} and f = g = 0 are implied.", Some(Reduction::Sfp))
        }
        "svip" => {
            let (c, q, a) = template_sets(0.0, 1.0);
            let p = reduce_svip(c, q, a, vec![e("x1 - 0.5")], vec![e("y1 - 0.5")]).expect("template");
            render(
                &p,
                "Split variational inequality with F1(x) = x1 - 0.5, F2(y) = y1 - 0.5.\nThe selections hold -F1 and -F2; f = g = 0 are implied.",
                Some(Reduction::Svip),
            )
        }
        "smvip" => {
            let (c, q, a) = template_sets(0.0, 1.0);
            let p = reduce_smvip(c, q, a, vec![e("x1 - 0.5")], vec![e("y1 - 0.5")], e("x1^2"), e("y1^2")).expect("template");
            render(
                &p,
                "Split mixed variational inequality with F1(x) = x1 - 0.5, F2(y) = y1 - 0.5.\nThe selections hold -F1 and -F2.",
                Some(Reduction::Smvip),
            )
        }
        "smp" => {
            let (c, q, a) = template_sets(-1.0, 1.0);
            let p = reduce_smp(c, q, a, e("(x1 - 0.3)^2"), e("(y1 - 0.3)^2")).expect("template");
            render(&p, "Split minimization of f over C and g over Q with y = Ax.\nB1 = B2 = {0} are implied.", Some(Reduction::Smp))
        }
        "example1" => render(&example_problem(1), "C = Q = [0, 1], f = x^4, g = y^2, B1(x) = {x, 0}, B2(y) = {y, 0}.\nUnique solution (0, 0).", None),
        "example2" => render(&example_problem(2), "C = Q = [-1, 1], f = (x^2 - 1)^2, g = (y^4 - 1)^2, B(x) = {x, 0}.\n(-1, -1) and (1, 1) are solutions.", None),
        "example3" => render(&example_problem(3), "Parametric: f = x^4 - p^4, g = y^2 - p^2, B1 = {x - p, 0}, B2 = {y - p, 0}.\nSolution (0, 0) for every p.", None),
        "example4" => render(&example_problem(4), "Parametric: f = (x^2 - 1)^2 - p^2, g = (y^4 - 1)^2 - p^4, B = {x - p, 0}.\n(-1, -1) and (1, 1) are solutions.", None),
        other => {
            return Err(CliError::usage(format!(
                "unknown template '{other}'; expected one of {}",
                TEMPLATES.join(", ")
            )))
        }
    };
    Ok(text)
}

fn param_arg(p: &Option<String>) -> Result<Option<Vec<f64>>, CliError> {
    p.as_deref().map(|s| parse_list("p", s)).transpose()
}

/// Runs one command, writing normal output to `out` and diagnostics to `err`.
pub fn run(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    match dispatch(cli, out, err) {
        Ok(code) => code,
        Err(e) => {
            let _ = writeln!(err, "error: {}", e.message);
            e.code
        }
    }
}

fn dispatch(cli: Cli, out: &mut dyn Write, err: &mut dyn Write) -> Result<i32, CliError> {
    let io = |e: std::io::Error| CliError::internal(e.to_string());
    match cli.command {
        Command::Validate { path } => {
            let p = load_problem(&path)?;
            writeln!(
                out,
                "ok: n = {}, m = {}, params = {}, |B1| = {}, |B2| = {}",
                p.n,
                p.m,
                p.k,
                p.b1.len(),
                p.b2.len()
            )
            .map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Member { path, z, w, eps, p, delta } => {
            let problem = load_problem(&path)?;
            let z = parse_list("z", &z)?;
            let w = parse_list("w", &w)?;
            let param = param_arg(&p)?;
            let ev = Evaluator::new(&problem, GridSpec::for_problem(&problem));
            let m = ev.is_member(&z, &w, eps, param.as_deref(), delta)?;
            let pr = &m.profile;
            let mut s = String::new();
            let _ = writeln!(s, "feas_c = {}", pr.feas_c);
            let _ = writeln!(s, "feas_q = {}", pr.feas_q);
            let _ = writeln!(s, "link = {}", pr.link);
            let _ = writeln!(s, "defect1 = {}", pr.defect1);
            let _ = writeln!(s, "defect2 = {}", pr.defect2);
            let _ = writeln!(s, "u = [{}] (selection {})", nums(&pr.u), pr.u_index + 1);
            let _ = writeln!(s, "v = [{}] (selection {})", nums(&pr.v), pr.v_index + 1);
            if !pr.param.is_empty() {
                let _ = writeln!(s, "q = [{}]", nums(&pr.param));
            }
            let _ = writeln!(s, "level = {}", pr.level());
            let _ = writeln!(s, "member = {}", m.member);
            out.write_all(s.as_bytes()).map_err(io)?;
            Ok(if m.member { EXIT_OK } else { EXIT_NON_MEMBER })
        }
        Command::Scan {
            path,
            eps,
            res,
            out: out_path,
            p,
            delta,
            region,
            allow_large,
        } => {
            let problem = load_problem(&path)?;
            let param = param_arg(&p)?;
            let mut reg = match region {
                Some(r) => {
                    let b = parse_list("region", &r)?;
                    if b.len() != 2 {
                        return Err(CliError::usage("--region takes 'lo,hi'"));
                    }
                    ScanRegion::cube(b[0], b[1], problem.n, problem.m, res)?
                }
                None => ScanRegion::around(&problem, eps.max(0.0), res)?,
            };
            reg.allow_large = allow_large;
            let scan = scan_eps_set(&problem, eps, &reg, GridSpec::for_problem(&problem), param.as_deref(), delta)?;
            write_file(&out_path, &scan.to_csv())?;
            if scan.cloud.is_empty() {
                let _ = writeln!(err, "warning: no members found at eps = {eps}, res = {res}");
            }
            writeln!(out, "{} members of {} pairs -> {}", scan.cloud.len(), scan.visited, out_path.display()).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Sweep {
            path,
            schedule,
            report,
            p,
            delta_schedule,
            res,
            k,
            gap,
            diam_final,
            mu_final,
            min_rows,
            allow_large,
        } => {
            let problem = load_problem(&path)?;
            let mut cfg = SweepConfig::new(parse_list("schedule", &schedule)?);
            cfg.param = param_arg(&p)?;
            cfg.delta_schedule = match (delta_schedule, &cfg.param) {
                (Some(d), _) => Some(parse_list("delta-schedule", &d)?),
                (None, Some(_)) => Some(cfg.schedule.clone()),
                (None, None) => None,
            };
            cfg.step = res;
            cfg.k = k;
            cfg.gap = gap;
            cfg.allow_large = allow_large;
            let trend = sweep(&problem, &cfg)?;
            let policy = ThresholdPolicy {
                diam_final,
                mu_final,
                min_rows,
                ..ThresholdPolicy::default()
            };
            let v = verdict(&trend, &policy.resolve(&trend));
            write_file(&report, &report_json(&problem, &trend, &policy, &v))?;
            for row in &trend.rows {
                if row.count == 0 {
                    let _ = writeln!(err, "warning: empty scan at eps = {}", row.eps);
                }
            }
            writeln!(out, "{} -> {}", v.tag, report.display()).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Probe {
            path,
            trials,
            seed,
            eps,
            res,
            p,
            delta,
        } => {
            let problem = load_problem(&path)?;
            let cfg = ProbeConfig {
                eps,
                step: res,
                param: param_arg(&p)?,
                delta,
                ..ProbeConfig::default()
            };
            let r = closedness_probe(&problem, trials, seed, &cfg)?;
            let mut s = format!("members = {}, clusters = {}\n", r.members_found, r.clusters);
            match r.pass_rate {
                Some(rate) => {
                    let _ = writeln!(s, "passed {} of {} limits (rate {rate})", r.passed, r.trials);
                    for f in &r.failures {
                        let _ = writeln!(s, "failed limit [{}]", nums(f));
                    }
                }
                None => {
                    let _ = writeln!(s, "{}", r.note.as_deref().unwrap_or("no limits checked"));
                }
            }
            out.write_all(s.as_bytes()).map_err(io)?;
            Ok(EXIT_OK)
        }
        Command::Init { template: name, out: out_path } => {
            let text = template(&name)?;
            write_file(&out_path, &text)?;
            writeln!(out, "wrote {}", out_path.display()).map_err(io)?;
            Ok(EXIT_OK)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::problem_from_str;

    #[test]
    fn every_template_builds() {
        for name in TEMPLATES {
            let text = template(name).unwrap();
            let p = problem_from_str::<f64>(&text);
            assert!(p.is_ok(), "{name}: {:?}", p.err());
        }
        assert_eq!(template("nope").unwrap_err().code, EXIT_USAGE);
    }

    #[test]
    fn template_contents() {
        let sfp = template("sfp").unwrap();
        assert!(sfp.contains("reduction = sfp") && !sfp.contains("[map.B1]"));
        let p = problem_from_str::<f64>(&sfp).unwrap();
        assert_eq!((p.f.clone(), p.g.clone()), (Expr::zero(), Expr::zero()));
        assert_eq!(p.b1.selections(), &[vec![Expr::zero(), Expr::zero()]]);

        let ex4 = problem_from_str::<f64>(&template("example4").unwrap()).unwrap();
        assert_eq!(ex4.g, parse("(y1^4-1)^2 - p1^4").unwrap());

        let smp = template("smp").unwrap();
        assert!(!smp.contains("[map."));
        let p = problem_from_str::<f64>(&smp).unwrap();
        assert_eq!(p.b2.selections(), &[vec![Expr::zero()]]);
    }

    #[test]
    fn lists() {
        assert_eq!(parse_list("z", "1, -0.5,2").unwrap(), vec![1.0, -0.5, 2.0]);
        assert!(parse_list("z", "1;2").is_err());
        assert!(parse_list("z", "").is_err());
    }
}
