use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sle4rho_core::boundary::MeasurePair;
use sle4rho_core::dgff::{extract_interface, ordering_check, Dgff, Lattice};
use sle4rho_harness::config::ExperimentConfig;
use sle4rho_harness::output::{ensure_dir, write_table};
use sle4rho_harness::report::StudyReport;
use sle4rho_harness::simulate::{run_simulate, Outputs};
use sle4rho_harness::studies::{run_approximation_study, run_reversal_study, StudySettings};
use sle4rho_harness::suites::{run_suite, SuiteOptions, SUITES};
use sle4rho_harness::{HarnessError, Result};

#[derive(Parser)]
#[command(
    name = "sle4rho",
    version,
    about = "SLE₄(ρ) simulation and verification harness"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Args, Clone)]
struct Common {
    /// Experiment config (JSON).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Master seed (overrides the config).
    #[arg(long)]
    seed: Option<u64>,
    /// Number of paths or samples (overrides the config).
    #[arg(long)]
    paths: Option<usize>,
    /// Output directory (overrides the config).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Capacity time step (overrides the config).
    #[arg(long)]
    dt: Option<f64>,
}

impl Common {
    fn config(&self, scenario: &str) -> Result<ExperimentConfig> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::new(scenario, &MeasurePair::empty()),
        };
        if let Some(s) = self.seed {
            c.seed = s;
        }
        if let Some(n) = self.paths {
            c.paths = n;
        }
        if let Some(o) = &self.out {
            c.out = o.clone();
        }
        if let Some(dt) = self.dt {
            c.dt = dt;
        }
        c.validate()?;
        Ok(c)
    }
}

#[derive(Subcommand)]
enum Cmd {
    /// Driving function, curve and observable CSVs for every path.
    Simulate(Common),
    /// Curve CSVs only.
    Curve(Common),
    /// Observable CSVs only.
    Observable(Common),
    /// Approximation or reversal study.
    Study {
        #[arg(value_parser = ["approx", "reversal"])]
        kind: String,
        /// Quantisation levels for the approximation study.
        #[arg(long, value_delimiter = ',', default_value = "4,8,16,32")]
        resolutions: Vec<usize>,
        #[command(flatten)]
        common: Common,
    },
    /// Named acceptance bundle; exits nonzero on failure.
    Suite {
        name: String,
        #[command(flatten)]
        common: Common,
    },
    /// Lattice GFF samples or the monotone-coupling check.
    Dgff {
        #[arg(value_parser = ["sample", "mono"])]
        kind: String,
        /// Lattice side length.
        #[arg(long, default_value_t = 64)]
        size: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn finish(rep: &StudyReport, out: &std::path::Path, file: &str) -> Result<bool> {
    ensure_dir(out)?;
    rep.write(&out.join(file))?;
    println!("{}", rep.summary());
    Ok(rep.pass)
}

fn run(cli: Cli) -> Result<bool> {
    match cli.cmd {
        Cmd::Simulate(c) => report_files(run_simulate(&c.config("simulate")?, Outputs::ALL)?),
        Cmd::Curve(c) => report_files(run_simulate(&c.config("curve")?, Outputs::CURVE)?),
        Cmd::Observable(c) => {
            report_files(run_simulate(&c.config("observable")?, Outputs::OBSERVABLE)?)
        }
        Cmd::Study {
            kind,
            resolutions,
            common,
        } => {
            let cfg = common.config(&kind)?;
            let s = StudySettings {
                paths: cfg.paths,
                seed: cfg.seed,
                dt: cfg.dt,
                horizon: cfg.horizon,
                stride: cfg.curve_stride,
            };
            let mut rep = if kind == "approx" {
                run_approximation_study(&cfg.boundary.to_function()?, &resolutions, &s)?.report
            } else {
                run_reversal_study(&cfg.pair()?, None, &s, 0.01)?.report
            };
            rep.provenance.config_hash = cfg.hash();
            finish(&rep, &cfg.out, &format!("study_{kind}.json"))
        }
        Cmd::Suite { name, common } => {
            if !SUITES.contains(&name.as_str()) {
                return Err(HarnessError::UnknownSuite(name));
            }
            let opts = SuiteOptions {
                seed: common.seed.unwrap_or(0),
                paths: common.paths,
                dt: common.dt,
                out: Some(common.out.clone().unwrap_or_else(|| PathBuf::from("out"))),
            };
            let rep = run_suite(&name, &opts)?;
            println!("{}", rep.summary());
            Ok(rep.pass)
        }
        Cmd::Dgff { kind, size, common } => dgff(&kind, size, &common.config("dgff")?),
    }
}

fn report_files(files: Vec<PathBuf>) -> Result<bool> {
    println!("wrote {} files", files.len());
    Ok(true)
}

fn dgff(kind: &str, size: usize, cfg: &ExperimentConfig) -> Result<bool> {
    let f = cfg.boundary.to_function()?;
    let l = Lattice::from_function(size, size, 1.0, &f)?;
    let field = Dgff::new(&l)?;
    ensure_dir(&cfg.out)?;
    if kind == "sample" {
        for (k, s) in field.samples(&l, cfg.seed, cfg.paths).iter().enumerate() {
            let rows: Vec<Vec<f64>> = (0..size)
                .flat_map(|j| (0..size).map(move |i| (i, j)))
                .map(|(i, j)| vec![i as f64, j as f64, s.value(i, j)])
                .collect();
            write_table(
                &cfg.out.join(format!("dgff_{k:04}.csv")),
                &["i", "j", "h"],
                &rows,
            )?;
        }
        println!("wrote {} samples", cfg.paths);
        return Ok(true);
    }
    let lo = l.with_boundary(&shifted(&f, -0.4 * sle4rho_core::LAMBDA)?)?;
    let mut ordered = 0;
    for s in field.samples(&l, cfg.seed, cfg.paths) {
        let a = extract_interface(&s);
        let b = extract_interface(&s.rebased(&field, &lo));
        ordered += ordering_check(&a, &b) as usize;
    }
    let freq = ordered as f64 / cfg.paths as f64;
    let mut rep = StudyReport::new(
        "dgff-mono",
        sle4rho_harness::report::Provenance::new(cfg.hash(), cfg.seed),
    );
    rep.check("ordering_frequency", freq, "≥ 0.95", freq >= 0.95);
    finish(&rep, &cfg.out, "dgff_mono.json")
}

fn shifted(
    f: &sle4rho_core::boundary::BoundaryFunction,
    by: f64,
) -> Result<sle4rho_core::boundary::BoundaryFunction> {
    match f.as_piecewise() {
        Some(pc) => Ok(pc.shifted(by).into()),
        None => Err(HarnessError::Config(
            "dgff mono needs piecewise-constant boundary data".into(),
        )),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
