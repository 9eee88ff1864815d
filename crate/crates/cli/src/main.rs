use std::fs;
use std::io::{self, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use quartloc::evaluation::{error_cdf, m_sweep, summary_table, treatment_grid, GridSpec, TreatmentResult};
use quartloc::geometry::{build_grid_scenario, default_ap_layout, euclidean_distance_3d, Coordinates3D, RoomDims};
use quartloc::io::{
    read_raw_csv, read_results_jsonl, read_scenario, write_cdf_csv, write_instances_csv, write_json,
    write_results_csv, write_results_jsonl, DatasetBundle, DatasetMetadata, FingerprintDocument, ResultLine,
};
use quartloc::locator::{Locator, Method, MethodConfig, PositionEstimate};
use quartloc::propagation::{generate_dataset, GenerationSpec, LogNormalParams};
use quartloc::representations::{build_training_set, PowedParams, Representation};
use quartloc::{Scenario, SCHEMA_VERSION};

#[derive(Parser)]
#[command(name = "quartloc", version, about = "Quartile-fingerprint kNN indoor localization")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write the default scenario (3.50 x 3.56 x 2.80 m room, 4x4 RPs, 8 wall APs) as JSON.
    InitScenario {
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 2.0)]
        ap_height: f64,
        #[arg(long, default_value_t = 8)]
        aps: usize,
    },
    /// Generate a raw-readings dataset with log-normal shadowing.
    Simulate(SimulateArgs),
    /// Turn a raw dataset into fingerprint instances.
    BuildFingerprints {
        #[arg(long = "in")]
        input: PathBuf,
        #[arg(long, value_enum)]
        representation: ReprArg,
        /// Keep only the first N APs of the dataset's AP order.
        #[arg(long)]
        n_aps: Option<usize>,
        #[arg(long)]
        out: PathBuf,
        /// Also write the instances with metadata as JSON.
        #[arg(long)]
        json: Option<PathBuf>,
    },
    /// Localize the samples of a raw-readings CSV against a training dataset.
    Localize {
        #[arg(long)]
        train: PathBuf,
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long)]
        k: usize,
        #[arg(long)]
        n_aps: usize,
        #[arg(long)]
        query: PathBuf,
    },
    /// Run the (n, k) treatment grid of a method on a train/test pair.
    Evaluate {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long, value_delimiter = ',', default_values_t = [2, 3, 4, 5, 6, 7, 8])]
        n_values: Vec<usize>,
        #[arg(long, value_delimiter = ',', default_values_t = [1, 3, 5, 7, 9, 11, 13])]
        k_values: Vec<usize>,
        /// JSONL results file; standard output when omitted.
        #[arg(long)]
        out: Option<PathBuf>,
        /// Additional CSV export of the results.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
    /// Mean error and compute time as the number of readings per sample varies.
    SweepM {
        #[arg(long)]
        scenario: Option<PathBuf>,
        #[command(flatten)]
        method: MethodArgs,
        #[arg(long, default_value_t = 1)]
        k: usize,
        #[arg(long, default_value_t = 4)]
        n_aps: usize,
        #[arg(long, value_delimiter = ',', default_values_t = [5, 10, 15, 20])]
        m_values: Vec<usize>,
        #[arg(long, default_value_t = 10)]
        instances_per_rp: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[command(flatten)]
        propagation: PropagationArgs,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Empirical CDF of the treatment mean errors in a results file.
    ExportCdf {
        #[arg(long)]
        results: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Args)]
struct SimulateArgs {
    /// Scenario JSON; the default scenario when omitted.
    #[arg(long)]
    scenario: Option<PathBuf>,
    #[arg(long, default_value_t = 20)]
    m: usize,
    #[arg(long, default_value_t = 10)]
    instances_per_rp: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    propagation: PropagationArgs,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct PropagationArgs {
    /// Shadowing standard deviation (dB).
    #[arg(long, default_value_t = 3.0)]
    sigma: f64,
    /// Path-loss exponent.
    #[arg(long, default_value_t = 2.5)]
    eta: f64,
    /// RSSI at the reference distance (dBm).
    #[arg(long, default_value_t = -40.0, allow_negative_numbers = true)]
    rssi_at_ref: f64,
    /// Reference distance (m).
    #[arg(long, default_value_t = 1.0)]
    ref_distance: f64,
}

impl PropagationArgs {
    fn params(&self) -> LogNormalParams {
        LogNormalParams {
            ref_distance_m: self.ref_distance,
            rssi_at_ref: self.rssi_at_ref,
            path_loss_exponent: self.eta,
            shadowing_sigma: self.sigma,
        }
    }
}

#[derive(Args)]
struct MethodArgs {
    #[arg(long, value_parser = parse_method)]
    method: Method,
    #[arg(long, default_value_t = -100.0, allow_negative_numbers = true)]
    powed_floor: f64,
    #[arg(long, default_value_t = std::f64::consts::E)]
    powed_beta: f64,
    #[arg(long, default_value_t = 3)]
    pca_components: usize,
}

impl MethodArgs {
    fn config(&self, k: usize, n_aps: usize) -> MethodConfig {
        MethodConfig {
            powed: PowedParams {
                floor_dbm: self.powed_floor,
                beta: self.powed_beta,
            },
            pca_components: self.pca_components,
            ..MethodConfig::new(self.method, k, n_aps)
        }
    }
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: quartloc::Error| e.to_string())
}

#[derive(Clone, Copy, ValueEnum)]
enum ReprArg {
    Quartile,
    Mean,
}

type CliResult<T = ()> = Result<T, Box<dyn std::error::Error>>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}

fn run(command: Command) -> CliResult {
    match command {
        Command::InitScenario { out, ap_height, aps } => {
            let room = RoomDims::new(3.50, 3.56, 2.80);
            let scenario = build_grid_scenario(room, 4, 4, 0.87, &default_ap_layout(room, aps, ap_height))?;
            write_json(&scenario, &out)?;
        }
        Command::Simulate(args) => simulate(args)?,
        Command::BuildFingerprints {
            input,
            representation,
            n_aps,
            out,
            json,
        } => build_fingerprints(&input, representation, n_aps, &out, json.as_deref())?,
        Command::Localize {
            train,
            method,
            k,
            n_aps,
            query,
        } => localize(&train, &method.config(k, n_aps), &query)?,
        Command::Evaluate {
            train,
            test,
            method,
            n_values,
            k_values,
            out,
            csv,
        } => evaluate(&train, &test, &method, GridSpec { n_values, k_values }, out.as_deref(), csv.as_deref())?,
        Command::SweepM {
            scenario,
            method,
            k,
            n_aps,
            m_values,
            instances_per_rp,
            seed,
            propagation,
            out,
        } => {
            let scenario = load_scenario(scenario.as_deref())?;
            let config = method.config(k, n_aps);
            let params = propagation.params();
            let rows = m_sweep(&scenario, &params, &m_values, &config, instances_per_rp, seed)?;
            let mut buf = Vec::new();
            for row in rows {
                let line = SweepLine {
                    schema_version: SCHEMA_VERSION,
                    method: config.method,
                    n_aps,
                    k,
                    m: row.m,
                    mean_error_m: row.mean_error_m,
                    mean_time_s: row.mean_time_s,
                    seed,
                    sigma: params.shadowing_sigma,
                };
                serde_json::to_writer(&mut buf, &line)?;
                buf.push(b'\n');
            }
            emit(&buf, out.as_deref())?;
        }
        Command::ExportCdf { results, out } => {
            let lines = read_results_jsonl(&results)?;
            let errors: Vec<f64> = lines.iter().map(|l| l.mean_error_m).collect();
            write_cdf_csv(&error_cdf(&errors)?, &out)?;
        }
    }
    Ok(())
}

/// One row of `sweep-m` output. `mean_time_s` is wall-clock and varies run to run.
#[derive(Serialize)]
struct SweepLine {
    schema_version: u32,
    method: Method,
    n_aps: usize,
    k: usize,
    m: usize,
    mean_error_m: f64,
    mean_time_s: f64,
    seed: u64,
    sigma: f64,
}

fn load_scenario(path: Option<&Path>) -> CliResult<Scenario> {
    Ok(match path {
        Some(p) => read_scenario(p)?,
        None => Scenario::standard(),
    })
}

fn emit(bytes: &[u8], out: Option<&Path>) -> CliResult {
    match out {
        Some(path) => fs::write(path, bytes).map_err(|e| format!("{}: {e}", path.display()))?,
        None => io::stdout().lock().write_all(bytes)?,
    }
    Ok(())
}

fn simulate(args: SimulateArgs) -> CliResult {
    let spec = GenerationSpec {
        scenario: load_scenario(args.scenario.as_deref())?,
        params: args.propagation.params(),
        m: args.m,
        instances_per_rp: args.instances_per_rp,
        seed: args.seed,
    };
    let samples = generate_dataset(&spec)?;
    let bundle = DatasetBundle::new(DatasetMetadata::for_generation(&spec), samples)?;
    bundle.save(&args.out)?;
    eprintln!(
        "wrote {} samples ({} x {}) to {} (seed {})",
        bundle.samples.len(),
        spec.m,
        spec.scenario.access_points().len(),
        args.out.display(),
        spec.seed
    );
    Ok(())
}

fn build_fingerprints(input: &Path, repr: ReprArg, n_aps: Option<usize>, out: &Path, json: Option<&Path>) -> CliResult {
    let bundle = DatasetBundle::load(input)?;
    let representation = match repr {
        ReprArg::Quartile => Representation::Quartile,
        ReprArg::Mean => Representation::Mean,
    };
    let mut training = build_training_set(&bundle.samples, &bundle.metadata.scenario, representation)?;
    if let Some(n) = n_aps {
        training = training.truncate_aps(n)?;
    }
    write_instances_csv(training.instances(), out)?;
    if let Some(path) = json {
        let doc = FingerprintDocument {
            schema_version: SCHEMA_VERSION,
            representation_tag: training.representation_tag(),
            ap_order: training.ap_ids().to_vec(),
            seed: bundle.metadata.seed(),
            instances: training.instances().to_vec(),
        };
        write_json(&doc, path)?;
    }
    Ok(())
}

fn base_representation(method: Method) -> Representation {
    match method {
        Method::I | Method::II => Representation::Quartile,
        Method::PS | Method::ThreePca => Representation::Mean,
    }
}

#[derive(Serialize)]
struct QueryEstimate {
    /// Label carried by the query file; the true RP when it names one of the scenario's RPs.
    query_rp_id: u32,
    instance_idx: u32,
    #[serde(skip_serializing_if = "Option::is_none")]
    error_m: Option<f64>,
    estimate: PositionEstimate,
}

#[derive(Serialize)]
struct LocalizeOutput {
    schema_version: u32,
    train_seed: Option<u64>,
    estimates: Vec<QueryEstimate>,
}

fn localize(train: &Path, config: &MethodConfig, query: &Path) -> CliResult {
    let bundle = DatasetBundle::load(train)?;
    let scenario = &bundle.metadata.scenario;
    let training = build_training_set(&bundle.samples, scenario, base_representation(config.method))?;
    let locator = Locator::new(config.clone(), &training)?;
    let queries = read_raw_csv(query, &bundle.metadata.ap_order)?;
    if queries.is_empty() {
        return Err(format!("{}: no query samples", query.display()).into());
    }
    let estimates = queries
        .iter()
        .map(|q| {
            let estimate = locator.localize(&q.matrix)?;
            let truth: Option<Coordinates3D> = scenario.rp_position(q.rp_id);
            Ok(QueryEstimate {
                query_rp_id: q.rp_id,
                instance_idx: q.instance_idx,
                error_m: truth.map(|t| euclidean_distance_3d(&t, &estimate.coordinates)),
                estimate,
            })
        })
        .collect::<Result<Vec<_>, quartloc::Error>>()?;
    let out = LocalizeOutput {
        schema_version: SCHEMA_VERSION,
        train_seed: bundle.metadata.seed(),
        estimates,
    };
    let mut stdout = io::stdout().lock();
    serde_json::to_writer_pretty(&mut stdout, &out)?;
    writeln!(stdout)?;
    Ok(())
}

fn evaluate(
    train: &Path,
    test: &Path,
    method: &MethodArgs,
    grid: GridSpec,
    out: Option<&Path>,
    csv: Option<&Path>,
) -> CliResult {
    let train_set = DatasetBundle::load(train)?;
    let test_set = DatasetBundle::load(test)?;
    if train_set.metadata.scenario != test_set.metadata.scenario {
        return Err("training and test datasets were recorded in different scenarios".into());
    }
    if train_set.metadata.ap_order != test_set.metadata.ap_order {
        return Err("training and test datasets use different AP orders".into());
    }
    let template = method.config(1, 1);
    let treatments = treatment_grid(
        &train_set.samples,
        &test_set.samples,
        &train_set.metadata.scenario,
        &template,
        &grid,
    )?;
    let results: Vec<TreatmentResult> = treatments.iter().map(|t| t.result.clone()).collect();
    let lines: Vec<ResultLine> = results
        .iter()
        .map(|r| ResultLine::new(r, train_set.metadata.seed(), test_set.metadata.seed()))
        .collect();
    let mut buf = Vec::new();
    write_results_jsonl(&lines, &mut buf)?;
    emit(&buf, out)?;
    if let Some(path) = csv {
        write_results_csv(&results, path)?;
    }

    let estimates: usize = results.iter().map(|r| r.estimate_count).sum();
    let mean_time = treatments.iter().map(|t| t.mean_time_s()).sum::<f64>() / treatments.len() as f64;
    let summary = format!(
        "{}{} treatments, {} estimates; mean compute time per estimate {:.3e} s (wall clock)\n",
        summary_table(&results),
        results.len(),
        estimates,
        mean_time
    );
    // keep stdout clean when it carries the JSONL
    if out.is_some() {
        print!("{summary}");
    } else {
        eprint!("{summary}");
    }
    Ok(())
}
