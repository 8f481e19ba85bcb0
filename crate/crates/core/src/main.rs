use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use hbd_relay::harness::checks::run_invariant_suite;
use hbd_relay::harness::output::{csv_bytes, emit_results, load_manifest, load_scenarios, sha256_hex};
use hbd_relay::harness::presets::preset;
use hbd_relay::harness::{run_sweep_with_workers, Scenario, CI_REALIZATIONS};
use hbd_relay::model::SystemConfig;
use hbd_relay::relay_design::RelayMode;
use hbd_relay::{Error, Result};

#[derive(Parser)]
#[command(name = "relaysim", version, about = "Hybrid BD two-way relay simulator")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a Monte-Carlo sweep and write CSV plus manifest per curve.
    Simulate {
        /// Preset name (fig2..fig5) or path to a scenario TOML file.
        #[arg(long)]
        scenario: String,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        realizations: Option<usize>,
        /// Shorthand for `--realizations 50`.
        #[arg(long, conflicts_with = "realizations")]
        ci: bool,
        #[arg(long, value_delimiter = ',')]
        modes: Option<Vec<RelayMode>>,
        #[arg(long, default_value = "results")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run the structural invariant suite.
    Check {
        #[arg(long, required = true)]
        invariants: bool,
        #[arg(long, default_value_t = 20)]
        realizations: u64,
    },
    /// Re-run the sweep recorded in a manifest and compare the CSV.
    Replay {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        /// Where to write the regenerated CSV (defaults to next to the manifest).
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1)
}

fn scenarios_for(arg: &str) -> Result<Vec<Scenario>> {
    if let Some(s) = preset(arg) {
        return Ok(s);
    }
    let path = Path::new(arg);
    if path.exists() {
        return load_scenarios(path);
    }
    Err(Error::Scenario(format!(
        "`{arg}` is neither a preset (fig2, fig3, fig4, fig5) nor a readable file"
    )))
}

fn simulate(
    scenario: &str,
    seed: Option<u64>,
    realizations: Option<usize>,
    modes: Option<Vec<RelayMode>>,
    out: &Path,
    workers: usize,
) -> Result<()> {
    let mut scenarios = scenarios_for(scenario)?;
    for s in &mut scenarios {
        if let Some(seed) = seed {
            s.base.seed = seed;
        }
        if let Some(n) = realizations {
            s.realizations = n;
        }
        if let Some(m) = &modes {
            s.modes = m.clone();
        }
        s.validate()?;
    }
    for s in &scenarios {
        let result = run_sweep_with_workers(s, workers)?;
        let files = emit_results(s, &result, out)?;
        for row in &result.rows {
            eprintln!(
                "{:<14} {}={:<6} {:<8} SE={:.4} ± {:.4} (n={}, conv={:.3})",
                s.name, row.sweep_var, row.value, row.mode, row.mean_sum_se, row.stderr, row.n, row.convergence_rate
            );
        }
        println!("{}", files.csv.display());
        println!("{}", files.manifest.display());
    }
    Ok(())
}

fn check(realizations: u64) -> Result<bool> {
    let cfg = SystemConfig::from_snr_db(20.0, 4, 2, 2, 64);
    let outcomes = run_invariant_suite(&cfg, realizations)?;
    let mut ok = true;
    for c in &outcomes {
        let tag = if c.passed() { "PASS" } else { "FAIL" };
        ok &= c.passed();
        println!("{tag} {:<40} worst={:.3e} limit={:.1e}", c.name, c.worst, c.limit);
    }
    Ok(ok)
}

fn replay(manifest_path: &Path, workers: usize, out: Option<&Path>) -> Result<bool> {
    let manifest = load_manifest(manifest_path)?;
    if manifest.library_version != env!("CARGO_PKG_VERSION") {
        eprintln!(
            "warning: manifest written by version {}, running {}",
            manifest.library_version,
            env!("CARGO_PKG_VERSION")
        );
    }
    let result = run_sweep_with_workers(&manifest.scenario, workers)?;
    let bytes = csv_bytes(&result.rows)?;
    let digest = sha256_hex(&bytes);
    let dir = match out {
        Some(d) => d.to_path_buf(),
        None => manifest_path.parent().map(Path::to_path_buf).unwrap_or_default(),
    };
    std::fs::create_dir_all(&dir).map_err(|source| Error::Io {
        path: dir.clone(),
        source,
    })?;
    let path = dir.join(format!("{}.replay.csv", manifest.scenario.name));
    std::fs::write(&path, &bytes).map_err(|source| Error::Io {
        path: path.clone(),
        source,
    })?;
    let same = digest == manifest.csv_sha256;
    println!("{}", path.display());
    println!("{} csv sha256 {digest}", if same { "MATCH" } else { "MISMATCH" });
    Ok(same)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match cli.command {
        Command::Simulate {
            scenario,
            seed,
            realizations,
            ci,
            modes,
            out,
            workers,
        } => {
            let realizations = if ci { Some(CI_REALIZATIONS) } else { realizations };
            simulate(&scenario, seed, realizations, modes, &out, workers.unwrap_or_else(default_workers)).map(|_| true)
        }
        Command::Check { realizations, .. } => check(realizations),
        Command::Replay { manifest, workers, out } => {
            replay(&manifest, workers.unwrap_or_else(default_workers), out.as_deref())
        }
    };
    match outcome {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
