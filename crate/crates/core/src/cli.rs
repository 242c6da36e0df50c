//! The `rotorpca` command line.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::config::RunConfig;
use crate::discretization::DiscreteConfig;
use crate::dobrushin::{certify, DEFAULT_RESOLUTION};
use crate::error::{Error, Result};
use crate::io::{Snapshot, TrajectoryWriter};
use crate::observables::{angle_of, magnetization};
use crate::oracle::{check_identities, exact_gibbs_marginal, exact_kernel, DEFAULT_QUAD_ORDER};
use crate::rng::StreamRng;
use crate::rotor_model::ContinuousConfig;
use crate::samplers::{continue_equilibrium, sample_equilibrium, EquilibriumSampler, Schedule};
use crate::srp::{record, SrpChain};

#[derive(Debug, Parser)]
#[command(name = "rotorpca", version, about = "Sample-Rotate-Project dynamics on discretized rotator lattices")]
pub struct Cli {
    /// Cap on worker threads.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate an SRP trajectory and write it as CSV.
    Run(RunArgs),
    /// Check the exact finite-volume identities on a tiny torus.
    Exact(ExactArgs),
    /// Print a Dobrushin certificate as JSON.
    Dobrushin(DobrushinArgs),
    /// Draw an equilibrium configuration and write it as a snapshot.
    Sample(SampleArgs),
}

/// Flags shared by the commands that read a [`RunConfig`].
#[derive(Debug, Args, Default)]
pub struct ModelArgs {
    /// TOML file with defaults for every flag below.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub beta: Option<f64>,
    #[arg(long)]
    pub q: Option<usize>,
    /// Rotation angle in radians.
    #[arg(long, allow_hyphen_values = true, conflicts_with = "tau_frac")]
    pub tau: Option<f64>,
    /// Rotation angle as a fraction of the cell width 2π/q.
    #[arg(long, allow_hyphen_values = true)]
    pub tau_frac: Option<f64>,
    /// Side lengths, e.g. 8x8x8.
    #[arg(long)]
    pub dims: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub sweeps: Option<usize>,
    #[arg(long)]
    pub schedule: Option<Schedule>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

impl ModelArgs {
    pub fn resolve(&self) -> Result<RunConfig> {
        let mut c = match &self.config {
            Some(p) => RunConfig::load(p)?,
            None => RunConfig::default(),
        };
        if let Some(v) = self.beta {
            c.beta = v;
        }
        if let Some(v) = self.q {
            c.q = v;
        }
        if let Some(v) = &self.dims {
            c.dims = v.clone();
        }
        if let Some(v) = self.seed {
            c.seed = v;
        }
        if let Some(v) = self.sweeps {
            c.sweeps = v;
        }
        if let Some(v) = self.schedule {
            c.schedule = v;
        }
        if let Some(v) = &self.out {
            c.output_path = Some(v.display().to_string());
        }
        if let Some(v) = self.tau {
            c.tau = v;
        }
        if let Some(f) = self.tau_frac {
            c.tau = f * std::f64::consts::TAU / c.q as f64;
        }
        Ok(c)
    }
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long)]
    pub steps: Option<usize>,
    /// Write a snapshot after every this many steps, next to the CSV.
    #[arg(long)]
    pub snapshot_every: Option<usize>,
    /// Continue from a snapshot; `--steps` is the total including earlier steps.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    #[arg(long, default_value_t = DEFAULT_QUAD_ORDER)]
    pub quad_order: usize,
    /// Also write the kernel and Gibbs marginal as JSON to this path.
    #[arg(long)]
    pub kernel_out: Option<PathBuf>,
    /// Add this amount to the first kernel entry before checking.
    #[arg(long, hide = true, allow_hyphen_values = true)]
    pub corrupt_kernel: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DobrushinArgs {
    #[arg(long)]
    pub beta: f64,
    #[arg(long)]
    pub q: usize,
    #[arg(long, default_value_t = 3)]
    pub d: usize,
    #[arg(long, default_value_t = DEFAULT_RESOLUTION)]
    pub resolution: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct SampleArgs {
    #[command(flatten)]
    pub model: ModelArgs,
    /// `periodic` or `fixed:<angle>`.
    #[arg(long)]
    pub boundary: Option<String>,
    /// Continue the chain stored in this snapshot for `--sweeps` more sweeps.
    #[arg(long)]
    pub resume: Option<PathBuf>,
}

fn open_out(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(BufWriter::new(File::create(p)?)),
        None => Box::new(BufWriter::new(std::io::stdout().lock())),
    })
}

fn emit(path: Option<&Path>, text: &str) -> Result<()> {
    let mut out = open_out(path)?;
    writeln!(out, "{text}")?;
    out.flush()?;
    Ok(())
}

/// `traj.csv` → `traj.step000040.json`
pub fn snapshot_path(out: &Path, step: u64) -> PathBuf {
    out.with_extension(format!("step{step:06}.json"))
}

pub fn cmd_run(args: &RunArgs) -> Result<()> {
    let mut config = args.model.resolve()?;
    if let Some(s) = args.steps {
        config.steps = s;
    }
    if args.snapshot_every.is_some() {
        config.snapshot_every = args.snapshot_every;
    }
    config.validate()?;
    let params = config.model_params()?;
    let n = params.lattice.site_count();
    let out_path = config.output_path.as_ref().map(PathBuf::from);
    if config.snapshot_every.is_some() && out_path.is_none() {
        return Err(Error::Config("snapshots need --out".into()));
    }

    let (initial, mut rng, start) = match &args.resume {
        Some(p) => {
            let snap = Snapshot::load(p)?;
            if snap.q != params.q || snap.labels.len() != n {
                return Err(Error::Config("snapshot does not match the model".into()));
            }
            let rng = StreamRng::from_state_hex(&snap.rng_state)?;
            (DiscreteConfig::new(snap.labels, params.q)?, rng, snap.step)
        }
        None => (DiscreteConfig::constant(n, 0, params.q), StreamRng::new(config.seed), 0),
    };
    if start >= config.steps as u64 {
        return Err(Error::Config(format!(
            "snapshot is at step {start}, nothing left to do for {} steps",
            config.steps
        )));
    }

    let mut chain = SrpChain::new(&params, initial, config.sampler_settings())?;
    let mut writer = TrajectoryWriter::new(open_out(out_path.as_deref())?)?;
    for t in start..config.steps as u64 {
        let outcome = chain.step(&mut rng);
        writer.write(&record(&params, t as usize, &outcome))?;
        if let (Some(every), Some(out)) = (config.snapshot_every, &out_path) {
            if (t + 1) % every as u64 == 0 {
                Snapshot::new(t + 1, params.q, chain.state().labels.clone(), rng.state_hex())
                    .save(&snapshot_path(out, t + 1))?;
            }
        }
    }
    writer.finish()?;
    Ok(())
}

/// Runs the identity suite; `Ok(false)` when any check fails.
pub fn cmd_exact(args: &ExactArgs) -> Result<bool> {
    let config = args.model.resolve()?;
    let params = config.model_params()?;
    let mut m = exact_kernel(&params, args.quad_order)?;
    let m_rev = exact_kernel(&params.with_tau(-params.tau)?, args.quad_order)?;
    let mu = exact_gibbs_marginal(&params, args.quad_order)?;
    if let Some(eps) = args.corrupt_kernel {
        m.entries[0] += eps;
    }
    let report = check_identities(&params, args.quad_order, &m, &m_rev, &mu);
    for c in &report.checks {
        eprintln!("{}", c.line());
    }
    emit(
        config.output_path.as_deref().map(Path::new),
        &serde_json::to_string_pretty(&report)?,
    )?;
    if let Some(p) = &args.kernel_out {
        let doc = serde_json::json!({ "kernel": m, "gibbs_marginal": mu });
        std::fs::write(p, serde_json::to_string(&doc)? + "\n")?;
    }
    Ok(report.all_pass)
}

pub fn cmd_dobrushin(args: &DobrushinArgs) -> Result<()> {
    let report = certify(args.beta, args.q, args.d, args.resolution)?;
    eprintln!("{}", report.line());
    emit(args.out.as_deref(), &serde_json::to_string_pretty(&report)?)
}

pub fn cmd_sample(args: &SampleArgs) -> Result<()> {
    let mut config = args.model.resolve()?;
    if let Some(b) = &args.boundary {
        config.boundary = b.clone();
    }
    config.validate()?;
    let params = config.model_params()?;
    let boundary = config.boundary()?;
    let settings = config.sampler_settings();

    let (cfg, rng, step) = match &args.resume {
        Some(p) => {
            let snap = Snapshot::load(p)?;
            let angles = snap
                .angles
                .ok_or_else(|| Error::Config("snapshot has no continuous angles".into()))?;
            let mut rng = StreamRng::from_state_hex(&snap.rng_state)?;
            let cfg = continue_equilibrium(
                &params,
                boundary,
                ContinuousConfig::new(angles)?,
                settings.sweeps,
                settings.schedule,
                &mut rng,
            )?;
            (cfg, rng, snap.step + settings.sweeps as u64)
        }
        None => {
            // validates the schedule against the lattice before sampling
            EquilibriumSampler::new(&params, boundary, settings.schedule)?;
            let mut rng = StreamRng::new(config.seed);
            let cfg = sample_equilibrium(&params, boundary, &settings, &mut rng)?;
            (cfg, rng, settings.sweeps as u64)
        }
    };

    let m = magnetization(&cfg);
    let labels = DiscreteConfig::from_angles(&cfg.angles, params.q).labels;
    let mut snap = Snapshot::new(step, params.q, labels, rng.state_hex());
    snap.angle = angle_of(m).ok();
    snap.magnetization = Some(m);
    snap.angles = Some(cfg.angles);
    emit(config.output_path.as_deref().map(Path::new), &snap.to_json()?)
}

/// Process exit code for a parsed command line.
pub fn run(cli: Cli) -> i32 {
    if let Some(t) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("error: {e}");
            return 2;
        }
    }
    let result = match &cli.command {
        Command::Run(a) => cmd_run(a).map(|_| true),
        Command::Exact(a) => cmd_exact(a),
        Command::Dobrushin(a) => cmd_dobrushin(a).map(|_| true),
        Command::Sample(a) => cmd_sample(a).map(|_| true),
    };
    match result {
        Ok(true) => 0,
        Ok(false) => 1,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}
