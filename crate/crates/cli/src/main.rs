use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::json;

use twinfock::baselines::{
    analytic_meanfield_rollout, constant_q_rollout, default_greedy_grid, default_ramp_grids, greedy_rollout, linspace,
    ramp_search,
};
use twinfock::config::{ConfigFile, ResolvedConfig, SystemKind};
use twinfock::env::{Environment, Init, MeanFieldEnv, QuantumEnv, RewardForm, SystemSpec};
use twinfock::eval::{
    generalize, noise_eval, policy_map, rollout, write_generalization_csv, ActionMode, PolicyController, RunRecord,
};
use twinfock::rl::{save_learning_curve, train, Checkpoint, InitMode, PolicyParams};
use twinfock::seed::SeedTree;
use twinfock::Exec;

#[derive(Parser)]
#[command(name = "twinfock", version, about = "Train and evaluate controllers for twin-Fock state preparation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Train a PPO policy and write a checkpoint plus learning curve.
    Train(TrainArgs),
    /// Evaluate a trained checkpoint.
    Eval(EvalArgs),
    /// Run a non-learning reference protocol.
    Baseline(BaselineArgs),
}

/// Configuration flags shared by `train` and `baseline`; they override the config file.
#[derive(Args, Debug, Default)]
struct ConfigArgs {
    /// TOML config file.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    system: Option<SystemKind>,
    #[arg(long)]
    n_atoms: Option<usize>,
    #[arg(long, allow_hyphen_values = true)]
    c2: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    q_min: Option<f64>,
    #[arg(long, allow_hyphen_values = true)]
    q_max: Option<f64>,
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    steps: Option<usize>,
    #[arg(long)]
    substeps: Option<usize>,
    #[arg(long)]
    reward: Option<RewardForm>,
    #[arg(long)]
    init: Option<InitMode>,
    /// Comma-separated hidden layer widths.
    #[arg(long, value_delimiter = ',')]
    hidden_sizes: Option<Vec<usize>>,
    #[arg(long)]
    gamma: Option<f64>,
    #[arg(long)]
    gae_lambda: Option<f64>,
    #[arg(long)]
    lr_actor: Option<f64>,
    #[arg(long)]
    lr_critic: Option<f64>,
    #[arg(long)]
    target_kl: Option<f64>,
    #[arg(long)]
    clip_ratio: Option<f64>,
    #[arg(long)]
    epochs_per_update: Option<usize>,
    #[arg(long)]
    episodes_per_epoch: Option<usize>,
    #[arg(long, alias = "epochs")]
    total_epochs: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl ConfigArgs {
    fn resolve(&self) -> Result<ResolvedConfig> {
        let file = match &self.config {
            Some(p) => ConfigFile::load(p).with_context(|| format!("reading config {}", p.display()))?,
            None => ConfigFile::default(),
        };
        let flags = ConfigFile {
            system: self.system,
            n_atoms: self.n_atoms,
            c2: self.c2,
            q_min: self.q_min,
            q_max: self.q_max,
            dt: self.dt,
            steps: self.steps,
            substeps: self.substeps,
            reward: self.reward,
            init: self.init,
            hidden_sizes: self.hidden_sizes.clone(),
            gamma: self.gamma,
            gae_lambda: self.gae_lambda,
            lr_actor: self.lr_actor,
            lr_critic: self.lr_critic,
            target_kl: self.target_kl,
            clip_ratio: self.clip_ratio,
            epochs_per_update: self.epochs_per_update,
            episodes_per_epoch: self.episodes_per_epoch,
            total_epochs: self.total_epochs,
            seed: self.seed,
        };
        Ok(file.merged(&flags).resolve()?)
    }
}

#[derive(Args)]
struct TrainArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    /// Output directory (created if missing).
    #[arg(long)]
    out: PathBuf,
    /// Rollout worker threads; 1 keeps runs bit-reproducible.
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum EvalMode {
    Rollout,
    Map,
    Noise,
    Generalize,
}

#[derive(Args)]
struct EvalArgs {
    #[arg(long)]
    checkpoint: PathBuf,
    #[arg(long, value_enum)]
    mode: EvalMode,
    #[arg(long)]
    out: PathBuf,
    /// Seed for stochastic modes; defaults to the checkpoint's training seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Rollout: sample actions instead of applying the policy mean.
    #[arg(long)]
    stochastic: bool,
    /// Rollout: start state.
    #[arg(long, default_value = "fixed")]
    init: InitMode,
    /// Noise strength in units of |c2|.
    #[arg(long, default_value_t = 0.1)]
    sigma: f64,
    #[arg(long, default_value_t = 100)]
    samples: usize,
    /// Comma-separated even atom numbers.
    #[arg(long, value_delimiter = ',', default_value = "4,6,8,12,14,16,18,20")]
    n_list: Vec<usize>,
    #[arg(long, default_value_t = 101)]
    n_theta: usize,
    #[arg(long, default_value_t = 101)]
    n_rho: usize,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Which {
    Greedy,
    Ramp,
    Analytic,
    Constant,
}

#[derive(Args)]
struct BaselineArgs {
    #[command(flatten)]
    cfg: ConfigArgs,
    #[arg(long, value_enum)]
    which: Which,
    /// Control value for `constant`.
    #[arg(long, allow_hyphen_values = true)]
    q: Option<f64>,
    /// Greedy grid size over [q_min, q_max].
    #[arg(long, default_value_t = 121)]
    grid_points: usize,
    /// Ramp grid size for q_i and q_f.
    #[arg(long, default_value_t = 25)]
    ramp_points: usize,
    /// Number of ramp durations, evenly spaced up to the horizon.
    #[arg(long, default_value_t = 10)]
    ramp_times: usize,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    workers: usize,
}

fn main() {
    let cli = Cli::parse();
    let res = match cli.command {
        Command::Train(a) => cmd_train(a),
        Command::Eval(a) => cmd_eval(a),
        Command::Baseline(a) => cmd_baseline(a),
    };
    if let Err(e) = res {
        eprintln!("error: {e:#}");
        std::process::exit(1);
    }
}

fn write_json(path: &Path, value: &serde_json::Value) -> Result<()> {
    fs::write(path, serde_json::to_string_pretty(value)?).with_context(|| format!("writing {}", path.display()))
}

fn manifest(dir: &Path, command: &str, seed: u64, workers: usize, extra: serde_json::Value) -> Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let m = json!({
        "tool": "twinfock",
        "version": env!("CARGO_PKG_VERSION"),
        "command": command,
        "argv": args,
        "seed": seed,
        "workers": workers,
        "details": extra,
    });
    write_json(&dir.join("manifest.json"), &m)
}

fn create_out(dir: &Path) -> Result<()> {
    fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))
}

fn cmd_train(a: TrainArgs) -> Result<()> {
    let cfg = a.cfg.resolve()?;
    let exec = Exec::with_workers(a.workers);
    let outcome = match cfg.system {
        SystemSpec::Meanfield { dynamics, reward } => train(&MeanFieldEnv::new(dynamics, reward)?, &cfg.train, cfg.init, &exec)?,
        SystemSpec::Quantum(q) => train(&QuantumEnv::new(q)?, &cfg.train, cfg.init, &exec)?,
    };
    // everything ran; only now touch the filesystem
    create_out(&a.out)?;
    let ck = Checkpoint::new(cfg.system, cfg.init, cfg.train.clone(), outcome.params);
    ck.save(&a.out.join("checkpoint.json"))?;
    save_learning_curve(&outcome.curve, &a.out.join("learning_curve.csv"))?;
    fs::write(a.out.join("config.toml"), cfg.to_file().to_toml()?)?;
    let last = outcome.curve.last().expect("at least one epoch");
    manifest(&a.out, "train", cfg.train.seed, a.workers, json!({ "config": cfg, "final_epoch": last }))?;
    println!(
        "trained {} epochs: mean return {:.4}, mean final fidelity {:.4}",
        outcome.curve.len(),
        last.mean_return,
        last.mean_final_fidelity
    );
    Ok(())
}

fn policy_rollout<E: Environment>(env: &E, params: &PolicyParams, init: InitMode, mode: ActionMode, seeds: SeedTree) -> Result<RunRecord> {
    let mut ctrl = PolicyController { params, mode };
    Ok(rollout(&mut env.clone(), &init.to_init(), &mut seeds.child("init").rng(), &mut ctrl)?)
}

fn cmd_eval(a: EvalArgs) -> Result<()> {
    let ck = Checkpoint::load(&a.checkpoint).with_context(|| format!("loading checkpoint {}", a.checkpoint.display()))?;
    let seed = a.seed.unwrap_or(ck.seed());
    let seeds = SeedTree::new(seed);
    let exec = Exec::with_workers(a.workers);
    let params = &ck.params;
    if matches!(a.mode, EvalMode::Generalize) && !matches!(ck.system, SystemSpec::Quantum(_)) {
        bail!("generalize needs a quantum checkpoint; this one was trained on the {} system", ck.system.name());
    }
    if a.n_theta < 2 || a.n_rho < 2 {
        bail!("policy map grid must be at least 2x2");
    }
    if a.samples == 0 || !(a.sigma >= 0.0) {
        bail!("noise evaluation needs samples >= 1 and sigma >= 0");
    }
    create_out(&a.out)?;
    let mode = if a.stochastic { ActionMode::Stochastic(seeds.child("rollout").rng()) } else { ActionMode::Deterministic };
    let summary = match a.mode {
        EvalMode::Rollout => {
            let rec = match ck.system {
                SystemSpec::Meanfield { dynamics, reward } => policy_rollout(&MeanFieldEnv::new(dynamics, reward)?, params, a.init, mode, seeds)?,
                SystemSpec::Quantum(q) => policy_rollout(&QuantumEnv::new(q)?, params, a.init, mode, seeds)?,
            };
            rec.save_csv(&a.out.join("rollout.csv"))?;
            json!({ "mode": "rollout", "stochastic": a.stochastic, "init": a.init, "summary": rec.summary() })
        }
        EvalMode::Map => {
            let m = policy_map(params, a.n_theta, a.n_rho)?;
            m.save_csv(&a.out.join("policy_map.csv"))?;
            json!({ "mode": "map", "n_theta": a.n_theta, "n_rho": a.n_rho })
        }
        EvalMode::Noise => {
            let c2 = match ck.system {
                SystemSpec::Meanfield { dynamics, .. } => dynamics.c2,
                SystemSpec::Quantum(q) => q.c2,
            };
            let sigma = a.sigma * c2.abs();
            let rep = match ck.system {
                SystemSpec::Meanfield { dynamics, reward } => {
                    noise_eval(&MeanFieldEnv::new(dynamics, reward)?, params, sigma, a.samples, seeds, &exec)?
                }
                SystemSpec::Quantum(q) => noise_eval(&QuantumEnv::new(q)?, params, sigma, a.samples, seeds, &exec)?,
            };
            rep.save_csv(&a.out.join("noise.csv"))?;
            json!({
                "mode": "noise",
                "sigma": sigma,
                "sigma_over_abs_c2": a.sigma,
                "samples": a.samples,
                "final_mean_fidelity": rep.final_mean(),
                "final_std_fidelity": rep.final_std(),
            })
        }
        EvalMode::Generalize => {
            let SystemSpec::Quantum(base) = ck.system else { unreachable!() };
            let rows = generalize(params, &base, &a.n_list, &exec)?;
            write_generalization_csv(&rows, fs::File::create(a.out.join("generalize.csv"))?)?;
            json!({ "mode": "generalize", "trained_n_atoms": base.n_atoms, "rows": rows })
        }
    };
    write_json(&a.out.join("summary.json"), &summary)?;
    manifest(
        &a.out,
        "eval",
        seed,
        a.workers,
        json!({ "checkpoint": a.checkpoint, "config": { "system": ck.system, "init": ck.init, "train": ck.train }, "summary": summary }),
    )?;
    println!("{}", serde_json::to_string(&summary)?);
    Ok(())
}

fn run_baseline<E: Environment>(env: &E, a: &BaselineArgs, cfg: &ResolvedConfig, exec: &Exec) -> Result<(RunRecord, serde_json::Value)> {
    let seeds = SeedTree::new(cfg.train.seed);
    let init: Init<E::State> = cfg.init.to_init();
    let (lo, hi) = env.q_bounds();
    // random starts draw from the same stream for every candidate protocol
    let fixed_start = |env: &E| -> Result<Init<E::State>> {
        match init {
            Init::Random => {
                let mut e = env.clone();
                e.reset(&Init::Random, &mut seeds.child("init").rng())?;
                Ok(Init::Explicit(e.state().clone()))
            }
            _ => Ok(init.clone()),
        }
    };
    let start = fixed_start(env)?;
    Ok(match a.which {
        Which::Constant => {
            let q = a.q.context("--q is required for the constant baseline")?;
            let rec = constant_q_rollout(&mut env.clone(), &start, q)?;
            let s = rec.summary();
            (rec, json!({ "which": "constant", "q": q, "summary": s }))
        }
        Which::Greedy => {
            let grid = if a.grid_points == 121 { default_greedy_grid(lo, hi) } else { linspace(lo, hi, a.grid_points) };
            let rec = greedy_rollout(&mut env.clone(), &start, &grid, exec)?;
            let s = rec.summary();
            (rec, json!({ "which": "greedy", "grid_points": grid.len(), "summary": s }))
        }
        Which::Ramp => {
            let (_, _, t_default) = default_ramp_grids(lo, hi, env.horizon());
            let q = linspace(lo, hi, a.ramp_points);
            let t = if a.ramp_times == t_default.len() { t_default } else { linspace(env.horizon() / a.ramp_times as f64, env.horizon(), a.ramp_times) };
            let res = ramp_search(env, &start, &q, &q, &t, exec)?;
            let s = res.record.summary();
            let rec = res.record.clone();
            (
                rec,
                json!({
                    "which": "ramp",
                    "best": res.best,
                    "final_fidelity": res.final_fidelity,
                    "evaluated": res.evaluated,
                    "summary": s,
                }),
            )
        }
        Which::Analytic => unreachable!("checked by caller"),
    })
}

fn cmd_baseline(a: BaselineArgs) -> Result<()> {
    let cfg = a.cfg.resolve()?;
    if matches!(a.which, Which::Analytic) && !matches!(cfg.system, SystemSpec::Meanfield { .. }) {
        bail!("the analytic baseline exists only for the mean-field system");
    }
    if a.grid_points == 0 || a.ramp_points == 0 || a.ramp_times == 0 {
        bail!("baseline grids must be non-empty");
    }
    let exec = Exec::with_workers(a.workers);
    let (rec, summary) = match cfg.system {
        SystemSpec::Meanfield { dynamics, reward } => {
            let env = MeanFieldEnv::new(dynamics, reward)?;
            if matches!(a.which, Which::Analytic) {
                let init = match cfg.init {
                    InitMode::Fixed => Init::Fixed,
                    InitMode::Random => {
                        let mut e = env.clone();
                        e.reset(&Init::Random, &mut SeedTree::new(cfg.train.seed).child("init").rng())?;
                        Init::Explicit(*e.state())
                    }
                };
                let rec = analytic_meanfield_rollout(&mut env.clone(), &init)?;
                let s = rec.summary();
                (rec, json!({ "which": "analytic", "summary": s }))
            } else {
                run_baseline(&env, &a, &cfg, &exec)?
            }
        }
        SystemSpec::Quantum(q) => {
            let env = QuantumEnv::new(q)?;
            // grid-valued controls repeat, so share propagators
            let env = if matches!(a.which, Which::Greedy | Which::Constant) { env.with_cache() } else { env };
            run_baseline(&env, &a, &cfg, &exec)?
        }
    };
    create_out(&a.out)?;
    rec.save_csv(&a.out.join("record.csv"))?;
    write_json(&a.out.join("summary.json"), &summary)?;
    fs::write(a.out.join("config.toml"), cfg.to_file().to_toml()?)?;
    manifest(&a.out, "baseline", cfg.train.seed, a.workers, json!({ "config": cfg, "summary": summary }))?;
    println!("{}", serde_json::to_string(&summary)?);
    Ok(())
}

