use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use moralsim::experiment::{
    execute_plan, load_plan, parse_agent, run_plan, summary_csv_string, ExperimentPlan, Outputs, Pairing, Variants,
    DEFAULT_SUMMARY_FILE, OUT_DIR_ENV,
};
use moralsim::{
    last_k_trace, oracle_best_response, run_episode_logged, Error, ExplorationSchedule, GameKind, LogOptions,
    StaticStrategy,
};

#[derive(Parser)]
#[command(name = "moralsim", version, about = "Moral Q-learning agents in iterated social dilemmas")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment plan and write its outputs.
    Run {
        config: PathBuf,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
        /// Overrides the plan's base seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Directory for relative output paths.
        #[arg(long, env = OUT_DIR_ENV, default_value = ".")]
        out: PathBuf,
    },
    /// Run one matchup and print its summary row as CSV.
    Pair {
        #[arg(long)]
        game: GameKind,
        #[arg(long = "m")]
        agent_m: String,
        #[arg(long = "o")]
        agent_o: String,
        #[arg(long, default_value_t = 100)]
        runs: usize,
        #[arg(long, default_value_t = 10_000)]
        iters: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Constant exploration rate instead of the linear decay.
        #[arg(long)]
        epsilon: Option<f64>,
        #[arg(long, default_value_t = default_workers())]
        workers: usize,
    },
    /// Print the optimal policy against a deterministic static opponent.
    Oracle {
        #[arg(long)]
        game: GameKind,
        #[arg(long)]
        opponent: StaticStrategy,
        #[arg(long)]
        framework: String,
        #[arg(long, default_value_t = 0.9)]
        gamma: f64,
    },
    /// Print the last K moves of one episode.
    Trace {
        #[arg(long)]
        game: GameKind,
        #[arg(long = "m")]
        agent_m: String,
        #[arg(long = "o")]
        agent_o: String,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 20)]
        last: usize,
        #[arg(long, default_value_t = 10_000)]
        iters: usize,
    },
}

fn default_workers() -> usize {
    std::thread::available_parallelism().map_or(1, |n| n.get())
}

fn main() -> ExitCode {
    match dispatch(Cli::parse().command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn dispatch(command: Command) -> Result<(), Error> {
    match command {
        Command::Run { config, workers, seed, out } => {
            let mut plan = load_plan(&config)?;
            if let Some(seed) = seed {
                plan.base_seed = seed;
            }
            plan.outputs.rebase(&out);
            let bundle = run_plan(&plan, workers)?;
            eprintln!("{} matchups written to {}", bundle.summaries.len(), plan.outputs.summary_csv.display());
        }
        Command::Pair { game, agent_m, agent_o, runs, iters, seed, epsilon, workers } => {
            let schedule = epsilon.map(|eps| ExplorationSchedule::Constant { eps });
            let plan = ExperimentPlan {
                games: vec![game],
                agents: vec![parse_agent(&agent_m)?, parse_agent(&agent_o)?],
                pairing: Pairing::Explicit(vec![(0, 1)]),
                iterations: iters,
                n_runs: runs,
                base_seed: seed,
                variants: Variants::default(),
                outputs: Outputs { summary_csv: PathBuf::from(DEFAULT_SUMMARY_FILE), steps_csv: None, json: None },
            };
            let plan = match schedule {
                Some(s) => {
                    ExperimentPlan { variants: Variants { schedule_override: Some(s), ..plan.variants }, ..plan }
                }
                None => plan,
            };
            // With an epsilon override only the override row is printed.
            let mut bundle = execute_plan(&plan, workers, LogOptions::tail_only(1), |_, _| Ok(()))?;
            if schedule.is_some() {
                bundle.summaries.remove(0);
            }
            print!("{}", summary_csv_string(&bundle)?);
        }
        Command::Oracle { game, opponent, framework, gamma } => {
            let fw = match parse_agent(&framework)? {
                moralsim::AgentSpec::Learner(p) => p.framework,
                moralsim::AgentSpec::Static(s) => {
                    return Err(Error::Config(format!("{s} is a static strategy, not a moral framework")))
                }
            };
            let sol = oracle_best_response(opponent, game, &fw, gamma)?;
            println!("{} vs {opponent} in {game} (gamma={gamma}), {} sweeps", fw.label(), sol.sweeps);
            for (s, choice) in sol.policy.iter() {
                let [qc, qd] = sol.values.row(s);
                println!("{s} -> {choice}  Q(C)={qc:.6} Q(D)={qd:.6}");
            }
        }
        Command::Trace { game, agent_m, agent_o, seed, last, iters } => {
            let (m, o) = (parse_agent(&agent_m)?, parse_agent(&agent_o)?);
            let log = LogOptions::tail_only(last);
            let result = run_episode_logged(&m, &o, game, iters, seed, log)?;
            let trace = last_k_trace(&result, last)?;
            let first_t = iters - trace.m.len();
            println!("t,state_m,a_m,state_o,a_o");
            for (i, ((sm, am), (so, ao))) in trace.m.iter().zip(&trace.o).enumerate() {
                println!("{},\"{}\",{am},\"{}\",{ao}", first_t + i, sm.key(), so.key());
            }
        }
    }
    Ok(())
}
