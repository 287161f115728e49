use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use bmgame_core::game::{GameConfig, GameKind, Transcript};
use bmgame_core::metric_game::play_metric_config;
use bmgame_core::strategies::play_config;
use bmgame_core::verify::verify_transcript;

const EXIT_VERIFY_FAIL: u8 = 1;
const EXIT_USAGE: u8 = 2;
const EXIT_ABORT: u8 = 3;
const EXIT_PARSE: u8 = 4;

#[derive(Parser)]
#[command(name = "bmgame", version, about = "Play and verify Banach-Mazur games over polyhedral normed spaces and finite metric spaces")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Play a complete game and write its transcript.
    Play(PlayArgs),
    /// Replay a transcript and re-check every certificate.
    Verify {
        path: PathBuf,
        /// Print the full report as JSON.
        #[arg(long)]
        json: bool,
    },
    /// Run the HTTP session service.
    Serve {
        /// Port to listen on; defaults to $BMGAME_PORT or 8080.
        #[arg(long)]
        port: Option<u16>,
    },
}

#[derive(Args)]
struct PlayArgs {
    /// normed, normed-restricted or metric.
    #[arg(long, default_value = "normed")]
    kind: GameKind,
    /// random, spike, linf, script, universality, mirror (metric: random, point).
    #[arg(long, default_value = "random")]
    eve: String,
    /// gurarii, restricted, trivial (metric: urysohn, trivial).
    #[arg(long)]
    odd: Option<String>,
    /// Space class for restricted games.
    #[arg(long)]
    class: Option<String>,
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    rounds: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Output path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Catalog dimension cap.
    #[arg(long, default_value_t = 2)]
    d: usize,
    /// Catalog denominator cap.
    #[arg(long, default_value_t = 4, value_parser = clap::value_parser!(u64).range(1..))]
    q: u64,
    /// Challenges enqueued per Odd turn.
    #[arg(long, default_value_t = 2)]
    budget: usize,
    #[arg(long, default_value_t = 64)]
    max_dim: usize,
    /// Eve mirrors Odd's strategy one round behind.
    #[arg(long)]
    mirror: bool,
    /// Stages counted by the metric coverage report.
    #[arg(long, default_value_t = 0)]
    coverage_stages: usize,
}

impl PlayArgs {
    fn config(&self) -> GameConfig {
        let kind = if self.class.is_some() && self.kind == GameKind::Normed { GameKind::NormedRestricted } else { self.kind };
        let odd = self.odd.clone().unwrap_or_else(|| {
            match kind {
                GameKind::Normed => "gurarii",
                GameKind::NormedRestricted => "restricted",
                GameKind::Metric => "urysohn",
            }
            .into()
        });
        let eve = if self.mirror { "mirror".to_string() } else { self.eve.clone() };
        let rounds = self.rounds as usize;
        let base = match kind {
            GameKind::Normed => GameConfig::normed(&eve, &odd, rounds, self.seed),
            GameKind::NormedRestricted => {
                GameConfig::restricted(&eve, &odd, self.class.as_deref().unwrap_or("linf"), rounds, self.seed)
            }
            GameKind::Metric => GameConfig::metric(&eve, &odd, rounds, self.seed),
        };
        GameConfig {
            d: self.d,
            q: self.q,
            budget: self.budget,
            max_dim: self.max_dim,
            mirror: self.mirror,
            coverage_stages: self.coverage_stages,
            ..base
        }
    }
}

fn play(args: &PlayArgs) -> ExitCode {
    let config = args.config();
    let result = match config.kind {
        GameKind::Metric => play_metric_config(&config).map(|(t, _)| t),
        _ => play_config(&config).map(|(t, _)| t),
    };
    let t = match result {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    };
    let text = t.to_json();
    match &args.out {
        Some(p) => {
            if let Err(e) = std::fs::write(p, text + "\n") {
                eprintln!("error: cannot write {}: {e}", p.display());
                return ExitCode::from(EXIT_USAGE);
            }
        }
        None => println!("{text}"),
    }
    match &t.abort {
        Some(a) => {
            eprintln!("game aborted: {a}");
            ExitCode::from(EXIT_ABORT)
        }
        None => {
            eprintln!("played {} rounds, {} certificates", t.moves.len(), t.certificates.len());
            ExitCode::SUCCESS
        }
    }
}

fn verify(path: &PathBuf, as_json: bool) -> ExitCode {
    let text = match std::fs::read_to_string(path) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: cannot read {}: {e}", path.display());
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let t = match Transcript::from_json(&text) {
        Ok(t) => t,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_PARSE);
        }
    };
    let r = verify_transcript(&t);
    if as_json {
        println!("{}", serde_json::to_string_pretty(&r).expect("report serializes"));
    }
    for f in r.failures() {
        println!("  {f}");
    }
    if let Some(o) = &r.odd {
        println!(
            "odd certificates: {} processed ({} exact, {} approximate), tolerance sum {}",
            o.processed,
            o.exact,
            o.approx,
            bmgame_core::rational::to_string(&o.tolerance_sum)
        );
    }
    if let Some(e) = &r.eve {
        println!("eve certificates: {} processed", e.processed);
    }
    if let Some(u) = &r.universality {
        println!("universality: embedded X_k for k in {:?}", u.embedded);
    }
    if let Some(c) = &r.class {
        println!("class {}: {}/{} stages", c.class, c.inside, c.total);
    }
    if let Some(u) = &r.urysohn {
        println!(
            "katetov challenges: {} realized, coverage {}/{}{}",
            u.processed,
            u.coverage.realized,
            u.coverage.total,
            if u.coverage.capped { "+" } else { "" }
        );
    }
    if r.pass {
        println!("PASS");
        ExitCode::SUCCESS
    } else {
        println!("FAIL");
        ExitCode::from(EXIT_VERIFY_FAIL)
    }
}

fn serve(port: Option<u16>) -> ExitCode {
    let mut addr = bmgame_service::default_addr();
    if let Some(p) = port {
        addr.set_port(p);
    }
    let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
    match rt.block_on(bmgame_service::serve(addr)) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(EXIT_USAGE)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match &cli.command {
        Command::Play(a) => play(a),
        Command::Verify { path, json } => verify(path, *json),
        Command::Serve { port } => serve(*port),
    }
}
