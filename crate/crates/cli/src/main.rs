use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use wavefront_cli::{run, summary, Command, RunConfig, EXIT_CONFIG};

#[derive(Parser)]
#[command(name = "wave", version, about = "Traveling-wave speeds of gradient reaction-diffusion systems")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Worker threads for parallel evaluations (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    /// Output directory, overriding `output.directory`.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Cmd {
    /// Potential constants, energy bounds and the bracket on c*.
    Bounds(Common),
    /// Minimum energy gamma(c) at `mode.c` or along `mode.c_list`.
    Gamma(Common),
    /// Wave speed c* and the verified wave.
    Speed(Common),
    /// Verify a profile CSV at speed `mode.c`.
    Verify {
        #[command(flatten)]
        common: Common,
        /// Profile CSV, overriding `mode.profile`.
        #[arg(long)]
        profile: Option<PathBuf>,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG as u8) } else { ExitCode::SUCCESS };
        }
    };
    let (command, common, profile) = match cli.command {
        Cmd::Bounds(c) => (Command::Bounds, c, None),
        Cmd::Gamma(c) => (Command::Gamma, c, None),
        Cmd::Speed(c) => (Command::Speed, c, None),
        Cmd::Verify { common, profile } => (Command::Verify, common, profile),
    };
    if let Some(n) = common.jobs {
        if n == 0 {
            eprintln!("error: --jobs must be at least 1");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_CONFIG as u8);
        }
    }
    let outcome = RunConfig::load(&common.config)
        .and_then(|cfg| run(command, &cfg, common.out.as_deref(), profile.as_deref()));
    match outcome {
        Ok(o) => {
            print!("{}", summary(&o.report));
            for f in &o.files {
                println!("wrote {}", f.display());
            }
            ExitCode::from(o.exit_code as u8)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
