use clap::Parser;
use lcs2d_cli::{run, Cli};

fn main() {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            if let Some(note) = outcome.note {
                eprintln!("{note}");
            }
        }
        Err(e) => {
            eprintln!("lcs2d: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
