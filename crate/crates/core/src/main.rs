use clap::Parser;
use lacunary::harness::{self, cli::Cli};

fn main() {
    let cli = Cli::parse();
    match harness::execute(&cli) {
        Ok(Some(report)) => print!("{report}"),
        Ok(None) => {}
        Err(e) => {
            eprintln!("error: {e}");
            std::process::exit(e.exit_code());
        }
    }
}
