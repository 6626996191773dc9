use clap::Parser;
use gknn_cli::commands::{run, Cli};

fn main() {
    // Usage errors exit 1; code 2 is reserved for verification failures.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    if let Err(e) = run(cli) {
        eprintln!("gknn: {e}");
        std::process::exit(e.exit_code());
    }
}
