use clap::Parser;
use lfi::cli::app::{exit_code, run, Cli, EXIT_CONFIG};

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { 0 };
            let _ = e.print();
            std::process::exit(code);
        }
    };
    let result = run(&cli, argv);
    match &result {
        Ok(o) => o.lines.iter().for_each(|l| println!("{l}")),
        Err(e) => eprintln!("error: {e}"),
    }
    std::process::exit(exit_code(&result));
}
