use hbvsim::cli;

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    if let Err(e) = cli::run(&args) {
        eprintln!("{e}");
        std::process::exit(e.exit_code());
    }
}
