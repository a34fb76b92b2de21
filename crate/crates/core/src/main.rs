use clap::Parser;

fn main() {
    let args = tunnel_lab::cli::Args::parse();
    std::process::exit(tunnel_lab::cli::main_with(args));
}
