fn main() {
    std::process::exit(latentgraph::cli::run(std::env::args_os()));
}
