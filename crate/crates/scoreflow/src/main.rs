fn main() {
    std::process::exit(scoreflow::cli::main_with_args(std::env::args()));
}
