fn main() {
    std::process::exit(draco_sim::cli::main());
}
