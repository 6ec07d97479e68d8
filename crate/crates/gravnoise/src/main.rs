fn main() {
    std::process::exit(gravnoise::cli::main());
}
