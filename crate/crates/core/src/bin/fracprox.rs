fn main() {
    env_logger::init();
    std::process::exit(fracprox::cli::run(std::env::args_os()));
}
