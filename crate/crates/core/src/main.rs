fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("debug")).init();
    std::process::exit(spectral2d::cli::run(std::env::args_os()));
}
