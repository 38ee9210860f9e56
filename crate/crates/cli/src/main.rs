fn main() {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("V2M_LOG", "warn")).init();
    std::process::exit(phonation_cli::run(std::env::args_os()));
}
