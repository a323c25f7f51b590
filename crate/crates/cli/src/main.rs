fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let stdout = std::io::stdout();
    let mut out = std::io::BufWriter::new(stdout.lock());
    let code = interarea_cli::app::run(std::env::args_os(), &mut out, &mut std::io::stderr());
    drop(out);
    std::process::exit(code);
}
