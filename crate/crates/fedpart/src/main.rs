fn main() {
    // Die quietly on a closed pipe (e.g. `fedpart lemmas | head`) instead of
    // panicking on the first failed write.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    std::process::exit(fedpart::cli::cli_run(std::env::args()));
}
