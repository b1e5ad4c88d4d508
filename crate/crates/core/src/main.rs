fn main() {
    std::process::exit(gadcl::cli::run_command(std::env::args_os()));
}
