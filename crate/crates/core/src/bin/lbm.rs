fn main() -> std::process::ExitCode {
    lbm::cli::main()
}
