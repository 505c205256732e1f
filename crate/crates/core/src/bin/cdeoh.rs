fn main() -> std::process::ExitCode {
    cdeoh::cli::main()
}
