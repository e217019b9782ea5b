fn main() -> std::process::ExitCode {
    rcforecast::cli::main()
}
