fn main() -> std::process::ExitCode {
    relosc::cli::main()
}
