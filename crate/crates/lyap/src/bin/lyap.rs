fn main() -> std::process::ExitCode {
    lyap::cli::main()
}
