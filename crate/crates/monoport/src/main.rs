fn main() -> std::process::ExitCode {
    monoport::cli::main()
}
