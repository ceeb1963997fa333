fn main() -> std::process::ExitCode {
    bitpact_cli::main_entry()
}
