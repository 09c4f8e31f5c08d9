use std::panic;

fn main() {
    let code = panic::catch_unwind(|| hieralign_cli::run_from_args(std::env::args_os()))
        .unwrap_or(hieralign_cli::EXIT_INTERNAL);
    std::process::exit(code);
}
