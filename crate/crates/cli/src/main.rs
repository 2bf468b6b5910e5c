use std::io::IsTerminal;

fn main() {
    let stdin = std::io::stdin();
    let interactive = stdin.is_terminal();
    let code = bats_cli::dispatch(
        std::env::args_os(),
        stdin.lock(),
        interactive,
        &mut std::io::stdout(),
        &mut std::io::stderr(),
    );
    std::process::exit(code);
}
