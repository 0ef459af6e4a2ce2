use std::io::{stderr, stdout};

fn main() {
    let argv: Vec<String> = std::env::args().collect();
    let code = defectcalc_cli::dispatch(&argv, &mut stdout().lock(), &mut stderr().lock());
    std::process::exit(code);
}
