use std::io::Write;

fn main() {
    let out = seqcoin::cli::run(std::env::args_os(), &mut std::io::stdin().lock());
    // A closed pipe is not worth a panic.
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    std::process::exit(out.status);
}
