use std::io::Write;
use std::process::ExitCode;
use std::thread;

/// Deeply nested formulas recurse deeply; give the worker a large stack.
const STACK_BYTES: usize = 256 << 20;

fn main() -> ExitCode {
    let args: Vec<_> = std::env::args_os().collect();
    let worker = thread::Builder::new().stack_size(STACK_BYTES).spawn(move || phfl::run(args)).expect("spawn worker thread");
    let out = match worker.join() {
        Ok(o) => o,
        Err(_) => return ExitCode::from(101),
    };
    let _ = std::io::stdout().write_all(out.stdout.as_bytes());
    let _ = std::io::stderr().write_all(out.stderr.as_bytes());
    ExitCode::from(out.code as u8)
}
