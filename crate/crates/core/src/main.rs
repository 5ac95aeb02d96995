use std::io::Write;

use coarsekit::cli::{run, Status};

fn main() {
    let result = run(std::env::args_os());
    if result.payload.is_null() {
        // help, version and usage errors carry only text
        if result.status == Status::Pass {
            print!("{}", result.summary);
        } else {
            eprint!("{}", result.summary);
        }
    } else {
        let mut out = std::io::stdout().lock();
        if result.json {
            let _ = out.write_all(result.payload_text().as_bytes());
        } else if result.status == Status::Pass {
            let _ = writeln!(out, "{}", result.summary);
        }
        if result.status != Status::Pass {
            eprintln!("{}: {}", result.status.label(), result.summary);
        }
    }
    std::process::exit(result.exit_code());
}
