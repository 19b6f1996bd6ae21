//! Test endpoint speaking the external-model wire protocol on its
//! standard streams. By default it echoes each signal back as its logits;
//! with `--fixed v1,v2,...` it answers every signal with that row.

use freqrise_core::{serve_echo, EchoMode};

fn main() {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let mode = match args.as_slice() {
        [] => EchoMode::Echo,
        [flag, values] if flag == "--fixed" => {
            let row: Result<Vec<f64>, _> = values.split(',').map(str::parse).collect();
            match row {
                Ok(row) if !row.is_empty() => EchoMode::Fixed(row),
                _ => {
                    eprintln!("freqrise-echo: --fixed expects a comma-separated list of numbers");
                    std::process::exit(2);
                }
            }
        }
        _ => {
            eprintln!("usage: freqrise-echo [--fixed v1,v2,...]");
            std::process::exit(2);
        }
    };
    if let Err(e) = serve_echo(mode) {
        eprintln!("freqrise-echo: {e}");
        std::process::exit(1);
    }
}
