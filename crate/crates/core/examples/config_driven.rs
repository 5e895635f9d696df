//! Drives the batch commands from the JSON configs in `examples/configs`,
//! writing reports to a temporary directory (or `$BSVIE_OUT_DIR`).

use std::path::PathBuf;

use bsvie::app::{run, Command, RunOptions};

fn main() {
    let configs = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("examples/configs");
    let out = std::env::temp_dir().join("bsvie-config-driven");
    let jobs = [
        (Command::Solve, "solve_constant.json"),
        (Command::Solve, "solve_linear.json"),
        (Command::Bvie, "bvie_unit.json"),
        (Command::Convergence, "convergence_linear.json"),
        (Command::Axioms, "axioms_quadratic.json"),
    ];
    for (command, file) in jobs {
        let options = RunOptions {
            config: configs.join(file),
            out_dir: std::env::var_os("BSVIE_OUT_DIR").map(PathBuf::from).or(Some(out.clone())),
            seed: None,
            strict: false,
        };
        println!("== {} {file}", command.name());
        match run(command, &options) {
            Ok(o) => println!("{}\n-> {}\n", o.summary.trim_end(), o.csv_path.display()),
            Err(e) => println!("failed with exit code {}: {e}\n", e.exit_code()),
        }
    }
}
