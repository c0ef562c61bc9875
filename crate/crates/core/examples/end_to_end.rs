//! The whole pipeline through the command-line entry point, in a temporary run directory.

use scope3::cli::main_with_args;

fn main() {
    let out = std::env::temp_dir().join("scope3-end-to-end");
    let ledger = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/fixtures/ledger.csv");
    let out_s = out.to_str().unwrap();
    let steps: [&[&str]; 6] = [
        &["prepare", "--synth-per-class", "20"],
        &["train", "--family", "classical", "--trees", "30"],
        &["train", "--family", "zeroshot"],
        &["evaluate", "--model", &format!("{out_s}/models/classical"), "--model", &format!("{out_s}/models/zeroshot")],
        &["estimate", "--model", &format!("{out_s}/models/classical"), "--ledger", ledger],
        &["report"],
    ];
    for step in steps {
        let args = std::iter::once("scope3").chain(step.iter().copied()).chain(["--seed", "42", "--out", out_s]);
        let code = main_with_args(args.map(std::ffi::OsString::from));
        if code != 0 {
            eprintln!("{step:?} exited with {code}");
            std::process::exit(code);
        }
    }
    print!("{}", std::fs::read_to_string(out.join("report/summary.txt")).unwrap());
}
