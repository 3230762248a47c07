//! Final acceptance check: the binary's output is a pure function of its
//! flags. Checks 1 through 8 live in the core crate's acceptance target.

use std::process::Command;
use std::time::Instant;

fn run(args: &[&str]) -> Vec<u8> {
    let out = Command::new(env!("CARGO_BIN_EXE_aplab"))
        .args(args)
        .env_remove("APLAB_CACHE")
        .output()
        .expect("binary should run");
    assert!(
        out.status.success(),
        "args {args:?} stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out.stdout
}

#[test]
fn check_9_cli_determinism() {
    let start = Instant::now();

    let repeated = [
        vec!["rk", "--k", "3", "--n", "14", "--canonical"],
        vec!["count", "--set", "1,2,3,4,5", "--s", "3"],
        vec![
            "construct", "block", "--seed-set", "1,2,4", "--window", "9", "--s", "3",
            "--k", "4", "--seed", "5",
        ],
        vec![
            "bsg", "--set",
            "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16,17,18,19,20,21,22,23,24,25,26,27,28,29,30,31,32",
            "--seed", "3",
        ],
    ];
    for args in &repeated {
        let first = run(args);
        let second = run(args);
        assert_eq!(first, second, "reruns of {args:?} must agree byte for byte");
        assert!(!first.is_empty());
    }

    // Monte Carlo sampling partitions trials by index, so the worker count
    // must be invisible in the emitted bytes.
    let sampled = |threads: &str| {
        run(&[
            "montecarlo", "--seed-set", "1,2", "--window", "4", "--s", "3", "--k", "4",
            "--trials", "2000", "--seed", "9", "--threads", threads,
        ])
    };
    let single = sampled("1");
    let quad = sampled("4");
    assert_eq!(single, quad, "worker count changed the output");

    let elapsed = start.elapsed();
    println!(
        "[PASS] check 9: byte-identical records across reruns and thread counts ({} ms)",
        elapsed.as_millis()
    );
}
