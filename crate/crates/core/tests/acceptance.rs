//! Acceptance suite: one line per criterion, non-zero exit if any fails.
//!
//! Criteria 1 to 11 run at full size under a fixed seed. Criterion 12 reruns
//! the whole suite on one thread and on four and requires byte-identical
//! JSON from all three runs.

use std::process::ExitCode;
use std::time::Instant;

use kingman_records::verify::{criteria, SuiteConfig};

const SEED: u64 = 42;

fn report_json(config: &SuiteConfig, threads: usize) -> Vec<String> {
    let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().expect("thread pool");
    pool.install(|| {
        criteria()
            .iter()
            .map(|c| (c.run)(config).and_then(|r| r.to_json_compact()).unwrap_or_else(|e| format!("error: {e}")))
            .collect()
    })
}

fn main() -> ExitCode {
    let config = SuiteConfig::new(SEED);
    let mut all_pass = true;
    let mut first = Vec::new();
    for c in criteria() {
        let start = Instant::now();
        let outcome = (c.run)(&config);
        let elapsed = start.elapsed();
        first.push(match &outcome {
            Ok(r) => r.to_json_compact().unwrap_or_default(),
            Err(e) => format!("error: {e}"),
        });
        let (pass, detail) = match &outcome {
            Ok(report) => {
                let failed: Vec<&str> = report.checks.iter().filter(|k| !k.pass).map(|k| k.test.as_str()).collect();
                (report.pass, if failed.is_empty() { String::new() } else { format!("; failed: {}", failed.join(" | ")) })
            }
            Err(e) => (false, format!("; error: {e}")),
        };
        let in_time = elapsed <= c.budget;
        let ok = pass && in_time;
        all_pass &= ok;
        println!(
            "criterion {:>2} {}: {} ({:.1}s of {}s budget{}){}",
            c.id,
            c.name,
            if ok { "PASS" } else { "FAIL" },
            elapsed.as_secs_f64(),
            c.budget.as_secs(),
            if in_time { "" } else { ", over budget" },
            detail
        );
        if !pass {
            if let Ok(report) = outcome {
                for k in report.checks.iter().filter(|k| !k.pass) {
                    println!("    {}", k.to_json().unwrap_or_default());
                }
            }
        }
    }

    let start = Instant::now();
    let single = report_json(&config, 1);
    let threaded = report_json(&config, 4);
    let deterministic = first == single && first == threaded;
    all_pass &= deterministic;
    println!(
        "criterion 12 determinism across runs and thread counts: {} ({:.1}s)",
        if deterministic { "PASS" } else { "FAIL" },
        start.elapsed().as_secs_f64()
    );

    if all_pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
