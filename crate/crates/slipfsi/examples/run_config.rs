//! Parse a run configuration, print its normalized form, and run the
//! verification suite for the flow map.

use slipfsi::config::RunConfig;
use slipfsi::verify::{run_suites, Suite};

fn main() -> slipfsi::Result<()> {
    let cfg = RunConfig::from_json(r#"{"viscosity": {"kind": "carreau", "mu0": 0.5, "d": 1.5}, "time": {"horizon": 0.1, "dt": 0.01}}"#)?;
    println!("{}", cfg.normalized());
    if let Err(e) = RunConfig::from_json(r#"{"slip": {"law": "linear", "alpah": 1}}"#) {
        println!("rejected: {e}");
    }
    for check in run_suites(&[Suite::Transform])?.checks {
        println!("{check}");
    }
    Ok(())
}
