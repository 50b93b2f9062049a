//! The built martingale drift against its ablations, and E[S_T] = S₀.

use roughvol::rde::experiments::{drift_discrimination, martingale_check, ExperimentConfig};
use roughvol::rde::{printed_test_drift, qheston_test_system, RdeSystem, TestSystemParams};

fn main() -> roughvol::Result<()> {
    let p = TestSystemParams::default();
    let sys = qheston_test_system(p)?;
    for (s, z) in [(1.0, 1.0), (0.8, 1.3), (1.2, 0.4)] {
        println!(
            "S={s} Z={z}: built drift {:+.10}, closed form {:+.10}",
            sys.drift_s(s, &[z], 0.0),
            printed_test_drift(&p, s, z)
        );
    }

    let mut cfg = ExperimentConfig::new(2024);
    cfg.eps = vec![1e-3];
    cfg.n_paths = 50;
    for r in drift_discrimination(&cfg)? {
        println!("{:<15} mean |S - S^exp| = {:.4e}", r.label(), r.gap.mean);
    }
    cfg.n_paths = 1000;
    let m = martingale_check(&cfg)?;
    println!(
        "E[S_T] = {:.4} ± {:.4} (z = {:.2})",
        m.s_terminal.mean, m.s_terminal.stderr, m.z_score
    );
    Ok(())
}
