//! Dropping the lag makes successive refinements drift apart; with
//! γ₀ = γ₁ the factor vector fields commute and Z settles again.

use roughvol::rde::experiments::{refinement_study, ExperimentConfig};

fn main() -> roughvol::Result<()> {
    let mut base = ExperimentConfig::new(2024);
    base.eps = vec![1e-2, 1e-3, 1e-4];
    base.n_paths = 40;
    for (name, cfg) in [
        ("lagged", base.clone()),
        ("no lag", base.clone().no_lag()),
        ("no lag, γ0 = γ1", base.no_lag().equal_gammas()),
    ] {
        let st = refinement_study(&cfg)?;
        let s: Vec<f64> = st.rows.iter().filter_map(|r| r.s_gap).collect();
        let z: Vec<f64> = st.rows.iter().filter_map(|r| r.z_gap).collect();
        println!("{name:<16} S gaps {s:.4?}  Z gaps {z:.4?}");
    }
    Ok(())
}
