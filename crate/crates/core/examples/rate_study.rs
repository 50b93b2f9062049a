//! Convergence rate of the lead-lag iterated integral in the Hölder metric.

use roughvol::iterated::rate::{rate_study, RateConfig, RateMethod};

fn main() -> roughvol::Result<()> {
    let mut cfg = RateConfig::new(RateMethod::LeadLag, 0.3, 1, 11);
    cfg.levels = vec![4, 5, 6, 7];
    cfg.n_paths = 64;
    cfg.oracle_factor = 32;
    let st = rate_study(&cfg)?;
    println!("{:>10} {:>12} {:>12}", "mesh", "Hölder", "interval");
    for r in &st.rows {
        println!(
            "{:>10.3e} {:>12.4e} {:>12.4e}",
            r.mesh, r.mean_error, r.interval_rms
        );
    }
    println!(
        "Hölder slope {:.3}, interval slope {:.3}",
        st.fit.slope, st.interval_fit.slope
    );
    st.write_csv(std::io::stdout())?;
    Ok(())
}
