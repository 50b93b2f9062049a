//! Error of the hybrid scheme at partition points against the exact
//! Riemann–Liouville path on a finer grid.

use roughvol::iterated::rate::hybrid_pointwise_study;

fn main() -> roughvol::Result<()> {
    for hurst in [0.1, 0.3] {
        let st = hybrid_pointwise_study(hurst, &[5, 6, 7, 8], 128, 8, 5)?;
        for r in &st.rows {
            println!("H={hurst} mesh {:.3e}  sup rms {:.4e}", r.mesh, r.sup_rms);
        }
        println!(
            "H={hurst} slope {:.3} (CI {:.3}..{:.3})",
            st.fit.slope, st.fit.ci_low, st.fit.ci_high
        );
    }
    Ok(())
}
