//! Wong–Zakai solutions of the test system converge as ε shrinks, and the
//! price approaches the exponential martingale of the solved factor.

use roughvol::rde::experiments::{refinement_study, solve_levels, ExperimentConfig};
use roughvol::rde::DriftTerms;

fn main() -> roughvol::Result<()> {
    let mut cfg = ExperimentConfig::new(2024);
    cfg.eps = vec![1e-2, 1e-3];
    cfg.n_paths = 40;

    for lv in solve_levels(&cfg, DriftTerms::FULL, 0)? {
        println!(
            "eps {:e}: S_1 = {:.5}, S^exp_1 = {:.5}, Z_1 = {:.5}",
            lv.eps,
            lv.solution.s_terminal(),
            lv.s_exp.last().unwrap(),
            lv.solution.v_terminal(0)
        );
    }
    let st = refinement_study(&cfg)?;
    st.write_csv(std::io::stdout())?;
    Ok(())
}
