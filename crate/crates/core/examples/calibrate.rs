//! Fit the model to synthetic quotes produced by itself.

use roughvol::pricing::{
    calibrate_with, mc_call_prices, Bounds, CalibrationProblem, Contract, McSettings,
    OptimizerSettings, OptionQuote, PathCache, QHestonParams, PARAM_NAMES, REFERENCE_FIT,
};

fn main() -> roughvol::Result<()> {
    let truth = QHestonParams {
        hurst: 0.1,
        ..REFERENCE_FIT
    };
    let mc = McSettings::new(20, 2000, 3);
    let contracts: Vec<Contract> = [0.274, 0.548]
        .iter()
        .flat_map(|&maturity| [0.9, 1.0, 1.1].map(|strike| Contract { maturity, strike }))
        .collect();
    let quotes = mc_call_prices(&truth, &contracts, &mc, &PathCache::new())?
        .prices
        .iter()
        .map(|p| OptionQuote::new(p.maturity, p.strike, p.price))
        .collect::<roughvol::Result<Vec<_>>>()?;

    let problem = CalibrationProblem {
        quotes,
        initial: truth.with_vector(&truth.to_vector().map(|v| 1.2 * v)),
        bounds: Bounds::default(),
        mc,
        optimizer: OptimizerSettings {
            max_iters: 60,
            ..OptimizerSettings::default()
        },
    };
    let res = calibrate_with(&problem, |e| {
        if e.iteration % 10 == 0 {
            println!("iteration {:>3}  loss {:.3e}", e.iteration, e.loss);
        }
    })?;
    for ((name, fit), true_value) in PARAM_NAMES
        .iter()
        .zip(res.params.to_vector())
        .zip(truth.to_vector())
    {
        println!("{name:>6} fitted {fit:.4}  true {true_value:.4}");
    }
    println!("loss {:.3e} after {} iterations", res.loss, res.iterations);
    Ok(())
}
