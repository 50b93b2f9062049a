//! Call prices under the quadratic rough Heston model, and the constant-vol
//! case against Black–Scholes.

use roughvol::pricing::{
    black_scholes_call, mc_call_prices, Contract, McSettings, PathCache, QHestonParams,
    REFERENCE_FIT,
};

fn main() -> roughvol::Result<()> {
    let mc = McSettings::new(40, 20_000, 1);
    let cache = PathCache::new();
    let contracts: Vec<Contract> = [0.9, 1.0, 1.1]
        .iter()
        .flat_map(|&strike| [0.274, 0.548].map(|maturity| Contract { maturity, strike }))
        .collect();

    let model = QHestonParams {
        hurst: 0.1,
        ..REFERENCE_FIT
    };
    let rep = mc_call_prices(&model, &contracts, &mc, &cache)?;
    for p in &rep.prices {
        println!(
            "T={} K={} C={:.5} ± {:.1e}",
            p.maturity, p.strike, p.price, p.stderr
        );
    }
    println!("max forward z {:.2}", rep.max_forward_z(mc.s0));

    // a = 0 leaves the volatility at √c
    let flat = QHestonParams {
        a: 0.0,
        c: 0.04,
        ..model
    };
    for p in &mc_call_prices(&flat, &contracts, &mc, &cache)?.prices {
        let bs = black_scholes_call(1.0, p.strike, p.grid_maturity, 0.2);
        println!(
            "T={} K={} MC {:.5} BS {:.5} z {:+.2}",
            p.maturity,
            p.strike,
            p.price,
            bs,
            (p.price - bs) / p.stderr
        );
    }
    Ok(())
}
