//! Evaluate the Itô lift of one noise sample on every word of weight ≤ 1.

use roughvol::algebra::{itolift_binomial, w, LiftSample};
use roughvol::noise::{FbmSampler, Grid, NoiseMethod, NoiseSpec, RngPolicy};

fn main() -> roughvol::Result<()> {
    let hurst = 0.2;
    let spec = NoiseSpec::new(Grid::new(1.0, 4096)?, hurst, 0.5, NoiseMethod::Hybrid)?;
    let noise = FbmSampler::new(spec).sample(&RngPolicy::new(1), 0);

    let lift = LiftSample::compute(&noise, 0.25, 0.75)?;
    println!("{} words on [0.25, 0.75]", lift.entries.len());
    for (word, value) in lift.entries.iter().take(12) {
        println!("{word:>6} {value:+.6}");
    }

    // the binomial formula agrees with the generator expansion
    let direct = itolift_binomial(1, 1, &noise, 0.25, 0.75)?;
    let via_words = lift.get(&w("0a0")).unwrap_or(f64::NAN);
    println!("binomial (1,1) = {direct:+.12}, word 0a0 = {via_words:+.12}");
    Ok(())
}
