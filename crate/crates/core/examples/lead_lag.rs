//! Lead/lag interpolations, their mollified versions, and the lead-lag
//! iterated integral against its Itô limit.

use roughvol::iterated::{ito_oracle, noise_leadlag_integral};
use roughvol::leadlag::{lag_pl, lead_pl, MollifiedPath};
use roughvol::noise::{FbmSampler, Grid, NoiseMethod, NoiseSpec, RngPolicy};

fn main() -> roughvol::Result<()> {
    let grid = Grid::new(1.0, 64)?;
    let noise = FbmSampler::new(NoiseSpec::new(grid, 0.3, 1.0, NoiseMethod::ExactRl)?)
        .sample(&RngPolicy::new(3), 0);
    let w = lead_pl(&noise.w, grid)?;
    let x = lag_pl(&noise.x, grid)?;
    let xm = MollifiedPath::lag_mollify(lead_pl(&noise.x, grid)?, 2.0 * grid.dt())?;
    println!(
        "{:>8} {:>10} {:>10} {:>10}",
        "t", "W lead", "X lag", "X lag moll"
    );
    for t in [0.2, 0.21, 0.5, 0.77] {
        println!(
            "{t:>8} {:>10.5} {:>10.5} {:>10.5}",
            w.value(t),
            x.value(t),
            xm.value(t)
        );
    }

    // the lagged scheme approaches the Itô integral; RMS over a few paths
    let fine = Grid::new(1.0, 1 << 14)?;
    let sampler = FbmSampler::new(NoiseSpec::new(fine, 0.3, 1.0, NoiseMethod::ExactRl)?);
    let paths: Vec<_> = (0..32)
        .map(|p| sampler.sample(&RngPolicy::new(3), p))
        .collect();
    for f in [1024, 256, 64, 16] {
        let mut sq = 0.0;
        for noise in &paths {
            let oracle = ito_oracle(noise, 1, 0.25, 1.0)?;
            sq += (noise_leadlag_integral(&noise.subsample(f)?, 1, 0.25, 1.0)? - oracle).powi(2);
        }
        println!(
            "mesh {:.2e}: rms error {:.4}",
            fine.dt() * f as f64,
            (sq / paths.len() as f64).sqrt()
        );
    }
    Ok(())
}
