//! Sample correlated (W, X) pairs with both fBm methods and write them as CSV.

use std::fs::File;

use roughvol::noise::{
    write_paths_csv, FbmSampler, Grid, NoiseMethod, NoiseSpec, PathColumns, RngPolicy,
};

fn main() -> roughvol::Result<()> {
    let grid = Grid::new(1.0, 1000)?;
    let rng = RngPolicy::new(7);
    let dir = std::env::temp_dir().join("roughvol-noise");
    std::fs::create_dir_all(&dir)?;
    for method in [NoiseMethod::Hybrid, NoiseMethod::ExactRl] {
        let noise = FbmSampler::new(NoiseSpec::new(grid, 0.1, 0.8, method)?).sample(&rng, 0);
        let path = dir.join(format!("{method:?}.csv").to_lowercase());
        write_paths_csv(File::create(&path)?, &PathColumns::from_noise(&noise))?;
        println!(
            "{method:?}: X_1 = {:+.4}, W_1 = {:+.4} -> {}",
            noise.x[grid.n],
            noise.w[grid.n],
            path.display()
        );
    }
    Ok(())
}
