use roughvol::iterated::rate::rms_of;
use roughvol::iterated::{
    ito_oracle, leadlag_closed_form, leadlag_same_cell, noise_leadlag_integral,
};
use roughvol::noise::{FbmSampler, Grid, JointNoise, NoiseMethod, NoiseSpec, RngPolicy};

fn sample(hurst: f64, n: usize, path: u64) -> JointNoise {
    let spec = NoiseSpec::new(Grid::new(1.0, n).unwrap(), hurst, 0.7, NoiseMethod::Hybrid).unwrap();
    FbmSampler::new(spec).sample(&RngPolicy::new(99), path)
}

// Halving the oracle mesh moves it far less than the distance between the
// oracle and the coarsest approximant in a rate study.
#[test]
fn oracle_is_stable_under_halving() {
    let (t1, t2) = (0.25, 0.75);
    let mut halving = Vec::new();
    let mut coarse = Vec::new();
    for p in 0..64 {
        let fine = sample(0.3, 1 << 12, p);
        let oracle = ito_oracle(&fine, 1, t1, t2).unwrap();
        let half = ito_oracle(&fine.subsample(2).unwrap(), 1, t1, t2).unwrap();
        let ll = noise_leadlag_integral(&fine.subsample(64).unwrap(), 1, t1, t2).unwrap();
        halving.push(half - oracle);
        coarse.push(ll - oracle);
    }
    let (h, c) = (rms_of(&halving), rms_of(&coarse));
    assert!(h < 0.5 * c, "halving rms {h:.4} vs coarse rms {c:.4}");
}

#[test]
fn closed_form_matches_piecewise_integral_on_partition_points() {
    let noise = sample(0.2, 256, 3);
    for m in 1..=3 {
        for &(j, l) in &[(0, 256), (17, 90), (128, 129), (40, 40)] {
            let closed = leadlag_closed_form(&noise, m, j, l).unwrap();
            let direct =
                noise_leadlag_integral(&noise, m, noise.grid.time(j), noise.grid.time(l)).unwrap();
            assert!(
                (closed - direct).abs() <= 1e-12 * (1.0 + direct.abs()),
                "m={m} [{j},{l}]: {closed} vs {direct}"
            );
        }
    }
}

#[test]
fn same_cell_formula_matches_piecewise_integral() {
    let noise = sample(0.1, 64, 5);
    let dt = noise.grid.dt();
    let (t1, t2) = (10.2 * dt, 10.9 * dt);
    for m in 1..=2 {
        let cell = leadlag_same_cell(&noise, m, t1, t2).unwrap();
        let direct = noise_leadlag_integral(&noise, m, t1, t2).unwrap();
        assert!((cell - direct).abs() < 1e-14, "m={m}: {cell} vs {direct}");
    }
}
