//! Wind scenarios: estimate a covariance from a synthetic hourly history,
//! then sample truncated Gaussian scenarios around the forecast.

use cvar_opf::io;
use cvar_opf::scenario::{estimate_covariance, sample_for_case, WindHistory};
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn main() -> cvar_opf::Result<()> {
    let case = io::ieee30();
    let farms: Vec<usize> = case.wind_farms.iter().map(|w| w.bus).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let records = DMatrix::from_fn(500, farms.len(), |_, k| {
        (case.wind_farms[k].forecast + rng.random_range(-3.0..3.0)).max(0.0)
    });
    let cov = estimate_covariance(&WindHistory::new(records, farms)?, &case)?;
    let set = sample_for_case(&case, &cov, 1000, 42)?;
    println!("{} scenarios over {} buses", set.n_scenarios(), set.n_buses());
    let mean = set.mean();
    for &i in &case.wind_indices() {
        let col = set.samples.column(i);
        println!(
            "bus {:>2}: forecast {:6.2}  mean {:6.2}  min {:6.2}  max {:6.2}",
            case.buses[i].id,
            set.forecast[i],
            mean[i],
            col.min(),
            col.max()
        );
    }
    Ok(())
}
