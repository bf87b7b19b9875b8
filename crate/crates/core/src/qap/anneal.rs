use rand::Rng;

use super::{random_layout, AnnealingSchedule, Layout, QapInstance};
use crate::pipeline::BovwHistogram;
use crate::rng;
use crate::Result;

/// Simulated annealing over random swaps with Metropolis acceptance and a
/// geometric temperature schedule. Starts from `random_layout(hist, seed)`
/// and returns the best layout visited.
pub fn simulated_annealing(
    inst: &QapInstance<'_>,
    hist: &BovwHistogram,
    schedule: &AnnealingSchedule,
    seed: u64,
) -> Result<Layout> {
    let mut layout = random_layout(hist, *inst.sampling(), seed)?;
    inst.check_layout(&layout)?;
    let n = layout.len();
    if n < 2 || schedule.iterations == 0 {
        return Ok(layout);
    }

    let mut rng = rng::stream(seed, rng::ANNEALING_STREAM);
    let mut labels = layout.labels().to_vec();
    let mut current = inst.objective_of(&labels);
    let mut best = labels.clone();
    let mut best_value = current;
    let mut temperature = schedule.initial_temperature;

    for _ in 0..schedule.iterations {
        let a = rng.gen_range(0..n);
        let mut b = rng.gen_range(0..n - 1);
        if b >= a {
            b += 1;
        }
        let delta = inst.swap_delta(&labels, a, b);
        let accept =
            delta <= 0.0 || (temperature > 0.0 && rng.gen::<f64>() < (-delta / temperature).exp());
        if accept {
            labels.swap(a, b);
            current += delta;
            if current < best_value {
                best_value = current;
                best.copy_from_slice(&labels);
            }
        }
        temperature *= schedule.decay;
    }

    layout = Layout::new(*layout.sampling(), best)?;
    Ok(layout)
}
