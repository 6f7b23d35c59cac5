use edgebench::trace::{PowerSample, PowerTrace};
use rand::Rng;
use rand_chacha::ChaCha8Rng;

pub struct Synthetic {
    pub trace: PowerTrace,
    pub loads: Vec<(usize, usize)>,
    pub plateaus: Vec<(usize, usize)>,
}

/// Idle / load / gap / inference cycles at 1 Hz with bounded noise.
pub fn synthesize(rng: &mut ChaCha8Rng, datasets: usize) -> Synthetic {
    let idle = rng.gen_range(1.5..3.0);
    let rise = rng.gen_range(1.5..4.0);
    let mut watts = Vec::new();
    let mut loads = Vec::new();
    let mut plateaus = Vec::new();
    let push = |watts: &mut Vec<f64>, n: usize, level: f64, rng: &mut ChaCha8Rng| {
        let start = watts.len();
        for _ in 0..n {
            watts.push(level + rng.gen_range(-0.03..0.03));
        }
        (start, watts.len())
    };
    for _ in 0..datasets {
        push(&mut watts, rng.gen_range(10..20), idle, rng);
        let load_level = idle + rise * rng.gen_range(0.25..0.4);
        loads.push(push(&mut watts, rng.gen_range(2..6), load_level, rng));
        push(&mut watts, 5, idle, rng);
        let plateau_level = idle + rise * rng.gen_range(0.9..1.1);
        plateaus.push(push(&mut watts, rng.gen_range(5..40), plateau_level, rng));
    }
    push(&mut watts, rng.gen_range(3..10), idle, rng);

    let voltage = 5.1;
    let samples = watts
        .iter()
        .enumerate()
        .map(|(i, w)| PowerSample::new(i as f64, voltage, w / voltage).unwrap())
        .collect();
    Synthetic {
        trace: PowerTrace::new(samples).unwrap(),
        loads,
        plateaus,
    }
}
