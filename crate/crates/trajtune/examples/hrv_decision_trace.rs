//! The heart-rate pacing rule, window by window: how mean RR movements map
//! to ladder steps, including quantization, hysteresis, the panic floor and
//! data gaps.
//!
//! ```bash
//! cargo run --example hrv_decision_trace
//! ```

use trajtune::adaptation::{advance, DecisionState, HrvParams};

fn main() -> trajtune::Result<()> {
    // Subject baselines: resting mean RR 0.80 s, stressed 0.70 s. A drop of
    // 0.02 s costs one slow-down step, a rise of 0.01 s earns one speed-up.
    let params = HrvParams {
        window_seconds: 30.0,
        rest_mean_rr: 0.80,
        stress_mean_rr: 0.70,
        rest_spread: 0.14,
        stress_spread: 0.06,
        rest_to_stress_threshold: 0.02,
        stress_to_rest_threshold: 0.01,
    };
    let rungs = 15;
    let mut state = DecisionState::single(&params, rungs)?;
    println!(
        "ladder of {rungs} rungs, initial index {} (biased fast: slowing down \
         is cheap, overstraining is not)",
        state.index(0)
    );
    println!("panic floor: mean RR below {:.2} s forces a slow-down\n", state.stress_floor());

    // One windowed mean per 30 s; None is a sensor dropout.
    let observed: [(Option<f64>, &str); 9] = [
        (Some(0.80), "first window only sets the reference"),
        (Some(0.79), "small drop, below one full step: hold"),
        (Some(0.74), "drop of 0.05 s: floor((-0.05+0.02)/0.02) = -2"),
        (None, "sensor dropout: hold and keep the old reference"),
        (Some(0.76), "rise of 0.02 s while above the stress baseline: +2"),
        (Some(0.64), "deep drop of 0.12 s: five slow-down steps"),
        (Some(0.63), "shallow drift, but under the panic floor: forced -1"),
        (Some(0.80), "strong recovery: ceil((0.80-0.70)/0.01) = +10"),
        (Some(0.80), "no movement: hold"),
    ];

    println!("{:>6}  {:>8}  {:>5}  {:>5}  note", "window", "mean RR", "step", "index");
    for (k, (mean, note)) in observed.iter().enumerate() {
        let record = advance(&mut state, *mean, &params);
        let shown = record
            .mean_rr
            .map_or_else(|| "--".to_string(), |m| format!("{m:.3}"));
        let gap = if record.gap { " (gap)" } else { "" };
        println!(
            "{:>6}  {:>8}  {:>+5}  {:>5}  {note}{gap}",
            (k + 1) as f64 * params.window_seconds,
            shown,
            record.delta,
            record.indices[0],
        );
    }
    Ok(())
}
