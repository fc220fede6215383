//! Prints a numeric fingerprint of the sampled pipeline. Run it with
//! and without the `parallel` feature (or different thread counts) and
//! diff the output: it must be byte-identical.
//!
//! ```sh
//! cargo run --example determinism > par.txt
//! cargo run --example determinism --no-default-features > seq.txt
//! diff par.txt seq.txt
//! ```

use fringe::circuit::{Interferometer, NoiseConfig, Probe};
use fringe::experiment::{self, noise_study, NoiseStudyConfig};
use fringe::fisher;
use fringe::fock::Response;

fn main() {
    let dev = Interferometer::four_mode();
    let probe = Probe::Pair {
        inputs: [0, 1],
        overlap: 1.0,
    };
    let resp = Response::new(&dev, probe, NoiseConfig::default());
    let phases = experiment::lookup("s1").unwrap().phases;
    let rule = experiment::rule_for(probe);
    let model = |t: &[f64]| resp.probs(&phases, t);
    let f = fisher::fim_sampled(&model, &[0.0; 3], &rule, 100_000, 1, 0);
    for j in 0..3 {
        for k in 0..3 {
            println!("fim[{j}][{k}] = {:.17e}", f[(j, k)]);
        }
    }

    let study = noise_study(&NoiseStudyConfig::default(), 1).expect("study");
    println!("theta_cost = {:.17e}", study.theta_cost);
    for row in &study.rows {
        println!(
            "drift {:.2}: height {:.17e} offset {:.17e} null {:.17e} var {:.17e}",
            row.drift, row.peak_height, row.offset_median, row.null_loss, row.var_loss
        );
    }
}
