//! Fine-step reference run for the bifurcation floor.
//!
//! Prints the gap table as JSON. Usage: `bifurcation_oracle [N]`.

use stablesde::levy_measure::SpectralMeasure;
use stablesde::sde::{bifurcation_gap, BifurcationSpec};

fn main() {
    let n_paths = std::env::args().nth(1).map_or(20_000, |a| a.parse().expect("path count"));
    let spec = BifurcationSpec {
        beta: 0.25,
        measure: SpectralMeasure::symmetric_1d_with_scale(0.5, 0.3).expect("measure"),
        epsilons: vec![1e-1, 1e-2, 1e-3, 1e-4],
        horizon: 1.0,
        h: 1e-5,
        n_paths,
        threshold: 0.5,
        seed: 20_240_531,
    };
    let rows = bifurcation_gap(&spec).expect("oracle run");
    let out = serde_json::json!({ "spec": spec, "rows": rows });
    println!("{}", serde_json::to_string_pretty(&out).expect("json"));
}
