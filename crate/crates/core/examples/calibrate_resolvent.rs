//! Prints the finite-difference allowance recorded for the resolvent triangle.

use std::path::Path;

use stablesde::drift::Drift;
use stablesde::experiments::{calibrate_fd, resolvent_triangle};

fn main() {
    let p = resolvent_triangle(None);
    let measure = p.measure.build(Path::new(".")).unwrap();
    let c = calibrate_fd(&p, &measure, &Drift::zero(1)).unwrap();
    println!("{}", serde_json::to_string_pretty(&c).unwrap());
}
