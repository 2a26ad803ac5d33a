//! Restarted NAG-type flow: per-round contraction against the predicted
//! constants.
//!
//!     cargo run --release --example restart [l] [c]

use lyap::simulate::{run_restart, RestartSpec};

fn main() {
    let mut a = std::env::args().skip(1).map(|s| s.parse::<f64>().expect("number"));
    let l = a.next().unwrap_or(std::f64::consts::FRAC_1_SQRT_2);
    let c = a.next().unwrap_or(2.0);
    let rep = run_restart(&RestartSpec::standard(l, c, 1.0, 4.0, 10)).unwrap();
    let k = rep.constants;
    println!("l = {l}, c = {c}: rho = {:.6}, h = {:.6}, C = {:.6}, window [{:.4}, {:.4}]", k.rho, k.h, k.c_const, k.t_start, k.t_end);
    for (i, f) in rep.factors.iter().enumerate() {
        println!("round {:>2}: g = {:.3e}, factor {f:.3e}", i + 1, rep.g[i + 1]);
    }
    println!("chained bound g_i <= rho^i g_0: {}", rep.chained_bound_holds(1e-9));
}
