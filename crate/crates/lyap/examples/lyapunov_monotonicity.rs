//! Evaluate the closed-form Lyapunov functions along simulated trajectories
//! and report the largest relative rise. A rate above the certified one is
//! included for contrast.
//!
//!     cargo run --release --example lyapunov_monotonicity

use lyap::simulate::{monotonicity_check, LyapunovCase, LyapunovId};

fn main() {
    for id in LyapunovId::ALL {
        let case = LyapunovCase::standard(id, 1.0, 4.0);
        let r = monotonicity_check(&case).unwrap();
        println!("{:<22} k = {:<8.4} max rise {:.2e} over {} samples", id.name(), r.k, r.max_rise, r.samples);
    }
    for k in [1.2, 1.5, 2.0] {
        let r = monotonicity_check(&LyapunovCase::standard(LyapunovId::ScNag, 1.0, 4.0).with_k(k)).unwrap();
        println!("sc-nag beyond its rate  k = {k:<8.4} max rise {:.2e}", r.max_rise);
    }
}
