//! Load a user-defined flow from TOML and search it. The system here is a
//! heavy-ball flow with constant friction 3, xddot + 3 xdot + grad f = 0.
//!
//!     cargo run --release --example custom_system

use lyap::analyze::{analyze_groups, best_rate, RateQuery};
use lyap::enumerate::enumerate;
use lyap::pq_core::OdeSystemSpec;
use lyap::symexpr::GammaForm;

const SPEC: &str = r#"
name = "heavy-ball"
coeff_v1 = "0"
coeff_v2 = "1"
coeff_v3 = "3"
coeff_v4 = "0"
coeff_v5 = "1"
"#;

fn main() {
    let spec = OdeSystemSpec::from_toml(SPEC).unwrap();
    let e = enumerate(&spec).unwrap();
    println!("{}: {} groups", spec.name, e.groups.len());
    for (mu, l) in [(1.0, 2.0), (1.0, 4.0), (1.0, 16.0)] {
        let res = analyze_groups(&e.groups, &RateQuery::new(GammaForm::Linear, mu, l));
        match best_rate(&res) {
            Some(b) => println!("mu = {mu}, L = {l}: k = {:.6} (group {})", b.k_max, b.group_id),
            None => println!("mu = {mu}, L = {l}: no certificate"),
        }
    }
}
