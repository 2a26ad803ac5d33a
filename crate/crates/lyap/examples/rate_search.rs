//! Search every group of the strongly convex second-order system for the
//! best certifiable rate, then print the winning pair.
//!
//!     cargo run --release --example rate_search

use lyap::analyze::{analyze_groups, best_rate, RateQuery};
use lyap::catalog;
use lyap::enumerate::enumerate;
use lyap::symexpr::{GammaForm, Param};

fn main() {
    let spec = catalog::second_order_hessian();
    let groups = enumerate(&spec).unwrap().groups;
    // a = 2sqrt(mu), b = 0 is the SC-NAG flow.
    let q = RateQuery::new(GammaForm::Linear, 1.0, 4.0).param(Param::A, 2.0).param(Param::B, 0.0);
    let res = analyze_groups(&groups, &q);
    let best = best_rate(&res).expect("some group has a positive rate");
    let g = groups.iter().find(|g| g.group_id == best.group_id).unwrap();
    println!("best k = {:.6} from group {} ({} members)", best.k_max, g.group_id, g.members.len());
    println!("first member: {}", g.members[0]);
    println!("validity: {}, minors checked: {}", best.validity, best.certificate.n_minors);

    let pair = g.representative.map_entries(|e| e.substitute_gamma(&q.gamma));
    println!("\nP (basis x-x*, grad f, xdot):");
    for row in pair.p.rows() {
        println!("  [{}]", row.join(", "));
    }
    println!("Q:");
    for row in pair.q.rows() {
        println!("  [{}]", row.join(", "));
    }
    let same = res.iter().filter(|(_, r)| r.as_ref().is_ok_and(|r| (r.k_max - best.k_max).abs() < 1e-6)).count();
    println!("\n{same} groups reach the same rate");
}
