//! Enumerate the 23660 operation sequences for every catalog system and
//! show how they collapse into distinct (P, Q) groups.
//!
//!     cargo run --release --example enumerate_groups [system]

use lyap::catalog;
use lyap::enumerate::{enumerate, write_groups_csv};

fn main() {
    let only = std::env::args().nth(1);
    for spec in catalog::all() {
        if only.as_deref().is_some_and(|o| o != spec.name) {
            continue;
        }
        let e = enumerate(&spec).expect("catalog systems enumerate");
        let biggest = e.groups.iter().map(|g| g.members.len()).max().unwrap_or(0);
        println!(
            "{:<22} {} sequences -> {:>3} groups (largest {biggest}, gamma order <= {})",
            spec.name,
            e.raw_count,
            e.groups.len(),
            e.max_gamma_order
        );
        if only.is_some() {
            write_groups_csv(std::io::stdout().lock(), &e).unwrap();
        }
    }
}
