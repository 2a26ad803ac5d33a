//! Reproduce the known rate of each catalog system and print a markdown
//! table.
//!
//!     cargo run --release --example verify_catalog

use lyap::analyze::verify_catalog;

fn main() {
    let rep = verify_catalog(1.0, 4.0);
    print!("{}", rep.to_markdown());
    if !rep.all_pass() {
        std::process::exit(2);
    }
}
