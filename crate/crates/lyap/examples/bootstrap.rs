//! One bootstrap step for NAG with r > 3: certify a faster rate from a pair
//! whose Q13 cross term is handled by the already known t^-2 decay.
//!
//!     cargo run --release --example bootstrap [r]

use lyap::analyze::{bootstrap_rate_check, RateQuery};
use lyap::catalog;
use lyap::pq_core::{initial_pair, OperationId::*};
use lyap::symexpr::{GammaForm, Param};

fn main() {
    let r: f64 = std::env::args().nth(1).map_or(4.5, |s| s.parse().expect("number"));
    let pair = initial_pair(&catalog::nag()).apply_sequence(&[A1, B1, B3, B2]).unwrap();
    let q = RateQuery::new(GammaForm::Log, 1.0, 4.0).param(Param::R, r);
    match bootstrap_rate_check(&pair, 2.0, &q) {
        Ok(rep) => {
            println!("r = {r}: candidate k = {:.4}, fitted exponent {:.3} on t in [{:.0}, {:.0}]", rep.k_candidate, rep.fitted_exponent, rep.fit_window.0, rep.fit_window.1);
            println!("boundary term bounded: {}, E growth {:.4}, required {:.3}", rep.bounded_in_theory, rep.e_growth, rep.required_exponent);
            println!("{}", if rep.passed() { "pass" } else { "fail" });
        }
        Err(e) => println!("r = {r}: {e}"),
    }
}
