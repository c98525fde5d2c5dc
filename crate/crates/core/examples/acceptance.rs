//! Run acceptance criteria by id, e.g. `cargo run --example acceptance -- 2 6 14a`.

use moment_lab::{acceptance, PrecisionContext};

fn main() {
    let ctx = PrecisionContext::default();
    let ids: Vec<String> = std::env::args().skip(1).collect();
    for c in acceptance::CRITERIA {
        if ids.is_empty() || ids.iter().any(|i| i == c.id) {
            println!("{}", acceptance::run(c, &ctx).line());
        }
    }
}
