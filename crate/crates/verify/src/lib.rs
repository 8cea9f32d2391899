//! Holds the `acceptance` test target; run it with `cargo test -p sqg-verify --test acceptance`.
