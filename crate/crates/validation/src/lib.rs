//! Holds the `acceptance` test target; run it with
//! `cargo test -p hybrid-surrogate-validation --test acceptance`.
