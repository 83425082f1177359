//! Home of the `acceptance` test target; run it with
//! `cargo test -p hyperfront-acceptance --test acceptance`.
