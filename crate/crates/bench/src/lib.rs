//! Shared fixtures for the criterion benches.

use sklyanin_core::{make_field_of_size, FieldContext, FieldElement};

/// `GF(q)` with `c` reduced into it.
pub fn field_with_c(q: u64, c: i64) -> (FieldContext, FieldElement) {
    let f = make_field_of_size(q).expect("prime power");
    let c = f.from_int(c);
    (f, c)
}
