//! Bundled test networks.

use crate::case::{parse_case, CaseData};

pub const B4GIC_JSON: &str = include_str!("../fixtures/b4gic.json");
pub const EPRI21_ANALOG_JSON: &str = include_str!("../fixtures/epri21_analog.json");

/// Four-bus, two-substation network with one east-west line.
pub fn b4gic() -> CaseData {
    parse_case(B4GIC_JSON).expect("bundled b4gic fixture is valid")
}

/// Eleven-bus network laid out after the in-service part of the EPRI
/// 21-bus benchmark topology: a long east-west line 4-6, a parallel 4-5
/// corridor and a generator step-up unit 12-13 at the eastern end.
pub fn epri21_analog() -> CaseData {
    parse_case(EPRI21_ANALOG_JSON).expect("bundled epri21 analog fixture is valid")
}
