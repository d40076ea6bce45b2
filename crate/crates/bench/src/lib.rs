//! Fixtures shared by the criterion benchmarks in `benches/`.

use frokaweil_core::experiments::{configuration_from_seed, Configuration, DEFAULT_MARGIN};
use frokaweil_core::mattuple::random_tuple;
use frokaweil_core::{parse_poly, FreePolynomial, MatrixTuple};

/// A dense degree-4 polynomial in two letters.
pub fn quartic() -> FreePolynomial {
    parse_poly("x1*x2*x1*x2 - 2*x2*x1*x1 + (0.5+1i)*x1*x2 + x2*x2*x2 - x1 + 3", 2).expect("valid polynomial")
}

pub fn point(level: usize) -> MatrixTuple {
    random_tuple(level, 2, 0.9, level as u64).expect("valid tuple")
}

pub fn configuration(level: usize) -> Configuration {
    configuration_from_seed(level as u64 + 40, level, DEFAULT_MARGIN).expect("valid configuration")
}
