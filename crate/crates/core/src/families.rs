//! Built-in evolutions.

use crate::evolution::Evolution;
use crate::matrix::StochasticMatrix;

/// Every row jumps to state 0.
pub fn reset_matrix(n: usize) -> StochasticMatrix {
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        data[i * n] = 1.0;
    }
    StochasticMatrix::from_normalized(n, data)
}

/// State `i` moves to `i + 1`; the last state is absorbing.
pub fn shift_matrix(n: usize) -> StochasticMatrix {
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        data[i * n + (i + 1).min(n - 1)] = 1.0;
    }
    StochasticMatrix::from_normalized(n, data)
}

/// Convex path from [`reset_matrix`] to [`shift_matrix`].
///
/// Both endpoints are reducible but have a single aperiodic recurrent class;
/// every interior point is irreducible and aperiodic. The adiabatic time of
/// this path grows like the square of its largest mixing time over `eps`,
/// which makes it the reference case for the order of the general bound.
pub fn shift_reset_family(n: usize) -> Evolution {
    assert!(n >= 2, "the shift-reset family needs n >= 2");
    Evolution::convex(reset_matrix(n), shift_matrix(n)).expect("same dimension")
}
