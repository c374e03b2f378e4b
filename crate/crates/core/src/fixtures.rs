//! Explicit matrices and vector families used by the reproduction report
//! and the tests. Surds are evaluated from their exact expressions.

use crate::matcore::{c, CMatrix, ToleranceConfig, C64};
use crate::observable::RankOneForm;

fn s(x: f64) -> f64 {
    x.sqrt()
}

fn real(rows: usize, cols: usize, data: &[f64]) -> CMatrix {
    CMatrix::from_row_slice(rows, cols, &data.iter().map(|&x| c(x, 0.0)).collect::<Vec<_>>())
}

fn columns(vectors: &[[C64; 2]]) -> CMatrix {
    CMatrix::from_fn(2, vectors.len(), |i, j| vectors[j][i])
}

/// The four vectors e_1..e_4 of the qubit counter-example (as columns).
pub fn counterexample_e_vectors() -> CMatrix {
    let (s2, s3, s6) = (s(2.0), s(3.0), s(6.0));
    columns(&[
        [c(0.5, 0.0), c(0.0, -s3 / 4.0)],
        [c(0.5, 0.0), c((3.0 + s6) / 12.0, (3.0 * s2 + 2.0 * s3) / 12.0)],
        [c(0.5, 0.0), c(-2.0 * s2 / (4.0 * s3), -1.0 / (4.0 * s3))],
        [c(0.5, 0.0), c((-3.0 + s6) / 12.0, (-3.0 * s2 + 2.0 * s3) / 12.0)],
    ])
}

/// The four vectors f_1..f_4 (a regular tetrahedron POVM).
pub fn tetrahedron_vectors() -> CMatrix {
    let (s2, s3, s6) = (s(2.0), s(3.0), s(6.0));
    columns(&[
        [c(1.0 / s2, 0.0), c(0.0, 0.0)],
        [c(1.0 / s6, 0.0), c(1.0 / s3, 0.0)],
        [c(-s3 / (6.0 * s2), -3.0 / (6.0 * s2)), c(1.0 / s3, 0.0)],
        [c(-s3 / (6.0 * s2), 3.0 / (6.0 * s2)), c(1.0 / s3, 0.0)],
    ])
}

pub fn counterexample_e() -> RankOneForm {
    RankOneForm::new(counterexample_e_vectors(), &ToleranceConfig::default()).expect("fixture e is a rank-one observable")
}

pub fn tetrahedron() -> RankOneForm {
    RankOneForm::new(tetrahedron_vectors(), &ToleranceConfig::default()).expect("fixture f is a rank-one observable")
}

/// Characteristic polynomial of the cross block R for the (e, f) pair, times 256,
/// lowest degree first: x(-8 + 81x - 256x^2 + 256x^3).
pub const R_BLOCK_CHAR_POLY_X256: [f64; 5] = [0.0, -8.0, 81.0, -256.0, 256.0];

/// Rows of the 11 x 5 certificate matrix, entries as (re, im) integers.
pub const R2_ROWS: [[(i64, i64); 5]; 11] = {
    const O: (i64, i64) = (0, 0);
    const L: (i64, i64) = (1, 0);
    const J: (i64, i64) = (0, 1);
    [
        [L, O, O, O, O],
        [O, L, O, O, O],
        [O, O, L, O, O],
        [O, O, O, L, O],
        [O, O, O, O, L],
        [L, L, L, O, J],
        [O, J, O, J, O],
        [O, L, O, O, L],
        [J, L, L, J, L],
        [O, J, L, L, J],
        [J, J, O, J, L],
    ]
};

/// Row groups spanning V_1 (3-dim) and V_2..V_5 (2-dim).
pub const R2_GROUPS: [&[usize]; 5] = [&[0, 1, 2], &[3, 4], &[5, 6], &[7, 8], &[9, 10]];

pub const R2_DET: i64 = 1024;

/// The 11 x 5 matrix whose rows are the certificate vectors.
pub fn eleven_vector_matrix() -> CMatrix {
    CMatrix::from_fn(11, 5, |i, j| {
        let (re, im) = R2_ROWS[i][j];
        c(re as f64, im as f64)
    })
}

/// Non-orthonormal bases (vectors as columns) of V_1..V_5.
pub fn eleven_vector_bases() -> Vec<CMatrix> {
    let m = eleven_vector_matrix();
    R2_GROUPS
        .iter()
        .map(|rows| CMatrix::from_fn(5, rows.len(), |i, j| m[(rows[j], i)]))
        .collect()
}

/// The projectors as stated for the h = 3 worked example (the first is not idempotent).
pub fn stated_worked_projectors() -> [CMatrix; 3] {
    [
        real(3, 3, &[1.0, 1.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0]),
        real(3, 3, &[1.0; 9]) * c(1.0 / 3.0, 0.0),
        real(3, 3, &[1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0, -1.0, 1.0]) * c(1.0 / 3.0, 0.0),
    ]
}

/// Basis vectors (columns) of the three subspaces of the corrected h = 3 example:
/// span{e_1, e_2}, span{(1,1,1)}, span{(1,-1,1)}.
pub fn worked_example_bases() -> Vec<CMatrix> {
    let r3 = 1.0 / s(3.0);
    vec![
        real(3, 2, &[1.0, 0.0, 0.0, 1.0, 0.0, 0.0]),
        real(3, 1, &[r3, r3, r3]),
        real(3, 1, &[r3, -r3, r3]),
    ]
}

/// The three effects as stated for the h = 3 worked example.
pub fn stated_worked_effects() -> [CMatrix; 3] {
    let (s5, s6, s30) = (s(5.0), s(6.0), s(30.0));
    let a1 = real(
        3,
        3,
        &[
            (11.0 + 4.0 * s6) / 25.0, 0.0, (-2.0 - 3.0 * s6) / 25.0,
            0.0, 15.0 / 25.0, 0.0,
            (-2.0 - 3.0 * s6) / 25.0, 0.0, (7.0 + 2.0 * s6) / 25.0,
        ],
    );
    let off = (-1.0 + s6) / (5.0 * s5);
    let a2 = real(
        3,
        3,
        &[
            (7.0 - 2.0 * s6) / 25.0, off, (2.0 + 3.0 * s6) / 50.0,
            off, 0.2, (4.0 + s6) / (10.0 * s5),
            (2.0 + 3.0 * s6) / 50.0, (4.0 + s6) / (10.0 * s5), (11.0 + 4.0 * s6) / 50.0,
        ],
    );
    let off3 = (s5 - s30) / 25.0;
    let a3 = real(
        3,
        3,
        &[
            (7.0 - 2.0 * s6) / 25.0, off3, (2.0 + 3.0 * s6) / 50.0,
            off3, 0.2, -(4.0 + s6) / (10.0 * s5),
            (2.0 + 3.0 * s6) / 50.0, -(4.0 + s6) / (10.0 * s5), (11.0 + 4.0 * s6) / 50.0,
        ],
    );
    [a1, a2, a3]
}

/// The value the (3,3) entry of the first stated effect takes once the
/// example is rebuilt consistently: (14 - 4 sqrt 6) / 25.
pub fn worked_example_a1_33() -> f64 {
    (14.0 - 4.0 * s(6.0)) / 25.0
}
