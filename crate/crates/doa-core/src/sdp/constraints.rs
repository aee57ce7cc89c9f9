//! The 21 quadratic rotation-validity constraints in lifted trace form.
//!
//! Constraints 1–6 encode `R·Rᵀ = I`, 7–12 encode `Rᵀ·R = I`, and 13–21 set
//! the three columns of `R − adj(R)ᵀ` to zero, which together with
//! orthogonality forces `det(R) = +1`. At rank 1 the lifted matrix satisfies
//! `X_{j,13} = −ψ_j`, so a linear term `c·ψ_j` is realised as `−c/2` at
//! `(j,13)` and `(13,j)`, and a constant as itself at `(13,13)`.

use nalgebra::{Matrix3, SVector};

use super::{Mat13, Vec13};

/// One symmetric trace-constraint matrix `⟨Q, X⟩ = C_id(Ψ)`.
#[derive(Debug, Clone)]
pub struct ConstraintMatrix {
    pub q: Mat13,
    /// Constraint index, 1..=21.
    pub id: usize,
}

/// Lifts an unknown vector (normalised units) into `[Ψ; −1][Ψ; −1]ᵀ`.
pub fn lift(psi: &SVector<f64, 12>) -> Mat13 {
    let mut v = Vec13::zeros();
    for i in 0..12 {
        v[i] = psi[i];
    }
    v[12] = -1.0;
    v * v.transpose()
}

struct Builder {
    q: Mat13,
}

impl Builder {
    fn new() -> Self {
        Builder { q: Mat13::zeros() }
    }

    /// Adds `coeff · ψ_a ψ_b` (1-based indices).
    fn quad(mut self, a: usize, b: usize, coeff: f64) -> Self {
        let (i, j) = (a - 1, b - 1);
        if i == j {
            self.q[(i, i)] += coeff;
        } else {
            self.q[(i, j)] += coeff / 2.0;
            self.q[(j, i)] += coeff / 2.0;
        }
        self
    }

    /// Adds `coeff · ψ_j` (1-based index).
    fn linear(mut self, j: usize, coeff: f64) -> Self {
        self.q[(j - 1, 12)] += -coeff / 2.0;
        self.q[(12, j - 1)] += -coeff / 2.0;
        self
    }

    fn constant(mut self, c: f64) -> Self {
        self.q[(12, 12)] += c;
        self
    }

    fn dot(self, u: [usize; 3], v: [usize; 3]) -> Self {
        self.quad(u[0], v[0], 1.0)
            .quad(u[1], v[1], 1.0)
            .quad(u[2], v[2], 1.0)
    }
}

/// Builds all 21 constraint matrices in index order.
pub fn build_constraints() -> Vec<ConstraintMatrix> {
    let rows: [[usize; 3]; 3] = [[1, 2, 3], [4, 5, 6], [7, 8, 9]];
    let cols: [[usize; 3]; 3] = [[1, 4, 7], [2, 5, 8], [3, 6, 9]];
    let mut out = Vec::with_capacity(21);

    // C1..C3: unit rows; C4..C6: orthogonal row pairs.
    for i in 0..3 {
        out.push(Builder::new().dot(rows[i], rows[i]).constant(-1.0).q);
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        out.push(Builder::new().dot(rows[i], rows[j]).q);
    }
    // C7..C9: unit columns; C10..C12: orthogonal column pairs.
    for i in 0..3 {
        out.push(Builder::new().dot(cols[i], cols[i]).constant(-1.0).q);
    }
    for (i, j) in [(0, 1), (0, 2), (1, 2)] {
        out.push(Builder::new().dot(cols[i], cols[j]).q);
    }
    // C13..C21: entries of R − adj(R)ᵀ, column by column. Each is
    // ψ_lin − (ψ_p·ψ_q − ψ_r·ψ_s).
    let adjugate_terms: [(usize, usize, usize, usize, usize); 9] = [
        (1, 5, 9, 6, 8),
        (4, 3, 8, 2, 9),
        (7, 2, 6, 3, 5),
        (2, 6, 7, 4, 9),
        (5, 1, 9, 3, 7),
        (8, 3, 4, 1, 6),
        (3, 4, 8, 5, 7),
        (6, 2, 7, 1, 8),
        (9, 1, 5, 2, 4),
    ];
    for (lin, p, q, r, s) in adjugate_terms {
        out.push(
            Builder::new()
                .linear(lin, 1.0)
                .quad(p, q, -1.0)
                .quad(r, s, 1.0)
                .q,
        );
    }

    out.into_iter()
        .enumerate()
        .map(|(i, q)| ConstraintMatrix { q, id: i + 1 })
        .collect()
}

/// Direct evaluation of `C_1..C_21` from the rotation block, via matrix
/// products and the adjugate. Independent of the trace-form matrices; used as
/// the oracle for constraint faithfulness and by the constraints-check CLI.
pub fn evaluate_constraints_direct(rotation_block: &Matrix3<f64>) -> [f64; 21] {
    let r = rotation_block;
    let rrt = r * r.transpose();
    let rtr = r.transpose() * r;
    let id = Matrix3::identity();
    let e1 = rrt - id;
    let e2 = rtr - id;
    // Adjugate via cofactors.
    let mut cof = Matrix3::zeros();
    for i in 0..3 {
        for j in 0..3 {
            let mut minor = [[0.0; 2]; 2];
            let (mut mi, mut mj);
            mi = 0;
            for ii in 0..3 {
                if ii == i {
                    continue;
                }
                mj = 0;
                for jj in 0..3 {
                    if jj == j {
                        continue;
                    }
                    minor[mi][mj] = r[(ii, jj)];
                    mj += 1;
                }
                mi += 1;
            }
            let det = minor[0][0] * minor[1][1] - minor[0][1] * minor[1][0];
            cof[(i, j)] = if (i + j) % 2 == 0 { det } else { -det };
        }
    }
    let z = r - cof;

    [
        e1[(0, 0)],
        e1[(1, 1)],
        e1[(2, 2)],
        e1[(0, 1)],
        e1[(0, 2)],
        e1[(1, 2)],
        e2[(0, 0)],
        e2[(1, 1)],
        e2[(2, 2)],
        e2[(0, 1)],
        e2[(0, 2)],
        e2[(1, 2)],
        z[(0, 0)],
        z[(1, 0)],
        z[(2, 0)],
        z[(0, 1)],
        z[(1, 1)],
        z[(2, 1)],
        z[(0, 2)],
        z[(1, 2)],
        z[(2, 2)],
    ]
}

/// `⟨U, V⟩ = trace(U·Vᵀ)`, the Frobenius inner product.
pub(crate) fn inner(u: &Mat13, v: &Mat13) -> f64 {
    u.iter().zip(v.iter()).map(|(a, b)| a * b).sum()
}
