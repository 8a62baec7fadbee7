/// Runge–Kutta coefficients `a` (s×s, row-major), `b` and `c`.
#[derive(Clone, Debug, PartialEq)]
pub struct ButcherTableau {
    pub a: Vec<Vec<f64>>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
}

impl ButcherTableau {
    pub fn stages(&self) -> usize {
        self.b.len()
    }

    pub fn implicit_midpoint() -> Self {
        Self {
            a: vec![vec![0.5]],
            b: vec![1.0],
            c: vec![0.5],
        }
    }

    pub fn classical_rk4() -> Self {
        Self {
            a: vec![
                vec![0.0, 0.0, 0.0, 0.0],
                vec![0.5, 0.0, 0.0, 0.0],
                vec![0.0, 0.5, 0.0, 0.0],
                vec![0.0, 0.0, 1.0, 0.0],
            ],
            b: vec![1.0 / 6.0, 1.0 / 3.0, 1.0 / 3.0, 1.0 / 6.0],
            c: vec![0.0, 0.5, 0.5, 1.0],
        }
    }

    /// Two-stage Gauss–Legendre method.
    pub fn gauss2() -> Self {
        let r = 3f64.sqrt() / 6.0;
        Self {
            a: vec![vec![0.25, 0.25 - r], vec![0.25 + r, 0.25]],
            b: vec![0.5, 0.5],
            c: vec![0.5 - r, 0.5 + r],
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct QuadraticInvariantCheck {
    pub holds: bool,
    pub max_violation: f64,
}

pub const QUADRATIC_INVARIANT_TOL: f64 = 1e-14;

/// Checks `b_i a_ij + b_j a_ji = b_i b_j` for all stage pairs; methods
/// satisfying it conserve every quadratic first integral.
pub fn satisfies_quadratic_invariant_condition(t: &ButcherTableau) -> QuadraticInvariantCheck {
    let s = t.stages();
    let mut worst: f64 = 0.0;
    for i in 0..s {
        for j in 0..s {
            let v = t.b[i] * t.a[i][j] + t.b[j] * t.a[j][i] - t.b[i] * t.b[j];
            worst = worst.max(v.abs());
        }
    }
    QuadraticInvariantCheck {
        holds: worst <= QUADRATIC_INVARIANT_TOL,
        max_violation: worst,
    }
}
