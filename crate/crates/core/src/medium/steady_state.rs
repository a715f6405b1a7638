use nalgebra::{DMatrix, SMatrix, SVector};
use num_complex::Complex64;

use super::{Drive, LadderAtom, CONDITION_WARNING};
use crate::error::{Error, Result};

pub type ZerothOrderMatrix = SMatrix<Complex64, 9, 9>;
pub type ZerothOrderVector = SVector<Complex64, 9>;

/// Zeroth-order (probe-free) density-matrix elements.
#[derive(Debug, Clone, PartialEq)]
pub struct SteadyState {
    pub sigma11: f64,
    pub sigma22: f64,
    pub sigma33: f64,
    pub sigma44: f64,
    pub sigma23: Complex64,
    pub sigma32: Complex64,
    pub sigma24: Complex64,
    pub sigma42: Complex64,
    pub sigma34: Complex64,
    pub sigma43: Complex64,
    /// 2-norm condition number of the 9x9 system.
    pub condition_number: f64,
    pub warnings: Vec<String>,
}

impl SteadyState {
    /// All population in |1>.
    pub fn ground() -> Self {
        let zero = Complex64::new(0.0, 0.0);
        Self {
            sigma11: 1.0,
            sigma22: 0.0,
            sigma33: 0.0,
            sigma44: 0.0,
            sigma23: zero,
            sigma32: zero,
            sigma24: zero,
            sigma42: zero,
            sigma34: zero,
            sigma43: zero,
            condition_number: 1.0,
            warnings: Vec::new(),
        }
    }

    pub fn trace(&self) -> f64 {
        self.sigma11 + self.sigma22 + self.sigma33 + self.sigma44
    }

    /// Largest deviation from `sigma_ji = conj(sigma_ij)` over the three pairs.
    pub fn hermiticity_error(&self) -> f64 {
        [
            (self.sigma23, self.sigma32),
            (self.sigma24, self.sigma42),
            (self.sigma34, self.sigma43),
        ]
        .iter()
        .map(|(a, b)| (a.conj() - b).norm())
        .fold(0.0, f64::max)
    }

    /// Full 4x4 matrix of expectation values `<sigma_mu nu>` (row mu, column nu).
    /// Probe coherences are zero at this order.
    pub fn to_matrix(&self) -> [[Complex64; 4]; 4] {
        let z = Complex64::new(0.0, 0.0);
        let r = |x: f64| Complex64::new(x, 0.0);
        [
            [r(self.sigma11), z, z, z],
            [z, r(self.sigma22), self.sigma23, self.sigma24],
            [z, self.sigma32, r(self.sigma33), self.sigma34],
            [z, self.sigma42, self.sigma43, r(self.sigma44)],
        ]
    }
}

/// The zeroth-order generator `M0` and source `S0`, entry for entry in the
/// reference layout, acting on
/// `[s11, s22, s33, s23, s32, s24, s42, s34, s43]` with `s44` eliminated by
/// the trace; the dynamics read `d/dt Sigma = M0 Sigma + S0`.
///
/// Compared with the Heisenberg equations built from the Hamiltonian and the
/// decay terms, three groups of reference entries differ: row 3 carries the
/// microwave couplings as `+-Omega_MW/2` where `-+i Omega_MW/2` follows, and
/// rows 4 and 5 carry `+-i Delta_c` with the opposite sign. None of them
/// touches the stationary solution because the probe-free ladder always
/// relaxes to |1>, whose equations these entries multiply by zero.
pub fn reference_zeroth_order_system(
    atom: &LadderAtom,
    drive: &Drive,
) -> (ZerothOrderMatrix, ZerothOrderVector) {
    let (g2, g3, g4) = (atom.gamma2, atom.gamma3, atom.gamma4);
    let i = Complex64::i();
    let re = |x: f64| Complex64::new(x, 0.0);
    let wc = drive.omega_c;
    let wm = drive.omega_mw;
    let dc = drive.delta_c;
    let dm = drive.delta_mw;
    let beta1 = re(g2 + g4) + i * (2.0 * dc + 2.0 * dm);
    let beta2 = re(g2 + g4) - i * (2.0 * dc + 2.0 * dm);
    let z = re(0.0);
    let h = 0.5;

    #[rustfmt::skip]
    let m = ZerothOrderMatrix::from_row_slice(&[
        re(-g4), re(g2 - g4), re(g3 - g4), z, z, z, z, z, z,
        z, re(-g2), z, -i * wc * h, i * wc * h, z, z, z, z,
        z, z, re(-g3), i * wc * h, -i * wc * h, z, z, wm * h, -wm * h,
        z, -i * wc * h, i * wc * h, (i * 2.0 * dc - g3 - g2) * h, z, -i * wm * h, z, z, z,
        z, i * wc * h, -i * wc * h, z, (-i * 2.0 * dc - g3 - g2) * h, z, i * wm * h, z, z,
        z, z, z, -i * wm * h, z, -beta1 * h, z, i * wc * h, z,
        z, z, z, z, i * wm * h, z, -beta2 * h, z, -i * wc * h,
        -i * wm * h, -i * wm * h, -i * wm, z, z, i * wc * h, z, (-g3 - g4 - i * 2.0 * dm) * h, z,
        i * wm * h, i * wm * h, i * wm, z, z, z, -i * wc * h, z, (-g3 - g4 + i * 2.0 * dm) * h,
    ]);
    let s =
        ZerothOrderVector::from_column_slice(&[re(g4), z, z, z, z, z, z, i * wm * h, -i * wm * h]);
    (m, s)
}

/// Stationary solution of the zeroth-order system, `M0 Sigma = -S0`, with
/// `sigma44` recovered from the trace.
pub fn steady_state(atom: &LadderAtom, drive: &Drive) -> Result<SteadyState> {
    atom.validate()?;
    drive.validate()?;
    let (m, s) = reference_zeroth_order_system(atom, drive);
    let condition = condition_number(&m);
    let x = m
        .lu()
        .solve(&(-s))
        .filter(|x| x.iter().all(|v| v.is_finite()));
    let Some(x) = x else {
        return Err(Error::Solver {
            system: "zeroth-order steady state",
            condition,
        });
    };
    let mut warnings = Vec::new();
    if condition > CONDITION_WARNING {
        warnings.push(format!(
            "ill-conditioned zeroth-order system (condition {condition:e})"
        ));
    }
    let (s11, s22, s33) = (x[0].re, x[1].re, x[2].re);
    Ok(SteadyState {
        sigma11: s11,
        sigma22: s22,
        sigma33: s33,
        sigma44: 1.0 - s11 - s22 - s33,
        sigma23: x[3],
        sigma32: x[4],
        sigma24: x[5],
        sigma42: x[6],
        sigma34: x[7],
        sigma43: x[8],
        condition_number: condition,
        warnings,
    })
}

pub(crate) fn condition_number<const N: usize>(m: &SMatrix<Complex64, N, N>) -> f64 {
    let sv = DMatrix::from_iterator(N, N, m.iter().copied()).singular_values();
    let max = sv.max();
    let min = sv.min();
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}
