use nalgebra::DMatrix;
use num_complex::Complex64;

use super::{Drive, LadderAtom, SteadyState};
use crate::error::{Error, Result};

/// Probe-free Hamiltonian over hbar in the rotating frame (rad/s).
pub fn hamiltonian(drive: &Drive) -> DMatrix<Complex64> {
    let z = Complex64::new(0.0, 0.0);
    let re = |x: f64| Complex64::new(x, 0.0);
    let (wc, wm) = (drive.omega_c, drive.omega_mw);
    let d2 = drive.delta_p;
    let d3 = d2 + drive.delta_c;
    let d4 = d3 + drive.delta_mw;
    #[rustfmt::skip]
    let h = DMatrix::from_row_slice(4, 4, &[
        z, z, z, z,
        z, re(d2), wc.conj() * 0.5, z,
        z, wc * 0.5, re(d3), wm.conj() * 0.5,
        z, z, wm * 0.5, re(d4),
    ]);
    h
}

/// Generator of `d rho / dt` acting on column-stacked `rho`, with
/// spontaneous decay of |2>, |3>, |4> into |1>.
pub fn liouvillian(atom: &LadderAtom, drive: &Drive) -> DMatrix<Complex64> {
    let h = hamiltonian(drive);
    let id = DMatrix::<Complex64>::identity(4, 4);
    let i = Complex64::i();
    let mut l = (id.kronecker(&h) - h.transpose().kronecker(&id)) * (-i);
    for (level, rate) in [(1, atom.gamma2), (2, atom.gamma3), (3, atom.gamma4)] {
        let mut jump = DMatrix::<Complex64>::zeros(4, 4);
        jump[(0, level)] = Complex64::new(rate.sqrt(), 0.0);
        let jd = jump.adjoint();
        let jdj = &jd * &jump;
        l += jump.conjugate().kronecker(&jump);
        l -= (id.kronecker(&jdj) + jdj.transpose().kronecker(&id)) * Complex64::new(0.5, 0.0);
    }
    l
}

/// Stationary density matrix `rho` (row and column index the kets) as the
/// right singular vector of the smallest singular value, normalised to unit
/// trace.
pub fn liouvillian_steady_state(atom: &LadderAtom, drive: &Drive) -> Result<DMatrix<Complex64>> {
    atom.validate()?;
    drive.validate()?;
    let svd = liouvillian(atom, drive).svd(false, true);
    let v_t = svd.v_t.ok_or(Error::Singular {
        context: "Liouvillian decomposition".into(),
    })?;
    let (k, _) = svd
        .singular_values
        .iter()
        .enumerate()
        .fold(
            (0, f64::INFINITY),
            |b, (k, &s)| if s < b.1 { (k, s) } else { b },
        );
    let v: Vec<Complex64> = v_t.row(k).iter().map(|c| c.conj()).collect();
    let rho = DMatrix::from_column_slice(4, 4, &v);
    let trace = rho.trace();
    if trace.norm() == 0.0 {
        return Err(Error::Singular {
            context: "traceless Liouvillian null vector".into(),
        });
    }
    Ok(rho / trace)
}

/// Largest element-wise gap between the two steady states, comparing
/// `<sigma_mu nu> = rho_nu mu`.
pub fn steady_state_gap(ss: &SteadyState, rho: &DMatrix<Complex64>) -> f64 {
    let m = ss.to_matrix();
    let mut worst: f64 = 0.0;
    for (mu, row) in m.iter().enumerate() {
        for (nu, value) in row.iter().enumerate() {
            worst = worst.max((value - rho[(nu, mu)]).norm());
        }
    }
    worst
}
