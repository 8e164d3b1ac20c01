//! Dense complex linear algebra for small (dim ≤ 16) Hermitian problems.
//!
//! Everything here is sized for the gate models in this crate; no attempt
//! is made at large-matrix performance.

use ndarray::{Array1, Array2};
use num_complex::Complex64;

use crate::{CoreError, Result};

/// Complex scalar used throughout the crate.
pub type C64 = Complex64;

/// Maximum absolute deviation from Hermiticity, `max_ij |H_ij - conj(H_ji)|`.
pub fn hermiticity_defect(m: &Array2<C64>) -> f64 {
    let n = m.nrows();
    let mut defect = 0.0_f64;
    for i in 0..n {
        for j in i..n {
            let d = (m[[i, j]] - m[[j, i]].conj()).norm();
            if d > defect {
                defect = d;
            }
        }
    }
    defect
}

/// Maximum absolute deviation of `u` from unitarity, `max |u†u - 1|`.
pub fn unitarity_defect(u: &Array2<C64>) -> f64 {
    let n = u.nrows();
    let mut defect = 0.0_f64;
    for i in 0..n {
        for j in 0..n {
            let mut acc = C64::new(0.0, 0.0);
            for k in 0..n {
                acc += u[[k, i]].conj() * u[[k, j]];
            }
            let target = if i == j { 1.0 } else { 0.0 };
            let d = (acc - target).norm();
            if d > defect {
                defect = d;
            }
        }
    }
    defect
}

fn frobenius(m: &Array2<C64>) -> f64 {
    m.iter().map(|z| z.norm_sqr()).sum::<f64>().sqrt()
}

/// Eigendecomposition of a Hermitian matrix by cyclic complex Jacobi
/// rotations.
///
/// Returns eigenvalues in ascending order and the unitary whose columns
/// are the matching eigenvectors, so `a ≈ V · diag(λ) · V†`.
pub fn eigh(a: &Array2<C64>) -> Result<(Array1<f64>, Array2<C64>)> {
    let n = a.nrows();
    if a.ncols() != n {
        return Err(CoreError::DimensionMismatch {
            expected: n,
            actual: a.ncols(),
        });
    }
    let defect = hermiticity_defect(a);
    let scale = frobenius(a).max(1e-300);
    if defect > 1e-10 * scale.max(1.0) {
        return Err(CoreError::NonHermitian { t: f64::NAN, defect });
    }

    let mut m = a.clone();
    let mut v: Array2<C64> = Array2::eye(n);
    let tol = 1e-14 * scale;
    let max_sweeps = 100;

    for sweep in 0..=max_sweeps {
        let off: f64 = (0..n)
            .flat_map(|p| ((p + 1)..n).map(move |q| (p, q)))
            .map(|(p, q)| m[[p, q]].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            break;
        }
        if sweep == max_sweeps {
            return Err(CoreError::EighNoConvergence { sweeps: max_sweeps });
        }
        for p in 0..n - 1 {
            for q in (p + 1)..n {
                let apq = m[[p, q]];
                let habs = apq.norm();
                if habs <= tol / (n as f64) {
                    continue;
                }
                // Strip the phase so the 2x2 block is real symmetric,
                // then apply a classical Jacobi rotation.
                let phase = apq / habs;
                let app = m[[p, p]].re;
                let aqq = m[[q, q]].re;
                let tau = (aqq - app) / (2.0 * habs);
                let t = if tau >= 0.0 {
                    1.0 / (tau + (1.0 + tau * tau).sqrt())
                } else {
                    -1.0 / (-tau + (1.0 + tau * tau).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;

                // J = diag(e^{iφ/2}, e^{-iφ/2}) · [[c, s], [-s, c]]
                let half = C64::new(phase.arg() / 2.0, 0.0);
                let ep = (C64::i() * half).exp();
                let em = ep.conj();
                let j11 = ep * c;
                let j12 = ep * s;
                let j21 = -em * s;
                let j22 = em * c;

                for r in 0..n {
                    let mp = m[[r, p]];
                    let mq = m[[r, q]];
                    m[[r, p]] = mp * j11 + mq * j21;
                    m[[r, q]] = mp * j12 + mq * j22;
                }
                for col in 0..n {
                    let mp = m[[p, col]];
                    let mq = m[[q, col]];
                    m[[p, col]] = j11.conj() * mp + j21.conj() * mq;
                    m[[q, col]] = j12.conj() * mp + j22.conj() * mq;
                }
                for r in 0..n {
                    let vp = v[[r, p]];
                    let vq = v[[r, q]];
                    v[[r, p]] = vp * j11 + vq * j21;
                    v[[r, q]] = vp * j12 + vq * j22;
                }
            }
        }
    }

    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| m[[i, i]].re.partial_cmp(&m[[j, j]].re).unwrap());
    let eigenvalues = Array1::from_iter(order.iter().map(|&i| m[[i, i]].re));
    let mut vectors = Array2::zeros((n, n));
    for (dst, &src) in order.iter().enumerate() {
        for r in 0..n {
            vectors[[r, dst]] = v[[r, src]];
        }
    }
    Ok((eigenvalues, vectors))
}

/// `exp(-i · H · dt)` for Hermitian `H`, by scaling-and-squaring with a
/// Taylor series. Exact to machine precision for the matrix norms that
/// occur here.
pub fn expm_minus_i_h_dt(h: &Array2<C64>, dt: f64) -> Array2<C64> {
    let n = h.nrows();
    let a = h.mapv(|z| -C64::i() * z * dt);
    let norm = (0..n)
        .map(|i| (0..n).map(|j| a[[i, j]].norm()).sum::<f64>())
        .fold(0.0_f64, f64::max);
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as u32
    } else {
        0
    };
    let b = a.mapv(|z| z / f64::from(2u32.pow(squarings).max(1)));

    let mut result: Array2<C64> = Array2::eye(n);
    let mut term: Array2<C64> = Array2::eye(n);
    for k in 1..=40 {
        term = term.dot(&b).mapv(|z| z / k as f64);
        result += &term;
        if frobenius(&term) < 1e-20 {
            break;
        }
    }
    for _ in 0..squarings {
        result = result.dot(&result);
    }
    result
}
