//! Thin SVD with a reconstruction check.

use nalgebra::{DMatrix, DVector};

/// `m = u * diag(singular_values) * v_t`, thin factors.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: DMatrix<f64>,
    pub singular_values: DVector<f64>,
    pub v_t: DMatrix<f64>,
}

impl Svd {
    pub fn recompose(&self) -> DMatrix<f64> {
        let mut us = self.u.clone();
        for (k, s) in self.singular_values.iter().enumerate() {
            us.column_mut(k).scale_mut(*s);
        }
        us * &self.v_t
    }
}

fn factor(m: &DMatrix<f64>) -> Svd {
    let svd = m.clone().svd(true, true);
    Svd {
        u: svd.u.expect("u requested"),
        singular_values: svd.singular_values,
        v_t: svd.v_t.expect("v_t requested"),
    }
}

fn transpose(s: Svd) -> Svd {
    Svd {
        u: s.v_t.transpose(),
        singular_values: s.singular_values,
        v_t: s.u.transpose(),
    }
}

/// The nalgebra bidiagonal SVD occasionally returns mismatched singular
/// vectors when a singular value is exactly zero. Factors that do not
/// reproduce `m` are recomputed from the transpose, then from a slightly
/// rescaled copy; the most accurate attempt is returned.
pub fn svd(m: &DMatrix<f64>) -> Svd {
    let scale = m.amax();
    let tol = 1e-12 * scale.max(f64::MIN_POSITIVE) * (m.nrows().max(m.ncols()) as f64);
    let error = |s: &Svd| (s.recompose() - m).amax();

    let mut best = factor(m);
    let mut best_err = error(&best);
    if best_err <= tol {
        return best;
    }
    let rescale = 1.0 + 2f64.powi(-20);
    let attempts: [Box<dyn Fn() -> Svd + '_>; 2] = [
        Box::new(|| transpose(factor(&m.transpose()))),
        Box::new(|| {
            let mut s = factor(&(m * rescale));
            s.singular_values /= rescale;
            s
        }),
    ];
    for attempt in attempts {
        let s = attempt();
        let e = error(&s);
        if e < best_err {
            best = s;
            best_err = e;
        }
        if best_err <= tol {
            break;
        }
    }
    best
}
