//! Link kernels, their compositions and closed forms, the kernels to the
//! boundary, and the test functions whose images are known explicitly.

mod closed;
mod genfun;
mod infinite;
mod link;
mod residue;

pub use closed::{
    closed_measure, extended_measure, extreme_point_masses, lambda_closed_n1, lambda_closed_nk,
    extreme_mass_bound, moment_check, support_candidates, ClosedForm, MomentResidual,
};
pub use genfun::{
    f_az_closed_image, eval_f_az, eval_f_z, integrate_f_az, f_z_closed_image, verify_f_az_image, verify_f_z_image,
    EvalPoints, IdentityCheck,
};
pub use infinite::{
    infinite_support_candidates, lambda_inf, lambda_inf_residue, lambda_inf_zero_atom, qq_inf,
    InfiniteKernel, LimitTrace,
};
pub(crate) use infinite::regular_limit_of;
pub(crate) use link::Link;
pub use link::{link_measure, link_measure_ext, link_weight, link_weight_ext, telescope};
pub use residue::{orthogonality_residue, orthogonality_window};

use crate::lattice::{ExtConfig, QParams};
use crate::scalar::{Field, RealField};
use std::collections::BTreeMap;

/// A finitely supported measure on configurations plus a bound on the mass
/// that was not enumerated.
#[derive(Clone, Debug, PartialEq)]
pub struct DiscreteMeasure<F> {
    pub atoms: BTreeMap<ExtConfig, F>,
    pub tail_bound: F,
}

impl<F: Field> DiscreteMeasure<F> {
    pub fn new() -> Self {
        DiscreteMeasure { atoms: BTreeMap::new(), tail_bound: F::zero() }
    }

    pub fn total(&self) -> F {
        self.atoms.values().fold(F::zero(), |a, w| a + w.clone())
    }

    pub fn mass(&self, y: &ExtConfig) -> F {
        self.atoms.get(y).cloned().unwrap_or_else(F::zero)
    }

    pub fn len(&self) -> usize {
        self.atoms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.atoms.is_empty()
    }

    pub fn add(&mut self, y: ExtConfig, w: F) {
        match self.atoms.get_mut(&y) {
            Some(v) => *v = v.clone() + w,
            None => {
                self.atoms.insert(y, w);
            }
        }
    }

    /// `sum_Y w(Y) f(Y)`.
    pub fn integrate<G: Field>(&self, mut f: impl FnMut(&ExtConfig) -> G, lift: impl Fn(&F) -> G) -> G {
        self.atoms.iter().fold(G::zero(), |a, (y, w)| a + lift(w) * f(y))
    }
}

impl<F: Field> Default for DiscreteMeasure<F> {
    fn default() -> Self {
        Self::new()
    }
}

impl<F: RealField> DiscreteMeasure<F> {
    pub fn to_f64(&self) -> DiscreteMeasure<f64> {
        DiscreteMeasure {
            atoms: self.atoms.iter().map(|(k, v)| (k.clone(), v.as_f64())).collect(),
            tail_bound: self.tail_bound.as_f64(),
        }
    }

    /// Every atom lies in the closed range `[lo, hi]` of values.
    pub fn support_within(&self, lo: &ExtConfig, hi: &ExtConfig, params: &QParams) -> bool {
        let _ = params;
        let (Some((a, _)), Some((_, b))) = (lo.bounds(), hi.bounds()) else { return true };
        self.atoms.keys().all(|y| match y.bounds() {
            Some((ya, yb)) => ya >= a && yb <= b,
            None => true,
        })
    }
}

/// `(q; q)_n` for `n = 0..=max` in the field `F`.
pub(crate) fn qq_table<F: Field>(max: usize, params: &QParams) -> Vec<F> {
    let q = &params.q;
    let mut out = Vec::with_capacity(max + 1);
    let mut acc = crate::scalar::Rational::from_integer(1.into());
    out.push(F::one());
    let mut qi = q.clone();
    for _ in 0..max {
        acc *= crate::scalar::Rational::from_integer(1.into()) - &qi;
        qi *= q;
        out.push(F::from_rational(&acc));
    }
    out
}
