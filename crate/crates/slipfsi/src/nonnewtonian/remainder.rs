use nalgebra::{Matrix3, Vector3};

use super::coefficients::extra_stress;
use super::frozen::ReferenceStrain;
use super::ViscosityModel;
use crate::error::Result;
use crate::stokes::fem::{self, QuadCache};

/// Weak form of `A*û − [𝕋(u* + û) − 𝕋(u*)]` on the full nodal space, with
/// `A*` the tangent at `u*`; quadratic in `û` for smooth viscosities.
pub fn remainder_load(model: &ViscosityModel, cache: &QuadCache, reference: &[f64], perturbation: &[f64]) -> Result<Vec<f64>> {
    let mut table = Vec::with_capacity(cache.tets.len());
    for t in 0..cache.tets.len() {
        let ls = cache.local_values(t, reference);
        let lp = cache.local_values(t, perturbation);
        let row = cache.points[t]
            .iter()
            .map(|q| {
                let (_, gs) = fem::eval_velocity(q, &ls);
                let (_, gp) = fem::eval_velocity(q, &lp);
                let ds = (gs + gs.transpose()) * 0.5;
                let dp = (gp + gp.transpose()) * 0.5;
                let tangent = ReferenceStrain::new(model, ds)?.apply(&gp);
                Ok(tangent - (extra_stress(model, &(ds + dp))? - extra_stress(model, &ds)?))
            })
            .collect::<Result<Vec<Matrix3<f64>>>>()?;
        table.push(row);
    }
    Ok(fem::assemble_vector(cache, |t, qi, _| (Vector3::zeros(), table[t][qi])))
}
