//! Finite-difference verification of analytic gradients.

use crate::error::{Error, Result};
use crate::numkit::params::ParamStore;
use crate::numkit::rng::RngState;

const REL_ERROR_FLOOR: f64 = 1e-8;

/// Compares the analytic gradients already accumulated in `store` against
/// central differences of `loss_fn`, coordinate by coordinate.
///
/// `loss_fn` must be deterministic (dropout off, fixed inputs). When the
/// store holds more than `max_coords` scalars, a seeded subset of at least
/// that many coordinates is sampled; 100 is a sensible floor. Returns the
/// maximum relative error `|ga - gn| / max(|ga|, |gn|, 1e-8)`.
pub fn grad_check<F>(
    store: &mut ParamStore,
    loss_fn: F,
    epsilon: f64,
    max_coords: usize,
    rng: &mut RngState,
) -> Result<f64>
where
    F: Fn(&ParamStore) -> Result<f64>,
{
    let names: Vec<String> = store.names().map(|s| s.to_string()).collect();
    let mut coords: Vec<(usize, usize)> = Vec::new();
    for (p, name) in names.iter().enumerate() {
        for i in 0..store.get(name).value.len() {
            coords.push((p, i));
        }
    }
    if coords.len() > max_coords.max(100) {
        rng.shuffle(&mut coords);
        coords.truncate(max_coords.max(100));
        coords.sort_unstable();
    }

    let mut max_rel = 0.0f64;
    for (p, i) in coords {
        let name = &names[p];
        let analytic = store.get(name).grad.data[i];
        let original = store.get(name).value.data[i];

        store.get_mut(name).value.data[i] = original + epsilon;
        let plus = loss_fn(&*store)?;
        store.get_mut(name).value.data[i] = original - epsilon;
        let minus = loss_fn(&*store)?;
        store.get_mut(name).value.data[i] = original;

        if !plus.is_finite() || !minus.is_finite() {
            return Err(Error::NonFinite {
                context: format!("grad_check loss at {name}[{i}]"),
            });
        }
        let numeric = (plus - minus) / (2.0 * epsilon);
        let rel = (analytic - numeric).abs() / analytic.abs().max(numeric.abs()).max(REL_ERROR_FLOOR);
        if rel > max_rel {
            max_rel = rel;
        }
    }
    Ok(max_rel)
}
