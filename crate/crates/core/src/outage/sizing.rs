//! IRS efficiency and the smallest IRS reaching a target efficiency
//! (i.i.d. channels with `M = N`).

use serde::Serialize;

use crate::error::{Error, Result};
use crate::rmt::{asymptotic_limit, iid_emi};

/// Largest IRS size searched.
pub const MAX_IRS_SIZE: usize = 1_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SizingAnswer {
    pub eta_target: f64,
    /// `None` when even [`MAX_IRS_SIZE`] elements fall short.
    pub l_min: Option<usize>,
    pub mean_at_l: f64,
    pub mean_inf: f64,
}

/// `η = Ī(L) / Ī_∞`.
pub fn irs_efficiency(mean_at_l: f64, mean_inf: f64) -> Result<f64> {
    if !(mean_inf > 0.0) {
        return Err(Error::invalid(format!("asymptotic mean must be positive, got {mean_inf}")));
    }
    Ok(mean_at_l / mean_inf)
}

pub fn min_irs_size(eta_target: f64, n: usize, rho: f64) -> Result<SizingAnswer> {
    if !(eta_target > 0.0 && eta_target < 1.0) {
        return Err(Error::invalid(format!("target efficiency must lie in (0, 1), got {eta_target}")));
    }
    if n == 0 {
        return Err(Error::invalid("antenna count must be positive"));
    }
    let mean_inf = asymptotic_limit(n, rho)?.mean_nats;
    let goal = eta_target * mean_inf;
    let mean = |l: usize| iid_emi(n, n as f64 / l as f64, rho);

    let top = mean(MAX_IRS_SIZE)?;
    if top < goal {
        return Ok(SizingAnswer { eta_target, l_min: None, mean_at_l: top, mean_inf });
    }
    let first = mean(1)?;
    if first >= goal {
        return Ok(SizingAnswer { eta_target, l_min: Some(1), mean_at_l: first, mean_inf });
    }
    // invariant: mean(lo) < goal <= mean(hi)
    let (mut lo, mut hi) = (1usize, MAX_IRS_SIZE);
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if mean(mid)? >= goal {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok(SizingAnswer { eta_target, l_min: Some(hi), mean_at_l: mean(hi)?, mean_inf })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn efficiency_definition() {
        assert_eq!(irs_efficiency(0.0, 3.0).unwrap(), 0.0);
        assert_eq!(irs_efficiency(1.5, 3.0).unwrap(), 0.5);
        assert!(irs_efficiency(1.0, 0.0).is_err());
    }

    #[test]
    fn efficiency_increases_with_size() {
        let rho = 10.0;
        let inf = asymptotic_limit(20, rho).unwrap().mean_nats;
        let mut prev = 0.0;
        for l in [1usize, 2, 5, 10, 20, 50, 100, 1000] {
            let eta = irs_efficiency(iid_emi(20, 20.0 / l as f64, rho).unwrap(), inf).unwrap();
            assert!(eta > prev && eta < 1.0);
            prev = eta;
        }
    }

    #[test]
    fn boundary_property() {
        let ans = min_irs_size(0.9, 20, 10.0).unwrap();
        let l = ans.l_min.unwrap();
        let goal = 0.9 * ans.mean_inf;
        assert!(iid_emi(20, 20.0 / l as f64, 10.0).unwrap() >= goal);
        assert!(iid_emi(20, 20.0 / (l - 1) as f64, 10.0).unwrap() < goal);
    }

    #[test]
    fn tiny_target_needs_one_element() {
        assert_eq!(min_irs_size(1e-6, 4, 10.0).unwrap().l_min, Some(1));
    }

    #[test]
    fn unreachable_target() {
        assert_eq!(min_irs_size(1.0 - 1e-12, 4, 10.0).unwrap().l_min, None);
    }
}
