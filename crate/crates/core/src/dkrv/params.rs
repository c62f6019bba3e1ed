use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::chaos::{check_gamma, liouville_q};
use crate::error::{Error, Result};

/// Location of a marked point on the Riemann sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "at", rename_all = "snake_case")]
pub enum InsertionPoint {
    Finite { re: f64, im: f64 },
    Infinity,
}

impl InsertionPoint {
    pub fn finite(z: Complex64) -> Self {
        InsertionPoint::Finite { re: z.re, im: z.im }
    }

    pub fn as_complex(&self) -> Option<Complex64> {
        match self {
            InsertionPoint::Finite { re, im } => Some(Complex64::new(*re, *im)),
            InsertionPoint::Infinity => None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Insertion {
    pub point: InsertionPoint,
    pub alpha: f64,
}

impl Insertion {
    pub fn at(z: Complex64, alpha: f64) -> Self {
        Insertion { point: InsertionPoint::finite(z), alpha }
    }

    pub fn at_infinity(alpha: f64) -> Self {
        Insertion { point: InsertionPoint::Infinity, alpha }
    }
}

/// Insertions of weight `γ` at `0`, `1` and `∞`.
pub fn three_point_insertions(gamma: f64) -> Vec<Insertion> {
    vec![
        Insertion::at(Complex64::new(0.0, 0.0), gamma),
        Insertion::at(Complex64::new(1.0, 0.0), gamma),
        Insertion::at_infinity(gamma),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BoundStatus {
    ClassicSeiberg,
    ExtendedOnly,
    Violated,
}

/// Per-condition outcome of [`check_bounds`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BoundReport {
    pub status: BoundStatus,
    /// `Σα_i > 2Q`.
    pub first_seiberg: bool,
    /// `α_i < Q` for every `i`.
    pub second_seiberg: bool,
    /// `Q - Σα_i/2 < (2/γ) ∧ min_i(Q - α_i)`.
    pub extended: bool,
    pub extended_lhs: f64,
    pub extended_rhs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LqgParams {
    pub gamma: f64,
    pub q: f64,
    pub insertions: Vec<Insertion>,
    /// `Σα_i - 2Q`.
    pub s: f64,
    /// `(2Q - 3γ)/γ`.
    pub a: f64,
    /// `4 - 8/γ²`.
    pub delta_bessel: f64,
    pub bounds: BoundReport,
}

impl LqgParams {
    pub fn bound_status(&self) -> BoundStatus {
        self.bounds.status
    }

    /// Importance-weight exponent `-s/γ`.
    pub fn weight_exponent(&self) -> f64 {
        -self.s / self.gamma
    }

    pub fn alphas(&self) -> Vec<f64> {
        self.insertions.iter().map(|i| i.alpha).collect()
    }
}

pub fn derive_params(gamma: f64, insertions: &[Insertion]) -> Result<LqgParams> {
    check_gamma(gamma)?;
    if let Some(i) = insertions.iter().find(|i| !i.alpha.is_finite()) {
        return Err(Error::Parameter(format!("insertion weight {} is not finite", i.alpha)));
    }
    let q = liouville_q(gamma);
    let sum: f64 = insertions.iter().map(|i| i.alpha).sum();
    let scale: f64 = insertions.iter().map(|i| i.alpha.abs()).sum::<f64>() + 2.0 * q;
    let mut p = LqgParams {
        gamma,
        q,
        insertions: insertions.to_vec(),
        s: snap(sum - 2.0 * q, scale),
        a: snap((2.0 * q - 3.0 * gamma) / gamma, scale / gamma),
        delta_bessel: snap(4.0 - 8.0 / (gamma * gamma), 8.0 / (gamma * gamma)),
        bounds: BoundReport {
            status: BoundStatus::Violated,
            first_seiberg: false,
            second_seiberg: false,
            extended: false,
            extended_lhs: 0.0,
            extended_rhs: 0.0,
        },
    };
    p.bounds = check_bounds(&p);
    Ok(p)
}

/// Values within round-off of zero (relative to the magnitude of the terms that
/// produced them) are exactly zero: `γ = √2` is a genuine boundary case.
fn snap(x: f64, scale: f64) -> f64 {
    if x.abs() <= 16.0 * f64::EPSILON * scale {
        0.0
    } else {
        x
    }
}

pub fn check_bounds(params: &LqgParams) -> BoundReport {
    let q = params.q;
    let sum: f64 = params.insertions.iter().map(|i| i.alpha).sum();
    let first_seiberg = sum > 2.0 * q;
    let second_seiberg = params.insertions.iter().all(|i| i.alpha < q);
    let extended_lhs = q - sum / 2.0;
    let extended_rhs = params.insertions.iter().fold(2.0 / params.gamma, |m, i| m.min(q - i.alpha));
    let extended = extended_lhs < extended_rhs;
    let status = if first_seiberg && second_seiberg {
        BoundStatus::ClassicSeiberg
    } else if extended && second_seiberg {
        BoundStatus::ExtendedOnly
    } else {
        BoundStatus::Violated
    };
    BoundReport { status, first_seiberg, second_seiberg, extended, extended_lhs, extended_rhs }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn boundary_case_gamma_sqrt2() {
        let g = 2f64.sqrt();
        let p = derive_params(g, &three_point_insertions(g)).unwrap();
        assert!((p.q - 3.0 / 2f64.sqrt()).abs() < 1e-12);
        assert_eq!((p.s, p.a, p.delta_bessel), (0.0, 0.0, 0.0));
    }

    #[test]
    fn pure_gravity_and_gamma_one() {
        let g = (8.0f64 / 3.0).sqrt();
        assert!((derive_params(g, &[]).unwrap().delta_bessel - 1.0).abs() < 1e-12);
        let p = derive_params(1.0, &three_point_insertions(1.0)).unwrap();
        assert_eq!((p.q, p.s, p.a, p.delta_bessel), (2.5, -2.0, 2.0, -4.0));
    }

    #[test]
    fn truth_table() {
        let p = derive_params(1.8, &three_point_insertions(1.8)).unwrap();
        assert_eq!(p.bound_status(), BoundStatus::ClassicSeiberg);
        let p = derive_params(1.0, &three_point_insertions(1.0)).unwrap();
        assert_eq!(p.bound_status(), BoundStatus::ExtendedOnly);
        let q = crate::chaos::liouville_q(1.0);
        let mut ins = three_point_insertions(1.0);
        ins[1].alpha = q;
        assert_eq!(derive_params(1.0, &ins).unwrap().bound_status(), BoundStatus::Violated);
    }

    #[test]
    fn rejects_gamma_out_of_range() {
        assert!(matches!(derive_params(2.0, &[]), Err(Error::Parameter(_))));
    }

    proptest! {
        #[test]
        fn three_gamma_insertions_never_violate(gamma in 0.01f64..1.99) {
            let p = derive_params(gamma, &three_point_insertions(gamma)).unwrap();
            prop_assert_ne!(p.bound_status(), BoundStatus::Violated);
        }

        #[test]
        fn classic_implies_extended(gamma in 0.05f64..1.95, a in prop::collection::vec(0.0f64..4.0, 1..5)) {
            let ins: Vec<Insertion> = a.iter().enumerate().map(|(i, &x)| Insertion::at(Complex64::new(i as f64, 0.0), x)).collect();
            let p = derive_params(gamma, &ins).unwrap();
            if p.bounds.first_seiberg && p.bounds.second_seiberg {
                prop_assert!(p.bounds.extended);
            }
            prop_assert_eq!(check_bounds(&p), p.bounds);
        }
    }
}
