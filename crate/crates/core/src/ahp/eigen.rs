use serde::Serialize;

use super::{AhpError, ComparisonMatrix, PriorityVector};

pub const RESIDUAL_TOLERANCE: f64 = 1e-10;
pub const MAX_ITERATIONS: usize = 1000;

/// Average random consistency index for n = 1..=10.
const ACI: [f64; 10] = [0.00, 0.00, 0.58, 0.90, 1.12, 1.24, 1.32, 1.41, 1.45, 1.49];
/// Saaty's published values for n = 11..=15, only used with `extended_aci`.
const ACI_EXTENDED: [f64; 5] = [1.51, 1.48, 1.56, 1.57, 1.59];

#[derive(Debug, Clone, PartialEq)]
pub struct Eigenpair {
    pub lambda_max: f64,
    pub vector: PriorityVector,
    pub iterations: usize,
    pub residual: f64,
}

/// Perron root and its eigenvector (unit sum) by power iteration from the
/// uniform vector. Stops when `‖Mv − λv‖∞ ≤ RESIDUAL_TOLERANCE`.
pub fn principal_eigenpair(m: &ComparisonMatrix) -> Result<Eigenpair, AhpError> {
    let n = m.order();
    let mut v = vec![1.0 / n as f64; n];
    let mut residual = f64::INFINITY;
    for iterations in 1..=MAX_ITERATIONS {
        let w = m.mul_vec(&v);
        // v sums to 1, so sum(Mv) is the eigenvalue estimate
        let lambda: f64 = w.iter().sum();
        residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - lambda * vi).abs())
            .fold(0.0, f64::max);
        if residual <= RESIDUAL_TOLERANCE {
            return Ok(Eigenpair {
                lambda_max: lambda,
                vector: PriorityVector::normalized(v).expect("positive iterate"),
                iterations,
                residual,
            });
        }
        if !lambda.is_finite() || lambda <= 0.0 {
            break;
        }
        v = w.into_iter().map(|x| x / lambda).collect();
    }
    Err(AhpError::NoConvergence {
        iterations: MAX_ITERATIONS,
        residual,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ConsistencyOptions {
    /// Allow the random-index table to extend to n = 15.
    pub extended_aci: bool,
    /// RC percentage above which judgments are flagged.
    pub threshold_pct: f64,
}

impl Default for ConsistencyOptions {
    fn default() -> Self {
        ConsistencyOptions {
            extended_aci: false,
            threshold_pct: 10.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConsistencyReport {
    pub n: usize,
    pub lambda_max: f64,
    /// Consistency index (IC).
    pub ci: f64,
    /// Average random index the ratio is taken against.
    pub aci: f64,
    /// Consistency ratio (RC), in percent.
    pub cr: f64,
    pub acceptable: bool,
}

/// Random consistency index for order `n`.
pub fn aci(n: usize, extended: bool) -> Result<f64, AhpError> {
    match n {
        1..=10 => Ok(ACI[n - 1]),
        11..=15 if extended => Ok(ACI_EXTENDED[n - 11]),
        _ => Err(AhpError::AciUnavailable(n, if extended { 15 } else { 10 })),
    }
}

pub fn consistency(m: &ComparisonMatrix) -> Result<ConsistencyReport, AhpError> {
    consistency_with(m, ConsistencyOptions::default())
}

/// IC, RC and the acceptability flag. Orders 1 and 2 are consistent by definition.
pub fn consistency_with(
    m: &ComparisonMatrix,
    opts: ConsistencyOptions,
) -> Result<ConsistencyReport, AhpError> {
    let n = m.order();
    let aci = aci(n, opts.extended_aci)?;
    let pair = principal_eigenpair(m)?;
    let (ci, cr) = if n <= 2 {
        (0.0, 0.0)
    } else {
        let ci = (pair.lambda_max - n as f64) / (n as f64 - 1.0);
        (ci, 100.0 * ci / aci)
    };
    Ok(ConsistencyReport {
        n,
        lambda_max: pair.lambda_max,
        ci,
        aci,
        cr,
        acceptable: cr <= opts.threshold_pct,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn criteria() -> ComparisonMatrix {
        ComparisonMatrix::parse("3\n1 1/2 3\n2 1 4\n1/3 1/4 1\n").unwrap()
    }

    #[test]
    fn criteria_matrix_eigenpair() {
        let e = principal_eigenpair(&criteria()).unwrap();
        assert!((e.lambda_max - 3.0183).abs() < 5e-4, "{}", e.lambda_max);
        for (got, want) in e.vector.weights().iter().zip([0.3196, 0.5584, 0.1220]) {
            assert!((got - want).abs() < 5e-4);
        }
        assert!(e.residual <= RESIDUAL_TOLERANCE);
    }

    #[test]
    fn uniform_matrix() {
        for n in 1..=9 {
            let m = ComparisonMatrix::new(vec![vec![1.0; n]; n]).unwrap();
            let e = principal_eigenpair(&m).unwrap();
            assert!((e.lambda_max - n as f64).abs() < 1e-12);
            assert!(e
                .vector
                .weights()
                .iter()
                .all(|w| (w - 1.0 / n as f64).abs() < 1e-12));
        }
    }

    #[test]
    fn consistent_construction_recovers_generator() {
        let m = ComparisonMatrix::from_weights(&[0.6, 0.3, 0.1]).unwrap();
        let e = principal_eigenpair(&m).unwrap();
        assert!((e.lambda_max - 3.0).abs() < 1e-8);
        for (got, want) in e.vector.weights().iter().zip([0.6, 0.3, 0.1]) {
            assert!((got - want).abs() < 1e-8);
        }
        let c = consistency(&m).unwrap();
        assert!(c.ci.abs() < 1e-9 && c.cr.abs() < 1e-9 && c.acceptable);
    }

    #[test]
    fn criteria_consistency() {
        let c = consistency(&criteria()).unwrap();
        assert!((c.ci - 0.0092).abs() < 1e-4);
        assert!((c.cr - 1.6).abs() < 0.1);
        assert_eq!(c.aci, 0.58);
        assert!(c.acceptable);
    }

    #[test]
    fn quality_matrix_flags_inconsistency() {
        let m =
            ComparisonMatrix::parse("4\n1 1/4 4 1/6\n4 1 4 1/4\n1/4 1/4 1 1/5\n6 4 5 1\n").unwrap();
        let c = consistency(&m).unwrap();
        assert!((c.lambda_max - 4.4347).abs() < 5e-4);
        assert!((c.ci - 0.1449).abs() < 1e-4);
        assert!((c.cr - 16.1).abs() < 0.1);
        assert!(!c.acceptable);
    }

    #[test]
    fn small_orders_are_consistent() {
        let m = ComparisonMatrix::from_upper(2, &[7.0]).unwrap();
        let c = consistency(&m).unwrap();
        assert_eq!((c.ci, c.cr, c.acceptable), (0.0, 0.0, true));
        let one = ComparisonMatrix::new(vec![vec![1.0]]).unwrap();
        assert_eq!(consistency(&one).unwrap().cr, 0.0);
    }

    #[test]
    fn aci_table_limits() {
        assert_eq!(aci(10, false).unwrap(), 1.49);
        assert_eq!(aci(11, false), Err(AhpError::AciUnavailable(11, 10)));
        assert_eq!(aci(15, true).unwrap(), 1.59);
        assert!(aci(16, true).is_err());
        let m = ComparisonMatrix::new(vec![vec![1.0; 12]; 12]).unwrap();
        assert!(consistency(&m).is_err());
        let opts = ConsistencyOptions {
            extended_aci: true,
            ..Default::default()
        };
        assert!(consistency_with(&m, opts).unwrap().acceptable);
    }
}
