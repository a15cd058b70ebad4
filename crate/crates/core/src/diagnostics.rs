//! Per-jump statistics over batches of recorded trajectories.

use thiserror::Error;

use crate::dynamics::{SimResult, Trigger};

#[derive(Debug, Error, PartialEq)]
pub enum DiagnosticsError {
    #[error("trajectory {0} was simulated without jump records")]
    MissingRecords(usize),
    #[error("jump index must be at least 1")]
    ZeroIndex,
    #[error("only {have} trajectories reach jump {h}; at least 2 are needed")]
    InsufficientData { h: u64, have: usize },
}

/// Statistics of the `h`-th jump across trajectories.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpDiagnostics {
    pub h: u64,
    /// Mean of `B_{h-1} (T_h - T_{h-1}) + c_h` over runs with `B_{h-1} > 0`.
    pub mean_identity: f64,
    pub stderr_identity: f64,
    pub identity_samples: usize,
    /// Fraction of runs whose `h`-th jump was triggered by the control.
    pub control_fraction: f64,
    /// Mean of `c_h`.
    pub mean_c: f64,
    pub stderr_c: f64,
    /// Runs that reached jump `h`.
    pub samples: usize,
}

fn mean_stderr(values: &[f64]) -> (f64, f64) {
    let n = values.len();
    if n == 0 {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    if n < 2 {
        return (mean, f64::NAN);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
    (mean, (var / n as f64).sqrt())
}

/// Collects jump `h` (1-based) from every trajectory that reached it.
pub fn jump_diagnostics(results: &[SimResult], h: u64) -> Result<JumpDiagnostics, DiagnosticsError> {
    if h == 0 {
        return Err(DiagnosticsError::ZeroIndex);
    }
    let mut identity = Vec::new();
    let mut c = Vec::new();
    let mut control = 0usize;
    for (k, r) in results.iter().enumerate() {
        let jumps = r.jumps.as_ref().ok_or(DiagnosticsError::MissingRecords(k))?;
        let Some(j) = jumps.get((h - 1) as usize) else { continue };
        if j.boundary_before > 0.0 {
            identity.push(j.boundary_before * j.hold + j.effective_control);
        }
        c.push(j.effective_control);
        if j.trigger == Trigger::Control {
            control += 1;
        }
    }
    if c.len() < 2 {
        return Err(DiagnosticsError::InsufficientData { h, have: c.len() });
    }
    let (mean_identity, stderr_identity) = mean_stderr(&identity);
    let (mean_c, stderr_c) = mean_stderr(&c);
    Ok(JumpDiagnostics {
        h,
        mean_identity,
        stderr_identity,
        identity_samples: identity.len(),
        control_fraction: control as f64 / c.len() as f64,
        mean_c,
        stderr_c,
        samples: c.len(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::control::{ControlPolicy, ControlVector};
    use crate::dynamics::{simulate, SimOptions};
    use crate::graph::Graph;
    use crate::rng::stream;

    fn runs(g: &Graph, policy: &ControlPolicy, x0: &[bool], reps: u64) -> Vec<SimResult> {
        (0..reps)
            .map(|i| simulate(g, 1.0, policy, x0, &mut stream(11, i), SimOptions::recording()).unwrap())
            .collect()
    }

    #[test]
    fn first_jump_is_always_control() {
        let g = Graph::complete(6, 1.0).unwrap();
        let p = ControlPolicy::constant(ControlVector::delta(0, 1.0).unwrap());
        let rs = runs(&g, &p, &[false; 6], 4000);
        let d = jump_diagnostics(&rs, 1).unwrap();
        assert_eq!(d.control_fraction, 1.0);
        assert_eq!(d.identity_samples, 0);
        assert!((d.mean_c - 1.0).abs() < 3.0 * d.stderr_c);
    }

    #[test]
    fn uncontrolled_runs_have_zero_c() {
        let g = Graph::ring(8, 1.0).unwrap();
        let p = ControlPolicy::constant(ControlVector::zero());
        let mut x0 = vec![false; 8];
        x0[3] = true;
        let rs = runs(&g, &p, &x0, 4000);
        for h in 1..=7 {
            let d = jump_diagnostics(&rs, h).unwrap();
            assert_eq!(d.mean_c, 0.0);
            assert_eq!(d.control_fraction, 0.0);
            assert!((d.mean_identity - 1.0).abs() < 3.5 * d.stderr_identity, "h={h}: {d:?}");
        }
    }

    #[test]
    fn errors() {
        let g = Graph::complete(3, 1.0).unwrap();
        let p = ControlPolicy::constant(ControlVector::delta(0, 1.0).unwrap());
        let plain = simulate(&g, 1.0, &p, &[false; 3], &mut stream(0, 0), SimOptions::default()).unwrap();
        assert_eq!(jump_diagnostics(&[plain], 1), Err(DiagnosticsError::MissingRecords(0)));
        let rs = runs(&g, &p, &[false; 3], 5);
        assert_eq!(jump_diagnostics(&rs, 0), Err(DiagnosticsError::ZeroIndex));
        assert!(matches!(jump_diagnostics(&rs, 4), Err(DiagnosticsError::InsufficientData { .. })));
    }
}
