//! Performance profiles: the cumulative distribution of per-problem
//! performance ratios across solvers.

use std::collections::BTreeMap;

use crate::{BenchError, Result, TrialRecord};

/// Profile curve for one solver: the per-instance ratios and the cumulative
/// fraction `rho(tau)` evaluated on a shared tau grid.
#[derive(Debug, Clone)]
pub struct ProfileCurve {
    pub solver: String,
    /// Sorted per-instance performance ratios (infinite for failures).
    pub ratios: Vec<f64>,
    pub taus: Vec<f64>,
    pub rho: Vec<f64>,
}

impl ProfileCurve {
    /// Fraction of instances solved at all (the tau -> infinity limit).
    pub fn success_fraction(&self) -> f64 {
        let finite = self.ratios.iter().filter(|r| r.is_finite()).count();
        finite as f64 / self.ratios.len() as f64
    }
}

fn instance_key(r: &TrialRecord) -> String {
    let coords: Vec<String> = r.start.iter().map(|v| format!("{:x}", v.to_bits())).collect();
    format!("{}|{}|{}", r.problem, coords.join(","), r.seed)
}

/// Build Dolan-More profiles from a complete record matrix.
///
/// Every instance (problem, start, seed) must carry a record for the same
/// solver set. Ratios are `t / min_solvers t`; instances where every solver
/// failed contribute an infinite ratio to all solvers and stay in the
/// denominator.
pub fn performance_profile(records: &[TrialRecord]) -> Result<Vec<ProfileCurve>> {
    if records.is_empty() {
        return Err(BenchError::EmptyRecords);
    }

    // Solver order: first appearance.
    let mut solver_order: Vec<String> = Vec::new();
    for r in records {
        if !solver_order.contains(&r.solver) {
            solver_order.push(r.solver.clone());
        }
    }

    // Group records by instance, keeping insertion order via BTreeMap keys.
    let mut instances: BTreeMap<String, BTreeMap<String, f64>> = BTreeMap::new();
    for r in records {
        let by_solver = instances.entry(instance_key(r)).or_default();
        if by_solver.insert(r.solver.clone(), r.metric).is_some() {
            return Err(BenchError::IncompleteMatrix(format!(
                "duplicate record for solver `{}` on instance `{}`",
                r.solver,
                instance_key(r)
            )));
        }
    }
    for (key, by_solver) in &instances {
        if by_solver.len() != solver_order.len() {
            return Err(BenchError::IncompleteMatrix(format!(
                "instance `{key}` has {} of {} solvers",
                by_solver.len(),
                solver_order.len()
            )));
        }
    }

    let num_instances = instances.len();
    let mut ratios: BTreeMap<String, Vec<f64>> = solver_order
        .iter()
        .map(|s| (s.clone(), Vec::with_capacity(num_instances)))
        .collect();
    for by_solver in instances.values() {
        let best = by_solver
            .values()
            .copied()
            .fold(f64::INFINITY, f64::min);
        for s in &solver_order {
            let t = by_solver[s];
            let r = if t.is_finite() && best.is_finite() {
                t / best
            } else {
                f64::INFINITY
            };
            ratios.get_mut(s).expect("known solver").push(r);
        }
    }

    // Shared evaluation grid: all finite ratios, plus tau = 1.
    let mut taus: Vec<f64> = ratios
        .values()
        .flatten()
        .copied()
        .filter(|r| r.is_finite())
        .collect();
    taus.push(1.0);
    taus.sort_by(|a, b| a.partial_cmp(b).expect("finite taus"));
    taus.dedup();

    Ok(solver_order
        .into_iter()
        .map(|solver| {
            let mut rs = ratios.remove(&solver).expect("known solver");
            rs.sort_by(|a, b| a.partial_cmp(b).unwrap_or(std::cmp::Ordering::Equal));
            let rho = taus
                .iter()
                .map(|&tau| {
                    let count = rs.iter().filter(|&&r| r <= tau).count();
                    count as f64 / num_instances as f64
                })
                .collect();
            ProfileCurve {
                solver,
                ratios: rs,
                taus: taus.clone(),
                rho,
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rec(problem: &str, start: f64, solver: &str, metric: f64) -> TrialRecord {
        TrialRecord {
            problem: problem.into(),
            start: vec![start, 0.0],
            solver: solver.into(),
            success: metric.is_finite(),
            metric,
            reason: if metric.is_finite() { "converged" } else { "max_iter" }.into(),
            grad_norm: 0.0,
            seed: 0,
        }
    }

    #[test]
    fn two_solver_hand_case() {
        let records = vec![rec("p", 0.0, "a", 10.0), rec("p", 0.0, "b", 20.0)];
        let curves = performance_profile(&records).unwrap();
        let a = curves.iter().find(|c| c.solver == "a").unwrap();
        let b = curves.iter().find(|c| c.solver == "b").unwrap();
        assert_eq!(a.ratios, vec![1.0]);
        assert_eq!(b.ratios, vec![2.0]);
        let at = |c: &ProfileCurve, tau: f64| {
            let idx = c.taus.iter().position(|&t| t == tau).unwrap();
            c.rho[idx]
        };
        assert_eq!(at(a, 1.0), 1.0);
        assert_eq!(at(b, 1.0), 0.0);
        assert_eq!(at(b, 2.0), 1.0);
    }

    #[test]
    fn all_failures_profile_is_zero() {
        let records = vec![
            rec("p", 0.0, "a", f64::INFINITY),
            rec("p", 0.0, "b", f64::INFINITY),
            rec("q", 0.0, "a", f64::INFINITY),
            rec("q", 0.0, "b", f64::INFINITY),
        ];
        let curves = performance_profile(&records).unwrap();
        for c in curves {
            assert!(c.rho.iter().all(|&v| v == 0.0));
            assert_eq!(c.success_fraction(), 0.0);
        }
    }

    #[test]
    fn empty_records_rejected() {
        assert!(matches!(
            performance_profile(&[]),
            Err(BenchError::EmptyRecords)
        ));
    }

    #[test]
    fn incomplete_matrix_rejected() {
        let records = vec![
            rec("p", 0.0, "a", 1.0),
            rec("p", 0.0, "b", 2.0),
            rec("q", 0.0, "a", 1.0),
        ];
        assert!(matches!(
            performance_profile(&records),
            Err(BenchError::IncompleteMatrix(_))
        ));
    }

    #[test]
    fn profiles_are_monotone_and_bounded() {
        let records = vec![
            rec("p", 0.0, "a", 3.0),
            rec("p", 0.0, "b", 6.0),
            rec("q", 0.0, "a", f64::INFINITY),
            rec("q", 0.0, "b", 4.0),
            rec("r", 1.0, "a", 5.0),
            rec("r", 1.0, "b", 5.0),
        ];
        for c in performance_profile(&records).unwrap() {
            for w in c.rho.windows(2) {
                assert!(w[1] >= w[0]);
            }
            assert!(c.rho.iter().all(|&v| (0.0..=1.0).contains(&v)));
            assert_eq!(*c.rho.last().unwrap(), c.success_fraction());
        }
    }
}
