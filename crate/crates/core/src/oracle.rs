//! Exact reference solver for small instances.
//!
//! Enumerates subsets of actions and keeps the lexicographic minimum of the
//! objective. Ties go to the subset with fewer actions, then to the
//! lexicographically smaller list of action ids. Branch-and-bound pruning only
//! cuts a branch whose optimistic bound is strictly worse than the incumbent,
//! so it returns exactly what plain enumeration returns.

use alloc::collections::BTreeSet;
use alloc::vec;
use alloc::vec::Vec;
use core::cmp::Ordering;

use num_rational::Ratio;

use crate::amas::SolverResult;
use crate::config::{Configuration, Objective};
use crate::cost::Cost;
use crate::model::{FmecaModel, ModelError};
use crate::problem::Problem;

pub const DEFAULT_LIMIT: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct OracleOptions {
    /// Largest number of actions accepted.
    pub limit: usize,
    pub prune: bool,
}

impl Default for OracleOptions {
    fn default() -> Self {
        OracleOptions {
            limit: DEFAULT_LIMIT,
            prune: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OracleError {
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("instance has {actions} actions, above the enumeration limit of {limit}")]
    TooLarge { actions: usize, limit: usize },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OracleResult {
    /// Lexicographic optimum, budget ignored.
    pub optimal: Configuration,
    pub optimal_objective: Objective,
    /// Some configuration meets every threshold within budget.
    pub feasible_exists: bool,
    /// Lexicographic optimum among configurations with total cost within budget.
    pub best_within_budget: Option<(Configuration, Objective)>,
    /// Subsets evaluated; `2^n` without pruning. With pruning, the overall and
    /// within-budget searches are counted together.
    pub enumerated_count: u64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Candidate {
    objective: Objective,
    /// Positions in id order, ascending.
    ranks: Vec<usize>,
}

impl Candidate {
    fn cmp_canonical(&self, other: &Candidate) -> Ordering {
        self.objective
            .cmp(&other.objective)
            .then_with(|| self.ranks.len().cmp(&other.ranks.len()))
            .then_with(|| self.ranks.cmp(&other.ranks))
    }
}

fn offer(slot: &mut Option<Candidate>, candidate: Candidate) {
    if slot
        .as_ref()
        .is_none_or(|best| candidate.cmp_canonical(best) == Ordering::Less)
    {
        *slot = Some(candidate);
    }
}

struct Search<'p> {
    problem: &'p Problem,
    /// `order[r]` is the action with the r-th smallest id.
    order: Vec<usize>,
    /// `suffix[r][g]`: summed deltas of actions `order[r..]` on failure mode g.
    suffix: Vec<Vec<[u32; 3]>>,
    budget: Cost,
    prune: bool,
    /// Only configurations within budget count.
    budget_only: bool,
    best: Option<Candidate>,
    evaluated: u64,
    chosen: Vec<usize>,
    totals: Vec<[u32; 3]>,
}

impl<'p> Search<'p> {
    fn new(problem: &'p Problem, prune: bool, budget_only: bool) -> Self {
        let mut order: Vec<usize> = (0..problem.action_count()).collect();
        order.sort_by(|&a, &b| problem.action_id(a).cmp(problem.action_id(b)));
        let fm_count = problem.failure_mode_count();
        let mut suffix = vec![vec![[0u32; 3]; fm_count]; order.len() + 1];
        for r in (0..order.len()).rev() {
            let mut next = suffix[r + 1].clone();
            for (g, d) in &problem.actions[order[r]].effects {
                for k in 0..3 {
                    next[*g][k] += d[k];
                }
            }
            suffix[r] = next;
        }
        Search {
            problem,
            order,
            suffix,
            budget: problem.budget(),
            prune,
            budget_only,
            best: None,
            evaluated: 0,
            chosen: Vec::new(),
            totals: vec![[0u32; 3]; fm_count],
        }
    }

    fn safety(&self, extra: Option<&[[u32; 3]]>) -> (u32, u64) {
        let mut violations = 0;
        let mut excess = 0;
        for (g, t) in self.totals.iter().enumerate() {
            let mut t = *t;
            if let Some(extra) = extra {
                for k in 0..3 {
                    t[k] += extra[g][k];
                }
            }
            let residual = self.problem.residual_from_totals(g, t);
            let threshold = self.problem.threshold(g);
            if residual > threshold {
                violations += 1;
                excess += u64::from(residual - threshold);
            }
        }
        (violations, excess)
    }

    fn apply(&mut self, action: usize, sign_add: bool) {
        for (g, d) in &self.problem.actions[action].effects {
            for (total, delta) in self.totals[*g].iter_mut().zip(d) {
                if sign_add {
                    *total += delta;
                } else {
                    *total -= delta;
                }
            }
        }
    }

    fn visit(&mut self, r: usize, cost: Cost) {
        if self.budget_only && self.prune && cost > self.budget {
            return;
        }
        if self.prune {
            if let Some(best) = &self.best {
                let (violations, excess) = self.safety(Some(&self.suffix[r]));
                let bound = Objective {
                    violations,
                    excess,
                    cost,
                };
                if bound > best.objective {
                    return;
                }
            }
        }
        if r == self.order.len() {
            self.evaluated += 1;
            if self.budget_only && cost > self.budget {
                return;
            }
            let (violations, excess) = self.safety(None);
            let candidate = Candidate {
                objective: Objective {
                    violations,
                    excess,
                    cost,
                },
                ranks: self.chosen.clone(),
            };
            offer(&mut self.best, candidate);
            return;
        }
        let action = self.order[r];
        // Include first: safe incumbents show up early and tighten the bound.
        self.chosen.push(r);
        self.apply(action, true);
        self.visit(r + 1, cost + self.problem.action_cost(action));
        self.apply(action, false);
        self.chosen.pop();
        self.visit(r + 1, cost);
    }
}

/// Plain enumeration computing both optima in one pass.
fn enumerate_all(problem: &Problem) -> (Option<Candidate>, Option<Candidate>, u64, Vec<usize>) {
    let mut search = Search::new(problem, false, false);
    let mut within: Option<Candidate> = None;
    let n = search.order.len();
    // Gray-code walk: one action toggles per step.
    let mut mask = vec![false; n];
    let mut cost = Cost::ZERO;
    let total = 1u64 << n;
    for i in 0..total {
        if i > 0 {
            let bit = i.trailing_zeros() as usize;
            mask[bit] = !mask[bit];
            let action = search.order[bit];
            search.apply(action, mask[bit]);
            if mask[bit] {
                cost += problem.action_cost(action);
            } else {
                cost = cost - problem.action_cost(action);
            }
        }
        let (violations, excess) = search.safety(None);
        let candidate = Candidate {
            objective: Objective {
                violations,
                excess,
                cost,
            },
            ranks: (0..n).filter(|&r| mask[r]).collect(),
        };
        if cost <= search.budget {
            offer(&mut within, candidate.clone());
        }
        offer(&mut search.best, candidate);
    }
    (search.best, within, total, search.order)
}

/// Exact lexicographic optimum of `model`.
pub fn exact_best(model: &FmecaModel, options: OracleOptions) -> Result<OracleResult, OracleError> {
    let problem = Problem::compile(model)?;
    exact_best_compiled(model, &problem, options)
}

pub fn exact_best_compiled(
    model: &FmecaModel,
    problem: &Problem,
    options: OracleOptions,
) -> Result<OracleResult, OracleError> {
    let n = problem.action_count();
    if n > options.limit || n >= 63 {
        return Err(OracleError::TooLarge {
            actions: n,
            limit: options.limit,
        });
    }
    let (best, within, evaluated, order) = if options.prune {
        let mut overall = Search::new(problem, true, false);
        overall.visit(0, Cost::ZERO);
        let mut budgeted = Search::new(problem, true, true);
        budgeted.visit(0, Cost::ZERO);
        (
            overall.best,
            budgeted.best,
            overall.evaluated + budgeted.evaluated,
            overall.order,
        )
    } else {
        enumerate_all(problem)
    };
    let to_set = |c: &Candidate| -> BTreeSet<usize> { c.ranks.iter().map(|&r| order[r]).collect() };
    let best = best.expect("the empty selection is always evaluated");
    let best_within_budget = within.map(|c| (problem.configuration(model, &to_set(&c)), c.objective));
    Ok(OracleResult {
        optimal: problem.configuration(model, &to_set(&best)),
        optimal_objective: best.objective,
        feasible_exists: best_within_budget.as_ref().is_some_and(|(_, o)| o.violations == 0),
        best_within_budget,
        enumerated_count: evaluated,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CompareError {
    #[error("solver objective {solver} beats the exact optimum {oracle}")]
    OracleBeaten { solver: Objective, oracle: Objective },
}

/// How far a heuristic result is from the exact optimum.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GapReport {
    pub solver_objective: Objective,
    pub oracle_objective: Objective,
    /// Solver cost minus optimal cost.
    pub cost_gap: Cost,
    /// `cost_gap / optimal cost`; `None` when the optimum is free but the
    /// solver's answer is not.
    pub relative_cost_gap: Option<Ratio<i128>>,
    pub solver_feasible: bool,
    pub oracle_feasible: bool,
    pub feasibility_agreement: bool,
    /// Same objective as the optimum.
    pub optimal: bool,
}

impl GapReport {
    pub fn relative_cost_gap_f64(&self) -> f64 {
        self.relative_cost_gap.map_or(f64::INFINITY, crate::cost::ratio_to_f64)
    }
}

pub fn compare_objectives(
    solver_objective: Objective,
    solver_feasible: bool,
    oracle_objective: Objective,
    oracle_feasible: bool,
) -> Result<GapReport, CompareError> {
    if solver_objective < oracle_objective {
        return Err(CompareError::OracleBeaten {
            solver: solver_objective,
            oracle: oracle_objective,
        });
    }
    let cost_gap = solver_objective.cost - oracle_objective.cost;
    let relative_cost_gap = match cost_gap.checked_div(oracle_objective.cost) {
        Some(r) => Some(r),
        None if cost_gap.is_zero() => Some(Ratio::from_integer(0)),
        None => None,
    };
    Ok(GapReport {
        solver_objective,
        oracle_objective,
        cost_gap,
        relative_cost_gap,
        solver_feasible,
        oracle_feasible,
        feasibility_agreement: solver_feasible == oracle_feasible,
        optimal: solver_objective == oracle_objective,
    })
}

/// Gap between a solver run and the exact optimum of the same model.
pub fn compare(solver: &SolverResult, oracle: &OracleResult) -> Result<GapReport, CompareError> {
    compare_objectives(
        solver.best_objective,
        solver.is_feasible(),
        oracle.optimal_objective,
        oracle.feasible_exists,
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{Deltas, FailureMode, PreventiveAction};
    use crate::rank::{Rank, Scales};
    use alloc::string::{String, ToString};

    fn generator(budget: i64) -> FmecaModel {
        FmecaModel {
            scales: Scales::default(),
            components: Vec::new(),
            failure_modes: vec![FailureMode {
                id: "Failure1".into(),
                component_id: String::new(),
                function: String::new(),
                description: String::new(),
                causes: String::new(),
                effects: String::new(),
                severity: Rank::new(3),
                occurrence: Rank::new(2),
                detectability: Rank::new(1),
                critical_threshold: 2,
                recommended_actions: vec!["A1".into(), "A2".into()],
                alternative_groups: Vec::new(),
            }],
            actions: vec![
                PreventiveAction {
                    id: "A1".into(),
                    description: "Use of robust components".into(),
                    cost: Cost::from(7),
                    mitigations: [("Failure1".to_string(), Deltas::new(0, 1, 0))].into(),
                },
                PreventiveAction {
                    id: "A2".into(),
                    description: "Introduction of hardware redundancy".into(),
                    cost: Cost::from(10),
                    mitigations: [("Failure1".to_string(), Deltas::new(1, 0, 0))].into(),
                },
            ],
            budget: Cost::from(budget),
        }
    }

    fn ids(c: &Configuration) -> Vec<&str> {
        c.selected.iter().map(String::as_str).collect()
    }

    #[test]
    fn generator_needs_both_actions() {
        for prune in [false, true] {
            let r = exact_best(&generator(20), OracleOptions { limit: 20, prune }).unwrap();
            assert_eq!(ids(&r.optimal), ["A1", "A2"]);
            assert_eq!(
                r.optimal_objective,
                Objective {
                    violations: 0,
                    excess: 0,
                    cost: Cost::from(17)
                }
            );
            assert!(r.feasible_exists);
        }
        let r = exact_best(
            &generator(20),
            OracleOptions {
                limit: 20,
                prune: false,
            },
        )
        .unwrap();
        assert_eq!(r.enumerated_count, 4);
    }

    #[test]
    fn tight_budget_has_no_feasible_selection() {
        let r = exact_best(&generator(15), OracleOptions::default()).unwrap();
        assert!(!r.feasible_exists);
        assert_eq!(
            r.optimal_objective,
            Objective {
                violations: 0,
                excess: 0,
                cost: Cost::from(17)
            }
        );
        // Within 15, A1 alone leaves 3*1*1 = 3, closer than A2's 2*2*1 = 4.
        let (within, obj) = r.best_within_budget.unwrap();
        assert_eq!(ids(&within), ["A1"]);
        assert_eq!(
            obj,
            Objective {
                violations: 1,
                excess: 1,
                cost: Cost::from(7)
            }
        );
    }

    #[test]
    fn nothing_to_fix_selects_nothing() {
        let mut model = generator(20);
        model.failure_modes[0].critical_threshold = 6;
        let r = exact_best(&model, OracleOptions::default()).unwrap();
        assert!(r.optimal.selected.is_empty());
        assert_eq!(
            r.optimal_objective,
            Objective {
                violations: 0,
                excess: 0,
                cost: Cost::ZERO
            }
        );
    }

    #[test]
    fn limit_is_enforced() {
        let err = exact_best(&generator(20), OracleOptions { limit: 1, prune: true }).unwrap_err();
        assert_eq!(err, OracleError::TooLarge { actions: 2, limit: 1 });
    }

    #[test]
    fn ties_prefer_fewer_then_smaller_ids() {
        let mut model = generator(100);
        // Both actions now fix the failure alone at the same cost.
        for a in &mut model.actions {
            a.cost = Cost::from(5);
            a.mitigations.insert("Failure1".into(), Deltas::new(2, 0, 0));
        }
        for prune in [false, true] {
            let r = exact_best(&model, OracleOptions { limit: 20, prune }).unwrap();
            assert_eq!(ids(&r.optimal), ["A1"]);
        }
    }

    #[test]
    fn compare_reports_gaps() {
        let opt = Objective {
            violations: 0,
            excess: 0,
            cost: Cost::from(100),
        };
        let worse = Objective {
            violations: 0,
            excess: 0,
            cost: Cost::from(110),
        };
        let gap = compare_objectives(worse, true, opt, true).unwrap();
        assert_eq!(gap.cost_gap, Cost::from(10));
        assert_eq!(gap.relative_cost_gap, Some(Ratio::new(1, 10)));
        assert!(gap.feasibility_agreement && !gap.optimal);

        let same = compare_objectives(opt, true, opt, true).unwrap();
        assert!(same.optimal);
        assert_eq!(same.relative_cost_gap, Some(Ratio::from_integer(0)));

        let beaten = compare_objectives(opt, true, worse, true);
        assert!(matches!(beaten, Err(CompareError::OracleBeaten { .. })));

        let free = Objective {
            violations: 0,
            excess: 0,
            cost: Cost::ZERO,
        };
        let gap = compare_objectives(opt, true, free, true).unwrap();
        assert_eq!(gap.relative_cost_gap, None);
        assert!(gap.relative_cost_gap_f64().is_infinite());
    }
}
