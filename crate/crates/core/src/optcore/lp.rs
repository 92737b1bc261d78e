use std::fmt::Write as _;

use microlp::{ComparisonOp, OptimizationDirection, Problem};

use crate::error::{Error, Result};

/// Absolute feasibility tolerance (scaled by row magnitude) for LP solutions.
pub const FEAS_TOL: f64 = 1e-7;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Relation {
    Le,
    Eq,
    Ge,
}

impl Relation {
    fn symbol(self) -> &'static str {
        match self {
            Relation::Le => "<=",
            Relation::Eq => "=",
            Relation::Ge => ">=",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Constraint {
    pub terms: Vec<(usize, f64)>,
    pub relation: Relation,
    pub rhs: f64,
}

impl Constraint {
    pub fn activity(&self, values: &[f64]) -> f64 {
        self.terms.iter().map(|(j, a)| a * values[*j]).sum()
    }

    /// Amount by which `values` violates the row, relative to its magnitude.
    pub fn scaled_violation(&self, values: &[f64]) -> f64 {
        let act = self.activity(values);
        let scale = 1.0
            + self.rhs.abs()
            + self
                .terms
                .iter()
                .map(|(j, a)| (a * values[*j]).abs())
                .fold(0.0, f64::max);
        let raw = match self.relation {
            Relation::Le => act - self.rhs,
            Relation::Ge => self.rhs - act,
            Relation::Eq => (act - self.rhs).abs(),
        };
        raw.max(0.0) / scale
    }
}

/// A maximization LP over bounded or free variables.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct LinearProgram {
    var_bounds: Vec<(f64, f64)>,
    objective: Vec<f64>,
    constraints: Vec<Constraint>,
}

impl LinearProgram {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds a variable with bounds `[lb, ub]` (infinite sides allowed) and
    /// objective coefficient `obj`; returns its index.
    pub fn add_var(&mut self, lb: f64, ub: f64, obj: f64) -> usize {
        self.var_bounds.push((lb, ub));
        self.objective.push(obj);
        self.var_bounds.len() - 1
    }

    pub fn add_constraint(
        &mut self,
        terms: impl IntoIterator<Item = (usize, f64)>,
        relation: Relation,
        rhs: f64,
    ) {
        let mut merged: Vec<(usize, f64)> = Vec::new();
        for (j, a) in terms {
            match merged.iter_mut().find(|(k, _)| *k == j) {
                Some((_, c)) => *c += a,
                None => merged.push((j, a)),
            }
        }
        merged.retain(|(_, a)| *a != 0.0);
        self.constraints.push(Constraint {
            terms: merged,
            relation,
            rhs,
        });
    }

    pub fn set_objective(&mut self, var: usize, coeff: f64) {
        self.objective[var] = coeff;
    }

    pub fn set_bounds(&mut self, var: usize, lb: f64, ub: f64) {
        self.var_bounds[var] = (lb, ub);
    }

    pub fn num_vars(&self) -> usize {
        self.var_bounds.len()
    }

    pub fn var_bounds(&self) -> &[(f64, f64)] {
        &self.var_bounds
    }

    pub fn objective(&self) -> &[f64] {
        &self.objective
    }

    pub fn constraints(&self) -> &[Constraint] {
        &self.constraints
    }

    pub fn objective_value(&self, values: &[f64]) -> f64 {
        self.objective.iter().zip(values).map(|(c, v)| c * v).sum()
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.num_vars();
        for (j, (lb, ub)) in self.var_bounds.iter().enumerate() {
            if lb.is_nan() || ub.is_nan() || lb > ub {
                return Err(Error::InvalidModel(format!(
                    "variable {j} has bounds [{lb}, {ub}]"
                )));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidModel(
                "non-finite objective coefficient".into(),
            ));
        }
        for (r, c) in self.constraints.iter().enumerate() {
            if !c.rhs.is_finite() {
                return Err(Error::InvalidModel(format!("row {r} has rhs {}", c.rhs)));
            }
            for (j, a) in &c.terms {
                if *j >= n {
                    return Err(Error::InvalidModel(format!(
                        "row {r} references variable {j} of {n}"
                    )));
                }
                if !a.is_finite() {
                    return Err(Error::InvalidModel(format!("row {r} has coefficient {a}")));
                }
            }
        }
        Ok(())
    }

    /// Largest scaled violation of any bound or row.
    pub fn max_violation(&self, values: &[f64]) -> f64 {
        self.max_violation_with(&self.var_bounds, values)
    }

    pub(crate) fn max_violation_with(&self, bounds: &[(f64, f64)], values: &[f64]) -> f64 {
        let bounds = bounds
            .iter()
            .zip(values)
            .map(|((lb, ub), v)| {
                let scale = 1.0 + v.abs();
                ((lb - v).max(v - ub)).max(0.0) / scale
            })
            .fold(0.0, f64::max);
        self.constraints
            .iter()
            .map(|c| c.scaled_violation(values))
            .fold(bounds, f64::max)
    }

    /// CPLEX LP-format text, for cross-checking with external solvers.
    pub fn to_lp_format(&self, integer_vars: &[usize], name: &dyn Fn(usize) -> String) -> String {
        let mut out = String::new();
        let term_list = |terms: &mut dyn Iterator<Item = (usize, f64)>| -> String {
            let mut s = String::new();
            for (j, a) in terms {
                let sign = if a < 0.0 { "-" } else { "+" };
                let _ = write!(s, " {sign} {} {}", a.abs(), name(j));
            }
            if s.is_empty() {
                s.push_str(" 0");
            }
            s
        };
        let _ = writeln!(out, "Maximize");
        let mut obj = self
            .objective
            .iter()
            .enumerate()
            .filter(|(_, c)| **c != 0.0)
            .map(|(j, c)| (j, *c));
        let _ = writeln!(out, " obj:{}", term_list(&mut obj));
        let _ = writeln!(out, "Subject To");
        for (r, c) in self.constraints.iter().enumerate() {
            let mut it = c.terms.iter().copied();
            let _ = writeln!(
                out,
                " c{r}:{} {} {}",
                term_list(&mut it),
                c.relation.symbol(),
                c.rhs
            );
        }
        let _ = writeln!(out, "Bounds");
        for (j, (lb, ub)) in self.var_bounds.iter().enumerate() {
            let n = name(j);
            match (lb.is_finite(), ub.is_finite()) {
                (false, false) => {
                    let _ = writeln!(out, " {n} free");
                }
                (true, true) => {
                    let _ = writeln!(out, " {lb} <= {n} <= {ub}");
                }
                (true, false) => {
                    let _ = writeln!(out, " {n} >= {lb}");
                }
                (false, true) => {
                    let _ = writeln!(out, " -inf <= {n} <= {ub}");
                }
            }
        }
        if !integer_vars.is_empty() {
            let _ = writeln!(out, "Binaries");
            for j in integer_vars {
                let _ = writeln!(out, " {}", name(*j));
            }
        }
        let _ = writeln!(out, "End");
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LpStatus {
    Optimal,
    Infeasible,
    Unbounded,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub status: LpStatus,
    /// Empty unless `status` is optimal.
    pub values: Vec<f64>,
    pub objective: f64,
}

/// Solves the LP with per-variable bound overrides applied on top of the
/// program's own bounds.
pub(crate) fn solve_with_bounds(lp: &LinearProgram, bounds: &[(f64, f64)]) -> Result<LpSolution> {
    let mut problem = Problem::new(OptimizationDirection::Maximize);
    let vars: Vec<_> = bounds
        .iter()
        .zip(&lp.objective)
        .map(|(b, c)| problem.add_var(*c, *b))
        .collect();
    for c in &lp.constraints {
        let op = match c.relation {
            Relation::Le => ComparisonOp::Le,
            Relation::Eq => ComparisonOp::Eq,
            Relation::Ge => ComparisonOp::Ge,
        };
        if c.terms.is_empty() {
            let ok = match c.relation {
                Relation::Le => 0.0 <= c.rhs + FEAS_TOL,
                Relation::Ge => 0.0 >= c.rhs - FEAS_TOL,
                Relation::Eq => c.rhs.abs() <= FEAS_TOL,
            };
            if !ok {
                return Ok(infeasible());
            }
            continue;
        }
        problem.add_constraint(
            c.terms
                .iter()
                .map(|(j, a)| (vars[*j], *a))
                .collect::<Vec<_>>(),
            op,
            c.rhs,
        );
    }
    let outcome = match problem.solve() {
        Ok(outcome) => outcome,
        Err(microlp::Error::Infeasible) => return Ok(infeasible()),
        Err(microlp::Error::Unbounded) => {
            return Ok(LpSolution {
                status: LpStatus::Unbounded,
                values: Vec::new(),
                objective: f64::INFINITY,
            })
        }
        Err(e) => return Err(Error::Numerical(e.to_string())),
    };
    let solution = outcome
        .solution()
        .ok_or_else(|| Error::Numerical("LP solve interrupted".into()))?;
    let values: Vec<f64> = vars.iter().map(|v| solution.var_value_raw(*v)).collect();

    let violation = lp.max_violation_with(bounds, &values);
    if violation.is_nan() || violation > FEAS_TOL {
        return Err(Error::Numerical(format!(
            "reported optimum violates feasibility by {violation:e}"
        )));
    }
    Ok(LpSolution {
        status: LpStatus::Optimal,
        objective: lp.objective_value(&values),
        values,
    })
}

fn infeasible() -> LpSolution {
    LpSolution {
        status: LpStatus::Infeasible,
        values: Vec::new(),
        objective: f64::NEG_INFINITY,
    }
}

/// Solves a maximization LP.
///
/// Optimal solutions are re-checked against every bound and row; a solution
/// that fails the check is reported as [`Error::Numerical`] rather than as
/// optimal.
pub fn solve_lp(lp: &LinearProgram) -> Result<LpSolution> {
    lp.validate()?;
    solve_with_bounds(lp, &lp.var_bounds)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_bounded_variable() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, f64::INFINITY, 1.0);
        lp.add_constraint([(x, 1.0)], Relation::Le, 1.0);
        let s = solve_lp(&lp).unwrap();
        assert_eq!(s.status, LpStatus::Optimal);
        assert!((s.values[x] - 1.0).abs() < 1e-9);
        assert!((s.objective - 1.0).abs() < 1e-9);
    }

    #[test]
    fn two_variables_sharing_a_row() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, 1.0, 1.0);
        let y = lp.add_var(0.0, 1.0, 1.0);
        lp.add_constraint([(x, 1.0), (y, 1.0)], Relation::Le, 1.5);
        let s = solve_lp(&lp).unwrap();
        assert!((s.objective - 1.5).abs() < 1e-9);
    }

    #[test]
    fn contradictory_rows_are_infeasible() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 1.0);
        lp.add_constraint([(x, 1.0)], Relation::Ge, 2.0);
        lp.add_constraint([(x, 1.0)], Relation::Le, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn unbounded_ray() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, f64::INFINITY, 1.0);
        lp.add_constraint([(x, -1.0)], Relation::Le, 0.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Unbounded);
    }

    #[test]
    fn duplicate_terms_are_merged() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, 10.0, 1.0);
        lp.add_constraint([(x, 1.0), (x, 1.0)], Relation::Le, 3.0);
        let s = solve_lp(&lp).unwrap();
        assert!((s.values[x] - 1.5).abs() < 1e-9);
    }

    #[test]
    fn empty_rows() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, 1.0, 1.0);
        lp.add_constraint([(x, 0.0)], Relation::Le, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Optimal);
        lp.add_constraint([], Relation::Ge, 1.0);
        assert_eq!(solve_lp(&lp).unwrap().status, LpStatus::Infeasible);
    }

    #[test]
    fn malformed_programs_are_rejected() {
        let mut lp = LinearProgram::new();
        lp.add_var(1.0, 0.0, 0.0);
        assert!(matches!(solve_lp(&lp), Err(Error::InvalidModel(_))));

        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, 1.0, 0.0);
        lp.add_constraint([(x + 1, 1.0)], Relation::Le, 1.0);
        assert!(matches!(solve_lp(&lp), Err(Error::InvalidModel(_))));

        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, 1.0, 0.0);
        lp.add_constraint([(x, 1.0)], Relation::Le, f64::NAN);
        assert!(matches!(solve_lp(&lp), Err(Error::InvalidModel(_))));
    }

    #[test]
    fn lp_format_lists_sections() {
        let mut lp = LinearProgram::new();
        let x = lp.add_var(0.0, 1.0, 3.0);
        let y = lp.add_var(f64::NEG_INFINITY, f64::INFINITY, 0.0);
        lp.add_constraint([(x, 1.0), (y, -2.0)], Relation::Eq, 0.5);
        let text = lp.to_lp_format(&[x], &|j| format!("v{j}"));
        assert!(text.starts_with("Maximize\n obj: + 3 v0\n"));
        assert!(text.contains(" c0: + 1 v0 - 2 v1 = 0.5\n"));
        assert!(text.contains(" v1 free\n"));
        assert!(text.contains("Binaries\n v0\nEnd\n"));
    }
}
