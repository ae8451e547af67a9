//! Inner problems, value iteration and the non-measuring worst case.

mod inner;
mod matrix_game;
mod nomeasure;
mod value_iteration;

pub use inner::{inner_best_expectation, inner_worst_expectation, Direction, WorstCaseRow};
pub use matrix_game::{solve_min_max, GameSolution};
pub use nomeasure::{
    robust_belief_update, worst_case_transition_nomeasure, NoMeasureSolution, RESPONSE_TIE_TOL,
};
pub use value_iteration::{
    point_value_iteration, value_iteration, Backup, QTable, QVariant, Solution, SolveOptions,
};
