use coupled_nls::coupled::*;
use coupled_nls::functional::{Component, ModelParams, Problem};
use coupled_nls::grid::Grid;
use coupled_nls::ground::{bracket_ts, solve_ground_state, DescentControls};
use coupled_nls::potential::Potential;

fn main() {
    let pot = Potential::constant(1.0).unwrap();
    let params = ModelParams::new(1, 3.0, 1.0, 1.0, 0.0, pot).unwrap();
    let problem = Problem::new(params, Grid::new(1, 20.0, 511).unwrap()).unwrap();
    let controls = DescentControls { tol: 1e-9, ..DescentControls::default() };
    let first = solve_ground_state(&problem, Component::One, None, &controls).unwrap();
    let second = solve_ground_state(&problem, Component::Two, None, &controls).unwrap();
    let bt = bracket_ts(&problem, &first).unwrap();
    let bs = bracket_ts(&problem, &second).unwrap();
    let grounds = GroundPair { first, second };
    for beta in [0.1, 0.05, 0.01] {
        let prob = problem.at_beta(beta);
        let m = surface_max_m_beta(&prob, &grounds, &bt, &bs);
        let rep = newton_solve_at_beta(&prob, &grounds, &grounds.pair(), &NewtonControls::default()).unwrap();
        println!(
            "beta {beta}: m_beta = {:.15}, I_beta = {:.15}, diff = {:+.3e}, argmax = ({:.6},{:.6}), dist = {:.4e}",
            m.m_beta, rep.energy, m.m_beta - rep.energy, m.at.0, m.at.1, rep.dist_to_ground
        );
    }
}
