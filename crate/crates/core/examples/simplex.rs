use ostb::lp::{solve, LinearProgram, SimplexOptions};

// maximise 3x + 2y  s.t.  x + y + s1 = 4,  x + 3y + s2 = 6,  all >= 0
fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut lp = LinearProgram::new(vec![4.0, 6.0]);
    lp.add_column(3.0, [(0, 1.0), (1, 1.0)])?;
    lp.add_column(2.0, [(0, 1.0), (1, 3.0)])?;
    lp.add_column(0.0, [(0, 1.0)])?;
    lp.add_column(0.0, [(1, 1.0)])?;

    let sol = solve(&lp, &SimplexOptions::default(), None)?;
    println!("x = {:?}", sol.x);
    println!("objective {} after {} pivots", sol.objective, sol.iterations);
    println!("duals {:?}, residual {:.1e}", sol.duals, lp.residual(&sol.x));
    Ok(())
}
