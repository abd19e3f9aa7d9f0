//! Turn sampled curves into basis scores, and pick the basis size by elbow.

use latentgraph::basis::{design_matrix, elbow_from_curves, project_scores, FourierBasis};
use nalgebra::DMatrix;

fn main() -> latentgraph::Result<()> {
    let t: Vec<f64> = (0..50).map(|j| (j as f64 + 0.5) / 50.0).collect();
    let basis = FourierBasis::unit(12);

    // 20 curves living in the span of the first 5 functions, plus a faint tail
    let coef = DMatrix::from_fn(12, 20, |l, n| {
        let w = ((l * 7 + n * 13) % 11) as f64 / 11.0 - 0.5;
        if l < 5 { w } else { 1e-3 * w }
    });
    let curves = design_matrix(&t, &basis) * &coef;

    let scores = project_scores(&curves, &t, &basis)?;
    println!("max coefficient error: {:.2e}", (scores - &coef).amax());

    let k = elbow_from_curves(&curves, &t, &basis, &[1, 2, 3, 4, 5, 6, 7, 8])?;
    println!("elbow basis size: {k}");
    Ok(())
}
