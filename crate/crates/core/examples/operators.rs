//! The projection operators that keep iterates inside the constraint set.

use latentgraph::operators::{
    block_norms, hard_threshold_rc, in_block_constraint_set, project_b, project_row_norms, RowNormBounds,
};
use nalgebra::DMatrix;

fn main() -> latentgraph::Result<()> {
    let k = 2;
    // one node's neighborhood in a 4-node graph: three 2x2 blocks
    let b = DMatrix::from_row_slice(2, 6, &[0.9, 0.1, 0.0, 0.3, 2.0, 0.0, 0.2, 0.8, 0.1, 0.0, 0.0, 1.5]);
    println!("block norms: {:.3?}", block_norms(&b, k));

    let projected = project_b(&b, k, 2, 0.5);
    println!("keep 2 blocks, 1 entry per row and column:{projected:.3}");
    assert!(in_block_constraint_set(&projected, k, 2, 0.5));

    println!("thresholded block:{:.3}", hard_threshold_rc(&b.columns(0, 2).into_owned(), 0.5));

    let a = DMatrix::from_row_slice(2, 3, &[3.0, 4.0, 0.0, 0.0, 0.0, 0.1]);
    let bounds = RowNormBounds { lower: 1.0, upper: 2.0 };
    let clamped = project_row_norms(&a, &bounds);
    let norms: Vec<f64> = clamped.row_iter().map(|r| r.norm()).collect();
    println!("row norms after clamping: {norms:.3?}");
    Ok(())
}
