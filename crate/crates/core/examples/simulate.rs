//! Draw a synthetic dataset and look at what came out.

use latentgraph::synth::{simulate, GraphKind, NoiseModel, SyntheticSpec};

fn main() -> latentgraph::Result<()> {
    let spec = SyntheticSpec::new(GraphKind::G1, 8, 2, vec![3, 4], NoiseModel::NM1 { sigma: 0.05 }, 200, 7);
    let (data, truth) = simulate(&spec)?;

    println!("p = {}, N = {}, k_m = {:?}", data.p(), data.n_samples(), data.k_m());
    println!("true edges ({}):", truth.edges.edges.len());
    for (i, j) in &truth.edges.edges {
        println!("  {i} -- {j}");
    }

    // same seed, same draw
    let (again, _) = simulate(&spec)?;
    assert_eq!(data, again);
    Ok(())
}
