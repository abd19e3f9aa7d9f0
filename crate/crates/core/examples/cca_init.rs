//! Canonical correlation starting point for the transforms.
//!
//! CCA pins the transforms down only up to an invertible change of latent
//! coordinates, so the check here is the loading identity `A·L̂ = I` rather
//! than a distance to the simulated truth.

use latentgraph::init::{canonical_correlations, cca_init, cca_init_aggregate};
use latentgraph::synth::{simulate, GraphKind, NoiseModel, SyntheticSpec};
use nalgebra::DMatrix;

fn main() -> latentgraph::Result<()> {
    let spec = SyntheticSpec::new(GraphKind::G2, 10, 3, vec![4, 4], NoiseModel::NM1 { sigma: 0.05 }, 2000, 3);
    let (data, _) = simulate(&spec)?;

    // three strong correlations, then the noise dimension
    let rho = canonical_correlations(&data, 0)?;
    println!("canonical correlations at node 0: {rho:.3?}");

    for (name, init) in [("node 0", cca_init(&data, spec.r, 0)?), ("pooled", cca_init_aggregate(&data, spec.r)?)] {
        for m in 0..2 {
            let a = &init.a_mats[m];
            let resid = (a * init.decomposition.loading(m) - DMatrix::identity(spec.r, spec.r)).amax();
            println!("{name}: A^{} is {}x{}, max |A L - I| = {resid:.1e}", m + 1, a.nrows(), a.ncols());
        }
    }
    Ok(())
}
