//! Choose latent dimensions by elbow rules, then tune the sparsity settings
//! by cross-validated BIC.

use latentgraph::init::InitMethod;
use latentgraph::model::FitConfig;
use latentgraph::selection::{elbow_k, elbow_k_m, select_params, CvOptions, Grid};
use latentgraph::synth::{simulate, GraphKind, NoiseModel, SyntheticSpec};

fn main() -> latentgraph::Result<()> {
    let spec = SyntheticSpec::new(GraphKind::G1, 6, 2, vec![3, 3], NoiseModel::NM1 { sigma: 0.05 }, 300, 11);
    let (data, _) = simulate(&spec)?;

    println!("elbow k_m over 1..=3: {:?}", elbow_k_m(&data, &[1, 2, 3])?);
    let k = elbow_k(&data, 3)?;
    println!("elbow k: {k}");

    let grid = Grid { s: vec![1, 2, 3], alpha: vec![1.0], tau1: vec![0.25], tau2: vec![100.0] };
    let opts = CvOptions {
        k,
        folds: 3,
        seed: 0,
        init: InitMethod::Cca,
        base: FitConfig { max_iter_main: 100, ..FitConfig::default() },
    };
    let chosen = select_params(&data, &grid, &opts)?;
    for (pt, score) in &chosen.scores {
        println!("s = {}: mean BIC {:?}", pt.s, score);
    }
    println!("chosen s = {}", chosen.point.s);
    Ok(())
}
