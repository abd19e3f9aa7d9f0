//! Write scores and fitted parameters to disk and read them back unchanged.

use latentgraph::init::{initialize, InitMethod};
use latentgraph::io::{read_params, read_scores_dir, write_params, write_scores_dir};
use latentgraph::model::FitConfig;
use latentgraph::synth::{simulate, GraphKind, NoiseModel, SyntheticSpec};

fn main() -> latentgraph::Result<()> {
    let spec = SyntheticSpec::new(GraphKind::G4, 10, 2, vec![2, 3], NoiseModel::NM2, 50, 4);
    let (data, _) = simulate(&spec)?;
    let dir = std::env::temp_dir().join(format!("latentgraph-io-{}", std::process::id()));

    write_scores_dir(&dir, &data)?;
    assert_eq!(read_scores_dir(&dir)?, data);

    let params = initialize(&data, spec.r, InitMethod::Cca, &FitConfig::default())?;
    let path = dir.join("params.json");
    write_params(&path, &params)?;
    assert_eq!(read_params(&path)?, params);

    println!("round trip exact in {}", dir.display());
    std::fs::remove_dir_all(&dir).ok();
    Ok(())
}
