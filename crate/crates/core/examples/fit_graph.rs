//! Fit the model end to end and compare the recovered graph with the truth.

use latentgraph::graph_eval::{confusion, select_edges};
use latentgraph::init::InitMethod;
use latentgraph::model::FitConfig;
use latentgraph::solver::{distance_metric, estimate};
use latentgraph::synth::{simulate, GraphKind, NoiseModel, SyntheticSpec};

fn main() -> latentgraph::Result<()> {
    let spec = SyntheticSpec::new(GraphKind::G1, 10, 2, vec![3, 3], NoiseModel::NM1 { sigma: 0.05 }, 500, 1);
    let (data, truth) = simulate(&spec)?;

    let cfg = FitConfig { s: 4, max_iter_main: 1000, ..FitConfig::default() };
    let (params, trace) = estimate(&data, spec.r, InitMethod::Cca, &cfg)?;
    println!(
        "objective {:.4} -> {:.4} in {} sweeps (converged: {})",
        trace.initial_objective,
        trace.final_objective(),
        trace.iterations(),
        trace.converged
    );

    let est = select_edges(&params, cfg.eps0, cfg.edge_rule);
    let (tpr, fpr) = confusion(&est, &truth.edges)?;
    println!("TPR {tpr:.3}  FPR {fpr:.3}");

    let (dmax, dsum) = distance_metric(&params, &truth.params()?)?;
    println!("distance to truth: max {dmax:.4}, sum {dsum:.4}");
    Ok(())
}
