//! Trace an ROC curve by sweeping the sparsity level over a few replicates.

use latentgraph::init::InitMethod;
use latentgraph::model::FitConfig;
use latentgraph::sweep::{replicate_auc, run_sweep, SweepPlan, Vary};
use latentgraph::synth::{GraphKind, NoiseModel, SyntheticSpec};

fn main() -> latentgraph::Result<()> {
    let plan = SweepPlan {
        spec: SyntheticSpec::new(GraphKind::G3, 10, 2, vec![3, 3], NoiseModel::NM1 { sigma: 0.05 }, 300, 0),
        config: FitConfig { max_iter_main: 100, max_iter_init: 200, ..FitConfig::default() },
        vary: "s=1..9".parse::<Vary>()?,
        replicates: 2,
        init: InitMethod::Cca,
        k: None,
    };
    let rows = run_sweep(&plan)?;
    println!("  s  rep   TPR    FPR");
    for r in &rows {
        println!("{:3} {:4} {:6.3} {:6.3}", r.value, r.replicate, r.tpr, r.fpr);
    }
    for (rep, auc, auc15) in replicate_auc(&rows) {
        println!("replicate {rep}: AUC {auc:.3}, AUC15 {auc15:.3}");
    }
    Ok(())
}
