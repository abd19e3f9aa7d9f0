//! Estimation error against sample size, next to the theoretical rate.

use latentgraph::init::InitMethod;
use latentgraph::model::FitConfig;
use latentgraph::sweep::{pearson, run_sweep, statistical_rate, SweepPlan, Vary};
use latentgraph::synth::{GraphKind, NoiseModel, SyntheticSpec};

fn main() -> latentgraph::Result<()> {
    let mut spec = SyntheticSpec::new(GraphKind::G1, 10, 2, vec![2, 2], NoiseModel::NM1 { sigma: 0.05 }, 200, 0);
    spec.offdiag_scale = 0.5;
    let sizes = vec![200, 400, 800, 1600];
    let plan = SweepPlan {
        spec: spec.clone(),
        config: FitConfig { s: 2, max_iter_main: 200, ..FitConfig::default() },
        vary: Vary::N(sizes.clone()),
        replicates: 3,
        init: InitMethod::Cca,
        k: None,
    };
    let rows = run_sweep(&plan)?;

    let (mut dist, mut rate) = (Vec::new(), Vec::new());
    for &n in &sizes {
        let d: Vec<f64> = rows.iter().filter(|r| r.value == n && r.status == "ok").map(|r| r.dist_max).collect();
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        let rt = statistical_rate(spec.r, &spec.r_m, spec.p, n);
        println!("N = {n:5}: mean distance {mean:.4}, rate {rt:.4}");
        dist.push(mean);
        rate.push(rt);
    }
    println!("Pearson correlation: {:.3}", pearson(&dist, &rate));
    Ok(())
}
