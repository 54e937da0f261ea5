//! Seed sweep over every experiment: prints the headline metric per seed.
//! Handy for eyeballing how robust each scenario is.

use std::collections::BTreeMap;

use physarum::{run_experiment, ExperimentSpec, ReportOptions};
use physarum_core::environment::SceneLimits;

fn spec(name: &str, seed: u64, out: std::path::PathBuf) -> ExperimentSpec {
    ExperimentSpec {
        name: name.to_string(),
        scene: None,
        seed,
        output_dir: out,
        ticks: None,
        report_only: true,
        options: ReportOptions::default(),
        limits: SceneLimits::default(),
    }
}

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let which = args.get(1).map(|s| s.as_str()).unwrap_or("all");
    let seeds: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(10);
    let tmp = std::env::temp_dir().join("physarum-sweep");

    let all = [
        "voronoi",
        "delaunay",
        "spanning_tree",
        "continuation",
        "maze",
        "substrate_shape",
        "phase_space",
    ];
    for name in all {
        if which != "all" && which != name {
            continue;
        }
        let mut met = 0usize;
        for seed in 0..seeds {
            let out = tmp.join(format!("{name}-{seed}"));
            let t0 = std::time::Instant::now();
            let report = run_experiment(&spec(name, seed, out))?;
            let secs = t0.elapsed().as_secs_f64();
            let c = &report.comparison;
            let mut extra: BTreeMap<&str, String> = BTreeMap::new();
            if let Some(v) = c.bisector_coverage {
                extra.insert("coverage", format!("{v:.3}"));
            }
            if let Some(v) = c.edge_precision {
                extra.insert("precision", format!("{v:.3}"));
            }
            if let Some(v) = c.edge_recall {
                extra.insert("recall", format!("{v:.3}"));
            }
            if let Some(v) = c.tree_length_ratio {
                extra.insert("tree_ratio", format!("{v:.3}"));
            }
            if let Some(v) = c.path_ratio {
                extra.insert("path_ratio", format!("{v:.3}"));
            }
            if let Some(v) = c.self_avoidance_index {
                extra.insert("avoid", format!("{v:.3}"));
            }
            for (k, v) in &report.details {
                extra.insert(k, format!("{v:?}").chars().take(40).collect());
            }
            met += report.thresholds_met as usize;
            println!(
                "{name:<16} seed {seed:<2} {}ticks {:<6} {:.1}s {:?}",
                if report.thresholds_met { "PASS " } else { "FAIL " },
                report.ticks,
                secs,
                extra
            );
        }
        println!("== {name}: {met}/{seeds} pass\n");
    }
    Ok(())
}
