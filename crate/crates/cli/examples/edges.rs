//! Dump the live edges of a run for inspection.

use physarum::{run_experiment, ExperimentSpec, ReportOptions};
use physarum_core::environment::SceneLimits;

fn main() -> anyhow::Result<()> {
    let args: Vec<String> = std::env::args().collect();
    let name = args.get(1).cloned().unwrap_or("spanning_tree".into());
    let seed: u64 = args.get(2).and_then(|s| s.parse().ok()).unwrap_or(0);
    let out = std::env::temp_dir().join(format!("physarum-edges-{name}-{seed}"));
    let spec = ExperimentSpec {
        name: name.clone(),
        scene: None,
        seed,
        output_dir: out.clone(),
        ticks: None,
        report_only: true,
        options: ReportOptions::default(),
        limits: SceneLimits::default(),
    };
    let report = run_experiment(&spec)?;
    println!("ratio {:?} ticks {}", report.comparison.tree_length_ratio, report.ticks);

    // Re-run through the library to keep the graph in memory.
    let doc = physarum::scenes::default_scene(&name, seed).unwrap();
    let scene = doc.into_scene(None, &SceneLimits::default()).map_err(|e| anyhow::anyhow!("{e}"))?;
    let mut state = physarum_core::engine::init_plasmodium(&scene);
    let mut fields = physarum_core::engine::Fields::zeroed(&scene);
    physarum_core::engine::warm_fields(&mut state, &mut fields, &scene, 3000);
    physarum_core::engine::run_until(
        &mut state, &mut fields, &scene,
        physarum_core::engine::StopCondition::AllSourcesColonized { max_ticks: 12000 });
    let g = physarum_core::engine::extract_graph(&state, 1.0)?;
    let mut live: Vec<_> = g.edges.iter().filter(|e| !e.abandoned).collect();
    live.sort_by(|a, b| b.length_mm.partial_cmp(&a.length_mm).unwrap());
    for e in live {
        let (a, b) = e.endpoints;
        let pa = g.nodes[a].position;
        let pb = g.nodes[b].position;
        let direct = (((pa.x as f64 - pb.x as f64).powi(2) + (pa.y as f64 - pb.y as f64).powi(2))).sqrt();
        println!(
            "  len {:7.1} direct {:6.1} stretch {:4.1}  {:?}({},{}) -> {:?}({},{})",
            e.length_mm, direct, e.length_mm / direct.max(1.0),
            g.nodes[a].kind, pa.x, pa.y, g.nodes[b].kind, pb.x, pb.y
        );
    }
    Ok(())
}
